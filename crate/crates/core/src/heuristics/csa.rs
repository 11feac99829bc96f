use super::plan::FleetPlan;
use super::route::EvState;
use crate::instance::{ChargeSite, Instance, Node};
use crate::spatial::{cluster_instance, DbscanParams, NormalizedKdTree, SpatialError};

/// Cluster-Sort-Assign.
///
/// Deliveries are clustered by ST-DBSCAN and visited cluster by cluster in
/// deadline order. Each delivery goes to the EV that reaches it with the
/// least energy while departing within the window and keeping enough charge
/// to reach home and the delivery's precomputed charging site. An EV that
/// would be the cheapest but lacks charge is sent to the charging site of its
/// last delivery and skipped for the current delivery.
///
/// `tree` must be built over this instance's charge sites; `None` means the
/// instance has no charge sites.
pub fn csa_plan(
    inst: &Instance,
    params: &DbscanParams,
    tree: Option<&NormalizedKdTree>,
) -> Result<FleetPlan, SpatialError> {
    let n = inst.deliveries().len();
    let cp_for: Vec<Option<ChargeSite>> = match tree {
        Some(t) => inst
            .deliveries()
            .iter()
            .map(|d| Some(t.nearest_cp(d.location).site))
            .collect(),
        None => vec![None; n],
    };
    let groups = cluster_instance(inst, params)?;

    let mut evs: Vec<EvState> = (0..inst.evs().len()).map(|j| EvState::new(inst, j)).collect();
    for g in &groups {
        for &d in &g.members {
            let target = Node::Delivery(d);
            // The reserve distance depends only on the delivery. Dividing the
            // max by mileage equals the max of the quotients, so `need` is
            // bit-identical to the per-EV home and charge-site reserve.
            let reach = cp_for[d].map_or(inst.distance(target, Node::Depot), |s| {
                inst.distance(target, Node::Depot).max(inst.distance(target, s.into()))
            });
            let mut psi_min = f64::INFINITY;
            let mut chosen = None;
            for state in evs.iter_mut() {
                let mileage = inst.evs()[state.ev].mileage;
                let psi = inst.distance(state.last(), target) / mileage;
                if psi >= psi_min {
                    continue;
                }
                let need = reach / mileage;
                if state.energy - psi < need {
                    if let Node::Delivery(last) = state.last() {
                        if let Some(site) = cp_for[last] {
                            state.charge(inst, site);
                        }
                    }
                    continue;
                }
                if let Some(p) = state.probe(inst, d, need) {
                    psi_min = psi;
                    chosen = Some((state.ev, p));
                }
            }
            if let Some((j, p)) = chosen {
                evs[j].commit(d, p);
            }
        }
    }
    Ok(FleetPlan::from_node_routes(
        inst,
        evs.into_iter().map(EvState::finish).collect(),
    ))
}

/// Builds the tree and default clustering parameters, then plans.
pub fn csa_plan_default(inst: &Instance) -> FleetPlan {
    let params = DbscanParams::defaults_for(inst);
    let tree = NormalizedKdTree::from_instance(inst, inst.params().depot_midday_charging).ok();
    csa_plan(inst, &params, tree.as_ref()).expect("default clustering parameters are valid")
}
