use super::plan::FleetPlan;
use super::route::{nearest_site_by_distance, reserve, EvState, Probe};
use crate::instance::{Instance, Node};
use serde::{Deserialize, Serialize};

/// Delivery order used by [`edf_plan_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdfOrder {
    /// Window start, then window end, then id.
    #[default]
    Start,
    /// Window end, then window start, then id.
    Deadline,
}

/// Tries `d` from the current location, then via a charge at the site
/// nearest the EV's last delivery. Returns the state to commit on success.
fn serve_with_optional_charge(inst: &Instance, state: &EvState, d: usize) -> Option<(EvState, Probe)> {
    let need = reserve(inst, state.ev, d, nearest_site_by_distance(inst, Node::Delivery(d)));
    if let Some(p) = state.probe(inst, d, need) {
        return Some((state.clone(), p));
    }
    let site = nearest_site_by_distance(inst, state.last())?;
    let mut charged = state.clone();
    if !charged.charge(inst, site) {
        return None;
    }
    charged.probe(inst, d, need).map(|p| (charged, p))
}

/// Earliest-window-first baseline with start-time ordering.
pub fn edf_plan(inst: &Instance) -> FleetPlan {
    edf_plan_with(inst, EdfOrder::Start)
}

/// Deliveries in window order, each to the first EV (fleet order) able to
/// serve it, charging at the nearest site first if the battery is short.
pub fn edf_plan_with(inst: &Instance, order: EdfOrder) -> FleetPlan {
    let ds = inst.deliveries();
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&ds[a], &ds[b]);
        let key = match order {
            EdfOrder::Start => x
                .window_start
                .total_cmp(&y.window_start)
                .then(x.window_end.total_cmp(&y.window_end)),
            EdfOrder::Deadline => x
                .window_end
                .total_cmp(&y.window_end)
                .then(x.window_start.total_cmp(&y.window_start)),
        };
        key.then(x.id.cmp(&y.id))
    });

    let mut evs: Vec<EvState> = (0..inst.evs().len()).map(|j| EvState::new(inst, j)).collect();
    for d in idx {
        for state in evs.iter_mut() {
            if let Some((mut next, p)) = serve_with_optional_charge(inst, state, d) {
                next.commit(d, p);
                *state = next;
                break;
            }
        }
    }
    FleetPlan::from_node_routes(inst, evs.into_iter().map(EvState::finish).collect())
}

/// Nearest-delivery-first baseline. EVs are routed one after another; each
/// repeatedly takes the nearest unserved delivery it can serve from its
/// current location (first leg: nearest to the depot), charging at the
/// nearest site when nothing is directly reachable.
pub fn ndf_plan(inst: &Instance) -> FleetPlan {
    let n = inst.deliveries().len();
    let mut served = vec![false; n];
    let mut routes = Vec::with_capacity(inst.evs().len());
    let home_site: Vec<_> = (0..n)
        .map(|d| nearest_site_by_distance(inst, Node::Delivery(d)))
        .collect();

    for ev in 0..inst.evs().len() {
        let mut state = EvState::new(inst, ev);
        loop {
            if let Some((d, p)) = nearest_feasible(inst, &state, &served, &home_site) {
                state.commit(d, p);
                served[d] = true;
                continue;
            }
            let Some(site) = nearest_site_by_distance(inst, state.last()) else {
                break;
            };
            let mut charged = state.clone();
            if !charged.charge(inst, site) {
                break;
            }
            match nearest_feasible(inst, &charged, &served, &home_site) {
                Some((d, p)) => {
                    charged.commit(d, p);
                    served[d] = true;
                    state = charged;
                }
                None => break,
            }
        }
        routes.push(state.finish());
    }
    FleetPlan::from_node_routes(inst, routes)
}

fn nearest_feasible(
    inst: &Instance,
    state: &EvState,
    served: &[bool],
    home_site: &[Option<crate::instance::ChargeSite>],
) -> Option<(usize, Probe)> {
    let from = state.last();
    let mut best: Option<(f64, u32, usize, Probe)> = None;
    for d in (0..served.len()).filter(|&d| !served[d]) {
        let dist = inst.distance(from, Node::Delivery(d));
        let id = inst.deliveries()[d].id;
        if best.is_some_and(|(bd, bid, _, _)| (dist, id) >= (bd, bid)) {
            continue;
        }
        if let Some(p) = state.probe(inst, d, reserve(inst, state.ev, d, home_site[d])) {
            best = Some((dist, id, d, p));
        }
    }
    best.map(|(_, _, d, p)| (d, p))
}
