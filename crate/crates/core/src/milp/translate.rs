use super::build::*;
use super::model::{Assignment, MilpError};
use crate::heuristics::{FleetPlan, StopKind};
use crate::instance::{ChargeSite, Instance, Node};
use std::collections::HashSet;

struct Subtrip {
    start: ModelNode,
    /// (delivery, arrival, departure)
    visits: Vec<(usize, f64, f64)>,
    end: ModelNode,
    /// Arrival at the closing charging site.
    end_arrival: f64,
    /// Departure from the opening charging site.
    start_departure: f64,
}

fn split(inst: &Instance, plan: &FleetPlan, ev: usize) -> Result<Vec<Subtrip>, MilpError> {
    let route = plan
        .routes
        .iter()
        .find(|r| r.ev == ev)
        .ok_or_else(|| MilpError::NotRepresentable(format!("no route for EV index {ev}")))?;
    let stops = &route.stops;
    let n = stops.len();
    if n < 2 || stops[0].node != Node::Depot || stops[n - 1].node != Node::Depot {
        return Err(MilpError::NotRepresentable(
            "route must start and end at the depot".into(),
        ));
    }
    let mut out = Vec::new();
    if n == 2 {
        return Ok(out);
    }
    let mut cur = Subtrip {
        start: ModelNode::Origin,
        visits: Vec::new(),
        end: ModelNode::Origin,
        end_arrival: 0.0,
        start_departure: stops[0].departure,
    };
    for (pos, s) in stops.iter().enumerate().take(n - 1).skip(1) {
        match (s.kind, s.node) {
            (StopKind::Delivery, Node::Delivery(i)) => cur.visits.push((i, s.arrival, s.departure)),
            (StopKind::Charge, node) => {
                let site = match node {
                    Node::Cp(k) => ChargeSite::Cp(k),
                    Node::Depot if inst.params().depot_midday_charging => ChargeSite::Depot,
                    _ => {
                        return Err(MilpError::NotRepresentable(format!(
                            "stop {pos}: {node:?} is not a charging site"
                        )))
                    }
                };
                if cur.visits.is_empty() || stops[pos + 1].kind != StopKind::Delivery {
                    return Err(MilpError::NotRepresentable(format!(
                        "stop {pos}: a charge must sit between two deliveries"
                    )));
                }
                let start = ModelNode::Site(site);
                let next = Subtrip {
                    start,
                    visits: Vec::new(),
                    end: ModelNode::Origin,
                    end_arrival: 0.0,
                    start_departure: s.departure,
                };
                let mut done = std::mem::replace(&mut cur, next);
                done.end = start;
                done.end_arrival = s.arrival;
                out.push(done);
            }
            (kind, node) => {
                return Err(MilpError::NotRepresentable(format!("stop {pos}: {kind:?} at {node:?}")));
            }
        }
    }
    cur.end_arrival = stops[n - 1].arrival;
    out.push(cur);
    Ok(out)
}

/// Values of every model variable that reproduce `plan`.
///
/// Routes are cut into subtrips at charge stops. Unvisited deliveries get
/// the earliest admissible times; unused charging sites get the times their
/// rows imply with nothing charged beyond the previous subtrip's energy.
pub fn plan_to_assignment(inst: &Instance, plan: &FleetPlan, l_max: usize) -> Result<Assignment, MilpError> {
    if l_max == 0 {
        return Err(MilpError::ZeroLmax);
    }
    let lay = Layout::new(inst, l_max);
    let nd = lay.n_deliveries;
    let mut a = Assignment::default();

    for j in 1..=lay.n_evs {
        for l in 1..=l_max {
            for (x, y) in lay.arcs(l) {
                a.set(chi_name(x, y, j, l), 0.0);
            }
            a.set(z_name(j, l), 0.0);
            for x in 0..nd {
                a.set(u_name(x, j, l), 2.0);
            }
            a.set(beta_name(j, l), 0.0);
        }
    }
    for (y, d) in inst.deliveries().iter().enumerate() {
        a.set(tarr_name(y), d.window_start);
        a.set(tdep_name(y), d.window_start + inst.unload_time());
    }

    let mut seen = HashSet::new();
    let mut that_arr_set = HashSet::new();
    let mut that_dep_set = HashSet::new();
    for ev in 0..lay.n_evs {
        let j = ev + 1;
        let subtrips = split(inst, plan, ev)?;
        if subtrips.len() > l_max {
            return Err(MilpError::TooManySubtrips {
                ev_id: inst.evs()[ev].id,
                needed: subtrips.len(),
                l_max,
            });
        }
        a.set(that_dep_name(ModelNode::Origin, j, 1), 0.0);
        for (li, st) in subtrips.iter().enumerate() {
            let l = li + 1;
            a.set(z_name(j, l), 1.0);
            let mut prev = st.start;
            let mut beta = 0.0;
            for (order, &(d, arr, dep)) in st.visits.iter().enumerate() {
                if !seen.insert(d) {
                    return Err(MilpError::DeliveryRepeated(inst.deliveries()[d].id));
                }
                let node = ModelNode::Del(d);
                a.set(chi_name(prev, node, j, l), 1.0);
                beta += inst.psi(ev, prev.node(), node.node());
                a.set(u_name(d, j, l), 2.0 + order as f64);
                a.set(tarr_name(d), arr);
                a.set(tdep_name(d), dep);
                prev = node;
            }
            a.set(chi_name(prev, st.end, j, l), 1.0);
            beta += inst.psi(ev, prev.node(), st.end.node());
            a.set(beta_name(j, l), beta);
            if let ModelNode::Site(_) = st.start {
                a.set(that_dep_name(st.start, j, l), st.start_departure);
                that_dep_set.insert((st.start, j, l));
            }
            if let ModelNode::Site(_) = st.end {
                a.set(that_arr_name(st.end, j, l), st.end_arrival);
                that_arr_set.insert((st.end, j, l));
            }
        }
        for l in 1..=l_max {
            for (&site, c) in lay.sites.iter().zip(lay.site_nodes()) {
                if !that_arr_set.contains(&(c, j, l)) {
                    a.set(that_arr_name(c, j, l), 0.0);
                }
                if !that_dep_set.contains(&(c, j, l)) {
                    let v = if l == 1 {
                        0.0
                    } else {
                        let prev_arr = a.get(&that_arr_name(c, j, l - 1)).unwrap_or(0.0);
                        let beta = a.get(&beta_name(j, l - 1)).unwrap_or(0.0);
                        prev_arr + inst.charge_duration(ev, site, beta)
                    };
                    a.set(that_dep_name(c, j, l), v);
                }
            }
        }
    }

    for j in 1..=lay.n_evs {
        for l in 1..=l_max {
            let beta = a.get(&beta_name(j, l)).unwrap_or(0.0);
            for (x, y) in lay.arcs(l) {
                let chi = a.get(&chi_name(x, y, j, l)).unwrap_or(0.0);
                match (x, y) {
                    (ModelNode::Del(xi), ModelNode::Del(_) | ModelNode::Site(_)) => {
                        let t = a.get(&tdep_name(xi)).unwrap_or(0.0);
                        a.set(omega_name(x, y, j, l), chi * t);
                    }
                    (ModelNode::Site(_) | ModelNode::Origin, ModelNode::Del(_)) => {
                        let t = a.get(&that_dep_name(x, j, l)).unwrap_or(0.0);
                        a.set(omhat_name(x, y, j, l), chi * t);
                    }
                    _ => {}
                }
                if matches!(x, ModelNode::Del(_)) && !matches!(y, ModelNode::Del(_)) {
                    a.set(lam_name(x, y, j, l), chi * beta);
                }
            }
        }
    }
    Ok(a)
}

/// Smallest `l_max` under which `plan` is representable.
pub fn required_l_max(plan: &FleetPlan) -> usize {
    plan.routes
        .iter()
        .map(|r| if r.stops.len() <= 2 { 1 } else { r.charge_stops() + 1 })
        .max()
        .unwrap_or(1)
}
