use super::plan::{kind_at, timeline, FleetPlan, Stop, StopKind};
use super::HeuristicError;
use crate::instance::{Instance, Node};
use serde::Serialize;
use std::collections::BTreeSet;

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationReason {
    Window,
    Energy,
    Ordering,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanViolation {
    pub ev: usize,
    /// Stop position in the route; `None` for plan-level problems.
    pub stop: Option<usize>,
    pub reason: ViolationReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub feasible: bool,
    pub served_count: usize,
    pub total_cost: f64,
    pub cost_per_served: f64,
    pub violations: Vec<PlanViolation>,
    /// Latest return to the depot over the fleet.
    pub makespan: f64,
    pub total_distance: f64,
    /// Replayed stops per EV.
    pub timeline: Vec<Vec<Stop>>,
}

impl SimulationReport {
    pub fn objective(&self, alpha1: f64, alpha2: f64) -> f64 {
        alpha1 * self.served_count as f64 - alpha2 * self.total_cost
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

/// Replays every route from its node sequence and checks windows, energy,
/// stop ordering, and that the recorded times and costs match the replay.
pub fn simulate_plan(inst: &Instance, plan: &FleetPlan) -> Result<SimulationReport, HeuristicError> {
    let mut violations = Vec::new();
    let mut visited = BTreeSet::new();
    let mut timelines = Vec::with_capacity(plan.routes.len());
    let mut total_cost = 0.0;
    let mut makespan: f64 = 0.0;
    let mut total_distance = 0.0;
    let mut seen_ev = vec![false; inst.evs().len()];
    let cap = inst.battery_capacity();

    for route in &plan.routes {
        let ev = route.ev;
        if ev >= inst.evs().len() {
            return Err(HeuristicError::UnknownReference(format!("ev index {ev}")));
        }
        let mut v = |stop: Option<usize>, reason, detail: String| {
            violations.push(PlanViolation {
                ev,
                stop,
                reason,
                detail,
            })
        };
        if std::mem::replace(&mut seen_ev[ev], true) {
            v(None, ViolationReason::Ordering, "EV has more than one route".into());
        }
        let nodes = route.nodes();
        for &n in &nodes {
            if !inst.contains(n) {
                return Err(HeuristicError::UnknownReference(format!("{n:?}")));
            }
        }
        if nodes.len() < 2 || nodes[0] != Node::Depot || nodes[nodes.len() - 1] != Node::Depot {
            v(
                None,
                ViolationReason::Ordering,
                "route must start and end at the depot".into(),
            );
            timelines.push(Vec::new());
            continue;
        }

        let (replay, home_cost) = timeline(inst, ev, &nodes);
        let len = nodes.len();
        let mut energy = cap;
        for (pos, (s, r)) in route.stops.iter().zip(&replay).enumerate() {
            if s.kind != kind_at(s.node, pos, len) {
                let msg = if s.node == Node::Depot && s.kind == StopKind::Charge {
                    "depot charges only at route ends unless mid-day depot charging is enabled".to_string()
                } else {
                    format!("stop kind {:?} does not match node {:?}", s.kind, s.node)
                };
                v(Some(pos), ViolationReason::Ordering, msg);
            }
            if r.kind == StopKind::Charge && !inst.params().depot_midday_charging && r.node == Node::Depot {
                v(
                    Some(pos),
                    ViolationReason::Ordering,
                    "mid-day depot charging is disabled".into(),
                );
            }
            if pos > 0 {
                energy -= inst.psi(ev, nodes[pos - 1], nodes[pos]);
                total_distance += inst.distance(nodes[pos - 1], nodes[pos]);
                if energy < -TOL {
                    v(
                        Some(pos),
                        ViolationReason::Energy,
                        format!("battery at {energy:.6} kWh on arrival"),
                    );
                }
            }
            if r.kind == StopKind::Charge {
                energy = cap;
                let prev = replay[pos - 1].kind;
                let next = replay.get(pos + 1).map(|x| x.kind);
                if prev == StopKind::Charge {
                    v(Some(pos), ViolationReason::Ordering, "consecutive charge stops".into());
                } else if prev == StopKind::Depot || next == Some(StopKind::Depot) {
                    v(
                        Some(pos),
                        ViolationReason::Ordering,
                        "charge stop adjacent to a depot visit has no delivery in between".into(),
                    );
                }
            }
            if let Node::Delivery(i) = r.node {
                if !visited.insert(i) {
                    v(Some(pos), ViolationReason::Ordering, "delivery visited twice".into());
                }
                let d = &inst.deliveries()[i];
                if r.departure > d.window_end + TOL {
                    v(
                        Some(pos),
                        ViolationReason::Window,
                        format!("departs at {:.3} after window end {:.3}", r.departure, d.window_end),
                    );
                }
            }
            if !(close(s.arrival, r.arrival)
                && close(s.departure, r.departure)
                && close(s.energy_at_departure, r.energy_at_departure)
                && close(s.charge_cost, r.charge_cost))
            {
                v(
                    Some(pos),
                    ViolationReason::Ordering,
                    format!(
                        "recorded schedule differs from replay (arr {:.4}/{:.4}, dep {:.4}/{:.4})",
                        s.arrival, r.arrival, s.departure, r.departure
                    ),
                );
            }
        }
        if route.stops.len() != replay.len() {
            v(None, ViolationReason::Ordering, "stop list length mismatch".into());
        }
        if !close(route.depot_recharge_cost, home_cost) {
            v(
                None,
                ViolationReason::Ordering,
                "recorded depot recharge cost differs from replay".into(),
            );
        }
        total_cost += replay.iter().map(|s| s.charge_cost).sum::<f64>() + home_cost;
        makespan = makespan.max(replay.last().map_or(0.0, |s| s.arrival));
        timelines.push(replay);
    }

    if visited != plan.served {
        violations.push(PlanViolation {
            ev: 0,
            stop: None,
            reason: ViolationReason::Ordering,
            detail: "served set differs from visited deliveries".into(),
        });
    }
    if !close(total_cost, plan.total_charging_cost) {
        violations.push(PlanViolation {
            ev: 0,
            stop: None,
            reason: ViolationReason::Ordering,
            detail: format!(
                "recorded total cost {:.6} differs from replay {:.6}",
                plan.total_charging_cost, total_cost
            ),
        });
    }

    let served_count = visited.len();
    Ok(SimulationReport {
        feasible: violations.is_empty(),
        served_count,
        total_cost,
        cost_per_served: if served_count == 0 {
            0.0
        } else {
            total_cost / served_count as f64
        },
        violations,
        makespan,
        total_distance,
        timeline: timelines,
    })
}
