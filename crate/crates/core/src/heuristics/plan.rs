use super::HeuristicError;
use crate::instance::{ChargeSite, Instance, Node};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopKind {
    Depot,
    Delivery,
    Charge,
}

/// One visit on a route. Times in minutes, energy in kWh, cost in dollars.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub kind: StopKind,
    pub node: Node,
    pub arrival: f64,
    pub departure: f64,
    pub energy_at_departure: f64,
    pub charge_cost: f64,
}

/// Ordered stops of one EV, depot to depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Position of the EV in the fleet.
    pub ev: usize,
    pub stops: Vec<Stop>,
    /// Energy of the final leg home billed at the depot tariff (0 when the
    /// instance disables that billing).
    pub depot_recharge_cost: f64,
}

impl Route {
    pub fn nodes(&self) -> Vec<Node> {
        self.stops.iter().map(|s| s.node).collect()
    }

    /// Departure time from every stop (the schedule).
    pub fn schedule(&self) -> Vec<f64> {
        self.stops.iter().map(|s| s.departure).collect()
    }

    pub fn deliveries(&self) -> impl Iterator<Item = usize> + '_ {
        self.stops.iter().filter_map(|s| match (s.kind, s.node) {
            (StopKind::Delivery, Node::Delivery(i)) => Some(i),
            _ => None,
        })
    }

    pub fn charge_stops(&self) -> usize {
        self.stops.iter().filter(|s| s.kind == StopKind::Charge).count()
    }

    pub fn cost(&self) -> f64 {
        self.stops.iter().map(|s| s.charge_cost).sum::<f64>() + self.depot_recharge_cost
    }
}

/// Routes for every EV (one per fleet member, in fleet order).
#[derive(Debug, Clone, PartialEq)]
pub struct FleetPlan {
    pub routes: Vec<Route>,
    /// Positions of served deliveries.
    pub served: BTreeSet<usize>,
    pub total_charging_cost: f64,
}

/// Kind implied by a node's position in a route.
pub(crate) fn kind_at(node: Node, pos: usize, len: usize) -> StopKind {
    match node {
        Node::Delivery(_) => StopKind::Delivery,
        Node::Cp(_) => StopKind::Charge,
        Node::Depot if pos == 0 || pos + 1 == len => StopKind::Depot,
        Node::Depot => StopKind::Charge,
    }
}

pub(crate) fn site_of(node: Node) -> Option<ChargeSite> {
    match node {
        Node::Depot => Some(ChargeSite::Depot),
        Node::Cp(k) => Some(ChargeSite::Cp(k)),
        Node::Delivery(_) => None,
    }
}

/// Timeline of a node sequence under the shared semantics: EVs leave the
/// depot full at time 0, wait for window starts, unload, and refill to full
/// at charge stops. No feasibility checks.
pub(crate) fn timeline(inst: &Instance, ev: usize, nodes: &[Node]) -> (Vec<Stop>, f64) {
    let cap = inst.battery_capacity();
    let mut stops = Vec::with_capacity(nodes.len());
    let mut time = 0.0;
    let mut energy = cap;
    let mut prev: Option<Node> = None;
    let mut home_cost = 0.0;
    for (pos, &node) in nodes.iter().enumerate() {
        let kind = kind_at(node, pos, nodes.len());
        let arrival = match prev {
            Some(p) => {
                energy -= inst.psi(ev, p, node);
                time + inst.gamma(ev, p, node)
            }
            None => 0.0,
        };
        let (departure, charge_cost) = match kind {
            StopKind::Depot => (arrival, 0.0),
            StopKind::Delivery => {
                let Node::Delivery(i) = node else { unreachable!() };
                let d = &inst.deliveries()[i];
                (arrival.max(d.window_start) + inst.unload_time(), 0.0)
            }
            StopKind::Charge => {
                let site = site_of(node).expect("charge stop at a charging location");
                let need = (cap - energy).max(0.0);
                let dep = arrival + inst.charge_duration(ev, site, need);
                let cost = need * inst.site_unit_cost(site);
                energy = cap;
                (dep, cost)
            }
        };
        if kind == StopKind::Depot && pos > 0 && inst.params().bill_depot_return {
            home_cost = (cap - energy).max(0.0) * inst.depot().unit_cost;
        }
        stops.push(Stop {
            kind,
            node,
            arrival,
            departure,
            energy_at_departure: energy,
            charge_cost,
        });
        time = departure;
        prev = Some(node);
    }
    (stops, home_cost)
}

impl FleetPlan {
    /// Plan where every EV stays at the depot.
    pub fn empty(inst: &Instance) -> Self {
        Self::from_node_routes(inst, vec![vec![Node::Depot, Node::Depot]; inst.evs().len()])
    }

    /// Builds a plan by timing each EV's node sequence. Sequences must start
    /// and end at the depot; missing EVs are not allowed.
    pub fn from_node_routes(inst: &Instance, routes: Vec<Vec<Node>>) -> Self {
        assert_eq!(routes.len(), inst.evs().len(), "one route per EV");
        let routes: Vec<Route> = routes
            .into_iter()
            .enumerate()
            .map(|(ev, nodes)| {
                let (stops, depot_recharge_cost) = timeline(inst, ev, &nodes);
                Route {
                    ev,
                    stops,
                    depot_recharge_cost,
                }
            })
            .collect();
        let served = routes.iter().flat_map(|r| r.deliveries()).collect();
        let total_charging_cost = routes.iter().map(Route::cost).sum();
        Self {
            routes,
            served,
            total_charging_cost,
        }
    }

    pub fn served_count(&self) -> usize {
        self.served.len()
    }

    pub fn unserved(&self, inst: &Instance) -> Vec<usize> {
        (0..inst.deliveries().len())
            .filter(|i| !self.served.contains(i))
            .collect()
    }

    pub fn cost_per_served(&self) -> f64 {
        if self.served.is_empty() {
            0.0
        } else {
            self.total_charging_cost / self.served.len() as f64
        }
    }

    pub fn objective(&self, alpha1: f64, alpha2: f64) -> f64 {
        alpha1 * self.served.len() as f64 - alpha2 * self.total_charging_cost
    }

    /// Sum of leg distances over all routes, in miles.
    pub fn total_distance(&self, inst: &Instance) -> f64 {
        self.routes
            .iter()
            .map(|r| {
                r.stops
                    .windows(2)
                    .map(|w| inst.distance(w[0].node, w[1].node))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn to_doc(&self, inst: &Instance) -> PlanDoc {
        PlanDoc {
            routes: self
                .routes
                .iter()
                .map(|r| RouteDoc {
                    ev_id: inst.evs()[r.ev].id,
                    stops: r
                        .stops
                        .iter()
                        .map(|s| StopDoc {
                            kind: s.kind,
                            id: node_id(inst, s.node),
                            arrival_min: s.arrival,
                            departure_min: s.departure,
                            energy_kwh: s.energy_at_departure,
                            charge_cost_usd: s.charge_cost,
                        })
                        .collect(),
                    depot_recharge_cost_usd: r.depot_recharge_cost,
                })
                .collect(),
            served: self.served.iter().map(|&i| inst.deliveries()[i].id).collect(),
            total_charging_cost_usd: self.total_charging_cost,
        }
    }

    pub fn to_json(&self, inst: &Instance) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc(inst)).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(inst: &Instance, text: &str) -> Result<Self, HeuristicError> {
        let doc: PlanDoc = serde_json::from_str(text).map_err(|e| HeuristicError::Parse(e.to_string()))?;
        doc.into_plan(inst)
    }

    pub fn save(&self, inst: &Instance, path: impl AsRef<Path>) -> Result<(), HeuristicError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json(inst)).map_err(|e| HeuristicError::Io(path.display().to_string(), e))
    }

    pub fn load(inst: &Instance, path: impl AsRef<Path>) -> Result<Self, HeuristicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HeuristicError::Io(path.display().to_string(), e))?;
        Self::from_json(inst, &text)
    }
}

fn node_id(inst: &Instance, node: Node) -> u32 {
    match node {
        Node::Depot => 0,
        Node::Delivery(i) => inst.deliveries()[i].id,
        Node::Cp(k) => inst.charging_points()[k].id,
    }
}

/// Serialized plan. Stops reference deliveries and CPs by id; the depot is
/// id 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub routes: Vec<RouteDoc>,
    pub served: Vec<u32>,
    pub total_charging_cost_usd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub ev_id: u32,
    pub stops: Vec<StopDoc>,
    #[serde(default)]
    pub depot_recharge_cost_usd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopDoc {
    pub kind: StopKind,
    pub id: u32,
    pub arrival_min: f64,
    pub departure_min: f64,
    pub energy_kwh: f64,
    #[serde(default)]
    pub charge_cost_usd: f64,
}

impl PlanDoc {
    pub fn into_plan(self, inst: &Instance) -> Result<FleetPlan, HeuristicError> {
        let mut routes: Vec<Option<Route>> = vec![None; inst.evs().len()];
        for r in self.routes {
            let ev = inst
                .ev_by_id(r.ev_id)
                .ok_or_else(|| HeuristicError::UnknownReference(format!("ev id {}", r.ev_id)))?;
            if routes[ev].is_some() {
                return Err(HeuristicError::UnknownReference(format!(
                    "duplicate route for ev id {}",
                    r.ev_id
                )));
            }
            let stops =
                r.stops
                    .into_iter()
                    .map(|s| {
                        let node = match s.kind {
                            StopKind::Depot => Node::Depot,
                            StopKind::Delivery => Node::Delivery(
                                inst.delivery_by_id(s.id)
                                    .ok_or_else(|| HeuristicError::UnknownReference(format!("delivery id {}", s.id)))?,
                            ),
                            StopKind::Charge if s.id == 0 => Node::Depot,
                            StopKind::Charge => Node::Cp(inst.cp_by_id(s.id).ok_or_else(|| {
                                HeuristicError::UnknownReference(format!("charging point id {}", s.id))
                            })?),
                        };
                        Ok(Stop {
                            kind: s.kind,
                            node,
                            arrival: s.arrival_min,
                            departure: s.departure_min,
                            energy_at_departure: s.energy_kwh,
                            charge_cost: s.charge_cost_usd,
                        })
                    })
                    .collect::<Result<Vec<_>, HeuristicError>>()?;
            routes[ev] = Some(Route {
                ev,
                stops,
                depot_recharge_cost: r.depot_recharge_cost_usd,
            });
        }
        let routes: Vec<Route> = routes
            .into_iter()
            .enumerate()
            .map(|(ev, r)| {
                r.unwrap_or_else(|| {
                    let (stops, _) = timeline(inst, ev, &[Node::Depot, Node::Depot]);
                    Route {
                        ev,
                        stops,
                        depot_recharge_cost: 0.0,
                    }
                })
            })
            .collect();
        let served = self
            .served
            .iter()
            .map(|&id| {
                inst.delivery_by_id(id)
                    .ok_or_else(|| HeuristicError::UnknownReference(format!("delivery id {id}")))
            })
            .collect::<Result<BTreeSet<_>, _>>()?;
        Ok(FleetPlan {
            routes,
            served,
            total_charging_cost: self.total_charging_cost_usd,
        })
    }
}
