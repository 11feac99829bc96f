use super::build::build_model;
use super::check::{check_solution, DEFAULT_TOL};
use super::model::{Alphas, Assignment, CheckReport, MilpError, MilpModel};
use super::translate::plan_to_assignment;
use crate::heuristics::FleetPlan;
use crate::instance::{ChargeSite, Instance, Node};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnumerationConfig {
    pub max_deliveries: usize,
    pub max_evs: usize,
    pub max_cps: usize,
    /// Defaults to [`Alphas::default_for`].
    pub alphas: Option<Alphas>,
    /// Subtrips per EV in the returned model; defaults to |D| (enough for
    /// any plan).
    pub l_max: Option<usize>,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            max_deliveries: 6,
            max_evs: 2,
            max_cps: 3,
            alphas: None,
            l_max: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub plan: FleetPlan,
    pub model: MilpModel,
    pub assignment: Assignment,
    pub report: CheckReport,
}

/// Cheapest route found so far for one served set.
#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    route: Vec<Node>,
}

struct Search<'a> {
    inst: &'a Instance,
    ev: usize,
    sites: Vec<ChargeSite>,
    best: Vec<Option<Best>>,
    path: Vec<Node>,
}

impl Search<'_> {
    fn offer(&mut self, mask: usize, cost: f64, route: Vec<Node>) {
        let slot = &mut self.best[mask];
        let better = match slot {
            None => true,
            Some(b) => cost < b.cost - 1e-12 || ((cost - b.cost).abs() <= 1e-12 && route < b.route),
        };
        if better {
            *slot = Some(Best { cost, route });
        }
    }

    /// Extends the path from a delivery (or the depot start), where the EV
    /// departs at `time` with `energy` left.
    fn extend(&mut self, mask: usize, time: f64, energy: f64, cost: f64, at_charge: bool) {
        let inst = self.inst;
        let ev = self.ev;
        let cap = inst.battery_capacity();
        let here = *self.path.last().expect("path starts at depot");

        if !at_charge {
            let home = energy - inst.psi(ev, here, Node::Depot);
            if home >= 0.0 {
                let bill = if here != Node::Depot && inst.params().bill_depot_return {
                    (cap - home) * inst.depot().unit_cost
                } else {
                    0.0
                };
                let mut route = self.path.clone();
                route.push(Node::Depot);
                self.offer(mask, cost + bill, route);
            }
        }

        for d in 0..inst.deliveries().len() {
            if mask & (1 << d) != 0 {
                continue;
            }
            let node = Node::Delivery(d);
            let e = energy - inst.psi(ev, here, node);
            if e < 0.0 {
                continue;
            }
            let del = &inst.deliveries()[d];
            let dep = (time + inst.gamma(ev, here, node)).max(del.window_start) + inst.unload_time();
            if dep > del.window_end {
                continue;
            }
            self.path.push(node);
            self.extend(mask | (1 << d), dep, e, cost, false);
            self.path.pop();
        }

        if !at_charge && here != Node::Depot {
            for k in 0..self.sites.len() {
                let site = self.sites[k];
                let node: Node = site.into();
                let e = energy - inst.psi(ev, here, node);
                if e < 0.0 {
                    continue;
                }
                let arrival = time + inst.gamma(ev, here, node);
                let dep = arrival + inst.charge_duration(ev, site, cap - e);
                let c = cost + (cap - e) * inst.site_unit_cost(site);
                self.path.push(node);
                self.extend(mask, dep, cap, c, true);
                self.path.pop();
            }
        }
    }
}

/// Best route per served-delivery mask for one EV.
fn per_ev_table(inst: &Instance, ev: usize) -> Vec<Option<Best>> {
    let mut s = Search {
        inst,
        ev,
        sites: inst.charge_sites(),
        best: vec![None; 1 << inst.deliveries().len()],
        path: vec![Node::Depot],
    };
    s.extend(0, 0.0, inst.battery_capacity(), 0.0, false);
    s.best
}

/// Exact optimum by exhaustive enumeration of delivery partitions, visit
/// orders and charge-stop insertions, under the same route rules as the
/// planners. Refuses instances beyond `limits`.
pub fn enumerate_optimal(inst: &Instance, limits: &EnumerationConfig) -> Result<OracleResult, MilpError> {
    let (nd, ne, nc) = (inst.deliveries().len(), inst.evs().len(), inst.charge_sites().len());
    if nd > limits.max_deliveries || ne > limits.max_evs || nc > limits.max_cps {
        return Err(MilpError::LimitsExceeded(format!(
            "instance has {nd} deliveries, {ne} EVs, {nc} charging sites; limits are {}, {}, {}",
            limits.max_deliveries, limits.max_evs, limits.max_cps
        )));
    }
    let alphas = limits.alphas.unwrap_or_else(|| Alphas::default_for(inst));
    let tables: Vec<Vec<Option<Best>>> = (0..ne).map(|ev| per_ev_table(inst, ev)).collect();

    let full = (1usize << nd) - 1;
    let mut best: Option<(f64, f64, Vec<Vec<Node>>)> = None;
    let mut consider = |routes: Vec<Vec<Node>>, served: usize, cost: f64| {
        let obj = alphas.alpha1 * served as f64 - alphas.alpha2 * cost;
        let better = match &best {
            None => true,
            Some((bo, bc, br)) => match obj.partial_cmp(bo).unwrap_or(Ordering::Equal) {
                _ if (obj - bo).abs() <= 1e-9 => cost < bc - 1e-12 || ((cost - bc).abs() <= 1e-12 && &routes < br),
                Ordering::Greater => true,
                _ => false,
            },
        };
        if better {
            best = Some((obj, cost, routes));
        }
    };

    // Enumerate one mask per EV, pairwise disjoint.
    fn rec(
        tables: &[Vec<Option<Best>>],
        ev: usize,
        used: usize,
        full: usize,
        acc: &mut Vec<(Vec<Node>, f64)>,
        out: &mut dyn FnMut(Vec<Vec<Node>>, usize, f64),
    ) {
        if ev == tables.len() {
            let routes = acc.iter().map(|(r, _)| r.clone()).collect();
            let cost = acc.iter().map(|(_, c)| c).sum();
            out(routes, used.count_ones() as usize, cost);
            return;
        }
        let free = full & !used;
        // Iterate submasks of `free`, including the empty set.
        let mut sub = free;
        loop {
            if let Some(b) = &tables[ev][sub] {
                acc.push((b.route.clone(), b.cost));
                rec(tables, ev + 1, used | sub, full, acc, out);
                acc.pop();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    rec(&tables, 0, 0, full, &mut Vec::new(), &mut consider);

    let (_, _, routes) = best.expect("the empty plan is always available");
    let plan = FleetPlan::from_node_routes(inst, routes);
    let l_max = limits.l_max.unwrap_or(nd.max(1));
    let model = build_model(inst, l_max, alphas)?;
    let assignment = plan_to_assignment(inst, &plan, l_max)?;
    let report = check_solution(&model, &assignment, DEFAULT_TOL)?;
    Ok(OracleResult {
        plan,
        model,
        assignment,
        report,
    })
}
