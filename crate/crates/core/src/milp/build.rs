use super::model::{Alphas, Constraint, LinExpr, MilpError, MilpModel, Sense, VarKind, Variable};
use crate::instance::{ChargeSite, Instance, Node};
use std::collections::HashMap;

/// A node as it appears in the model: the depot as route origin/terminus,
/// a delivery, or a charging site (the depot itself becomes site `c0` when
/// mid-day depot charging is enabled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelNode {
    Origin,
    Del(usize),
    Site(ChargeSite),
}

impl ModelNode {
    pub fn label(self) -> String {
        match self {
            ModelNode::Origin => "d0".into(),
            ModelNode::Del(i) => format!("d{}", i + 1),
            ModelNode::Site(ChargeSite::Depot) => "c0".into(),
            ModelNode::Site(ChargeSite::Cp(k)) => format!("c{}", k + 1),
        }
    }

    pub fn node(self) -> Node {
        match self {
            ModelNode::Origin => Node::Depot,
            ModelNode::Del(i) => Node::Delivery(i),
            ModelNode::Site(s) => s.into(),
        }
    }
}

// Variable names. `j` and `l` are 1-based.
pub fn chi_name(x: ModelNode, y: ModelNode, j: usize, l: usize) -> String {
    format!("chi_{}_{}_{j}_{l}", x.label(), y.label())
}
pub fn z_name(j: usize, l: usize) -> String {
    format!("z_{j}_{l}")
}
pub fn u_name(x: usize, j: usize, l: usize) -> String {
    format!("u_d{}_{j}_{l}", x + 1)
}
pub fn beta_name(j: usize, l: usize) -> String {
    format!("beta_{j}_{l}")
}
pub fn tarr_name(y: usize) -> String {
    format!("tarr_d{}", y + 1)
}
pub fn tdep_name(y: usize) -> String {
    format!("tdep_d{}", y + 1)
}
pub fn that_arr_name(y: ModelNode, j: usize, l: usize) -> String {
    format!("that_arr_{}_{j}_{l}", y.label())
}
pub fn that_dep_name(y: ModelNode, j: usize, l: usize) -> String {
    format!("that_dep_{}_{j}_{l}", y.label())
}
pub fn omega_name(x: ModelNode, y: ModelNode, j: usize, l: usize) -> String {
    format!("omega_{}_{}_{j}_{l}", x.label(), y.label())
}
pub fn omhat_name(x: ModelNode, y: ModelNode, j: usize, l: usize) -> String {
    format!("omhat_{}_{}_{j}_{l}", x.label(), y.label())
}
pub fn lam_name(x: ModelNode, y: ModelNode, j: usize, l: usize) -> String {
    format!("lam_{}_{}_{j}_{l}", x.label(), y.label())
}

/// Index sets shared by the builder and the plan translator.
#[derive(Debug, Clone)]
pub struct Layout {
    pub n_deliveries: usize,
    pub sites: Vec<ChargeSite>,
    pub n_evs: usize,
    pub l_max: usize,
}

impl Layout {
    pub fn new(inst: &Instance, l_max: usize) -> Self {
        Self {
            n_deliveries: inst.deliveries().len(),
            sites: inst.charge_sites(),
            n_evs: inst.evs().len(),
            l_max,
        }
    }

    pub fn deliveries(&self) -> impl Iterator<Item = ModelNode> + Clone {
        (0..self.n_deliveries).map(ModelNode::Del)
    }

    pub fn site_nodes(&self) -> impl Iterator<Item = ModelNode> + Clone + '_ {
        self.sites.iter().map(|&s| ModelNode::Site(s))
    }

    /// Arcs that exist in subtrip `l`: depot starts only in the first
    /// subtrip, charging-site starts only after it, charging-site ends only
    /// before the last, delivery-to-delivery and returns everywhere.
    pub fn arcs(&self, l: usize) -> Vec<(ModelNode, ModelNode)> {
        let mut out = Vec::new();
        if l == 1 {
            out.extend(self.deliveries().map(|y| (ModelNode::Origin, y)));
        }
        if l >= 2 {
            for c in self.site_nodes() {
                out.extend(self.deliveries().map(|y| (c, y)));
            }
        }
        for x in self.deliveries() {
            out.extend(self.deliveries().filter(|&y| y != x).map(|y| (x, y)));
        }
        if l < self.l_max {
            for x in self.deliveries() {
                out.extend(self.site_nodes().map(|c| (x, c)));
            }
        }
        out.extend(self.deliveries().map(|x| (x, ModelNode::Origin)));
        out
    }
}

/// Default number of subtrips per EV: min(|D|, 1 + ceil(|D|/|E|)), at least 1.
pub fn default_l_max(inst: &Instance) -> usize {
    let d = inst.deliveries().len();
    let e = inst.evs().len();
    d.min(1 + d.div_ceil(e)).max(1)
}

impl Alphas {
    /// α₁ = 1 and α₂ = 1 / (β^f · θ_max · (|D| + 1)). Every subtrip holds a
    /// delivery, so the fleet's charging cost is at most |D| · β^f · θ_max
    /// and the cost term stays below one delivery.
    pub fn default_for(inst: &Instance) -> Self {
        let theta_max = inst
            .charging_points()
            .iter()
            .map(|c| c.unit_cost)
            .fold(inst.depot().unit_cost, f64::max);
        let denom = inst.battery_capacity() * theta_max * (inst.deliveries().len() as f64 + 1.0);
        Self {
            alpha1: 1.0,
            alpha2: if denom > 0.0 { 1.0 / denom } else { 0.0 },
        }
    }
}

/// Time-side Big-M: the horizon, or the longest possible full recharge if
/// that is larger.
pub fn time_big_m(inst: &Instance) -> f64 {
    let cap = inst.battery_capacity();
    let mut m = inst.horizon();
    for ev in 0..inst.evs().len() {
        for site in inst.charge_sites() {
            m = m.max(inst.charge_duration(ev, site, cap));
        }
    }
    m
}

struct Builder {
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
    rows: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, bound_tag: &'static str) -> usize {
        let i = self.vars.len();
        self.index.insert(name.clone(), i);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
            bound_tag,
        });
        i
    }

    fn bin(&mut self, name: String) -> usize {
        self.var(name, VarKind::Binary, 0.0, 1.0, "BIN")
    }

    fn get(&self, name: &str) -> usize {
        self.index[name]
    }

    fn row(&mut self, family: &'static str, idx: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint {
            tag: format!("{family}[{idx}]"),
            family,
            expr: LinExpr::from_terms(terms),
            sense,
            rhs,
        });
    }
}

/// Builds the routing-and-charging model for `inst` with `l_max` subtrips
/// per EV.
///
/// Subtrip `l` of EV `j` is a run of arcs between two charging events: it
/// starts at the depot (`l = 1`) or at the site where subtrip `l-1` ended,
/// and ends at a site or back at the depot. Rows carry their family name
/// (`C1`..`C21`, `LAM` for the cost linearization) and 1-based indices.
pub fn build_model(inst: &Instance, l_max: usize, alphas: Alphas) -> Result<MilpModel, MilpError> {
    if l_max == 0 {
        return Err(MilpError::ZeroLmax);
    }
    if !(alphas.alpha1.is_finite() && alphas.alpha2.is_finite()) {
        return Err(MilpError::NonFinite("alphas".into()));
    }
    let lay = Layout::new(inst, l_max);
    let nd = lay.n_deliveries;
    let cap = inst.battery_capacity();
    let big_m = time_big_m(inst);
    if !big_m.is_finite() {
        return Err(MilpError::NonFinite("horizon".into()));
    }
    let big_m_count = nd as f64;
    let n_mtz = nd as f64 + 1.0;
    let mut b = Builder {
        vars: Vec::new(),
        index: HashMap::new(),
        rows: Vec::new(),
    };
    let evs = 1..=lay.n_evs;
    let subtrips = 1..=l_max;

    // Variables.
    for j in evs.clone() {
        for l in subtrips.clone() {
            for (x, y) in lay.arcs(l) {
                b.bin(chi_name(x, y, j, l));
            }
            b.bin(z_name(j, l));
            for x in 0..nd {
                b.var(u_name(x, j, l), VarKind::Continuous, 2.0, n_mtz, "C12");
            }
            b.var(beta_name(j, l), VarKind::Continuous, 0.0, cap, "C14");
        }
    }
    for y in 0..nd {
        b.var(tarr_name(y), VarKind::Continuous, 0.0, f64::INFINITY, "C20");
        b.var(tdep_name(y), VarKind::Continuous, 0.0, f64::INFINITY, "C20");
    }
    for j in evs.clone() {
        b.var(
            that_dep_name(ModelNode::Origin, j, 1),
            VarKind::Continuous,
            0.0,
            f64::INFINITY,
            "C15",
        );
        for l in subtrips.clone() {
            for c in lay.site_nodes() {
                b.var(that_arr_name(c, j, l), VarKind::Continuous, 0.0, f64::INFINITY, "C19");
                b.var(that_dep_name(c, j, l), VarKind::Continuous, 0.0, f64::INFINITY, "C21");
            }
        }
    }
    for j in evs.clone() {
        for l in subtrips.clone() {
            for (x, y) in lay.arcs(l) {
                match (x, y) {
                    (ModelNode::Del(_), ModelNode::Del(_)) | (ModelNode::Del(_), ModelNode::Site(_)) => {
                        b.var(omega_name(x, y, j, l), VarKind::Continuous, 0.0, f64::INFINITY, "C16");
                    }
                    (ModelNode::Site(_), ModelNode::Del(_)) | (ModelNode::Origin, ModelNode::Del(_)) => {
                        b.var(omhat_name(x, y, j, l), VarKind::Continuous, 0.0, f64::INFINITY, "C17");
                    }
                    _ => {}
                }
                if matches!(
                    (x, y),
                    (ModelNode::Del(_), ModelNode::Site(_)) | (ModelNode::Del(_), ModelNode::Origin)
                ) {
                    b.var(lam_name(x, y, j, l), VarKind::Continuous, 0.0, f64::INFINITY, "LAM");
                }
            }
        }
    }

    let chi = |b: &Builder, x, y, j, l| b.get(&chi_name(x, y, j, l));
    let o = ModelNode::Origin;

    // Flow.
    for j in evs.clone() {
        let starts: Vec<(usize, f64)> = lay.deliveries().map(|y| (chi(&b, o, y, j, 1), 1.0)).collect();
        let returns: Vec<(usize, f64)> = subtrips
            .clone()
            .flat_map(|l| lay.deliveries().map(move |x| (x, l)))
            .map(|(x, l)| (chi(&b, x, o, j, l), 1.0))
            .collect();
        b.row("C1", format!("{j}"), starts.clone(), Sense::Le, 1.0);
        let mut bal = starts.clone();
        bal.extend(returns.iter().map(|&(v, c)| (v, -c)));
        b.row("C2", format!("{j},a"), bal, Sense::Eq, 0.0);
        b.row("C2", format!("{j},b"), returns, Sense::Le, 1.0);
    }
    for family in ["C3", "C10"] {
        for j in evs.clone() {
            for l in 1..l_max {
                for z in lay.site_nodes() {
                    let mut t: Vec<(usize, f64)> = lay.deliveries().map(|x| (chi(&b, x, z, j, l), 1.0)).collect();
                    t.extend(lay.deliveries().map(|x| (chi(&b, z, x, j, l + 1), -1.0)));
                    b.row(family, format!("{j},{l},{}", z.label()), t, Sense::Eq, 0.0);
                }
            }
        }
    }
    for j in evs.clone() {
        for l in subtrips.clone() {
            let arcs = lay.arcs(l);
            for x in lay.deliveries() {
                let mut t = Vec::new();
                for &(a, c) in &arcs {
                    if c == x {
                        t.push((chi(&b, a, c, j, l), 1.0));
                    }
                    if a == x {
                        t.push((chi(&b, a, c, j, l), -1.0));
                    }
                }
                b.row("C4", format!("{j},{l},{}", x.label()), t, Sense::Eq, 0.0);
            }
        }
    }
    for y in lay.deliveries() {
        let mut t = Vec::new();
        for j in evs.clone() {
            for l in subtrips.clone() {
                for (a, c) in lay.arcs(l) {
                    if c == y {
                        t.push((chi(&b, a, c, j, l), 1.0));
                    }
                }
            }
        }
        b.row("C5", y.label(), t, Sense::Le, 1.0);
    }

    // Subtrip structure.
    for j in evs.clone() {
        for l in subtrips.clone() {
            let arcs = lay.arcs(l);
            let z = b.get(&z_name(j, l));
            let starts: Vec<(usize, f64)> = arcs
                .iter()
                .filter(|(a, c)| !matches!(a, ModelNode::Del(_)) && matches!(c, ModelNode::Del(_)))
                .map(|&(a, c)| (chi(&b, a, c, j, l), 1.0))
                .collect();
            let ends: Vec<(usize, f64)> = arcs
                .iter()
                .filter(|(a, c)| matches!(a, ModelNode::Del(_)) && !matches!(c, ModelNode::Del(_)))
                .map(|&(a, c)| (chi(&b, a, c, j, l), 1.0))
                .collect();
            let idx = format!("{j},{l}");
            let mut c6 = starts.clone();
            c6.push((z, -big_m_count));
            b.row("C6", idx.clone(), c6.clone(), Sense::Le, 0.0);
            b.row("C7", idx.clone(), c6, Sense::Ge, -big_m_count);
            let mut c8 = starts;
            c8.push((z, -1.0));
            b.row("C8", idx.clone(), c8, Sense::Eq, 0.0);
            let mut c9 = ends;
            c9.push((z, -1.0));
            b.row("C9", idx, c9, Sense::Eq, 0.0);
        }
    }
    for j in evs.clone() {
        for l in subtrips.clone() {
            for x in 0..nd {
                for y in (0..nd).filter(|&y| y != x) {
                    let t = vec![
                        (b.get(&u_name(x, j, l)), 1.0),
                        (b.get(&u_name(y, j, l)), -1.0),
                        (chi(&b, ModelNode::Del(x), ModelNode::Del(y), j, l), n_mtz),
                    ];
                    b.row(
                        "C11",
                        format!("{j},{l},d{},d{}", x + 1, y + 1),
                        t,
                        Sense::Le,
                        n_mtz - 1.0,
                    );
                }
            }
        }
    }

    // Energy.
    for j in evs.clone() {
        let ev = j - 1;
        for l in subtrips.clone() {
            let mut t = vec![(b.get(&beta_name(j, l)), 1.0)];
            for (x, y) in lay.arcs(l) {
                t.push((chi(&b, x, y, j, l), -inst.psi(ev, x.node(), y.node())));
            }
            b.row("C13", format!("{j},{l}"), t, Sense::Eq, 0.0);
        }
    }

    // Time.
    for j in evs.clone() {
        let ev = j - 1;
        for l in subtrips.clone() {
            for (x, y) in lay.arcs(l) {
                let (family, prod, src) = match (x, y) {
                    (ModelNode::Del(xi), ModelNode::Del(_) | ModelNode::Site(_)) => {
                        ("C16", b.get(&omega_name(x, y, j, l)), b.get(&tdep_name(xi)))
                    }
                    (ModelNode::Site(_) | ModelNode::Origin, ModelNode::Del(_)) => {
                        ("C17", b.get(&omhat_name(x, y, j, l)), b.get(&that_dep_name(x, j, l)))
                    }
                    _ => continue,
                };
                let c = chi(&b, x, y, j, l);
                let idx = format!("{j},{l},{},{}", x.label(), y.label());
                b.row(
                    family,
                    format!("{idx},a"),
                    vec![(prod, 1.0), (src, -1.0)],
                    Sense::Le,
                    0.0,
                );
                b.row(
                    family,
                    format!("{idx},b"),
                    vec![(prod, 1.0), (c, -big_m)],
                    Sense::Le,
                    0.0,
                );
                b.row(
                    family,
                    format!("{idx},c"),
                    vec![(prod, 1.0), (src, -1.0), (c, -big_m)],
                    Sense::Ge,
                    -big_m,
                );
            }
            let arcs = lay.arcs(l);
            for y in lay.deliveries() {
                let Some(yi) = (match y {
                    ModelNode::Del(i) => Some(i),
                    _ => None,
                }) else {
                    continue;
                };
                let mut t = vec![(b.get(&tarr_name(yi)), 1.0)];
                for &(x, c) in arcs.iter().filter(|&&(_, c)| c == y) {
                    let prod = match x {
                        ModelNode::Del(_) => b.get(&omega_name(x, c, j, l)),
                        _ => b.get(&omhat_name(x, c, j, l)),
                    };
                    t.push((prod, -1.0));
                    t.push((chi(&b, x, c, j, l), -inst.gamma(ev, x.node(), c.node())));
                }
                b.row("C18", format!("{j},{l},{}", y.label()), t, Sense::Ge, 0.0);
            }
            if l < l_max {
                for c in lay.site_nodes() {
                    let mut t = vec![(b.get(&that_arr_name(c, j, l)), 1.0)];
                    for x in lay.deliveries() {
                        t.push((b.get(&omega_name(x, c, j, l)), -1.0));
                        t.push((chi(&b, x, c, j, l), -inst.gamma(ev, x.node(), c.node())));
                    }
                    b.row("C19", format!("{j},{l},{}", c.label()), t, Sense::Ge, 0.0);
                }
            }
        }
    }
    for (yi, d) in inst.deliveries().iter().enumerate() {
        let (ta, td) = (b.get(&tarr_name(yi)), b.get(&tdep_name(yi)));
        let g = inst.unload_time();
        let lab = format!("d{}", yi + 1);
        b.row("C20", format!("{lab},a"), vec![(td, 1.0), (ta, -1.0)], Sense::Ge, g);
        b.row(
            "C20",
            format!("{lab},b"),
            vec![(td, 1.0)],
            Sense::Ge,
            d.window_start + g,
        );
        b.row("C20", format!("{lab},c"), vec![(td, 1.0)], Sense::Le, d.window_end);
    }
    for j in evs.clone() {
        let ev = j - 1;
        for l in 2..=l_max {
            for (&site, c) in lay.sites.iter().zip(lay.site_nodes()) {
                let rate = inst.evs()[ev].acceptance_rate.min(inst.site_charge_rate(site));
                let t = vec![
                    (b.get(&that_dep_name(c, j, l)), 1.0),
                    (b.get(&that_arr_name(c, j, l - 1)), -1.0),
                    (b.get(&beta_name(j, l - 1)), -60.0 / rate),
                ];
                b.row(
                    "C21",
                    format!("{j},{l},{}", c.label()),
                    t,
                    Sense::Ge,
                    inst.site_avg_wait(site),
                );
            }
        }
    }

    // Cost linearization and objective.
    let mut objective = Vec::new();
    let mut cost_terms = Vec::new();
    let mut delivery_arcs = Vec::new();
    for j in evs.clone() {
        for l in subtrips.clone() {
            let beta = b.get(&beta_name(j, l));
            for (x, y) in lay.arcs(l) {
                let c = chi(&b, x, y, j, l);
                if matches!(y, ModelNode::Del(_)) {
                    delivery_arcs.push(c);
                    objective.push((c, alphas.alpha1));
                    continue;
                }
                let theta = match y {
                    ModelNode::Site(s) => inst.site_unit_cost(s),
                    ModelNode::Origin if inst.params().bill_depot_return => inst.depot().unit_cost,
                    _ => 0.0,
                };
                let lam = b.get(&lam_name(x, y, j, l));
                let idx = format!("{j},{l},{},{}", x.label(), y.label());
                b.row(
                    "LAM",
                    format!("{idx},a"),
                    vec![(lam, 1.0), (beta, -1.0)],
                    Sense::Le,
                    0.0,
                );
                b.row("LAM", format!("{idx},b"), vec![(lam, 1.0), (c, -cap)], Sense::Le, 0.0);
                b.row(
                    "LAM",
                    format!("{idx},c"),
                    vec![(lam, 1.0), (beta, -1.0), (c, -cap)],
                    Sense::Ge,
                    -cap,
                );
                if theta != 0.0 {
                    cost_terms.push((lam, theta));
                    objective.push((lam, -alphas.alpha2 * theta));
                }
            }
        }
    }

    Ok(MilpModel {
        variables: b.vars,
        constraints: b.rows,
        objective: LinExpr::from_terms(objective),
        big_m,
        big_m_count,
        alphas,
        l_max,
        cost_terms,
        delivery_arcs,
        index: b.index,
    })
}
