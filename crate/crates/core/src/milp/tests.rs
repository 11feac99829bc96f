use super::*;
use crate::heuristics::{csa_plan_default, edf_plan, ndf_plan, simulate_plan, FleetPlan};
use crate::instance::testing::Builder;
use crate::instance::{Instance, Node};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn expected_counts(d: usize, k: usize, e: usize, l: usize) -> BTreeMap<&'static str, usize> {
    let lm1 = l - 1;
    let mut m = BTreeMap::new();
    m.insert("C1", e);
    m.insert("C2", 2 * e);
    m.insert("C3", k * e * lm1);
    m.insert("C4", d * e * l);
    m.insert("C5", d);
    m.insert("C6", e * l);
    m.insert("C7", e * l);
    m.insert("C8", e * l);
    m.insert("C9", e * l);
    m.insert("C10", k * e * lm1);
    m.insert("C11", d * d.saturating_sub(1) * e * l);
    m.insert("C13", e * l);
    m.insert("C16", 3 * (d * d.saturating_sub(1) * e * l + d * k * e * lm1));
    m.insert("C17", 3 * (k * d * e * lm1 + d * e));
    m.insert("C18", d * e * l);
    m.insert("C19", k * e * lm1);
    m.insert("C20", 3 * d);
    m.insert("C21", k * e * lm1);
    m.insert("LAM", 3 * (d * k * e * lm1 + d * e * l));
    m.retain(|_, v| *v > 0);
    m
}

fn sized(d: usize, k: usize, e: usize) -> Instance {
    let mut b = Builder::new();
    for i in 0..d {
        b = b.delivery(1.0 + i as f64, 1.0, 0.0, 500.0);
    }
    for i in 0..k {
        b = b.cp(i as f64, 2.0, 0.5, 50.0, 1.0);
    }
    for _ in 0..e {
        b = b.ev(30.0, 50.0, 2.0, 0.5);
    }
    b.build()
}

fn default_model(inst: &Instance, l: usize) -> MilpModel {
    build_model(inst, l, Alphas::default_for(inst)).unwrap()
}

#[test]
fn counts_small_case() {
    let inst = sized(2, 1, 1);
    let m = default_model(&inst, 2);
    assert_eq!(m.families(), expected_counts(2, 1, 1, 2));
    // Spot values for this case.
    assert_eq!(m.family_count("C11"), 4);
    assert_eq!(m.family_count("C16"), 3 * (4 + 2));
    assert_eq!(m.family_count("LAM"), 3 * (2 + 4));
}

proptest! {
    #[test]
    fn counts_match_closed_form(d in 1usize..5, k in 0usize..3, e in 1usize..3, l in 1usize..4) {
        let inst = sized(d, k, e);
        let m = default_model(&inst, l);
        prop_assert_eq!(m.families(), expected_counts(d, k, e, l));
        let names: std::collections::HashSet<_> = m.variables.iter().map(|v| &v.name).collect();
        prop_assert_eq!(names.len(), m.variables.len());
    }
}

#[test]
fn rows_are_linear_and_merged() {
    let m = default_model(&sized(3, 2, 2), 3);
    for c in &m.constraints {
        let mut seen = std::collections::HashSet::new();
        for &(v, coef) in &c.expr.terms {
            assert!(v < m.variables.len());
            assert!(coef.is_finite() && coef != 0.0);
            assert!(seen.insert(v), "{} repeats a variable", c.tag);
        }
    }
}

#[test]
fn zero_point() {
    let inst = sized(3, 1, 1);
    let m = default_model(&inst, 2);
    let r = check_solution(&m, &Assignment::zeros(&m), DEFAULT_TOL).unwrap();
    assert_eq!(r.objective_value, 0.0);
    assert!(!r.has_family("C1"));
    assert!(!r.has_family("C5"));
    assert!(!r.has_family("C14"));
    assert!(r.has_family("C12"));
}

#[test]
fn missing_variable_named() {
    let m = default_model(&sized(1, 1, 1), 1);
    let mut a = Assignment::zeros(&m);
    a.values.remove("beta_1_1");
    match check_solution(&m, &a, DEFAULT_TOL) {
        Err(MilpError::MissingVariable(n)) => assert_eq!(n, "beta_1_1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_lmax_rejected() {
    let inst = sized(1, 1, 1);
    assert!(matches!(
        build_model(&inst, 0, Alphas::default_for(&inst)),
        Err(MilpError::ZeroLmax)
    ));
}

#[test]
fn empty_plan_translation() {
    let inst = sized(3, 1, 2);
    let m = default_model(&inst, 2);
    let a = plan_to_assignment(&inst, &FleetPlan::empty(&inst), 2).unwrap();
    for v in &m.variables {
        if v.name.starts_with("chi_") || v.name.starts_with("z_") {
            assert_eq!(a.get(&v.name), Some(0.0), "{}", v.name);
        }
    }
    let r = check_solution(&m, &a, DEFAULT_TOL).unwrap();
    assert!(r.feasible, "{:?}", r.violations);
    assert_eq!(r.objective_value, 0.0);
}

#[test]
fn one_arc_route_translation() {
    let inst = sized(1, 1, 1);
    let plan = FleetPlan::from_node_routes(&inst, vec![vec![Node::Depot, Node::Delivery(0), Node::Depot]]);
    let a = plan_to_assignment(&inst, &plan, 1).unwrap();
    assert_eq!(a.get("chi_d0_d1_1_1"), Some(1.0));
    assert_eq!(a.get("chi_d1_d0_1_1"), Some(1.0));
    assert_eq!(a.get("z_1_1"), Some(1.0));
    let m = default_model(&inst, 1);
    let r = check_solution(&m, &a, DEFAULT_TOL).unwrap();
    assert!(r.feasible, "{:?}", r.violations);
    let sim = simulate_plan(&inst, &plan).unwrap();
    assert!((r.objective_value - sim.objective(m.alphas.alpha1, m.alphas.alpha2)).abs() < 1e-9);
    assert!((r.charging_cost - sim.total_cost).abs() < 1e-9);
}

#[test]
fn translation_rejects_bad_plans() {
    let inst = Builder::new()
        .delivery(1.0, 0.0, 0.0, 1000.0)
        .delivery(2.0, 0.0, 0.0, 1000.0)
        .cp(1.0, 1.0, 0.5, 50.0, 0.0)
        .ev(40.0, 50.0, 2.0, 0.5)
        .build();
    let twice = FleetPlan::from_node_routes(
        &inst,
        vec![vec![
            Node::Depot,
            Node::Delivery(0),
            Node::Delivery(1),
            Node::Delivery(0),
            Node::Depot,
        ]],
    );
    assert!(matches!(
        plan_to_assignment(&inst, &twice, 2),
        Err(MilpError::DeliveryRepeated(1))
    ));
    let charged = FleetPlan::from_node_routes(
        &inst,
        vec![vec![
            Node::Depot,
            Node::Delivery(0),
            Node::Cp(0),
            Node::Delivery(1),
            Node::Depot,
        ]],
    );
    assert!(matches!(
        plan_to_assignment(&inst, &charged, 1),
        Err(MilpError::TooManySubtrips {
            needed: 2,
            l_max: 1,
            ..
        })
    ));
    assert!(plan_to_assignment(&inst, &charged, 2).is_ok());
    let tail = FleetPlan::from_node_routes(
        &inst,
        vec![vec![Node::Depot, Node::Delivery(0), Node::Cp(0), Node::Depot]],
    );
    assert!(matches!(
        plan_to_assignment(&inst, &tail, 2),
        Err(MilpError::NotRepresentable(_))
    ));
}

#[test]
fn flipped_arc_breaks_c5_only_for_that_node() {
    let inst = sized(2, 1, 2);
    let plan = FleetPlan::from_node_routes(
        &inst,
        vec![
            vec![Node::Depot, Node::Delivery(0), Node::Depot],
            vec![Node::Depot, Node::Depot],
        ],
    );
    let m = default_model(&inst, 2);
    let mut a = plan_to_assignment(&inst, &plan, 2).unwrap();
    a.set("chi_d0_d1_2_1", 1.0);
    let r = check_solution(&m, &a, DEFAULT_TOL).unwrap();
    let c5: Vec<_> = r
        .violations
        .iter()
        .filter(|v| tag_family(&v.tag) == "C5")
        .map(|v| v.tag.as_str())
        .collect();
    assert_eq!(c5, vec!["C5[d1]"]);
}

#[test]
fn oracle_single_delivery_no_charge() {
    let inst = Builder::new()
        .delivery(3.0, 0.0, 0.0, 100.0)
        .cp(1.0, 0.0, 0.5, 50.0, 0.0)
        .ev(20.0, 50.0, 2.0, 0.5)
        .build();
    let off = inst.with_params(|p| p.bill_depot_return = false).unwrap();
    let r = enumerate_optimal(&off, &EnumerationConfig::default()).unwrap();
    assert_eq!(r.plan.served_count(), 1);
    assert_eq!(r.plan.total_charging_cost, 0.0);
    assert!(r.report.feasible, "{:?}", r.report.violations);
}

#[test]
fn oracle_inserts_forced_charge_between_deliveries() {
    // 10 kWh at 1 mi/kWh; the two-delivery loop is 12 miles.
    let inst = Builder::new()
        .delivery(4.0, 0.0, 0.0, 1000.0)
        .delivery(4.0, 3.0, 0.0, 1000.0)
        .cp(4.0, 1.5, 0.5, 50.0, 1.0)
        .ev(10.0, 50.0, 1.0, 0.5)
        .build();
    let r = enumerate_optimal(&inst, &EnumerationConfig::default()).unwrap();
    assert_eq!(r.plan.served_count(), 2);
    assert_eq!(r.plan.routes[0].charge_stops(), 1);
    assert!(r.report.feasible, "{:?}", r.report.violations);
}

#[test]
fn oracle_cannot_charge_next_to_depot() {
    // Round trip 12 miles on a 10 kWh battery. A charge would have to sit
    // directly after leaving or before reaching the depot, which the route
    // rules exclude, so the delivery stays unserved.
    let inst = Builder::new()
        .delivery(6.0, 0.0, 0.0, 1000.0)
        .cp(3.0, 0.0, 0.5, 50.0, 1.0)
        .ev(10.0, 50.0, 1.0, 0.5)
        .build();
    let r = enumerate_optimal(&inst, &EnumerationConfig::default()).unwrap();
    assert_eq!(r.plan.served_count(), 0);
}

#[test]
fn oracle_limits_enforced() {
    let inst = sized(7, 1, 1);
    assert!(matches!(
        enumerate_optimal(&inst, &EnumerationConfig::default()),
        Err(MilpError::LimitsExceeded(_))
    ));
    let inst = sized(2, 1, 3);
    assert!(matches!(
        enumerate_optimal(&inst, &EnumerationConfig::default()),
        Err(MilpError::LimitsExceeded(_))
    ));
}

#[test]
fn oracle_dominates_heuristics_on_small_instance() {
    let inst = sized(4, 2, 2);
    let r = enumerate_optimal(&inst, &EnumerationConfig::default()).unwrap();
    let al = r.model.alphas;
    for plan in [csa_plan_default(&inst), edf_plan(&inst), ndf_plan(&inst)] {
        assert!(r.report.objective_value >= plan.objective(al.alpha1, al.alpha2) - 1e-6);
    }
}

#[test]
fn lambda_equals_product_in_oracle() {
    let inst = Builder::new()
        .delivery(4.0, 0.0, 0.0, 1000.0)
        .delivery(4.0, 3.0, 0.0, 1000.0)
        .cp(4.0, 1.5, 0.5, 50.0, 1.0)
        .ev(10.0, 50.0, 1.0, 0.5)
        .build();
    let r = enumerate_optimal(&inst, &EnumerationConfig::default()).unwrap();
    for (name, &v) in &r.assignment.values {
        if let Some(rest) = name.strip_prefix("lam_") {
            let parts: Vec<&str> = rest.split('_').collect();
            let chi = r.assignment.get(&format!("chi_{rest}")).unwrap();
            let beta = r.assignment.get(&format!("beta_{}_{}", parts[2], parts[3])).unwrap();
            assert_eq!(v, beta * chi, "{name}");
        }
    }
}

#[test]
fn solution_text_round_trip() {
    let inst = sized(2, 1, 1);
    let m = default_model(&inst, 2);
    let plan = FleetPlan::from_node_routes(
        &inst,
        vec![vec![Node::Depot, Node::Delivery(1), Node::Delivery(0), Node::Depot]],
    );
    let a = plan_to_assignment(&inst, &plan, 2).unwrap();
    let text = format!("# Objective value = 1\n{}", a.to_text(&m));
    assert_eq!(Assignment::from_text(&text).unwrap(), a);
    assert!(Assignment::from_text("x_1 abc").is_err());
}

#[test]
fn export_deterministic_and_handles_no_sites() {
    let inst = sized(2, 0, 1);
    let m = default_model(&inst, 2);
    assert_eq!(m.family_count("C3"), 0);
    assert_eq!(m.family_count("C21"), 0);
    assert_eq!(to_lp(&m), to_lp(&default_model(&inst, 2)));
    assert_eq!(to_mps(&m), to_mps(&default_model(&inst, 2)));
    let lp = to_lp(&m);
    assert!(lp.starts_with("\\") && lp.ends_with("End\n"));
    assert!(lp.lines().all(|l| l.len() <= 200));
}

#[test]
fn big_m_covers_horizon_and_charging() {
    let inst = sized(2, 1, 1);
    let m = default_model(&inst, 2);
    assert!(m.big_m >= inst.horizon());
    assert!(m.big_m >= inst.charge_duration(0, crate::instance::ChargeSite::Cp(0), inst.battery_capacity()));
    assert_eq!(m.big_m_count, 2.0);
}

#[test]
fn default_lmax_formula() {
    assert_eq!(default_l_max(&sized(5, 1, 1)), 5);
    assert_eq!(default_l_max(&sized(5, 1, 2)), 4);
    assert_eq!(default_l_max(&sized(1, 1, 2)), 1);
}
