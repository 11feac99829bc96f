//! Problem description: depot, deliveries, charging points, fleet and travel metric.
//!
//! Units are fixed across the crate: minutes, miles, kWh and kW. Charging
//! time converts kW to kWh/min by a factor of 1/60.

mod generator;
mod io;

pub use generator::{generate_synthetic, GeneratorConfig, Range};
pub use io::{load_instance, save_instance, InstanceDoc, InstanceFormat};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// Mean Earth radius in miles.
pub(crate) const EARTH_RADIUS_MILES: f64 = 3958.8;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown EV index {0}")]
    UnknownEv(usize),
    #[error("generator config error: {0}")]
    Config(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> InstanceError {
    InstanceError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn euclidean(&self, other: &Location) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Great-circle distance in miles, reading `x` as longitude and `y` as
    /// latitude in degrees.
    pub fn haversine(&self, other: &Location) -> f64 {
        let (lat1, lat2) = (self.y.to_radians(), other.y.to_radians());
        let dlat = lat2 - lat1;
        let dlon = (other.x - self.x).to_radians();
        let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_MILES * a.sqrt().min(1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub id: u32,
    pub location: Location,
    pub window_start: f64,
    pub window_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingPoint {
    pub id: u32,
    pub location: Location,
    /// $/kWh
    pub unit_cost: f64,
    /// kW
    pub charge_rate: f64,
    /// min
    pub avg_wait: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricVehicle {
    pub id: u32,
    /// kWh
    pub battery_capacity: f64,
    /// kW
    pub acceptance_rate: f64,
    /// miles/kWh
    pub mileage: f64,
    /// miles/min
    pub avg_speed: f64,
}

/// The distribution center. It is also a charging location: EVs leave it
/// fully charged, and the energy of the final leg home is billed at
/// `unit_cost` when [`Params::bill_depot_return`] is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Depot {
    pub location: Location,
    pub unit_cost: f64,
    pub charge_rate: f64,
    pub avg_wait: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    Explicit,
    Euclidean,
    Haversine,
}

/// Node-pair distances and optional explicit travel times.
///
/// Matrix order is: depot, deliveries in file order, charging points in file
/// order. Triangle inequality and symmetry are not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMetric {
    pub mode: MetricMode,
    /// Distances as supplied by the file (only for explicit mode).
    pub explicit_distances: Option<Vec<Vec<f64>>>,
    /// Explicit times; `None` entries fall back to distance / speed.
    pub explicit_times: Option<Vec<Vec<Option<f64>>>>,
    distances: Vec<f64>,
    times: Option<Vec<Option<f64>>>,
    n: usize,
}

impl TravelMetric {
    pub fn coordinate(mode: MetricMode) -> Self {
        Self {
            mode,
            explicit_distances: None,
            explicit_times: None,
            distances: Vec::new(),
            times: None,
            n: 0,
        }
    }

    pub fn explicit(distances: Vec<Vec<f64>>, times: Option<Vec<Vec<Option<f64>>>>) -> Self {
        Self {
            mode: MetricMode::Explicit,
            explicit_distances: Some(distances),
            explicit_times: times,
            distances: Vec::new(),
            times: None,
            n: 0,
        }
    }

    pub fn with_times(mut self, times: Vec<Vec<Option<f64>>>) -> Self {
        self.explicit_times = Some(times);
        self
    }

    fn materialize(&mut self, locations: &[Location]) -> Result<(), InstanceError> {
        let n = locations.len();
        self.n = n;
        self.distances = match (&self.mode, &self.explicit_distances) {
            (MetricMode::Explicit, Some(m)) => {
                check_square(m.len(), m.iter().map(Vec::len), n, "metric.distances_miles")?;
                let mut flat = Vec::with_capacity(n * n);
                for (a, row) in m.iter().enumerate() {
                    for (b, &d) in row.iter().enumerate() {
                        if !d.is_finite() || d < 0.0 {
                            return Err(invalid(
                                format!("metric.distances_miles[{a}][{b}]"),
                                "distance must be finite and >= 0",
                            ));
                        }
                        if a == b && d != 0.0 {
                            return Err(invalid(
                                format!("metric.distances_miles[{a}][{b}]"),
                                "self-distance must be 0",
                            ));
                        }
                        flat.push(d);
                    }
                }
                flat
            }
            (MetricMode::Explicit, None) => {
                return Err(invalid("metric.distances_miles", "explicit mode requires a matrix"))
            }
            (mode, _) => {
                let mut flat = Vec::with_capacity(n * n);
                for a in locations {
                    for b in locations {
                        flat.push(match mode {
                            MetricMode::Haversine => a.haversine(b),
                            _ => a.euclidean(b),
                        });
                    }
                }
                flat
            }
        };
        self.times = match &self.explicit_times {
            Some(m) => {
                check_square(m.len(), m.iter().map(Vec::len), n, "metric.times_min")?;
                let mut flat = Vec::with_capacity(n * n);
                for (a, row) in m.iter().enumerate() {
                    for (b, &t) in row.iter().enumerate() {
                        if let Some(t) = t {
                            if !t.is_finite() || t < 0.0 || (a == b && t != 0.0) {
                                return Err(invalid(
                                    format!("metric.times_min[{a}][{b}]"),
                                    "time must be finite, >= 0, and 0 on the diagonal",
                                ));
                            }
                        }
                        flat.push(t);
                    }
                }
                Some(flat)
            }
            None => None,
        };
        Ok(())
    }

    #[inline]
    pub fn distance_at(&self, a: usize, b: usize) -> f64 {
        self.distances[a * self.n + b]
    }

    #[inline]
    pub fn explicit_time_at(&self, a: usize, b: usize) -> Option<f64> {
        self.times.as_ref().and_then(|t| t[a * self.n + b])
    }
}

fn check_square(rows: usize, cols: impl Iterator<Item = usize>, n: usize, field: &str) -> Result<(), InstanceError> {
    if rows != n {
        return Err(invalid(field, format!("expected {n} rows, found {rows}")));
    }
    for (i, c) in cols.enumerate() {
        if c != n {
            return Err(invalid(
                format!("{field}[{i}]"),
                format!("expected {n} columns, found {c}"),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Γ_un, minutes spent unloading at each delivery.
    pub unload_time: f64,
    /// Latest event time; sizes the time-side Big-M.
    pub horizon: f64,
    /// Bill the energy of the final subtrip at the depot tariff.
    pub bill_depot_return: bool,
    /// Allow the depot to be used as an intermediate charging stop.
    pub depot_midday_charging: bool,
}

/// A physical node of the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Depot,
    Delivery(usize),
    Cp(usize),
}

/// A location where an EV may stop to charge mid-route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChargeSite {
    Depot,
    Cp(usize),
}

impl From<ChargeSite> for Node {
    fn from(site: ChargeSite) -> Self {
        match site {
            ChargeSite::Depot => Node::Depot,
            ChargeSite::Cp(k) => Node::Cp(k),
        }
    }
}

/// Validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    depot: Depot,
    deliveries: Vec<Delivery>,
    charging_points: Vec<ChargingPoint>,
    evs: Vec<ElectricVehicle>,
    metric: TravelMetric,
    params: Params,
}

/// Unvalidated parts of an [`Instance`]. `horizon = None` selects the default
/// horizon: the latest window end plus the longest return leg at the slowest
/// speed.
#[derive(Debug, Clone)]
pub struct InstanceParts {
    pub depot: Depot,
    pub deliveries: Vec<Delivery>,
    pub charging_points: Vec<ChargingPoint>,
    pub evs: Vec<ElectricVehicle>,
    pub metric: TravelMetric,
    pub unload_time: f64,
    pub horizon: Option<f64>,
    pub bill_depot_return: bool,
    pub depot_midday_charging: bool,
}

fn finite(field: impl Into<String>, v: f64) -> Result<(), InstanceError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "value must be finite"))
    }
}

fn positive(field: impl Into<String> + Clone, v: f64) -> Result<(), InstanceError> {
    finite(field.clone(), v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: impl Into<String> + Clone, v: f64) -> Result<(), InstanceError> {
    finite(field.clone(), v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= 0, got {v}")))
    }
}

impl Instance {
    pub fn new(parts: InstanceParts) -> Result<Self, InstanceError> {
        let InstanceParts {
            depot,
            deliveries,
            charging_points,
            evs,
            mut metric,
            unload_time,
            horizon,
            bill_depot_return,
            depot_midday_charging,
        } = parts;

        finite("depot.location.x", depot.location.x)?;
        finite("depot.location.y", depot.location.y)?;
        positive("depot.unit_cost", depot.unit_cost)?;
        positive("depot.charge_rate", depot.charge_rate)?;
        non_negative("depot.avg_wait", depot.avg_wait)?;
        non_negative("params.unload_time", unload_time)?;

        let mut seen = HashSet::new();
        for (i, d) in deliveries.iter().enumerate() {
            let f = |name: &str| format!("deliveries[{i}] (id {}).{name}", d.id);
            if !seen.insert(d.id) {
                return Err(invalid(f("id"), "duplicate delivery id"));
            }
            finite(f("location.x"), d.location.x)?;
            finite(f("location.y"), d.location.y)?;
            non_negative(f("window_start"), d.window_start)?;
            finite(f("window_end"), d.window_end)?;
            if d.window_end < d.window_start + unload_time {
                return Err(invalid(
                    f("window_end"),
                    "window must be at least as long as the unload time",
                ));
            }
        }
        let mut seen = HashSet::new();
        for (k, c) in charging_points.iter().enumerate() {
            let f = |name: &str| format!("charging_points[{k}] (id {}).{name}", c.id);
            if !seen.insert(c.id) {
                return Err(invalid(f("id"), "duplicate charging point id"));
            }
            finite(f("location.x"), c.location.x)?;
            finite(f("location.y"), c.location.y)?;
            positive(f("unit_cost"), c.unit_cost)?;
            positive(f("charge_rate"), c.charge_rate)?;
            non_negative(f("avg_wait"), c.avg_wait)?;
            if depot.unit_cost > c.unit_cost {
                return Err(invalid(
                    "depot.unit_cost",
                    format!(
                        "depot must be the cheapest charging location (CP id {} is cheaper)",
                        c.id
                    ),
                ));
            }
        }
        if evs.is_empty() {
            return Err(invalid("evs", "fleet must contain at least one EV"));
        }
        let mut seen = HashSet::new();
        for (j, e) in evs.iter().enumerate() {
            let f = |name: &str| format!("evs[{j}] (id {}).{name}", e.id);
            if !seen.insert(e.id) {
                return Err(invalid(f("id"), "duplicate EV id"));
            }
            positive(f("battery_capacity"), e.battery_capacity)?;
            positive(f("acceptance_rate"), e.acceptance_rate)?;
            positive(f("mileage"), e.mileage)?;
            positive(f("avg_speed"), e.avg_speed)?;
            if e.battery_capacity != evs[0].battery_capacity {
                return Err(invalid(
                    f("battery_capacity"),
                    "battery capacity must be uniform across the fleet",
                ));
            }
        }

        let mut locations = Vec::with_capacity(1 + deliveries.len() + charging_points.len());
        locations.push(depot.location);
        locations.extend(deliveries.iter().map(|d| d.location));
        locations.extend(charging_points.iter().map(|c| c.location));
        metric.materialize(&locations)?;

        let mut inst = Self {
            depot,
            deliveries,
            charging_points,
            evs,
            metric,
            params: Params {
                unload_time,
                horizon: 0.0,
                bill_depot_return,
                depot_midday_charging,
            },
        };
        let horizon = match horizon {
            Some(h) => {
                positive("params.horizon", h)?;
                h
            }
            None => inst.default_horizon(),
        };
        for (i, d) in inst.deliveries.iter().enumerate() {
            if d.window_end > horizon {
                return Err(invalid(
                    format!("deliveries[{i}] (id {}).window_end", d.id),
                    format!("window ends after the horizon {horizon}"),
                ));
            }
        }
        inst.params.horizon = horizon;
        Ok(inst)
    }

    fn default_horizon(&self) -> f64 {
        let latest = self.deliveries.iter().map(|d| d.window_end).fold(0.0, f64::max);
        let longest_return = (0..self.evs.len())
            .flat_map(|j| {
                self.deliveries
                    .iter()
                    .enumerate()
                    .map(move |(i, _)| (j, Node::Delivery(i)))
            })
            .map(|(j, n)| self.gamma(j, n, Node::Depot))
            .fold(0.0, f64::max);
        (latest + longest_return).max(1.0)
    }

    pub fn depot(&self) -> &Depot {
        &self.depot
    }
    pub fn deliveries(&self) -> &[Delivery] {
        &self.deliveries
    }
    pub fn charging_points(&self) -> &[ChargingPoint] {
        &self.charging_points
    }
    pub fn evs(&self) -> &[ElectricVehicle] {
        &self.evs
    }
    pub fn metric(&self) -> &TravelMetric {
        &self.metric
    }
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// β^f, uniform across the fleet.
    pub fn battery_capacity(&self) -> f64 {
        self.evs[0].battery_capacity
    }

    /// Γ_un
    pub fn unload_time(&self) -> f64 {
        self.params.unload_time
    }

    pub fn horizon(&self) -> f64 {
        self.params.horizon
    }

    pub fn node_count(&self) -> usize {
        1 + self.deliveries.len() + self.charging_points.len()
    }

    #[inline]
    pub fn node_index(&self, node: Node) -> usize {
        match node {
            Node::Depot => 0,
            Node::Delivery(i) => 1 + i,
            Node::Cp(k) => 1 + self.deliveries.len() + k,
        }
    }

    pub fn contains(&self, node: Node) -> bool {
        match node {
            Node::Depot => true,
            Node::Delivery(i) => i < self.deliveries.len(),
            Node::Cp(k) => k < self.charging_points.len(),
        }
    }

    pub fn location(&self, node: Node) -> Location {
        match node {
            Node::Depot => self.depot.location,
            Node::Delivery(i) => self.deliveries[i].location,
            Node::Cp(k) => self.charging_points[k].location,
        }
    }

    /// Charging sites available mid-route: every CP, plus the depot when
    /// mid-day depot charging is enabled.
    pub fn charge_sites(&self) -> Vec<ChargeSite> {
        let mut sites = Vec::with_capacity(self.charging_points.len() + 1);
        if self.params.depot_midday_charging {
            sites.push(ChargeSite::Depot);
        }
        sites.extend((0..self.charging_points.len()).map(ChargeSite::Cp));
        sites
    }

    pub fn site_unit_cost(&self, site: ChargeSite) -> f64 {
        match site {
            ChargeSite::Depot => self.depot.unit_cost,
            ChargeSite::Cp(k) => self.charging_points[k].unit_cost,
        }
    }

    pub fn site_charge_rate(&self, site: ChargeSite) -> f64 {
        match site {
            ChargeSite::Depot => self.depot.charge_rate,
            ChargeSite::Cp(k) => self.charging_points[k].charge_rate,
        }
    }

    pub fn site_avg_wait(&self, site: ChargeSite) -> f64 {
        match site {
            ChargeSite::Depot => self.depot.avg_wait,
            ChargeSite::Cp(k) => self.charging_points[k].avg_wait,
        }
    }

    /// Minutes to refill `energy` kWh at `site` with EV `ev`, including the
    /// site's average wait.
    pub fn charge_duration(&self, ev: usize, site: ChargeSite, energy: f64) -> f64 {
        let rate = self.evs[ev].acceptance_rate.min(self.site_charge_rate(site));
        energy * 60.0 / rate + self.site_avg_wait(site)
    }

    /// δ in miles.
    #[inline]
    pub fn distance(&self, from: Node, to: Node) -> f64 {
        self.metric.distance_at(self.node_index(from), self.node_index(to))
    }

    /// γ in minutes, unchecked.
    #[inline]
    pub(crate) fn gamma(&self, ev: usize, from: Node, to: Node) -> f64 {
        let (a, b) = (self.node_index(from), self.node_index(to));
        match self.metric.explicit_time_at(a, b) {
            Some(t) => t,
            None => self.metric.distance_at(a, b) / self.evs[ev].avg_speed,
        }
    }

    /// Ψ in kWh, unchecked.
    #[inline]
    pub(crate) fn psi(&self, ev: usize, from: Node, to: Node) -> f64 {
        self.distance(from, to) / self.evs[ev].mileage
    }

    fn check_nodes(&self, ev: usize, from: Node, to: Node) -> Result<(), InstanceError> {
        if ev >= self.evs.len() {
            return Err(InstanceError::UnknownEv(ev));
        }
        for n in [from, to] {
            if !self.contains(n) {
                return Err(InstanceError::UnknownNode(format!("{n:?}")));
            }
        }
        Ok(())
    }

    /// Travel time from `from` to `to` for EV `ev` (index into the fleet).
    /// An explicit time matrix entry takes precedence over δ / a_j.
    pub fn travel_time(&self, ev: usize, from: Node, to: Node) -> Result<f64, InstanceError> {
        self.check_nodes(ev, from, to)?;
        Ok(self.gamma(ev, from, to))
    }

    /// Energy in kWh spent by EV `ev` driving from `from` to `to`: δ / m_j.
    pub fn energy_required(&self, ev: usize, from: Node, to: Node) -> Result<f64, InstanceError> {
        self.check_nodes(ev, from, to)?;
        Ok(self.psi(ev, from, to))
    }

    /// Coordinate distance used for clustering (never the explicit matrix,
    /// which need not be symmetric).
    pub fn coordinate_distance(&self, a: &Location, b: &Location) -> f64 {
        match self.metric.mode {
            MetricMode::Haversine => a.haversine(b),
            _ => a.euclidean(b),
        }
    }

    /// Diagonal of the bounding box over every node location.
    pub fn bounding_box_diagonal(&self) -> f64 {
        let locs: Vec<Location> = (0..self.node_count()).map(|i| self.location(self.node_at(i))).collect();
        let (mut lo, mut hi) = (locs[0], locs[0]);
        for l in &locs {
            lo.x = lo.x.min(l.x);
            lo.y = lo.y.min(l.y);
            hi.x = hi.x.max(l.x);
            hi.y = hi.y.max(l.y);
        }
        self.coordinate_distance(&lo, &hi)
    }

    pub fn node_at(&self, index: usize) -> Node {
        let nd = self.deliveries.len();
        match index {
            0 => Node::Depot,
            i if i <= nd => Node::Delivery(i - 1),
            i => Node::Cp(i - 1 - nd),
        }
    }

    pub fn delivery_by_id(&self, id: u32) -> Option<usize> {
        self.deliveries.iter().position(|d| d.id == id)
    }

    pub fn cp_by_id(&self, id: u32) -> Option<usize> {
        self.charging_points.iter().position(|c| c.id == id)
    }

    pub fn ev_by_id(&self, id: u32) -> Option<usize> {
        self.evs.iter().position(|e| e.id == id)
    }

    /// Copy of this instance with different parameters, re-validated.
    pub fn with_params(&self, f: impl FnOnce(&mut InstanceParts)) -> Result<Self, InstanceError> {
        let mut parts = self.to_parts();
        f(&mut parts);
        Self::new(parts)
    }

    pub fn to_parts(&self) -> InstanceParts {
        let mut metric = TravelMetric {
            mode: self.metric.mode,
            explicit_distances: self.metric.explicit_distances.clone(),
            explicit_times: self.metric.explicit_times.clone(),
            distances: Vec::new(),
            times: None,
            n: 0,
        };
        if metric.mode != MetricMode::Explicit {
            metric.explicit_distances = None;
        }
        InstanceParts {
            depot: self.depot.clone(),
            deliveries: self.deliveries.clone(),
            charging_points: self.charging_points.clone(),
            evs: self.evs.clone(),
            metric,
            unload_time: self.params.unload_time,
            horizon: Some(self.params.horizon),
            bill_depot_return: self.params.bill_depot_return,
            depot_midday_charging: self.params.depot_midday_charging,
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Abstract-plane instance builder for unit tests.
    pub struct Builder {
        pub parts: InstanceParts,
    }

    impl Builder {
        pub fn new() -> Self {
            Self {
                parts: InstanceParts {
                    depot: Depot {
                        location: Location::new(0.0, 0.0),
                        unit_cost: 0.3,
                        charge_rate: 50.0,
                        avg_wait: 0.0,
                    },
                    deliveries: Vec::new(),
                    charging_points: Vec::new(),
                    evs: Vec::new(),
                    metric: TravelMetric::coordinate(MetricMode::Euclidean),
                    unload_time: 5.0,
                    horizon: None,
                    bill_depot_return: true,
                    depot_midday_charging: false,
                },
            }
        }

        pub fn delivery(mut self, x: f64, y: f64, start: f64, end: f64) -> Self {
            let id = self.parts.deliveries.len() as u32 + 1;
            self.parts.deliveries.push(Delivery {
                id,
                location: Location::new(x, y),
                window_start: start,
                window_end: end,
            });
            self
        }

        pub fn cp(mut self, x: f64, y: f64, cost: f64, rate: f64, wait: f64) -> Self {
            let id = self.parts.charging_points.len() as u32 + 1;
            self.parts.charging_points.push(ChargingPoint {
                id,
                location: Location::new(x, y),
                unit_cost: cost,
                charge_rate: rate,
                avg_wait: wait,
            });
            self
        }

        pub fn ev(mut self, battery: f64, accept: f64, mileage: f64, speed: f64) -> Self {
            let id = self.parts.evs.len() as u32 + 1;
            self.parts.evs.push(ElectricVehicle {
                id,
                battery_capacity: battery,
                acceptance_rate: accept,
                mileage,
                avg_speed: speed,
            });
            self
        }

        pub fn build(self) -> Instance {
            Instance::new(self.parts).expect("valid test instance")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::Builder;
    use super::*;

    #[test]
    fn travel_time_is_distance_over_speed() {
        let inst = Builder::new()
            .delivery(10.0, 0.0, 0.0, 500.0)
            .ev(100.0, 50.0, 3.0, 0.5)
            .build();
        let t = inst.travel_time(0, Node::Depot, Node::Delivery(0)).unwrap();
        assert!((t - 20.0).abs() < 1e-12);
        assert_eq!(inst.travel_time(0, Node::Delivery(0), Node::Delivery(0)).unwrap(), 0.0);
    }

    #[test]
    fn explicit_time_takes_precedence() {
        let mut b = Builder::new().delivery(10.0, 0.0, 0.0, 500.0).ev(100.0, 50.0, 3.0, 0.5);
        b.parts.metric = TravelMetric::coordinate(MetricMode::Euclidean)
            .with_times(vec![vec![Some(0.0), Some(17.0)], vec![None, Some(0.0)]]);
        let inst = b.build();
        assert_eq!(inst.travel_time(0, Node::Depot, Node::Delivery(0)).unwrap(), 17.0);
        assert!((inst.travel_time(0, Node::Delivery(0), Node::Depot).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn energy_is_distance_over_mileage() {
        let inst = Builder::new()
            .delivery(12.0, 0.0, 0.0, 500.0)
            .delivery(12.9, 0.0, 0.0, 500.0)
            .ev(100.0, 50.0, 3.0, 0.5)
            .build();
        let e = inst.energy_required(0, Node::Depot, Node::Delivery(0)).unwrap();
        assert!((e - 4.0).abs() < 1e-12);
        let e = inst.energy_required(0, Node::Delivery(0), Node::Delivery(1)).unwrap();
        assert!((e - 0.3).abs() < 1e-9);
        assert_eq!(inst.energy_required(0, Node::Depot, Node::Depot).unwrap(), 0.0);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let inst = Builder::new()
            .delivery(1.0, 0.0, 0.0, 500.0)
            .ev(100.0, 50.0, 3.0, 0.5)
            .build();
        assert!(matches!(
            inst.travel_time(0, Node::Depot, Node::Delivery(5)),
            Err(InstanceError::UnknownNode(_))
        ));
        assert!(matches!(
            inst.energy_required(0, Node::Cp(0), Node::Depot),
            Err(InstanceError::UnknownNode(_))
        ));
        assert!(matches!(
            inst.energy_required(3, Node::Depot, Node::Depot),
            Err(InstanceError::UnknownEv(3))
        ));
    }

    #[test]
    fn rejects_zero_cost_cp() {
        let mut b = Builder::new().delivery(1.0, 0.0, 0.0, 500.0).ev(100.0, 50.0, 3.0, 0.5);
        b = b.cp(1.0, 1.0, 0.0, 50.0, 0.0);
        let err = Instance::new(b.parts).unwrap_err();
        assert!(err.to_string().contains("charging_points[0]"), "{err}");
    }

    #[test]
    fn rejects_short_window_and_expensive_depot() {
        let b = Builder::new().delivery(1.0, 0.0, 10.0, 12.0).ev(100.0, 50.0, 3.0, 0.5);
        let err = Instance::new(b.parts).unwrap_err();
        assert!(err.to_string().contains("window_end"), "{err}");

        let b = Builder::new()
            .delivery(1.0, 0.0, 0.0, 100.0)
            .cp(2.0, 2.0, 0.2, 50.0, 0.0)
            .ev(100.0, 50.0, 3.0, 0.5);
        let err = Instance::new(b.parts).unwrap_err();
        assert!(err.to_string().contains("depot.unit_cost"), "{err}");
    }

    #[test]
    fn rejects_mixed_battery_capacity() {
        let b = Builder::new()
            .delivery(1.0, 0.0, 0.0, 100.0)
            .ev(100.0, 50.0, 3.0, 0.5)
            .ev(90.0, 50.0, 3.0, 0.5);
        let err = Instance::new(b.parts).unwrap_err();
        assert!(err.to_string().contains("evs[1]"), "{err}");
    }

    #[test]
    fn default_horizon_covers_latest_return() {
        let inst = Builder::new()
            .delivery(10.0, 0.0, 0.0, 100.0)
            .ev(100.0, 50.0, 3.0, 0.5)
            .ev(100.0, 50.0, 3.0, 0.25)
            .build();
        // 100 + 10 miles at 0.25 miles/min
        assert!((inst.horizon() - 140.0).abs() < 1e-9);
    }

    #[test]
    fn haversine_one_degree_latitude() {
        let a = Location::new(116.4, 39.9);
        let b = Location::new(116.4, 40.9);
        assert!((a.haversine(&b) - 69.09).abs() < 0.05);
    }
}
