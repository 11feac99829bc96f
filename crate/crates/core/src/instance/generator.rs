//! Synthetic city-scale instances: a central depot, uniformly scattered
//! deliveries and charging points, and a heterogeneous EV fleet.

use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Closed interval `[min, max]` for uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }

    fn check(&self, name: &str, positive: bool) -> Result<(), InstanceError> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(InstanceError::Config(format!("{name}: bounds must be finite")));
        }
        if self.min > self.max {
            return Err(InstanceError::Config(format!(
                "{name}: min {} > max {}",
                self.min, self.max
            )));
        }
        if positive && self.min <= 0.0 {
            return Err(InstanceError::Config(format!("{name}: values must be > 0")));
        }
        if !positive && self.min < 0.0 {
            return Err(InstanceError::Config(format!("{name}: values must be >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Haversine reads coordinates as (lon, lat) degrees; Euclidean as miles.
    pub coordinates: MetricMode,
    /// Depot location; nodes are spread uniformly within `half_span` of it.
    pub center: Location,
    pub half_span: f64,
    /// Length of the operating day; windows open no later than
    /// `day_length - window_width`.
    pub day_length_min: f64,
    pub window_width_min: Range,
    pub unload_time_min: f64,
    pub battery_capacity_kwh: f64,
    pub acceptance_rate_kw: Range,
    pub mileage_miles_per_kwh: Range,
    pub avg_speed_miles_per_min: Range,
    pub cp_charge_rate_kw: Range,
    pub cp_unit_cost: Range,
    pub cp_avg_wait_min: Range,
    pub depot_unit_cost: f64,
    pub depot_charge_rate_kw: f64,
    pub bill_depot_return: bool,
    pub depot_midday_charging: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            coordinates: MetricMode::Haversine,
            center: Location::new(116.40, 39.90),
            half_span: 0.25,
            day_length_min: 600.0,
            window_width_min: Range::new(60.0, 240.0),
            unload_time_min: 5.0,
            battery_capacity_kwh: 20.0,
            acceptance_rate_kw: Range::new(50.0, 150.0),
            mileage_miles_per_kwh: Range::new(2.0, 4.0),
            avg_speed_miles_per_min: Range::new(0.4, 0.6),
            cp_charge_rate_kw: Range::new(50.0, 350.0),
            cp_unit_cost: Range::new(0.4, 0.6),
            cp_avg_wait_min: Range::new(0.0, 10.0),
            depot_unit_cost: 0.3,
            depot_charge_rate_kw: 50.0,
            bill_depot_return: true,
            depot_midday_charging: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.coordinates == MetricMode::Explicit {
            return Err(InstanceError::Config(
                "coordinates must be euclidean or haversine".into(),
            ));
        }
        let scalar = |name: &str, v: f64, positive: bool| Range::new(v, v).check(name, positive);
        scalar("half_span", self.half_span, true)?;
        scalar("day_length_min", self.day_length_min, true)?;
        scalar("unload_time_min", self.unload_time_min, false)?;
        scalar("battery_capacity_kwh", self.battery_capacity_kwh, true)?;
        scalar("depot_unit_cost", self.depot_unit_cost, true)?;
        scalar("depot_charge_rate_kw", self.depot_charge_rate_kw, true)?;
        self.window_width_min.check("window_width_min", true)?;
        self.acceptance_rate_kw.check("acceptance_rate_kw", true)?;
        self.mileage_miles_per_kwh.check("mileage_miles_per_kwh", true)?;
        self.avg_speed_miles_per_min.check("avg_speed_miles_per_min", true)?;
        self.cp_charge_rate_kw.check("cp_charge_rate_kw", true)?;
        self.cp_unit_cost.check("cp_unit_cost", true)?;
        self.cp_avg_wait_min.check("cp_avg_wait_min", false)?;
        if self.window_width_min.min < self.unload_time_min {
            return Err(InstanceError::Config(
                "window_width_min must cover the unload time".into(),
            ));
        }
        if self.window_width_min.max > self.day_length_min {
            return Err(InstanceError::Config("window_width_min exceeds the day length".into()));
        }
        if self.depot_unit_cost > self.cp_unit_cost.min {
            return Err(InstanceError::Config(
                "depot_unit_cost must not exceed the cheapest CP cost".into(),
            ));
        }
        Ok(())
    }

    fn distance(&self, a: &Location, b: &Location) -> f64 {
        match self.coordinates {
            MetricMode::Haversine => a.haversine(b),
            _ => a.euclidean(b),
        }
    }

    fn point(&self, rng: &mut ChaCha8Rng) -> Location {
        Location::new(
            self.center.x + rng.gen_range(-self.half_span..=self.half_span),
            self.center.y + rng.gen_range(-self.half_span..=self.half_span),
        )
    }
}

const STREAM_EVS: u64 = 1;
const STREAM_CPS: u64 = 2;
const STREAM_DELIVERIES: u64 = 3;

/// Deterministic synthetic instance. Each entity kind draws from its own
/// random stream, so the first `k` CPs are the same for any `n_cps >= k`, and
/// deliveries do not depend on `n_cps`.
pub fn generate_synthetic(
    seed: u64,
    n_deliveries: usize,
    n_cps: usize,
    n_evs: usize,
    config: &GeneratorConfig,
) -> Result<Instance, InstanceError> {
    if n_deliveries == 0 || n_evs == 0 {
        return Err(InstanceError::Config("deliveries and EVs must be >= 1".into()));
    }
    config.validate()?;
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };

    let mut rng = stream(STREAM_EVS);
    let evs: Vec<ElectricVehicle> = (0..n_evs)
        .map(|j| ElectricVehicle {
            id: j as u32 + 1,
            battery_capacity: config.battery_capacity_kwh,
            acceptance_rate: config.acceptance_rate_kw.sample(&mut rng),
            mileage: config.mileage_miles_per_kwh.sample(&mut rng),
            avg_speed: config.avg_speed_miles_per_min.sample(&mut rng),
        })
        .collect();

    let mut rng = stream(STREAM_CPS);
    let cps: Vec<ChargingPoint> = (0..n_cps)
        .map(|k| ChargingPoint {
            id: k as u32 + 1,
            location: config.point(&mut rng),
            unit_cost: config.cp_unit_cost.sample(&mut rng),
            charge_rate: config.cp_charge_rate_kw.sample(&mut rng),
            avg_wait: config.cp_avg_wait_min.sample(&mut rng),
        })
        .collect();

    let depot = Depot {
        location: config.center,
        unit_cost: config.depot_unit_cost,
        charge_rate: config.depot_charge_rate_kw,
        avg_wait: 0.0,
    };
    let range_of = |e: &ElectricVehicle| e.mileage * config.battery_capacity_kwh;

    let mut rng = stream(STREAM_DELIVERIES);
    let mut deliveries = Vec::with_capacity(n_deliveries);
    for i in 0..n_deliveries {
        // Speed of the fastest EV that can serve the location, directly or
        // through one CP.
        let mut placed = None;
        for _ in 0..1000 {
            let p = config.point(&mut rng);
            let out = config.distance(&depot.location, &p);
            let speed = evs
                .iter()
                .filter(|e| {
                    let range = range_of(e);
                    2.0 * out <= range
                        || cps.iter().any(|c| {
                            config.distance(&depot.location, &c.location) <= range
                                && config.distance(&c.location, &p) + out <= range
                        })
                })
                .map(|e| e.avg_speed)
                .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
            if let Some(speed) = speed {
                placed = Some((p, out / speed));
                break;
            }
        }
        let (location, earliest) = placed.ok_or_else(|| {
            InstanceError::Config("could not place a delivery within battery range of the depot".into())
        })?;
        let width = config.window_width_min.sample(&mut rng);
        let start = rng.gen_range(0.0..=(config.day_length_min - width));
        let end = (start + width).max(start.max(earliest) + config.unload_time_min);
        deliveries.push(Delivery {
            id: i as u32 + 1,
            location,
            window_start: start,
            window_end: end,
        });
    }

    Instance::new(InstanceParts {
        depot,
        deliveries,
        charging_points: cps,
        evs,
        metric: TravelMetric::coordinate(config.coordinates),
        unload_time: config.unload_time_min,
        horizon: None,
        bill_depot_return: config.bill_depot_return,
        depot_midday_charging: config.depot_midday_charging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::default();
        let a = generate_synthetic(7, 5, 5, 1, &cfg).unwrap();
        let b = generate_synthetic(7, 5, 5, 1, &cfg).unwrap();
        assert_eq!(a.deliveries().len(), 5);
        assert_eq!(a.charging_points().len(), 5);
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_synthetic(8, 5, 5, 1, &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cp_prefix_stable_across_counts() {
        let cfg = GeneratorConfig::default();
        let small = generate_synthetic(3, 20, 5, 4, &cfg).unwrap();
        let large = generate_synthetic(3, 20, 50, 4, &cfg).unwrap();
        assert_eq!(small.charging_points(), &large.charging_points()[..5]);
        assert_eq!(small.deliveries(), large.deliveries());
    }

    #[test]
    fn cost_and_rate_ranges() {
        let cfg = GeneratorConfig::default();
        for seed in 0..20 {
            let inst = generate_synthetic(seed, 10, 30, 2, &cfg).unwrap();
            for c in inst.charging_points() {
                assert!((0.4..=0.6).contains(&c.unit_cost));
                assert!((50.0..=350.0).contains(&c.charge_rate));
            }
        }
    }

    #[test]
    fn every_delivery_individually_serviceable() {
        let cfg = GeneratorConfig::default();
        for seed in 0..20 {
            let inst = generate_synthetic(seed, 40, 5, 8, &cfg).unwrap();
            let beta = inst.battery_capacity();
            for (i, d) in inst.deliveries().iter().enumerate() {
                let di = Node::Delivery(i);
                let ok = (0..inst.evs().len()).any(|j| {
                    let t = inst.travel_time(j, Node::Depot, di).unwrap();
                    let on_time = t.max(d.window_start) + inst.unload_time() <= d.window_end + 1e-9;
                    let psi = |a, b| inst.energy_required(j, a, b).unwrap();
                    let direct = psi(Node::Depot, di) + psi(di, Node::Depot) <= beta;
                    let via_cp = (0..inst.charging_points().len()).any(|k| {
                        let c = Node::Cp(k);
                        psi(Node::Depot, c) <= beta && psi(c, di) + psi(di, Node::Depot) <= beta + 1e-9
                    });
                    on_time && (direct || via_cp)
                });
                assert!(ok, "seed {seed} delivery {i}");
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = GeneratorConfig {
            cp_unit_cost: Range::new(0.6, 0.4),
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic(1, 5, 5, 1, &cfg),
            Err(InstanceError::Config(_))
        ));
        let cfg = GeneratorConfig::default();
        assert!(matches!(
            generate_synthetic(1, 0, 5, 1, &cfg),
            Err(InstanceError::Config(_))
        ));
    }
}
