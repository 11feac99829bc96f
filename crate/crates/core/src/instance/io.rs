//! Instance files.
//!
//! The native format is a single JSON document whose field names carry their
//! units. [`save_instance`] writes it in canonical field order, so a file it
//! produced loads and saves back to identical bytes.
//!
//! The JD-style format is a sectioned CSV text file mirroring the node and
//! edge records of the JD Logistics routing data:
//!
//! ```text
//! [nodes]
//! id,type,lng,lat,demand,first_receive_tm,last_receive_tm,service_time,unit_cost,charge_rate,avg_wait
//! 0,1,116.57,39.71,0,08:00,20:00,0,0.3,50,0
//! 1,2,116.41,39.93,2.5,09:00,11:30,5,,,
//! [edges]
//! from,to,distance,spend_tm
//! 0,1,24300,51
//! [fleet]
//! id,battery_capacity_kwh,acceptance_rate_kw,mileage_miles_per_kwh,avg_speed_miles_per_min
//! 1,40,100,3.0,0.5
//! [params]
//! key,value
//! unload_time_min,5
//! ```
//!
//! Node `type` is `1`/`depot`, `2`/`delivery`, `3`/`pickup` (ignored) or
//! `4`/`charging`. Times are `HH:MM` or minutes, rebased so the depot opens at
//! minute 0. Edge distances are meters; edge times are minutes and are taken
//! as authoritative (speed is not re-applied). Pairs without an edge record
//! fall back to the haversine distance and distance / speed.

use super::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    NativeJson,
    JdStyle,
}

impl std::str::FromStr for InstanceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" | "native-json" | "json" => Ok(Self::NativeJson),
            "jd" | "jd-style" => Ok(Self::JdStyle),
            other => Err(format!("unknown instance format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotDoc {
    pub location: Location,
    pub unit_cost_usd_per_kwh: f64,
    pub charge_rate_kw: f64,
    pub avg_wait_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliveryDoc {
    pub id: u32,
    pub location: Location,
    pub window_start_min: f64,
    pub window_end_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargingPointDoc {
    pub id: u32,
    pub location: Location,
    pub unit_cost_usd_per_kwh: f64,
    pub charge_rate_kw: f64,
    pub avg_wait_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvDoc {
    pub id: u32,
    pub battery_capacity_kwh: f64,
    pub acceptance_rate_kw: f64,
    pub mileage_miles_per_kwh: f64,
    pub avg_speed_miles_per_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDoc {
    pub mode: MetricMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances_miles: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times_min: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub unload_time_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_min: Option<f64>,
    #[serde(default = "default_true")]
    pub bill_depot_return: bool,
    #[serde(default)]
    pub depot_midday_charging: bool,
}

fn default_true() -> bool {
    true
}

/// The native JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub depot: DepotDoc,
    pub deliveries: Vec<DeliveryDoc>,
    pub charging_points: Vec<ChargingPointDoc>,
    pub evs: Vec<EvDoc>,
    pub metric: MetricDoc,
    pub params: ParamsDoc,
}

impl InstanceDoc {
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        let metric = match self.metric.mode {
            MetricMode::Explicit => match self.metric.distances_miles {
                Some(d) => TravelMetric::explicit(d, self.metric.times_min),
                None => {
                    return Err(invalid(
                        "metric.distances_miles",
                        "explicit mode requires a distance matrix",
                    ))
                }
            },
            mode => {
                if self.metric.distances_miles.is_some() {
                    return Err(invalid(
                        "metric.distances_miles",
                        "a distance matrix requires mode \"explicit\"",
                    ));
                }
                let mut m = TravelMetric::coordinate(mode);
                m.explicit_times = self.metric.times_min;
                m
            }
        };
        Instance::new(InstanceParts {
            depot: Depot {
                location: self.depot.location,
                unit_cost: self.depot.unit_cost_usd_per_kwh,
                charge_rate: self.depot.charge_rate_kw,
                avg_wait: self.depot.avg_wait_min,
            },
            deliveries: self
                .deliveries
                .into_iter()
                .map(|d| Delivery {
                    id: d.id,
                    location: d.location,
                    window_start: d.window_start_min,
                    window_end: d.window_end_min,
                })
                .collect(),
            charging_points: self
                .charging_points
                .into_iter()
                .map(|c| ChargingPoint {
                    id: c.id,
                    location: c.location,
                    unit_cost: c.unit_cost_usd_per_kwh,
                    charge_rate: c.charge_rate_kw,
                    avg_wait: c.avg_wait_min,
                })
                .collect(),
            evs: self
                .evs
                .into_iter()
                .map(|e| ElectricVehicle {
                    id: e.id,
                    battery_capacity: e.battery_capacity_kwh,
                    acceptance_rate: e.acceptance_rate_kw,
                    mileage: e.mileage_miles_per_kwh,
                    avg_speed: e.avg_speed_miles_per_min,
                })
                .collect(),
            metric,
            unload_time: self.params.unload_time_min,
            horizon: self.params.horizon_min,
            bill_depot_return: self.params.bill_depot_return,
            depot_midday_charging: self.params.depot_midday_charging,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let m = inst.metric();
        Self {
            depot: DepotDoc {
                location: inst.depot().location,
                unit_cost_usd_per_kwh: inst.depot().unit_cost,
                charge_rate_kw: inst.depot().charge_rate,
                avg_wait_min: inst.depot().avg_wait,
            },
            deliveries: inst
                .deliveries()
                .iter()
                .map(|d| DeliveryDoc {
                    id: d.id,
                    location: d.location,
                    window_start_min: d.window_start,
                    window_end_min: d.window_end,
                })
                .collect(),
            charging_points: inst
                .charging_points()
                .iter()
                .map(|c| ChargingPointDoc {
                    id: c.id,
                    location: c.location,
                    unit_cost_usd_per_kwh: c.unit_cost,
                    charge_rate_kw: c.charge_rate,
                    avg_wait_min: c.avg_wait,
                })
                .collect(),
            evs: inst
                .evs()
                .iter()
                .map(|e| EvDoc {
                    id: e.id,
                    battery_capacity_kwh: e.battery_capacity,
                    acceptance_rate_kw: e.acceptance_rate,
                    mileage_miles_per_kwh: e.mileage,
                    avg_speed_miles_per_min: e.avg_speed,
                })
                .collect(),
            metric: MetricDoc {
                mode: m.mode,
                distances_miles: match m.mode {
                    MetricMode::Explicit => m.explicit_distances.clone(),
                    _ => None,
                },
                times_min: m.explicit_times.clone(),
            },
            params: ParamsDoc {
                unload_time_min: inst.unload_time(),
                horizon_min: Some(inst.horizon()),
                bill_depot_return: inst.params().bill_depot_return,
                depot_midday_charging: inst.params().depot_midday_charging,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance document serializes");
        s.push('\n');
        s
    }
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        doc.into_instance()
    }

    pub fn to_json(&self) -> String {
        InstanceDoc::from_instance(self).to_json()
    }
}

fn read(path: &Path) -> Result<String, InstanceError> {
    std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>, format: InstanceFormat) -> Result<Instance, InstanceError> {
    let text = read(path.as_ref())?;
    match format {
        InstanceFormat::NativeJson => Instance::from_json(&text),
        InstanceFormat::JdStyle => parse_jd(&text),
    }
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    std::fs::write(path, inst.to_json()).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

const METERS_PER_MILE: f64 = 1609.344;

fn parse_clock(s: &str) -> Result<f64, InstanceError> {
    let s = s.trim();
    if let Some((h, m)) = s.split_once(':') {
        let h: f64 = h.parse().map_err(|_| InstanceError::Parse(format!("bad time '{s}'")))?;
        let m: f64 = m.parse().map_err(|_| InstanceError::Parse(format!("bad time '{s}'")))?;
        Ok(h * 60.0 + m)
    } else {
        s.parse().map_err(|_| InstanceError::Parse(format!("bad time '{s}'")))
    }
}

fn sections(text: &str) -> Result<HashMap<String, String>, InstanceError> {
    let mut out: HashMap<String, String> = HashMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if t.starts_with('[') && t.ends_with(']') {
            let name = t[1..t.len() - 1].trim().to_ascii_lowercase();
            out.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        match &current {
            Some(name) => {
                let buf = out.get_mut(name).expect("section exists");
                buf.push_str(t);
                buf.push('\n');
            }
            None => return Err(InstanceError::Parse("record before the first [section] header".into())),
        }
    }
    Ok(out)
}

fn records(body: &str) -> Result<Vec<HashMap<String, String>>, InstanceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| InstanceError::Parse(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| InstanceError::Parse(e.to_string()))?;
        rows.push(headers.iter().cloned().zip(rec.iter().map(str::to_string)).collect());
    }
    Ok(rows)
}

fn field<'a>(row: &'a HashMap<String, String>, key: &str) -> Option<&'a str> {
    row.get(key).map(String::as_str).filter(|v| !v.is_empty())
}

fn num(row: &HashMap<String, String>, key: &str) -> Result<f64, InstanceError> {
    let v = field(row, key).ok_or_else(|| InstanceError::Parse(format!("missing field '{key}'")))?;
    v.parse()
        .map_err(|_| InstanceError::Parse(format!("field '{key}': bad number '{v}'")))
}

fn opt_num(row: &HashMap<String, String>, key: &str) -> Result<Option<f64>, InstanceError> {
    field(row, key)
        .map(|v| {
            v.parse()
                .map_err(|_| InstanceError::Parse(format!("field '{key}': bad number '{v}'")))
        })
        .transpose()
}

enum JdType {
    Depot,
    Delivery,
    Pickup,
    Charging,
}

fn jd_type(s: &str) -> Result<JdType, InstanceError> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "depot" => Ok(JdType::Depot),
        "2" | "delivery" => Ok(JdType::Delivery),
        "3" | "pickup" => Ok(JdType::Pickup),
        "4" | "charging" | "charging_station" => Ok(JdType::Charging),
        other => Err(InstanceError::Parse(format!("unknown node type '{other}'"))),
    }
}

fn parse_jd(text: &str) -> Result<Instance, InstanceError> {
    let secs = sections(text)?;
    let nodes = records(
        secs.get("nodes")
            .ok_or_else(|| InstanceError::Parse("missing [nodes] section".into()))?,
    )?;
    let fleet = records(
        secs.get("fleet")
            .ok_or_else(|| InstanceError::Parse("missing [fleet] section".into()))?,
    )?;

    let mut depot_row = None;
    let mut deliveries_raw = Vec::new();
    let mut cps_raw = Vec::new();
    for row in &nodes {
        let ty = jd_type(field(row, "type").ok_or_else(|| InstanceError::Parse("node without type".into()))?)?;
        match ty {
            JdType::Depot if depot_row.is_some() => {
                return Err(InstanceError::Parse("more than one depot node".into()))
            }
            JdType::Depot => depot_row = Some(row),
            JdType::Delivery => deliveries_raw.push(row),
            JdType::Charging => cps_raw.push(row),
            JdType::Pickup => {}
        }
    }
    let depot_row = depot_row.ok_or_else(|| InstanceError::Parse("no depot node".into()))?;
    let id_of = |row: &HashMap<String, String>| -> Result<u32, InstanceError> {
        let v = field(row, "id").ok_or_else(|| InstanceError::Parse("node without id".into()))?;
        v.parse()
            .map_err(|_| InstanceError::Parse(format!("bad node id '{v}'")))
    };
    let loc = |row: &HashMap<String, String>| -> Result<Location, InstanceError> {
        Ok(Location::new(num(row, "lng")?, num(row, "lat")?))
    };
    let origin = field(depot_row, "first_receive_tm")
        .map(parse_clock)
        .transpose()?
        .unwrap_or(0.0);
    let depot_close = field(depot_row, "last_receive_tm").map(parse_clock).transpose()?;

    let mut deliveries = Vec::new();
    let mut service_max: f64 = 0.0;
    for row in &deliveries_raw {
        let start = field(row, "first_receive_tm")
            .map(parse_clock)
            .transpose()?
            .unwrap_or(origin);
        let end = field(row, "last_receive_tm")
            .map(parse_clock)
            .transpose()?
            .ok_or_else(|| InstanceError::Parse("delivery without last_receive_tm".into()))?;
        service_max = service_max.max(opt_num(row, "service_time")?.unwrap_or(0.0));
        deliveries.push(Delivery {
            id: id_of(row)?,
            location: loc(row)?,
            window_start: (start - origin).max(0.0),
            window_end: end - origin,
        });
    }
    let mut cps = Vec::new();
    for row in &cps_raw {
        cps.push(ChargingPoint {
            id: id_of(row)?,
            location: loc(row)?,
            unit_cost: opt_num(row, "unit_cost")?.unwrap_or(0.5),
            charge_rate: opt_num(row, "charge_rate")?.unwrap_or(100.0),
            avg_wait: opt_num(row, "avg_wait")?.unwrap_or(0.0),
        });
    }
    let min_cp_cost = cps.iter().map(|c| c.unit_cost).fold(f64::INFINITY, f64::min);
    let depot = Depot {
        location: loc(depot_row)?,
        unit_cost: opt_num(depot_row, "unit_cost")?.unwrap_or(min_cp_cost.min(0.3)),
        charge_rate: opt_num(depot_row, "charge_rate")?.unwrap_or(50.0),
        avg_wait: opt_num(depot_row, "avg_wait")?.unwrap_or(0.0),
    };

    let mut evs = Vec::new();
    for row in &fleet {
        evs.push(ElectricVehicle {
            id: id_of(row)?,
            battery_capacity: num(row, "battery_capacity_kwh")?,
            acceptance_rate: num(row, "acceptance_rate_kw")?,
            mileage: num(row, "mileage_miles_per_kwh")?,
            avg_speed: num(row, "avg_speed_miles_per_min")?,
        });
    }

    let mut params = HashMap::new();
    if let Some(body) = secs.get("params") {
        for row in records(body)? {
            if let (Some(k), Some(v)) = (field(&row, "key"), field(&row, "value")) {
                params.insert(k.to_string(), v.to_string());
            }
        }
    }
    let param = |k: &str| -> Result<Option<f64>, InstanceError> {
        params
            .get(k)
            .map(|v| {
                v.parse()
                    .map_err(|_| InstanceError::Parse(format!("param '{k}': bad number '{v}'")))
            })
            .transpose()
    };
    let unload_time = param("unload_time_min")?.unwrap_or(service_max);
    let horizon = param("horizon_min")?.or(depot_close.map(|c| c - origin));

    // Node order: depot, deliveries, CPs; map JD ids onto that order.
    let mut order: HashMap<u32, usize> = HashMap::new();
    order.insert(id_of(depot_row)?, 0);
    for (i, d) in deliveries.iter().enumerate() {
        order.insert(d.id, 1 + i);
    }
    for (k, c) in cps.iter().enumerate() {
        order.insert(c.id, 1 + deliveries.len() + k);
    }
    let n = order.len();
    let mut locations = vec![depot.location];
    locations.extend(deliveries.iter().map(|d| d.location));
    locations.extend(cps.iter().map(|c| c.location));

    let metric = match secs.get("edges") {
        Some(body) if !body.trim().is_empty() => {
            let mut dist: Vec<Vec<f64>> = (0..n)
                .map(|a| (0..n).map(|b| locations[a].haversine(&locations[b])).collect())
                .collect();
            let mut times: Vec<Vec<Option<f64>>> = (0..n)
                .map(|a| (0..n).map(|b| (a == b).then_some(0.0)).collect())
                .collect();
            for row in records(body)? {
                let from = num(&row, "from")? as u32;
                let to = num(&row, "to")? as u32;
                // Edges touching pickups or unknown nodes are skipped.
                let (Some(&a), Some(&b)) = (order.get(&from), order.get(&to)) else {
                    continue;
                };
                if a == b {
                    continue;
                }
                dist[a][b] = num(&row, "distance")? / METERS_PER_MILE;
                times[a][b] = opt_num(&row, "spend_tm")?;
            }
            TravelMetric::explicit(dist, Some(times))
        }
        _ => TravelMetric::coordinate(MetricMode::Haversine),
    };

    Instance::new(InstanceParts {
        depot,
        deliveries,
        charging_points: cps,
        evs,
        metric,
        unload_time,
        horizon,
        bill_depot_return: true,
        depot_midday_charging: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_doc() -> String {
        r#"{
  "depot": {"location": {"x": 0.0, "y": 0.0}, "unit_cost_usd_per_kwh": 0.3, "charge_rate_kw": 50.0, "avg_wait_min": 0.0},
  "deliveries": [
    {"id": 1, "location": {"x": 1.0, "y": 0.0}, "window_start_min": 0.0, "window_end_min": 100.0},
    {"id": 2, "location": {"x": 2.0, "y": 0.0}, "window_start_min": 10.0, "window_end_min": 200.0},
    {"id": 3, "location": {"x": 0.0, "y": 3.0}, "window_start_min": 0.0, "window_end_min": 300.0}
  ],
  "charging_points": [
    {"id": 7, "location": {"x": 1.0, "y": 1.0}, "unit_cost_usd_per_kwh": 0.5, "charge_rate_kw": 100.0, "avg_wait_min": 2.0}
  ],
  "evs": [
    {"id": 1, "battery_capacity_kwh": 40.0, "acceptance_rate_kw": 80.0, "mileage_miles_per_kwh": 3.0, "avg_speed_miles_per_min": 0.5}
  ],
  "metric": {"mode": "euclidean"},
  "params": {"unload_time_min": 5.0}
}"#
        .to_string()
    }

    #[test]
    fn loads_native_document() {
        let inst = Instance::from_json(&sample_doc()).unwrap();
        assert_eq!(inst.deliveries().len(), 3);
        assert_eq!(inst.charging_points().len(), 1);
        assert_eq!(inst.evs().len(), 1);
        assert!(inst.params().bill_depot_return);
    }

    #[test]
    fn zero_cost_cp_names_the_cp() {
        let doc = sample_doc().replace("\"unit_cost_usd_per_kwh\": 0.5", "\"unit_cost_usd_per_kwh\": 0.0");
        let err = Instance::from_json(&doc).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, InstanceError::Validation { .. }));
        assert!(msg.contains("charging_points[0] (id 7).unit_cost"), "{msg}");
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(
            Instance::from_json("{ not json"),
            Err(InstanceError::Parse(_))
        ));
    }

    #[test]
    fn asymmetric_explicit_matrix_preserved() {
        let mut doc: InstanceDoc = serde_json::from_str(&sample_doc()).unwrap();
        let n = 5;
        let mut d = vec![vec![4.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        d[0][1] = 1.0;
        d[1][0] = 9.0;
        doc.metric = MetricDoc {
            mode: MetricMode::Explicit,
            distances_miles: Some(d),
            times_min: None,
        };
        let inst = doc.into_instance().unwrap();
        assert_eq!(inst.distance(Node::Depot, Node::Delivery(0)), 1.0);
        assert_eq!(inst.distance(Node::Delivery(0), Node::Depot), 9.0);
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again.distance(Node::Delivery(0), Node::Depot), 9.0);
    }

    #[test]
    fn canonical_save_is_byte_stable() {
        let inst = Instance::from_json(&sample_doc()).unwrap();
        let first = inst.to_json();
        let second = Instance::from_json(&first).unwrap().to_json();
        assert_eq!(first, second);
    }

    #[test]
    fn jd_style_ingestion() {
        let text = "\
# sample
[nodes]
id,type,lng,lat,demand,first_receive_tm,last_receive_tm,service_time,unit_cost,charge_rate,avg_wait
0,1,116.40,39.90,0,08:00,20:00,0,0.3,50,0
1,2,116.42,39.91,1.5,09:00,11:30,6,,,
2,2,116.38,39.88,0.5,08:00,18:00,4,,,
3,3,116.45,39.95,1.0,08:00,18:00,5,,,
4,4,116.41,39.92,0,,,,0.45,120,3
[edges]
from,to,distance,spend_tm
0,1,3000,12
1,0,3500,15
0,3,100,1
[fleet]
id,battery_capacity_kwh,acceptance_rate_kw,mileage_miles_per_kwh,avg_speed_miles_per_min
1,40,100,3.0,0.5
";
        let inst = parse_jd(text).unwrap();
        assert_eq!(inst.deliveries().len(), 2);
        assert_eq!(inst.charging_points().len(), 1);
        assert_eq!(inst.deliveries()[0].window_start, 60.0);
        assert_eq!(inst.deliveries()[0].window_end, 210.0);
        assert_eq!(inst.unload_time(), 6.0);
        assert_eq!(inst.horizon(), 720.0);
        assert!((inst.distance(Node::Depot, Node::Delivery(0)) - 3000.0 / METERS_PER_MILE).abs() < 1e-12);
        assert!((inst.distance(Node::Delivery(0), Node::Depot) - 3500.0 / METERS_PER_MILE).abs() < 1e-12);
        assert_eq!(inst.travel_time(0, Node::Depot, Node::Delivery(0)).unwrap(), 12.0);
        // No edge record: haversine distance over speed.
        let d = inst.distance(Node::Depot, Node::Delivery(1));
        let t = inst.travel_time(0, Node::Depot, Node::Delivery(1)).unwrap();
        assert!((t - d / 0.5).abs() < 1e-9);
        assert_eq!(inst.charging_points()[0].unit_cost, 0.45);
    }
}
