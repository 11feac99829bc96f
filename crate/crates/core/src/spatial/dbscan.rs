use super::SpatialError;
use crate::instance::{Delivery, Instance, Location, MetricMode, EARTH_RADIUS_MILES};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// ST-DBSCAN parameters. `min_pts` counts the point itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps_spatial: f64,
    pub eps_temporal: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    /// 10% of the bounding-box diagonal, 10% of the horizon, `min_pts = 2`.
    pub fn defaults_for(inst: &Instance) -> Self {
        let eps_spatial = (0.1 * inst.bounding_box_diagonal()).max(1e-9);
        let eps_temporal = (0.1 * inst.horizon()).max(1e-9);
        Self {
            eps_spatial,
            eps_temporal,
            min_pts: 2,
        }
    }

    pub fn validate(&self) -> Result<(), SpatialError> {
        if !(self.eps_spatial.is_finite() && self.eps_spatial > 0.0) {
            return Err(SpatialError::InvalidParameter(format!(
                "eps_spatial must be > 0, got {}",
                self.eps_spatial
            )));
        }
        if !(self.eps_temporal.is_finite() && self.eps_temporal > 0.0) {
            return Err(SpatialError::InvalidParameter(format!(
                "eps_temporal must be > 0, got {}",
                self.eps_temporal
            )));
        }
        if self.min_pts == 0 {
            return Err(SpatialError::InvalidParameter("min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

/// A group of deliveries. `members` are positions into the delivery slice,
/// ordered by (window end, position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryCluster {
    pub members: Vec<usize>,
    pub earliest_deadline: f64,
}

impl DeliveryCluster {
    pub fn ids(&self, deliveries: &[Delivery]) -> Vec<u32> {
        self.members.iter().map(|&i| deliveries[i].id).collect()
    }
}

/// Clusters `deliveries` by spatial distance `dist` and window-end gap.
///
/// Cores are expanded in input order, so a border point reachable from
/// several clusters joins the one whose lowest-index core comes first.
/// Noise points become singleton clusters.
pub fn st_dbscan<F>(
    deliveries: &[Delivery],
    dist: F,
    params: &DbscanParams,
) -> Result<Vec<DeliveryCluster>, SpatialError>
where
    F: Fn(&Location, &Location) -> f64,
{
    st_dbscan_indexed(deliveries, dist, None, params)
}

/// [`st_dbscan`] with a grid over coordinates. `reach[k]` must bound the
/// coordinate difference along axis `k` of any two locations within
/// `eps_spatial` under `dist`; the partition is then identical to the
/// unindexed one. `None` or a non-finite bound disables the grid.
pub fn st_dbscan_indexed<F>(
    deliveries: &[Delivery],
    dist: F,
    reach: Option<[f64; 2]>,
    params: &DbscanParams,
) -> Result<Vec<DeliveryCluster>, SpatialError>
where
    F: Fn(&Location, &Location) -> f64,
{
    params.validate()?;
    let n = deliveries.len();
    let neighbors = neighbor_lists(deliveries, &dist, reach, params);
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || label[seed].is_some() {
            continue;
        }
        let g = groups.len();
        groups.push(Vec::new());
        label[seed] = Some(g);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            groups[g].push(p);
            if !core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(g);
                    queue.push_back(q);
                }
            }
        }
    }
    for (i, l) in label.iter().enumerate() {
        if l.is_none() {
            groups.push(vec![i]);
        }
    }

    let mut clusters: Vec<DeliveryCluster> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| {
                deliveries[a]
                    .window_end
                    .total_cmp(&deliveries[b].window_end)
                    .then(a.cmp(&b))
            });
            let earliest_deadline = deliveries[members[0]].window_end;
            DeliveryCluster {
                members,
                earliest_deadline,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.earliest_deadline
            .total_cmp(&b.earliest_deadline)
            .then(a.members[0].cmp(&b.members[0]))
    });
    Ok(clusters)
}

/// Clusters an instance's deliveries using its coordinate metric.
pub fn cluster_instance(inst: &Instance, params: &DbscanParams) -> Result<Vec<DeliveryCluster>, SpatialError> {
    let reach = coordinate_reach(inst, params.eps_spatial);
    st_dbscan_indexed(inst.deliveries(), |a, b| inst.coordinate_distance(a, b), reach, params)
}

/// Sorted neighbor lists (each point includes itself). Points are bucketed
/// into a dense grid whose cells are at least `reach` wide; each bucket is
/// ordered by window end so the temporal range is a binary search.
fn neighbor_lists<F>(
    deliveries: &[Delivery],
    dist: &F,
    reach: Option<[f64; 2]>,
    params: &DbscanParams,
) -> Vec<Vec<usize>>
where
    F: Fn(&Location, &Location) -> f64,
{
    let n = deliveries.len();
    let origin = deliveries.iter().fold([f64::INFINITY; 2], |o, d| {
        [o[0].min(d.location.x), o[1].min(d.location.y)]
    });
    let extent = deliveries.iter().fold([0.0f64; 2], |e, d| {
        [e[0].max(d.location.x - origin[0]), e[1].max(d.location.y - origin[1])]
    });

    // Cell sizes: never below `reach`, and coarse enough that the grid has
    // O(n) cells.
    let reach = reach.filter(|r| r.iter().all(|v| v.is_finite() && *v > 0.0));
    let bound = reach.unwrap_or([f64::INFINITY; 2]);
    let mut cell = [f64::INFINITY; 2];
    let mut dims = [1usize; 2];
    if let Some(r) = reach {
        let budget = (4 * n).max(1) as f64;
        let raw = [(extent[0] / r[0]).floor() + 1.0, (extent[1] / r[1]).floor() + 1.0];
        let scale = (raw[0] * raw[1] / budget).sqrt().max(1.0);
        for k in 0..2 {
            cell[k] = r[k] * scale;
            dims[k] = ((extent[k] / cell[k]).floor() as usize + 1).max(1);
        }
    }
    let coord = |v: f64, k: usize| -> usize {
        if cell[k].is_finite() {
            (((v - origin[k]) / cell[k]).floor() as usize).min(dims[k] - 1)
        } else {
            0
        }
    };
    let cell_of = |l: &Location| (coord(l.x, 0), coord(l.y, 1));

    // Compressed buckets: `order[start[c]..start[c + 1]]` holds cell `c`.
    let flat = |(cx, cy): (usize, usize)| cx * dims[1] + cy;
    let cells: Vec<usize> = deliveries.iter().map(|d| flat(cell_of(&d.location))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        cells[a]
            .cmp(&cells[b])
            .then(deliveries[a].window_end.total_cmp(&deliveries[b].window_end))
            .then(a.cmp(&b))
    });
    let mut start = vec![0usize; dims[0] * dims[1] + 1];
    for &c in &cells {
        start[c + 1] += 1;
    }
    for c in 0..dims[0] * dims[1] {
        start[c + 1] += start[c];
    }

    // Bucket records packed in grid order, so the scan below stays within
    // contiguous memory.
    let packed: Vec<(f64, f64, f64, usize)> = order
        .iter()
        .map(|&j| {
            let d = &deliveries[j];
            (d.window_end, d.location.x, d.location.y, j)
        })
        .collect();
    let eps_t = params.eps_temporal;
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nb) in neighbors.iter_mut().enumerate() {
        let d = &deliveries[i];
        let (end, x, y) = (d.window_end, d.location.x, d.location.y);
        let (cx, cy) = cell_of(&d.location);
        for gx in cx.saturating_sub(1)..=(cx + 1).min(dims[0] - 1) {
            // Cells in one grid column are adjacent in `packed`.
            let lo_c = flat((gx, cy.saturating_sub(1)));
            let hi_c = flat((gx, (cy + 1).min(dims[1] - 1)));
            for c in lo_c..=hi_c {
                let bucket = &packed[start[c]..start[c + 1]];
                let lo = bucket.partition_point(|r| r.0 < end - eps_t);
                for r in &bucket[lo..] {
                    if r.0 > end + eps_t {
                        break;
                    }
                    // The window bounds above are a prefilter; the exact gap
                    // test keeps results identical to a pairwise scan.
                    if (r.0 - end).abs() <= eps_t
                        && (r.1 - x).abs() <= bound[0]
                        && (r.2 - y).abs() <= bound[1]
                        && dist(&d.location, &deliveries[r.3].location) <= params.eps_spatial
                    {
                        nb.push(r.3);
                    }
                }
            }
        }
        nb.sort_unstable();
    }
    neighbors
}

/// Per-axis coordinate bound for pairs within `eps` under the instance's
/// coordinate metric, or `None` when no useful bound exists.
fn coordinate_reach(inst: &Instance, eps: f64) -> Option<[f64; 2]> {
    // Relative slack so rounding in the metric never drops a true pair.
    const SLACK: f64 = 1.0 + 1e-6;
    match inst.metric().mode {
        MetricMode::Haversine => {
            let ds = inst.deliveries();
            let lat_max = ds.iter().map(|d| d.location.y.abs()).fold(0.0, f64::max);
            let lon_lo = ds.iter().map(|d| d.location.x).fold(f64::INFINITY, f64::min);
            let lon_hi = ds.iter().map(|d| d.location.x).fold(f64::NEG_INFINITY, f64::max);
            if lon_hi - lon_lo > 180.0 || lat_max >= 90.0 {
                return None;
            }
            // d >= R |dlat| and sin(d / 2R) >= cos(lat_max) |sin(dlon / 2)|.
            let half = eps / (2.0 * EARTH_RADIUS_MILES);
            let sin_lon = half.min(std::f64::consts::FRAC_PI_2).sin() / lat_max.to_radians().cos();
            if half >= std::f64::consts::FRAC_PI_2 || sin_lon >= 1.0 {
                return None;
            }
            let dlat = (2.0 * half).to_degrees();
            let dlon = (2.0 * sin_lon.asin()).to_degrees();
            Some([dlon * SLACK, dlat * SLACK])
        }
        _ => Some([eps * SLACK, eps * SLACK]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(id: u32, x: f64, y: f64, end: f64) -> Delivery {
        Delivery {
            id,
            location: Location::new(x, y),
            window_start: 0.0,
            window_end: end,
        }
    }

    fn euclid(a: &Location, b: &Location) -> f64 {
        a.euclidean(b)
    }

    /// Pairwise reference: union-find over core-core links, borders to the
    /// adjacent component with the smallest core index.
    fn naive(ds: &[Delivery], p: &DbscanParams) -> Vec<usize> {
        let n = ds.len();
        let adj = |i: usize, j: usize| {
            (ds[i].window_end - ds[j].window_end).abs() <= p.eps_temporal
                && euclid(&ds[i].location, &ds[j].location) <= p.eps_spatial
        };
        let core: Vec<bool> = (0..n)
            .map(|i| (0..n).filter(|&j| adj(i, j)).count() >= p.min_pts)
            .collect();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for i in 0..n {
            for j in 0..n {
                if core[i] && core[j] && adj(i, j) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    let (lo, hi) = (a.min(b), a.max(b));
                    parent[hi] = lo;
                }
            }
        }
        // Component root = smallest core index after min-rooted unions.
        (0..n)
            .map(|i| {
                if core[i] {
                    find(&mut parent, i)
                } else {
                    (0..n)
                        .filter(|&j| core[j] && adj(i, j))
                        .map(|j| find(&mut parent, j))
                        .min()
                        .unwrap_or(n + i)
                }
            })
            .collect()
    }

    fn labels_of(clusters: &[DeliveryCluster], n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (c, cl) in clusters.iter().enumerate() {
            for &m in &cl.members {
                assert_eq!(out[m], usize::MAX, "delivery {m} in two clusters");
                out[m] = c;
            }
        }
        assert!(out.iter().all(|&l| l != usize::MAX));
        out
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        let n = a.len();
        (0..n).all(|i| (0..n).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn single_blob() {
        let ds: Vec<_> = (0..7).map(|i| d(i, 1.0, 1.0, 100.0)).collect();
        let p = DbscanParams {
            eps_spatial: 0.5,
            eps_temporal: 1.0,
            min_pts: 1,
        };
        let c = st_dbscan(&ds, euclid, &p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn far_groups_split() {
        let mut ds = Vec::new();
        for i in 0..4 {
            ds.push(d(i, 0.0 + 0.1 * i as f64, 0.0, 50.0));
        }
        for i in 4..8 {
            ds.push(d(i, 100.0 + 0.1 * i as f64, 0.0, 50.0));
        }
        let p = DbscanParams {
            eps_spatial: 1.0,
            eps_temporal: 10.0,
            min_pts: 2,
        };
        let c = st_dbscan(&ds, euclid, &p).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn temporal_gap_splits_colocated() {
        let ds = vec![d(1, 0.0, 0.0, 10.0), d(2, 0.0, 0.0, 12.0), d(3, 0.0, 0.0, 500.0)];
        let p = DbscanParams {
            eps_spatial: 1.0,
            eps_temporal: 5.0,
            min_pts: 2,
        };
        let c = st_dbscan(&ds, euclid, &p).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].ids(&ds), vec![1, 2]);
        assert_eq!(c[1].ids(&ds), vec![3]);
    }

    #[test]
    fn noise_becomes_singletons_sorted_by_deadline() {
        let ds = vec![d(1, 0.0, 0.0, 30.0), d(2, 50.0, 0.0, 10.0), d(3, 100.0, 0.0, 20.0)];
        let p = DbscanParams {
            eps_spatial: 1.0,
            eps_temporal: 5.0,
            min_pts: 2,
        };
        let c = st_dbscan(&ds, euclid, &p).unwrap();
        let ids: Vec<Vec<u32>> = c.iter().map(|cl| cl.ids(&ds)).collect();
        assert_eq!(ids, vec![vec![2], vec![3], vec![1]]);
    }

    #[test]
    fn invalid_params() {
        let ds = vec![d(1, 0.0, 0.0, 30.0)];
        for p in [
            DbscanParams {
                eps_spatial: 0.0,
                eps_temporal: 1.0,
                min_pts: 1,
            },
            DbscanParams {
                eps_spatial: 1.0,
                eps_temporal: -1.0,
                min_pts: 1,
            },
            DbscanParams {
                eps_spatial: 1.0,
                eps_temporal: 1.0,
                min_pts: 0,
            },
        ] {
            assert!(matches!(
                st_dbscan(&ds, euclid, &p),
                Err(SpatialError::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn empty_input() {
        let p = DbscanParams {
            eps_spatial: 1.0,
            eps_temporal: 1.0,
            min_pts: 2,
        };
        assert!(st_dbscan(&[], euclid, &p).unwrap().is_empty());
    }

    #[test]
    fn border_joins_first_cluster() {
        // 0-1 and 3-4 are core pairs; 2 touches both but is not core.
        let ds = vec![
            d(1, 0.0, 0.0, 10.0),
            d(2, 1.0, 0.0, 10.0),
            d(3, 2.0, 0.0, 10.0),
            d(4, 3.0, 0.0, 10.0),
            d(5, 4.0, 0.0, 10.0),
        ];
        let p = DbscanParams {
            eps_spatial: 1.0,
            eps_temporal: 1.0,
            min_pts: 3,
        };
        let c = st_dbscan(&ds, euclid, &p).unwrap();
        let labels = labels_of(&c, ds.len());
        assert!(same_partition(&labels, &naive(&ds, &p)));
    }

    proptest! {
        #[test]
        fn matches_naive_reference(
            pts in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0, 0.0f64..300.0), 0..40),
            eps_s in 0.5f64..6.0,
            eps_t in 5.0f64..120.0,
            min_pts in 1usize..5,
        ) {
            let ds: Vec<Delivery> = pts.iter().enumerate()
                .map(|(i, &(x, y, e))| d(i as u32 + 1, x, y, e.round()))
                .collect();
            let p = DbscanParams { eps_spatial: eps_s, eps_temporal: eps_t, min_pts };
            let c = st_dbscan(&ds, euclid, &p).unwrap();
            let labels = labels_of(&c, ds.len());
            prop_assert!(same_partition(&labels, &naive(&ds, &p)));
            for w in c.windows(2) {
                prop_assert!(w[0].earliest_deadline <= w[1].earliest_deadline);
            }
            for cl in &c {
                for m in cl.members.windows(2) {
                    prop_assert!(ds[m[0]].window_end <= ds[m[1]].window_end);
                }
                prop_assert_eq!(cl.earliest_deadline, ds[cl.members[0]].window_end);
            }
        }

        #[test]
        fn grid_matches_unindexed(
            pts in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0, 0.0f64..300.0), 0..60),
            eps_s in 0.1f64..8.0,
            eps_t in 5.0f64..120.0,
            min_pts in 1usize..4,
        ) {
            let ds: Vec<Delivery> = pts.iter().enumerate()
                .map(|(i, &(x, y, e))| d(i as u32 + 1, x, y, e))
                .collect();
            let p = DbscanParams { eps_spatial: eps_s, eps_temporal: eps_t, min_pts };
            let grid = st_dbscan_indexed(&ds, euclid, Some([eps_s, eps_s]), &p).unwrap();
            prop_assert_eq!(grid, st_dbscan(&ds, euclid, &p).unwrap());
        }

        #[test]
        fn haversine_grid_matches_unindexed(seed in 0u64..1000, fs in 0.01f64..0.5, ft in 0.02f64..0.5, lat in -70.0f64..70.0) {
            let cfg = crate::instance::GeneratorConfig {
                center: Location::new(10.0, lat),
                half_span: 0.5,
                ..Default::default()
            };
            let inst = crate::instance::generate_synthetic(seed, 50, 1, 1, &cfg).unwrap();
            let p = DbscanParams {
                eps_spatial: fs * inst.bounding_box_diagonal(),
                eps_temporal: ft * inst.horizon(),
                min_pts: 2,
            };
            let plain = st_dbscan(inst.deliveries(), |a, b| inst.coordinate_distance(a, b), &p).unwrap();
            prop_assert_eq!(cluster_instance(&inst, &p).unwrap(), plain);
        }
    }
}
