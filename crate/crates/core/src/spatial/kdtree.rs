use crate::instance::{ChargeSite, Instance, Location};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("at least one charging location is required")]
    Empty,
    #[error("invalid clustering parameter: {0}")]
    InvalidParameter(String),
}

/// A charging location stored in the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePoint {
    pub site: ChargeSite,
    /// CP id; the depot uses 0 and sorts before every CP on ties.
    pub id: u32,
    pub location: Location,
    pub unit_cost: f64,
}

impl TreePoint {
    fn tie_key(&self) -> (u8, u32) {
        match self.site {
            ChargeSite::Depot => (0, 0),
            ChargeSite::Cp(_) => (1, self.id),
        }
    }
}

/// Per-dimension min-max bounds. A degenerate dimension maps to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Normalization {
    fn fit(raw: &[[f64; 3]]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in raw {
            for d in 0..3 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Self { min, max }
    }

    /// Affine map onto `[0,1]^3` for fitted points; queries outside the
    /// fitted bounds map outside the unit cube.
    pub fn apply(&self, raw: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for d in 0..3 {
            let span = self.max[d] - self.min[d];
            out[d] = if span > 0.0 { (raw[d] - self.min[d]) / span } else { 0.0 };
        }
        out
    }
}

/// Squared distance in normalized space. Shared with the linear scan so both
/// paths compare bit-identical values.
#[inline]
pub fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dc = a[2] - b[2];
    dx * dx + dy * dy + dc * dc
}

#[derive(Debug, Clone)]
struct KdNode {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// Balanced 3-d tree over (x, y, unit cost) of charging locations, each
/// dimension min-max normalized.
#[derive(Debug, Clone)]
pub struct NormalizedKdTree {
    points: Vec<TreePoint>,
    normalized: Vec<[f64; 3]>,
    normalization: Normalization,
    nodes: Vec<KdNode>,
    root: Option<usize>,
    min_cost: f64,
}

impl NormalizedKdTree {
    pub fn build(points: Vec<TreePoint>) -> Result<Self, SpatialError> {
        if points.is_empty() {
            return Err(SpatialError::Empty);
        }
        let raw: Vec<[f64; 3]> = points
            .iter()
            .map(|p| [p.location.x, p.location.y, p.unit_cost])
            .collect();
        let normalization = Normalization::fit(&raw);
        let normalized: Vec<[f64; 3]> = raw.iter().map(|r| normalization.apply(*r)).collect();
        let min_cost = points.iter().map(|p| p.unit_cost).fold(f64::INFINITY, f64::min);

        let mut tree = Self {
            points,
            normalized,
            normalization,
            nodes: Vec::new(),
            root: None,
            min_cost,
        };
        let mut idx: Vec<usize> = (0..tree.points.len()).collect();
        tree.nodes.reserve(idx.len());
        tree.root = tree.build_rec(&mut idx, 0);
        Ok(tree)
    }

    /// Tree over the instance's CPs, plus the depot when `include_depot`.
    pub fn from_instance(inst: &Instance, include_depot: bool) -> Result<Self, SpatialError> {
        let mut points = Vec::with_capacity(inst.charging_points().len() + 1);
        if include_depot {
            points.push(TreePoint {
                site: ChargeSite::Depot,
                id: 0,
                location: inst.depot().location,
                unit_cost: inst.depot().unit_cost,
            });
        }
        points.extend(inst.charging_points().iter().enumerate().map(|(k, c)| TreePoint {
            site: ChargeSite::Cp(k),
            id: c.id,
            location: c.location,
            unit_cost: c.unit_cost,
        }));
        Self::build(points)
    }

    fn build_rec(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let mid = idx.len() / 2;
        let coords = &self.normalized;
        idx.select_nth_unstable_by(mid, |&a, &b| coords[a][axis].total_cmp(&coords[b][axis]));
        let point = idx[mid];
        let slot = self.nodes.len();
        self.nodes.push(KdNode {
            point,
            axis,
            left: None,
            right: None,
        });
        let (lo, hi) = idx.split_at_mut(mid);
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(&mut hi[1..], depth + 1);
        self.nodes[slot].left = left;
        self.nodes[slot].right = right;
        Some(slot)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TreePoint] {
        &self.points
    }

    pub fn normalized_points(&self) -> &[[f64; 3]] {
        &self.normalized
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Normalized query point: the location with the cheapest stored cost
    /// filling the cost dimension.
    pub fn query_point(&self, location: Location) -> [f64; 3] {
        self.normalization.apply([location.x, location.y, self.min_cost])
    }

    /// Nearest charging location to `location` in normalized space, ties to
    /// the smaller id.
    pub fn nearest_cp(&self, location: Location) -> &TreePoint {
        let q = self.query_point(location);
        &self.points[self.nearest_normalized(&q)]
    }

    pub fn nearest_normalized(&self, q: &[f64; 3]) -> usize {
        let root = self.root.expect("tree is non-empty");
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(root, q, &mut best);
        best.1
    }

    fn better(&self, d2: f64, cand: usize, best: (f64, usize)) -> bool {
        match d2.total_cmp(&best.0) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => self.points[cand].tie_key() < self.points[best.1].tie_key(),
            std::cmp::Ordering::Greater => false,
        }
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (f64, usize)) {
        let n = &self.nodes[node];
        let p = &self.normalized[n.point];
        let d2 = squared_distance(p, q);
        if best.1 == usize::MAX || self.better(d2, n.point, *best) {
            *best = (d2, n.point);
        }
        let diff = q[n.axis] - p[n.axis];
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        if let Some(c) = near {
            self.search(c, q, best);
        }
        // Equal-distance candidates across the plane must still be visited
        // for the id tie-break.
        if let Some(c) = far {
            if diff * diff <= best.0 {
                self.search(c, q, best);
            }
        }
    }
}
