//! Subaggregation of per-step rewards into objective vectors.
//!
//! A scalar fitness f = Σ_t r_t is decomposed into n partial sums, either by
//! where each reward was earned (quadtree cells over the position space) or
//! by when (contiguous time windows). Both decompositions partition the
//! steps, so the objective vector always sums back to f.

use crate::{Error, Result};

/// Axis-aligned rectangle over position space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Rect {
        Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Closed containment: used to validate that positions lie in bounds.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// One step of an evaluated rollout: time index, position, reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub pos: (f64, f64),
    pub reward: f64,
}

/// A rollout's step sequence plus the position-space bounds it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub bounds: Rect,
}

impl Trajectory {
    /// Time indices must be strictly increasing; domains construct them as 0..len.
    pub fn new(steps: Vec<StepRecord>, bounds: Rect) -> Trajectory {
        debug_assert!(steps.windows(2).all(|w| w[0].t < w[1].t));
        Trajectory { steps, bounds }
    }

    /// Scalar fitness f = Σ_t r_t.
    pub fn total_fitness(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Subaggregated objectives R_1..R_n.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Which heuristic family assigns steps to objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubaggKind {
    SpaceQuadtree,
    TimeWindows,
}

pub const VALID_OBJECTIVE_COUNTS: [usize; 4] = [1, 4, 16, 64];

/// Heuristic kind plus objective count n ∈ {1, 4, 16, 64}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubaggSpec {
    pub kind: SubaggKind,
    pub n: usize,
}

impl SubaggSpec {
    pub fn new(kind: SubaggKind, n: usize) -> Result<SubaggSpec> {
        if !VALID_OBJECTIVE_COUNTS.contains(&n) {
            return Err(Error::config(format!(
                "objective count must be one of 1, 4, 16, 64, got {n}"
            )));
        }
        Ok(SubaggSpec { kind, n })
    }

    /// Quadtree depth such that 4^depth = n.
    pub fn depth(&self) -> usize {
        match self.n {
            1 => 0,
            4 => 1,
            16 => 2,
            64 => 3,
            _ => unreachable!("validated at construction"),
        }
    }
}

/// Cell edges along one axis: side+1 values with exact endpoints.
///
/// Interior edges are `lo + span*k/side`; the first and last are exactly the
/// bounds so tiling and containment checks agree bit-for-bit.
pub(crate) fn axis_edges(lo: f64, hi: f64, side: usize) -> Vec<f64> {
    let span = hi - lo;
    (0..=side)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == side {
                hi
            } else {
                lo + span * (k as f64) / (side as f64)
            }
        })
        .collect()
}

/// Cell index along one axis. Cells are half-open [edge_k, edge_{k+1}) with
/// the final cell closed, so a point on a shared edge goes to the higher cell.
pub(crate) fn axis_bin(edges: &[f64], v: f64) -> usize {
    let side = edges.len() - 1;
    let k = edges[1..side].partition_point(|e| *e <= v);
    k.min(side - 1)
}

/// Quadtree leaf cells at the given depth, row-major: index = row*side + col,
/// rows counted from y_min, columns from x_min.
pub fn quadtree_regions(bounds: Rect, depth: usize) -> Result<Vec<Rect>> {
    if depth > 3 {
        return Err(Error::config(format!(
            "quadtree depth must be in [0, 3], got {depth}"
        )));
    }
    if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::config("degenerate quadtree bounds"));
    }
    let side = 1usize << depth;
    let xe = axis_edges(bounds.x_min, bounds.x_max, side);
    let ye = axis_edges(bounds.y_min, bounds.y_max, side);
    let mut regions = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            regions.push(Rect::new(xe[col], ye[row], xe[col + 1], ye[row + 1]));
        }
    }
    Ok(regions)
}

/// R_i = Σ of rewards earned while positioned in quadtree cell i.
pub fn space_subaggregate(traj: &Trajectory, spec: SubaggSpec) -> Result<ObjectiveVector> {
    debug_assert_eq!(spec.kind, SubaggKind::SpaceQuadtree);
    let side = 1usize << spec.depth();
    let xe = axis_edges(traj.bounds.x_min, traj.bounds.x_max, side);
    let ye = axis_edges(traj.bounds.y_min, traj.bounds.y_max, side);
    let mut values = vec![0.0; spec.n];
    for step in &traj.steps {
        let (x, y) = step.pos;
        if !traj.bounds.contains(x, y) {
            return Err(Error::input(format!(
                "step {} position ({x}, {y}) outside trajectory bounds",
                step.t
            )));
        }
        let col = axis_bin(&xe, x);
        let row = axis_bin(&ye, y);
        values[row * side + col] += step.reward;
    }
    Ok(ObjectiveVector(values))
}

/// R_i = Σ of rewards in the i-th contiguous time window. Windows are
/// near-equal: the first |T| mod n windows get one extra step.
pub fn time_subaggregate(traj: &Trajectory, spec: SubaggSpec) -> Result<ObjectiveVector> {
    debug_assert_eq!(spec.kind, SubaggKind::TimeWindows);
    let len = traj.steps.len();
    if spec.n > len {
        return Err(Error::config(format!(
            "time windows ({}) exceed trajectory length ({len})",
            spec.n
        )));
    }
    let base = len / spec.n;
    let rem = len % spec.n;
    let mut values = Vec::with_capacity(spec.n);
    let mut start = 0;
    for i in 0..spec.n {
        let size = base + usize::from(i < rem);
        let window = &traj.steps[start..start + size];
        values.push(window.iter().map(|s| s.reward).sum());
        start += size;
    }
    debug_assert_eq!(start, len);
    Ok(ObjectiveVector(values))
}

/// Dispatch on the spec's heuristic kind.
pub fn subaggregate(traj: &Trajectory, spec: SubaggSpec) -> Result<ObjectiveVector> {
    match spec.kind {
        SubaggKind::SpaceQuadtree => space_subaggregate(traj, spec),
        SubaggKind::TimeWindows => time_subaggregate(traj, spec),
    }
}
