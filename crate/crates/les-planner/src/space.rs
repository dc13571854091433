//! Search-space primitives: states, axis-aligned bounds, state-cost fields,
//! discretized collision checking and the integral edge-cost metric.
//!
//! The edge cost of a straight segment is its Euclidean length times the
//! mean state cost along it, estimated with a composite trapezoid rule whose
//! panel count is tied to the collision-checking resolution. With a unit
//! cost field the metric reduces exactly to path length.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the d-dimensional search space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()), "non-finite coordinate");
        State(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance_to(&self, other: &State) -> f64 {
        heuristic(self, other)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State{:?}", self.0)
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for State {
    fn from(coords: Vec<f64>) -> Self {
        State::new(coords)
    }
}

/// Euclidean distance; the consistent under-estimate of the edge cost for
/// fields with C >= 1 everywhere. All in-scope environments satisfy that
/// contract, so it doubles as the planning heuristic.
pub fn heuristic(a: &State, b: &State) -> f64 {
    assert_eq!(a.dim(), b.dim(), "heuristic: dimension mismatch");
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Point on the segment from `a` to `b` at parameter `t` in [0, 1].
pub fn interpolate(a: &State, b: &State, t: f64) -> State {
    State::new(
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x + (y - x) * t)
            .collect(),
    )
}

/// Axis-aligned bounding box of the search space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: State,
    upper: State,
}

impl SearchSpace {
    pub fn new(lower: State, upper: State) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                actual: upper.dim(),
            });
        }
        if lower.dim() < 2 {
            return Err(Error::InvalidEnvironment(
                "search space dimension must be at least 2".into(),
            ));
        }
        for i in 0..lower.dim() {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidEnvironment(format!(
                    "lower bound must be strictly below upper bound on axis {i}"
                )));
            }
        }
        Ok(SearchSpace { lower, upper })
    }

    pub fn dimension(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &State {
        &self.lower
    }

    pub fn upper(&self) -> &State {
        &self.upper
    }

    /// Lebesgue measure of the bounding box.
    pub fn measure(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.upper[i] - self.lower[i])
            .product()
    }

    pub fn contains(&self, x: &State) -> bool {
        x.dim() == self.dimension()
            && (0..self.dimension()).all(|i| self.lower[i] <= x[i] && x[i] <= self.upper[i])
    }

    /// Draw each coordinate independently uniform within the bounds.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        State::new(
            (0..self.dimension())
                .map(|i| rng.random_range(self.lower[i]..self.upper[i]))
                .collect(),
        )
    }
}

/// Continuous state-cost function C: X -> R>=0.
#[derive(Clone)]
pub enum CostField {
    /// C(x) = 1 everywhere; the integral metric degenerates to path length.
    Constant,
    /// C(x) = 1 + 9 sum_i exp(-||c_i - x||^2) over the given centers.
    Potential { centers: Vec<State> },
    /// Arbitrary evaluator. Must be continuous, non-negative and callable
    /// from multiple threads.
    Custom(Arc<dyn Fn(&State) -> f64 + Send + Sync>),
}

impl CostField {
    pub fn value(&self, x: &State) -> f64 {
        match self {
            CostField::Constant => 1.0,
            CostField::Potential { centers } => {
                let bump: f64 = centers
                    .iter()
                    .map(|c| {
                        let d2: f64 =
                            c.0.iter().zip(&x.0).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-d2).exp()
                    })
                    .sum();
                1.0 + 9.0 * bump
            }
            CostField::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for CostField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostField::Constant => write!(f, "CostField::Constant"),
            CostField::Potential { centers } => {
                write!(f, "CostField::Potential({} centers)", centers.len())
            }
            CostField::Custom(_) => write!(f, "CostField::Custom"),
        }
    }
}

/// Evaluate the state cost with a bounds check.
pub fn state_cost(space: &SearchSpace, field: &CostField, x: &State) -> Result<f64> {
    if x.dim() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            actual: x.dim(),
        });
    }
    if !space.contains(x) {
        return Err(Error::OutOfBounds);
    }
    Ok(field.value(x))
}

/// Integral cost of the straight segment between `u` and `v`:
/// `||u - v|| * mean(C)` with a composite trapezoid over
/// `ceil(||u - v|| / resolution) + 1` quadrature points.
///
/// The endpoints are put in a canonical order first, so the float result is
/// bitwise identical for `(u, v)` and `(v, u)`.
pub fn edge_cost(field: &CostField, u: &State, v: &State, resolution: f64) -> f64 {
    assert_eq!(u.dim(), v.dim(), "edge_cost: dimension mismatch");
    debug_assert!(resolution > 0.0);
    if u == v {
        return 0.0;
    }
    let (a, b) = canonical_order(u, v);
    let dist = heuristic(a, b);
    let panels = (dist / resolution).ceil().max(1.0) as usize;
    dist * segment_mean_cost(field, a, b, panels)
}

/// Same metric with a caller-fixed panel count. Used where a perturbation
/// of one endpoint must not flip the ceil-based panel count mid-computation
/// (symmetric differencing of the local objective).
pub(crate) fn edge_cost_with_panels(
    field: &CostField,
    u: &State,
    v: &State,
    panels: usize,
) -> f64 {
    if u == v {
        return 0.0;
    }
    let (a, b) = canonical_order(u, v);
    let dist = heuristic(a, b);
    dist * segment_mean_cost(field, a, b, panels.max(1))
}

pub(crate) fn panel_count(dist: f64, resolution: f64) -> usize {
    (dist / resolution).ceil().max(1.0) as usize
}

fn canonical_order<'a>(u: &'a State, v: &'a State) -> (&'a State, &'a State) {
    if u.coords() <= v.coords() {
        (u, v)
    } else {
        (v, u)
    }
}

fn segment_mean_cost(field: &CostField, a: &State, b: &State, panels: usize) -> f64 {
    let mut sum = 0.5 * (field.value(a) + field.value(b));
    for i in 1..panels {
        sum += field.value(&interpolate(a, b, i as f64 / panels as f64));
    }
    sum / panels as f64
}

/// Axis-aligned hyper-rectangular obstacle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperRect {
    pub lower: State,
    pub upper: State,
}

impl HyperRect {
    pub fn new(lower: State, upper: State) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                actual: upper.dim(),
            });
        }
        for i in 0..lower.dim() {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidEnvironment(format!(
                    "degenerate obstacle on axis {i}"
                )));
            }
        }
        Ok(HyperRect { lower, upper })
    }

    pub fn contains(&self, x: &State) -> bool {
        (0..self.lower.dim()).all(|i| self.lower[i] <= x[i] && x[i] <= self.upper[i])
    }
}

/// Deterministic black-box collision model over hyper-rectangle obstacles,
/// validated at a fixed spatial resolution.
#[derive(Clone, Debug)]
pub struct CollisionModel {
    obstacles: Vec<HyperRect>,
    resolution: f64,
}

impl CollisionModel {
    pub fn new(obstacles: Vec<HyperRect>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidEnvironment(
                "collision resolution must be positive and finite".into(),
            ));
        }
        Ok(CollisionModel {
            obstacles,
            resolution,
        })
    }

    /// Model with no obstacles; every state is free.
    pub fn obstacle_free(resolution: f64) -> Self {
        CollisionModel::new(Vec::new(), resolution).expect("positive resolution")
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn obstacles(&self) -> &[HyperRect] {
        &self.obstacles
    }

    pub fn state_free(&self, x: &State) -> bool {
        !self.obstacles.iter().any(|o| o.contains(x))
    }
}

/// Validity of the straight segment between `u` and `v` at the model's
/// resolution: all `ceil(||u - v|| / resolution) + 1` equally spaced states
/// must be free. Endpoints are checked first, interior nodes in
/// midpoint-recursive order to fail fast. Obstacles thinner than half the
/// resolution can slip between nodes; that is the documented resolution
/// limit of any discretized validator.
pub fn is_segment_free(model: &CollisionModel, u: &State, v: &State) -> bool {
    if !model.state_free(u) || !model.state_free(v) {
        return false;
    }
    let dist = heuristic(u, v);
    if dist == 0.0 {
        return true;
    }
    let panels = panel_count(dist, model.resolution);
    let mut ranges = vec![(0usize, panels)];
    while let Some((lo, hi)) = ranges.pop() {
        if hi - lo < 2 {
            continue;
        }
        let mid = lo + (hi - lo) / 2;
        if !model.state_free(&interpolate(u, v, mid as f64 / panels as f64)) {
            return false;
        }
        ranges.push((lo, mid));
        ranges.push((mid, hi));
    }
    true
}

/// Euclidean-ball goal region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoalRegion {
    center: State,
    radius: f64,
}

impl GoalRegion {
    pub fn new(center: State, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidEnvironment(
                "goal radius must be positive and finite".into(),
            ));
        }
        Ok(GoalRegion { center, radius })
    }

    pub fn center(&self) -> &State {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &State) -> bool {
        heuristic(x, &self.center) <= self.radius
    }
}
