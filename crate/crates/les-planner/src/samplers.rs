//! Baseline sample generators: goal-biased uniform sampling, uniform
//! sampling over the informed prolate hyperspheroid, and random sampling in
//! the relevant region.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::les::{choose_vertex, fhat, LesParams, RelevantQueue};
use crate::space::{heuristic, GoalRegion, SearchSpace, State};
use crate::tree::Tree;

/// Uniform point in the ball of `radius` around `center`: isotropic
/// Gaussian direction scaled by `u^(1/d)`. Exact and rejection-free in any
/// dimension.
pub fn sample_in_ball<R: Rng + ?Sized>(center: &State, radius: f64, rng: &mut R) -> State {
    let dir = unit_ball_point(center.dim(), rng);
    State::new(
        center
            .coords()
            .iter()
            .zip(&dir)
            .map(|(c, z)| c + radius * z)
            .collect(),
    )
}

pub(crate) fn unit_ball_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut dir: Vec<f64>;
    let mut norm;
    loop {
        dir = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            break;
        }
    }
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    dir.iter_mut().for_each(|x| *x *= r / norm);
    dir
}

/// Geometry of the informed set for a start/goal pair: the prolate
/// hyperspheroid `{x : ||x - start|| + ||x - goal|| <= c}` with the foci on
/// its transverse axis.
#[derive(Clone, Debug)]
pub struct InformedFrame {
    start: State,
    goal: State,
    center: State,
    c_min: f64,
    /// Orthonormal, first column aligned with goal - start. Built from one
    /// Householder reflection, so orthonormality holds to machine
    /// precision.
    rotation: Vec<Vec<f64>>,
}

impl InformedFrame {
    pub fn new(start: State, goal: State) -> Result<Self> {
        if start.dim() != goal.dim() {
            return Err(Error::DimensionMismatch {
                expected: start.dim(),
                actual: goal.dim(),
            });
        }
        let c_min = heuristic(&start, &goal);
        if c_min <= 0.0 {
            return Err(Error::InvalidEnvironment(
                "informed frame needs distinct start and goal".into(),
            ));
        }
        let d = start.dim();
        let center = State::new(
            start
                .coords()
                .iter()
                .zip(goal.coords())
                .map(|(s, g)| 0.5 * (s + g))
                .collect(),
        );
        let axis: Vec<f64> = goal
            .coords()
            .iter()
            .zip(start.coords())
            .map(|(g, s)| (g - s) / c_min)
            .collect();
        let rotation = householder_aligning_first_axis(d, &axis);
        Ok(InformedFrame {
            start,
            goal,
            center,
            c_min,
            rotation,
        })
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn rotation(&self) -> &[Vec<f64>] {
        &self.rotation
    }

    /// Ellipse-norm membership at threshold `c`.
    pub fn contains(&self, x: &State, c: f64) -> bool {
        heuristic(x, &self.start) + heuristic(x, &self.goal) <= c
    }

    /// Uniform sample from the informed set at cost `c_i`, intersected with
    /// the bounds. With no solution yet (`c_i` infinite) this is plain
    /// uniform sampling. Out-of-bounds draws are retried inside the
    /// spheroid up to 100 times, then the sampler falls back to
    /// uniform-in-bounds.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        c_i: f64,
        space: &SearchSpace,
        rng: &mut R,
    ) -> Result<State> {
        if !c_i.is_finite() {
            return Ok(space.sample_uniform(rng));
        }
        if c_i < self.c_min {
            return Err(Error::CostBelowMinimum {
                cost: c_i,
                minimum: self.c_min,
            });
        }
        let d = self.start.dim();
        let r_transverse = 0.5 * c_i;
        let r_conjugate = 0.5 * (c_i * c_i - self.c_min * self.c_min).max(0.0).sqrt();
        for _ in 0..100 {
            let ball = unit_ball_point(d, rng);
            let mut stretched = ball;
            stretched[0] *= r_transverse;
            for z in stretched.iter_mut().skip(1) {
                *z *= r_conjugate;
            }
            let x = State::new(
                (0..d)
                    .map(|i| {
                        self.center[i]
                            + (0..d).map(|j| self.rotation[i][j] * stretched[j]).sum::<f64>()
                    })
                    .collect(),
            );
            if space.contains(&x) {
                return Ok(x);
            }
        }
        Ok(space.sample_uniform(rng))
    }
}

/// Orthonormal matrix (rows indexed first) whose first column equals
/// `axis`, from the reflection that maps e1 onto `axis`.
fn householder_aligning_first_axis(d: usize, axis: &[f64]) -> Vec<Vec<f64>> {
    let mut w: Vec<f64> = axis.to_vec();
    w[0] -= 1.0;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let mut rotation = vec![vec![0.0; d]; d];
    if ww < 1e-24 {
        for (i, row) in rotation.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        return rotation;
    }
    for i in 0..d {
        for j in 0..d {
            let identity = if i == j { 1.0 } else { 0.0 };
            rotation[i][j] = identity - 2.0 * w[i] * w[j] / ww;
        }
    }
    rotation
}

/// With probability `bias`, propose the goal center; otherwise defer to the
/// wrapped sampler.
pub fn goal_biased<R, F>(goal: &GoalRegion, bias: f64, rng: &mut R, inner: F) -> State
where
    R: Rng + ?Sized,
    F: FnOnce(&mut R) -> State,
{
    if rng.random::<f64>() < bias {
        goal.center().clone()
    } else {
        inner(rng)
    }
}

/// Relevant-region baseline: same vertex selection as the exploitative
/// sampler, but the sample is drawn uniformly from the vertex's relevant
/// ball instead of descending the local objective. Up to 20 rejections
/// against the ball predicate, then `None`.
pub fn relevant_region_sample<R: Rng + ?Sized>(
    tree: &mut Tree,
    queue: &mut RelevantQueue,
    env: &Environment,
    params: &LesParams,
    c_i: f64,
    rng: &mut R,
) -> Option<State> {
    let v = choose_vertex(queue, tree)?;
    let center = tree.vertex(v).state().clone();
    for _ in 0..20 {
        let x = sample_in_ball(&center, params.epsilon, rng);
        if env.space.contains(&x)
            && fhat(tree, v, &x, &env.cost, env.resolution(), &env.goal) < c_i
        {
            return Some(x);
        }
    }
    None
}
