//! The planning loop: per-iteration sampler dispatch, extension, global
//! rewiring, solution tracking and metrics.
//!
//! One planner run is strictly single-threaded and, in iteration-budget
//! mode, bit-for-bit deterministic given the seed. Wall-clock readings feed
//! only the metrics timestamps and the time budget, never the algorithm.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::les::{fhat, les_sample, LesParams, RelevantQueue};
use crate::processing::{connection_radius, global_rewire_sweep, local_extend_connect};
use crate::samplers::{relevant_region_sample, InformedFrame};
use crate::space::{heuristic, GoalRegion, State};
use crate::tree::{Tree, VertexId};

/// Sampling strategy for a planner run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Uniform,
    Informed,
    #[serde(rename = "relevant")]
    RelevantRegion,
    Les,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] = [
        SamplerKind::Uniform,
        SamplerKind::Informed,
        SamplerKind::RelevantRegion,
        SamplerKind::Les,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Informed => "informed",
            SamplerKind::RelevantRegion => "relevant",
            SamplerKind::Les => "les",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::Uniform),
            "informed" => Ok(SamplerKind::Informed),
            "relevant" => Ok(SamplerKind::RelevantRegion),
            "les" => Ok(SamplerKind::Les),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampler '{other}' (expected uniform|informed|relevant|les)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub sampler: SamplerKind,
    /// Probability of the exploitative branch; doubles as the analogous
    /// probability for the relevant-region baseline.
    pub p_les: f64,
    /// Steering range (maximum edge length).
    pub eta: f64,
    /// Relevant-ball radius; 1.5 eta unless overridden.
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub goal_bias: f64,
    pub child_keep_prob: f64,
    /// Finite-difference half-step; 1e-6 eta unless overridden.
    pub fd_step: Option<f64>,
    pub time_budget: Option<f64>,
    pub iteration_budget: Option<u64>,
    pub seed: u64,
    /// Max queue pops per rewiring sweep; None drains the queue.
    pub rewire_budget: Option<usize>,
    /// Admit only vertices with g + h below the current solution cost to
    /// the rewiring queue.
    pub prune_rewire_queue: bool,
    /// Wall-clock metrics cadence (seconds) under a time budget.
    pub metrics_interval: f64,
    /// Metrics cadence (iterations) under an iteration budget.
    pub metrics_every_iters: u64,
    pub record_les_diagnostics: bool,
}

impl PlannerConfig {
    pub fn new(sampler: SamplerKind, eta: f64) -> Self {
        PlannerConfig {
            sampler,
            p_les: 0.5,
            eta,
            epsilon: None,
            delta: 1e-4,
            goal_bias: 0.05,
            child_keep_prob: 0.5,
            fd_step: None,
            time_budget: None,
            iteration_budget: None,
            seed: 0,
            rewire_budget: None,
            prune_rewire_queue: false,
            metrics_interval: 0.1,
            metrics_every_iters: 100,
            record_les_diagnostics: false,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1.5 * self.eta)
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step.unwrap_or(1e-6 * self.eta)
    }

    pub fn les_params(&self) -> Result<LesParams> {
        LesParams::new(
            self.p_les,
            self.epsilon(),
            self.delta,
            self.fd_step(),
            self.child_keep_prob,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidConfig("goal_bias must lie in [0, 1]".into()));
        }
        if self.time_budget.is_none() && self.iteration_budget.is_none() {
            return Err(Error::InvalidConfig(
                "either a time budget or an iteration budget must be set".into(),
            ));
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig("time budget must be positive".into()));
            }
        }
        if !(self.metrics_interval > 0.0) || self.metrics_every_iters == 0 {
            return Err(Error::InvalidConfig("metrics cadence must be positive".into()));
        }
        self.les_params()?;
        Ok(())
    }
}

/// One row of the metrics time series. `elapsed_s` is NaN in
/// iteration-budget mode, where wall-clock readings would break
/// reproducibility.
#[derive(Clone, Copy, Debug)]
pub struct MetricsRow {
    pub elapsed_s: f64,
    pub iterations: u64,
    pub best_cost: f64,
    pub rewires: u64,
}

/// One exploitative emission, for the diagnostics stream and the membership
/// checks in tests.
#[derive(Clone, Debug)]
pub struct LesDiagRow {
    pub iteration: u64,
    pub vertex: VertexId,
    pub subset_size: usize,
    pub gamma: f64,
    pub improved: bool,
    pub state: State,
    pub c_i: f64,
    pub fhat: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PlannerMetrics {
    pub rows: Vec<MetricsRow>,
    pub final_cost: f64,
    pub iterations: u64,
    pub rewires: u64,
    pub vertices: usize,
    /// Iterations that entered the exploitative (or relevant-region) branch.
    pub branch_iterations: u64,
    /// Branch iterations that fell back to informed sampling.
    pub branch_fallbacks: u64,
    pub path: Option<Vec<State>>,
    pub les_diagnostics: Vec<LesDiagRow>,
    pub wall_time_s: f64,
}

/// Cheapest cost-to-come among vertices inside the goal region; infinite
/// when the tree has not reached the goal.
pub fn best_solution_cost(tree: &Tree, goal: &GoalRegion) -> f64 {
    tree.ids()
        .filter(|&v| goal.contains(tree.vertex(v).state()))
        .map(|v| tree.vertex(v).g())
        .fold(f64::INFINITY, f64::min)
}

/// Root-to-goal state sequence of the best solution.
pub fn extract_path(tree: &Tree, goal: &GoalRegion) -> Result<Vec<State>> {
    let best = tree
        .ids()
        .filter(|&v| goal.contains(tree.vertex(v).state()))
        .map(|v| (tree.vertex(v).g(), v))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or(Error::NoSolution)?
        .1;
    let mut path = vec![best];
    let mut cur = best;
    while cur != tree.root() {
        cur = tree.vertex(cur).parent();
        path.push(cur);
    }
    path.reverse();
    Ok(path.into_iter().map(|v| tree.vertex(v).state().clone()).collect())
}

pub fn plan(env: &Environment, config: &PlannerConfig) -> Result<PlannerMetrics> {
    plan_with_tree(env, config).map(|(metrics, _)| metrics)
}

/// Run the loop and hand back the final tree alongside the metrics, for
/// post-hoc integrity checks.
pub fn plan_with_tree(
    env: &Environment,
    config: &PlannerConfig,
) -> Result<(PlannerMetrics, Tree)> {
    config.validate()?;
    env.validate()?;
    let params = config.les_params()?;
    let time_mode = config.time_budget.is_some();
    let resolution = env.resolution();

    let tree = Tree::new(env.start.clone());
    if env.goal.contains(&env.start) {
        // degenerate problem: the root already solves it
        let metrics = PlannerMetrics {
            rows: vec![MetricsRow {
                elapsed_s: if time_mode { 0.0 } else { f64::NAN },
                iterations: 0,
                best_cost: 0.0,
                rewires: 0,
            }],
            final_cost: 0.0,
            vertices: 1,
            path: Some(vec![env.start.clone()]),
            ..PlannerMetrics::default()
        };
        return Ok((metrics, tree));
    }
    let mut tree = tree;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let frame = InformedFrame::new(env.start.clone(), env.goal.center().clone())?;
    // The informed spheroid is built on the start-to-center distance, but a
    // solution only has to reach the goal ball, so its cost can undercut
    // that distance by up to the radius. Any state on a region-improving
    // path has ellipse norm below c_i + radius; sample at that threshold.
    let informed_cost = |c_i: f64| {
        if c_i.is_finite() {
            (c_i + env.goal.radius()).max(frame.c_min())
        } else {
            c_i
        }
    };
    let mut queue = RelevantQueue::new(env.goal.clone());
    let mut goal_vertices: Vec<VertexId> = Vec::new();

    let started = Instant::now();
    let mut metrics = PlannerMetrics {
        final_cost: f64::INFINITY,
        ..PlannerMetrics::default()
    };
    let mut last_rebuild_cost = f64::INFINITY;
    let mut last_row_cost = f64::INFINITY;
    let mut last_row_elapsed = -1.0f64;
    let mut iterations: u64 = 0;
    let mut rewires: u64 = 0;

    let out_of_budget = |iterations: u64, started: &Instant| {
        if let Some(limit) = config.iteration_budget {
            if iterations >= limit {
                return true;
            }
        }
        if let Some(limit) = config.time_budget {
            if started.elapsed().as_secs_f64() >= limit {
                return true;
            }
        }
        false
    };

    while !out_of_budget(iterations, &started) {
        iterations += 1;
        let c_i = current_best(&tree, &goal_vertices);
        queue.update_cost(c_i);
        if c_i.is_finite() && (!last_rebuild_cost.is_finite() || c_i < 0.99 * last_rebuild_cost) {
            queue.rebuild(&tree, c_i);
            last_rebuild_cost = c_i;
        }

        let branch_draw: f64 = rng.random();
        let exploitative = matches!(
            config.sampler,
            SamplerKind::Les | SamplerKind::RelevantRegion
        ) && branch_draw < config.p_les
            && c_i.is_finite();

        let x_rand = if exploitative {
            metrics.branch_iterations += 1;
            let proposal = match config.sampler {
                SamplerKind::Les => {
                    les_sample(&mut tree, &mut queue, env, &params, c_i, &mut rng).map(|em| {
                        if config.record_les_diagnostics {
                            metrics.les_diagnostics.push(LesDiagRow {
                                iteration: iterations,
                                vertex: em.vertex,
                                subset_size: em.subset_size,
                                gamma: em.gamma,
                                improved: em.improved,
                                state: em.state.clone(),
                                c_i,
                                fhat: fhat(
                                    &tree, em.vertex, &em.state, &env.cost, resolution, &env.goal,
                                ),
                            });
                        }
                        em.state
                    })
                }
                SamplerKind::RelevantRegion => {
                    relevant_region_sample(&mut tree, &mut queue, env, &params, c_i, &mut rng)
                }
                _ => unreachable!(),
            };
            match proposal {
                Some(x) => x,
                None => {
                    // exploitation had nothing to offer this iteration
                    metrics.branch_fallbacks += 1;
                    frame.sample(informed_cost(c_i), &env.space, &mut rng)?
                }
            }
        } else if rng.random::<f64>() < config.goal_bias {
            env.goal.center().clone()
        } else if config.sampler == SamplerKind::Uniform {
            env.space.sample_uniform(&mut rng)
        } else {
            frame.sample(informed_cost(c_i), &env.space, &mut rng)?
        };

        let radius = connection_radius(tree.len(), env.dimension(), config.eta, &env.space);
        if let Some(v_new) = local_extend_connect(&mut tree, env, &x_rand, radius, config.eta) {
            queue.offer(&tree, tree.vertex(v_new).parent());
            if env.goal.contains(tree.vertex(v_new).state()) {
                goal_vertices.push(v_new);
            }
            let prune = config.prune_rewire_queue.then_some(c_i);
            let swept = global_rewire_sweep(
                &mut tree,
                env,
                &[v_new],
                radius,
                config.rewire_budget,
                prune,
                |t, w| {
                    queue.offer(t, w);
                    queue.offer(t, t.vertex(w).parent());
                },
            );
            rewires += swept as u64;
        }

        // metrics row on improvement or at the configured cadence
        let cost_now = current_best(&tree, &goal_vertices);
        debug_assert!(cost_now <= c_i);
        let improved = cost_now < last_row_cost;
        let due = if time_mode {
            started.elapsed().as_secs_f64() - last_row_elapsed >= config.metrics_interval
        } else {
            iterations % config.metrics_every_iters == 0
        };
        if improved || due {
            let elapsed = if time_mode {
                let raw = started.elapsed().as_secs_f64();
                if raw > last_row_elapsed {
                    raw
                } else {
                    last_row_elapsed + 1e-9
                }
            } else {
                f64::NAN
            };
            metrics.rows.push(MetricsRow {
                elapsed_s: elapsed,
                iterations,
                best_cost: cost_now,
                rewires,
            });
            last_row_cost = cost_now;
            if time_mode {
                last_row_elapsed = elapsed;
            }
        }
    }

    let final_cost = current_best(&tree, &goal_vertices);
    debug_assert_eq!(final_cost, best_solution_cost(&tree, &env.goal));
    let needs_final_row = metrics
        .rows
        .last()
        .map(|row| row.iterations != iterations || row.best_cost != final_cost)
        .unwrap_or(true);
    if needs_final_row {
        let elapsed = if time_mode {
            let raw = started.elapsed().as_secs_f64();
            if raw > last_row_elapsed {
                raw
            } else {
                last_row_elapsed + 1e-9
            }
        } else {
            f64::NAN
        };
        metrics.rows.push(MetricsRow {
            elapsed_s: elapsed,
            iterations,
            best_cost: final_cost,
            rewires,
        });
    }

    metrics.final_cost = final_cost;
    metrics.iterations = iterations;
    metrics.rewires = rewires;
    metrics.vertices = tree.len();
    metrics.wall_time_s = started.elapsed().as_secs_f64();
    metrics.path = final_cost
        .is_finite()
        .then(|| extract_path(&tree, &env.goal))
        .transpose()?;
    Ok((metrics, tree))
}

fn current_best(tree: &Tree, goal_vertices: &[VertexId]) -> f64 {
    goal_vertices
        .iter()
        .map(|&v| tree.vertex(v).g())
        .fold(f64::INFINITY, f64::min)
}
