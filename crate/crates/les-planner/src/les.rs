//! Locally exploitative sampling.
//!
//! A sample is produced by (1) picking a relevant vertex from a weighted
//! max-heap, (2) forming a local objective over the vertex's parent edge and
//! a random subset of its child edges, weighted by how many cost-to-come
//! values each edge feeds into, (3) taking the numerical gradient of that
//! objective by symmetric differencing, and (4) choosing a randomized step
//! length certified to stay inside the vertex's relevant ball.

use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::space::{
    edge_cost, edge_cost_with_panels, heuristic, panel_count, CostField, GoalRegion, SearchSpace,
    State,
};
use crate::tree::{Tree, VertexId};

/// Tuning knobs for the exploitative sampler.
#[derive(Clone, Copy, Debug)]
pub struct LesParams {
    /// Probability of taking the exploitative branch once a solution exists.
    pub p_les: f64,
    /// Relevant-ball radius, 1.5x the steering range by default.
    pub epsilon: f64,
    /// Minimum useful step; below it the step sampler falls back to a fresh
    /// random draw to avoid clumping new vertices around the source.
    pub delta: f64,
    /// Finite-difference half-step for the symmetric difference.
    pub fd_step: f64,
    /// Per-child keep probability when drawing the random subset.
    pub child_keep_prob: f64,
}

impl LesParams {
    pub fn new(
        p_les: f64,
        epsilon: f64,
        delta: f64,
        fd_step: f64,
        child_keep_prob: f64,
    ) -> Result<Self> {
        for (name, p) in [("p_les", p_les), ("child_keep_prob", child_keep_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if !(delta > 0.0) || delta >= epsilon / 10.0 {
            return Err(Error::InvalidConfig(
                "delta must be positive and well below epsilon".into(),
            ));
        }
        if !(fd_step > 0.0) || fd_step >= delta {
            return Err(Error::InvalidConfig(
                "fd_step must be positive and below delta".into(),
            ));
        }
        Ok(LesParams {
            p_les,
            epsilon,
            delta,
            fd_step,
            child_keep_prob,
        })
    }

    /// Defaults derived from the steering range: epsilon = 1.5 eta,
    /// delta = 1e-4, fd_step = 1e-6 eta, both probabilities 0.5.
    pub fn for_range(eta: f64) -> Result<Self> {
        LesParams::new(0.5, 1.5 * eta, 1e-4, 1e-6 * eta, 0.5)
    }
}

/// Vertices that can still lie on a path better than the current solution:
/// `g(v) + h(v, goal) < c_i`.
pub fn relevant_vertices(tree: &Tree, c_i: f64, goal: &GoalRegion) -> Vec<VertexId> {
    tree.ids()
        .filter(|&v| {
            let vert = tree.vertex(v);
            vert.g() + heuristic(vert.state(), goal.center()) < c_i
        })
        .collect()
}

/// Estimated cost of the best solution through `x` when approached from `v`.
pub fn fhat(
    tree: &Tree,
    v: VertexId,
    x: &State,
    cost: &CostField,
    resolution: f64,
    goal: &GoalRegion,
) -> f64 {
    let vert = tree.vertex(v);
    edge_cost(cost, vert.state(), x, resolution) + vert.g() + heuristic(x, goal.center())
}

#[derive(Clone, Copy, Debug)]
struct QueueEntry {
    weight: f64,
    vertex: u32,
    stamp: u64,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap on weight, ties to the lowest vertex id
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| self.stamp.cmp(&other.stamp))
    }
}

#[derive(Clone, Copy, Default)]
struct Slot {
    stamp: u64,
    live: bool,
    weight: f64,
}

/// Max-heap over relevant vertices with lazily discarded stale entries.
///
/// Weights favor vertices on low estimated-cost paths and decay with
/// reselection: `q_v = exp(-(g + h - b) / sigma) / (1 + selections)` where
/// `b` is the best g + h seen at the last rebuild and `sigma = c_i - b`.
/// Entries whose stored weight no longer matches are re-inserted fresh on
/// pop, so weight drift self-heals without global rebuilds.
pub struct RelevantQueue {
    heap: BinaryHeap<QueueEntry>,
    slots: Vec<Slot>,
    goal: GoalRegion,
    c_i: f64,
    base: f64,
    sigma: f64,
}

impl RelevantQueue {
    pub fn new(goal: GoalRegion) -> Self {
        RelevantQueue {
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            goal,
            c_i: f64::INFINITY,
            base: 0.0,
            sigma: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Refresh the solution-cost threshold without touching the heap.
    pub fn update_cost(&mut self, c_i: f64) {
        self.c_i = c_i;
    }

    /// Recompute the weight normalization and re-enqueue every eligible
    /// relevant vertex.
    pub fn rebuild(&mut self, tree: &Tree, c_i: f64) {
        self.c_i = c_i;
        self.heap.clear();
        self.slots.clear();
        self.slots.resize(tree.len(), Slot::default());
        if !c_i.is_finite() {
            return;
        }
        let relevant = relevant_vertices(tree, c_i, &self.goal);
        let Some(best) = relevant
            .iter()
            .map(|&v| {
                let vert = tree.vertex(v);
                vert.g() + heuristic(vert.state(), self.goal.center())
            })
            .min_by(f64::total_cmp)
        else {
            return;
        };
        self.base = best;
        self.sigma = (c_i - best).max(f64::MIN_POSITIVE);
        for v in relevant {
            self.offer(tree, v);
        }
    }

    /// Enqueue `v` if it is relevant and selectable (not the root, not a
    /// leaf, not inside the goal region) and not already queued at its
    /// current weight.
    pub fn offer(&mut self, tree: &Tree, v: VertexId) {
        if self.slots.len() < tree.len() {
            self.slots.resize(tree.len(), Slot::default());
        }
        if !self.eligible(tree, v) || !self.relevant(tree, v) {
            return;
        }
        let weight = self.weight_of(tree, v);
        let slot = &mut self.slots[v.index()];
        if slot.live && slot.weight == weight {
            return;
        }
        slot.stamp += 1;
        slot.live = true;
        slot.weight = weight;
        self.heap.push(QueueEntry {
            weight,
            vertex: v.0,
            stamp: slot.stamp,
        });
    }

    /// Enqueue every selectable vertex in the subtree under `v`; used after
    /// a rewire dropped the subtree's cost-to-come.
    pub fn offer_subtree(&mut self, tree: &Tree, v: VertexId) {
        for u in tree.subtree(v) {
            self.offer(tree, u);
        }
    }

    fn relevant(&self, tree: &Tree, v: VertexId) -> bool {
        let vert = tree.vertex(v);
        vert.g() + heuristic(vert.state(), self.goal.center()) < self.c_i
    }

    fn eligible(&self, tree: &Tree, v: VertexId) -> bool {
        v != tree.root()
            && !tree.vertex(v).is_leaf()
            && !self.goal.contains(tree.vertex(v).state())
    }

    fn weight_of(&self, tree: &Tree, v: VertexId) -> f64 {
        let vert = tree.vertex(v);
        let key = vert.g() + heuristic(vert.state(), self.goal.center());
        (-(key - self.base) / self.sigma).exp() / (1.0 + vert.selection_count() as f64)
    }

    fn pop_fresh(&mut self, tree: &Tree) -> Option<VertexId> {
        while let Some(entry) = self.heap.pop() {
            let v = VertexId(entry.vertex);
            let slot = &mut self.slots[v.index()];
            if !slot.live || slot.stamp != entry.stamp {
                continue; // superseded entry
            }
            slot.live = false;
            if !self.relevant(tree, v) || !self.eligible(tree, v) {
                continue; // dropped; an offer() event re-admits it later
            }
            let current = self.weight_of(tree, v);
            if current != entry.weight {
                self.offer(tree, v); // weight drifted, requeue and keep looking
                continue;
            }
            return Some(v);
        }
        None
    }
}

/// Pop the best selectable relevant vertex, charge one selection against it
/// and requeue it at the decayed weight. `None` means nothing is selectable.
pub fn choose_vertex(queue: &mut RelevantQueue, tree: &mut Tree) -> Option<VertexId> {
    let v = queue.pop_fresh(tree)?;
    tree.bump_selection(v);
    queue.offer(tree, v);
    Some(v)
}

/// Local exploitation objective at `candidate` standing in for `v`'s
/// position: the parent edge weighted by one plus the truncated descendant
/// count, plus each selected child edge weighted by one plus that child's
/// child count. Constant terms are dropped; argmins are unaffected.
pub fn jhat(
    tree: &Tree,
    v: VertexId,
    candidate: &State,
    subset: &[VertexId],
    cost: &CostField,
    resolution: f64,
) -> Result<f64> {
    if v == tree.root() {
        return Err(Error::RootVertex);
    }
    let dh = tree.dhat(v, subset)? as f64;
    let parent_state = tree.vertex(tree.vertex(v).parent()).state();
    let mut total = (1.0 + dh) * edge_cost(cost, parent_state, candidate, resolution);
    for &u in subset {
        let child = tree.vertex(u);
        total += (1.0 + child.child_count() as f64)
            * edge_cost(cost, candidate, child.state(), resolution);
    }
    Ok(total)
}

/// Independent keep/drop draw per child; an empty result falls back to one
/// uniformly chosen child so the objective always involves a child edge.
pub fn random_child_subset<R: Rng + ?Sized>(
    tree: &Tree,
    v: VertexId,
    keep_prob: f64,
    rng: &mut R,
) -> Result<Vec<VertexId>> {
    let children = tree
        .get(v)
        .ok_or(Error::UnknownVertex(v))?
        .children()
        .to_vec();
    if children.is_empty() {
        return Err(Error::LeafVertex(v));
    }
    let mut subset: Vec<VertexId> = children
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < keep_prob)
        .collect();
    if subset.is_empty() {
        subset.push(children[rng.random_range(0..children.len())]);
    }
    Ok(subset)
}

/// `state - gamma * direction`.
pub(crate) fn offset_along(state: &State, direction: &State, gamma: f64) -> State {
    State::new(
        state
            .coords()
            .iter()
            .zip(direction.coords())
            .map(|(s, e)| s - gamma * e)
            .collect(),
    )
}

/// Unit gradient of the local objective at `v`, from per-axis symmetric
/// differences. Returns `None` at a numerically stationary point.
///
/// The trapezoid panel count of every edge is frozen at its unperturbed
/// value while differencing; otherwise the ceil-based count could flip
/// across the +/- evaluations and swamp the difference with quadrature
/// discretization jumps.
pub fn gradient_direction(
    tree: &Tree,
    v: VertexId,
    subset: &[VertexId],
    cost: &CostField,
    resolution: f64,
    fd_step: f64,
) -> Result<Option<State>> {
    if v == tree.root() {
        return Err(Error::RootVertex);
    }
    let state = tree.vertex(v).state().clone();
    let d = state.dim();
    let parent_coeff = 1.0 + tree.dhat(v, subset)? as f64;
    let parent_state = tree.vertex(tree.vertex(v).parent()).state().clone();
    let parent_panels = panel_count(heuristic(&parent_state, &state), resolution);
    let children: Vec<(State, f64, usize)> = subset
        .iter()
        .map(|&u| {
            let child = tree.vertex(u);
            let cs = child.state().clone();
            let panels = panel_count(heuristic(&cs, &state), resolution);
            (cs, 1.0 + child.child_count() as f64, panels)
        })
        .collect();

    let mut grad = vec![0.0; d];
    let mut probe = state.coords().to_vec();
    for axis in 0..d {
        let center = probe[axis];
        probe[axis] = center + fd_step;
        let plus = State::new(probe.clone());
        probe[axis] = center - fd_step;
        let minus = State::new(probe.clone());
        probe[axis] = center;

        let mut diff = parent_coeff
            * (edge_cost_with_panels(cost, &parent_state, &plus, parent_panels)
                - edge_cost_with_panels(cost, &parent_state, &minus, parent_panels));
        for (cs, coeff, panels) in &children {
            diff += coeff
                * (edge_cost_with_panels(cost, &plus, cs, *panels)
                    - edge_cost_with_panels(cost, &minus, cs, *panels));
        }
        grad[axis] = diff / (2.0 * fd_step);
    }
    let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Ok(None);
    }
    Ok(Some(State::new(grad.iter().map(|x| x / norm).collect())))
}

/// Largest step along `-ehat` (up to the ball radius `epsilon`, clipped to
/// the bounds) that keeps the candidate inside `v`'s relevant ball, found by
/// bisecting the feasibility predicate for 20 iterations. Only the returned
/// probe itself is certified feasible. Returns 0 when even a `delta` step
/// is infeasible.
#[allow(clippy::too_many_arguments)]
pub fn max_step_size(
    tree: &Tree,
    v: VertexId,
    ehat: &State,
    c_i: f64,
    space: &SearchSpace,
    cost: &CostField,
    resolution: f64,
    goal: &GoalRegion,
    epsilon: f64,
    delta: f64,
) -> f64 {
    let state = tree.vertex(v).state();
    let mut hi = epsilon;
    for i in 0..state.dim() {
        let e = ehat[i];
        if e > 0.0 {
            hi = hi.min((state[i] - space.lower()[i]) / e);
        } else if e < 0.0 {
            hi = hi.min((state[i] - space.upper()[i]) / e);
        }
    }
    if !(hi > 0.0) {
        return 0.0;
    }
    let feasible = |gamma: f64| {
        let x = offset_along(state, ehat, gamma);
        space.contains(&x) && fhat(tree, v, &x, cost, resolution, goal) < c_i
    };
    if feasible(hi) {
        return hi;
    }
    if hi <= delta || !feasible(delta) {
        return 0.0;
    }
    let mut lo = delta;
    let mut hi = hi;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Randomized step length along `-ehat`, biased towards the current upper
/// limit by the `u^(1/d)` draw. Probes shrink the limit until one improves
/// the local objective; if the limit collapses below `delta`, a fresh draw
/// over the whole interval is returned instead so new vertices do not clump
/// around `v`. The flag reports whether the improvement branch returned.
#[allow(clippy::too_many_arguments)]
pub fn step_size<R: Rng + ?Sized>(
    tree: &Tree,
    v: VertexId,
    ehat: &State,
    gamma_rel: f64,
    subset: &[VertexId],
    cost: &CostField,
    resolution: f64,
    delta: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let state = tree.vertex(v).state().clone();
    let d = state.dim() as f64;
    let j_here = jhat(tree, v, &state, subset, cost, resolution)?;
    let mut gamma_max = gamma_rel;
    while gamma_max > delta {
        let u: f64 = rng.random();
        let gamma = u.powf(1.0 / d) * gamma_max;
        let candidate = offset_along(&state, ehat, gamma);
        if jhat(tree, v, &candidate, subset, cost, resolution)? < j_here {
            return Ok((gamma, true));
        }
        gamma_max = gamma;
    }
    let u: f64 = rng.random();
    Ok((u.powf(1.0 / d) * gamma_rel, false))
}

/// One emitted sample with its provenance, for diagnostics and tests.
#[derive(Clone, Debug)]
pub struct LesEmission {
    pub vertex: VertexId,
    pub state: State,
    pub gamma: f64,
    pub gamma_rel: f64,
    pub subset_size: usize,
    pub improved: bool,
}

/// Full sampling pipeline: choose a vertex, draw the child subset, descend
/// the local objective inside the relevant ball. `None` tells the caller to
/// fall back to informed sampling (no selectable vertex, degenerate
/// gradient, or no room to move).
pub fn les_sample<R: Rng + ?Sized>(
    tree: &mut Tree,
    queue: &mut RelevantQueue,
    env: &crate::env::Environment,
    params: &LesParams,
    c_i: f64,
    rng: &mut R,
) -> Option<LesEmission> {
    let resolution = env.resolution();
    let v = choose_vertex(queue, tree)?;
    let subset = random_child_subset(tree, v, params.child_keep_prob, rng)
        .expect("selected vertex has children");
    let ehat = gradient_direction(tree, v, &subset, &env.cost, resolution, params.fd_step)
        .expect("selected vertex is not the root")?;
    let gamma_rel = max_step_size(
        tree,
        v,
        &ehat,
        c_i,
        &env.space,
        &env.cost,
        resolution,
        &env.goal,
        params.epsilon,
        params.delta,
    );
    if gamma_rel <= 0.0 {
        return None;
    }
    let (gamma, improved) = step_size(
        tree,
        v,
        &ehat,
        gamma_rel,
        &subset,
        &env.cost,
        resolution,
        params.delta,
        rng,
    )
    .expect("objective evaluates on a selected vertex");
    let state = offset_along(tree.vertex(v).state(), &ehat, gamma);
    Some(LesEmission {
        vertex: v,
        state,
        gamma,
        gamma_rel,
        subset_size: subset.len(),
        improved,
    })
}
