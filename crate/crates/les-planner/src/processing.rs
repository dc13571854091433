//! Graph processing: steering, best-parent extension and the global
//! cost-to-come rewiring sweep.
//!
//! The sweep is a value iteration over a min-queue keyed by g + h. Whenever
//! a vertex's cost-to-come improves, it and its whole subtree re-enter the
//! queue, so at drain no near-pair with a free edge can still be improved.

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use crate::env::Environment;
use crate::error::Error;
use crate::space::{edge_cost, heuristic, interpolate, is_segment_free, State};
use crate::tree::{Tree, VertexId};

/// Pull `to` back to at most `eta` away from `from`.
pub fn steer(from: &State, to: &State, eta: f64) -> State {
    let dist = heuristic(from, to);
    if dist <= eta {
        to.clone()
    } else {
        interpolate(from, to, eta / dist)
    }
}

/// Extend the tree towards `x_new`: steer to within `eta` of the nearest
/// vertex, then attach under the collision-free near neighbor minimizing
/// g(parent) + edge cost (nearest as fallback when the near set is empty).
/// `None` when the extension fails; iteration just continues.
pub fn local_extend_connect(
    tree: &mut Tree,
    env: &Environment,
    x_new: &State,
    r: f64,
    eta: f64,
) -> Option<VertexId> {
    let (nearest, dist) = tree.nearest(x_new);
    let x = if dist > eta {
        interpolate(tree.vertex(nearest).state(), x_new, eta / dist)
    } else {
        x_new.clone()
    };
    if !env.collision.state_free(&x) {
        return None;
    }
    let (anchor, anchor_dist) = tree.nearest(&x);
    if anchor_dist == 0.0 {
        return None; // the state is already a vertex
    }
    let mut candidates = tree.near(&x, r);
    if candidates.is_empty() {
        candidates.push((anchor, anchor_dist));
    }
    let resolution = env.resolution();
    let mut best: Option<(VertexId, f64, f64)> = None; // (parent, edge, total)
    for (u, _) in candidates {
        let edge = edge_cost(&env.cost, tree.vertex(u).state(), &x, resolution);
        let total = tree.vertex(u).g() + edge;
        let better = match best {
            None => true,
            Some((bid, _, btotal)) => total < btotal || (total == btotal && u < bid),
        };
        if better && is_segment_free(&env.collision, tree.vertex(u).state(), &x) {
            best = Some((u, edge, total));
        }
    }
    let (parent, edge, _) = best?;
    Some(
        tree.add_vertex(x, parent, edge)
            .expect("parent comes from this tree"),
    )
}

/// Value-iteration sweep propagating cost-to-come improvements from `seeds`
/// through near-neighbor candidate edges until the queue drains (or `budget`
/// pops are spent). Edge feasibility and cost are evaluated on demand and
/// memoized per ordered pair for the duration of the sweep. Returns the
/// number of rewires performed.
pub fn global_rewire(
    tree: &mut Tree,
    env: &Environment,
    seeds: &[VertexId],
    r: f64,
    budget: Option<usize>,
) -> usize {
    global_rewire_sweep(tree, env, seeds, r, budget, None, |_, _| {})
}

/// Full-control variant: `prune_below` drops queue admissions whose g + h
/// reaches the given cost, and `on_rewire` observes every vertex whose
/// cost-to-come changed (the rewired vertex and its subtree).
pub fn global_rewire_sweep(
    tree: &mut Tree,
    env: &Environment,
    seeds: &[VertexId],
    r: f64,
    budget: Option<usize>,
    prune_below: Option<f64>,
    mut on_rewire: impl FnMut(&Tree, VertexId),
) -> usize {
    let goal_center = env.goal.center();
    let key_of = |tree: &Tree, v: VertexId| {
        let vert = tree.vertex(v);
        vert.g() + heuristic(vert.state(), goal_center)
    };
    let admissible = |key: f64| match prune_below {
        Some(ci) => key < ci,
        None => true,
    };

    let mut queue: BinaryHeap<Reverse<(OrderedKey, u32)>> = BinaryHeap::new();
    for &s in seeds {
        let key = key_of(tree, s);
        if admissible(key) {
            queue.push(Reverse((OrderedKey(key), s.0)));
        }
    }

    let resolution = env.resolution();
    let mut edge_memo: HashMap<(u32, u32), Option<f64>> = HashMap::new();
    let mut rewires = 0usize;
    let mut pops = 0usize;

    while let Some(Reverse((OrderedKey(key), raw))) = queue.pop() {
        let v = VertexId(raw);
        if key != key_of(tree, v) {
            continue; // stale entry, the vertex was re-queued with a new key
        }
        if let Some(max_pops) = budget {
            if pops >= max_pops {
                break;
            }
        }
        pops += 1;
        let near = tree.near(tree.vertex(v).state(), r);
        for (u, _) in near {
            if u == v {
                continue;
            }
            let edge = *edge_memo.entry((v.0, u.0)).or_insert_with(|| {
                let a = tree.vertex(v).state();
                let b = tree.vertex(u).state();
                is_segment_free(&env.collision, a, b)
                    .then(|| edge_cost(&env.cost, a, b, resolution))
            });
            let Some(cost) = edge else { continue };
            if tree.vertex(v).g() + cost < tree.vertex(u).g() - 1e-12 {
                match tree.rewire(u, v, cost) {
                    Ok(_) => {
                        rewires += 1;
                        for w in tree.subtree(u) {
                            on_rewire(tree, w);
                            let wkey = key_of(tree, w);
                            if admissible(wkey) {
                                queue.push(Reverse((OrderedKey(wkey), w.0)));
                            }
                        }
                    }
                    Err(Error::RewireCycle { .. }) => {}
                    Err(e) => unreachable!("rewire invariant violated: {e}"),
                }
            }
        }
    }
    rewires
}

/// Shrinking RRT*-family connection radius
/// `min(eta, gamma_d (log n / n)^(1/d))` with
/// `gamma_d = 2 (1 + 1/d)^(1/d) (mu / zeta_d)^(1/d)`, `zeta_d` the unit
/// ball volume. The log term is capped so tiny trees use the full range.
pub fn connection_radius(n: usize, d: usize, eta: f64, space: &crate::space::SearchSpace) -> f64 {
    if n <= 1 {
        return eta;
    }
    let nf = n as f64;
    let df = d as f64;
    let gamma =
        2.0 * (1.0 + 1.0 / df).powf(1.0 / df) * (space.measure() / unit_ball_volume(d)).powf(1.0 / df);
    eta.min(gamma * (nf.ln() / nf).powf(1.0 / df))
}

/// Volume of the d-dimensional unit ball via the two-step recurrence.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut volume = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        volume *= std::f64::consts::TAU / k as f64;
        k += 2;
    }
    volume
}

#[derive(PartialEq)]
struct OrderedKey(f64);

impl Eq for OrderedKey {}

impl PartialOrd for OrderedKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{CostField, SearchSpace};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(coords: &[f64]) -> State {
        State::new(coords.to_vec())
    }

    fn open_env() -> Environment {
        Environment::from_json(
            r#"{
                "dimension": 2,
                "lower": [-10.0, -10.0],
                "upper": [10.0, 10.0],
                "cost": {"kind": "constant"},
                "start": [0.0, 0.0],
                "goal": [8.0, 0.0],
                "goal_radius": 0.5,
                "resolution": 0.05,
                "eta": 1.0
            }"#,
            "open",
        )
        .unwrap()
    }

    fn walled_env() -> Environment {
        Environment::from_json(
            r#"{
                "dimension": 2,
                "lower": [-10.0, -10.0],
                "upper": [10.0, 10.0],
                "cost": {"kind": "constant"},
                "obstacles": [{"lower": [2.0, -4.0], "upper": [3.0, 4.0]}],
                "start": [0.0, 0.0],
                "goal": [8.0, 0.0],
                "goal_radius": 0.5,
                "resolution": 0.05,
                "eta": 1.0
            }"#,
            "walled",
        )
        .unwrap()
    }

    #[test]
    fn steer_respects_the_range() {
        let from = st(&[0.0, 0.0]);
        let to = st(&[3.0, 4.0]);
        let pulled = steer(&from, &to, 1.0);
        assert!((heuristic(&from, &pulled) - 1.0).abs() < 1e-12);
        let kept = steer(&from, &to, 10.0);
        assert_eq!(kept, to);
    }

    #[test]
    fn extend_attaches_visible_sample_to_single_vertex_tree() {
        let env = open_env();
        let mut tree = Tree::new(env.start.clone());
        let v = local_extend_connect(&mut tree, &env, &st(&[0.5, 0.5]), 1.0, 1.0).unwrap();
        assert_eq!(tree.vertex(v).parent(), tree.root());
        assert_eq!(tree.len(), 2);
    }

    #[test]
    fn extend_rejects_samples_inside_obstacles() {
        let env = walled_env();
        let mut tree = Tree::new(env.start.clone());
        // steered point stays within the wall: extension fails
        tree.add_vertex(st(&[2.5, 5.0]), tree.root(), 5.59).unwrap();
        let got = local_extend_connect(&mut tree, &env, &st(&[2.5, 3.9]), 1.0, 1.0);
        assert!(got.is_none());
    }

    #[test]
    fn extend_picks_the_cheapest_visible_parent() {
        let env = open_env();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut tree = Tree::new(env.start.clone());
        for _ in 0..150 {
            let x = env.space.sample_uniform(&mut rng);
            local_extend_connect(&mut tree, &env, &x, 1.2, 1.0);
        }
        for _ in 0..50 {
            let x = env.space.sample_uniform(&mut rng);
            let before = tree.len();
            let Some(v) = local_extend_connect(&mut tree, &env, &x, 1.2, 1.0) else {
                continue;
            };
            assert_eq!(tree.len(), before + 1);
            // brute-force oracle over the same candidate set
            let xs = tree.vertex(v).state().clone();
            let near: Vec<VertexId> = tree
                .near(&xs, 1.2)
                .into_iter()
                .map(|(id, _)| id)
                .filter(|&id| id != v)
                .collect();
            let best = near
                .iter()
                .filter(|&&u| is_segment_free(&env.collision, tree.vertex(u).state(), &xs))
                .map(|&u| {
                    let e = edge_cost(&env.cost, tree.vertex(u).state(), &xs, 0.05);
                    (tree.vertex(u).g() + e, u)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap();
            assert_eq!(tree.vertex(v).parent(), best.1);
        }
    }

    #[test]
    fn consistent_tree_needs_no_rewires() {
        let env = open_env();
        let mut tree = Tree::new(env.start.clone());
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        tree.add_vertex(st(&[2.0, 0.0]), a, 1.0).unwrap();
        let n = global_rewire(&mut tree, &env, &[a], 3.0, None);
        assert_eq!(n, 0);
        assert_eq!(tree.rewire_count(), 0);
    }

    #[test]
    fn triangle_shortcut_rewires_exactly_once() {
        let env = open_env();
        let mut tree = Tree::new(env.start.clone());
        // detour root -> a -> b, then c offers b a direct shortcut
        let a = tree.add_vertex(st(&[0.0, 2.0]), tree.root(), 2.0).unwrap();
        let b = tree.add_vertex(st(&[2.0, 2.0]), a, 2.0).unwrap();
        let c = tree.add_vertex(st(&[1.0, 1.0]), tree.root(), 2f64.sqrt()).unwrap();
        let n = global_rewire(&mut tree, &env, &[c], 2.0, None);
        assert_eq!(n, 1);
        assert_eq!(tree.vertex(b).parent(), c);
        let expected = 2f64.sqrt() + 2f64.sqrt();
        assert!((tree.vertex(b).g() - expected).abs() < 1e-9);
    }

    #[test]
    fn sweep_reaches_a_consistent_fixed_point() {
        let env = open_env();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut tree = Tree::new(env.start.clone());
        // grow a deliberately suboptimal tree: nearest-only attachment
        while tree.len() < 300 {
            let x = env.space.sample_uniform(&mut rng);
            let (nearest, dist) = tree.nearest(&x);
            let x = if dist > 1.0 {
                interpolate(tree.vertex(nearest).state(), &x, 1.0 / dist)
            } else {
                x
            };
            if tree.nearest(&x).1 == 0.0 {
                continue;
            }
            let e = edge_cost(&env.cost, tree.vertex(nearest).state(), &x, 0.05);
            tree.add_vertex(x, nearest, e).unwrap();
        }
        let r = 1.0;
        let seeds: Vec<VertexId> = tree.ids().collect();
        let swept = global_rewire(&mut tree, &env, &seeds, r, None);
        assert!(swept > 0, "random nearest-only tree should be improvable");
        // exhaustive pairwise consistency scan
        for v in tree.ids() {
            for (u, _) in tree.near(tree.vertex(v).state(), r) {
                if u == v {
                    continue;
                }
                if !is_segment_free(&env.collision, tree.vertex(v).state(), tree.vertex(u).state())
                {
                    continue;
                }
                let cost = edge_cost(
                    &env.cost,
                    tree.vertex(v).state(),
                    tree.vertex(u).state(),
                    0.05,
                );
                assert!(
                    tree.vertex(v).g() + cost >= tree.vertex(u).g() - 1e-9,
                    "improvable pair survived the sweep"
                );
            }
        }
        // acyclic: every vertex still reaches the root
        for id in tree.ids() {
            let mut cur = id;
            let mut hops = 0;
            while cur != tree.root() {
                cur = tree.vertex(cur).parent();
                hops += 1;
                assert!(hops <= tree.len());
            }
        }
    }

    #[test]
    fn sweep_never_raises_cost_to_come() {
        let env = open_env();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let mut tree = Tree::new(env.start.clone());
        while tree.len() < 150 {
            let x = env.space.sample_uniform(&mut rng);
            let (nearest, dist) = tree.nearest(&x);
            let x = if dist > 1.0 {
                interpolate(tree.vertex(nearest).state(), &x, 1.0 / dist)
            } else {
                x
            };
            if tree.nearest(&x).1 == 0.0 {
                continue;
            }
            let e = edge_cost(&env.cost, tree.vertex(nearest).state(), &x, 0.05);
            tree.add_vertex(x, nearest, e).unwrap();
        }
        let before: Vec<f64> = tree.ids().map(|v| tree.vertex(v).g()).collect();
        let seeds: Vec<VertexId> = tree.ids().collect();
        let swept = global_rewire(&mut tree, &env, &seeds, 0.8, None);
        for v in tree.ids() {
            assert!(tree.vertex(v).g() <= before[v.index()] + 1e-12);
        }
        assert_eq!(swept as u64, tree.rewire_count());
    }

    #[test]
    fn budget_limits_queue_pops() {
        let env = open_env();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let mut tree = Tree::new(env.start.clone());
        while tree.len() < 100 {
            let x = env.space.sample_uniform(&mut rng);
            let (nearest, _) = tree.nearest(&x);
            if tree.nearest(&x).1 == 0.0 {
                continue;
            }
            let e = edge_cost(&env.cost, tree.vertex(nearest).state(), &x, 0.05);
            tree.add_vertex(x, nearest, e).unwrap();
        }
        let seeds: Vec<VertexId> = tree.ids().collect();
        let constrained = global_rewire(&mut tree, &env, &seeds, 2.0, Some(0));
        assert_eq!(constrained, 0);
    }

    #[test]
    fn connection_radius_formula() {
        let space = SearchSpace::new(st(&[0.0, 0.0]), st(&[1.0, 1.0])).unwrap();
        assert_eq!(connection_radius(1, 2, 0.7, &space), 0.7);
        // d = 2, mu = 1: gamma = 2 sqrt(1.5 / pi), radius at n = 100
        let expected = (2.0 * (1.5f64).powf(0.5) * (1.0 / std::f64::consts::PI).powf(0.5))
            * (100f64.ln() / 100.0).powf(0.5);
        let got = connection_radius(100, 2, 10.0, &space);
        assert!((got - expected).abs() < 1e-12);
        // large n: shrinking and below eta
        let big = connection_radius(1_000_000, 2, 0.7, &space);
        let bigger = connection_radius(100_000, 2, 0.7, &space);
        assert!(big < 0.7 && big < bigger);
        let _ = CostField::Constant;
    }

    #[test]
    fn unit_ball_volumes_match_known_values() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.18879020478639).abs() < 1e-10);
        assert!((unit_ball_volume(6) - 5.16771278004997).abs() < 1e-10);
    }

    #[test]
    fn rewires_count_parent_pointer_changes() {
        let env = open_env();
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let mut tree = Tree::new(env.start.clone());
        let mut parents: Vec<VertexId> = vec![tree.root()];
        while tree.len() < 200 {
            let x = env.space.sample_uniform(&mut rng);
            let parent = parents[rng.random_range(0..parents.len())];
            let e = edge_cost(&env.cost, tree.vertex(parent).state(), &x, 0.05);
            if tree.nearest(&x).1 == 0.0 {
                continue;
            }
            let id = tree.add_vertex(x, parent, e).unwrap();
            parents.push(id);
        }
        let before: Vec<VertexId> = tree.ids().map(|v| tree.vertex(v).parent()).collect();
        let seeds: Vec<VertexId> = tree.ids().collect();
        let swept = global_rewire(&mut tree, &env, &seeds, 1.5, None);
        let changed = tree
            .ids()
            .filter(|&v| tree.vertex(v).parent() != before[v.index()])
            .count();
        // each changed pointer took at least one rewire; repeated rewiring
        // of the same vertex can only add to the count
        assert!(swept >= changed);
        assert!(swept > 0);
    }
}
