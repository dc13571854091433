//! Rooted spanning tree with parent/child links, cached cost-to-come values
//! and exact nearest-neighbor queries over vertex states.
//!
//! Cost-to-come is additive along tree paths, so a rewire updates the moved
//! subtree by a constant shift instead of re-integrating edges. Ids are
//! dense, stable and never reused; ties everywhere resolve to the lowest id
//! so runs are reproducible under a fixed seed.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nn::KdIndex;
use crate::space::State;

/// Opaque handle to a tree vertex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(transparent)]
pub struct VertexId(pub(crate) u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Vertex {
    state: State,
    parent: VertexId,
    children: Vec<VertexId>,
    g: f64,
    edge_cost_to_parent: f64,
    selection_count: u32,
}

impl Vertex {
    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn parent(&self) -> VertexId {
        self.parent
    }

    pub fn children(&self) -> &[VertexId] {
        &self.children
    }

    /// Cost-to-come from the root along tree edges.
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn edge_cost_to_parent(&self) -> f64 {
        self.edge_cost_to_parent
    }

    pub fn child_count(&self) -> usize {
        self.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn selection_count(&self) -> u32 {
        self.selection_count
    }
}

pub struct Tree {
    vertices: Vec<Vertex>,
    index: KdIndex,
    rewires: u64,
}

impl Tree {
    pub fn new(root_state: State) -> Self {
        let mut index = KdIndex::new(root_state.dim());
        index.insert(root_state.coords(), 0);
        Tree {
            vertices: vec![Vertex {
                state: root_state,
                parent: VertexId(0),
                children: Vec::new(),
                g: 0.0,
                edge_cost_to_parent: 0.0,
                selection_count: 0,
            }],
            index,
            rewires: 0,
        }
    }

    pub fn root(&self) -> VertexId {
        VertexId(0)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree always holds at least the root
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id.index()]
    }

    pub fn get(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(id.index())
    }

    /// Number of rewire operations performed over the tree's lifetime.
    pub fn rewire_count(&self) -> u64 {
        self.rewires
    }

    /// Append a vertex under `parent`. The caller supplies the already
    /// integrated edge cost; g follows by the path recursion.
    pub fn add_vertex(
        &mut self,
        state: State,
        parent: VertexId,
        edge_cost: f64,
    ) -> Result<VertexId> {
        let parent_g = match self.get(parent) {
            Some(p) => p.g,
            None => return Err(Error::UnknownVertex(parent)),
        };
        debug_assert!(edge_cost >= 0.0 && edge_cost.is_finite());
        let id = VertexId(self.vertices.len() as u32);
        self.index.insert(state.coords(), id.0);
        self.vertices.push(Vertex {
            state,
            parent,
            children: Vec::new(),
            g: parent_g + edge_cost,
            edge_cost_to_parent: edge_cost,
            selection_count: 0,
        });
        self.vertices[parent.index()].children.push(id);
        Ok(id)
    }

    /// Swap `v`'s parent to `new_parent`, shifting the whole subtree's g by
    /// the improvement. Returns the improvement (strictly positive).
    pub fn rewire(
        &mut self,
        v: VertexId,
        new_parent: VertexId,
        new_edge_cost: f64,
    ) -> Result<f64> {
        if self.get(v).is_none() {
            return Err(Error::UnknownVertex(v));
        }
        if self.get(new_parent).is_none() {
            return Err(Error::UnknownVertex(new_parent));
        }
        if v == self.root() {
            return Err(Error::RootVertex);
        }
        if new_parent == v || self.is_descendant(new_parent, v) {
            return Err(Error::RewireCycle {
                vertex: v,
                parent: new_parent,
            });
        }
        let new_g = self.vertices[new_parent.index()].g + new_edge_cost;
        let delta = self.vertices[v.index()].g - new_g;
        if !(delta > 0.0) {
            return Err(Error::RewireNotImproving { vertex: v });
        }

        let old_parent = self.vertices[v.index()].parent;
        let siblings = &mut self.vertices[old_parent.index()].children;
        siblings.retain(|&c| c != v);
        self.vertices[new_parent.index()].children.push(v);
        {
            let vert = &mut self.vertices[v.index()];
            vert.parent = new_parent;
            vert.edge_cost_to_parent = new_edge_cost;
        }
        // constant shift over the subtree (cost-to-come is path-additive)
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            self.vertices[u.index()].g -= delta;
            stack.extend_from_slice(&self.vertices[u.index()].children);
        }
        self.rewires += 1;
        Ok(delta)
    }

    /// True when `v` lies in the subtree rooted at `ancestor` (v itself
    /// excluded).
    pub fn is_descendant(&self, v: VertexId, ancestor: VertexId) -> bool {
        let mut cur = v;
        while cur != self.root() {
            cur = self.vertices[cur.index()].parent;
            if cur == ancestor {
                return true;
            }
        }
        false
    }

    /// Exact descendant count by full traversal. O(subtree); meant for
    /// tests and diagnostics, not the sampling hot path.
    pub fn descendant_count(&self, v: VertexId) -> usize {
        let mut count = 0;
        let mut stack = self.vertices[v.index()].children.clone();
        while let Some(u) = stack.pop() {
            count += 1;
            stack.extend_from_slice(&self.vertices[u.index()].children);
        }
        count
    }

    /// Depth-2 truncation of the descendant count: the vertex's own child
    /// count plus the child counts of the selected children. O(|subset|).
    pub fn dhat(&self, v: VertexId, subset: &[VertexId]) -> Result<usize> {
        let vert = self.get(v).ok_or(Error::UnknownVertex(v))?;
        let mut total = vert.child_count();
        for &u in subset {
            let child = self.get(u).ok_or(Error::UnknownVertex(u))?;
            if child.parent != v || u == v {
                return Err(Error::NotAChild {
                    parent: v,
                    child: u,
                });
            }
            total += child.child_count();
        }
        Ok(total)
    }

    /// Vertex whose state is closest to `x` (ties to the lowest id) and its
    /// distance.
    pub fn nearest(&self, x: &State) -> (VertexId, f64) {
        let (item, dist) = self
            .index
            .nearest(x.coords())
            .expect("tree always holds the root");
        (VertexId(item), dist)
    }

    /// All vertices within `r` of `x`, sorted by (distance, id).
    pub fn near(&self, x: &State, r: f64) -> Vec<(VertexId, f64)> {
        self.index
            .within(x.coords(), r)
            .into_iter()
            .map(|(item, dist)| (VertexId(item), dist))
            .collect()
    }

    pub(crate) fn bump_selection(&mut self, v: VertexId) {
        self.vertices[v.index()].selection_count += 1;
    }

    /// Iterator over `v` and every vertex below it.
    pub fn subtree(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.vertices[out[i].index()].children);
            i += 1;
        }
        out
    }

    /// JSON snapshot of vertices (id, state, parent, g) for post-hoc
    /// verification by tests and the benchmark tool.
    pub fn snapshot_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Row<'a> {
            id: u32,
            state: &'a [f64],
            parent: u32,
            g: f64,
        }
        let rows: Vec<Row> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| Row {
                id: i as u32,
                state: v.state.coords(),
                parent: v.parent.0,
                g: v.g,
            })
            .collect();
        serde_json::json!({ "vertices": rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tree;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(coords: &[f64]) -> State {
        State::new(coords.to_vec())
    }

    /// Independent oracle: descendants of v are the vertices whose parent
    /// chain passes through v.
    fn descendants_by_parent_chain(tree: &Tree, v: VertexId) -> usize {
        tree.ids()
            .filter(|&u| u != v && {
                let mut cur = u;
                loop {
                    if cur == tree.root() {
                        break false;
                    }
                    cur = tree.vertex(cur).parent();
                    if cur == v {
                        break true;
                    }
                }
            })
            .count()
    }

    /// Independent oracle: recompute every g by walking stored edge costs
    /// down from the root.
    fn recompute_g(tree: &Tree) -> Vec<f64> {
        let mut g = vec![f64::NAN; tree.len()];
        g[0] = 0.0;
        let mut stack = vec![tree.root()];
        while let Some(v) = stack.pop() {
            for &c in tree.vertex(v).children() {
                g[c.index()] = g[v.index()] + tree.vertex(c).edge_cost_to_parent();
                stack.push(c);
            }
        }
        g
    }

    #[test]
    fn g_accumulates_along_chain() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        let b = tree.add_vertex(st(&[3.0, 0.0]), a, 2.0).unwrap();
        assert_eq!(tree.vertex(a).g(), 1.0);
        assert_eq!(tree.vertex(b).g(), 3.0);
        assert_eq!(tree.vertex(b).parent(), a);
    }

    #[test]
    fn first_child_of_root_takes_edge_cost() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[2.5, 0.0]), tree.root(), 2.5).unwrap();
        assert_eq!(tree.vertex(a).g(), 2.5);
    }

    #[test]
    fn add_vertex_rejects_unknown_parent() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let err = tree.add_vertex(st(&[1.0, 0.0]), VertexId(7), 1.0);
        assert!(matches!(err, Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn add_vertex_grows_root_descendants_by_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tree = random_tree(&mut rng, 40, 2);
        let before = descendants_by_parent_chain(&tree, tree.root());
        let parent = VertexId(rng.random_range(0..tree.len() as u32));
        tree.add_vertex(st(&[0.123, 0.456]), parent, 0.5).unwrap();
        assert_eq!(descendants_by_parent_chain(&tree, tree.root()), before + 1);
        assert_eq!(tree.descendant_count(tree.root()), before + 1);
    }

    #[test]
    fn rewire_shifts_subtree_by_improvement() {
        // root -> a (g 10) -> c (g 12); b (g 3) becomes a's better parent
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[10.0, 0.0]), tree.root(), 10.0).unwrap();
        let c = tree.add_vertex(st(&[10.0, 2.0]), a, 2.0).unwrap();
        let b = tree.add_vertex(st(&[3.0, 0.0]), tree.root(), 3.0).unwrap();
        let delta = tree.rewire(a, b, 4.0).unwrap();
        assert!((delta - 3.0).abs() < 1e-12);
        assert_eq!(tree.vertex(a).g(), 7.0);
        assert_eq!(tree.vertex(c).g(), 9.0);
        assert_eq!(tree.vertex(a).parent(), b);
        assert!(tree.vertex(b).children().contains(&a));
        assert!(!tree.vertex(tree.root()).children().contains(&a));
        assert_eq!(tree.rewire_count(), 1);
    }

    #[test]
    fn rewire_rejects_cycles() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        let b = tree.add_vertex(st(&[2.0, 0.0]), a, 1.0).unwrap();
        let err = tree.rewire(a, b, 0.1);
        assert!(matches!(err, Err(Error::RewireCycle { .. })));
        let err = tree.rewire(a, a, 0.1);
        assert!(matches!(err, Err(Error::RewireCycle { .. })));
    }

    #[test]
    fn rewire_rejects_non_improving_moves() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        let b = tree.add_vertex(st(&[0.0, 1.0]), tree.root(), 1.0).unwrap();
        let err = tree.rewire(a, b, 2.0);
        assert!(matches!(err, Err(Error::RewireNotImproving { .. })));
    }

    #[test]
    fn random_rewires_keep_g_consistent_with_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut tree = random_tree(&mut rng, 200, 3);
        let mut applied = 0;
        let mut attempts = 0;
        while applied < 50 && attempts < 10_000 {
            attempts += 1;
            let v = VertexId(rng.random_range(1..tree.len() as u32));
            let p = VertexId(rng.random_range(0..tree.len() as u32));
            if p == v || tree.is_descendant(p, v) {
                continue;
            }
            let gap = tree.vertex(v).g() - tree.vertex(p).g();
            if gap <= 0.01 {
                continue;
            }
            let edge = rng.random_range(0.0..gap * 0.9);
            tree.rewire(v, p, edge).unwrap();
            applied += 1;
        }
        assert!(applied > 10, "not enough valid rewires exercised");
        let recomputed = recompute_g(&tree);
        for id in tree.ids() {
            assert!(
                (tree.vertex(id).g() - recomputed[id.index()]).abs() < 1e-9,
                "g drift at {id}"
            );
        }
        // rewiring changes edges, never the vertex set
        assert_eq!(tree.len(), 200);
        // every vertex still reaches the root
        for id in tree.ids() {
            let mut cur = id;
            let mut hops = 0;
            while cur != tree.root() {
                cur = tree.vertex(cur).parent();
                hops += 1;
                assert!(hops <= tree.len(), "cycle detected");
            }
        }
    }

    #[test]
    fn leaf_has_no_descendants() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        assert_eq!(tree.vertex(a).child_count(), 0);
        assert_eq!(tree.descendant_count(a), 0);
    }

    #[test]
    fn root_of_fifty_vertex_tree_has_forty_nine_descendants() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tree = random_tree(&mut rng, 50, 2);
        assert_eq!(tree.descendant_count(tree.root()), 49);
    }

    #[test]
    fn descendant_count_matches_oracle_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tree = random_tree(&mut rng, 120, 2);
        for id in tree.ids() {
            assert_eq!(tree.descendant_count(id), descendants_by_parent_chain(&tree, id));
        }
    }

    #[test]
    fn descendant_recursion_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let tree = random_tree(&mut rng, 150, 3);
        for v in tree.ids() {
            let children_sum: usize = tree
                .vertex(v)
                .children()
                .iter()
                .map(|&u| tree.descendant_count(u))
                .sum();
            assert_eq!(
                tree.descendant_count(v),
                tree.vertex(v).child_count() + children_sum
            );
        }
    }

    #[test]
    fn child_counts_sum_to_vertex_count_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let tree = random_tree(&mut rng, 80, 2);
        let total: usize = tree.ids().map(|v| tree.vertex(v).child_count()).sum();
        assert_eq!(total, tree.len() - 1);
    }

    #[test]
    fn dhat_example_from_fanout() {
        // v with 4 children, two of which have 1 and 2 children of their own
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let v = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        let mut kids = Vec::new();
        for i in 0..4 {
            kids.push(
                tree.add_vertex(st(&[2.0, i as f64]), v, 1.5).unwrap(),
            );
        }
        tree.add_vertex(st(&[3.0, 0.0]), kids[0], 1.0).unwrap();
        tree.add_vertex(st(&[3.0, 1.0]), kids[1], 1.0).unwrap();
        tree.add_vertex(st(&[3.0, 1.5]), kids[1], 1.0).unwrap();
        assert_eq!(tree.dhat(v, &kids).unwrap(), 7);
        assert_eq!(tree.dhat(v, &[]).unwrap(), 4);
        // depth-2 subtree: the truncation is exact
        assert_eq!(tree.dhat(v, &kids).unwrap(), tree.descendant_count(v));
    }

    #[test]
    fn dhat_rejects_non_children() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 0.0]), tree.root(), 1.0).unwrap();
        let b = tree.add_vertex(st(&[2.0, 0.0]), a, 1.0).unwrap();
        let err = tree.dhat(tree.root(), &[b]);
        assert!(matches!(err, Err(Error::NotAChild { .. })));
    }

    #[test]
    fn dhat_bounded_by_descendant_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let tree = random_tree(&mut rng, 150, 2);
        for v in tree.ids() {
            let children: Vec<_> = tree.vertex(v).children().to_vec();
            let dh = tree.dhat(v, &children).unwrap();
            let dc = tree.descendant_count(v);
            assert!(dh <= dc);
            let has_deep_grandchild = children.iter().any(|&u| {
                tree.vertex(u)
                    .children()
                    .iter()
                    .any(|&w| !tree.vertex(w).is_leaf())
            });
            assert_eq!(dh == dc, !has_deep_grandchild);
        }
    }

    #[test]
    fn nearest_on_single_vertex_tree() {
        let tree = Tree::new(st(&[0.5, 0.5]));
        let (id, dist) = tree.nearest(&st(&[1.0, 1.0]));
        assert_eq!(id, tree.root());
        assert!((dist - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nearest_finds_exact_match_at_distance_zero() {
        let mut tree = Tree::new(st(&[0.0, 0.0]));
        let a = tree.add_vertex(st(&[1.0, 2.0]), tree.root(), 2.3).unwrap();
        let (id, dist) = tree.nearest(&st(&[1.0, 2.0]));
        assert_eq!(id, a);
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn nearest_and_near_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let tree = random_tree(&mut rng, 500, 3);
        for _ in 0..100 {
            let q = st(&[
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ]);
            let brute = tree
                .ids()
                .map(|id| (id, q.distance_to(tree.vertex(id).state())))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            let (id, dist) = tree.nearest(&q);
            assert_eq!(id, brute.0);
            assert!((dist - brute.1).abs() < 1e-12);

            let r = rng.random_range(0.1..1.5);
            let mut brute_near: Vec<(VertexId, f64)> = tree
                .ids()
                .map(|id| (id, q.distance_to(tree.vertex(id).state())))
                .filter(|(_, d)| *d <= r)
                .collect();
            brute_near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let got = tree.near(&q, r);
            assert_eq!(
                got.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
                brute_near.iter().map(|(i, _)| *i).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn snapshot_lists_every_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree = random_tree(&mut rng, 10, 2);
        let snap = tree.snapshot_json();
        assert_eq!(snap["vertices"].as_array().unwrap().len(), 10);
        assert_eq!(snap["vertices"][0]["g"], 0.0);
    }
}
