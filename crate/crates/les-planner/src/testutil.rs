//! Shared helpers for unit tests.

use rand::Rng;

use crate::space::State;
use crate::tree::{Tree, VertexId};

/// Random tree in [-2, 2]^dim with unit-cost edges (edge cost = distance),
/// each vertex attached under a uniformly chosen existing parent.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Tree {
    let root = State::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect());
    let mut tree = Tree::new(root);
    while tree.len() < n {
        let parent = VertexId(rng.random_range(0..tree.len() as u32));
        let state = State::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect());
        let edge = state.distance_to(tree.vertex(parent).state());
        tree.add_vertex(state, parent, edge).unwrap();
    }
    tree
}
