//! Exact nearest-neighbor index: an incrementally grown kd-tree.
//!
//! Exactness matters here. An approximate index would skew the benchmark
//! comparisons between samplers, so queries do full branch-and-bound with
//! tie-breaking on the lowest item id.

pub(crate) struct KdIndex {
    dim: usize,
    nodes: Vec<KdNode>,
    root: Option<u32>,
}

struct KdNode {
    point: Vec<f64>,
    item: u32,
    left: Option<u32>,
    right: Option<u32>,
}

impl KdIndex {
    pub fn new(dim: usize) -> Self {
        KdIndex {
            dim,
            nodes: Vec::new(),
            root: None,
        }
    }

    pub fn insert(&mut self, point: &[f64], item: u32) {
        debug_assert_eq!(point.len(), self.dim);
        let new = self.nodes.len() as u32;
        self.nodes.push(KdNode {
            point: point.to_vec(),
            item,
            left: None,
            right: None,
        });
        let Some(mut cur) = self.root else {
            self.root = Some(new);
            return;
        };
        let mut axis = 0;
        loop {
            let node = &mut self.nodes[cur as usize];
            let slot = if point[axis] < node.point[axis] {
                &mut node.left
            } else {
                &mut node.right
            };
            match slot {
                Some(next) => {
                    cur = *next;
                    axis = (axis + 1) % self.dim;
                }
                None => {
                    *slot = Some(new);
                    return;
                }
            }
        }
    }

    /// Item closest to `query` and its distance. Exact ties resolve to the
    /// lowest item id.
    pub fn nearest(&self, query: &[f64]) -> Option<(u32, f64)> {
        let root = self.root?;
        let mut best = (f64::INFINITY, u32::MAX);
        // Entries carry a lower bound on the squared distance reachable in
        // their subtree; it is re-checked at pop time because `best` may
        // have improved since the push. Equal bounds must still descend so
        // an equally distant lower id can be found.
        let mut stack = vec![(root, 0usize, 0.0f64)];
        while let Some((idx, axis, bound)) = stack.pop() {
            if bound > best.0 {
                continue;
            }
            let node = &self.nodes[idx as usize];
            let d2 = dist2(query, &node.point);
            if d2 < best.0 || (d2 == best.0 && node.item < best.1) {
                best = (d2, node.item);
            }
            let diff = query[axis] - node.point[axis];
            let (near, far) = if diff < 0.0 {
                (node.left, node.right)
            } else {
                (node.right, node.left)
            };
            let next_axis = (axis + 1) % self.dim;
            if let Some(f) = far {
                let fbound = bound.max(diff * diff);
                if fbound <= best.0 {
                    stack.push((f, next_axis, fbound));
                }
            }
            if let Some(n) = near {
                stack.push((n, next_axis, bound));
            }
        }
        (best.1 != u32::MAX).then(|| (best.1, best.0.sqrt()))
    }

    /// All items within `radius` of `query`, sorted by (distance, item id).
    pub fn within(&self, query: &[f64], radius: f64) -> Vec<(u32, f64)> {
        let Some(root) = self.root else {
            return Vec::new();
        };
        let r2 = radius * radius;
        let mut hits = Vec::new();
        let mut stack = vec![(root, 0usize)];
        while let Some((idx, axis)) = stack.pop() {
            let node = &self.nodes[idx as usize];
            let d2 = dist2(query, &node.point);
            if d2 <= r2 {
                hits.push((node.item, d2));
            }
            let diff = query[axis] - node.point[axis];
            let next_axis = (axis + 1) % self.dim;
            if diff < 0.0 || diff * diff <= r2 {
                if let Some(l) = node.left {
                    stack.push((l, next_axis));
                }
            }
            if diff >= 0.0 || diff * diff <= r2 {
                if let Some(r) = node.right {
                    stack.push((r, next_axis));
                }
            }
        }
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
