//! A static 3-d tree for exact k-nearest-neighbour queries.
//!
//! Results are ordered by squared distance, then by sample index, so queries
//! are reproducible regardless of tree shape.

use std::cmp::Ordering;

const LEAF_SIZE: usize = 8;

#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub dist2: f64,
    pub index: usize,
}

impl Neighbor {
    fn cmp_key(&self, other: &Neighbor) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    /// Permutation of point indices; leaves reference contiguous ranges.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        let mut tree = KdTree { order: (0..points.len()).collect(), points, nodes: Vec::new() };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; 3] {
        &self.points[index]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0)
    }

    /// The `k` nearest points to `query`, closest first (ties by lower index).
    /// Returns every point when fewer than `k` exist.
    pub fn knn(&self, query: &[f64; 3], k: usize) -> Vec<Neighbor> {
        let mut best = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.search(0, query, k, &mut best);
        }
        best
    }

    pub fn nearest(&self, query: &[f64; 3]) -> Option<Neighbor> {
        self.knn(query, 1).into_iter().next()
    }

    fn search(&self, node: usize, q: &[f64; 3], k: usize, best: &mut Vec<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let cand = Neighbor { dist2: dist2(q, &self.points[index]), index };
                    if best.len() == k && cand.cmp_key(&best[k - 1]) != Ordering::Less {
                        continue;
                    }
                    let pos = best.binary_search_by(|n| n.cmp_key(&cand)).unwrap_or_else(|p| p);
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, best);
                // equal bounds are still visited so index tie-breaking stays exact
                let bound = diff * diff;
                if best.len() < k || bound <= best[k - 1].dist2 {
                    self.search(far, q, k, best);
                }
            }
        }
    }
}
