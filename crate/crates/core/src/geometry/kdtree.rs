//! Static 3-D kd-tree over an indexed point set.
//!
//! Results are ordered by `(squared distance, index)`, so ties between
//! equidistant points always resolve to the lower index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Point3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Immutable kd-tree. Safe to share across threads once built.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<usize>,
    root: Node,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let points: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = build(&points, &mut order, 0, points.len());
        KdTree {
            points,
            order,
            root,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points as `(index, squared distance)`, nearest first.
    pub fn nearest(&self, query: &Point3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let q = [query.x, query.y, query.z];
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search_knn(&self.root, &q, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist2)).collect()
    }

    /// Every point with squared distance `<= radius²`, nearest first.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<(usize, f64)> {
        let q = [query.x, query.y, query.z];
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.search_radius(&self.root, &q, r2, &mut out);
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist2)).collect()
    }

    fn search_knn(&self, node: &Node, q: &[f64; 3], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    let cand = Candidate {
                        dist2: dist2(&self.points[idx], q),
                        index: idx,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if let Some(worst) = heap.peek() {
                        if cand < *worst {
                            heap.pop();
                            heap.push(cand);
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search_knn(near, q, k, heap);
                let full = heap.len() >= k;
                // Equal distance may still hide a lower-index tie, so only
                // strictly farther subtrees are pruned.
                if !full || heap.peek().is_some_and(|w| diff * diff <= w.dist2) {
                    self.search_knn(far, q, k, heap);
                }
            }
        }
    }

    fn search_radius(&self, node: &Node, q: &[f64; 3], r2: f64, out: &mut Vec<Candidate>) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    let d = dist2(&self.points[idx], q);
                    if d <= r2 {
                        out.push(Candidate {
                            dist2: d,
                            index: idx,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search_radius(near, q, r2, out);
                if diff * diff <= r2 {
                    self.search_radius(far, q, r2, out);
                }
            }
        }
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn build(points: &[[f64; 3]], order: &mut [usize], start: usize, end: usize) -> Node {
    if end - start <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let slice = &mut order[start..end];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in slice.iter() {
        for d in 0..3 {
            lo[d] = lo[d].min(points[i][d]);
            hi[d] = hi[d].max(points[i][d]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] <= 0.0 {
        // all points coincide
        return Node::Leaf { start, end };
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let value = points[slice[mid]][axis];
    let split = start + mid;
    Node::Split {
        axis,
        value,
        left: Box::new(build(points, order, start, split)),
        right: Box::new(build(points, order, split, end)),
    }
}
