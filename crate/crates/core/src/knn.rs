//! Exact k-nearest-neighbour search over 3D points.
//!
//! Implicit median-split kd-tree: the permutation array is the tree, the node
//! for a range `[lo, hi)` sits at `(lo + hi) / 2`. Splits pick the axis of
//! largest spread, so coincident or coplanar points need no special casing.

use std::collections::BinaryHeap;

use ordered::OrdF64;

use crate::cloud::Point;

mod ordered {
    #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
    pub struct OrdF64(pub f64);

    impl Eq for OrdF64 {}

    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for OrdF64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

pub struct KdTree<'a> {
    points: &'a [Point],
    order: Vec<usize>,
    axis: Vec<u8>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Point]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut axis = vec![0u8; points.len()];
        build_range(points, &mut order, &mut axis, 0);
        KdTree {
            points,
            order,
            axis,
        }
    }

    /// The `k` nearest points to `query` as `(squared distance, index)`,
    /// nearest first. Ties resolve by lower index. `skip` excludes one index
    /// (the query point itself when searching within the cloud).
    pub fn nearest(&self, query: &Point, k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<(OrdF64, usize)> = BinaryHeap::with_capacity(k + 1);
        self.search(0, self.order.len(), query, k, skip, &mut heap);
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|(d, i)| (d.0, i)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    fn search(
        &self,
        lo: usize,
        hi: usize,
        query: &Point,
        k: usize,
        skip: Option<usize>,
        heap: &mut BinaryHeap<(OrdF64, usize)>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        if skip != Some(idx) {
            let d = (p - query).norm_squared();
            let entry = (OrdF64(d), idx);
            if heap.len() < k {
                heap.push(entry);
            } else if entry < *heap.peek().expect("heap holds k items") {
                heap.pop();
                heap.push(entry);
            }
        }
        let ax = self.axis[mid] as usize;
        let diff = query[ax] - p[ax];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, query, k, skip, heap);
        let worst = heap.peek().map_or(f64::INFINITY, |e| e.0 .0);
        if heap.len() < k || diff * diff <= worst {
            self.search(far.0, far.1, query, k, skip, heap);
        }
    }
}

fn build_range(points: &[Point], order: &mut [usize], axis: &mut [u8], offset: usize) {
    if order.len() <= 1 {
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order.iter() {
        for a in 0..3 {
            lo[a] = lo[a].min(points[i][a]);
            hi[a] = hi[a].max(points[i][a]);
        }
    }
    let ax = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][ax].total_cmp(&points[b][ax]));
    axis[offset + mid] = ax as u8;
    let (left, right) = order.split_at_mut(mid);
    build_range(points, left, axis, offset);
    build_range(points, &mut right[1..], axis, offset + mid + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Point], q: &Point, k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // quantized coordinates force many ties and shared planes
        let points: Vec<Point> = (0..600)
            .map(|_| {
                Point::new(
                    rng.random_range(0..10) as f64,
                    rng.random_range(0..10) as f64,
                    0.0,
                )
            })
            .collect();
        let tree = KdTree::build(&points);
        for (i, q) in points.iter().enumerate().step_by(7) {
            let got = tree.nearest(q, 8, Some(i));
            let want = brute(&points, q, 8, Some(i));
            let gd: Vec<f64> = got.iter().map(|e| e.0).collect();
            let wd: Vec<f64> = want.iter().map(|e| e.0).collect();
            assert_eq!(gd, wd);
        }
    }

    #[test]
    fn k_larger_than_cloud() {
        let points = vec![Point::origin(), Point::new(1.0, 0.0, 0.0)];
        let tree = KdTree::build(&points);
        assert_eq!(tree.nearest(&Point::origin(), 5, None).len(), 2);
    }
}
