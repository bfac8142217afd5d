//! Exact nearest-neighbor queries over 3D point sets.

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};

pub struct PointIndex {
    tree: ImmutableKdTree<f64, 3>,
    len: usize,
}

impl PointIndex {
    /// Panics on an empty slice; callers check emptiness first.
    pub fn new(points: &[[f64; 3]]) -> Self {
        assert!(!points.is_empty(), "empty point index");
        PointIndex {
            tree: ImmutableKdTree::new_from_slice(points).expect("point index construction"),
            len: points.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Squared distance to the closest indexed point.
    pub fn nearest_sq(&self, q: &[f64; 3]) -> f64 {
        self.tree.query(q).nearest_one::<SquaredEuclidean<f64>>().execute().distance
    }

    /// Squared distances to the `k` closest indexed points, ascending.
    pub fn knn_sq(&self, q: &[f64; 3], k: usize) -> Vec<f64> {
        let Some(k) = NonZero::new(k.min(self.len)) else {
            return Vec::new();
        };
        self.tree
            .query(q)
            .nearest_n::<SquaredEuclidean<f64>>(k)
            .execute()
            .into_iter()
            .map(|n| n.distance)
            .collect()
    }
}

/// Distance from each point to its nearest other point in the same set
/// (0 for exact duplicates). A single point gets `None`.
pub fn nearest_other_distances(points: &[[f64; 3]]) -> Option<Vec<f64>> {
    if points.len() < 2 {
        return None;
    }
    let index = PointIndex::new(points);
    Some(
        points
            .iter()
            .map(|p| index.knn_sq(p, 2)[1].sqrt())
            .collect(),
    )
}

/// Median of a nonempty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
