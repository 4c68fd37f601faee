//! Exact top-N retrieval for [`TransRec`] by nearest-neighbor search.
//!
//! Biases are shifted so the largest is zero (`β'_j = β_j - max β ≤ 0`), which
//! leaves every ranking unchanged, and then folded into an extra coordinate:
//! `(γ_j ; √(-β'_j))` for squared L2 and `(γ_j ; β'_j)` for L1. With the query
//! `(γ_i + T_u ; 0)` the augmented distance is `d(γ_i + T_u, γ_j) - β'_j`, so
//! nearest neighbors come out in descending score order.

use std::cmp::Ordering;

use crate::dataset::IdMap;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{DistanceKind, RankingModel, TransRec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex<T> {
    distance: DistanceKind,
    /// `|I| x (K+1)`
    augmented: Matrix<T>,
    shifted_bias: Vec<T>,
    item_ids: Option<IdMap>,
}

/// Builds the bias-absorbed index for `model`.
pub fn build_index<T: Scalar>(model: &TransRec<T>) -> RetrievalIndex<T> {
    let beta = model.beta();
    let max = beta.iter().copied().fold(T::neg_infinity(), T::max);
    let shifted_bias: Vec<T> = beta.iter().map(|&b| b - max).collect();
    let k = model.dim();
    let distance = model.distance_kind();
    let augmented = Matrix::from_fn(model.num_items(), k + 1, |j, c| {
        if c < k {
            model.gamma().row(j)[c]
        } else {
            match distance {
                DistanceKind::SquaredL2 => (-shifted_bias[j]).sqrt(),
                DistanceKind::L1 => shifted_bias[j],
            }
        }
    });
    RetrievalIndex {
        distance,
        augmented,
        shifted_bias,
        item_ids: None,
    }
}

impl<T: Scalar> RetrievalIndex<T> {
    pub fn with_item_ids(mut self, ids: IdMap) -> Self {
        self.item_ids = Some(ids);
        self
    }

    pub fn item_ids(&self) -> Option<&IdMap> {
        self.item_ids.as_ref()
    }

    pub fn num_items(&self) -> usize {
        self.augmented.rows()
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.distance
    }

    pub fn shifted_bias(&self) -> &[T] {
        &self.shifted_bias
    }

    /// Augmented coordinates `γ'_j`.
    pub fn point(&self, item: usize) -> &[T] {
        self.augmented.row(item)
    }

    /// `(γ_i + T_u ; 0)`
    pub fn query(&self, model: &TransRec<T>, user: usize, prev: usize) -> Vec<T> {
        let mut q = model.query(user, prev);
        q.push(T::zero());
        q
    }

    pub fn augmented_distance(&self, query: &[T], item: usize) -> T {
        self.distance.eval(query, self.point(item))
    }

    /// The `top_n` nearest augmented points to `query` among items for which
    /// `allowed` holds, nearest first, ties by item index.
    pub fn nearest(&self, query: &[T], top_n: usize, allowed: impl Fn(usize) -> bool) -> Vec<(usize, T)> {
        let mut hits: Vec<(usize, T)> = (0..self.num_items())
            .filter(|&j| allowed(j))
            .map(|j| (j, self.augmented_distance(query, j)))
            .collect();
        let order =
            |a: &(usize, T), b: &(usize, T)| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0));
        if hits.len() > top_n {
            hits.select_nth_unstable_by(top_n - 1, order);
            hits.truncate(top_n);
        }
        hits.sort_by(order);
        hits
    }
}

/// Top-`top_n` next items for `user` after `prev`, with their scores. With
/// `exclude_seen`, items in `seen` are never returned.
pub fn recommend<T: Scalar>(
    index: &RetrievalIndex<T>,
    model: &TransRec<T>,
    user: usize,
    prev: usize,
    top_n: usize,
    exclude_seen: bool,
    seen: &[usize],
) -> Result<Vec<(usize, T)>> {
    if top_n == 0 {
        return Err(Error::InvalidArgument("top must be at least 1".into()));
    }
    if index.num_items() != model.num_items() {
        return Err(Error::ShapeMismatch("index and model disagree on item count".into()));
    }
    if user >= model.num_users() || prev >= model.num_items() {
        return Err(Error::InvalidArgument("user or previous item out of range".into()));
    }
    let mut excluded = vec![false; index.num_items()];
    if exclude_seen {
        for &s in seen {
            if s < excluded.len() {
                excluded[s] = true;
            }
        }
    }
    if excluded.iter().all(|&e| e) {
        return Err(Error::Empty("no candidate items remain".into()));
    }
    let q = index.query(model, user, prev);
    let hits = index.nearest(&q, top_n, |j| !excluded[j]);
    Ok(hits.into_iter().map(|(j, _)| (j, model.score(user, prev, j))).collect())
}

/// Top-`top_n` items by exhaustive scoring with any model, ties broken by
/// item index. Items in `excluded` are never returned.
pub fn recommend_exhaustive<T: Scalar, M: RankingModel<T> + ?Sized>(
    model: &M,
    user: usize,
    prev: usize,
    top_n: usize,
    excluded: &[usize],
) -> Result<Vec<(usize, T)>> {
    if top_n == 0 {
        return Err(Error::InvalidArgument("top must be at least 1".into()));
    }
    if user >= model.num_users() || prev >= model.num_items() {
        return Err(Error::InvalidArgument("user or previous item out of range".into()));
    }
    let mut scores = vec![T::zero(); model.num_items()];
    model.score_all(user, prev, &mut scores);
    let mut skip = vec![false; scores.len()];
    for &e in excluded {
        if e < skip.len() {
            skip[e] = true;
        }
    }
    let mut ranked: Vec<(usize, T)> = scores.into_iter().enumerate().filter(|&(j, _)| !skip[j]).collect();
    if ranked.is_empty() {
        return Err(Error::Empty("no candidate items remain".into()));
    }
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(top_n);
    Ok(ranked)
}
