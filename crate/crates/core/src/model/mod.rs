//! Scoring interface shared by every recommender, distance functions, the
//! unit-ball projection and the translation-based model itself.

mod transrec;

pub use transrec::TransRec;

use crate::error::{Error, Result};
use crate::linalg::{l1_distance, squared_distance, squared_norm, Matrix};
use crate::scalar::Scalar;

/// Anything that scores a candidate next item given a user and the item the
/// user interacted with last. Higher is better.
pub trait RankingModel<T: Scalar> {
    fn num_users(&self) -> usize;
    fn num_items(&self) -> usize;

    fn score(&self, user: usize, prev: usize, item: usize) -> T;

    /// Scores every item into `out` (length `num_items`).
    fn score_all(&self, user: usize, prev: usize, out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.score(user, prev, j);
        }
    }
}

/// Training example: `user` moved from `prev` to `pos`; `neg` is an item the
/// user never interacted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub user: usize,
    pub prev: usize,
    pub pos: usize,
    pub neg: usize,
}

/// Regularization group a parameter block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamClass {
    Bias,
    Embedding,
    Translation,
}

/// Gradient with respect to one row of one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGradient<T> {
    pub block: usize,
    pub row: usize,
    pub values: Vec<T>,
}

impl<T> RowGradient<T> {
    pub fn new(block: usize, row: usize, values: Vec<T>) -> Self {
        Self { block, row, values }
    }
}

/// A model whose parameters are a fixed list of dense blocks and whose pairwise
/// score difference has an analytic gradient.
pub trait Trainable<T: Scalar>: RankingModel<T> + Clone + Send + Sync {
    fn block_names(&self) -> &'static [&'static str];
    fn block(&self, b: usize) -> &Matrix<T>;
    fn block_mut(&mut self, b: usize) -> &mut Matrix<T>;
    fn block_class(&self, b: usize) -> ParamClass;

    /// Gradient of `score(u, i, pos) - score(u, i, neg)` with respect to every
    /// parameter row it depends on. A row may appear more than once; the
    /// contributions add up.
    fn delta_gradient(&self, triple: &Triple) -> Vec<RowGradient<T>>;

    /// Restores parameter constraints after an update touched `triple`.
    fn after_step(&mut self, _triple: &Triple) {}

    /// Model-specific invariants, checked after every training iteration.
    fn check_constraints(&self) -> std::result::Result<(), String> {
        Ok(())
    }

    fn num_blocks(&self) -> usize {
        self.block_names().len()
    }

    /// Name of the first block holding a NaN or infinity.
    fn non_finite_block(&self) -> Option<&'static str> {
        (0..self.num_blocks())
            .find(|&b| !self.block(b).is_finite())
            .map(|b| self.block_names()[b])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    L1,
    SquaredL2,
}

impl DistanceKind {
    /// Unchecked evaluation; slices must have equal length.
    #[inline]
    pub fn eval<T: Scalar>(self, x: &[T], y: &[T]) -> T {
        match self {
            DistanceKind::L1 => l1_distance(x, y),
            DistanceKind::SquaredL2 => squared_distance(x, y),
        }
    }

    /// `∂d(x, y)/∂x`, accumulated into `out` with factor `scale`.
    /// L1 uses subgradient 0 where `x_k == y_k`.
    #[inline]
    pub fn grad_x_into<T: Scalar>(self, x: &[T], y: &[T], scale: T, out: &mut [T]) {
        let two = T::one() + T::one();
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
            let diff = a - b;
            let g = match self {
                DistanceKind::SquaredL2 => two * diff,
                DistanceKind::L1 => signum0(diff),
            };
            *o += scale * g;
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::L1 => "l1",
            DistanceKind::SquaredL2 => "l2",
        }
    }
}

#[inline]
fn signum0<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `d(x, y)` with a dimension check.
pub fn distance<T: Scalar>(kind: DistanceKind, x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(kind.eval(x, y))
}

/// In-place projection onto the closed unit L2 ball: `v / max(1, ‖v‖)`.
#[inline]
pub fn project_into_ball<T: Scalar>(v: &mut [T]) {
    let norm = squared_norm(v).sqrt();
    if norm > T::one() {
        for x in v.iter_mut() {
            *x = *x / norm;
        }
    }
}

pub fn project_to_ball<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    project_into_ball(&mut out);
    out
}
