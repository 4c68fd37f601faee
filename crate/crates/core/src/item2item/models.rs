//! Content-based relation models over sparse item features.

use std::sync::Arc;

use rand::Rng;

use super::features::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{DistanceKind, ParamClass, RankingModel, RowGradient, Trainable, Triple};
use crate::rng::fill_uniform;
use crate::scalar::Scalar;

/// `out += scale · Σ_c f_c · proj[c]`
fn embed_into<T: Scalar>(row: &[(usize, T)], proj: &Matrix<T>, scale: T, out: &mut [T]) {
    for &(c, v) in row {
        let w = scale * v;
        for (o, &p) in out.iter_mut().zip(proj.row(c)) {
            *o += w * p;
        }
    }
}

fn embed_all<T: Scalar>(features: &FeatureMatrix<T>, proj: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(features.num_items(), proj.cols());
    for i in 0..features.num_items() {
        embed_into(features.row(i), proj, T::one(), out.row_mut(i));
    }
    out
}

/// Rows of the projection gradient induced by `∂Δ/∂e_k = g` for the
/// embeddings `e_k = Σ_c f_kc · proj[c]`.
fn push_projection_rows<T: Scalar>(block: usize, row: &[(usize, T)], g: &[T], out: &mut Vec<RowGradient<T>>) {
    for &(c, v) in row {
        out.push(RowGradient::new(block, c, g.iter().map(|&x| v * x).collect()));
    }
}

fn check_features<T: Scalar>(features: &FeatureMatrix<T>, rows: usize) -> Result<()> {
    if features.dim() != rows {
        return Err(Error::ShapeMismatch(format!(
            "model expects {rows} feature columns, features have {}",
            features.dim()
        )));
    }
    Ok(())
}

/// Translation model over a linear embedding of item features:
/// `-d(E f_i + t, E f_j)`. Embeddings are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentTransRec<T> {
    features: Arc<FeatureMatrix<T>>,
    distance: DistanceKind,
    /// `D x K'`; row `c` is the embedding of feature `c`.
    proj: Matrix<T>,
    /// `1 x K'`
    translation: Matrix<T>,
}

impl<T: Scalar> ContentTransRec<T> {
    pub const PROJ: usize = 0;
    pub const TRANSLATION: usize = 1;

    pub fn init<R: Rng + ?Sized>(
        features: Arc<FeatureMatrix<T>>,
        dim: usize,
        distance: DistanceKind,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut proj = Matrix::zeros(features.dim(), dim);
        fill_uniform(rng, proj.as_mut_slice(), -init_scale, init_scale);
        let mut translation = Matrix::zeros(1, dim);
        fill_uniform(rng, translation.as_mut_slice(), -init_scale, init_scale);
        Self {
            features,
            distance,
            proj,
            translation,
        }
    }

    pub fn from_parts(
        features: Arc<FeatureMatrix<T>>,
        distance: DistanceKind,
        proj: Matrix<T>,
        translation: Vec<T>,
    ) -> Result<Self> {
        check_features(&features, proj.rows())?;
        if translation.len() != proj.cols() {
            return Err(Error::DimensionMismatch {
                expected: proj.cols(),
                actual: translation.len(),
            });
        }
        let translation = Matrix::from_vec(1, proj.cols(), translation);
        Ok(Self {
            features,
            distance,
            proj,
            translation,
        })
    }

    pub fn features(&self) -> &Arc<FeatureMatrix<T>> {
        &self.features
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.distance
    }

    pub fn projection(&self) -> &Matrix<T> {
        &self.proj
    }

    pub fn translation(&self) -> &[T] {
        self.translation.row(0)
    }

    pub fn embed(&self, item: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.proj.cols()];
        embed_into(self.features.row(item), &self.proj, T::one(), &mut e);
        e
    }

    /// `-d(E f_i + t, E f_j)`
    pub fn pair_score(&self, src: usize, dst: usize) -> T {
        let mut q = self.embed(src);
        for (q, &t) in q.iter_mut().zip(self.translation()) {
            *q += t;
        }
        -self.distance.eval(&q, &self.embed(dst))
    }
}

impl<T: Scalar> RankingModel<T> for ContentTransRec<T> {
    fn num_users(&self) -> usize {
        1
    }

    fn num_items(&self) -> usize {
        self.features.num_items()
    }

    fn score(&self, _user: usize, prev: usize, item: usize) -> T {
        self.pair_score(prev, item)
    }
}

impl<T: Scalar> Trainable<T> for ContentTransRec<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["projection", "translation"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.proj, &self.translation][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::PROJ => &mut self.proj,
            Self::TRANSLATION => &mut self.translation,
            _ => panic!("ContentTransRec has no block {b}"),
        }
    }

    fn block_class(&self, b: usize) -> ParamClass {
        if b == Self::PROJ {
            ParamClass::Embedding
        } else {
            ParamClass::Translation
        }
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let k = self.proj.cols();
        let mut q = self.embed(tr.prev);
        for (q, &t) in q.iter_mut().zip(self.translation()) {
            *q += t;
        }
        let ep = self.embed(tr.pos);
        let en = self.embed(tr.neg);
        // a_x = ∂(-d(q, e_x))/∂q
        let mut a_pos = vec![T::zero(); k];
        self.distance.grad_x_into(&q, &ep, -T::one(), &mut a_pos);
        let mut a_neg = vec![T::zero(); k];
        self.distance.grad_x_into(&q, &en, -T::one(), &mut a_neg);

        let dq: Vec<T> = a_pos.iter().zip(&a_neg).map(|(&p, &n)| p - n).collect();
        let dpos: Vec<T> = a_pos.iter().map(|&p| -p).collect();
        let mut out = Vec::new();
        push_projection_rows(Self::PROJ, self.features.row(tr.prev), &dq, &mut out);
        push_projection_rows(Self::PROJ, self.features.row(tr.pos), &dpos, &mut out);
        push_projection_rows(Self::PROJ, self.features.row(tr.neg), &a_neg, &mut out);
        out.push(RowGradient::new(Self::TRANSLATION, 0, dq));
        out
    }
}

/// Low-rank Mahalanobis transform: `-‖W f_i - W f_j‖²`. Symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmt<T> {
    features: Arc<FeatureMatrix<T>>,
    /// `D x K'`, the transpose of `W`.
    proj: Matrix<T>,
}

impl<T: Scalar> Lmt<T> {
    pub const PROJ: usize = 0;

    pub fn init<R: Rng + ?Sized>(features: Arc<FeatureMatrix<T>>, dim: usize, init_scale: f64, rng: &mut R) -> Self {
        let mut proj = Matrix::zeros(features.dim(), dim);
        fill_uniform(rng, proj.as_mut_slice(), -init_scale, init_scale);
        Self { features, proj }
    }

    pub fn from_parts(features: Arc<FeatureMatrix<T>>, proj: Matrix<T>) -> Result<Self> {
        check_features(&features, proj.rows())?;
        Ok(Self { features, proj })
    }

    pub fn features(&self) -> &Arc<FeatureMatrix<T>> {
        &self.features
    }

    pub fn projection(&self) -> &Matrix<T> {
        &self.proj
    }

    pub fn embed(&self, item: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.proj.cols()];
        embed_into(self.features.row(item), &self.proj, T::one(), &mut e);
        e
    }

    pub fn pair_score(&self, src: usize, dst: usize) -> T {
        -DistanceKind::SquaredL2.eval(&self.embed(src), &self.embed(dst))
    }
}

impl<T: Scalar> RankingModel<T> for Lmt<T> {
    fn num_users(&self) -> usize {
        1
    }

    fn num_items(&self) -> usize {
        self.features.num_items()
    }

    fn score(&self, _user: usize, prev: usize, item: usize) -> T {
        self.pair_score(prev, item)
    }
}

impl<T: Scalar> Trainable<T> for Lmt<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["projection"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        assert_eq!(b, Self::PROJ, "Lmt has no block {b}");
        &self.proj
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        assert_eq!(b, Self::PROJ, "Lmt has no block {b}");
        &mut self.proj
    }

    fn block_class(&self, _b: usize) -> ParamClass {
        ParamClass::Embedding
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let k = self.proj.cols();
        let q = self.embed(tr.prev);
        let ep = self.embed(tr.pos);
        let en = self.embed(tr.neg);
        let l2 = DistanceKind::SquaredL2;
        let mut a_pos = vec![T::zero(); k];
        l2.grad_x_into(&q, &ep, -T::one(), &mut a_pos);
        let mut a_neg = vec![T::zero(); k];
        l2.grad_x_into(&q, &en, -T::one(), &mut a_neg);
        let dq: Vec<T> = a_pos.iter().zip(&a_neg).map(|(&p, &n)| p - n).collect();
        let dpos: Vec<T> = a_pos.iter().map(|&p| -p).collect();
        let mut out = Vec::new();
        push_projection_rows(Self::PROJ, self.features.row(tr.prev), &dq, &mut out);
        push_projection_rows(Self::PROJ, self.features.row(tr.pos), &dpos, &mut out);
        push_projection_rows(Self::PROJ, self.features.row(tr.neg), &a_neg, &mut out);
        out
    }
}

/// Weighted nearest neighbor: `-‖w ∘ (f_i - f_j)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wnn<T> {
    features: Arc<FeatureMatrix<T>>,
    /// `D x 1`
    weights: Matrix<T>,
}

impl<T: Scalar> Wnn<T> {
    pub const WEIGHTS: usize = 0;

    /// Starts from unit weights (plain Euclidean distance).
    pub fn init(features: Arc<FeatureMatrix<T>>) -> Self {
        let d = features.dim();
        Self {
            features,
            weights: Matrix::from_vec(d, 1, vec![T::one(); d]),
        }
    }

    pub fn from_parts(features: Arc<FeatureMatrix<T>>, weights: Vec<T>) -> Result<Self> {
        check_features(&features, weights.len())?;
        let d = weights.len();
        Ok(Self {
            features,
            weights: Matrix::from_vec(d, 1, weights),
        })
    }

    pub fn features(&self) -> &Arc<FeatureMatrix<T>> {
        &self.features
    }

    pub fn weights(&self) -> &[T] {
        self.weights.as_slice()
    }

    /// `(c, f_ic - f_jc)` over the union of both supports.
    fn sparse_diff(&self, i: usize, j: usize) -> Vec<(usize, T)> {
        let (a, b) = (self.features.row(i), self.features.row(j));
        let (mut x, mut y) = (0, 0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while x < a.len() || y < b.len() {
            match (a.get(x), b.get(y)) {
                (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                    out.push((ca, va - vb));
                    x += 1;
                    y += 1;
                }
                (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                    out.push((ca, va));
                    x += 1;
                }
                (Some(&(ca, va)), None) => {
                    out.push((ca, va));
                    x += 1;
                }
                (_, Some(&(cb, vb))) => {
                    out.push((cb, -vb));
                    y += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        out
    }

    pub fn pair_score(&self, src: usize, dst: usize) -> T {
        let w = self.weights.as_slice();
        -self
            .sparse_diff(src, dst)
            .into_iter()
            .map(|(c, d)| {
                let wd = w[c] * d;
                wd * wd
            })
            .sum::<T>()
    }
}

impl<T: Scalar> RankingModel<T> for Wnn<T> {
    fn num_users(&self) -> usize {
        1
    }

    fn num_items(&self) -> usize {
        self.features.num_items()
    }

    fn score(&self, _user: usize, prev: usize, item: usize) -> T {
        self.pair_score(prev, item)
    }
}

impl<T: Scalar> Trainable<T> for Wnn<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["weights"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        assert_eq!(b, Self::WEIGHTS, "Wnn has no block {b}");
        &self.weights
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        assert_eq!(b, Self::WEIGHTS, "Wnn has no block {b}");
        &mut self.weights
    }

    fn block_class(&self, _b: usize) -> ParamClass {
        ParamClass::Embedding
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        // ∂(-w_c² δ_c²)/∂w_c = -2 w_c δ_c²
        let w = self.weights.as_slice();
        let two = T::one() + T::one();
        let mut out = Vec::new();
        for (c, d) in self.sparse_diff(tr.prev, tr.pos) {
            out.push(RowGradient::new(Self::WEIGHTS, c, vec![-two * w[c] * d * d]));
        }
        for (c, d) in self.sparse_diff(tr.prev, tr.neg) {
            out.push(RowGradient::new(Self::WEIGHTS, c, vec![two * w[c] * d * d]));
        }
        out
    }
}

/// Precomputed all-items scorer used for evaluation.
pub enum PairScorer<'a, T> {
    Embedded {
        embeddings: Matrix<T>,
        translation: Option<&'a [T]>,
        distance: DistanceKind,
    },
    Weighted(&'a Wnn<T>),
}

impl<T: Scalar> PairScorer<'_, T> {
    /// Scores of every item as the destination of an edge from `src`.
    pub fn scores_from(&self, src: usize, out: &mut [T]) {
        match self {
            PairScorer::Embedded {
                embeddings,
                translation,
                distance,
            } => {
                let mut q = embeddings.row(src).to_vec();
                if let Some(t) = translation {
                    for (q, &t) in q.iter_mut().zip(t.iter()) {
                        *q += t;
                    }
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o = -distance.eval(&q, embeddings.row(j));
                }
            }
            PairScorer::Weighted(m) => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = m.pair_score(src, j);
                }
            }
        }
    }
}

/// A trainable item-to-item model.
pub trait ItemPairModel<T: Scalar>: Trainable<T> {
    fn pair_scorer(&self) -> PairScorer<'_, T>;
}

impl<T: Scalar> ItemPairModel<T> for ContentTransRec<T> {
    fn pair_scorer(&self) -> PairScorer<'_, T> {
        PairScorer::Embedded {
            embeddings: embed_all(&self.features, &self.proj),
            translation: Some(self.translation()),
            distance: self.distance,
        }
    }
}

impl<T: Scalar> ItemPairModel<T> for Lmt<T> {
    fn pair_scorer(&self) -> PairScorer<'_, T> {
        PairScorer::Embedded {
            embeddings: embed_all(&self.features, &self.proj),
            translation: None,
            distance: DistanceKind::SquaredL2,
        }
    }
}

impl<T: Scalar> ItemPairModel<T> for Wnn<T> {
    fn pair_scorer(&self) -> PairScorer<'_, T> {
        PairScorer::Weighted(self)
    }
}
