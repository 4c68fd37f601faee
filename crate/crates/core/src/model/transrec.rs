use rand::Rng;

use super::{DistanceKind, ParamClass, RankingModel, RowGradient, Trainable, Triple};
use crate::error::{Error, Result};
use crate::linalg::{add_into, squared_norm, Matrix};
use crate::rng::fill_unit_vector;
use crate::scalar::Scalar;

/// Translation-based sequential recommender.
///
/// Items are points `γ_i` in a K-dimensional space constrained to the unit
/// ball. A user `u` is a translation `T_u = t + t_u`: a global vector plus a
/// personal offset. The score for moving from `i` to `j` is
/// `β_j - d(γ_i + T_u, γ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransRec<T> {
    distance: DistanceKind,
    /// `|I| x 1`
    beta: Matrix<T>,
    /// `|I| x K`
    gamma: Matrix<T>,
    /// `1 x K`
    t_global: Matrix<T>,
    /// `|U| x K`
    t_user: Matrix<T>,
}

impl<T: Scalar> TransRec<T> {
    pub const BETA: usize = 0;
    pub const GAMMA: usize = 1;
    pub const T_GLOBAL: usize = 2;
    pub const T_USER: usize = 3;

    /// All parameters zero.
    pub fn zeros(num_users: usize, num_items: usize, dim: usize, distance: DistanceKind) -> Self {
        Self {
            distance,
            beta: Matrix::zeros(num_items, 1),
            gamma: Matrix::zeros(num_items, dim),
            t_global: Matrix::zeros(1, dim),
            t_user: Matrix::zeros(num_users, dim),
        }
    }

    /// Item points and the global translation start as random unit vectors;
    /// biases and user offsets start at zero.
    pub fn init<R: Rng + ?Sized>(
        num_users: usize,
        num_items: usize,
        dim: usize,
        distance: DistanceKind,
        rng: &mut R,
    ) -> Result<Self> {
        if num_users == 0 || num_items == 0 || dim == 0 {
            return Err(Error::InvalidArgument(
                "users, items and dimension must all be at least 1".into(),
            ));
        }
        let mut model = Self::zeros(num_users, num_items, dim, distance);
        for i in 0..num_items {
            fill_unit_vector(rng, model.gamma.row_mut(i));
        }
        fill_unit_vector(rng, model.t_global.row_mut(0));
        Ok(model)
    }

    /// Builds a model from explicit parameters.
    pub fn from_parts(
        distance: DistanceKind,
        beta: Vec<T>,
        gamma: Matrix<T>,
        t_global: Vec<T>,
        t_user: Matrix<T>,
    ) -> Result<Self> {
        let dim = gamma.cols();
        if beta.len() != gamma.rows() {
            return Err(Error::DimensionMismatch {
                expected: gamma.rows(),
                actual: beta.len(),
            });
        }
        if t_global.len() != dim || t_user.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: if t_global.len() != dim {
                    t_global.len()
                } else {
                    t_user.cols()
                },
            });
        }
        Ok(Self {
            distance,
            beta: Matrix::from_vec(gamma.rows(), 1, beta),
            gamma,
            t_global: Matrix::from_vec(1, dim, t_global),
            t_user,
        })
    }

    pub fn distance_kind(&self) -> DistanceKind {
        self.distance
    }

    pub fn dim(&self) -> usize {
        self.gamma.cols()
    }

    pub fn beta(&self) -> &[T] {
        self.beta.as_slice()
    }

    pub fn beta_mut(&mut self) -> &mut [T] {
        self.beta.as_mut_slice()
    }

    pub fn gamma(&self) -> &Matrix<T> {
        &self.gamma
    }

    pub fn gamma_mut(&mut self) -> &mut Matrix<T> {
        &mut self.gamma
    }

    pub fn t_global(&self) -> &[T] {
        self.t_global.row(0)
    }

    pub fn t_global_mut(&mut self) -> &mut [T] {
        self.t_global.row_mut(0)
    }

    pub fn t_user(&self) -> &Matrix<T> {
        &self.t_user
    }

    pub fn t_user_mut(&mut self) -> &mut Matrix<T> {
        &mut self.t_user
    }

    /// `T_u = t + t_u`
    pub fn user_translation(&self, user: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        add_into(self.t_global(), self.t_user.row(user), &mut out);
        out
    }

    /// Query point `γ_i + T_u`.
    pub fn query(&self, user: usize, prev: usize) -> Vec<T> {
        let mut q = self.user_translation(user);
        for (q, &g) in q.iter_mut().zip(self.gamma.row(prev)) {
            *q += g;
        }
        q
    }

    #[inline]
    fn score_from_query(&self, query: &[T], item: usize) -> T {
        self.beta.as_slice()[item] - self.distance.eval(query, self.gamma.row(item))
    }
}

impl<T: Scalar> RankingModel<T> for TransRec<T> {
    fn num_users(&self) -> usize {
        self.t_user.rows()
    }

    fn num_items(&self) -> usize {
        self.gamma.rows()
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> T {
        let q = self.query(user, prev);
        self.score_from_query(&q, item)
    }

    fn score_all(&self, user: usize, prev: usize, out: &mut [T]) {
        let q = self.query(user, prev);
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.score_from_query(&q, j);
        }
    }
}

impl<T: Scalar> Trainable<T> for TransRec<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["beta", "gamma", "t_global", "t_user"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        match b {
            Self::BETA => &self.beta,
            Self::GAMMA => &self.gamma,
            Self::T_GLOBAL => &self.t_global,
            Self::T_USER => &self.t_user,
            _ => panic!("TransRec has no block {b}"),
        }
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::BETA => &mut self.beta,
            Self::GAMMA => &mut self.gamma,
            Self::T_GLOBAL => &mut self.t_global,
            Self::T_USER => &mut self.t_user,
            _ => panic!("TransRec has no block {b}"),
        }
    }

    fn block_class(&self, b: usize) -> ParamClass {
        match b {
            Self::BETA => ParamClass::Bias,
            Self::GAMMA => ParamClass::Embedding,
            _ => ParamClass::Translation,
        }
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let k = self.dim();
        let q = self.query(tr.user, tr.prev);
        let gp = self.gamma.row(tr.pos);
        let gn = self.gamma.row(tr.neg);

        // ∂Δ/∂q = -∂d(q, γ_pos)/∂q + ∂d(q, γ_neg)/∂q
        let mut dq = vec![T::zero(); k];
        self.distance.grad_x_into(&q, gp, -T::one(), &mut dq);
        self.distance.grad_x_into(&q, gn, T::one(), &mut dq);

        // ∂d(q, y)/∂y = -∂d(q, y)/∂q, and the score carries a minus sign.
        let mut dpos = vec![T::zero(); k];
        self.distance.grad_x_into(&q, gp, T::one(), &mut dpos);
        let mut dneg = vec![T::zero(); k];
        self.distance.grad_x_into(&q, gn, -T::one(), &mut dneg);

        vec![
            RowGradient::new(Self::GAMMA, tr.prev, dq.clone()),
            RowGradient::new(Self::T_GLOBAL, 0, dq.clone()),
            RowGradient::new(Self::T_USER, tr.user, dq),
            RowGradient::new(Self::GAMMA, tr.pos, dpos),
            RowGradient::new(Self::GAMMA, tr.neg, dneg),
            RowGradient::new(Self::BETA, tr.pos, vec![T::one()]),
            RowGradient::new(Self::BETA, tr.neg, vec![-T::one()]),
        ]
    }

    fn after_step(&mut self, tr: &Triple) {
        for i in [tr.prev, tr.pos, tr.neg] {
            super::project_into_ball(self.gamma.row_mut(i));
        }
    }

    fn check_constraints(&self) -> std::result::Result<(), String> {
        let tol = T::of(1e-9);
        for i in 0..self.gamma.rows() {
            let n = squared_norm(self.gamma.row(i)).sqrt();
            if n > T::one() + tol {
                return Err(format!("item {i} lies outside the unit ball (norm {n})"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn with_translation(t: Vec<f64>, tu: Vec<f64>) -> TransRec<f64> {
        let k = t.len();
        TransRec::from_parts(
            DistanceKind::L1,
            vec![0.0],
            Matrix::zeros(1, k),
            t,
            Matrix::from_vec(1, k, tu),
        )
        .unwrap()
    }

    #[test]
    fn user_translation_adds_offset() {
        assert_eq!(
            with_translation(vec![0.2, -1.0], vec![0.0, 0.0]).user_translation(0),
            vec![0.2, -1.0]
        );
        assert_eq!(
            with_translation(vec![0.0, 0.0], vec![0.5, 0.1]).user_translation(0),
            vec![0.5, 0.1]
        );
        assert_eq!(
            with_translation(vec![1.0, 0.0], vec![0.0, 1.0]).user_translation(0),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = TransRec::<f64>::zeros(2, 3, 4, DistanceKind::SquaredL2);
        assert_eq!(m.score(1, 0, 2), 0.0);
    }

    #[test]
    fn score_fixed_arithmetic() {
        let gamma = Matrix::from_vec(2, 2, vec![0.0, 0.0, 3.0, 4.0]);
        let m = TransRec::from_parts(
            DistanceKind::L1,
            vec![0.0, 0.5],
            gamma,
            vec![0.0, 0.0],
            Matrix::zeros(1, 2),
        )
        .unwrap();
        assert_eq!(m.score(0, 0, 1), -6.5);
    }

    #[test]
    fn exact_translation_scores_bias() {
        let gamma = Matrix::from_vec(3, 2, vec![0.1, 0.2, 0.4, 0.0, 0.3, 0.5]);
        let m = TransRec::<f64>::from_parts(
            DistanceKind::SquaredL2,
            vec![0.7, 0.7, 0.7],
            gamma,
            vec![0.1, 0.1],
            Matrix::from_vec(1, 2, vec![0.1, 0.2]),
        )
        .unwrap();
        // γ_0 + T_0 = (0.3, 0.5) = γ_2
        assert!((m.score(0, 0, 2) - 0.7).abs() < 1e-15);
        assert!(m.score(0, 0, 2) > m.score(0, 0, 1));
    }

    #[test]
    fn init_is_unit_zero_and_seeded() {
        let a = TransRec::<f64>::init(4, 6, 5, DistanceKind::L1, &mut substream(3, "init")).unwrap();
        let b = TransRec::<f64>::init(4, 6, 5, DistanceKind::L1, &mut substream(3, "init")).unwrap();
        assert_eq!(a, b);
        for i in 0..6 {
            assert!((squared_norm(a.gamma.row(i)).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!((squared_norm(a.t_global()).sqrt() - 1.0).abs() < 1e-12);
        assert!(a.beta().iter().all(|&b| b == 0.0));
        assert!(a.t_user().as_slice().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn init_rejects_empty_sizes() {
        assert!(TransRec::<f64>::init(0, 3, 2, DistanceKind::L1, &mut substream(1, "i")).is_err());
    }

    #[test]
    fn score_all_agrees_with_score() {
        let m = TransRec::<f32>::init(3, 7, 4, DistanceKind::SquaredL2, &mut substream(9, "init")).unwrap();
        let mut all = vec![0.0f32; 7];
        m.score_all(2, 5, &mut all);
        for (j, &s) in all.iter().enumerate() {
            assert_eq!(s, m.score(2, 5, j));
        }
    }
}
