use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::model::{ParamClass, RankingModel, RowGradient, Trainable, Triple};
use crate::rng::fill_unit_vector;
use crate::scalar::Scalar;

/// Personalized ranking metric embedding:
/// `-(α‖M_u - N_j‖² + (1 - α)‖P_i - P_j‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prme<T> {
    user: Matrix<T>,
    item: Matrix<T>,
    seq: Matrix<T>,
    alpha: T,
}

impl<T: Scalar> Prme<T> {
    pub const USER: usize = 0;
    pub const ITEM: usize = 1;
    pub const SEQ: usize = 2;

    /// Points start as random unit vectors. `alpha` must lie in `(0, 1)`.
    pub fn init<R: Rng + ?Sized>(
        num_users: usize,
        num_items: usize,
        dim: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "PRME alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let mut unit = |rows: usize| {
            let mut m = Matrix::zeros(rows, dim);
            for r in 0..rows {
                fill_unit_vector(rng, m.row_mut(r));
            }
            m
        };
        Ok(Self {
            user: unit(num_users),
            item: unit(num_items),
            seq: unit(num_items),
            alpha: T::of(alpha),
        })
    }

    /// Unchecked constructor, also admits the boundary weights 0 and 1.
    pub fn from_parts(user: Matrix<T>, item: Matrix<T>, seq: Matrix<T>, alpha: T) -> Self {
        Self { user, item, seq, alpha }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

impl<T: Scalar> RankingModel<T> for Prme<T> {
    fn num_users(&self) -> usize {
        self.user.rows()
    }

    fn num_items(&self) -> usize {
        self.item.rows()
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> T {
        let a = self.alpha;
        -(a * squared_distance(self.user.row(user), self.item.row(item))
            + (T::one() - a) * squared_distance(self.seq.row(prev), self.seq.row(item)))
    }
}

impl<T: Scalar> Trainable<T> for Prme<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["user", "item", "seq"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.user, &self.item, &self.seq][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::USER => &mut self.user,
            Self::ITEM => &mut self.item,
            Self::SEQ => &mut self.seq,
            _ => panic!("Prme has no block {b}"),
        }
    }

    fn block_class(&self, _b: usize) -> ParamClass {
        ParamClass::Embedding
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let two = T::one() + T::one();
        let wa = two * self.alpha;
        let wb = two * (T::one() - self.alpha);
        let mu = self.user.row(tr.user);
        let np = self.item.row(tr.pos);
        let nn = self.item.row(tr.neg);
        let pi = self.seq.row(tr.prev);
        let pp = self.seq.row(tr.pos);
        let pn = self.seq.row(tr.neg);

        let zip =
            |a: &[T], b: &[T], f: &dyn Fn(T, T) -> T| -> Vec<T> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
        // -α‖M_u - N_pos‖² + α‖M_u - N_neg‖²
        let d_user = zip(np, nn, &|p, n| wa * (p - n));
        let d_pos = zip(mu, np, &|m, p| wa * (m - p));
        let d_neg = zip(mu, nn, &|m, n| -wa * (m - n));
        // -(1-α)‖P_i - P_pos‖² + (1-α)‖P_i - P_neg‖²
        let s_prev = zip(pp, pn, &|p, n| wb * (p - n));
        let s_pos = zip(pi, pp, &|i, p| wb * (i - p));
        let s_neg = zip(pi, pn, &|i, n| -wb * (i - n));

        vec![
            RowGradient::new(Self::USER, tr.user, d_user),
            RowGradient::new(Self::ITEM, tr.pos, d_pos),
            RowGradient::new(Self::ITEM, tr.neg, d_neg),
            RowGradient::new(Self::SEQ, tr.prev, s_prev),
            RowGradient::new(Self::SEQ, tr.pos, s_pos),
            RowGradient::new(Self::SEQ, tr.neg, s_neg),
        ]
    }
}
