//! Inner-product baselines: matrix factorization (BPR-MF), factorized Markov
//! chain (FMC) and their sum (FPMC).

use rand::Rng;

use super::INIT_SCALE;
use crate::linalg::{dot, Matrix};
use crate::model::{ParamClass, RankingModel, RowGradient, Trainable, Triple};
use crate::rng::fill_uniform;
use crate::scalar::Scalar;

fn noise<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    let mut m = Matrix::zeros(rows, cols);
    fill_uniform(rng, m.as_mut_slice(), -INIT_SCALE, INIT_SCALE);
    m
}

fn scaled<T: Scalar>(v: &[T], s: T) -> Vec<T> {
    v.iter().map(|&x| x * s).collect()
}

fn diff<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `<M_u, N_j> (+ b_j)`. Ignores the previous item.
#[derive(Debug, Clone, PartialEq)]
pub struct BprMf<T> {
    user: Matrix<T>,
    item: Matrix<T>,
    bias: Matrix<T>,
    item_bias: bool,
}

impl<T: Scalar> BprMf<T> {
    pub const USER: usize = 0;
    pub const ITEM: usize = 1;
    pub const BIAS: usize = 2;

    pub fn init<R: Rng + ?Sized>(num_users: usize, num_items: usize, dim: usize, item_bias: bool, rng: &mut R) -> Self {
        Self {
            user: noise(num_users, dim, rng),
            item: noise(num_items, dim, rng),
            bias: Matrix::zeros(num_items, 1),
            item_bias,
        }
    }

    pub fn zeros(num_users: usize, num_items: usize, dim: usize, item_bias: bool) -> Self {
        Self {
            user: Matrix::zeros(num_users, dim),
            item: Matrix::zeros(num_items, dim),
            bias: Matrix::zeros(num_items, 1),
            item_bias,
        }
    }

    pub fn has_item_bias(&self) -> bool {
        self.item_bias
    }
}

impl<T: Scalar> RankingModel<T> for BprMf<T> {
    fn num_users(&self) -> usize {
        self.user.rows()
    }

    fn num_items(&self) -> usize {
        self.item.rows()
    }

    fn score(&self, user: usize, _prev: usize, item: usize) -> T {
        let b = if self.item_bias {
            self.bias.as_slice()[item]
        } else {
            T::zero()
        };
        dot(self.user.row(user), self.item.row(item)) + b
    }
}

impl<T: Scalar> Trainable<T> for BprMf<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["user", "item", "bias"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.user, &self.item, &self.bias][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::USER => &mut self.user,
            Self::ITEM => &mut self.item,
            Self::BIAS => &mut self.bias,
            _ => panic!("BprMf has no block {b}"),
        }
    }

    fn block_class(&self, b: usize) -> ParamClass {
        if b == Self::BIAS {
            ParamClass::Bias
        } else {
            ParamClass::Embedding
        }
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let mu = self.user.row(tr.user);
        let mut g = vec![
            RowGradient::new(Self::USER, tr.user, diff(self.item.row(tr.pos), self.item.row(tr.neg))),
            RowGradient::new(Self::ITEM, tr.pos, mu.to_vec()),
            RowGradient::new(Self::ITEM, tr.neg, scaled(mu, -T::one())),
        ];
        if self.item_bias {
            g.push(RowGradient::new(Self::BIAS, tr.pos, vec![T::one()]));
            g.push(RowGradient::new(Self::BIAS, tr.neg, vec![-T::one()]));
        }
        g
    }
}

/// `<P_i, Q_j> (+ b_j)`. Ignores the user.
#[derive(Debug, Clone, PartialEq)]
pub struct Fmc<T> {
    num_users: usize,
    prev: Matrix<T>,
    next: Matrix<T>,
    bias: Matrix<T>,
    item_bias: bool,
}

impl<T: Scalar> Fmc<T> {
    pub const PREV: usize = 0;
    pub const NEXT: usize = 1;
    pub const BIAS: usize = 2;

    pub fn init<R: Rng + ?Sized>(num_users: usize, num_items: usize, dim: usize, item_bias: bool, rng: &mut R) -> Self {
        Self {
            num_users,
            prev: noise(num_items, dim, rng),
            next: noise(num_items, dim, rng),
            bias: Matrix::zeros(num_items, 1),
            item_bias,
        }
    }

    pub fn zeros(num_users: usize, num_items: usize, dim: usize, item_bias: bool) -> Self {
        Self {
            num_users,
            prev: Matrix::zeros(num_items, dim),
            next: Matrix::zeros(num_items, dim),
            bias: Matrix::zeros(num_items, 1),
            item_bias,
        }
    }

    pub fn has_item_bias(&self) -> bool {
        self.item_bias
    }
}

impl<T: Scalar> RankingModel<T> for Fmc<T> {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.next.rows()
    }

    fn score(&self, _user: usize, prev: usize, item: usize) -> T {
        let b = if self.item_bias {
            self.bias.as_slice()[item]
        } else {
            T::zero()
        };
        dot(self.prev.row(prev), self.next.row(item)) + b
    }
}

impl<T: Scalar> Trainable<T> for Fmc<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["prev", "next", "bias"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.prev, &self.next, &self.bias][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::PREV => &mut self.prev,
            Self::NEXT => &mut self.next,
            Self::BIAS => &mut self.bias,
            _ => panic!("Fmc has no block {b}"),
        }
    }

    fn block_class(&self, b: usize) -> ParamClass {
        if b == Self::BIAS {
            ParamClass::Bias
        } else {
            ParamClass::Embedding
        }
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let pi = self.prev.row(tr.prev);
        let mut g = vec![
            RowGradient::new(Self::PREV, tr.prev, diff(self.next.row(tr.pos), self.next.row(tr.neg))),
            RowGradient::new(Self::NEXT, tr.pos, pi.to_vec()),
            RowGradient::new(Self::NEXT, tr.neg, scaled(pi, -T::one())),
        ];
        if self.item_bias {
            g.push(RowGradient::new(Self::BIAS, tr.pos, vec![T::one()]));
            g.push(RowGradient::new(Self::BIAS, tr.neg, vec![-T::one()]));
        }
        g
    }
}

/// `<M_u, N_j> + <P_i, Q_j>`: matrix factorization plus a factorized Markov
/// chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Fpmc<T> {
    user: Matrix<T>,
    item: Matrix<T>,
    prev: Matrix<T>,
    next: Matrix<T>,
}

impl<T: Scalar> Fpmc<T> {
    pub const USER: usize = 0;
    pub const ITEM: usize = 1;
    pub const PREV: usize = 2;
    pub const NEXT: usize = 3;

    pub fn init<R: Rng + ?Sized>(num_users: usize, num_items: usize, dim: usize, rng: &mut R) -> Self {
        Self {
            user: noise(num_users, dim, rng),
            item: noise(num_items, dim, rng),
            prev: noise(num_items, dim, rng),
            next: noise(num_items, dim, rng),
        }
    }

    pub fn zeros(num_users: usize, num_items: usize, dim: usize) -> Self {
        Self {
            user: Matrix::zeros(num_users, dim),
            item: Matrix::zeros(num_items, dim),
            prev: Matrix::zeros(num_items, dim),
            next: Matrix::zeros(num_items, dim),
        }
    }

    /// The user-item term `<M_u, N_j>`.
    pub fn preference(&self, user: usize, item: usize) -> T {
        dot(self.user.row(user), self.item.row(item))
    }

    /// The item-item term `<P_i, Q_j>`.
    pub fn transition(&self, prev: usize, item: usize) -> T {
        dot(self.prev.row(prev), self.next.row(item))
    }
}

impl<T: Scalar> RankingModel<T> for Fpmc<T> {
    fn num_users(&self) -> usize {
        self.user.rows()
    }

    fn num_items(&self) -> usize {
        self.item.rows()
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> T {
        self.preference(user, item) + self.transition(prev, item)
    }
}

impl<T: Scalar> Trainable<T> for Fpmc<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["user", "item", "prev", "next"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.user, &self.item, &self.prev, &self.next][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::USER => &mut self.user,
            Self::ITEM => &mut self.item,
            Self::PREV => &mut self.prev,
            Self::NEXT => &mut self.next,
            _ => panic!("Fpmc has no block {b}"),
        }
    }

    fn block_class(&self, _b: usize) -> ParamClass {
        ParamClass::Embedding
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let mu = self.user.row(tr.user);
        let pi = self.prev.row(tr.prev);
        vec![
            RowGradient::new(Self::USER, tr.user, diff(self.item.row(tr.pos), self.item.row(tr.neg))),
            RowGradient::new(Self::ITEM, tr.pos, mu.to_vec()),
            RowGradient::new(Self::ITEM, tr.neg, scaled(mu, -T::one())),
            RowGradient::new(Self::PREV, tr.prev, diff(self.next.row(tr.pos), self.next.row(tr.neg))),
            RowGradient::new(Self::NEXT, tr.pos, pi.to_vec()),
            RowGradient::new(Self::NEXT, tr.neg, scaled(pi, -T::one())),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn zero_parameters_score_zero() {
        assert_eq!(BprMf::<f64>::zeros(2, 3, 4, true).score(1, 0, 2), 0.0);
        assert_eq!(Fmc::<f64>::zeros(2, 3, 4, false).score(1, 0, 2), 0.0);
        let mut f = Fpmc::<f64>::init(2, 3, 4, &mut substream(0, "i"));
        for b in 0..4 {
            f.block_mut(b).as_mut_slice().fill(0.0);
        }
        assert_eq!(f.score(1, 0, 2), 0.0);
    }

    #[test]
    fn bprmf_ignores_previous_item() {
        let m = BprMf::<f64>::init(3, 5, 4, true, &mut substream(1, "i"));
        for j in 0..5 {
            assert_eq!(m.score(2, 0, j), m.score(2, 4, j));
        }
    }

    #[test]
    fn fmc_ignores_user() {
        let m = Fmc::<f64>::init(3, 5, 4, false, &mut substream(1, "i"));
        for j in 0..5 {
            assert_eq!(m.score(0, 3, j), m.score(2, 3, j));
        }
    }

    #[test]
    fn fpmc_is_sum_of_components() {
        let m = Fpmc::<f64>::init(4, 6, 3, &mut substream(2, "i"));
        for u in 0..4 {
            for i in 0..6 {
                for j in 0..6 {
                    let sum = m.preference(u, j) + m.transition(i, j);
                    assert_eq!(m.score(u, i, j), sum);
                }
            }
        }
    }

    #[test]
    fn init_noise_is_small() {
        let m = Fpmc::<f64>::init(4, 6, 3, &mut substream(2, "i"));
        for b in 0..4 {
            assert!(m.block(b).as_slice().iter().all(|v| v.abs() <= INIT_SCALE));
        }
    }

    #[test]
    fn bias_flag_controls_gradient() {
        let tr = Triple {
            user: 0,
            prev: 1,
            pos: 2,
            neg: 3,
        };
        let with = BprMf::<f64>::init(1, 4, 2, true, &mut substream(3, "i"));
        let without = BprMf::<f64>::init(1, 4, 2, false, &mut substream(3, "i"));
        assert!(with.delta_gradient(&tr).iter().any(|g| g.block == BprMf::<f64>::BIAS));
        assert!(without
            .delta_gradient(&tr)
            .iter()
            .all(|g| g.block != BprMf::<f64>::BIAS));
    }
}
