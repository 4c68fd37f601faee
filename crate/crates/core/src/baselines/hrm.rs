use rand::Rng;

use super::INIT_SCALE;
use crate::linalg::Matrix;
use crate::model::{ParamClass, RankingModel, RowGradient, Trainable, Triple};
use crate::rng::fill_uniform;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Average,
    Max,
}

/// Hierarchical representation model: `<pool(M_u, N_i), N_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hrm<T> {
    user: Matrix<T>,
    item: Matrix<T>,
    pooling: Pooling,
}

impl<T: Scalar> Hrm<T> {
    pub const USER: usize = 0;
    pub const ITEM: usize = 1;

    pub fn init<R: Rng + ?Sized>(
        num_users: usize,
        num_items: usize,
        dim: usize,
        pooling: Pooling,
        rng: &mut R,
    ) -> Self {
        let mut user = Matrix::zeros(num_users, dim);
        let mut item = Matrix::zeros(num_items, dim);
        fill_uniform(rng, user.as_mut_slice(), -INIT_SCALE, INIT_SCALE);
        fill_uniform(rng, item.as_mut_slice(), -INIT_SCALE, INIT_SCALE);
        Self { user, item, pooling }
    }

    pub fn from_parts(user: Matrix<T>, item: Matrix<T>, pooling: Pooling) -> Self {
        Self { user, item, pooling }
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    /// Pooled context `pool(M_u, N_i)`.
    pub fn context(&self, user: usize, prev: usize) -> Vec<T> {
        let two = T::one() + T::one();
        self.user
            .row(user)
            .iter()
            .zip(self.item.row(prev))
            .map(|(&m, &n)| match self.pooling {
                Pooling::Average => (m + n) / two,
                // ties resolve to the user side
                Pooling::Max => {
                    if m >= n {
                        m
                    } else {
                        n
                    }
                }
            })
            .collect()
    }
}

impl<T: Scalar> RankingModel<T> for Hrm<T> {
    fn num_users(&self) -> usize {
        self.user.rows()
    }

    fn num_items(&self) -> usize {
        self.item.rows()
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> T {
        crate::linalg::dot(&self.context(user, prev), self.item.row(item))
    }

    fn score_all(&self, user: usize, prev: usize, out: &mut [T]) {
        let z = self.context(user, prev);
        for (j, o) in out.iter_mut().enumerate() {
            *o = crate::linalg::dot(&z, self.item.row(j));
        }
    }
}

impl<T: Scalar> Trainable<T> for Hrm<T> {
    fn block_names(&self) -> &'static [&'static str] {
        &["user", "item"]
    }

    fn block(&self, b: usize) -> &Matrix<T> {
        [&self.user, &self.item][b]
    }

    fn block_mut(&mut self, b: usize) -> &mut Matrix<T> {
        match b {
            Self::USER => &mut self.user,
            Self::ITEM => &mut self.item,
            _ => panic!("Hrm has no block {b}"),
        }
    }

    fn block_class(&self, _b: usize) -> ParamClass {
        ParamClass::Embedding
    }

    fn delta_gradient(&self, tr: &Triple) -> Vec<RowGradient<T>> {
        let k = self.user.cols();
        let z = self.context(tr.user, tr.prev);
        let np = self.item.row(tr.pos);
        let nn = self.item.row(tr.neg);
        let dz: Vec<T> = np.iter().zip(nn).map(|(&p, &n)| p - n).collect();

        let mut g_user = vec![T::zero(); k];
        let mut g_prev = vec![T::zero(); k];
        match self.pooling {
            Pooling::Average => {
                let half = T::of(0.5);
                for c in 0..k {
                    g_user[c] = half * dz[c];
                    g_prev[c] = half * dz[c];
                }
            }
            Pooling::Max => {
                let mu = self.user.row(tr.user);
                let ni = self.item.row(tr.prev);
                for c in 0..k {
                    if mu[c] >= ni[c] {
                        g_user[c] = dz[c];
                    } else {
                        g_prev[c] = dz[c];
                    }
                }
            }
        }
        vec![
            RowGradient::new(Self::USER, tr.user, g_user),
            RowGradient::new(Self::ITEM, tr.prev, g_prev),
            RowGradient::new(Self::ITEM, tr.pos, z.clone()),
            RowGradient::new(Self::ITEM, tr.neg, z.into_iter().map(|v| -v).collect()),
        ]
    }
}
