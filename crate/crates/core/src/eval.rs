//! Leave-one-out ranking metrics: AUC and Hit@K over the full catalog.
//!
//! For user `u` with held-out item `g`, the candidates are `g` together with
//! every item `u` never interacted with. Ranks are pessimistic: a negative
//! scoring equal to `g` is ranked ahead of it. The primary AUC counts a
//! negative only when `g` strictly outscores it; the tie-aware AUC gives
//! ties half credit.

use rayon::prelude::*;

use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};
use crate::model::RankingModel;
use crate::scalar::Scalar;

/// Hit-rate cutoff for sequential recommendation.
pub const DEFAULT_HIT_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Position of a ground-truth item among its candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankOutcome {
    /// 1-based pessimistic rank among `negatives + 1` candidates.
    pub rank: usize,
    /// Number of negative candidates.
    pub negatives: usize,
    /// Negatives scored strictly below the ground truth.
    pub wins: usize,
    /// Negatives scored exactly equal to the ground truth.
    pub ties: usize,
}

impl RankOutcome {
    pub fn auc(&self) -> f64 {
        self.wins as f64 / self.negatives as f64
    }

    pub fn auc_tie_aware(&self) -> f64 {
        (self.wins as f64 + 0.5 * self.ties as f64) / self.negatives as f64
    }
}

/// Ranks `target` against every item `j != target` for which `is_negative(j)`
/// holds.
pub fn rank_against<T: Scalar>(scores: &[T], target: usize, is_negative: impl Fn(usize) -> bool) -> RankOutcome {
    let st = scores[target];
    let (mut negatives, mut wins, mut ties) = (0, 0, 0);
    for (j, &s) in scores.iter().enumerate() {
        if j == target || !is_negative(j) {
            continue;
        }
        negatives += 1;
        if st > s {
            wins += 1;
        } else if st == s {
            ties += 1;
        }
    }
    RankOutcome {
        rank: 1 + negatives - wins,
        negatives,
        wins,
        ties,
    }
}

/// Ground-truth item and its context item for `user` under `split`.
pub fn held_out(ds: &SequenceDataset, user: usize, split: Split) -> Result<(usize, usize)> {
    if !ds.is_split() {
        return Err(Error::InvalidArgument("dataset has no leave-one-out split".into()));
    }
    if user >= ds.num_users() {
        return Err(Error::InvalidArgument(format!("user index {user} out of range")));
    }
    let s = ds.sequence(user);
    let n = s.len();
    Ok(match split {
        Split::Validation => (s[n - 2], s[n - 3]),
        Split::Test => (s[n - 1], s[n - 2]),
    })
}

pub fn rank_of_ground_truth<T: Scalar, M: RankingModel<T> + ?Sized>(
    model: &M,
    ds: &SequenceDataset,
    user: usize,
    split: Split,
) -> Result<RankOutcome> {
    let (target, prev) = held_out(ds, user, split)?;
    let mut scores = vec![T::zero(); ds.num_items()];
    model.score_all(user, prev, &mut scores);
    Ok(rank_against(&scores, target, |j| !ds.has_interacted(user, j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserRank {
    pub user: usize,
    pub rank: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub auc_tie_aware: f64,
    pub hit_at_k: f64,
    pub k: usize,
    pub evaluated: usize,
    /// Cases skipped because no negative candidate exists.
    pub skipped: usize,
    pub ranks: Vec<UserRank>,
}

impl EvalReport {
    /// Aggregates per-case outcomes; cases with no negatives are skipped.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (usize, RankOutcome)>, k: usize) -> Self {
        let (mut auc, mut auc_ties, mut hits) = (0.0, 0.0, 0usize);
        let mut ranks = Vec::new();
        let mut skipped = 0;
        for (case, o) in outcomes {
            if o.negatives == 0 {
                skipped += 1;
                continue;
            }
            auc += o.auc();
            auc_ties += o.auc_tie_aware();
            if o.rank <= k {
                hits += 1;
            }
            ranks.push(UserRank {
                user: case,
                rank: o.rank,
                candidates: o.negatives + 1,
            });
        }
        let n = ranks.len();
        let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        Self {
            auc: mean(auc),
            auc_tie_aware: mean(auc_ties),
            hit_at_k: mean(hits as f64),
            k,
            evaluated: n,
            skipped,
            ranks,
        }
    }

    pub fn to_kv(&self) -> String {
        format!(
            "auc={:.6}\nauc_tie_aware={:.6}\nhit_at_{}={:.6}\nhit_k={}\nevaluated={}\nskipped={}\n",
            self.auc, self.auc_tie_aware, self.k, self.hit_at_k, self.k, self.evaluated, self.skipped
        )
    }
}

/// Per-user outcomes, computed in parallel against a frozen model.
pub fn rank_all<T, M>(model: &M, ds: &SequenceDataset, split: Split) -> Result<Vec<(usize, RankOutcome)>>
where
    T: Scalar,
    M: RankingModel<T> + Sync + ?Sized,
{
    if !ds.is_split() {
        return Err(Error::InvalidArgument("dataset has no leave-one-out split".into()));
    }
    if model.num_items() != ds.num_items() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} items, dataset has {}",
            model.num_items(),
            ds.num_items()
        )));
    }
    if model.num_users() != ds.num_users() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} users, dataset has {}",
            model.num_users(),
            ds.num_users()
        )));
    }
    (0..ds.num_users())
        .into_par_iter()
        .map(|u| rank_of_ground_truth(model, ds, u, split).map(|o| (u, o)))
        .collect()
}

pub fn evaluate<T, M>(model: &M, ds: &SequenceDataset, split: Split, k: usize) -> Result<EvalReport>
where
    T: Scalar,
    M: RankingModel<T> + Sync + ?Sized,
{
    Ok(EvalReport::from_outcomes(rank_all(model, ds, split)?, k))
}

/// Strict AUC. Panics on shape mismatch between model and dataset.
pub fn auc<T, M>(model: &M, ds: &SequenceDataset, split: Split) -> f64
where
    T: Scalar,
    M: RankingModel<T> + Sync + ?Sized,
{
    evaluate(model, ds, split, DEFAULT_HIT_K)
        .expect("model and dataset shapes agree")
        .auc
}

/// Fraction of users whose held-out item ranks within the top `k`.
pub fn hit_at_k<T, M>(model: &M, ds: &SequenceDataset, split: Split, k: usize) -> f64
where
    T: Scalar,
    M: RankingModel<T> + Sync + ?Sized,
{
    evaluate(model, ds, split, k)
        .expect("model and dataset shapes agree")
        .hit_at_k
}
