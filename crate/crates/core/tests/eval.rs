mod common;

use common::{brute_force_metrics, random_dataset, TableModel};
use proptest::prelude::*;
use transrec::dataset::{split_leave_one_out, SequenceDataset};
use transrec::eval::{auc, evaluate, hit_at_k, rank_of_ground_truth, Split};
use transrec::rng::substream;
use transrec::RankingModel;

const METRIC_TOLERANCE: f64 = 1e-12;

struct Mapped<'a, F: Fn(f64) -> f64> {
    inner: &'a TableModel,
    f: F,
}

impl<F: Fn(f64) -> f64> RankingModel<f64> for Mapped<'_, F> {
    fn num_users(&self) -> usize {
        self.inner.nu
    }

    fn num_items(&self) -> usize {
        self.inner.ni
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> f64 {
        (self.f)(self.inner.score(user, prev, item))
    }
}

/// Scores the held-out item highest, everything else zero.
struct Oracle<'a>(&'a SequenceDataset, Split);

impl RankingModel<f64> for Oracle<'_> {
    fn num_users(&self) -> usize {
        self.0.num_users()
    }

    fn num_items(&self) -> usize {
        self.0.num_items()
    }

    fn score(&self, user: usize, _prev: usize, item: usize) -> f64 {
        let truth = match self.1 {
            Split::Test => self.0.test(user),
            Split::Validation => self.0.validation(user),
        };
        if truth == Some(item) {
            1.0
        } else {
            0.0
        }
    }
}

struct Constant(usize, usize);

impl RankingModel<f64> for Constant {
    fn num_users(&self) -> usize {
        self.0
    }

    fn num_items(&self) -> usize {
        self.1
    }

    fn score(&self, _: usize, _: usize, _: usize) -> f64 {
        0.25
    }
}

#[test]
fn metrics_match_brute_force_oracle() {
    for seed in 0..20 {
        let mut rng = substream(seed, "metric-oracle");
        let ds = random_dataset(&mut rng, 10, 50, 12);
        let m = TableModel::random(10, 50, &mut rng);
        for split in [Split::Test, Split::Validation] {
            for k in [1, 5, 10, 50] {
                let r = evaluate(&m, &ds, split, k).unwrap();
                let o = brute_force_metrics(&m, &ds, split, k);
                assert_eq!(r.evaluated, o.evaluated);
                assert!(
                    (r.auc - o.auc).abs() <= METRIC_TOLERANCE,
                    "seed {seed}: auc {} vs {}",
                    r.auc,
                    o.auc
                );
                assert!((r.auc_tie_aware - o.auc_tie_aware).abs() <= METRIC_TOLERANCE);
                assert!((r.hit_at_k - o.hit).abs() <= METRIC_TOLERANCE, "seed {seed} k {k}");
            }
        }
    }
}

#[test]
fn perfect_and_constant_models() {
    let mut rng = substream(1, "metric-oracle");
    let ds = random_dataset(&mut rng, 8, 30, 10);
    let r = evaluate(&Oracle(&ds, Split::Test), &ds, Split::Test, 1).unwrap();
    assert_eq!((r.auc, r.auc_tie_aware, r.hit_at_k), (1.0, 1.0, 1.0));
    assert!(r.ranks.iter().all(|x| x.rank == 1));

    let c = Constant(ds.num_users(), ds.num_items());
    let r = evaluate(&c, &ds, Split::Test, 10).unwrap();
    assert_eq!(r.auc, 0.0);
    assert_eq!(r.auc_tie_aware, 0.5);
    for u in 0..ds.num_users() {
        let o = rank_of_ground_truth(&c, &ds, u, Split::Test).unwrap();
        // pessimistic: ranked below every tied candidate
        assert_eq!(o.rank, o.negatives + 1);
        let candidates = 1 + (0..ds.num_items()).filter(|&j| !ds.has_interacted(u, j)).count();
        assert_eq!(o.rank, candidates);
    }
}

#[test]
fn users_without_negatives_are_skipped() {
    let seqs = vec![vec![0, 1, 2, 3], vec![0, 1, 2]];
    let ds = split_leave_one_out(SequenceDataset::from_sequences(4, seqs).unwrap()).dataset;
    let r = evaluate(&Constant(2, 4), &ds, Split::Test, 1).unwrap();
    assert_eq!((r.evaluated, r.skipped), (1, 1));
}

#[test]
fn monotone_transforms_leave_metrics_unchanged() {
    for seed in 0..5 {
        let mut rng = substream(seed, "metric-oracle");
        let ds = random_dataset(&mut rng, 10, 40, 10);
        let m = TableModel::random(10, 40, &mut rng);
        let base = evaluate(&m, &ds, Split::Test, 10).unwrap();
        let transforms: [fn(f64) -> f64; 3] = [|x| x.exp(), |x| 3.0 * x - 7.0, |x| x * x * x];
        for f in transforms {
            let r = evaluate(&Mapped { inner: &m, f }, &ds, Split::Test, 10).unwrap();
            assert_eq!(r.auc, base.auc);
            assert_eq!(r.auc_tie_aware, base.auc_tie_aware);
            assert_eq!(r.hit_at_k, base.hit_at_k);
        }
    }
}

proptest! {
    #[test]
    fn hit_rate_is_monotone_in_k(seed in 0u64..1000) {
        let mut rng = substream(seed, "metric-oracle");
        let ds = random_dataset(&mut rng, 6, 25, 8);
        let m = TableModel::random(6, 25, &mut rng);
        let mut last = 0.0;
        for k in 1..=25 {
            let h = hit_at_k(&m, &ds, Split::Test, k);
            prop_assert!(h >= last);
            last = h;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn negated_scores_complement_auc(seed in 0u64..1000) {
        let mut rng = substream(seed, "metric-oracle");
        let ds = random_dataset(&mut rng, 6, 25, 8);
        let m = TableModel::random(6, 25, &mut rng);
        let neg = Mapped { inner: &m, f: |x: f64| -x };
        let (a, b) = (auc(&m, &ds, Split::Test), auc(&neg, &ds, Split::Test));
        prop_assert!(a + b <= 1.0 + METRIC_TOLERANCE);
        let (ta, tb) = (
            evaluate(&m, &ds, Split::Test, 1).unwrap().auc_tie_aware,
            evaluate(&neg, &ds, Split::Test, 1).unwrap().auc_tie_aware,
        );
        prop_assert!((ta + tb - 1.0).abs() <= METRIC_TOLERANCE);
    }

    #[test]
    fn untied_negation_sums_to_one(seed in 0u64..500) {
        let mut rng = substream(seed, "metric-oracle");
        let ds = random_dataset(&mut rng, 6, 25, 8);
        let mut m = TableModel::random(6, 25, &mut rng);
        // distinct scores: break every tie by position
        for (i, x) in m.table.iter_mut().enumerate() {
            *x += i as f64 * 1e-6;
        }
        let neg = Mapped { inner: &m, f: |x: f64| -x };
        let s = auc(&m, &ds, Split::Test) + auc(&neg, &ds, Split::Test);
        prop_assert!((s - 1.0).abs() <= METRIC_TOLERANCE);
    }
}
