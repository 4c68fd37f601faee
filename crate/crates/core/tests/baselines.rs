mod common;

use common::{planted_sequences, planted_transrec};
use transrec::baselines::PopRec;
use transrec::dataset::{split_leave_one_out, SequenceDataset};
use transrec::retrieval::recommend_exhaustive;
use transrec::training::TrainConfig;
use transrec::zoo::{fit_model, ModelKind, ModelOptions};

#[test]
fn sampled_objective_rises_over_first_iterations() {
    let truth = planted_transrec(4, 100, 50, 5, 1.0);
    let ds = planted_sequences(&truth, 10, 2.0, 4);
    let config = TrainConfig {
        dim: 5,
        max_iterations: 3,
        patience: 3,
        seed: 4,
        ..TrainConfig::default()
    };
    for kind in ModelKind::ALL.into_iter().filter(|&k| k != ModelKind::PopRec) {
        let r = fit_model::<f64>(kind, &ds, &config, &ModelOptions::default())
            .unwrap()
            .report;
        let ll: Vec<f64> = r.records.iter().map(|x| x.mean_loglik).collect();
        assert_eq!(ll.len(), 3, "{kind}");
        assert!(ll[2] > ll[0], "{kind}: {ll:?}");
    }
}

#[test]
fn poprec_ranks_by_count_then_index() {
    // training prefixes: [3, 1, 1] and [2, 3]; counts 1 -> 2, 3 -> 2, 2 -> 1
    let seqs = vec![vec![3, 1, 1, 0, 4], vec![2, 3, 4, 0]];
    let ds = split_leave_one_out(SequenceDataset::from_sequences(6, seqs).unwrap()).dataset;
    let m = PopRec::<f64>::fit(&ds);
    assert_eq!(m.counts(), &[0.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
    let top: Vec<usize> = recommend_exhaustive(&m, 0, 0, 6, &[])
        .unwrap()
        .into_iter()
        .map(|x| x.0)
        .collect();
    assert_eq!(top, [1, 3, 2, 0, 4, 5]);
}
