mod common;

use std::sync::Arc;

use common::random_features;
use transrec::dataset::{split_leave_one_out, SequenceDataset};
use transrec::item2item::{train_i2i, EdgeDataset, EdgeSplit, I2IConfig, I2IKind};
use transrec::persist::{scalar_width, ModelFile, StoredModel};
use transrec::rng::substream;
use transrec::training::TrainConfig;
use transrec::zoo::{fit_model, AnyModel, ModelKind, ModelOptions};
use transrec::{Error, RankingModel, Scalar};

fn toy() -> SequenceDataset {
    let seqs = (0..8).map(|u| (0..6).map(|k| (u * 3 + k * 5) % 15).collect()).collect();
    split_leave_one_out(SequenceDataset::from_sequences(15, seqs).unwrap()).dataset
}

fn config() -> TrainConfig {
    TrainConfig {
        dim: 3,
        max_iterations: 2,
        seed: 9,
        ..TrainConfig::default()
    }
}

fn values<T: Scalar>(m: &AnyModel<T>) -> Vec<f64> {
    m.blocks()
        .iter()
        .flat_map(|b| b.as_slice().iter().map(|x| x.to_f64().unwrap()))
        .collect()
}

fn roundtrip<T: Scalar>(ds: &SequenceDataset) {
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let m = fit_model::<T>(kind, ds, &config(), &ModelOptions::default())
            .unwrap()
            .model;
        let file = ModelFile::sequential(m.clone(), ds.users().clone(), ds.items().clone(), 9, "# note".into());
        let p = dir.path().join(format!("{kind}.bin"));
        file.save(&p).unwrap();
        let back = ModelFile::<T>::load(&p).unwrap();
        assert_eq!(back, file, "{kind}");
        let bm = back.as_sequential().unwrap();
        assert_eq!(bm.kind(), kind);
        let (a, b) = (values(&m), values(bm));
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{kind}");
        for u in 0..ds.num_users() {
            for j in 0..ds.num_items() {
                assert!(m.score(u, 0, j) == bm.score(u, 0, j));
            }
        }
        back.check_dataset(ds).unwrap();
        // saving again gives the same bytes
        assert_eq!(back.to_bytes().unwrap(), std::fs::read(&p).unwrap());
    }
}

#[test]
fn every_sequential_kind_roundtrips_bit_exactly() {
    let ds = toy();
    roundtrip::<f64>(&ds);
    roundtrip::<f32>(&ds);
}

#[test]
fn scalar_width_is_recorded() {
    let ds = toy();
    let m = fit_model::<f32>(ModelKind::TransRecL1, &ds, &config(), &ModelOptions::default())
        .unwrap()
        .model;
    let bytes = ModelFile::sequential(m, ds.users().clone(), ds.items().clone(), 0, String::new())
        .to_bytes()
        .unwrap();
    assert_eq!(scalar_width(&bytes).unwrap(), 4);
    assert!(matches!(
        ModelFile::<f64>::from_bytes(&bytes),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn damaged_files_are_corrupt() {
    let ds = toy();
    let m = fit_model::<f64>(ModelKind::Fpmc, &ds, &config(), &ModelOptions::default())
        .unwrap()
        .model;
    let bytes = ModelFile::sequential(m, ds.users().clone(), ds.items().clone(), 0, "x".into())
        .to_bytes()
        .unwrap();
    for cut in [0, 5, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            matches!(ModelFile::<f64>::from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))),
            "cut {cut}"
        );
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(ModelFile::<f64>::from_bytes(&extra), Err(Error::Corrupt(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(ModelFile::<f64>::from_bytes(&bad), Err(Error::Corrupt(_))));
}

#[test]
fn dataset_mismatch_is_detected() {
    let ds = toy();
    let m = fit_model::<f64>(ModelKind::PopRec, &ds, &config(), &ModelOptions::default())
        .unwrap()
        .model;
    let file = ModelFile::sequential(m, ds.users().clone(), ds.items().clone(), 0, String::new());
    let other = split_leave_one_out(SequenceDataset::from_sequences(16, vec![vec![0, 1, 2, 15]]).unwrap()).dataset;
    assert!(matches!(file.check_dataset(&other), Err(Error::ShapeMismatch(_))));
}

#[test]
fn item_to_item_models_roundtrip() {
    let mut rng = substream(4, "planted");
    let n = 12;
    let features = random_features(&mut rng, n, 7, 0.4);
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 3) % n)]).collect();
    let edges = EdgeDataset::split(n, edges, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in [I2IKind::TransRec, I2IKind::Wnn, I2IKind::Lmt] {
        let cfg = I2IConfig {
            train: TrainConfig {
                dim: 3,
                max_iterations: 2,
                ..TrainConfig::default()
            },
            ..I2IConfig::default()
        };
        let m = train_i2i(&edges, Arc::clone(&features), kind, &cfg).unwrap().model;
        let file = ModelFile::item_to_item(&m, features.items().clone(), 4, String::new());
        let p = dir.path().join("m.bin");
        file.save(&p).unwrap();
        let back = ModelFile::<f64>::load(&p).unwrap();
        assert_eq!(back, file);
        assert!(matches!(back.as_sequential(), Err(Error::InvalidArgument(_))));
        let StoredModel::ItemToItem(params) = back.model else {
            panic!("{}", kind.name())
        };
        let bound = params.clone().bind(Arc::clone(&features)).unwrap();
        assert_eq!(bound, m);
        let r1 = m.evaluate(&edges, EdgeSplit::Test, 10).unwrap();
        let r2 = bound.evaluate(&edges, EdgeSplit::Test, 10).unwrap();
        assert_eq!(r1.auc, r2.auc);
        let wider = Arc::new(features.with_zero_columns(1));
        assert!(matches!(params.bind(wider), Err(Error::DimensionMismatch { .. })));
    }
}
