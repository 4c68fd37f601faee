//! Pairwise sequential ranking optimization by sampled stochastic gradient
//! ascent, with early stopping on validation AUC.

use std::time::Instant;

use rand::Rng;

use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};
use crate::eval::{self, Split};
pub use crate::model::Triple;
use crate::model::{ParamClass, RankingModel, RowGradient, Trainable};
use crate::rng::{substream, StreamRng};
use crate::scalar::{log_sigmoid, sigmoid, Scalar};

/// Regularization grid used for model selection.
pub const LAMBDA_GRID: [f64; 5] = [0.0, 0.001, 0.01, 0.1, 1.0];
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_DIM: usize = 10;

/// L2 regularization strength per parameter class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub bias: f64,
    pub embedding: f64,
    pub translation: f64,
}

impl Regularization {
    pub fn uniform(lambda: f64) -> Self {
        Self {
            bias: lambda,
            embedding: lambda,
            translation: lambda,
        }
    }

    pub fn for_class(&self, class: ParamClass) -> f64 {
        match class {
            ParamClass::Bias => self.bias,
            ParamClass::Embedding => self.embedding,
            ParamClass::Translation => self.translation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub reg: Regularization,
    pub dim: usize,
    pub max_iterations: usize,
    /// SGD steps per iteration; `None` means one nominal epoch (the number of
    /// training transitions).
    pub samples_per_iteration: Option<usize>,
    /// Validation checks without improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            reg: Regularization::uniform(0.0),
            dim: DEFAULT_DIM,
            max_iterations: 100,
            samples_per_iteration: None,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        let r = self.reg;
        if [r.bias, r.embedding, r.translation]
            .iter()
            .any(|&l| l.is_nan() || l < 0.0)
        {
            return Err(Error::InvalidArgument("regularization must be non-negative".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// `key=value` lines describing the configuration.
    pub fn to_kv(&self) -> String {
        format!(
            "learning_rate={}\nlambda_bias={}\nlambda_embedding={}\nlambda_translation={}\ndim={}\nmax_iterations={}\nsamples_per_iteration={}\npatience={}\nseed={}\n",
            self.learning_rate,
            self.reg.bias,
            self.reg.embedding,
            self.reg.translation,
            self.dim,
            self.max_iterations,
            self.samples_per_iteration
                .map_or_else(|| "epoch".to_owned(), |n| n.to_string()),
            self.patience,
            self.seed
        )
    }
}

/// Source of training triples.
pub trait TripleSampler {
    fn sample(&self, rng: &mut StreamRng) -> Triple;
    /// Number of distinct positives: the size of one nominal epoch.
    fn epoch_size(&self) -> usize;
}

/// Samples `(u, i, j, j')` from the training prefixes of a dataset: `u`
/// uniform among users with a training transition, `j` uniform over their
/// training positions after the first, `i` its predecessor, and `j'` uniform
/// over items the user never touched.
#[derive(Debug)]
pub struct SequenceSampler<'a> {
    ds: &'a SequenceDataset,
    users: Vec<usize>,
}

impl<'a> SequenceSampler<'a> {
    pub fn new(ds: &'a SequenceDataset) -> Result<Self> {
        let users: Vec<usize> = (0..ds.num_users()).filter(|&u| ds.training(u).len() >= 2).collect();
        if users.is_empty() {
            return Err(Error::Empty("no user has a training transition".into()));
        }
        if let Some(&u) = users.iter().find(|&&u| ds.user_items(u).len() >= ds.num_items()) {
            return Err(Error::NoNegative { user: u });
        }
        Ok(Self { ds, users })
    }
}

impl TripleSampler for SequenceSampler<'_> {
    fn sample(&self, rng: &mut StreamRng) -> Triple {
        let user = self.users[rng.random_range(0..self.users.len())];
        let train = self.ds.training(user);
        let p = rng.random_range(1..train.len());
        let n_items = self.ds.num_items();
        let neg = loop {
            let j = rng.random_range(0..n_items);
            if !self.ds.has_interacted(user, j) {
                break j;
            }
        };
        Triple {
            user,
            prev: train[p - 1],
            pos: train[p],
            neg,
        }
    }

    fn epoch_size(&self) -> usize {
        self.ds.num_training_transitions()
    }
}

/// Draws one training triple from `ds`.
pub fn sample_triple(ds: &SequenceDataset, rng: &mut StreamRng) -> Result<Triple> {
    Ok(SequenceSampler::new(ds)?.sample(rng))
}

/// `ln σ(p(u,i,pos) - p(u,i,neg))`
pub fn pairwise_loglik<T: Scalar, M: RankingModel<T> + ?Sized>(model: &M, tr: &Triple) -> T {
    log_sigmoid(score_delta(model, tr))
}

fn score_delta<T: Scalar, M: RankingModel<T> + ?Sized>(model: &M, tr: &Triple) -> T {
    model.score(tr.user, tr.prev, tr.pos) - model.score(tr.user, tr.prev, tr.neg)
}

/// Sums contributions to the same row.
fn merge_rows<T: Scalar>(mut grads: Vec<RowGradient<T>>) -> Vec<RowGradient<T>> {
    grads.sort_by_key(|g| (g.block, g.row));
    let mut out: Vec<RowGradient<T>> = Vec::with_capacity(grads.len());
    for g in grads {
        match out.last_mut() {
            Some(last) if last.block == g.block && last.row == g.row => {
                for (a, &b) in last.values.iter_mut().zip(&g.values) {
                    *a += b;
                }
            }
            _ => out.push(g),
        }
    }
    out
}

/// One stochastic gradient ascent update on `tr`:
/// `θ ← θ + ε(σ(-Δ)·∂Δ/∂θ - λθ)` for every parameter row `Δ` depends on,
/// followed by the model's constraint projection. Returns the sampled
/// log-likelihood before the update.
pub fn sgd_step<T: Scalar, M: Trainable<T>>(model: &mut M, tr: &Triple, learning_rate: T, reg: &Regularization) -> T {
    let delta = score_delta(model, tr);
    let w = sigmoid(-delta);
    let grads = merge_rows(model.delta_gradient(tr));
    for g in grads {
        let lambda = T::of(reg.for_class(model.block_class(g.block)));
        let row = model.block_mut(g.block).row_mut(g.row);
        for (theta, &d) in row.iter_mut().zip(&g.values) {
            *theta += learning_rate * (w * d - lambda * *theta);
        }
    }
    model.after_step(tr);
    log_sigmoid(delta)
}

/// `Ω(Θ) = Σ_b λ_b ‖θ_b‖²` over every parameter block.
pub fn l2_penalty<T: Scalar, M: Trainable<T>>(model: &M, reg: &Regularization) -> T {
    (0..model.num_blocks())
        .map(|b| T::of(reg.for_class(model.block_class(b))) * model.block(b).sum_of_squares())
        .sum()
}

/// Exact objective over all training transitions and all negatives:
/// `Σ_u Σ_j Σ_{j'∉S^u} ln σ(p(u,i,j) - p(u,i,j')) - Ω(Θ)`.
///
/// Cost is `O(transitions · |I|)`; meant for small datasets.
pub fn sbpr_objective<T: Scalar, M: Trainable<T>>(model: &M, ds: &SequenceDataset, reg: &Regularization) -> T {
    let mut total = T::zero();
    let mut scores = vec![T::zero(); ds.num_items()];
    for u in 0..ds.num_users() {
        let train = ds.training(u);
        for w in train.windows(2) {
            model.score_all(u, w[0], &mut scores);
            let sp = scores[w[1]];
            for (j, &sn) in scores.iter().enumerate() {
                if !ds.has_interacted(u, j) {
                    total += log_sigmoid(sp - sn);
                }
            }
        }
    }
    total - l2_penalty(model, reg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_loglik: f64,
    pub validation_auc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub records: Vec<IterationRecord>,
    /// Iteration whose snapshot was kept (0 = initial parameters).
    pub best_iteration: usize,
    pub best_validation_auc: Option<f64>,
}

impl TrainingReport {
    /// Tab-separated per-iteration table with a header line. Wall-clock
    /// seconds are optional because they differ between identical runs.
    pub fn to_tsv(&self, with_seconds: bool) -> String {
        let mut s = String::from("iteration\tmean_loglik\tvalidation_auc");
        s.push_str(if with_seconds { "\tseconds\n" } else { "\n" });
        for r in &self.records {
            s.push_str(&format!(
                "{}\t{:.6}\t{:.6}",
                r.iteration, r.mean_loglik, r.validation_auc
            ));
            if with_seconds {
                s.push_str(&format!("\t{:.3}", r.seconds));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Fitted<M> {
    pub model: M,
    pub report: TrainingReport,
}

/// Generic optimization loop: `samples_per_iteration` SGD steps drawn from
/// `sampler`, then `validate`; the best-validating snapshot is returned.
pub fn fit<T, M, S, V>(
    model: M,
    sampler: &S,
    validate: V,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&IterationRecord, &M),
) -> Result<Fitted<M>>
where
    T: Scalar,
    M: Trainable<T>,
    S: TripleSampler + ?Sized,
    V: Fn(&M) -> f64,
{
    config.validate()?;
    let mut model = model;
    let mut report = TrainingReport::default();
    if config.max_iterations == 0 {
        return Ok(Fitted { model, report });
    }
    let mut rng = substream(config.seed, "sampling");
    let steps = config
        .samples_per_iteration
        .unwrap_or_else(|| sampler.epoch_size())
        .max(1);
    let lr = T::of(config.learning_rate);
    let mut best: Option<(f64, usize, M)> = None;
    let mut stale = 0;

    for iteration in 1..=config.max_iterations {
        let start = Instant::now();
        let mut ll_sum = 0.0;
        for _ in 0..steps {
            let tr = sampler.sample(&mut rng);
            ll_sum += sgd_step(&mut model, &tr, lr, &config.reg).to_f64_lossy();
        }
        if let Some(block) = model.non_finite_block() {
            return Err(Error::NonFinite {
                iteration,
                block: block.to_owned(),
            });
        }
        model
            .check_constraints()
            .map_err(|reason| Error::Constraint { iteration, reason })?;

        let auc = validate(&model);
        let record = IterationRecord {
            iteration,
            mean_loglik: ll_sum / steps as f64,
            validation_auc: auc,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("iter {iteration}: loglik {:.5} val auc {auc:.5}", record.mean_loglik);
        observer(&record, &model);
        report.records.push(record);

        if best.as_ref().is_none_or(|(b, _, _)| auc > *b) {
            best = Some((auc, iteration, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let (auc, iteration, snapshot) = best.expect("at least one iteration ran");
    report.best_iteration = iteration;
    report.best_validation_auc = Some(auc);
    Ok(Fitted {
        model: snapshot,
        report,
    })
}

/// Trains `model` on the training prefixes of a split dataset, stopping early
/// on validation AUC.
pub fn train<T: Scalar, M: Trainable<T>>(ds: &SequenceDataset, model: M, config: &TrainConfig) -> Result<Fitted<M>> {
    train_with_observer(ds, model, config, &mut |_, _| {})
}

pub fn train_with_observer<T: Scalar, M: Trainable<T>>(
    ds: &SequenceDataset,
    model: M,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&IterationRecord, &M),
) -> Result<Fitted<M>> {
    if !ds.is_split() {
        return Err(Error::InvalidArgument(
            "training requires a leave-one-out split dataset".into(),
        ));
    }
    let sampler = SequenceSampler::new(ds)?;
    fit(
        model,
        &sampler,
        |m: &M| eval::auc(m, ds, Split::Validation),
        config,
        observer,
    )
}

/// One evaluated point of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint<P> {
    pub params: P,
    pub validation_auc: f64,
    pub best_iteration: usize,
}

#[derive(Debug, Clone)]
pub struct GridResult<M, P> {
    pub best: Fitted<M>,
    pub best_params: P,
    pub table: Vec<GridPoint<P>>,
}

/// Fits every grid point and keeps the one with the highest validation AUC
/// (the earliest point wins ties).
pub fn grid_search<M, P, F>(points: &[P], mut fit_point: F) -> Result<GridResult<M, P>>
where
    P: Clone,
    F: FnMut(&P) -> Result<Fitted<M>>,
{
    let mut table = Vec::with_capacity(points.len());
    let mut best: Option<(f64, Fitted<M>, P)> = None;
    for p in points {
        let fitted = fit_point(p)?;
        let auc = fitted.report.best_validation_auc.unwrap_or(f64::NEG_INFINITY);
        table.push(GridPoint {
            params: p.clone(),
            validation_auc: auc,
            best_iteration: fitted.report.best_iteration,
        });
        if best.as_ref().is_none_or(|(b, _, _)| auc > *b) {
            best = Some((auc, fitted, p.clone()));
        }
    }
    let (_, best, best_params) = best.ok_or_else(|| Error::InvalidArgument("empty hyperparameter grid".into()))?;
    Ok(GridResult {
        best,
        best_params,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistanceKind, TransRec};

    #[test]
    fn single_choice_triple() {
        let ds = SequenceDataset::from_sequences(3, vec![vec![0, 1]]).unwrap();
        let mut rng = substream(0, "s");
        for _ in 0..20 {
            assert_eq!(
                sample_triple(&ds, &mut rng).unwrap(),
                Triple {
                    user: 0,
                    prev: 0,
                    pos: 1,
                    neg: 2
                }
            );
        }
    }

    #[test]
    fn negatives_never_in_history() {
        let ds = SequenceDataset::from_sequences(10, vec![vec![0, 3, 5, 3], vec![1, 2]]).unwrap();
        let sampler = SequenceSampler::new(&ds).unwrap();
        let mut rng = substream(4, "s");
        for _ in 0..100_000 {
            let t = sampler.sample(&mut rng);
            assert!(!ds.has_interacted(t.user, t.neg));
            let seq = ds.training(t.user);
            assert!(seq.windows(2).any(|w| w[0] == t.prev && w[1] == t.pos));
        }
    }

    #[test]
    fn full_catalog_user_has_no_negative() {
        let ds = SequenceDataset::from_sequences(2, vec![vec![0, 1]]).unwrap();
        assert!(matches!(SequenceSampler::new(&ds), Err(Error::NoNegative { user: 0 })));
    }

    #[test]
    fn no_transition_is_an_error() {
        let ds = SequenceDataset::from_sequences(3, vec![vec![0]]).unwrap();
        assert!(SequenceSampler::new(&ds).is_err());
    }

    #[test]
    fn loglik_values() {
        let m = TransRec::<f64>::zeros(1, 3, 2, DistanceKind::L1);
        let tr = Triple {
            user: 0,
            prev: 0,
            pos: 1,
            neg: 2,
        };
        assert!((pairwise_loglik(&m, &tr) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_moves_biases_by_half_rate() {
        let mut m = TransRec::<f64>::zeros(1, 3, 2, DistanceKind::SquaredL2);
        let tr = Triple {
            user: 0,
            prev: 0,
            pos: 1,
            neg: 2,
        };
        sgd_step(&mut m, &tr, 0.05, &Regularization::uniform(0.0));
        assert!((m.beta()[1] - 0.025).abs() < 1e-15);
        assert!((m.beta()[2] + 0.025).abs() < 1e-15);
        assert_eq!(m.beta()[0], 0.0);
    }

    #[test]
    fn saturated_step_is_pure_shrinkage() {
        let mut m = TransRec::<f64>::init(1, 3, 2, DistanceKind::SquaredL2, &mut substream(1, "i")).unwrap();
        m.beta_mut()[1] = 50.0;
        let tr = Triple {
            user: 0,
            prev: 0,
            pos: 1,
            neg: 2,
        };
        let before = m.clone();
        let (eps, lambda) = (0.05, 0.1);
        sgd_step(&mut m, &tr, eps, &Regularization::uniform(lambda));
        let shrink = 1.0 - eps * lambda;
        assert!((m.beta()[1] - 50.0 * shrink).abs() < 1e-12);
        for c in 0..2 {
            assert!((m.t_global()[c] - before.t_global()[c] * shrink).abs() < 1e-12);
            assert!((m.gamma().row(2)[c] - before.gamma().row(2)[c] * shrink).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_sums_repeated_rows() {
        let g = merge_rows(vec![
            RowGradient::new(1, 4, vec![1.0, 2.0]),
            RowGradient::new(0, 0, vec![5.0]),
            RowGradient::new(1, 4, vec![0.5, 0.5]),
        ]);
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].values, vec![1.5, 2.5]);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            patience: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            reg: Regularization::uniform(-1.0),
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_prefers_higher_validation_then_earlier() {
        let fitted = |auc: f64| Fitted {
            model: (),
            report: TrainingReport {
                records: vec![],
                best_iteration: 1,
                best_validation_auc: Some(auc),
            },
        };
        let r = grid_search(&[0.0, 0.01, 0.1], |&l| Ok(fitted(if l == 0.01 { 0.8 } else { 0.7 }))).unwrap();
        assert_eq!(r.best_params, 0.01);
        let r = grid_search(&[0.0, 0.01], |_| Ok(fitted(0.5))).unwrap();
        assert_eq!(r.best_params, 0.0);
        assert_eq!(r.table.len(), 2);
    }
}
