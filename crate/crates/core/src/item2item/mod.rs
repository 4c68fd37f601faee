//! Content-based item-to-item relation prediction on directed edges.
//!
//! Three scorers over item feature vectors `f_i`: the translation model
//! `-d(E f_i + t, E f_j)`, weighted nearest neighbor `-‖w ∘ (f_i - f_j)‖²` and
//! the low-rank Mahalanobis transform `-‖W f_i - W f_j‖²`. All are fitted with
//! the pairwise ranking trainer: a training edge `i -> j` should outscore a
//! random item not linked from `i`.

mod edges;
mod features;
mod models;

pub use edges::{read_edges, EdgeDataset, EdgeSampler, EdgeSplit};
pub use features::{
    extract_features, read_corpus, read_triplets, terms, tokenize, write_triplets, FeatureMatrix, FrequencyOnly,
    TermFilter, DEFAULT_VOCABULARY, STOP_WORDS,
};
pub use models::{ContentTransRec, ItemPairModel, Lmt, PairScorer, Wnn};

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{rank_against, EvalReport, RankOutcome};
use crate::model::DistanceKind;
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::training::{fit, Fitted, TrainConfig};

/// Hit-rate cutoff for item-to-item evaluation.
pub const DEFAULT_HIT_K: usize = 10;
/// Dimension of the relational space.
pub const DEFAULT_DIM: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I2IKind {
    TransRec,
    Wnn,
    Lmt,
}

impl I2IKind {
    pub fn name(self) -> &'static str {
        match self {
            I2IKind::TransRec => "transrec",
            I2IKind::Wnn => "wnn",
            I2IKind::Lmt => "lmt",
        }
    }
}

impl std::str::FromStr for I2IKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transrec" => Ok(I2IKind::TransRec),
            "wnn" => Ok(I2IKind::Wnn),
            "lmt" => Ok(I2IKind::Lmt),
            _ => Err(Error::InvalidArgument(format!(
                "unknown item-to-item model `{s}` (expected transrec|wnn|lmt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct I2IConfig {
    pub train: TrainConfig,
    pub distance: DistanceKind,
    /// Half-width of the uniform initialization of embedding matrices.
    pub init_scale: f64,
}

impl Default for I2IConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig {
                dim: DEFAULT_DIM,
                ..TrainConfig::default()
            },
            distance: DistanceKind::SquaredL2,
            init_scale: 0.1,
        }
    }
}

/// A fitted item-to-item model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum I2IModel<T> {
    TransRec(ContentTransRec<T>),
    Wnn(Wnn<T>),
    Lmt(Lmt<T>),
}

impl<T: Scalar> I2IModel<T> {
    pub fn kind(&self) -> I2IKind {
        match self {
            I2IModel::TransRec(_) => I2IKind::TransRec,
            I2IModel::Wnn(_) => I2IKind::Wnn,
            I2IModel::Lmt(_) => I2IKind::Lmt,
        }
    }

    pub fn pair_score(&self, src: usize, dst: usize) -> T {
        match self {
            I2IModel::TransRec(m) => m.pair_score(src, dst),
            I2IModel::Wnn(m) => m.pair_score(src, dst),
            I2IModel::Lmt(m) => m.pair_score(src, dst),
        }
    }

    pub fn evaluate(&self, edges: &EdgeDataset, split: EdgeSplit, k: usize) -> Result<EvalReport> {
        match self {
            I2IModel::TransRec(m) => eval_i2i(m, edges, split, k),
            I2IModel::Wnn(m) => eval_i2i(m, edges, split, k),
            I2IModel::Lmt(m) => eval_i2i(m, edges, split, k),
        }
    }
}

/// Ranks every held-out edge `i -> j` of `split` against all items not linked
/// from `i` in any split.
pub fn eval_i2i<T: Scalar, M: ItemPairModel<T>>(
    model: &M,
    edges: &EdgeDataset,
    split: EdgeSplit,
    k: usize,
) -> Result<EvalReport> {
    if model.num_items() != edges.num_items() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} items, edge set has {}",
            model.num_items(),
            edges.num_items()
        )));
    }
    let mut by_src: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (case, (src, dst)) in edges.edges(split).enumerate() {
        by_src.entry(src).or_default().push((case, dst));
    }
    let scorer = model.pair_scorer();
    let groups: Vec<_> = by_src.into_iter().collect();
    let mut outcomes: Vec<(usize, RankOutcome)> = groups
        .par_iter()
        .flat_map_iter(|(src, cases)| {
            let mut scores = vec![T::zero(); edges.num_items()];
            scorer.scores_from(*src, &mut scores);
            cases
                .iter()
                .map(|&(case, dst)| (case, rank_against(&scores, dst, |j| edges.is_negative(*src, j))))
                .collect::<Vec<_>>()
        })
        .collect();
    outcomes.sort_by_key(|&(case, _)| case);
    Ok(EvalReport::from_outcomes(outcomes, k))
}

fn fit_pair<T: Scalar, M: ItemPairModel<T>>(model: M, edges: &EdgeDataset, config: &TrainConfig) -> Result<Fitted<M>> {
    let sampler = EdgeSampler::new(edges)?;
    fit(
        model,
        &sampler,
        |m: &M| {
            eval_i2i(m, edges, EdgeSplit::Validation, DEFAULT_HIT_K)
                .map(|r| r.auc)
                .unwrap_or(f64::NAN)
        },
        config,
        &mut |_, _| {},
    )
}

/// Fits an item-to-item model on the training edges, stopping early on
/// validation AUC.
pub fn train_i2i<T: Scalar>(
    edges: &EdgeDataset,
    features: Arc<FeatureMatrix<T>>,
    kind: I2IKind,
    config: &I2IConfig,
) -> Result<Fitted<I2IModel<T>>> {
    if features.num_items() != edges.num_items() {
        return Err(Error::ShapeMismatch(format!(
            "features cover {} items, edge set has {}",
            features.num_items(),
            edges.num_items()
        )));
    }
    config.train.validate()?;
    let mut rng = substream(config.train.seed, "init");
    let dim = config.train.dim;
    Ok(match kind {
        I2IKind::TransRec => {
            let m = ContentTransRec::init(features, dim, config.distance, config.init_scale, &mut rng);
            let f = fit_pair(m, edges, &config.train)?;
            Fitted {
                model: I2IModel::TransRec(f.model),
                report: f.report,
            }
        }
        I2IKind::Lmt => {
            let m = Lmt::init(features, dim, config.init_scale, &mut rng);
            let f = fit_pair(m, edges, &config.train)?;
            Fitted {
                model: I2IModel::Lmt(f.model),
                report: f.report,
            }
        }
        I2IKind::Wnn => {
            let f = fit_pair(Wnn::init(features), edges, &config.train)?;
            Fitted {
                model: I2IModel::Wnn(f.model),
                report: f.report,
            }
        }
    })
}
