//! Every sequential recommender by name, behind one enum.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{BprMf, Fmc, Fpmc, Hrm, Pooling, PopRec, Prme, PRME_ALPHA_GRID};
use crate::dataset::SequenceDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{DistanceKind, RankingModel, Trainable, TransRec};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::training::{self, grid_search, Fitted, GridResult, Regularization, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    PopRec,
    BprMf,
    Fmc,
    Fpmc,
    Prme,
    HrmAvg,
    HrmMax,
    TransRecL1,
    TransRecL2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::PopRec,
        ModelKind::BprMf,
        ModelKind::Fmc,
        ModelKind::Fpmc,
        ModelKind::Prme,
        ModelKind::HrmAvg,
        ModelKind::HrmMax,
        ModelKind::TransRecL1,
        ModelKind::TransRecL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PopRec => "poprec",
            ModelKind::BprMf => "bprmf",
            ModelKind::Fmc => "fmc",
            ModelKind::Fpmc => "fpmc",
            ModelKind::Prme => "prme",
            ModelKind::HrmAvg => "hrm-avg",
            ModelKind::HrmMax => "hrm-max",
            ModelKind::TransRecL1 => "transrec-l1",
            ModelKind::TransRecL2 => "transrec-l2",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown model `{s}` (expected poprec|bprmf|fmc|fpmc|prme|hrm-avg|hrm-max|transrec-l1|transrec-l2)"
            ))
        })
    }
}

/// Switches that only some model kinds read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub bprmf_item_bias: bool,
    pub fmc_item_bias: bool,
    /// PRME weight of the user-item metric term.
    pub prme_alpha: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            bprmf_item_bias: true,
            fmc_item_bias: false,
            prme_alpha: PRME_ALPHA_GRID[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T> {
    PopRec(PopRec<T>),
    BprMf(BprMf<T>),
    Fmc(Fmc<T>),
    Fpmc(Fpmc<T>),
    Prme(Prme<T>),
    Hrm(Hrm<T>),
    TransRec(TransRec<T>),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $e:expr) => {
        match $self {
            AnyModel::PopRec($m) => $e,
            AnyModel::BprMf($m) => $e,
            AnyModel::Fmc($m) => $e,
            AnyModel::Fpmc($m) => $e,
            AnyModel::Prme($m) => $e,
            AnyModel::Hrm($m) => $e,
            AnyModel::TransRec($m) => $e,
        }
    };
}

impl<T: Scalar> AnyModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::PopRec(_) => ModelKind::PopRec,
            AnyModel::BprMf(_) => ModelKind::BprMf,
            AnyModel::Fmc(_) => ModelKind::Fmc,
            AnyModel::Fpmc(_) => ModelKind::Fpmc,
            AnyModel::Prme(_) => ModelKind::Prme,
            AnyModel::Hrm(m) => match m.pooling() {
                Pooling::Average => ModelKind::HrmAvg,
                Pooling::Max => ModelKind::HrmMax,
            },
            AnyModel::TransRec(m) => match m.distance_kind() {
                DistanceKind::L1 => ModelKind::TransRecL1,
                DistanceKind::SquaredL2 => ModelKind::TransRecL2,
            },
        }
    }

    /// Freshly initialized model of `kind`, seeded from the `init` substream.
    pub fn init(
        kind: ModelKind,
        num_users: usize,
        num_items: usize,
        dim: usize,
        options: &ModelOptions,
        seed: u64,
    ) -> Result<Self> {
        let rng = &mut substream(seed, "init");
        Ok(match kind {
            ModelKind::PopRec => AnyModel::PopRec(PopRec::from_counts(num_users, vec![T::zero(); num_items])),
            ModelKind::BprMf => AnyModel::BprMf(BprMf::init(num_users, num_items, dim, options.bprmf_item_bias, rng)),
            ModelKind::Fmc => AnyModel::Fmc(Fmc::init(num_users, num_items, dim, options.fmc_item_bias, rng)),
            ModelKind::Fpmc => AnyModel::Fpmc(Fpmc::init(num_users, num_items, dim, rng)),
            ModelKind::Prme => AnyModel::Prme(Prme::init(num_users, num_items, dim, options.prme_alpha, rng)?),
            ModelKind::HrmAvg => AnyModel::Hrm(Hrm::init(num_users, num_items, dim, Pooling::Average, rng)),
            ModelKind::HrmMax => AnyModel::Hrm(Hrm::init(num_users, num_items, dim, Pooling::Max, rng)),
            ModelKind::TransRecL1 => {
                AnyModel::TransRec(TransRec::init(num_users, num_items, dim, DistanceKind::L1, rng)?)
            }
            ModelKind::TransRecL2 => {
                AnyModel::TransRec(TransRec::init(num_users, num_items, dim, DistanceKind::SquaredL2, rng)?)
            }
        })
    }

    /// Parameter blocks in storage order.
    pub fn blocks(&self) -> Vec<&Matrix<T>> {
        fn all<T: Scalar, M: Trainable<T>>(m: &M) -> Vec<&Matrix<T>> {
            (0..m.num_blocks()).map(|b| m.block(b)).collect()
        }
        match self {
            AnyModel::PopRec(_) => Vec::new(),
            AnyModel::BprMf(m) => all(m),
            AnyModel::Fmc(m) => all(m),
            AnyModel::Fpmc(m) => all(m),
            AnyModel::Prme(m) => all(m),
            AnyModel::Hrm(m) => all(m),
            AnyModel::TransRec(m) => all(m),
        }
    }

    pub fn as_transrec(&self) -> Option<&TransRec<T>> {
        match self {
            AnyModel::TransRec(m) => Some(m),
            _ => None,
        }
    }
}

impl<T: Scalar> RankingModel<T> for AnyModel<T> {
    fn num_users(&self) -> usize {
        dispatch!(self, m => m.num_users())
    }

    fn num_items(&self) -> usize {
        dispatch!(self, m => m.num_items())
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> T {
        dispatch!(self, m => m.score(user, prev, item))
    }

    fn score_all(&self, user: usize, prev: usize, out: &mut [T]) {
        dispatch!(self, m => m.score_all(user, prev, out))
    }
}

fn wrap<M, T>(f: Fitted<M>, into: impl FnOnce(M) -> AnyModel<T>) -> Fitted<AnyModel<T>> {
    Fitted {
        model: into(f.model),
        report: f.report,
    }
}

/// Initializes and trains one model of `kind` on a split dataset. Popularity
/// is counted, not trained.
pub fn fit_model<T: Scalar>(
    kind: ModelKind,
    ds: &SequenceDataset,
    config: &TrainConfig,
    options: &ModelOptions,
) -> Result<Fitted<AnyModel<T>>> {
    if kind == ModelKind::PopRec {
        let model = AnyModel::PopRec(PopRec::fit(ds));
        let auc = crate::eval::auc(&model, ds, crate::eval::Split::Validation);
        return Ok(Fitted {
            model,
            report: training::TrainingReport {
                records: Vec::new(),
                best_iteration: 0,
                best_validation_auc: Some(auc),
            },
        });
    }
    let init = AnyModel::<T>::init(kind, ds.num_users(), ds.num_items(), config.dim, options, config.seed)?;
    Ok(match init {
        AnyModel::PopRec(_) => unreachable!(),
        AnyModel::BprMf(m) => wrap(training::train(ds, m, config)?, AnyModel::BprMf),
        AnyModel::Fmc(m) => wrap(training::train(ds, m, config)?, AnyModel::Fmc),
        AnyModel::Fpmc(m) => wrap(training::train(ds, m, config)?, AnyModel::Fpmc),
        AnyModel::Prme(m) => wrap(training::train(ds, m, config)?, AnyModel::Prme),
        AnyModel::Hrm(m) => wrap(training::train(ds, m, config)?, AnyModel::Hrm),
        AnyModel::TransRec(m) => wrap(training::train(ds, m, config)?, AnyModel::TransRec),
    })
}

/// One hyperparameter setting of a grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub lambda: f64,
    /// Only meaningful for PRME.
    pub alpha: Option<f64>,
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lambda={}", self.lambda)?;
        if let Some(a) = self.alpha {
            write!(f, " alpha={a}")?;
        }
        Ok(())
    }
}

/// Grid search over a shared regularization strength (and PRME's mixing
/// weight), selecting on validation AUC.
pub fn select_model<T: Scalar>(
    kind: ModelKind,
    ds: &SequenceDataset,
    config: &TrainConfig,
    options: &ModelOptions,
    lambdas: &[f64],
    alphas: &[f64],
) -> Result<GridResult<AnyModel<T>, HyperParams>> {
    let mut points = Vec::new();
    if kind == ModelKind::PopRec {
        points.push(HyperParams {
            lambda: 0.0,
            alpha: None,
        });
    } else {
        for &lambda in lambdas {
            if kind == ModelKind::Prme {
                for &a in alphas {
                    points.push(HyperParams { lambda, alpha: Some(a) });
                }
            } else {
                points.push(HyperParams { lambda, alpha: None });
            }
        }
    }
    grid_search(&points, |p| {
        let config = TrainConfig {
            reg: Regularization::uniform(p.lambda),
            ..config.clone()
        };
        let options = ModelOptions {
            prme_alpha: p.alpha.unwrap_or(options.prme_alpha),
            ..*options
        };
        fit_model(kind, ds, &config, &options)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("transrec".parse::<ModelKind>().is_err());
    }

    #[test]
    fn init_kind_matches() {
        for k in ModelKind::ALL {
            let m = AnyModel::<f64>::init(k, 3, 5, 2, &ModelOptions::default(), 1).unwrap();
            assert_eq!(m.kind(), k);
            assert_eq!((m.num_users(), m.num_items()), (3, 5));
        }
    }
}
