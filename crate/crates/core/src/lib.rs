//! Translation-based sequential recommendation.
//!
//! Users are modeled as translation vectors in a shared item embedding space:
//! the next item a user interacts with is expected to lie near the previous
//! item shifted by the user's translation. The crate covers dataset
//! preparation, the model and its pairwise training, the comparison
//! baselines, ranking evaluation, exact nearest-neighbor retrieval and a
//! content-based item-to-item variant.
//!
//! Models are generic over [`Scalar`] (`f32` or `f64`); aliases for the common
//! instantiations are provided at the crate root.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod item2item;
pub mod linalg;
pub mod model;
pub mod persist;
pub mod retrieval;
pub mod rng;
pub mod scalar;
pub mod training;
pub mod zoo;

pub use error::{Error, Result};
pub use model::{DistanceKind, RankingModel, Trainable};
pub use scalar::Scalar;

pub type TransRecF64 = model::TransRec<f64>;
pub type TransRecF32 = model::TransRec<f32>;
pub type BprMfF64 = baselines::BprMf<f64>;
pub type FmcF64 = baselines::Fmc<f64>;
pub type FpmcF64 = baselines::Fpmc<f64>;
pub type PrmeF64 = baselines::Prme<f64>;
pub type HrmF64 = baselines::Hrm<f64>;
pub type PopRecF64 = baselines::PopRec<f64>;
pub type AnyModelF64 = zoo::AnyModel<f64>;
pub type MatrixF64 = linalg::Matrix<f64>;
