//! Comparison recommenders behind the same [`RankingModel`] surface.
//!
//! Apart from popularity, every baseline is a [`Trainable`] model fitted with
//! the same pairwise sequential ranking trainer as [`TransRec`].
//!
//! [`RankingModel`]: crate::model::RankingModel
//! [`Trainable`]: crate::model::Trainable
//! [`TransRec`]: crate::model::TransRec

mod factor;
mod hrm;
mod poprec;
mod prme;

pub use factor::{BprMf, Fmc, Fpmc};
pub use hrm::{Hrm, Pooling};
pub use poprec::PopRec;
pub use prme::Prme;

/// Half-width of the uniform noise baseline factors start from.
pub const INIT_SCALE: f64 = 0.01;

/// PRME mixing weights tried during model selection.
pub const PRME_ALPHA_GRID: [f64; 3] = [0.2, 0.5, 0.8];
