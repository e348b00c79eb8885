//! Discrete space-time norms, Picard iteration of the Duhamel map and Monte
//! Carlo regularity studies of the stochastic convolution.

mod norms;
mod picard;
mod regularity;

pub use norms::{hs_sigma_norm, measured_m, xsigma_norms, XSigmaNorms};
pub use picard::{
    ball_conditions, picard_iterate, BallConditions, ContractionReport, PicardMap, PicardSettings,
};
pub use regularity::{wv_regularity_study, WvRow, WvStudyConfig, WvStudyTable};
