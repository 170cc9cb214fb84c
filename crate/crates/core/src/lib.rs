//! Explainable anomaly detection for inpatient billing claims.
//!
//! Providers are ranked by three detector families that look at different
//! views of the same claims:
//!
//! * [`regression`]: provider fixed effects in a patient-level expenditure
//!   regression, controlling for five years of medical history.
//! * [`subspace`]: an ensemble of five subspace outlier detectors over the
//!   provider × ICD code matrix, smoothed by code substitutability.
//! * [`peer`]: dollar-weighted DRG excess spending against Hellinger-similar
//!   peer providers.
//!
//! The eight resulting rank lists are merged with instant-runoff voting
//! ([`fusion`]) and evaluated against positive-unlabeled labels ([`eval`]).
//! [`synth`] produces a deterministic synthetic corpus with planted fraud so
//! that the whole pipeline ([`pipeline`]) can run without restricted data.

pub mod error;
pub mod eval;
pub mod fusion;
pub mod io;
pub mod model;
pub mod peer;
pub mod pipeline;
pub mod rank;
pub mod regression;
pub mod seed;
pub mod subspace;
pub mod synth;

pub use error::{Error, Result};
pub use rank::{RankEntry, RankList, Source};
