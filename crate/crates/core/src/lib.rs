//! Sentiment-extended fund-flow stock price model together with the
//! Hilbert-Huang tooling used to read time-scales of shock and recovery
//! out of price series.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: flow normalization, financial antifragility, the regime and
//!   sentiment driven price update, and recovery-shape labelling.
//! * [`synthflow`]: regime-wise Gaussian fund-flow generator and parameter sweeps.
//! * [`spline`], [`emd`]: natural cubic splines and empirical mode decomposition.
//! * [`hilbert`]: analytic signal, instantaneous frequency, mean time-scale.
//! * [`sst`]: white-noise significance test for IMFs.
//! * [`metrics`]: Pearson correlation with log-space p-values, dominant IMF.
//! * [`io`]: CSV ingestion, TOML experiment configs, CSV/SVG emission, pipeline.
//! * [`experiments`]: canned scenarios, surrogate fixtures and their checks.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod emd;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod io;
pub mod metrics;
pub mod model;
pub mod special;
pub mod spline;
pub mod sst;
pub mod synthflow;

pub use error::{Error, Result};
