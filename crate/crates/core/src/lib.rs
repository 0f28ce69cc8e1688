//! Lead-lag discovery and evaluation for prediction-market event time series.
//!
//! The pipeline has three stages:
//!
//! 1. [`granger`] screens every pair of markets for directed Granger predictability
//!    on log-odds signals made stationary by [`stationarity`].
//! 2. [`semantic`] optionally re-ranks the statistical candidates by an LLM's
//!    judgement of whether an economic transmission mechanism links the two events.
//! 3. [`backtest`] scores a ranked portfolio with a fixed signal-triggered
//!    trading protocol; [`evaluation`] runs it all over rolling windows.
//!
//! [`synth`] generates synthetic markets with planted lead-lag links, which is
//! what the test suites use as ground truth.

pub mod backtest;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod granger;
pub mod io;
pub mod semantic;
pub mod stationarity;
pub mod synth;
pub mod ts;

pub use error::{Error, Result};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
