//! Code-aware timing recovery for turbo-coded square QAM: constellation
//! a posteriori coefficients, the likelihood and its derivatives, closed-form
//! Cramér-Rao bounds, the iterative Newton synchronizer and the Monte-Carlo
//! harness that drives them.

// Negated float comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod constellation;
pub mod crlb;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod likelihood;
pub mod numeric;
pub mod quadrature;
pub mod turbo_codec;
pub mod waveform;

pub use constellation::{Axis, BetaConvention, Constellation, DemapPriors, LlrFrame};
pub use crlb::{CrlbInputs, CrlbReport, EmpiricalFisher, GammaForm};
pub use error::{Error, Result};
pub use estimator::{NdaEstimate, SyncConfig, SyncOutcome, SyncTrace};
pub use harness::{Experiment, ExperimentConfig, ExperimentOutput, ResultRow, TauPolicy};
pub use likelihood::{LikelihoodContext, LlfDerivatives};
pub use numeric::LLR_MAX;
pub use turbo_codec::{CodeRate, TurboCode, TurboConfig};
pub use waveform::{PulseBank, SampledSignal};
