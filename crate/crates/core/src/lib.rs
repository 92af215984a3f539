//! Forecasting by random playout and randomized rounding.
//!
//! The crate implements three strategies for online prediction against a
//! class of static experts:
//!
//! * the exact minimax forecaster for absolute loss and binary outcomes
//!   (dynamic program and suffix enumeration),
//! * its randomized two-oracle-calls-per-round variant, and
//! * the randomized-rounding forecaster for convex Lipschitz losses and real
//!   outcomes,
//!
//! along with the ERM oracles they call, Rademacher-complexity estimators,
//! adversaries and game harnesses (expert advice, transductive thresholds,
//! trace-norm collaborative filtering).
//!
//! Numeric code is generic over [`Scalar`]; the `f64` aliases below are what
//! the CLI uses.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod class;
pub mod config;
pub mod erm;
pub mod error;
pub mod games;
pub mod loss;
pub mod minimax;
pub mod r2;
pub mod rademacher;
pub mod rng;
pub mod scalar;
pub mod transcript;

pub use class::FiniteExpertClass;
pub use config::GameConfig;
pub use error::{Error, Result};
pub use loss::{LossKind, LossSpec};
pub use rng::RandomStream;
pub use scalar::Scalar;
pub use transcript::{Transcript, TranscriptRow};

pub type ExpertClass = FiniteExpertClass<f64>;
pub type Loss = LossSpec<f64>;
pub type Config = GameConfig<f64>;
pub type GameTranscript = Transcript<f64>;
pub type DenseMatrix = erm::Matrix<f64>;
pub type TraceNormBall = erm::TraceNormClass<f64>;
