//! Single-hidden-layer binary classifier trained with Levenberg-Marquardt,
//! with incremental order selection and ROC / cumulative gain / lift
//! evaluation.
//!
//! The typical flow is
//! [`dataset::parse_csv`] → [`dataset::split`] → [`dataset::encode`] →
//! [`loss::class_weights`] → [`order_selection::select_order`] →
//! [`evaluation`], all of which [`pipeline::run`] strings together.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod loss;
pub mod model_io;
pub mod network;
pub mod order_selection;
pub mod pipeline;
pub mod svg;
pub mod trainer;

pub use error::{DataError, ModelIoError, NumericError, TrainError};
