//! A small differentiable-computation kernel: parameters, LSTMs, MLPs,
//! Adam and finite-difference gradient checks.

mod gradcheck;
mod lstm;
mod mlp;
pub mod ops;
mod store;

pub use gradcheck::{grad_check, grad_check_with, GradCheckOptions, GradCheckReport, RELATIVE_FLOOR};
pub use lstm::{BiLstm, BiLstmTrace, Dropout, LstmParams, LstmTrace};
pub use mlp::{Mlp, MlpTrace};
pub use store::{Adam, Gradients, ParamId, ParamStore};
