//! Combined uncertainty estimation for LLM-based task planning.
//!
//! The pipeline decomposes planning uncertainty into three signals computed
//! from a task encoding vector `T`:
//!
//! - task familiarity `A_sim` — prediction error of a random-network
//!   distillation pair ([`rnd`]);
//! - task clarity `A_amb` — ambiguity probability from a trained dual-head
//!   network ([`uan`]), or a hard 0/1 verdict from an LLM query;
//! - expected success rate `p` — the second head of the same network.
//!
//! [`combine`] folds them into a scalar uncertainty `U`, and [`metrics`]
//! evaluates how well `-U` ranks actual execution outcomes (Spearman rho
//! with p-value, help-rate/success-rate curves, and the normalized
//! SR-HR-AUC).
//!
//! Orientation convention: larger `U` means less confidence. All metrics
//! correlate outcomes with the confidence `-U`, so a better estimator always
//! scores higher.

pub mod combine;
pub mod data;
pub mod metrics;
pub mod nn;
pub mod rnd;
pub mod rng;
pub mod uan;
