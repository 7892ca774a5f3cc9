//! Combination of familiarity, clarity, and expected success into one
//! uncertainty scalar `U`, plus the scoring variants.
//!
//! Base formula (weights `alpha1 = 1`, `alpha2 = 0.6`, `alpha3 = 30` by
//! default):
//!
//! ```text
//! U = 1 - alpha1 * (1 - alpha2 * a_amb) * p + alpha3 * a_sim
//! ```
//!
//! `U` is a ranking score and is deliberately not clamped to [0, 1]; all
//! downstream metrics are rank-based. When a method needs a confidence
//! instead, use [`to_confidence`], which is `-U`: strictly order-reversing,
//! so rankings by confidence are exact reversals of rankings by `U`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CombineError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("{name} = {value} must be finite and >= 0")]
    NegativeOrNonFinite { name: &'static str, value: f64 },
    #[error("combiner weight {name} must be finite")]
    BadWeight { name: &'static str },
}

/// Scoring variant selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Cure,
    CureAmbiguity,
    AmbiguityOnly,
    KnownoAmbiguity,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Cure => "cure",
            Variant::CureAmbiguity => "cure_ambiguity",
            Variant::AmbiguityOnly => "ambiguity_only",
            Variant::KnownoAmbiguity => "knowno_ambiguity",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cure" => Ok(Variant::Cure),
            "cure_ambiguity" => Ok(Variant::CureAmbiguity),
            "ambiguity_only" => Ok(Variant::AmbiguityOnly),
            "knowno_ambiguity" => Ok(Variant::KnownoAmbiguity),
            other => Err(format!(
                "unknown variant {other:?} (expected cure, cure_ambiguity, ambiguity_only, or knowno_ambiguity)"
            )),
        }
    }
}

/// Combiner weights and variant selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinerConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub variant: Variant,
}

impl Default for CombinerConfig {
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 0.6,
            alpha3: 30.0,
            variant: Variant::Cure,
        }
    }
}

impl CombinerConfig {
    pub fn validate(&self) -> Result<(), CombineError> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !v.is_finite() {
                return Err(CombineError::BadWeight { name });
            }
        }
        Ok(())
    }
}

/// Per-task decomposed output: every signal that entered the combination
/// plus the resulting `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBreakdown {
    pub id: String,
    pub a_sim: f64,
    pub a_amb: f64,
    pub a_amb_llm: Option<u8>,
    pub p: f64,
    pub c_knowno: Option<f64>,
    pub u: f64,
    pub variant: Variant,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), CombineError> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(CombineError::OutOfUnitRange { name, value });
    }
    Ok(())
}

fn check_nonneg(name: &'static str, value: f64) -> Result<(), CombineError> {
    if !value.is_finite() || value < 0.0 {
        return Err(CombineError::NegativeOrNonFinite { name, value });
    }
    Ok(())
}

/// `U = 1 - alpha1 * (1 - alpha2 * a_amb) * p + alpha3 * a_sim`.
pub fn cure(a_amb: f64, p: f64, a_sim: f64, cfg: &CombinerConfig) -> Result<f64, CombineError> {
    cfg.validate()?;
    check_unit("a_amb", a_amb)?;
    check_unit("p", p)?;
    check_nonneg("a_sim", a_sim)?;
    Ok(1.0 - cfg.alpha1 * (1.0 - cfg.alpha2 * a_amb) * p + cfg.alpha3 * a_sim)
}

/// Like [`cure`] with the ambiguity signal replaced by the average of the
/// slow LLM verdict and the fast head score.
pub fn cure_ambiguity(
    a_amb_llm: f64,
    a_amb_uan: f64,
    p: f64,
    a_sim: f64,
    cfg: &CombinerConfig,
) -> Result<f64, CombineError> {
    cfg.validate()?;
    check_unit("a_amb_llm", a_amb_llm)?;
    check_unit("a_amb_uan", a_amb_uan)?;
    check_unit("p", p)?;
    check_nonneg("a_sim", a_sim)?;
    let avg = 0.5 * (a_amb_llm + a_amb_uan);
    Ok(1.0 - cfg.alpha1 * (1.0 - cfg.alpha2 * avg) * p + cfg.alpha3 * a_sim)
}

/// [`cure`] driven by the slow LLM verdict alone.
pub fn ambiguity_only(
    a_amb_llm: f64,
    p: f64,
    a_sim: f64,
    cfg: &CombinerConfig,
) -> Result<f64, CombineError> {
    cure(a_amb_llm, p, a_sim, cfg)
}

/// `U = 1 - alpha1 * (1 - 0.5 * a_amb_llm) * p * c_knowno`. No familiarity
/// term, and the 0.5 ambiguity coefficient is fixed, not `alpha2`.
pub fn knowno_ambiguity(
    a_amb_llm: f64,
    p: f64,
    c_knowno: f64,
    cfg: &CombinerConfig,
) -> Result<f64, CombineError> {
    cfg.validate()?;
    check_unit("a_amb_llm", a_amb_llm)?;
    check_unit("p", p)?;
    check_unit("c_knowno", c_knowno)?;
    Ok(1.0 - cfg.alpha1 * (1.0 - 0.5 * a_amb_llm) * p * c_knowno)
}

/// Orientation bridge: confidence = `-u`.
pub fn to_confidence(u: f64) -> f64 {
    -u
}
