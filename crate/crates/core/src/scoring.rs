//! Aggregation of the three sub-scores into one founder-suitability number.
//!
//! The aggregate is `founder ^ (1 / (2 · fit · idea))` with a hard zero rule:
//! if any sub-score is 0 the aggregate is 0. A strong founder score survives a
//! weak idea (the exponent shrinks toward 0 as `fit · idea` grows, and a base
//! of 1 is 1 under any exponent), while a middling founder score collapses
//! quickly when the idea or fit is poor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("score input `{name}` is {value}, outside [0, 1]")]
    InputOutOfRange { name: &'static str, value: f64 },
}

/// The three sub-scores plus their aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationScores {
    pub founder: f64,
    pub idea: f64,
    pub fit: f64,
    pub aggregate: f64,
}

impl EvaluationScores {
    pub fn compute(founder: f64, idea: f64, fit: f64) -> Result<Self, ScoreError> {
        Ok(EvaluationScores {
            founder,
            idea,
            fit,
            aggregate: aggregate(founder, idea, fit)?,
        })
    }

    /// Warning text when the formula is operating at its acknowledged edge:
    /// a near-perfect founder score keeps the aggregate near 1 even when the
    /// idea and fit scores are very weak.
    pub fn formula_edge_warning(&self) -> Option<String> {
        formula_edge_warning(self.founder, self.idea, self.fit)
    }
}

fn check_range(name: &'static str, value: f64) -> Result<(), ScoreError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ScoreError::InputOutOfRange { name, value });
    }
    Ok(())
}

/// Combines the sub-scores; all inputs must already be in `[0, 1]`.
///
/// Returns 0 whenever any input is 0 and 1 when `founder` is 1 (and the other
/// two are positive); otherwise `founder ^ (1 / (2 · fit · idea))`. For a tiny
/// `fit · idea` product the exponent is huge and the power underflows to a
/// clean 0 (the base is below 1), never NaN.
pub fn aggregate(founder: f64, idea: f64, fit: f64) -> Result<f64, ScoreError> {
    check_range("founder", founder)?;
    check_range("idea", idea)?;
    check_range("fit", fit)?;
    if founder == 0.0 || idea == 0.0 || fit == 0.0 {
        return Ok(0.0);
    }
    if founder == 1.0 {
        return Ok(1.0);
    }
    let exponent = 1.0 / (2.0 * fit * idea);
    if exponent == 1.0 {
        return Ok(founder);
    }
    Ok(founder.powf(exponent))
}

/// See [`EvaluationScores::formula_edge_warning`].
pub fn formula_edge_warning(founder: f64, idea: f64, fit: f64) -> Option<String> {
    if founder >= 0.99 && idea > 0.0 && fit > 0.0 && idea * fit <= 0.1 {
        Some(format!(
            "formula edge: founder score {founder:.2} dominates although idea·fit = {:.3}; \
             the aggregate stays near 1 by construction",
            idea * fit
        ))
    } else {
        None
    }
}
