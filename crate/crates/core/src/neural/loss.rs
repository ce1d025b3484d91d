//! Binary cross-entropy and the logistic link, both evaluated in f64.

use super::NeuralError;

/// Probability clamp applied inside the loss only; predictions themselves
/// are never clamped.
pub const PROB_CLAMP: f64 = 1e-7;

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `-y ln p - (1-y) ln(1-p)` with `p` clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`, so the result is always finite.
pub fn binary_cross_entropy(y: u8, p: f64) -> Result<f64, NeuralError> {
    if y > 1 {
        return Err(NeuralError::InvalidLabel(y));
    }
    if !p.is_finite() {
        return Err(NeuralError::NonFinite("loss input probability"));
    }
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let loss = if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
    Ok(loss)
}
