//! Controlled degradation study: score the same images under a blur and
//! noise ladder and track how utility moves.

use super::corrupt::{corruption_ladder, CorruptionLevel};
use super::stats::{mean_sd, spearman};
use super::HarnessError;
use crate::ius::{ius_score, profile_of, utility_level, BaselineProfile, UtilityLevel};
use crate::neural::EpuModel;
use crate::pfm::Image;

/// Scores of one ladder step over the whole image set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome {
    pub level: usize,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub mean_u: f64,
    pub sd_u: f64,
    /// Utility-level counts, lowest to highest.
    pub histogram: [usize; 5],
    /// Per-image scores in input order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationReport {
    pub levels: Vec<LevelOutcome>,
    /// Rank correlation between ladder position and utility over all
    /// (level, image) pairs. None when one side has no variation.
    pub spearman: Option<f64>,
}

/// Applies the ladder, scores every corrupted copy against the baseline, and
/// summarizes per level. Level 0 is the identity, so its scores equal direct
/// scoring of the inputs bit for bit. Corrupted copies keep the class of
/// their source image, so `classes` (aligned with `images`) routes each one
/// to its class reference when the baseline is per-class.
pub fn degradation_study(
    model: &EpuModel<f32>,
    baseline: &BaselineProfile,
    images: &[Image],
    classes: Option<&[String]>,
    ladder: &[CorruptionLevel],
    seed: u64,
) -> Result<DegradationReport, HarnessError> {
    if images.is_empty() {
        return Err(HarnessError::EmptySet("images".into()));
    }
    if let Some(c) = classes {
        if c.len() != images.len() {
            return Err(HarnessError::InvalidConfig(format!(
                "{} class keys for {} images",
                c.len(),
                images.len()
            )));
        }
    }
    let corrupted = corruption_ladder(images, ladder, seed)?;
    let mut levels = Vec::with_capacity(ladder.len());
    let mut pooled_levels = Vec::new();
    let mut pooled_scores = Vec::new();
    for (li, batch) in corrupted.iter().enumerate() {
        let mut scores = Vec::with_capacity(batch.len());
        let mut histogram = [0usize; 5];
        for (i, image) in batch.iter().enumerate() {
            let profile = profile_of(model, image)?;
            let class = classes.map(|c| c[i].as_str());
            let u = ius_score(&profile, baseline, class)?;
            let slot = match utility_level(u)? {
                UtilityLevel::VeryLow => 0,
                UtilityLevel::Low => 1,
                UtilityLevel::Medium => 2,
                UtilityLevel::High => 3,
                UtilityLevel::VeryHigh => 4,
            };
            histogram[slot] += 1;
            pooled_levels.push(li as f64);
            pooled_scores.push(u);
            scores.push(u);
        }
        let (mean_u, sd_u) = mean_sd(&scores);
        levels.push(LevelOutcome {
            level: li,
            blur_sigma: ladder[li].blur_sigma,
            noise_sigma: ladder[li].noise_sigma,
            mean_u,
            sd_u,
            histogram,
            scores,
        });
    }
    let spearman = spearman(&pooled_levels, &pooled_scores);
    Ok(DegradationReport { levels, spearman })
}
