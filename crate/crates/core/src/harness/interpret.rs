//! Side-by-side reading of one image's contribution profile against the
//! baseline expectation.

use super::HarnessError;
use crate::ius::{BaselineProfile, ContributionProfile};

/// One perceptual component compared to its baseline value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub name: String,
    pub baseline: f64,
    pub image: f64,
    /// Signed difference, image minus baseline.
    pub deviation: f64,
    /// Whether the image pushes the decision the same way the baseline does
    /// (matching sign, with exact zero its own category).
    pub sign_agreement: bool,
}

fn sign_class(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Expands a profile into per-component records against the baseline
/// reference for `class`. An image equal to the baseline agrees on every
/// component; its negation (for a baseline with no zero components) agrees
/// on none.
pub fn interpretation_report(
    profile: &ContributionProfile,
    baseline: &BaselineProfile,
    class: Option<&str>,
) -> Result<Vec<ComponentRecord>, HarnessError> {
    let reference = baseline.reference(class)?;
    if profile.config() != baseline.config() {
        return Err(HarnessError::Protocol(format!(
            "profile uses {:?} maps but the baseline uses {:?} maps",
            profile.config(),
            baseline.config()
        )));
    }
    let names = profile.config().map_names();
    let components = profile.components();
    Ok((0..4)
        .map(|i| ComponentRecord {
            name: names[i].to_string(),
            baseline: reference[i],
            image: components[i],
            deviation: components[i] - reference[i],
            sign_agreement: sign_class(components[i]) == sign_class(reference[i]),
        })
        .collect())
}
