//! Contribution profiles, reference baselines, and the cosine utility
//! score with its five-level interpretation scale.

use crate::neural::{epu_forward, EpuModel, NeuralError};
use crate::pfm::{decompose, Image, PfmConfig, PfmError};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Profile norms below this are degenerate: the cosine direction is
/// undefined.
pub const NORM_EPS: f64 = 1e-9;

/// Baseline key used by the global scope.
pub const GLOBAL_KEY: &str = "*";

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("profile uses {got:?} maps but the reference uses {expected:?}")]
    ConfigMismatch { expected: PfmConfig, got: PfmConfig },
    #[error("empty input set")]
    EmptySet,
    #[error("per-class baseline requires a label for every image")]
    LabelsRequired,
    #[error("{images} images but {labels} labels")]
    LabelLengthMismatch { images: usize, labels: usize },
    #[error("scoring against a per-class baseline requires a class key")]
    ClassKeyRequired,
    #[error("class {0:?} not present in the baseline")]
    UnknownClass(String),
    #[error("degenerate profile: norm {norm:.3e} is below {NORM_EPS:.0e}")]
    DegenerateProfile { norm: f64 },
    #[error("utility score {0} outside [-1, 1]")]
    ScoreOutOfRange(f64),
    #[error("component {0} outside [-1, 1] in profile")]
    ComponentOutOfRange(f64),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("duplicate id {0:?} in scoring set")]
    DuplicateId(String),
    #[error("malformed baseline: {0}")]
    MalformedBaseline(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Pfm(#[from] PfmError),
}

/// Per-image contribution profile: the four bounded sub-network responses,
/// in map order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionProfile {
    config: PfmConfig,
    components: [f64; 4],
}

impl ContributionProfile {
    /// Components must lie in [-1, 1] (they are tanh outputs or means of
    /// such).
    pub fn new(config: PfmConfig, components: [f64; 4]) -> Result<Self, ScoreError> {
        for &c in &components {
            if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
                return Err(ScoreError::ComponentOutOfRange(c));
            }
        }
        Ok(ContributionProfile { config, components })
    }

    /// Internal constructor for responses already bounded by the tanh head.
    pub(crate) fn from_responses(config: PfmConfig, components: [f64; 4]) -> Self {
        debug_assert!(components.iter().all(|c| (-1.0..=1.0).contains(c)));
        ContributionProfile { config, components }
    }

    pub fn config(&self) -> PfmConfig {
        self.config
    }

    pub fn components(&self) -> [f64; 4] {
        self.components
    }

    /// Euclidean norm; at most 2 for four components bounded by 1.
    pub fn magnitude(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Reference scope of a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scope {
    #[serde(rename = "global")]
    Global,
    #[serde(rename = "per-class")]
    PerClass,
}

/// Mean contribution profile(s) of a reference set. Global scope stores one
/// vector under `GLOBAL_KEY`; per-class scope stores one per class label.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineProfile {
    config: PfmConfig,
    scope: Scope,
    profiles: BTreeMap<String, [f64; 4]>,
    counts: BTreeMap<String, u64>,
}

impl BaselineProfile {
    /// Validating constructor used by deserialization.
    pub fn from_parts(
        config: PfmConfig,
        scope: Scope,
        profiles: BTreeMap<String, [f64; 4]>,
        counts: BTreeMap<String, u64>,
    ) -> Result<Self, ScoreError> {
        if profiles.is_empty() {
            return Err(ScoreError::MalformedBaseline("no profiles".into()));
        }
        let profile_keys: Vec<_> = profiles.keys().collect();
        let count_keys: Vec<_> = counts.keys().collect();
        if profile_keys != count_keys {
            return Err(ScoreError::MalformedBaseline("profile and count keys differ".into()));
        }
        match scope {
            Scope::Global => {
                if profile_keys != [GLOBAL_KEY] {
                    return Err(ScoreError::MalformedBaseline(format!(
                        "global scope must hold exactly the {GLOBAL_KEY:?} key"
                    )));
                }
            }
            Scope::PerClass => {
                if profiles.contains_key(GLOBAL_KEY) {
                    return Err(ScoreError::MalformedBaseline(format!(
                        "per-class scope must not hold the {GLOBAL_KEY:?} key"
                    )));
                }
            }
        }
        for v in profiles.values() {
            for &c in v {
                if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
                    return Err(ScoreError::ComponentOutOfRange(c));
                }
            }
        }
        if counts.values().any(|&n| n == 0) {
            return Err(ScoreError::MalformedBaseline("zero-count class".into()));
        }
        Ok(BaselineProfile { config, scope, profiles, counts })
    }

    pub fn config(&self) -> PfmConfig {
        self.config
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn profiles(&self) -> &BTreeMap<String, [f64; 4]> {
        &self.profiles
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// Reference vector for a scoring call. Global scope ignores the class
    /// key; per-class scope requires one that the baseline knows.
    pub fn reference(&self, class: Option<&str>) -> Result<&[f64; 4], ScoreError> {
        match self.scope {
            Scope::Global => Ok(&self.profiles[GLOBAL_KEY]),
            Scope::PerClass => {
                let key = class.ok_or(ScoreError::ClassKeyRequired)?;
                self.profiles.get(key).ok_or_else(|| ScoreError::UnknownClass(key.to_string()))
            }
        }
    }
}

/// Profile of one image under a model: decomposition followed by the
/// forward pass. Identical to the profile inside `epu_forward`'s
/// prediction.
pub fn profile_of(model: &EpuModel<f32>, image: &Image) -> Result<ContributionProfile, ScoreError> {
    let pfms = decompose(image)?;
    Ok(epu_forward(model, &pfms)?.profile)
}

/// Component-wise mean of profiles grouped by scope: one group for
/// `Scope::Global`, one per label for `Scope::PerClass` (labels then being
/// mandatory).
pub fn compute_baseline_from_profiles(
    profiles: &[ContributionProfile],
    labels: Option<&[String]>,
    scope: Scope,
) -> Result<BaselineProfile, ScoreError> {
    if profiles.is_empty() {
        return Err(ScoreError::EmptySet);
    }
    let config = profiles[0].config;
    for p in profiles {
        if p.config != config {
            return Err(ScoreError::ConfigMismatch { expected: config, got: p.config });
        }
    }
    if let Some(l) = labels {
        if l.len() != profiles.len() {
            return Err(ScoreError::LabelLengthMismatch { images: profiles.len(), labels: l.len() });
        }
    }
    let key_of = |i: usize| -> Result<&str, ScoreError> {
        match scope {
            Scope::Global => Ok(GLOBAL_KEY),
            Scope::PerClass => labels
                .and_then(|l| l.get(i))
                .map(String::as_str)
                .ok_or(ScoreError::LabelsRequired),
        }
    };
    let mut sums: BTreeMap<String, ([f64; 4], u64)> = BTreeMap::new();
    for (i, p) in profiles.iter().enumerate() {
        let entry = sums.entry(key_of(i)?.to_string()).or_insert(([0.0; 4], 0));
        for (s, c) in entry.0.iter_mut().zip(p.components) {
            *s += c;
        }
        entry.1 += 1;
    }
    let mut out = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (k, (sum, n)) in sums {
        let mean = [sum[0] / n as f64, sum[1] / n as f64, sum[2] / n as f64, sum[3] / n as f64];
        out.insert(k.clone(), mean);
        counts.insert(k, n);
    }
    BaselineProfile::from_parts(config, scope, out, counts)
}

/// Baseline straight from images: profiles each one under the model, then
/// averages per scope.
pub fn compute_baseline(
    model: &EpuModel<f32>,
    images: &[Image],
    labels: Option<&[String]>,
    scope: Scope,
) -> Result<BaselineProfile, ScoreError> {
    if images.is_empty() {
        return Err(ScoreError::EmptySet);
    }
    let profiles: Vec<ContributionProfile> =
        images.iter().map(|img| profile_of(model, img)).collect::<Result<_, _>>()?;
    compute_baseline_from_profiles(&profiles, labels, scope)
}

fn cosine(a: &[f64; 4], b: &[f64; 4]) -> Result<f64, ScoreError> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < NORM_EPS {
        return Err(ScoreError::DegenerateProfile { norm: na });
    }
    if nb < NORM_EPS {
        return Err(ScoreError::DegenerateProfile { norm: nb });
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Utility score of a profile against a baseline: the cosine between the
/// profile and the scope's reference vector, in [-1, 1].
pub fn ius_score(
    profile: &ContributionProfile,
    baseline: &BaselineProfile,
    class: Option<&str>,
) -> Result<f64, ScoreError> {
    if profile.config != baseline.config {
        return Err(ScoreError::ConfigMismatch { expected: baseline.config, got: profile.config });
    }
    cosine(&profile.components, baseline.reference(class)?)
}

/// Dataset-level score: profiles are averaged component-wise first, then
/// the mean profile is scored.
pub fn dataset_ius(
    profiles: &[ContributionProfile],
    baseline: &BaselineProfile,
    class: Option<&str>,
) -> Result<f64, ScoreError> {
    if profiles.is_empty() {
        return Err(ScoreError::EmptySet);
    }
    let config = profiles[0].config;
    let mut mean = [0.0f64; 4];
    for p in profiles {
        if p.config != config {
            return Err(ScoreError::ConfigMismatch { expected: config, got: p.config });
        }
        for (m, c) in mean.iter_mut().zip(p.components) {
            *m += c;
        }
    }
    for m in &mut mean {
        *m /= profiles.len() as f64;
    }
    ius_score(&ContributionProfile::new(config, mean)?, baseline, class)
}

/// Five-level utility scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UtilityLevel {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl fmt::Display for UtilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UtilityLevel::VeryLow => "VL",
            UtilityLevel::Low => "L",
            UtilityLevel::Medium => "M",
            UtilityLevel::High => "H",
            UtilityLevel::VeryHigh => "VH",
        };
        f.write_str(s)
    }
}

impl FromStr for UtilityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VL" => Ok(UtilityLevel::VeryLow),
            "L" => Ok(UtilityLevel::Low),
            "M" => Ok(UtilityLevel::Medium),
            "H" => Ok(UtilityLevel::High),
            "VH" => Ok(UtilityLevel::VeryHigh),
            other => Err(format!("unknown utility level {other:?}")),
        }
    }
}

/// Level cut points. Intervals are closed below and open above except the
/// top, which closes at 1: [-1, t0) [t0, t1) [t1, t2) [t2, t3) [t3, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds([f64; 4]);

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds([0.2, 0.4, 0.6, 0.8])
    }
}

impl Thresholds {
    pub fn new(t: [f64; 4]) -> Result<Self, ScoreError> {
        let ascending = t.windows(2).all(|w| w[0] < w[1]);
        let in_range = t.iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v));
        if !(ascending && in_range) {
            return Err(ScoreError::InvalidThresholds(format!(
                "{t:?} must be strictly ascending within [-1, 1]"
            )));
        }
        Ok(Thresholds(t))
    }

    pub fn cuts(&self) -> [f64; 4] {
        self.0
    }

    pub fn is_standard(&self) -> bool {
        self.0 == Thresholds::default().0
    }
}

/// Buckets a utility score under explicit thresholds.
pub fn utility_level_with(u: f64, thresholds: &Thresholds) -> Result<UtilityLevel, ScoreError> {
    if !u.is_finite() || !(-1.0..=1.0).contains(&u) {
        return Err(ScoreError::ScoreOutOfRange(u));
    }
    let t = thresholds.0;
    Ok(if u < t[0] {
        UtilityLevel::VeryLow
    } else if u < t[1] {
        UtilityLevel::Low
    } else if u < t[2] {
        UtilityLevel::Medium
    } else if u < t[3] {
        UtilityLevel::High
    } else {
        UtilityLevel::VeryHigh
    })
}

/// Buckets a utility score under the standard thresholds.
pub fn utility_level(u: f64) -> Result<UtilityLevel, ScoreError> {
    utility_level_with(u, &Thresholds::default())
}

/// One image to score: stable id, optional class key, decoded pixels.
#[derive(Debug, Clone)]
pub struct ScoreItem {
    pub id: String,
    pub class: Option<String>,
    pub image: Image,
}

#[derive(Debug, Clone)]
pub struct ScoredRow {
    pub id: String,
    pub class: Option<String>,
    pub profile: ContributionProfile,
    pub u: f64,
    pub level: UtilityLevel,
}

/// Batch result: successful rows in input order plus per-item failures.
#[derive(Debug)]
pub struct ScoreBatch {
    pub rows: Vec<ScoredRow>,
    pub failures: Vec<(String, ScoreError)>,
}

/// Scores a set of images, continuing past per-item failures. Ids must be
/// unique; model and baseline must agree on the map family.
pub fn score_set_with(
    model: &EpuModel<f32>,
    baseline: &BaselineProfile,
    items: &[ScoreItem],
    thresholds: &Thresholds,
) -> Result<ScoreBatch, ScoreError> {
    if model.pfm_config != baseline.config {
        return Err(ScoreError::ConfigMismatch { expected: baseline.config, got: model.pfm_config });
    }
    let mut seen = std::collections::BTreeSet::new();
    for item in items {
        if !seen.insert(item.id.as_str()) {
            return Err(ScoreError::DuplicateId(item.id.clone()));
        }
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for item in items {
        let outcome = profile_of(model, &item.image).and_then(|profile| {
            let u = ius_score(&profile, baseline, item.class.as_deref())?;
            let level = utility_level_with(u, thresholds)?;
            Ok(ScoredRow { id: item.id.clone(), class: item.class.clone(), profile, u, level })
        });
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((item.id.clone(), e)),
        }
    }
    Ok(ScoreBatch { rows, failures })
}

pub fn score_set(
    model: &EpuModel<f32>,
    baseline: &BaselineProfile,
    items: &[ScoreItem],
) -> Result<ScoreBatch, ScoreError> {
    score_set_with(model, baseline, items, &Thresholds::default())
}
