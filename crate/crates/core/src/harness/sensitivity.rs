//! Stability checks for the scoring pipeline: how the baseline reacts to
//! reference-set subsampling, and distribution summaries of the profiles
//! themselves.

use super::stats::{summarize, Summary};
use super::HarnessError;
use crate::ius::{
    compute_baseline_from_profiles, ius_score, profile_of, utility_level, BaselineProfile,
    ContributionProfile, Scope, UtilityLevel,
};
use crate::neural::EpuModel;
use crate::pfm::Image;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

const ALL_LEVELS: [UtilityLevel; 5] = [
    UtilityLevel::VeryLow,
    UtilityLevel::Low,
    UtilityLevel::Medium,
    UtilityLevel::High,
    UtilityLevel::VeryHigh,
];

/// Outcome of subsampling the baseline reference set.
///
/// Everything is indexed by fraction position: `subsets[i]` holds the
/// reference indices behind `baselines[i]`, `cosine_table[i][j]` compares
/// reference vectors i and j, and `agreement[i]` is the share of pool images
/// whose top-level flag matches the full-reference verdict.
#[derive(Debug)]
pub struct SensitivityReport {
    pub fractions: Vec<f64>,
    pub subset_sizes: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
    pub baselines: Vec<BaselineProfile>,
    pub cosine_table: Vec<Vec<f64>>,
    pub agreement: Vec<f64>,
}

/// Rebuilds the baseline from seeded random subsets of the reference images
/// and measures how much the scores of `pool` move.
///
/// Fractions must lie in (0, 1] and include 1.0 so every comparison has the
/// full-reference anchor; subset size is floor(fraction * n) and must be at
/// least one. The subset for fraction 1.0 is the identity, so its baseline is
/// bit-identical to one computed without subsampling.
pub fn baseline_sensitivity(
    model: &EpuModel<f32>,
    reference: &[Image],
    pool: &[Image],
    fractions: &[f64],
    seed: u64,
) -> Result<SensitivityReport, HarnessError> {
    if reference.is_empty() {
        return Err(HarnessError::EmptySet("reference".into()));
    }
    if pool.is_empty() {
        return Err(HarnessError::EmptySet("pool".into()));
    }
    if fractions.is_empty() {
        return Err(HarnessError::InvalidConfig("no fractions given".into()));
    }
    for f in fractions {
        if !f.is_finite() || *f <= 0.0 || *f > 1.0 {
            return Err(HarnessError::InvalidConfig(format!(
                "fraction {f} is outside (0, 1]"
            )));
        }
    }
    let full_at = fractions.iter().position(|f| *f == 1.0).ok_or_else(|| {
        HarnessError::InvalidConfig("fractions must include 1.0 as the anchor".into())
    })?;

    let n = reference.len();
    let mut subset_sizes = Vec::with_capacity(fractions.len());
    let mut subsets = Vec::with_capacity(fractions.len());
    for f in fractions {
        let k = (f * n as f64).floor() as usize;
        if k == 0 {
            return Err(HarnessError::SubsetTooSmall { fraction: *f, pool: n });
        }
        let subset = if k == n {
            (0..n).collect()
        } else {
            // Each fraction gets its own stream so the draw depends only on
            // (seed, fraction), not on the position in the list.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(f.to_bits());
            let mut picks = rand::seq::index::sample(&mut rng, n, k).into_vec();
            picks.sort_unstable();
            picks
        };
        subset_sizes.push(k);
        subsets.push(subset);
    }

    let ref_profiles: Vec<ContributionProfile> =
        reference.iter().map(|img| profile_of(model, img)).collect::<Result<_, _>>()?;
    let mut baselines = Vec::with_capacity(fractions.len());
    for subset in &subsets {
        let chosen: Vec<ContributionProfile> =
            subset.iter().map(|&i| ref_profiles[i].clone()).collect();
        baselines.push(compute_baseline_from_profiles(&chosen, None, Scope::Global)?);
    }

    let mut cosine_table = vec![vec![0.0; baselines.len()]; baselines.len()];
    for (i, a) in baselines.iter().enumerate() {
        let a_ref = ContributionProfile::new(a.config(), *a.reference(None)?)?;
        for (j, b) in baselines.iter().enumerate() {
            cosine_table[i][j] = ius_score(&a_ref, b, None)?;
        }
    }

    let pool_profiles: Vec<ContributionProfile> =
        pool.iter().map(|img| profile_of(model, img)).collect::<Result<_, _>>()?;
    let mut vh_flags = Vec::with_capacity(baselines.len());
    for baseline in &baselines {
        let flags: Vec<bool> = pool_profiles
            .iter()
            .map(|p| {
                let u = ius_score(p, baseline, None)?;
                Ok::<bool, HarnessError>(utility_level(u)? == UtilityLevel::VeryHigh)
            })
            .collect::<Result<_, _>>()?;
        vh_flags.push(flags);
    }
    let agreement = vh_flags
        .iter()
        .map(|flags| {
            let same = flags.iter().zip(&vh_flags[full_at]).filter(|(a, b)| a == b).count();
            same as f64 / pool.len() as f64
        })
        .collect();

    Ok(SensitivityReport {
        fractions: fractions.to_vec(),
        subset_sizes,
        subsets,
        baselines,
        cosine_table,
        agreement,
    })
}

/// For each threshold t in 0.0, 0.1, ..., 1.0: the share of profiles whose
/// components ALL satisfy |f_i| <= t. Non-decreasing in t and exactly 1 at
/// t = 1 because components live in [-1, 1].
pub fn joint_threshold_probability(
    components: &[[f64; 4]],
) -> Result<Vec<(f64, f64)>, HarnessError> {
    if components.is_empty() {
        return Err(HarnessError::EmptySet("profiles".into()));
    }
    for c in components {
        if c.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(HarnessError::InvalidConfig(format!(
                "profile {c:?} has components outside [-1, 1]"
            )));
        }
    }
    Ok((0..=10)
        .map(|i| {
            let t = i as f64 / 10.0;
            let within = components
                .iter()
                .filter(|c| c.iter().all(|v| v.abs() <= t))
                .count();
            (t, within as f64 / components.len() as f64)
        })
        .collect())
}

/// Distribution of profile strength by utility level.
#[derive(Debug)]
pub struct MagnitudeReport {
    /// Levels that actually occur, lowest first, with the five-number
    /// summary of the Euclidean profile magnitude (always in [0, 2]).
    pub per_level: Vec<(UtilityLevel, Summary)>,
    /// Levels with no rows, noted rather than silently dropped.
    pub omitted: Vec<UtilityLevel>,
    /// Per-component summaries of |f_i| over the top-level rows, present
    /// only when that level occurs.
    pub vh_components: Option<[Summary; 4]>,
}

/// Summarizes profile magnitudes per utility level plus component-wise
/// absolute contributions for the top level.
pub fn magnitude_stats(rows: &[(UtilityLevel, [f64; 4])]) -> Result<MagnitudeReport, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptySet("scored rows".into()));
    }
    let mut per_level = Vec::new();
    let mut omitted = Vec::new();
    for level in ALL_LEVELS {
        let magnitudes: Vec<f64> = rows
            .iter()
            .filter(|(l, _)| *l == level)
            .map(|(_, c)| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        match summarize(&magnitudes) {
            Some(summary) => per_level.push((level, summary)),
            None => omitted.push(level),
        }
    }
    let vh_components = {
        let vh: Vec<&[f64; 4]> = rows
            .iter()
            .filter(|(l, _)| *l == UtilityLevel::VeryHigh)
            .map(|(_, c)| c)
            .collect();
        if vh.is_empty() {
            None
        } else {
            let mut out = Vec::with_capacity(4);
            for i in 0..4 {
                let abs: Vec<f64> = vh.iter().map(|c| c[i].abs()).collect();
                out.push(summarize(&abs).unwrap());
            }
            Some([out[0], out[1], out[2], out[3]])
        }
    };
    Ok(MagnitudeReport { per_level, omitted, vh_components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::ArchConfig;
    use crate::pfm::{ColorSpace, PfmConfig};
    use crate::plane::Plane;
    use rand::Rng;

    fn arch() -> ArchConfig {
        ArchConfig { conv_filters: vec![2, 2], dense_units: 3 }
    }

    fn random_images(count: usize, seed: u64) -> Vec<Image> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let planes = (0..3)
                    .map(|_| {
                        let data = (0..16 * 16).map(|_| rng.random::<f32>()).collect();
                        Plane::from_vec(16, 16, data)
                    })
                    .collect();
                Image::new(ColorSpace::Srgb, planes).unwrap()
            })
            .collect()
    }

    fn test_model() -> EpuModel<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        EpuModel::init(PfmConfig::Color, (16, 16), &arch(), &mut rng).unwrap()
    }

    #[test]
    fn full_fraction_reproduces_the_direct_baseline_exactly() {
        let model = test_model();
        let reference = random_images(6, 1);
        let pool = random_images(4, 2);
        let report =
            baseline_sensitivity(&model, &reference, &pool, &[1.0], 9).unwrap();
        assert_eq!(report.subsets, vec![(0..6).collect::<Vec<_>>()]);
        let direct = crate::ius::compute_baseline(&model, &reference, None, Scope::Global).unwrap();
        assert_eq!(
            report.baselines[0].reference(None).unwrap(),
            direct.reference(None).unwrap(),
            "identity subset must give a bit-identical baseline"
        );
        assert_eq!(report.agreement, vec![1.0]);
        assert!((report.cosine_table[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_reference_images_make_every_subset_agree() {
        let model = test_model();
        let one = random_images(1, 3).pop().unwrap();
        let reference: Vec<Image> = std::iter::repeat_with(|| one.clone()).take(8).collect();
        let pool = random_images(5, 4);
        let report =
            baseline_sensitivity(&model, &reference, &pool, &[0.5, 1.0], 11).unwrap();
        assert_eq!(report.subset_sizes, vec![4, 8]);
        assert!(
            (report.cosine_table[0][1] - 1.0).abs() < 1e-7,
            "subset mean of identical profiles must match the full mean, got {}",
            report.cosine_table[0][1]
        );
        assert_eq!(report.agreement, vec![1.0, 1.0]);
    }

    #[test]
    fn subsets_are_seeded_and_fraction_keyed() {
        let model = test_model();
        let reference = random_images(12, 5);
        let pool = random_images(3, 6);
        let a = baseline_sensitivity(&model, &reference, &pool, &[0.5, 1.0], 1).unwrap();
        let b = baseline_sensitivity(&model, &reference, &pool, &[0.5, 1.0], 1).unwrap();
        assert_eq!(a.subsets, b.subsets);
        let c = baseline_sensitivity(&model, &reference, &pool, &[0.5, 1.0], 2).unwrap();
        assert_ne!(a.subsets[0], c.subsets[0], "different seeds should pick different halves");
        // Dropping the other fraction must not change the draw for 0.5.
        let d = baseline_sensitivity(&model, &reference, &pool, &[0.25, 0.5, 1.0], 1).unwrap();
        assert_eq!(a.subsets[0], d.subsets[1]);
        for (i, subset) in a.subsets.iter().enumerate() {
            assert_eq!(subset.len(), a.subset_sizes[i]);
            assert!(subset.windows(2).all(|w| w[0] < w[1]), "indices sorted and unique");
        }
        for row in &a.agreement {
            assert!((0.0..=1.0).contains(row));
        }
    }

    #[test]
    fn bad_fraction_lists_are_rejected() {
        let model = test_model();
        let reference = random_images(3, 7);
        let pool = random_images(2, 8);
        let missing_anchor =
            baseline_sensitivity(&model, &reference, &pool, &[0.5], 0).unwrap_err();
        assert!(matches!(missing_anchor, HarnessError::InvalidConfig(_)), "{missing_anchor}");
        let out_of_range =
            baseline_sensitivity(&model, &reference, &pool, &[0.0, 1.0], 0).unwrap_err();
        assert!(matches!(out_of_range, HarnessError::InvalidConfig(_)), "{out_of_range}");
        let too_small =
            baseline_sensitivity(&model, &reference, &pool, &[0.25, 1.0], 0).unwrap_err();
        match too_small {
            HarnessError::SubsetTooSmall { fraction, pool } => {
                assert_eq!(fraction, 0.25);
                assert_eq!(pool, 3);
            }
            other => panic!("expected subset-too-small, got {other}"),
        }
        let empty = baseline_sensitivity(&model, &[], &pool, &[1.0], 0).unwrap_err();
        assert!(matches!(empty, HarnessError::EmptySet(_)));
    }

    #[test]
    fn joint_threshold_curve_matches_a_counting_oracle() {
        let profiles = [
            [0.05, -0.02, 0.01, 0.0],
            [0.3, 0.1, -0.25, 0.05],
            [0.95, 0.2, 0.1, -0.4],
            [-0.65, 0.55, 0.6, 0.1],
        ];
        let curve = joint_threshold_probability(&profiles).unwrap();
        assert_eq!(curve.len(), 11);
        // Hand count: max |component| per profile is 0.05, 0.3, 0.95, 0.65.
        let expected = [0.0, 0.25, 0.25, 0.5, 0.5, 0.5, 0.5, 0.75, 0.75, 0.75, 1.0];
        for (i, ((t, p), want)) in curve.iter().zip(expected).enumerate() {
            assert!((t - i as f64 / 10.0).abs() < 1e-15);
            assert_eq!(*p, want, "at t = {t}");
        }
        assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1), "non-decreasing");
        assert_eq!(curve[10].1, 1.0);

        assert!(joint_threshold_probability(&[]).is_err());
        assert!(joint_threshold_probability(&[[1.5, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn magnitude_summaries_use_the_euclidean_norm() {
        let rows = vec![
            (UtilityLevel::VeryHigh, [1.0, 1.0, 1.0, 1.0]),
            (UtilityLevel::VeryHigh, [0.6, -0.8, 0.0, 0.0]),
            (UtilityLevel::VeryLow, [0.0, 0.0, 0.0, 0.0]),
        ];
        let report = magnitude_stats(&rows).unwrap();
        assert_eq!(report.per_level.len(), 2);
        let (level, vh) = report.per_level[1];
        assert_eq!(level, UtilityLevel::VeryHigh);
        assert_eq!(vh.max, 2.0, "all-ones profile sits at the magnitude ceiling");
        assert_eq!(vh.min, 1.0);
        let (level, vl) = report.per_level[0];
        assert_eq!(level, UtilityLevel::VeryLow);
        assert_eq!(vl.max, 0.0);
        assert_eq!(
            report.omitted,
            vec![UtilityLevel::Low, UtilityLevel::Medium, UtilityLevel::High]
        );
        let comps = report.vh_components.unwrap();
        assert_eq!(comps[0].min, 0.6);
        assert_eq!(comps[0].max, 1.0);
        assert_eq!(comps[1].min, 0.8, "component summaries take absolute values");
        assert_eq!(comps[2].max, 1.0);

        assert!(magnitude_stats(&[]).is_err());
        let no_vh = magnitude_stats(&[(UtilityLevel::Low, [0.1, 0.0, 0.0, 0.0])]).unwrap();
        assert!(no_vh.vh_components.is_none());
    }
}
