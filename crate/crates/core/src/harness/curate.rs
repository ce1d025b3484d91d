//! Training-set curation: highest-utility selection and its seeded random
//! control, both preserving a requested class distribution.

use super::HarnessError;
use crate::data::ReportRow;
use crate::ius::UtilityLevel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Target class mix: positive fractions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution(BTreeMap<String, f64>);

const FRACTION_SUM_TOL: f64 = 1e-9;

impl ClassDistribution {
    pub fn new(fractions: BTreeMap<String, f64>) -> Result<Self, HarnessError> {
        if fractions.is_empty() {
            return Err(HarnessError::InvalidDistribution("no classes given".into()));
        }
        for (class, f) in &fractions {
            if !f.is_finite() || *f <= 0.0 {
                return Err(HarnessError::InvalidDistribution(format!(
                    "class {class:?} has fraction {f}, expected > 0"
                )));
            }
        }
        let sum: f64 = fractions.values().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(HarnessError::InvalidDistribution(format!(
                "fractions must sum to 1, got {sum}"
            )));
        }
        Ok(ClassDistribution(fractions))
    }

    /// Parses `"classA=0.5,classB=0.5"`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut fractions = BTreeMap::new();
        for part in text.split(',') {
            let (class, value) = part.split_once('=').ok_or_else(|| {
                HarnessError::InvalidDistribution(format!(
                    "expected class=fraction, got {part:?}"
                ))
            })?;
            let f: f64 = value.trim().parse().map_err(|e| {
                HarnessError::InvalidDistribution(format!("class {class:?}: {e}"))
            })?;
            if fractions.insert(class.trim().to_string(), f).is_some() {
                return Err(HarnessError::InvalidDistribution(format!(
                    "class {class:?} listed twice"
                )));
            }
        }
        ClassDistribution::new(fractions)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Largest-remainder apportionment of `total` across the classes.
    /// Remainder ties resolve in class-name order.
    pub fn class_counts(&self, total: usize) -> Vec<(String, usize)> {
        let mut counts: Vec<(String, usize, f64)> = self
            .0
            .iter()
            .map(|(class, f)| {
                let exact = f * total as f64;
                (class.clone(), exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let assigned: usize = counts.iter().map(|(_, c, _)| c).sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            counts[b].2.partial_cmp(&counts[a].2).unwrap().then(counts[a].0.cmp(&counts[b].0))
        });
        for &i in order.iter().take(total - assigned) {
            counts[i].1 += 1;
        }
        counts.into_iter().map(|(class, c, _)| (class, c)).collect()
    }
}

/// Pool rows bucketed by the class key the distribution addresses. With no
/// distribution the whole pool forms one anonymous group.
fn group_pool<'a>(
    pool: &'a [ReportRow],
    dist: Option<&ClassDistribution>,
) -> Result<Vec<(String, usize, Vec<&'a ReportRow>)>, HarnessError> {
    let mut seen = BTreeSet::new();
    for row in pool {
        if !seen.insert(&row.id) {
            return Err(HarnessError::InvalidPool(format!("duplicate id {:?}", row.id)));
        }
    }
    match dist {
        None => Ok(vec![("*".to_string(), usize::MAX, pool.iter().collect())]),
        Some(dist) => {
            let pool_classes: BTreeSet<&str> =
                pool.iter().filter_map(|r| r.class.as_deref()).collect();
            for class in dist.classes() {
                if !pool_classes.contains(class) {
                    return Err(HarnessError::InvalidDistribution(format!(
                        "class {class:?} does not occur in the pool"
                    )));
                }
            }
            Ok(dist
                .classes()
                .map(|class| {
                    let rows = pool.iter().filter(|r| r.class.as_deref() == Some(class)).collect();
                    (class.to_string(), 0, rows)
                })
                .collect())
        }
    }
}

fn wanted_counts(
    groups: &mut [(String, usize, Vec<&ReportRow>)],
    target: usize,
    dist: Option<&ClassDistribution>,
) {
    match dist {
        None => groups[0].1 = target,
        Some(dist) => {
            let counts: BTreeMap<String, usize> = dist.class_counts(target).into_iter().collect();
            for (class, want, _) in groups.iter_mut() {
                *want = counts[class.as_str()];
            }
        }
    }
}

/// Selects `target` ids of the highest-utility tier, honoring the class
/// distribution exactly. Within each class the highest scores win, ties
/// falling to the lexicographically earlier id; the returned ids keep that
/// order, classes in name order.
///
/// Classes without enough eligible entries produce a deficit error naming
/// every shortfall, so a caller can extend the pool in one round.
pub fn curate_vh(
    pool: &[ReportRow],
    target: usize,
    dist: Option<&ClassDistribution>,
) -> Result<Vec<String>, HarnessError> {
    let mut groups = group_pool(pool, dist)?;
    wanted_counts(&mut groups, target, dist);
    let mut selected = Vec::with_capacity(target);
    let mut shortfalls = Vec::new();
    for (class, want, rows) in groups {
        let mut eligible: Vec<&ReportRow> =
            rows.into_iter().filter(|r| r.level == UtilityLevel::VeryHigh).collect();
        if eligible.len() < want {
            shortfalls.push((class, want, eligible.len()));
            continue;
        }
        eligible.sort_by(|a, b| b.u.partial_cmp(&a.u).unwrap().then(a.id.cmp(&b.id)));
        selected.extend(eligible[..want].iter().map(|r| r.id.clone()));
    }
    if !shortfalls.is_empty() {
        return Err(HarnessError::Deficit { shortfalls });
    }
    Ok(selected)
}

/// Seeded uniform sample of `target` ids regardless of utility, honoring the
/// class distribution exactly. Ids come back sorted within each class.
pub fn random_control(
    pool: &[ReportRow],
    target: usize,
    dist: Option<&ClassDistribution>,
    seed: u64,
) -> Result<Vec<String>, HarnessError> {
    let mut groups = group_pool(pool, dist)?;
    wanted_counts(&mut groups, target, dist);
    let mut shortfalls = Vec::new();
    for (class, want, rows) in &groups {
        if rows.len() < *want {
            shortfalls.push((class.clone(), *want, rows.len()));
        }
    }
    if !shortfalls.is_empty() {
        return Err(HarnessError::Deficit { shortfalls });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = Vec::with_capacity(target);
    for (_, want, mut rows) in groups {
        // A fixed candidate order makes the draw a function of the seed.
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let mut picks: Vec<usize> =
            rand::seq::index::sample(&mut rng, rows.len(), want).into_vec();
        picks.sort_unstable();
        selected.extend(picks.into_iter().map(|i| rows[i].id.clone()));
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ius::{utility_level, Thresholds};

    fn row(id: &str, class: Option<&str>, u: f64) -> ReportRow {
        let level = utility_level(u).unwrap();
        ReportRow {
            id: id.to_string(),
            class: class.map(String::from),
            u,
            level,
            components: [u, 0.0, 0.0, 0.0],
        }
    }

    fn dist(pairs: &[(&str, f64)]) -> ClassDistribution {
        ClassDistribution::new(pairs.iter().map(|(c, f)| (c.to_string(), *f)).collect()).unwrap()
    }

    #[test]
    fn all_vh_pool_at_full_size_is_selected_whole() {
        let pool = vec![row("a", None, 0.9), row("b", None, 0.95), row("c", None, 0.85)];
        let ids = curate_vh(&pool, 3, None).unwrap();
        assert_eq!(ids, vec!["b", "a", "c"], "highest utility first");
    }

    #[test]
    fn shortfalls_are_reported_per_class() {
        let pool = vec![
            row("a1", Some("A"), 0.9),
            row("a2", Some("A"), 0.85),
            row("a3", Some("A"), 0.95),
            row("a4", Some("A"), 0.5),
            row("b1", Some("B"), 0.9),
        ];
        let err = curate_vh(&pool, 10, Some(&dist(&[("A", 0.5), ("B", 0.5)]))).unwrap_err();
        match err {
            HarnessError::Deficit { shortfalls } => {
                assert_eq!(shortfalls, vec![
                    ("A".to_string(), 5, 3),
                    ("B".to_string(), 5, 1),
                ]);
            }
            other => panic!("expected deficit, got {other}"),
        }
    }

    #[test]
    fn selection_matches_a_brute_force_oracle() {
        // Deterministic scrambled pool exercising ties and mixed levels.
        let mut pool = Vec::new();
        for i in 0..30 {
            let class = if i % 3 == 0 { "B" } else { "A" };
            let u = ((i * 37) % 23) as f64 / 11.5 - 1.0;
            pool.push(row(&format!("img{:02}", i), Some(class), u.clamp(-1.0, 1.0)));
        }
        // Two rows tied at the same utility resolve by id.
        pool.push(row("tie_z", Some("A"), 0.91));
        pool.push(row("tie_a", Some("A"), 0.91));
        pool.push(row("b_hi1", Some("B"), 0.97));
        pool.push(row("b_hi2", Some("B"), 0.88));

        let d = dist(&[("A", 0.6), ("B", 0.4)]);
        let got = curate_vh(&pool, 5, Some(&d)).unwrap();

        let oracle: Vec<String> = {
            let mut out = Vec::new();
            for (class, want) in [("A", 3usize), ("B", 2usize)] {
                let mut rows: Vec<_> = pool
                    .iter()
                    .filter(|r| r.class.as_deref() == Some(class) && r.u >= 0.8)
                    .collect();
                rows.sort_by(|a, b| b.u.partial_cmp(&a.u).unwrap().then(a.id.cmp(&b.id)));
                out.extend(rows[..want].iter().map(|r| r.id.clone()));
            }
            out
        };
        assert_eq!(got, oracle);
        assert!(got.contains(&"tie_a".to_string()) || got.contains(&"tie_z".to_string()));
    }

    #[test]
    fn curated_rows_are_always_vh() {
        let pool: Vec<ReportRow> = (0..40)
            .map(|i| row(&format!("r{i}"), Some("A"), (i as f64 / 39.0) * 2.0 - 1.0))
            .collect();
        let ids = curate_vh(&pool, 4, Some(&dist(&[("A", 1.0)]))).unwrap();
        let thresholds = Thresholds::default();
        for id in &ids {
            let r = pool.iter().find(|r| &r.id == id).unwrap();
            assert!(r.u >= thresholds.cuts()[3], "{id} has u {}", r.u);
        }
    }

    #[test]
    fn largest_remainder_counts_are_exact() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        assert_eq!(d.class_counts(5), vec![("a".to_string(), 3), ("b".to_string(), 2)]);
        let d = dist(&[("x", 0.7), ("y", 0.2), ("z", 0.1)]);
        assert_eq!(
            d.class_counts(10),
            vec![("x".to_string(), 7), ("y".to_string(), 2), ("z".to_string(), 1)]
        );
        let total: usize = d.class_counts(13).into_iter().map(|(_, c)| c).sum();
        assert_eq!(total, 13);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(ClassDistribution::parse("a=0.5,b=0.6").is_err());
        assert!(ClassDistribution::parse("a=-0.5,b=1.5").is_err());
        assert!(ClassDistribution::parse("a0.5").is_err());
        assert!(ClassDistribution::parse("a=0.5,a=0.5").is_err());
        let d = ClassDistribution::parse("a=0.25,b=0.75").unwrap();
        assert_eq!(d.class_counts(4), vec![("a".to_string(), 1), ("b".to_string(), 3)]);

        let pool = vec![row("x", Some("a"), 0.9)];
        let err = curate_vh(&pool, 1, Some(&dist(&[("ghost", 1.0)]))).unwrap_err();
        assert!(matches!(err, HarnessError::InvalidDistribution(_)), "{err}");
    }

    #[test]
    fn duplicate_pool_ids_are_rejected() {
        let pool = vec![row("x", None, 0.9), row("x", None, 0.8)];
        assert!(matches!(curate_vh(&pool, 1, None), Err(HarnessError::InvalidPool(_))));
    }

    #[test]
    fn control_takes_whole_pool_at_full_target_and_respects_seed() {
        let pool: Vec<ReportRow> =
            (0..8).map(|i| row(&format!("r{i}"), None, (i as f64) / 8.0)).collect();
        let all = random_control(&pool, 8, None, 3).unwrap();
        assert_eq!(all.len(), 8);
        let sorted: BTreeSet<_> = all.iter().collect();
        assert_eq!(sorted.len(), 8);

        let a = random_control(&pool, 3, None, 3).unwrap();
        let b = random_control(&pool, 3, None, 3).unwrap();
        assert_eq!(a, b);
        let c = random_control(&pool, 3, None, 4).unwrap();
        assert_ne!(a, c, "different seeds should differ on an 8-choose-3 draw");
    }

    #[test]
    fn control_selection_is_uniform_over_seeds() {
        let pool: Vec<ReportRow> =
            (0..6).map(|i| row(&format!("r{i}"), None, 0.9)).collect();
        let mut hits = BTreeMap::new();
        let trials = 10_000u32;
        for seed in 0..trials as u64 {
            for id in random_control(&pool, 3, None, seed).unwrap() {
                *hits.entry(id).or_insert(0u32) += 1;
            }
        }
        // Each item is in a 6-choose-3 draw with probability one half;
        // three sigma over 10^4 trials is 150.
        let expected = trials / 2;
        for (id, count) in hits {
            assert!(
                (count as i64 - expected as i64).unsigned_abs() <= 150,
                "{id} selected {count} times, expected about {expected}"
            );
        }
    }

    #[test]
    fn control_shortfall_is_a_deficit_error() {
        let pool = vec![row("x", Some("A"), 0.1)];
        let err = random_control(&pool, 3, Some(&dist(&[("A", 1.0)])), 0).unwrap_err();
        assert!(matches!(err, HarnessError::Deficit { .. }), "{err}");
    }
}
