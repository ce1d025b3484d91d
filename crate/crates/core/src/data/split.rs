//! Deterministic stratified train/val/test partitioning.

use super::manifest::{Manifest, ManifestRow, Split};
use super::DataError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Partition configuration. Fractions must be positive and sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub rng_seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.70, val: 0.20, test: 0.10, rng_seed: 42, stratified: true }
    }
}

const FRACTION_SUM_TOL: f64 = 1e-9;

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let fs = [self.train, self.val, self.test];
        if fs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(DataError::InvalidSplitSpec(format!(
                "fractions must be positive, got train={} val={} test={}",
                self.train, self.val, self.test
            )));
        }
        let sum: f64 = fs.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(DataError::InvalidSplitSpec(format!(
                "fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Rows grouped by assigned split, in manifest order within each group.
#[derive(Debug, Clone, Default)]
pub struct SplitSets {
    pub train: Vec<ManifestRow>,
    pub val: Vec<ManifestRow>,
    pub test: Vec<ManifestRow>,
}

impl SplitSets {
    fn push(&mut self, split: Split, row: ManifestRow) {
        match split {
            Split::Train => self.train.push(row),
            Split::Val => self.val.push(row),
            Split::Test => self.test.push(row),
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Largest-remainder apportionment of `n` items across the three fractions.
/// Remainder ties go to train, then val, then test.
fn apportion(n: usize, spec: &SplitSpec) -> [usize; 3] {
    let fracs = [spec.train, spec.val, spec.test];
    let mut counts = [0usize; 3];
    let mut rems = [0f64; 3];
    let mut assigned = 0usize;
    for i in 0..3 {
        let exact = fracs[i] * n as f64;
        counts[i] = exact.floor() as usize;
        rems[i] = exact - exact.floor();
        assigned += counts[i];
    }
    let mut order = [0usize, 1, 2];
    // Stable by index, so equal remainders favor the earlier split.
    order.sort_by(|&a, &b| rems[b].partial_cmp(&rems[a]).unwrap());
    let mut leftover = n - assigned;
    for &i in &order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Assigns every manifest row to train, val, or test.
///
/// Rows carrying an explicit split column are routed verbatim and the
/// requested fractions are ignored. Otherwise each class is shuffled with a
/// seeded generator and cut by largest-remainder apportionment, so the class
/// balance of each split tracks the manifest's. The same manifest, fractions,
/// and seed always produce the same partition.
pub fn stratified_split(manifest: &Manifest, spec: &SplitSpec) -> Result<SplitSets, DataError> {
    spec.validate()?;
    if manifest.is_empty() {
        return Err(DataError::EmptyManifest);
    }
    let mut sets = SplitSets::default();
    if manifest.has_splits() {
        for row in &manifest.rows {
            let split = row.split.expect("manifest with splits has one on every row");
            sets.push(split, row.clone());
        }
        return Ok(sets);
    }
    let mut by_class: BTreeMap<&str, Vec<&ManifestRow>> = BTreeMap::new();
    if spec.stratified {
        for row in &manifest.rows {
            by_class.entry(&row.label).or_default().push(row);
        }
    } else {
        by_class.insert("", manifest.rows.iter().collect());
    }
    // One generator across classes keeps the whole partition a function of
    // the seed alone; class iteration order is fixed by the sorted map.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    for rows in by_class.values() {
        let mut shuffled: Vec<&ManifestRow> = rows.clone();
        shuffled.shuffle(&mut rng);
        let [n_train, n_val, _] = apportion(shuffled.len(), spec);
        for (i, row) in shuffled.iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            sets.push(split, (*row).clone());
        }
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn manifest_of(rows: &[(&str, &str)]) -> Manifest {
        Manifest {
            rows: rows
                .iter()
                .map(|(p, l)| ManifestRow { path: p.to_string(), label: l.to_string(), split: None })
                .collect(),
        }
    }

    fn uniform(n: usize, label: &str, start: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("img{:04}.png", start + i), label.to_string())).collect()
    }

    #[test]
    fn hundred_rows_split_seventy_twenty_ten() {
        let rows = uniform(100, "only", 0);
        let refs: Vec<(&str, &str)> = rows.iter().map(|(p, l)| (p.as_str(), l.as_str())).collect();
        let sets = stratified_split(&manifest_of(&refs), &SplitSpec::default()).unwrap();
        assert_eq!((sets.train.len(), sets.val.len(), sets.test.len()), (70, 20, 10));
    }

    #[test]
    fn two_class_sixty_forty_stays_within_one_per_class() {
        let mut rows = uniform(60, "a", 0);
        rows.extend(uniform(40, "b", 100));
        let refs: Vec<(&str, &str)> = rows.iter().map(|(p, l)| (p.as_str(), l.as_str())).collect();
        let sets = stratified_split(&manifest_of(&refs), &SplitSpec::default()).unwrap();
        for (set, frac) in [(&sets.train, 0.7), (&sets.val, 0.2), (&sets.test, 0.1)] {
            for class in ["a", "b"] {
                let total = if class == "a" { 60.0 } else { 40.0 };
                let got = set.iter().filter(|r| r.label == class).count() as f64;
                assert!(
                    (got - frac * total).abs() <= 1.0,
                    "class {class}: got {got}, want about {}",
                    frac * total
                );
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_partition_and_seeds_differ() {
        let rows = uniform(50, "a", 0);
        let refs: Vec<(&str, &str)> = rows.iter().map(|(p, l)| (p.as_str(), l.as_str())).collect();
        let m = manifest_of(&refs);
        let a = stratified_split(&m, &SplitSpec::default()).unwrap();
        let b = stratified_split(&m, &SplitSpec::default()).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);
        let other = stratified_split(&m, &SplitSpec { rng_seed: 7, ..SplitSpec::default() }).unwrap();
        assert_ne!(a.train, other.train, "different seeds should shuffle differently");
    }

    #[test]
    fn explicit_split_column_overrides_fractions() {
        let m = Manifest::parse(
            "path,label,split\na.png,x,TEST\nb.png,x,TEST\nc.png,x,TRAIN\n",
            "t",
        )
        .unwrap();
        let sets = stratified_split(&m, &SplitSpec::default()).unwrap();
        assert_eq!(sets.train.len(), 1);
        assert_eq!(sets.val.len(), 0);
        assert_eq!(sets.test.len(), 2);
        assert_eq!(sets.train[0].path, "c.png");
    }

    #[test]
    fn invalid_specs_and_empty_manifests_are_rejected() {
        let m = manifest_of(&[("a.png", "x")]);
        let bad_sum = SplitSpec { train: 0.5, val: 0.2, test: 0.1, ..SplitSpec::default() };
        assert!(matches!(stratified_split(&m, &bad_sum), Err(DataError::InvalidSplitSpec(_))));
        let bad_sign = SplitSpec { train: 1.2, val: -0.1, test: -0.1, ..SplitSpec::default() };
        assert!(matches!(stratified_split(&m, &bad_sign), Err(DataError::InvalidSplitSpec(_))));
        let zero = SplitSpec { train: 0.9, val: 0.1, test: 0.0, ..SplitSpec::default() };
        assert!(matches!(stratified_split(&m, &zero), Err(DataError::InvalidSplitSpec(_))));
        assert!(matches!(
            stratified_split(&Manifest::default(), &SplitSpec::default()),
            Err(DataError::EmptyManifest)
        ));
    }

    #[test]
    fn apportion_hands_ties_to_earlier_splits() {
        // 5 items at 70/20/10: floors 3/1/0, remainders .5/.0/.5, the two
        // leftovers go to train then test.
        assert_eq!(apportion(5, &SplitSpec::default()), [4, 1, 0]);
        assert_eq!(apportion(0, &SplitSpec::default()), [0, 0, 0]);
        assert_eq!(apportion(1, &SplitSpec::default()), [1, 0, 0]);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n_a in 1usize..40, n_b in 0usize..40, seed in 0u64..1000) {
            let mut rows = uniform(n_a, "a", 0);
            rows.extend(uniform(n_b, "b", 1000));
            let refs: Vec<(&str, &str)> =
                rows.iter().map(|(p, l)| (p.as_str(), l.as_str())).collect();
            let m = manifest_of(&refs);
            let spec = SplitSpec { rng_seed: seed, ..SplitSpec::default() };
            let sets = stratified_split(&m, &spec).unwrap();
            prop_assert_eq!(sets.len(), m.len());
            let mut seen = BTreeSet::new();
            for row in sets.train.iter().chain(&sets.val).chain(&sets.test) {
                prop_assert!(seen.insert(row.path.clone()), "duplicate {}", row.path);
            }
            prop_assert_eq!(seen.len(), m.len());
        }
    }
}
