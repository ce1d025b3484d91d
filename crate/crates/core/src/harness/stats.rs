//! Small descriptive-statistics kit shared by the study procedures.

/// Linearly interpolated quantile (the "type 7" rule: `h = (n-1)q`).
/// `sorted` must be ascending and non-empty; `q` must lie in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile order {q} outside [0,1]");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary plus the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Summarizes a sample; `None` when it is empty.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    Some(Summary {
        n: sorted.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Mean and sample standard deviation (0 for samples of one).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "mean of an empty sample");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Ranks with ties sharing their average rank (1-based).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-finite sample"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1..=j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average-rank tie handling. `None` when
/// either side is constant or the samples are shorter than two.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "paired samples must align");
    if xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Area under the ROC curve by the rank-sum identity: the probability that
/// a positive outscores a negative, ties counting half. `None` when either
/// class is absent.
pub fn auc(positive: &[f64], negative: &[f64]) -> Option<f64> {
    if positive.is_empty() || negative.is_empty() {
        return None;
    }
    let mut favorable = 0.0f64;
    for p in positive {
        for q in negative {
            favorable += match p.partial_cmp(q).expect("non-finite score") {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    Some(favorable / (positive.len() * negative.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantiles_interpolate_between_order_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.25), 1.75);
        assert_eq!(quantile(&xs, 0.75), 3.25);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn summary_matches_hand_computation() {
        let s = summarize(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(s, Summary { n: 5, min: 1.0, q1: 2.0, median: 3.0, q3: 4.0, max: 5.0 });
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn mean_sd_matches_hand_computation() {
        let (m, s) = mean_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-12);
        // Sample variance of the classic eight-point set is 32/7.
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sd(&[3.5]), (3.5, 0.0));
    }

    #[test]
    fn spearman_recovers_monotone_relations() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = [2.0, 8.0, 9.0, 120.0, 1000.0];
        let down = [10.0, 8.0, 3.0, 2.0, -4.0];
        assert!((spearman(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&xs, &[1.0; 5]).is_none());
        assert!(spearman(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn spearman_averages_tied_ranks() {
        // Hand-worked: xs ranks [1, 2.5, 2.5, 4], ys ranks [1, 2, 3, 4]
        // give Pearson 0.9486832980505138 on the ranks.
        let xs = [1.0, 5.0, 5.0, 8.0];
        let ys = [0.0, 1.0, 2.0, 3.0];
        assert!((spearman(&xs, &ys).unwrap() - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn auc_counts_concordant_pairs() {
        assert_eq!(auc(&[0.9, 0.8], &[0.1, 0.2]), Some(1.0));
        assert_eq!(auc(&[0.1, 0.2], &[0.9, 0.8]), Some(0.0));
        assert_eq!(auc(&[0.5], &[0.5]), Some(0.5));
        // 2x2 pairs: (0.9 > both) = 2, (0.3 > 0.1) = 1, (0.3 < 0.7) = 0.
        assert_eq!(auc(&[0.9, 0.3], &[0.1, 0.7]), Some(0.75));
        assert_eq!(auc(&[], &[0.5]), None);
    }

    proptest! {
        #[test]
        fn quantiles_are_monotone_and_bounded(
            mut xs in proptest::collection::vec(-100.0f64..100.0, 1..40),
            q1 in 0.0f64..=1.0,
            q2 in 0.0f64..=1.0,
        ) {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let (a, b) = (quantile(&xs, lo), quantile(&xs, hi));
            prop_assert!(a <= b + 1e-12);
            prop_assert!(xs[0] <= a + 1e-12 && b <= xs[xs.len() - 1] + 1e-12);
        }

        #[test]
        fn auc_is_symmetric_under_class_swap(
            pos in proptest::collection::vec(0.0f64..1.0, 1..10),
            neg in proptest::collection::vec(0.0f64..1.0, 1..10),
        ) {
            let a = auc(&pos, &neg).unwrap();
            let b = auc(&neg, &pos).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
