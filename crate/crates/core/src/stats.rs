//! Paired significance testing: one-sided Wilcoxon signed-rank, Cliff's
//! delta with magnitude classes, and win/tie/loss counts.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest effective n for which the Wilcoxon null distribution is computed
/// exactly; larger samples use the normal approximation.
pub const EXACT_MAX_N: usize = 25;

pub const NEGLIGIBLE_BELOW: f64 = 0.147;
pub const SMALL_BELOW: f64 = 0.33;
pub const MEDIUM_BELOW: f64 = 0.474;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("paired sample is empty")]
    Empty,
    #[error("paired sample lengths differ: {labels} labels, {a} a-scores, {b} b-scores")]
    LengthMismatch { labels: usize, a: usize, b: usize },
    #[error("score {value} for {label:?} is outside [0, 1]")]
    OutOfRange { label: String, value: f64 },
    #[error("no nonzero differences: the signed-rank test is undefined")]
    NoNonzeroDifferences,
}

/// Per-flowchart scores under two conditions, aligned by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    labels: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(labels: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self, StatsError> {
        if labels.len() != a.len() || a.len() != b.len() {
            return Err(StatsError::LengthMismatch {
                labels: labels.len(),
                a: a.len(),
                b: b.len(),
            });
        }
        if a.is_empty() {
            return Err(StatsError::Empty);
        }
        for (label, &v) in labels.iter().zip(a.iter()).chain(labels.iter().zip(b.iter())) {
            if !(0.0..=1.0).contains(&v) {
                return Err(StatsError::OutOfRange {
                    label: label.clone(),
                    value: v,
                });
            }
        }
        Ok(Self { labels, a, b })
    }

    /// Labels `0..N` for ad-hoc samples.
    pub fn from_scores(a: Vec<f64>, b: Vec<f64>) -> Result<Self, StatsError> {
        let labels = (0..a.len()).map(|i| i.to_string()).collect();
        Self::new(labels, a, b)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }

    pub fn swapped(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// P(W+ >= observed) under the null.
    pub p_value: f64,
    pub effective_n: usize,
    pub w_plus: f64,
    pub method: WilcoxonMethod,
}

/// Average (mid) ranks, 1-based, of `values`.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end share ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Upper tail P(W+ >= w_plus) by dynamic programming over achievable rank
/// sums. Ranks are doubled so mid-ranks become integers.
pub fn exact_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let threshold = (w_plus * 2.0).round() as usize;
    let hits: u64 = counts[threshold.min(total + 1)..].iter().sum();
    hits as f64 / 2f64.powi(doubled.len() as i32)
}

/// Normal approximation with continuity correction and tie-corrected
/// variance.
pub fn normal_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return if w_plus > mean { 0.0 } else { 1.0 };
    }
    let z = (w_plus - mean - 0.5) / var.sqrt();
    let std_normal = Normal::standard();
    std_normal.cdf(-z)
}

/// Signed-rank test on raw differences, H1: differences tend to be positive.
/// Zero differences are dropped before ranking.
pub fn signed_rank_upper(differences: &[f64]) -> Result<WilcoxonResult, StatsError> {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(StatsError::NoNonzeroDifferences);
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = nonzero.len();
    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_upper_tail(&ranks, w_plus), WilcoxonMethod::Exact)
    } else {
        (normal_upper_tail(&ranks, w_plus), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        p_value: p_value.clamp(f64::MIN_POSITIVE, 1.0),
        effective_n: n,
        w_plus,
        method,
    })
}

/// One-sided Wilcoxon signed-rank test of `a > b`.
pub fn wilcoxon_one_sided(s: &PairedSample) -> Result<WilcoxonResult, StatsError> {
    signed_rank_upper(&s.differences())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Dominance over all N² cross pairs.
    #[default]
    AllPairs,
    /// Sign of each within-pair difference, averaged over N.
    WithinPair,
}

pub fn cliffs_delta(s: &PairedSample) -> f64 {
    cliffs_delta_with(s, DeltaMode::AllPairs)
}

pub fn cliffs_delta_with(s: &PairedSample, mode: DeltaMode) -> f64 {
    let n = s.len() as f64;
    match mode {
        DeltaMode::AllPairs => {
            let mut more = 0i64;
            let mut less = 0i64;
            for x in &s.a {
                for y in &s.b {
                    if x > y {
                        more += 1;
                    } else if x < y {
                        less += 1;
                    }
                }
            }
            (more - less) as f64 / (n * n)
        }
        DeltaMode::WithinPair => {
            let wtl = win_tie_loss(s);
            (wtl.wins as f64 - wtl.losses as f64) / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn letter(self) -> char {
        match self {
            Magnitude::Negligible => 'N',
            Magnitude::Small => 'S',
            Magnitude::Medium => 'M',
            Magnitude::Large => 'L',
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        };
        f.write_str(s)
    }
}

pub fn classify_magnitude(delta: f64) -> Magnitude {
    let d = delta.abs();
    if d < NEGLIGIBLE_BELOW {
        Magnitude::Negligible
    } else if d < SMALL_BELOW {
        Magnitude::Small
    } else if d < MEDIUM_BELOW {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl fmt::Display for WinTieLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.wins, self.ties, self.losses)
    }
}

pub fn win_tie_loss(s: &PairedSample) -> WinTieLoss {
    let mut out = WinTieLoss::default();
    for (x, y) in s.a.iter().zip(&s.b) {
        if x > y {
            out.wins += 1;
        } else if x == y {
            out.ties += 1;
        } else {
            out.losses += 1;
        }
    }
    out
}

/// Everything reported for one paired comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    /// `None` when every difference is zero.
    pub p_value: Option<f64>,
    pub effective_n: usize,
    pub w_plus: Option<f64>,
    pub delta: f64,
    pub delta_mode: DeltaMode,
    pub magnitude: Magnitude,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

pub fn analyze(s: &PairedSample, mode: DeltaMode) -> StatsReport {
    let (p_value, effective_n, w_plus) = match wilcoxon_one_sided(s) {
        Ok(w) => (Some(w.p_value), w.effective_n, Some(w.w_plus)),
        Err(_) => (None, 0, None),
    };
    let delta = cliffs_delta_with(s, mode);
    let wtl = win_tie_loss(s);
    StatsReport {
        n: s.len(),
        p_value,
        effective_n,
        w_plus,
        delta,
        delta_mode: mode,
        magnitude: classify_magnitude(delta),
        wins: wtl.wins,
        ties: wtl.ties,
        losses: wtl.losses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(a: &[f64], b: &[f64]) -> PairedSample {
        PairedSample::from_scores(a.to_vec(), b.to_vec()).unwrap()
    }

    /// Enumerates all 2^n sign assignments directly.
    fn brute_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w >= w_plus - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn five_positive_differences() {
        let s = sample(&[0.9, 0.8, 0.7, 0.6, 0.5], &[0.1, 0.2, 0.3, 0.4, 0.45]);
        let w = wilcoxon_one_sided(&s).unwrap();
        assert_eq!(w.effective_n, 5);
        assert!((w.p_value - 0.03125).abs() < 1e-12);
        assert!((brute_upper_tail(&[1., 2., 3., 4., 5.], 15.0) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn equal_pairs_are_an_error() {
        let s = sample(&[0.3, 0.5], &[0.3, 0.5]);
        assert_eq!(wilcoxon_one_sided(&s), Err(StatsError::NoNonzeroDifferences));
        let r = analyze(&s, DeltaMode::AllPairs);
        assert_eq!((r.p_value, r.effective_n), (None, 0));
    }

    #[test]
    fn single_positive_difference() {
        let w = wilcoxon_one_sided(&sample(&[0.6, 0.2], &[0.5, 0.2])).unwrap();
        assert_eq!(w.effective_n, 1);
        assert!((w.p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mid_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(average_ranks(&[]), Vec::<f64>::new());
    }

    #[test]
    fn tied_ranks_exact_matches_brute_force() {
        let ranks = [1.5, 1.5, 3.0, 5.0, 5.0, 5.0];
        for w in [0.0, 3.0, 6.5, 11.0, 21.0] {
            assert!((exact_upper_tail(&ranks, w) - brute_upper_tail(&ranks, w)).abs() < 1e-15);
        }
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| 0.5 + i as f64 * 0.01).collect();
        let b: Vec<f64> = (0..40).map(|i| 0.5 - (i % 7) as f64 * 0.01 - 0.001).collect();
        let w = wilcoxon_one_sided(&sample(&a, &b)).unwrap();
        assert_eq!(w.method, WilcoxonMethod::Normal);
        assert!(w.p_value < 1e-6 && w.p_value > 0.0);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(cliffs_delta(&sample(&[0.2, 0.4, 0.4], &[0.2, 0.4, 0.4])), 0.0);
        assert_eq!(cliffs_delta(&sample(&[0.8, 0.9], &[0.1, 0.7])), 1.0);
        assert_eq!(cliffs_delta(&sample(&[0.1, 0.2], &[0.1, 0.3])), -0.25);
        assert_eq!(
            cliffs_delta_with(&sample(&[0.5, 0.1, 0.3], &[0.4, 0.1, 0.9]), DeltaMode::WithinPair),
            0.0
        );
    }

    #[test]
    fn magnitude_cutoffs() {
        assert_eq!(classify_magnitude(0.10), Magnitude::Negligible);
        assert_eq!(classify_magnitude(0.60), Magnitude::Large);
        assert_eq!(classify_magnitude(-0.33), Magnitude::Medium);
        assert_eq!(classify_magnitude(0.146), Magnitude::Negligible);
        assert_eq!(classify_magnitude(0.147), Magnitude::Small);
        assert_eq!(classify_magnitude(0.474), Magnitude::Large);
        assert_eq!(classify_magnitude(-0.4739), Magnitude::Medium);
    }

    #[test]
    fn wtl_examples() {
        let w = win_tie_loss(&sample(&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]));
        assert_eq!((w.wins, w.ties, w.losses), (1, 1, 1));
        let w = win_tie_loss(&sample(&[0.3; 4], &[0.3; 4]));
        assert_eq!((w.wins, w.ties, w.losses), (0, 4, 0));
    }

    #[test]
    fn sample_validation() {
        assert_eq!(PairedSample::from_scores(vec![], vec![]), Err(StatsError::Empty));
        assert!(matches!(
            PairedSample::from_scores(vec![0.1], vec![0.1, 0.2]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            PairedSample::from_scores(vec![1.5], vec![0.1]),
            Err(StatsError::OutOfRange { .. })
        ));
    }

    fn scores(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        n.prop_flat_map(|n| {
            (
                prop::collection::vec(0u32..=20, n),
                prop::collection::vec(0u32..=20, n),
            )
        })
        .prop_map(|(a, b)| {
            (
                a.into_iter().map(|v| v as f64 / 20.0).collect(),
                b.into_iter().map(|v| v as f64 / 20.0).collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn delta_is_antisymmetric((a, b) in scores(1..20)) {
            let s = sample(&a, &b);
            prop_assert_eq!(cliffs_delta(&s), -cliffs_delta(&s.swapped()));
            let d = cliffs_delta(&s);
            prop_assert!((-1.0..=1.0).contains(&d));
        }

        #[test]
        fn wtl_sums_to_n((a, b) in scores(1..30)) {
            let w = win_tie_loss(&sample(&a, &b));
            prop_assert_eq!(w.wins + w.ties + w.losses, a.len());
        }

        #[test]
        fn monotone_transform_keeps_delta_wtl_and_sign_counts((a, b) in scores(1..20)) {
            let s = sample(&a, &b);
            let f = |v: &f64| v.powi(3);
            let t = sample(&a.iter().map(f).collect::<Vec<_>>(), &b.iter().map(f).collect::<Vec<_>>());
            prop_assert_eq!(cliffs_delta(&s), cliffs_delta(&t));
            prop_assert_eq!(win_tie_loss(&s), win_tie_loss(&t));
            prop_assert_eq!(
                wilcoxon_one_sided(&s).map(|w| w.effective_n).ok(),
                wilcoxon_one_sided(&t).map(|w| w.effective_n).ok()
            );
        }

        #[test]
        fn affine_transform_keeps_w_plus(
            a in prop::collection::vec(0u32..=16, 1..20),
            b in prop::collection::vec(0u32..=16, 1..20),
        ) {
            // Dyadic scores keep every difference exact.
            let n = a.len().min(b.len());
            let a: Vec<f64> = a[..n].iter().map(|&k| k as f64 / 16.0).collect();
            let b: Vec<f64> = b[..n].iter().map(|&k| k as f64 / 16.0).collect();
            let s = sample(&a, &b);
            let f = |v: &f64| v / 2.0 + 0.25;
            let t = sample(&a.iter().map(f).collect::<Vec<_>>(), &b.iter().map(f).collect::<Vec<_>>());
            let (ws, wt) = (wilcoxon_one_sided(&s).ok(), wilcoxon_one_sided(&t).ok());
            prop_assert_eq!(ws.map(|w| w.w_plus), wt.map(|w| w.w_plus));
        }

        #[test]
        fn shift_never_raises_p((a, b) in scores(1..20), shift in 1u32..10) {
            let half = |v: &f64| (v * 10.0).round() / 32.0;
            let a: Vec<f64> = a.iter().map(half).collect();
            let b: Vec<f64> = b.iter().map(half).collect();
            let shifted: Vec<f64> = a.iter().map(|v| v + shift as f64 / 32.0).collect();
            let before = wilcoxon_one_sided(&sample(&a, &b));
            let after = wilcoxon_one_sided(&sample(&shifted, &b));
            if let (Ok(x), Ok(y)) = (before, after) {
                prop_assert!(y.p_value <= x.p_value + 1e-12, "{} -> {}", x.p_value, y.p_value);
            }
        }

        #[test]
        fn p_value_in_unit_interval((a, b) in scores(1..40)) {
            if let Ok(w) = wilcoxon_one_sided(&sample(&a, &b)) {
                prop_assert!(w.p_value > 0.0 && w.p_value <= 1.0);
            }
        }

        #[test]
        fn exact_and_normal_agree_without_ties(n in 10usize..=25, signs in any::<u32>()) {
            let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
            let w: f64 = (0..n).filter(|i| signs >> i & 1 == 1).map(|i| ranks[i]).sum();
            let exact = exact_upper_tail(&ranks, w);
            let approx = normal_upper_tail(&ranks, w);
            prop_assert!((exact - approx).abs() <= 0.02, "n={} w={} exact={} approx={}", n, w, exact, approx);
        }
    }
}
