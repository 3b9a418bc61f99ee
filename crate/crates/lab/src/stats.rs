//! Paired t-tests and significance matrices over time slices.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Two,
    /// Alternative: mean of x exceeds mean of y.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("a paired t-test needs at least two pairs")]
    TooFewPairs,
}

/// Student's paired t-test on `x - y`.
///
/// Zero variance: a nonzero mean difference is significant with p = 0
/// (in the tested direction for one-sided tests) and a zero mean is not.
pub fn paired_ttest(x: &[f64], y: &[f64], side: Side) -> Result<TTest, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs);
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        let (t, p) = match (mean.partial_cmp(&0.0), side) {
            (Some(std::cmp::Ordering::Equal), Side::Two) | (None, _) => (0.0, 1.0),
            (Some(std::cmp::Ordering::Equal), Side::Right) => (0.0, 0.5),
            (Some(std::cmp::Ordering::Greater), _) => (f64::INFINITY, 0.0),
            (Some(std::cmp::Ordering::Less), Side::Two) => (f64::NEG_INFINITY, 0.0),
            (Some(std::cmp::Ordering::Less), Side::Right) => (f64::NEG_INFINITY, 1.0),
        };
        return Ok(TTest { t, p, significant: p < SIGNIFICANCE_LEVEL });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom >= 1");
    let p = match side {
        Side::Two => 2.0 * dist.cdf(-t.abs()),
        Side::Right => dist.cdf(-t),
    };
    Ok(TTest { t, p, significant: p < SIGNIFICANCE_LEVEL })
}

/// Observations of one criterion, keyed by slice index and then by the
/// pairing key (for example game and seed).
pub type SliceSamples<K> = BTreeMap<usize, BTreeMap<K, f64>>;

/// Percentage of slices in which `candidate` is significantly different
/// from `baseline` (per `side`), pairing observations by key. Slices with
/// fewer than two common keys count as not significant.
pub fn percent_significant<K: Ord>(candidate: &SliceSamples<K>, baseline: &SliceSamples<K>, side: Side) -> f64 {
    let slices: Vec<&usize> = baseline.keys().collect();
    if slices.is_empty() {
        return 0.0;
    }
    let hits = slices
        .iter()
        .filter(|s| {
            let (Some(a), Some(b)) = (candidate.get(s), baseline.get(s)) else {
                return false;
            };
            let (x, y): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(k, v)| b.get(k).map(|w| (*v, *w))).unzip();
            paired_ttest(&x, &y, side).map(|r| r.significant).unwrap_or(false)
        })
        .count();
    100.0 * hits as f64 / slices.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    /// Right-sided: candidate above baseline.
    Higher,
    /// Right-sided with roles swapped: candidate below baseline.
    Lower,
    /// Two-sided.
    Different,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Higher, Direction::Lower, Direction::Different];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Higher => "higher",
            Direction::Lower => "lower",
            Direction::Different => "different",
        }
    }
}

pub fn percent_in_direction<K: Ord>(candidate: &SliceSamples<K>, baseline: &SliceSamples<K>, dir: Direction) -> f64 {
    match dir {
        Direction::Higher => percent_significant(candidate, baseline, Side::Right),
        Direction::Lower => percent_significant(baseline, candidate, Side::Right),
        Direction::Different => percent_significant(candidate, baseline, Side::Two),
    }
}
