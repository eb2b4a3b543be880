//! Rank-sum testing, effect sizes, segment filtering and running medians.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Outcome of a two-sample rank-sum test. `u` and the sign of `z` refer to
/// the first sample: positive when it tends to be larger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSum {
    pub n1: usize,
    pub n2: usize,
    pub u: f64,
    pub z: f64,
    pub p: f64,
    pub r: f64,
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Mann-Whitney U of `a`, normal approximation with tie-corrected variance
/// and continuity correction, two-sided p, and effect size `|Z| / sqrt(N)`.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("rank-sum test needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("rank-sum test input contains NaN".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (fn1, fn2) = (n1 as f64, n2 as f64);
    let n = fn1 + fn2;
    let u = ranks[..n1].iter().sum::<f64>() - fn1 * (fn1 + 1.0) / 2.0;

    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        ties += t * t * t - t;
    }
    let variance = if n > 1.0 {
        fn1 * fn2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))
    } else {
        0.0
    };
    let (z, p) = if variance <= 0.0 {
        (0.0, 1.0)
    } else {
        let d = u - fn1 * fn2 / 2.0;
        let z = d.signum() * (d.abs() - 0.5).max(0.0) / variance.sqrt();
        (z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
    };
    Ok(RankSum {
        n1,
        n2,
        u,
        z,
        p,
        r: z.abs() / n.sqrt(),
    })
}

/// Linear interpolation between order statistics (`q` in `[0, 1]`).
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(percentile_sorted(&v, q))
}

fn percentile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 0.5)
}

/// `median(a) - median(b)`.
pub fn median_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    match (median(a), median(b)) {
        (Some(x), Some(y)) => Ok(x - y),
        _ => Err(Error::InvalidArgument("median of an empty sample".into())),
    }
}

/// One observation: initial-set fraction and F1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub fraction: f64,
    pub f1: f64,
}

pub const SEGMENTS: usize = 20;

/// Index of the 5% segment holding `fraction`.
pub fn segment(fraction: f64) -> usize {
    ((fraction * SEGMENTS as f64).floor().max(0.0) as usize).min(SEGMENTS - 1)
}

/// Keeps the better half (rounded up) of each 5% segment by F1. Output is
/// grouped by segment, best first; equal scores keep their input order.
pub fn ca_filter_by<T: Clone>(items: &[T], fraction: impl Fn(&T) -> f64, f1: impl Fn(&T) -> f64) -> Vec<T> {
    let mut buckets: Vec<Vec<&T>> = vec![Vec::new(); SEGMENTS];
    for item in items {
        buckets[segment(fraction(item))].push(item);
    }
    let mut out = Vec::new();
    for mut bucket in buckets {
        bucket.sort_by(|a, b| f1(b).total_cmp(&f1(a)));
        let keep = bucket.len().div_ceil(2);
        out.extend(bucket.into_iter().take(keep).cloned());
    }
    out
}

pub fn ca_filter(series: &[Sample]) -> Vec<Sample> {
    ca_filter_by(series, |s| s.fraction, |s| s.f1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunningPoint {
    pub fraction: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Median and quartiles of F1 over samples within `window / 2` of each of
/// `grid + 1` evenly spaced points on `[0, 1]`. Points without samples are
/// skipped.
pub fn running_median(series: &[Sample], window: f64, grid: usize) -> Result<Vec<RunningPoint>> {
    if !(window > 0.0 && window < 1.0) {
        return Err(Error::InvalidArgument(format!("window must lie in (0, 1), got {window}")));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("grid needs at least one step".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.fraction.total_cmp(&b.fraction));
    let half = window / 2.0 + 1e-12;
    let mut out = Vec::new();
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        let lo = sorted.partition_point(|s| s.fraction < x - half);
        let hi = sorted.partition_point(|s| s.fraction <= x + half);
        if lo >= hi {
            continue;
        }
        let mut f1: Vec<f64> = sorted[lo..hi].iter().map(|s| s.f1).collect();
        f1.sort_by(f64::total_cmp);
        out.push(RunningPoint {
            fraction: x,
            median: percentile_sorted(&f1, 0.5),
            p25: percentile_sorted(&f1, 0.25),
            p75: percentile_sorted(&f1, 0.75),
        });
    }
    Ok(out)
}
