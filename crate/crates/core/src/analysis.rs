//! Comparisons, summaries and plot data over experiment results.

use std::fmt;
use std::str::FromStr;

use crate::attract::AfKind;
use crate::error::{Error, Result};
use crate::experiment::RunResult;
use crate::stats::{ca_filter_by, median_diff, percentile, running_median, wilcoxon_ranksum, RunningPoint, Sample};

/// A subset of result rows: one function, optionally restricted to one
/// setting of the dependency-term switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub af: AfKind,
    pub cda: Option<bool>,
}

impl Condition {
    pub fn all(af: AfKind) -> Self {
        Condition { af, cda: None }
    }

    pub fn matches(&self, row: &RunResult) -> bool {
        row.af == self.af && self.cda.is_none_or(|c| row.use_cda == Some(c))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.cda {
            None => "",
            Some(true) => "+cda",
            Some(false) => "-cda",
        };
        write!(f, "{}{suffix}", self.af.id())
    }
}

impl FromStr for Condition {
    type Err = Error;

    /// `nb`, `nb+cda` or `nb-cda`; the function may also be given by label.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, cda) = if let Some(n) = s.strip_suffix("+cda") {
            (n, Some(true))
        } else if let Some(n) = s.strip_suffix("-cda") {
            (n, Some(false))
        } else {
            (s, None)
        };
        let af: AfKind = name.parse()?;
        if cda.is_some() && !af.is_textual() {
            return Err(Error::InvalidArgument(format!("{af} has no dependency-term variant")));
        }
        Ok(Condition { af, cda })
    }
}

/// `a:b`.
pub fn parse_comparison(s: &str) -> Result<(Condition, Condition)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("comparison '{s}' is not of the form a:b")))?;
    Ok((a.parse()?, b.parse()?))
}

/// Options shared by every selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectOptions {
    /// Keep only the better half of each 5% segment for the counting
    /// function, whose random parameters include poor settings.
    pub ca_filter: bool,
}

/// Rows of one condition, in input order unless filtered.
pub fn select(rows: &[RunResult], cond: Condition, opts: SelectOptions) -> Vec<&RunResult> {
    let chosen: Vec<&RunResult> = rows.iter().filter(|r| cond.matches(r)).collect();
    if opts.ca_filter && cond.af == AfKind::Count {
        ca_filter_by(&chosen, |r| r.initial_fraction, |r| r.f1)
    } else {
        chosen
    }
}

fn f1s(rows: &[&RunResult]) -> Vec<f64> {
    rows.iter().map(|r| r.f1).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub comparison: String,
    pub n1: usize,
    pub n2: usize,
    pub u: f64,
    pub z: f64,
    pub p: f64,
    pub r: f64,
    pub median_diff: f64,
}

pub const STATS_HEADER: &str = "comparison,n1,n2,U,Z,p,r,median_diff";

impl fmt::Display for ComparisonRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.comparison, self.n1, self.n2, self.u, self.z, self.p, self.r, self.median_diff
        )
    }
}

/// Rank-sum comparison of F1 between two conditions. A condition without
/// rows is an input error.
pub fn compare(rows: &[RunResult], a: Condition, b: Condition, opts: SelectOptions) -> Result<ComparisonRow> {
    let sample = |c: Condition| {
        let s = f1s(&select(rows, c, opts));
        if s.is_empty() {
            Err(Error::InvalidArgument(format!("condition '{c}' has no rows in the results")))
        } else {
            Ok(s)
        }
    };
    let (x, y) = (sample(a)?, sample(b)?);
    let t = wilcoxon_ranksum(&x, &y)?;
    Ok(ComparisonRow {
        comparison: format!("{a}:{b}"),
        n1: t.n1,
        n2: t.n2,
        u: t.u,
        z: t.z,
        p: t.p,
        r: t.r,
        median_diff: median_diff(&x, &y)?,
    })
}

/// Conditions present in `rows`: each function, plus both switch settings
/// of the text-based ones when they occur.
pub fn conditions_present(rows: &[RunResult]) -> Vec<Condition> {
    let mut out = Vec::new();
    for af in AfKind::ALL {
        if !rows.iter().any(|r| r.af == af) {
            continue;
        }
        out.push(Condition::all(af));
        if af.is_textual() {
            for cda in [true, false] {
                if rows.iter().any(|r| r.af == af && r.use_cda == Some(cda)) {
                    out.push(Condition { af, cda: Some(cda) });
                }
            }
        }
    }
    out
}

/// Switch-on against switch-off for each text function, then every pair
/// of functions.
pub fn default_comparisons(rows: &[RunResult]) -> Vec<(Condition, Condition)> {
    let present = conditions_present(rows);
    let mut out = Vec::new();
    for c in &present {
        if c.cda == Some(true) {
            let off = Condition { cda: Some(false), ..*c };
            if present.contains(&off) {
                out.push((*c, off));
            }
        }
    }
    let whole: Vec<Condition> = present.into_iter().filter(|c| c.cda.is_none()).collect();
    for (i, a) in whole.iter().enumerate() {
        for b in &whole[i + 1..] {
            out.push((*a, *b));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub system: String,
    pub condition: Condition,
    pub n: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

pub const SUMMARY_HEADER: &str = "system,condition,n,median_f1,p25_f1,p75_f1";

impl fmt::Display for SummaryRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.system, self.condition, self.n, self.median, self.p25, self.p75
        )
    }
}

/// F1 median and quartiles per system and condition.
pub fn summarize(rows: &[RunResult], opts: SelectOptions) -> Vec<SummaryRow> {
    let mut systems: Vec<&str> = rows.iter().map(|r| r.system.as_str()).collect();
    systems.sort_unstable();
    systems.dedup();
    let mut out = Vec::new();
    for system in systems {
        let own: Vec<RunResult> = rows.iter().filter(|r| r.system == system).cloned().collect();
        for cond in conditions_present(&own) {
            let f1 = f1s(&select(&own, cond, opts));
            let q = |p| percentile(&f1, p).expect("condition is present");
            out.push(SummaryRow {
                system: system.to_owned(),
                condition: cond,
                n: f1.len(),
                median: q(0.5),
                p25: q(0.25),
                p75: q(0.75),
            });
        }
    }
    out
}

pub const PLOT_HEADER: &str = "fraction,median,p25,p75,condition";

/// Grid step of running-median plots.
pub const PLOT_GRID: usize = 100;

/// Running median of F1 over the initial-set fraction for one condition.
pub fn running_series(rows: &[RunResult], cond: Condition, window: f64, opts: SelectOptions) -> Result<Vec<RunningPoint>> {
    let samples: Vec<Sample> = select(rows, cond, opts)
        .iter()
        .map(|r| Sample {
            fraction: r.initial_fraction,
            f1: r.f1,
        })
        .collect();
    running_median(&samples, window, PLOT_GRID)
}

/// F1 values of one condition.
pub fn f1_values(rows: &[RunResult], cond: Condition, opts: SelectOptions) -> Vec<f64> {
    f1s(&select(rows, cond, opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(af: AfKind, cda: Option<bool>, fraction: f64, f1: f64) -> RunResult {
        RunResult {
            system: "s".into(),
            af,
            run_id: 0,
            seed: 0,
            use_cda: cda,
            omega: None,
            phi: None,
            threshold: None,
            initial_size: 1,
            initial_fraction: fraction,
            orphans: 1,
            auto_mapped: 1,
            correct: 1,
            unmapped: 0,
            iterations: 1,
            precision: f1,
            recall: f1,
            f1,
        }
    }

    #[test]
    fn conditions_parse_and_print() {
        for s in ["nb", "nb+cda", "ir-cda", "count"] {
            assert_eq!(s.parse::<Condition>().unwrap().to_string(), s);
        }
        assert_eq!("NBAttract+cda".parse::<Condition>().unwrap().to_string(), "nb+cda");
        assert!("count+cda".parse::<Condition>().is_err());
        assert!("xx".parse::<Condition>().is_err());
        assert!(parse_comparison("nb").is_err());
    }

    #[test]
    fn self_comparison_is_neutral() {
        let rows: Vec<RunResult> = (0..10)
            .map(|i| row(AfKind::Nb, Some(i % 2 == 0), 0.5, f64::from(i) / 10.0))
            .collect();
        let nb = Condition::all(AfKind::Nb);
        let c = compare(&rows, nb, nb, SelectOptions { ca_filter: false }).unwrap();
        assert_eq!(c.z, 0.0);
        assert_eq!(c.median_diff, 0.0);
        assert_eq!(c.comparison, "nb:nb");
        let missing = compare(&rows, nb, Condition::all(AfKind::Ir), SelectOptions { ca_filter: false });
        assert!(missing.unwrap_err().is_validation());
    }

    #[test]
    fn filter_applies_to_count_only() {
        let mut rows: Vec<RunResult> = (0..4).map(|i| row(AfKind::Count, None, 0.3, f64::from(i))).collect();
        rows.extend((0..4).map(|i| row(AfKind::Ir, Some(true), 0.3, f64::from(i))));
        let on = SelectOptions { ca_filter: true };
        assert_eq!(f1_values(&rows, Condition::all(AfKind::Count), on), vec![3.0, 2.0]);
        assert_eq!(f1_values(&rows, Condition::all(AfKind::Ir), on).len(), 4);
        let defaults = default_comparisons(&rows);
        assert_eq!(defaults, vec![(Condition::all(AfKind::Count), Condition::all(AfKind::Ir))]);
        let summary = summarize(&rows, on);
        assert_eq!(summary.len(), 3);
        assert_eq!(summary[0].to_string(), "s,count,2,2.5,2.25,2.75");
    }
}
