//! Aggregate metrics over run records.
//!
//! A sample's score is its smallest distance over all repetitions and
//! hyperparameters; failed runs count as infinitely far. Medians take the
//! lower middle element for even counts.

use std::collections::BTreeMap;

use boundwalk::TracePoint;
use serde::Serialize;

use crate::records::RunRecord;
use crate::{HarnessError, Result};

/// Best distance per sample id, in ascending sample order.
pub fn per_sample_best<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> BTreeMap<usize, f64> {
    let mut best = BTreeMap::new();
    for r in records {
        let d = if r.success { r.distance } else { f64::INFINITY };
        let e = best.entry(r.sample_id).or_insert(f64::INFINITY);
        if d < *e {
            *e = d;
        }
    }
    best
}

fn lower_median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

pub fn median_perturbation(records: &[RunRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    Ok(lower_median(per_sample_best(records).into_values().collect()))
}

/// Fraction of samples still classified correctly within an `epsilon` ball:
/// those whose best distance exceeds `epsilon`.
pub fn success_rate_at_eps(records: &[RunRecord], epsilon: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let best = per_sample_best(records);
    let survived = best.values().filter(|&&d| d > epsilon).count();
    Ok(survived as f64 / best.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveMetric {
    Median,
    AccuracyAt(f64),
}

/// Best distance reached within `budget` queries.
fn trace_at(trace: &[TracePoint], budget: usize) -> f64 {
    trace.iter().take_while(|t| t.queries <= budget).map(|t| t.best_distance).fold(f64::INFINITY, f64::min)
}

/// Metric as a function of query budget, choosing the best record per sample
/// and budget.
pub fn query_distortion_curve(records: &[RunRecord], budgets: &[usize], metric: CurveMetric) -> Vec<(usize, f64)> {
    let mut samples: BTreeMap<usize, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        samples.entry(r.sample_id).or_default().push(r);
    }
    budgets
        .iter()
        .map(|&budget| {
            let best: Vec<f64> = samples
                .values()
                .map(|rs| rs.iter().map(|r| trace_at(&r.trace, budget)).fold(f64::INFINITY, f64::min))
                .collect();
            let value = if best.is_empty() {
                f64::INFINITY
            } else {
                match metric {
                    CurveMetric::Median => lower_median(best),
                    CurveMetric::AccuracyAt(eps) => best.iter().filter(|&&d| d > eps).count() as f64 / best.len() as f64,
                }
            };
            (budget, value)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub hyperparameter: f64,
    pub median: f64,
    /// `median / best_median − 1`.
    pub degradation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub best_median: f64,
    pub rows: Vec<SensitivityRow>,
    pub single_rep_median: f64,
    pub single_rep_degradation: f64,
}

fn degradation(value: f64, best: f64) -> f64 {
    if value == best {
        0.0
    } else if best == 0.0 {
        f64::INFINITY
    } else {
        value / best - 1.0
    }
}

/// Degradation of each single hyperparameter, and of using only the first
/// repetition, against the best over everything.
pub fn sensitivity_report(records: &[RunRecord]) -> Result<SensitivityReport> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let mut grid: Vec<f64> = records.iter().map(|r| r.hyperparameter).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let span = if grid[0] > 0.0 { grid[grid.len() - 1] / grid[0] } else { f64::INFINITY };
    if grid.len() < 3 || !(span >= 100.0) {
        return Err(HarnessError::InsufficientGrid { values: grid.len(), span });
    }

    let best_median = median_perturbation(records)?;
    let rows = grid
        .iter()
        .map(|&h| {
            let column: Vec<RunRecord> = records.iter().filter(|r| r.hyperparameter == h).cloned().collect();
            let median = median_perturbation(&column)?;
            Ok(SensitivityRow { hyperparameter: h, median, degradation: degradation(median, best_median) })
        })
        .collect::<Result<Vec<_>>>()?;
    let first_rep = records.iter().map(|r| r.rep).min().unwrap_or(0);
    let single: Vec<RunRecord> = records.iter().filter(|r| r.rep == first_rep).cloned().collect();
    let single_rep_median = median_perturbation(&single)?;
    Ok(SensitivityReport {
        best_median,
        rows,
        single_rep_median,
        single_rep_degradation: degradation(single_rep_median, best_median),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::AttackKind;
    use boundwalk::NormKind;

    fn rec(sample_id: usize, rep: usize, h: f64, distance: f64) -> RunRecord {
        RunRecord {
            sample_id,
            rep,
            attack: AttackKind::OursL2,
            norm: NormKind::L2,
            hyperparameter: h,
            success: distance.is_finite(),
            distance,
            queries: 10,
            start_queries: 0,
            trace: if distance.is_finite() { vec![TracePoint { queries: 10, best_distance: distance }] } else { vec![] },
        }
    }

    #[test]
    fn median_examples() {
        let r = vec![rec(0, 0, 1.0, 3.0), rec(1, 0, 1.0, 1.0), rec(2, 0, 1.0, 2.0)];
        assert_eq!(median_perturbation(&r).unwrap(), 2.0);
        let r = vec![rec(0, 0, 1.0, f64::INFINITY), rec(1, 0, 1.0, 1.0), rec(2, 0, 1.0, 2.0)];
        assert_eq!(median_perturbation(&r).unwrap(), 2.0);
        let r = vec![rec(0, 0, 1.0, f64::INFINITY), rec(1, 0, 1.0, f64::INFINITY)];
        assert_eq!(median_perturbation(&r).unwrap(), f64::INFINITY);
        // lower median for even counts
        let r = vec![rec(0, 0, 1.0, 4.0), rec(1, 0, 1.0, 1.0), rec(2, 0, 1.0, 3.0), rec(3, 0, 1.0, 2.0)];
        assert_eq!(median_perturbation(&r).unwrap(), 2.0);
        assert!(matches!(median_perturbation(&[]), Err(HarnessError::EmptyRecords)));
    }

    #[test]
    fn minimum_over_reps_and_hyperparameters() {
        let r = vec![rec(0, 0, 1.0, 3.0), rec(0, 1, 1.0, 2.0), rec(0, 0, 2.0, 2.5)];
        assert_eq!(median_perturbation(&r).unwrap(), 2.0);
    }

    #[test]
    fn success_rate_examples() {
        let r = vec![rec(0, 0, 1.0, 0.1), rec(1, 0, 1.0, 0.3)];
        assert_eq!(success_rate_at_eps(&r, 0.2).unwrap(), 0.5);
        assert_eq!(success_rate_at_eps(&r, 0.3).unwrap(), 0.0);
        assert_eq!(success_rate_at_eps(&r, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn curve_reads_step_function() {
        let mut r = rec(0, 0, 1.0, 0.5);
        r.trace = vec![TracePoint { queries: 5, best_distance: 1.0 }, TracePoint { queries: 20, best_distance: 0.5 }];
        let curve = query_distortion_curve(&[r], &[3, 10, 25], CurveMetric::Median);
        assert_eq!(curve, vec![(3, f64::INFINITY), (10, 1.0), (25, 0.5)]);
    }

    #[test]
    fn sensitivity_examples() {
        let mut r = Vec::new();
        for s in 0..3 {
            r.push(rec(s, 0, 1e-3, 2.0));
            r.push(rec(s, 0, 1e-2, 1.0));
            r.push(rec(s, 0, 1e-1, 3.0));
        }
        let rep = sensitivity_report(&r).unwrap();
        assert_eq!(rep.best_median, 1.0);
        let deg: Vec<f64> = rep.rows.iter().map(|row| row.degradation).collect();
        assert_eq!(deg, vec![1.0, 0.0, 2.0]);
        assert_eq!(rep.single_rep_degradation, 0.0);

        let same: Vec<RunRecord> = [1e-3, 1e-2, 1e-1].iter().map(|&h| rec(0, 0, h, 1.5)).collect();
        assert!(sensitivity_report(&same).unwrap().rows.iter().all(|row| row.degradation == 0.0));

        let narrow: Vec<RunRecord> = [1e-2, 2e-2, 5e-2].iter().map(|&h| rec(0, 0, h, 1.5)).collect();
        assert!(matches!(sensitivity_report(&narrow), Err(HarnessError::InsufficientGrid { values: 3, .. })));
    }

    #[test]
    fn failed_everywhere_is_zero_degradation() {
        let r: Vec<RunRecord> = [1e-3, 1e-2, 1e-1].iter().map(|&h| rec(0, 0, h, f64::INFINITY)).collect();
        assert!(sensitivity_report(&r).unwrap().rows.iter().all(|row| row.degradation == 0.0));
    }
}
