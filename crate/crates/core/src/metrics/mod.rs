//! Evaluation stack: rank statistics with significance, help-rate /
//! success-rate curves, the normalized SR-HR-AUC, and multi-run
//! aggregation.
//!
//! The help-rate model: at help rate `h = k/n` the `k` least-confident
//! tasks are routed to a human and count as successes; the rest contribute
//! their logged outcome. The resulting curve starts at the base success
//! rate and ends at 1. Its trapezoidal area is normalized between a random
//! ordering (straight line from `(0, y0)` to `(1, 1)`) and a perfect
//! ordering (line to `(1 - y0, 1)`, then flat): 1 = perfect, 0 = random,
//! negative = worse than random.

mod pvalue;
mod rank;
mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pvalue::{
    spearman_pvalue, spearman_pvalue_with, PvalueChoice, PvalueMethod, PvalueResult,
    EXACT_PERMUTATION_MAX_N,
};
pub use rank::{average_ranks, spearman};
pub use special::{betainc_reg, ln_gamma, student_t_two_sided};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} samples, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("correlation undefined: an input has zero rank variance")]
    UndefinedCorrelation,
    #[error("exact permutation test limited to n <= {max}, got {n}")]
    ExactPermutationTooLarge { n: usize, max: usize },
    #[error("degenerate baseline success rate y0 = {y0}: normalization denominator is zero")]
    DegenerateBaseline { y0: f64 },
    #[error("curves have mismatched help-rate grids")]
    MismatchedGrids,
    #[error("invalid curve: {0}")]
    InvalidCurve(&'static str),
}

/// One evaluated task: confidence (higher = expected more likely to
/// succeed) and its logged binary outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredOutcome {
    pub id: String,
    pub confidence: f64,
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub help_rate: f64,
    pub success_rate: f64,
}

/// Help-rate / success-rate curve on the exact grid `h = k/n, k = 0..=n`.
/// Tasks are helped in ascending confidence order; equal confidences break
/// ties by ascending id so the curve is independent of input order.
pub fn help_success_curve(samples: &[ScoredOutcome]) -> Result<Vec<CurvePoint>, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    if samples.iter().any(|s| !s.confidence.is_finite()) {
        return Err(MetricsError::NonFinite("confidence"));
    }
    let n = samples.len();
    let mut order: Vec<&ScoredOutcome> = samples.iter().collect();
    order.sort_by(|a, b| {
        a.confidence
            .partial_cmp(&b.confidence)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    // suffix[k] = number of successes among the tasks still run autonomously
    // when the k least-confident are helped.
    let mut suffix = vec![0usize; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + usize::from(order[k].success);
    }
    Ok((0..=n)
        .map(|k| CurvePoint {
            help_rate: k as f64 / n as f64,
            success_rate: (k + suffix[k]) as f64 / n as f64,
        })
        .collect())
}

fn trapezoid_area(curve: &[CurvePoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].help_rate - w[0].help_rate) * (w[0].success_rate + w[1].success_rate) / 2.0)
        .sum()
}

/// Normalized SR-HR-AUC.
///
/// `(actual - random) / (perfect - random)` with `random = (1 + y0) / 2` and
/// `perfect = (1 + 2 y0 - y0^2) / 2`. The denominator vanishes at `y0 = 1`
/// (and symmetrically at `y0 = 0`, where the perfect and random curves
/// coincide); both are reported as a degenerate baseline.
pub fn sr_hr_auc(curve: &[CurvePoint], y0: f64) -> Result<f64, MetricsError> {
    if curve.len() < 2 {
        return Err(MetricsError::InvalidCurve("need at least two points"));
    }
    if curve
        .windows(2)
        .any(|w| w[1].help_rate <= w[0].help_rate)
    {
        return Err(MetricsError::InvalidCurve(
            "help rates must be strictly increasing",
        ));
    }
    if !(0.0..=1.0).contains(&y0) {
        return Err(MetricsError::InvalidCurve("y0 outside [0, 1]"));
    }
    if y0 >= 1.0 || y0 <= 0.0 {
        return Err(MetricsError::DegenerateBaseline { y0 });
    }
    let actual = trapezoid_area(curve);
    let random = (1.0 + y0) / 2.0;
    let perfect = (1.0 + 2.0 * y0 - y0 * y0) / 2.0;
    Ok((actual - random) / (perfect - random))
}

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub spearman: f64,
    pub p_value: f64,
    pub p_value_method: PvalueMethod,
    pub p_value_saturated: bool,
    pub base_success_rate: f64,
    pub sr_hr_auc: f64,
    pub curve: Vec<CurvePoint>,
}

/// Full evaluation of scored outcomes: Spearman rho between outcomes and
/// confidences, its p-value, and the curve metrics.
pub fn evaluate(
    samples: &[ScoredOutcome],
    pvalue_choice: PvalueChoice,
) -> Result<EvalReport, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    let outcomes: Vec<f64> = samples
        .iter()
        .map(|s| if s.success { 1.0 } else { 0.0 })
        .collect();
    let confidences: Vec<f64> = samples.iter().map(|s| s.confidence).collect();
    let y0 = outcomes.iter().sum::<f64>() / outcomes.len() as f64;
    let curve = help_success_curve(samples)?;
    let auc = sr_hr_auc(&curve, y0)?;
    let rho = spearman(&outcomes, &confidences)?;
    let s_ranks = average_ranks(&outcomes)?;
    let c_ranks = average_ranks(&confidences)?;
    let pv = spearman_pvalue_with(rho, &s_ranks, &c_ranks, pvalue_choice)?;
    Ok(EvalReport {
        n: samples.len(),
        spearman: rho,
        p_value: pv.p,
        p_value_method: pv.method,
        p_value_saturated: pv.saturated,
        base_success_rate: y0,
        sr_hr_auc: auc,
        curve,
    })
}

/// Mean and sample standard deviation of one scalar across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarStats {
    pub mean: f64,
    pub sigma: f64,
}

fn scalar_stats(values: &[f64]) -> ScalarStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    ScalarStats {
        mean,
        sigma: var.sqrt(),
    }
}

/// Pointwise curve aggregate over runs plus mean/sigma of each scalar
/// metric. Band values are unclipped here; the CSV writer clips to [0, 1]
/// for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: usize,
    pub help_rates: Vec<f64>,
    pub mean_success_rate: Vec<f64>,
    pub sigma_success_rate: Vec<f64>,
    /// mean - 2 sigma, unclipped.
    pub band_low: Vec<f64>,
    /// mean + 2 sigma, unclipped.
    pub band_high: Vec<f64>,
    pub spearman: ScalarStats,
    pub p_value: ScalarStats,
    pub base_success_rate: ScalarStats,
    pub sr_hr_auc: ScalarStats,
}

/// Aggregates >= 2 runs over identical help-rate grids: pointwise mean,
/// sample sigma, and +/- 2 sigma bands, plus scalar metric statistics.
pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunAggregate, MetricsError> {
    if reports.len() < 2 {
        return Err(MetricsError::TooFew {
            n: reports.len(),
            min: 2,
        });
    }
    let grid: Vec<f64> = reports[0].curve.iter().map(|p| p.help_rate).collect();
    for r in &reports[1..] {
        let other: Vec<f64> = r.curve.iter().map(|p| p.help_rate).collect();
        if other != grid {
            return Err(MetricsError::MismatchedGrids);
        }
    }
    let mut mean = Vec::with_capacity(grid.len());
    let mut sigma = Vec::with_capacity(grid.len());
    let mut low = Vec::with_capacity(grid.len());
    let mut high = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let values: Vec<f64> = reports.iter().map(|r| r.curve[i].success_rate).collect();
        let st = scalar_stats(&values);
        mean.push(st.mean);
        sigma.push(st.sigma);
        low.push(st.mean - 2.0 * st.sigma);
        high.push(st.mean + 2.0 * st.sigma);
    }
    let collect = |f: fn(&EvalReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    Ok(RunAggregate {
        runs: reports.len(),
        help_rates: grid,
        mean_success_rate: mean,
        sigma_success_rate: sigma,
        band_low: low,
        band_high: high,
        spearman: scalar_stats(&collect(|r| r.spearman)),
        p_value: scalar_stats(&collect(|r| r.p_value)),
        base_success_rate: scalar_stats(&collect(|r| r.base_success_rate)),
        sr_hr_auc: scalar_stats(&collect(|r| r.sr_hr_auc)),
    })
}

/// 17-significant-digit decimal, the CSV float contract.
pub fn fmt_f64_csv(v: f64) -> String {
    format!("{v:.16e}")
}

/// `help_rate,success_rate` CSV for a single curve.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("help_rate,success_rate\n");
    for p in curve {
        out.push_str(&fmt_f64_csv(p.help_rate));
        out.push(',');
        out.push_str(&fmt_f64_csv(p.success_rate));
        out.push('\n');
    }
    out
}

/// `help_rate,success_rate,ci_low,ci_high` CSV for an aggregate; the band
/// columns are clipped to [0, 1] for display.
pub fn band_csv(agg: &RunAggregate) -> String {
    let mut out = String::from("help_rate,success_rate,ci_low,ci_high\n");
    for i in 0..agg.help_rates.len() {
        out.push_str(&fmt_f64_csv(agg.help_rates[i]));
        out.push(',');
        out.push_str(&fmt_f64_csv(agg.mean_success_rate[i]));
        out.push(',');
        out.push_str(&fmt_f64_csv(agg.band_low[i].clamp(0.0, 1.0)));
        out.push(',');
        out.push_str(&fmt_f64_csv(agg.band_high[i].clamp(0.0, 1.0)));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcomes(confidences: &[f64], successes: &[u8]) -> Vec<ScoredOutcome> {
        confidences
            .iter()
            .zip(successes)
            .enumerate()
            .map(|(i, (&confidence, &s))| ScoredOutcome {
                id: format!("t{i}"),
                confidence,
                success: s == 1,
            })
            .collect()
    }

    #[test]
    fn curve_hand_case_failures_least_confident() {
        let samples = outcomes(&[0.9, 0.1, 0.8, 0.2], &[1, 0, 1, 0]);
        let curve = help_success_curve(&samples).unwrap();
        let expected = [
            (0.0, 0.5),
            (0.25, 0.75),
            (0.5, 1.0),
            (0.75, 1.0),
            (1.0, 1.0),
        ];
        assert_eq!(curve.len(), expected.len());
        for (p, (h, sr)) in curve.iter().zip(expected) {
            assert_eq!((p.help_rate, p.success_rate), (h, sr));
        }
    }

    #[test]
    fn curve_degenerate_outcomes() {
        let all_one = outcomes(&[0.1, 0.5, 0.9], &[1, 1, 1]);
        for p in help_success_curve(&all_one).unwrap() {
            assert_eq!(p.success_rate, 1.0);
        }
        let all_zero = outcomes(&[0.1, 0.5, 0.9], &[0, 0, 0]);
        for p in help_success_curve(&all_zero).unwrap() {
            assert_eq!(p.success_rate, p.help_rate);
        }
    }

    #[test]
    fn curve_is_input_order_invariant_and_monotone() {
        let mut samples = outcomes(&[0.3, 0.3, 0.9, 0.1, 0.5], &[0, 1, 1, 0, 1]);
        let a = help_success_curve(&samples).unwrap();
        samples.reverse();
        let b = help_success_curve(&samples).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[1].success_rate >= w[0].success_rate);
        }
        assert_eq!(a.last().unwrap().success_rate, 1.0);
    }

    #[test]
    fn auc_hand_cases() {
        // Perfect failure ranking: exactly 1.
        let perfect = outcomes(&[0.9, 0.1, 0.8, 0.2], &[1, 0, 1, 0]);
        let curve = help_success_curve(&perfect).unwrap();
        let auc = sr_hr_auc(&curve, 0.5).unwrap();
        assert!((auc - 1.0).abs() <= 1e-12, "auc = {auc}");

        // Anti-ranking (most confident task fails): exactly -0.5.
        let anti = outcomes(&[0.9, 0.1, 0.2, 0.8], &[0, 1, 0, 1]);
        let curve = help_success_curve(&anti).unwrap();
        let auc = sr_hr_auc(&curve, 0.5).unwrap();
        assert!((auc + 0.5).abs() <= 1e-12, "auc = {auc}");
    }

    #[test]
    fn auc_of_random_line_is_zero() {
        for y0 in [0.2, 0.5, 0.8] {
            let curve = vec![
                CurvePoint {
                    help_rate: 0.0,
                    success_rate: y0,
                },
                CurvePoint {
                    help_rate: 0.5,
                    success_rate: y0 + 0.5 * (1.0 - y0),
                },
                CurvePoint {
                    help_rate: 1.0,
                    success_rate: 1.0,
                },
            ];
            let auc = sr_hr_auc(&curve, y0).unwrap();
            assert!(auc.abs() <= 1e-12, "y0 = {y0}: auc = {auc}");
        }
    }

    #[test]
    fn auc_of_perfect_curve_is_one() {
        // Piecewise-linear perfect curve on a fine grid, arbitrary y0.
        for y0 in [0.25, 0.5, 0.75] {
            let n = 200;
            // The perfect curve rises with unit slope from (0, y0) to
            // (1 - y0, 1), then stays flat. The kink lands on the grid for
            // these y0 choices.
            let curve: Vec<CurvePoint> = (0..=n)
                .map(|k| {
                    let h = k as f64 / n as f64;
                    CurvePoint {
                        help_rate: h,
                        success_rate: (y0 + h).min(1.0),
                    }
                })
                .collect();
            let auc = sr_hr_auc(&curve, y0).unwrap();
            assert!((auc - 1.0).abs() <= 1e-9, "y0 = {y0}: auc = {auc}");
        }
    }

    #[test]
    fn auc_degenerate_baseline() {
        let curve = vec![
            CurvePoint {
                help_rate: 0.0,
                success_rate: 1.0,
            },
            CurvePoint {
                help_rate: 1.0,
                success_rate: 1.0,
            },
        ];
        assert!(matches!(
            sr_hr_auc(&curve, 1.0),
            Err(MetricsError::DegenerateBaseline { .. })
        ));
        assert!(matches!(
            sr_hr_auc(&curve, 0.0),
            Err(MetricsError::DegenerateBaseline { .. })
        ));
    }

    #[test]
    fn evaluate_perfect_ranking() {
        // Distinct confidences that rank failures strictly below successes:
        // the curve metric saturates at 1; rho is capped below 1 by the
        // outcome ties (rank-Pearson of [3.5,1.5,3.5,1.5] vs [4,1,3,2]).
        let samples = outcomes(&[0.9, 0.1, 0.8, 0.2], &[1, 0, 1, 0]);
        let report = evaluate(&samples, PvalueChoice::Auto).unwrap();
        assert_eq!(report.n, 4);
        assert!((report.sr_hr_auc - 1.0).abs() < 1e-12);
        assert!((report.spearman - 4.0 / 20.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(report.base_success_rate, 0.5);
        assert_eq!(report.p_value_method, PvalueMethod::ExactPermutation);

        // Confidence with the same tie structure as the outcomes reaches
        // rho = 1 exactly.
        let binary = outcomes(&[1.0, 0.0, 1.0, 0.0], &[1, 0, 1, 0]);
        let report = evaluate(&binary, PvalueChoice::Auto).unwrap();
        assert_eq!(report.spearman, 1.0);
    }

    #[test]
    fn aggregate_runs_statistics() {
        let samples_a = outcomes(&[0.9, 0.1, 0.8, 0.2], &[1, 0, 1, 0]);
        let samples_b = outcomes(&[0.1, 0.9, 0.2, 0.8], &[1, 0, 1, 0]);
        let a = evaluate(&samples_a, PvalueChoice::Auto).unwrap();
        let b = evaluate(&samples_b, PvalueChoice::Auto).unwrap();

        // Identical runs: zero-width bands.
        let same = aggregate_runs(&[a.clone(), a.clone()]).unwrap();
        assert!(same.sigma_success_rate.iter().all(|&s| s == 0.0));
        assert_eq!(same.band_low, same.band_high);

        // {0.4, 0.6}-style two-point sigma at the scalar level.
        let agg = aggregate_runs(&[a.clone(), b.clone()]).unwrap();
        let two_point = scalar_stats(&[0.4, 0.6]);
        assert!((two_point.mean - 0.5).abs() < 1e-15);
        assert!((two_point.sigma - 0.1414213562373095).abs() < 1e-12);

        // Band width is 4 sigma everywhere.
        for i in 0..agg.help_rates.len() {
            let width = agg.band_high[i] - agg.band_low[i];
            assert!((width - 4.0 * agg.sigma_success_rate[i]).abs() < 1e-12);
        }

        // Mismatched grids are rejected.
        let samples_c = outcomes(&[0.5, 0.1, 0.9], &[1, 0, 1]);
        let c = evaluate(&samples_c, PvalueChoice::Auto).unwrap();
        assert!(matches!(
            aggregate_runs(&[a, c]),
            Err(MetricsError::MismatchedGrids)
        ));
    }

    #[test]
    fn csv_formats() {
        let samples = outcomes(&[0.9, 0.1], &[1, 0]);
        let curve = help_success_curve(&samples).unwrap();
        let csv = curve_csv(&curve);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "help_rate,success_rate");
        assert_eq!(csv.lines().count(), curve.len() + 1);
        // 17 significant digits round-trip exactly.
        let row = lines.next().unwrap();
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, curve[0].success_rate);
    }
}
