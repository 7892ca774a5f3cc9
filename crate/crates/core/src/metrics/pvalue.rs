//! Two-sided significance of a Spearman coefficient.
//!
//! For n <= 9 the p-value is exact: all n! assignments of one rank vector
//! against the other are enumerated and `|rho_perm| >= |rho|` counted. Above
//! that the usual t-approximation `t = rho * sqrt((n-2) / (1-rho^2))` is
//! used with the Student-t tail evaluated through the regularized
//! incomplete beta function.

use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::MetricsError;

/// Largest n for which the exact permutation test runs (9! = 362880).
pub const EXACT_PERMUTATION_MAX_N: usize = 9;

/// Comparison slack when counting permutations at least as extreme as the
/// observed statistic, guarding against floating-point equality misses.
const PERM_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvalueMethod {
    ExactPermutation,
    TApproximation,
}

/// Caller-facing method selection; `Auto` applies the n <= 9 crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvalueChoice {
    Auto,
    ExactPermutation,
    TApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvalueResult {
    pub p: f64,
    pub method: PvalueMethod,
    /// True when `|rho| = 1` forced the t statistic to infinity; the
    /// reported p is then exactly 0.
    pub saturated: bool,
}

/// Two-sided p-value for an observed `rho` over the given rank vectors.
pub fn spearman_pvalue(
    rho: f64,
    s_ranks: &[f64],
    c_ranks: &[f64],
) -> Result<PvalueResult, MetricsError> {
    spearman_pvalue_with(rho, s_ranks, c_ranks, PvalueChoice::Auto)
}

pub fn spearman_pvalue_with(
    rho: f64,
    s_ranks: &[f64],
    c_ranks: &[f64],
    choice: PvalueChoice,
) -> Result<PvalueResult, MetricsError> {
    let n = s_ranks.len();
    if c_ranks.len() != n {
        return Err(MetricsError::LengthMismatch {
            left: n,
            right: c_ranks.len(),
        });
    }
    if n < 3 {
        return Err(MetricsError::TooFew { n, min: 3 });
    }
    match choice {
        PvalueChoice::Auto => {
            if n <= EXACT_PERMUTATION_MAX_N {
                exact_permutation(rho, s_ranks, c_ranks)
            } else {
                Ok(t_approximation(rho, n))
            }
        }
        PvalueChoice::ExactPermutation => {
            if n > EXACT_PERMUTATION_MAX_N {
                return Err(MetricsError::ExactPermutationTooLarge {
                    n,
                    max: EXACT_PERMUTATION_MAX_N,
                });
            }
            exact_permutation(rho, s_ranks, c_ranks)
        }
        PvalueChoice::TApproximation => Ok(t_approximation(rho, n)),
    }
}

fn t_approximation(rho: f64, n: usize) -> PvalueResult {
    let df = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        return PvalueResult {
            p: 0.0,
            method: PvalueMethod::TApproximation,
            saturated: true,
        };
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    PvalueResult {
        p: student_t_two_sided(t, df),
        method: PvalueMethod::TApproximation,
        saturated: false,
    }
}

/// Enumerates every assignment of `c_ranks` against fixed `s_ranks` with
/// Heap's algorithm. The rank multisets are permutation-invariant, so each
/// permutation's rho is a centered dot product over fixed norms.
fn exact_permutation(
    rho: f64,
    s_ranks: &[f64],
    c_ranks: &[f64],
) -> Result<PvalueResult, MetricsError> {
    let n = s_ranks.len();
    let center = |xs: &[f64]| -> Vec<f64> {
        let mean = xs.iter().sum::<f64>() / n as f64;
        xs.iter().map(|&x| x - mean).collect()
    };
    let a = center(s_ranks);
    let mut b = center(c_ranks);
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(MetricsError::UndefinedCorrelation);
    }
    let denom = norm_a * norm_b;
    let threshold = rho.abs() - PERM_TIE_EPS;

    let mut total: u64 = 0;
    let mut extreme: u64 = 0;
    let mut tally = |b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let r = dot / denom;
        total += 1;
        if r.abs() >= threshold {
            extreme += 1;
        }
    };

    // Heap's algorithm, iterative.
    tally(&b);
    let mut counters = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                b.swap(0, i);
            } else {
                b.swap(counters[i], i);
            }
            tally(&b);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }

    Ok(PvalueResult {
        p: extreme as f64 / total as f64,
        method: PvalueMethod::ExactPermutation,
        saturated: false,
    })
}
