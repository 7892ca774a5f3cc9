//! Average ranks and Spearman's rank correlation.

use super::MetricsError;

/// 1-based ranks; tied values receive the mean of their rank positions.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("rank input"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Mean of 1-based positions start+1 ..= end.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    Ok(ranks)
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Pearson correlation of two equal-length vectors.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricsError::UndefinedCorrelation);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Spearman's rho between `s` and `c`.
///
/// When neither list has ties this is the textbook formula
/// `1 - 6 * sum(d_i^2) / (n (n^2 - 1))` over rank differences; with ties it
/// is the Pearson correlation of average ranks (the two coincide in the
/// tie-free case).
pub fn spearman(s: &[f64], c: &[f64]) -> Result<f64, MetricsError> {
    if s.len() != c.len() {
        return Err(MetricsError::LengthMismatch {
            left: s.len(),
            right: c.len(),
        });
    }
    if s.len() < 2 {
        return Err(MetricsError::TooFew { n: s.len(), min: 2 });
    }
    let rs = average_ranks(s)?;
    let rc = average_ranks(c)?;
    if !has_ties(s) && !has_ties(c) {
        let n = s.len() as f64;
        let d2: f64 = rs.iter().zip(&rc).map(|(&a, &b)| (a - b) * (a - b)).sum();
        Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
    } else {
        pearson(&rs, &rc)
    }
}
