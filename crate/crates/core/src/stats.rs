//! Small statistics helpers for Monte-Carlo checks.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean assuming independent samples.
pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Splits `xs` into `batches` equal contiguous blocks (dropping the
/// remainder) and returns the block means.
pub fn batch_means(xs: &[f64], batches: usize) -> Vec<f64> {
    let len = xs.len() / batches.max(1);
    if len == 0 {
        return Vec::new();
    }
    xs.chunks_exact(len).take(batches).map(mean).collect()
}

/// Grand mean and batch-means standard error.
pub fn batch_mean_err(xs: &[f64], batches: usize) -> (f64, f64) {
    let b = batch_means(xs, batches);
    (mean(&b), std_err(&b))
}

/// Total-variation distance between two pmfs on a common support; missing
/// tail entries count as zero.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (get(p, i) - get(q, i)).abs()).sum::<f64>()
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorr(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return f64::NAN;
    }
    let m = mean(xs);
    let den: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

/// Upper quantile of the standard normal, by bisection on `erfc`.
pub fn normal_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

// Numerical Recipes erfc, fractional error below 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Student-t quantile via the Cornish-Fisher expansion around the normal.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    let z = normal_quantile(p);
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    z + (z3 + z) / (4.0 * df) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df)
}

/// Ordinary least squares fit `y = a + b x` with a two-sided confidence
/// interval on `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub ci: (f64, f64),
    pub confidence: f64,
}

impl SlopeFit {
    pub fn contains_zero(&self) -> bool {
        self.ci.0 <= 0.0 && 0.0 <= self.ci.1
    }
}

pub fn ols_slope(x: &[f64], y: &[f64], confidence: f64) -> SlopeFit {
    assert_eq!(x.len(), y.len(), "ols_slope needs paired samples");
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let std_err = (sse / (n - 2.0) / sxx).sqrt();
    let t = t_quantile(0.5 + confidence / 2.0, n - 2.0);
    SlopeFit { slope, intercept, std_err, ci: (slope - t * std_err, slope + t * std_err), confidence }
}

/// Pearson chi-square statistic.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).filter(|(_, e)| **e > 0.0).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

/// Chi-square statistic of independence for a 2x2 table of consecutive
/// pairs in a binary sequence (one degree of freedom).
pub fn pair_independence_chi2(bits: &[bool]) -> f64 {
    let mut table = [[0.0f64; 2]; 2];
    for w in bits.windows(2) {
        table[w[0] as usize][w[1] as usize] += 1.0;
    }
    let total: f64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let obs: Vec<f64> = table.iter().flatten().copied().collect();
    let exp: Vec<f64> = (0..4).map(|k| rows[k / 2] * cols[k % 2] / total).collect();
    chi_square(&obs, &exp)
}

/// Upper tail probability of chi-square with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    2.0 * (1.0 - normal_cdf(x.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles() {
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959964, epsilon = 1e-5);
        assert_abs_diff_eq!(normal_quantile(0.995), 2.575829, epsilon = 1e-5);
        assert_abs_diff_eq!(t_quantile(0.995, 48.0), 2.682204, epsilon = 2e-3);
        assert_abs_diff_eq!(t_quantile(0.975, 10.0), 2.228139, epsilon = 5e-3);
        assert_abs_diff_eq!(chi2_1_sf(3.841459), 0.05, epsilon = 1e-5);
    }

    #[test]
    fn slope_fit_on_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let f = ols_slope(&x, &y, 0.99);
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-2);
        assert!(!f.contains_zero());
    }

    #[test]
    fn simple_summaries() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[1.0]), 0.5);
        assert_eq!(batch_means(&[1.0, 1.0, 3.0, 3.0, 9.0], 2), vec![1.0, 3.0]);
        assert!(lag1_autocorr(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]) < -0.5);
    }
}
