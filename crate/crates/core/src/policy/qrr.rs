use serde::{Deserialize, Serialize};

use crate::activation::ActivationVector;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Where QRR gets the arrival rates it plugs into its score.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum RateSource {
    /// Use the configured rates.
    #[default]
    Known,
    /// Running mean of observed arrivals once `warmup` slots have elapsed;
    /// the configured rates are used before that. Experimental: the
    /// stability guarantee assumes known rates.
    Empirical { warmup: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrrConfig {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub rate_source: RateSource,
}

impl QrrConfig {
    pub fn known(lambda: Vec<f64>) -> Self {
        QrrConfig { lambda, rate_source: RateSource::Known }
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        if self.lambda.len() != n_channels {
            return Err(Error::DimensionMismatch { expected: n_channels, got: self.lambda.len() });
        }
        if let Some(l) = self.lambda.iter().find(|l| !(0.0..1.0).contains(*l)) {
            return Err(Error::Config(format!("QRR arrival rate {l} must lie in [0, 1)")));
        }
        Ok(())
    }
}

fn weighted_backlog(u: &[f64], lambda: &[f64]) -> f64 {
    u.iter().zip(lambda).map(|(a, b)| a * b).sum()
}

/// Per-channel summand of the QRR objective when `m` channels are active:
/// `U_n r - (1 + r) Σ_j U_j λ_j` with `r = P01^(m) / p10`.
pub fn qrr_score(u: &[f64], lambda: &[f64], n: usize, m: u32, params: &[ChannelParams]) -> f64 {
    let r = params[n].p01_k(m as u64) / params[n].p10();
    u[n] * r - (1.0 + r) * weighted_backlog(u, lambda)
}

/// `f(U, RR(φ))` evaluated directly from its definition.
pub fn qrr_f_value(u: &[f64], lambda: &[f64], phi: &ActivationVector, params: &[ChannelParams]) -> f64 {
    let m = phi.count();
    let drift = weighted_backlog(u, lambda);
    phi.channels()
        .map(|n| {
            let mean_dwell = params[n].mean_dwell(m);
            u[n] * (mean_dwell - 1.0) - mean_dwell * drift
        })
        .sum()
}

/// Maximizes `f(U, RR(φ))` over all nonzero `φ` in `O(N² log N)`.
///
/// For each `M` the best `φ` activates the `M` largest summands; the outer
/// maximum over `M` prefers the smallest `M` on ties, and within an `M`
/// ties go to lower channel indices.
pub fn qrr_select(u: &[f64], lambda: &[f64], params: &[ChannelParams]) -> (ActivationVector, f64) {
    let n = params.len();
    assert!(n >= 1 && u.len() == n && lambda.len() == n, "dimension mismatch in qrr_select");
    let drift = weighted_backlog(u, lambda);
    let mut best: Option<(u32, Vec<usize>, f64)> = None;
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(n);
    for m in 1..=n as u32 {
        scored.clear();
        scored.extend((0..n).map(|i| {
            let r = params[i].p01_k(m as u64) / params[i].p10();
            (i, u[i] * r - (1.0 + r) * drift)
        }));
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let f_hat: f64 = scored[..m as usize].iter().map(|s| s.1).sum();
        let better = match &best {
            None => true,
            Some((_, _, f)) => f_hat > *f + 1e-12 * (1.0 + f.abs()),
        };
        if better {
            best = Some((m, scored[..m as usize].iter().map(|s| s.0).collect(), f_hat));
        }
    }
    let (_, chans, f) = best.expect("at least one M");
    (ActivationVector::from_channels(&chans, n).expect("valid channel set"), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sym2() -> Vec<ChannelParams> {
        vec![ChannelParams::new(0.2, 0.2).unwrap(); 2]
    }

    #[test]
    fn score_examples() {
        let p = sym2();
        let lam = [0.25, 0.25];
        let u = [10.0, 0.0];
        assert_abs_diff_eq!(qrr_score(&u, &lam, 0, 1, &p), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qrr_score(&u, &lam, 1, 1, &p), -5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qrr_score(&u, &lam, 0, 2, &p), 9.5, epsilon = 1e-12);
    }

    #[test]
    fn select_examples() {
        let p = sym2();
        let lam = [0.25, 0.25];
        let (phi, f) = qrr_select(&[10.0, 0.0], &lam, &p);
        assert_eq!(phi.to_bitstring(), "10");
        assert_abs_diff_eq!(f, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qrr_f_value(&[10.0, 0.0], &lam, &"11".parse().unwrap(), &p), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qrr_f_value(&[10.0, 0.0], &lam, &"01".parse().unwrap(), &p), -5.0, epsilon = 1e-12);

        let (phi, f) = qrr_select(&[0.0, 0.0], &lam, &p);
        assert_eq!(phi.to_bitstring(), "10");
        assert_eq!(f, 0.0);

        let (phi, _) = qrr_select(&[5.0, 5.0], &lam, &p);
        assert_eq!(phi.to_bitstring(), "11");
    }

    #[test]
    fn config_validation() {
        assert!(QrrConfig::known(vec![0.2, 1.0]).validate(2).is_err());
        assert!(QrrConfig::known(vec![0.2]).validate(2).is_err());
        assert!(QrrConfig::known(vec![0.2, 0.0]).validate(2).is_ok());
    }
}
