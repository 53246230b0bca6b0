//! Closed-form throughput of round-robin policies and the inner/outer
//! capacity bounds built from them.
//!
//! `RR(φ)` serves channel `n` at rate
//!
//! ```text
//! η_n^φ = (E[L_n] - 1) / Σ_{j ∈ φ} E[L_j],   E[L_n] = 1 + P01_n^(M(φ)) / p10_n
//! ```
//!
//! The inner bound is every rate vector dominated by a convex combination of
//! the `η^φ`. The outer bound is `λ_n <= π_n,ON` together with
//! `Σ λ_n <= max_n c_{n,∞}`. For symmetric channels `RR(M)` has sum rate
//!
//! ```text
//! c_M = p01 (1 - (1-x)^M) / (x p10 + p01 (1 - (1-x)^M))
//! ```

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationVector;
use crate::channel::{is_symmetric, ChannelParams};
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome, LP_TOL};
use crate::policy::RandRrSpec;

/// Upper limit on the channel count for anything that enumerates all
/// `2^N - 1` subsets.
pub const MAX_REGION_CHANNELS: usize = 16;

/// Sum throughput of `RR(M)` on symmetric channels.
pub fn c_of_m(params: &ChannelParams, m: u32) -> f64 {
    let g = params.p01() * (1.0 - params.decay(m as u64));
    g / (params.x() * params.p10() + g)
}

/// `lim_{M→∞} c_M`.
pub fn c_infinity(params: &ChannelParams) -> f64 {
    params.c_infinity()
}

/// `c_∞ (1 - (1-x)^M)`, a lower bound on `c_M`.
pub fn c_tilde(params: &ChannelParams, m: u32) -> f64 {
    params.c_infinity() * (1.0 - params.decay(m as u64))
}

/// `c_∞ (1-x)^M`, an upper bound on `c_∞ - c_M` that vanishes geometrically.
pub fn geometric_gap(params: &ChannelParams, m: u32) -> f64 {
    params.c_infinity() * params.decay(m as u64)
}

/// Sum of expected visit lengths over the active channels of `phi`.
pub fn chi(phi: &ActivationVector, params: &[ChannelParams]) -> f64 {
    let m = phi.count();
    phi.channels().map(|n| params[n].mean_dwell(m)).sum()
}

/// Per-channel throughput of `RR(phi)`.
pub fn eta_vector(phi: &ActivationVector, params: &[ChannelParams]) -> Vec<f64> {
    let m = phi.count();
    let total = chi(phi, params);
    (0..params.len())
        .map(|n| if phi.is_active(n) { (params[n].mean_dwell(m) - 1.0) / total } else { 0.0 })
        .collect()
}

fn require_symmetric(params: &[ChannelParams]) -> Result<ChannelParams> {
    if params.is_empty() || !is_symmetric(params) {
        return Err(Error::NotSymmetric);
    }
    Ok(params[0])
}

/// Vertex set of the inner bound plus the outer-bound hyperplanes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionModel {
    params: Vec<ChannelParams>,
    vertices: Vec<(ActivationVector, Vec<f64>)>,
    pi_on: Vec<f64>,
    sum_cap: f64,
}

impl RegionModel {
    pub fn new(params: &[ChannelParams]) -> Result<Self> {
        let n = params.len();
        if n == 0 {
            return Err(Error::Config("at least one channel is required".into()));
        }
        if n > MAX_REGION_CHANNELS {
            return Err(Error::TooManyChannels { n, max: MAX_REGION_CHANNELS });
        }
        let vertices = ActivationVector::enumerate(n).map(|phi| (phi, eta_vector(&phi, params))).collect();
        Ok(RegionModel {
            params: params.to_vec(),
            vertices,
            pi_on: params.iter().map(|p| p.pi_on()).collect(),
            sum_cap: outer_sum_cap(params),
        })
    }

    pub fn n_channels(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ChannelParams] {
        &self.params
    }

    pub fn vertices(&self) -> &[(ActivationVector, Vec<f64>)] {
        &self.vertices
    }

    pub fn pi_on(&self) -> &[f64] {
        &self.pi_on
    }

    /// `max_n c_{n,∞}`.
    pub fn sum_cap(&self) -> f64 {
        self.sum_cap
    }
}

/// `max_n c_{n,∞}`.
pub fn outer_sum_cap(params: &[ChannelParams]) -> f64 {
    params.iter().map(|p| p.c_infinity()).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Result of an inner-bound membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerMembership {
    pub verdict: Membership,
    /// Largest `θ` such that `θ λ` is in the inner bound (infinite for `λ = 0`).
    pub scale: f64,
    /// Time-fraction weights `β` with `Σ β_φ η^φ >= λ` when not outside.
    pub certificate: Option<MixtureWeights>,
}

fn check_rates(lambda: &[f64], n: usize) -> Result<()> {
    if lambda.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lambda.len() });
    }
    if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Config("rates must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Decides whether `lambda` is dominated by a convex combination of the
/// vertices, by maximizing the scale `θ` with `θ λ` still dominated.
pub fn inner_membership(lambda: &[f64], region: &RegionModel) -> Result<InnerMembership> {
    let n = region.n_channels();
    check_rates(lambda, n)?;
    let k = region.vertices.len();
    if lambda.iter().all(|&l| l == 0.0) {
        let cert = MixtureWeights::new(WeightKind::TimeFraction, [(region.vertices[0].0, 1.0)])?;
        return Ok(InnerMembership { verdict: Membership::Inside, scale: f64::INFINITY, certificate: Some(cert) });
    }
    // Columns: β_1..β_K, θ, s_1..s_N.
    let cols = k + 1 + n;
    let mut a = vec![vec![0.0; cols]; n + 1];
    for (j, (_, eta)) in region.vertices.iter().enumerate() {
        for i in 0..n {
            a[i][j] = eta[i];
        }
        a[n][j] = 1.0;
    }
    for i in 0..n {
        a[i][k] = -lambda[i];
        a[i][k + 1 + i] = -1.0;
    }
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let mut c = vec![0.0; cols];
    c[k] = 1.0;
    let (x, theta) = match lp::maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, value } => (x, value),
        other => return Err(Error::Lp(format!("membership LP ended as {other:?}"))),
    };
    let verdict = if theta > 1.0 + LP_TOL {
        Membership::Inside
    } else if theta >= 1.0 - LP_TOL {
        Membership::Boundary
    } else {
        Membership::Outside
    };
    let certificate = if verdict == Membership::Outside {
        None
    } else {
        let weights = region.vertices.iter().zip(&x[..k]).map(|((phi, _), &w)| (*phi, w));
        Some(MixtureWeights::new(WeightKind::TimeFraction, weights)?)
    };
    Ok(InnerMembership { verdict, scale: theta, certificate })
}

/// Mixed throughput `Σ β_φ η^φ` of a time-fraction mixture.
pub fn mixed_throughput(beta: &MixtureWeights, params: &[ChannelParams]) -> Vec<f64> {
    let mut mu = vec![0.0; params.len()];
    for (phi, w) in beta.iter() {
        for (m, e) in mu.iter_mut().zip(eta_vector(phi, params)) {
            *m += w * e;
        }
    }
    mu
}

/// Checks the `N + 1` outer-bound hyperplanes.
pub fn outer_membership(lambda: &[f64], params: &[ChannelParams]) -> Result<Membership> {
    check_rates(lambda, params.len())?;
    let tol = 1e-12;
    let per_channel = lambda.iter().zip(params).all(|(&l, p)| l <= p.pi_on() + tol);
    let sum_ok = lambda.iter().sum::<f64>() <= outer_sum_cap(params) + tol;
    Ok(if per_channel && sum_ok { Membership::Inside } else { Membership::Outside })
}

/// Whether weights are per-round selection probabilities or time fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// `α_φ`: probability of picking `φ` for a round.
    PerRoundSelection,
    /// `β_φ`: long-run fraction of time spent in `RR(φ)` rounds.
    TimeFraction,
}

/// A probability distribution over activation vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub kind: WeightKind,
    weights: BTreeMap<ActivationVector, f64>,
}

impl MixtureWeights {
    /// Validates nonnegativity and normalization (within 1e-9) and
    /// renormalizes exactly. Zero entries are kept.
    pub fn new(kind: WeightKind, weights: impl IntoIterator<Item = (ActivationVector, f64)>) -> Result<Self> {
        let mut map: BTreeMap<ActivationVector, f64> = BTreeMap::new();
        let mut len = None;
        for (phi, w) in weights {
            if !w.is_finite() || w < -LP_TOL {
                return Err(Error::InvalidWeights(format!("weight {w} for {phi}")));
            }
            if let Some(l) = len {
                if l != phi.len() {
                    return Err(Error::DimensionMismatch { expected: l, got: phi.len() });
                }
            }
            len = Some(phi.len());
            *map.entry(phi).or_insert(0.0) += w.max(0.0);
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        for w in map.values_mut() {
            *w /= total;
        }
        Ok(MixtureWeights { kind, weights: map })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ActivationVector, f64)> {
        self.weights.iter().map(|(a, w)| (a, *w))
    }

    pub fn get(&self, phi: &ActivationVector) -> f64 {
        self.weights.get(phi).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = (&ActivationVector, f64)> {
        self.iter().filter(|(_, w)| *w > 0.0)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.weights.iter().map(|(a, w)| (a.to_bitstring(), *w)).collect()
    }

    pub fn from_map(kind: WeightKind, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut v = Vec::with_capacity(map.len());
        for (k, w) in map {
            v.push((k.parse::<ActivationVector>()?, *w));
        }
        Self::new(kind, v)
    }

    /// The `RandRR` policy drawing subsets with these weights; only valid
    /// for per-round selection weights.
    pub fn to_randrr(&self) -> Result<RandRrSpec> {
        if self.kind != WeightKind::PerRoundSelection {
            return Err(Error::InvalidWeights("RandRR needs per-round selection weights".into()));
        }
        RandRrSpec::new(self.support().map(|(a, w)| (*a, w)))
    }
}

fn reweight(weights: &MixtureWeights, kind: WeightKind, f: impl Fn(f64, f64) -> f64, params: &[ChannelParams]) -> Result<MixtureWeights> {
    let raw: Vec<(ActivationVector, f64)> =
        weights.iter().map(|(phi, w)| (*phi, f(w, chi(phi, params)))).collect();
    let total: f64 = raw.iter().map(|r| r.1).sum();
    MixtureWeights::new(kind, raw.into_iter().map(|(a, w)| (a, w / total)))
}

/// Selection probabilities `α` realizing the time fractions `β`:
/// `α_φ ∝ β_φ / χ_φ`.
pub fn beta_to_alpha(beta: &MixtureWeights, params: &[ChannelParams]) -> Result<MixtureWeights> {
    if beta.kind != WeightKind::TimeFraction {
        return Err(Error::InvalidWeights("expected time-fraction weights".into()));
    }
    reweight(beta, WeightKind::PerRoundSelection, |w, chi| w / chi, params)
}

/// Long-run time fractions produced by selection probabilities `α`:
/// `β_φ = α_φ χ_φ / Σ α χ`.
pub fn alpha_to_beta(alpha: &MixtureWeights, params: &[ChannelParams]) -> Result<MixtureWeights> {
    if alpha.kind != WeightKind::PerRoundSelection {
        return Err(Error::InvalidWeights("expected per-round selection weights".into()));
    }
    reweight(alpha, WeightKind::TimeFraction, |w, chi| w * chi, params)
}

/// A nonnegative, nonzero direction in rate space.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionVector(Vec<f64>);

impl DirectionVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidDirection("empty vector".into()));
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidDirection(format!("{v:?} has a negative or non-finite entry")));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidDirection("all entries are zero".into()));
        }
        Ok(DirectionVector(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Scaled to unit L1 norm.
    pub fn normalized(&self) -> Vec<f64> {
        let s: f64 = self.0.iter().sum();
        self.0.iter().map(|x| x / s).collect()
    }
}

/// Nonnegative weights over `Φ_d` reproducing `v`, if they exist.
pub fn diversity_decomposition(v: &DirectionVector, d: u32) -> Option<Vec<(ActivationVector, f64)>> {
    let n = v.len();
    let cands: Vec<ActivationVector> = ActivationVector::enumerate_with_count(n, d).collect();
    if cands.is_empty() {
        return None;
    }
    let scale = v.as_slice().iter().cloned().fold(0.0, f64::max);
    let a: Vec<Vec<f64>> =
        (0..n).map(|i| cands.iter().map(|c| if c.is_active(i) { 1.0 } else { 0.0 }).collect()).collect();
    let b: Vec<f64> = v.as_slice().iter().map(|x| x / scale).collect();
    let x = lp::feasible_point(&a, &b)?;
    Some(cands.into_iter().zip(x).filter(|(_, w)| *w > LP_TOL).map(|(c, w)| (c, w * scale)).collect())
}

/// Largest `d` such that `v` is a nonnegative combination of vectors with
/// exactly `d` ones.
pub fn user_diversity(v: &DirectionVector) -> Result<u32> {
    let n = v.len();
    if n > MAX_REGION_CHANNELS {
        return Err(Error::TooManyChannels { n, max: MAX_REGION_CHANNELS });
    }
    for d in (2..=n as u32).rev() {
        if diversity_decomposition(v, d).is_some() {
            return Ok(d);
        }
    }
    Ok(1)
}

/// Sum throughput guaranteed along a direction on symmetric channels, and
/// the mixture realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityGuarantee {
    pub diversity: u32,
    pub sum_throughput: f64,
    /// Mixture over `Φ_d`; for symmetric channels all `χ_φ` agree, so these
    /// are both the selection and the time-fraction weights.
    pub mixture: MixtureWeights,
    /// Rate vector the mixture supports; parallel to `v`.
    pub rate: Vec<f64>,
}

pub fn guaranteed_sum_throughput(v: &DirectionVector, params: &[ChannelParams]) -> Result<DiversityGuarantee> {
    let p = require_symmetric(params)?;
    if v.len() != params.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: v.len() });
    }
    let d = user_diversity(v)?;
    let parts = diversity_decomposition(v, d).ok_or_else(|| Error::Lp("decomposition vanished".into()))?;
    let total: f64 = parts.iter().map(|p| p.1).sum();
    let mixture = MixtureWeights::new(WeightKind::PerRoundSelection, parts.iter().map(|&(a, w)| (a, w / total)))?;
    let c_d = c_of_m(&p, d);
    let mut rate = vec![0.0; v.len()];
    for (phi, w) in mixture.iter() {
        for n in phi.channels() {
            rate[n] += w * c_d / d as f64;
        }
    }
    Ok(DiversityGuarantee { diversity: d, sum_throughput: c_d, mixture, rate })
}

/// Upper bound on the sum-rate loss of the inner bound along `v`:
/// `c_∞ min[(1-x)^{d(v)}, π_ON / max_n λ_n^int - 1]`.
pub fn proximity_gap(v: &DirectionVector, lambda_int: &[f64], params: &[ChannelParams]) -> Result<f64> {
    let p = require_symmetric(params)?;
    if lambda_int.len() != params.len() || v.len() != params.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: lambda_int.len() });
    }
    let d = user_diversity(v)?;
    let max_int = lambda_int.iter().cloned().fold(0.0, f64::max);
    let second = if max_int > 0.0 { p.pi_on() / max_int - 1.0 } else { f64::INFINITY };
    Ok(p.c_infinity() * p.decay(d as u64).min(second))
}

/// Boundary points of both bounds along one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub direction: Vec<f64>,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    /// `Σ outer - Σ inner`.
    pub gap: f64,
}

/// Largest `θ` with `θ v̂` inside the outer bound, `v̂ = v / |v|_1`.
pub fn outer_scale(v: &DirectionVector, region: &RegionModel) -> f64 {
    let vh = v.normalized();
    vh.iter()
        .zip(region.pi_on())
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, pi)| pi / x)
        .fold(region.sum_cap(), f64::min)
}

fn inner_feasible(point: &[f64], region: &RegionModel) -> bool {
    let n = region.n_channels();
    let k = region.vertices.len();
    let mut a = vec![vec![0.0; k + n]; n + 1];
    for (j, (_, eta)) in region.vertices.iter().enumerate() {
        for i in 0..n {
            a[i][j] = eta[i];
        }
        a[n][j] = 1.0;
    }
    for i in 0..n {
        a[i][k + i] = -1.0;
    }
    let mut b = point.to_vec();
    b.push(1.0);
    lp::feasible_point(&a, &b).is_some()
}

/// Inner boundary scale along `v` by bisection on feasibility.
pub fn inner_scale_bisection(v: &DirectionVector, region: &RegionModel) -> f64 {
    let vh = v.normalized();
    let at = |t: f64| vh.iter().map(|x| x * t).collect::<Vec<_>>();
    let mut hi = outer_scale(v, region);
    if inner_feasible(&at(hi), region) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inner_feasible(&at(mid), region) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Inner and outer boundary points for each direction.
pub fn boundary_sweep(region: &RegionModel, directions: &[DirectionVector]) -> Result<Vec<SweepRow>> {
    if directions.is_empty() {
        return Err(Error::InvalidDirection("no directions given".into()));
    }
    directions
        .iter()
        .map(|v| {
            if v.len() != region.n_channels() {
                return Err(Error::DimensionMismatch { expected: region.n_channels(), got: v.len() });
            }
            let vh = v.normalized();
            let ti = inner_scale_bisection(v, region);
            let to = outer_scale(v, region);
            let inner: Vec<f64> = vh.iter().map(|x| x * ti).collect();
            let outer: Vec<f64> = vh.iter().map(|x| x * to).collect();
            let gap = outer.iter().sum::<f64>() - inner.iter().sum::<f64>();
            Ok(SweepRow { direction: v.as_slice().to_vec(), inner, outer, gap })
        })
        .collect()
}

/// `k` evenly spaced directions over the closed quarter circle (two users).
pub fn quarter_circle_directions(k: usize) -> Vec<DirectionVector> {
    let k = k.max(2);
    (0..k)
        .map(|i| {
            let a = std::f64::consts::FRAC_PI_2 * i as f64 / (k - 1) as f64;
            let (s, c) = a.sin_cos();
            DirectionVector::new(vec![c.max(0.0), s.max(0.0)]).expect("nonzero")
        })
        .collect()
}

/// Point where the direction meets the memoryless sum-rate line
/// `Σ λ = π_ON` (symmetric channels only).
pub fn blind_point(v: &DirectionVector, params: &[ChannelParams]) -> Result<Vec<f64>> {
    let p = require_symmetric(params)?;
    Ok(v.normalized().iter().map(|x| x * p.pi_on()).collect())
}

pub const CSV_HEADER: &str = "# memsched-csv v1";

/// Writes sweep rows; `blind` adds memoryless reference columns.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow], blind: Option<&[Vec<f64>]>) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let n = rows.first().map_or(0, |r| r.direction.len());
    let mut cols: Vec<String> = Vec::new();
    for prefix in ["dir", "inner", "outer"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.push("gap".into());
    if blind.is_some() {
        cols.extend((1..=n).map(|i| format!("blind_{i}")));
    }
    writeln!(w, "{}", cols.join(","))?;
    for (i, r) in rows.iter().enumerate() {
        let mut vals: Vec<String> = r
            .direction
            .iter()
            .chain(&r.inner)
            .chain(&r.outer)
            .map(|x| format!("{x:.12}"))
            .collect();
        vals.push(format!("{:.12}", r.gap));
        if let Some(b) = blind {
            vals.extend(b[i].iter().map(|x| format!("{x:.12}")));
        }
        writeln!(w, "{}", vals.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sym(n: usize) -> Vec<ChannelParams> {
        vec![ChannelParams::new(0.2, 0.2).unwrap(); n]
    }

    fn asym() -> Vec<ChannelParams> {
        vec![ChannelParams::new(0.1, 0.3).unwrap(), ChannelParams::new(0.3, 0.1).unwrap()]
    }

    fn phi(s: &str) -> ActivationVector {
        s.parse().unwrap()
    }

    #[test]
    fn c_m_values() {
        let p = ChannelParams::new(0.2, 0.2).unwrap();
        assert_abs_diff_eq!(c_of_m(&p, 1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c_of_m(&p, 2), 0.128 / 0.208, epsilon = 1e-15);
        assert_abs_diff_eq!(c_infinity(&p), 0.2 / 0.28, epsilon = 1e-15);
        assert_abs_diff_eq!(c_of_m(&p, 400), c_infinity(&p), epsilon = 1e-14);
    }

    #[test]
    fn eta_examples() {
        let e = eta_vector(&phi("11"), &sym(2));
        let c2 = c_of_m(&sym(1)[0], 2);
        assert_abs_diff_eq!(e[0], c2 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 0.307_692_307_692, epsilon = 1e-11);

        let e = eta_vector(&phi("11"), &asym());
        // E[L1] = 1 + 0.16/0.3, E[L2] = 1 + 0.48/0.1
        let l1 = 1.0 + 0.16 / 0.3;
        let l2 = 5.8;
        assert_abs_diff_eq!(e[0], (l1 - 1.0) / (l1 + l2), epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 4.8 / (l1 + l2), epsilon = 1e-14);
        assert_abs_diff_eq!(e[0], 0.07273, epsilon = 1e-5);
        assert_abs_diff_eq!(e[1], 0.65455, epsilon = 1e-5);

        assert_eq!(eta_vector(&phi("10"), &sym(2)), vec![0.5, 0.0]);
    }

    #[test]
    fn inner_membership_examples() {
        let region = RegionModel::new(&sym(2)).unwrap();
        let r = inner_membership(&[0.30, 0.30], &region).unwrap();
        assert_eq!(r.verdict, Membership::Inside);
        let cert = r.certificate.unwrap();
        let mu = mixed_throughput(&cert, region.params());
        assert!(mu[0] >= 0.30 - 1e-9 && mu[1] >= 0.30 - 1e-9);

        assert_eq!(inner_membership(&[0.32, 0.32], &region).unwrap().verdict, Membership::Outside);
        assert_eq!(inner_membership(&[0.0, 0.0], &region).unwrap().verdict, Membership::Inside);
        let c2h = c_of_m(&sym(1)[0], 2) / 2.0;
        assert_eq!(inner_membership(&[c2h, c2h], &region).unwrap().verdict, Membership::Boundary);
        assert!(inner_membership(&[0.1], &region).is_err());
    }

    #[test]
    fn outer_membership_examples() {
        assert_eq!(outer_membership(&[0.35, 0.35], &sym(2)).unwrap(), Membership::Inside);
        assert_eq!(outer_membership(&[0.55, 0.0], &sym(2)).unwrap(), Membership::Outside);
        assert_abs_diff_eq!(outer_sum_cap(&asym()), 0.3 / (0.4 * 0.1 + 0.3), epsilon = 1e-15);
        assert_abs_diff_eq!(outer_sum_cap(&asym()), 0.8824, epsilon = 1e-4);
    }

    #[test]
    fn weight_conversion_examples() {
        let params = sym(2);
        assert_abs_diff_eq!(chi(&phi("10"), &params), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(chi(&phi("11"), &params), 5.2, epsilon = 1e-15);
        let beta = MixtureWeights::new(WeightKind::TimeFraction, [(phi("10"), 0.5), (phi("11"), 0.5)]).unwrap();
        let alpha = beta_to_alpha(&beta, &params).unwrap();
        // α1 = χ2 β1 / (χ1 β2 + χ2 β1) = 5.2 / 7.2
        assert_abs_diff_eq!(alpha.get(&phi("10")), 5.2 / 7.2, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha.get(&phi("11")), 2.0 / 7.2, epsilon = 1e-15);
        let back = alpha_to_beta(&alpha, &params).unwrap();
        assert_abs_diff_eq!(back.get(&phi("10")), 0.5, epsilon = 1e-15);

        let eq = MixtureWeights::new(WeightKind::TimeFraction, [(phi("10"), 0.3), (phi("01"), 0.7)]).unwrap();
        let a = beta_to_alpha(&eq, &params).unwrap();
        assert_abs_diff_eq!(a.get(&phi("01")), 0.7, epsilon = 1e-15);

        let point = MixtureWeights::new(WeightKind::TimeFraction, [(phi("11"), 1.0), (phi("10"), 0.0)]).unwrap();
        assert_eq!(beta_to_alpha(&point, &params).unwrap().get(&phi("11")), 1.0);
        assert!(beta_to_alpha(&alpha, &params).is_err());
    }

    #[test]
    fn diversity_examples() {
        let d = |v: Vec<f64>| user_diversity(&DirectionVector::new(v).unwrap()).unwrap();
        assert_eq!(d(vec![1.0, 1.0, 1.0]), 3);
        assert_eq!(d(vec![1.0, 2.0, 1.0]), 2);
        assert_eq!(d(vec![1.0, 0.0, 0.0]), 1);
        assert_eq!(d(vec![1.0, 1.0]), 2);
        assert_eq!(d(vec![1.0, 0.5]), 1);
        assert!(DirectionVector::new(vec![0.0, 0.0]).is_err());
        assert!(DirectionVector::new(vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn guarantee_examples() {
        let g = guaranteed_sum_throughput(&DirectionVector::new(vec![1.0, 2.0, 1.0]).unwrap(), &sym(3)).unwrap();
        assert_eq!(g.diversity, 2);
        assert_abs_diff_eq!(g.sum_throughput, 0.615_384_615, epsilon = 1e-9);
        assert_abs_diff_eq!(g.mixture.get(&phi("110")), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.mixture.get(&phi("011")), 0.5, epsilon = 1e-12);
        let c2 = g.sum_throughput;
        assert_abs_diff_eq!(g.rate[1], c2 / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.rate[0], c2 / 4.0, epsilon = 1e-12);

        let g = guaranteed_sum_throughput(&DirectionVector::new(vec![1.0, 0.0]).unwrap(), &sym(2)).unwrap();
        assert_eq!(g.diversity, 1);
        assert_abs_diff_eq!(g.sum_throughput, 0.5, epsilon = 1e-15);
        assert!(guaranteed_sum_throughput(&DirectionVector::new(vec![1.0, 1.0]).unwrap(), &asym()).is_err());
    }

    #[test]
    fn proximity_and_geometric_gap() {
        let p = sym(2);
        let c2h = c_of_m(&p[0], 2) / 2.0;
        let g = proximity_gap(&DirectionVector::new(vec![1.0, 1.0]).unwrap(), &[c2h, c2h], &p).unwrap();
        assert_abs_diff_eq!(g, (0.2 / 0.28) * 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(g, 0.2571, epsilon = 1e-4);
        assert_abs_diff_eq!(geometric_gap(&p[0], 2), 0.2571, epsilon = 1e-4);
        assert_abs_diff_eq!(geometric_gap(&p[0], 1), 0.4286, epsilon = 1e-4);
        assert!(geometric_gap(&p[0], 500) < 1e-40);
        // Favoured-user limit drives the second term to zero.
        let g = proximity_gap(&DirectionVector::new(vec![1.0, 0.0]).unwrap(), &[0.5, 0.0], &p).unwrap();
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_examples() {
        let region = RegionModel::new(&sym(2)).unwrap();
        let dirs = vec![
            DirectionVector::new(vec![1.0, 1.0]).unwrap(),
            DirectionVector::new(vec![1.0, 0.0]).unwrap(),
            DirectionVector::new(vec![0.0, 1.0]).unwrap(),
        ];
        let rows = boundary_sweep(&region, &dirs).unwrap();
        let c2h = c_of_m(&sym(1)[0], 2) / 2.0;
        let cinf_h = c_infinity(&sym(1)[0]) / 2.0;
        assert_abs_diff_eq!(rows[0].inner[0], c2h, epsilon = 1e-8);
        assert_abs_diff_eq!(rows[0].outer[1], cinf_h, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[1].inner[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(rows[1].outer[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[2].inner[1], rows[1].inner[0], epsilon = 1e-12);
        assert_eq!(rows[2].inner[0], 0.0);

        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# memsched-csv v1\ndir_1,dir_2,inner_1"));
    }
}
