//! Independent reference computations used to cross-check the simulator
//! and the closed forms: the exact visit-length law, stochastic coupling of
//! dominated Markov chains and binary sequences, the two-mode bounding
//! channel behind the outer bound, and the inductive construction of
//! selection weights from time fractions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activation::ActivationVector;
use crate::capacity::{self, outer_sum_cap, MixtureWeights, RegionModel, WeightKind};
use crate::channel::{is_symmetric, ChannelParams, Mode};
use crate::error::{Error, Result};
use crate::policy::PolicySpec;
use crate::simulator::{self, SimConfig};
use crate::stats;

/// Number of batches behind every batch-means standard error here.
pub const BATCHES: u64 = 50;

/// Exact law of the number of slots a round robin spends on one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellPmf {
    /// `pmf[j - 1] = P(L = j)` for `j = 1..=j_max`.
    pub pmf: Vec<f64>,
    /// `P(L > j_max)`.
    pub tail: f64,
    pub mean: f64,
}

pub fn analytic_dwell_pmf(params: &ChannelParams, m: u32, j_max: usize) -> Result<DwellPmf> {
    if j_max < 2 {
        return Err(Error::Config("j_max must be at least 2".into()));
    }
    let q = params.p01_k(m as u64);
    let mut pmf = Vec::with_capacity(j_max);
    pmf.push(1.0 - q);
    let mut stay = q;
    for _ in 2..=j_max {
        pmf.push(stay * params.p10());
        stay *= params.p11();
    }
    Ok(DwellPmf { pmf, tail: stay, mean: 1.0 + q / params.p10() })
}

fn batch_sigma(batch_sums: &[f64], batch_len: u64) -> f64 {
    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len as f64).collect();
    stats::std_err(&means)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingResult {
    /// Long-run fraction of time the dominated chain spends ON.
    pub pi_y: f64,
    /// Stationary ON probability of the dominating chain.
    pub pi_x: f64,
    /// Batch-means standard error of `pi_y`.
    pub sigma: f64,
    /// Empirical ON fraction of the dominating chain on the same uniforms.
    pub pi_x_empirical: f64,
}

/// Runs a chain `Y` whose transition probabilities `(q01(t), q11(t))` are
/// dominated by the fixed chain `X` with `params`. Both chains consume the
/// same uniforms, so `Y <= X` holds on every path and is asserted.
pub fn coupling_experiment<R: Rng + ?Sized>(
    params: &ChannelParams,
    mut schedule: impl FnMut(u64) -> (f64, f64),
    horizon: u64,
    rng: &mut R,
) -> Result<CouplingResult> {
    if horizon < BATCHES {
        return Err(Error::Config(format!("horizon must be at least {BATCHES}")));
    }
    let batch_len = horizon / BATCHES;
    let mut y = false;
    let mut x = false;
    let mut y_on = 0u64;
    let mut x_on = 0u64;
    let mut batches = vec![0.0; BATCHES as usize];
    let used = batch_len * BATCHES;
    for t in 0..used {
        let (q01, q11) = schedule(t);
        if !(0.0..=1.0).contains(&q01) || !(0.0..=1.0).contains(&q11) {
            return Err(Error::DominanceViolated { step: t, detail: format!("({q01}, {q11}) is not a transition row") });
        }
        if q01 > params.p01() + 1e-15 || q11 > params.p11() + 1e-15 {
            return Err(Error::DominanceViolated {
                step: t,
                detail: format!("Q=({q01}, {q11}) exceeds P=({}, {})", params.p01(), params.p11()),
            });
        }
        let u: f64 = rng.gen();
        y = u < if y { q11 } else { q01 };
        x = u < if x { params.p11() } else { params.p01() };
        if y && !x {
            return Err(Error::DominanceViolated { step: t, detail: "coupled path has Y above X".into() });
        }
        y_on += y as u64;
        x_on += x as u64;
        batches[(t / batch_len) as usize] += y as u64 as f64;
    }
    Ok(CouplingResult {
        pi_y: y_on as f64 / used as f64,
        pi_x: params.pi_on(),
        sigma: batch_sigma(&batches, batch_len),
        pi_x_empirical: x_on as f64 / used as f64,
    })
}

/// Draws `I_n ~ Bernoulli(conditional_p(history))` and an augmented
/// `Î_n >= I_n` that is i.i.d. `Bernoulli(cap)`: when `I_n = 0`, `Î_n = 1`
/// with probability `(cap - p) / (1 - p)`.
pub fn coupled_binary_sampler<R: Rng + ?Sized>(
    mut conditional_p: impl FnMut(&[bool]) -> f64,
    cap: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if !(0.0..=1.0).contains(&cap) {
        return Err(Error::Config(format!("cap {cap} is not a probability")));
    }
    let mut i_seq = Vec::with_capacity(n);
    let mut hat = Vec::with_capacity(n);
    for _ in 0..n {
        let p = conditional_p(&i_seq);
        if !(0.0..=1.0).contains(&p) || p > cap + 1e-15 {
            return Err(Error::AboveCap { p, cap });
        }
        let i = rng.gen::<f64>() < p;
        let h = i || (p < 1.0 && rng.gen::<f64>() < (cap - p) / (1.0 - p));
        assert!(h >= i, "augmented sequence fell below the original");
        i_seq.push(i);
        hat.push(h);
    }
    Ok((i_seq, hat))
}

/// How the bounding-channel experiment picks a channel each slot.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    Fixed(usize),
    /// The channel with the largest `c_{n,∞}`.
    BestFixed,
    /// Repeat this sequence.
    Cycle(Vec<usize>),
    /// I.i.d. draws with these weights.
    Random(Vec<f64>),
    /// Stay on a channel in mode M1; otherwise move to the next one.
    Greedy,
}

impl SelectionRule {
    fn validate(&self, n: usize) -> Result<()> {
        let ok = match self {
            SelectionRule::Fixed(i) => *i < n,
            SelectionRule::Cycle(seq) => !seq.is_empty() && seq.iter().all(|i| *i < n),
            SelectionRule::Random(w) => {
                w.len() == n && w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().sum::<f64>() > 0.0
            }
            SelectionRule::BestFixed | SelectionRule::Greedy => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("selection rule {self:?} does not fit {n} channels")))
        }
    }
}

struct Selector {
    rule: SelectionRule,
    best: usize,
    cum: Vec<f64>,
    pos: usize,
}

impl Selector {
    fn new(rule: SelectionRule, params: &[ChannelParams]) -> Result<Self> {
        rule.validate(params.len())?;
        let best = params
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, p)| if p.c_infinity() > b.1 { (i, p.c_infinity()) } else { b })
            .0;
        let cum = match &rule {
            SelectionRule::Random(w) => {
                let s: f64 = w.iter().sum();
                w.iter()
                    .scan(0.0, |acc, x| {
                        *acc += x / s;
                        Some(*acc)
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(Selector { rule, best, cum, pos: 0 })
    }

    fn pick<R: Rng + ?Sized>(&mut self, t: u64, last_success: bool, rng: &mut R) -> usize {
        let n = self.cum.len().max(1);
        match &self.rule {
            SelectionRule::Fixed(i) => *i,
            SelectionRule::BestFixed => self.best,
            SelectionRule::Cycle(seq) => seq[(t % seq.len() as u64) as usize],
            SelectionRule::Random(_) => {
                let u: f64 = rng.gen();
                self.cum.partition_point(|&c| c <= u).min(n - 1)
            }
            SelectionRule::Greedy => {
                if t > 0 && !last_success {
                    self.pos += 1;
                }
                self.pos
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FictitiousResult {
    pub sum_throughput: f64,
    pub per_channel: Vec<f64>,
    /// Batch-means standard error of the sum throughput.
    pub sigma: f64,
}

/// Success probability of a bounding channel in `mode`.
fn mode_success(params: &ChannelParams, mode: Mode) -> f64 {
    match mode {
        Mode::M1 => params.p11(),
        Mode::M2 => params.pi_on(),
    }
}

/// Simulates the two-mode bounding channels directly: a served channel in
/// M1 succeeds with `p11`, in M2 with `π_ON`; success moves it to M1 and
/// failure to M2; idle channels keep their mode. All channels start in M2.
pub fn fictitious_channel_sim<R: Rng + ?Sized>(
    params: &[ChannelParams],
    rule: SelectionRule,
    horizon: u64,
    rng: &mut R,
) -> Result<FictitiousResult> {
    if horizon < BATCHES {
        return Err(Error::Config(format!("horizon must be at least {BATCHES}")));
    }
    let n = params.len();
    let mut sel = Selector::new(rule, params)?;
    let greedy = matches!(sel.rule, SelectionRule::Greedy);
    let mut modes = vec![Mode::M2; n];
    let mut succ = vec![0u64; n];
    let batch_len = horizon / BATCHES;
    let used = batch_len * BATCHES;
    let mut batches = vec![0.0; BATCHES as usize];
    let mut last = false;
    for t in 0..used {
        let mut c = sel.pick(t, last, rng);
        if greedy {
            c %= n;
        }
        let ok = rng.gen::<f64>() < mode_success(&params[c], modes[c]);
        modes[c] = if ok { Mode::M1 } else { Mode::M2 };
        succ[c] += ok as u64;
        batches[(t / batch_len) as usize] += ok as u64 as f64;
        last = ok;
    }
    Ok(FictitiousResult {
        sum_throughput: succ.iter().sum::<u64>() as f64 / used as f64,
        per_channel: succ.iter().map(|&s| s as f64 / used as f64).collect(),
        sigma: batch_sigma(&batches, batch_len),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealVsFictitious {
    pub real: Vec<f64>,
    pub fictitious: Vec<f64>,
    /// Per-channel batch-means standard error of the real throughput.
    pub sigma: Vec<f64>,
}

/// Drives the real channels (success with probability equal to the
/// current belief) and the bounding channels with the same selection
/// sequence and the same uniforms.
pub fn real_vs_fictitious<R: Rng + ?Sized>(
    params: &[ChannelParams],
    rule: SelectionRule,
    horizon: u64,
    rng: &mut R,
) -> Result<RealVsFictitious> {
    if horizon < BATCHES {
        return Err(Error::Config(format!("horizon must be at least {BATCHES}")));
    }
    let n = params.len();
    let mut sel = Selector::new(rule, params)?;
    let greedy = matches!(sel.rule, SelectionRule::Greedy);
    let mut omega: Vec<f64> = params.iter().map(|p| p.pi_on()).collect();
    let mut modes = vec![Mode::M2; n];
    let mut real = vec![0u64; n];
    let mut fict = vec![0u64; n];
    let batch_len = horizon / BATCHES;
    let used = batch_len * BATCHES;
    let mut batches = vec![vec![0.0; BATCHES as usize]; n];
    let mut last = false;
    for t in 0..used {
        let mut c = sel.pick(t, last, rng);
        if greedy {
            c %= n;
        }
        let u: f64 = rng.gen();
        let r_ok = u < omega[c];
        let f_ok = u < mode_success(&params[c], modes[c]);
        for (k, (w, p)) in omega.iter_mut().zip(params).enumerate() {
            *w = if k == c {
                if r_ok {
                    p.p11()
                } else {
                    p.p01()
                }
            } else {
                p.idle_update(*w)
            };
        }
        modes[c] = if f_ok { Mode::M1 } else { Mode::M2 };
        real[c] += r_ok as u64;
        fict[c] += f_ok as u64;
        batches[c][(t / batch_len) as usize] += r_ok as u64 as f64;
        last = r_ok;
    }
    Ok(RealVsFictitious {
        real: real.iter().map(|&s| s as f64 / used as f64).collect(),
        fictitious: fict.iter().map(|&s| s as f64 / used as f64).collect(),
        sigma: batches.iter().map(|b| batch_sigma(b, batch_len)).collect(),
    })
}

/// Selection weights from time fractions by the inductive construction:
/// solve the problem for entries `2..K` with renormalized `β`, then
/// `α_1 = β_1 S / (χ_1 (1 - β_1) + β_1 S)` with `S = Σ γ_k χ_k`, and scale
/// the rest by `1 - α_1`. Zero entries of `β` get `α = 0`.
pub fn recursive_beta_to_alpha(beta: &[f64], chi: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != chi.len() || beta.is_empty() {
        return Err(Error::DimensionMismatch { expected: chi.len(), got: beta.len() });
    }
    if beta.iter().any(|b| !b.is_finite() || *b < 0.0) || chi.iter().any(|c| c.is_nan() || *c <= 0.0) {
        return Err(Error::InvalidWeights("β must be nonnegative and χ positive".into()));
    }
    let support: Vec<usize> = (0..beta.len()).filter(|&i| beta[i] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidWeights("β has no positive entry".into()));
    }
    let total: f64 = support.iter().map(|&i| beta[i]).sum();
    let b: Vec<f64> = support.iter().map(|&i| beta[i] / total).collect();
    let c: Vec<f64> = support.iter().map(|&i| chi[i]).collect();
    let a = recurse(&b, &c);
    let mut alpha = vec![0.0; beta.len()];
    for (k, &i) in support.iter().enumerate() {
        alpha[i] = a[k];
    }
    Ok(alpha)
}

fn recurse(beta: &[f64], chi: &[f64]) -> Vec<f64> {
    if beta.len() == 1 {
        return vec![1.0];
    }
    let b1 = beta[0];
    let rest: Vec<f64> = beta[1..].iter().map(|b| b / (1.0 - b1)).collect();
    let gamma = recurse(&rest, &chi[1..]);
    let s: f64 = gamma.iter().zip(&chi[1..]).map(|(g, c)| g * c).sum();
    let a1 = b1 * s / (chi[0] * (1.0 - b1) + b1 * s);
    let mut alpha = Vec::with_capacity(beta.len());
    alpha.push(a1);
    alpha.extend(gamma.iter().map(|g| (1.0 - a1) * g));
    alpha
}

/// Largest violation of `β_k = α_k χ_k / Σ_j α_j χ_j`.
pub fn fixed_point_residual(alpha: &[f64], beta: &[f64], chi: &[f64]) -> f64 {
    let s: f64 = alpha.iter().zip(chi).map(|(a, c)| a * c).sum();
    alpha.iter().zip(chi).zip(beta).map(|((a, c), b)| (a * c / s - b).abs()).fold(0.0, f64::max)
}

/// One line of an oracle report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub experiment: String,
    pub statistic: f64,
    pub bound: f64,
    pub pass: bool,
}

impl VerdictRecord {
    /// Passes when `statistic <= bound`.
    pub fn at_most(experiment: impl Into<String>, statistic: f64, bound: f64) -> Self {
        VerdictRecord { experiment: experiment.into(), statistic, bound, pass: statistic <= bound }
    }
}

pub type CmFn = fn(&ChannelParams, u32) -> f64;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub params: Vec<ChannelParams>,
    pub seed: u64,
    pub quick: bool,
    /// Closed form under test; swapped out by the harness self-test.
    pub c_m: CmFn,
}

impl VerifyOptions {
    pub fn new(params: Vec<ChannelParams>, seed: u64, quick: bool) -> Self {
        VerifyOptions { params, seed, quick, c_m: capacity::c_of_m }
    }

    pub fn horizon(&self) -> u64 {
        if self.quick {
            100_000
        } else {
            1_000_000
        }
    }

    /// Slack multiplier on absolute tolerances.
    fn slack(&self) -> f64 {
        if self.quick {
            3.0
        } else {
            1.0
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Runs every oracle plus the simulator-versus-closed-form checks.
pub fn run_verify_suite(opts: &VerifyOptions) -> Result<Vec<VerdictRecord>> {
    let params = &opts.params;
    let n = params.len();
    let horizon = opts.horizon();
    let slack = opts.slack();
    let mut out = Vec::new();

    // Closed forms against each other and against simulation.
    if is_symmetric(params) {
        let p = params[0];
        for m in 1..=n as u32 {
            let via_eta: f64 = capacity::eta_vector(&ActivationVector::first(m as usize, n)?, params).iter().sum();
            out.push(VerdictRecord::at_most(format!("closed-form-c_M/M={m}"), (via_eta - (opts.c_m)(&p, m)).abs(), 1e-12));
        }
        for m in 1..=n.min(2) as u32 {
            let mut cfg = SimConfig::saturated(params.clone(), PolicySpec::rr_m(m as usize, n)?, horizon, opts.seed);
            cfg.burn_in = horizon / 100;
            let metrics = simulator::run_saturated(&cfg)?;
            out.push(VerdictRecord::at_most(
                format!("rr-sum-throughput/M={m}"),
                (metrics.sum_throughput - (opts.c_m)(&p, m)).abs(),
                0.005 * slack,
            ));
        }
        for m in [1u32, 2, 8, 64] {
            let gap = capacity::c_infinity(&p) - (opts.c_m)(&p, m);
            out.push(VerdictRecord::at_most(format!("geometric-gap/M={m}"), gap, capacity::geometric_gap(&p, m) + 1e-15));
        }
    }

    // Per-channel throughput of RR over all channels.
    {
        let mut cfg = SimConfig::saturated(params.clone(), PolicySpec::rr_m(n, n)?, horizon, opts.seed);
        cfg.burn_in = horizon / 100;
        let metrics = simulator::run_saturated(&cfg)?;
        let eta = capacity::eta_vector(&ActivationVector::all(n)?, params);
        let err = metrics.throughput.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.push(VerdictRecord::at_most("rr-eta-per-channel", err, 0.005 * slack));
        out.push(VerdictRecord::at_most("dwell-accounting", metrics.accounting_violations as f64, 0.0));

        let pmfs = simulator::collect_dwell_histogram(&metrics);
        let mut worst: f64 = 0.0;
        for ((phi, ch), emp) in &pmfs {
            let exact = analytic_dwell_pmf(&params[*ch], phi.count(), emp.len().max(2))?;
            let mut exact_pmf = exact.pmf.clone();
            *exact_pmf.last_mut().expect("nonempty") += exact.tail;
            worst = worst.max(stats::tv_distance(emp, &exact_pmf));
        }
        out.push(VerdictRecord::at_most("dwell-pmf-tv", worst, 0.01 * slack));
    }

    // Belief floor under randomized rounds.
    {
        let mut r = rng(opts.seed, 10);
        let k = (1u64 << n) - 1;
        let raw: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let spec = crate::policy::RandRrSpec::new(ActivationVector::enumerate(n).zip(raw.iter().map(|w| w / s)))?;
        let mut cfg = SimConfig::saturated(params.clone(), PolicySpec::RandRr { weights: spec }, horizon, opts.seed);
        cfg.assertions = false;
        let metrics = simulator::run_saturated(&cfg)?;
        out.push(VerdictRecord::at_most("randrr-belief-floor", metrics.floor_violations as f64, 0.0));
    }

    // Coupling of dominated chains.
    for (i, p) in params.iter().enumerate() {
        let mut r = rng(opts.seed, 20 + i as u64);
        let same = coupling_experiment(p, |_| (p.p01(), p.p11()), horizon, &mut r)?;
        out.push(VerdictRecord::at_most(
            format!("coupling-equal/ch={i}"),
            (same.pi_y - same.pi_x).abs(),
            3.0 * same.sigma + 1e-3 * slack,
        ));
        let (a, b) = ((0.5 * p.p01(), 0.9 * p.p11()), (p.p01(), 0.5 * p.p11()));
        let alt = coupling_experiment(p, |t| if (t / 7) % 2 == 0 { a } else { b }, horizon, &mut r)?;
        out.push(VerdictRecord::at_most(format!("coupling-dominated/ch={i}"), alt.pi_y, alt.pi_x + 3.0 * alt.sigma));
    }

    // Binary sequence coupling.
    {
        let mut r = rng(opts.seed, 30);
        let draws = (horizon / 10).max(10_000) as usize;
        let (i_seq, hat) = coupled_binary_sampler(
            |h: &[bool]| if h.last() == Some(&true) { 0.1 } else { 0.25 },
            0.3,
            draws,
            &mut r,
        )?;
        let broken = i_seq.iter().zip(&hat).filter(|(a, b)| **a && !**b).count();
        out.push(VerdictRecord::at_most("binary-coupling-dominance", broken as f64, 0.0));
        let marginal = hat.iter().filter(|b| **b).count() as f64 / draws as f64;
        out.push(VerdictRecord::at_most("binary-coupling-marginal", (marginal - 0.3).abs(), 0.01 * slack));
        let chi2 = stats::pair_independence_chi2(&hat);
        out.push(VerdictRecord::at_most("binary-coupling-lag-independence", chi2, 10.83));
    }

    // Bounding channels.
    {
        let cap = outer_sum_cap(params);
        let mut r = rng(opts.seed, 40);
        let best = fictitious_channel_sim(params, SelectionRule::BestFixed, horizon, &mut r)?;
        out.push(VerdictRecord::at_most("fictitious-best-fixed", (best.sum_throughput - cap).abs(), 0.005 * slack));
        let cyc: Vec<usize> = (0..n).flat_map(|i| [i, i]).collect();
        for (name, rule) in [
            ("cycle", SelectionRule::Cycle(cyc)),
            ("random", SelectionRule::Random(vec![1.0; n])),
            ("greedy", SelectionRule::Greedy),
        ] {
            let res = fictitious_channel_sim(params, rule.clone(), horizon, &mut r)?;
            out.push(VerdictRecord::at_most(format!("fictitious-bound/{name}"), res.sum_throughput, cap + 3.0 * res.sigma));
            let rv = real_vs_fictitious(params, rule, horizon, &mut r)?;
            let worst = rv
                .real
                .iter()
                .zip(&rv.fictitious)
                .zip(&rv.sigma)
                .map(|((r, f), s)| r - f - 3.0 * s)
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(VerdictRecord::at_most(format!("real-below-fictitious/{name}"), worst, 0.0));
        }
    }

    // Weight conversion.
    if n <= capacity::MAX_REGION_CHANNELS {
        let mut r = rng(opts.seed, 50);
        let phis: Vec<ActivationVector> = ActivationVector::enumerate(n).collect();
        let chi: Vec<f64> = phis.iter().map(|a| capacity::chi(a, params)).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let raw: Vec<f64> = phis.iter().map(|_| if r.gen_bool(0.2) { 0.0 } else { r.gen::<f64>() }).collect();
            let s: f64 = raw.iter().sum();
            if s == 0.0 {
                continue;
            }
            let beta: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let rec = recursive_beta_to_alpha(&beta, &chi)?;
            let mw = MixtureWeights::new(WeightKind::TimeFraction, phis.iter().copied().zip(beta.iter().copied()))?;
            let closed = capacity::beta_to_alpha(&mw, params)?;
            for (k, phi) in phis.iter().enumerate() {
                worst = worst.max((rec[k] - closed.get(phi)).abs());
            }
            worst = worst.max(fixed_point_residual(&rec, &beta, &chi));
        }
        out.push(VerdictRecord::at_most("weights-recursive-vs-closed", worst, 1e-12));

        let region = RegionModel::new(params)?;
        let mut excess: f64 = f64::NEG_INFINITY;
        for (_, eta) in region.vertices() {
            let per = eta.iter().zip(region.pi_on()).map(|(e, p)| e - p).fold(f64::NEG_INFINITY, f64::max);
            let sum = eta.iter().sum::<f64>() - region.sum_cap();
            excess = excess.max(per).max(sum);
        }
        out.push(VerdictRecord::at_most("vertices-inside-outer-bound", excess, 1e-12));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sym() -> ChannelParams {
        ChannelParams::new(0.2, 0.2).unwrap()
    }

    #[test]
    fn dwell_pmf_examples() {
        let d = analytic_dwell_pmf(&sym(), 2, 200).unwrap();
        assert_abs_diff_eq!(d.mean, 2.6, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pmf[0], 0.68, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pmf[1], 0.064, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pmf[2], 0.0512, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pmf.iter().sum::<f64>() + d.tail, 1.0, epsilon = 1e-14);
        let mean: f64 = d.pmf.iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum();
        assert_abs_diff_eq!(mean, 2.6, epsilon = 1e-12);
        let d = analytic_dwell_pmf(&sym(), 1, 5).unwrap();
        assert_abs_diff_eq!(d.pmf[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mean, 2.0, epsilon = 1e-15);
        assert!(analytic_dwell_pmf(&sym(), 1, 1).is_err());
    }

    #[test]
    fn coupling_examples() {
        let p = sym();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let res = coupling_experiment(&p, |_| (0.2, 0.8), 1_000_000, &mut r).unwrap();
        assert!((res.pi_y - 0.5).abs() < 3.0 * res.sigma + 1e-3);
        assert_eq!(res.pi_y, res.pi_x_empirical);
        let res = coupling_experiment(&p, |_| (0.1, 0.7), 1_000_000, &mut r).unwrap();
        assert_abs_diff_eq!(res.pi_y, 0.25, epsilon = 0.005);
        let err = coupling_experiment(&p, |t| if t == 10 { (0.3, 0.5) } else { (0.1, 0.5) }, 1000, &mut r);
        assert!(matches!(err, Err(Error::DominanceViolated { step: 10, .. })));
    }

    #[test]
    fn binary_sampler_examples() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let (i, h) = coupled_binary_sampler(|_| 0.3, 0.3, 10_000, &mut r).unwrap();
        assert_eq!(i, h);
        let (i, h) = coupled_binary_sampler(|_| 0.0, 0.3, 100_000, &mut r).unwrap();
        assert!(i.iter().all(|b| !b));
        let f = h.iter().filter(|b| **b).count() as f64 / 1e5;
        assert_abs_diff_eq!(f, 0.3, epsilon = 0.01);
        assert!(matches!(coupled_binary_sampler(|_| 0.5, 0.3, 10, &mut r), Err(Error::AboveCap { .. })));
    }

    #[test]
    fn fictitious_examples() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let res = fictitious_channel_sim(&[sym(), sym()], SelectionRule::Fixed(0), 1_000_000, &mut r).unwrap();
        assert_abs_diff_eq!(res.sum_throughput, 0.5 / 0.7, epsilon = 0.005);
        let asym = [ChannelParams::new(0.1, 0.3).unwrap(), ChannelParams::new(0.3, 0.1).unwrap()];
        let res = fictitious_channel_sim(&asym, SelectionRule::BestFixed, 1_000_000, &mut r).unwrap();
        assert_abs_diff_eq!(res.sum_throughput, 0.8824, epsilon = 0.005);
        let rv = real_vs_fictitious(&asym, SelectionRule::Cycle(vec![0, 1, 1]), 200_000, &mut r).unwrap();
        for (a, b) in rv.real.iter().zip(&rv.fictitious) {
            assert!(a <= b);
        }
    }

    #[test]
    fn recursive_weights_examples() {
        let a = recursive_beta_to_alpha(&[0.5, 0.5], &[2.0, 5.2]).unwrap();
        assert_abs_diff_eq!(a[0], 5.2 * 0.5 / (2.0 * 0.5 + 5.2 * 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(a[0], 0.7222, epsilon = 1e-4);
        assert_eq!(recursive_beta_to_alpha(&[1.0], &[3.0]).unwrap(), vec![1.0]);
        let a = recursive_beta_to_alpha(&[0.0, 0.4, 0.6], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a[0], 0.0);
        assert!(fixed_point_residual(&a, &[0.0, 0.4, 0.6], &[1.0, 2.0, 3.0]) < 1e-15);
    }

    #[test]
    fn quick_suite_passes_and_corruption_is_named() {
        let params = vec![sym(); 2];
        let verdicts = run_verify_suite(&VerifyOptions::new(params.clone(), 1, true)).unwrap();
        let failed: Vec<_> = verdicts.iter().filter(|v| !v.pass).collect();
        assert!(failed.is_empty(), "{failed:?}");

        fn corrupted(p: &ChannelParams, m: u32) -> f64 {
            capacity::c_of_m(p, m) * 1.05
        }
        let mut opts = VerifyOptions::new(params, 1, true);
        opts.c_m = corrupted;
        let verdicts = run_verify_suite(&opts).unwrap();
        assert!(verdicts.iter().any(|v| !v.pass && v.experiment == "closed-form-c_M/M=2"));
    }
}
