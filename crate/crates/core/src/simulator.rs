//! Slot-level simulation of the downlink.
//!
//! Each slot runs in a fixed order: the policy decides, the served channel's
//! current state decides success and is fed back, beliefs update, queues
//! serve and then receive arrivals, channels step, and finally the policy
//! sees the feedback. Channel evolution, policy randomness and arrivals use
//! separate ChaCha streams derived from one seed, so changing the policy
//! does not perturb the channel sample path.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationVector;
use crate::channel::{BeliefVector, ChannelParams, ChannelState, ChannelStateSample};
use crate::error::{Error, Result};
use crate::policy::{
    qrr_select, PacketKind, PolicySpec, Progress, QrrConfig, RandRrSpec, RateSource, RoundRobinState, SlotAction,
    UntilNackState, UsageClock,
};
use crate::stats;

pub const DEFAULT_HORIZON: u64 = 1_000_000;
pub const DEFAULT_BURN_IN: u64 = 10_000;

const CHANNEL_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;
const ARRIVAL_STREAM: u64 = 3;

/// Per-user backlogs in packets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueVector {
    pub u: Vec<u64>,
}

impl QueueVector {
    pub fn zeros(n: usize) -> Self {
        QueueVector { u: vec![0; n] }
    }

    /// `U_n <- max(U_n - μ_n, 0) + a_n`.
    pub fn update(&mut self, service: &[u64], arrivals: &[u64]) {
        for ((u, s), a) in self.u.iter_mut().zip(service).zip(arrivals) {
            *u = u.saturating_sub(*s) + a;
        }
    }

    pub fn total(&self) -> u64 {
        self.u.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalLaw {
    /// One packet with probability `λ_n`.
    #[default]
    Bernoulli,
    /// `Binomial(a_max, λ_n / a_max)`.
    TruncatedBinomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalConfig {
    pub lambda: Vec<f64>,
    #[serde(default = "one")]
    pub a_max: u32,
    #[serde(default)]
    pub law: ArrivalLaw,
}

fn one() -> u32 {
    1
}

impl ArrivalConfig {
    pub fn bernoulli(lambda: Vec<f64>) -> Self {
        ArrivalConfig { lambda, a_max: 1, law: ArrivalLaw::Bernoulli }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lambda.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.lambda.len() });
        }
        if self.a_max == 0 {
            return Err(Error::Config("a_max must be at least 1".into()));
        }
        if self.law == ArrivalLaw::Bernoulli && self.a_max != 1 {
            return Err(Error::Config("Bernoulli arrivals need a_max = 1".into()));
        }
        for &l in &self.lambda {
            if !l.is_finite() || l < 0.0 || l > self.a_max as f64 {
                return Err(Error::Config(format!("arrival rate {l} outside [0, {}]", self.a_max)));
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u64]) {
        for (a, &l) in out.iter_mut().zip(&self.lambda) {
            *a = match self.law {
                ArrivalLaw::Bernoulli => (rng.gen::<f64>() < l) as u64,
                ArrivalLaw::TruncatedBinomial => {
                    let p = l / self.a_max as f64;
                    (0..self.a_max).filter(|_| rng.gen::<f64>() < p).count() as u64
                }
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Every queue is infinitely backlogged.
    #[default]
    Saturated,
    Queued,
}

/// What a data decision does when the served queue is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyQueue {
    /// Send a null payload; ACK/NACK still arrives.
    #[default]
    PreserveFeedback,
    /// Send nothing; no feedback, and the policy moves on. Beliefs can then
    /// dip below the round-robin floor, so the floor is clamped rather than
    /// asserted in this mode.
    Suppress,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "omega")]
pub enum InitialBelief {
    #[default]
    Stationary,
    Prior(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: Vec<ChannelParams>,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub arrivals: Option<ArrivalConfig>,
    /// Hard-fail on belief-floor, reachable-belief and dwell-accounting
    /// violations instead of counting them.
    pub assertions: bool,
    pub initial: InitialBelief,
    pub empty_queue: EmptyQueue,
    /// Slots between time-series points; 0 disables the series.
    pub series_every: u64,
    /// Number of equal blocks the post-burn-in backlog is averaged over.
    pub backlog_blocks: usize,
    pub record_dwell_sequences: bool,
    /// Stop early once the total backlog exceeds this.
    pub hard_cap: Option<u64>,
}

impl SimConfig {
    pub fn saturated(params: Vec<ChannelParams>, policy: PolicySpec, horizon: u64, seed: u64) -> Self {
        SimConfig {
            params,
            policy,
            horizon,
            burn_in: DEFAULT_BURN_IN.min(horizon / 10),
            seed,
            mode: SimMode::Saturated,
            arrivals: None,
            assertions: true,
            initial: InitialBelief::Stationary,
            empty_queue: EmptyQueue::PreserveFeedback,
            series_every: 0,
            backlog_blocks: 50,
            record_dwell_sequences: false,
            hard_cap: None,
        }
    }

    pub fn queued(params: Vec<ChannelParams>, policy: PolicySpec, arrivals: ArrivalConfig, horizon: u64, seed: u64) -> Self {
        SimConfig { mode: SimMode::Queued, arrivals: Some(arrivals), ..Self::saturated(params, policy, horizon, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.len();
        if n == 0 {
            return Err(Error::Config("at least one channel is required".into()));
        }
        if n > crate::activation::MAX_CHANNELS {
            return Err(Error::TooManyChannels { n, max: crate::activation::MAX_CHANNELS });
        }
        for p in &self.params {
            ChannelParams::new(p.p01(), p.p10())?;
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::Config(format!("burn-in {} must be below the horizon {}", self.burn_in, self.horizon)));
        }
        if self.backlog_blocks < 3 {
            return Err(Error::Config("at least 3 backlog blocks are needed".into()));
        }
        self.policy.validate(n)?;
        if let InitialBelief::Prior(p) = &self.initial {
            BeliefVector::from_prior(p, &self.params)?;
        }
        match (self.mode, &self.arrivals) {
            (SimMode::Queued, None) => return Err(Error::Config("queued mode needs arrivals".into())),
            (SimMode::Queued, Some(a)) => a.validate(n)?,
            (SimMode::Saturated, _) => {
                if matches!(self.policy, PolicySpec::Qrr(_)) {
                    return Err(Error::Config("QRR needs queued mode".into()));
                }
            }
        }
        Ok(())
    }
}

/// One slot of trace output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub slot: u64,
    pub served: Option<usize>,
    pub kind: PacketKind,
    pub states: Vec<ChannelState>,
    pub feedback: Option<ChannelState>,
    pub delivered: bool,
    /// Beliefs at decision time.
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub slot: u64,
    pub total_backlog: u64,
    /// Time-average of the total backlog since the end of burn-in.
    pub running_mean_backlog: f64,
    pub cumulative_delivered: Vec<u64>,
}

/// Visit-length counts; `counts[j - 1]` visits lasted `j` slots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellHistogram {
    pub phi: ActivationVector,
    pub channel: usize,
    pub counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<u64>>,
}

impl DwellHistogram {
    pub fn visits(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn pmf(&self) -> Vec<f64> {
        let v = self.visits() as f64;
        self.counts.iter().map(|&c| c as f64 / v).collect()
    }

    pub fn mean(&self) -> f64 {
        let v = self.visits() as f64;
        self.counts.iter().enumerate().map(|(j, &c)| (j + 1) as f64 * c as f64).sum::<f64>() / v
    }
}

/// Round-level renewal estimates; each completed round is one renewal cycle.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RenewalStats {
    pub rounds: u64,
    pub mean_round_length: f64,
    pub mean_reward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacklogStats {
    /// Time-average total backlog after burn-in.
    pub mean_total: f64,
    pub final_total: u64,
    pub max_total: u64,
    pub block_len: u64,
    /// Mean total backlog over consecutive post-burn-in blocks.
    pub block_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetrics {
    pub policy: String,
    pub seed: u64,
    pub slots_elapsed: u64,
    pub measured_slots: u64,
    /// Packets delivered after burn-in.
    pub delivered: Vec<u64>,
    /// `delivered / measured_slots`.
    pub throughput: Vec<f64>,
    pub sum_throughput: f64,
    pub data_slots: u64,
    pub dummy_slots: u64,
    pub arrivals: Vec<u64>,
    pub backlog: Option<BacklogStats>,
    pub series: Vec<SeriesPoint>,
    pub dwell: Vec<DwellHistogram>,
    pub renewal: RenewalStats,
    pub floor_violations: u64,
    pub accounting_violations: u64,
    pub overflowed: bool,
}

/// Empirical dwell pmf keyed by `(φ, channel)`.
pub fn collect_dwell_histogram(metrics: &SimMetrics) -> BTreeMap<(ActivationVector, usize), Vec<f64>> {
    metrics.dwell.iter().map(|h| ((h.phi, h.channel), h.pmf())).collect()
}

enum RoundSource {
    Fixed(ActivationVector),
    Random(RandRrSpec),
    Qrr(QrrConfig),
}

enum Runner {
    Rounds { source: RoundSource, state: RoundRobinState, clock: UsageClock, started: u64, reward: Vec<u64> },
    UntilNack(UntilNackState),
}

struct Visit {
    channel: usize,
    phi: ActivationVector,
    start: u64,
    len: u64,
    delivered: u64,
}

#[derive(Default)]
struct DwellAcc {
    counts: Vec<u64>,
    sequence: Option<Vec<u64>>,
}

/// Single-threaded simulator instance.
pub struct Simulator<'a> {
    cfg: &'a SimConfig,
    beliefs: BeliefVector,
    channels: ChannelStateSample,
    queues: QueueVector,
    runner: Runner,
    chan_rng: ChaCha8Rng,
    pol_rng: ChaCha8Rng,
    arr_rng: ChaCha8Rng,
    slot: u64,
    visit: Option<Visit>,
    // accumulators
    delivered: Vec<u64>,
    cumulative: Vec<u64>,
    arrivals_total: Vec<u64>,
    data_slots: u64,
    dummy_slots: u64,
    backlog_sum: f64,
    backlog_max: u64,
    block_sum: f64,
    block_means: Vec<f64>,
    series: Vec<SeriesPoint>,
    dwell: BTreeMap<(ActivationVector, usize), DwellAcc>,
    rounds: u64,
    round_len_sum: u64,
    reward_sum: Vec<u64>,
    floor_violations: u64,
    accounting_violations: u64,
    overflowed: bool,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.params.len();
        let params = &cfg.params;
        let mut beliefs = match &cfg.initial {
            InitialBelief::Stationary => BeliefVector::stationary(params),
            InitialBelief::Prior(p) => BeliefVector::from_prior(p, params)?,
        };
        if cfg.assertions {
            beliefs = beliefs.with_tracking(params);
        }
        let mut chan_rng = rng_stream(cfg.seed, CHANNEL_STREAM);
        let channels = ChannelStateSample::from_beliefs(&beliefs, &mut chan_rng);
        let pol_rng = rng_stream(cfg.seed, POLICY_STREAM);
        let queues = QueueVector::zeros(n);
        let ages = vec![None; n];
        let runner = match &cfg.policy {
            PolicySpec::UntilNack { active, order } => {
                let active = match active {
                    Some(a) => *a,
                    None => ActivationVector::all(n)?,
                };
                Runner::UntilNack(UntilNackState::new(active, *order))
            }
            spec => {
                let source = match spec {
                    PolicySpec::Rr { active } => RoundSource::Fixed(*active),
                    PolicySpec::RandRr { weights } => RoundSource::Random(weights.clone()),
                    PolicySpec::Qrr(q) => RoundSource::Qrr(q.clone()),
                    PolicySpec::UntilNack { .. } => unreachable!(),
                };
                // Placeholder round; replaced before the first slot.
                let state = RoundRobinState::new(ActivationVector::all(n)?, ages)?;
                Runner::Rounds { source, state, clock: UsageClock::new(n), started: 0, reward: vec![0; n] }
            }
        };
        let mut sim = Simulator {
            cfg,
            beliefs,
            channels,
            queues,
            runner,
            chan_rng,
            pol_rng,
            arr_rng: rng_stream(cfg.seed, ARRIVAL_STREAM),
            slot: 0,
            visit: None,
            delivered: vec![0; n],
            cumulative: vec![0; n],
            arrivals_total: vec![0; n],
            data_slots: 0,
            dummy_slots: 0,
            backlog_sum: 0.0,
            backlog_max: 0,
            block_sum: 0.0,
            block_means: Vec::new(),
            series: Vec::new(),
            dwell: BTreeMap::new(),
            rounds: 0,
            round_len_sum: 0,
            reward_sum: vec![0; n],
            floor_violations: 0,
            accounting_violations: 0,
            overflowed: false,
        };
        if let Runner::Rounds { .. } = sim.runner {
            sim.start_round()?;
        }
        Ok(sim)
    }

    fn lambda_estimate(&self, q: &QrrConfig) -> Vec<f64> {
        match q.rate_source {
            RateSource::Empirical { warmup } if self.slot >= warmup && self.slot > 0 => {
                self.arrivals_total.iter().map(|&a| a as f64 / self.slot as f64).collect()
            }
            _ => q.lambda.clone(),
        }
    }

    fn start_round(&mut self) -> Result<()> {
        let slot = self.slot;
        let u: Vec<f64> = self.queues.u.iter().map(|&x| x as f64).collect();
        let lambda = match &self.runner {
            Runner::Rounds { source: RoundSource::Qrr(q), .. } => Some(self.lambda_estimate(q)),
            _ => None,
        };
        let params = &self.cfg.params;
        let Runner::Rounds { source, state, clock, started, reward } = &mut self.runner else {
            return Ok(());
        };
        let phi = match source {
            RoundSource::Fixed(a) => *a,
            RoundSource::Random(spec) => spec.sample(&mut self.pol_rng),
            RoundSource::Qrr(_) => qrr_select(&u, lambda.as_deref().unwrap_or(&[]), params).0,
        };
        *state = RoundRobinState::new(phi, clock.ages(slot))?;
        *started = slot;
        reward.iter_mut().for_each(|r| *r = 0);
        Ok(())
    }

    fn end_round(&mut self) {
        let slot = self.slot;
        let burn_in = self.cfg.burn_in;
        if let Runner::Rounds { started, reward, .. } = &self.runner {
            if *started >= burn_in {
                self.rounds += 1;
                self.round_len_sum += slot - *started;
                for (s, r) in self.reward_sum.iter_mut().zip(reward) {
                    *s += r;
                }
            }
        }
    }

    fn close_visit(&mut self) -> Result<()> {
        let Some(v) = self.visit.take() else { return Ok(()) };
        if self.cfg.mode == SimMode::Saturated && v.delivered + 1 != v.len {
            self.accounting_violations += 1;
            if self.cfg.assertions {
                return Err(Error::DwellAccounting { channel: v.channel, dwell: v.len, delivered: v.delivered });
            }
        }
        if v.start >= self.cfg.burn_in {
            let acc = self.dwell.entry((v.phi, v.channel)).or_insert_with(|| DwellAcc {
                counts: Vec::new(),
                sequence: self.cfg.record_dwell_sequences.then(Vec::new),
            });
            let j = v.len as usize;
            if acc.counts.len() < j {
                acc.counts.resize(j, 0);
            }
            acc.counts[j - 1] += 1;
            if let Some(seq) = acc.sequence.as_mut() {
                seq.push(v.len);
            }
        }
        Ok(())
    }

    fn decide(&mut self) -> Result<SlotAction> {
        match &mut self.runner {
            Runner::UntilNack(s) => Ok(s.action()),
            Runner::Rounds { state, .. } => {
                let enforce = self.cfg.assertions && self.cfg.empty_queue == EmptyQueue::PreserveFeedback;
                let (action, violated) = state.decide(&self.beliefs, &self.cfg.params, enforce, &mut self.pol_rng)?;
                self.floor_violations += violated as u64;
                Ok(action)
            }
        }
    }

    /// Advances one slot, reporting it to `observer`.
    pub fn step<F: FnMut(&TraceRecord)>(&mut self, observer: Option<&mut F>) -> Result<()> {
        let cfg = self.cfg;
        let n_ch = cfg.params.len();
        let t = self.slot;
        let measuring = t >= cfg.burn_in;
        let action = self.decide()?;

        let mut feedback = None;
        let mut delivered = false;
        if let Some(n) = action.served {
            let queued = cfg.mode == SimMode::Queued;
            let empty = queued && self.queues.u[n] == 0;
            let suppressed = action.kind == PacketKind::Data && empty && cfg.empty_queue == EmptyQueue::Suppress;
            if !suppressed {
                let state = self.channels.states[n];
                feedback = Some(state);
                delivered = action.kind == PacketKind::Data && state.is_on() && !empty;
            }
            match action.kind {
                PacketKind::Data => self.data_slots += measuring as u64,
                PacketKind::Dummy => self.dummy_slots += measuring as u64,
                PacketKind::None => {}
            }
            match &mut self.visit {
                Some(v) if v.channel == n => {}
                _ => {
                    let phi = match &self.runner {
                        Runner::Rounds { state, .. } => state.phi(),
                        Runner::UntilNack(s) => s.active(),
                    };
                    self.visit = Some(Visit { channel: n, phi, start: t, len: 0, delivered: 0 });
                }
            }
            let v = self.visit.as_mut().expect("visit opened above");
            v.len += 1;
            v.delivered += delivered as u64;
        }

        if let Some(obs) = observer {
            obs(&TraceRecord {
                slot: t,
                served: action.served,
                kind: action.kind,
                states: self.channels.states.clone(),
                feedback,
                delivered,
                omega: self.beliefs.as_slice().to_vec(),
            });
        }

        self.beliefs.update(action.served.zip(feedback), &cfg.params);
        if cfg.assertions {
            self.beliefs.check_reachable(&cfg.params)?;
        }

        let mut service = vec![0u64; n_ch];
        if let Some(n) = action.served {
            if delivered {
                service[n] = 1;
                self.cumulative[n] += 1;
                if measuring {
                    self.delivered[n] += 1;
                }
            }
        }
        if let (SimMode::Queued, Some(arr)) = (cfg.mode, &cfg.arrivals) {
            let mut a = vec![0u64; n_ch];
            arr.sample(&mut self.arr_rng, &mut a);
            for (tot, x) in self.arrivals_total.iter_mut().zip(&a) {
                *tot += x;
            }
            self.queues.update(&service, &a);
        }

        self.channels.step(&cfg.params, &mut self.chan_rng);

        if let Runner::Rounds { clock, reward, .. } = &mut self.runner {
            if let Some(n) = action.served {
                clock.touch(n, t);
                reward[n] += delivered as u64;
            }
        }
        self.slot += 1;

        let progress = match (&mut self.runner, action.served) {
            (_, None) => Progress::Stay,
            (Runner::UntilNack(s), Some(_)) => {
                let prev = s.current();
                match feedback {
                    Some(fb) => s.observe(fb),
                    None => s.skip(),
                };
                if s.current() != prev {
                    Progress::Switched
                } else {
                    Progress::Stay
                }
            }
            (Runner::Rounds { state, .. }, Some(_)) => match feedback {
                Some(fb) => state.observe(fb),
                None => state.skip(),
            },
        };
        if progress != Progress::Stay {
            self.close_visit()?;
        }
        if progress == Progress::RoundEnded {
            self.end_round();
            self.start_round()?;
        }

        let total = self.queues.total();
        if measuring {
            self.backlog_sum += total as f64;
            self.backlog_max = self.backlog_max.max(total);
            self.block_sum += total as f64;
            let block_len = self.block_len();
            if (t + 1 - cfg.burn_in).is_multiple_of(block_len) && self.block_means.len() < cfg.backlog_blocks {
                self.block_means.push(self.block_sum / block_len as f64);
                self.block_sum = 0.0;
            }
        }
        if cfg.series_every > 0 && (t + 1).is_multiple_of(cfg.series_every) {
            let measured = (t + 1).saturating_sub(cfg.burn_in);
            self.series.push(SeriesPoint {
                slot: t + 1,
                total_backlog: total,
                running_mean_backlog: if measured > 0 { self.backlog_sum / measured as f64 } else { 0.0 },
                cumulative_delivered: self.cumulative.clone(),
            });
        }
        if let Some(cap) = cfg.hard_cap {
            if total > cap {
                self.overflowed = true;
            }
        }
        Ok(())
    }

    fn block_len(&self) -> u64 {
        ((self.cfg.horizon - self.cfg.burn_in) / self.cfg.backlog_blocks as u64).max(1)
    }

    pub fn queues(&self) -> &QueueVector {
        &self.queues
    }

    pub fn beliefs(&self) -> &BeliefVector {
        &self.beliefs
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Runs to the horizon (or overflow) and returns the metrics.
    pub fn run<F: FnMut(&TraceRecord)>(mut self, mut observer: Option<F>) -> Result<SimMetrics> {
        while self.slot < self.cfg.horizon && !self.overflowed {
            self.step(observer.as_mut())?;
        }
        Ok(self.finish())
    }

    fn finish(self) -> SimMetrics {
        let cfg = self.cfg;
        let measured = self.slot.saturating_sub(cfg.burn_in);
        let throughput: Vec<f64> =
            self.delivered.iter().map(|&d| if measured > 0 { d as f64 / measured as f64 } else { 0.0 }).collect();
        let sum_throughput = if measured > 0 { self.delivered.iter().sum::<u64>() as f64 / measured as f64 } else { 0.0 };
        let backlog = (cfg.mode == SimMode::Queued).then(|| BacklogStats {
            mean_total: if measured > 0 { self.backlog_sum / measured as f64 } else { 0.0 },
            final_total: self.queues.total(),
            max_total: self.backlog_max,
            block_len: self.block_len(),
            block_means: self.block_means.clone(),
        });
        let renewal = RenewalStats {
            rounds: self.rounds,
            mean_round_length: if self.rounds > 0 { self.round_len_sum as f64 / self.rounds as f64 } else { 0.0 },
            mean_reward: self
                .reward_sum
                .iter()
                .map(|&r| if self.rounds > 0 { r as f64 / self.rounds as f64 } else { 0.0 })
                .collect(),
        };
        let dwell = self
            .dwell
            .into_iter()
            .map(|((phi, channel), acc)| DwellHistogram { phi, channel, counts: acc.counts, sequence: acc.sequence })
            .collect();
        SimMetrics {
            policy: cfg.policy.name().to_string(),
            seed: cfg.seed,
            slots_elapsed: self.slot,
            measured_slots: measured,
            delivered: self.delivered,
            throughput,
            sum_throughput,
            data_slots: self.data_slots,
            dummy_slots: self.dummy_slots,
            arrivals: self.arrivals_total,
            backlog,
            series: self.series,
            dwell,
            renewal,
            floor_violations: self.floor_violations,
            accounting_violations: self.accounting_violations,
            overflowed: self.overflowed,
        }
    }
}

type NoTrace = fn(&TraceRecord);

/// Runs an infinitely backlogged simulation.
pub fn run_saturated(config: &SimConfig) -> Result<SimMetrics> {
    if config.mode != SimMode::Saturated {
        return Err(Error::Config("run_saturated needs saturated mode".into()));
    }
    Simulator::new(config)?.run::<NoTrace>(None)
}

/// Runs a simulation with arrivals and finite queues.
pub fn run_queued(config: &SimConfig) -> Result<SimMetrics> {
    if config.mode != SimMode::Queued {
        return Err(Error::Config("run_queued needs queued mode".into()));
    }
    Simulator::new(config)?.run::<NoTrace>(None)
}

/// Runs in whichever mode the config names.
pub fn run(config: &SimConfig) -> Result<SimMetrics> {
    Simulator::new(config)?.run::<NoTrace>(None)
}

/// Runs and hands every slot to `observer`.
pub fn run_traced(config: &SimConfig, observer: impl FnMut(&TraceRecord)) -> Result<SimMetrics> {
    Simulator::new(config)?.run(Some(observer))
}

/// Operational stability check on the post-burn-in backlog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Running mean of the total backlog at the half-way block.
    pub mid_run_mean: f64,
    /// Average of the running mean over the last tenth of the blocks.
    pub last_decile_mean: f64,
    pub plateau: bool,
    pub slope: stats::SlopeFit,
}

impl StabilityReport {
    pub fn stable(&self) -> bool {
        self.plateau && self.slope.contains_zero()
    }

    pub fn growing(&self) -> bool {
        self.slope.ci.0 > 0.0
    }
}

pub const PLATEAU_TOL: f64 = 0.10;
pub const SLOPE_CONFIDENCE: f64 = 0.99;

pub fn stability_report(backlog: &BacklogStats) -> Option<StabilityReport> {
    let b = &backlog.block_means;
    if b.len() < 10 {
        return None;
    }
    let mut running = Vec::with_capacity(b.len());
    let mut acc = 0.0;
    for (i, m) in b.iter().enumerate() {
        acc += m;
        running.push(acc / (i + 1) as f64);
    }
    let mid_run_mean = running[b.len() / 2 - 1];
    let tail = (b.len() / 10).max(1);
    let last_decile_mean = stats::mean(&running[b.len() - tail..]);
    let plateau = if mid_run_mean == 0.0 {
        last_decile_mean == 0.0
    } else {
        ((last_decile_mean - mid_run_mean) / mid_run_mean).abs() <= PLATEAU_TOL
    };
    let x: Vec<f64> = (0..b.len()).map(|i| (i as f64 + 0.5) * backlog.block_len as f64).collect();
    let slope = if b.iter().all(|&m| m == b[0]) {
        stats::SlopeFit { slope: 0.0, intercept: b[0], std_err: 0.0, ci: (0.0, 0.0), confidence: SLOPE_CONFIDENCE }
    } else {
        stats::ols_slope(&x, b, SLOPE_CONFIDENCE)
    };
    Some(StabilityReport { mid_run_mean, last_decile_mean, plateau, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{c_of_m, eta_vector};
    use crate::policy::OrderVariant;
    use approx::assert_abs_diff_eq;

    fn sym(n: usize) -> Vec<ChannelParams> {
        vec![ChannelParams::new(0.2, 0.2).unwrap(); n]
    }

    #[test]
    fn queue_update_matches_recursion() {
        let mut q = QueueVector::zeros(2);
        let script = [([0, 0], [1, 0]), ([1, 0], [0, 1]), ([1, 1], [0, 0]), ([0, 1], [2, 1])];
        let mut expect = [0u64, 0];
        for (svc, arr) in script {
            for i in 0..2 {
                expect[i] = expect[i].saturating_sub(svc[i]) + arr[i];
            }
            q.update(&svc, &arr);
            assert_eq!(q.u, expect);
        }
        assert_eq!(q.u, vec![2, 1]);
    }

    #[test]
    fn rr2_saturated_throughput() {
        let cfg = SimConfig::saturated(sym(2), PolicySpec::rr_m(2, 2).unwrap(), 1_000_000, 7);
        let m = run_saturated(&cfg).unwrap();
        let target = c_of_m(&sym(1)[0], 2) / 2.0;
        for th in &m.throughput {
            assert!((th - target).abs() < 0.005, "{th} vs {target}");
        }
        assert_eq!(m.floor_violations, 0);
        assert_eq!(m.accounting_violations, 0);
        let exact: u64 = m.delivered.iter().sum();
        assert_eq!(m.sum_throughput, exact as f64 / m.measured_slots as f64);
    }

    #[test]
    fn asymmetric_rr_throughput_and_renewal() {
        let params = vec![ChannelParams::new(0.1, 0.3).unwrap(), ChannelParams::new(0.3, 0.1).unwrap()];
        let cfg = SimConfig::saturated(params.clone(), PolicySpec::rr_m(2, 2).unwrap(), 1_000_000, 11);
        let m = run_saturated(&cfg).unwrap();
        let eta = eta_vector(&"11".parse().unwrap(), &params);
        for (th, e) in m.throughput.iter().zip(&eta) {
            assert!((th - e).abs() < 0.005, "{th} vs {e}");
        }
        let r = &m.renewal;
        for (reward, e) in r.mean_reward.iter().zip(&eta) {
            assert!((reward / r.mean_round_length - e).abs() < 0.005);
        }
    }

    #[test]
    fn until_nack_two_users() {
        let policy = PolicySpec::UntilNack { active: None, order: OrderVariant::Circular };
        let cfg = SimConfig::saturated(sym(2), policy, 1_000_000, 3);
        let m = run_saturated(&cfg).unwrap();
        assert!((m.sum_throughput - 0.65).abs() < 0.01, "{}", m.sum_throughput);
        assert_eq!(m.dummy_slots, 0);
    }

    #[test]
    fn dwell_histogram_rr2() {
        let cfg = SimConfig::saturated(sym(2), PolicySpec::rr_m(2, 2).unwrap(), 1_000_000, 5);
        let m = run_saturated(&cfg).unwrap();
        let h = collect_dwell_histogram(&m);
        let pmf = &h[&("11".parse().unwrap(), 0)];
        assert_abs_diff_eq!(pmf[0], 0.68, epsilon = 0.01);
        assert_abs_diff_eq!(pmf[1], 0.064, epsilon = 0.005);
        assert_abs_diff_eq!(pmf[2], 0.0512, epsilon = 0.005);
    }

    #[test]
    fn zero_arrivals_keep_queues_empty() {
        let policy = PolicySpec::Qrr(QrrConfig::known(vec![0.0, 0.0]));
        let mut cfg = SimConfig::queued(sym(2), policy, ArrivalConfig::bernoulli(vec![0.0, 0.0]), 50_000, 1);
        cfg.series_every = 1000;
        let m = run_queued(&cfg).unwrap();
        let b = m.backlog.as_ref().unwrap();
        assert_eq!(b.max_total, 0);
        assert!(m.series.iter().all(|p| p.total_backlog == 0));
        assert!(stability_report(b).unwrap().stable());
    }

    #[test]
    fn replay_is_deterministic() {
        let spec = RandRrSpec::uniform(3).unwrap();
        let mut cfg = SimConfig::saturated(sym(3), PolicySpec::RandRr { weights: spec }, 100_000, 99);
        cfg.series_every = 10_000;
        let a = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        cfg.seed = 100;
        assert_ne!(a, serde_json::to_string(&run(&cfg).unwrap()).unwrap());
    }

    #[test]
    fn trace_records_every_slot() {
        let cfg = SimConfig::saturated(sym(2), PolicySpec::rr_m(2, 2).unwrap(), 500, 2);
        let mut recs = Vec::new();
        let m = run_traced(&cfg, |r| recs.push(r.clone())).unwrap();
        assert_eq!(recs.len(), 500);
        assert_eq!(m.slots_elapsed, 500);
        for r in &recs {
            let n = r.served.unwrap();
            assert_eq!(r.feedback, Some(r.states[n]));
            assert_eq!(r.delivered, r.kind == PacketKind::Data && r.states[n].is_on());
        }
    }

    #[test]
    fn overflow_guard_stops_early() {
        let policy = PolicySpec::Qrr(QrrConfig::known(vec![0.9, 0.9]));
        let mut cfg = SimConfig::queued(sym(2), policy, ArrivalConfig::bernoulli(vec![0.9, 0.9]), 1_000_000, 4);
        cfg.hard_cap = Some(1000);
        let m = run_queued(&cfg).unwrap();
        assert!(m.overflowed);
        assert!(m.slots_elapsed < 1_000_000);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::saturated(sym(2), PolicySpec::rr_m(2, 2).unwrap(), 0, 0);
        assert!(cfg.validate().is_err());
        cfg.horizon = 100;
        cfg.policy = PolicySpec::Qrr(QrrConfig::known(vec![0.1, 0.1]));
        assert!(cfg.validate().is_err());
        let a = ArrivalConfig { lambda: vec![0.5, 0.5], a_max: 2, law: ArrivalLaw::Bernoulli };
        assert!(a.validate(2).is_err());
    }

    #[test]
    fn suppress_mode_runs_without_floor_assertions() {
        let policy = PolicySpec::Qrr(QrrConfig::known(vec![0.1, 0.1]));
        let mut cfg = SimConfig::queued(sym(2), policy, ArrivalConfig::bernoulli(vec![0.1, 0.1]), 100_000, 8);
        cfg.empty_queue = EmptyQueue::Suppress;
        let m = run_queued(&cfg).unwrap();
        assert!(m.sum_throughput > 0.15);
    }
}
