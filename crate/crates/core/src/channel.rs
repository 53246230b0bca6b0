//! Markov ON/OFF channels and the belief (information state) each channel
//! carries when it is only observed through ACK/NACK feedback.
//!
//! A channel is a two-state chain with `P(OFF→ON) = p01` and
//! `P(ON→OFF) = p10`. Only positively correlated chains are accepted:
//! `0 < p01`, `0 < p10` and `x = p01 + p10 < 1`. Under that assumption the
//! k-step matrix has the closed form
//!
//! ```text
//! P^(k) = 1/x * [ p10 + p01 (1-x)^k    p01 (1 - (1-x)^k) ]
//!               [ p10 (1 - (1-x)^k)    p01 + p10 (1-x)^k ]
//! ```
//!
//! and every reachable belief is one of `P01^(k)`, `P11^(k)` or `π_ON`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for probability invariants.
pub const PROB_TOL: f64 = 1e-12;

/// Instantaneous state of a channel in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelState {
    Off,
    On,
}

impl ChannelState {
    pub fn is_on(self) -> bool {
        self == ChannelState::On
    }

    pub fn from_on(on: bool) -> Self {
        if on {
            ChannelState::On
        } else {
            ChannelState::Off
        }
    }
}

/// A 2x2 row-stochastic matrix over `{OFF, ON}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl TransitionMatrix {
    pub fn mul(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        TransitionMatrix {
            p00: self.p00 * rhs.p00 + self.p01 * rhs.p10,
            p01: self.p00 * rhs.p01 + self.p01 * rhs.p11,
            p10: self.p10 * rhs.p00 + self.p11 * rhs.p10,
            p11: self.p10 * rhs.p01 + self.p11 * rhs.p11,
        }
    }

    /// Probability of being ON next, given the current state.
    pub fn to_on(&self, from: ChannelState) -> f64 {
        match from {
            ChannelState::Off => self.p01,
            ChannelState::On => self.p11,
        }
    }
}

/// Transition parameters of one positively correlated ON/OFF channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    p01: f64,
    p10: f64,
}

impl ChannelParams {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        let bad = |reason| Err(Error::InvalidChannel { p01, p10, reason });
        if !(p01.is_finite() && p10.is_finite()) {
            return bad("probabilities must be finite");
        }
        if p01 <= 0.0 || p10 <= 0.0 {
            return bad("p01 and p10 must be strictly positive");
        }
        if p01 + p10 >= 1.0 {
            return bad("p01 + p10 must be < 1 (positively correlated channel)");
        }
        Ok(ChannelParams { p01, p10 })
    }

    /// Builds parameters without the ergodicity and correlation checks.
    ///
    /// Only the sampler is meaningful for such values; the closed forms
    /// divide by `x` and `p10`.
    pub fn new_unchecked(p01: f64, p10: f64) -> Self {
        ChannelParams { p01, p10 }
    }

    pub fn symmetric_pair(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p10(&self) -> f64 {
        self.p10
    }

    pub fn p11(&self) -> f64 {
        1.0 - self.p10
    }

    pub fn p00(&self) -> f64 {
        1.0 - self.p01
    }

    /// `x = p01 + p10`.
    pub fn x(&self) -> f64 {
        self.p01 + self.p10
    }

    pub fn pi_on(&self) -> f64 {
        self.p01 / self.x()
    }

    pub fn one_step(&self) -> TransitionMatrix {
        TransitionMatrix { p00: self.p00(), p01: self.p01, p10: self.p10, p11: self.p11() }
    }

    /// `(1-x)^k`, the decaying eigenvalue power.
    pub fn decay(&self, k: u64) -> f64 {
        let base = 1.0 - self.x();
        if k <= i32::MAX as u64 {
            base.powi(k as i32)
        } else {
            0.0
        }
    }

    /// Closed-form k-step transition matrix; `k = 0` is rejected.
    pub fn k_step(&self, k: u64) -> Result<TransitionMatrix> {
        if k == 0 {
            return Err(Error::ZeroStep);
        }
        Ok(self.k_step_unchecked(k))
    }

    fn k_step_unchecked(&self, k: u64) -> TransitionMatrix {
        let x = self.x();
        let d = self.decay(k);
        TransitionMatrix {
            p00: (self.p10 + self.p01 * d) / x,
            p01: self.p01 * (1.0 - d) / x,
            p10: self.p10 * (1.0 - d) / x,
            p11: (self.p01 + self.p10 * d) / x,
        }
    }

    /// `P01^(k)`; requires `k >= 1`.
    pub fn p01_k(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        self.p01 * (1.0 - self.decay(k)) / self.x()
    }

    /// `P11^(k)`; requires `k >= 1`.
    pub fn p11_k(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        (self.p01 + self.p10 * self.decay(k)) / self.x()
    }

    /// Expected dwell of a round-robin visit when `m` channels share the
    /// round: `1 + P01^(m) / p10`.
    pub fn mean_dwell(&self, m: u32) -> f64 {
        1.0 + self.p01_k(m as u64) / self.p10
    }

    /// Best-arm reward rate of the bounding two-mode chain,
    /// `p01 / (x p10 + p01)`.
    pub fn c_infinity(&self) -> f64 {
        self.p01 / (self.x() * self.p10 + self.p01)
    }

    /// Channel n's belief after one idle slot.
    pub fn idle_update(&self, omega: f64) -> f64 {
        omega * self.p11() + (1.0 - omega) * self.p01
    }

    /// Samples the state in the next slot.
    pub fn sample_next<R: Rng + ?Sized>(&self, current: ChannelState, rng: &mut R) -> ChannelState {
        let p_on = match current {
            ChannelState::Off => self.p01,
            ChannelState::On => self.p11(),
        };
        ChannelState::from_on(rng.gen::<f64>() < p_on)
    }

    /// Checks that `omega` lies in `[p01, p11]`.
    pub fn check_belief(&self, channel: usize, omega: f64) -> Result<()> {
        if omega < self.p01 - PROB_TOL || omega > self.p11() + PROB_TOL || omega.is_nan() {
            return Err(Error::BeliefOutOfRange { channel, omega, lo: self.p01, hi: self.p11() });
        }
        Ok(())
    }
}

/// True when all channels share the same parameters (within [`PROB_TOL`]).
pub fn is_symmetric(params: &[ChannelParams]) -> bool {
    params.windows(2).all(|w| {
        (w[0].p01 - w[1].p01).abs() <= PROB_TOL && (w[0].p10 - w[1].p10).abs() <= PROB_TOL
    })
}

/// Coarse classification of a belief used by the outer-bound argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Last observed ON: belief in `(π_ON, p11]`.
    M1,
    /// Last observed OFF (or never observed): belief in `[p01, π_ON]`.
    M2,
}

pub fn mode_of(omega: f64, params: &ChannelParams) -> Result<Mode> {
    params.check_belief(0, omega)?;
    if omega > params.pi_on() {
        Ok(Mode::M1)
    } else {
        Ok(Mode::M2)
    }
}

/// Where a belief value came from; `Observed { state, age }` means the
/// belief equals `P_{state,1}^(age)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Stationary,
    Observed { state: ChannelState, age: u64 },
    Prior,
}

/// Per-channel conditional ON probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    omega: Vec<f64>,
    provenance: Option<Vec<Provenance>>,
}

impl BeliefVector {
    /// All channels at their stationary ON probability.
    pub fn stationary(params: &[ChannelParams]) -> Self {
        BeliefVector { omega: params.iter().map(|p| p.pi_on()).collect(), provenance: None }
    }

    /// Arbitrary prior; each entry must lie in `[p01, p11]`.
    pub fn from_prior(prior: &[f64], params: &[ChannelParams]) -> Result<Self> {
        if prior.len() != params.len() {
            return Err(Error::DimensionMismatch { expected: params.len(), got: prior.len() });
        }
        for (n, (&w, p)) in prior.iter().zip(params).enumerate() {
            p.check_belief(n, w)?;
        }
        Ok(BeliefVector { omega: prior.to_vec(), provenance: None })
    }

    /// Enables tracking of (last observed state, slots since) so that
    /// [`check_reachable`](Self::check_reachable) can verify every entry.
    pub fn with_tracking(mut self, params: &[ChannelParams]) -> Self {
        let prov = self
            .omega
            .iter()
            .zip(params)
            .map(|(&w, p)| {
                if (w - p.pi_on()).abs() <= PROB_TOL {
                    Provenance::Stationary
                } else {
                    Provenance::Prior
                }
            })
            .collect();
        self.provenance = Some(prov);
        self
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.omega[n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }

    pub fn provenance(&self) -> Option<&[Provenance]> {
        self.provenance.as_deref()
    }

    /// Applies one slot of feedback. `observed` carries the served channel
    /// and the state revealed by its ACK/NACK; every other channel takes
    /// the idle step.
    pub fn update(&mut self, observed: Option<(usize, ChannelState)>, params: &[ChannelParams]) {
        for (n, (w, p)) in self.omega.iter_mut().zip(params).enumerate() {
            match observed {
                Some((served, state)) if served == n => {
                    *w = match state {
                        ChannelState::Off => p.p01(),
                        ChannelState::On => p.p11(),
                    };
                }
                _ => *w = p.idle_update(*w),
            }
        }
        if let Some(prov) = self.provenance.as_mut() {
            for (n, pv) in prov.iter_mut().enumerate() {
                *pv = match (observed, *pv) {
                    (Some((served, state)), _) if served == n => Provenance::Observed { state, age: 1 },
                    (_, Provenance::Observed { state, age }) => {
                        Provenance::Observed { state, age: age.saturating_add(1) }
                    }
                    (_, other) => other,
                };
            }
        }
    }

    /// Verifies range and, when tracking is on, membership in the
    /// countable set of reachable beliefs.
    pub fn check_reachable(&self, params: &[ChannelParams]) -> Result<()> {
        for (n, (&w, p)) in self.omega.iter().zip(params).enumerate() {
            p.check_belief(n, w)?;
        }
        let Some(prov) = &self.provenance else { return Ok(()) };
        for (n, ((&w, p), pv)) in self.omega.iter().zip(params).zip(prov).enumerate() {
            let expected = match *pv {
                Provenance::Stationary => p.pi_on(),
                Provenance::Observed { state: ChannelState::Off, age } => p.p01_k(age),
                Provenance::Observed { state: ChannelState::On, age } => p.p11_k(age),
                Provenance::Prior => continue,
            };
            // The iterated idle map and the closed form agree up to a few ulps.
            if (w - expected).abs() > 1e-12 {
                return Err(Error::UnreachableBelief { channel: n, omega: w, expected });
            }
        }
        Ok(())
    }
}

/// Joint channel state for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelStateSample {
    pub states: Vec<ChannelState>,
}

impl ChannelStateSample {
    /// Draws each channel ON with the matching belief; with stationary
    /// beliefs this is the stationary distribution.
    pub fn from_beliefs<R: Rng + ?Sized>(beliefs: &BeliefVector, rng: &mut R) -> Self {
        let states =
            beliefs.as_slice().iter().map(|&w| ChannelState::from_on(rng.gen::<f64>() < w)).collect();
        ChannelStateSample { states }
    }

    pub fn all(state: ChannelState, n: usize) -> Self {
        ChannelStateSample { states: vec![state; n] }
    }

    /// Advances every channel one slot, independently.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &[ChannelParams], rng: &mut R) {
        for (s, p) in self.states.iter_mut().zip(params) {
            *s = p.sample_next(*s, rng);
        }
    }
}

/// Functional form of [`ChannelStateSample::step`].
pub fn sample_step<R: Rng + ?Sized>(
    states: &ChannelStateSample,
    params: &[ChannelParams],
    rng: &mut R,
) -> ChannelStateSample {
    let mut next = states.clone();
    next.step(params, rng);
    next
}

/// Functional form of [`BeliefVector::update`].
pub fn belief_update(
    omega: &BeliefVector,
    observed: Option<(usize, ChannelState)>,
    params: &[ChannelParams],
) -> BeliefVector {
    let mut next = omega.clone();
    next.update(observed, params);
    next
}
