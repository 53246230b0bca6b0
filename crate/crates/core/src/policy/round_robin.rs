use rand::Rng;

use super::{PacketKind, SlotAction};
use crate::activation::ActivationVector;
use crate::channel::{BeliefVector, ChannelParams, ChannelState, PROB_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// First slot at the current channel; a dummy may be sent.
    FreshSwitch,
    /// Previous slot on this channel was an ACKed data packet.
    Draining,
}

/// Effect of one slot of feedback on a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Stay,
    Switched,
    RoundEnded,
}

/// Slot of last service per channel; `None` means never served.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageClock {
    last_used: Vec<Option<u64>>,
}

impl UsageClock {
    pub fn new(n: usize) -> Self {
        UsageClock { last_used: vec![None; n] }
    }

    pub fn touch(&mut self, n: usize, slot: u64) {
        self.last_used[n] = Some(slot);
    }

    /// Slots elapsed since each channel's last use, as seen at `now`.
    pub fn ages(&self, now: u64) -> Vec<Option<u64>> {
        self.last_used.iter().map(|u| u.map(|u| now.saturating_sub(u))).collect()
    }
}

/// Active channels sorted least recently used first. Never-served channels
/// count as infinitely old; ties go to the lower index.
pub fn lru_order(phi: &ActivationVector, ages: &[Option<u64>]) -> Vec<usize> {
    let mut order: Vec<usize> = phi.channels().collect();
    // Stable sort keeps ascending index among equal ages.
    order.sort_by(|&a, &b| match (ages[a], ages[b]) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, Some(_)) => std::cmp::Ordering::Less,
        (Some(_), None) => std::cmp::Ordering::Greater,
        (Some(x), Some(y)) => y.cmp(&x),
    });
    order
}

/// One round of `RR(φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRobinState {
    phi: ActivationVector,
    serve_order: Vec<usize>,
    position: usize,
    phase: Phase,
    last_use_age: Vec<Option<u64>>,
    last_kind: Option<PacketKind>,
}

impl RoundRobinState {
    /// Starts a round over `phi` using the ages at the round start.
    pub fn new(phi: ActivationVector, last_use_age: Vec<Option<u64>>) -> Result<Self> {
        if last_use_age.len() != phi.len() {
            return Err(Error::DimensionMismatch { expected: phi.len(), got: last_use_age.len() });
        }
        let serve_order = lru_order(&phi, &last_use_age);
        Ok(RoundRobinState {
            phi,
            serve_order,
            position: 0,
            phase: Phase::FreshSwitch,
            last_use_age,
            last_kind: None,
        })
    }

    pub fn phi(&self) -> ActivationVector {
        self.phi
    }

    pub fn serve_order(&self) -> &[usize] {
        &self.serve_order
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn last_use_age(&self) -> &[Option<u64>] {
        &self.last_use_age
    }

    pub fn current(&self) -> Option<usize> {
        self.serve_order.get(self.position).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.position >= self.serve_order.len()
    }

    /// `P01^(M(φ))` for channel `n`: the belief the round behaves as if
    /// it had on every switch.
    pub fn floor(&self, n: usize, params: &[ChannelParams]) -> f64 {
        params[n].p01_k(self.phi.count() as u64)
    }

    /// Chooses the packet for the current slot.
    ///
    /// On a fresh switch the belief floor is checked first. With
    /// `enforce_floor` a violation is an error; otherwise the data
    /// probability is clamped to 1 and `Ok((action, true))` reports it.
    /// Exactly one uniform draw is consumed on every fresh switch.
    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        omega: &BeliefVector,
        params: &[ChannelParams],
        enforce_floor: bool,
        rng: &mut R,
    ) -> Result<(SlotAction, bool)> {
        let Some(n) = self.current() else {
            return Ok((SlotAction::IDLE, false));
        };
        let action = match self.phase {
            Phase::Draining => (SlotAction::data(n), false),
            Phase::FreshSwitch => {
                let floor = self.floor(n, params);
                let w = omega.get(n);
                let violated = w < floor - PROB_TOL;
                if violated && enforce_floor {
                    return Err(Error::BeliefFloor { channel: n, omega: w, m: self.phi.count(), floor });
                }
                let ratio = (floor / w).min(1.0);
                let u: f64 = rng.gen();
                if u < ratio {
                    (SlotAction::data(n), violated)
                } else {
                    (SlotAction::dummy(n), violated)
                }
            }
        };
        self.last_kind = Some(action.0.kind);
        Ok(action)
    }

    /// Applies the feedback for the packet chosen by the last `decide`.
    pub fn observe(&mut self, feedback: ChannelState) -> Progress {
        let kind = self.last_kind.take();
        match (kind, feedback) {
            (Some(PacketKind::Data), ChannelState::On) => {
                self.phase = Phase::Draining;
                Progress::Stay
            }
            (None, _) | (Some(PacketKind::None), _) => Progress::Stay,
            _ => self.advance(),
        }
    }

    /// Moves on without feedback, as when nothing was actually sent.
    pub fn skip(&mut self) -> Progress {
        self.last_kind = None;
        self.advance()
    }

    fn advance(&mut self) -> Progress {
        self.position += 1;
        self.phase = Phase::FreshSwitch;
        if self.is_finished() {
            Progress::RoundEnded
        } else {
            Progress::Switched
        }
    }
}

/// Single-call form of a round-robin slot: applies last slot's feedback,
/// then decides this slot's packet. When the feedback ends the round the
/// returned action is idle and the flag is set; the caller starts the next
/// round.
pub fn rr_step<R: Rng + ?Sized>(
    mut state: RoundRobinState,
    omega: &BeliefVector,
    feedback: Option<ChannelState>,
    params: &[ChannelParams],
    rng: &mut R,
) -> Result<(SlotAction, RoundRobinState, bool)> {
    if let Some(fb) = feedback {
        if state.observe(fb) == Progress::RoundEnded {
            return Ok((SlotAction::IDLE, state, true));
        }
    }
    let (action, _) = state.decide(omega, params, true, rng)?;
    Ok((action, state, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sym2() -> Vec<ChannelParams> {
        vec![ChannelParams::new(0.2, 0.2).unwrap(); 2]
    }

    #[test]
    fn fresh_switch_data_probability() {
        let params = sym2();
        let omega = BeliefVector::stationary(&params);
        let phi = ActivationVector::all(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 200_000;
        let mut data = 0;
        for _ in 0..trials {
            let mut st = RoundRobinState::new(phi, vec![None, None]).unwrap();
            let (a, _) = st.decide(&omega, &params, true, &mut rng).unwrap();
            assert_eq!(a.served, Some(0));
            data += (a.kind == PacketKind::Data) as u32;
        }
        let frac = data as f64 / trials as f64;
        assert!((frac - 0.64).abs() < 0.005, "{frac}");
    }

    #[test]
    fn ack_keeps_channel_nack_advances() {
        let params = sym2();
        let omega = BeliefVector::from_prior(&[0.32, 0.5], &params).unwrap();
        let phi = ActivationVector::all(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Ratio is exactly 1 at omega = P01^(2), so the first packet is data.
        let st = RoundRobinState::new(phi, vec![None, None]).unwrap();
        let (a, st, ended) = rr_step(st, &omega, None, &params, &mut rng).unwrap();
        assert_eq!(a, SlotAction::data(0));
        assert!(!ended);
        let (a, st, _) = rr_step(st, &omega, Some(ChannelState::On), &params, &mut rng).unwrap();
        assert_eq!(a, SlotAction::data(0));
        assert_eq!(st.phase(), Phase::Draining);
        let (a, st, ended) = rr_step(st, &omega, Some(ChannelState::Off), &params, &mut rng).unwrap();
        assert_eq!(a.served, Some(1));
        assert!(!ended);
        assert_eq!(st.phase(), Phase::FreshSwitch);
        let (a, _, ended) = rr_step(st, &omega, Some(ChannelState::Off), &params, &mut rng).unwrap();
        assert!(ended);
        assert_eq!(a, SlotAction::IDLE);
    }

    #[test]
    fn dummy_advances_even_if_on() {
        let params = sym2();
        let phi = ActivationVector::all(2).unwrap();
        let mut st = RoundRobinState::new(phi, vec![None, None]).unwrap();
        st.last_kind = Some(PacketKind::Dummy);
        assert_eq!(st.observe(ChannelState::On), Progress::Switched);
        let _ = params;
    }

    #[test]
    fn floor_violation_is_reported() {
        let params = sym2();
        let omega = BeliefVector::from_prior(&[0.2, 0.5], &params).unwrap();
        let phi = ActivationVector::all(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = RoundRobinState::new(phi, vec![None, None]).unwrap();
        assert!(matches!(
            st.decide(&omega, &params, true, &mut rng),
            Err(Error::BeliefFloor { channel: 0, .. })
        ));
        let mut st = RoundRobinState::new(phi, vec![None, None]).unwrap();
        let (a, violated) = st.decide(&omega, &params, false, &mut rng).unwrap();
        assert!(violated);
        assert_eq!(a.kind, PacketKind::Data);
    }

    #[test]
    fn lru_order_examples() {
        let phi = ActivationVector::all(2).unwrap();
        assert_eq!(lru_order(&phi, &[Some(5), Some(9)]), vec![1, 0]);
        assert_eq!(lru_order(&phi, &[None, None]), vec![0, 1]);
        let phi3 = ActivationVector::all(3).unwrap();
        assert_eq!(lru_order(&phi3, &[Some(2), None, Some(2)]), vec![1, 0, 2]);
    }

    #[test]
    fn usage_clock_ages() {
        let mut c = UsageClock::new(3);
        c.touch(0, 4);
        c.touch(2, 9);
        assert_eq!(c.ages(10), vec![Some(6), None, Some(1)]);
    }
}
