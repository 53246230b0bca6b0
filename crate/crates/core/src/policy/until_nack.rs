use serde::{Deserialize, Serialize};

use super::round_robin::{lru_order, UsageClock};
use super::SlotAction;
use crate::activation::ActivationVector;
use crate::channel::ChannelState;

/// Visiting order of the transmit-until-NACK heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderVariant {
    /// Fixed circular order by channel index.
    #[default]
    Circular,
    /// Re-sort least recently used first after every full sweep.
    Lru,
}

/// Serve channels in turn, always sending data, and move on only after a NACK.
#[derive(Debug, Clone, PartialEq)]
pub struct UntilNackState {
    active: ActivationVector,
    order: Vec<usize>,
    position: usize,
    variant: OrderVariant,
    clock: UsageClock,
    slot: u64,
}

impl UntilNackState {
    pub fn new(active: ActivationVector, variant: OrderVariant) -> Self {
        UntilNackState {
            active,
            order: active.channels().collect(),
            position: 0,
            variant,
            clock: UsageClock::new(active.len()),
            slot: 0,
        }
    }

    pub fn active(&self) -> ActivationVector {
        self.active
    }

    pub fn current(&self) -> usize {
        self.order[self.position]
    }

    pub fn action(&self) -> SlotAction {
        SlotAction::data(self.current())
    }

    /// Feeds back this slot's ACK/NACK and returns the next slot's action.
    pub fn observe(&mut self, feedback: ChannelState) -> SlotAction {
        let n = self.current();
        self.clock.touch(n, self.slot);
        self.slot += 1;
        if feedback == ChannelState::Off {
            self.advance();
        }
        self.action()
    }

    /// Moves to the next channel without feedback.
    pub fn skip(&mut self) -> SlotAction {
        self.slot += 1;
        self.advance();
        self.action()
    }

    fn advance(&mut self) {
        self.position += 1;
        if self.position == self.order.len() {
            self.position = 0;
            if self.variant == OrderVariant::Lru {
                self.order = lru_order(&self.active, &self.clock.ages(self.slot));
            }
        }
    }
}

/// Functional form: apply this slot's feedback, return the next action.
pub fn heuristic_until_nack_step(state: &mut UntilNackState, feedback: ChannelState) -> SlotAction {
    state.observe(feedback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PacketKind;

    #[test]
    fn ack_stays_nack_advances_circularly() {
        let mut s = UntilNackState::new(ActivationVector::all(3).unwrap(), OrderVariant::Circular);
        assert_eq!(s.action(), SlotAction::data(0));
        assert_eq!(heuristic_until_nack_step(&mut s, ChannelState::On), SlotAction::data(0));
        assert_eq!(heuristic_until_nack_step(&mut s, ChannelState::Off), SlotAction::data(1));
        assert_eq!(heuristic_until_nack_step(&mut s, ChannelState::Off), SlotAction::data(2));
        assert_eq!(heuristic_until_nack_step(&mut s, ChannelState::Off), SlotAction::data(0));
    }

    #[test]
    fn never_sends_dummy_and_lru_matches_circular_on_fixed_set() {
        let active = ActivationVector::all(4).unwrap();
        let mut a = UntilNackState::new(active, OrderVariant::Circular);
        let mut b = UntilNackState::new(active, OrderVariant::Lru);
        let pattern = [true, false, true, true, false, false, true, false, false, false];
        for i in 0..500 {
            let fb = ChannelState::from_on(pattern[i % pattern.len()]);
            let x = a.observe(fb);
            let y = b.observe(fb);
            assert_eq!(x.kind, PacketKind::Data);
            assert_eq!(x, y);
        }
    }
}
