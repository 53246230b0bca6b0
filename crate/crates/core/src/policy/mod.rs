//! Scheduling policies.
//!
//! All round-robin variants share [`RoundRobinState`]: a round serves the
//! active channels of an [`ActivationVector`] in least-recently-used order.
//! On the first slot at a channel the policy sends a data packet with
//! probability `P01^(M) / ω_n` and a dummy packet otherwise; after an ACK it
//! keeps sending data on the same channel, and after a NACK or a dummy it
//! moves on. The policies differ only in how the next round's subset is
//! chosen:
//!
//! * `RR(φ)` always uses the same subset,
//! * `RandRR` samples it from a fixed distribution ([`RandRrSpec`]),
//! * `QRR` maximizes a backlog-weighted score ([`qrr_select`]).
//!
//! [`UntilNackState`] is the memory-greedy heuristic that always sends data
//! and only leaves a channel on a NACK.

mod qrr;
mod randrr;
mod round_robin;
mod until_nack;

pub use qrr::{qrr_f_value, qrr_score, qrr_select, QrrConfig, RateSource};
pub use randrr::{randrr_pick, RandRrSpec};
pub use round_robin::{lru_order, rr_step, Phase, Progress, RoundRobinState, UsageClock};
pub use until_nack::{heuristic_until_nack_step, OrderVariant, UntilNackState};

use serde::{Deserialize, Serialize};

use crate::activation::ActivationVector;

/// What a transmitted packet carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    Data,
    Dummy,
    None,
}

/// Decision for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAction {
    pub served: Option<usize>,
    pub kind: PacketKind,
}

impl SlotAction {
    pub const IDLE: SlotAction = SlotAction { served: None, kind: PacketKind::None };

    pub fn data(n: usize) -> Self {
        SlotAction { served: Some(n), kind: PacketKind::Data }
    }

    pub fn dummy(n: usize) -> Self {
        SlotAction { served: Some(n), kind: PacketKind::Dummy }
    }
}

/// Which scheduling policy to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySpec {
    /// `RR(φ)`: the same subset every round.
    Rr { active: ActivationVector },
    /// Randomized mixture of `RR(φ)` rounds.
    RandRr { weights: RandRrSpec },
    /// Queue-dependent round robin.
    Qrr(QrrConfig),
    /// Always send data; leave a channel only on NACK.
    UntilNack {
        #[serde(default)]
        active: Option<ActivationVector>,
        #[serde(default)]
        order: OrderVariant,
    },
}

impl PolicySpec {
    /// `RR(M)` over the first `m` of `n` channels.
    pub fn rr_m(m: usize, n: usize) -> crate::Result<Self> {
        Ok(PolicySpec::Rr { active: ActivationVector::first(m, n)? })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Rr { .. } => "rr",
            PolicySpec::RandRr { .. } => "rand-rr",
            PolicySpec::Qrr(_) => "qrr",
            PolicySpec::UntilNack { .. } => "until-nack",
        }
    }

    /// Checks that every vector in the spec matches the channel count.
    pub fn validate(&self, n_channels: usize) -> crate::Result<()> {
        let check = |a: &ActivationVector| {
            if a.len() != n_channels {
                Err(crate::Error::DimensionMismatch { expected: n_channels, got: a.len() })
            } else {
                Ok(())
            }
        };
        match self {
            PolicySpec::Rr { active } => check(active),
            PolicySpec::RandRr { weights } => weights.entries().iter().try_for_each(|(a, _)| check(a)),
            PolicySpec::Qrr(cfg) => cfg.validate(n_channels),
            PolicySpec::UntilNack { active, .. } => active.as_ref().map_or(Ok(()), check),
        }
    }
}
