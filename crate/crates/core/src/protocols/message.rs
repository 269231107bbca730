use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Hello,
    Source,
    Wakeup,
    ConsensusBit,
}

impl MessageKind {
    /// Tag written to the `detail1` column of transmit events.
    pub fn code(self) -> f64 {
        match self {
            MessageKind::Hello => 0.0,
            MessageKind::Source => 1.0,
            MessageKind::Wakeup => 2.0,
            MessageKind::ConsensusBit => 3.0,
        }
    }
}

/// What a transmitting station sends. Every message carries the global
/// round counter so late joiners can synchronise their clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolMessage {
    pub payload: u64,
    pub elapsed_rounds: u64,
    pub kind: MessageKind,
}

impl ProtocolMessage {
    pub fn new(kind: MessageKind, payload: u64, elapsed_rounds: u64) -> Self {
        ProtocolMessage {
            payload,
            elapsed_rounds,
            kind,
        }
    }

    /// Bits needed on the air: payload, counter and a two-bit kind.
    pub fn bit_length(&self) -> u32 {
        fn bits(x: u64) -> u32 {
            64 - x.leading_zeros().min(63)
        }
        bits(self.payload) + bits(self.elapsed_rounds) + 2
    }
}
