//! Two-round secure repair over a simulated network.
//!
//! All three protocols share one shape. In round one every helper splits the
//! repair inputs it holds with a linear sub-scheme whose keys are the helper's
//! own coin flips, and sends piece `k` to receiver `k`. In round two every
//! receiver applies the repair function to the pieces it got and forwards the
//! result to the failed node, which decodes the sub-scheme.
//!
//! | protocol | receivers       | sub-scheme        | values per encoding |
//! |----------|-----------------|-------------------|---------------------|
//! | `c2`     | any `z+1` nodes | `(z+1, 1, 0, z)`  | 1                   |
//! | `c4`     | all `n` nodes   | `(n, n-z, 0, z)`  | `n - z` instances   |
//! | `c5`     | all `n` nodes   | `(n, n-z, 0, z)`  | `n - z`, per coordinate in `J` |
//!
//! A piece a node sends to itself never leaves the node: it is not a message
//! and costs no bandwidth.

mod coins;
mod network;
mod session;

pub use coins::{dealer_rng, CoinSource, CountingCoins, SeededCoins, TapeCoins, ZeroCoins};
pub use network::{Network, ShareStack};
pub use session::{
    adversary_view, default_receivers, repair_all_failures, run_construction2, run_construction4,
    run_construction5, AdversaryView, RepairOutcome, RepairSession,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Matrix, PrimeField};
use crate::schemes::{ramp_scheme, shamir_scheme, LinearScheme, ProtocolDef, SchemeError};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Unsupported(String),
    #[error("expected {expected} receivers, got {got}")]
    ReceiverCount { expected: usize, got: usize },
    #[error("node {0} has failed and cannot take part")]
    DeadNode(NodeId),
    #[error("each node must hold at least {needed} instances, found {got}")]
    InsufficientInstances { needed: usize, got: usize },
    #[error("network: {0}")]
    Network(String),
    #[error("instance {instance} is not a codeword")]
    Inconsistent { instance: usize },
    #[error("node {0} cannot be repaired from the live nodes")]
    Unrepairable(NodeId),
    #[error("sub-scheme: {0}")]
    SubScheme(String),
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Generic repair through `z + 1` receivers.
    C2,
    /// Bandwidth-efficient repair of `n - z` scalar instances at once.
    C4,
    /// Vector-linear repair of `n - z` instances at once.
    C5,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::C2 => "c2",
            ProtocolKind::C4 => "c4",
            ProtocolKind::C5 => "c5",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "c2" => Ok(ProtocolKind::C2),
            "c4" => Ok(ProtocolKind::C4),
            "c5" => Ok(ProtocolKind::C5),
            other => Err(format!(
                "unknown protocol {other:?} (expected c2, c4 or c5)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtocolMessage {
    pub from: NodeId,
    pub to: NodeId,
    pub round: u8,
    pub payload: Vec<FieldElement>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    /// Delivery order.
    pub messages: Vec<ProtocolMessage>,
    /// Coin flips per node, in draw order.
    pub coins: BTreeMap<NodeId, Vec<FieldElement>>,
    /// Concatenated incoming payloads per node, in delivery order.
    pub received: BTreeMap<NodeId, Vec<FieldElement>>,
    /// Rebuilt shares of the failed node, `repaired[instance][coordinate]`.
    pub repaired: Vec<Vec<FieldElement>>,
    /// Round-two values computed by each receiver, batch after batch. Local
    /// state, not part of the exported transcript.
    #[serde(skip)]
    pub distilled: BTreeMap<NodeId, Vec<FieldElement>>,
}

impl Transcript {
    fn deliver(&mut self, msg: ProtocolMessage) {
        debug_assert_ne!(msg.from, msg.to, "self-deliveries are local state");
        self.received
            .entry(msg.to)
            .or_default()
            .extend_from_slice(&msg.payload);
        self.messages.push(msg);
    }

    pub fn bandwidth(&self, symbols_repaired: u64) -> BandwidthReport {
        let count = |round| {
            self.messages
                .iter()
                .filter(|m| m.round == round && m.from != m.to)
                .map(|m| m.payload.len() as u64)
                .sum::<u64>()
        };
        BandwidthReport::new(count(1), count(2), symbols_repaired)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Field symbols moved between distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandwidthReport {
    pub round1_symbols: u64,
    pub round2_symbols: u64,
    pub total_symbols: u64,
    pub symbols_repaired: u64,
    /// `total / repaired`; zero when nothing was repaired.
    pub normalized: Ratio<u64>,
}

impl BandwidthReport {
    pub fn new(round1_symbols: u64, round2_symbols: u64, symbols_repaired: u64) -> Self {
        let total_symbols = round1_symbols + round2_symbols;
        let normalized = if symbols_repaired == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(total_symbols, symbols_repaired)
        };
        Self {
            round1_symbols,
            round2_symbols,
            total_symbols,
            symbols_repaired,
            normalized,
        }
    }
}

/// Serializes a ratio as `{"num": .., "den": ..}`.
pub(crate) fn ratio_json(r: &Ratio<u64>) -> serde_json::Value {
    serde_json::json!({ "num": r.numer(), "den": r.denom() })
}

impl Serialize for BandwidthReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_json::json!({
            "round1_symbols": self.round1_symbols,
            "round2_symbols": self.round2_symbols,
            "total_symbols": self.total_symbols,
            "symbols_repaired": self.symbols_repaired,
            "normalized": ratio_json(&self.normalized),
        })
        .serialize(s)
    }
}

/// Round-one sub-scheme choices. Every participant must use the same ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProtocolConfig {
    /// Replaces the default Shamir `(z+1, 1, 0, z)` sub-scheme of `c2`.
    pub c2_subscheme: Option<LinearScheme>,
    /// Evaluation points of the `(n, n-z, 0, z)` ramp sub-scheme; `1..=n` by default.
    pub ramp_alphas: Option<Vec<FieldElement>>,
}

impl ProtocolConfig {
    /// Reads overrides from a scheme file's `protocol` section.
    pub fn from_def(def: &ProtocolDef, field: PrimeField, z: usize) -> Result<Self> {
        let c2_subscheme = match (&def.c2_generator, &def.c2_alphas) {
            (Some(_), Some(_)) => {
                return Err(ProtocolError::SubScheme(
                    "give either c2_generator or c2_alphas, not both".into(),
                ))
            }
            (Some(rows), None) => {
                let params = crate::schemes::SchemeParams {
                    n: z + 1,
                    k: 1,
                    r: 0,
                    z,
                    t: 1,
                    q: field.order(),
                };
                Some(LinearScheme::generic(
                    params,
                    z,
                    Matrix::from_u64_rows(field, rows)?,
                )?)
            }
            (None, Some(alphas)) => Some(shamir_scheme(z + 1, z, &field.elems(alphas))?),
            (None, None) => None,
        };
        Ok(Self {
            c2_subscheme,
            ramp_alphas: def.ramp_alphas.as_ref().map(|a| field.elems(a)),
        })
    }

    /// The `(z+1, 1, 0, z)` sub-scheme for `scheme`, checked.
    pub fn c2_subscheme_for(&self, scheme: &LinearScheme) -> Result<LinearScheme> {
        let z = scheme.params().z;
        let field = scheme.field();
        let sub = match &self.c2_subscheme {
            Some(s) => s.clone(),
            None => {
                let alphas: Vec<u64> = (1..=z as u64 + 1).collect();
                shamir_scheme(z + 1, z, &field.elems(&alphas))?
            }
        };
        let p = sub.params();
        if (p.n, p.k, p.r, p.z, p.t, p.q) != (z + 1, 1, 0, z, 1, field.order()) {
            return Err(ProtocolError::SubScheme(format!(
                "expected a ({}, 1, 0, {z}) scalar scheme over {field}, got ({}, {}, {}, {}) with t = {}",
                z + 1,
                p.n,
                p.k,
                p.r,
                p.z,
                p.t
            )));
        }
        if !sub.validate().is_valid() {
            return Err(ProtocolError::SubScheme(
                "sub-scheme is not decodable or not z-secure".into(),
            ));
        }
        Ok(sub)
    }

    /// The `(n, n-z, 0, z)` ramp sub-scheme for `scheme`.
    pub fn ramp_subscheme_for(&self, scheme: &LinearScheme) -> Result<LinearScheme> {
        let n = scheme.n();
        let field = scheme.field();
        let alphas = match &self.ramp_alphas {
            Some(a) => a.clone(),
            None => field.elems(&(1..=n as u64).collect::<Vec<_>>()),
        };
        Ok(ramp_scheme(n, 0, scheme.params().z, &alphas)?)
    }
}

#[cfg(test)]
mod tests;
