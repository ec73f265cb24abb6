//! Secure repair of linear secret sharing schemes.
//!
//! A `(n, k, r, z)` scheme spreads a `k`-symbol message over `n` nodes so that
//! any `n - r` shares decode it and any `z` shares reveal nothing. When a node
//! fails, its share has to be rebuilt by the survivors without any `z` nodes
//! (the replacement included) learning the message along the way.
//!
//! The crate is split the same way the work is:
//!
//! - [`field`]: exact `F_q` arithmetic, Vandermonde matrices, linear solves.
//! - [`schemes`]: Shamir, ramp Shamir and generic scalar/vector linear schemes,
//!   plus derivation of linear repair functions.
//! - [`protocol`]: the two-round repair protocols run over a simulated network,
//!   with full transcripts and bandwidth accounting.
//! - [`analysis`]: exhaustive enumeration of every protocol outcome to decide
//!   repairability and independence exactly, plus the bandwidth bounds.
//! - [`cli`]: the `secure-repair` command-line front end.

pub mod analysis;
pub mod cli;
pub mod field;
pub mod fixtures;
pub mod protocol;
pub mod schemes;

use std::fmt;

use serde::{Deserialize, Serialize};

/// A 1-based node identifier, matching the numbering used in reports.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    /// Zero-based position of the node in share vectors.
    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(i + 1)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shorthand for a list of node ids.
pub fn nodes(ids: &[usize]) -> Vec<NodeId> {
    ids.iter().copied().map(NodeId).collect()
}

pub use field::{FieldElement, Matrix, PrimeField};
pub use schemes::{LinearScheme, RepairPlan, SchemeParams};
