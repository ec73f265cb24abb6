//! Where protocol participants get their random symbols.
//!
//! Live runs use [`SeededCoins`]: one seed, split into an independent ChaCha
//! stream per node, so a transcript replays exactly. The enumeration oracle
//! instead feeds every node a prepared tape ([`TapeCoins`]).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::{FieldElement, PrimeField};
use crate::NodeId;

pub trait CoinSource {
    fn draw(&mut self, node: NodeId, field: PrimeField) -> FieldElement;
}

/// Per-node streams derived from a single seed. Stream `0` is reserved for
/// the dealer that originally encoded the data (see [`dealer_rng`]).
#[derive(Debug, Clone)]
pub struct SeededCoins {
    seed: u64,
    streams: BTreeMap<NodeId, ChaCha8Rng>,
}

impl SeededCoins {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            streams: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The dealer's generator for a run seeded with `seed`.
pub fn dealer_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

impl CoinSource for SeededCoins {
    fn draw(&mut self, node: NodeId, field: PrimeField) -> FieldElement {
        let seed = self.seed;
        let rng = self
            .streams
            .entry(node)
            .or_insert_with(|| stream_rng(seed, node.0 as u64));
        field.uniform_element(rng)
    }
}

/// Fixed per-node coin tapes, consumed front to back.
#[derive(Debug, Clone)]
pub struct TapeCoins {
    tapes: Vec<Vec<FieldElement>>,
    pos: Vec<usize>,
}

impl TapeCoins {
    /// `tapes[i]` belongs to node `i + 1`.
    pub fn new(tapes: Vec<Vec<FieldElement>>) -> Self {
        let pos = vec![0; tapes.len()];
        Self { tapes, pos }
    }
}

impl CoinSource for TapeCoins {
    fn draw(&mut self, node: NodeId, _field: PrimeField) -> FieldElement {
        let i = node.index();
        let x = self.tapes[i][self.pos[i]];
        self.pos[i] += 1;
        x
    }
}

/// Hands out zeros and records how many coins each node asked for.
#[derive(Debug, Clone, Default)]
pub struct CountingCoins {
    pub counts: BTreeMap<NodeId, usize>,
}

impl CoinSource for CountingCoins {
    fn draw(&mut self, node: NodeId, field: PrimeField) -> FieldElement {
        *self.counts.entry(node).or_default() += 1;
        field.zero()
    }
}

/// Every coin is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCoins;

impl CoinSource for ZeroCoins {
    fn draw(&mut self, _node: NodeId, field: PrimeField) -> FieldElement {
        field.zero()
    }
}
