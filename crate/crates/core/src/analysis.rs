//! Exact checks of repairability, security and bandwidth.
//!
//! Security and repairability are decided by walking every assignment of the
//! uniform symbols of a run (message, dealer keys, protocol coins) and
//! tallying integer counts. No decision ever looks at a floating-point value;
//! entropies are computed for reports only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldElement, PrimeField};
use crate::protocol::{
    default_receivers, BandwidthReport, CountingCoins, Network, ProtocolConfig, ProtocolError,
    ProtocolKind, RepairSession, TapeCoins, Transcript,
};
use crate::schemes::{node_subsets, LinearScheme, RepairPlan, SchemeError, ValidityReport};
use crate::NodeId;

pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("enumeration needs {required} outcomes, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

/// A symbol tuple as a hash key: base-`radix` digits behind a leading 1,
/// or the tuple itself when that does not fit in 128 bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Packed(u128),
    Wide(Box<[u64]>),
}

impl Key {
    fn new(radix: u64, symbols: &[u64]) -> Self {
        let mut acc: u128 = 1;
        for &s in symbols {
            let next = (s < radix)
                .then(|| acc.checked_mul(radix as u128)?.checked_add(s as u128))
                .flatten();
            match next {
                Some(a) => acc = a,
                None => return Key::Wide(symbols.into()),
            }
        }
        Key::Packed(acc)
    }

    fn symbols(&self, radix: u64) -> Vec<u64> {
        match self {
            Key::Wide(s) => s.to_vec(),
            Key::Packed(p) => {
                let mut out = Vec::new();
                let mut p = *p;
                while p > 1 {
                    out.push((p % radix as u128) as u64);
                    p /= radix as u128;
                }
                out.reverse();
                out
            }
        }
    }
}

/// Joint counts of `(x, y)` pairs over an enumerated outcome space.
///
/// `x` is usually the message and `y` an observation; either may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTable {
    radix: u64,
    counts: FxHashMap<(Key, Key), u64>,
    total: u64,
}

impl Default for DistributionTable {
    fn default() -> Self {
        Self::with_radix(1 << 32)
    }
}

impl DistributionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table for symbols below `radix`, usually the field order. Larger
    /// symbols are still counted correctly, only more slowly.
    pub fn with_radix(radix: u64) -> Self {
        Self {
            radix: radix.max(2),
            counts: FxHashMap::default(),
            total: 0,
        }
    }

    pub fn record(&mut self, x: &[u64], y: &[u64]) {
        let key = (Key::new(self.radix, x), Key::new(self.radix, y));
        *self.counts.entry(key).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, x: &[u64], y: &[u64]) -> u64 {
        let key = (Key::new(self.radix, x), Key::new(self.radix, y));
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Adds `other`'s counts. Associative and commutative.
    pub fn merge(&mut self, mut other: DistributionTable) {
        if other.radix != self.radix {
            for ((x, y), c) in other.counts {
                let key = (
                    Key::new(self.radix, &x.symbols(other.radix)),
                    Key::new(self.radix, &y.symbols(other.radix)),
                );
                *self.counts.entry(key).or_default() += c;
            }
        } else {
            if other.counts.len() > self.counts.len() {
                std::mem::swap(&mut self.counts, &mut other.counts);
            }
            for (k, c) in other.counts {
                *self.counts.entry(k).or_default() += c;
            }
        }
        self.total += other.total;
    }

    fn key_marginal(&self, pick: impl Fn(&(Key, Key)) -> &Key) -> FxHashMap<&Key, u64> {
        let mut m = FxHashMap::default();
        for (k, c) in &self.counts {
            *m.entry(pick(k)).or_default() += c;
        }
        m
    }

    pub fn marginal_x(&self) -> HashMap<Vec<u64>, u64> {
        self.key_marginal(|k| &k.0)
            .into_iter()
            .map(|(k, c)| (k.symbols(self.radix), c))
            .collect()
    }

    pub fn marginal_y(&self) -> HashMap<Vec<u64>, u64> {
        self.key_marginal(|k| &k.1)
            .into_iter()
            .map(|(k, c)| (k.symbols(self.radix), c))
            .collect()
    }

    /// `x` and `y` are independent: every cell, including the empty ones,
    /// satisfies `count(x, y) * total = count(x) * count(y)`.
    pub fn check_independence(&self) -> bool {
        let mx = self.key_marginal(|k| &k.0);
        let my = self.key_marginal(|k| &k.1);
        // an absent cell has count 0 but a positive marginal product
        if self.counts.len() != mx.len() * my.len() {
            return false;
        }
        let total = self.total as u128;
        self.counts
            .iter()
            .all(|((x, y), &c)| c as u128 * total == mx[x] as u128 * my[y] as u128)
    }

    /// `H(x | y) = 0`: each observed `y` occurs with exactly one `x`.
    pub fn is_deterministic(&self) -> bool {
        let mut seen: FxHashMap<&Key, &Key> = FxHashMap::default();
        self.counts
            .keys()
            .all(|(x, y)| *seen.entry(y).or_insert(x) == x)
    }

    /// `y` takes each of the `q^len` values of `F_q^len` equally often.
    pub fn is_uniform_y(&self, q: u64, len: usize) -> bool {
        let my = self.key_marginal(|k| &k.1);
        let support = (q as u128).checked_pow(len as u32);
        if support != Some(my.len() as u128) {
            return false;
        }
        let mut counts = my.values();
        let first = counts.next().copied();
        counts.all(|&c| Some(c) == first)
    }

    /// Joint entropy `H(x, y)` in base-`base` units.
    pub fn entropy(&self, base: u64) -> f64 {
        entropy_of_counts(self.counts.values().copied(), self.total, base)
    }

    pub fn entropy_x(&self, base: u64) -> f64 {
        entropy_of_counts(self.key_marginal(|k| &k.0).into_values(), self.total, base)
    }

    pub fn entropy_y(&self, base: u64) -> f64 {
        entropy_of_counts(self.key_marginal(|k| &k.1).into_values(), self.total, base)
    }

    /// `I(x; y) = H(x) + H(y) - H(x, y)`, for reports.
    pub fn mutual_information(&self, base: u64) -> f64 {
        (self.entropy_x(base) + self.entropy_y(base) - self.entropy(base)).max(0.0)
    }
}

/// Shannon entropy of a distribution given by integer counts.
pub fn entropy_of_counts(counts: impl IntoIterator<Item = u64>, total: u64, base: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum();
    h / (base as f64).ln()
}

pub fn check_independence(table: &DistributionTable) -> bool {
    table.check_independence()
}

/// Which messages an enumeration walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageSpace {
    /// Every message in `F_q^K`.
    Full,
    /// The zero message and the `K` unit vectors.
    ///
    /// For a linear protocol this is as strong as [`MessageSpace::Full`]:
    /// given the message, the view is uniform on a coset `M m + im(R)` of the
    /// span of the random part, so the view is independent of the message iff
    /// `im(M) ⊆ im(R)`, which only needs checking on a basis. Repair error is
    /// linear in the inputs and vanishes everywhere iff it does on a basis
    /// times all keys and coins.
    Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    /// Upper limit on the number of outcomes walked.
    pub budget: u128,
    pub message_space: MessageSpace,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            message_space: MessageSpace::Full,
        }
    }
}

fn pow_saturating(q: u64, e: usize) -> u128 {
    (q as u128).checked_pow(e as u32).unwrap_or(u128::MAX)
}

/// Little-endian base-`q` counter over `len` digits.
fn advance(digits: &mut [u64], q: u64) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < q {
            return true;
        }
        *d = 0;
    }
    false
}

/// The messages walked in `space`, flattened over `len` symbols.
fn message_choices(field: PrimeField, len: usize, space: MessageSpace) -> Vec<Vec<FieldElement>> {
    match space {
        MessageSpace::Basis => (0..=len)
            .map(|i| {
                let mut m = field.zeros(len);
                if i > 0 {
                    m[i - 1] = field.one();
                }
                m
            })
            .collect(),
        MessageSpace::Full => {
            let mut out = Vec::new();
            let mut digits = vec![0; len];
            loop {
                out.push(field.elems(&digits));
                if !advance(&mut digits, field.order()) {
                    break;
                }
            }
            out
        }
    }
}

fn message_count(q: u64, len: usize, space: MessageSpace) -> u128 {
    match space {
        MessageSpace::Basis => len as u128 + 1,
        MessageSpace::Full => pow_saturating(q, len),
    }
}

/// One protocol run to enumerate: which construction repairs which node from
/// how many stored instances.
#[derive(Debug, Clone)]
pub struct ProtocolSetup {
    pub kind: ProtocolKind,
    pub scheme: LinearScheme,
    pub plan: RepairPlan,
    /// Only read by `c2`; empty means [`default_receivers`].
    pub receivers: Vec<NodeId>,
    pub config: ProtocolConfig,
    pub instances: usize,
}

impl ProtocolSetup {
    /// The smallest run of `kind`: one instance for `c2`, `n - z` otherwise.
    pub fn new(
        kind: ProtocolKind,
        scheme: &LinearScheme,
        plan: &RepairPlan,
        config: &ProtocolConfig,
    ) -> Self {
        let instances = match kind {
            ProtocolKind::C2 => 1,
            _ => scheme.n() - scheme.params().z,
        };
        Self {
            kind,
            scheme: scheme.clone(),
            plan: plan.clone(),
            receivers: Vec::new(),
            config: config.clone(),
            instances,
        }
    }

    fn zero_network(&self) -> Result<Network> {
        let field = self.scheme.field();
        let zero = vec![vec![field.zero(); self.scheme.t()]; self.scheme.n()];
        let mut net = Network::from_encoded(self.scheme.clone(), &vec![zero; self.instances]);
        net.fail(self.plan.failed())?;
        Ok(net)
    }

    fn session(&self, network: &Network) -> Result<RepairSession> {
        let receivers = if self.kind == ProtocolKind::C2 && self.receivers.is_empty() {
            default_receivers(network, &self.plan)?
        } else {
            self.receivers.clone()
        };
        Ok(RepairSession::new(
            self.kind,
            &self.scheme,
            &self.plan,
            &receivers,
            &self.config,
        )?)
    }
}

/// Everything one enumeration of a [`ProtocolSetup`] produced.
#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub outcomes: u64,
    /// Message against view, one table per adversary set.
    pub views: Vec<DistributionTable>,
    /// Round-two values of the receivers in each adversary set, alone.
    pub distilled: Vec<DistributionTable>,
    /// Repaired shares against the failed node's received data.
    pub repair: DistributionTable,
    /// Outcomes whose repaired shares differ from the lost ones.
    pub mismatches: u64,
    /// Bandwidth of every run; the schedule does not depend on the values.
    pub bandwidth: BandwidthReport,
    pub coins: BTreeMap<NodeId, usize>,
}

impl EnumerationResult {
    fn empty(
        q: u64,
        adversaries: usize,
        bandwidth: BandwidthReport,
        coins: BTreeMap<NodeId, usize>,
    ) -> Self {
        Self {
            outcomes: 0,
            views: vec![DistributionTable::with_radix(q); adversaries],
            distilled: vec![DistributionTable::with_radix(q); adversaries],
            repair: DistributionTable::with_radix(q),
            mismatches: 0,
            bandwidth,
            coins,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.outcomes += other.outcomes;
        for (a, b) in self.views.iter_mut().zip(other.views) {
            a.merge(b);
        }
        for (a, b) in self.distilled.iter_mut().zip(other.distilled) {
            a.merge(b);
        }
        self.repair.merge(other.repair);
        self.mismatches += other.mismatches;
        self
    }

    /// Repaired shares always equal the lost ones and are a function of the
    /// failed node's received data.
    pub fn repairable(&self) -> bool {
        self.mismatches == 0 && self.repair.is_deterministic()
    }
}

/// Number of outcomes [`enumerate_runs`] would walk.
pub fn required_outcomes(setup: &ProtocolSetup, space: MessageSpace) -> Result<u128> {
    let (_, coins) = dry_run(setup)?;
    Ok(outcome_count(setup, &coins, space))
}

fn outcome_count(
    setup: &ProtocolSetup,
    coins: &BTreeMap<NodeId, usize>,
    space: MessageSpace,
) -> u128 {
    let q = setup.scheme.field().order();
    let randomness = setup.instances * setup.scheme.rho() + coins.values().sum::<usize>();
    message_count(q, setup.instances * setup.scheme.message_len(), space)
        .saturating_mul(pow_saturating(q, randomness))
}

fn dry_run(setup: &ProtocolSetup) -> Result<(BandwidthReport, BTreeMap<NodeId, usize>)> {
    let net = setup.zero_network()?;
    let mut counter = CountingCoins::default();
    let out = setup.session(&net)?.run(&net, &mut counter)?;
    Ok((out.bandwidth, counter.counts))
}

/// Runs the protocol on every assignment of message, keys and coins and
/// tallies what each set in `adversaries` sees.
pub fn enumerate_runs(
    setup: &ProtocolSetup,
    adversaries: &[Vec<NodeId>],
    config: &EnumerationConfig,
) -> Result<EnumerationResult> {
    let scheme = &setup.scheme;
    let field = scheme.field();
    let q = field.order();
    let (bandwidth, coin_counts) = dry_run(setup)?;
    let required = outcome_count(setup, &coin_counts, config.message_space);
    if required > config.budget {
        return Err(AnalysisError::BudgetExceeded {
            required,
            budget: config.budget,
        });
    }
    for a in adversaries {
        for &v in a {
            scheme.check_node(v)?;
        }
    }
    let net0 = setup.zero_network()?;
    let session = setup.session(&net0)?;
    let e = setup.plan.failed();
    let k = scheme.message_len();
    let rho = scheme.rho();
    let instances = setup.instances;
    let key_len = instances * rho;
    let coin_len: usize = coin_counts.values().sum();
    let messages = message_choices(field, instances * k, config.message_space);
    let empty = EnumerationResult::empty(q, adversaries.len(), bandwidth, coin_counts.clone());

    messages
        .par_iter()
        .map(|m| -> Result<EnumerationResult> {
            let mut acc = empty.clone();
            let m_key: Vec<u64> = m.iter().map(FieldElement::value).collect();
            let mut digits = vec![0u64; key_len + coin_len];
            let mut net = net0.clone();
            let mut buf = Vec::new();
            let mut repaired = Vec::new();
            let mut truth = Vec::new();
            loop {
                let keys = field.elems(&digits[..key_len]);
                let codewords = (0..instances)
                    .map(|i| scheme.encode(&m[i * k..(i + 1) * k], &keys[i * rho..(i + 1) * rho]))
                    .collect::<Result<Vec<_>, _>>()?;
                net.refill(&codewords);
                let mut tapes = vec![Vec::new(); scheme.n()];
                let mut pos = key_len;
                for (node, &c) in &coin_counts {
                    tapes[node.index()] = field.elems(&digits[pos..pos + c]);
                    pos += c;
                }
                let out = session.run(&net, &mut TapeCoins::new(tapes))?;
                let tr = &out.transcript;

                for (i, a) in adversaries.iter().enumerate() {
                    view_symbols(tr, &net, a, &mut buf);
                    acc.views[i].record(&m_key, &buf);
                    buf.clear();
                    buf.extend(
                        a.iter()
                            .filter_map(|v| tr.distilled.get(v))
                            .flatten()
                            .map(FieldElement::value),
                    );
                    acc.distilled[i].record(&[], &buf);
                }
                repaired.clear();
                repaired.extend(out.repaired.iter().flatten().map(FieldElement::value));
                truth.clear();
                truth.extend(
                    codewords
                        .iter()
                        .flat_map(|c| &c[e.index()])
                        .map(FieldElement::value),
                );
                if repaired != truth {
                    acc.mismatches += 1;
                }
                buf.clear();
                if let Some(d) = tr.received.get(&e) {
                    buf.extend(d.iter().map(FieldElement::value));
                }
                acc.repair.record(&repaired, &buf);
                acc.outcomes += 1;

                if !advance(&mut digits, q) {
                    break;
                }
            }
            Ok(acc)
        })
        .try_reduce(|| empty.clone(), |a, b| Ok(a.merge(b)))
}

/// [`adversary_view`] flattened into `buf`, without the intermediate struct.
fn view_symbols(tr: &Transcript, net: &Network, nodes: &[NodeId], buf: &mut Vec<u64>) {
    buf.clear();
    for &v in nodes {
        buf.extend(
            net.stacks()[v.index()]
                .shares
                .iter()
                .flatten()
                .map(FieldElement::value),
        );
    }
    for v in nodes {
        buf.extend(
            tr.coins
                .get(v)
                .into_iter()
                .flatten()
                .map(FieldElement::value),
        );
    }
    for v in nodes {
        buf.extend(
            tr.received
                .get(v)
                .into_iter()
                .flatten()
                .map(FieldElement::value),
        );
    }
}

/// The joint distribution of the message and the view of `adversary`.
pub fn enumerate_protocol(
    setup: &ProtocolSetup,
    adversary: &[NodeId],
    config: &EnumerationConfig,
) -> Result<DistributionTable> {
    let mut res = enumerate_runs(setup, &[adversary.to_vec()], config)?;
    Ok(res.views.remove(0))
}

pub fn check_repairability(setup: &ProtocolSetup, config: &EnumerationConfig) -> Result<bool> {
    Ok(enumerate_runs(setup, &[], config)?.repairable())
}

/// One `(protocol, failed node, adversary set)` verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellReport {
    pub protocol: ProtocolKind,
    pub failed: NodeId,
    pub adversary: Vec<NodeId>,
    pub independent: bool,
    pub repairable: bool,
    pub outcomes: u64,
}

impl CellReport {
    pub fn passed(&self) -> bool {
        self.independent && self.repairable
    }
}

impl fmt::Display for CellReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.adversary.iter().map(ToString::to_string).collect();
        write!(
            f,
            "{} e={} A={{{}}}: independent={} repairable={} ({} outcomes)",
            self.protocol,
            self.failed,
            a.join(","),
            self.independent,
            self.repairable,
            self.outcomes
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub message_space: MessageSpace,
    pub cells: Vec<CellReport>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn new(message_space: MessageSpace, cells: Vec<CellReport>) -> Self {
        let all_pass = cells.iter().all(CellReport::passed);
        Self {
            message_space,
            cells,
            all_pass,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks every adversary set of size `z` against one setup.
pub fn verify_setup(setup: &ProtocolSetup, config: &EnumerationConfig) -> Result<Vec<CellReport>> {
    verify_setup_against(
        setup,
        &node_subsets(setup.scheme.n(), setup.scheme.params().z),
        config,
    )
}

pub fn verify_setup_against(
    setup: &ProtocolSetup,
    adversaries: &[Vec<NodeId>],
    config: &EnumerationConfig,
) -> Result<Vec<CellReport>> {
    let res = enumerate_runs(setup, adversaries, config)?;
    let repairable = res.repairable();
    Ok(adversaries
        .iter()
        .zip(&res.views)
        .map(|(a, table)| CellReport {
            protocol: setup.kind,
            failed: setup.plan.failed(),
            adversary: a.clone(),
            independent: table.check_independence(),
            repairable,
            outcomes: res.outcomes,
        })
        .collect())
}

/// `H(c'_A)` in base-`q` symbols: the entropy of the round-two values of
/// the receivers in `A`.
pub fn distilled_entropy(result: &EnumerationResult, adversary_index: usize, q: u64) -> f64 {
    result.distilled[adversary_index].entropy_y(q)
}

/// Every message and key assignment of a single codeword.
fn for_each_codeword(
    scheme: &LinearScheme,
    config: &EnumerationConfig,
    mut f: impl FnMut(&[FieldElement], &[Vec<FieldElement>]),
) -> Result<u64> {
    let field = scheme.field();
    let q = field.order();
    let k = scheme.message_len();
    let rho = scheme.rho();
    let required = message_count(q, k, config.message_space).saturating_mul(pow_saturating(q, rho));
    if required > config.budget {
        return Err(AnalysisError::BudgetExceeded {
            required,
            budget: config.budget,
        });
    }
    let mut n = 0;
    for m in message_choices(field, k, config.message_space) {
        let mut digits = vec![0; rho];
        loop {
            f(&m, &scheme.encode(&m, &field.elems(&digits))?);
            n += 1;
            if !advance(&mut digits, q) {
                break;
            }
        }
    }
    Ok(n)
}

fn shares_of(codeword: &[Vec<FieldElement>], nodes: &[NodeId]) -> Vec<u64> {
    nodes
        .iter()
        .flat_map(|v| &codeword[v.index()])
        .map(FieldElement::value)
        .collect()
}

/// Message against the shares of `nodes`, over all messages and keys.
pub fn share_table(
    scheme: &LinearScheme,
    nodes: &[NodeId],
    config: &EnumerationConfig,
) -> Result<DistributionTable> {
    let mut table = DistributionTable::with_radix(scheme.field().order());
    for_each_codeword(scheme, config, |m, c| {
        let x: Vec<u64> = m.iter().map(FieldElement::value).collect();
        table.record(&x, &shares_of(c, nodes));
    })?;
    Ok(table)
}

/// Whether every `(n - r)`-subset decodes every message under every key.
pub fn check_decoding_exhaustive(
    scheme: &LinearScheme,
    config: &EnumerationConfig,
) -> Result<bool> {
    let subsets = node_subsets(scheme.n(), scheme.n() - scheme.params().r);
    let decoders = subsets
        .iter()
        .map(|s| scheme.decoder(s))
        .collect::<Result<Vec<_>, _>>();
    let Ok(decoders) = decoders else {
        return Ok(false);
    };
    let mut ok = true;
    for_each_codeword(scheme, config, |m, c| {
        for d in &decoders {
            let flat: Vec<FieldElement> = d
                .nodes()
                .iter()
                .flat_map(|v| c[v.index()].clone())
                .collect();
            ok &= d.apply(&flat) == m;
        }
    })?;
    Ok(ok)
}

/// Whether the shares of every `z`-subset are independent of the message.
pub fn check_security_exhaustive(
    scheme: &LinearScheme,
    config: &EnumerationConfig,
) -> Result<bool> {
    for a in node_subsets(scheme.n(), scheme.params().z) {
        if !share_table(scheme, &a, config)?.check_independence() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`LinearScheme::validate`] plus the exhaustive security cross-check.
pub fn validate_with_oracle(
    scheme: &LinearScheme,
    config: &EnumerationConfig,
) -> Result<ValidityReport> {
    let mut report = scheme.validate();
    report.exhaustive_secure = Some(check_security_exhaustive(scheme, config)?);
    Ok(report)
}

/// Bandwidth bounds for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsReport {
    pub construction: ProtocolKind,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub z: usize,
    pub t: usize,
    /// Repair-function input size per instance, in symbols.
    pub w: usize,
    pub instances: usize,
    pub measured: u64,
    /// Absent when the bound does not apply.
    pub lower: Option<Ratio<u64>>,
    pub upper: Ratio<u64>,
    pub rate_optimal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("the lower bound is only known for rate-optimal schemes")]
    NotRateOptimal,
    #[error("the lower bound needs n - z - 1 > 0")]
    Degenerate,
}

/// `(n - 1) W / (2 (n - z - 1))` symbols per repaired instance.
pub fn lower_bound_bandwidth(
    n: usize,
    z: usize,
    w: usize,
    rate_optimal: bool,
) -> Result<Ratio<u64>, BoundError> {
    if !rate_optimal {
        return Err(BoundError::NotRateOptimal);
    }
    if n <= z + 1 {
        return Err(BoundError::Degenerate);
    }
    Ok(Ratio::new(
        (n as u64 - 1) * w as u64,
        2 * (n - z - 1) as u64,
    ))
}

/// Most symbols the construction may move to repair `instances` instances.
pub fn upper_bound_bandwidth(
    kind: ProtocolKind,
    scheme: &LinearScheme,
    plan: &RepairPlan,
    instances: usize,
) -> u64 {
    let n = scheme.n() as u64;
    let z = scheme.params().z;
    let helpers = plan.helpers().len() as u64;
    match kind {
        ProtocolKind::C2 => (helpers + 1) * (z as u64 + 1) * instances as u64,
        ProtocolKind::C4 | ProtocolKind::C5 => {
            let batches = instances.div_ceil(scheme.n() - z) as u64;
            let per_batch = helpers * plan.coords().len() as u64 + scheme.t() as u64;
            per_batch * n * batches
        }
    }
}

pub fn bounds_report(
    kind: ProtocolKind,
    scheme: &LinearScheme,
    plan: &RepairPlan,
    bandwidth: &BandwidthReport,
    instances: usize,
) -> BoundsReport {
    let p = scheme.params();
    let w = plan.input_size();
    let rate_optimal = p.is_rate_optimal();
    let lower = lower_bound_bandwidth(p.n, p.z, w, rate_optimal)
        .ok()
        .map(|per| per * Ratio::from_integer(instances as u64));
    BoundsReport {
        construction: kind,
        n: p.n,
        k: p.k,
        r: p.r,
        z: p.z,
        t: p.t,
        w,
        instances,
        measured: bandwidth.total_symbols,
        lower,
        upper: Ratio::from_integer(upper_bound_bandwidth(kind, scheme, plan, instances)),
        rate_optimal,
    }
}

impl BoundsReport {
    /// `measured / lower`, when the lower bound applies and is positive.
    pub fn ratio(&self) -> Option<Ratio<u64>> {
        self.lower
            .filter(|l| *l.numer() > 0)
            .map(|l| Ratio::from_integer(self.measured) / l)
    }

    /// Broken bounds, described.
    pub fn violations(&self) -> Vec<String> {
        let measured = Ratio::from_integer(self.measured);
        let mut out = Vec::new();
        if measured > self.upper {
            out.push(format!(
                "measured {} exceeds the cap {}",
                self.measured, self.upper
            ));
        }
        if let Some(l) = self.lower {
            if self.rate_optimal && measured < l {
                out.push(format!(
                    "measured {} is below the lower bound {l}",
                    self.measured
                ));
            }
        }
        out
    }

    pub fn csv_row(&self) -> String {
        let (lower_num, lower_den) = match self.lower {
            Some(l) => (l.numer().to_string(), l.denom().to_string()),
            None => (String::new(), String::new()),
        };
        let ratio = self.ratio().map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.construction,
            self.n,
            self.k,
            self.r,
            self.z,
            self.t,
            self.w,
            self.measured,
            lower_num,
            lower_den,
            self.upper.numer(),
            self.upper.denom(),
            ratio
        )
    }
}

pub const BOUNDS_CSV_HEADER: &str =
    "construction,n,k,r,z,t,W,measured,lower_num,lower_den,upper_num,upper_den,ratio";

pub fn bounds_csv(reports: &[BoundsReport]) -> String {
    let mut out = String::from(BOUNDS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
