use serde::Serialize;

use super::BandwidthReport;
use super::{
    CoinSource, Network, ProtocolConfig, ProtocolError, ProtocolKind, ProtocolMessage, Result,
    Transcript,
};
use crate::field::FieldElement;
use crate::schemes::{Decoder, LinearScheme, RepairPlan, SchemeError};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    /// `repaired[instance][coordinate]` for the failed node.
    pub repaired: Vec<Vec<FieldElement>>,
    pub transcript: Transcript,
    pub bandwidth: BandwidthReport,
}

/// A repair protocol bound to one scheme, plan, receiver set and sub-scheme.
///
/// Building the session does all the linear algebra (sub-scheme decoder,
/// shape checks) once; [`RepairSession::run`] is then pure share arithmetic
/// and can be called for every outcome of an enumeration.
#[derive(Debug, Clone)]
pub struct RepairSession {
    kind: ProtocolKind,
    scheme: LinearScheme,
    plan: RepairPlan,
    receivers: Vec<NodeId>,
    sub: LinearScheme,
    sub_decoder: Decoder,
    /// Values packed into one sub-scheme encoding.
    batch: usize,
}

impl RepairSession {
    /// `receivers` is only read for `c2`; `c4` and `c5` use every node.
    pub fn new(
        kind: ProtocolKind,
        scheme: &LinearScheme,
        plan: &RepairPlan,
        receivers: &[NodeId],
        config: &ProtocolConfig,
    ) -> Result<Self> {
        plan.check_shape(scheme)?;
        let n = scheme.n();
        let z = scheme.params().z;
        let t = scheme.t();
        let (receivers, sub, batch) = match kind {
            ProtocolKind::C2 => {
                if t != 1 {
                    return Err(ProtocolError::Unsupported(format!(
                        "c2 repairs scalar schemes; this one has t = {t} (use c5)"
                    )));
                }
                if receivers.len() != z + 1 {
                    return Err(ProtocolError::ReceiverCount {
                        expected: z + 1,
                        got: receivers.len(),
                    });
                }
                for (i, &v) in receivers.iter().enumerate() {
                    scheme.check_node(v)?;
                    if receivers[..i].contains(&v) {
                        return Err(ProtocolError::Unsupported(format!(
                            "receiver {v} listed twice"
                        )));
                    }
                }
                (receivers.to_vec(), config.c2_subscheme_for(scheme)?, 1)
            }
            ProtocolKind::C4 | ProtocolKind::C5 => {
                if kind == ProtocolKind::C4 && t != 1 {
                    return Err(ProtocolError::Unsupported(format!(
                        "c4 repairs scalar schemes; this one has t = {t} (use c5)"
                    )));
                }
                let all = (1..=n).map(NodeId).collect();
                (all, config.ramp_subscheme_for(scheme)?, n - z)
            }
        };
        let sub_nodes: Vec<NodeId> = (1..=receivers.len()).map(NodeId).collect();
        let sub_decoder = sub.decoder(&sub_nodes)?;
        Ok(Self {
            kind,
            scheme: scheme.clone(),
            plan: plan.clone(),
            receivers,
            sub,
            sub_decoder,
            batch,
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn plan(&self) -> &RepairPlan {
        &self.plan
    }

    pub fn receivers(&self) -> &[NodeId] {
        &self.receivers
    }

    pub fn subscheme(&self) -> &LinearScheme {
        &self.sub
    }

    fn batches(&self, instances: usize) -> usize {
        instances.div_ceil(self.batch)
    }

    fn check_network(&self, network: &Network) -> Result<()> {
        if network.scheme() != &self.scheme {
            return Err(ProtocolError::Network(
                "network stores a different scheme".into(),
            ));
        }
        let e = self.plan.failed();
        for &v in self.plan.helpers() {
            if !network.is_live(v) {
                return Err(ProtocolError::DeadNode(v));
            }
        }
        for &v in &self.receivers {
            if v != e && !network.is_live(v) {
                return Err(ProtocolError::DeadNode(v));
            }
        }
        if self.kind != ProtocolKind::C2 && network.instances() < self.batch {
            return Err(ProtocolError::InsufficientInstances {
                needed: self.batch,
                got: network.instances(),
            });
        }
        Ok(())
    }

    /// Runs both rounds and has the failed node decode from what it received.
    pub fn run(&self, network: &Network, coins: &mut dyn CoinSource) -> Result<RepairOutcome> {
        self.check_network(network)?;
        let field = self.scheme.field();
        let z = self.scheme.params().z;
        let e = self.plan.failed();
        let helpers = self.plan.helpers();
        let coords = self.plan.coords();
        let instances = network.instances();
        let batches = self.batches(instances);
        let n_recv = self.receivers.len();
        let mut transcript = Transcript::default();

        // pieces[((b * |I| + h) * |J| + jj) * n_recv + k]
        let mut pieces = Vec::with_capacity(batches * helpers.len() * coords.len() * n_recv);
        for b in 0..batches {
            for &helper in helpers {
                let stack = &network.stacks()[helper.index()].shares;
                let first = pieces.len();
                for &j in coords {
                    let values: Vec<FieldElement> = (b * self.batch..(b + 1) * self.batch)
                        .map(|inst| stack.get(inst).map_or(field.zero(), |s| s[j]))
                        .collect();
                    let keys: Vec<FieldElement> =
                        (0..z).map(|_| coins.draw(helper, field)).collect();
                    transcript
                        .coins
                        .entry(helper)
                        .or_default()
                        .extend_from_slice(&keys);
                    pieces.extend(self.sub.encode_flat(&values, &keys)?);
                }
                for (k, &to) in self.receivers.iter().enumerate() {
                    if to == helper {
                        continue;
                    }
                    let payload = (0..coords.len())
                        .map(|jj| pieces[first + jj * n_recv + k])
                        .collect();
                    transcript.deliver(ProtocolMessage {
                        from: helper,
                        to,
                        round: 1,
                        payload,
                    });
                }
            }
        }

        let per_helper = coords.len() * n_recv;
        for b in 0..batches {
            for (k, &from) in self.receivers.iter().enumerate() {
                let inputs: Vec<FieldElement> = (0..helpers.len())
                    .flat_map(|h| {
                        let base = (b * helpers.len() + h) * per_helper;
                        (0..coords.len()).map(move |jj| base + jj * n_recv + k)
                    })
                    .map(|idx| pieces[idx])
                    .collect();
                let distilled = self.plan.apply(&inputs);
                transcript
                    .distilled
                    .entry(from)
                    .or_default()
                    .extend_from_slice(&distilled);
                if from != e {
                    transcript.deliver(ProtocolMessage {
                        from,
                        to: e,
                        round: 2,
                        payload: distilled,
                    });
                }
            }
        }

        let empty = Vec::new();
        let d_e = transcript.received.get(&e).unwrap_or(&empty);
        let repaired = self.reconstruct(d_e, instances);
        transcript.repaired = repaired.clone();
        let bandwidth = transcript.bandwidth((instances * self.scheme.t()) as u64);
        Ok(RepairOutcome {
            repaired,
            transcript,
            bandwidth,
        })
    }

    /// The failed node's decoding step, from its received symbols alone.
    ///
    /// The delivery schedule is fixed by the protocol, so `received` parses
    /// positionally: first the round-one pieces addressed to the failed node
    /// (if it is a receiver), batch by batch and helper by helper, `|J|`
    /// symbols each; then the round-two values of every other receiver, batch
    /// by batch, `t` symbols each.
    pub fn reconstruct(
        &self,
        received: &[FieldElement],
        instances: usize,
    ) -> Vec<Vec<FieldElement>> {
        let field = self.scheme.field();
        let e = self.plan.failed();
        let t = self.scheme.t();
        let n_helpers = self.plan.helpers().len();
        let width = self.plan.coords().len();
        let batches = self.batches(instances);
        let e_receives = self.receivers.contains(&e);
        let round1_len = if e_receives {
            batches * n_helpers * width
        } else {
            0
        };
        let (round1, round2) = received.split_at(round1_len.min(received.len()));
        let others = self.receivers.iter().filter(|&&v| v != e).count();

        let mut repaired = vec![vec![field.zero(); t]; instances];
        let mut round2_pos = 0;
        for b in 0..batches {
            let mut distilled: Vec<Vec<FieldElement>> = Vec::with_capacity(self.receivers.len());
            for &v in &self.receivers {
                if v == e {
                    let start = b * n_helpers * width;
                    distilled.push(self.plan.apply(&round1[start..start + n_helpers * width]));
                } else {
                    distilled.push(round2[round2_pos..round2_pos + t].to_vec());
                    round2_pos += t;
                }
            }
            for l in 0..t {
                let shares: Vec<FieldElement> = distilled.iter().map(|d| d[l]).collect();
                let values = self.sub_decoder.apply(&shares);
                for (x, v) in values.into_iter().enumerate() {
                    if let Some(row) = repaired.get_mut(b * self.batch + x) {
                        row[l] = v;
                    }
                }
            }
        }
        debug_assert_eq!(round2_pos, batches * others * t);
        repaired
    }
}

/// Construction-2 receivers when none are given: the first `z + 1` helpers,
/// topped up with other live nodes if there are too few helpers.
pub fn default_receivers(network: &Network, plan: &RepairPlan) -> Result<Vec<NodeId>> {
    let want = network.scheme().params().z + 1;
    let mut out: Vec<NodeId> = plan.helpers().iter().copied().take(want).collect();
    for v in network.live_nodes() {
        if out.len() == want {
            break;
        }
        if v != plan.failed() && !out.contains(&v) {
            out.push(v);
        }
    }
    if out.len() < want {
        return Err(ProtocolError::ReceiverCount {
            expected: want,
            got: out.len(),
        });
    }
    Ok(out)
}

pub fn run_construction2(
    network: &Network,
    plan: &RepairPlan,
    receivers: &[NodeId],
    config: &ProtocolConfig,
    coins: &mut dyn CoinSource,
) -> Result<RepairOutcome> {
    RepairSession::new(ProtocolKind::C2, network.scheme(), plan, receivers, config)?
        .run(network, coins)
}

pub fn run_construction4(
    network: &Network,
    plan: &RepairPlan,
    config: &ProtocolConfig,
    coins: &mut dyn CoinSource,
) -> Result<RepairOutcome> {
    RepairSession::new(ProtocolKind::C4, network.scheme(), plan, &[], config)?.run(network, coins)
}

pub fn run_construction5(
    network: &Network,
    plan: &RepairPlan,
    config: &ProtocolConfig,
    coins: &mut dyn CoinSource,
) -> Result<RepairOutcome> {
    RepairSession::new(ProtocolKind::C5, network.scheme(), plan, &[], config)?.run(network, coins)
}

/// Repairs every failed node in id order with `c2`, each one
/// helped by the nodes that are live at that point (including nodes repaired
/// earlier in the same call).
pub fn repair_all_failures(
    network: &mut Network,
    config: &ProtocolConfig,
    coins: &mut dyn CoinSource,
) -> Result<Vec<(RepairPlan, RepairOutcome)>> {
    let failed: Vec<NodeId> = network.failed().iter().copied().collect();
    let mut reports = Vec::with_capacity(failed.len());
    for e in failed {
        let live = network.live_nodes();
        let plan = match network.scheme().find_repair_plan(e, &live) {
            Ok(p) => p,
            Err(SchemeError::NoRepairFunction { .. }) => {
                return Err(ProtocolError::Unrepairable(e))
            }
            Err(err) => return Err(err.into()),
        };
        let receivers = default_receivers(network, &plan)?;
        let outcome = run_construction2(network, &plan, &receivers, config, coins)?;
        network.restore(e, outcome.repaired.clone())?;
        reports.push((plan, outcome));
    }
    Ok(reports)
}

/// What a coalition `A` sees: its shares, its coin flips and everything
/// delivered to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryView {
    pub shares: Vec<FieldElement>,
    pub coins: Vec<FieldElement>,
    pub received: Vec<FieldElement>,
}

impl AdversaryView {
    /// All symbols, shares then coins then received data.
    pub fn symbols(&self) -> Vec<u64> {
        self.shares
            .iter()
            .chain(&self.coins)
            .chain(&self.received)
            .map(FieldElement::value)
            .collect()
    }
}

/// The view of `nodes` after a run. `network` is the state the run started
/// from, so a failed node contributes no shares.
pub fn adversary_view(
    transcript: &Transcript,
    network: &Network,
    nodes: &[NodeId],
) -> Result<AdversaryView> {
    let mut view = AdversaryView {
        shares: Vec::new(),
        coins: Vec::new(),
        received: Vec::new(),
    };
    for &v in nodes {
        let stack = network.stack(v)?;
        view.shares.extend(stack.shares.iter().flatten().copied());
        if let Some(c) = transcript.coins.get(&v) {
            view.coins.extend_from_slice(c);
        }
        if let Some(d) = transcript.received.get(&v) {
            view.received.extend_from_slice(d);
        }
    }
    Ok(view)
}
