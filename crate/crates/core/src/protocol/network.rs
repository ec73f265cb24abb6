use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{ProtocolError, Result};
use crate::field::FieldElement;
use crate::schemes::LinearScheme;
use crate::NodeId;

/// The shares one node holds: one `t`-vector per scheme instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShareStack {
    pub node: NodeId,
    /// `shares[instance][coordinate]`; empty once the node has failed.
    pub shares: Vec<Vec<FieldElement>>,
}

impl ShareStack {
    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}

/// `n` simulated nodes storing independent instances of one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    scheme: LinearScheme,
    instances: usize,
    stacks: Vec<ShareStack>,
    failed: BTreeSet<NodeId>,
}

impl Network {
    /// Builds a network from per-node stacks, checking that the live stacks
    /// agree with some codeword in every instance. Empty stacks count as failed.
    pub fn new(scheme: LinearScheme, stacks: Vec<ShareStack>) -> Result<Self> {
        let n = scheme.n();
        if stacks.len() != n {
            return Err(ProtocolError::Network(format!(
                "expected {n} stacks, got {}",
                stacks.len()
            )));
        }
        let mut instances = None;
        let mut failed = BTreeSet::new();
        for (i, st) in stacks.iter().enumerate() {
            if st.node != NodeId::from_index(i) {
                return Err(ProtocolError::Network(format!(
                    "stack {} belongs to node {}",
                    i + 1,
                    st.node
                )));
            }
            if st.is_empty() {
                failed.insert(st.node);
                continue;
            }
            if *instances.get_or_insert(st.shares.len()) != st.shares.len() {
                return Err(ProtocolError::Network(format!(
                    "node {} holds {} instances, others hold {}",
                    st.node,
                    st.shares.len(),
                    instances.unwrap_or_default()
                )));
            }
            if st
                .shares
                .iter()
                .any(|s| s.len() != scheme.t() || s.iter().any(|x| x.field() != scheme.field()))
            {
                return Err(ProtocolError::Network(format!(
                    "node {} holds shares that are not {} symbols over {}",
                    st.node,
                    scheme.t(),
                    scheme.field()
                )));
            }
        }
        let instances = instances.unwrap_or(0);
        for inst in 0..instances {
            let live: BTreeMap<NodeId, Vec<FieldElement>> = stacks
                .iter()
                .filter(|st| !st.is_empty())
                .map(|st| (st.node, st.shares[inst].clone()))
                .collect();
            if !scheme.is_consistent(&live)? {
                return Err(ProtocolError::Inconsistent { instance: inst + 1 });
            }
        }
        Ok(Self {
            scheme,
            instances,
            stacks,
            failed,
        })
    }

    /// Distributes full codewords (`codewords[instance][node]`) to the nodes.
    pub fn from_codewords(
        scheme: LinearScheme,
        codewords: &[Vec<Vec<FieldElement>>],
    ) -> Result<Self> {
        let n = scheme.n();
        if codewords.iter().any(|c| c.len() != n) {
            return Err(ProtocolError::Network(format!(
                "every codeword needs {n} shares"
            )));
        }
        let stacks = Self::stacks_from(n, codewords);
        Self::new(scheme, stacks)
    }

    /// Same as [`Network::from_codewords`] without the consistency check, for
    /// callers that produced the codewords by encoding.
    pub(crate) fn from_encoded(scheme: LinearScheme, codewords: &[Vec<Vec<FieldElement>>]) -> Self {
        let stacks = Self::stacks_from(scheme.n(), codewords);
        Self {
            scheme,
            instances: codewords.len(),
            stacks,
            failed: BTreeSet::new(),
        }
    }

    /// Replaces the shares of every live node with the given codewords'.
    pub(crate) fn refill(&mut self, codewords: &[Vec<Vec<FieldElement>>]) {
        for st in &mut self.stacks {
            if self.failed.contains(&st.node) {
                continue;
            }
            st.shares.clear();
            st.shares
                .extend(codewords.iter().map(|c| c[st.node.index()].clone()));
        }
    }

    fn stacks_from(n: usize, codewords: &[Vec<Vec<FieldElement>>]) -> Vec<ShareStack> {
        (0..n)
            .map(|i| ShareStack {
                node: NodeId::from_index(i),
                shares: codewords.iter().map(|c| c[i].clone()).collect(),
            })
            .collect()
    }

    pub fn scheme(&self) -> &LinearScheme {
        &self.scheme
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    pub fn stacks(&self) -> &[ShareStack] {
        &self.stacks
    }

    pub fn stack(&self, node: NodeId) -> Result<&ShareStack> {
        self.scheme.check_node(node)?;
        Ok(&self.stacks[node.index()])
    }

    pub fn failed(&self) -> &BTreeSet<NodeId> {
        &self.failed
    }

    pub fn is_live(&self, node: NodeId) -> bool {
        !self.failed.contains(&node)
    }

    pub fn live_nodes(&self) -> Vec<NodeId> {
        (1..=self.scheme.n())
            .map(NodeId)
            .filter(|&v| self.is_live(v))
            .collect()
    }

    /// Erases a node's stack.
    pub fn fail(&mut self, node: NodeId) -> Result<()> {
        self.scheme.check_node(node)?;
        self.stacks[node.index()].shares.clear();
        self.failed.insert(node);
        Ok(())
    }

    /// Hands a failed node its rebuilt shares.
    pub fn restore(&mut self, node: NodeId, shares: Vec<Vec<FieldElement>>) -> Result<()> {
        self.scheme.check_node(node)?;
        if shares.len() != self.instances {
            return Err(ProtocolError::Network(format!(
                "restoring {} instances into a network of {}",
                shares.len(),
                self.instances
            )));
        }
        self.stacks[node.index()].shares = shares;
        self.failed.remove(&node);
        Ok(())
    }

    /// Whether every instance is a full codeword again.
    pub fn is_consistent(&self) -> Result<bool> {
        if !self.failed.is_empty() {
            return Ok(false);
        }
        for inst in 0..self.instances {
            let all = self
                .stacks
                .iter()
                .map(|st| (st.node, st.shares[inst].clone()))
                .collect();
            if !self.scheme.is_consistent(&all)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
