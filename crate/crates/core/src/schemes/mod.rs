//! Linear secret sharing schemes described by generator matrices.
//!
//! A scheme with `n` nodes, `t` symbols per share, `k` message symbols (each in
//! `F_q^t`) and `rho` key symbols is a matrix `G` of shape `(k*t + rho) x (n*t)`.
//! The shares of `(message, keys)` are the row vector `(message || keys) * G`,
//! cut into `n` consecutive blocks of `t` coordinates. Rows `0..k*t` are the
//! message part of `G`, the remaining `rho` rows the key part.

mod json;
mod repair;

pub use json::{CoeffsDef, PlanDef, ProtocolDef, SchemeDef};
pub use repair::RepairPlan;

use std::collections::BTreeMap;

use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::field::{self, FieldElement, FieldError, Matrix, PrimeField};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("field order {q} must exceed the node count {n}")]
    FieldTooSmall { q: u64, n: usize },
    #[error("{what}: expected {expected} symbols, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("need at least {needed} shares to decode, got {got}")]
    TooFewShares { needed: usize, got: usize },
    #[error("the message is not a linear function of the shares of nodes {0:?}")]
    NotDecodable(Vec<NodeId>),
    #[error("shares are not consistent with any codeword")]
    InconsistentShares,
    #[error("no linear repair function for node {failed} from helpers {helpers:?}")]
    NoRepairFunction {
        failed: NodeId,
        helpers: Vec<NodeId>,
    },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("invalid repair plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T, E = SchemeError> = std::result::Result<T, E>;

/// `(n, k, r, z)` plus the share width `t` and the field order `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SchemeParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub z: usize,
    pub t: usize,
    pub q: u64,
}

impl SchemeParams {
    pub fn check(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.t == 0 {
            return Err(SchemeError::InvalidParams(format!(
                "n, k and t must be positive (n={}, k={}, t={})",
                self.n, self.k, self.t
            )));
        }
        if self.z + self.r >= self.n {
            return Err(SchemeError::InvalidParams(format!(
                "need z < n - r (n={}, r={}, z={})",
                self.n, self.r, self.z
            )));
        }
        if self.q <= self.n as u64 {
            return Err(SchemeError::FieldTooSmall {
                q: self.q,
                n: self.n,
            });
        }
        Ok(())
    }

    /// `k = n - r - z`, the largest message any such scheme can carry.
    pub fn is_rate_optimal(&self) -> bool {
        self.k + self.r + self.z == self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Shamir,
    Ramp,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearScheme {
    params: SchemeParams,
    kind: SchemeKind,
    rho: usize,
    generator: Matrix,
    alphas: Option<Vec<FieldElement>>,
}

/// Shamir's scheme: `c_j = m + sum_{i=1..z} u_i * alpha_j^i`, with `k = 1` and `r = n - z - 1`.
pub fn shamir_scheme(n: usize, z: usize, alphas: &[FieldElement]) -> Result<LinearScheme> {
    if z >= n {
        return Err(SchemeError::InvalidParams(format!(
            "need z < n (n={n}, z={z})"
        )));
    }
    let mut scheme = ramp_scheme(n, n - z - 1, z, alphas)?;
    scheme.kind = SchemeKind::Shamir;
    Ok(scheme)
}

/// Ramp Shamir: message `m_1..m_k` in the low coefficients, keys in the `z` top
/// ones, with `k = n - r - z`.
pub fn ramp_scheme(n: usize, r: usize, z: usize, alphas: &[FieldElement]) -> Result<LinearScheme> {
    if n <= r + z {
        return Err(SchemeError::InvalidParams(format!(
            "ramp scheme needs n > r + z (n={n}, r={r}, z={z})"
        )));
    }
    if alphas.len() != n {
        return Err(SchemeError::Length {
            what: "evaluation points",
            expected: n,
            got: alphas.len(),
        });
    }
    let field = alphas[0].field();
    let k = n - r - z;
    let params = SchemeParams {
        n,
        k,
        r,
        z,
        t: 1,
        q: field.order(),
    };
    params.check()?;
    let generator = field::vandermonde(alphas, k + z)?;
    Ok(LinearScheme {
        params,
        kind: SchemeKind::Ramp,
        rho: z,
        generator,
        alphas: Some(alphas.to_vec()),
    })
}

/// All `size`-subsets of `{1..=n}` in lexicographic order.
pub fn node_subsets(n: usize, size: usize) -> Vec<Vec<NodeId>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < size - cur.len() {
                break;
            }
            cur.push(NodeId(i));
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        rec(1, n, size, &mut Vec::new(), &mut out);
    }
    out
}

impl LinearScheme {
    /// A scheme given directly by its generator matrix.
    ///
    /// Only shapes and parameter ranges are checked here; decodability and
    /// security are reported by [`LinearScheme::validate`].
    pub fn generic(params: SchemeParams, rho: usize, generator: Matrix) -> Result<Self> {
        params.check()?;
        if generator.field().order() != params.q {
            return Err(SchemeError::InvalidParams(format!(
                "generator is over {} but q = {}",
                generator.field(),
                params.q
            )));
        }
        let (rows, cols) = (params.k * params.t + rho, params.n * params.t);
        if generator.rows() != rows || generator.cols() != cols {
            return Err(SchemeError::InvalidParams(format!(
                "generator must be {rows}x{cols}, got {}x{}",
                generator.rows(),
                generator.cols()
            )));
        }
        Ok(Self {
            params,
            kind: SchemeKind::Generic,
            rho,
            generator,
            alphas: None,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn field(&self) -> PrimeField {
        self.generator.field()
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// Number of key symbols.
    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn alphas(&self) -> Option<&[FieldElement]> {
        self.alphas.as_deref()
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn t(&self) -> usize {
        self.params.t
    }

    /// Message length in base-field symbols, `k * t`.
    pub fn message_len(&self) -> usize {
        self.params.k * self.params.t
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node.0 == 0 || node.0 > self.params.n {
            Err(SchemeError::UnknownNode(node))
        } else {
            Ok(())
        }
    }

    /// Generator columns holding the coordinates of `nodes`, node by node.
    pub fn node_columns(&self, nodes: &[NodeId]) -> Vec<usize> {
        let t = self.params.t;
        nodes
            .iter()
            .flat_map(|v| (v.index() * t)..(v.index() * t + t))
            .collect()
    }

    fn message_rows(&self) -> Vec<usize> {
        (0..self.message_len()).collect()
    }

    fn key_rows(&self) -> Vec<usize> {
        (self.message_len()..self.message_len() + self.rho).collect()
    }

    fn input_vector(
        &self,
        message: &[FieldElement],
        keys: &[FieldElement],
    ) -> Result<Vec<FieldElement>> {
        if message.len() != self.message_len() {
            return Err(SchemeError::Length {
                what: "message",
                expected: self.message_len(),
                got: message.len(),
            });
        }
        if keys.len() != self.rho {
            return Err(SchemeError::Length {
                what: "keys",
                expected: self.rho,
                got: keys.len(),
            });
        }
        let mut input = Vec::with_capacity(message.len() + keys.len());
        input.extend_from_slice(message);
        input.extend_from_slice(keys);
        Ok(input)
    }

    /// All `n * t` share coordinates in one flat vector.
    pub fn encode_flat(
        &self,
        message: &[FieldElement],
        keys: &[FieldElement],
    ) -> Result<Vec<FieldElement>> {
        let input = self.input_vector(message, keys)?;
        Ok(self.generator.vec_mul(&input)?)
    }

    /// Shares of `(message, keys)`, one `t`-vector per node.
    pub fn encode(
        &self,
        message: &[FieldElement],
        keys: &[FieldElement],
    ) -> Result<Vec<Vec<FieldElement>>> {
        let flat = self.encode_flat(message, keys)?;
        Ok(flat.chunks(self.params.t).map(<[_]>::to_vec).collect())
    }

    /// Draws fresh uniform keys and encodes. The keys are returned alongside
    /// the shares for bookkeeping.
    pub fn encode_random<R: RngCore + ?Sized>(
        &self,
        message: &[FieldElement],
        rng: &mut R,
    ) -> Result<(Vec<Vec<FieldElement>>, Vec<FieldElement>)> {
        let field = self.field();
        let keys: Vec<_> = (0..self.rho).map(|_| field.uniform_element(rng)).collect();
        let shares = self.encode(message, &keys)?;
        Ok((shares, keys))
    }

    /// Precomputes the linear map from the shares of `nodes` to the message.
    pub fn decoder(&self, nodes: &[NodeId]) -> Result<Decoder> {
        for &v in nodes {
            self.check_node(v)?;
        }
        let cols = self.node_columns(nodes);
        let g_s = self.generator.select_columns(&cols);
        let field = self.field();
        let rows = g_s.rows();
        let mut coeffs = Vec::with_capacity(self.message_len());
        for l in 0..self.message_len() {
            let mut target = field.zeros(rows);
            target[l] = field.one();
            match field::solve_linear(&g_s, &target)? {
                Some(d) => coeffs.push(d),
                None => return Err(SchemeError::NotDecodable(nodes.to_vec())),
            }
        }
        Ok(Decoder {
            nodes: nodes.to_vec(),
            coeffs,
        })
    }

    /// Recovers the message from the shares of at least `n - r` nodes.
    ///
    /// Shares that are not a restriction of some codeword are rejected.
    pub fn decode(
        &self,
        available: &BTreeMap<NodeId, Vec<FieldElement>>,
    ) -> Result<Vec<FieldElement>> {
        let needed = self.params.n - self.params.r;
        if available.len() < needed {
            return Err(SchemeError::TooFewShares {
                needed,
                got: available.len(),
            });
        }
        let nodes: Vec<NodeId> = available.keys().copied().collect();
        let mut flat = Vec::with_capacity(nodes.len() * self.params.t);
        for (v, share) in available {
            self.check_node(*v)?;
            if share.len() != self.params.t {
                return Err(SchemeError::Length {
                    what: "share",
                    expected: self.params.t,
                    got: share.len(),
                });
            }
            flat.extend_from_slice(share);
        }
        let g_s = self.generator.select_columns(&self.node_columns(&nodes));
        if field::solve_linear(&g_s.transpose(), &flat)?.is_none() {
            return Err(SchemeError::InconsistentShares);
        }
        Ok(self.decoder(&nodes)?.apply(&flat))
    }

    /// Whether the given (partial) share assignment extends to a codeword.
    pub fn is_consistent(&self, shares: &BTreeMap<NodeId, Vec<FieldElement>>) -> Result<bool> {
        let nodes: Vec<NodeId> = shares.keys().copied().collect();
        let flat: Vec<FieldElement> = shares.values().flatten().copied().collect();
        let g_s = self.generator.select_columns(&self.node_columns(&nodes));
        if g_s.cols() != flat.len() {
            return Err(SchemeError::SchemeMismatch(
                "share widths do not match t".into(),
            ));
        }
        Ok(field::solve_linear(&g_s.transpose(), &flat)?.is_some())
    }

    /// Finds a linear `f` with `f(c_{i,j} : i in helpers, j in coords) = c_failed`.
    ///
    /// `coords` are 0-based share coordinates; pass `0..t` to read whole shares.
    pub fn derive_repair_function(
        &self,
        failed: NodeId,
        helpers: &[NodeId],
        coords: &[usize],
    ) -> Result<RepairPlan> {
        self.check_node(failed)?;
        if helpers.contains(&failed) {
            return Err(SchemeError::InvalidPlan(format!(
                "failed node {failed} listed as a helper"
            )));
        }
        let t = self.params.t;
        let input_cols: Vec<usize> = helpers
            .iter()
            .flat_map(|v| coords.iter().map(move |&j| v.index() * t + j))
            .collect();
        for &v in helpers {
            self.check_node(v)?;
        }
        if let Some(&j) = coords.iter().find(|&&j| j >= t) {
            return Err(SchemeError::InvalidPlan(format!(
                "coordinate {} outside 1..={t}",
                j + 1
            )));
        }
        let a = self.generator.select_columns(&input_cols);
        let field = self.field();
        let mut coeffs = Matrix::zeros(field, input_cols.len(), t);
        for l in 0..t {
            let target = self.generator.column(failed.index() * t + l);
            let Some(x) = field::solve_linear(&a, &target)? else {
                return Err(SchemeError::NoRepairFunction {
                    failed,
                    helpers: helpers.to_vec(),
                });
            };
            for (m, v) in x.into_iter().enumerate() {
                coeffs.set(m, l, v);
            }
        }
        let plan = RepairPlan::new_unchecked(failed, helpers.to_vec(), coords.to_vec(), coeffs);
        plan.verify(self)?;
        Ok(plan)
    }

    /// Grows the helper set one candidate at a time, in the given order, until
    /// whole-share repair becomes possible.
    pub fn find_repair_plan(&self, failed: NodeId, candidates: &[NodeId]) -> Result<RepairPlan> {
        let coords: Vec<usize> = (0..self.params.t).collect();
        let pool: Vec<NodeId> = candidates
            .iter()
            .copied()
            .filter(|&v| v != failed)
            .collect();
        for len in 1..=pool.len() {
            match self.derive_repair_function(failed, &pool[..len], &coords) {
                Ok(plan) => return Ok(plan),
                Err(SchemeError::NoRepairFunction { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(SchemeError::NoRepairFunction {
            failed,
            helpers: pool,
        })
    }

    /// Applies `f(a, b) = fa * a + fb * b` coordinate-wise to two codewords.
    pub fn linear_combine_shares(
        &self,
        a: &[Vec<FieldElement>],
        b: &[Vec<FieldElement>],
        f: (FieldElement, FieldElement),
    ) -> Result<Vec<Vec<FieldElement>>> {
        let field = self.field();
        let shape_ok = |c: &[Vec<FieldElement>]| {
            c.len() == self.params.n
                && c.iter()
                    .all(|s| s.len() == self.params.t && s.iter().all(|x| x.field() == field))
        };
        if !shape_ok(a) || !shape_ok(b) {
            return Err(SchemeError::SchemeMismatch(format!(
                "codewords must be {} shares of {} symbols over {field}",
                self.params.n, self.params.t
            )));
        }
        if f.0.field() != field || f.1.field() != field {
            return Err(SchemeError::SchemeMismatch(
                "coefficients from another field".into(),
            ));
        }
        Ok(a.iter()
            .zip(b)
            .map(|(sa, sb)| {
                sa.iter()
                    .zip(sb)
                    .map(|(&x, &y)| f.0 * x + f.1 * y)
                    .collect()
            })
            .collect())
    }

    /// Whether the shares of `nodes` are independent of the message, decided
    /// by rank: the message part of the selected columns must lie in the span
    /// of their key part.
    pub fn is_secure_against(&self, nodes: &[NodeId]) -> bool {
        let g_a = self.generator.select_columns(&self.node_columns(nodes));
        let keys = g_a.select_rows(&self.key_rows());
        let both = g_a
            .select_rows(&self.message_rows())
            .vstack(&keys)
            .expect("same shape");
        both.rank() == keys.rank()
    }

    /// Rank checks for every decoding subset and every `z`-subset.
    pub fn validate(&self) -> ValidityReport {
        let n = self.params.n;
        let decode_sets = node_subsets(n, n - self.params.r);
        let secure_sets = node_subsets(n, self.params.z);
        let decode_failures: Vec<_> = decode_sets
            .iter()
            .filter(|s| self.decoder(s).is_err())
            .cloned()
            .collect();
        let security_failures: Vec<_> = secure_sets
            .iter()
            .filter(|s| !self.is_secure_against(s))
            .cloned()
            .collect();
        ValidityReport {
            decode_subsets_checked: decode_sets.len(),
            security_subsets_checked: secure_sets.len(),
            decode_failures,
            security_failures,
            exhaustive_secure: None,
        }
    }
}

/// Free-function form of [`LinearScheme::validate`].
pub fn validate_scheme(scheme: &LinearScheme) -> ValidityReport {
    scheme.validate()
}

/// Linear map from a fixed node set's shares to the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    nodes: Vec<NodeId>,
    coeffs: Vec<Vec<FieldElement>>,
}

impl Decoder {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// `shares` is the concatenation of the nodes' shares in `nodes()` order.
    pub fn apply(&self, shares: &[FieldElement]) -> Vec<FieldElement> {
        self.coeffs.iter().map(|d| field::dot(d, shares)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub decode_subsets_checked: usize,
    pub security_subsets_checked: usize,
    pub decode_failures: Vec<Vec<NodeId>>,
    pub security_failures: Vec<Vec<NodeId>>,
    /// Cross-check by exhaustive enumeration, when it was run.
    pub exhaustive_secure: Option<bool>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.decode_failures.is_empty()
            && self.security_failures.is_empty()
            && self.exhaustive_secure != Some(false)
    }
}
