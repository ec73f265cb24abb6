use serde::Serialize;

use super::{LinearScheme, Result, SchemeError};
use crate::field::{FieldElement, Matrix};
use crate::NodeId;

/// A linear repair function `f` for one failed node.
///
/// `f` reads coordinates `coords` of every helper's share, ordered helper by
/// helper, and outputs the `t` coordinates of the failed node's share:
/// `c_e = inputs * coeffs` with `coeffs` of shape `(|I| * |J|) x t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPlan {
    failed: NodeId,
    helpers: Vec<NodeId>,
    coords: Vec<usize>,
    coeffs: Matrix,
}

impl RepairPlan {
    /// Builds a plan without checking it against any scheme. Use
    /// [`RepairPlan::verify`] before trusting the result.
    pub fn new_unchecked(
        failed: NodeId,
        helpers: Vec<NodeId>,
        coords: Vec<usize>,
        coeffs: Matrix,
    ) -> Self {
        Self {
            failed,
            helpers,
            coords,
            coeffs,
        }
    }

    pub fn failed(&self) -> NodeId {
        self.failed
    }

    pub fn helpers(&self) -> &[NodeId] {
        &self.helpers
    }

    /// 0-based share coordinates read from each helper.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    /// Size of the repair function's input, `|I| * |J|` symbols.
    pub fn input_size(&self) -> usize {
        self.helpers.len() * self.coords.len()
    }

    /// Structural checks only: node ranges, distinctness, `e` not a helper,
    /// and the coefficient shape.
    pub fn check_shape(&self, scheme: &LinearScheme) -> Result<()> {
        scheme.check_node(self.failed)?;
        let t = scheme.t();
        let invalid = |msg: String| Err(SchemeError::InvalidPlan(msg));
        if self.helpers.is_empty() {
            return invalid("empty helper set".into());
        }
        for (i, &v) in self.helpers.iter().enumerate() {
            scheme.check_node(v)?;
            if v == self.failed {
                return invalid(format!("failed node {v} listed as a helper"));
            }
            if self.helpers[..i].contains(&v) {
                return invalid(format!("helper {v} listed twice"));
            }
        }
        if self.coords.is_empty() {
            return invalid("empty coordinate set".into());
        }
        for (i, &j) in self.coords.iter().enumerate() {
            if j >= t || self.coords[..i].contains(&j) {
                return invalid(format!("bad coordinate {}", j + 1));
            }
        }
        if self.coeffs.field() != scheme.field()
            || self.coeffs.rows() != self.input_size()
            || self.coeffs.cols() != t
        {
            return invalid(format!(
                "coefficients must be a {}x{t} matrix over {}",
                self.input_size(),
                scheme.field()
            ));
        }
        Ok(())
    }

    /// Checks that `f` reproduces the failed share on every codeword, i.e. on
    /// every row of the generator.
    pub fn verify(&self, scheme: &LinearScheme) -> Result<()> {
        self.check_shape(scheme)?;
        let g = scheme.generator();
        let t = scheme.t();
        let inputs: Vec<usize> = self
            .helpers
            .iter()
            .flat_map(|v| self.coords.iter().map(move |&j| v.index() * t + j))
            .collect();
        let produced = g.select_columns(&inputs).mul(&self.coeffs)?;
        let target: Vec<usize> = (0..t).map(|l| self.failed.index() * t + l).collect();
        if produced != g.select_columns(&target) {
            return Err(SchemeError::InvalidPlan(format!(
                "coefficients do not reproduce the share of node {}",
                self.failed
            )));
        }
        Ok(())
    }

    /// Picks the repair inputs out of a full codeword (one share per node).
    pub fn inputs_from(&self, shares: &[Vec<FieldElement>]) -> Vec<FieldElement> {
        self.helpers
            .iter()
            .flat_map(|v| self.coords.iter().map(move |&j| shares[v.index()][j]))
            .collect()
    }

    /// Evaluates `f`.
    pub fn apply(&self, inputs: &[FieldElement]) -> Vec<FieldElement> {
        self.coeffs
            .vec_mul(inputs)
            .expect("input length matches the plan")
    }
}

/// Serialized view of a plan: 1-based nodes and coordinates.
#[derive(Serialize)]
struct PlanView {
    e: NodeId,
    #[serde(rename = "I")]
    helpers: Vec<NodeId>,
    #[serde(rename = "J")]
    coords: Vec<usize>,
    coeffs: Vec<Vec<u64>>,
}

impl Serialize for RepairPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlanView {
            e: self.failed,
            helpers: self.helpers.clone(),
            coords: self.coords.iter().map(|j| j + 1).collect(),
            coeffs: self.coeffs.to_u64_rows(),
        }
        .serialize(s)
    }
}
