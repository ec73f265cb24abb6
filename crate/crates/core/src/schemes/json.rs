//! Scheme definition files.
//!
//! ```json
//! { "construction": "shamir", "q": 5, "n": 3, "z": 1, "alphas": [3, 2, 1],
//!   "repair_plans": [ { "e": 1, "I": [2, 3], "coeffs": [2, 4] } ] }
//! ```
//!
//! `"ramp"` additionally takes `r`; `"generic"` takes `k, r, t, rho` and a
//! row-major `generator`. Node ids and the coordinate set `J` are 1-based.

use serde::{Deserialize, Serialize};

use super::{
    ramp_scheme, shamir_scheme, LinearScheme, RepairPlan, Result, SchemeError, SchemeParams,
};
use crate::field::{Matrix, PrimeField};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDef {
    pub construction: String,
    pub q: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub z: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repair_plans: Vec<PlanDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDef {
    pub e: usize,
    #[serde(rename = "I")]
    pub helpers: Vec<usize>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<usize>>,
    pub coeffs: CoeffsDef,
}

/// A flat list is the single-column case (`t = 1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffsDef {
    Column(Vec<u64>),
    Matrix(Vec<Vec<u64>>),
}

/// Round-one sub-scheme overrides shared by all participants.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDef {
    /// Evaluation points of the `(z+1, 1, 0, z)` Shamir sub-scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_alphas: Option<Vec<u64>>,
    /// Explicit `(z+1) x (z+1)` generator for the Construction-2 sub-scheme,
    /// first row message, remaining rows keys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2_generator: Option<Vec<Vec<u64>>>,
    /// Evaluation points of the `(n, n-z, 0, z)` ramp sub-scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_alphas: Option<Vec<u64>>,
}

impl SchemeDef {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn build(&self) -> Result<LinearScheme> {
        let field = PrimeField::new(self.q)?;
        let default_alphas = || (1..=self.n as u64).collect::<Vec<_>>();
        let alphas = self.alphas.clone().unwrap_or_else(default_alphas);
        let t = self.t.unwrap_or(1);
        let scheme = match self.construction.as_str() {
            "shamir" => {
                self.expect_scalar(t)?;
                let s = shamir_scheme(self.n, self.z, &field.elems(&alphas))?;
                self.expect_declared(s.params())?;
                s
            }
            "ramp" => {
                self.expect_scalar(t)?;
                let r = self
                    .r
                    .ok_or_else(|| SchemeError::InvalidParams("ramp scheme needs r".into()))?;
                let s = ramp_scheme(self.n, r, self.z, &field.elems(&alphas))?;
                self.expect_declared(s.params())?;
                s
            }
            "generic" => {
                let missing =
                    |what: &str| SchemeError::InvalidParams(format!("generic scheme needs {what}"));
                let params = SchemeParams {
                    n: self.n,
                    k: self.k.ok_or_else(|| missing("k"))?,
                    r: self.r.ok_or_else(|| missing("r"))?,
                    z: self.z,
                    t,
                    q: self.q,
                };
                let rows = self
                    .generator
                    .as_ref()
                    .ok_or_else(|| missing("generator"))?;
                let g = Matrix::from_u64_rows(field, rows)?;
                LinearScheme::generic(params, self.rho.ok_or_else(|| missing("rho"))?, g)?
            }
            other => {
                return Err(SchemeError::InvalidParams(format!(
                    "unknown construction {other:?}"
                )));
            }
        };
        Ok(scheme)
    }

    fn expect_scalar(&self, t: usize) -> Result<()> {
        if t != 1 || self.generator.is_some() || self.rho.is_some() {
            return Err(SchemeError::InvalidParams(format!(
                "{} schemes are scalar and take no generator or rho",
                self.construction
            )));
        }
        Ok(())
    }

    fn expect_declared(&self, params: &SchemeParams) -> Result<()> {
        if self.k.is_some_and(|k| k != params.k) || self.r.is_some_and(|r| r != params.r) {
            return Err(SchemeError::InvalidParams(format!(
                "declared (k, r) = ({:?}, {:?}) but the construction gives ({}, {})",
                self.k, self.r, params.k, params.r
            )));
        }
        Ok(())
    }

    /// Declared repair plans, checked for shape only. A plan whose
    /// coefficients are wrong is kept so verification can report it.
    pub fn plans(&self, scheme: &LinearScheme) -> Result<Vec<RepairPlan>> {
        self.repair_plans.iter().map(|p| p.build(scheme)).collect()
    }
}

impl PlanDef {
    pub fn build(&self, scheme: &LinearScheme) -> Result<RepairPlan> {
        let field = scheme.field();
        let coords = match &self.coords {
            Some(js) => js
                .iter()
                .map(|&j| {
                    j.checked_sub(1)
                        .ok_or_else(|| SchemeError::InvalidPlan("coordinates are 1-based".into()))
                })
                .collect::<Result<Vec<_>>>()?,
            None => (0..scheme.t()).collect(),
        };
        let coeffs = match &self.coeffs {
            CoeffsDef::Column(col) => {
                Matrix::from_u64_rows(field, &col.iter().map(|&c| vec![c]).collect::<Vec<_>>())?
            }
            CoeffsDef::Matrix(rows) => Matrix::from_u64_rows(field, rows)?,
        };
        let helpers: Vec<NodeId> = self.helpers.iter().copied().map(NodeId).collect();
        let plan = RepairPlan::new_unchecked(NodeId(self.e), helpers, coords, coeffs);
        plan.check_shape(scheme)?;
        Ok(plan)
    }
}
