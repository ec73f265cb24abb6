//! Small schemes used by the tests, the acceptance suite and the CLI examples.

use crate::field::{Matrix, PrimeField};
use crate::schemes::{ramp_scheme, shamir_scheme, LinearScheme, RepairPlan, SchemeParams};
use crate::{nodes, NodeId};

pub fn f5() -> PrimeField {
    PrimeField::new(5).expect("5 is prime")
}

/// The three-node scheme over `F_5` with `r = z = 1` in which
/// `c_1 = 2 c_2 + 4 c_3`: Shamir with evaluation points `(3, 2, 1)`, so
/// `c_j = m + u * alpha_j`.
pub fn fig1_scheme() -> LinearScheme {
    shamir_scheme(3, 1, &f5().elems(&[3, 2, 1])).expect("valid fixture")
}

/// Round-one sub-scheme `(m, u) -> (u, m + u)`: the first receiver gets the
/// helper's coin, the second gets share plus coin.
pub fn fig1_subscheme() -> LinearScheme {
    let params = SchemeParams {
        n: 2,
        k: 1,
        r: 0,
        z: 1,
        t: 1,
        q: 5,
    };
    let g = Matrix::from_u64_rows(f5(), &[vec![0, 1], vec![1, 1]]).expect("2x2");
    LinearScheme::generic(params, 1, g).expect("valid fixture")
}

/// Repair of node 1 from nodes 2 and 3 with `f = (2, 4)`.
pub fn fig1_plan() -> RepairPlan {
    fig1_scheme()
        .derive_repair_function(NodeId(1), &nodes(&[2, 3]), &[0])
        .expect("node 1 is repairable from 2 and 3")
}

/// Ramp scheme over `F_q` with evaluation points `1..=n`.
pub fn ramp(n: usize, r: usize, z: usize, q: u64) -> LinearScheme {
    let field = PrimeField::new(q).expect("prime order");
    let alphas: Vec<u64> = (1..=n as u64).collect();
    ramp_scheme(n, r, z, &field.elems(&alphas)).expect("valid fixture")
}

/// The rate-optimal `(4, 2, 1, 1)` ramp scheme over `F_5`.
pub fn ramp4_scheme() -> LinearScheme {
    ramp(4, 1, 1, 5)
}

/// Two independent copies of [`fig1_scheme`] interleaved into one vector
/// scheme with `t = 2`: node `i` stores `(m_a + alpha_i u_a, m_b + alpha_i u_b)`.
pub fn vector_fig1x2_scheme() -> LinearScheme {
    let params = SchemeParams {
        n: 3,
        k: 1,
        r: 1,
        z: 1,
        t: 2,
        q: 5,
    };
    let g = Matrix::from_u64_rows(f5(), &vector_fig1x2_generator()).expect("4x6");
    LinearScheme::generic(params, 2, g).expect("valid fixture")
}

/// Rows `m_a, m_b, u_a, u_b`; columns `c_{1,1}, c_{1,2}, c_{2,1}, ...`.
pub fn vector_fig1x2_generator() -> Vec<Vec<u64>> {
    vec![
        vec![1, 0, 1, 0, 1, 0],
        vec![0, 1, 0, 1, 0, 1],
        vec![3, 0, 2, 0, 1, 0],
        vec![0, 3, 0, 2, 0, 1],
    ]
}

/// Plan for the vector fixture reading both coordinates of every other node.
pub fn vector_plan(failed: usize) -> RepairPlan {
    let others: Vec<NodeId> = (1..=3).filter(|&i| i != failed).map(NodeId).collect();
    vector_fig1x2_scheme()
        .derive_repair_function(NodeId(failed), &others, &[0, 1])
        .expect("repairable from the other two nodes")
}
