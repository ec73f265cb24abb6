//! Exact arithmetic and dense linear algebra over prime fields `F_q`.
//!
//! Every element carries the field it lives in, so mixing two fields is caught
//! instead of silently reduced. The `checked_*` methods report a mismatch as an
//! error; the operator impls (`+`, `-`, `*`) panic on one, which is what the
//! internal linear algebra wants since a matrix is single-field by construction.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order {0} is not prime")]
    NotPrime(u64),
    #[error("field order {0} is too large (q^2 must fit in 64 bits)")]
    OrderTooLarge(u64),
    #[error("field mismatch: F_{left} vs F_{right}")]
    Mismatch { left: u64, right: u64 },
    #[error("zero has no multiplicative inverse")]
    NotInvertible,
    #[error("evaluation point {0} is repeated")]
    RepeatedPoint(u64),
    #[error("evaluation point must be non-zero")]
    ZeroPoint,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// The prime field `F_q`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    /// Largest accepted order; keeps every product of two reduced values in a `u64`.
    pub const MAX_ORDER: u64 = u32::MAX as u64;

    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q > Self::MAX_ORDER {
            return Err(FieldError::OrderTooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn order(&self) -> u64 {
        self.q
    }

    /// The element `value mod q`.
    #[inline]
    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            field: *self,
        }
    }

    /// Maps a signed integer into the field (`-1` becomes `q - 1`).
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        self.elem(value.rem_euclid(self.q as i64) as u64)
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    pub fn elems(&self, values: &[u64]) -> Vec<FieldElement> {
        values.iter().map(|&v| self.elem(v)).collect()
    }

    pub fn zeros(&self, len: usize) -> Vec<FieldElement> {
        vec![self.zero(); len]
    }

    /// Draws an exactly uniform element from `rng`.
    ///
    /// Words in the incomplete top band `[q * floor(2^64 / q), 2^64)` are
    /// rejected so every residue has the same number of preimages.
    pub fn uniform_element<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        // 2^64 mod q
        let rem = (u64::MAX % self.q + 1) % self.q;
        let zone = u64::MAX - rem;
        loop {
            let word = rng.next_u64();
            if word <= zone {
                return self.elem(word % self.q);
            }
        }
    }
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Free-function form of [`PrimeField::uniform_element`].
pub fn uniform_element<R: RngCore + ?Sized>(rng: &mut R, field: PrimeField) -> FieldElement {
    field.uniform_element(rng)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Self) -> Result<(), FieldError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(FieldError::Mismatch {
                left: self.field.q,
                right: other.field.q,
            })
        }
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        let q = self.field.q;
        let s = self.value + rhs.value;
        Ok(Self {
            value: if s >= q { s - q } else { s },
            field: self.field,
        })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        let q = self.field.q;
        Ok(Self {
            value: if self.value >= rhs.value {
                self.value - rhs.value
            } else {
                self.value + q - rhs.value
            },
            field: self.field,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        Ok(Self {
            value: (self.value * rhs.value) % self.field.q,
            field: self.field,
        })
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.field.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat, `a^(q-2)`.
    pub fn inverse(self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::NotInvertible);
        }
        Ok(self.pow(self.field.q - 2))
    }
}

impl serde::Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.value)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident, $atr:ident, $am:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            #[inline]
            fn $m(self, rhs: FieldElement) -> FieldElement {
                match self.$checked(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{e}"),
                }
            }
        }
        impl $atr for FieldElement {
            #[inline]
            fn $am(&mut self, rhs: FieldElement) {
                *self = $tr::$m(*self, rhs);
            }
        }
    };
}

binop!(Add, add, checked_add, AddAssign, add_assign);
binop!(Sub, sub, checked_sub, SubAssign, sub_assign);
binop!(Mul, mul, checked_mul, MulAssign, mul_assign);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.field.zero() - self
    }
}

/// Inner product of two equal-length slices.
pub fn dot(a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    debug_assert_eq!(a.len(), b.len());
    let field = a.first().or(b.first()).map(|x| x.field());
    let Some(field) = field else {
        panic!("dot product of empty vectors has no field");
    };
    let q = field.q;
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.field, y.field, "field mismatch in dot product");
        acc = (acc + x.value * y.value) % q;
    }
    field.elem(acc)
}

/// Dense row-major matrix over a single prime field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: PrimeField, size: usize) -> Self {
        let mut m = Self::zeros(field, size, size);
        for i in 0..size {
            m.set(i, i, field.one());
        }
        m
    }

    /// Builds a matrix from integer rows, reducing every entry mod `q`.
    pub fn from_u64_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self, FieldError> {
        let elems = rows.iter().map(|r| field.elems(r)).collect::<Vec<_>>();
        Self::from_rows(field, elems)
    }

    pub fn from_rows(field: PrimeField, rows: Vec<Vec<FieldElement>>) -> Result<Self, FieldError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(FieldError::Dimension(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            for x in row {
                if x.field != field {
                    return Err(FieldError::Mismatch {
                        left: field.q,
                        right: x.field.q,
                    });
                }
                data.push(x);
            }
        }
        Ok(Self {
            field,
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert_eq!(v.field, self.field, "field mismatch in matrix entry");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_u64_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(FieldElement::value).collect())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                m.set(i, jj, self.get(i, j));
            }
        }
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field, rows.len(), self.cols);
        for (ii, &i) in rows.iter().enumerate() {
            for j in 0..self.cols {
                m.set(ii, j, self.get(i, j));
            }
        }
        m
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix, FieldError> {
        if self.field != other.field {
            return Err(FieldError::Mismatch {
                left: self.field.q,
                right: other.field.q,
            });
        }
        if self.cols != other.cols {
            return Err(FieldError::Dimension(format!(
                "cannot stack {} columns on {} columns",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            field: self.field,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// `A · x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        if x.len() != self.cols {
            return Err(FieldError::Dimension(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        if self.cols == 0 {
            return Ok(self.field.zeros(self.rows));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `x · A` for a row vector `x`.
    pub fn vec_mul(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, FieldError> {
        if x.len() != self.rows {
            return Err(FieldError::Dimension(format!(
                "matrix has {} rows, vector has {} entries",
                self.rows,
                x.len()
            )));
        }
        let q = self.field.q;
        let mut acc = vec![0u64; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.field != self.field {
                return Err(FieldError::Mismatch {
                    left: self.field.q,
                    right: xi.field.q,
                });
            }
            if xi.is_zero() {
                continue;
            }
            for (a, m) in acc.iter_mut().zip(self.row(i)) {
                *a = (*a + xi.value * m.value) % q;
            }
        }
        Ok(acc.into_iter().map(|v| self.field.elem(v)).collect())
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix, FieldError> {
        if self.cols != rhs.rows {
            return Err(FieldError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let rows = (0..self.rows)
            .map(|i| rhs.vec_mul(self.row(i)))
            .collect::<Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            return Ok(Matrix::zeros(self.field, 0, rhs.cols));
        }
        Matrix::from_rows(self.field, rows)
    }

    /// Reduced row echelon form; returns the pivot column of each non-zero row.
    fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = self.get(r, c).inverse().expect("pivot is non-zero");
            for j in 0..self.cols {
                let v = self.get(r, j) * inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(i, j) - factor * self.get(r, j);
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.field, self.to_u64_rows())
    }
}

/// The `rows x |alphas|` matrix with entry `(i, j) = alphas[j]^i`.
pub fn vandermonde(alphas: &[FieldElement], rows: usize) -> Result<Matrix, FieldError> {
    let Some(first) = alphas.first() else {
        return Err(FieldError::Dimension("no evaluation points".into()));
    };
    if rows == 0 {
        return Err(FieldError::Dimension(
            "vandermonde needs at least one row".into(),
        ));
    }
    let field = first.field();
    check_points(alphas)?;
    let mut m = Matrix::zeros(field, rows, alphas.len());
    for (j, &a) in alphas.iter().enumerate() {
        let mut p = field.one();
        for i in 0..rows {
            m.set(i, j, p);
            p *= a;
        }
    }
    Ok(m)
}

/// Checks that evaluation points share a field, are non-zero, and are pairwise distinct.
pub fn check_points(alphas: &[FieldElement]) -> Result<(), FieldError> {
    let mut seen = std::collections::HashSet::new();
    for a in alphas {
        if let Some(f) = alphas.first() {
            f.same_field(a)?;
        }
        if a.is_zero() {
            return Err(FieldError::ZeroPoint);
        }
        if !seen.insert(a.value()) {
            return Err(FieldError::RepeatedPoint(a.value()));
        }
    }
    Ok(())
}

/// Solves `A x = b`.
///
/// Returns `Ok(None)` when the system is inconsistent. Free variables of an
/// underdetermined system are set to zero, so the answer is deterministic.
pub fn solve_linear(
    a: &Matrix,
    b: &[FieldElement],
) -> Result<Option<Vec<FieldElement>>, FieldError> {
    if a.rows() != b.len() {
        return Err(FieldError::Dimension(format!(
            "{} equations but {} right-hand sides",
            a.rows(),
            b.len()
        )));
    }
    let field = a.field();
    let mut aug = Matrix::zeros(field, a.rows(), a.cols() + 1);
    for (i, bi) in b.iter().enumerate() {
        if bi.field() != field {
            return Err(FieldError::Mismatch {
                left: field.q,
                right: bi.field().q,
            });
        }
        for j in 0..a.cols() {
            aug.set(i, j, a.get(i, j));
        }
        aug.set(i, a.cols(), *bi);
    }
    let pivots = aug.rref();
    if pivots.last() == Some(&a.cols()) {
        return Ok(None);
    }
    let mut x = field.zeros(a.cols());
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug.get(r, a.cols());
    }
    Ok(Some(x))
}
