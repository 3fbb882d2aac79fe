//! Dense complex vectors and matrices for the 2-, 4- and 16-dimensional
//! spaces used by the simulator.
//!
//! Everything here is deliberately small and dense: row-major storage,
//! Kronecker products with the left operand varying slowest, and max-norm
//! comparisons against an absolute tolerance.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Absolute tolerance for exact-algebra identities.
pub const TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Shorthand constructor for a complex number.
#[inline]
pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HilbertError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{len} entries do not form a square matrix")]
    NotSquare { len: usize },
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error("zero vector has no projector")]
    ZeroVector,
}

pub type Result<T> = std::result::Result<T, HilbertError>;

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(HilbertError::DimensionMismatch { left, right })
    }
}

/// Kronecker product. The left operand occupies the slowest-varying index.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

/// Free-function form of [`Tensor::tensor`].
pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// A column vector of complex amplitudes.
#[derive(Clone, PartialEq)]
pub struct CVec {
    amps: Vec<C64>,
}

impl CVec {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(HilbertError::EmptyDimension);
        }
        Ok(Self { amps })
    }

    pub fn from_slice(amps: &[C64]) -> Self {
        assert!(!amps.is_empty(), "empty vector");
        Self {
            amps: amps.to_vec(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty vector");
        Self {
            amps: vec![ZERO; dim],
        }
    }

    /// Standard basis vector `e_index` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut v = Self::zeros(dim);
        v.amps[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn get(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &CVec) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, factor: C64) -> CVec {
        CVec {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn normalized(&self) -> Result<CVec> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HilbertError::ZeroVector);
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }

    /// Born weights `|amp|^2` in basis order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CVec) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &CVec, tol: f64) -> bool {
        matches!(self.max_abs_diff(other), Ok(d) if d <= tol)
    }

    /// True iff some unit complex `phi` gives `‖a − phi·b‖ ≤ tol`.
    ///
    /// `phi` is fixed by the largest-magnitude component of `b`.
    pub fn equal_up_to_global_phase(&self, other: &CVec, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let (k, pivot) = other
            .amps
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
            .map(|(k, a)| (k, *a))
            .expect("non-empty");
        if pivot.norm() == 0.0 {
            return self.norm() <= tol;
        }
        let ratio = self.amps[k] / pivot;
        let phi = if ratio.norm() == 0.0 {
            ONE
        } else {
            ratio / ratio.norm()
        };
        (self - &other.scale(phi)).norm() <= tol
    }
}

/// Free-function form of [`CVec::equal_up_to_global_phase`].
pub fn equal_up_to_global_phase(a: &CVec, b: &CVec, tol: f64) -> bool {
    a.equal_up_to_global_phase(b, tol)
}

impl Tensor for CVec {
    fn tensor(&self, other: &CVec) -> CVec {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        CVec { amps }
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl Add for &CVec {
    type Output = CVec;

    fn add(self, rhs: &CVec) -> CVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        CVec {
            amps: self
                .amps
                .iter()
                .zip(&rhs.amps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CVec {
    type Output = CVec;

    fn sub(self, rhs: &CVec) -> CVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        CVec {
            amps: self
                .amps
                .iter()
                .zip(&rhs.amps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// A square complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    /// Builds a matrix from row-major entries; the length must be a square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let len = data.len();
        if len == 0 {
            return Err(HilbertError::EmptyDimension);
        }
        let dim = (len as f64).sqrt().round() as usize;
        if dim * dim != len {
            return Err(HilbertError::NotSquare { len });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        assert!(N > 0, "empty matrix");
        Self {
            dim: N,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty matrix");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        m
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (k, e) in entries.iter().enumerate() {
            m.data[k * m.dim + k] = *e;
        }
        m
    }

    /// `|ket><ket| / <ket|ket>`.
    pub fn projector(ket: &CVec) -> Result<CMat> {
        let n = ket.norm_sqr();
        if n == 0.0 {
            return Err(HilbertError::ZeroVector);
        }
        let dim = ket.dim();
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for col in 0..dim {
                m.data[r * dim + col] = ket.amps[r] * ket.amps[col].conj() / n;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> CVec {
        CVec {
            amps: (0..self.dim).map(|r| self.get(r, col)).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for col in 0..self.dim {
                m.data[col * self.dim + r] = self.get(r, col).conj();
            }
        }
        m
    }

    pub fn scale(&self, factor: C64) -> CMat {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        check_dims(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut m = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for col in 0..n {
                    m.data[r * n + col] += a * rhs.data[k * n + col];
                }
            }
        }
        Ok(m)
    }

    /// Matrix-vector product.
    pub fn apply(&self, state: &CVec) -> Result<CVec> {
        check_dims(self.dim, state.dim())?;
        let n = self.dim;
        let amps = (0..n)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(&state.amps)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(CVec { amps })
    }

    pub fn max_abs_diff(&self, other: &CMat) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &CMat, tol: f64) -> bool {
        matches!(self.max_abs_diff(other), Ok(d) if d <= tol)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.dagger().matmul(self).expect("same dim");
        gram.max_abs_diff(&Self::identity(self.dim))
            .expect("same dim")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.dagger(), tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.approx_eq(&(self * self), tol)
    }
}

/// Free-function form of [`CMat::dagger`].
pub fn dagger(op: &CMat) -> CMat {
    op.dagger()
}

/// Free-function form of [`CMat::apply`].
pub fn apply(op: &CMat, state: &CVec) -> Result<CVec> {
    op.apply(state)
}

/// Free-function form of [`CMat::projector`].
pub fn projector(ket: &CVec) -> Result<CMat> {
    CMat::projector(ket)
}

impl Tensor for CMat {
    fn tensor(&self, other: &CMat) -> CMat {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = CMat::zeros(dim);
        for ar in 0..n {
            for ac in 0..n {
                let a = self.data[ar * n + ac];
                for br in 0..m {
                    for bc in 0..m {
                        out.data[(ar * m + br) * dim + ac * m + bc] = a * other.data[br * m + bc];
                    }
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[C64]> = self.data.chunks(self.dim).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Panics on dimension mismatch; use [`CMat::matmul`] for a checked product.
impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("matrix dimension mismatch")
    }
}

/// Panics on dimension mismatch; use [`CMat::apply`] for a checked product.
impl Mul<&CVec> for &CMat {
    type Output = CVec;

    fn mul(self, rhs: &CVec) -> CVec {
        self.apply(rhs).expect("matrix/vector dimension mismatch")
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ev_mirror() -> CMat {
        let s = FRAC_1_SQRT_2;
        CMat::from_rows([[c(0.0, s), c(s, 0.0)], [c(s, 0.0), c(0.0, s)]])
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c(re, im))
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = CVec> {
        prop::collection::vec(arb_c64(), dim)
            .prop_filter("non-zero", |v| v.iter().any(|a| a.norm() > 1e-3))
            .prop_map(|v| CVec::new(v).unwrap().normalized().unwrap())
    }

    fn arb_mat(dim: usize) -> impl Strategy<Value = CMat> {
        prop::collection::vec(arb_c64(), dim * dim).prop_map(|v| CMat::from_row_major(v).unwrap())
    }

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(
            tensor(&CMat::identity(4), &CMat::identity(4)),
            CMat::identity(16)
        );
    }

    #[test]
    fn basis_alignment() {
        assert_eq!(
            tensor(&CVec::basis(4, 0), &CVec::basis(4, 0)),
            CVec::basis(16, 0)
        );
        // left factor varies slowest
        assert_eq!(
            tensor(&CVec::basis(4, 1), &CVec::basis(4, 3)),
            CVec::basis(16, 7)
        );
    }

    #[test]
    fn ev_mirror_action() {
        let s = FRAC_1_SQRT_2;
        let u = ev_mirror();
        let out = u.apply(&CVec::basis(2, 0)).unwrap();
        assert!(out.approx_eq(&CVec::from_slice(&[c(0.0, s), c(s, 0.0)]), TOL));
        let out2 = (&u * &u).apply(&CVec::basis(2, 0)).unwrap();
        assert!(out2.approx_eq(&CVec::from_slice(&[ZERO, I]), TOL));
        assert!((&u.dagger() * &u).approx_eq(&CMat::identity(2), TOL));
    }

    #[test]
    fn apply_identity_and_mismatch() {
        let v = CVec::from_slice(&[c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.5, 0.0)]);
        assert_eq!(CMat::identity(4).apply(&v).unwrap(), v);
        assert_eq!(
            CMat::identity(2).apply(&v),
            Err(HilbertError::DimensionMismatch { left: 2, right: 4 })
        );
    }

    #[test]
    fn dagger_identity() {
        assert_eq!(dagger(&CMat::identity(4)), CMat::identity(4));
    }

    #[test]
    fn projector_basics() {
        let p = projector(&CVec::basis(4, 0)).unwrap();
        let mut expected = CMat::zeros(4);
        expected.set(0, 0, ONE);
        assert_eq!(p, expected);
        assert_eq!(projector(&CVec::zeros(4)), Err(HilbertError::ZeroVector));
    }

    #[test]
    fn global_phase_examples() {
        let psi = CVec::from_slice(&[c(0.6, 0.0), c(0.0, 0.8), ZERO, ZERO]);
        assert!(psi.equal_up_to_global_phase(&psi.scale(I), TOL));
        let mut bumped = psi.amplitudes().to_vec();
        bumped[2] = c(1e-3, 0.0);
        let bumped = CVec::new(bumped).unwrap();
        assert!(!psi.equal_up_to_global_phase(&bumped, TOL));
        assert!(!psi.equal_up_to_global_phase(&CVec::basis(4, 2), TOL));
    }

    #[test]
    fn non_square_rejected() {
        assert_eq!(
            CMat::from_row_major(vec![ONE; 3]),
            Err(HilbertError::NotSquare { len: 3 })
        );
    }

    proptest! {
        #[test]
        fn dagger_is_involution(m in arb_mat(4)) {
            prop_assert_eq!(m.dagger().dagger(), m);
        }

        #[test]
        fn tensor_is_associative(a in arb_mat(2), b in arb_mat(2), c_ in arb_mat(2)) {
            let left = a.tensor(&b).tensor(&c_);
            let right = a.tensor(&b.tensor(&c_));
            // exact up to the order of two floating-point products
            prop_assert!(left.approx_eq(&right, 1e-15));
        }

        #[test]
        fn projector_is_hermitian_idempotent_rank_one(psi in arb_state(4)) {
            let p = projector(&psi).unwrap();
            prop_assert!(p.is_projector(TOL));
            prop_assert!((p.trace() - ONE).norm() <= TOL);
        }

        #[test]
        fn global_phase_detected(psi in arb_state(16), theta in 0.0f64..std::f64::consts::TAU) {
            let rotated = psi.scale(C64::from_polar(1.0, theta));
            prop_assert!(psi.equal_up_to_global_phase(&rotated, TOL));
        }
    }
}
