//! Dense complex linear algebra for one and two spin-1/2 systems.
//!
//! Everything here is fixed-size: matrices are stored in a 4x4 array and
//! carry a [`Dim`] tag, so no allocation happens on the integrator hot path.
//! Dimension-4 operators use the ordering `|b a>` with the spectator spin `b`
//! as the most significant factor (index 0 = b-up a-up, 3 = b-down a-down).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// `e^{i phi}`
#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}

/// Hilbert-space dimension: a single qubit or a qubit pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Four,
}

impl Dim {
    #[inline]
    pub fn size(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Four => 4,
        }
    }

    pub fn from_size(n: usize) -> Result<Dim> {
        match n {
            2 => Ok(Dim::Two),
            4 => Ok(Dim::Four),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }
}

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: Dim,
    data: [[C64; 4]; 4],
}

impl Matrix {
    pub fn zeros(dim: Dim) -> Self {
        Matrix {
            dim,
            data: [[ZERO; 4]; 4],
        }
    }

    pub fn identity(dim: Dim) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim.size() {
            m.data[k][k] = ONE;
        }
        m
    }

    pub fn from_fn(dim: Dim, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim.size() {
            for c in 0..dim.size() {
                m.data[r][c] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from rows. The row count fixes the dimension.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let dim = Dim::from_size(rows.len())?;
        let mut m = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim.size() {
                return Err(Error::DimensionMismatch {
                    expected: dim.size(),
                    found: row.len(),
                });
            }
            for (c, &z) in row.iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite("matrix entry"));
                }
                m.data[r][c] = z;
            }
        }
        Ok(m)
    }

    pub fn diag(entries: &[C64]) -> Result<Self> {
        let dim = Dim::from_size(entries.len())?;
        let mut m = Self::zeros(dim);
        for (k, &z) in entries.iter().enumerate() {
            m.data[k][k] = z;
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.dim.size()
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        let n = self.size();
        (0..n).map(|r| self.data[r][..n].to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.data[c][r].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.size()).map(|k| self.data[k][k]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::from_fn(self.dim, |r, c| self.data[r][c] * z)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn entries(&self) -> impl Iterator<Item = C64> + '_ {
        let n = self.size();
        self.data[..n].iter().flat_map(move |row| row[..n].iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        (*self - *other).max_abs()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.off_diagonal_max() <= tol
    }

    pub fn off_diagonal_max(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    worst = worst.max(self.data[r][c].norm());
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &StateVector) -> [C64; 4] {
        assert_eq!(self.dim, v.dim, "dimension mismatch");
        let n = self.size();
        let mut out = [ZERO; 4];
        for (r, slot) in out.iter_mut().enumerate().take(n) {
            *slot = (0..n).map(|c| self.data[r][c] * v.amps[c]).sum();
        }
        out
    }

    pub(crate) fn to_nalgebra4(self) -> Matrix4<C64> {
        Matrix4::from_fn(|r, c| self.data[r][c])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        assert!(r < self.size() && c < self.size(), "index out of range");
        &self.data[r][c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        assert!(r < self.size() && c < self.size(), "index out of range");
        &mut self.data[r][c]
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.size();
        let mut out = Matrix::zeros(self.dim);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r][k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r][c] += a * rhs.data[k][c];
                }
            }
        }
        out
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix::from_fn(self.dim, |r, c| self.data[r][c] + rhs.data[r][c])
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix::from_fn(self.dim, |r, c| self.data[r][c] - rhs.data[r][c])
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-ONE)
    }
}

impl Mul<f64> for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:>9.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "[ {} ]", cells.join("  "))?;
        }
        Ok(())
    }
}

/// Normalized pure state of dimension 2 or 4.
#[derive(Clone, Copy, PartialEq)]
pub struct StateVector {
    dim: Dim,
    amps: [C64; 4],
}

impl StateVector {
    /// Normalizes the given amplitudes.
    pub fn new(amplitudes: &[C64]) -> Result<Self> {
        let dim = Dim::from_size(amplitudes.len())?;
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("state amplitude"));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        let mut amps = [ZERO; 4];
        for (slot, z) in amps.iter_mut().zip(amplitudes) {
            *slot = z / norm;
        }
        Ok(StateVector { dim, amps })
    }

    pub(crate) fn from_array(dim: Dim, amps: [C64; 4]) -> Self {
        StateVector { dim, amps }
    }

    pub fn basis(dim: Dim, k: usize) -> Self {
        assert!(k < dim.size(), "basis index out of range");
        let mut amps = [ZERO; 4];
        amps[k] = ONE;
        StateVector { dim, amps }
    }

    pub fn up() -> Self {
        Self::basis(Dim::Two, 0)
    }

    pub fn down() -> Self {
        Self::basis(Dim::Two, 1)
    }

    /// `|b> (x) |a>` in the `|b a>` ordering.
    pub fn product(b: &StateVector, a: &StateVector) -> Result<Self> {
        if b.dim != Dim::Two || a.dim != Dim::Two {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: if b.dim != Dim::Two { b.size() } else { a.size() },
            });
        }
        let mut amps = [ZERO; 4];
        for i in 0..2 {
            for j in 0..2 {
                amps[2 * i + j] = b.amps[i] * a.amps[j];
            }
        }
        Ok(StateVector {
            dim: Dim::Four,
            amps,
        })
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.dim.size()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps[..self.size()]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<self|M|self>`, real part. Exact for Hermitian `M`.
    pub fn expectation(&self, m: &Matrix) -> f64 {
        let mv = m.mul_vec(self);
        self.amplitudes()
            .iter()
            .zip(mv.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re
    }

    /// Bloch vector. For dimension 4 this is the reduced Bloch vector of
    /// spin `a` (the low-order factor).
    pub fn bloch(&self) -> [f64; 3] {
        let (a, b): (C64, C64);
        match self.dim {
            Dim::Two => {
                a = self.amps[0];
                b = self.amps[1];
                let ab = a.conj() * b;
                [2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()]
            }
            Dim::Four => {
                let mut v = [0.0; 3];
                for blk in 0..2 {
                    let a = self.amps[2 * blk];
                    let b = self.amps[2 * blk + 1];
                    let ab = a.conj() * b;
                    v[0] += 2.0 * ab.re;
                    v[1] += 2.0 * ab.im;
                    v[2] += a.norm_sqr() - b.norm_sqr();
                }
                v
            }
        }
    }

    pub fn apply(&self, u: &UnitaryMatrix) -> StateVector {
        StateVector {
            dim: self.dim,
            amps: u.0.mul_vec(self),
        }
    }

    /// Global phase fixed so the first non-negligible amplitude is real and
    /// non-negative.
    pub fn canonical_phase(&self) -> StateVector {
        let mut out = *self;
        if let Some(z) = self.amplitudes().iter().find(|z| z.norm() > 1e-14) {
            let ph = z.conj() / z.norm();
            for a in out.amps.iter_mut() {
                *a *= ph;
            }
        }
        out
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amplitudes()).finish()
    }
}

/// Hermitian operator of dimension 2 or 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianOperator(Matrix);

impl HermitianOperator {
    /// Validates hermiticity and stores the exactly symmetrized matrix.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("Hermitian operator"));
        }
        let deviation = m.hermiticity_defect();
        if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// For matrices Hermitian by construction. Non-finite entries are kept so
    /// downstream checks can report them.
    pub(crate) fn symmetrized(m: Matrix) -> Self {
        HermitianOperator((m + m.adjoint()) * 0.5)
    }

    pub fn zero(dim: Dim) -> Self {
        HermitianOperator(Matrix::zeros(dim))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.0.dim
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator(self.0 * s)
    }
}

impl Add for HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: HermitianOperator) -> HermitianOperator {
        HermitianOperator(self.0 + rhs.0)
    }
}

impl Sub for HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: HermitianOperator) -> HermitianOperator {
        HermitianOperator(self.0 - rhs.0)
    }
}

/// Unitary operator of dimension 2 or 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryMatrix(Matrix);

impl UnitaryMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("unitary matrix"));
        }
        let deviation = m.unitarity_defect();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(dim: Dim) -> Self {
        UnitaryMatrix(Matrix::identity(dim))
    }

    /// `diag(e^{i phi_k})`
    pub fn diag_phases(phases: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = phases.iter().map(|&p| cis(p)).collect();
        Ok(UnitaryMatrix(Matrix::diag(&entries)?))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.0.dim
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn global_phase(&self, phi: f64) -> Self {
        UnitaryMatrix(self.0.scale(cis(phi)))
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        psi.apply(self)
    }
}

impl Mul for UnitaryMatrix {
    type Output = UnitaryMatrix;
    fn mul(self, rhs: UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(self.0 * rhs.0)
    }
}

impl fmt::Display for UnitaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Kronecker product `a (x) b` with `a` as the most significant factor.
pub fn tensor(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    for m in [a, b] {
        if m.dim != Dim::Two {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.size(),
            });
        }
    }
    Ok(Matrix::from_fn(Dim::Four, |r, c| {
        a.data[r / 2][c / 2] * b.data[r % 2][c % 2]
    }))
}

/// `|Tr(U^dag V)| / d`, invariant under global phase.
pub fn fidelity(u: &UnitaryMatrix, v: &UnitaryMatrix) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim().size(),
            found: v.dim().size(),
        });
    }
    let f = (u.0.adjoint() * v.0).trace().norm() / u.dim().size() as f64;
    Ok(f.min(1.0))
}

/// Largest entrywise modulus of `U - V`. Not phase invariant.
pub fn operator_distance(u: &UnitaryMatrix, v: &UnitaryMatrix) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim().size(),
            found: v.dim().size(),
        });
    }
    Ok(u.0.max_abs_diff(&v.0))
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a 2x2 Hermitian
/// operator. Each eigenvector has its first non-zero component real and
/// non-negative.
#[derive(Clone, Copy, Debug)]
pub struct Eigensystem2 {
    pub values: [f64; 2],
    pub vectors: [StateVector; 2],
}

/// Pauli decomposition `H = a0 I + ax sx + ay sy + az sz` of a 2x2 Hermitian.
fn pauli_coefficients(m: &Matrix) -> (f64, [f64; 3]) {
    let h00 = m.data[0][0].re;
    let h11 = m.data[1][1].re;
    let h01 = m.data[0][1];
    (0.5 * (h00 + h11), [h01.re, -h01.im, 0.5 * (h00 - h11)])
}

pub fn eigensystem_2x2(h: &HermitianOperator) -> Result<Eigensystem2> {
    if h.dim() != Dim::Two {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: h.dim().size(),
        });
    }
    let (a0, a) = pauli_coefficients(h.matrix());
    let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if r == 0.0 {
        return Ok(Eigensystem2 {
            values: [a0, a0],
            vectors: [StateVector::up(), StateVector::down()],
        });
    }
    let theta = (a[0].hypot(a[1])).atan2(a[2]);
    let phi = a[1].atan2(a[0]);
    let (s, c) = (0.5 * theta).sin_cos();
    let upper = StateVector::from_array(
        Dim::Two,
        [C64::new(c, 0.0), cis(phi) * s, ZERO, ZERO],
    );
    let lower = StateVector::from_array(
        Dim::Two,
        [C64::new(s, 0.0), -cis(phi) * c, ZERO, ZERO],
    );
    Ok(Eigensystem2 {
        values: [a0 + r, a0 - r],
        vectors: [upper.canonical_phase(), lower.canonical_phase()],
    })
}

/// Real eigenvalues and unitary eigenvector matrix (columns) of a Hermitian
/// operator of either dimension, ascending order not guaranteed.
fn eigen_decompose(h: &HermitianOperator) -> ([f64; 4], Matrix) {
    match h.dim() {
        Dim::Two => {
            // unreachable from mat_exp_hermitian; kept for completeness
            let es = eigensystem_2x2(h).expect("dimension checked");
            let v = Matrix::from_fn(Dim::Two, |r, c| es.vectors[c].amps[r]);
            ([es.values[0], es.values[1], 0.0, 0.0], v)
        }
        Dim::Four => {
            let eig = nalgebra::SymmetricEigen::new(h.matrix().to_nalgebra4());
            let v = Matrix::from_fn(Dim::Four, |r, c| eig.eigenvectors[(r, c)]);
            let mut vals = [0.0; 4];
            for (k, slot) in vals.iter_mut().enumerate() {
                *slot = eig.eigenvalues[k];
            }
            (vals, v)
        }
    }
}

/// `exp(-i H t)`.
///
/// Dimension 2 uses the closed form
/// `e^{-i a0 t} (cos(r t) I - i sin(r t) n.sigma)`; dimension 4 goes through
/// a Hermitian eigendecomposition unless it splits into two 2x2 blocks.
pub fn mat_exp_hermitian(h: &HermitianOperator, t: f64) -> Result<UnitaryMatrix> {
    if !t.is_finite() {
        return Err(Error::NonFinite("evolution time"));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("Hamiltonian"));
    }
    Ok(exp_unchecked(h, t))
}

pub(crate) fn exp_unchecked(h: &HermitianOperator, t: f64) -> UnitaryMatrix {
    let m = &h.matrix().data;
    match h.dim() {
        Dim::Two => {
            let mut out = Matrix::zeros(Dim::Two);
            write_exp2(m, 0, t, &mut out);
            UnitaryMatrix(out)
        }
        Dim::Four if is_block_diagonal(m) => {
            let mut out = Matrix::zeros(Dim::Four);
            write_exp2(m, 0, t, &mut out);
            write_exp2(m, 2, t, &mut out);
            UnitaryMatrix(out)
        }
        Dim::Four => {
            let (vals, v) = eigen_decompose(h);
            let mut d = Matrix::zeros(Dim::Four);
            for (k, &lam) in vals.iter().enumerate() {
                d.data[k][k] = cis(-lam * t);
            }
            UnitaryMatrix(v * d * v.adjoint())
        }
    }
}

/// No coupling between the spin-b up and down sectors.
fn is_block_diagonal(m: &[[C64; 4]; 4]) -> bool {
    (0..2).all(|r| (2..4).all(|c| m[r][c] == ZERO && m[c][r] == ZERO))
}

/// Closed-form `exp(-i h t)` of the 2x2 block at offset `o`, written into the
/// same block of `out`.
fn write_exp2(m: &[[C64; 4]; 4], o: usize, t: f64, out: &mut Matrix) {
    let h00 = m[o][o].re;
    let h11 = m[o + 1][o + 1].re;
    let h01 = m[o][o + 1];
    let a0 = 0.5 * (h00 + h11);
    let a = [h01.re, -h01.im, 0.5 * (h00 - h11)];
    let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let (s, c) = (r * t).sin_cos();
    // sin(rt)/r, finite as r -> 0
    let k = if r == 0.0 { t } else { s / r };
    let ph = cis(-a0 * t);
    // -i k (ax sx + ay sy): (0,1) entry is -i k (ax - i ay)
    out.data[o][o] = ph * C64::new(c, -k * a[2]);
    out.data[o + 1][o + 1] = ph * C64::new(c, k * a[2]);
    out.data[o][o + 1] = ph * C64::new(-k * a[1], -k * a[0]);
    out.data[o + 1][o] = ph * C64::new(k * a[1], -k * a[0]);
}

/// Pauli matrices and single-qubit rotations.
pub mod pauli {
    use super::*;

    pub fn identity2() -> Matrix {
        Matrix::identity(Dim::Two)
    }

    pub fn sigma_x() -> Matrix {
        Matrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]]).expect("2x2")
    }

    pub fn sigma_y() -> Matrix {
        Matrix::from_rows(&[[ZERO, -I], [I, ZERO]]).expect("2x2")
    }

    pub fn sigma_z() -> Matrix {
        Matrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]]).expect("2x2")
    }

    /// Transverse Pauli operator rotated by `angle` about z:
    /// off-diagonal entries `e^{-i angle}` (upper) and `e^{+i angle}` (lower).
    pub fn sigma_x_rotated(angle: f64) -> Matrix {
        Matrix::from_rows(&[[ZERO, cis(-angle)], [cis(angle), ZERO]]).expect("2x2")
    }

    /// `R_n(beta) = exp(-i beta (n.sigma) / 2)` for a unit axis `n`.
    pub fn rotation(axis: [f64; 3], beta: f64) -> UnitaryMatrix {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, c) = (0.5 * beta).sin_cos();
        let m = Matrix::from_rows(&[
            [C64::new(c, -s * n[2]), C64::new(-s * n[1], -s * n[0])],
            [C64::new(s * n[1], -s * n[0]), C64::new(c, s * n[2])],
        ])
        .expect("2x2");
        UnitaryMatrix(m)
    }

    pub fn rx(beta: f64) -> UnitaryMatrix {
        rotation([1.0, 0.0, 0.0], beta)
    }

    pub fn ry(beta: f64) -> UnitaryMatrix {
        rotation([0.0, 1.0, 0.0], beta)
    }

    pub fn rz(beta: f64) -> UnitaryMatrix {
        rotation([0.0, 0.0, 1.0], beta)
    }

    /// `I_b (x) u`: a single-qubit operator on spin `a` of the pair.
    pub fn on_target(u: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(tensor(&identity2(), u.matrix()).expect("2x2 factors"))
    }

    /// `I_b (x) m`
    pub fn target_op(m: &Matrix) -> Matrix {
        tensor(&identity2(), m).expect("2x2 factors")
    }

    /// `m (x) I_a`
    pub fn spectator_op(m: &Matrix) -> Matrix {
        tensor(m, &identity2()).expect("2x2 factors")
    }
}
