//! Dense complex matrices and the superoperators built on them.
//!
//! [`OperatorMatrix`] is the general square matrix used at API boundaries and
//! by the pseudomode oracle. [`Mat2`] is a `Copy` 2×2 block used on the hot
//! path of the hierarchy integrator, where heap-allocated matrices would
//! dominate the cost.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Dense, row-major complex square matrix.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a
    /// nonzero perfect square.
    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::param(
                "entries",
                format!("{} entries do not form a square matrix", entries.len()),
            ));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zeros(self.dim);
        matmul_into(self.dim, &self.entries, &other.entries, &mut out.entries);
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (m, n) = (self.dim, other.dim);
        Self::from_fn(m * n, |r, c| {
            self[(r / n, c / n)] * other[(r % n, c % n)]
        })
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest elementwise modulus of `self − self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Partial trace over the second tensor factor of dimension `inner`.
    pub fn partial_trace_second(&self, inner: usize) -> Result<Self> {
        if inner == 0 || self.dim % inner != 0 {
            return Err(Error::param(
                "inner",
                format!("{inner} does not divide dimension {}", self.dim),
            ));
        }
        let outer = self.dim / inner;
        Ok(Self::from_fn(outer, |a, b| {
            (0..inner)
                .map(|k| self[(a * inner + k, b * inner + k)])
                .sum()
        }))
    }
}

pub(crate) fn matmul_into(dim: usize, a: &[C64], b: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|x| *x = ZERO);
    for i in 0..dim {
        let row = &mut out[i * dim..(i + 1) * dim];
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == ZERO {
                continue;
            }
            let brow = &b[k * dim..(k + 1) * dim];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for OperatorMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OperatorMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `A^× B = AB − BA`.
pub fn commutator_super(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.matmul(b)?.try_sub(&b.matmul(a)?)
}

/// `A^∘ B = AB + BA`.
pub fn anticommutator_super(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.matmul(b)?.try_add(&b.matmul(a)?)
}

pub fn sigma_x() -> OperatorMatrix {
    Mat2::SIGMA_X.into()
}

pub fn sigma_y() -> OperatorMatrix {
    Mat2::SIGMA_Y.into()
}

pub fn sigma_z() -> OperatorMatrix {
    Mat2::SIGMA_Z.into()
}

/// Health report for a candidate density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    pub trace: C64,
    /// max |ρ − ρ†| elementwise
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Tr ρ²
    pub purity: f64,
}

impl DensityDiagnostics {
    pub const TRACE_TOL: f64 = 1e-8;
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-6;
    pub const PURITY_TOL: f64 = 1e-8;

    /// Returns a description of the first violated bound, if any.
    pub fn violation(&self) -> Option<String> {
        if (self.trace - ONE).norm() > Self::TRACE_TOL {
            return Some(format!("trace {} differs from 1", self.trace));
        }
        if self.hermiticity_defect > Self::HERMITICITY_TOL {
            return Some(format!("hermiticity defect {:e}", self.hermiticity_defect));
        }
        if self.min_eigenvalue < -Self::POSITIVITY_TOL {
            return Some(format!("negative eigenvalue {:e}", self.min_eigenvalue));
        }
        if self.purity < 0.0 || self.purity > 1.0 + Self::PURITY_TOL {
            return Some(format!("purity {} out of [0, 1]", self.purity));
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.violation().is_none()
    }
}

/// Diagnostics from an exact eigendecomposition of the Hermitian part of
/// `rho`. Never fails; the caller decides what counts as bad.
pub fn validate_density(rho: &OperatorMatrix) -> DensityDiagnostics {
    if rho.dim() == 2 {
        return Mat2::try_from(rho).expect("dim checked").diagnostics();
    }
    let n = rho.dim();
    let herm = DMatrix::from_fn(n, n, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    let eig = herm.symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let purity = rho.matmul(rho).expect("same dim").trace().re;
    DensityDiagnostics {
        trace: rho.trace(),
        hermiticity_defect: rho.hermiticity_defect(),
        min_eigenvalue,
        purity,
    }
}

/// Copyable 2×2 complex matrix, row-major `[a00, a01, a10, a11]`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [C64; 4]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([ZERO; 4]);
    pub const IDENTITY: Mat2 = Mat2([ONE, ZERO, ZERO, ONE]);
    pub const SIGMA_X: Mat2 = Mat2([ZERO, ONE, ONE, ZERO]);
    pub const SIGMA_Y: Mat2 = Mat2([ZERO, C64::new(0.0, -1.0), I, ZERO]);
    pub const SIGMA_Z: Mat2 = Mat2([ONE, ZERO, ZERO, C64::new(-1.0, 0.0)]);

    /// `a·σx + b·σy + c·σz` with real coefficients.
    pub fn pauli(x: f64, y: f64, z: f64) -> Mat2 {
        Mat2([
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        ])
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn projector(psi: [C64; 2]) -> Mat2 {
        Mat2([
            psi[0] * psi[0].conj(),
            psi[0] * psi[1].conj(),
            psi[1] * psi[0].conj(),
            psi[1] * psi[1].conj(),
        ])
    }

    #[inline]
    pub fn adjoint(&self) -> Mat2 {
        let [a, b, c, d] = self.0;
        Mat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    #[inline]
    pub fn comm(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    #[inline]
    pub fn anticomm(&self, other: &Mat2) -> Mat2 {
        *self * *other + *other * *self
    }

    /// `⟨ψ|M|ψ⟩`
    pub fn expectation(&self, psi: [C64; 2]) -> C64 {
        let [a, b, c, d] = self.0;
        let m0 = a * psi[0] + b * psi[1];
        let m1 = c * psi[0] + d * psi[1];
        psi[0].conj() * m0 + psi[1].conj() * m1
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let [a, b, c, d] = self.0;
        (a.im.abs() * 2.0)
            .max(d.im.abs() * 2.0)
            .max((b - c.conj()).norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues (ascending) of the Hermitian part, closed form.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let [a, b, c, d] = self.0;
        let (a, d) = (a.re, d.re);
        let off = (b + c.conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + off.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    /// Singular values (ascending) via the eigenvalues of `M†M`.
    pub fn singular_values(&self) -> [f64; 2] {
        let gram = self.adjoint() * *self;
        let [lo, hi] = gram.hermitian_eigenvalues();
        [lo.max(0.0).sqrt(), hi.max(0.0).sqrt()]
    }

    /// Half the trace norm, `½‖M‖₁`.
    pub fn half_trace_norm(&self) -> f64 {
        let [s0, s1] = self.singular_values();
        0.5 * (s0 + s1)
    }

    pub fn diagnostics(&self) -> DensityDiagnostics {
        let purity = (*self * *self).trace().re;
        DensityDiagnostics {
            trace: self.trace(),
            hermiticity_defect: self.hermiticity_defect(),
            min_eigenvalue: self.hermitian_eigenvalues()[0],
            purity,
        }
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "[[{a}, {b}], [{c}, {d}]]")
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        for (x, y) in self.0.iter_mut().zip(o.0) {
            *x += y;
        }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        let a = self.0;
        Mat2([-a[0], -a[1], -a[2], -a[3]])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let ([a, b, c, d], [e, f, g, h]) = (self.0, o.0);
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: C64) -> Mat2 {
        let a = self.0;
        Mat2([a[0] * s, a[1] * s, a[2] * s, a[3] * s])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        let a = self.0;
        Mat2([a[0] * s, a[1] * s, a[2] * s, a[3] * s])
    }
}

impl From<Mat2> for OperatorMatrix {
    fn from(m: Mat2) -> Self {
        OperatorMatrix {
            dim: 2,
            entries: m.0.to_vec(),
        }
    }
}

impl TryFrom<&OperatorMatrix> for Mat2 {
    type Error = Error;
    fn try_from(m: &OperatorMatrix) -> Result<Mat2> {
        if m.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: m.dim(),
                right: 2,
            });
        }
        let e = m.entries();
        Ok(Mat2([e[0], e[1], e[2], e[3]]))
    }
}
