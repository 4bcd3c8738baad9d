use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{eigh_matrix, Eigensystem};
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance applied on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may have.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues of a density matrix below this magnitude are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Replaces `m` by `(m + m^H) / 2`.
pub(crate) fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = re(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// A finite-dimensional Hermitian operator.
///
/// Construction checks `max |A - A^H| <= 1e-12 (1 + max |A|)` and then stores
/// the exactly symmetrized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    pub fn new(mut mat: CMatrix) -> Result<Self> {
        check_square(&mat)?;
        let defect = hermiticity_defect(&mat);
        if defect > HERMITIAN_TOL * (1.0 + max_abs(&mat)) {
            return Err(Error::NotHermitian(defect));
        }
        symmetrize(&mut mat);
        Ok(Self { mat })
    }

    /// Skips validation but still symmetrizes. Callers guarantee the input is
    /// Hermitian up to rounding.
    pub(crate) fn from_matrix_unchecked(mut mat: CMatrix) -> Self {
        symmetrize(&mut mat);
        Self { mat }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty("diagonal"));
        }
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| re(x)));
        Ok(Self {
            mat: CMatrix::from_diagonal(&v),
        })
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::new(CMatrix::from_row_iterator(
            dim,
            dim,
            entries.iter().map(|&x| re(x)),
        ))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            mat: CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]),
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            mat: CMatrix::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)]),
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            mat: CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]),
        }
    }

    /// `c_x σ_x + c_y σ_y + c_z σ_z`.
    pub fn bloch(coeffs: [f64; 3]) -> Self {
        let [x, y, z] = coeffs;
        Self {
            mat: CMatrix::from_row_slice(2, 2, &[re(z), c(x, -y), c(x, y), re(-z)]),
        }
    }

    /// Outer product `|psi><psi|`.
    pub fn projector(psi: &CVector) -> Self {
        Self {
            mat: psi * psi.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * re(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    /// `self + s * I`.
    pub fn shifted(&self, s: f64) -> Self {
        let mut mat = self.mat.clone();
        for i in 0..mat.nrows() {
            mat[(i, i)] += re(s);
        }
        Self { mat }
    }

    pub fn square(&self) -> Self {
        Self::from_matrix_unchecked(&self.mat * &self.mat)
    }

    /// Unitary conjugation `U A U^H`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        Ok(Self::from_matrix_unchecked(u * &self.mat * u.adjoint()))
    }

    pub fn eigh(&self) -> Eigensystem {
        eigh_matrix(&self.mat)
    }

    /// `(λ_min, λ_max)`.
    pub fn spectral_range(&self) -> (f64, f64) {
        let es = self.eigh();
        let v = &es.eigenvalues;
        (v[0], v[v.len() - 1])
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }
}

/// A unit-trace positive-semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(mat)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = op.eigh().eigenvalues[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self {
            mat: op.into_matrix(),
        })
    }

    /// For matrices that are valid by construction (Kronecker powers and
    /// convex mixtures of valid states).
    pub(crate) fn from_matrix_unchecked(mut mat: CMatrix) -> Self {
        symmetrize(&mut mat);
        Self { mat }
    }

    /// Pure state `|psi><psi| / <psi|psi>`.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Empty("state vector has zero norm"));
        }
        let v = psi / re(norm);
        Ok(Self::from_matrix_unchecked(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim) * re(1.0 / dim as f64),
        }
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("mixture"))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if *w < 0.0 || !w.is_finite() {
                return Err(crate::error::invalid("weight", format!("{w} is negative")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: rho.dim(),
                });
            }
            total += w;
            acc += &rho.mat * re(*w);
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(total));
        }
        Ok(Self::from_matrix_unchecked(acc))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator {
            mat: self.mat.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * op.mat[(j, i)];
            }
        }
        Ok(acc.re)
    }

    /// Eigensystem with eigenvalues of magnitude below `1e-12` set to zero.
    pub fn eigensystem(&self) -> Eigensystem {
        let mut es = eigh_matrix(&self.mat);
        for l in es.eigenvalues.iter_mut() {
            if l.abs() < EIGEN_CLAMP {
                *l = 0.0;
            }
        }
        es
    }

    pub fn rank(&self) -> usize {
        self.eigensystem()
            .eigenvalues
            .iter()
            .filter(|&&l| l > EIGEN_CLAMP)
            .count()
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// `ρ^{⊗m}`; `m = 0` gives the 1x1 unit state.
    pub fn tensor_power(&self, m: usize) -> Self {
        let mut acc = CMatrix::from_element(1, 1, re(1.0));
        for _ in 0..m {
            acc = acc.kronecker(&self.mat);
        }
        Self { mat: acc }
    }

    /// Unitary conjugation `U ρ U^H`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        Ok(Self::from_matrix_unchecked(u * &self.mat * u.adjoint()))
    }
}

/// JSON document for matrices: dimension plus row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixDoc {
    pub dims: [usize; 2],
    pub entries: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            dims: [m.nrows(), m.ncols()],
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let [r, cols] = self.dims;
        if self.entries.len() != r * cols {
            return Err(Error::Format(format!(
                "{} entries for a {r}x{cols} matrix",
                self.entries.len()
            )));
        }
        Ok(CMatrix::from_row_iterator(
            r,
            cols,
            self.entries.iter().map(|[a, b]| c(*a, *b)),
        ))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(&self.mat).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        let m = doc.to_matrix().map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(&self.mat).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        let m = doc.to_matrix().map_err(serde::de::Error::custom)?;
        HermitianOperator::new(m).map_err(serde::de::Error::custom)
    }
}
