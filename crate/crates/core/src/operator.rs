//! Dense complex operators on qubit registers.
//!
//! Basis ordering: site 1 is the leftmost (most significant) tensor factor,
//! so in an `N`-site register site `i` owns bit `N - i` of a basis index.
//! The single-qubit basis is `|0> = (1, 0)`, the `+1` eigenvector of
//! `sigma^z`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::thermal::DensityMatrix;

pub type C64 = Complex64;

/// Default absolute element-wise tolerance for matrix comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Hermiticity residual accepted (and symmetrized away) before eigendecomposition.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

// Below this size nalgebra's own complex product is fast enough.
const SPLIT_GEMM_MIN_DIM: usize = 24;

/// Square complex matrix stored densely.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<C64>);

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.dim(), self.dim())?;
        if self.dim() <= 8 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        DenseMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        DenseMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from rows given in reading order.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Self::from_fn(dim, |r, c| rows[r][c]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |r, c| if r == c { diag[r] } else { ZERO })
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(DenseMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.0[(r, c)] = v;
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn as_matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        DenseMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix(self.0.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, a: C64) -> Self {
        DenseMatrix(&self.0 * a)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: C64, x: &DenseMatrix) {
        self.0.zip_apply(&x.0, |s, v| *s += a * v);
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in comparison");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Element-wise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &DenseMatrix, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// `max |m - m^dagger|` over all entries.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..=c {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^dagger) / 2`
    pub fn hermitian_part(&self) -> Self {
        DenseMatrix((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        DenseMatrix(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn kron(&self, other: &DenseMatrix) -> Self {
        DenseMatrix(self.0.kronecker(&other.0))
    }

    pub fn commutator(&self, other: &DenseMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in product");
        if self.dim() < SPLIT_GEMM_MIN_DIM {
            return DenseMatrix(&self.0 * &other.0);
        }
        DenseMatrix(complex_gemm(&self.0, &other.0))
    }
}

/// Complex product through four real GEMMs, which go through the SIMD kernels
/// nalgebra only uses for `f64`.
pub(crate) fn complex_gemm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

impl<'a> Mul<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &'a DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl<'a> Add<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &'a DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &'a DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}

/// 1-based position of a spin in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteIndex(pub(crate) usize);

impl SiteIndex {
    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::param("site indices start at 1"));
        }
        Ok(SiteIndex(value))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn check(self, nsites: usize) -> Result<Self> {
        if self.0 > nsites {
            return Err(Error::SiteOutOfRange { site: self.0, nsites });
        }
        Ok(self)
    }

    /// Bit mask of this site inside an `nsites` register.
    pub fn mask(self, nsites: usize) -> usize {
        1 << (nsites - self.0)
    }

    pub(crate) fn bit(self, nsites: usize) -> u32 {
        (nsites - self.0) as u32
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub fn pauli(axis: Axis) -> DenseMatrix {
    let m = match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -I], [I, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    };
    DenseMatrix::from_fn(2, |r, c| m[r][c])
}

fn check_sites(sites: &[SiteIndex], nsites: usize) -> Result<()> {
    for (k, s) in sites.iter().enumerate() {
        s.check(nsites)?;
        if sites[..k].contains(s) {
            return Err(Error::DuplicateSite(s.get()));
        }
    }
    Ok(())
}

/// Gathers the bits of `index` at the given site positions into a compact
/// local index; the first site becomes the most significant local bit.
pub(crate) fn local_index(index: usize, bits: &[u32]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | ((index >> b) & 1))
}

/// Inverse of [`local_index`]: writes `local` into the given bit positions of `base`.
pub(crate) fn scatter_index(base: usize, local: usize, bits: &[u32]) -> usize {
    let k = bits.len();
    bits.iter().enumerate().fold(base, |acc, (pos, &b)| {
        let bit = (local >> (k - 1 - pos)) & 1;
        (acc & !(1 << b)) | (bit << b)
    })
}

/// Places a one- or two-site operator on the named sites of an `nsites`
/// register, identity elsewhere. For two sites the operator's first tensor
/// factor acts on `sites[0]`.
pub fn embed(op: &DenseMatrix, sites: &[SiteIndex], nsites: usize) -> Result<DenseMatrix> {
    if sites.is_empty() || sites.len() > 2 {
        return Err(Error::param("embed takes one or two sites"));
    }
    check_sites(sites, nsites)?;
    let expected = 1 << sites.len();
    if op.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: op.dim() });
    }
    let bits: Vec<u32> = sites.iter().map(|s| s.bit(nsites)).collect();
    let site_mask: usize = sites.iter().map(|s| s.mask(nsites)).sum();
    let dim = 1usize << nsites;
    let mut out = DenseMatrix::zeros(dim);
    for col in 0..dim {
        let lc = local_index(col, &bits);
        let rest = col & !site_mask;
        for lr in 0..expected {
            let v = op.get(lr, lc);
            if v != ZERO {
                out.set(scatter_index(rest, lr, &bits), col, v);
            }
        }
    }
    Ok(out)
}

/// Traces out every site not in `keep`. The kept sites are ordered by
/// ascending index in the result.
pub(crate) fn trace_out(m: &DenseMatrix, nsites: usize, keep: &[SiteIndex]) -> Result<DenseMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    check_sites(keep, nsites)?;
    let dim = 1usize << nsites;
    if m.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
    }
    let mut keep = keep.to_vec();
    keep.sort();
    let bits: Vec<u32> = keep.iter().map(|s| s.bit(nsites)).collect();
    let keep_mask: usize = keep.iter().map(|s| s.mask(nsites)).sum();
    let kdim = 1usize << keep.len();
    let mut out = DenseMatrix::zeros(kdim);
    // Enumerate assignments of the traced bits as subsets of the complement mask.
    let rest_mask = (dim - 1) & !keep_mask;
    let mut rest = 0usize;
    loop {
        for c in 0..kdim {
            let gc = scatter_index(rest, c, &bits);
            for r in 0..kdim {
                let gr = scatter_index(rest, r, &bits);
                let v = out.get(r, c) + m.get(gr, gc);
                out.set(r, c, v);
            }
        }
        if rest == rest_mask {
            break;
        }
        rest = (rest.wrapping_sub(rest_mask)) & rest_mask;
    }
    Ok(out)
}

/// Reduced state on `keep` (ascending site order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[SiteIndex]) -> Result<DensityMatrix> {
    let reduced = trace_out(rho.matrix(), rho.nsites(), keep)?;
    Ok(DensityMatrix::from_parts_unchecked(reduced, keep.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    First,
    Second,
}

/// Partial transpose of a two-qubit operator with respect to one party.
pub fn partial_transpose(rho_ab: &DenseMatrix, which: Party) -> Result<DenseMatrix> {
    if rho_ab.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_ab.dim() });
    }
    Ok(DenseMatrix::from_fn(4, |r, c| {
        let (ra, rb) = (r >> 1, r & 1);
        let (ca, cb) = (c >> 1, c & 1);
        match which {
            Party::First => rho_ab.get((ca << 1) | rb, (ra << 1) | cb),
            Party::Second => rho_ab.get((ra << 1) | cb, (ca << 1) | rb),
        }
    }))
}

/// Spectral decomposition `m = V diag(values) V^dagger` with ascending values.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl HermEigen {
    /// `V diag(f(values)) V^dagger`
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> DenseMatrix {
        let weights: Vec<C64> = self.values.iter().map(|&e| f(e)).collect();
        let mut scaled = self.vectors.clone();
        for (c, w) in weights.iter().enumerate() {
            let mut col = scaled.as_matrix_mut().column_mut(c);
            col *= *w;
        }
        scaled.matmul(&self.vectors.adjoint())
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Inputs within [`HERMITIAN_TOL`] of Hermitian are symmetrized first; larger
/// residuals are rejected.
pub fn herm_eig(m: &DenseMatrix) -> Result<HermEigen> {
    let residual = m.hermitian_residual();
    if residual >= HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let sym = m.hermitian_part();
    let (values, vectors) = if sym.is_real() {
        let eig = SymmetricEigen::new(sym.real_part());
        (eig.eigenvalues.as_slice().to_vec(), DenseMatrix::from_real(&eig.eigenvectors))
    } else {
        let eig = SymmetricEigen::new(sym.into_matrix());
        (eig.eigenvalues.as_slice().to_vec(), DenseMatrix(eig.eigenvectors))
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let n = vectors.dim();
    let sorted_vectors = DenseMatrix::from_fn(n, |r, c| vectors.get(r, order[c]));
    Ok(HermEigen { values: sorted_values, vectors: sorted_vectors })
}

/// Eigenvalues only, ascending.
pub fn herm_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    let residual = m.hermitian_residual();
    if residual >= HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let sym = m.hermitian_part();
    let mut values: Vec<f64> = if sym.is_real() {
        SymmetricEigen::new(sym.real_part()).eigenvalues.as_slice().to_vec()
    } else {
        sym.into_matrix().symmetric_eigenvalues().as_slice().to_vec()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn matrix_function(m: &DenseMatrix, f: impl Fn(f64) -> C64) -> Result<DenseMatrix> {
    Ok(herm_eig(m)?.apply(f))
}
