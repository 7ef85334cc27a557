//! Density matrices and canonical equilibrium states.

use std::fmt;

use crate::error::{Error, Result};
use crate::operator::{herm_eig, herm_eigenvalues, DenseMatrix, C64, HERMITIAN_TOL};

/// Positivity slack accepted when validating a state.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semidefinite operator on `nsites` qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DenseMatrix,
    nsites: usize,
}

impl DensityMatrix {
    /// Validates every invariant, including positivity (one eigendecomposition).
    pub fn new(matrix: DenseMatrix, nsites: usize) -> Result<Self> {
        let expected = 1usize << nsites;
        if matrix.dim() != expected {
            return Err(Error::DimensionMismatch { expected, got: matrix.dim() });
        }
        let residual = matrix.hermitian_residual();
        if residual >= HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = herm_eigenvalues(&matrix)?[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { matrix, nsites })
    }

    pub(crate) fn from_parts_unchecked(matrix: DenseMatrix, nsites: usize) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << nsites);
        DensityMatrix { matrix, nsites }
    }

    /// Pure state `|psi><psi|` from a normalized or unnormalized vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::param(format!("state vector length {dim} is not 2^N")));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::param("zero state vector"));
        }
        let m = DenseMatrix::from_fn(dim, |r, c| psi[r] * psi[c].conj() / norm2);
        Ok(DensityMatrix { matrix: m, nsites: dim.trailing_zeros() as usize })
    }

    pub fn maximally_mixed(nsites: usize) -> Self {
        let dim = 1usize << nsites;
        let m = DenseMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0));
        DensityMatrix { matrix: m, nsites }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn nsites(&self) -> usize {
        self.nsites
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)`, computed from the entries without forming the product.
    pub fn purity(&self) -> f64 {
        self.matrix.as_matrix().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr(op rho)`
    pub fn expectation(&self, op: &DenseMatrix) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: op.dim() });
        }
        let (a, b) = (op.as_matrix(), self.matrix.as_matrix());
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                acc += a[(r, c)] * b[(c, r)];
            }
        }
        Ok(acc)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        herm_eigenvalues(&self.matrix)
    }
}

/// Inverse temperature, with the zero-temperature limit as its own value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Ground,
}

impl Beta {
    pub fn validate(self) -> Result<Self> {
        match self {
            Beta::Finite(b) if !(b.is_finite() && b >= 0.0) => {
                Err(Error::param(format!("inverse temperature must be finite and >= 0, got {b}")))
            }
            _ => Ok(self),
        }
    }
}

impl From<f64> for Beta {
    fn from(b: f64) -> Self {
        Beta::Finite(b)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Ground => write!(f, "ground"),
        }
    }
}

// Relative spread below which eigenvalues count as one ground level.
const GROUND_DEGENERACY_TOL: f64 = 1e-9;

/// `exp(-beta H) / tr exp(-beta H)`, built from the spectrum with the ground
/// energy shifted to zero so large `beta` cannot overflow. `Beta::Ground`
/// gives the uniform mixture over the lowest eigenspace.
pub fn thermal_state(h: &DenseMatrix, beta: impl Into<Beta>) -> Result<DensityMatrix> {
    let beta = beta.into().validate()?;
    let dim = h.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::param(format!("Hamiltonian dimension {dim} is not 2^N")));
    }
    let eig = herm_eig(h)?;
    let e_min = eig.min();
    let scale = eig.values.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let weight = |e: f64| match beta {
        Beta::Finite(b) => (-b * (e - e_min)).exp(),
        Beta::Ground => f64::from(u8::from(e - e_min <= GROUND_DEGENERACY_TOL * scale)),
    };
    let z: f64 = eig.values.iter().map(|&e| weight(e)).sum();
    let rho = eig.apply(|e| C64::new(weight(e) / z, 0.0));
    let rho = rho.hermitian_part();
    Ok(DensityMatrix::from_parts_unchecked(rho, dim.trailing_zeros() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, DecayLaw, ModelSpec};
    use crate::operator::{pauli, Axis};

    fn chain(n: usize, lambda: f64) -> DenseMatrix {
        build_hamiltonian(&ModelSpec {
            nsites: n,
            gamma: 0.8,
            lambda,
            delta: 0.8,
            coordination: n - 1,
            decay: DecayLaw::exponential(2.0).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let rho = thermal_state(&chain(3, 0.5), 0.0).unwrap();
        assert!(rho.matrix().approx_eq(DensityMatrix::maximally_mixed(3).matrix(), 1e-12));
    }

    #[test]
    fn single_spin_gibbs_weights() {
        let rho = thermal_state(&pauli(Axis::Z), 1.0).unwrap();
        let e = std::f64::consts::E;
        let p0 = (1.0 / e) / (e + 1.0 / e);
        assert!((rho.matrix().get(0, 0).re - p0).abs() < 1e-12);
        assert!((rho.matrix().get(0, 0).re - 0.119203).abs() < 1e-6);
        assert!((rho.matrix().get(1, 1).re - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn ground_state_of_nondegenerate_h_is_pure() {
        let h = chain(4, 0.9);
        let ev = herm_eigenvalues(&h).unwrap();
        assert!(ev[1] - ev[0] > 1e-6, "test Hamiltonian must have a gap");
        let rho = thermal_state(&h, Beta::Ground).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_ground_gets_uniform_projector() {
        // twofold degenerate ground level
        let h = DenseMatrix::from_real_rows(&[
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0, 3.0],
        ])
        .unwrap();
        let rho = thermal_state(&h, Beta::Ground).unwrap();
        assert!((rho.matrix().get(1, 1).re - 0.5).abs() < 1e-12);
        assert!((rho.matrix().get(2, 2).re - 0.5).abs() < 1e-12);
        assert!((rho.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_beta_does_not_overflow() {
        let rho = thermal_state(&chain(6, 0.5), 200.0).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.matrix().as_matrix().iter().all(|z| z.re.is_finite()));
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(thermal_state(&pauli(Axis::Z), -1.0).is_err());
        assert!(thermal_state(&pauli(Axis::Z), f64::INFINITY).is_err());
    }

    #[test]
    fn commutes_with_h_and_is_shift_invariant() {
        let h = chain(5, 0.7);
        let rho = thermal_state(&h, 3.0).unwrap();
        assert!(h.commutator(rho.matrix()).max_abs() < 1e-10);

        let shifted = &h + &DenseMatrix::identity(32).scale(C64::new(17.3, 0.0));
        let rho2 = thermal_state(&shifted, 3.0).unwrap();
        assert!(rho.matrix().approx_eq(rho2.matrix(), 1e-12));
    }

    #[test]
    fn energy_non_increasing_in_beta() {
        let h = chain(5, 1.3);
        let mut last = f64::INFINITY;
        for k in 0..30 {
            let beta = 0.25 * k as f64;
            let e = thermal_state(&h, beta).unwrap().expectation(&h).unwrap().re;
            assert!(e <= last + 1e-12, "energy rose at beta = {beta}");
            last = e;
        }
    }

    #[test]
    fn validated_constructor() {
        let bad = DenseMatrix::from_real_rows(&[vec![1.5, 0.0], vec![0.0, -0.5]]).unwrap();
        assert!(DensityMatrix::new(bad, 1).is_err());
        let bad_trace = DenseMatrix::identity(2);
        assert!(DensityMatrix::new(bad_trace, 1).is_err());
        let ok = DenseMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(DensityMatrix::new(ok.clone(), 1).is_ok());
        assert!(DensityMatrix::new(ok, 2).is_err());
    }
}
