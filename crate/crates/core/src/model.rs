//! Variable-range XYZ chain with open boundaries.
//!
//! ```text
//! H = sum_{i<j, |i-j| <= Z} J_ij [ (1+g)/4 XX + (1-g)/4 YY ] + D_ij/4 ZZ  +  sum_i (lambda/2) Z_i
//! ```
//!
//! with `J_ij = -f(|i-j|)`, `D_ij = delta * f(|i-j|)` and `f` the decay profile.
//! Energies and times are in units of `|J|` (hbar = 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DenseMatrix, SiteIndex, C64};

/// Sign of the xy coupling; the chain is ferromagnetic in the plane.
pub const J_SIGN: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Exponential,
    #[serde(alias = "power-law", alias = "powerlaw", alias = "power_law")]
    Power,
}

impl DecayKind {
    pub fn label(self) -> &'static str {
        match self {
            DecayKind::Exponential => "exponential",
            DecayKind::Power => "power",
        }
    }
}

/// How coupling strength falls off with distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayLaw {
    kind: DecayKind,
    rate: f64,
}

impl DecayLaw {
    pub fn new(kind: DecayKind, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::param(format!("decay rate must be positive, got {rate}")));
        }
        if kind == DecayKind::Exponential && rate <= 1.0 {
            return Err(Error::param(format!(
                "exponential decay rate must exceed 1, got {rate}"
            )));
        }
        Ok(DecayLaw { kind, rate })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(DecayKind::Exponential, rate)
    }

    pub fn power(rate: f64) -> Result<Self> {
        Self::new(DecayKind::Power, rate)
    }

    pub fn kind(&self) -> DecayKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Relative strength at distance `d >= 1`; equals 1 at `d = 1`.
    pub fn profile(&self, distance: usize) -> f64 {
        let d = distance as f64;
        match self.kind {
            DecayKind::Exponential => self.rate.powf(-(d - 1.0)),
            DecayKind::Power => d.powf(-self.rate),
        }
    }
}

/// Parameters of one chain Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub nsites: usize,
    pub gamma: f64,
    /// Field `h / |J|`.
    pub lambda: f64,
    /// zz anisotropy `Delta' / |J|`.
    pub delta: f64,
    /// Coordination number: pairs with `|i - j| > coordination` do not interact.
    pub coordination: usize,
    pub decay: DecayLaw,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nsites < 2 {
            return Err(Error::param("the chain needs at least two sites"));
        }
        if self.nsites > 16 {
            return Err(Error::param(format!("{} sites is beyond dense reach", self.nsites)));
        }
        if self.coordination < 1 || self.coordination > self.nsites - 1 {
            return Err(Error::param(format!(
                "coordination number {} outside 1..={}",
                self.coordination,
                self.nsites - 1
            )));
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda), ("delta", self.delta)] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.nsites
    }
}

/// Coupling profile between two sites, zero beyond the coordination number.
pub fn coupling(decay: &DecayLaw, i: SiteIndex, j: SiteIndex, coordination: usize) -> Result<f64> {
    if i == j {
        return Err(Error::param(format!("coupling of site {i} with itself")));
    }
    let d = i.get().abs_diff(j.get());
    Ok(if d > coordination { 0.0 } else { decay.profile(d) })
}

/// Dense Hamiltonian in the computational basis. The result is real symmetric.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let n = spec.nsites;
    let dim = spec.dim();
    let mut h = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let xx = (1.0 + spec.gamma) / 4.0;
    let yy = (1.0 - spec.gamma) / 4.0;

    for i in 1..n {
        for j in (i + 1)..=n {
            let f = coupling(&spec.decay, SiteIndex(i), SiteIndex(j), spec.coordination)?;
            if f == 0.0 {
                continue;
            }
            let jij = J_SIGN * f;
            let dij = spec.delta * f;
            let (mi, mj) = (1usize << (n - i), 1usize << (n - j));
            let flip = mi | mj;
            for col in 0..dim {
                let si = if col & mi == 0 { 1.0 } else { -1.0 };
                let sj = if col & mj == 0 { 1.0 } else { -1.0 };
                h[(col, col)] += dij / 4.0 * si * sj;
                // XX flips both spins with amplitude 1; YY with amplitude -si*sj.
                let row = col ^ flip;
                h[(row, col)] += jij * (xx - yy * si * sj);
            }
        }
    }
    for i in 1..=n {
        let mi = 1usize << (n - i);
        for col in 0..dim {
            let s = if col & mi == 0 { 1.0 } else { -1.0 };
            h[(col, col)] += spec.lambda / 2.0 * s;
        }
    }
    Ok(DenseMatrix::from_real(&h))
}

/// Global spin-flip parity `prod_i sigma^z_i` as a diagonal of +-1.
pub fn parity_diagonal(nsites: usize) -> Vec<f64> {
    (0..1usize << nsites)
        .map(|x| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Parity as a full matrix.
pub fn parity_operator(nsites: usize) -> DenseMatrix {
    let d: Vec<C64> = parity_diagonal(nsites).into_iter().map(|x| C64::new(x, 0.0)).collect();
    DenseMatrix::from_diagonal(&d)
}
