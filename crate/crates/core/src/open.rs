//! Markovian open dynamics: `d rho/dt = -i [H, rho] + D(rho)` with baths on a
//! subset of sites, integrated by fixed-step fourth-order Runge-Kutta.
//!
//! Two dissipators are available:
//!
//! * repetitive interactions with thermal bath qubits, which reduce to two
//!   amplitude channels per attached site with jump operators `sigma^-` and
//!   `sigma^+`, weighted by the bath Gibbs factors;
//! * local dephasing from an Ohmic bosonic reservoir with the time-dependent
//!   rate of [`dephasing_rate`].

use nalgebra::DMatrix;

use crate::closed::{check_pairs, parity_blocks, parity_leak, TimeGrid, BLOCK_LEAK_TOL};
use crate::error::{Error, Result};
use crate::metrics::{log_negativity_of_matrix, EntanglementSeries, SitePair};
use crate::model::{build_hamiltonian, ModelSpec};
use crate::operator::{complex_gemm, herm_eigenvalues, trace_out, DenseMatrix, SiteIndex, C64, I, ZERO};
use crate::thermal::{thermal_state, Beta, DensityMatrix};

/// Trace or Hermiticity drift that triggers a correction after a step.
pub const DRIFT_TOL: f64 = 1e-10;

/// Most negative eigenvalue tolerated before a run is aborted.
pub const POSITIVITY_ABORT: f64 = -1e-6;

fn default_attached() -> Vec<SiteIndex> {
    (1..=3).map(SiteIndex).collect()
}

/// Bath of thermal qubits that repeatedly collide with the attached sites.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitiveBathSpec {
    /// Coupling `k` (energy^2 x time).
    pub k: f64,
    /// Bath-qubit splitting `B`.
    pub b: f64,
    /// Bath inverse temperature.
    pub beta_env: f64,
    pub attached: Vec<SiteIndex>,
}

impl Default for RepetitiveBathSpec {
    /// Calibration constants, not measured values.
    fn default() -> Self {
        RepetitiveBathSpec { k: 0.05, b: 1.0, beta_env: 1.0, attached: default_attached() }
    }
}

impl RepetitiveBathSpec {
    /// Gibbs weights `(p_0, p_1)` with `p_l = exp((-1)^l beta_E B) / (2 cosh(beta_E B))`.
    pub fn weights(&self) -> (f64, f64) {
        let x = self.beta_env * self.b;
        // logistic form stays finite for large |x|
        let p0 = 1.0 / (1.0 + (-2.0 * x).exp());
        let p1 = 1.0 / (1.0 + (2.0 * x).exp());
        (p0, p1)
    }

    fn validate(&self, nsites: usize) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::param(format!("bath coupling k must be >= 0, got {}", self.k)));
        }
        if !self.b.is_finite() || !(self.beta_env.is_finite() && self.beta_env >= 0.0) {
            return Err(Error::param("bath splitting and inverse temperature must be finite, beta_E >= 0"));
        }
        check_attached(&self.attached, nsites)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseAxis {
    X,
    Z,
}

/// Ohmic bosonic reservoir producing local dephasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonicBathSpec {
    pub ohmicity: f64,
    pub cutoff: f64,
    pub axis: NoiseAxis,
    pub attached: Vec<SiteIndex>,
}

impl Default for BosonicBathSpec {
    fn default() -> Self {
        BosonicBathSpec { ohmicity: 0.5, cutoff: 1.0, axis: NoiseAxis::Z, attached: default_attached() }
    }
}

impl BosonicBathSpec {
    fn validate(&self, nsites: usize) -> Result<()> {
        if !(self.ohmicity.is_finite() && self.ohmicity > 0.0) {
            return Err(Error::param(format!("ohmicity must be positive, got {}", self.ohmicity)));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::param(format!("cutoff frequency must be positive, got {}", self.cutoff)));
        }
        check_attached(&self.attached, nsites)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathSpec {
    Repetitive(RepetitiveBathSpec),
    Bosonic(BosonicBathSpec),
}

impl BathSpec {
    pub fn attached(&self) -> &[SiteIndex] {
        match self {
            BathSpec::Repetitive(b) => &b.attached,
            BathSpec::Bosonic(b) => &b.attached,
        }
    }

    pub fn validate(&self, nsites: usize) -> Result<()> {
        match self {
            BathSpec::Repetitive(b) => b.validate(nsites),
            BathSpec::Bosonic(b) => b.validate(nsites),
        }
    }

    /// Adds `D(rho)` at time `t` to `out`.
    fn accumulate(&self, rho: &DMatrix<C64>, nsites: usize, t: f64, out: &mut DMatrix<C64>) {
        match self {
            BathSpec::Repetitive(b) => accumulate_repetitive(rho, nsites, b, out),
            BathSpec::Bosonic(b) => {
                let rate = dephasing_rate_unchecked(t, b.ohmicity, b.cutoff);
                accumulate_dephasing(rho, nsites, b, rate, out)
            }
        }
    }
}

fn check_attached(sites: &[SiteIndex], nsites: usize) -> Result<()> {
    for (k, s) in sites.iter().enumerate() {
        s.check(nsites)?;
        if sites[..k].contains(s) {
            return Err(Error::DuplicateSite(s.get()));
        }
    }
    Ok(())
}

/// `eta^alpha = (sigma^x + i (-1)^alpha sigma^y) / 2`: raising for 0, lowering for 1.
pub fn eta(alpha: u8) -> Result<DenseMatrix> {
    let one = C64::new(1.0, 0.0);
    match alpha {
        0 => Ok(DenseMatrix::from_fn(2, |r, c| if (r, c) == (0, 1) { one } else { ZERO })),
        1 => Ok(DenseMatrix::from_fn(2, |r, c| if (r, c) == (1, 0) { one } else { ZERO })),
        _ => Err(Error::param(format!("eta index must be 0 or 1, got {alpha}"))),
    }
}

fn accumulate_repetitive(rho: &DMatrix<C64>, nsites: usize, spec: &RepetitiveBathSpec, out: &mut DMatrix<C64>) {
    if spec.k == 0.0 {
        return;
    }
    let (p0, p1) = spec.weights();
    let pref = 2.0 * spec.k;
    let dim = rho.nrows();
    for site in &spec.attached {
        let m = site.mask(nsites);
        for y in 0..dim {
            let by = y & m != 0;
            for x in 0..dim {
                let bx = x & m != 0;
                // l = 0: 2 eta^1 rho eta^0 - {eta^0 eta^1, rho}; eta^0 eta^1 projects on bit 0.
                // l = 1: 2 eta^0 rho eta^1 - {eta^1 eta^0, rho}; eta^1 eta^0 projects on bit 1.
                let n0 = (!bx) as u8 as f64 + (!by) as u8 as f64;
                let n1 = 2.0 - n0;
                let mut v = -(p0 * n0 + p1 * n1) * rho[(x, y)];
                if bx == by {
                    let jump = 2.0 * rho[(x ^ m, y ^ m)];
                    v += if bx { p0 * jump } else { p1 * jump };
                }
                out[(x, y)] += pref * v;
            }
        }
    }
}

fn accumulate_dephasing(rho: &DMatrix<C64>, nsites: usize, spec: &BosonicBathSpec, rate: f64, out: &mut DMatrix<C64>) {
    if rate == 0.0 {
        return;
    }
    let dim = rho.nrows();
    for site in &spec.attached {
        let m = site.mask(nsites);
        for y in 0..dim {
            for x in 0..dim {
                let v = match spec.axis {
                    // sigma^z rho sigma^z - rho vanishes unless the bits differ
                    NoiseAxis::Z => {
                        if (x ^ y) & m != 0 {
                            -2.0 * rho[(x, y)]
                        } else {
                            ZERO
                        }
                    }
                    NoiseAxis::X => rho[(x ^ m, y ^ m)] - rho[(x, y)],
                };
                out[(x, y)] += rate * v;
            }
        }
    }
}

/// Repetitive-interaction dissipator applied to `rho`.
pub fn repetitive_dissipator(rho: &DensityMatrix, spec: &RepetitiveBathSpec) -> Result<DenseMatrix> {
    spec.validate(rho.nsites())?;
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    accumulate_repetitive(rho.matrix().as_matrix(), rho.nsites(), spec, &mut out);
    DenseMatrix::from_matrix(out)
}

fn dephasing_rate_unchecked(t: f64, s: f64, omega_c: f64) -> f64 {
    let u = omega_c * t;
    (1.0 + u * u).powf(-s / 2.0) * libm::tgamma(s) * (s * u.atan()).sin()
}

/// `(1 + (w_c t)^2)^(-s/2) Gamma(s) sin(s atan(w_c t))`
pub fn dephasing_rate(t: f64, s: f64, omega_c: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::param(format!("ohmicity must be positive, got {s}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param(format!("time must be >= 0, got {t}")));
    }
    if !(omega_c.is_finite() && omega_c > 0.0) {
        return Err(Error::param(format!("cutoff frequency must be positive, got {omega_c}")));
    }
    Ok(dephasing_rate_unchecked(t, s, omega_c))
}

/// Sum of local dephasing terms at time `t`.
pub fn bosonic_dissipator(rho: &DensityMatrix, t: f64, spec: &BosonicBathSpec) -> Result<DenseMatrix> {
    spec.validate(rho.nsites())?;
    let rate = dephasing_rate(t, spec.ohmicity, spec.cutoff)?;
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    accumulate_dephasing(rho.matrix().as_matrix(), rho.nsites(), spec, rate, &mut out);
    DenseMatrix::from_matrix(out)
}

/// `-i [H, rho] + D(rho)` (hbar = 1).
pub fn gksl_rhs(rho: &DensityMatrix, t: f64, h: &DenseMatrix, bath: &BathSpec) -> Result<DenseMatrix> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: h.dim() });
    }
    if let BathSpec::Bosonic(b) = bath {
        dephasing_rate(t, b.ohmicity, b.cutoff)?;
    }
    let generator = Generator::new(h.clone(), bath.clone(), rho.nsites())?;
    Ok(generator.apply(t, rho.matrix()))
}

/// States the fixed-step integrator can advance.
pub trait OdeState: Clone {
    /// `self += a * other`
    fn add_scaled(&mut self, a: f64, other: &Self);
}

impl OdeState for f64 {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
}

impl OdeState for Vec<f64> {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s += a * o;
        }
    }
}

impl OdeState for DMatrix<C64> {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        self.zip_apply(other, |s, o| *s += o * a);
    }
}

impl OdeState for DenseMatrix {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        self.axpy(C64::new(a, 0.0), other);
    }
}

/// One classic four-stage Runge-Kutta step of `dy/dt = f(t, y)`.
pub fn rk4_step<S: OdeState>(y: &S, t: f64, dt: f64, mut f: impl FnMut(f64, &S) -> S) -> S {
    let k1 = f(t, y);
    let mut stage = y.clone();
    stage.add_scaled(dt / 2.0, &k1);
    let k2 = f(t + dt / 2.0, &stage);
    let mut stage = y.clone();
    stage.add_scaled(dt / 2.0, &k2);
    let k3 = f(t + dt / 2.0, &stage);
    let mut stage = y.clone();
    stage.add_scaled(dt, &k3);
    let k4 = f(t + dt, &stage);
    let mut next = y.clone();
    next.add_scaled(dt / 6.0, &k1);
    next.add_scaled(dt / 3.0, &k2);
    next.add_scaled(dt / 3.0, &k3);
    next.add_scaled(dt / 6.0, &k4);
    next
}

/// Coherent part of the generator. Real parity-conserving Hamiltonians acting
/// on parity-even states are applied block by block with real GEMMs.
enum Coherent {
    Dense(DMatrix<C64>),
    Blocks(Vec<(Vec<usize>, DMatrix<f64>)>),
}

/// The right-hand side `rho -> -i [H, rho] + D_t(rho)` as a reusable map on
/// arbitrary square matrices, including unnormalized intermediate stages.
pub struct Generator {
    coherent: Coherent,
    bath: BathSpec,
    nsites: usize,
}

impl Generator {
    pub fn new(h: DenseMatrix, bath: BathSpec, nsites: usize) -> Result<Self> {
        if h.dim() != 1 << nsites {
            return Err(Error::DimensionMismatch { expected: 1 << nsites, got: h.dim() });
        }
        bath.validate(nsites)?;
        Ok(Self::dense(h, bath, nsites))
    }

    pub fn apply(&self, t: f64, rho: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_matrix(self.apply_raw(t, rho.as_matrix())).expect("square")
    }

    fn dense(h: DenseMatrix, bath: BathSpec, nsites: usize) -> Self {
        Generator { coherent: Coherent::Dense(h.into_matrix()), bath, nsites }
    }

    /// Picks the block path when both `h` and `rho0` respect parity. Every
    /// dissipator here maps parity-even states to parity-even states.
    fn for_state(h: DenseMatrix, bath: BathSpec, rho0: &DenseMatrix, nsites: usize) -> Self {
        let blockable = h.is_real() && parity_leak(&h) == 0.0 && parity_leak(rho0) <= BLOCK_LEAK_TOL;
        if !blockable {
            return Self::dense(h, bath, nsites);
        }
        let hr = h.real_part();
        let blocks = parity_blocks(nsites)
            .into_iter()
            .map(|idx| {
                let d = idx.len();
                let hb = DMatrix::from_fn(d, d, |r, c| hr[(idx[r], idx[c])]);
                (idx, hb)
            })
            .collect();
        Generator { coherent: Coherent::Blocks(blocks), bath, nsites }
    }

    fn apply_raw(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = rho.nrows();
        let mut out = match &self.coherent {
            Coherent::Dense(h) => {
                let hr = complex_gemm(h, rho);
                let rh = complex_gemm(rho, h);
                (hr - rh) * (-I)
            }
            Coherent::Blocks(blocks) => {
                let mut out = DMatrix::<C64>::zeros(dim, dim);
                for (idx, hb) in blocks {
                    let d = idx.len();
                    let mut stacked = DMatrix::<f64>::zeros(d, 2 * d);
                    for c in 0..d {
                        for r in 0..d {
                            let z = rho[(idx[r], idx[c])];
                            stacked[(r, c)] = z.re;
                            stacked[(r, d + c)] = z.im;
                        }
                    }
                    // X = H rho on the block; -i [H, rho] = -i (X - X^dagger) for Hermitian rho
                    let x = hb * stacked;
                    for c in 0..d {
                        for r in 0..d {
                            let xrc = C64::new(x[(r, c)], x[(r, d + c)]);
                            let xcr = C64::new(x[(c, r)], x[(c, d + r)]);
                            out[(idx[r], idx[c])] = -I * (xrc - xcr.conj());
                        }
                    }
                }
                out
            }
        };
        self.bath.accumulate(rho, self.nsites, t, &mut out);
        out
    }
}

/// One open-system run.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRunSpec {
    /// Model used both for the initial thermal state and for the evolution.
    pub model: ModelSpec,
    pub beta: Beta,
    pub bath: BathSpec,
    /// The integration step is `grid.t_s()`.
    pub grid: TimeGrid,
    pub pairs: Vec<SitePair>,
    /// Switch the field off for the evolution instead of keeping it on.
    pub quench_field: bool,
    /// Full-state positivity is checked every this many steps (and at the end).
    pub positivity_stride: usize,
}

impl OpenRunSpec {
    pub fn new(model: ModelSpec, bath: BathSpec, grid: TimeGrid, pairs: Vec<SitePair>) -> Self {
        OpenRunSpec {
            model,
            beta: Beta::Finite(20.0),
            bath,
            grid,
            pairs,
            quench_field: false,
            positivity_stride: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.beta.validate()?;
        self.bath.validate(self.model.nsites)?;
        check_pairs(&self.pairs, self.model.nsites)?;
        if self.positivity_stride == 0 {
            return Err(Error::param("positivity stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OpenRun {
    pub series: Vec<EntanglementSeries>,
    /// Steps after which the state was re-symmetrized and renormalized.
    pub corrections: usize,
    /// Smallest full-state eigenvalue seen at the positivity checkpoints.
    pub min_eigenvalue: f64,
    pub final_state: DensityMatrix,
}

/// Integrates the run and samples each pair's logarithmic negativity at every step.
pub fn rk4_integrate(spec: &OpenRunSpec) -> Result<OpenRun> {
    rk4_integrate_with(spec, |_, _| {})
}

/// As [`rk4_integrate`], calling `observe(t, rho)` on every grid point.
pub fn rk4_integrate_with(spec: &OpenRunSpec, mut observe: impl FnMut(f64, &DenseMatrix)) -> Result<OpenRun> {
    spec.validate()?;
    let nsites = spec.model.nsites;
    let h_initial = build_hamiltonian(&spec.model)?;
    let rho0 = thermal_state(&h_initial, spec.beta)?;
    let h = if spec.quench_field { build_hamiltonian(&spec.model.with_lambda(0.0))? } else { h_initial };
    let generator = Generator::for_state(h, spec.bath.clone(), rho0.matrix(), nsites);

    let grid = spec.grid;
    let dt = grid.t_s();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); spec.pairs.len()];
    let mut rho = DenseMatrix::clone(rho0.matrix());
    let mut corrections = 0;
    let mut min_eigenvalue = f64::INFINITY;

    sample_pairs(&rho, nsites, &spec.pairs, &mut values)?;
    observe(grid.time(0), &rho);
    for k in 0..grid.steps() {
        let t = grid.time(k);
        let next = rk4_step(rho.as_matrix(), t, dt, |tt, r| generator.apply_raw(tt, r));
        rho = DenseMatrix::from_matrix(next).expect("square");

        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        if drift > DRIFT_TOL || rho.hermitian_residual() > DRIFT_TOL {
            let tr = rho.trace().re;
            rho = rho.hermitian_part().scale(C64::new(1.0 / tr, 0.0));
            corrections += 1;
        }
        let t_next = grid.time(k + 1);
        if (k + 1) % spec.positivity_stride == 0 || k + 1 == grid.steps() {
            let min = herm_eigenvalues(&rho)?[0];
            min_eigenvalue = min_eigenvalue.min(min);
            if min < POSITIVITY_ABORT {
                return Err(Error::PositivityViolation { time: t_next, min_eigenvalue: min });
            }
        }
        sample_pairs(&rho, nsites, &spec.pairs, &mut values)?;
        observe(t_next, &rho);
    }

    let series = spec
        .pairs
        .iter()
        .zip(values)
        .map(|(&pair, v)| EntanglementSeries::new(pair, grid, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(OpenRun {
        series,
        corrections,
        min_eigenvalue,
        final_state: DensityMatrix::from_parts_unchecked(rho, nsites),
    })
}

fn sample_pairs(rho: &DenseMatrix, nsites: usize, pairs: &[SitePair], out: &mut [Vec<f64>]) -> Result<()> {
    for (&(a, b), v) in pairs.iter().zip(out.iter_mut()) {
        let reduced = trace_out(rho, nsites, &[a, b])?;
        v.push(log_negativity_of_matrix(&reduced.hermitian_part())?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecayLaw;
    use crate::operator::{embed, pauli, Axis};

    fn s(i: usize) -> SiteIndex {
        SiteIndex::new(i).unwrap()
    }

    fn model(n: usize) -> ModelSpec {
        ModelSpec {
            nsites: n,
            gamma: 0.8,
            lambda: 1.2,
            delta: 0.2,
            coordination: n - 1,
            decay: DecayLaw::exponential(2.0).unwrap(),
        }
    }

    #[test]
    fn eta_operators() {
        let e0 = eta(0).unwrap();
        let e1 = eta(1).unwrap();
        let x = pauli(Axis::X);
        let y = pauli(Axis::Y);
        let mut expect0 = x.clone();
        expect0.axpy(I, &y);
        assert!(e0.approx_eq(&expect0.scale(C64::new(0.5, 0.0)), 0.0));
        let mut expect1 = x;
        expect1.axpy(-I, &y);
        assert!(e1.approx_eq(&expect1.scale(C64::new(0.5, 0.0)), 0.0));
        let proj = e0.matmul(&e1);
        assert!(proj.approx_eq(&DenseMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(), 0.0));
        assert!(eta(2).is_err());
    }

    #[test]
    fn repetitive_matches_operator_form() {
        let n = 3;
        let spec = RepetitiveBathSpec { k: 0.3, b: 0.7, beta_env: 1.4, attached: vec![s(1), s(3)] };
        let h = build_hamiltonian(&model(n)).unwrap();
        let rho = thermal_state(&h, 0.8).unwrap();
        let fast = repetitive_dissipator(&rho, &spec).unwrap();

        let (p0, p1) = spec.weights();
        let mut expected = DenseMatrix::zeros(8);
        for &site in &spec.attached {
            let e = [embed(&eta(0).unwrap(), &[site], n).unwrap(), embed(&eta(1).unwrap(), &[site], n).unwrap()];
            for (l, p) in [(0usize, p0), (1usize, p1)] {
                let up = &e[(l + 1) % 2];
                let lo = &e[l];
                let jump = up.matmul(rho.matrix()).matmul(lo).scale(C64::new(2.0, 0.0));
                let nn = lo.matmul(up);
                let anti = &nn.matmul(rho.matrix()) + &rho.matrix().matmul(&nn);
                expected.axpy(C64::new(2.0 * spec.k * p, 0.0), &(&jump - &anti));
            }
        }
        assert!(fast.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn gibbs_weights() {
        let spec = RepetitiveBathSpec { b: 0.5, beta_env: 2.0, ..Default::default() };
        let (p0, p1) = spec.weights();
        let z = 2.0 * (1.0f64).cosh();
        assert!((p0 - 1f64.exp() / z).abs() < 1e-15);
        assert!((p1 - (-1f64).exp() / z).abs() < 1e-15);
        let cold = RepetitiveBathSpec { beta_env: 1e6, ..Default::default() };
        assert_eq!(cold.weights(), (1.0, 0.0));
    }

    #[test]
    fn dephasing_rate_values() {
        assert_eq!(dephasing_rate(0.0, 0.5, 1.0).unwrap(), 0.0);
        for t in [0.1, 1.0, 3.7] {
            let wc = 2.0;
            let u = wc * t;
            assert!((dephasing_rate(t, 1.0, wc).unwrap() - u / (1.0 + u * u)).abs() < 1e-12);
        }
        // small-t slope Gamma(s) s w_c
        let (s_, wc, t) = (0.5, 1.3, 1e-5);
        let slope = libm::tgamma(s_) * s_ * wc;
        assert!((dephasing_rate(t, s_, wc).unwrap() / t - slope).abs() < 1e-6);
        assert!(dephasing_rate(1.0, 0.0, 1.0).is_err());
        assert!(dephasing_rate(1.0, -1.0, 1.0).is_err());
        assert!(dephasing_rate(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn z_dephasing_kills_only_coherences() {
        let n = 2;
        let diag = DenseMatrix::from_real_rows(&[
            vec![0.1, 0.0, 0.0, 0.0],
            vec![0.0, 0.2, 0.0, 0.0],
            vec![0.0, 0.0, 0.3, 0.0],
            vec![0.0, 0.0, 0.0, 0.4],
        ])
        .unwrap();
        let rho = DensityMatrix::new(diag, n).unwrap();
        let spec = BosonicBathSpec { attached: vec![s(1), s(2)], ..Default::default() };
        let d = bosonic_dissipator(&rho, 0.7, &spec).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn x_dephasing_matches_operator_form() {
        let n = 3;
        let rho = thermal_state(&build_hamiltonian(&model(n)).unwrap(), 0.4).unwrap();
        let spec = BosonicBathSpec { axis: NoiseAxis::X, attached: vec![s(2)], ..Default::default() };
        let t = 0.9;
        let d = bosonic_dissipator(&rho, t, &spec).unwrap();
        let x2 = embed(&pauli(Axis::X), &[s(2)], n).unwrap();
        let rate = dephasing_rate(t, 0.5, 1.0).unwrap();
        let expected = (&x2.matmul(rho.matrix()).matmul(&x2) - rho.matrix()).scale(C64::new(rate, 0.0));
        assert!(d.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn rhs_without_bath_is_commutator() {
        let n = 3;
        let h = build_hamiltonian(&model(n)).unwrap();
        let rho = thermal_state(&build_hamiltonian(&model(n).with_lambda(0.0)).unwrap(), 1.0).unwrap();
        let bath = BathSpec::Repetitive(RepetitiveBathSpec { k: 0.0, ..Default::default() });
        let r = gksl_rhs(&rho, 0.0, &h, &bath).unwrap();
        let expected = h.commutator(rho.matrix()).scale(-I);
        assert!(r.approx_eq(&expected, 1e-14));
        // thermal state of h itself is stationary
        let rho_h = thermal_state(&h, 1.0).unwrap();
        assert!(gksl_rhs(&rho_h, 0.0, &h, &bath).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn block_generator_matches_dense() {
        let n = 4;
        let h = build_hamiltonian(&model(n)).unwrap();
        let rho = thermal_state(&build_hamiltonian(&model(n).with_lambda(0.3)).unwrap(), 2.0).unwrap();
        for bath in [
            BathSpec::Repetitive(RepetitiveBathSpec { attached: vec![s(1), s(2)], ..Default::default() }),
            BathSpec::Bosonic(BosonicBathSpec { axis: NoiseAxis::X, ..Default::default() }),
        ] {
            let dense = Generator::dense(h.clone(), bath.clone(), n);
            let blocked = Generator::for_state(h.clone(), bath.clone(), rho.matrix(), n);
            assert!(matches!(blocked.coherent, Coherent::Blocks(_)));
            let a = dense.apply_raw(0.6, rho.matrix().as_matrix());
            let b = blocked.apply_raw(0.6, rho.matrix().as_matrix());
            assert!((a - b).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-13);
        }
    }

    #[test]
    fn rk4_scalar_order() {
        // dy/dt = -1.3 y on [0, 2]; error ratio under step halving ~ 16
        let lam = -1.3;
        let run = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let mut y = 1.0f64;
            for k in 0..steps {
                y = rk4_step(&y, k as f64 * dt, dt, |_, v| lam * v);
            }
            (y - (lam * 2.0).exp()).abs()
        };
        let (e1, e2) = (run(0.1), run(0.05));
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn open_run_validation() {
        let grid = TimeGrid::new(0.0, 0.1, 0.01).unwrap();
        let bad_site = BathSpec::Repetitive(RepetitiveBathSpec { attached: vec![s(9)], ..Default::default() });
        let spec = OpenRunSpec::new(model(4), bad_site, grid, vec![(s(1), s(2))]);
        assert!(rk4_integrate(&spec).is_err());
        let bad_s = BathSpec::Bosonic(BosonicBathSpec { ohmicity: 0.0, ..Default::default() });
        let spec = OpenRunSpec::new(model(4), bad_s, grid, vec![(s(1), s(2))]);
        assert!(rk4_integrate(&spec).is_err());
    }

    #[test]
    fn first_sample_is_initial_state() {
        let grid = TimeGrid::new(0.0, 0.05, 0.01).unwrap();
        let bath = BathSpec::Repetitive(RepetitiveBathSpec::default());
        let spec = OpenRunSpec::new(model(4), bath, grid, vec![(s(3), s(4))]);
        let mut first = None;
        let run = rk4_integrate_with(&spec, |t, rho| {
            if first.is_none() {
                first = Some((t, rho.clone()));
            }
        })
        .unwrap();
        let (t0, rho0) = first.unwrap();
        assert_eq!(t0, 0.0);
        let expected = thermal_state(&build_hamiltonian(&model(4)).unwrap(), 20.0).unwrap();
        assert!(rho0.approx_eq(expected.matrix(), 0.0));
        assert_eq!(run.series[0].values().len(), 6);
    }
}
