//! Field-quench dynamics: thermal state of `H(lambda = a)` evolved under `H(lambda = 0)`.
//!
//! The quench Hamiltonian conserves spin-flip parity and so does the thermal
//! initial state, so both are handled as two independent parity blocks. Each
//! block of `H(0)` is diagonalized once; a state at time `t` is then a phase
//! reweighting of the initial state written in that eigenbasis. Two-site
//! reduced states are read off as expectation values of matrix units, and
//! whole batches of time points are contracted with real GEMMs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::{log_negativity_of_matrix, EntanglementSeries, SitePair};
use crate::model::{build_hamiltonian, ModelSpec};
use crate::operator::{matrix_function, DenseMatrix, SiteIndex, C64, I};
use crate::thermal::{thermal_state, Beta, DensityMatrix};

/// Uniform sampling `t_k = t_in + k t_s`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_in: f64,
    t_f: f64,
    t_s: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_in: f64, t_f: f64, t_s: f64) -> Result<Self> {
        if !(t_in.is_finite() && t_f.is_finite() && t_s.is_finite()) {
            return Err(Error::param("time grid bounds must be finite"));
        }
        if t_s <= 0.0 {
            return Err(Error::param(format!("time step must be positive, got {t_s}")));
        }
        let span = t_f - t_in;
        let n = (span / t_s).round();
        if n < 1.0 || (n * t_s - span).abs() > 1e-9 {
            return Err(Error::param(format!(
                "span {span} is not a positive whole number of steps of {t_s}"
            )));
        }
        Ok(TimeGrid { t_in, t_f, t_s, n: n as usize })
    }

    /// `[0, 200]` in steps of `0.01`.
    pub fn standard() -> Self {
        TimeGrid::new(0.0, 200.0, 0.01).expect("valid grid")
    }

    pub fn t_in(&self) -> f64 {
        self.t_in
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn t_s(&self) -> f64 {
        self.t_s
    }

    /// Number of steps; the grid has `n + 1` points.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.t_f
        } else {
            self.t_in + k as f64 * self.t_s
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|k| self.time(k))
    }
}

/// Pairs `(4, 5), (4, 6), (4, 7), (4, 8)`.
pub fn default_pairs() -> Vec<SitePair> {
    (5..=8).map(|j| (SiteIndex(4), SiteIndex(j))).collect()
}

pub(crate) fn check_pairs(pairs: &[SitePair], nsites: usize) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::param("no site pairs requested"));
    }
    for &(a, b) in pairs {
        a.check(nsites)?;
        b.check(nsites)?;
        if a == b {
            return Err(Error::DuplicateSite(a.get()));
        }
    }
    Ok(())
}

/// One quench experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchSpec {
    /// Pre-quench model; its `lambda` is the initial field `a`.
    pub model: ModelSpec,
    pub beta: Beta,
    pub grid: TimeGrid,
    pub pairs: Vec<SitePair>,
}

impl QuenchSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.beta.validate()?;
        check_pairs(&self.pairs, self.model.nsites)
    }

    pub fn quench_model(&self) -> ModelSpec {
        self.model.with_lambda(0.0)
    }
}

/// `U rho0 U^dagger` with `U = exp(-i t H)`.
pub fn evolve_closed(rho0: &DensityMatrix, h: &DenseMatrix, t: f64) -> Result<DensityMatrix> {
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), got: h.dim() });
    }
    let u = matrix_function(h, |e| (-I * (t * e)).exp())?;
    let rho = u.matmul(rho0.matrix()).matmul(&u.adjoint());
    Ok(DensityMatrix::from_parts_unchecked(rho.hermitian_part(), rho0.nsites()))
}

/// Runs the quench and returns one series per requested pair.
pub fn run_quench(spec: &QuenchSpec) -> Result<Vec<EntanglementSeries>> {
    QuenchEvolution::new(spec)?.pair_series(&spec.grid, &spec.pairs)
}

/// One parity block of the quench Hamiltonian together with the initial
/// state expressed in that block's eigenbasis.
#[derive(Debug, Clone)]
struct Block {
    /// Global basis indices belonging to the block, ascending.
    indices: Vec<usize>,
    /// Position of each global index inside the block (`usize::MAX` if absent).
    position: Vec<usize>,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
    rho_re: DMatrix<f64>,
    rho_im: DMatrix<f64>,
}

impl Block {
    fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Cached spectral data for evaluating a quench at arbitrary times.
#[derive(Debug, Clone)]
pub struct QuenchEvolution {
    nsites: usize,
    initial: DensityMatrix,
    quench_h: DenseMatrix,
    blocks: Vec<Block>,
}

// Residual above which an operator is treated as coupling the two parity blocks.
pub(crate) const BLOCK_LEAK_TOL: f64 = 1e-12;

// Number of time points contracted per GEMM.
const TIME_BATCH: usize = 256;

pub(crate) fn parity_blocks(nsites: usize) -> [Vec<usize>; 2] {
    let dim = 1usize << nsites;
    let even = (0..dim).filter(|x| x.count_ones() % 2 == 0).collect();
    let odd = (0..dim).filter(|x| x.count_ones() % 2 == 1).collect();
    [even, odd]
}

pub(crate) fn positions(indices: &[usize], dim: usize) -> Vec<usize> {
    let mut pos = vec![usize::MAX; dim];
    for (k, &x) in indices.iter().enumerate() {
        pos[x] = k;
    }
    pos
}

/// Largest entry coupling different parity blocks.
pub(crate) fn parity_leak(m: &DenseMatrix) -> f64 {
    let n = m.dim();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            if (r ^ c).count_ones() % 2 == 1 {
                worst = worst.max(m.get(r, c).norm());
            }
        }
    }
    worst
}

impl QuenchEvolution {
    pub fn new(spec: &QuenchSpec) -> Result<Self> {
        spec.validate()?;
        let h_initial = build_hamiltonian(&spec.model)?;
        let initial = thermal_state(&h_initial, spec.beta)?;
        let quench_h = build_hamiltonian(&spec.quench_model())?;
        Self::from_parts(initial, quench_h)
    }

    /// Evolution of an arbitrary parity-even state under a real,
    /// parity-conserving Hamiltonian.
    pub fn from_parts(initial: DensityMatrix, quench_h: DenseMatrix) -> Result<Self> {
        let nsites = initial.nsites();
        if quench_h.dim() != initial.dim() {
            return Err(Error::DimensionMismatch { expected: initial.dim(), got: quench_h.dim() });
        }
        if !quench_h.is_real() || quench_h.hermitian_residual() > 0.0 {
            return Err(Error::param("quench Hamiltonian must be real symmetric"));
        }
        let leak = parity_leak(&quench_h);
        if leak > BLOCK_LEAK_TOL {
            return Err(Error::param(format!("quench Hamiltonian breaks parity ({leak:e})")));
        }
        let leak = parity_leak(initial.matrix());
        if leak > BLOCK_LEAK_TOL {
            return Err(Error::InvalidState(format!("initial state mixes parity blocks ({leak:e})")));
        }

        let h = quench_h.real_part();
        let rho = initial.matrix();
        let dim = initial.dim();
        let blocks = parity_blocks(nsites)
            .into_iter()
            .map(|indices| {
                let d = indices.len();
                let hb = DMatrix::from_fn(d, d, |r, c| h[(indices[r], indices[c])]);
                let eig = nalgebra::SymmetricEigen::new(hb);
                let mut order: Vec<usize> = (0..d).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
                let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
                let sub_re = DMatrix::from_fn(d, d, |r, c| rho.get(indices[r], indices[c]).re);
                let sub_im = DMatrix::from_fn(d, d, |r, c| rho.get(indices[r], indices[c]).im);
                let vt = vectors.transpose();
                let rho_re = &vt * &sub_re * &vectors;
                let rho_im = &vt * &sub_im * &vectors;
                Block { position: positions(&indices, dim), indices, energies, vectors, rho_re, rho_im }
            })
            .collect();
        Ok(QuenchEvolution { nsites, initial, quench_h, blocks })
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn quench_hamiltonian(&self) -> &DenseMatrix {
        &self.quench_h
    }

    /// Quench-Hamiltonian eigenvalues of both parity blocks, ascending.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Full state at time `t` (in the computational basis).
    pub fn state_at(&self, t: f64) -> DensityMatrix {
        let dim = self.initial.dim();
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for b in &self.blocks {
            let d = b.dim();
            let phase: Vec<(f64, f64)> = b.energies.iter().map(|e| (e * t).sin_cos()).collect();
            // rho~(t)[m, n] = rho~0[m, n] exp(-i (E_m - E_n) t)
            let mut stacked = DMatrix::<f64>::zeros(d, 2 * d);
            for n in 0..d {
                let (sn, cn) = phase[n];
                for m in 0..d {
                    let (sm, cm) = phase[m];
                    // exp(-i E_m t) exp(i E_n t)
                    let pr = cm * cn + sm * sn;
                    let pi = cm * sn - sm * cn;
                    let (a, bi) = (b.rho_re[(m, n)], b.rho_im[(m, n)]);
                    stacked[(m, n)] = a * pr - bi * pi;
                    stacked[(m, d + n)] = a * pi + bi * pr;
                }
            }
            let left = &b.vectors * stacked;
            let vt = b.vectors.transpose();
            let re = left.columns(0, d) * &vt;
            let im = left.columns(d, d) * &vt;
            for c in 0..d {
                for r in 0..d {
                    out[(b.indices[r], b.indices[c])] = C64::new(re[(r, c)], im[(r, c)]);
                }
            }
        }
        let m = DenseMatrix::from_matrix(out).expect("square");
        DensityMatrix::from_parts_unchecked(m, self.nsites)
    }

    /// Logarithmic-negativity series for each pair on `grid`.
    pub fn pair_series(&self, grid: &TimeGrid, pairs: &[SitePair]) -> Result<Vec<EntanglementSeries>> {
        check_pairs(pairs, self.nsites)?;
        let units = pair_units(pairs);
        let weights: Vec<(DMatrix<f64>, usize)> =
            self.blocks.iter().map(|b| (self.observable_weights(b, pairs, &units), units.len())).collect();

        let times: Vec<f64> = grid.times().collect();
        let mut expectations = vec![vec![C64::new(0.0, 0.0); times.len()]; units.len() * pairs.len()];
        for (chunk_index, chunk) in times.chunks(TIME_BATCH).enumerate() {
            let offset = chunk_index * TIME_BATCH;
            for (b, (w, _)) in self.blocks.iter().zip(&weights) {
                contract_batch(b, w, chunk, offset, &mut expectations);
            }
        }

        pairs
            .iter()
            .enumerate()
            .map(|(p, &pair)| {
                let values = (0..times.len())
                    .map(|k| {
                        let ex = |u: usize| expectations[p * units.len() + u][k];
                        log_negativity_of_matrix(&reduced_from_units(&ex))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                EntanglementSeries::new(pair, *grid, values)
            })
            .collect()
    }

    /// Rows `(o, m)`, columns `n`: `[Re; Im]` of `rho~0[m, n] O~[n, m]` for
    /// every observable `o` (pair-major, then matrix unit).
    fn observable_weights(&self, b: &Block, pairs: &[SitePair], units: &[(usize, usize)]) -> DMatrix<f64> {
        let d = b.dim();
        let nobs = pairs.len() * units.len();
        let mut w = DMatrix::<f64>::zeros(2 * nobs * d, d);
        for (p, &(a, c)) in pairs.iter().enumerate() {
            let (lo, hi) = if a < c { (a, c) } else { (c, a) };
            let bits = [lo.bit(self.nsites), hi.bit(self.nsites)];
            let pair_mask = (1usize << bits[0]) | (1usize << bits[1]);
            for (u, &(row, col)) in units.iter().enumerate() {
                let o = p * units.len() + u;
                // <row| rho_red |col> = sum_rest rho[(row, rest), (col, rest)] = tr(rho O),
                // O = sum_rest |col, rest><row, rest|; keep the rests landing in this block.
                let mut rows_c = Vec::new();
                let mut rows_r = Vec::new();
                for rest in 0..(1usize << self.nsites) {
                    if rest & pair_mask != 0 {
                        continue;
                    }
                    let x = place(rest, col, bits);
                    let y = place(rest, row, bits);
                    if b.position[x] != usize::MAX {
                        rows_c.push(b.position[x]);
                        rows_r.push(b.position[y]);
                    }
                }
                let vc = b.vectors.select_rows(rows_c.iter());
                let vr = b.vectors.select_rows(rows_r.iter());
                // O~[n, m] = sum_k V[x_k, n] V[y_k, m]
                let o_tilde = vc.transpose() * vr;
                for n in 0..d {
                    for m in 0..d {
                        let ot = o_tilde[(n, m)];
                        w[(o * d + m, n)] = b.rho_re[(m, n)] * ot;
                        w[((nobs + o) * d + m, n)] = b.rho_im[(m, n)] * ot;
                    }
                }
            }
        }
        w
    }
}

fn place(rest: usize, local: usize, bits: [u32; 2]) -> usize {
    rest | (((local >> 1) & 1) << bits[0]) | ((local & 1) << bits[1])
}

/// Parity-even matrix units `(row, col)` of a two-qubit reduced state that
/// determine it completely: the diagonal plus the upper `|00><11|` and
/// `|01><10|` coherences.
fn pair_units(_pairs: &[SitePair]) -> Vec<(usize, usize)> {
    vec![(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (1, 2)]
}

fn reduced_from_units(ex: &dyn Fn(usize) -> C64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(4);
    for k in 0..4 {
        m.set(k, k, C64::new(ex(k).re, 0.0));
    }
    m.set(0, 3, ex(4));
    m.set(3, 0, ex(4).conj());
    m.set(1, 2, ex(5));
    m.set(2, 1, ex(5).conj());
    m
}

/// Adds this block's contribution to every observable for a batch of times.
fn contract_batch(b: &Block, w: &DMatrix<f64>, times: &[f64], offset: usize, out: &mut [Vec<C64>]) {
    let d = b.dim();
    let nt = times.len();
    let nobs = w.nrows() / (2 * d);
    // conj(F)[n, t] = exp(+i E_n t) = C + i S
    let mut cs = DMatrix::<f64>::zeros(d, 2 * nt);
    for (k, &t) in times.iter().enumerate() {
        for n in 0..d {
            let (s, c) = (b.energies[n] * t).sin_cos();
            cs[(n, k)] = c;
            cs[(n, nt + k)] = s;
        }
    }
    let g = w * &cs;
    for (o, series) in out.iter_mut().enumerate().take(nobs) {
        for k in 0..nt {
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for m in 0..d {
                let rr = o * d + m;
                let ri = (nobs + o) * d + m;
                // G = (Ar + i Ai)(C + i S)
                let g_re = g[(rr, k)] - g[(ri, nt + k)];
                let g_im = g[(rr, nt + k)] + g[(ri, k)];
                // exp(-i E_m t) = C_m - i S_m
                let (cm, sm) = (cs[(m, k)], cs[(m, nt + k)]);
                acc_re += cm * g_re + sm * g_im;
                acc_im += cm * g_im - sm * g_re;
            }
            series[offset + k] += C64::new(acc_re, acc_im);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::log_negativity;
    use crate::model::DecayLaw;
    use crate::operator::partial_trace;

    fn s(i: usize) -> SiteIndex {
        SiteIndex::new(i).unwrap()
    }

    fn spec(n: usize, a: f64, z: usize) -> QuenchSpec {
        QuenchSpec {
            model: ModelSpec {
                nsites: n,
                gamma: 0.8,
                lambda: a,
                delta: 0.8,
                coordination: z,
                decay: DecayLaw::exponential(2.0).unwrap(),
            },
            beta: Beta::Finite(5.0),
            grid: TimeGrid::new(0.0, 3.0, 0.25).unwrap(),
            pairs: vec![(s(1), s(2)), (s(2), s(4)), (s(4), s(1))],
        }
    }

    #[test]
    fn grid_construction() {
        let g = TimeGrid::standard();
        assert_eq!(g.steps(), 20_000);
        assert_eq!(g.len(), 20_001);
        assert_eq!(g.time(20_000), 200.0);
        assert!((g.time(1) - 0.01).abs() < 1e-15);
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let sp = spec(3, 0.5, 2);
        let h = build_hamiltonian(&sp.quench_model()).unwrap();
        let rho0 = thermal_state(&build_hamiltonian(&sp.model).unwrap(), 2.0).unwrap();
        let rho = evolve_closed(&rho0, &h, 0.0).unwrap();
        assert!(rho.matrix().approx_eq(rho0.matrix(), 1e-12));
    }

    #[test]
    fn thermal_state_is_stationary() {
        let sp = spec(4, 0.5, 3);
        let h = build_hamiltonian(&sp.model).unwrap();
        let rho0 = thermal_state(&h, 2.0).unwrap();
        for t in [0.3, 1.7, 12.0] {
            let rho = evolve_closed(&rho0, &h, t).unwrap();
            assert!(rho.matrix().approx_eq(rho0.matrix(), 1e-10));
        }
    }

    #[test]
    fn evolve_rejects_mismatch() {
        let rho0 = DensityMatrix::maximally_mixed(2);
        assert!(evolve_closed(&rho0, &DenseMatrix::identity(8), 1.0).is_err());
    }

    #[test]
    fn block_evolution_matches_dense_exponential() {
        let sp = spec(5, 0.7, 3);
        let evo = QuenchEvolution::new(&sp).unwrap();
        let h0 = build_hamiltonian(&sp.quench_model()).unwrap();
        for t in [0.0, 0.4, 2.5] {
            let fast = evo.state_at(t);
            let slow = evolve_closed(evo.initial_state(), &h0, t).unwrap();
            assert!(fast.matrix().approx_eq(slow.matrix(), 1e-11), "t = {t}");
        }
    }

    #[test]
    fn series_match_partial_trace_route() {
        let sp = spec(5, 0.7, 4);
        let evo = QuenchEvolution::new(&sp).unwrap();
        let series = evo.pair_series(&sp.grid, &sp.pairs).unwrap();
        for (k, t) in sp.grid.times().enumerate() {
            let rho = evo.state_at(t);
            for ser in &series {
                let (a, b) = ser.pair();
                let red = partial_trace(&rho, &[a, b]).unwrap();
                let ln = log_negativity(&red).unwrap();
                assert!((ln - ser.values()[k]).abs() < 1e-10, "pair {a},{b} t={t}");
            }
        }
    }

    #[test]
    fn pair_order_does_not_matter() {
        let mut sp = spec(4, 0.3, 3);
        sp.pairs = vec![(s(1), s(3)), (s(3), s(1))];
        let series = run_quench(&sp).unwrap();
        assert_eq!(series[0].values(), series[1].values());
    }

    #[test]
    fn zero_field_quench_is_flat() {
        let mut sp = spec(4, 0.0, 3);
        sp.pairs = vec![(s(2), s(3))];
        let series = run_quench(&sp).unwrap();
        let v0 = series[0].values()[0];
        assert!(series[0].values().iter().all(|v| (v - v0).abs() < 1e-10));
    }

    #[test]
    fn rejects_bad_pairs() {
        let mut sp = spec(4, 0.3, 3);
        sp.pairs = vec![(s(2), s(2))];
        assert!(run_quench(&sp).is_err());
        sp.pairs = vec![(s(2), s(5))];
        assert!(run_quench(&sp).is_err());
        sp.pairs = vec![];
        assert!(run_quench(&sp).is_err());
    }
}
