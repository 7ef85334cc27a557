//! Logarithmic negativity, series statistics and entanglement freezing.

use crate::closed::TimeGrid;
use crate::error::{Error, Result};
use crate::operator::{herm_eigenvalues, partial_transpose, DenseMatrix, Party, SiteIndex};
use crate::thermal::DensityMatrix;

/// Partial-transpose eigenvalues above `-CLAMP_TOL` count as non-negative.
pub const CLAMP_TOL: f64 = 1e-12;

/// Default freezing threshold.
pub const DEFAULT_FREEZE_DELTA: f64 = 1e-5;

/// Default complementarity bound on `l_f + tau_f`.
pub const DEFAULT_BOUND_C: f64 = 0.35;

pub type SitePair = (SiteIndex, SiteIndex);

pub(crate) fn negativity_of_matrix(rho_ab: &DenseMatrix) -> Result<f64> {
    let pt = partial_transpose(rho_ab, Party::Second)?;
    let neg: f64 = herm_eigenvalues(&pt)?
        .into_iter()
        .filter(|&e| e < -CLAMP_TOL)
        .fold(0.0, |acc, e| acc - e);
    Ok(neg)
}

pub(crate) fn log_negativity_of_matrix(rho_ab: &DenseMatrix) -> Result<f64> {
    Ok((2.0 * negativity_of_matrix(rho_ab)? + 1.0).log2())
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
pub fn negativity(rho_ab: &DensityMatrix) -> Result<f64> {
    if rho_ab.nsites() != 2 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_ab.dim() });
    }
    negativity_of_matrix(rho_ab.matrix())
}

/// `log2(2 N + 1)` in ebits.
pub fn log_negativity(rho_ab: &DensityMatrix) -> Result<f64> {
    Ok((2.0 * negativity(rho_ab)? + 1.0).log2())
}

/// Logarithmic negativity of one pair sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSeries {
    pair: SitePair,
    grid: TimeGrid,
    values: Vec<f64>,
}

impl EntanglementSeries {
    pub fn new(pair: SitePair, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::param(format!("entanglement value {v} is negative or NaN")));
        }
        Ok(EntanglementSeries { pair, grid, values })
    }

    pub fn pair(&self) -> SitePair {
        self.pair
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.grid.time(k))
    }

    pub fn stats(&self) -> SeriesStats {
        // Construction guarantees a nonempty series.
        SeriesStats {
            l_avg: time_average(&self.values).expect("nonempty"),
            l_sigma: std_dev(&self.values).expect("nonempty"),
        }
    }
}

impl AsRef<[f64]> for EntanglementSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub l_avg: f64,
    pub l_sigma: f64,
}

/// Mean over the sampled instants.
pub fn time_average(series: impl AsRef<[f64]>) -> Result<f64> {
    let v = series.as_ref();
    if v.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Population standard deviation over the sampled instants.
pub fn std_dev(series: impl AsRef<[f64]>) -> Result<f64> {
    let v = series.as_ref();
    let mean = time_average(v)?;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezingConfig {
    /// Largest deviation from the initial value still counted as frozen.
    pub delta: f64,
    pub bound_c: f64,
}

impl Default for FreezingConfig {
    fn default() -> Self {
        FreezingConfig { delta: DEFAULT_FREEZE_DELTA, bound_c: DEFAULT_BOUND_C }
    }
}

impl FreezingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::param(format!("freezing delta must be positive, got {}", self.delta)));
        }
        if !self.bound_c.is_finite() {
            return Err(Error::param("complementarity bound must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezingReport {
    pub pair: SitePair,
    /// Freezing terminal: last grid time before the first breach of `delta`.
    pub tau_f: f64,
    /// Frozen entanglement (the initial value).
    pub l_f: f64,
    pub comp_sum: f64,
    pub bound_c: f64,
    /// The series never left the band, so `tau_f` is the end of the grid.
    pub unterminated: bool,
    /// Initial value at least `delta`; unentangled pairs carry no freezing information.
    pub entangled: bool,
}

pub fn detect_freezing(series: &EntanglementSeries, cfg: &FreezingConfig) -> FreezingReport {
    let values = series.values();
    let l0 = values[0];
    let breach = values.iter().position(|v| (l0 - v).abs() >= cfg.delta);
    let (tau_f, unterminated) = match breach {
        Some(k) => (series.grid().time(k.saturating_sub(1)), false),
        None => (series.grid().time(values.len() - 1), true),
    };
    FreezingReport {
        pair: series.pair(),
        tau_f,
        l_f: l0,
        comp_sum: l0 + tau_f,
        bound_c: cfg.bound_c,
        unterminated,
        entangled: l0 >= cfg.delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Pass,
    Fail,
    /// Excluded from the bound: the pair starts unentangled.
    Unentangled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementarityRow {
    pub pair: SitePair,
    pub comp_sum: f64,
    pub status: BoundStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementaritySummary {
    pub bound_c: f64,
    pub rows: Vec<ComplementarityRow>,
    /// Largest `l_f + tau_f` over entangled pairs, if any.
    pub max_comp_sum: Option<f64>,
}

impl ComplementaritySummary {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status != BoundStatus::Fail)
    }

    /// Largest sum per distinct pair, in first-seen order.
    pub fn max_per_pair(&self) -> Vec<(SitePair, f64)> {
        let mut out: Vec<(SitePair, f64)> = Vec::new();
        for row in self.rows.iter().filter(|r| r.status != BoundStatus::Unentangled) {
            match out.iter_mut().find(|(p, _)| *p == row.pair) {
                Some((_, m)) => *m = m.max(row.comp_sum),
                None => out.push((row.pair, row.comp_sum)),
            }
        }
        out
    }
}

pub fn complementarity_report(reports: &[FreezingReport], bound_c: f64) -> ComplementaritySummary {
    let rows: Vec<ComplementarityRow> = reports
        .iter()
        .map(|r| ComplementarityRow {
            pair: r.pair,
            comp_sum: r.comp_sum,
            status: if !r.entangled {
                BoundStatus::Unentangled
            } else if r.comp_sum <= bound_c {
                BoundStatus::Pass
            } else {
                BoundStatus::Fail
            },
        })
        .collect();
    let max_comp_sum = rows
        .iter()
        .filter(|r| r.status != BoundStatus::Unentangled)
        .map(|r| r.comp_sum)
        .reduce(f64::max);
    ComplementaritySummary { bound_c, rows, max_comp_sum }
}
