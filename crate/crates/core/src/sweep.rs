//! Configuration-driven parameter sweeps and the CSV files they leave behind.
//!
//! A sweep config is a flat TOML file. Every grid key accepts a number or a
//! list; the cartesian product of the grids is run point by point.
//!
//! ```toml
//! schema_version = 1
//! mode = "closed"            # or "open"
//! nsites = 8
//! gamma = 0.8
//! lambda = [0.1, 0.5, 1.0]   # initial field a (closed) or field lambda (open)
//! delta = [-1.0, 0.8]
//! coordination = [2, 7]
//! decay_kind = "exponential" # or "power"
//! decay_rate = 2.0
//! beta = 200.0               # or "ground"
//! t_in = 0.0
//! t_final = 200.0
//! t_step = 0.01
//! pairs = ["4:5", "4:7"]
//! freeze_delta = 1e-5
//! bound_c = 0.35
//! output_dir = "out"
//! workers = 2
//! seed = 0                   # accepted and ignored: runs are deterministic
//!
//! [bath]                     # open mode only
//! kind = "repetitive"        # k, b, beta_env, attached
//! # kind = "bosonic"         # ohmicity, cutoff, axis = "z" | "x", attached
//! ```
//!
//! Outputs under `output_dir`: `summary.csv` with one row per (point, pair),
//! and one `series/<point>_<i>-<j>.csv` file with columns `t,ln_value` for
//! each row. Numbers carry 12 significant digits. Rows are sorted by
//! parameter tuple, so reruns are byte-identical for any worker count.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::closed::{default_pairs, run_quench, QuenchSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::metrics::{
    detect_freezing, EntanglementSeries, FreezingConfig, FreezingReport, SitePair, DEFAULT_BOUND_C,
    DEFAULT_FREEZE_DELTA,
};
use crate::model::{DecayKind, DecayLaw, ModelSpec};
use crate::open::{rk4_integrate, BathSpec, BosonicBathSpec, NoiseAxis, OpenRunSpec, RepetitiveBathSpec};
use crate::operator::SiteIndex;
use crate::thermal::Beta;

pub const SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FREEZE_TABLE_FILE: &str = "freeze_table.csv";
pub const SERIES_DIR: &str = "series";

pub const SERIES_HEADER: [&str; 2] = ["t", "ln_value"];
pub const SUMMARY_HEADER: [&str; 16] = [
    "mode",
    "decay_kind",
    "decay_rate",
    "Z",
    "gamma",
    "delta",
    "lambda_or_a",
    "beta",
    "pair_i",
    "pair_j",
    "l_avg",
    "l_sigma",
    "tau_f",
    "l_f",
    "comp_sum",
    "unterminated_flag",
];
pub const FREEZE_HEADER: [&str; 7] = ["check", "pair_i", "pair_j", "params", "value", "bound", "status"];

/// Exit status for an error surfaced by a sweep: 3 for numerical aborts, 2 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::AtPoint { .. } | Error::PositivityViolation { .. } => 3,
        _ => 2,
    }
}

/// Round to 12 significant digits and print the shortest text that reads back to that value.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Closed,
    Open,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Closed => "closed",
            Mode::Open => "open",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Mode::Closed),
            "open" => Ok(Mode::Open),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

/// A single value or a list of values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Grid<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Grid::One(v) => vec![v.clone()],
            Grid::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BetaSetting {
    Value(f64),
    Label(String),
}

impl BetaSetting {
    fn resolve(&self) -> Result<Beta> {
        match self {
            BetaSetting::Value(b) => Beta::Finite(*b).validate(),
            BetaSetting::Label(s) if s == "ground" => Ok(Beta::Ground),
            BetaSetting::Label(s) => Err(Error::Config(format!("beta must be a number or \"ground\", got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathKind {
    Repetitive,
    Bosonic,
}

/// `[bath]` table. Keys that do not belong to the chosen kind are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathTable {
    pub kind: BathKind,
    pub k: Option<f64>,
    pub b: Option<f64>,
    pub beta_env: Option<f64>,
    pub ohmicity: Option<f64>,
    pub cutoff: Option<f64>,
    pub axis: Option<String>,
    pub attached: Option<Vec<usize>>,
}

impl BathTable {
    pub fn to_spec(&self) -> Result<BathSpec> {
        let attached = match &self.attached {
            Some(sites) => sites.iter().map(|&s| SiteIndex::new(s)).collect::<Result<Vec<_>>>()?,
            None => vec![SiteIndex(1), SiteIndex(2), SiteIndex(3)],
        };
        let stray = |names: &[(&str, bool)]| -> Result<()> {
            match names.iter().find(|(_, set)| *set) {
                Some((name, _)) => Err(Error::Config(format!("bath key `{name}` does not apply to this bath kind"))),
                None => Ok(()),
            }
        };
        match self.kind {
            BathKind::Repetitive => {
                stray(&[
                    ("ohmicity", self.ohmicity.is_some()),
                    ("cutoff", self.cutoff.is_some()),
                    ("axis", self.axis.is_some()),
                ])?;
                let d = RepetitiveBathSpec::default();
                Ok(BathSpec::Repetitive(RepetitiveBathSpec {
                    k: self.k.unwrap_or(d.k),
                    b: self.b.unwrap_or(d.b),
                    beta_env: self.beta_env.unwrap_or(d.beta_env),
                    attached,
                }))
            }
            BathKind::Bosonic => {
                stray(&[("k", self.k.is_some()), ("b", self.b.is_some()), ("beta_env", self.beta_env.is_some())])?;
                let d = BosonicBathSpec::default();
                let axis = match self.axis.as_deref() {
                    None | Some("z") => NoiseAxis::Z,
                    Some("x") => NoiseAxis::X,
                    Some(other) => return Err(Error::Config(format!("noise axis must be \"x\" or \"z\", got `{other}`"))),
                };
                Ok(BathSpec::Bosonic(BosonicBathSpec {
                    ohmicity: self.ohmicity.unwrap_or(d.ohmicity),
                    cutoff: self.cutoff.unwrap_or(d.cutoff),
                    axis,
                    attached,
                }))
            }
        }
    }
}

fn default_nsites() -> usize {
    8
}
fn default_gamma() -> f64 {
    0.8
}
fn default_decay_kind() -> DecayKind {
    DecayKind::Exponential
}
fn default_t_final() -> f64 {
    200.0
}
fn default_t_step() -> f64 {
    0.01
}
fn default_freeze_delta() -> f64 {
    DEFAULT_FREEZE_DELTA
}
fn default_bound_c() -> f64 {
    DEFAULT_BOUND_C
}
fn default_stride() -> usize {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default = "default_nsites")]
    pub nsites: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub lambda: Grid<f64>,
    pub delta: Grid<f64>,
    pub coordination: Grid<usize>,
    #[serde(default = "default_decay_kind")]
    pub decay_kind: DecayKind,
    pub decay_rate: Grid<f64>,
    /// Defaults to 200 in closed mode and 20 in open mode.
    #[serde(default)]
    pub beta: Option<BetaSetting>,
    #[serde(default)]
    pub t_in: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
    /// `"i:j"` entries; defaults to (4,5) through (4,8).
    #[serde(default)]
    pub pairs: Option<Vec<String>>,
    #[serde(default = "default_freeze_delta")]
    pub freeze_delta: f64,
    #[serde(default = "default_bound_c")]
    pub bound_c: f64,
    #[serde(default)]
    pub bath: Option<BathTable>,
    /// Open mode: evolve with the field switched off instead of kept on.
    #[serde(default)]
    pub quench_field: bool,
    #[serde(default = "default_stride")]
    pub positivity_stride: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parses `i:j[,i:j...]`.
pub fn parse_pairs(text: &str) -> Result<Vec<SitePair>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("pair `{item}` is not of the form i:j")))?;
        let site = |s: &str| -> Result<SiteIndex> {
            let v: usize = s.trim().parse().map_err(|_| Error::Config(format!("bad site index `{s}` in `{item}`")))?;
            SiteIndex::new(v)
        };
        out.push((site(a)?, site(b)?));
    }
    if out.is_empty() {
        return Err(Error::Config("pair list is empty".into()));
    }
    Ok(out)
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub decay: DecayLaw,
    pub coordination: usize,
    pub gamma: f64,
    pub delta: f64,
    /// Initial field `a` in closed mode, field `lambda` in open mode.
    pub lambda: f64,
}

impl ParamPoint {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.decay
            .kind()
            .cmp(&other.decay.kind())
            .then(self.decay.rate().total_cmp(&other.decay.rate()))
            .then(self.coordination.cmp(&other.coordination))
            .then(self.gamma.total_cmp(&other.gamma))
            .then(self.delta.total_cmp(&other.delta))
            .then(self.lambda.total_cmp(&other.lambda))
    }

    pub fn label(&self) -> String {
        format!(
            "decay={}:{} Z={} gamma={} delta={} lambda={}",
            self.decay.kind().label(),
            format_sig12(self.decay.rate()),
            self.coordination,
            format_sig12(self.gamma),
            format_sig12(self.delta),
            format_sig12(self.lambda)
        )
    }

    fn model(&self, nsites: usize) -> ModelSpec {
        ModelSpec {
            nsites,
            gamma: self.gamma,
            lambda: self.lambda,
            delta: self.delta,
            coordination: self.coordination,
            decay: self.decay,
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks everything that can be checked without running, reporting
    /// any failure as a configuration error.
    pub fn validate(&self) -> Result<()> {
        self.validate_inner().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn validate_inner(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let points = self.points()?;
        for p in &points {
            p.model(self.nsites).validate()?;
        }
        self.beta()?;
        self.grid()?;
        let pairs = self.pairs()?;
        crate::closed::check_pairs(&pairs, self.nsites)?;
        self.freezing().validate()?;
        if self.positivity_stride == 0 {
            return Err(Error::Config("positivity_stride must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match (self.mode, &self.bath) {
            (Mode::Open, None) => return Err(Error::Config("open mode needs a [bath] table".into())),
            (Mode::Closed, Some(_)) => return Err(Error::Config("[bath] only applies to open mode".into())),
            (Mode::Open, Some(_)) => self.bath_spec()?.validate(self.nsites)?,
            (Mode::Closed, None) => {}
        }
        if self.quench_field && self.mode == Mode::Closed {
            return Err(Error::Config("quench_field only applies to open mode".into()));
        }
        Ok(())
    }

    /// Grid points sorted by (decay kind, rate, Z, gamma, delta, lambda).
    pub fn points(&self) -> Result<Vec<ParamPoint>> {
        let grid = |name: &str, n: usize| -> Result<()> {
            if n == 0 {
                Err(Error::Config(format!("grid `{name}` is empty")))
            } else {
                Ok(())
            }
        };
        let (rates, zs, deltas, lambdas) =
            (self.decay_rate.values(), self.coordination.values(), self.delta.values(), self.lambda.values());
        grid("decay_rate", rates.len())?;
        grid("coordination", zs.len())?;
        grid("delta", deltas.len())?;
        grid("lambda", lambdas.len())?;
        let mut points = Vec::new();
        for &rate in &rates {
            let decay = DecayLaw::new(self.decay_kind, rate)?;
            for &coordination in &zs {
                for &delta in &deltas {
                    for &lambda in &lambdas {
                        points.push(ParamPoint { decay, coordination, gamma: self.gamma, delta, lambda });
                    }
                }
            }
        }
        points.sort_by(|a, b| a.sort_key_cmp(b));
        points.dedup_by(|a, b| a.sort_key_cmp(b) == Ordering::Equal);
        Ok(points)
    }

    pub fn beta(&self) -> Result<Beta> {
        match &self.beta {
            Some(b) => b.resolve(),
            None => Ok(match self.mode {
                Mode::Closed => Beta::Finite(200.0),
                Mode::Open => Beta::Finite(20.0),
            }),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_in, self.t_final, self.t_step)
    }

    pub fn pairs(&self) -> Result<Vec<SitePair>> {
        match &self.pairs {
            Some(items) => parse_pairs(&items.join(",")),
            None => Ok(default_pairs()),
        }
    }

    pub fn freezing(&self) -> FreezingConfig {
        FreezingConfig { delta: self.freeze_delta, bound_c: self.bound_c }
    }

    pub fn bath_spec(&self) -> Result<BathSpec> {
        self.bath
            .as_ref()
            .ok_or_else(|| Error::Config("no [bath] table".into()))?
            .to_spec()
    }

    /// Worker count from the config, falling back to the machine's parallelism.
    pub fn worker_count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mode: Mode,
    pub decay_kind: DecayKind,
    pub decay_rate: f64,
    pub coordination: usize,
    pub gamma: f64,
    pub delta: f64,
    pub lambda_or_a: f64,
    pub beta: Beta,
    pub pair_i: usize,
    pub pair_j: usize,
    pub l_avg: f64,
    pub l_sigma: f64,
    pub tau_f: f64,
    pub l_f: f64,
    pub comp_sum: f64,
    pub unterminated: bool,
}

fn format_beta(beta: Beta) -> String {
    match beta {
        Beta::Finite(b) => format_sig12(b),
        Beta::Ground => "ground".to_string(),
    }
}

impl SummaryRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.mode.label().to_string(),
            self.decay_kind.label().to_string(),
            format_sig12(self.decay_rate),
            self.coordination.to_string(),
            format_sig12(self.gamma),
            format_sig12(self.delta),
            format_sig12(self.lambda_or_a),
            format_beta(self.beta),
            self.pair_i.to_string(),
            self.pair_j.to_string(),
            format_sig12(self.l_avg),
            format_sig12(self.l_sigma),
            format_sig12(self.tau_f),
            format_sig12(self.l_f),
            format_sig12(self.comp_sum),
            u8::from(self.unterminated).to_string(),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != SUMMARY_HEADER.len() {
            return Err(Error::Config(format!("summary row has {} fields, expected {}", rec.len(), SUMMARY_HEADER.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::Config(format!("bad {} value `{}`", SUMMARY_HEADER[k], &rec[k])))
        };
        let int = |k: usize| -> Result<usize> {
            rec[k].parse().map_err(|_| Error::Config(format!("bad {} value `{}`", SUMMARY_HEADER[k], &rec[k])))
        };
        let decay_kind = match &rec[1] {
            "exponential" => DecayKind::Exponential,
            "power" => DecayKind::Power,
            other => return Err(Error::Config(format!("bad decay_kind `{other}`"))),
        };
        let beta = match &rec[7] {
            "ground" => Beta::Ground,
            _ => Beta::Finite(num(7)?),
        };
        let unterminated = match &rec[15] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Config(format!("bad unterminated_flag `{other}`"))),
        };
        Ok(SummaryRow {
            mode: Mode::parse(&rec[0])?,
            decay_kind,
            decay_rate: num(2)?,
            coordination: int(3)?,
            gamma: num(4)?,
            delta: num(5)?,
            lambda_or_a: num(6)?,
            beta,
            pair_i: int(8)?,
            pair_j: int(9)?,
            l_avg: num(10)?,
            l_sigma: num(11)?,
            tau_f: num(12)?,
            l_f: num(13)?,
            comp_sum: num(14)?,
            unterminated,
        })
    }

    /// Everything that identifies the parameter point, as one string.
    pub fn params_key(&self) -> String {
        format!(
            "mode={};decay={}:{};Z={};gamma={};delta={};lambda={};beta={}",
            self.mode.label(),
            self.decay_kind.label(),
            format_sig12(self.decay_rate),
            self.coordination,
            format_sig12(self.gamma),
            format_sig12(self.delta),
            format_sig12(self.lambda_or_a),
            format_beta(self.beta)
        )
    }

    /// File name of the matching time series inside the series directory.
    pub fn series_file_name(&self) -> String {
        format!(
            "{}_{}-{}_Z{}_g{}_d{}_l{}_b{}_{}-{}.csv",
            self.mode.label(),
            self.decay_kind.label(),
            format_sig12(self.decay_rate),
            self.coordination,
            format_sig12(self.gamma),
            format_sig12(self.delta),
            format_sig12(self.lambda_or_a),
            format_beta(self.beta),
            self.pair_i,
            self.pair_j
        )
    }
}

/// Result of one parameter point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: ParamPoint,
    pub series: Vec<EntanglementSeries>,
    pub reports: Vec<FreezingReport>,
}

/// Runs one grid point of `cfg`, naming the point on failure.
pub fn run_point(cfg: &SweepConfig, point: &ParamPoint) -> Result<PointResult> {
    let model = point.model(cfg.nsites);
    let grid = cfg.grid()?;
    let pairs = cfg.pairs()?;
    let series = match cfg.mode {
        Mode::Closed => run_quench(&QuenchSpec { model, beta: cfg.beta()?, grid, pairs }),
        Mode::Open => {
            let spec = OpenRunSpec {
                model,
                beta: cfg.beta()?,
                bath: cfg.bath_spec()?,
                grid,
                pairs,
                quench_field: cfg.quench_field,
                positivity_stride: cfg.positivity_stride,
            };
            rk4_integrate(&spec).map(|run| run.series)
        }
    }
    .map_err(|e| Error::AtPoint { point: point.label(), source: Box::new(e) })?;
    let freezing = cfg.freezing();
    let reports = series.iter().map(|s| detect_freezing(s, &freezing)).collect();
    Ok(PointResult { point: *point, series, reports })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub summary_path: PathBuf,
    pub series_paths: Vec<PathBuf>,
    pub rows: Vec<SummaryRow>,
}

/// Runs every grid point on a pool of `cfg.worker_count()` threads and writes
/// the summary and series files into `cfg.output_dir`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = cfg.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    // collect keeps grid order regardless of which worker finishes first
    let results: Vec<Result<PointResult>> = pool.install(|| points.par_iter().map(|p| run_point(cfg, p)).collect());
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_outputs(cfg, &results)
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_outputs(cfg: &SweepConfig, results: &[PointResult]) -> Result<SweepOutput> {
    let out = &cfg.output_dir;
    let series_dir = out.join(SERIES_DIR);
    fs::create_dir_all(&series_dir).map_err(|e| output_error(&series_dir, e))?;
    let beta = cfg.beta()?;

    let mut rows = Vec::new();
    let mut series_paths = Vec::new();
    for result in results {
        let p = &result.point;
        for (series, report) in result.series.iter().zip(&result.reports) {
            let stats = series.stats();
            let (i, j) = series.pair();
            let row = SummaryRow {
                mode: cfg.mode,
                decay_kind: p.decay.kind(),
                decay_rate: p.decay.rate(),
                coordination: p.coordination,
                gamma: p.gamma,
                delta: p.delta,
                lambda_or_a: p.lambda,
                beta,
                pair_i: i.get(),
                pair_j: j.get(),
                l_avg: stats.l_avg,
                l_sigma: stats.l_sigma,
                tau_f: report.tau_f,
                l_f: report.l_f,
                comp_sum: report.comp_sum,
                unterminated: report.unterminated,
            };
            let path = series_dir.join(row.series_file_name());
            write_series(&path, series)?;
            series_paths.push(path);
            rows.push(row);
        }
    }
    let summary_path = out.join(SUMMARY_FILE);
    write_summary(&summary_path, &rows)?;
    Ok(SweepOutput { summary_path, series_paths, rows })
}

pub fn write_series(path: &Path, series: &EntanglementSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(SERIES_HEADER)?;
    for (t, v) in series.times().zip(series.values()) {
        w.write_record([format_sig12(t), format_sig12(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,ln_value` file back as `(times, values)`.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if r.headers()?.iter().ne(SERIES_HEADER) {
        return Err(Error::Config(format!("{} does not have a t,ln_value header", path.display())));
    }
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number `{s}` in {}", path.display())));
        ts.push(parse(&rec[0])?);
        vs.push(parse(&rec[1])?);
    }
    Ok((ts, vs))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if r.headers()?.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Config(format!("{} does not have the summary header", path.display())));
    }
    r.records().map(|rec| SummaryRow::from_record(&rec?)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Largest `l_f + tau_f` of a pair against the bound `c`.
    Bound,
    /// `tau_f` grows with pair separation.
    TauOrder,
    /// `l_f` shrinks with pair separation.
    FrozenOrder,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::Bound => "bound",
            CheckKind::TauOrder => "tau_order",
            CheckKind::FrozenOrder => "lf_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not evaluated: an unentangled pair is involved.
    Skipped,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        }
    }
}

/// One row of `freeze_table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeCheck {
    pub check: CheckKind,
    pub pair_i: usize,
    pub pair_j: usize,
    /// Parameter point for ordering checks, `all` for bound checks.
    pub params: String,
    pub value: f64,
    pub bound: f64,
    pub status: CheckStatus,
}

impl FreezeCheck {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.check.label().to_string(),
            self.pair_i.to_string(),
            self.pair_j.to_string(),
            self.params.clone(),
            format_sig12(self.value),
            format_sig12(self.bound),
            self.status.label().to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezeTolerances {
    pub bound_c: f64,
    /// Pairs with `l_f` below this are unentangled and skipped.
    pub delta: f64,
    /// Slack for the `tau_f` ordering, normally one grid step.
    pub tau_slack: f64,
    /// Slack for the `l_f` ordering.
    pub lf_slack: f64,
}

impl FreezeTolerances {
    pub fn from_config(cfg: &SweepConfig) -> Self {
        FreezeTolerances { bound_c: cfg.bound_c, delta: cfg.freeze_delta, tau_slack: cfg.t_step, lf_slack: cfg.freeze_delta }
    }
}

/// Bound check per pair, then hierarchy checks within every parameter point.
/// Pairs sharing their first site are ordered by separation; each
/// consecutive couple gives one `tau_order` and one `lf_order` row, named by
/// the farther pair.
pub fn freeze_table(rows: &[SummaryRow], tol: &FreezeTolerances) -> Vec<FreezeCheck> {
    let entangled = |r: &SummaryRow| r.l_f >= tol.delta;
    let mut checks = Vec::new();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !pairs.contains(&(r.pair_i, r.pair_j)) {
            pairs.push((r.pair_i, r.pair_j));
        }
    }
    for &(i, j) in &pairs {
        let of_pair = rows.iter().filter(|r| (r.pair_i, r.pair_j) == (i, j));
        let max_entangled = of_pair.clone().filter(|r| entangled(r)).map(|r| r.comp_sum).reduce(f64::max);
        let (value, status) = match max_entangled {
            Some(m) if m <= tol.bound_c => (m, CheckStatus::Pass),
            Some(m) => (m, CheckStatus::Fail),
            None => (of_pair.map(|r| r.comp_sum).fold(0.0, f64::max), CheckStatus::Skipped),
        };
        checks.push(FreezeCheck {
            check: CheckKind::Bound,
            pair_i: i,
            pair_j: j,
            params: "all".to_string(),
            value,
            bound: tol.bound_c,
            status,
        });
    }

    let mut groups: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for r in rows {
        let key = r.params_key();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    for (key, group) in &groups {
        let mut firsts: Vec<usize> = group.iter().map(|r| r.pair_i).collect();
        firsts.sort_unstable();
        firsts.dedup();
        for first in firsts {
            let mut chain: Vec<&SummaryRow> = group.iter().copied().filter(|r| r.pair_i == first).collect();
            chain.sort_by_key(|r| r.pair_j.abs_diff(r.pair_i));
            for w in chain.windows(2) {
                let (near, far) = (w[0], w[1]);
                let both = entangled(near) && entangled(far);
                let status = |ok: bool| match (both, ok) {
                    (false, _) => CheckStatus::Skipped,
                    (true, true) => CheckStatus::Pass,
                    (true, false) => CheckStatus::Fail,
                };
                let dtau = far.tau_f - near.tau_f;
                checks.push(FreezeCheck {
                    check: CheckKind::TauOrder,
                    pair_i: far.pair_i,
                    pair_j: far.pair_j,
                    params: key.clone(),
                    value: dtau,
                    bound: -tol.tau_slack,
                    status: status(dtau >= -tol.tau_slack),
                });
                let dlf = near.l_f - far.l_f;
                checks.push(FreezeCheck {
                    check: CheckKind::FrozenOrder,
                    pair_i: far.pair_i,
                    pair_j: far.pair_j,
                    params: key.clone(),
                    value: dlf,
                    bound: -tol.lf_slack,
                    status: status(dlf >= -tol.lf_slack),
                });
            }
        }
    }
    checks
}

pub fn write_freeze_table(path: &Path, checks: &[FreezeCheck]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(FREEZE_HEADER)?;
    for c in checks {
        w.write_record(c.to_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `summary.csv` from `out_dir`, writes `freeze_table.csv` next to it.
pub fn freeze_report(out_dir: &Path, tol: &FreezeTolerances) -> Result<(PathBuf, Vec<FreezeCheck>)> {
    let summary = out_dir.join(SUMMARY_FILE);
    if !summary.is_file() {
        return Err(Error::Config(format!("missing {}", summary.display())));
    }
    let rows = read_summary(&summary)?;
    let checks = freeze_table(&rows, tol);
    let path = out_dir.join(FREEZE_TABLE_FILE);
    write_freeze_table(&path, &checks)?;
    Ok((path, checks))
}
