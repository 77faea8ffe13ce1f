//! Scenario configs, seeded Monte Carlo sweeps and figure recipes.

mod figures;
mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    benchmark_pattern, maximize_snr, minimize_crb, reflective_only_crb, transmit_only_design, Backend, BenchmarkKind,
    DesignObjective, OptimizerOptions,
};
use crate::channel::{gen_channel, geometry_from_positions, ArrayGeometry, ChannelKind, ChannelRealization, PathLossModel, ScenarioGeometry};
use crate::error::{Error, Result};
use crate::metrics::{crb, crb_approx, detection_probability, mrt_covariance, snr, Architecture, ReflectPattern, SensingSpec, TransmitCovariance};

pub use figures::{figure_config, reproduce_figure, FigureOutput, FigureTag, Overrides};
pub use output::{render_svg, to_csv, write_outputs, CSV_HEADER, CSV_SCHEMA};

/// Environment variable read when no thread count is configured.
pub const THREADS_ENV: &str = "IRS_SENSE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(alias = "joint_bf")]
    JointBf,
    #[serde(alias = "reflective_only")]
    ReflectiveOnly,
    #[serde(alias = "transmit_only")]
    TransmitOnly,
    #[serde(alias = "no_opt")]
    NoOptimization,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::JointBf, Scheme::ReflectiveOnly, Scheme::TransmitOnly, Scheme::NoOptimization];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::JointBf => "joint_bf",
            Scheme::ReflectiveOnly => "reflective_only",
            Scheme::TransmitOnly => "transmit_only",
            Scheme::NoOptimization => "no_opt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Snr,
    Crb,
    Detection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Snr,
    Crb,
    CrbApprox,
    Pd,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Snr => "snr",
            Metric::Crb => "crb",
            Metric::CrbApprox => "crb_approx",
            Metric::Pd => "pd",
        }
    }
}

fn default_n_list() -> Vec<usize> {
    (1..=10).map(|k| 10 * k).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// File stem for the outputs.
    pub name: String,
    pub bs_pos: [f64; 2],
    pub irs_pos: [f64; 2],
    pub target_pos: [f64; 2],
    pub m_t: usize,
    pub m_r: usize,
    pub n_list: Vec<usize>,
    /// Each channel model gets its own set of series.
    pub channels: Vec<ChannelKind>,
    pub path_loss: PathLossModel,
    pub rcs: f64,
    pub power_budget_dbm: f64,
    pub sigma2_dbm: f64,
    pub t_symbols: usize,
    pub p_fa: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub objective: Objective,
    /// Also emit `crb_approx` rows (CRB objective only).
    pub report_crb_approx: bool,
    pub optimizer: OptimizerOptions,
    pub threads: Option<usize>,
    /// Record per-row wall time; off by default so outputs stay byte-stable.
    pub record_timing: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "sweep".into(),
            bs_pos: [0.0, 0.0],
            irs_pos: [1.0, 1.0],
            target_pos: [1.0, -5.0],
            m_t: 4,
            m_r: 4,
            n_list: default_n_list(),
            channels: vec![ChannelKind::Rayleigh],
            path_loss: PathLossModel::default(),
            rcs: 1.0,
            power_budget_dbm: 30.0,
            sigma2_dbm: -90.0,
            t_symbols: 256,
            p_fa: 1e-2,
            trials: 100,
            master_seed: 0,
            schemes: vec![Scheme::JointBf],
            objective: Objective::Snr,
            report_crb_approx: false,
            optimizer: OptimizerOptions::default().with_backend(Backend::CoordinateAscent),
            threads: None,
            record_timing: false,
        }
    }
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn p0(&self) -> f64 {
        dbm_to_watts(self.power_budget_dbm)
    }

    pub fn sensing_spec(&self) -> SensingSpec {
        SensingSpec { sigma2: dbm_to_watts(self.sigma2_dbm), t_symbols: self.t_symbols, p_fa: self.p_fa }
    }

    pub fn scenario(&self) -> Result<ScenarioGeometry> {
        geometry_from_positions(self.bs_pos, self.irs_pos, self.target_pos)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::validation("name must be non-empty and use [A-Za-z0-9_-]"));
        }
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("n_list must be non-empty, positive and strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials must be at least 1"));
        }
        if !self.power_budget_dbm.is_finite() || !self.sigma2_dbm.is_finite() {
            return Err(Error::validation("dBm fields must be finite"));
        }
        if self.channels.is_empty() || self.schemes.is_empty() {
            return Err(Error::validation("channels and schemes must be non-empty"));
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return Err(Error::validation("schemes must not repeat"));
        }
        let mut labels: Vec<String> = self.channels.iter().map(|c| c.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.channels.len() {
            return Err(Error::validation("channels must not repeat"));
        }
        if self.report_crb_approx && self.objective != Objective::Crb {
            return Err(Error::validation("report_crb_approx requires the Crb objective"));
        }
        if self.threads == Some(0) {
            return Err(Error::validation("threads must be at least 1"));
        }
        ArrayGeometry::new(self.m_t, self.m_r, self.n_list[0])?;
        self.scenario()?;
        self.path_loss.validate()?;
        self.sensing_spec().validate()?;
        self.optimizer.validate()?;
        if !(self.rcs > 0.0) || !self.rcs.is_finite() {
            return Err(Error::validation("rcs must be positive"));
        }
        for c in &self.channels {
            if let ChannelKind::Rician { k_factor } = c {
                if !(*k_factor >= 0.0) || !k_factor.is_finite() {
                    return Err(Error::validation("Rician factor must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `(n, trial)` cell; independent of scheduling.
pub fn cell_seed(master: u64, n: usize, trial: usize) -> u64 {
    mix(mix(mix(master) ^ n as u64) ^ trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Unbounded,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub arch: Architecture,
    /// `<scheme>:<channel>`, e.g. `joint_bf:rayleigh`.
    pub scheme: String,
    pub metric: Metric,
    /// Linear value; `inf` when unbounded, NaN when the row failed.
    pub value: f64,
    pub objective_trace_len: usize,
    pub wall_time_ms: f64,
    pub status: RowStatus,
}

pub fn to_db(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else {
        10.0 * x.log10()
    }
}

impl Row {
    pub fn value_db(&self) -> f64 {
        to_db(self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub arch: Architecture,
    pub scheme: String,
    pub metric: Metric,
    pub mean_linear: f64,
    /// `10 log10(mean_linear)`.
    pub mean_db: f64,
    /// Spread of the per-trial dB values.
    pub std_db: f64,
    /// Rows that entered the mean (failed rows are left out).
    pub trials: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ScenarioConfig,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepResult {
    /// `(n, mean_db)` for one series, in grid order.
    pub fn series_db(&self, arch: Architecture, scheme: &str, metric: Metric) -> Vec<(usize, f64)> {
        self.select(arch, scheme, metric).map(|a| (a.n, a.mean_db)).collect()
    }

    /// `(n, mean_linear)` for one series, in grid order.
    pub fn series_linear(&self, arch: Architecture, scheme: &str, metric: Metric) -> Vec<(usize, f64)> {
        self.select(arch, scheme, metric).map(|a| (a.n, a.mean_linear)).collect()
    }

    fn select<'a>(&'a self, arch: Architecture, scheme: &'a str, metric: Metric) -> impl Iterator<Item = &'a Aggregate> + 'a {
        self.aggregates.iter().filter(move |a| a.arch == arch && a.scheme == scheme && a.metric == metric)
    }

    /// Distinct `(arch, scheme, metric)` series in output order.
    pub fn series_keys(&self) -> Vec<(Architecture, String, Metric)> {
        let mut keys: Vec<(Architecture, String, Metric)> =
            self.aggregates.iter().map(|a| (a.arch, a.scheme.clone(), a.metric)).collect();
        keys.sort();
        keys.dedup();
        keys
    }
}

/// Groups rows into per-grid-point means; linear averaging, then dB.
pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, Architecture, String, Metric), Vec<&Row>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.n, r.arch, r.scheme.clone(), r.metric)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, arch, scheme, metric), rs)| {
            let used: Vec<f64> = rs.iter().map(|r| r.value).filter(|v| !v.is_nan()).collect();
            let failed = rs.len() - used.len();
            let mean_linear = if used.is_empty() { f64::NAN } else { used.iter().sum::<f64>() / used.len() as f64 };
            let dbs: Vec<f64> = used.iter().map(|&v| to_db(v)).filter(|d| d.is_finite()).collect();
            let std_db = if dbs.len() < 2 {
                0.0
            } else {
                let m = dbs.iter().sum::<f64>() / dbs.len() as f64;
                (dbs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (dbs.len() - 1) as f64).sqrt()
            };
            Aggregate { n, arch, scheme, metric, mean_linear, mean_db: to_db(mean_linear), std_db, trials: used.len(), failed }
        })
        .collect()
}

struct Cell {
    channel: ChannelKind,
    n: usize,
    trial: usize,
}

struct Ctx {
    cfg: ScenarioConfig,
    scen: ScenarioGeometry,
    spec: SensingSpec,
    p0: f64,
}

/// One `(arch, scheme)` evaluation: values per metric and the trace length.
type Evaluated = Result<(Vec<(Metric, f64)>, usize)>;

fn row_from(cell: &Cell, seed: u64, arch: Architecture, scheme: Scheme, metric: Metric, value: f64, trace_len: usize, ms: f64, status: RowStatus) -> Row {
    Row {
        n: cell.n,
        trial: cell.trial,
        seed,
        arch,
        scheme: format!("{}:{}", scheme.label(), cell.channel.label()),
        metric,
        value,
        objective_trace_len: trace_len,
        wall_time_ms: ms,
        status,
    }
}

fn metrics_for(ctx: &Ctx) -> Vec<Metric> {
    match ctx.cfg.objective {
        Objective::Snr => vec![Metric::Snr],
        Objective::Detection => vec![Metric::Pd],
        Objective::Crb if ctx.cfg.report_crb_approx => vec![Metric::Crb, Metric::CrbApprox],
        Objective::Crb => vec![Metric::Crb],
    }
}

fn evaluate_design(ctx: &Ctx, arch: Architecture, r: &TransmitCovariance, v: &ReflectPattern, ch: &ChannelRealization, trace_len: usize) -> Evaluated {
    let spec = &ctx.spec;
    let vals = metrics_for(ctx)
        .into_iter()
        .map(|m| {
            let value = match m {
                Metric::Snr => snr(arch, r, v, ch, spec),
                Metric::Pd => detection_probability(arch, r, v, ch, spec),
                Metric::Crb => crb(arch, r, v, ch, spec),
                Metric::CrbApprox => crb_approx(arch, r, v, ch, spec),
            };
            match value {
                Ok(x) => Ok((m, x)),
                Err(Error::Unbounded(_)) => Ok((m, f64::INFINITY)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vals, trace_len))
}

fn run_cell(ctx: &Ctx, cell: &Cell) -> Vec<Row> {
    let cfg = &ctx.cfg;
    let seed = cell_seed(cfg.master_seed, cell.n, cell.trial);
    let mut rows = Vec::new();
    let metrics = metrics_for(ctx);
    let push_failure = |rows: &mut Vec<Row>, arch, scheme, e: &Error| {
        let (value, status) = match e {
            Error::Unbounded(_) => (f64::INFINITY, RowStatus::Unbounded),
            other => (f64::NAN, RowStatus::Failed(other.to_string())),
        };
        for &m in &metrics {
            rows.push(row_from(cell, seed, arch, scheme, m, value, 0, 0.0, status.clone()));
        }
    };
    let channel = ArrayGeometry::new(cfg.m_t, cfg.m_r, cell.n)
        .and_then(|geom| gen_channel(cell.channel, &geom, &ctx.scen, &cfg.path_loss, cfg.rcs, seed));
    let ch = match channel {
        Ok(ch) => ch,
        Err(e) => {
            for arch in Architecture::BOTH {
                for &scheme in &cfg.schemes {
                    push_failure(&mut rows, arch, scheme, &e);
                }
            }
            return rows;
        }
    };
    let random_v = benchmark_pattern(BenchmarkKind::RandomPhases, cell.n, mix(seed ^ 0x5EED));
    let mut opts = cfg.optimizer.clone();
    opts.seed = mix(seed ^ opts.seed);
    for arch in Architecture::BOTH {
        // SNR-type objectives share one reflection optimization between the
        // joint and reflective-only schemes.
        let mut shared: Option<Result<(ReflectPattern, usize)>> = None;
        for &scheme in &cfg.schemes {
            let start = Instant::now();
            let outcome: Evaluated = (|| match cfg.objective {
                Objective::Snr | Objective::Detection => {
                    let (v, len) = match scheme {
                        Scheme::JointBf | Scheme::ReflectiveOnly => {
                            let got = shared.get_or_insert_with(|| {
                                maximize_snr(arch, &ch, &opts).map(|res| (res.v, res.objective_trace.len()))
                            });
                            match got {
                                Ok((v, len)) => (v.clone(), *len),
                                Err(e) => return Err(clone_error(e)),
                            }
                        }
                        _ => (random_v.clone(), 0),
                    };
                    let r = match scheme {
                        Scheme::JointBf | Scheme::TransmitOnly => mrt_covariance(&v, &ch, ctx.p0)?,
                        _ => TransmitCovariance::isotropic(cfg.m_t, ctx.p0)?,
                    };
                    evaluate_design(ctx, arch, &r, &v, &ch, len)
                }
                Objective::Crb => {
                    let (r, v, len) = match scheme {
                        Scheme::JointBf => {
                            let res = minimize_crb(arch, &ch, &ctx.spec, ctx.p0, &opts)?;
                            (res.r.expect("joint design returns R"), res.v, res.objective_trace.len())
                        }
                        Scheme::ReflectiveOnly => {
                            let res = reflective_only_crb(arch, &ch, &ctx.spec, ctx.p0, &opts)?;
                            (res.r.expect("reflective design returns R"), res.v, res.objective_trace.len())
                        }
                        Scheme::TransmitOnly => {
                            let r = transmit_only_design(arch, &ch, &random_v, DesignObjective::Crb, ctx.p0, &opts)?;
                            (r, random_v.clone(), 0)
                        }
                        Scheme::NoOptimization => (TransmitCovariance::isotropic(cfg.m_t, ctx.p0)?, random_v.clone(), 0),
                    };
                    evaluate_design(ctx, arch, &r, &v, &ch, len)
                }
            })();
            let ms = if cfg.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            match outcome {
                Ok((vals, len)) => {
                    for (m, x) in vals {
                        let status = if x.is_infinite() { RowStatus::Unbounded } else { RowStatus::Ok };
                        rows.push(row_from(cell, seed, arch, scheme, m, x, len, ms, status));
                    }
                }
                Err(e) => push_failure(&mut rows, arch, scheme, &e),
            }
        }
    }
    rows
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Validation(s) => Error::Validation(s.clone()),
        Error::Unbounded(s) => Error::Unbounded(s.clone()),
        Error::Numerical(s) => Error::Numerical(s.clone()),
        Error::Io(io) => Error::Numerical(io.to_string()),
    }
}

/// Thread count from the config, else from [`THREADS_ENV`].
pub fn resolve_threads(cfg_threads: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = cfg_threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Validation(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs every `(channel, n, trial)` cell in parallel and aggregates.
///
/// Rows are sorted before aggregation, so the result does not depend on
/// the thread count or schedule.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ctx = Ctx { cfg: cfg.clone(), scen: cfg.scenario()?, spec: cfg.sensing_spec(), p0: cfg.p0() };
    let cells: Vec<Cell> = cfg
        .channels
        .iter()
        .flat_map(|&channel| {
            cfg.n_list.iter().flat_map(move |&n| (0..cfg.trials).map(move |trial| Cell { channel, n, trial }))
        })
        .collect();
    let work = || cells.par_iter().flat_map_iter(|c| run_cell(&ctx, c)).collect::<Vec<Row>>();
    let mut rows = match resolve_threads(cfg.threads)? {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    rows.sort_by(|a, b| {
        (a.n, a.trial, a.arch, &a.scheme, a.metric).cmp(&(b.n, b.trial, b.arch, &b.scheme, b.metric))
    });
    let aggregates = aggregate(&rows);
    Ok(SweepResult { config: cfg.clone(), rows, aggregates })
}
