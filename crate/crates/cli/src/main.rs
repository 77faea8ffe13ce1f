use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use irs_sense::analysis::{crossover_threshold, gamma_bounds, sandwich, Gamma, ThresholdKind};
use irs_sense::beamforming::{maximize_snr, Backend, OptimizerOptions};
use irs_sense::channel::{gen_channel, path_loss, ArrayGeometry, ChannelKind, Link};
use irs_sense::experiments::{
    cell_seed, figure_config, reproduce_figure, run_sweep, write_outputs, FigureTag, Objective, Overrides, ScenarioConfig,
    SweepResult,
};
use irs_sense::metrics::{marcum_q1, mrt_covariance, snr, Architecture};
use irs_sense::{Error, Result};

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON scenario config; unspecified fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to IRS_SENSE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// sdr-sca, coordinate-ascent or auto.
    #[arg(long, global = true)]
    backend: Option<Backend>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sensing SNR versus N.
    SnrSweep,
    /// DoA CRB versus N.
    CrbSweep,
    /// Detection probability versus N.
    DetectCurve,
    /// Aligned <= optimized <= relaxation bound, per Rayleigh draw.
    BoundsCheck,
    /// Crossover thresholds for the configured geometry.
    Thresholds,
    /// Regenerate one of the reference figures.
    Reproduce {
        #[arg(long)]
        fig: FigureTag,
    },
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Parser, Debug)]
#[command(name = "irs-sense", version, about = "Fully-passive vs semi-passive IRS sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

fn overrides(c: &Common) -> Overrides {
    Overrides { trials: c.trials, seed: c.seed, threads: c.threads, backend: c.backend }
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default(),
    };
    overrides(c).apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(c: &Common) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn print_summary(res: &SweepResult) {
    println!("{:>6} {:>6} {:<28} {:<11} {:>12} {:>9} {:>6}", "n", "arch", "scheme", "metric", "mean_db", "std_db", "trials");
    for a in &res.aggregates {
        println!(
            "{:>6} {:>6} {:<28} {:<11} {:>12.4} {:>9.4} {:>6}",
            a.n,
            a.arch.label(),
            a.scheme,
            a.metric.label(),
            a.mean_db,
            a.std_db,
            a.trials
        );
    }
    let failed: usize = res.aggregates.iter().map(|a| a.failed).sum();
    if failed > 0 {
        println!("{failed} rows failed; see the CSV for their status");
    }
}

fn sweep(c: &Common, objective: Objective) -> Result<()> {
    let mut cfg = load_config(c)?;
    cfg.objective = objective;
    cfg.validate()?;
    let res = run_sweep(&cfg)?;
    let files = write_outputs(&res, &out_dir(c))?;
    print_summary(&res);
    for f in files.all() {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn thresholds(c: &Common) -> Result<()> {
    let cfg = load_config(c)?;
    let scen = cfg.scenario()?;
    let l = path_loss(scen.d_bi, &cfg.path_loss, Link::BsIrs)?;
    let los = crossover_threshold(ThresholdKind::LosSnr, l, cfg.m_t, cfg.m_r)?;
    let ray = crossover_threshold(ThresholdKind::RayleighSnr, l, cfg.m_t, cfg.m_r)?;
    println!("BS-IRS path gain L(d) = {l:.6e} (d = {:.4} m)", scen.d_bi);
    println!("LoS SNR threshold      N > {los:.1}  (first integer {})", los.floor() as usize + 1);
    println!("Rayleigh SNR threshold N > {ray:.1}  (first integer {})", ray.floor() as usize + 1);
    Ok(())
}

fn bounds_check(c: &Common) -> Result<()> {
    let mut cfg = load_config(c)?;
    if c.config.is_none() {
        cfg.n_list = vec![32];
        if c.trials.is_none() {
            cfg.trials = 200;
        }
    }
    let scen = cfg.scenario()?;
    let mut violations = 0usize;
    for &n in &cfg.n_list {
        let geom = ArrayGeometry::new(cfg.m_t, cfg.m_r, n)?;
        for q in Gamma::ALL {
            let (mut s_al, mut s_opt, mut s_bd) = (0.0, 0.0, 0.0);
            for trial in 0..cfg.trials {
                let seed = cell_seed(cfg.master_seed, n, trial);
                let ch = gen_channel(ChannelKind::Rayleigh, &geom, &scen, &cfg.path_loss, cfg.rcs, seed)?;
                let s = sandwich(q, &ch, 1e-9, cfg.optimizer.inner_sdp_tol)?;
                if !s.holds(1e-9) {
                    violations += 1;
                }
                s_al += s.aligned;
                s_opt += s.optimized;
                s_bd += s.bound;
            }
            let k = cfg.trials as f64;
            let b = gamma_bounds(q, n, cfg.m_t, cfg.m_r)?;
            println!(
                "N={n} {q:?}: mean aligned {:.4e}  optimized {:.4e}  relaxation {:.4e}  closed-form [{:.4e}, {:.4e}]",
                s_al / k,
                s_opt / k,
                s_bd / k,
                b.lower,
                b.upper
            );
        }
    }
    if violations > 0 {
        return Err(Error::Numerical(format!("{violations} sandwich violations")));
    }
    println!("sandwich holds on every draw");
    Ok(())
}

fn reproduce(c: &Common, fig: FigureTag) -> Result<()> {
    if c.config.is_some() {
        return Err(Error::Validation("reproduce uses the built-in recipe; drop --config".into()));
    }
    let start = Instant::now();
    let out = reproduce_figure(fig, &out_dir(c), &overrides(c))?;
    print_summary(&out.result);
    for f in out.files.all() {
        println!("wrote {}", f.display());
    }
    println!("{fig} done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn check(name: &str, ok: bool, failures: &mut usize) {
    println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn selftest() -> Result<()> {
    let mut failures = 0;
    let cfg = ScenarioConfig::default();
    let scen = cfg.scenario()?;
    let l = path_loss(scen.d_bi, &cfg.path_loss, Link::BsIrs)?;
    check("path loss at sqrt(2) m", (l - 4.665e-4).abs() < 1e-6, &mut failures);
    check("Marcum Q1(0, b) = exp(-b^2/2)", (marcum_q1(0.0, 2.0) - (-2f64).exp()).abs() < 1e-12, &mut failures);
    let g2 = gamma_bounds(Gamma::Gamma2, 1, 7, 3)?;
    check("single-element bounds collapse", g2.lower == 7.0 && g2.upper == 7.0, &mut failures);
    let los = crossover_threshold(ThresholdKind::LosSnr, l, 4, 4)?;
    check("LoS threshold near 46.3", (los - 46.3).abs() < 0.05, &mut failures);
    let geom = ArrayGeometry::new(4, 4, 8)?;
    let ch = gen_channel(ChannelKind::LoS, &geom, &scen, &cfg.path_loss, 1.0, 1)?;
    let spec = cfg.sensing_spec();
    let opts = OptimizerOptions::default();
    let mut los_ok = true;
    for arch in Architecture::BOTH {
        let res = maximize_snr(arch, &ch, &opts)?;
        let got = snr(arch, &mrt_covariance(&res.v, &ch, cfg.p0())?, &res.v, &ch, &spec)?;
        let k = if arch == Architecture::FullyPassive { 2 } else { 1 };
        let want = cfg.p0() * ch.alpha.norm_sqr() * l.powi(k) * 16.0 * 8f64.powi(2 * k) / spec.sigma2;
        los_ok &= (got / want - 1.0).abs() < 1e-6;
    }
    check("LoS optimum matches closed form at N = 8", los_ok, &mut failures);
    let small = ScenarioConfig { n_list: vec![8, 12], trials: 2, threads: Some(1), ..ScenarioConfig::default() };
    let a = run_sweep(&small)?;
    let b = run_sweep(&ScenarioConfig { threads: Some(2), ..small })?;
    check("sweep independent of thread count", a.rows == b.rows, &mut failures);
    let recipes_ok = FigureTag::ALL.iter().all(|&t| figure_config(t).validate().is_ok());
    check("figure recipes validate", recipes_ok, &mut failures);
    if failures > 0 {
        return Err(Error::Numerical(format!("{failures} self-test checks failed")));
    }
    println!("selftest: all checks passed");
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Io(_) => 1,
        Error::Unbounded(_) | Error::Numerical(_) => 2,
    }
}

fn run(cmd: Command, common: &Common) -> Result<()> {
    match cmd {
        Command::SnrSweep => sweep(common, Objective::Snr),
        Command::CrbSweep => sweep(common, Objective::Crb),
        Command::DetectCurve => sweep(common, Objective::Detection),
        Command::BoundsCheck => bounds_check(common),
        Command::Thresholds => thresholds(common),
        Command::Reproduce { fig } => reproduce(common, fig),
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(parsed.command, &parsed.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
