//! `fbm-delay`: simulate fBm over a common driving path, compute delayed
//! integrals and run the verification experiments.
//!
//! Every run writes its table plus `<out>.manifest.json`; `--manifest` replays
//! a run and checks the regenerated files against the recorded digests.

mod manifest;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fbm_delay::harness::{self, report};
use fbm_delay::integrator::projected_integral;
use fbm_delay::process::{dr_path, r_path, synthesize_brownian, synthesize_fbm, w_path, ProcessKind};
use fbm_delay::{
    delayed_integral_xd, Ensemble, HurstParameter, IntegrandSpec, MvnScheme, NoisePath, PathContext, SegmentGrid,
    SimulationGrid,
};

use manifest::Manifest;

pub const OUT_DIR_ENV: &str = "FBM_DELAY_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "fbm-delay", version, about = "Delayed integrals against fractional Brownian motion")]
struct Cli {
    /// Replay the run recorded in this manifest
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,

    /// With --manifest: write the replayed output here instead of the recorded path
    #[arg(long, value_name = "PATH", requires = "manifest")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Grid, seed and output flags shared by every command.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Horizon T
    #[arg(long = "t", default_value_t = 1.0)]
    pub t: f64,
    /// Fine cells on [0, T]; a power of two >= 64
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,
    /// Warm-up length L of the truncated history [-L, 0]
    #[arg(long, default_value_t = 8.0)]
    pub warmup: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: <command>.<ext> in $FBM_DELAY_OUT_DIR or the working directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Write one path of B, B_H, W_H, R_H or DR_H as CSV
    Simulate {
        #[arg(long, default_value_t = 0.75)]
        hurst: f64,
        /// B, B_H, W_H, R_H or DR_H
        #[arg(long, default_value = "B_H")]
        kind: String,
        /// Segment start for W_H, R_H, DR_H
        #[arg(long, default_value_t = 0.0)]
        seg_start: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Delayed integral of one integrand on one path, as JSON
    Integrate {
        #[arg(long)]
        integrand: String,
        #[arg(long, default_value_t = 0.75)]
        hurst: f64,
        /// Dyadic projection level for integrands outside the piecewise-predictable class
        #[arg(long)]
        level: Option<u32>,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Monte Carlo checks of the DR_H moments and the fBm law
    VerifyMoments {
        #[arg(long, value_delimiter = ',', default_value = "0.55,0.75,0.9")]
        hurst: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        span: f64,
        /// Second time of the covariance check
        #[arg(long, default_value_t = 0.5)]
        cov_at: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Common-noise gaps E|I_H(γ) - I_1/2(γ)| as H decreases to 1/2
    Continuity {
        #[arg(long)]
        integrand: String,
        #[arg(long, value_delimiter = ',', default_value = "0.7,0.6,0.55,0.51")]
        hurst_list: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Dyadic level for integrands outside the piecewise-predictable class
        #[arg(long)]
        level: Option<u32>,
        /// Final gap must be below tol times the X-norm of the integrand
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// E∫B_H dB_H - E∫B dB for H decreasing to 1/2
    Nonconv {
        #[arg(long, value_delimiter = ',', default_value = "0.75,0.6,0.51")]
        hurst_list: Vec<f64>,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        /// Riemann steps (default: --steps)
        #[arg(long)]
        riemann_steps: Option<usize>,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Log2 slope of the dyadic extension gaps
    Decay {
        #[arg(long, default_value = "bm")]
        integrand: String,
        #[arg(long, default_value_t = 0.75)]
        hurst: f64,
        #[arg(long, default_value_t = 6)]
        level_min: u32,
        /// Default: log2(steps) - 1
        #[arg(long)]
        level_max: Option<u32>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Defect of 2∫(B_H - B_H(0))dB_H = B_H(T)² along refining Riemann sums
    Shiryaev {
        #[arg(long, default_value_t = 0.75)]
        hurst: f64,
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum Failure {
    /// bad flags: exit 2
    Usage(String),
    /// the run itself failed: exit 1
    Run(String),
}

impl From<fbm_delay::Error> for Failure {
    fn from(e: fbm_delay::Error) -> Self {
        match e {
            fbm_delay::Error::Io(m) => Failure::Run(m),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Integrate { .. } => "integrate",
            Command::VerifyMoments { .. } => "verify-moments",
            Command::Continuity { .. } => "continuity",
            Command::Nonconv { .. } => "nonconv",
            Command::Decay { .. } => "decay",
            Command::Shiryaev { .. } => "shiryaev",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Integrate { common, .. }
            | Command::VerifyMoments { common, .. }
            | Command::Continuity { common, .. }
            | Command::Nonconv { common, .. }
            | Command::Decay { common, .. }
            | Command::Shiryaev { common, .. } => common,
        }
    }

    fn common_mut(&mut self) -> &mut Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Integrate { common, .. }
            | Command::VerifyMoments { common, .. }
            | Command::Continuity { common, .. }
            | Command::Nonconv { common, .. }
            | Command::Decay { common, .. }
            | Command::Shiryaev { common, .. } => common,
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            Command::Integrate { .. } => "json",
            _ => "csv",
        }
    }

    /// Fills in the default output path so the manifest records where it went.
    fn resolve_out(&mut self) {
        let file = format!("{}.{}", self.name(), self.extension());
        let c = self.common_mut();
        if c.out.is_none() {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
            c.out = Some(dir.join(file));
        }
    }

    fn validate(&self) -> Outcome<()> {
        let c = self.common();
        if c.steps < 64 || !c.steps.is_power_of_two() {
            return Err(Failure::Usage(format!(
                "--steps must be a power of two >= 64, got {} (try {})",
                c.steps,
                c.steps.max(64).next_power_of_two()
            )));
        }
        if !(c.t > 0.0 && c.t.is_finite()) {
            return Err(Failure::Usage(format!("--t must be positive, got {}", c.t)));
        }
        let reps = match self {
            Command::VerifyMoments { reps, .. }
            | Command::Continuity { reps, .. }
            | Command::Nonconv { reps, .. }
            | Command::Decay { reps, .. }
            | Command::Shiryaev { reps, .. } => Some(*reps),
            _ => None,
        };
        if let Some(r) = reps {
            if r < 2 {
                return Err(Failure::Usage(format!("--reps must be at least 2, got {r}")));
            }
        }
        let hursts: Vec<f64> = match self {
            Command::Simulate { hurst, .. }
            | Command::Integrate { hurst, .. }
            | Command::Decay { hurst, .. }
            | Command::Shiryaev { hurst, .. } => vec![*hurst],
            Command::VerifyMoments { hurst, .. } => hurst.clone(),
            Command::Continuity { hurst_list, .. } | Command::Nonconv { hurst_list, .. } => hurst_list.clone(),
        };
        for h in hursts {
            HurstParameter::new(h).map_err(|_| {
                Failure::Usage(format!("invalid Hurst index {h}: must lie in [0.5, 1), e.g. --hurst 0.75"))
            })?;
        }
        if let Command::Integrate { integrand, .. } | Command::Continuity { integrand, .. } | Command::Decay { integrand, .. } =
            self
        {
            integrand.parse::<IntegrandSpec>()?;
        }
        if let Command::Simulate { kind, .. } = self {
            kind.parse::<ProcessKind>()?;
        }
        Ok(())
    }

    fn grid(&self) -> Outcome<SimulationGrid> {
        let c = self.common();
        Ok(SimulationGrid::new(c.t, c.steps, c.warmup)?)
    }

    /// Runs the command and writes its output file; returns a line for stdout.
    fn run(&self) -> Outcome<String> {
        let grid = self.grid()?;
        let c = self.common();
        let out = c.out.as_deref().expect("output path resolved before running");
        let max_level = c.steps.trailing_zeros() - 1;
        match self {
            Command::Simulate { hurst, kind, seg_start, .. } => {
                let hp = HurstParameter::new(*hurst)?;
                let noise = NoisePath::generate(c.seed, &grid);
                let path = match kind.parse::<ProcessKind>()? {
                    ProcessKind::Brownian => synthesize_brownian(&noise),
                    ProcessKind::Fbm => synthesize_fbm(&noise, &hp)?,
                    ProcessKind::W => w_path(&noise, &hp, *seg_start)?,
                    ProcessKind::R => r_path(&noise, &hp, *seg_start)?,
                    ProcessKind::Dr => dr_path(&noise, &hp, *seg_start)?,
                };
                path.write_csv(create(out)?)?;
                Ok(format!("wrote {} points of {} to {}", path.values.len(), path.kind.label(), out.display()))
            }
            Command::Integrate { integrand, hurst, level, .. } => {
                let hp = HurstParameter::new(*hurst)?;
                let spec: IntegrandSpec = integrand.parse()?;
                let gamma = spec.build(c.t, &hp)?;
                let noise = NoisePath::generate(c.seed, &grid);
                let scheme = MvnScheme::shared(hp, &grid)?;
                let (result, used_level) = if gamma.is_deterministic() || matches!(spec, IntegrandSpec::Frozen(..)) {
                    let segs = match &spec {
                        IntegrandSpec::Frozen(_, n) => SegmentGrid::uniform(*n, &grid)?,
                        _ => SegmentGrid::single(&grid)?,
                    };
                    (delayed_integral_xd(gamma.as_ref(), &segs, &noise, &hp)?, None)
                } else {
                    let n = level.unwrap_or(max_level);
                    let real = scheme.realize(&noise);
                    (projected_integral(gamma.as_ref(), n, &real, &PathContext::new(&noise))?, Some(n))
                };
                let path = scheme.realize(&noise).fbm_path();
                let record = IntegrateRecord {
                    integrand: spec,
                    hurst: hp.h(),
                    seed: c.seed,
                    level: used_level,
                    value: result.value,
                    ito_part: result.ito_part,
                    tail_part: result.tail_part,
                    cross_part: result.cross_part,
                    truncation_budget: result.truncation_budget,
                    segments: result.grid.times(),
                    fbm_increment: path[path.len() - 1] - path[0],
                };
                let text = serde_json::to_string_pretty(&record)?;
                std::fs::write(out, format!("{text}\n"))?;
                Ok(text)
            }
            Command::VerifyMoments { hurst, span, cov_at, reps, .. } => {
                let ens = Ensemble::new(grid, c.seed, *reps);
                let mut dr = Vec::new();
                let mut law = Vec::new();
                for &h in hurst {
                    let hp = HurstParameter::new(h)?;
                    dr.push(harness::verify_dr_moments(&hp, *span, &ens)?);
                    law.push(harness::verify_fbm_law(&hp, *span, *cov_at, &ens)?);
                }
                let mut rows = Vec::new();
                for (d, l) in dr.iter().zip(&law) {
                    rows.extend([&d.pointwise, &d.energy, &l.variance, &l.covariance, &l.w_variance]);
                }
                report::write_moment_checks(create(out)?, &rows)?;
                let failed = rows.iter().filter(|r| !r.pass).count();
                Ok(format!("{} checks, {} outside 3 SE + budget; table in {}", rows.len(), failed, out.display()))
            }
            Command::Continuity { integrand, hurst_list, reps, level, tol, .. } => {
                let spec: IntegrandSpec = integrand.parse()?;
                let ens = Ensemble::new(grid, c.seed, *reps);
                let curve = harness::continuity_study(&spec, hurst_list, &ens, level.unwrap_or(max_level), *tol)?;
                report::write_continuity(create(out)?, &curve)?;
                Ok(format!(
                    "decreasing={} final_gap={} threshold={} common_noise={}; table in {}",
                    curve.decreasing,
                    curve.gaps.last().unwrap().estimate,
                    curve.threshold(),
                    curve.common_noise,
                    out.display()
                ))
            }
            Command::Nonconv { hurst_list, reps, riemann_steps, .. } => {
                let ens = Ensemble::new(grid, c.seed, *reps);
                let rep = harness::nonconvergence_demo(hurst_list, riemann_steps.unwrap_or(c.steps), &ens)?;
                report::write_nonconvergence(create(out)?, &rep)?;
                let gaps: Vec<String> = rep.rows.iter().map(|r| format!("H={}: {:.4}", r.hurst, r.gap.estimate)).collect();
                Ok(format!("gaps {}; table in {}", gaps.join(", "), out.display()))
            }
            Command::Decay { integrand, hurst, level_min, level_max, reps, .. } => {
                let spec: IntegrandSpec = integrand.parse()?;
                let hp = HurstParameter::new(*hurst)?;
                let top = level_max.unwrap_or(max_level);
                let levels: Vec<u32> = (*level_min..=top).collect();
                let ens = Ensemble::new(grid, c.seed, *reps);
                let fit = harness::cauchy_decay_study(&spec, &hp, &levels, &ens)?;
                report::write_decay(create(out)?, &fit)?;
                Ok(match (fit.slope, fit.slope_se) {
                    (Some(s), Some(se)) => format!(
                        "slope {s:.4} ± {:.4} (target {}); table in {}",
                        2.0 * se,
                        fit.target.map_or("n/a".into(), |t| format!("{t:.4}")),
                        out.display()
                    ),
                    _ => format!("gaps at the quadrature floor, slope fit skipped; table in {}", out.display()),
                })
            }
            Command::Shiryaev { hurst, n_list, reps, .. } => {
                let hp = HurstParameter::new(*hurst)?;
                let ens = Ensemble::new(grid, c.seed, *reps);
                let rep = harness::shiryaev_identity_check(&hp, n_list, &ens)?;
                report::write_shiryaev(create(out)?, &rep)?;
                Ok(format!("monotone={}; table in {}", rep.monotone, out.display()))
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct IntegrateRecord {
    integrand: IntegrandSpec,
    hurst: f64,
    seed: u64,
    level: Option<u32>,
    value: f64,
    ito_part: f64,
    tail_part: f64,
    cross_part: f64,
    truncation_budget: f64,
    segments: Vec<f64>,
    /// B_H(T) - B_H(0) on the same noise
    fbm_increment: f64,
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(mut cmd: Command) -> Outcome<(String, Manifest)> {
    cmd.resolve_out();
    cmd.validate()?;
    let msg = cmd.run()?;
    let m = Manifest::record(cmd)?;
    m.write()?;
    Ok((msg, m))
}

fn dispatch(cli: Cli) -> Outcome<String> {
    match (cli.manifest, cli.command) {
        (Some(_), Some(_)) => Err(Failure::Usage("--manifest replays a recorded run; drop the subcommand".into())),
        (None, None) => Err(Failure::Usage("no command given; run `fbm-delay --help`".into())),
        (None, Some(cmd)) => execute(cmd).map(|(msg, _)| msg),
        (Some(path), None) => {
            let recorded = Manifest::read(&path)?;
            let mut cmd = recorded.config.clone();
            if let Some(out) = cli.out {
                cmd.common_mut().out = Some(out);
            }
            let (msg, replayed) = execute(cmd)?;
            if replayed.sha256 != recorded.sha256 {
                return Err(Failure::Run(format!(
                    "replay of {} differs from the recorded output (sha256 {} vs {})",
                    path.display(),
                    replayed.sha256,
                    recorded.sha256
                )));
            }
            Ok(format!("{msg}\nreplay matches the recorded sha256 {}", recorded.sha256))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
