//! Command-line front end: experiment configuration, orchestration of the
//! library pipelines, CSV emission, and static SVG convergence plots.
//!
//! Six subcommands, one per experiment:
//!
//! * `represent-check`: Monte Carlo test of the integral representation on a
//!   probe grid.
//! * `static-conv`: random-feature MSE versus width, against the `C*/N`
//!   budget.
//! * `esn-equiv`: structural equivalence trials for the doubled
//!   shift-reservoir network.
//! * `esn-conv`: ESN error versus width under the logarithmic lag/radius
//!   schedule.
//! * `feedback-conv`: risk gap of the feedback network versus width, with
//!   the ESP event frequency and the mean-field defect.
//! * `constants`: the error-bound constants by quadrature.
//!
//! Each command reads an optional flat `key = value` file ([`config`]),
//! validates every field before computing, writes a CSV with a fixed column
//! schema into `--out`, and prints a run report echoing every effective
//! setting; the echo is a valid config file, so the report alone reproduces
//! the run. Reruns with the same config write byte-identical CSV. `--plot`
//! adds a log-log SVG with fitted slopes for the convergence sweeps;
//! `--dry-run` stops after validation.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical
//! non-convergence, 1 for I/O failures. `RANDRES_THREADS` caps the rayon
//! worker pool; with the same seed the tables are identical at any thread
//! count.

pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{RandresError, Result};
use crate::feedback::{esp_event_probability, risk_gap, s_n_estimate};
use crate::ranfeat::{cstar_uniform, mse_vs_n, InputLaw, MseVsNConfig, ReadoutKind, RidgeSpec};
use crate::repr::{build_repr, diagonal_grid};
use crate::reservoir::{esn_equivalence_trial, gaussian_esn_experiment, GaussianEsnConfig};
use crate::stats::RngStream;
use crate::targets::FourierTarget;
use config::{
    ConstantsConfig, EsnConvConfig, EsnEquivConfig, ExperimentSettings, FeedbackConvConfig,
    KvMap, RepresentCheckConfig, StaticConvConfig,
};
use output::{write_csv, write_loglog_svg, OutputGuard, PlotSeries, PlotSpec};
pub use output::RunReport;

/// Random feature networks and reservoir systems: sampled constructions and
/// their convergence experiments.
#[derive(Parser, Debug)]
#[command(name = "randres", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandName,

    /// Flat `key = value` config file; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config file's `seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Also write a log-log SVG plot (convergence commands only).
    #[arg(long, global = true)]
    pub plot: bool,

    /// Validate and echo the configuration, then stop.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

/// The six experiments.
#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandName {
    /// Monte Carlo check of the integral representation on a probe grid.
    RepresentCheck,
    /// Random-feature mean squared error versus width (static target).
    StaticConv,
    /// Structural equivalence trials for the doubled shift-reservoir ESN.
    EsnEquiv,
    /// ESN error versus width under the logarithmic lag/radius schedule.
    EsnConv,
    /// Output-feedback risk gap, ESP frequency and mean-field defect.
    FeedbackConv,
    /// Error-bound constants for a static target, by quadrature.
    Constants,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::RepresentCheck => "represent-check",
            CommandName::StaticConv => "static-conv",
            CommandName::EsnEquiv => "esn-equiv",
            CommandName::EsnConv => "esn-conv",
            CommandName::FeedbackConv => "feedback-conv",
            CommandName::Constants => "constants",
        }
    }
}

/// Pinned CSV headers; column names and order are part of the interface.
pub const REPRESENT_CHECK_HEADER: &str =
    "v_index,v_norm,estimate,stderr,f_true,abs_err,within_4se";
pub const STATIC_CONV_HEADER: &str =
    "N,readout_kind,mse_mean,mse_lo,mse_hi,cstar_over_N,truncation_bound,seed_count";
pub const ESN_EQUIV_HEADER: &str =
    "trial,d,t_horizon,n_features,max_state_dev,max_output_dev,esp_exact";
pub const ESN_CONV_HEADER: &str =
    "N,T,R,rmse_mean,rmse_lo,rmse_hi,bound_pN_over_Ngamma,gamma";
pub const FEEDBACK_CONV_HEADER: &str =
    "N,gap_median,gap_lo,gap_hi,bound_delta_half,esp_prob,s_n";
pub const CONSTANTS_HEADER: &str = "name,value";

/// A validated command plus its settings; [`ExperimentConfig::execute`]
/// produces the CSV table.
#[derive(Clone, Debug)]
pub enum ExperimentConfig {
    RepresentCheck(RepresentCheckConfig),
    StaticConv(StaticConvConfig),
    EsnEquiv(EsnEquivConfig),
    EsnConv(EsnConvConfig),
    FeedbackConv(FeedbackConvConfig),
    Constants(ConstantsConfig),
}

/// A finished experiment: the CSV table plus an optional chart description.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub header: &'static str,
    pub rows: Vec<String>,
    pub plot: Option<PlotSpec>,
}

impl ExperimentConfig {
    /// Interprets parsed config text for the chosen command, applying
    /// defaults and validating every field. `seed_flag` is `--seed`.
    pub fn from_kv(command: CommandName, kv: &KvMap, seed_flag: Option<u64>) -> Result<Self> {
        Ok(match command {
            CommandName::RepresentCheck => {
                ExperimentConfig::RepresentCheck(RepresentCheckConfig::from_kv(kv, seed_flag)?)
            }
            CommandName::StaticConv => {
                ExperimentConfig::StaticConv(StaticConvConfig::from_kv(kv, seed_flag)?)
            }
            CommandName::EsnEquiv => {
                ExperimentConfig::EsnEquiv(EsnEquivConfig::from_kv(kv, seed_flag)?)
            }
            CommandName::EsnConv => {
                ExperimentConfig::EsnConv(EsnConvConfig::from_kv(kv, seed_flag)?)
            }
            CommandName::FeedbackConv => {
                ExperimentConfig::FeedbackConv(FeedbackConvConfig::from_kv(kv, seed_flag)?)
            }
            CommandName::Constants => {
                ExperimentConfig::Constants(ConstantsConfig::from_kv(kv, seed_flag)?)
            }
        })
    }

    pub fn command_name(&self) -> &'static str {
        match self {
            ExperimentConfig::RepresentCheck(_) => CommandName::RepresentCheck.as_str(),
            ExperimentConfig::StaticConv(_) => CommandName::StaticConv.as_str(),
            ExperimentConfig::EsnEquiv(_) => CommandName::EsnEquiv.as_str(),
            ExperimentConfig::EsnConv(_) => CommandName::EsnConv.as_str(),
            ExperimentConfig::FeedbackConv(_) => CommandName::FeedbackConv.as_str(),
            ExperimentConfig::Constants(_) => CommandName::Constants.as_str(),
        }
    }

    pub fn echo(&self) -> Vec<(&'static str, String)> {
        match self {
            ExperimentConfig::RepresentCheck(c) => c.echo(),
            ExperimentConfig::StaticConv(c) => c.echo(),
            ExperimentConfig::EsnEquiv(c) => c.echo(),
            ExperimentConfig::EsnConv(c) => c.echo(),
            ExperimentConfig::FeedbackConv(c) => c.echo(),
            ExperimentConfig::Constants(c) => c.echo(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::RepresentCheck(c) => c.seed(),
            ExperimentConfig::StaticConv(c) => c.seed(),
            ExperimentConfig::EsnEquiv(c) => c.seed(),
            ExperimentConfig::EsnConv(c) => c.seed(),
            ExperimentConfig::FeedbackConv(c) => c.seed(),
            ExperimentConfig::Constants(c) => c.seed(),
        }
    }

    /// Runs the experiment and formats the CSV rows.
    pub fn execute(&self) -> Result<CommandOutput> {
        match self {
            ExperimentConfig::RepresentCheck(c) => run_represent_check(c),
            ExperimentConfig::StaticConv(c) => run_static_conv(c),
            ExperimentConfig::EsnEquiv(c) => run_esn_equiv(c),
            ExperimentConfig::EsnConv(c) => run_esn_conv(c),
            ExperimentConfig::FeedbackConv(c) => run_feedback_conv(c),
            ExperimentConfig::Constants(c) => run_constants(c),
        }
    }
}

fn run_represent_check(cfg: &RepresentCheckConfig) -> Result<CommandOutput> {
    let target = FourierTarget::gaussian_bump(cfg.q, cfg.m)?;
    let density = build_repr(&target, cfg.r_support)?;
    let grid = diagonal_grid(cfg.q, cfg.m, cfg.grid_points);
    let root = RngStream::new(cfg.seed, 21);
    let mut rows = Vec::with_capacity(grid.len());
    for (i, v) in grid.iter().enumerate() {
        let mut stream = root.child(i as u64);
        let est = density.check_representation(v, cfg.n_samples, &mut stream)?;
        let f_true = target.eval_f(v);
        let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let abs_err = (est.mean - f_true).abs();
        rows.push(format!(
            "{i},{v_norm},{},{},{f_true},{abs_err},{}",
            est.mean,
            est.stderr,
            abs_err <= 4.0 * est.stderr
        ));
    }
    Ok(CommandOutput { header: REPRESENT_CHECK_HEADER, rows, plot: None })
}

fn run_static_conv(cfg: &StaticConvConfig) -> Result<CommandOutput> {
    let target = FourierTarget::gaussian_bump(cfg.q, cfg.m)?;
    let ridge = if cfg.readout == "oracle" {
        None
    } else {
        Some(RidgeSpec { n_train: cfg.ridge_train, lambda: cfg.ridge_lambda })
    };
    let table = mse_vs_n(&MseVsNConfig {
        target,
        r_support: cfg.r_support,
        n_grid: cfg.n_grid.clone(),
        input_law: InputLaw::UniformCube,
        n_test: cfg.n_test,
        n_seeds: cfg.n_seeds,
        ridge,
        seed: cfg.seed,
    })?;
    let keep = |kind: ReadoutKind| match cfg.readout.as_str() {
        "oracle" => kind == ReadoutKind::Oracle,
        "ridge" => kind == ReadoutKind::Ridge,
        _ => true,
    };
    let mut rows = Vec::new();
    let mut series: Vec<PlotSeries> = Vec::new();
    let mut budget = PlotSeries { label: "cstar_over_N".into(), points: Vec::new() };
    for row in table.iter().filter(|r| keep(r.readout)) {
        rows.push(format!(
            "{},{},{},{},{},{},{},{}",
            row.n_features,
            row.readout.as_str(),
            row.mse.mean,
            row.mse.lo,
            row.mse.hi,
            row.cstar_over_n,
            row.truncation_bound,
            row.seed_count
        ));
        let n = row.n_features as f64;
        match series.iter_mut().find(|s| s.label == row.readout.as_str()) {
            Some(s) => s.points.push((n, row.mse.mean)),
            None => series.push(PlotSeries {
                label: row.readout.as_str().into(),
                points: vec![(n, row.mse.mean)],
            }),
        }
        if !budget.points.iter().any(|p| p.0 == n) {
            budget.points.push((n, row.cstar_over_n));
        }
    }
    series.push(budget);
    let plot = Some(PlotSpec {
        title: "static-conv: mean squared error vs width".into(),
        x_label: "N".into(),
        y_label: "MSE".into(),
        series,
    });
    Ok(CommandOutput { header: STATIC_CONV_HEADER, rows, plot })
}

fn run_esn_equiv(cfg: &EsnEquivConfig) -> Result<CommandOutput> {
    let root = RngStream::new(cfg.seed, 22);
    let mut rows = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let t = cfg.t_list[trial % cfg.t_list.len()];
        let n = cfg.n_list[(trial / cfg.t_list.len()) % cfg.n_list.len()];
        let mut stream = root.child(trial as u64);
        let row = esn_equivalence_trial(cfg.d, t, n, cfg.r_support, cfg.m, &mut stream)?;
        rows.push(format!(
            "{trial},{},{},{},{},{},{}",
            row.d, row.t_lags, row.n_features, row.max_state_dev, row.max_output_dev,
            row.esp_exact
        ));
    }
    Ok(CommandOutput { header: ESN_EQUIV_HEADER, rows, plot: None })
}

fn run_esn_conv(cfg: &EsnConvConfig) -> Result<CommandOutput> {
    let table = gaussian_esn_experiment(&GaussianEsnConfig {
        lambda: cfg.lambda,
        alpha: cfg.alpha,
        beta: cfg.beta,
        n_grid: cfg.n_grid.clone(),
        n_test: cfg.n_test,
        n_seeds: cfg.n_seeds,
        m_input: cfg.m,
        seed: cfg.seed,
    })?;
    let mut rows = Vec::with_capacity(table.len());
    let mut rmse = PlotSeries { label: "rmse_mean".into(), points: Vec::new() };
    let mut bound = PlotSeries { label: "bound".into(), points: Vec::new() };
    for row in &table {
        rows.push(format!(
            "{},{},{},{},{},{},{},{}",
            row.n_features,
            row.t_lags,
            row.r_support,
            row.rmse.mean,
            row.rmse.lo,
            row.rmse.hi,
            row.bound,
            row.gamma
        ));
        rmse.points.push((row.n_features as f64, row.rmse.mean));
        bound.points.push((row.n_features as f64, row.bound));
    }
    let plot = Some(PlotSpec {
        title: "esn-conv: RMSE vs width".into(),
        x_label: "N".into(),
        y_label: "RMSE".into(),
        series: vec![rmse, bound],
    });
    Ok(CommandOutput { header: ESN_CONV_HEADER, rows, plot })
}

fn run_feedback_conv(cfg: &FeedbackConvConfig) -> Result<CommandOutput> {
    let target = cfg.target()?;
    let spec = cfg.risk_spec();
    let mut gap_stream = RngStream::new(cfg.seed, 31);
    let table = risk_gap(&target, &spec, &cfg.n_grid, cfg.n_mc, cfg.n_seeds, &mut gap_stream)?;
    let mut esp_stream = RngStream::new(cfg.seed, 32);
    let esp = esp_event_probability(
        &target,
        cfg.esp_width,
        spec.t_horizon,
        cfg.esp_trials,
        cfg.esp_grid,
        &mut esp_stream,
    )?;
    let mut sn_stream = RngStream::new(cfg.seed, 33);
    let s_n =
        s_n_estimate(&target, spec.t_horizon, cfg.s_n_grid, cfg.s_n_trunc, &mut sn_stream)?;
    let mut rows = Vec::with_capacity(table.len());
    let mut gap = PlotSeries { label: "gap_median".into(), points: Vec::new() };
    let mut bound = PlotSeries { label: "bound".into(), points: Vec::new() };
    for row in &table {
        rows.push(format!(
            "{},{},{},{},{},{esp},{s_n}",
            row.n_blocks, row.gap.median, row.gap.lo, row.gap.hi, row.bound
        ));
        gap.points.push((row.n_blocks as f64, row.gap.median));
        bound.points.push((row.n_blocks as f64, row.bound));
    }
    let plot = Some(PlotSpec {
        title: "feedback-conv: risk gap vs width".into(),
        x_label: "N".into(),
        y_label: "risk gap".into(),
        series: vec![gap, bound],
    });
    Ok(CommandOutput { header: FEEDBACK_CONV_HEADER, rows, plot })
}

fn run_constants(cfg: &ConstantsConfig) -> Result<CommandOutput> {
    let target = FourierTarget::gaussian_bump(cfg.q, cfg.m)?;
    let cstar = cstar_uniform(&target, cfg.m, cfg.r_support, cfg.q)?;
    let moments = target.moments();
    let bracket = moments.truncation_l2(cfg.r_support)?;
    let tail = moments.tail_mass(cfg.r_support)?;
    let c_g = moments.c_g_star()?;
    let predicted = (cstar / cfg.n_at as f64).sqrt();
    let rows = vec![
        format!("cstar_uniform,{cstar}"),
        format!("c_g_r,{bracket}"),
        format!("c_g_star,{c_g}"),
        format!("tail_mass,{tail}"),
        format!("predicted_rmse,{predicted}"),
    ];
    Ok(CommandOutput { header: CONSTANTS_HEADER, rows, plot: None })
}

/// Applies `RANDRES_THREADS` to the global rayon pool. Call once at startup,
/// before any parallel work; returns the applied cap, `None` when unset.
pub fn init_threads() -> Result<Option<usize>> {
    let raw = match std::env::var("RANDRES_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => {
            return Err(RandresError::Config(
                "RANDRES_THREADS is not valid UTF-8".into(),
            ))
        }
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        RandresError::Config(format!(
            "RANDRES_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    if n == 0 {
        return Err(RandresError::Config("RANDRES_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RandresError::Config(format!("cannot size the thread pool: {e}")))?;
    Ok(Some(n))
}

/// Parses the config, runs the selected experiment and writes its artifacts
/// into `--out`: `<command>.csv`, optionally `<command>.svg`, and
/// `<command>.report.txt`. On failure every partially written file is
/// removed. With `--dry-run` the returned report only echoes the validated
/// configuration and nothing touches the filesystem.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let start = Instant::now();
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| {
            RandresError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?,
        None => String::new(),
    };
    let kv = KvMap::parse(&text)?;
    let cfg = ExperimentConfig::from_kv(cli.command, &kv, cli.seed)?;
    let mut report = RunReport {
        command: cfg.command_name(),
        version: format!("randres {}", env!("CARGO_PKG_VERSION")),
        seed: cfg.seed(),
        config: cfg.echo(),
        dry_run: cli.dry_run,
        rows: 0,
        csv: None,
        svg: None,
        report_path: None,
        table: Vec::new(),
        wall: start.elapsed(),
    };
    if cli.dry_run {
        return Ok(report);
    }

    let out = cfg.execute()?;
    fs::create_dir_all(&cli.out).map_err(|e| {
        RandresError::Config(format!("cannot create `{}`: {e}", cli.out.display()))
    })?;
    let mut guard = OutputGuard::new();

    let csv_path = cli.out.join(format!("{}.csv", report.command));
    let mut table = Vec::with_capacity(out.rows.len() + 1);
    table.push(out.header.to_string());
    table.extend(out.rows.iter().cloned());
    guard.track(&csv_path);
    write_csv(&csv_path, &table)?;
    report.rows = out.rows.len();
    report.table = table;
    report.csv = Some(csv_path);

    if cli.plot {
        if let Some(plot) = &out.plot {
            let svg_path = cli.out.join(format!("{}.svg", report.command));
            guard.track(&svg_path);
            write_loglog_svg(&svg_path, plot)?;
            report.svg = Some(svg_path);
        }
    }

    let report_path = cli.out.join(format!("{}.report.txt", report.command));
    report.report_path = Some(report_path.clone());
    report.wall = start.elapsed();
    guard.track(&report_path);
    fs::write(&report_path, report.render())?;
    guard.disarm();
    Ok(report)
}
