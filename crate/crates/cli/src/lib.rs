//! Command-line front end for the continuous error-correction simulator.
//!
//! `cqec run` writes one fidelity curve, `cqec sweep` one curve per value of
//! a swept parameter, `cqec presets` lists the named parameter sets.

pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cqec::simulator::{
    run_ensemble_with_threads, EnsembleResult, Mode, Preset, SimConfig, SmeScheme, SweepParam,
};
use cqec::CodeName;

pub use config::{parse_config, serialize, ConfigFile, Overrides, VALID_KEYS};
pub use error::CliError;
pub use output::{curve_csv, Manifest, RunSummary, SweepSummary};

#[derive(Debug, Parser)]
#[command(
    name = "cqec",
    version,
    about = "Continuous quantum error correction with filtered feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one ensemble and write its fidelity curve.
    Run(RunArgs),
    /// Repeat a run for several values of one parameter.
    Sweep(SweepArgs),
    /// List the named parameter sets.
    Presets,
}

fn parse_via<T: std::str::FromStr<Err = cqec::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: cqec::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Start from a named parameter set (default: fig2).
    #[arg(long, value_parser = parse_via::<Preset>)]
    pub preset: Option<Preset>,
    /// Read key=value settings from a file; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_via::<CodeName>)]
    pub code: Option<CodeName>,
    /// Error rate per channel.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Measurement strength.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Feedback strength.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Exponential filter rate r.
    #[arg(long)]
    pub filter_rate: Option<f64>,
    /// Filter window T.
    #[arg(long)]
    pub window: Option<f64>,
    /// Detection efficiency (sme mode).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_via::<Mode>)]
    pub mode: Option<Mode>,
    /// Apply feedback before the filter window has filled.
    #[arg(long)]
    pub early_feedback: bool,
    /// Dead band θ: a syndrome reads -1 only when R < -θ.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Store fidelity every this many steps.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Density-matrix update rule: kraus (positivity-preserving) or euler.
    #[arg(long, value_parser = parse_via::<SmeScheme>)]
    pub sme_scheme: Option<SmeScheme>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "cqec-out")]
    pub out: PathBuf,
}

impl SimArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset,
            code: self.code,
            gamma: self.gamma,
            kappa: self.kappa,
            lambda: self.lambda,
            filter_rate: self.filter_rate,
            window: self.window,
            eta: self.eta,
            dt: self.dt,
            t_final: self.t_final,
            trajectories: self.trajectories,
            seed: self.seed,
            mode: self.mode,
            early_feedback: self.early_feedback,
            threshold: self.threshold,
            stride: self.stride,
            sme_scheme: self.sme_scheme,
        }
    }

    pub fn resolve(&self) -> Result<(SimConfig, Option<Preset>), CliError> {
        parse_config(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Parameter to vary (default: the preset's own sweep).
    #[arg(long, value_parser = parse_via::<SweepParam>)]
    pub param: Option<SweepParam>,
    /// Comma-separated values for --param.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
}

/// Runs the parsed command, printing progress to stderr.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let summary = run(&args.sim)?;
            let p = &summary.final_point;
            eprintln!(
                "F(t={}) = {:.5} ± {:.5} over {} trajectories ({} aborted)",
                p.t, p.f_mean, p.f_stderr, summary.n_traj, summary.n_aborted
            );
            Ok(())
        }
        Command::Sweep(args) => {
            let summary = sweep(args)?;
            for p in &summary.points {
                eprintln!(
                    "{}={}: F(t={}) = {:.5} ± {:.5}",
                    summary.parameter,
                    p.value,
                    p.final_point.t,
                    p.final_point.f_mean,
                    p.final_point.f_stderr
                );
            }
            Ok(())
        }
        Command::Presets => {
            print!("{}", presets_listing());
            Ok(())
        }
    }
}

/// `cqec run`: writes `curve.csv`, `summary.json` and `config.cfg`.
pub fn run(args: &SimArgs) -> Result<RunSummary, CliError> {
    let (cfg, preset) = args.resolve()?;
    let result = run_ensemble_with_threads(&cfg, args.threads)?;
    let out = &args.out;
    output::create_dir(out)?;
    let curve = out.join("curve.csv");
    let config = out.join("config.cfg");
    let summary_path = out.join("summary.json");
    output::write_text(&curve, &curve_csv(&result))?;
    output::write_text(&config, &serialize(&cfg))?;
    let mut manifest = Manifest::new(&cfg, preset.map(|p| p.to_string()), args.threads);
    manifest.outputs = vec![curve, config, summary_path.clone()];
    let summary = RunSummary::new(manifest, &result);
    output::write_json(&summary_path, &summary)?;
    Ok(summary)
}

fn sweep_plan(
    args: &SweepArgs,
    preset: Option<Preset>,
) -> Result<(SweepParam, Vec<f64>), CliError> {
    let default = preset.unwrap_or(Preset::Fig2).default_sweep();
    let param = match (args.param, &default) {
        (Some(p), _) => p,
        (None, Some((p, _))) => *p,
        (None, None) => {
            return Err(CliError::Config(
                "--param is required for this preset".into(),
            ))
        }
    };
    let values = match (&args.values[..], &default) {
        ([], Some((p, v))) if *p == param => v.clone(),
        ([], _) => {
            return Err(CliError::Config(format!(
                "--values is required when sweeping {param}"
            )))
        }
        (v, _) => v.to_vec(),
    };
    Ok((param, values))
}

fn curve_name(param: SweepParam, value: f64) -> String {
    format!("curve_{param}_{value:?}.csv")
}

/// `cqec sweep`: one `curve_<param>_<value>.csv` per value plus `sweep.csv`,
/// `summary.json` and `config.cfg` for the base configuration.
pub fn sweep(args: &SweepArgs) -> Result<SweepSummary, CliError> {
    let (base, preset) = args.sim.resolve()?;
    let (param, values) = sweep_plan(args, preset)?;
    let configs = values
        .iter()
        .map(|v| {
            let c = param.apply(&base, *v);
            c.validate().map(|_| c).map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let out = &args.sim.out;
    output::create_dir(out)?;
    let mut manifest = Manifest::new(&base, preset.map(|p| p.to_string()), args.sim.threads);
    let mut points = Vec::new();
    let mut table = String::from("value,t,f_mean,f_stderr\n");
    for (value, cfg) in values.iter().zip(&configs) {
        let result: EnsembleResult = run_ensemble_with_threads(cfg, args.sim.threads)?;
        let path = out.join(curve_name(param, *value));
        output::write_text(&path, &curve_csv(&result))?;
        let summary = RunSummary::new(manifest.clone(), &result);
        let f = &summary.final_point;
        table.push_str(&format!(
            "{value:?},{},{:?},{}\n",
            f.t, f.f_mean, f.f_stderr
        ));
        manifest.outputs.push(path.clone());
        points.push(output::SweepPoint {
            value: *value,
            curve: path,
            n_traj: summary.n_traj,
            n_aborted: summary.n_aborted,
            final_point: summary.final_point,
            jumps: summary.jumps,
        });
    }
    let table_path = out.join("sweep.csv");
    let config_path = out.join("config.cfg");
    let summary_path = out.join("summary.json");
    output::write_text(&table_path, &table)?;
    output::write_text(
        &config_path,
        &format!(
            "# sweep: --param {param} --values {}\n{}",
            values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(","),
            serialize(&base)
        ),
    )?;
    manifest
        .outputs
        .extend([table_path, config_path, summary_path.clone()]);
    let summary = SweepSummary {
        manifest,
        parameter: param.to_string(),
        common_random_numbers: true,
        points,
    };
    output::write_json(&summary_path, &summary)?;
    Ok(summary)
}

pub fn presets_listing() -> String {
    let mut s = String::new();
    for p in [Preset::Toy, Preset::Fig2, Preset::Fig3, Preset::Hardware] {
        let c = p.config();
        s.push_str(&format!(
            "{:<9} {}\n          code={} mode={} gamma={} kappa={} lambda={} filter-rate={} window={} \
             eta={} dt={} t-final={} trajectories={}\n",
            p.as_str(),
            p.description(),
            c.code,
            c.mode,
            c.gamma,
            c.kappa,
            c.lambda,
            c.filter_rate,
            c.window,
            c.eta,
            c.dt,
            c.t_final,
            c.n_traj
        ));
        if let Some((param, values)) = p.default_sweep() {
            let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("          sweep: {param} = {}\n", v.join(",")));
        }
    }
    s
}

/// Entry point shared by the binary and the tests: parses `argv`, executes,
/// and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Reads a curve CSV written by [`curve_csv`] into columns.
pub fn read_curve(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let row = line
            .split(',')
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("bad number \"{x}\"")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
