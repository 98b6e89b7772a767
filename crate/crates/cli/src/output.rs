//! Curve CSV, summary JSON and reproduction config files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cqec::simulator::{analytic_f1, analytic_f3d, EnsembleResult, SimConfig};
use cqec::CodeName;
use serde::Serialize;

use crate::error::CliError;

/// Renders the mean fidelity curve with its analytic baselines.
///
/// `t` and the standard error use the shortest round-trip form; fidelities
/// always carry a decimal point.
pub fn curve_csv(result: &EnsembleResult) -> String {
    let gamma = result.config.gamma;
    let three_qubit = result.config.code == CodeName::Bitflip3;
    let mut out = String::from("t,f_mean,f_stderr,f1_analytic");
    if three_qubit {
        out.push_str(",f3d_analytic");
    }
    out.push('\n');
    for ((t, m), s) in result.times.iter().zip(&result.mean).zip(&result.stderr) {
        let _ = write!(out, "{t},{m:?},{s},{:?}", analytic_f1(gamma, *t));
        if three_qubit {
            let _ = write!(out, ",{:?}", analytic_f3d(gamma, *t));
        }
        out.push('\n');
    }
    out
}

/// Per-run provenance.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub timestamp_unix: u64,
    pub preset: Option<String>,
    pub threads: Option<usize>,
    pub config: SimConfig,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(config: &SimConfig, preset: Option<String>, threads: Option<usize>) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix,
            preset,
            threads,
            config: config.clone(),
            outputs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FinalPoint {
    pub t: f64,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub f1_analytic: f64,
    pub f3d_analytic: Option<f64>,
}

impl FinalPoint {
    pub fn of(result: &EnsembleResult) -> Self {
        let (f_mean, f_stderr) = result.final_fidelity();
        let t = *result.times.last().expect("non-empty curve");
        let gamma = result.config.gamma;
        Self {
            t,
            f_mean,
            f_stderr,
            f1_analytic: analytic_f1(gamma, t),
            f3d_analytic: (result.config.code == CodeName::Bitflip3)
                .then(|| analytic_f3d(gamma, t)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpStats {
    pub totals: Vec<u64>,
    pub mean_per_trajectory: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub n_traj: usize,
    pub n_aborted: usize,
    pub common_random_numbers: bool,
    #[serde(rename = "final")]
    pub final_point: FinalPoint,
    pub jumps: JumpStats,
}

impl RunSummary {
    pub fn new(manifest: Manifest, result: &EnsembleResult) -> Self {
        Self {
            manifest,
            n_traj: result.n_traj,
            n_aborted: result.n_aborted,
            common_random_numbers: result.common_random_numbers,
            final_point: FinalPoint::of(result),
            jumps: JumpStats {
                totals: result.jump_totals.clone(),
                mean_per_trajectory: result.mean_jumps(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub curve: PathBuf,
    pub n_traj: usize,
    pub n_aborted: usize,
    #[serde(rename = "final")]
    pub final_point: FinalPoint,
    pub jumps: JumpStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub manifest: Manifest,
    pub parameter: String,
    pub common_random_numbers: bool,
    pub points: Vec<SweepPoint>,
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    write_text(path, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cqec::simulator::{run_ensemble, Preset};

    fn tiny(code: CodeName) -> EnsembleResult {
        let cfg = SimConfig {
            code,
            t_final: 0.01,
            n_traj: 3,
            window: 0.005,
            ..Preset::Fig2.config()
        };
        run_ensemble(&cfg).unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = curve_csv(&tiny(CodeName::Bitflip3));
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("t,f_mean,f_stderr,f1_analytic,f3d_analytic")
        );
        assert_eq!(lines.next(), Some("0,1.0,0,1.0,1.0"));
        assert_eq!(csv.lines().count(), 1 + 11);

        let csv = curve_csv(&tiny(CodeName::Toy));
        assert!(csv.starts_with("t,f_mean,f_stderr,f1_analytic\n0,1.0,0,1.0\n"));
    }

    #[test]
    fn final_point_has_baselines() {
        let r = tiny(CodeName::Bitflip3);
        let p = FinalPoint::of(&r);
        assert_eq!(p.t, 0.01);
        assert!((p.f1_analytic - analytic_f1(0.1, 0.01)).abs() < 1e-15);
        assert!(p.f3d_analytic.is_some());
        assert!(FinalPoint::of(&tiny(CodeName::Toy)).f3d_analytic.is_none());
    }
}
