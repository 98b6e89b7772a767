//! Flat `key=value` configuration files and flag layering.
//!
//! Keys mirror the long flag names. Resolution order: preset (or the fig2
//! defaults), then file values, then command-line flags.

use std::path::Path;

use cqec::simulator::{Mode, Preset, SimConfig, SmeScheme};
use cqec::CodeName;

use crate::error::CliError;

/// Every key accepted in a configuration file.
pub const VALID_KEYS: [&str; 17] = [
    "preset",
    "code",
    "gamma",
    "kappa",
    "lambda",
    "filter-rate",
    "window",
    "eta",
    "dt",
    "t-final",
    "trajectories",
    "seed",
    "mode",
    "early-feedback",
    "threshold",
    "stride",
    "sme-scheme",
];

/// Command-line overrides; `None` leaves the value untouched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub code: Option<CodeName>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub filter_rate: Option<f64>,
    pub window: Option<f64>,
    pub eta: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub early_feedback: bool,
    pub threshold: Option<f64>,
    pub stride: Option<usize>,
    pub sme_scheme: Option<SmeScheme>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SimConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(
            code => code,
            gamma => gamma,
            kappa => kappa,
            lambda => lambda,
            filter_rate => filter_rate,
            window => window,
            eta => eta,
            dt => dt,
            t_final => t_final,
            trajectories => n_traj,
            seed => seed,
            mode => mode,
            threshold => threshold,
            stride => sample_stride,
            sme_scheme => sme_scheme,
        );
        if self.early_feedback {
            cfg.early_feedback = true;
        }
    }
}

/// Parsed `key=value` lines, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {}: expected key=value, got \"{line}\"",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !VALID_KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {}: unknown key \"{key}\" (valid keys: {})",
                    lineno + 1,
                    VALID_KEYS.join(", ")
                )));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn preset(&self) -> Result<Option<Preset>, CliError> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.parse::<Preset>().map_err(CliError::from))
            .transpose()
    }

    /// Applies every non-preset entry to `cfg`.
    pub fn apply(&self, cfg: &mut SimConfig) -> Result<(), CliError> {
        for (k, v) in &self.entries {
            set_key(cfg, k, v)?;
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("invalid value \"{v}\" for {key}")))
}

fn set_key(cfg: &mut SimConfig, key: &str, v: &str) -> Result<(), CliError> {
    match key {
        "preset" => {}
        "code" => cfg.code = v.parse()?,
        "gamma" => cfg.gamma = num(key, v)?,
        "kappa" => cfg.kappa = num(key, v)?,
        "lambda" => cfg.lambda = num(key, v)?,
        "filter-rate" => cfg.filter_rate = num(key, v)?,
        "window" => cfg.window = num(key, v)?,
        "eta" => cfg.eta = num(key, v)?,
        "dt" => cfg.dt = num(key, v)?,
        "t-final" => cfg.t_final = num(key, v)?,
        "trajectories" => cfg.n_traj = num(key, v)?,
        "seed" => cfg.seed = num(key, v)?,
        "mode" => cfg.mode = v.parse()?,
        "early-feedback" => cfg.early_feedback = num(key, v)?,
        "threshold" => cfg.threshold = num(key, v)?,
        "stride" => cfg.sample_stride = num(key, v)?,
        "sme-scheme" => cfg.sme_scheme = v.parse()?,
        other => {
            return Err(CliError::Config(format!(
                "unknown key \"{other}\" (valid keys: {})",
                VALID_KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

/// Serializes every field of `cfg` as `key=value` lines.
pub fn serialize(cfg: &SimConfig) -> String {
    format!(
        "code={}\ngamma={:?}\nkappa={:?}\nlambda={:?}\nfilter-rate={:?}\nwindow={:?}\neta={:?}\n\
         dt={:?}\nt-final={:?}\ntrajectories={}\nseed={}\nmode={}\nearly-feedback={}\n\
         threshold={:?}\nstride={}\nsme-scheme={}\n",
        cfg.code,
        cfg.gamma,
        cfg.kappa,
        cfg.lambda,
        cfg.filter_rate,
        cfg.window,
        cfg.eta,
        cfg.dt,
        cfg.t_final,
        cfg.n_traj,
        cfg.seed,
        cfg.mode,
        cfg.early_feedback,
        cfg.threshold,
        cfg.sample_stride,
        cfg.sme_scheme,
    )
}

/// Resolves and validates a configuration from an optional file and flags.
pub fn parse_config(
    file: Option<&Path>,
    flags: &Overrides,
) -> Result<(SimConfig, Option<Preset>), CliError> {
    let file = file.map(ConfigFile::read).transpose()?;
    let preset = match (flags.preset, &file) {
        (Some(p), _) => Some(p),
        (None, Some(f)) => f.preset()?,
        (None, None) => None,
    };
    let mut cfg = preset.unwrap_or(Preset::Fig2).config();
    if let Some(f) = &file {
        f.apply(&mut cfg)?;
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok((cfg, preset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_resolve() {
        let flags = Overrides {
            preset: Some(Preset::Fig2),
            gamma: Some(0.3),
            ..Default::default()
        };
        let (cfg, preset) = parse_config(None, &flags).unwrap();
        assert_eq!(preset, Some(Preset::Fig2));
        assert_eq!(
            (cfg.gamma, cfg.kappa, cfg.lambda, cfg.filter_rate),
            (0.3, 150.0, 150.0, 20.0)
        );
        assert_eq!(
            (cfg.window, cfg.dt, cfg.n_traj, cfg.mode, cfg.eta),
            (0.15, 1e-4, 600, Mode::Sse, 1.0)
        );

        let (cfg, _) = parse_config(
            None,
            &Overrides {
                preset: Some(Preset::Fig3),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            (cfg.kappa, cfg.lambda, cfg.filter_rate, cfg.mode),
            (50.0, 50.0, 10.0, Mode::Sme)
        );

        let (cfg, _) = parse_config(
            None,
            &Overrides {
                preset: Some(Preset::Hardware),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            (cfg.kappa, cfg.lambda, cfg.gamma, cfg.t_final),
            (1e6, 1e7, 1e2, 1e-3)
        );
    }

    #[test]
    fn file_values_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# comment\npreset=fig3\ngamma = 0.2\neta=0.8\n\nseed=7 # trailing\n",
        )
        .unwrap();
        let (cfg, preset) = parse_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(preset, Some(Preset::Fig3));
        assert_eq!(
            (cfg.gamma, cfg.eta, cfg.seed, cfg.kappa),
            (0.2, 0.8, 7, 50.0)
        );
        let flags = Overrides {
            gamma: Some(0.5),
            ..Default::default()
        };
        let (cfg, _) = parse_config(Some(&path), &flags).unwrap();
        assert_eq!((cfg.gamma, cfg.eta), (0.5, 0.8));
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = ConfigFile::parse("gama=0.1").unwrap_err().to_string();
        assert!(err.contains("unknown key \"gama\""));
        assert!(err.contains("filter-rate"));
        assert!(ConfigFile::parse("gamma 0.1").is_err());
        let mut cfg = SimConfig::default();
        assert!(ConfigFile::parse("gamma=abc")
            .unwrap()
            .apply(&mut cfg)
            .is_err());
    }

    #[test]
    fn coarse_step_is_rejected() {
        let flags = Overrides {
            gamma: Some(2000.0),
            ..Default::default()
        };
        let err = parse_config(None, &flags).unwrap_err().to_string();
        assert!(err.contains("time step too coarse"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err =
            parse_config(Some(Path::new("/nonexistent/x.cfg")), &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    fn arb_config() -> impl Strategy<Value = SimConfig> {
        (
            prop_oneof![Just(CodeName::Toy), Just(CodeName::Bitflip3)],
            prop_oneof![Just(Mode::Sse), Just(Mode::Sme)],
            prop_oneof![Just(SmeScheme::Euler), Just(SmeScheme::Kraus)],
            0.0f64..10.0,
            1.0f64..500.0,
            0.0f64..500.0,
            0.0f64..100.0,
            1e-3f64..1.0,
            (
                1usize..5000,
                any::<u64>(),
                any::<bool>(),
                0.0f64..0.99,
                1usize..100,
            ),
        )
            .prop_map(
                |(
                    code,
                    mode,
                    sme_scheme,
                    gamma,
                    kappa,
                    lambda,
                    rate,
                    eta,
                    (n, seed, early, th, stride),
                )| SimConfig {
                    code,
                    mode,
                    sme_scheme,
                    gamma,
                    kappa,
                    lambda,
                    filter_rate: rate,
                    eta: if mode == Mode::Sse { 1.0 } else { eta },
                    n_traj: n,
                    seed,
                    early_feedback: early,
                    threshold: th,
                    sample_stride: stride,
                    ..SimConfig::default()
                },
            )
    }

    proptest! {
        #[test]
        fn serialize_round_trips(cfg in arb_config()) {
            let text = serialize(&cfg);
            let mut back = SimConfig::default();
            ConfigFile::parse(&text).unwrap().apply(&mut back).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
