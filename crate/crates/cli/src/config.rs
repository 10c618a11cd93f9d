//! Experiment documents.
//!
//! A document is either a single configuration object or an experiment with
//! a `configs` array plus report options. Missing fields take the library
//! defaults; unknown fields are rejected with their JSON path.

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qssm::analysis::PepConvention;
use qssm::channel::AngleMode;
use qssm::modem::ConstellationKind;
use qssm::montecarlo::{ChannelMode, RedrawPolicy, Scheme, SimConfig, DEFAULT_SEED, DEFAULT_TRIALS};

use crate::error::{CliError, Result};

/// ABEP levels used by comparison reports when none are given.
pub const DEFAULT_LEVELS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// SNR grid as an explicit list or an inclusive `start..=stop` range.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            SnrGrid::List(v) => v.clone(),
            &SnrGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                    return Err(CliError::Config(format!(
                        "snr_db: range {start}..{stop} with step {step} is empty or malformed"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + step * i as f64).collect()
            }
        };
        if pts.iter().any(|s| !s.is_finite()) {
            return Err(CliError::Config("snr_db: values must be finite".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    label: Option<String>,
    scheme: Scheme,
    #[serde(alias = "L")]
    l: usize,
    #[serde(alias = "M")]
    m: usize,
    constellation: Option<ConstellationKind>,
    channel_mode: Option<ChannelMode>,
    n_t: Option<usize>,
    n_r: Option<usize>,
    spacing: Option<f64>,
    angle_mode: Option<AngleMode>,
    #[serde(alias = "snr")]
    snr_db: SnrGrid,
    trials: Option<u64>,
    seed: Option<u64>,
    redraw: Option<RedrawPolicy>,
    convention: Option<PepConvention>,
}

/// Two configs, by name, whose curves are compared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    configs: Vec<RawConfig>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    #[serde(default)]
    comparisons: Vec<Comparison>,
    levels: Option<Vec<f64>>,
    // written by `run`; checked on re-runs
    library_version: Option<String>,
    config_hashes: Option<Vec<String>>,
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub configs: Vec<SimConfig>,
    pub output_dir: Option<PathBuf>,
    /// Seed given for configs that do not set their own.
    pub seed: u64,
    pub comparisons: Vec<Comparison>,
    pub levels: Vec<f64>,
}

/// Command-line overrides applied to every config.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub convention: Option<PepConvention>,
}

fn decode<T: serde::de::DeserializeOwned>(value: serde_json::Value, context: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { context.to_string() } else { format!("{context}{path}") };
        CliError::Config(format!("{at}: {}", e.into_inner()))
    })
}

impl RawConfig {
    fn resolve(self, seed: u64) -> Result<SimConfig> {
        let d = SimConfig::default();
        let mut config = SimConfig {
            label: self.label,
            scheme: self.scheme,
            paths: self.l,
            order: self.m,
            constellation: self.constellation.unwrap_or(d.constellation),
            channel_mode: self.channel_mode.unwrap_or(d.channel_mode),
            n_t: self.n_t.unwrap_or(d.n_t),
            n_r: self.n_r.unwrap_or(d.n_r),
            spacing: self.spacing.unwrap_or(d.spacing),
            angle_mode: self.angle_mode.unwrap_or(d.angle_mode),
            snr_db: self.snr_db.points()?,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            seed: self.seed.unwrap_or(seed),
            redraw: self.redraw.unwrap_or(d.redraw),
            convention: self.convention.unwrap_or_default(),
        };
        config.label = Some(config.name());
        Ok(config)
    }
}

/// Parses and validates an experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let is_experiment = value.get("configs").is_some();
    let (raw_configs, output_dir, seed, comparisons, levels, hashes) = if is_experiment {
        let raw: RawExperiment = decode(value, "")?;
        if let Some(v) = &raw.library_version {
            if v != qssm::VERSION {
                eprintln!("warning: document written by library version {v}, running {}", qssm::VERSION);
            }
        }
        (raw.configs, raw.output_dir, raw.seed, raw.comparisons, raw.levels, raw.config_hashes)
    } else {
        let raw: RawConfig = decode(value, "")?;
        (vec![raw], None, None, Vec::new(), None, None)
    };
    if raw_configs.is_empty() {
        return Err(CliError::Config("configs: at least one config is required".into()));
    }
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let configs = raw_configs
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.resolve(seed).map_err(|e| prefix(e, &format!("configs[{i}]"))))
        .collect::<Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        configs,
        output_dir,
        seed,
        comparisons,
        levels: levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec()),
    };
    spec.validate()?;
    if let Some(hashes) = hashes {
        let actual: Vec<String> = spec.configs.iter().map(SimConfig::hash).collect();
        if hashes != actual {
            return Err(CliError::Config(format!(
                "config_hashes: recorded {hashes:?} but the configs hash to {actual:?}"
            )));
        }
    }
    Ok(spec)
}

fn prefix(e: CliError, at: &str) -> CliError {
    match e {
        CliError::Config(msg) => CliError::Config(format!("{at}.{msg}")),
        other => other,
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for (i, c) in self.configs.iter().enumerate() {
            c.validate().map_err(|e| CliError::Config(format!("configs[{i}]: {e}")))?;
            if !names.insert(c.name()) {
                return Err(CliError::Config(format!("configs[{i}]: duplicate label `{}`", c.name())));
            }
        }
        if self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(CliError::Config(format!("levels: {:?} must lie in (0, 1)", self.levels)));
        }
        for (i, pair) in self.comparisons.iter().enumerate() {
            let a = self.find(&pair.a).ok_or_else(|| unknown(i, "a", &pair.a))?;
            let b = self.find(&pair.b).ok_or_else(|| unknown(i, "b", &pair.b))?;
            let (ra, rb) = (a.spectral_efficiency()?, b.spectral_efficiency()?);
            if ra != rb {
                return Err(CliError::Config(format!(
                    "comparisons[{i}]: `{}` carries {ra} b/s/Hz but `{}` carries {rb} b/s/Hz; compared configs need equal rates",
                    pair.a, pair.b
                )));
            }
        }
        Ok(())
    }

    pub fn find(&self, name: &str) -> Option<&SimConfig> {
        self.configs.iter().find(|c| c.name() == name)
    }

    pub fn apply(&mut self, overrides: Overrides) -> Result<()> {
        for c in &mut self.configs {
            if let Some(seed) = overrides.seed {
                c.seed = seed;
            }
            if let Some(trials) = overrides.trials {
                c.trials = trials;
            }
            if let Some(conv) = overrides.convention {
                c.convention = conv;
            }
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        self.validate()
    }
}

fn unknown(i: usize, side: &str, name: &str) -> CliError {
    CliError::Config(format!("comparisons[{i}].{side}: no config named `{name}`"))
}
