//! Experiment configuration: a single versioned JSON document whose defaults
//! reproduce the standard five-correlation experiment, so bare commands like
//! `quadvol sweep-rho --payoff exp_pos` need no file at all.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use quadvol::heston::HestonParams;
use quadvol::mc::{SimConfig, DEFAULT_DT, DEFAULT_N_PATHS};
use quadvol::payoffs::{preset_payoff, put_payoff_spec, sqrt_payoff_spec, PayoffSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Correlations used by the standard experiment tables and figures.
pub const DEFAULT_RHO_GRID: [f64; 5] = [-0.99, -0.66, 0.0, 0.66, 0.99];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub sim: SimBlock,
    pub payoff: PayoffConfig,
    pub rho_grid: Vec<f64>,
    pub outputs: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelConfig::default(),
            sim: SimBlock::default(),
            payoff: PayoffConfig::Preset("exp_pos".to_string()),
            rho_grid: DEFAULT_RHO_GRID.to_vec(),
            outputs: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub x0: f64,
    pub y0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub delta: f64,
    pub rho: f64,
    pub t_final: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            x0: 0.0,
            y0: 0.04,
            kappa: 1.15,
            theta: 0.04,
            delta: 0.2,
            rho: 0.0,
            t_final: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> quadvol::Result<HestonParams<f64>> {
        HestonParams::new(
            self.x0,
            self.y0,
            self.kappa,
            self.theta,
            self.delta,
            self.rho,
            self.t_final,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimBlock {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub parallel_workers: Option<usize>,
}

impl Default for SimBlock {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            n_paths: DEFAULT_N_PATHS,
            seed: 42,
            parallel_workers: None,
        }
    }
}

impl SimBlock {
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.dt, self.n_paths, self.seed);
        cfg.parallel_workers = self.parallel_workers;
        cfg
    }
}

/// Payoff selection: a preset name, a parameterized put/volswap, an inline
/// term list in the payoff wire format, or a reference to a wire-format file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffConfig {
    Preset(String),
    File {
        file: PathBuf,
    },
    Inline {
        label: String,
        terms: Vec<InlineTerm>,
    },
    Parameterized {
        preset: String,
        #[serde(default)]
        strike: Option<f64>,
        #[serde(default)]
        decay: Option<f64>,
        #[serde(default)]
        degree: Option<usize>,
        #[serde(default)]
        v_cap: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineTerm {
    pub a_re: f64,
    pub a_im: f64,
    pub s_re: f64,
    pub s_im: f64,
}

impl PayoffConfig {
    pub fn resolve(&self) -> anyhow::Result<PayoffSpec<f64>> {
        match self {
            PayoffConfig::Preset(name) => {
                preset_payoff(name).with_context(|| format!("payoff preset \"{name}\""))
            }
            PayoffConfig::File { file } => {
                let text = fs::read_to_string(file)
                    .with_context(|| format!("payoff file {}", file.display()))?;
                PayoffSpec::from_json(&text)
                    .with_context(|| format!("payoff file {}", file.display()))
            }
            PayoffConfig::Inline { label, terms } => {
                let pairs = terms
                    .iter()
                    .map(|t| {
                        (
                            num_complex::Complex::new(t.a_re, t.a_im),
                            num_complex::Complex::new(t.s_re, t.s_im),
                        )
                    })
                    .collect();
                PayoffSpec::new(pairs, label.clone()).context("inline payoff")
            }
            PayoffConfig::Parameterized {
                preset,
                strike,
                decay,
                degree,
                v_cap,
            } => match preset.as_str() {
                "put" => put_payoff_spec(
                    strike.unwrap_or(0.04),
                    decay.unwrap_or(10.0),
                    degree.unwrap_or(20),
                )
                .context("parameterized put payoff"),
                "volswap" => sqrt_payoff_spec(
                    decay.unwrap_or(10.0),
                    degree.unwrap_or(20),
                    v_cap.unwrap_or(1.0),
                )
                .context("parameterized volswap payoff"),
                other => bail!(
                    "payoff.preset: only put and volswap take parameters, got \"{other}\""
                ),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            );
        }
        if self.rho_grid.is_empty() {
            bail!("rho_grid: must contain at least one correlation");
        }
        for &rho in &self.rho_grid {
            if !(rho.abs() <= 1.0) {
                bail!("rho_grid: correlation {rho} outside [-1, 1]");
            }
        }
        if !(self.sim.dt > 0.0 && self.sim.dt.is_finite()) {
            bail!("sim.dt: must be positive and finite, got {}", self.sim.dt);
        }
        if self.sim.n_paths == 0 {
            bail!("sim.n_paths: must be at least 1");
        }
        Ok(())
    }
}
