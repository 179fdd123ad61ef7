//! Experiment configuration: JSON file plus flag overrides, flags win.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use prony_leaves::RegularityParams;

/// How the moment error bound is chosen per cluster scale `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpsRule {
    /// One absolute value per entry of `h_list` (or a single value for
    /// all of them).
    Absolute { values: Vec<f64> },
    /// `eps = c * h^p`.
    Power { c: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub d: usize,
    pub eta: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub m_upper: f64,
    pub kappa: f64,
    pub h_list: Vec<f64>,
    pub eps_rule: EpsRule,
    pub n_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: 1,
            d: 2,
            eta: 1.0,
            m: 0.4,
            m_upper: 1.0,
            kappa: 0.0,
            h_list: vec![0.05, 0.075, 0.1, 0.15, 0.2],
            eps_rule: EpsRule::Power { c: 1.0, p: 3.0 },
            n_samples: 500,
            seed: 7,
            output_dir: PathBuf::from("."),
            format: OutputFormat::Csv,
        }
    }
}

/// Flag-level overrides shared by the experiment subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of spikes.
    #[arg(long)]
    pub d: Option<usize>,
    /// Minimum node gap in model space.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Amplitude lower bound.
    #[arg(long)]
    pub m: Option<f64>,
    /// Amplitude upper bound.
    #[arg(long = "M", id = "M")]
    pub m_upper: Option<f64>,
    /// Cluster center.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Single cluster half-width (replaces the sweep list).
    #[arg(long)]
    pub h: Option<f64>,
    /// Comma-separated sweep of cluster half-widths.
    #[arg(long, value_delimiter = ',')]
    pub h_sweep: Option<Vec<f64>>,
    /// Absolute moment error bound (replaces the eps rule).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Uniform samples per experiment cell.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Base RNG seed; every report embeds it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format for clouds and tables (csv or json).
    #[arg(long)]
    pub format: Option<String>,
}

impl ExperimentConfig {
    /// Load the config file (when given) and apply flag overrides.
    pub fn resolve(ov: &Overrides) -> Result<Self> {
        let mut cfg = match &ov.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(d) = ov.d {
            cfg.d = d;
        }
        if let Some(eta) = ov.eta {
            cfg.eta = eta;
        }
        if let Some(m) = ov.m {
            cfg.m = m;
        }
        if let Some(m_upper) = ov.m_upper {
            cfg.m_upper = m_upper;
        }
        if let Some(kappa) = ov.kappa {
            cfg.kappa = kappa;
        }
        if let Some(h) = ov.h {
            cfg.h_list = vec![h];
        }
        if let Some(hs) = &ov.h_sweep {
            cfg.h_list = hs.clone();
        }
        if let Some(eps) = ov.eps {
            cfg.eps_rule = EpsRule::Absolute { values: vec![eps] };
        }
        if let Some(n) = ov.samples {
            cfg.n_samples = n;
        }
        if let Some(seed) = ov.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &ov.out {
            cfg.output_dir = out.clone();
        }
        if let Some(fmt) = &ov.format {
            cfg.format = match fmt.as_str() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => bail!("unknown format {other:?} (expected csv or json)"),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            bail!("d must be at least 1");
        }
        if self.h_list.is_empty() || self.h_list.iter().any(|h| *h <= 0.0) {
            bail!("h_list must be nonempty and strictly positive");
        }
        if self.n_samples == 0 {
            bail!("n_samples must be at least 1");
        }
        if !(self.eta > 0.0) || !(0.0 < self.m && self.m < self.m_upper) {
            bail!("regularity parameters need eta > 0 and 0 < m < M");
        }
        if let EpsRule::Absolute { values } = &self.eps_rule {
            if values.len() != 1 && values.len() != self.h_list.len() {
                bail!(
                    "absolute eps rule needs 1 or {} values, got {}",
                    self.h_list.len(),
                    values.len()
                );
            }
            if values.iter().any(|v| *v <= 0.0) {
                bail!("eps values must be positive");
            }
        }
        Ok(())
    }

    pub fn regularity(&self) -> RegularityParams {
        RegularityParams::new(self.eta, self.m, self.m_upper)
    }

    /// The error bound for the `i`-th entry of the sweep.
    pub fn eps_for(&self, i: usize) -> f64 {
        let h = self.h_list[i];
        match &self.eps_rule {
            EpsRule::Absolute { values } => {
                if values.len() == 1 {
                    values[0]
                } else {
                    values[i]
                }
            }
            EpsRule::Power { c, p } => c * h.powf(*p),
        }
    }

    /// Deterministic per-cell seed.
    pub fn cell_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1))
    }
}
