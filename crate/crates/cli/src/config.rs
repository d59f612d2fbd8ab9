use std::fmt;
use std::path::{Path, PathBuf};

use aseplab::AsepParams;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Input the user got wrong; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each one overrides the matching field of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with the same fields as the flags plus command extras.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// System size(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
}

/// Everything a run depends on. Two runs with equal configs write identical
/// bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,

    /// verify-ansatz: parameter sets checked when no rates are given.
    pub sets: Option<Vec<AsepParams>>,
    /// verify-ansatz: explicit `t` vectors replacing the default per-`n` ones.
    pub ts: Option<Vec<Vec<f64>>>,
    /// fluctuations: grid of `x` values.
    pub xs: Option<Vec<f64>>,
    /// fluctuations: events between retained samples.
    pub thinning: Option<u64>,
    /// fluctuations: events discarded before sampling.
    pub burn_in: Option<u64>,
    pub chains: Option<usize>,
    /// tangent-check: scaling parameters.
    pub ns: Option<Vec<f64>>,
    pub us: Option<Vec<f64>>,
    pub vs: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    /// tangent-check: tolerance for the initial density.
    pub tol_density: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| invalid(format!("bad config {}: {e}", path.display())))
    }

    pub fn resolve(flags: &Flags) -> anyhow::Result<Self> {
        let mut c = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {
                $(if flags.$f.is_some() { c.$f = flags.$f.clone(); })*
            };
        }
        take!(alpha, beta, gamma, delta, q, n, seed, replicas, out, format, tol);
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    /// Rates from the config, or `None` when neither `alpha` nor `beta` is set.
    /// `gamma`, `delta` and `q` default to zero.
    pub fn rates(&self) -> anyhow::Result<Option<AsepParams>> {
        match (self.alpha, self.beta) {
            (None, None) => {
                if self.gamma.is_some() || self.delta.is_some() || self.q.is_some() {
                    return Err(invalid("--gamma/--delta/--q need --alpha and --beta"));
                }
                Ok(None)
            }
            (Some(a), Some(b)) => {
                let p = AsepParams::new(
                    a,
                    b,
                    self.gamma.unwrap_or(0.0),
                    self.delta.unwrap_or(0.0),
                    self.q.unwrap_or(0.0),
                )?;
                Ok(Some(p))
            }
            _ => Err(invalid("--alpha and --beta must be given together")),
        }
    }

    pub fn require_rates(&self) -> anyhow::Result<AsepParams> {
        self.rates()?
            .ok_or_else(|| invalid("this command needs --alpha and --beta"))
    }

    /// Hex prefix of the SHA-256 of the command and config. The output path
    /// does not take part.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(format!("{command}\n{json}").as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
