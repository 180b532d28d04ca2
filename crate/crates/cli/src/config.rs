//! JSON experiment configuration.
//!
//! Symbols are referred to by label everywhere; [`ExperimentConfig::resolve`]
//! turns labels into indices and matrices into validated laws, naming the
//! offending field on failure.

use std::fmt;
use std::path::{Path, PathBuf};

use covert_dht_core::{Alphabet, Dmc, JointPmf, KRule, SchemeConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MU: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sources: SourcesSpec,
    pub channel: ChannelSpec,
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Joint laws of `(U, V)` as `|U| x |V|` matrices over labelled alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesSpec {
    pub u: Vec<String>,
    pub v: Vec<String>,
    /// Null hypothesis.
    pub p_uv: Vec<Vec<f64>>,
    /// Alternative.
    pub q_uv: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub inputs: Vec<String>,
    pub zero: String,
    pub y: Vec<String>,
    pub y_given_x: Vec<Vec<f64>>,
    pub z: Vec<String>,
    pub z_given_x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    /// Sparse scheme: atypicality alarm on the first `k(n)` uses.
    A {
        x_hat: String,
        y_star: String,
        #[serde(default)]
        k_rule: KRule,
    },
    /// Threshold scheme: alarm on all uses when the source type is far
    /// from `P_U`.
    B { x1: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
    /// Monte-Carlo trials per point; 0 means exact evaluation only.
    #[serde(default)]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_mu_grid() -> Vec<f64> {
    vec![DEFAULT_MU]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { n_grid: Vec::new(), mu_grid: default_mu_grid(), trials: 0, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: Format,
}

/// A configuration problem tied to a field path such as `channel.zero`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { field: field.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Laws and channel built from a configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub p_uv: JointPmf,
    pub q_uv: JointPmf,
    pub dmc: Dmc,
    /// Scheme with the first `mu` of the sweep.
    pub scheme: SchemeConfig,
}

impl Resolved {
    pub fn with_mu(&self, mu: f64) -> SchemeConfig {
        SchemeConfig { mu, ..self.scheme }
    }
}

fn alphabet(field: &str, labels: &[String]) -> Result<Alphabet, ConfigError> {
    Alphabet::new(labels.iter().cloned()).map_err(|e| ConfigError::new(field, e))
}

fn symbol(field: &str, alphabet: &Alphabet, label: &str) -> Result<usize, ConfigError> {
    alphabet
        .index_of(label)
        .ok_or_else(|| ConfigError::new(field, format!("unknown symbol `{label}` (have {:?})", alphabet.symbols())))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration always serialises")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    /// The binary example: `U ~ Bern(0.2)` vs `Bern(0.7)`, constant `V`,
    /// BSC(0.4) to both receivers, threshold scheme with `x1 = 1`.
    pub fn example() -> Self {
        let b = || vec!["0".to_string(), "1".to_string()];
        let bsc = vec![vec![0.6, 0.4], vec![0.4, 0.6]];
        Self {
            sources: SourcesSpec {
                u: b(),
                v: vec!["0".into()],
                p_uv: vec![vec![0.8], vec![0.2]],
                q_uv: vec![vec![0.3], vec![0.7]],
            },
            channel: ChannelSpec {
                inputs: b(),
                zero: "0".into(),
                y: b(),
                y_given_x: bsc.clone(),
                z: b(),
                z_given_x: bsc,
            },
            scheme: SchemeSpec::B { x1: "1".into() },
            sweep: SweepSpec { n_grid: (40..=200).step_by(20).collect(), ..SweepSpec::default() },
            output: None,
        }
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let s = &self.sources;
        let u = alphabet("sources.u", &s.u)?;
        let v = alphabet("sources.v", &s.v)?;
        let p_uv = JointPmf::from_rows(u.clone(), v.clone(), &s.p_uv).map_err(|e| ConfigError::new("sources.p_uv", e))?;
        let q_uv = JointPmf::from_rows(u, v, &s.q_uv).map_err(|e| ConfigError::new("sources.q_uv", e))?;

        let c = &self.channel;
        let x = alphabet("channel.inputs", &c.inputs)?;
        symbol("channel.zero", &x, &c.zero)?;
        let y = alphabet("channel.y", &c.y)?;
        let z = alphabet("channel.z", &c.z)?;
        let y_t = covert_dht_core::Transition::new(&x, y, &c.y_given_x)
            .map_err(|e| ConfigError::new("channel.y_given_x", e))?;
        let z_t = covert_dht_core::Transition::new(&x, z, &c.z_given_x)
            .map_err(|e| ConfigError::new("channel.z_given_x", e))?;
        let dmc = Dmc::new(x.clone(), &c.zero, y_t, z_t).map_err(|e| ConfigError::new("channel", e))?;

        let mu = self.sweep.mu_grid.first().copied().unwrap_or(DEFAULT_MU);
        let scheme = match &self.scheme {
            SchemeSpec::A { x_hat, y_star, k_rule } => SchemeConfig::scheme_a(
                symbol("scheme.x_hat", &x, x_hat)?,
                symbol("scheme.y_star", dmc.y_alphabet(), y_star)?,
                *k_rule,
                mu,
            ),
            SchemeSpec::B { x1 } => SchemeConfig::scheme_b(symbol("scheme.x1", &x, x1)?, mu),
        };
        scheme.validate(&dmc).map_err(|e| ConfigError::new("scheme", e))?;

        if let Some(i) = self.sweep.n_grid.iter().position(|&n| n == 0) {
            return Err(ConfigError::new(format!("sweep.n_grid[{i}]"), "blocklength must be positive"));
        }
        if let Some(i) = self.sweep.mu_grid.iter().position(|&m| !(m > 0.0)) {
            return Err(ConfigError::new(format!("sweep.mu_grid[{i}]"), "mu must be positive"));
        }
        Ok(Resolved { p_uv, q_uv, dmc, scheme })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips() {
        let c = ExperimentConfig::example();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
        c.resolve().unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = ExperimentConfig::example();
        c.channel.zero = "7".into();
        assert_eq!(c.resolve().unwrap_err().field, "channel.zero");

        let mut c = ExperimentConfig::example();
        c.sources.q_uv = vec![vec![0.3], vec![0.6]];
        assert_eq!(c.resolve().unwrap_err().field, "sources.q_uv");

        let mut c = ExperimentConfig::example();
        c.scheme = SchemeSpec::B { x1: "2".into() };
        assert_eq!(c.resolve().unwrap_err().field, "scheme.x1");

        let mut c = ExperimentConfig::example();
        c.sweep.mu_grid = vec![0.05, 0.0];
        assert_eq!(c.resolve().unwrap_err().field, "sweep.mu_grid[1]");

        let mut c = ExperimentConfig::example();
        c.scheme = SchemeSpec::A { x_hat: "1".into(), y_star: "1".into(), k_rule: KRule::Sqrt };
        assert_eq!(c.resolve().unwrap_err().field, "scheme");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = ExperimentConfig::example().to_json().replacen("\"sources\"", "\"extra\": 1, \"sources\"", 1);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn sparse_scheme_parses_with_default_rule() {
        let text = r#"{"kind": "a", "x_hat": "1", "y_star": "1"}"#;
        let s: SchemeSpec = serde_json::from_str(text).unwrap();
        assert_eq!(s, SchemeSpec::A { x_hat: "1".into(), y_star: "1".into(), k_rule: KRule::Sqrt });
        let p: SchemeSpec = serde_json::from_str(r#"{"kind": "a", "x_hat": "1", "y_star": "1", "k_rule": {"power": {"exponent": 0.5}}}"#).unwrap();
        assert!(matches!(p, SchemeSpec::A { k_rule: KRule::Power { .. }, .. }));
    }
}
