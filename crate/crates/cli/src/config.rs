use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use d4_painleve::ode::{DEFAULT_ATOL, DEFAULT_RTOL};
use d4_painleve::painleve::{IntegrateOptions, Normalization, PviParams, PviState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub t: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Everything a run depends on. Loaded from a single JSON document, then
/// overridden field by field from the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `(alpha_0, alpha_1, alpha_3, alpha_4)`.
    pub alphas: [f64; 4],
    pub normalization: Normalization,
    pub initial: Initial,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of dense-output samples; accepted steps are written when unset.
    pub sample_interval: Option<f64>,
    pub format: Format,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alphas: [0.3, 0.7, -0.2, 0.45],
            normalization: Normalization::Intro4,
            initial: Initial {
                t: 2.6,
                lambda: 0.4,
                mu: -0.3,
            },
            t_end: 4.0,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            sample_interval: None,
            format: Format::Csv,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let numbers = self
            .alphas
            .iter()
            .chain([&self.initial.t, &self.initial.lambda, &self.initial.mu, &self.t_end]);
        if numbers.into_iter().any(|v| !v.is_finite()) {
            bail!("config contains a non-finite number");
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            bail!("tolerances must be positive");
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0) {
                bail!("sample interval must be positive");
            }
        }
        Ok(())
    }

    pub fn params(&self) -> PviParams {
        PviParams::new(self.alphas, self.normalization)
    }

    pub fn initial_state(&self) -> PviState {
        PviState::new(self.initial.t, self.initial.lambda, self.initial.mu)
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        let mut opts = IntegrateOptions::default();
        opts.ode.rtol = self.rtol;
        opts.ode.atol = self.atol;
        opts
    }
}

fn parse_alphas(s: &str) -> Result<[f64; 4], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 values (alpha0,alpha1,alpha3,alpha4), got {}", v.len()))
}

/// Options shared by every integrating subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// `alpha0,alpha1,alpha3,alpha4`.
    #[arg(long, value_parser = parse_alphas, allow_hyphen_values = true)]
    pub alphas: Option<[f64; 4]>,
    /// intro4 or sec4.
    #[arg(long)]
    pub normalization: Option<Normalization>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(a) = self.alphas {
            cfg.alphas = a;
        }
        if let Some(n) = self.normalization {
            cfg.normalization = n;
        }
        if let Some(v) = self.t0 {
            cfg.initial.t = v;
        }
        if let Some(v) = self.lambda0 {
            cfg.initial.lambda = v;
        }
        if let Some(v) = self.mu0 {
            cfg.initial.mu = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.rtol {
            cfg.rtol = v;
        }
        if let Some(v) = self.atol {
            cfg.atol = v;
        }
        if self.sample_interval.is_some() {
            cfg.sample_interval = self.sample_interval;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_document_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"alphas":[1,2,3,4],"normalization":"sec4"}"#).unwrap();
        assert_eq!(cfg.alphas, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cfg.normalization, Normalization::Sec4);
        assert_eq!(cfg.t_end, RunConfig::default().t_end);
    }

    #[test]
    fn unknown_fields_and_tags_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpha":[1,2,3,4]}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"normalization":"sum4"}"#).is_err());
    }

    #[test]
    fn alpha_lists() {
        assert_eq!(parse_alphas("1, -2,0.5,3").unwrap(), [1.0, -2.0, 0.5, 3.0]);
        assert!(parse_alphas("1,2,3").is_err());
        assert!(parse_alphas("1,x,3,4").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let args = ConfigArgs {
            t_end: Some(3.0),
            format: Some(Format::Json),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.t_end, 3.0);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.alphas, RunConfig::default().alphas);
    }
}
