//! Run parameters from a JSON config file and command-line flags. Flags win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use tpa_core::spectral::SpectralPath;
use tpa_core::transitions::ThreeLevelAtom;
use tpa_core::wavefunctions::Family;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Gaussian,
    Rectangular,
    Sampled,
}

impl FamilyArg {
    pub fn analytic(self) -> Option<Family> {
        match self {
            FamilyArg::Gaussian => Some(Family::Gaussian),
            FamilyArg::Rectangular => Some(Family::Rectangular),
            FamilyArg::Sampled => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyArg::Gaussian => "gaussian",
            FamilyArg::Rectangular => "rectangular",
            FamilyArg::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PathArg {
    ClosedForm,
    Quadrature,
    KernelConvolution,
}

impl PathArg {
    pub fn spectral(self) -> SpectralPath {
        match self {
            PathArg::ClosedForm => SpectralPath::ClosedForm,
            PathArg::Quadrature => SpectralPath::TimeDomainQuadrature,
            PathArg::KernelConvolution => SpectralPath::KernelConvolution,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PathArg::ClosedForm => "closed-form",
            PathArg::Quadrature => "quadrature",
            PathArg::KernelConvolution => "kernel-convolution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Variable {
    #[serde(rename = "delta_tau")]
    #[value(name = "delta_tau")]
    DeltaTau,
    #[serde(rename = "tau_over_T")]
    #[value(name = "tau_over_T")]
    TauOverT,
    #[serde(rename = "T")]
    #[value(name = "T")]
    T,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::DeltaTau => "delta_tau",
            Variable::TauOverT => "tau_over_T",
            Variable::T => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Every run parameter. The same struct is read from the config file and
/// from the command line; unset fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Coherence time T.
    #[arg(long = "T", value_name = "T")]
    #[serde(rename = "T")]
    pub coherence_time: Option<f64>,
    /// Correlation time tau.
    #[arg(long = "tau", value_name = "TAU")]
    #[serde(rename = "tau")]
    pub correlation_time: Option<f64>,
    /// Detuning in units of 1/tau.
    #[arg(long, allow_negative_numbers = true)]
    pub delta_tau: Option<f64>,
    /// Absolute detuning; an alternative to --delta-tau for T and tau_over_T sweeps.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub omega_a: Option<f64>,
    #[arg(long)]
    pub omega_b: Option<f64>,
    /// Evaluation path(s), comma separated.
    #[arg(long = "path", value_enum, value_delimiter = ',')]
    #[serde(rename = "path")]
    pub paths: Option<Vec<PathArg>>,
    #[arg(long, value_enum)]
    pub variable: Option<Variable>,
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
    /// Sampled-grid container for --family sampled.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Params { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Params {
    /// Field-wise merge; values in `self` take precedence.
    pub fn over(self, file: Params) -> Params {
        overlay!(
            self, file, family, coherence_time, correlation_time, delta_tau, delta, r1, r2,
            omega_a, omega_b, paths, variable, start, stop, count, spacing, grid, out, workers
        )
    }

    pub fn from_json(text: &str) -> Result<Params> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Params> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Reads `config` (if any) and lays `self` over it.
    pub fn resolve(self, config: Option<&Path>) -> Result<Params> {
        match config {
            Some(path) => Ok(self.over(Params::from_file(path)?)),
            None => Ok(self),
        }
    }

    /// The atom, defaulting to unit rates and unit transition frequencies.
    pub fn atom(&self) -> Result<ThreeLevelAtom> {
        Ok(ThreeLevelAtom::new(
            self.omega_a.unwrap_or(1.0),
            self.omega_b.unwrap_or(1.0),
            self.r1.unwrap_or(1.0),
            self.r2.unwrap_or(1.0),
        )?)
    }

    pub fn worker_count(&self) -> Result<usize> {
        match self.workers {
            Some(0) => Err(CliError::Usage("workers must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// Collects names of missing required fields into one usage error.
#[derive(Debug, Default)]
pub(crate) struct Missing(Vec<&'static str>);

impl Missing {
    pub fn take<T: Clone>(&mut self, value: &Option<T>, name: &'static str) -> Option<T> {
        if value.is_none() {
            self.0.push(name);
        }
        value.clone()
    }

    pub fn push(&mut self, name: &'static str) {
        self.0.push(name);
    }

    pub fn check(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "missing required parameters: {}",
                self.0.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = Params::from_json(r#"{"family": "gaussian", "T": 2.0, "tau": 0.1, "path": ["quadrature"]}"#)
            .unwrap();
        let flags = Params {
            coherence_time: Some(5.0),
            ..Params::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.coherence_time, Some(5.0));
        assert_eq!(merged.correlation_time, Some(0.1));
        assert_eq!(merged.family, Some(FamilyArg::Gaussian));
        assert_eq!(merged.paths, Some(vec![PathArg::Quadrature]));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = Params::from_json(r#"{"famly": "gaussian"}"#).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_eq!(err.exit_code(), 2);
        assert!(Params::from_json("{not json").is_err());
    }

    #[test]
    fn variable_names() {
        let p = Params::from_json(r#"{"variable": "tau_over_T", "spacing": "log"}"#).unwrap();
        assert_eq!(p.variable, Some(Variable::TauOverT));
        assert_eq!(p.spacing, Some(Spacing::Log));
    }

    #[test]
    fn zero_workers_rejected() {
        let p = Params {
            workers: Some(0),
            ..Params::default()
        };
        assert!(p.worker_count().is_err());
    }

    #[test]
    fn missing_fields_are_listed() {
        let mut m = Missing::default();
        m.take(&None::<f64>, "T");
        m.take(&Some(1.0), "tau");
        m.push("family");
        let msg = m.check().unwrap_err().to_string();
        assert!(msg.contains("T, family"), "{msg}");
    }
}
