//! Single-point evaluation.

use std::path::PathBuf;

use serde::Serialize;
use tpa_core::quadrature::QuadSettings;
use tpa_core::transitions::{closed_form, evaluate, ThreeLevelAtom, TransitionResult};
use tpa_core::wavefunctions::{read_grid, Biphoton};

use crate::config::{FamilyArg, Missing, Params, PathArg};
use crate::{CliError, Result};

/// A fully specified point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRequest {
    pub family: FamilyArg,
    pub coherence_time: f64,
    pub correlation_time: f64,
    pub delta: f64,
    pub atom: ThreeLevelAtom,
    pub path: PathArg,
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointParameters {
    #[serde(rename = "T")]
    pub coherence_time: f64,
    #[serde(rename = "tau")]
    pub correlation_time: f64,
    pub delta_tau: f64,
    pub delta: f64,
    pub r1: f64,
    pub r2: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
}

/// JSON record printed by `tpa point`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub family: &'static str,
    pub path: &'static str,
    pub parameters: PointParameters,
    pub result: TransitionResult,
    pub flags: Vec<&'static str>,
    /// Quadrature settings behind the numbers; absent for closed forms.
    pub tolerances: Option<QuadSettings>,
}

/// Loads a sampled grid and moves its carriers onto two-photon resonance
/// with detuning `delta`.
pub fn resonant_sampled(grid: &std::path::Path, atom: &ThreeLevelAtom, delta: f64) -> Result<Biphoton> {
    let b = read_grid(grid)?;
    let plus = atom.omega_a + atom.omega_b;
    let minus = 0.5 * (atom.omega_a - atom.omega_b) - delta;
    Ok(b.with_carriers(0.5 * plus + minus, 0.5 * plus - minus)?)
}

fn grid_times(grid: &std::path::Path) -> Result<(f64, f64)> {
    let b = read_grid(grid)?;
    Ok((b.coherence_time, b.correlation_time))
}

impl PointRequest {
    pub fn from_params(p: &Params) -> Result<PointRequest> {
        let mut missing = Missing::default();
        let family = missing.take(&p.family, "family");
        if p.delta_tau.is_none() && p.delta.is_none() {
            missing.push("delta_tau");
        }
        let (t, tau, grid) = match family {
            Some(FamilyArg::Sampled) => {
                if p.coherence_time.is_some() || p.correlation_time.is_some() {
                    return Err(CliError::Usage(
                        "T and tau are read from the grid file for --family sampled".into(),
                    ));
                }
                let grid = missing.take(&p.grid, "grid");
                missing.check()?;
                let grid = grid.unwrap();
                let (t, tau) = grid_times(&grid)?;
                (t, tau, Some(grid))
            }
            _ => {
                let t = missing.take(&p.coherence_time, "T");
                let tau = missing.take(&p.correlation_time, "tau");
                missing.check()?;
                (t.unwrap(), tau.unwrap(), None)
            }
        };
        let family = family.unwrap();
        let path = match p.paths.as_deref() {
            None | Some([]) => {
                if family == FamilyArg::Sampled {
                    PathArg::Quadrature
                } else {
                    PathArg::ClosedForm
                }
            }
            Some([one]) => *one,
            Some(_) => return Err(CliError::Usage("point takes a single --path".into())),
        };
        if family == FamilyArg::Sampled && path == PathArg::ClosedForm {
            return Err(CliError::Usage("sampled wavefunctions have no closed form".into()));
        }
        let delta = match (p.delta, p.delta_tau) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("give either delta or delta_tau, not both".into()))
            }
            (Some(d), None) => d,
            (None, Some(dt)) => dt / tau,
            (None, None) => unreachable!(),
        };
        Ok(PointRequest {
            family,
            coherence_time: t,
            correlation_time: tau,
            delta,
            atom: p.atom()?,
            path,
            grid,
        })
    }

    pub fn evaluate(&self) -> Result<PointRecord> {
        let (t, tau) = (self.coherence_time, self.correlation_time);
        let result = match (self.family.analytic(), self.path) {
            (Some(family), PathArg::ClosedForm) => closed_form(family, &self.atom, t, tau, self.delta)?,
            (Some(family), path) => {
                let b = tpa_core::transitions::resonant_biphoton(family, &self.atom, t, tau, self.delta)?;
                evaluate(&b, &self.atom, path.spectral())?
            }
            (None, path) => {
                let grid = self.grid.as_deref().expect("sampled requests carry a grid");
                let b = resonant_sampled(grid, &self.atom, self.delta)?;
                evaluate(&b, &self.atom, path.spectral())?
            }
        };
        Ok(PointRecord {
            family: self.family.name(),
            path: self.path.name(),
            parameters: PointParameters {
                coherence_time: t,
                correlation_time: tau,
                delta_tau: self.delta * tau,
                delta: self.delta,
                r1: self.atom.r1,
                r2: self.atom.r2,
                omega_a: self.atom.omega_a,
                omega_b: self.atom.omega_b,
                grid: self.grid.clone(),
            },
            flags: result.flags.names(),
            result,
            tolerances: (self.path != PathArg::ClosedForm).then(QuadSettings::default),
        })
    }
}

pub fn run_point(p: &Params) -> Result<String> {
    let record = PointRequest::from_params(p)?.evaluate()?;
    Ok(serde_json::to_string_pretty(&record)?)
}
