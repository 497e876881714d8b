//! The canonical sweeps behind the comparison figures and the two
//! transparency scans.

use std::f64::consts::PI;
use std::path::Path;

use crate::config::{FamilyArg, Params, PathArg, Spacing, Variable};
use crate::sweep::{run_sweep, SweepSpec, SweepSummary};
use crate::Result;

/// File name and parameters of each canonical sweep.
pub fn canonical_params() -> Vec<(&'static str, Params)> {
    let base = Params {
        coherence_time: Some(1.0),
        correlation_time: Some(0.01),
        r1: Some(1.0),
        r2: Some(1.0),
        spacing: Some(Spacing::Linear),
        ..Params::default()
    };
    vec![
        (
            "fig4a.csv",
            Params {
                family: Some(FamilyArg::Gaussian),
                variable: Some(Variable::DeltaTau),
                start: Some(0.0),
                stop: Some(3.0),
                count: Some(301),
                paths: Some(vec![PathArg::ClosedForm]),
                ..base.clone()
            },
        ),
        (
            "fig4b.csv",
            Params {
                family: Some(FamilyArg::Rectangular),
                variable: Some(Variable::DeltaTau),
                start: Some(0.0),
                stop: Some(4.0 * PI),
                count: Some(401),
                paths: Some(vec![PathArg::ClosedForm]),
                ..base.clone()
            },
        ),
        (
            "transparency_two_photon.csv",
            Params {
                family: Some(FamilyArg::Rectangular),
                variable: Some(Variable::DeltaTau),
                start: Some(0.0),
                stop: Some(6.0 * PI),
                count: Some(601),
                paths: Some(vec![PathArg::ClosedForm, PathArg::Quadrature]),
                ..base.clone()
            },
        ),
        (
            "transparency_one_photon.csv",
            Params {
                family: Some(FamilyArg::Rectangular),
                variable: Some(Variable::TauOverT),
                start: Some(0.005),
                stop: Some(0.1),
                count: Some(381),
                delta: Some(100.0),
                paths: Some(vec![PathArg::ClosedForm, PathArg::Quadrature]),
                ..base
            },
        ),
    ]
}

pub fn run_figures(dir: &Path, workers: Option<usize>) -> Result<Vec<SweepSummary>> {
    canonical_params()
        .into_iter()
        .map(|(name, p)| {
            let p = Params {
                out: Some(dir.join(name)),
                workers,
                ..p
            };
            run_sweep(&SweepSpec::from_params(&p)?)
        })
        .collect()
}
