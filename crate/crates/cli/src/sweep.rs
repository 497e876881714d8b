//! Parameter sweeps written as CSV plus a JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tpa_core::specfun::{plasma_dispersion, sinc};
use tpa_core::transitions::{closed_form, evaluate, resonant_biphoton, ThreeLevelAtom, TransitionResult};
use tpa_core::wavefunctions::{read_grid, Biphoton, Family};

use crate::config::{FamilyArg, Missing, Params, PathArg, Spacing, Variable};
use crate::{default_out_dir, format_number, CliError, Result};

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: FamilyArg,
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
    /// Fixed T (ignored when sweeping T).
    pub coherence_time: f64,
    /// Fixed τ (ignored when sweeping τ/T or Δτ).
    pub correlation_time: f64,
    /// Fixed Δτ when sweeping T or τ/T, unless `delta` is set.
    pub delta_tau: Option<f64>,
    pub delta: Option<f64>,
    pub atom: ThreeLevelAtom,
    pub paths: Vec<PathArg>,
    pub grid: Option<PathBuf>,
    pub out: PathBuf,
    pub workers: usize,
}

impl SweepSpec {
    pub fn from_params(p: &Params) -> Result<SweepSpec> {
        let mut missing = Missing::default();
        let family = missing.take(&p.family, "family");
        let variable = missing.take(&p.variable, "variable");
        let start = missing.take(&p.start, "start");
        let stop = missing.take(&p.stop, "stop");
        let count = missing.take(&p.count, "count");
        let mut grid = None;
        let (mut t, mut tau) = (p.coherence_time, p.correlation_time);
        match (family, variable) {
            (Some(FamilyArg::Sampled), _) => grid = missing.take(&p.grid, "grid"),
            (_, Some(Variable::DeltaTau)) => {
                missing.take(&t, "T");
                missing.take(&tau, "tau");
            }
            (_, Some(Variable::TauOverT)) => {
                missing.take(&t, "T");
            }
            (_, Some(Variable::T)) => {
                missing.take(&tau, "tau");
            }
            _ => {}
        }
        if variable.is_some_and(|v| v != Variable::DeltaTau) && p.delta_tau.is_none() && p.delta.is_none() {
            missing.push("delta_tau");
        }
        missing.check()?;
        let (family, variable) = (family.unwrap(), variable.unwrap());

        if let Some(g) = &grid {
            if variable != Variable::DeltaTau {
                return Err(CliError::Usage("sampled sweeps only vary delta_tau".into()));
            }
            let b = read_grid(g)?;
            t = Some(b.coherence_time);
            tau = Some(b.correlation_time);
        }
        if p.delta.is_some() && p.delta_tau.is_some() {
            return Err(CliError::Usage("give either delta or delta_tau, not both".into()));
        }
        let paths = p.paths.clone().unwrap_or_else(|| {
            vec![if family == FamilyArg::Sampled {
                PathArg::Quadrature
            } else {
                PathArg::ClosedForm
            }]
        });
        let mut paths_sorted = paths.clone();
        paths_sorted.sort_by_key(|p| *p as u8);
        paths_sorted.dedup();
        if paths_sorted.is_empty() || paths_sorted.contains(&PathArg::KernelConvolution) {
            return Err(CliError::Usage(
                "sweep paths must be a non-empty subset of closed-form, quadrature".into(),
            ));
        }
        if family == FamilyArg::Sampled && paths_sorted.contains(&PathArg::ClosedForm) {
            return Err(CliError::Usage("sampled wavefunctions have no closed form".into()));
        }
        let spacing = p.spacing.unwrap_or_default();
        let (start, stop, count) = (start.unwrap(), stop.unwrap(), count.unwrap());
        if count < 2 {
            return Err(CliError::Usage("count must be at least 2".into()));
        }
        if !(start < stop) {
            return Err(CliError::Usage(format!("start ({start}) must be below stop ({stop})")));
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err(CliError::Usage("log spacing needs start > 0".into()));
        }
        let out = p.out.clone().unwrap_or_else(|| {
            default_out_dir().join(format!("sweep_{}_{}.csv", family.name(), variable.name()))
        });
        Ok(SweepSpec {
            family,
            variable,
            start,
            stop,
            count,
            spacing,
            coherence_time: t.unwrap_or(f64::NAN),
            correlation_time: tau.unwrap_or(f64::NAN),
            delta_tau: p.delta_tau,
            delta: p.delta,
            atom: p.atom()?,
            paths: paths_sorted,
            grid,
            out,
            workers: p.worker_count()?,
        })
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    return self.stop;
                }
                let s = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + s * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }

    /// `(T, τ, Δ)` at sweep coordinate `x`.
    pub fn point(&self, x: f64) -> (f64, f64, f64) {
        let (t, tau) = (self.coherence_time, self.correlation_time);
        let fixed = |tau: f64| self.delta.unwrap_or_else(|| self.delta_tau.unwrap_or(0.0) / tau);
        match self.variable {
            Variable::DeltaTau => (t, tau, x / tau),
            Variable::TauOverT => (t, x * t, fixed(x * t)),
            Variable::T => (x, tau, fixed(tau)),
        }
    }

    fn has(&self, path: PathArg) -> bool {
        self.paths.contains(&path)
    }

    pub fn aux_column(&self) -> &'static str {
        match self.family {
            FamilyArg::Rectangular => "sinc_sq_half",
            _ => "F_sq",
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["x", "P1", "P2", "ratio", self.aux_column(), "envelope", "flags"];
        if self.has(PathArg::ClosedForm) && self.has(PathArg::Quadrature) {
            h.extend(["P1_quad", "P2_quad"]);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub p1: f64,
    pub p2: f64,
    pub ratio: f64,
    /// `|F(Δτ)|²` (Gaussian) or `sinc²(Δτ/2)` (rectangular).
    pub aux: f64,
    /// `e^{−2(Δτ)²}` (Gaussian) or `sinc²(Δτ)` (rectangular).
    pub envelope: f64,
    pub flags: Vec<String>,
    pub p1_quad: Option<f64>,
    pub p2_quad: Option<f64>,
}

fn auxiliary(family: Option<Family>, delta_tau: f64) -> (f64, f64) {
    match family {
        Some(Family::Gaussian) => (
            plasma_dispersion(delta_tau).map_or(f64::NAN, |f| f.norm_sqr()),
            (-2.0 * delta_tau * delta_tau).exp(),
        ),
        Some(Family::Rectangular) => (sinc(0.5 * delta_tau).powi(2), sinc(delta_tau).powi(2)),
        None => (f64::NAN, f64::NAN),
    }
}

fn flag_names(r: &TransitionResult) -> Vec<String> {
    let mut out: Vec<String> = r.flags.names().into_iter().map(String::from).collect();
    if r.ratio.is_none() {
        out.push("ratio_undefined".into());
    }
    out
}

struct Evaluator<'a> {
    spec: &'a SweepSpec,
    sampled: Option<Biphoton>,
}

impl Evaluator<'_> {
    fn quadrature(&self, t: f64, tau: f64, delta: f64) -> tpa_core::error::Result<TransitionResult> {
        let atom = &self.spec.atom;
        let b = match (&self.sampled, self.spec.family.analytic()) {
            (Some(s), _) => {
                let plus = atom.omega_a + atom.omega_b;
                let minus = 0.5 * (atom.omega_a - atom.omega_b) - delta;
                s.with_carriers(0.5 * plus + minus, 0.5 * plus - minus)?
            }
            (None, Some(family)) => resonant_biphoton(family, atom, t, tau, delta)?,
            (None, None) => unreachable!("sampled sweeps load their grid"),
        };
        evaluate(&b, atom, tpa_core::spectral::SpectralPath::TimeDomainQuadrature)
    }

    fn row(&self, x: f64) -> SweepRow {
        let spec = self.spec;
        let (t, tau, delta) = spec.point(x);
        let family = spec.family.analytic();
        let (aux, envelope) = auxiliary(family, delta * tau);
        let mut row = SweepRow {
            x,
            p1: f64::NAN,
            p2: f64::NAN,
            ratio: f64::NAN,
            aux,
            envelope,
            flags: Vec::new(),
            p1_quad: None,
            p2_quad: None,
        };
        if family.is_none() {
            row.flags.push("no_closed_form".into());
        }
        let closed = family
            .filter(|_| spec.has(PathArg::ClosedForm))
            .map(|f| closed_form(f, &spec.atom, t, tau, delta));
        let quad = spec.has(PathArg::Quadrature).then(|| self.quadrature(t, tau, delta));
        let both = closed.is_some() && quad.is_some();
        let main = match (&closed, &quad) {
            (Some(c), _) => c,
            (None, Some(q)) => q,
            (None, None) => unreachable!("validated sweeps have a path"),
        };
        match main {
            Ok(r) => {
                row.p1 = r.p1;
                row.p2 = r.p2;
                row.ratio = r.ratio.unwrap_or(f64::NAN);
                row.flags.extend(flag_names(r));
            }
            Err(e) => row.flags.push(format!("evaluation_failed: {e}")),
        }
        if both {
            match quad.as_ref().unwrap() {
                Ok(q) => {
                    row.p1_quad = Some(q.p1);
                    row.p2_quad = Some(q.p2);
                }
                Err(e) => {
                    row.p1_quad = Some(f64::NAN);
                    row.p2_quad = Some(f64::NAN);
                    row.flags.push(format!("quadrature_failed: {e}"));
                }
            }
        }
        row
    }
}

/// Evaluates every grid point, `workers` at a time, in input order.
pub fn evaluate_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let sampled = match &spec.grid {
        Some(g) => Some(read_grid(g)?),
        None => None,
    };
    let ev = Evaluator { spec, sampled };
    let xs = spec.grid_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", spec.workers)))?;
    Ok(pool.install(|| xs.par_iter().map(|&x| ev.row(x)).collect()))
}

fn csv_flags(flags: &[String]) -> String {
    flags.join("|")
}

pub fn write_csv(spec: &SweepSpec, rows: &[SweepRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let header = spec.header();
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            format_number(r.x),
            format_number(r.p1),
            format_number(r.p2),
            format_number(r.ratio),
            format_number(r.aux),
            format_number(r.envelope),
            csv_flags(&r.flags),
        ];
        if header.len() > 7 {
            rec.push(format_number(r.p1_quad.unwrap_or(f64::NAN)));
            rec.push(format_number(r.p2_quad.unwrap_or(f64::NAN)));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// A parsed sweep CSV: numeric columns by name plus the flags column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub columns: BTreeMap<String, Vec<f64>>,
    pub flags: Vec<Vec<String>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn read_csv(path: &Path) -> Result<SweepTable> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut flags = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (name, field) in header.iter().zip(rec.iter()) {
            if name == "flags" {
                flags.push(
                    field
                        .split('|')
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect(),
                );
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    CliError::Usage(format!("line {}: column {name}: bad number {field:?}", line + 2))
                })?;
                columns.entry(name.clone()).or_default().push(v);
            }
        }
    }
    Ok(SweepTable {
        header,
        columns,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxRatio {
    pub x: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Zeros {
    #[serde(rename = "P1")]
    pub p1: Vec<f64>,
    #[serde(rename = "P2")]
    pub p2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub csv: PathBuf,
    pub family: &'static str,
    pub variable: &'static str,
    pub paths: Vec<&'static str>,
    pub rows: usize,
    pub failed_points: usize,
    pub zeros: Zeros,
    pub max_ratio: Option<MaxRatio>,
}

/// Interior local minima of `ys` that reach zero (below `1e-6` of the
/// column maximum at the parabolic vertex). A node that is already zero to
/// rounding is reported as is; otherwise the vertex position is used.
pub fn locate_zeros(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let peak = ys.iter().copied().filter(|y| y.is_finite()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        let (f0, f1, f2) = (ys[i - 1], ys[i], ys[i + 1]);
        if !(f1 <= f0 && f1 < f2 || f1 < f0 && f1 <= f2) {
            continue;
        }
        let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
        let num = (x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0);
        let den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
        let (xv, fv) = if f1 <= 1e-12 * peak {
            (x1, f1)
        } else if den != 0.0 {
            let xv = x1 - 0.5 * num / den;
            // Lagrange form of the parabola at its vertex.
            let l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
            let l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
            let l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
            (xv, f0 * l0 + f1 * l1 + f2 * l2)
        } else {
            (x1, f1)
        };
        if fv.abs() <= 1e-6 * peak {
            out.push(xv);
        }
    }
    out
}

pub fn summarize(spec: &SweepSpec, rows: &[SweepRow]) -> SweepSummary {
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let p1: Vec<f64> = rows.iter().map(|r| r.p1).collect();
    let p2: Vec<f64> = rows.iter().map(|r| r.p2).collect();
    let max_ratio = rows
        .iter()
        .filter(|r| r.ratio.is_finite())
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .map(|r| MaxRatio {
            x: r.x,
            ratio: r.ratio,
        });
    SweepSummary {
        csv: spec.out.clone(),
        family: spec.family.name(),
        variable: spec.variable.name(),
        paths: spec.paths.iter().map(|p| p.name()).collect(),
        rows: rows.len(),
        failed_points: rows
            .iter()
            .filter(|r| r.flags.iter().any(|f| f.contains("_failed")))
            .count(),
        zeros: Zeros {
            p1: locate_zeros(&xs, &p1),
            p2: locate_zeros(&xs, &p2),
        },
        max_ratio,
    }
}

/// `<stem>.summary.json` next to the CSV.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary> {
    let rows = evaluate_rows(spec)?;
    write_csv(spec, &rows, &spec.out)?;
    let summary = summarize(spec, &rows);
    let path = summary_path(&spec.out);
    fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}
