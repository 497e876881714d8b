//! Joint spectrum Ψ(ω₁, ω₂), time-ordered spectrum Ψ̃(ω₁, ω₂) and the
//! one-photon marginal spectrum.
//!
//! Conventions: `Ψ(ω₁, ω₂) = (1/2π) ∬ dt₁ dt₂ e^{i(ω₁t₁ + ω₂t₂)} ψ(t₁, t₂)`
//! and Ψ̃ is the same transform of `ψ(t₁, t₂) θ(t₂ − t₁)`. In the rotated
//! frame the phase is `e^{i(ω₊u/2 + ω₋v)}` with `ω₊ = ω₁ + ω₂`,
//! `ω₋ = (ω₁ − ω₂)/2`; the ordered half is `v ≤ 0`.
//!
//! With these conventions the ordered Gaussian spectrum carries `F(ξ)*`
//! (the complex conjugate of the plasma dispersion function) and the
//! rectangular one the phase `e^{−iξ/2}`; the moduli are unaffected.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, Error, Result};
use crate::quadrature::{adaptive_1d, adaptive_2d, integrate_2d, Nodes, QuadSettings, Rule};
use crate::specfun::{heaviside_kernel_apply, plasma_dispersion, sinc, KernelSettings};
use crate::wavefunctions::{trapezoid_weight, Biphoton, BiphotonKind, Family, SampledGrid, AMPLITUDE_EFOLDS};

/// How a spectrum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralPath {
    ClosedForm,
    /// Transform of ψ (times θ for the ordered spectrum) by quadrature in
    /// the time domain; the trapezoid rule on the nodes for sampled grids.
    TimeDomainQuadrature,
    /// Ordered spectrum as the convolution of Ψ with the step-function
    /// kernel. Only meaningful for Ψ̃.
    KernelConvolution,
}

impl SpectralPath {
    pub fn name(self) -> &'static str {
        match self {
            SpectralPath::ClosedForm => "closed-form",
            SpectralPath::TimeDomainQuadrature => "time-domain-quadrature",
            SpectralPath::KernelConvolution => "kernel-convolution",
        }
    }
}

impl std::fmt::Display for SpectralPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Peak value of the joint spectrum: `A₁ = √(2τT/π)` for the Gaussian,
/// `A₂ = (2/π³)^{1/4} √(τT)` for the rectangular wavefunction.
pub fn spectral_amplitude(family: Family, coherence_time: f64, correlation_time: f64) -> f64 {
    let tt = coherence_time * correlation_time;
    match family {
        Family::Gaussian => (2.0 * tt / PI).sqrt(),
        Family::Rectangular => (2.0 / PI.powi(3)).powf(0.25) * tt.sqrt(),
    }
}

/// `(ω₁, ω₂)` for offsets `x = ω₊ − ω̄₊`, `y = ω₋ − ω̄₋`.
pub fn frequencies_from_offsets(b: &Biphoton, x: f64, y: f64) -> (f64, f64) {
    let half_plus = 0.5 * (b.omega_plus_bar() + x);
    let minus = b.omega_minus_bar() + y;
    (half_plus + minus, half_plus - minus)
}

/// `(x, y) = (ω₊ − ω̄₊, ω₋ − ω̄₋)`.
pub fn offsets(b: &Biphoton, w1: f64, w2: f64) -> (f64, f64) {
    (
        (w1 + w2) - b.omega_plus_bar(),
        0.5 * (w1 - w2) - b.omega_minus_bar(),
    )
}

/// A biphoton paired with the evaluator used for its spectra.
#[derive(Debug, Clone)]
pub struct JointSpectrum<'a> {
    pub source: &'a Biphoton,
    pub evaluator: SpectralPath,
    pub settings: QuadSettings,
}

impl<'a> JointSpectrum<'a> {
    /// Closed form where one exists, time-domain quadrature otherwise.
    pub fn new(source: &'a Biphoton) -> Self {
        let evaluator = match source.kind {
            BiphotonKind::SampledGrid { .. } => SpectralPath::TimeDomainQuadrature,
            _ => SpectralPath::ClosedForm,
        };
        JointSpectrum {
            source,
            evaluator,
            settings: QuadSettings::default(),
        }
    }

    pub fn with_evaluator(source: &'a Biphoton, evaluator: SpectralPath) -> Self {
        JointSpectrum {
            evaluator,
            ..Self::new(source)
        }
    }

    /// Ψ(ω₁, ω₂) through the configured evaluator. The kernel path does not
    /// apply to Ψ and falls back to the closed form.
    pub fn amplitude(&self, w1: f64, w2: f64) -> Result<Complex64> {
        require_finite("omega1", w1)?;
        require_finite("omega2", w2)?;
        match self.evaluator {
            SpectralPath::ClosedForm | SpectralPath::KernelConvolution => {
                closed_form_joint(self.source, w1, w2)
            }
            SpectralPath::TimeDomainQuadrature => {
                quadrature_transform(self.source, w1, w2, false, &self.settings)
            }
        }
    }

    /// Ψ̃(ω₁, ω₂) through the configured evaluator.
    pub fn time_ordered(&self, w1: f64, w2: f64) -> Result<Complex64> {
        require_finite("omega1", w1)?;
        require_finite("omega2", w2)?;
        match self.evaluator {
            SpectralPath::ClosedForm => closed_form_ordered(self.source, w1, w2),
            SpectralPath::TimeDomainQuadrature => {
                quadrature_transform(self.source, w1, w2, true, &self.settings)
            }
            SpectralPath::KernelConvolution => kernel_ordered(self.source, w1, w2),
        }
    }

    /// `∫ dω₂ |Ψ(ω₁, ω₂)|²`.
    pub fn marginal(&self, w1: f64) -> Result<f64> {
        require_finite("omega1", w1)?;
        let b = self.source;
        let breaks = match &b.kind {
            BiphotonKind::Gaussian | BiphotonKind::Rectangular => {
                let center = b.omega_plus_bar() - w1;
                let half = AMPLITUDE_EFOLDS.sqrt() / b.coherence_time;
                vec![center - half, center, center + half]
            }
            BiphotonKind::SeparableProduct { photon2, .. } => {
                let (c, half) = photon2.frequency_window();
                vec![c - half, c, c + half]
            }
            BiphotonKind::SampledGrid { grid } => {
                let center = b.omega_plus_bar() - w1;
                let half = 2.0 * PI / grid.u_step;
                vec![center - half, center, center + half]
            }
        };
        let settings = QuadSettings {
            abs_tol: 1e-15,
            rel_tol: 1e-11,
            ..self.settings
        };
        let est = adaptive_1d("one-photon marginal", &breaks, &settings, |w2| {
            self.amplitude(w1, w2).map(|a| a.norm_sqr()).unwrap_or(f64::NAN)
        })?;
        if !est.value.is_finite() {
            return Err(Error::Accuracy {
                what: "one-photon marginal".into(),
                estimate: f64::NAN,
                tolerance: settings.abs_tol,
            });
        }
        Ok(est.value)
    }

    /// `∬ |Ψ|² dω₁ dω₂`, which should reproduce the time-domain norm.
    pub fn norm(&self) -> Result<f64> {
        let b = self.source;
        match &b.kind {
            BiphotonKind::Gaussian => {
                let hx = AMPLITUDE_EFOLDS.sqrt() / b.coherence_time;
                let hy = AMPLITUDE_EFOLDS.sqrt() / b.correlation_time;
                let settings = QuadSettings {
                    abs_tol: 1e-14,
                    rel_tol: 1e-12,
                    ..self.settings
                };
                Ok(adaptive_2d("spectral norm", &[-hx, 0.0, hx], &[-hy, 0.0, hy], &settings, |x, y| {
                    self.offset_density(x, y)
                })?
                .value)
            }
            BiphotonKind::Rectangular => self.rectangular_norm(),
            BiphotonKind::SeparableProduct { photon1, photon2 } => {
                let (c1, h1) = photon1.frequency_window();
                let (c2, h2) = photon2.frequency_window();
                Ok(adaptive_2d(
                    "spectral norm",
                    &[c1 - h1, c1, c1 + h1],
                    &[c2 - h2, c2, c2 + h2],
                    &self.settings,
                    |w1, w2| self.amplitude(w1, w2).map(|a| a.norm_sqr()).unwrap_or(f64::NAN),
                )?
                .value)
            }
            BiphotonKind::SampledGrid { grid } => Ok(sampled_spectral_norm(grid)),
        }
    }

    fn offset_density(&self, x: f64, y: f64) -> f64 {
        let (w1, w2) = frequencies_from_offsets(self.source, x, y);
        self.amplitude(w1, w2).map(|a| a.norm_sqr()).unwrap_or(f64::NAN)
    }

    /// The sinc² tail along `y` decays like `1/y²`; integrate whole lobes out
    /// to `±Kπ/τ` and remove the `1/K` tail term by Richardson extrapolation
    /// between `K` and `K/2`.
    fn rectangular_norm(&self) -> Result<f64> {
        const LOBES: usize = 2000;
        let b = self.source;
        let hx = AMPLITUDE_EFOLDS.sqrt() / b.coherence_time;
        let rule = Rule::new(16);
        let x_nodes = Nodes::composite(&rule, &[-hx, 0.0, hx], 4);
        let lobe = PI / b.correlation_time;
        let partial = |lobes: usize| -> f64 {
            let breaks: Vec<f64> = (0..=2 * lobes)
                .map(|k| (k as f64 - lobes as f64) * lobe)
                .collect();
            let y_nodes = Nodes::composite(&rule, &breaks, 1);
            integrate_2d(&x_nodes, &y_nodes, |x, y| self.offset_density(x, y))
        };
        let full = partial(LOBES);
        let half = partial(LOBES / 2);
        let value = 2.0 * full - half;
        if !value.is_finite() {
            return Err(Error::Accuracy {
                what: "spectral norm".into(),
                estimate: f64::NAN,
                tolerance: 0.0,
            });
        }
        Ok(value)
    }
}

/// Ψ(ω₁, ω₂): closed form when the kind has one, quadrature otherwise.
pub fn joint_spectrum(b: &Biphoton, w1: f64, w2: f64) -> Result<Complex64> {
    JointSpectrum::new(b).amplitude(w1, w2)
}

/// Ψ̃(ω₁, ω₂) through the requested path.
pub fn time_ordered_spectrum(
    b: &Biphoton,
    w1: f64,
    w2: f64,
    path: SpectralPath,
) -> Result<Complex64> {
    JointSpectrum::with_evaluator(b, path).time_ordered(w1, w2)
}

/// `∫ dω₂′ |Ψ(ω₁, ω₂′)|²`.
pub fn one_photon_marginal_spectrum(b: &Biphoton, w1: f64) -> Result<f64> {
    JointSpectrum::new(b).marginal(w1)
}

fn closed_form_joint(b: &Biphoton, w1: f64, w2: f64) -> Result<Complex64> {
    let (x, y) = offsets(b, w1, w2);
    let t = b.coherence_time;
    let tau = b.correlation_time;
    match &b.kind {
        BiphotonKind::Gaussian => {
            let a1 = spectral_amplitude(Family::Gaussian, t, tau);
            Ok(Complex64::new(
                a1 * (-(x * t).powi(2) - (y * tau).powi(2)).exp(),
                0.0,
            ))
        }
        BiphotonKind::Rectangular => {
            let a2 = spectral_amplitude(Family::Rectangular, t, tau);
            Ok(Complex64::new(
                a2 * (-(x * t).powi(2)).exp() * sinc(y * tau),
                0.0,
            ))
        }
        BiphotonKind::SeparableProduct { photon1, photon2 } => {
            Ok(photon1.spectrum(w1) * photon2.spectrum(w2))
        }
        BiphotonKind::SampledGrid { .. } => Err(Error::Usage(
            "no closed-form spectrum for sampled wavefunctions".into(),
        )),
    }
}

fn closed_form_ordered(b: &Biphoton, w1: f64, w2: f64) -> Result<Complex64> {
    let (x, y) = offsets(b, w1, w2);
    let t = b.coherence_time;
    let tau = b.correlation_time;
    let sum_factor = (-(x * t).powi(2)).exp();
    match &b.kind {
        BiphotonKind::Gaussian => {
            let a1 = spectral_amplitude(Family::Gaussian, t, tau);
            let f = plasma_dispersion(y * tau)?.to_complex().conj();
            Ok(0.5 * a1 * sum_factor * f)
        }
        BiphotonKind::Rectangular => {
            let a2 = spectral_amplitude(Family::Rectangular, t, tau);
            let xi = y * tau;
            Ok(Complex64::from_polar(0.5 * a2 * sum_factor * sinc(0.5 * xi), -0.5 * xi))
        }
        BiphotonKind::SeparableProduct { .. } | BiphotonKind::SampledGrid { .. } => {
            Err(Error::Usage(format!(
                "no closed-form time-ordered spectrum for {} wavefunctions",
                b.kind_name()
            )))
        }
    }
}

/// Direct transform of ψ (or ψ·θ) in the rotated time coordinates.
fn quadrature_transform(
    b: &Biphoton,
    w1: f64,
    w2: f64,
    ordered: bool,
    settings: &QuadSettings,
) -> Result<Complex64> {
    let (x, y) = offsets(b, w1, w2);
    if let BiphotonKind::SampledGrid { grid } = &b.kind {
        return Ok(sampled_transform(grid, x, y, ordered));
    }
    let (u_breaks, mut v_breaks) = b.support();
    if ordered {
        v_breaks.retain(|&v| v <= 0.0);
        if v_breaks.len() < 2 {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    let est = adaptive_2d(
        if ordered {
            "time-ordered spectrum"
        } else {
            "joint spectrum"
        },
        &u_breaks,
        &v_breaks,
        settings,
        |u, v| {
            let t1 = 0.5 * (u + v);
            let t2 = 0.5 * (u - v);
            b.envelope(t1, t2) * Complex64::from_polar(1.0, 0.5 * x * u + y * v)
        },
    )?;
    Ok(est.value * (0.5 / (2.0 * PI)))
}

/// Trapezoid transform over the stored nodes. The step is one half on the
/// `v = 0` row.
fn sampled_transform(grid: &SampledGrid, x: f64, y: f64, ordered: bool) -> Complex64 {
    let tiny = 1e-9 * grid.v_step;
    let v_phase: Vec<Complex64> = (0..grid.nv)
        .map(|j| {
            let v = grid.v(j);
            let step = if !ordered || v < -tiny {
                1.0
            } else if v.abs() <= tiny {
                0.5
            } else {
                0.0
            };
            Complex64::from_polar(trapezoid_weight(j, grid.nv) * step, y * v)
        })
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..grid.nu {
        let row = &grid.samples[i * grid.nv..(i + 1) * grid.nv];
        let inner: Complex64 = row.iter().zip(&v_phase).map(|(s, p)| s * p).sum();
        total += inner * Complex64::from_polar(trapezoid_weight(i, grid.nu), 0.5 * x * grid.u(i));
    }
    total * (0.5 * grid.u_step * grid.v_step / (2.0 * PI))
}

/// `∬|Ψ|²` over one period of the sampled transform. The transform is a
/// trigonometric polynomial, so an equispaced rule with twice the node count
/// in each direction is exact.
fn sampled_spectral_norm(grid: &SampledGrid) -> f64 {
    let period_x = 4.0 * PI / grid.u_step;
    let period_y = 2.0 * PI / grid.v_step;
    let (nx, ny) = (2 * grid.nu, 2 * grid.nv);
    let (dx, dy) = (period_x / nx as f64, period_y / ny as f64);
    let mut total = 0.0;
    for ky in 0..ny {
        let y = -0.5 * period_y + ky as f64 * dy;
        let inner: Vec<Complex64> = (0..grid.nu)
            .map(|i| {
                let row = &grid.samples[i * grid.nv..(i + 1) * grid.nv];
                row.iter()
                    .enumerate()
                    .map(|(j, s)| s * Complex64::from_polar(trapezoid_weight(j, grid.nv), y * grid.v(j)))
                    .sum::<Complex64>()
                    * trapezoid_weight(i, grid.nu)
            })
            .collect();
        for kx in 0..nx {
            let x = -0.5 * period_x + kx as f64 * dx;
            let value: Complex64 = inner
                .iter()
                .enumerate()
                .map(|(i, a)| a * Complex64::from_polar(1.0, 0.5 * x * grid.u(i)))
                .sum();
            total += value.norm_sqr();
        }
    }
    let scale = 0.5 * grid.u_step * grid.v_step / (2.0 * PI);
    total * scale * scale * dx * dy
}

/// Ψ̃ as `½Ψ − (i/2π) PV∫ Ψ(ω₊, ω₋ − w)/w dw` along the difference frequency.
fn kernel_ordered(b: &Biphoton, w1: f64, w2: f64) -> Result<Complex64> {
    let settings = kernel_settings(b, w1, w2)?;
    let half_plus = 0.5 * (w1 + w2);
    let minus = 0.5 * (w1 - w2);
    let line = |s: f64| {
        closed_form_joint(b, half_plus + s, half_plus - s).unwrap_or(Complex64::new(f64::NAN, 0.0))
    };
    heaviside_kernel_apply(line, minus, &settings)
}

fn kernel_settings(b: &Biphoton, w1: f64, w2: f64) -> Result<KernelSettings> {
    let minus = 0.5 * (w1 - w2);
    let half_plus = 0.5 * (w1 + w2);
    let tau = b.correlation_time;
    match &b.kind {
        BiphotonKind::Gaussian => {
            let y = minus - b.omega_minus_bar();
            let reach = AMPLITUDE_EFOLDS.sqrt() / tau;
            Ok(KernelSettings::for_width(1.0 / tau, y.abs() + 1.5 * reach))
        }
        BiphotonKind::Rectangular => {
            // End on a multiple of π/τ so the oscillating 1/w² tail of the
            // folded sinc integrand cancels to O(w⁻³).
            let y = minus - b.omega_minus_bar();
            let lobes = ((y.abs() * tau) / PI).ceil() + 400.0;
            Ok(KernelSettings::for_width(1.0 / tau, lobes * PI / tau))
        }
        BiphotonKind::SeparableProduct { photon1, photon2 } => {
            let (c1, h1) = photon1.frequency_window();
            let (c2, h2) = photon2.frequency_window();
            let width = photon1.spectral_scale().min(photon2.spectral_scale());
            let offset = (c1 - half_plus).abs().max((half_plus - c2).abs());
            Ok(KernelSettings::for_width(width, minus.abs() + offset + h1.max(h2)))
        }
        BiphotonKind::SampledGrid { .. } => Err(Error::Usage(
            "kernel-convolution path is not available for sampled wavefunctions".into(),
        )),
    }
}
