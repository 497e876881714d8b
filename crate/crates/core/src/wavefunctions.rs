//! Two-photon wavefunctions ψ(t₁, t₂) in the time domain.
//!
//! Everything is expressed in rotated coordinates `u = t₁ + t₂` and
//! `v = t₁ − t₂`, where both analytic families factorize. The area element
//! is `dt₁ dt₂ = du dv / 2`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quadrature::{adaptive_1d, adaptive_2d, QuadSettings};

/// Number of e-foldings kept in the amplitude when truncating an analytic
/// envelope for quadrature.
pub(crate) const AMPLITUDE_EFOLDS: f64 = 36.0;

/// Residual above which a wavefunction counts as not normalized.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Default cap on the number of samples in a sampled grid.
pub const DEFAULT_MAX_SAMPLES: usize = 1 << 26;

/// Normalization factor of the Gaussian wavefunction, `1/√(2πτT)`.
pub fn gaussian_time_norm(coherence_time: f64, correlation_time: f64) -> f64 {
    1.0 / (2.0 * PI * correlation_time * coherence_time).sqrt()
}

/// Normalization factor of the rectangular wavefunction, `(8π)^{-1/4}/√(τT)`.
pub fn rectangular_time_norm(coherence_time: f64, correlation_time: f64) -> f64 {
    (8.0 * PI).powf(-0.25) / (correlation_time * coherence_time).sqrt()
}

/// Window `Π_τ(v)`: one inside, zero outside, one half on the edge.
pub fn window(v: f64, correlation_time: f64) -> f64 {
    let av = v.abs();
    if av < correlation_time {
        1.0
    } else if av == correlation_time {
        0.5
    } else {
        0.0
    }
}

/// Shape of a single-photon wavepacket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum EnvelopeShape {
    /// `|Ψ(ω)|²` is a normal density of standard deviation `spectral_width`.
    Gaussian { spectral_width: f64 },
    /// Carrier-free amplitude samples at `t_start + k * t_step`.
    Sampled {
        t_start: f64,
        t_step: f64,
        samples: Vec<Complex64>,
    },
}

/// One-photon amplitude ψ(t) and its spectrum Ψ(ω).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePhotonEnvelope {
    pub shape: EnvelopeShape,
    pub center_frequency: f64,
}

impl OnePhotonEnvelope {
    pub fn gaussian(center_frequency: f64, spectral_width: f64) -> Result<Self> {
        require_finite("center_frequency", center_frequency)?;
        require_positive("spectral_width", spectral_width)?;
        Ok(OnePhotonEnvelope {
            shape: EnvelopeShape::Gaussian { spectral_width },
            center_frequency,
        })
    }

    pub fn sampled(
        center_frequency: f64,
        t_start: f64,
        t_step: f64,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        require_finite("center_frequency", center_frequency)?;
        require_finite("t_start", t_start)?;
        require_positive("t_step", t_step)?;
        if samples.len() < 2 {
            return Err(Error::Domain("a sampled envelope needs at least two samples".into()));
        }
        Ok(OnePhotonEnvelope {
            shape: EnvelopeShape::Sampled {
                t_start,
                t_step,
                samples,
            },
            center_frequency,
        })
    }

    /// Carrier-free amplitude.
    pub fn envelope(&self, t: f64) -> Complex64 {
        match &self.shape {
            EnvelopeShape::Gaussian { spectral_width } => {
                let s = *spectral_width;
                let amp = (2.0 * s * s / PI).powf(0.25) * (-s * s * t * t).exp();
                Complex64::new(amp, 0.0)
            }
            EnvelopeShape::Sampled {
                t_start,
                t_step,
                samples,
            } => {
                let pos = (t - t_start) / t_step;
                let last = (samples.len() - 1) as f64;
                if !(0.0..=last).contains(&pos) {
                    return Complex64::new(0.0, 0.0);
                }
                let k = (pos.floor() as usize).min(samples.len() - 2);
                let frac = pos - k as f64;
                samples[k] * (1.0 - frac) + samples[k + 1] * frac
            }
        }
    }

    /// ψ(t) including the carrier `e^{-iω₀t}`.
    pub fn eval_time(&self, t: f64) -> Complex64 {
        self.envelope(t) * Complex64::from_polar(1.0, -self.center_frequency * t)
    }

    /// Ψ(ω) = (2π)^{-1/2} ∫ ψ(t) e^{iωt} dt.
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        let detuning = omega - self.center_frequency;
        match &self.shape {
            EnvelopeShape::Gaussian { spectral_width } => {
                let s = *spectral_width;
                let amp = (2.0 * PI * s * s).powf(-0.25)
                    * (-detuning * detuning / (4.0 * s * s)).exp();
                Complex64::new(amp, 0.0)
            }
            EnvelopeShape::Sampled {
                t_start,
                t_step,
                samples,
            } => {
                let n = samples.len();
                let sum = samples
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, s)| {
                        let t = t_start + k as f64 * t_step;
                        acc + s
                            * trapezoid_weight(k, n)
                            * Complex64::from_polar(1.0, detuning * t)
                    });
                sum * t_step / (2.0 * PI).sqrt()
            }
        }
    }

    /// Interval outside of which the amplitude is negligible or zero.
    pub fn time_range(&self) -> (f64, f64) {
        match &self.shape {
            EnvelopeShape::Gaussian { spectral_width } => {
                let half = AMPLITUDE_EFOLDS.sqrt() / spectral_width;
                (-half, half)
            }
            EnvelopeShape::Sampled {
                t_start,
                t_step,
                samples,
            } => (*t_start, t_start + (samples.len() - 1) as f64 * t_step),
        }
    }

    /// Frequency interval holding the spectrum, as `(center, half_width)`.
    pub(crate) fn frequency_window(&self) -> (f64, f64) {
        match &self.shape {
            EnvelopeShape::Gaussian { spectral_width } => (
                self.center_frequency,
                2.0 * AMPLITUDE_EFOLDS.sqrt() * spectral_width,
            ),
            EnvelopeShape::Sampled { t_step, .. } => (self.center_frequency, PI / t_step),
        }
    }

    /// Characteristic spectral width.
    pub(crate) fn spectral_scale(&self) -> f64 {
        match &self.shape {
            EnvelopeShape::Gaussian { spectral_width } => *spectral_width,
            EnvelopeShape::Sampled { .. } => {
                let (lo, hi) = self.time_range();
                2.0 * PI / (hi - lo)
            }
        }
    }

    /// ∫|ψ(t)|² dt.
    pub fn norm(&self) -> Result<f64> {
        match &self.shape {
            EnvelopeShape::Gaussian { .. } => {
                let (lo, hi) = self.time_range();
                Ok(adaptive_1d("one-photon norm", &[lo, 0.0, hi], &QuadSettings::default(), |t| {
                    self.envelope(t).norm_sqr()
                })?
                .value)
            }
            EnvelopeShape::Sampled {
                t_step, samples, ..
            } => {
                let n = samples.len();
                Ok(samples
                    .iter()
                    .enumerate()
                    .map(|(k, s)| trapezoid_weight(k, n) * s.norm_sqr())
                    .sum::<f64>()
                    * t_step)
            }
        }
    }
}

pub(crate) fn trapezoid_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Uniform grid of carrier-free samples in the rotated `(u, v)` plane.
///
/// Samples are stored row-major with `u` as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledGrid {
    pub u_min: f64,
    pub u_step: f64,
    pub nu: usize,
    pub v_min: f64,
    pub v_step: f64,
    pub nv: usize,
    pub samples: Vec<Complex64>,
    /// `|∬|ψ|² − 1|` of the analytic source restricted to the grid, before
    /// renormalization. Zero for grids built from raw data.
    #[serde(default)]
    pub truncation_error: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SampledGrid {
    pub fn new(
        (u_min, u_step, nu): (f64, f64, usize),
        (v_min, v_step, nv): (f64, f64, usize),
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        require_finite("u_min", u_min)?;
        require_finite("v_min", v_min)?;
        require_positive("u_step", u_step)?;
        require_positive("v_step", v_step)?;
        if nu < 2 || nv < 2 {
            return Err(Error::Domain("sampled grids need at least 2x2 nodes".into()));
        }
        if samples.len() != nu * nv {
            return Err(Error::Format(format!(
                "expected {} samples for a {nu}x{nv} grid, got {}",
                nu * nv,
                samples.len()
            )));
        }
        Ok(SampledGrid {
            u_min,
            u_step,
            nu,
            v_min,
            v_step,
            nv,
            samples,
            truncation_error: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.u_step
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.v_step
    }

    pub fn sample(&self, i: usize, j: usize) -> Complex64 {
        self.samples[i * self.nv + j]
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, u: f64, v: f64) -> Complex64 {
        let pu = (u - self.u_min) / self.u_step;
        let pv = (v - self.v_min) / self.v_step;
        let (lu, lv) = ((self.nu - 1) as f64, (self.nv - 1) as f64);
        let eps = 1e-9;
        if !(-eps..=lu + eps).contains(&pu) || !(-eps..=lv + eps).contains(&pv) {
            return Complex64::new(0.0, 0.0);
        }
        let pu = pu.clamp(0.0, lu);
        let pv = pv.clamp(0.0, lv);
        let i = (pu.floor() as usize).min(self.nu - 2);
        let j = (pv.floor() as usize).min(self.nv - 2);
        let (fu, fv) = (pu - i as f64, pv - j as f64);
        self.sample(i, j) * ((1.0 - fu) * (1.0 - fv))
            + self.sample(i + 1, j) * (fu * (1.0 - fv))
            + self.sample(i, j + 1) * ((1.0 - fu) * fv)
            + self.sample(i + 1, j + 1) * (fu * fv)
    }

    /// Trapezoid estimate of ∬|ψ|² dt₁dt₂.
    pub fn norm(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nu {
            let wi = trapezoid_weight(i, self.nu);
            for j in 0..self.nv {
                total += wi * trapezoid_weight(j, self.nv) * self.sample(i, j).norm_sqr();
            }
        }
        0.5 * total * self.u_step * self.v_step
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for s in &mut self.samples {
            *s *= factor;
        }
        self
    }
}

/// Shape of a two-photon wavefunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiphotonKind {
    Gaussian,
    Rectangular,
    SeparableProduct {
        photon1: OnePhotonEnvelope,
        photon2: OnePhotonEnvelope,
    },
    SampledGrid { grid: SampledGrid },
}

/// Closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Rectangular,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Gaussian => f.write_str("gaussian"),
            Family::Rectangular => f.write_str("rectangular"),
        }
    }
}

/// A two-photon wavefunction ψ(t₁, t₂).
///
/// `coherence_time` (T) is the width along `t₁ + t₂` and `correlation_time`
/// (τ) the width along `t₁ − t₂`. For separable products both are nominal
/// and set to the longer one-photon duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Biphoton {
    pub kind: BiphotonKind,
    pub coherence_time: f64,
    pub correlation_time: f64,
    pub omega1_bar: f64,
    pub omega2_bar: f64,
}

fn check_times(coherence_time: f64, correlation_time: f64) -> Result<()> {
    require_positive("coherence time T", coherence_time)?;
    require_positive("correlation time tau", correlation_time)
}

impl Biphoton {
    pub fn gaussian(
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        Self::analytic(BiphotonKind::Gaussian, coherence_time, correlation_time, omega1_bar, omega2_bar)
    }

    pub fn rectangular(
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        Self::analytic(
            BiphotonKind::Rectangular,
            coherence_time,
            correlation_time,
            omega1_bar,
            omega2_bar,
        )
    }

    pub fn from_family(
        family: Family,
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        match family {
            Family::Gaussian => Self::gaussian(coherence_time, correlation_time, omega1_bar, omega2_bar),
            Family::Rectangular => {
                Self::rectangular(coherence_time, correlation_time, omega1_bar, omega2_bar)
            }
        }
    }

    fn analytic(
        kind: BiphotonKind,
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        check_times(coherence_time, correlation_time)?;
        require_finite("omega1_bar", omega1_bar)?;
        require_finite("omega2_bar", omega2_bar)?;
        Ok(Biphoton {
            kind,
            coherence_time,
            correlation_time,
            omega1_bar,
            omega2_bar,
        })
    }

    /// ψ(t₁, t₂) = ψ₁(t₁) ψ₂(t₂).
    pub fn separable(photon1: OnePhotonEnvelope, photon2: OnePhotonEnvelope) -> Result<Self> {
        let duration = |p: &OnePhotonEnvelope| {
            let (lo, hi) = p.time_range();
            hi - lo
        };
        let nominal = duration(&photon1).max(duration(&photon2));
        let (omega1_bar, omega2_bar) = (photon1.center_frequency, photon2.center_frequency);
        Ok(Biphoton {
            kind: BiphotonKind::SeparableProduct { photon1, photon2 },
            coherence_time: nominal,
            correlation_time: nominal,
            omega1_bar,
            omega2_bar,
        })
    }

    /// Wraps a grid, rejecting it unless its norm is within
    /// [`NORM_TOLERANCE`] of one.
    pub fn sampled(
        grid: SampledGrid,
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        let residual = (grid.norm() - 1.0).abs();
        if residual > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "sampled wavefunction is not normalized (residual {residual:.3e})"
            )));
        }
        Self::sampled_unchecked(grid, coherence_time, correlation_time, omega1_bar, omega2_bar)
    }

    /// Wraps a grid without checking its norm.
    pub fn sampled_unchecked(
        grid: SampledGrid,
        coherence_time: f64,
        correlation_time: f64,
        omega1_bar: f64,
        omega2_bar: f64,
    ) -> Result<Self> {
        check_times(coherence_time, correlation_time)?;
        require_finite("omega1_bar", omega1_bar)?;
        require_finite("omega2_bar", omega2_bar)?;
        Ok(Biphoton {
            kind: BiphotonKind::SampledGrid { grid },
            coherence_time,
            correlation_time,
            omega1_bar,
            omega2_bar,
        })
    }

    /// Same wavefunction with different carrier frequencies.
    pub fn with_carriers(&self, omega1_bar: f64, omega2_bar: f64) -> Result<Self> {
        require_finite("omega1_bar", omega1_bar)?;
        require_finite("omega2_bar", omega2_bar)?;
        let mut out = self.clone();
        if let BiphotonKind::SeparableProduct { photon1, photon2 } = &mut out.kind {
            photon1.center_frequency = omega1_bar;
            photon2.center_frequency = omega2_bar;
        }
        out.omega1_bar = omega1_bar;
        out.omega2_bar = omega2_bar;
        Ok(out)
    }

    pub fn family(&self) -> Option<Family> {
        match self.kind {
            BiphotonKind::Gaussian => Some(Family::Gaussian),
            BiphotonKind::Rectangular => Some(Family::Rectangular),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BiphotonKind::Gaussian => "gaussian",
            BiphotonKind::Rectangular => "rectangular",
            BiphotonKind::SeparableProduct { .. } => "separable_product",
            BiphotonKind::SampledGrid { .. } => "sampled_grid",
        }
    }

    /// ω̄₊ = ω̄₁ + ω̄₂.
    pub fn omega_plus_bar(&self) -> f64 {
        self.omega1_bar + self.omega2_bar
    }

    /// ω̄₋ = (ω̄₁ − ω̄₂)/2.
    pub fn omega_minus_bar(&self) -> f64 {
        0.5 * (self.omega1_bar - self.omega2_bar)
    }

    /// True when τ < T does not hold.
    pub fn outside_regime(&self) -> bool {
        self.correlation_time >= self.coherence_time
    }

    /// Carrier-free amplitude at `(t₁, t₂)`.
    pub fn envelope(&self, t1: f64, t2: f64) -> Complex64 {
        let (u, v) = (t1 + t2, t1 - t2);
        let t = self.coherence_time;
        let tau = self.correlation_time;
        match &self.kind {
            BiphotonKind::Gaussian => {
                let a1 = gaussian_time_norm(t, tau);
                Complex64::new(
                    a1 * (-u * u / (16.0 * t * t) - v * v / (4.0 * tau * tau)).exp(),
                    0.0,
                )
            }
            BiphotonKind::Rectangular => {
                let a2 = rectangular_time_norm(t, tau);
                Complex64::new(a2 * (-u * u / (16.0 * t * t)).exp() * window(v, tau), 0.0)
            }
            BiphotonKind::SeparableProduct { photon1, photon2 } => {
                photon1.envelope(t1) * photon2.envelope(t2)
            }
            BiphotonKind::SampledGrid { grid } => grid.interpolate(u, v),
        }
    }

    /// `e^{-iω̄₁t₁} e^{-iω̄₂t₂}`.
    pub fn carrier(&self, t1: f64, t2: f64) -> Complex64 {
        Complex64::from_polar(1.0, -(self.omega1_bar * t1 + self.omega2_bar * t2))
    }

    /// ψ(t₁, t₂) including carrier phases.
    pub fn eval_time(&self, t1: f64, t2: f64) -> Complex64 {
        self.envelope(t1, t2) * self.carrier(t1, t2)
    }

    /// Breakpoints in `u` and `v` enclosing the support of the envelope.
    /// `v` always contains 0, where the time-ordering step switches.
    pub(crate) fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let t = self.coherence_time;
        let tau = self.correlation_time;
        let u_half = 4.0 * AMPLITUDE_EFOLDS.sqrt() * t;
        match &self.kind {
            BiphotonKind::Gaussian => {
                let v_half = 2.0 * AMPLITUDE_EFOLDS.sqrt() * tau;
                (vec![-u_half, 0.0, u_half], vec![-v_half, 0.0, v_half])
            }
            BiphotonKind::Rectangular => (vec![-u_half, 0.0, u_half], vec![-tau, 0.0, tau]),
            BiphotonKind::SeparableProduct { photon1, photon2 } => {
                let (a1, b1) = photon1.time_range();
                let (a2, b2) = photon2.time_range();
                let (u_lo, u_hi) = (a1 + a2, b1 + b2);
                let (v_lo, v_hi) = (a1 - b2, b1 - a2);
                (
                    vec![u_lo, 0.5 * (u_lo + u_hi), u_hi],
                    sorted_breaks(v_lo, v_hi),
                )
            }
            BiphotonKind::SampledGrid { grid } => {
                let u_hi = grid.u(grid.nu - 1);
                let v_hi = grid.v(grid.nv - 1);
                (vec![grid.u_min, u_hi], sorted_breaks(grid.v_min, v_hi))
            }
        }
    }
}

fn sorted_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    if lo < 0.0 && hi > 0.0 {
        out.push(0.0);
    }
    out.push(hi);
    out
}

/// `|∬|ψ|² dt₁dt₂ − 1|`, by quadrature in the rotated coordinates (or the
/// trapezoid rule on the stored nodes for sampled grids).
pub fn normalization_check(b: &Biphoton) -> Result<f64> {
    let norm = match &b.kind {
        BiphotonKind::SampledGrid { grid } => grid.norm(),
        _ => {
            let (u, v) = b.support();
            let settings = QuadSettings {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                ..QuadSettings::default()
            };
            adaptive_2d("wavefunction norm", &u, &v, &settings, |u, v| {
                0.5 * b.envelope(0.5 * (u + v), 0.5 * (u - v)).norm_sqr()
            })?
            .value
        }
    };
    Ok((norm - 1.0).abs())
}

/// Layout of a sampled grid, symmetric about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub u_half_extent: f64,
    pub v_half_extent: f64,
    pub max_samples: usize,
}

impl GridSpec {
    /// Default extents: ±16T in `u` (eight standard deviations of |ψ|²),
    /// ±8τ in `v` for the Gaussian and exactly ±τ for the rectangular window.
    pub fn for_biphoton(b: &Biphoton, nu: usize, nv: usize) -> Self {
        let (u, v) = b.support();
        let (u_half, v_half) = match b.kind {
            BiphotonKind::Gaussian => (16.0 * b.coherence_time, 8.0 * b.correlation_time),
            BiphotonKind::Rectangular => (16.0 * b.coherence_time, b.correlation_time),
            _ => (
                u[u.len() - 1].max(-u[0]),
                v[v.len() - 1].max(-v[0]),
            ),
        };
        GridSpec {
            nu,
            nv,
            u_half_extent: u_half,
            v_half_extent: v_half,
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

/// Samples `b` on a uniform `(u, v)` grid, renormalizes to unit norm and
/// records the truncation error of the grid.
pub fn make_sampled(b: &Biphoton, spec: &GridSpec) -> Result<Biphoton> {
    if spec.nu < 2 || spec.nv < 2 {
        return Err(Error::Domain("sampled grids need at least 2x2 nodes".into()));
    }
    let count = spec.nu.checked_mul(spec.nv).unwrap_or(usize::MAX);
    if count > spec.max_samples {
        return Err(Error::Resource(format!(
            "{}x{} grid has {count} samples, cap is {}",
            spec.nu, spec.nv, spec.max_samples
        )));
    }
    require_positive("u_half_extent", spec.u_half_extent)?;
    require_positive("v_half_extent", spec.v_half_extent)?;

    let u_step = 2.0 * spec.u_half_extent / (spec.nu - 1) as f64;
    let v_step = 2.0 * spec.v_half_extent / (spec.nv - 1) as f64;
    let mut samples = Vec::with_capacity(count);
    for i in 0..spec.nu {
        let u = -spec.u_half_extent + i as f64 * u_step;
        for j in 0..spec.nv {
            let v = -spec.v_half_extent + j as f64 * v_step;
            samples.push(b.envelope(0.5 * (u + v), 0.5 * (u - v)));
        }
    }
    let mut grid = SampledGrid::new(
        (-spec.u_half_extent, u_step, spec.nu),
        (-spec.v_half_extent, v_step, spec.nv),
        samples,
    )?;

    let raw = grid.norm();
    if raw <= 0.0 {
        return Err(Error::Domain("sampled wavefunction vanishes on the grid".into()));
    }
    let truncation_error = (raw - 1.0).abs();
    let mut warnings = Vec::new();
    if matches!(b.kind, BiphotonKind::Gaussian | BiphotonKind::Rectangular)
        && spec.u_half_extent < 8.0 * b.coherence_time
    {
        warnings.push(format!(
            "u extent ±{} is narrower than ±8T; envelope truncated",
            spec.u_half_extent
        ));
    }
    if matches!(b.kind, BiphotonKind::Gaussian) && spec.v_half_extent < 8.0 * b.correlation_time {
        warnings.push(format!(
            "v extent ±{} is narrower than ±8tau; envelope truncated",
            spec.v_half_extent
        ));
    }
    if truncation_error > NORM_TOLERANCE {
        warnings.push(format!("truncation error {truncation_error:.3e} before renormalization"));
    }
    grid = grid.scaled(1.0 / raw.sqrt());
    grid.truncation_error = truncation_error;
    grid.warnings = warnings;

    Biphoton::sampled_unchecked(
        grid,
        b.coherence_time,
        b.correlation_time,
        b.omega1_bar,
        b.omega2_bar,
    )
}

const GRID_FORMAT: &str = "tpa-sampled-grid";
const GRID_VERSION: u32 = 1;

/// On-disk layout of a sampled biphoton (see `docs/formats.md`).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridFile {
    format: String,
    version: u32,
    coherence_time: f64,
    correlation_time: f64,
    omega1_bar: f64,
    omega2_bar: f64,
    u_min: f64,
    u_step: f64,
    nu: usize,
    v_min: f64,
    v_step: f64,
    nv: usize,
    #[serde(default)]
    truncation_error: f64,
    /// Interleaved `re, im` pairs, `u` outer.
    samples: Vec<f64>,
}

/// Serializes a sampled biphoton to the JSON grid container.
pub fn grid_to_json(b: &Biphoton) -> Result<String> {
    let BiphotonKind::SampledGrid { grid } = &b.kind else {
        return Err(Error::Usage(format!(
            "only sampled wavefunctions can be exported, got {}",
            b.kind_name()
        )));
    };
    let file = GridFile {
        format: GRID_FORMAT.into(),
        version: GRID_VERSION,
        coherence_time: b.coherence_time,
        correlation_time: b.correlation_time,
        omega1_bar: b.omega1_bar,
        omega2_bar: b.omega2_bar,
        u_min: grid.u_min,
        u_step: grid.u_step,
        nu: grid.nu,
        v_min: grid.v_min,
        v_step: grid.v_step,
        nv: grid.nv,
        truncation_error: grid.truncation_error,
        samples: grid.samples.iter().flat_map(|c| [c.re, c.im]).collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

/// Parses the JSON grid container. The wavefunction must be normalized.
pub fn grid_from_json(text: &str) -> Result<Biphoton> {
    let file: GridFile = serde_json::from_str(text)?;
    if file.format != GRID_FORMAT || file.version != GRID_VERSION {
        return Err(Error::Format(format!(
            "unsupported grid container {} v{}",
            file.format, file.version
        )));
    }
    if file.samples.len() % 2 != 0 {
        return Err(Error::Format("odd number of sample components".into()));
    }
    let samples = file
        .samples
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    let mut grid = SampledGrid::new(
        (file.u_min, file.u_step, file.nu),
        (file.v_min, file.v_step, file.nv),
        samples,
    )?;
    grid.truncation_error = file.truncation_error;
    Biphoton::sampled(
        grid,
        file.coherence_time,
        file.correlation_time,
        file.omega1_bar,
        file.omega2_bar,
    )
}

pub fn write_grid(b: &Biphoton, path: &Path) -> Result<()> {
    fs::write(path, grid_to_json(b)?)?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<Biphoton> {
    grid_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_peak_is_normalization_factor() {
        let b = Biphoton::gaussian(1.0, 0.01, 3.0, 5.0).unwrap();
        let expected = 1.0 / (2.0 * PI * 0.01).sqrt();
        assert_relative_eq!(b.eval_time(0.0, 0.0).re, expected, max_relative = 1e-15);
    }

    #[test]
    fn rectangular_vanishes_outside_window() {
        let b = Biphoton::rectangular(1.0, 0.01, 3.0, 5.0).unwrap();
        for u in [-3.0, 0.0, 0.4, 7.0] {
            let v = 1.5 * 0.01;
            let value = b.eval_time(0.5 * (u + v), 0.5 * (u - v));
            assert_eq!(value.norm(), 0.0);
        }
    }

    #[test]
    fn window_midpoint_convention() {
        assert_eq!(window(0.2, 0.2), 0.5);
        assert_eq!(window(-0.2, 0.2), 0.5);
        assert_eq!(window(0.1, 0.2), 1.0);
        assert_eq!(window(0.3, 0.2), 0.0);
    }

    #[test]
    fn exchange_symmetry_with_equal_carriers() {
        let b = Biphoton::gaussian(1.0, 0.1, 2.0, 2.0).unwrap();
        let a = b.eval_time(0.13, -0.07);
        let c = b.eval_time(-0.07, 0.13);
        assert_relative_eq!(a.re, c.re, max_relative = 1e-14);
        assert_relative_eq!(a.im, c.im, max_relative = 1e-14);
    }

    #[test]
    fn invalid_times_rejected() {
        assert!(Biphoton::gaussian(0.0, 0.1, 0.0, 0.0).is_err());
        assert!(Biphoton::rectangular(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(Biphoton::gaussian(1.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn regime_violation_is_flagged_not_rejected() {
        let b = Biphoton::gaussian(0.1, 1.0, 0.0, 0.0).unwrap();
        assert!(b.outside_regime());
    }

    #[test]
    fn analytic_norms() {
        for b in [
            Biphoton::gaussian(1.0, 0.01, 0.0, 0.0).unwrap(),
            Biphoton::rectangular(1.0, 0.01, 0.0, 0.0).unwrap(),
        ] {
            assert!(normalization_check(&b).unwrap() < 1e-8, "{}", b.kind_name());
        }
    }

    #[test]
    fn scaled_grid_residual_is_three() {
        let b = Biphoton::gaussian(1.0, 0.1, 0.0, 0.0).unwrap();
        let sampled = make_sampled(&b, &GridSpec::for_biphoton(&b, 65, 65)).unwrap();
        let BiphotonKind::SampledGrid { grid } = sampled.kind else {
            unreachable!()
        };
        let doubled = grid.scaled(2.0);
        assert!(Biphoton::sampled(doubled.clone(), 1.0, 0.1, 0.0, 0.0).is_err());
        let b2 = Biphoton::sampled_unchecked(doubled, 1.0, 0.1, 0.0, 0.0).unwrap();
        let residual = normalization_check(&b2).unwrap();
        assert_relative_eq!(residual, 3.0, max_relative = 1e-12);
        assert!(residual > NORM_TOLERANCE);
    }

    #[test]
    fn grid_cap_is_enforced() {
        let b = Biphoton::gaussian(1.0, 0.1, 0.0, 0.0).unwrap();
        let mut spec = GridSpec::for_biphoton(&b, 100, 100);
        spec.max_samples = 9_999;
        assert!(matches!(make_sampled(&b, &spec), Err(Error::Resource(_))));
    }

    #[test]
    fn export_requires_sampled_kind() {
        let b = Biphoton::gaussian(1.0, 0.1, 0.0, 0.0).unwrap();
        assert!(matches!(grid_to_json(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn sampled_envelope_interpolates_linearly() {
        let env = OnePhotonEnvelope::sampled(
            0.0,
            0.0,
            1.0,
            vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(env.envelope(0.5).re, 1.0);
        assert_eq!(env.envelope(-0.1).re, 0.0);
        assert_eq!(env.envelope(2.5).re, 0.0);
    }
}
