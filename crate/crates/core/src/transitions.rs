//! One- and two-photon excitation probabilities.
//!
//! `P₁ = 2πr|Ψ(Ω)|²` for a single photon, `P₁ = 2πr₁ ∫dω₂ |Ψ(Ω_a, ω₂)|²`
//! for one photon of a pair, and `P₂ = 4π²r₁r₂|Ψ̃(Ω_a, Ω_b)|²` for the pair.
//! The closed forms assume two-photon resonance `ω̄₊ = Ω_a + Ω_b`; their
//! `P₁` also assumes `T ≫ τ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::spectral::{spectral_amplitude, JointSpectrum, SpectralPath};
use crate::specfun::{plasma_dispersion, sinc};
use crate::wavefunctions::{Biphoton, Family, OnePhotonEnvelope};

/// Probabilities above this are outside the trusted perturbative regime.
pub const PERTURBATIVE_BOUND: f64 = 0.1;
/// `|ω̄₊ − (Ω_a + Ω_b)|·T` above which the pair is off two-photon resonance.
pub const RESONANCE_TOLERANCE: f64 = 3.0;
/// `T/τ` below which the `T ≫ τ` closed forms are not trusted.
pub const MIN_T_OVER_TAU: f64 = 10.0;
/// Relative level (to the resonant value) treated as an exact zero.
pub const ZERO_LEVEL: f64 = 1e-12;

/// Ladder `g → a → b` driven by photon 1 then photon 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelAtom {
    pub omega_a: f64,
    pub omega_b: f64,
    pub r1: f64,
    pub r2: f64,
}

impl ThreeLevelAtom {
    pub fn new(omega_a: f64, omega_b: f64, r1: f64, r2: f64) -> Result<Self> {
        require_positive("Omega_a", omega_a)?;
        require_positive("Omega_b", omega_b)?;
        require_positive("r1", r1)?;
        require_positive("r2", r2)?;
        Ok(ThreeLevelAtom {
            omega_a,
            omega_b,
            r1,
            r2,
        })
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.omega_a, self.omega_b, self.r1, self.r2).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelAtom {
    pub omega: f64,
    pub r: f64,
}

impl TwoLevelAtom {
    pub fn new(omega: f64, r: f64) -> Result<Self> {
        require_positive("Omega", omega)?;
        require_positive("r", r)?;
        Ok(TwoLevelAtom { omega, r })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub perturbative_bound_exceeded: bool,
    pub two_photon_resonance_off: bool,
    pub t_over_tau_small: bool,
    pub one_photon_suppressed: bool,
    pub two_photon_transparent: bool,
}

impl Flags {
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.perturbative_bound_exceeded {
            out.push("perturbative_bound_exceeded");
        }
        if self.two_photon_resonance_off {
            out.push("two_photon_resonance_off");
        }
        if self.t_over_tau_small {
            out.push("t_over_tau_small");
        }
        if self.one_photon_suppressed {
            out.push("one_photon_suppressed");
        }
        if self.two_photon_transparent {
            out.push("two_photon_transparent");
        }
        out
    }

    fn merge(self, other: Flags) -> Flags {
        Flags {
            perturbative_bound_exceeded: self.perturbative_bound_exceeded
                || other.perturbative_bound_exceeded,
            two_photon_resonance_off: self.two_photon_resonance_off || other.two_photon_resonance_off,
            t_over_tau_small: self.t_over_tau_small || other.t_over_tau_small,
            one_photon_suppressed: self.one_photon_suppressed || other.one_photon_suppressed,
            two_photon_transparent: self.two_photon_transparent || other.two_photon_transparent,
        }
    }
}

/// A probability together with the validity flags raised while computing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionResult {
    pub p1: f64,
    pub p2: f64,
    /// `P₂/P₁`; `None` when `P₁` is exactly zero.
    pub ratio: Option<f64>,
    pub detuning_delta: f64,
    pub flags: Flags,
}

/// Δ = (Ω_a − Ω_b)/2 − ω̄₋.
pub fn detuning(b: &Biphoton, atom: &ThreeLevelAtom) -> f64 {
    0.5 * (atom.omega_a - atom.omega_b) - b.omega_minus_bar()
}

/// Biphoton of the given family tuned to two-photon resonance with detuning
/// `delta` from the intermediate level.
pub fn resonant_biphoton(
    family: Family,
    atom: &ThreeLevelAtom,
    coherence_time: f64,
    correlation_time: f64,
    delta: f64,
) -> Result<Biphoton> {
    require_finite("delta", delta)?;
    let plus = atom.omega_a + atom.omega_b;
    let minus = 0.5 * (atom.omega_a - atom.omega_b) - delta;
    Biphoton::from_family(
        family,
        coherence_time,
        correlation_time,
        0.5 * plus + minus,
        0.5 * plus - minus,
    )
}

/// `P₁ = 2πr|Ψ(Ω)|²` for a single-photon wavepacket.
pub fn p1_single_photon(env: &OnePhotonEnvelope, atom: &TwoLevelAtom) -> Result<Probability> {
    TwoLevelAtom::new(atom.omega, atom.r)?;
    let value = 2.0 * PI * atom.r * env.spectrum(atom.omega).norm_sqr();
    Ok(Probability {
        value,
        flags: Flags {
            perturbative_bound_exceeded: value > PERTURBATIVE_BOUND,
            ..Flags::default()
        },
    })
}

fn regime_flags(b: &Biphoton, atom: &ThreeLevelAtom) -> Flags {
    let off = (b.omega_plus_bar() - (atom.omega_a + atom.omega_b)).abs() * b.coherence_time;
    Flags {
        two_photon_resonance_off: off > RESONANCE_TOLERANCE,
        t_over_tau_small: b.coherence_time / b.correlation_time < MIN_T_OVER_TAU,
        ..Flags::default()
    }
}

/// Resonant, on-centre values `π²r₁r₂A²` and `√2π^{3/2}r₁A²/T` used as the
/// reference scale for zero detection.
fn reference_scales(family: Family, atom: &ThreeLevelAtom, t: f64, tau: f64) -> (f64, f64) {
    let a_sq = spectral_amplitude(family, t, tau).powi(2);
    (
        2f64.sqrt() * PI.powf(1.5) * atom.r1 * a_sq / t,
        PI * PI * atom.r1 * atom.r2 * a_sq,
    )
}

/// `P₂ = 4π²r₁r₂|Ψ̃(Ω_a, Ω_b)|²`.
pub fn p2_pair(b: &Biphoton, atom: &ThreeLevelAtom, path: SpectralPath) -> Result<Probability> {
    atom.validate()?;
    let amplitude = JointSpectrum::with_evaluator(b, path).time_ordered(atom.omega_a, atom.omega_b)?;
    let value = 4.0 * PI * PI * atom.r1 * atom.r2 * amplitude.norm_sqr();
    let mut flags = regime_flags(b, atom);
    flags.t_over_tau_small = false;
    flags.perturbative_bound_exceeded = value > PERTURBATIVE_BOUND;
    if let Some(family) = b.family() {
        let (_, p2_ref) = reference_scales(family, atom, b.coherence_time, b.correlation_time);
        flags.two_photon_transparent = value <= ZERO_LEVEL * p2_ref;
    }
    Ok(Probability { value, flags })
}

/// `P₁ = 2πr₁ ∫dω₂ |Ψ(Ω_a, ω₂)|²`, integrating the exact joint spectrum
/// numerically over the idler frequency.
pub fn p1_pair(b: &Biphoton, atom: &ThreeLevelAtom) -> Result<Probability> {
    atom.validate()?;
    let marginal = JointSpectrum::new(b).marginal(atom.omega_a)?;
    let value = 2.0 * PI * atom.r1 * marginal;
    let mut flags = regime_flags(b, atom);
    flags.two_photon_resonance_off = false;
    flags.perturbative_bound_exceeded = value > PERTURBATIVE_BOUND;
    if let Some(family) = b.family() {
        let (p1_ref, _) = reference_scales(family, atom, b.coherence_time, b.correlation_time);
        flags.one_photon_suppressed = value <= ZERO_LEVEL * p1_ref;
    }
    Ok(Probability { value, flags })
}

/// `P₁`, `P₂` and their ratio for any biphoton; `P₂` through `path`.
pub fn evaluate(b: &Biphoton, atom: &ThreeLevelAtom, path: SpectralPath) -> Result<TransitionResult> {
    let p1 = p1_pair(b, atom)?;
    let p2 = p2_pair(b, atom, path)?;
    Ok(TransitionResult {
        p1: p1.value,
        p2: p2.value,
        ratio: (p1.value > 0.0).then(|| p2.value / p1.value),
        detuning_delta: detuning(b, atom),
        flags: p1.flags.merge(p2.flags),
    })
}

fn closed_form_flags(
    family: Family,
    atom: &ThreeLevelAtom,
    t: f64,
    tau: f64,
    p1: f64,
    p2: f64,
) -> Flags {
    let (p1_ref, p2_ref) = reference_scales(family, atom, t, tau);
    Flags {
        perturbative_bound_exceeded: p1 > PERTURBATIVE_BOUND || p2 > PERTURBATIVE_BOUND,
        two_photon_resonance_off: false,
        t_over_tau_small: t / tau < MIN_T_OVER_TAU,
        one_photon_suppressed: p1 <= ZERO_LEVEL * p1_ref,
        two_photon_transparent: p2 <= ZERO_LEVEL * p2_ref,
    }
}

fn check_closed_form_inputs(atom: &ThreeLevelAtom, t: f64, tau: f64, delta: f64) -> Result<()> {
    require_positive("r1", atom.r1)?;
    require_positive("r2", atom.r2)?;
    require_positive("coherence time T", t)?;
    require_positive("correlation time tau", tau)?;
    require_finite("delta", delta)
}

/// Gaussian wavefunction at resonance:
/// `P₂ = π²r₁r₂A₁²|F(Δτ)|²`, `P₁ = √2π^{3/2}r₁A₁²e^{−2(Δτ)²}/T`,
/// `R_G = √(π/2) r₂T |F(Δτ)|² / e^{−2(Δτ)²}`.
pub fn closed_form_gaussian(
    atom: &ThreeLevelAtom,
    coherence_time: f64,
    correlation_time: f64,
    delta: f64,
) -> Result<TransitionResult> {
    check_closed_form_inputs(atom, coherence_time, correlation_time, delta)?;
    let (t, tau) = (coherence_time, correlation_time);
    let a_sq = spectral_amplitude(Family::Gaussian, t, tau).powi(2);
    let xi = delta * tau;
    let f_sq = plasma_dispersion(xi)?.norm_sqr();
    let envelope = (-2.0 * xi * xi).exp();
    let p2 = PI * PI * atom.r1 * atom.r2 * a_sq * f_sq;
    let p1 = 2f64.sqrt() * PI.powf(1.5) * atom.r1 * a_sq * envelope / t;
    let ratio = (p1 > 0.0).then(|| (PI / 2.0).sqrt() * atom.r2 * t * f_sq / envelope);
    Ok(TransitionResult {
        p1,
        p2,
        ratio,
        detuning_delta: delta,
        flags: closed_form_flags(Family::Gaussian, atom, t, tau, p1, p2),
    })
}

/// Rectangular wavefunction at resonance:
/// `P₂ = π²r₁r₂A₂² sinc²(Δτ/2)`, `P₁ = √2π^{3/2}r₁A₂² sinc²(Δτ)/T`,
/// `R_r = √(π/2) r₂T sinc²(Δτ/2) / sinc²(Δτ)`.
pub fn closed_form_rectangular(
    atom: &ThreeLevelAtom,
    coherence_time: f64,
    correlation_time: f64,
    delta: f64,
) -> Result<TransitionResult> {
    check_closed_form_inputs(atom, coherence_time, correlation_time, delta)?;
    let (t, tau) = (coherence_time, correlation_time);
    let a_sq = spectral_amplitude(Family::Rectangular, t, tau).powi(2);
    let xi = delta * tau;
    let half_sq = sinc(0.5 * xi).powi(2);
    let full_sq = sinc(xi).powi(2);
    let p2 = PI * PI * atom.r1 * atom.r2 * a_sq * half_sq;
    let p1 = 2f64.sqrt() * PI.powf(1.5) * atom.r1 * a_sq * full_sq / t;
    let ratio = (p1 > 0.0).then(|| (PI / 2.0).sqrt() * atom.r2 * t * half_sq / full_sq);
    Ok(TransitionResult {
        p1,
        p2,
        ratio,
        detuning_delta: delta,
        flags: closed_form_flags(Family::Rectangular, atom, t, tau, p1, p2),
    })
}

pub fn closed_form(
    family: Family,
    atom: &ThreeLevelAtom,
    coherence_time: f64,
    correlation_time: f64,
    delta: f64,
) -> Result<TransitionResult> {
    match family {
        Family::Gaussian => closed_form_gaussian(atom, coherence_time, correlation_time, delta),
        Family::Rectangular => closed_form_rectangular(atom, coherence_time, correlation_time, delta),
    }
}

/// One `(T, τ, Δ)` sample of a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub coherence_time: f64,
    pub correlation_time: f64,
    pub delta: f64,
}

/// Three one-parameter sweeps, each varying one of T, τ, Δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub family: Family,
    pub t_sweep: Vec<ScalingPoint>,
    pub tau_sweep: Vec<ScalingPoint>,
    pub delta_sweep: Vec<ScalingPoint>,
}

fn log_space(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

impl ScalingSweep {
    /// Gaussian: Δτ ∈ [5, 50] at τ = 0.01; T ∈ [1, 10] at Δτ = 10;
    /// τ ∈ [0.001, 0.01] at Δ = 5000.
    /// Rectangular: the same ranges restricted to the sinc² envelope peaks
    /// Δτ = (2k+1)π.
    pub fn canonical(family: Family) -> Self {
        let point = |t, tau, delta| ScalingPoint {
            coherence_time: t,
            correlation_time: tau,
            delta,
        };
        match family {
            Family::Gaussian => ScalingSweep {
                family,
                t_sweep: log_space(1.0, 10.0, 10)
                    .into_iter()
                    .map(|t| point(t, 0.01, 1000.0))
                    .collect(),
                tau_sweep: log_space(0.001, 0.01, 10)
                    .into_iter()
                    .map(|tau| point(1.0, tau, 5000.0))
                    .collect(),
                delta_sweep: log_space(5.0, 50.0, 12)
                    .into_iter()
                    .map(|dt| point(1.0, 0.01, dt / 0.01))
                    .collect(),
            },
            Family::Rectangular => {
                let peak = |k: usize| (2 * k + 1) as f64 * PI;
                let delta_tau_fixed = peak(1) / 0.001;
                ScalingSweep {
                    family,
                    t_sweep: log_space(1.0, 10.0, 10)
                        .into_iter()
                        .map(|t| point(t, 0.01, peak(1) / 0.01))
                        .collect(),
                    tau_sweep: (1..=14)
                        .map(|k| point(1.0, peak(k) / delta_tau_fixed, delta_tau_fixed))
                        .collect(),
                    delta_sweep: (1..=7).map(|k| point(1.0, 0.01, peak(k) / 0.01)).collect(),
                }
            }
        }
    }
}

/// Fitted power-law exponents `P₂ ∝ T^a τ^b Δ^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub t_exponent: f64,
    pub tau_exponent: f64,
    pub delta_exponent: f64,
    /// Largest absolute residual of the three log-log fits.
    pub max_log_residual: f64,
}

fn log_log_slope(what: &str, xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if pts.len() < 2 || pts.len() != xs.len() || sxx < 1e-12 {
        return Err(Error::Accuracy {
            what: format!("{what} regression is ill-conditioned"),
            estimate: sxx,
            tolerance: 1e-12,
        });
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok((slope, residual))
}

/// Fits the exponents of `P₂` against T, τ and Δ in the asymptotic regime
/// `Δτ ≫ 1`.
pub fn scaling_law_check(sweep: &ScalingSweep, path: SpectralPath) -> Result<ScalingFit> {
    let atom = ThreeLevelAtom::new(1.0, 1.0, 1.0, 1.0)?;
    let family = sweep.family;
    let p2_at = |p: &ScalingPoint| -> Result<f64> {
        let xi = p.delta * p.correlation_time;
        if xi.abs() < 3.0 {
            return Err(Error::Domain(format!(
                "scaling points need delta*tau >> 1, got {xi}"
            )));
        }
        if family == Family::Rectangular && (0.5 * xi).sin().abs() < 0.1 {
            return Err(Error::Domain(format!(
                "delta*tau = {xi} is too close to a zero of sinc(delta*tau/2)"
            )));
        }
        let b = resonant_biphoton(family, &atom, p.coherence_time, p.correlation_time, p.delta)?;
        Ok(p2_pair(&b, &atom, path)?.value)
    };
    let fit = |what: &str, pts: &[ScalingPoint], axis: fn(&ScalingPoint) -> f64| -> Result<(f64, f64)> {
        let xs: Vec<f64> = pts.iter().map(axis).collect();
        let ys = pts.iter().map(p2_at).collect::<Result<Vec<_>>>()?;
        log_log_slope(what, &xs, &ys)
    };
    let (t_exponent, rt) = fit("T", &sweep.t_sweep, |p| p.coherence_time)?;
    let (tau_exponent, rtau) = fit("tau", &sweep.tau_sweep, |p| p.correlation_time)?;
    let (delta_exponent, rd) = fit("delta", &sweep.delta_sweep, |p| p.delta.abs())?;
    Ok(ScalingFit {
        t_exponent,
        tau_exponent,
        delta_exponent,
        max_log_residual: rt.max(rtau).max(rd),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransparencyPoints {
    /// τ = 2πn/|Δ|, n = 1..=n_max: two-photon absorption vanishes.
    pub two_photon_zeros: Vec<f64>,
    /// τ = π(2n+1)/|Δ|, n = 0..n_max: one-photon absorption vanishes while
    /// two-photon absorption is maximal on its envelope.
    pub one_photon_zeros_with_p2_max: Vec<f64>,
}

/// Correlation times at which the rectangular wavefunction is transparent
/// to two-photon absorption, and those at which one-photon absorption is
/// suppressed. Every point is checked against the closed forms.
pub fn transparency_points(delta: f64, n_max: usize) -> Result<TransparencyPoints> {
    require_finite("delta", delta)?;
    if delta == 0.0 {
        return Err(Error::Domain("transparency points need a nonzero detuning".into()));
    }
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let d = delta.abs();
    let two_photon_zeros: Vec<f64> = (1..=n_max).map(|n| 2.0 * PI * n as f64 / d).collect();
    let one_photon_zeros_with_p2_max: Vec<f64> =
        (0..n_max).map(|n| PI * (2 * n + 1) as f64 / d).collect();

    let atom = ThreeLevelAtom::new(1.0, 1.0, 1.0, 1.0)?;
    for &tau in &two_photon_zeros {
        let r = closed_form_rectangular(&atom, 100.0 * tau, tau, delta)?;
        if r.p2.abs() >= 1e-12 {
            return Err(Error::Accuracy {
                what: format!("P2 at tau = {tau}"),
                estimate: r.p2,
                tolerance: 1e-12,
            });
        }
    }
    for &tau in &one_photon_zeros_with_p2_max {
        let r = closed_form_rectangular(&atom, 100.0 * tau, tau, delta)?;
        if r.p1.abs() >= 1e-12 {
            return Err(Error::Accuracy {
                what: format!("P1 at tau = {tau}"),
                estimate: r.p1,
                tolerance: 1e-12,
            });
        }
    }
    Ok(TransparencyPoints {
        two_photon_zeros,
        one_photon_zeros_with_p2_max,
    })
}
