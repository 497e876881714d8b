//! Special functions for the closed-form spectra: Dawson's integral, the
//! plasma dispersion function on the real axis, `sinc`, and the spectral
//! image of the Heaviside step.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quadrature::{Nodes, Rule};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Beyond this point Dawson's integral is taken from its asymptotic series.
const DAWSON_SWITCHOVER: f64 = 6.0;
const ANCHOR_SPACING: f64 = 0.25;
const RK_TOL: f64 = 1e-15;

/// Dawson's integral `D(x) = exp(-x²) ∫₀ˣ exp(y²) dy`.
pub fn dawson(x: f64) -> Result<f64> {
    require_finite("dawson argument", x)?;
    let ax = x.abs();
    let d = if ax > DAWSON_SWITCHOVER {
        dawson_asymptotic(ax)
    } else {
        dawson_ode(ax)
    };
    Ok(d.copysign(x))
}

/// Asymptotic series `Σ (2k-1)!! / (2^{k+1} x^{2k+1})`, summed up to its
/// smallest term.
fn dawson_asymptotic(x: f64) -> f64 {
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 0.5 / x;
    let mut sum = term;
    for k in 0.. {
        let next = term * (2 * k + 1) as f64 * inv2x2;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        sum += next;
        term = next;
    }
    sum
}

/// `D' = 1 - 2xD`.
fn dawson_rhs(x: f64, d: f64) -> f64 {
    1.0 - 2.0 * x * d
}

/// One Dormand-Prince 5(4) step. Returns the fifth-order update and the
/// embedded error estimate.
fn dp45_step(x: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = dawson_rhs(x, y);
    let k2 = dawson_rhs(x + h / 5.0, y + h * (k1 / 5.0));
    let k3 = dawson_rhs(x + 0.3 * h, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = dawson_rhs(
        x + 0.8 * h,
        y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
    );
    let k5 = dawson_rhs(
        x + 8.0 / 9.0 * h,
        y + h
            * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                - 212.0 / 729.0 * k4),
    );
    let k6 = dawson_rhs(
        x + h,
        y + h
            * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                + 46732.0 / 5247.0 * k3
                + 49.0 / 176.0 * k4
                - 5103.0 / 18656.0 * k5),
    );
    let y5 = y + h
        * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
            - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = dawson_rhs(x + h, y5);
    let y4 = y + h
        * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4
            - 92097.0 / 339200.0 * k5
            + 187.0 / 2100.0 * k6
            + k7 / 40.0);
    (y5, (y5 - y4).abs())
}

/// Adaptive integration of the Dawson ODE from `(x0, y0)` to `x1`.
fn integrate_dawson(x0: f64, y0: f64, x1: f64) -> f64 {
    let span = x1 - x0;
    if span == 0.0 {
        return y0;
    }
    let dir = span.signum();
    let (mut x, mut y) = (x0, y0);
    let mut h = dir * span.abs().min(0.05);
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let (y_new, err) = dp45_step(x, y, h);
        let tol = RK_TOL * (1.0 + y.abs());
        if err <= tol {
            x += h;
            y = y_new;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}

/// Values of `D` on a uniform grid over `[0, DAWSON_SWITCHOVER]`, obtained
/// by one sweep of the ODE from `D(0) = 0`.
fn anchors() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = (DAWSON_SWITCHOVER / ANCHOR_SPACING).round() as usize;
        let mut table = Vec::with_capacity(n + 1);
        let mut d = 0.0;
        table.push(d);
        for k in 0..n {
            let x0 = k as f64 * ANCHOR_SPACING;
            d = integrate_dawson(x0, d, x0 + ANCHOR_SPACING);
            table.push(d);
        }
        table
    })
}

fn dawson_ode(x: f64) -> f64 {
    let table = anchors();
    let k = ((x / ANCHOR_SPACING).round() as usize).min(table.len() - 1);
    integrate_dawson(k as f64 * ANCHOR_SPACING, table[k], x)
}

/// Plasma dispersion function evaluated on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaDispersionValue {
    pub re: f64,
    pub im: f64,
}

impl PlasmaDispersionValue {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// `F(ξ) = exp(-ξ²) (1 + 2i/√π ∫₀^ξ exp(y²) dy) = exp(-ξ²) + 2i/√π D(ξ)`.
pub fn plasma_dispersion(xi: f64) -> Result<PlasmaDispersionValue> {
    require_finite("plasma dispersion argument", xi)?;
    Ok(PlasmaDispersionValue {
        re: (-xi * xi).exp(),
        im: FRAC_2_SQRT_PI * dawson(xi)?,
    })
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Quadrature layout for [`heaviside_kernel_apply`].
///
/// The principal-value integral is folded onto `w > 0` as
/// `∫₀^extent [f(ω-w) - f(ω+w)] / w dw`, which is regular at the pole.
/// The first panel `[0, pv_halfwidth]` straddles the folded pole; the rest of
/// the range is cut into panels of width `panel_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSettings {
    pub pv_halfwidth: f64,
    pub panel_width: f64,
    pub extent: f64,
    pub order: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: u32,
}

impl KernelSettings {
    /// Settings sized for a spectrum of characteristic width `width`.
    pub fn for_width(width: f64, extent: f64) -> Self {
        KernelSettings {
            pv_halfwidth: 0.5 * width,
            panel_width: 0.5 * width,
            extent,
            order: 12,
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_refinements: 6,
        }
    }

    fn validate(&self) -> Result<()> {
        require_positive("pv_halfwidth", self.pv_halfwidth)?;
        require_positive("panel_width", self.panel_width)?;
        require_positive("extent", self.extent)?;
        if self.pv_halfwidth > 4.0 * self.panel_width {
            return Err(Error::Domain(format!(
                "pv_halfwidth {} exceeds four panel widths ({})",
                self.pv_halfwidth, self.panel_width
            )));
        }
        if self.extent <= self.pv_halfwidth {
            return Err(Error::Domain("extent must exceed pv_halfwidth".into()));
        }
        Ok(())
    }

    fn breaks(&self, scale: f64) -> Vec<f64> {
        let first = self.pv_halfwidth * scale;
        let width = self.panel_width * scale;
        let mut breaks = vec![0.0, first];
        let mut x = first;
        while x < self.extent {
            x = (x + width).min(self.extent);
            breaks.push(x);
        }
        breaks
    }
}

/// Convolution of `f` with the spectrum of the step function,
/// `½ f(ω) − (i/2π) PV ∫ f(ω−w)/w dw`.
///
/// This is the frequency-domain image of multiplying the time signal by the
/// step that keeps only the ordered half, `θ(−v)`, where `f(y) = ∫ g(v) e^{iyv} dv`.
pub fn heaviside_kernel_apply<F>(f: F, omega: f64, settings: &KernelSettings) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    require_finite("omega", omega)?;
    settings.validate()?;
    let rule = Rule::new(settings.order);
    let folded = |w: f64| (f(omega - w) - f(omega + w)) / w;
    let pv_at = |scale: f64| -> Complex64 {
        Nodes::composite(&rule, &settings.breaks(scale), 1).integrate(folded)
    };
    let half = 0.5 * f(omega);
    let mut scale = 1.0;
    let mut prev = pv_at(scale);
    let mut last_err = f64::INFINITY;
    for _ in 0..settings.max_refinements {
        scale *= 0.5;
        let next = pv_at(scale);
        let err = (next - prev).norm() / (2.0 * PI);
        let value = half - Complex64::i() * next / (2.0 * PI);
        let tol = settings.abs_tol + settings.rel_tol * value.norm();
        if err <= tol {
            return Ok(value);
        }
        last_err = err;
        prev = next;
    }
    Err(Error::Accuracy {
        what: "principal-value kernel".into(),
        estimate: last_err,
        tolerance: settings.abs_tol,
    })
}
