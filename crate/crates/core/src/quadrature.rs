//! Composite Gauss-Legendre quadrature on panelled intervals, in one and two
//! dimensions, with step-halving convergence control.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values whose size can be measured for convergence tests.
pub trait Magnitude: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Magnitude for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Magnitude for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).unwrap();
        let gl = GaussLegendre::new(order);
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Absolute nodes and weights of a composite rule over a list of segments.
#[derive(Debug, Clone, Default)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    /// Splits every segment `[breaks[k], breaks[k+1]]` into `panels` equal
    /// panels and places the rule on each.
    pub fn composite(rule: &Rule, breaks: &[f64], panels: usize) -> Self {
        let panels = panels.max(1);
        let mut out = Nodes::default();
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                let mid = lo + 0.5 * h;
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    out.x.push(mid + 0.5 * h * t);
                    out.w.push(0.5 * h * w);
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate<T: Magnitude, F: FnMut(f64) -> T>(&self, mut f: F) -> T {
        self.x
            .iter()
            .zip(&self.w)
            .fold(T::zero(), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// Tensor-product sum over two node sets.
pub fn integrate_2d<T, F>(u: &Nodes, v: &Nodes, mut f: F) -> T
where
    T: Magnitude,
    F: FnMut(f64, f64) -> T,
{
    let mut total = T::zero();
    for (&ui, &wi) in u.x.iter().zip(&u.w) {
        let mut inner = T::zero();
        for (&vj, &wj) in v.x.iter().zip(&v.w) {
            inner = inner + f(ui, vj) * wj;
        }
        total = total + inner * wi;
    }
    total
}

/// Settings for the adaptive composite rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Starting number of panels per segment.
    pub initial_panels: usize,
    /// Maximum number of panel doublings per dimension.
    pub max_refinements: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            order: 16,
            initial_panels: 4,
            max_refinements: 9,
            abs_tol: 1e-13,
            rel_tol: 1e-10,
        }
    }
}

impl QuadSettings {
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol + self.rel_tol * value.abs()
    }
}

/// A converged integral together with its step-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Integrates `f` over the segments in `breaks`, doubling the panel count
/// until two successive results agree.
pub fn adaptive_1d<T, F>(
    what: &str,
    breaks: &[f64],
    settings: &QuadSettings,
    f: F,
) -> Result<Estimate<T>>
where
    T: Magnitude,
    F: Fn(f64) -> T,
{
    let rule = Rule::new(settings.order);
    let mut panels = settings.initial_panels.max(1);
    let mut prev = Nodes::composite(&rule, breaks, panels).integrate(&f);
    let mut last_err = f64::INFINITY;
    for _ in 0..settings.max_refinements {
        panels *= 2;
        let next = Nodes::composite(&rule, breaks, panels).integrate(&f);
        let err = (next + prev * -1.0).magnitude();
        if err <= settings.tolerance_for(next.magnitude()) {
            return Ok(Estimate { value: next, error: err });
        }
        last_err = err;
        prev = next;
    }
    Err(Error::Accuracy {
        what: what.to_string(),
        estimate: last_err,
        tolerance: settings.tolerance_for(prev.magnitude()),
    })
}

/// Two-dimensional version of [`adaptive_1d`]. The two directions are
/// refined independently, so a rapidly oscillating direction does not drag
/// the other one along.
pub fn adaptive_2d<T, F>(
    what: &str,
    u_breaks: &[f64],
    v_breaks: &[f64],
    settings: &QuadSettings,
    f: F,
) -> Result<Estimate<T>>
where
    T: Magnitude,
    F: Fn(f64, f64) -> T,
{
    let rule = Rule::new(settings.order);
    let start = settings.initial_panels.max(1);
    let (mut lu, mut lv) = (0u32, 0u32);
    let eval = |lu: u32, lv: u32| {
        let u = Nodes::composite(&rule, u_breaks, start << lu);
        let v = Nodes::composite(&rule, v_breaks, start << lv);
        integrate_2d(&u, &v, &f)
    };
    let mut base = eval(lu, lv);
    loop {
        let ref_u = eval(lu + 1, lv);
        let ref_v = eval(lu, lv + 1);
        let err_u = (ref_u + base * -1.0).magnitude();
        let err_v = (ref_v + base * -1.0).magnitude();
        let tol = settings.tolerance_for(base.magnitude());
        let u_ok = err_u <= tol;
        let v_ok = err_v <= tol;
        if u_ok && v_ok {
            let both = eval(lu + 1, lv + 1);
            return Ok(Estimate {
                value: both,
                error: err_u.max(err_v),
            });
        }
        if !u_ok {
            lu += 1;
        }
        if !v_ok {
            lv += 1;
        }
        if lu > settings.max_refinements || lv > settings.max_refinements {
            return Err(Error::Accuracy {
                what: what.to_string(),
                estimate: err_u.max(err_v),
                tolerance: tol,
            });
        }
        base = eval(lu, lv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = Rule::new(5);
        let nodes = Nodes::composite(&rule, &[-1.0, 2.0], 1);
        let got: f64 = nodes.integrate(|x| x.powi(9) - 3.0 * x * x);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((got - exact).abs() < 1e-11);
    }

    #[test]
    fn composite_skips_empty_segments() {
        let rule = Rule::new(4);
        let nodes = Nodes::composite(&rule, &[0.0, 0.0, 1.0], 3);
        assert_eq!(nodes.len(), 12);
        let total: f64 = nodes.w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_1d_gaussian() {
        let est = adaptive_1d("gauss", &[-10.0, 10.0], &QuadSettings::default(), |x: f64| {
            (-x * x).exp()
        })
        .unwrap();
        assert!((est.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_2d_oscillatory_direction() {
        let est: Estimate<Complex64> = adaptive_2d(
            "osc",
            &[-8.0, 8.0],
            &[0.0, 1.0],
            &QuadSettings::default(),
            |u, v| Complex64::from_polar((-u * u).exp(), 200.0 * v),
        )
        .unwrap();
        let v_exact = (Complex64::from_polar(1.0, 200.0) - 1.0) / Complex64::new(0.0, 200.0);
        let exact = v_exact * std::f64::consts::PI.sqrt();
        assert!((est.value - exact).norm() < 1e-11);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let settings = QuadSettings {
            max_refinements: 2,
            ..QuadSettings::default()
        };
        let err = adaptive_1d("spiky", &[0.0, 1.0], &settings, |x: f64| (1e4 * x).sin())
            .unwrap_err();
        assert!(matches!(err, Error::Accuracy { .. }));
    }
}
