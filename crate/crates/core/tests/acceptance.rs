//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use tpa_core::spectral::{frequencies_from_offsets, JointSpectrum, SpectralPath};
use tpa_core::specfun::{plasma_dispersion, sinc};
use tpa_core::transitions::{
    closed_form, closed_form_gaussian, closed_form_rectangular, p1_pair, p2_pair,
    resonant_biphoton, scaling_law_check, ScalingSweep, ThreeLevelAtom,
};
use tpa_core::wavefunctions::{normalization_check, Biphoton, Family};

type Outcome = Result<(bool, String), String>;

fn unit_atom() -> ThreeLevelAtom {
    ThreeLevelAtom::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn grid() -> Vec<f64> {
    (0..25).map(|k| -5.0 + 10.0 * k as f64 / 24.0).collect()
}

/// (A/2)·e^{−x²T²} times the family's ordered factor, written out.
fn ordered_oracle(family: Family, t: f64, tau: f64, x: f64, xi: f64) -> Complex64 {
    let common = (-x * x * t * t).exp();
    match family {
        Family::Gaussian => {
            let a1 = (2.0 * tau * t / PI).sqrt();
            let f = plasma_dispersion(xi).unwrap().to_complex().conj();
            0.5 * a1 * common * f
        }
        Family::Rectangular => {
            let a2 = (2.0 / PI.powi(3)).powf(0.25) * (tau * t).sqrt();
            Complex64::from_polar(0.5 * a2 * common * sinc(0.5 * xi), -0.5 * xi)
        }
    }
}

fn oracle_equivalence(family: Family, zeros: &[f64]) -> Outcome {
    let (t, tau, x) = (1.0, 0.01, 0.3);
    let start = Instant::now();
    let b = Biphoton::from_family(family, t, tau, 0.0, 0.0).map_err(|e| e.to_string())?;
    let closed = JointSpectrum::with_evaluator(&b, SpectralPath::ClosedForm);
    let quad = JointSpectrum::with_evaluator(&b, SpectralPath::TimeDomainQuadrature);
    let mut worst_rel: f64 = 0.0;
    for xi in grid() {
        let (w1, w2) = frequencies_from_offsets(&b, x, xi / tau);
        let c = closed.time_ordered(w1, w2).map_err(|e| e.to_string())?;
        let q = quad.time_ordered(w1, w2).map_err(|e| e.to_string())?;
        let o = ordered_oracle(family, t, tau, x, xi);
        worst_rel = worst_rel.max((c - q).norm() / q.norm()).max((c - o).norm() / o.norm());
    }
    let mut worst_abs: f64 = 0.0;
    for &xi in zeros {
        let (w1, w2) = frequencies_from_offsets(&b, x, xi / tau);
        let c = closed.time_ordered(w1, w2).map_err(|e| e.to_string())?;
        let q = quad.time_ordered(w1, w2).map_err(|e| e.to_string())?;
        worst_abs = worst_abs.max((c - q).norm()).max(q.norm());
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!("max rel err {worst_rel:.2e} (tol 1e-5), {secs:.2} s (limit 30 s)");
    if !zeros.is_empty() {
        detail += &format!(", max abs at sinc zeros {worst_abs:.2e} (tol 1e-10)");
    }
    Ok((worst_rel < 1e-5 && worst_abs < 1e-10 && secs < 30.0, detail))
}

fn transparency() -> Outcome {
    let atom = unit_atom();
    let delta = 100.0;
    let mut worst_closed: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for n in 1..=3 {
        let tau = 2.0 * PI * n as f64 / delta;
        let t = 100.0 * tau;
        let closed = closed_form_rectangular(&atom, t, tau, delta).map_err(|e| e.to_string())?;
        let scale = PI * PI * (2.0 / PI.powi(3)).sqrt() * tau * t;
        worst_closed = worst_closed.max(closed.p2 / scale);
        let b = resonant_biphoton(Family::Rectangular, &atom, t, tau, delta).map_err(|e| e.to_string())?;
        let q = p2_pair(&b, &atom, SpectralPath::TimeDomainQuadrature).map_err(|e| e.to_string())?;
        worst_quad = worst_quad.max(q.value);
    }
    Ok((
        worst_closed < 1e-30 && worst_quad < 1e-10,
        format!(
            "n=1..3: closed P2/scale {worst_closed:.2e} (rounding level), quadrature P2 {worst_quad:.2e} (tol 1e-10)"
        ),
    ))
}

fn suppression() -> Outcome {
    let atom = unit_atom();
    let delta = 100.0;
    let mut worst_p1: f64 = 0.0;
    let mut worst_p2: f64 = 0.0;
    for n in 0..=1 {
        let tau = PI * (2 * n + 1) as f64 / delta;
        let t = 100.0 * tau;
        let r = closed_form_rectangular(&atom, t, tau, delta).map_err(|e| e.to_string())?;
        let a2_sq = (2.0 / PI.powi(3)).sqrt() * tau * t;
        let expected = 4.0 * a2_sq / ((2 * n + 1) as f64).powi(2);
        worst_p1 = worst_p1.max(r.p1 / (PI.powf(1.5) * 2f64.sqrt() * a2_sq / t));
        worst_p2 = worst_p2.max((r.p2 - expected).abs() / expected);
    }
    Ok((
        worst_p1 < 1e-30 && worst_p2 < 1e-12,
        format!(
            "n=0,1: P1/scale {worst_p1:.2e} (rounding level), P2 vs 4A2^2/(2n+1)^2 rel err {worst_p2:.2e} (tol 1e-12)"
        ),
    ))
}

fn scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for family in [Family::Gaussian, Family::Rectangular] {
        let fit = scaling_law_check(&ScalingSweep::canonical(family), SpectralPath::TimeDomainQuadrature)
            .map_err(|e| e.to_string())?;
        ok &= (fit.t_exponent - 1.0).abs() <= 0.01
            && (fit.tau_exponent + 1.0).abs() <= 0.05
            && (fit.delta_exponent + 2.0).abs() <= 0.05;
        parts.push(format!(
            "{family}: T {:+.4} tau {:+.4} delta {:+.4}",
            fit.t_exponent, fit.tau_exponent, fit.delta_exponent
        ));
    }
    Ok((ok, format!("{} (tol 0.01/0.05/0.05)", parts.join("; "))))
}

fn ratio_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (t, r2) in [(1.0, 1.0), (0.25, 3.0), (12.0, 0.5)] {
        let atom = ThreeLevelAtom::new(1.0, 1.0, 1.0, r2).unwrap();
        let expected = (PI / 2.0).sqrt() * r2 * t;
        let g = closed_form_gaussian(&atom, t, 0.01 * t, 0.0).map_err(|e| e.to_string())?;
        let r = closed_form_rectangular(&atom, t, 0.01 * t, 0.0).map_err(|e| e.to_string())?;
        for ratio in [g.ratio, r.ratio] {
            let ratio = ratio.ok_or("ratio undefined")?;
            worst = worst.max((ratio - expected).abs() / expected);
        }
    }
    Ok((worst < 1e-12, format!("max rel err {worst:.2e} (tol 1e-12)")))
}

fn separation() -> Outcome {
    let contrast = plasma_dispersion(3.0).map_err(|e| e.to_string())?.norm_sqr() / (-18f64).exp();
    let xi: f64 = 30.0;
    let tail = xi * xi * plasma_dispersion(xi).map_err(|e| e.to_string())?.norm_sqr();
    let dev = (tail - 1.0 / PI).abs() * PI;
    Ok((
        contrast > 1e5 && dev < 0.01,
        format!("|F(3)|^2/e^-18 = {contrast:.3e} (> 1e5), 30^2|F(30)|^2 off 1/pi by {:.3}% (< 1%)", 100.0 * dev),
    ))
}

fn normalization() -> Outcome {
    let mut worst_time: f64 = 0.0;
    let mut worst_freq: f64 = 0.0;
    for family in [Family::Gaussian, Family::Rectangular] {
        for tau in [0.001, 0.01, 0.1] {
            let b = Biphoton::from_family(family, 1.0, tau, 0.0, 0.0).map_err(|e| e.to_string())?;
            worst_time = worst_time.max(normalization_check(&b).map_err(|e| e.to_string())?);
            let n = JointSpectrum::new(&b).norm().map_err(|e| e.to_string())?;
            worst_freq = worst_freq.max((n - 1.0).abs());
        }
    }
    Ok((
        worst_time < 1e-8 && worst_freq < 2e-6,
        format!("time norm err {worst_time:.2e} (tol 1e-8), spectral norm err {worst_freq:.2e} (tol 2e-6)"),
    ))
}

/// Exact Gaussian `P₁` at resonance, `a = 2T² + τ²/2`.
fn gaussian_p1_exact(t: f64, tau: f64, delta: f64) -> f64 {
    let a = 2.0 * t * t + 0.5 * tau * tau;
    2.0 * PI * (2.0 * tau * t / PI) * (PI / a).sqrt()
        * (tau.powi(4) * delta * delta / a - 2.0 * (tau * delta).powi(2)).exp()
}

fn approximation() -> Outcome {
    let atom = unit_atom();
    let tau = 0.01;
    let mut ok = true;
    let mut at_100: f64 = 0.0;
    for family in [Family::Gaussian, Family::Rectangular] {
        for delta_tau in [0.0, 1.0] {
            let delta = delta_tau / tau;
            let mut errs = [0.0; 3];
            for (e, ratio) in errs.iter_mut().zip([10.0, 100.0, 1000.0]) {
                let t = ratio * tau;
                let b = resonant_biphoton(family, &atom, t, tau, delta).map_err(|e| e.to_string())?;
                let quad = p1_pair(&b, &atom).map_err(|e| e.to_string())?.value;
                if family == Family::Gaussian {
                    let exact = gaussian_p1_exact(t, tau, delta);
                    ok &= (quad - exact).abs() <= 1e-9 * exact;
                }
                let approx = closed_form(family, &atom, t, tau, delta).map_err(|e| e.to_string())?.p1;
                *e = (approx - quad).abs() / quad;
            }
            ok &= errs[0] > errs[1] && errs[1] > errs[2];
            at_100 = at_100.max(errs[1]);
        }
    }
    Ok((
        ok && at_100 < 0.02,
        format!("max rel err at T/tau=100 {at_100:.2e} (tol 2e-2), monotone over 10/100/1000: {ok}"),
    ))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("oracle equivalence, Gaussian", Box::new(|| oracle_equivalence(Family::Gaussian, &[]))),
        (
            "oracle equivalence, rectangular",
            Box::new(|| oracle_equivalence(Family::Rectangular, &[-2.0 * PI, 2.0 * PI, 4.0 * PI])),
        ),
        ("two-photon transparency", Box::new(transparency)),
        ("one-photon suppression", Box::new(suppression)),
        ("scaling law", Box::new(scaling)),
        ("ratio identity", Box::new(ratio_identity)),
        ("asymptotic separation", Box::new(separation)),
        ("normalization", Box::new(normalization)),
        ("T >> tau approximation", Box::new(approximation)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (passed, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name}: {detail}",
            k + 1,
            if passed { "PASS" } else { "FAIL" }
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
