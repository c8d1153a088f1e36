//! Fading and two-antenna transmit-diversity gains of the curve-fit model.
//!
//! With `d = 2a ln P̄ + b`, both gains are expectations of
//! `x^{d + a ln x}`: over `X ~ Exp(1)` for CSCG fading and over
//! `X = 1 + cos U`, `U ~ U[0, 2π)`, for two antennas with random phases.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::harvester::LogPolyFitModel;
use crate::quadrature::{integrate, QuadratureSettings};

/// Upper bound on the number of truncation doublings before giving up.
const MAX_DOUBLINGS: usize = 64;

/// `e_fading` for a model at average input power `p_rf_avg`. A sensitivity
/// floor on the model raises the lower limit to `p_rf_min / p_rf_avg`.
pub fn e_fading(m: &LogPolyFitModel, p_rf_avg: f64, q: &QuadratureSettings) -> Result<f64> {
    check_power(p_rf_avg)?;
    let x_min = m.p_rf_min_w.map_or(0.0, |p| p / p_rf_avg);
    fading_integral(m.a, m.local_exponent(p_rf_avg), x_min, q)
}

/// `∫_{x_min}^∞ x^{d + a ln x} e^{-x} dx`.
///
/// Evaluated in `s = ln x`, where the integrand `exp((d+1)s + a s² - e^s)` is
/// smooth, over a window grown by doubling until both analytic tail bounds are
/// below `abs_tol / 2`.
pub fn fading_integral(a: f64, d: f64, x_min: f64, q: &QuadratureSettings) -> Result<f64> {
    q.validate()?;
    if !(a.is_finite() && d.is_finite() && x_min >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad fading integral parameters (a={a}, d={d}, x_min={x_min})"
        )));
    }
    if a > 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "a = {a} > 0: harvested power grows faster than any power law at low input"
        )));
    }
    if x_min == 0.0 && a == 0.0 && d <= -1.0 {
        return Err(Error::DivergentIntegral(format!(
            "a = 0 with d = {d} <= -1 diverges at x = 0"
        )));
    }
    let tail_budget = 0.5 * q.abs_tol;

    // exponent of the integrand in s, without the -e^s factor
    let g = |s: f64| (d + 1.0) * s + a * s * s;
    let dg = |s: f64| (d + 1.0) + 2.0 * a * s;

    let s_lo = if x_min > 0.0 {
        x_min.ln()
    } else {
        // For s < s_L with g'(s_L) > 0 and a <= 0, g' only grows leftwards,
        // so the left tail is at most exp(g(s_L)) / g'(s_L).
        let mut s_l = -1.0;
        let mut found = None;
        for _ in 0..MAX_DOUBLINGS {
            let slope = dg(s_l);
            if slope > 0.0 && g(s_l).exp() / slope <= tail_budget {
                found = Some(s_l);
                break;
            }
            s_l *= 2.0;
        }
        found.ok_or_else(|| Error::DivergentIntegral("left tail did not decay".into()))?
    };

    // For x >= X >= 1 and a <= 0 the exponent d + a ln x is at most
    // q = d + a ln X, so the right tail is bounded by Γ(q+1, X).
    let mut upper = (2.0 * x_min).max(1.0);
    let mut found = None;
    for _ in 0..MAX_DOUBLINGS {
        let qx = d + a * upper.ln();
        let bound = if qx <= 0.0 {
            Some((qx * upper.ln() - upper).exp())
        } else if upper > qx {
            Some((qx * upper.ln() - upper).exp() * upper / (upper - qx))
        } else {
            None
        };
        if matches!(bound, Some(b) if b <= tail_budget) {
            found = Some(upper);
            break;
        }
        upper *= 2.0;
    }
    let upper = found.ok_or_else(|| Error::DivergentIntegral("right tail did not decay".into()))?;

    let inner = QuadratureSettings {
        abs_tol: tail_budget,
        ..*q
    };
    let r = integrate(|s: f64| (g(s) - s.exp()).exp(), s_lo, upper.ln(), &inner)?;
    Ok(r.value)
}

/// `e_td` for two equal-gain antennas with independent uniform phases.
pub fn e_td2(m: &LogPolyFitModel, p_rf_avg: f64, q: &QuadratureSettings) -> Result<f64> {
    check_power(p_rf_avg)?;
    let x_min = m.p_rf_min_w.map_or(0.0, |p| p / p_rf_avg);
    td2_integral(m.a, m.local_exponent(p_rf_avg), x_min, q)
}

/// `(1/2π) ∫₀^{2π} w^{d + a ln w} du` with `w = 1 + cos u`, restricted to
/// `w >= x_min`.
///
/// The integrand is symmetric about `u = π`, so only `[0, π]` is integrated.
/// At `u = π` (`w = 0`) it takes its continuous extension.
pub fn td2_integral(a: f64, d: f64, x_min: f64, q: &QuadratureSettings) -> Result<f64> {
    q.validate()?;
    if !(a.is_finite() && d.is_finite() && x_min >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad diversity integral parameters (a={a}, d={d}, x_min={x_min})"
        )));
    }
    if a > 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "a = {a} > 0: integrand is unbounded at the channel null"
        )));
    }
    if x_min == 0.0 && a == 0.0 && d <= -0.5 {
        return Err(Error::DivergentIntegral(format!(
            "a = 0 with d = {d} <= -1/2 diverges at the channel null"
        )));
    }
    if x_min >= 2.0 {
        return Ok(0.0);
    }
    let u_max = if x_min > 0.0 { (x_min - 1.0).acos() } else { PI };
    let integrand = |u: f64| {
        // 1 + cos u, written to stay accurate near u = π
        let c = (0.5 * u).cos();
        let w = 2.0 * c * c;
        if w <= 0.0 {
            return if a < 0.0 || d > 0.0 {
                0.0
            } else if d == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
        }
        let l = w.ln();
        ((d + a * l) * l).exp()
    };
    let r = integrate(integrand, 0.0, u_max, q)?;
    Ok(r.value / PI)
}

fn check_power(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("average RF power must be > 0, got {p}")))
    }
}
