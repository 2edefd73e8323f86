//! Mittag-Leffler reference values for the decay branch: E_{α,β}(z) with
//! 0 < α <= 1, β > 0 and z <= 0.
//!
//! Two independent evaluation routes: the Taylor series (with the maximum
//! term tracked, since alternating cancellation destroys accuracy for large
//! |z| at small α) and the branch-cut integral obtained by collapsing the
//! inverse-Laplace contour onto the negative axis. The route is selected
//! per argument so the result carries ~1e-11 accuracy everywhere; the two
//! routes overlap on |z| in [3, 5], which the self-test exercises.

use crate::special::{gamma, gauss_legendre_on, recip_gamma, tanh_sinh};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Largest safe ratio of the alternating series' peak term to the summed
/// value. Each term carries ~1e-15 relative noise from the gamma
/// evaluation, so a ratio of 1e4 keeps the summed noise near 5e-11.
const SERIES_PEAK_RATIO: f64 = 1e4;

pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if beta <= 0.0 {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if z > 0.0 {
        return Err(Error::Domain(format!(
            "only the decay branch z <= 0 is supported, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(recip_gamma(beta));
    }
    if alpha == 1.0 {
        // classical limits; the cut integral below is only valid for α < 1
        if (beta - 1.0).abs() < 1e-14 {
            return Ok(z.exp());
        }
        if (beta - 2.0).abs() < 1e-14 {
            return Ok((z.exp() - 1.0) / z);
        }
        return Err(Error::Domain(format!(
            "alpha = 1 supports beta in {{1, 2}}, got {beta}"
        )));
    }
    if beta >= 1.0 + alpha {
        // keeps the cut integral integrable at r = 0; series-only territory
        if let Some(v) = series(alpha, beta, z) {
            return Ok(v);
        }
        return Err(Error::Domain(format!(
            "E_({alpha},{beta}) at z = {z} needs the integral route, \
             which requires beta < 1 + alpha"
        )));
    }
    if z >= -5.0 {
        if let Some(v) = series(alpha, beta, z) {
            return Ok(v);
        }
    }
    Ok(cut_integral(alpha, beta, -z))
}

/// Taylor series with peak-term tracking; `None` when cancellation would
/// push the rounding floor above ~1e-12.
pub fn series(alpha: f64, beta: f64, z: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    let mut zk = 1.0;
    let mut peak: f64 = 0.0;
    for k in 0..600 {
        let term = zk * recip_gamma(alpha * k as f64 + beta);
        // Kahan update
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
        peak = peak.max(term.abs());
        zk *= z;
        if zk.abs() * recip_gamma(alpha * (k + 1) as f64 + beta).abs() < 1e-18
            && term.abs() < 1e-18
        {
            break;
        }
    }
    if peak > SERIES_PEAK_RATIO * sum.abs().max(1e-300) {
        None
    } else {
        Some(sum)
    }
}

/// Branch-cut integral for 0 < α < 1, 0 < β < 1 + α, λ > 0:
///
/// E_{α,β}(-λ) = (1/π) ∫0^∞ e^{-r} r^{α-β}
///     (r^α sin(πβ) + λ sin(π(β-α))) / (r^{2α} + 2λ r^α cos(πα) + λ²) dr
pub fn cut_integral(alpha: f64, beta: f64, lambda: f64) -> f64 {
    let sb = (PI * beta).sin();
    let sba = (PI * (beta - alpha)).sin();
    let ca = (PI * alpha).cos();
    let f = |r: f64| {
        let ra = r.powf(alpha);
        let num = r.powf(alpha - beta) * (ra * sb + lambda * sba);
        let den = ra * ra + 2.0 * lambda * ra * ca + lambda * lambda;
        (-r).exp() * num / den / PI
    };
    // [0, 1]: tanh-sinh handles the r^{α-β} endpoint
    let head = tanh_sinh(f, 0.0, 1.0, 1e-14, 12);
    // [1, 60]: geometric Gauss-Legendre panels, refined around the
    // denominator minimum when cos(πα) approaches -1
    let mut bounds = vec![1.0];
    let mut r: f64 = 1.0;
    while r < 60.0 {
        r *= 1.35;
        bounds.push(r.min(60.0));
    }
    if ca < -0.9 {
        let rpk = lambda.powf(1.0 / alpha);
        if rpk > 0.5 && rpk < 100.0 {
            let lo = (0.75 * rpk).max(1.0);
            let hi = (1.5 * rpk).min(60.0);
            if hi > lo {
                for i in 0..=8 {
                    bounds.push(lo + (hi - lo) * i as f64 / 8.0);
                }
            }
        }
    }
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut tail = 0.0;
    for pair in bounds.windows(2) {
        let (x, w) = gauss_legendre_on(8, pair[0], pair[1]);
        tail += x.iter().zip(&w).map(|(xi, wi)| wi * f(*xi)).sum::<f64>();
    }
    head + tail
}

/// Exact constant-order eigenmode amplitudes:
/// s0 = E_{α,1}(-λ t^α) for the initial-datum operator and
/// s1 = t^{α-1} E_{α,α}(-λ t^α) for the source operator.
pub fn eigenmode_oracle(alpha: f64, lambda: f64, t: f64) -> Result<(f64, f64)> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "eigenvalue must be positive, got {lambda}"
        )));
    }
    if t <= 0.0 {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let z = -lambda * t.powf(alpha);
    let s0 = mittag_leffler(alpha, 1.0, z)?;
    let s1 = t.powf(alpha - 1.0) * mittag_leffler(alpha, alpha, z)?;
    Ok((s0, s1))
}
