//! Average Minkowski content.
//!
//! On the line the scaling function `R_1(K,ε)` is piecewise affine with
//! breakpoints at half gap lengths and at the ratios `r_i`, so the Gatzouras
//! integral `∫_0^1 ε^{δ−2} R_1(K,ε) dε` is summed segment by segment in closed
//! form. Under the strong separation condition `R_1` vanishes below
//! `min(g_min/2, r_min)`. When first-level pieces touch, `R_1` only loses the
//! overlaps at the touching points there, `−2Pε ≤ R_1 ≤ 0`, and the
//! remaining piece of the integral is bounded explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifs::entropy_term;
use crate::quadrature::composite_gauss;
use crate::tube_exact::{LineIfs, TubeProfile};

/// Gauss–Legendre panels per decade of `ε` in the Cesàro average.
pub const PANELS_PER_DECADE: usize = 64;
pub const CESARO_ORDER: usize = 2;
/// Default Cesàro cutoff.
pub const DEFAULT_T: f64 = 1e-8;
/// Tail window `[t_min, t_max]` used for the upper and lower estimates of a report.
pub const REPORT_WINDOW: (f64, f64) = (12.0, 20.0);
pub const REPORT_SAMPLES: usize = 801;
/// Target for the neglected part of the Gatzouras integral when pieces touch,
/// relative to `D^δ`.
const TAIL_TARGET: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentMethod {
    GatzourasExact,
    CesaroNumeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentReport {
    pub delta: f64,
    pub avg_content: f64,
    pub upper_est: f64,
    pub lower_est: f64,
    pub method: ContentMethod,
    pub integral_value: f64,
    pub prefactor: f64,
}

/// `∫_0^1 ε^{δ−2} R_1(K,ε) dε` with a bound on the part below the lowest
/// breakpoint that was resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingIntegral {
    pub value: f64,
    pub tail_bound: f64,
    pub segments: usize,
    pub eps_min: f64,
}

/// `(v^p − u^p)/p`, with the limit `ln(v/u)` at `p = 0`.
fn pow_diff(u: f64, v: f64, p: f64) -> f64 {
    let l = (v / u).ln();
    if (p * l).abs() < 1e-300 {
        return l;
    }
    u.powf(p) * (p * l).exp_m1() / p
}

pub fn scaling_integral(line: &LineIfs) -> Result<ScalingIntegral> {
    let delta = line.delta();
    let ratios = line.ifs().ratios();
    let r_min = line.ifs().r_min();
    let diam = line.diameter();
    let g_min = line.first_gaps().iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    let touching = line.touching_pairs() as f64;
    let (eps_min, tail_bound) = if touching == 0.0 {
        ((0.5 * g_min).min(r_min), 0.0)
    } else {
        let base = (0.5 * g_min).min(0.5 * r_min * diam).min(r_min);
        let target = (TAIL_TARGET * delta * diam.powf(delta) / (2.0 * touching)).powf(1.0 / delta);
        let e = base.min(target);
        (e, 2.0 * touching * e.powf(delta) / delta)
    };
    let mut cuts: Vec<f64> = vec![eps_min, 1.0];
    cuts.extend(ratios.iter().copied());
    for (g, _) in line.gaps_above(2.0 * eps_min)? {
        cuts.push(0.5 * g);
    }
    cuts.retain(|c| *c >= eps_min && *c <= 1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut value = 0.0;
    let mut segments = 0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if !(v > u * (1.0 + 1e-14)) {
            continue;
        }
        let (a, b) = line.scaling_affine((u * v).sqrt())?;
        value += a * pow_diff(u, v, delta - 1.0) + b * pow_diff(u, v, delta);
        segments += 1;
    }
    Ok(ScalingIntegral { value, tail_bound, segments, eps_min })
}

/// Average Minkowski content from the Gatzouras formula. Under touching
/// pieces the reported integral is the midpoint of its enclosure.
pub fn gatzouras_avg_content(line: &LineIfs) -> Result<ContentReport> {
    let delta = line.delta();
    let s = scaling_integral(line)?;
    let integral_value = s.value - 0.5 * s.tail_bound;
    let prefactor = 1.0 / entropy_term(&line.ifs().ratios(), delta);
    let avg_content = prefactor * integral_value;
    if !(avg_content > 0.0) || !avg_content.is_finite() {
        return Err(Error::NumericFailure(format!("Gatzouras integral gave {avg_content}")));
    }
    let tube = |e: f64| line.tube_volume(e);
    let (upper_est, lower_est) = content_bounds(&tube, delta, 1, REPORT_WINDOW.0, REPORT_WINDOW.1, REPORT_SAMPLES)?;
    Ok(ContentReport {
        delta,
        avg_content,
        upper_est,
        lower_est,
        method: ContentMethod::GatzourasExact,
        integral_value,
        prefactor,
    })
}

/// Quadrature nodes `(t, weight)` in `t = −ln ε` on `[0, |ln T|]`.
fn cesaro_nodes(t_end: f64, nodes: usize) -> Vec<(f64, f64)> {
    let panels = (nodes / CESARO_ORDER).max(1);
    composite_gauss(0.0, t_end, panels, CESARO_ORDER)
}

fn check_cutoff(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return invalid(format!("cutoff T = {t} must lie in (0,1)"));
    }
    Ok(-t.ln())
}

/// Node count used by [`cesaro_avg_content`] for cutoff `t`.
pub fn default_nodes(t: f64) -> usize {
    let decades = -t.log10();
    CESARO_ORDER * ((decades * PANELS_PER_DECADE as f64).ceil() as usize).max(1)
}

/// `∫_T^1 ε^{δ−d} λ(Y_ε) dε/ε`.
pub fn cesaro_integral(
    tube: &(dyn Fn(f64) -> Result<f64> + Sync),
    delta: f64,
    dim: usize,
    t: f64,
    nodes: usize,
) -> Result<f64> {
    let t_end = check_cutoff(t)?;
    let p = delta - dim as f64;
    let terms = cesaro_nodes(t_end, nodes)
        .par_iter()
        .map(|&(s, w)| {
            let eps = (-s).exp();
            Ok(w * (-s * p).exp() * tube(eps)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// `|ln T|^{−1} ∫_T^1 ε^{δ−d} λ(Y_ε) dε/ε` with [`default_nodes`] nodes.
pub fn cesaro_avg_content(tube: &(dyn Fn(f64) -> Result<f64> + Sync), delta: f64, dim: usize, t: f64) -> Result<f64> {
    cesaro_avg_content_with(tube, delta, dim, t, default_nodes(t))
}

pub fn cesaro_avg_content_with(
    tube: &(dyn Fn(f64) -> Result<f64> + Sync),
    delta: f64,
    dim: usize,
    t: f64,
    nodes: usize,
) -> Result<f64> {
    let t_end = check_cutoff(t)?;
    Ok(cesaro_integral(tube, delta, dim, t, nodes)? / t_end)
}

/// Cesàro report; the upper and lower estimates come from the window
/// `[|ln T| − 3, |ln T|]`.
pub fn cesaro_report(
    tube: &(dyn Fn(f64) -> Result<f64> + Sync),
    delta: f64,
    dim: usize,
    t: f64,
    nodes: usize,
) -> Result<ContentReport> {
    let t_end = check_cutoff(t)?;
    let integral_value = cesaro_integral(tube, delta, dim, t, nodes)?;
    let prefactor = 1.0 / t_end;
    let (upper_est, lower_est) = content_bounds(tube, delta, dim, (t_end - 3.0).max(0.0), t_end, 61)?;
    Ok(ContentReport {
        delta,
        avg_content: prefactor * integral_value,
        upper_est,
        lower_est,
        method: ContentMethod::CesaroNumeric,
        integral_value,
        prefactor,
    })
}

/// Maximum and minimum of `ψ(t) = e^{−t(δ−d)} λ(Y_{e^{−t}})` over
/// `samples` points of `[t_min, t_max]`.
pub fn content_bounds(
    tube: &(dyn Fn(f64) -> Result<f64> + Sync),
    delta: f64,
    dim: usize,
    t_min: f64,
    t_max: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    let profile = TubeProfile::from_fn(tube, delta, dim, t_min, t_max, samples, crate::tube_exact::Provenance::Exact)?;
    Ok(profile_extrema(&profile))
}

fn profile_extrema(profile: &TubeProfile) -> (f64, f64) {
    profile.points.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), p| (hi.max(p.psi), lo.min(p.psi)))
}

/// `max − min` of `ψ` over the last period of the profile.
pub fn oscillation_amplitude(profile: &TubeProfile, period: f64) -> Result<f64> {
    let pts = &profile.points;
    if !(period > 0.0) {
        return invalid(format!("period {period} must be positive"));
    }
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return invalid("empty profile");
    };
    if last.t - first.t < period * (1.0 - 1e-12) {
        return invalid(format!("profile spans {} but one period is {period}", last.t - first.t));
    }
    let start = last.t - period * (1.0 + 1e-12);
    let (hi, lo) = pts
        .iter()
        .filter(|p| p.t >= start)
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), p| (hi.max(p.psi), lo.min(p.psi)));
    Ok(hi - lo)
}

/// `d − s` where `s` is the least-squares slope of `ln λ(Y_ε)` against `ln ε`.
pub fn dim_regression(tube: &(dyn Fn(f64) -> Result<f64> + Sync), dim: usize, eps: &[f64]) -> Result<f64> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return invalid("need at least two positive ε values");
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys = eps.par_iter().map(|e| Ok(tube(*e)?.ln())).collect::<Result<Vec<f64>>>()?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::NumericFailure("degenerate regression: all ε equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(dim as f64 - sxy / sxx)
}

/// `n` log-spaced values from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| if n == 1 { lo } else { (a + (b - a) * k as f64 / (n - 1) as f64).exp() }).collect()
}
