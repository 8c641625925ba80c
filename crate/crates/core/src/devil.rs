//! The devil's staircase map `g(x) = ∫_0^x (f(y)+1)^{−β} dy`, `β = ln3/ln2`,
//! with `f` the Cantor function.
//!
//! Over a cylinder of the middle-third Cantor set, `f` runs from `c` to
//! `c + s` and is a copy of `f` itself, so every piece of the integral is
//! `len·I(c, s)` with `I(c,s) = ∫_0^1 (1 + c + s f(y))^{−β} dy`. For small
//! `s/(1+c)` the integrand is expanded binomially; the moments `∫ f^j` obey
//! an exact recursion from the self-similarity of `f`, and the series
//! alternates with decreasing terms, so its truncation error is at most the
//! first omitted term.

use std::sync::OnceLock;

use crate::interval::Interval;

pub fn beta() -> f64 {
    3f64.ln() / 2f64.ln()
}

const LEVELS: usize = 64;
const MOMENTS: usize = 64;

/// The Cantor function, read off the ternary digits of `x`.
pub fn cantor_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (mut r, mut f, mut scale) = (x, 0.0, 0.5);
    for _ in 0..LEVELS {
        let y = 3.0 * r;
        let d = y.floor().clamp(0.0, 2.0);
        r = y - d;
        if d == 1.0 {
            return f + scale;
        }
        if d == 2.0 {
            f += scale;
        }
        scale *= 0.5;
    }
    f
}

/// `m_j = ∫_0^1 f^j`.
pub fn cantor_moments() -> &'static [f64] {
    static M: OnceLock<Vec<f64>> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = vec![1.0];
        for j in 1..MOMENTS {
            let mut binom = 1.0;
            let mut s = 1.0;
            for (i, mi) in m.iter().enumerate() {
                s += binom * mi;
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
            let p = 0.5f64.powi(j as i32);
            m.push(p * s / 3.0 / (1.0 - 2.0 * p / 3.0));
        }
        m
    })
}

/// `I(c,s)` with a bound on its truncation error.
pub fn cylinder_integral(c: f64, s: f64) -> (f64, f64) {
    let x = s / (1.0 + c);
    if x <= 1.0 / 16.0 {
        let m = cantor_moments();
        let b = beta();
        let (mut sum, mut coef, mut xp) = (0.0f64, 1.0f64, 1.0f64);
        let mut err = 0.0;
        for (j, mj) in m.iter().enumerate() {
            let term = coef * xp * mj;
            if term.abs() <= 1e-18 * sum.abs() {
                err = term.abs();
                break;
            }
            sum += term;
            coef *= (-b - j as f64) / (j + 1) as f64;
            xp *= x;
            err = (coef * xp).abs();
        }
        let scale = (1.0 + c).powf(-b);
        (scale * sum, scale * err + 4.0 * f64::EPSILON * scale * sum.abs())
    } else {
        let h = 0.5 * s;
        let (a, ea) = cylinder_integral(c, h);
        let (z, ez) = cylinder_integral(c + h, h);
        let mid = (1.0 + c + h).powf(-beta());
        ((a + mid + z) / 3.0, (ea + ez) / 3.0 + 2.0 * f64::EPSILON * mid)
    }
}

fn total() -> (f64, f64) {
    static G1: OnceLock<(f64, f64)> = OnceLock::new();
    *G1.get_or_init(|| cylinder_integral(0.0, 1.0))
}

/// `g(x)` with an error bound.
pub fn staircase_with_error(x: f64) -> (f64, f64) {
    let b = beta();
    if x <= 0.0 {
        return (x, 0.0);
    }
    let (g1, e1) = total();
    if x >= 1.0 {
        return (g1 + (x - 1.0) * 0.5f64.powf(b), e1 + f64::EPSILON * g1);
    }
    let (mut acc, mut err) = (0.0, 0.0);
    let (mut r, mut len, mut c, mut s) = (x, 1.0, 0.0, 1.0);
    for _ in 0..LEVELS {
        let y = 3.0 * r;
        let d = y.floor().clamp(0.0, 2.0);
        r = y - d;
        let (len1, s1) = (len / 3.0, 0.5 * s);
        if d == 0.0 {
            len = len1;
            s = s1;
            continue;
        }
        let (i, e) = cylinder_integral(c, s1);
        acc += len1 * i;
        err += len1 * e;
        let gap_value = (1.0 + c + s1).powf(-b);
        if d == 1.0 {
            acc += r * len1 * gap_value;
            return (acc, err + 8.0 * f64::EPSILON * (acc + x));
        }
        acc += len1 * gap_value;
        c += s1;
        len = len1;
        s = s1;
    }
    acc += r * len * (1.0 + c).powf(-b);
    (acc, err + len + 8.0 * f64::EPSILON * (acc + x))
}

pub fn staircase(x: f64) -> f64 {
    staircase_with_error(x).0
}

pub fn staircase_enclosure(x: f64) -> Interval {
    let (v, e) = staircase_with_error(x);
    Interval::around(v, e)
}

/// `g'(x) = (f(x) + 1)^{−β}`.
pub fn staircase_deriv(x: f64) -> f64 {
    (cantor_function(x) + 1.0).powf(-beta())
}
