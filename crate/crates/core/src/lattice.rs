//! Lattice/nonlattice classification of a ratio list.
//!
//! The system is lattice when every `ln r_i` lies in `hℤ` for a common
//! `h > 0`. Each quotient `x_i = ln r_i / ln r_1` is expanded as a continued
//! fraction; an expansion terminates when the remainder is within `tol` of an
//! integer. Floating-point input cannot prove irrationality, so the verdict
//! records how deep the expansion went.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum LatticeType {
    Lattice {
        h: f64,
    },
    /// No quotient terminated within `depth` partial quotients.
    Nonlattice {
        depth: usize,
    },
    /// A quotient terminated but only with an implausibly large denominator,
    /// or the resulting generator failed the residual test.
    Undecided {
        depth: usize,
    },
}

impl LatticeType {
    pub fn kind(&self) -> &'static str {
        match self {
            LatticeType::Lattice { .. } => "lattice",
            LatticeType::Nonlattice { .. } => "nonlattice",
            LatticeType::Undecided { .. } => "undecided",
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DEPTH: usize = 50;
/// Denominators above this are treated as numerical accidents.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

enum Expansion {
    Rational { p: i64, q: u64, depth: usize },
    Open { depth: usize },
}

fn expand(x: f64, tol: f64, max_depth: usize) -> Expansion {
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut rem = x;
    for depth in 1..=max_depth {
        let near = rem.round();
        let terminal = (rem - near).abs() <= tol * rem.abs().max(1.0);
        let a = if terminal { near } else { rem.floor() };
        if a.abs() > 1e15 {
            return Expansion::Open { depth };
        }
        let a = a as i128;
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        if terminal {
            if q <= 0 || q > u64::MAX as i128 || p.abs() > i64::MAX as i128 {
                return Expansion::Open { depth };
            }
            return Expansion::Rational { p: p as i64, q: q as u64, depth };
        }
        if q.abs() > 1i128 << 100 {
            return Expansion::Open { depth };
        }
        (p0, q0, p1, q1) = (p1, q1, p, q);
        rem = 1.0 / (rem - rem.floor());
    }
    Expansion::Open { depth: max_depth }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies `ratios` as lattice with maximal generator `h`, nonlattice, or undecided.
pub fn classify_lattice(ratios: &[f64], tol: f64, max_depth: usize) -> LatticeType {
    assert!(!ratios.is_empty() && tol > 0.0);
    let logs: Vec<f64> = ratios.iter().map(|r| -r.ln()).collect();
    let l1 = logs[0];
    // ln r_i = (p_i/q_i) ln r_1, so with Q = lcm(q_i) every ln r_i is a
    // multiple of l1/Q; dividing by g = gcd(Q·p_i/q_i) makes h maximal
    let mut fracs = Vec::with_capacity(logs.len());
    let mut deepest = 0;
    for l in &logs {
        match expand(l / l1, tol, max_depth) {
            Expansion::Open { depth } => return LatticeType::Nonlattice { depth },
            Expansion::Rational { p, q, depth } => {
                deepest = deepest.max(depth);
                if q > MAX_DENOMINATOR {
                    return LatticeType::Undecided { depth };
                }
                fracs.push((p, q));
            }
        }
    }
    let mut lcm: u64 = 1;
    for &(_, q) in &fracs {
        lcm = lcm / gcd(lcm, q) * q;
        if lcm > MAX_DENOMINATOR {
            return LatticeType::Undecided { depth: deepest };
        }
    }
    let mut g: u64 = 0;
    for &(p, q) in &fracs {
        g = gcd(g, p.unsigned_abs() * (lcm / q));
    }
    let h = l1 * g as f64 / lcm as f64;
    let ok = logs.iter().all(|l| {
        let m = l / h;
        (m - m.round()).abs() <= tol * m.abs().max(1.0)
    });
    if ok && h > 0.0 {
        LatticeType::Lattice { h }
    } else {
        LatticeType::Undecided { depth: deepest }
    }
}
