//! Closed real intervals with outward rounding.
//!
//! Every operation widens its result by one ulp on each side, which is
//! enough to absorb the rounding of a single correctly rounded IEEE
//! operation. Transcendental functions are widened by a few ulps since libm
//! only promises faithful rounding.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

fn down_n(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = down(x);
    }
    x
}

fn up_n(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = up(x);
    }
    x
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// The hull of two numbers in either order.
    pub fn spanning(a: f64, b: f64) -> Self {
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    /// `x ± r`, outward rounded.
    pub fn around(x: f64, r: f64) -> Self {
        Interval { lo: down(x - r), hi: up(x + r) }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Smallest absolute value over the interval.
    pub fn mig(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    /// Largest absolute value over the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn abs(&self) -> Interval {
        Interval { lo: self.mig(), hi: self.mag() }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval { lo: down(a.lo * a.lo), hi: up(a.hi * a.hi) }
    }

    pub fn sqrt(&self) -> Interval {
        Interval { lo: down(self.lo.max(0.0).sqrt()).max(0.0), hi: up(self.hi.max(0.0).sqrt()) }
    }

    pub fn exp(&self) -> Interval {
        Interval { lo: down_n(self.lo.exp(), 2).max(0.0), hi: up_n(self.hi.exp(), 2) }
    }

    /// `self^p` for a positive interval and real exponent.
    pub fn powf(&self, p: f64) -> Interval {
        assert!(self.lo >= 0.0, "powf of interval reaching below zero");
        let a = self.lo.powf(p);
        let b = self.hi.powf(p);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Interval { lo: down_n(lo, 3).max(0.0), hi: up_n(hi, 3) }
    }

    pub fn scale(&self, c: f64) -> Interval {
        *self * Interval::point(c)
    }

    /// Widens the interval by `n` ulps on each side.
    pub fn widen_ulps(&self, n: usize) -> Interval {
        Interval { lo: down_n(self.lo, n), hi: up_n(self.hi, n) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in p {
            // 0 * inf shows up only for unbounded operands; treat it as 0
            let v = if v.is_nan() { 0.0 } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Panics when the divisor contains zero; callers check `mig() > 0` first.
    fn div(self, o: Interval) -> Interval {
        assert!(o.lo > 0.0 || o.hi < 0.0, "interval division by {o}");
        let inv = Interval { lo: down(1.0 / o.hi), hi: up(1.0 / o.lo) };
        self * inv
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, o: f64) -> Interval {
        self + Interval::point(o)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, o: f64) -> Interval {
        self * Interval::point(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn division_and_abs() {
        let x = Interval::new(-1.0, 2.0);
        assert_eq!(x.mig(), 0.0);
        assert_eq!(x.mag(), 2.0);
        let q = Interval::ONE / Interval::new(2.0, 4.0);
        assert!(q.contains(0.25) && q.contains(0.5));
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_point_results(
            a in -1e3f64..1e3, b in -1e3f64..1e3, c in 0.1f64..1e3,
            wa in 0.0f64..1.0, wb in 0.0f64..1.0,
            ta in 0.0f64..1.0, tb in 0.0f64..1.0,
        ) {
            let x = Interval::new(a, a + wa);
            let y = Interval::new(b, b + wb);
            let px = a + ta * wa;
            let py = b + tb * wb;
            prop_assert!((x + y).contains(px + py));
            prop_assert!((x - y).contains(px - py));
            prop_assert!((x * y).contains(px * py));
            let z = Interval::new(c, c + wb);
            let pz = c + tb * wb;
            prop_assert!((x / z).contains(px / pz));
            prop_assert!(z.powf(0.63).contains(pz.powf(0.63)));
            prop_assert!(Interval::new(-wa, wb).exp().contains((-wa + ta * (wa + wb)).exp()));
        }
    }
}
