//! Conformal maps given as text.
//!
//! ```text
//! map   := term ( ("o" | "∘") term )*          composition, rightmost applied first
//! term  := "identity" | "affine" a b | "poly" c0 c1 … ck | "exp"
//!        | "mobius" a b c d | "devil_staircase"
//!        | "complex_poly" z0 z1 … zk | "complex_mobius" za zb zc zd
//! ```
//!
//! Real kinds act on the line, complex kinds on the plane identified with ℂ.
//! Complex literals are written `a+bi`, `a-bi`, `bi` or `a`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::devil;
use crate::error::{Error, Result};
use crate::geometry::{BoxNd, Point};
use crate::interval::Interval;

#[derive(Clone, Debug, PartialEq)]
pub enum MapExpr {
    Identity,
    Affine {
        a: f64,
        b: f64,
    },
    /// Coefficients in increasing degree.
    Poly(Vec<f64>),
    Exp,
    Mobius {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    DevilStaircase,
    ComplexPoly(Vec<Complex64>),
    ComplexMobius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    /// `outer ∘ inner`.
    Compose(Box<MapExpr>, Box<MapExpr>),
}

struct Token<'a> {
    text: &'a str,
    pos: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &text[s..i], pos: s });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &text[s..], pos: s });
    }
    out
}

fn syntax<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Syntax { pos, msg: msg.into() })
}

fn real(tok: &Token<'_>) -> Result<f64> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => syntax(tok.pos, format!("expected a finite number, found '{}'", tok.text)),
    }
}

fn complex(tok: &Token<'_>) -> Result<Complex64> {
    parse_complex(tok.text).ok_or_else(|| Error::Syntax {
        pos: tok.pos,
        msg: format!("expected a complex number like 1-2i, found '{}'", tok.text),
    })
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let num = |t: &str| -> Option<f64> { t.parse::<f64>().ok().filter(|v| v.is_finite()) };
    let Some(body) = s.strip_suffix('i') else {
        return num(s).map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not a leading sign or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => num(t)?,
    };
    Some(Complex64::new(re, im))
}

impl MapExpr {
    pub fn parse(text: &str) -> Result<MapExpr> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return syntax(0, "empty map expression");
        }
        let mut terms = Vec::new();
        let mut k = 0;
        loop {
            let (term, next) = Self::parse_term(&tokens, k, text.len())?;
            terms.push(term);
            k = next;
            if k == tokens.len() {
                break;
            }
            if tokens[k].text != "o" && tokens[k].text != "∘" {
                return syntax(tokens[k].pos, format!("unexpected '{}'", tokens[k].text));
            }
            k += 1;
            if k == tokens.len() {
                return syntax(text.len(), "composition is missing its right operand");
            }
        }
        let mut expr = terms.pop().expect("at least one term");
        while let Some(outer) = terms.pop() {
            expr = MapExpr::Compose(Box::new(outer), Box::new(expr));
        }
        expr.check_dims().map_err(|msg| Error::Syntax { pos: 0, msg })?;
        Ok(expr)
    }

    fn parse_term(tokens: &[Token<'_>], k: usize, end: usize) -> Result<(MapExpr, usize)> {
        let head = &tokens[k];
        let args_until =
            tokens[k + 1..].iter().position(|t| t.text == "o" || t.text == "∘").map_or(tokens.len(), |p| k + 1 + p);
        let args = &tokens[k + 1..args_until];
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                let pos = args.get(n).map_or(end, |t| t.pos);
                syntax(pos, format!("'{}' takes {n} argument(s), found {}", head.text, args.len()))
            }
        };
        let expr = match head.text {
            "identity" => {
                want(0)?;
                MapExpr::Identity
            }
            "affine" => {
                want(2)?;
                MapExpr::Affine { a: real(&args[0])?, b: real(&args[1])? }
            }
            "poly" => {
                if args.is_empty() {
                    return syntax(end, "'poly' needs at least one coefficient");
                }
                MapExpr::Poly(args.iter().map(real).collect::<Result<_>>()?)
            }
            "exp" => {
                want(0)?;
                MapExpr::Exp
            }
            "mobius" => {
                want(4)?;
                let v = args.iter().map(real).collect::<Result<Vec<_>>>()?;
                MapExpr::Mobius { a: v[0], b: v[1], c: v[2], d: v[3] }
            }
            "devil_staircase" => {
                want(0)?;
                MapExpr::DevilStaircase
            }
            "complex_poly" => {
                if args.is_empty() {
                    return syntax(end, "'complex_poly' needs at least one coefficient");
                }
                MapExpr::ComplexPoly(args.iter().map(complex).collect::<Result<_>>()?)
            }
            "complex_mobius" => {
                want(4)?;
                let v = args.iter().map(complex).collect::<Result<Vec<_>>>()?;
                MapExpr::ComplexMobius { a: v[0], b: v[1], c: v[2], d: v[3] }
            }
            other => return syntax(head.pos, format!("unknown map kind '{other}'")),
        };
        Ok((expr, args_until))
    }

    /// Ambient dimension, `None` for kinds that work in any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            MapExpr::Identity => None,
            MapExpr::ComplexPoly(_) | MapExpr::ComplexMobius { .. } => Some(2),
            MapExpr::Compose(o, i) => o.dim().or(i.dim()),
            _ => Some(1),
        }
    }

    fn check_dims(&self) -> std::result::Result<(), String> {
        if let MapExpr::Compose(o, i) = self {
            o.check_dims()?;
            i.check_dims()?;
            if let (Some(a), Some(b)) = (o.dim(), i.dim()) {
                if a != b {
                    return Err("cannot compose a map of the line with a map of the plane".into());
                }
            }
        }
        Ok(())
    }

    fn contains_devil(&self) -> bool {
        match self {
            MapExpr::DevilStaircase => true,
            MapExpr::Compose(o, i) => o.contains_devil() || i.contains_devil(),
            _ => false,
        }
    }

    /// True when `|g'|` is constant.
    pub fn has_constant_derivative(&self) -> bool {
        match self {
            MapExpr::Identity | MapExpr::Affine { .. } => true,
            MapExpr::Poly(c) => c.iter().skip(2).all(|v| *v == 0.0),
            MapExpr::ComplexPoly(c) => c.iter().skip(2).all(|v| *v == Complex64::new(0.0, 0.0)),
            MapExpr::Compose(o, i) => o.has_constant_derivative() && i.has_constant_derivative(),
            _ => false,
        }
    }

    fn eval_real(&self, x: f64) -> f64 {
        match self {
            MapExpr::Identity => x,
            MapExpr::Affine { a, b } => a * x + b,
            MapExpr::Poly(c) => c.iter().rev().fold(0.0, |acc, v| acc * x + v),
            MapExpr::Exp => x.exp(),
            MapExpr::Mobius { a, b, c, d } => (a * x + b) / (c * x + d),
            MapExpr::DevilStaircase => devil::staircase(x),
            MapExpr::Compose(o, i) => o.eval_real(i.eval_real(x)),
            _ => unreachable!("complex kind on the line"),
        }
    }

    /// Signed derivative on the line.
    fn deriv_real(&self, x: f64) -> f64 {
        match self {
            MapExpr::Identity => 1.0,
            MapExpr::Affine { a, .. } => *a,
            MapExpr::Poly(c) => c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, v)| acc * x + k as f64 * v),
            MapExpr::Exp => x.exp(),
            MapExpr::Mobius { a, b, c, d } => (a * d - b * c) / ((c * x + d) * (c * x + d)),
            MapExpr::DevilStaircase => devil::staircase_deriv(x),
            MapExpr::Compose(o, i) => o.deriv_real(i.eval_real(x)) * i.deriv_real(x),
            _ => unreachable!("complex kind on the line"),
        }
    }

    fn eval_complex(&self, z: Complex64) -> Complex64 {
        match self {
            MapExpr::Identity => z,
            MapExpr::ComplexPoly(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, v| acc * z + v),
            MapExpr::ComplexMobius { a, b, c, d } => (a * z + b) / (c * z + d),
            MapExpr::Compose(o, i) => o.eval_complex(i.eval_complex(z)),
            _ => unreachable!("real kind in the plane"),
        }
    }

    fn deriv_complex(&self, z: Complex64) -> Complex64 {
        match self {
            MapExpr::Identity => Complex64::new(1.0, 0.0),
            MapExpr::ComplexPoly(c) => {
                c.iter().enumerate().skip(1).rev().fold(Complex64::new(0.0, 0.0), |acc, (k, v)| acc * z + v * k as f64)
            }
            MapExpr::ComplexMobius { a, b, c, d } => {
                let w = c * z + d;
                (a * d - b * c) / (w * w)
            }
            MapExpr::Compose(o, i) => o.deriv_complex(i.eval_complex(z)) * i.deriv_complex(z),
            _ => unreachable!("real kind in the plane"),
        }
    }

    /// Enclosure of `g(X)` on the line.
    fn eval_iv(&self, x: Interval) -> Interval {
        let mono = |f: &dyn Fn(f64) -> f64| Interval::spanning(f(x.lo), f(x.hi)).widen_ulps(4);
        match self {
            MapExpr::Identity => x,
            MapExpr::Affine { a, b } => x * *a + *b,
            MapExpr::Poly(c) => c.iter().rev().fold(Interval::ZERO, |acc, v| acc * x + *v),
            MapExpr::Exp => x.exp(),
            MapExpr::Mobius { c, d, .. } => {
                let den = x * *c + *d;
                if den.mig() > 0.0 {
                    mono(&|t| self.eval_real(t))
                } else {
                    Interval::new(f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            MapExpr::DevilStaircase => devil::staircase_enclosure(x.lo).hull(&devil::staircase_enclosure(x.hi)),
            MapExpr::Compose(o, i) => o.eval_iv(i.eval_iv(x)),
            _ => unreachable!("complex kind on the line"),
        }
    }

    /// Enclosure of the signed `g'(X)` on the line.
    fn deriv_iv(&self, x: Interval) -> Interval {
        match self {
            MapExpr::Identity => Interval::ONE,
            MapExpr::Affine { a, .. } => Interval::point(*a),
            MapExpr::Poly(c) => {
                c.iter().enumerate().skip(1).rev().fold(Interval::ZERO, |acc, (k, v)| acc * x + k as f64 * v)
            }
            MapExpr::Exp => x.exp(),
            MapExpr::Mobius { a, b, c, d } => {
                let den = x * *c + *d;
                if den.mig() > 0.0 {
                    Interval::point(a * d - b * c) / den.sqr()
                } else {
                    Interval::new(f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            MapExpr::DevilStaircase => {
                let b = devil::beta();
                let hi = (devil::cantor_function(x.lo) + 1.0).powf(-b);
                let lo = (devil::cantor_function(x.hi) + 1.0).powf(-b);
                Interval::new(lo, hi).widen_ulps(8)
            }
            MapExpr::Compose(o, i) => o.deriv_iv(i.eval_iv(x)) * i.deriv_iv(x),
            _ => unreachable!("complex kind on the line"),
        }
    }

    fn eval_rect(&self, z: Rect) -> Rect {
        match self {
            MapExpr::Identity => z,
            MapExpr::ComplexPoly(c) => {
                c.iter().rev().fold(Rect::point(Complex64::new(0.0, 0.0)), |acc, v| acc.mul(&z).add(&Rect::point(*v)))
            }
            MapExpr::ComplexMobius { a, b, c, d } => {
                let num = Rect::point(*a).mul(&z).add(&Rect::point(*b));
                let den = Rect::point(*c).mul(&z).add(&Rect::point(*d));
                num.div(&den)
            }
            MapExpr::Compose(o, i) => o.eval_rect(i.eval_rect(z)),
            _ => unreachable!("real kind in the plane"),
        }
    }

    fn deriv_rect(&self, z: Rect) -> Rect {
        match self {
            MapExpr::Identity => Rect::point(Complex64::new(1.0, 0.0)),
            MapExpr::ComplexPoly(c) => {
                c.iter().enumerate().skip(1).rev().fold(Rect::point(Complex64::new(0.0, 0.0)), |acc, (k, v)| {
                    acc.mul(&z).add(&Rect::point(v * k as f64))
                })
            }
            MapExpr::ComplexMobius { a, b, c, d } => {
                let den = Rect::point(*c).mul(&z).add(&Rect::point(*d));
                Rect::point(a * d - b * c).div(&den.mul(&den))
            }
            MapExpr::Compose(o, i) => o.deriv_rect(i.eval_rect(z)).mul(&i.deriv_rect(z)),
            _ => unreachable!("real kind in the plane"),
        }
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cx = |z: &Complex64| format!("{}{:+}i", z.re, z.im);
        match self {
            MapExpr::Identity => write!(f, "identity"),
            MapExpr::Affine { a, b } => write!(f, "affine {a} {b}"),
            MapExpr::Poly(c) => {
                write!(f, "poly")?;
                c.iter().try_for_each(|v| write!(f, " {v}"))
            }
            MapExpr::Exp => write!(f, "exp"),
            MapExpr::Mobius { a, b, c, d } => write!(f, "mobius {a} {b} {c} {d}"),
            MapExpr::DevilStaircase => write!(f, "devil_staircase"),
            MapExpr::ComplexPoly(c) => {
                write!(f, "complex_poly")?;
                c.iter().try_for_each(|v| write!(f, " {}", cx(v)))
            }
            MapExpr::ComplexMobius { a, b, c, d } => {
                write!(f, "complex_mobius {} {} {} {}", cx(a), cx(b), cx(c), cx(d))
            }
            MapExpr::Compose(o, i) => write!(f, "{o} o {i}"),
        }
    }
}

/// Rectangular complex interval.
#[derive(Clone, Copy, Debug)]
struct Rect {
    re: Interval,
    im: Interval,
}

impl Rect {
    fn point(z: Complex64) -> Rect {
        Rect { re: Interval::point(z.re), im: Interval::point(z.im) }
    }

    fn from_box(b: &BoxNd) -> Rect {
        Rect { re: Interval::new(b.lo[0], b.hi[0]), im: Interval::new(b.lo[1], b.hi[1]) }
    }

    fn add(&self, o: &Rect) -> Rect {
        Rect { re: self.re + o.re, im: self.im + o.im }
    }

    fn mul(&self, o: &Rect) -> Rect {
        Rect { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    fn norm_sqr(&self) -> Interval {
        self.re.sqr() + self.im.sqr()
    }

    fn div(&self, o: &Rect) -> Rect {
        let n = o.norm_sqr();
        if n.lo <= 0.0 {
            let all = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
            return Rect { re: all, im: all };
        }
        let conj = Rect { re: o.re, im: -o.im };
        let p = self.mul(&conj);
        Rect { re: p.re / n, im: p.im / n }
    }

    /// Bounds of `|z|` over the rectangle.
    fn modulus(&self) -> Interval {
        let lo = (self.re.mig().powi(2) + self.im.mig().powi(2)).sqrt();
        let hi = (self.re.mag().powi(2) + self.im.mag().powi(2)).sqrt();
        Interval::new(lo.next_down().max(0.0), hi.next_up())
    }
}

/// A map `g` with its domain and Hölder data for `|g'|`.
#[derive(Clone, Debug)]
pub struct ConformalMap {
    expr: MapExpr,
    domain: BoxNd,
    alpha: f64,
    holder_l: Option<f64>,
}

/// Number of sample points behind the nonvanishing-derivative check.
pub const DOMAIN_SAMPLES: usize = 10_000;
pub const HOLDER_SAMPLES: usize = 100_000;
pub const HOLDER_SAFETY: f64 = 1.5;

impl ConformalMap {
    /// Validates `expr` on `domain`: matching dimension, no Möbius pole,
    /// a nondegenerate Möbius map, and `|g'| > 0` at ≥ 10^4 sample points.
    pub fn new(expr: MapExpr, domain: BoxNd) -> Result<Self> {
        let d = domain.dim();
        if d == 0 || d > 2 {
            return Err(Error::Domain("maps act on the line or the plane only".into()));
        }
        if let Some(e) = expr.dim() {
            if e != d {
                return Err(Error::Domain(format!("map acts in dimension {e}, domain has dimension {d}")));
            }
        }
        if (0..d).any(|k| !(domain.lo[k] <= domain.hi[k]) || !domain.lo[k].is_finite() || !domain.hi[k].is_finite()) {
            return Err(Error::Domain("domain box must be finite and nonempty".into()));
        }
        check_mobius(&expr, &domain)?;
        let alpha = if expr.contains_devil() { 2f64.ln() / 3f64.ln() } else { 1.0 };
        let map = ConformalMap { expr, domain, alpha, holder_l: None };
        map.check_nonvanishing()?;
        Ok(map)
    }

    pub fn parse(text: &str, domain: BoxNd) -> Result<Self> {
        ConformalMap::new(MapExpr::parse(text)?, domain)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("Hölder exponent {alpha} outside (0,1]")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Fixes the Hölder constant instead of estimating it.
    pub fn with_holder(mut self, l: f64) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("Hölder constant {l} must be finite and ≥ 0")));
        }
        self.holder_l = Some(l);
        Ok(self)
    }

    pub fn expr(&self) -> &MapExpr {
        &self.expr
    }

    pub fn domain(&self) -> &BoxNd {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn holder_override(&self) -> Option<f64> {
        self.holder_l
    }

    /// `|g'|` when it is constant.
    pub fn constant_derivative(&self) -> Option<f64> {
        self.expr.has_constant_derivative().then(|| self.deriv_mag_unchecked(&self.domain.center()))
    }

    /// The Hölder constant: the stored value, or an estimate over `region`.
    pub fn holder_constant(&self, region: &BoxNd, seed: u64) -> f64 {
        self.holder_l.unwrap_or_else(|| estimate_holder(self, region, self.alpha, HOLDER_SAMPLES, HOLDER_SAFETY, seed))
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        let slack = 1e-12 * (1.0 + self.domain.diameter());
        x.len() == self.dim() && self.domain.inflate(slack).contains_point(x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Point> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("point {x:?} outside the map's domain")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn deriv_mag(&self, x: &[f64]) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("point {x:?} outside the map's domain")));
        }
        Ok(self.deriv_mag_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> Point {
        if self.dim() == 1 {
            Point::from_elem(self.expr.eval_real(x[0]), 1)
        } else {
            let z = self.expr.eval_complex(Complex64::new(x[0], x[1]));
            Point::from_slice(&[z.re, z.im])
        }
    }

    pub fn deriv_mag_unchecked(&self, x: &[f64]) -> f64 {
        if self.dim() == 1 {
            self.expr.deriv_real(x[0]).abs()
        } else {
            self.expr.deriv_complex(Complex64::new(x[0], x[1])).norm()
        }
    }

    /// Signed derivative on the line.
    pub fn deriv_1d(&self, x: f64) -> f64 {
        self.expr.deriv_real(x)
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.expr.eval_real(x)
    }

    /// Enclosure of `|g'|` over a box.
    pub fn deriv_mag_bounds(&self, b: &BoxNd) -> Interval {
        if self.dim() == 1 {
            self.expr.deriv_iv(Interval::new(b.lo[0], b.hi[0])).abs()
        } else {
            self.expr.deriv_rect(Rect::from_box(b)).modulus()
        }
    }

    /// Box enclosing `g(b)`.
    pub fn image_box(&self, b: &BoxNd) -> BoxNd {
        if self.dim() == 1 {
            let y = self.expr.eval_iv(Interval::new(b.lo[0], b.hi[0]));
            return BoxNd::interval(y.lo, y.hi);
        }
        let r = self.expr.eval_rect(Rect::from_box(b));
        // a disk around the image of the center is also an enclosure
        let c = self.eval_unchecked(&b.center());
        let rad = self.deriv_mag_bounds(b).hi * b.half_diagonal() * (1.0 + 1e-12) + 1e-300;
        let lo = [r.re.lo.max(c[0] - rad), r.im.lo.max(c[1] - rad)];
        let hi = [r.re.hi.min(c[0] + rad), r.im.hi.min(c[1] + rad)];
        BoxNd::from_slices(&lo, &hi)
    }

    fn check_nonvanishing(&self) -> Result<()> {
        let pts = sample_grid(&self.domain, DOMAIN_SAMPLES);
        let mut prev_sign = 0.0;
        for x in &pts {
            let m = self.deriv_mag_unchecked(x);
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Domain(format!("|g'| vanishes or is undefined at {x:?}")));
            }
            if self.dim() == 1 {
                let s = self.expr.deriv_real(x[0]).signum();
                if prev_sign != 0.0 && s != prev_sign {
                    return Err(Error::Domain(format!("g' changes sign near {}", x[0])));
                }
                prev_sign = s;
            }
        }
        Ok(())
    }
}

fn check_mobius(expr: &MapExpr, domain: &BoxNd) -> Result<()> {
    match expr {
        MapExpr::Mobius { a, b, c, d } => {
            if a * d - b * c == 0.0 {
                return Err(Error::Domain("degenerate Möbius map (ad − bc = 0)".into()));
            }
            let den = Interval::new(domain.lo[0], domain.hi[0]) * *c + *d;
            if den.lo <= 0.0 && den.hi >= 0.0 {
                return Err(Error::Domain(format!("Möbius pole {} inside the domain", -d / c)));
            }
        }
        MapExpr::ComplexMobius { a, b, c, d } => {
            if a * d - b * c == Complex64::new(0.0, 0.0) {
                return Err(Error::Domain("degenerate Möbius map (ad − bc = 0)".into()));
            }
            if c.norm() > 0.0 {
                let p = -d / c;
                if domain.inflate(1e-12).contains_point(&[p.re, p.im]) {
                    return Err(Error::Domain(format!("Möbius pole {p} inside the domain")));
                }
            }
        }
        // poles of the outer map are reached through the inner map's image
        MapExpr::Compose(o, i) => {
            check_mobius(i, domain)?;
            let img = ConformalMap { expr: (**i).clone(), domain: domain.clone(), alpha: 1.0, holder_l: None }
                .image_box(domain);
            check_mobius(o, &img)?;
        }
        _ => {}
    }
    Ok(())
}

fn sample_grid(b: &BoxNd, n: usize) -> Vec<Point> {
    let d = b.dim();
    let per = ((n as f64).powf(1.0 / d as f64).ceil() as usize).max(2);
    let total = per.pow(d as u32);
    (0..total)
        .map(|mut k| {
            (0..d)
                .map(|ax| {
                    let i = k % per;
                    k /= per;
                    b.lo[ax] + (b.hi[ax] - b.lo[ax]) * i as f64 / (per - 1) as f64
                })
                .collect()
        })
        .collect()
}

pub fn eval_map(map: &ConformalMap, x: &[f64]) -> Result<Point> {
    map.eval(x)
}

pub fn eval_deriv_mag(map: &ConformalMap, x: &[f64]) -> Result<f64> {
    map.deriv_mag(x)
}

/// Parses a map and validates it on `domain`.
pub fn parse_map(text: &str, domain: &BoxNd) -> Result<ConformalMap> {
    ConformalMap::parse(text, domain.clone())
}

/// `safety` times the largest sampled ratio `||g'(x)| − |g'(y)|| / |x−y|^α`
/// over random pairs in `region` at separations spread over six decades.
pub fn estimate_holder(map: &ConformalMap, region: &BoxNd, alpha: f64, samples: usize, safety: f64, seed: u64) -> f64 {
    if map.expr.has_constant_derivative() {
        return 0.0;
    }
    let d = region.dim();
    let diam = region.diameter().max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let x: Point = (0..d).map(|k| rng.gen_range(region.lo[k]..=region.hi[k])).collect();
        let h = diam * 10f64.powf(-rng.gen_range(0.0..6.0));
        let mut dir: Point = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        dir.iter_mut().for_each(|v| *v /= norm);
        let y: Point = (0..d).map(|k| (x[k] + h * dir[k]).clamp(region.lo[k], region.hi[k])).collect();
        let sep = crate::geometry::dist(&x, &y);
        if sep <= 0.0 {
            continue;
        }
        let diff = (map.deriv_mag_unchecked(&x) - map.deriv_mag_unchecked(&y)).abs();
        best = best.max(diff / sep.powf(alpha));
    }
    safety * best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(lo: f64, hi: f64) -> BoxNd {
        BoxNd::interval(lo, hi)
    }

    fn plane() -> BoxNd {
        BoxNd::from_slices(&[0.5, -0.5], &[1.5, 0.5])
    }

    #[test]
    fn parse_examples() {
        let id = parse_map("identity", &line(-1.0, 2.0)).unwrap();
        assert_eq!(id.deriv_mag(&[0.3]).unwrap(), 1.0);
        let af = parse_map("affine 2 5", &line(-1.0, 2.0)).unwrap();
        assert_eq!(af.eval(&[1.0]).unwrap()[0], 7.0);
        assert_eq!(af.deriv_mag(&[0.2]).unwrap(), 2.0);
        let p = parse_map("poly 0 1 0 1", &line(-0.1, 1.1)).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((p.deriv_mag(&[x]).unwrap() - (1.0 + 3.0 * x * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(MapExpr::parse("affine 2"), Err(Error::Syntax { pos: 8, .. })));
        assert!(matches!(MapExpr::parse("  warp 1"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(MapExpr::parse("affine 2 x"), Err(Error::Syntax { pos: 9, .. })));
        assert!(matches!(MapExpr::parse("exp o"), Err(Error::Syntax { .. })));
        assert!(matches!(MapExpr::parse(""), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(MapExpr::parse("exp o complex_poly 0 1"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(parse_map("poly 0 0 1", &line(-1.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(parse_map("mobius 1 0 1 -0.5", &line(0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(parse_map("mobius 1 2 2 4", &line(0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(parse_map("complex_mobius 1 0 1 -1", &plane()), Err(Error::Domain(_))));
        assert!(matches!(parse_map("exp", &plane()), Err(Error::Domain(_))));
        assert!(parse_map("mobius 1 0 1 2", &line(0.0, 1.0)).is_ok());
        let e = parse_map("exp", &line(0.0, 1.0)).unwrap();
        assert!(matches!(e.eval(&[3.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn evaluation_examples() {
        let e = parse_map("exp", &line(-1.0, 1.0)).unwrap();
        assert_eq!(e.deriv_mag(&[0.0]).unwrap(), 1.0);
        let sq = parse_map("complex_poly 0 0 1", &plane()).unwrap();
        assert!((sq.deriv_mag(&[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let d = parse_map("devil_staircase", &line(-0.5, 1.5)).unwrap();
        let b = 3f64.ln() / 2f64.ln();
        assert!((d.deriv_mag(&[0.5]).unwrap() - 1.5f64.powf(-b)).abs() < 1e-15);
        assert!((d.alpha() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1+2i"), Some(Complex64::new(1.0, 2.0)));
        assert_eq!(parse_complex("-1.5e-3-2i"), Some(Complex64::new(-1.5e-3, -2.0)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("3"), Some(Complex64::new(3.0, 0.0)));
        assert_eq!(parse_complex("2e+1i"), Some(Complex64::new(0.0, 20.0)));
        assert_eq!(parse_complex("1+"), None);
    }

    #[test]
    fn composition_with_identity_is_exact() {
        let dom = line(-2.0, 2.0);
        let a = parse_map("affine 3 -1", &dom).unwrap();
        let c = parse_map("affine 3 -1 o identity", &dom).unwrap();
        let c2 = parse_map("identity ∘ affine 3 -1", &dom).unwrap();
        for x in [-1.7, 0.0, 0.4, 1.9] {
            assert_eq!(a.eval(&[x]).unwrap(), c.eval(&[x]).unwrap());
            assert_eq!(a.eval(&[x]).unwrap(), c2.eval(&[x]).unwrap());
        }
        let ec = parse_map("exp o affine 2 0", &dom).unwrap();
        assert!((ec.eval(&[0.5]).unwrap()[0] - 1f64.exp()).abs() < 1e-15);
        assert!((ec.deriv_mag(&[0.5]).unwrap() - 2.0 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn holder_estimates() {
        let dom = line(0.0, 1.0);
        assert_eq!(estimate_holder(&parse_map("identity", &dom).unwrap(), &dom, 1.0, 1000, 1.5, 1), 0.0);
        assert_eq!(estimate_holder(&parse_map("affine 3 1", &dom).unwrap(), &dom, 1.0, 1000, 1.5, 1), 0.0);
        let l = estimate_holder(&parse_map("exp", &dom).unwrap(), &dom, 1.0, HOLDER_SAMPLES, 1.5, 7);
        let e = 1f64.exp();
        assert!(l / 1.5 <= e * (1.0 + 1e-9) && l / 1.5 >= 0.95 * e, "{l}");
    }

    #[test]
    fn interval_extensions_enclose_samples() {
        let dom = line(-0.5, 1.5);
        for text in ["exp", "poly 1 2 0.5", "mobius 1 0 1 2", "devil_staircase", "exp o affine 0.5 0.1"] {
            let m = parse_map(text, &dom).unwrap();
            let sub = line(0.1, 0.45);
            let img = m.image_box(&sub);
            let dv = m.deriv_mag_bounds(&sub);
            for k in 0..=50 {
                let x = 0.1 + 0.35 * k as f64 / 50.0;
                assert!(img.contains_point(&m.eval(&[x]).unwrap()), "{text} image at {x}");
                assert!(dv.contains(m.deriv_mag(&[x]).unwrap()), "{text} deriv at {x}");
            }
        }
        let m = parse_map("complex_poly 0 1 0.3+0.1i", &plane()).unwrap();
        let sub = BoxNd::from_slices(&[0.7, -0.1], &[0.9, 0.2]);
        let img = m.image_box(&sub);
        let dv = m.deriv_mag_bounds(&sub);
        for i in 0..=10 {
            for j in 0..=10 {
                let x = [0.7 + 0.02 * i as f64, -0.1 + 0.03 * j as f64];
                assert!(img.contains_point(&m.eval(&x).unwrap()));
                assert!(dv.contains(m.deriv_mag(&x).unwrap()));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn derivative_matches_central_differences(x in 0.02f64..0.98, kind in 0usize..5) {
            let text = ["exp", "poly 0 1 0 1", "mobius 2 1 1 3", "exp o poly 0 1 0 1", "affine -2 1"][kind];
            let m = parse_map(text, &line(-0.1, 1.1)).unwrap();
            let h = 1e-6;
            let fd = (m.eval(&[x + h]).unwrap()[0] - m.eval(&[x - h]).unwrap()[0]) / (2.0 * h);
            let an = m.deriv_mag(&[x]).unwrap();
            prop_assert!((fd.abs() - an).abs() <= 1e-6 * an);
        }

        #[test]
        fn complex_derivative_matches_differences(x in 0.6f64..1.4, y in -0.4f64..0.4) {
            let m = parse_map("complex_mobius 1 0.5i 0.2 2", &plane()).unwrap();
            let h = 1e-6;
            let f = |p: [f64; 2]| m.eval(&p).unwrap();
            let a = f([x + h, y]);
            let b = f([x - h, y]);
            let fd = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() / (2.0 * h);
            let an = m.deriv_mag(&[x, y]).unwrap();
            prop_assert!((fd - an).abs() <= 1e-6 * an);
        }
    }
}
