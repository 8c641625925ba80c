//! Points, axis-aligned boxes and affine maps in dimension at most three
//! without heap allocation.

use smallvec::SmallVec;

pub type Point = SmallVec<[f64; 3]>;
pub type Matrix = SmallVec<[f64; 9]>;

/// Relative padding applied to every box image to absorb rounding.
const PAD: f64 = 4.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxNd {
    pub lo: Point,
    pub hi: Point,
}

impl BoxNd {
    pub fn new(lo: Point, hi: Point) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        BoxNd { lo, hi }
    }

    pub fn from_slices(lo: &[f64], hi: &[f64]) -> Self {
        BoxNd::new(lo.iter().copied().collect(), hi.iter().copied().collect())
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        BoxNd::from_slices(&[lo], &[hi])
    }

    pub fn point(x: &[f64]) -> Self {
        BoxNd::from_slices(x, x)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Point {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Point {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.diameter()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn inflate(&self, r: f64) -> BoxNd {
        BoxNd { lo: self.lo.iter().map(|a| a - r).collect(), hi: self.hi.iter().map(|b| b + r).collect() }
    }

    pub fn union(&self, other: &BoxNd) -> BoxNd {
        BoxNd {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, v)| self.lo[k] <= *v && *v <= self.hi[k])
    }

    /// `other ⊆ self` up to an absolute slack.
    pub fn contains_box(&self, other: &BoxNd, slack: f64) -> bool {
        (0..self.dim()).all(|k| self.lo[k] - slack <= other.lo[k] && other.hi[k] <= self.hi[k] + slack)
    }

    /// Euclidean distance from the box to `x` (zero inside).
    pub fn dist_to_point(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, v) in x.iter().enumerate() {
            let d = if *v < self.lo[k] {
                self.lo[k] - v
            } else if *v > self.hi[k] {
                v - self.hi[k]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Euclidean distance between two boxes.
    pub fn dist_to_box(&self, other: &BoxNd) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim() {
            let d = (other.lo[k] - self.hi[k]).max(self.lo[k] - other.hi[k]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    /// Splits the box in half along its widest axis.
    pub fn bisect(&self) -> (BoxNd, BoxNd) {
        let k = (0..self.dim())
            .max_by(|a, b| (self.hi[*a] - self.lo[*a]).total_cmp(&(self.hi[*b] - self.lo[*b])))
            .unwrap_or(0);
        let m = 0.5 * (self.lo[k] + self.hi[k]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[k] = m;
        right.lo[k] = m;
        (left, right)
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `x ↦ A x + t` with `A` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub lin: Matrix,
    pub trans: Point,
}

impl Affine {
    pub fn identity(dim: usize) -> Self {
        let mut lin: Matrix = SmallVec::from_elem(0.0, dim * dim);
        for k in 0..dim {
            lin[k * dim + k] = 1.0;
        }
        Affine { lin, trans: SmallVec::from_elem(0.0, dim) }
    }

    pub fn dim(&self) -> usize {
        self.trans.len()
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        let d = self.dim();
        (0..d).map(|i| self.trans[i] + (0..d).map(|j| self.lin[i * d + j] * x[j]).sum::<f64>()).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        let d = self.dim();
        let mut lin: Matrix = SmallVec::from_elem(0.0, d * d);
        for i in 0..d {
            for j in 0..d {
                lin[i * d + j] = (0..d).map(|k| self.lin[i * d + k] * inner.lin[k * d + j]).sum();
            }
        }
        Affine { lin, trans: self.apply(&inner.trans) }
    }

    /// Axis-aligned box enclosing the image of `b`, padded against rounding.
    pub fn image_box(&self, b: &BoxNd) -> BoxNd {
        let d = self.dim();
        let c = self.apply(&b.center());
        let h = b.half_widths();
        let mut lo = Point::new();
        let mut hi = Point::new();
        for i in 0..d {
            let mut r: f64 = (0..d).map(|j| self.lin[i * d + j].abs() * h[j]).sum();
            r += PAD * (c[i].abs() + r);
            lo.push(c[i] - r);
            hi.push(c[i] + r);
        }
        BoxNd { lo, hi }
    }

    /// Same as `image_box` without padding; used for fixed-point iterations.
    pub fn image_box_tight(&self, b: &BoxNd) -> BoxNd {
        let d = self.dim();
        let mut lo = Point::new();
        let mut hi = Point::new();
        for i in 0..d {
            let mut a = self.trans[i];
            let mut z = self.trans[i];
            for j in 0..d {
                let m = self.lin[i * d + j];
                let (p, q) = (m * b.lo[j], m * b.hi[j]);
                a += p.min(q);
                z += p.max(q);
            }
            lo.push(a);
            hi.push(z);
        }
        BoxNd { lo, hi }
    }
}

/// Solves `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. Returns `None` for a numerically singular matrix.
pub fn solve_linear(a: &[f64], b: &[f64]) -> Option<Point> {
    let n = b.len();
    let mut m: Vec<f64> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|i, j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let s: f64 = (col + 1..n).map(|k| m[col * n + k] * x[k]).sum();
        x[col] = (x[col] - s) / m[col * n + col];
    }
    Some(x.into_iter().collect())
}
