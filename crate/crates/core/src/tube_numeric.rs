//! Brute-force tube volumes in any dimension.
//!
//! Distances to an attractor are bracketed by a best-first search over
//! cylinders: the distance to a cylinder's bounding box is a lower bound for
//! every point below it, the distance to any known point of the cylinder an
//! upper bound. Grid and Monte-Carlo estimators count membership in `K_ε`
//! through that search and never touch the closed-form machinery.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::fmt::g12;
use crate::geometry::{dist, BoxNd, Point};
use crate::ifs::{Cylinder, IfsSpec};
use crate::interval::Interval;
use crate::map_expr::ConformalMap;

/// Upper limit on the number of grid cells per estimate.
pub const DEFAULT_CELL_CAP: u64 = 1 << 32;
/// Cylinders expanded per distance query before giving up on the tolerance.
const EXPANSION_CAP: usize = 1_000_000;
const MC_CHUNK: u64 = 4096;

/// A set given as nested cylinders that shrink to points.
pub trait CylinderGeometry: Sync {
    type Node: Clone + Send;
    fn dim(&self) -> usize;
    fn root(&self) -> Self::Node;
    fn children(&self, node: &Self::Node, out: &mut Vec<Self::Node>);
    /// Lower bound for the distance from `x` to the part of the set below `node`.
    fn lower(&self, node: &Self::Node, x: &[f64]) -> f64;
    /// Distance from `x` to some point of the set below `node`.
    fn upper(&self, node: &Self::Node, x: &[f64]) -> f64;
    /// Box containing the whole set.
    fn bounding_box(&self) -> BoxNd;
}

/// Any attractor, through affine cylinder maps.
pub struct SetGeometry<'a> {
    ifs: &'a IfsSpec,
}

impl<'a> SetGeometry<'a> {
    pub fn new(ifs: &'a IfsSpec) -> Self {
        SetGeometry { ifs }
    }
}

impl CylinderGeometry for SetGeometry<'_> {
    type Node = Cylinder;
    fn dim(&self) -> usize {
        self.ifs.dim()
    }
    fn root(&self) -> Cylinder {
        self.ifs.root_cylinder()
    }
    fn children(&self, node: &Cylinder, out: &mut Vec<Cylinder>) {
        out.extend((0..self.ifs.len()).map(|i| self.ifs.child_cylinder(node, i)));
    }
    fn lower(&self, node: &Cylinder, x: &[f64]) -> f64 {
        node.bbox.dist_to_point(x)
    }
    fn upper(&self, node: &Cylinder, x: &[f64]) -> f64 {
        node.anchors.iter().map(|a| dist(a, x)).fold(f64::INFINITY, f64::min)
    }
    fn bounding_box(&self) -> BoxNd {
        self.ifs.hull().clone()
    }
}

/// Cylinder `x ↦ s·x + o` of a system on the line, with the images `y0, y1`
/// of the hull endpoints under the set's embedding.
#[derive(Clone, Copy, Debug)]
pub struct LineNode {
    s: f64,
    o: f64,
    y0: f64,
    y1: f64,
}

/// An attractor on the line, or its image under a monotone map.
pub struct LineGeometry<'a> {
    maps: Vec<(f64, f64)>,
    a: f64,
    b: f64,
    map: Option<&'a ConformalMap>,
}

impl<'a> LineGeometry<'a> {
    pub fn new(ifs: &IfsSpec) -> Result<Self> {
        Self::build(ifs, None)
    }

    /// `g(K)`; `g` must be monotone on the hull, which a nonvanishing derivative guarantees.
    pub fn image(ifs: &IfsSpec, map: &'a ConformalMap) -> Result<Self> {
        if map.dim() != 1 {
            return invalid("map and IFS dimensions differ");
        }
        Self::build(ifs, Some(map))
    }

    fn build(ifs: &IfsSpec, map: Option<&'a ConformalMap>) -> Result<Self> {
        if ifs.dim() != 1 {
            return invalid("line geometry needs a one-dimensional IFS");
        }
        let maps = ifs.maps().iter().map(|m| (m.ratio() * m.rotation()[0], m.translation()[0])).collect();
        Ok(LineGeometry { maps, a: ifs.hull().lo[0], b: ifs.hull().hi[0], map })
    }

    fn node(&self, s: f64, o: f64) -> LineNode {
        let (x0, x1) = (s * self.a + o, s * self.b + o);
        match self.map {
            None => LineNode { s, o, y0: x0, y1: x1 },
            Some(g) => LineNode { s, o, y0: g.eval_1d(x0), y1: g.eval_1d(x1) },
        }
    }
}

impl CylinderGeometry for LineGeometry<'_> {
    type Node = LineNode;
    fn dim(&self) -> usize {
        1
    }
    fn root(&self) -> LineNode {
        self.node(1.0, 0.0)
    }
    fn children(&self, n: &LineNode, out: &mut Vec<LineNode>) {
        out.extend(self.maps.iter().map(|(sk, ok)| self.node(n.s * sk, n.s * ok + n.o)));
    }
    fn lower(&self, n: &LineNode, x: &[f64]) -> f64 {
        let (lo, hi) = if n.y0 <= n.y1 { (n.y0, n.y1) } else { (n.y1, n.y0) };
        let pad = 4.0 * f64::EPSILON * (lo.abs().max(hi.abs()));
        (lo - pad - x[0]).max(x[0] - hi - pad).max(0.0)
    }
    fn upper(&self, n: &LineNode, x: &[f64]) -> f64 {
        (n.y0 - x[0]).abs().min((n.y1 - x[0]).abs())
    }
    fn bounding_box(&self) -> BoxNd {
        let r = self.root();
        BoxNd::interval(r.y0.min(r.y1), r.y0.max(r.y1))
    }
}

/// `g(K)` in the plane: image boxes from the interval extension of `g`,
/// image anchors from exact evaluation.
pub struct ImageGeometry<'a> {
    ifs: &'a IfsSpec,
    map: &'a ConformalMap,
}

impl<'a> ImageGeometry<'a> {
    pub fn new(ifs: &'a IfsSpec, map: &'a ConformalMap) -> Result<Self> {
        if ifs.dim() != map.dim() {
            return invalid("map and IFS dimensions differ");
        }
        Ok(ImageGeometry { ifs, map })
    }
}

#[derive(Clone, Debug)]
pub struct ImageNode {
    base: Cylinder,
    bbox: BoxNd,
    anchors: SmallVec<[Point; 4]>,
}

impl ImageGeometry<'_> {
    fn lift(&self, base: Cylinder) -> ImageNode {
        let bbox = self.map.image_box(&base.bbox);
        let anchors = base.anchors.iter().map(|a| self.map.eval_unchecked(a)).collect();
        ImageNode { base, bbox, anchors }
    }
}

impl CylinderGeometry for ImageGeometry<'_> {
    type Node = ImageNode;
    fn dim(&self) -> usize {
        self.ifs.dim()
    }
    fn root(&self) -> ImageNode {
        self.lift(self.ifs.root_cylinder())
    }
    fn children(&self, n: &ImageNode, out: &mut Vec<ImageNode>) {
        out.extend((0..self.ifs.len()).map(|i| self.lift(self.ifs.child_cylinder(&n.base, i))));
    }
    fn lower(&self, n: &ImageNode, x: &[f64]) -> f64 {
        n.bbox.dist_to_point(x)
    }
    fn upper(&self, n: &ImageNode, x: &[f64]) -> f64 {
        n.anchors.iter().map(|a| dist(a, x)).fold(f64::INFINITY, f64::min)
    }
    fn bounding_box(&self) -> BoxNd {
        self.root().bbox
    }
}

struct Entry<N> {
    lb: f64,
    node: N,
}

impl<N> PartialEq for Entry<N> {
    fn eq(&self, o: &Self) -> bool {
        self.lb == o.lb
    }
}
impl<N> Eq for Entry<N> {}
impl<N> PartialOrd for Entry<N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<N> Ord for Entry<N> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb)
    }
}

/// Reusable state for repeated distance queries.
pub struct DistanceSearch<'g, G: CylinderGeometry> {
    geom: &'g G,
    root: G::Node,
    heap: BinaryHeap<Entry<G::Node>>,
    kids: Vec<G::Node>,
    floor: f64,
}

impl<'g, G: CylinderGeometry> DistanceSearch<'g, G> {
    pub fn new(geom: &'g G) -> Self {
        let bb = geom.bounding_box();
        let scale = bb.diameter() + (0..bb.dim()).map(|k| bb.lo[k].abs().max(bb.hi[k].abs())).fold(0.0, f64::max);
        DistanceSearch { geom, root: geom.root(), heap: BinaryHeap::new(), kids: Vec::new(), floor: 1e-13 * scale }
    }

    /// Brackets `d(x, set)`, stopping once the width is at most `tol` or
    /// `done(lo, hi)` holds.
    pub fn bracket(&mut self, x: &[f64], tol: f64, done: impl Fn(f64, f64) -> bool) -> Interval {
        let tol = tol.max(self.floor);
        self.heap.clear();
        let mut ub = self.geom.upper(&self.root, x);
        self.heap.push(Entry { lb: self.geom.lower(&self.root, x), node: self.root.clone() });
        let mut expanded = 0;
        while let Some(Entry { lb, node }) = self.heap.pop() {
            if ub - lb <= tol || done(lb, ub) || expanded >= EXPANSION_CAP {
                return Interval::new(lb.min(ub), ub);
            }
            expanded += 1;
            self.kids.clear();
            self.geom.children(&node, &mut self.kids);
            for k in &self.kids {
                ub = ub.min(self.geom.upper(k, x));
            }
            for k in self.kids.drain(..) {
                let clb = self.geom.lower(&k, x);
                if clb < ub {
                    self.heap.push(Entry { lb: clb, node: k });
                }
            }
        }
        // everything left was pruned against the upper bound, which is attained
        Interval::new(ub, ub)
    }
}

/// Encloses `d(x, K)` to width `tol`.
pub fn distance_to_attractor(ifs: &IfsSpec, x: &[f64], tol: f64) -> Result<Interval> {
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    if x.len() != ifs.dim() {
        return invalid("point dimension differs from the IFS");
    }
    let d = if ifs.dim() == 1 {
        let g = LineGeometry::new(ifs)?;
        DistanceSearch::new(&g).bracket(x, tol, |_, _| false)
    } else {
        let g = SetGeometry::new(ifs);
        DistanceSearch::new(&g).bracket(x, tol, |_, _| false)
    };
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Grid,
    Mc,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Grid => "grid",
            Method::Mc => "mc",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TubeEstimate {
    pub eps: f64,
    pub value: f64,
    /// 95% half-width for Monte-Carlo, half the bracket for the grid.
    pub ci_half_width: f64,
    pub method: Method,
    pub seed: Option<u64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl TubeEstimate {
    pub fn exact(eps: f64, value: f64) -> Self {
        TubeEstimate { eps, value, ci_half_width: 0.0, method: Method::Exact, seed: None, lower: None, upper: None }
    }

    pub fn csv_header() -> &'static str {
        "eps,value,ci_half_width,method,seed"
    }

    pub fn csv_row(&self) -> String {
        let seed = self.seed.map_or(String::new(), |s| s.to_string());
        format!("{},{},{},{},{}", g12(self.eps), g12(self.value), g12(self.ci_half_width), self.method.name(), seed)
    }
}

pub fn write_estimates_csv(rows: &[TubeEstimate], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", TubeEstimate::csv_header())?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Rigorous bracket of `λ(K_ε ∩ region)` from a uniform grid on `region`.
pub fn grid_estimate<G: CylinderGeometry>(
    geom: &G,
    eps: f64,
    resolution: usize,
    region: &BoxNd,
    cell_cap: u64,
) -> Result<TubeEstimate> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("eps = {eps} must be positive"));
    }
    if resolution < 2 {
        return invalid("resolution must be at least 2 cells per axis");
    }
    let d = geom.dim();
    let cells = (resolution as u64).checked_pow(d as u32).filter(|c| *c <= cell_cap);
    let Some(cells) = cells else {
        return Err(Error::ResourceLimit { what: "grid cells".into(), cap: cell_cap });
    };
    let widths: Point = (0..d).map(|k| (region.hi[k] - region.lo[k]) / resolution as f64).collect();
    let rho = 0.5 * widths.iter().map(|w| w * w).sum::<f64>().sqrt();
    let cell_volume: f64 = widths.iter().product();
    let tol = eps * 1e-3;
    let (inside, touching) = (0..cells)
        .into_par_iter()
        .map_init(
            || DistanceSearch::new(geom),
            |search, idx| {
                let mut k = idx;
                let c: Point = (0..d)
                    .map(|ax| {
                        let i = k % resolution as u64;
                        k /= resolution as u64;
                        region.lo[ax] + (i as f64 + 0.5) * widths[ax]
                    })
                    .collect();
                let iv = search.bracket(&c, tol, |lo, hi| hi + rho <= eps || lo - rho > eps);
                ((iv.hi + rho <= eps) as u64, (iv.lo - rho <= eps) as u64)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    // cell widths and volumes carry rounding; round the bracket outward
    let bracket = Interval::new(inside as f64 * cell_volume, touching as f64 * cell_volume).widen_ulps(4 * d + 4);
    let (lower, upper) = (bracket.lo.max(0.0), bracket.hi);
    Ok(TubeEstimate {
        eps,
        value: 0.5 * (lower + upper),
        ci_half_width: 0.5 * (upper - lower),
        method: Method::Grid,
        seed: None,
        lower: Some(lower),
        upper: Some(upper),
    })
}

/// Monte-Carlo estimate of `λ(K_ε)` from uniform samples in the ε-padded box.
pub fn mc_estimate<G: CylinderGeometry>(geom: &G, eps: f64, n_samples: u64, seed: u64) -> Result<TubeEstimate> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("eps = {eps} must be positive"));
    }
    if n_samples < 100 {
        return invalid("Monte-Carlo needs at least 100 samples");
    }
    let bx = geom.bounding_box().inflate(eps);
    let d = geom.dim();
    let tol = eps * 1e-3;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map_init(
            || DistanceSearch::new(geom),
            |search, chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                let count = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
                let mut x: Point = Point::from_elem(0.0, d);
                let mut hits = 0u64;
                for _ in 0..count {
                    for k in 0..d {
                        x[k] = bx.lo[k] + (bx.hi[k] - bx.lo[k]) * rng.gen::<f64>();
                    }
                    let iv = search.bracket(&x, tol, |lo, hi| hi <= eps || lo > eps);
                    let inside = if iv.hi <= eps {
                        true
                    } else if iv.lo > eps {
                        false
                    } else {
                        iv.mid() <= eps
                    };
                    hits += inside as u64;
                }
                hits
            },
        )
        .sum();
    let n = n_samples as f64;
    let p = hits as f64 / n;
    let vol = bx.volume();
    // the normal approximation collapses when no sample (or every sample)
    // hits; fall back to the rule of three
    let half = if hits == 0 || hits == n_samples { 3.0 / n } else { 1.96 * (p * (1.0 - p) / n).sqrt() };
    Ok(TubeEstimate {
        eps,
        value: vol * p,
        ci_half_width: vol * half,
        method: Method::Mc,
        seed: Some(seed),
        lower: None,
        upper: None,
    })
}

fn padded_box<G: CylinderGeometry>(geom: &G, eps: f64) -> BoxNd {
    geom.bounding_box().inflate(eps)
}

/// Grid bracket for `λ(K_ε)` with `resolution` cells per axis.
pub fn tube_volume_grid(ifs: &IfsSpec, eps: f64, resolution: usize) -> Result<TubeEstimate> {
    if ifs.dim() == 1 {
        let g = LineGeometry::new(ifs)?;
        grid_estimate(&g, eps, resolution, &padded_box(&g, eps), DEFAULT_CELL_CAP)
    } else {
        let g = SetGeometry::new(ifs);
        grid_estimate(&g, eps, resolution, &padded_box(&g, eps), DEFAULT_CELL_CAP)
    }
}

/// Grid bracket for `λ(K_ε ∩ region)`.
pub fn tube_volume_grid_in(ifs: &IfsSpec, eps: f64, resolution: usize, region: &BoxNd) -> Result<TubeEstimate> {
    if region.dim() != ifs.dim() {
        return invalid("region dimension differs from the IFS");
    }
    if ifs.dim() == 1 {
        grid_estimate(&LineGeometry::new(ifs)?, eps, resolution, region, DEFAULT_CELL_CAP)
    } else {
        grid_estimate(&SetGeometry::new(ifs), eps, resolution, region, DEFAULT_CELL_CAP)
    }
}

/// Monte-Carlo estimate of `λ(K_ε)`; bit-identical for a fixed seed.
pub fn tube_volume_mc(ifs: &IfsSpec, eps: f64, n_samples: u64, seed: u64) -> Result<TubeEstimate> {
    if ifs.dim() == 1 {
        mc_estimate(&LineGeometry::new(ifs)?, eps, n_samples, seed)
    } else {
        mc_estimate(&SetGeometry::new(ifs), eps, n_samples, seed)
    }
}
