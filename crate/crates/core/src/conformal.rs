//! Images `F = g(K)` of self-similar sets under conformal maps.
//!
//! The factor `∫_K |g'|^δ dμ_δ` is enclosed over a stopping partition on
//! which `|g'|` has bounded distortion: each word contributes `r_ω^δ` times
//! the interval bounds of `|g'|^δ` over its cylinder hull. The distortion
//! bound is checked per word with the interval extension of `g'` rather than
//! assumed from the Hölder estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::content::{cesaro_avg_content_with, gatzouras_avg_content, oscillation_amplitude, ContentReport};
use crate::error::{invalid, Error, Result};
use crate::fmt::g12;
use crate::geometry::BoxNd;
use crate::ifs::{compute_kappa, moran_dimension, stopping_words, IfsSpec, Word};
use crate::interval::Interval;
use crate::map_expr::{ConformalMap, MapExpr};
use crate::tube_exact::{LineIfs, Provenance, TubeProfile};
use crate::tube_numeric::{grid_estimate, mc_estimate, ImageGeometry, LineGeometry, Method, TubeEstimate};

pub const HOLDER_SEED: u64 = 0x5eed_0001;
/// Refinement depth for `κ` when the system does not carry one.
pub const KAPPA_DEPTH: usize = 40;
const MIN_SCALING_STEPS: usize = 20_000;
const IMAGE_NODE_CAP: usize = 50_000_000;

/// Stopping partition `Σ(ε, δ_dist)` with its distortion certificate.
#[derive(Clone, Debug)]
pub struct DistortionPartition {
    pub delta_dist: f64,
    pub eps: f64,
    pub b: f64,
    pub words: Vec<Word>,
    pub s_g: f64,
    pub holder_l: f64,
    pub alpha: f64,
    /// Enclosure of `|g'|` over the `eps/s_g`-fattened hull of each word.
    pub deriv_bounds: Vec<Interval>,
    /// Largest `sup/inf` of `|g'|` over the words.
    pub max_ratio: f64,
}

fn check_dims(ifs: &IfsSpec, map: &ConformalMap) -> Result<()> {
    if ifs.dim() != map.dim() {
        return invalid(format!("IFS acts in dimension {}, map in dimension {}", ifs.dim(), map.dim()));
    }
    Ok(())
}

fn half_neighbourhood(ifs: &IfsSpec) -> BoxNd {
    ifs.hull().inflate(0.5)
}

struct Cell {
    lb: f64,
    bx: BoxNd,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.lb == o.lb
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb)
    }
}

/// Certified lower bound for `s_g = min |g'|` over the hull of `K` inflated by 1/2.
pub fn min_scaling(map: &ConformalMap, ifs: &IfsSpec) -> Result<f64> {
    check_dims(ifs, map)?;
    let region = half_neighbourhood(ifs);
    if !map.domain().contains_box(&region, 1e-12 * (1.0 + region.diameter())) {
        return Err(Error::Domain("map domain must contain the hull inflated by 1/2".into()));
    }
    if let Some(c) = map.constant_derivative() {
        return Ok(c);
    }
    let mut heap = BinaryHeap::new();
    let mut ub = map.deriv_mag_unchecked(&region.center());
    heap.push(Cell { lb: map.deriv_mag_bounds(&region).lo, bx: region });
    let mut lb = 0.0;
    for _ in 0..MIN_SCALING_STEPS {
        let Some(cell) = heap.pop() else { break };
        lb = cell.lb;
        if ub - lb <= 1e-12 * ub {
            break;
        }
        let (l, r) = cell.bx.bisect();
        for bx in [l, r] {
            ub = ub.min(map.deriv_mag_unchecked(&bx.center()));
            let lo = map.deriv_mag_bounds(&bx).lo;
            if lo < ub {
                heap.push(Cell { lb: lo, bx });
            }
        }
        lb = heap.peek().map_or(lb, |c| c.lb.min(ub));
    }
    if !(lb > 0.0) {
        return Err(Error::Certificate(format!("lower bound {lb} for min |g'| is not positive")));
    }
    Ok(lb)
}

/// `(δ_dist·s_g/L)^{1/α}`; infinite when `L = 0`.
fn distortion_scale(delta_dist: f64, s_g: f64, l: f64, alpha: f64) -> f64 {
    if l == 0.0 {
        f64::INFINITY
    } else {
        (delta_dist * s_g / l).powf(1.0 / alpha)
    }
}

fn check_delta_dist(delta_dist: f64) -> Result<()> {
    if !(delta_dist > 0.0) || !delta_dist.is_finite() {
        return invalid(format!("delta_dist = {delta_dist} must be positive"));
    }
    Ok(())
}

fn holder_for(map: &ConformalMap, ifs: &IfsSpec) -> f64 {
    map.holder_constant(&half_neighbourhood(ifs), HOLDER_SEED)
}

/// `ε₀ = s_g r_min X κ/(D + 2κ r_min)` with `X = (δ_dist s_g/L)^{1/α}`; for
/// constant `|g'|` it is `s_g κ r_min`.
pub fn eps0(ifs: &IfsSpec, map: &ConformalMap, delta_dist: f64) -> Result<f64> {
    check_delta_dist(delta_dist)?;
    let kappa = match ifs.kappa() {
        Some(k) => k,
        None => compute_kappa(ifs, KAPPA_DEPTH)?,
    };
    let s_g = min_scaling(map, ifs)?;
    let l = holder_for(map, ifs);
    let (k, r_min, diam) = (kappa.lo, ifs.r_min(), ifs.diameter());
    if !(k > 0.0) {
        return Err(Error::SscViolation("κ has no positive lower bound".into()));
    }
    if l == 0.0 {
        return Ok(s_g * k * r_min);
    }
    let x = distortion_scale(delta_dist, s_g, l, map.alpha());
    Ok(s_g * r_min * x * k / (diam + 2.0 * k * r_min))
}

/// Builds `Σ(eps, δ_dist)` with `b = ((δ_dist s_g/L)^{1/α} − 2 eps/s_g)/D` and
/// checks `sup|g'| ≤ (1+δ_dist) inf|g'|` on every fattened cylinder hull.
pub fn build_partition(ifs: &IfsSpec, map: &ConformalMap, delta_dist: f64, eps: f64) -> Result<DistortionPartition> {
    check_delta_dist(delta_dist)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return invalid(format!("eps = {eps} must be finite and ≥ 0"));
    }
    let s_g = min_scaling(map, ifs)?;
    let l = holder_for(map, ifs);
    let alpha = map.alpha();
    let x = distortion_scale(delta_dist, s_g, l, alpha);
    let (words, b) = if l == 0.0 {
        ((0..ifs.len()).map(Word::letter).collect::<Vec<_>>(), ifs.r_max())
    } else {
        if !(eps < 0.5 * s_g * x) {
            return invalid(format!("eps = {eps} must be below (s_g/2)(δ_dist s_g/L)^(1/α) = {}", 0.5 * s_g * x));
        }
        // b ≥ 1 asks for no subdivision at all
        let b = ((x - 2.0 * eps / s_g) / ifs.diameter()).min(1.0);
        (stopping_words(ifs, b)?, b)
    };
    let pad = eps / s_g;
    let deriv_bounds: Vec<Interval> =
        words.par_iter().map(|w| map.deriv_mag_bounds(&ifs.word_box(w).inflate(pad))).collect();
    let mut max_ratio: f64 = 1.0;
    for (w, iv) in words.iter().zip(&deriv_bounds) {
        let ratio = if l == 0.0 { 1.0 } else { iv.hi / iv.lo };
        if !(iv.lo > 0.0) || !(ratio <= 1.0 + delta_dist) {
            return Err(Error::Certificate(format!(
                "distortion of |g'| on cylinder {w} is {ratio}, above 1 + delta_dist = {}",
                1.0 + delta_dist
            )));
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(DistortionPartition { delta_dist, eps, b, words, s_g, holder_l: l, alpha, deriv_bounds, max_ratio })
}

fn word_weight(ratios: &[f64], w: &Word, delta: f64) -> Interval {
    Interval::point(w.ratio(ratios).powf(delta)).widen_ulps(2 + w.len())
}

/// Smallest and largest `|g'|` among the corners and the centre of `b`.
fn sample_range(map: &ConformalMap, b: &BoxNd) -> (f64, f64) {
    let d = b.dim();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut visit = |x: &[f64]| {
        let v = map.deriv_mag_unchecked(x);
        lo = lo.min(v);
        hi = hi.max(v);
    };
    visit(&b.center());
    for mask in 0..(1usize << d) {
        let x: Vec<f64> = (0..d).map(|k| if mask >> k & 1 == 1 { b.hi[k] } else { b.lo[k] }).collect();
        visit(&x);
    }
    (lo, hi)
}

/// `r_ω^δ·[min|g'|^δ (1+δ_dist)^{−δ}, max|g'|^δ (1+δ_dist)^δ]` with the
/// extremes taken over samples of the cylinder hull; the distortion
/// certificate of the partition makes this an enclosure.
fn word_term(ifs: &IfsSpec, map: &ConformalMap, delta_dist: f64, w: &Word, delta: f64) -> Interval {
    let (lo, hi) = sample_range(map, &ifs.word_box(w));
    let spread = (1.0 + delta_dist).powf(delta);
    let values = Interval::new(lo.powf(delta) / spread, hi.powf(delta) * spread).widen_ulps(8);
    word_weight(&ifs.ratios(), w, delta) * values
}

/// Sum of [`word_term`] over the partition words accepted by `keep`.
fn partition_integral(
    ifs: &IfsSpec,
    map: &ConformalMap,
    part: &DistortionPartition,
    delta: f64,
    keep: impl Fn(&Word) -> bool + Sync,
) -> Interval {
    part.words
        .par_iter()
        .filter(|w| keep(w))
        .map(|w| word_term(ifs, map, part.delta_dist, w, delta))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Interval::ZERO, |acc, t| acc + t)
}

/// Enclosure of `∫_K |g'|^δ dμ_δ`.
pub fn conformal_factor(ifs: &IfsSpec, map: &ConformalMap, delta_dist: f64) -> Result<Interval> {
    check_dims(ifs, map)?;
    let delta = moran_dimension(&ifs.ratios())?;
    if let Some(c) = map.constant_derivative() {
        return Ok(Interval::point(c.powf(delta)));
    }
    let part = build_partition(ifs, map, delta_dist, 0.0)?;
    Ok(partition_integral(ifs, map, &part, delta, |_| true))
}

/// Enclosure of `∫_{φ_ω K} |g'|^δ dμ_δ` over the partition refined below `word`.
pub fn cylinder_factor(ifs: &IfsSpec, map: &ConformalMap, part: &DistortionPartition, word: &Word) -> Result<Interval> {
    let delta = moran_dimension(&ifs.ratios())?;
    let mut total = partition_integral(ifs, map, part, delta, |w| word.is_prefix_of(w));
    // a partition word that is a proper prefix of `word` is cut down to it;
    // its certificate covers the smaller hull
    if part.words.iter().any(|w| w.len() < word.len() && w.is_prefix_of(word)) {
        total = total + word_term(ifs, map, part.delta_dist, word, delta);
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct ImageContent {
    pub avg_content: f64,
    pub half_width: f64,
    pub factor_lo: f64,
    pub factor_hi: f64,
    /// True when the strong separation condition was verified.
    pub certified: bool,
    pub base: ContentReport,
}

/// `M̃(F) = M̃(K)·∫_K |g'|^δ dμ_δ` on the line.
pub fn image_avg_content(line: &LineIfs, map: &ConformalMap, delta_dist: f64) -> Result<ImageContent> {
    let ifs = line.ifs();
    let base = gatzouras_avg_content(line)?;
    let factor = conformal_factor(ifs, map, delta_dist)?;
    let certified = match ifs.kappa() {
        Some(k) => k.lo > 0.0,
        None => compute_kappa(ifs, KAPPA_DEPTH).is_ok_and(|k| k.lo > 0.0),
    };
    Ok(ImageContent {
        avg_content: base.avg_content * factor.mid(),
        half_width: base.avg_content * 0.5 * factor.width(),
        factor_lo: factor.lo,
        factor_hi: factor.hi,
        certified,
        base,
    })
}

/// Numerical engine parameters for image tube volumes.
#[derive(Clone, Copy, Debug)]
pub struct EngineParams {
    pub resolution: usize,
    pub samples: u64,
    pub seed: u64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams { resolution: 1 << 16, samples: 1_000_000, seed: 1 }
    }
}

/// `λ(F_ε)` for `F = g(K)` on the line by enumerating image gaps. A cylinder
/// whose image gaps are all at most `2ε` is covered and adds its whole length.
pub fn image_tube_volume_exact(line: &LineIfs, map: &ConformalMap, eps: f64) -> Result<f64> {
    if map.dim() != 1 {
        return invalid("exact image tube volumes need a map on the line");
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("eps = {eps} must be positive"));
    }
    let (a, b) = line.hull();
    let ifs = line.ifs();
    let maps: Vec<(f64, f64)> = ifs.maps().iter().map(|m| (m.ratio() * m.rotation()[0], m.translation()[0])).collect();
    let gaps: Vec<(f64, f64)> =
        line.pieces().windows(2).filter(|w| w[1].lo > w[0].hi).map(|w| (w[0].hi, w[1].lo)).collect();
    let g_max = line.max_gap();
    let full = ifs.ratios().iter().sum::<f64>() < 1.0;
    let cutoff = 2.0 * eps;
    let mut stack = vec![(1.0f64, 0.0f64)];
    let mut covered = 0.0;
    let mut nodes = 0usize;
    while let Some((s, o)) = stack.pop() {
        nodes += 1;
        if nodes > IMAGE_NODE_CAP {
            return Err(Error::ResourceLimit { what: "image cylinders".into(), cap: IMAGE_NODE_CAP as u64 });
        }
        let (x0, x1) = (s * a + o, s * b + o);
        let bx = BoxNd::interval(x0.min(x1), x0.max(x1));
        let sup = map.deriv_mag_bounds(&bx).hi;
        if sup * s.abs() * g_max <= cutoff {
            if full {
                covered += (map.eval_1d(x1) - map.eval_1d(x0)).abs();
            }
            continue;
        }
        for (u, v) in &gaps {
            let len = (map.eval_1d(s * v + o) - map.eval_1d(s * u + o)).abs();
            covered += len.min(cutoff);
        }
        stack.extend(maps.iter().map(|(sk, ok)| (s * sk, s * ok + o)));
    }
    Ok(2.0 * eps + covered)
}

/// `λ(F_ε)` by the chosen engine. `Exact` is available on the line only.
pub fn image_tube_volume(
    ifs: &IfsSpec,
    map: &ConformalMap,
    eps: f64,
    method: Method,
    params: &EngineParams,
) -> Result<TubeEstimate> {
    check_dims(ifs, map)?;
    match (method, ifs.dim()) {
        (Method::Exact, 1) => Ok(TubeEstimate::exact(eps, image_tube_volume_exact(&LineIfs::new(ifs)?, map, eps)?)),
        (Method::Exact, _) => invalid("the exact engine is one-dimensional"),
        (Method::Grid, 1) => {
            let g = LineGeometry::image(ifs, map)?;
            let region = crate::tube_numeric::CylinderGeometry::bounding_box(&g).inflate(eps);
            grid_estimate(&g, eps, params.resolution, &region, crate::tube_numeric::DEFAULT_CELL_CAP)
        }
        (Method::Grid, _) => {
            let g = ImageGeometry::new(ifs, map)?;
            let region = crate::tube_numeric::CylinderGeometry::bounding_box(&g).inflate(eps);
            grid_estimate(&g, eps, params.resolution, &region, crate::tube_numeric::DEFAULT_CELL_CAP)
        }
        (Method::Mc, 1) => mc_estimate(&LineGeometry::image(ifs, map)?, eps, params.samples, params.seed),
        (Method::Mc, _) => mc_estimate(&ImageGeometry::new(ifs, map)?, eps, params.samples, params.seed),
    }
}

/// Seed for the Monte-Carlo run at `eps`, so that every quadrature node gets
/// its own stream.
pub fn node_seed(seed: u64, eps: f64) -> u64 {
    seed ^ eps.to_bits().rotate_left(29)
}

/// Cesàro average of Monte-Carlo tube volumes of `g(K)`.
pub fn image_cesaro_mc(
    ifs: &IfsSpec,
    map: &ConformalMap,
    t: f64,
    nodes: usize,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    check_dims(ifs, map)?;
    let delta = moran_dimension(&ifs.ratios())?;
    let tube = |e: f64| -> Result<f64> {
        let params = EngineParams { resolution: 0, samples, seed: node_seed(seed, e) };
        Ok(image_tube_volume(ifs, map, e, Method::Mc, &params)?.value)
    };
    cesaro_avg_content_with(&tube, delta, ifs.dim(), t, nodes)
}

/// Paired `ψ`-profiles of the middle-third Cantor set `K` and its image under
/// the devil's staircase map.
#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub t: Vec<f64>,
    pub psi_k: Vec<f64>,
    pub psi_f: Vec<f64>,
    pub amplitude_k: f64,
    pub amplitude_f: f64,
    pub period: f64,
}

impl CounterexampleReport {
    /// `amplitude_k / amplitude_f`.
    pub fn ratio(&self) -> f64 {
        self.amplitude_k / self.amplitude_f
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,psi_K,psi_F")?;
        for k in 0..self.t.len() {
            writeln!(out, "{},{},{}", g12(self.t[k]), g12(self.psi_k[k]), g12(self.psi_f[k]))?;
        }
        Ok(())
    }
}

pub fn cantor_ifs() -> IfsSpec {
    IfsSpec::line(&[1.0 / 3.0, 1.0 / 3.0], &[0.0, 2.0 / 3.0]).expect("Cantor system")
}

pub fn devil_map() -> ConformalMap {
    ConformalMap::new(MapExpr::DevilStaircase, BoxNd::interval(-1.0, 2.0)).expect("devil's staircase map")
}

/// Amplitudes are `max − min` of `ψ` over the last period `ln 3` of `[t_min, t_max]`.
pub fn counterexample_report(t_min: f64, t_max: f64, samples: usize) -> Result<CounterexampleReport> {
    let period = 3f64.ln();
    if t_max - t_min < 3.0 * period * (1.0 - 1e-12) {
        return invalid(format!("t-range must cover three periods of ln 3, got [{t_min}, {t_max}]"));
    }
    let line = LineIfs::new(&cantor_ifs())?;
    let g = devil_map();
    let delta = line.delta();
    let k = TubeProfile::from_fn(&|e| line.tube_volume(e), delta, 1, t_min, t_max, samples, Provenance::Exact)?;
    let f = TubeProfile::from_fn(
        &|e| image_tube_volume_exact(&line, &g, e),
        delta,
        1,
        t_min,
        t_max,
        samples,
        Provenance::Exact,
    )?;
    Ok(CounterexampleReport {
        t: k.points.iter().map(|p| p.t).collect(),
        psi_k: k.points.iter().map(|p| p.psi).collect(),
        psi_f: f.points.iter().map(|p| p.psi).collect(),
        amplitude_k: oscillation_amplitude(&k, period)?,
        amplitude_f: oscillation_amplitude(&f, period)?,
        period,
    })
}
