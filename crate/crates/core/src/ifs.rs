//! Iterated function systems of contracting similarities and their code space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist, solve_linear, Affine, BoxNd, Matrix, Point};
use crate::interval::Interval;

/// Default cap on the number of words a stopping set may contain.
pub const DEFAULT_WORD_CAP: usize = 10_000_000;

/// `x ↦ ratio·Q·x + translation` with `Q` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    ratio: f64,
    rotation: Matrix,
    translation: Point,
}

impl Similarity {
    /// `rotation` is row-major `d×d`; pass `None` for the identity.
    pub fn new(ratio: f64, rotation: Option<&[f64]>, translation: &[f64]) -> Result<Self> {
        let d = translation.len();
        if d == 0 {
            return invalid("translation must have at least one component");
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return invalid(format!("ratio {ratio} outside (0,1)"));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return invalid("translation must be finite");
        }
        let rotation: Matrix = match rotation {
            None => Affine::identity(d).lin,
            Some(q) => {
                if q.len() != d * d {
                    return invalid(format!("rotation must be {d}x{d}"));
                }
                q.iter().copied().collect()
            }
        };
        for i in 0..d {
            for j in 0..d {
                let qtq: f64 = (0..d).map(|k| rotation[k * d + i] * rotation[k * d + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (qtq - target).abs() > 1e-12 {
                    return invalid("rotation is not orthogonal within 1e-12");
                }
            }
        }
        Ok(Similarity { ratio, rotation, translation: translation.iter().copied().collect() })
    }

    /// One-dimensional map `x ↦ ±ratio·x + t`.
    pub fn line(ratio: f64, translation: f64, flip: bool) -> Result<Self> {
        let q = [if flip { -1.0 } else { 1.0 }];
        Similarity::new(ratio, Some(&q), &[translation])
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn as_affine(&self) -> Affine {
        Affine { lin: self.rotation.iter().map(|q| q * self.ratio).collect(), trans: self.translation.clone() }
    }

    pub fn apply(&self, x: &[f64]) -> Point {
        self.as_affine().apply(x)
    }

    pub fn fixed_point(&self) -> Point {
        let d = self.dim();
        let a = self.as_affine();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = if i == j { 1.0 } else { 0.0 } - a.lin[i * d + j];
            }
        }
        // I - rQ is invertible because rQ has spectral radius r < 1
        solve_linear(&m, &self.translation).expect("I - rQ is invertible")
    }
}

/// JSON form of a single similarity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    pub translation: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IfsDocument {
    dim: usize,
    maps: Vec<MapDocument>,
}

/// A system of `N ≥ 2` contracting similarities of `ℝ^d`.
#[derive(Clone, Debug)]
pub struct IfsSpec {
    maps: Vec<Similarity>,
    affines: Vec<Affine>,
    hull: BoxNd,
    anchors: Vec<Point>,
    kappa: Option<Interval>,
}

impl IfsSpec {
    pub fn new(maps: Vec<Similarity>) -> Result<Self> {
        if maps.len() < 2 {
            return invalid("an IFS needs at least two maps");
        }
        if maps.len() > u16::MAX as usize {
            return invalid("too many maps");
        }
        let d = maps[0].dim();
        if maps.iter().any(|m| m.dim() != d) {
            return invalid("all maps must share the ambient dimension");
        }
        let affines: Vec<Affine> = maps.iter().map(Similarity::as_affine).collect();
        let fixed: Vec<Point> = maps.iter().map(Similarity::fixed_point).collect();
        let mut hull = invariant_hull(&maps, &affines, &fixed)?;
        if d == 1 {
            hull = snap_line_hull(&maps, hull);
        }
        let anchors =
            if d == 1 { vec![SmallVec::from_elem(hull.lo[0], 1), SmallVec::from_elem(hull.hi[0], 1)] } else { fixed };
        Ok(IfsSpec { maps, affines, hull, anchors, kappa: None })
    }

    /// Convenience constructor for `x ↦ r_i x + t_i` on the line.
    pub fn line(ratios: &[f64], translations: &[f64]) -> Result<Self> {
        if ratios.len() != translations.len() {
            return invalid("ratios and translations differ in length");
        }
        let maps = ratios
            .iter()
            .zip(translations)
            .map(|(r, t)| Similarity::line(*r, *t, false))
            .collect::<Result<Vec<_>>>()?;
        IfsSpec::new(maps)
    }

    pub fn from_documents(dim: usize, docs: &[MapDocument]) -> Result<Self> {
        let mut maps = Vec::with_capacity(docs.len());
        for (k, m) in docs.iter().enumerate() {
            if m.translation.len() != dim {
                return invalid(format!(
                    "map {}: translation has {} components, dim is {dim}",
                    k + 1,
                    m.translation.len()
                ));
            }
            let rot: Option<Vec<f64>> = match &m.rotation {
                None => None,
                Some(rows) => {
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return invalid(format!("map {}: rotation must be {dim}x{dim}", k + 1));
                    }
                    Some(rows.iter().flatten().copied().collect())
                }
            };
            let s = Similarity::new(m.ratio, rot.as_deref(), &m.translation)
                .map_err(|e| Error::InvalidInput(format!("map {}: {e}", k + 1)))?;
            maps.push(s);
        }
        IfsSpec::new(maps)
    }

    /// Parses `{ "dim": d, "maps": [ { "ratio", "rotation"?, "translation" } ] }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: IfsDocument = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        IfsSpec::from_documents(doc.dim, &doc.maps)
    }

    pub fn to_json(&self) -> String {
        let d = self.dim();
        let maps = self
            .maps
            .iter()
            .map(|m| MapDocument {
                ratio: m.ratio,
                rotation: Some(m.rotation.chunks(d).map(|r| r.to_vec()).collect()),
                translation: m.translation.to_vec(),
            })
            .collect();
        serde_json::to_string_pretty(&IfsDocument { dim: d, maps }).expect("serializable")
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn affine(&self, i: usize) -> &Affine {
        &self.affines[i]
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio).collect()
    }

    pub fn r_min(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(0.0, f64::max)
    }

    /// Axis-aligned box with `φ_i(hull) ⊆ hull` for every map; tight in 1-D.
    pub fn hull(&self) -> &BoxNd {
        &self.hull
    }

    pub fn diameter(&self) -> f64 {
        self.hull.diameter()
    }

    /// Points of the attractor whose images mark every cylinder.
    pub fn anchors(&self) -> &[Point] {
        &self.anchors
    }

    pub fn kappa(&self) -> Option<Interval> {
        self.kappa
    }

    /// Computes and stores the separation constant.
    pub fn with_kappa(mut self, depth: usize) -> Result<Self> {
        self.kappa = Some(compute_kappa(&self, depth)?);
        Ok(self)
    }

    /// Same system with every map conjugated by `x ↦ c·x`, so the attractor is `c·K`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let t: Vec<f64> = m.translation.iter().map(|x| c * x).collect();
                Similarity::new(m.ratio, Some(&m.rotation), &t)
            })
            .collect::<Result<Vec<_>>>()?;
        IfsSpec::new(maps)
    }

    pub fn root_cylinder(&self) -> Cylinder {
        Cylinder {
            map: Affine::identity(self.dim()),
            ratio: 1.0,
            bbox: self.hull.clone(),
            anchors: self.anchors.iter().cloned().collect(),
        }
    }

    pub fn child_cylinder(&self, parent: &Cylinder, i: usize) -> Cylinder {
        let map = parent.map.compose(&self.affines[i]);
        let bbox = map.image_box(&self.hull);
        let anchors = self.anchors.iter().map(|a| map.apply(a)).collect();
        Cylinder { map, ratio: parent.ratio * self.maps[i].ratio, bbox, anchors }
    }

    pub fn word_map(&self, w: &Word) -> Affine {
        w.0.iter().fold(Affine::identity(self.dim()), |acc, &i| acc.compose(&self.affines[i as usize]))
    }

    /// Box enclosing `φ_ω(hull)`.
    pub fn word_box(&self, w: &Word) -> BoxNd {
        if w.is_empty() {
            self.hull.clone()
        } else {
            self.word_map(w).image_box(&self.hull)
        }
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.0.iter().any(|&l| l as usize >= self.len()) {
            return invalid(format!("word {w} uses a letter beyond {}", self.len()));
        }
        Ok(())
    }
}

/// A cylinder `φ_ω(K)` represented by its map, ratio, enclosing box and
/// a few of its points.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub map: Affine,
    pub ratio: f64,
    pub bbox: BoxNd,
    pub anchors: SmallVec<[Point; 4]>,
}

fn invariant_hull(maps: &[Similarity], affines: &[Affine], fixed: &[Point]) -> Result<BoxNd> {
    let d = maps[0].dim();
    let n = fixed.len() as f64;
    let c: Point = (0..d).map(|k| fixed.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let mut radius: f64 = 0.0;
    for m in maps {
        radius = radius.max(dist(&m.apply(&c), &c) / (1.0 - m.ratio));
    }
    let mut b = BoxNd::point(&c).inflate(radius.max(1e-300));
    let scale = radius.max(c.iter().fold(0.0f64, |a, v| a.max(v.abs()))).max(1e-300);
    let mut stalled = 0;
    for _ in 0..100_000 {
        let next = affines.iter().map(|a| a.image_box_tight(&b)).reduce(|x, y| x.union(&y)).expect("at least two maps");
        let change = (0..d).map(|k| (next.lo[k] - b.lo[k]).abs().max((next.hi[k] - b.hi[k]).abs())).fold(0.0, f64::max);
        if !change.is_finite() || next.diameter() > 1e12 * scale {
            return Err(Error::NumericFailure("bounding box iteration diverges for these rotations".into()));
        }
        b = next;
        if change <= 4.0 * f64::EPSILON * scale {
            stalled += 1;
            if stalled >= 3 {
                return Ok(b);
            }
        } else {
            stalled = 0;
        }
    }
    Err(Error::NumericFailure("bounding box iteration did not converge".into()))
}

/// On the line the hull endpoints solve `a = φ_i(e_i)`, `b = φ_j(e_j)` for
/// the maps attaining them; solving that system removes the last-ulp drift
/// of the box iteration.
fn snap_line_hull(maps: &[Similarity], hull: BoxNd) -> BoxNd {
    let (a, b) = (hull.lo[0], hull.hi[0]);
    let coef = |m: &Similarity| m.ratio * m.rotation[0];
    let attain = |want_max: bool| {
        maps.iter()
            .map(|m| {
                let s = coef(m);
                let from_lo = s * a + m.translation[0];
                let from_hi = s * b + m.translation[0];
                // which endpoint maps to the extreme side of this piece
                let use_hi = if want_max { from_hi >= from_lo } else { from_hi < from_lo };
                (if use_hi { from_hi } else { from_lo }, s, m.translation[0], use_hi)
            })
            .max_by(|x, y| if want_max { x.0.total_cmp(&y.0) } else { y.0.total_cmp(&x.0) })
            .expect("maps")
    };
    let (_, si, ti, i_hi) = attain(false);
    let (_, sj, tj, j_hi) = attain(true);
    // unknowns (a, b): a − si·e_i = ti, b − sj·e_j = tj
    let mut m = [1.0, 0.0, 0.0, 1.0];
    m[if i_hi { 1 } else { 0 }] -= si;
    m[2 + if j_hi { 1 } else { 0 }] -= sj;
    match solve_linear(&m, &[ti, tj]) {
        Some(x) if (x[0] - a).abs() <= 1e-12 * (b - a) && (x[1] - b).abs() <= 1e-12 * (b - a) && x[0] <= x[1] => {
            BoxNd::interval(x[0], x[1])
        }
        _ => hull,
    }
}

/// A finite word over the alphabet, stored 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Word(vec![i as u16])
    }

    /// Parses 1-based letters: `"12"` for small alphabets, `"1.12.3"` otherwise.
    /// The empty string is the empty word.
    pub fn parse(s: &str, n_letters: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(Word::empty());
        }
        let parts: Vec<&str> =
            if s.contains('.') { s.split('.').collect() } else { s.split("").filter(|p| !p.is_empty()).collect() };
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            let v: usize = p.parse().map_err(|_| Error::InvalidInput(format!("bad letter '{p}' in word '{s}'")))?;
            if v == 0 || v > n_letters {
                return invalid(format!("letter {v} outside 1..={n_letters}"));
            }
            out.push((v - 1) as u16);
        }
        Ok(Word(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ratio(&self, ratios: &[f64]) -> f64 {
        self.0.iter().map(|&i| ratios[i as usize]).product()
    }

    pub fn child(&self, i: usize) -> Word {
        let mut v = self.0.clone();
        v.push(i as u16);
        Word(v)
    }

    pub fn prefixed(&self, i: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(i as u16);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            None
        } else {
            Some(Word(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        let dotted = self.0.iter().any(|&l| l >= 9);
        for (k, l) in self.0.iter().enumerate() {
            if dotted && k > 0 {
                write!(f, ".")?;
            }
            write!(f, "{}", l + 1)?;
        }
        Ok(())
    }
}

/// Solves `Σ r_i^δ = 1`.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return invalid("need at least two ratios");
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return invalid("ratios must lie in (0,1)");
    }
    let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    let df = |s: f64| ratios.iter().map(|r| r.powf(s) * r.ln()).sum::<f64>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NumericFailure("no upper bracket for the Moran equation".into()));
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..400 {
        let v = f(s);
        if v.abs() <= 1e-15 {
            break;
        }
        if v > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / df(s);
        s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-17 * hi {
            break;
        }
    }
    if f(s).abs() > 1e-13 {
        return Err(Error::NumericFailure(format!("Moran residual {} above 1e-13", f(s))));
    }
    Ok(s)
}

/// `−Σ r_i^δ ln r_i`, the Gatzouras denominator; times `δ` it is the entropy.
pub fn entropy_term(ratios: &[f64], delta: f64) -> f64 {
    -ratios.iter().map(|r| r.powf(delta) * r.ln()).sum::<f64>()
}

/// Words with `r_ω ≤ b < r_{ω|n−1}`; for `b ≥ 1` the single letters.
pub fn stopping_words(ifs: &IfsSpec, b: f64) -> Result<Vec<Word>> {
    stopping_words_for_ratios(&ifs.ratios(), b, DEFAULT_WORD_CAP)
}

pub fn stopping_words_for_ratios(ratios: &[f64], b: f64, cap: usize) -> Result<Vec<Word>> {
    if !(b > 0.0 && b <= 1.0) {
        return invalid(format!("threshold b = {b} outside (0,1]"));
    }
    let mut out = Vec::new();
    if b >= 1.0 {
        return Ok((0..ratios.len()).map(Word::letter).collect());
    }
    let mut prefix = Vec::new();
    collect_stopping(ratios, b, cap, 1.0, &mut prefix, &mut out)?;
    Ok(out)
}

fn collect_stopping(
    ratios: &[f64],
    b: f64,
    cap: usize,
    r: f64,
    prefix: &mut Vec<u16>,
    out: &mut Vec<Word>,
) -> Result<()> {
    for (i, ri) in ratios.iter().enumerate() {
        let rr = r * ri;
        prefix.push(i as u16);
        if rr <= b {
            if out.len() >= cap {
                return Err(Error::ResourceLimit { what: "stopping-set word count".into(), cap: cap as u64 });
            }
            out.push(Word(prefix.clone()));
        } else {
            collect_stopping(ratios, b, cap, rr, prefix, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

/// A point of the attractor with an error radius.
#[derive(Clone, Debug, PartialEq)]
pub struct CodePoint {
    pub point: Point,
    pub radius: f64,
}

/// The point `π(ωωω…)` to within `tol`.
pub fn code_point(ifs: &IfsSpec, word: &Word, tol: f64) -> Result<CodePoint> {
    if word.is_empty() {
        return invalid("code_point needs a nonempty word");
    }
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    ifs.check_word(word)?;
    let f = ifs.word_map(word);
    let r = word.ratio(&ifs.ratios());
    let diam = ifs.diameter();
    let mut x = ifs.hull.center();
    let mut radius = diam;
    loop {
        x = f.apply(&x);
        radius *= r;
        if radius <= tol {
            break;
        }
    }
    Ok(CodePoint { point: x, radius })
}

struct PairNode {
    lb: f64,
    a: Cylinder,
    b: Cylinder,
    depth: usize,
}

impl PartialEq for PairNode {
    fn eq(&self, o: &Self) -> bool {
        self.lb == o.lb
    }
}
impl Eq for PairNode {}
impl PartialOrd for PairNode {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for PairNode {
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb)
    }
}

fn anchor_distance(a: &Cylinder, b: &Cylinder) -> f64 {
    let mut best = f64::INFINITY;
    for p in &a.anchors {
        for q in &b.anchors {
            best = best.min(dist(p, q));
        }
    }
    best
}

/// Encloses `κ = min_{i≠j} d(φ_iK, φ_jK)/2` by a best-first search over pairs
/// of cylinders refined at most `depth` levels below the first.
pub fn compute_kappa(ifs: &IfsSpec, depth: usize) -> Result<Interval> {
    if depth == 0 {
        return invalid("depth must be at least 1");
    }
    let n = ifs.len();
    let root = ifs.root_cylinder();
    let first: Vec<Cylinder> = (0..n).map(|i| ifs.child_cylinder(&root, i)).collect();
    let mut ub = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        for j in i + 1..n {
            ub = ub.min(anchor_distance(&first[i], &first[j]));
            let lb = first[i].bbox.dist_to_box(&first[j].bbox);
            heap.push(PairNode { lb, a: first[i].clone(), b: first[j].clone(), depth: 1 });
        }
    }
    let node_cap = 2_000_000usize;
    let mut expanded = 0usize;
    let diam = ifs.diameter();
    let lo = loop {
        let Some(node) = heap.pop() else { break ub };
        if node.lb >= ub * (1.0 - 1e-13) || node.depth >= depth || ub <= 1e-14 * diam {
            break node.lb.min(ub);
        }
        expanded += 1;
        if expanded > node_cap {
            break node.lb;
        }
        // refine the larger cylinder, or both when equal
        let split_a = node.a.ratio >= node.b.ratio;
        let split_b = node.b.ratio >= node.a.ratio;
        let xs: Vec<Cylinder> =
            if split_a { (0..n).map(|k| ifs.child_cylinder(&node.a, k)).collect() } else { vec![node.a.clone()] };
        let ys: Vec<Cylinder> =
            if split_b { (0..n).map(|k| ifs.child_cylinder(&node.b, k)).collect() } else { vec![node.b.clone()] };
        for x in &xs {
            for y in &ys {
                ub = ub.min(anchor_distance(x, y));
            }
        }
        for x in &xs {
            for y in &ys {
                let lb = x.bbox.dist_to_box(&y.bbox);
                if lb < ub {
                    heap.push(PairNode { lb, a: x.clone(), b: y.clone(), depth: node.depth + 1 });
                }
            }
        }
    };
    if ub <= 1e-14 * diam {
        return Err(Error::SscViolation(format!(
            "first-level pieces touch or overlap (distance at most {ub:e}); only the open set condition can hold"
        )));
    }
    let lo = lo.max(0.0);
    Ok(Interval::new((0.5 * lo).next_down().max(0.0), (0.5 * ub).next_up()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cantor() -> IfsSpec {
        IfsSpec::line(&[1.0 / 3.0, 1.0 / 3.0], &[0.0, 2.0 / 3.0]).unwrap()
    }

    #[test]
    fn moran_examples() {
        let d = moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((d - 2f64.ln() / 3f64.ln()).abs() < 1e-14);
        let d = moran_dimension(&[1.0 / 7.0; 4]).unwrap();
        assert!((d - 4f64.ln() / 7f64.ln()).abs() < 1e-14);
        assert!((moran_dimension(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(moran_dimension(&[0.5]).is_err());
    }

    #[test]
    fn golden_ratio_dimension_and_entropy() {
        // 2^-δ = 1/φ where φ is the golden ratio
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let delta = moran_dimension(&[0.5, 0.25]).unwrap();
        assert!((delta - phi.ln() / 2f64.ln()).abs() < 1e-14);
        let x = 1.0 / phi;
        let oracle = x * 2f64.ln() + x * x * 4f64.ln();
        assert!((entropy_term(&[0.5, 0.25], delta) - oracle).abs() < 1e-14);
    }

    #[test]
    fn entropy_examples() {
        let d = moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((entropy_term(&[1.0 / 3.0, 1.0 / 3.0], d) - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn stopping_examples() {
        let k = cantor();
        let w = stopping_words(&k, 1.0).unwrap();
        assert_eq!(w, vec![Word(vec![0]), Word(vec![1])]);
        assert_eq!(stopping_words(&k, 0.25).unwrap().len(), 4);
        let w = stopping_words_for_ratios(&[0.5, 0.25], 0.25, 100).unwrap();
        let s: Vec<String> = w.iter().map(|w| w.to_string()).collect();
        assert_eq!(s, ["11", "12", "2"]);
        assert!(matches!(
            stopping_words_for_ratios(&[0.5, 0.5], 1e-6, 1000),
            Err(Error::ResourceLimit { cap: 1000, .. })
        ));
        assert!(stopping_words(&k, 0.0).is_err());
    }

    #[test]
    fn code_points() {
        let k = cantor();
        let p = code_point(&k, &Word(vec![0]), 1e-12).unwrap();
        assert!(p.point[0].abs() <= 1e-12 && p.radius <= 1e-12);
        let p = code_point(&k, &Word(vec![1]), 1e-12).unwrap();
        assert!((p.point[0] - 1.0).abs() <= 1e-12);
        // fixed point of x ↦ (x/3 + 2/3)/3, by direct iteration as an oracle
        let mut x = 0.0;
        for _ in 0..60 {
            x = (x / 3.0 + 2.0 / 3.0) / 3.0;
        }
        let p = code_point(&k, &Word(vec![0, 1]), 1e-13).unwrap();
        assert!((p.point[0] - x).abs() <= 1e-13);
        assert!((p.point[0] - 0.25).abs() <= 1e-13);
    }

    #[test]
    fn hull_and_flip() {
        let k = cantor();
        assert!(k.hull().lo[0] == 0.0 && (k.hull().hi[0] - 1.0).abs() < 1e-15);
        let flipped = IfsSpec::new(vec![
            Similarity::line(1.0 / 3.0, 1.0 / 3.0, true).unwrap(),
            Similarity::line(1.0 / 3.0, 2.0 / 3.0, false).unwrap(),
        ])
        .unwrap();
        assert!((flipped.hull().lo[0]).abs() < 1e-15 && (flipped.hull().hi[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let text =
            r#"{"dim":1,"maps":[{"ratio":0.25,"translation":[0]},{"ratio":0.5,"rotation":[[-1]],"translation":[1]}]}"#;
        let ifs = IfsSpec::from_json(text).unwrap();
        let again = IfsSpec::from_json(&ifs.to_json()).unwrap();
        assert_eq!(ifs.maps(), again.maps());
        assert!(IfsSpec::from_json(r#"{"dim":1,"maps":[],"extra":1}"#).is_err());
        assert!(IfsSpec::from_json(
            r#"{"dim":1,"maps":[{"ratio":1.5,"translation":[0]},{"ratio":0.5,"translation":[1]}]}"#
        )
        .is_err());
        assert!(IfsSpec::from_json(r#"{"dim":2,"maps":[{"ratio":0.5,"rotation":[[1,1],[0,1]],"translation":[0,0]},{"ratio":0.5,"translation":[1,0]}]}"#).is_err());
    }

    #[test]
    fn kappa_examples() {
        let k = compute_kappa(&cantor(), 1).unwrap();
        assert!(k.contains(1.0 / 6.0) && k.width() < 1e-15);
        let c2 = IfsSpec::line(&[1.0 / 7.0; 4], &[0.0, 1.0 / 7.0, 5.0 / 7.0, 6.0 / 7.0]).unwrap();
        assert!(matches!(compute_kappa(&c2, 20), Err(Error::SscViolation(_))));
        let pair = IfsSpec::line(&[0.3, 0.3], &[0.0, 0.7]).unwrap();
        assert!(compute_kappa(&pair, 1).unwrap().lo > 0.0);
    }

    #[test]
    fn kappa_in_the_plane() {
        let h = 3f64.sqrt() / 2.0;
        let v = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
        let maps = v.iter().map(|p| Similarity::new(0.25, None, &[0.75 * p[0], 0.75 * p[1]]).unwrap()).collect();
        let t = IfsSpec::new(maps).unwrap();
        let k = compute_kappa(&t, 30).unwrap();
        // pieces are quarter-size triangles at the vertices: gap between the
        // bottom two is 1 - 2/4
        assert!(k.contains(0.25), "{k}");
        assert!(k.width() < 1e-9);
    }

    #[test]
    fn word_display_and_parse() {
        let w = Word::parse("12", 2).unwrap();
        assert_eq!(w, Word(vec![0, 1]));
        assert_eq!(w.to_string(), "12");
        let long = Word(vec![9, 0]);
        assert_eq!(long.to_string(), "10.1");
        assert_eq!(Word::parse("10.1", 12).unwrap(), long);
        assert!(Word::parse("3", 2).is_err());
        assert_eq!(Word::parse("", 2).unwrap(), Word::empty());
    }

    proptest! {
        #[test]
        fn moran_residual_is_tiny(rs in proptest::collection::vec(0.01f64..0.99, 2..8)) {
            let d = moran_dimension(&rs).unwrap();
            let res: f64 = rs.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
            prop_assert!(res.abs() <= 1e-13);
        }

        #[test]
        fn stopping_sets_partition_unity(rs in proptest::collection::vec(0.05f64..0.6, 2..5), b in 0.001f64..1.0) {
            let d = moran_dimension(&rs).unwrap();
            let words = stopping_words_for_ratios(&rs, b, 1_000_000).unwrap();
            let total: f64 = words.iter().map(|w| w.ratio(&rs).powf(d)).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for w in &words {
                prop_assert!(w.ratio(&rs) <= b);
                if let Some(p) = w.parent() {
                    prop_assert!(p.is_empty() || p.ratio(&rs) > b);
                }
            }
            let mut sorted = words.clone();
            sorted.sort();
            for pair in sorted.windows(2) {
                prop_assert!(!pair[0].is_prefix_of(&pair[1]));
            }
        }

        #[test]
        fn similarity_scales_distances(
            r in 0.01f64..0.99, angle in 0.0f64..6.3,
            x in proptest::array::uniform2(-5.0f64..5.0), y in proptest::array::uniform2(-5.0f64..5.0),
        ) {
            let (s, c) = angle.sin_cos();
            let m = Similarity::new(r, Some(&[c, -s, s, c]), &[0.3, -0.2]).unwrap();
            let d0 = dist(&x, &y);
            let d1 = dist(&m.apply(&x), &m.apply(&y));
            prop_assert!((d1 - r * d0).abs() <= 1e-12 * (1.0 + d0));
        }

        #[test]
        fn code_point_commutes_with_prefix(letters in proptest::collection::vec(0u16..3, 1..6), i in 0usize..3) {
            let ifs = IfsSpec::line(&[0.2, 0.3, 0.25], &[0.0, 0.35, 0.75]).unwrap();
            let w = Word(letters);
            let tol = 1e-12;
            let a = code_point(&ifs, &w, tol).unwrap();
            // π(i ω ω ω …) = φ_i(π(ω ω …)): compare via the explicit sequence
            let mut ext = w.clone();
            while ext.ratio(&ifs.ratios()) * ifs.diameter() > tol {
                ext.0.extend_from_slice(&w.0);
            }
            let lhs = ifs.word_map(&ext.prefixed(i)).apply(&ifs.hull().center());
            let rhs = ifs.maps()[i].apply(&a.point);
            prop_assert!((lhs[0] - rhs[0]).abs() <= 2.0 * tol + 1e-15);
        }

        #[test]
        fn hull_is_invariant(ts in proptest::collection::vec(-2.0f64..2.0, 3), rs in proptest::collection::vec(0.05f64..0.7, 3)) {
            let ifs = IfsSpec::line(&rs, &ts).unwrap();
            for m in ifs.maps() {
                let img = m.as_affine().image_box_tight(ifs.hull());
                prop_assert!(ifs.hull().contains_box(&img, 1e-13 * (1.0 + ifs.diameter())));
            }
        }
    }
}
