//! Exact tube volumes of attractors on the line.
//!
//! The complement of `K` in its hull `[a,b]` is a union of open gaps, the
//! images of the first-level gaps under every cylinder map. A gap of length
//! `G` contributes `min(G, 2ε)` to the covered part of the hull, so
//!
//! ```text
//! λ(K_ε) = 2ε + Σ_gaps min(G, 2ε)
//! ```
//!
//! Words are grouped by how many times each distinct ratio occurs, which
//! makes homogeneous systems cost one class per level. The enumeration stops
//! at cylinders whose largest gap is at most `2ε`; such a cylinder is covered
//! completely and contributes its full length.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::fmt::g12;
use crate::ifs::{moran_dimension, IfsSpec, Word};

/// Default cap on the number of ratio classes visited per query.
pub const DEFAULT_CLASS_CAP: usize = 10_000_000;

/// A piece of the first level in left-to-right order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub map: usize,
    pub lo: f64,
    pub hi: f64,
    pub flip: bool,
}

/// A 1-D system satisfying the open set condition for its hull, with the
/// first-level gap structure precomputed.
#[derive(Clone, Debug)]
pub struct LineIfs {
    ifs: IfsSpec,
    a: f64,
    b: f64,
    pieces: Vec<Piece>,
    /// Gap between `pieces[k]` and `pieces[k+1]` (zero when they touch).
    gaps: Vec<f64>,
    positive_gaps: Vec<f64>,
    touching: usize,
    classes: Vec<(f64, f64)>,
    g_max: f64,
    delta: f64,
    class_cap: usize,
}

impl LineIfs {
    pub fn new(ifs: &IfsSpec) -> Result<Self> {
        if ifs.dim() != 1 {
            return invalid("exact tube volumes need a one-dimensional IFS");
        }
        let (a, b) = (ifs.hull().lo[0], ifs.hull().hi[0]);
        let diam = b - a;
        let mut pieces: Vec<Piece> = ifs
            .maps()
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let (x, y) = (m.apply(&[a])[0], m.apply(&[b])[0]);
                Piece { map: k, lo: x.min(y), hi: x.max(y), flip: m.rotation()[0] < 0.0 }
            })
            .collect();
        pieces.sort_by(|p, q| p.lo.total_cmp(&q.lo));
        let slack = 1e-13 * diam.max(f64::MIN_POSITIVE);
        let mut gaps = Vec::new();
        for w in pieces.windows(2) {
            let g = w[1].lo - w[0].hi;
            if g < -slack {
                return invalid(format!(
                    "pieces {} and {} overlap; the open set condition fails for the hull",
                    w[0].map + 1,
                    w[1].map + 1
                ));
            }
            gaps.push(if g.abs() <= slack { 0.0 } else { g });
        }
        let positive_gaps: Vec<f64> = gaps.iter().copied().filter(|g| *g > 0.0).collect();
        let touching = gaps.len() - positive_gaps.len();
        let ratios = ifs.ratios();
        let mut classes: Vec<(f64, f64)> = Vec::new();
        for r in &ratios {
            match classes.iter_mut().find(|c| c.0 == *r) {
                Some(c) => c.1 += 1.0,
                None => classes.push((*r, 1.0)),
            }
        }
        classes.sort_by(|x, y| y.0.total_cmp(&x.0));
        let g_max = positive_gaps.iter().copied().fold(0.0, f64::max);
        let delta = moran_dimension(&ratios)?;
        Ok(LineIfs {
            ifs: ifs.clone(),
            a,
            b,
            pieces,
            gaps,
            positive_gaps,
            touching,
            classes,
            g_max,
            delta,
            class_cap: DEFAULT_CLASS_CAP,
        })
    }

    pub fn with_class_cap(mut self, cap: usize) -> Self {
        self.class_cap = cap;
        self
    }

    pub fn ifs(&self) -> &IfsSpec {
        &self.ifs
    }

    pub fn hull(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn diameter(&self) -> f64 {
        self.b - self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn first_gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Number of adjacent first-level pieces that touch.
    pub fn touching_pairs(&self) -> usize {
        self.touching
    }

    pub fn max_gap(&self) -> f64 {
        self.g_max
    }

    /// Visits every ratio class `(r, multiplicity)` with `r·g_max > cutoff`.
    fn visit_classes(&self, cutoff: f64, visit: &mut dyn FnMut(f64, f64)) -> Result<()> {
        let mut count = 0usize;
        self.visit_rec(0, 1.0, 1.0, 0.0, cutoff, &mut count, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_rec(
        &self,
        j: usize,
        r: f64,
        mult: f64,
        n: f64,
        cutoff: f64,
        count: &mut usize,
        visit: &mut dyn FnMut(f64, f64),
    ) -> Result<()> {
        if j == self.classes.len() {
            *count += 1;
            if *count > self.class_cap {
                return Err(Error::ResourceLimit { what: "gap classes".into(), cap: self.class_cap as u64 });
            }
            visit(r, mult);
            return Ok(());
        }
        let (rho, c) = self.classes[j];
        let (mut rr, mut mm, mut k) = (r, mult, 0.0);
        while rr * self.g_max > cutoff {
            self.visit_rec(j + 1, rr, mm, n + k, cutoff, count, visit)?;
            k += 1.0;
            rr *= rho;
            // multinomial growth: choose positions for the new letter
            mm *= c * (n + k) / k;
        }
        Ok(())
    }

    /// Covered length of the hull, `C(ε) = λ(K_ε) − 2ε`, as `A + B·ε` with the
    /// coefficients valid on the affine piece containing `eps`.
    pub fn coverage(&self, eps: f64) -> Result<(f64, f64)> {
        if !(eps > 0.0) || !eps.is_finite() {
            return invalid(format!("eps = {eps} must be positive and finite"));
        }
        let cutoff = 2.0 * eps;
        let diam = self.diameter();
        if !(self.g_max > cutoff) {
            return Ok((diam, 0.0));
        }
        let (mut a, mut b) = (0.0, 0.0);
        let gaps = &self.positive_gaps;
        let classes = &self.classes;
        let g_max = self.g_max;
        self.visit_classes(cutoff, &mut |r, m| {
            for g in gaps {
                let len = r * g;
                if len > cutoff {
                    b += 2.0 * m;
                } else {
                    a += m * len;
                }
            }
            for (rho, c) in classes {
                let child = r * rho;
                if !(child * g_max > cutoff) {
                    a += m * c * child * diam;
                }
            }
        })?;
        Ok((a, b))
    }

    /// `λ(K_ε)`.
    pub fn tube_volume(&self, eps: f64) -> Result<f64> {
        let (a, b) = self.coverage(eps)?;
        Ok(2.0 * eps + (a + b * eps))
    }

    /// `λ(K_ε) = α + β ε` on the affine piece containing `eps`.
    pub fn tube_affine(&self, eps: f64) -> Result<(f64, f64)> {
        let (a, b) = self.coverage(eps)?;
        Ok((a, b + 2.0))
    }

    /// `R_1(K,ε) = λ(K_ε) − Σ_{ε ≤ r_i} r_i λ(K_{ε/r_i})` for `ε ∈ (0,1]`.
    pub fn scaling_function(&self, eps: f64) -> Result<f64> {
        let (a, b) = self.scaling_affine(eps)?;
        Ok(a + b * eps)
    }

    /// Affine coefficients of `R_1` on the piece containing `eps`.
    pub fn scaling_affine(&self, eps: f64) -> Result<(f64, f64)> {
        if !(eps > 0.0 && eps <= 1.0) {
            return invalid(format!("eps = {eps} outside (0,1]"));
        }
        let (mut a, mut b) = self.tube_affine(eps)?;
        for m in self.ifs.maps() {
            let r = m.ratio();
            if eps <= r {
                let (ai, bi) = self.tube_affine(eps / r)?;
                a -= r * ai;
                b -= bi;
            }
        }
        Ok((a, b))
    }

    /// Every gap longer than `threshold` as `(length, multiplicity)`.
    pub fn gaps_above(&self, threshold: f64) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        let gaps = &self.positive_gaps;
        if self.g_max > threshold {
            self.visit_classes(threshold, &mut |r, m| {
                for g in gaps {
                    if r * g > threshold {
                        out.push((r * g, m));
                    }
                }
            })?;
        }
        Ok(out)
    }

    /// Position of `word`'s cylinder, `φ_ω([a,b])`.
    pub fn cylinder_interval(&self, word: &Word) -> (f64, f64) {
        let bx = self.ifs.word_map(word);
        let (x, y) = (bx.apply(&[self.a])[0], bx.apply(&[self.b])[0]);
        (x.min(y), x.max(y))
    }

    /// Gaps immediately left and right of `φ_ω([a,b])`; `None` where the
    /// cylinder reaches the end of the hull.
    pub fn adjacent_gaps(&self, word: &Word) -> (Option<f64>, Option<f64>) {
        let ratios = self.ifs.ratios();
        let n = word.len();
        let pos_of = |m: usize| self.pieces.iter().position(|p| p.map == m).expect("piece");
        let (mut left, mut right) = (None, None);
        // orientation and ratio of the parent at each level
        let mut flips = vec![false; n + 1];
        let mut scale = vec![1.0; n + 1];
        for k in 0..n {
            let m = word.0[k] as usize;
            flips[k + 1] = flips[k] ^ self.pieces[pos_of(m)].flip;
            scale[k + 1] = scale[k] * ratios[m];
        }
        for k in (0..n).rev() {
            let pos = pos_of(word.0[k] as usize);
            let last = self.pieces.len() - 1;
            // base-order neighbours seen through the parent's orientation
            let (base_left, base_right) = if flips[k] {
                ((pos < last).then(|| self.gaps[pos]), (pos > 0).then(|| self.gaps[pos - 1]))
            } else {
                ((pos > 0).then(|| self.gaps[pos - 1]), (pos < last).then(|| self.gaps[pos]))
            };
            if left.is_none() {
                left = base_left.map(|g| g * scale[k]);
            }
            if right.is_none() {
                right = base_right.map(|g| g * scale[k]);
            }
            if left.is_some() && right.is_some() {
                break;
            }
        }
        (left, right)
    }

    /// `λ(K_ε ∩ A_ω)` for the window `A_ω` running from the midpoint of the
    /// gap left of the cylinder to the midpoint of the gap on its right.
    /// Sides without a gap are unbounded. Valid for every `eps > 0`.
    pub fn windowed_tube_volume(&self, word: &Word, eps: f64) -> Result<f64> {
        let (gl, gr) = self.adjacent_gaps(word);
        let r = word.ratio(&self.ifs.ratios());
        let side = |g: Option<f64>| g.map_or(eps, |g| eps.min(0.5 * g));
        let (a, b) = self.coverage(eps / r)?;
        Ok((side(gl) + side(gr)) + r * (a + b * (eps / r)))
    }

    /// Checks the precondition `eps < min(adjacent gaps)/2` of `local_tube_volume`.
    pub fn window_limit(&self, word: &Word) -> f64 {
        let (gl, gr) = self.adjacent_gaps(word);
        0.5 * gl.unwrap_or(f64::INFINITY).min(gr.unwrap_or(f64::INFINITY))
    }
}

/// Lazily generated multiset of complementary gaps.
pub struct GapStream<'a> {
    line: &'a LineIfs,
}

impl<'a> GapStream<'a> {
    pub fn new(line: &'a LineIfs) -> Self {
        GapStream { line }
    }

    pub fn hull(&self) -> (f64, f64) {
        self.line.hull()
    }

    pub fn above(&self, threshold: f64) -> Result<Vec<(f64, f64)>> {
        self.line.gaps_above(threshold)
    }

    /// Total length of gaps longer than `threshold`; tends to `b − a`.
    pub fn total_above(&self, threshold: f64) -> Result<f64> {
        Ok(self.above(threshold)?.iter().map(|(g, m)| g * m).sum())
    }
}

pub fn tube_volume_exact(line: &LineIfs, eps: f64) -> Result<f64> {
    line.tube_volume(eps)
}

pub fn scaling_function_1d(line: &LineIfs, eps: f64) -> Result<f64> {
    line.scaling_function(eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Grid,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    pub eps: f64,
    pub lambda: f64,
    pub psi: f64,
}

/// Samples of `ψ(t) = e^{−t(δ−d)} λ(K_{e^{−t}})` on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeProfile {
    pub points: Vec<ProfilePoint>,
    pub provenance: Provenance,
}

impl TubeProfile {
    pub fn from_fn(
        tube: &(dyn Fn(f64) -> Result<f64> + Sync),
        delta: f64,
        dim: usize,
        t_min: f64,
        t_max: f64,
        samples: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if !(t_min >= 0.0 && t_max > t_min) || !t_max.is_finite() {
            return invalid(format!("need 0 <= t_min < t_max, got [{t_min}, {t_max}]"));
        }
        if samples < 2 {
            return invalid("a profile needs at least two samples");
        }
        let step = (t_max - t_min) / (samples - 1) as f64;
        let points = (0..samples)
            .map(|k| {
                let t = if k + 1 == samples { t_max } else { t_min + k as f64 * step };
                let eps = (-t).exp();
                let lambda = tube(eps)?;
                Ok(ProfilePoint { t, eps, lambda, psi: (-t * (delta - dim as f64)).exp() * lambda })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TubeProfile { points, provenance })
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,eps,lambda,psi")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", g12(p.t), g12(p.eps), g12(p.lambda), g12(p.psi))?;
        }
        Ok(())
    }
}

/// Exact `ψ`-profile on `[t_min, t_max]`.
pub fn tube_profile(line: &LineIfs, t_min: f64, t_max: f64, samples: usize) -> Result<TubeProfile> {
    TubeProfile::from_fn(&|e| line.tube_volume(e), line.delta(), 1, t_min, t_max, samples, Provenance::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Similarity;
    use proptest::prelude::*;

    fn cantor() -> LineIfs {
        LineIfs::new(&IfsSpec::line(&[1.0 / 3.0, 1.0 / 3.0], &[0.0, 2.0 / 3.0]).unwrap()).unwrap()
    }

    /// Measure of the union of `φ_ω([a,b])` fattened by `eps` over all words of length `m`.
    fn union_oracle(line: &LineIfs, eps: f64, m: usize) -> f64 {
        let n = line.ifs().len();
        let mut ivs = Vec::new();
        let mut word = vec![0u16; m];
        loop {
            let (lo, hi) = line.cylinder_interval(&Word(word.clone()));
            ivs.push((lo - eps, hi + eps));
            let mut k = m;
            loop {
                if k == 0 {
                    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut total = 0.0;
                    let mut cur = ivs[0];
                    for iv in &ivs[1..] {
                        if iv.0 <= cur.1 {
                            cur.1 = cur.1.max(iv.1);
                        } else {
                            total += cur.1 - cur.0;
                            cur = *iv;
                        }
                    }
                    return total + (cur.1 - cur.0);
                }
                k -= 1;
                word[k] += 1;
                if (word[k] as usize) < n {
                    break;
                }
                word[k] = 0;
            }
        }
    }

    #[test]
    fn cantor_examples() {
        let k = cantor();
        assert!((k.tube_volume(1.0 / 6.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((union_oracle(&k, 1.0 / 6.0, 6) - 4.0 / 3.0).abs() < 1e-12);
        assert!((k.tube_volume(0.5).unwrap() - 2.0).abs() < 1e-15);
        let e = 1.0 / 20.0;
        assert!((k.tube_volume(e).unwrap() - (2.0 / 3.0) * k.tube_volume(3.0 * e).unwrap()).abs() < 1e-15);
        assert!(k.tube_volume(0.0).is_err());
        assert!(k.tube_volume(-1.0).is_err());
    }

    #[test]
    fn scaling_function_examples() {
        let k = cantor();
        assert!((k.scaling_function(0.25).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        assert!(k.scaling_function(0.1).unwrap().abs() < 1e-15);
        assert!((k.scaling_function(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(k.scaling_function(1.5).is_err());
        assert!(k.scaling_function(0.0).is_err());
    }

    #[test]
    fn profile_examples() {
        let k = cantor();
        let d = k.delta();
        let t0 = 6f64.ln();
        let p = tube_profile(&k, t0, t0 + 1.0, 2).unwrap();
        let expected = (1.0f64 / 6.0).powf(d - 1.0) * 4.0 / 3.0;
        assert!((p.points[0].psi - expected).abs() < 1e-13);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,eps,lambda,psi\n"));
        let per = 3f64.ln();
        for t in [t0, t0 + 0.3, t0 + 0.77] {
            let psi = |t: f64| (-t * (d - 1.0)).exp() * k.tube_volume((-t).exp()).unwrap();
            assert!((psi(t + per) - psi(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn osc_touching_pieces_have_no_zero_gaps() {
        let c2 =
            LineIfs::new(&IfsSpec::line(&[1.0 / 7.0; 4], &[0.0, 1.0 / 7.0, 5.0 / 7.0, 6.0 / 7.0]).unwrap()).unwrap();
        assert_eq!(c2.touching_pairs(), 2);
        for e in [1e-3, 0.01, 0.05] {
            let exact = c2.tube_volume(e).unwrap();
            let oracle = union_oracle(&c2, e, 5);
            assert!((exact - oracle).abs() <= 2.0 * 7f64.powi(-5) * 4f64.powi(5) + 1e-12);
        }
        let overlapping = IfsSpec::line(&[0.6, 0.6], &[0.0, 0.4]).unwrap();
        assert!(LineIfs::new(&overlapping).is_err());
    }

    #[test]
    fn gap_total_approaches_hull_length() {
        let k = LineIfs::new(&IfsSpec::line(&[0.5, 0.2], &[0.0, 0.8]).unwrap()).unwrap();
        let s = GapStream::new(&k);
        let t9 = s.total_above(1e-9).unwrap();
        let t14 = s.total_above(1e-14).unwrap();
        // the missing mass decays like threshold^(1-δ)
        assert!(t9 < t14 && t14 < 1.0 && 1.0 - t14 < 2e-5, "{t9} {t14}");
        let ratio = (1.0 - t14) / (1.0 - t9);
        let expected = 1e-5f64.powf(1.0 - k.delta());
        assert!(ratio > 0.3 * expected && ratio < 3.0 * expected, "{ratio} vs {expected}");
        // gaps of the child "1" are the parent's gaps times 1/2
        let g = s.above(0.01).unwrap();
        assert!(g.iter().any(|(x, _)| (x - 0.15).abs() < 1e-15));
    }

    #[test]
    fn adjacent_gaps_follow_orientation() {
        let k = cantor();
        let (l, r) = k.adjacent_gaps(&Word(vec![0]));
        assert!(l.is_none() && (r.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let (l, r) = k.adjacent_gaps(&Word(vec![0, 1]));
        assert!((l.unwrap() - 1.0 / 9.0).abs() < 1e-16 && (r.unwrap() - 1.0 / 3.0).abs() < 1e-16);
        // flipped first map: child "11" sits at the right end of [0,1/3]
        let f = IfsSpec::new(vec![
            Similarity::line(1.0 / 3.0, 1.0 / 3.0, true).unwrap(),
            Similarity::line(1.0 / 3.0, 2.0 / 3.0, false).unwrap(),
        ])
        .unwrap();
        let f = LineIfs::new(&f).unwrap();
        let (lo, hi) = f.cylinder_interval(&Word(vec![0, 0]));
        assert!((lo - 2.0 / 9.0).abs() < 1e-15 && (hi - 1.0 / 3.0).abs() < 1e-15);
        let (l, r) = f.adjacent_gaps(&Word(vec![0, 0]));
        assert!((l.unwrap() - 1.0 / 9.0).abs() < 1e-16 && (r.unwrap() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn windowed_volume_of_empty_word_is_the_tube_volume() {
        let k = cantor();
        for e in [1e-6, 0.01, 0.2, 3.0] {
            assert_eq!(k.windowed_tube_volume(&Word::empty(), e).unwrap(), k.tube_volume(e).unwrap());
        }
    }

    fn random_ssc(seed: &[f64]) -> LineIfs {
        // ratios in (0.05, 0.35], pieces laid out left to right with positive gaps
        let n = 2 + (seed[0] * 3.0) as usize;
        let mut ratios: Vec<f64> = (0..n).map(|k| 0.05 + 0.3 * seed[1 + k]).collect();
        let total: f64 = ratios.iter().sum();
        if total > 0.85 {
            ratios.iter_mut().for_each(|r| *r *= 0.85 / total);
        }
        let total: f64 = ratios.iter().sum();
        let free = 1.0 - total;
        let weights: Vec<f64> = (0..n - 1).map(|k| 0.1 + seed[6 + k]).collect();
        let wsum: f64 = weights.iter().sum();
        let mut pos = 0.0;
        let mut ts = Vec::new();
        for k in 0..n {
            ts.push(pos);
            pos += ratios[k];
            if k + 1 < n {
                pos += free * weights[k] / wsum;
            }
        }
        LineIfs::new(&IfsSpec::line(&ratios, &ts).unwrap()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn renewal_identity_below_separation(seed in proptest::collection::vec(0.0f64..1.0, 12), u in 0.0f64..1.0) {
            let k = random_ssc(&seed);
            let gmin = k.first_gaps().iter().copied().fold(f64::INFINITY, f64::min);
            let eps = (0.5 * gmin).min(k.ifs().r_min()) * (0.01 + 0.98 * u);
            let lhs = k.tube_volume(eps).unwrap();
            let rhs: f64 = k.ifs().ratios().iter().map(|r| r * k.tube_volume(eps / r).unwrap()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn agrees_with_union_oracle(seed in proptest::collection::vec(0.0f64..1.0, 12), u in 0.0f64..1.0) {
            let k = random_ssc(&seed);
            let eps = 10f64.powf(-3.0 + 2.5 * u);
            let m = 5;
            let n = k.ifs().len() as f64;
            let bound = 2.0 * k.ifs().r_max().powi(m) * n.powi(m) * k.diameter();
            let diff = (k.tube_volume(eps).unwrap() - union_oracle(&k, eps, m as usize)).abs();
            prop_assert!(diff <= bound + 1e-12);
        }

        #[test]
        fn tube_volume_is_monotone_and_concave(seed in proptest::collection::vec(0.0f64..1.0, 12), e in 1e-6f64..0.5, h in 0.0f64..0.01) {
            // the slope is twice the number of components of K_ε, which only drops as ε grows
            let k = random_ssc(&seed);
            let a = k.tube_volume(e).unwrap();
            let b = k.tube_volume(e + h).unwrap();
            let (_, slope) = k.tube_affine(e).unwrap();
            prop_assert!(b >= a - 1e-15);
            prop_assert!(b - a <= slope * h * (1.0 + 1e-12) + 1e-15);
        }
    }
}
