//! Local average Minkowski content on cylinder sets.
//!
//! The local content of `K` on the cylinder `φ_ω K` is `M̃(K)·r_ω^δ`. On the
//! line it is measured through the window `A_ω` that runs from the midpoint
//! of the gap left of the cylinder to the midpoint of the gap on its right.
//! For the image `F = g(K)` the weight of `g(φ_ω K)` under the δ-conformal
//! measure is `∫_{φ_ω K}|g'|^δ dμ_δ / ∫_K |g'|^δ dμ_δ`.

use std::io::Write;

use rayon::prelude::*;

use crate::conformal::{build_partition, cylinder_factor, DistortionPartition};
use crate::content::cesaro_avg_content;
use crate::error::{invalid, Error, Result};
use crate::fmt::g12;
use crate::ifs::{moran_dimension, IfsSpec, Word};
use crate::interval::Interval;
use crate::map_expr::ConformalMap;
use crate::tube_exact::LineIfs;

fn check_word(ifs: &IfsSpec, word: &Word) -> Result<()> {
    if word.0.iter().any(|&i| i as usize >= ifs.len()) {
        return invalid(format!("word {word} uses a letter beyond {}", ifs.len()));
    }
    Ok(())
}

/// `μ_δ(φ_ω K) = r_ω^δ`.
pub fn cylinder_measure(ifs: &IfsSpec, word: &Word) -> Result<f64> {
    check_word(ifs, word)?;
    let delta = moran_dimension(&ifs.ratios())?;
    Ok(word.ratio(&ifs.ratios()).powf(delta))
}

/// `M̃(K)·r_ω^δ` given the average content `content` of `K`.
pub fn local_avg_content_exact(ifs: &IfsSpec, content: f64, word: &Word) -> Result<f64> {
    Ok(content * cylinder_measure(ifs, word)?)
}

/// `λ(K_ε ∩ A_ω)`; requires `eps` below half of each gap adjacent to the
/// cylinder. Values within `1e-12` relative of the limit count as reaching it,
/// since the gap lengths carry rounding.
pub fn local_tube_volume_1d(line: &LineIfs, eps: f64, word: &Word) -> Result<f64> {
    check_word(line.ifs(), word)?;
    let limit = line.window_limit(word);
    if !(eps < limit * (1.0 - 1e-12)) {
        return Err(Error::WindowViolation { eps, limit });
    }
    line.windowed_tube_volume(word, eps)
}

/// `|ln T|^{−1} ∫_T^1 ε^{δ−2} λ(K_ε ∩ A_ω) dε`.
pub fn local_cesaro_content(line: &LineIfs, word: &Word, t: f64) -> Result<f64> {
    check_word(line.ifs(), word)?;
    cesaro_avg_content(&|e| line.windowed_tube_volume(word, e), line.delta(), 1, t)
}

/// Enclosures for the image cylinder `g(φ_ω K)`: the normalised density
/// `|g'∘g^{−1}|^δ / ∫|g'|^δ dμ_δ` and the δ-conformal measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageLocal {
    pub density_lo: f64,
    pub density_hi: f64,
    pub measure_lo: f64,
    pub measure_hi: f64,
}

/// Conformal data reused across cylinders.
pub struct ImageMeasure<'a> {
    ifs: &'a IfsSpec,
    map: &'a ConformalMap,
    delta: f64,
    partition: Option<DistortionPartition>,
    total: Interval,
}

impl<'a> ImageMeasure<'a> {
    pub fn new(ifs: &'a IfsSpec, map: &'a ConformalMap, delta_dist: f64) -> Result<Self> {
        let delta = moran_dimension(&ifs.ratios())?;
        if let Some(c) = map.constant_derivative() {
            return Ok(ImageMeasure { ifs, map, delta, partition: None, total: Interval::point(c.powf(delta)) });
        }
        let part = build_partition(ifs, map, delta_dist, 0.0)?;
        let total = cylinder_factor(ifs, map, &part, &Word::empty())?;
        Ok(ImageMeasure { ifs, map, delta, partition: Some(part), total })
    }

    /// Enclosure of `∫_K |g'|^δ dμ_δ`.
    pub fn total(&self) -> Interval {
        self.total
    }

    /// Enclosure of `∫_{φ_ω K} |g'|^δ dμ_δ`.
    pub fn cylinder_integral(&self, word: &Word) -> Result<Interval> {
        check_word(self.ifs, word)?;
        match &self.partition {
            None => Ok(Interval::point(word.ratio(&self.ifs.ratios()).powf(self.delta)) * self.total.lo),
            Some(p) => cylinder_factor(self.ifs, self.map, p, word),
        }
    }

    pub fn local(&self, word: &Word) -> Result<ImageLocal> {
        check_word(self.ifs, word)?;
        if self.partition.is_none() {
            let m = word.ratio(&self.ifs.ratios()).powf(self.delta);
            return Ok(ImageLocal { density_lo: 1.0, density_hi: 1.0, measure_lo: m, measure_hi: m });
        }
        let c = self.cylinder_integral(word)?;
        let d = self.map.deriv_mag_bounds(&self.ifs.word_box(word)).powf(self.delta);
        Ok(ImageLocal {
            density_lo: (d.lo / self.total.hi).next_down(),
            density_hi: (d.hi / self.total.lo).next_up(),
            measure_lo: (c.lo / self.total.hi).next_down().max(0.0),
            measure_hi: (c.hi / self.total.lo).next_up().min(1.0),
        })
    }

    /// Both sides of `μ(g̃_i B) = ∫_B |g̃_i'|^δ dμ` for `B = g(φ_ν K)` and the
    /// conjugated map `g̃_i = g∘φ_i∘g^{−1}`. The left side is the measure of
    /// the cylinder `iν`; the right side integrates `|g'∘φ_i|^δ r_i^δ/|g'|^δ`
    /// against the density of `μ` over the partition below `ν`.
    pub fn fixed_point_check(&self, letter: usize, nu: &Word) -> Result<(Interval, Interval)> {
        if letter >= self.ifs.len() {
            return invalid(format!("letter {} out of range", letter + 1));
        }
        check_word(self.ifs, nu)?;
        let lhs = {
            let l = self.local(&nu.prefixed(letter))?;
            Interval::new(l.measure_lo, l.measure_hi)
        };
        let ratios = self.ifs.ratios();
        let words = match &self.partition {
            None => vec![nu.clone()],
            Some(p) => words_below(p, nu),
        };
        let r_i = Interval::point(ratios[letter].powf(self.delta)).widen_ulps(2);
        let terms: Vec<Interval> = words
            .par_iter()
            .map(|rho| {
                let base = self.map.deriv_mag_bounds(&self.ifs.word_box(rho)).powf(self.delta);
                let moved = self.map.deriv_mag_bounds(&self.ifs.word_box(&rho.prefixed(letter))).powf(self.delta);
                let weight = Interval::point(rho.ratio(&ratios).powf(self.delta)).widen_ulps(2 + rho.len());
                let jac = moved * r_i / base;
                let density = base / self.total;
                weight * jac * density
            })
            .collect();
        let rhs = terms.into_iter().fold(Interval::ZERO, |a, b| a + b);
        Ok((lhs, rhs))
    }
}

/// Partition words below `nu`, or `nu` itself when a shorter partition word covers it.
fn words_below(part: &DistortionPartition, nu: &Word) -> Vec<Word> {
    let below: Vec<Word> = part.words.iter().filter(|w| nu.is_prefix_of(w)).cloned().collect();
    if below.is_empty() {
        vec![nu.clone()]
    } else {
        below
    }
}

/// Enclosures for the image cylinder `g(φ_ω K)`.
pub fn image_local_density(ifs: &IfsSpec, map: &ConformalMap, word: &Word, delta_dist: f64) -> Result<ImageLocal> {
    ImageMeasure::new(ifs, map, delta_dist)?.local(word)
}

/// One row of the cylinder table.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderRow {
    pub word: Word,
    pub mu_delta: f64,
    pub local_content_exact: f64,
    pub local_content_numeric: f64,
    pub image_measure_lo: f64,
    pub image_measure_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderMeasureTable {
    pub entries: Vec<CylinderRow>,
    pub total_content: f64,
}

impl CylinderMeasureTable {
    /// Rows for `words`; image measures equal `μ_δ` when no map is given.
    pub fn build(
        line: &LineIfs,
        content: f64,
        words: &[Word],
        map: Option<&ConformalMap>,
        delta_dist: f64,
        t: f64,
    ) -> Result<Self> {
        let ifs = line.ifs();
        let image = map.map(|g| ImageMeasure::new(ifs, g, delta_dist)).transpose()?;
        let entries = words
            .iter()
            .map(|w| {
                let mu = cylinder_measure(ifs, w)?;
                let (lo, hi) = match &image {
                    Some(m) => {
                        let l = m.local(w)?;
                        (l.measure_lo, l.measure_hi)
                    }
                    None => (mu, mu),
                };
                Ok(CylinderRow {
                    word: w.clone(),
                    mu_delta: mu,
                    local_content_exact: content * mu,
                    local_content_numeric: local_cesaro_content(line, w, t)?,
                    image_measure_lo: lo,
                    image_measure_hi: hi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CylinderMeasureTable { entries, total_content: content })
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "word,mu_delta,local_content_exact,local_content_numeric,image_measure_lo,image_measure_hi")?;
        for r in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.word,
                g12(r.mu_delta),
                g12(r.local_content_exact),
                g12(r.local_content_numeric),
                g12(r.image_measure_lo),
                g12(r.image_measure_hi)
            )?;
        }
        Ok(())
    }
}
