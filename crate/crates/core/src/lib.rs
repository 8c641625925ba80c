//! Minkowski dimension, average Minkowski content and local content of
//! self-similar sets on the line and in the plane, together with the same
//! quantities for images of such sets under conformal maps.
//!
//! The crate has two sides. The closed-form side evaluates the Gatzouras
//! integral from the scaling function, the conformal factor
//! `∫ |g'|^δ dμ_δ` with a bounded-distortion certificate and the local content
//! `M̃(K)·r_ω^δ`. The brute-force side measures tube volumes directly (exact gap
//! enumeration in 1-D, grid brackets and Monte-Carlo in any dimension) and is
//! used as an independent oracle for the first.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod content;
pub mod devil;
pub mod error;
pub mod fmt;
pub mod geometry;
pub mod ifs;
pub mod interval;
pub mod lattice;
pub mod local;
pub mod map_expr;
pub mod quadrature;
pub mod tube_exact;
pub mod tube_numeric;

pub use error::{Error, Result};
pub use geometry::{Affine, BoxNd, Point};
pub use ifs::{
    code_point, compute_kappa, entropy_term, moran_dimension, stopping_words, CodePoint, IfsSpec, MapDocument,
    Similarity, Word,
};
pub use interval::Interval;
pub use lattice::{classify_lattice, LatticeType};
pub use map_expr::{parse_map, ConformalMap, MapExpr};
