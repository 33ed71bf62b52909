//! Rational polyhedra in half-space form and their Delzant validation.
//!
//! A polytope is stored as the list of facet inequalities
//! `l⁽ʳ⁾(ξ) = ξ·ν⁽ʳ⁾ + λ⁽ʳ⁾ ≥ 0` with primitive integer inward normals `ν⁽ʳ⁾`
//! and exact rational offsets `λ⁽ʳ⁾`. Vertices and recession rays are
//! computed exactly once at construction; everything combinatorial
//! (feasibility, active sets, determinants) is decided in exact arithmetic.
//!
//! Facets are kept in input order. Divergence formulas are sums over facets
//! and do not depend on that order.

use std::collections::HashSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::exact::{self, Rational};
use crate::lattice;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HalfSpace {
    normal: Vec<i64>,
    offset: Rational,
}

impl HalfSpace {
    pub fn new(normal: Vec<i64>, offset: Rational) -> Result<Self> {
        if normal.iter().all(|&v| v == 0) {
            return Err(Error::InvalidInput("facet normal is zero".into()));
        }
        if !lattice::is_primitive(&normal) {
            return Err(Error::InvalidInput(format!(
                "facet normal {normal:?} is not primitive"
            )));
        }
        Ok(Self { normal, offset })
    }

    pub fn from_ints(normal: Vec<i64>, offset: i64) -> Result<Self> {
        Self::new(normal, exact::int(offset))
    }

    pub fn normal(&self) -> &[i64] {
        &self.normal
    }

    pub fn offset(&self) -> &Rational {
        &self.offset
    }

    pub fn value_exact(&self, point: &[Rational]) -> Rational {
        exact::dot_int(&self.normal, point) + &self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    exact: Vec<Rational>,
    coords: Vec<f64>,
    active: Vec<usize>,
}

impl Vertex {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn exact(&self) -> &[Rational] {
        &self.exact
    }

    /// Sorted indices of the facets vanishing at this vertex.
    pub fn active(&self) -> &[usize] {
        &self.active
    }
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    bounded: bool,
    vertices: Vec<Vertex>,
    rays: Vec<Vec<i64>>,
    normals_f64: Vec<Vec<f64>>,
    offsets_f64: Vec<f64>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.bounded == other.bounded && self.halfspaces == other.halfspaces
    }
}

impl Polytope {
    /// Builds a polyhedron and checks it against its `bounded` flag.
    ///
    /// The feasible region must be nonempty, full-dimensional and contain
    /// no line. With `bounded = true` it must also be compact.
    pub fn new(dim: usize, halfspaces: Vec<HalfSpace>, bounded: bool) -> Result<Self> {
        let p = Self::build(dim, halfspaces)?;
        let actually_bounded = p.rays.is_empty();
        if bounded && !actually_bounded {
            return Err(Error::Inconsistent(format!(
                "declared bounded but has recession direction {:?}",
                p.rays[0]
            )));
        }
        if !bounded && actually_bounded {
            return Err(Error::Inconsistent(
                "declared unbounded but the feasible region is compact".into(),
            ));
        }
        Ok(Self { bounded, ..p })
    }

    /// Like [`Polytope::new`] but takes the boundedness flag from the geometry.
    pub fn with_detected_bounds(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let p = Self::build(dim, halfspaces)?;
        let bounded = p.rays.is_empty();
        Ok(Self { bounded, ..p })
    }

    fn build(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        for h in &halfspaces {
            check_dim(dim, h.normal.len())?;
        }
        let mut seen = HashSet::new();
        for h in &halfspaces {
            if !seen.insert(h) {
                return Err(Error::InvalidInput(format!(
                    "duplicate halfspace {:?} ≥ {}",
                    h.normal,
                    exact::format_rational(&-h.offset.clone())
                )));
            }
        }
        let normals: Vec<Vec<i64>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        if lattice::rank(&normals) < dim {
            return Err(Error::Inconsistent(
                "facet normals do not span; the region contains a line".into(),
            ));
        }
        let vertices = enumerate_vertices(dim, &halfspaces);
        if vertices.is_empty() {
            return Err(Error::Inconsistent("feasible region is empty".into()));
        }
        let rays = enumerate_rays(dim, &halfspaces);
        let normals_f64 = normals
            .iter()
            .map(|n| n.iter().map(|&v| v as f64).collect())
            .collect();
        let offsets_f64 = halfspaces.iter().map(|h| exact::to_f64(&h.offset)).collect();
        let p = Self {
            dim,
            halfspaces,
            bounded: true,
            vertices,
            rays,
            normals_f64,
            offsets_f64,
        };
        let c = p.interior_point_exact();
        if p.halfspaces.iter().any(|h| !h.value_exact(&c).is_positive()) {
            return Err(Error::Inconsistent("feasible region is not full-dimensional".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_facets(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn normal_f64(&self, r: usize) -> &[f64] {
        &self.normals_f64[r]
    }

    pub fn offset_f64(&self, r: usize) -> f64 {
        self.offsets_f64[r]
    }

    /// All vertices, each with its full active set.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Primitive generators of the extreme rays of the recession cone
    /// (empty for bounded polytopes).
    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    /// `ξ·ν⁽ʳ⁾ + λ⁽ʳ⁾`
    pub fn facet_value(&self, r: usize, xi: &[f64]) -> Result<f64> {
        check_dim(self.dim, xi.len())?;
        if r >= self.halfspaces.len() {
            return Err(Error::InvalidInput(format!(
                "facet index {r} out of range (N = {})",
                self.halfspaces.len()
            )));
        }
        Ok(self.facet_value_unchecked(r, xi))
    }

    pub(crate) fn facet_value_unchecked(&self, r: usize, xi: &[f64]) -> f64 {
        dot(&self.normals_f64[r], xi) + self.offsets_f64[r]
    }

    pub fn facet_values(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, xi.len())?;
        Ok((0..self.num_facets())
            .map(|r| self.facet_value_unchecked(r, xi))
            .collect())
    }

    pub fn contains(&self, xi: &[f64], strict: bool) -> Result<bool> {
        let values = self.facet_values(xi)?;
        Ok(values
            .iter()
            .all(|&v| if strict { v > 0.0 } else { v >= 0.0 }))
    }

    /// Smallest facet value at `xi` (infinite for a 0-dimensional polytope).
    pub fn min_facet_value(&self, xi: &[f64]) -> f64 {
        (0..self.num_facets())
            .map(|r| self.facet_value_unchecked(r, xi))
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean of the vertices plus the sum of the extreme rays: a point of the
    /// interior.
    pub fn interior_point_exact(&self) -> Vec<Rational> {
        let m = Rational::from_integer(BigInt::from(self.vertices.len()));
        let mut c = vec![Rational::zero(); self.dim];
        for v in &self.vertices {
            for (ci, vi) in c.iter_mut().zip(&v.exact) {
                *ci += vi;
            }
        }
        for ci in c.iter_mut() {
            *ci /= &m;
        }
        for ray in &self.rays {
            for (ci, &d) in c.iter_mut().zip(ray) {
                *ci += exact::int(d);
            }
        }
        c
    }

    pub fn interior_point(&self) -> Vec<f64> {
        exact::to_f64_vec(&self.interior_point_exact())
    }

    /// Drops halfspaces that do not support a facet.
    pub fn irredundant(&self) -> Result<Polytope> {
        let target = self.dim.saturating_sub(1);
        let keep: Vec<HalfSpace> = self
            .halfspaces
            .iter()
            .enumerate()
            .filter(|(r, h)| {
                let pts: Vec<Vec<Rational>> = self
                    .vertices
                    .iter()
                    .filter(|v| v.active.contains(r))
                    .map(|v| v.exact.clone())
                    .collect();
                let rays: Vec<Vec<Rational>> = self
                    .rays
                    .iter()
                    .filter(|d| dot_i(&h.normal, d) == 0)
                    .map(|d| d.iter().map(|&x| exact::int(x)).collect())
                    .collect();
                exact::affine_dimension(&pts, &rays) == Some(target)
            })
            .map(|(_, h)| h.clone())
            .collect();
        Polytope::new(self.dim, keep, self.bounded)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_i(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn enumerate_vertices(dim: usize, halfspaces: &[HalfSpace]) -> Vec<Vertex> {
    let mut out: Vec<Vertex> = Vec::new();
    let mut seen: HashSet<Vec<Rational>> = HashSet::new();
    for subset in (0..halfspaces.len()).combinations(dim) {
        let a: Vec<Vec<Rational>> = subset
            .iter()
            .map(|&r| halfspaces[r].normal.iter().map(|&v| exact::int(v)).collect())
            .collect();
        let b: Vec<Rational> = subset.iter().map(|&r| -halfspaces[r].offset.clone()).collect();
        let Some(x) = exact::solve(&a, &b) else { continue };
        let mut active = Vec::new();
        let mut feasible = true;
        for (r, h) in halfspaces.iter().enumerate() {
            let v = h.value_exact(&x);
            if v.is_negative() {
                feasible = false;
                break;
            }
            if v.is_zero() {
                active.push(r);
            }
        }
        if feasible && seen.insert(x.clone()) {
            out.push(Vertex {
                coords: exact::to_f64_vec(&x),
                exact: x,
                active,
            });
        }
    }
    out
}

/// Extreme rays of `{d : ν⁽ʳ⁾·d ≥ 0 ∀r}`, assuming the normals span.
fn enumerate_rays(dim: usize, halfspaces: &[HalfSpace]) -> Vec<Vec<i64>> {
    if dim == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for subset in (0..halfspaces.len()).combinations(dim - 1) {
        let rows: Vec<Vec<Rational>> = subset
            .iter()
            .map(|&r| halfspaces[r].normal.iter().map(|&v| exact::int(v)).collect())
            .collect();
        let k = exact::kernel(&rows, dim);
        if k.len() != 1 {
            continue;
        }
        let d = exact::primitive_direction(&k[0]);
        for sign in [1i64, -1] {
            let cand: Vec<i64> = d.iter().map(|&x| sign * x).collect();
            if halfspaces.iter().all(|h| dot_i(&h.normal, &cand) >= 0) && seen.insert(cand.clone()) {
                out.push(cand);
            }
        }
    }
    out
}

/// Cartesian product `P₁ × P₂` with block-concatenated normals.
pub fn product(p1: &Polytope, p2: &Polytope) -> Polytope {
    let n = p1.dim + p2.dim;
    let mut hs = Vec::with_capacity(p1.num_facets() + p2.num_facets());
    for h in &p1.halfspaces {
        let mut normal = h.normal.clone();
        normal.resize(n, 0);
        hs.push(HalfSpace { normal, offset: h.offset.clone() });
    }
    for h in &p2.halfspaces {
        let mut normal = vec![0; p1.dim];
        normal.extend_from_slice(&h.normal);
        hs.push(HalfSpace { normal, offset: h.offset.clone() });
    }
    Polytope::new(n, hs, p1.bounded && p2.bounded)
        .expect("product of valid polyhedra is a valid polyhedron")
}

/// A vertex at which the Delzant conditions fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexFailure {
    pub coords: Vec<f64>,
    /// Active facets, 0-based.
    pub active: Vec<usize>,
    /// Determinant of the active normals when the vertex is simple.
    pub determinant: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelzantReport {
    pub simple: bool,
    pub rational: bool,
    pub smooth: bool,
    /// Set for unbounded polyhedra: only the existing vertices were certified.
    pub partial: bool,
    pub failures: Vec<VertexFailure>,
}

impl DelzantReport {
    pub fn is_delzant(&self) -> bool {
        self.simple && self.rational && self.smooth
    }
}

/// Checks simplicity and smoothness vertex by vertex.
///
/// Smoothness is tested on the active inward normals: at a simple vertex
/// they must form a matrix of determinant ±1, which is equivalent to the
/// primitive edge vectors forming a ℤ-basis.
pub fn validate_delzant(p: &Polytope) -> DelzantReport {
    let mut simple = true;
    let mut smooth = true;
    let mut failures = Vec::new();
    for v in &p.vertices {
        if v.active.len() != p.dim {
            simple = false;
            smooth = false;
            failures.push(VertexFailure {
                coords: v.coords.clone(),
                active: v.active.clone(),
                determinant: None,
                reason: format!("{} active facets, expected {}", v.active.len(), p.dim),
            });
            continue;
        }
        let rows: Vec<Vec<i64>> = v.active.iter().map(|&r| p.halfspaces[r].normal.clone()).collect();
        let det = lattice::determinant(&rows);
        if det.abs() != BigInt::one() {
            smooth = false;
            failures.push(VertexFailure {
                coords: v.coords.clone(),
                active: v.active.clone(),
                determinant: Some(det.to_string()),
                reason: "active normals are not a lattice basis".into(),
            });
        }
    }
    DelzantReport {
        simple,
        rational: true,
        smooth,
        partial: !p.bounded,
        failures,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OffsetRepr {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HalfSpaceRepr {
    normal: Vec<i64>,
    offset: OffsetRepr,
}

/// JSON form: `{"dim": n, "bounded": bool, "halfspaces": [{"normal": [..], "offset": "p/q"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeSpec {
    dim: usize,
    bounded: bool,
    halfspaces: Vec<HalfSpaceRepr>,
}

impl TryFrom<PolytopeSpec> for Polytope {
    type Error = Error;

    fn try_from(spec: PolytopeSpec) -> Result<Self> {
        let hs = spec
            .halfspaces
            .into_iter()
            .map(|h| {
                let offset = match h.offset {
                    OffsetRepr::Int(v) => exact::int(v),
                    OffsetRepr::Text(s) => exact::parse_rational(&s)?,
                };
                HalfSpace::new(h.normal, offset)
            })
            .collect::<Result<Vec<_>>>()?;
        Polytope::new(spec.dim, hs, spec.bounded)
    }
}

impl From<&Polytope> for PolytopeSpec {
    fn from(p: &Polytope) -> Self {
        PolytopeSpec {
            dim: p.dim,
            bounded: p.bounded,
            halfspaces: p
                .halfspaces
                .iter()
                .map(|h| HalfSpaceRepr {
                    normal: h.normal.clone(),
                    offset: match h.offset.to_integer().to_i64() {
                        Some(v) if h.offset.is_integer() => OffsetRepr::Int(v),
                        _ => OffsetRepr::Text(exact::format_rational(&h.offset)),
                    },
                })
                .collect(),
        }
    }
}

impl Serialize for Polytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polytope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = PolytopeSpec::deserialize(d)?;
        Polytope::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// Frequently used polytopes.
pub mod shapes {
    use super::*;

    fn build(dim: usize, rows: &[(&[i64], i64)], bounded: bool) -> Polytope {
        let hs = rows
            .iter()
            .map(|(n, l)| HalfSpace::from_ints(n.to_vec(), *l).expect("primitive normal"))
            .collect();
        Polytope::new(dim, hs, bounded).expect("valid polytope")
    }

    /// `{x ≥ 0, Σx ≤ scale}`
    pub fn simplex(dim: usize, scale: i64) -> Polytope {
        let mut hs = Vec::with_capacity(dim + 1);
        for i in 0..dim {
            let mut e = vec![0; dim];
            e[i] = 1;
            hs.push(HalfSpace::from_ints(e, 0).unwrap());
        }
        hs.push(HalfSpace::from_ints(vec![-1; dim], scale).unwrap());
        Polytope::new(dim, hs, true).expect("simplex")
    }

    /// The triangle `x₁ ≥ 0, x₂ ≥ 0, 1 − x₁ − x₂ ≥ 0`.
    pub fn triangle() -> Polytope {
        simplex(2, 1)
    }

    /// `[0, 1]ⁿ` with facets ordered `x₁ ≥ 0, 1 − x₁ ≥ 0, x₂ ≥ 0, …`.
    pub fn cube(dim: usize) -> Polytope {
        let mut hs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![0; dim];
            e[i] = 1;
            hs.push(HalfSpace::from_ints(e.clone(), 0).unwrap());
            e[i] = -1;
            hs.push(HalfSpace::from_ints(e, 1).unwrap());
        }
        Polytope::new(dim, hs, true).expect("cube")
    }

    pub fn square() -> Polytope {
        cube(2)
    }

    pub fn interval(lo: i64, hi: i64) -> Polytope {
        build(1, &[(&[1], -lo), (&[-1], hi)], true)
    }

    /// `ℝ≥0`
    pub fn half_line() -> Polytope {
        build(1, &[(&[1], 0)], false)
    }

    /// Hirzebruch trapezoid with vertices (0,0), (2,0), (1,1), (0,1).
    pub fn trapezoid() -> Polytope {
        build(2, &[(&[1, 0], 0), (&[0, 1], 0), (&[-1, -1], 2), (&[0, -1], 1)], true)
    }

    /// The single point ℝ⁰.
    pub fn point() -> Polytope {
        Polytope::new(0, Vec::new(), true).expect("point")
    }
}
