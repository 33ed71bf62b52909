//! Faces of a polytope and their lattice-adapted affine charts.
//!
//! A face `F = {ξ ∈ P : l⁽ʳ⁾(ξ) = 0, r ∈ A}` of dimension `k` is parametrized
//! as `u ↦ origin + B·u` where the columns of `B` are a ℤ-basis of the
//! lattice directions of `F` (the integer kernel of the active normals).
//! In these coordinates the face is again a Delzant polytope `P_F`.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::exact::{self, Rational};
use crate::lattice;
use crate::polytope::{HalfSpace, Polytope};

#[derive(Debug, Clone, PartialEq)]
pub struct FaceChart {
    ambient_dim: usize,
    active: Vec<usize>,
    origin: Vec<Rational>,
    origin_f64: Vec<f64>,
    /// Columns of the chart matrix, each of length `ambient_dim`.
    basis: Vec<Vec<i64>>,
    face_vertices: Vec<Vec<Rational>>,
    face_rays: Vec<Vec<i64>>,
    pseudo_inverse: DMatrix<f64>,
}

impl FaceChart {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim_face(&self) -> usize {
        self.basis.len()
    }

    /// Facets defining the face, sorted, 0-based.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn origin(&self) -> &[Rational] {
        &self.origin
    }

    pub fn origin_f64(&self) -> &[f64] {
        &self.origin_f64
    }

    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient_dim, self.dim_face(), |i, j| self.basis[j][i] as f64)
    }

    pub fn face_vertices(&self) -> &[Vec<Rational>] {
        &self.face_vertices
    }

    pub fn face_rays(&self) -> &[Vec<i64>] {
        &self.face_rays
    }

    pub fn is_bounded(&self) -> bool {
        self.face_rays.is_empty()
    }

    /// `origin + B·u`
    pub fn to_ambient(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_face(), u.len())?;
        let mut x = self.origin_f64.clone();
        for (col, &uj) in self.basis.iter().zip(u) {
            for (xi, &b) in x.iter_mut().zip(col) {
                *xi += b as f64 * uj;
            }
        }
        Ok(x)
    }

    pub fn to_ambient_exact(&self, u: &[Rational]) -> Result<Vec<Rational>> {
        check_dim(self.dim_face(), u.len())?;
        let mut x = self.origin.clone();
        for (col, uj) in self.basis.iter().zip(u) {
            for (xi, &b) in x.iter_mut().zip(col) {
                *xi += uj * BigInt::from(b);
            }
        }
        Ok(x)
    }

    /// Least-squares chart coordinates `(BᵀB)⁻¹Bᵀ(ξ − origin)`; exact for
    /// points of the affine hull of the face.
    pub fn to_chart(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.ambient_dim, xi.len())?;
        let d: Vec<f64> = xi.iter().zip(&self.origin_f64).map(|(a, b)| a - b).collect();
        let d = nalgebra::DVector::from_vec(d);
        Ok((&self.pseudo_inverse * d).iter().copied().collect())
    }

    /// Same face with a different origin, which must satisfy every active
    /// facet equation.
    pub fn with_origin(&self, polytope: &Polytope, origin: Vec<Rational>) -> Result<FaceChart> {
        check_dim(self.ambient_dim, origin.len())?;
        for &r in &self.active {
            if !polytope.halfspaces()[r].value_exact(&origin).is_zero() {
                return Err(Error::InvalidInput(format!(
                    "origin is not on facet {r} of the face"
                )));
            }
        }
        Ok(FaceChart {
            origin_f64: exact::to_f64_vec(&origin),
            origin,
            ..self.clone()
        })
    }

    /// Same face with another lattice basis of its directions.
    pub fn with_basis(&self, polytope: &Polytope, basis: Vec<Vec<i64>>) -> Result<FaceChart> {
        if basis.len() != self.dim_face() {
            return Err(Error::InvalidInput(format!(
                "expected {} basis columns, got {}",
                self.dim_face(),
                basis.len()
            )));
        }
        for col in &basis {
            check_dim(self.ambient_dim, col.len())?;
            for &r in &self.active {
                let nu = polytope.halfspaces()[r].normal();
                if nu.iter().zip(col).map(|(a, b)| a * b).sum::<i64>() != 0 {
                    return Err(Error::InvalidInput(format!(
                        "basis column {col:?} is not tangent to facet {r}"
                    )));
                }
            }
        }
        if !basis.is_empty() && !lattice::extends_to_basis(&basis) {
            return Err(Error::NonSmoothFace(
                "basis columns do not span the lattice directions of the face".into(),
            ));
        }
        Ok(FaceChart {
            pseudo_inverse: pseudo_inverse(self.ambient_dim, &basis),
            basis,
            ..self.clone()
        })
    }
}

fn pseudo_inverse(n: usize, basis: &[Vec<i64>]) -> DMatrix<f64> {
    let k = basis.len();
    let b = DMatrix::from_fn(n, k, |i, j| basis[j][i] as f64);
    if k == 0 {
        return DMatrix::zeros(0, n);
    }
    let gram = b.transpose() * &b;
    let inv = gram
        .try_inverse()
        .expect("chart basis has full column rank");
    inv * b.transpose()
}

/// Chart of the face cut out by the facets in `active` (0-based).
///
/// The origin is the mean of the face's vertices plus the sum of its
/// recession rays, so it lies in the relative interior. The basis is the
/// Hermite normal form of the integer kernel of the active normals. An empty
/// `active` set gives the identity chart (origin 0, standard basis).
pub fn face_chart(polytope: &Polytope, active: &[usize]) -> Result<FaceChart> {
    let n = polytope.dim();
    let mut a: Vec<usize> = active.to_vec();
    a.sort_unstable();
    a.dedup();
    if let Some(&r) = a.iter().find(|&&r| r >= polytope.num_facets()) {
        return Err(Error::InvalidInput(format!("facet index {r} out of range")));
    }
    let normals: Vec<Vec<i64>> = a
        .iter()
        .map(|&r| polytope.halfspaces()[r].normal().to_vec())
        .collect();
    if lattice::rank(&normals) != a.len() {
        return Err(Error::InvalidInput(format!(
            "normals of facets {a:?} are linearly dependent"
        )));
    }
    let face_vertices: Vec<Vec<Rational>> = polytope
        .vertices()
        .iter()
        .filter(|v| a.iter().all(|r| v.active().contains(r)))
        .map(|v| v.exact().to_vec())
        .collect();
    if face_vertices.is_empty() {
        return Err(Error::EmptyFace(format!("facets {a:?} have no common point in P")));
    }
    let face_rays: Vec<Vec<i64>> = polytope
        .rays()
        .iter()
        .filter(|d| {
            normals
                .iter()
                .all(|nu| nu.iter().zip(d.iter()).map(|(x, y)| x * y).sum::<i64>() == 0)
        })
        .cloned()
        .collect();
    let k = n - a.len();
    let rays_q: Vec<Vec<Rational>> = face_rays
        .iter()
        .map(|d| d.iter().map(|&x| exact::int(x)).collect())
        .collect();
    let face_dim = exact::affine_dimension(&face_vertices, &rays_q).unwrap_or(0);
    if face_dim != k {
        return Err(Error::EmptyFace(format!(
            "facets {a:?} cut out a face of dimension {face_dim}, not {k}"
        )));
    }
    if !a.is_empty() && !lattice::extends_to_basis(&normals) {
        return Err(Error::NonSmoothFace(format!(
            "normals of facets {a:?} do not extend to a basis of ℤ^{n}"
        )));
    }
    let basis = lattice::integer_kernel(&normals, n)?;
    debug_assert_eq!(basis.len(), k);
    if k > 0 && !lattice::extends_to_basis(&basis) {
        return Err(Error::NonSmoothFace("face lattice is not saturated".into()));
    }

    let mut origin = vec![Rational::zero(); n];
    if a.is_empty() {
        return Ok(FaceChart {
            ambient_dim: n,
            active: a,
            origin_f64: exact::to_f64_vec(&origin),
            origin,
            pseudo_inverse: pseudo_inverse(n, &basis),
            basis,
            face_vertices,
            face_rays,
        });
    }
    let m = Rational::from_integer(BigInt::from(face_vertices.len()));
    for v in &face_vertices {
        for (o, x) in origin.iter_mut().zip(v) {
            *o += x;
        }
    }
    for o in origin.iter_mut() {
        *o /= &m;
    }
    for d in &face_rays {
        for (o, &x) in origin.iter_mut().zip(d) {
            *o += exact::int(x);
        }
    }

    Ok(FaceChart {
        ambient_dim: n,
        active: a,
        origin_f64: exact::to_f64_vec(&origin),
        origin,
        pseudo_inverse: pseudo_inverse(n, &basis),
        basis,
        face_vertices,
        face_rays,
    })
}

/// The polytope `P_F` in chart coordinates: the inactive facets pulled back
/// through the chart, re-primitivized, with redundant constraints dropped.
pub fn restrict_polytope(polytope: &Polytope, chart: &FaceChart) -> Result<Polytope> {
    let k = chart.dim_face();
    let mut seen = HashSet::new();
    let mut hs = Vec::new();
    for (r, h) in polytope.halfspaces().iter().enumerate() {
        if chart.active().contains(&r) {
            continue;
        }
        let normal: Vec<i64> = chart
            .basis()
            .iter()
            .map(|col| col.iter().zip(h.normal()).map(|(a, b)| a * b).sum())
            .collect();
        let offset = h.value_exact(chart.origin());
        if normal.iter().all(|&v| v == 0) {
            if offset.is_negative() {
                return Err(Error::EmptyFace(format!("facet {r} excludes the whole face")));
            }
            continue;
        }
        let g = normal.iter().fold(0i64, |acc, &v| acc.gcd(&v));
        let normal: Vec<i64> = normal.iter().map(|v| v / g).collect();
        let offset = offset / exact::int(g);
        let half = HalfSpace::new(normal, offset)?;
        if seen.insert(half.clone()) {
            hs.push(half);
        }
    }
    Polytope::with_detected_bounds(k, hs)?.irredundant()
}
