//! Symplectic potentials `φ = s·Σ wᵣ Lᵣ log Lᵣ + f` on polytope interiors.
//!
//! Each log term carries an affine function `Lᵣ(ξ) = ξ·νᵣ + λᵣ` and a weight;
//! the correction `f` is a polynomial, hence smooth on all of ℝⁿ. With the
//! facets of `P` as log terms, unit weights, `f = 0` and `s = ½` this is the
//! Guillemin potential of `P`. Value, gradient and Hessian are closed form:
//!
//! ```text
//! φ(ξ)      = s Σ wᵣ Lᵣ log Lᵣ + f(ξ)
//! ∇φ(ξ)     = s Σ wᵣ νᵣ (log Lᵣ + 1) + ∇f(ξ)
//! Hess φ(ξ) = s Σ wᵣ νᵣνᵣᵀ / Lᵣ + Hess f(ξ)
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::face::FaceChart;
use crate::linalg::{self, dot};
use crate::polynomial::{Monomial, Polynomial};
use crate::polytope::Polytope;

/// Scale of the Guillemin potential in its standard normalization.
pub const GUILLEMIN_SCALE: f64 = 0.5;

/// Log arguments in `[-EXTENSION_TOL, 0]` count as zero in the continuous
/// extension.
pub const EXTENSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLogTerm {
    pub normal: Vec<f64>,
    pub offset: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl AffineLogTerm {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset, weight: 1.0 }
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        dot(&self.normal, xi) + self.offset
    }
}

/// `x log x`, with `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPotential {
    dim: usize,
    scale: f64,
    log_terms: Vec<AffineLogTerm>,
    correction: Polynomial,
}

impl SymplecticPotential {
    pub fn new(
        dim: usize,
        scale: f64,
        log_terms: Vec<AffineLogTerm>,
        correction: Polynomial,
    ) -> Result<Self> {
        for t in &log_terms {
            check_dim(dim, t.normal.len())?;
        }
        check_dim(dim, correction.nvars())?;
        if !scale.is_finite() {
            return Err(Error::InvalidInput("scale must be finite".into()));
        }
        Ok(Self { dim, scale, log_terms, correction })
    }

    /// One unit-weight log term per facet of `P`, no correction.
    pub fn guillemin(polytope: &Polytope, scale: f64) -> Self {
        let log_terms = (0..polytope.num_facets())
            .map(|r| AffineLogTerm::new(polytope.normal_f64(r).to_vec(), polytope.offset_f64(r)))
            .collect();
        Self {
            dim: polytope.dim(),
            scale,
            log_terms,
            correction: Polynomial::zero(polytope.dim()),
        }
    }

    pub fn with_correction(mut self, correction: Polynomial) -> Result<Self> {
        check_dim(self.dim, correction.nvars())?;
        self.correction = correction;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn log_terms(&self) -> &[AffineLogTerm] {
        &self.log_terms
    }

    pub fn correction(&self) -> &Polynomial {
        &self.correction
    }

    /// Values of every log argument at `xi`, failing on the first
    /// nonpositive one.
    pub fn log_arguments(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, xi.len())?;
        self.log_terms
            .iter()
            .enumerate()
            .map(|(r, t)| {
                let v = t.value(xi);
                if v > 0.0 {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!(
                        "log term {r} has nonpositive argument {v:e} at {xi:?}"
                    )))
                }
            })
            .collect()
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        let args = self.log_arguments(xi)?;
        let s: f64 = self
            .log_terms
            .iter()
            .zip(&args)
            .map(|(t, &l)| t.weight * l * l.ln())
            .sum();
        Ok(self.scale * s + self.correction.eval(xi))
    }

    /// Continuous extension to the closed domain, with `0 log 0 = 0`.
    pub fn eval_extended(&self, xi: &[f64]) -> Result<f64> {
        check_dim(self.dim, xi.len())?;
        let mut s = 0.0;
        for (r, t) in self.log_terms.iter().enumerate() {
            let v = t.value(xi);
            let tol = EXTENSION_TOL * (1.0 + linalg::norm_inf(&t.normal) * linalg::norm_inf(xi));
            if v < -tol {
                return Err(Error::Domain(format!(
                    "point {xi:?} violates log term {r} (value {v:e})"
                )));
            }
            s += t.weight * xlogx(v.max(0.0));
        }
        Ok(self.scale * s + self.correction.eval(xi))
    }

    pub fn grad(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let args = self.log_arguments(xi)?;
        let mut g = self.correction.gradient(xi);
        for (t, &l) in self.log_terms.iter().zip(&args) {
            let c = self.scale * t.weight * (l.ln() + 1.0);
            for (gi, &ni) in g.iter_mut().zip(&t.normal) {
                *gi += c * ni;
            }
        }
        Ok(g)
    }

    pub fn hessian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let args = self.log_arguments(xi)?;
        let mut h = self.correction.hessian(xi);
        let n = self.dim;
        for (t, &l) in self.log_terms.iter().zip(&args) {
            let c = self.scale * t.weight / l;
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += c * t.normal[i] * t.normal[j];
                }
            }
        }
        Ok(h)
    }

    /// `s·Σ wᵣνᵣ`, the constant part of the gradient; zero for unit weights
    /// on a polytope satisfying the zero-sum condition.
    pub fn weighted_normal_sum(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for t in &self.log_terms {
            for (vi, &ni) in v.iter_mut().zip(&t.normal) {
                *vi += self.scale * t.weight * ni;
            }
        }
        v
    }

    /// Pullback to the face chart `u ↦ origin + B·u`.
    ///
    /// Log terms vanishing identically on the face are dropped (their
    /// `0 log 0` extension); the rest and the correction are composed with
    /// the chart. A remaining log term that is negative somewhere on the face
    /// is a domain error.
    pub fn restrict(&self, chart: &FaceChart) -> Result<SymplecticPotential> {
        check_dim(self.dim, chart.ambient_dim())?;
        let basis = chart.basis_matrix();
        let origin = chart.origin_f64();
        let face_vertices: Vec<Vec<f64>> = chart
            .face_vertices()
            .iter()
            .map(|v| crate::exact::to_f64_vec(v))
            .collect();
        let mut terms = Vec::new();
        for (r, t) in self.log_terms.iter().enumerate() {
            let normal = linalg::mat_t_vec(&basis, &t.normal);
            let offset = t.value(origin);
            let scale = 1.0 + linalg::norm_inf(&t.normal) * (1.0 + linalg::norm_inf(origin));
            let tol = 1e-12 * scale;
            let flat = linalg::norm_inf(&normal) <= tol;
            if flat && offset.abs() <= tol {
                continue;
            }
            for v in &face_vertices {
                if t.value(v) < -tol {
                    return Err(Error::Domain(format!(
                        "log term {r} is negative on the face (value {:e})",
                        t.value(v)
                    )));
                }
            }
            for d in chart.face_rays() {
                let df: Vec<f64> = d.iter().map(|&x| x as f64).collect();
                if dot(&t.normal, &df) < -tol {
                    return Err(Error::Domain(format!(
                        "log term {r} becomes negative along the face"
                    )));
                }
            }
            terms.push(AffineLogTerm { normal, offset, weight: t.weight });
        }
        Ok(SymplecticPotential {
            dim: chart.dim_face(),
            scale: self.scale,
            log_terms: terms,
            correction: self.correction.pullback_affine(origin, &basis),
        })
    }

    /// `φ₁ ⊞ φ₂ (ξ₁, ξ₂) = φ₁(ξ₁) + φ₂(ξ₂)`. The scales are folded into the
    /// weights so the result has scale 1.
    pub fn product(a: &SymplecticPotential, b: &SymplecticPotential) -> SymplecticPotential {
        let n = a.dim + b.dim;
        let mut terms = Vec::with_capacity(a.log_terms.len() + b.log_terms.len());
        for t in &a.log_terms {
            let mut normal = t.normal.clone();
            normal.resize(n, 0.0);
            terms.push(AffineLogTerm { normal, offset: t.offset, weight: t.weight * a.scale });
        }
        for t in &b.log_terms {
            let mut normal = vec![0.0; a.dim];
            normal.extend_from_slice(&t.normal);
            terms.push(AffineLogTerm { normal, offset: t.offset, weight: t.weight * b.scale });
        }
        SymplecticPotential {
            dim: n,
            scale: 1.0,
            log_terms: terms,
            correction: a.correction.embed(0, n).add(&b.correction.embed(a.dim, n)),
        }
    }

    /// Heuristic check of the symplectic-potential conditions on `samples`
    /// interior points (see [`validity_scan`]).
    pub fn validity_scan(&self, polytope: &Polytope, samples: usize) -> ValidityReport {
        validity_scan(self, polytope, samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub samples: usize,
    pub min_eigenvalue: f64,
    /// Range of `det(Hess φ)·Π Lᵣ` over the samples.
    pub min_det_product: f64,
    pub max_det_product: f64,
    pub failures: usize,
    pub pass: bool,
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= k).all(|&p| k % p != 0) {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Samples interior points from a Halton sequence over vertex weights and
/// pulls every other stratum toward a vertex, so facet distances range down
/// to about `1e-6`. At each point it requires a positive definite Hessian
/// (LDLᵀ test) and a positive `det(G)·Π Lᵣ`.
///
/// This is a sampling check, not a proof of the boundary conditions.
pub fn validity_scan(phi: &SymplecticPotential, polytope: &Polytope, samples: usize) -> ValidityReport {
    let verts: Vec<&[f64]> = polytope.vertices().iter().map(|v| v.coords()).collect();
    let bases = primes(verts.len());
    let mut report = ValidityReport {
        samples,
        min_eigenvalue: f64::INFINITY,
        min_det_product: f64::INFINITY,
        max_det_product: f64::NEG_INFINITY,
        failures: 0,
        pass: true,
    };
    for i in 0..samples {
        let idx = i as u64 + 1;
        let weights: Vec<f64> = bases
            .iter()
            .map(|&b| -(1.0 - radical_inverse(idx, b)).ln() + 1e-3)
            .collect();
        let total: f64 = weights.iter().sum();
        let mut q = vec![0.0; polytope.dim()];
        for (w, v) in weights.iter().zip(&verts) {
            for (qi, vi) in q.iter_mut().zip(v.iter()) {
                *qi += w / total * vi;
            }
        }
        let level = (i % 7) as i32;
        let delta = 10f64.powi(-level);
        let anchor = verts[i % verts.len()];
        let x: Vec<f64> = anchor
            .iter()
            .zip(&q)
            .map(|(a, b)| a + delta * (b - a))
            .collect();
        let Ok(h) = phi.hessian(&x) else {
            report.failures += 1;
            continue;
        };
        let lambda = linalg::min_eigenvalue(&h);
        report.min_eigenvalue = report.min_eigenvalue.min(lambda);
        let facet_product: f64 = (0..polytope.num_facets())
            .map(|r| polytope.facet_value_unchecked(r, &x))
            .product();
        let det_product = h.determinant() * facet_product;
        report.min_det_product = report.min_det_product.min(det_product);
        report.max_det_product = report.max_det_product.max(det_product);
        if !linalg::is_positive_definite(&h) || !(det_product > 0.0) {
            report.failures += 1;
        }
    }
    report.pass = report.failures == 0;
    report
}

/// JSON form of a potential: either explicit terms or the Guillemin
/// potential of a polytope.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Guillemin {
        guillemin_of: Polytope,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        correction: Option<CorrectionSpec>,
    },
    Explicit {
        #[serde(default = "default_scale")]
        scale: f64,
        log_terms: Vec<AffineLogTerm>,
        #[serde(default)]
        correction: Option<CorrectionSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionSpec {
    #[serde(default)]
    pub monomials: Vec<Monomial>,
}

fn default_scale() -> f64 {
    GUILLEMIN_SCALE
}

impl PotentialSpec {
    /// Builds the potential; `dim` is needed when there are no log terms
    /// to infer it from.
    pub fn build(&self, dim: usize) -> Result<SymplecticPotential> {
        match self {
            PotentialSpec::Guillemin { guillemin_of, scale, correction } => {
                check_dim(dim, guillemin_of.dim())?;
                let phi = SymplecticPotential::guillemin(guillemin_of, *scale);
                match correction {
                    Some(c) => phi.with_correction(Polynomial::from_monomials(dim, &c.monomials)?),
                    None => Ok(phi),
                }
            }
            PotentialSpec::Explicit { scale, log_terms, correction } => {
                let f = match correction {
                    Some(c) => Polynomial::from_monomials(dim, &c.monomials)?,
                    None => Polynomial::zero(dim),
                };
                SymplecticPotential::new(dim, *scale, log_terms.clone(), f)
            }
        }
    }

    pub fn from_potential(phi: &SymplecticPotential) -> Self {
        PotentialSpec::Explicit {
            scale: phi.scale,
            log_terms: phi.log_terms.clone(),
            correction: Some(CorrectionSpec { monomials: phi.correction.monomials() }),
        }
    }
}
