//! Divergences on faces and their relation to the ambient divergence.
//!
//! For a face `F` with chart `u ↦ origin + B·u`, the face divergence `D_F` is
//! the Bregman divergence of the restricted potential in chart coordinates.
//! The limit divergence `D′_F(η‖ξ′)` is the limit of `D(ξ‖ξ′)` as an interior
//! `ξ` approaches `η ∈ F°`; it is the three-term formula with `φ(η)` replaced
//! by its continuous extension.
//!
//! Perpendicularity hypotheses are checked in coordinates on `P`: the metric
//! pairs a flat (x) direction `a` with a dual (y) direction `b` as `a·b`. For
//! a foot point `η′` this is the first-order condition
//! `∇φ_F(u′) = Bᵀ∇φ(ξ″)`; for an interior point it is the mixed pairing
//! `(η − ξ)·(y(ξ′) − y(ξ))`.

use serde_json::json;

use crate::dually_flat::{self, bregman, solve_dual, Accuracy};
use crate::error::{check_dim, Error, Result};
use crate::face::{face_chart, restrict_polytope, FaceChart};
use crate::linalg::{self, dot, sub};
use crate::polytope::{self, shapes, Polytope};
use crate::potential::SymplecticPotential;
use crate::report::CheckReport;
use crate::sampling;

/// Active facets must vanish to this accuracy at a point of `F°`.
pub const ON_FACE_TOL: f64 = 1e-12;
/// Inactive facets must exceed this at a point of `F°`.
pub const INTERIOR_TOL: f64 = 1e-8;
pub const PYTHAGORAS_TOL: f64 = 1e-9;
pub const CONTINUITY_TOL: f64 = 1e-5;

/// A point of the relative interior of a face, with its chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint<'c> {
    chart: &'c FaceChart,
    ambient: Vec<f64>,
    chart_coords: Vec<f64>,
}

impl<'c> BoundaryPoint<'c> {
    pub fn from_ambient(p: &Polytope, chart: &'c FaceChart, ambient: &[f64]) -> Result<Self> {
        check_dim(p.dim(), ambient.len())?;
        check_dim(p.dim(), chart.ambient_dim())?;
        let u = chart.to_chart(ambient)?;
        let back = chart.to_ambient(&u)?;
        let scale = 1.0 + linalg::norm_inf(ambient);
        if linalg::norm_inf(&sub(&back, ambient)) > ON_FACE_TOL * scale {
            return Err(Error::Domain(format!(
                "{ambient:?} is not on the affine hull of the face"
            )));
        }
        for r in 0..p.num_facets() {
            let v = p.facet_value_unchecked(r, ambient);
            if chart.active().contains(&r) {
                if v.abs() > ON_FACE_TOL * scale {
                    return Err(Error::Domain(format!(
                        "facet {r} is {v:e} at {ambient:?}, expected 0"
                    )));
                }
            } else if v <= INTERIOR_TOL {
                return Err(Error::Domain(format!(
                    "{ambient:?} is on the relative boundary of the face (facet {r} is {v:e})"
                )));
            }
        }
        Ok(Self { chart, ambient: ambient.to_vec(), chart_coords: u })
    }

    pub fn from_chart(p: &Polytope, chart: &'c FaceChart, u: &[f64]) -> Result<Self> {
        let x = chart.to_ambient(u)?;
        let mut point = Self::from_ambient(p, chart, &x)?;
        point.chart_coords = u.to_vec();
        Ok(point)
    }

    pub fn chart(&self) -> &'c FaceChart {
        self.chart
    }

    pub fn ambient(&self) -> &[f64] {
        &self.ambient
    }

    pub fn chart_coords(&self) -> &[f64] {
        &self.chart_coords
    }
}

fn same_face(chart: &FaceChart, eta: &BoundaryPoint) -> Result<()> {
    if chart.active() != eta.chart.active() {
        return Err(Error::Domain(format!(
            "point lies on face {:?}, not {:?}",
            eta.chart.active(),
            chart.active()
        )));
    }
    Ok(())
}

/// `D_F(η‖η′)`, the divergence of the restricted potential, evaluated at the
/// coordinates of `η`, `η′` in `chart` (any chart of the face gives the same
/// value).
pub fn boundary_divergence(
    phi: &SymplecticPotential,
    chart: &FaceChart,
    eta: &BoundaryPoint,
    eta_p: &BoundaryPoint,
) -> Result<f64> {
    same_face(chart, eta)?;
    same_face(chart, eta_p)?;
    let phi_f = phi.restrict(chart)?;
    let u = chart.to_chart(&eta.ambient)?;
    let up = chart.to_chart(&eta_p.ambient)?;
    bregman(&phi_f, &u, &up)
}

/// `D′_F(η‖ξ′) = φ̄(η) − φ(ξ′) − (η − ξ′)·∇φ(ξ′)` with `φ̄` the continuous
/// extension of `φ` to the closed polytope.
pub fn limit_divergence(phi: &SymplecticPotential, eta: &BoundaryPoint, xi_p: &[f64]) -> Result<f64> {
    check_dim(phi.dim(), xi_p.len())?;
    let g = phi.grad(xi_p)?;
    Ok(phi.eval_extended(&eta.ambient)? - phi.eval(xi_p)? - dot(&sub(&eta.ambient, xi_p), &g))
}

/// The point on the segment from `η` toward the interior point of `P` at
/// which the smallest active facet value equals `delta`.
pub fn approach_point(p: &Polytope, eta: &BoundaryPoint, delta: f64) -> Vec<f64> {
    let c = p.interior_point();
    let rate = eta
        .chart
        .active()
        .iter()
        .map(|&r| p.facet_value_unchecked(r, &c) - p.facet_value_unchecked(r, &eta.ambient))
        .fold(f64::INFINITY, f64::min);
    if !rate.is_finite() {
        return eta.ambient.clone();
    }
    let tau = delta / rate;
    eta.ambient.iter().zip(&c).map(|(a, b)| a + tau * (b - a)).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ContinuityStep {
    pub k: u32,
    pub delta: f64,
    pub value: f64,
    pub gap: f64,
}

/// Iterated limit `lim_{ξ′→η′} lim_{ξ→η} D(ξ‖ξ′)` against `D_F(η‖η′)`.
///
/// At step `k` the outer point sits at facet distance `δ = 10⁻ᵏ` from `η′`
/// and the inner point at `10⁻³·δ` from `η`. Passes when the gap at
/// `k_max` is at most `1e-5` and did not grow over the last four steps.
pub fn continuity_check(
    phi: &SymplecticPotential,
    p: &Polytope,
    chart: &FaceChart,
    eta: &BoundaryPoint,
    eta_p: &BoundaryPoint,
    k_max: u32,
) -> Result<CheckReport> {
    let target = boundary_divergence(phi, chart, eta, eta_p)?;
    let mut steps = Vec::new();
    for k in 1..=k_max.max(1) {
        let delta = 10f64.powi(-(k as i32));
        let outer = approach_point(p, eta_p, delta);
        let inner = approach_point(p, eta, delta * 1e-3);
        let value = bregman(phi, &inner, &outer)?;
        steps.push(ContinuityStep { k, delta, value, gap: (value - target).abs() });
    }
    let last = steps.last().unwrap().gap;
    let tail = &steps[steps.len().saturating_sub(4)..];
    let settled = tail.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12);
    let report = CheckReport::new(
        "continuity",
        json!({"face": chart.active(), "eta": eta.ambient, "eta_prime": eta_p.ambient, "k_max": k_max}),
        last,
        CONTINUITY_TOL,
    );
    let pass = report.pass && settled;
    Ok(report.detail("target", target).detail("steps", &steps).with_pass(pass))
}

/// The foot `η′ ∈ F°` minimizing `D′_F(η‖ξ″)` over the face.
///
/// Solves `∇φ_F(u) = Bᵀ∇φ(ξ″)` by Newton on the restricted potential,
/// starting from the orthogonal projection of `ξ″` onto the face's affine
/// hull.
pub fn project_to_face<'c>(
    phi: &SymplecticPotential,
    p: &Polytope,
    chart: &'c FaceChart,
    xi_pp: &[f64],
) -> Result<BoundaryPoint<'c>> {
    let phi_f = phi.restrict(chart)?;
    let p_f = restrict_polytope(p, chart)?;
    let target = linalg::mat_t_vec(&chart.basis_matrix(), &phi.grad(xi_pp)?);
    let warm = chart.to_chart(xi_pp)?;
    let (u, _) = solve_dual(&phi_f, &p_f, &target, Some(&warm), Accuracy::Strict).map_err(|e| match e {
        Error::Numerical { .. } | Error::NoSolution(_) => Error::BoundaryOfFace(format!(
            "no critical point in the face interior ({e})"
        )),
        other => other,
    })?;
    BoundaryPoint::from_chart(p, chart, &u).map_err(|e| Error::BoundaryOfFace(e.to_string()))
}

/// `D_F(η‖η′) + D′_F(η′‖ξ″) − D′_F(η‖ξ″)`.
///
/// The residual equals `(u − u′)·(Bᵀ∇φ(ξ″) − ∇φ_F(u′))`, so it vanishes when
/// `η′` is the foot of `ξ″`. `perp_defect` is the ∞-norm of that gradient
/// mismatch.
pub fn pythagoras_54(
    phi: &SymplecticPotential,
    chart: &FaceChart,
    eta: &BoundaryPoint,
    eta_p: &BoundaryPoint,
    xi_pp: &[f64],
    tolerance: f64,
) -> Result<CheckReport> {
    let d_face = boundary_divergence(phi, chart, eta, eta_p)?;
    let d_foot = limit_divergence(phi, eta_p, xi_pp)?;
    let d_far = limit_divergence(phi, eta, xi_pp)?;
    let residual = d_face + d_foot - d_far;
    let phi_f = phi.restrict(chart)?;
    let target = linalg::mat_t_vec(&chart.basis_matrix(), &phi.grad(xi_pp)?);
    let up = chart.to_chart(&eta_p.ambient)?;
    let perp_defect = linalg::norm_inf(&sub(&phi_f.grad(&up)?, &target));
    Ok(CheckReport::new(
        "pythagoras_boundary_foot",
        json!({"face": chart.active(), "eta": eta.ambient, "eta_prime": eta_p.ambient, "xi": xi_pp}),
        residual,
        tolerance,
    )
    .detail("perp_defect", perp_defect)
    .detail("d_face", d_face)
    .detail("d_limit_foot", d_foot)
    .detail("d_limit", d_far))
}

/// `D′_F(η‖ξ) + D(ξ‖ξ′) − D′_F(η‖ξ′)`, which equals the mixed pairing
/// `(η − ξ)·(y(ξ′) − y(ξ))` identically; the pairing is reported as
/// `perp_value` and `identity_gap` is the difference of the two.
pub fn pythagoras_55(
    phi: &SymplecticPotential,
    eta: &BoundaryPoint,
    xi: &[f64],
    xi_p: &[f64],
    tolerance: f64,
) -> Result<CheckReport> {
    let a = limit_divergence(phi, eta, xi)?;
    let b = bregman(phi, xi, xi_p)?;
    let c = limit_divergence(phi, eta, xi_p)?;
    let residual = a + b - c;
    let perp_value = dot(&sub(&eta.ambient, xi), &sub(&phi.grad(xi_p)?, &phi.grad(xi)?));
    let identity_gap = (residual - perp_value).abs();
    Ok(CheckReport::new(
        "pythagoras_boundary_interior",
        json!({"face": eta.chart.active(), "eta": eta.ambient, "xi": xi, "xi_prime": xi_p}),
        residual,
        tolerance,
    )
    .detail("perp_value", perp_value)
    .detail("identity_gap", identity_gap)
    .detail("identity_holds", identity_gap <= dually_flat::COSINE_TOL * (1.0 + a.abs() + b.abs() + c.abs())))
}

/// Checks on `P × ℝ≥0` with potential `φ_P ⊞ ξ log ξ`: additivity of the
/// divergence, and the two boundary identities on the faces `P° × {0}` and
/// `(facet of P) × ℝ>0`. Each identity is a case of [`pythagoras_55`] with
/// zero mixed pairing.
pub fn product_boundary_check(
    phi_p: &SymplecticPotential,
    p: &Polytope,
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    if !p.is_bounded() {
        return Err(Error::InvalidInput("the base polytope must be bounded".into()));
    }
    check_dim(p.dim(), phi_p.dim())?;
    let line = shapes::half_line();
    let phi_line = SymplecticPotential::guillemin(&line, 1.0);
    let q = polytope::product(p, &line);
    let phi = SymplecticPotential::product(phi_p, &phi_line);
    let n = p.dim();
    let mut rng = sampling::rng(seed);
    let join = |a: &[f64], b: f64| {
        let mut v = a.to_vec();
        v.push(b);
        v
    };

    let mut additivity = 0.0f64;
    for _ in 0..samples {
        let (a, ap) = (sampling::interior_point(p, &mut rng), sampling::interior_point(p, &mut rng));
        let (b, bp) = (sampling::interior_point(&line, &mut rng)[0], sampling::interior_point(&line, &mut rng)[0]);
        let lhs = bregman(&phi, &join(&a, b), &join(&ap, bp))?;
        let rhs = bregman(phi_p, &a, &ap)? + bregman(&phi_line, &[b], &[bp])?;
        additivity = additivity.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }

    // face P° × {0}
    let bottom = face_chart(&q, &[q.num_facets() - 1])?;
    let mut bottom_worst = 0.0f64;
    for _ in 0..samples {
        let x1 = sampling::interior_point(p, &mut rng);
        let x1p = sampling::interior_point(p, &mut rng);
        let x2 = sampling::interior_point(&line, &mut rng)[0];
        let eta = BoundaryPoint::from_ambient(&q, &bottom, &join(&x1, 0.0))?;
        let rep = pythagoras_55(&phi, &eta, &join(&x1, x2), &join(&x1p, x2), PYTHAGORAS_TOL)?;
        bottom_worst = bottom_worst.max(rep.residual.abs());
    }

    // faces (facet of P) × ℝ>0
    let mut side_worst = 0.0f64;
    for i in 0..samples {
        let r = i % p.num_facets();
        let side = face_chart(&q, &[r])?;
        let eta = sampling::face_point(&q, &side, &mut rng);
        let eta = BoundaryPoint::from_ambient(&q, &side, &eta)?;
        let x1 = sampling::interior_point(p, &mut rng);
        let x2 = eta.ambient[n];
        let x2p = sampling::interior_point(&line, &mut rng)[0];
        let rep = pythagoras_55(&phi, &eta, &join(&x1, x2), &join(&x1, x2p), PYTHAGORAS_TOL)?;
        side_worst = side_worst.max(rep.residual.abs());
    }

    let inputs = json!({"dim": n, "samples": samples, "seed": seed});
    Ok(vec![
        CheckReport::new("product_additivity", inputs.clone(), additivity, 1e-10),
        CheckReport::new("product_bottom_face", inputs.clone(), bottom_worst, PYTHAGORAS_TOL),
        CheckReport::new("product_side_faces", inputs, side_worst, PYTHAGORAS_TOL),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::polynomial::{Monomial, Polynomial};

    fn setup() -> (Polytope, SymplecticPotential, FaceChart) {
        let t = shapes::triangle();
        let phi = SymplecticPotential::guillemin(&t, 1.0);
        let chart = face_chart(&t, &[2]).unwrap();
        (t, phi, chart)
    }

    #[test]
    fn boundary_point_validation() {
        let (t, _, chart) = setup();
        assert!(BoundaryPoint::from_ambient(&t, &chart, &[0.3, 0.7]).is_ok());
        assert!(BoundaryPoint::from_ambient(&t, &chart, &[0.3, 0.6]).is_err());
        assert!(BoundaryPoint::from_ambient(&t, &chart, &[1.0, 0.0]).is_err());
        let eta = BoundaryPoint::from_chart(&t, &chart, &[0.1]).unwrap();
        assert!((eta.ambient()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn edge_divergence() {
        let (t, phi, chart) = setup();
        let eta = BoundaryPoint::from_ambient(&t, &chart, &[0.5, 0.5]).unwrap();
        let etap = BoundaryPoint::from_ambient(&t, &chart, &[0.4, 0.6]).unwrap();
        let d = boundary_divergence(&phi, &chart, &eta, &etap).unwrap();
        let expected = 0.5 * (0.5f64 / 0.4).ln() + 0.5 * (0.5f64 / 0.6).ln();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.020411).abs() < 1e-6);
        assert_eq!(boundary_divergence(&phi, &chart, &eta, &eta).unwrap(), 0.0);
        let rebased = chart.with_origin(&t, vec![int(0), int(1)]).unwrap();
        assert!((boundary_divergence(&phi, &rebased, &eta, &etap).unwrap() - d).abs() < 1e-15);
    }

    #[test]
    fn limit_divergence_closed_forms() {
        let (t, phi, chart) = setup();
        let (a, b) = (0.25, 0.25);
        let foot = BoundaryPoint::from_ambient(&t, &chart, &[a / (a + b), b / (a + b)]).unwrap();
        let d = limit_divergence(&phi, &foot, &[a, b]).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        let (a, b) = (0.2, 0.3);
        let eta = 0.35;
        let e = BoundaryPoint::from_ambient(&t, &chart, &[eta, 1.0 - eta]).unwrap();
        let expected = eta * (eta / a).ln() + (1.0 - eta) * ((1.0 - eta) / b).ln();
        assert!((limit_divergence(&phi, &e, &[a, b]).unwrap() - expected).abs() < 1e-15);
        let near = approach_point(&t, &e, 1e-8);
        assert!((bregman(&phi, &near, &[a, b]).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn continuity_on_triangle_and_square() {
        let (t, phi, chart) = setup();
        let eta = BoundaryPoint::from_ambient(&t, &chart, &[0.5, 0.5]).unwrap();
        let etap = BoundaryPoint::from_ambient(&t, &chart, &[0.4, 0.6]).unwrap();
        let rep = continuity_check(&phi, &t, &chart, &eta, &etap, 8).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = continuity_check(&phi, &t, &chart, &eta, &eta, 8).unwrap();
        assert!(rep.pass, "{rep:?}");

        let s = shapes::square();
        let phi = SymplecticPotential::guillemin(&s, 0.5);
        let edge = face_chart(&s, &[2]).unwrap();
        let a = BoundaryPoint::from_ambient(&s, &edge, &[0.2, 0.0]).unwrap();
        let b = BoundaryPoint::from_ambient(&s, &edge, &[0.7, 0.0]).unwrap();
        let rep = continuity_check(&phi, &s, &edge, &a, &b, 8).unwrap();
        assert!(rep.pass, "{rep:?}");
        let interval = SymplecticPotential::guillemin(&shapes::interval(0, 1), 0.5);
        let target = bregman(&interval, &[0.2], &[0.7]).unwrap();
        assert!((rep.details["target"].as_f64().unwrap() - target).abs() < 1e-11);
    }

    #[test]
    fn projection_onto_edge() {
        let (t, phi, chart) = setup();
        let (a, b) = (0.2, 0.5);
        let foot = project_to_face(&phi, &t, &chart, &[a, b]).unwrap();
        assert!((foot.ambient()[0] - a / (a + b)).abs() < 1e-12);
        let foot = project_to_face(&phi, &t, &chart, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((foot.ambient()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_reports_boundary_minimizers() {
        let t = shapes::triangle();
        let f = Polynomial::from_monomials(2, &[Monomial { exponents: vec![1, 1], coeff: 5.0 }]).unwrap();
        // log terms for x₁, x₂ only, plus 5x₁x₂
        let terms = vec![
            crate::potential::AffineLogTerm::new(vec![1.0, 0.0], 0.0),
            crate::potential::AffineLogTerm::new(vec![0.0, 1.0], 0.0),
        ];
        let phi = SymplecticPotential::new(2, 1.0, terms, f).unwrap();
        let bottom = face_chart(&t, &[1]).unwrap();
        // on x₂ = 0 the critical point is u = a·e^{5b} > 1
        let err = project_to_face(&phi, &t, &bottom, &[0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::BoundaryOfFace(_)), "{err:?}");
    }

    #[test]
    fn pythagoras_with_foot() {
        let (t, phi, chart) = setup();
        let xi = [0.25, 0.25];
        let foot = project_to_face(&phi, &t, &chart, &xi).unwrap();
        let eta = BoundaryPoint::from_ambient(&t, &chart, &[0.3, 0.7]).unwrap();
        let rep = pythagoras_54(&phi, &chart, &eta, &foot, &xi, PYTHAGORAS_TOL).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = pythagoras_54(&phi, &chart, &foot, &foot, &xi, PYTHAGORAS_TOL).unwrap();
        assert_eq!(rep.residual, 0.0);
        let off = BoundaryPoint::from_ambient(&t, &chart, &[0.55, 0.45]).unwrap();
        let rep = pythagoras_54(&phi, &chart, &eta, &off, &xi, PYTHAGORAS_TOL).unwrap();
        assert!(!rep.pass && rep.residual.abs() > 1e-3, "{rep:?}");
    }

    #[test]
    fn pythagoras_with_interior_point() {
        let (t, phi, chart) = setup();
        let eta = BoundaryPoint::from_ambient(&t, &chart, &[0.3, 0.7]).unwrap();
        let xi = [0.2, 0.3];
        let rep = pythagoras_55(&phi, &eta, &xi, &xi, PYTHAGORAS_TOL).unwrap();
        assert_eq!(rep.residual, 0.0);
        // y(ξ′) = y(ξ) + w with w ⟂ (η − ξ)
        let d = sub(eta.ambient(), &xi);
        let w = [-d[1] * 0.8, d[0] * 0.8];
        let y = linalg::add_scaled(&phi.grad(&xi).unwrap(), 1.0, &w);
        let xip = dually_flat::from_dual(&phi, &t, &y).unwrap().x;
        let rep = pythagoras_55(&phi, &eta, &xi, &xip, PYTHAGORAS_TOL).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = pythagoras_55(&phi, &eta, &xi, &[0.1, 0.1], PYTHAGORAS_TOL).unwrap();
        assert!(rep.details["identity_holds"].as_bool().unwrap());
        assert!(!rep.pass);
    }

    #[test]
    fn product_checks() {
        let t = shapes::triangle();
        let phi = SymplecticPotential::guillemin(&t, 1.0);
        for rep in product_boundary_check(&phi, &t, 30, 3).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
    }
}
