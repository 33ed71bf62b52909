//! Legendre duality, Bregman divergences, the metric blocks and the two
//! families of affine geodesics.
//!
//! The potential `φ` gives the mixture coordinates `x = ξ` and the dual
//! coordinates `y = ∇φ(ξ)`. The inverse map `y ↦ x` has no closed form in
//! general and is computed by damped Newton on `Φ(x) = φ(x) − x·y`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::face::face_chart;
use crate::linalg::{self, dot, sub};
use crate::polytope::Polytope;
use crate::potential::SymplecticPotential;

/// ∞-norm tolerance on `∇φ(x) − y` for the Newton inverse.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 200;
/// Iterates must keep every facet value at least this large.
pub const FACET_MARGIN: f64 = 1e-15;
/// Iterates beyond this norm are taken to have escaped every compact set.
pub const ESCAPE_NORM: f64 = 1e12;
/// Tolerance of the three-point identity checked by [`cosine_residual`],
/// relative to `1 + |D(p‖q)| + |D(q‖r)| + |D(p‖r)|`.
pub const COSINE_TOL: f64 = 1e-9;
pub const METRIC_TOL: f64 = 1e-10;
/// Facet values below this classify a facet as active at a limit point.
pub const FACE_TOL: f64 = 1e-8;
/// Target accuracy of an extrapolated geodesic limit.
pub const LIMIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn to_dual(phi: &SymplecticPotential, xi: &[f64]) -> Result<DualPair> {
    Ok(DualPair { x: xi.to_vec(), y: phi.grad(xi)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Accuracy {
    /// Converge to [`NEWTON_TOL`] or fail.
    Strict,
    /// Also accept a point where no step improves either the objective or
    /// the residual. Near the boundary `∇φ` cannot be resolved to
    /// [`NEWTON_TOL`] in double precision while `x` itself still is.
    Relaxed,
}

fn interior(phi: &SymplecticPotential, p: &Polytope, x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
        && p.min_facet_value(x) >= FACET_MARGIN
        && phi.log_arguments(x).is_ok()
}

/// Rounding level of `∇φ(x) − y`: each log term contributes the relative
/// error of its argument, which blows up as the argument goes to zero.
fn gradient_noise(phi: &SymplecticPotential, x: &[f64], y: &[f64]) -> f64 {
    let eps = 8.0 * f64::EPSILON;
    let mut noise = eps * (1.0 + linalg::norm_inf(y));
    for t in phi.log_terms() {
        let size = t.offset.abs() + t.normal.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>();
        let value = t.value(x);
        noise += (phi.scale() * t.weight).abs() * linalg::norm_inf(&t.normal) * eps * size / value;
    }
    noise
}

/// Largest rounding level accepted in place of [`NEWTON_TOL`].
const MAX_NOISE_TOL: f64 = 1e-4;

pub(crate) fn solve_dual(
    phi: &SymplecticPotential,
    p: &Polytope,
    y: &[f64],
    warm: Option<&[f64]>,
    accuracy: Accuracy,
) -> Result<(Vec<f64>, f64)> {
    check_dim(phi.dim(), p.dim())?;
    check_dim(phi.dim(), y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("dual coordinates must be finite".into()));
    }
    let mut x = match warm {
        Some(w) if interior(phi, p, w) => w.to_vec(),
        _ => p.interior_point(),
    };
    if !interior(phi, p, &x) {
        return Err(Error::Domain("no interior starting point for the Newton inverse".into()));
    }
    let objective = |x: &[f64]| -> Result<f64> { Ok(phi.eval(x)? - dot(x, y)) };
    let mut g = sub(&phi.grad(&x)?, y);
    let mut res = linalg::norm_inf(&g);
    let mut f = objective(&x)?;
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL.max(gradient_noise(phi, &x, y).min(MAX_NOISE_TOL)) {
            return Ok((x, res));
        }
        let h = phi.hessian(&x)?;
        let step = linalg::solve_spd(&h, &g)
            .or_else(|| h.clone().lu().solve(&nalgebra::DVector::from_column_slice(&g)).map(|v| v.iter().copied().collect()))
            .ok_or_else(|| Error::Numerical {
                message: "singular Hessian in Newton inverse".into(),
                residual: res,
            })?;
        let slope = -dot(&g, &step);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-30 {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a - alpha * d).collect();
            if interior(phi, p, &cand) {
                let fc = objective(&cand)?;
                let gc = sub(&phi.grad(&cand)?, y);
                let rc = linalg::norm_inf(&gc);
                if fc <= f + 1e-4 * alpha * slope || rc < res {
                    accepted = Some((cand, fc, gc, rc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xn, fnew, gn, rn)) => {
                let moved = linalg::norm_inf(&sub(&xn, &x));
                x = xn;
                f = fnew;
                g = gn;
                res = rn;
                if linalg::norm_inf(&x) > ESCAPE_NORM {
                    return Err(Error::NoSolution(format!(
                        "Newton iterate escaped to |x| = {:e}; y = {y:?} is not in the image of the gradient",
                        linalg::norm_inf(&x)
                    )));
                }
                if accuracy == Accuracy::Relaxed && moved <= 1e-17 * (1.0 + linalg::norm_inf(&x)) {
                    return Ok((x, res));
                }
            }
            None if accuracy == Accuracy::Relaxed => return Ok((x, res)),
            None => {
                return Err(Error::Numerical {
                    message: "Newton inverse stalled".into(),
                    residual: res,
                })
            }
        }
    }
    if res <= NEWTON_TOL {
        return Ok((x, res));
    }
    if accuracy == Accuracy::Relaxed {
        return Ok((x, res));
    }
    Err(Error::Numerical {
        message: format!("Newton inverse did not converge in {NEWTON_MAX_ITER} iterations"),
        residual: res,
    })
}

/// Solves `∇φ(x) = y` for `x` in the interior of `P`.
///
/// Converges when the residual is below [`NEWTON_TOL`], or below the rounding
/// level of the gradient at the iterate when that is larger. The latter
/// happens for `y` whose preimage has facet values below about `1e-7`, where
/// `log lᵣ` cannot be evaluated to `1e-10`.
pub fn from_dual(phi: &SymplecticPotential, p: &Polytope, y: &[f64]) -> Result<DualPair> {
    let (x, _) = solve_dual(phi, p, y, None, Accuracy::Strict)?;
    Ok(DualPair { x, y: y.to_vec() })
}

/// `ψ(y(ξ)) = ξ·y(ξ) − φ(ξ)`.
pub fn dual_potential(phi: &SymplecticPotential, xi: &[f64]) -> Result<f64> {
    let y = phi.grad(xi)?;
    Ok(dot(xi, &y) - phi.eval(xi)?)
}

/// `D(ξ‖ξ′) = φ(ξ) − φ(ξ′) − (ξ − ξ′)·∇φ(ξ′)`.
pub fn bregman(phi: &SymplecticPotential, xi: &[f64], xi_p: &[f64]) -> Result<f64> {
    check_dim(phi.dim(), xi.len())?;
    check_dim(phi.dim(), xi_p.len())?;
    let g = phi.grad(xi_p)?;
    Ok(phi.eval(xi)? - phi.eval(xi_p)? - dot(&sub(xi, xi_p), &g))
}

/// The divergence written facet by facet:
///
/// `s Σ wᵣ (Lᵣ(ξ) log(Lᵣ(ξ)/Lᵣ(ξ′)) − (ξ−ξ′)·νᵣ) + (ξ′−ξ)·∇f(ξ′) + f(ξ) − f(ξ′)`.
///
/// The log terms of `φ` must be the facets of `P`, in order.
pub fn bregman_expanded(
    phi: &SymplecticPotential,
    p: &Polytope,
    xi: &[f64],
    xi_p: &[f64],
) -> Result<f64> {
    check_dim(p.dim(), phi.dim())?;
    check_dim(p.dim(), xi.len())?;
    check_dim(p.dim(), xi_p.len())?;
    if phi.log_terms().len() != p.num_facets() {
        return Err(Error::InvalidInput(format!(
            "potential has {} log terms but the polytope has {} facets",
            phi.log_terms().len(),
            p.num_facets()
        )));
    }
    for (r, t) in phi.log_terms().iter().enumerate() {
        let same = t.normal.iter().zip(p.normal_f64(r)).all(|(a, b)| (a - b).abs() <= 1e-12)
            && (t.offset - p.offset_f64(r)).abs() <= 1e-12 * (1.0 + t.offset.abs());
        if !same {
            return Err(Error::InvalidInput(format!(
                "log term {r} is not facet {r} of the polytope"
            )));
        }
    }
    let a = phi.log_arguments(xi)?;
    let b = phi.log_arguments(xi_p)?;
    let d = sub(xi, xi_p);
    let mut sum = 0.0;
    for ((t, &l), &lp) in phi.log_terms().iter().zip(&a).zip(&b) {
        sum += t.weight * (l * (l / lp).ln() - dot(&d, &t.normal));
    }
    let f = phi.correction();
    Ok(phi.scale() * sum - dot(&d, &f.gradient(xi_p)) + f.eval(xi) - f.eval(xi_p))
}

/// The three-point defect `(x_p − x_q)·(y_r − y_q)`, checked against
/// `D(p‖q) + D(q‖r) − D(p‖r)`.
///
/// Expanding the three-term divergences shows this is the orientation for
/// which the two agree; the pairing `(x_p − x_q)·(y_q − y_r)` is its negative.
pub fn cosine_residual(phi: &SymplecticPotential, p: &[f64], q: &[f64], r: &[f64]) -> Result<f64> {
    let yq = phi.grad(q)?;
    let yr = phi.grad(r)?;
    let residual = dot(&sub(p, q), &sub(&yr, &yq));
    let dpq = bregman(phi, p, q)?;
    let dqr = bregman(phi, q, r)?;
    let dpr = bregman(phi, p, r)?;
    let lhs = dpq + dqr - dpr;
    let tol = COSINE_TOL * (1.0 + dpq.abs() + dqr.abs() + dpr.abs());
    if (lhs - residual).abs() > tol {
        return Err(Error::Numerical {
            message: format!("three-point identity fails: divergences give {lhs:e}, pairing gives {residual:e}"),
            residual: (lhs - residual).abs(),
        });
    }
    Ok(residual)
}

/// `(G, G⁻¹)` with `G = Hess φ(ξ)`.
pub fn metric_pair(phi: &SymplecticPotential, xi: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = phi.hessian(xi)?;
    let n = g.nrows();
    let inv = g
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| g.clone().try_inverse())
        .ok_or_else(|| Error::Numerical {
            message: format!("Hessian is singular at {xi:?}"),
            residual: f64::INFINITY,
        })?;
    let defect = linalg::max_abs(&(&g * &inv - DMatrix::identity(n, n)));
    if defect > METRIC_TOL {
        return Err(Error::Numerical {
            message: format!("G·G⁻¹ deviates from the identity at {xi:?}"),
            residual: defect,
        });
    }
    Ok((g, inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeodesicKind {
    /// Straight in `x`.
    Flat,
    /// Straight in `y`.
    Dual,
}

/// `direction` is the velocity in `x` for flat geodesics and in `y` for dual
/// ones. A zero direction gives the constant curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSpec {
    pub kind: GeodesicKind,
    pub start: Vec<f64>,
    pub direction: Vec<f64>,
}

impl GeodesicSpec {
    pub fn flat(start: Vec<f64>, direction: Vec<f64>) -> Self {
        Self { kind: GeodesicKind::Flat, start, direction }
    }

    pub fn dual(start: Vec<f64>, direction: Vec<f64>) -> Self {
        Self { kind: GeodesicKind::Dual, start, direction }
    }
}

/// First `t` in the direction of `sign(t)` at which `start + t·d` leaves `P`.
fn flat_exit_time(p: &Polytope, start: &[f64], d: &[f64], forward: bool) -> f64 {
    let mut exit = f64::INFINITY;
    for r in 0..p.num_facets() {
        let rate = dot(p.normal_f64(r), d) * if forward { 1.0 } else { -1.0 };
        if rate < 0.0 {
            exit = exit.min(p.facet_value_unchecked(r, start) / -rate);
        }
    }
    if forward {
        exit
    } else {
        -exit
    }
}

pub fn geodesic_point(
    phi: &SymplecticPotential,
    p: &Polytope,
    spec: &GeodesicSpec,
    t: f64,
) -> Result<Vec<f64>> {
    check_dim(p.dim(), spec.start.len())?;
    check_dim(p.dim(), spec.direction.len())?;
    if !p.contains(&spec.start, true)? {
        return Err(Error::Domain(format!("start {:?} is not interior", spec.start)));
    }
    match spec.kind {
        GeodesicKind::Flat => {
            let x = linalg::add_scaled(&spec.start, t, &spec.direction);
            let exit = flat_exit_time(p, &spec.start, &spec.direction, t >= 0.0);
            if t.abs() >= exit.abs() {
                return Err(Error::GeodesicExit { exit_time: exit });
            }
            Ok(x)
        }
        GeodesicKind::Dual => {
            if t == 0.0 || spec.direction.iter().all(|&v| v == 0.0) {
                return Ok(spec.start.clone());
            }
            let y0 = phi.grad(&spec.start)?;
            let y = linalg::add_scaled(&y0, t, &spec.direction);
            Ok(from_dual(phi, p, &y)?.x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicLimit {
    pub point: Vec<f64>,
    /// 0-based indices of the facets containing the limit.
    pub face: Vec<usize>,
    pub trace: Vec<TracePoint>,
    pub error_estimate: f64,
}

/// Facets active on the face of `P` maximizing `v·x`.
fn support_face(p: &Polytope, v: &[f64]) -> Vec<usize> {
    let values: Vec<f64> = p.vertices().iter().map(|vx| dot(vx.coords(), v)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = 1e-12 * (1.0 + linalg::norm_inf(v) * p.vertices().iter().map(|vx| linalg::norm_inf(vx.coords())).fold(0.0, f64::max));
    let top: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= best - scale).collect();
    let mut active: Vec<usize> = p.vertices()[top[0]].active().to_vec();
    for &i in &top[1..] {
        let other = p.vertices()[i].active();
        active.retain(|r| other.contains(r));
    }
    active
}

/// Limit of the dual geodesic as `t → ∞` for bounded `P`.
///
/// The limit lies in the face of `P` on which `v·x` is maximal. If that face
/// is a vertex it is returned exactly. Otherwise the curve is sampled at
/// `tⱼ = j·ln2/c`, where `c` is the slowest exponential rate at which the
/// active facet values decay, until those values fall below `1e-9`; the
/// samples then approach the limit geometrically with ratio ½ and are
/// Richardson-extrapolated.
pub fn dual_geodesic_limit(
    phi: &SymplecticPotential,
    p: &Polytope,
    spec: &GeodesicSpec,
) -> Result<GeodesicLimit> {
    if spec.kind != GeodesicKind::Dual {
        return Err(Error::InvalidInput("limit requires a dual geodesic".into()));
    }
    if !p.is_bounded() {
        return Err(Error::InvalidInput(
            "dual geodesic limits are only computed for bounded polytopes".into(),
        ));
    }
    check_dim(p.dim(), spec.direction.len())?;
    let y0 = to_dual(phi, &spec.start)?.y;
    if !p.contains(&spec.start, true)? {
        return Err(Error::Domain(format!("start {:?} is not interior", spec.start)));
    }
    let v = &spec.direction;
    let active = support_face(p, v);
    if active.is_empty() {
        return Ok(GeodesicLimit {
            point: spec.start.clone(),
            face: active,
            trace: Vec::new(),
            error_estimate: 0.0,
        });
    }
    let chart = face_chart(p, &active)?;
    if chart.dim_face() == 0 {
        return Ok(GeodesicLimit {
            point: chart.origin_f64().to_vec(),
            face: active,
            trace: Vec::new(),
            error_estimate: 0.0,
        });
    }

    // v = −Σ aⱼ νⱼ over the active facets; facet j decays like exp(−t aⱼ/(s wⱼ)).
    let n = p.dim();
    let k = active.len();
    let nmat = DMatrix::from_fn(n, k, |i, j| p.normal_f64(active[j])[i]);
    let rhs = nalgebra::DVector::from_iterator(n, v.iter().map(|x| -x));
    let a = (nmat.transpose() * &nmat)
        .try_inverse()
        .map(|m| m * nmat.transpose() * rhs)
        .ok_or_else(|| Error::Numerical { message: "dependent active normals".into(), residual: f64::NAN })?;
    let mut c = f64::INFINITY;
    for (j, &r) in active.iter().enumerate() {
        let weight: f64 = phi
            .log_terms()
            .iter()
            .filter(|t| t.normal.iter().zip(p.normal_f64(r)).all(|(x, y)| (x - y).abs() < 1e-12)
                && (t.offset - p.offset_f64(r)).abs() < 1e-12 * (1.0 + t.offset.abs()))
            .map(|t| t.weight)
            .sum();
        let denom = phi.scale() * weight;
        if !(denom > 0.0) || !(a[j] > 0.0) {
            return Err(Error::Numerical {
                message: format!("no decay rate for facet {r} on the limit face"),
                residual: f64::NAN,
            });
        }
        c = c.min(a[j] / denom);
    }

    let dt = std::f64::consts::LN_2 / c;
    let mut trace = Vec::new();
    let mut warm = spec.start.clone();
    let mut j = 0usize;
    loop {
        j += 1;
        let t = j as f64 * dt;
        let y = linalg::add_scaled(&y0, t, v);
        let (x, _) = solve_dual(phi, p, &y, Some(&warm), Accuracy::Relaxed)?;
        let depth = active.iter().map(|&r| p.facet_value_unchecked(r, &x)).fold(0.0, f64::max);
        warm = x.clone();
        trace.push(TracePoint { t, x });
        if depth < 1e-9 || j >= 80 {
            break;
        }
    }

    // Richardson table over the tail, ratio q = ½ per step.
    let tail: Vec<&Vec<f64>> = trace.iter().rev().take(6).rev().map(|tp| &tp.x).collect();
    let mut table: Vec<Vec<f64>> = tail.iter().map(|x| (*x).clone()).collect();
    let mut best = table.last().unwrap().clone();
    let mut err = f64::INFINITY;
    let mut level = 1;
    while table.len() >= 2 {
        let factor = 0.5f64.powi(level);
        let next: Vec<Vec<f64>> = table
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (b - factor * a) / (1.0 - factor)).collect())
            .collect();
        let e = linalg::norm_inf(&sub(next.last().unwrap(), table.last().unwrap()));
        if e < err {
            err = e;
            best = next.last().unwrap().clone();
        } else {
            break;
        }
        table = next;
        level += 1;
    }
    if err > LIMIT_TOL {
        return Err(Error::Numerical {
            message: format!(
                "dual geodesic limit did not settle; trace: {:?}",
                trace.iter().map(|tp| (tp.t, tp.x.clone())).collect::<Vec<_>>()
            ),
            residual: err,
        });
    }
    let point = chart.to_ambient(&chart.to_chart(&best)?)?;
    for r in 0..p.num_facets() {
        let value = p.facet_value_unchecked(r, &point);
        let on = active.contains(&r);
        if (on && value.abs() >= FACE_TOL) || (!on && value <= FACE_TOL) {
            return Err(Error::Numerical {
                message: format!("limit point misclassified at facet {r} (value {value:e})"),
                residual: value.abs(),
            });
        }
    }
    Ok(GeodesicLimit { point, face: active, trace, error_estimate: err })
}
