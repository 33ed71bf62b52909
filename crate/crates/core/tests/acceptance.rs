//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any fails.

mod common;

use std::time::Instant;

use delzant_core::boundary::{self, BoundaryPoint};
use delzant_core::dually_flat::{self, bregman, GeodesicSpec};
use delzant_core::face::{face_chart, FaceChart};
use delzant_core::linalg::{self, sub};
use delzant_core::mixture::{self, kl, to_mixture, zero_sum_check};
use delzant_core::polytope::{shapes, validate_delzant, Polytope};
use delzant_core::potential::SymplecticPotential;
use delzant_core::sampling;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn triangle_golden_values() -> Outcome {
    let start = Instant::now();
    let t = shapes::triangle();
    let phi = SymplecticPotential::guillemin(&t, 1.0);
    let half = 0.5f64.ln();
    let y = dually_flat::to_dual(&phi, &[0.25, 0.25]).unwrap().y;
    let e_dual = (y[0] - half).abs().max((y[1] - half).abs());
    let h = phi.hessian(&[0.25, 0.25]).unwrap();
    let e_hess = [(0, 0, 6.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 6.0)]
        .iter()
        .map(|&(i, j, v)| (h[(i, j)] - v).abs())
        .fold(0.0, f64::max);
    let lim = dually_flat::dual_geodesic_limit(&phi, &t, &GeodesicSpec::dual(vec![0.25, 0.25], vec![1.0, 1.0])).unwrap();
    let e_lim = linalg::norm_inf(&sub(&lim.point, &[0.5, 0.5]));
    let chart = face_chart(&t, &[2]).unwrap();
    let foot = boundary::project_to_face(&phi, &t, &chart, &[0.25, 0.25]).unwrap();
    let e_foot_div = (boundary::limit_divergence(&phi, &foot, &[0.25, 0.25]).unwrap() - 2f64.ln()).abs();
    let eta = BoundaryPoint::from_ambient(&t, &chart, &[0.3, 0.7]).unwrap();
    let pyth = boundary::pythagoras_54(&phi, &chart, &eta, &foot, &[0.25, 0.25], 1e-8).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = e_dual <= 1e-12
        && e_hess <= 1e-12
        && e_lim <= 1e-8
        && lim.face == vec![2]
        && e_foot_div <= 1e-8
        && pyth.pass
        && elapsed < 1.0;
    check(
        pass,
        format!(
            "dual {e_dual:.1e}, hessian {e_hess:.1e}, limit {e_lim:.1e}, limit divergence {e_foot_div:.1e}, pythagoras {:.1e}, {elapsed:.3}s",
            pyth.residual.abs()
        ),
    )
}

fn half_line_and_product() -> Outcome {
    let h = SymplecticPotential::guillemin(&shapes::half_line(), 1.0);
    let e = (bregman(&h, &[1.0], &[2.0]).unwrap() - (1.0 - 2f64.ln())).abs();
    let t = shapes::triangle();
    let phi = SymplecticPotential::guillemin(&t, 1.0);
    let reports = boundary::product_boundary_check(&phi, &t, 100, 62).unwrap();
    let pass = e <= 1e-12 && reports.iter().all(|r| r.pass);
    let parts: Vec<String> = reports.iter().map(|r| format!("{} {:.1e}", r.check, r.residual)).collect();
    check(pass, format!("D(1‖2) error {e:.1e}; {}", parts.join(", ")))
}

fn facets(p: &Polytope) -> Vec<FaceChart> {
    (0..p.num_facets()).map(|r| face_chart(p, &[r]).unwrap()).collect()
}

fn continuity() -> Outcome {
    let start = Instant::now();
    let mut rng = sampling::rng(53);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut runs = 0;
    for p in [shapes::triangle(), shapes::square()] {
        let phi = SymplecticPotential::guillemin(&p, 0.5);
        for chart in facets(&p) {
            for _ in 0..20 {
                let a = sampling::face_point(&p, &chart, &mut rng);
                let b = sampling::face_point(&p, &chart, &mut rng);
                let eta = BoundaryPoint::from_ambient(&p, &chart, &a).unwrap();
                let etap = BoundaryPoint::from_ambient(&p, &chart, &b).unwrap();
                let rep = boundary::continuity_check(&phi, &p, &chart, &eta, &etap, 8).unwrap();
                worst = worst.max(rep.residual);
                failures += usize::from(!rep.pass);
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        failures == 0 && elapsed < 10.0,
        format!("{runs} pairs, worst gap at 1e-8 {worst:.1e}, {failures} failures, {elapsed:.2}s"),
    )
}

fn foot_pythagoras() -> Outcome {
    let mut rng = sampling::rng(54);
    let mut worst = 0.0f64;
    let mut weakest_control = f64::INFINITY;
    let mut count = 0;
    for (_, p) in common::zoo() {
        let phi = SymplecticPotential::guillemin(&p, 0.5);
        let charts = facets(&p);
        for i in 0..50 {
            let chart = &charts[i % charts.len()];
            let xi = sampling::interior_point(&p, &mut rng);
            let foot = boundary::project_to_face(&phi, &p, chart, &xi).unwrap();
            let eta = sampling::face_point(&p, chart, &mut rng);
            let eta = BoundaryPoint::from_ambient(&p, chart, &eta).unwrap();
            let rep = boundary::pythagoras_54(&phi, chart, &eta, &foot, &xi, 1e-8).unwrap();
            worst = worst.max(rep.residual.abs());
            count += 1;

            // negative control: move the foot by 0.05 along the face, and
            // take η at chart distance ≥ 0.1 along the same direction
            let k = chart.dim_face();
            let mut d: Vec<f64> = (0..k).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter_mut().for_each(|v| *v /= norm);
            let u = foot.chart_coords();
            let moved = |c: f64| -> Option<BoundaryPoint> {
                BoundaryPoint::from_chart(&p, chart, &linalg::add_scaled(u, c, &d)).ok()
            };
            let control = [(0.05, 0.2), (0.05, -0.2), (-0.05, -0.2), (-0.05, 0.2), (0.05, 0.1), (-0.05, -0.1)]
                .iter()
                .find_map(|&(shift, far)| Some((moved(shift)?, moved(shift + far)?)));
            if let Some((wrong, eta)) = control {
                let rep = boundary::pythagoras_54(&phi, chart, &eta, &wrong, &xi, 1e-8).unwrap();
                weakest_control = weakest_control.min(rep.residual.abs());
            }
        }
    }
    check(
        worst <= 1e-8 && weakest_control >= 1e-4,
        format!("{count} draws, worst residual {worst:.1e}; smallest negative-control residual {weakest_control:.1e}"),
    )
}

fn interior_pythagoras() -> Outcome {
    let mut rng = sampling::rng(55);
    let mut identity_gap = 0.0f64;
    let mut stated_orientation_gap = 0.0f64;
    let mut orthogonal_worst = 0.0f64;
    let mut opposite_max = 0.0f64;
    let mut n = 0;
    for (_, p) in common::zoo() {
        let phi = SymplecticPotential::guillemin(&p, 0.5);
        let charts = facets(&p);
        for i in 0..200 {
            let chart = &charts[i % charts.len()];
            let eta = sampling::face_point(&p, chart, &mut rng);
            let eta = BoundaryPoint::from_ambient(&p, chart, &eta).unwrap();
            let xi = sampling::interior_point(&p, &mut rng);
            let xip = sampling::interior_point(&p, &mut rng);
            let rep = boundary::pythagoras_55(&phi, &eta, &xi, &xip, 1e-9).unwrap();
            let pairing = rep.details["perp_value"].as_f64().unwrap();
            identity_gap = identity_gap.max((rep.residual - pairing).abs());
            // the opposite orientation (η − ξ)·(y(ξ) − y(ξ′)) equals −residual
            let opposite = linalg::dot(&sub(eta.ambient(), &xi), &sub(&phi.grad(&xi).unwrap(), &phi.grad(&xip).unwrap()));
            stated_orientation_gap = stated_orientation_gap.max((rep.residual + opposite).abs());
            opposite_max = opposite_max.max((rep.residual - opposite).abs());
            n += 1;

            // y(ξ′) = y(ξ) + w with w ⟂ (η − ξ)
            let d = sub(eta.ambient(), &xi);
            let mut w: Vec<f64> = (0..p.dim()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let proj = linalg::dot(&w, &d) / linalg::dot(&d, &d);
            w = linalg::add_scaled(&w, -proj, &d);
            let y = linalg::add_scaled(&phi.grad(&xi).unwrap(), 1.0, &w);
            let xip = dually_flat::from_dual(&phi, &p, &y).unwrap().x;
            let rep = boundary::pythagoras_55(&phi, &eta, &xi, &xip, 1e-9).unwrap();
            orthogonal_worst = orthogonal_worst.max(rep.residual.abs());
        }
    }
    check(
        identity_gap <= 1e-9 && stated_orientation_gap <= 1e-9 && orthogonal_worst <= 1e-9,
        format!(
            "{n} triples: |residual − (η−ξ)·(y(ξ′)−y(ξ))| ≤ {identity_gap:.1e}; against (η−ξ)·(y(ξ)−y(ξ′)) the residual is sign-flipped (|sum| ≤ {stated_orientation_gap:.1e}, |difference| up to {opposite_max:.1e}); orthogonal triples {orthogonal_worst:.1e}"
        ),
    )
}

fn mixture_families() -> Outcome {
    let mut rng = sampling::rng(56);
    let mut sum_err = 0.0f64;
    let mut kl_err = 0.0f64;
    for p in [shapes::triangle(), shapes::square()] {
        let m = to_mixture(&p).unwrap();
        let lam = delzant_core::exact::to_f64(&mixture::offset_sum(&p));
        for s in [0.5, 1.0] {
            let phi = SymplecticPotential::guillemin(&p, s);
            for _ in 0..100 {
                let a = sampling::interior_point(&p, &mut rng);
                let b = sampling::interior_point(&p, &mut rng);
                let total: f64 = m.probabilities(&a).unwrap().iter().sum();
                sum_err = sum_err.max((total - 1.0).abs());
                let d = bregman(&phi, &a, &b).unwrap();
                kl_err = kl_err.max((d - s * lam * kl(&m, &a, &b).unwrap()).abs());
            }
        }
    }
    let trapezoid = shapes::trapezoid();
    let trap_ok = validate_delzant(&trapezoid).is_delzant() && !zero_sum_check(&trapezoid);
    check(
        sum_err <= 1e-14 && kl_err <= 1e-12 && trap_ok,
        format!("Σp error {sum_err:.1e}, D − s·Σλ·KL {kl_err:.1e}, trapezoid Delzant and not zero-sum: {trap_ok}"),
    )
}

fn numerical_suite() -> Outcome {
    let mut rng = sampling::rng(57);
    let mut roundtrip = 0.0f64;
    let mut grad = 0.0f64;
    let mut hess = 0.0f64;
    let mut expanded = 0.0f64;
    let mut cases: Vec<(Polytope, SymplecticPotential)> = common::zoo()
        .into_iter()
        .map(|(_, p)| {
            let phi = SymplecticPotential::guillemin(&p, 0.5);
            (p, phi)
        })
        .collect();
    cases.push((shapes::triangle(), common::corrected_triangle()));
    for (p, phi) in &cases {
        for _ in 0..100 {
            let x = sampling::interior_point(p, &mut rng);
            let y = phi.grad(&x).unwrap();
            let back = dually_flat::from_dual(phi, p, &y).unwrap().x;
            roundtrip = roundtrip.max(linalg::norm_inf(&sub(&back, &x)));

            let fd = common::central_gradient(|z| phi.eval(z).unwrap(), &x, 1e-6);
            for (a, b) in y.iter().zip(&fd) {
                grad = grad.max(common::rel_err(*a, *b));
            }
            let h = phi.hessian(&x).unwrap();
            for i in 0..p.dim() {
                let col = common::central_gradient(|z| phi.grad(z).unwrap()[i], &x, 1e-6);
                for (j, c) in col.iter().enumerate() {
                    hess = hess.max(common::rel_err(h[(i, j)], *c));
                }
            }
            let xp = sampling::interior_point(p, &mut rng);
            let d = bregman(phi, &x, &xp).unwrap();
            let e = dually_flat::bregman_expanded(phi, p, &x, &xp).unwrap();
            expanded = expanded.max((d - e).abs());
        }
    }
    check(
        roundtrip <= 1e-9 && grad <= 1e-5 && hess <= 1e-4 && expanded <= 1e-10,
        format!("roundtrip {roundtrip:.1e}, gradient {grad:.1e}, hessian {hess:.1e}, direct vs expanded {expanded:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 triangle golden values", triangle_golden_values),
        ("2 half-line and product", half_line_and_product),
        ("3 boundary continuity", continuity),
        ("4 pythagoras at the foot", foot_pythagoras),
        ("5 pythagoras with interior point", interior_pythagoras),
        ("6 mixture families", mixture_families),
        ("7 numerical suite", numerical_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {tag} ({})", out.detail);
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
