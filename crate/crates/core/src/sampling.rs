//! Seeded random points for property checks and batch verification.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::exact;
use crate::face::FaceChart;
use crate::polytope::Polytope;

pub type SampleRng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> SampleRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn exp1(rng: &mut SampleRng) -> f64 {
    // 1 − U lies in (0, 1]
    -(1.0 - rng.gen::<f64>()).ln()
}

fn combine(points: &[Vec<f64>], rays: &[Vec<f64>], dim: usize, rng: &mut SampleRng) -> Vec<f64> {
    let w: Vec<f64> = points.iter().map(|_| exp1(rng)).collect();
    let total: f64 = w.iter().sum();
    let mut x = vec![0.0; dim];
    for (wi, p) in w.iter().zip(points) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += wi / total * pi;
        }
    }
    for d in rays {
        let s = exp1(rng);
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += s * di;
        }
    }
    x
}

/// A random interior point: vertices mixed with Exp(1) weights (Dirichlet),
/// plus Exp(1) multiples of the extreme rays.
pub fn interior_point(p: &Polytope, rng: &mut SampleRng) -> Vec<f64> {
    let verts: Vec<Vec<f64>> = p.vertices().iter().map(|v| v.coords().to_vec()).collect();
    let rays: Vec<Vec<f64>> = p.rays().iter().map(|d| d.iter().map(|&x| x as f64).collect()).collect();
    loop {
        let x = combine(&verts, &rays, p.dim(), rng);
        if p.min_facet_value(&x) > 1e-9 {
            return x;
        }
    }
}

/// A random point of the relative interior of the face, placed exactly on
/// the chart's affine hull.
pub fn face_point(p: &Polytope, chart: &FaceChart, rng: &mut SampleRng) -> Vec<f64> {
    let verts: Vec<Vec<f64>> = chart.face_vertices().iter().map(|v| exact::to_f64_vec(v)).collect();
    let rays: Vec<Vec<f64>> =
        chart.face_rays().iter().map(|d| d.iter().map(|&x| x as f64).collect()).collect();
    loop {
        let x = combine(&verts, &rays, p.dim(), rng);
        let u = chart.to_chart(&x).expect("dimensions agree");
        let x = chart.to_ambient(&u).expect("dimensions agree");
        let inactive_ok = (0..p.num_facets())
            .filter(|r| !chart.active().contains(r))
            .all(|r| p.facet_value_unchecked(r, &x) > 1e-6);
        if inactive_ok {
            return x;
        }
    }
}
