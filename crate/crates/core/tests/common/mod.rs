#![allow(dead_code)]

use delzant_core::polynomial::{Monomial, Polynomial};
use delzant_core::polytope::{shapes, HalfSpace, Polytope};
use delzant_core::potential::SymplecticPotential;

/// Convex combination of the vertices with the given (positive) weights.
pub fn blend(p: &Polytope, weights: &[f64]) -> Vec<f64> {
    let verts = p.vertices();
    let total: f64 = weights.iter().take(verts.len()).sum();
    let mut x = vec![0.0; p.dim()];
    for (v, w) in verts.iter().zip(weights) {
        for (xi, vi) in x.iter_mut().zip(v.coords()) {
            *xi += w / total * vi;
        }
    }
    x
}

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// `(0,1)` is the only vertex with `det = ±2`.
pub fn non_delzant_triangle() -> Polytope {
    let hs = vec![
        HalfSpace::from_ints(vec![1, 0], 0).unwrap(),
        HalfSpace::from_ints(vec![0, 1], 0).unwrap(),
        HalfSpace::from_ints(vec![-1, -2], 2).unwrap(),
    ];
    Polytope::new(2, hs, true).unwrap()
}

/// Test polytopes with their Guillemin potentials at the standard scale.
pub fn zoo() -> Vec<(&'static str, Polytope)> {
    vec![
        ("triangle", shapes::triangle()),
        ("square", shapes::square()),
        ("trapezoid", shapes::trapezoid()),
        ("simplex3", shapes::simplex(3, 1)),
        ("cube3", shapes::cube(3)),
    ]
}

/// Triangle potential at scale 1 with correction `x₁³/10`.
pub fn corrected_triangle() -> SymplecticPotential {
    let f = Polynomial::from_monomials(2, &[Monomial { exponents: vec![3, 0], coeff: 0.1 }]).unwrap();
    SymplecticPotential::guillemin(&shapes::triangle(), 1.0).with_correction(f).unwrap()
}
