//! Multivariate real polynomials, used as smooth corrections `f` of a
//! symplectic potential.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// Sparse polynomial keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

fn powi(x: f64, e: u32) -> f64 {
    x.powi(e as i32)
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `xᵢ`.
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn from_monomials(nvars: usize, monomials: &[Monomial]) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for m in monomials {
            check_dim(nvars, m.exponents.len())?;
            p.add_term(m.exponents.clone(), m.coeff);
        }
        Ok(p)
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms
            .iter()
            .map(|(e, &c)| Monomial { exponents: e.clone(), coeff: c })
            .collect()
    }

    fn add_term(&mut self, exponents: Vec<u32>, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| powi(xi, k)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for (e, c) in &self.terms {
            for i in 0..self.nvars {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (&k, &xj)) in e.iter().zip(x).enumerate() {
                    term *= if j == i { powi(xj, k - 1) } else { powi(xj, k) };
                }
                g[i] += term;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.nvars;
        let mut h = DMatrix::zeros(n, n);
        for (e, c) in &self.terms {
            for i in 0..n {
                for j in i..n {
                    let factor = if i == j {
                        e[i] as f64 * e[i].saturating_sub(1) as f64
                    } else {
                        e[i] as f64 * e[j] as f64
                    };
                    if factor == 0.0 {
                        continue;
                    }
                    let mut term = c * factor;
                    for (m, (&k, &xm)) in e.iter().zip(x).enumerate() {
                        let drop = u32::from(m == i) + u32::from(m == j);
                        term *= powi(xm, k - drop);
                    }
                    h[(i, j)] += term;
                    if i != j {
                        h[(j, i)] += term;
                    }
                }
            }
        }
        h
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (e, &c) in &other.terms {
            p.add_term(e.clone(), c);
        }
        p
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut p = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut p = Self::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(Self::constant(self.nvars, 1.0), |acc, _| acc.mul(self))
    }

    /// Composition with the affine map `u ↦ origin + B·u`, where `B` is
    /// `nvars × k`. The result is a polynomial in `k` variables.
    pub fn pullback_affine(&self, origin: &[f64], basis: &DMatrix<f64>) -> Polynomial {
        let k = basis.ncols();
        let coords: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                let mut p = Self::constant(k, origin[i]);
                for j in 0..k {
                    p = p.add(&Self::variable(k, j).scale(basis[(i, j)]));
                }
                p
            })
            .collect();
        let mut out = Self::zero(k);
        for (e, &c) in &self.terms {
            let mut term = Self::constant(k, c);
            for (i, &ei) in e.iter().enumerate() {
                if ei > 0 {
                    term = term.mul(&coords[i].pow(ei));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Re-indexes into `total` variables, placing this polynomial's
    /// variables starting at `offset`.
    pub fn embed(&self, offset: usize, total: usize) -> Polynomial {
        let mut p = Self::zero(total);
        for (e, &c) in &self.terms {
            let mut big = vec![0; total];
            big[offset..offset + self.nvars].copy_from_slice(e);
            p.add_term(big, c);
        }
        p
    }
}
