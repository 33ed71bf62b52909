//! Integer lattice linear algebra: exact determinants, integer kernels,
//! Hermite and Smith normal forms.
//!
//! Everything here works over `BigInt` internally so that reductions never
//! overflow; the public inputs and outputs are `i64` because facet normals
//! are small primitive vectors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

type IntMatrix = Vec<Vec<BigInt>>;

fn to_big(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect()
}

fn to_small(v: &BigInt) -> Result<i64> {
    v.to_i64()
        .ok_or_else(|| Error::InvalidInput(format!("lattice entry {v} does not fit in i64")))
}

/// Greatest common divisor of the entries (0 for the zero vector).
pub fn gcd_of(values: &[i64]) -> i64 {
    values.iter().fold(0i64, |g, &v| g.gcd(&v))
}

pub fn is_primitive(values: &[i64]) -> bool {
    gcd_of(values) == 1
}

/// Exact determinant of a square integer matrix (fraction-free Bareiss).
pub fn determinant(rows: &[Vec<i64>]) -> BigInt {
    let n = rows.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m = to_big(rows);
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Rank over the rationals of an integer matrix.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    hermite_normal_form(&to_big(rows)).len()
}

/// Row-style Hermite normal form of the lattice spanned by `rows`.
///
/// Output rows are the nonzero rows of the echelon form: pivots strictly
/// positive and moving right, entries above each pivot reduced into
/// `[0, pivot)`. Two row sets span the same lattice iff their forms agree.
pub fn hermite_normal_form(rows: &IntMatrix) -> IntMatrix {
    let mut m: IntMatrix = rows.clone();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row >= m.len() {
            break;
        }
        // Euclid on column `col` over the rows below pivot_row.
        loop {
            let candidate = (pivot_row..m.len())
                .filter(|&i| !m[i][col].is_zero())
                .min_by(|&a, &b| m[a][col].abs().cmp(&m[b][col].abs()));
            let Some(p) = candidate else { break };
            m.swap(pivot_row, p);
            let mut done = true;
            for i in pivot_row + 1..m.len() {
                if m[i][col].is_zero() {
                    continue;
                }
                let q = m[i][col].div_floor(&m[pivot_row][col]);
                for j in 0..ncols {
                    let d = &q * &m[pivot_row][j];
                    m[i][j] -= d;
                }
                if !m[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if pivot_row < m.len() && !m[pivot_row][col].is_zero() {
            if m[pivot_row][col].is_negative() {
                for v in m[pivot_row].iter_mut() {
                    *v = -v.clone();
                }
            }
            let pivot = m[pivot_row][col].clone();
            for i in 0..pivot_row {
                let q = m[i][col].div_floor(&pivot);
                if !q.is_zero() {
                    for j in 0..ncols {
                        let d = &q * &m[pivot_row][j];
                        m[i][j] -= d;
                    }
                }
            }
            pivot_row += 1;
        }
    }
    m.truncate(pivot_row);
    m
}

/// Hermite normal form for `i64` data, returned as `i64` rows.
pub fn hermite_normal_form_i64(rows: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    hermite_normal_form(&to_big(rows))
        .iter()
        .map(|r| r.iter().map(to_small).collect())
        .collect()
}

/// Basis of the integer kernel `{v ∈ ℤⁿ : rows·v = 0}`.
///
/// Column operations reduce `rows` to echelon form while a unimodular
/// matrix records them; the trailing columns of that matrix are a basis
/// of the kernel lattice, which is therefore saturated in ℤⁿ. The result
/// is canonicalized by Hermite normal form.
pub fn integer_kernel(rows: &[Vec<i64>], n: usize) -> Result<Vec<Vec<i64>>> {
    let mut a = to_big(rows);
    // u[j] is the j-th column of the unimodular transform, stored as a row.
    let mut u: IntMatrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut next = 0;
    for i in 0..a.len() {
        if next >= n {
            break;
        }
        loop {
            let candidate = (next..n)
                .filter(|&j| !a[i][j].is_zero())
                .min_by(|&x, &y| a[i][x].abs().cmp(&a[i][y].abs()));
            let Some(p) = candidate else { break };
            swap_cols(&mut a, &mut u, next, p);
            let mut done = true;
            for j in next + 1..n {
                if a[i][j].is_zero() {
                    continue;
                }
                let q = a[i][j].div_floor(&a[i][next]);
                sub_col(&mut a, &mut u, j, next, &q);
                if !a[i][j].is_zero() {
                    done = false;
                }
            }
            if done {
                next += 1;
                break;
            }
        }
    }
    let kernel: IntMatrix = u[next..].to_vec();
    let canonical = hermite_normal_form(&kernel);
    canonical
        .iter()
        .map(|r| r.iter().map(to_small).collect())
        .collect()
}

fn swap_cols(a: &mut IntMatrix, u: &mut IntMatrix, x: usize, y: usize) {
    for row in a.iter_mut() {
        row.swap(x, y);
    }
    u.swap(x, y);
}

/// column `target` -= q * column `source`
fn sub_col(a: &mut IntMatrix, u: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    for row in a.iter_mut() {
        let d = q * &row[source];
        row[target] -= d;
    }
    let src = u[source].clone();
    for (t, s) in u[target].iter_mut().zip(src.iter()) {
        *t -= q * s;
    }
}

/// Nonzero elementary divisors (Smith normal form diagonal) of an integer
/// matrix, in divisibility order.
pub fn elementary_divisors(rows: &[Vec<i64>]) -> Vec<BigInt> {
    let mut m = to_big(rows);
    let nrows = m.len();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < nrows.min(ncols) {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..nrows {
            for j in t..ncols {
                if !m[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        let mut clean = true;
        for i in t + 1..nrows {
            let q = m[i][t].div_floor(&m[t][t]);
            if !q.is_zero() {
                for j in t..ncols {
                    let d = &q * &m[t][j];
                    m[i][j] -= d;
                }
            }
            if !m[i][t].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..ncols {
            let q = m[t][j].div_floor(&m[t][t]);
            if !q.is_zero() {
                for i in t..nrows {
                    let d = &q * &m[i][t];
                    m[i][j] -= d;
                }
            }
            if !m[t][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // enforce divisibility of the remaining block
        let pivot = m[t][t].clone();
        let offender = (t + 1..nrows)
            .flat_map(|i| (t + 1..ncols).map(move |j| (i, j)))
            .find(|&(i, j)| !(&m[i][j] % &pivot).is_zero());
        if let Some((i, _)) = offender {
            for j in t..ncols {
                let v = m[i][j].clone();
                m[t][j] += v;
            }
            continue;
        }
        divisors.push(pivot.abs());
        t += 1;
    }
    divisors
}

/// True when the rows extend to a ℤ-basis of ℤⁿ: full row rank and every
/// elementary divisor equal to one.
pub fn extends_to_basis(rows: &[Vec<i64>]) -> bool {
    let divisors = elementary_divisors(rows);
    divisors.len() == rows.len() && divisors.iter().all(|d| d.is_one())
}
