//! Polytopes with zero-sum normals as mixture families on a finite set.
//!
//! When `Σᵣ νᵣ = 0` the normalized facet values `p(r|ξ) = lᵣ(ξ)/Σλ` are a
//! probability vector for every `ξ ∈ P`, so `P°` parametrizes distributions
//! on `N` outcomes. The Guillemin divergence is then a multiple of the
//! Kullback–Leibler divergence: `D = s·(Σλ)·KL`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::exact::{self, Rational};
use crate::polynomial::Polynomial;
use crate::polytope::{validate_delzant, DelzantReport, HalfSpace, Polytope};
use crate::potential::{xlogx, AffineLogTerm, SymplecticPotential};

/// Probabilities down to `-NEGATIVE_TOL` are clamped to zero in [`kl`].
pub const NEGATIVE_TOL: f64 = 1e-12;

/// `p(r|ξ) = α⁽ʳ⁾·ξ + β⁽ʳ⁾`, with `Σα = 0` and `Σβ = 1` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFamily {
    dim: usize,
    alphas: Vec<Vec<Rational>>,
    betas: Vec<Rational>,
    alphas_f64: Vec<Vec<f64>>,
    betas_f64: Vec<f64>,
}

impl MixtureFamily {
    pub fn new(alphas: Vec<Vec<Rational>>, betas: Vec<Rational>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidInput("a mixture family needs at least one outcome".into()));
        }
        if alphas.len() != betas.len() {
            return Err(Error::InvalidInput(format!(
                "{} alpha vectors but {} betas",
                alphas.len(),
                betas.len()
            )));
        }
        let dim = alphas[0].len();
        for a in &alphas {
            check_dim(dim, a.len())?;
        }
        let mut sum = vec![Rational::zero(); dim];
        for a in &alphas {
            for (s, x) in sum.iter_mut().zip(a) {
                *s += x;
            }
        }
        if sum.iter().any(|s| !s.is_zero()) {
            return Err(Error::InvalidInput(format!(
                "alphas sum to {:?}, not zero",
                sum.iter().map(exact::format_rational).collect::<Vec<_>>()
            )));
        }
        let total: Rational = betas.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidInput(format!(
                "betas sum to {}, not 1",
                exact::format_rational(&total)
            )));
        }
        Ok(Self {
            dim,
            alphas_f64: alphas.iter().map(|a| exact::to_f64_vec(a)).collect(),
            betas_f64: exact::to_f64_vec(&betas),
            alphas,
            betas,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.betas.len()
    }

    pub fn alphas(&self) -> &[Vec<Rational>] {
        &self.alphas
    }

    pub fn betas(&self) -> &[Rational] {
        &self.betas
    }

    pub fn probabilities(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, xi.len())?;
        Ok(self
            .alphas_f64
            .iter()
            .zip(&self.betas_f64)
            .map(|(a, b)| crate::linalg::dot(a, xi) + b)
            .collect())
    }

    /// `Σᵣ p(r|ξ) log p(r|ξ)` as a potential (unit weights, scale 1).
    pub fn negative_entropy(&self) -> SymplecticPotential {
        let terms = self
            .alphas_f64
            .iter()
            .zip(&self.betas_f64)
            .map(|(a, &b)| AffineLogTerm::new(a.clone(), b))
            .collect();
        SymplecticPotential::new(self.dim, 1.0, terms, Polynomial::zero(self.dim))
            .expect("dimensions agree")
    }

    /// Reorders outcomes; used to compare families up to relabeling.
    pub fn sorted(&self) -> MixtureFamily {
        let mut rows: Vec<(Vec<Rational>, Rational)> =
            self.alphas.iter().cloned().zip(self.betas.iter().cloned()).collect();
        rows.sort();
        let (alphas, betas) = rows.into_iter().unzip();
        MixtureFamily::new(alphas, betas).expect("reordering keeps the invariants")
    }
}

/// True iff the facet normals sum to zero.
pub fn zero_sum_check(p: &Polytope) -> bool {
    (0..p.dim()).all(|i| p.halfspaces().iter().map(|h| h.normal()[i] as i128).sum::<i128>() == 0)
}

/// `Σᵣ λᵣ`.
pub fn offset_sum(p: &Polytope) -> Rational {
    p.halfspaces().iter().map(|h| h.offset().clone()).sum()
}

pub fn to_mixture(p: &Polytope) -> Result<MixtureFamily> {
    if !zero_sum_check(p) {
        return Err(Error::NotTorifiable("facet normals do not sum to zero".into()));
    }
    let total = offset_sum(p);
    if !total.is_positive() {
        return Err(Error::Degenerate(format!(
            "offsets sum to {}, expected a positive total",
            exact::format_rational(&total)
        )));
    }
    let alphas = p
        .halfspaces()
        .iter()
        .map(|h| h.normal().iter().map(|&v| exact::int(v) / &total).collect())
        .collect();
    let betas = p.halfspaces().iter().map(|h| h.offset() / &total).collect();
    MixtureFamily::new(alphas, betas)
}

/// `Σᵣ p(r|ξ) log(p(r|ξ)/p(r|ξ′))` with `0·log(0/q) = 0` and
/// `p·log(p/0) = +∞`. Probabilities below `-1e-12` are a domain error.
pub fn kl(family: &MixtureFamily, xi: &[f64], xi_p: &[f64]) -> Result<f64> {
    let p = family.probabilities(xi)?;
    let q = family.probabilities(xi_p)?;
    let mut sum = 0.0;
    for (r, (&pr, &qr)) in p.iter().zip(&q).enumerate() {
        if pr < -NEGATIVE_TOL || qr < -NEGATIVE_TOL {
            return Err(Error::Domain(format!(
                "outcome {r} has negative probability ({pr:e}, {qr:e})"
            )));
        }
        let (pr, qr) = (pr.max(0.0), qr.max(0.0));
        if pr == 0.0 {
            continue;
        }
        if qr == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += xlogx(pr) - pr * qr.ln();
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Torification {
    pub polytope: Polytope,
    pub delzant: DelzantReport,
    /// A compact torification exists iff the closure of the domain is a
    /// Delzant polytope.
    pub compact_torification: bool,
}

fn lcm_of_denominators(values: &[Rational]) -> BigInt {
    values.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// The closure of `{ξ : p(r|ξ) > 0 ∀r}` as an integral polytope.
///
/// Each constraint `α·ξ + β ≥ 0` is scaled by the least common multiple of
/// all denominators in the alphas and divided by the gcd of the resulting
/// integer normal. Constant constraints are dropped (or make the domain
/// empty), and so are constraints that do not support a facet.
pub fn from_mixture(family: &MixtureFamily) -> Result<Torification> {
    let all: Vec<Rational> = family.alphas.iter().flatten().cloned().collect();
    let lcm = lcm_of_denominators(&all);
    let mut halfspaces: Vec<HalfSpace> = Vec::new();
    for (a, b) in family.alphas.iter().zip(&family.betas) {
        let scaled: Vec<BigInt> = a.iter().map(|x| (x * &lcm).to_integer()).collect();
        let g = scaled.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        if g.is_zero() {
            if b.is_negative() {
                return Err(Error::Degenerate("a constant outcome has negative probability".into()));
            }
            continue;
        }
        let normal = scaled
            .iter()
            .map(|v| (v / &g).to_i64())
            .collect::<Option<Vec<i64>>>()
            .ok_or_else(|| Error::InvalidInput("normal entries exceed 64 bits".into()))?;
        let offset = b * Rational::from_integer(lcm.clone()) / Rational::from_integer(g);
        let h = HalfSpace::new(normal, offset)?;
        if !halfspaces.contains(&h) {
            halfspaces.push(h);
        }
    }
    let rows: Vec<Vec<Rational>> = halfspaces
        .iter()
        .map(|h| h.normal().iter().map(|&v| exact::int(v)).collect())
        .collect();
    if exact::rank(&rows) < family.dim {
        return Err(Error::NoCompactTorification(
            "the positivity domain contains a line".into(),
        ));
    }
    let raw = Polytope::with_detected_bounds(family.dim, halfspaces)?;
    if !raw.is_bounded() {
        return Err(Error::NoCompactTorification(
            "the closure of the positivity domain is unbounded".into(),
        ));
    }
    let polytope = raw.irredundant()?;
    let delzant = validate_delzant(&polytope);
    Ok(Torification { compact_torification: delzant.is_delzant(), polytope, delzant })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RationalRepr {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RationalRepr {
    fn parse(&self) -> Result<Rational> {
        match self {
            RationalRepr::Int(v) => Ok(exact::int(*v)),
            RationalRepr::Float(v) if v.is_finite() => exact::parse_rational(&v.to_string()),
            RationalRepr::Float(v) => Err(Error::Parse(format!("not a finite number: {v}"))),
            RationalRepr::Text(s) => exact::parse_rational(s),
        }
    }
}

/// JSON form `{"alphas": [[..]], "betas": [..]}`; entries are integers or
/// `"p/q"` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    alphas: Vec<Vec<RationalRepr>>,
    betas: Vec<RationalRepr>,
}

impl TryFrom<MixtureSpec> for MixtureFamily {
    type Error = Error;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        let alphas = spec
            .alphas
            .iter()
            .map(|a| a.iter().map(RationalRepr::parse).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let betas = spec.betas.iter().map(RationalRepr::parse).collect::<Result<Vec<_>>>()?;
        MixtureFamily::new(alphas, betas)
    }
}

impl Serialize for MixtureFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let text = |q: &Rational| RationalRepr::Text(exact::format_rational(q));
        MixtureSpec {
            alphas: self.alphas.iter().map(|a| a.iter().map(text).collect()).collect(),
            betas: self.betas.iter().map(text).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixtureFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MixtureFamily::try_from(MixtureSpec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dually_flat::bregman;
    use crate::exact::int;
    use crate::polytope::shapes;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn zero_sum_examples() {
        assert!(zero_sum_check(&shapes::triangle()));
        assert!(zero_sum_check(&shapes::square()));
        assert!(!zero_sum_check(&shapes::trapezoid()));
        assert!(validate_delzant(&shapes::trapezoid()).is_delzant());
    }

    #[test]
    fn categorical_distributions() {
        let m = to_mixture(&shapes::triangle()).unwrap();
        let p = m.probabilities(&[0.2, 0.3]).unwrap();
        assert_eq!(p, vec![0.2, 0.3, 0.5]);

        let m = to_mixture(&shapes::square()).unwrap();
        let p = m.probabilities(&[0.2, 0.3]).unwrap();
        let expected = [0.1, 0.4, 0.15, 0.35];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }

        let m = to_mixture(&shapes::simplex(2, 2)).unwrap();
        let p = m.probabilities(&[0.5, 0.5]).unwrap();
        assert_eq!(p, vec![0.25, 0.25, 0.5]);
        assert!(matches!(to_mixture(&shapes::trapezoid()), Err(Error::NotTorifiable(_))));
    }

    #[test]
    fn kl_values() {
        let t = shapes::triangle();
        let m = to_mixture(&t).unwrap();
        assert_eq!(kl(&m, &[0.2, 0.3], &[0.2, 0.3]).unwrap(), 0.0);
        let d = kl(&m, &[0.25, 0.25], &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((d - 0.058892).abs() < 1e-6);
        let phi = SymplecticPotential::guillemin(&t, 0.5);
        let b = bregman(&phi, &[0.25, 0.25], &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((b - 0.5 * d).abs() < 1e-15);
        assert_eq!(kl(&m, &[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(kl(&m, &[0.5, 0.2], &[0.7, 0.3]).unwrap(), f64::INFINITY);
        assert!(kl(&m, &[0.9, 0.9], &[0.2, 0.2]).is_err());
    }

    #[test]
    fn kl_scales_with_offset_sum() {
        let s = shapes::square();
        let m = to_mixture(&s).unwrap();
        let phi = SymplecticPotential::guillemin(&s, 0.5);
        let (a, b) = ([0.2, 0.7], [0.6, 0.45]);
        let lhs = bregman(&phi, &a, &b).unwrap();
        assert!((lhs - 0.5 * 2.0 * kl(&m, &a, &b).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn family_invariants() {
        assert!(MixtureFamily::new(vec![vec![int(1)], vec![int(0)]], vec![int(0), int(1)]).is_err());
        assert!(MixtureFamily::new(vec![vec![int(1)], vec![int(-1)]], vec![int(0), int(2)]).is_err());
    }

    #[test]
    fn torification_of_categorical_family() {
        let m = to_mixture(&shapes::triangle()).unwrap();
        let t = from_mixture(&m).unwrap();
        assert!(t.compact_torification);
        assert_eq!(to_mixture(&t.polytope).unwrap().sorted(), m.sorted());

        // fractional alphas are cleared: p = (x/2, y/2, (2 − x − y)/2)
        let m = MixtureFamily::new(
            vec![vec![q(1, 2), int(0)], vec![int(0), q(1, 2)], vec![q(-1, 2), q(-1, 2)]],
            vec![int(0), int(0), int(1)],
        )
        .unwrap();
        let t = from_mixture(&m).unwrap();
        assert_eq!(t.polytope, shapes::simplex(2, 2));
    }

    #[test]
    fn non_smooth_closure() {
        // normals (1,0), (0,1), (−2,−1), (1,0) with betas (0, 0, 1, 0)
        let m = MixtureFamily::new(
            vec![
                vec![int(1), int(0)],
                vec![int(0), int(1)],
                vec![int(-2), int(-1)],
                vec![int(1), int(0)],
            ],
            vec![int(0), int(0), int(1), int(0)],
        )
        .unwrap();
        let t = from_mixture(&m).unwrap();
        assert_eq!(t.polytope.num_facets(), 3);
        assert!(!t.compact_torification);
        let f = &t.delzant.failures[0];
        assert_eq!(f.coords, vec![0.5, 0.0]);
        assert_eq!(f.determinant.as_deref(), Some("2"));
    }

    #[test]
    fn unbounded_domain() {
        let m = MixtureFamily::new(
            vec![vec![int(1), int(0)], vec![int(-1), int(0)], vec![int(0), int(0)]],
            vec![int(0), int(1), int(0)],
        )
        .unwrap();
        assert!(matches!(from_mixture(&m), Err(Error::NoCompactTorification(_))));
    }

    #[test]
    fn entropy_hessian_is_scaled_guillemin() {
        let s = shapes::square();
        let m = to_mixture(&s).unwrap();
        let h1 = m.negative_entropy().hessian(&[0.3, 0.8]).unwrap();
        let h2 = SymplecticPotential::guillemin(&s, 1.0).hessian(&[0.3, 0.8]).unwrap() / 2.0;
        assert!((h1 - h2).abs().max() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"alphas": [[1, 0], [0, 1], [-1, -1]], "betas": ["0", 0, "1/1"]}"#;
        let m: MixtureFamily = serde_json::from_str(text).unwrap();
        let back: MixtureFamily = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<MixtureFamily>(r#"{"alphas": [[1]], "betas": ["1/2"]}"#).is_err());
    }
}
