//! Totally ramified extensions K = Q_p[u]/(E(u)) for an Eisenstein E.

mod element;
mod newton;
mod poly;

pub use element::{k_inv, k_mul, valuation, KElement};
pub use newton::{newton_polygon, NewtonPolygon, Segment};
pub use poly::{residue_reduce, FpPoly, KPoly};

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::padic::{is_prime, vp_factorial, PadicScalar};
use crate::valuation::Valuation;

/// Target precision and the largest divided-power degree a computation uses.
/// The working precision adds a margin of `e * v_p(D!) + 2` digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub target: i64,
    pub max_degree: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            target: 12,
            max_degree: 6,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct FieldData {
    p: u32,
    e: usize,
    /// c_0..c_e, monic.
    eisenstein: Vec<BigRational>,
    policy: PrecisionPolicy,
    margin: i64,
    /// Precision at which the exact constants of E are materialized.
    exact_precision: i64,
    /// c_0..c_{e-1} as p-adics.
    reduction: Vec<PadicScalar>,
    e_prime: Vec<PadicScalar>,
    pi_inverse: Vec<PadicScalar>,
}

/// Handle to a local field descriptor; cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct LocalField(Arc<FieldData>);

impl PartialEq for LocalField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for LocalField {}

impl fmt::Debug for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalField(p={}, E={})", self.p(), self.eisenstein_string())
    }
}

/// Builds K from a prime and the low-to-high coefficients of E.
pub fn field_make(p: u32, coeffs: &[BigRational]) -> Result<LocalField> {
    LocalField::new(p, coeffs, PrecisionPolicy::default())
}

impl LocalField {
    pub fn new(p: u32, coeffs: &[BigRational], policy: PrecisionPolicy) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if coeffs.len() < 2 {
            return Err(Error::NotEisenstein("degree must be at least 1".into()));
        }
        if !coeffs.last().unwrap().is_one() {
            return Err(Error::NotMonic);
        }
        let e = coeffs.len() - 1;
        for (i, c) in coeffs[..e].iter().enumerate() {
            let v = rational_valuation(c, p);
            if i == 0 && v != Some(1) {
                return Err(Error::NotEisenstein(format!(
                    "v_{p}(c_0) = {} but must be 1",
                    v.map_or("inf".to_string(), |v| v.to_string())
                )));
            }
            if let Some(v) = v {
                if v < 1 {
                    return Err(Error::NotEisenstein(format!(
                        "v_{p}(c_{i}) = {v} but must be at least 1"
                    )));
                }
            }
        }
        let margin = e as i64 * vp_factorial(policy.max_degree as u64, p) + 2;
        let working = policy.target + margin;
        let exact_precision = 2 * working + 40;
        let padic = |q: &BigRational| PadicScalar::from_rational(p, q, exact_precision);
        let reduction = coeffs[..e].iter().map(padic).collect();
        let e_prime = (0..e)
            .map(|j| padic(&(&coeffs[j + 1] * BigRational::from_integer(BigInt::from(j + 1)))))
            .collect();
        let minus_c0 = -coeffs[0].clone();
        let pi_inverse = (0..e).map(|j| padic(&(&coeffs[j + 1] / &minus_c0))).collect();
        Ok(LocalField(Arc::new(FieldData {
            p,
            e,
            eisenstein: coeffs.to_vec(),
            policy,
            margin,
            exact_precision,
            reduction,
            e_prime,
            pi_inverse,
        })))
    }

    /// Same E, different precision policy.
    pub fn with_policy(&self, policy: PrecisionPolicy) -> Self {
        LocalField::new(self.p(), &self.0.eisenstein, policy).expect("already validated")
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    /// Ramification index `e = deg E`.
    pub fn e(&self) -> usize {
        self.0.e
    }

    pub fn eisenstein(&self) -> &[BigRational] {
        &self.0.eisenstein
    }

    pub fn policy(&self) -> PrecisionPolicy {
        self.0.policy
    }

    pub fn target_precision(&self) -> i64 {
        self.0.policy.target
    }

    pub fn margin(&self) -> i64 {
        self.0.margin
    }

    /// `N_work = N_target + margin`, in p-adic digits.
    pub fn working_precision(&self) -> i64 {
        self.0.policy.target + self.0.margin
    }

    pub(crate) fn exact_precision(&self) -> i64 {
        self.0.exact_precision
    }

    pub(crate) fn reduction(&self) -> &[PadicScalar] {
        &self.0.reduction
    }

    pub(crate) fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn zero(&self) -> KElement {
        KElement::from_coeffs_unchecked(self.clone(), vec![PadicScalar::exact_zero(self.p()); self.e()])
    }

    pub fn one(&self) -> KElement {
        self.from_int(1)
    }

    /// An integer constant, known to the working precision.
    pub fn from_int(&self, n: impl Into<BigInt>) -> KElement {
        self.from_scalar(PadicScalar::from_int(self.p(), n, self.working_precision()))
    }

    pub fn from_scalar(&self, a: PadicScalar) -> KElement {
        let mut coeffs = vec![PadicScalar::exact_zero(self.p()); self.e()];
        coeffs[0] = a;
        KElement::from_coeffs_unchecked(self.clone(), coeffs)
    }

    /// `Σ q_i π^i` from rational π-basis coefficients at working precision.
    /// Lists longer than `e` are reduced modulo E.
    pub fn element(&self, coeffs: &[BigRational]) -> KElement {
        let n = self.working_precision();
        let pads: Vec<PadicScalar> = coeffs
            .iter()
            .map(|q| PadicScalar::from_rational(self.p(), q, n))
            .collect();
        self.element_from_padics(pads)
    }

    /// Builds `Σ a_i π^i`, reducing any powers `π^k` with `k >= e`.
    pub fn element_from_padics(&self, mut coeffs: Vec<PadicScalar>) -> KElement {
        if coeffs.len() <= self.e() {
            coeffs.resize(self.e(), PadicScalar::exact_zero(self.p()));
            return KElement::from_coeffs_unchecked(self.clone(), coeffs);
        }
        let pi = self.pi();
        let mut acc = self.zero();
        let mut pow = self.from_scalar(PadicScalar::one(self.p(), self.exact_precision()));
        for a in coeffs {
            acc = &acc + &pow.scale(&a);
            pow = &pow * &pi;
        }
        acc
    }

    pub fn pi(&self) -> KElement {
        if self.e() == 1 {
            // π = -c_0
            return self.from_scalar(-&self.0.reduction[0]);
        }
        let mut coeffs = vec![PadicScalar::exact_zero(self.p()); self.e()];
        coeffs[1] = PadicScalar::one(self.p(), self.exact_precision());
        KElement::from_coeffs_unchecked(self.clone(), coeffs)
    }

    pub fn pi_inverse(&self) -> KElement {
        KElement::from_coeffs_unchecked(self.clone(), self.0.pi_inverse.clone())
    }

    /// `E'(π)`, materialized at the field's exact precision.
    pub fn e_prime(&self) -> KElement {
        KElement::from_coeffs_unchecked(self.clone(), self.0.e_prime.clone())
    }

    /// `E(0) = c_0`.
    pub fn e_zero(&self) -> PadicScalar {
        self.0.reduction[0].clone()
    }

    /// `v_π(E'(π))`; equals `e - 1` exactly in the tame case.
    pub fn e_prime_valuation(&self) -> i64 {
        match self.e_prime().valuation() {
            Valuation::Finite(v) => v.to_integer(),
            other => unreachable!("E'(π) is a nonzero constant, got {other}"),
        }
    }

    /// Evaluates E at an element of K by Horner's rule.
    pub fn eval_eisenstein(&self, x: &KElement) -> KElement {
        let n = self.exact_precision();
        let mut acc = self.zero();
        for c in self.0.eisenstein.iter().rev() {
            acc = &(&acc * x) + &self.from_scalar(PadicScalar::from_rational(self.p(), c, n));
        }
        acc
    }

    pub fn eisenstein_string(&self) -> String {
        let parts: Vec<String> = self.0.eisenstein.iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(", "))
    }
}

fn rational_valuation(q: &BigRational, p: u32) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let (vn, _) = crate::padic::split_p(q.numer(), p);
    let (vd, _) = crate::padic::split_p(q.denom(), p);
    Some(vn - vd)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn qs(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&n| q(n)).collect()
    }

    #[test]
    fn degree_one_field() {
        let k = field_make(5, &qs(&[-5, 1])).unwrap();
        assert_eq!(k.e(), 1);
        assert_eq!(k.e_prime(), k.from_scalar(PadicScalar::one(5, k.exact_precision())));
        assert_eq!(k.e_zero(), PadicScalar::from_int(5, -5, k.exact_precision()));
        assert_eq!(k.pi().valuation(), Valuation::finite(1));
    }

    #[test]
    fn quadratic_derivative() {
        let k = field_make(3, &qs(&[-3, 0, 1])).unwrap();
        assert_eq!(k.e(), 2);
        assert_eq!(k.e_prime(), k.pi().mul_int(&BigInt::from(2)));
        assert_eq!(k.e_prime_valuation(), 1);
        assert_eq!(k.e_zero().to_symmetric_integer(), Some(BigInt::from(-3)));
    }

    #[test]
    fn eisenstein_validation() {
        assert!(field_make(5, &qs(&[10, -5, 1])).is_ok());
        assert!(matches!(
            field_make(5, &qs(&[5, -1, 1])),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(field_make(5, &qs(&[25, 1])), Err(Error::NotEisenstein(_))));
        assert!(matches!(field_make(5, &qs(&[1, 1])), Err(Error::NotEisenstein(_))));
        assert_eq!(field_make(5, &qs(&[-5, 2])), Err(Error::NotMonic));
        assert_eq!(field_make(6, &qs(&[-6, 1])), Err(Error::InvalidPrime(6)));
    }

    #[test]
    fn pi_is_a_root_of_e() {
        for (p, c) in [(3u32, vec![-3, 0, 1]), (2, vec![2, 4, -6, 1]), (5, vec![10, -5, 1])] {
            let k = field_make(p, &qs(&c)).unwrap();
            assert!(k.eval_eisenstein(&k.pi()).is_zero_at_precision());
            let one = &k.pi() * &k.pi_inverse();
            assert!((&one - &k.one()).is_zero_at_precision());
        }
    }

    #[test]
    fn margin_follows_policy() {
        let k = LocalField::new(2, &qs(&[2, 0, 0, 1]), PrecisionPolicy { target: 12, max_degree: 8 }).unwrap();
        assert_eq!(k.margin(), 3 * 7 + 2);
        assert_eq!(k.working_precision(), 35);
    }
}
