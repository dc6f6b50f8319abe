//! Elements of Q_p known to a capped absolute precision.
//!
//! A nonzero value is stored as `p^valuation * unit + O(p^precision)` with
//! `unit` reduced into `[0, p^(precision - valuation))` and prime to `p`.
//! Two further states exist: the exact zero, and a value whose tracked digits
//! all vanished ("zero at precision"), stored with `unit = 0` and
//! `valuation = precision`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::valuation::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Repr {
    Exact,
    Approx {
        valuation: i64,
        unit: BigUint,
        precision: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u32,
    repr: Repr,
}

pub(crate) fn pow_p(p: u32, k: i64) -> BigUint {
    debug_assert!(k >= 0);
    num_traits::pow(BigUint::from(p), k as usize)
}

/// `v_p(n)` for a nonzero integer, together with the prime-to-p cofactor.
pub(crate) fn split_p(n: &BigInt, p: u32) -> (i64, BigInt) {
    debug_assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

/// `v_p(n!)` by Legendre's formula.
pub fn vp_factorial(n: u64, p: u32) -> i64 {
    let mut v = 0;
    let mut q = n;
    while q > 0 {
        q /= p as u64;
        v += q as i64;
    }
    v
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn inverse_mod(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    let g = a.extended_gcd(&m);
    debug_assert!(g.gcd.is_one());
    g.x.mod_floor(&m).to_biguint().expect("mod_floor is non-negative")
}

fn reduce_signed(x: &BigInt, modulus: &BigUint) -> BigUint {
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    x.mod_floor(&m).to_biguint().expect("mod_floor is non-negative")
}

impl PadicScalar {
    pub fn exact_zero(p: u32) -> Self {
        PadicScalar { p, repr: Repr::Exact }
    }

    /// The value known to vanish modulo `p^precision`.
    pub fn zero_at(p: u32, precision: i64) -> Self {
        PadicScalar {
            p,
            repr: Repr::Approx {
                valuation: precision,
                unit: BigUint::zero(),
                precision,
            },
        }
    }

    /// Normalizes `p^valuation * x + O(p^precision)`.
    fn normalize(p: u32, valuation: i64, x: BigInt, precision: i64) -> Self {
        if valuation >= precision || x.is_zero() {
            return Self::zero_at(p, precision);
        }
        let (k, rest) = split_p(&x, p);
        let v = valuation + k;
        if v >= precision {
            return Self::zero_at(p, precision);
        }
        let unit = reduce_signed(&rest, &pow_p(p, precision - v));
        PadicScalar {
            p,
            repr: Repr::Approx {
                valuation: v,
                unit,
                precision,
            },
        }
    }

    pub fn from_int(p: u32, n: impl Into<BigInt>, precision: i64) -> Self {
        let n = n.into();
        if n.is_zero() {
            return Self::exact_zero(p);
        }
        Self::normalize(p, 0, n, precision)
    }

    pub fn one(p: u32, precision: i64) -> Self {
        Self::from_int(p, 1, precision)
    }

    /// Rational `n/d` with denominator coprime handling by valuation shift.
    /// A literal zero yields the exact zero.
    pub fn from_rational(p: u32, q: &BigRational, precision: i64) -> Self {
        if q.is_zero() {
            return Self::exact_zero(p);
        }
        let (vn, un) = split_p(q.numer(), p);
        let (vd, ud) = split_p(q.denom(), p);
        let v = vn - vd;
        if v >= precision {
            return Self::zero_at(p, precision);
        }
        let modulus = pow_p(p, precision - v);
        let num = reduce_signed(&un, &modulus);
        let den = reduce_signed(&ud, &modulus);
        let unit = (num * inverse_mod(&den, &modulus)) % &modulus;
        PadicScalar {
            p,
            repr: Repr::Approx {
                valuation: v,
                unit,
                precision,
            },
        }
    }

    /// `unit * p^valuation + O(p^precision)` for an integer unit part.
    pub fn from_parts(p: u32, unit: impl Into<BigInt>, valuation: i64, precision: i64) -> Self {
        let unit = unit.into();
        if unit.is_zero() {
            return Self::zero_at(p, precision);
        }
        Self::normalize(p, valuation, unit, precision)
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Exact)
    }

    /// All tracked digits are zero (true for the exact zero as well).
    pub fn is_zero_at_precision(&self) -> bool {
        match &self.repr {
            Repr::Exact => true,
            Repr::Approx { unit, .. } => unit.is_zero(),
        }
    }

    /// Absolute precision `N`; `None` for the exact zero.
    pub fn precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Exact => None,
            Repr::Approx { precision, .. } => Some(*precision),
        }
    }

    /// `precision - valuation` for nonzero values.
    pub fn relative_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Approx {
                valuation,
                unit,
                precision,
            } if !unit.is_zero() => Some(precision - valuation),
            _ => None,
        }
    }

    pub fn valuation(&self) -> Valuation {
        match &self.repr {
            Repr::Exact => Valuation::Infinite,
            Repr::Approx {
                valuation, unit, ..
            } => {
                if unit.is_zero() {
                    Valuation::at_least(*valuation)
                } else {
                    Valuation::finite(*valuation)
                }
            }
        }
    }

    /// Valuation of a value known to be nonzero.
    pub fn valuation_i64(&self) -> Option<i64> {
        match &self.repr {
            Repr::Approx {
                valuation, unit, ..
            } if !unit.is_zero() => Some(*valuation),
            _ => None,
        }
    }

    /// Unit part, reduced modulo `p^(precision - valuation)`.
    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Approx { unit, .. } if !unit.is_zero() => Some(unit),
            _ => None,
        }
    }

    fn check_prime(&self, other: &Self) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::PrimeMismatch(self.p, other.p))
        }
    }

    /// `(valuation lower bound, precision)` of a non-exact value.
    fn approx_view(&self) -> Option<(i64, &BigUint, i64)> {
        match &self.repr {
            Repr::Exact => None,
            Repr::Approx {
                valuation,
                unit,
                precision,
            } => Some((*valuation, unit, *precision)),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let (Some((va, ua, na)), Some((vb, ub, nb))) = (self.approx_view(), other.approx_view())
        else {
            return Ok(if self.is_exact_zero() {
                other.clone()
            } else {
                self.clone()
            });
        };
        let n = na.min(nb);
        let v = va.min(vb);
        if v >= n {
            return Ok(Self::zero_at(self.p, n));
        }
        let p = self.p;
        let lift = |u: &BigUint, vu: i64| -> BigInt {
            if u.is_zero() || vu >= n {
                BigInt::zero()
            } else {
                BigInt::from_biguint(Sign::Plus, u * pow_p(p, vu - v))
            }
        };
        let x = lift(ua, va) + lift(ub, vb);
        Ok(Self::normalize(p, v, x, n))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        let (Some((va, ua, na)), Some((vb, ub, nb))) = (self.approx_view(), other.approx_view())
        else {
            return Ok(Self::exact_zero(self.p));
        };
        let n = (na + vb).min(nb + va);
        if ua.is_zero() || ub.is_zero() {
            return Ok(Self::zero_at(self.p, n));
        }
        let v = va + vb;
        let modulus = pow_p(self.p, n - v);
        Ok(PadicScalar {
            p: self.p,
            repr: Repr::Approx {
                valuation: v,
                unit: (ua * ub) % modulus,
                precision: n,
            },
        })
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Approx {
                valuation,
                unit,
                precision,
            } if !unit.is_zero() => {
                let r = precision - valuation;
                let unit = inverse_mod(unit, &pow_p(self.p, r));
                Ok(PadicScalar {
                    p: self.p,
                    repr: Repr::Approx {
                        valuation: -valuation,
                        unit,
                        precision: r - valuation,
                    },
                })
            }
            _ => Err(Error::ZeroDivisor),
        }
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.try_mul(&other.inv()?)
    }

    fn neg_ref(&self) -> Self {
        match &self.repr {
            Repr::Approx {
                valuation,
                unit,
                precision,
            } if !unit.is_zero() => {
                let modulus = pow_p(self.p, precision - valuation);
                PadicScalar {
                    p: self.p,
                    repr: Repr::Approx {
                        valuation: *valuation,
                        unit: modulus - unit,
                        precision: *precision,
                    },
                }
            }
            _ => self.clone(),
        }
    }

    /// Multiplication by an exact integer; gains `v_p(k)` digits of absolute precision.
    pub fn mul_int(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::exact_zero(self.p);
        }
        let Some((v, u, n)) = self.approx_view() else {
            return self.clone();
        };
        let (vk, rest) = split_p(k, self.p);
        if u.is_zero() {
            return Self::zero_at(self.p, n + vk);
        }
        let x = BigInt::from_biguint(Sign::Plus, u.clone()) * rest;
        Self::normalize(self.p, v + vk, x, n + vk)
    }

    /// Division by an exact nonzero integer; costs `v_p(k)` digits.
    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero(), "division by the integer zero");
        let Some((v, u, n)) = self.approx_view() else {
            return self.clone();
        };
        let (vk, rest) = split_p(k, self.p);
        if u.is_zero() {
            return Self::zero_at(self.p, n - vk);
        }
        let r = n - v;
        let modulus = pow_p(self.p, r);
        let rest = reduce_signed(&rest, &modulus);
        PadicScalar {
            p: self.p,
            repr: Repr::Approx {
                valuation: v - vk,
                unit: (u * inverse_mod(&rest, &modulus)) % modulus,
                precision: n - vk,
            },
        }
    }

    /// Forgets digits beyond `p^precision`. The exact zero becomes zero at that precision.
    pub fn cap(&self, precision: i64) -> Self {
        match &self.repr {
            Repr::Exact => Self::zero_at(self.p, precision),
            Repr::Approx {
                valuation,
                unit,
                precision: n,
            } => {
                if *n <= precision {
                    return self.clone();
                }
                if unit.is_zero() || *valuation >= precision {
                    return Self::zero_at(self.p, precision);
                }
                let modulus = pow_p(self.p, precision - valuation);
                PadicScalar {
                    p: self.p,
                    repr: Repr::Approx {
                        valuation: *valuation,
                        unit: unit % modulus,
                        precision,
                    },
                }
            }
        }
    }

    /// Residue in F_p of an integral value; `None` when the value is not
    /// integral or its first digit is not tracked.
    pub fn residue(&self) -> Option<u32> {
        match &self.repr {
            Repr::Exact => Some(0),
            Repr::Approx {
                valuation,
                unit,
                precision,
            } => {
                if unit.is_zero() {
                    (*precision >= 1).then_some(0)
                } else if *valuation < 0 {
                    None
                } else if *valuation > 0 {
                    Some(0)
                } else {
                    (unit % self.p).to_u32()
                }
            }
        }
    }

    /// A rational representative `p^v * unit` of the tracked value
    /// (non-negative unit digits).
    pub fn to_rational(&self) -> BigRational {
        match &self.repr {
            Repr::Approx {
                valuation, unit, ..
            } if !unit.is_zero() => {
                let u = BigInt::from_biguint(Sign::Plus, unit.clone());
                let pk = BigInt::from_biguint(Sign::Plus, pow_p(self.p, valuation.abs()));
                if *valuation >= 0 {
                    BigRational::from_integer(u * pk)
                } else {
                    BigRational::new(u, pk)
                }
            }
            _ => BigRational::zero(),
        }
    }

    /// Representative in the symmetric range around zero, when integral.
    pub fn to_symmetric_integer(&self) -> Option<BigInt> {
        match &self.repr {
            Repr::Exact => Some(BigInt::zero()),
            Repr::Approx {
                valuation,
                unit,
                precision,
            } => {
                if unit.is_zero() {
                    return Some(BigInt::zero());
                }
                if *valuation < 0 {
                    return None;
                }
                let m = BigInt::from_biguint(Sign::Plus, pow_p(self.p, *precision));
                let x = BigInt::from_biguint(Sign::Plus, unit * pow_p(self.p, *valuation));
                let half: BigInt = &m / 2;
                Some(if x > half { x - m } else { x })
            }
        }
    }

    /// Base-p digits `(exponent, digit)` of the tracked value, nonzero only.
    pub fn digits(&self) -> Vec<(i64, u32)> {
        let mut out = Vec::new();
        if let Repr::Approx {
            valuation, unit, ..
        } = &self.repr
        {
            let mut u = unit.clone();
            let mut k = *valuation;
            let pb = BigUint::from(self.p);
            while !u.is_zero() {
                let (q, r) = u.div_rem(&pb);
                let d = r.to_u32().unwrap();
                if d != 0 {
                    out.push((k, d));
                }
                u = q;
                k += 1;
            }
        }
        out
    }
}

impl fmt::Display for PadicScalar {
    /// `d0 + d1*p + ... + O(p^N)`, with `p` written numerically.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.p;
        let Some(n) = self.precision() else {
            return write!(f, "0");
        };
        let mut terms: Vec<String> = self
            .digits()
            .into_iter()
            .map(|(k, d)| match k {
                0 => format!("{d}"),
                1 if d == 1 => format!("{p}"),
                1 => format!("{d}*{p}"),
                _ if d == 1 => format!("{p}^{k}"),
                _ => format!("{d}*{p}^{k}"),
            })
            .collect();
        terms.push(format!("O({p}^{n})"));
        write!(f, "{}", terms.join(" + "))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl $tr<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            /// Panics on prime mismatch; use the `try_` form for fallible input.
            fn $m(self, rhs: &PadicScalar) -> PadicScalar {
                self.$call(rhs).expect("p-adic operands over different primes")
            }
        }
        impl $tr for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_ref()
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        self.neg_ref()
    }
}

/// Sum of two scalars over the same prime.
pub fn padic_add(a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
    a.try_add(b)
}

pub fn padic_mul(a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
    a.try_mul(b)
}

pub fn padic_inv(a: &PadicScalar) -> Result<PadicScalar> {
    a.inv()
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(p: u32, n: i64, prec: i64) -> PadicScalar {
        PadicScalar::from_int(p, n, prec)
    }

    #[test]
    fn add_carries_into_valuation() {
        let s = &int(5, 7, 3) + &int(5, 3, 3);
        assert_eq!(s.valuation(), Valuation::finite(1));
        assert_eq!(s.unit().unwrap(), &BigUint::from(2u32));
        assert_eq!(s.precision(), Some(3));
    }

    #[test]
    fn add_exact_zero_is_identity() {
        let x = int(5, 17, 4);
        assert_eq!(&x + &PadicScalar::exact_zero(5), x);
    }

    #[test]
    fn add_cancelling_to_zero_at_precision() {
        let s = &int(5, 2, 3) + &int(5, 125 - 2, 3);
        assert!(s.is_zero_at_precision());
        assert!(!s.is_exact_zero());
        assert_eq!(s.valuation(), Valuation::at_least(3));
    }

    #[test]
    fn mul_adds_valuations() {
        let a = PadicScalar::from_parts(5, 2, 1, 6);
        let b = PadicScalar::from_parts(5, 3, 1, 6);
        let c = &a * &b;
        assert_eq!(c.valuation(), Valuation::finite(2));
        assert_eq!(c.unit().unwrap(), &BigUint::from(6u32));
        assert_eq!(c.relative_precision(), Some(5));
        assert_eq!(&a * &int(5, 1, 6), a);
    }

    #[test]
    fn mul_reduces() {
        let c = &int(3, 4, 3) * &int(3, 7, 3);
        // 28 = 1 + 27 ≡ 1 mod 27
        assert_eq!(c, int(3, 1, 3));
        assert_eq!(c.valuation(), Valuation::finite(0));
    }

    #[test]
    fn prime_mismatch_is_an_error() {
        assert_eq!(
            int(3, 1, 4).try_add(&int(5, 1, 4)),
            Err(Error::PrimeMismatch(3, 5))
        );
        assert!(padic_mul(&int(3, 1, 4), &int(5, 1, 4)).is_err());
    }

    #[test]
    fn inverse_of_uniformizer() {
        let inv = PadicScalar::from_parts(5, 1, 1, 8).inv().unwrap();
        assert_eq!(inv.valuation(), Valuation::finite(-1));
        assert_eq!(inv.unit().unwrap(), &BigUint::one());
        assert_eq!(int(5, 1, 8).inv().unwrap(), int(5, 1, 8));
    }

    #[test]
    fn inverse_of_two_mod_5_powers() {
        // 1/2 = 3 + 2*5 + 2*5^2 + ...
        let inv = int(5, 2, 6).inv().unwrap();
        let digits: Vec<u32> = inv.digits().into_iter().map(|(_, d)| d).collect();
        assert_eq!(digits, vec![3, 2, 2, 2, 2, 2]);
        assert!(PadicScalar::zero_at(5, 4).inv().is_err());
        assert!(PadicScalar::exact_zero(5).inv().is_err());
    }

    #[test]
    fn rational_literals() {
        let q = BigRational::new(BigInt::from(1), BigInt::from(10));
        let x = PadicScalar::from_rational(5, &q, 4);
        assert_eq!(x.valuation(), Valuation::finite(-1));
        assert_eq!(x.precision(), Some(4));
        // (1/10 + O(5^4)) * (10 + O(5^6)) is known to O(5^5)
        let back = &x * &int(5, 10, 6);
        assert_eq!(back, int(5, 1, 5));
    }

    #[test]
    fn integer_scaling_tracks_precision() {
        let x = int(3, 2, 5);
        let y = x.mul_int(&BigInt::from(9));
        assert_eq!(y.valuation(), Valuation::finite(2));
        assert_eq!(y.precision(), Some(7));
        assert_eq!(y.div_int(&BigInt::from(9)), x);
        assert!(x.mul_int(&BigInt::zero()).is_exact_zero());
    }

    #[test]
    fn display_digit_expansion() {
        assert_eq!(int(5, 2, 3).inv().unwrap().to_string(), "3 + 2*5 + 2*5^2 + O(5^3)");
        assert_eq!(PadicScalar::zero_at(5, 3).to_string(), "O(5^3)");
        assert_eq!(PadicScalar::from_parts(3, 1, -1, 2).to_string(), "3^-1 + O(3^2)");
    }

    #[test]
    fn cap_and_residue() {
        let x = int(5, 7 + 25, 5);
        assert_eq!(x.cap(1), int(5, 2, 1));
        assert_eq!(x.residue(), Some(2));
        assert_eq!(PadicScalar::from_parts(5, 1, -1, 3).residue(), None);
        assert_eq!(PadicScalar::exact_zero(5).cap(2), PadicScalar::zero_at(5, 2));
        assert_eq!(int(5, -3, 4).to_symmetric_integer(), Some(BigInt::from(-3)));
    }

    #[test]
    fn legendre() {
        assert_eq!(vp_factorial(8, 2), 7);
        assert_eq!(vp_factorial(8, 5), 1);
        assert_eq!(vp_factorial(25, 5), 6);
    }
}
