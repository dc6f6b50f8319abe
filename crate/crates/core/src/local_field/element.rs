use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;

use super::LocalField;
use crate::error::{Error, Result};
use crate::padic::PadicScalar;
use crate::valuation::{Valuation, Q};

/// `Σ a_i π^i` with `a_i ∈ Q_p`, `0 <= i < e`.
#[derive(Clone, PartialEq, Eq)]
pub struct KElement {
    field: LocalField,
    coeffs: Vec<PadicScalar>,
}

impl KElement {
    pub(crate) fn from_coeffs_unchecked(field: LocalField, coeffs: Vec<PadicScalar>) -> Self {
        debug_assert_eq!(coeffs.len(), field.e());
        KElement { field, coeffs }
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field.ptr_eq(&other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    fn with_coeffs(&self, coeffs: Vec<PadicScalar>) -> Self {
        KElement {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.iter().all(PadicScalar::is_exact_zero)
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.coeffs.iter().all(PadicScalar::is_zero_at_precision)
    }

    /// π-adic absolute precision `min_i(e·N_i + i)`; `None` for the exact zero.
    pub fn precision_pi(&self) -> Option<i64> {
        let e = self.field.e() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.precision().map(|n| e * n + i as i64))
            .min()
    }

    /// Smallest p-adic absolute precision among the coefficients.
    pub fn precision_p(&self) -> Option<i64> {
        self.coeffs.iter().filter_map(PadicScalar::precision).min()
    }

    /// `v_π(x) = min_i(e·v_p(a_i) + i)`, with `v_π(π) = 1`, `v_π(p) = e`.
    pub fn valuation(&self) -> Valuation {
        let e = self.field.e() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| match a.valuation() {
                Valuation::Finite(v) => Valuation::Finite(v * e + i as i64),
                Valuation::AtLeast(v) => Valuation::AtLeast(v * e + i as i64),
                Valuation::Infinite => Valuation::Infinite,
            })
            .fold(Valuation::Infinite, Valuation::min)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Product reduced modulo E.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let e = self.field.e();
        let p = self.field.p();
        if e == 1 {
            return Ok(self.with_coeffs(vec![&self.coeffs[0] * &other.coeffs[0]]));
        }
        let mut prod = vec![PadicScalar::exact_zero(p); 2 * e - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                prod[i + j] = &prod[i + j] + &(a * b);
            }
        }
        // π^e = -Σ c_j π^j
        let red = self.field.reduction();
        for k in (e..2 * e - 1).rev() {
            let t = std::mem::replace(&mut prod[k], PadicScalar::exact_zero(p));
            if t.is_exact_zero() {
                continue;
            }
            for (j, c) in red.iter().enumerate() {
                if c.is_exact_zero() {
                    continue;
                }
                prod[k - e + j] = &prod[k - e + j] - &(&t * c);
            }
        }
        prod.truncate(e);
        Ok(self.with_coeffs(prod))
    }

    pub fn scale(&self, a: &PadicScalar) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c.mul_int(k)).collect())
    }

    /// Exact division by a nonzero integer; costs `v_p(k)` digits per coefficient.
    pub fn div_int(&self, k: &BigInt) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c.div_int(k)).collect())
    }

    /// Forgets everything beyond `O(π^precision)`.
    pub fn cap_pi(&self, precision: i64) -> Self {
        let e = self.field.e() as i64;
        self.with_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a.cap(div_ceil(precision - i as i64, e)))
                .collect(),
        )
    }

    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.field.from_scalar(PadicScalar::one(
            self.field.p(),
            self.field.exact_precision(),
        ));
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Inverse via `x = a_j π^j (1 + y)` with `v_π(y) > 0` and a Newton
    /// iteration for `1/(1 + y)`.
    pub fn inv(&self) -> Result<Self> {
        let v = match self.valuation() {
            Valuation::Finite(v) => v.to_integer(),
            _ => return Err(Error::ZeroDivisor),
        };
        let field = &self.field;
        let e = field.e() as i64;
        if e == 1 {
            return Ok(self.with_coeffs(vec![self.coeffs[0].inv()?]));
        }
        let precision = self.precision_pi().expect("nonzero element");
        let j = v.rem_euclid(e) as usize;
        let lead_inv = self.coeffs[j].inv()?;
        let z = self.scale(&lead_inv);
        let w = &z * &field.pi_inverse().pow(j as u64);
        let relative = precision - v;
        let two = field.from_scalar(PadicScalar::from_int(
            field.p(),
            2,
            field.exact_precision(),
        ));
        let mut t = field.from_scalar(PadicScalar::one(field.p(), field.exact_precision()));
        let mut reached = 1i64;
        while reached < relative {
            t = &t * &(&two - &(&w * &t));
            reached *= 2;
        }
        let out = &(&t * &field.pi_inverse().pow(j as u64)).scale(&lead_inv);
        Ok(out.cap_pi(precision - 2 * v))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self * &other.inv()?)
    }

    /// Residue in F_p; requires `v_π >= 0` and a tracked first digit.
    pub fn residue(&self) -> Result<u32> {
        if self.valuation().certainly_lt(Q::from_integer(0)) {
            return Err(Error::NotIntegral);
        }
        if !self.valuation().certainly_ge(Q::from_integer(0)) {
            return Err(Error::PrecisionInsufficient(
                "integrality of coefficient not certified".into(),
            ));
        }
        self.coeffs[0].residue().ok_or_else(|| {
            Error::PrecisionInsufficient("residue digit not tracked".into())
        })
    }

    /// `x - y` is zero at the tracked precision.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        (self - other).is_zero_at_precision()
    }

    /// Rational representative of each π-basis coefficient.
    pub fn to_rationals(&self) -> Vec<num_rational::BigRational> {
        self.coeffs.iter().map(PadicScalar::to_rational).collect()
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

impl fmt::Debug for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "0");
        }
        if self.coeffs.len() == 1 {
            return write!(f, "{}", self.coeffs[0]);
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_exact_zero())
            .map(|(i, a)| match i {
                0 => format!("({a})"),
                1 => format!("({a})*pi"),
                _ => format!("({a})*pi^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl $tr<&KElement> for &KElement {
            type Output = KElement;
            /// Panics if the operands live in different fields.
            fn $m(self, rhs: &KElement) -> KElement {
                self.$call(rhs).expect("K-elements from different fields")
            }
        }
        impl $tr for KElement {
            type Output = KElement;
            fn $m(self, rhs: KElement) -> KElement {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &KElement {
    type Output = KElement;
    fn neg(self) -> KElement {
        self.with_coeffs(self.coeffs.iter().map(|a| -a).collect())
    }
}

impl Neg for KElement {
    type Output = KElement;
    fn neg(self) -> KElement {
        -&self
    }
}

/// Product in K.
pub fn k_mul(x: &KElement, y: &KElement) -> Result<KElement> {
    x.try_mul(y)
}

pub fn k_inv(x: &KElement) -> Result<KElement> {
    x.inv()
}

/// π-normalized valuation of an element.
pub fn valuation(x: &KElement) -> Valuation {
    x.valuation()
}
