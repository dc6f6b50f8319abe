use std::fmt;

use num_bigint::BigInt;

use super::{KElement, LocalField};
use crate::error::{Error, Result};

/// Polynomial over K, coefficients low-to-high. Trailing exact zeros are trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KPoly {
    field: LocalField,
    coeffs: Vec<KElement>,
}

impl KPoly {
    pub fn new(field: &LocalField, mut coeffs: Vec<KElement>) -> Self {
        while coeffs.last().is_some_and(KElement::is_exact_zero) {
            coeffs.pop();
        }
        KPoly {
            field: field.clone(),
            coeffs,
        }
    }

    /// `Π (x - r)` over the given roots.
    pub fn from_roots(field: &LocalField, roots: &[KElement]) -> Self {
        roots.iter().fold(KPoly::new(field, vec![field.one()]), |acc, r| {
            acc.mul(&KPoly::new(field, vec![-r, field.one()]))
        })
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn coeffs(&self) -> &[KElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> KElement {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.field.zero())
    }

    /// `None` for the exactly-zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mul(&self, other: &KPoly) -> KPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return KPoly::new(&self.field, vec![]);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        KPoly::new(&self.field, out)
    }

    pub fn eval(&self, x: &KElement) -> KElement {
        self.coeffs
            .iter()
            .rev()
            .fold(self.field.zero(), |acc, c| &(&acc * x) + c)
    }

    /// `f(x + s)` by repeated synthetic division.
    pub fn taylor_shift(&self, s: &KElement) -> KPoly {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let t = &c[j + 1] * s;
                c[j] = &c[j] + &t;
            }
        }
        KPoly::new(&self.field, c)
    }
}

impl fmt::Display for KPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(i, c)| match i {
                0 => format!("[{c}]"),
                1 => format!("[{c}]*x"),
                _ => format!("[{c}]*x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Polynomial over F_p, coefficients low-to-high in `[0, p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPoly {
    p: u32,
    coeffs: Vec<u32>,
}

impl FpPoly {
    pub fn new(p: u32, coeffs: Vec<u32>) -> Self {
        let mut coeffs: Vec<u32> = coeffs.into_iter().map(|c| c % p).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { p, coeffs }
    }

    pub fn from_signed(p: u32, coeffs: &[i64]) -> Self {
        FpPoly::new(
            p,
            coeffs
                .iter()
                .map(|&c| c.rem_euclid(p as i64) as u32)
                .collect(),
        )
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        assert_eq!(self.p, other.p);
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return FpPoly::new(self.p, vec![]);
        }
        let p = self.p as u64;
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = (out[i + j] + a as u64 * b as u64) % p;
            }
        }
        FpPoly::new(self.p, out.into_iter().map(|c| c as u32).collect())
    }

    pub fn eval(&self, x: u32) -> u32 {
        let p = self.p as u64;
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| (acc * x as u64 + c as u64) % p) as u32
    }

    /// Exact division by `x - r`; `None` when `r` is not a root.
    pub fn divide_linear(&self, r: u32) -> Option<FpPoly> {
        if self.coeffs.is_empty() || self.eval(r) != 0 {
            return None;
        }
        let p = self.p as u64;
        let n = self.coeffs.len();
        let mut q = vec![0u32; n - 1];
        let mut carry = 0u64;
        for i in (1..n).rev() {
            carry = (carry * r as u64 + self.coeffs[i] as u64) % p;
            q[i - 1] = carry as u32;
        }
        Some(FpPoly::new(self.p, q))
    }

    /// Leading coefficient normalized to 1.
    pub fn monic(&self) -> FpPoly {
        let Some(&lead) = self.coeffs.last() else {
            return self.clone();
        };
        let inv = mod_inverse(lead, self.p);
        FpPoly::new(
            self.p,
            self.coeffs
                .iter()
                .map(|&c| ((c as u64 * inv as u64) % self.p as u64) as u32)
                .collect(),
        )
    }
}

fn mod_inverse(a: u32, p: u32) -> u32 {
    let a = BigInt::from(a);
    let m = BigInt::from(p);
    let g = num_integer::Integer::extended_gcd(&a, &m);
    let x = num_integer::Integer::mod_floor(&g.x, &m);
    u32::try_from(x).unwrap()
}

impl fmt::Display for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, _) => format!("{c}"),
                (1, 1) => "x".to_string(),
                (1, _) => format!("{c}*x"),
                (_, 1) => format!("x^{i}"),
                _ => format!("{c}*x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Coefficientwise reduction modulo the maximal ideal (π ↦ 0, p ↦ 0).
pub fn residue_reduce(f: &KPoly) -> Result<FpPoly> {
    let zero = crate::valuation::Q::from_integer(0);
    if f.coeffs.iter().any(|c| c.valuation().certainly_lt(zero)) {
        return Err(Error::NotIntegral);
    }
    let residues = f
        .coeffs
        .iter()
        .map(KElement::residue)
        .collect::<Result<Vec<u32>>>()?;
    Ok(FpPoly::new(f.field.p(), residues))
}
