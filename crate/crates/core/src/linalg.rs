//! Square matrices over K.
//!
//! There is deliberately no general inverse: spectral questions go through
//! [`charpoly`], which uses only ring operations.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::local_field::{KElement, KPoly, LocalField};
use crate::valuation::Valuation;

#[derive(Clone, PartialEq, Eq)]
pub struct KMatrix {
    field: LocalField,
    dim: usize,
    entries: Vec<KElement>,
}

impl KMatrix {
    pub fn from_rows(field: &LocalField, rows: Vec<Vec<KElement>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::ShapeMismatch("matrix must have at least one row".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for x in row {
                if x.field() != field {
                    return Err(Error::FieldMismatch);
                }
                entries.push(x);
            }
        }
        Ok(KMatrix {
            field: field.clone(),
            dim,
            entries,
        })
    }

    pub fn from_fn(field: &LocalField, dim: usize, mut f: impl FnMut(usize, usize) -> KElement) -> Self {
        assert!(dim >= 1);
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        KMatrix {
            field: field.clone(),
            dim,
            entries,
        }
    }

    pub fn zero(field: &LocalField, dim: usize) -> Self {
        Self::from_fn(field, dim, |_, _| field.zero())
    }

    pub fn identity(field: &LocalField, dim: usize) -> Self {
        Self::scalar(field, dim, &field.one())
    }

    pub fn scalar(field: &LocalField, dim: usize, s: &KElement) -> Self {
        Self::from_fn(field, dim, |i, j| if i == j { s.clone() } else { field.zero() })
    }

    pub fn diagonal(field: &LocalField, diag: &[KElement]) -> Self {
        Self::from_fn(field, diag.len(), |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                field.zero()
            }
        })
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &KElement {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: KElement) {
        self.entries[i * self.dim + j] = x;
    }

    pub fn entries(&self) -> &[KElement] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<KElement>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "{0}x{0} vs {1}x{1}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(&KElement) -> KElement) -> Self {
        KMatrix {
            field: self.field.clone(),
            dim: self.dim,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&KElement, &KElement) -> KElement) -> Result<Self> {
        self.check(other)?;
        Ok(KMatrix {
            field: self.field.clone(),
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let d = self.dim;
        let entries = (0..d * d)
            .map(|k| {
                let (i, j) = (k / d, k % d);
                (0..d).fold(self.field.zero(), |acc, t| {
                    let a = self.get(i, t);
                    let b = other.get(t, j);
                    if a.is_exact_zero() || b.is_exact_zero() {
                        acc
                    } else {
                        &acc + &(a * b)
                    }
                })
            })
            .collect();
        Ok(KMatrix {
            field: self.field.clone(),
            dim: d,
            entries,
        })
    }

    pub fn scale(&self, s: &KElement) -> Self {
        self.map(|a| a * s)
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        self.map(|a| a.mul_int(k))
    }

    pub fn div_int(&self, k: &BigInt) -> Self {
        self.map(|a| a.div_int(k))
    }

    /// `A + s·I`.
    pub fn shift(&self, s: &KElement) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            let k = i * self.dim + i;
            out.entries[k] = &out.entries[k] + s;
        }
        out
    }

    pub fn trace(&self) -> KElement {
        (0..self.dim).fold(self.field.zero(), |acc, i| &acc + self.get(i, i))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.entries.iter().all(KElement::is_exact_zero)
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.entries.iter().all(KElement::is_zero_at_precision)
    }

    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.try_sub(other).is_ok_and(|d| d.is_zero_at_precision())
    }

    /// Smallest p-adic absolute precision over all entries.
    pub fn precision_p(&self) -> Option<i64> {
        self.entries.iter().filter_map(KElement::precision_p).min()
    }

    pub fn min_entry_valuation(&self) -> Valuation {
        self.entries
            .iter()
            .map(KElement::valuation)
            .fold(Valuation::Infinite, Valuation::min)
    }

    /// `det(xI - A)` by Berkowitz's division-free recursion.
    pub fn charpoly(&self) -> KPoly {
        let field = &self.field;
        // q holds coefficients from the leading one down.
        let mut q = vec![field.one(), -self.get(0, 0)];
        for r in 1..self.dim {
            // Leading principal block of size r, column S above and row R left of a_rr.
            let s: Vec<KElement> = (0..r).map(|i| self.get(i, r).clone()).collect();
            let row: Vec<KElement> = (0..r).map(|j| self.get(r, j).clone()).collect();
            let mut col = vec![field.one(), -self.get(r, r)];
            let mut v = s;
            for _ in 0..r {
                let dot = row
                    .iter()
                    .zip(&v)
                    .fold(field.zero(), |acc, (a, b)| &acc + &(a * b));
                col.push(-dot);
                v = (0..r)
                    .map(|i| {
                        (0..r).fold(field.zero(), |acc, j| &acc + &(self.get(i, j) * &v[j]))
                    })
                    .collect();
            }
            // Toeplitz product: new[i] = Σ_j col[i - j] * q[j]
            let mut next = vec![field.zero(); r + 2];
            for (i, slot) in next.iter_mut().enumerate() {
                for (j, qj) in q.iter().enumerate().take(i + 1) {
                    if qj.is_exact_zero() || col[i - j].is_exact_zero() {
                        continue;
                    }
                    *slot = &*slot + &(&col[i - j] * qj);
                }
            }
            q = next;
        }
        q.reverse();
        KPoly::new(field, q)
    }

    /// `(-1)^d χ(0)`.
    pub fn det(&self) -> KElement {
        let c0 = self.charpoly().coeff(0);
        if self.dim.is_multiple_of(2) {
            c0
        } else {
            -c0
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.field, self.dim, |i, j| self.get(j, i).clone())
    }
}

impl fmt::Debug for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .chunks(self.dim)
            .map(|r| {
                let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl $tr<&KMatrix> for &KMatrix {
            type Output = KMatrix;
            /// Panics on shape or field mismatch.
            fn $m(self, rhs: &KMatrix) -> KMatrix {
                self.$call(rhs).expect("incompatible matrices")
            }
        }
        impl $tr for KMatrix {
            type Output = KMatrix;
            fn $m(self, rhs: KMatrix) -> KMatrix {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &KMatrix {
    type Output = KMatrix;
    fn neg(self) -> KMatrix {
        self.map(|a| -a)
    }
}

pub fn mat_mul(a: &KMatrix, b: &KMatrix) -> Result<KMatrix> {
    a.try_mul(b)
}

pub fn shift(a: &KMatrix, s: &KElement) -> KMatrix {
    a.shift(s)
}

pub fn charpoly(a: &KMatrix) -> KPoly {
    a.charpoly()
}

pub fn min_entry_valuation(a: &KMatrix) -> Valuation {
    a.min_entry_valuation()
}
