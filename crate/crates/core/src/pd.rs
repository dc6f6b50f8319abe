//! Truncated divided-power series in one or two variables.
//!
//! A series is `Σ C_k X^[k]` with `X^[k] = X1^[k1] X2^[k2]` and
//! `X^[n] = X^n / n!`. Coefficients are matrices; a `1x1` coefficient acts
//! as a scalar against larger ones.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::KMatrix;
use crate::local_field::{KElement, LocalField};
use crate::padic::{factorial, vp_factorial};

/// Multi-index `[k1, k2]`; one-variable series keep `k2 = 0`.
pub type PdIndex = [usize; 2];

#[derive(Clone, PartialEq, Eq)]
pub struct PdSeries {
    field: LocalField,
    vars: usize,
    degree: usize,
    dim: usize,
    coeffs: BTreeMap<PdIndex, KMatrix>,
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn total(k: &PdIndex) -> usize {
    k[0] + k[1]
}

fn coeff_mul(a: &KMatrix, b: &KMatrix) -> Result<KMatrix> {
    match (a.dim(), b.dim()) {
        (1, d) if d > 1 => Ok(b.scale(a.get(0, 0))),
        (d, 1) if d > 1 => Ok(a.scale(b.get(0, 0))),
        _ => a.try_mul(b),
    }
}

fn promote(m: &KMatrix, dim: usize) -> KMatrix {
    if m.dim() == dim {
        m.clone()
    } else {
        KMatrix::scalar(m.field(), dim, m.get(0, 0))
    }
}

impl PdSeries {
    pub fn zero(field: &LocalField, vars: usize, degree: usize, dim: usize) -> Self {
        assert!(vars == 1 || vars == 2, "only one or two variables are supported");
        PdSeries {
            field: field.clone(),
            vars,
            degree,
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(field: &LocalField, vars: usize, degree: usize, dim: usize) -> Self {
        Self::constant(vars, degree, KMatrix::identity(field, dim))
    }

    pub fn constant(vars: usize, degree: usize, m: KMatrix) -> Self {
        Self::monomial(vars, degree, [0, 0], m)
    }

    pub fn monomial(vars: usize, degree: usize, index: PdIndex, m: KMatrix) -> Self {
        let mut out = Self::zero(m.field(), vars, degree, m.dim());
        out.insert(index, m);
        out
    }

    /// The scalar series `X_var^[1]`, `var` in `{1, 2}`.
    pub fn variable(field: &LocalField, vars: usize, var: usize, degree: usize) -> Self {
        assert!((1..=vars).contains(&var));
        let mut idx = [0, 0];
        idx[var - 1] = 1;
        Self::monomial(vars, degree, idx, KMatrix::identity(field, 1))
    }

    /// One-variable series `Σ M_n X^[n]` from its coefficient list.
    pub fn from_coefficients(field: &LocalField, degree: usize, ms: &[KMatrix]) -> Result<Self> {
        let dim = ms.first().map_or(1, KMatrix::dim);
        let mut out = Self::zero(field, 1, degree, dim);
        for (n, m) in ms.iter().enumerate().take(degree + 1) {
            if m.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient {n} is {0}x{0}, expected {dim}x{dim}",
                    m.dim()
                )));
            }
            out.insert([n, 0], m.clone());
        }
        Ok(out)
    }

    fn insert(&mut self, index: PdIndex, m: KMatrix) {
        if total(&index) > self.degree || m.is_exact_zero() {
            return;
        }
        assert!(self.vars == 2 || index[1] == 0, "second variable in a one-variable series");
        self.dim = self.dim.max(m.dim());
        match self.coeffs.get_mut(&index) {
            Some(c) => {
                let d = c.dim().max(m.dim());
                *c = &promote(c, d) + &promote(&m, d);
            }
            None => {
                self.coeffs.insert(index, m);
            }
        }
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of `X^[index]`, zero when absent.
    pub fn coeff(&self, index: PdIndex) -> KMatrix {
        self.coeffs
            .get(&index)
            .map(|m| promote(m, self.dim))
            .unwrap_or_else(|| KMatrix::zero(&self.field, self.dim))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PdIndex, &KMatrix)> {
        self.coeffs.iter()
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.vars != other.vars || self.degree != other.degree {
            return Err(Error::ShapeMismatch(format!(
                "series in {} variable(s) to degree {} vs {} variable(s) to degree {}",
                self.vars, self.degree, other.vars, other.degree
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (k, m) in &other.coeffs {
            out.insert(*k, m.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m = -&*m;
        }
        out
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn scale(&self, s: &KElement) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        self.map(|m| m.mul_int(k))
    }

    pub fn div_int(&self, k: &BigInt) -> Self {
        self.map(|m| m.div_int(k))
    }

    fn map(&self, f: impl Fn(&KMatrix) -> KMatrix) -> Self {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m = f(m);
        }
        out
    }

    /// Embeds a one-variable series into two variables as a series in `X_var`.
    pub fn relabel(&self, var: usize) -> Self {
        assert_eq!(self.vars, 1, "relabel expects a one-variable series");
        assert!(var == 1 || var == 2);
        let mut out = Self::zero(&self.field, 2, self.degree, self.dim);
        for (k, m) in &self.coeffs {
            let idx = if var == 1 { [k[0], 0] } else { [0, k[0]] };
            out.insert(idx, m.clone());
        }
        out
    }

    /// First multi-index (by total degree, then lexicographically) at which the
    /// two series differ at tracked precision, with the difference.
    pub fn first_difference(&self, other: &Self) -> Result<Option<(PdIndex, KMatrix)>> {
        let diff = self.try_sub(other)?;
        let mut keys: Vec<&PdIndex> = diff.coeffs.keys().collect();
        keys.sort_by_key(|k| (total(k), **k));
        for k in keys {
            let m = &diff.coeffs[k];
            if !m.is_zero_at_precision() {
                return Ok(Some((*k, m.clone())));
            }
        }
        Ok(None)
    }

    pub fn eq_at_precision(&self, other: &Self) -> bool {
        matches!(self.first_difference(other), Ok(None))
    }

    /// Smallest p-adic absolute precision over all stored coefficients.
    pub fn precision_p(&self) -> Option<i64> {
        self.coeffs.values().filter_map(KMatrix::precision_p).min()
    }
}

impl fmt::Debug for PdSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PdSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .map(|(k, m)| {
                let mono = match (self.vars, k) {
                    (_, [0, 0]) => String::new(),
                    (1, [a, _]) => format!(" X^[{a}]"),
                    (_, [a, b]) => format!(" X1^[{a}] X2^[{b}]"),
                };
                format!("{m}{mono}")
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Product in the pd ring: `X^[a] X^[b] = C(a+b, a) X^[a+b]` per variable.
/// Matrix coefficients multiply in the given order.
pub fn pd_mul(f: &PdSeries, g: &PdSeries) -> Result<PdSeries> {
    f.compatible(g)?;
    let mut out = PdSeries::zero(&f.field, f.vars, f.degree, f.dim.max(g.dim));
    for (a, ma) in &f.coeffs {
        for (b, mb) in &g.coeffs {
            let k = [a[0] + b[0], a[1] + b[1]];
            if total(&k) > f.degree {
                continue;
            }
            let c = binomial(k[0], a[0]) * binomial(k[1], a[1]);
            let m = coeff_mul(ma, mb)?;
            out.insert(k, if c.is_one() { m } else { m.mul_int(&c) });
        }
    }
    Ok(out)
}

/// `(1 - a X_var)^{-1} = Σ a^n n! X_var^[n]`.
pub fn pd_geom_inv(a: &KElement, vars: usize, var: usize, degree: usize) -> PdSeries {
    let field = a.field();
    let mut out = PdSeries::zero(field, vars, degree, 1);
    let mut pow = field.one();
    for n in 0..=degree {
        let mut idx = [0, 0];
        idx[var - 1] = n;
        let c = pow.mul_int(&factorial(n as u64));
        out.insert(idx, KMatrix::scalar(field, 1, &c));
        pow = &pow * a;
    }
    out
}

/// `F(g) = Σ A_n g^n / n!` for a one-variable `F` and a scalar `g` with zero
/// constant term. Each `g^n / n!` is the pd power, obtained by exact division.
pub fn pd_substitute(f: &PdSeries, g: &PdSeries) -> Result<PdSeries> {
    if f.vars != 1 {
        return Err(Error::ShapeMismatch("substitution needs a one-variable series".into()));
    }
    if f.field != g.field {
        return Err(Error::FieldMismatch);
    }
    if g.dim != 1 {
        return Err(Error::ShapeMismatch("substituted series must be scalar".into()));
    }
    if g.coeffs.get(&[0, 0]).is_some_and(|c| !c.is_zero_at_precision()) {
        return Err(Error::NonzeroConstantTerm);
    }
    let deepest = f
        .coeffs
        .keys()
        .map(|k| k[0])
        .filter(|&n| n <= g.degree)
        .max()
        .unwrap_or(0);
    let field = &f.field;
    let needed = field.e() as i64 * vp_factorial(deepest as u64, field.p());
    if needed > field.margin() {
        return Err(Error::PrecisionExhausted {
            degree: deepest,
            needed,
            margin: field.margin(),
        });
    }
    let mut out = PdSeries::zero(field, g.vars, g.degree, f.dim);
    let mut power = PdSeries::one(field, g.vars, g.degree, 1);
    for n in 0..=deepest {
        if let Some(a) = f.coeffs.get(&[n, 0]) {
            let gamma = power.div_int(&factorial(n as u64));
            let term = pd_mul(&PdSeries::constant(g.vars, g.degree, a.clone()), &gamma)?;
            out = out.try_add(&term)?;
        }
        power = pd_mul(&power, g)?;
    }
    Ok(out)
}
