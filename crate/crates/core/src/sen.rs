//! Sen operator of a crystal, the formal τ-cocycle `(1 - z)^Φ`, truncated
//! matrix logarithm and exponential, and the constant θ(uλ').

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::crystal::HtCrystal;
use crate::error::{Error, Result};
use crate::linalg::KMatrix;
use crate::local_field::{newton_polygon, KElement, KPoly, LocalField, NewtonPolygon};
use crate::padic::{factorial, vp_factorial};
use crate::valuation::{Valuation, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightClass {
    pub residue: u32,
    pub multiplicity: usize,
    /// Smallest `v_π(w - residue)` over the weights `w` in the class, when certified.
    pub distance: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SenData {
    pub phi: KMatrix,
    pub charpoly: KPoly,
    pub polygon: Option<NewtonPolygon>,
    /// Residue classes of the weights, `e = 1` only.
    pub classes: Option<Vec<WeightClass>>,
}

/// `Φ = -A1 / E'(π)` and its weight report.
pub fn sen_from_crystal(c: &HtCrystal) -> Result<SenData> {
    let field = c.field();
    let phi = (-c.a1()).scale(&field.e_prime().inv()?);
    let charpoly = phi.charpoly();
    let polygon = newton_polygon(&charpoly).ok();
    let classes = if field.e() == 1 {
        weight_classes(&charpoly).ok()
    } else {
        None
    };
    Ok(SenData {
        phi,
        charpoly,
        polygon,
        classes,
    })
}

fn weight_classes(chi: &KPoly) -> Result<Vec<WeightClass>> {
    let field = chi.field();
    let p = field.p();
    let mut rest = crate::local_field::residue_reduce(chi)?;
    let mut out = vec![];
    for i in 0..p {
        let mut m = 0;
        while let Some(q) = rest.divide_linear(i) {
            rest = q;
            m += 1;
        }
        if m == 0 {
            continue;
        }
        // Roots of chi(x + i) are w - i; the class occupies the m largest valuations.
        let shifted = chi.taylor_shift(&field.from_int(i));
        let distance = newton_polygon(&shifted).ok().and_then(|np| {
            let mut vals: Vec<Q> = vec![];
            for (v, k) in np.root_valuations() {
                vals.extend(std::iter::repeat_n(v, k));
            }
            vals.sort();
            let infinite = np.zero_roots;
            if infinite >= m {
                None
            } else {
                vals.iter().rev().take(m - infinite).min().copied()
            }
        });
        out.push(WeightClass {
            residue: i,
            multiplicity: m,
            distance,
        });
    }
    Ok(out)
}

/// `Σ_{n<=D} M_n z^n` with matrix coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalMatrixSeries {
    coefficients: Vec<KMatrix>,
}

impl FormalMatrixSeries {
    pub fn new(coefficients: Vec<KMatrix>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty series".into()))?;
        let dim = first.dim();
        if coefficients.iter().any(|m| m.dim() != dim) {
            return Err(Error::ShapeMismatch("coefficients of differing rank".into()));
        }
        Ok(FormalMatrixSeries { coefficients })
    }

    pub fn identity(field: &LocalField, dim: usize, degree: usize) -> Self {
        let mut coefficients = vec![KMatrix::zero(field, dim); degree + 1];
        coefficients[0] = KMatrix::identity(field, dim);
        FormalMatrixSeries { coefficients }
    }

    pub fn field(&self) -> &LocalField {
        self.coefficients[0].field()
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[KMatrix] {
        &self.coefficients
    }

    pub fn coefficient(&self, n: usize) -> &KMatrix {
        &self.coefficients[n]
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.degree() != other.degree() || self.dim() != other.dim() {
            return Err(Error::ShapeMismatch("series of different shape".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(FormalMatrixSeries { coefficients })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.map(|m| -m))
    }

    /// Truncated product, coefficients multiplied in the given order.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let d = self.degree();
        let mut coefficients = vec![KMatrix::zero(self.field(), self.dim()); d + 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.coefficients.iter().enumerate().take(d + 1 - i) {
                if b.is_exact_zero() {
                    continue;
                }
                coefficients[i + j] = coefficients[i + j].try_add(&a.try_mul(b)?)?;
            }
        }
        Ok(FormalMatrixSeries { coefficients })
    }

    pub fn map(&self, f: impl Fn(&KMatrix) -> KMatrix) -> Self {
        FormalMatrixSeries {
            coefficients: self.coefficients.iter().map(f).collect(),
        }
    }

    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.degree() == other.degree()
            && self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .all(|(a, b)| a.eq_at_precision(b))
    }
}

fn check_margin(field: &LocalField, degree: usize) -> Result<()> {
    let needed = field.e() as i64 * vp_factorial(degree as u64, field.p());
    if needed > field.margin() {
        return Err(Error::PrecisionExhausted {
            degree,
            needed,
            margin: field.margin(),
        });
    }
    Ok(())
}

/// `(1 - z)^Φ = Σ (-1)^n C(Φ, n) z^n` to degree D.
pub fn tau_cocycle(c: &HtCrystal, degree: usize) -> Result<FormalMatrixSeries> {
    let phi = sen_from_crystal(c)?.phi;
    binomial_power(&phi, degree)
}

/// `(1 - z)^Φ` for an arbitrary matrix exponent.
pub fn binomial_power(phi: &KMatrix, degree: usize) -> Result<FormalMatrixSeries> {
    let field = phi.field();
    check_margin(field, degree)?;
    Ok(FormalMatrixSeries {
        coefficients: binomial_coefficients(phi, degree),
    })
}

/// `(-1)^n C(Φ, n)` for `n = 0..=degree`.
fn binomial_coefficients(phi: &KMatrix, degree: usize) -> Vec<KMatrix> {
    let field = phi.field();
    let mut falling = KMatrix::identity(field, phi.dim());
    let mut out = vec![falling.clone()];
    for n in 1..=degree {
        falling = &falling * &phi.shift(&field.from_int(-(n as i64 - 1)));
        let c = falling.div_int(&factorial(n as u64));
        out.push(if n % 2 == 1 { -&c } else { c });
    }
    out
}

/// `log U = -Σ_{k=1}^{D} (I - U)^k / k`.
pub fn series_log(u: &FormalMatrixSeries) -> Result<FormalMatrixSeries> {
    let field = u.field().clone();
    let (d, degree) = (u.dim(), u.degree());
    let id = FormalMatrixSeries::identity(&field, d, degree);
    let nil = id.try_sub(u)?;
    if !nil.coefficients[0].is_zero_at_precision() {
        return Err(Error::NonzeroConstantTerm);
    }
    check_margin(&field, degree)?;
    let mut out = id.map(|m| KMatrix::zero(m.field(), d));
    let mut power = nil.clone();
    for k in 1..=degree {
        out = out.try_sub(&power.map(|m| m.div_int(&BigInt::from(k))))?;
        power = power.try_mul(&nil)?;
    }
    Ok(out)
}

/// `exp L = Σ L^k / k!` for `L` with vanishing constant term.
pub fn series_exp(l: &FormalMatrixSeries) -> Result<FormalMatrixSeries> {
    let field = l.field().clone();
    let (d, degree) = (l.dim(), l.degree());
    if !l.coefficients[0].is_zero_at_precision() {
        return Err(Error::NonzeroConstantTerm);
    }
    check_margin(&field, degree)?;
    let mut out = FormalMatrixSeries::identity(&field, d, degree);
    let mut power = l.clone();
    for k in 1..=degree {
        out = out.try_add(&power.map(|m| m.div_int(&factorial(k as u64))))?;
        power = power.try_mul(l)?;
    }
    Ok(out)
}

/// `-(z coefficient of log U)`.
pub fn recover_sen(u: &FormalMatrixSeries) -> Result<KMatrix> {
    if u.degree() < 1 {
        return Err(Error::ShapeMismatch("need the z coefficient".into()));
    }
    Ok(-series_log(u)?.coefficient(1))
}

/// Ordinary power series in `z1, z2` truncated by total degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivariateSeries {
    field: LocalField,
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<[usize; 2], KMatrix>,
}

impl BivariateSeries {
    pub fn constant(m: KMatrix, degree: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        let (field, dim) = (m.field().clone(), m.dim());
        if !m.is_exact_zero() {
            coeffs.insert([0, 0], m);
        }
        BivariateSeries {
            field,
            dim,
            degree,
            coeffs,
        }
    }

    /// Scalar series `Σ c z1^a z2^b` from integer terms.
    pub fn scalar(field: &LocalField, degree: usize, terms: &[([usize; 2], i64)]) -> Self {
        let mut out = Self::constant(KMatrix::zero(field, 1), degree);
        for &(k, c) in terms {
            if k[0] + k[1] <= degree && c != 0 {
                out.coeffs.insert(k, KMatrix::scalar(field, 1, &field.from_int(c)));
            }
        }
        out
    }

    pub fn coeff(&self, k: [usize; 2]) -> KMatrix {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| KMatrix::zero(&self.field, self.dim))
    }

    fn add_term(&mut self, k: [usize; 2], m: KMatrix) {
        match self.coeffs.get_mut(&k) {
            Some(c) => *c = &*c + &m,
            None => {
                self.coeffs.insert(k, m);
            }
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (k, m) in &other.coeffs {
            out.add_term(*k, m.clone());
        }
        Ok(out)
    }

    /// Truncated product; a `1x1` factor acts as a scalar.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let dim = self.dim.max(other.dim);
        let mut out = Self::constant(KMatrix::zero(&self.field, dim), self.degree);
        for (a, x) in &self.coeffs {
            for (b, y) in &other.coeffs {
                let k = [a[0] + b[0], a[1] + b[1]];
                if k[0] + k[1] > self.degree {
                    continue;
                }
                let m = match (x.dim(), y.dim()) {
                    (1, n) if n > 1 => y.scale(x.get(0, 0)),
                    (n, 1) if n > 1 => x.scale(y.get(0, 0)),
                    _ => x.try_mul(y)?,
                };
                out.add_term(k, m);
            }
        }
        Ok(out)
    }

    /// First index (by total degree) where the series differ at tracked precision.
    pub fn first_difference(&self, other: &Self) -> Option<([usize; 2], KMatrix)> {
        let mut keys: Vec<[usize; 2]> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.sort_by_key(|k| (k[0] + k[1], *k));
        keys.dedup();
        keys.into_iter().find_map(|k| {
            let d = &self.coeff(k) - &other.coeff(k);
            (!d.is_zero_at_precision()).then_some((k, d))
        })
    }
}

/// `(1 - w)^Φ` for a scalar series `w` with zero constant term.
pub fn bivariate_binomial_power(phi: &KMatrix, w: &BivariateSeries) -> Result<BivariateSeries> {
    if w.coeffs.contains_key(&[0, 0]) {
        return Err(Error::NonzeroConstantTerm);
    }
    check_margin(phi.field(), w.degree)?;
    let coeffs = binomial_coefficients(phi, w.degree);
    let mut out = BivariateSeries::constant(coeffs[0].clone(), w.degree);
    let mut power = BivariateSeries::constant(KMatrix::identity(phi.field(), 1), w.degree);
    for c in &coeffs[1..] {
        power = power.try_mul(w)?;
        out = out.try_add(&BivariateSeries::constant(c.clone(), w.degree).try_mul(&power)?)?;
    }
    Ok(out)
}

/// Compares `(1 - z1)^Φ (1 - z2)^Φ` with `((1 - z1)(1 - z2))^Φ`; returns the
/// first differing coefficient, if any.
pub fn multiplicativity_defect(phi: &KMatrix, degree: usize) -> Result<Option<([usize; 2], KMatrix)>> {
    let field = phi.field();
    let z1 = BivariateSeries::scalar(field, degree, &[([1, 0], 1)]);
    let z2 = BivariateSeries::scalar(field, degree, &[([0, 1], 1)]);
    let w = BivariateSeries::scalar(field, degree, &[([1, 0], 1), ([0, 1], 1), ([1, 1], -1)]);
    let lhs = bivariate_binomial_power(phi, &z1)?.try_mul(&bivariate_binomial_power(phi, &z2)?)?;
    let rhs = bivariate_binomial_power(phi, &w)?;
    Ok(lhs.first_difference(&rhs))
}

/// Bound `min(p^n, e p^n - e)` on `v_π(E(π^{p^n})/E(0) - 1)`.
pub fn theta_tail_bound(field: &LocalField, n: u32) -> BigInt {
    let pn = BigInt::from(field.p()).pow(n);
    let e = BigInt::from(field.e());
    let wild = &e * &pn - &e;
    pn.min(wild)
}

/// `θ(uλ') = π (E'(π)/E(0)) Π_{n>=1} E(π^{p^n})/E(0)` to absolute precision
/// `O(π^{eN})`, dropping factors congruent to 1 at that precision.
pub fn theta_u_lambda_prime(field: &LocalField, precision: i64) -> Result<KElement> {
    if precision < 1 {
        return Err(Error::PrecisionInsufficient("precision must be at least 1".into()));
    }
    let e = field.e() as i64;
    let target = BigInt::from(e * precision);
    let e0_inv = field.from_scalar(field.e_zero().inv()?);
    let mut acc = &(&field.pi() * &field.e_prime()) * &e0_inv;
    let mut n = 1u32;
    while theta_tail_bound(field, n) < target {
        let x = power_by_exponent(&field.pi(), &BigInt::from(field.p()).pow(n));
        acc = &acc * &(&field.eval_eisenstein(&x) * &e0_inv);
        n += 1;
    }
    Ok(acc.cap_pi(e * precision))
}

fn power_by_exponent(x: &KElement, k: &BigInt) -> KElement {
    let mut acc = x.field().one();
    let mut base = x.clone();
    let mut k = k.clone();
    let two = BigInt::from(2);
    while !k.is_zero() {
        if &k % &two == BigInt::from(1) {
            acc = &acc * &base;
        }
        k /= &two;
        if !k.is_zero() {
            base = &base * &base;
        }
    }
    acc
}

/// `v_π(θ(uλ'))`, predicted as `1 + v_π(E'(π)) - e`.
pub fn theta_valuation(field: &LocalField, precision: i64) -> Result<Valuation> {
    Ok(theta_u_lambda_prime(field, precision)?.valuation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_field::field_make;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn field(p: u32, e: &[i64]) -> LocalField {
        field_make(p, &e.iter().map(|&c| q(c)).collect::<Vec<_>>()).unwrap()
    }

    fn scalar(x: KElement) -> HtCrystal {
        HtCrystal::new(KMatrix::scalar(&x.field().clone(), 1, &x))
    }

    #[test]
    fn phi_examples() {
        let k = field(5, &[-5, 1]);
        let s = sen_from_crystal(&scalar(k.from_int(-3))).unwrap();
        assert!(s.phi.get(0, 0).eq_at_precision(&k.from_int(3)));
        let classes = s.classes.unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!((classes[0].residue, classes[0].multiplicity), (3, 1));

        let k3 = field(3, &[-3, 0, 1]);
        let s = sen_from_crystal(&scalar(k3.pi())).unwrap();
        let half = k3.element(&[BigRational::new((-1).into(), 2.into())]);
        assert!(s.phi.get(0, 0).eq_at_precision(&half));
        assert_eq!(s.phi.get(0, 0).valuation(), Valuation::finite(0));

        let z = sen_from_crystal(&HtCrystal::new(KMatrix::zero(&k, 2))).unwrap();
        assert!(z.phi.is_zero_at_precision());
    }

    #[test]
    fn cocycle_of_small_exponents() {
        let k = field(5, &[-5, 1]);
        let u = binomial_power(&KMatrix::zero(&k, 2), 6).unwrap();
        assert!(u.eq_at_precision(&FormalMatrixSeries::identity(&k, 2, 6)));
        let u = binomial_power(&KMatrix::identity(&k, 2), 6).unwrap();
        assert!(u.coefficient(1).eq_at_precision(&-&KMatrix::identity(&k, 2)));
        for n in 2..=6 {
            assert!(u.coefficient(n).is_zero_at_precision());
        }
        let phi = k.from_int(7);
        let u = binomial_power(&KMatrix::scalar(&k, 1, &phi), 3).unwrap();
        // φ(φ - 1)/2 = 21
        assert!(u.coefficient(2).get(0, 0).eq_at_precision(&k.from_int(21)));
    }

    #[test]
    fn log_of_binomial_power() {
        let k = field(3, &[-3, 0, 1]);
        let phi = KMatrix::from_rows(&k, vec![vec![k.pi(), k.one()], vec![k.zero(), k.from_int(2)]]).unwrap();
        let u = binomial_power(&phi, 6).unwrap();
        let log = series_log(&u).unwrap();
        for n in 1..=6 {
            let expected = -&phi.div_int(&BigInt::from(n));
            assert!(log.coefficient(n).eq_at_precision(&expected), "degree {n}");
        }
        assert!(series_exp(&log).unwrap().eq_at_precision(&u));
        assert!(recover_sen(&u).unwrap().eq_at_precision(&phi));
        let id = FormalMatrixSeries::identity(&k, 2, 6);
        assert!(recover_sen(&id).unwrap().is_zero_at_precision());
    }

    #[test]
    fn commuting_exponents_add() {
        let k = field(5, &[-5, 1]);
        let phi = KMatrix::from_rows(&k, vec![vec![k.from_int(2), k.one()], vec![k.zero(), k.from_int(2)]]).unwrap();
        let psi = &phi * &phi;
        let u = binomial_power(&phi, 6).unwrap().try_mul(&binomial_power(&psi, 6).unwrap()).unwrap();
        assert!(recover_sen(&u).unwrap().eq_at_precision(&(&phi + &psi)));
    }

    #[test]
    fn multiplicativity_in_two_variables() {
        let k = field(2, &[2, 0, 1]);
        let phi = KMatrix::from_rows(&k, vec![vec![k.pi(), k.one()], vec![k.from_int(3), k.zero()]]).unwrap();
        assert_eq!(multiplicativity_defect(&phi, 6).unwrap(), None);
    }

    #[test]
    fn log_requires_unipotent_constant() {
        let k = field(5, &[-5, 1]);
        let u = FormalMatrixSeries::identity(&k, 1, 3).map(|m| m.shift(&k.one()));
        assert_eq!(series_log(&u), Err(Error::NonzeroConstantTerm));
    }

    #[test]
    fn theta_for_linear_e() {
        // E = u - 5: θ = -(1 - 5^4) mod 5^6
        let k = field(5, &[-5, 1]);
        let t = theta_u_lambda_prime(&k, 6).unwrap();
        assert!(t.eq_at_precision(&k.from_int(-(1 - 625))));
        assert_eq!(t.precision_p(), Some(6));
    }

    #[test]
    fn theta_valuation_formula() {
        for (p, e) in [(3u32, vec![-3, 0, 1]), (2, vec![2, 2, 1]), (2, vec![2, 0, 0, 1]), (5, vec![10, -5, 1])] {
            let k = field(p, &e);
            let v = theta_valuation(&k, 12).unwrap();
            let expected = 1 + k.e_prime_valuation() - k.e() as i64;
            assert_eq!(v, Valuation::finite(expected), "p={p} E={e:?}");
        }
    }
}
