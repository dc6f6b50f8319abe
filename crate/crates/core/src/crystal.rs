//! Rational Hodge-Tate crystals given by a matrix `A1` over K.
//!
//! The stratification attached to `A1` is `F(X) = Σ A_n X^[n]` with
//! `A_{n+1} = Π_{i=0}^{n} (i E'(π) + A1)`.

use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::linalg::KMatrix;
use crate::local_field::{newton_polygon, residue_reduce, FpPoly, KElement, KPoly, LocalField, NewtonPolygon};
use crate::pd::{pd_geom_inv, pd_mul, pd_substitute, PdIndex, PdSeries};
use crate::padic::factorial;
use crate::valuation::{fmt_q, Valuation, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HtCrystal {
    a1: KMatrix,
}

impl HtCrystal {
    pub fn new(a1: KMatrix) -> Self {
        HtCrystal { a1 }
    }

    pub fn field(&self) -> &LocalField {
        self.a1.field()
    }

    pub fn rank(&self) -> usize {
        self.a1.dim()
    }

    pub fn a1(&self) -> &KMatrix {
        &self.a1
    }

    /// `A1 - k E'(π) I`.
    pub fn twist(&self, k: i64) -> Self {
        let s = self.field().e_prime().mul_int(&BigInt::from(-k));
        HtCrystal::new(self.a1.shift(&s))
    }
}

/// `A_0, ..., A_D`, the coefficients of `X^[n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratificationSeries {
    field: LocalField,
    coefficients: Vec<KMatrix>,
}

impl StratificationSeries {
    pub fn from_coefficients(coefficients: Vec<KMatrix>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty stratification".into()))?;
        let (field, dim) = (first.field().clone(), first.dim());
        if coefficients.iter().any(|m| m.dim() != dim) {
            return Err(Error::ShapeMismatch("coefficients of differing rank".into()));
        }
        if coefficients.iter().any(|m| m.field() != &field) {
            return Err(Error::FieldMismatch);
        }
        Ok(StratificationSeries { field, coefficients })
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn rank(&self) -> usize {
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

    /// Adds `delta` to entry `(i, j)` of `A_n`.
    pub fn perturbed(&self, n: usize, i: usize, j: usize, delta: &KElement) -> Self {
        let mut out = self.clone();
        let m = &mut out.coefficients[n];
        let x = m.get(i, j) + delta;
        m.set(i, j, x);
        out
    }

    pub fn to_pd(&self) -> PdSeries {
        PdSeries::from_coefficients(&self.field, self.degree(), &self.coefficients)
            .expect("uniform rank")
    }

    /// Coefficientwise comparison at tracked precision.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.coefficients.len() == other.coefficients.len()
            && self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .all(|(a, b)| a.eq_at_precision(b))
    }
}

/// The recursion `A_{n+1} = A_n (n E'(π) + A1)`, factors taken left to right.
pub fn stratify(c: &HtCrystal, degree: usize) -> StratificationSeries {
    let field = c.field();
    let e_prime = field.e_prime();
    let mut out = vec![KMatrix::identity(field, c.rank())];
    for n in 0..degree {
        let factor = c.a1.shift(&e_prime.mul_int(&BigInt::from(n)));
        let next = &out[n] * &factor;
        out.push(next);
    }
    StratificationSeries {
        field: field.clone(),
        coefficients: out,
    }
}

/// Expands `(1 - E'(π) X)^B` with `B = -A1 / E'(π)` by the generalized
/// binomial theorem: the `X^[n]` coefficient is `(-E'(π))^n B(B-1)...(B-n+1)`.
pub fn binomial_series(c: &HtCrystal, degree: usize) -> Result<StratificationSeries> {
    let field = c.field();
    let e_prime = field.e_prime();
    let exponent = (-&c.a1).scale(&e_prime.inv()?);
    let d = c.rank();
    let mut falling = KMatrix::identity(field, d);
    let mut minus_c_pow = field.one();
    let mut out = vec![KMatrix::identity(field, d)];
    for n in 1..=degree {
        falling = &falling * &exponent.shift(&field.from_int(-(n as i64 - 1)));
        minus_c_pow = &minus_c_pow * &(-&e_prime);
        // (-c)^n C(B, n) is the ordinary X^n coefficient; X^n = n! X^[n].
        let nf = factorial(n as u64);
        let ordinary = falling.div_int(&nf).scale(&minus_c_pow);
        out.push(ordinary.mul_int(&nf));
    }
    Ok(StratificationSeries {
        field: field.clone(),
        coefficients: out,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CocycleResult {
    Holds(usize),
    FailsAtDegree {
        degree: usize,
        index: PdIndex,
        difference: KMatrix,
    },
}

/// The pullback `(X2 - X1)(1 - E'(π) X1)^{-1}` of `X` along the middle face.
pub fn middle_pullback(field: &LocalField, degree: usize) -> PdSeries {
    let diff = PdSeries::variable(field, 2, 2, degree)
        .try_sub(&PdSeries::variable(field, 2, 1, degree))
        .expect("same shape");
    pd_mul(&diff, &pd_geom_inv(&field.e_prime(), 2, 1, degree)).expect("same shape")
}

/// Compares `F(X2)` with `F(X1) F((X2 - X1)(1 - E'(π) X1)^{-1})` to total degree D.
pub fn cocycle_check(s: &StratificationSeries) -> Result<CocycleResult> {
    let degree = s.degree();
    if degree < 2 {
        return Err(Error::ShapeMismatch("cocycle check needs degree >= 2".into()));
    }
    let f = s.to_pd();
    let lhs = f.relabel(2);
    let rhs = pd_mul(&f.relabel(1), &pd_substitute(&f, &middle_pullback(&s.field, degree))?)?;
    Ok(match lhs.first_difference(&rhs)? {
        None => CocycleResult::Holds(degree),
        Some((index, difference)) => CocycleResult::FailsAtDegree {
            degree: index[0] + index[1],
            index,
            difference,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NearlyHT,
    NotNearlyHT,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NearlyHT => write!(f, "nearly-HT"),
            Verdict::NotNearlyHT => write!(f, "not-nearly-HT"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NhtEvidence {
    /// `e > 1`: valuations of the non-leading coefficients `c_0..c_{d-1}` of
    /// the characteristic polynomial; nearly-HT iff all are positive.
    Coefficients(Vec<Valuation>),
    /// `e = 1`: each residue class `i` in `0..p` with `iE'(π) + α ∈ 𝔪` and its
    /// multiplicity. Integral roots outside every class make up `unmatched`.
    /// If any root is non-integral no residues are taken and `non_integral = d`.
    Residues {
        classes: Vec<(u32, usize)>,
        unmatched: Option<FpPoly>,
        non_integral: usize,
    },
}

impl NhtEvidence {
    /// Total multiplicity accounted for; equals the rank.
    pub fn multiplicity(&self) -> usize {
        match self {
            NhtEvidence::Coefficients(v) => v.len(),
            NhtEvidence::Residues {
                classes,
                unmatched,
                non_integral,
            } => {
                classes.iter().map(|c| c.1).sum::<usize>()
                    + unmatched.as_ref().and_then(FpPoly::degree).unwrap_or(0)
                    + non_integral
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NhtVerdict {
    pub verdict: Verdict,
    pub evidence: NhtEvidence,
    pub charpoly: KPoly,
    /// Newton polygon of the characteristic polynomial, when certifiable.
    pub polygon: Option<NewtonPolygon>,
    pub e_prime_valuation: i64,
    /// `e - 1`, the valuation of `E'(π)` in the tame case.
    pub tame_threshold: i64,
    /// Verdict of the weight condition `w ∈ ℤ + p^{-(e-1)/e} 𝔪` for the
    /// weights `w = -α/E'(π)`; differs from `verdict` only under wild ramification.
    pub weight_condition: Verdict,
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::NearlyHT
    } else {
        Verdict::NotNearlyHT
    }
}

/// Decides whether every eigenvalue `α` of `A1` admits `i ∈ ℤ` with
/// `v_π(i E'(π) + α) > 0`, using only the characteristic polynomial.
pub fn nearly_ht_check(c: &HtCrystal) -> Result<NhtVerdict> {
    let field = c.field();
    let d = c.rank();
    let chi = c.a1.charpoly();
    let polygon = newton_polygon(&chi).ok();
    let e = field.e() as i64;
    let e_prime_valuation = field.e_prime_valuation();
    let zero = Q::from_integer(0);
    let vals: Vec<Valuation> = (0..d).map(|i| chi.coeff(i).valuation()).collect();

    // Weights w = -α/E'(π) lie in ℤ + p^{-(e-1)/e}𝔪 iff v_π(α) > t for e > 1,
    // since all shifts i E'(π) already exceed t. Scaling roots by π^{-t}:
    // v(c_{d-k}) > k t for all k.
    let t = e_prime_valuation - (e - 1);
    // Certifies v(c_i) > (d - i) * slope for every non-leading coefficient.
    let all_above = |slope: i64| -> Result<bool> {
        let mut ok = true;
        for (i, v) in vals.iter().enumerate() {
            let bound = Q::from_integer((d - i) as i64 * slope);
            if v.certainly_gt(bound) {
                continue;
            }
            if v.certainly_le(bound) {
                ok = false;
            } else {
                return Err(Error::PrecisionInsufficient(format!(
                    "cannot certify v(c_{i}) > {}",
                    fmt_q(&bound)
                )));
            }
        }
        Ok(ok)
    };

    if e > 1 {
        // Roots in 𝔪 iff every non-leading coefficient is in 𝔪.
        let ok = all_above(0)?;
        let weight_condition = if t == 0 { verdict_of(ok) } else { verdict_of(all_above(t)?) };
        return Ok(NhtVerdict {
            verdict: verdict_of(ok),
            evidence: NhtEvidence::Coefficients(vals),
            charpoly: chi,
            polygon,
            e_prime_valuation,
            tame_threshold: e - 1,
            weight_condition,
        });
    }

    // e = 1: integrality first, then residue classes of the roots.
    let non_integral: usize = match &polygon {
        Some(np) => np
            .root_valuations()
            .iter()
            .filter(|(v, _)| *v < zero)
            .map(|(_, m)| m)
            .sum(),
        None => {
            if vals.iter().all(|v| v.certainly_ge(zero)) {
                0
            } else {
                return Err(Error::PrecisionInsufficient(
                    "cannot certify integrality of the characteristic polynomial".into(),
                ));
            }
        }
    };
    let evidence = if non_integral > 0 {
        NhtEvidence::Residues {
            classes: vec![],
            unmatched: None,
            non_integral: d,
        }
    } else {
        let reduced = residue_reduce(&chi)?;
        let p = field.p();
        let c_bar = field.e_prime().residue()?;
        let mut rest = reduced;
        let mut classes = vec![];
        for i in 0..p {
            // root of x + i c̄
            let r = ((p as u64 - (i as u64 * c_bar as u64) % p as u64) % p as u64) as u32;
            let mut m = 0;
            while let Some(q) = rest.divide_linear(r) {
                rest = q;
                m += 1;
            }
            if m > 0 {
                classes.push((i, m));
            }
        }
        NhtEvidence::Residues {
            classes,
            unmatched: (!rest.is_one()).then(|| rest.monic()),
            non_integral: 0,
        }
    };
    let ok = matches!(
        &evidence,
        NhtEvidence::Residues { unmatched: None, non_integral: 0, .. }
    );
    Ok(NhtVerdict {
        verdict: verdict_of(ok),
        evidence,
        charpoly: chi,
        polygon,
        e_prime_valuation,
        tame_threshold: 0,
        weight_condition: verdict_of(ok),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome {
    ConvergedAt(usize),
    /// `v_π(det P_n)` failed to grow over `p` consecutive steps while below `d T`.
    BoundedBelowEvidence { step: usize, det_valuation: Q },
    Undetermined,
}

/// Walks the partial products `P_n = Π_{i<n} (i E'(π) + A1)`.
pub fn convergence_oracle(c: &HtCrystal, threshold: Q, budget: usize) -> OracleOutcome {
    let field = c.field();
    let d = c.rank() as i64;
    let p = field.p() as usize;
    let chi = c.a1.charpoly();
    let e_prime = field.e_prime();
    let sign = if d % 2 == 0 { field.one() } else { -field.one() };
    let mut product = KMatrix::identity(field, c.rank());
    // det(iE' + A1) = (-1)^d χ(-iE'); its valuation is accumulated per step.
    let mut det_vals: Vec<Valuation> = vec![Valuation::finite(0)];
    let cap = threshold * Q::from_integer(d);
    for n in 1..=budget {
        let shift = e_prime.mul_int(&BigInt::from(n as i64 - 1));
        product = &product * &c.a1.shift(&shift);
        if product.min_entry_valuation().certainly_ge(threshold) {
            return OracleOutcome::ConvergedAt(n);
        }
        let factor_det = &sign * &chi.eval(&-&shift);
        let v = det_vals[n - 1] + factor_det.valuation();
        det_vals.push(v);
        if n >= p {
            if let (Valuation::Finite(now), Valuation::Finite(before)) = (v, det_vals[n - p]) {
                if now <= before && now < cap {
                    return OracleOutcome::BoundedBelowEvidence {
                        step: n,
                        det_valuation: now,
                    };
                }
            }
        }
    }
    OracleOutcome::Undetermined
}

pub const DEFAULT_THRESHOLD: i64 = 8;
pub const DEFAULT_BUDGET: usize = 400;
