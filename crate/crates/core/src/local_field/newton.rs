use std::fmt;

use super::KPoly;
use crate::error::{Error, Result};
use crate::valuation::{fmt_q, Valuation, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub slope: Q,
    pub length: usize,
}

/// Lower convex hull of `(i, v_π(f_i))` with slopes strictly increasing.
/// Roots at zero (the x-adic order of `f`) are counted separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub segments: Vec<Segment>,
    pub zero_roots: usize,
}

impl NewtonPolygon {
    /// Multiset of nonzero-root valuations as `(valuation, multiplicity)`,
    /// ordered by increasing valuation.
    pub fn root_valuations(&self) -> Vec<(Q, usize)> {
        self.segments
            .iter()
            .rev()
            .map(|s| (-s.slope, s.length))
            .collect()
    }

    pub fn total_length(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

impl fmt::Display for NewtonPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| format!("{}x{}", fmt_q(&s.slope), s.length))
            .collect();
        write!(f, "[{}]", parts.join(", "))?;
        if self.zero_roots > 0 {
            write!(f, " + {} root(s) at 0", self.zero_roots)?;
        }
        Ok(())
    }
}

fn cross(o: (i64, Q), a: (i64, Q), b: (i64, Q)) -> Q {
    Q::from_integer(a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * Q::from_integer(b.0 - o.0)
}

/// Newton polygon of `f`, certified against tracked precision.
///
/// Every hull vertex must have an exactly known valuation, and every
/// coefficient known only up to `O(π^b)` must satisfy `b >= hull(i)`.
pub fn newton_polygon(f: &KPoly) -> Result<NewtonPolygon> {
    let Some(deg) = f.degree() else {
        return Err(Error::PrecisionInsufficient(
            "Newton polygon of the zero polynomial".into(),
        ));
    };
    let vals: Vec<Valuation> = f.coeffs().iter().map(|c| c.valuation()).collect();
    let lo = vals
        .iter()
        .position(|v| *v != Valuation::Infinite)
        .expect("nonzero polynomial has a non-exact-zero coefficient");
    for (idx, label) in [(lo, "lowest"), (deg, "leading")] {
        if !matches!(vals[idx], Valuation::Finite(_)) {
            return Err(Error::PrecisionInsufficient(format!(
                "{label} coefficient x^{idx} is indistinguishable from zero"
            )));
        }
    }
    let points: Vec<(i64, Q)> = vals
        .iter()
        .enumerate()
        .skip(lo)
        .filter_map(|(i, v)| v.exact().map(|y| (i as i64, y)))
        .collect();
    let mut hull: Vec<(i64, Q)> = Vec::new();
    for &pt in &points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= Q::from_integer(0) {
            hull.pop();
        }
        hull.push(pt);
    }
    let segments: Vec<Segment> = hull
        .windows(2)
        .map(|w| Segment {
            slope: (w[1].1 - w[0].1) / Q::from_integer(w[1].0 - w[0].0),
            length: (w[1].0 - w[0].0) as usize,
        })
        .collect();
    // Uncertain points must not be able to dent the hull.
    for (i, v) in vals.iter().enumerate().skip(lo) {
        if let Valuation::AtLeast(bound) = v {
            let i = i as i64;
            let k = hull.windows(2).position(|w| w[0].0 <= i && i <= w[1].0).unwrap();
            let (a, b) = (hull[k], hull[k + 1]);
            let line = a.1 + (b.1 - a.1) * Q::from_integer(i - a.0) / Q::from_integer(b.0 - a.0);
            if *bound < line {
                return Err(Error::PrecisionInsufficient(format!(
                    "coefficient x^{i} known only to valuation >= {} below hull value {}",
                    fmt_q(bound),
                    fmt_q(&line)
                )));
            }
        }
    }
    Ok(NewtonPolygon {
        segments,
        zero_roots: lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_field::{field_make, KElement, LocalField};
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn qp(p: u32) -> LocalField {
        field_make(p, &[q(-(p as i64)), q(1)]).unwrap()
    }

    #[test]
    fn split_roots_one_and_p() {
        let k = qp(5);
        let f = KPoly::from_roots(&k, &[k.from_int(1), k.from_int(5)]);
        let np = newton_polygon(&f).unwrap();
        assert_eq!(
            np.segments,
            vec![
                Segment { slope: Q::from_integer(-1), length: 1 },
                Segment { slope: Q::from_integer(0), length: 1 },
            ]
        );
        assert_eq!(np.root_valuations(), vec![(Q::from_integer(0), 1), (Q::from_integer(1), 1)]);
    }

    #[test]
    fn square_root_of_p() {
        let k = qp(3);
        let f = KPoly::new(&k, vec![k.from_int(-3), k.zero(), k.one()]);
        let np = newton_polygon(&f).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: Q::new(-1, 2), length: 2 }]);
    }

    #[test]
    fn pure_power_has_no_segments() {
        let k = qp(2);
        let f = KPoly::new(&k, vec![k.zero(), k.zero(), k.zero(), k.one()]);
        let np = newton_polygon(&f).unwrap();
        assert!(np.segments.is_empty());
        assert_eq!(np.zero_roots, 3);
    }

    #[test]
    fn uncertain_vertex_is_rejected() {
        let k = qp(5);
        let tiny: KElement = &k.from_int(1) - &k.from_int(1);
        let f = KPoly::new(&k, vec![tiny, k.one()]);
        assert!(matches!(newton_polygon(&f), Err(Error::PrecisionInsufficient(_))));
    }

    #[test]
    fn uncertain_point_above_hull_is_fine() {
        let k = qp(5);
        let tiny: KElement = &k.from_int(1) - &k.from_int(1);
        let f = KPoly::new(&k, vec![k.one(), tiny, k.one()]);
        let np = newton_polygon(&f).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: Q::from_integer(0), length: 2 }]);
    }
}
