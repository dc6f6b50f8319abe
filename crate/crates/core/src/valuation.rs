use std::fmt;
use std::ops::Add;

use num_rational::Ratio;
use num_traits::Zero;

/// Exact rational used for valuations and Newton slopes.
pub type Q = Ratio<i64>;

/// A valuation as far as tracked precision can certify it.
///
/// `AtLeast(b)` means every tracked digit vanished: the true valuation is
/// `b` or more, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Q),
    AtLeast(Q),
    Infinite,
}

impl Valuation {
    pub fn finite(v: i64) -> Self {
        Valuation::Finite(Q::from_integer(v))
    }

    pub fn at_least(v: i64) -> Self {
        Valuation::AtLeast(Q::from_integer(v))
    }

    /// The exact value, when certified.
    pub fn exact(&self) -> Option<Q> {
        match self {
            Valuation::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Best known lower bound; `None` for the exact zero.
    pub fn lower_bound(&self) -> Option<Q> {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => Some(*v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        !matches!(self, Valuation::AtLeast(_))
    }

    /// True when the valuation is provably `>= t`.
    pub fn certainly_ge(&self, t: Q) -> bool {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => *v >= t,
            Valuation::Infinite => true,
        }
    }

    /// True when the valuation is provably `> t`.
    pub fn certainly_gt(&self, t: Q) -> bool {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => *v > t,
            Valuation::Infinite => true,
        }
    }

    /// True when the valuation is provably `< t`.
    pub fn certainly_lt(&self, t: Q) -> bool {
        matches!(self, Valuation::Finite(v) if *v < t)
    }

    /// True when the valuation is provably `<= t`.
    pub fn certainly_le(&self, t: Q) -> bool {
        matches!(self, Valuation::Finite(v) if *v <= t)
    }

    pub fn min(self, other: Valuation) -> Valuation {
        use Valuation::*;
        match (self, other) {
            (Infinite, x) | (x, Infinite) => x,
            (Finite(a), Finite(b)) => Finite(a.min(b)),
            (Finite(a), AtLeast(b)) | (AtLeast(b), Finite(a)) => {
                if a < b {
                    Finite(a)
                } else {
                    AtLeast(b)
                }
            }
            (AtLeast(a), AtLeast(b)) => AtLeast(a.min(b)),
        }
    }
}

impl Add for Valuation {
    type Output = Valuation;

    fn add(self, rhs: Valuation) -> Valuation {
        use Valuation::*;
        match (self, rhs) {
            (Infinite, _) | (_, Infinite) => Infinite,
            (Finite(a), Finite(b)) => Finite(a + b),
            (Finite(a), AtLeast(b)) | (AtLeast(a), Finite(b)) | (AtLeast(a), AtLeast(b)) => {
                AtLeast(a + b)
            }
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{}", fmt_q(v)),
            Valuation::AtLeast(v) => write!(f, ">={}", fmt_q(v)),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub(crate) fn fmt_q(q: &Q) -> String {
    if q.denom().is_zero() || *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
