//! Extended naturals and prediction intervals.
//!
//! Every prediction in this crate is a [`TimeInterval`] `(lo, hi)` counted in
//! observations. `lo` is the number of observations that will certainly pass
//! before the fault, `hi` the number after which the fault certainly holds.
//! Both bounds live in [`ExtNat`], the naturals extended with `inf`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A natural number or infinity. `Fin(_) < Inf` for every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtNat {
    Fin(u32),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            ExtNat::Fin(v) => Some(v),
            ExtNat::Inf => None,
        }
    }

    /// Saturating decrement: `0` and `inf` are fixed points.
    pub fn dec(self) -> ExtNat {
        match self {
            ExtNat::Fin(v) => ExtNat::Fin(v.saturating_sub(1)),
            ExtNat::Inf => ExtNat::Inf,
        }
    }

    /// Adds a finite amount; `inf` absorbs.
    pub fn plus(self, k: u32) -> ExtNat {
        match self {
            ExtNat::Fin(v) => ExtNat::Fin(v + k),
            ExtNat::Inf => ExtNat::Inf,
        }
    }

    /// JSON value: a number, or the string `"inf"`.
    pub fn to_json(self) -> serde_json::Value {
        match self {
            ExtNat::Fin(v) => serde_json::Value::from(v),
            ExtNat::Inf => serde_json::Value::from("inf"),
        }
    }
}

impl From<u32> for ExtNat {
    fn from(v: u32) -> Self {
        ExtNat::Fin(v)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected a natural number or `inf`, got `{0}`")]
pub struct ParseExtNatError(pub String);

impl FromStr for ExtNat {
    type Err = ParseExtNatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "inf" {
            return Ok(ExtNat::Inf);
        }
        s.parse::<u32>()
            .map(ExtNat::Fin)
            .map_err(|_| ParseExtNatError(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid interval ({lo},{hi}): bounds must satisfy lo <= hi")]
pub struct InvalidInterval {
    pub lo: ExtNat,
    pub hi: ExtNat,
}

/// A time interval `(lo, hi)` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    lo: ExtNat,
    hi: ExtNat,
}

impl TimeInterval {
    /// The vacuous prediction `(0, inf)`.
    pub const VACUOUS: TimeInterval = TimeInterval {
        lo: ExtNat::ZERO,
        hi: ExtNat::Inf,
    };

    /// The "fault impossible" prediction `(inf, inf)`.
    pub const NEVER: TimeInterval = TimeInterval {
        lo: ExtNat::Inf,
        hi: ExtNat::Inf,
    };

    pub fn new(lo: impl Into<ExtNat>, hi: impl Into<ExtNat>) -> Result<Self, InvalidInterval> {
        let (lo, hi) = (lo.into(), hi.into());
        // With the derived order `lo = inf` already forces `hi = inf`.
        if lo > hi {
            return Err(InvalidInterval { lo, hi });
        }
        Ok(TimeInterval { lo, hi })
    }

    pub fn lo(&self) -> ExtNat {
        self.lo
    }

    pub fn hi(&self) -> ExtNat {
        self.hi
    }

    /// `(lo ⊖ 1, hi ⊖ 1)`.
    pub fn decrement(&self) -> TimeInterval {
        TimeInterval {
            lo: self.lo.dec(),
            hi: self.hi.dec(),
        }
    }

    /// `self ⊆ other`, reading both as ranges of naturals.
    pub fn is_subset(&self, other: &TimeInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_strict_subset(&self, other: &TimeInterval) -> bool {
        self.is_subset(other) && self != other
    }

    /// Smallest interval containing both; may contain values in neither.
    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(vec![self.lo.to_json(), self.hi.to_json()])
    }
}

impl PartialOrd for TimeInterval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.is_subset(other), other.is_subset(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ExtNat::{Fin, Inf};

    fn iv(lo: ExtNat, hi: ExtNat) -> TimeInterval {
        TimeInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(iv(Fin(0), Inf), TimeInterval::VACUOUS);
        let t = iv(Fin(1), Fin(2));
        assert_eq!((t.lo(), t.hi()), (Fin(1), Fin(2)));
        assert_eq!(
            TimeInterval::new(3, 1),
            Err(InvalidInterval {
                lo: Fin(3),
                hi: Fin(1)
            })
        );
        assert!(TimeInterval::new(Inf, Fin(4)).is_err());
        assert_eq!(iv(Inf, Inf), TimeInterval::NEVER);
    }

    #[test]
    fn decrement_saturates() {
        assert_eq!(iv(Fin(3), Fin(5)).decrement(), iv(Fin(2), Fin(4)));
        assert_eq!(iv(Fin(0), Inf).decrement(), iv(Fin(0), Inf));
        assert_eq!(iv(Fin(1), Inf).decrement(), iv(Fin(0), Inf));
    }

    #[test]
    fn subset() {
        let (a, b) = (iv(Fin(1), Fin(2)), iv(Fin(0), Fin(5)));
        assert!(a.is_subset(&b) && a.is_strict_subset(&b));
        let c = iv(Fin(2), Fin(3));
        assert!(c.is_subset(&c) && !c.is_strict_subset(&c));
        let (d, e) = (iv(Fin(1), Fin(1)), iv(Fin(1), Fin(2)));
        assert!(d.is_subset(&e) && d.is_strict_subset(&e));
        assert!(!e.is_subset(&d));
    }

    #[test]
    fn hull_examples() {
        assert_eq!(
            iv(Fin(1), Fin(2)).hull(&iv(Fin(3), Fin(7))),
            iv(Fin(1), Fin(7))
        );
        assert_eq!(
            iv(Fin(2), Fin(2)).hull(&iv(Fin(2), Fin(2))),
            iv(Fin(2), Fin(2))
        );
        assert_eq!(iv(Fin(0), Fin(1)).hull(&iv(Fin(5), Inf)), iv(Fin(0), Inf));
    }

    #[test]
    fn ext_nat_text() {
        assert_eq!("inf".parse::<ExtNat>(), Ok(Inf));
        assert_eq!("17".parse::<ExtNat>(), Ok(Fin(17)));
        assert!("-1".parse::<ExtNat>().is_err());
        assert_eq!(Inf.to_string(), "inf");
        assert_eq!(iv(Fin(2), Inf).to_string(), "(2,inf)");
    }

    fn ext() -> impl Strategy<Value = ExtNat> {
        prop_oneof![4 => (0u32..12).prop_map(Fin), 1 => Just(Inf)]
    }

    fn interval() -> impl Strategy<Value = TimeInterval> {
        (ext(), ext()).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn hull_is_least_upper_bound(a in interval(), b in interval(), c in interval()) {
            let h = a.hull(&b);
            prop_assert_eq!(h, b.hull(&a));
            prop_assert_eq!(a.hull(&a), a);
            prop_assert_eq!(h.hull(&c), a.hull(&b.hull(&c)));
            prop_assert!(a.is_subset(&h) && b.is_subset(&h));
            if a.is_subset(&c) && b.is_subset(&c) {
                prop_assert!(h.is_subset(&c));
            }
        }

        #[test]
        fn decrement_is_monotone(a in interval(), b in interval()) {
            if a.is_subset(&b) {
                prop_assert!(a.decrement().is_subset(&b.decrement()));
            }
        }
    }
}
