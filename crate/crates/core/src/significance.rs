use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::ConfigError;

/// Number of discrete significance levels tracked by the history policy.
pub const LEVELS: usize = 101;

/// Relative importance of a task for output quality, in `[0.0, 1.0]`.
///
/// `1.0` forces accurate execution under every policy and `0.0` forces
/// non-accurate execution under every significance-aware policy.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Significance(f64);

impl Significance {
    pub const ACCURATE: Significance = Significance(1.0);
    pub const APPROXIMATE: Significance = Significance(0.0);

    pub fn new(value: f64) -> Result<Self, ConfigError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Significance(value))
        } else {
            Err(ConfigError::SignificanceOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn level(self) -> DiscreteLevel {
        DiscreteLevel((self.0 * 100.0).round() as u8)
    }

    /// Unconditionally accurate.
    pub fn is_forced_accurate(self) -> bool {
        self.0 >= 1.0
    }

    /// Unconditionally approximate (or dropped).
    pub fn is_forced_approximate(self) -> bool {
        self.0 <= 0.0
    }

    /// Total order used for sorting; values are never NaN.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl TryFrom<f64> for Significance {
    type Error = ConfigError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Significance::new(value)
    }
}

impl From<Significance> for f64 {
    fn from(s: Significance) -> f64 {
        s.0
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// One of the 101 integer levels `round(significance * 100)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscreteLevel(u8);

impl DiscreteLevel {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Validates a per-group accurate ratio.
pub fn check_ratio(ratio: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(ratio)
    } else {
        Err(ConfigError::RatioOutOfRange(ratio))
    }
}

/// Number of accurate tasks out of `n` demanded by `ratio`, rounded up.
///
/// A tiny slack absorbs products such as `0.35 * 20 = 7.000000000000001`.
pub fn accurate_quota(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    let q = (exact - 1e-9).ceil();
    (q.max(0.0) as usize).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(Significance::new(-0.01).is_err());
        assert!(Significance::new(1.01).is_err());
        assert!(Significance::new(f64::NAN).is_err());
        assert!(Significance::new(0.0).is_ok());
        assert!(Significance::new(1.0).is_ok());
    }

    #[test]
    fn level_endpoints() {
        assert_eq!(Significance::new(0.0).unwrap().level().index(), 0);
        assert_eq!(Significance::new(1.0).unwrap().level().index(), 100);
        assert_eq!(Significance::new(0.355).unwrap().level().index(), 36);
    }

    #[test]
    fn quota_rounds_up_with_slack() {
        assert_eq!(accurate_quota(0.35, 20), 7);
        assert_eq!(accurate_quota(0.35, 512), 180);
        assert_eq!(accurate_quota(0.6, 10), 6);
        assert_eq!(accurate_quota(0.0, 10), 0);
        assert_eq!(accurate_quota(1.0, 10), 10);
        assert_eq!(accurate_quota(0.01, 10), 1);
    }

    #[test]
    fn ratio_validation() {
        assert!(check_ratio(1.2).is_err());
        assert!(check_ratio(-0.1).is_err());
        assert_eq!(check_ratio(0.35).unwrap(), 0.35);
    }

    proptest! {
        #[test]
        fn level_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lo = Significance::new(lo).unwrap().level();
            let hi = Significance::new(hi).unwrap().level();
            prop_assert!(lo <= hi);
            prop_assert!(hi.index() < LEVELS);
        }
    }
}
