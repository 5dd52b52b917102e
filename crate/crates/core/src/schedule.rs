//! Interpolation schedules `f_i(τ)`, `f_f(τ)` and their τ-derivatives.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `f_i = cos²(πτ/2)`, `f_f = sin²(πτ/2)`.
    #[default]
    CosSin,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos-sin" => Ok(Self::CosSin),
            other => Err(Error::InvalidParameter(format!("unknown schedule '{other}'"))),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CosSin => f.write_str("cos-sin"),
        }
    }
}

/// Schedule values at one τ. Derivatives are with respect to τ; divide by
/// `t_a` for time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub f_i: f64,
    pub f_f: f64,
    pub df_i: f64,
    pub df_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    pub kind: ScheduleKind,
}

impl Schedule {
    pub const COS_SIN: Schedule = Schedule {
        kind: ScheduleKind::CosSin,
    };

    pub fn new(kind: ScheduleKind) -> Self {
        Self { kind }
    }

    pub fn evaluate(&self, tau: f64) -> Result<ScheduleValues> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::TauOutOfRange(tau));
        }
        Ok(self.evaluate_unchecked(tau))
    }

    /// Same as [`Schedule::evaluate`] without the range check; used in the
    /// integrator hot loop where τ is known to be in range.
    pub fn evaluate_unchecked(&self, tau: f64) -> ScheduleValues {
        match self.kind {
            ScheduleKind::CosSin => {
                let (s, c) = (FRAC_PI_2 * tau).sin_cos();
                // exact endpoints; sin(π) is not zero in floating point
                let sin_pi_tau = if tau == 0.0 || tau == 1.0 {
                    0.0
                } else {
                    (PI * tau).sin()
                };
                let (f_i, f_f) = match tau {
                    t if t == 0.0 => (1.0, 0.0),
                    t if t == 1.0 => (0.0, 1.0),
                    _ => (c * c, s * s),
                };
                ScheduleValues {
                    f_i,
                    f_f,
                    df_i: -FRAC_PI_2 * sin_pi_tau,
                    df_f: FRAC_PI_2 * sin_pi_tau,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_values() {
        let s = Schedule::COS_SIN;
        let v0 = s.evaluate(0.0).unwrap();
        assert_eq!((v0.f_i, v0.f_f, v0.df_i, v0.df_f), (1.0, 0.0, 0.0, 0.0));
        let v1 = s.evaluate(1.0).unwrap();
        assert_eq!((v1.f_i, v1.f_f, v1.df_i, v1.df_f), (0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn midpoint() {
        let v = Schedule::COS_SIN.evaluate(0.5).unwrap();
        assert!((v.f_i - 0.5).abs() < 1e-15);
        assert!((v.f_f - 0.5).abs() < 1e-15);
        assert!((v.df_i + FRAC_PI_2).abs() < 1e-15);
        assert!((v.df_f - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(
            Schedule::COS_SIN.evaluate(1.5),
            Err(Error::TauOutOfRange(1.5))
        );
        assert!(Schedule::COS_SIN.evaluate(-1e-3).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("cos-sin".parse::<ScheduleKind>().unwrap(), ScheduleKind::CosSin);
        assert!("linear".parse::<ScheduleKind>().is_err());
    }

    proptest! {
        #[test]
        fn sums_and_derivatives(tau in 0.0f64..=1.0) {
            let v = Schedule::COS_SIN.evaluate(tau).unwrap();
            prop_assert!((v.f_i + v.f_f - 1.0).abs() < 1e-14);
            prop_assert!((v.df_i + v.df_f).abs() < 1e-14);
        }

        #[test]
        fn derivative_matches_central_difference(tau in 1e-4f64..(1.0 - 1e-4)) {
            let s = Schedule::COS_SIN;
            let d = 1e-5;
            let (lo, hi) = (s.evaluate(tau - d).unwrap(), s.evaluate(tau + d).unwrap());
            let v = s.evaluate(tau).unwrap();
            prop_assert!(((hi.f_i - lo.f_i) / (2.0 * d) - v.df_i).abs() < 1e-8);
            prop_assert!(((hi.f_f - lo.f_f) / (2.0 * d) - v.df_f).abs() < 1e-8);
        }
    }
}
