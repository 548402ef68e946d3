//! Opinion-dependent mutation probability `P(x)`.
//!
//! Three families are supported:
//!
//! * `Uniform`: `P(x) = p`
//! * `AsymmetricLinear`: `P(x) = alpha * (x - 0.5) + p`
//! * `SymmetricTent`: `alpha * (x - 0.25) + p` on `[0, 0.5]`,
//!   `-alpha * (x - 0.75) + p` on `(0.5, 1]`
//!
//! All three average to `p` over `[0, 1]`. Parameters that would push `P(x)`
//! outside `[0, 1]` are rejected instead of clamped, since clamping breaks that
//! mean.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Uniform,
    AsymmetricLinear,
    SymmetricTent,
}

impl ProfileKind {
    /// Name used in config files and on the command line.
    pub fn key(self) -> &'static str {
        match self {
            ProfileKind::Uniform => "uniform",
            ProfileKind::AsymmetricLinear => "asym",
            ProfileKind::SymmetricTent => "sym",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(ProfileKind::Uniform),
            "asym" => Ok(ProfileKind::AsymmetricLinear),
            "sym" => Ok(ProfileKind::SymmetricTent),
            other => Err(format!("unknown profile `{other}` (expected uniform|asym|sym)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("P({x}) = {value} lies outside [0, 1]")]
    Range { x: f64, value: f64 },
    #[error("uniform profile requires alpha = 0, got {0}")]
    UniformSlope(f64),
    #[error("opinion {0} lies outside [0, 1]")]
    Domain(f64),
    #[error("non-finite profile parameter")]
    NonFinite,
}

/// A validated mutation probability function. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationProfile<F> {
    kind: ProfileKind,
    base_rate: F,
    slope: F,
}

impl<F: Scalar> MutationProfile<F> {
    pub fn new(kind: ProfileKind, base_rate: F, slope: F) -> Result<Self, ProfileError> {
        let profile = MutationProfile {
            kind,
            base_rate,
            slope,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn uniform(p: F) -> Result<Self, ProfileError> {
        Self::new(ProfileKind::Uniform, p, F::zero())
    }

    pub fn asymmetric(p: F, alpha: F) -> Result<Self, ProfileError> {
        Self::new(ProfileKind::AsymmetricLinear, p, alpha)
    }

    pub fn symmetric(p: F, alpha: F) -> Result<Self, ProfileError> {
        Self::new(ProfileKind::SymmetricTent, p, alpha)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn base_rate(&self) -> F {
        self.base_rate
    }

    pub fn slope(&self) -> F {
        self.slope
    }

    /// Checks `P(x)` in `[0, 1]` on all of `[0, 1]`.
    ///
    /// Every family is piecewise linear, so the extrema sit at `x = 0`, `x = 1`
    /// and (for the tent) the breakpoint `x = 0.5`.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !self.base_rate.is_finite() || !self.slope.is_finite() {
            return Err(ProfileError::NonFinite);
        }
        if self.kind == ProfileKind::Uniform && self.slope != F::zero() {
            return Err(ProfileError::UniformSlope(to_f64(self.slope)));
        }
        let checkpoints: &[f64] = match self.kind {
            ProfileKind::SymmetricTent => &[0.0, 0.5, 1.0],
            _ => &[0.0, 1.0],
        };
        // a few ulps of slack so parameter pairs that touch 0 exactly still pass
        let slack = F::epsilon() * F::lit(8.0);
        for &x in checkpoints {
            let value = self.eval_unchecked(F::lit(x));
            if value < -slack || value > F::one() + slack {
                return Err(ProfileError::Range {
                    x,
                    value: to_f64(value),
                });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: F) -> Result<F, ProfileError> {
        if !(x >= F::zero() && x <= F::one()) {
            return Err(ProfileError::Domain(to_f64(x)));
        }
        Ok(self.eval_unchecked(x))
    }

    /// `evaluate` without the domain check, for the event loop where opinions
    /// are in range by construction.
    #[inline(always)]
    pub fn eval_unchecked(&self, x: F) -> F {
        let p = self.base_rate;
        let alpha = self.slope;
        match self.kind {
            ProfileKind::Uniform => p,
            ProfileKind::AsymmetricLinear => alpha * (x - F::lit(0.5)) + p,
            ProfileKind::SymmetricTent => {
                // x = 0.5 belongs to the left branch; both branches agree there.
                if x <= F::lit(0.5) {
                    alpha * (x - F::lit(0.25)) + p
                } else {
                    -alpha * (x - F::lit(0.75)) + p
                }
            }
        }
    }

    /// Exact mean of `P` over `[0, 1]`.
    ///
    /// The linear part integrates to zero in every family (odd about 0.5 for
    /// the asymmetric line, odd about 0.25 and 0.75 on each tent half), so the
    /// mean is the base rate.
    pub fn mean_rate(&self) -> F {
        self.base_rate
    }
}

fn to_f64<F: Scalar>(v: F) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
