//! Floating point scalar used for opinions, probabilities and densities.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;

/// f32 or f64.
///
/// Everything the engine computes on opinions is generic over this trait; the
/// crate root exports `f64` aliases for the common case.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// One uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless for every literal the engine uses (0.5, 0.25, bin counts).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

macro_rules! impl_scalar {
    ($($t:ty)*) => ($(
        impl Scalar for $t {
            #[inline(always)]
            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    )*)
}

impl_scalar!(f32 f64);
