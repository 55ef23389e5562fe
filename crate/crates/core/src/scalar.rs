//! Floating-point scalar abstraction shared by graphs, filters and metrics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point type usable for graph signals and operators.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant, rounding to the nearest representable value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    /// Widens to `f64` for reporting and dense verification routines.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_constants() {
        assert_eq!(f64::of(0.1), 0.1);
        assert_eq!(f32::of(0.5), 0.5f32);
        assert_eq!(2.5f32.as_f64(), 2.5);
    }
}
