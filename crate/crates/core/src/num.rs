//! Scalar abstraction for the floating-point summaries (delay statistics,
//! demand percentages). Simulation time itself stays integral.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("count representable as float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static> Scalar for T {}
