//! Scalar abstraction for the geometry and routing core.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + std::fmt::Debug {}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + std::fmt::Debug {}
