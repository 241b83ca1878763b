//! Coefficient abstraction. The engine is written against any exact field
//! implementing the standard `num-traits` interfaces; [`crate::Rat`] is the
//! intended instantiation. Floating-point scalars compile too, but the
//! certification identities are only meaningful with exact arithmetic.

use num_traits::{FromPrimitive, One, Zero};
use std::fmt::{Debug, Display};
use std::ops::{Div, Neg, Sub};

pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
    + FromPrimitive
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + Debug
        + Display
        + Zero
        + One
        + Neg<Output = T>
        + Sub<Output = T>
        + Div<Output = T>
        + FromPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Exact integer literal as a scalar.
pub fn int<C: Scalar>(n: i64) -> C {
    C::from_i64(n).expect("integer literal representable in scalar")
}

/// Exact ratio p/q as a scalar.
pub fn ratio<C: Scalar>(p: i64, q: i64) -> C {
    int::<C>(p) / int::<C>(q)
}
