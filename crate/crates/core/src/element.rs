use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use crate::microkernels::KernelRegistry;
use crate::types::ElemType;

/// Floating point element types the kernels are instantiated for.
pub trait Element:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const ELEM: ElemType;
    const ZERO: Self;
    const ONE: Self;
    /// Machine epsilon (one ulp at 1.0).
    const EPSILON: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn bits(self) -> u64;

    /// Micro-kernels compiled for this element type.
    fn kernels() -> &'static KernelRegistry<Self>;
}

impl Element for f32 {
    const ELEM: ElemType = ElemType::F32;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const EPSILON: Self = f32::EPSILON;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn abs(self) -> Self {
        f32::abs(self)
    }
    #[inline]
    fn bits(self) -> u64 {
        self.to_bits() as u64
    }

    fn kernels() -> &'static KernelRegistry<Self> {
        crate::microkernels::registry::f32_registry()
    }
}

impl Element for f64 {
    const ELEM: ElemType = ElemType::F64;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const EPSILON: Self = f64::EPSILON;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn bits(self) -> u64 {
        self.to_bits()
    }

    fn kernels() -> &'static KernelRegistry<Self> {
        crate::microkernels::registry::f64_registry()
    }
}
