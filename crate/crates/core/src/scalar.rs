//! Number types the rate arithmetic is generic over.
//!
//! `f64` is the working type. [`Exact`] (arbitrary-precision rationals) is
//! used to witness identities that must hold exactly; every finite `f64` is a
//! dyadic rational, so inputs convert without loss.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

pub type Exact = BigRational;

pub trait RateScalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    fn from_f64(x: f64) -> Self;

    fn from_u64(k: u64) -> Self;

    fn to_f64(&self) -> f64;

    fn powu(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }
}

impl RateScalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_u64(k: u64) -> Self {
        k as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powu(&self, k: u32) -> Self {
        self.powi(k as i32)
    }
}

impl RateScalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }

    fn from_u64(k: u64) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
