//! Scalar abstractions.
//!
//! Exact arithmetic (moment recurrences, height distributions, matrix powers)
//! only needs a field, so it is written against [`Field`] and runs on `f32`,
//! `f64` and rationals alike. Anything that takes logarithms or square roots
//! needs [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Number type closed under `+ - * /` with integer embedding.
pub trait Field: Num + NumAssign + Clone + Debug + FromPrimitive + PartialOrd + Send + Sync {
    /// Lossy conversion used when a value leaves exact arithmetic.
    fn to_f64_lossy(&self) -> f64;

    fn from_count(n: u64) -> Self {
        <Self as FromPrimitive>::from_u64(n).expect("integer fits the scalar type")
    }

    /// `self^exp` by repeated squaring.
    fn powu(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            exp >>= 1;
        }
        acc
    }
}

/// Floating point field.
pub trait Real: Field + Float + Copy + 'static {}

impl Field for f32 {
    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
}
impl Field for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}
impl Real for f32 {}
impl Real for f64 {}

impl<I> Field for num_rational::Ratio<I>
where
    I: num_traits::PrimInt + num_integer::Integer + NumAssign + Debug + FromPrimitive + Send + Sync,
    num_rational::Ratio<I>: FromPrimitive + ToPrimitive,
{
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Converts an `f64` literal into the target float type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    <T as num_traits::NumCast>::from(x).expect("f64 converts to every Real")
}

/// Neumaier compensated summation.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry = carry + ((sum - t) + v);
        } else {
            carry = carry + ((v - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

/// Fixed-order pairwise summation: the result depends only on the order of
/// `values`, never on how the vector was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn powu_matches_repeated_product() {
        assert_eq!(3.0_f64.powu(5), 243.0);
        assert_eq!(Rational64::new(1, 2).powu(3), Rational64::new(1, 8));
        assert_eq!(7_f32.powu(0), 1.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn pairwise_sum_small_and_large() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
