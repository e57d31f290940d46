//! Floating-point abstraction used by scoring and inference.
//!
//! Counts are stored exactly as integers; every probability, log-score and
//! marginal is computed on demand in a caller-chosen float type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// floating point: f32 or f64
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from `f64`, used for configuration values like alpha.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn from_count(c: u64) -> Self {
        <Self as FromPrimitive>::from_u64(c).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `log(exp(a) + exp(b))`, exact for `-inf` operands.
pub fn log_add<F: Scalar>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    let max = a.max(b);
    max + ((a - max).exp() + (b - max).exp()).ln()
}

/// Log-sum-exp over an iterator of log values.
pub fn log_sum_exp<F: Scalar, I: IntoIterator<Item = F>>(xs: I) -> F {
    let xs: Vec<F> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return max;
    }
    let sum = xs.iter().fold(F::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_handles_neg_infinity() {
        assert_eq!(log_add(f64::NEG_INFINITY, 0.5), 0.5);
        assert_eq!(log_add(0.5f32, f32::NEG_INFINITY), 0.5);
        assert_eq!(
            log_add(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [-1.0f64, -2.0, -0.5, f64::NEG_INFINITY];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - direct).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }
}
