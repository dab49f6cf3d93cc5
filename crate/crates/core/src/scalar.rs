//! Scalar abstraction shared by every operator builder.
//!
//! Construction code only needs field arithmetic, ordering and absolute
//! values, so it runs unchanged on `f64`, `f32` and exact rationals. Spectral
//! work needs a real floating point field and is restricted to
//! [`nalgebra::RealField`] types.

use nalgebra::{ClosedAddAssign, ClosedDivAssign, ClosedMulAssign, ClosedSubAssign, DMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field usable as the entry type of every constructed matrix.
pub trait Scalar:
    nalgebra::Scalar
    + Num
    + Signed
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + ClosedAddAssign
    + ClosedSubAssign
    + ClosedMulAssign
    + ClosedDivAssign
    + Send
    + Sync
{
    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("integer representable in scalar type")
    }

    /// Lossy conversion for tolerances and reporting.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 representable in scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: nalgebra::Scalar
        + Num
        + Signed
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + ClosedAddAssign
        + ClosedSubAssign
        + ClosedMulAssign
        + ClosedDivAssign
        + Send
        + Sync
{
}

/// Arbitrary precision rational used for exact identity checks.
pub type Rational = BigRational;

/// `num / den` as an exact rational.
pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// Largest absolute entry, `0` when empty.
pub fn max_abs<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| max_of(acc, v.abs()))
}

/// `Σ_i |m_ij|` maximised over rows.
pub fn inf_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|row| row.iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), max_of)
}

/// Entrywise lossy conversion, used to hand exact matrices to eigensolvers.
pub fn to_f64_matrix<T: Scalar>(m: &DMatrix<T>) -> DMatrix<f64> {
    m.map(|v| v.to_f64_lossy())
}

pub(crate) fn diag<T: Scalar>(d: &[T]) -> DMatrix<T> {
    let mut m = DMatrix::zeros(d.len(), d.len());
    for (i, v) in d.iter().enumerate() {
        m[(i, i)] = v.clone();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_satisfy_the_scalar_bound() {
        fn takes<T: Scalar>(a: T, b: T) -> T {
            a / b
        }
        assert_eq!(takes(rational(1, 3), rational(2, 3)), rational(1, 2));
        assert_eq!(takes(1.0f32, 4.0), 0.25);
    }

    #[test]
    fn norms() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 2.0, 0.5]);
        assert_eq!(max_abs(&m), 3.0);
        assert_eq!(inf_norm(&m), 4.0);
    }
}
