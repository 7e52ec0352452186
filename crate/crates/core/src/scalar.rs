//! Scalar abstraction shared by the channel model, rate oracles and bound catalog.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;

/// Real field usable by the generic layers (`f32`, `f64`).
pub trait Scalar:
    RealField + Copy + num_traits::ToPrimitive + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type C<T> = Complex<T>;
pub type CVec<T> = DVector<Complex<T>>;
pub type CMat<T> = DMatrix<Complex<T>>;

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq<T: Scalar>(x: &CVec<T>) -> T {
    x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Squared Frobenius norm.
pub fn fro_sq<T: Scalar>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `a^H b`.
pub fn inner<T: Scalar>(a: &CVec<T>, b: &CVec<T>) -> Complex<T> {
    a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * *y)
}

pub fn cast_vec<A: Scalar, B: Scalar>(x: &CVec<A>) -> CVec<B> {
    x.map(|z| Complex::new(B::lit(z.re.to_f64_lossy()), B::lit(z.im.to_f64_lossy())))
}

pub fn cast_mat<A: Scalar, B: Scalar>(x: &CMat<A>) -> CMat<B> {
    x.map(|z| Complex::new(B::lit(z.re.to_f64_lossy()), B::lit(z.im.to_f64_lossy())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_conjugates_left() {
        let a = CVec::from_vec(vec![Complex::new(0.0, 1.0)]);
        let b = CVec::from_vec(vec![Complex::new(0.0, 1.0)]);
        assert_eq!(inner(&a, &b), Complex::new(1.0, 0.0));
        assert_eq!(norm_sq(&a), 1.0);
    }

    #[test]
    fn f32_and_f64_agree() {
        let x = CVec::from_vec(vec![Complex::new(0.5f64, -2.0), Complex::new(3.0, 0.25)]);
        let y: CVec<f32> = cast_vec(&x);
        assert!((norm_sq(&y) as f64 - norm_sq(&x)).abs() < 1e-5);
    }
}
