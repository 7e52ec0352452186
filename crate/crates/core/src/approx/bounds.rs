//! Scalar bound catalog. Each function returns the coefficients of a surrogate
//! that is tight at the expansion point.

use crate::error::{Error, Result};
use crate::scalar::{inner, norm_sq, CVec, Scalar};

fn positive<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {}", x.to_f64_lossy())))
    }
}

/// `ln(1 + γ) / t`.
pub fn zeta<T: Scalar>(gamma: T, t: T) -> T {
    gamma.ln_1p() / t
}

/// `(A, B, C)` with `A − B/γ − C t ≤ ln(1 + γ)/t` for all `γ, t > 0`.
pub fn zeta_minorant<T: Scalar>(gamma0: T, t0: T) -> Result<(T, T, T)> {
    positive("gamma0", gamma0)?;
    positive("t0", t0)?;
    let z = zeta(gamma0, t0);
    let one = T::one();
    let two = one + one;
    let a = two * z + gamma0 / (t0 * (gamma0 + one));
    let b = gamma0 * gamma0 / (t0 * (gamma0 + one));
    let c = z / t0;
    Ok((a, b, c))
}

/// Tangent `(a, b)` of `ln(1 + x)` at `x0`: `a + b x ≥ ln(1 + x)` for `x ≥ 0`.
pub fn log_majorant<T: Scalar>(x0: T) -> Result<(T, T)> {
    if !(x0 >= T::zero() && x0.is_finite()) {
        return Err(Error::Domain(format!("x0 must be nonnegative, got {}", x0.to_f64_lossy())));
    }
    let one = T::one();
    Ok((x0.ln_1p() - x0 / (one + x0), one / (one + x0)))
}

/// `2 Re{x0^H x} − ‖x0‖²`, a global minorant of `‖x‖²`.
pub fn normsq_minorant<T: Scalar>(x0: &CVec<T>, x: &CVec<T>) -> T {
    let two = T::one() + T::one();
    two * inner(x0, x).re - norm_sq(x0)
}

/// `(c_z, c_y)` with `√(y z) ≤ c_z z + c_y y` for `y, z ≥ 0`.
pub fn sqrt_prod_majorant<T: Scalar>(y0: T, z0: T) -> Result<(T, T)> {
    positive("y0", y0)?;
    positive("z0", z0)?;
    let two = T::one() + T::one();
    Ok((y0.sqrt() / (two * z0.sqrt()), z0.sqrt() / (two * y0.sqrt())))
}

/// `2 Re{x0^H x}/t0 − ‖x0‖² t/t0²`, a minorant of `‖x‖²/t` for `t > 0`.
pub fn quad_over_lin_minorant<T: Scalar>(x0: &CVec<T>, t0: T, x: &CVec<T>, t: T) -> Result<T> {
    positive("t0", t0)?;
    let two = T::one() + T::one();
    Ok(two * inner(x0, x).re / t0 - norm_sq(x0) * t / (t0 * t0))
}

/// `½(β²/(β0 α0) + β0/(2α − α0))`, a majorant of `β/α` where `2α > α0`.
pub fn ratio_majorant<T: Scalar>(beta0: T, alpha0: T, beta: T, alpha: T) -> Result<T> {
    positive("beta0", beta0)?;
    positive("alpha0", alpha0)?;
    let two = T::one() + T::one();
    let d = two * alpha - alpha0;
    positive("2α − α0", d)?;
    Ok((beta * beta / (beta0 * alpha0) + beta0 / d) / two)
}

/// `2√(l0 l)/t0 − l0 t/t0²`, a minorant of `l/t` for `l ≥ 0`, `t > 0`.
pub fn quotient_minorant<T: Scalar>(l0: T, t0: T, l: T, t: T) -> Result<T> {
    positive("t0", t0)?;
    if l < T::zero() || l0 < T::zero() {
        return Err(Error::Domain("quotient_minorant needs nonnegative numerators".into()));
    }
    let two = T::one() + T::one();
    Ok(two * (l0 * l).sqrt() / t0 - l0 * t / (t0 * t0))
}
