use num_complex::Complex;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Sparse affine function of the real decision vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr { terms: vec![], constant: c }
    }

    pub fn var(i: usize, coef: f64) -> Self {
        AffineExpr { terms: vec![(i, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, i: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((i, coef));
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    /// Merges repeated indices and drops zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, c) in self.terms {
            match out.last_mut() {
                Some((j, d)) if *j == i => *d += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        AffineExpr { terms: out, constant: self.constant }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self += rhs;
        self
    }
}

impl AddAssign for AffineExpr {
    fn add_assign(&mut self, rhs: AffineExpr) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

impl SubAssign for AffineExpr {
    fn sub_assign(&mut self, rhs: AffineExpr) {
        *self += -rhs;
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, k: f64) -> AffineExpr {
        self.terms.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }
}

impl Add<f64> for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, c: f64) -> AffineExpr {
        self.constant += c;
        self
    }
}

impl Sub<f64> for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, c: f64) -> AffineExpr {
        self.constant -= c;
        self
    }
}

/// Complex affine function, stored as real and imaginary parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CAffine {
    pub re: AffineExpr,
    pub im: AffineExpr,
}

impl CAffine {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(z: Complex<f64>) -> Self {
        CAffine { re: AffineExpr::constant(z.re), im: AffineExpr::constant(z.im) }
    }

    /// Complex variable whose real and imaginary parts sit at `re` and `re + 1`.
    pub fn var(re: usize) -> Self {
        CAffine { re: AffineExpr::var(re, 1.0), im: AffineExpr::var(re + 1, 1.0) }
    }

    pub fn real(e: AffineExpr) -> Self {
        CAffine { re: e, im: AffineExpr::zero() }
    }

    pub fn conj(self) -> Self {
        CAffine { re: self.re, im: -self.im }
    }

    pub fn scale(self, z: Complex<f64>) -> Self {
        // (a + jb)(x + jy) = (ax - by) + j(ay + bx)
        CAffine {
            re: self.re.clone() * z.re - self.im.clone() * z.im,
            im: self.im * z.re + self.re * z.im,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex<f64> {
        Complex::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn compact(self) -> Self {
        CAffine { re: self.re.compact(), im: self.im.compact() }
    }
}

impl Add for CAffine {
    type Output = CAffine;
    fn add(self, rhs: CAffine) -> CAffine {
        CAffine { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl AddAssign for CAffine {
    fn add_assign(&mut self, rhs: CAffine) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for CAffine {
    type Output = CAffine;
    fn sub(self, rhs: CAffine) -> CAffine {
        CAffine { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_merges_and_drops() {
        let e = AffineExpr { terms: vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)], constant: 4.0 }.compact();
        assert_eq!(e.terms, vec![(1, 2.5)]);
        assert_eq!(e.eval(&[0.0, 2.0, 0.0, 9.0]), 9.0);
    }

    #[test]
    fn complex_scaling_matches_arithmetic() {
        let x = [0.3, -1.2];
        let v = CAffine::var(0);
        let z = Complex::new(0.7, 2.0);
        let got = v.clone().scale(z).eval(&x);
        let want = z * Complex::new(0.3, -1.2);
        assert!((got - want).norm() < 1e-15);
        assert_eq!(v.conj().eval(&x), Complex::new(0.3, 1.2));
    }
}
