//! Log-Gamma on the right half-plane and the Gamma ratios of the functional
//! equation.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// Stirling coefficients `B_{2j} / (2j(2j−1))`, j = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

const SHIFT_TO: f64 = 15.0;

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::pre(format!("ln_gamma: x = {x} must be positive")));
    }
    let mut x = x;
    let mut shift = T::zero();
    while x < T::lit(SHIFT_TO) {
        shift += x.ln();
        x += T::one();
    }
    Ok(stirling(x) - shift)
}

fn stirling<T: Real>(x: T) -> T {
    let half_ln_tau = T::lit(0.918_938_533_204_672_8);
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut series = T::zero();
    let mut pow = inv;
    for c in STIRLING {
        series += T::lit(c) * pow;
        pow *= inv2;
    }
    (x - T::lit(0.5)) * x.ln() - x + half_ln_tau + series
}

/// Principal `ln Γ(z)` for `Re z > 0`, continuous in `z`.
pub fn ln_gamma_complex<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if !(z.re > T::zero()) {
        return Err(Error::pre(format!("ln_gamma_complex: Re z = {} must be positive", z.re)));
    }
    let mut z = z;
    let mut shift = Complex::new(T::zero(), T::zero());
    while z.norm() < T::lit(SHIFT_TO) || z.re < T::lit(SHIFT_TO) / T::lit(2.0) {
        shift += z.ln();
        z += T::one();
    }
    let half_ln_tau = T::lit(0.918_938_533_204_672_8);
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex::new(T::zero(), T::zero());
    let mut pow = inv;
    for c in STIRLING {
        series += pow * T::lit(c);
        pow *= inv2;
    }
    Ok((z - T::lit(0.5)) * z.ln() - z + half_ln_tau + series - shift)
}

/// `Γ(k/2 − s) / Γ(k/2 + s)` as `exp(ln Γ(k/2 − s) − ln Γ(k/2 + s))`.
pub fn gamma_ratio<T: Real>(k: u32, s: Complex<T>) -> Result<Complex<T>> {
    let half_k = T::from_u32(k).unwrap() / T::lit(2.0);
    let a = Complex::new(half_k, T::zero()) - s;
    let b = Complex::new(half_k, T::zero()) + s;
    if !(a.re > T::zero()) {
        return Err(Error::pre(format!(
            "gamma_ratio: Re(k/2 − s) = {} is not positive (k = {k})",
            a.re
        )));
    }
    if !(b.re > T::zero()) {
        return Err(Error::pre(format!(
            "gamma_ratio: Re(k/2 + s) = {} is not positive (k = {k})",
            b.re
        )));
    }
    Ok((ln_gamma_complex(a)? - ln_gamma_complex(b)?).exp())
}

/// Power approximation `((k−1)/2)^{−2s}` of [`gamma_ratio`]; relative error
/// is about `|s(4s²−1)| / (3(k−1)²)`.
pub fn gamma_ratio_power<T: Real>(k: u32, s: Complex<T>) -> Complex<T> {
    let base = (T::from_u32(k).unwrap() - T::one()) / T::lit(2.0);
    (s * (-T::lit(2.0) * base.ln())).exp()
}
