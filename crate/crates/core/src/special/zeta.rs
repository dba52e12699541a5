//! Riemann zeta by Euler–Maclaurin summation.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// `B_{2j} / (2j)!`, j = 1..=12.
const BERNOULLI_OVER_FACTORIAL: [f64; 12] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
    77683.0 / 14101100039391805440000.0,
    -236364091.0 / 1693824136731743669452800000.0,
];

/// `ζ(s)` on `Re s ≥ 1.05`, the region where the Euler products live.
pub fn zeta<T: Real>(s: Complex<T>) -> Result<Complex<T>> {
    if s.re < T::lit(1.05) {
        return Err(Error::pre(format!("zeta: Re s = {} is below 1.05", s.re)));
    }
    Ok(euler_maclaurin(s))
}

/// `ζ(s)` for `Re s > 0`, `s ≠ 1`. The Euler–Maclaurin formula is valid
/// there unchanged; this entry point exists for the `ζ(1 + αⱼ − αᵢ)` factors
/// of swapped shift sets, whose real part can fall just below 1.
pub fn zeta_continued<T: Real>(s: Complex<T>) -> Result<Complex<T>> {
    if !(s.re > T::zero()) {
        return Err(Error::pre(format!("zeta_continued: Re s = {} must be positive", s.re)));
    }
    if (s - T::one()).norm() < T::lit(1e-10) {
        return Err(Error::pre("zeta_continued: s is at the pole s = 1"));
    }
    Ok(euler_maclaurin(s))
}

fn euler_maclaurin<T: Real>(s: Complex<T>) -> Complex<T> {
    let terms = BERNOULLI_OVER_FACTORIAL.len();
    // Consecutive correction terms shrink by about |s + 2j|² / (2πN)².
    let n = 10 + s.norm().to_usize().unwrap_or(0) + 2 * terms;
    let one = Complex::new(T::one(), T::zero());
    let mut sum = Complex::new(T::zero(), T::zero());
    for m in (1..n).rev() {
        sum += (-s * T::from_usize(m).unwrap().ln()).exp();
    }
    let nf = T::from_usize(n).unwrap();
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    sum += n_pow * nf / (s - one) + n_pow / T::lit(2.0);
    // s(s+1)⋯(s+2j−2) N^{−s−2j+1}
    let mut rising = s;
    let mut pow = n_pow / nf;
    let inv_n2 = (nf * nf).recip();
    for (j, &b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += rising * pow * T::lit(b);
        let jj = T::from_usize(2 * j + 1).unwrap();
        rising = rising * (s + jj) * (s + jj + T::one());
        pow *= inv_n2;
    }
    sum
}
