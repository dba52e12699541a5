//! Level-1 cusp forms: exact q-expansions, Hecke eigensystems, harmonic
//! weights, and the Hecke linearization of eigenvalue products.

pub mod eigen;
pub mod hecke;
pub mod ntt;
pub mod petersson;
pub mod qexp;
pub mod store;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::Sieve;
use crate::{Error, Rational, Result};

pub use hecke::{hecke_linearize, hecke_matrix};
pub use petersson::{harmonic_weights, petersson_geometric_side, spectral_side};
pub use qexp::{cusp_dimension, miller_basis, QExpansion};

/// One normalized Hecke eigenform of level 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub weight: u32,
    /// Eigenvalues are known for `1 ≤ n ≤ bound`.
    pub bound: usize,
    /// `lambdas[n] = λ(n)`; index 0 is unused.
    pub lambdas: Vec<f64>,
    /// Harmonic weight `ω_f`; zero until [`harmonic_weights`] has run.
    pub omega: f64,
}

impl Eigensystem {
    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n == 0 || n as usize > self.bound {
            return Err(Error::pre(format!(
                "λ({n}) requested but eigenvalues are known only up to {}",
                self.bound
            )));
        }
        Ok(self.lambdas[n as usize])
    }
}

/// Extends `λ(p)` to all `n` by `λ(p^{e+1}) = λ(p)λ(p^e) − λ(p^{e−1})` and
/// multiplicativity.
pub fn fill_multiplicative(lambdas: &mut [f64], sieve: &Sieve) {
    let n = lambdas.len() - 1;
    if n >= 1 {
        lambdas[1] = 1.0;
    }
    for m in 2..=n {
        let f = sieve.factorize(m);
        let (p, e) = f.factors[0];
        let pe = p.pow(e) as usize;
        if pe == m {
            if e >= 2 {
                let lp = lambdas[p as usize];
                lambdas[m] = lp * lambdas[m / p as usize] - lambdas[m / (p * p) as usize];
            }
        } else {
            lambdas[m] = lambdas[pe] * lambdas[m / pe];
        }
    }
}

/// Which Hecke operator separated the forms, and its matrix.
struct Splitting {
    matrix: Vec<Vec<BigInt>>,
    roots: Vec<Rational>,
}

fn split_space(basis: &[QExpansion], bits: u32) -> Result<Splitting> {
    for p in [2u64, 3, 5] {
        let matrix = hecke_matrix(basis, p)?;
        let poly = eigen::charpoly(&matrix);
        if eigen::is_squarefree(&poly) {
            let roots = eigen::real_roots(&poly, bits);
            if roots.len() != basis.len() {
                return Err(Error::numeric(format!(
                    "T_{p} has {} real eigenvalues on a space of dimension {}",
                    roots.len(),
                    basis.len()
                )));
            }
            return Ok(Splitting { matrix, roots });
        }
    }
    Err(Error::numeric("T_2, T_3 and T_5 all have repeated eigenvalues"))
}

/// `S·2^{−shift}/p^{(k−1)/2}` without overflowing `f64`.
fn scaled_ratio(s: &BigInt, shift: u32, p: u64, k: u32) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let bits = s.bits();
    let drop = bits.saturating_sub(60);
    let top = (s.abs() >> drop).to_f64().unwrap();
    let sign = if s.is_negative() { -1.0 } else { 1.0 };
    let log = top.ln() + (drop as f64 - shift as f64) * std::f64::consts::LN_2
        - (k as f64 - 1.0) / 2.0 * (p as f64).ln();
    sign * log.exp()
}

/// Normalized Hecke eigensystems of `S_k(1)` with `λ(n)` for `n ≤ bound`, and
/// harmonic weights from the trace formula. `extra_bits` raises the
/// fixed-point precision of the eigenvectors beyond what the basis size
/// demands.
pub fn eigensystems_with_precision(k: u32, bound: usize, extra_bits: u32) -> Result<Vec<Eigensystem>> {
    if k % 2 == 1 {
        return Err(Error::pre(format!("eigensystems: weight {k} is odd")));
    }
    if k < 12 {
        return Err(Error::pre(format!("eigensystems: weight {k} is below 12")));
    }
    if bound < 2 {
        return Err(Error::pre("eigensystems: eigenvalue bound N must be at least 2"));
    }
    let d = cusp_dimension(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    // λ(p) for the primes used by the weight system must exist too
    let needed = crate::arith::first_primes(d).last().copied().unwrap_or(2) as usize;
    let bound = bound.max(needed);
    let sieve = Sieve::new(bound);
    let primes: Vec<u64> = sieve.primes().collect();
    let m = bound.max(5 * d) + 1;
    let basis = miller_basis(k, m);

    // bits by which basis coefficients at primes exceed p^{(k−1)/2}
    let excess = primes
        .iter()
        .flat_map(|&p| {
            basis.iter().map(move |g| {
                g.coefficients[p as usize].bits() as f64 - (k as f64 - 1.0) / 2.0 * (p as f64).log2()
            })
        })
        .fold(0.0f64, f64::max);
    let fixed_bits = 64 + 53 + extra_bits + excess.ceil().max(0.0) as u32;
    let entry_bits = eigen::charpoly(&hecke_matrix(&basis, 2)?)
        .iter()
        .map(|c| c.numer().bits())
        .max()
        .unwrap_or(0) as u32;
    let root_bits = 2 * fixed_bits + entry_bits;
    let split = split_space(&basis, root_bits)?;

    let mut systems = Vec::with_capacity(d);
    for root in &split.roots {
        let v = eigen::eigenvector(&split.matrix, root)?;
        let fixed: Vec<BigInt> = v.iter().map(|x| eigen::to_fixed(x, fixed_bits)).collect();
        let prime_values: Vec<(u64, f64)> = primes
            .par_iter()
            .map(|&p| {
                let mut s = BigInt::zero();
                for (vi, g) in fixed.iter().zip(&basis) {
                    s += vi * &g.coefficients[p as usize];
                }
                (p, scaled_ratio(&s, fixed_bits, p, k))
            })
            .collect();
        let mut lambdas = vec![0.0; bound + 1];
        for (p, v) in prime_values {
            lambdas[p as usize] = v;
        }
        fill_multiplicative(&mut lambdas, &sieve);
        systems.push(Eigensystem { weight: k, bound, lambdas, omega: 0.0 });
    }
    harmonic_weights(k, &mut systems)?;
    Ok(systems)
}

/// [`eigensystems_with_precision`] with no extra bits.
pub fn eigensystems(k: u32, bound: usize) -> Result<Vec<Eigensystem>> {
    eigensystems_with_precision(k, bound, 0)
}
