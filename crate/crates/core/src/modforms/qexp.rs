//! Exact q-expansions of level-1 forms and the Miller basis of `S_k(1)`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use super::ntt::{multiply_mod, ntt_primes, pow_mod, primes_for_bits, Crt, NttPrime};

/// A q-expansion `Σ_{n=0}^{M} a(n) qⁿ` with exact integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    pub weight: u32,
    pub coefficients: Vec<BigInt>,
}

impl QExpansion {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficient(&self, n: usize) -> &BigInt {
        &self.coefficients[n]
    }
}

/// `dim S_k(1)` for even `k ≥ 0`; 0 for odd `k`.
pub fn cusp_dimension(k: u32) -> usize {
    if k % 2 == 1 || k < 12 {
        return 0;
    }
    let base = (k / 12) as usize;
    if k % 12 == 2 {
        base - 1
    } else {
        base
    }
}

/// `σ_j(n)` for `n < len`, by a divisor sieve.
fn sigma_table(j: u32, len: usize) -> Vec<u128> {
    let mut out = vec![0u128; len];
    for d in 1..len {
        let dj = (d as u128).pow(j);
        let mut m = d;
        while m < len {
            out[m] += dj;
            m += d;
        }
    }
    out
}

/// `(a, b, ℓ)` with `k = 12ℓ + 4a + 6b`, `a ∈ {0,1,2}`, `b ∈ {0,1}`.
fn weight_split(k: u32) -> (u32, u32, u32) {
    let (a, b) = match k % 12 {
        0 => (0, 0),
        2 => (2, 1),
        4 => (1, 0),
        6 => (0, 1),
        8 => (2, 0),
        10 => (1, 1),
        _ => unreachable!("odd weight"),
    };
    (a, b, (k - 4 * a - 6 * b) / 12)
}

/// Exponents `(j, e6, e4)` of `g_j = Δ^j E6^{e6} E4^{e4}` for `j = 1..=dim`.
fn basis_exponents(k: u32) -> Vec<(u32, u32, u32)> {
    let d = cusp_dimension(k) as u32;
    let (a, b, l) = weight_split(k);
    (1..=d).map(|j| (j, 2 * (l - j) + b, a)).collect()
}

/// `log₂` of a coefficient bound `A·(n+1)^α` valid for all `n ≤ m`.
#[derive(Debug, Clone, Copy)]
struct Growth {
    log2_const: f64,
    exponent: f64,
}

impl Growth {
    const DELTA: Growth = Growth { log2_const: 1.0, exponent: 6.0 };
    // 240ζ(3) ≤ 289, 504ζ(5) ≤ 523
    const E4: Growth = Growth { log2_const: 8.175, exponent: 3.0 };
    const E6: Growth = Growth { log2_const: 9.031, exponent: 5.0 };

    /// Bound for a product: `Σ_{i+j=n} A(i+1)^α B(j+1)^β ≤ AB(n+1)^{α+β+1}`.
    fn times(self, other: Growth) -> Growth {
        Growth {
            log2_const: self.log2_const + other.log2_const,
            exponent: self.exponent + other.exponent + 1.0,
        }
    }

    fn log2_at(self, m: usize) -> f64 {
        self.log2_const + self.exponent * ((m + 1) as f64).log2()
    }
}

struct Residues {
    delta: Vec<u64>,
    e4: Vec<u64>,
    e6: Vec<u64>,
}

fn base_residues(prime: NttPrime, len: usize, s3: &[u128], s5: &[u128]) -> Residues {
    let p = prime.p;
    let e4: Vec<u64> = (0..len)
        .map(|n| if n == 0 { 1 } else { ((240 * (s3[n] % p as u128)) % p as u128) as u64 })
        .collect();
    let e6: Vec<u64> = (0..len)
        .map(|n| {
            if n == 0 {
                1
            } else {
                let t = (504 * (s5[n] % p as u128)) % p as u128;
                (p as u128 - t) as u64 % p
            }
        })
        .collect();
    let e4sq = multiply_mod(&e4, &e4, len, prime);
    let e4cube = multiply_mod(&e4sq, &e4, len, prime);
    let e6sq = multiply_mod(&e6, &e6, len, prime);
    let inv1728 = pow_mod(1728, p - 2, p);
    let delta = e4cube
        .iter()
        .zip(&e6sq)
        .map(|(&x, &y)| {
            let d = if x >= y { x - y } else { x + p - y };
            ((d as u128 * inv1728 as u128) % p as u128) as u64
        })
        .collect();
    Residues { delta, e4, e6 }
}

fn power_mod(base: &[u64], e: u32, len: usize, prime: NttPrime) -> Vec<u64> {
    let mut acc = vec![0u64; len];
    acc[0] = 1;
    let mut b = base.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = multiply_mod(&acc, &b, len, prime);
        }
        e >>= 1;
        if e > 0 {
            b = multiply_mod(&b, &b, len, prime);
        }
    }
    acc
}

/// Products `Δ^j E6^{e6} E4^{e4}` with coefficients `0..len`, exactly.
fn raw_basis(k: u32, len: usize) -> Vec<Vec<BigInt>> {
    let exps = basis_exponents(k);
    if exps.is_empty() {
        return Vec::new();
    }
    let bits = exps
        .iter()
        .map(|&(j, e6, e4)| {
            let mut g = Growth::DELTA;
            for _ in 1..j {
                g = g.times(Growth::DELTA);
            }
            for _ in 0..e6 {
                g = g.times(Growth::E6);
            }
            for _ in 0..e4 {
                g = g.times(Growth::E4);
            }
            g.log2_at(len)
        })
        .fold(0.0, f64::max);
    let primes = ntt_primes(primes_for_bits(bits));
    let s3 = sigma_table(3, len);
    let s5 = sigma_table(5, len);
    let per_prime: Vec<Vec<Vec<u64>>> = primes
        .par_iter()
        .map(|&prime| {
            let r = base_residues(prime, len, &s3, &s5);
            // exponents of E6 fall by 2 as j rises; build powers incrementally
            let e6sq = multiply_mod(&r.e6, &r.e6, len, prime);
            let e4pow = power_mod(&r.e4, exps[0].2, len, prime);
            let mut e6pow = power_mod(&r.e6, exps[exps.len() - 1].1, len, prime);
            let mut e6_by_j = vec![Vec::new(); exps.len()];
            for j in (0..exps.len()).rev() {
                if j + 1 < exps.len() {
                    e6pow = multiply_mod(&e6pow, &e6sq, len, prime);
                }
                e6_by_j[j] = e6pow.clone();
            }
            let tail: Vec<u64> = multiply_mod(&e4pow, &r.delta, len, prime);
            let mut delta_pow = tail;
            let mut out = Vec::with_capacity(exps.len());
            for (j, e6) in e6_by_j.iter().enumerate() {
                if j > 0 {
                    delta_pow = multiply_mod(&delta_pow, &r.delta, len, prime);
                }
                out.push(multiply_mod(&delta_pow, e6, len, prime));
            }
            out
        })
        .collect();
    let crt = Crt::new(&primes);
    (0..exps.len())
        .map(|i| {
            let residues: Vec<Vec<u64>> = per_prime.iter().map(|v| v[i].clone()).collect();
            crt.reconstruct_series(&residues)
        })
        .collect()
}

/// Echelonized integral basis of `S_k(1)` with coefficients `a(0..=m)`:
/// element `j` (1-based) has `a(i) = δ_{ij}` for `1 ≤ i ≤ dim`.
pub fn miller_basis(k: u32, m: usize) -> Vec<QExpansion> {
    let d = cusp_dimension(k);
    if d == 0 {
        return Vec::new();
    }
    let len = m.max(d) + 1;
    let mut basis = raw_basis(k, len);
    for j in (0..d).rev() {
        for i in j + 1..d {
            let c = basis[j][i + 1].clone();
            if c.is_zero() {
                continue;
            }
            let (head, tail) = basis.split_at_mut(i);
            let gi = &tail[0];
            head[j]
                .par_iter_mut()
                .zip(gi.par_iter())
                .for_each(|(x, y)| *x -= &c * y);
        }
    }
    basis
        .into_iter()
        .map(|coefficients| QExpansion { weight: k, coefficients })
        .collect()
}

/// `max_{n ≤ m} log₂|a(n)|` over a basis, used to size fixed-point work.
pub fn max_coefficient_bits(basis: &[QExpansion]) -> u64 {
    basis
        .iter()
        .flat_map(|g| g.coefficients.iter())
        .map(|c| c.abs().bits())
        .max()
        .unwrap_or(0)
}
