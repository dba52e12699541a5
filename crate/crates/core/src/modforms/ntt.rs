//! Multi-modular number-theoretic transforms for exact power-series products.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Transform lengths up to `2^MAX_LOG` are supported by every prime.
pub const MAX_LOG: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NttPrime {
    pub p: u64,
    pub root: u64,
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Needs `a, b < 2^32`, which holds for every NTT prime; `pow_mod` and the
/// primality test use the wide version.
#[inline]
fn mul_mod_small(a: u64, b: u64, m: u64) -> u64 {
    a * b % m
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes `p = c·2^20 + 1 < 2^31`, largest first, with a primitive root each.
pub fn ntt_primes(count: usize) -> Vec<NttPrime> {
    let mut out = Vec::with_capacity(count);
    let mut c = (1u64 << (31 - MAX_LOG)) - 1;
    while out.len() < count && c > 0 {
        let p = (c << MAX_LOG) + 1;
        if is_prime_u64(p) {
            out.push(NttPrime { p, root: primitive_root(p) });
        }
        c -= 1;
    }
    assert_eq!(out.len(), count, "ran out of NTT primes");
    out
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = vec![2u64];
    let mut rest = (p - 1) >> MAX_LOG;
    let mut q = 3;
    while q * q <= rest {
        if rest.is_multiple_of(q) {
            factors.push(q);
            while rest.is_multiple_of(q) {
                rest /= q;
            }
        }
        q += 2;
    }
    if rest > 1 {
        factors.push(rest);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("primitive root exists")
}

fn ntt(a: &mut [u64], invert: bool, prime: NttPrime) {
    let n = a.len();
    let p = prime.p;
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(prime.root, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod(w, p - 2, p);
        }
        let half = len / 2;
        let mut twiddles = Vec::with_capacity(half);
        let mut t = 1u64;
        for _ in 0..half {
            twiddles.push(t);
            t = mul_mod_small(t, w, p);
        }
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = a[start + k];
                let v = mul_mod_small(a[start + k + half], twiddles[k], p);
                a[start + k] = if u + v >= p { u + v - p } else { u + v };
                a[start + k + half] = if u >= v { u - v } else { u + p - v };
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = mul_mod_small(*x, inv_n, p);
        }
    }
}

/// `a·b mod p`, truncated to `len` coefficients.
pub fn multiply_mod(a: &[u64], b: &[u64], len: usize, prime: NttPrime) -> Vec<u64> {
    let a = &a[..a.len().min(len)];
    let b = &b[..b.len().min(len)];
    if a.is_empty() || b.is_empty() {
        return vec![0; len];
    }
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0u64; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(len - i) {
                out[i + j] = (out[i + j] + mul_mod_small(x, y, prime.p)) % prime.p;
            }
        }
        return out;
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    assert!(size <= 1 << MAX_LOG, "series too long for the NTT primes");
    let mut fa = a.to_vec();
    fa.resize(size, 0);
    let mut fb = b.to_vec();
    fb.resize(size, 0);
    ntt(&mut fa, false, prime);
    ntt(&mut fb, false, prime);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = mul_mod_small(*x, *y, prime.p);
    }
    ntt(&mut fa, true, prime);
    fa.resize(len, 0);
    fa
}

/// Chinese remaindering of residue vectors to symmetric-range integers.
pub struct Crt {
    primes: Vec<u64>,
    /// `inv[i][j] = p_j^{-1} mod p_i` for `j < i`.
    inv: Vec<Vec<u64>>,
    half_product: BigInt,
    product: BigInt,
}

impl Crt {
    pub fn new(primes: &[NttPrime]) -> Self {
        let ps: Vec<u64> = primes.iter().map(|q| q.p).collect();
        let inv = (0..ps.len())
            .map(|i| (0..i).map(|j| pow_mod(ps[j] % ps[i], ps[i] - 2, ps[i])).collect())
            .collect();
        let product = ps.iter().fold(BigInt::one(), |acc, &p| acc * p);
        Self {
            half_product: &product >> 1,
            product,
            primes: ps,
            inv,
        }
    }

    /// Garner's mixed-radix reconstruction of one coefficient.
    pub fn reconstruct(&self, residues: &[u64]) -> BigInt {
        let k = self.primes.len();
        let mut digits = vec![0u64; k];
        for i in 0..k {
            let p = self.primes[i];
            let mut x = residues[i] % p;
            for j in 0..i {
                // x = (x − d_j) · p_j^{-1} mod p_i
                let d = digits[j] % p;
                x = if x >= d { x - d } else { x + p - d };
                x = mul_mod_small(x, self.inv[i][j], p);
            }
            digits[i] = x;
        }
        let mut value = BigInt::zero();
        for i in (0..k).rev() {
            value = value * self.primes[i] + digits[i];
        }
        if value > self.half_product {
            value -= &self.product;
        }
        value
    }

    /// Reconstructs every coefficient of a series given per-prime residues.
    pub fn reconstruct_series(&self, residues: &[Vec<u64>]) -> Vec<BigInt> {
        let len = residues[0].len();
        (0..len)
            .into_par_iter()
            .map(|n| {
                let r: Vec<u64> = residues.iter().map(|v| v[n]).collect();
                self.reconstruct(&r)
            })
            .collect()
    }
}

/// Number of NTT primes whose product exceeds `2^(bits + 2)`.
pub fn primes_for_bits(bits: f64) -> usize {
    ((bits + 2.0) / 30.0).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_are_ntt_friendly() {
        let ps = ntt_primes(40);
        for q in &ps {
            assert!(q.p < 1 << 31);
            assert_eq!((q.p - 1) % (1 << MAX_LOG), 0);
            assert!(is_prime_u64(q.p));
            assert_ne!(pow_mod(q.root, (q.p - 1) / 2, q.p), 1);
        }
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn product_matches_schoolbook() {
        let prime = ntt_primes(1)[0];
        let a: Vec<u64> = (0..300).map(|i| (i * i + 7) % prime.p).collect();
        let b: Vec<u64> = (0..257).map(|i| (3 * i + 1) % prime.p).collect();
        let got = multiply_mod(&a, &b, 400, prime);
        for n in 0..400 {
            let mut want = 0u128;
            for i in 0..=n.min(299) {
                if n - i < 257 {
                    want += a[i] as u128 * b[n - i] as u128;
                }
            }
            assert_eq!(got[n] as u128, want % prime.p as u128, "n {n}");
        }
    }

    #[test]
    fn crt_roundtrip_signed() {
        let ps = ntt_primes(5);
        let crt = Crt::new(&ps);
        let x: BigInt = "-123456789012345678901234567890123456789".parse().unwrap();
        let residues: Vec<u64> = ps
            .iter()
            .map(|q| {
                let r = &x % BigInt::from(q.p);
                let r: i64 = r.try_into().unwrap();
                r.rem_euclid(q.p as i64) as u64
            })
            .collect();
        assert_eq!(crt.reconstruct(&residues), x);
    }
}
