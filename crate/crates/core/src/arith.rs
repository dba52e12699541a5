//! Exact elementary arithmetic: factorization, Möbius and totient, Kloosterman
//! and Ramanujan sums, shifted divisor functions.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rustfft::FftPlanner;

use crate::{Complex64, Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInt {
    pub n: u64,
    /// `(p, e)` pairs, primes strictly increasing, exponents at least one.
    pub factors: Vec<(u64, u32)>,
}

impl FactoredInt {
    /// Exponent of `p` in `n` (zero if `p` does not divide `n`).
    pub fn ord(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Trial-division factorization.
pub fn factorize(n: u64) -> Result<FactoredInt> {
    if n == 0 {
        return Err(Error::pre("factorize: n must be positive"));
    }
    let mut factors = Vec::new();
    let mut rest = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        if rest.is_multiple_of(p) {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(FactoredInt { n, factors })
}

pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::pre("mobius: n must be positive"));
    }
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.factors.len() % 2 == 0 { 1 } else { -1 })
}

pub fn euler_phi(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::pre("euler_phi: n must be positive"));
    }
    let f = factorize(n)?;
    Ok(f.factors
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product())
}

/// Smallest-prime-factor sieve for fast factorization of every `n ≤ limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(1);
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Sieve { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..self.spf.len())
            .filter(|&n| self.spf[n] as usize == n)
            .map(|n| n as u64)
    }

    pub fn factorize(&self, n: usize) -> FactoredInt {
        assert!(n >= 1 && n <= self.limit(), "sieve range exceeded: {n}");
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut rest = n;
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        FactoredInt {
            n: n as u64,
            factors,
        }
    }

    pub fn mobius_table(&self) -> Vec<i8> {
        let mut mu = vec![0i8; self.spf.len()];
        if mu.len() > 1 {
            mu[1] = 1;
        }
        for n in 2..self.spf.len() {
            let p = self.spf[n] as usize;
            let m = n / p;
            mu[n] = if m.is_multiple_of(p) { 0 } else { -mu[m] };
        }
        mu
    }

    pub fn phi_table(&self) -> Vec<u64> {
        let mut phi = vec![0u64; self.spf.len()];
        if phi.len() > 1 {
            phi[1] = 1;
        }
        for n in 2..self.spf.len() {
            let p = self.spf[n] as usize;
            let m = n / p;
            phi[n] = if m.is_multiple_of(p) {
                phi[m] * p as u64
            } else {
                phi[m] * (p as u64 - 1)
            };
        }
        phi
    }
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// First `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut bound = 16u64;
    loop {
        let ps = primes_up_to(bound);
        if ps.len() >= count {
            return ps[..count].to_vec();
        }
        bound *= 2;
    }
}

/// Inverses modulo `c`; entry `a` holds `ā` when `gcd(a, c) = 1`, else 0.
pub fn unit_inverses(c: u64) -> Vec<u64> {
    let mut inv = vec![0u64; c as usize];
    if c == 1 {
        return inv;
    }
    for a in 1..c {
        if inv[a as usize] != 0 {
            continue;
        }
        if let Some(b) = mod_inverse(a, c) {
            inv[a as usize] = b;
            inv[b as usize] = a;
        }
    }
    inv
}

pub fn mod_inverse(a: u64, c: u64) -> Option<u64> {
    let (mut r0, mut r1) = (c as i128, (a % c) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(c as i128) as u64)
}

/// `e(j/c)` for `j = 0..c`.
pub fn roots_of_unity(c: u64) -> Vec<Complex64> {
    (0..c)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / c as f64))
        .collect()
}

fn residue(x: i64, c: u64) -> u64 {
    x.rem_euclid(c as i64) as u64
}

/// Kloosterman sum `S(m, n; c)` by direct summation over the unit group.
pub fn kloosterman(m: i64, n: i64, c: u64) -> Result<f64> {
    if c == 0 {
        return Err(Error::pre("kloosterman: modulus must be positive"));
    }
    if c == 1 {
        return Ok(1.0);
    }
    let inv = unit_inverses(c);
    let roots = roots_of_unity(c);
    Ok(kloosterman_with_tables(m, n, c, &inv, &roots))
}

/// Same as [`kloosterman`] with the per-modulus tables supplied by the caller.
pub fn kloosterman_with_tables(m: i64, n: i64, c: u64, inv: &[u64], roots: &[Complex64]) -> f64 {
    if c == 1 {
        return 1.0;
    }
    let (mr, nr) = (residue(m, c), residue(n, c));
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 1..c {
        let ab = inv[a as usize];
        if ab == 0 {
            continue;
        }
        let idx = ((a as u128 * mr as u128 + ab as u128 * nr as u128) % c as u128) as usize;
        acc += roots[idx];
    }
    assert!(
        acc.im.abs() < 1e-10 * c as f64,
        "Kloosterman sum S({m},{n};{c}) has imaginary part {}",
        acc.im
    );
    acc.re
}

/// `S(r, n; c)` for every residue `r mod c`, from one length-`c` DFT of the
/// sequence `a ↦ [gcd(a, c) = 1]·e(ā n / c)`.
pub fn kloosterman_row(n: i64, c: u64, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    if c == 1 {
        return vec![1.0];
    }
    let inv = unit_inverses(c);
    let nr = residue(n, c);
    let mut buf: Vec<Complex64> = (0..c)
        .map(|a| {
            let ab = inv[a as usize];
            if ab == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let idx = (ab as u128 * nr as u128 % c as u128) as u64;
                Complex64::from_polar(1.0, TAU * idx as f64 / c as f64)
            }
        })
        .collect();
    planner.plan_fft_inverse(c as usize).process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Ramanujan sum `R_c(l)` from the prime-power table: for `p^ν ‖ l`,
/// `R_{p^j}(l)` is 1, `φ(p^j)`, `−p^ν`, or 0 according as `j = 0`,
/// `1 ≤ j ≤ ν`, `j = ν + 1`, or `j ≥ ν + 2`.
pub fn ramanujan_sum(c: u64, l: u64) -> Result<i64> {
    if c == 0 || l == 0 {
        return Err(Error::pre("ramanujan_sum: c and l must be positive"));
    }
    let fc = factorize(c)?;
    let mut value = 1i64;
    for &(p, j) in &fc.factors {
        let mut nu = 0u32;
        let mut rest = l;
        while rest.is_multiple_of(p) {
            rest /= p;
            nu += 1;
        }
        let local = if j <= nu {
            ((p - 1) * p.pow(j - 1)) as i64
        } else if j == nu + 1 {
            -(p.pow(nu) as i64)
        } else {
            return Ok(0);
        };
        value *= local;
    }
    Ok(value)
}

/// `τ_A(m) = Σ_{m₁⋯m_r = m} m₁^{−α₁}⋯m_r^{−α_r}` over ordered factorizations.
pub fn shifted_divisor(m: u64, shifts: &[Complex64]) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::pre("shifted_divisor: m must be positive"));
    }
    let divisors = divisors(m);
    let mut memo: HashMap<(u64, usize), Complex64> = HashMap::new();
    Ok(shifted_divisor_rec(m, shifts, 0, &divisors, &mut memo))
}

fn shifted_divisor_rec(
    m: u64,
    shifts: &[Complex64],
    depth: usize,
    divisors: &[u64],
    memo: &mut HashMap<(u64, usize), Complex64>,
) -> Complex64 {
    if depth == shifts.len() {
        return if m == 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    if depth + 1 == shifts.len() {
        return (-shifts[depth] * (m as f64).ln()).exp();
    }
    if let Some(v) = memo.get(&(m, depth)) {
        return *v;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &d in divisors.iter().filter(|&&d| m.is_multiple_of(d)) {
        let head = (-shifts[depth] * (d as f64).ln()).exp();
        acc += head * shifted_divisor_rec(m / d, shifts, depth + 1, divisors, memo);
    }
    memo.insert((m, depth), acc);
    acc
}

pub fn divisors(m: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            small.push(d);
            if d * d != m {
                large.push(m / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_exponential_ramanujan(c: u64, l: u64) -> f64 {
        (1..=c)
            .filter(|&a| gcd(a, c) == 1)
            .map(|a| (TAU * ((a * l) % c) as f64 / c as f64).cos())
            .sum()
    }

    fn naive_kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 1..=c {
            if gcd(a, c) != 1 {
                continue;
            }
            let ab = (1..=c).find(|&b| (a * b) % c == 1 % c).unwrap();
            let phase = (a as i64 * m + ab as i64 * n).rem_euclid(c as i64);
            acc += Complex64::from_polar(1.0, TAU * phase as f64 / c as f64);
        }
        acc
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).unwrap().factors.is_empty());
        assert_eq!(factorize(12).unwrap().factors, vec![(2, 2), (3, 1)]);
        assert_eq!(
            factorize((1 << 20) * 3).unwrap().factors,
            vec![(2, 20), (3, 1)]
        );
        assert!(factorize(0).is_err());
    }

    #[test]
    fn mobius_and_phi_examples() {
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(euler_phi(12).unwrap(), 4);
        assert_eq!(mobius(30).unwrap(), -1);
        assert!(mobius(0).is_err());
        assert!(euler_phi(0).is_err());
    }

    #[test]
    fn sieve_tables_match_pointwise_definitions() {
        let sieve = Sieve::new(5000);
        let mu = sieve.mobius_table();
        let phi = sieve.phi_table();
        for n in 1..=5000u64 {
            assert_eq!(mu[n as usize], mobius(n).unwrap(), "mu({n})");
            assert_eq!(phi[n as usize], euler_phi(n).unwrap(), "phi({n})");
        }
    }

    #[test]
    fn kloosterman_examples() {
        assert_eq!(kloosterman(1, 1, 1).unwrap(), 1.0);
        assert!((kloosterman(1, 1, 3).unwrap() + 1.0).abs() < 1e-13);
        assert!(kloosterman(1, 1, 0).is_err());
        for c in 1..40u64 {
            for m in -3..6i64 {
                for n in 0..5i64 {
                    let want = naive_kloosterman(m, n, c);
                    let got = kloosterman(m, n, c).unwrap();
                    assert!((got - want.re).abs() < 1e-10, "S({m},{n};{c})");
                    assert!(want.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn weil_bound_for_primes() {
        for p in primes_up_to(1000) {
            let s = kloosterman(1, 1, p).unwrap();
            assert!(s.abs() <= 2.0 * (p as f64).sqrt() + 1e-9, "p = {p}");
        }
    }

    #[test]
    fn kloosterman_row_matches_direct() {
        let mut planner = FftPlanner::new();
        for c in [1u64, 2, 7, 12, 30, 97, 128] {
            for n in [1i64, 2, 3, 10] {
                let row = kloosterman_row(n, c, &mut planner);
                for r in 0..c {
                    let direct = kloosterman(r as i64, n, c).unwrap();
                    assert!((row[r as usize] - direct).abs() < 1e-9, "c={c} n={n} r={r}");
                }
            }
        }
    }

    #[test]
    fn ramanujan_examples() {
        for l in 1..20 {
            assert_eq!(ramanujan_sum(1, l).unwrap(), 1);
        }
        for p in [2u64, 3, 5] {
            assert_eq!(ramanujan_sum(p * p, p).unwrap(), -(p as i64));
        }
        // 2 ‖ 6, so R_4(6) falls in the j = ν + 1 case: e(3/2) + e(9/2) = −2
        assert_eq!(ramanujan_sum(4, 6).unwrap(), -2);
        assert_eq!(direct_exponential_ramanujan(4, 6).round(), -2.0);
        assert_eq!(ramanujan_sum(8, 6).unwrap(), 0);
        assert!(ramanujan_sum(0, 1).is_err());
    }

    #[test]
    fn ramanujan_table_matches_exponential_sums_small() {
        for c in 1..=60u64 {
            for l in 1..=60u64 {
                let direct = direct_exponential_ramanujan(c, l);
                assert!((direct - direct.round()).abs() < 1e-8);
                assert_eq!(ramanujan_sum(c, l).unwrap(), direct.round() as i64, "R_{c}({l})");
            }
        }
    }

    #[test]
    fn shifted_divisor_examples() {
        let a = Complex64::new(0.1, 0.02);
        let b = Complex64::new(-0.05, 0.07);
        assert_eq!(shifted_divisor(1, &[a, b]).unwrap(), Complex64::new(1.0, 0.0));
        let p = 7.0f64;
        let want = (-a * p.ln()).exp() + (-b * p.ln()).exp();
        assert!((shifted_divisor(7, &[a, b]).unwrap() - want).norm() < 1e-14);
        let zero = Complex64::new(0.0, 0.0);
        assert!((shifted_divisor(6, &[zero, zero]).unwrap() - 4.0).norm() < 1e-14);
        // three ordered pairs for 4 = 1·4 = 2·2 = 4·1
        assert!((shifted_divisor(4, &[zero, zero]).unwrap() - 3.0).norm() < 1e-14);
    }

    fn big_sieve() -> &'static (Vec<i8>, Vec<u64>) {
        static TABLES: std::sync::OnceLock<(Vec<i8>, Vec<u64>)> = std::sync::OnceLock::new();
        TABLES.get_or_init(|| {
            let sieve = Sieve::new(1_000_000);
            (sieve.mobius_table(), sieve.phi_table())
        })
    }

    proptest! {
        #[test]
        fn sieve_tables_match_definitions_up_to_a_million(n in 1u64..=1_000_000) {
            let (mu, phi) = big_sieve();
            prop_assert_eq!(mu[n as usize], mobius(n).unwrap());
            prop_assert_eq!(phi[n as usize], euler_phi(n).unwrap());
        }

        #[test]
        fn kloosterman_is_symmetric_and_trivially_bounded(m in -50i64..50, n in -50i64..50, c in 1u64..120) {
            let s = kloosterman(m, n, c).unwrap();
            let t = kloosterman(n, m, c).unwrap();
            prop_assert!((s - t).abs() < 1e-9);
            prop_assert!(s.abs() <= c as f64 + 1e-9);
        }

        #[test]
        fn shifted_divisor_is_multiplicative(m in 1u64..300, n in 1u64..300,
                                             re in -0.25f64..0.25, im in -0.25f64..0.25) {
            prop_assume!(gcd(m, n) == 1);
            let shifts = [Complex64::new(re, im), Complex64::new(0.1, -0.05), Complex64::new(-im, re)];
            let lhs = shifted_divisor(m * n, &shifts).unwrap();
            let rhs = shifted_divisor(m, &shifts).unwrap() * shifted_divisor(n, &shifts).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }
    }
}
