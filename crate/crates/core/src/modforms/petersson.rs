//! The Kloosterman–Bessel side of the Petersson trace formula and the
//! harmonic weights it determines.

use std::f64::consts::PI;

use super::Eigensystem;
use crate::arith::{first_primes, kloosterman};
use crate::special::bessel_j;
use crate::special::gamma::ln_gamma;
use crate::{Error, Result};

/// Default absolute bound on the discarded `c > C` tail.
pub const DEFAULT_TAIL: f64 = 1e-14;

/// `i^{−k}` for even `k`.
pub fn i_pow_minus_k(k: u32) -> f64 {
    if (k / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `log` of `2π(2π√(mn))^{k−1}/Γ(k)`, the constant in the tail bound.
fn log_tail_constant(mn: f64, k: u32) -> f64 {
    let kf = k as f64;
    (2.0 * PI).ln() + (kf - 1.0) * (2.0 * PI * mn.sqrt()).ln() - ln_gamma(kf).expect("k ≥ 1")
}

/// Rigorous bound on `|2π Σ_{c>C} S(m,n;c)/c · J_{k−1}(4π√(mn)/c)|` from
/// `|S| ≤ c` and `|J_ν(x)| ≤ (x/2)^ν/Γ(ν+1)`:
/// `2π(2π√(mn))^{k−1}/Γ(k) · C^{−(k−2)}/(k−2)`.
pub fn kloosterman_tail_bound(mn: f64, k: u32, c: u64) -> f64 {
    let kf = k as f64;
    (log_tail_constant(mn, k) - (kf - 2.0) * (c as f64).ln() - (kf - 2.0).ln()).exp()
}

/// The rule `max(8, ⌈16π√(mn)/k⌉)`: sixteen times past the transition
/// point `4π√(mn)/c ≈ k` of the Bessel factor.
pub fn heuristic_cutoff(mn: f64, k: u32) -> u64 {
    (16.0 * PI * mn.sqrt() / k as f64).ceil().max(8.0) as u64
}

/// Cutoff `C` such that [`kloosterman_tail_bound`] is at most `tol`, and at
/// least [`heuristic_cutoff`].
pub fn kloosterman_cutoff(mn: f64, k: u32, tol: f64) -> u64 {
    let kf = k as f64;
    let log_c = (log_tail_constant(mn, k) - (kf - 2.0).ln() - tol.ln()) / (kf - 2.0);
    let rigorous = log_c.exp().ceil().max(1.0) as u64;
    rigorous.max(heuristic_cutoff(mn, k))
}

/// `Σ_{c≤C} S(m,n;c)/c · J_{k−1}(4π√(mn)/c)` and the tail bound for `C`.
pub fn kloosterman_bessel_sum(m: u64, n: u64, k: u32, tol: f64) -> Result<(f64, f64)> {
    if k < 4 || k % 2 == 1 {
        return Err(Error::pre(format!("kloosterman_bessel_sum: weight {k} must be even and ≥ 4")));
    }
    let mn = (m * n) as f64;
    let cmax = kloosterman_cutoff(mn, k, tol);
    let x0 = 4.0 * PI * mn.sqrt();
    let mut sum = 0.0;
    for c in (1..=cmax).rev() {
        let s = kloosterman(m as i64, n as i64, c)?;
        if s != 0.0 {
            sum += s / c as f64 * bessel_j(k - 1, x0 / c as f64)?;
        }
    }
    Ok((sum, kloosterman_tail_bound(mn, k, cmax)))
}

/// `δ_{mn} + 2π i^{−k} Σ_c S(m,n;c)/c · J_{k−1}(4π√(mn)/c)`, with the bound
/// on the truncated tail.
pub fn petersson_geometric_side(m: u64, n: u64, k: u32, tol: f64) -> Result<(f64, f64)> {
    let (sum, tail) = kloosterman_bessel_sum(m, n, k, tol)?;
    let delta = if m == n { 1.0 } else { 0.0 };
    Ok((delta + 2.0 * PI * i_pow_minus_k(k) * sum, tail))
}

/// `Σ_f ω_f λ_f(m) λ_f(n)` over a family.
pub fn spectral_side(systems: &[Eigensystem], m: u64, n: u64) -> Result<f64> {
    systems.iter().map(|f| Ok(f.omega * f.lambda(m)? * f.lambda(n)?)).sum()
}

/// Fills in `ω_f` by solving `Σ_f ω_f λ_f(m_j) = δ_{m_j,1} + (Kloosterman side)`
/// for `m_j ∈ {1, p₁, …, p_{d−1}}`.
pub fn harmonic_weights(k: u32, systems: &mut [Eigensystem]) -> Result<()> {
    let d = systems.len();
    if d == 0 {
        return Err(Error::pre("harmonic_weights: empty family"));
    }
    if systems.iter().any(|f| f.weight != k) {
        return Err(Error::pre(format!("harmonic_weights: family is not all of weight {k}")));
    }
    let mut ms = vec![1u64];
    ms.extend(first_primes(d - 1));
    let mut a = vec![vec![0.0; d + 1]; d];
    for (row, &m) in a.iter_mut().zip(&ms) {
        for (j, f) in systems.iter().enumerate() {
            row[j] = f.lambda(m)?;
        }
        row[d] = petersson_geometric_side(m, 1, k, DEFAULT_TAIL)?.0;
    }
    let scale = a.iter().flat_map(|r| r[..d].iter()).fold(0.0f64, |s, x| s.max(x.abs()));
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-10 * scale {
            return Err(Error::numeric(format!(
                "harmonic_weights: eigenvalues at m ∈ {ms:?} do not separate the {d} forms of weight {k}"
            )));
        }
        a.swap(col, piv);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            for c in col..=d {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut w = vec![0.0; d];
    for col in (0..d).rev() {
        let mut s = a[col][d];
        for c in col + 1..d {
            s -= a[col][c] * w[c];
        }
        w[col] = s / a[col][col];
    }
    for (f, omega) in systems.iter_mut().zip(w) {
        f.omega = omega;
    }
    Ok(())
}
