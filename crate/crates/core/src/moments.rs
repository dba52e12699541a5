//! The twisted moment `Σ^h_f λ_f(l) Σ_n ψ(n/X) n^{−1/2} λ_{A,f}(n)` computed
//! from eigensystems and, independently, from the Petersson formula; and the
//! comparison with the recipe.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arith::{kloosterman_row, Sieve};
use crate::localfactors::{ShiftSet, TruncationPolicy};
use crate::modforms::hecke_linearize;
use crate::modforms::petersson::{heuristic_cutoff, i_pow_minus_k, kloosterman_cutoff, kloosterman_tail_bound};
use crate::modforms::Eigensystem;
use crate::recipe::{recipe_rhs, GammaMode, RecipeRhs};
use crate::special::{bessel_j, SmoothWeight};
use crate::{Complex64, Error, Result};

fn check_weight(k: u32) -> Result<()> {
    if k % 2 == 1 || k < 12 {
        return Err(Error::pre(format!("weight k = {k} must be even and at least 12")));
    }
    Ok(())
}

fn check_length(l: u64, x: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::pre("twist l must be at least 1"));
    }
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::pre(format!("length X = {x} must exceed 1")));
    }
    Ok(())
}

/// Largest `n` with `n < X`.
fn last_term(x: f64) -> u64 {
    (x.ceil() as u64).saturating_sub(1)
}

/// `ψ(n/X) n^{−1/2}` for `1 ≤ n < X`, indexed by `n`.
fn outer_weights(x: f64, psi: &SmoothWeight) -> Vec<f64> {
    let top = last_term(x);
    (0..=top)
        .map(|n| if n == 0 { 0.0 } else { psi.eval(n as f64 / x) / (n as f64).sqrt() })
        .collect()
}

fn pow_shift(n: u64, alpha: Complex64) -> Complex64 {
    (-alpha * (n as f64).ln()).exp()
}

/// `λ_A(n) = Σ_{n₁⋯n_r = n} ∏ λ(nᵢ) nᵢ^{−αᵢ}` by enumerating ordered
/// factorizations.
pub fn lambda_a_shifted(n: u64, a: &ShiftSet, system: &Eigensystem) -> Result<Complex64> {
    if n == 0 || n as usize > system.bound {
        return Err(Error::pre(format!("λ_A({n}) needs eigenvalues up to {n}, have {}", system.bound)));
    }
    fn rec(n: u64, shifts: &[Complex64], f: &Eigensystem) -> Complex64 {
        let (&alpha, rest) = shifts.split_first().expect("nonempty");
        if rest.is_empty() {
            return f.lambdas[n as usize] * pow_shift(n, alpha);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for d in 1..=n {
            if n.is_multiple_of(d) {
                acc += f.lambdas[d as usize] * pow_shift(d, alpha) * rec(n / d, rest, f);
            }
        }
        acc
    }
    Ok(rec(n, a.shifts(), system))
}

/// `λ_A(n)` for all `n ≤ top` by `r − 1` Dirichlet convolutions.
pub fn lambda_a_table(top: u64, a: &ShiftSet, system: &Eigensystem) -> Result<Vec<Complex64>> {
    if top as usize > system.bound {
        return Err(Error::pre(format!("λ_A up to {top} needs eigenvalues up to {top}, have {}", system.bound)));
    }
    let top = top as usize;
    let series = |alpha: Complex64| -> Vec<Complex64> {
        (0..=top)
            .map(|n| if n == 0 { Complex64::new(0.0, 0.0) } else { system.lambdas[n] * pow_shift(n as u64, alpha) })
            .collect()
    };
    let shifts = a.shifts();
    let mut acc = series(shifts[0]);
    for &alpha in &shifts[1..] {
        let b = series(alpha);
        let mut next = vec![Complex64::new(0.0, 0.0); top + 1];
        for d in 1..=top {
            if acc[d] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for e in 1..=top / d {
                next[d * e] += acc[d] * b[e];
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// `Σ_f ω_f λ_f(l) Σ_{n<X} ψ(n/X) n^{−1/2} λ_{A,f}(n)` from eigensystems.
/// An empty family (`dim S_k = 0`) gives 0.
pub fn lhs_direct(
    l: u64,
    x: f64,
    a: &ShiftSet,
    k: u32,
    psi: &SmoothWeight,
    systems: &[Eigensystem],
) -> Result<Complex64> {
    check_weight(k)?;
    check_length(l, x)?;
    if let Some(f) = systems.iter().find(|f| f.weight != k) {
        return Err(Error::pre(format!("eigensystem of weight {} given for k = {k}", f.weight)));
    }
    let top = last_term(x);
    let w = outer_weights(x, psi);
    let mut total = Complex64::new(0.0, 0.0);
    for f in systems {
        if (l as usize) > f.bound || (top as usize) > f.bound {
            return Err(Error::pre(format!(
                "eigenvalues known up to {} but l = {l} and X = {x} need {}",
                f.bound,
                l.max(top)
            )));
        }
        let lam = lambda_a_table(top, a, f)?;
        let inner = (1..=top as usize).fold(Complex64::new(0.0, 0.0), |acc, n| acc + lam[n] * w[n]);
        total += inner * (f.omega * f.lambdas[l as usize]);
    }
    Ok(total)
}

/// The Petersson-side evaluation of the moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeterssonLhs {
    pub value: Complex64,
    /// `m = l` part of the linearized sum.
    pub diagonal: Complex64,
    pub kloosterman: Complex64,
    /// Rigorous bound on the discarded `c > C(m, l)` terms.
    pub c_tail: f64,
    /// Largest c-cutoff used.
    pub max_cutoff: u64,
    /// Largest value of the rule `max(8, ⌈16π√(ml)/k⌉)` over the `m` used.
    pub heuristic_cutoff: u64,
    /// Number of `m` with a nonzero linearized weight.
    pub terms: usize,
}

/// `λ_A(p^e) = Σ_j c_j λ(p^j)`: the exact Hecke linearization of every
/// ordered split `e = e₁ + ⋯ + e_r`, weighted by `∏ p^{−eᵢαᵢ}`.
fn prime_power_expansion(p: u64, e: u32, shifts: &[Complex64]) -> Result<Vec<(u64, Complex64)>> {
    let mut out: HashMap<u64, Complex64> = HashMap::new();
    let r = shifts.len();
    let mut parts = vec![0u32; r];
    loop {
        // visit compositions of e into r parts with parts[r−1] implied
        let used: u32 = parts[..r - 1].iter().sum();
        if used <= e {
            parts[r - 1] = e - used;
            let ns: Vec<u64> = parts.iter().map(|&ei| p.pow(ei)).collect();
            let weight = parts
                .iter()
                .zip(shifts)
                .fold(Complex64::new(1.0, 0.0), |acc, (&ei, &alpha)| acc * pow_shift(p.pow(ei), alpha));
            for (m, c) in hecke_linearize(&ns)? {
                *out.entry(m).or_insert(Complex64::new(0.0, 0.0)) += weight * c as f64;
            }
        }
        // odometer over parts[0..r−1]
        let mut i = 0;
        loop {
            if i + 1 >= r {
                let mut v: Vec<(u64, Complex64)> = out.into_iter().collect();
                v.sort_by_key(|t| t.0);
                return Ok(v);
            }
            parts[i] += 1;
            if parts[..r - 1].iter().sum::<u32>() <= e {
                break;
            }
            parts[i] = 0;
            i += 1;
        }
    }
}

/// `W(m)` with `Σ_{n<X} ψ(n/X) n^{−1/2} λ_A(n) = Σ_m W(m) λ(m)` for every
/// Hecke eigenform; linearized prime by prime and memoized on `(p, e)`.
pub fn linearized_weights(x: f64, a: &ShiftSet, psi: &SmoothWeight) -> Result<Vec<(u64, Complex64)>> {
    let top = last_term(x);
    let w = outer_weights(x, psi);
    let sieve = Sieve::new(top.max(1) as usize);
    let mut memo: HashMap<(u64, u32), Vec<(u64, Complex64)>> = HashMap::new();
    let mut acc = vec![Complex64::new(0.0, 0.0); top as usize + 1];
    for n in 1..=top as usize {
        if w[n] == 0.0 {
            continue;
        }
        let mut terms = vec![(1u64, Complex64::new(w[n], 0.0))];
        for &(p, e) in &sieve.factorize(n).factors {
            let local = match memo.entry((p, e)) {
                Entry::Occupied(slot) => slot.into_mut(),
                Entry::Vacant(slot) => slot.insert(prime_power_expansion(p, e, a.shifts())?),
            };
            terms = terms
                .iter()
                .flat_map(|&(m, c)| local.iter().map(move |&(q, d)| (m * q, c * d)))
                .collect();
        }
        for (m, c) in terms {
            acc[m as usize] += c;
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
        .map(|(m, c)| (m as u64, c))
        .collect())
}

/// The moment from the Petersson formula, with no eigenforms: each
/// `Σ_f ω_f λ_f(m)λ_f(l)` becomes `δ_{ml} + 2π i^{−k} Σ_{c≤C} S(m,l;c)/c · J_{k−1}(4π√(ml)/c)`.
pub fn lhs_petersson(
    l: u64,
    x: f64,
    a: &ShiftSet,
    k: u32,
    psi: &SmoothWeight,
    policy: &TruncationPolicy,
) -> Result<PeterssonLhs> {
    lhs_petersson_scaled(l, x, a, k, psi, policy, 1)
}

/// [`lhs_petersson`] with every c-cutoff multiplied by `cutoff_factor`.
pub fn lhs_petersson_scaled(
    l: u64,
    x: f64,
    a: &ShiftSet,
    k: u32,
    psi: &SmoothWeight,
    policy: &TruncationPolicy,
    cutoff_factor: u64,
) -> Result<PeterssonLhs> {
    check_weight(k)?;
    check_length(l, x)?;
    policy.validate()?;
    if cutoff_factor == 0 {
        return Err(Error::pre("cutoff factor must be at least 1"));
    }
    let weights = linearized_weights(x, a, psi)?;
    let diagonal = weights.iter().find(|t| t.0 == l).map_or(Complex64::new(0.0, 0.0), |t| t.1);

    // (m, W(m), C(m, l)), sorted by decreasing cutoff so each c uses a prefix
    let mut rows: Vec<(u64, Complex64, u64)> = weights
        .iter()
        .map(|&(m, w)| (m, w, kloosterman_cutoff((m * l) as f64, k, policy.kloosterman_tol) * cutoff_factor))
        .collect();
    rows.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    let max_cutoff = rows.first().map_or(0, |r| r.2);
    let heuristic = weights.iter().map(|&(m, _)| heuristic_cutoff((m * l) as f64, k)).max().unwrap_or(0);
    let c_tail: f64 = rows
        .iter()
        .map(|&(m, w, c)| w.norm() * 2.0 * PI * kloosterman_tail_bound((m * l) as f64, k, c))
        .sum();

    let per_c: Vec<Complex64> = (1..=max_cutoff)
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, c| {
            let active = rows.partition_point(|r| r.2 >= c);
            let s = kloosterman_row(l as i64, c, planner);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(m, w, _) in &rows[..active] {
                let kl = s[(m % c) as usize];
                if kl.abs() < 1e-9 {
                    continue;
                }
                let arg = 4.0 * PI * ((m * l) as f64).sqrt() / c as f64;
                acc += w * (kl / c as f64 * bessel_j(k - 1, arg)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let sum = per_c.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    let kloosterman = sum * (2.0 * PI * i_pow_minus_k(k));
    Ok(PeterssonLhs {
        value: diagonal + kloosterman,
        diagonal,
        kloosterman,
        c_tail,
        max_cutoff,
        heuristic_cutoff: heuristic,
        terms: weights.len(),
    })
}

/// Inputs of a moment comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub k: u32,
    pub l: u64,
    pub x: f64,
    pub shifts: ShiftSet,
    pub psi: String,
    pub policy: TruncationPolicy,
    pub mode: GammaMode,
    /// Include every swap subset, not only `|V| ≤ 1`.
    pub exploratory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub absolute: f64,
    /// `absolute / |rhs|`, infinite when the right side vanishes.
    pub relative: f64,
    /// The theorem's error scale `√(X l³)/k²`, for context.
    pub error_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub c_truncation: f64,
    pub p_truncation: f64,
    pub contour: f64,
}

/// Both sides of the moment identity for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub params: MomentParams,
    /// `None` when no eigensystems were supplied.
    pub lhs_direct: Option<Complex64>,
    pub lhs_petersson: PeterssonLhs,
    pub rhs: RecipeRhs,
    /// The left side used for the residuals: the eigenform value when
    /// available, the Petersson value otherwise.
    pub lhs: Complex64,
    pub residuals: Residuals,
    pub tails: Tails,
    /// `l ≥ X`: the diagonal vanishes by support.
    pub degenerate: bool,
}

/// Computes every piece of [`MomentReport`]. `systems` must be the full
/// weight-`k` family when given.
pub fn compare(
    params: &MomentParams,
    psi: &SmoothWeight,
    systems: Option<&[Eigensystem]>,
) -> Result<MomentReport> {
    let MomentParams { k, l, x, ref shifts, ref policy, mode, exploratory, .. } = *params;
    if psi.id() != params.psi {
        return Err(Error::pre(format!("weight function {} does not match params ({})", psi.id(), params.psi)));
    }
    let lhs_direct = systems.map(|s| lhs_direct(l, x, shifts, k, psi, s)).transpose()?;
    let lhs_petersson = lhs_petersson(l, x, shifts, k, psi, policy)?;
    let rhs = recipe_rhs(l, x, shifts, k, psi, policy, mode, exploratory)?;
    let lhs = lhs_direct.unwrap_or(lhs_petersson.value);
    let absolute = (lhs - rhs.total).norm();
    let relative = if rhs.total.norm() > 0.0 { absolute / rhs.total.norm() } else { f64::INFINITY };
    let terms = std::iter::once(&rhs.zero_swap).chain(&rhs.swaps);
    let tails = Tails {
        c_truncation: lhs_petersson.c_tail,
        p_truncation: terms.clone().map(|t| t.euler_tail).sum(),
        contour: terms.map(|t| t.contour_error).sum(),
    };
    Ok(MomentReport {
        params: params.clone(),
        lhs_direct,
        lhs_petersson,
        lhs,
        residuals: Residuals {
            absolute,
            relative,
            error_scale: (x * (l as f64).powi(3)).sqrt() / (k as f64).powi(2),
        },
        tails,
        degenerate: l as f64 >= x,
        rhs,
    })
}
