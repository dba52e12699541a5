//! The conjectured main terms of the twisted moment (0-swap and 1-swap), and
//! exact checkers for the algebraic identity that matches the Kloosterman
//! residues with the 1-swap terms.

use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::chebyshev_u_sequence;
use crate::localfactors::{f_a, ShiftSet, TruncationPolicy};
use crate::special::{contour_integral, gamma_ratio, ContourSettings, ContourValue, SmoothWeight};
use crate::{Complex64, Error, Rational, Result};

/// How the archimedean factor of a swapped shift `t = α + z` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `(2π)^{2t} Γ(k/2 − t)/Γ(k/2 + t)`, as produced by the Bessel transform.
    #[default]
    ExactGamma,
    /// Stirling's leading term `((k−1)/(4π))^{−2t}`.
    PowerApproximation,
}

/// `Φ_k(t)` in the chosen mode.
pub fn swap_factor(k: u32, t: Complex64, mode: GammaMode) -> Result<Complex64> {
    let two_pi_ln = (2.0 * std::f64::consts::PI).ln();
    match mode {
        GammaMode::ExactGamma => Ok((t * (2.0 * two_pi_ln)).exp() * gamma_ratio(k, t)?),
        GammaMode::PowerApproximation => {
            let base = (k as f64 - 1.0) / (4.0 * std::f64::consts::PI);
            Ok((-t * (2.0 * base.ln())).exp())
        }
    }
}

/// One term of the recipe: the subset `V` of swapped shifts and its contour
/// integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTerm {
    /// Indices into `A` of the swapped shifts.
    pub swapped: Vec<usize>,
    pub value: Complex64,
    pub epsilon: f64,
    pub height: f64,
    pub step: f64,
    pub nodes: usize,
    /// Discretization and truncation error of the contour integral.
    pub contour_error: f64,
    /// Largest relative Euler-product tail seen on the contour, times `|value|`.
    pub euler_tail: f64,
}

impl SwapTerm {
    fn from_contour(swapped: Vec<usize>, c: ContourValue, rel_tail: f64) -> Self {
        Self {
            swapped,
            value: c.value,
            epsilon: c.epsilon,
            height: c.height,
            step: c.step,
            nodes: c.nodes,
            contour_error: c.error,
            euler_tail: rel_tail * c.value.norm(),
        }
    }

    pub fn error(&self) -> f64 {
        self.contour_error + self.euler_tail
    }
}

pub(crate) fn contour_settings(policy: &TruncationPolicy) -> ContourSettings {
    ContourSettings {
        epsilon: policy.epsilon,
        tolerance: policy.contour_tol,
        max_height: policy.height,
        ..ContourSettings::default()
    }
}

fn check_common(l: u64, x: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::pre("twist l must be at least 1"));
    }
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::pre(format!("length X = {x} must exceed 1")));
    }
    Ok(())
}

/// Monotone maximum of nonnegative `f64`s shared across threads.
struct MaxF64(AtomicU64);

impl MaxF64 {
    fn new() -> Self {
        Self(AtomicU64::new(0))
    }
    fn update(&self, v: f64) {
        if v.is_finite() && v > 0.0 {
            self.0.fetch_max(v.to_bits(), Ordering::Relaxed);
        }
    }
    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }
}

/// The term for swapped subset `V`:
/// `i^{|V|k}(1/2πi)∫_{(ε)} ψ̃(z) X^z ∏_{v∈V} Φ_k(α_v + z) · G_l((A_z ∖ V_z) ∪ V_z⁻) dz`.
#[allow(clippy::too_many_arguments)]
pub fn swap_term(
    swapped: &[usize],
    l: u64,
    x: f64,
    a: &ShiftSet,
    k: u32,
    psi: &SmoothWeight,
    policy: &TruncationPolicy,
    mode: GammaMode,
) -> Result<SwapTerm> {
    check_common(l, x)?;
    policy.validate()?;
    if swapped.iter().any(|&i| i >= a.len()) {
        return Err(Error::pre(format!("swap index out of range for {} shifts", a.len())));
    }
    if !swapped.is_empty() && (k % 2 == 1 || k < 12) {
        return Err(Error::pre(format!("swap terms need even k ≥ 12, got {k}")));
    }
    // i^{|V|k} = (−1)^{|V|k/2}
    let sign = if (swapped.len() as u64 * k as u64 / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let ln_x = x.ln();
    let rel_tail = MaxF64::new();
    let half = Complex64::new(0.5, 0.0);
    let value = contour_integral(&contour_settings(policy), |z| {
        let mut arch = (z * ln_x).exp() * psi.mellin_cached(z)?;
        for &i in swapped {
            arch *= swap_factor(k, a.shifts()[i] + z, mode)?;
        }
        let g = a.extrapolate(|b| {
            let v = f_a(l, half, &b.swap_translated(swapped, z), policy)?;
            if v.value.norm() > 0.0 {
                rel_tail.update(v.tail / v.value.norm());
            }
            Ok(v.value)
        })?;
        Ok(arch * g * sign)
    })?;
    Ok(SwapTerm::from_contour(swapped.to_vec(), value, rel_tail.get()))
}

/// `(1/2πi)∫ ψ̃(z) X^z F_A(l, 1/2+z) dz`, the diagonal term.
pub fn zero_swap(l: u64, x: f64, a: &ShiftSet, psi: &SmoothWeight, policy: &TruncationPolicy) -> Result<SwapTerm> {
    swap_term(&[], l, x, a, 12, psi, policy, GammaMode::ExactGamma)
}

/// The 1-swap term for `α = A[index]`.
#[allow(clippy::too_many_arguments)]
pub fn one_swap(
    l: u64,
    x: f64,
    a: &ShiftSet,
    index: usize,
    k: u32,
    psi: &SmoothWeight,
    policy: &TruncationPolicy,
    mode: GammaMode,
) -> Result<SwapTerm> {
    if index >= a.len() {
        return Err(Error::pre(format!("shift index {index} out of range for {} shifts", a.len())));
    }
    swap_term(&[index], l, x, a, k, psi, policy, mode)
}

/// Recipe prediction: the 0-swap term and one term per shift, or every
/// subset of `A` when `exploratory` is set (not covered by the theorem).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeRhs {
    pub zero_swap: SwapTerm,
    /// `|V| = 1` terms in shift order; in exploratory mode every larger
    /// subset follows in canonical order.
    #[serde(rename = "one_swap")]
    pub swaps: Vec<SwapTerm>,
    pub exploratory: bool,
    pub mode: GammaMode,
    pub total: Complex64,
}

impl RecipeRhs {
    pub fn term_count(&self) -> usize {
        1 + self.swaps.len()
    }

    pub fn error(&self) -> f64 {
        self.zero_swap.error() + self.swaps.iter().map(SwapTerm::error).sum::<f64>()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn recipe_rhs(
    l: u64,
    x: f64,
    a: &ShiftSet,
    k: u32,
    psi: &SmoothWeight,
    policy: &TruncationPolicy,
    mode: GammaMode,
    exploratory: bool,
) -> Result<RecipeRhs> {
    if a.is_empty() {
        return Err(Error::pre("recipe needs at least one shift"));
    }
    let max = if exploratory { a.len() } else { 1 };
    let subsets = a.subsets(max);
    let zero = zero_swap(l, x, a, psi, policy)?;
    let swaps: Vec<SwapTerm> = subsets[1..]
        .iter()
        .map(|v| swap_term(v, l, x, a, k, psi, policy, mode))
        .collect::<Result<_>>()?;
    let total = swaps.iter().fold(zero.value, |acc, t| acc + t.value);
    Ok(RecipeRhs { zero_swap: zero, swaps, exploratory, mode, total })
}

// ---------------------------------------------------------------------------
// The residue identity
//
// With x = p^{−1/2}, y = p^{−α} and U_m = U_m(cos θ), the 1-swap residue at a
// prime p^ν ‖ l reduces to LHS(ν) = RHS(ν) = C(xy)⁻¹U_ν / (1 − x²), where
// C(X)⁻¹ = 1 − U₁X + X². The checkers below evaluate both sides over any
// commutative field, so the same code runs in f64, complex and exact
// rational arithmetic.

/// Ring operations needed by the identity checkers.
pub trait Field: Num + Clone {}
impl<F: Num + Clone> Field for F {}

fn pow<F: Field>(base: &F, e: usize) -> F {
    let mut acc = F::one();
    for _ in 0..e {
        acc = acc * base.clone();
    }
    acc
}

/// Both sides of the identity at `(x, y, t = cos θ, ν)`. `sign_fault` flips
/// one sign in the left side, for mutation tests of the checkers.
pub fn identity_sides<F: Field>(x: &F, y: &F, t: &F, nu: usize, sign_fault: bool) -> (F, F) {
    let u = chebyshev_u_sequence(nu + 1, t);
    let one = F::one();
    let x2 = x.clone() * x.clone();
    let y2 = y.clone() * y.clone();
    let xy = x.clone() / y.clone();
    let yx = y.clone() / x.clone();
    let one_minus_x2 = one.clone() - x2.clone();
    let top = pow(y, 2 * (nu + 1)) / pow(x, 2 * nu);
    let c_inv = |v: &F| one.clone() - u[1].clone() * v.clone() + v.clone() * v.clone();

    let mut geo = F::zero();
    for c in 1..=nu {
        geo = geo + pow(&yx, 2 * c);
    }
    let first = one.clone() + one_minus_x2.clone() * geo - top.clone();

    let mut s1 = F::zero();
    for c in 1..=nu {
        s1 = s1 + pow(&yx, c - 1) * u[c - 1].clone();
    }
    let mut s2 = F::zero();
    for c in 1..=nu {
        let mut inner = F::zero();
        for m in 0..c {
            inner = inner + pow(&xy, m) * u[m].clone();
        }
        s2 = s2 + pow(&yx, 2 * c) * inner;
    }
    let mut s3 = F::zero();
    for m in 0..=nu {
        s3 = s3 + pow(&xy, m) * u[m].clone();
    }
    let s2_term = one_minus_x2.clone() * s2;
    let s2_term = if sign_fault { F::zero() - s2_term } else { s2_term };
    let second = F::zero() - y2 * s1 - s2_term
        + top.clone() * (x2.clone() / one_minus_x2.clone()) * pow(&xy, nu) * u[nu].clone()
        + top * s3;
    let lhs = pow(&xy, nu) * (first + c_inv(&xy) * second);
    let rhs = u[nu].clone() * c_inv(&(x.clone() * y.clone())) / one_minus_x2;
    (lhs, rhs)
}

/// The coefficients `A_ν` and `A_{i,ν}` (`0 ≤ i ≤ ν`) of the left side.
pub fn a_coefficients<F: Field>(x: &F, y: &F, nu: usize) -> (F, Vec<F>) {
    let one = F::one();
    let x2 = x.clone() * x.clone();
    let y2 = y.clone() * y.clone();
    let xy = x.clone() / y.clone();
    let yx = y.clone() / x.clone();
    let one_minus_x2 = one.clone() - x2;
    let top = pow(y, 2 * (nu + 1)) / pow(x, 2 * nu);
    let mut geo = F::zero();
    for c in 1..=nu {
        geo = geo + pow(&yx, 2 * c);
    }
    let a_nu = one + one_minus_x2.clone() * geo - top.clone();
    let mut a = Vec::with_capacity(nu + 1);
    for i in 0..nu {
        let mut tail = F::zero();
        for c in i + 1..=nu {
            tail = tail + pow(&yx, 2 * c);
        }
        a.push(
            F::zero() - y2.clone() * pow(&yx, i) - one_minus_x2.clone() * pow(&xy, i) * tail
                + top.clone() * pow(&xy, i),
        );
    }
    a.push(y2 / one_minus_x2 * pow(&yx, nu));
    (a_nu, a)
}

/// `(1 + x²/y²)A_{i,ν} − (x/y)A_{i−1,ν} − (x/y)A_{i+1,ν}`, the coefficient of
/// `U_i` after the recurrence `U₁U_i = U_{i−1} + U_{i+1}`. For `i = 0` the
/// only neighbour is `A_{1,ν}` and the constant `A_ν` joins instead, giving
/// `A_ν + (1 + x²/y²)A_{0,ν} − (x/y)A_{1,ν}`.
pub fn telescoping_value<F: Field>(nu: usize, i: usize, x: &F, y: &F) -> Result<F> {
    if nu < 2 || i + 1 >= nu {
        return Err(Error::pre(format!("telescoping needs 0 ≤ i < ν − 1, got ν = {nu}, i = {i}")));
    }
    let (a_nu, a) = a_coefficients(x, y, nu);
    let xy = x.clone() / y.clone();
    let lead = F::one() + xy.clone() * xy.clone();
    let below = if i == 0 { F::zero() - a_nu } else { xy.clone() * a[i - 1].clone() };
    Ok(lead * a[i].clone() - below - xy * a[i + 1].clone())
}

/// The five surviving coefficients `(B₀, B₁, B_{ν−1}, B_ν, B_{ν+1})` for
/// `ν ≥ 3`, and their closed forms `(0, 0, −xy/(1−x²), (1+x²y²)/(1−x²), −xy/(1−x²))`.
pub fn b_coefficients<F: Field>(x: &F, y: &F, nu: usize) -> Result<([F; 5], [F; 5])> {
    if nu < 3 {
        return Err(Error::pre(format!("B-coefficients are defined for ν ≥ 3, got {nu}")));
    }
    let (a_nu, a) = a_coefficients(x, y, nu);
    let xy = x.clone() / y.clone();
    let lead = F::one() + xy.clone() * xy.clone();
    let pre = pow(&xy, nu);
    let b0 = pre.clone() * (a_nu + lead.clone() * a[0].clone() - xy.clone() * a[1].clone());
    let b1 = pre.clone() * (lead.clone() * a[1].clone() - xy.clone() * a[0].clone() - xy.clone() * a[2].clone());
    let bm = pre.clone()
        * (lead.clone() * a[nu - 1].clone() - xy.clone() * a[nu].clone() - xy.clone() * a[nu - 2].clone());
    let bn = pre.clone() * (lead * a[nu].clone() - xy.clone() * a[nu - 1].clone());
    let bp = F::zero() - pre * xy.clone() * a[nu].clone();
    let one_minus_x2 = F::one() - x.clone() * x.clone();
    let prod = x.clone() * y.clone();
    let off = F::zero() - prod.clone() / one_minus_x2.clone();
    let diag = (F::one() + prod.clone() * prod) / one_minus_x2;
    Ok(([b0, b1, bm, bn, bp], [F::zero(), F::zero(), off.clone(), diag, off]))
}

const DENOMINATOR_FLOOR: f64 = 1e-6;

fn check_identity_args(x: f64, y: Complex64, theta: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::pre(format!("x = {x} must lie in (0, 1)")));
    }
    if !(y.norm() > 0.5 && y.norm() < 1.5) {
        return Err(Error::pre(format!("|y| = {} must lie in (0.5, 1.5)", y.norm())));
    }
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::pre(format!("θ = {theta} must lie in (0, π)")));
    }
    let t = theta.cos();
    let xc = Complex64::new(x, 0.0);
    let c_inv = |v: Complex64| 1.0 - 2.0 * t * v + v * v;
    let dens = [Complex64::new(1.0 - x * x, 0.0), c_inv(xc / y), c_inv(xc * y)];
    if dens.iter().any(|d| d.norm() < DENOMINATOR_FLOOR) {
        return Err(Error::numeric(format!(
            "identity denominators nearly vanish at x = {x}, y = {y}, θ = {theta}"
        )));
    }
    Ok(())
}

/// `|LHS(ν) − RHS(ν)|` of the residue identity in `f64`.
pub fn verify_one_swap_identity(x: f64, y: Complex64, theta: f64, nu: usize) -> Result<f64> {
    identity_residual(x, y, theta, nu, false)
}

#[doc(hidden)]
pub fn identity_residual(x: f64, y: Complex64, theta: f64, nu: usize, sign_fault: bool) -> Result<f64> {
    check_identity_args(x, y, theta)?;
    let t = Complex64::new(theta.cos(), 0.0);
    let (lhs, rhs) = identity_sides(&Complex64::new(x, 0.0), &y, &t, nu, sign_fault);
    Ok((lhs - rhs).norm())
}

/// Residual of the telescoping relation in `f64`.
pub fn telescoping_check(nu: usize, i: usize, x: f64, y: Complex64, theta: f64) -> Result<f64> {
    check_identity_args(x, y, theta)?;
    Ok(telescoping_value(nu, i, &Complex64::new(x, 0.0), &y)?.norm())
}

/// The residue identity in exact rational arithmetic at `t = cos θ`; the
/// returned difference is exactly zero when the identity holds.
pub fn identity_exact(x: &Rational, y: &Rational, t: &Rational, nu: usize) -> Rational {
    let (lhs, rhs) = identity_sides(x, y, t, nu, false);
    lhs - rhs
}

/// Outcome of a seeded randomized sweep of the identity checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySweep {
    pub seed: u64,
    pub samples: usize,
    /// Residual of each sample, in draw order.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_telescoping: f64,
    pub max_b_coefficient: f64,
}

/// A random point `(x, y, θ)` of the identity's domain: `x ∈ [0.65, 0.95]`,
/// `y = x·ρe^{iφ}` with `ρ ∈ [0.8, 1.25]`, and `θ ∈ [0.05, π − 0.05]`.
/// Keeping `|y/x|` near 1 keeps the `(y/x)^{2ν}` terms of size `O(1)`.
pub fn sample_point(rng: &mut impl Rng) -> (f64, Complex64, f64) {
    loop {
        let x = rng.random_range(0.65..0.95);
        let rho = rng.random_range(0.8..1.25);
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let theta = rng.random_range(0.05..std::f64::consts::PI - 0.05);
        let y = Complex64::from_polar(x * rho, phi);
        if check_identity_args(x, y, theta).is_ok() {
            return (x, y, theta);
        }
    }
}

/// `samples` identity checks with `ν ≤ 12`, plus the telescoping relation for
/// every `0 ≤ i < ν − 1`, `ν ≤ 12` and the B-coefficients for `3 ≤ ν ≤ 12`
/// at 20 further points.
pub fn identity_sweep(seed: u64, samples: usize, sign_fault: bool) -> Result<IdentitySweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (x, y, theta) = sample_point(&mut rng);
        let nu = rng.random_range(0..=12usize);
        residuals.push(identity_residual(x, y, theta, nu, sign_fault)?);
    }
    let mut max_telescoping = 0.0f64;
    let mut max_b = 0.0f64;
    for _ in 0..20 {
        let (x, y, theta) = sample_point(&mut rng);
        for nu in 2..=12 {
            for i in 0..nu - 1 {
                max_telescoping = max_telescoping.max(telescoping_check(nu, i, x, y, theta)?);
            }
            if nu >= 3 {
                let (got, want) = b_coefficients(&Complex64::new(x, 0.0), &y, nu)?;
                for (g, w) in got.iter().zip(&want) {
                    max_b = max_b.max((g - w).norm());
                }
            }
        }
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(IdentitySweep {
        seed,
        samples,
        residuals,
        max_residual,
        max_telescoping,
        max_b_coefficient: max_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BigInt;
    use num_traits::Zero;
    use std::sync::OnceLock;

    // one instance so the Mellin cache is shared between tests
    fn bump() -> &'static SmoothWeight {
        static PSI: OnceLock<SmoothWeight> = OnceLock::new();
        PSI.get_or_init(SmoothWeight::bump)
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn identity_examples() {
        let y = Complex64::from_polar(0.9, 0.2);
        assert!(verify_one_swap_identity(0.3, y, 1.1, 7).unwrap() <= 1e-10);
        for nu in 0..=2 {
            assert!(verify_one_swap_identity(0.7, Complex64::new(0.8, 0.1), 0.4, nu).unwrap() <= 1e-12);
        }
        assert!(identity_residual(0.3, y, 1.1, 7, true).unwrap() > 1e-3);
        assert!(verify_one_swap_identity(1.2, y, 1.1, 3).unwrap_err().is_precondition());
        assert!(verify_one_swap_identity(0.3, Complex64::new(2.0, 0.0), 1.1, 3).is_err());
    }

    #[test]
    fn identity_is_exact_over_rationals() {
        for nu in 0..=9 {
            for (x, y, t) in [(q(1, 3), q(4, 5), q(2, 7)), (q(2, 3), q(5, 7), q(-1, 2)), (q(9, 10), q(11, 10), q(0, 1))] {
                assert!(identity_exact(&x, &y, &t, nu).is_zero(), "ν {nu}");
            }
        }
        let (lhs, rhs) = identity_sides(&q(1, 3), &q(4, 5), &q(2, 7), 5, true);
        assert!(!(lhs - rhs).is_zero());
    }

    #[test]
    fn telescoping_and_b_coefficients() {
        let y = Complex64::new(0.8, 0.0);
        assert!(telescoping_check(5, 2, 0.4, y, 1.0).unwrap() <= 1e-12);
        assert!(telescoping_check(3, 0, 0.4, y, 1.0).unwrap() <= 1e-12);
        assert!(telescoping_check(3, 2, 0.4, y, 1.0).is_err());
        for nu in 2..=8 {
            for i in 0..nu - 1 {
                assert!(telescoping_value(nu, i, &q(2, 5), &q(4, 5)).unwrap().is_zero());
            }
        }
        for nu in 3..=8 {
            let (got, want) = b_coefficients(&q(3, 7), &q(5, 6), nu).unwrap();
            assert_eq!(got, want, "ν {nu}");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_small() {
        let a = identity_sweep(7, 200, false).unwrap();
        let b = identity_sweep(7, 200, false).unwrap();
        assert_eq!(a, b);
        assert!(a.max_residual <= 1e-10, "{}", a.max_residual);
        assert!(a.max_telescoping <= 1e-12, "{}", a.max_telescoping);
        assert!(a.max_b_coefficient <= 1e-12, "{}", a.max_b_coefficient);
        let faulty = identity_sweep(7, 50, true).unwrap();
        assert!(faulty.max_residual > 1e-8);
    }

    #[test]
    fn swap_factor_modes() {
        let t = Complex64::new(0.35, 0.5);
        for (k, tol) in [(40u32, 1e-3), (80, 1e-4)] {
            let e = swap_factor(k, t, GammaMode::ExactGamma).unwrap();
            let p = swap_factor(k, t, GammaMode::PowerApproximation).unwrap();
            assert!((e - p).norm() <= tol * e.norm(), "k {k}");
        }
        // Φ(t)Φ(−t) = 1
        let e = swap_factor(24, t, GammaMode::ExactGamma).unwrap() * swap_factor(24, -t, GammaMode::ExactGamma).unwrap();
        assert!((e - 1.0).norm() < 1e-13);
    }

    fn small_policy() -> TruncationPolicy {
        TruncationPolicy { prime_cutoff: 100, contour_tol: 1e-9, ..Default::default() }
    }

    #[test]
    fn rhs_is_symmetric_in_the_shifts() {
        let (psi, policy) = (bump(), small_policy());
        let a = ShiftSet::from_real(&[0.1, 0.15]).unwrap();
        let b = ShiftSet::from_real(&[0.15, 0.1]).unwrap();
        let ra = recipe_rhs(1, 300.0, &a, 24, psi, &policy, GammaMode::ExactGamma, false).unwrap();
        let rb = recipe_rhs(1, 300.0, &b, 24, psi, &policy, GammaMode::ExactGamma, false).unwrap();
        assert!((ra.total - rb.total).norm() <= 1e-10, "{} vs {}", ra.total, rb.total);
    }

    #[test]
    fn rhs_is_continuous_in_the_shift() {
        let (psi, policy) = (bump(), small_policy());
        // l/X and k²/(4π²X) both inside the bump's bulk, so both terms matter
        let h = 0.05;
        let values: Vec<Complex64> = (-2..=2)
            .map(|i| {
                let a = ShiftSet::from_real(&[h * i as f64]).unwrap();
                recipe_rhs(10, 30.0, &a, 24, psi, &policy, GammaMode::ExactGamma, false).unwrap().total
            })
            .collect();
        let size = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(size > 1e-3);
        for w in values.windows(2) {
            assert!((w[1] - w[0]).norm() / h <= 20.0 * size, "{values:?}");
        }
        for w in values.windows(3) {
            assert!((w[2] - w[1] * 2.0 + w[0]).norm() <= 0.1 * size, "{values:?}");
        }
    }

    #[test]
    fn zero_swap_single_shift_is_psi() {
        // r = 1: F_A(l, s) = l^{−s−α}, so the integral is ψ(l/X) l^{−1/2−α}
        let psi = bump();
        let a = ShiftSet::from_real(&[0.1]).unwrap();
        let policy = small_policy();
        for (l, x) in [(1u64, 1.8), (3, 5.0), (2, 3.3)] {
            let got = zero_swap(l, x, &a, psi, &policy).unwrap();
            let want = psi.eval(l as f64 / x) * (l as f64).powf(-0.6);
            assert!((got.value.re - want).abs() < 1e-8 && got.value.im.abs() < 1e-8, "l {l} X {x}: {} vs {want}", got.value);
        }
        let far = zero_swap(5, 4.0, &a, psi, &policy).unwrap();
        assert!(far.value.norm() < 1e-10);
    }

    #[test]
    fn one_swap_single_shift_against_scalar_integrand() {
        let psi = bump();
        let a = ShiftSet::from_real(&[0.1]).unwrap();
        let policy = small_policy();
        let (l, x, k) = (2u64, 40.0, 24u32);
        let got = one_swap(l, x, &a, 0, k, psi, &policy, GammaMode::ExactGamma).unwrap();
        let want = contour_integral(&contour_settings(&policy), |z| {
            let t = Complex64::new(0.1, 0.0) + z;
            Ok(psi.mellin_cached(z)? * (z * x.ln()).exp() * swap_factor(k, t, GammaMode::ExactGamma)? * ((t - 0.5) * (l as f64).ln()).exp())
        })
        .unwrap();
        assert!((got.value - want.value).norm() < 1e-9, "{} vs {}", got.value, want.value);
    }

    #[test]
    fn rhs_structure() {
        let psi = bump();
        let policy = small_policy();
        let a = ShiftSet::from_real(&[0.1]).unwrap();
        let r = recipe_rhs(1, 30.0, &a, 24, psi, &policy, GammaMode::ExactGamma, false).unwrap();
        assert_eq!(r.term_count(), 2);
        let b = ShiftSet::from_real(&[0.1, 0.15]).unwrap();
        let r = recipe_rhs(1, 30.0, &b, 24, psi, &policy, GammaMode::ExactGamma, true).unwrap();
        assert_eq!(r.term_count(), 4);
        assert_eq!(r.swaps[2].swapped, vec![0, 1]);
    }
}
