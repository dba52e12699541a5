//! Sato–Tate local factors and the zeta-regularized Euler products built from
//! them: `F_A(m, s)`, `G_l(A)`, the principal-character twisted series, and
//! its coprime-restricted variant.
//!
//! Every Euler product runs over all primes: for `p ∤ m` the local factor is
//! `F_{A,p}(0, s)`, which is `1 + Σ_{i<j} p^{−2s−αᵢ−αⱼ} + O(p^{−3/2})`. The
//! pair terms are extracted as zeta values, so the truncated product over
//! `p ≤ P` converges like `P^{−1/2}`, and the omitted part is estimated from
//! the factors just below `P`.

use std::sync::OnceLock;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, primes_up_to};
use crate::special::zeta_continued;
use crate::{Complex, Complex64, Error, Real, Result};

/// Largest admissible `|α|`.
pub const MAX_SHIFT: f64 = 0.25;
/// Pair sums and differences closer than this to 0 need the confluent mode.
pub const CONFLUENCE_GAP: f64 = 1e-8;
/// Step of the confluent-mode perturbation.
pub const CONFLUENT_STEP: f64 = 1e-6;

/// Quadrature stops when successive values differ by less than this, relative.
const QUAD_TOL: f64 = 1e-13;
const QUAD_MAX_NODES: usize = 1 << 14;
const SMALL_PRIME: u64 = 97;
const SMALL_PRIME_NODES: usize = 256;

/// A set of shifts `A = {α₁,…,α_r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSet {
    shifts: Vec<Complex64>,
    confluent: bool,
}

impl ShiftSet {
    /// Checks `|α| ≤ 1/4` and that no two shifts, and no pair sum, come within
    /// [`CONFLUENCE_GAP`] of a coincidence.
    pub fn new(shifts: Vec<Complex64>) -> Result<Self> {
        Self::build(shifts, false)
    }

    /// Like [`ShiftSet::new`] but accepts coinciding shifts; values are then
    /// computed by perturbing and extrapolating, see [`ShiftSet::extrapolate`].
    pub fn confluent(shifts: Vec<Complex64>) -> Result<Self> {
        Self::build(shifts, true)
    }

    pub fn from_real(shifts: &[f64]) -> Result<Self> {
        Self::new(shifts.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    fn build(shifts: Vec<Complex64>, confluent: bool) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::pre("shift set must contain at least one shift"));
        }
        for a in &shifts {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::pre(format!("shift {a} is not finite")));
            }
            if a.norm() > MAX_SHIFT {
                return Err(Error::pre(format!("shift {a} exceeds |α| ≤ {MAX_SHIFT}")));
            }
        }
        if !confluent {
            for i in 0..shifts.len() {
                for j in i + 1..shifts.len() {
                    let (a, b) = (shifts[i], shifts[j]);
                    if (a + b).norm() <= CONFLUENCE_GAP {
                        return Err(Error::pre(format!(
                            "shifts {a} and {b} sum to ~0; enable the confluent mode"
                        )));
                    }
                    if (a - b).norm() <= CONFLUENCE_GAP {
                        return Err(Error::pre(format!(
                            "shifts {a} and {b} coincide; enable the confluent mode"
                        )));
                    }
                }
            }
        }
        Ok(Self { shifts, confluent })
    }

    /// Derived sets (translates, swaps) leave the small-shift regime by
    /// construction and are not re-validated.
    fn derived(&self, shifts: Vec<Complex64>) -> Self {
        Self { shifts, confluent: self.confluent }
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn is_confluent(&self) -> bool {
        self.confluent
    }

    /// `A_z = {α + z}`.
    pub fn translate(&self, z: Complex64) -> Self {
        self.derived(self.shifts.iter().map(|a| a + z).collect())
    }

    /// `A⁻ = {−α}`.
    pub fn negate(&self) -> Self {
        self.derived(self.shifts.iter().map(|a| -a).collect())
    }

    pub fn conj(&self) -> Self {
        self.derived(self.shifts.iter().map(|a| a.conj()).collect())
    }

    /// `(A ∖ V) ∪ V⁻` for `V` given by indices.
    pub fn swap(&self, v: &[usize]) -> Self {
        self.derived(
            self.shifts
                .iter()
                .enumerate()
                .map(|(i, a)| if v.contains(&i) { -a } else { *a })
                .collect(),
        )
    }

    /// `(A_z ∖ V_z) ∪ V_z⁻`.
    pub fn swap_translated(&self, v: &[usize], z: Complex64) -> Self {
        self.translate(z).swap(v)
    }

    /// `αᵢ + αⱼ` for `i < j`.
    pub fn pair_sums(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for i in 0..self.shifts.len() {
            for j in i + 1..self.shifts.len() {
                out.push(self.shifts[i] + self.shifts[j]);
            }
        }
        out
    }

    /// Index subsets of size at most `max`, by size then lexicographically.
    pub fn subsets(&self, max: usize) -> Vec<Vec<usize>> {
        let r = self.shifts.len();
        let mut all: Vec<Vec<usize>> = (0u64..1 << r)
            .map(|mask| (0..r).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|v| v.len() <= max)
            .collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        all
    }

    /// Moves `αᵢ` by `(i+1)·h·`[`CONFLUENT_STEP`], which separates every
    /// coinciding pair and pair sum.
    pub fn perturbed(&self, h: f64) -> Self {
        self.derived(
            self.shifts
                .iter()
                .enumerate()
                .map(|(i, a)| a + (i as f64 + 1.0) * h * CONFLUENT_STEP)
                .collect(),
        )
    }

    /// Evaluates `f(A)`; in confluent mode, `2f(A_δ) − f(A_{2δ})` from the
    /// perturbed sets, which removes the first-order perturbation error.
    pub fn extrapolate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&ShiftSet) -> Result<Complex64>,
    {
        if !self.confluent {
            return f(self);
        }
        let one = f(&self.perturbed(1.0))?;
        let two = f(&self.perturbed(2.0))?;
        Ok(one * 2.0 - two)
    }
}

/// Truncation and accuracy settings shared by the Euler products, contour
/// integrals and Kloosterman sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// Euler products run over `p ≤ prime_cutoff` and the primes of the
    /// twist.
    pub prime_cutoff: u64,
    /// Initial Gauss–Chebyshev node count for primes above 97.
    pub quadrature_order: usize,
    /// Abscissa `ε` of the vertical contours.
    pub epsilon: f64,
    /// Largest `|Im z|` a contour may reach.
    pub height: f64,
    /// Working precision; only `f64` (53) is implemented.
    pub precision_bits: u32,
    /// Target discretization error of contour integrals.
    pub contour_tol: f64,
    /// Target for the omitted Kloosterman–Bessel tail per `(m, n)` pair.
    pub kloosterman_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            prime_cutoff: 1000,
            quadrature_order: 16,
            epsilon: 0.25,
            height: 5000.0,
            precision_bits: 53,
            contour_tol: 1e-10,
            kloosterman_tol: 1e-14,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.prime_cutoff < 100 {
            return Err(Error::pre(format!("prime cutoff P = {} is below 100", self.prime_cutoff)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::pre(format!("contour abscissa ε = {} must be positive", self.epsilon)));
        }
        if !(self.height > 0.0) {
            return Err(Error::pre("contour height budget must be positive"));
        }
        if self.quadrature_order < 2 || self.quadrature_order > QUAD_MAX_NODES {
            return Err(Error::pre(format!("quadrature order {} out of range", self.quadrature_order)));
        }
        if self.precision_bits != 53 {
            return Err(Error::pre(format!(
                "precision of {} bits requested; only 53 (f64) is implemented",
                self.precision_bits
            )));
        }
        if !(self.contour_tol > 0.0) || !(self.kloosterman_tol > 0.0) {
            return Err(Error::pre("tolerances must be positive"));
        }
        Ok(())
    }
}

/// `C(X; θ) = (1 − 2X cos θ + X²)^{−1}`.
pub fn c_kernel<T: Real>(x: Complex<T>, theta: T) -> Result<Complex<T>> {
    if x.norm() >= T::one() {
        return Err(Error::pre(format!("C(X;θ) needs |X| < 1, got |X| = {}", x.norm())));
    }
    Ok(kernel(x, theta.cos()))
}

#[inline]
fn kernel<T: Real>(x: Complex<T>, t: T) -> Complex<T> {
    (Complex::<T>::one() - x * (t + t) + x * x).inv()
}

/// `(2/π)∫₀^π f(θ) sin²θ dθ` by the Gauss–Chebyshev rule of the second kind,
/// doubling `n+1` from `min_nodes` (rounded up to a power of two) and reusing
/// nodes, until two successive values agree to 1e-13 relative.
pub fn sato_tate_integral<T, F>(min_nodes: usize, f: F) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(T) -> Complex<T>,
{
    let mut n = min_nodes.max(2).next_power_of_two();
    let mut sum = Complex::<T>::zero();
    let mut abs_sum = T::zero();
    let h = T::PI() / T::from_usize(n).unwrap();
    for j in 1..n {
        let theta = h * T::from_usize(j).unwrap();
        let s = theta.sin();
        let v = f(theta) * (s * s);
        sum += v;
        abs_sum += v.norm();
    }
    let mut prev = sum * (T::lit(2.0) / T::from_usize(n).unwrap());
    loop {
        if 2 * n > QUAD_MAX_NODES {
            return Err(Error::Convergence(format!(
                "Sato–Tate quadrature did not settle within {QUAD_MAX_NODES} nodes"
            )));
        }
        n *= 2;
        // only the odd nodes of the refined grid are new
        let h = T::PI() / T::from_usize(n).unwrap();
        let mut j = 1;
        while j < n {
            let theta = h * T::from_usize(j).unwrap();
            let s = theta.sin();
            let v = f(theta) * (s * s);
            sum += v;
            abs_sum += v.norm();
            j += 2;
        }
        let scale = T::lit(2.0) / T::from_usize(n).unwrap();
        let value = sum * scale;
        let size = (abs_sum * scale).max(value.norm());
        if (value - prev).norm() <= T::lit(QUAD_TOL) * size || size.is_zero() {
            return Ok(value);
        }
        prev = value;
    }
}

/// `cos` and `sin` of `πi/N` for `N = QUAD_MAX_NODES` and `0 ≤ i ≤ N`; every
/// node of every grid in the doubling sequence is one of these angles.
struct AngleTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

fn angles() -> &'static AngleTable {
    static TABLE: OnceLock<AngleTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let step = std::f64::consts::PI / QUAD_MAX_NODES as f64;
        let (cos, sin) = (0..=QUAD_MAX_NODES).map(|i| ((i as f64 * step).cos(), (i as f64 * step).sin())).unzip();
        AngleTable { cos, sin }
    })
}

impl AngleTable {
    /// `sin(πm/N)` for any `m ≥ 0`.
    fn sin_multiple(&self, m: usize) -> f64 {
        let m = m % (2 * QUAD_MAX_NODES);
        if m <= QUAD_MAX_NODES {
            self.sin[m]
        } else {
            -self.sin[m - QUAD_MAX_NODES]
        }
    }

    /// `U_ν(cos θ)` at `θ = πi/N`, `0 < i < N`.
    fn chebyshev_u(&self, nu: u32, i: usize) -> f64 {
        match nu {
            0 => 1.0,
            1 => 2.0 * self.cos[i],
            _ => self.sin_multiple((nu as usize + 1) * i) / self.sin[i],
        }
    }
}

/// [`sato_tate_integral`] for `f64`, with `f` receiving the index `i` of the
/// node `θ = πi/N` in the shared angle table.
fn sato_tate_indexed<F: Fn(usize) -> Complex64>(min_nodes: usize, f: F) -> Result<Complex64> {
    let table = angles();
    let weighted = |i: usize| {
        let s = table.sin[i];
        f(i) * (s * s)
    };
    let mut n = min_nodes.max(2).next_power_of_two().min(QUAD_MAX_NODES);
    let mut sum = Complex64::zero();
    let mut abs_sum = 0.0;
    let stride = QUAD_MAX_NODES / n;
    for j in 1..n {
        let v = weighted(j * stride);
        sum += v;
        abs_sum += v.norm();
    }
    let mut prev = sum * (2.0 / n as f64);
    loop {
        if 2 * n > QUAD_MAX_NODES {
            return Err(Error::Convergence(format!(
                "Sato–Tate quadrature did not settle within {QUAD_MAX_NODES} nodes"
            )));
        }
        n *= 2;
        let stride = QUAD_MAX_NODES / n;
        for j in (1..n).step_by(2) {
            let v = weighted(j * stride);
            sum += v;
            abs_sum += v.norm();
        }
        let scale = 2.0 / n as f64;
        let value = sum * scale;
        let size = (abs_sum * scale).max(value.norm());
        if (value - prev).norm() <= QUAD_TOL * size || size == 0.0 {
            return Ok(value);
        }
        prev = value;
    }
}

fn nodes_for(p: u64, nu: u32, policy: &TruncationPolicy) -> usize {
    let base = if p <= SMALL_PRIME { SMALL_PRIME_NODES } else { policy.quadrature_order };
    base.max(2 * nu as usize + 2)
}

/// `p^{−s−α}` for each shift, checked to lie inside the unit disc.
fn kernel_args(p: u64, a: &ShiftSet, s: Complex64) -> Result<Vec<Complex64>> {
    let lp = (p as f64).ln();
    a.shifts()
        .iter()
        .map(|alpha| {
            let e = s + alpha;
            if e.re <= 0.0 {
                return Err(Error::pre(format!(
                    "local factor needs Re(s + α) > 0, got {} at s = {s}, α = {alpha}",
                    e.re
                )));
            }
            Ok((-e * lp).exp())
        })
        .collect()
}

/// `(1 + x², 2x)` for each kernel argument, so `C(x; θ)⁻¹ = (1 + x²) − 2x·cos θ`.
fn denominators(xs: &[Complex64]) -> Vec<(Complex64, Complex64)> {
    xs.iter().map(|&x| (Complex64::one() + x * x, x * 2.0)).collect()
}

#[inline]
fn product_at(dens: &[(Complex64, Complex64)], t: f64) -> Complex64 {
    dens.iter().fold(Complex64::one(), |acc, &(c0, c1)| acc * (c0 - c1 * t))
}

fn local_with(p: u64, nu: u32, a: &ShiftSet, s: Complex64, policy: &TruncationPolicy) -> Result<Complex64> {
    let dens = denominators(&kernel_args(p, a, s)?);
    let table = angles();
    sato_tate_indexed(nodes_for(p, nu, policy), |i| {
        table.chebyshev_u(nu, i) / product_at(&dens, table.cos[i])
    })
}

/// `F_{A,p}(ν, s) = (2/π)∫₀^π ∏_α C(p^{−s−α}; θ)·U_ν(cos θ) sin²θ dθ`.
pub fn local_factor(p: u64, nu: u32, a: &ShiftSet, s: Complex64) -> Result<Complex64> {
    local_with(p, nu, a, s, &TruncationPolicy::default())
}

/// `Σ_{j≥0} F_{A,p}(j+ν, s)·y^j` with `y = p^{−w}` (or `y = 0`), using
/// `Σ_j U_{j+ν} y^j = (U_ν − y U_{ν−1})·C(y)`.
fn shifted_series_factor(
    p: u64,
    nu: u32,
    a: &ShiftSet,
    s: Complex64,
    y: Complex64,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    let mut xs = kernel_args(p, a, s)?;
    if y.norm() >= 1.0 {
        return Err(Error::pre(format!("twist variable p^(−w) = {y} is not inside the unit disc")));
    }
    let nodes = nodes_for(p, nu, policy).max(if p <= SMALL_PRIME { SMALL_PRIME_NODES } else { 0 });
    xs.push(y);
    let dens = denominators(&xs);
    let table = angles();
    sato_tate_indexed(nodes, |i| {
        let head = if nu == 0 {
            Complex64::one()
        } else {
            Complex64::new(table.chebyshev_u(nu, i), 0.0) - y * table.chebyshev_u(nu - 1, i)
        };
        head / product_at(&dens, table.cos[i])
    })
}

/// A truncated Euler product with its estimated truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerValue {
    pub value: Complex64,
    /// Estimated `|full − truncated|` from the primes beyond the cutoff.
    pub tail: f64,
    /// Number of local factors multiplied.
    pub primes: usize,
}

/// `Σ_{p>P} p^{−3/2} ≤ ∫_P^∞ dt/(t^{3/2} ln t) ≤ 2/(√P ln P)`.
fn prime_tail_sum(cutoff: u64) -> f64 {
    let p = cutoff as f64;
    2.0 / (p.sqrt() * p.ln())
}

fn check_zeta_arg(b: Complex64) -> Result<()> {
    if (b - 1.0).norm() <= CONFLUENCE_GAP {
        return Err(Error::pre(format!("regularizer ζ({b}) sits on the pole")));
    }
    if b.re <= 0.0 {
        return Err(Error::pre(format!("regularizer ζ({b}) lies outside Re > 0")));
    }
    Ok(())
}

/// `∏_b ζ(b) × ∏_p [local(p)·∏_b (1 − p^{−b})]` over `p ≤ P` and the
/// `extra` primes, with the tail estimated from `p ∈ (P/2, P]`.
fn regularized_product<F>(
    regularizers: &[Complex64],
    extra: &[u64],
    policy: &TruncationPolicy,
    local: F,
) -> Result<EulerValue>
where
    F: Fn(u64) -> Result<Complex64> + Sync,
{
    policy.validate()?;
    for &b in regularizers {
        check_zeta_arg(b)?;
    }
    let cutoff = policy.prime_cutoff;
    let mut primes = primes_up_to(cutoff);
    for &p in extra {
        if p > cutoff && !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let factors: Vec<Complex64> = primes
        .par_iter()
        .map(|&p| {
            let lp = (p as f64).ln();
            let mut v = local(p)?;
            for &b in regularizers {
                v *= Complex64::one() - (-b * lp).exp();
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    // fixed ascending order keeps the result bit-stable
    let mut value = Complex64::one();
    for f in &factors {
        value *= f;
    }
    for &b in regularizers {
        value *= zeta_continued(b)?;
    }
    let fit = primes
        .iter()
        .zip(&factors)
        .filter(|(&p, _)| p > cutoff / 2 && p <= cutoff && !extra.contains(&p))
        .map(|(&p, f)| (f - 1.0).norm() * (p as f64).powf(1.5))
        .fold(0.0, f64::max);
    let tail = value.norm() * fit * prime_tail_sum(cutoff);
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::numeric("Euler product overflowed"));
    }
    Ok(EulerValue { value, tail, primes: primes.len() })
}

/// `F_A(m, s)`, zeta-regularized: `∏_{i<j} ζ(2s+αᵢ+αⱼ)` times the product of
/// regularized local factors.
pub fn f_a(m: u64, s: Complex64, a: &ShiftSet, policy: &TruncationPolicy) -> Result<EulerValue> {
    if m == 0 {
        return Err(Error::pre("F_A(m, s) needs m ≥ 1"));
    }
    let fm = factorize(m)?;
    let regs: Vec<Complex64> = a.pair_sums().iter().map(|ab| s * 2.0 + ab).collect();
    let extra: Vec<u64> = fm.primes().collect();
    regularized_product(&regs, &extra, policy, |p| local_with(p, fm.ord(p), a, s, policy))
}

/// `G_l(A) = F_A(l, 1/2)`.
pub fn g_l(l: u64, a: &ShiftSet, policy: &TruncationPolicy) -> Result<EulerValue> {
    f_a(l, Complex64::new(0.5, 0.0), a, policy)
}

/// `Σ_m F_A(m, s) χ₀(m) m^{−w}` for the principal character `χ₀ mod q`, as
/// the Euler product of `(2/π)∫∏C(p^{−s−α})·C(χ₀(p)p^{−w}) sin²θ dθ` with
/// `ζ(s+w+αᵢ)`, `ζ(2s+αᵢ+αⱼ)` (i<j) and `ζ(2s+2w+αᵢ+αⱼ)` (i≤j) extracted.
/// At `p | q` the twist kernel is `C(0) = 1`, leaving `F_{A,p}(0, s)`.
pub fn twisted_series(a: &ShiftSet, s: Complex64, w: Complex64, q: u64, policy: &TruncationPolicy) -> Result<EulerValue> {
    if s.re <= 0.5 {
        return Err(Error::pre(format!("twisted series needs Re s > 1/2, got {s}")));
    }
    if w.re <= 0.0 {
        return Err(Error::pre(format!("twisted series needs Re w > 0, got {w}")));
    }
    if q == 0 {
        return Err(Error::pre("modulus q must be positive"));
    }
    let regs = twisted_regularizers(a, s, w);
    let fq = factorize(q)?;
    let extra: Vec<u64> = fq.primes().collect();
    regularized_product(&regs, &extra, policy, |p| {
        let y = if q.is_multiple_of(p) { Complex64::zero() } else { (-w * (p as f64).ln()).exp() };
        shifted_series_factor(p, 0, a, s, y, policy)
    })
}

fn twisted_regularizers(a: &ShiftSet, s: Complex64, w: Complex64) -> Vec<Complex64> {
    let al = a.shifts();
    let mut regs: Vec<Complex64> = al.iter().map(|x| s + w + x).collect();
    regs.extend(a.pair_sums().iter().map(|ab| s * 2.0 + ab));
    for i in 0..al.len() {
        for j in i..al.len() {
            regs.push(s * 2.0 + w * 2.0 + al[i] + al[j]);
        }
    }
    regs
}

/// `Σ_{(m, c/g)=1} F_A(mg, s) m^{−w}` with the correction factors exposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoprimeSeries {
    pub value: EulerValue,
    /// `𝓐 = ∏_{p | c/g} Σ_j F_{A,p}(j, s) p^{−jw}`.
    pub a_factor: Complex64,
    /// `𝓑 = ∏_{p | c/g} F_{A,p}(ν_p(g), s)`.
    pub b_factor: Complex64,
    /// `𝓒 = ∏_{p ∤ c/g, p | g} Σ_j F_{A,p}(j+ν_p(g), s) p^{−jw} / Σ_j F_{A,p}(j, s) p^{−jw}`.
    pub c_factor: Complex64,
}

/// The series over `m` coprime to `c/g` of `F_A(mg, s) m^{−w}`, as the full
/// twisted series times `𝓐⁻¹·𝓑·𝓒`. With every Euler product running over all
/// primes, `𝓑` must include the primes of `c/g` that do not divide `g`, where
/// it contributes `F_{A,p}(0, s)`.
pub fn coprime_restricted_series(
    c: u64,
    g: u64,
    a: &ShiftSet,
    s: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<CoprimeSeries> {
    if c == 0 || g == 0 || !c.is_multiple_of(g) {
        return Err(Error::pre(format!("g = {g} must be a positive divisor of c = {c}")));
    }
    let full = twisted_series(a, s, w, 1, policy)?;
    let cg = c / g;
    let fc = factorize(c)?;
    let fg = factorize(g)?;
    let mut af = Complex64::one();
    let mut bf = Complex64::one();
    let mut cf = Complex64::one();
    for p in fc.primes() {
        let y = (-w * (p as f64).ln()).exp();
        let nu = fg.ord(p);
        let base = shifted_series_factor(p, 0, a, s, y, policy)?;
        if cg.is_multiple_of(p) {
            af *= base;
            bf *= local_with(p, nu, a, s, policy)?;
        } else {
            cf *= shifted_series_factor(p, nu, a, s, y, policy)? / base;
        }
    }
    let ratio = bf * cf / af;
    let value = EulerValue {
        value: full.value * ratio,
        tail: full.tail * ratio.norm(),
        primes: full.primes,
    };
    Ok(CoprimeSeries { value, a_factor: af, b_factor: bf, c_factor: cf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::chebyshev_u_sequence;
    use crate::special::zeta;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn kernel_basics() {
        assert_eq!(c_kernel(c(0.0, 0.0), 0.7).unwrap(), c(1.0, 0.0));
        assert!(c_kernel(c(1.0, 0.0), 0.3).unwrap_err().is_precondition());
        // generating function of U_j
        for &x in &[c(0.5, 0.0), c(-0.3, 0.4), c(0.1, -0.2)] {
            for &theta in &[0.2, 1.0, 2.9] {
                let u = chebyshev_u_sequence(60, &f64::cos(theta));
                let mut sum = Complex64::zero();
                let mut xp = Complex64::one();
                for uj in u {
                    sum += xp * uj;
                    xp *= x;
                }
                assert!((sum - c_kernel(x, theta).unwrap()).norm() < 1e-10);
            }
        }
    }

    type MomentWeight = (fn(f64) -> f64, Complex64);

    #[test]
    fn moment_integrals() {
        // the four integrals against C(Y; θ): 1, Y, 1+Y², Y²
        for y in [c(0.1, 0.0), c(0.5, 0.0), c(0.0, 0.9), c(0.9 * 0.6, 0.9 * 0.8)] {
            let weights: [MomentWeight; 4] = [
                (|_| 1.0, Complex64::one()),
                (|t| 2.0 * t, y),
                (|t| 4.0 * t * t, Complex64::one() + y * y),
                (|t| 4.0 * t * t - 1.0, y * y),
            ];
            for (g, want) in weights {
                let got = sato_tate_integral(256, |th: f64| c_kernel(y, th).unwrap() * g(th.cos())).unwrap();
                assert!((got - want).norm() < 1e-12, "Y={y}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn quadrature_in_single_precision() {
        let v: Complex<f32> = sato_tate_integral(16, |th: f32| c_kernel(Complex::new(0.3f32, 0.0), th).unwrap()).unwrap();
        assert!((v.re - 1.0).abs() < 1e-5);
    }

    #[test]
    fn local_factor_closed_forms() {
        let (al, be) = (c(0.1, 0.02), c(-0.05, 0.07));
        let a = ShiftSet::new(vec![al, be]).unwrap();
        for p in [2u64, 3, 7, 101] {
            for s in [c(0.6, 0.0), c(0.75, 3.0)] {
                let x = (-(s + al) * (p as f64).ln()).exp();
                let y = (-(s + be) * (p as f64).ln()).exp();
                let v0 = local_factor(p, 0, &a, s).unwrap();
                assert!(close(v0, (Complex64::one() - x * y).inv(), 1e-12));
                let v1 = local_factor(p, 1, &a, s).unwrap();
                assert!(close(v1, (x + y) / (Complex64::one() - x * y), 1e-12));
            }
        }
        let single = ShiftSet::new(vec![c(0.1, 0.0)]).unwrap();
        for nu in 0..6 {
            let got = local_factor(5, nu, &single, c(0.5, 0.0)).unwrap();
            let want = 5f64.powf(-0.6 * nu as f64);
            assert!((got.re - want).abs() < 1e-13 && got.im.abs() < 1e-13);
        }
        assert!(local_factor(2, 0, &single, c(-0.2, 0.0)).unwrap_err().is_precondition());
    }

    #[test]
    fn local_factors_generate_the_l_function_product() {
        // Σ_e λ(p^e) F_{A,p}(e, s) = ∏_α (1 − λ(p)p^{−s−α} + p^{−2s−2α})⁻¹
        let f = &crate::modforms::eigensystems(12, 50).unwrap()[0];
        let a = ShiftSet::new(vec![c(0.1, 0.0), c(0.15, 0.05)]).unwrap();
        let s = c(2.0, 0.0);
        for p in primes_up_to(50) {
            let t = f.lambda(p).unwrap() / 2.0;
            let u = chebyshev_u_sequence(40, &t);
            let mut series = Complex64::zero();
            for (e, ue) in u.iter().enumerate() {
                series += local_factor(p, e as u32, &a, s).unwrap() * ue;
            }
            let want = a.shifts().iter().fold(Complex64::one(), |acc, al| {
                let x = (-(s + al) * (p as f64).ln()).exp();
                acc / (Complex64::one() - x * (2.0 * t) + x * x)
            });
            assert!((series - want).norm() < 1e-12, "p = {p}: {series} vs {want}");
        }
    }

    #[test]
    fn shift_set_invariants() {
        assert!(ShiftSet::from_real(&[0.3]).unwrap_err().is_precondition());
        assert!(ShiftSet::from_real(&[0.1, -0.1]).unwrap_err().is_precondition());
        assert!(ShiftSet::from_real(&[0.1, 0.1]).unwrap_err().is_precondition());
        assert!(ShiftSet::from_real(&[]).is_err());
        let a = ShiftSet::confluent(vec![c(0.1, 0.0), c(-0.1, 0.0)]).unwrap();
        assert!(a.is_confluent());
        let b = ShiftSet::from_real(&[0.1, 0.15, 0.2]).unwrap();
        assert_eq!(b.swap(&[1]).shifts()[1], c(-0.15, 0.0));
        let z = c(0.25, 1.0);
        let sw = b.swap_translated(&[0], z);
        assert_eq!(sw.shifts()[0], -(c(0.1, 0.0) + z));
        assert_eq!(sw.shifts()[2], c(0.2, 0.0) + z);
        assert_eq!(b.subsets(1), vec![vec![], vec![0], vec![1], vec![2]]);
        assert_eq!(b.subsets(3).len(), 8);
        assert_eq!(b.pair_sums().len(), 3);
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::default().validate().is_ok());
        let p = TruncationPolicy { prime_cutoff: 50, ..Default::default() };
        assert!(p.validate().unwrap_err().is_precondition());
        let p = TruncationPolicy { epsilon: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = TruncationPolicy { precision_bits: 80, ..Default::default() };
        assert!(p.validate().is_err());
    }

    fn tau(m: u64, al: Complex64, be: Complex64) -> Complex64 {
        crate::arith::divisors(m)
            .into_iter()
            .map(|d| (-al * (d as f64).ln()).exp() * (-be * ((m / d) as f64).ln()).exp())
            .sum()
    }

    #[test]
    fn f_a_matches_two_shift_closed_form() {
        // L(s+α)L(s+β) = ζ(2s+α+β) Σ λ(m) τ_{α,β}(m) m^{−s}
        let (al, be) = (c(0.1, 0.0), c(0.15, 0.0));
        let a = ShiftSet::new(vec![al, be]).unwrap();
        let policy = TruncationPolicy::default();
        let s = c(0.75, 0.0);
        let z = zeta(s * 2.0 + al + be).unwrap();
        for m in [1u64, 2, 6, 12, 1009, 2 * 1013] {
            let got = f_a(m, s, &a, &policy).unwrap();
            let want = z * tau(m, al, be) * (-s * (m as f64).ln()).exp();
            assert!(close(got.value, want, 1e-11), "m {m}: {} vs {want}", got.value);
            assert!(got.tail < 1e-10);
        }
        let single = ShiftSet::new(vec![c(0.05, 0.1)]).unwrap();
        let got = f_a(12, c(0.6, 0.0), &single, &policy).unwrap();
        let want = (-(c(0.65, 0.1)) * 12f64.ln()).exp();
        assert!(close(got.value, want, 1e-12));
    }

    #[test]
    fn f_a_finite_part_is_multiplicative() {
        let a = ShiftSet::new(vec![c(0.1, 0.0), c(0.02, 0.05), c(-0.04, 0.0)]).unwrap();
        let policy = TruncationPolicy::default();
        let s = c(0.7, 0.5);
        let one = f_a(1, s, &a, &policy).unwrap().value;
        let f = |m| f_a(m, s, &a, &policy).unwrap().value;
        for (m, n) in [(4u64, 9u64), (6, 35), (8, 1013)] {
            let lhs = f(m * n) * one;
            let rhs = f(m) * f(n);
            assert!(close(lhs, rhs, 1e-11), "{m}·{n}");
        }
    }

    #[test]
    fn remainder_is_order_p_three_halves() {
        let a = ShiftSet::new(vec![c(0.1, 0.0), c(0.15, 0.0), c(0.05, 0.02)]).unwrap();
        let s = c(0.5, 0.0);
        let fitted = |p: u64| {
            let raw = local_factor(p, 0, &a, s).unwrap();
            let pairs: Complex64 = a.pair_sums().iter().map(|ab| (-(s * 2.0 + ab) * (p as f64).ln()).exp()).sum();
            (raw - 1.0 - pairs).norm() * (p as f64).powf(1.5)
        };
        for p in [101u64, 211, 401, 809] {
            let (c1, c4) = (fitted(p), fitted(crate::arith::primes_up_to(4 * p + 40).into_iter().find(|&q| q >= 4 * p).unwrap()));
            assert!(c4 <= c1, "p {p}: {c1} then {c4}");
        }
    }

    #[test]
    fn g_l_examples() {
        let policy = TruncationPolicy::default();
        let single = ShiftSet::new(vec![c(0.1, 0.0)]).unwrap();
        let v = g_l(6, &single, &policy).unwrap().value;
        assert!(close(v, c(6f64.powf(-0.6), 0.0), 1e-12));
        let a = ShiftSet::new(vec![c(0.05, 0.05), c(0.08, -0.03), c(-0.02, 0.0)]).unwrap();
        let b = ShiftSet::new(vec![c(-0.02, 0.0), c(0.05, 0.05), c(0.08, -0.03)]).unwrap();
        for l in [1u64, 2, 6] {
            assert!(close(g_l(l, &a, &policy).unwrap().value, g_l(l, &b, &policy).unwrap().value, 1e-13));
        }
    }

    #[test]
    fn g_one_against_brute_force_double_sum() {
        // Σ_{m₁,m₂} (m₁m₂)^{−1/2} m₁^{−α} m₂^{−β} ∏_p c₀(ord_p m₁, ord_p m₂),
        // with c₀ from the integer linearization tables
        let (al, be) = (0.10, 0.15);
        let n = 3000u64;
        let mut sum = 0.0;
        for m1 in 1..=n {
            let f1 = factorize(m1).unwrap();
            for m2 in 1..=n {
                let f2 = factorize(m2).unwrap();
                let mut coef = 1u128;
                for p in f1.primes().chain(f2.primes()) {
                    let t = crate::chebyshev::linearize_product(&[f1.ord(p), f2.ord(p)]).unwrap();
                    coef *= t.coefficient(0);
                    if coef == 0 {
                        break;
                    }
                }
                if coef != 0 {
                    sum += coef as f64 * (m1 as f64).powf(-0.5 - al) * (m2 as f64).powf(-0.5 - be);
                }
            }
        }
        // the surviving diagonal Σ n^{−σ}, σ = 1 + α + β, has Euler–Maclaurin tail
        let sigma = 1.0 + al + be;
        let nf = n as f64;
        sum += nf.powf(1.0 - sigma) / (sigma - 1.0) - 0.5 * nf.powf(-sigma) + sigma / 12.0 * nf.powf(-sigma - 1.0);
        let a = ShiftSet::from_real(&[al, be]).unwrap();
        let g = g_l(1, &a, &TruncationPolicy::default()).unwrap().value;
        assert!((g.re - sum).abs() < 1e-4, "{g} vs {sum}");
    }

    #[test]
    fn twisted_series_single_shift() {
        // r = 1: F_A(m, s) = m^{−s−α}, so the series is ζ(s+w+α)
        let a = ShiftSet::new(vec![c(0.1, 0.0)]).unwrap();
        let policy = TruncationPolicy::default();
        let got = twisted_series(&a, c(1.0, 0.0), c(1.0, 0.0), 1, &policy).unwrap();
        let n = 20_000u64;
        let sigma = 2.1;
        let mut direct: f64 = (1..=n).map(|m| (m as f64).powf(-sigma)).sum();
        let nf = n as f64;
        direct += nf.powf(1.0 - sigma) / (sigma - 1.0) - 0.5 * nf.powf(-sigma) + sigma / 12.0 * nf.powf(-sigma - 1.0);
        assert!((got.value.re - direct).abs() < 1e-8, "{} vs {direct}", got.value);
        // χ₀ mod 6 removes the Euler factors at 2 and 3
        let q6 = twisted_series(&a, c(1.0, 0.0), c(1.0, 0.0), 6, &policy).unwrap();
        let want = direct * (1.0 - 2f64.powf(-sigma)) * (1.0 - 3f64.powf(-sigma));
        assert!((q6.value.re - want).abs() < 1e-8);
    }

    /// `Σ_{m ≤ M} F_A(m g, s) m^{−w}` over m coprime to `coprime_to`, from
    /// per-prime factors computed by quadrature.
    fn direct_restricted(a: &ShiftSet, s: Complex64, w: Complex64, g: u64, coprime_to: u64, m_max: u64) -> Complex64 {
        let policy = TruncationPolicy::default();
        let base = f_a(1, s, a, &policy).unwrap().value;
        let mut sum = Complex64::zero();
        for m in 1..=m_max {
            if crate::arith::gcd(m, coprime_to) != 1 {
                continue;
            }
            // F_A(n) = F_A(1)·∏_{p|n} F_{A,p}(ν)/F_{A,p}(0)
            let n = m * g;
            let fac = factorize(n).unwrap();
            let mut v = base;
            for p in fac.primes() {
                v *= local_factor(p, fac.ord(p), a, s).unwrap() / local_factor(p, 0, a, s).unwrap();
            }
            sum += v * (-w * (m as f64).ln()).exp();
        }
        sum
    }

    #[test]
    fn coprime_restricted_matches_direct_sums() {
        let a = ShiftSet::new(vec![c(0.1, 0.0), c(0.15, 0.0)]).unwrap();
        let (s, w) = (c(1.0, 0.0), c(2.5, 0.0));
        let policy = TruncationPolicy::default();
        let full = twisted_series(&a, s, w, 1, &policy).unwrap().value;
        let trivial = coprime_restricted_series(1, 1, &a, s, w, &policy).unwrap();
        assert!(close(trivial.value.value, full, 1e-14));
        // m^{−w} with Re w = 2.5 makes 4000 terms accurate to ~1e-9
        for (cc, g) in [(5u64, 1u64), (5, 5), (12, 2), (12, 4)] {
            let got = coprime_restricted_series(cc, g, &a, s, w, &policy).unwrap();
            let want = direct_restricted(&a, s, w, g, cc / g, 4000);
            assert!(close(got.value.value, want, 1e-8), "c {cc} g {g}: {} vs {want}", got.value.value);
        }
        assert!(coprime_restricted_series(12, 5, &a, s, w, &policy).unwrap_err().is_precondition());
    }

    #[test]
    fn confluent_mode_extrapolates() {
        // a smooth function of the shifts is recovered to second order
        let a = ShiftSet::confluent(vec![c(0.1, 0.0), c(0.1, 0.0)]).unwrap();
        let v = a
            .extrapolate(|b| Ok(b.shifts().iter().map(|x| (x * PI).exp()).sum()))
            .unwrap();
        let want = (0.1 * PI).exp() * 2.0;
        assert!((v.re - want).abs() < 1e-10);
    }
}
