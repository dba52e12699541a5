//! Quadrature rules.

use std::sync::OnceLock;

use crate::Real;

/// Reduces `π·num/den` to `sign · f(π·r/(4·den))` with `0 ≤ r ≤ den`, where
/// `f` is `sin` or, when the flag is set, `cos`. Integer arithmetic only.
fn reduce_pi_ratio(num: u64, den: u64) -> (bool, u128, bool) {
    assert!(den > 0, "sin_pi_ratio: zero denominator");
    // units of π/(4·den): a full turn is 8·den
    let full = 8 * den as u128;
    let mut r = (num as u128 * 4) % full;
    let negative = r >= full / 2;
    if negative {
        r -= full / 2;
    }
    if r > full / 4 {
        r = full / 2 - r;
    }
    if r <= full / 8 {
        (negative, r, false)
    } else {
        (negative, full / 4 - r, true)
    }
}

/// `sin(π·num/den)` with the argument reduced exactly to `[0, π/4]`.
pub fn sin_pi_ratio<T: Real>(num: u64, den: u64) -> T {
    let (negative, r, use_cos) = reduce_pi_ratio(num, den);
    let x = T::PI() * T::from_u128(r).unwrap() / T::from_u128(4 * den as u128).unwrap();
    let v = if use_cos { x.cos() } else { x.sin() };
    if negative {
        -v
    } else {
        v
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`: about 106 bits. Only the
/// operations the quadrature oracle needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    DoubleDouble { hi: s, lo: b - (s - a) }
}

impl DoubleDouble {
    pub const PI: DoubleDouble = DoubleDouble { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// `sin(π·num/den)`, accurate to a few units in `2⁻¹⁰⁶`.
    pub fn sin_pi_ratio(num: u64, den: u64) -> Self {
        let (negative, r, use_cos) = reduce_pi_ratio(num, den);
        let x = Self::PI * Self::from_f64(r as f64) / Self::from_f64(4.0 * den as f64);
        let (sin, cos) = x.sin_cos_reduced();
        let v = if use_cos { cos } else { sin };
        if negative {
            -v
        } else {
            v
        }
    }

    /// Taylor series for `0 ≤ x ≤ π/4`; the 16th terms are below
    /// `(π/4)^{32}/32! ≈ 2e-39`.
    fn sin_cos_reduced(self) -> (Self, Self) {
        let x2 = self * self;
        let one = Self::from_f64(1.0);
        let (mut sin, mut cos) = (self, one);
        let (mut ts, mut tc) = (self, one);
        for k in 1..=16u32 {
            let a = 2.0 * k as f64;
            ts = -(ts * x2) / Self::from_f64(a * (a + 1.0));
            tc = -(tc * x2) / Self::from_f64((a - 1.0) * a);
            sin = sin + ts;
            cos = cos + tc;
        }
        (sin, cos)
    }
}

impl std::ops::Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let v = quick_two_sum(s, e + t);
        quick_two_sum(v.hi, v.lo + f)
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + -o
    }
}

impl std::ops::Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        // mul_add is fused, so this is the exact rounding error of p
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl std::ops::Div for DoubleDouble {
    type Output = Self;
    /// Long division with two correction steps.
    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self - o * Self::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Self::from_f64(q2);
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + Self::from_f64(q3)
    }
}

/// Gauss–Chebyshev rule of the second kind with `n` nodes:
/// `∫_{-1}^{1} f(t)√(1−t²) dt ≈ Σ wᵢ f(tᵢ)`, exact for polynomials of degree
/// `≤ 2n − 1`. Returns `(θᵢ, wᵢ)` with `tᵢ = cos θᵢ`.
pub fn gauss_chebyshev2<T: Real>(n: usize) -> Vec<(T, T)> {
    let h = T::PI() / T::from_usize(n + 1).unwrap();
    (1..=n)
        .map(|i| {
            let theta = h * T::from_usize(i).unwrap();
            let s: T = sin_pi_ratio(i as u64, n as u64 + 1);
            (theta, h * s * s)
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_n` from the Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 20-point Gauss–Legendre rule used by the adaptive integrators.
pub fn gl20() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Applies a Gauss–Legendre rule to `f` on `[a, b]`.
pub fn gl_panel<V, F>(rule: &[(f64, f64)], a: f64, b: f64, f: &F) -> V
where
    V: std::ops::Add<Output = V> + std::ops::Mul<f64, Output = V> + Default,
    F: Fn(f64) -> V,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = V::default();
    for &(x, w) in rule {
        acc = acc + f(mid + half * x) * (w * half);
    }
    acc
}
