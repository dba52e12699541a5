//! Smooth cutoffs, their Mellin transforms, and vertical-line integrals.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::quad::{gl20, gl_panel};
use crate::{Complex64, Error, Result};

type Profile = dyn Fn(f64) -> f64 + Send + Sync;

/// A smooth weight `ψ` supported in `(0, 1)`, with a cache of Mellin samples.
#[derive(Clone)]
pub struct SmoothWeight {
    id: String,
    profile: Arc<Profile>,
    /// `ψ` is negligible (below `1e-20` relative) outside `[lo, hi]`.
    lo: f64,
    hi: f64,
    cache: Arc<RwLock<HashMap<(u64, u64), Complex64>>>,
}

impl fmt::Debug for SmoothWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothWeight").field("id", &self.id).finish()
    }
}

impl Default for SmoothWeight {
    fn default() -> Self {
        Self::bump()
    }
}

impl SmoothWeight {
    /// `ψ(t) = exp(4 − 1/(t(1−t)))`: the standard bump scaled to peak 1 at `t = 1/2`.
    pub fn bump() -> Self {
        Self::custom("bump", 4.0)
    }

    /// `ψ(t) = exp(−1/(t(1−t)))` without rescaling (peak `e^{−4}`).
    pub fn standard_bump() -> Self {
        Self::custom("standard-bump", 0.0)
    }

    fn custom(id: &str, log_scale: f64) -> Self {
        Self::from_fn(id, move |t| {
            if t <= 0.0 || t >= 1.0 {
                0.0
            } else {
                (log_scale - 1.0 / (t * (1.0 - t))).exp()
            }
        })
    }

    /// Wraps an arbitrary profile. It must vanish outside `(0, 1)`; the
    /// effective support is located numerically.
    pub fn from_fn(id: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let profile: Arc<Profile> = Arc::new(f);
        let peak = (1..1000).map(|i| profile(i as f64 / 1000.0).abs()).fold(0.0, f64::max);
        let floor = 1e-20 * peak;
        let mut lo = 0.0;
        while lo < 0.5 && profile(lo + 1e-4).abs() <= floor {
            lo += 1e-4;
        }
        let mut hi = 1.0;
        while hi > 0.5 && profile(hi - 1e-4).abs() <= floor {
            hi -= 1e-4;
        }
        Self {
            id: id.to_string(),
            profile,
            lo,
            hi,
            cache: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.profile)(t)
    }

    /// Effective support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `ψ̃(z)`, memoized on the exact bits of `z`.
    pub fn mellin_cached(&self, z: Complex64) -> Result<Complex64> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.read().expect("mellin cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = mellin(self, z)?;
        self.cache.write().expect("mellin cache poisoned").insert(key, v);
        Ok(v)
    }
}

/// `ψ̃(z) = ∫₀¹ ψ(t) t^{z−1} dt` for `Re z > 0`.
///
/// Integrates in `u = ln t` over dyadic panels (finer toward both ends of the
/// support), each split so that `|Im z|·Δu ≤ 8`, and doubles the panel count
/// until two passes agree to `1e-14`.
pub fn mellin(psi: &SmoothWeight, z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::pre(format!("mellin: Re z = {} must be positive", z.re)));
    }
    let (lo, hi) = psi.support();
    let mut breaks = vec![lo];
    let mut t = 0.5;
    while t / 2.0 > lo {
        t /= 2.0;
    }
    while t < 0.5 {
        breaks.push(t);
        t *= 2.0;
    }
    breaks.push(0.5);
    let mut gap = 0.25;
    while 1.0 - gap < hi {
        breaks.push(1.0 - gap);
        gap /= 2.0;
    }
    breaks.push(hi);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let u_breaks: Vec<f64> = breaks.iter().map(|b| b.ln()).collect();
    let zm1 = z - 1.0;
    let integrand = |u: f64| {
        let t = u.exp();
        // t^{z−1} dt = e^{u z} du
        let w = psi.eval(t);
        if w == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (zm1 * u).exp() * (w * t)
        }
    };
    let rule = gl20();
    let pass = |refine: usize| {
        let mut acc = Complex64::new(0.0, 0.0);
        for pair in u_breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let osc = ((b - a) * z.im.abs() / 8.0).ceil().max(1.0) as usize;
            let pieces = osc * refine;
            for i in 0..pieces {
                let pa = a + (b - a) * i as f64 / pieces as f64;
                let pb = a + (b - a) * (i + 1) as f64 / pieces as f64;
                acc += gl_panel(rule, pa, pb, &integrand);
            }
        }
        acc
    };
    let mut refine = 1;
    let mut prev = pass(refine);
    loop {
        refine *= 2;
        let next = pass(refine);
        if (next - prev).norm() <= 1e-14 {
            return Ok(next);
        }
        if refine >= 64 {
            return Err(Error::Convergence(format!(
                "mellin: transform at z = {z} did not settle (last change {:.3e})",
                (next - prev).norm()
            )));
        }
        prev = next;
    }
}

/// Result of a vertical-line integral, with its discretization metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourValue {
    pub value: Complex64,
    pub epsilon: f64,
    pub height: f64,
    pub step: f64,
    pub nodes: usize,
    /// Step-refinement error (last change, or its extrapolation once the
    /// changes decay geometrically in `1/h`) plus the neglected tail.
    pub error: f64,
}

/// Settings of [`contour_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSettings {
    pub epsilon: f64,
    pub initial_step: f64,
    /// Absolute tolerance for both the tail cutoff and the step refinement.
    pub tolerance: f64,
    pub max_height: f64,
    pub max_halvings: u32,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self {
            epsilon: 0.25,
            initial_step: 0.25,
            tolerance: 1e-10,
            max_height: 5000.0,
            max_halvings: 8,
        }
    }
}

/// `(1/2πi)∫_{(ε)} f(z) dz` by the trapezoidal rule on `z = ε + it`.
///
/// The height `T` grows until the integrand stays below `tolerance/100` over
/// the last 16 units of `t` on both sides; then the step is halved, reusing old
/// nodes, until successive sums agree to `tolerance`. Nodes are evaluated in
/// parallel and summed in ascending `|t|` order.
pub fn contour_integral<F>(settings: &ContourSettings, f: F) -> Result<ContourValue>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let eps = settings.epsilon;
    let eval = |t: f64| f(Complex64::new(eps, t));
    let mut h = settings.initial_step;
    let small = settings.tolerance / 100.0;

    // Grow the height in blocks on the initial grid.
    let block = (16.0 / h).ceil() as i64;
    let mut values: Vec<(f64, Complex64)> = vec![(0.0, eval(0.0)?)];
    let mut j_max = 0i64;
    let mut tail = f64::INFINITY;
    while tail > small {
        let js: Vec<i64> = (j_max + 1..=j_max + block).collect();
        let fresh: Vec<(f64, Complex64, Complex64)> = js
            .par_iter()
            .map(|&j| {
                let t = j as f64 * h;
                Ok((t, eval(t)?, eval(-t)?))
            })
            .collect::<Result<_>>()?;
        tail = fresh.iter().map(|(_, a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
        for (t, a, b) in fresh {
            values.push((t, a));
            values.push((-t, b));
        }
        j_max += block;
        if j_max as f64 * h > settings.max_height {
            return Err(Error::Convergence(format!(
                "contour at Re z = {eps}: integrand still {tail:.3e} at height {}",
                j_max as f64 * h
            )));
        }
    }
    let height = j_max as f64 * h;
    let ordered_sum = |vals: &mut Vec<(f64, Complex64)>| {
        vals.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
        vals.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v.1)
    };
    let mut raw = ordered_sum(&mut values);
    let mut sum = raw * h;
    let mut change = f64::INFINITY;
    for _ in 0..settings.max_halvings {
        let half = h / 2.0;
        let count = (height / h).round() as i64;
        let mut fresh: Vec<(f64, Complex64)> = (0..count)
            .into_par_iter()
            .map(|i| {
                let t = (2 * i + 1) as f64 * half;
                Ok([(t, eval(t)?), (-t, eval(-t)?)])
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        raw += ordered_sum(&mut fresh);
        values.extend(fresh);
        h = half;
        let next = raw * h;
        let last = change;
        change = (next - sum).norm();
        sum = next;
        if change <= settings.tolerance {
            break;
        }
        // Trapezoid errors on an analytic strip decay like exp(−c/h), so the
        // error after this halving is about change³/last² once in that regime.
        if last.is_finite() && change < last / 100.0 {
            let predicted = change.powi(3) / (last * last);
            if predicted <= settings.tolerance / 10.0 {
                change = predicted;
                break;
            }
        }
    }
    if change > settings.tolerance {
        return Err(Error::Convergence(format!(
            "contour at Re z = {eps}: step refinement stalled at h = {h}, change {change:.3e}"
        )));
    }
    let nodes = values.len();
    Ok(ContourValue {
        value: sum / (2.0 * std::f64::consts::PI),
        epsilon: eps,
        height,
        step: h,
        nodes,
        error: (change + tail * h) / (2.0 * std::f64::consts::PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_and_shape() {
        let psi = SmoothWeight::bump();
        assert_eq!(psi.eval(0.0), 0.0);
        assert_eq!(psi.eval(1.0), 0.0);
        assert_eq!(psi.eval(-0.3), 0.0);
        assert!((psi.eval(0.5) - 1.0).abs() < 1e-15);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!(psi.eval(t) >= 0.0);
            assert!((psi.eval(t) - psi.eval(1.0 - t)).abs() < 1e-15);
        }
        let (lo, hi) = psi.support();
        assert!(lo > 0.01 && hi < 0.99);
    }

    #[test]
    fn mellin_at_one_is_the_mass() {
        let psi = SmoothWeight::bump();
        let rule = crate::quad::gauss_legendre(40);
        let mass: f64 = (0..200)
            .map(|i| gl_panel(&rule, i as f64 / 200.0, (i + 1) as f64 / 200.0, &|t| psi.eval(t)))
            .sum();
        let m1 = mellin(&psi, Complex64::new(1.0, 0.0)).unwrap();
        assert!((m1.re - mass).abs() < 1e-14 && m1.im.abs() < 1e-15);
        let std = SmoothWeight::standard_bump();
        let m1s = mellin(&std, Complex64::new(1.0, 0.0)).unwrap();
        assert!((m1s.re * 4f64.exp() - mass).abs() < 1e-13);
    }

    #[test]
    fn mellin_decays_fast() {
        let psi = SmoothWeight::bump();
        // the envelope of |ψ̃(ε+iT)| is about exp(−√(2T)), whose log-log
        // slope passes −6 at T ≈ 72; check a 4x range beyond that
        let peak = |c: f64| {
            (0..40)
                .map(|i| mellin(&psi, Complex64::new(0.25, c + i as f64 * 0.25)).unwrap().norm())
                .fold(0.0, f64::max)
        };
        let a = peak(100.0);
        let b = peak(400.0);
        assert!(b / a < 4f64.powi(-6), "{a} {b}");
        assert!(peak(10.0) > a);
    }

    #[test]
    fn mellin_cache_is_transparent() {
        let psi = SmoothWeight::bump();
        let z = Complex64::new(0.25, 17.0);
        let a = psi.mellin_cached(z).unwrap();
        let b = psi.mellin_cached(z).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, mellin(&psi, z).unwrap());
    }

    #[test]
    fn inversion_roundtrip() {
        let psi = SmoothWeight::bump();
        let settings = ContourSettings::default();
        for i in 1..=10 {
            let x = i as f64 / 11.0;
            let v = contour_integral(&settings, |z| Ok(psi.mellin_cached(z)? * (-z * x.ln()).exp())).unwrap();
            assert!((v.value.re - psi.eval(x)).abs() < 1e-6, "x {x}: {} vs {}", v.value.re, psi.eval(x));
            assert!(v.value.im.abs() < 1e-8);
        }
    }

    #[test]
    fn contour_of_gaussian() {
        // (1/2πi)∫ e^{(z−ε)²} dz over Re z = ε equals 1/(2√π)
        let settings = ContourSettings { tolerance: 1e-13, ..Default::default() };
        let v = contour_integral(&settings, |z| Ok(((z - 0.25) * (z - 0.25)).exp())).unwrap();
        assert!((v.value.re - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
