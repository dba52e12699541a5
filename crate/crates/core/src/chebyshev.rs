//! Chebyshev polynomials of the second kind and the linearization
//! coefficients `c_l(m₁,…,m_r)` of products `U_{m₁}⋯U_{m_r} = Σ c_l U_l`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_traits::Num;

use crate::quad::{gauss_chebyshev2, sin_pi_ratio, DoubleDouble};
use crate::{Error, Real, Result};

/// `U_m(t)` by the three-term recurrence `U_{j+1} = 2t U_j − U_{j−1}`.
pub fn chebyshev_u<T: Real>(m: u32, t: T) -> Result<T> {
    if t.abs() > T::one() + T::lit(1e-12) {
        return Err(Error::pre(format!("chebyshev_u: |t| = {t} exceeds 1")));
    }
    let two_t = t + t;
    let (mut prev, mut cur) = (T::zero(), T::one());
    for _ in 0..m {
        (prev, cur) = (cur, two_t * cur - prev);
    }
    Ok(cur)
}

/// `[U_0(t), …, U_max(t)]` over any commutative ring; used by the exact
/// identity checks, where `t` may be rational or complex.
pub fn chebyshev_u_sequence<F: Num + Clone>(max: usize, t: &F) -> Vec<F> {
    let two_t = t.clone() + t.clone();
    let mut out = Vec::with_capacity(max + 1);
    out.push(F::one());
    if max >= 1 {
        out.push(two_t.clone());
    }
    for j in 2..=max {
        let next = two_t.clone() * out[j - 1].clone() - out[j - 2].clone();
        out.push(next);
    }
    out
}

/// Exact expansion of `U_{m₁}⋯U_{m_r}` in the `U_l` basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizationTable {
    pub inputs: Vec<u32>,
    /// `coefficients[l] = c_l`, for `l = 0..=Σmᵢ`.
    pub coefficients: Vec<u128>,
}

impl LinearizationTable {
    pub fn degree(&self) -> u32 {
        self.inputs.iter().sum()
    }

    pub fn coefficient(&self, l: u32) -> u128 {
        self.coefficients.get(l as usize).copied().unwrap_or(0)
    }

    /// Nonzero entries as an ordered map `l ↦ c_l`.
    pub fn to_map(&self) -> BTreeMap<u32, u128> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(l, &c)| (l as u32, c))
            .collect()
    }
}

/// Iterated pairwise rule `U_a U_b = Σ_{j = |a−b|, step 2}^{a+b} U_j`.
pub fn linearize_product(ms: &[u32]) -> Result<LinearizationTable> {
    if ms.is_empty() {
        return Err(Error::pre("linearize_product: need at least one factor"));
    }
    let mut coeffs = vec![0u128; ms[0] as usize + 1];
    coeffs[ms[0] as usize] = 1;
    for &b in &ms[1..] {
        let mut next = vec![0u128; coeffs.len() + b as usize];
        for (a, &c) in coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let a = a as u32;
            let mut j = a.abs_diff(b);
            while j <= a + b {
                next[j as usize] = next[j as usize]
                    .checked_add(c)
                    .expect("linearization coefficient overflow");
                j += 2;
            }
        }
        coeffs = next;
    }
    Ok(LinearizationTable {
        inputs: ms.to_vec(),
        coefficients: coeffs,
    })
}

/// `c_l(m₁,…,m_r) = (2/π)∫₀^π ∏ U_{mᵢ}(cos θ) · U_l(cos θ) sin²θ dθ` by
/// Gauss–Chebyshev quadrature of the second kind with `⌈(Σmᵢ + l)/2⌉ + 2`
/// nodes, which is exact for the polynomial integrand.
pub fn c_l_quadrature<T: Real>(l: u32, ms: &[u32]) -> T {
    let total: u32 = ms.iter().sum::<u32>() + l;
    let n = total.div_ceil(2) as usize + 2;
    let den = n as u64 + 1;
    let mut acc = T::zero();
    for (j, (_, w)) in (1..).zip(gauss_chebyshev2::<T>(n)) {
        let s: T = sin_pi_ratio(j, den);
        // U_m(cos θ_j) = sin((m+1)jπ/den) / sin(jπ/den), reduced exactly
        let u = |m: u32| sin_pi_ratio::<T>((m as u64 + 1) * j, den) / s;
        let mut prod = u(l);
        for &m in ms {
            prod *= u(m);
        }
        acc += w * prod;
    }
    acc * T::lit(2.0) / T::PI()
}

/// [`c_l_quadrature`] in double-double arithmetic. Products of 25 factors
/// reach `|U|^r ≈ 10⁸` at the nodes, so `f64` cannot resolve the larger
/// coefficients to `10⁻¹⁰`; this version can.
pub fn c_l_quadrature_extended(l: u32, ms: &[u32]) -> DoubleDouble {
    thread_local! {
        static SINES: RefCell<HashMap<u64, Rc<Vec<DoubleDouble>>>> = RefCell::new(HashMap::new());
    }
    let total: u32 = ms.iter().sum::<u32>() + l;
    let n = total.div_ceil(2) as u64 + 2;
    let den = n + 1;
    // every node value is sin(πk/den) for some 0 ≤ k < 2·den
    let sines = SINES.with(|cache| {
        cache
            .borrow_mut()
            .entry(den)
            .or_insert_with(|| Rc::new((0..2 * den).map(|k| DoubleDouble::sin_pi_ratio(k, den)).collect()))
            .clone()
    });
    let at = |k: u64| sines[(k % (2 * den)) as usize];
    let mut acc = DoubleDouble::from_f64(0.0);
    for j in 1..=n {
        // sin²θ · ∏ sin((m+1)θ)/sin θ over the r + 1 factors
        let s = at(j);
        let mut num = at((l as u64 + 1) * j);
        let mut s_pow = DoubleDouble::from_f64(1.0);
        for &m in ms {
            num = num * at((m as u64 + 1) * j);
            s_pow = s_pow * s;
        }
        acc = acc + num * s / s_pow;
    }
    // weights π/(n+1)·sin²θ_j times the 2/π normalization
    acc * DoubleDouble::from_f64(2.0) / DoubleDouble::from_f64(den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chebyshev_examples() {
        for t in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(chebyshev_u(0, t).unwrap(), 1.0);
        }
        assert_eq!(chebyshev_u(1, 0.5).unwrap(), 1.0);
        let th = std::f64::consts::PI / 7.0;
        let want = (6.0 * th).sin() / th.sin();
        assert!((chebyshev_u(5, th.cos()).unwrap() - want).abs() < 1e-12);
        assert!(chebyshev_u(3, 1.0 + 1e-9).is_err());
        assert!(chebyshev_u(3, 1.0 + 1e-13).is_ok());
        // U_m(1) = m + 1
        assert_eq!(chebyshev_u(9, 1.0f32).unwrap(), 10.0);
    }

    #[test]
    fn linearization_examples() {
        assert_eq!(linearize_product(&[4]).unwrap().to_map(), BTreeMap::from([(4, 1)]));
        assert_eq!(
            linearize_product(&[1, 1]).unwrap().to_map(),
            BTreeMap::from([(0, 1), (2, 1)])
        );
        assert_eq!(
            linearize_product(&[1, 1, 1]).unwrap().to_map(),
            BTreeMap::from([(1, 2), (3, 1)])
        );
        assert!(linearize_product(&[]).is_err());
    }

    #[test]
    fn quadrature_examples() {
        assert!((c_l_quadrature::<f64>(0, &[0]) - 1.0).abs() < 1e-14);
        assert!((c_l_quadrature::<f64>(2, &[1, 1]) - 1.0).abs() < 1e-14);
        let want = linearize_product(&[2, 2, 1]).unwrap().coefficient(3) as f64;
        assert!((c_l_quadrature::<f64>(3, &[2, 2, 1]) - want).abs() < 1e-12);
    }

    #[test]
    fn extended_quadrature_resolves_large_coefficients() {
        let ms = [1u32; 24];
        let table = linearize_product(&ms).unwrap();
        for l in 0..=24 {
            let c = table.coefficient(l) as f64;
            let err = (c_l_quadrature_extended(l, &ms) - DoubleDouble::from_f64(c)).to_f64().abs();
            assert!(err < 1e-18, "l {l}: {err}");
        }
    }

    #[test]
    fn sequence_matches_scalar_recurrence() {
        let seq = chebyshev_u_sequence(12, &0.37f64);
        for (m, v) in seq.iter().enumerate() {
            assert!((v - chebyshev_u(m as u32, 0.37).unwrap()).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn table_invariants(ms in prop::collection::vec(0u32..7, 1..5)) {
            let table = linearize_product(&ms).unwrap();
            let sum: u32 = ms.iter().sum();
            prop_assert_eq!(table.coefficient(sum), 1);
            for l in 0..=sum + 3 {
                if l > sum || (sum - l) % 2 == 1 {
                    prop_assert_eq!(table.coefficient(l), 0);
                }
            }
            let mut rev = ms.clone();
            rev.reverse();
            prop_assert_eq!(linearize_product(&rev).unwrap().coefficients, table.coefficients.clone());
            // Σ c_l U_l(t) = ∏ U_{mᵢ}(t) at a sample point
            let t = 0.41;
            let lhs: f64 = ms.iter().map(|&m| chebyshev_u(m, t).unwrap()).product();
            let rhs: f64 = (0..=sum).map(|l| table.coefficient(l) as f64 * chebyshev_u(l, t).unwrap()).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        }
    }
}
