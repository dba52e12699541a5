//! Hecke operators on q-expansions and the Hecke linearization of products.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use super::qexp::QExpansion;
use crate::arith::gcd;
use crate::{Error, Result};

/// Matrix of `T_p` on an echelonized basis: column `j` holds the coordinates
/// of `T_p g_j`, which are its coefficients at `q¹ … q^d`, where
/// `(T_p f)(n) = a(pn) + p^{k−1} a(n/p)`.
pub fn hecke_matrix(basis: &[QExpansion], p: u64) -> Result<Vec<Vec<BigInt>>> {
    let d = basis.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let k = basis[0].weight;
    let need = p as usize * d;
    if basis[0].len() <= need {
        return Err(Error::pre(format!(
            "hecke_matrix: T_{p} needs coefficients up to q^{need}, have {}",
            basis[0].len() - 1
        )));
    }
    let pk1 = BigInt::from(p).pow(k - 1);
    let mut m = vec![vec![BigInt::zero(); d]; d];
    for (j, g) in basis.iter().enumerate() {
        for (i, row) in m.iter_mut().enumerate() {
            let n = (i + 1) as u64;
            let mut v = g.coefficients[(p * n) as usize].clone();
            if n.is_multiple_of(p) {
                v += &pk1 * &g.coefficients[(n / p) as usize];
            }
            row[j] = v;
        }
    }
    Ok(m)
}

/// Exact coefficients with `λ(n₁)⋯λ(n_r) = Σ_m coef(m) λ(m)`, by repeated
/// use of `λ(m)λ(n) = Σ_{d|(m,n)} λ(mn/d²)`.
pub fn hecke_linearize(ns: &[u64]) -> Result<BTreeMap<u64, u128>> {
    if ns.is_empty() {
        return Err(Error::pre("hecke_linearize: need at least one factor"));
    }
    if ns.contains(&0) {
        return Err(Error::pre("hecke_linearize: factors must be positive"));
    }
    let mut acc = BTreeMap::from([(ns[0], 1u128)]);
    for &n in &ns[1..] {
        let mut next = BTreeMap::new();
        for (&m, &c) in &acc {
            let g = gcd(m, n);
            for d in 1..=g {
                if g.is_multiple_of(d) {
                    *next.entry(m / d * (n / d)).or_insert(0) += c;
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}
