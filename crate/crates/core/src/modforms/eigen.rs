//! Exact eigen-decomposition of small integer Hecke matrices.
//!
//! The characteristic polynomial is formed over `ℚ`, its real roots are
//! isolated with a Sturm sequence and refined by bisection at dyadic points,
//! and each eigenvector is solved for in exact rational arithmetic at the
//! refined eigenvalue.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Rational, Result};

/// Polynomial over `ℚ`, coefficients from the constant term up.
pub type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

pub fn eval(p: &Poly, x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

pub fn derivative(p: &Poly) -> Poly {
    if p.len() <= 1 {
        return vec![Rational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
        .collect()
}

fn degree(p: &Poly) -> usize {
    if p.len() == 1 && p[0].is_zero() {
        0
    } else {
        p.len() - 1
    }
}

fn is_zero_poly(p: &Poly) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Remainder of `a` modulo `b` (`b` nonzero).
pub fn rem(a: &Poly, b: &Poly) -> Poly {
    let b = trim(b.clone());
    let mut r = trim(a.clone());
    let lead = b.last().unwrap().clone();
    while !is_zero_poly(&r) && degree(&r) >= degree(&b) {
        let shift = degree(&r) - degree(&b);
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &f * c;
        }
        r.pop();
        r = trim(if r.is_empty() { vec![Rational::zero()] } else { r });
    }
    r
}

pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (trim(a.clone()), trim(b.clone()));
    while !is_zero_poly(&b) {
        let r = rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

/// `det(xI − M)` by Faddeev–LeVerrier.
pub fn charpoly(m: &[Vec<BigInt>]) -> Poly {
    let n = m.len();
    let a: Vec<Vec<Rational>> = m
        .iter()
        .map(|row| row.iter().map(|x| Rational::from_integer(x.clone())).collect())
        .collect();
    let mut coeffs = vec![Rational::zero(); n + 1];
    coeffs[n] = Rational::one();
    let mut mk = vec![vec![Rational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1} I
        let mut next = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Rational::zero();
                for l in 0..n {
                    s += &a[i][l] * &mk[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        mk = next;
        let mut tr = Rational::zero();
        for i in 0..n {
            for l in 0..n {
                tr += &a[i][l] * &mk[l][i];
            }
        }
        coeffs[n - k] = -tr / Rational::from_integer(BigInt::from(k));
    }
    coeffs
}

pub fn is_squarefree(p: &Poly) -> bool {
    degree(&poly_gcd(p, &derivative(p))) == 0
}

struct Sturm(Vec<Poly>);

impl Sturm {
    fn new(p: &Poly) -> Self {
        let mut seq = vec![trim(p.clone()), trim(derivative(p))];
        loop {
            let n = seq.len();
            if is_zero_poly(&seq[n - 1]) {
                seq.pop();
                break;
            }
            let r = rem(&seq[n - 2], &seq[n - 1]);
            if is_zero_poly(&r) {
                break;
            }
            seq.push(r.into_iter().map(|c| -c).collect());
        }
        Sturm(seq)
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.0 {
            let v = eval(p, x);
            let s = if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }
}

/// Real roots of a squarefree polynomial, ascending, each to within
/// `2^{−bits}` (exact when a bisection point hits the root).
/// `2^{s·n} P(x/2^s)` for integer coefficients `P`, which has the sign of `P(x/2^s)`.
fn eval_scaled(c: &[BigInt], x: &BigInt, s: usize) -> BigInt {
    let n = c.len() - 1;
    let mut acc = c[n].clone();
    for i in (0..n).rev() {
        acc = acc * x + (&c[i] << (s * (n - i)));
    }
    acc
}

pub fn real_roots(p: &Poly, bits: u32) -> Vec<Rational> {
    let p = trim(p.clone());
    let n = degree(&p);
    if n == 0 {
        return Vec::new();
    }
    let lead = p[n].abs();
    let bound = p[..n]
        .iter()
        .map(|c| c.abs() / &lead)
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
        + Rational::one();
    // round the Cauchy bound up to a power of two so bisection stays dyadic
    let mut r = Rational::one();
    while r < bound {
        r *= Rational::from_integer(BigInt::from(2));
    }
    let sturm = Sturm::new(&p);
    let two = Rational::from_integer(BigInt::from(2));
    let mut stack = vec![(-r.clone(), r)];
    let mut isolated = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let count = sturm.variations(&a) - sturm.variations(&b);
        if count == 0 {
            continue;
        }
        if count == 1 {
            isolated.push((a, b));
            continue;
        }
        let mid = (&a + &b) / &two;
        stack.push((a, mid.clone()));
        stack.push((mid, b));
    }
    // refine on the integer grid Z/2^s with an integer-coefficient multiple of p
    let s = isolated
        .iter()
        .flat_map(|(a, b)| [a.denom().bits(), b.denom().bits()])
        .max()
        .unwrap_or(0)
        .max(bits as u64) as usize
        + 1;
    let den_lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = p.iter().map(|c| c.numer() * (&den_lcm / c.denom())).collect();
    let on_grid = |x: &Rational| -> BigInt { (x.numer() << s) / x.denom() };
    let mut roots: Vec<Rational> = isolated
        .into_iter()
        .map(|(a, b)| {
            let mut lo = on_grid(&a);
            let mut hi = on_grid(&b);
            let unit = BigInt::one() << s;
            let value = |x: &BigInt| eval_scaled(&ints, x, s);
            // root in (lo, hi]
            let vb = value(&hi);
            if vb.is_zero() {
                return Rational::new(hi, unit);
            }
            // one simple root inside, so p just right of lo has the sign opposite to p(hi)
            let sa = !vb.is_positive();
            let one = BigInt::one();
            while &hi - &lo > one {
                let mid: BigInt = (&lo + &hi) >> 1;
                let v = value(&mid);
                if v.is_zero() {
                    return Rational::new(mid, unit);
                }
                if v.is_positive() == sa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Rational::new(lo + hi, unit << 1)
        })
        .collect();
    roots.sort();
    roots
}

/// Solves `(M − λI)v = 0` with `v₀ = 1` by eliminating over the remaining
/// unknowns with largest-magnitude pivots; the row left over absorbs the
/// inconsistency from the approximate `λ`.
pub fn eigenvector(m: &[Vec<BigInt>], lambda: &Rational) -> Result<Vec<Rational>> {
    let d = m.len();
    if d == 1 {
        return Ok(vec![Rational::one()]);
    }
    // rows: [A_{i,1..d} | −A_{i,0}]
    let mut rows: Vec<Vec<Rational>> = (0..d)
        .map(|i| {
            let mut row: Vec<Rational> = (1..d)
                .map(|j| {
                    let mut x = Rational::from_integer(m[i][j].clone());
                    if i == j {
                        x -= lambda;
                    }
                    x
                })
                .collect();
            let mut a0 = Rational::from_integer(m[i][0].clone());
            if i == 0 {
                a0 -= lambda;
            }
            row.push(-a0);
            row
        })
        .collect();
    let unknowns = d - 1;
    let mut pivot_rows = Vec::with_capacity(unknowns);
    let mut used = vec![false; d];
    for col in 0..unknowns {
        let best = (0..d)
            .filter(|&r| !used[r])
            .max_by(|&x, &y| rows[x][col].abs().cmp(&rows[y][col].abs()))
            .unwrap();
        if rows[best][col].is_zero() {
            return Err(Error::numeric("eigenvector: degenerate eigenspace"));
        }
        used[best] = true;
        pivot_rows.push(best);
        let piv = rows[best].clone();
        for r in 0..d {
            if r != best && !used[r] {
                let f = &rows[r][col] / &piv[col];
                if !f.is_zero() {
                    for c in col..=unknowns {
                        let t = &f * &piv[c];
                        rows[r][c] -= t;
                    }
                }
            }
        }
    }
    let mut v = vec![Rational::zero(); unknowns];
    for col in (0..unknowns).rev() {
        let row = &rows[pivot_rows[col]];
        let mut s = row[unknowns].clone();
        for c in col + 1..unknowns {
            s -= &row[c] * &v[c];
        }
        v[col] = s / &row[col];
    }
    let mut out = vec![Rational::one()];
    out.extend(v);
    Ok(out)
}

/// `round(x · 2^bits)`.
pub fn to_fixed(x: &Rational, bits: u32) -> BigInt {
    let num = x.numer() << bits;
    let den = x.denom();
    let (q, r) = num.div_mod_floor(den);
    if (r << 1u32) >= *den {
        q + 1
    } else {
        q
    }
}
