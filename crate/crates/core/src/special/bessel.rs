//! J-Bessel functions of integer order.

use crate::special::gamma::ln_gamma;
use crate::{Error, Real, Result};

/// Series is used for `x ≤ SERIES_CROSSOVER · order`, the Miller recurrence
/// otherwise.
pub const SERIES_CROSSOVER: f64 = 0.5;

/// The alternating series loses about `x²/(2(n+1))` nats of relative
/// accuracy; it is also capped so that loss stays below two digits.
pub const SERIES_MAX_LOSS: f64 = 4.605_170_185_988_091;

/// `J_n(x)` for `n ≥ 1`, `x > 0`.
pub fn bessel_j<T: Real>(order: u32, x: T) -> Result<T> {
    if order == 0 {
        return Err(Error::pre("bessel_j: order must be at least 1"));
    }
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::pre(format!("bessel_j: x = {x} must be positive and finite")));
    }
    let n = T::from_u32(order).unwrap();
    let loss = x * x / (T::lit(2.0) * (n + T::one()));
    if x <= T::lit(SERIES_CROSSOVER) * n && loss <= T::lit(SERIES_MAX_LOSS) {
        series(order, x)
    } else {
        miller(order, x)
    }
}

/// Ascending series `Σ (−1)^j (x/2)^{2j+n} / (j!(n+j)!)`, with the leading
/// term formed in log space.
pub fn series<T: Real>(order: u32, x: T) -> Result<T> {
    let n = T::from_u32(order).unwrap();
    let half = x / T::lit(2.0);
    let log_lead = n * half.ln() - ln_gamma(n + T::one())?;
    if log_lead < T::min_positive_value().ln() {
        return Ok(T::zero());
    }
    let lead = log_lead.exp();
    let q = half * half;
    let mut term = T::one();
    let mut sum = T::one();
    for j in 1..10_000u32 {
        let jf = T::from_u32(j).unwrap();
        term = -term * q / (jf * (n + jf));
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.01) {
            break;
        }
    }
    Ok(lead * sum)
}

/// Downward recurrence `J_{m−1} = (2m/x) J_m − J_{m+1}` from a start index
/// well above `max(n, x)`, normalized by `J_0 + 2Σ J_{2m} = 1`.
pub fn miller<T: Real>(order: u32, x: T) -> Result<T> {
    let top = T::from_u32(order).unwrap().max(x);
    let start = top + T::lit(30.0) + (T::lit(50.0) * top).sqrt();
    let mut start = start.to_u64().ok_or_else(|| Error::numeric("bessel_j: start index overflow"))?;
    start += start % 2;
    let limit = T::max_value().sqrt();
    let two_over_x = T::lit(2.0) / x;
    let mut next = T::zero();
    let mut cur = T::min_positive_value().sqrt();
    let mut norm = T::zero();
    let mut wanted = T::zero();
    for m in (1..=start).rev() {
        // cur = J_m, next = J_{m+1}
        if m == u64::from(order) {
            wanted = cur;
        }
        if m % 2 == 0 {
            norm += cur + cur;
        }
        let prev = two_over_x * T::from_u64(m).unwrap() * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > limit {
            let scale = limit.recip();
            cur *= scale;
            next *= scale;
            norm *= scale;
            wanted *= scale;
        }
    }
    norm += cur;
    if !norm.is_finite() || norm == T::zero() {
        return Err(Error::numeric(format!(
            "bessel_j: normalization failed for order {order}, x = {x}; use a wider float type"
        )));
    }
    Ok(wanted / norm)
}
