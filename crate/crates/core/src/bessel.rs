//! The one-dimensional lattice heat kernel coefficient and modified Bessel
//! functions of the first kind at integer order.
//!
//! Two independent evaluations of the same quantity live here:
//!
//! * [`z_series_coeff`] sums the alternating binomial series
//!   `(−1)^{|a|} Σ_k C(2k, k+|a|)/k! · (−t/2)^k`. The terms grow to roughly
//!   `e^{2t}` before decaying, so the sum is carried out in exact rational
//!   arithmetic and rounded once at the end.
//! * [`bessel_i`] / [`bessel_i_scaled`] use the positive power series
//!   `Σ_k (t/2)^{x+2k}/(k!(x+k)!)` up to `t = 700` and the periodic
//!   integral `(1/2π)∫₀^{2π} e^{t cos θ} cos(xθ) dθ` beyond that.
//!
//! They agree because `e^{−t} I_x(t)` is the heat kernel of `ℤ`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Truncation control for [`z_series_coeff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Stop once terms fall below `abs_tol` relative to the partial sum.
    pub abs_tol: f64,
    /// Hard cap on the number of terms.
    pub k_max: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            k_max: 400,
        }
    }
}

/// `(−1)^{|a|} Σ_{k≥0} C(2k, k+|a|)/k! · (−t/2)^k`, i.e. `H_t(x, x+a)` on the
/// unit-weight integer line.
///
/// Binomials with `2k < k+|a|` are zero, so the sum starts at `k = |a|`.
/// Consecutive terms satisfy
/// `T_{k+1}/T_k = −t(2k+1) / ((k+1+a)(k+1−a))`.
///
/// The sum stops at the first `k ≥ max(2t, |a|) + 1` where two consecutive
/// terms are below `abs_tol · |partial sum|`; past `2t` the terms decay
/// factorially.
pub fn z_series_coeff(a: i64, t: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let a = a.unsigned_abs();
    if t == 0.0 {
        return Ok(if a == 0 { 1.0 } else { 0.0 });
    }
    let t_exact = BigRational::from_float(t).expect("finite t");
    let neg_t = -t_exact.clone();

    // leading term at k = a, already multiplied by (−1)^a: (t/2)^a / a!
    let mut term = BigRational::from_integer(BigInt::from(1));
    let half_t = t_exact / BigInt::from(2);
    for j in 1..=a {
        term = term * &half_t / BigInt::from(j);
    }
    let mut sum = term.clone();

    let k_min = (2.0 * t).ceil() as u64 + a + 1;
    let mut quiet = 0;
    let mut k = a;
    loop {
        if (k - a) as usize >= ctl.k_max {
            return Err(Error::SeriesTruncation {
                a: a as i64,
                t,
                k_max: ctl.k_max,
            });
        }
        // T_{k+1} = T_k · (−t)(2k+1) / ((k+1+a)(k+1−a))
        let num = BigInt::from(2 * k + 1);
        let den = BigInt::from(k + 1 + a) * BigInt::from(k + 1 - a);
        term = term * &neg_t * num / den;
        sum += &term;
        k += 1;

        if k >= k_min {
            let mag = term.abs().to_f64().unwrap_or(f64::INFINITY);
            let total = sum.abs().to_f64().unwrap_or(0.0);
            if mag <= ctl.abs_tol * total || term.is_zero() {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
    }
    Ok(sum.to_f64().expect("finite rational"))
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

// e^{−t} as the first scaled term stays a normal float up to t ≈ 708, and
// I_x(t) itself overflows past that
const SERIES_LIMIT: f64 = 700.0;

/// `I_x(t)` for integer `x`, using `I_{−x} = I_x`.
pub fn bessel_i(x: i64, t: f64) -> f64 {
    if t > SERIES_LIMIT {
        t.exp() * bessel_i_scaled(x, t)
    } else {
        power_series(x.unsigned_abs(), t, 0.0)
    }
}

/// `e^{−t} I_x(t)`, which stays bounded by 1 for every `t ≥ 0`.
pub fn bessel_i_scaled(x: i64, t: f64) -> f64 {
    let x = x.unsigned_abs();
    if t > SERIES_LIMIT {
        quadrature(x, t)
    } else {
        power_series(x, t, t)
    }
}

// e^{−shift} Σ_k (t/2)^{x+2k} / (k!(x+k)!)
fn power_series(x: u64, t: f64, shift: f64) -> f64 {
    if t == 0.0 {
        return if x == 0 { (-shift).exp() } else { 0.0 };
    }
    let half = 0.5 * t;
    let ln_first = x as f64 * half.ln() - ln_factorial(x) - shift;
    let mut term = ln_first.exp();
    if term == 0.0 {
        return 0.0;
    }
    let mut sum = term;
    let q = half * half;
    for k in 0u64.. {
        term *= q / ((k + 1) as f64 * (x + k + 1) as f64);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

// (1/2π) ∫₀^{2π} e^{t(cos θ − 1)} cos(xθ) dθ by the N-point trapezoid rule.
// The integrand is periodic and analytic, so the only error is aliasing:
// the rule returns Σ_m e^{−t}I_{x+mN}(t), and N − x > 10√t + 40 pushes the
// nearest alias below 1e−20.
fn quadrature(x: u64, t: f64) -> f64 {
    let n = x + (10.0 * t.sqrt()).ceil() as u64 + 40;
    let h = std::f64::consts::TAU / n as f64;
    let f = |j: u64| {
        let theta = j as f64 * h;
        // cos θ − 1 = −2 sin²(θ/2) without cancellation near θ = 0
        let s = (0.5 * theta).sin();
        (-2.0 * t * s * s).exp() * ((x * j % n) as f64 * h).cos()
    };
    // θ and 2π − θ contribute equally
    let half = n / 2;
    let mut sum = f(0);
    for j in 1..=half {
        let w = if 2 * j == n { 1.0 } else { 2.0 };
        sum += w * f(j);
    }
    sum / n as f64
}
