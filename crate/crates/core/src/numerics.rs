//! Log-domain helpers shared by the accountant.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

const FACTORIAL_TABLE_LEN: usize = 1024;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        let mut acc = 0.0_f64;
        table.push(0.0);
        for k in 1..FACTORIAL_TABLE_LEN {
            acc += (k as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(k!)`, tabulated for small `k` and via log-gamma beyond.
pub fn ln_factorial(k: u64) -> f64 {
    match factorial_table().get(k as usize) {
        Some(&v) => v,
        None => ln_gamma(k as f64 + 1.0),
    }
}

/// `ln(n! / (n - len)!)`, accumulated term by term so that large `n` keeps
/// full relative precision.
pub fn ln_falling_factorial(n: u64, len: u64) -> f64 {
    debug_assert!(len <= n);
    (0..len).map(|i| ((n - i) as f64).ln()).sum()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    ln_falling_factorial(n, k) - ln_factorial(k)
}

/// Stable `ln(sum(exp(values)))`. Empty input yields negative infinity.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Stable `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln(1 + exp(x))` without overflow or loss of small `x`.
pub fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(exp(x) - 1)` for `x > 0`.
pub fn ln_expm1(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}
