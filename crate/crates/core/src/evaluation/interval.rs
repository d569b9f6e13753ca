use statrs::function::beta::beta_reg;

use crate::error::EvaluationError;

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper-Pearson) two-sided binomial interval.
pub fn clopper_pearson(successes: u64, n: u64, level: f64) -> Result<(f64, f64), EvaluationError> {
    if n == 0 || successes > n {
        return Err(EvaluationError::Range(format!("need 0 <= successes <= n and n > 0, got {successes}/{n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvaluationError::Range(format!("level {level} not in (0, 1)")));
    }
    let tail = (1.0 - level) / 2.0;
    let (s, n) = (successes as f64, n as f64);
    let low = if successes == 0 { 0.0 } else { beta_quantile(tail, s, n - s + 1.0) };
    let high = if successes as f64 == n { 1.0 } else { beta_quantile(1.0 - tail, s + 1.0, n - s) };
    Ok((low, high))
}

/// Half-up rounding to an integer percentage.
pub fn percent(x: f64) -> i64 {
    (x * 100.0 + 0.5).floor() as i64
}
