use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Upper tail `P(F_{d1,d2} > f)` of the F distribution.
pub fn f_tail(f: f64, d1: usize, d2: usize) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "F degrees of freedom must be positive, got ({d1}, {d2})"
        )));
    }
    if f.is_nan() || f < 0.0 {
        return Err(Error::InvalidParameter(format!("F statistic must be >= 0, got {f}")));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    // P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)
    let x = d2 / (d2 + d1 * f);
    Ok(beta_reg(d2 / 2.0, d1 / 2.0, x).clamp(0.0, 1.0))
}
