use crate::error::{invalid_arg, Result};

/// `(max, mean)` of `|v_next(s) - v_prev(s)|`.
pub fn compute_bellman_error(v_prev: &[f64], v_next: &[f64]) -> Result<(f64, f64)> {
    if v_prev.len() != v_next.len() {
        return Err(invalid_arg(format!(
            "value vectors differ in length: {} vs {}",
            v_prev.len(),
            v_next.len()
        )));
    }
    if v_prev.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (mut max, mut sum) = (0.0f64, 0.0);
    for (a, b) in v_prev.iter().zip(v_next) {
        let d = (b - a).abs();
        max = max.max(d);
        sum += d;
    }
    Ok((max, sum / v_prev.len() as f64))
}
