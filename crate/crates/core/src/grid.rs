//! Uniform time grids and finite differences on them.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Requires at least two strictly increasing, equally spaced times.
pub fn check_uniform_grid(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidGrid("need at least two grid points".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::InvalidGrid(
            "times must be strictly increasing".into(),
        ));
    }
    for w in times.windows(2) {
        let step = w[1] - w[0];
        if !(step > 0.0) || (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "non-uniform step {step} (expected {dt})"
            )));
        }
    }
    Ok(())
}

/// Grid `0, dt, 2dt, …` up to the step closest to `t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("dt must be > 0, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= dt * (1.0 - 1e-9)) {
        return Err(Error::InvalidGrid(format!(
            "t_max must be >= dt, got {t_max}"
        )));
    }
    let steps = (t_max / dt).round() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Central differences inside, second-order one-sided differences at the two
/// ends. Needs at least three samples.
pub fn derivative<T>(y: &[T], dt: f64) -> Result<Vec<T>>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Add<Output = T>,
{
    let n = y.len();
    if n < 3 {
        return Err(Error::InvalidGrid(
            "derivative needs at least three grid points".into(),
        ));
    }
    let mut d = Vec::with_capacity(n);
    d.push((y[1] * 4.0 - y[0] * 3.0 - y[2]) * (0.5 / dt));
    for k in 1..n - 1 {
        d.push((y[k + 1] - y[k - 1]) * (0.5 / dt));
    }
    d.push((y[n - 1] * 3.0 - y[n - 2] * 4.0 + y[n - 3]) * (0.5 / dt));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = time_grid(1.0, 0.25).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(time_grid(1.0, 0.0).is_err());
        assert!(time_grid(0.1, 0.25).is_err());
    }

    #[test]
    fn derivative_exact_for_quadratics() {
        let dt = 0.1;
        let y: Vec<f64> = (0..6)
            .map(|k| {
                let t = k as f64 * dt;
                3.0 * t * t - t + 2.0
            })
            .collect();
        let d = derivative(&y, dt).unwrap();
        for (k, dk) in d.iter().enumerate() {
            let t = k as f64 * dt;
            assert!((dk - (6.0 * t - 1.0)).abs() < 1e-12);
        }
        assert!(derivative(&y[..2], dt).is_err());
    }
}
