//! Embedded Dormand-Prince 5(4) integration for complex state vectors.
//!
//! Works on flat `Array1<Complex64>` buffers; density matrices are evolved in
//! vectorized form by the callers.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

/// Butcher tableau for Dormand-Prince 5(4).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// 5th-order weights (same as the last row of A plus k7 coefficient 0).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// 4th-order embedded weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional hard cap on the step size (e.g. for weak time dependence).
    pub max_dt: Option<f64>,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { rtol: DEFAULT_RTOL, atol: DEFAULT_ATOL, max_steps: 50_000_000, max_dt: None }
    }
}

fn rms_error(err: &Array1<C64>, y0: &Array1<C64>, y1: &Array1<C64>, rtol: f64, atol: f64) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrate dy/dt = f(t, y) from `t_grid[0]`, emitting the state at every
/// grid time (including the first).
pub fn integrate_grid<F>(
    mut f: F,
    y0: &Array1<C64>,
    t_grid: &[f64],
    opts: &AdaptiveOptions,
) -> Result<Vec<Array1<C64>>>
where
    F: FnMut(f64, &Array1<C64>) -> Array1<C64>,
{
    assert!(!t_grid.is_empty(), "empty time grid");
    for w in t_grid.windows(2) {
        assert!(w[1] > w[0], "time grid must be strictly ascending");
    }
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y0.clone());

    let mut y = y0.clone();
    let mut t = t_grid[0];
    let total = t_grid[t_grid.len() - 1] - t_grid[0];
    let mut dt = initial_step(&mut f, &y, t, opts).min(total);
    if let Some(cap) = opts.max_dt {
        dt = dt.min(cap);
    }
    let mut k1 = f(t, &y);
    let mut steps = 0usize;

    for &t_target in &t_grid[1..] {
        while t < t_target {
            let h = dt.min(t_target - t);
            let (y_new, err, k_last) = dp_step(&mut f, t, &y, &k1, h);
            let e = rms_error(&err, &y, &y_new, opts.rtol, opts.atol);
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::IntegrationFailure(format!(
                    "exceeded {} steps at t = {t:.6e}",
                    opts.max_steps
                )));
            }
            if e <= 1.0 {
                t += h;
                y = y_new;
                k1 = k_last; // FSAL
                let grow = if e > 0.0 { 0.9 * e.powf(-0.2) } else { 5.0 };
                dt = h * grow.clamp(0.2, 5.0);
                if let Some(cap) = opts.max_dt {
                    dt = dt.min(cap);
                }
            } else {
                dt = h * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
                if dt < 1e-16 * total.max(1e-300) {
                    return Err(Error::StepUnderflow(t));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn dp_step<F>(
    f: &mut F,
    t: f64,
    y: &Array1<C64>,
    k1: &Array1<C64>,
    h: f64,
) -> (Array1<C64>, Array1<C64>, Array1<C64>)
where
    F: FnMut(f64, &Array1<C64>) -> Array1<C64>,
{
    let hc = C64::new(h, 0.0);
    let mut k: Vec<Array1<C64>> = Vec::with_capacity(7);
    k.push(k1.clone());
    for stage in 0..6 {
        let mut arg = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                arg.scaled_add(hc * a, kj);
            }
        }
        k.push(f(t + C[stage] * h, &arg));
    }
    let mut y5 = y.clone();
    let mut y4 = y.clone();
    for (j, kj) in k.iter().enumerate() {
        if B5[j] != 0.0 {
            y5.scaled_add(hc * B5[j], kj);
        }
        if B4[j] != 0.0 {
            y4.scaled_add(hc * B4[j], kj);
        }
    }
    let err = &y5 - &y4;
    let k_last = k.pop().unwrap();
    (y5, err, k_last)
}

fn initial_step<F>(f: &mut F, y: &Array1<C64>, t: f64, opts: &AdaptiveOptions) -> f64
where
    F: FnMut(f64, &Array1<C64>) -> Array1<C64>,
{
    let dy = f(t, y);
    let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let nd = dy.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if nd < 1e-300 {
        return 1e-6;
    }
    0.01 * (ny.max(opts.atol) / nd).max(1e-300)
}

/// One classical RK4 step (fixed step, used by the trajectory propagators).
pub fn rk4_step<F>(f: &mut F, t: f64, y: &Array1<C64>, h: f64) -> Array1<C64>
where
    F: FnMut(f64, &Array1<C64>) -> Array1<C64>,
{
    let hc = C64::new(h, 0.0);
    let half = C64::new(0.5 * h, 0.0);
    let k1 = f(t, y);
    let mut a = y.clone();
    a.scaled_add(half, &k1);
    let k2 = f(t + 0.5 * h, &a);
    let mut b = y.clone();
    b.scaled_add(half, &k2);
    let k3 = f(t + 0.5 * h, &b);
    let mut cvec = y.clone();
    cvec.scaled_add(hc, &k3);
    let k4 = f(t + h, &cvec);
    let mut out = y.clone();
    out.scaled_add(hc / 6.0, &k1);
    out.scaled_add(hc / 3.0, &k2);
    out.scaled_add(hc / 3.0, &k3);
    out.scaled_add(hc / 6.0, &k4);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let y0 = Array1::from_elem(1, C64::new(1.0, 0.0));
        let grid = [0.0, 0.5, 1.0, 2.0];
        let out = integrate_grid(
            |_t, y| y.mapv(|v| v * C64::new(-1.0, 0.0)),
            &y0,
            &grid,
            &AdaptiveOptions::default(),
        )
        .unwrap();
        for (i, t) in grid.iter().enumerate() {
            assert_abs_diff_eq!(out[i][0].re, (-t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn oscillator_phase() {
        // dy/dt = -i w y with w = 2 pi * 3
        let w = std::f64::consts::TAU * 3.0;
        let y0 = Array1::from_elem(1, C64::new(1.0, 0.0));
        let grid = [0.0, 1.0];
        let out = integrate_grid(
            |_t, y| y.mapv(|v| v * C64::new(0.0, -w)),
            &y0,
            &grid,
            &AdaptiveOptions::default(),
        )
        .unwrap();
        // after exactly 3 periods the phase returns to 1
        assert_abs_diff_eq!(out[1][0].re, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out[1][0].im, 0.0, epsilon = 1e-6);
    }
}
