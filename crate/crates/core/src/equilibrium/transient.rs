use serde::Serialize;

use super::{Distribution, EquilibriumError};
use crate::rates::Generator;

/// Largest `Λ dt` per uniformization step, so `e^{-Λ dt}` stays normal.
const MAX_STEP_MASS: f64 = 20.0;

#[derive(Debug, Clone, Serialize)]
pub struct Transient {
    pub distribution: Distribution,
    pub t: f64,
    /// Poisson mass discarded by truncation, summed over steps. Bounds the
    /// total-variation error of `distribution`.
    pub truncation_error: f64,
    pub uniformization_rate: f64,
    pub steps: usize,
}

/// `init · exp(t G)` by uniformization.
pub fn transient_distribution(
    g: &Generator,
    init: &Distribution,
    t: f64,
    tolerance: f64,
) -> Result<Transient, EquilibriumError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(EquilibriumError::BadParameter(format!("t = {t} must be finite and >= 0")));
    }
    if init.n() != g.n() {
        return Err(EquilibriumError::BadParameter(format!(
            "initial law lives on level {} but the generator on level {}",
            init.n(),
            g.n()
        )));
    }
    let rate = g.max_exit_rate();
    if t == 0.0 || rate == 0.0 {
        return Ok(Transient {
            distribution: init.clone(),
            t,
            truncation_error: 0.0,
            uniformization_rate: rate,
            steps: 0,
        });
    }
    let steps = ((rate * t) / MAX_STEP_MASS).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let per_step = tolerance / steps as f64;
    let mut x = init.weights().to_vec();
    let mut error = 0.0;
    for _ in 0..steps {
        let (next, e) = uniformized_step(g, &x, rate, dt, per_step);
        x = next;
        error += e;
    }
    Ok(Transient {
        distribution: Distribution { n: g.n(), weights: x },
        t,
        truncation_error: error,
        uniformization_rate: rate,
        steps,
    })
}

fn uniformized_step(g: &Generator, x: &[f64], rate: f64, dt: f64, tolerance: f64) -> (Vec<f64>, f64) {
    let mass = rate * dt;
    let mut weight = (-mass).exp();
    let mut cumulative = weight;
    let mut v = x.to_vec();
    let mut out: Vec<f64> = v.iter().map(|vi| weight * vi).collect();
    let mut k = 0usize;
    while 1.0 - cumulative > tolerance && k < 10_000 {
        // v ← v (I + G / Λ)
        let gv = g.left_apply(&v);
        for (vi, gi) in v.iter_mut().zip(gv) {
            *vi = (*vi + gi / rate).max(0.0);
        }
        k += 1;
        weight *= mass / k as f64;
        cumulative += weight;
        for (o, vi) in out.iter_mut().zip(&v) {
            *o += weight * vi;
        }
    }
    (out, (1.0 - cumulative).max(0.0))
}

/// Total-variation distances to `target` along a doubling time grid.
#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    /// `(t, TV(init e^{tG}, target))`.
    pub grid: Vec<(f64, f64)>,
    /// First grid time with distance at most the threshold, if reached.
    pub t_reached: Option<f64>,
    pub truncation_error: f64,
}

/// Propagates `init` along `t_k = t_0 2^k` until the distance to `target`
/// drops to `threshold` or `t_max` is passed.
pub fn time_to_stationarity(
    g: &Generator,
    init: &Distribution,
    target: &Distribution,
    threshold: f64,
    t_max: f64,
) -> Result<Convergence, EquilibriumError> {
    let rate = g.max_exit_rate();
    let mut grid = vec![(0.0, init.total_variation(target))];
    if grid[0].1 <= threshold || rate == 0.0 {
        let reached = (grid[0].1 <= threshold).then_some(0.0);
        return Ok(Convergence {
            grid,
            t_reached: reached,
            truncation_error: 0.0,
        });
    }
    let mut t = 0.0;
    let mut next = 1.0 / rate;
    let mut current = init.clone();
    let mut error = 0.0;
    while t < t_max {
        let step = transient_distribution(g, &current, next - t, 1e-14)?;
        error += step.truncation_error;
        current = step.distribution;
        t = next;
        let tv = current.total_variation(target);
        grid.push((t, tv));
        if tv <= threshold {
            return Ok(Convergence {
                grid,
                t_reached: Some(t),
                truncation_error: error,
            });
        }
        next *= 2.0;
    }
    Ok(Convergence {
        grid,
        t_reached: None,
        truncation_error: error,
    })
}
