//! Stationary and transient laws of the restricted chain, and the
//! equilibrium inequalities used to control block counts and dust.

mod diagnostics;
mod scc;
mod transient;

pub use diagnostics::{
    theorem_diagnostics, BlockCountBound, BlockCountRecursion, DustBound, EquilibriumReport,
    RegimeFlags, TailBound,
};
pub use scc::{communicating_classes, ClassSummary};
pub use transient::{time_to_stationarity, transient_distribution, Convergence, Transient};

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::partition::{LexRanker, Partition, PartitionError};
use crate::rates::{Generator, RateError};

/// Tolerance on `|Σ ρ − 1|`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
/// Relative tolerance on `‖ρ G‖_∞ / max_i q(i)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Largest closed class solved by dense elimination.
pub const DENSE_LIMIT: usize = 1500;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("{} closed communicating classes: {}", .classes.len(), format_classes(.classes))]
    MultipleClosedClasses { classes: Vec<Vec<String>> },
    #[error("stationary solve did not converge: residual {residual:e} after {iterations} sweeps")]
    NotConverged { residual: f64, iterations: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("{0}")]
    BadParameter(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Measure(#[from] crate::measures::MeasureError),
}

fn format_classes(classes: &[Vec<String>]) -> String {
    classes
        .iter()
        .map(|c| format!("[{}]", c.join(" ")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A probability vector over `P_n` in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    n: usize,
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self, EquilibriumError> {
        let expected = crate::partition::bell(n);
        if weights.len() as u128 != expected {
            return Err(EquilibriumError::InvalidDistribution(format!(
                "{} weights for {expected} partitions of [{n}]",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(EquilibriumError::InvalidDistribution(format!("weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(EquilibriumError::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(Self { n, weights })
    }

    pub fn dirac(n: usize, pi: &Partition) -> Self {
        let ranker = LexRanker::new(n);
        let mut weights = vec![0.0; crate::partition::bell(n) as usize];
        weights[ranker.rank(pi)] = 1.0;
        Self { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, pi: &Partition) -> f64 {
        self.weights[LexRanker::new(self.n).rank(pi)]
    }

    /// `ρ(A)` for `A = {π : pred(π)}`.
    pub fn mass_where(&self, pred: impl Fn(&Partition) -> bool) -> f64 {
        let ranker = LexRanker::new(self.n);
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .filter(|(i, _)| pred(&ranker.unrank(*i)))
            .map(|(_, w)| w)
            .sum()
    }

    /// `a[K-1] = ρ(#π = K)` for `K = 1..=n`.
    pub fn block_count_marginal(&self) -> Vec<f64> {
        let ranker = LexRanker::new(self.n);
        let mut a = vec![0.0; self.n];
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                a[ranker.unrank(i).block_count() - 1] += w;
            }
        }
        a
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        assert_eq!(self.n, other.n, "distributions on different levels");
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// CSV with header `index,partition,weight`; the partition is quoted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let ranker = LexRanker::new(self.n);
        writeln!(w, "index,partition,weight")?;
        for (i, weight) in self.weights.iter().enumerate() {
            writeln!(w, "{i},\"{}\",{weight:e}", ranker.unrank(i))?;
        }
        Ok(())
    }
}

/// Pushforward of `rho` under restriction to `[m]`.
pub fn projection(rho: &Distribution, m: usize) -> Result<Distribution, EquilibriumError> {
    if m == 0 || m > rho.n {
        return Err(PartitionError::RestrictionOutOfRange { m, n: rho.n }.into());
    }
    let from = LexRanker::new(rho.n);
    let to = LexRanker::new(m);
    let mut weights = vec![0.0; crate::partition::bell(m) as usize];
    for (i, &w) in rho.weights.iter().enumerate() {
        if w != 0.0 {
            let code = from.unrank(i).labels();
            weights[to.rank_code(&code[..m])] += w;
        }
    }
    Ok(Distribution { n: m, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Absorbing,
    Dense,
    GaussSeidel,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stationary {
    pub distribution: Distribution,
    /// `‖ρ G‖_∞`.
    pub residual: f64,
    pub method: SolverMethod,
    pub classes: ClassSummary,
    /// States of the unique closed class.
    pub support: Vec<usize>,
}

/// The unique stationary law, supported on the unique closed class.
pub fn stationary_distribution(g: &Generator) -> Result<Stationary, EquilibriumError> {
    let classes = communicating_classes(g);
    if classes.closed.len() != 1 {
        let names = classes
            .closed
            .iter()
            .map(|&c| {
                classes.classes[c]
                    .iter()
                    .map(|&i| g.states()[i].to_string())
                    .collect()
            })
            .collect();
        return Err(EquilibriumError::MultipleClosedClasses { classes: names });
    }
    let support = classes.classes[classes.closed[0]].clone();
    let (local, method) = match support.len() {
        1 => (vec![1.0], SolverMethod::Absorbing),
        s if s <= DENSE_LIMIT => (gth(g, &support), SolverMethod::Dense),
        _ => (gauss_seidel(g, &support)?, SolverMethod::GaussSeidel),
    };
    let mut weights = vec![0.0; g.len()];
    for (&i, w) in support.iter().zip(local) {
        weights[i] = w;
    }
    let residual = g.left_apply(&weights).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let scale = g.max_exit_rate().max(1.0);
    if residual > RESIDUAL_TOLERANCE * scale {
        return Err(EquilibriumError::NotConverged {
            residual,
            iterations: 0,
        });
    }
    Ok(Stationary {
        distribution: Distribution { n: g.n(), weights },
        residual,
        method,
        classes,
        support,
    })
}

/// Grassmann-Taksar-Heyman elimination on the closed class. Subtraction
/// free, so it stays accurate for stiff rates.
fn gth(g: &Generator, support: &[usize]) -> Vec<f64> {
    let s = support.len();
    let mut local = vec![usize::MAX; g.len()];
    for (k, &i) in support.iter().enumerate() {
        local[i] = k;
    }
    let mut q = vec![0.0; s * s];
    for (a, &i) in support.iter().enumerate() {
        let (cols, vals) = g.row(i);
        for (&j, &r) in cols.iter().zip(vals) {
            q[a * s + local[j]] = r;
        }
    }
    for k in (1..s).rev() {
        let total: f64 = q[k * s..k * s + k].iter().sum();
        for i in 0..k {
            q[i * s + k] /= total;
        }
        for i in 0..k {
            let qik = q[i * s + k];
            if qik == 0.0 {
                continue;
            }
            for j in 0..k {
                q[i * s + j] += qik * q[k * s + j];
            }
        }
    }
    let mut pi = vec![0.0; s];
    pi[0] = 1.0;
    for k in 1..s {
        pi[k] = (0..k).map(|i| pi[i] * q[i * s + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}

const GS_MAX_SWEEPS: usize = 200_000;

/// Gauss-Seidel on `ρ_j q(j) = Σ_i ρ_i q(i, j)` over the closed class.
fn gauss_seidel(g: &Generator, support: &[usize]) -> Result<Vec<f64>, EquilibriumError> {
    let s = support.len();
    let mut local = vec![usize::MAX; g.len()];
    for (k, &i) in support.iter().enumerate() {
        local[i] = k;
    }
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s];
    for (a, &i) in support.iter().enumerate() {
        let (cols, vals) = g.row(i);
        for (&j, &r) in cols.iter().zip(vals) {
            incoming[local[j]].push((a, r));
        }
    }
    let exit: Vec<f64> = support.iter().map(|&i| g.exit_rate(i)).collect();
    let scale = g.max_exit_rate().max(1.0);
    let mut x = vec![1.0 / s as f64; s];
    let mut residual = f64::INFINITY;
    for sweep in 1..=GS_MAX_SWEEPS {
        for j in 0..s {
            x[j] = incoming[j].iter().map(|&(i, r)| x[i] * r).sum::<f64>() / exit[j];
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        if sweep % 10 == 0 {
            residual = (0..s)
                .map(|j| {
                    let inflow: f64 = incoming[j].iter().map(|&(i, r)| x[i] * r).sum();
                    (inflow - x[j] * exit[j]).abs()
                })
                .fold(0.0, f64::max);
            if residual <= 0.1 * RESIDUAL_TOLERANCE * scale {
                return Ok(x);
            }
        }
    }
    Err(EquilibriumError::NotConverged {
        residual,
        iterations: GS_MAX_SWEEPS,
    })
}
