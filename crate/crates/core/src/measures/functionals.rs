use serde::Serialize;

use super::paintbox::{paint, prob_all_distinct};
use super::{paintbox_restriction_prob, Characteristics, MeasureError, RankedMasses};
use crate::par::Execution;
use crate::partition::{enumerate_partitions, MAX_ENUMERATION_N};
use crate::rng::stream_rng;
use crate::scalar::RateScalar;

/// `Φ(q) = c_e (q + 1) + ∫(1 − Σ x_i^{q+1}) ν_Disl(dx)`.
///
/// For integer `q = k − 1`, `Φ(q)` is the total rate at which a block of
/// size `k` splits.
pub fn phi(chars: &Characteristics, q: f64) -> f64 {
    chars.c_e * (q + 1.0) + chars.nu_disl.integrate(|x| 1.0 - x.power_sum(q + 1.0))
}

/// `ζ(b) = ∫ Σ x_i (1 − (1 − x_i)^{b−1}) ν_Coag(dx)`; nondecreasing in `b`
/// with limit `∫ Σ x_i ν_Coag`.
pub fn zeta(chars: &Characteristics, b: usize) -> f64 {
    let e = b.saturating_sub(1) as i32;
    chars
        .nu_coag
        .integrate(|x| x.masses().iter().map(|&xi| xi * (1.0 - (1.0 - xi).powi(e))).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRateMethod {
    Enumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRateOptions {
    /// Largest `b` handled by exact enumeration of `P_b`.
    pub exact_threshold: usize,
    /// Paintbox draws per coagulation atom above the threshold.
    pub mc_samples: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for BlockRateOptions {
    fn default() -> Self {
        Self {
            exact_threshold: 8,
            mc_samples: 20_000,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

/// Collision rates of the coalescent part acting on `b` blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRates {
    pub b: usize,
    /// `λ_b`: total rate of collisions among `b` blocks.
    pub lambda: f64,
    /// `γ_b`: rate of decrease of the block count.
    pub gamma: f64,
    /// Standard error of `gamma` (zero for enumeration).
    pub gamma_std_err: f64,
    pub zeta: f64,
    pub method: BlockRateMethod,
}

const MC_BATCHES: usize = 64;

/// `(λ_b, γ_b)` by summing `μ_{ν_Coag}` over all of `P_b`.
pub fn block_rates_enumerated<S: RateScalar>(
    chars: &Characteristics,
    b: usize,
) -> Result<(S, S), MeasureError> {
    if b < 2 {
        return Err(MeasureError::BadParameter(format!("b = {b} must be at least 2")));
    }
    let states = enumerate_partitions(b)
        .map_err(|e| MeasureError::BadParameter(e.to_string()))?;
    let pairs = S::from_u64((b * (b - 1) / 2) as u64);
    let kingman = S::from_f64(chars.c_k) * pairs;
    let mut lambda = kingman.clone();
    let mut gamma = kingman;
    for atom in chars.nu_coag.atoms() {
        let w = S::from_f64(atom.weight);
        for pi in states.iter().filter(|p| !p.is_singletons()) {
            let prob: S = paintbox_restriction_prob(&atom.masses, pi);
            let drop = S::from_u64((b - pi.block_count()) as u64);
            lambda = lambda + w.clone() * prob.clone();
            gamma = gamma + w.clone() * prob * drop;
        }
    }
    Ok((lambda, gamma))
}

/// `(λ_b, γ_b, ζ(b))`. Above `exact_threshold`, `λ_b` uses the closed form
/// `Σ w (1 − μ_x(0_b))` and `γ_b` is a Monte Carlo estimate.
pub fn coalescent_block_rates(
    chars: &Characteristics,
    b: usize,
    options: &BlockRateOptions,
) -> Result<BlockRates, MeasureError> {
    if b < 2 {
        return Err(MeasureError::BadParameter(format!("b = {b} must be at least 2")));
    }
    let z = zeta(chars, b);
    if b <= options.exact_threshold.min(MAX_ENUMERATION_N) {
        let (lambda, gamma) = block_rates_enumerated::<f64>(chars, b)?;
        return Ok(BlockRates {
            b,
            lambda,
            gamma,
            gamma_std_err: 0.0,
            zeta: z,
            method: BlockRateMethod::Enumeration,
        });
    }
    let pairs = (b * (b - 1) / 2) as f64;
    let lambda = chars.c_k * pairs
        + chars
            .nu_coag
            .integrate(|x| 1.0 - prob_all_distinct::<f64>(x, b));
    let (gamma_coag, var) = monte_carlo_block_drop(chars, b, options);
    Ok(BlockRates {
        b,
        lambda,
        gamma: chars.c_k * pairs + gamma_coag,
        gamma_std_err: var.sqrt(),
        zeta: z,
        method: BlockRateMethod::MonteCarlo,
    })
}

/// Estimates `Σ w E[b − #π|[b]]` and the variance of the estimate.
fn monte_carlo_block_drop(
    chars: &Characteristics,
    b: usize,
    options: &BlockRateOptions,
) -> (f64, f64) {
    let atoms = chars.nu_coag.atoms();
    if atoms.is_empty() || options.mc_samples == 0 {
        return (0.0, 0.0);
    }
    let per_batch = options.mc_samples.div_ceil(MC_BATCHES);
    let samples = (per_batch * MC_BATCHES) as f64;
    let batches = options.execution.map_indexed(MC_BATCHES, |batch| {
        let mut rng = stream_rng(options.seed, (b * MC_BATCHES + batch) as u64);
        atoms
            .iter()
            .map(|atom| {
                let (mut s1, mut s2) = (0.0, 0.0);
                for _ in 0..per_batch {
                    let drop = (b - block_count_of_paint(&atom.masses, b, &mut rng)) as f64;
                    s1 += drop;
                    s2 += drop * drop;
                }
                (s1, s2)
            })
            .collect::<Vec<_>>()
    });
    let mut mean = 0.0;
    let mut var = 0.0;
    for (a, atom) in atoms.iter().enumerate() {
        let s1: f64 = batches.iter().map(|v| v[a].0).sum();
        let s2: f64 = batches.iter().map(|v| v[a].1).sum();
        let m = s1 / samples;
        let v = (s2 / samples - m * m).max(0.0) * samples / (samples - 1.0).max(1.0);
        mean += atom.weight * m;
        var += atom.weight * atom.weight * v / samples;
    }
    (mean, var)
}

fn block_count_of_paint<R: rand::Rng + ?Sized>(x: &RankedMasses, b: usize, rng: &mut R) -> usize {
    let colors = paint(x, b, rng);
    let mut used = vec![false; x.len()];
    let mut blocks = 0;
    for c in colors {
        match c {
            None => blocks += 1,
            Some(k) if !used[k] => {
                used[k] = true;
                blocks += 1;
            }
            Some(_) => {}
        }
    }
    blocks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComesDownVerdict {
    CriterionMet,
    NotMetAtHorizon,
    Inapplicable,
}

impl ComesDownVerdict {
    pub fn label(self) -> &'static str {
        match self {
            Self::CriterionMet => "criterion met (partial sums plateau)",
            Self::NotMetAtHorizon => "criterion not met at horizon B",
            Self::Inapplicable => "inapplicable (gamma_b = 0)",
        }
    }
}

/// Truncated evaluation of `Σ_b 1/γ_b`.
///
/// The verdict is a heuristic on a finite horizon: the partial sums are
/// called plateaued when `γ_b` grows faster than `b^{1.1}` between `B/2` and
/// `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComesDownReport {
    pub horizon: usize,
    pub rates: Vec<BlockRates>,
    /// `partial_sums[i] = Σ_{b=2}^{i+2} 1/γ_b`.
    pub partial_sums: Vec<f64>,
    /// `ν_Coag(Δ_f)`, always finite here.
    pub coag_proper_mass: f64,
    /// `log2(γ_B / γ_{B/2})`.
    pub growth_exponent: Option<f64>,
    pub verdict: ComesDownVerdict,
    pub verdict_label: String,
    pub note: String,
}

pub const PLATEAU_EXPONENT: f64 = 1.1;

pub fn comes_down_diagnostic(
    chars: &Characteristics,
    horizon: usize,
    options: &BlockRateOptions,
) -> Result<ComesDownReport, MeasureError> {
    if horizon < 2 {
        return Err(MeasureError::BadParameter(format!(
            "horizon B = {horizon} must be at least 2"
        )));
    }
    let inner = BlockRateOptions {
        execution: Execution::Sequential,
        ..*options
    };
    let rates = options
        .execution
        .map_indexed(horizon - 1, |i| coalescent_block_rates(chars, i + 2, &inner))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut partial_sums = Vec::with_capacity(rates.len());
    let mut acc = 0.0;
    for r in &rates {
        acc += if r.gamma > 0.0 { 1.0 / r.gamma } else { f64::INFINITY };
        partial_sums.push(acc);
    }

    let gamma_at = |b: usize| rates[b - 2].gamma;
    let all_zero = rates.iter().all(|r| r.gamma == 0.0);
    let growth_exponent = if horizon >= 4 && gamma_at(horizon / 2) > 0.0 {
        let ratio = gamma_at(horizon) / gamma_at(horizon / 2);
        Some(ratio.ln() / (horizon as f64 / (horizon / 2) as f64).ln())
    } else {
        None
    };
    let verdict = if all_zero {
        ComesDownVerdict::Inapplicable
    } else if growth_exponent.is_some_and(|a| a > PLATEAU_EXPONENT) {
        ComesDownVerdict::CriterionMet
    } else {
        ComesDownVerdict::NotMetAtHorizon
    };
    let coag_proper_mass = chars
        .nu_coag
        .integrate(|x| if x.is_proper() { 1.0 } else { 0.0 });
    Ok(ComesDownReport {
        horizon,
        rates,
        partial_sums,
        coag_proper_mass,
        growth_exponent,
        verdict,
        verdict_label: verdict.label().to_string(),
        note: format!(
            "heuristic truncation of an infinite series at B = {horizon}; \
             plateau means gamma_b grows faster than b^{PLATEAU_EXPONENT}"
        ),
    })
}
