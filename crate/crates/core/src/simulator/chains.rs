use std::io::{self, Write};

use rand::Rng;
use serde::Serialize;

use super::SimulationError;
use crate::measures::Characteristics;
use crate::rng::{next_event_time, pick_weighted, stream_rng};

/// Starting level used for the logistic chain started "from infinity".
pub const DEFAULT_N_BIG: u64 = 10_000;

/// A piecewise-constant real-valued path.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarPath {
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// First time the path reached its target, if any.
    pub hit_time: Option<f64>,
    pub absorbed: bool,
}

impl ScalarPath {
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        self.values[i]
    }

    /// CSV with header `time,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<(), SimulationError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimulationError::BadParameter(format!("{name} = {v} must be positive and finite")))
    }
}

fn check_jump_measure(nu: &[(f64, f64)]) -> Result<(), SimulationError> {
    for &(w, theta) in nu {
        positive("atom weight", w)?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(SimulationError::BadParameter(format!(
                "dust retention {theta} must lie in [0, 1]"
            )));
        }
    }
    Ok(())
}

fn binomial(k: usize, r: usize) -> f64 {
    let r = r.min(k - r);
    let mut c: u128 = 1;
    for i in 0..r {
        c = c * (k - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

/// Dust count `K_t ∈ {0..n}` of `[n]`: each non-dust element erodes at rate
/// `c_e`, and a coalescence atom `(w, θ)` keeps each dust element
/// independently with probability `θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DustChainParams {
    pub n: usize,
    pub c_e: f64,
    /// Atoms `(weight, θ)` of the image of the coalescence measure under
    /// `x ↦ 1 − Σ x_i`.
    pub retention: Vec<(f64, f64)>,
}

impl DustChainParams {
    pub fn new(n: usize, c_e: f64, retention: Vec<(f64, f64)>) -> Result<Self, SimulationError> {
        if n == 0 || n > 120 {
            return Err(SimulationError::BadParameter(format!("n = {n} must lie in 1..=120")));
        }
        if !(c_e.is_finite() && c_e >= 0.0) {
            return Err(SimulationError::BadParameter(format!("c_e = {c_e} must be nonnegative")));
        }
        check_jump_measure(&retention)?;
        Ok(Self { n, c_e, retention })
    }

    pub fn up_rate(&self, k: usize) -> f64 {
        self.c_e * (self.n - k) as f64
    }

    /// Rates of `k → r` for `r < k`.
    pub fn down_rates(&self, k: usize) -> Vec<f64> {
        (0..k)
            .map(|r| {
                binomial(k, r)
                    * self
                        .retention
                        .iter()
                        .map(|&(w, th)| w * th.powi(r as i32) * (1.0 - th).powi((k - r) as i32))
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Dust chain of `chars` restricted to `[n]`. The dust count is Markov on
/// its own only without Kingman merges and when dislocations create no dust.
pub fn dust_chain_from_characteristics(
    chars: &Characteristics,
    n: usize,
) -> Result<DustChainParams, SimulationError> {
    if chars.c_k != 0.0 || !chars.has_conservative_dislocations() {
        return Err(SimulationError::BadParameter(
            "the dust chain needs c_k = 0 and conservative dislocations".into(),
        ));
    }
    let mut retention: Vec<(f64, f64)> = Vec::new();
    for a in chars.nu_coag.atoms() {
        let theta = a.masses.dust();
        match retention.iter_mut().find(|(_, t)| (*t - theta).abs() < 1e-15) {
            Some(slot) => slot.0 += a.weight,
            None => retention.push((a.weight, theta)),
        }
    }
    DustChainParams::new(n, chars.c_e, retention)
}

/// Path of `K_t / n` started from `k0` dust elements.
pub fn simulate_dust_chain(
    params: &DustChainParams,
    k0: usize,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<ScalarPath, SimulationError> {
    positive("horizon", horizon)?;
    if k0 > params.n {
        return Err(SimulationError::BadParameter(format!("k0 = {k0} exceeds n = {}", params.n)));
    }
    let n = params.n as f64;
    let down: Vec<Vec<f64>> = (0..=params.n).map(|k| params.down_rates(k)).collect();
    let mut rng = stream_rng(seed, stream);
    let mut path = ScalarPath {
        seed,
        stream,
        horizon,
        times: vec![0.0],
        values: vec![k0 as f64 / n],
        hit_time: None,
        absorbed: false,
    };
    let (mut k, mut t) = (k0, 0.0);
    loop {
        let up = params.up_rate(k);
        let down_total: f64 = down[k].iter().sum();
        let total = up + down_total;
        if total <= 0.0 {
            path.absorbed = true;
            break;
        }
        t = next_event_time(&mut rng, t, total);
        if t > horizon {
            break;
        }
        k = if rng.random::<f64>() * total < up {
            k + 1
        } else {
            pick_weighted(&mut rng, &down[k], down_total)
        };
        path.times.push(t);
        path.values.push(k as f64 / n);
    }
    Ok(path)
}

/// Path of the dust fraction `D_t` of the whole population: deterministic
/// flow `dD = c_e (1 − D) dt` between jumps `D ↦ θ D`.
#[derive(Debug, Clone, Serialize)]
pub struct DustSdePath {
    pub c_e: f64,
    pub horizon: f64,
    /// Jump times, starting with 0.
    pub times: Vec<f64>,
    /// Values just after each jump.
    pub values: Vec<f64>,
}

impl DustSdePath {
    fn flow(c_e: f64, d0: f64, s: f64) -> f64 {
        1.0 - (1.0 - d0) * (-c_e * s).exp()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        Self::flow(self.c_e, self.values[i], t - self.times[i])
    }

    /// CSV with header `time,value` on `grid`.
    pub fn write_csv<W: Write>(&self, grid: &[f64], mut w: W) -> io::Result<()> {
        writeln!(w, "time,value")?;
        for &t in grid {
            writeln!(w, "{t},{}", self.value_at(t))?;
        }
        Ok(())
    }
}

pub fn simulate_dust_sde(
    c_e: f64,
    retention: &[(f64, f64)],
    d0: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<DustSdePath, SimulationError> {
    positive("horizon", horizon)?;
    if !(c_e.is_finite() && c_e >= 0.0) {
        return Err(SimulationError::BadParameter(format!("c_e = {c_e} must be nonnegative")));
    }
    if !(0.0..=1.0).contains(&d0) {
        return Err(SimulationError::BadParameter(format!("D_0 = {d0} must lie in [0, 1]")));
    }
    check_jump_measure(retention)?;
    let weights: Vec<f64> = retention.iter().map(|a| a.0).collect();
    let total: f64 = weights.iter().sum();
    let mut rng = stream_rng(seed, stream);
    let mut path = DustSdePath {
        c_e,
        horizon,
        times: vec![0.0],
        values: vec![d0],
    };
    if total <= 0.0 {
        return Ok(path);
    }
    let mut t = 0.0;
    loop {
        let next = next_event_time(&mut rng, t, total);
        if next > horizon {
            break;
        }
        let before = DustSdePath::flow(c_e, *path.values.last().expect("nonempty"), next - t);
        let theta = retention[pick_weighted(&mut rng, &weights, total)].1;
        t = next;
        path.times.push(t);
        path.values.push(theta * before);
    }
    Ok(path)
}

/// Block-count chain of a process with Kingman coalescence and finitely
/// many conservative dislocations: `i → i + j` at rate `i p_j`, and
/// `i → i − 1` at rate `c_k i (i − 1) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticParams {
    /// `p[j - 1]` is the rate of splitting one block into `j + 1`.
    pub p: Vec<f64>,
    pub c_k: f64,
}

impl LogisticParams {
    pub fn new(p: Vec<f64>, c_k: f64) -> Result<Self, SimulationError> {
        positive("c_k", c_k)?;
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimulationError::BadParameter("split rates must be nonnegative".into()));
        }
        Ok(Self { p, c_k })
    }

    /// Requires no erosion, no coalescence measure, and dislocations onto
    /// finitely many parts with no dust.
    pub fn from_characteristics(chars: &Characteristics) -> Result<Self, SimulationError> {
        if chars.c_e != 0.0 || !chars.nu_coag.is_empty() {
            return Err(SimulationError::BadParameter(
                "the logistic chain needs c_e = 0 and no coalescence measure".into(),
            ));
        }
        let mut p = Vec::new();
        for a in chars.nu_disl.atoms() {
            if a.masses.dust() > 1e-12 {
                return Err(SimulationError::BadParameter(format!(
                    "dislocation atom {:?} is not conservative",
                    a.masses.masses()
                )));
            }
            let j = a.masses.len() - 1;
            if p.len() < j {
                p.resize(j, 0.0);
            }
            p[j - 1] += a.weight;
        }
        Self::new(p, chars.c_k)
    }

    pub fn split_rate(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// `r[i - 1]`: rate at which a block of size `m` is split by a dislocation
/// into exactly `i + 1` nonempty parts. Atoms must be conservative with at
/// most 16 parts.
pub fn block_split_rates(chars: &Characteristics, m: usize) -> Result<Vec<f64>, SimulationError> {
    let mut rates: Vec<f64> = Vec::new();
    for a in chars.nu_disl.atoms() {
        let x = a.masses.masses();
        if !a.masses.is_proper() || x.len() > 16 {
            return Err(SimulationError::BadParameter(
                "split rates need conservative atoms with at most 16 parts".into(),
            ));
        }
        // occupied[mask] = P(the colors drawn so far are exactly `mask`)
        let mut occupied = vec![0.0; 1 << x.len()];
        occupied[0] = 1.0;
        for _ in 0..m {
            let mut next = vec![0.0; occupied.len()];
            for (mask, &p) in occupied.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                for (c, &xc) in x.iter().enumerate() {
                    next[mask | (1 << c)] += p * xc;
                }
            }
            occupied = next;
        }
        for (mask, &p) in occupied.iter().enumerate() {
            let parts = mask.count_ones() as usize;
            if parts >= 2 && p > 0.0 {
                if rates.len() < parts - 1 {
                    rates.resize(parts - 1, 0.0);
                }
                rates[parts - 2] += a.weight * p;
            }
        }
    }
    Ok(rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LogisticStart {
    Count(u64),
    /// Stand-in for the entrance from infinity.
    Large { n_big: u64 },
}

impl LogisticStart {
    pub fn level(self) -> u64 {
        match self {
            Self::Count(i) | Self::Large { n_big: i } => i,
        }
    }
}

fn logistic_step<R: Rng>(params: &LogisticParams, i: u64, t: f64, rng: &mut R) -> Option<(u64, f64)> {
    let split = params.split_rate();
    let up = i as f64 * split;
    let down = params.c_k * (i * i.saturating_sub(1)) as f64 / 2.0;
    let total = up + down;
    if total <= 0.0 {
        return None;
    }
    let t = next_event_time(rng, t, total);
    let i = if rng.random::<f64>() * total < down {
        i - 1
    } else {
        i + 1 + pick_weighted(rng, &params.p, split) as u64
    };
    Some((i, t))
}

/// Path of the block count on `[0, horizon]`; `hit_time` is the first
/// visit to 1.
pub fn simulate_logistic_chain(
    params: &LogisticParams,
    start: LogisticStart,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<ScalarPath, SimulationError> {
    positive("horizon", horizon)?;
    let mut i = start.level();
    if i == 0 {
        return Err(SimulationError::BadParameter("start level must be positive".into()));
    }
    let mut rng = stream_rng(seed, stream);
    let mut path = ScalarPath {
        seed,
        stream,
        horizon,
        times: vec![0.0],
        values: vec![i as f64],
        hit_time: (i == 1).then_some(0.0),
        absorbed: false,
    };
    let mut t = 0.0;
    loop {
        let Some((j, s)) = logistic_step(params, i, t, &mut rng) else {
            path.absorbed = true;
            break;
        };
        if s > horizon {
            break;
        }
        (i, t) = (j, s);
        path.times.push(t);
        path.values.push(i as f64);
        if i == 1 && path.hit_time.is_none() {
            path.hit_time = Some(t);
        }
    }
    Ok(path)
}

/// First time the chain from `start` reaches 1, or `None` if it has not by
/// `horizon`.
pub fn logistic_hitting_time(
    params: &LogisticParams,
    start: LogisticStart,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Option<f64> {
    let mut rng = stream_rng(seed, stream);
    let (mut i, mut t) = (start.level().max(1), 0.0);
    while i > 1 {
        (i, t) = logistic_step(params, i, t, &mut rng)?;
        if t > horizon {
            return None;
        }
    }
    Some(t)
}
