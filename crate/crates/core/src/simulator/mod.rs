//! Path simulation of `Π|[n]` and of the one-dimensional chains that track
//! its block count and dust.

mod chains;
mod path;

pub use chains::{
    block_split_rates, dust_chain_from_characteristics, logistic_hitting_time, simulate_dust_chain,
    simulate_dust_sde, simulate_logistic_chain, DustChainParams, DustSdePath, LogisticParams,
    LogisticStart, ScalarPath, DEFAULT_N_BIG,
};
pub use path::{coupled_fragmentation, simulate_path, CoupledTrajectory, PathOptions};

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;
use crate::partition::{LexRanker, Partition, PartitionError};
use crate::rates::RateError;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("{0}")]
    BadParameter(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Jump chain driven by the generator rows.
    #[default]
    Gillespie,
    /// Poisson streams of coalescence and fragmentation atoms, thinned to the
    /// atoms that act on `[n]`.
    Ppp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Coagulation,
    Fragmentation,
    Kingman,
    Erosion,
    Dislocation,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::Coagulation => "coagulation",
            Self::Fragmentation => "fragmentation",
            Self::Kingman => "kingman",
            Self::Erosion => "erosion",
            Self::Dislocation => "dislocation",
        }
    }
}

/// A piecewise-constant path. Entry `i` holds from `times[i]` until
/// `times[i + 1]` (or the horizon).
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    /// Strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// Full states, kept only when `n` is below the recording threshold.
    pub states: Vec<Partition>,
    pub block_counts: Vec<usize>,
    pub singleton_counts: Vec<usize>,
    /// Number of dust elements in `[n]`, when tracked.
    pub dust_counts: Option<Vec<usize>>,
    pub events: Vec<EventKind>,
    /// No transition possible from the final state.
    pub absorbed: bool,
    /// Stopped by the jump budget before the horizon.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn jumps(&self) -> usize {
        self.times.len() - 1
    }

    /// End of the observed window: the horizon, or the last event when the
    /// jump budget ran out.
    pub fn end_time(&self) -> f64 {
        if self.truncated {
            *self.times.last().expect("nonempty")
        } else {
            self.horizon
        }
    }

    /// Index of the entry in force at time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn has_states(&self) -> bool {
        !self.states.is_empty()
    }

    /// Time spent in each state of `P_n` (enumeration order) over
    /// `[0, end_time]`. Requires recorded states.
    pub fn occupation_times(&self) -> Vec<f64> {
        assert!(self.has_states(), "occupation times need recorded states");
        let ranker = LexRanker::new(self.n);
        let mut occ = vec![0.0; crate::partition::bell(self.n) as usize];
        let end = self.end_time();
        for (i, p) in self.states.iter().enumerate() {
            let until = self.times.get(i + 1).copied().unwrap_or(end).min(end);
            occ[ranker.rank(p)] += until - self.times[i];
        }
        occ
    }

    /// CSV with header `time,block_count,singleton_fraction,dust_fraction`.
    /// The dust column is empty when dust is not tracked.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,block_count,singleton_fraction,dust_fraction")?;
        let n = self.n as f64;
        for i in 0..self.len() {
            let dust = self
                .dust_counts
                .as_ref()
                .map(|d| format!("{}", d[i] as f64 / n))
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{}",
                self.times[i],
                self.block_counts[i],
                self.singleton_counts[i] as f64 / n,
                dust
            )?;
        }
        Ok(())
    }

    /// Event log with header `time,event_kind,detail`; the detail is the new
    /// state (quoted) when recorded, else the new block count.
    pub fn write_event_log<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,event_kind,detail")?;
        for i in 0..self.len() {
            let detail = match self.states.get(i) {
                Some(p) => format!("\"{p}\""),
                None => format!("blocks={}", self.block_counts[i]),
            };
            writeln!(w, "{},{},{}", self.times[i], self.events[i].as_str(), detail)?;
        }
        Ok(())
    }
}

/// Derived series of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub times: Vec<f64>,
    pub block_counts: Vec<usize>,
    /// Fraction of `[n]` in singleton blocks.
    pub singleton_fraction: Vec<f64>,
    /// Fraction of `[n]` flagged as dust, when tracked.
    pub dust_fraction: Option<Vec<f64>>,
    /// `|B_i|/n` sorted decreasingly, when states are recorded.
    pub frequencies: Vec<Vec<f64>>,
}

pub fn observables(traj: &Trajectory) -> Observables {
    let n = traj.n as f64;
    Observables {
        times: traj.times.clone(),
        block_counts: traj.block_counts.clone(),
        singleton_fraction: traj.singleton_counts.iter().map(|&s| s as f64 / n).collect(),
        dust_fraction: traj
            .dust_counts
            .as_ref()
            .map(|d| d.iter().map(|&k| k as f64 / n).collect()),
        frequencies: traj.states.iter().map(block_frequencies).collect(),
    }
}

/// `|B_i| / n`, sorted decreasingly.
pub fn block_frequencies(p: &Partition) -> Vec<f64> {
    let mut f: Vec<f64> = p.block_sizes().iter().map(|&s| s as f64 / p.n() as f64).collect();
    f.sort_by(|a, b| b.total_cmp(a));
    f
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = pairwise_sum(xs) / count as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if count > 1 {
            pairwise_sum(&dev) / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            count,
            mean,
            std_err: (var / count as f64).sqrt(),
        }
    }
}

/// Pairwise summation; depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Runs `paths` independent jobs, job `i` on stream `i`, and returns results in
/// job order.
pub fn run_ensemble<T, F>(paths: usize, exec: Execution, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    exec.map_indexed(paths, |i| job(i as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_sum_to_one() {
        let p: Partition = "{1,3}{2}{4,5,6}".parse().unwrap();
        let f = block_frequencies(&p);
        assert_eq!(f, vec![0.5, 2.0 / 6.0, 1.0 / 6.0]);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_estimate_and_pairwise_sum() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let m = MeanEstimate::from_samples(&xs);
        assert_eq!(m.mean, 50.5);
        assert!((m.std_err - (841.666_666_666_666_6f64 / 100.0).sqrt()).abs() < 1e-9);
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }
}
