use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use super::{EventKind, Mode, SimulationError, Trajectory};
use crate::measures::paintbox::{paint, paint_one, partition_from_colors};
use crate::measures::{prob_all_distinct, Characteristics, RankedMasses};
use crate::par::Execution;
use crate::partition::Partition;
use crate::rates::RateEngine;
use crate::rng::{next_event_time, pick_weighted, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathOptions {
    #[serde(default)]
    pub mode: Mode,
    pub horizon: f64,
    /// Stop after this many jumps even if the horizon is not reached.
    #[serde(default = "default_max_jumps")]
    pub max_jumps: usize,
    /// Full states are recorded only for `n` below this.
    #[serde(default = "default_record_below")]
    pub record_states_below: usize,
    /// Track the dust set of `[n]` (PPP mode only).
    #[serde(default)]
    pub track_dust: bool,
}

fn default_max_jumps() -> usize {
    usize::MAX
}

fn default_record_below() -> usize {
    16
}

impl PathOptions {
    pub fn new(mode: Mode, horizon: f64) -> Self {
        Self {
            mode,
            horizon,
            max_jumps: usize::MAX,
            record_states_below: 16,
            track_dust: false,
        }
    }
}

struct Recorder {
    traj: Trajectory,
    keep_states: bool,
}

impl Recorder {
    fn new(n: usize, opts: &PathOptions, seed: u64, stream: u64, tracking: bool) -> Self {
        Self {
            traj: Trajectory {
                n,
                mode: opts.mode,
                seed,
                stream,
                horizon: opts.horizon,
                times: Vec::new(),
                states: Vec::new(),
                block_counts: Vec::new(),
                singleton_counts: Vec::new(),
                dust_counts: tracking.then(Vec::new),
                events: Vec::new(),
                absorbed: false,
                truncated: false,
            },
            keep_states: n < opts.record_states_below,
        }
    }

    fn push(&mut self, t: f64, pi: &Partition, dust: Option<usize>, kind: EventKind) {
        let tr = &mut self.traj;
        tr.times.push(t);
        if self.keep_states {
            tr.states.push(pi.clone());
        }
        tr.block_counts.push(pi.block_count());
        tr.singleton_counts.push(pi.singleton_count());
        if let (Some(d), Some(v)) = (dust, tr.dust_counts.as_mut()) {
            v.push(d);
        }
        tr.events.push(kind);
    }
}

fn check_inputs(chars: &Characteristics, n: usize, init: &Partition, horizon: f64) -> Result<(), SimulationError> {
    chars
        .check()
        .map_err(|e| SimulationError::BadParameter(e.to_string()))?;
    if init.n() != n {
        return Err(SimulationError::BadParameter(format!(
            "initial state {init} is not a partition of [{n}]"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimulationError::BadParameter(format!("horizon {horizon} must be positive")));
    }
    Ok(())
}

/// One path of `Π|[n]` from `init` on `[0, horizon]`, driven by stream
/// `(seed, stream)`.
pub fn simulate_path(
    chars: &Characteristics,
    n: usize,
    init: &Partition,
    opts: &PathOptions,
    seed: u64,
    stream: u64,
) -> Result<Trajectory, SimulationError> {
    check_inputs(chars, n, init, opts.horizon)?;
    let mut rng = stream_rng(seed, stream);
    match opts.mode {
        Mode::Gillespie => {
            if opts.track_dust {
                return Err(SimulationError::BadParameter(
                    "dust tracking needs the ppp mode".to_string(),
                ));
            }
            gillespie(chars, init, opts, seed, stream, &mut rng)
        }
        Mode::Ppp => Ok(ppp(chars, init, opts, seed, stream, &mut rng)),
    }
}

fn gillespie<R: Rng>(
    chars: &Characteristics,
    init: &Partition,
    opts: &PathOptions,
    seed: u64,
    stream: u64,
    rng: &mut R,
) -> Result<Trajectory, SimulationError> {
    let n = init.n();
    let engine = RateEngine::<f64>::new(chars, n, Execution::Sequential)?;
    let mut rows: HashMap<Partition, (Vec<Partition>, Vec<f64>, f64)> = HashMap::new();
    let mut rec = Recorder::new(n, opts, seed, stream, false);
    let mut pi = init.clone();
    let mut t = 0.0;
    rec.push(t, &pi, None, EventKind::Start);
    loop {
        if !rows.contains_key(&pi) {
            let row = engine.transition_rates(&pi)?;
            let total = row.iter().map(|(_, r)| r).sum();
            let (targets, rates) = row.into_iter().unzip();
            rows.insert(pi.clone(), (targets, rates, total));
        }
        let (targets, rates, total) = &rows[&pi];
        if *total <= 0.0 {
            rec.traj.absorbed = true;
            break;
        }
        if rec.traj.jumps() >= opts.max_jumps {
            rec.traj.truncated = true;
            break;
        }
        t = next_event_time(rng, t, *total);
        if t > opts.horizon {
            break;
        }
        let next = targets[pick_weighted(rng, rates, *total)].clone();
        let kind = if next.block_count() < pi.block_count() {
            EventKind::Coagulation
        } else {
            EventKind::Fragmentation
        };
        pi = next;
        rec.push(t, &pi, None, kind);
    }
    Ok(rec.traj)
}

/// Per-atom quantities the thinned streams need.
struct PppTables {
    coag: Vec<(f64, RankedMasses)>,
    /// `distinct[j][m] = μ_{x_j}(0_m)`.
    distinct: Vec<Vec<f64>>,
    /// `dust_pow[j][d] = x_{0,j}^d`.
    dust_pow: Vec<Vec<f64>>,
    disl: Vec<(f64, RankedMasses)>,
    /// `same[j][l] = Σ_i x_{j,i}^l`.
    same: Vec<Vec<f64>>,
    c_e: f64,
    c_k: f64,
}

impl PppTables {
    fn new(chars: &Characteristics, n: usize) -> Self {
        let coag: Vec<(f64, RankedMasses)> = chars
            .nu_coag
            .atoms()
            .iter()
            .map(|a| (a.weight, a.masses.clone()))
            .collect();
        let disl: Vec<(f64, RankedMasses)> = chars
            .nu_disl
            .atoms()
            .iter()
            .map(|a| (a.weight, a.masses.clone()))
            .collect();
        Self {
            distinct: coag
                .iter()
                .map(|(_, x)| (0..=n).map(|m| prob_all_distinct::<f64>(x, m)).collect())
                .collect(),
            dust_pow: coag
                .iter()
                .map(|(_, x)| (0..=n).map(|d| x.dust().powi(d as i32)).collect())
                .collect(),
            same: disl
                .iter()
                .map(|(_, x)| (0..=n).map(|l| x.power_sum(l as f64)).collect())
                .collect(),
            coag,
            disl,
            c_e: chars.c_e,
            c_k: chars.c_k,
        }
    }

    /// Rate of dislocation atom `j` acting nontrivially on a block of size
    /// `l`; singleton blocks count only when they can turn into dust.
    fn disl_rate(&self, j: usize, l: usize, can_dust: bool) -> f64 {
        let (w, x) = &self.disl[j];
        match l {
            0 => 0.0,
            1 if can_dust => w * x.dust(),
            1 => 0.0,
            _ => w * (1.0 - self.same[j][l]).max(0.0),
        }
    }
}

fn isolate(pi: &Partition, e: usize) -> Partition {
    let mut labels = pi.labels();
    labels[e - 1] = pi.n();
    Partition::from_labels(&labels).expect("nonempty")
}

fn ppp<R: Rng>(
    chars: &Characteristics,
    init: &Partition,
    opts: &PathOptions,
    seed: u64,
    stream: u64,
    rng: &mut R,
) -> Trajectory {
    let n = init.n();
    let tables = PppTables::new(chars, n);
    let tracking = opts.track_dust;
    let mut dust: Vec<bool> = (1..=n)
        .map(|e| tracking && init.blocks()[init.block_of(e).expect("in range")].len() == 1)
        .collect();
    let dust_count = |d: &[bool]| tracking.then(|| d.iter().filter(|&&f| f).count());
    let mut rec = Recorder::new(n, opts, seed, stream, tracking);
    let mut pi = init.clone();
    let mut t = 0.0;
    rec.push(t, &pi, dust_count(&dust), EventKind::Start);

    loop {
        let blocks = pi.blocks();
        let m = blocks.len();
        let is_dust_block: Vec<bool> = blocks.iter().map(|b| b.len() == 1 && dust[b[0] - 1]).collect();
        let d = is_dust_block.iter().filter(|&&f| f).count();

        let kingman = tables.c_k * (m * (m - 1) / 2) as f64;
        let coag_rates: Vec<f64> = (0..tables.coag.len())
            .map(|j| {
                let trivial = tables.dust_pow[j][d] * tables.distinct[j][m - d];
                tables.coag[j].0 * (1.0 - trivial).max(0.0)
            })
            .collect();
        let eroders: Vec<usize> = (1..=n)
            .filter(|&e| {
                if tracking {
                    !dust[e - 1]
                } else {
                    blocks[pi.block_of(e).expect("in range")].len() > 1
                }
            })
            .collect();
        let erosion = tables.c_e * eroders.len() as f64;
        let block_rates: Vec<f64> = blocks
            .iter()
            .zip(&is_dust_block)
            .map(|(b, &is_dust)| {
                (0..tables.disl.len())
                    .map(|j| tables.disl_rate(j, b.len(), tracking && !is_dust))
                    .sum()
            })
            .collect();
        let coag_total: f64 = coag_rates.iter().sum();
        let disl_total: f64 = block_rates.iter().sum();
        let categories = [kingman, coag_total, erosion, disl_total];
        let total: f64 = categories.iter().sum();

        if total <= 0.0 {
            rec.traj.absorbed = true;
            break;
        }
        if rec.traj.jumps() >= opts.max_jumps {
            rec.traj.truncated = true;
            break;
        }
        t = next_event_time(rng, t, total);
        if t > opts.horizon {
            break;
        }
        let kind = match pick_weighted(rng, &categories, total) {
            0 => {
                let a = rng.random_range(0..m);
                let mut b = rng.random_range(0..m - 1);
                if b >= a {
                    b += 1;
                }
                let labels: Vec<usize> = (0..m).map(|i| if i == b { a } else { i }).collect();
                for &k in &[a, b] {
                    if is_dust_block[k] {
                        dust[blocks[k][0] - 1] = false;
                    }
                }
                pi = pi.coag(&Partition::from_labels(&labels).expect("m >= 2")).expect("sizes match");
                EventKind::Kingman
            }
            1 => {
                let j = pick_weighted(rng, &coag_rates, coag_total);
                let x = &tables.coag[j].1;
                let colors = loop {
                    let c = paint(x, m, rng);
                    let mut seen = vec![false; x.len()];
                    let mut merges = false;
                    for k in c.iter().flatten() {
                        merges |= seen[*k];
                        seen[*k] = true;
                    }
                    let undusts = c.iter().zip(&is_dust_block).any(|(c, &f)| f && c.is_some());
                    if merges || undusts {
                        break c;
                    }
                };
                for (k, c) in colors.iter().enumerate() {
                    if is_dust_block[k] && c.is_some() {
                        dust[blocks[k][0] - 1] = false;
                    }
                }
                pi = pi.coag(&partition_from_colors(&colors)).expect("sizes match");
                EventKind::Coagulation
            }
            2 => {
                let e = eroders[rng.random_range(0..eroders.len())];
                if blocks[pi.block_of(e).expect("in range")].len() > 1 {
                    pi = isolate(&pi, e);
                }
                if tracking {
                    dust[e - 1] = true;
                }
                EventKind::Erosion
            }
            _ => {
                let k = pick_weighted(rng, &block_rates, disl_total);
                let block = blocks[k].clone();
                let l = block.len();
                let can_dust = tracking && !is_dust_block[k];
                let atom_rates: Vec<f64> = (0..tables.disl.len())
                    .map(|j| tables.disl_rate(j, l, can_dust))
                    .collect();
                let j = pick_weighted(rng, &atom_rates, block_rates[k]);
                let x = &tables.disl[j].1;
                let colors = loop {
                    let c = paint(x, l, rng);
                    let uniform = c[0].is_some() && c.iter().all(|v| *v == c[0]);
                    if !uniform {
                        break c;
                    }
                };
                if tracking {
                    for (e, c) in block.iter().zip(&colors) {
                        if c.is_none() {
                            dust[e - 1] = true;
                        }
                    }
                }
                if l > 1 {
                    pi = pi.frag(&partition_from_colors(&colors), k).expect("sizes match");
                }
                EventKind::Dislocation
            }
        };
        rec.push(t, &pi, dust_count(&dust), kind);
    }
    rec.traj
}

/// An EFC path and a pure-fragmentation path driven by the same
/// fragmentation atoms.
#[derive(Debug, Clone, Serialize)]
pub struct CoupledTrajectory {
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub efc: Vec<Partition>,
    pub fragmentation_only: Vec<Partition>,
    pub events: Vec<EventKind>,
    /// Coalescence atoms seen so far at each entry.
    pub coalescences: Vec<usize>,
}

impl CoupledTrajectory {
    /// `B_1` of the fragmentation path lies inside `B_1` of the EFC path.
    pub fn first_block_nested(&self, i: usize) -> bool {
        let outer = &self.efc[i].blocks()[0];
        self.fragmentation_only[i].blocks()[0]
            .iter()
            .all(|e| outer.binary_search(e).is_ok())
    }

    /// Every block of the fragmentation path lies inside a block of the EFC
    /// path.
    pub fn fully_nested(&self, i: usize) -> bool {
        self.fragmentation_only[i].is_finer_than(&self.efc[i])
    }
}

/// Erosion atoms are indexed by element and act on both paths. Dislocation
/// atoms carry a block index `k` and a coloring of `[n]`, and act on the
/// `k`-th block of each path. Coalescence acts on the EFC path only. This
/// keeps each marginal exact and `B_1^F ⊆ B_1` pathwise.
pub fn coupled_fragmentation(
    chars: &Characteristics,
    n: usize,
    init: &Partition,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<CoupledTrajectory, SimulationError> {
    check_inputs(chars, n, init, horizon)?;
    let mut rng = stream_rng(seed, stream);
    let tables = PppTables::new(chars, n);
    let disl_weights: Vec<f64> = tables.disl.iter().map(|(w, _)| *w).collect();
    let disl_mass: f64 = disl_weights.iter().sum();
    let mut out = CoupledTrajectory {
        n,
        seed,
        stream,
        horizon,
        times: vec![0.0],
        efc: vec![init.clone()],
        fragmentation_only: vec![init.clone()],
        events: vec![EventKind::Start],
        coalescences: vec![0],
    };
    let mut pi = init.clone();
    let mut pf = init.clone();
    let mut t = 0.0;
    let mut coalescences = 0;
    loop {
        let m = pi.block_count();
        let kingman = tables.c_k * (m * (m - 1) / 2) as f64;
        let coag_rates: Vec<f64> = (0..tables.coag.len())
            .map(|j| tables.coag[j].0 * (1.0 - tables.distinct[j][m]).max(0.0))
            .collect();
        let coag_total: f64 = coag_rates.iter().sum();
        let indices = pi.block_count().max(pf.block_count());
        let categories = [kingman, coag_total, tables.c_e * n as f64, disl_mass * indices as f64];
        let total: f64 = categories.iter().sum();
        if total <= 0.0 {
            break;
        }
        t = next_event_time(&mut rng, t, total);
        if t > horizon {
            break;
        }
        let (next_pi, next_pf, kind) = match pick_weighted(&mut rng, &categories, total) {
            0 => {
                let a = rng.random_range(0..m);
                let mut b = rng.random_range(0..m - 1);
                if b >= a {
                    b += 1;
                }
                let labels: Vec<usize> = (0..m).map(|i| if i == b { a } else { i }).collect();
                coalescences += 1;
                let by = Partition::from_labels(&labels).expect("m >= 2");
                (pi.coag(&by)?, pf.clone(), EventKind::Kingman)
            }
            1 => {
                let j = pick_weighted(&mut rng, &coag_rates, coag_total);
                let x = &tables.coag[j].1;
                let by = loop {
                    let by = partition_from_colors(&paint(x, m, &mut rng));
                    if !by.is_singletons() {
                        break by;
                    }
                };
                coalescences += 1;
                (pi.coag(&by)?, pf.clone(), EventKind::Coagulation)
            }
            2 => {
                let e = rng.random_range(1..=n);
                (isolate(&pi, e), isolate(&pf, e), EventKind::Erosion)
            }
            _ => {
                let k = rng.random_range(0..indices);
                let j = pick_weighted(&mut rng, &disl_weights, disl_mass);
                let x = &tables.disl[j].1;
                let colors: Vec<Option<usize>> = (0..n).map(|_| paint_one(x, &mut rng)).collect();
                (
                    split_block(&pi, k, &colors)?,
                    split_block(&pf, k, &colors)?,
                    EventKind::Dislocation,
                )
            }
        };
        if next_pi == pi && next_pf == pf {
            continue;
        }
        pi = next_pi;
        pf = next_pf;
        out.times.push(t);
        out.efc.push(pi.clone());
        out.fragmentation_only.push(pf.clone());
        out.events.push(kind);
        out.coalescences.push(coalescences);
    }
    Ok(out)
}

/// Splits block `k` of `pi` (if it exists) by the colors of its elements.
fn split_block(pi: &Partition, k: usize, colors: &[Option<usize>]) -> Result<Partition, SimulationError> {
    let Some(block) = pi.blocks().get(k) else {
        return Ok(pi.clone());
    };
    if block.len() < 2 {
        return Ok(pi.clone());
    }
    let sub: Vec<Option<usize>> = block.iter().map(|&e| colors[e - 1]).collect();
    let by = partition_from_colors(&sub);
    if by.is_one_block() {
        return Ok(pi.clone());
    }
    Ok(pi.frag(&by, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;

    fn mixed() -> Characteristics {
        Characteristics {
            c_e: 0.5,
            c_k: 1.0,
            nu_disl: DiscreteMeasure::from_pairs(&[(1.0, &[0.6, 0.4])]).unwrap(),
            nu_coag: DiscreteMeasure::from_pairs(&[(0.5, &[0.5, 0.3])]).unwrap(),
        }
    }

    #[test]
    fn pure_coalescence_coarsens_to_one_block() {
        let c = Characteristics {
            c_k: 1.0,
            nu_coag: DiscreteMeasure::from_pairs(&[(1.0, &[0.5])]).unwrap(),
            ..Default::default()
        };
        for mode in [Mode::Gillespie, Mode::Ppp] {
            let opts = PathOptions::new(mode, 1e3);
            let tr = simulate_path(&c, 6, &Partition::singletons(6), &opts, 1, 0).unwrap();
            assert!(tr.absorbed);
            assert!(tr.states.last().unwrap().is_one_block());
            assert!(tr.states.windows(2).all(|w| w[0].is_finer_than(&w[1])));
        }
    }

    #[test]
    fn zero_characteristics_give_constant_path() {
        let init: Partition = "{1,2}{3}".parse().unwrap();
        for mode in [Mode::Gillespie, Mode::Ppp] {
            let tr = simulate_path(&Characteristics::default(), 3, &init, &PathOptions::new(mode, 5.0), 0, 0)
                .unwrap();
            assert_eq!(tr.len(), 1);
            assert!(tr.absorbed);
            assert_eq!(tr.states[0], init);
        }
    }

    #[test]
    fn times_strictly_increase_and_are_reproducible() {
        for mode in [Mode::Gillespie, Mode::Ppp] {
            let opts = PathOptions::new(mode, 20.0);
            let a = simulate_path(&mixed(), 5, &Partition::one_block(5), &opts, 9, 3).unwrap();
            let b = simulate_path(&mixed(), 5, &Partition::one_block(5), &opts, 9, 3).unwrap();
            assert!(a.times.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(a.times, b.times);
            assert_eq!(a.states, b.states);
            assert!(a.jumps() > 10);
        }
    }

    #[test]
    fn coupled_paths_nest() {
        let tr = coupled_fragmentation(&mixed(), 8, &Partition::one_block(8), 30.0, 4, 0).unwrap();
        assert!(tr.times.len() > 20);
        for i in 0..tr.times.len() {
            assert!(tr.first_block_nested(i));
            if tr.coalescences[i] == 0 {
                assert_eq!(tr.efc[i], tr.fragmentation_only[i]);
            }
        }
    }

    #[test]
    fn dust_tracking_flags() {
        let c = Characteristics {
            c_e: 1.0,
            nu_coag: DiscreteMeasure::from_pairs(&[(1.0, &[0.5])]).unwrap(),
            ..Default::default()
        };
        let opts = PathOptions {
            track_dust: true,
            ..PathOptions::new(Mode::Ppp, 10.0)
        };
        let tr = simulate_path(&c, 10, &Partition::singletons(10), &opts, 2, 0).unwrap();
        let dust = tr.dust_counts.as_ref().unwrap();
        assert_eq!(dust[0], 10);
        for (i, &d) in dust.iter().enumerate() {
            // dust elements are singletons
            assert!(d <= tr.singleton_counts[i]);
        }
        assert!(simulate_path(&c, 3, &Partition::singletons(3), &PathOptions { mode: Mode::Gillespie, ..opts }, 0, 0).is_err());
    }
}
