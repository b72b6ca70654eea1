//! Transition rates of the restricted chain `Π|[n]` and its generator.
//!
//! From `π` with `m` blocks the chain jumps to `Coag(π, π'')` at rate
//! `C_m(π'')` and to `Frag(π, π'', k)` at rate `F_{|B_k|}(π'')`. No other
//! transitions occur.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::measures::{
    erosion_restriction_mass, kingman_restriction_mass, paintbox_restriction_prob,
    Characteristics, MeasureError,
};
use crate::par::Execution;
use crate::partition::{bell, enumerate_partitions, LexRanker, Partition, PartitionError, MAX_ENUMERATION_N};
use crate::scalar::RateScalar;

#[derive(Debug, Error)]
pub enum RateError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("state space for n = {n} has {bell} partitions; the limit is n <= {max}")]
    TooLarge { n: usize, max: usize, bell: u128 },
}

/// `C_m(π') = c_k κ(π') + Σ w μ_x(π')` for `π'` a partition of `[m]`,
/// `π' ≠ 0_m`.
pub fn coag_rate<S: RateScalar>(chars: &Characteristics, pi: &Partition) -> Result<S, RateError> {
    let kingman = kingman_restriction_mass(pi)?;
    let mut rate = S::from_f64(chars.c_k) * S::from_u64(kingman);
    for atom in chars.nu_coag.atoms() {
        let p: S = paintbox_restriction_prob(&atom.masses, pi);
        rate = rate + S::from_f64(atom.weight) * p;
    }
    Ok(rate)
}

/// `F_ℓ(π') = c_e e(π') + Σ w μ_x(π')` for `π'` a partition of `[ℓ]`,
/// `π' ≠ 1_ℓ`.
pub fn frag_rate<S: RateScalar>(chars: &Characteristics, pi: &Partition) -> Result<S, RateError> {
    let erosion = erosion_restriction_mass(pi)?;
    let mut rate = S::from_f64(chars.c_e) * S::from_u64(erosion);
    for atom in chars.nu_disl.atoms() {
        let p: S = paintbox_restriction_prob(&atom.masses, pi);
        rate = rate + S::from_f64(atom.weight) * p;
    }
    Ok(rate)
}

/// Cached tables of the nonzero `C_m` and `F_ℓ` for all sizes up to `max_n`.
#[derive(Debug, Clone)]
pub struct RateEngine<S> {
    chars: Characteristics,
    max_n: usize,
    /// `coag[m]`: `(π'', C_m(π''))` with `π'' ∈ P_m ∖ {0_m}` and nonzero rate.
    coag: Vec<Vec<(Partition, S)>>,
    /// `frag[ℓ]`: `(π'', F_ℓ(π''))` with `π'' ∈ P_ℓ ∖ {1_ℓ}` and nonzero rate.
    frag: Vec<Vec<(Partition, S)>>,
}

impl<S: RateScalar> RateEngine<S> {
    pub fn new(chars: &Characteristics, max_n: usize, exec: Execution) -> Result<Self, RateError> {
        check_size(max_n)?;
        let mut coag = vec![Vec::new(); max_n + 1];
        let mut frag = vec![Vec::new(); max_n + 1];
        for size in 1..=max_n {
            let states = enumerate_partitions(size)?;
            if chars.has_coalescence() {
                coag[size] = table(&states, exec, |p| {
                    if p.is_singletons() {
                        Ok(None)
                    } else {
                        coag_rate(chars, p).map(Some)
                    }
                })?;
            }
            if chars.has_fragmentation() {
                frag[size] = table(&states, exec, |p| {
                    if p.is_one_block() {
                        Ok(None)
                    } else {
                        frag_rate(chars, p).map(Some)
                    }
                })?;
            }
        }
        Ok(Self {
            chars: chars.clone(),
            max_n,
            coag,
            frag,
        })
    }

    pub fn characteristics(&self) -> &Characteristics {
        &self.chars
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn coag_table(&self, m: usize) -> &[(Partition, S)] {
        &self.coag[m]
    }

    pub fn frag_table(&self, l: usize) -> &[(Partition, S)] {
        &self.frag[l]
    }

    /// Total rate of nontrivial coalescence events among `m` blocks.
    pub fn total_coag_rate(&self, m: usize) -> S {
        sum_rates(&self.coag[m])
    }

    /// Total rate at which a block of size `l` splits.
    pub fn total_frag_rate(&self, l: usize) -> S {
        sum_rates(&self.frag[l])
    }

    /// Nonzero off-diagonal entries of the row of `pi`, sorted by target in
    /// enumeration order. Rates to a common target are summed.
    pub fn transition_rates(&self, pi: &Partition) -> Result<Vec<(Partition, S)>, RateError> {
        if pi.n() > self.max_n {
            return Err(RateError::TooLarge {
                n: pi.n(),
                max: self.max_n,
                bell: bell(pi.n()),
            });
        }
        let mut acc: HashMap<Partition, S> = HashMap::new();
        let mut add = |target: Partition, rate: &S| {
            let slot = acc.entry(target).or_insert_with(S::zero);
            *slot = slot.clone() + rate.clone();
        };
        for (by, rate) in &self.coag[pi.block_count()] {
            add(pi.coag(by)?, rate);
        }
        for (k, block) in pi.blocks().iter().enumerate() {
            if block.len() < 2 {
                continue;
            }
            for (by, rate) in &self.frag[block.len()] {
                add(pi.frag(by, k)?, rate);
            }
        }
        let mut row: Vec<(Partition, S)> = acc.into_iter().filter(|(_, r)| !r.is_zero()).collect();
        row.sort_by_cached_key(|(p, _)| p.labels());
        Ok(row)
    }

    /// Total fragmentation rate out of `pi`.
    pub fn fragmentation_exit_rate(&self, pi: &Partition) -> S {
        pi.block_sizes()
            .into_iter()
            .filter(|&s| s >= 2)
            .fold(S::zero(), |acc, s| acc + self.total_frag_rate(s))
    }
}

fn check_size(n: usize) -> Result<(), RateError> {
    if n > MAX_ENUMERATION_N {
        return Err(RateError::TooLarge {
            n,
            max: MAX_ENUMERATION_N,
            bell: bell(n),
        });
    }
    if n == 0 {
        return Err(PartitionError::EmptyGroundSet.into());
    }
    Ok(())
}

fn table<S, F>(states: &[Partition], exec: Execution, f: F) -> Result<Vec<(Partition, S)>, RateError>
where
    S: RateScalar,
    F: Fn(&Partition) -> Result<Option<S>, RateError> + Sync + Send,
{
    let rates = exec.map_indexed(states.len(), |i| f(&states[i]));
    let mut out = Vec::new();
    for (p, r) in states.iter().zip(rates) {
        if let Some(r) = r? {
            if !r.is_zero() {
                out.push((p.clone(), r));
            }
        }
    }
    Ok(out)
}

fn sum_rates<S: RateScalar>(entries: &[(Partition, S)]) -> S {
    entries.iter().fold(S::zero(), |acc, (_, r)| acc + r.clone())
}

/// Generator of `Π|[n]` over `P_n` in enumeration order, stored as
/// compressed rows of off-diagonal rates. The diagonal is minus the row sum.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    states: Vec<Partition>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    exit: Vec<f64>,
}

pub fn build_generator(chars: &Characteristics, n: usize, exec: Execution) -> Result<Generator, RateError> {
    let engine = RateEngine::<f64>::new(chars, n, exec)?;
    Generator::from_engine(&engine, n, exec)
}

impl Generator {
    pub fn from_engine(engine: &RateEngine<f64>, n: usize, exec: Execution) -> Result<Self, RateError> {
        check_size(n)?;
        let states = enumerate_partitions(n)?;
        let ranker = LexRanker::new(n);
        let rows = exec.map_indexed(states.len(), |i| {
            engine.transition_rates(&states[i]).map(|row| {
                row.into_iter()
                    .map(|(p, r)| (ranker.rank(&p), r))
                    .collect::<Vec<_>>()
            })
        });
        let mut row_ptr = Vec::with_capacity(states.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut exit = Vec::with_capacity(states.len());
        row_ptr.push(0);
        for row in rows {
            let row = row?;
            exit.push(row.iter().map(|(_, r)| r).sum());
            for (j, r) in row {
                cols.push(j);
                vals.push(r);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            n,
            states,
            row_ptr,
            cols,
            vals,
            exit,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Partition] {
        &self.states
    }

    pub fn index_of(&self, pi: &Partition) -> Option<usize> {
        (pi.n() == self.n).then(|| LexRanker::new(self.n).rank(pi))
    }

    /// Off-diagonal entries of row `i`: target indices (ascending) and rates.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// `q(i) = Σ_{j≠i} q(i, j)`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    pub fn nnz_off_diagonal(&self) -> usize {
        self.cols.len()
    }

    /// `q(i, j)`, with the diagonal equal to `-q(i)`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return -self.exit[i];
        }
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.rate(i, j)).collect())
            .collect()
    }

    /// Row vector times generator, `x G`.
    pub fn left_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().zip(&self.exit).map(|(xi, q)| -xi * q).collect();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &r) in cols.iter().zip(vals) {
                out[j] += xi * r;
            }
        }
        out
    }

    /// Sparse triplets `i j rate`, one per line, diagonal included.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.len() {
            let (cols, vals) = self.row(i);
            let mut wrote_diag = false;
            for (&j, &r) in cols.iter().zip(vals) {
                if !wrote_diag && j > i {
                    writeln!(w, "{i} {i} {:e}", -self.exit[i])?;
                    wrote_diag = true;
                }
                writeln!(w, "{i} {j} {r:e}")?;
            }
            if !wrote_diag {
                writeln!(w, "{i} {i} {:e}", -self.exit[i])?;
            }
        }
        Ok(())
    }

    /// `index partition` per line.
    pub fn write_states<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, p) in self.states.iter().enumerate() {
            writeln!(w, "{i} {p}")?;
        }
        Ok(())
    }
}

/// Agreement of the level-`n` rates, lumped onto `[m]`, with the level-`m`
/// rates, over every source state of `P_n`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelCompatibility {
    pub n: usize,
    pub m: usize,
    /// Number of (source, target) pairs compared.
    pub identities: usize,
    pub max_abs_gap: f64,
    /// Pairs whose rates differ at all in `S`.
    pub mismatches: usize,
}

/// Checks `Σ_{η: η|[m] = π'} q_n(ξ, η) = q_m(ξ|[m], π')` for all
/// `1 ≤ m < n ≤ engine.max_n()` and every `π' ≠ ξ|[m]`.
pub fn compatibility_gaps<S: RateScalar>(engine: &RateEngine<S>) -> Result<Vec<LevelCompatibility>, RateError> {
    let top = engine.max_n();
    let mut rows: Vec<HashMap<Partition, HashMap<Partition, S>>> = vec![HashMap::new()];
    for n in 1..=top {
        let mut level = HashMap::new();
        for p in enumerate_partitions(n)? {
            let row = engine.transition_rates(&p)?.into_iter().collect();
            level.insert(p, row);
        }
        rows.push(level);
    }
    let mut out = Vec::new();
    for n in 2..=top {
        for m in 1..n {
            let targets = enumerate_partitions(m)?;
            let mut report = LevelCompatibility {
                n,
                m,
                identities: 0,
                max_abs_gap: 0.0,
                mismatches: 0,
            };
            for (xi, row) in &rows[n] {
                let pi = xi.restrict(m)?;
                let mut lumped: HashMap<Partition, S> = HashMap::new();
                for (eta, r) in row {
                    let target = eta.restrict(m)?;
                    if target != pi {
                        let slot = lumped.entry(target).or_insert_with(S::zero);
                        *slot = slot.clone() + r.clone();
                    }
                }
                for target in &targets {
                    if *target == pi {
                        continue;
                    }
                    let want = rows[m][&pi].get(target).cloned().unwrap_or_else(S::zero);
                    let got = lumped.remove(target).unwrap_or_else(S::zero);
                    if got != want {
                        report.mismatches += 1;
                        report.max_abs_gap = report.max_abs_gap.max((got - want).to_f64().abs());
                    }
                    report.identities += 1;
                }
            }
            out.push(report);
        }
    }
    Ok(out)
}
