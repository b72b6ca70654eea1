//! Partitions of `[n] = {1, ..., n}` and their algebra.
//!
//! A [`Partition`] is stored canonically: every block is sorted ascending and
//! blocks are ordered by their least element, so the block containing `1` is
//! always `blocks()[0]`. Elements are 1-based, matching the usual notation for
//! `[n]`; block indices passed to [`Partition::frag`] are 0-based.
//!
//! Enumeration of `P_n` follows lexicographic order of restricted-growth
//! strings, and [`LexRanker`] maps a partition to its position in that order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `n` for which [`enumerate_partitions`] will materialize `P_n`
/// (`Bell(12) = 4_213_597`).
pub const MAX_ENUMERATION_N: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("the ground set [n] must be nonempty")]
    EmptyGroundSet,
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("element {element} is outside [1, {n}]")]
    OutOfRange { element: usize, n: usize },
    #[error("element {0} appears in more than one block")]
    Overlap(usize),
    #[error("element {0} is not covered by any block")]
    Gap(usize),
    #[error("dimension mismatch: expected a partition of [{expected}], got one of [{found}]")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block index {index} out of range for a partition with {blocks} blocks")]
    BlockOutOfRange { index: usize, blocks: usize },
    #[error("restriction size {m} out of range [1, {n}]")]
    RestrictionOutOfRange { m: usize, n: usize },
    #[error("n = {n} exceeds the enumeration bound {max} (Bell(n) = {bell})")]
    TooLarge { n: usize, max: usize, bell: u128 },
    #[error("invalid restricted-growth string: {0}")]
    InvalidCode(String),
    #[error("not a permutation of [1, {0}]")]
    InvalidPermutation(usize),
    #[error("cannot parse partition: {0}")]
    Parse(String),
}

/// A partition of `[n]` in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes a raw collection of blocks covering `[n]`.
    pub fn new(n: usize, raw: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut seen = vec![false; n + 1];
        let mut blocks = Vec::with_capacity(raw.len());
        for (i, mut block) in raw.into_iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock(i));
            }
            for &e in &block {
                if e == 0 || e > n {
                    return Err(PartitionError::OutOfRange { element: e, n });
                }
                if seen[e] {
                    return Err(PartitionError::Overlap(e));
                }
                seen[e] = true;
            }
            block.sort_unstable();
            blocks.push(block);
        }
        if let Some(e) = (1..=n).find(|&e| !seen[e]) {
            return Err(PartitionError::Gap(e));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    /// Builds a partition from arbitrary labels: `labels[i]` names the block of
    /// element `i + 1`. Any labelling is accepted; the result is canonical.
    pub fn from_labels(labels: &[usize]) -> Result<Self, PartitionError> {
        if labels.is_empty() {
            return Err(PartitionError::EmptyGroundSet);
        }
        Ok(Self::from_labels_unchecked(labels))
    }

    fn from_labels_unchecked(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            let slot = match map.iter().find(|(l, _)| *l == label) {
                Some(&(_, s)) => s,
                None => {
                    map.push((label, blocks.len()));
                    blocks.push(Vec::new());
                    blocks.len() - 1
                }
            };
            blocks[slot].push(i + 1);
        }
        Self {
            n: labels.len(),
            blocks,
        }
    }

    /// `0_n`, the partition into singletons.
    pub fn singletons(n: usize) -> Self {
        assert!(n > 0, "empty ground set");
        Self {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    /// `1_n`, the partition with a single block.
    pub fn one_block(n: usize) -> Self {
        assert!(n > 0, "empty ground set");
        Self {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of nonempty blocks, `#π`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.n
    }

    pub fn is_one_block(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Number of singleton blocks.
    pub fn singleton_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.len() == 1).count()
    }

    /// Restricted-growth labels: entry `i` is the 0-based block of element `i + 1`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (k, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e - 1] = k;
            }
        }
        labels
    }

    /// Index of the block containing element `e` (1-based element).
    pub fn block_of(&self, e: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&e).is_ok())
    }

    pub fn code(&self) -> RestrictedGrowth {
        RestrictedGrowth(self.labels())
    }

    /// `π_{|[m]}`.
    pub fn restrict(&self, m: usize) -> Result<Self, PartitionError> {
        if m == 0 || m > self.n {
            return Err(PartitionError::RestrictionOutOfRange { m, n: self.n });
        }
        let blocks = self
            .blocks
            .iter()
            .filter_map(|b| {
                let cut: Vec<usize> = b.iter().copied().take_while(|&e| e <= m).collect();
                (!cut.is_empty()).then_some(cut)
            })
            .collect();
        // Least elements keep their relative order, so no re-sorting is needed.
        Ok(Self { n: m, blocks })
    }

    /// `Coag(π, π')`: merges the blocks of `self` grouped by the blocks of `by`,
    /// which must be a partition of `[#self]`.
    pub fn coag(&self, by: &Partition) -> Result<Self, PartitionError> {
        if by.n != self.block_count() {
            return Err(PartitionError::DimensionMismatch {
                expected: self.block_count(),
                found: by.n,
            });
        }
        let blocks = by
            .blocks
            .iter()
            .map(|group| {
                let mut merged: Vec<usize> = group
                    .iter()
                    .flat_map(|&i| self.blocks[i - 1].iter().copied())
                    .collect();
                merged.sort_unstable();
                merged
            })
            .collect();
        Ok(Self { n: self.n, blocks })
    }

    /// `Frag(π, π', k)`: splits block `index` (0-based) according to `by`, a
    /// partition of `[|B_index|]` transported through the increasing bijection
    /// onto the block.
    pub fn frag(&self, by: &Partition, index: usize) -> Result<Self, PartitionError> {
        let target = self
            .blocks
            .get(index)
            .ok_or(PartitionError::BlockOutOfRange {
                index,
                blocks: self.block_count(),
            })?;
        if by.n != target.len() {
            return Err(PartitionError::DimensionMismatch {
                expected: target.len(),
                found: by.n,
            });
        }
        let mut blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != index)
            .map(|(_, b)| b.clone())
            .collect();
        for sub in &by.blocks {
            blocks.push(sub.iter().map(|&j| target[j - 1]).collect());
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n: self.n, blocks })
    }

    /// `σ(π)`, defined by `i ~ j` in `σ(π)` iff `σ(i) ~ σ(j)` in `π`.
    pub fn permute(&self, sigma: &Permutation) -> Result<Self, PartitionError> {
        if sigma.n() != self.n {
            return Err(PartitionError::DimensionMismatch {
                expected: self.n,
                found: sigma.n(),
            });
        }
        let labels = self.labels();
        let relabelled: Vec<usize> = (1..=self.n).map(|i| labels[sigma.apply(i) - 1]).collect();
        Ok(Self::from_labels_unchecked(&relabelled))
    }

    /// True when every block of `self` lies inside some block of `coarser`.
    pub fn is_finer_than(&self, coarser: &Partition) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let labels = coarser.labels();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&e| labels[e - 1] == labels[b[0] - 1]))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            f.write_str("{")?;
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition({self})")
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    /// Parses the block form `{1,3}{2}{4}`; `n` is the largest element.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut blocks = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('{')
                .ok_or_else(|| PartitionError::Parse(format!("expected '{{' in {s:?}")))?;
            let close = body
                .find('}')
                .ok_or_else(|| PartitionError::Parse(format!("unterminated block in {s:?}")))?;
            let block = body[..close]
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| PartitionError::Parse(format!("bad element {t:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            blocks.push(block);
            rest = body[close + 1..].trim_start();
        }
        let n = blocks.iter().flatten().copied().max().unwrap_or(0);
        Partition::new(n, blocks)
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Restricted-growth string `a` with `a_1 = 0` and `a_{k+1} <= 1 + max(a_1..a_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RestrictedGrowth(Vec<usize>);

impl RestrictedGrowth {
    pub fn new(code: Vec<usize>) -> Result<Self, PartitionError> {
        if code.is_empty() {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut next = 0;
        for (i, &a) in code.iter().enumerate() {
            if a > next {
                return Err(PartitionError::InvalidCode(format!(
                    "entry {a} at position {} exceeds {next}",
                    i + 1
                )));
            }
            if a == next {
                next += 1;
            }
        }
        Ok(Self(code))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn to_partition(&self) -> Partition {
        Partition::from_labels_unchecked(&self.0)
    }
}

impl fmt::Display for RestrictedGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for RestrictedGrowth {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| PartitionError::Parse(format!("bad code entry {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(code)
    }
}

/// A bijection of `[n]`, stored as 1-based images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self, PartitionError> {
        let n = image.len();
        if n == 0 {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut seen = vec![false; n + 1];
        for &x in &image {
            if x == 0 || x > n || seen[x] {
                return Err(PartitionError::InvalidPermutation(n));
            }
            seen[x] = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (1..=n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    /// `σ(i)` for a 1-based element.
    pub fn apply(&self, i: usize) -> usize {
        self.image[i - 1]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &x) in self.image.iter().enumerate() {
            inv[x - 1] = i + 1;
        }
        Self { image: inv }
    }

    /// All permutations of `[n]` in lexicographic order of their images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=n).collect();
        loop {
            out.push(Self {
                image: current.clone(),
            });
            // next lexicographic permutation
            let Some(i) = (1..current.len()).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..current.len())
                .rev()
                .find(|&j| current[j] > current[i - 1])
                .expect("successor exists");
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }
}

/// Bell number `B(n)`, the size of `P_n`. Exact for `n <= 45`.
pub fn bell(n: usize) -> u128 {
    // Bell triangle
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("nonempty row"));
        for &x in &row {
            let last = *next.last().expect("nonempty row");
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// Iterator over the restricted-growth strings of length `n` in
/// lexicographic order.
pub struct RgsIter {
    current: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl RgsIter {
    pub fn new(n: usize) -> Self {
        Self {
            current: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }
}

impl Iterator for RgsIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let n = self.current.len();
        // prefix_max[i] = max(a_0..a_{i-1}) for i >= 1
        match (1..n)
            .rev()
            .find(|&i| self.current[i] <= self.prefix_max[i])
        {
            None => self.done = true,
            Some(i) => {
                self.current[i] += 1;
                let running = self.prefix_max[i].max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = running;
                }
            }
        }
        Some(out)
    }
}

/// `P_n` in lexicographic restricted-growth order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>, PartitionError> {
    if n == 0 {
        return Err(PartitionError::EmptyGroundSet);
    }
    if n > MAX_ENUMERATION_N {
        return Err(PartitionError::TooLarge {
            n,
            max: MAX_ENUMERATION_N,
            bell: bell(n),
        });
    }
    Ok(RgsIter::new(n)
        .map(|code| Partition::from_labels_unchecked(&code))
        .collect())
}

/// Position of a restricted-growth string in lexicographic order.
///
/// `completions[r][m]` counts the ways to extend a prefix that already uses
/// `m` labels by `r` more entries.
#[derive(Debug, Clone)]
pub struct LexRanker {
    n: usize,
    completions: Vec<Vec<u64>>,
}

impl LexRanker {
    pub fn new(n: usize) -> Self {
        assert!(n > 0 && n <= 25, "ranking supported for 1 <= n <= 25");
        let mut completions = vec![vec![0u64; n + 2]; n + 1];
        for m in 0..=n + 1 {
            completions[0][m] = 1;
        }
        for r in 1..=n {
            for m in 0..=n {
                completions[r][m] = m as u64 * completions[r - 1][m] + completions[r - 1][m + 1];
            }
        }
        Self { n, completions }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank of a valid restricted-growth string of length `n`.
    pub fn rank_code(&self, code: &[usize]) -> usize {
        debug_assert_eq!(code.len(), self.n);
        let mut rank = 0u64;
        let mut used = 1;
        for (i, &a) in code.iter().enumerate().skip(1) {
            let remaining = self.n - i - 1;
            // every smaller label keeps `used` labels in play
            rank += a as u64 * self.completions[remaining][used];
            if a == used {
                used += 1;
            }
        }
        rank as usize
    }

    pub fn rank(&self, pi: &Partition) -> usize {
        self.rank_code(&pi.labels())
    }

    pub fn unrank(&self, mut rank: usize) -> Partition {
        let mut code = vec![0; self.n];
        let mut used = 1;
        for i in 1..self.n {
            let remaining = self.n - i - 1;
            let block = self.completions[remaining][used] as usize;
            let a = (rank / block).min(used);
            rank -= a * block;
            code[i] = a;
            if a == used {
                used += 1;
            }
        }
        Partition::from_labels_unchecked(&code)
    }
}
