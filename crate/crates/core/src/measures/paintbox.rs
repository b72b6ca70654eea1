use rand::Rng;

use super::{MeasureError, RankedMasses};
use crate::partition::Partition;
use crate::scalar::RateScalar;

/// Colors `n` items independently: `Some(k)` with probability `x_k`, `None`
/// (private dust) with probability `x_0`.
pub fn paint<R: Rng + ?Sized>(x: &RankedMasses, n: usize, rng: &mut R) -> Vec<Option<usize>> {
    (0..n).map(|_| paint_one(x, rng)).collect()
}

pub(crate) fn paint_one<R: Rng + ?Sized>(x: &RankedMasses, rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &m) in x.masses().iter().enumerate() {
        acc += m;
        if u < acc {
            return Some(k);
        }
    }
    // Absorb rounding on proper vectors into the last color.
    if x.is_proper() {
        x.masses().len().checked_sub(1)
    } else {
        None
    }
}

/// Partition of `[n]` induced by a coloring; uncolored items are singletons.
pub(crate) fn partition_from_colors(colors: &[Option<usize>]) -> Partition {
    let offset = colors.iter().flatten().max().map_or(0, |&k| k + 1);
    let labels: Vec<usize> = colors
        .iter()
        .enumerate()
        .map(|(i, c)| c.unwrap_or(offset + i))
        .collect();
    Partition::from_labels(&labels).expect("nonempty coloring")
}

/// One draw of the `x`-paintbox restricted to `[n]`.
pub fn paintbox_sample<R: Rng + ?Sized>(x: &RankedMasses, n: usize, rng: &mut R) -> Partition {
    partition_from_colors(&paint(x, n, rng))
}

/// `μ_x(π|[n] = pi)`, exact up to the arithmetic of `S`.
///
/// Blocks of size at least two need pairwise distinct colors. Singleton
/// blocks take either a private color or dust. The sum runs over colors with
/// state (set of placed large blocks, number of colored singletons).
pub fn paintbox_restriction_prob<S: RateScalar>(x: &RankedMasses, pi: &Partition) -> S {
    let sizes = pi.block_sizes();
    let big: Vec<u32> = sizes.iter().filter(|&&s| s >= 2).map(|&s| s as u32).collect();
    let singles = sizes.len() - big.len();
    if big.len() > x.len() {
        return S::zero();
    }
    assert!(big.len() < usize::BITS as usize, "too many large blocks");
    let full = (1usize << big.len()) - 1;
    let width = singles + 1;
    // dp[mask * width + c]
    let mut dp = vec![S::zero(); (full + 1) * width];
    dp[0] = S::one();
    for &xk in x.masses() {
        let xk = S::from_f64(xk);
        let powers: Vec<S> = big.iter().map(|&s| xk.powu(s)).collect();
        let mut next = dp.clone();
        for mask in 0..=full {
            for c in 0..width {
                let cur = &dp[mask * width + c];
                if cur.is_zero() {
                    continue;
                }
                for (b, p) in powers.iter().enumerate() {
                    if mask & (1 << b) == 0 {
                        let slot = &mut next[(mask | (1 << b)) * width + c];
                        *slot = slot.clone() + cur.clone() * p.clone();
                    }
                }
                if c < singles {
                    let ways = S::from_u64((singles - c) as u64);
                    let slot = &mut next[mask * width + c + 1];
                    *slot = slot.clone() + cur.clone() * xk.clone() * ways;
                }
            }
        }
        dp = next;
    }
    let x0: S = x.dust_as();
    (0..width).fold(S::zero(), |acc, c| {
        let term = dp[full * width + c].clone();
        if term.is_zero() {
            acc
        } else {
            acc + term * x0.powu((singles - c) as u32)
        }
    })
}

/// `μ_x(π|[m] = 0_m)`: all `m` items land in different blocks.
/// Equals `Σ_k C(m,k) k! e_k(x) x_0^{m-k}` with `e_k` the elementary
/// symmetric polynomials of the masses.
pub fn prob_all_distinct<S: RateScalar>(x: &RankedMasses, m: usize) -> S {
    let mut e = vec![S::zero(); m + 1];
    e[0] = S::one();
    for (used, &xk) in x.masses().iter().enumerate() {
        let xk = S::from_f64(xk);
        for k in (1..=m.min(used + 1)).rev() {
            e[k] = e[k].clone() + e[k - 1].clone() * xk.clone();
        }
    }
    let x0: S = x.dust_as();
    // falling[k] = m! / (m-k)! = C(m,k) k!
    let mut falling = S::one();
    let mut total = S::zero();
    for (k, ek) in e.iter().enumerate() {
        if k > 0 {
            falling = falling * S::from_u64((m - k + 1) as u64);
        }
        if !ek.is_zero() {
            total = total + falling.clone() * ek.clone() * x0.powu((m - k) as u32);
        }
    }
    total
}

/// `μ_x(π|[m] = 1_m)`.
pub fn prob_single_color<S: RateScalar>(x: &RankedMasses, m: usize) -> S {
    if m <= 1 {
        return S::one();
    }
    x.masses()
        .iter()
        .fold(S::zero(), |acc, &xk| acc + S::from_f64(xk).powu(m as u32))
}

/// Number of erosion atoms `ε_i` whose restriction to `[ℓ]` is `pi`.
pub fn erosion_restriction_mass(pi: &Partition) -> Result<u64, MeasureError> {
    if pi.is_one_block() {
        return Err(MeasureError::NeutralElement(pi.to_string()));
    }
    if pi.block_count() != 2 {
        return Ok(0);
    }
    Ok(pi.blocks().iter().filter(|b| b.len() == 1).count() as u64)
}

/// Number (0 or 1) of Kingman atoms `ε_{i,j}` whose restriction to `[m]` is
/// `pi`.
pub fn kingman_restriction_mass(pi: &Partition) -> Result<u64, MeasureError> {
    if pi.is_singletons() {
        return Err(MeasureError::NeutralElement(pi.to_string()));
    }
    let pairs = pi.blocks().iter().filter(|b| b.len() == 2).count();
    let larger = pi.blocks().iter().filter(|b| b.len() > 2).count();
    Ok(u64::from(pairs == 1 && larger == 0))
}
