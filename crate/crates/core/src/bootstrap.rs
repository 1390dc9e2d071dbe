//! Two-level overlapping block bootstrap for weakly dependent series.

use rand::Rng;

use crate::rng::Stream;

/// Series shorter than this are resampled iid.
pub const MIN_BLOCK_LEN: usize = 8;

/// Block sizes for a series of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlan {
    pub n: usize,
    /// First-level block length `⌊n^{1/3}⌋`.
    pub l: usize,
    /// Number of overlapping first-level blocks, `n + l − 1`.
    pub n_prime: usize,
    /// First-level blocks drawn, `⌊n/l⌋`.
    pub a: usize,
    /// Second-level block length `⌊l/2⌋`.
    pub k: usize,
    /// Second-level blocks per first-level block, `l − k + 1`.
    pub l_prime: usize,
    /// Second-level blocks drawn, `⌊n/k⌋`.
    pub c: usize,
}

impl BlockPlan {
    /// `None` when `n` is too short for blocks of length two.
    pub fn new(n: usize) -> Option<Self> {
        if n < MIN_BLOCK_LEN {
            return None;
        }
        let l = icbrt(n);
        let k = l / 2;
        Some(Self { n, l, n_prime: n + l - 1, a: n / l, k, l_prime: l - k + 1, c: n / k })
    }
}

fn icbrt(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r > 0 && r.pow(3) > n {
        r -= 1;
    }
    while (r + 1).pow(3) <= n {
        r += 1;
    }
    r
}

/// Resamples a residual series. Implementations must return a series of the
/// same length whose values all come from the input.
pub trait Resample: Sync {
    fn resample(&self, eps: &[f64], rng: &mut Stream) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleBlock;

impl Resample for DoubleBlock {
    fn resample(&self, eps: &[f64], rng: &mut Stream) -> Vec<f64> {
        double_block_bootstrap(eps, rng)
    }
}

/// Returns its input unchanged. Useful for isolating the rest of a pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Resample for Identity {
    fn resample(&self, eps: &[f64], _rng: &mut Stream) -> Vec<f64> {
        eps.to_vec()
    }
}

pub fn double_block_bootstrap(eps: &[f64], rng: &mut Stream) -> Vec<f64> {
    let n = eps.len();
    let Some(plan) = BlockPlan::new(n) else {
        return (0..n).map(|_| eps[rng.random_range(0..n)]).collect();
    };

    // First level: blocks starting past the end wrap around.
    let mut first = Vec::with_capacity(plan.a * plan.l);
    for _ in 0..plan.a {
        let start = rng.random_range(0..plan.n_prime);
        first.extend((0..plan.l).map(|i| eps[(start + i) % n]));
    }

    // Second level: sub-blocks pooled over every first-level segment.
    let pool = plan.a * plan.l_prime;
    let mut draw = |out: &mut Vec<f64>| {
        let pick = rng.random_range(0..pool);
        let (seg, off) = (pick / plan.l_prime, pick % plan.l_prime);
        let start = seg * plan.l + off;
        out.extend_from_slice(&first[start..start + plan.k]);
    };
    let mut out = Vec::with_capacity(plan.c * plan.k + plan.k);
    for _ in 0..plan.c {
        draw(&mut out);
    }
    if out.len() < n {
        draw(&mut out);
    }
    out.truncate(n);
    out
}
