use rand::Rng;

use crate::rng::SimRng;

/// Block length `⌈N^{1/3}⌉` used by the circular block bootstraps.
pub(super) fn default_block_length(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).max(1)
}

/// Random block starts for one circular block resample of `n` points.
pub(super) fn block_starts(rng: &mut SimRng, n: usize, block: usize) -> Vec<usize> {
    (0..n.div_ceil(block))
        .map(|_| rng.random_range(0..n))
        .collect()
}

/// Indices of one circular block resample: blocks of `block` consecutive indices
/// (wrapping at `n`) from random starts, truncated to `n`.
pub fn circular_block_indices(rng: &mut SimRng, n: usize, block: usize) -> Vec<usize> {
    let block = block.clamp(1, n.max(1));
    let mut out = Vec::with_capacity(n);
    for s in block_starts(rng, n, block) {
        for j in 0..block {
            if out.len() == n {
                break;
            }
            out.push((s + j) % n);
        }
    }
    out
}

/// Empirical quantile with linear interpolation between order statistics.
pub(super) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
