//! Deterministic reductions.
//!
//! All sums over modes go through [`pairwise_sum`], whose association order
//! depends only on the length of the input. Parallel callers collect their
//! terms into a buffer first and then reduce, so results do not depend on the
//! thread count.

const BLOCK: usize = 32;

/// Pairwise (cascade) summation with a fixed split at the midpoint.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over an iterator, materialized first.
pub fn pairwise_map<I, F>(items: I, f: F) -> f64
where
    I: IntoIterator,
    F: FnMut(I::Item) -> f64,
{
    let buf: Vec<f64> = items.into_iter().map(f).collect();
    pairwise_sum(&buf)
}
