//! Deterministic parallel evaluation and summation.
//!
//! Per-pixel values are computed in parallel into a buffer ordered by pixel
//! index, then summed by a binary tree whose shape depends only on the input
//! length: ranges of at most [`LEAF`] elements are added left to right, larger
//! ranges split at `len / 2`. The tree is evaluated with `rayon::join`, so the
//! result is bit-identical for any worker count.

use rayon::prelude::*;

pub const LEAF: usize = 64;

pub fn tree_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    let (a, b) = rayon::join(|| tree_sum(lo), || tree_sum(hi));
    a + b
}

/// Arithmetic mean via [`tree_sum`]; 0 for an empty slice.
pub fn tree_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    tree_sum(values) / values.len() as f64
}

/// Evaluates `f(i)` for `i` in `0..n` in parallel, preserving index order.
pub fn par_map<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sums_are_sequential() {
        let v = [0.1, 0.2, 0.3];
        assert_eq!(tree_sum(&v), (0.0 + 0.1) + 0.2 + 0.3);
        assert_eq!(tree_mean(&[]), 0.0);
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let v: Vec<f64> = (0..10_007).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e-9 * i as f64).collect();
        let one = with_workers(Some(1), || tree_sum(&v));
        for w in [2, 3, 8] {
            assert_eq!(one.to_bits(), with_workers(Some(w), || tree_sum(&v)).to_bits());
        }
    }

    #[test]
    fn par_map_keeps_order() {
        let out: Result<Vec<usize>, ()> = with_workers(Some(4), || par_map(1000, |i| Ok(i * 2)));
        assert_eq!(out.unwrap(), (0..1000).map(|i| i * 2).collect::<Vec<_>>());
    }
}
