//! Pairwise floating-point summation.

const BLOCK: usize = 128;

/// Sums `values` by recursive halving, bounding rounding error by
/// O(log n) ulps instead of O(n) for a running sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        values.iter().fold(0.0, |acc, v| acc + v)
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}
