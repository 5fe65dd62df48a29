//! Small numeric helpers shared across modules.

/// Neumaier-compensated summation. Keeps long record sums exact to a few ulps
/// regardless of length, which the dataset-to-distribution identities rely on.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        let values = vec![1.0, 1e-16, -1.0];
        assert_eq!(compensated_sum(values), 1e-16);
    }

    #[test]
    fn compensated_sum_handles_long_streams() {
        let n = 100_000;
        let sum = compensated_sum((0..n).map(|_| 0.1));
        assert!((sum - 0.1 * n as f64).abs() < 1e-9);
    }
}
