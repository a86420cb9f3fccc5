//! Sample grids and schedules.

/// `n` points from `lo` to `hi` (inclusive), evenly spaced in `log`.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1, "bad geometric grid ({lo}, {hi}, {n})");
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `base^k` for `k` in `ks`.
pub fn powers(base: f64, ks: impl IntoIterator<Item = i32>) -> Vec<f64> {
    ks.into_iter().map(|k| base.powi(k)).collect()
}
