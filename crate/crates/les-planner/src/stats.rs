//! Small statistics toolbox for the benchmark harness: medians, sample
//! standard deviation and a one-sided rank-sum test.

use statrs::distribution::{ContinuousCDF, Normal};

/// Median of the values (mean of the middle pair for even counts).
/// Infinite values participate through their ordering.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Result of the one-sided Mann-Whitney rank-sum test.
#[derive(Clone, Copy, Debug)]
pub struct RankSumTest {
    /// U statistic of the first sample.
    pub u: f64,
    /// Normal-approximation z value (tie-corrected, continuity-corrected).
    pub z: f64,
    /// One-sided p-value for "first sample stochastically smaller".
    pub p_less: f64,
}

/// One-sided Mann-Whitney U test of `a` being stochastically smaller than
/// `b`, using the normal approximation with tie correction and continuity
/// correction. Adequate for the benchmark's 30-per-group samples.
pub fn rank_sum_less(a: &[f64], b: &[f64]) -> RankSumTest {
    assert!(!a.is_empty() && !b.is_empty(), "rank test needs data");
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    // midranks over tie groups, accumulating the tie correction term
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let count = (j - i) as f64;
        let midrank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1..=j
        rank_sum_a += midrank * pooled[i..j].iter().filter(|(_, is_a)| *is_a).count() as f64;
        tie_term += count * count * count - count;
        i = j;
    }

    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mean_u = n1 * n2 / 2.0;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // all observations identical: no evidence either way
        return RankSumTest {
            u,
            z: 0.0,
            p_less: 0.5,
        };
    }
    let z = (u - mean_u + 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    RankSumTest {
        u,
        z,
        p_less: normal.cdf(z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_std_basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
        assert_eq!(sample_std(&[5.0]), 0.0);
        // hand-computed: values 2, 4, 4, 4, 5, 5, 7, 9 have sample std 2
        let vals = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((sample_std(&vals) - 2.138089935299395).abs() < 1e-12);
        assert_eq!(mean(&vals), 5.0);
    }

    #[test]
    fn median_tolerates_infinities() {
        assert_eq!(median(&[1.0, f64::INFINITY, 2.0]), 2.0);
        assert_eq!(median(&[f64::INFINITY, f64::INFINITY, 2.0]), f64::INFINITY);
    }

    // Expected U and p values below were frozen from an independent
    // reference implementation of the asymptotic one-sided test with
    // continuity and tie corrections.
    #[test]
    fn rank_sum_matches_reference_without_ties() {
        let a = [3.1, 2.7, 3.9, 2.2, 3.0, 2.8];
        let b = [3.8, 4.1, 3.5, 4.4, 3.2, 4.0];
        let t = rank_sum_less(&a, &b);
        assert_eq!(t.u, 3.0);
        assert!((t.p_less - 0.010120285288538741).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_matches_reference_with_ties() {
        let a = [1.0, 2.0, 2.0, 3.0];
        let b = [2.0, 3.0, 3.0, 4.0];
        let t = rank_sum_less(&a, &b);
        assert_eq!(t.u, 3.0);
        assert!((t.p_less - 0.08601685446091145).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_reversed_direction_is_insignificant() {
        let a = [5.0, 6.0, 7.0];
        let b = [1.0, 2.0, 3.0];
        let t = rank_sum_less(&a, &b);
        assert_eq!(t.u, 9.0);
        assert!((t.p_less - 0.9854518341293739).abs() < 1e-12);
    }

    #[test]
    fn rank_sum_matches_reference_on_thirty_per_group() {
        let a = [
            0.12573, -0.132105, 0.640423, 0.1049, -0.535669, 0.361595, 1.304, 0.947081,
            -0.703735, -1.265421, -0.623274, 0.041326, -2.325031, -0.218792, -1.245911,
            -0.732267, -0.544259, -0.3163, 0.411631, 1.042513, -0.128535, 1.366463, -0.665195,
            0.35151, 0.90347, 0.094012, -0.743499, -0.921725, -0.457726, 0.220195,
        ];
        let b = [
            -0.209618, 0.590824, 0.640775, 1.340846, 1.014659, 1.155373, 0.146171, 0.670386,
            1.583975, 2.293431, -0.459066, 2.313924, 2.145875, 1.581311, 1.064456, 0.486077,
            2.258021, 2.760258, 2.601635, 2.115104, 1.15738, -0.408319, 0.795546, 1.456475,
            -0.488361, 1.195122, 1.229864, 1.496043, -0.384118, 0.138297,
        ];
        let t = rank_sum_less(&a, &b);
        assert_eq!(t.u, 151.0);
        assert!((t.p_less - 5.09384467621354e-6).abs() < 1e-16);
    }

    #[test]
    fn identical_samples_are_inconclusive() {
        let a = [2.0, 2.0, 2.0];
        let t = rank_sum_less(&a, &a);
        assert_eq!(t.p_less, 0.5);
    }
}
