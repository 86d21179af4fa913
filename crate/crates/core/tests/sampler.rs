//! Goodness of fit of the truncated power-law sampler against the exact pmf.

use collabnet::fit::TruncatedPowerLaw;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact pmf on `k_min..=cut` by direct summation; mass beyond `cut` is
/// below 1e-12 for the parameters used here.
fn pmf(law: &TruncatedPowerLaw, cut: u64) -> Vec<f64> {
    let w: Vec<f64> = (law.k_min()..=cut).map(|k| law.weight(k)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Pearson statistic over `k_min..=last` plus one tail cell; returns the
/// upper-tail p-value.
fn chi_square_p(law: &TruncatedPowerLaw, draws: &[u64], last: u64) -> f64 {
    let p = pmf(law, 200_000);
    let n = draws.len() as f64;
    let cells = (last - law.k_min() + 1) as usize;
    let mut observed = vec![0u64; cells + 1];
    for &k in draws {
        assert!(k >= law.k_min());
        let c = ((k - law.k_min()) as usize).min(cells);
        observed[c] += 1;
    }
    let mut expected: Vec<f64> = p[..cells].to_vec();
    expected.push(1.0 - expected.iter().sum::<f64>());
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - n * e).powi(2) / (n * e))
        .sum();
    let dist = ChiSquared::new(cells as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn chi_square_at_degree_parameters() {
    for (beta, seed) in [(85.4, 11), (49.5, 12)] {
        let law = TruncatedPowerLaw::new(1.53, beta, 1).unwrap();
        let draws = law.sample_n(1_000_000, seed);
        let p = chi_square_p(&law, &draws, 50);
        assert!(p > 0.001, "beta {beta}: p = {p}");
    }
}

#[test]
fn chi_square_with_subunit_exponent() {
    let law = TruncatedPowerLaw::new(0.7, 20.0, 1).unwrap();
    let draws = law.sample_n(1_000_000, 5);
    let p = chi_square_p(&law, &draws, 50);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn chi_square_with_raised_floor() {
    let law = TruncatedPowerLaw::new(2.2, 300.0, 4).unwrap();
    let draws = law.sample_n(1_000_000, 6);
    let p = chi_square_p(&law, &draws, 50);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn mean_matches_direct_summation() {
    let law = TruncatedPowerLaw::new(1.53, 85.4, 1).unwrap();
    let p = pmf(&law, 200_000);
    let exact: f64 = p.iter().enumerate().map(|(i, q)| (i as f64 + 1.0) * q).sum();
    let draws = law.sample_n(1_000_000, 7);
    let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
    assert!((mean / exact - 1.0).abs() < 0.02, "mean {mean} vs {exact}");
}
