//! Scenario builders shared by the integration and acceptance suites.

use amc_subsample::classifiers::gnb_fit;
use amc_subsample::sigstream::{generate_dataset, GenConfig, ModType, Splits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Held-out accuracy of naive Bayes on raw frames telling `a` from `b` at
/// 18 dB.
pub fn gnb_pair_accuracy(a: ModType, b: ModType, seed: u64, frames: usize) -> f64 {
    let cfg = GenConfig {
        snr_grid: vec![18],
        frames_per_class_per_snr: frames,
        seed,
        workers: 1,
        ..GenConfig::default()
    };
    let ds = generate_dataset(&cfg).unwrap();
    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.labels[i] == a || ds.labels[i] == b)
        .collect();
    let s = Splits::stratified(&ds, 0.25, 0.0, seed).unwrap();
    let pick = |idx: &[usize]| {
        let rows: Vec<usize> = idx.iter().copied().filter(|i| keep.contains(i)).collect();
        ds.batch(&rows)
    };
    let tr = pick(&s.train);
    let te = pick(&s.test);
    let model = gnb_fit(&tr.x, 2 * ds.d, &tr.labels).unwrap();
    model.accuracy(&te.x, &te.labels).unwrap()
}

/// Held-out accuracy of naive Bayes separating N(0,1) from N(3,1).
pub fn gnb_gaussian_pair_accuracy(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| {
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let z: f64 = rng.sample(StandardNormal);
            x.push(z + 3.0 * label as f64);
            y.push(label);
        }
        (x, y)
    };
    let (xt, yt) = draw(n);
    let (xe, ye) = draw(n);
    gnb_fit(&xt, 1, &yt).unwrap().accuracy(&xe, &ye).unwrap()
}

/// Phi(1.5) by Simpson integration of the standard normal density: the
/// Bayes accuracy for two unit-variance classes three apart.
pub fn two_gaussian_bayes_accuracy() -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (lo, hi, n) = (-12.0, 1.5, 20_000);
    let h = (hi - lo) / n as f64;
    let mut s = pdf(lo) + pdf(hi);
    for i in 1..n {
        s += pdf(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
