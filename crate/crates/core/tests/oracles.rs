use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use reserve_insure::normal;
use reserve_insure::quadrature::adaptive_simpson;
use reserve_insure::renewable::{RenewableModel, SlotGaussian};

fn one(mu: f64, sigma: f64) -> RenewableModel {
    RenewableModel::new(vec![SlotGaussian { mu, sigma }], 1e6).unwrap()
}

fn density(mu: f64, sigma: f64) -> impl Fn(f64) -> f64 {
    move |r| normal::pdf((r - mu) / sigma) / sigma
}

#[test]
fn shortfall_matches_quadrature_on_grid() {
    for &mu in &[5.0, 15.0, 30.0] {
        for &sigma in &[0.5, 2.0, 5.0] {
            let m = one(mu, sigma);
            let f = density(mu, sigma);
            for &c in &[0.0, mu - sigma, mu, mu + 2.0 * sigma, mu + 9.0 * sigma] {
                let lo = mu - 12.0 * sigma;
                let es = if c > lo {
                    adaptive_simpson(|r| (c - r) * f(r), lo, c, 1e-12)
                } else {
                    0.0
                };
                assert!((m.expected_shortfall(0, c) - es).abs() < 1e-8, "mu {mu} sigma {sigma} c {c}");
                for &cap in &[0.5, 3.0, 20.0] {
                    let want = adaptive_simpson(|r| (c - r).clamp(0.0, cap) * f(r), lo, c.max(lo), 1e-12);
                    let got = m.expected_capped_cost(0, c, cap, 1.0).unwrap();
                    assert!((got - want).abs() < 1e-8, "mu {mu} sigma {sigma} c {c} cap {cap}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn shortfall_matches_independent_sampling() {
    let (mu, sigma, c, cap) = (12.0, 3.0, 13.0, 2.5);
    let m = one(mu, sigma);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let n = 200_000;
    let (mut s1, mut s2, mut k1, mut k2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        // Box–Muller on an unrelated generator
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = mu + sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        let s = (c - r).max(0.0);
        let k = s.min(cap);
        s1 += s;
        s2 += s * s;
        k1 += k;
        k2 += k * k;
    }
    let nf = n as f64;
    let se = |a: f64, b: f64| ((b / nf - (a / nf).powi(2)) / nf).sqrt();
    assert!((s1 / nf - m.expected_shortfall(0, c)).abs() < 4.0 * se(s1, s2));
    let capped = m.expected_capped_shortfall(0, c, cap).unwrap();
    assert!((k1 / nf - capped).abs() < 4.0 * se(k1, k2));
}
