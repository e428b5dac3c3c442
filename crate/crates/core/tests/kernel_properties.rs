use fbm_delay::kernel::{gh_transform, truncation_horizon, SampledFunction};
use fbm_delay::{hurst_constant, HurstParameter};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_function(seed: u64, cells: usize) -> SampledFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampledFunction::new(0.0, 1.0 / cells as f64, (0..cells).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn l2(values: &[f64], step: f64) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * step).sqrt()
}

proptest! {
    #[test]
    fn transform_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, h in 0.5f64..0.99, tau in 0.0f64..1.0) {
        let hp = hurst_constant(h).unwrap();
        let g1 = random_function(seed, 40);
        let g2 = random_function(seed + 7919, 40);
        let mix = SampledFunction::new(
            0.0,
            g1.step,
            g1.values.iter().zip(&g2.values).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let lhs = gh_transform(tau, 0.0, 1.0, &mix, &hp).unwrap();
        let rhs = a * gh_transform(tau, 0.0, 1.0, &g1, &hp).unwrap() + b * gh_transform(tau, 0.0, 1.0, &g2, &hp).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
    }

    #[test]
    fn halving_the_tolerance_lengthens_the_warmup(tol in 1e-8f64..1e-2, span in 0.1f64..4.0, h in 0.51f64..0.95) {
        let hp = HurstParameter::new(h).unwrap();
        let l1 = truncation_horizon(tol, span, &hp).unwrap();
        let l2 = truncation_horizon(tol / 2.0, span, &hp).unwrap();
        prop_assert!(l2 > l1);
    }
}

#[test]
fn brownian_warmup_is_zero() {
    assert_eq!(truncation_horizon(1e-6, 1.0, &HurstParameter::BROWNIAN).unwrap(), 0.0);
}

/// ‖G_H g‖ ≤ c_H ‖g‖ on L²(0,1) by Young's inequality, since
/// α ∫_0^1 u^{α-1} du = 1; the constant max c_H < 1.1 serves every H.
#[test]
fn transform_is_bounded_on_l2_uniformly_in_h() {
    let cells = 256;
    let mut worst: f64 = 0.0;
    for h in [0.51, 0.6, 0.75, 0.9] {
        let hp = hurst_constant(h).unwrap();
        for seed in 0..20 {
            let g = random_function(seed, cells);
            let taus: Vec<f64> = (0..cells)
                .map(|i| gh_transform((i as f64 + 0.5) * g.step, 0.0, 1.0, &g, &hp).unwrap())
                .collect();
            worst = worst.max(l2(&taus, g.step) / l2(&g.values, g.step));
        }
    }
    assert!(worst <= 1.1, "ratio {worst}");
}

#[test]
fn brownian_transform_is_the_identity() {
    let g = random_function(3, 50);
    for i in 0..50 {
        let tau = (i as f64 + 0.25) * g.step;
        assert_eq!(gh_transform(tau, 0.0, 1.0, &g, &HurstParameter::BROWNIAN).unwrap(), g.values[i]);
    }
}
