mod common;

use edgeplan::denoising::flip_rate;
use edgeplan::{build_attention_mask, pair_cost, perturb, MatchingOptions, ModelCapacity, NoiseConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn perturbed_copy_cost_bounded(seed in any::<u64>(), lambda in 0.0f64..0.6, gamma in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = ModelCapacity::new(5, 16).unwrap();
        let gt = common::grid_plan(&mut rng, 4, 12, cap);
        let cfg = NoiseConfig { lambda_geo: lambda, gamma_flip: gamma, seed, groups: 1 };
        let set = perturb(&gt, &cfg, 1.0, 1.0).unwrap();
        let pred = set.group_predictions(0).unwrap();
        let opts = MatchingOptions::default();
        for (r, (g, p)) in gt.rooms().iter().zip(pred.rooms()).enumerate() {
            let (cost, _) = pair_cost(g, p, &opts).unwrap();
            let flips = set.group_tokens(0).iter().filter(|t| t.origin.0 == r && t.flipped).count() as f64;
            // Rotation 0 already pays at most lambda/2 per coordinate.
            let bound = opts.lambda_cls * flips + g.valid_count() as f64 * 4.0 * (lambda / 2.0);
            prop_assert!(cost <= bound + 1e-12, "{cost} > {bound}");
        }
    }

    #[test]
    fn bounded_and_clamped(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = ModelCapacity::new(4, 12).unwrap();
        let gt = common::grid_plan(&mut rng, 4, 10, cap);
        let set = perturb(&gt, &NoiseConfig { lambda_geo: lambda, gamma_flip: 0.0, seed, groups: 2 }, 1.0, 1.0).unwrap();
        for t in set.tokens() {
            for d in t.displacement.iter().flatten() {
                prop_assert!(lambda == 0.0 && *d == 0.0 || d.abs() < lambda / 2.0);
            }
            prop_assert!(t.token.edge.p1.in_unit_square() && t.token.edge.p2.in_unit_square());
        }
    }

    #[test]
    fn mask_rules_hold(groups in 0usize..5, size in 0usize..9, latent in 0usize..33) {
        let mask = build_attention_mask(groups, size, latent);
        let p = groups * size;
        prop_assert_eq!(mask.size(), p + latent);
        for q in 0..mask.size() {
            for k in 0..mask.size() {
                let expected = match (q < p, k < p) {
                    (true, true) => q / size == k / size,
                    (false, false) => true,
                    _ => false,
                };
                prop_assert_eq!(mask.allowed(q, k), expected);
            }
        }
    }
}

#[test]
fn non_unit_extent_scales_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cap = ModelCapacity::new(3, 8).unwrap();
    let gt = common::rect_plan(&mut rng, 3, cap);
    let cfg = NoiseConfig { lambda_geo: 0.4, gamma_flip: 0.0, seed: 9, groups: 1 };
    let a = perturb(&gt, &cfg, 1.0, 1.0).unwrap();
    let b = perturb(&gt, &cfg, 256.0, 512.0).unwrap();
    // Same draws in image units, converted back to normalized units.
    for (x, y) in a.tokens().iter().zip(b.tokens()) {
        for k in 0..2 {
            for axis in 0..2 {
                assert!((x.displacement[k][axis] - y.displacement[k][axis]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn flip_rate_extremes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cap = ModelCapacity::new(4, 12).unwrap();
    let gt = common::grid_plan(&mut rng, 4, 10, cap);
    for (gamma, rate) in [(0.0, 0.0), (1.0, 1.0)] {
        let set = perturb(&gt, &NoiseConfig { lambda_geo: 0.1, gamma_flip: gamma, seed: 1, groups: 3 }, 1.0, 1.0).unwrap();
        assert_eq!(flip_rate(&set, &gt).unwrap(), rate);
    }
}
