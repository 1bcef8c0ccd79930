mod common;

use edgeplan::losses::{bce_cls_loss, edge_l1_loss};
use edgeplan::raster::rasterize_vertices;
use edgeplan::{
    dice_loss, match_floorplans, total_loss, LossConfig, LossWeights, MatchingOptions, ModelCapacity, PredictionSet,
    RasterMask,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rect_mask(x0: f64, y0: f64, x1: f64, y1: f64, res: usize) -> RasterMask {
    rasterize_vertices(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)], res, res).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dice_agrees_with_area_formula(
        a in (0.0f64..0.5, 0.0f64..0.5, 0.3f64..0.5, 0.3f64..0.5),
        b in (0.0f64..0.5, 0.0f64..0.5, 0.3f64..0.5, 0.3f64..0.5),
    ) {
        let ra = (a.0, a.1, a.0 + a.2, a.1 + a.3);
        let rb = (b.0, b.1, b.0 + b.2, b.1 + b.3);
        let area = |r: (f64, f64, f64, f64)| (r.2 - r.0) * (r.3 - r.1);
        let ix = (ra.2.min(rb.2) - ra.0.max(rb.0)).max(0.0);
        let iy = (ra.3.min(rb.3) - ra.1.max(rb.1)).max(0.0);
        let analytic = 1.0 - 2.0 * ix * iy / (area(ra) + area(rb));
        let d = dice_loss(&rect_mask(ra.0, ra.1, ra.2, ra.3, 256), &rect_mask(rb.0, rb.1, rb.2, rb.3, 256)).unwrap();
        // Pixel-center sampling moves each rectangle side by at most one pixel.
        let px = 1.0 / 256.0;
        let slack = 4.0 * px * (2.0 + 2.0) / (area(ra) + area(rb)) + 1e-12;
        prop_assert!((d - analytic).abs() <= slack.max(0.02 * analytic), "{d} vs {analytic}");
    }

    #[test]
    fn dice_monotone_in_overlap(w in 8usize..64, fill in 0usize..64, shift in 0usize..64) {
        // Fixed-size masks; sliding B toward A only grows the intersection.
        let n = w * w;
        let size = (fill % (n / 2)).max(1);
        let a = RasterMask::from_fn(w, w, |c, r| r * w + c < size);
        let offset = (shift % (size + 1)).min(n - size);
        let b_far = RasterMask::from_fn(w, w, |c, r| (offset..offset + size).contains(&(r * w + c)));
        let nearer = offset.saturating_sub(1);
        let b_near = RasterMask::from_fn(w, w, |c, r| (nearer..nearer + size).contains(&(r * w + c)));
        prop_assert!(b_near.intersection_count(&a).unwrap() >= b_far.intersection_count(&a).unwrap());
        prop_assert!(dice_loss(&a, &b_near).unwrap() <= dice_loss(&a, &b_far).unwrap());
    }

    #[test]
    fn bce_non_negative(labels in prop::collection::vec(0u8..2, 1..40), conf in prop::collection::vec(0.0f64..=1.0, 40)) {
        let labels: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let v = bce_cls_loss(&labels, &conf[..labels.len()]).unwrap();
        prop_assert!(v >= 0.0 && v.is_finite());
    }
}

#[test]
fn bce_analytic_values() {
    assert!((bce_cls_loss(&[1.0], &[0.5]).unwrap() - std::f64::consts::LN_2).abs() <= 1e-12);
    assert!((bce_cls_loss(&[0.0], &[0.5]).unwrap() - std::f64::consts::LN_2).abs() <= 1e-12);
    assert!(bce_cls_loss(&[1.0, 0.0], &[1.0 - 1e-7, 1e-7]).unwrap() < 2e-7);
    assert!(bce_cls_loss(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn components_non_negative_on_random_plans() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cap = ModelCapacity::new(6, 12).unwrap();
    let cfg = LossConfig { resolution: 64, ..LossConfig::default() };
    for _ in 0..20 {
        let gt = common::grid_plan(&mut rng, 3, 10, cap);
        let pred = PredictionSet::from_floorplan(&common::grid_plan(&mut rng, 4, 10, cap));
        let m = match_floorplans(&gt, &pred, &MatchingOptions::default()).unwrap();
        let b = total_loss(&gt, &pred, &m, Some((&gt, &pred)), &cfg).unwrap();
        for v in [b.cls, b.edge, b.ras, b.cls_dn, b.edge_dn, b.total] {
            assert!(v >= 0.0 && v.is_finite());
        }
        let zero = LossConfig { weights: LossWeights::zero(), ..cfg };
        assert_eq!(total_loss(&gt, &pred, &m, Some((&gt, &pred)), &zero).unwrap().total, 0.0);
    }
}

#[test]
fn mock_room_edge_term_is_zero() {
    let cap = ModelCapacity::default();
    let mock = edgeplan::Room::mock(cap.edges);
    let pred = edgeplan::PredictedRoom::from(&mock);
    assert_eq!(edge_l1_loss(&mock, &pred).unwrap(), 0.0);
}
