mod common;

use std::collections::BTreeMap;

use edgeplan::io::{self, EdgeDocument};
use edgeplan::{perturb, project, Bounds, ModelCapacity, NoiseConfig, PointCloud};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floorplan_file_roundtrip_is_exact(seed in any::<u64>(), rooms in 0usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = common::grid_plan(&mut rng, rooms, 12, ModelCapacity::default()).with_scene_id(format!("scene_{seed}"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.json");
        io::save_floorplan(&fp, &path).unwrap();
        prop_assert_eq!(io::load_floorplan(&path).unwrap(), fp);
    }

    #[test]
    fn prediction_roundtrip_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = ModelCapacity::new(6, 14).unwrap();
        let fp = common::grid_plan(&mut rng, 5, 12, cap);
        let set = perturb(&fp, &NoiseConfig { seed, ..NoiseConfig::default() }, 1.0, 1.0).unwrap();
        let pred = set.group_predictions(0).unwrap();
        let text = serde_json::to_string(&EdgeDocument::from_predictions(&pred)).unwrap();
        prop_assert_eq!(EdgeDocument::parse(&text).unwrap().to_predictions().unwrap(), pred);
    }

    #[test]
    fn pgm_within_quantization(seed in any::<u64>(), n in 1usize..300) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = PointCloud::new((0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), 0.0]).collect());
        let map = project(&cloud, 20, 17, Some(Bounds::unit())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        io::write_density_pgm(&map, &path).unwrap();
        let back = io::read_density_pgm(&path).unwrap();
        prop_assert_eq!((back.width, back.height, back.max_count, back.bounds), (20, 17, map.max_count, map.bounds));
        for (a, b) in map.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() <= 1.0 / 510.0 + 1e-15);
        }
    }
}

#[test]
fn polygons_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fp = common::grid_plan(&mut rng, 5, 12, ModelCapacity::default());
    let polys = edgeplan::floorplan_to_polygons(&fp, 0.1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    io::save_polygons(&polys, BTreeMap::new(), &path).unwrap();
    assert_eq!(io::load_polygons(&path).unwrap(), polys);
}

#[test]
fn svg_is_byte_identical_across_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fp = common::grid_plan(&mut rng, 5, 12, ModelCapacity::default());
    let polys = edgeplan::floorplan_to_polygons(&fp, 0.1);
    let cloud = PointCloud::new(vec![[0.2, 0.3, 0.0], [0.8, 0.1, 0.0]]);
    let map = project(&cloud, 64, 64, Some(Bounds::unit())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    io::write_svg(&polys, Some(&map), 256, &a).unwrap();
    io::write_svg(&polys, Some(&map), 256, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap().matches("<path").count(), 5);
}
