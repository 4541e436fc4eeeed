use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::geometry::RigidTransform;
use crate::metrics::chamfer_distance;
use crate::templates::{canonical_normalization, SyntheticHand, SyntheticHandSpec};

fn camera(width: usize, height: usize) -> CameraModel {
    CameraModel::new(600.0, 600.0, 320.0, 240.0, width, height, RigidTransform::identity()).unwrap()
}

fn constant_map(depth: f64) -> DepthMap {
    DepthMap::new(640, 480, vec![depth; 640 * 480], camera(640, 480)).unwrap()
}

#[test]
fn depth_map_validation() {
    let cam = camera(640, 480);
    assert!(DepthMap::new(640, 480, vec![0.0; 10], cam).is_err());
    assert!(DepthMap::new(640, 480, vec![10_000.0; 640 * 480], cam).is_err());
    assert!(DepthMap::new(640, 480, vec![-1.0; 640 * 480], cam).is_err());
    assert!(DepthMap::new(4, 4, vec![1.0; 16], cam).is_err());
}

#[test]
fn segmentation_thresholds() {
    let inside = constant_map(500.0);
    assert_eq!(segment_depth(&inside, 200.0, 700.0), inside);
    let background = constant_map(2000.0);
    assert_eq!(segment_depth(&background, 200.0, 700.0).valid_count(), 0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let depth: Vec<f64> = (0..640 * 480)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(1.0..3000.0) })
        .collect();
    let expected = depth.iter().filter(|&&d| (300.0..=800.0).contains(&d)).count();
    let map = DepthMap::new(640, 480, depth, camera(640, 480)).unwrap();
    assert_eq!(segment_depth(&map, 300.0, 800.0).valid_count(), expected);
}

#[test]
fn backprojection_of_principal_and_tangent_rays() {
    let cam = CameraModel::new(600.0, 600.0, 320.0, 240.0, 640 * 2, 480, RigidTransform::identity()).unwrap();
    let mut wide = vec![0.0; 1280 * 480];
    wide[240 * 1280 + 320] = 400.0;
    wide[240 * 1280 + 920] = 400.0;
    let cloud = backproject(&DepthMap::new(1280, 480, wide, cam).unwrap()).unwrap();
    assert_eq!(cloud.points(), &[Point3::new(0.0, 0.0, 400.0), Point3::new(400.0, 0.0, 400.0)]);
    assert!(matches!(backproject(&constant_map(0.0)), Err(Error::NoValidPixels)));
}

#[test]
fn project_backproject_identity_continuous() {
    let pose = RigidTransform::look_at(Point3::new(300.0, -200.0, 400.0), Point3::origin(), Vector3::z()).unwrap();
    let cam = CameraModel::new(600.0, 590.0, 319.5, 239.5, 640, 480, pose).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let p = Point3::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0));
        let (u, v, d) = cam.project(&p).unwrap();
        assert!((cam.unproject(u, v, d) - p).norm() < 1e-6);
    }
}

#[test]
fn splat_render_round_trip() {
    // A gently curved height field facing the camera.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<Point3> = (0..5000)
        .map(|_| {
            let (x, y) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            Point3::new(x, y, 400.0 + 10.0 * (x / 20.0).sin() * (y / 25.0).cos())
        })
        .collect();
    let map = render_points(&points, &camera(640, 480)).unwrap();
    let back = backproject(&map).unwrap();
    let cd = chamfer_distance(&back, &PointCloud::new(points).unwrap()).unwrap();
    assert!(cd < 1.0, "cd = {cd}");
}

#[test]
fn merge_preserves_order_and_counts() {
    let a = PointCloud::new((0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect()).unwrap();
    let b = PointCloud::new((0..20).map(|i| Point3::new(0.0, i as f64, 100.0)).collect()).unwrap();
    assert_eq!(merge_views(std::slice::from_ref(&a)).unwrap(), a);
    let m = merge_views(&[a.clone(), b]).unwrap();
    assert_eq!(m.len(), 30);
    assert_eq!(&m.points()[..10], a.points());
    assert!(merge_views(&[PointCloud::new(vec![]).unwrap()]).is_err());
}

#[test]
fn far_point_is_the_only_outlier() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pts = Vec::new();
    while pts.len() < 100 {
        let p = Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if p.norm() <= 10.0 {
            pts.push(Point3::from(p));
        }
    }
    pts.push(Point3::new(500.0, 0.0, 0.0));
    let cloud = PointCloud::new(pts.clone()).unwrap();
    let out = remove_outliers(&cloud, 8, 2.0).unwrap();
    assert_eq!(out.points(), &pts[..100]);
    assert!(matches!(remove_outliers(&cloud.select(&[0, 1, 2]), 3, 2.0), Err(Error::TooFewPoints { .. })));
}

#[test]
fn gaussian_cluster_mostly_retained() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 5.0).unwrap();
    let pts: Vec<Point3> = (0..2000)
        .map(|_| Point3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    let cloud = PointCloud::new(pts).unwrap();
    let out = remove_outliers(&cloud, 8, 3.0).unwrap();
    assert!(cloud.len() - out.len() < 20 + 2000 / 50, "removed {}", cloud.len() - out.len());
    // Output is a subset of the input, in order.
    let mut it = cloud.points().iter();
    assert!(out.points().iter().all(|p| it.any(|q| q == p)));
}

#[test]
fn voxel_centroids() {
    let cloud = PointCloud::with_labels(
        vec![Point3::new(0.5, 0.5, 0.5), Point3::new(1.5, 1.5, 1.5), Point3::new(10.0, 0.0, 0.0)],
        vec![ComponentId::Ring, ComponentId::Thumb, ComponentId::Pinky],
    )
    .unwrap();
    let out = balance_density(&cloud, 3.0, 100, 0).unwrap();
    assert_eq!(out.points(), &[Point3::new(1.0, 1.0, 1.0), Point3::new(10.0, 0.0, 0.0)]);
    assert_eq!(out.labels().unwrap(), &[ComponentId::Thumb, ComponentId::Pinky]);

    let sparse = PointCloud::new((0..50).map(|i| Point3::new(i as f64 * 4.0 + 1.0, 1.0, 1.0)).collect()).unwrap();
    assert_eq!(balance_density(&sparse, 3.0, 50, 0).unwrap().len(), 50);
    assert_eq!(balance_density(&sparse, 3.0, 20, 0).unwrap().len(), 20);
    assert!(balance_density(&sparse, 0.0, 20, 0).is_err());
}

#[test]
fn overlap_density_is_equalized() {
    // Left half sampled once, right half twice (as if seen by two views).
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pts = Vec::new();
    for _ in 0..6000 {
        pts.push(Point3::new(rng.random_range(-60.0..0.0), rng.random_range(0.0..60.0), 0.0));
    }
    for _ in 0..12000 {
        pts.push(Point3::new(rng.random_range(0.0..60.0), rng.random_range(0.0..60.0), 0.0));
    }
    let cloud = PointCloud::new(pts).unwrap();
    let spacing = |c: &PointCloud, left: bool| {
        let means = mean_neighbor_distances(c, 8).unwrap();
        let sel: Vec<f64> = c
            .points()
            .iter()
            .zip(&means)
            .filter(|(p, _)| p.y > 10.0 && p.y < 50.0 && if left { p.x < -10.0 && p.x > -50.0 } else { p.x > 10.0 && p.x < 50.0 })
            .map(|(_, &m)| m)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let before = spacing(&cloud, true) / spacing(&cloud, false);
    let balanced = balance_density(&cloud, 3.0, 100_000, 0).unwrap();
    let after = spacing(&balanced, true) / spacing(&balanced, false);
    assert!(before > 1.3, "setup should be unbalanced, ratio {before}");
    assert!(after < 2.0 && after > 0.5, "ratio after balancing {after}");
    assert!((after - 1.0).abs() < (before - 1.0).abs());
}

struct Rig {
    maps: Vec<DepthMap>,
    truth: PointCloud,
}

fn hand_rig() -> Rig {
    let hand = SyntheticHand::new(SyntheticHandSpec::default()).unwrap();
    let mesh = hand.mesh();
    let center = Point3::from(canonical_normalization().center);
    let maps = tetrahedral_rig(center, 500.0, 600.0, 640, 480)
        .unwrap()
        .iter()
        .map(|cam| render_mesh(&mesh, cam, Some(2000.0)).unwrap())
        .collect();
    Rig {
        maps,
        truth: hand.sample_exposed(40_000, 7).unwrap(),
    }
}

fn fine_config() -> FusionConfig {
    FusionConfig {
        near: 300.0,
        far: 700.0,
        voxel_size: 1.5,
        target_points: 200_000,
        ..FusionConfig::default()
    }
}

#[test]
fn rig_cameras_look_at_the_target() {
    let target = Point3::new(20.0, -5.0, 3.0);
    for cam in tetrahedral_rig(target, 500.0, 600.0, 640, 480).unwrap() {
        let (u, v, d) = cam.project(&target).unwrap();
        assert!((u - 319.5).abs() < 1e-9 && (v - 239.5).abs() < 1e-9);
        assert!((d - 500.0).abs() < 1e-9);
    }
}

#[test]
fn fused_hand_matches_the_surface() {
    let rig = hand_rig();
    let fused = fuse(&rig.maps, &fine_config(), 0).unwrap();
    let cd = chamfer_distance(&fused, &rig.truth).unwrap();
    assert!(cd < 1.5, "fused CD = {cd}");

    for drop in 0..4 {
        let subset: Vec<DepthMap> = (0..4).filter(|&i| i != drop).map(|i| rig.maps[i].clone()).collect();
        let ablated = chamfer_distance(&fuse(&subset, &fine_config(), 0).unwrap(), &rig.truth).unwrap();
        assert!(ablated > cd, "dropping view {drop}: {ablated} <= {cd}");
    }
}

#[test]
fn merged_views_beat_any_single_view() {
    let rig = hand_rig();
    let cfg = fine_config();
    let views: Vec<PointCloud> = rig.maps.iter().map(|m| backproject(&segment_depth(m, cfg.near, cfg.far)).unwrap()).collect();
    let merged = merge_views(&views).unwrap();
    let merged_cd = chamfer_distance(&merged, &rig.truth).unwrap();
    for v in &views {
        assert!(chamfer_distance(v, &rig.truth).unwrap() > merged_cd);
    }
    // Outlier filtering keeps the bulk of a clean scene.
    let filtered = remove_outliers(&merged, 8, 1.0).unwrap();
    assert!(filtered.len() * 2 >= merged.len());
}

#[test]
fn default_fusion_hits_the_target_count_deterministically() {
    let rig = hand_rig();
    let cfg = FusionConfig { near: 300.0, far: 700.0, ..FusionConfig::default() };
    let quantized: Vec<DepthMap> = rig.maps.iter().map(DepthMap::quantized).collect();
    let a = fuse(&quantized, &cfg, 42).unwrap();
    assert_eq!(a.len(), 1038);
    assert_eq!(a, fuse(&quantized, &cfg, 42).unwrap());
}

#[test]
fn config_validation_and_json() {
    let cfg = FusionConfig::default();
    assert!(cfg.validate().is_ok());
    assert!(FusionConfig { near: 800.0, far: 700.0, ..cfg.clone() }.validate().is_err());
    assert!(FusionConfig { outlier_k: 0, ..cfg.clone() }.validate().is_err());
    let parsed: FusionConfig = serde_json::from_str(r#"{"near": 250, "voxel_size": 2.0}"#).unwrap();
    assert_eq!(parsed.near, 250.0);
    assert_eq!(parsed.far, cfg.far);
    assert!(serde_json::from_str::<FusionConfig>(r#"{"nearr": 1}"#).is_err());
}
