use degen_icp_core::degeneracy::{accumulate, direction_stats, analyze};
use degen_icp_core::geometry::{Pose, Vec3, Vec6};
use degen_icp_core::registration::{detect, icp, IcpConfig, PlaneMap, SolverMethod, Termination};
use degen_icp_core::simulation::{
    generate_scene, jitter_points, mc_hessian_stats, random_feature_set, random_unit_directions,
    spurious_info_demo, NoiseSpec, NormalNoiseModel, SceneKind, SceneSpec, SpuriousConfig,
};

fn room() -> SceneKind {
    SceneKind::Room { length: 4.0, width: 3.0, height: 2.5 }
}

fn corridor() -> SceneKind {
    SceneKind::Corridor { length: 10.0, width: 3.0, height: 2.5 }
}

#[test]
fn self_registration_returns_identity() {
    let scene = generate_scene(&SceneSpec::new(room(), 2000, 1).with_edge_margin(0.3)).unwrap();
    for method in [SolverMethod::Standard, SolverMethod::Probabilistic { s: 10.0 }] {
        let config = IcpConfig { method, ..IcpConfig::default() };
        let r = icp(&scene.points, &scene.points, &Pose::identity(), &config).unwrap();
        assert!(r.converged);
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.pose.translation.norm() < 1e-9);
        assert!(r.pose.rotation_angle() < 1e-9);
        let sym = r.information - r.information.transpose();
        assert!(sym.norm() <= 1e-12 * r.information.norm());
    }
}

#[test]
fn noise_free_room_detection_is_certain() {
    let scene = generate_scene(&SceneSpec::new(room(), 2000, 2)).unwrap();
    let config = IcpConfig { sigma_p: 0.0, sigma_i: 0.0, ..IcpConfig::default() };
    let map = PlaneMap::new(&scene.points);
    let d = detect(&scene.points, &map, &Pose::identity(), &config).unwrap();
    assert_eq!(d.analysis.probabilities(), Vec6::repeat(1.0));
}

#[test]
fn noisy_room_and_corridor_detection() {
    let config = IcpConfig::default();
    let scene = generate_scene(&SceneSpec::new(room(), 2000, 3)).unwrap();
    let target = generate_scene(&SceneSpec::new(room(), 2000, 4)).unwrap();
    let map = PlaneMap::new(&jitter_points(&target.points, 0.01, 5));
    let d = detect(&jitter_points(&scene.points, 0.01, 6), &map, &Pose::identity(), &config).unwrap();
    assert!(d.analysis.probabilities().iter().all(|p| *p > 0.99));

    let scene = generate_scene(&SceneSpec::new(corridor(), 3000, 3)).unwrap();
    let target = generate_scene(&SceneSpec::new(corridor(), 3000, 4)).unwrap();
    let map = PlaneMap::new(&jitter_points(&target.points, 0.01, 5));
    let d = detect(&jitter_points(&scene.points, 0.01, 6), &map, &Pose::identity(), &config).unwrap();
    let low = d.analysis.probabilities().iter().filter(|p| **p < 0.01).count();
    assert_eq!(low, 1);
}

#[test]
fn corridor_longitudinal_error_is_left_alone() {
    let scene = generate_scene(&SceneSpec::new(corridor(), 3000, 7)).unwrap();
    let target = generate_scene(&SceneSpec::new(corridor(), 3000, 8)).unwrap();
    let src = jitter_points(&scene.points, 0.01, 9);
    let tgt = jitter_points(&target.points, 0.01, 10);
    let init = Pose::new(
        degen_icp_core::geometry::exp_so3(&Vec3::new(0.0, 0.0, 0.02)),
        Vec3::new(0.2, 0.05, -0.03),
    );
    let r = icp(&src, &tgt, &init, &IcpConfig::default()).unwrap();
    assert!(r.converged);
    // Lateral and vertical offsets and yaw are corrected; the unobservable
    // longitudinal offset stays put.
    assert!(r.pose.translation.y.abs() < 0.005);
    assert!(r.pose.translation.z.abs() < 0.005);
    assert!(r.pose.rotation_angle() < 0.1f64.to_radians());
    assert!((r.pose.translation.x - 0.2).abs() < 1e-3);
}

#[test]
fn far_source_is_an_error() {
    let scene = generate_scene(&SceneSpec::new(room(), 500, 1)).unwrap();
    let far: Vec<Vec3> = scene.points.iter().map(|p| p + Vec3::new(100.0, 0.0, 0.0)).collect();
    assert!(icp(&far, &scene.points, &Pose::identity(), &IcpConfig::default()).is_err());
}

#[test]
fn monte_carlo_mean_converges_to_prediction() {
    let sigma = 0.01;
    let truth = random_feature_set(5, 100, 2.0);
    let noisy: Vec<_> = truth.iter().map(|f| f.with_isotropic_noise(sigma, sigma)).collect();
    let bundle = accumulate(&noisy).unwrap();
    let noise = NoiseSpec::new(sigma, sigma, 1).with_model(NormalNoiseModel::SmallAngle);
    let mut worse = 0;
    let dirs = random_unit_directions(6, 5);
    for u in &dirs {
        let (mu, _) = direction_stats(&bundle, u).unwrap();
        let target = u.dot(&(bundle.hessian * u)) + mu;
        let (small, _) = mc_hessian_stats(&truth, &noise, u, 1_000).unwrap();
        let (large, _) = mc_hessian_stats(&truth, &noise, u, 100_000).unwrap();
        if (large - target).abs() >= (small - target).abs() {
            worse += 1;
        }
    }
    // Each comparison can go the wrong way by chance; the majority must not.
    assert!(worse <= 1, "{worse}");
}

#[test]
fn single_feature_oracle_matches_closed_form() {
    use degen_icp_core::degeneracy::PlaneFeature;
    let f = [PlaneFeature::on_plane(Vec3::zeros(), Vec3::z()).with_isotropic_noise(0.0, 0.01)];
    let u = Vec6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let bundle = accumulate(&f).unwrap();
    let (mu, var) = direction_stats(&bundle, &u).unwrap();
    assert!((mu - 1e-4).abs() < 1e-18);
    assert!((var - 2e-8).abs() < 1e-20);
    let noise = NoiseSpec::new(0.0, 0.01, 2).with_model(NormalNoiseModel::SmallAngle);
    let (mean, v) = mc_hessian_stats(&f, &noise, &u, 100_000).unwrap();
    assert!((mean - mu).abs() < 4.0 * (var / 1e5).sqrt());
    assert!((v - var).abs() < 0.05 * var);
    let a = analyze(&bundle, 10.0).unwrap();
    assert!(a.probabilities().iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn spurious_information_demo_on_plane() {
    let scene = generate_scene(&SceneSpec::new(
        SceneKind::InfinitePlane { size: 20.0, height: 1.0 },
        5000,
        11,
    ))
    .unwrap();
    let r = spurious_info_demo(&scene, &SpuriousConfig { seed: 3, ..SpuriousConfig::default() }).unwrap();
    assert!(r.relative_error < 0.05, "{}", r.relative_error);
    assert_eq!(r.null_directions.len(), 3);
    assert!(
        r.standard_null_norm >= 10.0 * r.probabilistic_null_norm,
        "{} vs {}",
        r.standard_null_norm,
        r.probabilistic_null_norm
    );
}
