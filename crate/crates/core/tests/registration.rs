use nalgebra::{Rotation2, Rotation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fga::bench::path_length;
use fga::masses::LandmarkSet;
use fga::metrics::{angular_deviation, rmse};
use fga::registration::{prepare, MassScale};
use fga::synth::{sample_shape, Shape};
use fga::{default_params, register, register_sequence, FgaError, PointCloud, RegisterOptions, RigidTransform};

fn blob(n: usize, seed: u64) -> PointCloud<3> {
    sample_shape(Shape::Blob, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn identical_clouds_stay_put() {
    let c = blob(800, 1);
    let r = register(&c, &c, None, &default_params(), &RegisterOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 5, "{} iterations", r.iterations);
    assert!((r.transform.rotation - nalgebra::Matrix3::identity()).abs().max() < 1e-3);
    assert!(r.transform.translation.norm() < 1e-3);
}

#[test]
fn recovers_a_moderate_motion() {
    let y = blob(1500, 2);
    let gt = RigidTransform::new(
        Rotation3::from_euler_angles(0.4, -0.3, 0.2).into_inner(),
        Vector3::new(0.05, -0.03, 0.02),
    )
    .unwrap();
    let x = y.transformed(&gt);
    let r = register(&x, &y, None, &default_params(), &RegisterOptions::default()).unwrap();
    assert!(r.converged);
    assert!(rmse(&y, &r.transform, &gt) < 0.01);
    assert!(angular_deviation(&gt.rotation, &r.transform.rotation) < 1.0);
}

#[test]
fn works_far_from_the_origin_and_at_any_scale() {
    let y0 = blob(1000, 3);
    let y = PointCloud::new(y0.points().iter().map(|p| p * 250.0 + Vector3::new(1e4, -3e3, 42.0)).collect());
    let gt = RigidTransform::new(Rotation3::from_euler_angles(0.0, 0.0, 0.5).into_inner(), Vector3::new(10.0, 5.0, 0.0))
        .unwrap();
    let x = y.transformed(&gt);
    let r = register(&x, &y, None, &default_params(), &RegisterOptions::default()).unwrap();
    assert!(rmse(&y, &r.transform, &gt) / 250.0 < 0.01);
}

#[test]
fn planar_registration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let y = PointCloud::new(
        (0..900)
            .map(|_| Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .filter(|p: &Vector2<f64>| p.x < 0.1 || p.y > 0.2)
            .collect(),
    );
    let gt = RigidTransform::new(Rotation2::new(0.35).into_inner(), Vector2::new(0.04, -0.02)).unwrap();
    let x = y.transformed(&gt);
    let r = register(&x, &y, None, &default_params(), &RegisterOptions::default()).unwrap();
    assert!(rmse(&y, &r.transform, &gt) < 0.01, "rmse {}", rmse(&y, &r.transform, &gt));
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let y = blob(600, 4);
    let gt = RigidTransform::new(Rotation3::from_euler_angles(1.0, 0.5, 0.0).into_inner(), Vector3::zeros()).unwrap();
    let mut p = default_params();
    p.max_iters = 1;
    let r = register(&y.transformed(&gt), &y, None, &p, &RegisterOptions::default()).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
}

#[test]
fn gpe_trace_only_when_requested() {
    let y = blob(300, 5);
    let x = y.transformed(&RigidTransform::from_translation(Vector3::new(0.05, 0.0, 0.0)));
    let off = register(&x, &y, None, &default_params(), &RegisterOptions::default()).unwrap();
    assert!(off.gpe_trace.is_empty() && off.gpe_initial.is_none());
    let opts = RegisterOptions { trace_gpe: true, ..RegisterOptions::default() };
    let on = register(&x, &y, None, &default_params(), &opts).unwrap();
    assert_eq!(on.gpe_trace.len(), on.iterations);
    assert!(on.gpe_initial.is_some());
    assert_eq!(on.transform, off.transform);
}

#[test]
fn thread_count_does_not_change_results() {
    let y = blob(700, 6);
    let x = y.transformed(
        &RigidTransform::new(Rotation3::from_euler_angles(0.2, 0.1, -0.3).into_inner(), Vector3::zeros()).unwrap(),
    );
    let one = RegisterOptions { threads: 1, ..RegisterOptions::default() };
    let four = RegisterOptions { threads: 4, ..RegisterOptions::default() };
    let a = register(&x, &y, None, &default_params(), &one).unwrap();
    let b = register(&x, &y, None, &default_params(), &four).unwrap();
    assert_eq!(a.transform.to_rows(), b.transform.to_rows());
}

#[test]
fn invalid_inputs_are_rejected() {
    let c = blob(50, 7);
    let empty = PointCloud::<3>::new(vec![]);
    assert_eq!(register(&c, &empty, None, &default_params(), &RegisterOptions::default()).unwrap_err(), FgaError::EmptyCloud);
    let single = PointCloud::<3>::from_rows(&[[1.0, 1.0, 1.0]]);
    assert_eq!(
        register(&single, &single, None, &default_params(), &RegisterOptions::default()).unwrap_err(),
        FgaError::DegenerateExtent
    );
    let mut p = default_params();
    p.theta = 1.5;
    assert!(matches!(
        register(&c, &c, None, &p, &RegisterOptions::default()),
        Err(FgaError::InvalidParam { name: "theta", .. })
    ));
    let dup = LandmarkSet::new(vec![(0, 0), (1, 0)], 50, 50);
    assert!(dup.is_err());
    let bad_scale = RegisterOptions { mass_scale: MassScale { reference_total: 8.0, template_floor: 0.25 }, ..RegisterOptions::default() };
    assert!(register(&c, &c, None, &default_params(), &bad_scale).is_err());
}

#[test]
fn mass_rescaling_keeps_the_template_stable() {
    let c = blob(500, 8);
    let p = default_params();
    let prep = prepare(&c, &c, None, &p, &RegisterOptions::default()).unwrap();
    let lightest = prep.template_masses.values().iter().copied().fold(f64::INFINITY, f64::min);
    assert!((lightest - p.dt * p.eta).abs() < 1e-12);
    let total: f64 = prep.reference_masses.values().iter().sum();
    assert!((total - 8.0).abs() < 1e-9);
    let raw = prepare(&c, &c, None, &p, &RegisterOptions { mass_scale: MassScale::RAW, ..RegisterOptions::default() }).unwrap();
    let ratio = raw.template_masses.values()[0] / raw.template_masses.values()[1];
    let scaled = prep.template_masses.values()[0] / prep.template_masses.values()[1];
    assert!((ratio - scaled).abs() < 1e-12 * ratio);
}

#[test]
fn supplied_masses_override_computed_ones() {
    let pts = blob(200, 9).into_points();
    let uniform = PointCloud::with_masses(pts.clone(), vec![1.0; 200]).unwrap();
    let p = default_params();
    let opts = RegisterOptions { mass_scale: MassScale::RAW, ..RegisterOptions::default() };
    let prep = prepare(&uniform, &uniform, None, &p, &opts).unwrap();
    assert!(prep.reference_masses.values().iter().all(|&m| m == 1.0));
}

/// Frames of a static scene seen from a sensor moving forward while turning slowly.
#[test]
fn odometry_over_five_frames() {
    let world = sample_shape(Shape::RoomCorner, 2500, &mut ChaCha8Rng::seed_from_u64(10));
    let step = RigidTransform::new(
        Rotation3::from_euler_angles(0.0, 0.0, 3f64.to_radians()).into_inner(),
        Vector3::new(0.04, 0.01, 0.0),
    )
    .unwrap();
    let mut poses = vec![RigidTransform::<3>::identity()];
    for _ in 0..4 {
        let last = *poses.last().unwrap();
        poses.push(last.compose(&step));
    }
    let frames: Vec<PointCloud<3>> = poses.iter().map(|p| world.transformed(&p.inverse())).collect();
    let seq = register_sequence(&frames, &default_params(), &RegisterOptions::default()).unwrap();
    assert_eq!(seq.trajectory.len(), 5);
    assert!(seq.pairs.iter().all(|p| p.error.is_none()));
    let length = path_length(&poses);
    let drift = (seq.trajectory[4].translation - poses[4].translation).norm();
    assert!(drift < 0.05 * length, "drift {drift} over path {length}");
}

#[test]
fn odometry_of_identical_frames_is_identity() {
    let c = blob(400, 11);
    let seq = register_sequence(&[c.clone(), c], &default_params(), &RegisterOptions::default()).unwrap();
    for pose in &seq.trajectory {
        assert!(pose.delta_sq(&RigidTransform::identity()) < 1e-6);
    }
    assert!(matches!(
        register_sequence(&[blob(10, 1)], &default_params(), &RegisterOptions::default()),
        Err(FgaError::TooFewFrames { .. })
    ));
}
