//! Seeded synthetic shapes and disturbances for benchmarks and tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::FgaError;
use crate::types::{bounding_box, Matrix, Point, PointCloud, RigidTransform};

/// Built-in desk-scale shapes, all roughly unit extent and centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    CubeShell,
    SphereShell,
    /// Two perpendicular walls meeting along a vertical edge, plus a floor strip.
    RoomCorner,
    /// Anisotropic ellipsoid with bumps; has no rotational symmetry.
    Blob,
}

impl FromStr for Shape {
    type Err = FgaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cube" | "cube-shell" => Ok(Shape::CubeShell),
            "sphere" | "sphere-shell" => Ok(Shape::SphereShell),
            "corner" | "room-corner" => Ok(Shape::RoomCorner),
            "blob" => Ok(Shape::Blob),
            other => Err(FgaError::UnsupportedFormat(format!("unknown shape {other}"))),
        }
    }
}

fn unit_sphere_sample<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Bump centers and amplitudes of [`Shape::Blob`]; fixed so every seed sees the same object.
const BLOB_BUMPS: [([f64; 3], f64); 5] = [
    ([0.8, 0.5, 0.3], 0.35),
    ([-0.6, 0.7, -0.4], 0.25),
    ([0.1, -0.9, 0.4], 0.3),
    ([-0.3, -0.2, -0.93], 0.2),
    ([0.95, -0.3, -0.1], 0.15),
];

fn blob_radius(dir: &Vector3<f64>) -> f64 {
    let base = 1.0
        / ((dir.x / 0.5).powi(2) + (dir.y / 0.35).powi(2) + (dir.z / 0.25).powi(2)).sqrt();
    let bumps: f64 = BLOB_BUMPS
        .iter()
        .map(|(c, amp)| {
            let c = Vector3::from(*c).normalize();
            amp * (-(dir - c).norm_squared() / 0.15).exp()
        })
        .sum();
    base * (1.0 + bumps)
}

/// Samples `n` points on `shape`.
pub fn sample_shape<R: Rng + ?Sized>(shape: Shape, n: usize, rng: &mut R) -> PointCloud<3> {
    let pts = (0..n)
        .map(|_| match shape {
            Shape::SphereShell => unit_sphere_sample(rng) * 0.5,
            Shape::CubeShell => {
                let face = rng.random_range(0..6);
                let u = rng.random_range(-0.5..0.5);
                let v = rng.random_range(-0.5..0.5);
                let s = if face % 2 == 0 { 0.5 } else { -0.5 };
                match face / 2 {
                    0 => Vector3::new(s, u, v),
                    1 => Vector3::new(u, s, v),
                    _ => Vector3::new(u, v, s),
                }
            }
            Shape::RoomCorner => {
                let u = rng.random_range(0.0..1.0);
                let v = rng.random_range(0.0..1.0);
                let p = match rng.random_range(0..5) {
                    0 | 1 => Vector3::new(u, 0.0, v * 0.8),
                    2 | 3 => Vector3::new(0.0, u * 0.6, v * 0.8),
                    _ => Vector3::new(u, v * 0.6, 0.0),
                };
                p - Vector3::new(0.5, 0.3, 0.4)
            }
            Shape::Blob => {
                let d = unit_sphere_sample(rng);
                d * blob_radius(&d)
            }
        })
        .collect();
    PointCloud::new(pts)
}

/// How random rotations are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationSampling {
    /// Uniform random axis, angle uniform in `[0, max]` radians.
    AxisAngle { max_angle: f64 },
    /// Independent Euler angles about x, y, z, each uniform in `[0, max]`.
    Euler { max_angle: f64 },
}

pub fn random_rotation<R: Rng + ?Sized>(sampling: RotationSampling, rng: &mut R) -> Matrix<3> {
    match sampling {
        RotationSampling::AxisAngle { max_angle } => {
            let axis = Unit::new_normalize(unit_sphere_sample(rng));
            let angle = rng.random_range(0.0..=max_angle.max(0.0));
            Rotation3::from_axis_angle(&axis, angle).into_inner()
        }
        RotationSampling::Euler { max_angle } => {
            let m = max_angle.max(0.0);
            let (ax, ay, az) = (rng.random_range(0.0..=m), rng.random_range(0.0..=m), rng.random_range(0.0..=m));
            Rotation3::from_euler_angles(ax, ay, az).into_inner()
        }
    }
}

/// A random rigid motion with translation of norm at most `max_translation`.
pub fn random_transform<R: Rng + ?Sized>(
    sampling: RotationSampling,
    max_translation: f64,
    rng: &mut R,
) -> RigidTransform<3> {
    let rotation = random_rotation(sampling, rng);
    let dir = unit_sphere_sample(rng);
    let len = rng.random_range(0.0..=max_translation.max(0.0));
    RigidTransform { rotation, translation: dir * len }
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma` to every coordinate.
pub fn add_gaussian_noise<const D: usize, R: Rng + ?Sized>(
    cloud: &PointCloud<D>,
    sigma: f64,
    rng: &mut R,
) -> PointCloud<D> {
    if sigma <= 0.0 {
        return cloud.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    PointCloud::new(
        cloud
            .points()
            .iter()
            .map(|p| p + Point::<D>::from_fn(|_, _| normal.sample(rng)))
            .collect(),
    )
}

/// Appends `round(fraction * len)` outliers drawn uniformly from the cloud's
/// bounding box, i.e. `[-0.5, 0.5]` in box-relative coordinates around its center.
pub fn append_uniform_outliers<const D: usize, R: Rng + ?Sized>(
    cloud: &PointCloud<D>,
    fraction: f64,
    rng: &mut R,
) -> PointCloud<D> {
    let count = (fraction.max(0.0) * cloud.len() as f64).round() as usize;
    let Some((lo, hi)) = bounding_box(cloud.points()) else {
        return cloud.clone();
    };
    let center = (lo + hi) / 2.0;
    let extent = hi - lo;
    let mut pts = cloud.points().to_vec();
    pts.extend((0..count).map(|_| {
        Point::<D>::from_fn(|k, _| center[k] + rng.random_range(-0.5..0.5) * extent[k])
    }));
    PointCloud::new(pts)
}

/// Appends `round(fraction * len)` Gaussian outliers around the centroid with
/// standard deviation `spread` per axis.
pub fn append_gaussian_outliers<const D: usize, R: Rng + ?Sized>(
    cloud: &PointCloud<D>,
    fraction: f64,
    spread: f64,
    rng: &mut R,
) -> PointCloud<D> {
    let count = (fraction.max(0.0) * cloud.len() as f64).round() as usize;
    let Some(c) = cloud.centroid() else {
        return cloud.clone();
    };
    let normal = Normal::new(0.0, spread.max(f64::MIN_POSITIVE)).expect("positive spread");
    let mut pts = cloud.points().to_vec();
    pts.extend((0..count).map(|_| c + Point::<D>::from_fn(|_, _| normal.sample(rng))));
    PointCloud::new(pts)
}

/// Removes the `fraction` of points nearest to a randomly chosen seed point,
/// which cuts one contiguous chunk out of the cloud. Returns the surviving
/// indices alongside the cropped cloud.
pub fn crop_chunk<const D: usize, R: Rng + ?Sized>(
    cloud: &PointCloud<D>,
    fraction: f64,
    rng: &mut R,
) -> (PointCloud<D>, Vec<usize>) {
    let n = cloud.len();
    let remove = ((fraction.clamp(0.0, 1.0)) * n as f64).round() as usize;
    if remove == 0 || n == 0 {
        return (cloud.clone(), (0..n).collect());
    }
    let seed = cloud.points()[rng.random_range(0..n)];
    let mut by_dist: Vec<usize> = (0..n).collect();
    by_dist.sort_by(|&i, &j| {
        let di = (cloud.points()[i] - seed).norm_squared();
        let dj = (cloud.points()[j] - seed).norm_squared();
        di.total_cmp(&dj).then(i.cmp(&j))
    });
    let mut keep: Vec<usize> = by_dist[remove.min(n)..].to_vec();
    keep.sort_unstable();
    let pts = keep.iter().map(|&i| cloud.points()[i]).collect();
    (PointCloud::new(pts), keep)
}

/// Replaces all points inside each occupied voxel of edge `voxel` by their centroid.
pub fn voxel_downsample<const D: usize>(cloud: &PointCloud<D>, voxel: f64) -> PointCloud<D> {
    if !(voxel > 0.0) || cloud.is_empty() {
        return cloud.clone();
    }
    let mut bins: BTreeMap<Vec<i64>, (Point<D>, usize)> = BTreeMap::new();
    for p in cloud.points() {
        let key: Vec<i64> = p.iter().map(|c| (c / voxel).floor() as i64).collect();
        let e = bins.entry(key).or_insert((Point::<D>::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    PointCloud::new(bins.into_values().map(|(s, n)| s / n as f64).collect())
}

/// Regular planar grid in 2D, handy for quadtree tests.
pub fn grid_2d(n_per_axis: usize, extent: f64) -> PointCloud<2> {
    let step = extent / n_per_axis as f64;
    let mut pts = Vec::with_capacity(n_per_axis * n_per_axis);
    for i in 0..n_per_axis {
        for j in 0..n_per_axis {
            pts.push(Point::<2>::new(
                (i as f64 + 0.5) * step - extent / 2.0,
                (j as f64 + 0.5) * step - extent / 2.0,
            ));
        }
    }
    PointCloud::new(pts)
}

/// Uniform random points in the cube `[-half, half]^3`.
pub fn uniform_cube<R: Rng + ?Sized>(n: usize, half: f64, rng: &mut R) -> PointCloud<3> {
    PointCloud::new(
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-half..half),
                    rng.random_range(-half..half),
                    rng.random_range(-half..half),
                )
            })
            .collect(),
    )
}

/// Angle in degrees to radians.
pub fn deg(x: f64) -> f64 {
    x * PI / 180.0
}
