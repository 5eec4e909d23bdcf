//! Seeded construct-and-recover trials shared by the `benchmark` command and
//! the test suites.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::masses::LandmarkSet;
use crate::metrics::{evaluate, EvalReport, SuccessThreshold};
use crate::registration::{register, RegisterOptions};
use crate::synth::{
    add_gaussian_noise, append_uniform_outliers, crop_chunk, random_transform, voxel_downsample,
    RotationSampling,
};
use crate::types::{FgaParams, PointCloud, RigidTransform};

/// Disturbances applied to each generated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub sampling: RotationSampling,
    /// Translation norm bound as a fraction of the (unit) extent.
    pub max_translation: f64,
    /// Per-coordinate Gaussian noise on the template.
    pub gaussian_noise: f64,
    /// Uniform outliers appended to the template, as a fraction of its size.
    pub uniform_noise: f64,
    /// Fraction of the template removed as one contiguous chunk.
    pub crop: f64,
    /// Voxel edge for downsampling the base cloud; `0` disables it.
    pub voxel: f64,
    /// Number of random landmark correspondences passed to the registration.
    pub landmarks: usize,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            sampling: RotationSampling::AxisAngle { max_angle: 60f64.to_radians() },
            max_translation: 0.1,
            gaussian_noise: 0.0,
            uniform_noise: 0.0,
            crop: 0.0,
            voxel: 0.0,
            landmarks: 0,
        }
    }
}

/// One generated pair. `x = gt(base)`; `y` is a disturbed copy of `base`
/// whose first `inliers.len()` points are the clean template points.
#[derive(Debug, Clone)]
pub struct Trial {
    pub x: PointCloud<3>,
    pub y: PointCloud<3>,
    /// Undisturbed template points the error is measured on.
    pub inliers: PointCloud<3>,
    pub gt: RigidTransform<3>,
    pub landmarks: Option<LandmarkSet>,
}

/// Centers `cloud` and scales its largest bounding-box side to 1, so errors
/// are reported on a common normalized scale.
pub fn to_unit_extent(cloud: &PointCloud<3>) -> PointCloud<3> {
    let Some((lo, hi)) = cloud.bounding_box() else {
        return cloud.clone();
    };
    let side = (hi - lo).max();
    let center = (lo + hi) / 2.0;
    let s = if side > 0.0 { 1.0 / side } else { 1.0 };
    PointCloud::new(cloud.points().iter().map(|p| (p - center) * s).collect())
}

/// Seed of trial `index` within a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

pub fn make_trial<R: Rng + ?Sized>(base: &PointCloud<3>, spec: &TrialSpec, rng: &mut R) -> Trial {
    let base = if spec.voxel > 0.0 { voxel_downsample(base, spec.voxel) } else { base.clone() };
    let gt = random_transform(spec.sampling, spec.max_translation, rng);
    let x = base.transformed(&gt);
    let (inliers, kept) = crop_chunk(&base, spec.crop, rng);
    let y = add_gaussian_noise(&inliers, spec.gaussian_noise, rng);
    let y = append_uniform_outliers(&y, spec.uniform_noise, rng);
    let landmarks = (spec.landmarks > 0).then(|| {
        let k = spec.landmarks.min(inliers.len());
        let mut picks = sample(rng, inliers.len(), k).into_vec();
        picks.sort_unstable();
        let pairs = picks.into_iter().map(|i| (i, kept[i])).collect();
        LandmarkSet::new(pairs, y.len(), x.len()).expect("indices drawn in range")
    });
    Trial { x, y, inliers, gt, landmarks }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub estimate: RigidTransform<3>,
    pub report: EvalReport,
    pub iterations: usize,
    pub converged: bool,
    pub gpe_initial: Option<f64>,
    pub gpe_final: Option<f64>,
    pub wall_ms: f64,
}

impl TrialOutcome {
    pub fn rmse(&self) -> f64 {
        self.report.rmse.unwrap_or(f64::INFINITY)
    }
}

/// Generates trial `index` of a run seeded with `seed` and registers it.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    base: &PointCloud<3>,
    spec: &TrialSpec,
    seed: u64,
    index: usize,
    params: &FgaParams,
    options: &RegisterOptions,
    thresholds: &[SuccessThreshold],
) -> Result<TrialOutcome> {
    let tseed = trial_seed(seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(tseed);
    let trial = make_trial(base, spec, &mut rng);
    let start = std::time::Instant::now();
    let res = register(&trial.x, &trial.y, trial.landmarks.as_ref(), params, options)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialOutcome {
        index,
        seed: tseed,
        report: evaluate(&trial.inliers, &trial.gt, &res.transform, thresholds),
        estimate: res.transform,
        iterations: res.iterations,
        converged: res.converged,
        gpe_initial: res.gpe_initial,
        gpe_final: res.gpe_trace.last().copied(),
        wall_ms,
    })
}

/// Summed distance between consecutive pose positions.
pub fn path_length(poses: &[RigidTransform<3>]) -> f64 {
    poses.windows(2).map(|w| (w[1].translation - w[0].translation).norm()).sum()
}
