//! Evaluation metrics against a known ground truth: point RMSE, chordal
//! angular deviation, translation error and their sum.

use std::fmt::Write as _;

use crate::types::{Matrix, Point, PointCloud, RigidTransform};

/// Root mean squared distance between `gt(y)` and `est(y)`.
pub fn rmse<const D: usize>(y: &PointCloud<D>, est: &RigidTransform<D>, gt: &RigidTransform<D>) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let s: f64 = y.points().iter().map(|p| (gt.apply(p) - est.apply(p)).norm_squared()).sum();
    (s / y.len() as f64).sqrt()
}

/// `φ = acos((tr(R_gtᵀ R*) - 1) / 2)` in degrees, with the argument clamped to `[-1, 1]`.
///
/// The formula is the 3D one; for `D = 2` the trace is padded with the
/// fixed third axis so it still yields the rotation angle.
pub fn angular_deviation<const D: usize>(r_gt: &Matrix<D>, r_est: &Matrix<D>) -> f64 {
    let mut tr = (r_gt.transpose() * r_est).trace();
    if D == 2 {
        tr += 1.0;
    }
    let c = (0.5 * (tr - 1.0)).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

pub fn translation_error<const D: usize>(t_gt: &Point<D>, t_est: &Point<D>) -> f64 {
    (t_gt - t_est).norm()
}

/// A success gate; both bounds are strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessThreshold {
    pub max_angle_deg: f64,
    /// `None` ignores the translation error.
    pub max_translation: Option<f64>,
}

impl SuccessThreshold {
    pub const fn angle(max_angle_deg: f64) -> Self {
        Self { max_angle_deg, max_translation: None }
    }

    pub const fn angle_and_translation(max_angle_deg: f64, max_translation: f64) -> Self {
        Self { max_angle_deg, max_translation: Some(max_translation) }
    }

    pub fn accepts(&self, angular_deg: f64, translation_err: f64) -> bool {
        angular_deg < self.max_angle_deg && self.max_translation.is_none_or(|t| translation_err < t)
    }

    /// Stable key used in serialized reports, e.g. `success_phi4` or `success_phi5_t0.2`.
    pub fn label(&self) -> String {
        match self.max_translation {
            Some(t) => format!("success_phi{}_t{}", self.max_angle_deg, t),
            None => format!("success_phi{}", self.max_angle_deg),
        }
    }
}

/// Gates used when the caller does not supply any.
pub const DEFAULT_THRESHOLDS: [SuccessThreshold; 2] =
    [SuccessThreshold::angle_and_translation(5.0, 0.2), SuccessThreshold::angle(4.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rmse: Option<f64>,
    pub angular_deg: f64,
    pub translation_err: f64,
    /// `angular_deg + translation_err`; mixes units by construction.
    pub total_err: f64,
    pub success_at: Vec<(SuccessThreshold, bool)>,
}

impl EvalReport {
    /// `success_at` lookup by threshold.
    pub fn success(&self, threshold: &SuccessThreshold) -> Option<bool> {
        self.success_at.iter().find(|(t, _)| t == threshold).map(|(_, ok)| *ok)
    }

    /// Flat `key value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        if let Some(r) = self.rmse {
            let _ = writeln!(out, "rmse {r:e}");
        }
        let _ = writeln!(out, "angular_deg {:e}", self.angular_deg);
        let _ = writeln!(out, "translation_err {:e}", self.translation_err);
        let _ = writeln!(out, "total_err {:e}", self.total_err);
        for (t, ok) in &self.success_at {
            let _ = writeln!(out, "{} {}", t.label(), ok);
        }
        out
    }
}

/// Fills an [`EvalReport`] from rotation and translation pairs.
pub fn total_error<const D: usize>(
    gt: &RigidTransform<D>,
    est: &RigidTransform<D>,
    thresholds: &[SuccessThreshold],
) -> EvalReport {
    let angular_deg = angular_deviation(&gt.rotation, &est.rotation);
    let translation_err = translation_error(&gt.translation, &est.translation);
    EvalReport {
        rmse: None,
        angular_deg,
        translation_err,
        total_err: angular_deg + translation_err,
        success_at: thresholds.iter().map(|t| (*t, t.accepts(angular_deg, translation_err))).collect(),
    }
}

/// [`total_error`] plus the RMSE over `y`.
pub fn evaluate<const D: usize>(
    y: &PointCloud<D>,
    gt: &RigidTransform<D>,
    est: &RigidTransform<D>,
    thresholds: &[SuccessThreshold],
) -> EvalReport {
    EvalReport { rmse: Some(rmse(y, est, gt)), ..total_error(gt, est, thresholds) }
}

/// Fraction of `true` values; `0` for an empty slice.
pub fn success_rate(outcomes: &[bool]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|&&b| b).count() as f64 / outcomes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Rotation2, Rotation3, Vector3};
    use proptest::prelude::*;

    fn rz(a: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), a).into_inner()
    }

    #[test]
    fn quarter_turn_is_ninety_degrees() {
        let phi = angular_deviation(&Matrix3::identity(), &rz(std::f64::consts::FRAC_PI_2));
        assert!((phi - 90.0).abs() < 1e-9);
        assert_eq!(angular_deviation(&Matrix3::<f64>::identity(), &Matrix3::identity()), 0.0);
    }

    #[test]
    fn half_turn_hits_the_clamp() {
        let axis = Vector3::new(1.0, 2.0, -0.5).normalize();
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), std::f64::consts::PI);
        assert!((angular_deviation(&Matrix3::identity(), r.matrix()) - 180.0).abs() < 1e-6);
    }

    #[test]
    fn planar_angle() {
        let r = Rotation2::new(0.3).into_inner();
        assert!((angular_deviation(&nalgebra::Matrix2::identity(), &r) - 0.3f64.to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn rmse_of_offset() {
        let y = PointCloud::<3>::from_rows(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [-4.0, 0.5, 1.0]]);
        let gt = RigidTransform::new(rz(0.4), Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let est = RigidTransform::from_translation(Vector3::new(0.25, 0.0, 0.0)).compose(&gt);
        assert!((rmse(&y, &est, &gt) - 0.25).abs() < 1e-12);
        assert_eq!(rmse(&y, &gt, &gt), 0.0);
    }

    #[test]
    fn rmse_matches_naive_loop() {
        let y = PointCloud::<3>::from_rows(&[[0.3, -1.0, 2.0], [1.5, 0.0, -0.2], [0.0, 0.7, 0.7], [2.0, 2.0, 1.0]]);
        let gt = RigidTransform::new(rz(1.1), Vector3::new(0.1, -0.2, 0.3)).unwrap();
        let est = RigidTransform::new(rz(1.0), Vector3::new(0.0, -0.1, 0.35)).unwrap();
        let mut acc = 0.0;
        for p in y.points() {
            let a = gt.rotation * p + gt.translation;
            let b = est.rotation * p + est.translation;
            for k in 0..3 {
                acc += (a[k] - b[k]) * (a[k] - b[k]);
            }
        }
        let naive = (acc / 4.0).sqrt();
        assert!((rmse(&y, &est, &gt) - naive).abs() < 1e-12);
    }

    #[test]
    fn report_thresholds_are_strict() {
        let gt = RigidTransform::<3>::identity();
        let est = RigidTransform::new(rz(2f64.to_radians()), Vector3::new(0.1, 0.0, 0.0)).unwrap();
        let r = total_error(&gt, &est, &DEFAULT_THRESHOLDS);
        assert_eq!(r.success(&DEFAULT_THRESHOLDS[0]), Some(true));
        assert!((r.total_err - (r.angular_deg + r.translation_err)).abs() < 1e-12);
        // Equality at the boundary is a failure.
        assert!(!SuccessThreshold::angle(2.0).accepts(2.0, 0.0));
        assert!(!SuccessThreshold::angle_and_translation(5.0, 0.2).accepts(1.0, 0.2));
        assert!(SuccessThreshold::angle(2.0).accepts(1.999, 1e9));
    }

    #[test]
    fn exact_match_succeeds_everywhere() {
        let t = RigidTransform::new(rz(0.7), Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let r = total_error(&t, &t, &DEFAULT_THRESHOLDS);
        assert_eq!(r.total_err, 0.0);
        assert!(r.success_at.iter().all(|(_, ok)| *ok));
    }

    #[test]
    fn sum_of_three_and_a_half() {
        let r = EvalReport { rmse: None, angular_deg: 3.0, translation_err: 0.5, total_err: 3.5, success_at: vec![] };
        assert_eq!(r.angular_deg + r.translation_err, r.total_err);
        let kv = r.to_kv();
        assert!(kv.contains("total_err 3.5e0"));
    }

    #[test]
    fn success_rate_counts() {
        assert_eq!(success_rate(&[]), 0.0);
        assert_eq!(success_rate(&[true, false, true, true]), 0.75);
    }

    fn rot() -> impl Strategy<Value = Matrix3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..3.1f64).prop_filter_map("axis", |(x, y, z, a)| {
            let v = Vector3::new(x, y, z);
            (v.norm() > 1e-3).then(|| Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(v), a).into_inner())
        })
    }

    proptest! {
        #[test]
        fn angular_deviation_is_symmetric_and_left_invariant(a in rot(), b in rot(), q in rot()) {
            let d = angular_deviation(&a, &b);
            prop_assert!((d - angular_deviation(&b, &a)).abs() < 1e-6);
            prop_assert!((d - angular_deviation(&(q * a), &(q * b))).abs() < 1e-6);
            prop_assert!((0.0..=180.0).contains(&d));
        }

        #[test]
        fn additivity(a in rot(), b in rot(), tx in -5.0..5.0f64, ty in -5.0..5.0f64) {
            let gt = RigidTransform::new(a, Vector3::new(tx, ty, 0.0)).unwrap();
            let est = RigidTransform::new(b, Vector3::zeros()).unwrap();
            let r = total_error(&gt, &est, &DEFAULT_THRESHOLDS);
            prop_assert!((r.total_err - r.angular_deg - r.translation_err).abs() < 1e-12);
        }
    }
}
