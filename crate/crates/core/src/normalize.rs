//! Joint normalization of a reference/template pair into `[a, b]` and the
//! inverse mapping of a transform estimated in the normalized frame.
//!
//! Each cloud is centered at its own mean, then both are scaled by the same
//! factor derived from the joint extreme coordinates `l` and `r`:
//!
//! ```text
//! p' = (p - mean - l) (b - a) / (r - l) + a
//! ```
//!
//! `l` and `r` are scalars taken over all coordinates of both centered clouds,
//! so the map is a similarity and rigid motions stay rigid.

use crate::error::{FgaError, Result};
use crate::types::{Point, PointCloud, RigidTransform};

/// Everything needed to move between the original and normalized frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationContext<const D: usize> {
    pub mean_x: Point<D>,
    pub mean_y: Point<D>,
    pub l: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
}

impl<const D: usize> NormalizationContext<D> {
    /// Normalized length per original length.
    pub fn scale(&self) -> f64 {
        (self.b - self.a) / (self.r - self.l)
    }

    fn forward(&self, p: &Point<D>, mean: &Point<D>) -> Point<D> {
        (p - mean).map(|c| (c - self.l) * self.scale() + self.a)
    }

    fn backward(&self, p: &Point<D>, mean: &Point<D>) -> Point<D> {
        p.map(|c| (c - self.a) / self.scale() + self.l) + mean
    }

    pub fn normalize_reference_point(&self, p: &Point<D>) -> Point<D> {
        self.forward(p, &self.mean_x)
    }

    pub fn normalize_template_point(&self, p: &Point<D>) -> Point<D> {
        self.forward(p, &self.mean_y)
    }

    /// Maps a normalized-frame point back through the reference's normalization.
    pub fn denormalize_reference_point(&self, p: &Point<D>) -> Point<D> {
        self.backward(p, &self.mean_x)
    }

    pub fn denormalize_template_point(&self, p: &Point<D>) -> Point<D> {
        self.backward(p, &self.mean_y)
    }
}

/// Normalizes reference `x` and template `y` jointly into `[a, b]`.
pub fn normalize_pair<const D: usize>(
    x: &PointCloud<D>,
    y: &PointCloud<D>,
    a: f64,
    b: f64,
) -> Result<(PointCloud<D>, PointCloud<D>, NormalizationContext<D>)> {
    let mean_x = x.centroid().ok_or(FgaError::EmptyCloud)?;
    let mean_y = y.centroid().ok_or(FgaError::EmptyCloud)?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(FgaError::InvalidParam { name: "norm_range.b", value: b });
    }

    let mut l = f64::INFINITY;
    let mut r = f64::NEG_INFINITY;
    for (cloud, mean) in [(x, &mean_x), (y, &mean_y)] {
        for p in cloud.points() {
            for c in (p - mean).iter() {
                l = l.min(*c);
                r = r.max(*c);
            }
        }
    }
    if r <= l {
        return Err(FgaError::DegenerateExtent);
    }

    let ctx = NormalizationContext { mean_x, mean_y, l, r, a, b };
    let map = |cloud: &PointCloud<D>, mean: &Point<D>| {
        let pts: Vec<Point<D>> = cloud.points().iter().map(|p| ctx.forward(p, mean)).collect();
        match cloud.masses() {
            Some(m) => PointCloud::with_masses(pts, m.to_vec()),
            None => Ok(PointCloud::new(pts)),
        }
    };
    Ok((map(x, &mean_x)?, map(y, &mean_y)?, ctx))
}

/// Converts a transform registering the normalized template onto the
/// normalized reference into the transform registering the original clouds.
///
/// The rotation is unchanged. The translation is
/// `-R ȳ - R l + (R a + t - a) / s + l + x̄` with `s = (b - a) / (r - l)`;
/// the trailing `x̄` moves the template from its own centroid onto the
/// reference centroid.
pub fn denormalize_translation<const D: usize>(
    t_norm: &RigidTransform<D>,
    ctx: &NormalizationContext<D>,
) -> RigidTransform<D> {
    let rot = t_norm.rotation;
    let l_vec = Point::<D>::repeat(ctx.l);
    let a_vec = Point::<D>::repeat(ctx.a);
    let inv_scale = (ctx.r - ctx.l) / (ctx.b - ctx.a);
    let translation = -(rot * ctx.mean_y) - rot * l_vec
        + (rot * a_vec + t_norm.translation - a_vec) * inv_scale
        + l_vec
        + ctx.mean_x;
    RigidTransform { rotation: rot, translation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    fn cloud3(rows: &[[f64; 3]]) -> PointCloud<3> {
        PointCloud::from_rows(rows)
    }

    #[test]
    fn diagonal_pair_maps_to_range_corners() {
        let x = cloud3(&[[0.0, 0.0, 0.0], [10.0, 10.0, 10.0]]);
        let (xn, yn, ctx) = normalize_pair(&x, &x, -5.0, 5.0).unwrap();
        assert_eq!(ctx.l, -5.0);
        assert_eq!(ctx.r, 5.0);
        assert_eq!(xn.points()[0], Vector3::new(-5.0, -5.0, -5.0));
        assert_eq!(xn.points()[1], Vector3::new(5.0, 5.0, 5.0));
        assert_eq!(xn, yn);
    }

    #[test]
    fn outputs_span_exactly_the_range() {
        let x = cloud3(&[[1.0, 2.0, -3.0], [4.0, 0.5, 2.0], [-2.0, 7.0, 1.0]]);
        let y = cloud3(&[[0.0, 0.0, 0.0], [3.0, -1.0, 9.0]]);
        let (xn, yn, _) = normalize_pair(&x, &y, -5.0, 5.0).unwrap();
        let all: Vec<f64> =
            xn.points().iter().chain(yn.points()).flat_map(|p| p.iter().copied()).collect();
        let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo + 5.0).abs() < 1e-12);
        assert!((hi - 5.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let x = cloud3(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert_eq!(normalize_pair(&x, &x, -5.0, 5.0).unwrap_err(), FgaError::DegenerateExtent);
        let y = cloud3(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.5]]);
        assert!(normalize_pair(&x, &y, -5.0, 5.0).is_ok());
    }

    #[test]
    fn identity_with_equal_means_denormalizes_to_zero() {
        let x = cloud3(&[[0.0, 0.0, 0.0], [2.0, 1.0, 0.0], [1.0, 3.0, 2.0]]);
        let (_, _, ctx) = normalize_pair(&x, &x, -5.0, 5.0).unwrap();
        let t = denormalize_translation(&RigidTransform::identity(), &ctx);
        assert!(t.translation.norm() < 1e-12);
        assert_eq!(t.rotation, nalgebra::Matrix3::identity());
    }

    #[test]
    fn identity_moves_template_centroid_onto_reference_centroid() {
        // x̄ = (1,0,0), ȳ = 0: the template must be shifted by +x̄.
        let x = cloud3(&[[0.0, -1.0, 0.0], [2.0, 1.0, 0.0]]);
        let y = cloud3(&[[-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]]);
        let (_, _, ctx) = normalize_pair(&x, &y, -5.0, 5.0).unwrap();
        let t = denormalize_translation(&RigidTransform::identity(), &ctx);
        assert!((t.translation - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn denormalized_action_matches_frame_change() {
        // Whatever (R, t) was found in the normalized frame, applying the
        // denormalized transform to Y equals mapping R Y' + t back through
        // the reference's inverse normalization.
        let x = cloud3(&[[3.0, 1.0, 0.0], [5.0, -2.0, 1.0], [4.0, 4.0, 4.0], [2.0, 0.0, 7.0]]);
        let y = cloud3(&[[-1.0, 0.5, 2.0], [0.0, 0.0, 0.0], [1.5, -3.0, 1.0]]);
        let (_, yn, ctx) = normalize_pair(&x, &y, -5.0, 5.0).unwrap();
        let r = Rotation3::from_scaled_axis(Vector3::new(0.4, -0.2, 0.9)).into_inner();
        let tn = RigidTransform::new(r, Vector3::new(0.3, -1.2, 2.0)).unwrap();
        let td = denormalize_translation(&tn, &ctx);
        assert_eq!(td.rotation, tn.rotation);
        for (p, pn) in y.points().iter().zip(yn.points()) {
            let lhs = td.apply(p);
            let rhs = ctx.denormalize_reference_point(&tn.apply(pn));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn point_maps_invert() {
        let x = cloud3(&[[3.0, 1.0, 0.0], [5.0, -2.0, 1.0]]);
        let y = cloud3(&[[-1.0, 0.5, 2.0], [0.0, 0.0, 0.0]]);
        let (_, _, ctx) = normalize_pair(&x, &y, 0.0, 1.0).unwrap();
        let p = Vector3::new(0.3, 0.7, -0.1);
        let q = ctx.denormalize_template_point(&ctx.normalize_template_point(&p));
        assert!((p - q).norm() < 1e-12);
    }
}
