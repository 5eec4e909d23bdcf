//! Closed-form rigid projection of a displaced swarm (orthogonal Procrustes).

use nalgebra::DMatrix;

use crate::error::{FgaError, Result};
use crate::types::{centroid, determinant, to_dynamic, Matrix, Point, RigidTransform};

/// Singular values at or below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Previous state `y` and displaced state `y_d = y + d`.
#[derive(Debug, Clone, Copy)]
pub struct ProcrustesInput<'a, const D: usize> {
    y: &'a [Point<D>],
    y_d: &'a [Point<D>],
}

impl<'a, const D: usize> ProcrustesInput<'a, D> {
    pub fn new(y: &'a [Point<D>], y_d: &'a [Point<D>]) -> Result<Self> {
        if y.is_empty() {
            return Err(FgaError::EmptyCloud);
        }
        if y.len() != y_d.len() {
            return Err(FgaError::LengthMismatch { expected: y.len(), actual: y_d.len() });
        }
        Ok(Self { y, y_d })
    }

    pub fn y(&self) -> &[Point<D>] {
        self.y
    }

    pub fn y_d(&self) -> &[Point<D>] {
        self.y_d
    }

    /// `C = Ŷ_Dᵀ Ŷ` over the mean-centered states.
    pub fn covariance(&self) -> Matrix<D> {
        let my = centroid(self.y).unwrap_or_else(Point::zeros);
        let md = centroid(self.y_d).unwrap_or_else(Point::zeros);
        self.y.iter().zip(self.y_d).fold(Matrix::<D>::zeros(), |c, (a, b)| {
            c + (b - md) * (a - my).transpose()
        })
    }
}

/// Result of [`solve_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate<const D: usize> {
    pub rotation: Matrix<D>,
    /// Numerical rank of the covariance.
    pub rank: usize,
    /// True when the covariance rank is below `D - 1`, i.e. the rotation is
    /// not unique. Unconstrained directions then receive the identity action.
    pub degenerate: bool,
}

/// Proper rotation `R` minimizing `Σ |R ŷ_i - ŷ_{D,i}|²`:
/// `R = U diag(1, …, 1, sgn det(U Vᵀ)) Vᵀ` for `C = U S Vᵀ`.
pub fn solve_rotation<const D: usize>(input: &ProcrustesInput<'_, D>) -> RotationEstimate<D> {
    let c = to_dynamic(&input.covariance());
    let svd = c.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return RotationEstimate { rotation: Matrix::<D>::identity(), rank: 0, degenerate: true },
    };
    let s = svd.singular_values;
    let smax = s.max();
    let rank = if smax > 0.0 { s.iter().filter(|&&v| v > RANK_TOL * smax).count() } else { 0 };

    if rank == 0 {
        return RotationEstimate { rotation: Matrix::<D>::identity(), rank, degenerate: true };
    }
    if rank + 1 < D {
        // Only reachable for D = 3 with rank 1: points (or their motion) are collinear.
        let k = s.imax();
        let from = Point::<D>::from_fn(|i, _| vt[(k, i)]);
        let to = Point::<D>::from_fn(|i, _| u[(i, k)]);
        return RotationEstimate { rotation: shortest_arc(&from, &to), rank, degenerate: true };
    }

    let kmin = s.imin();
    let uvt = &u * &vt;
    let sign = if uvt.determinant() < 0.0 { -1.0 } else { 1.0 };
    let mut sigma = DMatrix::<f64>::identity(D, D);
    sigma[(kmin, kmin)] = sign;
    let r = &u * sigma * &vt;
    let rotation = Matrix::<D>::from_fn(|i, j| r[(i, j)]);
    RotationEstimate { rotation, rank, degenerate: false }
}

/// Minimal rotation taking unit vector `from` onto unit vector `to`; the
/// orthogonal complement of their span is left fixed.
fn shortest_arc<const D: usize>(from: &Point<D>, to: &Point<D>) -> Matrix<D> {
    let a = from.normalize();
    let b = to.normalize();
    let cos = a.dot(&b).clamp(-1.0, 1.0);
    let w = b - a * cos;
    let wn = w.norm();
    if wn < 1e-15 {
        if cos > 0.0 {
            return Matrix::<D>::identity();
        }
        // Antiparallel: half turn in the plane of `a` and the axis least aligned with it.
        let k = a.iamin();
        let mut e = Point::<D>::zeros();
        e[k] = 1.0;
        let perp = (e - a * a.dot(&e)).normalize();
        return Matrix::<D>::identity() - 2.0 * (a * a.transpose()) - 2.0 * (perp * perp.transpose());
    }
    let w = w / wn;
    let sin = wn;
    // Rotation by angle acos(cos) in the plane spanned by (a, w).
    Matrix::<D>::identity()
        + (cos - 1.0) * (a * a.transpose() + w * w.transpose())
        + sin * (w * a.transpose() - a * w.transpose())
}

/// `t = μ_{Y_D} - R μ_Y`.
pub fn solve_translation<const D: usize>(input: &ProcrustesInput<'_, D>, rotation: &Matrix<D>) -> Point<D> {
    let my = centroid(input.y).unwrap_or_else(Point::zeros);
    let md = centroid(input.y_d).unwrap_or_else(Point::zeros);
    md - rotation * my
}

/// Rotation and translation together.
pub fn solve<const D: usize>(input: &ProcrustesInput<'_, D>) -> (RigidTransform<D>, RotationEstimate<D>) {
    let est = solve_rotation(input);
    let translation = solve_translation(input, &est.rotation);
    (RigidTransform { rotation: est.rotation, translation }, est)
}

#[allow(dead_code)]
pub(crate) fn is_proper<const D: usize>(r: &Matrix<D>) -> bool {
    (determinant(r) - 1.0).abs() < 1e-9
        && (r.transpose() * r - Matrix::<D>::identity()).norm() < 1e-9
}
