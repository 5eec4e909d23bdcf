//! Shared domain types: point clouds, rigid transforms, parameters and results.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::{FgaError, Result};

/// A position in `D`-dimensional space.
pub type Point<const D: usize> = SVector<f64, D>;

/// A `D x D` matrix.
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

/// Tolerance used when checking rotation invariants.
pub const ROTATION_TOL: f64 = 1e-9;

/// Ordered set of `D`-dimensional positions with optional per-point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<const D: usize> {
    points: Vec<Point<D>>,
    masses: Option<Vec<f64>>,
}

impl<const D: usize> PointCloud<D> {
    pub fn new(points: Vec<Point<D>>) -> Self {
        Self { points, masses: None }
    }

    pub fn with_masses(points: Vec<Point<D>>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != points.len() {
            return Err(FgaError::LengthMismatch { expected: points.len(), actual: masses.len() });
        }
        if let Some((index, &value)) =
            masses.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(FgaError::InvalidMass { index, value });
        }
        Ok(Self { points, masses: Some(masses) })
    }

    /// Builds a cloud from rows of `D` coordinates.
    pub fn from_rows(rows: &[[f64; D]]) -> Self {
        Self::new(rows.iter().map(|r| Point::<D>::from(*r)).collect())
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn masses(&self) -> Option<&[f64]> {
        self.masses.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub const fn dim(&self) -> usize {
        D
    }

    pub fn into_points(self) -> Vec<Point<D>> {
        self.points
    }

    pub fn centroid(&self) -> Option<Point<D>> {
        centroid(&self.points)
    }

    /// Returns a copy of this cloud with `transform` applied to every point.
    pub fn transformed(&self, transform: &RigidTransform<D>) -> Self {
        Self {
            points: self.points.iter().map(|p| transform.apply(p)).collect(),
            masses: self.masses.clone(),
        }
    }

    /// Component-wise bounding box, `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<(Point<D>, Point<D>)> {
        bounding_box(&self.points)
    }
}

pub(crate) fn centroid<const D: usize>(points: &[Point<D>]) -> Option<Point<D>> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Point::<D>::zeros(), |acc, p| acc + p);
    Some(sum / points.len() as f64)
}

pub(crate) fn bounding_box<const D: usize>(points: &[Point<D>]) -> Option<(Point<D>, Point<D>)> {
    let first = points.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for p in &points[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    Some((lo, hi))
}

pub(crate) fn to_dynamic<const D: usize>(m: &Matrix<D>) -> DMatrix<f64> {
    DMatrix::from_fn(D, D, |i, j| m[(i, j)])
}

pub(crate) fn determinant<const D: usize>(m: &Matrix<D>) -> f64 {
    to_dynamic(m).determinant()
}

/// Rigid motion `p -> R p + t` with `R` a proper rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<const D: usize> {
    pub rotation: Matrix<D>,
    pub translation: Point<D>,
}

impl<const D: usize> Default for RigidTransform<D> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<const D: usize> RigidTransform<D> {
    pub fn identity() -> Self {
        Self { rotation: Matrix::<D>::identity(), translation: Point::<D>::zeros() }
    }

    /// Validating constructor: `rotation` must be orthonormal with determinant +1.
    pub fn new(rotation: Matrix<D>, translation: Point<D>) -> Result<Self> {
        let ortho_err = (rotation.transpose() * rotation - Matrix::<D>::identity()).norm();
        let det = determinant(&rotation);
        if ortho_err > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(FgaError::NotARotation { ortho_err, det });
        }
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(translation: Point<D>) -> Self {
        Self { rotation: Matrix::<D>::identity(), translation }
    }

    pub fn apply(&self, p: &Point<D>) -> Point<D> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Row-major `D x (D+1)` matrix `[R | t]`.
    pub fn to_rows(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(D * (D + 1));
        for i in 0..D {
            for j in 0..D {
                out.push(self.rotation[(i, j)]);
            }
            out.push(self.translation[i]);
        }
        out
    }

    /// Inverse of [`RigidTransform::to_rows`]; the rotation block is validated.
    pub fn from_rows(values: &[f64]) -> Result<Self> {
        if values.len() != D * (D + 1) {
            return Err(FgaError::LengthMismatch { expected: D * (D + 1), actual: values.len() });
        }
        let rotation = Matrix::<D>::from_fn(|i, j| values[i * (D + 1) + j]);
        let translation = Point::<D>::from_fn(|i, _| values[i * (D + 1) + D]);
        Self::new(rotation, translation)
    }

    /// Squared Frobenius norm of the difference of the two `[R | t]` matrices.
    pub fn delta_sq(&self, other: &Self) -> f64 {
        (self.rotation - other.rotation).norm_squared()
            + (self.translation - other.translation).norm_squared()
    }

    /// Distance of `R^T R` from the identity and `|det R - 1|`.
    pub fn rotation_error(&self) -> (f64, f64) {
        let ortho = (self.rotation.transpose() * self.rotation - Matrix::<D>::identity()).norm();
        (ortho, (determinant(&self.rotation) - 1.0).abs())
    }

    pub fn is_proper(&self) -> bool {
        let (o, d) = self.rotation_error();
        o <= ROTATION_TOL && d <= ROTATION_TOL
    }
}

/// Algorithm parameters. Lengths are expressed in the normalized frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgaParams {
    /// Gravitational constant.
    pub g: f64,
    /// Force softening length.
    pub epsilon: f64,
    /// Energy dissipation rate.
    pub eta: f64,
    /// Time integration step.
    pub dt: f64,
    /// Multipole acceptance threshold.
    pub theta: f64,
    /// RBF kernel width.
    pub sigma: f64,
    /// NIV lattice cells per axis.
    pub rho: usize,
    /// Tree depth cap.
    pub max_depth: usize,
    /// Normalization range `(a, b)`.
    pub norm_range: (f64, f64),
    /// Stop once the squared Frobenius change of the accumulated transform
    /// over two iterations drops below this.
    pub conv_tol: f64,
    pub max_iters: usize,
}

impl Default for FgaParams {
    fn default() -> Self {
        default_params()
    }
}

pub fn default_params() -> FgaParams {
    FgaParams {
        g: 66.7,
        epsilon: 0.2,
        eta: 0.2,
        dt: 0.1,
        theta: 0.6,
        sigma: 0.03,
        rho: 16,
        max_depth: 20,
        norm_range: (-5.0, 5.0),
        conv_tol: 1e-4,
        max_iters: 100,
    }
}

impl FgaParams {
    /// Checks every field, reporting the first violation in declaration order.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, value: f64) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(FgaError::InvalidParam { name, value })
            }
        }
        let p = self;
        check(p.g.is_finite() && p.g > 0.0, "G", p.g)?;
        check(p.epsilon.is_finite() && p.epsilon >= 0.0, "epsilon", p.epsilon)?;
        check((0.0..1.0).contains(&p.eta), "eta", p.eta)?;
        check(p.dt.is_finite() && p.dt > 0.0, "dt", p.dt)?;
        check((0.0..=1.0).contains(&p.theta), "theta", p.theta)?;
        check(p.sigma.is_finite() && p.sigma > 0.0, "sigma", p.sigma)?;
        check(p.rho >= 2, "rho", p.rho as f64)?;
        check(p.max_depth >= 1, "max_depth", p.max_depth as f64)?;
        let (a, b) = p.norm_range;
        check(a.is_finite(), "norm_range.a", a)?;
        check(b.is_finite() && b > a, "norm_range.b", b)?;
        check(p.conv_tol.is_finite() && p.conv_tol > 0.0, "conv_tol", p.conv_tol)?;
        check(p.max_iters >= 1, "max_iters", p.max_iters as f64)?;
        Ok(())
    }
}

/// Per-iteration diagnostics of the registration loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    /// `‖T^{t+Δt} - T^{t-Δt}‖²_F`: accumulated transform after this
    /// iteration against the one before the previous iteration.
    pub transform_delta: f64,
    pub gpe: Option<f64>,
    pub rmse_to_ref: Option<f64>,
}

/// Outcome of a registration run, expressed in the original (unnormalized) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult<const D: usize> {
    pub transform: RigidTransform<D>,
    pub iterations: usize,
    /// One GPE value per iteration when GPE tracing is enabled, empty otherwise.
    pub gpe_trace: Vec<f64>,
    /// GPE of the starting configuration when GPE tracing is enabled.
    pub gpe_initial: Option<f64>,
    pub converged: bool,
    pub records: Vec<IterationRecord>,
}
