//! Per-point mass fields: RBF interpolation around landmarks, the normalized
//! intrinsic volume (NIV) density measure, their Hadamard product (SPM), and
//! externally supplied weights.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{FgaError, Result};
use crate::normalize::NormalizationContext;
use crate::types::PointCloud;

/// Lower bound applied to every computed mass.
pub const MASS_FLOOR: f64 = 1e-6;

/// Collocation target value at RBF anchors.
pub const RBF_ANCHOR_VALUE: f64 = 1.0;

/// Kernel matrices with a reciprocal condition estimate below this are rejected.
const MIN_RCOND: f64 = 1e-12;

/// Prior correspondences as `(template_index, reference_index)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LandmarkSet {
    pairs: Vec<(usize, usize)>,
}

impl LandmarkSet {
    /// Checks bounds against the template (`m`) and reference (`n`) sizes and
    /// rejects repeated template or reference indices.
    pub fn new(pairs: Vec<(usize, usize)>, m: usize, n: usize) -> Result<Self> {
        let mut seen_t = HashSet::new();
        let mut seen_r = HashSet::new();
        for (index, &(ti, ri)) in pairs.iter().enumerate() {
            if ti >= m || ri >= n || !seen_t.insert(ti) || !seen_r.insert(ri) {
                return Err(FgaError::InvalidLandmark { index });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn template_anchors(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn reference_anchors(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Strictly positive, finite per-point values.
#[derive(Debug, Clone, PartialEq)]
pub struct MassField {
    values: Vec<f64>,
}

impl MassField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(FgaError::InvalidMass { index, value });
        }
        Ok(Self { values })
    }

    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// Uniformly rescales the field so that its mean equals `target`.
    pub fn with_mean(&self, target: f64) -> Result<Self> {
        let k = target / self.mean();
        Self::new(self.values.iter().map(|v| v * k).collect())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn gaussian(dist_sq: f64, sigma: f64) -> f64 {
    (-dist_sq / (sigma * sigma)).exp()
}

/// RBF mass interpolation with target value [`RBF_ANCHOR_VALUE`] at the anchors.
pub fn rbf_masses<const D: usize>(
    cloud: &PointCloud<D>,
    anchors: &[usize],
    sigma: f64,
) -> Result<MassField> {
    rbf_masses_with_target(cloud, anchors, sigma, RBF_ANCHOR_VALUE)
}

/// Gaussian-kernel RBF interpolant `B(p) = Σ λ_k Φ(|p - c_k|)` whose weights
/// solve the collocation system `B(c_k) = target`. With no anchors every
/// value is 1.
pub fn rbf_masses_with_target<const D: usize>(
    cloud: &PointCloud<D>,
    anchors: &[usize],
    sigma: f64,
    target: f64,
) -> Result<MassField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(FgaError::InvalidParam { name: "sigma", value: sigma });
    }
    let pts = cloud.points();
    if anchors.is_empty() {
        return MassField::uniform(pts.len(), 1.0);
    }
    if let Some(index) = anchors.iter().position(|&i| i >= pts.len()) {
        return Err(FgaError::InvalidLandmark { index });
    }

    let m = anchors.len();
    let kernel = DMatrix::from_fn(m, m, |i, j| {
        gaussian((pts[anchors[i]] - pts[anchors[j]]).norm_squared(), sigma)
    });
    let svd = kernel.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > MIN_RCOND * smax) {
        return Err(FgaError::SingularCollocation);
    }
    let rhs = DVector::from_element(m, target);
    let lambda = kernel.lu().solve(&rhs).ok_or(FgaError::SingularCollocation)?;

    let values = pts
        .iter()
        .map(|p| {
            let b: f64 = anchors
                .iter()
                .zip(lambda.iter())
                .map(|(&k, lam)| lam * gaussian((p - pts[k]).norm_squared(), sigma))
                .sum();
            b.max(MASS_FLOOR)
        })
        .collect();
    MassField::new(values)
}

/// Breakdown of the lattice quantities behind [`niv_masses`].
#[derive(Debug, Clone, PartialEq)]
pub struct NivLattice {
    pub cell_volume: f64,
    pub ball_volume: f64,
    /// Summed volume of all non-empty cells.
    pub occupied_volume: f64,
    /// Lattice cell of each point (flattened index).
    pub cell_of_point: Vec<usize>,
    /// Point count per occupied cell.
    pub counts: HashMap<usize, usize>,
}

/// Volume of a `D`-ball; only 2D and 3D are meaningful here.
fn ball_volume(dim: usize, radius: f64) -> f64 {
    match dim {
        2 => PI * radius * radius,
        3 => 4.0 / 3.0 * PI * radius.powi(3),
        d => {
            // Generic formula, used only if instantiated for other D.
            let half = d as f64 / 2.0;
            PI.powf(half) / gamma_half_integer(d + 2) * radius.powi(d as i32)
        }
    }
}

/// Γ(k/2) for positive integer k.
fn gamma_half_integer(k: usize) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2),
    }
}

/// Assigns each point to its cell of the `rho^D` lattice over `[a, b]^D`.
pub fn niv_lattice<const D: usize>(
    cloud: &PointCloud<D>,
    rho: usize,
    a: f64,
    b: f64,
    max_depth: usize,
) -> NivLattice {
    let edge = (b - a) / rho as f64;
    let cell_volume = edge.powi(D as i32);
    let radius = (b - a) / (2.0 * max_depth as f64 * rho as f64);
    let ball = ball_volume(D, radius);

    let mut counts: HashMap<usize, usize> = HashMap::new();
    let cell_of_point: Vec<usize> = cloud
        .points()
        .iter()
        .map(|p| {
            let mut flat = 0usize;
            for k in (0..D).rev() {
                let idx = ((p[k] - a) / edge).floor();
                let idx = if idx.is_finite() { idx.clamp(0.0, (rho - 1) as f64) as usize } else { 0 };
                flat = flat * rho + idx;
            }
            *counts.entry(flat).or_insert(0) += 1;
            flat
        })
        .collect();
    let occupied_volume = counts.len() as f64 * cell_volume;
    NivLattice { cell_volume, ball_volume: ball, occupied_volume, cell_of_point, counts }
}

/// Normalized intrinsic volume per point:
/// `N = (V_union / (V_cell · V_occupied))^-1` where the union volume of the
/// balls in a cell is approximated by `min(n · V_ball, V_cell)`.
pub fn niv_masses<const D: usize>(
    cloud: &PointCloud<D>,
    rho: usize,
    ctx: &NormalizationContext<D>,
    max_depth: usize,
) -> Result<MassField> {
    if rho < 2 {
        return Err(FgaError::InvalidParam { name: "rho", value: rho as f64 });
    }
    if max_depth < 1 {
        return Err(FgaError::InvalidParam { name: "max_depth", value: max_depth as f64 });
    }
    let lat = niv_lattice(cloud, rho, ctx.a, ctx.b, max_depth);
    let values = lat
        .cell_of_point
        .iter()
        .map(|cell| {
            let n = lat.counts[cell] as f64;
            let union = (n * lat.ball_volume).min(lat.cell_volume);
            let v = lat.cell_volume * lat.occupied_volume / union;
            v.max(MASS_FLOOR)
        })
        .collect();
    MassField::new(values)
}

/// Smooth-particle mass: element-wise product of NIV and RBF fields.
pub fn spm(niv: &MassField, rbf: &MassField) -> Result<MassField> {
    if niv.len() != rbf.len() {
        return Err(FgaError::LengthMismatch { expected: niv.len(), actual: rbf.len() });
    }
    MassField::new(niv.values.iter().zip(&rbf.values).map(|(n, b)| n * b).collect())
}

/// Adopts externally computed per-point weights, flooring at [`MASS_FLOOR`].
pub fn external_masses<const D: usize>(
    cloud: &PointCloud<D>,
    weights: &[f64],
) -> Result<MassField> {
    if weights.len() != cloud.len() {
        return Err(FgaError::LengthMismatch { expected: cloud.len(), actual: weights.len() });
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
        return Err(FgaError::NonFiniteWeight { index, value });
    }
    MassField::new(weights.iter().map(|w| w.max(MASS_FLOOR)).collect())
}
