//! One step of collisionless, dissipative dynamics for the template swarm
//! and the gravitational potential energy diagnostic.

use rayon::prelude::*;

use crate::bhtree::BhTree;
use crate::error::{FgaError, Result};
use crate::masses::MassField;
use crate::types::{FgaParams, Matrix, Point, PointCloud};

/// Positions, velocities and masses of the moving template particles.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<const D: usize> {
    pub positions: Vec<Point<D>>,
    pub velocities: Vec<Point<D>>,
    pub masses: MassField,
}

impl<const D: usize> SwarmState<D> {
    /// A swarm at rest.
    pub fn at_rest(positions: Vec<Point<D>>, masses: MassField) -> Result<Self> {
        let velocities = vec![Point::<D>::zeros(); positions.len()];
        Self::new(positions, velocities, masses)
    }

    pub fn new(positions: Vec<Point<D>>, velocities: Vec<Point<D>>, masses: MassField) -> Result<Self> {
        let m = positions.len();
        if velocities.len() != m {
            return Err(FgaError::LengthMismatch { expected: m, actual: velocities.len() });
        }
        if masses.len() != m {
            return Err(FgaError::LengthMismatch { expected: m, actual: masses.len() });
        }
        Ok(Self { positions, velocities, masses })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(self.masses.values())
            .map(|(v, m)| 0.5 * m * v.norm_squared())
            .sum()
    }

    /// Re-expresses velocities after a rigid rotation of the swarm.
    pub fn rotate_velocities(&mut self, rotation: &Matrix<D>) {
        for v in &mut self.velocities {
            *v = rotation * *v;
        }
    }
}

/// Gravitational plus dissipative force on every template particle.
///
/// Rows are independent; they are evaluated on the current rayon pool.
pub fn total_force<const D: usize>(
    state: &SwarmState<D>,
    tree: &BhTree<D>,
    params: &FgaParams,
) -> Vec<Point<D>> {
    state
        .positions
        .par_iter()
        .zip(state.velocities.par_iter())
        .zip(state.masses.values().par_iter())
        .map(|((p, v), &m)| tree.bh_force(p, m, params) - v * params.eta)
        .collect()
}

/// Euler-Cromer update: new velocity first, displacement from the new velocity.
pub fn step<const D: usize>(
    state: &SwarmState<D>,
    forces: &[Point<D>],
    params: &FgaParams,
) -> (Vec<Point<D>>, Vec<Point<D>>) {
    let dt = params.dt;
    state
        .velocities
        .iter()
        .zip(forces)
        .zip(state.masses.values())
        .map(|((v, f), &m)| {
            let v_new = v + f * (dt / m);
            (v_new, v_new * dt)
        })
        .unzip()
}

/// `E = -G Σ_ij m_i m_j / (|y_i - x_j| + ε)` over the current template
/// positions. Exact and `O(MN)`; diagnostic use only.
pub fn gpe<const D: usize>(
    template: &SwarmState<D>,
    reference: &PointCloud<D>,
    ref_masses: &MassField,
    params: &FgaParams,
) -> f64 {
    gpe_points(&template.positions, template.masses.values(), reference.points(), ref_masses.values(), params)
}

pub(crate) fn gpe_points<const D: usize>(
    template: &[Point<D>],
    template_masses: &[f64],
    reference: &[Point<D>],
    ref_masses: &[f64],
    params: &FgaParams,
) -> f64 {
    let sum: f64 = template
        .par_iter()
        .zip(template_masses.par_iter())
        .map(|(y, &my)| {
            reference
                .iter()
                .zip(ref_masses)
                .map(|(x, &mx)| my * mx / ((y - x).norm() + params.epsilon))
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    -params.g * sum
}
