//! The registration driver: normalization, masses, one tree build, then the
//! dynamics / rigid-projection loop until the accumulated transform settles.

use crate::bhtree::BhTree;
use crate::dynamics::{gpe_points, step, total_force, SwarmState};
use crate::error::{FgaError, Result};
use crate::masses::{niv_masses, rbf_masses, spm, LandmarkSet, MassField};
use crate::normalize::{denormalize_translation, normalize_pair, NormalizationContext};
use crate::procrustes::{solve, ProcrustesInput};
use crate::types::{FgaParams, IterationRecord, Point, PointCloud, RegistrationResult, RigidTransform};

/// Non-numerical knobs of a registration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegisterOptions {
    /// Record the exact GPE before the loop and after every iteration.
    pub trace_gpe: bool,
    /// Worker threads for the force map; `0` uses the ambient rayon pool.
    pub threads: usize,
    /// Absolute level each cloud's mass field is rescaled to before the dynamics run.
    pub mass_scale: MassScale,
}

impl Default for RegisterOptions {
    fn default() -> Self {
        Self { trace_gpe: false, threads: 0, mass_scale: MassScale::default() }
    }
}

/// Rescaling applied to the computed mass fields. Only relative masses
/// within one cloud come from the mass model; the absolute level sets the
/// force magnitude (reference) and the damping response (template).
///
/// The velocity update multiplies the old velocity by `1 - Δt·η/m`, so a
/// template particle lighter than `Δt·η/2` is unstable. The template field is
/// therefore scaled so its lightest particle sits at `template_floor · Δt·η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassScale {
    /// Total reference mass.
    pub reference_total: f64,
    /// Lightest template mass, in units of `Δt·η`; must exceed 0.5.
    pub template_floor: f64,
}

impl Default for MassScale {
    fn default() -> Self {
        Self { reference_total: 8.0, template_floor: 1.0 }
    }
}

impl MassScale {
    /// Leaves both fields unchanged.
    pub const RAW: MassScale = MassScale { reference_total: 0.0, template_floor: 0.0 };

    pub fn is_raw(&self) -> bool {
        self.reference_total == 0.0 && self.template_floor == 0.0
    }

    pub fn apply(
        &self,
        reference: &MassField,
        template: &MassField,
        params: &FgaParams,
    ) -> Result<(MassField, MassField)> {
        if self.is_raw() {
            return Ok((reference.clone(), template.clone()));
        }
        if !(self.reference_total > 0.0 && self.reference_total.is_finite()) {
            return Err(FgaError::InvalidParam { name: "reference_total", value: self.reference_total });
        }
        if !(self.template_floor > 0.5 && self.template_floor.is_finite()) {
            return Err(FgaError::InvalidParam { name: "template_floor", value: self.template_floor });
        }
        let n = reference.len() as f64;
        let lightest = template.values().iter().copied().fold(f64::INFINITY, f64::min);
        let damping = if params.eta > 0.0 { params.eta } else { 1.0 };
        let k = self.template_floor * params.dt * damping / lightest;
        Ok((
            reference.with_mean(self.reference_total / n)?,
            MassField::new(template.values().iter().map(|v| v * k).collect())?,
        ))
    }
}

/// Result of running the loop in a fixed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome<const D: usize> {
    /// Accumulated transform mapping the input template onto the reference, in that same frame.
    pub transform: RigidTransform<D>,
    pub iterations: usize,
    pub converged: bool,
    pub records: Vec<IterationRecord>,
    pub gpe_initial: Option<f64>,
    pub gpe_trace: Vec<f64>,
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Runs the dynamics loop on clouds that are already in the working frame
/// with their final masses.
pub fn simulate<const D: usize>(
    reference: &PointCloud<D>,
    ref_masses: &MassField,
    template: &PointCloud<D>,
    template_masses: &MassField,
    params: &FgaParams,
    options: &RegisterOptions,
) -> Result<SimulationOutcome<D>> {
    params.validate()?;
    if reference.is_empty() || template.is_empty() {
        return Err(FgaError::EmptyCloud);
    }
    if template_masses.len() != template.len() {
        return Err(FgaError::LengthMismatch { expected: template.len(), actual: template_masses.len() });
    }
    let tree = BhTree::build(reference, ref_masses, params.max_depth)?;
    with_pool(options.threads, || {
        run_loop(&tree, reference, ref_masses, template, template_masses, params, options)
    })
}

fn run_loop<const D: usize>(
    tree: &BhTree<D>,
    reference: &PointCloud<D>,
    ref_masses: &MassField,
    template: &PointCloud<D>,
    template_masses: &MassField,
    params: &FgaParams,
    options: &RegisterOptions,
) -> Result<SimulationOutcome<D>> {
    let mut state = SwarmState::at_rest(template.points().to_vec(), template_masses.clone())?;
    let energy = |pos: &[Point<D>]| {
        gpe_points(pos, template_masses.values(), reference.points(), ref_masses.values(), params)
    };
    let gpe_initial = options.trace_gpe.then(|| energy(&state.positions));
    let mut gpe_trace = Vec::new();
    let mut records = Vec::new();
    let mut total = RigidTransform::<D>::identity();
    // T^{t-Δt}: the accumulated transform one iteration before `total`.
    let mut previous = total;
    let mut converged = false;
    let mut displaced = Vec::with_capacity(state.len());

    for index in 0..params.max_iters {
        let forces = total_force(&state, tree, params);
        let (velocities, displacements) = step(&state, &forces, params);
        displaced.clear();
        displaced.extend(state.positions.iter().zip(&displacements).map(|(p, d)| p + d));
        let (increment, _) = solve(&ProcrustesInput::new(&state.positions, &displaced)?);

        for p in &mut state.positions {
            *p = increment.apply(p);
        }
        state.velocities = velocities;
        state.rotate_velocities(&increment.rotation);

        let next = increment.compose(&total);
        let transform_delta = next.delta_sq(&previous);
        previous = total;
        total = next;

        let gpe = options.trace_gpe.then(|| energy(&state.positions));
        if let Some(e) = gpe {
            gpe_trace.push(e);
        }
        records.push(IterationRecord { index, transform_delta, gpe, rmse_to_ref: None });
        // The two-step difference needs a genuine T^{t-Δt}, so the first
        // iteration (which starts from rest) never counts as converged.
        if index > 0 && transform_delta < params.conv_tol {
            converged = true;
            break;
        }
    }

    Ok(SimulationOutcome {
        transform: total,
        iterations: records.len(),
        converged,
        records,
        gpe_initial,
        gpe_trace,
    })
}

/// Masses for one normalized cloud: NIV always, times RBF when anchors exist.
pub fn cloud_masses<const D: usize>(
    cloud: &PointCloud<D>,
    anchors: &[usize],
    params: &FgaParams,
    ctx: &NormalizationContext<D>,
) -> Result<MassField> {
    let niv = niv_masses(cloud, params.rho, ctx, params.max_depth)?;
    if anchors.is_empty() {
        return Ok(niv);
    }
    let rbf = rbf_masses(cloud, anchors, params.sigma)?;
    spm(&niv, &rbf)
}

/// Everything prepared before the loop starts; exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct PreparedPair<const D: usize> {
    pub reference: PointCloud<D>,
    pub template: PointCloud<D>,
    pub ctx: NormalizationContext<D>,
    pub reference_masses: MassField,
    pub template_masses: MassField,
}

/// Normalizes the pair and computes the working masses.
pub fn prepare<const D: usize>(
    x: &PointCloud<D>,
    y: &PointCloud<D>,
    landmarks: Option<&LandmarkSet>,
    params: &FgaParams,
    options: &RegisterOptions,
) -> Result<PreparedPair<D>> {
    params.validate()?;
    if x.is_empty() || y.is_empty() {
        return Err(FgaError::EmptyCloud);
    }
    let (a, b) = params.norm_range;
    let (xn, yn, ctx) = normalize_pair(x, y, a, b)?;
    let (t_anchors, r_anchors) = match landmarks {
        Some(l) => (l.template_anchors(), l.reference_anchors()),
        None => (Vec::new(), Vec::new()),
    };
    let mx = match x.masses() {
        Some(m) => MassField::new(m.to_vec())?,
        None => cloud_masses(&xn, &r_anchors, params, &ctx)?,
    };
    let my = match y.masses() {
        Some(m) => MassField::new(m.to_vec())?,
        None => cloud_masses(&yn, &t_anchors, params, &ctx)?,
    };
    let (mx, my) = options.mass_scale.apply(&mx, &my, params)?;
    Ok(PreparedPair { reference: xn, template: yn, ctx, reference_masses: mx, template_masses: my })
}

/// Registers template `y` onto reference `x`. The returned transform maps
/// original template coordinates into original reference coordinates.
///
/// Per-point masses already attached to a cloud take precedence over the
/// computed NIV/RBF field for that cloud.
pub fn register<const D: usize>(
    x: &PointCloud<D>,
    y: &PointCloud<D>,
    landmarks: Option<&LandmarkSet>,
    params: &FgaParams,
    options: &RegisterOptions,
) -> Result<RegistrationResult<D>> {
    let prep = prepare(x, y, landmarks, params, options)?;
    let out = simulate(
        &prep.reference,
        &prep.reference_masses,
        &prep.template,
        &prep.template_masses,
        params,
        options,
    )?;
    Ok(RegistrationResult {
        transform: denormalize_translation(&out.transform, &prep.ctx),
        iterations: out.iterations,
        gpe_trace: out.gpe_trace,
        gpe_initial: out.gpe_initial,
        converged: out.converged,
        records: out.records,
    })
}

/// Outcome of one consecutive-frame registration.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome<const D: usize> {
    /// Maps frame `i` coordinates into frame `i + 1` coordinates.
    pub transform: RigidTransform<D>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when registration failed and the identity was substituted.
    pub error: Option<FgaError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult<const D: usize> {
    pub pairs: Vec<PairOutcome<D>>,
    /// Pose of every frame in frame-0 coordinates (maps frame-k points into frame 0).
    pub trajectory: Vec<RigidTransform<D>>,
}

/// Registers every frame onto its successor and chains the results into a trajectory.
pub fn register_sequence<const D: usize>(
    frames: &[PointCloud<D>],
    params: &FgaParams,
    options: &RegisterOptions,
) -> Result<SequenceResult<D>> {
    if frames.len() < 2 {
        return Err(FgaError::TooFewFrames { required: 2, actual: frames.len() });
    }
    params.validate()?;
    let pairs: Vec<PairOutcome<D>> = frames
        .windows(2)
        .map(|w| match register(&w[1], &w[0], None, params, options) {
            Ok(r) => PairOutcome {
                transform: r.transform,
                iterations: r.iterations,
                converged: r.converged,
                error: None,
            },
            Err(e) => PairOutcome {
                transform: RigidTransform::identity(),
                iterations: 0,
                converged: false,
                error: Some(e),
            },
        })
        .collect();
    Ok(SequenceResult { trajectory: compose_trajectory(&pairs), pairs })
}

/// `P_0 = I`, `P_{k+1} = P_k ∘ T_k⁻¹`.
pub fn compose_trajectory<const D: usize>(pairs: &[PairOutcome<D>]) -> Vec<RigidTransform<D>> {
    let mut poses = Vec::with_capacity(pairs.len() + 1);
    let mut pose = RigidTransform::<D>::identity();
    poses.push(pose);
    for p in pairs {
        pose = pose.compose(&p.transform.inverse());
        poses.push(pose);
    }
    poses
}
