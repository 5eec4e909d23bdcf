use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fga::bench::{run_trial, to_unit_extent, TrialSpec};
use fga::bhtree::BhTree;
use fga::io::{
    apply_param, format_row, load_cloud, load_landmarks, load_weights, parse_config, parse_poses,
    parse_transform_values, AnyCloud, Record,
};
use fga::masses::{external_masses, LandmarkSet, MassField};
use fga::metrics::{angular_deviation, evaluate, success_rate, total_error, translation_error, DEFAULT_THRESHOLDS};
use fga::normalize::normalize_pair;
use fga::registration::{cloud_masses, compose_trajectory, MassScale, PairOutcome};
use fga::synth::{sample_shape, RotationSampling, Shape};
use fga::{register, FgaError, FgaParams, PointCloud, RegisterOptions, Result, RigidTransform};

#[derive(Parser)]
#[command(name = "fga", version, about = "Rigid point set registration by simulated gravitation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a template cloud onto a reference cloud.
    Register(RegisterArgs),
    /// Seeded synthetic construct-and-recover trials.
    Benchmark(BenchmarkArgs),
    /// Frame-to-frame registration of a sequence and the composed trajectory.
    Odometry(OdometryArgs),
    /// Write the per-point mass field of one cloud.
    MassesDump(MassesArgs),
    /// Write the tree built over one cloud.
    TreeDump(TreeArgs),
    /// Compare an estimated transform with a ground truth.
    Metrics(MetricsArgs),
}

/// Shared parameters. Values come from defaults, then `--config`, then flags.
#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "G", visible_alias = "g")]
    g: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    norm_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    norm_b: Option<f64>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Total reference mass after rescaling.
    #[arg(long)]
    mass_reference_total: Option<f64>,
    /// Lightest template mass after rescaling, in units of dt*eta.
    #[arg(long)]
    mass_template_floor: Option<f64>,
    /// Use the mass fields exactly as computed.
    #[arg(long)]
    raw_masses: bool,
    /// Worker threads for the force map (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Record the exact GPE before and after every iteration.
    #[arg(long)]
    trace_gpe: bool,
    /// Leave wall-clock timings out of written files (they still go to stderr).
    #[arg(long)]
    omit_timing: bool,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

struct Settings {
    params: FgaParams,
    options: RegisterOptions,
    omit_timing: bool,
    extra: BTreeMap<String, String>,
}

impl Common {
    fn resolve(&self) -> Result<Settings> {
        let mut params = FgaParams::default();
        let mut options = RegisterOptions::default();
        let mut omit_timing = self.omit_timing;
        let mut extra = BTreeMap::new();
        if let Some(path) = &self.config {
            for (k, v) in parse_config(&fs::read_to_string(path)?)? {
                if apply_param(&mut params, &k, &v)? {
                    continue;
                }
                let num = || v.parse::<f64>().map_err(|_| bad_value(&k, &v));
                let flag = || v.parse::<bool>().map_err(|_| bad_value(&k, &v));
                match k.as_str() {
                    "threads" => options.threads = v.parse().map_err(|_| bad_value(&k, &v))?,
                    "trace_gpe" => options.trace_gpe = flag()?,
                    "omit_timing" => omit_timing = omit_timing || flag()?,
                    "mass_reference_total" => options.mass_scale.reference_total = num()?,
                    "mass_template_floor" => options.mass_scale.template_floor = num()?,
                    "raw_masses" if flag()? => options.mass_scale = MassScale::RAW,
                    _ => {
                        extra.insert(k, v);
                    }
                }
            }
        }
        let set = |p: &mut FgaParams, k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                apply_param(p, k, &v)?;
            }
            Ok(())
        };
        set(&mut params, "g", self.g.map(|v| v.to_string()))?;
        set(&mut params, "epsilon", self.epsilon.map(|v| v.to_string()))?;
        set(&mut params, "eta", self.eta.map(|v| v.to_string()))?;
        set(&mut params, "dt", self.dt.map(|v| v.to_string()))?;
        set(&mut params, "theta", self.theta.map(|v| v.to_string()))?;
        set(&mut params, "sigma", self.sigma.map(|v| v.to_string()))?;
        set(&mut params, "rho", self.rho.map(|v| v.to_string()))?;
        set(&mut params, "max_depth", self.max_depth.map(|v| v.to_string()))?;
        set(&mut params, "norm_a", self.norm_a.map(|v| v.to_string()))?;
        set(&mut params, "norm_b", self.norm_b.map(|v| v.to_string()))?;
        set(&mut params, "conv_tol", self.conv_tol.map(|v| v.to_string()))?;
        set(&mut params, "max_iters", self.max_iters.map(|v| v.to_string()))?;
        if let Some(v) = self.mass_reference_total {
            options.mass_scale.reference_total = v;
        }
        if let Some(v) = self.mass_template_floor {
            options.mass_scale.template_floor = v;
        }
        if self.raw_masses {
            options.mass_scale = MassScale::RAW;
        }
        if let Some(t) = self.threads {
            options.threads = t;
        }
        options.trace_gpe |= self.trace_gpe;
        params.validate()?;
        Ok(Settings { params, options, omit_timing, extra })
    }

    /// A path given on the command line, else one named in the config file.
    fn path(&self, flag: &Option<PathBuf>, key: &str, settings: &Settings) -> Option<PathBuf> {
        flag.clone().or_else(|| settings.extra.get(key).map(PathBuf::from))
    }
}

fn bad_value(key: &str, value: &str) -> FgaError {
    FgaError::Parse { line: 0, reason: format!("{key}: bad value {value:?}") }
}

fn required(path: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.ok_or_else(|| FgaError::Io(format!("missing {what} path")))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Args)]
struct RegisterArgs {
    /// Reference (static) cloud.
    #[arg(long, short = 'x')]
    reference: Option<PathBuf>,
    /// Template (moving) cloud.
    #[arg(long, short = 'y')]
    template: Option<PathBuf>,
    /// `template_index reference_index` pairs.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Per-point weights replacing the computed reference masses.
    #[arg(long)]
    reference_weights: Option<PathBuf>,
    /// Per-point weights replacing the computed template masses.
    #[arg(long)]
    template_weights: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn with_weights<const D: usize>(cloud: PointCloud<D>, weights: Option<PathBuf>) -> Result<PointCloud<D>> {
    match weights {
        None => Ok(cloud),
        Some(p) => {
            let m = external_masses(&cloud, &load_weights(&p)?)?;
            PointCloud::with_masses(cloud.into_points(), m.into_values())
        }
    }
}

fn register_pair<const D: usize>(
    x: PointCloud<D>,
    y: PointCloud<D>,
    args: &RegisterArgs,
    s: &Settings,
) -> Result<(Record, bool)> {
    let landmarks = match args.common.path(&args.landmarks, "landmarks", s) {
        Some(p) => Some(load_landmarks(&p, y.len(), x.len())?),
        None => None,
    };
    let x = with_weights(x, args.common.path(&args.reference_weights, "reference_weights", s))?;
    let y = with_weights(y, args.common.path(&args.template_weights, "template_weights", s))?;
    let start = Instant::now();
    let res = register(&x, &y, landmarks.as_ref(), &s.params, &s.options)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    eprintln!("wall_ms {wall_ms:.3}");
    let mut rec = Record::new();
    rec.push_values("transform", &res.transform.to_rows())
        .push("iterations", res.iterations)
        .push("converged", res.converged);
    if !s.omit_timing {
        rec.push("wall_ms", format!("{wall_ms:.3}"));
    }
    if let Some(e) = res.gpe_initial {
        rec.push("gpe_initial", format!("{e:?}"));
        rec.push_values("gpe_trace", &res.gpe_trace);
    }
    Ok((rec, res.converged))
}

fn cmd_register(args: RegisterArgs) -> Result<ExitCode> {
    let s = args.common.resolve()?;
    let x = load_cloud(&required(args.common.path(&args.reference, "reference", &s), "reference")?)?;
    let y = load_cloud(&required(args.common.path(&args.template, "template", &s), "template")?)?;
    let (rec, converged) = match (x, y) {
        (AnyCloud::D2(x), AnyCloud::D2(y)) => register_pair(x, y, &args, &s)?,
        (AnyCloud::D3(x), AnyCloud::D3(y)) => register_pair(x, y, &args, &s)?,
        (x, y) => return Err(FgaError::DimensionMismatch { expected: x.dim(), actual: y.dim() }),
    };
    emit(&args.common.output, &rec.render())?;
    Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampling {
    /// Random axis, angle uniform up to the bound.
    AxisAngle,
    /// Independent angles about x, y and z, each uniform up to the bound.
    Euler,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Built-in shape: blob, cube, sphere or corner.
    #[arg(long, default_value = "blob")]
    shape: String,
    /// Use this 3D cloud instead of a built-in shape.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Points sampled on a built-in shape.
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "axis-angle")]
    sampling: Sampling,
    /// Rotation bound in degrees.
    #[arg(long, default_value_t = 60.0)]
    max_angle_deg: f64,
    /// Translation bound as a fraction of the unit extent.
    #[arg(long, default_value_t = 0.1)]
    max_translation: f64,
    /// Gaussian noise standard deviation (0.02 when given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.02")]
    gaussian_noise: Option<f64>,
    /// Uniform outliers appended, as a fraction of the template size.
    #[arg(long, default_value_t = 0.0)]
    uniform_noise: f64,
    /// Fraction of the template removed as one chunk.
    #[arg(long, default_value_t = 0.0)]
    crop: f64,
    /// Voxel edge for downsampling before the pair is built.
    #[arg(long, default_value_t = 0.0)]
    voxel: f64,
    /// Random landmark correspondences per trial.
    #[arg(long, default_value_t = 0)]
    landmarks: usize,
    /// RMSE threshold for the success rate.
    #[arg(long, default_value_t = 0.01)]
    rmse_threshold: f64,
    #[command(flatten)]
    common: Common,
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<ExitCode> {
    let s = args.common.resolve()?;
    let base = match args.common.path(&args.input, "input", &s) {
        Some(p) => load_cloud(&p)?.into_3d()?,
        None => {
            let shape: Shape = args.shape.parse()?;
            sample_shape(shape, args.points, &mut ChaCha8Rng::seed_from_u64(args.seed))
        }
    };
    let base = to_unit_extent(&base);
    let max_angle = args.max_angle_deg.to_radians();
    let spec = TrialSpec {
        sampling: match args.sampling {
            Sampling::AxisAngle => RotationSampling::AxisAngle { max_angle },
            Sampling::Euler => RotationSampling::Euler { max_angle },
        },
        max_translation: args.max_translation,
        gaussian_noise: args.gaussian_noise.unwrap_or(0.0),
        uniform_noise: args.uniform_noise,
        crop: args.crop,
        voxel: args.voxel,
        landmarks: args.landmarks,
    };

    let mut out = String::from("# trial seed rmse angular_deg translation_err total_err iterations converged");
    for t in DEFAULT_THRESHOLDS {
        out.push(' ');
        out.push_str(&t.label());
    }
    if !s.omit_timing {
        out.push_str(" wall_ms");
    }
    out.push('\n');
    let mut by_rmse = Vec::new();
    let mut by_gate: Vec<Vec<bool>> = vec![Vec::new(); DEFAULT_THRESHOLDS.len()];
    let mut failures = 0usize;
    for i in 0..args.trials {
        match run_trial(&base, &spec, args.seed, i, &s.params, &s.options, &DEFAULT_THRESHOLDS) {
            Ok(o) => {
                let r = &o.report;
                let mut row = format!(
                    "{} {} {:e} {:e} {:e} {:e} {} {}",
                    i,
                    o.seed,
                    o.rmse(),
                    r.angular_deg,
                    r.translation_err,
                    r.total_err,
                    o.iterations,
                    o.converged
                );
                for (k, (_, ok)) in r.success_at.iter().enumerate() {
                    row.push_str(&format!(" {ok}"));
                    by_gate[k].push(*ok);
                }
                if !s.omit_timing {
                    row.push_str(&format!(" {:.3}", o.wall_ms));
                }
                eprintln!("trial {i} wall_ms {:.3}", o.wall_ms);
                out.push_str(&row);
                out.push('\n');
                by_rmse.push(o.rmse() < args.rmse_threshold);
            }
            Err(e) => {
                failures += 1;
                by_rmse.push(false);
                by_gate.iter_mut().for_each(|g| g.push(false));
                out.push_str(&format!("{i} error {}\n", e.to_string().replace(' ', "_")));
            }
        }
    }
    let mut agg = Record::new();
    agg.push("trials", args.trials)
        .push("failed", failures)
        .push(&format!("success_rmse{}", args.rmse_threshold), format!("{:?}", success_rate(&by_rmse)));
    for (t, g) in DEFAULT_THRESHOLDS.iter().zip(&by_gate) {
        agg.push(&format!("rate_{}", t.label()), format!("{:?}", success_rate(g)));
    }
    out.push_str(&agg.render());
    emit(&args.common.output, &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct OdometryArgs {
    /// Frame clouds in order.
    #[arg(long, num_args = 1..)]
    frames: Vec<PathBuf>,
    /// Directory whose cloud files are used in lexicographic order.
    #[arg(long)]
    frames_dir: Option<PathBuf>,
    /// Ground-truth poses, one row-major matrix per frame (frame k into frame 0).
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn frame_paths(args: &OdometryArgs) -> Result<Vec<PathBuf>> {
    let mut paths = args.frames.clone();
    if let Some(dir) = &args.frames_dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| fga::io::CloudFormat::from_path(p).is_ok())
            .collect();
        found.sort();
        paths.extend(found);
    }
    Ok(paths)
}

fn odometry<const D: usize>(
    frames: Vec<PointCloud<D>>,
    gt: Option<Vec<RigidTransform<D>>>,
    s: &Settings,
) -> Result<String> {
    if let Some(g) = &gt {
        if g.len() != frames.len() {
            return Err(FgaError::LengthMismatch { expected: frames.len(), actual: g.len() });
        }
    }
    let mut pairs: Vec<PairOutcome<D>> = Vec::new();
    let mut times = Vec::new();
    for w in frames.windows(2) {
        let start = Instant::now();
        let p = match register(&w[1], &w[0], None, &s.params, &s.options) {
            Ok(r) => PairOutcome { transform: r.transform, iterations: r.iterations, converged: r.converged, error: None },
            Err(e) => PairOutcome { transform: RigidTransform::identity(), iterations: 0, converged: false, error: Some(e) },
        };
        times.push(start.elapsed().as_secs_f64() * 1e3);
        pairs.push(p);
    }
    let poses = compose_trajectory(&pairs);

    let mut out = String::from("# pair index iterations converged status transform...");
    out.push_str(if s.omit_timing { "\n" } else { " wall_ms\n" });
    for (i, (p, ms)) in pairs.iter().zip(&times).enumerate() {
        eprintln!("pair {i} wall_ms {ms:.3}");
        let status = match &p.error {
            None => "ok".to_string(),
            Some(e) => format!("error:{}", e.to_string().replace(' ', "_")),
        };
        out.push_str(&format!("pair {i} {} {} {status} {}", p.iterations, p.converged, format_row(&p.transform.to_rows())));
        if !s.omit_timing {
            out.push_str(&format!(" {ms:.3}"));
        }
        out.push('\n');
    }
    out.push_str("# pose index transform...");
    out.push_str(if gt.is_some() { " cum_angular_deg cum_translation_err\n" } else { "\n" });
    let (mut cum_phi, mut cum_t) = (0.0, 0.0);
    for (k, pose) in poses.iter().enumerate() {
        out.push_str(&format!("pose {k} {}", format_row(&pose.to_rows())));
        if let Some(g) = &gt {
            if k > 0 {
                // Relative motion k-1 -> k against the estimate of the same pair.
                let truth = g[k].inverse().compose(&g[k - 1]);
                let est = &pairs[k - 1].transform;
                cum_phi += angular_deviation(&truth.rotation, &est.rotation);
                cum_t += translation_error(&truth.translation, &est.translation);
            }
            out.push_str(&format!(" {cum_phi:e} {cum_t:e}"));
        }
        out.push('\n');
    }
    Ok(out)
}

fn cmd_odometry(args: OdometryArgs) -> Result<ExitCode> {
    let s = args.common.resolve()?;
    let paths = frame_paths(&args)?;
    if paths.len() < 2 {
        return Err(FgaError::TooFewFrames { required: 2, actual: paths.len() });
    }
    let clouds = paths.iter().map(|p| load_cloud(p)).collect::<Result<Vec<_>>>()?;
    let gt_text = match args.common.path(&args.ground_truth, "ground_truth", &s) {
        Some(p) => Some(fs::read_to_string(p)?),
        None => None,
    };
    let dim = clouds[0].dim();
    if let Some(bad) = clouds.iter().find(|c| c.dim() != dim) {
        return Err(FgaError::DimensionMismatch { expected: dim, actual: bad.dim() });
    }
    let text = if dim == 2 {
        let frames = clouds.into_iter().map(|c| match c {
            AnyCloud::D2(c) => c,
            AnyCloud::D3(_) => unreachable!("dimension checked"),
        });
        let gt = gt_text.as_deref().map(parse_poses::<2>).transpose()?;
        odometry(frames.collect(), gt, &s)?
    } else {
        let frames = clouds.into_iter().map(|c| c.into_3d()).collect::<Result<Vec<_>>>()?;
        let gt = gt_text.as_deref().map(parse_poses::<3>).transpose()?;
        odometry(frames, gt, &s)?
    };
    emit(&args.common.output, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Template,
    Reference,
}

#[derive(Args)]
struct MassesArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Landmark pair file; the column for `--side` gives this cloud's anchors.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "template")]
    side: Side,
    #[command(flatten)]
    common: Common,
}

fn masses_of<const D: usize>(cloud: &PointCloud<D>, anchors: &[usize], params: &FgaParams) -> Result<MassField> {
    let (a, b) = params.norm_range;
    let (norm, _, ctx) = normalize_pair(cloud, cloud, a, b)?;
    cloud_masses(&norm, anchors, params, &ctx)
}

fn cmd_masses(args: MassesArgs) -> Result<ExitCode> {
    let s = args.common.resolve()?;
    let cloud = load_cloud(&required(args.common.path(&args.input, "input", &s), "input")?)?;
    let anchors = match args.common.path(&args.landmarks, "landmarks", &s) {
        Some(p) => {
            let pairs = fga::io::parse_landmarks(&fs::read_to_string(p)?)?;
            let n = cloud.len();
            let set = LandmarkSet::new(pairs, usize::MAX, usize::MAX)?;
            let idx = match args.side {
                Side::Template => set.template_anchors(),
                Side::Reference => set.reference_anchors(),
            };
            if let Some(index) = idx.iter().position(|&i| i >= n) {
                return Err(FgaError::InvalidLandmark { index });
            }
            idx
        }
        None => Vec::new(),
    };
    let m = match &cloud {
        AnyCloud::D2(c) => masses_of(c, &anchors, &s.params)?,
        AnyCloud::D3(c) => masses_of(c, &anchors, &s.params)?,
    };
    let text: String = m.values().iter().map(|v| format!("{v:?}\n")).collect();
    emit(&args.common.output, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Per-point masses; unit masses when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn tree_of<const D: usize>(cloud: &PointCloud<D>, weights: Option<&Path>, max_depth: usize) -> Result<String> {
    let masses = match weights {
        Some(p) => external_masses(cloud, &load_weights(p)?)?,
        None => MassField::uniform(cloud.len(), 1.0)?,
    };
    Ok(BhTree::build(cloud, &masses, max_depth)?.dump())
}

fn cmd_tree(args: TreeArgs) -> Result<ExitCode> {
    let s = args.common.resolve()?;
    let cloud = load_cloud(&required(args.common.path(&args.input, "input", &s), "input")?)?;
    let w = args.common.path(&args.weights, "weights", &s);
    let text = match &cloud {
        AnyCloud::D2(c) => tree_of(c, w.as_deref(), s.params.max_depth)?,
        AnyCloud::D3(c) => tree_of(c, w.as_deref(), s.params.max_depth)?,
    };
    emit(&args.common.output, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct MetricsArgs {
    /// Ground-truth transform (record file or bare matrix).
    #[arg(long)]
    gt: PathBuf,
    /// Estimated transform (record file or bare matrix).
    #[arg(long)]
    est: PathBuf,
    /// Template cloud for the RMSE.
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn metrics_for<const D: usize>(gt: &[f64], est: &[f64], cloud: Option<PointCloud<D>>) -> Result<String> {
    let gt = RigidTransform::<D>::from_rows(gt)?;
    let est = RigidTransform::<D>::from_rows(est)?;
    let report = match cloud {
        Some(c) => evaluate(&c, &gt, &est, &DEFAULT_THRESHOLDS),
        None => total_error(&gt, &est, &DEFAULT_THRESHOLDS),
    };
    Ok(report.to_kv())
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode> {
    let gt = parse_transform_values(&fs::read_to_string(&args.gt)?)?;
    let est = parse_transform_values(&fs::read_to_string(&args.est)?)?;
    let cloud = args.cloud.as_deref().map(load_cloud).transpose()?;
    let text = match (gt.len(), cloud) {
        (6, None) => metrics_for::<2>(&gt, &est, None)?,
        (6, Some(AnyCloud::D2(c))) => metrics_for::<2>(&gt, &est, Some(c))?,
        (12, None) => metrics_for::<3>(&gt, &est, None)?,
        (12, Some(AnyCloud::D3(c))) => metrics_for::<3>(&gt, &est, Some(c))?,
        (n, Some(c)) => return Err(FgaError::DimensionMismatch { expected: c.dim() * (c.dim() + 1), actual: n }),
        (n, None) => return Err(FgaError::LengthMismatch { expected: 12, actual: n }),
    };
    emit(&args.output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Register(a) => cmd_register(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Odometry(a) => cmd_odometry(a),
        Command::MassesDump(a) => cmd_masses(a),
        Command::TreeDump(a) => cmd_tree(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
