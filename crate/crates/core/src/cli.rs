//! Command-line front end. Every artifact carries a JSON echo of the
//! invocation: as the '#' header of CSV files, or as the "run" field of
//! JSON files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::datasets::{flat_patch, noisy_swiss_roll, paraboloid, predator_mobbing, PredatorParams};
use crate::error::{Error, Result};
use crate::io::{read_cloud, read_pairs, write_atomic, write_rows};
use crate::isomap::isomap;
use crate::manifold::{build_manifold, BuildConfig, FrameSpec, OriginRule, PrincipalManifold};
use crate::metrics::{correlation_score, delta_for_embedding};
use crate::slicing::SliceConfig;
use crate::spline::PenaltyScale;
use crate::sweep::{run_sweep, SweepConfig, SweepKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_ALGORITHM: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(name = "pmfold", version, about = "Principal manifold fitting, embedding and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Fit a principal manifold to a point cloud.
    Fit(FitArgs),
    /// Map points to manifold coordinates.
    Embed(EmbedArgs),
    /// Map manifold coordinates back to ambient space.
    Invert(EmbedArgs),
    /// Adjacency-distance error and optional ground-truth correlation.
    Metric(MetricArgs),
    /// Isomap baseline embedding.
    Isomap(IsomapArgs),
    /// Run a parameter sweep on the swiss roll.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Paraboloid,
    SwissRoll,
    PredatorMobbing,
    FlatPatch,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: DatasetKind,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Uniform noise amplitude (paraboloid, swiss roll).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth output: agent track (predator mobbing) or (θ, φ) (swiss roll).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub agents: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 14.0)]
    pub revolutions: f64,
    /// Standard deviation of the agent noise.
    #[arg(long, default_value_t = 0.01)]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyArg {
    /// Curvature measured in data units (scaled by `--length-unit`).
    Length,
    /// Curvature measured in units of the spline's own chord length.
    Normalized,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    /// Slab counts along the first and second directions.
    #[arg(long, num_args = 2, value_names = ["NC1", "NC2"], default_values_t = [10, 10])]
    pub nc: Vec<usize>,
    /// Slice along two coordinate axes (0-based) instead of the principal directions.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub axes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Absolute closest-approach gap threshold.
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    /// Gap threshold in mean slab widths, used without `--gap-threshold`.
    #[arg(long, default_value_t = 3.0)]
    pub gap_factor: f64,
    #[arg(long, default_value_t = 4)]
    pub min_size: usize,
    /// Sub-cluster neighbor radius in slab widths.
    #[arg(long, default_value_t = 1.0)]
    pub radius_scale: f64,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Length)]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = 1.0)]
    pub length_unit: f64,
    /// Choose the origin node at random with this seed instead of nearest the mean.
    #[arg(long)]
    pub origin_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    /// Raw point cloud.
    #[arg(long)]
    pub input: PathBuf,
    /// Two-column embedding of the same points.
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Two-column ground truth to correlate with the embedding.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IsomapArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Residual variances per dimension; defaults to `<out>.residuals.csv`.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepArg {
    P,
    Noise,
    N,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepArg,
    #[arg(long)]
    pub seed: u64,
    /// Coarser step than the protocol default.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["NC1", "NC2"], default_values_t = [15, 15])]
    pub nc: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report JSON; defaults to `<out>.fit.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("pmfold: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_algorithmic() => EXIT_ALGORITHM,
        Error::InvalidArgument(_) | Error::KTooLarge { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn echo(cli: &Cli) -> String {
    serde_json::to_string(&json!({ "tool": "pmfold", "version": env!("CARGO_PKG_VERSION"), "command": cli.command }))
        .expect("serializable arguments")
}

fn write_json(path: &Path, cli: &Cli, key: &str, value: serde_json::Value) -> Result<()> {
    let run: serde_json::Value = serde_json::from_str(&echo(cli)).expect("valid echo");
    let doc = json!({ "run": run, key: value });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.into()))
    }
}

/// Reads a manifold written by `fit` (or a bare manifold JSON).
pub fn load_model(path: &Path) -> Result<PrincipalManifold> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    match v.get("manifold") {
        Some(m) => PrincipalManifold::from_json(&m.to_string()),
        None => PrincipalManifold::from_json(&text),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let header = echo(cli);
    match &cli.command {
        Command::Generate(a) => {
            check(a.n >= 1 && a.agents >= 1 && a.steps >= 1, "n, agents and steps must be at least 1")?;
            check(a.noise >= 0.0 && a.noise_sd >= 0.0, "noise must be non-negative")?;
            match a.kind {
                DatasetKind::Paraboloid => write_rows(&a.out, Some(&header), &paraboloid(a.n, a.noise, a.seed).points().collect::<Vec<_>>()),
                DatasetKind::FlatPatch => write_rows(&a.out, Some(&header), &flat_patch(a.n, a.seed).points().collect::<Vec<_>>()),
                DatasetKind::SwissRoll => {
                    let r = noisy_swiss_roll(a.n, a.noise, a.seed);
                    write_rows(&a.out, Some(&header), &r.cloud.points().collect::<Vec<_>>())?;
                    if let Some(t) = &a.truth {
                        let rows: Vec<[f64; 2]> = r.theta.iter().zip(&r.phi).map(|(&t, &f)| [t, f]).collect();
                        write_rows(t, Some(&header), &rows)?;
                    }
                    Ok(())
                }
                DatasetKind::PredatorMobbing => {
                    let params = PredatorParams {
                        agents: a.agents,
                        steps: a.steps,
                        revolutions: a.revolutions,
                        noise_sd: a.noise_sd,
                        ..PredatorParams::default()
                    };
                    let pm = predator_mobbing(&params, a.seed);
                    write_rows(&a.out, Some(&header), &pm.cloud.points().collect::<Vec<_>>())?;
                    let truth = a.truth.clone().unwrap_or_else(|| with_suffix(&a.out, ".truth.csv"));
                    write_rows(&truth, Some(&header), &pm.truth)
                }
            }
        }
        Command::Fit(a) => {
            check(a.nc.iter().all(|&n| n >= 1), "slab counts must be at least 1")?;
            check(a.samples >= 2, "samples must be at least 2")?;
            check(a.p.is_finite() && (0.0..=1.0).contains(&a.p), "p must lie in [0, 1]")?;
            check(a.length_unit > 0.0 && a.radius_scale > 0.0 && a.gap_factor > 0.0, "scales must be positive")?;
            let cloud = read_cloud(&a.input)?;
            let slice = SliceConfig {
                min_subcluster_size: a.min_size,
                subcluster_radius_scale: a.radius_scale,
                ..SliceConfig::new(a.nc[0], a.nc[1])
            };
            let frame = match &a.axes {
                Some(ax) => {
                    check(ax[0] != ax[1] && ax.iter().all(|&i| i < cloud.d()), "axes must be distinct and below the dimension")?;
                    FrameSpec::CoordinateAxes(ax[0], ax[1])
                }
                None => FrameSpec::Pca,
            };
            let build = BuildConfig {
                frame,
                samples: a.samples,
                gap_factor: a.gap_factor,
                gap_threshold: a.gap_threshold,
                penalty: match a.penalty {
                    PenaltyArg::Length => PenaltyScale::Length(a.length_unit),
                    PenaltyArg::Normalized => PenaltyScale::Normalized,
                },
                origin: a.origin_seed.map_or(OriginRule::Centroid, OriginRule::Random),
                ..BuildConfig::default()
            };
            let pm = build_manifold(&cloud, a.p, &slice, &build)?;
            let value = serde_json::to_value(&pm).map_err(|e| Error::Format(e.to_string()))?;
            write_json(&a.out, cli, "manifold", value)
        }
        Command::Embed(a) => {
            let pm = load_model(&a.model)?;
            let cloud = read_cloud(&a.input)?;
            if cloud.d() != pm.dim() {
                return Err(Error::DimensionMismatch { expected: pm.dim(), got: cloud.d() });
            }
            write_rows(&a.out, Some(&header), &pm.embed_cloud(&cloud)?)
        }
        Command::Invert(a) => {
            let pm = load_model(&a.model)?;
            let coords = read_pairs(&a.input)?;
            let rows = coords.iter().map(|&x| pm.invert(x)).collect::<Result<Vec<_>>>()?;
            write_rows(&a.out, Some(&header), &rows)
        }
        Command::Metric(a) => {
            let cloud = read_cloud(&a.input)?;
            let emb = read_pairs(&a.embedding)?;
            if emb.len() != cloud.n() {
                return Err(Error::DimensionMismatch { expected: cloud.n(), got: emb.len() });
            }
            let delta = delta_for_embedding(&cloud, &emb, a.k)?;
            let mut report = json!({ "k": a.k, "delta": delta });
            if let Some(t) = &a.truth {
                let truth = read_pairs(t)?;
                if truth.len() != emb.len() {
                    return Err(Error::DimensionMismatch { expected: emb.len(), got: truth.len() });
                }
                report["correlation"] = serde_json::to_value(correlation_score(&emb, &truth)?).expect("plain report");
            }
            write_json(&a.out, cli, "metrics", report)
        }
        Command::Isomap(a) => {
            let cloud = read_cloud(&a.input)?;
            let r = isomap(&cloud, a.k, a.dims)?;
            if r.dropped > 0 {
                eprintln!("pmfold: isomap kept the largest component ({} of {} points)", r.kept.len(), cloud.n());
            }
            write_rows(&a.out, Some(&header), &r.embedding)?;
            let res: Vec<[f64; 2]> = r.residual_variances.iter().enumerate().map(|(i, &v)| [(i + 1) as f64, v]).collect();
            let path = a.residuals.clone().unwrap_or_else(|| with_suffix(&a.out, ".residuals.csv"));
            write_rows(&path, Some(&header), &res)
        }
        Command::Sweep(a) => {
            check(a.nc.iter().all(|&n| n >= 1), "slab counts must be at least 1")?;
            check(a.step.is_none_or(|s| s.is_finite() && s > 0.0), "step must be positive")?;
            let kind = match a.kind {
                SweepArg::P => SweepKind::P,
                SweepArg::Noise => SweepKind::Noise,
                SweepArg::N => SweepKind::N,
            };
            let mut cfg = SweepConfig::protocol(kind, a.step, a.seed);
            cfg.slice.n_c1 = a.nc[0];
            cfg.slice.n_c2 = a.nc[1];
            cfg.k = a.k;
            cfg.build.samples = a.samples;
            cfg.build.gap_threshold = a.gap_threshold;
            let r = run_sweep(&cfg)?;
            write_rows(&a.out, Some(&header), &r.rows)?;
            let report = a.report.clone().unwrap_or_else(|| with_suffix(&a.out, ".fit.json"));
            write_json(&report, cli, "fit", serde_json::to_value(&r.fit).expect("plain report"))
        }
    }
}
