//! Command-line front end: argument parsing, the run driver and its exit codes.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};
use serde::Serialize;

use crate::chanvese::ModelParams;
use crate::error::{Error, Result};
use crate::fds::fds_run;
use crate::fem::{History, SolverParams};
use crate::pipeline::output::{write_level_outputs, LevelOutputs};
use crate::pipeline::{
    dice, extract_grid_contour, segment_multilevel, segmented_image, sign_mask, Mask, MetricKind, MultilevelParams,
    RepresentParams, SegmentParams,
};
use crate::raster::{load_image, write_atomic, PixelGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Finite elements on an adapted anisotropic mesh.
    Ama,
    /// Finite differences on the pixel grid.
    Fds,
}

/// Chan-Vese segmentation on metric-adapted anisotropic meshes.
///
/// Weights `mu` and `nu` are given on the 8-bit gray-level scale, as they are
/// usually quoted, and divided by 255² internally because images are read as
/// intensities in [0, 1].
///
/// Exit status: 0 success, 1 usage error, 2 runtime failure, 3 the evolution did
/// not converge (outputs are still written).
#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "amaseg", version, about, long_about)]
pub struct RunConfig {
    /// Input image (PGM or PNG).
    pub input: PathBuf,

    /// Prefix of every output file.
    #[arg(short, long, default_value = "amaseg")]
    pub output: String,

    #[arg(long, value_enum, default_value_t = Solver::Ama)]
    pub solver: Solver,

    /// Metric driving mesh adaptation: aniso or dmp.
    #[arg(long, default_value_t = MetricKind::Aniso)]
    #[serde(serialize_with = "display")]
    pub metric: MetricKind,

    /// Mesh vertices per pixel.
    #[arg(long, default_value_t = 0.002)]
    pub sd: f64,

    #[arg(long, default_value_t = 1000.0)]
    pub dt: f64,

    /// Length weight on the gray-level scale; 0.01 gives smoother boundaries.
    #[arg(long, default_value_t = 1e-4)]
    pub mu: f64,

    /// Area weight on the gray-level scale.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda2: f64,

    /// Width of the regularized Heaviside.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,

    /// Segmentation levels; each level re-splits the regions of the previous one.
    #[arg(long, default_value_t = 1)]
    pub levels: usize,

    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,

    /// Metric rebuild and remeshing passes.
    #[arg(long, default_value_t = 4)]
    pub passes: usize,

    /// Gaussian presmoothing (pixels) before derivatives for the metric.
    #[arg(long, default_value_t = 2.0)]
    pub presmooth_sigma: f64,

    /// Also write the per-iteration history as CSV.
    #[arg(long)]
    pub log: bool,

    /// Binary mask image; the summary then reports the Dice overlap.
    #[arg(long)]
    pub reference: Option<PathBuf>,

    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl RunConfig {
    pub fn model_params(&self) -> ModelParams {
        ModelParams::from_gray_levels(self.mu, self.nu, self.lambda1, self.lambda2, self.epsilon)
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            dt: self.dt,
            max_iters: self.max_iters,
            ..SolverParams::default()
        }
    }

    pub fn segment_params(&self) -> SegmentParams {
        SegmentParams {
            represent: RepresentParams {
                sd: self.sd,
                kind: self.metric,
                passes: self.passes,
                presmooth_sigma: self.presmooth_sigma,
                ..RepresentParams::default()
            },
            model: self.model_params(),
            solver: self.solver_params(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.segment_params().validate()?;
        if self.levels == 0 {
            return Err(Error::InvalidParameter("levels must be at least 1".into()));
        }
        if self.solver == Solver::Fds && self.levels > 1 {
            return Err(Error::InvalidParameter("the fds solver runs a single level".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Parses and validates `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = RunConfig::try_parse_from(argv)?;
    config
        .validate()
        .map_err(|e| RunConfig::command().error(ErrorKind::ValueValidation, e))?;
    Ok(config)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunTimings {
    pub represent: f64,
    pub solve: f64,
    pub reconstruct: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub branches: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// What a run produced; also serialized as the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub config: RunConfig,
    pub mu_internal: f64,
    pub nu_internal: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_energy: f64,
    pub c1: f64,
    pub c2: f64,
    pub num_labels: usize,
    pub levels: Vec<LevelSummary>,
    pub dice: Option<f64>,
    pub timings: RunTimings,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "solver={} iterations={} converged={} energy={:.6e} c1={:.4} c2={:.4} labels={}",
            match self.config.solver {
                Solver::Ama => "ama",
                Solver::Fds => "fds",
            },
            self.iterations,
            self.converged,
            self.final_energy,
            self.c1,
            self.c2,
            self.num_labels,
        );
        if let Some(d) = self.dice {
            s.push_str(&format!(" dice={d:.4}"));
        }
        s.push_str(&format!(" time={:.2}s", self.timings.total));
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

pub fn manifest_path(prefix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_manifest.json"))
}

fn load_mask(path: &Path, like: &PixelGrid) -> Result<Mask> {
    let m = load_image(path)?;
    if m.width() != like.width() || m.height() != like.height() {
        return Err(Error::ShapeMismatch(format!(
            "reference {}x{} vs image {}x{}",
            m.width(),
            m.height(),
            like.width(),
            like.height()
        )));
    }
    Ok(m.raster().map(|v| v >= 0.5))
}

fn bright(inside: Mask, c1: f64, c2: f64) -> Mask {
    if c1 >= c2 {
        inside
    } else {
        inside.map(|b| !b)
    }
}

/// Runs the configured solver, writes outputs and the manifest.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let grid = load_image(&config.input)?;
    let reference = config.reference.as_deref().map(|p| load_mask(p, &grid)).transpose()?;
    let mut report = match config.solver {
        Solver::Ama => run_ama(config, &grid, reference.as_ref())?,
        Solver::Fds => run_fds(config, &grid, reference.as_ref())?,
    };
    report.timings.total = start.elapsed().as_secs_f64();
    let manifest = manifest_path(&config.output);
    report.outputs.push(manifest.clone());
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Malformed(e.to_string()))?;
    write_atomic(&manifest, json.as_bytes())?;
    Ok(report)
}

fn report(config: &RunConfig, history: &History) -> RunReport {
    let model = config.model_params();
    RunReport {
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        mu_internal: model.mu,
        nu_internal: model.nu,
        converged: history.converged,
        iterations: history.iterations(),
        final_energy: history.final_energy(),
        c1: history.constants.c1,
        c2: history.constants.c2,
        num_labels: 2,
        levels: Vec::new(),
        dice: None,
        timings: RunTimings::default(),
        outputs: Vec::new(),
    }
}

fn run_ama(config: &RunConfig, grid: &PixelGrid, reference: Option<&Mask>) -> Result<RunReport> {
    let params = config.segment_params();
    let ml = MultilevelParams {
        levels: config.levels,
        ..MultilevelParams::default()
    };
    let result = segment_multilevel(grid, &ml, &params)?;
    let first = result
        .branches
        .first()
        .and_then(|b| b.result.as_ref())
        .ok_or_else(|| Error::InvalidParameter("image too small to segment".into()))?;
    let mut rep = report(config, &first.history);
    rep.converged = result.all_converged();
    rep.num_labels = result.num_labels;
    if let Some(m) = reference {
        let c = first.constants();
        rep.dice = Some(dice(&bright(first.inside_mask(), c.c1, c.c2), m)?);
    }
    let mut timing = [Duration::ZERO; 3];
    for level in 1..=config.levels {
        let runs: Vec<_> = result
            .level(level)
            .filter_map(|b| b.result.as_ref().map(|r| (b.index, r)))
            .collect();
        if runs.is_empty() {
            break;
        }
        for (_, r) in &runs {
            timing[0] += r.timings.represent;
            timing[1] += r.timings.solve;
            timing[2] += r.timings.reconstruct;
        }
        rep.levels.push(LevelSummary {
            level,
            branches: runs.len(),
            iterations: runs.iter().map(|(_, r)| r.history.iterations()).sum(),
            converged: runs.iter().all(|(_, r)| r.history.converged),
        });
        let Some((segmented, phi)) = result.composite(level) else { break };
        let out = LevelOutputs {
            level,
            image: grid,
            segmented: &segmented,
            phi: &phi,
            contours: runs.iter().flat_map(|(b, r)| r.contours.iter().map(move |c| (*b, c))).collect(),
            meshes: runs.iter().map(|(b, r)| (*b, &r.mesh)).collect(),
            histories: runs.iter().map(|(b, r)| (*b, &r.history)).collect(),
        };
        rep.outputs.extend(write_level_outputs(&config.output, &out, config.log)?);
    }
    rep.timings = RunTimings {
        represent: timing[0].as_secs_f64(),
        solve: timing[1].as_secs_f64(),
        reconstruct: timing[2].as_secs_f64(),
        total: 0.0,
    };
    Ok(rep)
}

fn run_fds(config: &RunConfig, grid: &PixelGrid, reference: Option<&Mask>) -> Result<RunReport> {
    let t0 = Instant::now();
    let (phi, history) = fds_run(grid, &config.model_params(), &config.solver_params())?;
    let solve = t0.elapsed();
    let t1 = Instant::now();
    let c = history.constants;
    let segmented = segmented_image(&phi, c)?;
    let contours = extract_grid_contour(&phi)?;
    let mut rep = report(config, &history);
    if let Some(m) = reference {
        rep.dice = Some(dice(&bright(sign_mask(&phi), c.c1, c.c2), m)?);
    }
    rep.levels.push(LevelSummary {
        level: 1,
        branches: 1,
        iterations: history.iterations(),
        converged: history.converged,
    });
    let out = LevelOutputs {
        level: 1,
        image: grid,
        segmented: &segmented,
        phi: &phi,
        contours: contours.iter().map(|l| (0, l)).collect(),
        meshes: Vec::new(),
        histories: vec![(0, &history)],
    };
    rep.outputs = write_level_outputs(&config.output, &out, config.log)?;
    rep.timings = RunTimings {
        represent: 0.0,
        solve: solve.as_secs_f64(),
        reconstruct: t1.elapsed().as_secs_f64(),
        total: 0.0,
    };
    Ok(rep)
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&config) {
        Ok(rep) => {
            println!("{}", rep.summary());
            if !rep.converged {
                eprintln!("warning: evolution did not converge within {} iterations", config.max_iters);
            }
            rep.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanvese::GRAY_LEVEL_SCALE;

    fn parse(args: &[&str]) -> std::result::Result<RunConfig, clap::Error> {
        parse_args(std::iter::once("amaseg").chain(args.iter().copied()))
    }

    #[test]
    fn defaults() {
        let c = parse(&["in.pgm"]).unwrap();
        assert_eq!(c.solver, Solver::Ama);
        assert_eq!(c.metric, MetricKind::Aniso);
        assert_eq!((c.sd, c.dt, c.mu, c.nu), (0.002, 1000.0, 1e-4, 0.0));
        assert_eq!((c.lambda1, c.lambda2, c.epsilon, c.levels), (1.0, 1.0, 1.0, 1));
        let m = c.model_params();
        assert_eq!(m.mu, 1e-4 / GRAY_LEVEL_SCALE);
        assert_eq!(m.lambda1, 1.0);
    }

    #[test]
    fn routes_metric_and_levels() {
        let c = parse(&["in.pgm", "--metric", "dmp", "--levels", "3"]).unwrap();
        assert_eq!(c.segment_params().represent.kind, MetricKind::Dmp);
        assert_eq!(c.levels, 3);
    }

    #[test]
    fn rejects_bad_values() {
        assert_eq!(parse(&["in.pgm", "--dt", "0"]).unwrap_err().kind(), ErrorKind::ValueValidation);
        assert!(parse(&["in.pgm", "--sd", "1.5"]).is_err());
        assert!(parse(&["in.pgm", "--metric", "iso"]).is_err());
        assert!(parse(&["in.pgm", "--solver", "fds", "--levels", "2"]).is_err());
        assert_eq!(parse(&["in.pgm", "--bogus"]).unwrap_err().kind(), ErrorKind::UnknownArgument);
        assert!(parse(&[]).is_err());
    }
}
