//! Command-line front end: `simulate`, `run`, `surface`, `render`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::Error;
use crate::geometry::Vec2;
use crate::io::{image, report, scanlog, snapshot, read_truth, truth_path, write_truth};
use crate::manager::{Mode, Snapshot, UnifyState, PHASES};
use crate::occupancy::Representation;
use crate::sensor_models::SensorModel;
use crate::sim::Scenario;
use crate::surface::{default_window, surface, SurfaceKind};
use crate::types::{Detection, NoiseStd, SensorModelParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "radgrid", version, about = "Dynamic occupancy grid mapping for automotive radar")]
pub struct Cli {
    /// Seed for every random draw (overrides scenario seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderLayer {
    Occupancy,
    Ds,
    Velocity,
    Particles,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario (file or bundled name) into a scan log plus truth sidecar.
    Simulate {
        scenario: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the grid over a scan log.
    Run {
        log: PathBuf,
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Write a snapshot every N cycles (0 = final only).
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
        /// full, occupancy-only or velocity-only.
        #[arg(long, default_value = "full")]
        mode: Mode,
        /// bb or ds; overrides the config.
        #[arg(long)]
        representation: Option<Representation>,
        /// Ground-truth sidecar (defaults to `<log>.truth.toml` when present).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Skip image output.
        #[arg(long)]
        no_render: bool,
    },
    /// Evaluate a sensor-model surface (occ, free or vel).
    Surface {
        model: SurfaceKind,
        #[arg(long, default_value_t = 80.0)]
        range: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        azimuth: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        range_rate: f64,
        /// Range / azimuth shift bound.
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Range-rate shift bound.
        #[arg(long, default_value_t = 1)]
        k_rr: u32,
        /// Sample spacing (m, or m/s for vel).
        #[arg(long, default_value_t = 0.5)]
        resolution: f64,
        /// Output stem; writes `<stem>.pgm` and `<stem>.mat`.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render a snapshot file.
    Render {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderLayer::Occupancy)]
        layer: RenderLayer,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_input_error() { EXIT_INPUT } else { EXIT_RUNTIME },
            message: e.to_string(),
        }
    }
}

fn input(e: Error) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn simulate(scenario: &str, output: &Path, seed: Option<u64>) -> Result<usize, CliError> {
    let sc = match Scenario::bundled(scenario) {
        Some(sc) => sc,
        None => Scenario::load(Path::new(scenario)).map_err(input)?,
    };
    let records = sc.generate(seed.unwrap_or(sc.seed));
    scanlog::write_scan_log(output, &records)?;
    write_truth(&truth_path(output), &sc.world)?;
    Ok(records.len())
}

/// Deterministic end-of-run metrics as `key,value` lines.
pub fn metrics_csv(cycles: usize, snap: &Snapshot, truth: Option<(&crate::sim::WorldModel, f64)>) -> String {
    let mut out = String::from("metric,value\n");
    let _ = writeln!(out, "cycles,{cycles}");
    let _ = writeln!(out, "particles,{}", snap.particle_count);
    if let Some((world, t)) = truth {
        if let Some(auc) = report::occupancy_auc(snap, world, t) {
            let _ = writeln!(out, "occupancy_auc,{auc}");
        }
        let scores = report::score_objects(snap, world, t);
        for s in &scores {
            match s.estimate {
                Some(e) => {
                    let _ = writeln!(out, "object_{}_vx,{}", s.id, e.x);
                    let _ = writeln!(out, "object_{}_vy,{}", s.id, e.y);
                    let _ = writeln!(out, "object_{}_error,{}", s.id, s.error().unwrap());
                }
                None => {
                    let _ = writeln!(out, "object_{}_error,nan", s.id);
                }
            }
        }
        if let Some(rmse) = report::velocity_rmse(&scores) {
            let _ = writeln!(out, "velocity_rmse,{rmse}");
        }
    }
    out
}

fn render_snapshot(snap: &Snapshot, layer: RenderLayer) -> Result<image::Image, CliError> {
    let occ = &snap.occupancy_spec;
    let missing = |what: &str| CliError {
        code: EXIT_INPUT,
        message: format!("snapshot has no {what} data"),
    };
    Ok(match layer {
        RenderLayer::Occupancy => {
            if snap.probabilities.is_empty() {
                return Err(missing("occupancy"));
            }
            image::render_occupancy(&snap.probabilities, occ.nx(), occ.ny())
        }
        RenderLayer::Ds => {
            let m = snap.masses.as_ref().ok_or_else(|| missing("Dempster-Shafer"))?;
            image::render_ds(m, occ.nx(), occ.ny())
        }
        RenderLayer::Velocity => {
            if snap.velocity.is_empty() {
                return Err(missing("velocity"));
            }
            image::render_velocity(&snap.velocity, &snap.velocity_spec, 1.0, 20.0)
        }
        RenderLayer::Particles => {
            let probs = if snap.probabilities.is_empty() {
                vec![0.5; occ.cell_count()]
            } else {
                snap.probabilities.clone()
            };
            image::render_particles(&probs, occ, &snap.particles, 1.0)
        }
    })
}

fn write_images(dir: &Path, stem: &str, snap: &Snapshot) -> Result<(), CliError> {
    let mut layers = Vec::new();
    if !snap.probabilities.is_empty() {
        layers.push((RenderLayer::Occupancy, "occupancy.pgm"));
    }
    if snap.masses.is_some() {
        layers.push((RenderLayer::Ds, "ds.ppm"));
    }
    if !snap.velocity.is_empty() {
        layers.push((RenderLayer::Velocity, "velocity.ppm"));
        layers.push((RenderLayer::Particles, "particles.ppm"));
    }
    for (layer, name) in layers {
        render_snapshot(snap, layer)?.write(&dir.join(format!("{stem}_{name}")))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    log: &Path,
    config: Option<&Path>,
    output: &Path,
    snapshot_every: usize,
    mode: Mode,
    representation: Option<Representation>,
    truth: Option<&Path>,
    render: bool,
    seed: u64,
) -> Result<usize, CliError> {
    let records = scanlog::read_scan_log(log).map_err(input)?;
    let mut cfg = match config {
        Some(p) => Config::load(p).map_err(input)?,
        None => Config::default(),
    };
    if let Some(r) = representation {
        cfg.occupancy.representation = r;
    }
    let truth_file = match truth {
        Some(p) => Some(p.to_path_buf()),
        None => Some(truth_path(log)).filter(|p| p.exists()),
    };
    let world = truth_file.map(|p| read_truth(&p).map_err(input)).transpose()?;
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;

    let start = records.first().map_or(Vec2::ZERO, |r| r.pose.position);
    let mut state = UnifyState::new(cfg, mode, start, seed).map_err(input)?;
    let mut csv = report::cycle_csv_header();
    csv.push('\n');
    let mut scan: Vec<Detection> = Vec::new();
    for rec in &records {
        scan.clear();
        scan.extend_from_slice(&rec.detections);
        let r = state.step(&rec.pose, &scan)?;
        csv.push_str(&report::cycle_csv_row(&r));
        csv.push('\n');
        if snapshot_every > 0 && (state.cycle() as usize).is_multiple_of(snapshot_every) {
            let snap = state.snapshot(render);
            let stem = format!("snapshot_{:05}", state.cycle());
            snapshot::write_snapshot(&output.join(format!("{stem}.bin")), &snap)?;
            if render {
                write_images(output, &stem, &snap)?;
            }
        }
    }
    let write = |name: &str, text: &str| {
        let p = output.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("cycles.csv", &csv)?;
    let snap = state.snapshot(true);
    let t_end = records.last().map_or(0.0, |r| r.pose.timestamp);
    write(
        "metrics.csv",
        &metrics_csv(records.len(), &snap, world.as_ref().map(|w| (w, t_end))),
    )?;
    if !records.is_empty() {
        snapshot::write_snapshot(&output.join("final.bin"), &snap)?;
        if !snap.velocity.is_empty() {
            write("velocity_stats.csv", &report::stats_csv(&snap.velocity, &snap.velocity_spec))?;
        }
        if render {
            write_images(output, "final", &snap)?;
        }
    }
    Ok(records.len())
}

#[allow(clippy::too_many_arguments)]
pub fn surface_cmd(
    kind: SurfaceKind,
    range: f64,
    azimuth: f64,
    range_rate: f64,
    k: u32,
    k_rr: u32,
    resolution: f64,
    output: &Path,
) -> Result<(), CliError> {
    let noise = NoiseStd::default();
    let params = SensorModelParams::default().with_shift_bounds(k, k_rr);
    let model = SensorModel::new(params).map_err(input)?;
    let z = Detection {
        sensor_id: 0,
        timestamp: 0.0,
        range,
        azimuth,
        range_rate,
        sigma_range: noise.range,
        sigma_azimuth: noise.azimuth,
        sigma_range_rate: noise.range_rate,
    };
    z.validate().map_err(input)?;
    let window = default_window(kind, resolution);
    window.validate().map_err(input)?;
    let s = surface(&model, kind, &z, &window)?;
    image::render_surface(&s.values, s.nx(), s.ny()).write(&with_ext(output, "pgm"))?;
    image::write_matrix(&with_ext(output, "mat"), &s.values, s.nx(), s.ny())?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, output } => {
            let n = simulate(&scenario, &output, cli.seed)?;
            eprintln!("wrote {n} scans to {}", output.display());
        }
        Command::Run {
            log,
            config,
            output,
            snapshot_every,
            mode,
            representation,
            truth,
            no_render,
        } => {
            let n = run(
                &log,
                config.as_deref(),
                &output,
                snapshot_every,
                mode,
                representation,
                truth.as_deref(),
                !no_render,
                cli.seed.unwrap_or(0),
            )?;
            eprintln!("ran {n} cycles; outputs in {}", output.display());
        }
        Command::Surface {
            model,
            range,
            azimuth,
            range_rate,
            k,
            k_rr,
            resolution,
            output,
        } => surface_cmd(model, range, azimuth, range_rate, k, k_rr, resolution, &output)?,
        Command::Render { snapshot, layer, output } => {
            let snap = snapshot::read_snapshot(&snapshot).map_err(input)?;
            render_snapshot(&snap, layer)?.write(&output)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("radgrid: {}", e.message);
            e.code
        }
    }
}

/// Phase names in cycle-report order.
pub fn phase_names() -> [&'static str; 9] {
    PHASES
}
