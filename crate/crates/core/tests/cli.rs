//! End-to-end checks of the `radgrid` binary.

use std::path::Path;
use std::process::{Command, Output};

use radgrid::geometry::Vec2;
use radgrid::io::image::decode_matrix;
use radgrid::io::scanlog::read_scan_log;
use radgrid::io::snapshot::read_snapshot;

fn radgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn simulate(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let log = dir.join(format!("{name}-{seed}.log"));
    let out = radgrid(&["--seed", seed, "simulate", name, "-o", p(&log)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    log
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "static-corridor", "4");
    let b = dir.path().join("again.log");
    assert_eq!(code(&radgrid(&["--seed", "4", "simulate", "static-corridor", "-o", p(&b)])), 0);
    let c = simulate(dir.path(), "static-corridor", "5");
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(dir.path().join("static-corridor-4.log.truth.toml").exists());

    let records = read_scan_log(&a).unwrap();
    assert_eq!(records.len(), 20);
    assert!(records.iter().all(|r| !r.detections.is_empty()));
}

#[test]
fn malformed_scenario_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.toml");
    std::fs::write(&sc, "name = \"bad\"\nscans = 3\n[sim]\nclutter_rat = 1.0\n").unwrap();
    let out = radgrid(&["simulate", p(&sc), "-o", p(&dir.path().join("x.log"))]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("clutter_rat") && msg.contains('4'), "{msg}");
}

#[test]
fn input_and_runtime_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let missing = radgrid(&["run", p(&dir.path().join("none.log")), "-o", p(&out_dir)]);
    assert_eq!(code(&missing), 2);

    let bad = dir.path().join("bad.log");
    std::fs::write(&bad, "P 0 0 0 0 0 0\nD 0 0 10 zero 0 0.1 0.01 0.1\n").unwrap();
    let out = radgrid(&["run", p(&bad), "-o", p(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.log:2:"), "{}", stderr(&out));

    assert_eq!(code(&radgrid(&["surface", "occupancy", "-o", p(&out_dir)])), 2);
    assert_eq!(code(&radgrid(&["frobnicate"])), 2);
    assert_eq!(code(&radgrid(&["--help"])), 0);

    // Output directory blocked by a regular file.
    let empty = dir.path().join("empty.log");
    std::fs::write(&empty, "").unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(code(&radgrid(&["run", p(&empty), "-o", p(&blocker)])), 3);
}

#[test]
fn empty_log_runs_zero_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.log");
    std::fs::write(&log, "# nothing\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = radgrid(&["run", p(&log), "-o", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics = String::from_utf8(read(&out_dir.join("metrics.csv"))).unwrap();
    assert!(metrics.contains("cycles,0"), "{metrics}");
    let cycles = String::from_utf8(read(&out_dir.join("cycles.csv"))).unwrap();
    assert_eq!(cycles.lines().count(), 1);
    assert!(!out_dir.join("final.bin").exists());
}

#[test]
fn corridor_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let log = simulate(dir.path(), "static-corridor", "11");
    let run = |name: &str, extra: &[&str]| {
        let out_dir = dir.path().join(name);
        let mut args = vec!["--seed", "3", "run", p(&log), "-o", p(&out_dir)];
        args.extend_from_slice(extra);
        let out = radgrid(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out_dir
    };
    let full = run("full", &["--snapshot-every", "10"]);
    let again = run("again", &[]);
    let quiet = run("quiet", &["--no-render"]);

    // Reproducible and independent of rendering.
    let metrics = read(&full.join("metrics.csv"));
    assert_eq!(metrics, read(&again.join("metrics.csv")));
    assert_eq!(metrics, read(&quiet.join("metrics.csv")));
    assert_eq!(read(&full.join("final.bin")), read(&again.join("final.bin")));
    assert!(!quiet.join("final_occupancy.pgm").exists());
    let text = String::from_utf8(metrics).unwrap();
    assert!(text.contains("cycles,20") && text.contains("occupancy_auc,"), "{text}");


    assert!(full.join("snapshot_00010.bin").exists());
    assert!(full.join("snapshot_00020.bin").exists());
    assert!(full.join("velocity_stats.csv").exists());
    assert!(full.join("final_particles.ppm").exists());

    // Wall rows dark, corridor light.
    let snap = read_snapshot(&full.join("final.bin")).unwrap();
    let spec = &snap.occupancy_spec;
    let mean = |y: f64| {
        let v: Vec<f64> = (10..40)
            .filter_map(|x| spec.world_to_cell(Vec2::new(x as f64, y)))
            .map(|c| snap.probabilities[spec.linear(c)])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(6.25) > 0.8, "wall {}", mean(6.25));
    assert!(mean(0.0) < 0.2, "corridor {}", mean(0.0));
    let img = read(&full.join("final_occupancy.pgm"));
    assert!(img.starts_with(b"P5\n"));

    // Render subcommand.
    let png = dir.path().join("render.pgm");
    let out = radgrid(&["render", p(&full.join("final.bin")), "--layer", "occupancy", "-o", p(&png)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(&png), img);
    let ds = radgrid(&["render", p(&full.join("final.bin")), "--layer", "ds", "-o", p(&png)]);
    assert_eq!(code(&ds), 2);
}

#[test]
fn occupancy_output_ignores_velocity_layer_on_static_scene() {
    let dir = tempfile::tempdir().unwrap();
    // Clutter returns look dynamic and may legitimately move mass, so drop them.
    let text = include_str!("../scenarios/static-corridor.toml").replace("clutter_rate = 2.0", "clutter_rate = 0.0");
    let sc = dir.path().join("quiet.toml");
    std::fs::write(&sc, text).unwrap();
    let log = dir.path().join("quiet.log");
    assert_eq!(code(&radgrid(&["simulate", p(&sc), "-o", p(&log)])), 0);
    let image = |mode: &str| {
        let out_dir = dir.path().join(mode);
        let out = radgrid(&["run", p(&log), "-o", p(&out_dir), "--mode", mode]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        read(&out_dir.join("final_occupancy.pgm"))
    };
    assert_eq!(image("full"), image("occupancy-only"));
}

#[test]
fn surface_writes_image_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("occ");
    let out = radgrid(&["surface", "occ", "--range", "80", "--azimuth", "0", "-o", p(&stem)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (nx, ny, values) = decode_matrix(&read(&dir.path().join("occ.mat"))).unwrap();
    assert_eq!(values.len(), nx * ny);
    assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(values.iter().cloned().fold(0.0, f64::max) > 0.0);
    assert!(read(&dir.path().join("occ.pgm")).starts_with(b"P5\n"));

    let vel = dir.path().join("vel");
    let out = radgrid(&["surface", "vel", "--range-rate", "15", "--k-rr", "2", "-o", p(&vel)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("vel.mat").exists());

    let bad = radgrid(&["surface", "occ", "--resolution", "0", "-o", p(&stem)]);
    assert_eq!(code(&bad), 2);
}
