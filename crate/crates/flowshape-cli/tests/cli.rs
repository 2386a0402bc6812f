//! End-to-end checks of the compiled binary: mesh generation, run artifacts,
//! config echo reproducibility, report tables, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowshape::mesh::read_mesh_txt;
use flowshape::{Marker, Rect};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowshape"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("flowshape-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const TINY_MESH: &str = "\
[mesh]
tunnel = [-1.0, 1.0, -1.0, 1.0]
obstacle = [-0.25, 0.25, -0.25, 0.25]
resolution = 8
";

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn mesh_output_feeds_a_run_and_a_report() {
    let dir = scratch("roundtrip");
    let mesh_cfg = write_config(&dir, "mesh.toml", TINY_MESH);
    let mesh_dir = dir.join("meshout");
    run_ok(bin().args([
        "mesh",
        "--config",
        mesh_cfg.to_str().unwrap(),
        "--out",
        mesh_dir.to_str().unwrap(),
    ]));

    let mesh_file = mesh_dir.join("domain.mesh.txt");
    let written = read_mesh_txt(&mesh_file).unwrap();
    let reference = flowshape::mesh::generate_channel_mesh(
        Rect::new(-1.0, 1.0, -1.0, 1.0),
        Rect::new(-0.25, 0.25, -0.25, 0.25),
        8,
        None,
    )
    .unwrap();
    assert_eq!(written.n_vertices(), reference.n_vertices());
    assert_eq!(written.n_cells(), reference.n_cells());
    assert_eq!(
        written.boundary_edges().len(),
        reference.boundary_edges().len()
    );
    for m in [Marker::Inflow, Marker::Outflow, Marker::Wall, Marker::Obstacle] {
        let count = |mesh: &flowshape::TriMesh| {
            mesh.boundary_edges().iter().filter(|(_, _, k)| *k == m).count()
        };
        assert_eq!(count(&written), count(&reference), "{m:?}");
    }
    assert!(mesh_dir.join("domain.vtk").exists());

    let run_cfg = write_config(
        &dir,
        "run.toml",
        &format!(
            "[run]\nsteps = 2\nmesh_file = \"{}\"\n",
            mesh_file.display()
        ),
    );
    let run_dir = dir.join("runout");
    run_ok(bin().args([
        "run",
        "--config",
        run_cfg.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]));

    let history = std::fs::read_to_string(run_dir.join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines.len(), 4, "header + steps 0..=2:\n{history}");
    assert_eq!(lines[0], flowshape::optimizer::HISTORY_HEADER);
    assert!(lines[1].starts_with("0,winf,"));
    assert!(run_dir.join("timings.csv").exists());
    assert!(run_dir.join("final.mesh.txt").exists());
    // snapshots were not requested
    assert!(!run_dir.join("step_0000.vtk").exists());

    // the echoed config is a valid config reproducing the history
    let echoed = run_dir.join("config.resolved.toml");
    let replay_dir = dir.join("replay");
    run_ok(bin().args([
        "run",
        "--config",
        echoed.to_str().unwrap(),
        "--out",
        replay_dir.to_str().unwrap(),
    ]));
    let replay = std::fs::read_to_string(replay_dir.join("history.csv")).unwrap();
    assert_eq!(history, replay);

    let report_dir = dir.join("report");
    run_ok(bin().args([
        "report",
        run_dir.to_str().unwrap(),
        replay_dir.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]));
    let edges = std::fs::read_to_string(report_dir.join("report_edge_ratio.csv")).unwrap();
    let rows: Vec<&str> = edges.lines().collect();
    assert_eq!(rows[0], "step,runout,replay");
    assert!(rows[1].starts_with("0,1.00,1.00"), "{edges}");
    let jr = std::fs::read_to_string(report_dir.join("report_j_ratio.csv")).unwrap();
    assert!(jr.lines().nth(1).unwrap().starts_with("0,1.000000,1.000000"));

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn preset_flag_pins_the_benchmark_mesh() {
    let dir = scratch("preset");
    let out = run_ok(bin().args([
        "mesh",
        "--preset",
        "paper2d",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("17664 cells"), "{stdout}");
    assert!(stdout.contains("128 obstacle edges"), "{stdout}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn refine_flag_quadruples_cells() {
    let dir = scratch("refine");
    let cfg = write_config(&dir, "mesh.toml", TINY_MESH);
    for (tag, extra) in [("flat", None), ("fine", Some("1"))] {
        let out = dir.join(tag);
        let mut cmd = bin();
        cmd.args([
            "mesh",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        if let Some(n) = extra {
            cmd.args(["--refine", n]);
        }
        run_ok(&mut cmd);
    }
    let flat = read_mesh_txt(&dir.join("flat/domain.mesh.txt")).unwrap();
    let fine = read_mesh_txt(&dir.join("fine/domain.mesh.txt")).unwrap();
    assert_eq!(fine.n_cells(), 4 * flat.n_cells());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_config_exits_two_and_names_the_key() {
    let dir = scratch("badcfg");
    let cfg = write_config(&dir, "bad.toml", "[mesh]\nresolutionn = 8\n");
    let out = bin()
        .args([
            "mesh",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("x").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resolutionn"), "{stderr}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_preset_exits_two() {
    let dir = scratch("badpreset");
    let out = bin()
        .args(["mesh", "--preset", "mars", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn report_on_a_dir_without_history_exits_two() {
    let dir = scratch("noreport");
    let out = bin().args(["report", dir.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
