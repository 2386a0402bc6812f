//! Command line driver: `mesh` generates channel meshes, `run` drives the
//! optimization loop, `report` tabulates completed runs.
//!
//! Exit codes: 0 success, 2 config or input error, 3 numerical failure.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ConfigFile;
use flowshape::mesh::write_mesh_txt;
use flowshape::optimizer::optimize;
use flowshape::vtk::{write_vtk, VertexFields};
use flowshape::{Error, Marker, Result, TriMesh};

#[derive(Parser)]
#[command(name = "flowshape", version, about = "energy-dissipation shape optimization in a 2d channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a channel mesh: domain.mesh.txt plus a VTK preview
    Mesh(CommonArgs),
    /// Run the descent loop: history.csv, timings.csv, snapshots
    Run(RunArgs),
    /// Tabulate completed runs into step-aligned comparison CSVs
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// toml config; every key has a default when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// named preset overriding the [mesh] section (paper2d)
    #[arg(long)]
    preset: Option<String>,
    /// uniform refinement count, overriding [mesh].refine
    #[arg(long)]
    refine: Option<usize>,
    /// output directory, created if missing
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// write per-step VTK snapshots (overrides [run].snapshots)
    #[arg(long)]
    snapshots: bool,
    /// linear algebra thread cap; 1 = sequential, 0 = all cores
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// print one line per outer step
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// completed run directories, each holding a history.csv
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// directory for the tables; prints to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mesh(args) => cmd_mesh(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Report(args) => report::cmd_report(&args.runs, args.out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Geometry(_)
        | Error::Mesh(_) => 2,
        _ => 3,
    }
}

fn load_config(args: &CommonArgs) -> Result<ConfigFile> {
    let mut cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(name) = &args.preset {
        cfg.apply_preset(name)?;
    }
    if let Some(n) = args.refine {
        cfg.mesh.refine = n;
    }
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn obstacle_edge_count(mesh: &TriMesh) -> usize {
    mesh.boundary_edges()
        .iter()
        .filter(|(_, _, m)| *m == Marker::Obstacle)
        .count()
}

fn cmd_mesh(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let mesh = cfg.generate_mesh()?;
    ensure_dir(&args.out)?;
    let mesh_path = args.out.join("domain.mesh.txt");
    write_mesh_txt(&mesh, &mesh_path)?;
    write_vtk(&mesh, &VertexFields::default(), &args.out.join("domain.vtk"))?;
    write_text(&args.out.join("config.resolved.toml"), &cfg.to_toml()?)?;
    println!(
        "mesh: {} vertices, {} cells, {} obstacle edges, fluid area {:.6}",
        mesh.n_vertices(),
        mesh.n_cells(),
        obstacle_edge_count(&mesh),
        mesh.total_area(),
    );
    println!("wrote {}", mesh_path.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    flowshape::fem::set_threads(args.threads);
    let mut cfg = load_config(&args.common)?;
    if args.snapshots {
        cfg.run.snapshots = true;
    }
    let mesh = cfg.load_or_generate_mesh()?;
    let out = &args.common.out;
    ensure_dir(out)?;
    // echo the config before the run so failures still leave it behind
    cfg.resolve_paths()?;
    write_text(&out.join("config.resolved.toml"), &cfg.to_toml()?)?;
    let run_cfg = cfg.run_config(out, args.verbose)?;
    let (final_mesh, history) = optimize(&mesh, &run_cfg)?;
    write_mesh_txt(&final_mesh, &out.join("final.mesh.txt"))?;
    let last = history.steps.last().expect("at least the step-0 row");
    println!(
        "run: method {}, {} steps, J {:.6e} -> {:.6e} (J/J0 {:.4})",
        history.method,
        history.steps.len() - 1,
        history.j0,
        last.j,
        last.j_over_j0,
    );
    println!("wrote {}", out.join("history.csv").display());
    Ok(())
}
