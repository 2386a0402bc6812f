//! Config file model: toml with sections [mesh], [flow], [descent], [run].
//! Every key has a default, unknown keys are rejected, and the resolved form
//! is echoed into each output directory so a run can be replayed from it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use flowshape::flow::FlowConfig;
use flowshape::mesh::{generate_channel_mesh, read_mesh_txt};
use flowshape::optimizer::RunConfig;
use flowshape::plap::PlapConfig;
use flowshape::winf::AdmmConfig;
use flowshape::{Error, Rect, Result, TriMesh};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub mesh: MeshSection,
    pub flow: FlowSection,
    pub descent: DescentSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    /// outer box [xmin, xmax, ymin, ymax]
    pub tunnel: [f64; 4],
    /// obstacle box [xmin, xmax, ymin, ymax]
    pub obstacle: [f64; 4],
    /// obstacle-loop segment count; >= 8 and divisible by 4
    pub resolution: usize,
    /// graded ring count; sized from the geometry when absent
    pub rings: Option<usize>,
    /// uniform refinements applied after generation
    pub refine: usize,
}

impl Default for MeshSection {
    fn default() -> MeshSection {
        MeshSection {
            tunnel: [-7.0, 7.0, -3.0, 3.0],
            obstacle: [-0.5, 0.5, -0.5, 0.5],
            resolution: 32,
            rings: None,
            refine: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub nu: f64,
    /// zero | cosine | parabolic
    pub inflow: String,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for FlowSection {
    fn default() -> FlowSection {
        let d = FlowConfig::default();
        FlowSection {
            nu: d.nu,
            inflow: d.inflow.as_str().to_string(),
            newton_tol: d.newton_tol,
            newton_max_iters: d.newton_max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentSection {
    /// winf | plap
    pub method: String,
    /// initial gradient bound, in (0, 1)
    pub sigma0: f64,
    /// spectral | frobenius
    pub norm: String,
    /// radial | clip
    pub projection: String,
    pub tau: f64,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub max_iters: usize,
    pub doubling_cap: usize,
    pub newton_max_iters: usize,
    pub p_schedule: Vec<f64>,
    pub eps_reg: f64,
    /// multiplies the shape derivative before each descent solve
    pub derivative_scale: f64,
}

impl Default for DescentSection {
    fn default() -> DescentSection {
        let a = AdmmConfig::default();
        let p = PlapConfig::default();
        DescentSection {
            method: "winf".to_string(),
            sigma0: a.sigma,
            norm: a.norm.as_str().to_string(),
            projection: a.projection.as_str().to_string(),
            tau: a.tau,
            eps2: a.eps2,
            eps3: a.eps3,
            max_iters: a.max_iters,
            doubling_cap: a.doubling_cap,
            newton_max_iters: a.newton_max_iters,
            p_schedule: p.p_schedule,
            eps_reg: p.eps_reg,
            derivative_scale: RunConfig::default().derivative_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub steps: usize,
    /// early-stop threshold on |J'(u)|; disabled when absent
    pub eps1: Option<f64>,
    /// read this mesh instead of generating one from [mesh]
    pub mesh_file: Option<PathBuf>,
    pub snapshots: bool,
    /// direct | krylov
    pub solver: String,
}

impl Default for RunSection {
    fn default() -> RunSection {
        RunSection {
            steps: 50,
            eps1: None,
            mesh_file: None,
            snapshots: false,
            solver: "direct".to_string(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.display().to_string();
    move |source| Error::Io { path, source }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        parse_toml(&text, &path.display().to_string())
    }

    /// Named presets overriding the [mesh] section. `paper2d` pins the
    /// benchmark channel: 14x6 tunnel, unit-square obstacle split into 128
    /// edges, 69 graded rings.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "paper2d" => {
                self.mesh.tunnel = [-7.0, 7.0, -3.0, 3.0];
                self.mesh.obstacle = [-0.5, 0.5, -0.5, 0.5];
                self.mesh.resolution = 128;
                self.mesh.rings = Some(69);
                Ok(())
            }
            other => Err(Error::Input(format!(
                "unknown preset '{other}' (available: paper2d)"
            ))),
        }
    }

    pub fn generate_mesh(&self) -> Result<TriMesh> {
        let t = rect(self.mesh.tunnel, "mesh.tunnel")?;
        let o = rect(self.mesh.obstacle, "mesh.obstacle")?;
        let mut mesh = generate_channel_mesh(t, o, self.mesh.resolution, self.mesh.rings)?;
        for _ in 0..self.mesh.refine {
            mesh = mesh.refine_uniform();
        }
        Ok(mesh)
    }

    /// Mesh for a run: `run.mesh_file` when set (with [mesh].refine still
    /// applied), generated from [mesh] otherwise.
    pub fn load_or_generate_mesh(&self) -> Result<TriMesh> {
        match &self.run.mesh_file {
            Some(f) => {
                let mut mesh = read_mesh_txt(f)?;
                for _ in 0..self.mesh.refine {
                    mesh = mesh.refine_uniform();
                }
                Ok(mesh)
            }
            None => self.generate_mesh(),
        }
    }

    /// Pins `mesh_file` to an absolute path so the echoed config replays
    /// from any working directory.
    pub fn resolve_paths(&mut self) -> Result<()> {
        if let Some(f) = &self.run.mesh_file {
            let abs = std::fs::canonicalize(f).map_err(io_err(f))?;
            self.run.mesh_file = Some(abs);
        }
        Ok(())
    }

    pub fn flow_config(&self) -> Result<FlowConfig> {
        Ok(FlowConfig {
            nu: self.flow.nu,
            inflow: self.flow.inflow.parse()?,
            newton_tol: self.flow.newton_tol,
            newton_max_iters: self.flow.newton_max_iters,
            method: self.run.solver.parse()?,
        })
    }

    pub fn run_config(&self, out_dir: &Path, verbose: bool) -> Result<RunConfig> {
        let admm = AdmmConfig {
            sigma: self.descent.sigma0,
            tau: self.descent.tau,
            eps2: self.descent.eps2,
            eps3: self.descent.eps3,
            max_iters: self.descent.max_iters,
            norm: self.descent.norm.parse()?,
            projection: self.descent.projection.parse()?,
            doubling_cap: self.descent.doubling_cap,
            newton_max_iters: self.descent.newton_max_iters,
            trace: false,
        };
        let plap = PlapConfig {
            p_schedule: self.descent.p_schedule.clone(),
            eps_reg: self.descent.eps_reg,
            newton_max_iters: self.descent.newton_max_iters,
            ..PlapConfig::default()
        };
        Ok(RunConfig {
            method: self.descent.method.parse()?,
            m_steps: self.run.steps,
            sigma0: self.descent.sigma0,
            derivative_scale: self.descent.derivative_scale,
            eps1: self.run.eps1,
            flow: self.flow_config()?,
            admm,
            plap,
            out_dir: Some(out_dir.to_path_buf()),
            snapshots: self.run.snapshots,
            verbose,
            ..RunConfig::default()
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Input(format!("config not serializable: {e}")))
    }
}

pub fn parse_toml(text: &str, origin: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(0);
        Error::Parse {
            path: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })
}

fn rect(v: [f64; 4], key: &str) -> Result<Rect> {
    if !(v.iter().all(|x| x.is_finite()) && v[0] < v[1] && v[2] < v[3]) {
        return Err(Error::Input(format!(
            "{key} = {v:?} must be finite [xmin, xmax, ymin, ymax] with xmin < xmax, ymin < ymax"
        )));
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ConfigFile::default();
        let text = cfg.to_toml().unwrap();
        let back = parse_toml(&text, "inline").unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_sections_fill_from_defaults() {
        let cfg = parse_toml("[run]\nsteps = 3\n", "inline").unwrap();
        assert_eq!(cfg.run.steps, 3);
        assert_eq!(cfg.mesh.resolution, MeshSection::default().resolution);
        assert_eq!(cfg.descent.method, "winf");
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = parse_toml("[mesh]\nresolutionn = 8\n", "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("resolutionn"), "{msg}");
        assert!(matches!(err, Error::Parse { line: 1..=2, .. }), "{err:?}");
    }

    #[test]
    fn bad_geometry_is_an_input_error() {
        let mut cfg = ConfigFile::default();
        cfg.mesh.tunnel = [1.0, -1.0, -1.0, 1.0];
        let err = cfg.generate_mesh().unwrap_err();
        assert!(err.to_string().contains("mesh.tunnel"), "{err}");
    }

    #[test]
    fn preset_pins_the_benchmark_mesh_section() {
        let mut cfg = ConfigFile::default();
        cfg.apply_preset("paper2d").unwrap();
        assert_eq!(cfg.mesh.resolution, 128);
        assert_eq!(cfg.mesh.rings, Some(69));
        assert!(cfg.apply_preset("huge3d").is_err());
    }

    #[test]
    fn sections_translate_into_solver_configs() {
        let text = "\
[flow]
nu = 0.05
inflow = \"parabolic\"

[descent]
method = \"plap\"
sigma0 = 0.25
norm = \"frobenius\"
projection = \"clip\"

[run]
steps = 7
solver = \"krylov\"
";
        let cfg = parse_toml(text, "inline").unwrap();
        let rc = cfg.run_config(Path::new("/tmp/out"), false).unwrap();
        assert_eq!(rc.m_steps, 7);
        assert_eq!(rc.sigma0, 0.25);
        assert_eq!(rc.method.as_str(), "plap");
        assert_eq!(rc.flow.nu, 0.05);
        assert!(matches!(
            rc.flow.method,
            flowshape::fem::SolveMethod::Krylov
        ));
        assert!(matches!(rc.admm.norm, flowshape::winf::TensorNorm::Frobenius));
        assert!(matches!(
            rc.admm.projection,
            flowshape::winf::Projection::Clip
        ));

        let bad = parse_toml("[descent]\nmethod = \"sgd\"\n", "inline").unwrap();
        assert!(bad.run_config(Path::new("/tmp/out"), false).is_err());
    }
}
