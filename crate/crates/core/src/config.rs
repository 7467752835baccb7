//! Configuration files: a preset name plus sectioned overrides.
//!
//! ```toml
//! preset = "reference"
//!
//! [solver]
//! dt = 5e-3
//!
//! [study]
//! axis = "eps"
//! levels = [1e-1, 1e-2, 1e-3, 1e-4]
//! ```
//!
//! Every key of every section is optional; missing keys keep the preset's
//! value and unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::assembly::ElasticityTensors;
use crate::constitutive::{CohesionSpec, MaterialParams};
use crate::error::{Error, Result};
use crate::mesh::{rect_mesh, Mesh, Point, Rect, SideMarkers};
use crate::monotone::ThermalLaw;
use crate::presets;
use crate::scenario::{InitialData, ScalarProfile, Scenario, SolverParams, Sources, Subsystem, ThermalInitial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Reference,
    Decoupled,
    Peel,
    Manufactured,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "reference" => Ok(Self::Reference),
            "decoupled" => Ok(Self::Decoupled),
            "peel" => Ok(Self::Peel),
            "manufactured" => Ok(Self::Manufactured),
            other => Err(Error::Parse(format!(
                "unknown preset \"{other}\" (expected reference, decoupled, peel or manufactured)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub extents: [f64; 4],
    pub sides: SideMarkers,
    /// ASCII mesh file; replaces the structured generator when set.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawName {
    Log,
    Power,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub lambda_e: f64,
    pub mu_e: f64,
    pub lambda_v: f64,
    pub mu_v: f64,
    pub k0: f64,
    pub k1: f64,
    pub lam: [f64; 3],
    pub sigma_coeffs: [f64; 4],
    pub sigma_window: [f64; 2],
    pub theta_eq: f64,
    /// Penalty parameter; the default scales with the elastic tensor.
    pub kappa: Option<f64>,
    pub law: LawName,
    pub power_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsystemName {
    Full,
    MechanicalBulk,
    Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub eps: f64,
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub field_tol: f64,
    pub field_max_iter: usize,
    pub linear_tol: f64,
    pub active_set_max_iter: usize,
    pub subsystem: SubsystemName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Entropy,
    Temperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Constant,
    /// `y − ½` relative to the extents.
    YSlope,
    /// `cos(πx)` relative to the extents.
    XCos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Bulk temperature `θ(x) = theta·(1 + amplitude·profile(x))`.
    pub theta: f64,
    pub theta_s: f64,
    pub profile: Profile,
    pub amplitude: f64,
    /// Constant added to the bulk entropy datum `w₀ = ℓ(θ)`.
    pub w0_shift: f64,
    pub chi0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub body_force: [f64; 2],
    pub traction: [f64; 2],
    pub heat: f64,
    pub surface_heat: f64,
    pub contact_heat_flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub emit_vtk: bool,
    /// Write a VTK snapshot every this many steps (and at the final step).
    pub vtk_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Dt,
    H,
    Mu,
    Eps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub axis: Axis,
    pub levels: Vec<f64>,
    /// For the h axis: keep `dt / h²` fixed at its value on the first level.
    #[serde(default)]
    pub dt_scales_with_h2: bool,
    /// Number of levels run concurrently.
    #[serde(default = "one")]
    pub threads: usize,
}

/// Fully resolved scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub preset: Preset,
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    pub solver: SolverSpec,
    pub initial: InitialSpec,
    pub loads: LoadSpec,
    pub output: OutputSpec,
    pub study: Option<StudySpec>,
}

/// Parses a configuration text. Overrides are applied after the file.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ScenarioSpec> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let preset = match table.remove("preset") {
        Some(Value::String(s)) => Preset::parse(&s)?,
        Some(other) => return Err(Error::Parse(format!("preset must be a string, got {other}"))),
        None => Preset::Reference,
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let preset = match table.remove("preset") {
        Some(Value::String(s)) => Preset::parse(&s)?,
        _ => preset,
    };
    let mut base = Value::try_from(presets::preset_spec(preset)).map_err(|e| Error::Parse(e.to_string()))?;
    merge(&mut base, Value::Table(table), "")?;
    let spec: ScenarioSpec = base
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

/// Spec of a preset with overrides applied.
pub fn preset_with_overrides(preset: Preset, overrides: &[String]) -> Result<ScenarioSpec> {
    let mut text = String::new();
    text.push_str(&format!("preset = \"{}\"\n", preset_name(preset)));
    parse_config(&text, overrides)
}

/// TOML text that parses back to `spec`.
pub fn to_toml(spec: &ScenarioSpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| Error::Parse(e.to_string()))
}

pub fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Reference => "reference",
        Preset::Decoupled => "decoupled",
        Preset::Peel => "peel",
        Preset::Manufactured => "manufactured",
    }
}

/// Applies `section.key=value`. The value is read as a TOML value, or as a
/// bare string if that fails.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override \"{assignment}\" is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("malformed override key \"{key}\"")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(Error::Parse(format!(
                    "override key \"{key}\": \"{p}\" is not a section"
                )))
            }
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn merge(base: &mut Value, over: Value, path: &str) -> Result<()> {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                let sub = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get_mut(&k) {
                    Some(existing @ Value::Table(_)) if v.is_table() => merge(existing, v, &sub)?,
                    Some(existing) => *existing = v,
                    None => {
                        b.insert(k, v);
                    }
                }
            }
            Ok(())
        }
        (b, o) => {
            *b = o;
            Ok(())
        }
    }
}

fn one() -> usize {
    1
}

fn bad<T>(msg: String) -> Result<T> {
    Err(Error::Validation(msg))
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        if m.file.is_none() && (m.nx == 0 || m.ny == 0) {
            return bad(format!(
                "mesh.nx and mesh.ny must be positive, got {} and {}",
                m.nx, m.ny
            ));
        }
        self.solver_params().validate()?;
        let mat = &self.material;
        if mat.law == LawName::Power && !(mat.power_exponent > 0.0) {
            return bad(format!(
                "material.power_exponent must be positive, got {}",
                mat.power_exponent
            ));
        }
        if let Some(k) = mat.kappa {
            if !(k > 0.0) {
                return bad(format!("material.kappa must be positive, got {k}"));
            }
        }
        let init = &self.initial;
        if !(0.0..=1.0).contains(&init.chi0) {
            return bad(format!("initial.chi0 must lie in [0, 1], got {}", init.chi0));
        }
        if self.output.vtk_every == 0 {
            return bad("output.vtk_every must be positive".into());
        }
        if let Some(study) = &self.study {
            if study.levels.len() < 3 {
                return bad(format!("study needs at least 3 levels, got {}", study.levels.len()));
            }
            if study
                .levels
                .iter()
                .any(|v| !(*v > 0.0) && !(study.axis == Axis::Eps && *v == 0.0))
            {
                return bad("study levels must be positive".into());
            }
            let dec = study.levels.windows(2).all(|w| w[1] < w[0]);
            let inc = study.levels.windows(2).all(|w| w[1] > w[0]);
            if !(dec || inc) {
                return bad("study levels must be strictly monotone".into());
            }
            if study.threads == 0 {
                return bad("study.threads must be positive".into());
            }
        }
        Ok(())
    }

    pub fn solver_params(&self) -> SolverParams {
        let s = &self.solver;
        SolverParams {
            eps: s.eps,
            mu: s.mu,
            dt: s.dt,
            t_end: s.t_end,
            fp_tol: s.fp_tol,
            fp_max_iter: s.fp_max_iter,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            field_tol: s.field_tol,
            field_max_iter: s.field_max_iter,
            linear_tol: s.linear_tol,
            active_set_max_iter: s.active_set_max_iter,
        }
    }

    pub fn rect(&self) -> Result<Rect> {
        let [x_min, y_min, x_max, y_max] = self.mesh.extents;
        if !(x_max > x_min && y_max > y_min) || self.mesh.extents.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidExtents(format!("{:?}", self.mesh.extents)));
        }
        Ok(Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match &self.mesh.file {
            Some(path) => Mesh::from_ascii(&std::fs::read_to_string(path)?),
            None => rect_mesh(self.mesh.nx, self.mesh.ny, self.rect()?, self.mesh.sides),
        }
    }

    pub fn law(&self) -> Result<ThermalLaw> {
        Ok(match self.material.law {
            LawName::Log => ThermalLaw::logarithmic(),
            LawName::Linear => ThermalLaw::linear(),
            LawName::Power => ThermalLaw::power_law(self.material.power_exponent)?,
        })
    }

    pub fn material_params(&self) -> Result<MaterialParams> {
        let m = &self.material;
        let tensors = ElasticityTensors::isotropic(m.lambda_e, m.mu_e, m.lambda_v, m.mu_v);
        Ok(MaterialParams {
            kappa_pen: m.kappa.unwrap_or_else(|| MaterialParams::default_kappa(&tensors)),
            tensors,
            k0: m.k0,
            k1: m.k1,
            lam: m.lam,
            sigma: CohesionSpec {
                coeffs: m.sigma_coeffs,
                window: m.sigma_window,
            },
            theta_eq: m.theta_eq,
            law: self.law()?,
        })
    }

    fn subsystem(&self) -> Subsystem {
        match self.solver.subsystem {
            SubsystemName::Full => Subsystem::Full,
            SubsystemName::MechanicalBulk => Subsystem::MechanicalBulk,
            SubsystemName::Surface => Subsystem::Surface,
        }
    }

    /// Builds the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let mesh = Arc::new(self.build_mesh()?);
        let material = self.material_params()?;
        let solver = self.solver_params();
        if self.preset == Preset::Manufactured {
            let mut sc = presets::manufactured_scenario(mesh, material, solver)?;
            sc.subsystem = self.subsystem();
            sc.validate()?;
            return Ok(sc);
        }
        let rect = self.rect().unwrap_or(Rect::unit());
        let init = self.initial.clone();
        let shape: Arc<dyn Fn(Point) -> f64 + Send + Sync> = match init.profile {
            Profile::Constant => Arc::new(|_| 0.0),
            Profile::YSlope => Arc::new(move |p: Point| (p[1] - rect.y_min) / rect.height() - 0.5),
            Profile::XCos => {
                Arc::new(move |p: Point| (std::f64::consts::PI * (p[0] - rect.x_min) / rect.width()).cos())
            }
        };
        let theta_level = init.theta;
        let amp = init.amplitude;
        let theta0 = move |p: Point| theta_level * (1.0 + amp * shape(p));
        let theta_s_level = init.theta_s;
        let thermal = match init.kind {
            InitialKind::Entropy => {
                let law = material.law;
                // check the data lies in the domain of ℓ
                for p in mesh.vertices() {
                    law.ell(theta0(*p))?;
                }
                law.ell(theta_s_level)?;
                let shift = init.w0_shift;
                let w0: ScalarProfile = Arc::new(move |p| law.ell(theta0(p)).unwrap_or(f64::NAN) + shift);
                let z: f64 = law.ell(theta_s_level)?;
                ThermalInitial::Entropy {
                    w0,
                    z0: Arc::new(move |_| z),
                }
            }
            InitialKind::Temperature => {
                let shift = init.w0_shift;
                ThermalInitial::Temperature {
                    theta0: Arc::new(move |p| theta0(p) + shift),
                    theta_s0: Arc::new(move |_| theta_s_level),
                }
            }
        };
        let chi0 = init.chi0;
        let l = self.loads.clone();
        let mut sources = Sources::default();
        if l.body_force != [0.0, 0.0] {
            let f = l.body_force;
            sources.body_force = Some(Arc::new(move |_, _| f));
        }
        if l.traction != [0.0, 0.0] {
            let g = l.traction;
            sources.traction = Some(Arc::new(move |_, _| g));
        }
        if l.heat != 0.0 {
            let h = l.heat;
            sources.heat = Some(Arc::new(move |_, _| h));
        }
        if l.surface_heat != 0.0 {
            let h = l.surface_heat;
            sources.surface_heat = Some(Arc::new(move |_, _| h));
        }
        if l.contact_heat_flux != 0.0 {
            let h = l.contact_heat_flux;
            sources.contact_heat_flux = Some(Arc::new(move |_, _| h));
        }
        let sc = Scenario {
            name: preset_name(self.preset).to_string(),
            mesh,
            material,
            solver,
            sources,
            initial: InitialData {
                thermal,
                u0: None,
                chi0: Arc::new(move |_| chi0),
            },
            subsystem: self.subsystem(),
            exact: None,
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_preset_defaults() {
        let spec = parse_config("preset = \"reference\"\n", &[]).unwrap();
        assert_eq!(spec, presets::preset_spec(Preset::Reference));
        let spec = parse_config("", &[]).unwrap();
        assert_eq!(spec.preset, Preset::Reference);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[solver]\nfoo = 1\n", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("foo"), "{err}");
        let err = parse_config("foo = 1\n", &[]).unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
    }

    #[test]
    fn zero_mu_is_rejected() {
        let err = parse_config("[solver]\nmu = 0.0\n", &[]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(err.to_string().contains("mu"));
    }

    #[test]
    fn overrides() {
        let spec = parse_config(
            "[solver]\ndt = 0.1\n",
            &[
                "solver.dt=0.05".into(),
                "material.law=linear".into(),
                "mesh.nx=4".into(),
            ],
        )
        .unwrap();
        assert_eq!(spec.solver.dt, 0.05);
        assert_eq!(spec.material.law, LawName::Linear);
        assert_eq!(spec.mesh.nx, 4);
        assert!(parse_config("", &["solver.dt".into()]).is_err());
        assert!(parse_config("", &["solver.nope=1".into()]).is_err());
        let spec = parse_config("", &["preset=decoupled".into()]).unwrap();
        assert_eq!(spec.preset, Preset::Decoupled);
        assert_eq!((spec.material.k0, spec.material.k1), (0.0, 0.0));
    }

    #[test]
    fn study_levels_must_be_monotone() {
        let ok = "[study]\naxis = \"eps\"\nlevels = [1e-1, 1e-2, 1e-3]\ndt_scales_with_h2 = false\nthreads = 1\n";
        assert!(parse_config(ok, &[]).is_ok());
        let bad = "[study]\naxis = \"eps\"\nlevels = [1e-1, 1e-3, 1e-2]\ndt_scales_with_h2 = false\nthreads = 1\n";
        assert!(parse_config(bad, &[]).is_err());
    }

    #[test]
    fn presets_build() {
        for p in [Preset::Reference, Preset::Decoupled, Preset::Peel, Preset::Manufactured] {
            let spec = preset_with_overrides(p, &["mesh.nx=4".into(), "mesh.ny=4".into()]).unwrap();
            spec.build().unwrap();
        }
    }
}
