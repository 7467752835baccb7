//! Writing runs and studies to disk: CSV time series, legacy VTK snapshots
//! and a JSON summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::assembly::dof;
use crate::config::{preset_name, ScenarioSpec};
use crate::diagnostics::{EnergyReport, CSV_HEADER, CSV_SCHEMA_VERSION};
use crate::error::Result;
use crate::linalg::norm_inf;
use crate::mesh::Mesh;
use crate::stepper::{Model, State, Trajectory};
use crate::study::{run_study, StudyResult};

pub const TRAJECTORY_HEADER: &str = "step,time,theta_min,theta_max,theta_s_min,theta_s_max,chi_min,chi_max,\
u_max,fp_iterations,fp_increment,active_set_iterations,active_nodes,bulk_newton_iterations,surface_newton_iterations";

/// Condensed outcome of a run, also written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub csv_schema_version: u32,
    pub steps: usize,
    pub final_time: f64,
    pub final_lyapunov: f64,
    pub final_psi_omega: f64,
    pub final_psi_gammac: f64,
    pub max_lyapunov_residual: f64,
    pub max_box_violation: f64,
    pub max_penetration: f64,
    pub min_theta_slack: f64,
    pub min_theta_s_slack: f64,
    /// Fixed-point iteration count -> number of steps that needed it.
    pub fp_iteration_histogram: BTreeMap<usize, usize>,
}

impl RunSummary {
    pub fn new(name: &str, traj: &Trajectory) -> Self {
        let r = &traj.reports;
        let last = r.last().expect("a trajectory has an initial report");
        let max = |f: fn(&EnergyReport) -> f64| r.iter().map(f).fold(0.0, f64::max);
        let min = |f: fn(&EnergyReport) -> f64| r.iter().map(f).fold(f64::INFINITY, f64::min);
        let mut hist = BTreeMap::new();
        for rec in &traj.records {
            *hist.entry(rec.fp_iterations).or_insert(0) += 1;
        }
        Self {
            scenario: name.to_string(),
            csv_schema_version: CSV_SCHEMA_VERSION,
            steps: traj.records.len(),
            final_time: last.time,
            final_lyapunov: last.lyapunov,
            final_psi_omega: last.psi_omega,
            final_psi_gammac: last.psi_gammac,
            max_lyapunov_residual: max(|x| x.lyapunov_residual.abs()),
            max_box_violation: max(|x| x.box_violation),
            max_penetration: max(|x| x.max_penetration),
            min_theta_slack: min(|x| x.min_theta_slack),
            min_theta_s_slack: min(|x| x.min_theta_s_slack),
            fp_iteration_histogram: hist,
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let hist: Vec<String> = self
            .fp_iteration_histogram
            .iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect();
        format!(
            "{}: {} steps to t={} L={:.6e} psi_omega={:.6e} psi_gammac={:.6e} max_residual={:.2e} \
box_violation={:.2e} max_penetration={:.2e} fp_iterations={{{}}}",
            self.scenario,
            self.steps,
            self.final_time,
            self.final_lyapunov,
            self.final_psi_omega,
            self.final_psi_gammac,
            self.max_lyapunov_residual,
            self.max_box_violation,
            self.max_penetration,
            hist.join(",")
        )
    }
}

pub fn reports_csv(reports: &[EnergyReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(model: &Model, traj: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    for (n, s) in traj.states.iter().enumerate() {
        let (t0, t1) = range(&s.theta);
        let (s0, s1) = range(&s.theta_s);
        let (c0, c1) = range(&s.chi);
        let u_max = (0..model.mesh().num_vertices())
            .map(|v| {
                let d = s.displacement(v);
                d[0].hypot(d[1])
            })
            .fold(0.0, f64::max);
        let (fp, inc, asi, an, bn, sn) = match n.checked_sub(1).map(|k| &traj.records[k]) {
            Some(r) => {
                let inc = r.trace.last().map_or(0.0, |t| norm_inf(t));
                (
                    r.fp_iterations,
                    inc,
                    r.active_set_iterations,
                    r.active_nodes,
                    r.bulk_newton_iterations,
                    r.surface_newton_iterations,
                )
            }
            None => (0, 0.0, 0, 0, 0, 0),
        };
        let _ = writeln!(
            out,
            "{n},{:e},{t0:e},{t1:e},{s0:e},{s1:e},{c0:e},{c1:e},{u_max:e},{fp},{inc:e},{asi},{an},{bn},{sn}",
            s.time
        );
    }
    out
}

/// Legacy ASCII VTK of the bulk fields θ, w and u.
pub fn bulk_vtk(mesh: &Mesh, s: &State) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# vtk DataFile Version 3.0\nbulk t={:e}\nASCII\nDATASET UNSTRUCTURED_GRID",
        s.time
    );
    let verts = mesh.vertices();
    let _ = writeln!(out, "POINTS {} double", verts.len());
    for p in verts {
        let _ = writeln!(out, "{:e} {:e} 0", p[0], p[1]);
    }
    let cells = mesh.cells();
    let _ = writeln!(out, "CELLS {} {}", cells.len(), 4 * cells.len());
    for c in cells {
        let _ = writeln!(out, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in cells {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", verts.len());
    for (name, field) in [("theta", &s.theta), ("w", &s.w)] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in field {
            let _ = writeln!(out, "{v:e}");
        }
    }
    out.push_str("VECTORS u double\n");
    for v in 0..verts.len() {
        let _ = writeln!(out, "{:e} {:e} 0", s.u[dof(v, 0)], s.u[dof(v, 1)]);
    }
    out
}

/// Legacy ASCII VTK of the contact fields θ_s, z, χ on Γ_c.
pub fn contact_vtk(mesh: &Mesh, s: &State) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# vtk DataFile Version 3.0\ncontact t={:e}\nASCII\nDATASET UNSTRUCTURED_GRID",
        s.time
    );
    let n = mesh.num_contact_nodes();
    let _ = writeln!(out, "POINTS {n} double");
    for k in 0..n {
        let p = mesh.contact_position(k);
        let _ = writeln!(out, "{:e} {:e} 0", p[0], p[1]);
    }
    let cells = mesh.contact_cells();
    let _ = writeln!(out, "CELLS {} {}", cells.len(), 3 * cells.len());
    for c in cells {
        let _ = writeln!(out, "2 {} {}", c[0], c[1]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    for _ in cells {
        out.push_str("3\n");
    }
    let _ = writeln!(out, "POINT_DATA {n}");
    for (name, field) in [("theta_s", &s.theta_s), ("z", &s.z), ("chi", &s.chi)] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in field {
            let _ = writeln!(out, "{v:e}");
        }
    }
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Runs the scenario described by `spec` and writes `reports.csv`,
/// `trajectory.csv`, `summary.json` and, if enabled, VTK snapshots to `out`.
pub fn run_scenario(spec: &ScenarioSpec, out: &Path) -> Result<RunSummary> {
    let model = Model::new(spec.build()?)?;
    fs::create_dir_all(out)?;
    let traj = model.run()?;
    write(out, "reports.csv", &reports_csv(&traj.reports))?;
    write(out, "trajectory.csv", &trajectory_csv(&model, &traj))?;
    if spec.output.emit_vtk {
        let last = traj.states.len() - 1;
        let every = spec.output.vtk_every.max(1);
        for (n, s) in traj.states.iter().enumerate() {
            if n % every == 0 || n == last {
                write(out, &format!("bulk_{n:05}.vtk"), &bulk_vtk(model.mesh(), s))?;
                write(out, &format!("contact_{n:05}.vtk"), &contact_vtk(model.mesh(), s))?;
            }
        }
    }
    let summary = RunSummary::new(preset_name(spec.preset), &traj);
    write(out, "summary.json", &to_json(&summary))?;
    Ok(summary)
}

/// Runs the study in `spec.study` and writes `study.csv` and `study.json` to `out`.
pub fn run_study_to(spec: &ScenarioSpec, out: &Path) -> Result<StudyResult> {
    fs::create_dir_all(out)?;
    let result = run_study(spec)?;
    write(out, "study.csv", &result.to_csv())?;
    write(out, "study.json", &to_json(&result))?;
    Ok(result)
}

/// JSON with non-finite numbers written as `null`.
fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset_with_overrides, Preset};

    #[test]
    fn zero_end_time_writes_initial_state_only() {
        let dir = tempfile::tempdir().unwrap();
        let ov = ["solver.t_end=0.0".to_string(), "mesh.nx=4".into(), "mesh.ny=4".into()];
        let spec = preset_with_overrides(Preset::Reference, &ov).unwrap();
        let summary = run_scenario(&spec, dir.path()).unwrap();
        assert_eq!(summary.steps, 0);
        let csv = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn vtk_counts() {
        let spec = preset_with_overrides(Preset::Reference, &["mesh.nx=3".into(), "mesh.ny=2".into()]).unwrap();
        let model = Model::new(spec.build().unwrap()).unwrap();
        let s = model.initial_state().unwrap();
        let v = bulk_vtk(model.mesh(), &s);
        assert!(v.contains("POINTS 12 double"));
        assert!(v.contains("CELLS 12 48"));
        let c = contact_vtk(model.mesh(), &s);
        assert!(c.contains("POINTS 4 double"));
        assert!(c.contains("CELLS 3 9"));
    }
}
