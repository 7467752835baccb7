//! Refinement and regularization studies.

use std::collections::HashMap;

use serde::Serialize;

use crate::assembly::{dof, SystemMatrices};
use crate::config::{Axis, ScenarioSpec};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{Mesh, DIM};
use crate::stepper::{Model, State, Trajectory};

/// Final-time `L²` errors against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldErrors {
    pub theta: f64,
    pub theta_s: f64,
    pub u: f64,
    pub chi: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub value: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub steps: usize,
    /// `None` when the run succeeded.
    pub failure: Option<String>,
    pub final_lyapunov: f64,
    pub min_theta_slack: f64,
    pub min_theta_s_slack: f64,
    pub max_penetration: f64,
    pub max_fp_iterations: usize,
    pub errors: Option<FieldErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub axis: Axis,
    pub levels: Vec<LevelResult>,
    /// Distance between levels `i` and `i+1`, `NaN` if either failed.
    pub differences: Vec<f64>,
    pub difference_orders: Vec<f64>,
    /// Observed orders of `errors.total` between consecutive levels.
    pub error_orders: Vec<f64>,
}

impl StudyResult {
    pub fn differences_strictly_decrease(&self) -> bool {
        self.differences.iter().all(|d| d.is_finite()) && self.differences.windows(2).all(|w| w[1] < w[0])
    }

    pub const CSV_HEADER: &'static str = "axis,value,nx,ny,dt,steps,status,final_lyapunov,min_theta_slack,\
min_theta_s_slack,max_penetration,max_fp_iterations,err_theta,err_theta_s,err_u,err_chi,err_total,\
diff_to_next,diff_order,err_order";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let axis = match self.axis {
            Axis::Dt => "dt",
            Axis::H => "h",
            Axis::Mu => "mu",
            Axis::Eps => "eps",
        };
        for (i, l) in self.levels.iter().enumerate() {
            let e = l.errors.unwrap_or(FieldErrors {
                theta: f64::NAN,
                theta_s: f64::NAN,
                u: f64::NAN,
                chi: f64::NAN,
                total: f64::NAN,
            });
            let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(f64::NAN);
            let order_idx = i.wrapping_sub(1);
            out.push_str(&format!(
                "{axis},{:e},{},{},{:e},{},{},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                l.value,
                l.nx,
                l.ny,
                l.dt,
                l.steps,
                if l.failure.is_none() { "ok" } else { "failed" },
                l.final_lyapunov,
                l.min_theta_slack,
                l.min_theta_s_slack,
                l.max_penetration,
                l.max_fp_iterations,
                e.theta,
                e.theta_s,
                e.u,
                e.chi,
                e.total,
                at(&self.differences, i),
                at(&self.difference_orders, order_idx),
                at(&self.error_orders, order_idx),
            ));
        }
        out
    }
}

/// Spec of one study level.
pub fn level_spec(base: &ScenarioSpec, axis: Axis, value: f64, first: f64) -> ScenarioSpec {
    let mut spec = base.clone();
    spec.study = None;
    match axis {
        Axis::Dt => spec.solver.dt = value,
        Axis::Mu => spec.solver.mu = value,
        Axis::Eps => spec.solver.eps = value,
        Axis::H => {
            let [x0, y0, x1, y1] = spec.mesh.extents;
            spec.mesh.nx = ((x1 - x0) / value).round().max(1.0) as usize;
            spec.mesh.ny = ((y1 - y0) / value).round().max(1.0) as usize;
            if base.study.as_ref().is_some_and(|s| s.dt_scales_with_h2) {
                spec.solver.dt = base.solver.dt * (value / first).powi(2);
            }
        }
    }
    spec
}

pub struct LevelRun {
    pub model: Model,
    pub trajectory: Trajectory,
}

pub fn run_level(spec: &ScenarioSpec) -> Result<LevelRun> {
    let model = Model::new(spec.build()?)?;
    let trajectory = model.run()?;
    Ok(LevelRun { model, trajectory })
}

/// `L²` errors of the final state against the attached exact solution.
pub fn final_errors(model: &Model, s: &State) -> Option<FieldErrors> {
    let exact = model.scenario.exact.as_ref()?;
    let mesh = model.mesh();
    let sys = &model.sys;
    let t = s.time;
    let verts = mesh.vertices();
    let cpts: Vec<_> = (0..mesh.num_contact_nodes())
        .map(|k| mesh.contact_position(k))
        .collect();
    let e_theta: Vec<f64> = verts
        .iter()
        .zip(&s.theta)
        .map(|(&p, v)| v - exact.theta(p, t))
        .collect();
    let e_ts: Vec<f64> = cpts
        .iter()
        .zip(&s.theta_s)
        .map(|(&p, v)| v - exact.theta_s(p, t))
        .collect();
    let e_chi: Vec<f64> = cpts.iter().zip(&s.chi).map(|(&p, v)| v - exact.chi(p, t)).collect();
    let mut e_u = [vec![0.0; verts.len()], vec![0.0; verts.len()]];
    for (v, &p) in verts.iter().enumerate() {
        let ex = exact.u(p, t);
        for c in 0..DIM {
            e_u[c][v] = s.u[dof(v, c)] - ex[c];
        }
    }
    let theta = sys.mass.quad_form(&e_theta).sqrt();
    let theta_s = sys.contact_mass.quad_form(&e_ts).sqrt();
    let chi = sys.contact_mass.quad_form(&e_chi).sqrt();
    let u = (sys.mass.quad_form(&e_u[0]) + sys.mass.quad_form(&e_u[1])).sqrt();
    Some(FieldErrors {
        theta,
        theta_s,
        u,
        chi,
        total: (theta * theta + theta_s * theta_s + u * u + chi * chi).sqrt(),
    })
}

/// Maps each vertex of `coarse` to the vertex of `fine` at the same position.
fn nested_vertex_map(coarse: &Mesh, fine: &Mesh) -> Result<Vec<usize>> {
    let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
    let index: HashMap<_, _> = fine.vertices().iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
    coarse
        .vertices()
        .iter()
        .map(|&p| {
            index
                .get(&key(p))
                .copied()
                .ok_or_else(|| Error::Validation("h-study meshes must be nested".into()))
        })
        .collect()
}

/// `(Σ_n τ ‖X_a(t_n) − X_b(t_n)‖²)^{1/2}` over the time levels common to both
/// runs, with `H¹` norms on the mesh of `a` for θ, u and on Γ_c for θ_s, χ.
pub fn trajectory_distance(a: &LevelRun, b: &LevelRun) -> Result<f64> {
    let (ma, mb) = (a.model.mesh(), b.model.mesh());
    let map = if ma.num_vertices() == mb.num_vertices() {
        (0..ma.num_vertices()).collect()
    } else if ma.num_vertices() < mb.num_vertices() {
        nested_vertex_map(ma, mb)?
    } else {
        return trajectory_distance(b, a);
    };
    let cmap: Vec<usize> = ma
        .trace_map()
        .iter()
        .map(|&v| mb.contact_index(map[v]).expect("contact vertex maps to contact vertex"))
        .collect();
    let sys: &SystemMatrices = &a.model.sys;
    let h1 = SparseMatrix::lin_comb(&[(1.0, &sys.mass), (1.0, &sys.stiffness)]);
    let h1c = SparseMatrix::lin_comb(&[(1.0, &sys.contact_mass), (1.0, &sys.contact_stiffness)]);
    let (ta, tb) = (&a.trajectory.states, &b.trajectory.states);
    let (coarse_dt, coarse, fine, a_is_coarse) = if a.model.solver().dt >= b.model.solver().dt {
        (a.model.solver().dt, ta, tb, true)
    } else {
        (b.model.solver().dt, tb, ta, false)
    };
    let fine_dt = if a_is_coarse {
        b.model.solver().dt
    } else {
        a.model.solver().dt
    };
    let mut sum = 0.0;
    for sc in coarse.iter().skip(1) {
        let k = (sc.time / fine_dt).round() as usize;
        let Some(sf) = fine.get(k) else { continue };
        if (sf.time - sc.time).abs() > 1e-9 * sc.time.max(1.0) {
            continue;
        }
        let (sa, sb) = if a_is_coarse { (sc, sf) } else { (sf, sc) };
        let dtheta: Vec<f64> = (0..map.len()).map(|i| sa.theta[i] - sb.theta[map[i]]).collect();
        let dts: Vec<f64> = (0..cmap.len()).map(|i| sa.theta_s[i] - sb.theta_s[cmap[i]]).collect();
        let dchi: Vec<f64> = (0..cmap.len()).map(|i| sa.chi[i] - sb.chi[cmap[i]]).collect();
        let mut du = 0.0;
        for c in 0..DIM {
            let d: Vec<f64> = (0..map.len()).map(|i| sa.u[dof(i, c)] - sb.u[dof(map[i], c)]).collect();
            du += h1.quad_form(&d);
        }
        sum += coarse_dt * (h1.quad_form(&dtheta) + h1c.quad_form(&dts) + du + h1c.quad_form(&dchi));
    }
    Ok(sum.sqrt())
}

fn summarize(spec: &ScenarioSpec, value: f64, run: &std::result::Result<LevelRun, Error>) -> LevelResult {
    let mut r = LevelResult {
        value,
        nx: spec.mesh.nx,
        ny: spec.mesh.ny,
        dt: spec.solver.dt,
        steps: spec.solver_params().num_steps(),
        failure: None,
        final_lyapunov: f64::NAN,
        min_theta_slack: f64::NAN,
        min_theta_s_slack: f64::NAN,
        max_penetration: f64::NAN,
        max_fp_iterations: 0,
        errors: None,
    };
    match run {
        Err(e) => r.failure = Some(e.to_string()),
        Ok(run) => {
            let reps = &run.trajectory.reports;
            r.final_lyapunov = reps.last().map_or(f64::NAN, |x| x.lyapunov);
            r.min_theta_slack = reps.iter().map(|x| x.min_theta_slack).fold(f64::INFINITY, f64::min);
            r.min_theta_s_slack = reps.iter().map(|x| x.min_theta_s_slack).fold(f64::INFINITY, f64::min);
            r.max_penetration = reps.iter().map(|x| x.max_penetration).fold(0.0, f64::max);
            r.max_fp_iterations = run
                .trajectory
                .records
                .iter()
                .map(|x| x.fp_iterations)
                .max()
                .unwrap_or(0);
            r.errors = final_errors(&run.model, run.trajectory.states.last().unwrap());
        }
    }
    r
}

/// Runs every level of `spec.study` and compares consecutive levels.
/// Failed levels are recorded and leave `NaN` entries behind.
pub fn run_study(spec: &ScenarioSpec) -> Result<StudyResult> {
    let study = spec
        .study
        .clone()
        .ok_or_else(|| Error::Validation("the config has no [study] section".into()))?;
    let first = study.levels[0];
    let specs: Vec<ScenarioSpec> = study
        .levels
        .iter()
        .map(|&v| level_spec(spec, study.axis, v, first))
        .collect();
    let mut runs: Vec<Option<std::result::Result<LevelRun, Error>>> = (0..specs.len()).map(|_| None).collect();
    for chunk in (0..specs.len()).collect::<Vec<_>>().chunks(study.threads) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&i| {
                    let sp = &specs[i];
                    s.spawn(move || run_level(sp))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("study worker panicked"))
                .collect()
        });
        for (&i, r) in chunk.iter().zip(results) {
            runs[i] = Some(r);
        }
    }
    let runs: Vec<_> = runs.into_iter().map(|r| r.unwrap()).collect();
    let levels: Vec<LevelResult> = specs
        .iter()
        .zip(&study.levels)
        .zip(&runs)
        .map(|((s, &v), r)| summarize(s, v, r))
        .collect();

    let mut differences = Vec::new();
    for w in runs.windows(2) {
        differences.push(match (&w[0], &w[1]) {
            (Ok(a), Ok(b)) => trajectory_distance(a, b)?,
            _ => f64::NAN,
        });
    }
    let ratio = |i: usize| (study.levels[i] / study.levels[i + 1]).ln();
    let difference_orders = (0..differences.len().saturating_sub(1))
        .map(|i| (differences[i] / differences[i + 1]).ln() / ratio(i + 1))
        .collect();
    let errs: Vec<f64> = levels.iter().map(|l| l.errors.map_or(f64::NAN, |e| e.total)).collect();
    let error_orders = if errs.iter().all(|e| e.is_nan()) {
        Vec::new()
    } else {
        observed_orders(&study.levels, &errs)
    };
    Ok(StudyResult {
        axis: study.axis,
        levels,
        differences,
        difference_orders,
        error_orders,
    })
}

/// Observed order `ln(e_i / e_{i+1}) / ln(h_i / h_{i+1})` for each consecutive pair.
pub fn observed_orders(values: &[f64], errors: &[f64]) -> Vec<f64> {
    (0..values.len().saturating_sub(1))
        .map(|i| (errors[i] / errors[i + 1]).ln() / (values[i] / values[i + 1]).ln())
        .collect()
}
