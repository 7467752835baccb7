//! Energy, dissipation and constraint diagnostics.
//!
//! The Lyapunov functional and its balance are assembled from the tested
//! discrete equations, so the residual only sees solver tolerances.

use serde::Serialize;

use crate::assembly::dof;
use crate::error::Result;
use crate::linalg::{dot, SparseMatrix};
use crate::mesh::DIM;
use crate::monotone::{coercivity_bound, entropy_potential, jstar_moreau};
use crate::stepper::{Model, State, StepRecord};

/// Version of the CSV column layout written by [`EnergyReport::csv_row`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "step,time,psi_omega,psi_gammac,penalty_energy,diss_volume_rate,diss_surface_rate,\
exchange_dissipation,lyapunov,lyapunov_residual,l1_theta,l1_theta_s,max_penetration,box_violation,\
moreau_budget,min_theta_slack,min_theta_s_slack,min_coercivity_slack,domain_feasible,fp_iterations,active_nodes";

/// Diagnostics of one time level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub step: usize,
    pub time: f64,
    pub psi_omega: f64,
    pub psi_gammac: f64,
    /// `Σ κ/2 [u·n]₊²`, kept out of `psi_gammac`.
    pub penalty_energy: f64,
    pub diss_volume_rate: f64,
    pub diss_surface_rate: f64,
    pub exchange_dissipation: f64,
    pub lyapunov: f64,
    pub lyapunov_residual: f64,
    pub l1_theta: f64,
    pub l1_theta_s: f64,
    pub max_penetration: f64,
    pub box_violation: f64,
    pub moreau_budget: f64,
    pub min_theta_slack: f64,
    pub min_theta_s_slack: f64,
    pub min_coercivity_slack: f64,
    /// Whether every nodal temperature lies in the domain of `j`.
    pub domain_feasible: bool,
    pub fp_iterations: usize,
    pub active_nodes: usize,
}

impl EnergyReport {
    pub fn csv_row(&self) -> String {
        let f = [
            self.psi_omega,
            self.psi_gammac,
            self.penalty_energy,
            self.diss_volume_rate,
            self.diss_surface_rate,
            self.exchange_dissipation,
            self.lyapunov,
            self.lyapunov_residual,
            self.l1_theta,
            self.l1_theta_s,
            self.max_penetration,
            self.box_violation,
            self.moreau_budget,
            self.min_theta_slack,
            self.min_theta_s_slack,
            self.min_coercivity_slack,
        ];
        let mut row = format!("{},{:e}", self.step, self.time);
        for v in f {
            row.push_str(&format!(",{v:e}"));
        }
        row.push_str(&format!(
            ",{},{},{}",
            u8::from(self.domain_feasible),
            self.fp_iterations,
            self.active_nodes
        ));
        row
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergies {
    pub psi_omega: f64,
    pub psi_gammac: f64,
    pub penalty_energy: f64,
    pub feasible: bool,
}

/// `−Σ m j(θ)`, falling back to `θw − j*(w)` off the domain of `j`.
fn thermal_free_energy(model: &Model, lumped: &[f64], theta: &[f64], w: &[f64]) -> (f64, bool) {
    let law = &model.material().law;
    let mut feasible = true;
    let mut sum = 0.0;
    for i in 0..theta.len() {
        let j = match law.j(theta[i]) {
            Some(v) => v,
            None => {
                feasible = false;
                theta[i] * w[i] - law.jstar(w[i])
            }
        };
        sum -= lumped[i] * j;
    }
    (sum, feasible)
}

pub fn free_energies(model: &Model, s: &State) -> FreeEnergies {
    let sys = &model.sys;
    let mat = model.material();
    let mesh = model.mesh();
    let (thermal, feasible_bulk) = thermal_free_energy(model, &sys.lumped, &s.theta, &s.w);
    let psi_omega = dot(&s.theta, &sys.div.mul_vec(&s.u)) + 0.5 * sys.elastic.quad_form(&s.u) + thermal;

    let (thermal_s, feasible_s) = thermal_free_energy(model, &sys.contact_lumped, &s.theta_s, &s.z);
    let gaps = s.normal_gap(mesh);
    let mut surface = 0.5 * sys.contact_stiffness.quad_form(&s.chi) + thermal_s;
    let mut penalty = 0.0;
    for (k, u) in s.u_trace(mesh).iter().enumerate() {
        let m = sys.contact_lumped[k];
        let chi = s.chi[k];
        surface += m
            * (mat.lambda_of(chi) * (s.theta_s[k] - mat.theta_eq)
                + mat.sigma.sigma(chi)
                + 0.5 * chi * (u[0] * u[0] + u[1] * u[1]));
        penalty += m * 0.5 * mat.kappa_pen * gaps[k].max(0.0).powi(2);
    }
    FreeEnergies {
        psi_omega,
        psi_gammac: surface,
        penalty_energy: penalty,
        feasible: feasible_bulk && feasible_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipations {
    /// `θᵀSθ + δuᵀBδu`.
    pub volume: f64,
    /// `θ_sᵀS_cθ_s + ‖δχ‖²` in the lumped contact mass.
    pub surface: f64,
    /// `(Tθ − θ_s)ᵀ E(χ) (Tθ − θ_s)`.
    pub exchange: f64,
}

pub fn dissipations(model: &Model, old: &State, new: &State, dt: f64) -> Dissipations {
    let sys = &model.sys;
    let du: Vec<f64> = new.u.iter().zip(&old.u).map(|(a, b)| (a - b) / dt).collect();
    let volume = sys.stiffness.quad_form(&new.theta) + sys.viscous.quad_form(&du);
    let mut surface = sys.contact_stiffness.quad_form(&new.theta_s);
    for k in 0..new.chi.len() {
        let r = (new.chi[k] - old.chi[k]) / dt;
        surface += sys.contact_lumped[k] * r * r;
    }
    Dissipations {
        volume,
        surface,
        exchange: exchange_dissipation(model, new, &model.exchange_matrix(&new.chi)),
    }
}

fn exchange_dissipation(model: &Model, s: &State, e: &SparseMatrix) -> f64 {
    let jump: Vec<f64> = model
        .trace_of(&s.theta)
        .iter()
        .zip(&s.theta_s)
        .map(|(a, b)| a - b)
        .collect();
    e.quad_form(&jump)
}

/// Lyapunov functional of the discrete scheme.
pub fn lyapunov(model: &Model, s: &State) -> Result<f64> {
    let sys = &model.sys;
    let mat = model.material();
    let law = &mat.law;
    let reg = &model.reg;
    let eps = model.solver().eps;
    let mut l = 0.5 * eps * (sys.mass.quad_form(&s.theta) + sys.stiffness.quad_form(&s.theta));
    l += 0.5 * eps * (sys.contact_mass.quad_form(&s.theta_s) + sys.contact_stiffness.quad_form(&s.theta_s));
    for (m, &w) in sys.lumped.iter().zip(&s.w) {
        l += m * entropy_potential(law, reg, w)?;
    }
    for (m, &z) in sys.contact_lumped.iter().zip(&s.z) {
        l += m * entropy_potential(law, reg, z)?;
    }
    l += 0.5 * sys.elastic.quad_form(&s.u);
    l += 0.5 * sys.contact_stiffness.quad_form(&s.chi);
    let gaps = s.normal_gap(model.mesh());
    for (k, u) in s.u_trace(model.mesh()).iter().enumerate() {
        let m = sys.contact_lumped[k];
        l += m
            * (0.5 * mat.kappa_pen * gaps[k].max(0.0).powi(2)
                + 0.5 * s.chi[k] * (u[0] * u[0] + u[1] * u[1])
                + mat.sigma_eff(s.chi[k]));
    }
    Ok(l)
}

/// Residual of the summed tested equations between two consecutive states:
/// `L(new) − L(old) + τ·dissipation + numerical dissipation − work`.
pub fn lyapunov_balance(model: &Model, old: &State, new: &State) -> Result<f64> {
    let sys = &model.sys;
    let mat = model.material();
    let law = &mat.law;
    let reg = &model.reg;
    let s = model.solver();
    let dt = s.dt;
    let eps = s.eps;
    let mesh = model.mesh();
    let loads = model.loads(new.time);

    let change = lyapunov(model, new)? - lyapunov(model, old)?;
    let e = model.exchange_matrix(&new.chi);
    let dissipated = dt
        * (sys.stiffness.quad_form(&new.theta)
            + sys.contact_stiffness.quad_form(&new.theta_s)
            + exchange_dissipation(model, new, &e));

    let du: Vec<f64> = new.u.iter().zip(&old.u).map(|(a, b)| a - b).collect();
    let dchi: Vec<f64> = new.chi.iter().zip(&old.chi).map(|(a, b)| a - b).collect();
    let dtheta: Vec<f64> = new.theta.iter().zip(&old.theta).map(|(a, b)| a - b).collect();
    let dtheta_s: Vec<f64> = new.theta_s.iter().zip(&old.theta_s).map(|(a, b)| a - b).collect();
    let mut rate = sys.viscous.quad_form(&du) / dt;
    for k in 0..dchi.len() {
        rate += sys.contact_lumped[k] * dchi[k] * dchi[k] / dt;
    }

    // Numerical dissipation of backward Euler and the explicit cohesion term.
    let mut numerical = 0.5 * eps * (sys.mass.quad_form(&dtheta) + sys.stiffness.quad_form(&dtheta));
    numerical += 0.5 * eps * (sys.contact_mass.quad_form(&dtheta_s) + sys.contact_stiffness.quad_form(&dtheta_s));
    let bregman = |w0: f64, w: f64, theta: f64| -> Result<f64> {
        Ok(entropy_potential(law, reg, w0)? - entropy_potential(law, reg, w)? - theta * (w0 - w))
    };
    for i in 0..new.w.len() {
        numerical += sys.lumped[i] * bregman(old.w[i], new.w[i], new.theta[i])?;
    }
    for i in 0..new.z.len() {
        numerical += sys.contact_lumped[i] * bregman(old.z[i], new.z[i], new.theta_s[i])?;
    }
    numerical += 0.5 * sys.elastic.quad_form(&du);
    numerical += 0.5 * sys.contact_stiffness.quad_form(&dchi);
    let normal = mesh.contact_normal();
    let penalty = |g: f64| 0.5 * mat.kappa_pen * g.max(0.0).powi(2);
    for (k, &v) in mesh.trace_map().iter().enumerate() {
        let m = sys.contact_lumped[k];
        let d = [du[dof(v, 0)], du[dof(v, 1)]];
        numerical += 0.5 * m * old.chi[k] * (d[0] * d[0] + d[1] * d[1]);
        let g_new = (0..DIM).map(|c| new.u[dof(v, c)] * normal[c]).sum::<f64>();
        let g_old = (0..DIM).map(|c| old.u[dof(v, c)] * normal[c]).sum::<f64>();
        numerical += m * (penalty(g_old) - penalty(g_new) - mat.kappa_pen * g_new.max(0.0) * (g_old - g_new));
        numerical += m * new.xi[k] * dchi[k];
        let defect = mat.sigma_eff(new.chi[k]) - mat.sigma_eff(old.chi[k]) - mat.sigma_prime_eff(old.chi[k]) * dchi[k];
        numerical -= m * defect;
    }

    let work = dt * dot(&new.theta, &loads.heat)
        + dt * dot(&new.theta_s, &loads.surface_heat)
        + dot(&du, &loads.mech)
        + dot(&dchi, &loads.damage);
    Ok(change + dissipated + rate + numerical - work)
}

/// Pointwise constraint and positivity measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub box_violation: f64,
    pub max_penetration: f64,
    /// `min(θ − μw)` over bulk nodes.
    pub min_theta_slack: f64,
    pub min_theta_s_slack: f64,
    pub min_coercivity_slack: f64,
    /// Lumped `L¹` norms.
    pub l1_theta: f64,
    pub l1_theta_s: f64,
}

pub fn monitor(model: &Model, s: &State) -> Result<Monitor> {
    let sys = &model.sys;
    let law = &model.material().law;
    let reg = &model.reg;
    let mu = reg.mu;
    let box_violation = s.chi.iter().map(|&c| (-c).max(0.0) + (c - 1.0).max(0.0)).sum();
    let max_penetration = s.normal_gap(model.mesh()).iter().fold(0.0f64, |m, &g| m.max(g));
    let slack = |t: &[f64], w: &[f64]| t.iter().zip(w).map(|(a, b)| a - mu * b).fold(f64::INFINITY, f64::min);
    let mut coercivity = f64::INFINITY;
    for &t in s.theta.iter().chain(&s.theta_s) {
        coercivity = coercivity.min(coercivity_bound(law, reg, t)?);
    }
    let l1 = |m: &[f64], t: &[f64]| m.iter().zip(t).map(|(a, b)| a * b.abs()).sum();
    Ok(Monitor {
        box_violation,
        max_penetration,
        min_theta_slack: slack(&s.theta, &s.w),
        min_theta_s_slack: slack(&s.theta_s, &s.z),
        min_coercivity_slack: coercivity,
        l1_theta: l1(&sys.lumped, &s.theta),
        l1_theta_s: l1(&sys.contact_lumped, &s.theta_s),
    })
}

/// `Σ m j*_μ(w) + Σ m_c j*_μ(z)`.
pub fn moreau_budget(model: &Model, s: &State) -> Result<f64> {
    let law = &model.material().law;
    let reg = &model.reg;
    let mut sum = 0.0;
    for (m, &w) in model.sys.lumped.iter().zip(&s.w) {
        sum += m * jstar_moreau(law, reg, w)?;
    }
    for (m, &z) in model.sys.contact_lumped.iter().zip(&s.z) {
        sum += m * jstar_moreau(law, reg, z)?;
    }
    Ok(sum)
}

fn assemble_report(model: &Model, s: &State, step: usize, diss: Dissipations, residual: f64) -> Result<EnergyReport> {
    let fe = free_energies(model, s);
    let mon = monitor(model, s)?;
    Ok(EnergyReport {
        step,
        time: s.time,
        psi_omega: fe.psi_omega,
        psi_gammac: fe.psi_gammac,
        penalty_energy: fe.penalty_energy,
        diss_volume_rate: diss.volume,
        diss_surface_rate: diss.surface,
        exchange_dissipation: diss.exchange,
        lyapunov: lyapunov(model, s)?,
        lyapunov_residual: residual,
        l1_theta: mon.l1_theta,
        l1_theta_s: mon.l1_theta_s,
        max_penetration: mon.max_penetration,
        box_violation: mon.box_violation,
        moreau_budget: moreau_budget(model, s)?,
        min_theta_slack: mon.min_theta_slack,
        min_theta_s_slack: mon.min_theta_s_slack,
        min_coercivity_slack: mon.min_coercivity_slack,
        domain_feasible: fe.feasible,
        fp_iterations: 0,
        active_nodes: 0,
    })
}

/// Report of the initial state: no rates, zero residual.
pub fn initial_report(model: &Model, s: &State) -> Result<EnergyReport> {
    let diss = Dissipations {
        volume: model.sys.stiffness.quad_form(&s.theta),
        surface: model.sys.contact_stiffness.quad_form(&s.theta_s),
        exchange: exchange_dissipation(model, s, &model.exchange_matrix(&s.chi)),
    };
    assemble_report(model, s, 0, diss, 0.0)
}

pub fn step_report(model: &Model, old: &State, new: &State, step: usize, record: &StepRecord) -> Result<EnergyReport> {
    let diss = dissipations(model, old, new, model.solver().dt);
    let residual = lyapunov_balance(model, old, new)?;
    let mut r = assemble_report(model, new, step, diss, residual)?;
    r.fp_iterations = record.fp_iterations;
    r.active_nodes = record.active_nodes;
    Ok(r)
}
