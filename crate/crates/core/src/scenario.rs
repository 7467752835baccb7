//! Problem data: mesh, material, solver controls, sources and initial data.

use std::sync::Arc;

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

pub type ScalarField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type ScalarProfile = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorProfile = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Time discretization and solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Viscosity `ε ≥ 0` of the temperature equations.
    pub eps: f64,
    /// Yosida parameter `μ > 0`.
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Scalar root solves.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative step tolerance of the nodal-nonlinear temperature systems.
    pub field_tol: f64,
    pub field_max_iter: usize,
    pub linear_tol: f64,
    pub active_set_max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            mu: 1e-2,
            dt: 1e-2,
            t_end: 1.0,
            fp_tol: 1e-9,
            fp_max_iter: 60,
            newton_tol: 1e-12,
            newton_max_iter: 100,
            field_tol: 1e-11,
            field_max_iter: 50,
            linear_tol: 1e-10,
            active_set_max_iter: 50,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be >= 0, got {}", self.eps));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be > 0, got {}", self.mu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.t_end > 0.0 && self.dt > self.t_end * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end));
        }
        for (name, v) in [
            ("fp_tol", self.fp_tol),
            ("newton_tol", self.newton_tol),
            ("field_tol", self.field_tol),
            ("linear_tol", self.linear_tol),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("fp_max_iter", self.fp_max_iter),
            ("newton_max_iter", self.newton_max_iter),
            ("field_max_iter", self.field_max_iter),
            ("active_set_max_iter", self.active_set_max_iter),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Right-hand sides. `None` means zero.
#[derive(Clone, Default)]
pub struct Sources {
    /// Bulk heat source `h`.
    pub heat: Option<ScalarField>,
    /// Heat flux entering the body through Γ_c.
    pub contact_heat_flux: Option<ScalarField>,
    /// Heat source on the adhesive `h_s`.
    pub surface_heat: Option<ScalarField>,
    /// Body force `f`.
    pub body_force: Option<VectorField>,
    /// Traction `g` on Γ₂.
    pub traction: Option<VectorField>,
    /// Prescribed traction on Γ_c (used by manufactured solutions).
    pub contact_traction: Option<VectorField>,
    /// Source in the damage equation (used by manufactured solutions).
    pub damage: Option<ScalarField>,
}

impl Sources {
    pub fn is_zero(&self) -> bool {
        self.heat.is_none()
            && self.contact_heat_flux.is_none()
            && self.surface_heat.is_none()
            && self.body_force.is_none()
            && self.traction.is_none()
            && self.contact_traction.is_none()
            && self.damage.is_none()
    }
}

/// Initial data for the two temperature fields.
#[derive(Clone)]
pub enum ThermalInitial {
    /// Entropy-type data `w₀`, `z₀`, mollified by `(M + μS)w = M w₀`.
    Entropy { w0: ScalarProfile, z0: ScalarProfile },
    /// Temperatures prescribed directly; `w = 𝓛_μ(θ)`.
    Temperature {
        theta0: ScalarProfile,
        theta_s0: ScalarProfile,
    },
}

#[derive(Clone)]
pub struct InitialData {
    pub thermal: ThermalInitial,
    pub u0: Option<VectorProfile>,
    pub chi0: ScalarProfile,
}

/// Which unknowns are advanced by the fixed-point loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Full,
    /// Displacement, bulk temperature and damage; the adhesive temperature is frozen.
    MechanicalBulk,
    /// Adhesive temperature only.
    Surface,
}

/// Exact fields of a manufactured solution.
pub trait ExactSolution: Send + Sync {
    fn theta(&self, p: Point, t: f64) -> f64;
    fn theta_s(&self, p: Point, t: f64) -> f64;
    fn u(&self, p: Point, t: f64) -> [f64; 2];
    fn chi(&self, p: Point, t: f64) -> f64;
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub mesh: Arc<Mesh>,
    pub material: MaterialParams,
    pub solver: SolverParams,
    pub sources: Sources,
    pub initial: InitialData,
    pub subsystem: Subsystem,
    pub exact: Option<Arc<dyn ExactSolution>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.solver.validate()?;
        let mesh = &self.mesh;
        for k in 0..mesh.num_contact_nodes() {
            let p = mesh.contact_position(k);
            let c = (self.initial.chi0)(p);
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Validation(format!(
                    "initial damage {c} at {p:?} lies outside [0, 1]"
                )));
            }
            if let Some(u0) = &self.initial.u0 {
                let u = u0(p);
                let n = mesh.outward_normal(k);
                let un = u[0] * n[0] + u[1] * n[1];
                if un > 1e-12 {
                    return Err(Error::Validation(format!(
                        "initial displacement penetrates the support at {p:?} (u·n = {un})"
                    )));
                }
            }
        }
        Ok(())
    }
}
