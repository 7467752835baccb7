//! Backward Euler time stepping with a fixed-point loop over three
//! sub-solvers: mechanics and damage, bulk temperature, adhesive temperature.

use crate::assembly::{contact_weighted_mass, dof, restrict, SystemMatrices};
use crate::constitutive::{prox_box, MaterialParams};
use crate::diagnostics::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_inf, SparseMatrix, SpdSolver, TripletBuilder};
use crate::mesh::{Mesh, Point, DIM};
use crate::monotone::{ell_reg_apply, ell_reg_inverse, ell_reg_value_and_derivative, entropy_potential, RegParams};
use crate::scenario::{Scenario, SolverParams, Subsystem, ThermalInitial};

/// Nodal unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    /// Bulk temperature.
    pub theta: Vec<f64>,
    /// `𝓛_μ(θ)` at every bulk node.
    pub w: Vec<f64>,
    /// Adhesive temperature on the contact nodes.
    pub theta_s: Vec<f64>,
    /// `𝓛_μ(θ_s)` at every contact node.
    pub z: Vec<f64>,
    /// Displacement, interleaved by vertex.
    pub u: Vec<f64>,
    /// Damage parameter on the contact nodes.
    pub chi: Vec<f64>,
    /// Multiplier of the box constraint (density per unit length).
    pub xi: Vec<f64>,
    /// Normal penalty reaction.
    pub eta_n: Vec<f64>,
}

impl State {
    pub fn displacement(&self, v: usize) -> Point {
        [self.u[dof(v, 0)], self.u[dof(v, 1)]]
    }

    /// Displacement at the contact nodes.
    pub fn u_trace(&self, mesh: &Mesh) -> Vec<Point> {
        mesh.trace_map().iter().map(|&v| self.displacement(v)).collect()
    }

    /// Normal displacement `u·n` at the contact nodes.
    pub fn normal_gap(&self, mesh: &Mesh) -> Vec<f64> {
        let n = mesh.contact_normal();
        self.u_trace(mesh).iter().map(|u| u[0] * n[0] + u[1] * n[1]).collect()
    }
}

/// Discrete right-hand sides at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Loads {
    /// `∫f·v + ∫_{Γ₂}g·v + ∫_{Γc}g_c·v`.
    pub mech: Vec<f64>,
    /// Bulk heat source and contact heat flux.
    pub heat: Vec<f64>,
    pub surface_heat: Vec<f64>,
    /// Damage source weighted by the lumped contact mass.
    pub damage: Vec<f64>,
}

/// Scenario with its assembled matrices.
pub struct Model {
    pub scenario: Scenario,
    pub sys: SystemMatrices,
    pub reg: RegParams,
}

impl Model {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let sys = SystemMatrices::assemble(&scenario.mesh, &scenario.material.tensors)?;
        let s = &scenario.solver;
        let reg = RegParams::with_tolerance(s.mu, s.newton_tol, s.newton_max_iter)?;
        Ok(Self { scenario, sys, reg })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.scenario.mesh
    }

    pub fn material(&self) -> &MaterialParams {
        &self.scenario.material
    }

    pub fn solver(&self) -> &SolverParams {
        &self.scenario.solver
    }

    /// Heat-exchange matrix `∫_{Γc} k(χ) φ_i φ_j`. Both temperature equations
    /// and the diagnostics use this one function.
    pub fn exchange_matrix(&self, chi: &[f64]) -> SparseMatrix {
        let k: Vec<f64> = chi.iter().map(|&c| self.material().k_of_chi(c)).collect();
        contact_weighted_mass(self.mesh(), &k)
    }

    /// `Tᵀ E T`: the exchange matrix lifted to bulk nodes.
    pub fn lift_to_bulk(&self, e: &SparseMatrix) -> SparseMatrix {
        let n = self.mesh().num_vertices();
        let map = self.mesh().trace_map();
        let mut b = TripletBuilder::new(n, n);
        for i in 0..e.nrows() {
            for (j, v) in e.row(i) {
                b.push(map[i], map[j], v);
            }
        }
        b.build()
    }

    pub fn trace_of(&self, bulk: &[f64]) -> Vec<f64> {
        self.mesh().trace_map().iter().map(|&v| bulk[v]).collect()
    }

    /// Adds contact-node values to the bulk nodes they sit on.
    pub fn add_from_contact(&self, contact: &[f64], bulk: &mut [f64]) {
        for (k, &v) in self.mesh().trace_map().iter().enumerate() {
            bulk[v] += contact[k];
        }
    }

    pub fn loads(&self, t: f64) -> Loads {
        let mesh = self.mesh();
        let src = &self.scenario.sources;
        let n = mesh.num_vertices();
        let nc = mesh.num_contact_nodes();
        let contact_pts: Vec<Point> = (0..nc).map(|k| mesh.contact_position(k)).collect();

        let mech = if src.body_force.is_some() || src.traction.is_some() || src.contact_traction.is_some() {
            let zero = |_: Point| [0.0, 0.0];
            let mut mech = match (&src.body_force, &src.traction) {
                (None, None) => vec![0.0; DIM * n],
                (f, g) => crate::assembly::assemble_load(
                    mesh,
                    |p| f.as_ref().map_or_else(|| zero(p), |f| f(p, t)),
                    |p| g.as_ref().map_or_else(|| zero(p), |g| g(p, t)),
                ),
            };
            if let Some(gc) = &src.contact_traction {
                for c in 0..DIM {
                    let vals: Vec<f64> = contact_pts.iter().map(|&p| gc(p, t)[c]).collect();
                    let weighted = self.sys.contact_mass.mul_vec(&vals);
                    for (k, &v) in mesh.trace_map().iter().enumerate() {
                        mech[dof(v, c)] += weighted[k];
                    }
                }
            }
            mech
        } else {
            vec![0.0; DIM * n]
        };

        let mut heat = match &src.heat {
            Some(h) => {
                let vals: Vec<f64> = mesh.vertices().iter().map(|&p| h(p, t)).collect();
                self.sys.mass.mul_vec(&vals)
            }
            None => vec![0.0; n],
        };
        if let Some(q) = &src.contact_heat_flux {
            let vals: Vec<f64> = contact_pts.iter().map(|&p| q(p, t)).collect();
            self.add_from_contact(&self.sys.contact_mass.mul_vec(&vals), &mut heat);
        }
        let surface_heat = match &src.surface_heat {
            Some(h) => {
                let vals: Vec<f64> = contact_pts.iter().map(|&p| h(p, t)).collect();
                self.sys.contact_mass.mul_vec(&vals)
            }
            None => vec![0.0; nc],
        };
        let damage = match &src.damage {
            Some(r) => contact_pts
                .iter()
                .zip(&self.sys.contact_lumped)
                .map(|(&p, m)| m * r(p, t))
                .collect(),
            None => vec![0.0; nc],
        };
        Loads {
            mech,
            heat,
            surface_heat,
            damage,
        }
    }

    /// Initial state: mollified entropy data (or prescribed temperatures),
    /// initial displacement and damage.
    pub fn initial_state(&self) -> Result<State> {
        let mesh = self.mesh();
        let s = self.solver();
        let law = &self.material().law;
        let reg = &self.reg;
        let verts = mesh.vertices();
        let cpts: Vec<Point> = (0..mesh.num_contact_nodes())
            .map(|k| mesh.contact_position(k))
            .collect();

        let (theta, theta_s) = match &self.scenario.initial.thermal {
            ThermalInitial::Entropy { w0, z0 } => {
                let w0: Vec<f64> = verts.iter().map(|&p| w0(p)).collect();
                let z0: Vec<f64> = cpts.iter().map(|&p| z0(p)).collect();
                let w = mollify(&self.sys.mass, &self.sys.stiffness, s.mu, &w0, s.linear_tol)?;
                let z = mollify(
                    &self.sys.contact_mass,
                    &self.sys.contact_stiffness,
                    s.mu,
                    &z0,
                    s.linear_tol,
                )?;
                let theta = w
                    .iter()
                    .map(|&v| ell_reg_inverse(law, reg, v))
                    .collect::<Result<Vec<_>>>()?;
                let theta_s = z
                    .iter()
                    .map(|&v| ell_reg_inverse(law, reg, v))
                    .collect::<Result<Vec<_>>>()?;
                (theta, theta_s)
            }
            ThermalInitial::Temperature { theta0, theta_s0 } => (
                verts.iter().map(|&p| theta0(p)).collect(),
                cpts.iter().map(|&p| theta_s0(p)).collect(),
            ),
        };
        let w = theta
            .iter()
            .map(|&v| ell_reg_apply(law, reg, v))
            .collect::<Result<Vec<_>>>()?;
        let z = theta_s
            .iter()
            .map(|&v| ell_reg_apply(law, reg, v))
            .collect::<Result<Vec<_>>>()?;

        let mut u = vec![0.0; DIM * mesh.num_vertices()];
        if let Some(u0) = &self.scenario.initial.u0 {
            for (v, &p) in verts.iter().enumerate() {
                let val = u0(p);
                for c in 0..DIM {
                    u[dof(v, c)] = val[c];
                }
            }
        }
        for (i, fixed) in self.sys.clamped.iter().enumerate() {
            if *fixed {
                u[i] = 0.0;
            }
        }
        let chi: Vec<f64> = cpts.iter().map(|&p| (self.scenario.initial.chi0)(p)).collect();
        let nc = chi.len();
        let mut state = State {
            time: 0.0,
            theta,
            w,
            theta_s,
            z,
            u,
            chi,
            xi: vec![0.0; nc],
            eta_n: vec![0.0; nc],
        };
        let kappa = self.material().kappa_pen;
        state.eta_n = state.normal_gap(mesh).iter().map(|g| kappa * g.max(0.0)).collect();
        Ok(state)
    }

    /// Advances `old` by one step of length `dt`.
    pub fn step(&self, old: &State) -> Result<(State, StepRecord)> {
        let mut ctx = StepContext::new(self, old)?;
        ctx.run()
    }

    /// Runs from the initial state to `t_end`.
    pub fn run(&self) -> Result<Trajectory> {
        let first = self.initial_state()?;
        self.run_from(first)
    }

    pub fn run_from(&self, first: State) -> Result<Trajectory> {
        let steps = self.solver().num_steps();
        let mut reports = vec![diagnostics::initial_report(self, &first)?];
        let mut records = Vec::with_capacity(steps);
        let mut states = Vec::with_capacity(steps + 1);
        states.push(first);
        for n in 0..steps {
            let old = states.last().unwrap();
            let (new, record) = self.step(old).map_err(|e| Error::Step {
                step: n + 1,
                source: Box::new(e),
            })?;
            reports.push(diagnostics::step_report(self, old, &new, n + 1, &record)?);
            records.push(record);
            states.push(new);
        }
        Ok(Trajectory {
            states,
            records,
            reports,
        })
    }
}

/// Time level following `t` on the uniform grid of spacing `dt`.
pub fn next_time(t: f64, dt: f64) -> f64 {
    ((t / dt).round() + 1.0) * dt
}

/// `(M + μS) w = M w₀`.
pub fn mollify(mass: &SparseMatrix, stiffness: &SparseMatrix, mu: f64, w0: &[f64], tol: f64) -> Result<Vec<f64>> {
    let a = SparseMatrix::lin_comb(&[(1.0, mass), (mu, stiffness)]);
    SpdSolver::new(&a, tol)?.solve(&mass.mul_vec(w0))
}

/// Solver statistics of one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepRecord {
    pub fp_iterations: usize,
    /// Relative increments of (θ, θ_s, χ, u) per fixed-point iteration.
    pub trace: Vec<[f64; 4]>,
    pub active_set_iterations: usize,
    pub active_nodes: usize,
    pub bulk_newton_iterations: usize,
    pub surface_newton_iterations: usize,
}

pub struct Trajectory {
    pub states: Vec<State>,
    pub records: Vec<StepRecord>,
    pub reports: Vec<EnergyReport>,
}

/// Output of the mechanical sub-solver.
#[derive(Debug, Clone)]
pub struct MechanicalSolution {
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta_n: Vec<f64>,
    pub active_set_iterations: usize,
    pub active_nodes: usize,
}

/// Per-step data shared by the fixed-point iterations.
pub struct StepContext<'m> {
    model: &'m Model,
    old: &'m State,
    dt: f64,
    pub loads: Loads,
    mech_base: SparseMatrix,
    mech_rhs: Vec<f64>,
    mech_cache: Option<(Vec<bool>, SpdSolver)>,
    bulk_base: SparseMatrix,
    bulk_rhs: Vec<f64>,
    surface_base: SparseMatrix,
    surface_rhs: Vec<f64>,
}

impl<'m> StepContext<'m> {
    pub fn new(model: &'m Model, old: &'m State) -> Result<Self> {
        let s = model.solver();
        let sys = &model.sys;
        let dt = s.dt;
        let loads = model.loads(next_time(old.time, dt));

        // B/τ + A + Σ m χ⁰ on contact dofs
        let mut chi_mass = vec![0.0; sys.elastic.nrows()];
        for (k, &v) in model.mesh().trace_map().iter().enumerate() {
            for c in 0..DIM {
                chi_mass[dof(v, c)] = sys.contact_lumped[k] * old.chi[k];
            }
        }
        let mech_base =
            SparseMatrix::lin_comb(&[(1.0 / dt, &sys.viscous), (1.0, &sys.elastic)]).add_diagonal(&chi_mass);
        let mut mech_rhs = sys.viscous.mul_vec(&old.u);
        mech_rhs.iter_mut().for_each(|v| *v /= dt);
        axpy(1.0, &loads.mech, &mut mech_rhs);

        let eps = s.eps;
        let bulk_base = SparseMatrix::lin_comb(&[(eps / dt, &sys.mass), (eps / dt + 1.0, &sys.stiffness)]);
        let mut bulk_rhs =
            SparseMatrix::lin_comb(&[(eps / dt, &sys.mass), (eps / dt, &sys.stiffness)]).mul_vec(&old.theta);
        for (i, r) in bulk_rhs.iter_mut().enumerate() {
            *r += sys.lumped[i] * old.w[i] / dt + loads.heat[i];
        }
        let surface_base =
            SparseMatrix::lin_comb(&[(eps / dt, &sys.contact_mass), (eps / dt + 1.0, &sys.contact_stiffness)]);
        let mut surface_rhs =
            SparseMatrix::lin_comb(&[(eps / dt, &sys.contact_mass), (eps / dt, &sys.contact_stiffness)])
                .mul_vec(&old.theta_s);
        for (i, r) in surface_rhs.iter_mut().enumerate() {
            *r += sys.contact_lumped[i] * old.z[i] / dt + loads.surface_heat[i];
        }
        Ok(Self {
            model,
            old,
            dt,
            loads,
            mech_base,
            mech_rhs,
            mech_cache: None,
            bulk_base,
            bulk_rhs,
            surface_base,
            surface_rhs,
        })
    }

    /// Momentum balance for `u` with the penalty active set resolved by a
    /// semismooth Newton iteration, followed by the damage obstacle problem.
    pub fn solve_mechanical(&mut self, theta: &[f64], theta_s: &[f64], u_guess: &[f64]) -> Result<MechanicalSolution> {
        let model = self.model;
        let mesh = model.mesh();
        let sys = &model.sys;
        let s = model.solver();
        let kappa = model.material().kappa_pen;
        let normal = mesh.contact_normal();

        let mut rhs = self.mech_rhs.clone();
        axpy(-1.0, &sys.div.transpose_mul_vec(theta), &mut rhs);
        for (i, fixed) in sys.clamped.iter().enumerate() {
            if *fixed {
                rhs[i] = 0.0;
            }
        }

        let gap = |u: &[f64]| -> Vec<bool> {
            mesh.trace_map()
                .iter()
                .map(|&v| u[dof(v, 0)] * normal[0] + u[dof(v, 1)] * normal[1] > 0.0)
                .collect()
        };
        let mut active = gap(u_guess);
        let mut iterations = 0;
        let u = loop {
            iterations += 1;
            if iterations > s.active_set_max_iter {
                return Err(Error::ActiveSetNoConvergence {
                    iterations: s.active_set_max_iter,
                });
            }
            let cached = matches!(&self.mech_cache, Some((a, _)) if *a == active);
            if !cached {
                let mut pen = TripletBuilder::new(self.mech_base.nrows(), self.mech_base.ncols());
                for (k, &v) in mesh.trace_map().iter().enumerate() {
                    if active[k] {
                        let w = sys.contact_lumped[k] * kappa;
                        for a in 0..DIM {
                            for b in 0..DIM {
                                pen.push(dof(v, a), dof(v, b), w * normal[a] * normal[b]);
                            }
                        }
                    }
                }
                let matrix =
                    SparseMatrix::lin_comb(&[(1.0, &self.mech_base), (1.0, &pen.build())]).eliminate(&sys.clamped);
                self.mech_cache = Some((active.clone(), SpdSolver::new(&matrix, s.linear_tol)?));
            }
            let mut u = self.mech_cache.as_ref().unwrap().1.solve(&rhs)?;
            for (i, fixed) in sys.clamped.iter().enumerate() {
                if *fixed {
                    u[i] = 0.0;
                }
            }
            let next = gap(&u);
            if next == active {
                break u;
            }
            active = next;
        };

        let nc = mesh.num_contact_nodes();
        let mut eta_n = vec![0.0; nc];
        let mut u_sq = vec![0.0; nc];
        for (k, &v) in mesh.trace_map().iter().enumerate() {
            let (ux, uy) = (u[dof(v, 0)], u[dof(v, 1)]);
            eta_n[k] = kappa * (ux * normal[0] + uy * normal[1]).max(0.0);
            u_sq[k] = ux * ux + uy * uy;
        }
        let (chi, xi) = self.solve_damage(&u_sq, theta_s)?;
        Ok(MechanicalSolution {
            u,
            chi,
            xi,
            eta_n,
            active_set_iterations: iterations,
            active_nodes: active.iter().filter(|a| **a).count(),
        })
    }

    /// Lumped implicit damage update with the box constraint:
    /// `M_L(χ−χ⁰)/τ + S_c χ + M_L ξ = −M_L[σ'_eff(χ⁰) + λ'(χ_mid) θ_s + ½|u|² − r]`.
    fn solve_damage(&self, u_sq: &[f64], theta_s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let model = self.model;
        let mat = model.material();
        let m = &model.sys.contact_lumped;
        let dt = self.dt;
        let nc = m.len();
        let mut diag = vec![0.0; nc];
        let mut b = vec![0.0; nc];
        for i in 0..nc {
            let c0 = self.old.chi[i];
            diag[i] = m[i] * (1.0 / dt + mat.lam[2] * theta_s[i]);
            if !(diag[i] > 0.0) {
                return Err(Error::Validation(format!(
                    "damage equation loses coercivity at contact node {i}; reduce dt"
                )));
            }
            b[i] = m[i]
                * (c0 / dt - mat.sigma_prime_eff(c0) - (mat.lam[1] + mat.lam[2] * c0) * theta_s[i] - 0.5 * u_sq[i])
                + self.loads.damage[i];
        }
        let k = model.sys.contact_stiffness.add_diagonal(&diag);
        let (chi, nu) = solve_box_obstacle(&k, &b, model.solver().linear_tol)?;
        let xi = nu.iter().zip(m).map(|(v, mi)| v / mi).collect();
        Ok((chi, xi))
    }

    /// Bulk temperature: `ε(M+S)(θ−θ⁰)/τ + M_L(𝓛_μ(θ)−w⁰)/τ + Sθ + TᵀE(Tθ−θ_s) − D(u−u⁰)/τ = h`.
    pub fn solve_bulk_temperature(
        &self,
        u: &[f64],
        exchange: &SparseMatrix,
        theta_s: &[f64],
        guess: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let model = self.model;
        let sys = &model.sys;
        let lin = SparseMatrix::lin_comb(&[(1.0, &self.bulk_base), (1.0, &model.lift_to_bulk(exchange))]);
        let mut rhs = self.bulk_rhs.clone();
        model.add_from_contact(&exchange.mul_vec(theta_s), &mut rhs);
        let du: Vec<f64> = u.iter().zip(&self.old.u).map(|(a, b)| (a - b) / self.dt).collect();
        axpy(1.0, &sys.div.mul_vec(&du), &mut rhs);
        solve_entropy_system(model, &lin, &sys.lumped, &rhs, guess, self.dt, "bulk")
    }

    /// Adhesive temperature: `ε(M_c+S_c)(θ_s−θ_s⁰)/τ + M_L(𝓛_μ(θ_s)−z⁰)/τ + S_cθ_s
    /// − M_L(λ(χ)−λ(χ⁰))/τ − E(Tθ−θ_s) = h_s`.
    pub fn solve_surface_temperature(
        &self,
        theta_trace: &[f64],
        exchange: &SparseMatrix,
        chi: &[f64],
        guess: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let model = self.model;
        let sys = &model.sys;
        let mat = model.material();
        let lin = SparseMatrix::lin_comb(&[(1.0, &self.surface_base), (1.0, exchange)]);
        let mut rhs = self.surface_rhs.clone();
        axpy(1.0, &exchange.mul_vec(theta_trace), &mut rhs);
        for i in 0..rhs.len() {
            rhs[i] += sys.contact_lumped[i] * (mat.lambda_of(chi[i]) - mat.lambda_of(self.old.chi[i])) / self.dt;
        }
        solve_entropy_system(model, &lin, &sys.contact_lumped, &rhs, guess, self.dt, "surface")
    }

    fn run(&mut self) -> Result<(State, StepRecord)> {
        let model = self.model;
        let old = self.old;
        let s = *model.solver();
        let mode = model.scenario.subsystem;
        let mut record = StepRecord::default();

        let mut cur = old.clone();
        cur.time = next_time(old.time, self.dt);
        for k in 1..=s.fp_max_iter {
            let prev = cur.clone();
            if mode != Subsystem::Surface {
                let mech = self.solve_mechanical(&prev.theta, &prev.theta_s, &prev.u)?;
                record.active_set_iterations += mech.active_set_iterations;
                record.active_nodes = mech.active_nodes;
                cur.u = mech.u;
                cur.chi = mech.chi;
                cur.xi = mech.xi;
                cur.eta_n = mech.eta_n;
            }
            let exchange = model.exchange_matrix(&cur.chi);
            if mode != Subsystem::Surface {
                let (theta, w, its) = self.solve_bulk_temperature(&cur.u, &exchange, &prev.theta_s, &prev.theta)?;
                record.bulk_newton_iterations = record.bulk_newton_iterations.max(its);
                cur.theta = theta;
                cur.w = w;
            }
            if mode != Subsystem::MechanicalBulk {
                let trace = model.trace_of(&cur.theta);
                let (theta_s, z, its) = self.solve_surface_temperature(&trace, &exchange, &cur.chi, &prev.theta_s)?;
                record.surface_newton_iterations = record.surface_newton_iterations.max(its);
                cur.theta_s = theta_s;
                cur.z = z;
            }
            let incr = [
                relative_increment(&cur.theta, &prev.theta),
                relative_increment(&cur.theta_s, &prev.theta_s),
                relative_increment(&cur.chi, &prev.chi),
                relative_increment(&cur.u, &prev.u),
            ];
            record.trace.push(incr);
            record.fp_iterations = k;
            if k >= 2 && incr.iter().all(|&d| d <= s.fp_tol) {
                return Ok((cur, record));
            }
        }
        Err(Error::FixedPointNoConvergence {
            iterations: s.fp_max_iter,
            trace: record.trace,
        })
    }
}

fn relative_increment(new: &[f64], old: &[f64]) -> f64 {
    let diff = new.iter().zip(old).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if diff == 0.0 {
        0.0
    } else {
        diff / norm_inf(new).max(f64::MIN_POSITIVE)
    }
}

/// Solves `K θ + m ⊙ 𝓛_μ(θ) / τ = b` by Newton's method with an Armijo line
/// search on the convex potential of the system.
fn solve_entropy_system(
    model: &Model,
    lin: &SparseMatrix,
    lumped: &[f64],
    rhs: &[f64],
    guess: &[f64],
    dt: f64,
    field: &'static str,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let law = &model.material().law;
    let reg = &model.reg;
    let s = model.solver();
    let n = rhs.len();

    let nodal = |theta: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut w = vec![0.0; n];
        let mut dw = vec![0.0; n];
        for i in 0..n {
            let (a, b) = ell_reg_value_and_derivative(law, reg, theta[i])?;
            w[i] = a;
            dw[i] = b;
        }
        Ok((w, dw))
    };
    // potential whose gradient is the residual
    let energy = |theta: &[f64]| -> Result<f64> {
        let mut e = 0.5 * lin.quad_form(theta) - dot(rhs, theta);
        for i in 0..n {
            let w = ell_reg_apply(law, reg, theta[i])?;
            e += lumped[i] * (theta[i] * w - entropy_potential(law, reg, w)?) / dt;
        }
        Ok(e)
    };

    let mut theta = guess.to_vec();
    let mut residual_norm = f64::INFINITY;
    for it in 1..=s.field_max_iter {
        let (w, dw) = nodal(&theta)?;
        let mut r = lin.mul_vec(&theta);
        for i in 0..n {
            r[i] += lumped[i] * w[i] / dt - rhs[i];
        }
        residual_norm = norm_inf(&r);
        let jdiag: Vec<f64> = (0..n).map(|i| lumped[i] * dw[i] / dt).collect();
        let jac = lin.add_diagonal(&jdiag);
        let mut delta = SpdSolver::new(&jac, s.linear_tol)?.solve(&r)?;
        delta.iter_mut().for_each(|d| *d = -*d);

        let scale = norm_inf(&theta).max(1.0);
        let step_norm = norm_inf(&delta);
        let mut step = 1.0;
        if step_norm > 1e-3 * scale {
            let e0 = energy(&theta)?;
            let slope = dot(&r, &delta);
            loop {
                let trial: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + step * d).collect();
                if energy(&trial)? <= e0 + 1e-4 * step * slope || step < 1e-10 {
                    break;
                }
                step *= 0.5;
            }
        }
        axpy(step, &delta, &mut theta);
        if step == 1.0 && step_norm <= s.field_tol * scale {
            let w = theta
                .iter()
                .map(|&t| ell_reg_apply(law, reg, t))
                .collect::<Result<Vec<_>>>()?;
            return Ok((theta, w, it));
        }
    }
    Err(Error::NewtonNoConvergence {
        field,
        iterations: s.field_max_iter,
        residual: residual_norm,
    })
}

/// Obstacle problem `Kχ + ν = b`, `0 ≤ χ ≤ 1`, `ν ∈ ∂I_{[0,1]}(χ)` for an
/// M-matrix `K`, by a primal-dual active set method started from the
/// projected unconstrained solution. Projected Gauss–Seidel is the fallback.
pub fn solve_box_obstacle(k: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    let diag = k.diagonal();
    let unconstrained = SpdSolver::new(k, tol)?.solve(b)?;
    let (start, _) = prox_box(&unconstrained, &diag);
    // 0: free, 1: lower, 2: upper
    let classify = |chi: &[f64], nu: &[f64]| -> Vec<u8> {
        (0..n)
            .map(|i| {
                let t = chi[i] + nu[i] / diag[i];
                if t < 0.0 {
                    1
                } else if t > 1.0 {
                    2
                } else {
                    0
                }
            })
            .collect()
    };
    let mut sets: Vec<u8> = start
        .iter()
        .map(|&c| {
            if c == 0.0 {
                1
            } else if c == 1.0 {
                2
            } else {
                0
            }
        })
        .collect();
    for _ in 0..(2 * n + 10) {
        let mut chi: Vec<f64> = sets.iter().map(|&s| if s == 2 { 1.0 } else { 0.0 }).collect();
        let free: Vec<bool> = sets.iter().map(|&s| s == 0).collect();
        if free.iter().any(|&f| f) {
            let fixed_part = k.mul_vec(&chi);
            let rhs: Vec<f64> = (0..n).filter(|&i| free[i]).map(|i| b[i] - fixed_part[i]).collect();
            let sol = SpdSolver::new(&restrict(k, &free), tol)?.solve(&rhs)?;
            let mut it = sol.into_iter();
            for i in 0..n {
                if free[i] {
                    chi[i] = it.next().unwrap();
                }
            }
        }
        let kchi = k.mul_vec(&chi);
        let nu: Vec<f64> = (0..n).map(|i| if free[i] { 0.0 } else { b[i] - kchi[i] }).collect();
        let next = classify(&chi, &nu);
        if next == sets {
            return Ok((chi, nu));
        }
        sets = next;
    }
    projected_gauss_seidel(k, b, &start)
}

fn projected_gauss_seidel(k: &SparseMatrix, b: &[f64], start: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    let mut chi = start.to_vec();
    for sweep in 0..100_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let (mut off, mut d) = (0.0, 0.0);
            for (j, v) in k.row(i) {
                if j == i {
                    d = v;
                } else {
                    off += v * chi[j];
                }
            }
            let next = ((b[i] - off) / d).clamp(0.0, 1.0);
            change = change.max((next - chi[i]).abs());
            chi[i] = next;
        }
        if change <= 1e-15 {
            let kchi = k.mul_vec(&chi);
            let nu = (0..n)
                .map(|i| {
                    if chi[i] > 0.0 && chi[i] < 1.0 {
                        0.0
                    } else {
                        b[i] - kchi[i]
                    }
                })
                .collect();
            return Ok((chi, nu));
        }
        if sweep == 99_999 {
            break;
        }
    }
    Err(Error::ObstacleNoConvergence { iterations: 100_000 })
}
