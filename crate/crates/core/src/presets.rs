//! Shipped scenarios and the manufactured solution.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use crate::config::{
    Axis, InitialKind, InitialSpec, LawName, LoadSpec, MaterialSpec, MeshSpec, OutputSpec, Preset, Profile,
    ScenarioSpec, SolverSpec, SubsystemName,
};
use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, SideMarkers};
use crate::monotone::LawKind;
use crate::scenario::{ExactSolution, InitialData, Scenario, SolverParams, Sources, Subsystem, ThermalInitial};

/// Default spec of each preset.
///
/// * `reference`: heated body resting on a cooler adhesive layer under its
///   own weight, logarithmic law.
/// * `decoupled`: the reference with no heat exchange and no latent heat.
/// * `peel`: soft body pulled away from the support by a side traction.
/// * `manufactured`: linear law with a smooth exact solution.
pub fn preset_spec(preset: Preset) -> ScenarioSpec {
    let mut spec = ScenarioSpec {
        preset,
        mesh: MeshSpec {
            nx: 31,
            ny: 31,
            extents: [0.0, 0.0, 1.0, 1.0],
            sides: SideMarkers::default(),
            file: None,
        },
        material: MaterialSpec {
            lambda_e: 50.0,
            mu_e: 50.0,
            lambda_v: 5.0,
            mu_v: 5.0,
            k0: 0.1,
            k1: 1.0,
            lam: [0.0, 0.5, 0.0],
            sigma_coeffs: [0.0, 1.0, -3.0, 2.0],
            sigma_window: [-1.0, 2.0],
            theta_eq: 1.0,
            kappa: None,
            law: LawName::Log,
            power_exponent: 2.0,
        },
        solver: SolverSpec {
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
            subsystem: SubsystemName::Full,
        },
        initial: InitialSpec {
            kind: InitialKind::Entropy,
            theta: 1.5,
            theta_s: 0.8,
            profile: Profile::YSlope,
            amplitude: 0.2,
            w0_shift: 0.0,
            chi0: 1.0,
        },
        loads: LoadSpec {
            body_force: [0.0, -10.0],
            traction: [0.0, 0.0],
            heat: 0.0,
            surface_heat: 0.0,
            contact_heat_flux: 0.0,
        },
        output: OutputSpec {
            dir: PathBuf::from("out"),
            emit_vtk: false,
            vtk_every: 10,
        },
        study: None,
    };
    match preset {
        Preset::Reference => {}
        Preset::Decoupled => {
            spec.material.k0 = 0.0;
            spec.material.k1 = 0.0;
            spec.material.lam = [0.0, 0.0, 0.0];
        }
        Preset::Peel => {
            spec.material.lambda_e = 2.0;
            spec.material.mu_e = 2.0;
            spec.material.sigma_coeffs = [0.0, 0.05, -0.15, 0.1];
            spec.material.lam = [0.0, 0.05, 0.0];
            spec.loads.body_force = [0.0, 0.0];
            spec.loads.traction = [0.0, 4.0];
            spec.solver.t_end = 2.0;
            spec.mesh.nx = 24;
            spec.mesh.ny = 24;
        }
        Preset::Manufactured => {
            spec.mesh.nx = 16;
            spec.mesh.ny = 16;
            spec.material = MaterialSpec {
                lambda_e: 5.0,
                mu_e: 5.0,
                lambda_v: 2.0,
                mu_v: 2.0,
                k0: 1.0,
                k1: 0.0,
                lam: [0.0, 0.2, 0.1],
                law: LawName::Linear,
                ..spec.material
            };
            spec.solver.eps = 1e-2;
            spec.solver.mu = 0.1;
            spec.solver.t_end = 0.1;
            spec.initial.kind = InitialKind::Temperature;
            spec.initial.profile = Profile::Constant;
            spec.initial.chi0 = 0.5;
            spec.loads.body_force = [0.0, 0.0];
        }
    }
    spec
}

/// Default study levels per axis.
pub fn default_levels(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::Dt => vec![4e-2, 2e-2, 1e-2, 5e-3],
        Axis::H => vec![1.0 / 6.0, 1.0 / 12.0, 1.0 / 24.0, 1.0 / 48.0],
        Axis::Mu => vec![1e-1, 1e-2, 1e-3, 1e-4],
        Axis::Eps => vec![1e-1, 1e-2, 1e-3, 1e-4],
    }
}

/// Smooth exact solution on the unit square for the linear law:
///
/// * `θ = 1 + a(t) cos πx cos πy`, `a = e^{−t}/2`
/// * `u = (0, b(t)(1−y)p(x))`, `p = 1 + cos(πx)/2`, `b = (1+t)/100`
/// * `θ_s = 1 + d(t) cos πx`, `d = 0.3 e^{−2t}`
/// * `χ = 1/2 + q(t) cos πx`, `q = e^{−t}/4`
///
/// `u·n = −bp < 0` on the contact side and `χ ∈ [1/4, 3/4]`, so neither
/// constraint is active.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub material: MaterialParams,
    pub eps: f64,
    /// Slope of `𝓛_μ`, `(1+μ)/(μ²+μ+1)`.
    pub slope: f64,
}

impl Manufactured {
    pub fn new(material: MaterialParams, eps: f64, mu: f64) -> Result<Self> {
        if !matches!(material.law.kind, LawKind::Linear) {
            return Err(Error::Validation(
                "the manufactured solution needs the linear law".into(),
            ));
        }
        Ok(Self {
            material,
            eps,
            slope: (1.0 + mu) / (mu * mu + mu + 1.0),
        })
    }

    fn a(t: f64) -> (f64, f64) {
        let a = 0.5 * (-t).exp();
        (a, -a)
    }
    fn b(t: f64) -> (f64, f64) {
        (0.01 * (1.0 + t), 0.01)
    }
    fn d(t: f64) -> (f64, f64) {
        let d = 0.3 * (-2.0 * t).exp();
        (d, -2.0 * d)
    }
    fn q(t: f64) -> (f64, f64) {
        let q = 0.25 * (-t).exp();
        (q, -q)
    }
    fn p(x: f64) -> (f64, f64, f64) {
        let c = (PI * x).cos();
        (1.0 + 0.5 * c, -0.5 * PI * (PI * x).sin(), -0.5 * PI * PI * c)
    }

    fn lame(&self) -> (f64, f64, f64, f64) {
        let e = &self.material.tensors.elastic.a;
        let v = &self.material.tensors.viscous.a;
        // λ = a₁₁₂₂, μ = a₁₂₁₂
        (e[0][0][1][1], e[0][1][0][1], v[0][0][1][1], v[0][1][0][1])
    }

    /// Stress tensor `(σ₁₁, σ₂₂, σ₁₂)` including the thermal part.
    pub fn stress(&self, x: Point, t: f64) -> (f64, f64, f64) {
        let (le, me, lv, mv) = self.lame();
        let (b, db) = Self::b(t);
        let (p, dp, _) = Self::p(x[0]);
        let e1 = le * b + lv * db;
        let e2 = (le + 2.0 * me) * b + (lv + 2.0 * mv) * db;
        let g = me * b + mv * db;
        let th = self.theta(x, t);
        (-e1 * p + th, -e2 * p + th, g * (1.0 - x[1]) * dp)
    }

    pub fn heat(&self, x: Point, t: f64) -> f64 {
        let (a, da) = Self::a(t);
        let (_, db) = Self::b(t);
        let (p, _, _) = Self::p(x[0]);
        let cc = (PI * x[0]).cos() * (PI * x[1]).cos();
        (self.eps + self.slope + 2.0 * PI * PI * self.eps) * da * cc + db * p + 2.0 * PI * PI * a * cc
    }

    pub fn contact_heat_flux(&self, x: Point, t: f64) -> f64 {
        let k = self.material.k_of_chi(self.chi(x, t));
        k * (self.theta([x[0], 0.0], t) - self.theta_s(x, t))
    }

    pub fn surface_heat(&self, x: Point, t: f64) -> f64 {
        let (d, dd) = Self::d(t);
        let (_, dq) = Self::q(t);
        let c = (PI * x[0]).cos();
        let chi = self.chi(x, t);
        (self.eps + self.eps * PI * PI + self.slope) * dd * c + PI * PI * d * c
            - self.material.lambda_prime(chi) * dq * c
            - self.contact_heat_flux(x, t)
    }

    pub fn damage(&self, x: Point, t: f64) -> f64 {
        let (q, dq) = Self::q(t);
        let (b, _) = Self::b(t);
        let (p, _, _) = Self::p(x[0]);
        let c = (PI * x[0]).cos();
        let chi = self.chi(x, t);
        dq * c
            + PI * PI * q * c
            + self.material.sigma_prime_eff(chi)
            + self.material.lambda_prime(chi) * self.theta_s(x, t)
            + 0.5 * b * b * p * p
    }

    pub fn body_force(&self, x: Point, t: f64) -> [f64; 2] {
        let (le, me, lv, mv) = self.lame();
        let (a, _) = Self::a(t);
        let (b, db) = Self::b(t);
        let (_, dp, ddp) = Self::p(x[0]);
        let e1 = le * b + lv * db;
        let g = me * b + mv * db;
        let theta_x = -a * PI * (PI * x[0]).sin() * (PI * x[1]).cos();
        let theta_y = -a * PI * (PI * x[0]).cos() * (PI * x[1]).sin();
        [(e1 + g) * dp - theta_x, -(g * (1.0 - x[1]) * ddp + theta_y)]
    }

    /// `σn` on the vertical sides.
    pub fn traction(&self, x: Point, t: f64) -> [f64; 2] {
        let n1 = if x[0] < 0.5 { -1.0 } else { 1.0 };
        let (s11, _, s12) = self.stress(x, t);
        [s11 * n1, s12 * n1]
    }

    /// `σn + χu` on the contact side.
    pub fn contact_traction(&self, x: Point, t: f64) -> [f64; 2] {
        let x = [x[0], 0.0];
        let (_, s22, s12) = self.stress(x, t);
        let u = self.u(x, t);
        let chi = self.chi(x, t);
        [-s12 + chi * u[0], -s22 + chi * u[1]]
    }
}

impl ExactSolution for Manufactured {
    fn theta(&self, x: Point, t: f64) -> f64 {
        1.0 + Self::a(t).0 * (PI * x[0]).cos() * (PI * x[1]).cos()
    }
    fn theta_s(&self, x: Point, t: f64) -> f64 {
        1.0 + Self::d(t).0 * (PI * x[0]).cos()
    }
    fn u(&self, x: Point, t: f64) -> [f64; 2] {
        [0.0, Self::b(t).0 * (1.0 - x[1]) * Self::p(x[0]).0]
    }
    fn chi(&self, x: Point, t: f64) -> f64 {
        0.5 + Self::q(t).0 * (PI * x[0]).cos()
    }
}

/// Scenario driven by the manufactured sources, started from the exact fields.
pub fn manufactured_scenario(mesh: Arc<Mesh>, material: MaterialParams, solver: SolverParams) -> Result<Scenario> {
    let ex = Arc::new(Manufactured::new(material.clone(), solver.eps, solver.mu)?);
    let e = ex.clone();
    let mut sources = Sources::default();
    let m = ex.clone();
    sources.heat = Some(Arc::new(move |x, t| m.heat(x, t)));
    let m = ex.clone();
    sources.contact_heat_flux = Some(Arc::new(move |x, t| m.contact_heat_flux(x, t)));
    let m = ex.clone();
    sources.surface_heat = Some(Arc::new(move |x, t| m.surface_heat(x, t)));
    let m = ex.clone();
    sources.body_force = Some(Arc::new(move |x, t| m.body_force(x, t)));
    let m = ex.clone();
    sources.traction = Some(Arc::new(move |x, t| m.traction(x, t)));
    let m = ex.clone();
    sources.contact_traction = Some(Arc::new(move |x, t| m.contact_traction(x, t)));
    let m = ex.clone();
    sources.damage = Some(Arc::new(move |x, t| m.damage(x, t)));
    let (a, b, c, d) = (ex.clone(), ex.clone(), ex.clone(), ex.clone());
    Ok(Scenario {
        name: "manufactured".into(),
        mesh,
        material,
        solver,
        sources,
        initial: InitialData {
            thermal: ThermalInitial::Temperature {
                theta0: Arc::new(move |x| a.theta(x, 0.0)),
                theta_s0: Arc::new(move |x| b.theta_s(x, 0.0)),
            },
            u0: Some(Arc::new(move |x| c.u(x, 0.0))),
            chi0: Arc::new(move |x| d.chi(x, 0.0)),
        },
        subsystem: Subsystem::Full,
        exact: Some(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset_with_overrides;

    fn case() -> Manufactured {
        let spec = preset_spec(Preset::Manufactured);
        Manufactured::new(spec.material_params().unwrap(), spec.solver.eps, spec.solver.mu).unwrap()
    }

    // Strong residuals of the continuous equations by central differences of
    // the exact fields, compared with the hand-written sources.
    const H: f64 = 1e-4;

    fn dx<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        (f(x + H) - f(x - H)) / (2.0 * H)
    }
    fn dxx<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        (f(x + H) - 2.0 * f(x) + f(x - H)) / (H * H)
    }

    #[test]
    fn sources_match_finite_difference_residuals() {
        let m = case();
        let (eps, c) = (m.eps, m.slope);
        let mat = m.material.clone();
        let (le, me, lv, mv) = m.lame();
        for &(x, y, t) in &[(0.3, 0.6, 0.0), (0.71, 0.2, 0.05), (0.15, 0.9, 0.4)] {
            let p = [x, y];
            // bulk: εθ_t − εΔθ_t + cθ_t − Δθ − div u_t = h
            let th_t = |x: f64, y: f64| dx(|s| m.theta([x, y], s), t);
            let lap = |f: &dyn Fn(f64, f64) -> f64| dxx(|s| f(s, y), x) + dxx(|s| f(x, s), y);
            let th = |x: f64, y: f64| m.theta([x, y], t);
            let div_ut = dx(|s| dx(|r| m.u([x, r], s)[1], y), t);
            let lhs = eps * th_t(x, y) - eps * lap(&th_t) + c * th_t(x, y) - lap(&th) - div_ut;
            assert!((lhs - m.heat(p, t)).abs() < 1e-4, "heat {lhs} {}", m.heat(p, t));

            // surface: εθ_s,t − εθ_s,xxt + cθ_s,t − θ_s,xx − λ(χ)_t − k(θ − θ_s) = h_s
            let ts_t = |x: f64| dx(|s| m.theta_s([x, 0.0], s), t);
            let lam_t = dx(|s| mat.lambda_of(m.chi([x, 0.0], s)), t);
            let k = mat.k_of_chi(m.chi(p, t));
            let lhs = eps * ts_t(x) - eps * dxx(ts_t, x) + c * ts_t(x)
                - dxx(|s| m.theta_s([s, 0.0], t), x)
                - lam_t
                - k * (m.theta([x, 0.0], t) - m.theta_s(p, t));
            assert!((lhs - m.surface_heat(p, t)).abs() < 1e-4);

            // damage: χ_t − χ_xx + σ'_eff(χ) + λ'(χ)θ_s + ½|u|² = r
            let chi = m.chi(p, t);
            let u0 = m.u([x, 0.0], t);
            let lhs = dx(|s| m.chi(p, s), t) - dxx(|s| m.chi([s, 0.0], t), x)
                + mat.sigma_prime_eff(chi)
                + mat.lambda_prime(chi) * m.theta_s(p, t)
                + 0.5 * (u0[0] * u0[0] + u0[1] * u0[1]);
            assert!((lhs - m.damage(p, t)).abs() < 1e-4);

            // momentum: −div σ = f with σ = K ε(u) + K_v ε(u_t) + θ I
            let stress = |x: f64, y: f64| {
                let grad = |f: &dyn Fn(f64, f64, f64) -> f64, s: f64| [dx(|r| f(r, y, s), x), dx(|r| f(x, r, s), y)];
                let u1 = |x: f64, y: f64, s: f64| m.u([x, y], s)[0];
                let u2 = |x: f64, y: f64, s: f64| m.u([x, y], s)[1];
                let rate = |g: &dyn Fn(f64) -> [f64; 2]| {
                    let (a, b) = (g(t + H), g(t - H));
                    [(a[0] - b[0]) / (2.0 * H), (a[1] - b[1]) / (2.0 * H)]
                };
                let (g1, g2) = (grad(&u1, t), grad(&u2, t));
                let (r1, r2) = (rate(&|s| grad(&u1, s)), rate(&|s| grad(&u2, s)));
                let tr = g1[0] + g2[1];
                let trv = r1[0] + r2[1];
                let th = m.theta([x, y], t);
                let s11 = le * tr + 2.0 * me * g1[0] + lv * trv + 2.0 * mv * r1[0] + th;
                let s22 = le * tr + 2.0 * me * g2[1] + lv * trv + 2.0 * mv * r2[1] + th;
                let s12 = me * (g1[1] + g2[0]) + mv * (r1[1] + r2[0]);
                (s11, s22, s12)
            };
            let (s11, s22, s12) = stress(x, y);
            let (e11, e22, e12) = m.stress(p, t);
            assert!((s11 - e11).abs() < 1e-6 && (s22 - e22).abs() < 1e-6 && (s12 - e12).abs() < 1e-6);
            let dh = 1e-3;
            let f1 = -((stress(x + dh, y).0 - stress(x - dh, y).0) + (stress(x, y + dh).2 - stress(x, y - dh).2))
                / (2.0 * dh);
            let f2 = -((stress(x + dh, y).2 - stress(x - dh, y).2) + (stress(x, y + dh).1 - stress(x, y - dh).1))
                / (2.0 * dh);
            let f = m.body_force(p, t);
            assert!((f1 - f[0]).abs() < 1e-4 && (f2 - f[1]).abs() < 1e-4, "{f1} {f2} {f:?}");
        }
    }

    #[test]
    fn constraints_inactive() {
        let m = case();
        for i in 0..=20 {
            for &t in &[0.0, 0.5, 2.0] {
                let x = [i as f64 / 20.0, 0.0];
                let chi = m.chi(x, t);
                assert!((0.2..=0.8).contains(&chi));
                assert!(m.u(x, t)[1] > 0.0); // u·n = −u₂ < 0
            }
        }
    }

    #[test]
    fn manufactured_spec_builds() {
        let spec = preset_with_overrides(Preset::Manufactured, &["mesh.nx=3".into(), "mesh.ny=3".into()]).unwrap();
        let sc = spec.build().unwrap();
        assert!(sc.exact.is_some());
        assert!(
            preset_with_overrides(Preset::Manufactured, &["material.law=log".into()])
                .unwrap()
                .build()
                .is_err()
        );
    }
}
