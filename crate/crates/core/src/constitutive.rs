//! Surface constitutive functions and the two constraint operators.

use crate::assembly::ElasticityTensors;
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::monotone::ThermalLaw;

/// Cohesion law `σ'(x) = c₀ + c₁x + c₂x² + c₃x³`, frozen outside `window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesionSpec {
    pub coeffs: [f64; 4],
    pub window: [f64; 2],
}

impl CohesionSpec {
    /// Derivative of the double well `c·x²(1−x)²/2`, i.e. `c·x(1−x)(1−2x)`.
    pub fn double_well(c: f64) -> Self {
        Self {
            coeffs: [0.0, c, -3.0 * c, 2.0 * c],
            window: [-1.0, 2.0],
        }
    }

    fn poly(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + x * (c1 + x * (c2 + x * c3))
    }

    fn poly_antiderivative(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        x * (c0 + x * (c1 / 2.0 + x * (c2 / 3.0 + x * c3 / 4.0)))
    }

    pub fn sigma_prime(&self, x: f64) -> f64 {
        self.poly(x.clamp(self.window[0], self.window[1]))
    }

    /// Antiderivative of [`Self::sigma_prime`] with `σ(0) = 0`; linear outside the window.
    pub fn sigma(&self, x: f64) -> f64 {
        let g = |x: f64| {
            let inside = x.clamp(self.window[0], self.window[1]);
            self.poly_antiderivative(inside) + self.poly(inside) * (x - inside)
        };
        g(x) - g(0.0)
    }

    /// Lipschitz constant of `σ'`: maximum of `|σ''|` over the window.
    pub fn lipschitz(&self) -> f64 {
        let [_, c1, c2, c3] = self.coeffs;
        let d = |x: f64| (c1 + 2.0 * c2 * x + 3.0 * c3 * x * x).abs();
        let [lo, hi] = self.window;
        let mut m = d(lo).max(d(hi));
        if c3 != 0.0 {
            let vertex = -c2 / (3.0 * c3);
            if vertex > lo && vertex < hi {
                m = m.max(d(vertex));
            }
        }
        m
    }
}

/// Material data of the body and the adhesive.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub tensors: ElasticityTensors,
    pub k0: f64,
    pub k1: f64,
    /// `λ(χ) = lam[0] + lam[1]·χ + lam[2]·χ²`.
    pub lam: [f64; 3],
    pub sigma: CohesionSpec,
    pub theta_eq: f64,
    pub kappa_pen: f64,
    pub law: ThermalLaw,
}

impl MaterialParams {
    /// Default penalty: `10⁶ × (a₁₁₁₁ + a₂₂₂₂ + 2a₁₂₁₂)`.
    pub fn default_kappa(tensors: &ElasticityTensors) -> f64 {
        1e6 * tensors.elastic.trace()
    }

    pub fn validate(&self) -> Result<()> {
        self.tensors.validate()?;
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.k0 >= 0.0 && self.k1 >= 0.0) {
            return bad(format!(
                "k0 and k1 must be nonnegative, got {} and {}",
                self.k0, self.k1
            ));
        }
        if !(self.theta_eq > 0.0) {
            return bad(format!("theta_eq must be positive, got {}", self.theta_eq));
        }
        if !(self.kappa_pen > 0.0 && self.kappa_pen.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa_pen));
        }
        if !(self.sigma.window[0] < self.sigma.window[1]) {
            return bad(format!("empty cohesion window {:?}", self.sigma.window));
        }
        if self.lam.iter().chain(&self.sigma.coeffs).any(|v| !v.is_finite()) {
            return bad("non-finite latent heat or cohesion coefficient".into());
        }
        Ok(())
    }

    pub fn k_of_chi(&self, chi: f64) -> f64 {
        self.k0 + self.k1 * chi.clamp(0.0, 1.0)
    }

    pub fn lambda_of(&self, chi: f64) -> f64 {
        self.lam[0] + chi * (self.lam[1] + chi * self.lam[2])
    }

    pub fn lambda_prime(&self, chi: f64) -> f64 {
        self.lam[1] + 2.0 * self.lam[2] * chi
    }

    pub fn sigma_prime(&self, chi: f64) -> f64 {
        self.sigma.sigma_prime(chi)
    }

    /// `σ'(χ) − λ'(χ)·θ_eq`.
    pub fn sigma_prime_eff(&self, chi: f64) -> f64 {
        self.sigma.sigma_prime(chi) - self.lambda_prime(chi) * self.theta_eq
    }

    /// `σ(χ) − λ(χ)·θ_eq`, the antiderivative of [`Self::sigma_prime_eff`] up to a constant.
    pub fn sigma_eff(&self, chi: f64) -> f64 {
        self.sigma.sigma(chi) - self.lambda_of(chi) * self.theta_eq
    }

    /// Lipschitz constant of `σ'_eff`.
    pub fn sigma_eff_lipschitz(&self) -> f64 {
        self.sigma.lipschitz() + 2.0 * self.lam[2].abs() * self.theta_eq
    }
}

/// Nodal projection onto `[0, 1]`. Returns the projected values and the
/// multiplier `ξ = diag·(χ̂ − χ)`, an element of the subdifferential of the
/// indicator of `[0, 1]` at `χ`.
pub fn prox_box(chi_hat: &[f64], diag: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let chi: Vec<f64> = chi_hat.iter().map(|c| c.clamp(0.0, 1.0)).collect();
    let xi = chi_hat
        .iter()
        .zip(&chi)
        .zip(diag)
        .map(|((h, c), d)| d * (h - c))
        .collect();
    (chi, xi)
}

/// Contact reaction at the nodes of Γ_c.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactReaction {
    /// Normal penalty force `κ [u·n]₊`.
    pub eta_n: Vec<f64>,
    /// Full reaction density `−χu − η_n n`.
    pub reaction: Vec<Point>,
}

pub fn contact_reaction(u_trace: &[Point], chi: &[f64], normal: Point, kappa: f64) -> ContactReaction {
    let mut eta_n = Vec::with_capacity(u_trace.len());
    let mut reaction = Vec::with_capacity(u_trace.len());
    for (u, &c) in u_trace.iter().zip(chi) {
        let un = u[0] * normal[0] + u[1] * normal[1];
        let eta = kappa * un.max(0.0);
        eta_n.push(eta);
        reaction.push([-c * u[0] - eta * normal[0], -c * u[1] - eta * normal[1]]);
    }
    ContactReaction { eta_n, reaction }
}
