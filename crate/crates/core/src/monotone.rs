//! Scalar calculus of the entropy nonlinearity.
//!
//! A [`ThermalLaw`] fixes a convex potential `j` with derivative `ℓ = j'`
//! and inverse `γ = ℓ⁻¹ = (j*)'`. The temperature solvers never evaluate `ℓ`
//! directly; they use the regularization
//!
//! ```text
//! 𝓛_μ = (μ·Id + γ_μ)⁻¹,     γ_μ(w) = (w − ρ_μ(w)) / μ,     ρ_μ(w) + μ·γ(ρ_μ(w)) = w,
//! ```
//!
//! which is single valued, monotone and `1/μ`-Lipschitz on all of ℝ.
//!
//! Every function here is a pure map of its arguments.

use crate::error::{Error, Result};

/// The three supported families of thermal potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    /// `j(x) = x log x − x`, `ℓ(x) = log x`, `γ(y) = eʸ`.
    Logarithmic,
    /// `j(x) = x^{p+1} / (p(p+1))` on `x ≥ 0`, `ℓ(x) = x^p / p`.
    PowerLaw { exponent: f64 },
    /// `j(x) = x²/2`, `ℓ(x) = x`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalLaw {
    pub kind: LawKind,
    /// Lower end of the domain of `ℓ` (`-inf` for the linear law).
    pub dom_lower: f64,
    pub coercivity_c1: f64,
    pub coercivity_c2: f64,
}

impl ThermalLaw {
    pub fn logarithmic() -> Self {
        Self {
            kind: LawKind::Logarithmic,
            dom_lower: 0.0,
            coercivity_c1: 1.0,
            coercivity_c2: 0.0,
        }
    }

    /// Power law with `c_V(θ) = θ^p`. Coercivity constants follow from
    /// Young's inequality `x^{p+1}/(p+1) ≥ x − p/(p+1)`.
    pub fn power_law(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Validation(format!(
                "power-law exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self {
            kind: LawKind::PowerLaw { exponent },
            dom_lower: 0.0,
            coercivity_c1: 1.0,
            coercivity_c2: exponent / (exponent + 1.0),
        })
    }

    pub fn linear() -> Self {
        Self {
            kind: LawKind::Linear,
            dom_lower: f64::NEG_INFINITY,
            coercivity_c1: 1.0,
            coercivity_c2: 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LawKind::Logarithmic => "logarithmic",
            LawKind::PowerLaw { .. } => "power",
            LawKind::Linear => "linear",
        }
    }

    /// True when temperatures are confined to the open half line.
    pub fn has_open_positive_domain(&self) -> bool {
        matches!(self.kind, LawKind::Logarithmic)
    }

    /// `ℓ(x)`, defined on the interior of the domain.
    pub fn ell(&self, x: f64) -> Result<f64> {
        let outside = || Error::DomainViolation {
            law: self.name(),
            value: x,
        };
        match self.kind {
            LawKind::Logarithmic if x > 0.0 => Ok(x.ln()),
            LawKind::PowerLaw { exponent } if x > 0.0 => Ok(x.powf(exponent) / exponent),
            LawKind::Linear if x.is_finite() => Ok(x),
            _ => Err(outside()),
        }
    }

    /// `γ(y)`, the maximal monotone inverse of `ℓ` on all of ℝ.
    pub fn gamma(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::Logarithmic => y.exp(),
            LawKind::PowerLaw { exponent } => {
                if y > 0.0 {
                    (exponent * y).powf(1.0 / exponent)
                } else {
                    0.0
                }
            }
            LawKind::Linear => y,
        }
    }

    /// `γ'(y)`; may be `+inf` at the kink of a power law with `p > 1`.
    pub fn gamma_prime(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::Logarithmic => y.exp(),
            LawKind::PowerLaw { exponent } => {
                if y > 0.0 {
                    (exponent * y).powf(1.0 / exponent - 1.0)
                } else if y < 0.0 {
                    0.0
                } else if exponent > 1.0 {
                    f64::INFINITY
                } else if exponent == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LawKind::Linear => 1.0,
        }
    }

    /// `j(x)`, or `None` outside the effective domain.
    pub fn j(&self, x: f64) -> Option<f64> {
        match self.kind {
            LawKind::Logarithmic => {
                if x > 0.0 {
                    Some(x * x.ln() - x)
                } else if x == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            LawKind::PowerLaw { exponent } => {
                (x >= 0.0).then(|| x.powf(exponent + 1.0) / (exponent * (exponent + 1.0)))
            }
            LawKind::Linear => Some(0.5 * x * x),
        }
    }

    /// The convex conjugate `j*(y)`; finite everywhere for all three families.
    pub fn jstar(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::Logarithmic => y.exp(),
            LawKind::PowerLaw { exponent } => {
                if y > 0.0 {
                    (exponent * y).powf((exponent + 1.0) / exponent) / (exponent + 1.0)
                } else {
                    0.0
                }
            }
            LawKind::Linear => 0.5 * y * y,
        }
    }

    /// Constant `C̄₂ = C₂ + μ·C₁²/4` of the regularized coercivity estimate.
    pub fn adjusted_c2(&self, mu: f64) -> f64 {
        self.coercivity_c2 + 0.25 * mu * self.coercivity_c1 * self.coercivity_c1
    }
}

/// Yosida parameter and scalar solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    pub mu: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl RegParams {
    pub fn new(mu: f64) -> Result<Self> {
        Self::with_tolerance(mu, 1e-12, 100)
    }

    pub fn with_tolerance(mu: f64, newton_tol: f64, newton_max_iter: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Validation(format!("mu must be > 0, got {mu}")));
        }
        if !(newton_tol > 0.0) {
            return Err(Error::Validation(format!("newton_tol must be > 0, got {newton_tol}")));
        }
        if newton_max_iter == 0 {
            return Err(Error::Validation("newton_max_iter must be positive".into()));
        }
        Ok(Self {
            mu,
            newton_tol,
            newton_max_iter,
        })
    }
}

const MAX_WIDENINGS: usize = 256;

/// Root of a nondecreasing function by Newton's method safeguarded with
/// bisection. `f` returns the value and derivative. The bracket starts at
/// `[min(hint,0)−1, max(hint,0)+1]` and doubles until it straddles the root.
fn increasing_root(
    f: impl Fn(f64) -> (f64, f64),
    hint: f64,
    start: f64,
    tol: f64,
    max_iter: usize,
    what: &'static str,
) -> Result<f64> {
    let fail = |iterations| Error::NoConvergence { what, iterations };
    let mut lo = hint.min(0.0) - 1.0;
    let mut hi = hint.max(0.0) + 1.0;

    let mut widenings = 0;
    loop {
        let (flo, _) = f(lo);
        if flo.is_nan() {
            return Err(fail(widenings));
        }
        if flo <= 0.0 {
            break;
        }
        let width = hi - lo;
        hi = lo;
        lo -= 2.0 * width;
        widenings += 1;
        if widenings > MAX_WIDENINGS || !lo.is_finite() {
            return Err(fail(widenings));
        }
    }
    loop {
        let (fhi, _) = f(hi);
        if fhi.is_nan() {
            return Err(fail(widenings));
        }
        if fhi >= 0.0 {
            break;
        }
        let width = hi - lo;
        lo = hi;
        hi += 2.0 * width;
        widenings += 1;
        if widenings > MAX_WIDENINGS || !hi.is_finite() {
            return Err(fail(widenings));
        }
    }

    let mut x = if start > lo && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx.is_nan() {
            return Err(fail(max_iter));
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(fail(max_iter))
}

/// `ℓ(x)`.
pub fn ell_apply(law: &ThermalLaw, x: f64) -> Result<f64> {
    law.ell(x)
}

/// `γ(y)`.
pub fn gamma_apply(law: &ThermalLaw, y: f64) -> f64 {
    law.gamma(y)
}

/// Resolvent `ρ_μ(w)`: the unique root of `ρ + μ·γ(ρ) = w`.
pub fn resolvent(law: &ThermalLaw, reg: &RegParams, w: f64) -> Result<f64> {
    let mu = reg.mu;
    if let LawKind::Linear = law.kind {
        // Linear root; Newton lands on it in one step from any start.
        return increasing_root(
            |r| (r + mu * r - w, 1.0 + mu),
            w,
            w,
            reg.newton_tol,
            reg.newton_max_iter,
            "resolvent",
        );
    }
    let start = match law.kind {
        LawKind::Logarithmic => w.min(0.0),
        _ => w,
    };
    increasing_root(
        |r| (r + mu * law.gamma(r) - w, 1.0 + mu * law.gamma_prime(r)),
        w,
        start,
        reg.newton_tol,
        reg.newton_max_iter,
        "resolvent",
    )
}

/// Yosida approximation `γ_μ(w) = (w − ρ_μ(w)) / μ`.
pub fn yosida_apply(law: &ThermalLaw, reg: &RegParams, w: f64) -> Result<f64> {
    let rho = resolvent(law, reg, w)?;
    Ok((w - rho) / reg.mu)
}

/// `𝓛_μ(u)`.
///
/// Eliminating the inner resolvent, `y = 𝓛_μ(u)` is the root of
/// `γ(y(1+μ²) − μu) = u − μy`, and `y(1+μ²) − μu` is exactly `ρ_μ(y)`.
pub fn ell_reg_apply(law: &ThermalLaw, reg: &RegParams, u: f64) -> Result<f64> {
    Ok(ell_reg_with_resolvent(law, reg, u)?.0)
}

/// `(𝓛_μ(u), ρ_μ(𝓛_μ(u)))`.
fn ell_reg_with_resolvent(law: &ThermalLaw, reg: &RegParams, u: f64) -> Result<(f64, f64)> {
    let mu = reg.mu;
    let scale = 1.0 + mu * mu;
    let residual = |y: f64| {
        let r = y * scale - mu * u;
        (law.gamma(r) + mu * y - u, law.gamma_prime(r) * scale + mu)
    };
    let start = match law.kind {
        // The root sits near ℓ(u) when u > 0 and near u/μ otherwise.
        LawKind::Logarithmic if u > 0.0 => u.ln().min(u / mu),
        LawKind::Logarithmic => u / mu,
        _ => u,
    };
    let mut y = increasing_root(residual, u, start, reg.newton_tol, reg.newton_max_iter, "ell_reg")?;
    if law.has_open_positive_domain() {
        // u − μy = γ(ρ) > 0 must also hold in floating point.
        let mut guard = 0;
        while !(u - mu * y > 0.0) && guard < 64 {
            y = y.next_down();
            guard += 1;
        }
    }
    Ok((y, y * scale - mu * u))
}

/// `d𝓛_μ/du = 1 / (μ + γ_μ'(y))` at `y = 𝓛_μ(u)`; lies in `(0, 1/μ]`.
pub fn ell_reg_derivative(law: &ThermalLaw, reg: &RegParams, u: f64) -> Result<f64> {
    Ok(ell_reg_value_and_derivative(law, reg, u)?.1)
}

/// `(𝓛_μ(u), 𝓛_μ'(u))` with a single root solve.
pub fn ell_reg_value_and_derivative(law: &ThermalLaw, reg: &RegParams, u: f64) -> Result<(f64, f64)> {
    let mu = reg.mu;
    let (y, r) = ell_reg_with_resolvent(law, reg, u)?;
    let gp = law.gamma_prime(r);
    let yosida_prime = if gp.is_infinite() {
        1.0 / mu
    } else {
        gp / (1.0 + mu * gp)
    };
    Ok((y, 1.0 / (mu + yosida_prime)))
}

/// `𝓛_μ⁻¹(w) = μ·w + γ_μ(w)`.
pub fn ell_reg_inverse(law: &ThermalLaw, reg: &RegParams, w: f64) -> Result<f64> {
    Ok(reg.mu * w + yosida_apply(law, reg, w)?)
}

/// Moreau envelope `j*_μ(w) = (μ/2)·γ_μ(w)² + j*(ρ_μ(w))`.
pub fn jstar_moreau(law: &ThermalLaw, reg: &RegParams, w: f64) -> Result<f64> {
    let rho = resolvent(law, reg, w)?;
    let g = (w - rho) / reg.mu;
    Ok(0.5 * reg.mu * g * g + law.jstar(rho))
}

/// `Φ_μ(w) = (μ/2)w² + j*_μ(w)`, the convex potential whose derivative is `𝓛_μ⁻¹`.
pub fn entropy_potential(law: &ThermalLaw, reg: &RegParams, w: f64) -> Result<f64> {
    Ok(0.5 * reg.mu * w * w + jstar_moreau(law, reg, w)?)
}

/// Slack of the regularized coercivity estimate
/// `μ·y² + j*_μ(y) ≥ C₁|u| − C̄₂` with `y = 𝓛_μ(u)`. Nonnegative by theory.
pub fn coercivity_bound(law: &ThermalLaw, reg: &RegParams, u: f64) -> Result<f64> {
    let y = ell_reg_apply(law, reg, u)?;
    let envelope = jstar_moreau(law, reg, y)?;
    Ok(reg.mu * y * y + envelope - law.coercivity_c1 * u.abs() + law.adjusted_c2(reg.mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Plain bisection on an increasing function; independent of the solver above.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn reg(mu: f64) -> RegParams {
        RegParams::new(mu).unwrap()
    }

    #[test]
    fn ell_values() {
        assert_eq!(ThermalLaw::logarithmic().ell(1.0).unwrap(), 0.0);
        assert_eq!(ThermalLaw::linear().ell(3.5).unwrap(), 3.5);
        assert_eq!(ThermalLaw::power_law(1.0).unwrap().ell(2.0).unwrap(), 2.0);
    }

    #[test]
    fn ell_outside_domain() {
        let err = ThermalLaw::logarithmic().ell(-1.0).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { .. }));
        assert!(ThermalLaw::power_law(2.0).unwrap().ell(0.0).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(ThermalLaw::logarithmic().gamma(0.0), 1.0);
        assert_eq!(ThermalLaw::power_law(2.0).unwrap().gamma(-1.0), 0.0);
        assert_eq!(ThermalLaw::linear().gamma(-2.0), -2.0);
    }

    #[test]
    fn power_law_conjugate_vanishes_on_negative_axis() {
        // j*(y) = sup_{x≥0} xy − j(x) = 0 for y ≤ 0, attained at x = 0.
        let law = ThermalLaw::power_law(2.0).unwrap();
        for y in [-3.0, -1.0, 0.0] {
            let brute = (0..=2000)
                .map(|i| {
                    let x = i as f64 * 1e-3;
                    x * y - law.j(x).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert_abs_diff_eq!(law.jstar(y), brute, epsilon = 1e-12);
        }
        // For y > 0 the brute-force supremum matches too.
        let y = 0.7;
        let brute = (0..=200_000)
            .map(|i| {
                let x = i as f64 * 1e-5;
                x * y - law.j(x).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(law.jstar(y), brute, epsilon = 1e-8);
    }

    #[test]
    fn resolvent_examples() {
        let log = ThermalLaw::logarithmic();
        assert_abs_diff_eq!(resolvent(&log, &reg(1.0), 1.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            resolvent(&ThermalLaw::linear(), &reg(1.0), 2.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let oracle = bisect(|r| r + r.exp() - 2.0, 0.0, 1.0);
        assert_abs_diff_eq!(oracle, 0.4429, epsilon = 1e-4);
        assert_abs_diff_eq!(resolvent(&log, &reg(1.0), 2.0).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn yosida_examples() {
        let log = ThermalLaw::logarithmic();
        assert_abs_diff_eq!(
            yosida_apply(&ThermalLaw::linear(), &reg(1.0), 2.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(yosida_apply(&log, &reg(1.0), 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let rho = bisect(|r| r + r.exp(), -1.0, 0.0);
        assert_abs_diff_eq!(-rho, 0.5671, epsilon = 1e-4);
        assert_abs_diff_eq!(yosida_apply(&log, &reg(1.0), 0.0).unwrap(), -rho, epsilon = 1e-12);
    }

    #[test]
    fn ell_reg_examples() {
        assert_abs_diff_eq!(
            ell_reg_apply(&ThermalLaw::linear(), &reg(1.0), 1.0).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        // Nested oracle: y solves μy + γ_μ(y) = u, with γ_μ from an inner bisection.
        let log = ThermalLaw::logarithmic();
        let inner = |y: f64| {
            let rho = bisect(|r| r + r.exp() - y, y - 50.0, y + 1.0);
            y - rho
        };
        let oracle = bisect(|y| y + inner(y) - 1.0, -5.0, 5.0);
        assert_abs_diff_eq!(oracle, 0.3126, epsilon = 1e-4);
        assert_abs_diff_eq!(ell_reg_apply(&log, &reg(1.0), 1.0).unwrap(), oracle, epsilon = 1e-10);
    }

    #[test]
    fn ell_reg_right_inverse() {
        let laws = [
            ThermalLaw::logarithmic(),
            ThermalLaw::linear(),
            ThermalLaw::power_law(2.0).unwrap(),
            ThermalLaw::power_law(0.5).unwrap(),
        ];
        for law in &laws {
            for mu in [1.0, 0.1, 0.01] {
                let r = reg(mu);
                for y in [-3.0, -0.5, 0.0, 0.4, 2.5] {
                    let u = ell_reg_inverse(law, &r, y).unwrap();
                    let back = ell_reg_apply(law, &r, u).unwrap();
                    assert_abs_diff_eq!(back, y, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn ell_reg_derivative_examples() {
        let r = reg(1.0);
        for u in [-4.0, 0.0, 3.0] {
            assert_abs_diff_eq!(
                ell_reg_derivative(&ThermalLaw::linear(), &r, u).unwrap(),
                2.0 / 3.0,
                epsilon = 1e-12
            );
        }
        let log = ThermalLaw::logarithmic();
        let h = 1e-5;
        let fd = (ell_reg_apply(&log, &r, 1.0 + h).unwrap() - ell_reg_apply(&log, &r, 1.0 - h).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(ell_reg_derivative(&log, &r, 1.0).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn ell_reg_derivative_at_power_law_kink() {
        // γ' = ∞ at the kink; the derivative must stay finite and ≤ 1/μ.
        let law = ThermalLaw::power_law(3.0).unwrap();
        let r = reg(0.5);
        let d = ell_reg_derivative(&law, &r, 0.0).unwrap();
        assert!(d.is_finite() && d > 0.0 && d <= 1.0 / r.mu + 1e-12);
    }

    #[test]
    fn jstar_moreau_examples() {
        assert_abs_diff_eq!(
            jstar_moreau(&ThermalLaw::linear(), &reg(1.0), 2.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let log = ThermalLaw::logarithmic();
        let rho = bisect(|r| r + r.exp(), -1.0, 0.0);
        let expected = 0.5 * rho * rho + rho.exp();
        assert_abs_diff_eq!(expected, 0.7279, epsilon = 1e-4);
        let value = jstar_moreau(&log, &reg(1.0), 0.0).unwrap();
        assert_abs_diff_eq!(value, expected, epsilon = 1e-12);
        assert!(value <= log.jstar(0.0));
    }

    #[test]
    fn jstar_moreau_increases_to_conjugate() {
        let log = ThermalLaw::logarithmic();
        let mut last = f64::NEG_INFINITY;
        for mu in [1.0, 0.1, 0.01, 1e-3, 1e-4] {
            let v = jstar_moreau(&log, &reg(mu), 0.0).unwrap();
            assert!(v > last && v <= 1.0);
            last = v;
        }
        assert!(1.0 - last < 1e-3);
    }

    #[test]
    fn coercivity_examples() {
        let log = ThermalLaw::logarithmic();
        assert!(coercivity_bound(&log, &reg(0.1), 5.0).unwrap() >= 0.0);
        let lin = ThermalLaw::linear();
        assert_abs_diff_eq!(
            coercivity_bound(&lin, &reg(1.0), 0.0).unwrap(),
            lin.adjusted_c2(1.0),
            epsilon = 1e-14
        );
        for mu in [1.0, 0.1, 0.01] {
            for i in 0..=200 {
                let u = -10.0 + 0.1 * i as f64;
                assert!(coercivity_bound(&log, &reg(mu), u).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn positivity_survives_underflow() {
        let log = ThermalLaw::logarithmic();
        for (mu, u) in [(1e-4, -20.0), (1e-2, -5.0), (0.5, -1.0)] {
            let y = ell_reg_apply(&log, &reg(mu), u).unwrap();
            assert!(u - mu * y > 0.0);
        }
    }

    #[test]
    fn invalid_reg_params() {
        assert!(RegParams::new(0.0).is_err());
        assert!(RegParams::with_tolerance(1.0, 0.0, 10).is_err());
        assert!(ThermalLaw::power_law(-1.0).is_err());
    }
}
