use proptest::prelude::*;

use thermocontact::monotone::{
    coercivity_bound, ell_reg_apply, ell_reg_derivative, ell_reg_inverse, entropy_potential, jstar_moreau, resolvent,
    yosida_apply, RegParams, ThermalLaw,
};

fn law_strategy() -> impl Strategy<Value = ThermalLaw> {
    prop_oneof![
        Just(ThermalLaw::logarithmic()),
        (1.0f64..4.0).prop_map(|p| ThermalLaw::power_law(p).unwrap()),
        Just(ThermalLaw::linear()),
    ]
}

fn mu_strategy() -> impl Strategy<Value = f64> {
    (-4.0f64..=0.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn resolvent_solves_its_equation(law in law_strategy(), mu in mu_strategy(), w in -20.0f64..20.0) {
        let reg = RegParams::new(mu).unwrap();
        let rho = resolvent(&law, &reg, w).unwrap();
        prop_assert!((rho + mu * law.gamma(rho) - w).abs() <= 1e-10 * (1.0 + w.abs()));
        prop_assert!(rho <= w.max(0.0) + 1e-12);
    }

    #[test]
    fn yosida_is_monotone_and_lipschitz(law in law_strategy(), mu in mu_strategy(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let reg = RegParams::new(mu).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (ya, yb) = (yosida_apply(&law, &reg, lo).unwrap(), yosida_apply(&law, &reg, hi).unwrap());
        prop_assert!(yb >= ya - 1e-10 * (1.0 + ya.abs()));
        prop_assert!(yb - ya <= (hi - lo) / mu + 1e-8 * (1.0 + yb.abs()));
    }

    #[test]
    fn ell_reg_is_monotone_and_lipschitz(law in law_strategy(), mu in mu_strategy(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let reg = RegParams::new(mu).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (la, lb) = (ell_reg_apply(&law, &reg, lo).unwrap(), ell_reg_apply(&law, &reg, hi).unwrap());
        prop_assert!(la <= lb);
        prop_assert!(lb - la <= (hi - lo) / mu + 1e-10);
        let d = ell_reg_derivative(&law, &reg, lo).unwrap();
        prop_assert!(d > 0.0 && d <= 1.0 / mu * (1.0 + 1e-12));
    }

    #[test]
    fn ell_reg_inverse_round_trip(law in law_strategy(), mu in mu_strategy(), u in -20.0f64..20.0) {
        let reg = RegParams::new(mu).unwrap();
        let y = ell_reg_apply(&law, &reg, u).unwrap();
        let back = ell_reg_inverse(&law, &reg, y).unwrap();
        prop_assert!((back - u).abs() <= 1e-8 * (1.0 + u.abs()));
    }

    #[test]
    fn envelope_lies_below_conjugate(law in law_strategy(), mu in mu_strategy(), w in -20.0f64..20.0) {
        let reg = RegParams::new(mu).unwrap();
        let env = jstar_moreau(&law, &reg, w).unwrap();
        let js = law.jstar(w);
        prop_assert!(env <= js + 1e-10 * (1.0 + js.abs()));
        // All three conjugates are nonnegative.
        prop_assert!(env >= 0.0);
    }

    #[test]
    fn envelope_derivative_is_yosida(law in law_strategy(), mu in (-2.0f64..=0.0).prop_map(|e| 10f64.powf(e)), w in -5.0f64..5.0) {
        let reg = RegParams::new(mu).unwrap();
        let h = 1e-5;
        let fd = (jstar_moreau(&law, &reg, w + h).unwrap() - jstar_moreau(&law, &reg, w - h).unwrap()) / (2.0 * h);
        let g = yosida_apply(&law, &reg, w).unwrap();
        prop_assert!((fd - g).abs() <= 1e-4 * (1.0 + g.abs()), "fd {fd} vs {g}");
    }

    #[test]
    fn potential_derivative_is_inverse(law in law_strategy(), mu in (-2.0f64..=0.0).prop_map(|e| 10f64.powf(e)), w in -5.0f64..5.0) {
        let reg = RegParams::new(mu).unwrap();
        let h = 1e-5;
        let fd = (entropy_potential(&law, &reg, w + h).unwrap() - entropy_potential(&law, &reg, w - h).unwrap()) / (2.0 * h);
        let t = ell_reg_inverse(&law, &reg, w).unwrap();
        prop_assert!((fd - t).abs() <= 1e-4 * (1.0 + t.abs()));
    }

    #[test]
    fn coercivity_slack_nonnegative(law in law_strategy(), mu in mu_strategy(), u in -50.0f64..50.0) {
        let reg = RegParams::new(mu).unwrap();
        prop_assert!(coercivity_bound(&law, &reg, u).unwrap() >= 0.0);
    }

    #[test]
    fn log_law_temperature_stays_positive(mu in mu_strategy(), u in -50.0f64..50.0) {
        let law = ThermalLaw::logarithmic();
        let reg = RegParams::new(mu).unwrap();
        let y = ell_reg_apply(&law, &reg, u).unwrap();
        prop_assert!(u - mu * y > 0.0);
    }
}
