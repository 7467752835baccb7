use proptest::prelude::*;

use thermocontact::assembly::{
    assemble_contact_scalar, assemble_divergence, assemble_elastic, assemble_scalar, contact_weighted_mass, dof,
    ElasticityTensors,
};
use thermocontact::constitutive::{contact_reaction, prox_box};
use thermocontact::linalg::{dot, SparseMatrix};
use thermocontact::mesh::{rect_mesh, Rect, SideMarkers};
use thermocontact::stepper::solve_box_obstacle;

fn rect_strategy() -> impl Strategy<Value = (usize, usize, Rect)> {
    (
        1usize..7,
        1usize..7,
        -2.0f64..2.0,
        -2.0f64..2.0,
        0.2f64..3.0,
        0.2f64..3.0,
    )
        .prop_map(|(nx, ny, x0, y0, w, h)| {
            (
                nx,
                ny,
                Rect {
                    x_min: x0,
                    y_min: y0,
                    x_max: x0 + w,
                    y_max: y0 + h,
                },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_matrices((nx, ny, r) in rect_strategy()) {
        let mesh = rect_mesh(nx, ny, r, SideMarkers::default()).unwrap();
        let (m, s, lumped) = assemble_scalar(&mesh).unwrap();
        let area = r.width() * r.height();
        prop_assert!((m.total() - area).abs() < 1e-12 * area.max(1.0));
        prop_assert!((lumped.iter().sum::<f64>() - area).abs() < 1e-12 * area.max(1.0));
        prop_assert!(m.max_asymmetry() < 1e-14 && s.max_asymmetry() < 1e-12);
        let ones = vec![1.0; mesh.num_vertices()];
        prop_assert!(s.mul_vec(&ones).iter().all(|v| v.abs() < 1e-10));
        // Stiffness reproduces ∫|∇x|² for the coordinate function.
        let x: Vec<f64> = mesh.vertices().iter().map(|p| p[0]).collect();
        prop_assert!((s.quad_form(&x) - area).abs() < 1e-10 * area.max(1.0));

        let (mc, sc, lc) = assemble_contact_scalar(&mesh);
        prop_assert!((mc.total() - r.width()).abs() < 1e-12);
        prop_assert!((lc.iter().sum::<f64>() - r.width()).abs() < 1e-12);
        prop_assert!(sc.mul_vec(&vec![1.0; mesh.num_contact_nodes()]).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn weighted_mass_with_unit_weights_is_mass((nx, ny, r) in rect_strategy()) {
        let mesh = rect_mesh(nx, ny, r, SideMarkers::default()).unwrap();
        let (mc, _, _) = assemble_contact_scalar(&mesh);
        let e = contact_weighted_mass(&mesh, &vec![1.0; mesh.num_contact_nodes()]);
        let diff = SparseMatrix::lin_comb(&[(1.0, &e), (-1.0, &mc)]);
        prop_assert!(diff.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn elastic_forms_vanish_on_rigid_motions((nx, ny, r) in rect_strategy(), lam in 0.1f64..10.0, mu in 0.1f64..10.0) {
        let mesh = rect_mesh(nx, ny, r, SideMarkers::default()).unwrap();
        let (a, b) = assemble_elastic(&mesh, &ElasticityTensors::isotropic(lam, mu, mu, lam)).unwrap();
        let n = mesh.num_vertices();
        let mut rot = vec![0.0; 2 * n];
        let mut shift = vec![0.0; 2 * n];
        for (v, p) in mesh.vertices().iter().enumerate() {
            rot[dof(v, 0)] = -p[1];
            rot[dof(v, 1)] = p[0];
            shift[dof(v, 0)] = 1.0;
            shift[dof(v, 1)] = -2.0;
        }
        for m in [&a, &b] {
            prop_assert!(m.mul_vec(&rot).iter().all(|x| x.abs() < 1e-9));
            prop_assert!(m.mul_vec(&shift).iter().all(|x| x.abs() < 1e-9));
            prop_assert!(m.max_asymmetry() < 1e-10);
        }
    }

    #[test]
    fn divergence_of_linear_field((nx, ny, r) in rect_strategy(), c in -3.0f64..3.0) {
        let mesh = rect_mesh(nx, ny, r, SideMarkers::default()).unwrap();
        let d = assemble_divergence(&mesh).unwrap();
        let n = mesh.num_vertices();
        let mut u = vec![0.0; 2 * n];
        for (v, p) in mesh.vertices().iter().enumerate() {
            u[dof(v, 0)] = c * p[0];
            u[dof(v, 1)] = 2.0 * p[1];
        }
        // ∫ div u = (c + 2)·area when tested against the constant.
        let area = r.width() * r.height();
        let total: f64 = d.mul_vec(&u).iter().sum();
        prop_assert!((total - (c + 2.0) * area).abs() < 1e-10 * area.max(1.0));
    }

    #[test]
    fn prox_box_is_a_projection(x in prop::collection::vec(-3.0f64..3.0, 1..20)) {
        let diag = vec![2.0; x.len()];
        let (chi, xi) = prox_box(&x, &diag);
        for i in 0..x.len() {
            prop_assert!((0.0..=1.0).contains(&chi[i]));
            // ξ is in the normal cone of [0, 1] at χ.
            let in_cone = if chi[i] > 0.0 && chi[i] < 1.0 {
                xi[i] == 0.0
            } else if chi[i] == 0.0 {
                xi[i] <= 0.0
            } else {
                xi[i] >= 0.0
            };
            prop_assert!(in_cone);
        }
        let (again, _) = prox_box(&chi, &diag);
        prop_assert_eq!(again, chi);
    }

    #[test]
    fn obstacle_complementarity(b in prop::collection::vec(-5.0f64..5.0, 2..30), shift in 0.1f64..3.0) {
        let n = b.len();
        let h = 1.0 / n as f64;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 / h + shift * h));
            if i + 1 < n {
                t.push((i, i + 1, -1.0 / h));
                t.push((i + 1, i, -1.0 / h));
            }
        }
        let k = SparseMatrix::from_triplets(n, n, t);
        let (chi, nu) = solve_box_obstacle(&k, &b, 1e-12).unwrap();
        let r = k.mul_vec(&chi);
        for i in 0..n {
            prop_assert!((0.0..=1.0).contains(&chi[i]));
            prop_assert!((r[i] + nu[i] - b[i]).abs() < 1e-9);
            if chi[i] > 0.0 && chi[i] < 1.0 {
                prop_assert!(nu[i].abs() < 1e-9);
            } else if chi[i] == 0.0 {
                prop_assert!(nu[i] <= 1e-9);
            } else {
                prop_assert!(nu[i] >= -1e-9);
            }
        }
    }

    #[test]
    fn penalty_reaction_is_monotone(un in prop::collection::vec(-1.0f64..1.0, 1..10), kappa in 1.0f64..1e6) {
        let u: Vec<[f64; 2]> = un.iter().map(|&v| [0.3, -v]).collect();
        let chi = vec![0.0; u.len()];
        let r = contact_reaction(&u, &chi, [0.0, -1.0], kappa);
        for (i, &v) in un.iter().enumerate() {
            prop_assert!(r.eta_n[i] >= 0.0);
            prop_assert!((r.eta_n[i] - kappa * v.max(0.0)).abs() <= 1e-12 * kappa);
        }
        prop_assert!(dot(&r.eta_n, &un) >= 0.0);
    }
}
