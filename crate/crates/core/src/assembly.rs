//! P1 finite-element matrices on the body and on the contact line.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smallest_generalized_eigenvalue, SparseMatrix, SpdSolver, TripletBuilder};
use crate::mesh::{Marker, Mesh, Point, DIM};

/// Fourth-order tensor `a_{ijkh}` acting on 2×2 strains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticTensor {
    pub a: [[[[f64; DIM]; DIM]; DIM]; DIM],
}

impl ElasticTensor {
    /// Isotropic tensor `λ δ_ij δ_kh + μ (δ_ik δ_jh + δ_ih δ_jk)` (plane strain).
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut a = [[[[0.0; DIM]; DIM]; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for h in 0..DIM {
                        a[i][j][k][h] = lambda * d(i, j) * d(k, h) + mu * (d(i, k) * d(j, h) + d(i, h) * d(j, k));
                    }
                }
            }
        }
        Self { a }
    }

    /// `e : K : f`.
    pub fn energy(&self, e: &[[f64; DIM]; DIM], f: &[[f64; DIM]; DIM]) -> f64 {
        let mut s = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for h in 0..DIM {
                        s += e[i][j] * self.a[i][j][k][h] * f[k][h];
                    }
                }
            }
        }
        s
    }

    /// Sum of the "diagonal" moduli `a_1111 + a_2222 + 2 a_1212`.
    pub fn trace(&self) -> f64 {
        self.a[0][0][0][0] + self.a[1][1][1][1] + 2.0 * self.a[0][1][0][1]
    }

    /// Checks the major and minor symmetries and returns the ellipticity
    /// constant: the smallest eigenvalue of the tensor on an orthonormal basis
    /// of symmetric 2×2 matrices.
    pub fn ellipticity(&self, which: &'static str) -> Result<f64> {
        let scale = self.trace().abs().max(1e-300);
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for h in 0..DIM {
                        let v = self.a[i][j][k][h];
                        let worst = (v - self.a[j][i][k][h]).abs().max((v - self.a[k][h][i][j]).abs());
                        if !v.is_finite() || worst > 1e-12 * scale {
                            return Err(Error::EllipticityViolation {
                                which,
                                detail: format!("a_{}{}{}{} breaks symmetry", i + 1, j + 1, k + 1, h + 1),
                            });
                        }
                    }
                }
            }
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let basis = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], [[0.0, s], [s, 0.0]]];
        let q = Matrix3::from_fn(|r, c| self.energy(&basis[r], &basis[c]));
        let min = SymmetricEigen::new(q).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::EllipticityViolation {
                which,
                detail: format!("smallest modulus {min:.3e} is not positive"),
            });
        }
        Ok(min)
    }
}

/// Elasticity `K` and viscosity `K_v`, optionally overridden per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityTensors {
    pub elastic: ElasticTensor,
    pub viscous: ElasticTensor,
    pub cell_overrides: Vec<(usize, ElasticTensor, ElasticTensor)>,
}

impl ElasticityTensors {
    pub fn isotropic(lambda_e: f64, mu_e: f64, lambda_v: f64, mu_v: f64) -> Self {
        Self {
            elastic: ElasticTensor::isotropic(lambda_e, mu_e),
            viscous: ElasticTensor::isotropic(lambda_v, mu_v),
            cell_overrides: Vec::new(),
        }
    }

    fn at(&self, cell: usize) -> (&ElasticTensor, &ElasticTensor) {
        self.cell_overrides
            .iter()
            .rev()
            .find(|(c, _, _)| *c == cell)
            .map(|(_, k, kv)| (k, kv))
            .unwrap_or((&self.elastic, &self.viscous))
    }

    /// Ellipticity constants `(α₀, β₀)` over all tensors in use.
    pub fn validate(&self) -> Result<(f64, f64)> {
        let mut alpha = self.elastic.ellipticity("elastic")?;
        let mut beta = self.viscous.ellipticity("viscous")?;
        for (_, k, kv) in &self.cell_overrides {
            alpha = alpha.min(k.ellipticity("elastic")?);
            beta = beta.min(kv.ellipticity("viscous")?);
        }
        Ok((alpha, beta))
    }
}

/// Gradients of the three barycentric basis functions and the cell area.
pub fn p1_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let (q, r) = (p[(a + 1) % 3], p[(a + 2) % 3]);
        g[a] = [(q[1] - r[1]) / (2.0 * area), (r[0] - q[0]) / (2.0 * area)];
    }
    (g, area)
}

fn cell_points(mesh: &Mesh, c: usize) -> [Point; 3] {
    let v = mesh.cells()[c];
    [mesh.vertices()[v[0]], mesh.vertices()[v[1]], mesh.vertices()[v[2]]]
}

fn checked_gradients(mesh: &Mesh, c: usize) -> Result<([[f64; 2]; 3], f64)> {
    let (g, area) = p1_gradients(cell_points(mesh, c));
    if !(area > 0.0) {
        return Err(Error::DegenerateCell { cell: c, measure: area });
    }
    Ok((g, area))
}

/// Bulk mass, stiffness and lumped mass.
pub fn assemble_scalar(mesh: &Mesh) -> Result<(SparseMatrix, SparseMatrix, Vec<f64>)> {
    let n = mesh.num_vertices();
    let mut m = TripletBuilder::new(n, n);
    let mut s = TripletBuilder::new(n, n);
    let mut lumped = vec![0.0; n];
    for (c, cell) in mesh.cells().iter().enumerate() {
        let (g, area) = checked_gradients(mesh, c)?;
        for a in 0..3 {
            lumped[cell[a]] += area / 3.0;
            for b in 0..3 {
                let mass = if a == b { area / 6.0 } else { area / 12.0 };
                m.push(cell[a], cell[b], mass);
                s.push(cell[a], cell[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
            }
        }
    }
    Ok((m.build(), s.build(), lumped))
}

/// Mass, stiffness and lumped mass on the contact line, indexed by contact node.
pub fn assemble_contact_scalar(mesh: &Mesh) -> (SparseMatrix, SparseMatrix, Vec<f64>) {
    let nc = mesh.num_contact_nodes();
    let mut m = TripletBuilder::new(nc, nc);
    let mut s = TripletBuilder::new(nc, nc);
    let mut lumped = vec![0.0; nc];
    for (e, &[a, b]) in mesh.contact_cells().iter().enumerate() {
        let len = mesh.contact_cell_length(e);
        lumped[a] += 0.5 * len;
        lumped[b] += 0.5 * len;
        for (i, j, mv, sv) in [
            (a, a, len / 3.0, 1.0 / len),
            (b, b, len / 3.0, 1.0 / len),
            (a, b, len / 6.0, -1.0 / len),
            (b, a, len / 6.0, -1.0 / len),
        ] {
            m.push(i, j, mv);
            s.push(i, j, sv);
        }
    }
    (m.build(), s.build(), lumped)
}

/// `∫_{Γc} w φ_i φ_j` for the piecewise-linear interpolant of nodal weights `w`.
pub fn contact_weighted_mass(mesh: &Mesh, weights: &[f64]) -> SparseMatrix {
    let nc = mesh.num_contact_nodes();
    let mut m = TripletBuilder::new(nc, nc);
    for (e, &[a, b]) in mesh.contact_cells().iter().enumerate() {
        let len = mesh.contact_cell_length(e);
        let (wa, wb) = (weights[a], weights[b]);
        let off = len * (wa + wb) / 12.0;
        m.push(a, a, len * (3.0 * wa + wb) / 12.0);
        m.push(b, b, len * (wa + 3.0 * wb) / 12.0);
        m.push(a, b, off);
        m.push(b, a, off);
    }
    m.build()
}

/// Displacement degree of freedom of component `c` at vertex `v`.
#[inline]
pub fn dof(v: usize, c: usize) -> usize {
    DIM * v + c
}

/// Elastic and viscous stiffness on the full displacement space (no
/// boundary conditions applied).
pub fn assemble_elastic(mesh: &Mesh, tensors: &ElasticityTensors) -> Result<(SparseMatrix, SparseMatrix)> {
    tensors.validate()?;
    let nd = DIM * mesh.num_vertices();
    let mut a_mat = TripletBuilder::new(nd, nd);
    let mut b_mat = TripletBuilder::new(nd, nd);
    for (c, cell) in mesh.cells().iter().enumerate() {
        let (g, area) = checked_gradients(mesh, c)?;
        let (k, kv) = tensors.at(c);
        // strain of the basis field φ_a e_comp
        let strain = |a: usize, comp: usize| {
            let mut e = [[0.0; DIM]; DIM];
            for i in 0..DIM {
                for j in 0..DIM {
                    let mut v = 0.0;
                    if i == comp {
                        v += 0.5 * g[a][j];
                    }
                    if j == comp {
                        v += 0.5 * g[a][i];
                    }
                    e[i][j] = v;
                }
            }
            e
        };
        // local dof p ↔ (vertex p / DIM, component p % DIM); upper triangle mirrored
        for p in 0..3 * DIM {
            let ep = strain(p / DIM, p % DIM);
            let i = dof(cell[p / DIM], p % DIM);
            for q in p..3 * DIM {
                let eq = strain(q / DIM, q % DIM);
                let j = dof(cell[q / DIM], q % DIM);
                let (va, vb) = (area * k.energy(&ep, &eq), area * kv.energy(&ep, &eq));
                a_mat.push(i, j, va);
                b_mat.push(i, j, vb);
                if q != p {
                    a_mat.push(j, i, va);
                    b_mat.push(j, i, vb);
                }
            }
        }
    }
    Ok((a_mat.build(), b_mat.build()))
}

/// `D[i, dof(j,c)] = ∫ φ_i ∂_c φ_j`, so that `qᵀ D v = ∫ q div v`.
pub fn assemble_divergence(mesh: &Mesh) -> Result<SparseMatrix> {
    let n = mesh.num_vertices();
    let mut d = TripletBuilder::new(n, DIM * n);
    for (c, cell) in mesh.cells().iter().enumerate() {
        let (g, area) = checked_gradients(mesh, c)?;
        for a in 0..3 {
            for b in 0..3 {
                for comp in 0..DIM {
                    d.push(cell[a], dof(cell[b], comp), g[b][comp] * area / 3.0);
                }
            }
        }
    }
    Ok(d.build())
}

/// Restriction from bulk nodal values to contact nodal values.
pub fn assemble_trace(mesh: &Mesh) -> SparseMatrix {
    let mut t = TripletBuilder::new(mesh.num_contact_nodes(), mesh.num_vertices());
    for (k, &v) in mesh.trace_map().iter().enumerate() {
        t.push(k, v, 1.0);
    }
    t.build()
}

/// Displacement dofs fixed by the clamp on Γ₁.
pub fn clamped_dofs(mesh: &Mesh) -> Vec<bool> {
    let mut fixed = vec![false; DIM * mesh.num_vertices()];
    for &v in mesh.gamma1_vertices() {
        for c in 0..DIM {
            fixed[dof(v, c)] = true;
        }
    }
    fixed
}

/// Load vector `∫_Ω f·v + ∫_{Γ₂} g·v` for nodal samples of `f` and `g`,
/// integrated exactly for their piecewise-linear interpolants.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(Point) -> [f64; DIM], g: impl Fn(Point) -> [f64; DIM]) -> Vec<f64> {
    let n = mesh.num_vertices();
    let mut load = vec![0.0; DIM * n];
    let fv: Vec<[f64; DIM]> = mesh.vertices().iter().map(|&p| f(p)).collect();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let area = mesh.cell_area(c);
        for a in 0..3 {
            for b in 0..3 {
                let w = if a == b { area / 6.0 } else { area / 12.0 };
                for comp in 0..DIM {
                    load[dof(cell[a], comp)] += w * fv[cell[b]][comp];
                }
            }
        }
    }
    for facet in mesh.boundary_facets().iter().filter(|f| f.marker == Marker::Gamma2) {
        let [a, b] = facet.nodes;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let (ga, gb) = (g(pa), g(pb));
        for comp in 0..DIM {
            load[dof(a, comp)] += len * (2.0 * ga[comp] + gb[comp]) / 6.0;
            load[dof(b, comp)] += len * (ga[comp] + 2.0 * gb[comp]) / 6.0;
        }
    }
    load
}

/// All mesh-dependent matrices used by the time stepper.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub lumped: Vec<f64>,
    pub contact_mass: SparseMatrix,
    pub contact_stiffness: SparseMatrix,
    pub contact_lumped: Vec<f64>,
    /// Elastic form `a`, without boundary conditions.
    pub elastic: SparseMatrix,
    /// Viscous form `b`, without boundary conditions.
    pub viscous: SparseMatrix,
    pub div: SparseMatrix,
    pub trace: SparseMatrix,
    pub clamped: Vec<bool>,
    /// Ellipticity constants of the elastic and viscous tensors.
    pub alpha0: f64,
    pub beta0: f64,
}

impl SystemMatrices {
    pub fn assemble(mesh: &Mesh, tensors: &ElasticityTensors) -> Result<Self> {
        let (alpha0, beta0) = tensors.validate()?;
        let (mass, stiffness, lumped) = assemble_scalar(mesh)?;
        let (contact_mass, contact_stiffness, contact_lumped) = assemble_contact_scalar(mesh);
        let (elastic, viscous) = assemble_elastic(mesh, tensors)?;
        Ok(Self {
            mass,
            stiffness,
            lumped,
            contact_mass,
            contact_stiffness,
            contact_lumped,
            elastic,
            viscous,
            div: assemble_divergence(mesh)?,
            trace: assemble_trace(mesh),
            clamped: clamped_dofs(mesh),
            alpha0,
            beta0,
        })
    }

    /// Vector `H¹` Gram matrix `(M + S)` per displacement component.
    pub fn vector_h1_gram(&self) -> SparseMatrix {
        let h1 = SparseMatrix::lin_comb(&[(1.0, &self.mass), (1.0, &self.stiffness)]);
        let nd = DIM * h1.nrows();
        let mut g = TripletBuilder::new(nd, nd);
        for i in 0..h1.nrows() {
            for (j, v) in h1.row(i) {
                for c in 0..DIM {
                    g.push(dof(i, c), dof(j, c), v);
                }
            }
        }
        g.build()
    }

    /// Korn-type constants: smallest eigenvalues of `a` and `b` relative to the
    /// `H¹` norm on displacements vanishing on Γ₁.
    pub fn korn_constants(&self) -> Result<(f64, f64)> {
        let keep: Vec<bool> = self.clamped.iter().map(|f| !f).collect();
        let gram = restrict(&self.vector_h1_gram(), &keep);
        let ca = smallest_generalized_eigenvalue(&restrict(&self.elastic, &keep), &gram, 2000)?;
        let cb = smallest_generalized_eigenvalue(&restrict(&self.viscous, &keep), &gram, 2000)?;
        Ok((ca, cb))
    }

    /// Continuity constant of `a + b` in the `H¹` norm, by power iteration.
    pub fn continuity_constant(&self) -> Result<f64> {
        let keep: Vec<bool> = self.clamped.iter().map(|f| !f).collect();
        let gram = restrict(&self.vector_h1_gram(), &keep);
        let ab = restrict(
            &SparseMatrix::lin_comb(&[(1.0, &self.elastic), (1.0, &self.viscous)]),
            &keep,
        );
        let solver = SpdSolver::new(&gram, 1e-10)?;
        let mut x: Vec<f64> = (0..gram.nrows()).map(|i| 1.0 + ((i * 31) % 7) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let y = solver.solve(&ab.mul_vec(&x))?;
            let norm = gram.quad_form(&y).sqrt();
            x = y.iter().map(|v| v / norm).collect();
            let next = ab.quad_form(&x) / gram.quad_form(&x);
            let done = (next - lambda).abs() <= 1e-8 * next;
            lambda = next;
            if done {
                break;
            }
        }
        Ok(lambda)
    }
}

/// Principal submatrix on the flagged rows and columns.
pub fn restrict(m: &SparseMatrix, keep: &[bool]) -> SparseMatrix {
    let mut index = vec![usize::MAX; keep.len()];
    let mut count = 0;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            index[i] = count;
            count += 1;
        }
    }
    let mut out = TripletBuilder::new(count, count);
    for i in 0..m.nrows() {
        if !keep[i] {
            continue;
        }
        for (j, v) in m.row(i) {
            if keep[j] {
                out.push(index[i], index[j], v);
            }
        }
    }
    out.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rect_mesh, Rect, SideMarkers};

    fn square(n: usize) -> Mesh {
        rect_mesh(n, n, Rect::unit(), SideMarkers::default()).unwrap()
    }

    fn nodal(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
        mesh.vertices().iter().map(|&p| f(p)).collect()
    }

    fn vector_field(mesh: &Mesh, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        mesh.vertices().iter().flat_map(|&p| f(p)).collect()
    }

    #[test]
    fn scalar_matrices() {
        let m1 = square(1);
        let (m, s, l) = assemble_scalar(&m1).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-15);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let mesh = square(5);
        let (m, s5, l) = assemble_scalar(&mesh).unwrap();
        assert!(s5.row_sums().iter().all(|r| r.abs() < 1e-13));
        let x = nodal(&mesh, |p| p[0]);
        assert!((s5.quad_form(&x) - 1.0).abs() < 1e-13);
        for (r, li) in m.row_sums().iter().zip(&l) {
            assert!((r - li).abs() < 1e-15);
        }
        assert_eq!(s.max_asymmetry(), 0.0);
    }

    #[test]
    fn contact_matrices() {
        let mesh = square(4);
        let (mc, sc, lc) = assemble_contact_scalar(&mesh);
        assert!((mc.total() - 1.0).abs() < 1e-15);
        assert!((lc.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(sc.row_sums().iter().all(|r| r.abs() < 1e-12));
        let ones = vec![1.0; mesh.num_contact_nodes()];
        assert_eq!(contact_weighted_mass(&mesh, &ones).to_dense(), mc.to_dense());
        let zero = contact_weighted_mass(&mesh, &vec![0.0; mesh.num_contact_nodes()]);
        assert_eq!(zero.total(), 0.0);
    }

    #[test]
    fn weighted_mass_is_exact_for_linear_weights() {
        // ∫_0^1 x·1·1 dx = 1/2 and ∫ x·x·x = 1/4 on the bottom edge.
        let mesh = square(6);
        let w: Vec<f64> = (0..mesh.num_contact_nodes())
            .map(|k| mesh.contact_position(k)[0])
            .collect();
        let m = contact_weighted_mass(&mesh, &w);
        let ones = vec![1.0; w.len()];
        assert!((m.bilinear(&ones, &ones) - 0.5).abs() < 1e-14);
        assert!((m.bilinear(&w, &w) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn elastic_energy() {
        let mesh = square(3);
        let (le, me) = (2.0, 3.0);
        let t = ElasticityTensors::isotropic(le, me, 0.5, 0.25);
        let (a, b) = assemble_elastic(&mesh, &t).unwrap();
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(b.max_asymmetry(), 0.0);
        let translation = vector_field(&mesh, |_| [0.3, -1.2]);
        assert!(a.quad_form(&translation).abs() < 1e-12);
        let rotation = vector_field(&mesh, |p| [-p[1], p[0]]);
        assert!(a.quad_form(&rotation).abs() < 1e-12);
        let stretch = vector_field(&mesh, |p| [p[0], 0.0]);
        assert!((a.quad_form(&stretch) - (le + 2.0 * me)).abs() < 1e-12);
    }

    #[test]
    fn patch_test() {
        // uniform strain e = [[a, c],[c, b]] gives energy e:K:e·|Ω|
        let mesh = square(4);
        let t = ElasticityTensors::isotropic(1.5, 0.7, 0.1, 0.1);
        let (a, _) = assemble_elastic(&mesh, &t).unwrap();
        let (ea, eb, ec) = (0.2, -0.1, 0.05);
        let u = vector_field(&mesh, |p| [ea * p[0] + ec * p[1], ec * p[0] + eb * p[1]]);
        let e = [[ea, ec], [ec, eb]];
        assert!((a.quad_form(&u) - t.elastic.energy(&e, &e)).abs() < 1e-13);
    }

    #[test]
    fn ellipticity_checks() {
        assert!(ElasticTensor::isotropic(1.0, 1.0).ellipticity("elastic").is_ok());
        let err = ElasticTensor::isotropic(1.0, 0.0).ellipticity("elastic");
        assert!(matches!(err, Err(Error::EllipticityViolation { .. })));
        let mut broken = ElasticTensor::isotropic(1.0, 1.0);
        broken.a[0][0][1][1] = 5.0;
        assert!(broken.ellipticity("viscous").is_err());
        // plane strain: elliptic iff μ > 0 and λ + μ > 0
        assert!(ElasticTensor::isotropic(-0.9, 1.0).ellipticity("elastic").is_ok());
        assert!(ElasticTensor::isotropic(-1.1, 1.0).ellipticity("elastic").is_err());
    }

    #[test]
    fn per_cell_override() {
        let mesh = square(2);
        let mut t = ElasticityTensors::isotropic(1.0, 1.0, 1.0, 1.0);
        let stiff = ElasticTensor::isotropic(10.0, 10.0);
        for c in 0..mesh.cells().len() {
            t.cell_overrides.push((c, stiff, stiff));
        }
        let (a, _) = assemble_elastic(&mesh, &t).unwrap();
        let stretch = vector_field(&mesh, |p| [p[0], 0.0]);
        assert!((a.quad_form(&stretch) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_pairing() {
        let mesh = square(3);
        let d = assemble_divergence(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        let v = vector_field(&mesh, |p| [p[0], 0.0]);
        assert!((d.bilinear(&ones, &v) - 1.0).abs() < 1e-14);
        let q = nodal(&mesh, |p| p[1]);
        let v = vector_field(&mesh, |p| [0.0, p[1]]);
        assert!((d.bilinear(&q, &v) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn loads() {
        let mesh = square(3);
        let zero = assemble_load(&mesh, |_| [0.0, 0.0], |_| [0.0, 0.0]);
        assert!(zero.iter().all(|&v| v == 0.0));
        let body = assemble_load(&mesh, |_| [1.0, 0.0], |_| [0.0, 0.0]);
        let v = vector_field(&mesh, |_| [1.0, 0.0]);
        assert!((crate::linalg::dot(&body, &v) - 1.0).abs() < 1e-14);
        // Γ₂ consists of the two unit-length sides
        let traction = assemble_load(&mesh, |_| [0.0, 0.0], |_| [0.0, -1.0]);
        let v = vector_field(&mesh, |_| [0.0, 1.0]);
        assert!((crate::linalg::dot(&traction, &v) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn korn_constants_are_positive() {
        let mesh = square(4);
        let t = ElasticityTensors::isotropic(1.0, 1.0, 0.5, 0.5);
        let sys = SystemMatrices::assemble(&mesh, &t).unwrap();
        let (ca, cb) = sys.korn_constants().unwrap();
        assert!(ca > 0.0 && cb > 0.0);
        assert!((cb - 0.5 * ca).abs() < 1e-6 * ca);
        assert!(sys.continuity_constant().unwrap() >= ca + cb);
    }

    #[test]
    fn trace_restricts() {
        let mesh = square(2);
        let t = assemble_trace(&mesh);
        let x = nodal(&mesh, |p| p[0] + 10.0 * p[1]);
        assert_eq!(t.mul_vec(&x), vec![0.0, 0.5, 1.0]);
    }
}
