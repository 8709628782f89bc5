//! Total-Lagrangian nonlinear elasticity on the undeformed configuration.
//!
//! St. Venant-Kirchhoff material under plane strain, linear triangles with
//! one-point quadrature (exact for constant-strain elements). Dirichlet
//! conditions are imposed by row/column elimination so the adjoint system is
//! the exact transpose of the reduced tangent.

use crate::error::{FsiError, Result};
use crate::meshkit::Mesh2D;
use crate::numkit::{norm2, DirectSolver, SparseMatrix};

/// St. Venant-Kirchhoff material parameters.
#[derive(Debug, Clone, Copy)]
pub struct MaterialStVK {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

impl MaterialStVK {
    pub fn validate(&self) -> Result<()> {
        if self.youngs_modulus <= 0.0 {
            return Err(FsiError::Config(format!(
                "Young's modulus must be positive, got {}",
                self.youngs_modulus
            )));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(FsiError::Config(format!(
                "Poisson ratio must be in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    /// Plane-strain Lame constants.
    pub fn lame(&self) -> (f64, f64) {
        let e = self.youngs_modulus;
        let nu = self.poisson_ratio;
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        (lambda, mu)
    }
}

/// Prescribed nodal displacements (typically zero on clamped tags).
#[derive(Debug, Clone, Default)]
pub struct DirichletBc {
    pub nodes: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

impl DirichletBc {
    pub fn clamped(mesh: &Mesh2D, tags: &[String]) -> Result<Self> {
        let nodes = mesh.tags_nodes(tags)?;
        let values = vec![[0.0, 0.0]; nodes.len()];
        Ok(Self { nodes, values })
    }
}

/// Converged structural state.
#[derive(Debug, Clone)]
pub struct StructureState {
    pub u: Vec<[f64; 2]>,
    pub f_int: Vec<[f64; 2]>,
    pub f_ext: Vec<[f64; 2]>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Constant per-element data in the undeformed configuration.
#[derive(Debug, Clone, Copy)]
struct ElementGeometry {
    /// shape-function gradients dN_a/dX
    grad: [[f64; 2]; 3],
    area: f64,
}

fn element_geometry(p: [[f64; 2]; 3]) -> Result<ElementGeometry> {
    let d1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let d2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let det = d1[0] * d2[1] - d2[0] * d1[1];
    if det <= 0.0 {
        return Err(FsiError::NonphysicalState(format!(
            "element with non-positive undeformed area {det:.3e}"
        )));
    }
    // gradN_a solves gradN_1 . d1 = 1, gradN_1 . d2 = 0 (and cyclic):
    // rows of the inverse edge matrix
    let g1 = [d2[1] / det, -d2[0] / det];
    let g2 = [-d1[1] / det, d1[0] / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    Ok(ElementGeometry {
        grad: [g0, g1, g2],
        area: 0.5 * det,
    })
}

/// Displacement gradient Z = sum_a u_a (x) gradN_a, so F = I + Z.
fn displacement_gradient(geo: &ElementGeometry, u: &[[f64; 2]; 3]) -> [[f64; 2]; 2] {
    let mut z = [[0.0; 2]; 2];
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] += u[a][i] * geo.grad[a][j];
            }
        }
    }
    z
}

fn deformation_gradient(z: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[1.0 + z[0][0], z[0][1]], [z[1][0], 1.0 + z[1][1]]]
}

/// StVK second Piola-Kirchhoff stress, S = lambda tr(E) I + 2 mu E with the
/// Green-Lagrange strain written as E = (Z + Z^T + Z^T Z) / 2. The
/// displacement-gradient form avoids the F^T F - I cancellation at small
/// strains, which would otherwise floor Newton residuals at eps * E_modulus.
fn pk2_stress(z: &[[f64; 2]; 2], lambda: f64, mu: f64) -> [[f64; 2]; 2] {
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut c = z[i][j] + z[j][i];
            for k in 0..2 {
                c += z[k][i] * z[k][j];
            }
            e[i][j] = 0.5 * c;
        }
    }
    let tr = e[0][0] + e[1][1];
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = 2.0 * mu * e[i][j] + if i == j { lambda * tr } else { 0.0 };
        }
    }
    s
}

/// Element internal force, f_a = A * F S gradN_a.
fn element_internal_force(
    geo: &ElementGeometry,
    u: &[[f64; 2]; 3],
    lambda: f64,
    mu: f64,
) -> Result<[[f64; 2]; 3]> {
    let z = displacement_gradient(geo, u);
    let f = deformation_gradient(&z);
    let detf = f[0][0] * f[1][1] - f[0][1] * f[1][0];
    if detf <= 0.0 {
        return Err(FsiError::NonphysicalState(format!(
            "inverted deformed element, det F = {detf:.3e}"
        )));
    }
    let s = pk2_stress(&z, lambda, mu);
    let mut fs = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                fs[i][j] += f[i][k] * s[k][j];
            }
        }
    }
    let mut out = [[0.0; 2]; 3];
    for a in 0..3 {
        for i in 0..2 {
            out[a][i] = geo.area * (fs[i][0] * geo.grad[a][0] + fs[i][1] * geo.grad[a][1]);
        }
    }
    Ok(out)
}

/// Consistent element tangent (material + geometric stiffness), 6x6.
fn element_tangent(
    geo: &ElementGeometry,
    u: &[[f64; 2]; 3],
    lambda: f64,
    mu: f64,
) -> [[f64; 6]; 6] {
    let z = displacement_gradient(geo, u);
    let f = deformation_gradient(&z);
    let s = pk2_stress(&z, lambda, mu);
    // h_a = F gradN_a
    let mut h = [[0.0; 2]; 3];
    for a in 0..3 {
        for i in 0..2 {
            h[a][i] = f[i][0] * geo.grad[a][0] + f[i][1] * geo.grad[a][1];
        }
    }
    let mut fft = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            fft[i][j] = f[i][0] * f[j][0] + f[i][1] * f[j][1];
        }
    }
    let mut k = [[0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            // geometric part: gradN_a . S gradN_b
            let mut gsg = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    gsg += geo.grad[a][i] * s[i][j] * geo.grad[b][j];
                }
            }
            let gg = geo.grad[a][0] * geo.grad[b][0] + geo.grad[a][1] * geo.grad[b][1];
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = lambda * h[a][i] * h[b][j] + mu * h[b][i] * h[a][j];
                    v += mu * fft[i][j] * gg;
                    if i == j {
                        v += gsg;
                    }
                    k[2 * a + i][2 * b + j] = geo.area * v;
                }
            }
        }
    }
    k
}

/// Structural solver bound to one mesh, material and boundary conditions.
pub struct StructureModel<'m> {
    mesh: &'m Mesh2D,
    material: MaterialStVK,
    bc: DirichletBc,
    geo: Vec<ElementGeometry>,
    /// dof -> index into the free system, None when constrained
    free_index: Vec<Option<usize>>,
    n_free: usize,
    pub newton_tol: f64,
    pub newton_abs_tol: f64,
    pub max_newton: usize,
    /// semi-analytic perturbation step factor (times local edge length)
    pub fd_step_factor: f64,
}

impl<'m> StructureModel<'m> {
    pub fn new(mesh: &'m Mesh2D, material: MaterialStVK, bc: DirichletBc) -> Result<Self> {
        material.validate()?;
        if bc.nodes.is_empty() {
            return Err(FsiError::Config(
                "structure needs a nonempty Dirichlet set (rigid modes otherwise)".into(),
            ));
        }
        let mut geo = Vec::with_capacity(mesh.triangles().len());
        for t in mesh.triangles() {
            geo.push(element_geometry([
                mesh.nodes()[t[0]],
                mesh.nodes()[t[1]],
                mesh.nodes()[t[2]],
            ])?);
        }
        let n = mesh.num_nodes();
        let mut free_index = vec![None; 2 * n];
        let mut constrained = vec![false; n];
        for &node in &bc.nodes {
            constrained[node] = true;
        }
        let mut n_free = 0;
        for node in 0..n {
            if !constrained[node] {
                for d in 0..2 {
                    free_index[2 * node + d] = Some(n_free);
                    n_free += 1;
                }
            }
        }
        Ok(Self {
            mesh,
            material,
            bc,
            geo,
            free_index,
            n_free,
            newton_tol: 1e-10,
            newton_abs_tol: 1e-12,
            max_newton: 60,
            fd_step_factor: 1e-6,
        })
    }

    pub fn mesh(&self) -> &Mesh2D {
        self.mesh
    }

    pub fn num_free(&self) -> usize {
        self.n_free
    }

    fn local_u(&self, u: &[[f64; 2]], e: usize) -> [[f64; 2]; 3] {
        let t = self.mesh.triangles()[e];
        [u[t[0]], u[t[1]], u[t[2]]]
    }

    /// Internal nodal forces f_int(u, X).
    pub fn internal_forces(&self, u: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        let (lambda, mu) = self.material.lame();
        let mut f = vec![[0.0; 2]; self.mesh.num_nodes()];
        for (e, t) in self.mesh.triangles().iter().enumerate() {
            let fe = element_internal_force(&self.geo[e], &self.local_u(u, e), lambda, mu)
                .map_err(|err| match err {
                    FsiError::NonphysicalState(msg) => {
                        FsiError::NonphysicalState(format!("element {e}: {msg}"))
                    }
                    other => other,
                })?;
            for a in 0..3 {
                f[t[a]][0] += fe[a][0];
                f[t[a]][1] += fe[a][1];
            }
        }
        Ok(f)
    }

    /// Residual r = f_ext - f_int on all dofs.
    pub fn residual(&self, u: &[[f64; 2]], f_ext: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        let f_int = self.internal_forces(u)?;
        Ok(f_ext
            .iter()
            .zip(&f_int)
            .map(|(e, i)| [e[0] - i[0], e[1] - i[1]])
            .collect())
    }

    /// Consistent tangent dF_int/du on all dofs (2n x 2n).
    pub fn tangent(&self, u: &[[f64; 2]]) -> Result<SparseMatrix> {
        let (lambda, mu) = self.material.lame();
        let n = self.mesh.num_nodes();
        let mut trips = Vec::with_capacity(36 * self.mesh.triangles().len());
        for (e, t) in self.mesh.triangles().iter().enumerate() {
            let ke = element_tangent(&self.geo[e], &self.local_u(u, e), lambda, mu);
            for a in 0..3 {
                for i in 0..2 {
                    for b in 0..3 {
                        for j in 0..2 {
                            trips.push((2 * t[a] + i, 2 * t[b] + j, ke[2 * a + i][2 * b + j]));
                        }
                    }
                }
            }
        }
        SparseMatrix::from_triplets(2 * n, 2 * n, &trips)
    }

    /// Tangent reduced to the free dofs.
    fn tangent_reduced(&self, u: &[[f64; 2]]) -> Result<SparseMatrix> {
        let (lambda, mu) = self.material.lame();
        let mut trips = Vec::with_capacity(36 * self.mesh.triangles().len());
        for (e, t) in self.mesh.triangles().iter().enumerate() {
            let ke = element_tangent(&self.geo[e], &self.local_u(u, e), lambda, mu);
            for a in 0..3 {
                for i in 0..2 {
                    let Some(ra) = self.free_index[2 * t[a] + i] else {
                        continue;
                    };
                    for b in 0..3 {
                        for j in 0..2 {
                            if let Some(cb) = self.free_index[2 * t[b] + j] {
                                trips.push((ra, cb, ke[2 * a + i][2 * b + j]));
                            }
                        }
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.n_free, self.n_free, &trips)
    }

    fn gather_free(&self, full: &[[f64; 2]]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_free];
        for node in 0..full.len() {
            for d in 0..2 {
                if let Some(k) = self.free_index[2 * node + d] {
                    v[k] = full[node][d];
                }
            }
        }
        v
    }

    fn apply_bc(&self, u: &mut [[f64; 2]]) {
        for (&node, val) in self.bc.nodes.iter().zip(&self.bc.values) {
            u[node] = *val;
        }
    }

    /// Newton solve for the equilibrium displacement under nodal loads.
    /// Falls back to incremental load stepping when a cold start leaves
    /// Newton's basin of attraction.
    pub fn solve(&self, f_ext: &[[f64; 2]]) -> Result<StructureState> {
        self.solve_warm(f_ext, None)
    }

    /// Newton solve starting from a previous displacement field.
    pub fn solve_warm(
        &self,
        f_ext: &[[f64; 2]],
        initial: Option<&[[f64; 2]]>,
    ) -> Result<StructureState> {
        match self.newton(f_ext, initial) {
            Ok(state) => Ok(state),
            Err(FsiError::NewtonDiverged { .. }) => {
                let mut warm = initial.map(|u| u.to_vec());
                for steps in [4usize, 16] {
                    let mut ok = true;
                    for s in 1..=steps {
                        let frac = s as f64 / steps as f64;
                        let f_s: Vec<[f64; 2]> =
                            f_ext.iter().map(|f| [frac * f[0], frac * f[1]]).collect();
                        match self.newton(&f_s, warm.as_deref()) {
                            Ok(st) => warm = Some(st.u),
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        return self.newton(f_ext, warm.as_deref());
                    }
                }
                self.newton(f_ext, warm.as_deref())
            }
            Err(e) => Err(e),
        }
    }

    fn newton(
        &self,
        f_ext: &[[f64; 2]],
        initial: Option<&[[f64; 2]]>,
    ) -> Result<StructureState> {
        let n = self.mesh.num_nodes();
        if f_ext.len() != n {
            return Err(FsiError::Dimension(format!(
                "f_ext length {} != node count {n}",
                f_ext.len()
            )));
        }
        let mut u = match initial {
            Some(u0) => u0.to_vec(),
            None => vec![[0.0; 2]; n],
        };
        self.apply_bc(&mut u);
        let fext_norm = norm2(&self.gather_free(f_ext));
        let tol = (self.newton_tol * fext_norm).max(self.newton_abs_tol);

        let mut history = Vec::new();
        let mut iterations = 0;
        loop {
            let r = self.residual(&u, f_ext)?;
            let r_free = self.gather_free(&r);
            let rn = norm2(&r_free);
            history.push(rn);
            if rn <= tol {
                let f_int = self.internal_forces(&u)?;
                return Ok(StructureState {
                    u,
                    f_int,
                    f_ext: f_ext.to_vec(),
                    iterations,
                    residual_history: history,
                });
            }
            if iterations >= self.max_newton {
                return Err(FsiError::NewtonDiverged {
                    iterations,
                    history,
                });
            }
            let k = self.tangent_reduced(&u)?;
            let du = DirectSolver::new(&k)?.solve(&r_free)?;
            // backtracking on the residual norm
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let mut trial = u.clone();
                for node in 0..n {
                    for d in 0..2 {
                        if let Some(kf) = self.free_index[2 * node + d] {
                            trial[node][d] += alpha * du[kf];
                        }
                    }
                }
                match self.residual(&trial, f_ext) {
                    Ok(rt) => {
                        let rtn = norm2(&self.gather_free(&rt));
                        if rtn < rn || rtn <= tol {
                            u = trial;
                            accepted = true;
                            break;
                        }
                    }
                    Err(FsiError::NonphysicalState(_)) => {}
                    Err(e) => return Err(e),
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(FsiError::NewtonDiverged {
                    iterations,
                    history,
                });
            }
            iterations += 1;
        }
    }

    /// Adjoint displacements: K^T psi = (dJ/du)^T on the free dofs, zero on
    /// constrained dofs. K is symmetric for StVK so the transpose solve is a
    /// plain solve of the same reduced tangent.
    pub fn adjoint(&self, state: &StructureState, djdu: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        let k = self.tangent_reduced(&state.u)?;
        let rhs = self.gather_free(djdu);
        let psi_free = DirectSolver::new(&k)?.solve_transpose(&rhs)?;
        let mut psi = vec![[0.0; 2]; self.mesh.num_nodes()];
        for node in 0..psi.len() {
            for d in 0..2 {
                if let Some(kf) = self.free_index[2 * node + d] {
                    psi[node][d] = psi_free[kf];
                }
            }
        }
        Ok(psi)
    }

    /// Partial shape derivative of the structural Lagrangian w.r.t. the
    /// undeformed coordinates: central difference of psi^T (f_ext - f_int)
    /// with state, adjoint and external loads frozen, plus any explicit
    /// objective term. f_ext carries no X dependence so only -psi^T f_int
    /// varies.
    pub fn shape_sens(
        &self,
        state: &StructureState,
        psi: &[[f64; 2]],
        djdx: Option<&[[f64; 2]]>,
    ) -> Result<Vec<[f64; 2]>> {
        let (lambda, mu) = self.material.lame();
        let n = self.mesh.num_nodes();
        let mut sens = vec![[0.0; 2]; n];
        for node in 0..n {
            let h = self.fd_step_factor * self.mesh.local_edge_length(node);
            for d in 0..2 {
                let mut vals = [0.0f64; 2];
                for (side, sign) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
                    let mut acc = 0.0;
                    for &e in self.mesh.elements_of_node(node) {
                        let t = self.mesh.triangles()[e];
                        let mut p = [
                            self.mesh.nodes()[t[0]],
                            self.mesh.nodes()[t[1]],
                            self.mesh.nodes()[t[2]],
                        ];
                        for (a, &tn) in t.iter().enumerate() {
                            if tn == node {
                                p[a][d] += sign * h;
                            }
                        }
                        let geo = element_geometry(p).map_err(|_| {
                            FsiError::Perturbation(format!(
                                "perturbation step {h:.3e} collapses element {e} at node {node}"
                            ))
                        })?;
                        let ue = self.local_u(&state.u, e);
                        let fe = element_internal_force(&geo, &ue, lambda, mu)?;
                        for a in 0..3 {
                            acc -= psi[t[a]][0] * fe[a][0] + psi[t[a]][1] * fe[a][1];
                        }
                    }
                    vals[side] = acc;
                }
                sens[node][d] = (vals[0] - vals[1]) / (2.0 * h);
                if let Some(g) = djdx {
                    sens[node][d] += g[node][d];
                }
            }
        }
        Ok(sens)
    }

    pub fn is_constrained(&self, node: usize) -> bool {
        self.free_index[2 * node].is_none()
    }
}
