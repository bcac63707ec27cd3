//! P1 finite elements for the Laplacian on a [`TriangleMesh`].
//!
//! Eigenfunctions are normalized in `L²(μ)` with `dμ = dx / |Ω|`, so the
//! Neumann ground state is the constant 1 and the heat kernel expansion
//! `Σ e^{-λ t} ψ(x) ψ(y)` is the density of the heat semigroup with respect
//! to `μ`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeshLocator, Point, Polygon, TriangleMesh};
use crate::linalg::{dense_generalized_eigen, lanczos_shift_invert_deflated, LanczosOptions, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }

    /// Shift used by the shift-invert iteration.
    pub fn shift(self) -> f64 {
        match self {
            BoundaryCondition::Dirichlet => 0.0,
            BoundaryCondition::Neumann => -1e-8,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "n" => Ok(BoundaryCondition::Neumann),
            _ => Err(Error::InvalidArgument(format!("unknown boundary condition `{s}`"))),
        }
    }
}

/// Mapping between mesh vertices and unknowns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DofMap {
    pub vertex_to_dof: Vec<Option<usize>>,
    pub dof_to_vertex: Vec<usize>,
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        self.dof_to_vertex.len()
    }

    /// Extends a dof vector to all vertices with zeros on eliminated ones.
    pub fn extend(&self, x: &[f64]) -> Vec<f64> {
        self.vertex_to_dof
            .iter()
            .map(|d| d.map_or(0.0, |i| x[i]))
            .collect()
    }
}

/// Stiffness and consistent mass matrices over the free dofs.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub bc: BoundaryCondition,
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub dofs: DofMap,
    /// `|Ω|`.
    pub area: f64,
    /// `∫ φ_v dx` for every vertex hat function.
    pub vertex_mass: Vec<f64>,
}

/// Element stiffness and mass matrices of a P1 triangle.
pub fn element_matrices(p: [Point; 3]) -> Result<([[f64; 3]; 3], [[f64; 3]; 3], f64)> {
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    if !(area > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "triangle with non-positive area {area:e}"
        )));
    }
    // ∇λ_i = (y_j - y_k, x_k - x_j) / 2A with (i, j, k) cyclic.
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [
            (p[j][1] - p[k][1]) / (2.0 * area),
            (p[k][0] - p[j][0]) / (2.0 * area),
        ];
    }
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    Ok((ke, me, area))
}

/// Assembles P1 stiffness and mass matrices. Dirichlet conditions eliminate
/// boundary vertices; Neumann keeps every vertex.
pub fn assemble(mesh: &TriangleMesh, bc: BoundaryCondition) -> Result<Assembly> {
    let nv = mesh.n_vertices();
    let mut vertex_to_dof = vec![None; nv];
    let mut dof_to_vertex = Vec::with_capacity(nv);
    for v in 0..nv {
        if bc == BoundaryCondition::Neumann || !mesh.boundary[v] {
            vertex_to_dof[v] = Some(dof_to_vertex.len());
            dof_to_vertex.push(v);
        }
    }
    if dof_to_vertex.is_empty() {
        return Err(Error::DegenerateGeometry("mesh has no free vertices".into()));
    }
    let elements: Vec<([[f64; 3]; 3], [[f64; 3]; 3], f64)> = mesh
        .triangles
        .par_iter()
        .map(|t| element_matrices(t.map(|v| mesh.vertices[v])))
        .collect::<Result<_>>()?;
    let mut kt = Vec::with_capacity(9 * elements.len());
    let mut mt = Vec::with_capacity(9 * elements.len());
    let mut vertex_mass = vec![0.0; nv];
    let mut area = 0.0;
    for (t, (ke, me, a)) in mesh.triangles.iter().zip(&elements) {
        area += a;
        for i in 0..3 {
            vertex_mass[t[i]] += a / 3.0;
            let Some(di) = vertex_to_dof[t[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = vertex_to_dof[t[j]] else { continue };
                kt.push((di, dj, ke[i][j]));
                mt.push((di, dj, me[i][j]));
            }
        }
    }
    let n = dof_to_vertex.len();
    Ok(Assembly {
        bc,
        stiffness: SparseMatrix::from_triplets(n, &kt),
        mass: SparseMatrix::from_triplets(n, &mt),
        dofs: DofMap {
            vertex_to_dof,
            dof_to_vertex,
        },
        area,
        vertex_mass,
    })
}

/// Laplace eigenpairs under one boundary condition, `L²(μ)`-orthonormal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenBasis {
    pub bc: BoundaryCondition,
    /// Nondecreasing.
    pub lambdas: Vec<f64>,
    /// One coefficient vector per mode over all mesh vertices.
    pub psis: Vec<Vec<f64>>,
    pub mesh_ref: String,
    /// `|Ω|`.
    pub measure: f64,
    /// `⟨ψ_n, 1⟩_μ`.
    pub means: Vec<f64>,
    /// `‖K ψ - λ M ψ‖ / ‖M ψ‖` per mode.
    pub residuals: Vec<f64>,
    /// Number of free dofs; the basis is complete when it has this many modes.
    pub n_dofs: usize,
}

impl EigenBasis {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// True when every discrete mode is present, so expansions are exact for
    /// the discrete operator.
    pub fn is_complete(&self) -> bool {
        self.n_modes() == self.n_dofs
    }

    /// Eigenvalue list as CSV (`mode,lambda,residual`).
    pub fn eigenvalue_csv(&self) -> String {
        let mut s = String::from("mode,lambda,residual\n");
        for (i, (l, r)) in self.lambdas.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{i},{l:.12e},{r:.3e}\n"));
        }
        s
    }

    /// Heat kernel `H(x, x, t)` at every vertex.
    pub fn heat_diagonal(&self, t: f64) -> Vec<f64> {
        let nv = self.psis.first().map_or(0, Vec::len);
        let weights: Vec<f64> = self.lambdas.iter().map(|l| (-l * t).exp()).collect();
        (0..nv)
            .into_par_iter()
            .map(|v| {
                self.psis
                    .iter()
                    .zip(&weights)
                    .map(|(p, w)| w * p[v] * p[v])
                    .sum()
            })
            .collect()
    }

    /// `sup_x Σ_n ψ_n(x)²` over vertices.
    pub fn sup_square_sum(&self) -> f64 {
        self.heat_diagonal(0.0).into_iter().fold(0.0, f64::max)
    }

    /// Tail bound `e^{-λ_last t} sup_x Σ ψ_n(x)²` for the truncated expansion;
    /// zero for a complete basis.
    pub fn tail_bound(&self, t: f64) -> f64 {
        if self.is_complete() {
            return 0.0;
        }
        let last = *self.lambdas.last().unwrap_or(&0.0);
        (-last * t).exp() * self.sup_square_sum()
    }

    /// Heat kernel `H(x, y, t)` from mode values at two points.
    pub fn heat_kernel(&self, psi_x: &[f64], psi_y: &[f64], t: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(psi_x.iter().zip(psi_y))
            .map(|(l, (a, b))| (-l * t).exp() * a * b)
            .sum()
    }
}

/// Identifier for a mesh used in exported bases.
pub fn mesh_ref(polygon: &Polygon, mesh: &TriangleMesh) -> String {
    format!(
        "{}/depth{}/v{}/t{}",
        polygon.id,
        mesh.depth,
        mesh.n_vertices(),
        mesh.n_triangles()
    )
}

/// Above this many dofs the dense route is never taken.
pub const DENSE_PENCIL_LIMIT: usize = 4000;

/// Smallest `n_modes` generalized eigenpairs of the assembled pencil. Requests
/// for a third or more of the spectrum go through a dense reduction.
pub fn solve_modes(assembly: &Assembly, n_modes: usize, tol: f64, mesh_ref: &str) -> Result<EigenBasis> {
    let n = assembly.dofs.n_dofs();
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidArgument(format!(
            "n_modes = {n_modes} but the problem has {n} dofs"
        )));
    }
    let opts = LanczosOptions {
        tol: 1e-12,
        ..LanczosOptions::default()
    };
    // The Neumann constant mode is known exactly.
    let known = match assembly.bc {
        BoundaryCondition::Neumann => vec![vec![1.0; n]],
        BoundaryCondition::Dirichlet => Vec::new(),
    };
    let pairs = if n <= DENSE_PENCIL_LIMIT && 3 * n_modes >= n {
        dense_generalized_eigen(&assembly.stiffness, &assembly.mass, n_modes, tol)?
    } else {
        lanczos_shift_invert_deflated(
            &assembly.stiffness,
            &assembly.mass,
            assembly.bc.shift(),
            n_modes,
            tol,
            opts,
            &known,
        )?
    };
    let scale = assembly.area.sqrt();
    let mut psis = Vec::with_capacity(n_modes);
    let mut means = Vec::with_capacity(n_modes);
    for x in &pairs.vectors {
        let mut full = assembly.dofs.extend(x);
        full.iter_mut().for_each(|v| *v *= scale);
        let mut mean: f64 = full
            .iter()
            .zip(&assembly.vertex_mass)
            .map(|(p, m)| p * m)
            .sum::<f64>()
            / assembly.area;
        // Deterministic sign: positive mean, else positive largest entry.
        let flip = if mean.abs() > 1e-8 {
            mean < 0.0
        } else {
            let k = full
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .map_or(0, |(k, _)| k);
            full[k] < 0.0
        };
        if flip {
            full.iter_mut().for_each(|v| *v = -*v);
            mean = -mean;
        }
        psis.push(full);
        means.push(mean);
    }
    let mut lambdas = pairs.values;
    if assembly.bc == BoundaryCondition::Neumann {
        // The constant mode is exact up to the factorization error.
        if let Some(l0) = lambdas.first_mut() {
            if l0.abs() < 1e-9 {
                *l0 = l0.max(0.0);
            }
        }
    }
    Ok(EigenBasis {
        bc: assembly.bc,
        lambdas,
        psis,
        mesh_ref: mesh_ref.to_string(),
        measure: assembly.area,
        means,
        residuals: pairs.residuals,
        n_dofs: n,
    })
}

/// Number of modes needed so that `e^{-(λ_N - λ_0) t} < ratio`, estimated
/// from Weyl's law with a boundary correction.
pub fn weyl_mode_estimate(area: f64, perimeter: f64, lambda0: f64, t: f64, ratio: f64) -> usize {
    let lam = lambda0 + (-ratio.ln()) / t;
    let count = area * lam / (4.0 * std::f64::consts::PI) + perimeter * lam.sqrt() / (4.0 * std::f64::consts::PI);
    (1.25 * count).ceil() as usize + 10
}

/// Solves for enough modes that the heat expansion at time `t` is truncated
/// only below `e^{-λ_N t} < ratio · e^{-λ_0 t}`, or for every mode when the
/// mesh cannot resolve that many.
pub fn solve_modes_for_time(
    assembly: &Assembly,
    perimeter: f64,
    t: f64,
    ratio: f64,
    tol: f64,
    mesh_ref: &str,
) -> Result<EigenBasis> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let n = assembly.dofs.n_dofs();
    let mut want = weyl_mode_estimate(assembly.area, perimeter, 0.0, t, ratio).min(n);
    loop {
        let basis = solve_modes(assembly, want, tol, mesh_ref)?;
        let spread = basis.lambdas.last().unwrap() - basis.lambdas[0];
        if (-spread * t).exp() < ratio || want == n {
            return Ok(basis);
        }
        want = ((want as f64 * 1.5) as usize).min(n);
    }
}

/// Values of every mode at an arbitrary point by barycentric interpolation.
pub fn eval_modes(
    basis: &EigenBasis,
    mesh: &TriangleMesh,
    locator: &MeshLocator,
    p: Point,
) -> Result<Vec<f64>> {
    let (t, bary) = locator
        .locate(mesh, p)
        .ok_or(Error::OutsideDomain(p[0], p[1]))?;
    let tri = mesh.triangles[t];
    Ok(basis
        .psis
        .iter()
        .map(|psi| (0..3).map(|k| bary[k] * psi[tri[k]]).sum())
        .collect())
}

/// Value of mode `n` at `p`.
pub fn eval_eigenfunction(
    basis: &EigenBasis,
    mesh: &TriangleMesh,
    locator: &MeshLocator,
    n: usize,
    p: Point,
) -> Result<f64> {
    if n >= basis.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "mode {n} requested from a basis with {} modes",
            basis.n_modes()
        )));
    }
    let (t, bary) = locator
        .locate(mesh, p)
        .ok_or(Error::OutsideDomain(p[0], p[1]))?;
    let tri = mesh.triangles[t];
    Ok((0..3).map(|k| bary[k] * basis.psis[n][tri[k]]).sum())
}

/// `w(x, t) = ∫ H(x, y, t) dμ(y)` at every vertex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatContent {
    pub t: f64,
    pub values: Vec<f64>,
}

/// Terms with `e^{-λ t} |⟨ψ, 1⟩| < HEAT_CONTENT_CUTOFF` are dropped.
pub const HEAT_CONTENT_CUTOFF: f64 = 1e-12;

pub fn heat_content(basis: &EigenBasis, t: f64) -> Result<HeatContent> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let nv = basis.psis.first().map_or(0, Vec::len);
    let terms: Vec<(usize, f64)> = basis
        .lambdas
        .iter()
        .zip(&basis.means)
        .enumerate()
        .filter_map(|(n, (l, m))| {
            let c = (-l * t).exp() * m;
            (c.abs() >= HEAT_CONTENT_CUTOFF).then_some((n, c))
        })
        .collect();
    let values = (0..nv)
        .into_par_iter()
        .map(|v| terms.iter().map(|&(n, c)| c * basis.psis[n][v]).sum())
        .collect();
    Ok(HeatContent { t, values })
}

/// A meshed polygon with its assembly and eigenbasis.
#[derive(Clone, Debug)]
pub struct ModalDomain {
    pub polygon: Polygon,
    pub mesh: TriangleMesh,
    pub assembly: Assembly,
    pub basis: EigenBasis,
    pub locator: MeshLocator,
}

/// How many modes to compute for a [`ModalDomain`].
#[derive(Clone, Copy, Debug)]
pub enum ModeCount {
    Fixed(usize),
    /// Enough for `e^{-(λ_N - λ_0) t} < ratio`.
    ForTime { t: f64, ratio: f64 },
    All,
}

impl ModalDomain {
    pub fn solve(
        polygon: &Polygon,
        depth: u32,
        bc: BoundaryCondition,
        modes: ModeCount,
        tol: f64,
    ) -> Result<ModalDomain> {
        let mesh = crate::geometry::triangulate(polygon, depth)?;
        let assembly = assemble(&mesh, bc)?;
        let r = mesh_ref(polygon, &mesh);
        let basis = match modes {
            ModeCount::Fixed(n) => solve_modes(&assembly, n, tol, &r)?,
            ModeCount::All => solve_modes(&assembly, assembly.dofs.n_dofs(), tol, &r)?,
            ModeCount::ForTime { t, ratio } => {
                let perimeter: f64 = polygon
                    .segments()
                    .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                    .sum();
                solve_modes_for_time(&assembly, perimeter, t, ratio, tol, &r)?
            }
        };
        let locator = MeshLocator::new(&mesh);
        Ok(ModalDomain {
            polygon: polygon.clone(),
            mesh,
            assembly,
            basis,
            locator,
        })
    }

    pub fn modes_at(&self, p: Point) -> Result<Vec<f64>> {
        eval_modes(&self.basis, &self.mesh, &self.locator, p)
    }

    /// Mode values at every triangle centroid (mean of vertex values).
    pub fn modes_at_centroids(&self) -> Vec<Vec<f64>> {
        self.mesh
            .triangles
            .par_iter()
            .map(|t| {
                self.basis
                    .psis
                    .iter()
                    .map(|psi| (psi[t[0]] + psi[t[1]] + psi[t[2]]) / 3.0)
                    .collect()
            })
            .collect()
    }
}

/// Richardson extrapolation for a quantity converging like `h^order` when `h`
/// halves between `coarse` and `fine`.
pub fn richardson(coarse: f64, fine: f64, order: f64) -> f64 {
    let f = 2f64.powf(order);
    fine + (fine - coarse) / (f - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{load_drum, triangulate, DrumId};
    use crate::linalg::dot;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn neumann_stiffness_annihilates_constants() {
        let mesh = triangulate(&load_drum(DrumId::Drum1, 1.0).unwrap(), 3).unwrap();
        let a = assemble(&mesh, BoundaryCondition::Neumann).unwrap();
        for s in a.stiffness.row_sums() {
            assert!(s.abs() < 1e-12);
        }
        assert!((a.mass.total() - 3.5).abs() < 1e-12);
        assert!(a.stiffness.asymmetry() < 1e-15);
        assert!(a.mass.asymmetry() < 1e-15);
    }

    #[test]
    fn stiffness_is_positive_semidefinite() {
        let mesh = triangulate(&load_drum(DrumId::Drum2, 1.0).unwrap(), 2).unwrap();
        let mut rng = crate::rng::stream(3, 0);
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let a = assemble(&mesh, bc).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..a.dofs.n_dofs()).map(|_| rng.random::<f64>() - 0.5).collect();
                assert!(a.stiffness.quad_form(&x) >= -1e-12);
                assert!(a.mass.quad_form(&x) > 0.0);
            }
        }
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let mesh = TriangleMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![true; 3],
            depth: 0,
        };
        assert!(matches!(
            assemble(&mesh, BoundaryCondition::Neumann),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn unit_square_dirichlet_ground_state() {
        let sq = Polygon::unit_square();
        let d = ModalDomain::solve(&sq, 5, BoundaryCondition::Dirichlet, ModeCount::Fixed(4), 1e-8).unwrap();
        let exact = 2.0 * PI * PI;
        assert!((d.basis.lambdas[0] - exact).abs() / exact < 5e-3, "{}", d.basis.lambdas[0]);
        // λ_2 = λ_3 = 5π² up to discretization.
        let e2 = 5.0 * PI * PI;
        assert!((d.basis.lambdas[1] - e2).abs() / e2 < 2e-2);
        assert!((d.basis.lambdas[2] - e2).abs() / e2 < 2e-2);
    }

    #[test]
    fn neumann_constant_mode_and_orthonormality() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let d = ModalDomain::solve(&p, 3, BoundaryCondition::Neumann, ModeCount::Fixed(12), 1e-8).unwrap();
        let b = &d.basis;
        assert!(b.lambdas[0].abs() < 1e-8, "{}", b.lambdas[0]);
        let psi0 = &b.psis[0];
        let mean = psi0.iter().sum::<f64>() / psi0.len() as f64;
        let var = psi0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / psi0.len() as f64;
        assert!(var.sqrt() / mean < 1e-6);
        assert!((mean - 1.0).abs() < 1e-6);
        // Gram matrix in the μ-weighted consistent-mass inner product.
        let a = &d.assembly;
        for i in 0..b.n_modes() {
            let xi: Vec<f64> = a.dofs.dof_to_vertex.iter().map(|&v| b.psis[i][v]).collect();
            let mxi = a.mass.mul_vec(&xi);
            for j in 0..b.n_modes() {
                let xj: Vec<f64> = a.dofs.dof_to_vertex.iter().map(|&v| b.psis[j][v]).collect();
                let g = dot(&mxi, &xj) / a.area;
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8, "({i},{j}) {g}");
            }
        }
        for w in b.lambdas.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn neumann_below_dirichlet() {
        let p = load_drum(DrumId::Drum2, 1.0).unwrap();
        let n = ModalDomain::solve(&p, 3, BoundaryCondition::Neumann, ModeCount::Fixed(8), 1e-8).unwrap();
        let d = ModalDomain::solve(&p, 3, BoundaryCondition::Dirichlet, ModeCount::Fixed(8), 1e-8).unwrap();
        for (a, b) in n.basis.lambdas.iter().zip(&d.basis.lambdas) {
            assert!(a <= b);
        }
        assert!(d.basis.lambdas[0] > 0.0);
    }

    #[test]
    fn interpolation_and_boundary_values() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let d = ModalDomain::solve(&p, 3, BoundaryCondition::Dirichlet, ModeCount::Fixed(5), 1e-8).unwrap();
        for v in [0usize, 10, 57, 100] {
            let val = eval_eigenfunction(&d.basis, &d.mesh, &d.locator, 2, d.mesh.vertices[v]).unwrap();
            assert!((val - d.basis.psis[2][v]).abs() < 1e-12);
        }
        let bv = d.mesh.boundary.iter().position(|&b| b).unwrap();
        let val = eval_eigenfunction(&d.basis, &d.mesh, &d.locator, 1, d.mesh.vertices[bv]).unwrap();
        assert_eq!(val, 0.0);
        assert!(matches!(
            eval_eigenfunction(&d.basis, &d.mesh, &d.locator, 0, [-5.0, -5.0]),
            Err(Error::OutsideDomain(..))
        ));
        assert!(eval_eigenfunction(&d.basis, &d.mesh, &d.locator, 9, d.mesh.vertices[0]).is_err());
    }

    #[test]
    fn neumann_psi0_is_one_everywhere() {
        let p = load_drum(DrumId::Drum2, 1.0).unwrap();
        let d = ModalDomain::solve(&p, 2, BoundaryCondition::Neumann, ModeCount::Fixed(3), 1e-8).unwrap();
        let c = d.mesh.centroid(17);
        let v = eval_eigenfunction(&d.basis, &d.mesh, &d.locator, 0, c).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn heat_content_properties() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let n = ModalDomain::solve(&p, 3, BoundaryCondition::Neumann, ModeCount::Fixed(20), 1e-8).unwrap();
        for t in [0.01, 0.1, 1.0] {
            let w = heat_content(&n.basis, t).unwrap();
            for v in &w.values {
                assert!((v - 1.0).abs() < 1e-6, "{v}");
            }
        }
        let d = ModalDomain::solve(&p, 3, BoundaryCondition::Dirichlet, ModeCount::All, 1e-8).unwrap();
        // Consistent mass has no discrete maximum principle below t ≈ 5h².
        let mut prev: Option<Vec<f64>> = None;
        for t in [0.08, 0.1, 0.2, 0.5, 2.0] {
            let w = heat_content(&d.basis, t).unwrap();
            for (i, v) in w.values.iter().enumerate() {
                assert!(*v >= -1e-6 && *v <= 1.0 + 1e-6, "t={t} {v}");
                if let Some(p) = &prev {
                    assert!(*v <= p[i] + 1e-6);
                }
            }
            prev = Some(w.values);
        }
        let late = heat_content(&d.basis, 5.0).unwrap();
        let max = late.values.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2.0 * (-d.basis.lambdas[0] * 5.0).exp());
        assert!(heat_content(&d.basis, 0.0).is_err());
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let exact = 3.0;
        let f = |h: f64| exact + 0.7 * h * h;
        assert!((richardson(f(0.1), f(0.05), 2.0) - exact).abs() < 1e-12);
    }
}
