//! Discretized graphons and their analyses.
//!
//! A [`DiscretizedGraphon`] is a step graphon: node `i` carries probability
//! mass `w_i` and the kernel is constant on each pair of cells. Every analysis
//! below is exact for that step graphon; Nyström consistency with the
//! underlying continuous kernel is the caller's business.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryCondition, EigenBasis, ModalDomain};
use crate::geometry::{DrumId, Location, Point};
use crate::linalg::{dense_symmetric_eigen, lanczos_dominant, DenseSymmetric, LanczosOptions};
use crate::rng;

/// Tolerance for the weight sum and kernel symmetry checks.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Tolerance for kernel entries leaving `[0, 1]`.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereKind {
    S1,
    S3,
}

impl std::str::FromStr for SphereKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(SphereKind::S1),
            "s3" => Ok(SphereKind::S3),
            _ => Err(Error::InvalidArgument(format!("unknown sphere kind `{s}`"))),
        }
    }
}

/// Magnitude of entries pushed back into `[0, 1]` after normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipStats {
    pub below: usize,
    pub max_below: f64,
    pub above: usize,
    pub max_above: f64,
}

/// How a graphon was constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Sphere {
        sphere: SphereKind,
        n: usize,
        seed: u64,
    },
    Heat {
        drum: String,
        bc: BoundaryCondition,
        t0: f64,
        k: f64,
        n_modes: usize,
        depth: u32,
        collapse_boundary: bool,
        clip: ClipStats,
    },
    Step {
        blocks: usize,
    },
    Constant {
        p: f64,
    },
    File {
        path: String,
        source: Option<Box<Provenance>>,
    },
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Sphere { .. } => "sphere",
            Provenance::Heat { .. } => "heat",
            Provenance::Step { .. } => "step",
            Provenance::Constant { .. } => "constant",
            Provenance::File { .. } => "file",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedGraphon {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Row-major `n × n`.
    pub kernel: Vec<f64>,
    pub provenance: Provenance,
}

impl DiscretizedGraphon {
    /// Validates and wraps the parts. Weights must be nonnegative and sum to
    /// one; the kernel must be symmetric with entries in `[0, 1]`.
    pub fn new(
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        kernel: Vec<f64>,
        provenance: Provenance,
    ) -> Result<DiscretizedGraphon> {
        let g = DiscretizedGraphon {
            nodes,
            weights,
            kernel,
            provenance,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n == 0 {
            return Err(Error::InvalidArgument("graphon has no nodes".into()));
        }
        if self.nodes.len() != n || self.kernel.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "inconsistent sizes: {} nodes, {} weights, {} kernel entries",
                self.nodes.len(),
                n,
                self.kernel.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid weight {w}")));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.kernel[i * n + j];
                if !(v >= -RANGE_TOL && v <= 1.0 + RANGE_TOL) {
                    return Err(Error::InvalidArgument(format!(
                        "kernel entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if j > i && (v - self.kernel[j * n + i]).abs() > STRUCTURE_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "kernel not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.kernel[i * n..(i + 1) * n]
    }

    /// Relabels nodes so that new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<DiscretizedGraphon> {
        let n = self.n();
        let distinct: BTreeSet<usize> = perm.iter().copied().collect();
        if perm.len() != n || distinct.len() != n || distinct.iter().any(|&p| p >= n) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                kernel[i * n + j] = self.kernel[perm[i] * n + perm[j]];
            }
        }
        Ok(DiscretizedGraphon {
            nodes: perm.iter().map(|&p| self.nodes[p].clone()).collect(),
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
            kernel,
            provenance: self.provenance.clone(),
        })
    }

    /// `S_ij = √w_i W_ij √w_j`, whose spectrum is that of the integral operator.
    pub fn symmetrized(&self) -> Vec<f64> {
        let n = self.n();
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let mut s = vec![0.0; n * n];
        s.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = sw[i] * self.kernel[i * n + j] * sw[j];
            }
        });
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<DiscretizedGraphon> {
        let mut g: DiscretizedGraphon = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        g.provenance = Provenance::File {
            path: path.display().to_string(),
            source: Some(Box::new(g.provenance)),
        };
        g.validate()?;
        Ok(g)
    }

    /// Binary layout: `GRPH1`, `u64 n`, `u64 dim`, nodes, weights, kernel rows
    /// (all little-endian `f64`), then `u64` length and provenance JSON.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let dim = self.nodes.first().map_or(0, Vec::len);
        if self.nodes.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidArgument("nodes have mixed dimensions".into()));
        }
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(BINARY_MAGIC)?;
        f.write_all(&(self.n() as u64).to_le_bytes())?;
        f.write_all(&(dim as u64).to_le_bytes())?;
        for v in self.nodes.iter().flatten().chain(&self.weights).chain(&self.kernel) {
            f.write_all(&v.to_le_bytes())?;
        }
        let prov = serde_json::to_vec(&self.provenance)?;
        f.write_all(&(prov.len() as u64).to_le_bytes())?;
        f.write_all(&prov)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<DiscretizedGraphon> {
        let mut f = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 5];
        f.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("missing GRPH1 magic".into()));
        }
        let mut u = [0u8; 8];
        let mut read_u64 = |f: &mut BufReader<File>| -> Result<u64> {
            f.read_exact(&mut u)?;
            Ok(u64::from_le_bytes(u))
        };
        let n = read_u64(&mut f)? as usize;
        let dim = read_u64(&mut f)? as usize;
        let count = n
            .checked_mul(n)
            .and_then(|nn| nn.checked_add(n * (dim + 1)))
            .ok_or_else(|| Error::Format("size overflow".into()))?;
        let mut bytes = vec![0u8; count * 8];
        f.read_exact(&mut bytes)?;
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (nodes_flat, rest) = vals.split_at(n * dim);
        let (weights, kernel) = rest.split_at(n);
        let plen = read_u64(&mut f)? as usize;
        let mut prov = vec![0u8; plen];
        f.read_exact(&mut prov)?;
        let source: Provenance = serde_json::from_slice(&prov)?;
        let nodes = if dim == 0 {
            vec![Vec::new(); n]
        } else {
            nodes_flat.chunks(dim).map(<[f64]>::to_vec).collect()
        };
        DiscretizedGraphon::new(
            nodes,
            weights.to_vec(),
            kernel.to_vec(),
            Provenance::File {
                path: path.display().to_string(),
                source: Some(Box::new(source)),
            },
        )
    }
}

const BINARY_MAGIC: &[u8; 5] = b"GRPH1";

/// `W ≡ p` on `n` equal cells.
pub fn constant_graphon(n: usize, p: f64) -> Result<DiscretizedGraphon> {
    if n == 0 || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("constant graphon needs n ≥ 1 and p ∈ [0,1], got n = {n}, p = {p}")));
    }
    DiscretizedGraphon::new(
        (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect(),
        vec![1.0 / n as f64; n],
        vec![p; n * n],
        Provenance::Constant { p },
    )
}

/// Step graphon with one node per block.
pub fn step_graphon(weights: Vec<f64>, blocks: Vec<Vec<f64>>) -> Result<DiscretizedGraphon> {
    let m = weights.len();
    if blocks.len() != m || blocks.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("block matrix must be m × m".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("block weights must be positive".into()));
    }
    DiscretizedGraphon::new(
        (0..m).map(|i| vec![i as f64]).collect(),
        weights,
        blocks.into_iter().flatten().collect(),
        Provenance::Step { blocks: m },
    )
}

/// `W_{S¹}(d) = 1/2 + cos(d)/8 + cos(2d)/8`.
pub fn s1_kernel(a: f64, b: f64) -> f64 {
    let d = a - b;
    0.5 + d.cos() / 8.0 + (2.0 * d).cos() / 8.0
}

/// `W_{S³}(x, y) = 1/2 + ⟨x, y⟩/4`.
pub fn s3_kernel(x: &[f64], y: &[f64]) -> f64 {
    0.5 + 0.25 * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
}

/// `n` uniform samples on the circle (as angles) or the 3-sphere (as unit
/// vectors in ℝ⁴) with equal weights.
pub fn sphere_graphon(kind: SphereKind, n: usize, seed: u64) -> Result<DiscretizedGraphon> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sphere graphon needs n ≥ 2, got {n}")));
    }
    let mut r = rng::stream(seed, 0);
    let nodes: Vec<Vec<f64>> = match kind {
        SphereKind::S1 => (0..n)
            .map(|_| vec![r.random::<f64>() * std::f64::consts::TAU])
            .collect(),
        SphereKind::S3 => (0..n)
            .map(|_| loop {
                let v: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut r)).collect();
                let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if s > 1e-12 {
                    break v.into_iter().map(|x| x / s).collect();
                }
            })
            .collect(),
    };
    let mut kernel = vec![0.0; n * n];
    kernel.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = match kind {
                SphereKind::S1 => s1_kernel(nodes[i][0], nodes[j][0]),
                SphereKind::S3 => s3_kernel(&nodes[i], &nodes[j]),
            };
        }
    });
    DiscretizedGraphon::new(
        nodes,
        vec![1.0 / n as f64; n],
        kernel,
        Provenance::Sphere { sphere: kind, n, seed },
    )
}

/// Parameters of a drum heat graphon `W = H(·, ·, t0) / K`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HeatGraphonSpec {
    pub drum: DrumId,
    pub bc: BoundaryCondition,
    pub t0: f64,
    pub k: f64,
    /// Number of modes used; 0 means every mode in the basis.
    pub n_modes: usize,
    /// Add a boundary node `B` with an identically zero row (Dirichlet only).
    pub collapse_boundary: bool,
}

/// Truncation tail bound must stay below this fraction of `K`.
pub const TAIL_FRACTION: f64 = 1e-6;

/// `K = max_{x} H(x, x, t0)` over the vertices of every basis. For P1
/// interpolation the diagonal at any point of a triangle is a convex
/// combination bound of vertex values, so the vertex maximum is the maximum
/// over the whole domain and, by Cauchy–Schwarz, over all pairs.
pub fn normalization_k(bases: &[&EigenBasis], t0: f64) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidArgument(format!("t0 must be positive, got {t0}")));
    }
    if bases.windows(2).any(|b| b[0].bc != b[1].bc) {
        return Err(Error::InvalidArgument("bases use different boundary conditions".into()));
    }
    Ok(bases
        .iter()
        .flat_map(|b| b.heat_diagonal(t0))
        .fold(0.0, f64::max))
}

/// Heat graphon on the triangle centroids of `domain`, weighted by area.
pub fn heat_graphon(spec: &HeatGraphonSpec, domain: &ModalDomain) -> Result<DiscretizedGraphon> {
    let basis = &domain.basis;
    if basis.bc != spec.bc {
        return Err(Error::InvalidArgument(format!(
            "basis is {} but the spec asks for {}",
            basis.bc, spec.bc
        )));
    }
    if domain.polygon.id != spec.drum.as_str() {
        return Err(Error::InvalidArgument(format!(
            "basis belongs to {} but the spec asks for {}",
            domain.polygon.id, spec.drum
        )));
    }
    if !(spec.t0 > 0.0) || !(spec.k > 0.0) {
        return Err(Error::InvalidArgument("t0 and K must be positive".into()));
    }
    if spec.collapse_boundary && spec.bc != BoundaryCondition::Dirichlet {
        return Err(Error::InvalidArgument(
            "boundary collapse applies to Dirichlet graphons only".into(),
        ));
    }
    let modes = if spec.n_modes == 0 { basis.n_modes() } else { spec.n_modes };
    if modes > basis.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "{modes} modes requested, basis has {}",
            basis.n_modes()
        )));
    }
    let truncated = EigenBasis {
        lambdas: basis.lambdas[..modes].to_vec(),
        psis: basis.psis[..modes].to_vec(),
        means: basis.means[..modes].to_vec(),
        residuals: basis.residuals[..modes].to_vec(),
        ..basis.clone()
    };
    let tail = truncated.tail_bound(spec.t0);
    if tail > TAIL_FRACTION * spec.k {
        return Err(Error::TailBound {
            tail,
            limit: TAIL_FRACTION * spec.k,
        });
    }
    let mesh = &domain.mesh;
    // Under collapse, triangles sharing the same interior vertices have
    // identical centroid values and form one node; those with no interior
    // vertex are absorbed into B.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut absorbed = Vec::new();
    if spec.collapse_boundary {
        let mut by_key: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut key: Vec<usize> = tri.iter().copied().filter(|&v| !mesh.boundary[v]).collect();
            if key.is_empty() {
                absorbed.push(t);
                continue;
            }
            key.sort_unstable();
            let next = groups.len();
            let slot = *by_key.entry(key).or_insert(next);
            if slot == next {
                groups.push(Vec::new());
            }
            groups[slot].push(t);
        }
    } else {
        groups = (0..mesh.n_triangles()).map(|t| vec![t]).collect();
    }
    let nt = groups.len();
    // Φ_{i n} = √(e^{-λ_n t0}) ψ_n(c_i); W = Φ Φᵀ / K.
    let decay: Vec<f64> = truncated.lambdas.iter().map(|l| (-l * spec.t0).exp().sqrt()).collect();
    let phi = DMatrix::from_fn(nt, modes, |i, n| {
        let t = mesh.triangles[groups[i][0]];
        decay[n] * (truncated.psis[n][t[0]] + truncated.psis[n][t[1]] + truncated.psis[n][t[2]]) / 3.0
    });
    let gram = &phi * phi.transpose();
    let extra = usize::from(spec.collapse_boundary);
    let n = nt + extra;
    let mut kernel = vec![0.0; n * n];
    let mut clip = ClipStats::default();
    let mut worst = 0.0f64;
    for i in 0..nt {
        for j in 0..nt {
            let v = gram[(i, j)] / spec.k;
            worst = worst.max(v);
            kernel[i * n + j] = if v < 0.0 {
                clip.below += 1;
                clip.max_below = clip.max_below.max(-v);
                0.0
            } else if v > 1.0 {
                clip.above += 1;
                clip.max_above = clip.max_above.max(v - 1.0);
                1.0
            } else {
                v
            };
        }
    }
    if worst > 1.0 + RANGE_TOL {
        return Err(Error::KernelExceedsNormalization {
            value: worst * spec.k,
            k: spec.k,
        });
    }
    // Symmetrize exactly; the product is symmetric up to rounding.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (kernel[i * n + j] + kernel[j * n + i]);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    let area = truncated.measure;
    let mut weights = Vec::with_capacity(nt + extra);
    let mut nodes = Vec::with_capacity(nt + extra);
    for group in &groups {
        let mass: f64 = group.iter().map(|&t| mesh.triangle_area(t)).sum();
        let mut c = vec![0.0; 2];
        for &t in group {
            let a = mesh.triangle_area(t) / mass;
            let ct = mesh.centroid(t);
            c[0] += a * ct[0];
            c[1] += a * ct[1];
        }
        weights.push(mass / area);
        nodes.push(c);
    }
    if spec.collapse_boundary {
        // B represents the whole boundary; a polygon corner stands in for it.
        weights.push(absorbed.iter().map(|&t| mesh.triangle_area(t) / area).sum());
        nodes.push(domain.polygon.vertices[0].to_vec());
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    DiscretizedGraphon::new(
        nodes,
        weights,
        kernel,
        Provenance::Heat {
            drum: spec.drum.as_str().to_string(),
            bc: spec.bc,
            t0: spec.t0,
            k: spec.k,
            n_modes: modes,
            depth: mesh.depth,
            collapse_boundary: spec.collapse_boundary,
            clip,
        },
    )
}

/// Largest clip magnitude accepted as a numerical-quality pass.
pub const CLIP_BUDGET: f64 = 1e-2;

/// Fails when normalization pushed entries further than [`CLIP_BUDGET`]
/// back into `[0, 1]`.
pub fn check_clip_budget(g: &DiscretizedGraphon) -> Result<()> {
    if let Provenance::Heat { clip, .. } = &g.provenance {
        let magnitude = clip.max_below.max(clip.max_above);
        if magnitude > CLIP_BUDGET {
            return Err(Error::ClipBudget {
                magnitude,
                budget: CLIP_BUDGET,
            });
        }
    }
    Ok(())
}

/// A group of eigenvalues within the clustering tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub mean: f64,
    pub multiplicity: usize,
    /// Positions in the magnitude-ordered eigenvalue list.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Descending by magnitude.
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub nodes: usize,
    pub quadrature: String,
}

/// Relative gap below which neighbouring eigenvalues share a cluster.
pub const CLUSTER_GAP: f64 = 0.1;

/// Groups magnitude-ordered eigenvalues whose relative gap is below `gap`.
/// Values below `floor` in magnitude form one cluster.
pub fn cluster_eigenvalues(values: &[f64], gap: f64, floor: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let joins = clusters.last().is_some_and(|c| {
            let prev = values[*c.members.last().unwrap()];
            let scale = prev.abs().max(v.abs());
            scale <= floor || (v - prev).abs() <= gap * scale
        });
        if joins {
            clusters.last_mut().unwrap().members.push(i);
        } else {
            clusters.push(Cluster {
                mean: 0.0,
                multiplicity: 0,
                members: vec![i],
            });
        }
    }
    for c in &mut clusters {
        c.multiplicity = c.members.len();
        c.mean = c.members.iter().map(|&i| values[i]).sum::<f64>() / c.multiplicity as f64;
    }
    clusters
}

fn quadrature_label(g: &DiscretizedGraphon) -> String {
    match &g.provenance {
        Provenance::Heat { depth, .. } => format!("triangle centroids, area weights, depth {depth}"),
        Provenance::Sphere { .. } => "uniform samples, equal weights".into(),
        Provenance::Step { .. } => "one node per block".into(),
        Provenance::Constant { .. } => "equal cells".into(),
        Provenance::File { .. } => "as stored".into(),
    }
}

/// Dense eigendecomposition is used up to this many nodes or when many
/// eigenvalues are requested.
pub const DENSE_LIMIT: usize = 600;

/// All eigenvalues of the operator, descending by magnitude.
pub fn full_spectrum(g: &DiscretizedGraphon) -> Vec<f64> {
    let (mut vals, _) = dense_symmetric_eigen(g.n(), &g.symmetrized());
    vals.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    vals
}

/// Top-`k` eigenvalues by magnitude of the μ-weighted integral operator.
pub fn spectrum(g: &DiscretizedGraphon, k: usize) -> Result<SpectrumReport> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must be in 1..={n}")));
    }
    let eigenvalues = if n <= DENSE_LIMIT || 4 * k > n {
        let mut all = full_spectrum(g);
        all.truncate(k);
        all
    } else {
        let s = g.symmetrized();
        let op = DenseSymmetric { n, data: &s };
        lanczos_dominant(&op, k, LanczosOptions::default())?.values
    };
    let floor = 1e-9 * eigenvalues.first().map_or(0.0, |v| v.abs()).max(1e-300);
    Ok(SpectrumReport {
        clusters: cluster_eigenvalues(&eigenvalues, CLUSTER_GAP, floor),
        eigenvalues,
        nodes: n,
        quadrature: quadrature_label(g),
    })
}

/// `tr(S^k) = Σ λ_i^k`, computed from matrix products.
pub fn cycle_trace(g: &DiscretizedGraphon, k: u32) -> f64 {
    let n = g.n();
    let s = DMatrix::from_row_slice(n, n, &g.symmetrized());
    match k {
        0 => n as f64,
        1 => s.trace(),
        2 => s.iter().map(|v| v * v).sum(),
        _ => {
            let half = k / 2;
            let mut p = s.clone();
            for _ in 1..half {
                p = &p * &s;
            }
            if k % 2 == 0 {
                p.iter().map(|v| v * v).sum()
            } else {
                let q = &p * &s;
                p.component_mul(&q).sum()
            }
        }
    }
}

/// Equal-width histogram with both counts and μ-mass per bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn new(values: &[f64], weights: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
        let bins = bins.max(1);
        let mut counts = vec![0; bins];
        let mut mass = vec![0.0; bins];
        let width = (hi - lo) / bins as f64;
        for (v, w) in values.iter().zip(weights) {
            if *v < lo || *v > hi || !(width > 0.0) {
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
            mass[b] += w;
        }
        Histogram { lo, hi, counts, mass }
    }

    pub fn edges(&self) -> Vec<f64> {
        let b = self.counts.len();
        (0..=b)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / b as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degrees: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// μ-weighted mean and coefficient of variation.
    pub mean: f64,
    pub cv: f64,
    pub histogram: Histogram,
}

/// `d_i = Σ_j w_j W_ij`.
pub fn degrees(g: &DiscretizedGraphon) -> Vec<f64> {
    (0..g.n())
        .into_par_iter()
        .map(|i| g.row(i).iter().zip(&g.weights).map(|(a, w)| a * w).sum())
        .collect()
}

/// Degrees with summary statistics over positive-weight nodes. The histogram
/// spans `range` or `[0, max d]`.
pub fn degree(g: &DiscretizedGraphon, bins: usize, range: Option<(f64, f64)>) -> DegreeReport {
    let d = degrees(g);
    let live: Vec<usize> = (0..g.n()).filter(|&i| g.weights[i] > 0.0).collect();
    let min = live.iter().map(|&i| d[i]).fold(f64::INFINITY, f64::min);
    let max = live.iter().map(|&i| d[i]).fold(f64::NEG_INFINITY, f64::max);
    let mean: f64 = live.iter().map(|&i| g.weights[i] * d[i]).sum();
    let var: f64 = live.iter().map(|&i| g.weights[i] * (d[i] - mean).powi(2)).sum();
    let cv = if mean != 0.0 { var.sqrt() / mean.abs() } else { 0.0 };
    let (lo, hi) = range.unwrap_or((0.0, if max > 0.0 { max } else { 1.0 }));
    let histogram = Histogram::new(&d, &g.weights, lo, hi, bins);
    DegreeReport {
        degrees: d,
        min,
        max,
        mean,
        cv,
        histogram,
    }
}

/// `r_W(i, j) = Σ_k w_k |W_ik − W_jk|`.
pub fn rw_distance(g: &DiscretizedGraphon, i: usize, j: usize) -> f64 {
    g.row(i)
        .iter()
        .zip(g.row(j))
        .zip(&g.weights)
        .map(|((a, b), w)| w * (a - b).abs())
        .sum()
}

/// `r_W` over every pair of `sample`.
pub fn rw_matrix(g: &DiscretizedGraphon, sample: &[usize]) -> Result<Vec<Vec<f64>>> {
    if let Some(&bad) = sample.iter().find(|&&i| i >= g.n()) {
        return Err(Error::InvalidArgument(format!("node index {bad} out of range")));
    }
    Ok(sample
        .par_iter()
        .map(|&i| sample.iter().map(|&j| rw_distance(g, i, j)).collect())
        .collect())
}

/// `m` distinct node indices chosen uniformly, in increasing order.
pub fn sample_indices(n: usize, m: usize, seed: u64) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    let mut r = rng::stream(seed, 7);
    let mut idx = rand::seq::index::sample(&mut r, n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Exhaustive twin scans are done up to this many nodes.
pub const TWIN_SCAN_EXHAUSTIVE: usize = 5000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwinScan {
    pub eps: f64,
    pub pairs: Vec<(usize, usize)>,
    pub min_r: f64,
    pub mean_r: f64,
    pub scanned_nodes: usize,
}

fn twin_candidates(g: &DiscretizedGraphon, seed: u64) -> Vec<usize> {
    sample_indices(g.n(), TWIN_SCAN_EXHAUSTIVE, seed)
}

fn all_pair_distances(g: &DiscretizedGraphon, nodes: &[usize]) -> Vec<Vec<f64>> {
    nodes
        .par_iter()
        .enumerate()
        .map(|(a, &i)| nodes[a + 1..].iter().map(|&j| rw_distance(g, i, j)).collect())
        .collect()
}

/// Pairs with `r_W < eps`, over all pairs when `n ≤ 5000` and over a
/// seeded node sample otherwise.
pub fn twin_scan(g: &DiscretizedGraphon, eps: f64, seed: u64) -> Result<TwinScan> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok(scan_with(g, |_| eps, seed))
}

/// Twin scan with `eps = rel · mean(r_W)`.
pub fn twin_scan_relative(g: &DiscretizedGraphon, rel: f64, seed: u64) -> Result<TwinScan> {
    if !(rel > 0.0) {
        return Err(Error::InvalidArgument(format!("relative eps must be positive, got {rel}")));
    }
    Ok(scan_with(g, |mean| rel * mean, seed))
}

fn scan_with(g: &DiscretizedGraphon, eps_of_mean: impl Fn(f64) -> f64, seed: u64) -> TwinScan {
    let nodes = twin_candidates(g, seed);
    let d = all_pair_distances(g, &nodes);
    let count: usize = d.iter().map(Vec::len).sum();
    let mean_r = d.iter().flatten().sum::<f64>() / count.max(1) as f64;
    let min_r = d.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let eps = eps_of_mean(mean_r);
    let mut pairs = Vec::new();
    for (a, row) in d.iter().enumerate() {
        for (off, &r) in row.iter().enumerate() {
            if r < eps {
                pairs.push((nodes[a], nodes[a + 1 + off]));
            }
        }
    }
    TwinScan {
        eps,
        pairs,
        min_r,
        mean_r,
        scanned_nodes: nodes.len(),
    }
}

/// A simple finite graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphSpec {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<GraphSpec> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("loop at vertex {a}")));
            }
            if a >= vertices || b >= vertices {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidArgument(format!("repeated edge ({a}, {b})")));
            }
        }
        Ok(GraphSpec { vertices, edges })
    }

    pub fn cycle(k: usize) -> Result<GraphSpec> {
        if k < 3 {
            return Err(Error::InvalidArgument(format!("cycle needs k ≥ 3, got {k}")));
        }
        GraphSpec::new(k, (0..k).map(|i| (i, (i + 1) % k)).collect())
    }

    pub fn path(k: usize) -> Result<GraphSpec> {
        GraphSpec::new(k.max(1), (1..k).map(|i| (i - 1, i)).collect())
    }

    pub fn star(leaves: usize) -> Result<GraphSpec> {
        GraphSpec::new(leaves + 1, (1..=leaves).map(|i| (0, i)).collect())
    }

    pub fn complete(k: usize) -> Result<GraphSpec> {
        let mut e = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                e.push((a, b));
            }
        }
        GraphSpec::new(k, e)
    }

    /// Parses `vertex`, `edge`, `c<k>`, `p<k>` (path on k vertices),
    /// `s<k>` (star with k leaves) and `k<k>`.
    pub fn from_name(name: &str) -> Result<GraphSpec> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "vertex" | "k1" => return GraphSpec::new(1, vec![]),
            "edge" | "k2" => return GraphSpec::new(2, vec![(0, 1)]),
            _ => {}
        }
        let bad = || Error::InvalidArgument(format!("unknown graph `{name}`"));
        let (head, tail) = lower.split_at(1);
        let k: usize = tail.parse().map_err(|_| bad())?;
        match head {
            "c" => GraphSpec::cycle(k),
            "p" => GraphSpec::path(k),
            "s" => GraphSpec::star(k),
            "k" => GraphSpec::complete(k),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HomEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

const HOM_CHUNK: usize = 1 << 14;

/// Monte Carlo `t(F, W)`: vertices of `F` are mapped to i.i.d. nodes drawn
/// from the weights. Chunks use derived seeds and are reduced in order.
pub fn hom_density(f: &GraphSpec, g: &DiscretizedGraphon, samples: usize, seed: u64) -> Result<HomEstimate> {
    sample_edge_products(f.vertices, &f.edges, g, samples, seed)
}

/// Monte Carlo density of the closed walk of length `k ≥ 2`, which equals
/// `Σ λ^k`. For `k ≥ 3` this is `t(C_k, W)`; for `k = 2` the walk repeats
/// its single edge and the estimate is `∫∫ W²`.
pub fn closed_walk_density(k: usize, g: &DiscretizedGraphon, samples: usize, seed: u64) -> Result<HomEstimate> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("closed walks need k ≥ 2, got {k}")));
    }
    let edges: Vec<(usize, usize)> = (0..k).map(|i| (i, (i + 1) % k)).collect();
    sample_edge_products(k, &edges, g, samples, seed)
}

fn sample_edge_products(
    vertices: usize,
    edges: &[(usize, usize)],
    g: &DiscretizedGraphon,
    samples: usize,
    seed: u64,
) -> Result<HomEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("at least 1000 samples required, got {samples}")));
    }
    if edges.is_empty() {
        return Ok(HomEstimate {
            estimate: 1.0,
            std_error: 0.0,
            samples,
            seed,
        });
    }
    let alias = WeightedAliasIndex::new(g.weights.clone())
        .map_err(|e| Error::InvalidArgument(format!("weights unusable for sampling: {e}")))?;
    let chunks = samples.div_ceil(HOM_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, c as u64);
            let count = HOM_CHUNK.min(samples - c * HOM_CHUNK);
            let mut map = vec![0usize; vertices];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for m in map.iter_mut() {
                    *m = alias.sample(&mut r);
                }
                let v: f64 = edges.iter().map(|&(a, b)| g.at(map[a], map[b])).product();
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let m = samples as f64;
    let mean = s / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok(HomEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples,
        seed,
    })
}

pub const EXACT_MAX_BLOCKS: usize = 12;
pub const EXACT_MAX_VERTICES: usize = 6;

/// Exact `t(F, W)` for a step graphon by summing over all block assignments.
pub fn hom_density_exact(f: &GraphSpec, g: &DiscretizedGraphon) -> Result<f64> {
    let m = g.n();
    if m > EXACT_MAX_BLOCKS || f.vertices > EXACT_MAX_VERTICES {
        return Err(Error::SizeCap(format!(
            "exact homomorphism density needs ≤ {EXACT_MAX_BLOCKS} blocks and ≤ {EXACT_MAX_VERTICES} vertices, got {m} and {}",
            f.vertices
        )));
    }
    let v = f.vertices;
    let total = m.pow(v as u32);
    let sum = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut map = [0usize; EXACT_MAX_VERTICES];
            let mut c = code;
            let mut w = 1.0;
            for slot in map.iter_mut().take(v) {
                *slot = c % m;
                c /= m;
                w *= g.weights[*slot];
            }
            w * f.edges.iter().map(|&(a, b)| g.at(map[a], map[b])).product::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutNormBounds {
    pub lower: f64,
    pub upper: f64,
    /// Maximizing sign vectors for the lower bound.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// True when the lower bound comes from exhaustive enumeration.
    pub exact: bool,
}

pub const CUT_NORM_RESTARTS: usize = 20;
/// Node count up to which the sign vector `f` is enumerated exhaustively.
pub const CUT_NORM_EXACT_LIMIT: usize = 16;

/// Bounds on `sup_{f,g ∈ [−1,1]^n} Σ w_i w_j A_ij f_i g_j` for a symmetric
/// `n × n` kernel `a` (entries of any sign).
pub fn cut_norm_bounds_of(weights: &[f64], a: &[f64], seed: u64) -> CutNormBounds {
    let n = weights.len();
    let b: Vec<f64> = (0..n * n)
        .map(|k| weights[k / n] * weights[k % n] * a[k])
        .collect();
    let upper: f64 = b.iter().map(|v| v.abs()).sum();
    // Best response: g_j = sign((Bᵀf)_j), value Σ_j |(Bᵀf)_j|.
    let respond = |f: &[f64]| -> (f64, Vec<f64>) {
        let col: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| b[i * n + j] * f[i]).sum())
            .collect();
        let g = col.iter().map(|c| if *c >= 0.0 { 1.0 } else { -1.0 }).collect();
        (col.iter().map(|c| c.abs()).sum(), g)
    };
    if n <= CUT_NORM_EXACT_LIMIT {
        let best = (0..1u64 << (n - 1))
            .into_par_iter()
            .map(|mask| {
                let f: Vec<f64> = (0..n)
                    .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                let (v, g) = respond(&f);
                (v, mask, f, g)
            })
            .reduce_with(|x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x })
            .unwrap();
        return CutNormBounds {
            lower: best.0,
            upper,
            f: best.2,
            g: best.3,
            exact: true,
        };
    }
    let runs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..CUT_NORM_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rg = rng::stream(seed, r as u64);
            let mut f: Vec<f64> = if r == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| if rg.random::<bool>() { 1.0 } else { -1.0 }).collect()
            };
            let mut value = f64::NEG_INFINITY;
            let mut g;
            loop {
                g = respond(&f).1;
                let (v2, fn_) = respond(&g);
                f = fn_;
                if v2 <= value + 1e-15 * value.abs().max(1e-300) {
                    value = value.max(v2);
                    break;
                }
                value = v2;
            }
            (value, f, g)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|x, y| if y.0 > x.0 { y } else { x })
        .unwrap();
    CutNormBounds {
        lower: best.0,
        upper,
        f: best.1,
        g: best.2,
        exact: false,
    }
}

pub fn cut_norm_bounds(g: &DiscretizedGraphon, seed: u64) -> CutNormBounds {
    cut_norm_bounds_of(&g.weights, &g.kernel, seed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutDistance {
    /// Cut-norm lower bound of `W1 − W2^π` for the aligned `π`.
    pub value: f64,
    /// `‖W1 − W2^π‖₁`, a rigorous upper bound on the cut distance.
    pub l1_upper: f64,
    /// Node `i` of `g1` is matched with node `permutation[i]` of `g2`.
    pub permutation: Vec<usize>,
    pub swaps_tried: usize,
    pub heuristic: bool,
}

fn difference_kernel(g1: &DiscretizedGraphon, g2: &DiscretizedGraphon, perm: &[usize]) -> Vec<f64> {
    let n = g1.n();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            row[j] = g1.at(i, j) - g2.at(perm[i], perm[j]);
        }
    });
    d
}

/// Work budget (in kernel-entry visits) for the swap descent.
const CUT_DISTANCE_BUDGET: f64 = 2e9;

/// Heuristic upper-bound surrogate for the cut distance of two graphons
/// with the same weight multiset: nodes are matched by sorted degree within
/// weight classes, then improved by pair swaps.
pub fn cut_distance_upper(g1: &DiscretizedGraphon, g2: &DiscretizedGraphon, seed: u64) -> Result<CutDistance> {
    let n = g1.n();
    if g2.n() != n {
        return Err(Error::Incompatible(format!("node counts {n} and {}", g2.n())));
    }
    let classes = weight_classes(&g1.weights);
    let classes2 = weight_classes(&g2.weights);
    if classes.len() != classes2.len()
        || classes
            .iter()
            .zip(&classes2)
            .any(|(a, b)| a.1.len() != b.1.len() || (a.0 - b.0).abs() > STRUCTURE_TOL)
    {
        return Err(Error::Incompatible("weight multisets differ".into()));
    }
    let key = |g: &DiscretizedGraphon| -> Vec<(f64, f64)> {
        (0..g.n())
            .map(|i| {
                let r = g.row(i);
                let d: f64 = r.iter().zip(&g.weights).map(|(a, w)| a * w).sum();
                let d2: f64 = r.iter().zip(&g.weights).map(|(a, w)| a * a * w).sum();
                (d, d2)
            })
            .collect()
    };
    let k1 = key(g1);
    let k2 = key(g2);
    let order = |k: &[(f64, f64)], members: &[usize]| -> Vec<usize> {
        let mut m = members.to_vec();
        m.sort_by(|&a, &b| {
            k[a].0
                .total_cmp(&k[b].0)
                .then(k[a].1.total_cmp(&k[b].1))
                .then(a.cmp(&b))
        });
        m
    };
    let mut perm = vec![0usize; n];
    for ((_, m1), (_, m2)) in classes.iter().zip(&classes2) {
        for (a, b) in order(&k1, m1).into_iter().zip(order(&k2, m2)) {
            perm[a] = b;
        }
    }
    let objective = |p: &[usize]| cut_norm_bounds_of(&g1.weights, &difference_kernel(g1, g2, p), seed).lower;
    let mut best = objective(&perm);
    let cost = (n * n) as f64 * (CUT_NORM_RESTARTS as f64) * 10.0;
    let budget = ((CUT_DISTANCE_BUDGET / cost) as usize).max(1);
    let mut tried = 0;
    'outer: loop {
        let mut improved = false;
        for (_, members) in &classes {
            for x in 0..members.len() {
                for y in x + 1..members.len() {
                    if tried >= budget || best <= 0.0 {
                        break 'outer;
                    }
                    let (a, b) = (members[x], members[y]);
                    perm.swap(a, b);
                    tried += 1;
                    let v = objective(&perm);
                    if v < best - 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        perm.swap(a, b);
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    let diff = difference_kernel(g1, g2, &perm);
    let l1_upper = (0..n * n)
        .map(|k| g1.weights[k / n] * g1.weights[k % n] * diff[k].abs())
        .sum();
    Ok(CutDistance {
        value: best,
        l1_upper,
        permutation: perm,
        swaps_tried: tried,
        heuristic: true,
    })
}

/// Nodes grouped by equal weight, in increasing weight order.
fn weight_classes(weights: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((w, m)) if (weights[i] - *w).abs() <= STRUCTURE_TOL => m.push(i),
            _ => out.push((weights[i], vec![i])),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VaradhanEstimate {
    pub t: f64,
    /// `H(x, y, t)` in the μ convention.
    pub heat: f64,
    /// `−4t log H`.
    pub value: f64,
    pub tail_bound: f64,
}

/// Relative size of the truncation tail that invalidates an estimate.
pub const VARADHAN_TAIL_FRACTION: f64 = 1e-3;

/// Largest accepted worst-case relative rounding error of `H`. The log
/// only needs `H` to this accuracy.
pub const VARADHAN_ROUNDING: f64 = 1e-2;

/// `−4t log H(x, y, t)` from the spectral expansion.
pub fn varadhan_estimate(domain: &ModalDomain, x: Point, y: Point, t: f64) -> Result<VaradhanEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    for p in [x, y] {
        if domain.polygon.locate(p) != Location::Interior {
            return Err(Error::OutsideDomain(p[0], p[1]));
        }
    }
    let b = &domain.basis;
    let px = domain.modes_at(x)?;
    let py = domain.modes_at(y)?;
    let heat = b.heat_kernel(&px, &py, t);
    let tail = if b.is_complete() {
        0.0
    } else {
        let last = *b.lambdas.last().unwrap();
        let sx: f64 = px.iter().map(|v| v * v).sum();
        let sy: f64 = py.iter().map(|v| v * v).sum();
        (-last * t).exp() * (sx * sy).sqrt()
    };
    if !(heat > 0.0) {
        return Err(Error::NonPositiveKernel(heat));
    }
    let magnitude: f64 = b
        .lambdas
        .iter()
        .zip(px.iter().zip(&py))
        .map(|(l, (a, c))| (-l * t).exp() * (a * c).abs())
        .sum();
    // Worst-case rounding of an N-term sum is N ε Σ|terms|.
    let floor = b.n_modes() as f64 * f64::EPSILON * magnitude / VARADHAN_ROUNDING;
    if heat < floor {
        return Err(Error::Cancellation { heat, floor });
    }
    if tail > VARADHAN_TAIL_FRACTION * heat {
        return Err(Error::TailBound {
            tail,
            limit: VARADHAN_TAIL_FRACTION * heat,
        });
    }
    Ok(VaradhanEstimate {
        t,
        heat,
        value: -4.0 * t * heat.ln(),
        tail_bound: tail,
    })
}

/// Default output name stem for a graphon built from `spec`.
pub fn heat_graphon_stem(spec: &HeatGraphonSpec) -> PathBuf {
    PathBuf::from(format!(
        "graphon_{}_{}_t{}{}",
        spec.drum,
        spec.bc,
        spec.t0,
        if spec.collapse_boundary { "_collapsed" } else { "" }
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ModeCount;
    use crate::geometry::load_drum;

    fn two_block() -> DiscretizedGraphon {
        step_graphon(vec![0.5, 0.5], vec![vec![0.6, 0.2], vec![0.2, 0.4]]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_graphons() {
        let bad_sum = DiscretizedGraphon::new(vec![vec![0.0]; 2], vec![0.5, 0.6], vec![0.1; 4], Provenance::Step { blocks: 2 });
        assert!(bad_sum.is_err());
        let asym = DiscretizedGraphon::new(vec![vec![0.0]; 2], vec![0.5, 0.5], vec![0.1, 0.2, 0.3, 0.1], Provenance::Step { blocks: 2 });
        assert!(asym.is_err());
        let range = DiscretizedGraphon::new(vec![vec![0.0]; 1], vec![1.0], vec![1.5], Provenance::Step { blocks: 1 });
        assert!(range.is_err());
        assert!(constant_graphon(3, 1.2).is_err());
    }

    #[test]
    fn s1_kernel_values() {
        assert!((s1_kernel(0.3, 0.3) - 0.75).abs() < 1e-15);
        assert!((s1_kernel(0.0, std::f64::consts::PI) - 0.5).abs() < 1e-15);
        let g = sphere_graphon(SphereKind::S1, 300, 1).unwrap();
        let lo = 23.0 / 64.0;
        assert!(g.kernel.iter().all(|&v| v >= lo - 1e-15 && v <= 0.75 + 1e-15));
    }

    #[test]
    fn two_block_spectrum_matches_closed_form() {
        let g = two_block();
        let s = spectrum(&g, 2).unwrap();
        // S = diag(√w) B diag(√w) = [[0.3, 0.1], [0.1, 0.2]].
        let (a, b, c): (f64, f64, f64) = (0.3, 0.1, 0.2);
        let m = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert!((s.eigenvalues[0] - (m + r)).abs() < 1e-12);
        assert!((s.eigenvalues[1] - (m - r)).abs() < 1e-12);
    }

    #[test]
    fn constant_graphon_is_rank_one() {
        let g = constant_graphon(50, 0.3).unwrap();
        let s = spectrum(&g, 5).unwrap();
        assert!((s.eigenvalues[0] - 0.3).abs() < 1e-12);
        assert!(s.eigenvalues[1..].iter().all(|v| v.abs() < 1e-12));
        let d = degree(&g, 10, None);
        assert!(d.degrees.iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert_eq!(rw_distance(&g, 3, 17), 0.0);
        let tw = twin_scan(&g, 1e-9, 0).unwrap();
        assert_eq!(tw.pairs.len(), 50 * 49 / 2);
    }

    #[test]
    fn clustering() {
        let c = cluster_eigenvalues(&[0.5, 0.064, 0.063, 0.062, 0.061, 1e-14, -1e-14], 0.1, 1e-9);
        let m: Vec<usize> = c.iter().map(|c| c.multiplicity).collect();
        assert_eq!(m, vec![1, 4, 2]);
    }

    #[test]
    fn cycle_trace_matches_eigenvalues() {
        let g = sphere_graphon(SphereKind::S1, 200, 5).unwrap();
        let all = full_spectrum(&g);
        for k in 2..=5 {
            let s: f64 = all.iter().map(|l| l.powi(k as i32)).sum();
            assert!((cycle_trace(&g, k) - s).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn hom_density_basics() {
        let g = constant_graphon(10, 0.4).unwrap();
        let f = GraphSpec::from_name("c4").unwrap();
        let h = hom_density(&f, &g, 5000, 3).unwrap();
        assert!((h.estimate - 0.4f64.powi(4)).abs() < 1e-12);
        let single = GraphSpec::from_name("vertex").unwrap();
        assert_eq!(hom_density(&single, &g, 5000, 3).unwrap().estimate, 1.0);
        assert!((hom_density_exact(&f, &g).unwrap() - 0.4f64.powi(4)).abs() < 1e-12);
        assert!(hom_density(&f, &g, 10, 3).is_err());
        assert!(matches!(hom_density_exact(&GraphSpec::path(7).unwrap(), &g), Err(Error::SizeCap(_))));
        assert!(GraphSpec::new(3, vec![(0, 0)]).is_err());
        assert!(GraphSpec::new(3, vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn exact_density_of_c3_is_trace() {
        let g = step_graphon(vec![0.2, 0.3, 0.5], vec![vec![0.9, 0.1, 0.4], vec![0.1, 0.5, 0.3], vec![0.4, 0.3, 0.7]]).unwrap();
        let t = hom_density_exact(&GraphSpec::cycle(3).unwrap(), &g).unwrap();
        assert!((t - cycle_trace(&g, 3)).abs() < 1e-14);
    }

    #[test]
    fn cut_norm_simple_cases() {
        let z = constant_graphon(5, 0.0).unwrap();
        let b = cut_norm_bounds(&z, 0);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let p = constant_graphon(40, 0.35).unwrap();
        let b = cut_norm_bounds(&p, 0);
        assert!((b.lower - 0.35).abs() < 1e-12 && (b.upper - 0.35).abs() < 1e-12);
        assert!(!b.exact);
    }

    #[test]
    fn cut_distance_cases() {
        let g = two_block();
        let same = cut_distance_upper(&g, &g, 0).unwrap();
        assert!(same.value.abs() < 1e-12);
        let p = constant_graphon(6, 0.7).unwrap();
        let q = constant_graphon(6, 0.2).unwrap();
        assert!((cut_distance_upper(&p, &q, 0).unwrap().value - 0.5).abs() < 1e-12);
        assert!(cut_distance_upper(&p, &g, 0).is_err());
    }

    #[test]
    fn json_and_binary_round_trip() {
        let g = sphere_graphon(SphereKind::S3, 20, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let jp = dir.path().join("g.json");
        let bp = dir.path().join("g.grph");
        g.write_json(&jp).unwrap();
        g.write_binary(&bp).unwrap();
        for h in [DiscretizedGraphon::read_json(&jp).unwrap(), DiscretizedGraphon::read_binary(&bp).unwrap()] {
            assert_eq!(h.kernel, g.kernel);
            assert_eq!(h.weights, g.weights);
            assert_eq!(h.nodes, g.nodes);
            match h.provenance {
                Provenance::File { source: Some(s), .. } => assert_eq!(*s, g.provenance),
                other => panic!("unexpected provenance {other:?}"),
            }
        }
        std::fs::write(&bp, b"GRPH2 junk").unwrap();
        assert!(matches!(DiscretizedGraphon::read_binary(&bp), Err(Error::Format(_))));
    }

    #[test]
    fn neumann_heat_graphon_has_constant_degree() {
        let p = load_drum(DrumId::Drum1, 1.0).unwrap();
        let d = ModalDomain::solve(&p, 3, BoundaryCondition::Neumann, ModeCount::All, 1e-8).unwrap();
        let k = normalization_k(&[&d.basis], 0.05).unwrap();
        let spec = HeatGraphonSpec {
            drum: DrumId::Drum1,
            bc: BoundaryCondition::Neumann,
            t0: 0.05,
            k,
            n_modes: 0,
            collapse_boundary: false,
        };
        let g = heat_graphon(&spec, &d).unwrap();
        let deg = degree(&g, 20, None);
        assert!(deg.cv < 1e-3, "cv {}", deg.cv);
        assert!((deg.mean - 1.0 / k).abs() < 1e-3 / k);
        let collapsed = HeatGraphonSpec { collapse_boundary: true, ..spec };
        assert!(heat_graphon(&collapsed, &d).is_err());
    }

    #[test]
    fn collapsed_dirichlet_graphon_has_zero_boundary_row() {
        let p = load_drum(DrumId::Drum2, 1.0).unwrap();
        let d = ModalDomain::solve(&p, 2, BoundaryCondition::Dirichlet, ModeCount::All, 1e-8).unwrap();
        let k = normalization_k(&[&d.basis], 0.05).unwrap();
        let spec = HeatGraphonSpec {
            drum: DrumId::Drum2,
            bc: BoundaryCondition::Dirichlet,
            t0: 0.05,
            k,
            n_modes: 0,
            collapse_boundary: true,
        };
        let g = heat_graphon(&spec, &d).unwrap();
        let b = g.n() - 1;
        let absorbed: f64 = (0..d.mesh.n_triangles())
            .filter(|&t| d.mesh.triangles[t].iter().all(|&v| d.mesh.boundary[v]))
            .map(|t| d.mesh.triangle_area(t))
            .sum();
        assert!(absorbed > 0.0);
        assert!((g.weights[b] - absorbed / d.basis.measure).abs() < 1e-12);
        assert!(twin_scan_relative(&g, 1e-4, 0).unwrap().pairs.is_empty());
        assert!(g.row(b).iter().all(|&v| v == 0.0));
        assert!((0..g.n()).all(|i| g.at(i, b) == 0.0));
        let wrong = HeatGraphonSpec { drum: DrumId::Drum1, ..spec };
        assert!(heat_graphon(&wrong, &d).is_err());
    }
}
