//! Graphon Kuramoto dynamics on quadrature nodes, the linearized operator
//! `K_W = T_W − D_W`, and the drum degree-gap experiment.
//!
//! Coupling strength is fixed to 1. The steady-state phase profile is called
//! `phi_profile` here; `ψ` is reserved for Laplace eigenfunctions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BoundaryCondition, ModalDomain, ModeCount};
use crate::geometry::{inscribed_circle, load_drum, DrumId};
use crate::graphon::{degree, heat_graphon, normalization_k, DegreeReport, DiscretizedGraphon, HeatGraphonSpec};

#[derive(Clone, Debug)]
pub struct KuramotoSystem {
    pub graphon: DiscretizedGraphon,
    pub omegas: Vec<f64>,
}

impl KuramotoSystem {
    pub fn new(graphon: DiscretizedGraphon, omegas: Vec<f64>) -> Result<KuramotoSystem> {
        if omegas.len() != graphon.n() {
            return Err(Error::InvalidArgument(format!(
                "{} frequencies for {} nodes",
                omegas.len(),
                graphon.n()
            )));
        }
        if let Some(w) = omegas.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite frequency {w}")));
        }
        Ok(KuramotoSystem { graphon, omegas })
    }

    /// Identical frequencies `omega` at every node.
    pub fn uniform(graphon: DiscretizedGraphon, omega: f64) -> Result<KuramotoSystem> {
        let n = graphon.n();
        KuramotoSystem::new(graphon, vec![omega; n])
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }
}

/// Unwrapped phases at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuramotoState {
    pub t: f64,
    pub thetas: Vec<f64>,
}

/// `v_i = ω_i + Σ_j w_j W_ij sin(θ_j − θ_i)`.
pub fn rhs(system: &KuramotoSystem, state: &KuramotoState) -> Result<Vec<f64>> {
    if state.thetas.len() != system.n() {
        return Err(Error::InvalidArgument(format!(
            "state has {} phases, system has {} nodes",
            state.thetas.len(),
            system.n()
        )));
    }
    Ok(velocity(system, &state.thetas))
}

fn velocity(system: &KuramotoSystem, thetas: &[f64]) -> Vec<f64> {
    let g = &system.graphon;
    // sin(θj − θi) = sin θj cos θi − cos θj sin θi
    let ws: Vec<f64> = thetas.iter().zip(&g.weights).map(|(t, w)| w * t.sin()).collect();
    let wc: Vec<f64> = thetas.iter().zip(&g.weights).map(|(t, w)| w * t.cos()).collect();
    (0..system.n())
        .into_par_iter()
        .map(|i| {
            let row = g.row(i);
            let s: f64 = row.iter().zip(&ws).map(|(a, b)| a * b).sum();
            let c: f64 = row.iter().zip(&wc).map(|(a, b)| a * b).sum();
            system.omegas[i] + thetas[i].cos() * s - thetas[i].sin() * c
        })
        .collect()
}

/// `|Σ_j w_j e^{iθ_j}|`.
pub fn order_parameter(weights: &[f64], thetas: &[f64]) -> f64 {
    let (c, s) = weights
        .iter()
        .zip(thetas)
        .fold((0.0, 0.0), |(c, s), (w, t)| (c + w * t.cos(), s + w * t.sin()));
    c.hypot(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
    pub method: Method,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: 1e-2,
            t_end: 10.0,
            stride: 10,
            method: Method::Rk4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub order: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> KuramotoState {
        KuramotoState {
            t: *self.times.last().expect("trajectory has at least one sample"),
            thetas: self.states.last().expect("trajectory has at least one sample").clone(),
        }
    }
}

/// Fixed-step classical RK4 from `state0.t` to `opts.t_end`. The last step is
/// shortened to land on `t_end` exactly.
pub fn integrate(system: &KuramotoSystem, state0: &KuramotoState, opts: IntegrateOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end >= state0.t) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {} precedes the start time {}",
            opts.t_end, state0.t
        )));
    }
    rhs(system, state0)?;
    let stride = opts.stride.max(1);
    let span = opts.t_end - state0.t;
    let steps = ((span / opts.dt) - 1e-9).ceil().max(0.0) as usize;
    let w = &system.graphon.weights;
    let mut traj = Trajectory {
        times: vec![state0.t],
        states: vec![state0.thetas.clone()],
        order: vec![order_parameter(w, &state0.thetas)],
    };
    let mut theta = state0.thetas.clone();
    let n = theta.len();
    let mut tmp = vec![0.0; n];
    for step in 1..=steps {
        let t_prev = state0.t + (step - 1) as f64 * opts.dt;
        let t = if step == steps { opts.t_end } else { state0.t + step as f64 * opts.dt };
        let h = t - t_prev;
        let k1 = velocity(system, &theta);
        for i in 0..n {
            tmp[i] = theta[i] + 0.5 * h * k1[i];
        }
        let k2 = velocity(system, &tmp);
        for i in 0..n {
            tmp[i] = theta[i] + 0.5 * h * k2[i];
        }
        let k3 = velocity(system, &tmp);
        for i in 0..n {
            tmp[i] = theta[i] + h * k3[i];
        }
        let k4 = velocity(system, &tmp);
        for i in 0..n {
            theta[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        if step % stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(theta.clone());
            traj.order.push(order_parameter(w, &theta));
        }
    }
    Ok(traj)
}

/// Spectrum of the linearization about a phase-locked profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Eigenvalues of `√w (W cos Δφ) √w − diag(d)`, descending.
    pub eigenvalues: Vec<f64>,
    pub degree: DegreeReport,
    /// Finite-dimensional stand-in for the continuous spectrum of `D_W`:
    /// the range of the degree values.
    pub support_proxy: (f64, f64),
    /// `max_i |(K_W 1)_i|`.
    pub constant_residual: f64,
    pub profile_constant: bool,
}

/// `A_ij = W_ij cos(φ_j − φ_i)` (or `W` itself for a constant profile).
fn coupling(g: &DiscretizedGraphon, phi_profile: Option<&[f64]>) -> (Vec<f64>, bool) {
    let n = g.n();
    let constant = phi_profile.is_none_or(|p| {
        p.iter().all(|v| {
            let d = (v - p[0]).rem_euclid(std::f64::consts::TAU);
            d.min(std::f64::consts::TAU - d) < 1e-15
        })
    });
    if constant {
        return (g.kernel.clone(), true);
    }
    let p = phi_profile.unwrap();
    let a = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (0..n).map(move |j| g.at(i, j) * (p[j] - p[i]).cos()))
        .collect();
    (a, false)
}

/// `(K_W η)_i = Σ_j w_j A_ij (η_j − η_i)`.
pub fn apply_linearized(g: &DiscretizedGraphon, phi_profile: Option<&[f64]>, eta: &[f64]) -> Result<Vec<f64>> {
    let n = g.n();
    if eta.len() != n || phi_profile.is_some_and(|p| p.len() != n) {
        return Err(Error::InvalidArgument("vector length does not match the graphon".into()));
    }
    let (a, _) = coupling(g, phi_profile);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| g.weights[j] * a[i * n + j] * (eta[j] - eta[i]))
                .sum()
        })
        .collect())
}

pub fn linearized_operator(
    g: &DiscretizedGraphon,
    phi_profile: Option<&[f64]>,
    bins: usize,
) -> Result<StabilityReport> {
    let n = g.n();
    if phi_profile.is_some_and(|p| p.len() != n) {
        return Err(Error::InvalidArgument("phase profile length does not match the graphon".into()));
    }
    let (a, profile_constant) = coupling(g, phi_profile);
    let d: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g.weights[j] * a[i * n + j]).sum())
        .collect();
    let sw: Vec<f64> = g.weights.iter().map(|w| w.sqrt()).collect();
    let mut m = DMatrix::from_fn(n, n, |i, j| sw[i] * a[i * n + j] * sw[j]);
    for i in 0..n {
        m[(i, i)] -= d[i];
    }
    let m = (&m + m.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let ones = vec![1.0; n];
    let constant_residual = apply_linearized(g, phi_profile, &ones)?
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    let degree = if profile_constant {
        degree(g, bins, None)
    } else {
        let live = DiscretizedGraphon {
            kernel: a.iter().map(|v| v.max(0.0)).collect(),
            ..g.clone()
        };
        let mut r = degree(&live, bins, None);
        r.degrees = d.clone();
        r
    };
    Ok(StabilityReport {
        eigenvalues,
        support_proxy: (degree.min, degree.max),
        degree,
        constant_residual,
        profile_constant,
    })
}

/// Settings for the drum degree-gap experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub drums: Vec<DrumId>,
    pub bc: BoundaryCondition,
    pub t0_sweep: Vec<f64>,
    /// Fine depth; the error bar compares against `depth − 1`.
    pub depth: u32,
    /// 0 selects the truncation rule `e^{-(λ_N − λ_0) t0} < 1e-8`.
    pub n_modes: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            drums: DrumId::BOTH.to_vec(),
            bc: BoundaryCondition::Dirichlet,
            t0_sweep: T0_SWEEP.to_vec(),
            depth: 4,
            n_modes: 0,
            seed: 0,
            dt: 1e-2,
            t_end: 10.0,
            bins: 40,
        }
    }
}

pub const T0_SWEEP: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const DEFAULT_T0: f64 = 0.05;
/// Mode truncation ratio relative to the leading decay factor.
pub const TRUNCATION_RATIO: f64 = 1e-8;
const SOLVE_TOL: f64 = 1e-9;
/// Gaps below this fraction of the max degree are treated as rounding noise.
const GAP_FLOOR: f64 = 1e-9;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drums.len() != 2 || self.drums[0] == self.drums[1] {
            return Err(Error::InvalidArgument("the experiment needs two distinct drums".into()));
        }
        if self.t0_sweep.is_empty() || self.t0_sweep.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument("t0 sweep must be non-empty and positive".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument("dt must be positive and t_end non-negative".into()));
        }
        Ok(())
    }

    fn mode_count(&self) -> ModeCount {
        if self.n_modes > 0 {
            ModeCount::Fixed(self.n_modes)
        } else {
            let t = self.t0_sweep.iter().copied().fold(f64::INFINITY, f64::min);
            ModeCount::ForTime { t, ratio: TRUNCATION_RATIO }
        }
    }
}

/// Both drums at two consecutive depths.
#[derive(Clone, Debug)]
pub struct DrumPair {
    pub coarse: [ModalDomain; 2],
    pub fine: [ModalDomain; 2],
}

impl DrumPair {
    pub fn solve(cfg: &ExperimentConfig) -> Result<DrumPair> {
        cfg.validate()?;
        let modes = cfg.mode_count();
        let solve = |depth: u32| -> Result<[ModalDomain; 2]> {
            let doms = cfg
                .drums
                .par_iter()
                .map(|&d| ModalDomain::solve(&load_drum(d, 1.0)?, depth, cfg.bc, modes, SOLVE_TOL))
                .collect::<Result<Vec<_>>>()?;
            let [a, b]: [ModalDomain; 2] = doms.try_into().expect("two drums");
            Ok([a, b])
        };
        Ok(DrumPair {
            coarse: solve(cfg.depth - 1)?,
            fine: solve(cfg.depth)?,
        })
    }

    fn check(&self) -> Result<()> {
        let depth = |d: &ModalDomain| d.mesh.depth;
        let (c, f) = (&self.coarse, &self.fine);
        if depth(&c[0]) != depth(&c[1]) || depth(&f[0]) != depth(&f[1]) || depth(&f[0]) != depth(&c[0]) + 1 {
            return Err(Error::InvalidArgument(format!(
                "refinement mismatch: coarse depths ({}, {}), fine depths ({}, {})",
                depth(&c[0]),
                depth(&c[1]),
                depth(&f[0]),
                depth(&f[1])
            )));
        }
        let bcs = [&c[0], &c[1], &f[0], &f[1]].map(|d| d.basis.bc);
        if bcs.iter().any(|b| *b != bcs[0]) {
            return Err(Error::InvalidArgument("drum bases use different boundary conditions".into()));
        }
        Ok(())
    }
}

/// Results for a single `t0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapPoint {
    pub t0: f64,
    pub k_fine: f64,
    pub k_coarse: f64,
    /// Per drum, at the fine depth.
    pub degrees: [DegreeReport; 2],
    pub stability: [Vec<f64>; 2],
    pub max_fine: [f64; 2],
    pub max_coarse: [f64; 2],
    /// `max d(drum 2) − max d(drum 1)` at the fine depth.
    pub gap: f64,
    /// `|gap(fine) − gap(coarse)|`.
    pub error: f64,
    pub significant: bool,
    pub sign_matches_radii: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeGapReport {
    pub drums: [DrumId; 2],
    pub bc: BoundaryCondition,
    pub depth: u32,
    pub n_modes: [usize; 2],
    pub inscribed_radii: [f64; 2],
    pub points: Vec<GapPoint>,
    pub verdict: String,
}

impl DegreeGapReport {
    pub fn significant_t0(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.significant).map(|p| p.t0).collect()
    }
}

/// Max degrees of the two drum graphons at one depth, with shared `K`.
fn max_degrees(doms: &[ModalDomain; 2], t0: f64, bins: usize) -> Result<(f64, [DegreeReport; 2], [DiscretizedGraphon; 2])> {
    let k = normalization_k(&[&doms[0].basis, &doms[1].basis], t0)?;
    let mut reports = Vec::with_capacity(2);
    let mut graphons = Vec::with_capacity(2);
    for dom in doms {
        let spec = HeatGraphonSpec {
            drum: dom.polygon.id.parse()?,
            bc: dom.basis.bc,
            t0,
            k,
            n_modes: 0,
            collapse_boundary: false,
        };
        let g = heat_graphon(&spec, dom)?;
        reports.push(degree(&g, bins, None));
        graphons.push(g);
    }
    let [r0, r1]: [DegreeReport; 2] = reports.try_into().expect("two drums");
    let [g0, g1]: [DiscretizedGraphon; 2] = graphons.try_into().expect("two drums");
    Ok((k, [r0, r1], [g0, g1]))
}

/// Max-degree gap between the two drums over `cfg.t0_sweep`, with the
/// difference between consecutive depths as the error bar.
pub fn degree_gap_experiment(pair: &DrumPair, cfg: &ExperimentConfig) -> Result<DegreeGapReport> {
    cfg.validate()?;
    pair.check()?;
    let drums: [DrumId; 2] = [pair.fine[0].polygon.id.parse()?, pair.fine[1].polygon.id.parse()?];
    let radii = [
        inscribed_circle(&pair.fine[0].polygon)?.radius,
        inscribed_circle(&pair.fine[1].polygon)?.radius,
    ];
    let points = cfg
        .t0_sweep
        .par_iter()
        .map(|&t0| -> Result<GapPoint> {
            let (k_coarse, coarse, _) = max_degrees(&pair.coarse, t0, cfg.bins)?;
            let (k_fine, fine, graphons) = max_degrees(&pair.fine, t0, cfg.bins)?;
            let hi = fine[0].max.max(fine[1].max);
            let range = Some((0.0, if hi > 0.0 { hi } else { 1.0 }));
            let degrees = [
                degree(&graphons[0], cfg.bins, range),
                degree(&graphons[1], cfg.bins, range),
            ];
            let stability = [
                linearized_operator(&graphons[0], None, cfg.bins)?.eigenvalues,
                linearized_operator(&graphons[1], None, cfg.bins)?.eigenvalues,
            ];
            let max_fine = [fine[0].max, fine[1].max];
            let max_coarse = [coarse[0].max, coarse[1].max];
            let gap = max_fine[1] - max_fine[0];
            let error = (gap - (max_coarse[1] - max_coarse[0])).abs();
            let floor = GAP_FLOOR * hi.abs();
            let significant = gap.abs() > 3.0 * error && gap.abs() > floor;
            let sign_matches_radii = (gap > 0.0) == (radii[1] > radii[0]);
            Ok(GapPoint {
                t0,
                k_fine,
                k_coarse,
                degrees,
                stability,
                max_fine,
                max_coarse,
                gap,
                error,
                significant,
                sign_matches_radii,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sig: Vec<String> = points
        .iter()
        .filter(|p| p.significant)
        .map(|p| format!("{}{}", p.t0, if p.sign_matches_radii { "" } else { " (sign opposite to radii)" }))
        .collect();
    let verdict = if sig.is_empty() {
        "no gap (within error)".to_string()
    } else {
        format!("significant gap (> 3x error bar) at t0 = {}", sig.join(", "))
    };
    Ok(DegreeGapReport {
        drums,
        bc: cfg.bc,
        depth: cfg.depth,
        n_modes: [pair.fine[0].basis.n_modes(), pair.fine[1].basis.n_modes()],
        inscribed_radii: radii,
        points,
        verdict,
    })
}

/// Solves the drums and runs [`degree_gap_experiment`].
pub fn run_degree_gap(cfg: &ExperimentConfig) -> Result<DegreeGapReport> {
    let pair = DrumPair::solve(cfg)?;
    degree_gap_experiment(&pair, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{constant_graphon, step_graphon};
    use approx::assert_abs_diff_eq;

    fn two_node(w: [f64; 2]) -> DiscretizedGraphon {
        step_graphon(w.to_vec(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn equal_phases_move_with_omega() {
        let sys = KuramotoSystem::uniform(constant_graphon(5, 0.4).unwrap(), 1.5).unwrap();
        let v = rhs(&sys, &KuramotoState { t: 0.0, thetas: vec![0.3; 5] }).unwrap();
        for x in v {
            assert_abs_diff_eq!(x, 1.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_node_velocity_by_hand() {
        let g = two_node([0.25, 0.75]);
        let sys = KuramotoSystem::uniform(g, 0.0).unwrap();
        let v = rhs(&sys, &KuramotoState { t: 0.0, thetas: vec![0.0, std::f64::consts::FRAC_PI_2] }).unwrap();
        // v_1 = w_2 sin(π/2), v_2 = w_1 sin(−π/2)
        assert_abs_diff_eq!(v[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], -0.25, epsilon = 1e-15);
    }

    #[test]
    fn rk4_is_fourth_order() {
        // Two equal-weight nodes: δ' = −sin δ, so tan(δ/2) = tan(δ0/2) e^{−t}.
        let sys = KuramotoSystem::new(two_node([0.5, 0.5]), vec![0.0, 0.0]).unwrap();
        let d0: f64 = 2.5;
        let exact = 2.0 * ((d0 / 2.0).tan() * (-2.0f64).exp()).atan();
        let err = |dt: f64| {
            let opts = IntegrateOptions { dt, t_end: 2.0, stride: 1000, method: Method::Rk4 };
            let tr = integrate(&sys, &KuramotoState { t: 0.0, thetas: vec![0.0, d0] }, opts).unwrap();
            let s = tr.last();
            (s.thetas[1] - s.thetas[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn linearization_of_constant_graphon() {
        let n = 6;
        let p = 0.3;
        let r = linearized_operator(&constant_graphon(n, p).unwrap(), None, 10).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[0], 0.0, epsilon = 1e-12);
        for &l in &r.eigenvalues[1..] {
            assert_abs_diff_eq!(l, -p, epsilon = 1e-12);
        }
        assert!(r.constant_residual < 1e-12);
        assert!(r.profile_constant);
    }

    #[test]
    fn twisted_profile_uses_cosine_weights() {
        let g = two_node([0.5, 0.5]);
        let phi = [0.0, 1.0];
        let r = linearized_operator(&g, Some(&phi), 4).unwrap();
        assert!(!r.profile_constant);
        // S = ½ [[1, c], [c, 1]] − ½(1 + c) I has eigenvalues {0, −c}.
        let c = 1.0f64.cos();
        assert_abs_diff_eq!(r.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.eigenvalues[1], -c, epsilon = 1e-14);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = ExperimentConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.t0_sweep, cfg.t0_sweep);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"depht": 3}"#).is_err());
        let partial: ExperimentConfig = serde_json::from_str(r#"{"bc": "neumann", "depth": 2}"#).unwrap();
        assert_eq!(partial.bc, BoundaryCondition::Neumann);
        assert_eq!(partial.depth, 2);
    }

    #[test]
    fn neumann_control_has_no_gap() {
        let cfg = ExperimentConfig {
            bc: BoundaryCondition::Neumann,
            depth: 3,
            t0_sweep: vec![0.1, 0.2],
            ..ExperimentConfig::default()
        };
        let r = run_degree_gap(&cfg).unwrap();
        assert!(r.significant_t0().is_empty(), "{:?}", r.points.iter().map(|p| (p.gap, p.error)).collect::<Vec<_>>());
        for p in &r.points {
            assert!((p.max_fine[0] * p.k_fine - 1.0).abs() < 1e-4);
            assert!((p.max_fine[1] * p.k_fine - 1.0).abs() < 1e-4, "{} {:?}", p.t0, p.max_fine.map(|m| m * p.k_fine - 1.0));
        }
    }
}
