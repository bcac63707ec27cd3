//! The `graphonlab` command line.
//!
//! Every command except `report` writes into a fresh run directory under
//! `--out` that appears only once the command has succeeded. Exit codes: 2
//! for configuration errors, 3 for solver non-convergence, 4 for numerical
//! quality failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::dynamics::{
    integrate, linearized_operator, DrumPair, ExperimentConfig, IntegrateOptions, KuramotoState, KuramotoSystem,
    Method, DEFAULT_T0, T0_SWEEP, TRUNCATION_RATIO,
};
use crate::error::{Error, Result};
use crate::fem::{richardson, BoundaryCondition, ModalDomain, ModeCount};
use crate::geometry::{inscribed_circle, load_drum, triangulate, DrumId};
use crate::graphon::{
    check_clip_budget, closed_walk_density, constant_graphon, cut_distance_upper, cut_norm_bounds, cycle_trace,
    degree, heat_graphon, hom_density, normalization_k, rw_matrix, sample_indices, spectrum, sphere_graphon,
    step_graphon, twin_scan_relative, DiscretizedGraphon, GraphSpec, HeatGraphonSpec, Provenance, SphereKind,
};
use crate::report::{
    csv_bytes, histogram_csv, histogram_svg, values_csv, verify_run, write_degree_gap, FileDigest, RunDir,
    RunManifest,
};
use crate::rng;

const SOLVE_TOL: f64 = 1e-9;

#[derive(Parser, Debug, Serialize)]
#[command(name = "graphonlab", version, about = "Drum heat-kernel graphons, sphere graphons and graphon Kuramoto stability")]
pub struct Cli {
    /// Seed for every stochastic step (default 0, or the config file's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Experiment config (JSON); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Triangulate the drums and write meshes plus geometry facts.
    DrumMesh(MeshArgs),
    /// Laplace eigenvalues of the drums with an isospectrality table.
    DrumEigs(EigsArgs),
    #[command(subcommand)]
    /// Build and analyze discretized graphons
    Graphon(GraphonCmd),
    #[command(subcommand)]
    /// Kuramoto dynamics on graphons
    Dyn(DynCmd),
    /// Verify a finished run against its manifest and print its summary.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct MeshArgs {
    /// drum1, drum2 or both.
    #[arg(long, default_value = "both")]
    pub drum: String,
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Args, Debug, Serialize)]
pub struct EigsArgs {
    #[arg(long, default_value = "both")]
    pub drum: String,
    #[arg(long)]
    pub bc: Option<BoundaryCondition>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// Also write each basis as JSON.
    #[arg(long)]
    pub export_basis: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    S1,
    S3,
    Constant,
    Step,
    Heat,
}

/// Where a graphon comes from: a file or one of the constructors.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GraphonArgs {
    /// Graphon file (`.json`, or `.grph` for the binary format).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Node count for sphere and constant graphons.
    #[arg(long)]
    pub n: Option<usize>,
    /// Constant graphon value.
    #[arg(long)]
    pub p: Option<f64>,
    /// Step graphon block matrix, rows separated by `;`, e.g. `0.6,0.2;0.2,0.4`.
    #[arg(long)]
    pub blocks: Option<String>,
    /// Step graphon block weights (default: equal).
    #[arg(long)]
    pub block_weights: Option<String>,
    #[arg(long)]
    pub drum: Option<String>,
    #[arg(long)]
    pub bc: Option<BoundaryCondition>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Spectral truncation (0: chosen from t0).
    #[arg(long)]
    pub modes: Option<usize>,
    /// Normalization constant `K` (default: max heat diagonal over both drums).
    #[arg(long = "norm-k")]
    pub norm_k: Option<f64>,
    /// Collapse the Dirichlet boundary into one node with a zero row.
    #[arg(long)]
    pub collapse_boundary: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Json,
    Binary,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum GraphonCmd {
    /// Construct a graphon and write it to disk.
    Build {
        #[command(flatten)]
        src: GraphonArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: FileFormat,
    },
    /// Top eigenvalues by magnitude with multiplicity clusters.
    Spectrum {
        #[command(flatten)]
        src: GraphonArgs,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Degree function with a histogram.
    Degree {
        #[command(flatten)]
        src: GraphonArgs,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// r_W distances over a node sample, plus a twin scan.
    Rw {
        #[command(flatten)]
        src: GraphonArgs,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Twin threshold relative to the mean r_W.
        #[arg(long, default_value_t = 1e-4)]
        twin_eps: f64,
    },
    /// Monte Carlo homomorphism density of a small graph.
    Homdensity {
        #[command(flatten)]
        src: GraphonArgs,
        /// vertex, edge, cK (cycle; c2 is the closed 2-walk), pK (path), sK (star) or kK (complete).
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Lower and upper bounds on the cut norm.
    Cutnorm {
        #[command(flatten)]
        src: GraphonArgs,
    },
    /// Heuristic upper bound on the cut distance to another graphon.
    Cutdist {
        #[command(flatten)]
        src: GraphonArgs,
        /// The second graphon file.
        #[arg(long)]
        other: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPhases {
    /// All phases zero.
    Sync,
    /// Uniform in `[−spread, spread]`.
    NearSync,
    /// Uniform on the circle.
    Random,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum DynCmd {
    /// Integrate the graphon Kuramoto model with RK4.
    Simulate {
        #[command(flatten)]
        src: GraphonArgs,
        /// Mean intrinsic frequency.
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Standard deviation of Gaussian frequency disorder.
        #[arg(long, default_value_t = 0.0)]
        omega_spread: f64,
        #[arg(long, value_enum, default_value = "sync")]
        init: InitialPhases,
        #[arg(long, default_value_t = 0.1)]
        phase_spread: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Spectrum of the linearized operator about a phase profile.
    Stability {
        #[command(flatten)]
        src: GraphonArgs,
        /// JSON array with the steady-state phase of every node (default: constant).
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Max-degree gap between the two drums over a t0 sweep.
    DegreeGap {
        #[arg(long)]
        bc: Option<BoundaryCondition>,
        /// Single diffusion time (overrides the sweep).
        #[arg(long, conflicts_with = "sweep")]
        t0: Option<f64>,
        /// Use the default sweep 0.01, 0.02, 0.05, 0.1, 0.2.
        #[arg(long)]
        sweep: bool,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
    },
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownDrum(_)
        | Error::InvalidArgument(_)
        | Error::DegenerateGeometry(_)
        | Error::OutsideDomain(..)
        | Error::SizeCap(_)
        | Error::Incompatible(_)
        | Error::Format(_)
        | Error::Json(_) => 2,
        Error::NonConvergence { .. } | Error::NotPositiveDefinite(_) | Error::NonFinite(_) => 3,
        Error::TailBound { .. }
        | Error::KernelExceedsNormalization { .. }
        | Error::NonPositiveKernel(_)
        | Error::Cancellation { .. }
        | Error::ClipBudget { .. } => 4,
        Error::Io(_) => 1,
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    config: ExperimentConfig,
    config_file: Option<FileDigest>,
    argv: Vec<String>,
    seed_printed: std::cell::Cell<bool>,
}

impl Ctx {
    fn manifest(&self, command: &Command, effective: serde_json::Value) -> RunManifest {
        let config = serde_json::json!({
            "command": command,
            "effective": effective,
            "seed": self.seed,
        });
        let mut m = RunManifest::new(self.argv.clone(), config, self.seed);
        m.config_file = self.config_file.clone();
        m
    }

    fn print_seed(&self) {
        if !self.seed_printed.replace(true) {
            println!("seed: {}", self.seed);
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<(ExperimentConfig, Option<FileDigest>)> {
    let Some(path) = path else {
        return Ok((ExperimentConfig::default(), None));
    };
    let text = std::fs::read(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_slice(&text)?;
    cfg.validate()?;
    Ok((
        cfg,
        Some(FileDigest {
            path: path.display().to_string(),
            sha256: crate::report::sha256_hex(&text),
        }),
    ))
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        // A global pool may already exist when called in-process; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (config, config_file) = load_config(cli.config.as_deref())?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(config.seed),
        out: cli.out.clone(),
        config,
        config_file,
        argv: std::env::args().collect(),
        seed_printed: std::cell::Cell::new(false),
    };
    match &cli.command {
        Command::DrumMesh(a) => cmd_drum_mesh(&ctx, &cli.command, a),
        Command::DrumEigs(a) => cmd_drum_eigs(&ctx, &cli.command, a),
        Command::Graphon(g) => cmd_graphon(&ctx, &cli.command, g),
        Command::Dyn(d) => cmd_dyn(&ctx, &cli.command, d),
        Command::Report { run } => cmd_report(run),
    }
}

fn parse_drums(s: &str) -> Result<Vec<DrumId>> {
    if s.eq_ignore_ascii_case("both") || s.eq_ignore_ascii_case("all") {
        Ok(DrumId::BOTH.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

fn finish(run: RunDir, manifest: RunManifest) -> Result<()> {
    let path = run.finish(manifest)?;
    println!("run: {}", path.display());
    Ok(())
}

fn cmd_drum_mesh(ctx: &Ctx, command: &Command, a: &MeshArgs) -> Result<()> {
    let depth = a.depth.unwrap_or(ctx.config.depth);
    let drums = parse_drums(&a.drum)?;
    let run = RunDir::create(&ctx.out)?;
    let mut facts = Vec::new();
    for d in &drums {
        let polygon = load_drum(*d, 1.0)?;
        let mesh = triangulate(&polygon, depth)?;
        let audit = mesh.edge_audit();
        let circle = inscribed_circle(&polygon)?;
        let perimeter: f64 = polygon
            .segments()
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
            .sum();
        run.write_json(&format!("polygon_{d}.json"), &polygon.to_file(1.0))?;
        run.write_json(&format!("mesh_{d}_d{depth}.json"), &mesh)?;
        println!(
            "{d}: depth {depth}, {} vertices, {} triangles, area {}, perimeter {perimeter:.6}, inscribed radius {:.9}, max edge {:.4}",
            mesh.n_vertices(),
            mesh.n_triangles(),
            mesh.area(),
            circle.radius,
            mesh.max_edge()
        );
        facts.push(serde_json::json!({
            "drum": d,
            "depth": depth,
            "vertices": mesh.n_vertices(),
            "triangles": mesh.n_triangles(),
            "area": mesh.area(),
            "perimeter": perimeter,
            "inscribed_center": circle.center,
            "inscribed_radius": circle.radius,
            "interior_edges": audit.interior,
            "boundary_edges": audit.boundary,
            "overused_edges": audit.overused,
        }));
    }
    run.write_json("mesh_summary.json", &facts)?;
    finish(run, ctx.manifest(command, serde_json::json!({ "depth": depth })))
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-8 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn cmd_drum_eigs(ctx: &Ctx, command: &Command, a: &EigsArgs) -> Result<()> {
    let bc = a.bc.unwrap_or(ctx.config.bc);
    let depth = a.depth.unwrap_or(ctx.config.depth);
    let modes = a.modes.or((ctx.config.n_modes > 0).then_some(ctx.config.n_modes)).unwrap_or(15);
    let drums = parse_drums(&a.drum)?;
    let run = RunDir::create(&ctx.out)?;
    let solve = |d: DrumId, depth: u32| ModalDomain::solve(&load_drum(d, 1.0)?, depth, bc, ModeCount::Fixed(modes), SOLVE_TOL);
    let mut fine = Vec::new();
    let mut coarse = Vec::new();
    for &d in &drums {
        let f = solve(d, depth)?;
        run.write(&format!("eigs_{d}_{bc}_d{depth}.csv"), f.basis.eigenvalue_csv().as_bytes())?;
        if a.export_basis {
            run.write_json(&format!("basis_{d}_{bc}_d{depth}.json"), &f.basis)?;
        }
        if depth > 0 {
            coarse.push(solve(d, depth - 1)?.basis.lambdas);
        }
        fine.push(f.basis.lambdas);
    }
    let mut effective = serde_json::json!({ "bc": bc, "depth": depth, "modes": modes });
    if drums.len() == 2 {
        let extrap = |k: usize, n: usize| {
            coarse
                .get(k)
                .map_or(fine[k][n], |c: &Vec<f64>| richardson(c[n], fine[k][n], 2.0))
        };
        let mut rows = Vec::new();
        let (mut worst, mut worst_x) = (0.0f64, 0.0f64);
        println!("mode  {:>14}  {:>14}  {:>9}  {:>14}  {:>14}  {:>9}", "drum1", "drum2", "rel gap", "drum1 extrap", "drum2 extrap", "rel gap");
        for n in 0..modes {
            let (l1, l2) = (fine[0][n], fine[1][n]);
            let (x1, x2) = (extrap(0, n), extrap(1, n));
            let (g, gx) = (rel_gap(l1, l2), rel_gap(x1, x2));
            worst = worst.max(g);
            worst_x = worst_x.max(gx);
            println!("{n:>4}  {l1:>14.8}  {l2:>14.8}  {g:>9.2e}  {x1:>14.8}  {x2:>14.8}  {gx:>9.2e}");
            rows.push([
                n.to_string(),
                l1.to_string(),
                l2.to_string(),
                g.to_string(),
                x1.to_string(),
                x2.to_string(),
                gx.to_string(),
            ]);
        }
        println!("max relative gap {worst:.3e}; extrapolated {worst_x:.3e}");
        run.write(
            &format!("isospectral_{bc}_d{depth}.csv"),
            &csv_bytes(
                &["mode", "drum1", "drum2", "rel_gap", "drum1_extrapolated", "drum2_extrapolated", "extrapolated_rel_gap"],
                rows,
            )?,
        )?;
        effective["max_rel_gap"] = worst.into();
        effective["max_extrapolated_rel_gap"] = worst_x.into();
    } else {
        for (n, l) in fine[0].iter().enumerate() {
            println!("{n:>4}  {l:.10}");
        }
    }
    finish(run, ctx.manifest(command, effective))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: `{v}`")))
        })
        .collect()
}

fn read_graphon(path: &Path) -> Result<DiscretizedGraphon> {
    if path.extension().is_some_and(|e| e == "grph") {
        DiscretizedGraphon::read_binary(path)
    } else {
        DiscretizedGraphon::read_json(path)
    }
}

/// Builds the graphon described by `src` and lists the files it read.
fn build_graphon(ctx: &Ctx, src: &GraphonArgs) -> Result<(DiscretizedGraphon, Vec<PathBuf>)> {
    if let Some(path) = &src.input {
        if src.kind.is_some() {
            return Err(Error::InvalidArgument("give either --input or --kind, not both".into()));
        }
        return Ok((read_graphon(path)?, vec![path.clone()]));
    }
    let kind = src
        .kind
        .ok_or_else(|| Error::InvalidArgument("a graphon needs --input or --kind".into()))?;
    let g = match kind {
        Kind::S1 | Kind::S3 => {
            let (sphere, n) = match kind {
                Kind::S1 => (SphereKind::S1, src.n.unwrap_or(2000)),
                _ => (SphereKind::S3, src.n.unwrap_or(3000)),
            };
            ctx.print_seed();
            sphere_graphon(sphere, n, ctx.seed)?
        }
        Kind::Constant => constant_graphon(src.n.unwrap_or(100), src.p.unwrap_or(0.5))?,
        Kind::Step => {
            let blocks = src
                .blocks
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("step graphons need --blocks".into()))?
                .split(';')
                .map(parse_list)
                .collect::<Result<Vec<_>>>()?;
            let m = blocks.len();
            let weights = match &src.block_weights {
                Some(w) => parse_list(w)?,
                None => vec![1.0 / m as f64; m],
            };
            step_graphon(weights, blocks)?
        }
        Kind::Heat => heat_from_args(ctx, src)?,
    };
    Ok((g, Vec::new()))
}

fn heat_from_args(ctx: &Ctx, src: &GraphonArgs) -> Result<DiscretizedGraphon> {
    let drum: DrumId = src.drum.as_deref().unwrap_or("drum1").parse()?;
    let bc = src.bc.unwrap_or(ctx.config.bc);
    let t0 = src.t0.unwrap_or(DEFAULT_T0);
    let depth = src.depth.unwrap_or(3);
    let n_modes = src.modes.unwrap_or(ctx.config.n_modes);
    let modes = if n_modes > 0 {
        ModeCount::Fixed(n_modes)
    } else {
        ModeCount::ForTime { t: t0, ratio: TRUNCATION_RATIO }
    };
    let solve = |d: DrumId| ModalDomain::solve(&load_drum(d, 1.0)?, depth, bc, modes, SOLVE_TOL);
    let domain = solve(drum)?;
    let k = match src.norm_k {
        Some(k) => k,
        None => {
            let other = solve(if drum == DrumId::Drum1 { DrumId::Drum2 } else { DrumId::Drum1 })?;
            normalization_k(&[&domain.basis, &other.basis], t0)?
        }
    };
    let spec = HeatGraphonSpec {
        drum,
        bc,
        t0,
        k,
        n_modes: 0,
        collapse_boundary: src.collapse_boundary,
    };
    let g = heat_graphon(&spec, &domain)?;
    check_clip_budget(&g)?;
    if let Provenance::Heat { clip, n_modes, .. } = &g.provenance {
        println!(
            "heat graphon {drum} {bc} t0 = {t0}: K = {k:.9}, {n_modes} modes, {} nodes, clipped {} below (max {:.2e})",
            g.n(),
            clip.below,
            clip.max_below
        );
    }
    Ok(g)
}

fn graphon_effective(g: &DiscretizedGraphon) -> serde_json::Value {
    serde_json::json!({ "provenance": g.provenance, "nodes": g.n() })
}

fn cmd_graphon(ctx: &Ctx, command: &Command, cmd: &GraphonCmd) -> Result<()> {
    let src = match cmd {
        GraphonCmd::Build { src, .. }
        | GraphonCmd::Spectrum { src, .. }
        | GraphonCmd::Degree { src, .. }
        | GraphonCmd::Rw { src, .. }
        | GraphonCmd::Homdensity { src, .. }
        | GraphonCmd::Cutnorm { src }
        | GraphonCmd::Cutdist { src, .. } => src,
    };
    let (g, inputs) = build_graphon(ctx, src)?;
    let run = RunDir::create(&ctx.out)?;
    let mut manifest = ctx.manifest(command, graphon_effective(&g));
    for p in &inputs {
        manifest.add_input(p)?;
    }
    match cmd {
        GraphonCmd::Build { format, .. } => {
            let stem = match &g.provenance {
                Provenance::Heat { drum, bc, t0, collapse_boundary, .. } => format!(
                    "graphon_{drum}_{bc}_t{t0}{}",
                    if *collapse_boundary { "_collapsed" } else { "" }
                ),
                p => format!("graphon_{}", p.label()),
            };
            let name = match format {
                FileFormat::Json => format!("{stem}.json"),
                FileFormat::Binary => format!("{stem}.grph"),
            };
            match format {
                FileFormat::Json => g.write_json(&run.path(&name))?,
                FileFormat::Binary => g.write_binary(&run.path(&name))?,
            }
            let zero_rows = (0..g.n()).filter(|&i| g.row(i).iter().all(|v| *v == 0.0)).count();
            println!("wrote {name}: {} nodes, {zero_rows} identically zero rows", g.n());
        }
        GraphonCmd::Spectrum { k, .. } => {
            let r = spectrum(&g, *k)?;
            run.write("spectrum.csv", &values_csv("eigenvalue", &r.eigenvalues)?)?;
            let rows = r.clusters.iter().map(|c| [c.mean.to_string(), c.multiplicity.to_string()]);
            run.write("clusters.csv", &csv_bytes(&["mean", "multiplicity"], rows)?)?;
            run.write_json("spectrum.json", &r)?;
            for (i, l) in r.eigenvalues.iter().enumerate() {
                println!("lambda_{i} = {l:.9}");
            }
            let summary: Vec<String> = r
                .clusters
                .iter()
                .map(|c| format!("{:.6} x{}", c.mean, c.multiplicity))
                .collect();
            println!("clusters: {{{}}}", summary.join(", "));
        }
        GraphonCmd::Degree { bins, .. } => {
            let r = degree(&g, *bins, None);
            run.write("degrees.csv", &values_csv("degree", &r.degrees)?)?;
            run.write("histogram.csv", &histogram_csv(&["graphon"], &[&r.histogram])?)?;
            let svg = histogram_svg(
                &format!("Degree distribution ({})", g.provenance.label()),
                "degree d_W",
                &["graphon"],
                &[&r.histogram],
                &manifest.provenance(),
            );
            run.write("histogram.svg", svg.as_bytes())?;
            println!(
                "degree min {:.9} max {:.9} mean {:.9} cv {:.3e}",
                r.min, r.max, r.mean, r.cv
            );
        }
        GraphonCmd::Rw { samples, twin_eps, .. } => {
            ctx.print_seed();
            let idx = sample_indices(g.n(), *samples, ctx.seed);
            let m = rw_matrix(&g, &idx)?;
            let mut rows = Vec::new();
            for a in 0..idx.len() {
                for b in a + 1..idx.len() {
                    rows.push([idx[a].to_string(), idx[b].to_string(), m[a][b].to_string()]);
                }
            }
            run.write("rw_samples.csv", &csv_bytes(&["i", "j", "r"], rows)?)?;
            let scan = twin_scan_relative(&g, *twin_eps, ctx.seed)?;
            run.write_json("twin_scan.json", &scan)?;
            println!(
                "r_W over {} sampled nodes; twin scan at eps = {:.3e} ({} nodes): {} pairs, min r {:.3e}, mean r {:.3e}",
                idx.len(),
                scan.eps,
                scan.scanned_nodes,
                scan.pairs.len(),
                scan.min_r,
                scan.mean_r
            );
        }
        GraphonCmd::Homdensity { graph, samples, .. } => {
            ctx.print_seed();
            // C_2 is not simple; its density is the closed walk of length two.
            let est = if graph.eq_ignore_ascii_case("c2") {
                closed_walk_density(2, &g, *samples, ctx.seed)?
            } else {
                hom_density(&GraphSpec::from_name(graph)?, &g, *samples, ctx.seed)?
            };
            let mut out = serde_json::json!({ "graph": graph, "estimate": est });
            println!("t({graph}, W) = {:.9} +- {:.3e} ({} samples)", est.estimate, est.std_error, est.samples);
            let lower = graph.to_ascii_lowercase();
            if let Some(k) = lower.strip_prefix('c').and_then(|k| k.parse::<u32>().ok()) {
                let trace = cycle_trace(&g, k);
                let z = (est.estimate - trace) / est.std_error.max(f64::MIN_POSITIVE);
                println!("spectral sum of lambda^{k} = {trace:.9} (difference {z:.2} standard errors)");
                out["spectral_power_sum"] = trace.into();
                out["z"] = z.into();
            }
            run.write_json("homdensity.json", &out)?;
        }
        GraphonCmd::Cutnorm { .. } => {
            ctx.print_seed();
            let b = cut_norm_bounds(&g, ctx.seed);
            println!(
                "cut norm in [{:.9}, {:.9}]{}",
                b.lower,
                b.upper,
                if b.exact { " (lower bound exact)" } else { "" }
            );
            run.write_json(
                "cutnorm.json",
                &serde_json::json!({ "lower": b.lower, "upper": b.upper, "lower_exact": b.exact, "seed": ctx.seed }),
            )?;
        }
        GraphonCmd::Cutdist { other, .. } => {
            ctx.print_seed();
            manifest.add_input(other)?;
            let h = read_graphon(other)?;
            let d = cut_distance_upper(&g, &h, ctx.seed)?;
            println!(
                "cut distance upper-bound surrogate {:.9} (HEURISTIC); L1 upper bound {:.9}",
                d.value, d.l1_upper
            );
            run.write_json("cutdist.json", &d)?;
        }
    }
    finish(run, manifest)
}

fn cmd_dyn(ctx: &Ctx, command: &Command, cmd: &DynCmd) -> Result<()> {
    match cmd {
        DynCmd::Simulate {
            src,
            omega,
            omega_spread,
            init,
            phase_spread,
            dt,
            t_end,
            stride,
        } => {
            let (g, inputs) = build_graphon(ctx, src)?;
            let n = g.n();
            let opts = IntegrateOptions {
                dt: dt.unwrap_or(ctx.config.dt),
                t_end: t_end.unwrap_or(ctx.config.t_end),
                stride: *stride,
                method: Method::Rk4,
            };
            let omegas = if *omega_spread > 0.0 {
                let normal = Normal::new(*omega, *omega_spread)
                    .map_err(|e| Error::InvalidArgument(format!("frequency spread: {e}")))?;
                let mut r = rng::stream(ctx.seed, 0);
                (0..n).map(|_| normal.sample(&mut r)).collect()
            } else {
                vec![*omega; n]
            };
            let mut r = rng::stream(ctx.seed, 1);
            let thetas: Vec<f64> = match init {
                InitialPhases::Sync => vec![0.0; n],
                InitialPhases::NearSync => (0..n).map(|_| r.random_range(-1.0..=1.0) * phase_spread).collect(),
                InitialPhases::Random => (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect(),
            };
            ctx.print_seed();
            let system = KuramotoSystem::new(g, omegas)?;
            let state0 = KuramotoState { t: 0.0, thetas };
            let traj = integrate(&system, &state0, opts)?;
            let w = &system.graphon.weights;
            let rows = traj.times.iter().zip(&traj.states).zip(&traj.order).map(|((t, s), o)| {
                let mean: f64 = s.iter().zip(w).map(|(a, b)| a * b).sum();
                [t.to_string(), o.to_string(), mean.to_string()]
            });
            let run = RunDir::create(&ctx.out)?;
            run.write("trajectory.csv", &csv_bytes(&["t", "order_parameter", "mean_phase"], rows)?)?;
            let last = traj.last();
            run.write("final_phases.csv", &values_csv("theta", &last.thetas)?)?;
            let spread = last.thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - last.thetas.iter().cloned().fold(f64::INFINITY, f64::min);
            let drift = last
                .thetas
                .iter()
                .zip(&state0.thetas)
                .zip(&system.omegas)
                .map(|((a, b), om)| (a - b - om * last.t).abs())
                .fold(0.0, f64::max);
            let order = *traj.order.last().unwrap();
            println!(
                "t = {}: order parameter {order:.12}, phase spread {spread:.3e}, max deviation from free rotation {drift:.3e}",
                last.t
            );
            run.write_json(
                "summary.json",
                &serde_json::json!({
                    "t_end": last.t, "dt": opts.dt, "order_parameter": order,
                    "phase_spread": spread, "max_free_rotation_deviation": drift, "seed": ctx.seed,
                }),
            )?;
            let mut manifest = ctx.manifest(command, serde_json::json!({ "graphon": graphon_effective(&system.graphon), "options": opts }));
            for p in &inputs {
                manifest.add_input(p)?;
            }
            finish(run, manifest)
        }
        DynCmd::Stability { src, profile, bins } => {
            let (g, inputs) = build_graphon(ctx, src)?;
            let phi: Option<Vec<f64>> = match profile {
                Some(p) => Some(serde_json::from_slice(&std::fs::read(p).map_err(|e| {
                    Error::InvalidArgument(format!("cannot read profile {}: {e}", p.display()))
                })?)?),
                None => None,
            };
            let r = linearized_operator(&g, phi.as_deref(), *bins)?;
            let run = RunDir::create(&ctx.out)?;
            let mut manifest = ctx.manifest(command, graphon_effective(&g));
            for p in inputs.iter().chain(profile.iter()) {
                manifest.add_input(p)?;
            }
            run.write("stability.csv", &values_csv("eigenvalue", &r.eigenvalues)?)?;
            run.write("degrees.csv", &values_csv("degree", &r.degree.degrees)?)?;
            run.write("histogram.csv", &histogram_csv(&["graphon"], &[&r.degree.histogram])?)?;
            let svg = histogram_svg(
                "Degree distribution (spectral support proxy of D_W)",
                "degree d_W",
                &["graphon"],
                &[&r.degree.histogram],
                &manifest.provenance(),
            );
            run.write("histogram.svg", svg.as_bytes())?;
            run.write_json(
                "stability.json",
                &serde_json::json!({
                    "top_eigenvalues": r.eigenvalues.iter().take(10).collect::<Vec<_>>(),
                    "max_eigenvalue": r.eigenvalues.first(),
                    "min_eigenvalue": r.eigenvalues.last(),
                    "degree_range_proxy": r.support_proxy,
                    "constant_residual": r.constant_residual,
                    "profile_constant": r.profile_constant,
                    "note": "the degree range stands in for the continuous spectrum of D_W at finite n",
                }),
            )?;
            println!(
                "max eigenvalue {:.3e}; degree range [{:.9}, {:.9}] (finite-n proxy for the continuous spectrum); |K_W 1| = {:.2e}",
                r.eigenvalues.first().copied().unwrap_or(0.0),
                r.support_proxy.0,
                r.support_proxy.1,
                r.constant_residual
            );
            finish(run, manifest)
        }
        DynCmd::DegreeGap {
            bc,
            t0,
            sweep,
            depth,
            modes,
            bins,
        } => {
            let mut cfg = ctx.config.clone();
            cfg.seed = ctx.seed;
            if let Some(bc) = bc {
                cfg.bc = *bc;
            }
            if let Some(t0) = t0 {
                cfg.t0_sweep = vec![*t0];
            }
            if *sweep {
                cfg.t0_sweep = T0_SWEEP.to_vec();
            }
            if let Some(d) = depth {
                cfg.depth = *d;
            }
            if let Some(m) = modes {
                cfg.n_modes = *m;
            }
            if let Some(b) = bins {
                cfg.bins = *b;
            }
            cfg.validate()?;
            ctx.print_seed();
            let pair = DrumPair::solve(&cfg)?;
            let report = crate::dynamics::degree_gap_experiment(&pair, &cfg)?;
            let nodes = [0, 1].map(|k| {
                let mesh = &pair.fine[k].mesh;
                (0..mesh.n_triangles()).map(|t| mesh.centroid(t).to_vec()).collect::<Vec<_>>()
            });
            let run = RunDir::create(&ctx.out)?;
            let manifest = ctx.manifest(command, serde_json::to_value(&cfg)?);
            let summary = write_degree_gap(&run, &report, &nodes, ctx.seed, &manifest.provenance())?;
            println!(
                "{} drums, depth {} vs {}: inscribed radii R1 = {:.6}, R2 = {:.6}",
                summary.bc, summary.depth, summary.coarse_depth, summary.inscribed_radii[0], summary.inscribed_radii[1]
            );
            for p in &summary.points {
                println!(
                    "t0 = {}: max d = ({:.9}, {:.9}), gap {:+.3e}, error bar {:.3e}{}",
                    p.t0,
                    p.max_degree[0],
                    p.max_degree[1],
                    p.gap,
                    p.error_bar,
                    if p.significant { "  significant" } else { "" }
                );
            }
            println!("verdict: {}", summary.verdict);
            finish(run, manifest)
        }
    }
}

fn cmd_report(dir: &Path) -> Result<()> {
    let (manifest, bad) = verify_run(dir)?;
    println!("run {}", dir.display());
    println!("  command: {}", manifest.command_line.join(" "));
    println!("  seed {}, tool {}, config sha256 {}", manifest.seed, manifest.tool_version, manifest.config_hash);
    println!("  {} outputs, {} modified", manifest.outputs.len(), bad.len());
    let summary = dir.join("summary.json");
    if summary.exists() {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(summary)?)?;
        if let Some(verdict) = v.get("verdict").and_then(|v| v.as_str()) {
            println!("  verdict: {verdict}");
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Format(format!("outputs differ from the manifest: {}", bad.join(", "))))
    }
}
