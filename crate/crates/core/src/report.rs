//! Run directories, manifests, CSV tables and SVG histograms.
//!
//! A run is written into a hidden staging directory and renamed into place
//! only after its manifest is complete, so a failed command leaves nothing
//! behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::DegreeGapReport;
use crate::error::{Error, Result};
use crate::graphon::Histogram;

pub const MANIFEST_NAME: &str = "manifest.json";
const STAGING_PREFIX: &str = ".partial-";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Hash of a JSON value with sorted keys.
pub fn config_hash(config: &serde_json::Value) -> String {
    // serde_json maps are ordered by key unless `preserve_order` is enabled.
    sha256_hex(config.to_string().as_bytes())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub config_hash: String,
    /// The config file as given, if any (flags override its values).
    pub config_file: Option<FileDigest>,
    pub seed: u64,
    pub tool_version: String,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, config: serde_json::Value, seed: u64) -> RunManifest {
        RunManifest {
            command_line,
            config_hash: config_hash(&config),
            config,
            config_file: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: timestamp(),
            finished: String::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: file_digest(path)?,
        });
        Ok(())
    }

    /// Short tag embedded in figures.
    pub fn provenance(&self) -> String {
        format!(
            "graphonlab {} config sha256 {} seed {}",
            self.tool_version, self.config_hash, self.seed
        )
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Output directory that appears atomically on [`RunDir::finish`].
#[derive(Debug)]
pub struct RunDir {
    staging: PathBuf,
    target: PathBuf,
    done: bool,
}

impl RunDir {
    /// Stages `<root>/<timestamp>-<suffix>`.
    pub fn create(root: &Path) -> Result<RunDir> {
        fs::create_dir_all(root)?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
        let suffix: u32 = rand::random();
        let name = format!("{stamp}-{suffix:08x}");
        let staging = root.join(format!("{STAGING_PREFIX}{name}"));
        let target = root.join(&name);
        fs::create_dir(&staging)?;
        Ok(RunDir {
            staging,
            target,
            done: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.staging.join(name)
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.path(name), contents)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Records output digests, writes the manifest and moves the run into
    /// place.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<PathBuf> {
        let mut names: Vec<String> = fs::read_dir(&self.staging)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        manifest.outputs = names
            .iter()
            .filter(|n| n.as_str() != MANIFEST_NAME)
            .map(|n| {
                Ok(FileDigest {
                    path: n.clone(),
                    sha256: file_digest(&self.staging.join(n))?,
                })
            })
            .collect::<Result<_>>()?;
        manifest.finished = timestamp();
        self.write_json(MANIFEST_NAME, &manifest)?;
        fs::rename(&self.staging, &self.target)?;
        self.done = true;
        Ok(self.target.clone())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

/// Re-hashes the outputs listed in a run's manifest. Returns the files whose
/// digest no longer matches.
pub fn verify_run(dir: &Path) -> Result<(RunManifest, Vec<String>)> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for f in &manifest.outputs {
        match file_digest(&dir.join(&f.path)) {
            Ok(d) if d == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok((manifest, bad))
}

/// CSV with a header row. Floats use the shortest round-trip representation.
pub fn csv_bytes<R, I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: ToString,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// `index,value` table.
pub fn values_csv(name: &str, values: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(
        &["index", name],
        values.iter().enumerate().map(|(i, v)| [i.to_string(), v.to_string()]),
    )
}

/// Histograms sharing one binning, one column pair per series.
pub fn histogram_csv(labels: &[&str], hists: &[&Histogram]) -> Result<Vec<u8>> {
    let first = hists
        .first()
        .ok_or_else(|| Error::InvalidArgument("no histograms".into()))?;
    let edges = first.edges();
    let mut header = vec!["bin_lo".to_string(), "bin_hi".to_string()];
    for l in labels {
        header.push(format!("mass_{l}"));
        header.push(format!("count_{l}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..first.counts.len()).map(|b| {
        let mut r = vec![edges[b].to_string(), edges[b + 1].to_string()];
        for h in hists {
            r.push(h.mass[b].to_string());
            r.push(h.counts[b].to_string());
        }
        r
    });
    csv_bytes(&header, rows)
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

/// Overlaid histogram bars (μ-mass per bin) as a standalone SVG.
pub fn histogram_svg(title: &str, x_label: &str, labels: &[&str], hists: &[&Histogram], provenance: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let ymax = hists
        .iter()
        .flat_map(|h| h.mass.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str(&format!("<!-- provenance: {} -->\n", escape(provenance)));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        w / 2.0,
        escape(title)
    ));
    for (k, hist) in hists.iter().enumerate() {
        let bins = hist.counts.len();
        let bw = pw / bins as f64;
        let color = COLORS[k % COLORS.len()];
        for (b, m) in hist.mass.iter().enumerate() {
            if *m <= 0.0 {
                continue;
            }
            let bh = ph * m / ymax;
            s.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.45\" stroke=\"{color}\" stroke-width=\"0.5\"/>\n",
                left + b as f64 * bw,
                top + ph - bh,
                bw,
                bh
            ));
        }
    }
    let axis = |x1: f64, y1: f64, x2: f64, y2: f64| {
        format!("<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"black\"/>\n")
    };
    s.push_str(&axis(left, top + ph, left + pw, top + ph));
    s.push_str(&axis(left, top, left, top + ph));
    let label = |x: f64, y: f64, anchor: &str, text: &str| {
        format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            escape(text)
        )
    };
    if let Some(first) = hists.first() {
        s.push_str(&label(left, top + ph + 16.0, "start", &format!("{:.4}", first.lo)));
        s.push_str(&label(left + pw, top + ph + 16.0, "end", &format!("{:.4}", first.hi)));
    }
    s.push_str(&label(left + pw / 2.0, h - 10.0, "middle", x_label));
    s.push_str(&label(left - 6.0, top + 4.0, "end", &format!("{ymax:.3}")));
    s.push_str(&label(left - 6.0, top + ph, "end", "0"));
    for (k, l) in labels.iter().enumerate() {
        let y = top + 14.0 + 16.0 * k as f64;
        let color = COLORS[k % COLORS.len()];
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"10\" fill=\"{color}\" fill-opacity=\"0.45\"/>\n",
            left + pw - 90.0,
            y - 9.0
        ));
        s.push_str(&label(left + pw - 72.0, y, "start", l));
    }
    s.push_str("</svg>\n");
    s
}

/// Compact per-`t0` summary of a degree-gap run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapSummary {
    pub t0: f64,
    pub k: f64,
    pub k_coarse: f64,
    pub max_degree: [f64; 2],
    pub max_degree_coarse: [f64; 2],
    /// `[min d, max d]` per drum: the finite-dimensional spectral support
    /// proxy for `D_W`.
    pub degree_range: [[f64; 2]; 2],
    pub gap: f64,
    pub error_bar: f64,
    pub significant: bool,
    pub sign_matches_radii: bool,
    pub stability_top: [Vec<f64>; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegreeGapSummary {
    pub drums: [String; 2],
    pub bc: String,
    pub depth: u32,
    pub coarse_depth: u32,
    pub n_modes: [usize; 2],
    pub inscribed_radii: [f64; 2],
    pub seed: u64,
    pub points: Vec<GapSummary>,
    pub verdict: String,
}

/// `t0` as it appears in file names.
pub fn t0_tag(t0: f64) -> String {
    format!("{t0}")
}

/// Writes the degree-gap artifacts: per-drum degree and stability CSVs,
/// overlaid histograms (CSV and SVG) and `summary.json`.
pub fn write_degree_gap(
    run: &RunDir,
    report: &DegreeGapReport,
    nodes: &[Vec<Vec<f64>>; 2],
    seed: u64,
    provenance: &str,
) -> Result<DegreeGapSummary> {
    let names = report.drums.map(|d| d.as_str());
    for p in &report.points {
        let tag = t0_tag(p.t0);
        for k in 0..2 {
            let d = &p.degrees[k];
            let rows = d.degrees.iter().enumerate().map(|(i, v)| {
                let c = &nodes[k][i];
                [
                    i.to_string(),
                    c[0].to_string(),
                    c[1].to_string(),
                    v.to_string(),
                ]
            });
            run.write(
                &format!("degrees_{}_{tag}.csv", names[k]),
                &csv_bytes(&["node", "x", "y", "degree"], rows)?,
            )?;
            run.write(
                &format!("stability_{}_{tag}.csv", names[k]),
                &values_csv("eigenvalue", &p.stability[k])?,
            )?;
        }
        let hists = [&p.degrees[0].histogram, &p.degrees[1].histogram];
        run.write(&format!("histogram_{tag}.csv"), &histogram_csv(&names, &hists)?)?;
        let title = format!("Degree distribution, {} heat graphons, t0 = {tag}", report.bc);
        run.write(
            &format!("histogram_{tag}.svg"),
            histogram_svg(&title, "degree d_W", &names, &hists, provenance).as_bytes(),
        )?;
    }
    let summary = DegreeGapSummary {
        drums: names.map(String::from),
        bc: report.bc.to_string(),
        depth: report.depth,
        coarse_depth: report.depth - 1,
        n_modes: report.n_modes,
        inscribed_radii: report.inscribed_radii,
        seed,
        points: report
            .points
            .iter()
            .map(|p| GapSummary {
                t0: p.t0,
                k: p.k_fine,
                k_coarse: p.k_coarse,
                max_degree: p.max_fine,
                max_degree_coarse: p.max_coarse,
                degree_range: [
                    [p.degrees[0].min, p.degrees[0].max],
                    [p.degrees[1].min, p.degrees[1].max],
                ],
                gap: p.gap,
                error_bar: p.error,
                significant: p.significant,
                sign_matches_radii: p.sign_matches_radii,
                stability_top: [
                    p.stability[0].iter().take(10).copied().collect(),
                    p.stability[1].iter().take(10).copied().collect(),
                ],
            })
            .collect(),
        verdict: report.verdict.clone(),
    };
    run.write_json("summary.json", &summary)?;
    Ok(summary)
}
