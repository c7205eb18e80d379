//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or policy error, 2 I/O error (including
//! oversized grids), 3 numerical degeneracy such as a singular correlation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clustering::Merge;
use crate::copula::{
    empirical_copula_histogram, pseudo_observations, FitMethod, DEFAULT_BINS, RNG_ALGORITHM,
};
use crate::distances::{check_emd_grid, emd, DistanceKind, DistanceMatrix, GroundMetric};
use crate::error::Error;
use crate::experiments::{
    generate_benchmark, run_pipeline_on, sweep, table1_report, PipelineConfig, DEFAULT_LENGTH,
    DEFAULT_PER_CLUSTER, DEFAULT_RHOS, DEFAULT_SWEEP_HI,
};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "copdist",
    version,
    about = "Distances between copulas and dependence-based clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form distances between the Gaussian copula fixtures ρ = 0.5, 0.99, 0.9999.
    Table1 {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Distance between R(ρ₁) and R(ρ₂) over a grid of correlations.
    Sweep {
        #[arg(long)]
        kind: DistanceKind,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SWEEP_HI)]
        hi: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write an 8-bit grayscale PGM of the grid.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Generate a benchmark of bivariate series from Gaussian copulas.
    Gen {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RHOS.to_vec())]
        rhos: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PER_CLUSTER)]
        per_cluster: usize,
        #[arg(long, default_value_t = DEFAULT_LENGTH)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write into a non-empty directory.
        #[arg(long)]
        force: bool,
    },
    /// Cluster the objects listed in a manifest.
    Cluster {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "w2")]
        kind: DistanceKind,
        #[arg(long, default_value = "normal-scores")]
        fit: FitMethod,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value = "euclidean")]
        ground: GroundMetric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Earth Mover Distance between the empirical copulas of two series files.
    Emd {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value = "euclidean")]
        ground: GroundMetric,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestObject {
    pub label: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub seed: u64,
    pub length: usize,
    pub per_cluster: usize,
    pub rhos: Vec<f64>,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub objects: Vec<ManifestObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

#[derive(Debug, Serialize)]
struct ClusterReport<'a> {
    kind: DistanceKind,
    fit: FitMethod,
    k: usize,
    labels: &'a [String],
    assignment: &'a [usize],
    merges: &'a [Merge],
    non_monotone: bool,
    /// Relative to the report's directory.
    distance_matrix_path: String,
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::SingularMatrix(_)
            | Error::NotPositiveDefinite { .. }
            | Error::NotPositiveSemidefinite(_)
            | Error::DegenerateInput(_) => 3,
            Error::GridTooLarge { .. }
            | Error::IncompatibleHistograms(_)
            | Error::TooFewSamples { .. } => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Table1 { format } => cmd_table1(format, stdout),
        Command::Sweep {
            kind,
            grid,
            hi,
            out,
            pgm,
        } => cmd_sweep(kind, grid, hi, &out, pgm.as_deref(), stdout),
        Command::Gen {
            rhos,
            per_cluster,
            length,
            seed,
            out,
            force,
        } => cmd_gen(&rhos, per_cluster, length, seed, &out, force, stdout),
        Command::Cluster {
            manifest,
            kind,
            fit,
            k,
            bins,
            ground,
            out,
        } => {
            let config = PipelineConfig {
                kind,
                fit,
                k,
                bins,
                ground,
            };
            cmd_cluster(&manifest, &config, &out, stdout)
        }
        Command::Emd { a, b, bins, ground } => cmd_emd(&a, &b, bins, ground, stdout),
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io(format!("writing output: {e}")))
}

/// Writes through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::io(format!("{}: not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let fail = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

fn cmd_table1(format: Format, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rows = table1_report();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("kind,d_AB,d_BC,reversed\n");
            for r in &rows {
                let _ = writeln!(s, "{},{:.2},{:.2},{}", r.kind, r.d_ab, r.d_bc, r.reversed);
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "rows": rows }))
                .expect("table serializes");
            s.push('\n');
            s
        }
    };
    emit(stdout, &text)
}

pub fn sweep_csv(grid: &crate::experiments::SweepGrid) -> String {
    let mut s = String::from("rho");
    for r in &grid.rhos {
        let _ = write!(s, ",{r:.6}");
    }
    s.push('\n');
    for (i, r) in grid.rhos.iter().enumerate() {
        let _ = write!(s, "{r:.6}");
        for j in 0..grid.size() {
            let _ = write!(s, ",{}", grid.get(i, j));
        }
        s.push('\n');
    }
    s
}

/// Binary PGM with linear min-max scaling; row `i` is `ρ₁ = rhos[i]`.
pub fn sweep_pgm(grid: &crate::experiments::SweepGrid) -> Vec<u8> {
    let g = grid.size();
    let (lo, hi) = grid
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = format!("P5\n{g} {g}\n255\n").into_bytes();
    out.extend(grid.values.iter().map(|&v| {
        if hi > lo {
            (255.0 * (v - lo) / (hi - lo)).round() as u8
        } else {
            0
        }
    }));
    out
}

fn cmd_sweep(
    kind: DistanceKind,
    grid: usize,
    hi: f64,
    out: &Path,
    pgm: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let g = sweep(kind, grid, hi)?;
    write_atomic(out, sweep_csv(&g).as_bytes())?;
    if let Some(p) = pgm {
        write_atomic(p, &sweep_pgm(&g))?;
    }
    emit(
        stdout,
        &format!(
            "wrote {}x{} {} grid to {}\n",
            grid,
            grid,
            kind,
            out.display()
        ),
    )
}

pub fn series_csv(rows: &[Vec<f64>]) -> String {
    let d = rows.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

/// Reads a series file: header row, one variate per column.
pub fn read_series(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let fail = |msg: String| CliError::io(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let width = reader.headers().map_err(|e| fail(e.to_string()))?.len();
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        if rec.len() != width {
            return Err(fail(format!(
                "row {} has {} columns, header has {width}",
                line + 1,
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| fail(format!("row {}: {e}", line + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail("no data rows".into()));
    }
    Ok(rows)
}

fn manifest_json(m: &DatasetManifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    rhos: &[f64],
    per_cluster: usize,
    length: usize,
    seed: u64,
    out: &Path,
    force: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if out.exists() {
        let mut entries =
            fs::read_dir(out).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
        if entries.next().is_some() && !force {
            return Err(CliError::io(format!(
                "{} exists and is not empty (use --force to write into it)",
                out.display()
            )));
        }
    }
    let data = generate_benchmark(rhos, per_cluster, length, seed).map_err(|e| match e {
        Error::DomainError(_) | Error::InvalidInput(_) | Error::TooFewSamples { .. } => {
            CliError::usage(e.to_string())
        }
        other => other.into(),
    })?;
    fs::create_dir_all(out).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    let mut objects = Vec::with_capacity(data.objects.len());
    for obj in &data.objects {
        let file = format!("{}.csv", obj.label);
        write_atomic(&out.join(&file), series_csv(&obj.series).as_bytes())?;
        objects.push(ManifestObject {
            label: obj.label.clone(),
            path: file,
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        objects,
        generator: Some(GeneratorInfo {
            seed,
            length,
            per_cluster,
            rhos: rhos.to_vec(),
            rng: RNG_ALGORITHM.to_string(),
        }),
    };
    write_atomic(
        &out.join(MANIFEST_FILE),
        manifest_json(&manifest).as_bytes(),
    )?;
    emit(
        stdout,
        &format!("wrote {} series to {}\n", data.objects.len(), out.display()),
    )
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let m: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    if m.version != MANIFEST_VERSION {
        return Err(CliError::io(format!(
            "{}: unsupported manifest version {}",
            path.display(),
            m.version
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for o in &m.objects {
        if !seen.insert(o.label.as_str()) {
            return Err(CliError::io(format!(
                "{}: duplicate label `{}`",
                path.display(),
                o.label
            )));
        }
    }
    Ok(m)
}

pub fn distance_matrix_csv(d: &DistanceMatrix) -> String {
    let mut s = String::from("label");
    for l in d.labels() {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for (i, l) in d.labels().iter().enumerate() {
        s.push_str(l);
        for v in d.row(i) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// `result.json` → `result.distances.csv`.
fn side_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.distances.csv"))
}

fn cmd_cluster(
    manifest_path: &Path,
    config: &PipelineConfig,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if config.kind == DistanceKind::Kl {
        return Err(CliError::usage(crate::distances::KL_REJECTION));
    }
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let objects = manifest
        .objects
        .iter()
        .map(|o| Ok((o.label.clone(), read_series(&base.join(&o.path))?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    if config.k < 1 || config.k > objects.len() {
        return Err(CliError::usage(format!(
            "--k must lie in 1..={} for this manifest, got {}",
            objects.len(),
            config.k
        )));
    }

    let result = run_pipeline_on(&objects, config)?;
    let side = side_path(out);
    write_atomic(&side, distance_matrix_csv(&result.distances).as_bytes())?;
    let report = ClusterReport {
        kind: config.kind,
        fit: config.fit,
        k: config.k,
        labels: result.distances.labels(),
        assignment: &result.partition.assignment,
        merges: &result.dendrogram.merges,
        non_monotone: result.dendrogram.non_monotone,
        distance_matrix_path: side
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_atomic(out, json.as_bytes())?;

    let mut summary = String::new();
    for (c, members) in result.partition.clusters().iter().enumerate() {
        let names: Vec<&str> = members.iter().map(|&i| objects[i].0.as_str()).collect();
        let _ = writeln!(summary, "cluster {c}: {}", names.join(" "));
    }
    emit(stdout, &summary)
}

fn cmd_emd(
    a: &Path,
    b: &Path,
    bins: usize,
    ground: GroundMetric,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let xa = read_series(a)?;
    let xb = read_series(b)?;
    let (da, db) = (xa[0].len(), xb[0].len());
    if da != db {
        return Err(CliError::io(format!(
            "{} has {da} columns but {} has {db}",
            a.display(),
            b.display()
        )));
    }
    check_emd_grid(bins, da)?;
    let tag = |p: &Path, e: Error| Error::Object {
        label: p.display().to_string(),
        source: Box::new(e),
    };
    let ha = pseudo_observations(&xa)
        .and_then(|u| empirical_copula_histogram(&u, bins))
        .map_err(|e| tag(a, e))?;
    let hb = pseudo_observations(&xb)
        .and_then(|u| empirical_copula_histogram(&u, bins))
        .map_err(|e| tag(b, e))?;
    let (d, plan) = emd(&ha, &hb, ground)?;
    emit(
        stdout,
        &format!("distance {d:?}\nplan_size {}\n", plan.len()),
    )
}
