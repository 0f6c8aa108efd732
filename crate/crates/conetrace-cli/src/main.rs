//! Command-line front end: surface files in, JSON/CSV artifacts out.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use conetrace_core::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "conetrace", version, about = "Diffractive wave-trace toolkit for flat surfaces with cone points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate closed diffractive geodesics of a surface.
    Geodesics(GeodesicsArgs),
    /// Evaluate one diffraction coefficient.
    Diffract(DiffractArgs),
    /// Predict wave-trace singularities from the length spectrum.
    Trace(TraceArgs),
    /// Emit the diffractive length spectrum.
    Dlspec(DlspecArgs),
    /// Compare a frequency list against predicted singular times.
    Compare(CompareArgs),
    /// Report resonance-counting thresholds and the optimal band.
    Bands(BandsArgs),
}

#[derive(Args)]
struct SurfaceOpts {
    /// Surface description (JSON).
    #[arg(long)]
    surface: PathBuf,
    /// Length bound on enumerated chains.
    #[arg(long)]
    max_length: f64,
    /// Bound on the number of diffractions per chain.
    #[arg(long, default_value_t = 8)]
    max_diffractions: usize,
    /// Search-node budget before aborting.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
}

#[derive(Args)]
struct GeodesicsArgs {
    #[command(flatten)]
    surface: SurfaceOpts,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffractArgs {
    /// Link circumference (cone angle), radians.
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    theta_in: f64,
    #[arg(long)]
    theta_out: f64,
    /// Evaluate by Abel-damped mode sum instead of the closed form.
    #[arg(long)]
    mode_sum: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    surface: SurfaceOpts,
    /// Ambient dimension of the surface.
    #[arg(long, default_value_t = 2)]
    dimension: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of the numeric transform series of the first prediction.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Time offsets for the CSV series: count log-spaced points.
    #[arg(long, default_value_t = 20)]
    csv_points: usize,
    #[arg(long, default_value_t = 1e-6)]
    csv_tau_min: f64,
    #[arg(long, default_value_t = 1e-4)]
    csv_tau_max: f64,
    #[arg(long, default_value_t = 1e-7)]
    csv_taper: f64,
}

#[derive(Args)]
struct DlspecArgs {
    #[command(flatten)]
    surface: SurfaceOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Surface description (JSON).
    #[arg(long)]
    surface: PathBuf,
    /// Frequency list, one nonnegative value per line.
    #[arg(long)]
    eigs: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    sigma: f64,
    #[arg(long, default_value_t = 8.0)]
    tmax: f64,
    /// Time-grid step.
    #[arg(long, default_value_t = 0.002)]
    step: f64,
    /// Peak threshold as a multiple of the median trace magnitude.
    #[arg(long, default_value_t = 10.0)]
    prominence: f64,
    #[arg(long, default_value_t = 8)]
    max_diffractions: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of the smoothed trace: t, Re, Im, magnitude.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BandsArgs {
    /// Surface description (JSON).
    #[arg(long)]
    surface: PathBuf,
    /// Half-width of the reported band around the optimal slope.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    dimension: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Reproducibility record attached to every output file.
#[derive(Serialize)]
struct RunManifest {
    id: String,
    command: String,
    input_hashes: Vec<(String, String)>,
    parameters: serde_json::Value,
    tool_version: String,
    timestamp: String,
    output_paths: Vec<String>,
}

impl RunManifest {
    /// The id covers everything except the timestamp, so identical runs
    /// carry identical ids.
    fn new(
        command: &str,
        input_hashes: Vec<(String, String)>,
        parameters: serde_json::Value,
        output_paths: Vec<String>,
    ) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        for (name, hash) in &input_hashes {
            hasher.update(name.as_bytes());
            hasher.update(hash.as_bytes());
        }
        hasher.update(parameters.to_string().as_bytes());
        hasher.update(version.as_bytes());
        for p in &output_paths {
            hasher.update(p.as_bytes());
        }
        RunManifest {
            id: hex::encode(&hasher.finalize()[..16]),
            command: command.to_string(),
            input_hashes,
            parameters,
            tool_version: version,
            timestamp: chrono::Utc::now().to_rfc3339(),
            output_paths,
        }
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    manifest: RunManifest,
    result: T,
}

enum CliError {
    Validation(String),
    Budget(String),
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EnumError> for CliError {
    fn from(e: EnumError) -> Self {
        match e {
            EnumError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..16]))
}

fn load_surface(path: &Path) -> Result<(ConeGraph, String), CliError> {
    let hash = file_hash(path)?;
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let spec: SurfaceSpec = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((spec.to_graph()?, hash))
}

fn emit<T: Serialize>(envelope: &Envelope<T>, out: &Option<PathBuf>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(envelope)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

/// 17 significant digits: round-trips f64 exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>], manifest_id: &str) -> Result<(), CliError> {
    let mut s = format!("# manifest {manifest_id}\n{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn out_paths(paths: &[&Option<PathBuf>]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.as_ref().map(|p| p.display().to_string()))
        .collect()
}

fn run_geodesics(args: GeodesicsArgs) -> Result<(), CliError> {
    let (graph, hash) = load_surface(&args.surface.surface)?;
    let chains = enumerate_cached(
        &graph,
        args.surface.max_length,
        args.surface.max_diffractions,
        args.surface.node_budget,
    )?;
    let manifest = RunManifest::new(
        "geodesics",
        vec![(args.surface.surface.display().to_string(), hash)],
        serde_json::json!({
            "max_length": args.surface.max_length,
            "max_diffractions": args.surface.max_diffractions,
            "node_budget": args.surface.node_budget,
        }),
        out_paths(&[&args.out]),
    );
    emit(&Envelope { manifest, result: chains }, &args.out)
}

fn run_diffract(args: DiffractArgs) -> Result<(), CliError> {
    let result = if args.mode_sum {
        abel_mode_sum_circle(
            args.alpha,
            args.theta_in,
            args.theta_out,
            &DEFAULT_DAMPING_SCHEDULE,
            1e-6,
        )
    } else {
        diffraction_coefficient_closed(args.alpha, args.theta_in, args.theta_out)
    }
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let manifest = RunManifest::new(
        "diffract",
        vec![],
        serde_json::json!({
            "alpha": args.alpha,
            "theta_in": args.theta_in,
            "theta_out": args.theta_out,
            "mode_sum": args.mode_sum,
        }),
        out_paths(&[&args.out]),
    );
    emit(&Envelope { manifest, result }, &args.out)
}

fn run_trace(args: TraceArgs) -> Result<(), CliError> {
    let (graph, hash) = load_surface(&args.surface.surface)?;
    let chains = enumerate_cached(
        &graph,
        args.surface.max_length,
        args.surface.max_diffractions,
        args.surface.node_budget,
    )?;
    let (predictions, skipped) =
        predict_singularities(&graph, &chains, args.dimension, CutoffSpec::default());
    let manifest = RunManifest::new(
        "trace",
        vec![(args.surface.surface.display().to_string(), hash)],
        serde_json::json!({
            "max_length": args.surface.max_length,
            "max_diffractions": args.surface.max_diffractions,
            "dimension": args.dimension,
        }),
        out_paths(&[&args.out, &args.csv]),
    );
    if let Some(csv) = &args.csv {
        let first = predictions
            .first()
            .ok_or_else(|| CliError::Validation("no predictions; nothing to export".into()))?;
        // Rebuild the symbol behind the first prediction: decay s = p + 1
        // where p is the time-domain exponent.
        let symbol = SymbolDescriptor {
            location: first.location,
            primitive_length: first.location,
            diffraction_count: 1,
            dimension: args.dimension,
            exponent: first.exponent + 1.0,
            prefactor: first.leading_coefficient,
            cutoff: CutoffSpec::default(),
            vanishing: false,
        };
        let taus: Vec<f64> = (0..args.csv_points)
            .map(|i| {
                let f = i as f64 / (args.csv_points.max(2) - 1) as f64;
                args.csv_tau_min * (args.csv_tau_max / args.csv_tau_min).powf(f)
            })
            .collect();
        let series = numeric_symbol_transform(&symbol, &taus, args.csv_taper)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let rows: Vec<Vec<f64>> = taus
            .iter()
            .zip(&series)
            .map(|(&tau, v)| vec![tau, v.re, v.im, v.norm()])
            .collect();
        write_csv(csv, "tau,re,im,abs", &rows, &manifest.id)?;
    }
    emit(
        &Envelope {
            manifest,
            result: serde_json::json!({
                "predictions": predictions,
                "skipped": skipped,
            }),
        },
        &args.out,
    )
}

fn run_dlspec(args: DlspecArgs) -> Result<(), CliError> {
    let (graph, hash) = load_surface(&args.surface.surface)?;
    let (entries, _) = dlspec(
        &graph,
        args.surface.max_length,
        args.surface.max_diffractions,
        args.surface.node_budget,
    )?;
    let manifest = RunManifest::new(
        "dlspec",
        vec![(args.surface.surface.display().to_string(), hash)],
        serde_json::json!({
            "max_length": args.surface.max_length,
            "max_diffractions": args.surface.max_diffractions,
        }),
        out_paths(&[&args.out]),
    );
    emit(&Envelope { manifest, result: entries }, &args.out)
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let (graph, surface_hash) = load_surface(&args.surface)?;
    let eigs_hash = file_hash(&args.eigs)?;
    let freqs = load_frequencies(&args.eigs).map_err(|e| CliError::Validation(e.to_string()))?;
    if !(args.sigma > 0.0) || !(args.tmax > 0.0) || !(args.step > 0.0) {
        return Err(CliError::Validation(
            "sigma, tmax and step must be positive".into(),
        ));
    }
    let n = (args.tmax / args.step) as usize;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * args.step).collect();
    let trace = smoothed_trace(&freqs, args.sigma, &grid)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let peaks =
        detect_peaks(&trace, args.prominence).map_err(|e| CliError::Validation(e.to_string()))?;
    let (entries, _) = dlspec(&graph, args.tmax, args.max_diffractions, args.node_budget)?;
    let times: Vec<f64> = entries.iter().map(|e| e.length).collect();
    let report = compare_with_prediction(&peaks, &times, args.sigma);
    let manifest = RunManifest::new(
        "compare",
        vec![
            (args.surface.display().to_string(), surface_hash),
            (args.eigs.display().to_string(), eigs_hash),
        ],
        serde_json::json!({
            "sigma": args.sigma,
            "tmax": args.tmax,
            "step": args.step,
            "prominence": args.prominence,
            "max_diffractions": args.max_diffractions,
        }),
        out_paths(&[&args.out, &args.csv]),
    );
    if let Some(csv) = &args.csv {
        let rows: Vec<Vec<f64>> = trace
            .t_grid
            .iter()
            .zip(&trace.values)
            .map(|(&t, v)| vec![t, v.re, v.im, v.norm()])
            .collect();
        write_csv(csv, "t,re,im,abs", &rows, &manifest.id)?;
    }
    emit(&Envelope { manifest, result: report }, &args.out)
}

fn run_bands(args: BandsArgs) -> Result<(), CliError> {
    let (graph, hash) = load_surface(&args.surface)?;
    if !(args.epsilon > 0.0) {
        return Err(CliError::Validation("epsilon must be positive".into()));
    }
    let report = optimal_band(&graph, args.dimension, args.epsilon)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let manifest = RunManifest::new(
        "bands",
        vec![(args.surface.display().to_string(), hash)],
        serde_json::json!({
            "epsilon": args.epsilon,
            "dimension": args.dimension,
        }),
        out_paths(&[&args.out]),
    );
    emit(&Envelope { manifest, result: report }, &args.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Geodesics(args) => run_geodesics(args),
        Command::Diffract(args) => run_diffract(args),
        Command::Trace(args) => run_trace(args),
        Command::Dlspec(args) => run_dlspec(args),
        Command::Compare(args) => run_compare(args),
        Command::Bands(args) => run_bands(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
    }
}
