//! Command line front end.
//!
//! Five subcommands tie the pipeline together: `simulate` draws click counts
//! from a detector model, `reconstruct` solves for the POVM, `measure`
//! evaluates the entanglement measure of a POVM file, `sweep` produces the
//! measure-versus-loss curve, and `swap-check` verifies the swap equivalence
//! law on random instances.
//!
//! Every command writes its artifacts into `--out` together with a
//! `manifest.json` listing the exact command line, the resolved parameters
//! and every output file; re-running the recorded command reproduces the
//! outputs byte for byte. Files are written atomically (temp file + rename).
//!
//! Exit codes: 0 success, 2 validation, 3 numerical, 4 I/O.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::entanglement::{
    log_negativity, measure_of_povm, random_povm_element, swap_remaining_state, SweepMode,
};
use crate::fock::{haar_unitary, truncate_to_two_qubits, Operator};
use crate::optics::{DetectorModel, PovmPair};
use crate::probes::{
    experimental_probe_set, minimal_probe_set, probes_from_json, AmplitudeTable, ProbeSpec,
};
use crate::tomography::{
    derive_seed, exact_probabilities, reconstruct_convex,
    reconstruct_convex_from_probabilities, run_rng, simulate_counts, CountRecord,
    ReconstructionResult, SolverOptions,
};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "entlab", version, about = "Two-mode click-detector tomography toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate tomography runs: binomial click counts for each probe.
    Simulate(SimulateArgs),
    /// Reconstruct the on/off POVM from counts or exact probabilities.
    Reconstruct(ReconstructArgs),
    /// Entanglement measure of a POVM file.
    Measure(MeasureArgs),
    /// Measure of the detector versus channel loss, as CSV.
    Sweep(SweepArgs),
    /// Verify the swap equivalence law on random instances.
    SwapCheck(SwapCheckArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Detector model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Probe set: a JSON file path, or `paper19` / `minimal14`.
    #[arg(long, default_value = "paper19")]
    probes: String,
    /// Shots per probe per repetition.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Number of repetitions (one counts file each).
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Master seed; repetition k uses the k-th derived sub-seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit exact click probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Counts JSON file (array of {probe_id, shots, on_count}).
    #[arg(long, conflicts_with = "exact")]
    counts: Option<PathBuf>,
    /// Exact-probability JSON file (array of {probe_id, probability}).
    #[arg(long)]
    exact: Option<PathBuf>,
    /// Probe set: a JSON file path, or `paper19` / `minimal14`.
    #[arg(long, default_value = "paper19")]
    probes: String,
    /// Iteration cutoff of the projected-gradient loop.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Convergence threshold on the parameter change.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Weight residuals by inverse binomial shot variance.
    #[arg(long)]
    weighted: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    /// POVM file: a reconstruction result, an on/off pair, or a bare
    /// operator (6x6 on the N=2 basis, or 4x4 qubit (x) qubit).
    povm_file: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepModeArg {
    Theory,
    Simulated,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Efficiency of the transmitted-arm detector.
    #[arg(long)]
    eta1: f64,
    /// Efficiency of the second-arm detector.
    #[arg(long)]
    eta2: f64,
    /// Loss grid as `start:stop:steps` (inclusive, `steps` points).
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, default_value_t = SweepModeArg::Theory)]
    mode: SweepModeArg,
    /// Probe set for simulated mode.
    #[arg(long, default_value = "paper19")]
    probes: String,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 6)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    weighted: bool,
    /// Also write a JSON file embedding the per-point POVMs.
    #[arg(long)]
    emit_povms: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SwapCheckArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    if let Ok(threads) = std::env::var("ENTLAB_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            // Ignore failures: the global pool may already exist.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line = argv.join(" ");
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &command_line),
        Command::Reconstruct(a) => cmd_reconstruct(a, &command_line),
        Command::Measure(a) => cmd_measure(a, &command_line),
        Command::Sweep(a) => cmd_sweep(a, &command_line),
        Command::SwapCheck(a) => cmd_swap_check(a, &command_line),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

// --- manifest and file helpers ---------------------------------------------------

/// Record of one command invocation: enough to replay it bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    /// Output files, relative to the manifest's directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn load_model(path: &Path) -> Result<DetectorModel> {
    let model: DetectorModel = parse_json(path, &read_to_string(path)?)?;
    model.validate()?;
    Ok(model)
}

/// Resolves `--probes`: a literal set name or a probe file path.
fn load_probes(spec: &str) -> Result<Vec<ProbeSpec>> {
    match spec {
        "paper19" => Ok(experimental_probe_set()),
        "minimal14" => minimal_probe_set(2, &AmplitudeTable::paper_defaults(2)),
        path => {
            let p = Path::new(path);
            probes_from_json(&read_to_string(p)?).map_err(|e| match e {
                Error::Json { source, .. } => Error::Json {
                    path: p.display().to_string(),
                    source,
                },
                other => other,
            })
        }
    }
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    write_atomic(&out.join("manifest.json"), &json_line(manifest))
}

/// Exact click probability of one probe, for `--exact` pipelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityRecord {
    pub probe_id: String,
    pub probability: f64,
}

// --- commands -------------------------------------------------------------------

fn cmd_simulate(args: &SimulateArgs, command_line: &str) -> Result<i32> {
    if args.shots == 0 {
        return Err(Error::Validation("--shots must be positive".into()));
    }
    if args.reps == 0 {
        return Err(Error::Validation("--reps must be positive".into()));
    }
    let model = load_model(&args.model)?;
    let probes = load_probes(&args.probes)?;

    let mut manifest = RunManifest::new(command_line, Some(args.seed));
    manifest
        .param("model", serde_json::to_string(&model).expect("model"))
        .param("probes", &args.probes)
        .param("probe_count", probes.len())
        .param("shots", args.shots)
        .param("reps", args.reps)
        .param("exact", args.exact);

    if args.exact {
        let ps = exact_probabilities(&model, &probes)?;
        let records: Vec<ProbabilityRecord> = probes
            .iter()
            .zip(ps)
            .map(|(p, probability)| ProbabilityRecord {
                probe_id: p.id.clone(),
                probability,
            })
            .collect();
        let name = "probabilities.json";
        write_atomic(&args.out.join(name), &json_line(&records))?;
        manifest.artifacts.push(name.into());
    } else {
        for rep in 0..args.reps {
            let counts =
                simulate_counts(&model, &probes, args.shots, derive_seed(args.seed, rep as u64))?;
            let name = format!("counts_rep{rep:03}.json");
            write_atomic(&args.out.join(&name), &json_line(&counts))?;
            manifest.artifacts.push(name);
        }
    }
    write_manifest(&args.out, &manifest)?;
    println!(
        "wrote {} file(s) to {}",
        manifest.artifacts.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_reconstruct(args: &ReconstructArgs, command_line: &str) -> Result<i32> {
    let probes = load_probes(&args.probes)?;
    let opts = SolverOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        weighted: args.weighted,
    };

    let result: ReconstructionResult = match (&args.counts, &args.exact) {
        (Some(counts_path), None) => {
            let counts: Vec<CountRecord> =
                parse_json(counts_path, &read_to_string(counts_path)?)?;
            reconstruct_convex(&counts, &probes, 2, &opts)?
        }
        (None, Some(probs_path)) => {
            if args.weighted {
                return Err(Error::Validation(
                    "--weighted needs shot counts; it cannot be combined with --exact".into(),
                ));
            }
            let records: Vec<ProbabilityRecord> =
                parse_json(probs_path, &read_to_string(probs_path)?)?;
            let mut by_id: BTreeMap<&str, f64> = BTreeMap::new();
            for r in &records {
                by_id.insert(&r.probe_id, r.probability);
            }
            let ps: Vec<f64> = probes
                .iter()
                .map(|p| {
                    by_id.get(p.id.as_str()).copied().ok_or_else(|| {
                        Error::InvalidCounts(format!("no probability for probe {}", p.id))
                    })
                })
                .collect::<Result<_>>()?;
            reconstruct_convex_from_probabilities(&ps, None, &probes, 2, &opts)?
        }
        _ => {
            return Err(Error::Validation(
                "exactly one of --counts or --exact is required".into(),
            ))
        }
    };

    let mut manifest = RunManifest::new(command_line, None);
    manifest
        .param("probes", &args.probes)
        .param("max_iters", args.max_iters)
        .param("tol", args.tol)
        .param("weighted", args.weighted)
        .param("converged", result.converged)
        .param("residual", result.residual);
    let name = "reconstruction.json";
    write_atomic(&args.out.join(name), &json_line(&result))?;
    manifest.artifacts.push(name.into());
    write_manifest(&args.out, &manifest)?;

    println!(
        "residual {:.3e} after {} iteration(s); converged: {}",
        result.residual, result.iterations, result.converged
    );
    Ok(if result.converged { 0 } else { 3 })
}

/// Measure report of one POVM file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReport {
    pub m_ln: f64,
    /// Dimension the measure was evaluated on (always the 4x4 qubit view).
    pub dim: usize,
    pub trace: f64,
}

/// Accepts a reconstruction result, an on/off pair, or a bare operator, and
/// returns the qubit (x) qubit "on" element.
fn povm_from_file(path: &Path) -> Result<Operator> {
    let text = read_to_string(path)?;
    if let Ok(result) = serde_json::from_str::<ReconstructionResult>(&text) {
        return Ok(result.povm_on_4x4);
    }
    if let Ok(pair) = serde_json::from_str::<PovmPair>(&text) {
        return truncate_to_two_qubits(pair.on());
    }
    let op: Operator = parse_json(path, &text)?;
    match op.dim() {
        4 => Ok(op),
        6 => truncate_to_two_qubits(&op),
        d => Err(Error::Validation(format!(
            "expected a 4x4 or 6x6 POVM element, got dimension {d}"
        ))),
    }
}

fn cmd_measure(args: &MeasureArgs, command_line: &str) -> Result<i32> {
    let on4 = povm_from_file(&args.povm_file)?;
    let m_ln = measure_of_povm(&on4, 2, 2)?;
    let report = MeasureReport {
        m_ln,
        dim: 4,
        trace: on4.trace().re,
    };
    println!("M_LN = {m_ln}");
    if let Some(out) = &args.out {
        let mut manifest = RunManifest::new(command_line, None);
        manifest.param("povm_file", args.povm_file.display());
        let name = "measure.json";
        write_atomic(&out.join(name), &json_line(&report))?;
        manifest.artifacts.push(name.into());
        write_manifest(out, &manifest)?;
    }
    Ok(0)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "grid must be start:stop:steps, got {spec}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid start {}", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid stop {}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::Validation(format!("bad grid steps {}", parts[2])))?;
    if steps == 0 {
        return Err(Error::Validation("grid needs at least one step".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// One sweep point together with the POVM behind it (`--emit-povms`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPovmRecord {
    pub loss: f64,
    pub m_ln: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub source: String,
    pub povm_on: Operator,
    pub povm_on_4x4: Operator,
}

fn cmd_sweep(args: &SweepArgs, command_line: &str) -> Result<i32> {
    let grid = parse_grid(&args.grid)?;
    let opts = SolverOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        weighted: args.weighted,
    };
    let probes;
    let mode = match args.mode {
        SweepModeArg::Theory => SweepMode::Theory,
        SweepModeArg::Simulated => {
            if args.reps < 2 {
                return Err(Error::Validation(
                    "simulated mode needs --reps >= 2 for error bars".into(),
                ));
            }
            probes = load_probes(&args.probes)?;
            SweepMode::Simulated {
                probes: &probes,
                shots: args.shots,
                reps: args.reps,
                seed: args.seed,
                opts,
            }
        }
    };
    let outputs = crate::entanglement::loss_sweep_with_povms(args.eta1, args.eta2, &grid, &mode)?;

    let mut csv = String::from("L,m_ln,stderr,source\n");
    for o in &outputs {
        let stderr = o
            .point
            .stderr
            .map(|s| s.to_string())
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            o.point.loss, o.point.m_ln, stderr, o.point.source
        ));
    }

    let mut manifest = RunManifest::new(command_line, Some(args.seed));
    manifest
        .param("eta1", args.eta1)
        .param("eta2", args.eta2)
        .param("grid", &args.grid)
        .param("mode", format!("{:?}", args.mode).to_lowercase())
        .param("shots", args.shots)
        .param("reps", args.reps);
    write_atomic(&args.out.join("sweep.csv"), &csv)?;
    manifest.artifacts.push("sweep.csv".into());

    if args.emit_povms {
        let records: Vec<SweepPovmRecord> = outputs
            .iter()
            .map(|o| SweepPovmRecord {
                loss: o.point.loss,
                m_ln: o.point.m_ln,
                stderr: o.point.stderr,
                source: o.point.source.to_string(),
                povm_on: o.on_6.clone(),
                povm_on_4x4: o.on_4.clone(),
            })
            .collect();
        write_atomic(&args.out.join("sweep_povms.json"), &json_line(&records))?;
        manifest.artifacts.push("sweep_povms.json".into());
    }
    write_manifest(&args.out, &manifest)?;

    let failed = outputs
        .iter()
        .any(|o| o.point.converged == Some(false));
    for o in &outputs {
        println!(
            "L = {:<8} M_LN = {:.6}{}",
            o.point.loss,
            o.point.m_ln,
            o.point
                .stderr
                .map(|s| format!(" +- {s:.6}"))
                .unwrap_or_default()
        );
    }
    Ok(if failed { 3 } else { 0 })
}

/// Outcome of the swap-equivalence check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapCheckReport {
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn cmd_swap_check(args: &SwapCheckArgs, command_line: &str) -> Result<i32> {
    use rayon::prelude::*;

    if args.trials == 0 {
        return Err(Error::Validation("--trials must be positive".into()));
    }
    let deviations: Vec<f64> = (0..args.trials)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = run_rng(derive_seed(args.seed, k as u64));
            let pi = random_povm_element(4, &mut rng);
            let u1 = haar_unitary(2, &mut rng);
            let v1 = haar_unitary(2, &mut rng);
            let u2 = haar_unitary(2, &mut rng);
            let v2 = haar_unitary(2, &mut rng);
            let (rho_ad, _p) = swap_remaining_state(&pi, &u1, &v1, &u2, &v2)?;
            let lhs = log_negativity(&rho_ad, 2, 2)?;
            let rhs = measure_of_povm(&pi, 2, 2)?;
            Ok((lhs - rhs).abs())
        })
        .collect::<Result<_>>()?;
    let max_deviation = deviations.into_iter().fold(0.0, f64::max);
    let report = SwapCheckReport {
        trials: args.trials,
        seed: args.seed,
        max_deviation,
        tolerance: 1e-9,
        pass: max_deviation <= 1e-9,
    };
    println!(
        "{}: max |E_LN(rho_AD) - M_LN(Pi)| = {:.3e} over {} trials",
        if report.pass { "PASS" } else { "FAIL" },
        report.max_deviation,
        report.trials
    );
    if let Some(out) = &args.out {
        let mut manifest = RunManifest::new(command_line, Some(args.seed));
        manifest.param("trials", args.trials);
        let name = "swap_check.json";
        write_atomic(&out.join(name), &json_line(&report))?;
        manifest.artifacts.push(name.into());
        write_manifest(out, &manifest)?;
    }
    Ok(if report.pass { 0 } else { 3 })
}
