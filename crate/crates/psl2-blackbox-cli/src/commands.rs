//! Subcommands: `unipotent`, `coordinatize`, `rho` and `bench`.

use crate::bench::{bench_coordinatized, bench_q, HEADER};
use clap::{Parser, Subcommand, ValueEnum};
use psl2_blackbox::bbox::GroupElement;
use psl2_blackbox::involution::{Confidence, SerendipityOutcome};
use psl2_blackbox::kfield::{decode, residue_table, BlackBoxFieldK, FieldElementK, Policy};
use psl2_blackbox::morphism::{rho, rho_inverse, so3k_check, standard_to_k, Matrix3K};
use psl2_blackbox::oracle::MatrixKind;
use psl2_blackbox::pipeline::{
    coordinatize, element_from_wire, element_to_wire, matrix_from_wire, matrix_to_wire, CertificateJson, Coordinatized,
    ElementWire, FieldElementWire, FrameFile, GroupSpec, PipelineError,
};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("round trip failed: {0}")]
    Mismatch(&'static str),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) if e.is_exhaustion() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "psl2bb", version, about = "Black-box recognition of PSL2 and SO3 over finite fields")]
pub struct Cli {
    /// Group spec JSON: {"type": "PSL2"|"PGL2", "field": {"p", "k", "poly"}, "E": "<decimal>", "seed": <int>}.
    #[arg(long, global = true, env = "PSL2BB_SPEC")]
    pub spec: Option<PathBuf>,
    /// Seed of every random choice made by the algorithms.
    #[arg(long, global = true, env = "PSL2BB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Failure probability 2^-k for k >= 1, or a success probability below 1.
    #[arg(long, global = true, env = "PSL2BB_CONFIDENCE", default_value_t = 20.0)]
    pub confidence: f64,
    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "PSL2BB_OUT")]
    pub out: Option<PathBuf>,
    /// Independent searches run in parallel; the lowest-numbered success is reported.
    #[arg(long, global = true, env = "PSL2BB_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "PSL2")]
    Psl2,
    #[value(name = "PGL2")]
    Pgl2,
}

impl From<KindArg> for MatrixKind {
    fn from(k: KindArg) -> MatrixKind {
        match k {
            KindArg::Psl2 => MatrixKind::Psl2,
            KindArg::Pgl2 => MatrixKind::Pgl2,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finds the characteristic p and an element of order p.
    Unipotent {
        /// Trusted characteristic; skips the additive walk.
        #[arg(long, env = "PSL2BB_P_HINT")]
        p_hint: Option<u64>,
    },
    /// Builds the frame and the field K; saves the frame and prints small tables.
    Coordinatize,
    /// Applies the adjoint map to an element, or its inverse to a matrix.
    Rho {
        /// Frame file written by `coordinatize`.
        #[arg(long, env = "PSL2BB_FRAME")]
        frame: PathBuf,
        /// e1, e2, e3, theta, d1, d2, d3, identity, random, or a JSON file holding a 2x2 matrix.
        #[arg(long, conflicts_with = "matrix")]
        element: Option<String>,
        /// JSON file: {"residues": [[..3]; 3]} or {"matrix": <output of rho>}.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Also checks that the inverse map undoes the result.
        #[arg(long)]
        round_trip: bool,
    },
    /// Writes operation counts per procedure as CSV.
    Bench {
        /// Prime field sizes, used when no spec is given.
        #[arg(long, value_delimiter = ',', default_value = "13,101,1009,10007")]
        sweep: Vec<u64>,
        #[arg(long, value_enum, default_value = "PGL2")]
        kind: KindArg,
        /// Repetitions per procedure.
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

/// The settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub seed: u64,
    pub confidence: Confidence,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

impl From<&Cli> for RunConfig {
    fn from(c: &Cli) -> RunConfig {
        RunConfig {
            spec: c.spec.clone(),
            seed: c.seed,
            confidence: Confidence::from_value(c.confidence),
            out: c.out.clone(),
            jobs: c.jobs.max(1),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn emit(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => write_file(p, text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn load_spec(cfg: &RunConfig) -> Result<GroupSpec, CliError> {
    let path = cfg.spec.as_ref().ok_or_else(|| CliError::Usage("--spec is required".into()))?;
    Ok(GroupSpec::from_json(&read(path)?)?)
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "psl2bb: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::from(cli);
    match &cli.command {
        Command::Unipotent { p_hint } => cmd_unipotent(&cfg, *p_hint, stdout),
        Command::Coordinatize => cmd_coordinatize(&cfg, stdout),
        Command::Rho { frame, element, matrix, round_trip } => {
            cmd_rho(&cfg, frame, element.as_deref(), matrix.as_deref(), *round_trip, stdout)
        }
        Command::Bench { sweep, kind, reps } => cmd_bench(&cfg, sweep, (*kind).into(), *reps, stdout),
    }
}

/// Seed of job `i`; job 0 uses the configured seed.
pub fn job_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn unipotent_certificate(spec: &GroupSpec, cfg: &RunConfig, p_hint: Option<u64>) -> Result<CertificateJson, PipelineError> {
    let attempt = |i: usize| -> Result<CertificateJson, PipelineError> {
        let c = coordinatize(spec, job_seed(cfg.seed, i), cfg.confidence)?;
        Ok(c.unipotent(p_hint)?.1)
    };
    if cfg.jobs == 1 {
        return attempt(0);
    }
    let results: Vec<Result<CertificateJson, PipelineError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.jobs).map(|i| s.spawn(move || attempt(i))).collect();
        handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
    });
    let mut first_err = None;
    for r in results {
        match r {
            Ok(c) => return Ok(c),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.expect("at least one job"))
}

pub fn cmd_unipotent(cfg: &RunConfig, p_hint: Option<u64>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_spec(cfg)?;
    let cert = unipotent_certificate(&spec, cfg, p_hint)?;
    emit(cfg, &json(&cert), stdout)
}

fn through<T>(r: SerendipityOutcome<T>) -> T {
    match r {
        SerendipityOutcome::Ok(v) => v,
        SerendipityOutcome::Unipotent(_) => unreachable!("traversal never interrupts"),
    }
}

/// Sum and product tables of the residues `0..n`, each entry checked against
/// the image of the residue computed in `Z/pZ`.
pub fn sanity_tables(k: &BlackBoxFieldK, p: u64, n: u64) -> Result<(String, bool), PipelineError> {
    let table = residue_table(k, n)?;
    let mut out = String::new();
    let mut agree = true;
    for (sym, op) in [('+', 0), ('*', 1)] {
        out += &format!("{sym} |");
        for b in 0..n {
            out += &format!(" {b:>2}");
        }
        out += "\n";
        for a in 0..n {
            out += &format!("{a:>2}|");
            for b in 0..n {
                let (x, y) = (&table[a as usize], &table[b as usize]);
                let r = if op == 0 { k.add_with(x, y, Policy::Traverse)? } else { k.mul_with(x, y, Policy::Traverse)? };
                let expected = if op == 0 { (a + b) % p } else { (a * b) % p };
                if k.eq(&through(r), &standard_to_k(k, p, expected)?) {
                    out += &format!(" {expected:>2}");
                } else {
                    agree = false;
                    out += "  ?";
                }
            }
            out += "\n";
        }
    }
    Ok((out, agree))
}

pub fn cmd_coordinatize(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_spec(cfg)?;
    let c = coordinatize(&spec, cfg.seed, cfg.confidence)?;
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("frame.json"));
    write_file(&path, &json(&c.frame_file()))?;
    let p = c.characteristic();
    let (tables, agree) = sanity_tables(&c.k, p, p.min(16))?;
    let text = format!(
        "field K of characteristic {p} built on {}; frame saved to {}\n{tables}tables agree with Z/{p}Z: {}\n",
        c.oracle.black_box().name(),
        path.display(),
        if agree { "yes" } else { "no" }
    );
    stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
    if agree {
        Ok(())
    } else {
        Err(CliError::Mismatch("field tables"))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Residues { residues: [[i64; 3]; 3] },
    Matrix { matrix: [[FieldElementWire; 3]; 3] },
}

#[derive(Debug, Serialize)]
struct RhoOutput {
    element: String,
    matrix: [[FieldElementWire; 3]; 3],
    residues: Option<Vec<Vec<Option<u64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    round_trip: Option<&'static str>,
}

#[derive(Debug, Serialize)]
struct RhoInverseOutput {
    element: Option<ElementWire>,
    payload: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    round_trip: Option<&'static str>,
}

/// Residues of the entries, when the prime field is small enough to tabulate.
const RESIDUE_LIMIT: u64 = 4096;

fn residues(k: &BlackBoxFieldK, p: u64, m: &Matrix3K) -> Result<Option<Vec<Vec<Option<u64>>>>, PipelineError> {
    if p > RESIDUE_LIMIT {
        return Ok(None);
    }
    let table = residue_table(k, p)?;
    Ok(Some((0..3).map(|i| (0..3).map(|j| decode(k, &table, m.entry(i, j))).collect()).collect()))
}

fn named_element(c: &Coordinatized, name: &str) -> Result<GroupElement, CliError> {
    let f = c.k.frame();
    Ok(match name {
        "e1" => f.e1.clone(),
        "e2" => f.e2.clone(),
        "e3" => f.e3.clone(),
        "theta" => f.theta.clone(),
        "d1" => f.d1.clone(),
        "d2" => f.d2.clone(),
        "d3" => f.d3.clone(),
        "identity" => c.x().identity(),
        "random" => c.random(),
        path => {
            let w: ElementWire = serde_json::from_str(&read(Path::new(path))?).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            c.from_input(&element_from_wire(&c.oracle, &w)?)?
        }
    })
}

fn matrix_from_input(c: &Coordinatized, input: &MatrixInput) -> Result<Matrix3K, CliError> {
    let k = &c.k;
    let p = c.characteristic();
    Ok(match input {
        MatrixInput::Matrix { matrix } => matrix_from_wire(k, matrix)?,
        MatrixInput::Residues { residues } => {
            let entry = |v: i64| standard_to_k(k, p, v.rem_euclid(p as i64) as u64).map_err(PipelineError::from);
            let mut rows: Vec<[FieldElementK; 3]> = Vec::with_capacity(3);
            for r in residues {
                rows.push([entry(r[0])?, entry(r[1])?, entry(r[2])?]);
            }
            Matrix3K { rows: rows.try_into().expect("three rows") }
        }
    })
}

pub fn cmd_rho(
    cfg: &RunConfig,
    frame: &Path,
    element: Option<&str>,
    matrix: Option<&Path>,
    round_trip: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let file: FrameFile = serde_json::from_str(&read(frame)?).map_err(|e| CliError::Usage(format!("{}: {e}", frame.display())))?;
    let c = Coordinatized::from_frame_file(&file)?;
    let k = &c.k;
    let x = c.x().fork(cfg.seed);
    let p = c.characteristic();
    let text = match (element, matrix) {
        (_, Some(path)) => {
            let input: MatrixInput =
                serde_json::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let m = matrix_from_input(&c, &input)?;
            if !so3k_check(k, &m).map_err(PipelineError::from)? {
                return Err(CliError::Usage("matrix is not in SO3(K)".into()));
            }
            let g = rho_inverse(k, &m).map_err(PipelineError::from)?;
            let status = if round_trip {
                let back = rho(k, &g).map_err(PipelineError::from)?;
                if !psl2_blackbox::morphism::matrix_eq(k, &back, &m) {
                    return Err(CliError::Mismatch("rho(rho_inverse(r)) differs from r"));
                }
                Some("OK")
            } else {
                None
            };
            let element = c.to_input(&g).map(|y| element_to_wire(&c.oracle, &y));
            json(&RhoInverseOutput { element, payload: g.payload().to_vec(), round_trip: status })
        }
        (name, None) => {
            let name = name.unwrap_or("random");
            let g = if name == "random" { x.random() } else { named_element(&c, name)? };
            let m = rho(k, &g).map_err(PipelineError::from)?;
            let status = if round_trip {
                let back = rho_inverse(k, &m).map_err(PipelineError::from)?;
                if !x.eq(&back, &g) {
                    return Err(CliError::Mismatch("rho_inverse(rho(x)) differs from x"));
                }
                Some("OK")
            } else {
                None
            };
            json(&RhoOutput { element: name.to_string(), matrix: matrix_to_wire(&m), residues: residues(k, p, &m)?, round_trip: status })
        }
    };
    emit(cfg, &text, stdout)
}

pub fn cmd_bench(cfg: &RunConfig, sweep: &[u64], kind: MatrixKind, reps: usize, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    match &cfg.spec {
        Some(_) => {
            let spec = load_spec(cfg)?;
            let c = coordinatize(&spec, cfg.seed, cfg.confidence)?;
            let q = c.oracle.field().order_u64().ok_or_else(|| CliError::Usage("field too large to benchmark".into()))?;
            rows.extend(bench_coordinatized(&c, q, reps)?);
        }
        None => {
            for &q in sweep {
                rows.extend(bench_q(q, kind, cfg.seed, cfg.confidence, reps)?);
            }
        }
    }
    let mut text = String::from(HEADER) + "\n";
    for r in &rows {
        text += &r.to_csv();
        text += "\n";
    }
    emit(cfg, &text, stdout)
}
