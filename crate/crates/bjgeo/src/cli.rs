//! Command-line surface. Every invocation produces one report object on
//! standard output (or --out); the human format is rendered from the same
//! tree. Exit codes: 0 success, 2 precondition violation, 3 witness not
//! found, 1 internal failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::extremality::{is_extreme_contraction_with, ExtremalityError, ExtremalityVerdict};
use crate::grothendieck::{lower_bound_with, GrothendieckError, GrothendieckSearchResult};
use crate::hull::OrthoCertificate;
use crate::matfile::{fmt_f64, parse_matrix, MatFileError};
use crate::operator::{
    norming_set_with, op_norm_with, operator_is_smooth, operator_range_atoms, OperatorError,
    OperatorMatrix, SignedPermutation, DEFAULT_PHASE_GRID,
};
use crate::report::{matrix_value, scalar, vector_value, Report};
use crate::symmetry::{
    left_symmetry_witness, right_symmetry_witness, PairRelation, SymmetryError, WitnessReport,
};
use crate::tol;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_NO_WITNESS: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "bjgeo",
    about = "Orthogonality, smoothness, extremality, and symmetry diagnostics \
             for small matrices acting from sup-normed to sum-normed space",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
    /// Worker threads for parallel stages (0 = all available).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    JsonLines,
    Human,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Operator norm from sup-normed domain to sum-normed codomain.
    Norm {
        matrix: PathBuf,
        /// Phase discretization per coordinate for complex matrices.
        #[arg(long, default_value_t = DEFAULT_PHASE_GRID)]
        phase_grid: usize,
    },
    /// Norm-attaining unit vectors, one per sign class.
    NormingSet {
        matrix: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PHASE_GRID)]
        phase_grid: usize,
    },
    /// Does the first operator annihilate the second through some norming
    /// functional?
    BjCheck {
        left: PathBuf,
        right: PathBuf,
        /// Margin for accepting zero inside the value hull.
        #[arg(long, default_value_t = tol::MARGIN)]
        tol: f64,
    },
    /// Unique norming direction with full-support image.
    SmoothCheck { matrix: PathBuf },
    /// Extreme point of the unit ball of operators, certified by linear
    /// programming.
    ExtremeCheck {
        matrix: PathBuf,
        /// Re-derive the certificate in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Operator S that the subject annihilates while S does not return the
    /// favor.
    LeftWitness {
        matrix: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Operator S annihilating the subject while the subject does not
    /// return the favor.
    RightWitness {
        matrix: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify the orthogonality relation of an ordered pair.
    SymmetryPair {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = tol::MARGIN)]
        tol: f64,
    },
    /// Lower-bound search for the bilinear constant G(m,n).
    Grothendieck {
        m: usize,
        n: usize,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Mat(#[from] MatFileError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Extremality(#[from] ExtremalityError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Grothendieck(#[from] GrothendieckError),
    #[error("cannot write report: {0}")]
    Out(std::io::Error),
}

fn exit_code_for(e: &CliError) -> i32 {
    match e {
        CliError::Mat(_) => EXIT_PRECONDITION,
        CliError::Operator(err) => operator_code(err),
        CliError::Extremality(err) => extremality_code(err),
        CliError::Symmetry(err) => symmetry_code(err),
        CliError::Grothendieck(err) => grothendieck_code(err),
        CliError::Out(_) => EXIT_INTERNAL,
    }
}

fn operator_code(_: &OperatorError) -> i32 {
    // Every operator-layer failure is a malformed or out-of-envelope input.
    EXIT_PRECONDITION
}

fn extremality_code(e: &ExtremalityError) -> i32 {
    match e {
        ExtremalityError::NotNormalized(_) | ExtremalityError::Envelope { .. } => EXIT_PRECONDITION,
        ExtremalityError::Operator(err) => operator_code(err),
        _ => EXIT_INTERNAL,
    }
}

fn symmetry_code(e: &SymmetryError) -> i32 {
    match e {
        SymmetryError::WitnessNotFound(_) => EXIT_NO_WITNESS,
        SymmetryError::ZeroOperator
        | SymmetryError::DomainTooSmall(_)
        | SymmetryError::NotNormOne(_)
        | SymmetryError::NotCertifiedNonExtreme
        | SymmetryError::SmoothSubject
        | SymmetryError::Product(_)
        | SymmetryError::Vector(_) => EXIT_PRECONDITION,
        SymmetryError::Operator(err) => operator_code(err),
        SymmetryError::Extremality(err) => extremality_code(err),
    }
}

fn grothendieck_code(e: &GrothendieckError) -> i32 {
    match e {
        GrothendieckError::NotNormalized(_)
        | GrothendieckError::NotUnit(_)
        | GrothendieckError::EmptySystem
        | GrothendieckError::ShapeMismatch
        | GrothendieckError::ComplexUnsupported
        | GrothendieckError::TooLarge => EXIT_PRECONDITION,
        GrothendieckError::BudgetExhausted(_) => EXIT_OK,
        GrothendieckError::Operator(err) => operator_code(err),
        GrothendieckError::Extremality(err) => extremality_code(err),
    }
}

fn load(report: &mut Report, label: &str, path: &Path) -> Result<OperatorMatrix, CliError> {
    let t = parse_matrix(path)?;
    let bytes = std::fs::read(path).map_err(|source| MatFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    report.add_input(label, &path.display().to_string(), &bytes);
    Ok(t)
}

fn ortho_cert_value(cert: &OrthoCertificate) -> Value {
    serde_json::to_value(cert).expect("certificate is plain data")
}

fn permutation_value(p: &SignedPermutation) -> Value {
    json!({
        "perm": p.perm(),
        "signs": p
            .signs()
            .iter()
            .map(|s| Value::String(fmt_f64(s.re)))
            .collect::<Vec<_>>(),
    })
}

fn witness_value(w: &WitnessReport) -> Vec<(&'static str, Value)> {
    let mut fields = vec![
        ("witness", matrix_value(&w.witness)),
        (
            "direction",
            serde_json::to_value(w.direction).expect("enum"),
        ),
        (
            "construction_path",
            serde_json::to_value(w.construction_path).expect("enum"),
        ),
        (
            "subject_to_witness",
            ortho_cert_value(&w.subject_to_witness),
        ),
        (
            "witness_to_subject",
            ortho_cert_value(&w.witness_to_subject),
        ),
    ];
    if let Some(delta) = w.delta {
        fields.push(("delta", scalar(delta)));
    }
    if let Some(pivot) = w.pivot {
        fields.push(("pivot", pivot.into()));
    }
    if let Some(p) = &w.permutation {
        fields.push(("permutation", permutation_value(p)));
    }
    fields
}

fn relation_name(r: PairRelation) -> &'static str {
    match r {
        PairRelation::Mutual => "mutual",
        PairRelation::LeftOnly => "left-only",
        PairRelation::RightOnly => "right-only",
        PairRelation::Neither => "neither",
    }
}

fn cert_with_margin(
    t: &OperatorMatrix,
    s: &OperatorMatrix,
    margin: f64,
) -> Result<OrthoCertificate, OperatorError> {
    let (atoms, approximate) = operator_range_atoms(t, s)?;
    let field = crate::field::Field::join(t.field(), s.field());
    Ok(OrthoCertificate::from_atoms(
        &atoms,
        field,
        margin,
        approximate,
    ))
}

fn dispatch(cli: &Cli, report: &mut Report) -> Result<i32, CliError> {
    report.set_config("workers", cli.workers.into());
    match &cli.command {
        Command::Norm { matrix, phase_grid } => {
            report.set_config("phase_grid", (*phase_grid).into());
            let t = load(report, "matrix", matrix)?;
            report.set_result("norm", scalar(op_norm_with(&t, *phase_grid, cli.workers)));
            Ok(EXIT_OK)
        }
        Command::NormingSet { matrix, phase_grid } => {
            report.set_config("phase_grid", (*phase_grid).into());
            let t = load(report, "matrix", matrix)?;
            let ns = norming_set_with(&t, *phase_grid, cli.workers)?;
            report.set_result("norm", scalar(op_norm_with(&t, *phase_grid, cli.workers)));
            report.set_result("approximate", ns.approximate.into());
            report.set_result(
                "representatives",
                Value::Array(ns.representatives.iter().map(vector_value).collect()),
            );
            Ok(EXIT_OK)
        }
        Command::BjCheck { left, right, tol } => {
            report.set_config("tol", scalar(*tol));
            let t = load(report, "left", left)?;
            let s = load(report, "right", right)?;
            let cert = cert_with_margin(&t, &s, *tol)?;
            report.set_result("orthogonal", cert.orthogonal.into());
            report.set_result("certificate", ortho_cert_value(&cert));
            Ok(EXIT_OK)
        }
        Command::SmoothCheck { matrix } => {
            let t = load(report, "matrix", matrix)?;
            report.set_result("smooth", operator_is_smooth(&t)?.into());
            Ok(EXIT_OK)
        }
        Command::ExtremeCheck { matrix, exact } => {
            report.set_config("exact", (*exact).into());
            let t = load(report, "matrix", matrix)?;
            let cert = is_extreme_contraction_with(&t, *exact, cli.workers)?;
            report.set_result(
                "verdict",
                match cert.verdict {
                    ExtremalityVerdict::Extreme => "Extreme",
                    ExtremalityVerdict::NotExtreme => "NotExtreme",
                    ExtremalityVerdict::InconclusiveComplex => "InconclusiveComplex",
                }
                .into(),
            );
            report.set_result("exact_arithmetic", cert.exact.into());
            report.set_result(
                "directional_optima",
                Value::Array(cert.directional_optima.iter().map(|&v| scalar(v)).collect()),
            );
            if let Some(d) = &cert.perturbation {
                report.set_result("perturbation", matrix_value(d));
            }
            Ok(EXIT_OK)
        }
        Command::LeftWitness { matrix, seed } => {
            report.set_config("seed", (*seed).into());
            let t = load(report, "matrix", matrix)?;
            let w = left_symmetry_witness(&t, *seed)?;
            for (key, value) in witness_value(&w) {
                report.set_result(key, value);
            }
            Ok(EXIT_OK)
        }
        Command::RightWitness { matrix, seed } => {
            report.set_config("seed", (*seed).into());
            let t = load(report, "matrix", matrix)?;
            let w = right_symmetry_witness(&t, *seed)?;
            for (key, value) in witness_value(&w) {
                report.set_result(key, value);
            }
            Ok(EXIT_OK)
        }
        Command::SymmetryPair { left, right, tol } => {
            report.set_config("tol", scalar(*tol));
            let t = load(report, "left", left)?;
            let s = load(report, "right", right)?;
            if t.is_zero() || s.is_zero() {
                return Err(SymmetryError::ZeroOperator.into());
            }
            let forward = cert_with_margin(&t, &s, *tol)?;
            let backward = cert_with_margin(&s, &t, *tol)?;
            let relation = match (forward.orthogonal, backward.orthogonal) {
                (true, true) => PairRelation::Mutual,
                (true, false) => PairRelation::LeftOnly,
                (false, true) => PairRelation::RightOnly,
                (false, false) => PairRelation::Neither,
            };
            report.set_result("relation", relation_name(relation).into());
            report.set_result("forward", ortho_cert_value(&forward));
            report.set_result("backward", ortho_cert_value(&backward));
            Ok(EXIT_OK)
        }
        Command::Grothendieck { m, n, budget, seed } => {
            report.set_config("budget", (*budget).into());
            report.set_config("seed", (*seed).into());
            report.set_config("m", (*m).into());
            report.set_config("n", (*n).into());
            let (result, exhausted) =
                match lower_bound_with(*m, *n, *budget, *seed, &[], cli.workers) {
                    Ok(result) => (result, false),
                    Err(GrothendieckError::BudgetExhausted(partial)) => (*partial, true),
                    Err(e) => return Err(e.into()),
                };
            fill_search_result(report, &result, exhausted);
            Ok(EXIT_OK)
        }
    }
}

fn fill_search_result(report: &mut Report, result: &GrothendieckSearchResult, exhausted: bool) {
    report.set_result("best_value", scalar(result.best_value));
    report.set_result("best_operator", matrix_value(&result.best_operator));
    let system = json!({
        "xs": result.best_system.xs.iter()
            .map(|v| v.iter().map(|&a| scalar(a)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "ys": result.best_system.ys.iter()
            .map(|v| v.iter().map(|&a| scalar(a)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    report.set_result("best_system", system);
    report.set_result("restarts", result.restarts.into());
    report.set_result("iterations", result.iterations.into());
    report.set_result("budget_exhausted", exhausted.into());
}

fn emit(cli: &Cli, report: &Report) -> Result<(), CliError> {
    let text = match cli.format {
        Format::JsonLines => report.to_json_line(),
        Format::Human => report.to_human(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::Out),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::Out)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Norm { .. } => "norm",
        Command::NormingSet { .. } => "norming-set",
        Command::BjCheck { .. } => "bj-check",
        Command::SmoothCheck { .. } => "smooth-check",
        Command::ExtremeCheck { .. } => "extreme-check",
        Command::LeftWitness { .. } => "left-witness",
        Command::RightWitness { .. } => "right-witness",
        Command::SymmetryPair { .. } => "symmetry-pair",
        Command::Grothendieck { .. } => "grothendieck",
    }
}

pub fn run_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 2 through clap's own convention; --help
            // and --version exit 0.
            let _ = e.print();
            return e.exit_code();
        }
    };
    let started = Instant::now();
    let mut report = Report::new(command_name(&cli.command));
    let code = match dispatch(&cli, &mut report) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            report.set_error(code, &e.to_string());
            code
        }
    };
    report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    if let Err(e) = emit(&cli, &report) {
        eprintln!("{e}");
        return EXIT_INTERNAL;
    }
    code
}

pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}
