//! Command-line front end for the `mzi-qkd` simulator.
//!
//! [`execute`] parses the arguments, runs one subcommand and writes its
//! output; the binary only forwards the returned exit code. Exit codes are
//! part of the interface: see the `EXIT_*` constants.

mod args;
pub mod json;
mod render;

use std::ffi::OsString;
use std::io::{self, Write};

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use mzi_qkd::hilbert::c;
use mzi_qkd::measurement::{
    chsh_exact, chsh_sampled, coincidence_probability, pair_distribution, ChshAngles,
};
use mzi_qkd::optics::Transcription;
use mzi_qkd::protocol::{
    run_session, run_session_with_workers, ProtocolError, SessionConfig, Verdict,
};
use mzi_qkd::source::psi_plus;
use mzi_qkd::verify::run_identity_suite;
use mzi_qkd::{Apparatus, AttackModel, Outcome, Phase, PortPolarization};

pub use args::{Cli, Command, Grid, Perturbation};

pub const EXIT_OK: u8 = 0;
/// A verification check failed, or output could not be written.
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_DETECTED: u8 = 2;
pub const EXIT_ABORTED: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Protocol(ProtocolError::WorkerPool(_)) => EXIT_FAILURE,
            CliError::Protocol(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Json(_) => EXIT_FAILURE,
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            // --help and --version are not errors
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return EXIT_USAGE;
            }
            return match out.write_all(text.as_bytes()) {
                Ok(()) => EXIT_OK,
                Err(_) => EXIT_FAILURE,
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<u8, CliError> {
    match command {
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Run(a) => cmd_run(&a, out),
        Command::Bell(a) => cmd_bell(&a, out),
        Command::CoincidenceScan(a) => cmd_coincidence_scan(&a, out),
    }
}

pub fn perturbed_transcription(perturbations: &[Perturbation]) -> Result<Transcription, CliError> {
    let mut t = Transcription::canonical();
    for p in perturbations {
        let m = t.matrix_mut(p.matrix);
        let dim = m.dim();
        if p.row >= dim || p.col >= dim {
            return Err(CliError::Usage(format!(
                "entry ({}, {}) is outside the {dim}x{dim} matrix",
                p.row + 1,
                p.col + 1
            )));
        }
        let entry = m.get(p.row, p.col) + c(p.re, p.im);
        m.set(p.row, p.col, entry);
    }
    Ok(t)
}

fn cmd_verify(a: &args::VerifyArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let t = perturbed_transcription(&a.perturb)?;
    let report = run_identity_suite(&t);
    let text = match a.format {
        args::VerifyFormat::Human => render::verify_human(&report),
        args::VerifyFormat::Json => json::to_json(&report)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

pub fn session_config(a: &args::RunArgs) -> Result<SessionConfig, CliError> {
    use args::AttackArg;
    if a.resend_phase.is_some() && a.attack != AttackArg::Nasty {
        return Err(CliError::Usage(
            "--resend-phase requires --attack nasty".into(),
        ));
    }
    if (a.block_side.is_some() || a.block_path.is_some()) && a.attack != AttackArg::Block {
        return Err(CliError::Usage(
            "--block-side and --block-path require --attack block".into(),
        ));
    }
    let attack = match a.attack {
        AttackArg::None => AttackModel::NoAttack,
        AttackArg::Intercept => AttackModel::InterceptResendCircular,
        AttackArg::Nasty => AttackModel::NastySendLinear {
            resend_axis: Phase::new(a.resend_phase.unwrap_or(0.0)),
        },
        AttackArg::Block => AttackModel::PathBlock {
            side: a.block_side.unwrap_or(args::SideArg::Alice).into(),
            path: a.block_path.unwrap_or(args::PathArg::Upper).into(),
        },
    };
    let config = SessionConfig {
        n_pairs: a.pairs,
        attack,
        seed: a.seed,
        sacrifice_fraction: a.sacrifice,
        abort_qber_threshold: a.threshold,
        source: a.source.into(),
    };
    config.validate()?;
    Ok(config)
}

fn cmd_run(a: &args::RunArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = session_config(a)?;
    let report = match a.workers {
        Some(n) => run_session_with_workers(&config, n)?,
        None => run_session(&config)?,
    };
    let text = match a.format {
        args::Format::Json => json::to_json(&report)?,
        args::Format::Csv => render::run_csv(&report),
        args::Format::Human => render::run_human(&report),
    };
    out.write_all(text.as_bytes())?;
    Ok(match report.verdict {
        Verdict::Clean => EXIT_OK,
        Verdict::EavesdropperDetected => EXIT_DETECTED,
        Verdict::Aborted => EXIT_ABORTED,
    })
}

#[derive(Serialize)]
struct BellOutput<'a> {
    mode: &'static str,
    /// `None` in exact mode.
    seed: Option<u64>,
    angles: &'a ChshAngles,
    #[serde(flatten)]
    result: &'a mzi_qkd::measurement::ChshResult,
}

fn cmd_bell(a: &args::BellArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let (mode, seed, result) = match a.mode {
        args::BellMode::Exact => ("exact", None, chsh_exact(&a.angles)),
        args::BellMode::Sample => {
            if a.pairs == 0 {
                return Err(CliError::Usage("--pairs must be positive".into()));
            }
            (
                "sample",
                Some(a.seed),
                chsh_sampled(&a.angles, a.pairs, a.seed),
            )
        }
    };
    let text = match a.format {
        args::Format::Json => json::to_json(&BellOutput {
            mode,
            seed,
            angles: &a.angles,
            result: &result,
        })?,
        args::Format::Csv => render::bell_csv(&a.angles, &result),
        args::Format::Human => render::bell_human(&result),
    };
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

/// One row of the coincidence scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub alpha: f64,
    pub beta: f64,
    pub p_1p_1p: f64,
    pub p_2p_2p: f64,
    pub p_1p_2p: f64,
    pub p_2p_1p: f64,
    /// Closed-form `P(1+,1+) = ½cos²((α−β)/2)`.
    pub analytic_value: f64,
    /// Largest deviation from the closed form over all sixteen outcomes.
    pub abs_error: f64,
}

pub fn scan_row(alpha: f64, beta: f64) -> ScanRow {
    const P1: Outcome = PortPolarization::P1_RIGHT;
    const P2: Outcome = PortPolarization::P2_RIGHT;
    let dist = pair_distribution(
        &psi_plus(),
        Apparatus::interferometer(alpha),
        Apparatus::interferometer(beta),
    );
    let (a, b) = (Phase::new(alpha), Phase::new(beta));
    let abs_error = dist
        .cells()
        .map(|(x, y, p)| (p - coincidence_probability(a, b, (x, y))).abs())
        .fold(0.0, f64::max);
    ScanRow {
        alpha,
        beta,
        p_1p_1p: dist.probability(P1, P1),
        p_2p_2p: dist.probability(P2, P2),
        p_1p_2p: dist.probability(P1, P2),
        p_2p_1p: dist.probability(P2, P1),
        analytic_value: coincidence_probability(a, b, (P1, P1)),
        abs_error,
    }
}

fn cmd_coincidence_scan(a: &args::ScanArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut w = render::csv_writer();
    w.write_record([
        "alpha",
        "beta",
        "p_1p_1p",
        "p_2p_2p",
        "p_1p_2p",
        "p_2p_1p",
        "analytic_value",
        "abs_error",
    ])
    .map_err(io::Error::from)?;
    for alpha in a.alpha_grid.points() {
        let r = scan_row(alpha, a.beta);
        w.write_record(
            [
                r.alpha,
                r.beta,
                r.p_1p_1p,
                r.p_2p_2p,
                r.p_1p_2p,
                r.p_2p_1p,
                r.analytic_value,
                r.abs_error,
            ]
            .map(json::real),
        )
        .map_err(io::Error::from)?;
    }
    out.write_all(render::finish(w).as_bytes())?;
    Ok(EXIT_OK)
}
