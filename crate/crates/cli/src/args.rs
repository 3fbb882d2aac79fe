use clap::{Args, Parser, Subcommand, ValueEnum};
use mzi_qkd::measurement::ChshAngles;
use mzi_qkd::optics::StoredMatrix;
use mzi_qkd::protocol::{DEFAULT_ABORT_QBER_THRESHOLD, DEFAULT_PAIRS, DEFAULT_SACRIFICE_FRACTION};
use mzi_qkd::{Path, Phase, Side, SourceKind};

/// Simulator for entanglement-based key distribution with polarizing
/// Mach-Zehnder interferometers.
#[derive(Debug, Parser)]
#[command(name = "mzi-qkd", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the stored optics against every algebraic identity.
    Verify(VerifyArgs),
    /// Simulate one key-distribution session.
    Run(RunArgs),
    /// Correlations at four phase pairs and the CHSH value.
    Bell(BellArgs),
    /// Coincidence probabilities of the entangled source over a phase grid.
    CoincidenceScan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyFormat {
    Json,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanFormat {
    Csv,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Add a delta to one stored matrix entry before verifying (fault
    /// injection). Rows and columns count from 1. Repeatable.
    #[arg(long, value_name = "MATRIX:ROW:COL:RE[:IM]", value_parser = parse_perturbation, allow_hyphen_values = true)]
    pub perturb: Vec<Perturbation>,

    #[arg(long, value_enum, default_value_t = VerifyFormat::Human)]
    pub format: VerifyFormat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub matrix: StoredMatrix,
    /// Zero-based.
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    None,
    Intercept,
    Nasty,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Alice,
    Bob,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Alice => Side::Alice,
            SideArg::Bob => Side::Bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Upper,
    Lower,
}

impl From<PathArg> for Path {
    fn from(p: PathArg) -> Path {
        match p {
            PathArg::Upper => Path::Upper,
            PathArg::Lower => Path::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    #[value(name = "psi+")]
    PsiPlus,
    #[value(name = "psi-")]
    PsiMinus,
}

impl From<SourceArg> for SourceKind {
    fn from(s: SourceArg) -> SourceKind {
        match s {
            SourceArg::PsiPlus => SourceKind::PsiPlus,
            SourceArg::PsiMinus => SourceKind::PsiMinus,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of photon pairs.
    #[arg(long, default_value_t = DEFAULT_PAIRS)]
    pub pairs: u64,

    #[arg(long, value_enum, default_value_t = AttackArg::None)]
    pub attack: AttackArg,

    /// Interferometer phase, in radians, of the linear state resent by the
    /// nasty attack.
    #[arg(long, value_name = "RADIANS", value_parser = finite, allow_hyphen_values = true)]
    pub resend_phase: Option<f64>,

    /// Side whose interferometer the block attack obstructs [default: alice].
    #[arg(long, value_enum)]
    pub block_side: Option<SideArg>,

    /// Arm blocked by the block attack [default: upper].
    #[arg(long, value_enum)]
    pub block_path: Option<PathArg>,

    #[arg(long, env = "MZI_QKD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Fraction of circular-circular pairs sacrificed for the circular test.
    #[arg(long, default_value_t = DEFAULT_SACRIFICE_FRACTION)]
    pub sacrifice: f64,

    /// QBER above which either test declares an eavesdropper.
    #[arg(long, default_value_t = DEFAULT_ABORT_QBER_THRESHOLD)]
    pub threshold: f64,

    #[arg(long, value_enum, default_value_t = SourceArg::PsiPlus)]
    pub source: SourceArg,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads [default: one per core]. Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BellMode {
    Exact,
    Sample,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    #[arg(long, value_enum, default_value_t = BellMode::Exact)]
    pub mode: BellMode,

    /// Pairs per phase pair in sample mode.
    #[arg(long, default_value_t = DEFAULT_PAIRS)]
    pub pairs: u64,

    /// Interferometer phases a,a',b,b' in radians.
    #[arg(long, value_name = "A,A',B,B'", value_parser = parse_angles, allow_hyphen_values = true,
          default_value = "0,1.5707963267948966,0.7853981633974483,2.356194490192345")]
    pub angles: ChshAngles,

    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,

    #[arg(long, env = "MZI_QKD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Alice phases: `steps` evenly spaced points from start to stop inclusive.
    #[arg(long, value_name = "START:STOP:STEPS", value_parser = parse_grid, allow_hyphen_values = true)]
    pub alpha_grid: Grid,

    /// Bob's phase in radians.
    #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
    pub beta: f64,

    #[arg(long, value_enum, default_value_t = ScanFormat::Csv)]
    pub format: ScanFormat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |k| {
            if self.steps == 1 {
                self.start
            } else {
                self.start + (self.stop - self.start) * k as f64 / (self.steps - 1) as f64
            }
        })
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_angles(s: &str) -> Result<ChshAngles, String> {
    let values = s.split(',').map(finite).collect::<Result<Vec<_>, _>>()?;
    let [a, a_prime, b, b_prime] = values[..] else {
        return Err(format!(
            "expected four comma-separated phases, got {}",
            values.len()
        ));
    };
    Ok(ChshAngles {
        a: Phase::new(a),
        a_prime: Phase::new(a_prime),
        b: Phase::new(b),
        b_prime: Phase::new(b_prime),
    })
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, steps] = parts[..] else {
        return Err("expected START:STOP:STEPS".into());
    };
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| format!("`{steps}` is not a whole number of steps"))?;
    if steps == 0 {
        return Err("STEPS must be at least 1".into());
    }
    Ok(Grid {
        start: finite(start)?,
        stop: finite(stop)?,
        steps,
    })
}

fn matrix_by_name(name: &str) -> Option<StoredMatrix> {
    Some(match name {
        "ev-mirror" => StoredMatrix::EvMirror,
        "beam-splitter" => StoredMatrix::PolarizingBeamSplitter,
        "half-wave-plate" => StoredMatrix::HalfWavePlate,
        "phase-shifter-phased" => StoredMatrix::PhaseShifterPhased,
        "phase-shifter-fixed" => StoredMatrix::PhaseShifterFixed,
        "symmetric-mirror" => StoredMatrix::SymmetricMirror,
        "interferometer-phased" => StoredMatrix::InterferometerPhased,
        "interferometer-fixed" => StoredMatrix::InterferometerFixed,
        _ => return None,
    })
}

pub const MATRIX_NAMES: [&str; 8] = [
    "ev-mirror",
    "beam-splitter",
    "half-wave-plate",
    "phase-shifter-phased",
    "phase-shifter-fixed",
    "symmetric-mirror",
    "interferometer-phased",
    "interferometer-fixed",
];

fn parse_perturbation(s: &str) -> Result<Perturbation, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let (name, row, col, re, im) = match parts[..] {
        [name, row, col, re] => (name, row, col, re, "0"),
        [name, row, col, re, im] => (name, row, col, re, im),
        _ => return Err("expected MATRIX:ROW:COL:RE[:IM]".into()),
    };
    let matrix = matrix_by_name(name).ok_or_else(|| {
        format!(
            "unknown matrix `{name}`; expected one of {}",
            MATRIX_NAMES.join(", ")
        )
    })?;
    let index = |s: &str| -> Result<usize, String> {
        match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(format!(
                "`{s}` is not a row or column number (counting from 1)"
            )),
        }
    };
    Ok(Perturbation {
        matrix,
        row: index(row)?,
        col: index(col)?,
        re: finite(re)?,
        im: finite(im)?,
    })
}
