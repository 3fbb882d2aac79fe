//! The key-distribution session.
//!
//! Each pair is processed independently from its own random stream:
//! Alice and Bob each pick `V_0` or `U_±` with probability ½, the pair
//! passes through the attack channel, and a joint outcome is sampled.
//! Afterwards the records are sifted:
//!
//! * `V_0 ⊗ V_0` records are all compared publicly (linear test);
//! * `V_0 ⊗ U_±` and `U_± ⊗ V_0` records are discarded;
//! * a random `sacrifice_fraction` of the `U_± ⊗ U_±` records is compared
//!   publicly (circular test) and the rest become key bits.
//!
//! Key bits: Alice maps right-handed to 0 and left-handed to 1; Bob uses the
//! opposite map, so anti-correlated clean outcomes give identical keys.

use std::collections::HashSet;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{apply_attack, detection_probability, AttackModel, TestKind};
use crate::measurement::{circular_handedness, Apparatus, JointMeasurement, Outcome, RngStream};
use crate::optics::Handedness;
use crate::source::SourceKind;

pub const DEFAULT_PAIRS: u64 = 100_000;
pub const DEFAULT_SACRIFICE_FRACTION: f64 = 0.25;
pub const DEFAULT_ABORT_QBER_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("a session needs at least one pair")]
    NoPairs,
    #[error("sacrifice fraction must lie strictly between 0 and 1, got {0}")]
    SacrificeFraction(f64),
    #[error("abort threshold must lie in [0, 1), got {0}")]
    Threshold(f64),
    #[error("worker count must be positive")]
    NoWorkers,
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n_pairs: u64,
    pub attack: AttackModel,
    pub seed: u64,
    pub sacrifice_fraction: f64,
    pub abort_qber_threshold: f64,
    pub source: SourceKind,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_pairs: DEFAULT_PAIRS,
            attack: AttackModel::NoAttack,
            seed: 0,
            sacrifice_fraction: DEFAULT_SACRIFICE_FRACTION,
            abort_qber_threshold: DEFAULT_ABORT_QBER_THRESHOLD,
            source: SourceKind::PsiPlus,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_pairs == 0 {
            return Err(ProtocolError::NoPairs);
        }
        if !(self.sacrifice_fraction > 0.0 && self.sacrifice_fraction < 1.0) {
            return Err(ProtocolError::SacrificeFraction(self.sacrifice_fraction));
        }
        if !(self.abort_qber_threshold >= 0.0 && self.abort_qber_threshold < 1.0) {
            return Err(ProtocolError::Threshold(self.abort_qber_threshold));
        }
        Ok(())
    }
}

/// Which pair of apparatus kinds was used for a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Configuration {
    /// `V_0 ⊗ V_0`
    LinearLinear,
    /// `V_0 ⊗ U_±`
    LinearCircular,
    /// `U_± ⊗ V_0`
    CircularLinear,
    /// `U_± ⊗ U_±`
    CircularCircular,
}

impl Configuration {
    pub fn of(alice: Apparatus, bob: Apparatus) -> Self {
        match (alice.is_circular(), bob.is_circular()) {
            (false, false) => Configuration::LinearLinear,
            (false, true) => Configuration::LinearCircular,
            (true, false) => Configuration::CircularLinear,
            (true, true) => Configuration::CircularCircular,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub index: u64,
    pub alice_basis: Apparatus,
    pub bob_basis: Apparatus,
    /// `None` when the pair was lost in transit.
    pub outcomes: Option<(Outcome, Outcome)>,
    pub eve_bits: Option<(Handedness, Handedness)>,
}

impl PairRecord {
    pub fn lost(&self) -> bool {
        self.outcomes.is_none()
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::of(self.alice_basis, self.bob_basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub vv: u64,
    pub vu: u64,
    pub uv: u64,
    pub uu: u64,
    pub lost: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.vv + self.vu + self.uv + self.uu + self.lost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStats {
    pub tested: u64,
    pub mismatches: u64,
    /// `None` when nothing was tested.
    pub qber: Option<f64>,
}

impl TestStats {
    fn new(tested: u64, mismatches: u64) -> Self {
        Self {
            tested,
            mismatches,
            qber: (tested > 0).then(|| mismatches as f64 / tested as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyStats {
    pub length: u64,
    pub agreement_rate: Option<f64>,
    /// Alice's sifted key as a string of `0`/`1`.
    pub alice: String,
    pub bob: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStats {
    pub present: bool,
    /// Fraction of Alice's key bits that Eve's circular outcomes predict.
    pub knowledge_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clean,
    EavesdropperDetected,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub counts: Counts,
    pub linear_test: TestStats,
    pub circular_test: TestStats,
    pub key: KeyStats,
    pub eve: EveStats,
    pub verdict: Verdict,
}

impl SessionReport {
    pub fn linear_test_qber(&self) -> Option<f64> {
        self.linear_test.qber
    }

    pub fn circular_test_qber(&self) -> Option<f64> {
        self.circular_test.qber
    }
}

fn alice_bit(h: Handedness) -> u8 {
    match h {
        Handedness::Right => 0,
        Handedness::Left => 1,
    }
}

fn bob_bit(h: Handedness) -> u8 {
    1 - alice_bit(h)
}

/// Precomputed joint operators for the four configurations.
struct Apparatuses {
    measurements: [JointMeasurement; 4],
}

impl Apparatuses {
    fn new() -> Self {
        let v = Apparatus::LINEAR;
        let u = Apparatus::CircularAnalyzer;
        Self {
            measurements: [
                JointMeasurement::new(v, v),
                JointMeasurement::new(v, u),
                JointMeasurement::new(u, v),
                JointMeasurement::new(u, u),
            ],
        }
    }

    fn get(&self, alice_circular: bool, bob_circular: bool) -> &JointMeasurement {
        &self.measurements[usize::from(alice_circular) * 2 + usize::from(bob_circular)]
    }
}

fn simulate_pair(config: &SessionConfig, apparatuses: &Apparatuses, index: u64) -> PairRecord {
    let mut rng = RngStream::new(config.seed, index);
    let alice_circular = rng.coin();
    let bob_circular = rng.coin();
    let joint = apparatuses.get(alice_circular, bob_circular);
    let attack = apply_attack(config.attack, &config.source.state(), &mut rng);
    let outcomes = attack
        .delivered()
        .map(|state| joint.distribution(state).sample(&mut rng));
    PairRecord {
        index,
        alice_basis: joint.alice(),
        bob_basis: joint.bob(),
        outcomes,
        eve_bits: attack.eve_bits,
    }
}

/// Simulates every pair of the session, in index order.
pub fn simulate_pairs(config: &SessionConfig) -> Result<Vec<PairRecord>, ProtocolError> {
    config.validate()?;
    let apparatuses = Apparatuses::new();
    Ok((0..config.n_pairs)
        .into_par_iter()
        .map(|k| simulate_pair(config, &apparatuses, k))
        .collect())
}

/// Runs a session on the global thread pool.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport, ProtocolError> {
    let records = simulate_pairs(config)?;
    Ok(sift(config, &records))
}

/// Runs a session on a dedicated pool of `workers` threads. The report does
/// not depend on `workers`.
pub fn run_session_with_workers(
    config: &SessionConfig,
    workers: usize,
) -> Result<SessionReport, ProtocolError> {
    if workers == 0 {
        return Err(ProtocolError::NoWorkers);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ProtocolError::WorkerPool(e.to_string()))?;
    pool.install(|| run_session(config))
}

/// Sifting, public tests, key extraction and verdict.
pub fn sift(config: &SessionConfig, records: &[PairRecord]) -> SessionReport {
    let mut counts = Counts::default();
    let mut linear_tested = 0;
    let mut linear_mismatches = 0;
    let mut circular_records = Vec::new();

    for record in records {
        let Some((a, b)) = record.outcomes else {
            counts.lost += 1;
            continue;
        };
        match record.configuration() {
            Configuration::LinearLinear => {
                counts.vv += 1;
                linear_tested += 1;
                if TestKind::LinearTest.is_mismatch(config.source, a, b) {
                    linear_mismatches += 1;
                }
            }
            Configuration::LinearCircular => counts.vu += 1,
            Configuration::CircularLinear => counts.uv += 1,
            Configuration::CircularCircular => {
                counts.uu += 1;
                circular_records.push(record);
            }
        }
    }

    let n_uu = circular_records.len();
    let n_sacrificed = ((config.sacrifice_fraction * n_uu as f64).ceil() as usize).min(n_uu);
    let mut lottery = RngStream::new(config.seed, config.n_pairs + 1);
    let sacrificed: HashSet<usize> = index::sample(&mut lottery, n_uu, n_sacrificed)
        .into_iter()
        .collect();

    let mut circular_mismatches = 0;
    let mut key_alice = String::new();
    let mut key_bob = String::new();
    let mut eve_hits = 0u64;
    for (k, record) in circular_records.iter().enumerate() {
        let (a, b) = record.outcomes.expect("lost records are not sifted");
        if sacrificed.contains(&k) {
            if TestKind::CircularTest.is_mismatch(config.source, a, b) {
                circular_mismatches += 1;
            }
            continue;
        }
        let bit_a = alice_bit(circular_handedness(a));
        let bit_b = bob_bit(circular_handedness(b));
        key_alice.push(char::from(b'0' + bit_a));
        key_bob.push(char::from(b'0' + bit_b));
        if let Some((eve_a, _)) = record.eve_bits {
            if alice_bit(eve_a) == bit_a {
                eve_hits += 1;
            }
        }
    }

    let length = key_alice.len() as u64;
    let agreements = key_alice
        .bytes()
        .zip(key_bob.bytes())
        .filter(|(x, y)| x == y)
        .count() as u64;
    let rate = |hits: u64| (length > 0).then(|| hits as f64 / length as f64);
    let present = config.attack.measures();
    let eve = EveStats {
        present,
        knowledge_rate: if present { rate(eve_hits) } else { None },
    };

    let linear_test = TestStats::new(linear_tested, linear_mismatches);
    let circular_test = TestStats::new(n_sacrificed as u64, circular_mismatches);
    let verdict = match (linear_test.qber, circular_test.qber) {
        (Some(l), Some(c)) => {
            if l > config.abort_qber_threshold || c > config.abort_qber_threshold {
                Verdict::EavesdropperDetected
            } else {
                Verdict::Clean
            }
        }
        _ => Verdict::Aborted,
    };

    SessionReport {
        config: *config,
        counts,
        linear_test,
        circular_test,
        key: KeyStats {
            length,
            agreement_rate: rate(agreements),
            alice: key_alice,
            bob: key_bob,
        },
        eve,
        verdict,
    }
}

/// Probability that at least one of `n` tested pairs exposes the attack,
/// for `n = 1..=test_pairs_max`.
///
/// Uses the larger of the two per-pair mismatch probabilities, i.e. the
/// test that catches the attack.
pub fn detection_curve(model: AttackModel, test_pairs_max: u64) -> Vec<(u64, f64)> {
    let p = detection_probability(model, TestKind::LinearTest)
        .max(detection_probability(model, TestKind::CircularTest));
    (1..=test_pairs_max)
        .map(|n| {
            let miss = (1.0 - p).powi(n.min(i32::MAX as u64) as i32);
            (n, 1.0 - miss)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRow {
    pub measurement: String,
    pub apparatus: String,
    pub spin_analog: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingTable {
    pub rows: Vec<MappingRow>,
}

/// Correspondence between the interferometric measurements and the
/// spin-½ observables of the standard entanglement-based protocol.
pub fn bbm92_mapping_doc() -> MappingTable {
    MappingTable {
        rows: vec![
            MappingRow {
                measurement: "circular".into(),
                apparatus: "U_pm".into(),
                spin_analog: "sigma_z".into(),
                role: "key generation and circular test".into(),
            },
            MappingRow {
                measurement: "linear".into(),
                apparatus: "V_0".into(),
                spin_analog: "sigma_x".into(),
                role: "linear test".into(),
            },
        ],
    }
}
