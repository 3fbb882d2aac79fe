//! Born-rule measurement of single photons and pairs.
//!
//! A party measures either with an interferometer `V_α` (linear
//! polarization) or with the bare polarizing beam splitter `U_±` and
//! detectors right behind it (circular polarization). Outcomes are the four
//! output detectors `1+, 1−, 2+, 2−`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{CMat, CVec, Tensor};
use crate::optics::{
    interferometer, polarizing_beam_splitter, Handedness, Phase, Port, PortPolarization,
};
use crate::source::{psi_plus, PairState};

pub use crate::rng::RngStream;

/// Which detector fired.
pub type Outcome = PortPolarization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Apparatus {
    Interferometer { phase: Phase },
    CircularAnalyzer,
}

impl Apparatus {
    /// `V_0`, the linear-polarization test apparatus.
    pub const LINEAR: Apparatus = Apparatus::Interferometer { phase: Phase::ZERO };

    pub fn interferometer(alpha: f64) -> Self {
        Apparatus::Interferometer {
            phase: Phase::new(alpha),
        }
    }

    pub fn is_circular(self) -> bool {
        matches!(self, Apparatus::CircularAnalyzer)
    }
}

pub fn apparatus_unitary(a: Apparatus) -> CMat {
    match a {
        Apparatus::Interferometer { phase } => interferometer(phase),
        Apparatus::CircularAnalyzer => polarizing_beam_splitter(),
    }
}

/// Linear-polarization value of an interferometer outcome: `+1` for the
/// `|α⟩` exit (port 2), `−1` for the `|α_⊥⟩` exit (port 1).
pub fn linear_value(outcome: Outcome) -> i8 {
    match outcome.port {
        Port::Two => 1,
        Port::One => -1,
    }
}

/// Input handedness that the beam splitter routes to this detector.
///
/// `1+ ← 1+` and `2− ← 1−` are the port-1 cases; `1− ← 2+` and `2+ ← 2−`
/// cover inputs on the second port.
pub fn circular_handedness(outcome: Outcome) -> Handedness {
    match outcome.port {
        Port::One => Handedness::Right,
        Port::Two => Handedness::Left,
    }
}

/// Index of the outcome that inverse-CDF sampling selects for uniform `u`.
///
/// Zero-weight outcomes are never selected, even if rounding leaves the
/// cumulative sum short of one.
pub fn inverse_cdf(probabilities: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = None;
    for (k, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = Some(k);
        acc += p;
        if u < acc {
            return k;
        }
    }
    last.expect("distribution has no mass")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDistribution {
    probabilities: [f64; 4],
}

impl SingleDistribution {
    pub fn probability(&self, outcome: Outcome) -> f64 {
        self.probabilities[outcome.index()]
    }

    pub fn probabilities(&self) -> &[f64; 4] {
        &self.probabilities
    }

    pub fn sample(&self, rng: &mut RngStream) -> Outcome {
        Outcome::from_index(inverse_cdf(&self.probabilities, rng.uniform()))
    }
}

/// Joint outcome weights, indexed `alice * 4 + bob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    probabilities: [f64; 16],
}

impl JointDistribution {
    pub fn from_state(amplitudes: &CVec) -> Self {
        let mut probabilities = [0.0; 16];
        for (p, a) in probabilities.iter_mut().zip(amplitudes.amplitudes()) {
            *p = a.norm_sqr();
        }
        Self { probabilities }
    }

    pub fn probability(&self, alice: Outcome, bob: Outcome) -> f64 {
        self.probabilities[alice.index() * 4 + bob.index()]
    }

    pub fn probabilities(&self) -> &[f64; 16] {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Iterates `(alice, bob, probability)` in label order.
    pub fn cells(&self) -> impl Iterator<Item = (Outcome, Outcome, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, &p)| (Outcome::from_index(k / 4), Outcome::from_index(k % 4), p))
    }

    pub fn sample(&self, rng: &mut RngStream) -> (Outcome, Outcome) {
        let k = inverse_cdf(&self.probabilities, rng.uniform());
        (Outcome::from_index(k / 4), Outcome::from_index(k % 4))
    }
}

/// Precomputed `U_a ⊗ U_b` for repeated pair measurements.
#[derive(Debug, Clone)]
pub struct JointMeasurement {
    alice: Apparatus,
    bob: Apparatus,
    operator: CMat,
}

impl JointMeasurement {
    pub fn new(alice: Apparatus, bob: Apparatus) -> Self {
        let operator = apparatus_unitary(alice).tensor(&apparatus_unitary(bob));
        Self {
            alice,
            bob,
            operator,
        }
    }

    pub fn alice(&self) -> Apparatus {
        self.alice
    }

    pub fn bob(&self) -> Apparatus {
        self.bob
    }

    pub fn distribution(&self, state: &PairState) -> JointDistribution {
        JointDistribution::from_state(&(&self.operator * state.amplitudes()))
    }
}

pub fn pair_distribution(state: &PairState, a: Apparatus, b: Apparatus) -> JointDistribution {
    JointMeasurement::new(a, b).distribution(state)
}

/// Born weights for one photon. Panics unless `state` is 4-dimensional.
pub fn single_distribution(state: &CVec, a: Apparatus) -> SingleDistribution {
    let out = &apparatus_unitary(a) * state;
    let mut probabilities = [0.0; 4];
    probabilities.copy_from_slice(&out.probabilities());
    SingleDistribution { probabilities }
}

/// Closed-form joint detection probability for `Ψ⁺` behind `V_α ⊗ V_β`.
///
/// Same `+` ports: `½cos²((α−β)/2)`; crossed `+` ports: `½sin²((α−β)/2)`;
/// anything involving a left-handed detector: 0.
pub fn coincidence_probability(alpha: Phase, beta: Phase, joint: (Outcome, Outcome)) -> f64 {
    let (a, b) = joint;
    if a.handedness == Handedness::Left || b.handedness == Handedness::Left {
        return 0.0;
    }
    let half = (alpha.radians() - beta.radians()) / 2.0;
    if a.port == b.port {
        0.5 * half.cos().powi(2)
    } else {
        0.5 * half.sin().powi(2)
    }
}

/// `E(α, β)`: expectation of the product of linear values, from the closed
/// form. Equals `cos(α − β)` up to rounding.
pub fn correlation(alpha: Phase, beta: Phase) -> f64 {
    let mut e = 0.0;
    for a in PortPolarization::ALL {
        for b in PortPolarization::ALL {
            let v = f64::from(linear_value(a) * linear_value(b));
            e += v * coincidence_probability(alpha, beta, (a, b));
        }
    }
    e
}

/// Analyzer phases for a CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: Phase,
    pub a_prime: Phase,
    pub b: Phase,
    pub b_prime: Phase,
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self {
            a: Phase::ZERO,
            a_prime: Phase::new(FRAC_PI_2),
            b: Phase::new(FRAC_PI_4),
            b_prime: Phase::new(3.0 * FRAC_PI_4),
        }
    }
}

impl ChshAngles {
    /// The four settings `(a,b), (a,b'), (a',b), (a',b')` with their CHSH sign.
    pub fn settings(&self) -> [(Phase, Phase, f64); 4] {
        [
            (self.a, self.b, 1.0),
            (self.a, self.b_prime, -1.0),
            (self.a_prime, self.b, 1.0),
            (self.a_prime, self.b_prime, 1.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTerm {
    pub alpha: Phase,
    pub beta: Phase,
    pub correlation: f64,
    /// Pairs behind the estimate; `None` for the exact value.
    pub pairs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub terms: Vec<CorrelationTerm>,
    pub s: f64,
}

fn chsh_from(angles: &ChshAngles, terms: Vec<CorrelationTerm>) -> ChshResult {
    let s = angles
        .settings()
        .iter()
        .zip(&terms)
        .map(|((_, _, sign), t)| sign * t.correlation)
        .sum::<f64>()
        .abs();
    ChshResult { terms, s }
}

/// `S = |E(a,b) − E(a,b') + E(a',b) + E(a',b')|` from the closed form.
pub fn chsh_exact(angles: &ChshAngles) -> ChshResult {
    let terms = angles
        .settings()
        .iter()
        .map(|&(alpha, beta, _)| CorrelationTerm {
            alpha,
            beta,
            correlation: correlation(alpha, beta),
            pairs: None,
        })
        .collect();
    chsh_from(angles, terms)
}

/// Monte Carlo estimate of `E(α, β)` on `Ψ⁺` from `pairs` sampled pairs.
///
/// Pair `k` draws from stream `first_stream + k`.
pub fn sampled_correlation(
    alpha: Phase,
    beta: Phase,
    pairs: u64,
    seed: u64,
    first_stream: u64,
) -> f64 {
    let dist = pair_distribution(
        &psi_plus(),
        Apparatus::Interferometer { phase: alpha },
        Apparatus::Interferometer { phase: beta },
    );
    let sum: i64 = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(seed, first_stream + k);
            let (a, b) = dist.sample(&mut rng);
            i64::from(linear_value(a) * linear_value(b))
        })
        .sum();
    sum as f64 / pairs as f64
}

/// Monte Carlo CHSH value with `pairs` pairs per setting.
pub fn chsh_sampled(angles: &ChshAngles, pairs: u64, seed: u64) -> ChshResult {
    let terms = angles
        .settings()
        .iter()
        .enumerate()
        .map(|(j, &(alpha, beta, _))| CorrelationTerm {
            alpha,
            beta,
            correlation: sampled_correlation(alpha, beta, pairs, seed, j as u64 * pairs),
            pairs: Some(pairs),
        })
        .collect();
    chsh_from(angles, terms)
}
