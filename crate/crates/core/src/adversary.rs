//! Eve's channels acting on each pair in transit.
//!
//! Every attack is described first as an exact list of weighted branches;
//! [`apply_attack`] samples one branch, and the numeric detection rates are
//! sums over the same list.

use serde::{Deserialize, Serialize};

use crate::hilbert::{c, CMat, CVec, Tensor};
use crate::measurement::{
    circular_handedness, inverse_cdf, linear_value, pair_distribution, Apparatus, Outcome,
    RngStream,
};
use crate::optics::{linear_basis, polarizing_beam_splitter, Handedness, Phase, PortPolarization};
use crate::source::{PairState, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Alice,
    Bob,
}

/// Interferometer arm. The beam splitter reflects right-handed port-1
/// light into the upper arm and transmits left-handed light into the lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    #[default]
    NoAttack,
    /// Measure both photons circularly and resend the measured states.
    InterceptResendCircular,
    /// Measure both photons circularly but resend two identical linearly
    /// polarized photons `|α⟩|α⟩` with `α = resend_axis`.
    NastySendLinear { resend_axis: Phase },
    /// An absorbing obstacle in one arm of one party's interferometer.
    PathBlock { side: Side, path: Path },
}

impl AttackModel {
    /// The nasty attack resending x-polarized photons.
    pub fn nasty() -> Self {
        AttackModel::NastySendLinear {
            resend_axis: Phase::ZERO,
        }
    }

    /// Whether Eve measures, and so holds `eve_bits`.
    pub fn measures(self) -> bool {
        matches!(
            self,
            AttackModel::InterceptResendCircular | AttackModel::NastySendLinear { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Delivery {
    Delivered(PairState),
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub delivery: Delivery,
    /// Eve's circular outcomes on (Alice's, Bob's) photon.
    pub eve_bits: Option<(Handedness, Handedness)>,
}

impl AttackResult {
    pub fn lost(&self) -> bool {
        matches!(self.delivery, Delivery::Lost)
    }

    pub fn delivered(&self) -> Option<&PairState> {
        match &self.delivery {
            Delivery::Delivered(s) => Some(s),
            Delivery::Lost => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub result: AttackResult,
}

/// Projector onto the single-photon inputs that reach the unblocked arm.
pub fn surviving_projector(blocked: Path) -> CMat {
    let pbs = polarizing_beam_splitter();
    let open_arm = match blocked {
        Path::Upper => [PortPolarization::P2_RIGHT, PortPolarization::P2_LEFT],
        Path::Lower => [PortPolarization::P1_RIGHT, PortPolarization::P1_LEFT],
    };
    let mut arm = CMat::zeros(4);
    for p in open_arm {
        arm.set(p.index(), p.index(), c(1.0, 0.0));
    }
    &(&pbs.dagger() * &arm) * &pbs
}

fn circular_branches(state: &PairState) -> impl Iterator<Item = (f64, Outcome, Outcome)> + '_ {
    state
        .amplitudes()
        .probabilities()
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, p)| (p, Outcome::from_index(k / 4), Outcome::from_index(k % 4)))
}

/// Exact branch decomposition of an attack on `state`.
pub fn attack_branches(model: AttackModel, state: &PairState) -> Vec<Branch> {
    match model {
        AttackModel::NoAttack => vec![Branch {
            weight: 1.0,
            result: AttackResult {
                delivery: Delivery::Delivered(state.clone()),
                eve_bits: None,
            },
        }],
        AttackModel::InterceptResendCircular => circular_branches(state)
            .map(|(weight, a, b)| Branch {
                weight,
                result: AttackResult {
                    delivery: Delivery::Delivered(
                        PairState::product(&a.ket(), &b.ket()).expect("basis kets are normalized"),
                    ),
                    eve_bits: Some((a.handedness, b.handedness)),
                },
            })
            .collect(),
        AttackModel::NastySendLinear { resend_axis } => {
            let (linear, _) = linear_basis(resend_axis);
            let resent = PairState::product(&linear, &linear).expect("linear basis is normalized");
            circular_branches(state)
                .map(|(weight, a, b)| Branch {
                    weight,
                    result: AttackResult {
                        delivery: Delivery::Delivered(resent.clone()),
                        eve_bits: Some((a.handedness, b.handedness)),
                    },
                })
                .collect()
        }
        AttackModel::PathBlock { side, path } => {
            let keep = surviving_projector(path);
            let id = CMat::identity(4);
            let op = match side {
                Side::Alice => keep.tensor(&id),
                Side::Bob => id.tensor(&keep),
            };
            let survived: CVec = &op * state.amplitudes();
            let kept = survived.norm_sqr();
            let mut out = Vec::with_capacity(2);
            if kept < 1.0 {
                out.push(Branch {
                    weight: 1.0 - kept,
                    result: AttackResult {
                        delivery: Delivery::Lost,
                        eve_bits: None,
                    },
                });
            }
            if kept > 0.0 {
                let delivered = PairState::custom(survived.scale(c(1.0 / kept.sqrt(), 0.0)))
                    .expect("renormalized");
                out.push(Branch {
                    weight: kept,
                    result: AttackResult {
                        delivery: Delivery::Delivered(delivered),
                        eve_bits: None,
                    },
                });
            }
            out
        }
    }
}

/// Sends `state` through Eve's channel. Draws at most one uniform from `rng`,
/// and none for [`AttackModel::NoAttack`].
pub fn apply_attack(model: AttackModel, state: &PairState, rng: &mut RngStream) -> AttackResult {
    let mut branches = attack_branches(model, state);
    if branches.len() == 1 && model == AttackModel::NoAttack {
        return branches.pop().expect("one branch").result;
    }
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    let k = inverse_cdf(&weights, rng.uniform());
    branches.swap_remove(k).result
}

/// Public comparison performed on a tested pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Both parties use `V_0`; outcomes must match the source's linear
    /// correlation.
    LinearTest,
    /// Both parties use `U_±`; handedness must be opposite.
    CircularTest,
}

impl TestKind {
    pub fn apparatus(self) -> Apparatus {
        match self {
            TestKind::LinearTest => Apparatus::LINEAR,
            TestKind::CircularTest => Apparatus::CircularAnalyzer,
        }
    }

    pub fn is_mismatch(self, source: SourceKind, alice: Outcome, bob: Outcome) -> bool {
        match self {
            TestKind::LinearTest => {
                let same = linear_value(alice) == linear_value(bob);
                same != source.linear_parallel()
            }
            TestKind::CircularTest => circular_handedness(alice) == circular_handedness(bob),
        }
    }
}

/// Closed-form mismatch probability per tested `Ψ⁺` pair.
///
/// Path blocking has no closed form here and falls back to
/// [`ensemble_mismatch`].
pub fn detection_probability(model: AttackModel, test: TestKind) -> f64 {
    match (model, test) {
        (AttackModel::NoAttack, _) => 0.0,
        (AttackModel::InterceptResendCircular, TestKind::LinearTest) => 0.5,
        (AttackModel::InterceptResendCircular, TestKind::CircularTest) => 0.0,
        // each resent photon exits V_0 at 2+ with probability cos²(α/2)
        (AttackModel::NastySendLinear { resend_axis }, TestKind::LinearTest) => {
            0.5 * resend_axis.radians().sin().powi(2)
        }
        (AttackModel::NastySendLinear { .. }, TestKind::CircularTest) => 0.5,
        (AttackModel::PathBlock { .. }, _) => {
            ensemble_mismatch(model, test, SourceKind::PsiPlus).unwrap_or(0.0)
        }
    }
}

/// Mismatch probability of a tested pair, conditioned on the pair not being
/// lost, summed over the exact branch ensemble. `None` if every branch is
/// lost.
pub fn ensemble_mismatch(model: AttackModel, test: TestKind, source: SourceKind) -> Option<f64> {
    let apparatus = test.apparatus();
    let mut kept = 0.0;
    let mut mismatched = 0.0;
    for branch in attack_branches(model, &source.state()) {
        let Some(state) = branch.result.delivered() else {
            continue;
        };
        kept += branch.weight;
        let dist = pair_distribution(state, apparatus, apparatus);
        mismatched += branch.weight
            * dist
                .cells()
                .filter(|&(a, b, _)| test.is_mismatch(source, a, b))
                .map(|(_, _, p)| p)
                .sum::<f64>();
    }
    (kept > 0.0).then(|| mismatched / kept)
}

/// Probability that an attack is lost for a pair, from the branch ensemble.
pub fn loss_probability(model: AttackModel, source: SourceKind) -> f64 {
    attack_branches(model, &source.state())
        .iter()
        .filter(|b| b.result.lost())
        .map(|b| b.weight)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::TOL;
    use crate::optics::x_polarized;
    use crate::source::psi_plus;

    const P1R: Outcome = PortPolarization::P1_RIGHT;
    const P1L: Outcome = PortPolarization::P1_LEFT;

    fn product(a: Outcome, b: Outcome) -> PairState {
        PairState::product(&a.ket(), &b.ket()).unwrap()
    }

    #[test]
    fn no_attack_is_identity() {
        let mut rng = RngStream::new(1, 1);
        let r = apply_attack(AttackModel::NoAttack, &psi_plus(), &mut rng);
        assert_eq!(r.delivered(), Some(&psi_plus()));
        assert_eq!(r.eve_bits, None);
        // composing the identity channel N times changes nothing
        let mut s = psi_plus();
        for _ in 0..10 {
            s = apply_attack(AttackModel::NoAttack, &s, &mut rng)
                .delivered()
                .unwrap()
                .clone();
        }
        assert_eq!(s, psi_plus());
    }

    #[test]
    fn intercept_branches_are_anticorrelated() {
        let branches = attack_branches(AttackModel::InterceptResendCircular, &psi_plus());
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert!((b.weight - 0.5).abs() <= TOL);
            let (ea, eb) = b.result.eve_bits.unwrap();
            assert_ne!(ea, eb);
            let delivered = b.result.delivered().unwrap();
            let expected = match ea {
                Handedness::Right => product(P1R, P1L),
                Handedness::Left => product(P1L, P1R),
            };
            assert_eq!(delivered, &expected);
        }
    }

    #[test]
    fn intercept_sampling_never_same_handed() {
        let mut seen = [0usize; 2];
        for k in 0..2000 {
            let mut rng = RngStream::new(3, k);
            let r = apply_attack(AttackModel::InterceptResendCircular, &psi_plus(), &mut rng);
            let d = r.delivered().unwrap();
            assert!(d.amplitudes().is_normalized(TOL));
            if d == &product(P1R, P1L) {
                seen[0] += 1;
            } else {
                assert_eq!(d, &product(P1L, P1R));
                seen[1] += 1;
            }
        }
        assert!(seen[0] > 900 && seen[1] > 900, "{seen:?}");
    }

    #[test]
    fn nasty_resends_x_polarized() {
        let x = x_polarized();
        let want = PairState::product(&x, &x).unwrap();
        for k in 0..50 {
            let mut rng = RngStream::new(8, k);
            let r = apply_attack(AttackModel::nasty(), &psi_plus(), &mut rng);
            assert!(r
                .delivered()
                .unwrap()
                .amplitudes()
                .approx_eq(want.amplitudes(), TOL));
            let (a, b) = r.eve_bits.unwrap();
            assert_ne!(a, b);
        }
    }

    #[test]
    fn surviving_projectors() {
        let up = surviving_projector(Path::Upper);
        let low = surviving_projector(Path::Lower);
        assert!(up.is_projector(TOL) && low.is_projector(TOL));
        // obstacle in the upper arm removes the right-handed component
        assert!((&up * &P1R.ket()).norm() <= TOL);
        assert!((&up * &P1L.ket()).approx_eq(&P1L.ket(), TOL));
        assert!((&low * &P1L.ket()).norm() <= TOL);
        assert!((&low * &P1R.ket()).approx_eq(&P1R.ket(), TOL));
    }

    #[test]
    fn path_block_branches() {
        let model = AttackModel::PathBlock {
            side: Side::Alice,
            path: Path::Upper,
        };
        let branches = attack_branches(model, &psi_plus());
        assert_eq!(branches.len(), 2);
        assert!((loss_probability(model, SourceKind::PsiPlus) - 0.5).abs() <= TOL);
        let delivered = branches.iter().find_map(|b| b.result.delivered()).unwrap();
        assert!(delivered
            .amplitudes()
            .approx_eq(product(P1L, P1R).amplitudes(), TOL));
        let mut lost = 0;
        for k in 0..1000 {
            let r = apply_attack(model, &psi_plus(), &mut RngStream::new(4, k));
            assert!(r.eve_bits.is_none());
            if r.lost() {
                lost += 1;
            } else {
                assert!(r.delivered().unwrap().amplitudes().is_normalized(TOL));
            }
        }
        assert!((400..600).contains(&lost), "{lost}");
    }

    #[test]
    fn analytic_table_examples() {
        assert_eq!(
            detection_probability(AttackModel::NoAttack, TestKind::LinearTest),
            0.0
        );
        assert_eq!(
            detection_probability(AttackModel::InterceptResendCircular, TestKind::LinearTest),
            0.5
        );
        assert_eq!(
            detection_probability(AttackModel::nasty(), TestKind::CircularTest),
            0.5
        );
        assert_eq!(
            detection_probability(AttackModel::nasty(), TestKind::LinearTest),
            0.0
        );
    }

    #[test]
    fn analytic_table_matches_ensemble() {
        let models = [
            AttackModel::NoAttack,
            AttackModel::InterceptResendCircular,
            AttackModel::nasty(),
            AttackModel::NastySendLinear {
                resend_axis: Phase::new(0.9),
            },
            AttackModel::NastySendLinear {
                resend_axis: Phase::new(std::f64::consts::FRAC_PI_2),
            },
        ];
        for model in models {
            for test in [TestKind::LinearTest, TestKind::CircularTest] {
                let numeric = ensemble_mismatch(model, test, SourceKind::PsiPlus).unwrap();
                let analytic = detection_probability(model, test);
                assert!((numeric - analytic).abs() <= TOL, "{model:?} {test:?}");
            }
        }
    }

    #[test]
    fn path_block_detection_values() {
        for side in [Side::Alice, Side::Bob] {
            for path in [Path::Upper, Path::Lower] {
                let model = AttackModel::PathBlock { side, path };
                let lin = detection_probability(model, TestKind::LinearTest);
                let circ = detection_probability(model, TestKind::CircularTest);
                assert!((lin - 0.5).abs() <= TOL);
                assert!(circ.abs() <= TOL);
            }
        }
    }

    #[test]
    fn mismatch_rules() {
        let p2r = PortPolarization::P2_RIGHT;
        let p2l = PortPolarization::P2_LEFT;
        let lin = TestKind::LinearTest;
        assert!(!lin.is_mismatch(SourceKind::PsiPlus, p2r, p2r));
        assert!(lin.is_mismatch(SourceKind::PsiPlus, p2r, P1R));
        assert!(lin.is_mismatch(SourceKind::PsiMinus, p2r, p2r));
        let circ = TestKind::CircularTest;
        assert!(!circ.is_mismatch(SourceKind::PsiPlus, P1R, p2l));
        assert!(circ.is_mismatch(SourceKind::PsiPlus, P1R, P1R));
    }
}
