//! Two-photon sources.
//!
//! Pair states are 16-dimensional with Alice's photon in the left
//! (slowest-varying) slot. The protocol default is `Ψ⁺`, whose linear
//! polarizations are parallel in every basis; `Ψ⁻` has them perpendicular.
//! Both are maximally entangled in circular polarization.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{c, CVec, Tensor, C64, TOL};
use crate::optics::{linear_basis, Phase, PortPolarization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateLabel {
    PsiPlus,
    PsiMinus,
    Product,
    Custom,
}

/// Entangled preset selectable for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    PsiPlus,
    PsiMinus,
}

impl SourceKind {
    pub fn state(self) -> PairState {
        match self {
            SourceKind::PsiPlus => psi_plus(),
            SourceKind::PsiMinus => psi_minus(),
        }
    }

    /// Whether the two photons' linear polarizations agree in every basis.
    pub fn linear_parallel(self) -> bool {
        matches!(self, SourceKind::PsiPlus)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("pair state must have 16 amplitudes, got {0}")]
    WrongDimension(usize),
    #[error("pair state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("linear form is only defined for the Ψ± presets, not {0:?}")]
    NotEntangledPreset(StateLabel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    amplitudes: CVec,
    label: StateLabel,
}

impl PairState {
    /// Wraps an arbitrary normalized 16-dimensional state.
    pub fn custom(amplitudes: CVec) -> Result<Self, SourceError> {
        Self::checked(amplitudes, StateLabel::Custom)
    }

    /// `|alice⟩ ⊗ |bob⟩` for normalized single-photon states.
    pub fn product(alice: &CVec, bob: &CVec) -> Result<Self, SourceError> {
        Self::checked(alice.tensor(bob), StateLabel::Product)
    }

    fn checked(amplitudes: CVec, label: StateLabel) -> Result<Self, SourceError> {
        if amplitudes.dim() != 16 {
            return Err(SourceError::WrongDimension(amplitudes.dim()));
        }
        if !amplitudes.is_normalized(TOL) {
            return Err(SourceError::NotNormalized(amplitudes.norm_sqr()));
        }
        Ok(Self { amplitudes, label })
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn label(&self) -> StateLabel {
        self.label
    }

    pub fn amplitude(&self, alice: PortPolarization, bob: PortPolarization) -> C64 {
        self.amplitudes.get(alice.index() * 4 + bob.index())
    }

    /// Born weight of each label on Alice's photon, Bob's traced out.
    pub fn alice_marginal(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, p) in self.amplitudes.probabilities().into_iter().enumerate() {
            out[k / 4] += p;
        }
        out
    }

    /// Born weight of each label on Bob's photon, Alice's traced out.
    pub fn bob_marginal(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, p) in self.amplitudes.probabilities().into_iter().enumerate() {
            out[k % 4] += p;
        }
        out
    }
}

fn circular_pair(sign: f64, label: StateLabel) -> PairState {
    let r = PortPolarization::P1_RIGHT.ket();
    let l = PortPolarization::P1_LEFT.ket();
    let rl = r.tensor(&l);
    let lr = l.tensor(&r).scale(c(sign, 0.0));
    PairState {
        amplitudes: (&rl + &lr).scale(c(FRAC_1_SQRT_2, 0.0)),
        label,
    }
}

/// `(|1+⟩|1−⟩ + |1−⟩|1+⟩)/√2`.
pub fn psi_plus() -> PairState {
    circular_pair(1.0, StateLabel::PsiPlus)
}

/// `(|1+⟩|1−⟩ − |1−⟩|1+⟩)/√2`.
pub fn psi_minus() -> PairState {
    circular_pair(-1.0, StateLabel::PsiMinus)
}

/// Builds a Ψ± preset from a linear basis pair with the explicit
/// `e^{iα}/√2` prefactor.
///
/// `Ψ⁺ = e^{iα}/√2 (|α⟩|α⟩ − |α_⊥⟩|α_⊥⟩)`,
/// `Ψ⁻ = e^{iα}/√2 (|α_⊥⟩|α⟩ − |α⟩|α_⊥⟩)`.
pub fn compose_linear_form(
    label: StateLabel,
    parallel: &CVec,
    perpendicular: &CVec,
    alpha: Phase,
) -> Result<CVec, SourceError> {
    let (first, second) = match label {
        StateLabel::PsiPlus => (
            parallel.tensor(parallel),
            perpendicular.tensor(perpendicular),
        ),
        StateLabel::PsiMinus => (
            perpendicular.tensor(parallel),
            parallel.tensor(perpendicular),
        ),
        other => return Err(SourceError::NotEntangledPreset(other)),
    };
    Ok((&first - &second).scale(alpha.unit() * FRAC_1_SQRT_2))
}

/// The state rebuilt in the linear basis analyzed at phase `alpha`.
pub fn linear_form(state: &PairState, alpha: Phase) -> Result<CVec, SourceError> {
    let (parallel, perpendicular) = linear_basis(alpha);
    compose_linear_form(state.label, &parallel, &perpendicular, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ZERO;
    use crate::optics::{x_polarized, y_polarized};
    use std::f64::consts::{FRAC_PI_2, TAU};

    const S: f64 = FRAC_1_SQRT_2;

    #[test]
    fn psi_plus_amplitudes() {
        let psi = psi_plus();
        for a in PortPolarization::ALL {
            for b in PortPolarization::ALL {
                let want = if (a, b) == (PortPolarization::P1_RIGHT, PortPolarization::P1_LEFT)
                    || (a, b) == (PortPolarization::P1_LEFT, PortPolarization::P1_RIGHT)
                {
                    c(S, 0.0)
                } else {
                    ZERO
                };
                assert!((psi.amplitude(a, b) - want).norm() <= TOL);
            }
        }
        assert!(psi.amplitudes().is_normalized(TOL));
    }

    #[test]
    fn psi_plus_linear_xy_form() {
        let x = x_polarized();
        let y = y_polarized();
        let xy = (&x.tensor(&x) - &y.tensor(&y)).scale(c(S, 0.0));
        assert!(psi_plus().amplitudes().equal_up_to_global_phase(&xy, TOL));
        // holds exactly, not just up to phase
        assert!(psi_plus().amplitudes().approx_eq(&xy, TOL));
    }

    #[test]
    fn psi_minus_amplitudes_and_orthogonality() {
        let psi = psi_minus();
        assert!(
            (psi.amplitude(PortPolarization::P1_RIGHT, PortPolarization::P1_LEFT) - c(S, 0.0))
                .norm()
                <= TOL
        );
        assert!(
            (psi.amplitude(PortPolarization::P1_LEFT, PortPolarization::P1_RIGHT) - c(-S, 0.0))
                .norm()
                <= TOL
        );
        let overlap = psi.amplitudes().inner(psi_plus().amplitudes()).unwrap();
        assert!(overlap.norm() <= TOL);
    }

    #[test]
    fn psi_minus_perpendicular_form_up_to_phase() {
        let (par, perp) = linear_basis(Phase::new(1.1));
        let form = (&perp.tensor(&par) - &par.tensor(&perp)).scale(c(S, 0.0));
        assert!(psi_minus()
            .amplitudes()
            .equal_up_to_global_phase(&form, TOL));
    }

    #[test]
    fn psi_plus_linear_form_without_prefactor_matches_up_to_phase() {
        let (par, perp) = linear_basis(Phase::new(0.7));
        let form = (&par.tensor(&par) - &perp.tensor(&perp)).scale(c(S, 0.0));
        assert!(psi_plus().amplitudes().equal_up_to_global_phase(&form, TOL));
        assert!(!psi_plus().amplitudes().approx_eq(&form, 1e-3));
    }

    #[test]
    fn linear_form_examples() {
        for alpha in [0.0, 0.3, FRAC_PI_2, 2.0] {
            let lf = linear_form(&psi_plus(), Phase::new(alpha)).unwrap();
            assert!(lf.approx_eq(psi_plus().amplitudes(), TOL), "alpha={alpha}");
        }
        let lf = linear_form(&psi_minus(), Phase::new(0.3)).unwrap();
        assert!(lf.approx_eq(psi_minus().amplitudes(), TOL));
    }

    #[test]
    fn linear_form_is_rotation_invariant() {
        for k in 0..50 {
            let alpha = Phase::new(TAU * k as f64 / 50.0);
            for state in [psi_plus(), psi_minus()] {
                let lf = linear_form(&state, alpha).unwrap();
                assert!(lf.approx_eq(state.amplitudes(), TOL));
            }
        }
    }

    #[test]
    fn linear_form_rejects_product() {
        let p = PairState::product(&x_polarized(), &x_polarized()).unwrap();
        assert_eq!(
            linear_form(&p, Phase::ZERO),
            Err(SourceError::NotEntangledPreset(StateLabel::Product))
        );
    }

    #[test]
    fn maximally_entangled_marginals() {
        for state in [psi_plus(), psi_minus()] {
            let a = state.alice_marginal();
            let b = state.bob_marginal();
            for m in [a, b] {
                assert!((m[0] - 0.5).abs() <= TOL);
                assert!((m[1] - 0.5).abs() <= TOL);
                assert_eq!(m[2] + m[3], 0.0);
            }
        }
    }

    #[test]
    fn custom_rejects_bad_input() {
        assert_eq!(
            PairState::custom(CVec::basis(4, 0)),
            Err(SourceError::WrongDimension(4))
        );
        assert!(matches!(
            PairState::custom(CVec::basis(16, 0).scale(c(2.0, 0.0))),
            Err(SourceError::NotNormalized(_))
        ));
    }
}
