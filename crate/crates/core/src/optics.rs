//! Optical components of the polarizing Mach-Zehnder interferometer.
//!
//! Single-photon states live in the 4-dimensional space spanned by
//! `(1+, 1−, 2+, 2−)`: port 1 or 2, right- (`+`) or left-handed (`−`)
//! circular polarization. Every component matrix is held in a
//! [`Transcription`], and the interferometer is built twice: once by
//! composing the components and once from its stored closed form. The two
//! must agree to [`TOL`].
//!
//! A phase `α` on the interferometer analyzes the linear polarization plane
//! at angle `α/2`. [`Phase::plane_angle`] and [`Phase::from_plane_angle`] are
//! the only places that conversion happens.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::ops::Add;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{c, CMat, CVec, C64, I, ONE, TOL, ZERO};

/// Interferometer phase in radians, stored in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Phase(f64);

impl Phase {
    pub const ZERO: Phase = Phase(0.0);

    pub fn new(alpha: f64) -> Self {
        let mut a = alpha.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if a >= TAU {
            a = 0.0;
        }
        Phase(a)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Linear polarization plane analyzed at this phase: `α/2`.
    pub fn plane_angle(self) -> f64 {
        self.0 / 2.0
    }

    /// Phase that analyzes the polarization plane at `theta` radians.
    pub fn from_plane_angle(theta: f64) -> Self {
        Phase::new(2.0 * theta)
    }

    /// `e^{iα}`.
    pub fn unit(self) -> C64 {
        C64::from_polar(1.0, self.0)
    }
}

impl From<f64> for Phase {
    fn from(alpha: f64) -> Self {
        Phase::new(alpha)
    }
}

impl From<Phase> for f64 {
    fn from(p: Phase) -> f64 {
        p.0
    }
}

impl Add for Phase {
    type Output = Phase;

    fn add(self, rhs: Phase) -> Phase {
        Phase::new(self.0 + rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Handedness {
    /// `+`
    Right,
    /// `−`
    Left,
}

/// One of the four basis labels `1+, 1−, 2+, 2−`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortPolarization {
    pub port: Port,
    pub handedness: Handedness,
}

impl PortPolarization {
    pub const P1_RIGHT: Self = Self::new(Port::One, Handedness::Right);
    pub const P1_LEFT: Self = Self::new(Port::One, Handedness::Left);
    pub const P2_RIGHT: Self = Self::new(Port::Two, Handedness::Right);
    pub const P2_LEFT: Self = Self::new(Port::Two, Handedness::Left);

    /// Basis order.
    pub const ALL: [Self; 4] = [Self::P1_RIGHT, Self::P1_LEFT, Self::P2_RIGHT, Self::P2_LEFT];

    pub const fn new(port: Port, handedness: Handedness) -> Self {
        Self { port, handedness }
    }

    pub fn index(self) -> usize {
        let p = match self.port {
            Port::One => 0,
            Port::Two => 2,
        };
        let h = match self.handedness {
            Handedness::Right => 0,
            Handedness::Left => 1,
        };
        p + h
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    pub fn ket(self) -> CVec {
        CVec::basis(4, self.index())
    }
}

impl fmt::Display for PortPolarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let port = match self.port {
            Port::One => '1',
            Port::Two => '2',
        };
        let hand = match self.handedness {
            Handedness::Right => '+',
            Handedness::Left => '-',
        };
        write!(f, "{port}{hand}")
    }
}

/// `|1_x⟩ = (|1−⟩ + |1+⟩)/√2`.
pub fn x_polarized() -> CVec {
    let s = c(FRAC_1_SQRT_2, 0.0);
    CVec::from_slice(&[s, s, ZERO, ZERO])
}

/// `|1_y⟩ = (|1−⟩ − |1+⟩)/√2`.
pub fn y_polarized() -> CVec {
    let s = FRAC_1_SQRT_2;
    CVec::from_slice(&[c(-s, 0.0), c(s, 0.0), ZERO, ZERO])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("composed interferometer deviates from closed form by {deviation:e} at phase {alpha}")]
    ClosedFormMismatch { alpha: f64, deviation: f64 },
}

/// Which stored matrix of a [`Transcription`] to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoredMatrix {
    EvMirror,
    PolarizingBeamSplitter,
    HalfWavePlate,
    /// Coefficient of `e^{iα}` in the phase shifter.
    PhaseShifterPhased,
    /// Phase-independent part of the phase shifter.
    PhaseShifterFixed,
    SymmetricMirror,
    /// Coefficient of `e^{iα}` in the closed-form interferometer (times √2).
    InterferometerPhased,
    /// Phase-independent part of the closed-form interferometer (times √2).
    InterferometerFixed,
}

impl StoredMatrix {
    pub const ALL: [StoredMatrix; 8] = [
        StoredMatrix::EvMirror,
        StoredMatrix::PolarizingBeamSplitter,
        StoredMatrix::HalfWavePlate,
        StoredMatrix::PhaseShifterPhased,
        StoredMatrix::PhaseShifterFixed,
        StoredMatrix::SymmetricMirror,
        StoredMatrix::InterferometerPhased,
        StoredMatrix::InterferometerFixed,
    ];

    /// Equation tag used by the identity suite.
    pub fn equation(self) -> &'static str {
        match self {
            StoredMatrix::EvMirror => "Eq2",
            StoredMatrix::PolarizingBeamSplitter => "Eq9",
            StoredMatrix::HalfWavePlate => "Eq10",
            StoredMatrix::PhaseShifterPhased | StoredMatrix::PhaseShifterFixed => "Eq11",
            StoredMatrix::SymmetricMirror => "Eq12",
            StoredMatrix::InterferometerPhased | StoredMatrix::InterferometerFixed => "Eq13",
        }
    }
}

/// Stored component matrices. The `1/√2` prefactors of the mirrors and of
/// the closed-form interferometer are applied on use, not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    ev_mirror: CMat,
    polarizing_beam_splitter: CMat,
    half_wave_plate: CMat,
    phase_shifter_phased: CMat,
    phase_shifter_fixed: CMat,
    symmetric_mirror: CMat,
    interferometer_phased: CMat,
    interferometer_fixed: CMat,
}

static CANONICAL: LazyLock<Transcription> = LazyLock::new(Transcription::canonical);

impl Transcription {
    pub fn canonical() -> Self {
        let (o, l, i) = (ZERO, ONE, I);
        let m1 = -ONE;
        Self {
            ev_mirror: CMat::from_rows([[i, l], [l, i]]),
            polarizing_beam_splitter: CMat::from_rows([
                [i, o, o, o],
                [o, o, l, o],
                [o, o, o, l],
                [o, l, o, o],
            ]),
            half_wave_plate: CMat::from_rows([
                [l, o, o, o],
                [o, l, o, o],
                [o, o, o, l],
                [o, o, l, o],
            ]),
            phase_shifter_phased: CMat::diagonal(&[l, l, o, o]),
            phase_shifter_fixed: CMat::diagonal(&[o, o, l, l]),
            symmetric_mirror: CMat::from_rows([
                [i, o, l, o],
                [o, i, o, l],
                [l, o, i, o],
                [o, l, o, i],
            ]),
            interferometer_phased: CMat::from_rows([
                [m1, o, o, o],
                [o, o, i, o],
                [i, o, o, o],
                [o, o, l, o],
            ]),
            interferometer_fixed: CMat::from_rows([
                [o, l, o, o],
                [o, o, o, l],
                [o, i, o, o],
                [o, o, o, i],
            ]),
        }
    }

    /// The process-wide canonical transcription.
    pub fn shared() -> &'static Transcription {
        &CANONICAL
    }

    pub fn matrix(&self, which: StoredMatrix) -> &CMat {
        match which {
            StoredMatrix::EvMirror => &self.ev_mirror,
            StoredMatrix::PolarizingBeamSplitter => &self.polarizing_beam_splitter,
            StoredMatrix::HalfWavePlate => &self.half_wave_plate,
            StoredMatrix::PhaseShifterPhased => &self.phase_shifter_phased,
            StoredMatrix::PhaseShifterFixed => &self.phase_shifter_fixed,
            StoredMatrix::SymmetricMirror => &self.symmetric_mirror,
            StoredMatrix::InterferometerPhased => &self.interferometer_phased,
            StoredMatrix::InterferometerFixed => &self.interferometer_fixed,
        }
    }

    /// Mutable access, for fault injection.
    pub fn matrix_mut(&mut self, which: StoredMatrix) -> &mut CMat {
        match which {
            StoredMatrix::EvMirror => &mut self.ev_mirror,
            StoredMatrix::PolarizingBeamSplitter => &mut self.polarizing_beam_splitter,
            StoredMatrix::HalfWavePlate => &mut self.half_wave_plate,
            StoredMatrix::PhaseShifterPhased => &mut self.phase_shifter_phased,
            StoredMatrix::PhaseShifterFixed => &mut self.phase_shifter_fixed,
            StoredMatrix::SymmetricMirror => &mut self.symmetric_mirror,
            StoredMatrix::InterferometerPhased => &mut self.interferometer_phased,
            StoredMatrix::InterferometerFixed => &mut self.interferometer_fixed,
        }
    }

    /// Ordinary 50/50 mirror on two ports.
    pub fn ev_mirror(&self) -> CMat {
        self.ev_mirror.scale(c(FRAC_1_SQRT_2, 0.0))
    }

    pub fn polarizing_beam_splitter(&self) -> CMat {
        self.polarizing_beam_splitter.clone()
    }

    pub fn half_wave_plate(&self) -> CMat {
        self.half_wave_plate.clone()
    }

    pub fn phase_shifter(&self, alpha: Phase) -> CMat {
        &self.phase_shifter_phased.scale(alpha.unit()) + &self.phase_shifter_fixed
    }

    pub fn symmetric_mirror(&self) -> CMat {
        self.symmetric_mirror.scale(c(FRAC_1_SQRT_2, 0.0))
    }

    /// `U · U_α · U_{λ/2} · U_±`.
    pub fn interferometer_composed(&self, alpha: Phase) -> CMat {
        let inner = &self.half_wave_plate() * &self.polarizing_beam_splitter();
        let inner = &self.phase_shifter(alpha) * &inner;
        &self.symmetric_mirror() * &inner
    }

    pub fn interferometer_closed_form(&self, alpha: Phase) -> CMat {
        (&self.interferometer_phased.scale(alpha.unit()) + &self.interferometer_fixed)
            .scale(c(FRAC_1_SQRT_2, 0.0))
    }

    /// The composed interferometer, checked against the closed form.
    pub fn interferometer(&self, alpha: Phase) -> Result<CMat, OpticsError> {
        let composed = self.interferometer_composed(alpha);
        let deviation = composed
            .max_abs_diff(&self.interferometer_closed_form(alpha))
            .expect("both 4x4");
        if deviation > TOL {
            return Err(OpticsError::ClosedFormMismatch {
                alpha: alpha.radians(),
                deviation,
            });
        }
        Ok(composed)
    }

    /// `(|α⟩, |α_⊥⟩)`: the inputs that `V_α` sends to `i|2+⟩` and `−|1+⟩`.
    pub fn linear_basis(&self, alpha: Phase) -> Result<(CVec, CVec), OpticsError> {
        let adj = self.interferometer(alpha)?.dagger();
        let parallel = &adj * &PortPolarization::P2_RIGHT.ket().scale(I);
        let perpendicular = &adj * &PortPolarization::P1_RIGHT.ket().scale(-ONE);
        Ok((parallel, perpendicular))
    }
}

pub fn ev_interferometer() -> CMat {
    Transcription::shared().ev_mirror()
}

pub fn polarizing_beam_splitter() -> CMat {
    Transcription::shared().polarizing_beam_splitter()
}

pub fn half_wave_plate() -> CMat {
    Transcription::shared().half_wave_plate()
}

pub fn phase_shifter(alpha: Phase) -> CMat {
    Transcription::shared().phase_shifter(alpha)
}

pub fn symmetric_mirror() -> CMat {
    Transcription::shared().symmetric_mirror()
}

/// The polarizing interferometer `V_α`.
///
/// Panics if the canonical transcription is internally inconsistent, which
/// can only mean the build itself is wrong.
pub fn interferometer(alpha: Phase) -> CMat {
    Transcription::shared()
        .interferometer(alpha)
        .unwrap_or_else(|e| panic!("canonical transcription is inconsistent: {e}"))
}

pub fn linear_basis(alpha: Phase) -> (CVec, CVec) {
    Transcription::shared()
        .linear_basis(alpha)
        .unwrap_or_else(|e| panic!("canonical transcription is inconsistent: {e}"))
}
