//! Simulator for key distribution with polarizing Mach-Zehnder
//! interferometers.
//!
//! * [`hilbert`]: dense complex vectors and matrices.
//! * [`optics`]: component unitaries and the interferometer `V_α`.
//! * [`source`]: the entangled pair states `Ψ±`.
//! * [`measurement`]: Born-rule distributions, sampling, coincidence law.
//! * [`adversary`]: eavesdropping channels.
//! * [`protocol`]: the session, sifting and public tests.
//! * [`verify`]: the algebraic identity suite.

pub mod adversary;
pub mod hilbert;
pub mod measurement;
pub mod optics;
pub mod protocol;
mod rng;
pub mod source;
pub mod verify;

pub use adversary::{AttackModel, Path, Side, TestKind};
pub use measurement::{Apparatus, Outcome, RngStream};
pub use optics::{Phase, PortPolarization};
pub use protocol::{run_session, SessionConfig, SessionReport, Verdict};
pub use source::{PairState, SourceKind};
