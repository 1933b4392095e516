//! Simulation toolkit for cold Rydberg atoms: multi-photon excitation spectra,
//! Stark-tuned and rf-assisted Förster resonances, dipole-blockade collective
//! dynamics and blockade-based quantum gates.
//!
//! Units throughout are MHz for frequencies (ordinary, not angular), μs for
//! times, μm for distances and V/cm for fields. A Hamiltonian `H` in MHz
//! evolves states as `exp(−2πiHt)`.
//!
//! ```
//! use rydsim::model::FoersterChannel;
//!
//! let ch = FoersterChannel::rb37p();
//! assert!(ch.defect(1.79).abs() < 1e-9);
//! ```
//!
//! Ensemble operations take a [`Runner`](exec::Runner) that decides how
//! independent samples are executed; results never depend on the runner.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod linalg;
pub mod ode;
pub mod special;
pub mod trace;

pub mod bloch;
pub mod blockade;
pub mod foerster;
pub mod gates;
pub mod model;

pub use error::{Error, Result};
pub use exec::{Runner, Serial};
pub use ode::Stepping;
pub use trace::{ScanTrace, Table, TimeTrace};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/units.md")]
    mod units {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/foerster.md")]
    mod foerster {}
    #[doc = include_str!("../../../book/src/blockade.md")]
    mod blockade {}
    #[doc = include_str!("../../../book/src/gates.md")]
    mod gates {}
}
