//! Truncated Fock-space simulator for teleportation-based wavelength
//! conversion of single-photon polarization qubits.
//!
//! The crate models the full conversion protocol: a two-mode-squeezed (or
//! four-wave-mixing) entangled source spanning two wavelengths, joint
//! homodyne detection of the input qubit with one arm of the source, and a
//! feedforward displacement of the other arm.  Everything is computed on
//! dense photon-number tensors with a shared per-mode cutoff; norm lost to
//! truncation is tracked explicitly so numerical adequacy is always visible.
//!
//! The core is generic over the real scalar (`f32` or `f64`) through the
//! [`real::Real`] trait; the `*64` aliases at the crate root pick `f64`.

pub mod bandwidth;
pub mod channels;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod real;
pub mod sources;
pub mod teleport;

pub use bandwidth::{
    effective_fidelity, frequency_pairing, heisenberg_variance_check, BandwidthReport,
    FrequencyMap, QubitSpectrum, SqueezingSpectrum,
};
pub use channels::{
    loss_channel, run_pipeline, LossParams, PipelineKind, PipelineReport, PipelineSpec,
    StageReport, StageSpec,
};
pub use error::{Error, Result};
pub use fock::{Arm, DensityMatrix, FockState, ModeLabel, Polarization};
pub use real::Real;
pub use sources::{InputQubit, SourceParams};
pub use teleport::{
    teleport_average, teleport_density_average, teleport_mc, AverageReport, BetaGrid, GainRule,
    HomodyneRecord, HomodyneSampler, McReport, QubitMetrics,
};

/// `f64` state alias, the default working precision.
pub type FockState64 = FockState<f64>;
/// `f64` density-matrix alias.
pub type DensityMatrix64 = DensityMatrix<f64>;
