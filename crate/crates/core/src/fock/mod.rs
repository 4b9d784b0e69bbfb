//! Multimode truncated Fock-space states and operators.
//!
//! A state lives on an ordered list of labeled optical modes with a shared
//! per-mode photon-number cutoff.  Norm lost to truncation is tracked
//! explicitly ("leakage") so numerical adequacy is always observable.

mod density;
mod ops;
mod state;

pub use density::DensityMatrix;
pub use ops::{
    annihilation_block, beam_splitter_matrix, displacement_block, make_vacuum,
    phase_rotation_diag, position_block, two_mode_squeeze_matrix,
};
pub use state::FockState;
#[allow(unused_imports)]
pub(crate) use state::{apply_block_along_axis, contract_bra_along_axis};

use std::fmt;

/// Spatial arm of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    In,
    A,
    B,
    Out,
    Anc,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Arm::In => "in",
            Arm::A => "A",
            Arm::B => "B",
            Arm::Out => "out",
            Arm::Anc => "anc",
        };
        f.write_str(s)
    }
}

/// Polarization of a mode, in either the linear or the circular basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    pub fn is_linear(self) -> bool {
        matches!(self, Polarization::H | Polarization::V)
    }

    pub fn is_circular(self) -> bool {
        !self.is_linear()
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::SigmaPlus => "s+",
            Polarization::SigmaMinus => "s-",
        };
        f.write_str(s)
    }
}

/// Identifier of one optical mode: arm, polarization and an optional
/// frequency-bin index (signed, bin 0 is the carrier).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub arm: Arm,
    pub polarization: Polarization,
    pub freq_bin: Option<i32>,
}

impl ModeLabel {
    pub const fn new(arm: Arm, polarization: Polarization) -> Self {
        ModeLabel {
            arm,
            polarization,
            freq_bin: None,
        }
    }

    pub const fn at_bin(arm: Arm, polarization: Polarization, bin: i32) -> Self {
        ModeLabel {
            arm,
            polarization,
            freq_bin: Some(bin),
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.arm, self.polarization)?;
        if let Some(b) = self.freq_bin {
            write!(f, "@{b}")?;
        }
        Ok(())
    }
}

/// The two linear-polarization modes of an arm, H first.
pub fn linear_modes(arm: Arm) -> [ModeLabel; 2] {
    [
        ModeLabel::new(arm, Polarization::H),
        ModeLabel::new(arm, Polarization::V),
    ]
}

/// The two circular-polarization modes of an arm, sigma+ first.
pub fn circular_modes(arm: Arm) -> [ModeLabel; 2] {
    [
        ModeLabel::new(arm, Polarization::SigmaPlus),
        ModeLabel::new(arm, Polarization::SigmaMinus),
    ]
}
