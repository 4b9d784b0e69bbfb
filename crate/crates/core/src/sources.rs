//! Construction of the protocol's input and resource states.
//!
//! Two entangled-source builders are provided. [`make_tmsv_pair`] produces a
//! pair of two-mode squeezed vacua in the linear polarization basis, one per
//! polarization, linking arms A and B. [`make_fwm_source`] produces the
//! four-wave-mixing variant in the circular basis, where angular-momentum
//! selection pairs (A,σ+) with (B,σ−) and (A,σ−) with (B,σ+);
//! [`apply_waveplates`] maps it back to the linear basis. With unit coupling
//! ratio the two routes give the same state. [`make_input_qubit`] builds the
//! single-photon polarization qubit that gets converted.

use crate::error::{Error, Result};
use crate::fock::{circular_modes, linear_modes, Arm, FockState, ModeLabel, Polarization};
use crate::real::{rl, Real, C};

/// Squeezing strength, phase offsets, and labeling metadata for a source.
///
/// `r` is the effective squeeze factor (interaction strength times duration);
/// the pair amplitude ratio is `q = tanh(r)`. `phi_a` and `phi_b` are phase
/// offsets picked up by the V-polarized modes of the respective arms; only
/// their sum affects the state. `s_coefficient` sets the relative coupling of
/// the second circular-basis pair in the four-wave-mixing source. The
/// wavelengths are reporting metadata only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams<R: Real> {
    pub r: R,
    pub s_coefficient: R,
    pub phi_a: R,
    pub phi_b: R,
    pub wavelength_a: R,
    pub wavelength_b: R,
}

impl<R: Real> Default for SourceParams<R> {
    fn default() -> Self {
        SourceParams {
            r: R::zero(),
            s_coefficient: R::one(),
            phi_a: R::zero(),
            phi_b: R::zero(),
            wavelength_a: rl(780.0),
            wavelength_b: rl(1529.0),
        }
    }
}

impl<R: Real> SourceParams<R> {
    pub fn new(r: R) -> Result<Self> {
        let p = SourceParams {
            r,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_s_coefficient(mut self, s: R) -> Self {
        self.s_coefficient = s;
        self
    }

    pub fn with_phases(mut self, phi_a: R, phi_b: R) -> Self {
        self.phi_a = phi_a;
        self.phi_b = phi_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= R::zero()) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r.to_f64_lossy(),
                constraint: "finite and >= 0",
            });
        }
        for (name, v) in [
            ("s_coefficient", self.s_coefficient),
            ("phi_a", self.phi_a),
            ("phi_b", self.phi_b),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.to_f64_lossy(),
                    constraint: "finite",
                });
            }
        }
        Ok(())
    }

    /// Pair amplitude ratio `tanh(r)`.
    pub fn q(&self) -> R {
        self.r.tanh()
    }

    /// The physically relevant phase, `phi_a + phi_b`.
    pub fn phase_sum(&self) -> R {
        self.phi_a + self.phi_b
    }
}

/// Normalized amplitudes of the single-photon polarization qubit,
/// `c1|H> + c2|V>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputQubit<R: Real> {
    c1: C<R>,
    c2: C<R>,
}

impl<R: Real> InputQubit<R> {
    /// Requires `|c1|^2 + |c2|^2 = 1` to within 1e-12.
    pub fn new(c1: C<R>, c2: C<R>) -> Result<Self> {
        let norm = c1.norm_sqr() + c2.norm_sqr();
        let dev = (norm - R::one()).abs();
        if !dev.is_finite() || dev > rl(1e-12) {
            return Err(Error::Unnormalized {
                deviation: dev.to_f64_lossy(),
            });
        }
        Ok(InputQubit { c1, c2 })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(c1: C<R>, c2: C<R>) -> Result<Self> {
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if !norm.is_finite() || norm < rl(1e-15) {
            return Err(Error::Unnormalized {
                deviation: f64::INFINITY,
            });
        }
        Ok(InputQubit {
            c1: c1 / norm,
            c2: c2 / norm,
        })
    }

    pub fn c1(&self) -> C<R> {
        self.c1
    }

    pub fn c2(&self) -> C<R> {
        self.c2
    }

    /// Bloch vector (x, y, z) with `|H>` at the north pole:
    /// x = 2 Re(c1* c2), y = 2 Im(c1* c2), z = |c1|^2 − |c2|^2.
    pub fn bloch_vector(&self) -> [R; 3] {
        let cross = self.c1.conj() * self.c2;
        [
            cross.re + cross.re,
            cross.im + cross.im,
            self.c1.norm_sqr() - self.c2.norm_sqr(),
        ]
    }
}

/// `c1|1;0> + c2|0;1>` on modes (in,H), (in,V).
pub fn make_input_qubit<R: Real>(q: &InputQubit<R>, cutoff: usize) -> Result<FockState<R>> {
    let modes = linear_modes(Arm::In);
    let mut state = FockState::vacuum(&modes, cutoff)?;
    state.set_amplitude(&[0, 0], C::new(R::zero(), R::zero()));
    state.set_amplitude(&[1, 0], q.c1);
    state.set_amplitude(&[0, 1], q.c2);
    Ok(state)
}

/// Two-mode squeezed vacuum in each linear polarization, linking arms A and
/// B, on modes (A,H), (A,V), (B,H), (B,V).
///
/// The H pair is squeezed with zero phase; the V pair carries the phase sum
/// `phi_a + phi_b`, so amplitudes on `m` V-photon pairs pick up `e^{i m phi}`.
pub fn make_tmsv_pair<R: Real>(params: &SourceParams<R>, cutoff: usize) -> Result<FockState<R>> {
    params.validate()?;
    let mut modes = linear_modes(Arm::A).to_vec();
    modes.extend_from_slice(&linear_modes(Arm::B));
    let mut state = FockState::vacuum(&modes, cutoff)?;
    let (a_h, a_v) = (modes[0], modes[1]);
    let (b_h, b_v) = (modes[2], modes[3]);
    state.apply_two_mode_squeeze(&a_h, &b_h, params.r, R::zero())?;
    state.apply_two_mode_squeeze(&a_v, &b_v, params.r, params.phase_sum())?;
    Ok(state)
}

/// Four-wave-mixing source on circular modes (A,σ+), (A,σ−), (B,σ+), (B,σ−).
///
/// Vacuum evolved under pair creation in (A,σ+),(B,σ−) with strength `r` and
/// in (A,σ−),(B,σ+) with strength `s_coefficient · r`. A negative product is
/// realized as a squeeze of magnitude `|s·r|` with phase π. Phase offsets are
/// not applied here; they belong to the propagation after the source.
pub fn make_fwm_source<R: Real>(params: &SourceParams<R>, cutoff: usize) -> Result<FockState<R>> {
    params.validate()?;
    let mut modes = circular_modes(Arm::A).to_vec();
    modes.extend_from_slice(&circular_modes(Arm::B));
    let mut state = FockState::vacuum(&modes, cutoff)?;
    let (a_plus, a_minus) = (modes[0], modes[1]);
    let (b_plus, b_minus) = (modes[2], modes[3]);
    state.apply_two_mode_squeeze(&a_plus, &b_minus, params.r, R::zero())?;
    let sr = params.s_coefficient * params.r;
    let theta = if sr < R::zero() { R::PI() } else { R::zero() };
    state.apply_two_mode_squeeze(&a_minus, &b_plus, sr.abs(), theta)?;
    Ok(state)
}

/// Convert circular-basis modes on arms A and B to the linear basis.
///
/// The mode map is (A,σ+) → (A,H), (A,σ−) → (A,V), (B,σ−) → (B,H),
/// (B,σ+) → (B,V): a relabeling of mode operators, so amplitudes are
/// untouched and photon number is conserved. The result is reordered into
/// canonical label order. Linear-polarized modes on arms A or B are
/// rejected; modes on other arms pass through unchanged.
pub fn apply_waveplates<R: Real>(state: FockState<R>) -> Result<FockState<R>> {
    let mut new_modes = Vec::with_capacity(state.modes().len());
    for m in state.modes() {
        let mapped = match m.arm {
            Arm::A | Arm::B => {
                if !m.polarization.is_circular() {
                    return Err(Error::ModeMismatch(format!(
                        "waveplate stage expects circular polarization on arm {}, got {}",
                        m.arm, m
                    )));
                }
                let pol = match (m.arm, m.polarization) {
                    (Arm::A, Polarization::SigmaPlus) => Polarization::H,
                    (Arm::A, Polarization::SigmaMinus) => Polarization::V,
                    (Arm::B, Polarization::SigmaMinus) => Polarization::H,
                    (Arm::B, Polarization::SigmaPlus) => Polarization::V,
                    _ => unreachable!(),
                };
                ModeLabel {
                    polarization: pol,
                    ..*m
                }
            }
            _ => *m,
        };
        new_modes.push(mapped);
    }
    let cutoff = state.cutoff();
    let leakage = state.leakage();
    let relabeled =
        FockState::from_parts(new_modes.clone(), cutoff, state.into_amplitudes(), leakage);
    let mut sorted = new_modes;
    sorted.sort();
    relabeled.permuted_to(&sorted)
}
