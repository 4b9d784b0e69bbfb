//! Operator blocks and the unitary operations on [`FockState`].
//!
//! Displacement and two-mode squeezing have tridiagonal generators in the
//! photon-number basis; their truncated blocks are computed by exponentiating
//! the generator on a chain padded far past the cutoff, then restricting.
//! The restricted blocks therefore carry the exact matrix elements of the
//! untruncated operator, and any norm the state pushes past the cutoff shows
//! up as leakage instead of being silently renormalized.  Beam splitter and
//! phase rotation conserve total photon number and are built per
//! fixed-total-photon block in closed form.

use ndarray::Array2;

use super::{FockState, ModeLabel};
use crate::error::{Error, Result};
use crate::linalg::tridiag_unitary_exp;
use crate::real::{cis, cone, cre, czero, rl, Real, C};

fn finite<R: Real>(name: &'static str, value: R, constraint: &'static str) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value: value.to_f64_lossy(),
            constraint,
        });
    }
    Ok(())
}

/// Truncated block of the displacement operator `D(alpha) = exp(alpha a+ - alpha* a)`.
///
/// Entries are the exact infinite-dimensional matrix elements restricted to
/// `dim x dim`; the block is not exactly unitary for states whose displaced
/// image pokes past the cutoff.
pub fn displacement_block<R: Real>(alpha: C<R>, dim: usize) -> Array2<C<R>> {
    assert!(dim >= 1);
    if alpha == czero() {
        return Array2::from_diag_elem(dim, cone());
    }
    // Pad so the chain [0, pad) holds the displaced support of every level
    // below `dim` to well under machine precision.
    let a = alpha.norm().to_f64_lossy();
    let sd = (dim as f64).sqrt();
    let extra = ((sd + a).powi(2) + 8.0 * (sd + a) + 25.0).ceil() as usize;
    let pad = dim + extra;
    let couplings: Vec<C<R>> = (0..pad - 1)
        .map(|j| alpha * cre(rl::<R>(((j + 1) as f64).sqrt())))
        .collect();
    tridiag_unitary_exp(&couplings, dim, dim)
}

/// Truncated matrix of `exp(r e^{i theta} a+ b+ - h.c.)` on the pair space.
///
/// Pair indices follow `n_a * dim + n_b`.  The photon-number difference
/// `n_a - n_b` is conserved, so the matrix is assembled from independent
/// chains, each padded past the cutoff and restricted exactly.
pub fn two_mode_squeeze_matrix<R: Real>(r: R, theta: R, dim: usize) -> Array2<C<R>> {
    assert!(dim >= 1);
    let d2 = dim * dim;
    if r == R::zero() {
        return Array2::from_diag_elem(d2, cone());
    }
    let zeta = cis(theta) * cre(r);
    let q = r.tanh().to_f64_lossy().abs();
    // Chain weight decays like q^(2 j); pad until q^(2 pad) is negligible
    // relative to machine precision across the whole block.
    let pad = (((37.0 + (dim as f64).ln()) / (2.0 * (1.0 / q).ln())).ceil() as usize) + 10;

    let mut out = Array2::from_elem((d2, d2), czero::<R>());
    for k in 0..dim {
        let len = dim - k; // in-cutoff chain length for |j, j+k>
        let chain = len + pad;
        let couplings: Vec<C<R>> = (0..chain - 1)
            .map(|j| zeta * cre(rl::<R>((((j + 1) * (j + k + 1)) as f64).sqrt())))
            .collect();
        let block = tridiag_unitary_exp(&couplings, len, len);
        for j in 0..len {
            for jp in 0..len {
                out[[j * dim + (j + k), jp * dim + (jp + k)]] = block[[j, jp]];
                if k > 0 {
                    out[[(j + k) * dim + j, (jp + k) * dim + jp]] = block[[j, jp]];
                }
            }
        }
    }
    out
}

/// Beam-splitter unitary on the pair space, pair index `n_a * dim + n_b`.
///
/// Convention (documented, tests are written against it): with
/// `cos(theta) = sqrt(transmittance)`,
///
/// ```text
/// U+ a U = cos(theta) a + i e^{-i phase} sin(theta) b
/// U+ b U = i e^{i phase} sin(theta) a + cos(theta) b
/// ```
///
/// so one reflection carries the factor `i e^{-+ i phase}`.  Blocks of fixed
/// total photon number `M <= cutoff` are complete and exactly unitary; higher
/// blocks are restricted to the in-cutoff corner (exact matrix elements, with
/// the out-of-range part appearing as leakage when occupied).
pub fn beam_splitter_matrix<R: Real>(transmittance: R, phase: R, dim: usize) -> Array2<C<R>> {
    assert!(dim >= 1);
    let d2 = dim * dim;
    if transmittance == R::one() {
        return Array2::from_diag_elem(d2, cone());
    }
    let theta = transmittance.sqrt().min(R::one()).acos();
    let mut out = Array2::from_elem((d2, d2), czero::<R>());
    out[[0, 0]] = cone();
    for total in 1..=2 * (dim - 1) {
        // Chain basis |j, total - j> for j = 0..=total.
        let couplings: Vec<C<R>> = (0..total)
            .map(|j| {
                C::new(R::zero(), R::one())
                    * cis(-phase)
                    * cre(theta * rl::<R>((((j + 1) * (total - j)) as f64).sqrt()))
            })
            .collect();
        let block = tridiag_unitary_exp(&couplings, total + 1, total + 1);
        let lo = total.saturating_sub(dim - 1);
        let hi = total.min(dim - 1);
        for j in lo..=hi {
            for jp in lo..=hi {
                out[[j * dim + (total - j), jp * dim + (total - jp)]] = block[[j, jp]];
            }
        }
    }
    out
}

/// Diagonal of the phase rotation `exp(-i phi n)`.
pub fn phase_rotation_diag<R: Real>(phi: R, dim: usize) -> Vec<C<R>> {
    (0..dim)
        .map(|n| cis(-phi * rl::<R>(n as f64)))
        .collect()
}

/// Truncated annihilation operator `a`.
pub fn annihilation_block<R: Real>(dim: usize) -> Array2<C<R>> {
    let mut out = Array2::from_elem((dim, dim), czero::<R>());
    for n in 1..dim {
        out[[n - 1, n]] = cre(rl::<R>((n as f64).sqrt()));
    }
    out
}

/// Truncated position quadrature `x = (a + a+) / sqrt(2)`; vacuum variance 1/2.
pub fn position_block<R: Real>(dim: usize) -> Array2<C<R>> {
    let a = annihilation_block::<R>(dim);
    let mut out = Array2::from_elem((dim, dim), czero::<R>());
    let s = cre(R::one() / rl::<R>(2.0).sqrt());
    for i in 0..dim {
        for j in 0..dim {
            out[[i, j]] = (a[[i, j]] + a[[j, i]].conj()) * s;
        }
    }
    out
}

impl<R: Real> FockState<R> {
    /// Displaces one mode by `alpha`; truncation loss goes to leakage.
    pub fn apply_displacement(&mut self, mode: &ModeLabel, alpha: C<R>) -> Result<()> {
        finite("alpha", alpha.norm(), "finite")?;
        if alpha == czero() {
            self.mode_axis(mode)?;
            return Ok(());
        }
        let block = displacement_block(alpha, self.dim());
        self.apply_one_mode_block(mode, &block)
    }

    /// Applies `exp(r e^{i theta} a+ b+ - h.c.)` to a mode pair.
    pub fn apply_two_mode_squeeze(
        &mut self,
        mode_a: &ModeLabel,
        mode_b: &ModeLabel,
        r: R,
        theta: R,
    ) -> Result<()> {
        finite("r", r, "finite and >= 0")?;
        finite("theta", theta, "finite")?;
        if r < R::zero() {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r.to_f64_lossy(),
                constraint: ">= 0",
            });
        }
        if mode_a == mode_b {
            return Err(Error::SameMode(*mode_a));
        }
        self.mode_axis(mode_a)?;
        self.mode_axis(mode_b)?;
        if r == R::zero() {
            return Ok(());
        }
        let block = two_mode_squeeze_matrix(r, theta, self.dim());
        self.apply_two_mode_block(mode_a, mode_b, &block)
    }

    /// Applies the beam splitter documented at [`beam_splitter_matrix`].
    pub fn apply_beam_splitter(
        &mut self,
        mode_a: &ModeLabel,
        mode_b: &ModeLabel,
        transmittance: R,
        phase: R,
    ) -> Result<()> {
        finite("transmittance", transmittance, "in [0, 1]")?;
        finite("phase", phase, "finite")?;
        if transmittance < R::zero() || transmittance > R::one() {
            return Err(Error::InvalidParameter {
                name: "transmittance",
                value: transmittance.to_f64_lossy(),
                constraint: "in [0, 1]",
            });
        }
        if mode_a == mode_b {
            return Err(Error::SameMode(*mode_a));
        }
        self.mode_axis(mode_a)?;
        self.mode_axis(mode_b)?;
        if transmittance == R::one() {
            return Ok(());
        }
        let block = beam_splitter_matrix(transmittance, phase, self.dim());
        self.apply_two_mode_block(mode_a, mode_b, &block)
    }

    /// Multiplies the amplitude of photon number `n` in `mode` by `e^{-i n phi}`.
    pub fn apply_phase_rotation(&mut self, mode: &ModeLabel, phi: R) -> Result<()> {
        finite("phi", phi, "finite")?;
        let diag = phase_rotation_diag(phi, self.dim());
        let mut block = Array2::from_elem((self.dim(), self.dim()), czero::<R>());
        for (n, z) in diag.into_iter().enumerate() {
            block[[n, n]] = z;
        }
        self.apply_one_mode_block(mode, &block)
    }
}

/// Vacuum constructor mirroring [`FockState::vacuum`].
pub fn make_vacuum<R: Real>(modes: &[ModeLabel], cutoff: usize) -> Result<FockState<R>> {
    FockState::vacuum(modes, cutoff)
}
