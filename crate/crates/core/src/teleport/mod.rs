//! Continuous-variable teleportation of a polarization qubit.
//!
//! The measurement stage mixes the input arm with arm A of a two-mode
//! squeezed resource on a balanced beam splitter and projects the mixed
//! modes onto quadrature eigenstates, one position-like and one
//! momentum-like reading per polarization.  Both readings combine into a
//! complex outcome `beta_s = x_s + i p_s` per polarization; arm B is then
//! displaced by `gain * beta_s`.
//!
//! Everything downstream comes in two interchangeable forms: a brute-force
//! path that builds the full multimode state and conditions it mode by mode
//! ([`mix_at_half_bs`], [`project_and_displace`]), and an analytic kernel
//! acting on the input alone ([`transfer_operator`]).  Averages over the
//! outcome continuum are quadratures on a [`BetaGrid`]; [`teleport_mc`]
//! samples outcomes instead and averages normalized conditional states.

mod homodyne;
mod run;
mod transfer;

pub use homodyne::{
    hermite_psi, homodyne_density, mix_at_half_bs, project_and_displace, sample_beta,
    HomodyneSampler,
};
pub use run::{
    mc_shot_seed, qubit_metrics, teleport_average, teleport_density_average, teleport_mc,
    AverageReport, McReport, QubitMetrics,
};
pub(crate) use run::{
    check_gain, feedforward_gains, grid_gram_mass, h_level, node_weights, qubit_density, survival,
    v_level,
};
pub use transfer::transfer_operator;
pub(crate) use transfer::{grid_kernels_two_pol, PolNode};

use crate::error::{Error, Result};
use crate::real::{rl, Real, C};
use crate::sources::SourceParams;

/// One homodyne outcome: a complex reading per polarization and the joint
/// probability density at that point.
///
/// `density` always matches [`homodyne_density`] evaluated at
/// `(beta_h, beta_v)` on the same joint state.
#[derive(Clone, Copy, Debug)]
pub struct HomodyneRecord<R: Real> {
    pub beta_h: C<R>,
    pub beta_v: C<R>,
    pub density: R,
}

/// Feedforward gain policy for the conditional displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainRule<R: Real> {
    /// `g = 1`; faithful in the strong-squeezing limit.
    Unit,
    /// `g = tanh(r)` of the source in use; never creates extra photons.
    Matched,
    /// A fixed, caller-chosen gain.
    Fixed(R),
}

impl<R: Real> GainRule<R> {
    /// Concrete gain for a given source.
    pub fn resolve(&self, params: &SourceParams<R>) -> R {
        match self {
            GainRule::Unit => R::one(),
            GainRule::Matched => params.r.tanh(),
            GainRule::Fixed(g) => *g,
        }
    }
}

/// Tensor-product trapezoid grid over the four real outcome coordinates
/// (Re and Im of `beta_H` and `beta_V`).
///
/// Each axis holds `points_per_axis` equispaced nodes on
/// `[-half_width, half_width]`; the quadrature weight of a node is the
/// product of per-axis trapezoid weights (`spacing` inside, `spacing / 2`
/// at the ends), so summing `weight * density` over the grid approximates
/// the 4-dimensional integral of the outcome density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaGrid<R: Real> {
    half_width: R,
    points_per_axis: usize,
}

impl<R: Real> BetaGrid<R> {
    pub fn new(half_width: R, points_per_axis: usize) -> Result<Self> {
        if !half_width.is_finite() || half_width <= R::zero() {
            return Err(Error::InvalidParameter {
                name: "half_width",
                value: half_width.to_f64_lossy(),
                constraint: "must be finite and > 0",
            });
        }
        if points_per_axis < 3 {
            return Err(Error::InvalidParameter {
                name: "points_per_axis",
                value: points_per_axis as f64,
                constraint: "must be at least 3",
            });
        }
        Ok(BetaGrid {
            half_width,
            points_per_axis,
        })
    }

    /// Rule-of-thumb half-width wide enough for outcome densities at the
    /// given cutoff: `3 + sqrt(cutoff)`.
    pub fn suggested_half_width(cutoff: usize) -> R {
        rl::<R>(3.0) + rl::<R>(cutoff as f64).sqrt()
    }

    pub fn half_width(&self) -> R {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Node coordinates of one axis, symmetric about zero.
    pub fn axis(&self) -> Vec<R> {
        let p = self.points_per_axis;
        let h = self.spacing();
        let mid = (p - 1) as isize;
        (0..p)
            .map(|i| {
                let k = 2 * i as isize - mid;
                // Half-integer steps keep the axis exactly sign-symmetric.
                rl::<R>(k as f64) * h / rl::<R>(2.0)
            })
            .collect()
    }

    /// Trapezoid weight of each axis node.
    pub fn axis_weights(&self) -> Vec<R> {
        let p = self.points_per_axis;
        let h = self.spacing();
        let half = h / rl::<R>(2.0);
        (0..p)
            .map(|i| if i == 0 || i == p - 1 { half } else { h })
            .collect()
    }

    pub fn spacing(&self) -> R {
        rl::<R>(2.0) * self.half_width / rl::<R>((self.points_per_axis - 1) as f64)
    }
}

/// Complex pair amplitudes of the two polarizations of the resource:
/// equal magnitude `tanh r`, with the V pair carrying the pump phase sum.
pub(crate) fn pair_amplitudes<R: Real>(params: &SourceParams<R>) -> (C<R>, C<R>) {
    let zeta = crate::real::cre(params.r.tanh());
    (zeta, zeta * crate::real::cis(params.phase_sum()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_axis_is_symmetric_and_weighted() {
        let grid = BetaGrid::<f64>::new(2.0, 5).unwrap();
        let axis = grid.axis();
        assert_eq!(axis, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let w = grid.axis_weights();
        assert_eq!(w, vec![0.5, 1.0, 1.0, 1.0, 0.5]);
        let total: f64 = w.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(BetaGrid::<f64>::new(0.0, 5).is_err());
        assert!(BetaGrid::<f64>::new(-1.0, 5).is_err());
        assert!(BetaGrid::<f64>::new(f64::NAN, 5).is_err());
        assert!(BetaGrid::<f64>::new(1.0, 2).is_err());
    }

    #[test]
    fn gain_rules_resolve() {
        let params = SourceParams::<f64>::new(0.5).unwrap();
        assert_eq!(GainRule::Unit.resolve(&params), 1.0);
        assert!((GainRule::Matched.resolve(&params) - 0.5f64.tanh()).abs() < 1e-15);
        assert_eq!(GainRule::Fixed(0.3).resolve(&params), 0.3);
    }
}
