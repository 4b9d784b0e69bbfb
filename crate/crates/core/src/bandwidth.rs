//! Finite-bandwidth view of the conversion protocol.
//!
//! A real photon occupies a band of frequencies around its carrier, and the
//! pair source squeezes a band of its own.  Energy conservation couples the
//! input component at carrier offset `Omega` to the arm-A mode at `-Omega`
//! and the output at `+Omega`, so each offset bin behaves as an independent
//! single-frequency teleporter driven by the squeezing available at the
//! mirrored offset.  This module provides the bin bookkeeping
//! ([`FrequencyMap`], [`frequency_pairing`]), parametric spectra for the
//! squeezing band and the photon ([`SqueezingSpectrum`], [`QubitSpectrum`]),
//! the spectrally weighted conversion fidelity ([`effective_fidelity`]), and
//! a second-moment check of the pair correlations that make the scheme work
//! ([`heisenberg_variance_check`]).

use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{position_block, Arm, FockState, ModeLabel, Polarization};
use crate::real::{rl, Real};
use crate::sources::{InputQubit, SourceParams};
use crate::teleport::{qubit_metrics, teleport_average, BetaGrid, GainRule};

/// Largest spectral weight allowed to fall outside the frequency window.
const OUTSIDE_MASS_LIMIT: f64 = 1e-3;

/// Largest pair-state truncation tail accepted by the variance check.
const VARIANCE_LEAKAGE_LIMIT: f64 = 1e-9;

fn require_finite<R: Real>(name: &'static str, value: R, constraint: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: value.to_f64_lossy(),
            constraint,
        })
    }
}

/// Validates a table of `(offset, value)` samples: at least two points,
/// offsets strictly increasing, everything finite, values nonnegative.
fn check_table<R: Real>(name: &'static str, points: &[(R, R)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter {
            name,
            value: points.len() as f64,
            constraint: "table needs at least two points",
        });
    }
    for (i, &(x, v)) in points.iter().enumerate() {
        require_finite(name, x, "finite table offsets")?;
        if !(v.is_finite() && v >= R::zero()) {
            return Err(Error::InvalidParameter {
                name,
                value: v.to_f64_lossy(),
                constraint: "finite, nonnegative table values",
            });
        }
        if i > 0 && x <= points[i - 1].0 {
            return Err(Error::InvalidParameter {
                name,
                value: x.to_f64_lossy(),
                constraint: "strictly increasing table offsets",
            });
        }
    }
    Ok(())
}

/// Linear interpolation on a sorted table; `None` outside its range.
fn interp_table<R: Real>(points: &[(R, R)], x: R) -> Option<R> {
    let first = points.first()?.0;
    let last = points.last()?.0;
    if x < first || x > last {
        return None;
    }
    let hi = points.partition_point(|&(px, _)| px < x).min(points.len() - 1);
    let (x1, v1) = points[hi];
    if x1 == x || hi == 0 {
        return Some(v1);
    }
    let (x0, v0) = points[hi - 1];
    let t = (x - x0) / (x1 - x0);
    Some(v0 + (v1 - v0) * t)
}

#[derive(Debug, Clone, PartialEq)]
enum SqueezeForm<R: Real> {
    Lorentzian,
    Flat,
    Table(Vec<(R, R)>),
}

/// Squeeze factor of the pair source as a function of carrier offset.
///
/// Three profiles are available: a Lorentzian-in-r band
/// `r(Omega) = r0 gamma^2 / (gamma^2 + Omega^2)` whose value halves at
/// `|Omega| = gamma`, a flat band (the infinite-bandwidth limit), and a
/// linearly interpolated table for measured profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingSpectrum<R: Real> {
    r0: R,
    gamma: R,
    form: SqueezeForm<R>,
}

impl<R: Real> SqueezingSpectrum<R> {
    /// Lorentzian band with peak `r0` and half-width `gamma`.
    pub fn lorentzian(r0: R, gamma: R) -> Result<Self> {
        if !(r0.is_finite() && r0 >= R::zero()) {
            return Err(Error::InvalidParameter {
                name: "r0",
                value: r0.to_f64_lossy(),
                constraint: "finite and >= 0",
            });
        }
        if !(gamma.is_finite() && gamma > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma.to_f64_lossy(),
                constraint: "finite and > 0",
            });
        }
        Ok(SqueezingSpectrum {
            r0,
            gamma,
            form: SqueezeForm::Lorentzian,
        })
    }

    /// Frequency-independent band, `r(Omega) = r0` everywhere.
    pub fn flat(r0: R) -> Result<Self> {
        if !(r0.is_finite() && r0 >= R::zero()) {
            return Err(Error::InvalidParameter {
                name: "r0",
                value: r0.to_f64_lossy(),
                constraint: "finite and >= 0",
            });
        }
        Ok(SqueezingSpectrum {
            r0,
            gamma: R::infinity(),
            form: SqueezeForm::Flat,
        })
    }

    /// Interpolated profile from `(offset, r)` samples; querying outside the
    /// sampled range is a coverage error.
    pub fn table(points: &[(R, R)]) -> Result<Self> {
        check_table("squeezing_table", points)?;
        let r0 = points
            .iter()
            .map(|&(_, v)| v)
            .fold(R::zero(), |a, b| a.max(b));
        let gamma = (points.last().unwrap().0 - points[0].0) / rl(2.0);
        Ok(SqueezingSpectrum {
            r0,
            gamma,
            form: SqueezeForm::Table(points.to_vec()),
        })
    }

    /// Peak squeeze factor (for tables, the largest sampled value).
    pub fn r0(&self) -> R {
        self.r0
    }

    /// Band half-width (infinite for the flat profile, half the sampled
    /// span for tables).
    pub fn gamma(&self) -> R {
        self.gamma
    }

    /// Squeeze factor at carrier offset `omega`.
    pub fn value(&self, omega: R) -> Result<R> {
        require_finite("omega", omega, "finite")?;
        match &self.form {
            SqueezeForm::Flat => Ok(self.r0),
            SqueezeForm::Lorentzian => {
                let g2 = self.gamma * self.gamma;
                Ok(self.r0 * g2 / (g2 + omega * omega))
            }
            SqueezeForm::Table(points) => interp_table(points, omega).ok_or_else(|| {
                Error::SpectrumCoverage(format!(
                    "offset {} is outside the sampled range [{}, {}]",
                    omega.to_f64_lossy(),
                    points[0].0.to_f64_lossy(),
                    points.last().unwrap().0.to_f64_lossy(),
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum QubitForm<R: Real> {
    Gaussian,
    Table(Vec<(R, R)>),
}

/// Spectral amplitude of the input photon around its carrier.
///
/// The photon's frequency content enters only through the weight density
/// `|f(Omega)|^2`.  A Gaussian profile is parameterized directly; a table
/// profile holds `(offset, amplitude)` samples to arbitrary scale and is
/// zero outside its sampled range.  Weights evaluated on a concrete
/// frequency window are always renormalized to unit sum there, after
/// checking that the window actually captures the photon.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitSpectrum<R: Real> {
    center_offset: R,
    sigma: R,
    form: QubitForm<R>,
}

impl<R: Real> QubitSpectrum<R> {
    /// Gaussian weight density centered at `center_offset` with rms width
    /// `sigma`.
    pub fn gaussian(center_offset: R, sigma: R) -> Result<Self> {
        require_finite("center_offset", center_offset, "finite")?;
        if !(sigma.is_finite() && sigma > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma.to_f64_lossy(),
                constraint: "finite and > 0",
            });
        }
        Ok(QubitSpectrum {
            center_offset,
            sigma,
            form: QubitForm::Gaussian,
        })
    }

    /// Interpolated amplitude profile from `(offset, amplitude)` samples.
    ///
    /// The recorded center and width are the mean and rms spread of the
    /// sampled weight density.
    pub fn table(points: &[(R, R)]) -> Result<Self> {
        check_table("qubit_table", points)?;
        // Trapezoid moments of amplitude^2 over the sampled range.
        let mut mass = R::zero();
        let mut mean = R::zero();
        let mut second = R::zero();
        for w in points.windows(2) {
            let (x0, v0) = w[0];
            let (x1, v1) = w[1];
            let h = (x1 - x0) / rl(2.0);
            let (d0, d1) = (v0 * v0, v1 * v1);
            mass += (d0 + d1) * h;
            mean += (d0 * x0 + d1 * x1) * h;
            second += (d0 * x0 * x0 + d1 * x1 * x1) * h;
        }
        if !(mass.is_finite() && mass > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "qubit_table",
                value: mass.to_f64_lossy(),
                constraint: "positive total spectral weight",
            });
        }
        let center = mean / mass;
        let var = (second / mass - center * center).max(R::zero());
        Ok(QubitSpectrum {
            center_offset: center,
            sigma: var.sqrt(),
            form: QubitForm::Table(points.to_vec()),
        })
    }

    /// Center of the weight density.
    pub fn center_offset(&self) -> R {
        self.center_offset
    }

    /// Rms width of the weight density.
    pub fn sigma(&self) -> R {
        self.sigma
    }

    /// Weight density `|f(omega)|^2` (zero outside a table's range).
    pub fn weight_density(&self, omega: R) -> R {
        match &self.form {
            QubitForm::Gaussian => {
                let z = (omega - self.center_offset) / self.sigma;
                (-z * z / rl(2.0)).exp() / (self.sigma * (rl::<R>(2.0) * R::PI()).sqrt())
            }
            QubitForm::Table(points) => {
                let amp = interp_table(points, omega).unwrap_or_else(R::zero);
                amp * amp
            }
        }
    }

    /// Full-line mass of the weight density (1 for the Gaussian, the
    /// trapezoid mass of the samples for a table).
    fn total_mass(&self) -> R {
        match &self.form {
            QubitForm::Gaussian => R::one(),
            QubitForm::Table(points) => {
                let mut mass = R::zero();
                for w in points.windows(2) {
                    let (x0, v0) = w[0];
                    let (x1, v1) = w[1];
                    mass += (v0 * v0 + v1 * v1) * (x1 - x0) / rl(2.0);
                }
                mass
            }
        }
    }

    /// Normalized spectral weights on the bins of `map`, in ascending bin
    /// order.
    ///
    /// Errors with [`Error::SpectrumLeakage`] when more than 1e-3 of the
    /// photon's weight falls outside the window the map covers; inside it,
    /// the weights are renormalized to sum to one.
    pub fn weights_on(&self, map: &FrequencyMap<R>) -> Result<Vec<R>> {
        let width = map.bin_width();
        let mut raw = Vec::with_capacity(map.n_bins());
        let mut window = R::zero();
        for bin in map.bins() {
            let w = self.weight_density(map.offset(bin)?) * width;
            window += w;
            raw.push(w);
        }
        let outside = (R::one() - window / self.total_mass()).max(R::zero());
        if !(outside.to_f64_lossy() <= OUTSIDE_MASS_LIMIT) {
            return Err(Error::SpectrumLeakage {
                outside: outside.to_f64_lossy(),
                limit: OUTSIDE_MASS_LIMIT,
            });
        }
        Ok(raw.into_iter().map(|w| w / window).collect())
    }
}

/// Symmetric frequency-bin layout around the two carriers.
///
/// Bins are signed offsets `-h ..= h` of width `bin_width`, with bin 0 on
/// the carrier; `n_bins` must be odd so every bin has a mirror.  The two
/// carrier frequencies are reporting metadata and do not affect weights or
/// fidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyMap<R: Real> {
    omega_a: R,
    omega_b: R,
    bin_width: R,
    n_bins: usize,
}

impl<R: Real> FrequencyMap<R> {
    pub fn new(omega_a: R, omega_b: R, bin_width: R, n_bins: usize) -> Result<Self> {
        require_finite("omega_a", omega_a, "finite")?;
        require_finite("omega_b", omega_b, "finite")?;
        if !(bin_width.is_finite() && bin_width > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "bin_width",
                value: bin_width.to_f64_lossy(),
                constraint: "finite and > 0",
            });
        }
        if n_bins % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "n_bins",
                value: n_bins as f64,
                constraint: "odd, so every bin has a mirror",
            });
        }
        Ok(FrequencyMap {
            omega_a,
            omega_b,
            bin_width,
            n_bins,
        })
    }

    /// Carrier frequency of the input band.
    pub fn omega_a(&self) -> R {
        self.omega_a
    }

    /// Carrier frequency of the output band.
    pub fn omega_b(&self) -> R {
        self.omega_b
    }

    pub fn bin_width(&self) -> R {
        self.bin_width
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Sum of the two carriers.
    pub fn omega_sum(&self) -> R {
        self.omega_b + self.omega_a
    }

    /// Difference of the two carriers.
    pub fn omega_difference(&self) -> R {
        self.omega_b - self.omega_a
    }

    /// Largest bin index; bins run from `-half_range()` to `half_range()`.
    pub fn half_range(&self) -> i64 {
        (self.n_bins as i64 - 1) / 2
    }

    /// All bin indices in ascending order.
    pub fn bins(&self) -> RangeInclusive<i64> {
        -self.half_range()..=self.half_range()
    }

    fn check_bin(&self, bin: i64) -> Result<()> {
        if bin.abs() > self.half_range() {
            return Err(Error::InvalidParameter {
                name: "bin",
                value: bin as f64,
                constraint: "within the symmetric bin range",
            });
        }
        Ok(())
    }

    /// Carrier offset of a bin, `bin * bin_width`.
    pub fn offset(&self, bin: i64) -> Result<R> {
        self.check_bin(bin)?;
        Ok(rl::<R>(bin as f64) * self.bin_width)
    }

    /// Index of the mirrored bin; an involution over the valid range.
    pub fn mirror(&self, bin: i64) -> Result<i64> {
        self.check_bin(bin)?;
        Ok(-bin)
    }
}

/// The three physical frequencies tied to one offset bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyTriple<R: Real> {
    /// Input-band component converted by this bin, `omega_A + Omega`.
    pub input: R,
    /// Arm-A mode whose pairing with the output drives the bin,
    /// `omega_A - Omega`.
    pub partner_a: R,
    /// Output-band component the bin lands on, `omega_B + Omega`.
    pub output: R,
}

/// Frequencies coupled by energy conservation for one bin: converting the
/// input component at `omega_A + Omega` uses pair squeezing between the
/// mirrored arm-A offset `omega_A - Omega` and the output `omega_B + Omega`.
pub fn frequency_pairing<R: Real>(
    map: &FrequencyMap<R>,
    bin: i64,
) -> Result<FrequencyTriple<R>> {
    let omega = map.offset(bin)?;
    Ok(FrequencyTriple {
        input: map.omega_a + omega,
        partner_a: map.omega_a - omega,
        output: map.omega_b + omega,
    })
}

/// Variance of the difference quadrature `x_B - x_A` on the truncated pair
/// state, as an honest second moment of the projected operator.
fn difference_quadrature_variance<R: Real>(r: R, cutoff: usize) -> Result<R> {
    let a = ModeLabel::new(Arm::A, Polarization::H);
    let b = ModeLabel::new(Arm::B, Polarization::H);
    let mut state = FockState::vacuum(&[a, b], cutoff)?;
    state.apply_two_mode_squeeze(&a, &b, r, R::zero())?;
    let d = state.dim();
    let psi = Array2::from_shape_vec((d, d), state.flattened())
        .expect("two-mode amplitudes fill a d x d matrix");
    let x = position_block::<R>(d);
    // Rows index mode A, columns mode B; x is real symmetric.
    let applied = psi.dot(&x) - x.dot(&psi);
    let norm_sqr: R = psi.iter().map(|z| z.norm_sqr()).sum();
    let first: R = psi
        .iter()
        .zip(applied.iter())
        .map(|(p, o)| (p.conj() * o).re)
        .sum();
    let second: R = applied.iter().map(|z| z.norm_sqr()).sum();
    let mean = first / norm_sqr;
    Ok(second / norm_sqr - mean * mean)
}

/// Ratio of `Var(x_B - x_A)` on a two-mode squeezed vacuum to its vacuum
/// value; the pair correlations squeeze it to exactly `e^{-2r}`.
///
/// Both variances are computed as second moments on truncated states, so
/// the truncation tail of the pair state is the only systematic error; the
/// check refuses to run when that tail reaches 1e-9, which keeps the ratio
/// good to far better than 1e-6.
pub fn heisenberg_variance_check<R: Real>(r: R, cutoff: usize) -> Result<R> {
    if !(r.is_finite() && r >= R::zero()) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r.to_f64_lossy(),
            constraint: "finite and >= 0",
        });
    }
    if cutoff < 1 {
        return Err(Error::CutoffTooSmall(cutoff));
    }
    let leakage = r
        .tanh()
        .powi(2 * (cutoff as i32 + 1))
        .to_f64_lossy();
    if leakage >= VARIANCE_LEAKAGE_LIMIT {
        return Err(Error::CutoffInadequate {
            leakage,
            limit: VARIANCE_LEAKAGE_LIMIT,
        });
    }
    let squeezed = difference_quadrature_variance(r, cutoff)?;
    let vacuum = difference_quadrature_variance(R::zero(), cutoff)?;
    Ok(squeezed / vacuum)
}

/// Per-bin teleportation summary inside a [`BandwidthReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinReport<R: Real> {
    pub bin: i64,
    /// Carrier offset of the bin.
    pub offset: R,
    /// Squeeze factor driving the bin, read at the mirrored offset.
    pub squeeze: R,
    /// Normalized spectral weight of the photon on this bin.
    pub weight: R,
    /// Conditional one-photon fidelity of the bin's teleporter.
    pub fidelity: R,
    /// Absolute one-photon weight of the bin's averaged output.
    pub one_photon_weight: R,
    /// Grid quadrature mass of the bin's run.
    pub quadrature_mass: R,
    /// Captured probability the feedforward pushed past the cutoff,
    /// `max(0, quadrature_mass * model_total - trace)`.
    pub truncation_leakage: R,
}

/// Result of [`effective_fidelity`]: the spectral-weight average and the
/// per-bin table behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthReport<R: Real> {
    pub effective_fidelity: R,
    /// One entry per bin, ascending.
    pub bins: Vec<BinReport<R>>,
}

/// Spectrally weighted conversion fidelity over a frequency window.
///
/// Each bin is an independent single-frequency teleporter: the photon
/// component at offset `Omega` is converted by pair squeezing between the
/// mirrored arm-A offset and the output, so its squeeze factor is the
/// squeezing spectrum read at `-Omega`.  The per-bin conditional fidelity
/// is computed through the same averaged-teleport path as the
/// single-frequency results, and the report's total is
/// `sum_k weight_k * fidelity_k`.  Bins sharing a squeeze factor share one
/// computation; distinct factors run in parallel and are reduced in fixed
/// bin order, so results are reproducible.
pub fn effective_fidelity<R: Real>(
    qspec: &QubitSpectrum<R>,
    sspec: &SqueezingSpectrum<R>,
    gain: GainRule<R>,
    input: &InputQubit<R>,
    grid: &BetaGrid<R>,
    map: &FrequencyMap<R>,
    cutoff: usize,
) -> Result<BandwidthReport<R>> {
    let weights = qspec.weights_on(map)?;
    let mut squeezes = Vec::with_capacity(map.n_bins());
    let mut unique: BTreeMap<u64, R> = BTreeMap::new();
    for bin in map.bins() {
        let omega = map.offset(bin)?;
        let r = sspec.value(-omega)?;
        unique.insert(r.to_f64_lossy().to_bits(), r);
        squeezes.push(r);
    }
    let computed: Vec<(u64, [R; 4])> = unique
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(key, r)| {
            let params = SourceParams::new(r)?;
            let rep = teleport_average(input, &params, gain, grid, cutoff)?;
            let metrics = qubit_metrics(&rep.rho, Some(input))?;
            let fidelity = metrics.conditional_fidelity.ok_or(Error::InvalidParameter {
                name: "gain",
                value: gain.resolve(&params).to_f64_lossy(),
                constraint: "bin teleporter must keep one-photon weight",
            })?;
            let leak =
                (rep.quadrature_mass * rep.model_total - rep.rho.trace()).max(R::zero());
            Ok((
                key,
                [fidelity, metrics.one_photon_weight, rep.quadrature_mass, leak],
            ))
        })
        .collect::<Result<_>>()?;
    let by_squeeze: HashMap<u64, [R; 4]> = computed.into_iter().collect();

    let mut total = R::zero();
    let mut bins = Vec::with_capacity(map.n_bins());
    for (i, bin) in map.bins().enumerate() {
        let [fidelity, one_photon_weight, quadrature_mass, truncation_leakage] =
            by_squeeze[&squeezes[i].to_f64_lossy().to_bits()];
        total += weights[i] * fidelity;
        bins.push(BinReport {
            bin,
            offset: map.offset(bin)?,
            squeeze: squeezes[i],
            weight: weights[i],
            fidelity,
            one_photon_weight,
            quadrature_mass,
            truncation_leakage,
        });
    }
    Ok(BandwidthReport {
        effective_fidelity: total,
        bins,
    })
}
