//! JSON experiment configuration: the top-level file shape, the
//! per-experiment parameter blocks, and resolution of optional knobs
//! (cutoff, grid, input qubit) into engine types.
//!
//! Unknown keys are rejected everywhere so a typo in a config fails loudly
//! instead of silently running with a default.

use cvteleport::{
    BetaGrid, GainRule, InputQubit, QubitSpectrum, Result, SqueezingSpectrum,
};
use num_complex::Complex;
use serde::Deserialize;

/// Top-level config file: which experiment, its parameters, and the CSV
/// file name (joined onto the output directory at run time).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub parameters: serde_json::Value,
    pub output_path: String,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FidelitySweep,
    GainSweep,
    PhaseError,
    McVsAnalytic,
    FwmEquivalence,
    Bandwidth,
    Network,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FidelitySweep => "fidelity_sweep",
            ExperimentKind::GainSweep => "gain_sweep",
            ExperimentKind::PhaseError => "phase_error",
            ExperimentKind::McVsAnalytic => "mc_vs_analytic",
            ExperimentKind::FwmEquivalence => "fwm_equivalence",
            ExperimentKind::Bandwidth => "bandwidth",
            ExperimentKind::Network => "network",
        }
    }
}

/// Feedforward gain: the strings `"unit"` and `"matched"` or a bare number
/// for a fixed gain.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum GainConfig {
    Named(GainName),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainName {
    Unit,
    Matched,
}

impl GainConfig {
    pub fn rule(self) -> GainRule<f64> {
        match self {
            GainConfig::Named(GainName::Unit) => GainRule::Unit,
            GainConfig::Named(GainName::Matched) => GainRule::Matched,
            GainConfig::Fixed(g) => GainRule::Fixed(g),
        }
    }
}

/// Outcome-grid override; omitted fields fall back to cutoff-derived
/// defaults.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

/// Input qubit amplitudes as `[re, im]` pairs; normalized on load.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub c1: [f64; 2],
    pub c2: [f64; 2],
}

/// Default photon-number cutoff for a peak squeeze parameter: roughly
/// eight levels of headroom plus ten mean thermal photons per mode,
/// clamped to [8, 64] so extreme configs stay finite.
pub fn default_cutoff(r_max: f64) -> usize {
    let n = (8.0 + 10.0 * r_max.sinh().powi(2)).ceil();
    (n as usize).clamp(8, 64)
}

/// Resolve a grid override. Defaults: half-width from the cutoff rule of
/// thumb, an odd point count with spacing at most 0.7.
pub fn resolve_grid(grid: Option<GridConfig>, cutoff: usize) -> Result<BetaGrid<f64>> {
    let g = grid.unwrap_or_default();
    let half_width = g
        .half_width
        .unwrap_or_else(|| BetaGrid::<f64>::suggested_half_width(cutoff));
    let points = g
        .points
        .unwrap_or_else(|| 2 * (half_width / 0.7).ceil() as usize + 1);
    BetaGrid::new(half_width, points)
}

/// Resolve the input qubit; defaults to `(|H> + |V>)/sqrt(2)`.
pub fn resolve_input(qubit: Option<QubitConfig>) -> Result<InputQubit<f64>> {
    match qubit {
        Some(q) => InputQubit::normalized(
            Complex::new(q.c1[0], q.c1[1]),
            Complex::new(q.c2[0], q.c2[1]),
        ),
        None => {
            let amp = std::f64::consts::FRAC_1_SQRT_2;
            InputQubit::normalized(Complex::new(amp, 0.0), Complex::new(amp, 0.0))
        }
    }
}

/// Conditional fidelity and adequacy metrics over a list of squeeze
/// parameters at one gain rule.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySweepParams {
    pub r: Vec<f64>,
    pub gain: GainConfig,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

/// One squeeze parameter, a list of gains.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSweepParams {
    pub r: f64,
    pub gains: Vec<GainConfig>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

/// Pump-phase offsets applied to the arm-A pump of the source.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseErrorParams {
    pub r: f64,
    pub gain: GainConfig,
    pub phases: Vec<f64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

/// Monte-Carlo shot average against the deterministic grid average.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McVsAnalyticParams {
    pub r: f64,
    pub gain: GainConfig,
    pub shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

/// Overlap of the four-wave-mixing source with the two-mode-squeezed
/// reference over a list of cross-pair coefficients.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwmEquivalenceParams {
    pub r: f64,
    pub s_coefficient: Vec<f64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
}

/// Spectrally weighted conversion fidelity over a frequency window.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthParams {
    pub squeezing: SpectrumConfig,
    pub qubit: QubitSpectrumConfig,
    pub gain: GainConfig,
    pub map: MapConfig,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

/// Squeeze-parameter spectrum over frequency offset.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumConfig {
    Lorentzian { r0: f64, gamma: f64 },
    Flat { r0: f64 },
    Table(Vec<[f64; 2]>),
}

impl SpectrumConfig {
    pub fn build(&self) -> Result<SqueezingSpectrum<f64>> {
        match self {
            SpectrumConfig::Lorentzian { r0, gamma } => SqueezingSpectrum::lorentzian(*r0, *gamma),
            SpectrumConfig::Flat { r0 } => SqueezingSpectrum::flat(*r0),
            SpectrumConfig::Table(points) => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                SqueezingSpectrum::table(&pts)
            }
        }
    }

    /// Largest squeeze parameter, for the default-cutoff rule.
    pub fn peak(&self) -> f64 {
        match self {
            SpectrumConfig::Lorentzian { r0, .. } | SpectrumConfig::Flat { r0 } => *r0,
            SpectrumConfig::Table(points) => points.iter().map(|p| p[1]).fold(0.0, f64::max),
        }
    }
}

/// Spectral weight of the input photon over frequency offset.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QubitSpectrumConfig {
    Gaussian { center: f64, sigma: f64 },
    Table(Vec<[f64; 2]>),
}

impl QubitSpectrumConfig {
    pub fn build(&self) -> Result<QubitSpectrum<f64>> {
        match self {
            QubitSpectrumConfig::Gaussian { center, sigma } => {
                QubitSpectrum::gaussian(*center, *sigma)
            }
            QubitSpectrumConfig::Table(points) => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                QubitSpectrum::table(&pts)
            }
        }
    }
}

/// Discrete frequency window: center frequencies of the two wavelength
/// bands, bin width, and bin count.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub omega_a: f64,
    pub omega_b: f64,
    pub bin_width: f64,
    pub n_bins: usize,
}

/// Two-hop relay with fiber loss, swept over transmittance.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub kind: NetworkKind,
    pub stage1: StageConfig,
    pub stage2: StageConfig,
    pub eta: Vec<f64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub input: Option<QubitConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    ConvertedQubit,
    Predistributed,
}

/// Source squeeze and gain of one relay hop.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub r: f64,
    pub gain: GainConfig,
}
