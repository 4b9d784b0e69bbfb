//! Experiment execution: parse the parameter block, compute one CSV row
//! per sweep point, and summarize the resolved settings for the manifest.
//!
//! Sweep points run in parallel but rows are collected in declaration
//! order and every value is written through `f64`'s shortest-roundtrip
//! display, so the CSV bytes are independent of the thread count.

use cvteleport::sources::{apply_waveplates, make_fwm_source, make_tmsv_pair};
use cvteleport::teleport::qubit_metrics;
use cvteleport::{
    effective_fidelity, run_pipeline, teleport_average, teleport_mc, BetaGrid, Error,
    FrequencyMap, GainRule, InputQubit, LossParams, PipelineKind, PipelineSpec, SourceParams,
    StageSpec,
};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{
    default_cutoff, resolve_grid, resolve_input, BandwidthParams, ExperimentConfig,
    ExperimentKind, FidelitySweepParams, FwmEquivalenceParams, GainSweepParams, McVsAnalyticParams,
    NetworkKind, NetworkParams, PhaseErrorParams,
};

/// Runner error with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, parameters, or I/O; exit code 2.
    Config(String),
    /// A numerical adequacy guard tripped; exit code 1.
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Guard(_) => 1,
            CliError::Config(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Guard(msg) | CliError::Config(msg) => msg,
        }
    }
}

/// Engine errors that signal an inadequate discretization rather than a
/// malformed request keep their own exit code so scripts can widen the
/// grid or raise the cutoff and retry.
pub fn classify(err: Error) -> CliError {
    match &err {
        Error::GridMass { .. } | Error::CutoffInadequate { .. } | Error::SpectrumLeakage { .. } => {
            CliError::Guard(err.to_string())
        }
        _ => CliError::Config(err.to_string()),
    }
}

/// Resolved grid settings, echoed into the manifest.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSummary {
    pub half_width: f64,
    pub points: usize,
}

impl GridSummary {
    fn of(grid: &BetaGrid<f64>) -> Self {
        GridSummary {
            half_width: grid.half_width(),
            points: grid.points_per_axis(),
        }
    }
}

/// Computed table plus the resolved settings that went into it.
pub struct RunOutcome {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
    pub cutoff: Option<usize>,
    pub grid: Option<GridSummary>,
    pub seed: Option<u64>,
}

impl RunOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn execute(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<RunOutcome, CliError> {
    match config.experiment {
        ExperimentKind::FidelitySweep => fidelity_sweep(parse(&config.parameters)?),
        ExperimentKind::GainSweep => gain_sweep(parse(&config.parameters)?),
        ExperimentKind::PhaseError => phase_error(parse(&config.parameters)?),
        ExperimentKind::McVsAnalytic => mc_vs_analytic(parse(&config.parameters)?, seed_override),
        ExperimentKind::FwmEquivalence => fwm_equivalence(parse(&config.parameters)?),
        ExperimentKind::Bandwidth => bandwidth(parse(&config.parameters)?),
        ExperimentKind::Network => network(parse(&config.parameters)?),
    }
}

fn parse<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(value.clone())
        .map_err(|e| CliError::Config(format!("parameters: {e}")))
}

fn require_nonempty<T>(name: &str, values: &[T]) -> Result<(), CliError> {
    if values.is_empty() {
        Err(CliError::Config(format!(
            "parameters.{name} must not be empty"
        )))
    } else {
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Conditional fidelity and adequacy numbers of one averaged teleport.
struct PointReport {
    fidelity: f64,
    one_photon_weight: f64,
    quadrature_mass: f64,
    truncation_leakage: f64,
}

fn teleport_point(
    params: &SourceParams<f64>,
    gain: GainRule<f64>,
    input: &InputQubit<f64>,
    grid: &BetaGrid<f64>,
    cutoff: usize,
) -> cvteleport::Result<PointReport> {
    let rep = teleport_average(input, params, gain, grid, cutoff)?;
    let metrics = qubit_metrics(&rep.rho, Some(input))?;
    let fidelity = metrics.conditional_fidelity.ok_or(Error::InvalidParameter {
        name: "gain",
        value: gain.resolve(params),
        constraint: "output must keep one-photon weight",
    })?;
    let leak = (rep.quadrature_mass * rep.model_total - rep.rho.trace()).max(0.0);
    Ok(PointReport {
        fidelity,
        one_photon_weight: metrics.one_photon_weight,
        quadrature_mass: rep.quadrature_mass,
        truncation_leakage: leak,
    })
}

fn point_cells(point: &PointReport) -> [String; 4] {
    [
        fmt(point.fidelity),
        fmt(point.one_photon_weight),
        fmt(point.quadrature_mass),
        fmt(point.truncation_leakage),
    ]
}

fn fidelity_sweep(p: FidelitySweepParams) -> Result<RunOutcome, CliError> {
    require_nonempty("r", &p.r)?;
    let r_max = p.r.iter().cloned().fold(0.0, f64::max);
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(r_max));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let rows = p
        .r
        .par_iter()
        .map(|&r| {
            let params = SourceParams::new(r)?;
            let rule = p.gain.rule();
            let point = teleport_point(&params, rule, &input, &grid, cutoff)?;
            let [f, w, m, l] = point_cells(&point);
            Ok(vec![fmt(r), fmt(rule.resolve(&params)), f, w, m, l])
        })
        .collect::<cvteleport::Result<Vec<_>>>()
        .map_err(classify)?;
    Ok(RunOutcome {
        header: &[
            "r",
            "gain",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: None,
    })
}

fn gain_sweep(p: GainSweepParams) -> Result<RunOutcome, CliError> {
    require_nonempty("gains", &p.gains)?;
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(p.r));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let params = SourceParams::new(p.r).map_err(classify)?;
    let rows = p
        .gains
        .par_iter()
        .map(|&gain| {
            let rule = gain.rule();
            let point = teleport_point(&params, rule, &input, &grid, cutoff)?;
            let [f, w, m, l] = point_cells(&point);
            Ok(vec![fmt(p.r), fmt(rule.resolve(&params)), f, w, m, l])
        })
        .collect::<cvteleport::Result<Vec<_>>>()
        .map_err(classify)?;
    Ok(RunOutcome {
        header: &[
            "r",
            "gain",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: None,
    })
}

fn phase_error(p: PhaseErrorParams) -> Result<RunOutcome, CliError> {
    require_nonempty("phases", &p.phases)?;
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(p.r));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let rows = p
        .phases
        .par_iter()
        .map(|&phi| {
            let params = SourceParams::new(p.r)?.with_phases(phi, 0.0);
            let rule = p.gain.rule();
            let point = teleport_point(&params, rule, &input, &grid, cutoff)?;
            let [f, w, m, l] = point_cells(&point);
            Ok(vec![fmt(phi), fmt(rule.resolve(&params)), f, w, m, l])
        })
        .collect::<cvteleport::Result<Vec<_>>>()
        .map_err(classify)?;
    Ok(RunOutcome {
        header: &[
            "phase",
            "gain",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: None,
    })
}

fn mc_vs_analytic(
    p: McVsAnalyticParams,
    seed_override: Option<u64>,
) -> Result<RunOutcome, CliError> {
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(p.r));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let seed = seed_override.or(p.seed).unwrap_or(0);
    let params = SourceParams::new(p.r).map_err(classify)?;
    let rule = p.gain.rule();

    let point = teleport_point(&params, rule, &input, &grid, cutoff).map_err(classify)?;
    let avg = teleport_average(&input, &params, rule, &grid, cutoff).map_err(classify)?;
    let mc = teleport_mc(&input, &params, rule, &grid, cutoff, p.shots, seed).map_err(classify)?;
    let mc_metrics = qubit_metrics(&mc.rho, Some(&input)).map_err(classify)?;
    let fidelity_mc = mc_metrics.conditional_fidelity.ok_or_else(|| {
        CliError::Config("Monte-Carlo output lost all one-photon weight".into())
    })?;
    // The averaged state is unnormalized (its trace is the captured
    // probability); the shot average is trace 1, so compare normalized.
    let distance = mc
        .rho
        .trace_distance(&avg.rho.normalized())
        .map_err(classify)?;

    let [f, w, m, l] = point_cells(&point);
    let row = vec![
        fmt(p.r),
        fmt(rule.resolve(&params)),
        p.shots.to_string(),
        seed.to_string(),
        f,
        w,
        m,
        l,
        fmt(fidelity_mc),
        fmt(mc_metrics.one_photon_weight),
        fmt(distance),
        fmt(mc.trace_distance_se),
    ];
    Ok(RunOutcome {
        header: &[
            "r",
            "gain",
            "shots",
            "seed",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
            "fidelity_mc",
            "one_photon_weight_mc",
            "trace_distance",
            "trace_distance_se",
        ],
        rows: vec![row],
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: Some(seed),
    })
}

fn fwm_equivalence(p: FwmEquivalenceParams) -> Result<RunOutcome, CliError> {
    require_nonempty("s_coefficient", &p.s_coefficient)?;
    let s_peak = p.s_coefficient.iter().fold(1.0, |m: f64, &s| m.max(s.abs()));
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(p.r * s_peak));
    let rows = p
        .s_coefficient
        .par_iter()
        .map(|&s| {
            let params = SourceParams::new(p.r)?.with_s_coefficient(s);
            params.validate()?;
            let tmsv = make_tmsv_pair(&params, cutoff)?;
            let fwm = apply_waveplates(make_fwm_source(&params, cutoff)?)?;
            let overlap = fwm.overlap(&tmsv)?;
            let fidelity = overlap.norm_sqr() / (fwm.norm_sqr() * tmsv.norm_sqr());
            // Probability of exactly one pair in one polarization.
            let single_h = fwm.amplitude(&[1, 0, 1, 0]).norm_sqr();
            let single_v = fwm.amplitude(&[0, 1, 0, 1]).norm_sqr();
            let one_photon_weight = (single_h + single_v) / fwm.norm_sqr();
            let leak = fwm.leakage().max(tmsv.leakage());
            Ok(vec![
                fmt(p.r),
                fmt(s),
                fmt(fidelity),
                fmt(one_photon_weight),
                fmt(1.0),
                fmt(leak),
            ])
        })
        .collect::<cvteleport::Result<Vec<_>>>()
        .map_err(classify)?;
    Ok(RunOutcome {
        header: &[
            "r",
            "s_coefficient",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: None,
        seed: None,
    })
}

fn bandwidth(p: BandwidthParams) -> Result<RunOutcome, CliError> {
    let sspec = p.squeezing.build().map_err(classify)?;
    let qspec = p.qubit.build().map_err(classify)?;
    let map = FrequencyMap::new(p.map.omega_a, p.map.omega_b, p.map.bin_width, p.map.n_bins)
        .map_err(classify)?;
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(p.squeezing.peak()));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let report = effective_fidelity(&qspec, &sspec, p.gain.rule(), &input, &grid, &map, cutoff)
        .map_err(classify)?;
    let rows = report
        .bins
        .iter()
        .map(|bin| {
            vec![
                bin.bin.to_string(),
                fmt(bin.offset),
                fmt(bin.squeeze),
                fmt(bin.weight),
                fmt(bin.fidelity),
                fmt(bin.one_photon_weight),
                fmt(bin.quadrature_mass),
                fmt(bin.truncation_leakage),
                fmt(report.effective_fidelity),
            ]
        })
        .collect();
    Ok(RunOutcome {
        header: &[
            "bin",
            "offset",
            "squeeze",
            "weight",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
            "effective_fidelity",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: None,
    })
}

fn network(p: NetworkParams) -> Result<RunOutcome, CliError> {
    require_nonempty("eta", &p.eta)?;
    let r_max = p.stage1.r.max(p.stage2.r);
    let cutoff = p.cutoff.unwrap_or_else(|| default_cutoff(r_max));
    let grid = resolve_grid(p.grid, cutoff).map_err(classify)?;
    let input = resolve_input(p.input).map_err(classify)?;
    let kind = match p.kind {
        NetworkKind::ConvertedQubit => PipelineKind::ConvertedQubit,
        NetworkKind::Predistributed => PipelineKind::PredistributedResource,
    };
    let rows = p
        .eta
        .par_iter()
        .map(|&eta| {
            let spec = PipelineSpec {
                kind,
                stage1: StageSpec {
                    params: SourceParams::new(p.stage1.r)?,
                    gain: p.stage1.gain.rule(),
                },
                stage2: StageSpec {
                    params: SourceParams::new(p.stage2.r)?,
                    gain: p.stage2.gain.rule(),
                },
                fiber: LossParams::fiber(eta)?,
                input,
                grid,
                cutoff,
            };
            let rep = run_pipeline(&spec)?;
            let fidelity = rep.end_to_end_fidelity.ok_or(Error::InvalidParameter {
                name: "eta",
                value: eta,
                constraint: "relay output must keep one-photon weight",
            })?;
            let mass = rep
                .stages
                .iter()
                .map(|s| s.quadrature_mass)
                .fold(1.0, f64::min);
            let leak: f64 = rep.stages.iter().map(|s| s.truncation_leakage).sum();
            Ok(vec![
                fmt(eta),
                fmt(rep.rho.trace()),
                fmt(fidelity),
                fmt(rep.one_photon_weight),
                fmt(mass),
                fmt(leak),
            ])
        })
        .collect::<cvteleport::Result<Vec<_>>>()
        .map_err(classify)?;
    Ok(RunOutcome {
        header: &[
            "eta",
            "trace",
            "fidelity",
            "one_photon_weight",
            "captured_grid_mass",
            "truncation_leakage",
        ],
        rows,
        cutoff: Some(cutoff),
        grid: Some(GridSummary::of(&grid)),
        seed: None,
    })
}
