//! Photon loss and lossy two-hop relay pipelines.
//!
//! Loss of power transmittance `eta` acts per mode as a beam splitter
//! against a vacuum ancilla that is traced out.  In Kraus form
//!
//! ```text
//! K_j |n> = sqrt( C(n, j) eta^(n-j) (1-eta)^j ) |n-j>
//! ```
//!
//! which is exactly trace preserving on the truncated space, because the
//! binomial weights of every number state sum to one and no Kraus term
//! raises the photon number.
//!
//! The relay drivers chain two teleport stages.  One kind sends the
//! converted qubit through the fiber between the hops; the other sends
//! the transmitted arm of the first resource through the fiber ahead of
//! time, so the loss acts before that hop's feedforward correction.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{displacement_block, linear_modes, Arm, DensityMatrix, ModeLabel};
use crate::linalg::kron;
use crate::real::{cis, cre, czero, rl, Real, C};
use crate::sources::{InputQubit, SourceParams};
use crate::teleport::{
    check_gain, feedforward_gains, grid_gram_mass, grid_kernels_two_pol, h_level, node_weights,
    pair_amplitudes, qubit_density, qubit_metrics, survival, teleport_average,
    teleport_density_average, v_level, AverageReport, BetaGrid, GainRule, PolNode, QubitMetrics,
};

/// Pure photon loss on a set of modes.
#[derive(Clone, Debug)]
pub struct LossParams<R: Real> {
    /// Power transmittance in [0, 1].
    pub eta: R,
    /// Modes the loss acts on.
    pub target: Vec<ModeLabel>,
}

impl<R: Real> LossParams<R> {
    pub fn new(eta: R, target: &[ModeLabel]) -> Result<Self> {
        let loss = LossParams {
            eta,
            target: target.to_vec(),
        };
        loss.validate()?;
        Ok(loss)
    }

    /// Loss on both polarizations of the transmitted resource arm.
    pub fn fiber(eta: R) -> Result<Self> {
        Self::new(eta, &linear_modes(Arm::B))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= R::zero() && self.eta <= R::one()) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta.to_f64_lossy(),
                constraint: "in [0, 1]",
            });
        }
        if self.target.is_empty() {
            return Err(Error::EmptyModes);
        }
        for (i, mode) in self.target.iter().enumerate() {
            if self.target[..i].contains(mode) {
                return Err(Error::DuplicateMode(*mode));
            }
        }
        Ok(())
    }
}

/// Loss amplitudes `coef[j][i]`: the weight for keeping `i` photons out
/// of `i + j`.  Built by the ratio recurrence
/// `c(i) = c(i-1) sqrt(eta (i+j) / i)` from `c(0) = (1-eta)^(j/2)`,
/// so no factorial overflows for any cutoff.
fn loss_coefficients<R: Real>(eta: R, dim: usize) -> Vec<Vec<R>> {
    let lost = (R::one() - eta).sqrt();
    (0..dim)
        .map(|j| {
            let mut row = Vec::with_capacity(dim - j);
            let mut c = lost.powi(j as i32);
            row.push(c);
            for i in 1..dim - j {
                c = c * (eta * rl::<R>((i + j) as f64) / rl::<R>(i as f64)).sqrt();
                row.push(c);
            }
            row
        })
        .collect()
}

fn loss_kraus<R: Real>(eta: R, dim: usize) -> Vec<Array2<C<R>>> {
    loss_coefficients(eta, dim)
        .into_iter()
        .enumerate()
        .map(|(j, row)| {
            let mut k = Array2::from_elem((dim, dim), czero::<R>());
            for (i, c) in row.into_iter().enumerate() {
                k[[i, i + j]] = cre(c);
            }
            k
        })
        .collect()
}

/// Applies photon loss of transmittance `loss.eta` to every target mode.
pub fn loss_channel<R: Real>(
    rho: &DensityMatrix<R>,
    loss: &LossParams<R>,
) -> Result<DensityMatrix<R>> {
    loss.validate()?;
    let kraus = loss_kraus(loss.eta, rho.cutoff() + 1);
    let mut out = rho.clone();
    for mode in &loss.target {
        out.apply_one_mode_kraus(mode, &kraus)?;
    }
    Ok(out)
}

/// Which leg of the relay the fiber loss acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipelineKind {
    /// Teleport, send the converted output through the fiber, teleport
    /// again at the receiving node.
    ConvertedQubit,
    /// Send the transmitted arm of the first resource through the fiber
    /// before its feedforward correction, then run the second hop
    /// lossless.
    PredistributedResource,
}

/// Source and gain of one relay hop.
#[derive(Clone, Debug)]
pub struct StageSpec<R: Real> {
    pub params: SourceParams<R>,
    pub gain: GainRule<R>,
}

/// Two-hop relay: an input qubit, two teleport stages, fiber loss between
/// them, and a shared outcome grid and cutoff.
#[derive(Clone, Debug)]
pub struct PipelineSpec<R: Real> {
    pub kind: PipelineKind,
    pub stage1: StageSpec<R>,
    pub stage2: StageSpec<R>,
    pub fiber: LossParams<R>,
    pub input: InputQubit<R>,
    pub grid: BetaGrid<R>,
    pub cutoff: usize,
}

/// State summary after one pipeline step.
#[derive(Clone, Debug)]
pub struct StageReport<R: Real> {
    /// Step name: "stage1", "fiber", "stage2".  The predistributed kind
    /// folds the fiber into stage1 and reports no separate fiber step.
    pub label: &'static str,
    /// Unnormalized trace retained up to this step.
    pub trace: R,
    /// Grid quadrature mass of the step's outcome average; 1 for the
    /// fiber, which involves no grid.
    pub quadrature_mass: R,
    /// Captured probability the step pushed past the cutoff,
    /// `max(0, quadrature_mass * model_total - trace)`; 0 for the fiber,
    /// which is exactly trace preserving.
    pub truncation_leakage: R,
    pub metrics: QubitMetrics<R>,
}

/// End-to-end relay output.  All traces stay unnormalized, so the final
/// trace is the probability weight retained by the whole relay.
#[derive(Clone, Debug)]
pub struct PipelineReport<R: Real> {
    /// Conditional fidelity of the final one-photon block against the
    /// input; absent when the block is empty.
    pub end_to_end_fidelity: Option<R>,
    /// Absolute one-photon weight of the final state.
    pub one_photon_weight: R,
    /// Unnormalized final state on the output arm.
    pub rho: DensityMatrix<R>,
    pub metrics: QubitMetrics<R>,
    pub stages: Vec<StageReport<R>>,
}

fn stage_report<R: Real>(
    label: &'static str,
    average: &AverageReport<R>,
    input: &InputQubit<R>,
) -> Result<StageReport<R>> {
    let trace = average.rho.trace();
    Ok(StageReport {
        label,
        trace,
        quadrature_mass: average.quadrature_mass,
        truncation_leakage: (average.quadrature_mass * average.model_total - trace)
            .max(R::zero()),
        metrics: qubit_metrics(&average.rho, Some(input))?,
    })
}

/// Runs the two-hop relay described by `spec`.
///
/// Both kinds teleport the input at stage 1 and feed the relabeled result
/// to stage 2 as a density input on the same grid and cutoff.  Loss is
/// linear, so for [`PipelineKind::ConvertedQubit`] it may act on the
/// outcome-averaged stage-1 state even though physically each trial sends
/// one conditional state through the fiber.
pub fn run_pipeline<R: Real>(spec: &PipelineSpec<R>) -> Result<PipelineReport<R>> {
    spec.fiber.validate()?;
    let mut stages = Vec::with_capacity(3);

    let first = match spec.kind {
        PipelineKind::ConvertedQubit => teleport_average(
            &spec.input,
            &spec.stage1.params,
            spec.stage1.gain,
            &spec.grid,
            spec.cutoff,
        )?,
        PipelineKind::PredistributedResource => predistributed_average(
            &spec.input,
            &spec.stage1.params,
            spec.stage1.gain,
            &spec.fiber,
            &spec.grid,
            spec.cutoff,
        )?,
    };
    stages.push(stage_report("stage1", &first, &spec.input)?);

    let sent = match spec.kind {
        PipelineKind::ConvertedQubit => {
            let lossy = loss_channel(&first.rho, &spec.fiber)?;
            stages.push(StageReport {
                label: "fiber",
                trace: lossy.trace(),
                quadrature_mass: R::one(),
                truncation_leakage: R::zero(),
                metrics: qubit_metrics(&lossy, Some(&spec.input))?,
            });
            lossy
        }
        PipelineKind::PredistributedResource => first.rho,
    };

    let relabeled = sent.with_modes(&linear_modes(Arm::In))?;
    let second = teleport_density_average(
        &relabeled,
        &spec.stage2.params,
        spec.stage2.gain,
        &spec.grid,
    )?;
    let metrics = qubit_metrics(&second.rho, Some(&spec.input))?;
    let trace2 = second.rho.trace();
    stages.push(StageReport {
        label: "stage2",
        trace: trace2,
        quadrature_mass: second.quadrature_mass,
        truncation_leakage: (second.quadrature_mass * second.model_total - trace2)
            .max(R::zero()),
        metrics: metrics.clone(),
    });

    Ok(PipelineReport {
        end_to_end_fidelity: metrics.conditional_fidelity,
        one_photon_weight: metrics.one_photon_weight,
        rho: second.rho,
        metrics,
        stages,
    })
}

/// Stage-1 average with the fiber loss applied to the transmitted arm
/// before the feedforward correction.
///
/// The loss acts on the arm the measurement never touches, so the
/// outcome density, the model total and the grid-mass gate are those of
/// the lossless run; only the conditional outputs change.  Per node the
/// output block over kernel columns m, k is
///
/// ```text
/// D(g_s beta) [ sum_j (K_j t_m)(K_j t_k)+ ] D(g_s beta)+
/// ```
///
/// with `t` the undisplaced kernel columns of that polarization.
fn predistributed_average<R: Real>(
    input: &InputQubit<R>,
    params: &SourceParams<R>,
    gain: GainRule<R>,
    fiber: &LossParams<R>,
    grid: &BetaGrid<R>,
    cutoff: usize,
) -> Result<AverageReport<R>> {
    params.validate()?;
    if cutoff < 1 {
        return Err(Error::CutoffTooSmall(cutoff));
    }
    let arm = linear_modes(Arm::B);
    for mode in &fiber.target {
        if !arm.contains(mode) {
            return Err(Error::UnknownMode(*mode));
        }
    }
    let lossy = (fiber.target.contains(&arm[0]), fiber.target.contains(&arm[1]));

    let g = gain.resolve(params);
    check_gain(g)?;
    let (zeta_h, zeta_v) = pair_amplitudes(params);
    let gains = feedforward_gains(g, zeta_h, zeta_v);
    let dim = cutoff + 1;
    // Zero feedforward here: the loss has to hit the undisplaced kernels,
    // the correction is applied per node afterwards.
    let (nodes_h, nodes_v) =
        grid_kernels_two_pol(zeta_h, zeta_v, (czero(), czero()), grid, dim, &[0, 1]);
    let weights = node_weights(grid);
    let rho_q = qubit_density(input);
    let model_total = survival(zeta_h, cutoff) * survival(zeta_v, cutoff);

    let quadrature_mass = grid_gram_mass(&nodes_h, &nodes_v, &weights, &rho_q) / model_total;
    if quadrature_mass < rl::<R>(0.99) {
        return Err(Error::GridMass {
            captured: quadrature_mass.to_f64_lossy(),
            required: 0.99,
        });
    }

    // Displacement blocks once per distinct |g_s beta|, as in the lossless
    // kernel builder; the radius expression must match the lookups below
    // bit for bit.
    let axis = grid.axis();
    let p = axis.len();
    let mut radii: BTreeMap<u64, R> = BTreeMap::new();
    for ix in 0..p {
        for iy in 0..p {
            let s = (axis[ix] * axis[ix] + axis[iy] * axis[iy]).sqrt();
            for shifted in [gains.0.norm() * s, gains.1.norm() * s] {
                radii.insert(shifted.to_f64_lossy().to_bits(), shifted);
            }
        }
    }
    let blocks: HashMap<u64, Array2<C<R>>> = radii
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(bits, s)| (bits, displacement_block(cre(s), dim)))
        .collect();

    let coef = loss_coefficients(fiber.eta, dim);
    let zero_block = || Array2::from_elem((dim, dim), czero::<R>());

    // Per node and polarization: [T_00, T_01, T_11]; T_10 is the adjoint
    // of T_01.
    let node_blocks = |node: usize, nodes: &[PolNode<R>], gain_s: C<R>, with_loss: bool| {
        let x = axis[node / p];
        let y = axis[node % p];
        let t = &nodes[node].u;

        let mut l = [zero_block(), zero_block(), zero_block()];
        if with_loss {
            let mut a = vec![czero::<R>(); dim];
            let mut b = vec![czero::<R>(); dim];
            for (j, row) in coef.iter().enumerate() {
                for (i, &c) in row.iter().enumerate() {
                    let cc = cre(c);
                    a[i] = cc * t[[i + j, 0]];
                    b[i] = cc * t[[i + j, 1]];
                }
                let rows = row.len();
                for (idx, (left, right)) in [(&a, &a), (&a, &b), (&b, &b)].into_iter().enumerate()
                {
                    let dst = &mut l[idx];
                    for ra in 0..rows {
                        let lead = left[ra];
                        for rb in 0..rows {
                            dst[[ra, rb]] = dst[[ra, rb]] + lead * right[rb].conj();
                        }
                    }
                }
            }
        } else {
            for (idx, (m, k)) in [(0usize, 0usize), (0, 1), (1, 1)].iter().enumerate() {
                for ra in 0..dim {
                    let lead = t[[ra, *m]];
                    for rb in 0..dim {
                        l[idx][[ra, rb]] = lead * t[[rb, *k]].conj();
                    }
                }
            }
        }

        // D(g_s beta) = Phi D(|g_s beta|) Phi+ with Phi = diag(e^{i n arg}),
        // so T = Phi Dg (Phi+ L Phi) Dg+ Phi+.
        let s = (x * x + y * y).sqrt();
        let shift = gain_s * C::new(x, y);
        let theta = shift.im.atan2(shift.re);
        let fwd: Vec<C<R>> = (0..dim).map(|n| cis(rl::<R>(n as f64) * theta)).collect();
        let dg = &blocks[&(gain_s.norm() * s).to_f64_lossy().to_bits()];
        let dg_adj = dg.t().mapv(|z| z.conj());
        l.map(|lmk| {
            let mut inner = lmk;
            for ra in 0..dim {
                let back = fwd[ra].conj();
                for rb in 0..dim {
                    inner[[ra, rb]] = back * inner[[ra, rb]] * fwd[rb];
                }
            }
            let mut out = dg.dot(&inner).dot(&dg_adj);
            for ra in 0..dim {
                let lead = fwd[ra];
                for rb in 0..dim {
                    out[[ra, rb]] = lead * out[[ra, rb]] * fwd[rb].conj();
                }
            }
            out
        })
    };

    // Theta[m, k] = sum_nodes w T_mk, accumulated in node order with the
    // per-node work fanned out in bounded chunks.
    let mut theta_h = vec![zero_block(); 4];
    let mut theta_v = vec![zero_block(); 4];
    let chunk = 64;
    let mut start = 0;
    while start < p * p {
        let end = (start + chunk).min(p * p);
        let parts: Vec<_> = (start..end)
            .into_par_iter()
            .map(|node| {
                (
                    node_blocks(node, &nodes_h, gains.0, lossy.0),
                    node_blocks(node, &nodes_v, gains.1, lossy.1),
                )
            })
            .collect();
        for (off, (bh, bv)) in parts.into_iter().enumerate() {
            let cw = cre(weights[start + off]);
            for (theta, t3) in [(&mut theta_h, bh), (&mut theta_v, bv)] {
                theta[0].zip_mut_with(&t3[0], |z, v| *z = *z + cw * *v);
                theta[1].zip_mut_with(&t3[1], |z, v| *z = *z + cw * *v);
                theta[3].zip_mut_with(&t3[2], |z, v| *z = *z + cw * *v);
                for ra in 0..dim {
                    for rb in 0..dim {
                        theta[2][[ra, rb]] = theta[2][[ra, rb]] + cw * t3[1][[rb, ra]].conj();
                    }
                }
            }
        }
        start = end;
    }

    let dd = dim * dim;
    let mut rho = Array2::from_elem((dd, dd), czero::<R>());
    for j in 0..2 {
        for jp in 0..2 {
            let coeff = rho_q[j][jp];
            if coeff == czero() {
                continue;
            }
            let piece = kron(
                &theta_h[h_level(j) * 2 + h_level(jp)],
                &theta_v[v_level(j) * 2 + v_level(jp)],
            );
            rho.zip_mut_with(&piece, |z, v| *z = *z + coeff * *v);
        }
    }

    let trace: R = (0..dd).map(|i| rho[[i, i]].re).sum();
    let deficit = (R::one() - trace).max(R::zero());
    let rho = DensityMatrix::from_matrix(arm.to_vec(), cutoff, rho, deficit);
    Ok(AverageReport {
        rho,
        quadrature_mass,
        model_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Polarization;

    #[test]
    fn loss_coefficients_keep_every_number_state_normalized() {
        let dim = 9;
        let coef = loss_coefficients(0.37f64, dim);
        for n in 0..dim {
            let total: f64 = (0..=n).map(|j| coef[j][n - j].powi(2)).sum();
            assert!((total - 1.0).abs() < 1e-14, "n={n} total={total}");
        }
    }

    #[test]
    fn loss_kraus_edges_are_the_identity_and_the_erasure() {
        let keep = loss_kraus(1.0f64, 5);
        for (j, k) in keep.iter().enumerate() {
            for a in 0..5 {
                for b in 0..5 {
                    let want = if j == 0 && a == b { 1.0 } else { 0.0 };
                    assert!((k[[a, b]].re - want).abs() < 1e-15);
                    assert_eq!(k[[a, b]].im, 0.0);
                }
            }
        }
        let erase = loss_kraus(0.0f64, 5);
        for (j, k) in erase.iter().enumerate() {
            for a in 0..5 {
                for b in 0..5 {
                    let want = if a == 0 && b == j { 1.0 } else { 0.0 };
                    assert!((k[[a, b]].re - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn loss_params_reject_bad_transmittance_and_duplicates() {
        let modes = linear_modes(Arm::B);
        assert!(matches!(
            LossParams::new(1.2f64, &modes),
            Err(Error::InvalidParameter { name: "eta", .. })
        ));
        assert!(matches!(
            LossParams::new(-0.1f64, &modes),
            Err(Error::InvalidParameter { name: "eta", .. })
        ));
        assert!(matches!(
            LossParams::new(f64::NAN, &modes),
            Err(Error::InvalidParameter { name: "eta", .. })
        ));
        assert!(matches!(
            LossParams::<f64>::new(0.5, &[]),
            Err(Error::EmptyModes)
        ));
        let twice = [modes[0], modes[0]];
        assert!(matches!(
            LossParams::new(0.5f64, &twice),
            Err(Error::DuplicateMode(_))
        ));
    }

    #[test]
    fn predistributed_fiber_must_sit_on_the_transmitted_arm() {
        let bad = LossParams::new(
            0.5f64,
            &[ModeLabel::new(Arm::In, Polarization::H)],
        )
        .unwrap();
        let spec = PipelineSpec {
            kind: PipelineKind::PredistributedResource,
            stage1: StageSpec {
                params: SourceParams::new(0.3).unwrap(),
                gain: GainRule::Matched,
            },
            stage2: StageSpec {
                params: SourceParams::new(0.3).unwrap(),
                gain: GainRule::Matched,
            },
            fiber: bad,
            input: InputQubit::new(crate::real::cone(), czero()).unwrap(),
            grid: BetaGrid::new(5.0, 9).unwrap(),
            cutoff: 6,
        };
        assert!(matches!(run_pipeline(&spec), Err(Error::UnknownMode(_))));
    }
}
