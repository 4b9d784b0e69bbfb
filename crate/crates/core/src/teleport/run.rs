//! Outcome-averaged and sampled teleport outputs, plus qubit-level metrics.
//!
//! Averages never loop over the four-dimensional outcome grid directly.
//! The joint density and the output state both factor per polarization, so
//! each polarization is reduced over its own two-dimensional grid into
//! moment matrices
//!
//! ```text
//! Theta[m, k] = sum_nodes w * (M|m>) (M|k>)+
//! ```
//!
//! and the four-dimensional average is assembled from per-polarization
//! pieces afterwards.  This keeps the cost linear in the number of 2D
//! nodes instead of quadratic.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::transfer::{grid_kernels_two_pol, PolNode};
use super::{pair_amplitudes, BetaGrid, GainRule};
use crate::error::{Error, Result};
use crate::fock::{linear_modes, Arm, DensityMatrix};
use crate::linalg::kron;
use crate::real::{cre, czero, rl, Real, C};
use crate::sources::{InputQubit, SourceParams};

/// Outcome-averaged teleport output.
#[derive(Clone, Debug)]
pub struct AverageReport<R: Real> {
    /// Unnormalized output on (B,H), (B,V); the trace is the probability
    /// captured by the grid and the cutoff.
    pub rho: DensityMatrix<R>,
    /// Grid quadrature mass relative to the model total; 1 when the grid
    /// covers the outcome density adequately.
    pub quadrature_mass: R,
    /// Exact outcome-density integral of the truncated model,
    /// `S_H * S_V * trace_in` with `S = 1 - |zeta|^(2 cutoff + 2)`.
    pub model_total: R,
}

/// Monte-Carlo estimate of the teleport output.
#[derive(Clone, Debug)]
pub struct McReport<R: Real> {
    /// Shot average of normalized conditional outputs; trace 1.
    pub rho: DensityMatrix<R>,
    /// Standard error of each density-matrix entry (complex modulus).
    pub entry_se: Array2<R>,
    /// Propagated trace-distance error bound,
    /// `0.5 * sqrt(dim) * ||entry_se||_F`.
    pub trace_distance_se: R,
    pub shots: usize,
    /// Grid mass of the sampling law, as in [`AverageReport`].
    pub quadrature_mass: R,
}

/// Weights and one-photon-block metrics of a two-mode output state.
#[derive(Clone, Debug)]
pub struct QubitMetrics<R: Real> {
    pub vacuum_weight: R,
    pub one_photon_weight: R,
    pub multi_photon_weight: R,
    /// Overlap of the renormalized one-photon block with the reference
    /// qubit; absent when no reference was given or the block is empty.
    pub conditional_fidelity: Option<R>,
    /// Stokes vector of the renormalized one-photon block.  Convention:
    /// `x = 2 Re<01|rho|10>`, `y = 2 Im<01|rho|10>`, `z = <10|rho|10> -
    /// <01|rho|01>`, so `|1;0>` maps to (0, 0, 1), matching
    /// [`InputQubit::bloch_vector`].
    pub bloch_vector: [R; 3],
}

pub(crate) fn survival<R: Real>(zeta: C<R>, cutoff: usize) -> R {
    R::one() - zeta.norm_sqr().powi(cutoff as i32 + 1)
}

pub(crate) fn check_gain<R: Real>(g: R) -> Result<()> {
    if !g.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gain",
            value: g.to_f64_lossy(),
            constraint: "finite",
        });
    }
    Ok(())
}

/// Complex feedforward amplitudes, phase-locked per polarization to the
/// pair amplitude: the applied correction is `D(g e^{i arg zeta} beta)`.
/// Locking makes a pump phase act as a pure photon-number phase rotation
/// on that polarization of the output,
/// `M(zeta e^{i phi}, g e^{i phi}) = e^{i phi n} M(zeta, g)`,
/// instead of washing out the carried coherence in the outcome average.
pub(crate) fn feedforward_gains<R: Real>(g: R, zeta_h: C<R>, zeta_v: C<R>) -> (C<R>, C<R>) {
    let lock = |zeta: C<R>| {
        let norm = zeta.norm();
        if norm > R::zero() {
            cre(g) * (zeta / cre(norm))
        } else {
            cre(g)
        }
    };
    (lock(zeta_h), lock(zeta_v))
}

pub(crate) fn node_weights<R: Real>(grid: &BetaGrid<R>) -> Vec<R> {
    let w = grid.axis_weights();
    let p = w.len();
    let mut out = Vec::with_capacity(p * p);
    for a in 0..p {
        for b in 0..p {
            out.push(w[a] * w[b]);
        }
    }
    out
}

/// 2x2 coherence matrix of the input qubit, `rho_q[j][k] = c_j conj(c_k)`
/// with j = 0 meaning the H component.
pub(crate) fn qubit_density<R: Real>(input: &InputQubit<R>) -> [[C<R>; 2]; 2] {
    let c = [input.c1(), input.c2()];
    [
        [c[0] * c[0].conj(), c[0] * c[1].conj()],
        [c[1] * c[0].conj(), c[1] * c[1].conj()],
    ]
}

// Occupation of the H and V output modes for logical component j:
// j = 0 is the H photon |1;0>, j = 1 the V photon |0;1>.
pub(crate) fn h_level(j: usize) -> usize {
    1 - j
}
pub(crate) fn v_level(j: usize) -> usize {
    j
}

/// Grid integral of the outcome density from per-node Grams: the captured
/// mass under the qubit coherence weights, before any feedforward.
pub(crate) fn grid_gram_mass<R: Real>(
    nodes_h: &[PolNode<R>],
    nodes_v: &[PolNode<R>],
    weights: &[R],
    rho_q: &[[C<R>; 2]; 2],
) -> R {
    let mut gh = Array2::from_elem((2, 2), czero::<R>());
    let mut gv = Array2::from_elem((2, 2), czero::<R>());
    for (i, &w) in weights.iter().enumerate() {
        let cw = cre(w);
        for m in 0..2 {
            for k in 0..2 {
                gh[[m, k]] = gh[[m, k]] + cw * nodes_h[i].gram[[m, k]];
                gv[[m, k]] = gv[[m, k]] + cw * nodes_v[i].gram[[m, k]];
            }
        }
    }
    let mut mass = czero::<R>();
    for j in 0..2 {
        for jp in 0..2 {
            mass = mass
                + rho_q[jp][j]
                    * gh[[h_level(j), h_level(jp)]]
                    * gv[[v_level(j), v_level(jp)]];
        }
    }
    mass.re
}

/// Per-shot generator seed of the Monte-Carlo stream: shot `i` draws from
/// a ChaCha12 generator seeded with this value, independent of batching.
pub fn mc_shot_seed(seed: u64, shot: u64) -> u64 {
    seed ^ shot
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(0xd1b5_4a32_d192_ed03)
}

struct QubitEngine<R: Real> {
    nodes_h: Vec<PolNode<R>>,
    nodes_v: Vec<PolNode<R>>,
    weights: Vec<R>,
    rho_q: [[C<R>; 2]; 2],
    model_total: R,
    dim: usize,
}

impl<R: Real> QubitEngine<R> {
    fn new(
        input: &InputQubit<R>,
        params: &SourceParams<R>,
        gain: GainRule<R>,
        grid: &BetaGrid<R>,
        cutoff: usize,
    ) -> Result<Self> {
        params.validate()?;
        if cutoff < 1 {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        let g = gain.resolve(params);
        check_gain(g)?;
        let (zeta_h, zeta_v) = pair_amplitudes(params);
        let gains = feedforward_gains(g, zeta_h, zeta_v);
        let dim = cutoff + 1;
        let (nodes_h, nodes_v) = grid_kernels_two_pol(zeta_h, zeta_v, gains, grid, dim, &[0, 1]);
        Ok(QubitEngine {
            nodes_h,
            nodes_v,
            weights: node_weights(grid),
            rho_q: qubit_density(input),
            model_total: survival(zeta_h, cutoff) * survival(zeta_v, cutoff),
            dim,
        })
    }

    /// Outcome density of one 4D node (H node, V node) without weights.
    fn node_density(&self, node_h: usize, node_v: usize) -> R {
        let gh = &self.nodes_h[node_h].gram;
        let gv = &self.nodes_v[node_v].gram;
        let mut acc = czero::<R>();
        for j in 0..2 {
            for jp in 0..2 {
                acc = acc
                    + self.rho_q[jp][j]
                        * gh[[h_level(j), h_level(jp)]]
                        * gv[[v_level(j), v_level(jp)]];
            }
        }
        acc.re
    }

    fn require_mass(&self) -> Result<R> {
        let total = grid_gram_mass(&self.nodes_h, &self.nodes_v, &self.weights, &self.rho_q);
        let mass = total / self.model_total;
        if mass < rl::<R>(0.99) {
            return Err(Error::GridMass {
                captured: mass.to_f64_lossy(),
                required: 0.99,
            });
        }
        Ok(mass)
    }

    /// Unnormalized conditional output at one 4D node, flattened as
    /// `n_H * dim + n_V`.
    fn node_output(&self, node_h: usize, node_v: usize, c1: C<R>, c2: C<R>) -> Vec<C<R>> {
        let uh = &self.nodes_h[node_h].u;
        let uv = &self.nodes_v[node_v].u;
        let d = self.dim;
        let mut out = vec![czero::<R>(); d * d];
        for a in 0..d {
            let h1 = c1 * uh[[a, 1]];
            let h0 = c2 * uh[[a, 0]];
            for c in 0..d {
                out[a * d + c] = h1 * uv[[c, 0]] + h0 * uv[[c, 1]];
            }
        }
        out
    }
}

/// Grid-quadrature average of the teleport output for a pure qubit input.
///
/// The source is the paired-arm state of `params` (pair amplitude
/// `tanh r` on both polarizations, the V pair carrying the pump phase
/// sum),
/// the displacement gain follows `gain`, and the outcome integral runs
/// over `grid` at the given photon-number cutoff.  The returned trace is
/// the captured probability; it sits below `quadrature_mass *
/// model_total` by whatever norm the feedforward displacement pushed past
/// the cutoff.
pub fn teleport_average<R: Real>(
    input: &InputQubit<R>,
    params: &SourceParams<R>,
    gain: GainRule<R>,
    grid: &BetaGrid<R>,
    cutoff: usize,
) -> Result<AverageReport<R>> {
    let engine = QubitEngine::new(input, params, gain, grid, cutoff)?;
    let quadrature_mass = engine.require_mass()?;
    let d = engine.dim;

    // Theta[m, k][a, b] = sum w u_m[a] conj(u_k[b]) per polarization.
    let zero_block = || Array2::from_elem((d, d), czero::<R>());
    let mut theta_h = vec![zero_block(); 4];
    let mut theta_v = vec![zero_block(); 4];
    for (i, &w) in engine.weights.iter().enumerate() {
        let cw = cre(w);
        for (theta, node) in [
            (&mut theta_h, &engine.nodes_h[i]),
            (&mut theta_v, &engine.nodes_v[i]),
        ] {
            for m in 0..2 {
                for k in 0..2 {
                    let block = &mut theta[m * 2 + k];
                    for a in 0..d {
                        let lead = cw * node.u[[a, m]];
                        for b in 0..d {
                            block[[a, b]] = block[[a, b]] + lead * node.u[[b, k]].conj();
                        }
                    }
                }
            }
        }
    }

    let mut rho = Array2::from_elem((d * d, d * d), czero::<R>());
    for j in 0..2 {
        for jp in 0..2 {
            let coeff = engine.rho_q[j][jp];
            if coeff == czero() {
                continue;
            }
            let piece = kron(
                &theta_h[h_level(j) * 2 + h_level(jp)],
                &theta_v[v_level(j) * 2 + v_level(jp)],
            );
            rho.zip_mut_with(&piece, |z, p| *z = *z + coeff * *p);
        }
    }

    let trace: R = (0..d * d).map(|i| rho[[i, i]].re).sum();
    let deficit = (R::one() - trace).max(R::zero());
    let modes = linear_modes(Arm::B);
    let rho = DensityMatrix::from_matrix(modes.to_vec(), cutoff, rho, deficit);
    Ok(AverageReport {
        rho,
        quadrature_mass,
        model_total: engine.model_total,
    })
}

/// Monte-Carlo teleport: draws outcomes from the discretized density and
/// averages the normalized conditional outputs.
///
/// Shot `i` draws from a ChaCha12 generator seeded with
/// [`mc_shot_seed`]`(seed, i)` and shots are reduced over a fixed set of
/// 16 contiguous chunks, so the result is bitwise reproducible for a
/// fixed seed regardless of the thread count.
pub fn teleport_mc<R: Real>(
    input: &InputQubit<R>,
    params: &SourceParams<R>,
    gain: GainRule<R>,
    grid: &BetaGrid<R>,
    cutoff: usize,
    shots: usize,
    seed: u64,
) -> Result<McReport<R>> {
    if shots == 0 {
        return Err(Error::InvalidParameter {
            name: "shots",
            value: 0.0,
            constraint: "at least 1",
        });
    }
    let engine = QubitEngine::new(input, params, gain, grid, cutoff)?;
    let quadrature_mass = engine.require_mass()?;
    let d = engine.dim;
    let p2 = engine.weights.len();

    // Sampling law over flattened 4D nodes, H node major; same layout as
    // the grid-density sampler.
    let mut cdf = Vec::with_capacity(p2 * p2);
    let mut total = R::zero();
    for node_h in 0..p2 {
        let wh = engine.weights[node_h];
        for node_v in 0..p2 {
            total += wh * engine.weights[node_v] * engine.node_density(node_h, node_v);
            cdf.push(total);
        }
    }

    let c1 = input.c1();
    let c2 = input.c2();
    let dd = d * d;
    let chunks = 16usize;
    let bound = |c: usize| shots * c / chunks;
    let partials: Vec<(Vec<C<R>>, Vec<R>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut sum = vec![czero::<R>(); dd * dd];
            let mut sumsq = vec![R::zero(); dd * dd];
            for i in bound(chunk)..bound(chunk + 1) {
                let mut rng = ChaCha12Rng::seed_from_u64(mc_shot_seed(seed, i as u64));
                let u: f64 = rng.gen();
                let target = rl::<R>(u) * total;
                let k = cdf.partition_point(|&c| c < target).min(cdf.len() - 1);
                let psi = engine.node_output(k / p2, k % p2, c1, c2);
                let nrm: R = psi.iter().map(|z| z.norm_sqr()).sum();
                if nrm <= R::zero() {
                    continue;
                }
                let inv = cre(R::one() / nrm);
                for a in 0..dd {
                    let lead = psi[a] * inv;
                    for b in 0..dd {
                        let contrib = lead * psi[b].conj();
                        sum[a * dd + b] = sum[a * dd + b] + contrib;
                        sumsq[a * dd + b] += contrib.norm_sqr();
                    }
                }
            }
            (sum, sumsq)
        })
        .collect();

    let mut sum = vec![czero::<R>(); dd * dd];
    let mut sumsq = vec![R::zero(); dd * dd];
    for (ps, pq) in &partials {
        for i in 0..dd * dd {
            sum[i] = sum[i] + ps[i];
            sumsq[i] += pq[i];
        }
    }

    let n = rl::<R>(shots as f64);
    let mut mean = Array2::from_elem((dd, dd), czero::<R>());
    let mut entry_se = Array2::from_elem((dd, dd), R::zero());
    let mut se_frob_sq = R::zero();
    for a in 0..dd {
        for b in 0..dd {
            let m = sum[a * dd + b] / n;
            mean[[a, b]] = m;
            if shots > 1 {
                let var = ((sumsq[a * dd + b] / n - m.norm_sqr()) / (n - R::one())).max(R::zero());
                entry_se[[a, b]] = var.sqrt();
                se_frob_sq += var;
            }
        }
    }
    // Symmetrize away the last-bit rounding asymmetry of the accumulation.
    let half = cre(rl::<R>(0.5));
    let mut herm = Array2::from_elem((dd, dd), czero::<R>());
    for a in 0..dd {
        for b in 0..dd {
            herm[[a, b]] = (mean[[a, b]] + mean[[b, a]].conj()) * half;
        }
    }

    let modes = linear_modes(Arm::B);
    let rho = DensityMatrix::from_matrix(modes.to_vec(), cutoff, herm, R::zero());
    Ok(McReport {
        rho,
        entry_se,
        trace_distance_se: rl::<R>(0.5) * rl::<R>(dd as f64).sqrt() * se_frob_sq.sqrt(),
        shots,
        quadrature_mass,
    })
}

/// Grid-quadrature average for a general (possibly mixed) input state on
/// the input arm.
///
/// The cutoff is taken from `rho_in`, whose modes must be exactly the
/// input-arm pair.  Conventions match [`teleport_average`]; the input
/// trace need not be 1 and scales the output linearly.
pub fn teleport_density_average<R: Real>(
    rho_in: &DensityMatrix<R>,
    params: &SourceParams<R>,
    gain: GainRule<R>,
    grid: &BetaGrid<R>,
) -> Result<AverageReport<R>> {
    params.validate()?;
    let in_modes = linear_modes(Arm::In);
    if rho_in.modes() != in_modes {
        return Err(Error::ModeMismatch(format!(
            "input density matrix must live on [{}, {}]",
            in_modes[0], in_modes[1]
        )));
    }
    let trace_in = rho_in.trace();
    if !(trace_in > R::zero()) {
        return Err(Error::InvalidParameter {
            name: "input trace",
            value: trace_in.to_f64_lossy(),
            constraint: "positive",
        });
    }
    let g = gain.resolve(params);
    check_gain(g)?;
    let cutoff = rho_in.cutoff();
    let d = cutoff + 1;
    let (zeta_h, zeta_v) = pair_amplitudes(params);
    let gains = feedforward_gains(g, zeta_h, zeta_v);
    let cols: Vec<usize> = (0..d).collect();
    let (nodes_h, nodes_v) = grid_kernels_two_pol(zeta_h, zeta_v, gains, grid, d, &cols);
    let weights = node_weights(grid);
    let model_total = survival(zeta_h, cutoff) * survival(zeta_v, cutoff) * trace_in;

    // Per-polarization second moments, laid out for matrix assembly:
    // X[(a d + b), (m d + k)] = sum w u_m[a] conj(u_k[b]), plus the grid
    // integral G of the per-node Grams for the mass check.
    let dd = d * d;
    let mut x_h = Array2::from_elem((dd, dd), czero::<R>());
    let mut x_v = Array2::from_elem((dd, dd), czero::<R>());
    let mut g_h = Array2::from_elem((d, d), czero::<R>());
    let mut g_v = Array2::from_elem((d, d), czero::<R>());
    for (i, &w) in weights.iter().enumerate() {
        let cw = cre(w);
        for (x, gacc, node) in [
            (&mut x_h, &mut g_h, &nodes_h[i]),
            (&mut x_v, &mut g_v, &nodes_v[i]),
        ] {
            for m in 0..d {
                for a in 0..d {
                    let lead = cw * node.u[[a, m]];
                    for k in 0..d {
                        for b in 0..d {
                            x[[a * d + b, m * d + k]] =
                                x[[a * d + b, m * d + k]] + lead * node.u[[b, k]].conj();
                        }
                    }
                }
            }
            for m in 0..d {
                for k in 0..d {
                    gacc[[m, k]] = gacc[[m, k]] + cw * node.gram[[m, k]];
                }
            }
        }
    }

    let mat = rho_in.matrix();
    let mut grid_total = czero::<R>();
    for m in 0..d {
        for k in 0..d {
            for n in 0..d {
                for l in 0..d {
                    grid_total =
                        grid_total + mat[[m * d + n, k * d + l]] * g_h[[k, m]] * g_v[[l, n]];
                }
            }
        }
    }
    let quadrature_mass = grid_total.re / model_total;
    if quadrature_mass < rl::<R>(0.99) {
        return Err(Error::GridMass {
            captured: quadrature_mass.to_f64_lossy(),
            required: 0.99,
        });
    }

    // R'[(m d + k), (n d + l)] = rho_in[(m, n), (k, l)].
    let mut rp = Array2::from_elem((dd, dd), czero::<R>());
    for m in 0..d {
        for k in 0..d {
            for n in 0..d {
                for l in 0..d {
                    rp[[m * d + k, n * d + l]] = mat[[m * d + n, k * d + l]];
                }
            }
        }
    }

    // rho_out[(a c), (b e)] = [X_H R' X_V^T][(a b), (c e)].
    let folded = x_h.dot(&rp).dot(&x_v.t());
    let mut rho = Array2::from_elem((dd, dd), czero::<R>());
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    rho[[a * d + c, b * d + e]] = folded[[a * d + b, c * d + e]];
                }
            }
        }
    }

    let trace_out: R = (0..dd).map(|i| rho[[i, i]].re).sum();
    let deficit = rho_in.trace_deficit() + (trace_in - trace_out).max(R::zero());
    let modes = linear_modes(Arm::B);
    let rho = DensityMatrix::from_matrix(modes.to_vec(), cutoff, rho, deficit);
    Ok(AverageReport {
        rho,
        quadrature_mass,
        model_total,
    })
}

/// Weights and one-photon-block metrics of a two-mode output.
///
/// Weights are absolute (they sum to the trace); the Bloch vector and the
/// conditional fidelity renormalize the one-photon block first.
pub fn qubit_metrics<R: Real>(
    rho: &DensityMatrix<R>,
    reference: Option<&InputQubit<R>>,
) -> Result<QubitMetrics<R>> {
    if rho.modes().len() != 2 {
        return Err(Error::ModeMismatch(format!(
            "qubit metrics need a two-mode state, got {} modes",
            rho.modes().len()
        )));
    }
    let d = rho.dim();
    let mat = rho.matrix();
    let vacuum_weight = mat[[0, 0]].re;
    // Basis indices of the one-photon block: |1,0> is d, |0,1> is 1.
    let b_hh = mat[[d, d]];
    let b_vv = mat[[1, 1]];
    let cross = mat[[1, d]]; // <0,1| rho |1,0>
    let one_photon_weight = b_hh.re + b_vv.re;
    let multi_photon_weight = rho.trace() - vacuum_weight - one_photon_weight;

    let two = rl::<R>(2.0);
    let (bloch_vector, conditional_fidelity) = if one_photon_weight > R::zero() {
        let inv = R::one() / one_photon_weight;
        let bloch = [
            two * cross.re * inv,
            two * cross.im * inv,
            (b_hh.re - b_vv.re) * inv,
        ];
        let fid = reference.map(|q| {
            let c1 = q.c1();
            let c2 = q.c2();
            // <psi| block |psi> in (|1,0>, |0,1>) order.
            let f = c1.conj() * b_hh * c1
                + c1.conj() * mat[[d, 1]] * c2
                + c2.conj() * cross * c1
                + c2.conj() * b_vv * c2;
            f.re * inv
        });
        (bloch, fid)
    } else {
        ([R::zero(); 3], None)
    };

    Ok(QubitMetrics {
        vacuum_weight,
        one_photon_weight,
        multi_photon_weight,
        conditional_fidelity,
        bloch_vector,
    })
}
