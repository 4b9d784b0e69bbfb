//! Quadrature projection of the mixed input/A arms and outcome sampling.
//!
//! After the balanced mix, the measurement reads the position quadrature of
//! the (in, s) output port and the momentum quadrature of the (A, s) port
//! for each polarization s, so a projection contracts four quadrature bras.
//! With `x = (a + a+)/sqrt(2)` (vacuum variance 1/2) the position
//! eigenstate coefficients are the harmonic-oscillator wavefunctions
//! `psi_n(x)` and the momentum ones pick up an extra `i^n`; both carry the
//! measure normalization that makes the outcome density integrate to one
//! over the four real coordinates.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::{BetaGrid, HomodyneRecord};
use crate::error::{Error, Result};
use crate::fock::{contract_bra_along_axis, linear_modes, Arm, FockState, ModeLabel};
use crate::real::{cre, czero, rl, Real, C};

/// Harmonic-oscillator position wavefunctions `psi_0(x) .. psi_n_max(x)`.
///
/// `psi_0(x) = pi^{-1/4} exp(-x^2/2)` and the stable upward recurrence
/// `psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1}`.
pub fn hermite_psi<R: Real>(n_max: usize, x: R) -> Vec<R> {
    let mut out = Vec::with_capacity(n_max + 1);
    let quarter = rl::<R>(-0.25);
    out.push(R::PI().powf(quarter) * (-x * x / rl::<R>(2.0)).exp());
    if n_max >= 1 {
        out.push(rl::<R>(2.0).sqrt() * x * out[0]);
    }
    for n in 1..n_max {
        let np1 = rl::<R>((n + 1) as f64);
        let next = x * (rl::<R>(2.0) / np1).sqrt() * out[n]
            - (rl::<R>(n as f64) / np1).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Coefficients of the position bra `<x|` against the number basis.
fn x_bra<R: Real>(dim: usize, x: R) -> Vec<C<R>> {
    hermite_psi(dim - 1, x).into_iter().map(cre).collect()
}

/// Coefficients of the momentum bra `<p|`: `<p|n> = (-i)^n psi_n(p)`.
fn p_bra<R: Real>(dim: usize, p: R) -> Vec<C<R>> {
    hermite_psi(dim - 1, p)
        .into_iter()
        .enumerate()
        .map(|(n, v)| {
            let w = match n % 4 {
                0 => C::new(R::one(), R::zero()),
                1 => C::new(R::zero(), -R::one()),
                2 => C::new(-R::one(), R::zero()),
                _ => C::new(R::zero(), R::one()),
            };
            w * cre(v)
        })
        .collect()
}

fn measured_modes() -> [ModeLabel; 4] {
    let [in_h, in_v] = linear_modes(Arm::In);
    let [a_h, a_v] = linear_modes(Arm::A);
    [in_h, a_h, in_v, a_v]
}

/// Tensors the input arm with the source and mixes (in, s) with (A, s) on a
/// balanced beam splitter for each polarization.
///
/// The cutoff is raised by the input's highest occupied level first, so the
/// mixing itself is exactly unitary on the occupied total-photon blocks and
/// adds no truncation leakage.
pub fn mix_at_half_bs<R: Real>(
    input: &FockState<R>,
    source: &FockState<R>,
) -> Result<FockState<R>> {
    let [in_h, in_v] = linear_modes(Arm::In);
    let [a_h, a_v] = linear_modes(Arm::A);
    for m in [in_h, in_v] {
        if !input.contains_mode(&m) {
            return Err(Error::UnknownMode(m));
        }
    }
    for m in [a_h, a_v] {
        if !source.contains_mode(&m) {
            return Err(Error::UnknownMode(m));
        }
    }
    let raise = input.max_occupied_level(&[in_h, in_v])?;
    let mut joint = input.tensor(source)?;
    if raise > 0 {
        joint = joint.embed(joint.cutoff() + raise);
    }
    let half = rl::<R>(0.5);
    let phase = -R::FRAC_PI_2();
    joint.apply_beam_splitter(&in_h, &a_h, half, phase)?;
    joint.apply_beam_splitter(&in_v, &a_v, half, phase)?;
    Ok(joint)
}

fn contract_outcome<R: Real>(
    joint: &FockState<R>,
    beta_h: C<R>,
    beta_v: C<R>,
) -> Result<FockState<R>> {
    let [in_h, a_h, in_v, a_v] = measured_modes();
    for m in [in_h, a_h, in_v, a_v] {
        joint.mode_axis(&m)?;
    }
    let d = joint.dim();
    let state = joint.contract_bra(&in_h, &x_bra(d, beta_h.re))?;
    let state = state.contract_bra(&a_h, &p_bra(d, beta_h.im))?;
    let state = state.contract_bra(&in_v, &x_bra(d, beta_v.re))?;
    state.contract_bra(&a_v, &p_bra(d, beta_v.im))
}

/// Joint outcome density at one point, `P(beta) = |<beta| joint>|^2`.
///
/// The projection reads `x` on the (in, s) ports and `p` on the (A, s)
/// ports with `beta_s = x_s + i p_s`; remaining modes are kept and summed
/// over in the squared norm.  Integrating over all four real coordinates
/// gives the squared norm of the joint state.
pub fn homodyne_density<R: Real>(joint: &FockState<R>, beta_h: C<R>, beta_v: C<R>) -> Result<R> {
    Ok(contract_outcome(joint, beta_h, beta_v)?.norm_sqr())
}

/// Projects onto one measurement outcome and applies the feedforward
/// displacement `D(gain * beta_s)` on the matching arm-B mode.
///
/// The returned state is unnormalized; its squared norm before the
/// displacement equals the outcome density (the displacement can only lose
/// norm to the cutoff, which is recorded as leakage).
pub fn project_and_displace<R: Real>(
    joint: &FockState<R>,
    beta_h: C<R>,
    beta_v: C<R>,
    gain: R,
) -> Result<FockState<R>> {
    let [b_h, b_v] = linear_modes(Arm::B);
    for m in [b_h, b_v] {
        joint.mode_axis(&m)?;
    }
    let mut state = contract_outcome(joint, beta_h, beta_v)?;
    let g = cre(gain);
    state.apply_displacement(&b_h, g * beta_h)?;
    state.apply_displacement(&b_v, g * beta_v)?;
    Ok(state)
}

/// Discretized outcome density over a [`BetaGrid`] with an inverse-CDF
/// sampler, reusable across draws.
pub struct HomodyneSampler<R: Real> {
    axis: Vec<R>,
    density: Vec<R>,
    cdf: Vec<R>,
    total: R,
    norm_sqr: R,
    points: usize,
}

impl<R: Real> HomodyneSampler<R> {
    /// Evaluates the outcome density on every grid node.
    ///
    /// Nodes are laid out row-major as (Re beta_H, Im beta_H, Re beta_V,
    /// Im beta_V), the same order the coordinates appear in the record.
    pub fn new(joint: &FockState<R>, grid: &BetaGrid<R>) -> Result<Self> {
        let [in_h, a_h, in_v, a_v] = measured_modes();
        let mut order = vec![in_h, a_h, in_v, a_v];
        for m in joint.modes() {
            if !order.contains(m) {
                order.push(*m);
            }
        }
        let joint = joint.permuted_to(&order)?;
        let d = joint.dim();
        let p = grid.points_per_axis();
        let axis = grid.axis();

        // Bra coefficients for every node of one axis, as P x d blocks.
        let mut x_mat = Array2::from_elem((p, d), czero::<R>());
        let mut p_mat = Array2::from_elem((p, d), czero::<R>());
        for (i, &v) in axis.iter().enumerate() {
            for (n, z) in x_bra(d, v).into_iter().enumerate() {
                x_mat[[i, n]] = z;
            }
            for (n, z) in p_bra(d, v).into_iter().enumerate() {
                p_mat[[i, n]] = z;
            }
        }

        let x_rows: Vec<Vec<C<R>>> = (0..p)
            .map(|i| x_mat.row(i).to_vec())
            .collect();
        let p_rows: Vec<Vec<C<R>>> = (0..p)
            .map(|i| p_mat.row(i).to_vec())
            .collect();

        // One slice of outcomes per Re(beta_H) node: contract the H-arm
        // bras pointwise, then sweep both V-arm axes as matrix products.
        let slices: Vec<Vec<R>> = (0..p)
            .into_par_iter()
            .map(|iu| {
                let t1 = contract_bra_along_axis(joint.amplitudes(), &x_rows[iu], 0);
                let mut out = Vec::with_capacity(p * p * p);
                for ip in 0..p {
                    let t2 = contract_bra_along_axis(&t1, &p_rows[ip], 0);
                    let t3 = crate::fock::apply_block_along_axis(&t2, &x_mat, 0);
                    let t4 = crate::fock::apply_block_along_axis(&t3, &p_mat, 1);
                    let rest: usize = t4.len() / (p * p);
                    let flat = t4.as_standard_layout();
                    let flat = flat.as_slice().expect("standard layout");
                    for node in 0..p * p {
                        let row = &flat[node * rest..(node + 1) * rest];
                        out.push(row.iter().map(|z| z.norm_sqr()).sum());
                    }
                }
                out
            })
            .collect();

        let mut density = Vec::with_capacity(p * p * p * p);
        for s in slices {
            density.extend_from_slice(&s);
        }

        let weights = grid.axis_weights();
        let mut cdf = Vec::with_capacity(density.len());
        let mut total = R::zero();
        let mut i = 0usize;
        for wu in &weights {
            for wp in &weights {
                for wv in &weights {
                    for wq in &weights {
                        total += *wu * *wp * *wv * *wq * density[i];
                        cdf.push(total);
                        i += 1;
                    }
                }
            }
        }

        Ok(HomodyneSampler {
            axis,
            density,
            cdf,
            total,
            norm_sqr: joint.norm_sqr(),
            points: p,
        })
    }

    /// Quadrature mass captured by the grid, relative to the squared norm
    /// of the joint state (the exact integral of the density).
    pub fn grid_mass(&self) -> R {
        if self.norm_sqr > R::zero() {
            self.total / self.norm_sqr
        } else {
            R::zero()
        }
    }

    /// Total quadrature-weighted mass on the grid.
    pub fn total(&self) -> R {
        self.total
    }

    pub fn axis(&self) -> &[R] {
        &self.axis
    }

    /// Raw density at a node, indexed (Re beta_H, Im beta_H, Re beta_V, Im beta_V).
    pub fn density_at(&self, idx: [usize; 4]) -> R {
        let p = self.points;
        self.density[((idx[0] * p + idx[1]) * p + idx[2]) * p + idx[3]]
    }

    /// Draws one outcome by inverse CDF over the flattened grid.
    ///
    /// Exact boundary hits resolve to the lowest flattened index, so a draw
    /// is a pure function of the seed.
    pub fn draw(&self, seed: u64) -> HomodyneRecord<R> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let u: f64 = rng.gen();
        self.pick(rl::<R>(u) * self.total)
    }

    pub(crate) fn pick(&self, target: R) -> HomodyneRecord<R> {
        let k = self.cdf.partition_point(|&c| c < target);
        let k = k.min(self.cdf.len() - 1);
        let p = self.points;
        let iq = k % p;
        let iv = (k / p) % p;
        let ip = (k / (p * p)) % p;
        let iu = k / (p * p * p);
        HomodyneRecord {
            beta_h: C::new(self.axis[iu], self.axis[ip]),
            beta_v: C::new(self.axis[iv], self.axis[iq]),
            density: self.density[k],
        }
    }
}

/// Draws one homodyne outcome from the discretized density.
///
/// Guidance: `half_width >= 3 + sqrt(cutoff)` keeps the captured mass near
/// one for states built at that cutoff.
pub fn sample_beta<R: Real>(
    joint: &FockState<R>,
    grid: &BetaGrid<R>,
    seed: u64,
) -> Result<HomodyneRecord<R>> {
    let sampler = HomodyneSampler::new(joint, grid)?;
    let captured = sampler.grid_mass();
    if captured < rl::<R>(0.99) {
        return Err(Error::GridMass {
            captured: captured.to_f64_lossy(),
            required: 0.99,
        });
    }
    Ok(sampler.draw(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_psi_matches_closed_forms() {
        let x = 0.7f64;
        let psi = hermite_psi(3, x);
        let g = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        assert!((psi[0] - g).abs() < 1e-15);
        assert!((psi[1] - 2.0f64.sqrt() * x * g).abs() < 1e-15);
        // psi_2 = (2 x^2 - 1) / sqrt(2) * psi_0
        assert!((psi[2] - (2.0 * x * x - 1.0) / 2.0f64.sqrt() * g).abs() < 1e-14);
    }

    #[test]
    fn hermite_psi_is_orthonormal_under_quadrature() {
        // Riemann sum of psi_m psi_n over a wide fine grid.
        let n = 6usize;
        let h = 0.01f64;
        let mut gram = vec![vec![0.0f64; n + 1]; n + 1];
        let steps = 4001;
        for k in 0..steps {
            let x = (k as f64 - (steps - 1) as f64 / 2.0) * h;
            let psi = hermite_psi(n, x);
            for a in 0..=n {
                for b in 0..=n {
                    gram[a][b] += psi[a] * psi[b] * h;
                }
            }
        }
        for a in 0..=n {
            for b in 0..=n {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (gram[a][b] - want).abs() < 1e-9,
                    "gram[{a}][{b}] = {}",
                    gram[a][b]
                );
            }
        }
    }
}
