//! Analytic transfer kernel: the measurement-plus-feedforward map applied
//! directly to the input modes.
//!
//! Projecting the balanced mix of the input and arm A onto the quadrature
//! outcome `beta` collapses, for each polarization, to a one-mode kernel
//!
//! ```text
//! M(beta) = kappa * D(g beta) * zeta^n * D(-beta),
//! kappa = sqrt((1 - |zeta|^2) / pi)
//! ```
//!
//! where `zeta` is the complex pair amplitude of that polarization of the
//! source and `n` the photon-number operator.  `kappa` carries the
//! measurement normalization: `|M psi|^2` is the outcome density for that
//! polarization and integrates to one over the complex outcome plane in the
//! untruncated limit.  The two-polarization map is the tensor product of
//! the per-polarization kernels.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rayon::prelude::*;

use super::BetaGrid;
use crate::error::{Error, Result};
use crate::fock::displacement_block;
use crate::linalg::kron;
use crate::real::{cis, cre, czero, rl, Real, C};

fn pol_prefactor<R: Real>(zeta: C<R>) -> R {
    ((R::one() - zeta.norm_sqr()) / R::PI()).sqrt()
}

fn zeta_powers<R: Real>(zeta: C<R>, dim: usize) -> Vec<C<R>> {
    let mut out = Vec::with_capacity(dim);
    let mut z = crate::real::cone::<R>();
    for _ in 0..dim {
        out.push(z);
        z = z * zeta;
    }
    out
}

/// `e^{i n phi}` for `n = 0..dim`.
fn phase_ladder<R: Real>(phi: R, dim: usize) -> Vec<C<R>> {
    (0..dim).map(|n| cis(phi * rl::<R>(n as f64))).collect()
}

/// Full `dim x dim` kernel for one polarization at one outcome point.
///
/// The feedforward amplitude `g` may be complex: the applied displacement is
/// `D(g beta)`, so a phase on `g` rotates the correction in phase space.
fn point_kernel<R: Real>(zeta: C<R>, g: C<R>, beta: C<R>, dim: usize) -> Array2<C<R>> {
    let kappa = cre(pol_prefactor(zeta));
    let zp = zeta_powers(zeta, dim);
    let mut scaled = displacement_block(-beta, dim);
    for n in 0..dim {
        let w = kappa * zp[n];
        for k in 0..dim {
            scaled[[n, k]] = scaled[[n, k]] * w;
        }
    }
    let shift = g * beta;
    if shift == czero() {
        return scaled;
    }
    displacement_block(shift, dim).dot(&scaled)
}

/// Two-polarization transfer matrix at one outcome pair.
///
/// Row/column indices follow the pair convention `n_H * (cutoff + 1) + n_V`.
/// The squared norm of `T |psi>` is the joint outcome density at
/// `(beta_h, beta_v)` and matches [`super::homodyne_density`] on the
/// brute-force multimode path.
pub fn transfer_operator<R: Real>(
    q: R,
    g: R,
    beta: (C<R>, C<R>),
    cutoff: usize,
) -> Result<Array2<C<R>>> {
    if !q.is_finite() || q < R::zero() || q >= R::one() {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q.to_f64_lossy(),
            constraint: "in [0, 1)",
        });
    }
    if !g.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gain",
            value: g.to_f64_lossy(),
            constraint: "finite",
        });
    }
    if cutoff < 1 {
        return Err(Error::CutoffTooSmall(1));
    }
    let dim = cutoff + 1;
    let m_h = point_kernel(cre(q), cre(g), beta.0, dim);
    let m_v = point_kernel(cre(q), cre(g), beta.1, dim);
    Ok(kron(&m_h, &m_v))
}

/// Kernel data of one polarization at one grid node.
pub(crate) struct PolNode<R: Real> {
    /// Displaced kernel columns, `dim x cols.len()`.
    pub u: Array2<C<R>>,
    /// Pre-displacement Gram matrix `<t_m, t_k>` over the same columns.
    pub gram: Array2<C<R>>,
}

/// Radius in an argument-order- and sign-insensitive form, so mirrored grid
/// nodes produce bit-identical cache keys.
fn node_radius<R: Real>(x: R, y: R) -> R {
    (x * x + y * y).sqrt()
}

/// Per-polarization kernels on every 2D node of the outcome grid.
///
/// Nodes are row-major over (Re beta, Im beta).  Each polarization has its
/// own complex feedforward amplitude `gain`; the applied correction at a
/// node is `D(gain * beta)`.  A displacement block at complex argument is a
/// diagonal-phase conjugation of the block at the real argument `|beta|`,
/// so blocks are computed once per distinct node radius; both polarizations
/// and the feedforward blocks share the cache.
pub(crate) fn grid_kernels_two_pol<R: Real>(
    zeta_h: C<R>,
    zeta_v: C<R>,
    gains: (C<R>, C<R>),
    grid: &BetaGrid<R>,
    dim: usize,
    cols: &[usize],
) -> (Vec<PolNode<R>>, Vec<PolNode<R>>) {
    let axis = grid.axis();
    let p = axis.len();
    let norm_h = gains.0.norm();
    let norm_v = gains.1.norm();

    let mut radii: BTreeMap<u64, R> = BTreeMap::new();
    for ix in 0..p {
        for ip in 0..p {
            let s = node_radius(axis[ix], axis[ip]);
            radii.insert(s.to_f64_lossy().to_bits(), s);
            for shifted in [norm_h * s, norm_v * s] {
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

    let kappa_h = cre(pol_prefactor(zeta_h));
    let kappa_v = cre(pol_prefactor(zeta_v));
    let zp_h = zeta_powers(zeta_h, dim);
    let zp_v = zeta_powers(zeta_v, dim);

    let nodes: Vec<(PolNode<R>, PolNode<R>)> = (0..p * p)
        .into_par_iter()
        .map(|node| {
            let x = axis[node / p];
            let y = axis[node % p];
            let s = node_radius(x, y);
            let ds = &blocks[&s.to_f64_lossy().to_bits()];
            let theta = y.atan2(x);
            let fwd = phase_ladder(theta, dim);

            let make = |kappa: C<R>, zp: &[C<R>], gain: C<R>, gain_norm: R| {
                // t_k[n] = kappa zeta^n <n|D(-beta)|k> with
                // <n|D(-beta)|k> = e^{i(n-k)theta} conj(Ds[k, n]).
                let mut t = Array2::from_elem((dim, cols.len()), czero::<R>());
                for (c, &k) in cols.iter().enumerate() {
                    let back_k = fwd[k].conj();
                    for n in 0..dim {
                        t[[n, c]] = kappa * zp[n] * ds[[k, n]].conj() * fwd[n] * back_k;
                    }
                }
                let mut gram = Array2::from_elem((cols.len(), cols.len()), czero::<R>());
                for m in 0..cols.len() {
                    for k in 0..cols.len() {
                        let mut acc = czero::<R>();
                        for n in 0..dim {
                            acc = acc + t[[n, m]].conj() * t[[n, k]];
                        }
                        gram[[m, k]] = acc;
                    }
                }
                // u = D(gain beta) t through the same sandwich:
                // D(gain beta)[m, n] = e^{i(m-n)theta_g} Dg[m, n].
                let shift = gain * C::new(x, y);
                let theta_g = shift.im.atan2(shift.re);
                let fwd_g = phase_ladder(theta_g, dim);
                let dg = &blocks[&(gain_norm * s).to_f64_lossy().to_bits()];
                let mut tv = t.clone();
                for n in 0..dim {
                    let back_n = fwd_g[n].conj();
                    for c in 0..cols.len() {
                        tv[[n, c]] = tv[[n, c]] * back_n;
                    }
                }
                let mut u = dg.dot(&tv);
                for m in 0..dim {
                    for c in 0..cols.len() {
                        u[[m, c]] = u[[m, c]] * fwd_g[m];
                    }
                }
                PolNode { u, gram }
            };

            (
                make(kappa_h, &zp_h, gains.0, norm_h),
                make(kappa_v, &zp_v, gains.1, norm_v),
            )
        })
        .collect();

    let mut h = Vec::with_capacity(p * p);
    let mut v = Vec::with_capacity(p * p);
    for (nh, nv) in nodes {
        h.push(nh);
        v.push(nv);
    }
    (h, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_kernels_match_point_kernel() {
        let dim = 9usize;
        let zeta_h = C::new(0.42, 0.0);
        let zeta_v = C::new(-0.3, 0.22);
        let grid = BetaGrid::new(1.5, 4).unwrap();
        let axis = grid.axis();
        let gain_pairs = [
            (cre(1.0), cre(1.0)),
            (cre(0.61), cre(0.61) * cis(0.8)),
            (cre(-0.25), C::new(0.3, -0.4)),
            (czero(), cre(0.7)),
        ];
        for (gh, gv) in gain_pairs {
            let (nh, nv) = grid_kernels_two_pol(zeta_h, zeta_v, (gh, gv), &grid, dim, &[0, 1]);
            for node in [0usize, 5, 10, 15] {
                let beta = C::new(axis[node / 4], axis[node % 4]);
                for (pol, zeta, g) in [(&nh[node], zeta_h, gh), (&nv[node], zeta_v, gv)] {
                    let full = point_kernel(zeta, g, beta, dim);
                    for col in 0..2 {
                        for n in 0..dim {
                            let diff = (pol.u[[n, col]] - full[[n, col]]).norm();
                            assert!(diff < 1e-12, "g={g} node={node} diff={diff}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phased_pair_amplitude_rotates_kernel() {
        // With the feedforward phase locked to the pair amplitude phase,
        // M(zeta e^{i phi}, g e^{i phi}) = e^{i phi n} M(zeta, g) exactly.
        let dim = 8usize;
        let q = 0.45f64;
        let phi = 0.9f64;
        let beta = C::new(0.7, -0.3);
        for &g in &[1.0f64, q, 0.6] {
            let plain = point_kernel(cre(q), cre(g), beta, dim);
            let phased = point_kernel(cre(q) * cis(phi), cre(g) * cis(phi), beta, dim);
            for m in 0..dim {
                for n in 0..dim {
                    let want = cis(phi * m as f64) * plain[[m, n]];
                    let diff = (phased[[m, n]] - want).norm();
                    assert!(diff < 1e-12, "g={g} m={m} n={n} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn gram_matches_pre_displacement_columns() {
        let dim = 7usize;
        let zeta = C::new(0.5, 0.1);
        let grid = BetaGrid::new(1.0, 3).unwrap();
        let (nh, _) = grid_kernels_two_pol(zeta, zeta, (cre(1.0), cre(1.0)), &grid, dim, &[0, 1]);
        let axis = grid.axis();
        for node in 0..9 {
            let beta = C::new(axis[node / 3], axis[node % 3]);
            // g = 0 keeps the kernel undisplaced, exposing t directly.
            let t = point_kernel(zeta, czero(), beta, dim);
            for m in 0..2 {
                for k in 0..2 {
                    let mut want = czero::<f64>();
                    for n in 0..dim {
                        want = want + t[[n, m]].conj() * t[[n, k]];
                    }
                    let diff = (nh[node].gram[[m, k]] - want).norm();
                    assert!(diff < 1e-12, "node={node} diff={diff}");
                }
            }
        }
    }
}
