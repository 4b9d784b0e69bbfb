//! Small dense linear algebra kernels.
//!
//! Every unitary used by the Fock-space operators is the exponential of a
//! generator that is tridiagonal in a photon-number-ordered basis (ladder
//! operators couple neighbouring levels only).  Exponentials are therefore
//! evaluated exactly through a symmetric tridiagonal eigendecomposition
//! instead of a general matrix exponential; with enough padding levels the
//! restricted block agrees with the untruncated operator to machine
//! precision.

use crate::real::{cis, czero, Real, C};
use ndarray::Array2;

fn sign_of<R: Real>(a: R, b: R) -> R {
    if b >= R::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix.
///
/// `d` is the diagonal (length `n`), `e` the subdiagonal (length `n - 1`).
/// Returns the eigenvalues (unsorted) and the first `nrows` components of
/// every eigenvector as an `nrows x n` matrix whose column `j` belongs to
/// eigenvalue `j`.  QL with implicit shifts; only the tracked rows of the
/// rotation product are accumulated, which keeps the cost at
/// `O(n^2 * nrows)`.
pub fn symtridiag_eigen<R: Real>(
    mut d: Vec<R>,
    mut e: Vec<R>,
    nrows: usize,
) -> (Vec<R>, Array2<R>) {
    let n = d.len();
    assert!(n >= 1, "empty tridiagonal matrix");
    assert_eq!(e.len(), n - 1, "subdiagonal length must be n - 1");
    assert!(nrows <= n);
    // One scratch slot past the last coupling, written by the QL sweep.
    e.push(R::zero());

    let mut z = Array2::<R>::zeros((nrows, n));
    for i in 0..nrows.min(n) {
        z[[i, i]] = R::one();
    }
    if n == 1 {
        return (d, z);
    }

    let two: R = crate::real::rl(2.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= R::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 64, "tridiagonal QL did not converge");

            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(R::one());
            g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
            let mut s = R::one();
            let mut c = R::one();
            let mut p = R::zero();
            let mut underflow = false;

            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] -= p;
                    e[m] = R::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..nrows {
                    f = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * f;
                    z[[k, i]] = c * z[[k, i]] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
    (d, z)
}

/// Exponential of an anti-Hermitian tridiagonal generator, restricted.
///
/// The generator `G` has zero diagonal, `G[j+1, j] = couplings[j]` and
/// `G[j, j+1] = -conj(couplings[j])`.  Returns the `rows x cols` upper-left
/// block of `exp(G)`.  A diagonal phase similarity maps `-iG` onto a real
/// symmetric tridiagonal matrix, which is then diagonalized exactly.
pub fn tridiag_unitary_exp<R: Real>(
    couplings: &[C<R>],
    rows: usize,
    cols: usize,
) -> Array2<C<R>> {
    let p = couplings.len() + 1;
    assert!(rows <= p && cols <= p);

    // H = -iG is Hermitian with H[j+1, j] = -i * couplings[j].
    // Phases phi with phi[j+1] = phi[j] + arg(H[j+1, j]) make
    // T = Phi^H H Phi real symmetric with off-diagonal |couplings[j]|.
    let mut off = Vec::with_capacity(p - 1);
    let mut phases = Vec::with_capacity(p);
    phases.push(R::zero());
    for j in 0..p - 1 {
        let h = C::new(couplings[j].im, -couplings[j].re); // -i * c_j
        off.push(h.norm());
        let theta = if h.norm() > R::zero() {
            h.arg()
        } else {
            R::zero()
        };
        phases.push(phases[j] + theta);
    }

    let nrows = rows.max(cols);
    let (vals, z) = symtridiag_eigen(vec![R::zero(); p], off, nrows);

    // exp(G) = exp(iH) = Phi Z e^{i Lambda} Z^T Phi^H restricted.
    let mut out = Array2::from_elem((rows, cols), czero::<R>());
    let phase_j: Vec<C<R>> = vals.iter().map(|&l| cis(l)).collect();
    for m in 0..rows {
        for k in 0..cols {
            let mut acc = czero::<R>();
            for j in 0..p {
                let w = z[[m, j]] * z[[k, j]];
                acc = acc + phase_j[j] * w;
            }
            out[[m, k]] = cis(phases[m] - phases[k]) * acc;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.
pub fn eigvalsh<R: Real>(a: &Array2<C<R>>) -> Vec<R> {
    jacobi_hermitian(a, false).0
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Returns `(values, vectors)` with eigenvector `j` in column `j`, so that
/// `a = V diag(values) V^H` up to the convergence tolerance.
pub fn eigh<R: Real>(a: &Array2<C<R>>) -> (Vec<R>, Array2<C<R>>) {
    let (vals, vecs) = jacobi_hermitian(a, true);
    (vals, vecs.expect("vectors requested"))
}

fn jacobi_hermitian<R: Real>(
    a: &Array2<C<R>>,
    want_vectors: bool,
) -> (Vec<R>, Option<Array2<C<R>>>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return (Vec::new(), want_vectors.then(|| Array2::from_elem((0, 0), czero::<R>())));
    }
    let mut m = a.clone();
    let mut v = if want_vectors {
        let mut id = Array2::from_elem((n, n), czero::<R>());
        for i in 0..n {
            id[[i, i]] = crate::real::cone();
        }
        Some(id)
    } else {
        None
    };

    let mut scale = R::zero();
    for v in m.iter() {
        scale = scale + v.norm_sqr();
    }
    let scale = scale.sqrt().max(R::min_positive_value());
    let stop = scale * R::epsilon() * crate::real::rl(8.0);

    for _sweep in 0..64 {
        let mut off = R::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[[p, q]];
                let babs = b.norm();
                if babs <= scale * R::epsilon() {
                    continue;
                }
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let tau = (app - aqq) / (crate::real::rl::<R>(2.0) * babs);
                let t = if tau == R::zero() {
                    R::one()
                } else {
                    sign_of(R::one(), tau) / (tau.abs() + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = t * c;
                let beta = b.arg();
                let eib = cis(beta);
                let emib = cis(-beta);

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    let new_kp = akp * crate::real::cre(c) + akq * emib * crate::real::cre(s);
                    let new_kq = akq * crate::real::cre(c) - akp * eib * crate::real::cre(s);
                    m[[k, p]] = new_kp;
                    m[[k, q]] = new_kq;
                    m[[p, k]] = new_kp.conj();
                    m[[q, k]] = new_kq.conj();
                }
                let shift = t * babs;
                m[[p, p]] = crate::real::cre(app + shift);
                m[[q, q]] = crate::real::cre(aqq - shift);
                m[[p, q]] = czero();
                m[[q, p]] = czero();

                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[[k, p]];
                        let vkq = vm[[k, q]];
                        vm[[k, p]] = vkp * crate::real::cre(c) + vkq * emib * crate::real::cre(s);
                        vm[[k, q]] = vkq * crate::real::cre(c) - vkp * eib * crate::real::cre(s);
                    }
                }
            }
        }
    }
    ((0..n).map(|i| m[[i, i]].re).collect(), v)
}

/// Kronecker product of two dense complex matrices.
pub fn kron<R: Real>(a: &Array2<C<R>>, b: &Array2<C<R>>) -> Array2<C<R>> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::from_elem((ar * br, ac * bc), czero::<R>());
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}
