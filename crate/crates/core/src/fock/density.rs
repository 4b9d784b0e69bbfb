use ndarray::{Array2, ArrayD, IxDyn};

use super::{apply_block_along_axis, FockState, ModeLabel};
use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh};
use crate::real::{czero, Real, C};

/// Mixed multimode state over the truncated photon-number basis.
///
/// The matrix is indexed by row-major multi-indices in mode order.
/// `trace_deficit` carries the truncation loss inherited from the states or
/// channels that produced it; like leakage it never decreases.
#[derive(Clone, Debug)]
pub struct DensityMatrix<R: Real> {
    pub(crate) modes: Vec<ModeLabel>,
    pub(crate) cutoff: usize,
    pub(crate) mat: Array2<C<R>>,
    pub(crate) trace_deficit: R,
}

impl<R: Real> DensityMatrix<R> {
    /// All-zero matrix, useful as an accumulator.
    pub fn zeros(modes: &[ModeLabel], cutoff: usize) -> Result<Self> {
        // Reuse the state constructor's validation.
        let probe = FockState::<R>::vacuum(modes, cutoff)?;
        let dim = probe.amps.len();
        Ok(DensityMatrix {
            modes: modes.to_vec(),
            cutoff,
            mat: Array2::from_elem((dim, dim), czero::<R>()),
            trace_deficit: R::zero(),
        })
    }

    /// Projector onto a pure state, `|psi><psi|`.
    pub fn from_pure(psi: &FockState<R>) -> Self {
        let v = psi.flattened();
        let n = v.len();
        let mut mat = Array2::from_elem((n, n), czero::<R>());
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                mat[[i, j]] = *a * b.conj();
            }
        }
        DensityMatrix {
            modes: psi.modes.clone(),
            cutoff: psi.cutoff,
            mat,
            trace_deficit: psi.leakage,
        }
    }

    pub(crate) fn from_matrix(
        modes: Vec<ModeLabel>,
        cutoff: usize,
        mat: Array2<C<R>>,
        trace_deficit: R,
    ) -> Self {
        DensityMatrix {
            modes,
            cutoff,
            mat,
            trace_deficit,
        }
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Per-mode basis dimension, `cutoff + 1`.
    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn matrix(&self) -> &Array2<C<R>> {
        &self.mat
    }

    pub fn trace_deficit(&self) -> R {
        self.trace_deficit
    }

    pub fn trace(&self) -> R {
        (0..self.mat.nrows()).map(|i| self.mat[[i, i]].re).sum()
    }

    pub fn scale(&mut self, w: R) {
        let f = crate::real::cre(w);
        self.mat.mapv_inplace(|z| z * f);
    }

    /// Adds `w * other` entrywise; modes and cutoff must match exactly.
    pub fn add_scaled(&mut self, other: &Self, w: R) -> Result<()> {
        self.check_same_layout(other)?;
        let f = crate::real::cre(w);
        self.mat.zip_mut_with(&other.mat, |a, b| *a = *a + *b * f);
        Ok(())
    }

    /// Same operator divided by its trace.
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        let mut out = self.clone();
        if t > R::zero() {
            out.scale(R::one() / t);
        }
        out
    }

    /// Returns this operator with new mode labels (pure relabeling).
    pub fn with_modes(&self, modes: &[ModeLabel]) -> Result<Self> {
        if modes.len() != self.modes.len() {
            return Err(Error::ModeMismatch(format!(
                "expected {} modes, got {}",
                self.modes.len(),
                modes.len()
            )));
        }
        let mut out = self.clone();
        out.modes = modes.to_vec();
        Ok(out)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> R {
        let n = self.mat.nrows();
        let mut max = R::zero();
        for i in 0..n {
            for j in i..n {
                let d = (self.mat[[i, j]] - self.mat[[j, i]].conj()).norm();
                if d > max {
                    max = d;
                }
            }
        }
        max
    }

    pub fn min_eigenvalue(&self) -> R {
        eigvalsh(&self.mat)
            .into_iter()
            .fold(R::infinity(), |m, v| m.min(v))
    }

    /// Eigendecomposition; eigenvector `j` is column `j` of the matrix.
    pub fn eigendecomposition(&self) -> (Vec<R>, Array2<C<R>>) {
        eigh(&self.mat)
    }

    /// Trace distance `0.5 * ||rho - sigma||_1`.
    pub fn trace_distance(&self, other: &Self) -> Result<R> {
        self.check_same_layout(other)?;
        let diff = &self.mat - &other.mat;
        let half = R::one() / crate::real::rl::<R>(2.0);
        Ok(eigvalsh(&diff).into_iter().map(|v| v.abs()).sum::<R>() * half)
    }

    /// Overlap fidelity `<psi|rho|psi> / (trace(rho) <psi|psi>)`.
    ///
    /// Both the operator and the reference state may be unnormalized; the
    /// result is the fidelity of the normalized pair.  Returns 0 for a
    /// zero-trace operator.
    pub fn fidelity(&self, psi: &FockState<R>) -> Result<R> {
        if self.cutoff != psi.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, psi.cutoff));
        }
        let aligned;
        let reference = if psi.modes == self.modes {
            psi
        } else {
            aligned = psi.permuted_to(&self.modes)?;
            &aligned
        };
        let v = reference.flattened();
        let mut num = R::zero();
        for (i, a) in v.iter().enumerate() {
            let mut row = czero::<R>();
            for (j, b) in v.iter().enumerate() {
                row = row + self.mat[[i, j]] * *b;
            }
            num = num + (a.conj() * row).re;
        }
        let denom = self.trace() * reference.norm_sqr();
        if denom <= R::zero() {
            return Ok(R::zero());
        }
        Ok((num / denom).max(R::zero()))
    }

    /// Reduced operator on `keep`, tracing out the other modes.
    pub fn partial_trace(&self, keep: &[ModeLabel]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyModes);
        }
        let m = self.modes.len();
        let d = self.dim();
        let mut keep_axes = Vec::with_capacity(keep.len());
        for label in keep {
            keep_axes.push(
                self.modes
                    .iter()
                    .position(|x| x == label)
                    .ok_or(Error::UnknownMode(*label))?,
            );
        }
        for (i, ax) in keep_axes.iter().enumerate() {
            if keep_axes[..i].contains(ax) {
                return Err(Error::DuplicateMode(keep[i]));
            }
        }
        let rest_axes: Vec<usize> = (0..m).filter(|ax| !keep_axes.contains(ax)).collect();
        let stride = |ax: usize| d.pow((m - 1 - ax) as u32);

        let offsets = |axes: &[usize]| -> Vec<usize> {
            let count = d.pow(axes.len() as u32);
            let mut offs = vec![0usize; count];
            for (flat, off) in offs.iter_mut().enumerate() {
                let mut rem = flat;
                for &ax in axes.iter().rev() {
                    let digit = rem % d;
                    rem /= d;
                    *off += digit * stride(ax);
                }
            }
            offs
        };
        let keep_offs = offsets(&keep_axes);
        let rest_offs = offsets(&rest_axes);

        let flat = self
            .mat
            .as_slice()
            .expect("density matrices are stored contiguously");
        let full = self.mat.nrows();
        let k = keep_offs.len();
        let mut out = Array2::from_elem((k, k), czero::<R>());
        for (a, &oa) in keep_offs.iter().enumerate() {
            for (b, &ob) in keep_offs.iter().enumerate() {
                let mut acc = czero::<R>();
                for &ot in &rest_offs {
                    acc = acc + flat[(oa + ot) * full + (ob + ot)];
                }
                out[[a, b]] = acc;
            }
        }
        Ok(DensityMatrix {
            modes: keep.to_vec(),
            cutoff: self.cutoff,
            mat: out,
            trace_deficit: self.trace_deficit,
        })
    }

    /// Applies a single-mode channel given by Kraus operators.
    pub fn apply_one_mode_kraus(&mut self, mode: &ModeLabel, kraus: &[Array2<C<R>>]) -> Result<()> {
        let axis = self
            .modes
            .iter()
            .position(|x| x == mode)
            .ok_or(Error::UnknownMode(*mode))?;
        let m = self.modes.len();
        let d = self.dim();
        for k in kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch(d, k.nrows()));
            }
        }
        let full = self.mat.nrows();
        let dims = vec![d; 2 * m];
        let tensor = self
            .mat
            .clone()
            .into_shape(IxDyn(&dims))
            .expect("matrix reshapes to mode tensor");
        let mut acc: Option<ArrayD<C<R>>> = None;
        for k in kraus {
            let ket = apply_block_along_axis(&tensor, k, axis);
            let kc = k.mapv(|z| z.conj());
            let term = apply_block_along_axis(&ket, &kc, m + axis);
            acc = Some(match acc {
                None => term,
                Some(mut a) => {
                    a.zip_mut_with(&term, |x, y| *x = *x + *y);
                    a
                }
            });
        }
        self.mat = acc
            .expect("at least one Kraus operator")
            .into_shape((full, full))
            .expect("tensor reshapes back to matrix");
        Ok(())
    }

    fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        if self.modes != other.modes {
            return Err(Error::ModeMismatch(format!(
                "mode lists differ: [{}] vs [{}]",
                self.modes
                    .iter()
                    .map(|m| m.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                other
                    .modes
                    .iter()
                    .map(|m| m.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        Ok(())
    }
}
