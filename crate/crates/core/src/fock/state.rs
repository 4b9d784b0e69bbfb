use ndarray::{Array2, ArrayD, IxDyn};

use super::{DensityMatrix, ModeLabel};
use crate::error::{Error, Result};
use crate::real::{czero, Real, C};

/// Pure multimode state in the truncated photon-number basis.
///
/// Amplitudes form a complex tensor with one axis per mode, each of length
/// `cutoff + 1`, in the order given by `modes`.  `leakage` accumulates the
/// squared norm lost to the cutoff across all operations applied so far;
/// it never decreases.
#[derive(Clone, Debug)]
pub struct FockState<R: Real> {
    pub(crate) modes: Vec<ModeLabel>,
    pub(crate) cutoff: usize,
    pub(crate) amps: ArrayD<C<R>>,
    pub(crate) leakage: R,
}

fn check_modes(modes: &[ModeLabel]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::EmptyModes);
    }
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::DuplicateMode(*m));
        }
    }
    Ok(())
}

impl<R: Real> FockState<R> {
    /// Vacuum on the given modes.
    pub fn vacuum(modes: &[ModeLabel], cutoff: usize) -> Result<Self> {
        check_modes(modes)?;
        if cutoff < 1 {
            return Err(Error::CutoffTooSmall(1));
        }
        let dims: Vec<usize> = vec![cutoff + 1; modes.len()];
        let mut amps = ArrayD::from_elem(IxDyn(&dims), czero::<R>());
        amps[IxDyn(&vec![0; modes.len()])] = crate::real::cone();
        Ok(FockState {
            modes: modes.to_vec(),
            cutoff,
            amps,
            leakage: R::zero(),
        })
    }

    /// Photon-number basis state with the given occupation per mode.
    pub fn basis_state(modes: &[ModeLabel], cutoff: usize, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != modes.len() {
            return Err(Error::DimensionMismatch(modes.len(), occupation.len()));
        }
        if let Some(&max) = occupation.iter().max() {
            if max > cutoff {
                return Err(Error::CutoffTooSmall(max));
            }
        }
        let mut state = Self::vacuum(modes, cutoff)?;
        state.amps[IxDyn(&vec![0; modes.len()])] = czero();
        state.amps[IxDyn(occupation)] = crate::real::cone();
        Ok(state)
    }

    pub(crate) fn from_parts(
        modes: Vec<ModeLabel>,
        cutoff: usize,
        amps: ArrayD<C<R>>,
        leakage: R,
    ) -> Self {
        FockState {
            modes,
            cutoff,
            amps,
            leakage,
        }
    }

    /// Build a state from explicit amplitudes in row-major occupation order
    /// (the last mode's occupation varies fastest). The slice length must be
    /// `(cutoff + 1)^modes.len()`. No normalization is applied.
    pub fn from_amplitudes(modes: &[ModeLabel], cutoff: usize, flat: &[C<R>]) -> Result<Self> {
        let state = Self::vacuum(modes, cutoff)?;
        let want = state.amps.len();
        if flat.len() != want {
            return Err(Error::DimensionMismatch(flat.len(), want));
        }
        let shape = vec![cutoff + 1; modes.len()];
        let amps = ArrayD::from_shape_vec(IxDyn(&shape), flat.to_vec())
            .expect("length checked above");
        Ok(FockState {
            modes: modes.to_vec(),
            cutoff,
            amps,
            leakage: R::zero(),
        })
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

    pub fn amplitudes(&self) -> &ArrayD<C<R>> {
        &self.amps
    }

    pub(crate) fn into_amplitudes(self) -> ArrayD<C<R>> {
        self.amps
    }

    pub fn leakage(&self) -> R {
        self.leakage
    }

    pub fn norm_sqr(&self) -> R {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Axis index of a mode within the amplitude tensor.
    pub fn mode_axis(&self, mode: &ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .ok_or(Error::UnknownMode(*mode))
    }

    pub fn contains_mode(&self, mode: &ModeLabel) -> bool {
        self.modes.contains(mode)
    }

    /// Amplitude of a single basis state.
    pub fn amplitude(&self, occupation: &[usize]) -> C<R> {
        self.amps[IxDyn(occupation)]
    }

    pub(crate) fn set_amplitude(&mut self, occupation: &[usize], value: C<R>) {
        self.amps[IxDyn(occupation)] = value;
    }

    pub fn scale(&mut self, factor: C<R>) {
        self.amps.mapv_inplace(|z| z * factor);
    }

    /// Tensor product; mode sets must be disjoint and cutoffs equal.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        for m in &other.modes {
            if self.modes.contains(m) {
                return Err(Error::DuplicateMode(*m));
            }
        }
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        let a = self.amps.as_standard_layout();
        let b = other.amps.as_standard_layout();
        let af = a.as_slice().expect("standard layout");
        let bf = b.as_slice().expect("standard layout");
        let mut flat = Vec::with_capacity(af.len() * bf.len());
        for &x in af {
            for &y in bf {
                flat.push(x * y);
            }
        }
        let mut dims: Vec<usize> = self.amps.shape().to_vec();
        dims.extend_from_slice(other.amps.shape());
        let amps = ArrayD::from_shape_vec(IxDyn(&dims), flat).expect("shape/product match");
        Ok(FockState {
            modes,
            cutoff: self.cutoff,
            amps,
            leakage: self.leakage + other.leakage,
        })
    }

    /// Same state with the mode axes reordered to the given order.
    pub fn permuted_to(&self, modes: &[ModeLabel]) -> Result<Self> {
        if modes.len() != self.modes.len() {
            return Err(Error::ModeMismatch(format!(
                "expected {} modes, got {}",
                self.modes.len(),
                modes.len()
            )));
        }
        let mut perm = Vec::with_capacity(modes.len());
        for m in modes {
            perm.push(self.mode_axis(m)?);
        }
        let amps = self
            .amps
            .view()
            .permuted_axes(IxDyn(&perm))
            .as_standard_layout()
            .into_owned();
        Ok(FockState {
            modes: modes.to_vec(),
            cutoff: self.cutoff,
            amps,
            leakage: self.leakage,
        })
    }

    /// Inner product `<self|other>`; mode sets must agree (order may differ).
    pub fn overlap(&self, other: &Self) -> Result<C<R>> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch(self.cutoff, other.cutoff));
        }
        let aligned;
        let rhs = if self.modes == other.modes {
            other
        } else {
            aligned = other.permuted_to(&self.modes)?;
            &aligned
        };
        let mut acc = czero::<R>();
        for (a, b) in self.amps.iter().zip(rhs.amps.iter()) {
            acc = acc + a.conj() * *b;
        }
        Ok(acc)
    }

    /// Pad (or crop) every mode axis to a new cutoff.
    ///
    /// Cropping adds the removed squared norm to `leakage`.
    pub fn embed(&self, new_cutoff: usize) -> Self {
        if new_cutoff == self.cutoff {
            return self.clone();
        }
        let m = self.modes.len();
        let keep = self.dim().min(new_cutoff + 1);
        let dims = vec![new_cutoff + 1; m];
        let mut amps = ArrayD::from_elem(IxDyn(&dims), czero::<R>());
        let slices: Vec<ndarray::SliceInfoElem> = (0..m)
            .map(|_| ndarray::SliceInfoElem::Slice {
                start: 0,
                end: Some(keep as isize),
                step: 1,
            })
            .collect();
        amps.slice_mut(slices.as_slice())
            .assign(&self.amps.slice(slices.as_slice()));
        let mut leakage = self.leakage;
        if new_cutoff < self.cutoff {
            let before = self.norm_sqr();
            let after: R = amps.iter().map(|z| z.norm_sqr()).sum();
            let lost = before - after;
            if lost > R::zero() {
                leakage += lost;
            }
        }
        FockState {
            modes: self.modes.clone(),
            cutoff: new_cutoff,
            amps,
            leakage,
        }
    }

    /// Highest occupied photon-number level across the given modes.
    pub fn max_occupied_level(&self, modes: &[ModeLabel]) -> Result<usize> {
        let mut axes = Vec::with_capacity(modes.len());
        for m in modes {
            axes.push(self.mode_axis(m)?);
        }
        let mut max = 0usize;
        for (idx, z) in self.amps.indexed_iter() {
            if z.norm_sqr() > R::zero() {
                for &ax in &axes {
                    max = max.max(idx[ax]);
                }
            }
        }
        Ok(max)
    }

    /// Applies a square one-mode matrix; records any norm loss as leakage.
    pub(crate) fn apply_one_mode_block(
        &mut self,
        mode: &ModeLabel,
        block: &Array2<C<R>>,
    ) -> Result<()> {
        let axis = self.mode_axis(mode)?;
        if block.nrows() != self.dim() || block.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), block.nrows()));
        }
        let before = self.norm_sqr();
        self.amps = apply_block_along_axis(&self.amps, block, axis);
        self.record_loss(before);
        Ok(())
    }

    /// Applies a matrix on the joint space of two modes.
    ///
    /// The pair index convention is `n_first * dim + n_second` where `first`
    /// and `second` are the argument order.
    pub(crate) fn apply_two_mode_block(
        &mut self,
        mode_a: &ModeLabel,
        mode_b: &ModeLabel,
        block: &Array2<C<R>>,
    ) -> Result<()> {
        if mode_a == mode_b {
            return Err(Error::SameMode(*mode_a));
        }
        let ax_a = self.mode_axis(mode_a)?;
        let ax_b = self.mode_axis(mode_b)?;
        let d = self.dim();
        if block.nrows() != d * d || block.ncols() != d * d {
            return Err(Error::DimensionMismatch(d * d, block.nrows()));
        }
        let before = self.norm_sqr();

        let ndim = self.amps.ndim();
        let mut perm = vec![ax_a, ax_b];
        perm.extend((0..ndim).filter(|&x| x != ax_a && x != ax_b));
        let rest: usize = self.amps.len() / (d * d);
        let fronted = self.amps.view().permuted_axes(IxDyn(&perm));
        let mat = fronted
            .as_standard_layout()
            .into_owned()
            .into_shape((d * d, rest))
            .expect("contiguous reshape");
        let out2 = block.dot(&mat);
        let mut front_shape = vec![d, d];
        front_shape.extend(perm[2..].iter().map(|&ax| self.amps.shape()[ax]));
        let fronted_nd = out2
            .into_shape(IxDyn(&front_shape))
            .expect("shape preserved");
        let mut inv = vec![0usize; ndim];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        self.amps = fronted_nd
            .permuted_axes(IxDyn(&inv))
            .as_standard_layout()
            .into_owned();
        self.record_loss(before);
        Ok(())
    }

    /// Contracts a bra vector against one mode, removing that mode.
    ///
    /// `bra[n]` is the coefficient of `<n|` (already conjugated).  The
    /// contraction is a projection, so the norm change is conditioning,
    /// not truncation loss; leakage carries over unchanged.
    pub(crate) fn contract_bra(&self, mode: &ModeLabel, bra: &[C<R>]) -> Result<Self> {
        let axis = self.mode_axis(mode)?;
        if bra.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), bra.len()));
        }
        let amps = contract_bra_along_axis(&self.amps, bra, axis);
        let mut modes = self.modes.clone();
        modes.remove(axis);
        Ok(FockState {
            modes,
            cutoff: self.cutoff,
            amps,
            leakage: self.leakage,
        })
    }

    /// Reduced density matrix on `keep`, tracing out the other modes.
    pub fn partial_trace(&self, keep: &[ModeLabel]) -> Result<DensityMatrix<R>> {
        if keep.is_empty() {
            return Err(Error::EmptyModes);
        }
        check_modes(keep)?;
        let mut keep_axes = Vec::with_capacity(keep.len());
        for m in keep {
            keep_axes.push(self.mode_axis(m)?);
        }
        let ndim = self.amps.ndim();
        let mut perm = keep_axes.clone();
        perm.extend((0..ndim).filter(|ax| !keep_axes.contains(ax)));
        let d = self.dim();
        let k: usize = d.pow(keep.len() as u32);
        let rest = self.amps.len() / k;
        let fronted = self.amps.view().permuted_axes(IxDyn(&perm));
        let psi = fronted
            .as_standard_layout()
            .into_owned()
            .into_shape((k, rest))
            .expect("contiguous reshape");
        let psi_conj_t = psi.mapv(|z| z.conj()).reversed_axes();
        let rho = psi.dot(&psi_conj_t);
        Ok(DensityMatrix::from_matrix(
            keep.to_vec(),
            self.cutoff,
            rho,
            self.leakage,
        ))
    }

    /// Flattened amplitude vector in row-major mode order.
    pub fn flattened(&self) -> Vec<C<R>> {
        self.amps
            .as_standard_layout()
            .as_slice()
            .expect("standard layout")
            .to_vec()
    }

    fn record_loss(&mut self, norm_before: R) {
        let lost = norm_before - self.norm_sqr();
        if lost > R::zero() {
            self.leakage += lost;
        }
    }
}

/// Applies `block` (shape `d_out x d_in`) along one tensor axis.
pub(crate) fn apply_block_along_axis<R: Real>(
    amps: &ArrayD<C<R>>,
    block: &Array2<C<R>>,
    axis: usize,
) -> ArrayD<C<R>> {
    let ndim = amps.ndim();
    let d_in = amps.shape()[axis];
    assert_eq!(block.ncols(), d_in, "block width must match axis length");
    let d_out = block.nrows();
    let mut perm = vec![axis];
    perm.extend((0..ndim).filter(|&a| a != axis));
    let rest: usize = amps.len() / d_in;
    let fronted = amps.view().permuted_axes(IxDyn(&perm));
    let mat: Array2<C<R>> = fronted
        .as_standard_layout()
        .into_owned()
        .into_shape((d_in, rest))
        .expect("contiguous reshape");
    let out2 = block.dot(&mat);
    let mut front_shape = vec![d_out];
    front_shape.extend(perm[1..].iter().map(|&ax| amps.shape()[ax]));
    let fronted_nd = out2.into_shape(IxDyn(&front_shape)).expect("shape match");
    let mut inv = vec![0usize; ndim];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    fronted_nd
        .permuted_axes(IxDyn(&inv))
        .as_standard_layout()
        .into_owned()
}

/// Contracts `bra` against one axis, removing it.
pub(crate) fn contract_bra_along_axis<R: Real>(
    amps: &ArrayD<C<R>>,
    bra: &[C<R>],
    axis: usize,
) -> ArrayD<C<R>> {
    let ndim = amps.ndim();
    let d = amps.shape()[axis];
    assert_eq!(bra.len(), d);
    let mut perm = vec![axis];
    perm.extend((0..ndim).filter(|&a| a != axis));
    let rest: usize = amps.len() / d;
    let fronted = amps.view().permuted_axes(IxDyn(&perm));
    let mat: Array2<C<R>> = fronted
        .as_standard_layout()
        .into_owned()
        .into_shape((d, rest))
        .expect("contiguous reshape");
    let mut out = vec![czero::<R>(); rest];
    for n in 0..d {
        let w = bra[n];
        if w == czero() {
            continue;
        }
        let row = mat.row(n);
        for (o, v) in out.iter_mut().zip(row.iter()) {
            *o = *o + w * *v;
        }
    }
    // Surviving axes in `perm[1..]` keep their original relative order, so a
    // plain reshape restores the layout.
    let rest_shape: Vec<usize> = perm[1..].iter().map(|&ax| amps.shape()[ax]).collect();
    ArrayD::from_shape_vec(IxDyn(&rest_shape), out).expect("shape match")
}
