use cvteleport::fock::{linear_modes, DensityMatrix, FockState, ModeLabel};
use cvteleport::{Arm, Polarization};
use num_complex::Complex64;

type State = FockState<f64>;

const IN_H: ModeLabel = ModeLabel::new(Arm::In, Polarization::H);
const IN_V: ModeLabel = ModeLabel::new(Arm::In, Polarization::V);
const A_H: ModeLabel = ModeLabel::new(Arm::A, Polarization::H);
const B_H: ModeLabel = ModeLabel::new(Arm::B, Polarization::H);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn vacuum_examples() {
    let s = State::vacuum(&[IN_H], 3).unwrap();
    assert_eq!(s.amplitudes().len(), 4);
    assert_eq!(s.amplitude(&[0]), c(1.0, 0.0));
    for n in 1..4 {
        assert_eq!(s.amplitude(&[n]), c(0.0, 0.0));
    }

    let s2 = State::vacuum(&linear_modes(Arm::In), 2).unwrap();
    assert!((s2.norm_sqr() - 1.0).abs() < 1e-15);
    assert_eq!(s2.leakage(), 0.0);

    assert!(State::vacuum(&[], 3).is_err());
    assert!(State::vacuum(&[IN_H, IN_H], 3).is_err());
    assert!(State::vacuum(&[IN_H], 0).is_err());
}

#[test]
fn displacement_identity_at_zero() {
    let mut s = State::vacuum(&[IN_H], 6).unwrap();
    s.apply_displacement(&IN_H, c(0.0, 0.0)).unwrap();
    assert_eq!(s.amplitude(&[0]), c(1.0, 0.0));
    assert_eq!(s.leakage(), 0.0);
}

#[test]
fn displacement_builds_coherent_state() {
    let mut s = State::vacuum(&[IN_H], 20).unwrap();
    s.apply_displacement(&IN_H, c(1.0, 0.0)).unwrap();
    // Coherent amplitudes e^{-1/2} / sqrt(n!) for alpha = 1.
    let mut fact = 1.0f64;
    for n in 0..=8 {
        if n > 0 {
            fact *= n as f64;
        }
        let want = (-0.5f64).exp() / fact.sqrt();
        let got = s.amplitude(&[n]);
        assert!(
            (got - c(want, 0.0)).norm() < 1e-12,
            "n={n}: got {got}, want {want}"
        );
    }
    assert!((s.amplitude(&[0]).re - 0.606531).abs() < 1e-6);
    assert!((s.amplitude(&[1]).re - 0.606531).abs() < 1e-6);
    assert!(s.leakage() < 1e-12);
}

#[test]
fn displacement_leakage_matches_poisson_tail() {
    let mut s = State::vacuum(&[IN_H], 4).unwrap();
    s.apply_displacement(&IN_H, c(3.0, 0.0)).unwrap();
    // Coherent |alpha|^2 = 9; weight above n = 4 from the Poisson law.
    let mut head = 0.0;
    let mut fact = 1.0f64;
    for n in 0..=4 {
        if n > 0 {
            fact *= n as f64;
        }
        head += (-9.0f64).exp() * 9.0f64.powi(n as i32) / fact;
    }
    let tail = 1.0 - head;
    assert!(tail > 0.1);
    assert!(s.leakage() > 0.1);
    assert!(
        (s.leakage() - tail).abs() < 1e-10,
        "leakage {} vs tail {}",
        s.leakage(),
        tail
    );
    assert!((s.norm_sqr() + s.leakage() - 1.0).abs() < 1e-12);
}

#[test]
fn displacement_composition_matches_sum() {
    let a = c(0.3, 0.2);
    let b = c(-0.1, 0.5);
    let mut s1 = State::vacuum(&[IN_H], 40).unwrap();
    s1.apply_displacement(&IN_H, b).unwrap();
    s1.apply_displacement(&IN_H, a).unwrap();
    let mut s2 = State::vacuum(&[IN_H], 40).unwrap();
    s2.apply_displacement(&IN_H, a + b).unwrap();
    let ov = s1.overlap(&s2).unwrap();
    assert!((ov.norm() - 1.0).abs() < 1e-10, "overlap {}", ov.norm());
}

#[test]
fn squeeze_identity_at_zero() {
    let mut s = State::vacuum(&[A_H, B_H], 5).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, 0.0, 0.3).unwrap();
    assert_eq!(s.amplitude(&[0, 0]), c(1.0, 0.0));
}

#[test]
fn squeeze_vacuum_gives_schmidt_form() {
    let r = 0.5f64;
    let mut s = State::vacuum(&[A_H, B_H], 20).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, r, 0.0).unwrap();
    let q = r.tanh();
    let sech = 1.0 / r.cosh();
    for n in 0..=12 {
        let got = s.amplitude(&[n, n]);
        let want = sech * q.powi(n as i32);
        assert!(
            (got - c(want, 0.0)).norm() < 1e-10,
            "n={n}: got {got}, want {want}"
        );
    }
    assert!((s.amplitude(&[0, 0]).re - 0.886819).abs() < 1e-6);
    assert!((s.amplitude(&[1, 1]).re - 0.409814).abs() < 1e-6);
    // Off-diagonal pairs stay empty.
    assert_eq!(s.amplitude(&[0, 1]), c(0.0, 0.0));
    assert_eq!(s.amplitude(&[3, 1]), c(0.0, 0.0));
}

#[test]
fn squeeze_reversal_recovers_vacuum() {
    let mut s = State::vacuum(&[A_H, B_H], 20).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, 0.5, 0.0).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, 0.5, std::f64::consts::PI)
        .unwrap();
    let vac = State::vacuum(&[A_H, B_H], 20).unwrap();
    let ov = s.overlap(&vac).unwrap();
    assert!((ov - c(1.0, 0.0)).norm() < 1e-8);
}

#[test]
fn beam_splitter_identity_at_full_transmittance() {
    let mut s = State::basis_state(&[IN_H, A_H], 4, &[1, 2]).unwrap();
    s.apply_beam_splitter(&IN_H, &A_H, 1.0, 0.7).unwrap();
    assert_eq!(s.amplitude(&[1, 2]), c(1.0, 0.0));
}

#[test]
fn beam_splitter_splits_single_photon() {
    // Convention: U|1,0> = cos t |1,0> + i e^{i phase} sin t |0,1>.
    let mut s = State::basis_state(&[IN_H, A_H], 3, &[1, 0]).unwrap();
    s.apply_beam_splitter(&IN_H, &A_H, 0.5, -std::f64::consts::FRAC_PI_2)
        .unwrap();
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    assert!((s.amplitude(&[1, 0]) - c(inv_sqrt2, 0.0)).norm() < 1e-12);
    assert!((s.amplitude(&[0, 1]) - c(inv_sqrt2, 0.0)).norm() < 1e-12);
    assert!((s.norm_sqr() - 1.0).abs() < 1e-12);

    // The mirror input picks up the opposite sign at this phase.
    let mut t = State::basis_state(&[IN_H, A_H], 3, &[0, 1]).unwrap();
    t.apply_beam_splitter(&IN_H, &A_H, 0.5, -std::f64::consts::FRAC_PI_2)
        .unwrap();
    assert!((t.amplitude(&[0, 1]) - c(inv_sqrt2, 0.0)).norm() < 1e-12);
    assert!((t.amplitude(&[1, 0]) - c(-inv_sqrt2, 0.0)).norm() < 1e-12);
}

#[test]
fn beam_splitter_hong_ou_mandel() {
    let mut s = State::basis_state(&[IN_H, A_H], 4, &[1, 1]).unwrap();
    s.apply_beam_splitter(&IN_H, &A_H, 0.5, 0.3).unwrap();
    assert!(s.amplitude(&[1, 1]).norm() < 1e-12);
    let w20 = s.amplitude(&[2, 0]).norm_sqr();
    let w02 = s.amplitude(&[0, 2]).norm_sqr();
    assert!((w20 - 0.5).abs() < 1e-12);
    assert!((w02 - 0.5).abs() < 1e-12);
    assert!(s.leakage() < 1e-14);
}

#[test]
fn beam_splitter_preserves_total_photon_distribution() {
    // Build a deterministic non-trivial two-mode state.
    let mut s = State::vacuum(&[IN_H, A_H], 8).unwrap();
    s.apply_displacement(&IN_H, c(0.4, 0.1)).unwrap();
    s.apply_displacement(&A_H, c(-0.2, 0.6)).unwrap();
    s.apply_two_mode_squeeze(&IN_H, &A_H, 0.2, 0.5).unwrap();

    let dist = |st: &State| -> Vec<f64> {
        let mut out = vec![0.0; 2 * 8 + 1];
        for (idx, z) in st.amplitudes().indexed_iter() {
            out[idx[0] + idx[1]] += z.norm_sqr();
        }
        out
    };
    let before = dist(&s);
    let mut t = s.clone();
    t.apply_beam_splitter(&IN_H, &A_H, 0.37, 1.1).unwrap();
    let after = dist(&t);
    for (m, (b, a)) in before.iter().zip(after.iter()).enumerate() {
        // Totals above the cutoff live in clipped blocks and may only shrink.
        if m <= 8 {
            assert!((b - a).abs() < 1e-12, "total {m}: {b} vs {a}");
        } else {
            assert!(*a <= b + 1e-12);
        }
    }
}

#[test]
fn phase_rotation_examples() {
    let mut s = State::basis_state(&[IN_H], 4, &[1]).unwrap();
    s.apply_phase_rotation(&IN_H, 0.0).unwrap();
    assert_eq!(s.amplitude(&[1]), c(1.0, 0.0));

    s.apply_phase_rotation(&IN_H, std::f64::consts::PI).unwrap();
    assert!((s.amplitude(&[1]) - c(-1.0, 0.0)).norm() < 1e-14);

    let mut t = State::vacuum(&[IN_H], 10).unwrap();
    t.apply_displacement(&IN_H, c(0.7, 0.3)).unwrap();
    let before = t.clone();
    t.apply_phase_rotation(&IN_H, 2.0 * std::f64::consts::PI)
        .unwrap();
    // Rotation by a full turn is the identity on the retained block, so the
    // overlap equals the (slightly sub-unit, truncated) squared norm.
    let ov = before.overlap(&t).unwrap();
    assert!((ov - c(before.norm_sqr(), 0.0)).norm() < 1e-13);
}

#[test]
fn partial_trace_of_tmsv_is_thermal() {
    let r = 0.5f64;
    let mut s = State::vacuum(&[A_H, B_H], 25).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, r, 0.0).unwrap();
    let rho = s.partial_trace(&[A_H]).unwrap();
    assert!((rho.trace() - 1.0).abs() < 1e-10);
    let mean: f64 = (0..=25)
        .map(|n| n as f64 * rho.matrix()[[n, n]].re)
        .sum();
    let want = r.sinh().powi(2);
    assert!((mean - want).abs() < 1e-8, "mean {mean} vs {want}");
    assert!((want - 0.27154).abs() < 1e-5);
    // Thermal state is diagonal.
    assert!(rho.matrix()[[0, 1]].norm() < 1e-14);
}

#[test]
fn partial_trace_keep_everything_is_projector() {
    let mut s = State::vacuum(&[IN_H, IN_V], 5).unwrap();
    s.apply_displacement(&IN_H, c(0.3, -0.2)).unwrap();
    let rho = s.partial_trace(&[IN_H, IN_V]).unwrap();
    let pure = DensityMatrix::from_pure(&s);
    let dist = rho.trace_distance(&pure).unwrap();
    assert!(dist < 1e-12);
}

#[test]
fn partial_trace_factorizes_product_state() {
    let mut a = State::vacuum(&[IN_H], 9).unwrap();
    a.apply_displacement(&IN_H, c(0.5, 0.1)).unwrap();
    let mut b = State::vacuum(&[IN_V], 9).unwrap();
    b.apply_displacement(&IN_V, c(-0.3, 0.4)).unwrap();
    let joint = a.tensor(&b).unwrap();
    let reduced = joint.partial_trace(&[IN_H]).unwrap();
    let direct = a.partial_trace(&[IN_H]).unwrap();
    assert!(reduced.trace_distance(&direct).unwrap() < 1e-12);
}

#[test]
fn fidelity_examples() {
    let psi = State::basis_state(&[IN_H, IN_V], 3, &[1, 0]).unwrap();
    let rho = DensityMatrix::from_pure(&psi);
    assert!((rho.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);

    let orth = State::basis_state(&[IN_H, IN_V], 3, &[0, 1]).unwrap();
    assert!(rho.fidelity(&orth).unwrap() < 1e-12);

    // Maximally mixed qubit block vs an equal superposition.
    let mut mixed = DensityMatrix::from_pure(&psi);
    mixed.scale(0.5);
    let other = DensityMatrix::from_pure(&orth);
    mixed.add_scaled(&other, 0.5).unwrap();
    let plus = superposition(&[IN_H, IN_V], 3, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
    let f = mixed.fidelity(&plus).unwrap();
    assert!((f - 0.5).abs() < 1e-12, "fidelity {f}");
}

#[test]
fn from_amplitudes_round_trips() {
    let s = superposition(&[IN_H, IN_V], 2, &[(&[1, 0], 0.6), (&[0, 1], 0.8)]);
    assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    assert!((s.amplitude(&[1, 0]) - c(0.6, 0.0)).norm() < 1e-15);
    assert!((s.amplitude(&[0, 1]) - c(0.8, 0.0)).norm() < 1e-15);
    assert!(State::from_amplitudes(&[IN_H], 2, &[c(1.0, 0.0)]).is_err());
}

#[test]
fn unitary_chain_conserves_norm_plus_leakage() {
    let mut s = State::vacuum(&[IN_H, A_H, B_H], 6).unwrap();
    s.apply_displacement(&IN_H, c(0.9, -0.4)).unwrap();
    s.apply_two_mode_squeeze(&A_H, &B_H, 0.8, 0.2).unwrap();
    s.apply_beam_splitter(&IN_H, &A_H, 0.5, -std::f64::consts::FRAC_PI_2)
        .unwrap();
    s.apply_phase_rotation(&B_H, 0.77).unwrap();
    s.apply_displacement(&B_H, c(1.2, 0.3)).unwrap();
    let total = s.norm_sqr() + s.leakage();
    assert!((total - 1.0).abs() < 1e-12, "norm+leak {total}");
    assert!(s.norm_sqr() <= 1.0 + 1e-12);
}

#[test]
fn embed_pads_and_crops_with_leakage() {
    let mut s = State::vacuum(&[IN_H], 10).unwrap();
    s.apply_displacement(&IN_H, c(1.5, 0.0)).unwrap();
    let padded = s.embed(16);
    assert_eq!(padded.cutoff(), 16);
    assert!((padded.norm_sqr() - s.norm_sqr()).abs() < 1e-15);
    let cropped = padded.embed(3);
    assert_eq!(cropped.cutoff(), 3);
    let total = cropped.norm_sqr() + cropped.leakage();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(cropped.leakage() > s.leakage());
}

#[test]
fn overlap_handles_mode_reordering() {
    let mut s = State::vacuum(&[IN_H, IN_V], 4).unwrap();
    s.apply_displacement(&IN_H, c(0.3, 0.0)).unwrap();
    s.apply_displacement(&IN_V, c(0.0, 0.4)).unwrap();
    let swapped = s.permuted_to(&[IN_V, IN_H]).unwrap();
    assert_eq!(swapped.modes(), &[IN_V, IN_H]);
    let ov = s.overlap(&swapped).unwrap();
    assert!((ov - c(s.norm_sqr(), 0.0)).norm() < 1e-14);
}

/// Normalized superposition of basis states with real weights.
fn superposition(modes: &[ModeLabel], cutoff: usize, parts: &[(&[usize], f64)]) -> State {
    let dim = cutoff + 1;
    let mut flat = vec![c(0.0, 0.0); dim.pow(modes.len() as u32)];
    for (occ, w) in parts {
        let mut pos = 0;
        for n in occ.iter() {
            pos = pos * dim + n;
        }
        flat[pos] += c(*w, 0.0);
    }
    let norm: f64 = flat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut flat {
        *z /= norm;
    }
    State::from_amplitudes(modes, cutoff, &flat).unwrap()
}
