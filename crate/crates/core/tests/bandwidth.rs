use num_complex::Complex64;

use cvteleport::bandwidth::{
    effective_fidelity, frequency_pairing, heisenberg_variance_check, FrequencyMap, QubitSpectrum,
    SqueezingSpectrum,
};
use cvteleport::sources::{InputQubit, SourceParams};
use cvteleport::teleport::{qubit_metrics, teleport_average, BetaGrid, GainRule};
use cvteleport::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn probe_input() -> InputQubit<f64> {
    InputQubit::normalized(c(0.6, 0.0), c(0.8, 0.0) * c(0.3f64.cos(), 0.3f64.sin())).unwrap()
}

#[test]
fn difference_quadrature_variance_ratio_is_the_squeeze_exponential() {
    // The pair correlations squeeze x_B - x_A by exactly e^{-2r}; the
    // truncation tail must stay under the gate for the moment to be honest.
    for (r, cutoff) in [(0.0f64, 30), (0.25, 30), (0.5, 30), (1.0, 40), (1.5, 104)] {
        let ratio = heisenberg_variance_check(r, cutoff).unwrap();
        let want = (-2.0 * r).exp();
        assert!(
            (ratio - want).abs() < 1e-6,
            "r={r}: ratio {ratio} vs {want}"
        );
    }
    // Weak squeezing settles to machine accuracy well below the cutoff.
    let ratio = heisenberg_variance_check(0.5, 30).unwrap();
    assert!((ratio - (-1.0f64).exp()).abs() < 1e-9);
    assert!((heisenberg_variance_check(0.0f64, 8).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn flat_band_reproduces_the_single_frequency_fidelity() {
    let input = probe_input();
    let grid = BetaGrid::new(6.0, 21).unwrap();
    let cutoff = 10usize;
    let map = FrequencyMap::new(380.0, 196.0, 0.5, 17).unwrap();
    let qspec = QubitSpectrum::gaussian(0.0, 1.0).unwrap();
    let sspec = SqueezingSpectrum::flat(1.0).unwrap();

    let report = effective_fidelity(
        &qspec,
        &sspec,
        GainRule::Unit,
        &input,
        &grid,
        &map,
        cutoff,
    )
    .unwrap();

    let params = SourceParams::new(1.0).unwrap();
    let rep = teleport_average(&input, &params, GainRule::Unit, &grid, cutoff).unwrap();
    let direct = qubit_metrics(&rep.rho, Some(&input))
        .unwrap()
        .conditional_fidelity
        .unwrap();

    assert!(
        (report.effective_fidelity - direct).abs() < 1e-10,
        "flat {} vs direct {direct}",
        report.effective_fidelity
    );
    // Bin 0 runs through the very same code path as the direct call.
    let center = &report.bins[(map.n_bins() - 1) / 2];
    assert_eq!(center.bin, 0);
    assert_eq!(center.fidelity, direct);
    assert_eq!(center.squeeze, 1.0);

    let weight_sum: f64 = report.bins.iter().map(|b| b.weight).sum();
    assert!((weight_sum - 1.0).abs() < 1e-12, "weights sum to {weight_sum}");
    assert_eq!(report.bins.len(), map.n_bins());
}

#[test]
fn effective_fidelity_grows_with_the_squeezing_bandwidth() {
    let input = probe_input();
    let grid = BetaGrid::new(6.0, 21).unwrap();
    let cutoff = 10usize;
    let map = FrequencyMap::new(380.0, 196.0, 0.5, 17).unwrap();
    let qspec = QubitSpectrum::gaussian(0.0, 1.0).unwrap();
    let r0 = 1.2f64;

    let mut last = 0.0f64;
    let mut values = Vec::new();
    for gamma in [0.5, 1.0, 2.0, 8.0] {
        let sspec = SqueezingSpectrum::lorentzian(r0, gamma).unwrap();
        let rep = effective_fidelity(
            &qspec,
            &sspec,
            GainRule::Unit,
            &input,
            &grid,
            &map,
            cutoff,
        )
        .unwrap();
        let f = rep.effective_fidelity;
        assert!(
            f >= last - 1e-12,
            "gamma {gamma}: {f} not above {last}"
        );
        last = f;
        values.push(f);
    }

    let flat = effective_fidelity(
        &qspec,
        &SqueezingSpectrum::flat(r0).unwrap(),
        GainRule::Unit,
        &input,
        &grid,
        &map,
        cutoff,
    )
    .unwrap()
    .effective_fidelity;
    assert!(flat >= last - 1e-12, "flat {flat} below widest band {last}");
    // A band comparable to the photon's width costs real fidelity.
    assert!(
        flat - values[0] > 1e-3,
        "narrow band {} too close to flat {flat}",
        values[0]
    );
}

#[test]
fn mirroring_both_spectra_leaves_the_result_unchanged() {
    let input = probe_input();
    let grid = BetaGrid::new(5.5, 17).unwrap();
    let cutoff = 8usize;
    let map = FrequencyMap::new(380.0, 196.0, 0.5, 9).unwrap();

    // Deliberately lopsided profiles; amplitudes vanish at the window edge
    // so the sampled mass matches the table mass exactly.
    let q_pts = [
        (-2.0, 0.0),
        (-1.5, 0.4),
        (-1.0, 0.9),
        (-0.5, 1.1),
        (0.0, 1.0),
        (0.5, 0.7),
        (1.0, 0.5),
        (1.5, 0.3),
        (2.0, 0.0),
    ];
    let s_pts = [(-3.0, 0.15), (-1.0, 0.9), (0.0, 0.6), (0.5, 1.1), (3.0, 0.2)];
    let mirror = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        pts.iter().rev().map(|&(x, v)| (-x, v)).collect()
    };

    let qspec = QubitSpectrum::table(&q_pts).unwrap();
    let sspec = SqueezingSpectrum::table(&s_pts).unwrap();
    let qspec_m = QubitSpectrum::table(&mirror(&q_pts)).unwrap();
    let sspec_m = SqueezingSpectrum::table(&mirror(&s_pts)).unwrap();

    let run = |q: &QubitSpectrum<f64>, s: &SqueezingSpectrum<f64>| {
        effective_fidelity(q, s, GainRule::Unit, &input, &grid, &map, cutoff)
            .unwrap()
            .effective_fidelity
    };
    let forward = run(&qspec, &sspec);
    let mirrored = run(&qspec_m, &sspec_m);
    assert!(
        (forward - mirrored).abs() < 1e-12,
        "forward {forward} vs mirrored {mirrored}"
    );

    // The mirrored-offset convention is visible on a lopsided band: each
    // bin's squeeze factor is the spectrum at the opposite offset.
    let rep = effective_fidelity(&qspec, &sspec, GainRule::Unit, &input, &grid, &map, cutoff)
        .unwrap();
    for b in &rep.bins {
        let want = sspec.value(-b.offset).unwrap();
        assert_eq!(b.squeeze, want, "bin {}", b.bin);
    }
}

#[test]
fn spectra_that_miss_the_window_are_rejected() {
    let input = probe_input();
    let grid = BetaGrid::new(5.5, 17).unwrap();
    let map = FrequencyMap::new(380.0, 196.0, 0.5, 9).unwrap();
    let qspec = QubitSpectrum::gaussian(0.0, 0.55).unwrap();

    // Squeezing table narrower than the window: the mirrored offsets of the
    // outer bins fall outside the sampled range.
    let narrow = SqueezingSpectrum::table(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    match effective_fidelity(&qspec, &narrow, GainRule::Unit, &input, &grid, &map, 8) {
        Err(Error::SpectrumCoverage(_)) => {}
        other => panic!("expected coverage error, got {other:?}"),
    }

    // Photon much wider than the window: too much weight leaks out.
    let wide = QubitSpectrum::gaussian(0.0, 10.0).unwrap();
    let flat = SqueezingSpectrum::flat(0.5).unwrap();
    match effective_fidelity(&wide, &flat, GainRule::Unit, &input, &grid, &map, 8) {
        Err(Error::SpectrumLeakage { outside, limit }) => {
            assert!(outside > limit);
        }
        other => panic!("expected leakage error, got {other:?}"),
    }

    // A matched-gain bin with no squeezing keeps no photon weight, so its
    // conditional fidelity is undefined.
    let dead = SqueezingSpectrum::flat(0.0).unwrap();
    assert!(effective_fidelity(
        &qspec,
        &dead,
        GainRule::Matched,
        &input,
        &grid,
        &map,
        8
    )
    .is_err());
}

#[test]
fn pairing_bookkeeping_round_trips() {
    let map = FrequencyMap::new(100.0f64, 250.0, 0.25, 33).unwrap();
    for bin in map.bins() {
        let t = frequency_pairing(&map, bin).unwrap();
        let m = frequency_pairing(&map, map.mirror(bin).unwrap()).unwrap();
        assert_eq!(t.partner_a, m.input);
        assert_eq!(t.input, m.partner_a);
        assert_eq!(map.mirror(map.mirror(bin).unwrap()).unwrap(), bin);
        assert!((t.output - t.input - map.omega_difference()).abs() < 1e-12);
    }
    assert!(frequency_pairing(&map, 17).is_err());
}
