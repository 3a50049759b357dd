//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them all).
//!
//! Criteria 2 and 5 contain sub-bounds that the exact dynamics of the model
//! at the published operating point does not meet (confirmed with an
//! independent midpoint-exponential integrator); they are asserted as
//! stated and fail honestly rather than being loosened. Details are printed
//! with the measured values.

use std::sync::OnceLock;
use std::time::Instant;

use fockbeam::averaging::{
    bessel_j0, cdt_amplitude, effective_couplings, integrate_effective, j0_root,
};
use fockbeam::bpm::{input_mode_for, propagate, Grid, OpticalConstants};
use fockbeam::designer::{
    calibrate_beta, calibrate_coupling, design_array, two_guide_kappa, ArrayDesign,
    CalibrationOptions, CouplingCalibration, WaveguideProfile,
};
use fockbeam::evolve::{default_dt, integrate, revival_check, Trajectory};
use fockbeam::floquet::{
    find_crossing, monodromy, opposite_parity_gap, quasi_energies, sweep_quasi_energies,
    PairSelector,
};
use fockbeam::lattice::{build_lattice, parity_reverse, AmplitudeVector, ModelParams};
use rayon::prelude::*;

const OMEGA: f64 = 0.628;
const V: f64 = 0.08;
const LINE_IV_G1: f64 = 0.13458;

struct Criterion {
    index: usize,
    name: &'static str,
    started: Instant,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(index: usize, name: &'static str) -> Self {
        Criterion { index, name, started: Instant::now(), checks: Vec::new() }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push((label.into(), ok));
    }

    fn finish(self) {
        let elapsed = self.started.elapsed();
        let failed: Vec<&(String, bool)> = self.checks.iter().filter(|c| !c.1).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {} ({}): {verdict} [{} checks, {:.2?}]",
            self.index,
            self.name,
            self.checks.len(),
            elapsed
        );
        for (label, ok) in &self.checks {
            println!("    [{}] {label}", if *ok { "ok" } else { "FAIL" });
        }
        assert!(
            failed.is_empty(),
            "criterion {} ({}) failed: {}",
            self.index,
            self.name,
            failed.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join(" | ")
        );
    }
}

fn confinement_run(g1: f64, sample_every: usize) -> Trajectory {
    let params = ModelParams::new(10, V, g1, OMEGA).unwrap();
    let model = build_lattice(&params).unwrap();
    let c0 = AmplitudeVector::delta(11, 0).unwrap();
    integrate(&model, &c0, 100.0, default_dt(OMEGA), sample_every).unwrap()
}

fn max_leak(traj: &Trajectory, l0: usize) -> f64 {
    traj.occupations
        .iter()
        .map(|occ| occ[l0 + 1..].iter().sum::<f64>())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_cdt_amplitudes() {
    let mut c = Criterion::new(1, "CDT amplitudes");
    let targets = [(0usize, 0.167804), (1, 0.215748), (2, 0.302047)];
    for (l0, expect) in targets {
        // best of five so scheduler noise from concurrently running heavy
        // tests cannot distort the sub-millisecond measurement
        let mut elapsed = std::time::Duration::MAX;
        let mut g1 = 0.0;
        for _ in 0..5 {
            let started = Instant::now();
            g1 = cdt_amplitude(10, l0, OMEGA, 1).unwrap();
            elapsed = elapsed.min(started.elapsed());
        }
        let rel = (g1 - expect).abs() / expect;
        c.check(
            format!("l0={l0}: g1 = {g1:.6} within 1e-5 relative of {expect} (rel {rel:.2e})"),
            rel < 1e-5,
        );
        c.check(
            format!("l0={l0}: runtime {elapsed:.2?} < 1 ms"),
            elapsed.as_secs_f64() < 1e-3,
        );
    }
    c.finish();
}

#[test]
fn criterion_2_confinement() {
    let mut c = Criterion::new(2, "population confinement");
    let runs: Vec<(usize, Trajectory)> = (0..3usize)
        .into_par_iter()
        .map(|l0| (l0, confinement_run(cdt_amplitude(10, l0, OMEGA, 1).unwrap(), 4)))
        .collect();
    for (l0, traj) in &runs {
        let leak = max_leak(traj, *l0);
        c.check(
            format!("l0={l0}: max over samples of Σ_{{l>{l0}}}|c_l|² = {leak:.4} < 0.1"),
            leak < 0.1,
        );
    }
    let counter = confinement_run(LINE_IV_G1, 4);
    let spread = max_leak(&counter, 2);
    c.check(
        format!("counter-case g1={LINE_IV_G1}: max Σ_{{l≥3}}|c_l|² = {spread:.4} > 0.3"),
        spread > 0.3,
    );
    c.check(
        format!("total runtime {:.2?} < 5 s", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 5.0,
    );
    c.finish();
}

#[test]
fn criterion_3_imbalance_floors() {
    let mut c = Criterion::new(3, "imbalance floors");
    let min_s = |l0: usize| -> f64 {
        let traj = confinement_run(cdt_amplitude(10, l0, OMEGA, 1).unwrap(), 4);
        traj.imbalance.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let s0 = min_s(0);
    c.check(format!("l0=0: min S = {s0:.4} > 0.9"), s0 > 0.9);
    let s1 = min_s(1);
    c.check(format!("l0=1: min S = {s1:.4} in [0.75, 0.90]"), (0.75..=0.90).contains(&s1));
    let s2 = min_s(2);
    c.check(format!("l0=2: min S = {s2:.4} > 0.55"), s2 > 0.55);
    c.check(
        format!("total runtime {:.2?} < 5 s", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 5.0,
    );
    c.finish();
}

#[test]
fn criterion_4_quasi_energy_crossings() {
    let mut c = Criterion::new(4, "quasi-energy crossings");
    let base = ModelParams::new(10, V, 0.0, OMEGA).unwrap();

    // the 200-point sweep the runtime bound refers to
    let g1_values: Vec<f64> = (0..200).map(|i| 0.35 * i as f64 / 199.0).collect();
    let sweep = sweep_quasi_energies(&base, &g1_values).unwrap();
    c.check(format!("200-point sweep produced {} spectra", sweep.len()), sweep.len() == 200);

    let lines = [
        ("I", 0usize, (0.15, 0.19)),
        ("II", 1, (0.195, 0.24)),
        ("III", 2, (0.28, 0.33)),
    ];
    for (label, l0, bracket) in lines {
        let predicted = cdt_amplitude(10, l0, OMEGA, 1).unwrap();
        let crossing = find_crossing(&base, bracket, PairSelector::NearestOppositeParity).unwrap();
        let rel = (crossing.g1 - predicted).abs() / predicted;
        c.check(
            format!("line {label}: g1* = {:.6} within 5% of {predicted:.6} (rel {rel:.2e})", crossing.g1),
            rel < 0.05,
        );
        c.check(
            format!("line {label}: gap {:.2e} < 1e-3·ω", crossing.gap),
            crossing.gap < 1e-3 * OMEGA,
        );
    }
    let params_iv = ModelParams::new(10, V, LINE_IV_G1, OMEGA).unwrap();
    let iv = quasi_energies(&build_lattice(&params_iv).unwrap()).unwrap();
    let gap_iv = opposite_parity_gap(&iv, PairSelector::NearestOppositeParity, OMEGA).unwrap();
    c.check(
        format!("line IV: nearest opposite-parity gap {gap_iv:.3e} > 1e-2·ω"),
        gap_iv > 1e-2 * OMEGA,
    );
    c.check(
        format!("total runtime {:.2?} < 2 min", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 120.0,
    );
    c.finish();
}

#[test]
fn criterion_5_averaging_fidelity() {
    let mut c = Criterion::new(5, "averaging fidelity");
    let sup_norm = |omega: f64, g1: f64| -> f64 {
        let params = ModelParams::new(10, V, g1, omega).unwrap();
        let model = build_lattice(&params).unwrap();
        let eff = effective_couplings(&params).unwrap();
        let c0 = AmplitudeVector::delta(11, 0).unwrap();
        let dt = default_dt(omega);
        let exact = integrate(&model, &c0, 100.0, dt, 8).unwrap();
        let avg = integrate_effective(&eff, &c0, 100.0, dt, 8).unwrap();
        let mut worst = 0.0f64;
        for (oa, ob) in exact.occupations.iter().zip(&avg.occupations) {
            for (x, y) in oa.iter().zip(ob) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    };
    let g1 = cdt_amplitude(10, 1, OMEGA, 1).unwrap();
    let sup1 = sup_norm(OMEGA, g1);
    c.check(
        format!("fig-1b parameters: sup-norm occupation difference {sup1:.4} < 0.1"),
        sup1 < 0.1,
    );
    let sup2 = sup_norm(2.0 * OMEGA, 2.0 * g1);
    let ratio = sup1 / sup2;
    c.check(
        format!("ω doubled at fixed g1/ω: {sup1:.4} → {sup2:.4}, decrease {ratio:.2}× ≥ 1.7×"),
        ratio >= 1.7,
    );
    c.check(
        format!("total runtime {:.2?} < 10 s", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 10.0,
    );
    c.finish();
}

#[test]
fn criterion_6_bessel_roots() {
    let mut c = Criterion::new(6, "Bessel roots");
    for k in 1..=10usize {
        let root = j0_root(k).unwrap();
        let residual = bessel_j0(root).abs();
        c.check(format!("k={k}: |J0(root)| = {residual:.2e} < 1e-12"), residual < 1e-12);
    }
    let r1 = j0_root(1).unwrap();
    c.check(
        format!("j0_root(1) = {r1:.7} within 1e-6 of 2.404826"),
        (r1 - 2.404826).abs() < 1e-6,
    );
    c.finish();
}

struct CalibrationBundle {
    coupling: CouplingCalibration,
    beta: f64,
    kappa_at_9: f64,
}

fn calibration_bundle() -> &'static CalibrationBundle {
    static BUNDLE: OnceLock<CalibrationBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| {
        let constants = OpticalConstants::default();
        let profile = WaveguideProfile::default();
        let ds: Vec<f64> = (0..9).map(|i| 8.5 + 0.25 * i as f64).collect();
        let coupling = calibrate_coupling(&ds, &constants, &profile, 2e-3).unwrap();
        let beta = calibrate_beta(&constants, &profile, 2e-3).unwrap();
        let kappa_at_9 =
            two_guide_kappa(9.0, &constants, &profile, 2e-3, &CalibrationOptions::default())
                .unwrap();
        CalibrationBundle { coupling, beta, kappa_at_9 }
    })
}

#[test]
fn criterion_7_coupling_calibration() {
    let mut c = Criterion::new(7, "coupling calibration");
    let bundle = calibration_bundle();
    let rel = (bundle.kappa_at_9 - 0.2144).abs() / 0.2144;
    c.check(
        format!(
            "κ(9 μm) = {:.4} mm⁻¹ within 10% of 0.2144 (rel {rel:.3})",
            bundle.kappa_at_9
        ),
        rel < 0.10,
    );
    let gamma = bundle.coupling.gamma_um_inv;
    c.check(format!("γ = {gamma:.4} μm⁻¹ in [0.5, 0.7]"), (0.5..=0.7).contains(&gamma));
    c.check(
        format!("fit residual {:.4} < 0.05", bundle.coupling.fit_residual),
        bundle.coupling.fit_residual < 0.05,
    );
    // widest spacing of the N=10, v=0.08 design: bond coupling (v/2)√10
    let kappa_edge = 0.5 * V * 10.0f64.sqrt();
    let d_max = bundle.coupling.spacing_for(kappa_edge);
    c.check(
        format!("max design spacing {d_max:.4} μm within 0.1 μm of 9.916"),
        (d_max - 9.916).abs() < 0.1,
    );
    c.check(
        format!("β = {:.4} in [1.0, 1.5]", bundle.beta),
        (1.0..=1.5).contains(&bundle.beta),
    );
    c.check(
        format!("total runtime {:.2?} < 2 min", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 120.0,
    );
    c.finish();
}

fn crossval_case(g1: f64, bundle: &CalibrationBundle) -> (f64, f64, f64) {
    let constants = OpticalConstants::default();
    let profile = WaveguideProfile::default();
    let params = ModelParams::new(10, V, g1, OMEGA).unwrap();
    let design: ArrayDesign =
        design_array(&params, &bundle.coupling, bundle.beta, &profile, &constants, 100.0).unwrap();

    let grid = Grid::for_device(design.x_first(), design.x_last(), 8192).unwrap();
    let input = input_mode_for(&design, &grid, &constants).unwrap();
    let beam = propagate(&design, &input, &constants, 100.0, 500).unwrap();

    // lattice sampled on the same 0.5 mm grid
    let steps = (0.5 / default_dt(OMEGA)).ceil();
    let dt = 0.5 / steps;
    let model = build_lattice(&params).unwrap();
    let c0 = AmplitudeVector::delta(11, 0).unwrap();
    let lat = integrate(&model, &c0, 100.0, dt, steps as usize).unwrap();
    assert_eq!(lat.len(), beam.len());

    let mut sum2 = 0.0;
    for i in 0..lat.len() {
        let d = lat.imbalance[i] - beam.s_retrieved[i];
        sum2 += d * d;
    }
    let rms = (sum2 / lat.len() as f64).sqrt();
    let min_s_bpm = beam.s_retrieved.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_s_lat = lat.imbalance.iter().cloned().fold(f64::INFINITY, f64::min);
    (rms, min_s_bpm, min_s_lat)
}

#[test]
fn criterion_8_end_to_end() {
    let mut c = Criterion::new(8, "end-to-end array reproduction");
    let bundle = calibration_bundle();
    let cases: Vec<(char, f64)> = vec![
        ('a', cdt_amplitude(10, 0, OMEGA, 1).unwrap()),
        ('b', cdt_amplitude(10, 1, OMEGA, 1).unwrap()),
        ('c', cdt_amplitude(10, 2, OMEGA, 1).unwrap()),
        ('d', LINE_IV_G1),
    ];
    let results: Vec<(char, (f64, f64, f64))> =
        cases.par_iter().map(|(p, g1)| (*p, crossval_case(*g1, bundle))).collect();
    // confinement floors for panels a-c separate clearly from the spreading
    // panel d under the 0.15 RMS retrieval budget
    let floors = [('a', 0.8), ('b', 0.65), ('c', 0.45)];
    for (panel, (rms, min_s_bpm, min_s_lat)) in &results {
        c.check(
            format!("panel {panel}: RMS(S_bpm − S_lattice) = {rms:.4} < 0.15"),
            *rms < 0.15,
        );
        if let Some((_, floor)) = floors.iter().find(|(p, _)| p == panel) {
            c.check(
                format!(
                    "panel {panel}: confined (min S_bpm = {min_s_bpm:.4} > {floor}, lattice {min_s_lat:.4})"
                ),
                min_s_bpm > floor,
            );
        } else {
            c.check(
                format!("panel {panel}: spreads across the array (min S_bpm = {min_s_bpm:.4} < 0.4)"),
                *min_s_bpm < 0.4,
            );
        }
    }
    c.check(
        format!("total runtime {:.2?} ≤ 40 min (≤ ~10 min per array)", c.started.elapsed()),
        c.started.elapsed().as_secs_f64() < 2400.0,
    );
    c.finish();
}

#[test]
fn criterion_9_property_suite() {
    let mut c = Criterion::new(9, "conservation and convergence properties");

    // norm conservation over 100 mm at the default step, strongest drive
    let params = ModelParams::new(10, V, cdt_amplitude(10, 2, OMEGA, 1).unwrap(), OMEGA).unwrap();
    let model = build_lattice(&params).unwrap();
    let c0 = AmplitudeVector::delta(11, 0).unwrap();
    let traj = integrate(&model, &c0, 100.0, default_dt(OMEGA), 4).unwrap();
    let worst_norm = traj
        .occupations
        .iter()
        .map(|occ| (occ.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    c.check(format!("norm drift {worst_norm:.2e} < 1e-8 over 100 mm"), worst_norm < 1e-8);

    // parity covariance of the evolution
    let c0_random = AmplitudeVector::normalized(
        (0..11)
            .map(|k| num_complex::Complex64::new((k as f64).cos(), (0.3 * k as f64).sin()))
            .collect(),
    )
    .unwrap();
    let fwd = integrate(&model, &c0_random, 50.0, default_dt(OMEGA), usize::MAX - 1).unwrap();
    let bwd =
        integrate(&model, &parity_reverse(&c0_random), 50.0, default_dt(OMEGA), usize::MAX - 1)
            .unwrap();
    let mut fwd_end = fwd.amplitudes.last().unwrap().clone();
    fwd_end.reverse();
    let parity_dev = fwd_end
        .iter()
        .zip(bwd.amplitudes.last().unwrap())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    c.check(format!("parity covariance deviation {parity_dev:.2e} < 1e-8"), parity_dev < 1e-8);

    // undriven revival at 2π/v
    let undriven = build_lattice(&ModelParams::new(10, V, 0.0, OMEGA).unwrap()).unwrap();
    let dev = revival_check(&undriven, &c0_random, std::f64::consts::TAU / V).unwrap();
    c.check(format!("g1=0 revival deviation {dev:.2e} < 1e-6 at 2π/v"), dev < 1e-6);

    // fourth-order step halving of the chain integrator
    let endpoint = |dt: f64| -> Vec<num_complex::Complex64> {
        integrate(&model, &c0, 20.0, dt, usize::MAX - 1).unwrap().amplitudes.last().unwrap().clone()
    };
    let reference = endpoint(default_dt(OMEGA) / 8.0);
    let err = |dt: f64| -> f64 {
        endpoint(dt)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let ratio_ode = err(default_dt(OMEGA)) / err(default_dt(OMEGA) / 2.0);
    c.check(
        format!("chain integrator error ratio under dt/2: {ratio_ode:.1} (≈16 expected)"),
        (10.0..=26.0).contains(&ratio_ode),
    );

    // monodromy unitarity at the default step
    let u = monodromy(&model).unwrap();
    let defect = u.unitarity_defect();
    c.check(format!("monodromy unitarity defect {defect:.2e} < 1e-7"), defect < 1e-7);

    // BPM: power conservation over 10 cm without absorber, and second-order
    // step halving on a two-guide coupler
    let constants = OpticalConstants::default();
    let profile = WaveguideProfile::default();
    let bundle = calibration_bundle();
    let design = design_array(
        &ModelParams::new(10, V, 0.0, OMEGA).unwrap(),
        &bundle.coupling,
        bundle.beta,
        &profile,
        &constants,
        100.0,
    )
    .unwrap();
    let mut grid = Grid::for_device(design.x_first(), design.x_last(), 8192).unwrap();
    grid.absorber_strength = 0.0;
    let input = input_mode_for(&design, &grid, &constants).unwrap();
    let beam = propagate(&design, &input, &constants, 100.0, 2000).unwrap();
    let p0 = beam.power[0];
    let power_drift = beam
        .power
        .iter()
        .map(|p| ((p - p0) / p0).abs())
        .fold(0.0, f64::max);
    c.check(
        format!("absorber-free power drift {power_drift:.2e} < 1e-4 over 10 cm"),
        power_drift < 1e-4,
    );

    let bpm_endpoint = |dz: f64| -> Vec<num_complex::Complex64> {
        let mut g = Grid::new(-30.0, 39.0, 2048, dz, 10.0, 0.0).unwrap();
        g.absorber_strength = 0.0;
        let two = fockbeam::designer::ArrayDesign {
            lambda_um: 0.633,
            n_s: 1.45,
            w_um: 2.0,
            diffusion_um: 0.3,
            dn_base: 2e-3,
            omega_mm_inv: OMEGA,
            length_mm: 10.0,
            d_r_um: 9.0,
            guides: vec![
                fockbeam::designer::Guide { x_um: 0.0, m_contrast: 2e-4 },
                fockbeam::designer::Guide { x_um: 9.0, m_contrast: -2e-4 },
            ],
            warnings: vec![],
            model: None,
        };
        let mut stepper = fockbeam::bpm::SplitStepper::new(g, &two, &constants).unwrap();
        let mut f = input_mode_for(&two, &g, &constants).unwrap();
        let steps = (10.0 * 1e3 / dz).round() as usize;
        for _ in 0..steps {
            stepper.step(&mut f).unwrap();
        }
        f.phi
    };
    let reference = bpm_endpoint(0.25);
    let bpm_err = |dz: f64| -> f64 {
        bpm_endpoint(dz)
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let ratio_bpm = bpm_err(2.0) / bpm_err(1.0);
    c.check(
        format!("split-step error ratio under dz/2: {ratio_bpm:.2} (≈4 expected)"),
        (3.0..=5.5).contains(&ratio_bpm),
    );

    c.finish();
}
