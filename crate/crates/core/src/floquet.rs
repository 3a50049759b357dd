//! Quasi-energy spectrum of the driven chain.
//!
//! The one-period propagator is integrated column by column in the drive
//! gauge frame (the gauge integral vanishes over a full cycle, so the frames
//! coincide at the endpoints). Parity is an exact symmetry of the chain, so
//! the spectrum is computed block-wise in the symmetric/antisymmetric basis,
//! which keeps even/odd labels unambiguous even at degeneracies.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::rk4_drive;
use crate::lattice::{build_lattice, LatticeModel, ModelParams};
use crate::linalg::{unitary_eigenphases, CMatrix};

/// Integration steps per drive period used by the monodromy integrator.
pub const MONODROMY_STEPS_PER_PERIOD: usize = 1024;

/// Unitarity defect above which a monodromy matrix is rejected.
pub const UNITARITY_REJECT: f64 = 1e-5;

/// Quasi-energies folded to (−ω/2, ω/2], with parity labels.
#[derive(Clone, Debug)]
pub struct FloquetResult {
    /// quasi-energies sorted ascending, mm⁻¹
    pub quasi_energies: Vec<f64>,
    /// parity of each state, ±1
    pub parities: Vec<i8>,
    /// drive period T = 2π/ω, mm
    pub period: f64,
    /// ‖U†U − I‖_max of the underlying monodromy matrix
    pub unitarity_defect: f64,
}

impl FloquetResult {
    /// Quasi-energies of one parity class, sorted ascending.
    pub fn class(&self, parity: i8) -> Vec<f64> {
        self.quasi_energies
            .iter()
            .zip(&self.parities)
            .filter(|(_, p)| **p == parity)
            .map(|(e, _)| *e)
            .collect()
    }
}

/// One-period propagator U(t₀+T ← t₀) with a chosen step count.
pub fn monodromy_from(model: &LatticeModel, t0: f64, steps_per_period: usize) -> Result<CMatrix> {
    if steps_per_period < 2 {
        return Err(Error::config("steps_per_period must be >= 2"));
    }
    let dim = model.dim();
    let period = TAU / model.params.omega;
    let dt = period / steps_per_period as f64;
    let mut u = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut y = vec![C64::new(0.0, 0.0); dim];
        y[col] = C64::new(1.0, 0.0);
        rk4_drive(
            &mut y,
            t0,
            t0 + period,
            dt,
            |t, a, out| {
                let gamma = model.gauge_integral_from(t0, t);
                model.rhs_gauge(gamma, a, out);
            },
            |_, _, _| {},
        )?;
        // the gauge integral over one full period vanishes identically;
        // apply the exact (tiny) closing rotation anyway
        let gamma_end = model.gauge_integral_from(t0, t0 + period);
        let mut lab = vec![C64::new(0.0, 0.0); dim];
        model.gauge_to_plain(gamma_end, &y, &mut lab);
        u.set_col(col, &lab);
    }
    let defect = u.unitarity_defect();
    if defect > UNITARITY_REJECT {
        return Err(Error::numerical(format!(
            "monodromy unitarity defect {defect:e} exceeds {UNITARITY_REJECT:e}; reduce dt"
        )));
    }
    Ok(u)
}

/// One-period propagator U(T ← 0) at the default step count.
pub fn monodromy(model: &LatticeModel) -> Result<CMatrix> {
    monodromy_from(model, 0.0, MONODROMY_STEPS_PER_PERIOD)
}

/// Orthonormal parity basis: columns of the first matrix span the symmetric
/// (even) subspace, the second the antisymmetric (odd) one.
pub fn parity_basis(dim: usize) -> (CMatrix, CMatrix) {
    let n = dim - 1; // site index runs 0..=n
    let n_pairs = dim / 2;
    let has_center = dim % 2 == 1;
    let n_even = n_pairs + usize::from(has_center);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let mut even = CMatrix::zeros(dim, n_even);
    let mut odd = CMatrix::zeros(dim, dim - n_even);
    for j in 0..n_pairs {
        even[(j, j)] = C64::new(inv_sqrt2, 0.0);
        even[(n - j, j)] = C64::new(inv_sqrt2, 0.0);
        odd[(j, j)] = C64::new(inv_sqrt2, 0.0);
        odd[(n - j, j)] = C64::new(-inv_sqrt2, 0.0);
    }
    if has_center {
        even[(n / 2, n_pairs)] = C64::new(1.0, 0.0);
    }
    (even, odd)
}

/// Fold an energy-like quantity into the fundamental zone (−ω/2, ω/2].
pub fn fold_to_zone(e: f64, omega: f64) -> f64 {
    let mut f = e - omega * (e / omega).round();
    if f <= -0.5 * omega {
        f += omega;
    }
    if f > 0.5 * omega {
        f -= omega;
    }
    f
}

/// Quasi-energy spectrum with parity labels, ε = −arg(λ)/T folded to
/// (−ω/2, ω/2]. The sign convention reproduces +v(m−N/2) in the g₁ = 0
/// limit for small v·T.
pub fn quasi_energies(model: &LatticeModel) -> Result<FloquetResult> {
    let u = monodromy(model)?;
    quasi_energies_of_monodromy(model, &u)
}

fn quasi_energies_of_monodromy(model: &LatticeModel, u: &CMatrix) -> Result<FloquetResult> {
    let dim = model.dim();
    let period = TAU / model.params.omega;
    let omega = model.params.omega;
    let defect = u.unitarity_defect();
    let (even, odd) = parity_basis(dim);

    let mut entries: Vec<(f64, i8)> = Vec::with_capacity(dim);
    for (basis, parity) in [(&even, 1i8), (&odd, -1i8)] {
        let block = basis.adjoint().mul(u).mul(basis);
        for pair in unitary_eigenphases(&block)? {
            let eps = fold_to_zone(-pair.phase / period, omega);
            entries.push((eps, parity));
        }
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(FloquetResult {
        quasi_energies: entries.iter().map(|e| e.0).collect(),
        parities: entries.iter().map(|e| e.1).collect(),
        period,
        unitarity_defect: defect,
    })
}

/// Quasi-energies of the full-space monodromy with post-hoc parity labels
/// from the parity expectation value of each eigenvector. Used as a
/// cross-check of the block route; ambiguous near exact crossings.
pub fn quasi_energies_full_space(model: &LatticeModel) -> Result<FloquetResult> {
    let u = monodromy(model)?;
    let dim = model.dim();
    let period = TAU / model.params.omega;
    let mut entries: Vec<(f64, i8)> = Vec::with_capacity(dim);
    for pair in unitary_eigenphases(&u)? {
        let eps = fold_to_zone(-pair.phase / period, model.params.omega);
        let p_expect: f64 = pair
            .vector
            .iter()
            .enumerate()
            .map(|(l, z)| (z.conj() * pair.vector[dim - 1 - l]).re)
            .sum();
        entries.push((eps, if p_expect >= 0.0 { 1 } else { -1 }));
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(FloquetResult {
        quasi_energies: entries.iter().map(|e| e.0).collect(),
        parities: entries.iter().map(|e| e.1).collect(),
        period,
        unitarity_defect: u.unitarity_defect(),
    })
}

/// Quasi-energy spectra over a g₁ scan. Points are evaluated concurrently;
/// results are returned in input order.
pub fn sweep_quasi_energies(
    base: &ModelParams,
    g1_values: &[f64],
) -> Result<Vec<FloquetResult>> {
    for w in g1_values.windows(2) {
        if w[1] < w[0] {
            return Err(Error::config("g1 sweep values must be sorted ascending"));
        }
    }
    if g1_values.iter().any(|g| *g < 0.0) {
        return Err(Error::config("g1 sweep values must be non-negative"));
    }
    g1_values
        .par_iter()
        .map(|&g1| {
            let params = ModelParams { g1, ..*base };
            let model = build_lattice(&params)?;
            quasi_energies(&model)
        })
        .collect()
}

/// CSV export: one row per (sweep point, band).
pub fn write_sweep_csv(
    g1_values: &[f64],
    results: &[FloquetResult],
    mut w: impl Write,
) -> Result<()> {
    writeln!(w, "g1_mm_inv,band_index,quasi_energy_mm_inv,parity")?;
    for (g1, res) in g1_values.iter().zip(results) {
        for (band, (eps, parity)) in res.quasi_energies.iter().zip(&res.parities).enumerate() {
            writeln!(w, "{g1},{band},{eps},{parity}")?;
        }
    }
    Ok(())
}

/// Which opposite-parity gap a crossing search tracks.
#[derive(Clone, Copy, Debug)]
pub enum PairSelector {
    /// the smallest gap over all opposite-parity pairs
    NearestOppositeParity,
    /// a specific pair, indexed within the sorted even / odd classes
    Pair { even: usize, odd: usize },
}

/// Distance on the quasi-energy circle of circumference ω.
fn circular_distance(a: f64, b: f64, omega: f64) -> f64 {
    let d = (a - b).rem_euclid(omega);
    d.min(omega - d)
}

/// Opposite-parity gap for a spectrum under the given selector.
pub fn opposite_parity_gap(result: &FloquetResult, selector: PairSelector, omega: f64) -> Result<f64> {
    let evens = result.class(1);
    let odds = result.class(-1);
    match selector {
        PairSelector::NearestOppositeParity => {
            let mut best = f64::INFINITY;
            for e in &evens {
                for o in &odds {
                    best = best.min(circular_distance(*e, *o, omega));
                }
            }
            if best.is_finite() {
                Ok(best)
            } else {
                Err(Error::domain("spectrum has no opposite-parity pair"))
            }
        }
        PairSelector::Pair { even, odd } => {
            let e = *evens
                .get(even)
                .ok_or_else(|| Error::config(format!("even band index {even} out of range")))?;
            let o = *odds
                .get(odd)
                .ok_or_else(|| Error::config(format!("odd band index {odd} out of range")))?;
            Ok(circular_distance(e, o, omega))
        }
    }
}

/// A refined gap minimum.
#[derive(Clone, Copy, Debug)]
pub struct Crossing {
    /// drive amplitude at the gap minimum, mm⁻¹
    pub g1: f64,
    /// gap at the minimum, mm⁻¹
    pub gap: f64,
}

/// Locate the opposite-parity gap minimum inside a bracket by golden-section
/// refinement, to relative g₁ accuracy 1e-4. The bracket must contain one
/// interior local minimum; a minimum on the boundary or a flat gap profile
/// is reported as a search failure rather than a fabricated root.
pub fn find_crossing(
    base: &ModelParams,
    bracket: (f64, f64),
    selector: PairSelector,
) -> Result<Crossing> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::config(format!("invalid bracket [{lo}, {hi}]")));
    }
    let gap_at = |g1: f64| -> Result<f64> {
        let params = ModelParams { g1, ..*base };
        let model = build_lattice(&params)?;
        let res = quasi_energies(&model)?;
        opposite_parity_gap(&res, selector, base.omega)
    };

    // coarse scan to isolate the interior minimum
    let n_scan = 17;
    let mut scan = Vec::with_capacity(n_scan);
    for i in 0..n_scan {
        let g1 = lo + (hi - lo) * i as f64 / (n_scan - 1) as f64;
        scan.push((g1, gap_at(g1)?));
    }
    let (i_min, &(_, gap_min)) = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    let gap_max = scan.iter().map(|s| s.1).fold(0.0, f64::max);
    if gap_max - gap_min < 1e-10 * base.omega {
        return Err(Error::search(
            "gap is flat over the bracket; no crossing to refine",
        ));
    }
    if i_min == 0 || i_min == n_scan - 1 {
        return Err(Error::search(
            "gap minimum lies on the bracket boundary; no interior minimum",
        ));
    }

    // golden-section refinement inside the isolating sub-bracket
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = scan[i_min - 1].0;
    let mut b = scan[i_min + 1].0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = gap_at(x1)?;
    let mut f2 = gap_at(x2)?;
    let tol = 1e-4 * 0.5 * (lo + hi);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = gap_at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = gap_at(x2)?;
        }
    }
    let g1_star = 0.5 * (a + b);
    Ok(Crossing { g1: g1_star, gap: gap_at(g1_star)? })
}
