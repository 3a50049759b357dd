//! High-frequency effective model of the driven chain.
//!
//! Cycle-averaging the gauge-frame equations replaces each bond coupling by
//!
//! σ_l = κ_l · e^{iφ_l} · J₀(g₁(N−2l−1)/ω)
//!
//! so a bond can be switched off by driving at an amplitude that puts its
//! Bessel argument on a root of J₀ — the selective tunneling-suppression
//! condition. The phase convention here comes from the gauge transform
//! a_l = c_l·exp(iV_lΓ(t)) with Γ = ∫₀ᵗ g dξ, which for g = g₁sin(ωt+φ₀)
//! gives φ_l = (N−2l−1)(g₁/ω)cos φ₀. Only gauge-invariant quantities are
//! meaningful; observables do not depend on this choice.

mod bessel;

pub use bessel::{bessel_j0, j0_root, MAX_ROOT_INDEX};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolve::{self, Trajectory};
use crate::lattice::{build_lattice, AmplitudeVector, LatticeModel, ModelParams};

/// Drive amplitude that suppresses bond l₀: g₁ = j₀ₖ·ω/(N−2l₀−1).
///
/// Requires N−2l₀−1 > 0, i.e. the bond exists and its Bessel argument is
/// nonzero.
pub fn cdt_amplitude(n: usize, l0: usize, omega: f64, root_index: usize) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::config(format!("omega must be > 0, got {omega}")));
    }
    let denom = n as i64 - 2 * l0 as i64 - 1;
    if denom <= 0 {
        return Err(Error::domain(format!(
            "no suppressible bond: N−2l0−1 = {denom} must be positive (N={n}, l0={l0})"
        )));
    }
    Ok(j0_root(root_index)? * omega / denom as f64)
}

/// The averaged chain: complex effective couplings over the undriven base.
#[derive(Clone, Debug)]
pub struct EffectiveModel {
    /// σ_l, l = 0..N−1, mm⁻¹
    pub sigma: Vec<C64>,
    pub base: LatticeModel,
}

/// Bessel argument of bond l: g₁(N−2l−1)/ω.
pub fn bessel_argument(params: &ModelParams, l: usize) -> f64 {
    params.g1 * (params.n as f64 - 2.0 * l as f64 - 1.0) / params.omega
}

/// Cycle-averaged effective couplings for the given drive.
pub fn effective_couplings(params: &ModelParams) -> Result<EffectiveModel> {
    let base = build_lattice(params)?;
    let cos_phi0 = params.drive_phase.cos();
    let sigma = (0..params.n)
        .map(|l| {
            let arg = bessel_argument(params, l);
            let phase = (params.g1 / params.omega)
                * (params.n as f64 - 2.0 * l as f64 - 1.0)
                * cos_phi0;
            C64::from_polar(1.0, phase) * (base.kappa[l] * bessel_j0(arg))
        })
        .collect();
    Ok(EffectiveModel { sigma, base })
}

impl EffectiveModel {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// da/dt = −i(σ_l a_{l+1} + σ*_{l−1} a_{l−1})
    pub(crate) fn rhs(&self, a: &[C64], out: &mut [C64]) {
        let n = self.base.params.n;
        let minus_i = C64::new(0.0, -1.0);
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        for l in 0..n {
            let s = self.sigma[l];
            out[l] += s * a[l + 1];
            out[l + 1] += s.conj() * a[l];
        }
        for o in out.iter_mut() {
            *o = minus_i * *o;
        }
    }

    /// Hermitian matrix of the averaged generator (for spectral comparisons).
    pub fn dense_hamiltonian(&self) -> crate::linalg::CMatrix {
        let dim = self.dim();
        let mut h = crate::linalg::CMatrix::zeros(dim, dim);
        for l in 0..dim - 1 {
            h[(l, l + 1)] = self.sigma[l];
            h[(l + 1, l)] = self.sigma[l].conj();
        }
        h
    }
}

/// Integrate the averaged equations. Same stepping contract as
/// [`evolve::integrate`]; the system is autonomous, so the drive-resolution
/// precondition is checked against the base model's ω for consistency.
pub fn integrate_effective(
    eff: &EffectiveModel,
    a0: &AmplitudeVector,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if a0.len() != eff.dim() {
        return Err(Error::contract(format!(
            "initial state length {} does not match dimension {}",
            a0.len(),
            eff.dim()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be > 0, got {dt}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::config(format!("t_end must be >= 0, got {t_end}")));
    }
    if sample_every == 0 {
        return Err(Error::config("sample_every must be >= 1"));
    }

    let n = eff.base.params.n;
    let mut traj = Trajectory {
        times: Vec::new(),
        amplitudes: Vec::new(),
        occupations: Vec::new(),
        imbalance: Vec::new(),
    };
    let mut push_sample = |t: f64, a: &[C64]| {
        let occ: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
        let s = evolve::imbalance_of_occupations(&occ, n);
        traj.times.push(t);
        traj.amplitudes.push(a.to_vec());
        traj.occupations.push(occ);
        traj.imbalance.push(s);
    };
    if t_end == 0.0 {
        push_sample(0.0, a0.as_slice());
        return Ok(traj);
    }
    let mut a = a0.as_slice().to_vec();
    evolve::rk4_drive(
        &mut a,
        0.0,
        t_end,
        dt,
        |_, y, out| eff.rhs(y, out),
        |step, t, y| {
            if step % sample_every == 0 || t == t_end {
                push_sample(t, y);
            }
        },
    )?;
    Ok(traj)
}
