//! Split-step pseudospectral solver for the paraxial wave equation
//!
//! i λ̄ ∂_z φ = −(λ̄²/(2 n_s)) ∂_x² φ + [n_s − n(x,z)] φ
//!
//! on longitudinally modulated waveguide arrays. Transverse coordinates are
//! in μm, the propagation coordinate is reported in mm to match the chain
//! modules. Each step is a symmetric product: half potential phase at z,
//! full spectral kinetic factor, half potential phase at z+dz, then the
//! edge absorber.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::designer::ArrayDesign;
use crate::error::{Error, Result};

/// Operating wavelength and substrate of the optical system.
#[derive(Clone, Copy, Debug)]
pub struct OpticalConstants {
    /// vacuum wavelength, μm
    pub lambda_um: f64,
    /// substrate refractive index
    pub n_s: f64,
}

impl Default for OpticalConstants {
    /// HeNe line in fused silica.
    fn default() -> Self {
        OpticalConstants { lambda_um: 0.633, n_s: 1.45 }
    }
}

impl OpticalConstants {
    pub fn new(lambda_um: f64, n_s: f64) -> Result<Self> {
        if !(lambda_um > 0.0) || !(n_s > 0.0) {
            return Err(Error::config("wavelength and substrate index must be positive"));
        }
        Ok(OpticalConstants { lambda_um, n_s })
    }

    /// reduced wavelength λ̄ = λ/(2π), μm
    pub fn lambdabar_um(&self) -> f64 {
        self.lambda_um / TAU
    }
}

/// Uniform transverse grid with longitudinal step and edge absorber.
#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub x_min_um: f64,
    pub x_max_um: f64,
    pub n_points: usize,
    /// longitudinal step, μm
    pub dz_um: f64,
    /// absorbing margin on each side, μm
    pub absorber_width_um: f64,
    /// peak per-step attenuation of the raised-cosine absorber, in [0, 1)
    pub absorber_strength: f64,
}

impl Grid {
    pub fn new(
        x_min_um: f64,
        x_max_um: f64,
        n_points: usize,
        dz_um: f64,
        absorber_width_um: f64,
        absorber_strength: f64,
    ) -> Result<Self> {
        if !(x_max_um > x_min_um) {
            return Err(Error::config("grid needs x_max > x_min"));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::config(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(dz_um > 0.0) {
            return Err(Error::config("dz must be > 0"));
        }
        if absorber_width_um < 0.0 || 2.0 * absorber_width_um >= x_max_um - x_min_um {
            return Err(Error::config("absorber regions must fit inside the grid"));
        }
        if !(0.0..1.0).contains(&absorber_strength) {
            return Err(Error::config("absorber_strength must be in [0, 1)"));
        }
        Ok(Grid { x_min_um, x_max_um, n_points, dz_um, absorber_width_um, absorber_strength })
    }

    /// Default grid for a device occupying [x_lo, x_hi]: 30 μm margins,
    /// 10 μm absorbers, dz = 1 μm.
    pub fn for_device(x_lo_um: f64, x_hi_um: f64, n_points: usize) -> Result<Self> {
        Grid::new(x_lo_um - 30.0, x_hi_um + 30.0, n_points, 1.0, 10.0, 0.05)
    }

    pub fn dx_um(&self) -> f64 {
        (self.x_max_um - self.x_min_um) / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min_um + i as f64 * self.dx_um()
    }

    /// FFT-ordered angular spatial frequency of bin j, μm⁻¹.
    pub fn k(&self, j: usize) -> f64 {
        let n = self.n_points;
        let f = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        TAU * f / (n as f64 * self.dx_um())
    }

    fn absorber_mask(&self) -> Vec<f64> {
        let w = self.absorber_width_um;
        (0..self.n_points)
            .map(|i| {
                let x = self.x(i);
                let edge = (self.x_min_um + w - x).max(x - (self.x_max_um - w));
                if edge <= 0.0 || w == 0.0 {
                    1.0
                } else {
                    let xi = (edge / w).min(1.0);
                    1.0 - self.absorber_strength * (0.5 - 0.5 * (std::f64::consts::PI * xi).cos())
                }
            })
            .collect()
    }
}

/// Sampled complex optical envelope on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    pub grid: Grid,
    pub phi: Vec<C64>,
    /// current propagation distance, mm
    pub z_mm: f64,
}

impl Field {
    pub fn new(grid: Grid, phi: Vec<C64>, z_mm: f64) -> Result<Self> {
        if phi.len() != grid.n_points {
            return Err(Error::contract(format!(
                "field length {} does not match grid ({} points)",
                phi.len(),
                grid.n_points
            )));
        }
        Ok(Field { grid, phi, z_mm })
    }

    /// Gaussian envelope exp(−(x−c)²/(2w₀²)).
    pub fn gaussian(grid: Grid, center_um: f64, w0_um: f64) -> Self {
        let phi = (0..grid.n_points)
            .map(|i| {
                let u = (grid.x(i) - center_um) / w0_um;
                C64::new((-0.5 * u * u).exp(), 0.0)
            })
            .collect();
        Field { grid, phi, z_mm: 0.0 }
    }

    /// ∫|φ|² dx
    pub fn power(&self) -> f64 {
        self.phi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx_um()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.phi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Rescale to unit power.
    pub fn normalize_power(&mut self) -> Result<()> {
        let p = self.power();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::numerical("cannot normalize a zero-power field"));
        }
        let s = 1.0 / p.sqrt();
        for z in &mut self.phi {
            *z *= s;
        }
        Ok(())
    }

    /// First moment ⟨x⟩ of |φ|², μm. Errors on zero power.
    pub fn center_of_mass(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, z) in self.phi.iter().enumerate() {
            let w = z.norm_sqr();
            num += w * self.grid.x(i);
            den += w;
        }
        if den <= 0.0 || !den.is_finite() {
            return Err(Error::numerical("center of mass undefined for zero power"));
        }
        Ok(num / den)
    }

    /// Fraction of the total power at x > x_split.
    pub fn power_fraction_right_of(&self, x_split_um: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, z) in self.phi.iter().enumerate() {
            let w = z.norm_sqr();
            den += w;
            if self.grid.x(i) > x_split_um {
                num += w;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Normalized waveguide profile G(x) = [erf((x+w)/Dx) − erf((x−w)/Dx)] / (2 erf(w/Dx)).
pub fn profile_g(x_um: f64, w_um: f64, diffusion_um: f64) -> f64 {
    (libm::erf((x_um + w_um) / diffusion_um) - libm::erf((x_um - w_um) / diffusion_um))
        / (2.0 * libm::erf(w_um / diffusion_um))
}

/// The z-independent pieces of the index profile: n(x,z) − n_s =
/// base(x) + sin(ωz)·modulation(x).
pub(crate) fn profile_components(
    design: &ArrayDesign,
    grid: &Grid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    for g in &design.guides {
        if g.x_um < grid.x_min_um || g.x_um > grid.x_max_um {
            return Err(Error::config(format!(
                "waveguide center {} μm lies outside the grid [{}, {}]",
                g.x_um, grid.x_min_um, grid.x_max_um
            )));
        }
    }
    let n = grid.n_points;
    let mut base = vec![0.0; n];
    let mut modu = vec![0.0; n];
    for g in &design.guides {
        for i in 0..n {
            let gg = profile_g(grid.x(i) - g.x_um, design.w_um, design.diffusion_um);
            base[i] += design.dn_base * gg;
            modu[i] += g.m_contrast * gg;
        }
    }
    Ok((base, modu))
}

/// Index elevation n(x,z) − n_s sampled on the grid.
pub fn index_profile(design: &ArrayDesign, z_mm: f64, grid: &Grid) -> Result<Vec<f64>> {
    if z_mm < 0.0 || z_mm > design.length_mm * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "z = {z_mm} mm outside device length {} mm",
            design.length_mm
        )));
    }
    let (base, modu) = profile_components(design, grid)?;
    let s = (design.omega_mm_inv * z_mm).sin();
    Ok(base.iter().zip(&modu).map(|(b, m)| b + s * m).collect())
}

/// Outcome flags of a single split step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepInfo {
    /// spectral power in the outer 10% of k-space exceeded 1e-6 of the total
    pub aliasing: bool,
}

/// Reusable stepping engine: profiles, spectral factors and FFT plans are
/// prepared once per (grid, design) pair.
pub struct SplitStepper {
    grid: Grid,
    omega_mm_inv: f64,
    base: Vec<f64>,
    modu: Vec<f64>,
    /// kinetic factor with the inverse-FFT 1/n normalization folded in
    kinetic: Vec<C64>,
    absorber: Vec<f64>,
    half_phase_per_dn: f64,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl SplitStepper {
    pub fn new(grid: Grid, design: &ArrayDesign, constants: &OpticalConstants) -> Result<Self> {
        let (base, modu) = profile_components(design, &grid)?;
        // absorbers must not overlap any waveguide core
        let margin = grid.absorber_width_um;
        for g in &design.guides {
            if g.x_um - design.w_um < grid.x_min_um + margin
                || g.x_um + design.w_um > grid.x_max_um - margin
            {
                return Err(Error::config(format!(
                    "absorber overlaps the waveguide core at {} μm",
                    g.x_um
                )));
            }
        }
        let lambdabar = constants.lambdabar_um();
        let n = grid.n_points;
        let inv_n = 1.0 / n as f64;
        let kinetic = (0..n)
            .map(|j| {
                let k = grid.k(j);
                C64::from_polar(inv_n, -lambdabar * k * k * grid.dz_um / (2.0 * constants.n_s))
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        let scratch_len =
            fft_fwd.get_inplace_scratch_len().max(fft_inv.get_inplace_scratch_len());
        Ok(SplitStepper {
            grid,
            omega_mm_inv: design.omega_mm_inv,
            base,
            modu,
            kinetic,
            absorber: grid.absorber_mask(),
            half_phase_per_dn: grid.dz_um / (2.0 * lambdabar),
            fft_fwd,
            fft_inv,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        })
    }

    fn half_potential(&self, field: &mut Field, z_mm: f64) {
        let s = (self.omega_mm_inv * z_mm).sin();
        let hf = self.half_phase_per_dn;
        for ((phi, b), m) in field.phi.iter_mut().zip(&self.base).zip(&self.modu) {
            *phi *= C64::from_polar(1.0, (b + s * m) * hf);
        }
    }

    /// Advance by one dz. Returns spectral-resolution diagnostics.
    pub fn step(&mut self, field: &mut Field) -> Result<StepInfo> {
        if field.phi.len() != self.grid.n_points {
            return Err(Error::contract("field does not match the stepper grid"));
        }
        let dz_mm = self.grid.dz_um * 1e-3;
        let z0 = field.z_mm;
        self.half_potential(field, z0);

        self.fft_fwd.process_with_scratch(&mut field.phi, &mut self.scratch);
        // aliasing guard on the outer 10% of k-bins while in the transform domain
        let n = self.grid.n_points;
        let guard = n / 20; // top 5% of |k| on each branch
        let mut outer = 0.0;
        let mut total = 0.0;
        for (j, z) in field.phi.iter().enumerate() {
            let p = z.norm_sqr();
            total += p;
            let f_idx = if j <= n / 2 { j } else { n - j };
            if f_idx > n / 2 - guard {
                outer += p;
            }
        }
        let aliasing = total > 0.0 && outer > 1e-6 * total;
        for (z, k) in field.phi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.fft_inv.process_with_scratch(&mut field.phi, &mut self.scratch);

        self.half_potential(field, z0 + dz_mm);
        if self.grid.absorber_strength > 0.0 {
            for (z, a) in field.phi.iter_mut().zip(&self.absorber) {
                *z *= *a;
            }
        }
        field.z_mm = z0 + dz_mm;
        Ok(StepInfo { aliasing })
    }
}

/// One symmetric split step over dz_um (one-shot convenience wrapper; for
/// propagation loops build a [`SplitStepper`] once).
pub fn split_step(
    field: &mut Field,
    design: &ArrayDesign,
    constants: &OpticalConstants,
    dz_um: f64,
) -> Result<StepInfo> {
    let mut grid = field.grid;
    grid.dz_um = dz_um;
    let mut stepper = SplitStepper::new(grid, design, constants)?;
    let mut f = Field { grid, phi: std::mem::take(&mut field.phi), z_mm: field.z_mm };
    let info = stepper.step(&mut f)?;
    field.phi = f.phi;
    field.z_mm = f.z_mm;
    Ok(info)
}

/// Fundamental bound mode of a static index profile by imaginary-distance
/// propagation, normalized each step until the shape converges. Returns the
/// unit-power mode and its propagation-constant shift relative to n_s k₀,
/// in mm⁻¹.
pub fn fundamental_mode(
    profile: &[f64],
    grid: &Grid,
    constants: &OpticalConstants,
) -> Result<(Field, f64)> {
    if profile.len() != grid.n_points {
        return Err(Error::contract("profile length does not match grid"));
    }
    let lambdabar = constants.lambdabar_um();
    let dtau = grid.dz_um;
    let n = grid.n_points;
    let half_pot: Vec<f64> =
        profile.iter().map(|dn| (dn * dtau / (2.0 * lambdabar)).exp()).collect();
    let kinetic: Vec<f64> = (0..n)
        .map(|j| {
            let k = grid.k(j);
            (-lambdabar * k * k * dtau / (2.0 * constants.n_s)).exp() / n as f64
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft_fwd = planner.plan_fft_forward(n);
    let fft_inv = planner.plan_fft_inverse(n);
    let mut scratch = vec![
        C64::new(0.0, 0.0);
        fft_fwd.get_inplace_scratch_len().max(fft_inv.get_inplace_scratch_len())
    ];

    // start from a Gaussian over the profile peak
    let i_max = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .ok_or_else(|| Error::contract("empty profile"))?;
    if profile[i_max] <= 0.0 {
        return Err(Error::numerical("profile has no index elevation; no bound mode"));
    }
    let mut field = Field::gaussian(*grid, grid.x(i_max), 2.0);
    field.normalize_power()?;

    let dx = grid.dx_um();
    let mut prev = field.phi.clone();
    let mut delta_beta_um;
    for step in 0..100_000 {
        // real-valued split factors: imaginary-distance version of one step
        for (z, hp) in field.phi.iter_mut().zip(&half_pot) {
            *z *= *hp;
        }
        fft_fwd.process_with_scratch(&mut field.phi, &mut scratch);
        for (z, k) in field.phi.iter_mut().zip(&kinetic) {
            *z *= *k;
        }
        fft_inv.process_with_scratch(&mut field.phi, &mut scratch);
        for (z, hp) in field.phi.iter_mut().zip(&half_pot) {
            *z *= *hp;
        }
        let growth_sq = field.phi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        if !(growth_sq > 0.0) || !growth_sq.is_finite() {
            return Err(Error::numerical("imaginary-distance propagation collapsed"));
        }
        delta_beta_um = 0.5 * growth_sq.ln() / dtau;
        let scale = 1.0 / growth_sq.sqrt();
        for z in &mut field.phi {
            *z *= scale;
        }
        let change: f64 = field
            .phi
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * dx.sqrt();
        if change < 1e-10 && step > 3 {
            field.z_mm = 0.0;
            return Ok((field, delta_beta_um * 1e3));
        }
        prev.copy_from_slice(&field.phi);
    }
    Err(Error::numerical(
        "fundamental mode did not converge in 1e5 steps; no bound mode at this contrast",
    ))
}

/// Input excitation for an array run: the fundamental mode of the isolated
/// first guide at its unmodulated contrast, embedded on the full grid with
/// unit power. Launching the guide mode rather than a Gaussian keeps the
/// coupling transient radiation-free.
pub fn input_mode_for(
    design: &ArrayDesign,
    grid: &Grid,
    constants: &OpticalConstants,
) -> Result<Field> {
    let first = *design
        .guides
        .first()
        .ok_or_else(|| Error::config("design has no guides"))?;
    let solo = ArrayDesign {
        guides: vec![crate::designer::Guide { x_um: first.x_um, m_contrast: 0.0 }],
        warnings: vec![],
        model: None,
        ..design.clone()
    };
    let profile = index_profile(&solo, 0.0, grid)?;
    let (mut mode, _) = fundamental_mode(&profile, grid, constants)?;
    mode.normalize_power()?;
    Ok(mode)
}

/// Sampled beam propagation record.
#[derive(Clone, Debug)]
pub struct BeamTrajectory {
    pub z_mm: Vec<f64>,
    /// |φ(x)|² snapshots (one row per sampled z)
    pub intensity: Vec<Vec<f64>>,
    pub x_com_um: Vec<f64>,
    /// imbalance retrieved from the beam center of mass,
    /// S ≈ 1 − 2(⟨x⟩−x₀)/(N d_r)
    pub s_retrieved: Vec<f64>,
    pub power: Vec<f64>,
    /// number of steps that tripped the spectral-resolution guard
    pub aliasing_steps: usize,
}

impl BeamTrajectory {
    pub fn len(&self) -> usize {
        self.z_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_mm.is_empty()
    }

    /// Beam observables CSV: z_mm, x_com_um, S_retrieved.
    pub fn write_beam_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "z_mm,x_com_um,S_retrieved")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{}", self.z_mm[i], self.x_com_um[i], self.s_retrieved[i])?;
        }
        Ok(())
    }

    /// Raw little-endian f64 intensity matrix (rows = z samples).
    pub fn write_intensity_binary(&self, mut w: impl Write) -> Result<()> {
        for row in &self.intensity {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Propagate an input field through a designed array, sampling observables
/// every `sample_every` steps (plus start and end).
pub fn propagate(
    design: &ArrayDesign,
    input: &Field,
    constants: &OpticalConstants,
    length_mm: f64,
    sample_every: usize,
) -> Result<BeamTrajectory> {
    if sample_every == 0 {
        return Err(Error::config("sample_every must be >= 1"));
    }
    if !(length_mm > 0.0) {
        return Err(Error::config("propagation length must be > 0"));
    }
    let n_guides = design.guides.len();
    if n_guides < 2 {
        return Err(Error::config("design must contain at least two guides"));
    }
    let x0 = design.guides[0].x_um;
    let n_chain = (n_guides - 1) as f64;
    let d_r = design.d_r_um;

    let mut stepper = SplitStepper::new(input.grid, design, constants)?;
    let mut field = input.clone();
    let mut traj = BeamTrajectory {
        z_mm: Vec::new(),
        intensity: Vec::new(),
        x_com_um: Vec::new(),
        s_retrieved: Vec::new(),
        power: Vec::new(),
        aliasing_steps: 0,
    };
    let record = |field: &Field, traj: &mut BeamTrajectory| -> Result<()> {
        let com = field.center_of_mass()?;
        traj.z_mm.push(field.z_mm);
        traj.intensity.push(field.intensity());
        traj.x_com_um.push(com);
        traj.s_retrieved.push(1.0 - 2.0 * (com - x0) / (n_chain * d_r));
        traj.power.push(field.power());
        Ok(())
    };

    let n_steps = (length_mm * 1e3 / input.grid.dz_um).round() as usize;
    record(&field, &mut traj)?;
    for step in 1..=n_steps {
        let info = stepper.step(&mut field)?;
        if info.aliasing {
            traj.aliasing_steps += 1;
        }
        if step % sample_every == 0 || step == n_steps {
            record(&field, &mut traj)?;
        }
    }
    Ok(traj)
}
