//! Mode implementations: resolve layered options, run the core modules,
//! write artifacts plus a manifest per run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fockbeam::averaging::{cdt_amplitude, effective_couplings, integrate_effective};
use fockbeam::bpm::{input_mode_for, propagate, Grid, OpticalConstants};
use fockbeam::designer::{
    calibrate_beta, calibrate_coupling, design_array, ArrayDesign, CouplingCalibration,
    WaveguideProfile,
};
use fockbeam::evolve::{default_dt, integrate, Trajectory};
use fockbeam::floquet::{sweep_quasi_energies, write_sweep_csv};
use fockbeam::lattice::{build_lattice, AmplitudeVector, ModelParams};
use fockbeam::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{
    ensure_out_dir, pick, pick_opt, resolve_out_dir, Manifest, RunConfig,
};

#[derive(Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; command-line flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory (overrides FOCKBEAM_OUTDIR and the config file)
    #[arg(long, global = true)]
    pub out_dir: Option<String>,
    /// stem for output file names (default: the mode name)
    #[arg(long, global = true)]
    pub prefix: Option<String>,
}

impl CommonArgs {
    pub fn with_prefix(mut self, prefix: &str) -> Self {
        self.prefix = Some(prefix.to_owned());
        self
    }
}

#[derive(Clone, Default, Args)]
pub struct ModelArgs {
    /// particle count N
    #[arg(long)]
    pub n: Option<usize>,
    /// tunneling rate v, mm⁻¹
    #[arg(long)]
    pub v: Option<f64>,
    /// drive angular frequency ω, mm⁻¹
    #[arg(long)]
    pub omega: Option<f64>,
    /// drive amplitude g₁, mm⁻¹ (exclusive with --l0)
    #[arg(long)]
    pub g1: Option<f64>,
    /// derive g₁ from the tunneling-suppression condition for this bond
    #[arg(long)]
    pub l0: Option<usize>,
    /// J₀ root index for --l0 (default 1)
    #[arg(long)]
    pub root: Option<usize>,
    /// drive phase, rad
    #[arg(long)]
    pub drive_phase: Option<f64>,
}

pub struct RunSetup {
    pub file: RunConfig,
    pub out_dir: PathBuf,
    pub prefix: String,
}

pub fn setup(common: &CommonArgs, mode: &str) -> Result<RunSetup> {
    let file = match &common.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            cfg.check_mode(mode)?;
            cfg
        }
        None => RunConfig::default(),
    };
    let out_dir = resolve_out_dir(common.out_dir.as_deref(), file.out_dir.as_deref());
    ensure_out_dir(&out_dir)?;
    let prefix = common
        .prefix
        .clone()
        .or_else(|| file.prefix.clone())
        .unwrap_or_else(|| mode.replace('-', "_"));
    Ok(RunSetup { file, out_dir, prefix })
}

/// How g₁ was obtained, echoed into manifests.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(untagged)]
enum G1Origin {
    Explicit { g1_mm_inv: f64 },
    Derived { g1_mm_inv: f64, l0: usize, root_index: usize },
}

fn resolve_model(args: &ModelArgs, file: &RunConfig) -> Result<(ModelParams, G1Origin)> {
    let n = pick(args.n, file.n, 10);
    let v = pick(args.v, file.v_mm_inv, 0.08);
    let omega = pick(args.omega, file.omega_mm_inv, 0.628);
    let g1_opt = pick_opt(args.g1, file.g1_mm_inv);
    let l0_opt = pick_opt(args.l0, file.l0);
    let (g1, origin) = match (g1_opt, l0_opt) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "fields g1 and l0 are mutually exclusive; give exactly one",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "one of the fields g1 or l0 is required to fix the drive amplitude",
            ))
        }
        (Some(g1), None) => (g1, G1Origin::Explicit { g1_mm_inv: g1 }),
        (None, Some(l0)) => {
            let root = pick(args.root, file.root_index, 1);
            let g1 = cdt_amplitude(n, l0, omega, root)?;
            (g1, G1Origin::Derived { g1_mm_inv: g1, l0, root_index: root })
        }
    };
    let mut params = ModelParams::new(n, v, g1, omega)?;
    if let Some(phase) = pick_opt(args.drive_phase, file.drive_phase_rad) {
        params = params.with_drive_phase(phase);
    }
    Ok((params, origin))
}

fn parse_initial(text: &str, dim: usize) -> Result<AmplitudeVector> {
    if text == "uniform" {
        return AmplitudeVector::normalized(vec![C64::new(1.0, 0.0); dim]);
    }
    if let Some(rest) = text.strip_prefix("delta:") {
        let l: usize = rest
            .parse()
            .map_err(|_| Error::config(format!("bad initial state '{text}'")))?;
        return AmplitudeVector::delta(dim, l);
    }
    Err(Error::config(format!(
        "unknown initial state '{text}' (expected delta:L or uniform)"
    )))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn trajectory_csvs(
    traj: &Trajectory,
    out_dir: &Path,
    prefix: &str,
) -> Result<(String, String)> {
    let main_name = format!("{prefix}.csv");
    let amp_name = format!("{prefix}_amplitudes.csv");
    let mut buf = Vec::new();
    traj.write_occupations_csv(&mut buf)?;
    fs::write(out_dir.join(&main_name), &buf)?;
    buf.clear();
    traj.write_amplitudes_csv(&mut buf)?;
    fs::write(out_dir.join(&amp_name), &buf)?;
    Ok((main_name, amp_name))
}

#[allow(clippy::too_many_arguments)]
pub fn run_evolve(
    common: &CommonArgs,
    model_args: &ModelArgs,
    t_end: Option<f64>,
    dt: Option<f64>,
    sample_every: Option<usize>,
    initial: Option<String>,
    effective: bool,
) -> Result<()> {
    let mode = if effective { "evolve-effective" } else { "evolve" };
    let s = setup(common, mode)?;
    let (params, origin) = resolve_model(model_args, &s.file)?;
    let t_end = pick(t_end, s.file.t_end_mm, 100.0);
    let dt = pick(dt, s.file.dt_mm, default_dt(params.omega));
    let sample_every = pick(sample_every, s.file.sample_every, 5);
    let initial = pick(initial, s.file.initial.clone(), "delta:0".to_owned());
    let c0 = parse_initial(&initial, params.dim())?;

    let traj = if effective {
        let eff = effective_couplings(&params)?;
        integrate_effective(&eff, &c0, t_end, dt, sample_every)?
    } else {
        let model = build_lattice(&params)?;
        integrate(&model, &c0, t_end, dt, sample_every)?
    };
    let (main_name, amp_name) = trajectory_csvs(&traj, &s.out_dir, &s.prefix)?;
    let resolved = json!({
        "model": {
            "n": params.n,
            "v_mm_inv": params.v,
            "omega_mm_inv": params.omega,
            "drive_phase_rad": params.drive_phase,
            "g1": origin,
        },
        "numerics": { "t_end_mm": t_end, "dt_mm": dt, "sample_every": sample_every },
        "initial": initial,
        "samples": traj.len(),
    });
    Manifest::new(mode, resolved, vec![main_name, amp_name]).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

pub fn run_floquet_sweep(
    common: &CommonArgs,
    model_args: &ModelArgs,
    g1_min: Option<f64>,
    g1_max: Option<f64>,
    points: Option<usize>,
) -> Result<()> {
    let s = setup(common, "floquet-sweep")?;
    if model_args.g1.is_some() || model_args.l0.is_some() {
        return Err(Error::config(
            "floquet-sweep scans g1; the fields g1/l0 do not apply (use g1_min/g1_max/points)",
        ));
    }
    let n = pick(model_args.n, s.file.n, 10);
    let v = pick(model_args.v, s.file.v_mm_inv, 0.08);
    let omega = pick(model_args.omega, s.file.omega_mm_inv, 0.628);
    let g1_min = pick(g1_min, s.file.g1_min_mm_inv, 0.0);
    let g1_max = pick(g1_max, s.file.g1_max_mm_inv, 0.35);
    let points = pick(points, s.file.g1_points, 200);
    if points < 1 || g1_max < g1_min {
        return Err(Error::config("need points >= 1 and g1_max >= g1_min"));
    }
    let base = ModelParams::new(n, v, 0.0, omega)?;
    let g1_values: Vec<f64> = if points == 1 {
        vec![g1_min]
    } else {
        (0..points)
            .map(|i| g1_min + (g1_max - g1_min) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let results = sweep_quasi_energies(&base, &g1_values)?;
    let name = format!("{}.csv", s.prefix);
    let mut buf = Vec::new();
    write_sweep_csv(&g1_values, &results, &mut buf)?;
    fs::write(s.out_dir.join(&name), &buf)?;
    let worst_defect = results.iter().map(|r| r.unitarity_defect).fold(0.0, f64::max);
    let resolved = json!({
        "model": { "n": n, "v_mm_inv": v, "omega_mm_inv": omega },
        "sweep": { "g1_min_mm_inv": g1_min, "g1_max_mm_inv": g1_max, "points": points },
        "worst_unitarity_defect": worst_defect,
    });
    Manifest::new("floquet-sweep", resolved, vec![name]).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

pub fn run_cdt_amplitude(
    common: &CommonArgs,
    n: Option<usize>,
    l0: Option<usize>,
    omega: Option<f64>,
    root: Option<usize>,
) -> Result<()> {
    let s = setup(common, "cdt-amplitude")?;
    let n = pick(n, s.file.n, 10);
    let l0 = pick_opt(l0, s.file.l0)
        .ok_or_else(|| Error::config("field l0 is required for cdt-amplitude"))?;
    let omega = pick(omega, s.file.omega_mm_inv, 0.628);
    let root = pick(root, s.file.root_index, 1);
    let g1 = cdt_amplitude(n, l0, omega, root)?;
    let record = json!({
        "N": n,
        "l0": l0,
        "omega_mm_inv": omega,
        "root_index": root,
        "g1_mm_inv": g1,
    });
    let name = format!("{}.json", s.prefix);
    write_text(&s.out_dir.join(&name), &format!("{:#}\n", record))?;
    Manifest::new("cdt-amplitude", record, vec![name]).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

/// Output of `calibrate`: the fitted spacing law, the contrast factor β and
/// the optical constants they were measured with.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationRecord {
    #[serde(flatten)]
    pub coupling: CouplingCalibration,
    pub beta: f64,
    pub lambda_um: f64,
    pub n_s: f64,
    pub w_um: f64,
    #[serde(rename = "Dx_um")]
    pub dx_um: f64,
}

pub fn compute_calibration(
    constants: &OpticalConstants,
    profile: &WaveguideProfile,
    dn: f64,
    d_min: f64,
    d_max: f64,
    points: usize,
) -> Result<CalibrationRecord> {
    if points < 2 {
        return Err(Error::config("need at least 2 calibration spacings"));
    }
    let ds: Vec<f64> = (0..points)
        .map(|i| d_min + (d_max - d_min) * i as f64 / (points - 1) as f64)
        .collect();
    let coupling = calibrate_coupling(&ds, constants, profile, dn)?;
    let beta = calibrate_beta(constants, profile, dn)?;
    Ok(CalibrationRecord {
        coupling,
        beta,
        lambda_um: constants.lambda_um,
        n_s: constants.n_s,
        w_um: profile.w_um,
        dx_um: profile.diffusion_um,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run_calibrate(
    common: &CommonArgs,
    dn: Option<f64>,
    d_min: Option<f64>,
    d_max: Option<f64>,
    points: Option<usize>,
    lambda: Option<f64>,
    n_s: Option<f64>,
    w: Option<f64>,
    dx_diff: Option<f64>,
) -> Result<()> {
    let s = setup(common, "calibrate")?;
    let dn = pick(dn, s.file.dn_base, 2e-3);
    let d_min = pick(d_min, s.file.d_min_um, 8.5);
    let d_max = pick(d_max, s.file.d_max_um, 10.5);
    let points = pick(points, s.file.d_points, 9);
    let constants = OpticalConstants::new(
        pick(lambda, s.file.lambda_um, 0.633),
        pick(n_s, s.file.n_s, 1.45),
    )?;
    let profile = WaveguideProfile {
        w_um: pick(w, s.file.w_um, 2.0),
        diffusion_um: pick(dx_diff, s.file.dx_um, 0.3),
    };
    let record = compute_calibration(&constants, &profile, dn, d_min, d_max, points)?;
    let name = format!("{}.json", s.prefix);
    write_text(
        &s.out_dir.join(&name),
        &format!("{}\n", serde_json::to_string_pretty(&record)?),
    )?;
    let resolved = serde_json::to_value(&record)?;
    Manifest::new("calibrate", resolved, vec![name]).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

pub fn load_calibration(path: &Path) -> Result<CalibrationRecord> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read calibration {}: {e}", path.display())))?;
    let rec: CalibrationRecord = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("invalid calibration {}: {e}", path.display())))?;
    Ok(rec)
}

pub fn run_design(
    common: &CommonArgs,
    model_args: &ModelArgs,
    calibration: Option<String>,
    length: Option<f64>,
    dn: Option<f64>,
) -> Result<()> {
    let s = setup(common, "design")?;
    let (params, origin) = resolve_model(model_args, &s.file)?;
    let length = pick(length, s.file.length_mm, 100.0);
    let cal_path = pick_opt(calibration, s.file.calibration_path.clone());
    let record = match cal_path {
        Some(p) => load_calibration(Path::new(&p))?,
        None => {
            let dn = pick(dn, s.file.dn_base, 2e-3);
            compute_calibration(
                &OpticalConstants::default(),
                &WaveguideProfile::default(),
                dn,
                8.5,
                10.5,
                9,
            )?
        }
    };
    let constants = OpticalConstants::new(record.lambda_um, record.n_s)?;
    let profile = WaveguideProfile { w_um: record.w_um, diffusion_um: record.dx_um };
    let design =
        design_array(&params, &record.coupling, record.beta, &profile, &constants, length)?;
    for warning in &design.warnings {
        eprintln!("warning: {warning}");
    }
    let name = format!("{}.json", s.prefix);
    write_text(&s.out_dir.join(&name), &format!("{}\n", design.to_json()?))?;
    let resolved = json!({
        "model": {
            "n": params.n,
            "v_mm_inv": params.v,
            "omega_mm_inv": params.omega,
            "g1": origin,
        },
        "length_mm": length,
        "calibration": serde_json::to_value(&record)?,
        "warnings": design.warnings,
    });
    Manifest::new("design", resolved, vec![name]).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

pub fn load_design(path: &Path) -> Result<ArrayDesign> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read design {}: {e}", path.display())))?;
    ArrayDesign::from_json(&text)
        .map_err(|e| Error::config(format!("invalid design {}: {e}", path.display())))
}

fn grid_for(design: &ArrayDesign, n_points: usize, dz_um: f64) -> Result<Grid> {
    let mut grid = Grid::for_device(design.x_first(), design.x_last(), n_points)?;
    grid.dz_um = dz_um;
    Ok(grid)
}

pub struct BpmOutputs {
    pub traj: fockbeam::bpm::BeamTrajectory,
    pub names: Vec<String>,
}

pub fn bpm_run_core(
    design: &ArrayDesign,
    out_dir: &Path,
    prefix: &str,
    length_mm: f64,
    n_points: usize,
    dz_um: f64,
    sample_every: usize,
) -> Result<BpmOutputs> {
    let constants = OpticalConstants::new(design.lambda_um, design.n_s)?;
    let grid = grid_for(design, n_points, dz_um)?;
    let input = input_mode_for(design, &grid, &constants)?;
    let traj = propagate(design, &input, &constants, length_mm, sample_every)?;
    if traj.aliasing_steps > 0 {
        eprintln!(
            "warning: spectral power reached the outer 10% of k-space on {} steps; \
             consider more grid points",
            traj.aliasing_steps
        );
    }

    let beam_name = format!("{prefix}.csv");
    let mut buf = Vec::new();
    traj.write_beam_csv(&mut buf)?;
    fs::write(out_dir.join(&beam_name), &buf)?;

    let bin_name = format!("{prefix}_intensity.bin");
    let mut bin = Vec::new();
    traj.write_intensity_binary(&mut bin)?;
    fs::write(out_dir.join(&bin_name), &bin)?;

    let meta_name = format!("{prefix}_intensity_meta.json");
    let meta = json!({
        "dtype": "f64le",
        "layout": "row-major [n_z, n_x]",
        "n_z": traj.len(),
        "n_x": n_points,
        "x_min_um": grid.x_min_um,
        "dx_um": grid.dx_um(),
        "z_mm": traj.z_mm,
        "intensity_file": bin_name,
    });
    write_text(&out_dir.join(&meta_name), &format!("{:#}\n", meta))?;
    Ok(BpmOutputs { traj, names: vec![beam_name, bin_name, meta_name] })
}

pub fn run_bpm(
    common: &CommonArgs,
    design_path: Option<String>,
    length: Option<f64>,
    n_points: Option<usize>,
    dz: Option<f64>,
    sample_every: Option<usize>,
) -> Result<()> {
    let s = setup(common, "bpm-run")?;
    let path = pick_opt(design_path, s.file.design_path.clone())
        .ok_or_else(|| Error::config("field design (path to design JSON) is required"))?;
    let design = load_design(Path::new(&path))?;
    let length = pick(length, s.file.length_mm, design.length_mm);
    let n_points = pick(n_points, s.file.n_points, 8192);
    let dz = pick(dz, s.file.dz_um, 1.0);
    let sample_every = pick(sample_every, s.file.bpm_sample_every, 500);
    let out = bpm_run_core(&design, &s.out_dir, &s.prefix, length, n_points, dz, sample_every)?;
    let resolved = json!({
        "design_path": path,
        "design": serde_json::to_value(&design)?,
        "grid": {
            "n_points": n_points,
            "dz_um": dz,
            "x_margin_um": 30.0,
            "absorber_width_um": 10.0,
        },
        "length_mm": length,
        "sample_every": sample_every,
        "aliasing_steps": out.traj.aliasing_steps,
    });
    Manifest::new("bpm-run", resolved, out.names).write(&s.out_dir, &s.prefix)?;
    Ok(())
}

/// Lattice trajectory sampled on the same z grid as a BPM run with sample
/// interval `interval_mm`.
pub fn lattice_on_interval(
    params: &ModelParams,
    t_end: f64,
    interval_mm: f64,
) -> Result<Trajectory> {
    let steps_per_interval = (interval_mm / default_dt(params.omega)).ceil().max(1.0);
    let dt = interval_mm / steps_per_interval;
    let model = build_lattice(params)?;
    let c0 = AmplitudeVector::delta(params.dim(), 0)?;
    integrate(&model, &c0, t_end, dt, steps_per_interval as usize)
}

pub struct CrossvalSummary {
    pub rms: f64,
    pub names: Vec<String>,
}

pub fn crossval_core(
    design: &ArrayDesign,
    params: &ModelParams,
    out_dir: &Path,
    prefix: &str,
    n_points: usize,
    dz_um: f64,
) -> Result<CrossvalSummary> {
    let sample_every = (500.0 / dz_um).round().max(1.0) as usize; // 0.5 mm
    let interval_mm = sample_every as f64 * dz_um * 1e-3;
    let out = bpm_run_core(
        design,
        out_dir,
        &format!("{prefix}_beam"),
        design.length_mm,
        n_points,
        dz_um,
        sample_every,
    )?;
    let lattice = lattice_on_interval(params, design.length_mm, interval_mm)?;
    if lattice.len() != out.traj.len() {
        return Err(Error::numerical(format!(
            "sample mismatch between lattice ({}) and beam ({}) records",
            lattice.len(),
            out.traj.len()
        )));
    }
    let mut sum2 = 0.0;
    let name = format!("{prefix}.csv");
    let mut csv = String::from("z_mm,S_lattice,S_bpm\n");
    for i in 0..lattice.len() {
        let d = lattice.imbalance[i] - out.traj.s_retrieved[i];
        sum2 += d * d;
        csv.push_str(&format!(
            "{},{},{}\n",
            lattice.times[i], lattice.imbalance[i], out.traj.s_retrieved[i]
        ));
    }
    let rms = (sum2 / lattice.len() as f64).sqrt();
    fs::write(out_dir.join(&name), csv)?;

    let summary_name = format!("{prefix}_summary.json");
    let summary = json!({
        "rms_s_difference": rms,
        "min_s_lattice": lattice.imbalance.iter().cloned().fold(f64::INFINITY, f64::min),
        "min_s_bpm": out.traj.s_retrieved.iter().cloned().fold(f64::INFINITY, f64::min),
        "samples": lattice.len(),
        "aliasing_steps": out.traj.aliasing_steps,
    });
    write_text(&out_dir.join(&summary_name), &format!("{:#}\n", summary))?;
    let mut names = vec![name, summary_name];
    names.extend(out.names);
    Ok(CrossvalSummary { rms, names })
}

pub fn run_crossval(
    common: &CommonArgs,
    design_path: Option<String>,
    model_args: &ModelArgs,
    n_points: Option<usize>,
    dz: Option<f64>,
) -> Result<()> {
    let s = setup(common, "crossval")?;
    let path = pick_opt(design_path, s.file.design_path.clone())
        .ok_or_else(|| Error::config("field design (path to design JSON) is required"))?;
    let design = load_design(Path::new(&path))?;
    // model parameters: flags/config override the design's embedded metadata
    let params = if model_args.n.is_some()
        || model_args.g1.is_some()
        || model_args.l0.is_some()
        || s.file.n.is_some()
        || s.file.g1_mm_inv.is_some()
        || s.file.l0.is_some()
    {
        resolve_model(model_args, &s.file)?.0
    } else {
        let meta = design.model.ok_or_else(|| {
            Error::config(
                "design file carries no model metadata; pass the chain parameters explicitly",
            )
        })?;
        ModelParams::new(meta.n, meta.v_mm_inv, meta.g1_mm_inv, design.omega_mm_inv)?
    };
    let n_points = pick(n_points, s.file.n_points, 8192);
    let dz = pick(dz, s.file.dz_um, 1.0);
    let summary = crossval_core(&design, &params, &s.out_dir, &s.prefix, n_points, dz)?;
    let resolved = json!({
        "design_path": path,
        "design": serde_json::to_value(&design)?,
        "model": {
            "n": params.n,
            "v_mm_inv": params.v,
            "omega_mm_inv": params.omega,
            "g1_mm_inv": params.g1,
        },
        "grid": { "n_points": n_points, "dz_um": dz },
        "rms_s_difference": summary.rms,
    });
    println!("rms S difference: {}", summary.rms);
    Manifest::new("crossval", resolved, summary.names).write(&s.out_dir, &s.prefix)?;
    Ok(())
}
