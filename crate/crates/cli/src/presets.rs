//! Named reproduction presets: each resolves to a fully specified run of
//! one or more modes with the published operating point (N = 10,
//! v = 0.08 mm⁻¹, ω = 0.628 mm⁻¹, 10-cm devices).

use std::fs;
use std::path::Path;

use fockbeam::averaging::cdt_amplitude;
use fockbeam::bpm::OpticalConstants;
use fockbeam::designer::{design_array, WaveguideProfile};
use fockbeam::lattice::ModelParams;
use fockbeam::{Error, Result};

use crate::runners::{
    self, compute_calibration, crossval_core, load_calibration, CalibrationRecord, CommonArgs,
    ModelArgs,
};

pub const PRESET_NAMES: [&str; 10] =
    ["fig1a", "fig1b", "fig1c", "fig1d", "fig2b", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e"];

/// Drive amplitude of the counter-example panel (line IV), mm⁻¹.
pub const LINE_IV_G1: f64 = 0.13458;

fn unknown_preset(name: &str) -> Error {
    Error::config(format!(
        "unknown preset '{name}'; valid presets: {}",
        PRESET_NAMES.join(", ")
    ))
}

fn fig1_model(panel: char) -> ModelArgs {
    let mut args = ModelArgs { n: Some(10), v: Some(0.08), omega: Some(0.628), ..Default::default() };
    match panel {
        'a' => args.l0 = Some(0),
        'b' => args.l0 = Some(1),
        'c' => args.l0 = Some(2),
        'd' => args.g1 = Some(LINE_IV_G1),
        _ => unreachable!(),
    }
    args
}

fn fig3_g1(panel: char) -> Result<f64> {
    Ok(match panel {
        'a' => cdt_amplitude(10, 0, 0.628, 1)?,
        'b' => cdt_amplitude(10, 1, 0.628, 1)?,
        'c' => cdt_amplitude(10, 2, 0.628, 1)?,
        'd' => LINE_IV_G1,
        _ => unreachable!(),
    })
}

/// Calibration for the fig3 presets: loaded from --calibration when given,
/// otherwise computed and saved next to the outputs for reuse.
fn fig3_calibration(
    common: &CommonArgs,
    calibration: Option<&str>,
    out_prefix: &str,
) -> Result<CalibrationRecord> {
    if let Some(path) = calibration {
        return load_calibration(Path::new(path));
    }
    let record = compute_calibration(
        &OpticalConstants::default(),
        &WaveguideProfile::default(),
        2e-3,
        8.5,
        10.5,
        9,
    )?;
    let s = runners::setup(common, "calibrate")?;
    let name = format!("{out_prefix}_calibration.json");
    fs::write(
        s.out_dir.join(name),
        format!("{}\n", serde_json::to_string_pretty(&record)?),
    )?;
    Ok(record)
}

fn run_fig3_panel(
    common: &CommonArgs,
    panel: char,
    record: &CalibrationRecord,
    prefix: &str,
) -> Result<f64> {
    let g1 = fig3_g1(panel)?;
    let params = ModelParams::new(10, 0.08, g1, 0.628)?;
    let constants = OpticalConstants::new(record.lambda_um, record.n_s)?;
    let profile = WaveguideProfile { w_um: record.w_um, diffusion_um: record.dx_um };
    let design = design_array(&params, &record.coupling, record.beta, &profile, &constants, 100.0)?;
    let s = runners::setup(common, "crossval")?;
    fs::write(s.out_dir.join(format!("{prefix}_design.json")), format!("{}\n", design.to_json()?))?;
    let summary = crossval_core(&design, &params, &s.out_dir, prefix, 8192, 1.0)?;
    Ok(summary.rms)
}

pub fn run_preset(
    common: &CommonArgs,
    name: Option<&str>,
    calibration: Option<String>,
) -> Result<()> {
    let name = name.ok_or_else(|| unknown_preset("<none>"))?;
    if !PRESET_NAMES.contains(&name) {
        return Err(unknown_preset(name));
    }
    let common = common.clone().with_prefix(name);
    match name {
        "fig1a" | "fig1b" | "fig1c" | "fig1d" => {
            let panel = name.chars().last().unwrap();
            runners::run_evolve(
                &common,
                &fig1_model(panel),
                Some(100.0),
                None,
                Some(5),
                Some("delta:0".to_owned()),
                false,
            )
        }
        "fig2b" => runners::run_floquet_sweep(
            &common,
            &ModelArgs { n: Some(10), v: Some(0.08), omega: Some(0.628), ..Default::default() },
            Some(0.0),
            Some(0.35),
            Some(200),
        ),
        "fig3a" | "fig3b" | "fig3c" | "fig3d" => {
            let panel = name.chars().last().unwrap();
            let record = fig3_calibration(&common, calibration.as_deref(), name)?;
            run_fig3_panel(&common, panel, &record, name)?;
            Ok(())
        }
        "fig3e" => {
            // imbalance comparison across all four arrays
            let record = fig3_calibration(&common, calibration.as_deref(), name)?;
            let mut rms = Vec::new();
            for panel in ['a', 'b', 'c', 'd'] {
                let prefix = format!("fig3e_panel_{panel}");
                rms.push(run_fig3_panel(&common, panel, &record, &prefix)?);
            }
            let s = runners::setup(&common, "crossval")?;
            let summary = serde_json::json!({
                "rms_s_difference": { "a": rms[0], "b": rms[1], "c": rms[2], "d": rms[3] },
            });
            fs::write(s.out_dir.join("fig3e_summary.json"), format!("{summary:#}\n"))?;
            Ok(())
        }
        _ => Err(unknown_preset(name)),
    }
}
