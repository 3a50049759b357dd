//! Command-line front end tying the chain, Floquet, averaging, design and
//! beam-propagation modules into reproducible runs with CSV/JSON outputs.

mod config;
mod presets;
mod runners;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use runners::{CommonArgs, ModelArgs};

#[derive(Parser)]
#[command(
    name = "fockbeam",
    version,
    about = "Driven two-mode boson chains and their waveguide-array realization",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Subcommand)]
enum Command {
    /// Integrate the driven chain and export occupations and imbalance
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// propagation length, mm
        #[arg(long)]
        t_end: Option<f64>,
        /// integrator step, mm
        #[arg(long)]
        dt: Option<f64>,
        /// record every k-th step
        #[arg(long)]
        sample_every: Option<usize>,
        /// initial state: "delta:L" or "uniform"
        #[arg(long)]
        initial: Option<String>,
    },
    /// Integrate the cycle-averaged effective chain
    EvolveEffective {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        sample_every: Option<usize>,
        #[arg(long)]
        initial: Option<String>,
    },
    /// Quasi-energy spectrum over a drive-amplitude scan
    FloquetSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        g1_min: Option<f64>,
        #[arg(long)]
        g1_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Drive amplitude that suppresses tunneling past bond l₀
    CdtAmplitude {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l0: Option<usize>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        root: Option<usize>,
    },
    /// Calibrate the κ(d) spacing law and the contrast factor β
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dn: Option<f64>,
        #[arg(long)]
        d_min: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        n_s: Option<f64>,
        #[arg(long)]
        w: Option<f64>,
        #[arg(long)]
        dx_diff: Option<f64>,
    },
    /// Synthesize the waveguide array realizing a chain
    Design {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// calibration JSON from `calibrate` (computed on the fly if absent)
        #[arg(long)]
        calibration: Option<String>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        dn: Option<f64>,
    },
    /// Propagate the guide-0 mode through a designed array
    BpmRun {
        #[command(flatten)]
        common: CommonArgs,
        /// design JSON from `design`
        #[arg(long)]
        design: Option<String>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        dz: Option<f64>,
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Run lattice and beam propagation side by side and report the RMS
    /// imbalance difference
    Crossval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        design: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        dz: Option<f64>,
    },
    /// Run a named reproduction preset (fig1a..fig1d, fig2b, fig3a..fig3e)
    Preset {
        #[command(flatten)]
        common: CommonArgs,
        /// preset name
        name: Option<String>,
        /// calibration JSON reused by the fig3 presets
        #[arg(long)]
        calibration: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve { common, model, t_end, dt, sample_every, initial } => {
            runners::run_evolve(&common, &model, t_end, dt, sample_every, initial, false)
        }
        Command::EvolveEffective { common, model, t_end, dt, sample_every, initial } => {
            runners::run_evolve(&common, &model, t_end, dt, sample_every, initial, true)
        }
        Command::FloquetSweep { common, model, g1_min, g1_max, points } => {
            runners::run_floquet_sweep(&common, &model, g1_min, g1_max, points)
        }
        Command::CdtAmplitude { common, n, l0, omega, root } => {
            runners::run_cdt_amplitude(&common, n, l0, omega, root)
        }
        Command::Calibrate { common, dn, d_min, d_max, points, lambda, n_s, w, dx_diff } => {
            runners::run_calibrate(&common, dn, d_min, d_max, points, lambda, n_s, w, dx_diff)
        }
        Command::Design { common, model, calibration, length, dn } => {
            runners::run_design(&common, &model, calibration, length, dn)
        }
        Command::BpmRun { common, design, length, n_points, dz, sample_every } => {
            runners::run_bpm(&common, design, length, n_points, dz, sample_every)
        }
        Command::Crossval { common, design, model, n_points, dz } => {
            runners::run_crossval(&common, design, &model, n_points, dz)
        }
        Command::Preset { common, name, calibration } => {
            presets::run_preset(&common, name.as_deref(), calibration)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &fockbeam::Error) -> u8 {
    use fockbeam::Error::*;
    match err {
        Config(_) | Domain(_) | Contract(_) | Io(_) | Json(_) => 2,
        Numerical(_) | Search(_) => 3,
    }
}
