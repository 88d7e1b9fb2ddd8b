//! `pumpsim` command-line front end.
//!
//! Settings are taken, in increasing precedence, from the built-in
//! defaults, the configuration file (`--config`, else `$PUMPSIM_CONFIG`),
//! and command-line flags.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pumpsim_core::Error;

#[derive(Debug, Parser)]
#[command(name = "pumpsim", version, about = "Peristaltic piezo micropump simulator")]
pub struct Cli {
    /// Configuration file. Falls back to $PUMPSIM_CONFIG, then to the
    /// built-in calibrated defaults.
    #[arg(long, global = true, env = "PUMPSIM_CONFIG")]
    pub config: Option<PathBuf>,

    /// Output file. Defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also render an SVG chart next to the CSV output.
    #[arg(long, global = true)]
    pub svg: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// Drive-signal and actuation overrides shared by most commands.
#[derive(Debug, Clone, Args, Default)]
pub struct DriveArgs {
    /// Peak-to-peak drive voltage (V).
    #[arg(long)]
    pub vpp: Option<f64>,
    /// Drive frequency (Hz).
    #[arg(long)]
    pub freq: Option<f64>,
    /// Waveform shape: sine or square.
    #[arg(long)]
    pub shape: Option<String>,
    /// Phase offsets in degrees, e.g. "0,-120,-240".
    #[arg(long, allow_hyphen_values = true)]
    pub offsets: Option<String>,
    /// Nonlinear d31 coefficient (m/V).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Lift the voltage envelope (logs a warning).
    #[arg(long)]
    pub allow_overdrive: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak-to-peak actuator deflection versus drive voltage.
    Deflection {
        #[command(flatten)]
        drive: DriveArgs,
        /// Voltage grid, "start:stop:step" or "a,b,c" (Vp-p).
        #[arg(long)]
        vpp_grid: Option<String>,
    },
    /// Flow rate versus drive frequency at one voltage.
    FreqSweep {
        #[command(flatten)]
        drive: DriveArgs,
        /// Frequency grid (Hz).
        #[arg(long)]
        freq_grid: Option<String>,
        /// Back pressure (Pa).
        #[arg(long, default_value_t = 0.0)]
        dp: f64,
    },
    /// Flow rate versus drive voltage at one frequency.
    VoltSweep {
        #[command(flatten)]
        drive: DriveArgs,
        /// Voltage grid (Vp-p).
        #[arg(long)]
        vpp_grid: Option<String>,
        /// Back pressure (Pa).
        #[arg(long, default_value_t = 0.0)]
        dp: f64,
    },
    /// Flow rate versus back pressure (load line).
    Pq {
        #[command(flatten)]
        drive: DriveArgs,
        /// Number of pressure points from 0 to shut-off.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Synthetic three-channel power consumption.
    Power {
        #[command(flatten)]
        drive: DriveArgs,
        /// Voltage grid (Vp-p).
        #[arg(long)]
        vpp_grid: Option<String>,
        /// Frequency grid (Hz).
        #[arg(long)]
        freq_grid: Option<String>,
        /// Samples per drive period.
        #[arg(long)]
        samples_per_period: Option<usize>,
    },
    /// Mean power of a recorded oscilloscope CSV.
    PowerCsv {
        /// Record in the `t_s,vl1_V,ve1_V,...` format.
        file: PathBuf,
        /// Drive frequency (Hz); one period is integrated from the start.
        #[arg(long)]
        freq: Option<f64>,
        /// Sense resistance (ohm).
        #[arg(long)]
        r_e: Option<f64>,
    },
    /// Chamber volumes and seal check over one drive cycle.
    Simulate {
        #[command(flatten)]
        drive: DriveArgs,
        /// Swap the inlet and outlet actuators.
        #[arg(long)]
        reverse: bool,
        /// Time steps per cycle.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fit the pump and load sections to the configured anchors.
    Calibrate,
}

/// Stable process exit codes.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Validation(_) => 2,
        Error::Uncalibrated(_) => 3,
        Error::InputData { .. } => 4,
        Error::Protocol { .. } => 5,
        Error::Calibration { .. } => 6,
        Error::Numerical { .. } => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Domain(err)) => {
            eprintln!("pumpsim: {err}");
            if matches!(err, Error::Uncalibrated(_)) {
                eprintln!("hint: run `pumpsim calibrate --config <file>` to fit [pump] and [load]");
            }
            ExitCode::from(exit_code(&err))
        }
        Err(commands::Failure::Io(msg)) => {
            eprintln!("pumpsim: {msg}");
            ExitCode::from(1)
        }
    }
}
