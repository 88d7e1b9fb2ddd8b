use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pumpsim_core::config::{ConfigFile, RunConfig};
use pumpsim_core::laminate::actuation_deflection;
use pumpsim_core::output::{format_sig, LineChart, Series, Table};
use pumpsim_core::power::{total_power, CALIBRATION_SAMPLES_PER_PERIOD};
use pumpsim_core::pump::{anchor_residuals, pq_curve, trace_cycle};
use pumpsim_core::signal::{parse_offsets_deg, Shape};
use pumpsim_core::sweep::{deflection_sweep, flow_sweep, power_sweep, FlowRow, Grid};
use pumpsim_core::units::si_to_ul_min;
use pumpsim_core::{scope, Error};

use crate::{Cli, Command, DriveArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_VPP_GRID: &str = "0:160:10";
const DEFAULT_FREQ_GRID: &str = "10:160:1";
const DEFAULT_PQ_POINTS: usize = 19;
const DEFAULT_CYCLE_STEPS: usize = 360;
const FLOW_HEADER: [&str; 4] = ["vpp_V", "freq_Hz", "dp_Pa", "flow_ul_min"];

pub enum Failure {
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Deflection { drive, vpp_grid } => deflection(cli, drive, vpp_grid.as_deref()),
        Command::FreqSweep { drive, freq_grid, dp } => freq_sweep(cli, drive, freq_grid.as_deref(), *dp),
        Command::VoltSweep { drive, vpp_grid, dp } => volt_sweep(cli, drive, vpp_grid.as_deref(), *dp),
        Command::Pq { drive, points } => pq(cli, drive, *points),
        Command::Power {
            drive,
            vpp_grid,
            freq_grid,
            samples_per_period,
        } => power(
            cli,
            drive,
            vpp_grid.as_deref(),
            freq_grid.as_deref(),
            *samples_per_period,
        ),
        Command::PowerCsv { file, freq, r_e } => power_csv(cli, file, *freq, *r_e),
        Command::Simulate {
            drive,
            reverse,
            steps,
        } => simulate(cli, drive, *reverse, *steps),
        Command::Calibrate => calibrate(cli),
    }
}

fn load_document(cli: &Cli) -> CmdResult<ConfigFile> {
    Ok(match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::builtin(),
    })
}

/// Fold flag overrides into the document so that the config hash covers
/// the settings actually used.
fn apply_drive(doc: &mut ConfigFile, drive: &DriveArgs) -> CmdResult {
    let sched = doc.schedule.get_or_insert_with(Default::default);
    if let Some(v) = drive.vpp {
        sched.vpp = v;
    }
    if let Some(f) = drive.freq {
        sched.freq_hz = f;
    }
    if let Some(shape) = &drive.shape {
        let parsed: Shape = shape.parse()?;
        sched.shape = parsed.to_string();
    }
    if let Some(text) = &drive.offsets {
        parse_offsets_deg(text)?;
        let mut degrees = [0.0; 3];
        for (slot, part) in degrees.iter_mut().zip(text.split(',')) {
            *slot = part.trim().parse().expect("validated above");
        }
        sched.offsets_deg = degrees;
    }
    if drive.beta.is_some() || drive.allow_overdrive {
        let act = doc.actuation.get_or_insert_with(Default::default);
        if let Some(beta) = drive.beta {
            act.beta_m_per_v = beta;
        }
        if drive.allow_overdrive {
            act.allow_overdrive = true;
        }
    }
    Ok(())
}

fn prepare(cli: &Cli, drive: &DriveArgs) -> CmdResult<(ConfigFile, RunConfig)> {
    let mut doc = load_document(cli)?;
    apply_drive(&mut doc, drive)?;
    let run = doc.resolve()?;
    Ok((doc, run))
}

fn provenance(doc: &ConfigFile, command: &str) -> Vec<String> {
    vec![
        format!("pumpsim {VERSION}"),
        format!("config_hash {}", doc.hash()),
        format!("command {command}"),
    ]
}

fn grid(flag: Option<&str>, configured: Option<&Grid>, fallback: &str) -> CmdResult<Grid> {
    Ok(match (flag, configured) {
        (Some(text), _) => text.parse()?,
        (None, Some(g)) => g.clone(),
        (None, None) => fallback.parse()?,
    })
}

fn emit(cli: &Cli, text: &str) -> CmdResult {
    match &cli.out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("cannot write output: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit_svg(cli: &Cli, command: &str, chart: LineChart) -> CmdResult {
    if !cli.svg {
        return Ok(());
    }
    let path = match &cli.out {
        Some(out) => out.with_extension("svg"),
        None => PathBuf::from(format!("{command}.svg")),
    };
    write_file(&path, &chart.render())?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn flow_table(doc: &ConfigFile, command: &str, rows: &[FlowRow]) -> Table {
    let mut table = Table::new(&FLOW_HEADER);
    table.comments = provenance(doc, command);
    for r in rows {
        table.push(vec![r.vpp, r.freq, r.dp, si_to_ul_min(r.flow)]);
    }
    table
}

fn deflection(cli: &Cli, drive: &DriveArgs, vpp_grid: Option<&str>) -> CmdResult {
    let (doc, run) = prepare(cli, drive)?;
    let vpp = grid(vpp_grid, run.sweep.vpp.as_ref(), DEFAULT_VPP_GRID)?;
    let rows = deflection_sweep(&run.stack, &run.actuation, &vpp)?;

    let mut table = Table::new(&["vpp_V", "deflection_um"]);
    table.comments = provenance(&doc, "deflection");
    for &(v, w) in &rows {
        table.push(vec![v, w * 1e6]);
    }
    emit(cli, &table.to_csv())?;
    emit_svg(
        cli,
        "deflection",
        LineChart {
            title: "Actuator deflection".into(),
            x_label: "Drive voltage (Vp-p)".into(),
            y_label: "Peak-to-peak deflection (um)".into(),
            series: vec![Series {
                name: "deflection".into(),
                points: rows.iter().map(|&(v, w)| (v, w * 1e6)).collect(),
            }],
        },
    )
}

fn freq_sweep(cli: &Cli, drive: &DriveArgs, freq_grid: Option<&str>, dp: f64) -> CmdResult {
    let (doc, run) = prepare(cli, drive)?;
    let pump = run.pump()?;
    let vpp = run.schedule.vpp();
    let freq = grid(freq_grid, run.sweep.freq_hz.as_ref(), DEFAULT_FREQ_GRID)?;
    let rows = flow_sweep(pump, &Grid::single(vpp), &freq, &Grid::single(dp))?;
    emit(cli, &flow_table(&doc, "freq-sweep", &rows).to_csv())?;
    emit_svg(
        cli,
        "freq-sweep",
        LineChart {
            title: format!("Flow rate vs frequency at {} Vp-p", format_sig(vpp)),
            x_label: "Frequency (Hz)".into(),
            y_label: "Flow rate (ul/min)".into(),
            series: vec![Series {
                name: format!("{} Vp-p", format_sig(vpp)),
                points: rows.iter().map(|r| (r.freq, si_to_ul_min(r.flow))).collect(),
            }],
        },
    )
}

fn volt_sweep(cli: &Cli, drive: &DriveArgs, vpp_grid: Option<&str>, dp: f64) -> CmdResult {
    let (doc, run) = prepare(cli, drive)?;
    let pump = run.pump()?;
    let freq = run.schedule.frequency();
    let vpp = grid(vpp_grid, run.sweep.vpp.as_ref(), DEFAULT_VPP_GRID)?;
    let rows = flow_sweep(pump, &vpp, &Grid::single(freq), &Grid::single(dp))?;
    emit(cli, &flow_table(&doc, "volt-sweep", &rows).to_csv())?;
    emit_svg(
        cli,
        "volt-sweep",
        LineChart {
            title: format!("Flow rate vs voltage at {} Hz", format_sig(freq)),
            x_label: "Drive voltage (Vp-p)".into(),
            y_label: "Flow rate (ul/min)".into(),
            series: vec![Series {
                name: format!("{} Hz", format_sig(freq)),
                points: rows.iter().map(|r| (r.vpp, si_to_ul_min(r.flow))).collect(),
            }],
        },
    )
}

fn pq(cli: &Cli, drive: &DriveArgs, points: Option<usize>) -> CmdResult {
    let (doc, run) = prepare(cli, drive)?;
    let pump = run.pump()?;
    let (vpp, freq) = (run.schedule.vpp(), run.schedule.frequency());
    let n = points.or(run.sweep.dp_points).unwrap_or(DEFAULT_PQ_POINTS);
    let curve = pq_curve(pump, vpp, freq, n)?;
    let rows: Vec<FlowRow> = curve
        .iter()
        .map(|&(dp, flow)| FlowRow { vpp, freq, dp, flow })
        .collect();
    emit(cli, &flow_table(&doc, "pq", &rows).to_csv())?;
    emit_svg(
        cli,
        "pq",
        LineChart {
            title: format!(
                "Flow rate vs back pressure at {} Vp-p, {} Hz",
                format_sig(vpp),
                format_sig(freq)
            ),
            x_label: "Back pressure (kPa)".into(),
            y_label: "Flow rate (ul/min)".into(),
            series: vec![Series {
                name: "load line".into(),
                points: curve
                    .iter()
                    .map(|&(dp, q)| (dp * 1e-3, si_to_ul_min(q)))
                    .collect(),
            }],
        },
    )
}

fn power(
    cli: &Cli,
    drive: &DriveArgs,
    vpp_grid: Option<&str>,
    freq_grid: Option<&str>,
    samples_per_period: Option<usize>,
) -> CmdResult {
    let (doc, run) = prepare(cli, drive)?;
    let load = run.load()?;
    let schedule_vpp = format_sig(run.schedule.vpp());
    let schedule_freq = format_sig(run.schedule.frequency());
    let vpp = grid(vpp_grid, run.sweep.vpp.as_ref(), &schedule_vpp)?;
    let freq = grid(freq_grid, run.sweep.freq_hz.as_ref(), &schedule_freq)?;
    let spp = samples_per_period
        .or(run.sweep.samples_per_period)
        .unwrap_or(CALIBRATION_SAMPLES_PER_PERIOD);
    let rows = power_sweep(load, &vpp, &freq, spp)?;

    let mut table = Table::new(&["vpp_V", "freq_Hz", "power_mW"]);
    table.comments = provenance(&doc, "power");
    for r in &rows {
        table.push(vec![r.vpp, r.freq, r.power.total * 1e3]);
    }
    emit(cli, &table.to_csv())?;

    let series = freq
        .values()
        .iter()
        .map(|&f| Series {
            name: format!("{} Hz", format_sig(f)),
            points: rows
                .iter()
                .filter(|r| r.freq == f)
                .map(|r| (r.vpp, r.power.total * 1e3))
                .collect(),
        })
        .collect();
    emit_svg(
        cli,
        "power",
        LineChart {
            title: "Power consumption".into(),
            x_label: "Drive voltage (Vp-p)".into(),
            y_label: "Power (mW)".into(),
            series,
        },
    )
}

fn as_input_error(e: Error) -> Error {
    match e {
        Error::Validation(message) => Error::InputData { line: None, message },
        other => other,
    }
}

fn power_csv(cli: &Cli, file: &Path, freq: Option<f64>, r_e: Option<f64>) -> CmdResult {
    let doc = load_document(cli)?;
    let run = doc.resolve()?;
    let freq = freq.unwrap_or_else(|| run.schedule.frequency());
    let r_e = r_e.unwrap_or_else(|| run.load.map_or(run.load_prior.r_e, |l| l.r_e));
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(Error::Config(format!("--freq must be positive, got {freq}")).into());
    }
    if !(r_e > 0.0 && r_e.is_finite()) {
        return Err(Error::Config(format!("--r-e must be positive, got {r_e}")).into());
    }

    let text = fs::read_to_string(file).map_err(|e| Error::InputData {
        line: None,
        message: format!("cannot read {}: {e}", file.display()),
    })?;
    let record = scope::parse_str(&text)?;
    let result = total_power(&record.channels, r_e, 1.0 / freq).map_err(as_input_error)?;

    let mut table = Table::new(&["p1_W", "p2_W", "p3_W", "total_W"]);
    table.comments = provenance(&doc, "power-csv");
    table.comments.push(format!("freq_Hz {}", format_sig(freq)));
    table.comments.push(format!("r_e_ohm {}", format_sig(r_e)));
    let [p1, p2, p3] = result.per_actuator;
    table.push(vec![p1, p2, p3, result.total]);
    emit(cli, &table.to_csv())?;
    if cli.svg {
        log::warn!("power-csv has no chart; --svg ignored");
    }
    Ok(())
}

fn simulate(cli: &Cli, drive: &DriveArgs, reverse: bool, steps: Option<usize>) -> CmdResult {
    let (doc, run) = match prepare(cli, drive) {
        Err(Failure::Domain(Error::Protocol { t, detail })) => {
            eprintln!("sealing: FAIL (first violation at t = {} s)", format_sig(t));
            return Err(Error::Protocol { t, detail }.into());
        }
        other => other?,
    };
    let pump = run.pump()?;
    let schedule = if reverse {
        run.schedule.reverse()
    } else {
        run.schedule
    };
    let steps = steps.or(run.sweep.steps).unwrap_or(DEFAULT_CYCLE_STEPS);
    let deflection = actuation_deflection(&run.stack, schedule.vpp(), &run.actuation)?;
    let trace = trace_cycle(&schedule, pump, deflection, steps)?;

    let ul = |v: f64| v * 1e9;
    let verdict = if trace.sealing_ok() { "PASS" } else { "FAIL" };
    let mut table = Table::new(&[
        "t_s",
        "v1_ul",
        "v2_ul",
        "v3_ul",
        "sealed1",
        "sealed2",
        "sealed3",
        "inlet_ul",
        "outlet_ul",
    ]);
    table.comments = provenance(&doc, "simulate");
    table.comments.push(format!("reverse {reverse}"));
    table
        .comments
        .push(format!("deflection_um {}", format_sig(deflection * 1e6)));
    table.comments.push(format!("sealing {verdict}"));
    if let Some(t) = trace.first_violation {
        table
            .comments
            .push(format!("first_violation_s {}", format_sig(t)));
    }
    table.comments.push(format!(
        "net_displaced_ul {}",
        format_sig(ul(trace.net_displaced))
    ));
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for j in 0..trace.times.len() {
        let [v1, v2, v3] = trace.volumes[j];
        let [s1, s2, s3] = trace.sealed[j];
        table.push(vec![
            trace.times[j],
            ul(v1),
            ul(v2),
            ul(v3),
            flag(s1),
            flag(s2),
            flag(s3),
            ul(trace.inlet[j]),
            ul(trace.outlet[j]),
        ]);
    }
    emit(cli, &table.to_csv())?;
    emit_svg(
        cli,
        "simulate",
        LineChart {
            title: "Chamber volumes over one cycle".into(),
            x_label: "Time (ms)".into(),
            y_label: "Chamber volume (ul)".into(),
            series: (0..3)
                .map(|k| Series {
                    name: format!("chamber {}", k + 1),
                    points: trace
                        .times
                        .iter()
                        .zip(&trace.volumes)
                        .map(|(&t, v)| (t * 1e3, ul(v[k])))
                        .collect(),
                })
                .collect(),
        },
    )?;

    eprintln!(
        "sealing: {verdict}; net displaced {} ul per cycle",
        format_sig(ul(trace.net_displaced))
    );
    trace.ensure_sealed()?;
    Ok(())
}

fn calibrate(cli: &Cli) -> CmdResult {
    let mut doc = load_document(cli)?;
    doc.resolve()?;
    doc.calibrate().map_err(|e| match e {
        Error::Config(_) | Error::Calibration { .. } => e,
        other => Error::Calibration {
            message: other.to_string(),
            residuals: Vec::new(),
        },
    })?;

    let run = doc.resolve()?;
    for r in anchor_residuals(run.pump()?, &run.anchors) {
        eprintln!("  {r}");
    }
    let text = format!("# pumpsim {VERSION} calibrate\n{}", doc.to_toml_string());
    match (&cli.out, &cli.config) {
        (Some(path), _) | (None, Some(path)) => {
            write_file(path, &text)?;
            eprintln!("wrote calibrated configuration to {}", path.display());
            Ok(())
        }
        (None, None) => emit(cli, &text),
    }
}
