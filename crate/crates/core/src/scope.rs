//! Oscilloscope record exchange format.
//!
//! ```text
//! t_s,vl1_V,ve1_V,vl2_V,ve2_V,vl3_V,ve3_V
//! 0,0,0,-69.28,-1.2,69.28,1.2
//! ...
//! ```
//!
//! One row per sample; the time column must be uniform to within 0.1% of
//! the mean step. `vlK_V` is the voltage across actuator K and `veK_V` the
//! voltage across its sense resistor.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::power::{Unit, Waveform};
use crate::signal::N_ACTUATORS;

pub const HEADER: [&str; 7] = ["t_s", "vl1_V", "ve1_V", "vl2_V", "ve2_V", "vl3_V", "ve3_V"];

/// Largest allowed deviation of a time step from the mean step, relative.
pub const MAX_JITTER: f64 = 1e-3;

/// Three `(v_l, v_e)` channel pairs on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeRecord {
    pub channels: Vec<(Waveform, Waveform)>,
}

impl ScopeRecord {
    pub fn sample_rate(&self) -> f64 {
        self.channels[0].0.sample_rate()
    }

    pub fn duration(&self) -> f64 {
        self.channels[0].0.duration()
    }
}

fn input_error(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::InputData {
        line,
        message: message.into(),
    }
}

pub fn parse_str(text: &str) -> Result<ScopeRecord> {
    parse(text.as_bytes())
}

pub fn parse(reader: impl Read) -> Result<ScopeRecord> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut times: Vec<f64> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); HEADER.len() - 1];
    let mut seen_header = false;
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            input_error(line, format!("unreadable CSV: {e}"))
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if !seen_header {
            if record.iter().ne(HEADER.iter().copied()) {
                return Err(input_error(
                    Some(line),
                    format!("expected header '{}'", HEADER.join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        if record.len() != HEADER.len() {
            return Err(input_error(
                Some(line),
                format!("expected {} fields, found {}", HEADER.len(), record.len()),
            ));
        }
        let mut values = [0.0; 7];
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                input_error(
                    Some(line),
                    format!("column '{}': '{field}' is not a number", HEADER[c]),
                )
            })?;
            if !v.is_finite() {
                return Err(input_error(
                    Some(line),
                    format!("column '{}' is not finite", HEADER[c]),
                ));
            }
            values[c] = v;
        }
        times.push(values[0]);
        lines.push(line);
        for c in 1..HEADER.len() {
            columns[c - 1].push(values[c]);
        }
    }
    if !seen_header {
        return Err(input_error(Some(1), "empty record: missing header"));
    }
    if times.len() < 2 {
        return Err(input_error(
            None,
            format!("need at least 2 samples, found {}", times.len()),
        ));
    }

    let n = times.len();
    let mean_step = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(mean_step > 0.0) {
        return Err(input_error(Some(lines[1]), "time column is not increasing"));
    }
    for j in 1..n {
        let step = times[j] - times[j - 1];
        if (step - mean_step).abs() > MAX_JITTER * mean_step {
            return Err(input_error(
                Some(lines[j]),
                format!(
                    "time step {step:.6e} s deviates from the mean step {mean_step:.6e} s by more than {:.1}%",
                    MAX_JITTER * 100.0
                ),
            ));
        }
    }

    let fs = 1.0 / mean_step;
    let t0 = times[0];
    let mut columns = columns.into_iter();
    let mut channels = Vec::with_capacity(N_ACTUATORS);
    for _ in 0..N_ACTUATORS {
        let v_l = Waveform::new(fs, columns.next().expect("column"), Unit::Volts, t0)?;
        let v_e = Waveform::new(fs, columns.next().expect("column"), Unit::Volts, t0)?;
        channels.push((v_l, v_e));
    }
    Ok(ScopeRecord { channels })
}

/// Write channel pairs in the exchange format. Values use the shortest
/// representation that round-trips.
pub fn write(channels: &[(Waveform, Waveform)], mut out: impl Write) -> Result<()> {
    if channels.len() != N_ACTUATORS {
        return Err(crate::error::validation(format!(
            "expected {N_ACTUATORS} channel pairs, got {}",
            channels.len()
        )));
    }
    let first = &channels[0].0;
    let io = |e: std::io::Error| input_error(None, format!("write failed: {e}"));
    writeln!(out, "{}", HEADER.join(",")).map_err(io)?;
    for j in 0..first.len() {
        let t = first.t0() + j as f64 / first.sample_rate();
        let mut row = format!("{t}");
        for (v_l, v_e) in channels {
            row.push_str(&format!(",{},{}", v_l.samples()[j], v_e.samples()[j]));
        }
        writeln!(out, "{row}").map_err(io)?;
    }
    Ok(())
}
