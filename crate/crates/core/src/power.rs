//! Electrical power of the three actuators from sense-resistor records.
//!
//! Each actuator sits in series with a sense resistor `R_E`. The branch
//! current is recovered as `i_k = V_k^E / R_E` and the actuator power is the
//! period mean of `V_k^L * i_k`, summed over the three actuators.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{validation, Error, Residual, Result};
use crate::signal::{DEFAULT_OFFSETS, N_ACTUATORS};

pub const DEFAULT_SENSE_RESISTANCE: f64 = 1000.0;

/// Effective capacitance assumed per actuator when the anchors do not
/// determine it.
pub const DEFAULT_C_EFF: f64 = 100e-9;

/// Samples per period used when calibrating against the synthetic pipeline.
pub const CALIBRATION_SAMPLES_PER_PERIOD: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Volts,
    Amperes,
}

/// Uniformly sampled record.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_rate: f64,
    samples: Vec<f64>,
    unit: Unit,
    t0: f64,
}

impl Waveform {
    pub fn new(sample_rate: f64, samples: Vec<f64>, unit: Unit, t0: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(validation(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.len() < 2 {
            return Err(validation(format!(
                "waveform needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(validation(format!("sample {k} is not finite")));
        }
        if !t0.is_finite() {
            return Err(validation("start time must be finite"));
        }
        Ok(Waveform {
            sample_rate,
            samples,
            unit,
            t0,
        })
    }

    pub fn from_fn(
        sample_rate: f64,
        len: usize,
        unit: Unit,
        t0: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let samples = (0..len).map(|j| f(t0 + j as f64 / sample_rate)).collect();
        Self::new(sample_rate, samples, unit, t0)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Time spanned from the first to the last sample.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    fn same_grid(&self, other: &Waveform) -> bool {
        self.samples.len() == other.samples.len()
            && (self.sample_rate - other.sample_rate).abs() <= 1e-12 * self.sample_rate
            && (self.t0 - other.t0).abs() <= 1e-9 * self.step()
    }
}

/// Branch current from the voltage across the sense resistor.
pub fn current_from_sense(v_e: &Waveform, r_e: f64) -> Result<Waveform> {
    if !(r_e > 0.0 && r_e.is_finite()) {
        return Err(validation(format!(
            "sense resistance must be positive, got {r_e}"
        )));
    }
    if v_e.unit != Unit::Volts {
        return Err(validation("sense record must be in volts"));
    }
    Ok(Waveform {
        samples: v_e.samples.iter().map(|v| v / r_e).collect(),
        unit: Unit::Amperes,
        ..v_e.clone()
    })
}

/// Trapezoidal mean of `v_l * i` over `[t0, t0 + period]`. A window that
/// ends between samples is closed by linear interpolation of the product.
pub fn mean_power(v_l: &Waveform, i: &Waveform, period: f64) -> Result<f64> {
    if v_l.unit != Unit::Volts || i.unit != Unit::Amperes {
        return Err(validation(
            "mean power needs a voltage record and a current record",
        ));
    }
    if !v_l.same_grid(i) {
        return Err(validation(
            "voltage and current records are on different sample grids",
        ));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(validation(format!("period must be positive, got {period}")));
    }
    let intervals = period * v_l.sample_rate;
    let available = (v_l.len() - 1) as f64;
    if intervals > available * (1.0 + 1e-9) {
        return Err(validation(format!(
            "period {period:.6e} s is longer than the {:.6e} s record",
            v_l.duration()
        )));
    }
    let mut whole = (intervals + 1e-9).floor() as usize;
    let mut frac = intervals - whole as f64;
    if frac < 1e-9 || whole == v_l.len() - 1 {
        whole = whole.min(v_l.len() - 1);
        frac = 0.0;
    }

    let p = |j: usize| v_l.samples[j] * i.samples[j];
    let h = v_l.step();
    let mut sum = 0.0;
    if whole > 0 {
        sum += 0.5 * (p(0) + p(whole));
        for j in 1..whole {
            sum += p(j);
        }
    }
    let mut integral = h * sum;
    if frac > 0.0 {
        let end = p(whole) + frac * (p(whole + 1) - p(whole));
        integral += h * frac * 0.5 * (p(whole) + end);
    }
    Ok(integral / period)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    /// Mean power of each actuator (W), signed.
    pub per_actuator: [f64; N_ACTUATORS],
    /// Sum of `per_actuator` (W).
    pub total: f64,
    /// Integration window (s).
    pub period_used: f64,
}

/// Mean power of the three actuators from `(v_l, v_e)` record pairs.
pub fn total_power(pairs: &[(Waveform, Waveform)], r_e: f64, period: f64) -> Result<PowerResult> {
    if pairs.len() != N_ACTUATORS {
        return Err(validation(format!(
            "expected {N_ACTUATORS} channel pairs, got {}",
            pairs.len()
        )));
    }
    let mut per_actuator = [0.0; N_ACTUATORS];
    for (k, (v_l, v_e)) in pairs.iter().enumerate() {
        let current = current_from_sense(v_e, r_e)?;
        per_actuator[k] =
            mean_power(v_l, &current, period).map_err(|e| validation(format!("channel {}: {e}", k + 1)))?;
    }
    Ok(PowerResult {
        per_actuator,
        total: per_actuator[0] + per_actuator[1] + per_actuator[2],
        period_used: period,
    })
}

/// Lossy-capacitor model of one actuator behind its sense resistor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadModel {
    /// F.
    pub c_eff: f64,
    pub tan_delta: f64,
    /// Ω.
    pub r_e: f64,
}

impl LoadModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_eff > 0.0 && self.c_eff.is_finite()) {
            return Err(validation(format!("c_eff must be positive, got {}", self.c_eff)));
        }
        if !(self.tan_delta >= 0.0 && self.tan_delta.is_finite()) {
            return Err(validation(format!(
                "tan_delta must be non-negative, got {}",
                self.tan_delta
            )));
        }
        if !(self.r_e > 0.0 && self.r_e.is_finite()) {
            return Err(validation(format!("r_e must be positive, got {}", self.r_e)));
        }
        Ok(())
    }

    /// Impedance of the actuator branch, `1 / (wC (tan_delta + j))`.
    pub fn branch_impedance(&self, f: f64) -> Complex64 {
        let wc = TAU * f * self.c_eff;
        Complex64::new(wc * self.tan_delta, wc).inv()
    }
}

/// Steady-state `(v_l, v_e)` over one period for a source
/// `(vpp / 2) sin(2 pi f t + phase)`. Records hold `samples_per_period + 1`
/// points so that the last sample closes the period.
pub fn synthesize_channel(
    model: &LoadModel,
    vpp: f64,
    f: f64,
    phase: f64,
    samples_per_period: usize,
) -> Result<(Waveform, Waveform)> {
    model.validate()?;
    if samples_per_period < 16 {
        return Err(validation(format!(
            "need at least 16 samples per period, got {samples_per_period}"
        )));
    }
    if !(vpp >= 0.0 && vpp.is_finite()) {
        return Err(validation(format!("vpp must be non-negative, got {vpp}")));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(validation(format!("frequency must be positive, got {f}")));
    }
    let source = Complex64::from_polar(0.5 * vpp, phase);
    let z_l = model.branch_impedance(f);
    let current = source / (z_l + model.r_e);
    let v_l = current * z_l;
    let v_e = current * model.r_e;

    let fs = samples_per_period as f64 * f;
    let w = TAU * f;
    let len = samples_per_period + 1;
    let wave = |phasor: Complex64| {
        Waveform::from_fn(fs, len, Unit::Volts, 0.0, |t| {
            phasor.norm() * (w * t + phasor.arg()).sin()
        })
    };
    Ok((wave(v_l)?, wave(v_e)?))
}

/// Three balanced channels synthesised and run through the measurement
/// pipeline.
pub fn synthetic_power(
    model: &LoadModel,
    vpp: f64,
    f: f64,
    samples_per_period: usize,
) -> Result<PowerResult> {
    let pairs = DEFAULT_OFFSETS
        .iter()
        .map(|&phase| synthesize_channel(model, vpp, f, phase, samples_per_period))
        .collect::<Result<Vec<_>>>()?;
    total_power(&pairs, model.r_e, 1.0 / f)
}

/// Steady-state actuator power of one channel from the phasor solution.
fn channel_power(c_eff: f64, tan_delta: f64, r_e: f64, vpp: f64, f: f64) -> f64 {
    let model = LoadModel {
        c_eff,
        tan_delta,
        r_e,
    };
    let z = model.branch_impedance(f);
    let amp = 0.5 * vpp;
    0.5 * amp * amp * z.re / (z + r_e).norm_sqr()
}

fn golden_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Loss tangent at which the actuator power of one channel peaks.
fn peak_tan_delta(c_eff: f64, r_e: f64, f: f64) -> f64 {
    let log_t = golden_max(
        -12.0 * std::f64::consts::LN_10,
        6.0 * std::f64::consts::LN_10,
        |lt| channel_power(c_eff, lt.exp(), r_e, 1.0, f),
    );
    log_t.exp()
}

fn load_calibration_error(message: impl Into<String>, residuals: Vec<Residual>) -> Error {
    Error::Calibration {
        message: message.into(),
        residuals,
    }
}

/// Choose `tan_delta` so the synthetic three-channel pipeline reproduces the
/// power anchors `(name, vpp, f, watts)`. `c_eff` and `r_e` come from the
/// prior. One anchor is solved exactly; several are fitted in the
/// least-squares sense and must all land within 0.1%.
pub fn calibrate_load<'a>(
    anchors: impl IntoIterator<Item = (&'a str, f64, f64, f64)>,
    prior: &LoadModel,
) -> Result<LoadModel> {
    let anchors: Vec<_> = anchors.into_iter().collect();
    if anchors.is_empty() {
        return Err(validation("no power anchor"));
    }
    prior.validate()?;
    for &(name, vpp, f, watts) in &anchors {
        if !(vpp > 0.0 && f > 0.0 && watts >= 0.0) || !watts.is_finite() {
            return Err(validation(format!(
                "power anchor '{name}' is not a valid operating point"
            )));
        }
    }
    let (c, r) = (prior.c_eff, prior.r_e);
    let n = N_ACTUATORS as f64;
    let model_watts = |t: f64, vpp: f64, f: f64| n * channel_power(c, t, r, vpp, f);

    let tan_delta = if anchors.len() == 1 {
        let (name, vpp, f, watts) = anchors[0];
        if watts == 0.0 {
            0.0
        } else {
            let t_peak = peak_tan_delta(c, r, f);
            let reachable = model_watts(t_peak, vpp, f);
            if watts > reachable {
                return Err(load_calibration_error(
                    format!("power anchor exceeds what the load model can dissipate at c_eff = {c:.3e} F"),
                    vec![Residual {
                        anchor: name.to_string(),
                        target: watts,
                        model: reachable,
                        relative: (reachable - watts).abs() / watts,
                    }],
                ));
            }
            // Power rises monotonically in tan_delta up to the peak.
            let (mut lo, mut hi) = (0.0, t_peak);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if model_watts(mid, vpp, f) < watts {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    } else {
        let t_hi = anchors
            .iter()
            .map(|&(_, _, f, _)| peak_tan_delta(c, r, f))
            .fold(0.0, f64::max);
        let cost = |t: f64| -> f64 {
            anchors
                .iter()
                .map(|&(_, vpp, f, watts)| {
                    let scale = if watts > 0.0 { watts } else { 1e-3 };
                    ((model_watts(t, vpp, f) - watts) / scale).powi(2)
                })
                .sum()
        };
        golden_max(0.0, t_hi, |t| -cost(t))
    };

    let model = LoadModel {
        c_eff: c,
        tan_delta,
        r_e: r,
    };
    let mut residuals = Vec::with_capacity(anchors.len());
    for &(name, vpp, f, watts) in &anchors {
        let got = synthetic_power(&model, vpp, f, CALIBRATION_SAMPLES_PER_PERIOD)?.total;
        let scale = if watts > 0.0 { watts } else { 1e-3 };
        residuals.push(Residual {
            anchor: name.to_string(),
            target: watts,
            model: got,
            relative: (got - watts).abs() / scale,
        });
    }
    if residuals.iter().any(|r| !(r.relative <= 1e-3)) {
        return Err(load_calibration_error(
            "power anchors cannot be met by a single loss tangent",
            residuals,
        ));
    }
    Ok(model)
}
