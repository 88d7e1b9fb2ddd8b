//! Lumped peristaltic pump model.
//!
//! The flow characteristic is separable:
//!
//! ```text
//! Q(vpp, f, dp) = Qmax(vpp, f) * max(0, 1 - dp / Pmax(vpp))
//! Qmax(vpp, f)  = K * max(0, vpp - v_th) * f * S(f),   S(f) = 1 / (1 + (f / f_c)^n)
//! Pmax(vpp)     = p_max_cal * max(0, vpp - v_th) / (v_anchor - v_th)
//! ```
//!
//! `K` is carried implicitly as the calibrated flow `q_cal` at the anchor
//! point, so the model passes through that anchor exactly.

use crate::error::{validation, Error, Residual, Result};
use crate::signal::{is_sealed, PhaseSchedule, N_ACTUATORS, SEAL_THRESHOLD};
use crate::units;

/// Relative tolerance for anchor reproduction.
pub const ANCHOR_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    /// Membrane area per actuator (m²).
    pub chamber_area: f64,
    /// Mean-to-peak deflection ratio of the membrane.
    pub shape_factor: f64,
    /// Dead-zone voltage (Vp-p).
    pub v_threshold: f64,
    /// Free-flow rate at the anchor point (m³/s).
    pub q_cal: f64,
    /// Shut-off pressure at the anchor voltage (Pa).
    pub p_max_cal: f64,
    /// Roll-off corner frequency (Hz).
    pub f_c: f64,
    /// Roll-off order.
    pub n_roll: f64,
    /// Anchor drive amplitude (Vp-p).
    pub anchor_vpp: f64,
    /// Anchor drive frequency (Hz).
    pub anchor_freq: f64,
}

impl PumpParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("chamber_area", self.chamber_area),
            ("shape_factor", self.shape_factor),
            ("v_threshold", self.v_threshold),
            ("q_cal", self.q_cal),
            ("p_max_cal", self.p_max_cal),
            ("f_c", self.f_c),
            ("n_roll", self.n_roll),
            ("anchor_vpp", self.anchor_vpp),
            ("anchor_freq", self.anchor_freq),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(validation(format!(
                    "pump parameter {name} must be positive, got {value}"
                )));
            }
        }
        if self.v_threshold >= self.anchor_vpp {
            return Err(validation(format!(
                "dead-zone voltage {} must be below the anchor voltage {}",
                self.v_threshold, self.anchor_vpp
            )));
        }
        Ok(())
    }

    fn rolloff(&self, f: f64) -> f64 {
        1.0 / (1.0 + (f / self.f_c).powf(self.n_roll))
    }

    fn voltage_gain(&self, vpp: f64) -> f64 {
        (vpp - self.v_threshold).max(0.0) / (self.anchor_vpp - self.v_threshold)
    }

    /// Free-flow rate (m³/s).
    pub fn q_max(&self, vpp: f64, f: f64) -> f64 {
        let fa = self.anchor_freq;
        let freq_gain = (f * self.rolloff(f)) / (fa * self.rolloff(fa));
        self.q_cal * self.voltage_gain(vpp) * freq_gain
    }

    /// Frequency of maximum free flow, `f_c * (n - 1)^(-1/n)`.
    pub fn peak_frequency(&self) -> Option<f64> {
        (self.n_roll > 1.0).then(|| self.f_c * (self.n_roll - 1.0).powf(-1.0 / self.n_roll))
    }
}

/// Fluid volume displaced by one full stroke.
pub fn stroke_volume(params: &PumpParams, deflection_pp: f64) -> f64 {
    params.shape_factor * params.chamber_area * deflection_pp
}

pub fn max_backpressure(params: &PumpParams, vpp: f64) -> f64 {
    params.p_max_cal * params.voltage_gain(vpp)
}

/// Net flow rate (m³/s) against a backpressure `dp` (Pa).
pub fn flow_rate(params: &PumpParams, vpp: f64, f: f64, dp: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(validation(format!("frequency must be positive, got {f}")));
    }
    if !(dp >= 0.0) || !dp.is_finite() {
        return Err(validation(format!("backpressure must be non-negative, got {dp}")));
    }
    if !(vpp >= 0.0) || !vpp.is_finite() {
        return Err(validation(format!("vpp must be non-negative, got {vpp}")));
    }
    let p_max = max_backpressure(params, vpp);
    if p_max <= 0.0 || dp >= p_max {
        return Ok(0.0);
    }
    Ok(params.q_max(vpp, f) * (1.0 - dp / p_max))
}

/// Load line sampled at `n_points` uniformly spaced backpressures in
/// `[0, Pmax]`.
pub fn pq_curve(params: &PumpParams, vpp: f64, f: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(validation(format!(
            "pq curve needs at least 2 points, got {n_points}"
        )));
    }
    let p_max = max_backpressure(params, vpp);
    (0..n_points)
        .map(|i| {
            let dp = if i + 1 == n_points {
                p_max
            } else {
                p_max * i as f64 / (n_points - 1) as f64
            };
            Ok((dp, flow_rate(params, vpp, f, dp)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Measured flow (m³/s) at a drive condition and backpressure (Pa).
    Flow { vpp: f64, freq: f64, dp: f64, flow: f64 },
    /// Flow is negligible at and below this amplitude (Vp-p).
    DeadZone { vpp: f64 },
    /// Free flow peaks at this drive frequency (Hz).
    PeakFrequency { freq: f64 },
    /// Total electrical power (W) at a drive condition.
    Power { vpp: f64, freq: f64, watts: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedAnchor {
    pub name: String,
    pub anchor: Anchor,
}

/// Ordered set of calibration anchors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationSet {
    pub anchors: Vec<NamedAnchor>,
}

impl CalibrationSet {
    pub fn push(&mut self, name: impl Into<String>, anchor: Anchor) {
        self.anchors.push(NamedAnchor {
            name: name.into(),
            anchor,
        });
    }

    /// Published operating points of the mini-LIPCA pump.
    pub fn published() -> Self {
        let mut set = CalibrationSet::default();
        set.push(
            "free_flow",
            Anchor::Flow {
                vpp: 160.0,
                freq: 60.0,
                dp: 0.0,
                flow: units::ul_min_to_si(900.0),
            },
        );
        set.push(
            "shut_off",
            Anchor::Flow {
                vpp: 160.0,
                freq: 60.0,
                dp: units::kpa_to_pa(1.8),
                flow: 0.0,
            },
        );
        set.push("dead_zone", Anchor::DeadZone { vpp: 40.0 });
        set.push("flow_peak", Anchor::PeakFrequency { freq: 60.0 });
        set.push(
            "power",
            Anchor::Power {
                vpp: 160.0,
                freq: 60.0,
                watts: 45e-3,
            },
        );
        set
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn power_anchors(&self) -> impl Iterator<Item = (&str, f64, f64, f64)> {
        self.anchors.iter().filter_map(|a| match a.anchor {
            Anchor::Power { vpp, freq, watts } => Some((a.name.as_str(), vpp, freq, watts)),
            _ => None,
        })
    }
}

/// Pump quantities that anchors do not determine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpPriors {
    pub chamber_area: f64,
    pub shape_factor: f64,
    pub n_roll: f64,
}

impl Default for PumpPriors {
    fn default() -> Self {
        PumpPriors {
            chamber_area: 12e-3 * 4e-3,
            shape_factor: 2.0 / 3.0,
            n_roll: 4.0,
        }
    }
}

fn calibration_error(message: impl Into<String>) -> Error {
    Error::Calibration {
        message: message.into(),
        residuals: Vec::new(),
    }
}

pub fn calibrate(anchors: &CalibrationSet) -> Result<PumpParams> {
    calibrate_with(anchors, &PumpPriors::default())
}

/// Fit the pump characteristic to the anchors. The first anchor of each
/// kind pins its parameter; every anchor is then re-evaluated and the fit
/// is rejected if any misses by more than [`ANCHOR_TOLERANCE`].
pub fn calibrate_with(anchors: &CalibrationSet, priors: &PumpPriors) -> Result<PumpParams> {
    if anchors.is_empty() {
        return Err(calibration_error("calibration anchor set is empty"));
    }
    let v_threshold = anchors
        .anchors
        .iter()
        .find_map(|a| match a.anchor {
            Anchor::DeadZone { vpp } => Some(vpp),
            _ => None,
        })
        .ok_or_else(|| calibration_error("no dead-zone anchor"))?;
    let peak = anchors
        .anchors
        .iter()
        .find_map(|a| match a.anchor {
            Anchor::PeakFrequency { freq } => Some(freq),
            _ => None,
        })
        .ok_or_else(|| calibration_error("no peak-frequency anchor"))?;
    if !(priors.n_roll > 1.0) {
        return Err(calibration_error(format!(
            "roll-off order {} has no interior flow peak; need n_roll > 1",
            priors.n_roll
        )));
    }
    let f_c = peak * (priors.n_roll - 1.0).powf(1.0 / priors.n_roll);

    let (anchor_vpp, anchor_freq, q_cal) = anchors
        .anchors
        .iter()
        .find_map(|a| match a.anchor {
            Anchor::Flow { vpp, freq, dp, flow } if dp == 0.0 && flow > 0.0 => Some((vpp, freq, flow)),
            _ => None,
        })
        .ok_or_else(|| calibration_error("no free-flow anchor (dp = 0, flow > 0)"))?;
    if anchor_vpp <= v_threshold {
        return Err(calibration_error(format!(
            "free-flow anchor at {anchor_vpp} Vp-p lies inside the {v_threshold} Vp-p dead zone"
        )));
    }

    let mut params = PumpParams {
        chamber_area: priors.chamber_area,
        shape_factor: priors.shape_factor,
        v_threshold,
        q_cal,
        p_max_cal: f64::NAN,
        f_c,
        n_roll: priors.n_roll,
        anchor_vpp,
        anchor_freq,
    };

    let p_max_at = |vpp: f64| -> Option<f64> {
        let gain = params.voltage_gain(vpp);
        (gain > 0.0).then_some(gain)
    };
    let shut_off = anchors.anchors.iter().find_map(|a| match a.anchor {
        Anchor::Flow { vpp, dp, flow, .. } if flow == 0.0 && dp > 0.0 => p_max_at(vpp).map(|gain| dp / gain),
        _ => None,
    });
    let p_max_cal = match shut_off {
        Some(p) => p,
        None => anchors
            .anchors
            .iter()
            .find_map(|a| match a.anchor {
                Anchor::Flow { vpp, freq, dp, flow } if dp > 0.0 && flow > 0.0 => {
                    let q_max = params.q_max(vpp, freq);
                    let gain = p_max_at(vpp)?;
                    (flow < q_max).then(|| dp / (1.0 - flow / q_max) / gain)
                }
                _ => None,
            })
            .ok_or_else(|| calibration_error("no anchor constrains the shut-off pressure"))?,
    };
    params.p_max_cal = p_max_cal;
    params
        .validate()
        .map_err(|e| calibration_error(format!("fitted parameters invalid: {e}")))?;

    let residuals = anchor_residuals(&params, anchors);
    if residuals.iter().any(|r| !(r.relative <= ANCHOR_TOLERANCE)) {
        return Err(Error::Calibration {
            message: "anchors are inconsistent with the pump model".into(),
            residuals,
        });
    }
    Ok(params)
}

/// Misfit of the pump model at every pump anchor (power anchors skipped).
pub fn anchor_residuals(params: &PumpParams, anchors: &CalibrationSet) -> Vec<Residual> {
    let mut out = Vec::new();
    for a in &anchors.anchors {
        let (target, model, scale) = match a.anchor {
            Anchor::Flow { vpp, freq, dp, flow } => {
                let model = flow_rate(params, vpp, freq, dp).unwrap_or(f64::NAN);
                (flow, model, if flow > 0.0 { flow } else { params.q_cal })
            }
            Anchor::DeadZone { vpp } => {
                let model = flow_rate(params, vpp, params.anchor_freq, 0.0).unwrap_or(f64::NAN);
                (0.0, model, params.q_cal)
            }
            Anchor::PeakFrequency { freq } => (freq, params.peak_frequency().unwrap_or(f64::NAN), freq),
            Anchor::Power { .. } => continue,
        };
        out.push(Residual {
            anchor: a.name.clone(),
            target,
            model,
            relative: (model - target).abs() / scale,
        });
    }
    out
}

/// Quasi-static volume bookkeeping of the three chambers over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamberTrace {
    /// Sample instants, `steps + 1` values spanning one period.
    pub times: Vec<f64>,
    /// Chamber volumes (m³) at each instant.
    pub volumes: Vec<[f64; N_ACTUATORS]>,
    /// Seal flags at each instant.
    pub sealed: Vec<[bool; N_ACTUATORS]>,
    /// Cumulative volume drawn through the inlet (m³).
    pub inlet: Vec<f64>,
    /// Cumulative volume delivered through the outlet (m³).
    pub outlet: Vec<f64>,
    /// Mean of inlet and outlet throughput over the cycle (m³).
    pub net_displaced: f64,
    /// First instant at which no chamber was sealed.
    pub first_violation: Option<f64>,
}

impl ChamberTrace {
    pub fn sealing_ok(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn ensure_sealed(&self) -> Result<()> {
        match self.first_violation {
            None => Ok(()),
            Some(t) => Err(Error::Protocol {
                t,
                detail: "no chamber is sealed; fluid can flow back through the pump".into(),
            }),
        }
    }
}

/// Run the cycle bookkeeping and report seal violations in the trace
/// rather than as an error.
///
/// Chamber `k` holds `c * (1 + x_k)` with `c = shape_factor * area *
/// deflection_pp / 2`, so a full stroke moves [`stroke_volume`]. A chamber
/// at or below the seal threshold blocks the channel. Each step, a
/// chamber's volume change is exchanged with whichever port it still
/// reaches through unsealed neighbours; if it reaches both or neither the
/// change is split evenly.
pub fn trace_cycle(
    schedule: &PhaseSchedule,
    params: &PumpParams,
    deflection_pp: f64,
    steps: usize,
) -> Result<ChamberTrace> {
    if steps < 6 {
        return Err(validation(format!(
            "cycle simulation needs at least 6 steps, got {steps}"
        )));
    }
    if !(deflection_pp >= 0.0) || !deflection_pp.is_finite() {
        return Err(validation(format!(
            "deflection must be non-negative, got {deflection_pp}"
        )));
    }
    let half_stroke = 0.5 * stroke_volume(params, deflection_pp);
    let period = schedule.period();
    let active = schedule.vpp() > 0.0;
    let positions = |t: f64| -> [f64; N_ACTUATORS] {
        if active {
            schedule.positions(t)
        } else {
            [0.0; N_ACTUATORS]
        }
    };

    let times: Vec<f64> = (0..=steps).map(|j| period * j as f64 / steps as f64).collect();
    let mut volumes = Vec::with_capacity(steps + 1);
    let mut sealed = Vec::with_capacity(steps + 1);
    let mut first_violation = None;
    for (j, &t) in times.iter().enumerate() {
        // The cycle closes on the state it started from; evaluating at
        // t = period instead can land a hair before a switching edge.
        let x = positions(if j == steps { 0.0 } else { t });
        let s = x.map(is_sealed);
        volumes.push(x.map(|xk| half_stroke * (1.0 + xk)));
        // An idle pump has nothing to seal against.
        if active && j < steps && first_violation.is_none() && !s.iter().any(|&b| b) {
            first_violation = Some(t);
        }
        sealed.push(s);
    }

    let mut inlet = Vec::with_capacity(steps + 1);
    let mut outlet = Vec::with_capacity(steps + 1);
    let (mut inlet_total, mut outlet_total) = (0.0, 0.0);
    inlet.push(0.0);
    outlet.push(0.0);
    for j in 0..steps {
        let mid = positions(0.5 * (times[j] + times[j + 1])).map(is_sealed);
        let mut into = [0.0; N_ACTUATORS];
        let mut out = [0.0; N_ACTUATORS];
        for k in 0..N_ACTUATORS {
            let dv = volumes[j + 1][k] - volumes[j][k];
            let reaches_inlet = (0..k).all(|i| !mid[i]);
            let reaches_outlet = (k + 1..N_ACTUATORS).all(|i| !mid[i]);
            match (reaches_inlet, reaches_outlet) {
                (true, false) => into[k] = dv,
                (false, true) => out[k] = -dv,
                _ => {
                    into[k] = 0.5 * dv;
                    out[k] = -0.5 * dv;
                }
            }
        }
        // Outlet terms are summed from the outlet end so that mirroring the
        // schedule mirrors the arithmetic exactly.
        let step_in = into[0] + into[1] + into[2];
        let step_out = out[2] + out[1] + out[0];
        inlet_total += step_in;
        outlet_total += step_out;
        inlet.push(inlet_total);
        outlet.push(outlet_total);
    }

    Ok(ChamberTrace {
        times,
        volumes,
        sealed,
        inlet,
        outlet,
        net_displaced: 0.5 * (inlet_total + outlet_total),
        first_violation,
    })
}

/// [`trace_cycle`], failing with a protocol violation if the seal
/// invariant breaks at any sampled instant.
pub fn simulate_cycle(
    schedule: &PhaseSchedule,
    params: &PumpParams,
    deflection_pp: f64,
    steps: usize,
) -> Result<ChamberTrace> {
    let trace = trace_cycle(schedule, params, deflection_pp, steps)?;
    trace.ensure_sealed()?;
    Ok(trace)
}

/// Net displacement of a sinusoidal cycle in units of the stroke volume,
/// `(1 - threshold) / 2`, reached as the step count grows.
pub fn sine_cycle_efficiency() -> f64 {
    0.5 * (1.0 - SEAL_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Shape;
    use approx::assert_relative_eq;

    fn paper() -> PumpParams {
        calibrate(&CalibrationSet::published()).unwrap()
    }

    #[test]
    fn stroke_volume_arithmetic() {
        let mut p = paper();
        p.shape_factor = 2.0 / 3.0;
        p.chamber_area = 24e-6;
        assert_eq!(stroke_volume(&p, 0.0), 0.0);
        assert_relative_eq!(stroke_volume(&p, 50e-6), 0.8e-9, max_relative = 1e-12);
        assert_relative_eq!(
            stroke_volume(&p, 100e-6),
            2.0 * stroke_volume(&p, 50e-6),
            max_relative = 1e-15
        );
    }

    #[test]
    fn published_anchors_round_trip() {
        let p = paper();
        let q = flow_rate(&p, 160.0, 60.0, 0.0).unwrap();
        assert_eq!(q, units::ul_min_to_si(900.0));
        assert_eq!(flow_rate(&p, 160.0, 60.0, 1800.0).unwrap(), 0.0);
        assert_eq!(max_backpressure(&p, 160.0), 1800.0);
        assert_eq!(max_backpressure(&p, 40.0), 0.0);
        assert_relative_eq!(max_backpressure(&p, 100.0), 900.0, max_relative = 1e-12);
    }

    #[test]
    fn corner_frequency_for_sixty_hertz_peak() {
        let p = paper();
        assert_relative_eq!(p.f_c, 60.0 * 3f64.powf(0.25), max_relative = 1e-14);
        assert!((p.f_c - 78.97).abs() < 0.01);
        assert_relative_eq!(p.peak_frequency().unwrap(), 60.0, max_relative = 1e-12);
    }

    #[test]
    fn dead_zone_and_clamp() {
        let p = paper();
        assert_eq!(flow_rate(&p, 30.0, 60.0, 0.0).unwrap(), 0.0);
        assert_eq!(flow_rate(&p, 120.0, 60.0, 5000.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_backpressure_rejected() {
        assert!(matches!(
            flow_rate(&paper(), 160.0, 60.0, -1.0),
            Err(Error::Validation(_))
        ));
        assert!(flow_rate(&paper(), 160.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pq_endpoints_and_midpoint() {
        let p = paper();
        let curve = pq_curve(&p, 160.0, 60.0, 2).unwrap();
        assert_eq!(curve, vec![(0.0, units::ul_min_to_si(900.0)), (1800.0, 0.0)]);
        let curve = pq_curve(&p, 160.0, 60.0, 3).unwrap();
        assert_relative_eq!(curve[1].0, 900.0);
        assert_relative_eq!(curve[1].1, units::ul_min_to_si(450.0), max_relative = 1e-12);
        assert!(pq_curve(&p, 160.0, 60.0, 1).is_err());
    }

    #[test]
    fn empty_anchor_set_rejected() {
        assert!(matches!(
            calibrate(&CalibrationSet::default()),
            Err(Error::Calibration { .. })
        ));
    }

    #[test]
    fn missing_anchor_kinds_fail() {
        let mut set = CalibrationSet::default();
        set.push("dz", Anchor::DeadZone { vpp: 40.0 });
        assert!(matches!(calibrate(&set), Err(Error::Calibration { .. })));
    }

    #[test]
    fn partial_load_anchor_fixes_shut_off() {
        let mut set = CalibrationSet::published();
        set.anchors.remove(1);
        set.push(
            "half",
            Anchor::Flow {
                vpp: 160.0,
                freq: 60.0,
                dp: 900.0,
                flow: units::ul_min_to_si(450.0),
            },
        );
        let p = calibrate(&set).unwrap();
        assert_relative_eq!(p.p_max_cal, 1800.0, max_relative = 1e-12);
    }

    #[test]
    fn inconsistent_anchor_reports_residuals() {
        let mut set = CalibrationSet::published();
        set.push(
            "conflict",
            Anchor::Flow {
                vpp: 160.0,
                freq: 60.0,
                dp: 900.0,
                flow: units::ul_min_to_si(700.0),
            },
        );
        match calibrate(&set) {
            Err(Error::Calibration { residuals, .. }) => {
                let bad: Vec<_> = residuals
                    .iter()
                    .filter(|r| r.relative > ANCHOR_TOLERANCE)
                    .collect();
                assert_eq!(bad.len(), 1);
                assert_eq!(bad[0].anchor, "conflict");
            }
            other => panic!("expected calibration failure, got {other:?}"),
        }
    }

    #[test]
    fn idle_drive_moves_nothing() {
        let s = PhaseSchedule::balanced(0.0, 60.0, Shape::Sine).unwrap();
        let trace = simulate_cycle(&s, &paper(), 20e-6, 60).unwrap();
        assert_eq!(trace.net_displaced, 0.0);
    }

    #[test]
    fn too_few_steps_rejected() {
        let s = PhaseSchedule::balanced(160.0, 60.0, Shape::Sine).unwrap();
        assert!(trace_cycle(&s, &paper(), 1e-5, 5).is_err());
    }

    #[test]
    fn volumes_are_non_negative_and_periodic() {
        let s = PhaseSchedule::balanced(160.0, 60.0, Shape::Sine).unwrap();
        let trace = simulate_cycle(&s, &paper(), 10e-6, 360).unwrap();
        assert!(trace.volumes.iter().flatten().all(|v| *v >= 0.0));
        let (first, last) = (trace.volumes[0], trace.volumes[360]);
        for k in 0..3 {
            assert!((first[k] - last[k]).abs() < 1e-12 * stroke_volume(&paper(), 10e-6));
        }
    }
}
