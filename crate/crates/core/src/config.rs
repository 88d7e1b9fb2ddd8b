//! Versioned run configuration.
//!
//! The file is TOML with `schema = 1` at the top. Keys carry their unit as
//! a suffix (`_pa`, `_m`, `_hz`, ...). Every section is optional; missing
//! sections fall back to the built-in mini-LIPCA defaults, except `[pump]`
//! and `[load]`, which hold fitted values and are written by `calibrate`.
//!
//! ```toml
//! schema = 1
//!
//! [materials.pzt3203hd]
//! e1_pa = 62e9
//! e2_pa = 62e9
//! g12_pa = 23.7e9
//! nu12 = 0.31
//! alpha1_per_k = 3.5e-6
//! alpha2_per_k = 3.5e-6
//! d31_m_per_v = -320e-12
//!
//! [stack]
//! span_m = 0.012
//! width_m = 0.004
//! pzt_index = 1
//! plies = [
//!   { material = "glass_epoxy", thickness_m = 0.09e-3 },
//!   { material = "pzt3203hd", thickness_m = 0.1e-3 },
//!   { material = "carbon_epoxy", thickness_m = 0.1e-3, angle_deg = 0.0 },
//!   { material = "glass_epoxy", thickness_m = 0.09e-3 },
//! ]
//!
//! [schedule]
//! vpp = 160.0
//! freq_hz = 60.0
//! shape = "sine"
//! offsets_deg = [0.0, -120.0, -240.0]
//!
//! [anchors]
//! dead_zone_vpp = 40.0
//! peak_freq_hz = 60.0
//! flow = [
//!   { name = "free_flow", vpp = 160.0, freq_hz = 60.0, dp_pa = 0.0, flow_ul_min = 900.0 },
//!   { name = "shut_off", vpp = 160.0, freq_hz = 60.0, dp_pa = 1800.0, flow_ul_min = 0.0 },
//! ]
//! power = [{ name = "power", vpp = 160.0, freq_hz = 60.0, power_mw = 45.0 }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::laminate::{
    ActuationModel, BendingMode, LaminateStack, Material, Ply, VoltageEnvelope, DEFAULT_CURE_DELTA_T,
    DEFAULT_MAX_VPP,
};
use crate::power::{calibrate_load, LoadModel, DEFAULT_C_EFF, DEFAULT_SENSE_RESISTANCE};
use crate::pump::{calibrate_with, Anchor, CalibrationSet, PumpParams, PumpPriors};
use crate::signal::{PhaseSchedule, Shape, DEFAULT_OFFSETS};
use crate::sweep::Grid;
use crate::units;

pub const SCHEMA_VERSION: u32 = 1;

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub e1_pa: f64,
    pub e2_pa: f64,
    pub g12_pa: f64,
    pub nu12: f64,
    pub alpha1_per_k: f64,
    pub alpha2_per_k: f64,
    #[serde(default)]
    pub d31_m_per_v: f64,
}

impl From<Material> for MaterialEntry {
    fn from(m: Material) -> Self {
        MaterialEntry {
            e1_pa: m.e1,
            e2_pa: m.e2,
            g12_pa: m.g12,
            nu12: m.nu12,
            alpha1_per_k: m.alpha1,
            alpha2_per_k: m.alpha2,
            d31_m_per_v: m.d31,
        }
    }
}

impl From<&MaterialEntry> for Material {
    fn from(m: &MaterialEntry) -> Self {
        Material {
            e1: m.e1_pa,
            e2: m.e2_pa,
            g12: m.g12_pa,
            nu12: m.nu12,
            alpha1: m.alpha1_per_k,
            alpha2: m.alpha2_per_k,
            d31: m.d31_m_per_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlyEntry {
    pub material: String,
    pub thickness_m: f64,
    #[serde(default)]
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackEntry {
    pub span_m: f64,
    pub width_m: f64,
    pub pzt_index: usize,
    pub plies: Vec<PlyEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BendingEntry {
    #[default]
    Plate,
    Cylindrical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationEntry {
    #[serde(default)]
    pub beta_m_per_v: f64,
    #[serde(default = "default_max_vpp")]
    pub max_vpp: f64,
    #[serde(default)]
    pub allow_overdrive: bool,
    #[serde(default)]
    pub bending: BendingEntry,
    #[serde(default = "default_cure")]
    pub cure_delta_t_k: f64,
}

fn default_max_vpp() -> f64 {
    DEFAULT_MAX_VPP
}

fn default_cure() -> f64 {
    DEFAULT_CURE_DELTA_T
}

impl Default for ActuationEntry {
    fn default() -> Self {
        ActuationEntry {
            beta_m_per_v: 0.0,
            max_vpp: DEFAULT_MAX_VPP,
            allow_overdrive: false,
            bending: BendingEntry::Plate,
            cure_delta_t_k: DEFAULT_CURE_DELTA_T,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub vpp: f64,
    pub freq_hz: f64,
    #[serde(default = "default_shape")]
    pub shape: String,
    #[serde(default = "default_offsets")]
    pub offsets_deg: [f64; 3],
}

fn default_shape() -> String {
    "sine".into()
}

fn default_offsets() -> [f64; 3] {
    DEFAULT_OFFSETS.map(units::rad_to_deg)
}

impl Default for ScheduleEntry {
    fn default() -> Self {
        ScheduleEntry {
            vpp: 160.0,
            freq_hz: 60.0,
            shape: default_shape(),
            offsets_deg: [0.0, -120.0, -240.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowAnchorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vpp: f64,
    pub freq_hz: f64,
    #[serde(default)]
    pub dp_pa: f64,
    pub flow_ul_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerAnchorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vpp: f64,
    pub freq_hz: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnchorsEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dead_zone_vpp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_freq_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flow: Vec<FlowAnchorEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power: Vec<PowerAnchorEntry>,
}

/// Values not fixed by the anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsEntry {
    #[serde(default = "default_area")]
    pub chamber_area_m2: f64,
    #[serde(default = "default_shape_factor")]
    pub shape_factor: f64,
    #[serde(default = "default_n_roll")]
    pub n_roll: f64,
    #[serde(default = "default_c_eff")]
    pub c_eff_f: f64,
    #[serde(default = "default_r_e")]
    pub r_e_ohm: f64,
}

fn default_area() -> f64 {
    PumpPriors::default().chamber_area
}
fn default_shape_factor() -> f64 {
    PumpPriors::default().shape_factor
}
fn default_n_roll() -> f64 {
    PumpPriors::default().n_roll
}
fn default_c_eff() -> f64 {
    DEFAULT_C_EFF
}
fn default_r_e() -> f64 {
    DEFAULT_SENSE_RESISTANCE
}

impl Default for PriorsEntry {
    fn default() -> Self {
        PriorsEntry {
            chamber_area_m2: default_area(),
            shape_factor: default_shape_factor(),
            n_roll: default_n_roll(),
            c_eff_f: DEFAULT_C_EFF,
            r_e_ohm: DEFAULT_SENSE_RESISTANCE,
        }
    }
}

/// Fitted pump characteristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpEntry {
    pub chamber_area_m2: f64,
    pub shape_factor: f64,
    pub v_threshold_vpp: f64,
    pub q_cal_m3_per_s: f64,
    pub p_max_cal_pa: f64,
    pub f_c_hz: f64,
    pub n_roll: f64,
    pub anchor_vpp: f64,
    pub anchor_freq_hz: f64,
}

impl From<&PumpParams> for PumpEntry {
    fn from(p: &PumpParams) -> Self {
        PumpEntry {
            chamber_area_m2: p.chamber_area,
            shape_factor: p.shape_factor,
            v_threshold_vpp: p.v_threshold,
            q_cal_m3_per_s: p.q_cal,
            p_max_cal_pa: p.p_max_cal,
            f_c_hz: p.f_c,
            n_roll: p.n_roll,
            anchor_vpp: p.anchor_vpp,
            anchor_freq_hz: p.anchor_freq,
        }
    }
}

impl From<&PumpEntry> for PumpParams {
    fn from(p: &PumpEntry) -> Self {
        PumpParams {
            chamber_area: p.chamber_area_m2,
            shape_factor: p.shape_factor,
            v_threshold: p.v_threshold_vpp,
            q_cal: p.q_cal_m3_per_s,
            p_max_cal: p.p_max_cal_pa,
            f_c: p.f_c_hz,
            n_roll: p.n_roll,
            anchor_vpp: p.anchor_vpp,
            anchor_freq: p.anchor_freq_hz,
        }
    }
}

/// Fitted actuator load model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadEntry {
    pub c_eff_f: f64,
    pub tan_delta: f64,
    pub r_e_ohm: f64,
}

impl From<&LoadModel> for LoadEntry {
    fn from(m: &LoadModel) -> Self {
        LoadEntry {
            c_eff_f: m.c_eff,
            tan_delta: m.tan_delta,
            r_e_ohm: m.r_e,
        }
    }
}

impl From<&LoadEntry> for LoadModel {
    fn from(m: &LoadEntry) -> Self {
        LoadModel {
            c_eff: m.c_eff_f,
            tan_delta: m.tan_delta,
            r_e: m.r_e_ohm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vpp: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_hz: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_period: Option<usize>,
}

/// The configuration document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<StackEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actuation: Option<ActuationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<AnchorsEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<PriorsEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepEntry>,
}

pub fn default_materials() -> BTreeMap<String, MaterialEntry> {
    [
        ("pzt3203hd", Material::PZT3203HD),
        ("carbon_epoxy", Material::CARBON_EPOXY),
        ("glass_epoxy", Material::GLASS_EPOXY),
    ]
    .into_iter()
    .map(|(k, m)| (k.to_string(), m.into()))
    .collect()
}

fn default_stack_entry() -> StackEntry {
    let ply = |material: &str, thickness_m: f64| PlyEntry {
        material: material.into(),
        thickness_m,
        angle_deg: 0.0,
    };
    let preset = LaminateStack::lipca_preset();
    StackEntry {
        span_m: preset.span,
        width_m: preset.width,
        pzt_index: preset.pzt_index,
        plies: vec![
            ply("glass_epoxy", 0.09e-3),
            ply("pzt3203hd", 0.1e-3),
            ply("carbon_epoxy", 0.1e-3),
            ply("glass_epoxy", 0.09e-3),
        ],
    }
}

fn published_anchor_entry() -> AnchorsEntry {
    AnchorsEntry {
        dead_zone_vpp: Some(40.0),
        peak_freq_hz: Some(60.0),
        flow: vec![
            FlowAnchorEntry {
                name: Some("free_flow".into()),
                vpp: 160.0,
                freq_hz: 60.0,
                dp_pa: 0.0,
                flow_ul_min: 900.0,
            },
            FlowAnchorEntry {
                name: Some("shut_off".into()),
                vpp: 160.0,
                freq_hz: 60.0,
                dp_pa: 1800.0,
                flow_ul_min: 0.0,
            },
        ],
        power: vec![PowerAnchorEntry {
            name: Some("power".into()),
            vpp: 160.0,
            freq_hz: 60.0,
            power_mw: 45.0,
        }],
    }
}

impl ConfigFile {
    /// Uncalibrated document with the built-in defaults spelled out.
    pub fn template() -> Self {
        ConfigFile {
            schema: SCHEMA_VERSION,
            materials: default_materials(),
            stack: Some(default_stack_entry()),
            actuation: Some(ActuationEntry::default()),
            schedule: Some(ScheduleEntry::default()),
            anchors: Some(published_anchor_entry()),
            priors: Some(PriorsEntry::default()),
            pump: None,
            load: None,
            sweep: None,
        }
    }

    /// The template with `[pump]` and `[load]` fitted to its anchors.
    pub fn builtin() -> Self {
        let mut doc = Self::template();
        doc.calibrate().expect("built-in anchors calibrate");
        doc
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ConfigFile = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        if doc.schema != SCHEMA_VERSION {
            return Err(config_error(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                doc.schema
            )));
        }
        doc.resolve()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Short SHA-256 digest of the canonical serialisation.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Fit `[pump]` and, when power anchors exist, `[load]`.
    pub fn calibrate(&mut self) -> Result<()> {
        let resolved = self.resolve()?;
        let pump = calibrate_with(&resolved.anchors, &resolved.pump_priors)?;
        self.pump = Some((&pump).into());
        if resolved.anchors.power_anchors().next().is_some() {
            let load = calibrate_load(resolved.anchors.power_anchors(), &resolved.load_prior)?;
            self.load = Some((&load).into());
        }
        Ok(())
    }

    /// Validate and convert into domain values.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut materials = default_materials();
        for (name, entry) in &self.materials {
            materials.insert(name.clone(), entry.clone());
        }
        let stack_entry = self.stack.clone().unwrap_or_else(default_stack_entry);
        let plies = stack_entry
            .plies
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let entry = materials.get(&p.material).ok_or_else(|| {
                    config_error(format!("stack ply {k}: unknown material '{}'", p.material))
                })?;
                Ply::new(entry.into(), p.thickness_m, units::deg_to_rad(p.angle_deg))
                    .map_err(|e| config_error(format!("stack ply {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let stack = LaminateStack::new(
            plies,
            stack_entry.span_m,
            stack_entry.width_m,
            stack_entry.pzt_index,
        )
        .map_err(|e| config_error(format!("stack: {e}")))?;

        let act = self.actuation.clone().unwrap_or_default();
        if !(act.beta_m_per_v >= 0.0 && act.beta_m_per_v.is_finite()) {
            return Err(config_error("actuation.beta_m_per_v must be non-negative"));
        }
        if !(act.max_vpp > 0.0 && act.max_vpp.is_finite()) {
            return Err(config_error("actuation.max_vpp must be positive"));
        }
        if !act.cure_delta_t_k.is_finite() {
            return Err(config_error("actuation.cure_delta_t_k must be finite"));
        }
        let actuation = ActuationModel {
            beta: act.beta_m_per_v,
            envelope: if act.allow_overdrive {
                VoltageEnvelope::Unbounded
            } else {
                VoltageEnvelope::Clamp { max_vpp: act.max_vpp }
            },
            bending: match act.bending {
                BendingEntry::Plate => BendingMode::Plate,
                BendingEntry::Cylindrical => BendingMode::Cylindrical,
            },
        };

        let sched = self.schedule.clone().unwrap_or_default();
        let shape: Shape = sched
            .shape
            .parse()
            .map_err(|e| config_error(format!("schedule: {e}")))?;
        let schedule = PhaseSchedule::new(
            sched.vpp,
            sched.freq_hz,
            shape,
            sched.offsets_deg.map(units::deg_to_rad),
        )
        .map_err(|e| match e {
            Error::Protocol { .. } => e,
            other => config_error(format!("schedule: {other}")),
        })?;

        let priors = self.priors.clone().unwrap_or_default();
        let pump_priors = PumpPriors {
            chamber_area: priors.chamber_area_m2,
            shape_factor: priors.shape_factor,
            n_roll: priors.n_roll,
        };
        for (name, v) in [
            ("chamber_area_m2", priors.chamber_area_m2),
            ("shape_factor", priors.shape_factor),
            ("n_roll", priors.n_roll),
            ("c_eff_f", priors.c_eff_f),
            ("r_e_ohm", priors.r_e_ohm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(format!("priors.{name} must be positive")));
            }
        }
        let load_prior = LoadModel {
            c_eff: priors.c_eff_f,
            tan_delta: 0.0,
            r_e: priors.r_e_ohm,
        };

        let anchors = match &self.anchors {
            Some(a) => anchor_set(a)?,
            None => CalibrationSet::default(),
        };

        let pump = match &self.pump {
            Some(p) => {
                let params: PumpParams = p.into();
                params
                    .validate()
                    .map_err(|e| config_error(format!("pump: {e}")))?;
                Some(params)
            }
            None => None,
        };
        let load = match &self.load {
            Some(l) => {
                let model: LoadModel = l.into();
                model.validate().map_err(|e| config_error(format!("load: {e}")))?;
                Some(model)
            }
            None => None,
        };

        let sweep = self.sweep.clone().unwrap_or_default();
        if let Some(steps) = sweep.steps {
            if steps < 6 {
                return Err(config_error("sweep.steps must be at least 6"));
            }
        }
        if let Some(n) = sweep.dp_points {
            if n < 2 {
                return Err(config_error("sweep.dp_points must be at least 2"));
            }
        }
        if let Some(n) = sweep.samples_per_period {
            if n < 16 {
                return Err(config_error("sweep.samples_per_period must be at least 16"));
            }
        }

        Ok(RunConfig {
            stack,
            actuation,
            cure_delta_t: act.cure_delta_t_k,
            schedule,
            anchors,
            pump_priors,
            load_prior,
            pump,
            load,
            sweep,
        })
    }
}

fn anchor_set(a: &AnchorsEntry) -> Result<CalibrationSet> {
    let mut set = CalibrationSet::default();
    let check = |name: &str, values: &[f64]| -> Result<()> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(config_error(format!(
                "anchor '{name}' has a negative or non-finite value"
            )));
        }
        Ok(())
    };
    for (k, f) in a.flow.iter().enumerate() {
        let name = f.name.clone().unwrap_or_else(|| format!("flow_{k}"));
        check(&name, &[f.vpp, f.freq_hz, f.dp_pa, f.flow_ul_min])?;
        set.push(
            name,
            Anchor::Flow {
                vpp: f.vpp,
                freq: f.freq_hz,
                dp: f.dp_pa,
                flow: units::ul_min_to_si(f.flow_ul_min),
            },
        );
    }
    if let Some(v) = a.dead_zone_vpp {
        check("dead_zone", &[v])?;
        set.push("dead_zone", Anchor::DeadZone { vpp: v });
    }
    if let Some(f) = a.peak_freq_hz {
        check("flow_peak", &[f])?;
        set.push("flow_peak", Anchor::PeakFrequency { freq: f });
    }
    for (k, p) in a.power.iter().enumerate() {
        let name = p.name.clone().unwrap_or_else(|| format!("power_{k}"));
        check(&name, &[p.vpp, p.freq_hz, p.power_mw])?;
        set.push(
            name,
            Anchor::Power {
                vpp: p.vpp,
                freq: p.freq_hz,
                watts: p.power_mw * 1e-3,
            },
        );
    }
    Ok(set)
}

/// Validated run inputs in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stack: LaminateStack,
    pub actuation: ActuationModel,
    pub cure_delta_t: f64,
    pub schedule: PhaseSchedule,
    pub anchors: CalibrationSet,
    pub pump_priors: PumpPriors,
    pub load_prior: LoadModel,
    pub pump: Option<PumpParams>,
    pub load: Option<LoadModel>,
    pub sweep: SweepEntry,
}

impl RunConfig {
    pub fn pump(&self) -> Result<&PumpParams> {
        self.pump
            .as_ref()
            .ok_or_else(|| Error::Uncalibrated("no [pump] section; run `calibrate` first".into()))
    }

    pub fn load(&self) -> Result<&LoadModel> {
        self.load
            .as_ref()
            .ok_or_else(|| Error::Uncalibrated("no [load] section; run `calibrate` first".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_round_trips_through_toml() {
        let doc = ConfigFile::template();
        let text = doc.to_toml_string();
        let back = ConfigFile::from_toml_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.hash(), doc.hash());
    }

    #[test]
    fn builtin_is_calibrated() {
        let run = ConfigFile::builtin().resolve().unwrap();
        let p = run.pump().unwrap();
        assert_eq!(p.v_threshold, 40.0);
        assert!(run.load().is_ok());
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let run = ConfigFile::from_toml_str("schema = 1\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(run.stack, LaminateStack::lipca_preset());
        assert!(run.anchors.is_empty());
        assert!(matches!(run.pump(), Err(Error::Uncalibrated(_))));
    }

    #[test]
    fn wrong_schema_rejected() {
        assert!(matches!(
            ConfigFile::from_toml_str("schema = 2\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ConfigFile::from_toml_str("[stack]\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_keys_and_materials_rejected() {
        assert!(ConfigFile::from_toml_str("schema = 1\nfoo = 3\n").is_err());
        let text = "schema = 1\n[stack]\nspan_m = 0.01\nwidth_m = 0.004\npzt_index = 0\n\
                    plies = [{ material = \"unobtainium\", thickness_m = 1e-4 }]\n";
        assert!(matches!(ConfigFile::from_toml_str(text), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ConfigFile::template();
        let mut b = a.clone();
        b.schedule.as_mut().unwrap().vpp = 120.0;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn grids_accept_text_or_list() {
        let text = "schema = 1\n[sweep]\nvpp = \"20:160:20\"\nfreq_hz = [10.0, 60.0]\n";
        let doc = ConfigFile::from_toml_str(text).unwrap();
        let sweep = doc.sweep.unwrap();
        assert_eq!(sweep.vpp.unwrap().len(), 8);
        assert_eq!(sweep.freq_hz.unwrap().values(), &[10.0, 60.0]);
    }

    #[test]
    fn calibrate_writes_sections() {
        let mut doc = ConfigFile::template();
        doc.calibrate().unwrap();
        let text = doc.to_toml_string();
        assert!(text.contains("[pump]"));
        assert!(text.contains("[load]"));
        let again = ConfigFile::from_toml_str(&text).unwrap();
        assert_eq!(again.pump, doc.pump);
    }
}
