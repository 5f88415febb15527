//! Scenario files, built-in case studies, the closed-form DC-injection
//! circuit and the clearing-time sweep.
//!
//! A scenario is TOML with the sections `[system]`, `[bus.<id>]`,
//! `[branch.<id>]`, `[device.<id>]`, `[event.<n>]`, `[sim]` and
//! `[expect.<device>]`. Unknown keys are rejected. Element ids are ordered
//! naturally (`b2` before `b10`) when the system is built. See
//! `docs/scenario-format.md` for the full grammar.

use crate::cf::{omega_base, Trajectory, MIN_MAG};
use crate::devices::{
    DcCurrentSourceParams, DeviceModel, GflParams, GfmParams, ImParams, PiAvr, Sm2Params, Sm4Params, Sm6Params,
    SmControls, SmInputs, TorqueModulation, VoltageSourceParams, ZipParams,
};
use crate::network::{DynamicBranch, Event, EventKind, FaultLocation, Network, DEFAULT_FAULT_ADMITTANCE};
use crate::sim::{run_simulation, DeviceEntry, PfRole, SimConfig, System};
use crate::synccheck::{analyze, SyncSettings};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{element}: {reason}")]
    Schema { element: String, reason: String },
    #[error("unknown built-in scenario {0:?}")]
    UnknownScenario(String),
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
}

fn schema(element: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        element: element.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemSpec,
    #[serde(default)]
    pub bus: BTreeMap<String, BusSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub branch: BTreeMap<String, BranchSpec>,
    #[serde(default)]
    pub device: BTreeMap<String, DeviceSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub event: BTreeMap<String, EventSpec>,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, ExpectSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    #[serde(default = "default_f_nom")]
    pub f_nom: f64,
}

fn default_base_mva() -> f64 {
    100.0
}

fn default_f_nom() -> f64 {
    60.0
}

fn default_one() -> f64 {
    1.0
}

fn default_area() -> u32 {
    1
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero_pair(p: &[f64; 2]) -> bool {
    *p == [0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    #[serde(default = "default_one")]
    pub base_kv: f64,
    #[serde(default = "default_area")]
    pub area: u32,
    /// Shunt admittance `[g, b]`.
    #[serde(default, skip_serializing_if = "is_zero_pair")]
    pub shunt: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub b: f64,
    #[serde(default = "default_one", skip_serializing_if = "is_one")]
    pub tap: f64,
    /// Series-capacitor reactance.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub xc: f64,
    /// Integrate the series R-L-C with its own states instead of treating
    /// it as a static impedance.
    #[serde(default, skip_serializing_if = "is_false")]
    pub dynamic: bool,
}

/// Power-flow role of a device; powers on the system base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PfSpec {
    Slack {
        v: f64,
        #[serde(default)]
        angle_deg: f64,
    },
    Pv {
        p: f64,
        v: f64,
    },
    Pq {
        p: f64,
        q: f64,
    },
    #[default]
    Model,
}

impl PfSpec {
    fn role(&self) -> PfRole {
        match *self {
            PfSpec::Slack { v, angle_deg } => PfRole::Slack {
                v,
                angle: angle_deg.to_radians(),
            },
            PfSpec::Pv { p, v } => PfRole::Pv { p, v },
            PfSpec::Pq { p, q } => PfRole::Pq { p, q },
            PfSpec::Model => PfRole::Model,
        }
    }

    fn regulates(&self) -> bool {
        matches!(self, PfSpec::Slack { .. } | PfSpec::Pv { .. })
    }
}

fn is_model(p: &PfSpec) -> bool {
    *p == PfSpec::Model
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvrSpec {
    pub kp: f64,
    pub ki: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSpec {
    pub amplitude: f64,
    pub freq_hz: f64,
    #[serde(default)]
    pub start: f64,
}

impl ModulationSpec {
    fn model(&self) -> TorqueModulation {
        TorqueModulation {
            amplitude: self.amplitude,
            freq_hz: self.freq_hz,
            start: self.start,
        }
    }
}

fn controls(avr: Option<AvrSpec>, modulation: Option<ModulationSpec>) -> SmControls {
    SmControls {
        avr: avr.map(|a| PiAvr {
            kp: a.kp,
            ki: a.ki,
            v_ref: 1.0,
        }),
        modulation: modulation.map(|m| m.model()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sm6Spec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    pub pf: PfSpec,
    pub r_s: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd1: f64,
    pub xq1: f64,
    pub xd2: f64,
    pub xq2: f64,
    pub xl: f64,
    pub td0_1: f64,
    pub tq0_1: f64,
    pub td0_2: f64,
    pub tq0_2: f64,
    /// Inertia constant, s.
    pub h: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avr: Option<AvrSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_modulation: Option<ModulationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sm4Spec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    pub pf: PfSpec,
    pub r_s: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd1: f64,
    pub xq1: f64,
    pub td0_1: f64,
    pub tq0_1: f64,
    pub h: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avr: Option<AvrSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_modulation: Option<ModulationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sm2Spec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    pub pf: PfSpec,
    pub xd1: f64,
    pub h: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_modulation: Option<ModulationSpec>,
}

/// ZIP load; `k_p` and `k_q` are the `[z, i, p]` shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZipSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    #[serde(default, skip_serializing_if = "is_model")]
    pub pf: PfSpec,
    pub p0: f64,
    #[serde(default)]
    pub q0: f64,
    #[serde(default = "constant_z")]
    pub k_p: [f64; 3],
    #[serde(default = "constant_z")]
    pub k_q: [f64; 3],
}

fn constant_z() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    #[serde(default, skip_serializing_if = "is_model")]
    pub pf: PfSpec,
    pub r_s: f64,
    pub x_s: f64,
    pub r_r1: f64,
    pub x_r1: f64,
    pub x_mu: f64,
    pub h_m: f64,
    pub tau_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    pub pf: PfSpec,
    pub kp: f64,
    pub ki: f64,
    pub t_m: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    pub v_dc0: f64,
    pub z_f: [f64; 2],
    #[serde(default)]
    pub y_f: [f64; 2],
    #[serde(default = "default_one")]
    pub omega_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfmSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    pub pf: PfSpec,
    pub kp: f64,
    pub ki: f64,
    pub t_v: f64,
    pub t_p: f64,
    pub m_p: f64,
    pub z_t: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageSourceSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    #[serde(default, skip_serializing_if = "is_model")]
    pub pf: PfSpec,
    pub z: [f64; 2],
    /// EMF `[re, im]`; replaced by the power-flow solution unless `pf` is
    /// `model`.
    #[serde(default = "unit_emf")]
    pub emf: [f64; 2],
}

fn unit_emf() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcSourceSpec {
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mva: Option<f64>,
    #[serde(default, skip_serializing_if = "is_model")]
    pub pf: PfSpec,
    pub magnitude: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceSpec {
    Sm6(Sm6Spec),
    Sm4(Sm4Spec),
    Sm2(Sm2Spec),
    Zip(ZipSpec),
    InductionMotor(MotorSpec),
    GflIbr(GflSpec),
    GfmIbr(GfmSpec),
    VoltageSource(VoltageSourceSpec),
    DcCurrentSource(DcSourceSpec),
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl DeviceSpec {
    pub fn bus(&self) -> &str {
        match self {
            DeviceSpec::Sm6(s) => &s.bus,
            DeviceSpec::Sm4(s) => &s.bus,
            DeviceSpec::Sm2(s) => &s.bus,
            DeviceSpec::Zip(s) => &s.bus,
            DeviceSpec::InductionMotor(s) => &s.bus,
            DeviceSpec::GflIbr(s) => &s.bus,
            DeviceSpec::GfmIbr(s) => &s.bus,
            DeviceSpec::VoltageSource(s) => &s.bus,
            DeviceSpec::DcCurrentSource(s) => &s.bus,
        }
    }

    pub fn mva(&self) -> Option<f64> {
        match self {
            DeviceSpec::Sm6(s) => s.mva,
            DeviceSpec::Sm4(s) => s.mva,
            DeviceSpec::Sm2(s) => s.mva,
            DeviceSpec::Zip(s) => s.mva,
            DeviceSpec::InductionMotor(s) => s.mva,
            DeviceSpec::GflIbr(s) => s.mva,
            DeviceSpec::GfmIbr(s) => s.mva,
            DeviceSpec::VoltageSource(s) => s.mva,
            DeviceSpec::DcCurrentSource(s) => s.mva,
        }
    }

    pub fn pf(&self) -> PfSpec {
        match self {
            DeviceSpec::Sm6(s) => s.pf,
            DeviceSpec::Sm4(s) => s.pf,
            DeviceSpec::Sm2(s) => s.pf,
            DeviceSpec::Zip(s) => s.pf,
            DeviceSpec::InductionMotor(s) => s.pf,
            DeviceSpec::GflIbr(s) => s.pf,
            DeviceSpec::GfmIbr(s) => s.pf,
            DeviceSpec::VoltageSource(s) => s.pf,
            DeviceSpec::DcCurrentSource(s) => s.pf,
        }
    }

    /// Device model with nominal inputs; setpoints are back-solved later.
    pub fn model(&self, f_nom: f64) -> DeviceModel {
        let ob = omega_base(f_nom);
        let inputs = SmInputs { tau_m: 0.0, v_f: 1.0 };
        match self {
            DeviceSpec::Sm6(s) => DeviceModel::Sm6 {
                params: Sm6Params {
                    r_s: s.r_s,
                    xd: s.xd,
                    xq: s.xq,
                    xd1: s.xd1,
                    xq1: s.xq1,
                    xd2: s.xd2,
                    xq2: s.xq2,
                    xl: s.xl,
                    td0_1: s.td0_1,
                    tq0_1: s.tq0_1,
                    td0_2: s.td0_2,
                    tq0_2: s.tq0_2,
                    m: 2.0 * s.h,
                    d: s.d,
                    omega_base: ob,
                },
                inputs,
                controls: controls(s.avr, s.torque_modulation),
            },
            DeviceSpec::Sm4(s) => DeviceModel::Sm4 {
                params: Sm4Params {
                    r_s: s.r_s,
                    xd: s.xd,
                    xq: s.xq,
                    xd1: s.xd1,
                    xq1: s.xq1,
                    td0_1: s.td0_1,
                    tq0_1: s.tq0_1,
                    m: 2.0 * s.h,
                    d: s.d,
                    omega_base: ob,
                },
                inputs,
                controls: controls(s.avr, s.torque_modulation),
            },
            DeviceSpec::Sm2(s) => DeviceModel::Sm2 {
                params: Sm2Params {
                    xd1: s.xd1,
                    m: 2.0 * s.h,
                    d: s.d,
                    omega_base: ob,
                },
                inputs,
                controls: controls(None, s.torque_modulation),
            },
            DeviceSpec::Zip(s) => DeviceModel::Zip(ZipParams {
                p0: s.p0,
                q0: s.q0,
                k_zp: s.k_p[0],
                k_ip: s.k_p[1],
                k_pp: s.k_p[2],
                k_zq: s.k_q[0],
                k_iq: s.k_q[1],
                k_pq: s.k_q[2],
            }),
            DeviceSpec::InductionMotor(s) => DeviceModel::InductionMotor {
                params: ImParams {
                    r_s: s.r_s,
                    x_s: s.x_s,
                    r_r1: s.r_r1,
                    x_r1: s.x_r1,
                    x_mu: s.x_mu,
                    h_m: s.h_m,
                    omega_base: ob,
                },
                tau_m: s.tau_m,
            },
            DeviceSpec::GflIbr(s) => DeviceModel::Gfl(GflParams {
                kp: s.kp,
                ki: s.ki,
                t_m: s.t_m,
                kp_pll: s.kp_pll,
                ki_pll: s.ki_pll,
                v_dc0: s.v_dc0,
                z_f: c(s.z_f),
                y_f: c(s.y_f),
                omega_ref: s.omega_ref,
                i_ref: Complex64::new(0.0, 0.0),
                omega_base: ob,
            }),
            DeviceSpec::GfmIbr(s) => DeviceModel::Gfm(GfmParams {
                kp: s.kp,
                ki: s.ki,
                t_v: s.t_v,
                t_p: s.t_p,
                m_p: s.m_p,
                p_ref: 0.0,
                v_ref: 1.0,
                z_t: c(s.z_t),
                omega_base: ob,
            }),
            DeviceSpec::VoltageSource(s) => DeviceModel::VoltageSource(VoltageSourceParams {
                z: c(s.z),
                emf: c(s.emf),
            }),
            DeviceSpec::DcCurrentSource(s) => DeviceModel::DcCurrentSource(DcCurrentSourceParams {
                magnitude: s.magnitude,
                phase: s.phase_deg.to_radians(),
                omega_base: ob,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    /// Shunt fault at a bus or at the midpoint of a static branch.
    ApplyFault {
        time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bus: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        admittance: Option<[f64; 2]>,
    },
    ClearFault {
        time: f64,
    },
    OpenBranch {
        time: f64,
        branch: String,
    },
    DisconnectDevice {
        time: f64,
        device: String,
    },
}

impl EventSpec {
    pub fn time(&self) -> f64 {
        match self {
            EventSpec::ApplyFault { time, .. }
            | EventSpec::ClearFault { time }
            | EventSpec::OpenBranch { time, .. }
            | EventSpec::DisconnectDevice { time, .. } => *time,
        }
    }

    fn set_time(&mut self, t: f64) {
        match self {
            EventSpec::ApplyFault { time, .. }
            | EventSpec::ClearFault { time }
            | EventSpec::OpenBranch { time, .. }
            | EventSpec::DisconnectDevice { time, .. } => *time = t,
        }
    }

    /// Element the event acts on, for the duplicate-time check.
    fn element(&self) -> String {
        match self {
            EventSpec::ApplyFault { bus: Some(b), .. } => format!("bus {b}"),
            EventSpec::ApplyFault { branch: Some(b), .. } => format!("branch {b}"),
            EventSpec::ApplyFault { .. } | EventSpec::ClearFault { .. } => "fault".into(),
            EventSpec::OpenBranch { branch, .. } => format!("branch {branch}"),
            EventSpec::DisconnectDevice { device, .. } => format!("device {device}"),
        }
    }

    fn kind(&self) -> Result<EventKind, ScenarioError> {
        Ok(match self {
            EventSpec::ApplyFault {
                bus,
                branch,
                admittance,
                ..
            } => EventKind::ApplyFault {
                location: match (bus, branch) {
                    (Some(b), None) => FaultLocation::Bus(b.clone()),
                    (None, Some(b)) => FaultLocation::BranchMidpoint(b.clone()),
                    _ => return Err(schema("event", "apply_fault needs exactly one of `bus` or `branch`")),
                },
                admittance: admittance.map_or(DEFAULT_FAULT_ADMITTANCE, c),
            },
            EventSpec::ClearFault { .. } => EventKind::ClearFault,
            EventSpec::OpenBranch { branch, .. } => EventKind::OpenBranch(branch.clone()),
            EventSpec::DisconnectDevice { device, .. } => EventKind::DisconnectDevice(device.clone()),
        })
    }
}

/// Simulation and verdict settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_decimation: usize,
    pub epsilon: f64,
    pub tail_tol: f64,
    pub settle: f64,
    pub tail_window: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        let c = SimConfig::default();
        let s = SyncSettings::default();
        Self {
            dt: c.dt,
            t_end: c.t_end,
            newton_tol: c.newton_tol,
            newton_max_iter: c.newton_max_iter,
            record_decimation: c.record_decimation,
            epsilon: s.epsilon,
            tail_tol: s.tail_tol,
            settle: s.settle,
            tail_window: s.tail_window,
        }
    }
}

/// Expected verdicts, for regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bls: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub als: Option<bool>,
}

/// Ordering that compares digit runs numerically.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for k in 1..=bytes.len() {
            if k == bytes.len() || bytes[k].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..k]));
                start = k;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let o = match (x.0, y.0) {
            (true, true) => {
                let (tx, ty) = (x.1.trim_start_matches('0'), y.1.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
            }
            _ => x.1.cmp(y.1),
        };
        if o != Ordering::Equal {
            return o;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

fn sorted_keys<V>(map: &BTreeMap<String, V>) -> Vec<&String> {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort_by(|a, b| natural_cmp(a, b));
    keys
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.chars().count(), |p| before[p + 1..].chars().count())
        + 1;
    (line, column)
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario values are always representable")
    }

    pub fn name(&self) -> &str {
        &self.system.name
    }

    /// Events in time order; ties keep the natural order of their keys.
    pub fn ordered_events(&self) -> Vec<(&String, &EventSpec)> {
        let mut ev: Vec<(&String, &EventSpec)> = sorted_keys(&self.event)
            .into_iter()
            .map(|k| (k, &self.event[k]))
            .collect();
        ev.sort_by(|a, b| a.1.time().total_cmp(&b.1.time()));
        ev
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let sys = &self.system;
        if sys.name.is_empty()
            || !sys
                .name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
        {
            return Err(schema(
                "system",
                "name must be non-empty ASCII letters, digits, `_` or `-`",
            ));
        }
        if !(sys.base_mva > 0.0) || !(sys.f_nom > 0.0) {
            return Err(schema("system", "base_mva and f_nom must be positive"));
        }
        if self.bus.is_empty() {
            return Err(schema("bus", "at least one bus is required"));
        }
        for (id, b) in &self.bus {
            if !(b.base_kv > 0.0) || !b.shunt.iter().all(|x| x.is_finite()) {
                return Err(schema(format!("bus {id}"), "base_kv must be positive and shunt finite"));
            }
        }
        for (id, br) in &self.branch {
            let el = format!("branch {id}");
            for end in [&br.from, &br.to] {
                if !self.bus.contains_key(end) {
                    return Err(schema(el, format!("references undeclared bus {end}")));
                }
            }
            if br.from == br.to {
                return Err(schema(el, "both ends on the same bus"));
            }
            if !(br.r >= 0.0) || !br.x.is_finite() || !br.b.is_finite() || !(br.tap > 0.0) || !(br.xc >= 0.0) {
                return Err(schema(el, "needs r ≥ 0, finite x and b, tap > 0, xc ≥ 0"));
            }
            if br.dynamic {
                if !(br.x > 0.0) || !(br.xc > 0.0) || br.tap != 1.0 || br.b != 0.0 {
                    return Err(schema(
                        el,
                        "a dynamic branch needs x > 0, xc > 0, no tap and no charging",
                    ));
                }
            } else if br.r == 0.0 && br.x - br.xc == 0.0 {
                return Err(schema(el, "zero series impedance"));
            }
        }
        let mut regulated: BTreeMap<&str, &str> = BTreeMap::new();
        for (id, d) in &self.device {
            let el = format!("device {id}");
            if !self.bus.contains_key(d.bus()) {
                return Err(schema(el, format!("references undeclared bus {}", d.bus())));
            }
            if let Some(m) = d.mva() {
                if !(m > 0.0) {
                    return Err(schema(el, "mva must be positive"));
                }
            }
            if d.pf().regulates() {
                if let Some(other) = regulated.insert(d.bus(), id) {
                    return Err(schema(el, format!("bus {} is already regulated by {other}", d.bus())));
                }
            }
            d.model(sys.f_nom)
                .validate()
                .map_err(|e| schema(format!("device {id}"), e.to_string()))?;
        }
        let mut fault_active = false;
        let mut seen: BTreeSet<(String, u64)> = BTreeSet::new();
        for (key, e) in self.ordered_events() {
            let el = format!("event {key}");
            let t = e.time();
            if !(t >= 0.0) || !t.is_finite() {
                return Err(schema(el, "time must be finite and non-negative"));
            }
            if !seen.insert((e.element(), t.to_bits())) {
                return Err(schema(el, format!("duplicate event time {t} on {}", e.element())));
            }
            match e {
                EventSpec::ApplyFault { bus, branch, .. } => {
                    match (bus, branch) {
                        (Some(b), None) if !self.bus.contains_key(b) => {
                            return Err(schema(el, format!("references undeclared bus {b}")))
                        }
                        (None, Some(b)) => match self.branch.get(b) {
                            None => return Err(schema(el, format!("references undeclared branch {b}"))),
                            Some(br) if br.dynamic || br.tap != 1.0 => {
                                return Err(schema(el, format!("branch {b} cannot carry a midpoint fault")))
                            }
                            _ => {}
                        },
                        (Some(_), None) => {}
                        _ => return Err(schema(el, "apply_fault needs exactly one of `bus` or `branch`")),
                    }
                    fault_active = true;
                }
                EventSpec::ClearFault { .. } => {
                    if !fault_active {
                        return Err(schema(el, "clear_fault without an earlier apply_fault"));
                    }
                    fault_active = false;
                }
                EventSpec::OpenBranch { branch, .. } => {
                    if !self.branch.contains_key(branch) {
                        return Err(schema(el, format!("references undeclared branch {branch}")));
                    }
                }
                EventSpec::DisconnectDevice { device, .. } => {
                    if !self.device.contains_key(device) {
                        return Err(schema(el, format!("references undeclared device {device}")));
                    }
                }
            }
        }
        self.sim_config().validate().map_err(|e| schema("sim", e.to_string()))?;
        let s = &self.sim;
        if !(s.epsilon > 0.0 && s.tail_tol > 0.0 && s.settle >= 0.0 && s.tail_window > 0.0) {
            return Err(schema(
                "sim",
                "epsilon, tail_tol, tail_window must be positive and settle non-negative",
            ));
        }
        for e in self.event.values() {
            if e.time() > s.t_end {
                return Err(schema("sim", format!("event at t = {} is after t_end", e.time())));
            }
        }
        for id in self.expect.keys() {
            if !self.device.contains_key(id) {
                return Err(schema(format!("expect {id}"), "references undeclared device"));
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            newton_tol: self.sim.newton_tol,
            newton_max_iter: self.sim.newton_max_iter,
            record_decimation: self.sim.record_decimation,
        }
    }

    pub fn sync_settings(&self) -> SyncSettings {
        SyncSettings {
            epsilon: self.sim.epsilon,
            tail_tol: self.sim.tail_tol,
            settle: self.sim.settle,
            tail_window: self.sim.tail_window,
            ..SyncSettings::default()
        }
    }

    /// Network, devices and events ready for [`run_simulation`].
    pub fn build_system(&self) -> Result<System, ScenarioError> {
        self.validate()?;
        let sys = &self.system;
        let mut net = Network::new(sys.base_mva, sys.f_nom);
        for id in sorted_keys(&self.bus) {
            let b = &self.bus[id];
            let k = net.add_bus(id, b.base_kv);
            net.buses[k].area = b.area;
            net.buses[k].shunt = c(b.shunt);
        }
        let node = |id: &str| net.bus_index(id).expect("validated");
        let mut statics = Vec::new();
        let mut dynamic = Vec::new();
        for id in sorted_keys(&self.branch) {
            let br = &self.branch[id];
            let (from, to) = (node(&br.from), node(&br.to));
            if br.dynamic {
                dynamic.push(DynamicBranch {
                    id: id.clone(),
                    from,
                    to,
                    r: br.r,
                    l: br.x,
                    c: 1.0 / br.xc,
                    in_service: true,
                });
            } else {
                statics.push((id, from, to, br));
            }
        }
        for (id, from, to, br) in statics {
            let k = net.add_branch(id, from, to, br.r, br.x - br.xc, br.b);
            net.branches[k].tap = br.tap;
        }
        net.dynamic = dynamic;
        let devices = sorted_keys(&self.device)
            .into_iter()
            .map(|id| {
                let d = &self.device[id];
                DeviceEntry {
                    id: id.clone(),
                    node: net.bus_index(d.bus()).expect("validated"),
                    model: d.model(sys.f_nom),
                    scale: d.mva().unwrap_or(sys.base_mva) / sys.base_mva,
                    pf: d.pf().role(),
                }
            })
            .collect();
        let events = self
            .ordered_events()
            .into_iter()
            .map(|(_, e)| {
                Ok(Event {
                    time: e.time(),
                    kind: e.kind()?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(System {
            network: net,
            devices,
            events,
        })
    }

    /// The single fault application and clearance, as event keys.
    fn fault_pair(&self) -> Result<(String, String), ScenarioError> {
        let applies: Vec<&String> = self
            .event
            .iter()
            .filter(|(_, e)| matches!(e, EventSpec::ApplyFault { .. }))
            .map(|(k, _)| k)
            .collect();
        let clears: Vec<&String> = self
            .event
            .iter()
            .filter(|(_, e)| matches!(e, EventSpec::ClearFault { .. }))
            .map(|(k, _)| k)
            .collect();
        match (applies.as_slice(), clears.as_slice()) {
            ([a], [c]) => Ok(((*a).clone(), (*c).clone())),
            _ => Err(schema(
                "event",
                format!(
                    "a clearing-time sweep needs exactly one apply_fault and one clear_fault (found {} and {})",
                    applies.len(),
                    clears.len()
                ),
            )),
        }
    }

    /// Copy with the fault cleared at `t_cl`; branch openings and device
    /// disconnections scheduled at the old clearing time move with it.
    pub fn with_clear_time(&self, t_cl: f64) -> Result<Scenario, ScenarioError> {
        let (apply, clear) = self.fault_pair()?;
        let t_apply = self.event[&apply].time();
        if !(t_cl > t_apply) {
            return Err(schema(
                "event",
                format!("clearing time {t_cl} must follow the fault at {t_apply}"),
            ));
        }
        let old = self.event[&clear].time();
        let mut out = self.clone();
        for e in out.event.values_mut() {
            if e.time() == old && !matches!(e, EventSpec::ApplyFault { .. }) {
                e.set_time(t_cl);
            }
        }
        out.validate()?;
        Ok(out)
    }
}

const BUILTIN_SOURCES: [(&str, &str); 6] = [
    ("circuit_dc", include_str!("../scenarios/circuit_dc.toml")),
    ("smib", include_str!("../scenarios/smib.toml")),
    ("kundur", include_str!("../scenarios/kundur.toml")),
    ("motor_condenser", include_str!("../scenarios/motor_condenser.toml")),
    ("gfl_seriescomp", include_str!("../scenarios/gfl_seriescomp.toml")),
    (
        "sustained_oscillation",
        include_str!("../scenarios/sustained_oscillation.toml"),
    ),
];

/// Names of the built-in scenarios.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n).collect()
}

/// Source text of a built-in scenario.
pub fn builtin_source(name: &str) -> Result<&'static str, ScenarioError> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
}

pub fn build_builtin(name: &str) -> Result<Scenario, ScenarioError> {
    load_scenario(builtin_source(name)?)
}

/// Parameters of the single-bus circuit with a voltage source, a
/// constant-impedance load and a DC current injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitDcParams {
    pub emf: Complex64,
    /// Source impedance.
    pub z: Complex64,
    /// Load admittance (injection `−y·v`).
    pub y_load: Complex64,
    pub i_dc: f64,
    /// Phase of the DC injection vector at `t = 0`, rad.
    pub phase: f64,
    pub omega_base: f64,
}

impl CircuitDcParams {
    /// Reads the circuit off a scenario with one bus, one voltage source,
    /// one constant-impedance ZIP load and one DC current source.
    pub fn from_scenario(s: &Scenario) -> Result<Self, ScenarioError> {
        if s.bus.len() != 1 || s.device.len() != 3 {
            return Err(ScenarioError::ParamDomain(
                "the DC-injection circuit has one bus and three devices".into(),
            ));
        }
        let scale = |d: &DeviceSpec| d.mva().unwrap_or(s.system.base_mva) / s.system.base_mva;
        let (mut vs, mut load, mut dc) = (None, None, None);
        for d in s.device.values() {
            match d {
                DeviceSpec::VoltageSource(v) => vs = Some((v, scale(d))),
                DeviceSpec::Zip(z) if z.k_p == constant_z() && z.k_q == constant_z() => load = Some((z, scale(d))),
                DeviceSpec::DcCurrentSource(i) => dc = Some((i, scale(d))),
                _ => {}
            }
        }
        match (vs, load, dc) {
            (Some((v, kv)), Some((z, kz)), Some((i, ki))) => Ok(Self {
                emf: c(v.emf),
                z: c(v.z) / kv,
                y_load: Complex64::new(z.p0, -z.q0) * kz,
                i_dc: i.magnitude * ki,
                phase: i.phase_deg.to_radians(),
                omega_base: omega_base(s.system.f_nom),
            }),
            _ => Err(ScenarioError::ParamDomain(
                "expected a voltage source, a constant-impedance load and a DC current source".into(),
            )),
        }
    }

    /// Injected DC-source current in the synchronous frame.
    pub fn dc_current(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.i_dc, self.phase - self.omega_base * t)
    }

    /// Bus voltage from superposition: the nominal-frequency response to
    /// the EMF plus the response to the DC injection.
    pub fn voltage(&self, t: f64) -> Complex64 {
        let y_total = 1.0 / self.z + self.y_load;
        self.emf / self.z / y_total + self.dc_current(t) / y_total
    }

    /// KCL residual at the bus.
    pub fn kcl_residual(&self, v: Complex64, i_dc: Complex64) -> Complex64 {
        (self.emf - v) / self.z - self.y_load * v + i_dc
    }
}

/// Closed-form bus voltage and DC-source current, sampled every `dt` up to
/// `t_end` in the synchronous frame.
pub fn circuit_dc_waveforms(
    params: &CircuitDcParams,
    dt: f64,
    t_end: f64,
) -> Result<(Trajectory, Trajectory), ScenarioError> {
    let y_total = 1.0 / params.z + params.y_load;
    if !(dt > 0.0)
        || !(t_end >= dt)
        || !(params.z.norm() > 0.0)
        || !(y_total.norm() > MIN_MAG)
        || !(params.omega_base > 0.0)
    {
        return Err(ScenarioError::ParamDomain(
            "need dt > 0, t_end ≥ dt, nonzero source impedance and nonsingular bus admittance".into(),
        ));
    }
    let n = (t_end / dt).round() as usize + 1;
    let times = (0..n).map(|k| k as f64 * dt);
    let traj = |samples: Vec<Complex64>| Trajectory {
        t0: 0.0,
        dt,
        omega_base: params.omega_base,
        frame_speed: 1.0,
        samples,
    };
    let v = traj(times.clone().map(|t| params.voltage(t)).collect());
    let i = traj(times.map(|t| params.dc_current(t)).collect());
    Ok((v, i))
}

/// One clearing time of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_cl: f64,
    /// Internal-angle spread stayed below 180°.
    pub stable: Option<bool>,
    /// Every machine passed ALS.
    pub als_pass: Option<bool>,
    /// Largest internal-angle spread, degrees.
    pub max_delta_swing: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `(largest passing, smallest failing)` clearing times when the
    /// verdicts switch exactly once from pass to fail.
    pub boundary: Option<(f64, f64)>,
    /// ALS verdicts never return to pass after the first failure.
    pub monotone: bool,
}

/// Clearing times `from, from + step, …` up to `to` (inclusive, with a
/// small tolerance for round-off).
pub fn sweep_points(from: f64, to: f64, step: f64) -> Result<Vec<f64>, ScenarioError> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(ScenarioError::ParamDomain(format!(
            "empty sweep range [{from}, {to}] with step {step}"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| from + k as f64 * step).collect())
}

fn sweep_point(scenario: &Scenario, t_cl: f64) -> SweepRow {
    let run = || -> Result<(bool, bool, f64), String> {
        let sc = scenario.with_clear_time(t_cl).map_err(|e| e.to_string())?;
        let system = sc.build_system().map_err(|e| e.to_string())?;
        let result = run_simulation(&system, &sc.sim_config()).map_err(|e| e.to_string())?;
        let a = analyze(&result, &sc.sync_settings()).map_err(|e| e.to_string())?;
        let connected: Vec<_> = a
            .devices
            .iter()
            .filter(|d| result.device(&d.id).is_some_and(|r| r.disconnected_at.is_none()))
            .collect();
        let machines: Vec<_> = connected
            .iter()
            .filter(|d| d.verdict.kind.is_synchronous_machine())
            .copied()
            .collect();
        let judged = if machines.is_empty() { connected } else { machines };
        let als = judged.iter().all(|d| d.verdict.als.as_ref().is_some_and(|v| v.pass));
        Ok((!a.unstable, als, a.max_angle_spread.to_degrees()))
    };
    match run() {
        Ok((stable, als, swing)) => SweepRow {
            t_cl,
            stable: Some(stable),
            als_pass: Some(als),
            max_delta_swing: Some(swing),
            error: None,
        },
        Err(e) => SweepRow {
            t_cl,
            stable: None,
            als_pass: None,
            max_delta_swing: None,
            error: Some(e),
        },
    }
}

/// Runs the scenario once per clearing time, in parallel. Failed runs are
/// recorded in their row and the sweep continues.
pub fn cct_sweep(scenario: &Scenario, from: f64, to: f64, step: f64) -> Result<SweepTable, ScenarioError> {
    let (apply, _) = scenario.fault_pair()?;
    let apply = scenario.event[&apply].time();
    let points = sweep_points(from, to, step)?;
    if points[0] <= apply {
        return Err(ScenarioError::ParamDomain(format!(
            "clearing times must follow the fault at {apply} s"
        )));
    }
    let rows: Vec<SweepRow> = points.par_iter().map(|&t| sweep_point(scenario, t)).collect();
    Ok(summarize(rows))
}

fn summarize(rows: Vec<SweepRow>) -> SweepTable {
    let verdicts: Vec<Option<bool>> = rows.iter().map(|r| r.als_pass).collect();
    let first_fail = verdicts.iter().position(|v| *v != Some(true));
    let monotone = match first_fail {
        None => true,
        Some(k) => verdicts[k..].iter().all(|v| *v == Some(false)),
    };
    let boundary = match first_fail {
        Some(k) if k > 0 && monotone => Some((rows[k - 1].t_cl, rows[k].t_cl)),
        _ => None,
    };
    SweepTable {
        rows,
        boundary,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order() {
        let mut v = vec!["b10", "b2", "a", "b1", "b02x"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["a", "b1", "b2", "b02x", "b10"]);
    }

    #[test]
    fn all_builtins_load_and_round_trip() {
        assert_eq!(builtin_names().len(), 6);
        for name in builtin_names() {
            let s = build_builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name(), name);
            let back = load_scenario(&s.to_toml()).unwrap();
            assert_eq!(back, s, "{name}");
            s.build_system().unwrap();
        }
        assert!(matches!(build_builtin("nope"), Err(ScenarioError::UnknownScenario(_))));
    }

    const MINI: &str = r#"
[system]
name = "mini"

[bus.a]
[bus.b]

[branch.l1]
from = "a"
to = "b"
x = 0.1

[device.src]
kind = "voltage_source"
bus = "a"
z = [0.0, 0.01]
pf = { type = "slack", v = 1.0 }

[device.load]
kind = "zip"
bus = "b"
p0 = 0.5
q0 = 0.1

[event.1]
kind = "apply_fault"
time = 1.0
bus = "b"

[event.2]
kind = "clear_fault"
time = 1.1
"#;

    #[test]
    fn mini_scenario_builds() {
        let s = load_scenario(MINI).unwrap();
        let sys = s.build_system().unwrap();
        assert_eq!(sys.network.buses.len(), 2);
        assert_eq!(sys.devices[0].id, "load");
        assert_eq!(sys.events.len(), 2);
        assert_eq!(s.sim, SimSpec::default());
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_position() {
        let text = MINI.replace("p0 = 0.5", "p0 = 0.5\npee = 1");
        match load_scenario(&text) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        let text = MINI.replace("[system]\nname", "[system]\nnmae");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn schema_errors_name_the_element() {
        let text = MINI.replace("bus = \"b\"\np0", "bus = \"zz\"\np0");
        match load_scenario(&text) {
            Err(ScenarioError::Schema { element, reason }) => {
                assert_eq!(element, "device load");
                assert!(reason.contains("zz"));
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{MINI}\n[event.3]\nkind = \"open_branch\"\ntime = 2.0\nbranch = \"l1\"\n[event.4]\nkind = \"open_branch\"\ntime = 2.0\nbranch = \"l1\"\n");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Schema { .. })));
        let text = MINI.replace("time = 1.1", "time = 0.9");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Schema { .. })));
    }

    #[test]
    fn clear_time_moves_companion_events() {
        let s = build_builtin("smib").unwrap();
        let s2 = s.with_clear_time(1.17).unwrap();
        let times: Vec<f64> = s2.ordered_events().iter().map(|e| e.1.time()).collect();
        assert_eq!(times[0], 1.0);
        assert!(times[1..].iter().all(|t| *t == 1.17));
        assert!(s.with_clear_time(0.5).is_err());
        assert!(load_scenario(MINI).unwrap().with_clear_time(1.2).is_ok());
    }

    #[test]
    fn sweep_points_and_summary() {
        let p = sweep_points(1.05, 1.2, 0.01).unwrap();
        assert_eq!(p.len(), 16);
        assert!(sweep_points(1.2, 1.05, 0.01).is_err());
        let row = |t, als| SweepRow {
            t_cl: t,
            stable: Some(als),
            als_pass: Some(als),
            max_delta_swing: Some(0.0),
            error: None,
        };
        let t = summarize(vec![row(1.0, true), row(1.1, true), row(1.2, false)]);
        assert!(t.monotone);
        assert_eq!(t.boundary, Some((1.1, 1.2)));
        let t = summarize(vec![row(1.0, true), row(1.1, false), row(1.2, true)]);
        assert!(!t.monotone && t.boundary.is_none());
    }

    #[test]
    fn circuit_waveforms_satisfy_kcl() {
        let p = CircuitDcParams {
            emf: Complex64::new(1.1, 0.0),
            z: Complex64::new(5.5, 0.0),
            y_load: Complex64::new(1.0 / 55.0, 0.0),
            i_dc: 0.01,
            phase: 0.0,
            omega_base: omega_base(60.0),
        };
        let (v, i) = circuit_dc_waveforms(&p, 1e-4, 0.1).unwrap();
        for (v, i) in v.samples.iter().zip(&i.samples) {
            assert!(p.kcl_residual(*v, *i).norm() <= 1e-12);
        }
        assert!((v.samples[0] - Complex64::new(1.05, 0.0)).norm() < 1e-12);
        let none = CircuitDcParams { i_dc: 0.0, ..p };
        let (v, i) = circuit_dc_waveforms(&none, 1e-4, 0.1).unwrap();
        assert!(i.samples.iter().all(|s| s.norm() == 0.0));
        let eta = crate::cf::cf_from_samples(&v).unwrap();
        assert!(eta.iter().all(|e| e.rho.abs() < 1e-15 && (e.omega - 1.0).abs() < 1e-15));
    }
}
