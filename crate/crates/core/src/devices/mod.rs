//! Device models and the uniform interface the simulator drives them
//! through.
//!
//! Every model works in its own base and in the synchronous frame; currents
//! are injected into the network (loads inject negative current).

pub mod gfl;
pub mod gfm;
pub mod motor;
pub mod sources;
pub mod synchronous;
pub mod zip;

pub use gfl::{gfl_chi, gfl_current, gfl_derivatives, gfl_init, GflParams, GflState};
pub use gfm::{gfm_chi, gfm_current, gfm_derivatives, gfm_init, GfmParams, GfmState};
pub use motor::{im_chi, im_current, im_derivatives, ImParams};
pub use sources::{DcCurrentSourceParams, VoltageSourceParams};
pub use synchronous::{
    sm2_chi, sm2_current, sm2_derivatives, sm2_init, sm4_chi, sm4_current, sm4_derivatives, sm4_init, sm4_xi_terms,
    sm6_chi, sm6_current, sm6_derivatives, sm6_init, sm6_xi_terms, Sm2Params, Sm2State, Sm4Params, Sm4State, Sm6Params,
    Sm6State, SmInputs,
};
pub use zip::{zip_chi, zip_current, ZipClass, ZipParams};

use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    #[error("terminal current magnitude {0:e} below threshold")]
    CurrentTooSmall(f64),
    #[error("terminal voltage magnitude {0:e} below threshold")]
    VoltageTooSmall(f64),
    #[error("modulation magnitude {0:e} below threshold")]
    ModulationTooSmall(f64),
    #[error("slip is zero")]
    SlipSingular,
    #[error("no equilibrium: {0}")]
    InitInfeasible(String),
    #[error("mixed ZIP loads have no closed-form χ")]
    MixedZipUnsupportedAnalytic,
}

/// Decomposition `ξ = ξ_a + κ_ρ·ρ + κ_ω·ω` of the current's CF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiTerms {
    pub xi_a: Complex64,
    pub k_rho: Complex64,
    pub k_omega: Complex64,
}

impl XiTerms {
    pub fn chi(&self, eta: ComplexFrequency) -> ComplexFrequency {
        crate::cf::chi_from_xi_terms(self.xi_a, self.k_rho, self.k_omega, eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Sm6,
    Sm4,
    Sm2,
    Zip,
    InductionMotor,
    GflIbr,
    GfmIbr,
    VoltageSource,
    DcCurrentSource,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Sm6 => "sm6",
            DeviceKind::Sm4 => "sm4",
            DeviceKind::Sm2 => "sm2",
            DeviceKind::Zip => "zip",
            DeviceKind::InductionMotor => "induction_motor",
            DeviceKind::GflIbr => "gfl_ibr",
            DeviceKind::GfmIbr => "gfm_ibr",
            DeviceKind::VoltageSource => "voltage_source",
            DeviceKind::DcCurrentSource => "dc_current_source",
        }
    }

    pub fn is_synchronous_machine(self) -> bool {
        matches!(self, DeviceKind::Sm6 | DeviceKind::Sm4 | DeviceKind::Sm2)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Proportional-integral field-voltage regulator:
/// `v_f = x_avr + K_p(v_ref − v)`, `ẋ_avr = K_i(v_ref − v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiAvr {
    pub kp: f64,
    pub ki: f64,
    /// Back-solved at initialization.
    pub v_ref: f64,
}

/// Sinusoidal mechanical torque added from `start` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueModulation {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub start: f64,
}

impl TorqueModulation {
    pub fn at(&self, t: f64) -> f64 {
        if t < self.start {
            0.0
        } else {
            self.amplitude * (2.0 * std::f64::consts::PI * self.freq_hz * (t - self.start)).sin()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmControls {
    pub avr: Option<PiAvr>,
    pub modulation: Option<TorqueModulation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceModel {
    Sm6 {
        params: Sm6Params,
        inputs: SmInputs,
        controls: SmControls,
    },
    Sm4 {
        params: Sm4Params,
        inputs: SmInputs,
        controls: SmControls,
    },
    Sm2 {
        params: Sm2Params,
        inputs: SmInputs,
        controls: SmControls,
    },
    Zip(ZipParams),
    InductionMotor {
        params: ImParams,
        tau_m: f64,
    },
    Gfl(GflParams),
    Gfm(GfmParams),
    VoltageSource(VoltageSourceParams),
    DcCurrentSource(DcCurrentSourceParams),
}

/// Real-affine terminal characteristic `i = i0 + y·v + y_conj·conj(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norton {
    pub i0: Complex64,
    pub y: Complex64,
    pub y_conj: Complex64,
}

impl Norton {
    pub fn current(&self, v: Complex64) -> Complex64 {
        self.i0 + self.y * v + self.y_conj * v.conj()
    }
}

impl DeviceModel {
    pub fn kind(&self) -> DeviceKind {
        match self {
            DeviceModel::Sm6 { .. } => DeviceKind::Sm6,
            DeviceModel::Sm4 { .. } => DeviceKind::Sm4,
            DeviceModel::Sm2 { .. } => DeviceKind::Sm2,
            DeviceModel::Zip(_) => DeviceKind::Zip,
            DeviceModel::InductionMotor { .. } => DeviceKind::InductionMotor,
            DeviceModel::Gfl(_) => DeviceKind::GflIbr,
            DeviceModel::Gfm(_) => DeviceKind::GfmIbr,
            DeviceModel::VoltageSource(_) => DeviceKind::VoltageSource,
            DeviceModel::DcCurrentSource(_) => DeviceKind::DcCurrentSource,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        match self {
            DeviceModel::Sm6 { params, .. } => params.validate(),
            DeviceModel::Sm4 { params, .. } => params.validate(),
            DeviceModel::Sm2 { params, controls, .. } => {
                if controls.avr.is_some() {
                    return Err(DeviceError::ParamDomain(
                        "the classical machine has no field winding for an AVR".into(),
                    ));
                }
                params.validate()
            }
            DeviceModel::Zip(p) => p.validate(),
            DeviceModel::InductionMotor { params, .. } => params.validate(),
            DeviceModel::Gfl(p) => p.validate(),
            DeviceModel::Gfm(p) => p.validate(),
            DeviceModel::VoltageSource(p) => p.validate(),
            DeviceModel::DcCurrentSource(_) => Ok(()),
        }
    }

    pub fn state_names(&self) -> Vec<&'static str> {
        let avr = |c: &SmControls| c.avr.map(|_| "x_avr");
        match self {
            DeviceModel::Sm6 { controls, .. } => Sm6State::NAMES.iter().copied().chain(avr(controls)).collect(),
            DeviceModel::Sm4 { controls, .. } => Sm4State::NAMES.iter().copied().chain(avr(controls)).collect(),
            DeviceModel::Sm2 { .. } => Sm2State::NAMES.to_vec(),
            DeviceModel::InductionMotor { .. } => vec!["sigma"],
            DeviceModel::Gfl(_) => GflState::NAMES.to_vec(),
            DeviceModel::Gfm(_) => GfmState::NAMES.to_vec(),
            DeviceModel::Zip(_) | DeviceModel::VoltageSource(_) | DeviceModel::DcCurrentSource(_) => vec![],
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_names().len()
    }

    /// Mechanical torque and field voltage in effect for a machine.
    fn machine_inputs(inputs: &SmInputs, controls: &SmControls, x_avr: Option<f64>, v: Complex64, t: f64) -> SmInputs {
        let tau_m = inputs.tau_m + controls.modulation.map_or(0.0, |m| m.at(t));
        let v_f = match (controls.avr, x_avr) {
            (Some(avr), Some(x)) => x + avr.kp * (avr.v_ref - v.norm()),
            _ => inputs.v_f,
        };
        SmInputs { tau_m, v_f }
    }

    /// Injected current at terminal voltage `v`, device base.
    pub fn current(&self, x: &[f64], v: Complex64, t: f64) -> Complex64 {
        match self {
            DeviceModel::Sm6 { params, .. } => sm6_current(&Sm6State::from_slice(x), params, v),
            DeviceModel::Sm4 { params, .. } => sm4_current(&Sm4State::from_slice(x), params, v),
            DeviceModel::Sm2 { params, inputs, .. } => sm2_current(
                &Sm2State {
                    delta: x[0],
                    omega_r: x[1],
                },
                params,
                inputs,
                v,
            ),
            DeviceModel::Zip(p) => {
                if v.norm() < MIN_MAG {
                    Complex64::new(0.0, 0.0)
                } else {
                    -(p.power(v.norm()) / v).conj()
                }
            }
            DeviceModel::InductionMotor { params, .. } => {
                -params.admittance(x[0]).unwrap_or(Complex64::new(0.0, 0.0)) * v
            }
            DeviceModel::Gfl(p) => gfl_current(&GflState::from_slice(x), p, v),
            DeviceModel::Gfm(p) => gfm_current(&GfmState::from_slice(x), p, v),
            DeviceModel::VoltageSource(p) => p.current(v),
            DeviceModel::DcCurrentSource(p) => p.current(t),
        }
    }

    /// Writes `dx/dt` into `out`.
    pub fn derivatives(&self, x: &[f64], v: Complex64, t: f64, out: &mut [f64]) -> Result<(), DeviceError> {
        match self {
            DeviceModel::Sm6 {
                params,
                inputs,
                controls,
            } => {
                let u = Self::machine_inputs(inputs, controls, x.get(6).copied(), v, t);
                let d = sm6_derivatives(&Sm6State::from_slice(x), params, &u, v)?;
                out[..6].copy_from_slice(&d.to_array());
                if let Some(avr) = controls.avr {
                    out[6] = avr.ki * (avr.v_ref - v.norm());
                }
            }
            DeviceModel::Sm4 {
                params,
                inputs,
                controls,
            } => {
                let u = Self::machine_inputs(inputs, controls, x.get(4).copied(), v, t);
                let d = sm4_derivatives(&Sm4State::from_slice(x), params, &u, v)?;
                out[..4].copy_from_slice(&d.to_array());
                if let Some(avr) = controls.avr {
                    out[4] = avr.ki * (avr.v_ref - v.norm());
                }
            }
            DeviceModel::Sm2 {
                params,
                inputs,
                controls,
            } => {
                let u = Self::machine_inputs(inputs, controls, None, v, t);
                let d = sm2_derivatives(
                    &Sm2State {
                        delta: x[0],
                        omega_r: x[1],
                    },
                    params,
                    &u,
                    v,
                )?;
                out[0] = d.delta;
                out[1] = d.omega_r;
            }
            DeviceModel::InductionMotor { params, tau_m } => {
                out[0] = im_derivatives(x[0], params, *tau_m, v.norm())?;
            }
            DeviceModel::Gfl(p) => out.copy_from_slice(&gfl_derivatives(&GflState::from_slice(x), p, v).to_array()),
            DeviceModel::Gfm(p) => out.copy_from_slice(&gfm_derivatives(&GfmState::from_slice(x), p, v).to_array()),
            DeviceModel::Zip(_) | DeviceModel::VoltageSource(_) | DeviceModel::DcCurrentSource(_) => {}
        }
        Ok(())
    }

    /// Exact affine form of the current for fixed states, when one exists.
    pub fn norton(&self, x: &[f64], t: f64) -> Option<Norton> {
        if let DeviceModel::Zip(p) = self {
            if p.class() != ZipClass::Impedance {
                return None;
            }
            return Some(Norton {
                i0: Complex64::new(0.0, 0.0),
                y: -Complex64::new(p.p0, -p.q0),
                y_conj: Complex64::new(0.0, 0.0),
            });
        }
        let a = self.current(x, Complex64::new(0.0, 0.0), t);
        let b_plus_c = self.current(x, Complex64::new(1.0, 0.0), t) - a;
        let b_minus_c = (self.current(x, Complex64::new(0.0, 1.0), t) - a) / Complex64::i();
        Some(Norton {
            i0: a,
            y: 0.5 * (b_plus_c + b_minus_c),
            y_conj: 0.5 * (b_plus_c - b_minus_c),
        })
    }

    /// Power injected at voltage `v` for devices whose power-flow behaviour
    /// follows from their own parameters (loads, fixed sources), device base.
    pub fn model_power(&self, v: Complex64) -> Result<Complex64, DeviceError> {
        match self {
            DeviceModel::Zip(p) => Ok(-p.power(v.norm())),
            DeviceModel::InductionMotor { params, tau_m } => {
                let sigma = params.equilibrium_slip(*tau_m, v.norm())?;
                Ok(-v * (params.admittance(sigma)? * v).conj())
            }
            DeviceModel::VoltageSource(p) => Ok(v * p.current(v).conj()),
            DeviceModel::DcCurrentSource(p) => Ok(v * p.current(0.0).conj()),
            other => Err(DeviceError::InitInfeasible(format!(
                "{} needs a slack, PV or PQ power-flow setpoint",
                other.kind()
            ))),
        }
    }

    /// Equilibrium state for terminal voltage `v` and injected power `s`
    /// (device base). Back-solves the model's setpoints.
    pub fn init(&mut self, v: Complex64, s: Complex64) -> Result<Vec<f64>, DeviceError> {
        self.validate()?;
        match self {
            DeviceModel::Sm6 {
                params,
                inputs,
                controls,
            } => {
                let (x, u) = sm6_init(params, v, s)?;
                *inputs = u;
                let mut out = x.to_array().to_vec();
                if let Some(avr) = controls.avr.as_mut() {
                    avr.v_ref = v.norm();
                    out.push(u.v_f);
                }
                Ok(out)
            }
            DeviceModel::Sm4 {
                params,
                inputs,
                controls,
            } => {
                let (x, u) = sm4_init(params, v, s)?;
                *inputs = u;
                let mut out = x.to_array().to_vec();
                if let Some(avr) = controls.avr.as_mut() {
                    avr.v_ref = v.norm();
                    out.push(u.v_f);
                }
                Ok(out)
            }
            DeviceModel::Sm2 { params, inputs, .. } => {
                let (x, u) = sm2_init(params, v, s)?;
                *inputs = u;
                Ok(vec![x.delta, x.omega_r])
            }
            DeviceModel::Zip(_) => Ok(vec![]),
            DeviceModel::InductionMotor { params, tau_m } => Ok(vec![params.equilibrium_slip(*tau_m, v.norm())?]),
            DeviceModel::Gfl(p) => Ok(gfl_init(p, v, s)?.to_array().to_vec()),
            DeviceModel::Gfm(p) => Ok(gfm_init(p, v, s)?.to_array().to_vec()),
            DeviceModel::VoltageSource(p) => {
                p.emf = v + p.z * (s / v).conj();
                Ok(vec![])
            }
            DeviceModel::DcCurrentSource(_) => Ok(vec![]),
        }
    }

    /// Closed-form `χ`; `i` is the injected current in device base.
    pub fn analytic_chi(
        &self,
        x: &[f64],
        v: Complex64,
        i: Complex64,
        eta: ComplexFrequency,
        t: f64,
    ) -> Result<ComplexFrequency, DeviceError> {
        match self {
            DeviceModel::Sm6 {
                params,
                inputs,
                controls,
            } => {
                let u = Self::machine_inputs(inputs, controls, x.get(6).copied(), v, t);
                sm6_chi(&Sm6State::from_slice(x), params, &u, v, i, eta)
            }
            DeviceModel::Sm4 {
                params,
                inputs,
                controls,
            } => {
                let u = Self::machine_inputs(inputs, controls, x.get(4).copied(), v, t);
                sm4_chi(&Sm4State::from_slice(x), params, &u, v, i, eta)
            }
            DeviceModel::Sm2 { params, .. } => sm2_chi(
                &Sm2State {
                    delta: x[0],
                    omega_r: x[1],
                },
                params,
                v * i.conj(),
                i.norm(),
                eta,
            ),
            DeviceModel::Zip(p) => zip_chi(p, eta),
            DeviceModel::InductionMotor { params, tau_m } => {
                let sigma_dot = im_derivatives(x[0], params, *tau_m, v.norm())?;
                im_chi(x[0], params, sigma_dot)
            }
            DeviceModel::Gfl(p) => gfl_chi(&GflState::from_slice(x), p, v, eta),
            DeviceModel::Gfm(p) => gfm_chi(&GfmState::from_slice(x), p, v, eta),
            DeviceModel::VoltageSource(p) => p.chi(v, eta),
            DeviceModel::DcCurrentSource(p) => p.chi(eta),
        }
    }

    /// Internal angle used for the system-level angle-separation check.
    pub fn internal_angle(&self, x: &[f64]) -> Option<f64> {
        match self {
            DeviceModel::Sm6 { .. } | DeviceModel::Sm4 { .. } | DeviceModel::Sm2 { .. } => Some(x[0]),
            DeviceModel::Gfm(_) => Some(x[1]),
            DeviceModel::VoltageSource(p) => Some(p.emf.arg()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::omega_base;

    fn all_models() -> Vec<DeviceModel> {
        let ob = omega_base(60.0);
        vec![
            DeviceModel::Sm6 {
                params: Sm6Params {
                    r_s: 0.003,
                    xd: 1.8,
                    xq: 1.7,
                    xd1: 0.3,
                    xq1: 0.55,
                    xd2: 0.25,
                    xq2: 0.25,
                    xl: 0.2,
                    td0_1: 8.0,
                    tq0_1: 0.4,
                    td0_2: 0.03,
                    tq0_2: 0.05,
                    m: 13.0,
                    d: 0.0,
                    omega_base: ob,
                },
                inputs: SmInputs::default(),
                controls: SmControls {
                    avr: Some(PiAvr {
                        kp: 5.0,
                        ki: 20.0,
                        v_ref: 0.0,
                    }),
                    modulation: None,
                },
            },
            DeviceModel::Sm2 {
                params: Sm2Params {
                    xd1: 0.3,
                    m: 7.0,
                    d: 1.0,
                    omega_base: ob,
                },
                inputs: SmInputs::default(),
                controls: SmControls::default(),
            },
            DeviceModel::InductionMotor {
                params: ImParams {
                    r_s: 0.01,
                    x_s: 0.15,
                    r_r1: 0.05,
                    x_r1: 0.27,
                    x_mu: 3.0,
                    h_m: 0.5,
                    omega_base: ob,
                },
                tau_m: 0.5,
            },
            DeviceModel::Gfl(GflParams {
                kp: 0.5,
                ki: 20.0,
                t_m: 0.002,
                kp_pll: 20.0,
                ki_pll: 400.0,
                v_dc0: 2.0,
                z_f: Complex64::new(0.01, 0.1),
                y_f: Complex64::new(0.0, 0.05),
                omega_ref: 1.0,
                i_ref: Complex64::new(0.0, 0.0),
                omega_base: ob,
            }),
            DeviceModel::Gfm(GfmParams {
                kp: 0.5,
                ki: 5.0,
                t_v: 0.02,
                t_p: 0.05,
                m_p: 0.05,
                p_ref: 0.0,
                v_ref: 0.0,
                z_t: Complex64::new(0.005, 0.15),
                omega_base: ob,
            }),
            DeviceModel::VoltageSource(VoltageSourceParams {
                z: Complex64::new(0.0, 0.01),
                emf: Complex64::new(0.0, 0.0),
            }),
        ]
    }

    #[test]
    fn init_meets_postcondition_for_every_model() {
        let v = Complex64::from_polar(1.02, 0.15);
        for mut m in all_models() {
            let s = match m {
                DeviceModel::InductionMotor { .. } => m.model_power(v).unwrap(),
                _ => Complex64::new(0.6, 0.15),
            };
            let x = m.init(v, s).unwrap();
            assert_eq!(x.len(), m.n_states());
            let mut dx = vec![0.0; x.len()];
            m.derivatives(&x, v, 0.0, &mut dx).unwrap();
            assert!(dx.iter().all(|d| d.abs() <= 1e-9), "{:?}: {dx:?}", m.kind());
            let i = m.current(&x, v, 0.0);
            assert!((v * i.conj() - s).norm() < 1e-10, "{:?}", m.kind());
            let chi = m.analytic_chi(&x, v, i, ComplexFrequency::new(0.0, 1.0), 0.0).unwrap();
            assert!(chi.norm() < 1e-10, "{:?}: {chi:?}", m.kind());
        }
    }

    #[test]
    fn norton_form_is_exact() {
        let v = Complex64::from_polar(0.98, -0.3);
        for mut m in all_models() {
            let s = m.model_power(v).unwrap_or(Complex64::new(0.4, 0.1));
            let mut x = m.init(v, s).unwrap();
            for (k, xi) in x.iter_mut().enumerate() {
                *xi += 0.01 * (k as f64 + 1.0);
            }
            let n = m.norton(&x, 0.3).unwrap();
            let probe = Complex64::from_polar(0.7, 1.1);
            assert!(
                (n.current(probe) - m.current(&x, probe, 0.3)).norm() < 1e-12,
                "{:?}",
                m.kind()
            );
        }
        let p = DeviceModel::Zip(ZipParams::constant_p(1.0, 0.2));
        assert!(p.norton(&[], 0.0).is_none());
    }
}
