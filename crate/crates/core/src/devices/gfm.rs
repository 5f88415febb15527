//! Grid-forming converter after REGFM_A1: voltage-magnitude PI with droop
//! on filtered active power, internal EMF behind `z_t`.

use super::DeviceError;
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfmParams {
    pub kp: f64,
    pub ki: f64,
    /// Voltage measurement time constant.
    pub t_v: f64,
    /// Power measurement time constant.
    pub t_p: f64,
    pub m_p: f64,
    /// Back-solved at initialization.
    pub p_ref: f64,
    /// Back-solved at initialization.
    pub v_ref: f64,
    pub z_t: Complex64,
    pub omega_base: f64,
}

impl GfmParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.z_t.norm() > 0.0) || !(self.t_v > 0.0) || !(self.t_p > 0.0) {
            return Err(DeviceError::ParamDomain(format!(
                "GFM needs |z_t| > 0, T_v > 0, T_p > 0 (z_t {}, T_v {}, T_p {})",
                self.z_t, self.t_v, self.t_p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GfmState {
    pub e: f64,
    pub delta: f64,
    pub v_m: f64,
    pub p_m: f64,
}

impl GfmState {
    pub const NAMES: [&'static str; 4] = ["e", "delta", "v_m", "p_m"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.e, self.delta, self.v_m, self.p_m]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            e: s[0],
            delta: s[1],
            v_m: s[2],
            p_m: s[3],
        }
    }
}

pub fn gfm_emf(state: &GfmState) -> Complex64 {
    Complex64::from_polar(state.e, state.delta)
}

pub fn gfm_current(state: &GfmState, params: &GfmParams, v: Complex64) -> Complex64 {
    (gfm_emf(state) - v) / params.z_t
}

/// `ω_gfm = m_p(p_ref − p_m) + 1`.
pub fn gfm_omega(state: &GfmState, params: &GfmParams) -> f64 {
    params.m_p * (params.p_ref - state.p_m) + 1.0
}

pub fn gfm_derivatives(state: &GfmState, params: &GfmParams, v: Complex64) -> GfmState {
    let i = gfm_current(state, params, v);
    let p = (v * i.conj()).re;
    GfmState {
        e: params.ki * (params.v_ref - state.v_m) - params.kp / params.t_v * (state.v_m - v.norm()),
        delta: params.omega_base * (gfm_omega(state, params) - 1.0),
        v_m: (v.norm() - state.v_m) / params.t_v,
        p_m: (p - state.p_m) / params.t_p,
    }
}

/// `χ = (ē/(z_t·ī))·(ė/e − ρ + j(ω_gfm − ω))`.
pub fn gfm_chi(
    state: &GfmState,
    params: &GfmParams,
    v: Complex64,
    eta: ComplexFrequency,
) -> Result<ComplexFrequency, DeviceError> {
    let i = gfm_current(state, params, v);
    if i.norm() < MIN_MAG {
        return Err(DeviceError::CurrentTooSmall(i.norm()));
    }
    if state.e < MIN_MAG {
        return Err(DeviceError::ModulationTooSmall(state.e));
    }
    let e_dot = gfm_derivatives(state, params, v).e / params.omega_base;
    let gain = gfm_emf(state) / (params.z_t * i);
    Ok((gain * Complex64::new(e_dot / state.e - eta.rho, gfm_omega(state, params) - eta.omega)).into())
}

pub fn gfm_init(params: &mut GfmParams, v: Complex64, s: Complex64) -> Result<GfmState, DeviceError> {
    params.validate()?;
    if v.norm() < MIN_MAG {
        return Err(DeviceError::VoltageTooSmall(v.norm()));
    }
    let i = (s / v).conj();
    let e = v + params.z_t * i;
    params.p_ref = s.re;
    params.v_ref = v.norm();
    Ok(GfmState {
        e: e.norm(),
        delta: e.arg(),
        v_m: v.norm(),
        p_m: s.re,
    })
}
