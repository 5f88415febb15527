//! Grid-following converter: PI current control in the frame of a
//! synchronous-reference PLL, output filter `z_f` with shunt `y_f`.
//!
//! Vectors tagged "PLL frame" are the network-frame vector multiplied by
//! `e^{−jθ}`, with `θ` the PLL angle relative to the synchronous frame.

use super::DeviceError;
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GflParams {
    pub kp: f64,
    pub ki: f64,
    pub t_m: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    pub v_dc0: f64,
    pub z_f: Complex64,
    pub y_f: Complex64,
    pub omega_ref: f64,
    /// Current reference in the PLL frame; back-solved at initialization.
    pub i_ref: Complex64,
    pub omega_base: f64,
}

impl GflParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.z_f.norm() > 0.0) || !(self.t_m > 0.0) || !(self.v_dc0 > 0.0) {
            return Err(DeviceError::ParamDomain(format!(
                "GFL needs |z_f| > 0, T_m > 0, v_dc0 > 0 (z_f {}, T_m {}, v_dc0 {})",
                self.z_f, self.t_m, self.v_dc0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GflState {
    /// PI integrators `x_d + j·x_q`.
    pub x: Complex64,
    /// Measured current `i_dm + j·i_qm` (PLL frame).
    pub i_m: Complex64,
    pub x_pll: f64,
    pub theta: f64,
}

impl GflState {
    pub const NAMES: [&'static str; 6] = ["x_d", "x_q", "i_dm", "i_qm", "x_pll", "theta"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.x.re, self.x.im, self.i_m.re, self.i_m.im, self.x_pll, self.theta]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            x: Complex64::new(s[0], s[1]),
            i_m: Complex64::new(s[2], s[3]),
            x_pll: s[4],
            theta: s[5],
        }
    }
}

/// Modulation index `m = x + K_p(i_ref − i_m)`.
pub fn gfl_modulation(state: &GflState, params: &GflParams) -> Complex64 {
    state.x + params.kp * (params.i_ref - state.i_m)
}

/// Injected current in the PLL frame from `v = m·v_dc0 − z_f(i + y_f·v)`.
fn pll_frame_current(state: &GflState, params: &GflParams, v_p: Complex64) -> Complex64 {
    let m = gfl_modulation(state, params);
    (m * params.v_dc0 - (1.0 + params.z_f * params.y_f) * v_p) / params.z_f
}

/// Injected current in the network frame.
pub fn gfl_current(state: &GflState, params: &GflParams, v: Complex64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, state.theta);
    pll_frame_current(state, params, v / rot) * rot
}

/// PLL frequency deviation `Δω_pll = K_p,pll·v_q + x_pll` (pu).
pub fn gfl_delta_omega(state: &GflState, params: &GflParams, v: Complex64) -> f64 {
    let v_q = (v * Complex64::from_polar(1.0, -state.theta)).im;
    params.kp_pll * v_q + state.x_pll
}

pub fn gfl_derivatives(state: &GflState, params: &GflParams, v: Complex64) -> GflState {
    let v_p = v * Complex64::from_polar(1.0, -state.theta);
    let i_p = pll_frame_current(state, params, v_p);
    let dw = params.kp_pll * v_p.im + state.x_pll;
    GflState {
        x: params.ki * (params.i_ref - state.i_m),
        i_m: (i_p - state.i_m) / params.t_m,
        x_pll: params.ki_pll * v_p.im,
        theta: params.omega_base * (dw + params.omega_ref - 1.0),
    }
}

/// `χ = (m·v_dc0/(z_f·i))·(ṁ/m − ρ + j(α̇ + ω̃ − ω))`, where `ṁ` follows
/// from the PI and measurement dynamics.
pub fn gfl_chi(
    state: &GflState,
    params: &GflParams,
    v: Complex64,
    eta: ComplexFrequency,
) -> Result<ComplexFrequency, DeviceError> {
    let v_p = v * Complex64::from_polar(1.0, -state.theta);
    let i_p = pll_frame_current(state, params, v_p);
    if i_p.norm() < MIN_MAG {
        return Err(DeviceError::CurrentTooSmall(i_p.norm()));
    }
    let m = gfl_modulation(state, params);
    if m.norm() < MIN_MAG {
        return Err(DeviceError::ModulationTooSmall(m.norm()));
    }
    let d = gfl_derivatives(state, params, v);
    let m_dot = (d.x - params.kp * d.i_m) / params.omega_base;
    let m2 = m.norm_sqr();
    let rel = (m.re * m_dot.re + m.im * m_dot.im) / m2;
    let alpha_dot = (m.re * m_dot.im - m.im * m_dot.re) / m2;
    let omega_tilde = params.kp_pll * v_p.im + state.x_pll + params.omega_ref;
    let gain = m * params.v_dc0 / (params.z_f * i_p);
    Ok((gain * Complex64::new(rel - eta.rho, alpha_dot + omega_tilde - eta.omega)).into())
}

/// Locked-PLL, settled-PI equilibrium delivering `s` at terminal voltage `v`.
pub fn gfl_init(params: &mut GflParams, v: Complex64, s: Complex64) -> Result<GflState, DeviceError> {
    params.validate()?;
    if v.norm() < MIN_MAG {
        return Err(DeviceError::VoltageTooSmall(v.norm()));
    }
    let theta = v.arg();
    let v_p = Complex64::new(v.norm(), 0.0);
    let i_p = (s / v_p).conj();
    params.i_ref = i_p;
    let m = (params.z_f * i_p + (1.0 + params.z_f * params.y_f) * v_p) / params.v_dc0;
    Ok(GflState {
        x: m,
        i_m: i_p,
        x_pll: 1.0 - params.omega_ref,
        theta,
    })
}
