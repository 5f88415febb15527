//! Synchronous machine models: 6th-order (subtransient), 4th-order two-axis
//! and 2nd-order classical.
//!
//! Machine-frame quantities follow `v_d + j·v_q = v·sin(δ−θ) + j·v·cos(δ−θ)`,
//! i.e. `x_machine = j·e^{−jδ}·x_network`. Currents are injected into the
//! network (generator convention). The stator relation is
//! `ψ = −j(v + R_s·i)` and `τ_e = ψ_d·i_q − ψ_q·i_d`, which equals
//! `p + R_s·i²`.
//!
//! A zero open-circuit time constant freezes the corresponding EMF: its
//! derivative is reported as zero.

use super::{DeviceError, XiTerms};
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Network-frame vector to machine frame.
pub fn to_machine_frame(delta: f64, x: Complex64) -> Complex64 {
    J * Complex64::from_polar(1.0, -delta) * x
}

/// Machine-frame vector to network frame.
pub fn to_network_frame(delta: f64, x: Complex64) -> Complex64 {
    -J * Complex64::from_polar(1.0, delta) * x
}

/// Mechanical torque and field voltage applied to a machine.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SmInputs {
    pub tau_m: f64,
    /// Field voltage; for the classical model, the constant EMF behind `x'_d`.
    pub v_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sm6Params {
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
    /// Mechanical starting time `2H`, seconds.
    pub m: f64,
    pub d: f64,
    pub omega_base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gammas {
    pub d1: f64,
    pub q1: f64,
    pub d2: f64,
    pub q2: f64,
}

impl Sm6Params {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let ordered = |x: f64, x1: f64, x2: f64| x >= x1 && x1 >= x2 && x2 > self.xl;
        if !(self.xl > 0.0) || !ordered(self.xd, self.xd1, self.xd2) || !ordered(self.xq, self.xq1, self.xq2) {
            return Err(DeviceError::ParamDomain(format!(
                "reactances must satisfy x ≥ x' ≥ x'' > x_l > 0 (d: {} {} {}, q: {} {} {}, x_l {})",
                self.xd, self.xd1, self.xd2, self.xq, self.xq1, self.xq2, self.xl
            )));
        }
        check_common(
            self.r_s,
            self.m,
            self.d,
            &[self.td0_1, self.tq0_1, self.td0_2, self.tq0_2],
        )
    }

    pub fn gammas(&self) -> Gammas {
        let d1 = (self.xd2 - self.xl) / (self.xd1 - self.xl);
        let q1 = (self.xq2 - self.xl) / (self.xq1 - self.xl);
        Gammas {
            d1,
            q1,
            d2: (1.0 - d1) / (self.xd1 - self.xl),
            q2: (1.0 - q1) / (self.xq1 - self.xl),
        }
    }

    /// The 6th-order model that collapses to `sm4`: `x'' = x'`, `T''0 = 0`.
    pub fn degenerate_from(sm4: &Sm4Params, xl: f64) -> Self {
        Self {
            r_s: sm4.r_s,
            xd: sm4.xd,
            xq: sm4.xq,
            xd1: sm4.xd1,
            xq1: sm4.xq1,
            xd2: sm4.xd1,
            xq2: sm4.xq1,
            xl,
            td0_1: sm4.td0_1,
            tq0_1: sm4.tq0_1,
            td0_2: 0.0,
            tq0_2: 0.0,
            m: sm4.m,
            d: sm4.d,
            omega_base: sm4.omega_base,
        }
    }
}

fn check_common(r_s: f64, m: f64, d: f64, time_constants: &[f64]) -> Result<(), DeviceError> {
    if !(r_s >= 0.0) || !(m > 0.0) || !(d >= 0.0) || time_constants.iter().any(|t| !(*t >= 0.0)) {
        return Err(DeviceError::ParamDomain(format!(
            "need R_s ≥ 0, M > 0, D ≥ 0 and non-negative time constants (R_s {r_s}, M {m}, D {d})"
        )));
    }
    Ok(())
}

fn first_order(tc: f64, rhs: f64) -> f64 {
    if tc > 0.0 {
        rhs / tc
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sm6State {
    pub delta: f64,
    pub omega_r: f64,
    pub psi_d2: f64,
    pub psi_q2: f64,
    pub ed1: f64,
    pub eq1: f64,
}

impl Sm6State {
    pub const NAMES: [&'static str; 6] = ["delta", "omega_r", "psi_d2", "psi_q2", "ed1", "eq1"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.delta, self.omega_r, self.psi_d2, self.psi_q2, self.ed1, self.eq1]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            delta: x[0],
            omega_r: x[1],
            psi_d2: x[2],
            psi_q2: x[3],
            ed1: x[4],
            eq1: x[5],
        }
    }
}

/// Subtransient EMFs `(E''_d, E''_q)` behind `(x''_q, x''_d)`.
fn sm6_emf(state: &Sm6State, g: &Gammas) -> (f64, f64) {
    (
        g.q1 * state.ed1 - (1.0 - g.q1) * state.psi_q2,
        g.d1 * state.eq1 + (1.0 - g.d1) * state.psi_d2,
    )
}

/// Solves `v_d = E_d − R i_d + x_q i_q`, `v_q = E_q − R i_q − x_d i_d` for
/// the machine-frame current.
fn stator_current(emf: (f64, f64), v_m: Complex64, r: f64, x_d: f64, x_q: f64) -> Complex64 {
    let (a, b) = (emf.0 - v_m.re, emf.1 - v_m.im);
    let det = r * r + x_d * x_q;
    Complex64::new((r * a + x_q * b) / det, (-x_d * a + r * b) / det)
}

fn electrical_torque(v_m: Complex64, i_m: Complex64, r: f64) -> f64 {
    let psi_d = v_m.im + r * i_m.im;
    let psi_q = -v_m.re - r * i_m.re;
    psi_d * i_m.im - psi_q * i_m.re
}

/// Machine-frame terminal current of the 6th-order model.
pub fn sm6_current(state: &Sm6State, params: &Sm6Params, v: Complex64) -> Complex64 {
    let v_m = to_machine_frame(state.delta, v);
    let i_m = stator_current(
        sm6_emf(state, &params.gammas()),
        v_m,
        params.r_s,
        params.xd2,
        params.xq2,
    );
    to_network_frame(state.delta, i_m)
}

pub fn sm6_derivatives(
    state: &Sm6State,
    params: &Sm6Params,
    inputs: &SmInputs,
    v: Complex64,
) -> Result<Sm6State, DeviceError> {
    params.validate()?;
    let p = params;
    let g = p.gammas();
    let v_m = to_machine_frame(state.delta, v);
    let i_m = stator_current(sm6_emf(state, &g), v_m, p.r_s, p.xd2, p.xq2);
    let (id, iq) = (i_m.re, i_m.im);
    let tau_e = electrical_torque(v_m, i_m, p.r_s);
    Ok(Sm6State {
        delta: p.omega_base * (state.omega_r - 1.0),
        omega_r: (inputs.tau_m - tau_e - p.d * (state.omega_r - 1.0)) / p.m,
        psi_d2: first_order(p.td0_2, -state.psi_d2 + state.eq1 - (p.xd1 - p.xl) * id),
        psi_q2: first_order(p.tq0_2, -state.psi_q2 - state.ed1 - (p.xq1 - p.xl) * iq),
        ed1: first_order(
            p.tq0_1,
            (p.xq - p.xq1) * (g.q1 * iq - g.q2 * (state.psi_q2 + state.ed1)) - state.ed1,
        ),
        eq1: first_order(
            p.td0_1,
            inputs.v_f - (p.xd - p.xd1) * (g.d1 * id - g.d2 * (state.psi_d2 - state.eq1)) - state.eq1,
        ),
    })
}

/// Everything the machine CF formulas need, in the machine frame, with
/// EMF rates normalized on `Ω_b`.
struct StatorView {
    v_m: Complex64,
    i_m: Complex64,
    r: f64,
    x_d: f64,
    x_q: f64,
    omega_r: f64,
    /// `dE''_d/dτ`, `dE''_q/dτ` with `τ = Ω_b·t`.
    emf_rate: (f64, f64),
}

impl StatorView {
    fn check(&self) -> Result<(), DeviceError> {
        if self.i_m.norm() < MIN_MAG {
            return Err(DeviceError::CurrentTooSmall(self.i_m.norm()));
        }
        Ok(())
    }

    fn z_d(&self) -> Complex64 {
        Complex64::new(-self.r, self.x_d)
    }

    fn z_q(&self) -> Complex64 {
        Complex64::new(self.r, self.x_q)
    }

    fn den(&self) -> f64 {
        (self.x_d * self.x_q + self.r * self.r) * self.i_m.norm_sqr()
    }

    fn xi_terms(&self) -> XiTerms {
        let (vd, vq) = (self.v_m.re, self.v_m.im);
        let ic = self.i_m.conj();
        let (zd, zqc) = (self.z_d(), self.z_q().conj());
        let den = self.den();
        let w = self.omega_r;
        XiTerms {
            xi_a: J * w + ic * zd * (vq * w - self.emf_rate.0) / den + J * ic * zqc * (vd * w + self.emf_rate.1) / den,
            k_rho: ic * (zd * vd - J * zqc * vq) / den,
            k_omega: J * ic * (J * zd * vq - zqc * vd) / den,
        }
    }
}

fn sm6_view(
    state: &Sm6State,
    params: &Sm6Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
) -> Result<(StatorView, Sm6State, Gammas), DeviceError> {
    let dx = sm6_derivatives(state, params, inputs, v)?;
    let g = params.gammas();
    let ob = params.omega_base;
    let view = StatorView {
        v_m: to_machine_frame(state.delta, v),
        i_m: to_machine_frame(state.delta, i),
        r: params.r_s,
        x_d: params.xd2,
        x_q: params.xq2,
        omega_r: state.omega_r,
        emf_rate: (
            (g.q1 * dx.ed1 - (1.0 - g.q1) * dx.psi_q2) / ob,
            (g.d1 * dx.eq1 + (1.0 - g.d1) * dx.psi_d2) / ob,
        ),
    };
    view.check()?;
    Ok((view, dx, g))
}

/// `ξ_a, κ_ρ, κ_ω` of the 6th-order machine; `i` is the injected current
/// (network frame, machine base).
pub fn sm6_xi_terms(
    state: &Sm6State,
    params: &Sm6Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
) -> Result<XiTerms, DeviceError> {
    Ok(sm6_view(state, params, inputs, v, i)?.0.xi_terms())
}

/// Closed-form `χ` of the 6th-order machine, evaluated term by term.
pub fn sm6_chi(
    state: &Sm6State,
    params: &Sm6Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
    eta: ComplexFrequency,
) -> Result<ComplexFrequency, DeviceError> {
    let (view, dx, g) = sm6_view(state, params, inputs, v, i)?;
    let ob = params.omega_base;
    let (vd, vq) = (view.v_m.re, view.v_m.im);
    let ic = view.i_m.conj();
    let (zd, zqc) = (view.z_d(), view.z_q().conj());
    let den = view.den();
    let (rho, omega) = (eta.rho, eta.omega);
    let (ded1, deq1, dpd2, dpq2) = (dx.ed1 / ob, dx.eq1 / ob, dx.psi_d2 / ob, dx.psi_q2 / ob);
    let chi = J * (state.omega_r - omega) * (ic * (zqc * vd - J * zd * vq) / den + 1.0)
        - rho * (ic * (J * zqc * vq - zd * vd) / den + 1.0)
        + J * ic * zqc * (g.d1 * deq1 + (1.0 - g.d1) * dpd2) / den
        + ic * zd * (-g.q1 * ded1 + (1.0 - g.q1) * dpq2) / den;
    Ok(chi.into())
}

/// Steady-state initialization from terminal voltage and injected power
/// (machine base). Returns the state and the back-solved inputs.
pub fn sm6_init(params: &Sm6Params, v: Complex64, s: Complex64) -> Result<(Sm6State, SmInputs), DeviceError> {
    params.validate()?;
    let p = params;
    let (i, delta, v_m, i_m) = park_init(v, s, p.r_s, p.xq)?;
    let (id, iq) = (i_m.re, i_m.im);
    let eq1 = v_m.im + p.r_s * iq + p.xd1 * id;
    let ed1 = (p.xq - p.xq1) * iq;
    let state = Sm6State {
        delta,
        omega_r: 1.0,
        psi_d2: eq1 - (p.xd1 - p.xl) * id,
        psi_q2: -ed1 - (p.xq1 - p.xl) * iq,
        ed1,
        eq1,
    };
    let _ = i;
    let inputs = SmInputs {
        tau_m: electrical_torque(v_m, i_m, p.r_s),
        v_f: eq1 + (p.xd - p.xd1) * id,
    };
    Ok((state, inputs))
}

/// Shared rotor-angle placement: `δ = ∠(v + (R_s + j·x_q)·i)`.
fn park_init(
    v: Complex64,
    s: Complex64,
    r: f64,
    xq: f64,
) -> Result<(Complex64, f64, Complex64, Complex64), DeviceError> {
    if v.norm() < MIN_MAG {
        return Err(DeviceError::VoltageTooSmall(v.norm()));
    }
    let i = (s / v).conj();
    let delta = (v + Complex64::new(r, xq) * i).arg();
    Ok((i, delta, to_machine_frame(delta, v), to_machine_frame(delta, i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sm4Params {
    pub r_s: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd1: f64,
    pub xq1: f64,
    pub td0_1: f64,
    pub tq0_1: f64,
    pub m: f64,
    pub d: f64,
    pub omega_base: f64,
}

impl Sm4Params {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.xd >= self.xd1 && self.xd1 > 0.0 && self.xq >= self.xq1 && self.xq1 > 0.0) {
            return Err(DeviceError::ParamDomain(format!(
                "reactances must satisfy x ≥ x' > 0 (d: {} {}, q: {} {})",
                self.xd, self.xd1, self.xq, self.xq1
            )));
        }
        check_common(self.r_s, self.m, self.d, &[self.td0_1, self.tq0_1])
    }

    /// Classical-model limit: `R_s = 0`, `x'_q = x'_d`, frozen EMFs.
    pub fn classical(sm2: &Sm2Params) -> Self {
        Self {
            r_s: 0.0,
            xd: sm2.xd1,
            xq: sm2.xd1,
            xd1: sm2.xd1,
            xq1: sm2.xd1,
            td0_1: 0.0,
            tq0_1: 0.0,
            m: sm2.m,
            d: sm2.d,
            omega_base: sm2.omega_base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sm4State {
    pub delta: f64,
    pub omega_r: f64,
    pub ed1: f64,
    pub eq1: f64,
}

impl Sm4State {
    pub const NAMES: [&'static str; 4] = ["delta", "omega_r", "ed1", "eq1"];

    pub fn to_array(&self) -> [f64; 4] {
        [self.delta, self.omega_r, self.ed1, self.eq1]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            delta: x[0],
            omega_r: x[1],
            ed1: x[2],
            eq1: x[3],
        }
    }
}

pub fn sm4_current(state: &Sm4State, params: &Sm4Params, v: Complex64) -> Complex64 {
    let v_m = to_machine_frame(state.delta, v);
    let i_m = stator_current((state.ed1, state.eq1), v_m, params.r_s, params.xd1, params.xq1);
    to_network_frame(state.delta, i_m)
}

pub fn sm4_derivatives(
    state: &Sm4State,
    params: &Sm4Params,
    inputs: &SmInputs,
    v: Complex64,
) -> Result<Sm4State, DeviceError> {
    params.validate()?;
    let p = params;
    let v_m = to_machine_frame(state.delta, v);
    let i_m = stator_current((state.ed1, state.eq1), v_m, p.r_s, p.xd1, p.xq1);
    let tau_e = electrical_torque(v_m, i_m, p.r_s);
    Ok(Sm4State {
        delta: p.omega_base * (state.omega_r - 1.0),
        omega_r: (inputs.tau_m - tau_e - p.d * (state.omega_r - 1.0)) / p.m,
        ed1: first_order(p.tq0_1, (p.xq - p.xq1) * i_m.im - state.ed1),
        eq1: first_order(p.td0_1, inputs.v_f - (p.xd - p.xd1) * i_m.re - state.eq1),
    })
}

fn sm4_view(
    state: &Sm4State,
    params: &Sm4Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
) -> Result<(StatorView, Sm4State), DeviceError> {
    let dx = sm4_derivatives(state, params, inputs, v)?;
    let view = StatorView {
        v_m: to_machine_frame(state.delta, v),
        i_m: to_machine_frame(state.delta, i),
        r: params.r_s,
        x_d: params.xd1,
        x_q: params.xq1,
        omega_r: state.omega_r,
        emf_rate: (dx.ed1 / params.omega_base, dx.eq1 / params.omega_base),
    };
    view.check()?;
    Ok((view, dx))
}

pub fn sm4_xi_terms(
    state: &Sm4State,
    params: &Sm4Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
) -> Result<XiTerms, DeviceError> {
    Ok(sm4_view(state, params, inputs, v, i)?.0.xi_terms())
}

/// Closed-form `χ` of the two-axis model.
pub fn sm4_chi(
    state: &Sm4State,
    params: &Sm4Params,
    inputs: &SmInputs,
    v: Complex64,
    i: Complex64,
    eta: ComplexFrequency,
) -> Result<ComplexFrequency, DeviceError> {
    let (view, dx) = sm4_view(state, params, inputs, v, i)?;
    let ob = params.omega_base;
    let (vd, vq) = (view.v_m.re, view.v_m.im);
    let ic = view.i_m.conj();
    let (zd, zqc) = (view.z_d(), view.z_q().conj());
    let den = view.den();
    let chi = J * (state.omega_r - eta.omega) * (ic * (zqc * vd - J * zd * vq) / den + 1.0)
        - eta.rho * (ic * (J * zqc * vq - zd * vd) / den + 1.0)
        + ic * (J * zqc * dx.eq1 / ob - zd * dx.ed1 / ob) / den;
    Ok(chi.into())
}

pub fn sm4_init(params: &Sm4Params, v: Complex64, s: Complex64) -> Result<(Sm4State, SmInputs), DeviceError> {
    params.validate()?;
    let p = params;
    let (_, delta, v_m, i_m) = park_init(v, s, p.r_s, p.xq)?;
    let (id, iq) = (i_m.re, i_m.im);
    let eq1 = v_m.im + p.r_s * iq + p.xd1 * id;
    let ed1 = (p.xq - p.xq1) * iq;
    Ok((
        Sm4State {
            delta,
            omega_r: 1.0,
            ed1,
            eq1,
        },
        SmInputs {
            tau_m: electrical_torque(v_m, i_m, p.r_s),
            v_f: eq1 + (p.xd - p.xd1) * id,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sm2Params {
    pub xd1: f64,
    pub m: f64,
    pub d: f64,
    pub omega_base: f64,
}

impl Sm2Params {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.xd1 > 0.0) {
            return Err(DeviceError::ParamDomain(format!(
                "x'_d must be positive, got {}",
                self.xd1
            )));
        }
        check_common(0.0, self.m, self.d, &[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sm2State {
    pub delta: f64,
    pub omega_r: f64,
}

impl Sm2State {
    pub const NAMES: [&'static str; 2] = ["delta", "omega_r"];
}

/// Internal EMF `E'·e^{jδ}` (network frame).
pub fn sm2_emf(state: &Sm2State, inputs: &SmInputs) -> Complex64 {
    Complex64::from_polar(inputs.v_f, state.delta)
}

pub fn sm2_current(state: &Sm2State, params: &Sm2Params, inputs: &SmInputs, v: Complex64) -> Complex64 {
    (sm2_emf(state, inputs) - v) / Complex64::new(0.0, params.xd1)
}

pub fn sm2_derivatives(
    state: &Sm2State,
    params: &Sm2Params,
    inputs: &SmInputs,
    v: Complex64,
) -> Result<Sm2State, DeviceError> {
    params.validate()?;
    let i = sm2_current(state, params, inputs, v);
    let tau_e = (v * i.conj()).re;
    Ok(Sm2State {
        delta: params.omega_base * (state.omega_r - 1.0),
        omega_r: (inputs.tau_m - tau_e - params.d * (state.omega_r - 1.0)) / params.m,
    })
}

/// `χ = (−j·s/(x'_d·i²) + 1)·(−ρ + j(ω_r − ω))`.
pub fn sm2_chi(
    state: &Sm2State,
    params: &Sm2Params,
    s: Complex64,
    i_mag: f64,
    eta: ComplexFrequency,
) -> Result<ComplexFrequency, DeviceError> {
    if i_mag < MIN_MAG {
        return Err(DeviceError::CurrentTooSmall(i_mag));
    }
    let factor = -J * s / (params.xd1 * i_mag * i_mag) + 1.0;
    Ok((factor * Complex64::new(-eta.rho, state.omega_r - eta.omega)).into())
}

pub fn sm2_init(params: &Sm2Params, v: Complex64, s: Complex64) -> Result<(Sm2State, SmInputs), DeviceError> {
    params.validate()?;
    if v.norm() < MIN_MAG {
        return Err(DeviceError::VoltageTooSmall(v.norm()));
    }
    let i = (s / v).conj();
    let e = v + Complex64::new(0.0, params.xd1) * i;
    Ok((
        Sm2State {
            delta: e.arg(),
            omega_r: 1.0,
        },
        SmInputs {
            tau_m: s.re,
            v_f: e.norm(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{chi_from_xi_terms, omega_base};
    use approx::assert_abs_diff_eq;

    pub(crate) fn kundur_sm6() -> Sm6Params {
        Sm6Params {
            r_s: 0.0025,
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
            omega_base: omega_base(60.0),
        }
    }

    fn assert_c(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn rejects_bad_reactance_ordering() {
        let mut p = kundur_sm6();
        p.xd2 = 0.35;
        assert!(matches!(p.validate(), Err(DeviceError::ParamDomain(_))));
        let mut p = kundur_sm6();
        p.xl = 0.3;
        assert!(p.validate().is_err());
    }

    #[test]
    fn gammas_are_recomputed() {
        let g = kundur_sm6().gammas();
        assert_abs_diff_eq!(g.d1, 0.05 / 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g.q1, 0.05 / 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(g.d2, 0.5 / 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(g.q2, (1.0 - 0.05 / 0.35) / 0.35, epsilon = 1e-12);
    }

    #[test]
    fn sm6_equilibrium_and_torque_step() {
        let p = kundur_sm6();
        let v = Complex64::from_polar(1.03, 0.2);
        let s = Complex64::new(0.78, 0.2);
        let (x, u) = sm6_init(&p, v, s).unwrap();
        let dx = sm6_derivatives(&x, &p, &u, v).unwrap();
        for d in dx.to_array() {
            assert!(d.abs() < 1e-9, "{dx:?}");
        }
        assert_c(sm6_current(&x, &p, v), (s / v).conj(), 1e-12);

        let bumped = SmInputs {
            tau_m: 1.1 * u.tau_m,
            ..u
        };
        let dx = sm6_derivatives(&x, &p, &bumped, v).unwrap();
        assert_abs_diff_eq!(dx.omega_r, 0.1 * u.tau_m / p.m, epsilon = 1e-12);
        assert!(dx.omega_r > 0.0);
        assert_eq!(dx.delta, 0.0);
    }

    #[test]
    fn steady_state_chi_vanishes() {
        let p = kundur_sm6();
        let v = Complex64::from_polar(1.0, -0.4);
        let s = Complex64::new(0.5, -0.1);
        let (x, u) = sm6_init(&p, v, s).unwrap();
        let i = sm6_current(&x, &p, v);
        let eta = ComplexFrequency::new(0.0, 1.0);
        let chi = sm6_chi(&x, &p, &u, v, i, eta).unwrap();
        assert!(chi.norm() < 1e-12, "{chi:?}");
        let t = sm6_xi_terms(&x, &p, &u, v, i).unwrap();
        assert!(t.chi(eta).norm() < 1e-12);
    }

    /// Finite-difference oracle for ξ: perturb the terminal voltage along a
    /// prescribed CF and advance the states along their derivatives.
    #[test]
    fn sm6_xi_matches_finite_difference() {
        let p = kundur_sm6();
        let x = Sm6State {
            delta: 0.6,
            omega_r: 1.01,
            psi_d2: 0.9,
            psi_q2: -0.3,
            ed1: 0.4,
            eq1: 1.0,
        };
        let u = SmInputs { tau_m: 0.8, v_f: 1.5 };
        let v0 = Complex64::from_polar(0.95, 0.3);
        let eta = ComplexFrequency::new(0.02, 1.03);
        let ob = p.omega_base;
        let dx = sm6_derivatives(&x, &p, &u, v0).unwrap();
        let current_at = |t: f64| {
            let xs = Sm6State::from_slice(
                &x.to_array()
                    .iter()
                    .zip(dx.to_array())
                    .map(|(a, b)| a + t * b)
                    .collect::<Vec<_>>(),
            );
            let v = v0 * Complex64::new(eta.rho * ob * t, (eta.omega - 1.0) * ob * t).exp();
            sm6_current(&xs, &p, v)
        };
        let h = 1e-7;
        let xi_num = (current_at(h).ln() - current_at(-h).ln()) / (2.0 * h * ob) + Complex64::i();
        let i = sm6_current(&x, &p, v0);
        let terms = sm6_xi_terms(&x, &p, &u, v0, i).unwrap();
        let xi = terms.xi_a + terms.k_rho * eta.rho + terms.k_omega * eta.omega;
        assert_c(xi, xi_num, 1e-8);
        // Direct boxed formula against the composition.
        let chi = sm6_chi(&x, &p, &u, v0, i, eta).unwrap();
        assert_c(chi.as_complex(), xi - eta.as_complex(), 1e-12);
    }

    #[test]
    fn sm4_limit_of_sm6_is_exact() {
        let p4 = Sm4Params {
            r_s: 0.003,
            xd: 1.8,
            xq: 1.7,
            xd1: 0.3,
            xq1: 0.55,
            td0_1: 8.0,
            tq0_1: 0.4,
            m: 13.0,
            d: 1.0,
            omega_base: omega_base(60.0),
        };
        let p6 = Sm6Params::degenerate_from(&p4, 0.2);
        let x4 = Sm4State {
            delta: 0.3,
            omega_r: 0.99,
            ed1: 0.3,
            eq1: 1.05,
        };
        let x6 = Sm6State {
            delta: x4.delta,
            omega_r: x4.omega_r,
            psi_d2: 0.7,
            psi_q2: -0.1,
            ed1: x4.ed1,
            eq1: x4.eq1,
        };
        let u = SmInputs { tau_m: 0.7, v_f: 1.9 };
        let v = Complex64::from_polar(0.97, 0.1);
        let i4 = sm4_current(&x4, &p4, v);
        assert_c(i4, sm6_current(&x6, &p6, v), 1e-14);
        let a = sm4_xi_terms(&x4, &p4, &u, v, i4).unwrap();
        let b = sm6_xi_terms(&x6, &p6, &u, v, i4).unwrap();
        assert_c(a.xi_a, b.xi_a, 1e-12);
        assert_c(a.k_rho, b.k_rho, 1e-12);
        assert_c(a.k_omega, b.k_omega, 1e-12);
    }

    #[test]
    fn sm2_chi_worked_value() {
        let p = Sm2Params {
            xd1: 0.3,
            m: 7.0,
            d: 0.0,
            omega_base: omega_base(60.0),
        };
        let st = Sm2State {
            delta: 0.0,
            omega_r: 1.01,
        };
        let s = Complex64::new(0.8, 0.2);
        let chi = sm2_chi(&st, &p, s, 1.0, ComplexFrequency::new(0.0, 1.0)).unwrap();
        // (−j(0.8 + j0.2)/0.3 + 1)·(j0.01) = (1.6667 − j2.6667)·j0.01
        let factor = Complex64::new(1.0 + 0.2 / 0.3, -0.8 / 0.3);
        let expect = factor * Complex64::new(0.0, 0.01);
        assert_c(chi.as_complex(), expect, 1e-15);
        assert_abs_diff_eq!(chi.rho, 0.8 / 0.3 * 0.01, epsilon = 1e-15);

        let fixed = sm2_chi(&st, &p, s, 1.0, ComplexFrequency::new(0.0, 1.01)).unwrap();
        assert_eq!(fixed, ComplexFrequency::ZERO);
        assert!(matches!(
            sm2_chi(&st, &p, s, 1e-9, ComplexFrequency::ZERO),
            Err(DeviceError::CurrentTooSmall(_))
        ));
    }

    #[test]
    fn sm2_init_at_zero_power() {
        let p = Sm2Params {
            xd1: 0.3,
            m: 7.0,
            d: 0.0,
            omega_base: omega_base(60.0),
        };
        let (x, u) = sm2_init(&p, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(x.delta, 0.0);
        assert_eq!(x.omega_r, 1.0);
        assert_eq!(u.v_f, 1.0);
    }

    #[test]
    fn classical_limit_of_sm4_is_sm2() {
        let p2 = Sm2Params {
            xd1: 0.3,
            m: 7.0,
            d: 2.0,
            omega_base: omega_base(60.0),
        };
        let p4 = Sm4Params::classical(&p2);
        let x4 = Sm4State {
            delta: 0.7,
            omega_r: 1.004,
            ed1: 0.0,
            eq1: 1.1,
        };
        let u = SmInputs { tau_m: 0.9, v_f: 1.1 };
        let v = Complex64::from_polar(0.93, 0.2);
        let i = sm4_current(&x4, &p4, v);
        let eta = ComplexFrequency::new(0.013, 0.996);
        let chi4 = chi_from_xi_terms(
            sm4_xi_terms(&x4, &p4, &u, v, i).unwrap().xi_a,
            sm4_xi_terms(&x4, &p4, &u, v, i).unwrap().k_rho,
            sm4_xi_terms(&x4, &p4, &u, v, i).unwrap().k_omega,
            eta,
        );
        let x2 = Sm2State {
            delta: x4.delta,
            omega_r: x4.omega_r,
        };
        let chi2 = sm2_chi(&x2, &p2, v * i.conj(), i.norm(), eta).unwrap();
        assert_c(chi4.as_complex(), chi2.as_complex(), 1e-12);
        // same current as the classical model with E' along q
        assert_c(i, sm2_current(&x2, &p2, &u, v), 1e-14);
    }
}
