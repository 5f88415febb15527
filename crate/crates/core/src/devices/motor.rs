//! First-order induction motor: slip is the only state, the stator and
//! rotor leakage are lumped and the magnetizing branch sits at the terminal.

use super::DeviceError;
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImParams {
    pub r_s: f64,
    pub x_s: f64,
    pub r_r1: f64,
    pub x_r1: f64,
    pub x_mu: f64,
    pub h_m: f64,
    pub omega_base: f64,
}

impl ImParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.r_s >= 0.0 && self.r_r1 > 0.0 && self.x_s + self.x_r1 > 0.0 && self.x_mu > 0.0 && self.h_m > 0.0) {
            return Err(DeviceError::ParamDomain(format!(
                "induction motor needs r_S ≥ 0, r_R1 > 0, x > 0, x_mu > 0, H_m > 0 ({self:?})"
            )));
        }
        Ok(())
    }

    pub fn x(&self) -> f64 {
        self.x_s + self.x_r1
    }

    /// `r = r_S + r_R1/σ`.
    pub fn r(&self, sigma: f64) -> Result<f64, DeviceError> {
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(DeviceError::SlipSingular);
        }
        Ok(self.r_s + self.r_r1 / sigma)
    }

    /// Terminal admittance seen by the network at slip `sigma`.
    pub fn admittance(&self, sigma: f64) -> Result<Complex64, DeviceError> {
        let r = self.r(sigma)?;
        Ok(Complex64::new(r, self.x()).inv() + Complex64::new(0.0, self.x_mu).inv())
    }

    pub fn electrical_torque(&self, sigma: f64, v_mag: f64) -> Result<f64, DeviceError> {
        let r = self.r(sigma)?;
        Ok(self.r_r1 / sigma * v_mag * v_mag / (r * r + self.x() * self.x()))
    }

    /// Slip at which the torque curve peaks.
    pub fn pull_out_slip(&self) -> f64 {
        self.r_r1 / self.r_s.hypot(self.x())
    }

    pub fn pull_out_torque(&self, v_mag: f64) -> f64 {
        v_mag * v_mag / (2.0 * (self.r_s + self.r_s.hypot(self.x())))
    }

    /// Slip on the stable branch (below pull-out) where `τ_e = tau_m`.
    pub fn equilibrium_slip(&self, tau_m: f64, v_mag: f64) -> Result<f64, DeviceError> {
        self.validate()?;
        if tau_m <= 0.0 {
            return Err(DeviceError::InitInfeasible(format!(
                "motor load torque must be positive, got {tau_m}"
            )));
        }
        let peak = self.pull_out_torque(v_mag);
        if tau_m >= peak {
            return Err(DeviceError::InitInfeasible(format!(
                "load torque {tau_m} exceeds pull-out torque {peak:.6} at v = {v_mag:.6}"
            )));
        }
        let (mut lo, mut hi) = (0.0, self.pull_out_slip());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.electrical_torque(mid, v_mag)? < tau_m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Current drawn by the motor (load convention).
pub fn im_current(sigma: f64, params: &ImParams, v: Complex64) -> Result<Complex64, DeviceError> {
    Ok(params.admittance(sigma)? * v)
}

/// `dσ/dt = (τ_m − τ_e)/(2H_m)`.
pub fn im_derivatives(sigma: f64, params: &ImParams, tau_m: f64, v_mag: f64) -> Result<f64, DeviceError> {
    Ok((tau_m - params.electrical_torque(sigma, v_mag)?) / (2.0 * params.h_m))
}

/// `χ = −(ṙ/r)·(r²(x_t² − x²) + j·r·x_μ(r² − x² − x_μ·x)) / (z²(r² + x_t²))`,
/// with `ṙ` normalized on `Ω_b`.
pub fn im_chi(sigma: f64, params: &ImParams, sigma_dot: f64) -> Result<ComplexFrequency, DeviceError> {
    let r = params.r(sigma)?;
    if r.abs() < MIN_MAG {
        return Err(DeviceError::SlipSingular);
    }
    let r_dot = -params.r_r1 / (sigma * sigma) * sigma_dot / params.omega_base;
    let x = params.x();
    let xt = x + params.x_mu;
    let z2 = r * r + x * x;
    let num = Complex64::new(
        r * r * (xt * xt - x * x),
        r * params.x_mu * (r * r - x * x - params.x_mu * x),
    );
    Ok((-(r_dot / r) * num / (z2 * (r * r + xt * xt))).into())
}
