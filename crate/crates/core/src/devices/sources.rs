//! Ideal sources: a nominal-frequency EMF behind an impedance, and a DC
//! current injection.

use super::DeviceError;
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageSourceParams {
    /// Internal impedance, nonzero.
    pub z: Complex64,
    /// EMF in the synchronous frame; back-solved when the source is the
    /// power-flow slack.
    pub emf: Complex64,
}

impl VoltageSourceParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.z.norm() > 0.0) {
            return Err(DeviceError::ParamDomain(
                "voltage source impedance must be nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn current(&self, v: Complex64) -> Complex64 {
        (self.emf - v) / self.z
    }

    /// `χ = (ē/(z·ī))·(−ρ + j(1 − ω))`.
    pub fn chi(&self, v: Complex64, eta: ComplexFrequency) -> Result<ComplexFrequency, DeviceError> {
        let i = self.current(v);
        if i.norm() < MIN_MAG {
            return Err(DeviceError::CurrentTooSmall(i.norm()));
        }
        Ok((self.emf / (self.z * i) * Complex64::new(-eta.rho, 1.0 - eta.omega)).into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcCurrentSourceParams {
    pub magnitude: f64,
    /// Phase of the injected space vector at `t = 0`, rad.
    pub phase: f64,
    pub omega_base: f64,
}

impl DcCurrentSourceParams {
    /// Seen from the synchronous frame a DC injection rotates backwards at
    /// the frame speed.
    pub fn current(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase - self.omega_base * t)
    }

    /// The injection has zero CF, so `χ = −η`.
    pub fn chi(&self, eta: ComplexFrequency) -> Result<ComplexFrequency, DeviceError> {
        if self.magnitude < MIN_MAG {
            return Err(DeviceError::CurrentTooSmall(self.magnitude));
        }
        Ok(ComplexFrequency::new(-eta.rho, -eta.omega))
    }
}
