//! Static ZIP load. Powers are consumed; the injected current is the
//! negative of the load current.

use super::DeviceError;
use crate::cf::{ComplexFrequency, MIN_MAG};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipParams {
    /// Active and reactive consumption at 1 pu voltage.
    pub p0: f64,
    pub q0: f64,
    pub k_pp: f64,
    pub k_ip: f64,
    pub k_zp: f64,
    pub k_pq: f64,
    pub k_iq: f64,
    pub k_zq: f64,
}

/// Which single load behaviour a ZIP parameter set reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipClass {
    Impedance,
    Current,
    Power,
    Mixed,
}

const K_TOL: f64 = 1e-9;

impl ZipParams {
    pub fn constant_z(p0: f64, q0: f64) -> Self {
        Self::with_shares(p0, q0, (0.0, 0.0, 1.0))
    }

    pub fn constant_i(p0: f64, q0: f64) -> Self {
        Self::with_shares(p0, q0, (0.0, 1.0, 0.0))
    }

    pub fn constant_p(p0: f64, q0: f64) -> Self {
        Self::with_shares(p0, q0, (1.0, 0.0, 0.0))
    }

    /// Same `(P, I, Z)` shares for active and reactive parts.
    pub fn with_shares(p0: f64, q0: f64, (kp, ki, kz): (f64, f64, f64)) -> Self {
        Self {
            p0,
            q0,
            k_pp: kp,
            k_ip: ki,
            k_zp: kz,
            k_pq: kp,
            k_iq: ki,
            k_zq: kz,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let sp = self.k_pp + self.k_ip + self.k_zp;
        let sq = self.k_pq + self.k_iq + self.k_zq;
        if (sp - 1.0).abs() > K_TOL || (sq - 1.0).abs() > K_TOL {
            return Err(DeviceError::ParamDomain(format!(
                "ZIP shares must sum to 1 (active {sp}, reactive {sq})"
            )));
        }
        Ok(())
    }

    pub fn class(&self) -> ZipClass {
        let is = |p: f64, q: f64| (p - 1.0).abs() <= K_TOL && (q - 1.0).abs() <= K_TOL;
        if is(self.k_zp, self.k_zq) {
            ZipClass::Impedance
        } else if is(self.k_ip, self.k_iq) {
            ZipClass::Current
        } else if is(self.k_pp, self.k_pq) {
            ZipClass::Power
        } else {
            ZipClass::Mixed
        }
    }

    /// Consumed complex power at voltage magnitude `v`.
    pub fn power(&self, v: f64) -> Complex64 {
        let p = self.p0 * (self.k_pp + self.k_ip * v + self.k_zp * v * v);
        let q = self.q0 * (self.k_pq + self.k_iq * v + self.k_zq * v * v);
        Complex64::new(p, q)
    }
}

/// Load current drawn from the bus, `conj((p + jq)/v)`.
pub fn zip_current(v: Complex64, params: &ZipParams) -> Result<Complex64, DeviceError> {
    if v.norm() < MIN_MAG {
        return Err(DeviceError::VoltageTooSmall(v.norm()));
    }
    Ok((params.power(v.norm()) / v).conj())
}

pub fn zip_chi(params: &ZipParams, eta: ComplexFrequency) -> Result<ComplexFrequency, DeviceError> {
    match params.class() {
        ZipClass::Impedance => Ok(ComplexFrequency::ZERO),
        ZipClass::Current => Ok(ComplexFrequency::new(-eta.rho, 0.0)),
        ZipClass::Power => Ok(ComplexFrequency::new(-2.0 * eta.rho, 0.0)),
        ZipClass::Mixed => Err(DeviceError::MixedZipUnsupportedAnalytic),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn pure_z_at_unit_voltage() {
        let i = zip_current(Complex64::new(1.0, 0.0), &ZipParams::constant_z(0.5, 0.1)).unwrap();
        assert!(close(i, Complex64::new(0.5, -0.1)));
    }

    #[test]
    fn pure_p_keeps_power() {
        let p = ZipParams::constant_p(0.5, 0.1);
        let i1 = zip_current(Complex64::new(1.0, 0.0), &p).unwrap();
        let i = zip_current(Complex64::new(0.9, 0.0), &p).unwrap();
        assert!(close(i, i1 / 0.9));
        assert!(close(Complex64::new(0.9, 0.0) * i.conj(), Complex64::new(0.5, 0.1)));
    }

    #[test]
    fn mixed_shares_match_polynomials() {
        let p = ZipParams {
            p0: 0.8,
            q0: 0.3,
            k_pp: 0.2,
            k_ip: 0.3,
            k_zp: 0.5,
            k_pq: 0.6,
            k_iq: 0.1,
            k_zq: 0.3,
        };
        let v = Complex64::from_polar(0.95, 10f64.to_radians());
        let i = zip_current(v, &p).unwrap();
        let pv = 0.8 * (0.2 + 0.3 * 0.95 + 0.5 * 0.95 * 0.95);
        let qv = 0.3 * (0.6 + 0.1 * 0.95 + 0.3 * 0.95 * 0.95);
        let s = v * i.conj();
        assert!((s.re - pv).abs() < 1e-14 && (s.im - qv).abs() < 1e-14);
        assert_eq!(p.class(), ZipClass::Mixed);
        assert_eq!(
            zip_chi(&p, ComplexFrequency::ZERO),
            Err(DeviceError::MixedZipUnsupportedAnalytic)
        );
    }

    #[test]
    fn boxed_results() {
        let eta = ComplexFrequency::new(0.07, 0.96);
        assert_eq!(
            zip_chi(&ZipParams::constant_z(1.0, 0.0), eta).unwrap(),
            ComplexFrequency::ZERO
        );
        assert_eq!(
            zip_chi(&ZipParams::constant_i(1.0, 0.0), eta).unwrap(),
            ComplexFrequency::new(-0.07, 0.0)
        );
        assert_eq!(
            zip_chi(&ZipParams::constant_p(1.0, 0.0), eta).unwrap(),
            ComplexFrequency::new(-0.14, 0.0)
        );
    }

    #[test]
    fn rejects_bad_shares_and_dead_bus() {
        let mut p = ZipParams::constant_z(1.0, 0.0);
        p.k_zp = 0.9;
        assert!(p.validate().is_err());
        assert!(matches!(
            zip_current(Complex64::new(1e-8, 0.0), &ZipParams::constant_z(1.0, 0.0)),
            Err(DeviceError::VoltageTooSmall(_))
        ));
    }
}
