//! Complex-frequency algebra on Park vectors.
//!
//! A Park vector `a = a·e^{jα}` has complex frequency `ȧ/a + jα̇`. Every
//! quantity here is normalized on the system angular base `Ω_b = 2π·f_nom`,
//! so a vector rotating at nominal speed has `omega = 1.0`. The `omega`
//! component is always reported as an absolute speed: the speed of the
//! reference frame the samples were taken in is added back.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Sub};
use thiserror::Error;

/// Magnitudes below this are treated as zero; CF is undefined there.
pub const MIN_MAG: f64 = 1e-6;

/// Default nominal frequency in Hz.
pub const DEFAULT_F_NOM: f64 = 60.0;

/// `Ω_b` for a nominal frequency in Hz.
pub fn omega_base(f_nom: f64) -> f64 {
    2.0 * PI * f_nom
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfError {
    #[error("vector magnitude {magnitude:e} below {MIN_MAG:e} at sample {index}")]
    MagnitudeTooSmall { index: usize, magnitude: f64 },
    #[error("need at least 3 samples for differentiation, got {0}")]
    TooFewSamples(usize),
    #[error("sample spacing must be positive, got {0}")]
    BadSpacing(f64),
}

/// Complex dq-frame quantity `d + jq`, per unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParkVector {
    pub d: f64,
    pub q: f64,
}

impl ParkVector {
    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn from_polar(magnitude: f64, angle: f64) -> Self {
        Complex64::from_polar(magnitude, angle).into()
    }

    pub fn magnitude(&self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn angle(&self) -> f64 {
        self.q.atan2(self.d)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.d, self.q)
    }
}

impl From<Complex64> for ParkVector {
    fn from(c: Complex64) -> Self {
        Self { d: c.re, q: c.im }
    }
}

impl From<ParkVector> for Complex64 {
    fn from(p: ParkVector) -> Self {
        Complex64::new(p.d, p.q)
    }
}

/// `rho + j·omega`, both per unit on `Ω_b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub rho: f64,
    pub omega: f64,
}

impl ComplexFrequency {
    pub const ZERO: Self = Self { rho: 0.0, omega: 0.0 };

    pub const fn new(rho: f64, omega: f64) -> Self {
        Self { rho, omega }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.rho, self.omega)
    }

    pub fn norm(&self) -> f64 {
        self.rho.hypot(self.omega)
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.omega.is_finite()
    }
}

impl From<Complex64> for ComplexFrequency {
    fn from(c: Complex64) -> Self {
        Self { rho: c.re, omega: c.im }
    }
}

impl From<ComplexFrequency> for Complex64 {
    fn from(c: ComplexFrequency) -> Self {
        c.as_complex()
    }
}

impl Sub for ComplexFrequency {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.rho - rhs.rho, self.omega - rhs.omega)
    }
}

impl Add for ComplexFrequency {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.rho + rhs.rho, self.omega + rhs.omega)
    }
}

/// Uniformly sampled Park-vector signal.
///
/// `frame_speed` is the absolute speed (pu) of the rotating frame the
/// samples are expressed in; 1.0 for the synchronous frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub omega_base: f64,
    pub frame_speed: f64,
    pub samples: Vec<Complex64>,
}

impl Trajectory {
    /// Trajectory in the synchronous frame at `f_nom` = 60 Hz.
    pub fn synchronous(t0: f64, dt: f64, samples: Vec<Complex64>) -> Self {
        Self {
            t0,
            dt,
            omega_base: omega_base(DEFAULT_F_NOM),
            frame_speed: 1.0,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| self.time(k))
    }

    /// Same samples multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s *= factor);
        out
    }
}

/// Per-sample complex frequency of a trajectory.
///
/// Interior samples use second-order central differences of `ln a` (log
/// magnitude and unwrapped angle); the two end samples use one-sided
/// second-order differences.
pub fn cf_from_samples(traj: &Trajectory) -> Result<Vec<ComplexFrequency>, CfError> {
    if let Some((index, s)) = traj.samples.iter().enumerate().find(|(_, s)| !(s.norm() >= MIN_MAG)) {
        return Err(CfError::MagnitudeTooSmall {
            index,
            magnitude: s.norm(),
        });
    }
    let out = cf_from_samples_masked(traj)?;
    Ok(out.into_iter().map(|c| c.expect("all samples valid")).collect())
}

/// Like [`cf_from_samples`] but tolerates samples below [`MIN_MAG`]: every
/// estimate whose stencil touches such a sample is `None`.
pub fn cf_from_samples_masked(traj: &Trajectory) -> Result<Vec<Option<ComplexFrequency>>, CfError> {
    let n = traj.samples.len();
    if n < 3 {
        return Err(CfError::TooFewSamples(n));
    }
    if !(traj.dt > 0.0) {
        return Err(CfError::BadSpacing(traj.dt));
    }
    // Increment of ln(a) over each interval; the principal value of the
    // angle increment is the unwrapping step (|Δα| < π per sample).
    let steps: Vec<Option<Complex64>> = traj
        .samples
        .windows(2)
        .map(|w| {
            if w[0].norm() >= MIN_MAG && w[1].norm() >= MIN_MAG {
                let ratio = w[1] / w[0];
                Some(Complex64::new(ratio.norm().ln(), ratio.arg()))
            } else {
                None
            }
        })
        .collect();

    let scale = 1.0 / (2.0 * traj.dt * traj.omega_base);
    let to_cf = |d: Complex64| ComplexFrequency::new(d.re * scale, d.im * scale + traj.frame_speed);

    let mut out = Vec::with_capacity(n);
    out.push(match (steps[0], steps[1]) {
        (Some(a), Some(b)) => Some(to_cf(3.0 * a - b)),
        _ => None,
    });
    for k in 1..n - 1 {
        out.push(match (steps[k - 1], steps[k]) {
            (Some(a), Some(b)) => Some(to_cf(a + b)),
            _ => None,
        });
    }
    out.push(match (steps[n - 3], steps[n - 2]) {
        (Some(a), Some(b)) => Some(to_cf(3.0 * b - a)),
        _ => None,
    });
    Ok(out)
}

/// CF of the dynamic equivalent admittance: `χ = ξ − η`.
pub fn chi_from_cf(xi: ComplexFrequency, eta: ComplexFrequency) -> ComplexFrequency {
    xi - eta
}

/// `χ = ξ_a + (κ_ρ − 1)ρ + (κ_ω − j)ω` with `ρ, ω` taken from `eta`.
pub fn chi_from_xi_terms(
    xi_a: Complex64,
    k_rho: Complex64,
    k_omega: Complex64,
    eta: ComplexFrequency,
) -> ComplexFrequency {
    let j = Complex64::i();
    (xi_a + (k_rho - 1.0) * eta.rho + (k_omega - j) * eta.omega).into()
}

/// Re-expresses a trajectory in a frame spinning `delta_omega` pu faster.
pub fn rotate_frame(traj: &Trajectory, delta_omega: f64) -> Trajectory {
    let mut out = traj.clone();
    if delta_omega == 0.0 {
        return out;
    }
    let w = delta_omega * traj.omega_base;
    for (k, s) in out.samples.iter_mut().enumerate() {
        let t = traj.t0 + k as f64 * traj.dt;
        *s *= Complex64::from_polar(1.0, -w * t);
    }
    out.frame_speed += delta_omega;
    out
}

/// `s = p + jq` with `p = v_d·i_d + v_q·i_q`, `q = v_q·i_d − v_d·i_q`.
pub fn apparent_power(v: ParkVector, i: ParkVector) -> Complex64 {
    Complex64::new(v.d * i.d + v.q * i.q, v.q * i.d - v.d * i.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp_signal(sigma_pu: f64, dw: f64, dt: f64, n: usize) -> Trajectory {
        let ob = omega_base(60.0);
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::new(sigma_pu * ob * t, dw * ob * t).exp()
            })
            .collect();
        Trajectory::synchronous(0.0, dt, samples)
    }

    #[test]
    fn constant_vector_has_frame_speed() {
        let tr = Trajectory::synchronous(0.0, 1e-3, vec![Complex64::new(1.0, 0.0); 10]);
        for c in cf_from_samples(&tr).unwrap() {
            assert_eq!(c, ComplexFrequency::new(0.0, 1.0));
        }
    }

    #[test]
    fn exponential_spiral_is_recovered() {
        let tr = exp_signal(0.05, 0.01, 1e-4, 200);
        for c in cf_from_samples(&tr).unwrap() {
            assert_abs_diff_eq!(c.rho, 0.05, epsilon = 1e-9);
            assert_abs_diff_eq!(c.omega, 1.01, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_small_magnitude_and_short_input() {
        let mut s = vec![Complex64::new(1.0, 0.0); 7];
        s[3] = Complex64::new(1e-9, 0.0);
        let tr = Trajectory::synchronous(0.0, 1e-3, s);
        assert!(matches!(
            cf_from_samples(&tr),
            Err(CfError::MagnitudeTooSmall { index: 3, .. })
        ));
        let masked = cf_from_samples_masked(&tr).unwrap();
        let flags: Vec<bool> = masked.iter().map(Option::is_some).collect();
        assert_eq!(flags, [true, true, false, false, false, true, true]);

        let short = Trajectory::synchronous(0.0, 1e-3, vec![Complex64::new(1.0, 0.0); 2]);
        assert_eq!(cf_from_samples(&short), Err(CfError::TooFewSamples(2)));
    }

    #[test]
    fn unwrapping_survives_pi_crossings() {
        // 0.2 pu off-nominal rotation crosses ±π many times in 1 s.
        let tr = exp_signal(0.0, 0.2, 1e-3, 1000);
        for c in cf_from_samples(&tr).unwrap() {
            assert_abs_diff_eq!(c.omega, 1.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn chi_compositions() {
        let xi = ComplexFrequency::new(0.0, 1.0);
        let eta = ComplexFrequency::new(0.02, 1.0);
        let chi = chi_from_cf(xi, eta);
        assert_abs_diff_eq!(chi.rho, -0.02, epsilon = 1e-15);
        assert_eq!(chi.omega, 0.0);

        let j = Complex64::i();
        let eta = ComplexFrequency::new(0.03, 1.0);
        let z = chi_from_xi_terms(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), j, eta);
        assert_eq!(z, ComplexFrequency::ZERO);
        let i_load = chi_from_xi_terms(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), j, eta);
        assert_abs_diff_eq!(i_load.rho, -0.03, epsilon = 1e-15);
        assert_eq!(i_load.omega, 0.0);
        let p_load = chi_from_xi_terms(Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0), j, eta);
        assert_abs_diff_eq!(p_load.rho, -0.06, epsilon = 1e-15);
        assert_eq!(p_load.omega, 0.0);
    }

    #[test]
    fn rotation_identity_and_absolute_omega() {
        let tr = Trajectory::synchronous(0.0, 1e-3, vec![Complex64::new(0.8, 0.3); 50]);
        assert_eq!(rotate_frame(&tr, 0.0), tr);
        let rot = rotate_frame(&tr, 0.1);
        assert_abs_diff_eq!(rot.frame_speed, 1.1, epsilon = 1e-15);
        // samples now spin backwards at 0.1 pu
        let a1 = rot.samples[1].arg() - rot.samples[0].arg();
        assert_abs_diff_eq!(a1, -0.1 * tr.omega_base * 1e-3, epsilon = 1e-12);
        for c in cf_from_samples(&rot).unwrap() {
            assert_abs_diff_eq!(c.omega, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(c.rho, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn apparent_power_matches_complex_product() {
        let one = ParkVector::new(1.0, 0.0);
        assert_eq!(apparent_power(one, one), Complex64::new(1.0, 0.0));
        assert_eq!(
            apparent_power(one, ParkVector::new(0.0, 1.0)),
            Complex64::new(0.0, -1.0)
        );
        let v = ParkVector::new(0.98, 0.1);
        let i = ParkVector::new(0.7, -0.2);
        let direct = v.as_complex() * i.as_complex().conj();
        let s = apparent_power(v, i);
        assert_abs_diff_eq!(s.re, direct.re, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, direct.im, epsilon = 1e-15);
        // 0.98·0.7 + 0.1·(−0.2) and 0.1·0.7 − 0.98·(−0.2)
        assert_abs_diff_eq!(s.re, 0.666, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, 0.266, epsilon = 1e-15);
    }
}
