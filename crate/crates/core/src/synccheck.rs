//! Numeric `χ` per device, BLS/ALS verdicts on finite horizons, and the
//! analytic-versus-numeric cross-check.
//!
//! BLS is judged on the supremum of `‖χ‖` after a settling window, ALS on
//! the maximum over the final tail window together with the slope of the
//! log envelope over that tail. Samples near events are masked, never
//! interpolated.

use crate::cf::{cf_from_samples_masked, chi_from_cf, CfError, ComplexFrequency, Trajectory};
use crate::devices::DeviceKind;
use crate::sim::SimResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("window too short: need {needed:.3} s, have {available:.3} s")]
    WindowTooShort { needed: f64, available: f64 },
    #[error("time axes differ: {0}")]
    AxisMismatch(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("no unmasked samples in [{start:.3}, {end:.3}] s")]
    NoSamples { start: f64, end: f64 },
    #[error(transparent)]
    Cf(#[from] CfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncSettings {
    /// BLS bound, pu.
    pub epsilon: f64,
    /// ALS tail bound, pu.
    pub tail_tol: f64,
    /// Time after the last event before BLS is judged, s.
    pub settle: f64,
    pub tail_window: f64,
    /// Samples masked on each side of an event.
    pub mask_width: usize,
}

impl Default for SyncSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            tail_tol: 1e-4,
            settle: 2.0,
            tail_window: 3.0,
            mask_width: 2,
        }
    }
}

/// Number of sub-windows whose maxima form the ALS envelope.
pub const ENVELOPE_SEGMENTS: usize = 6;

/// Envelope values below `tail_tol · ENVELOPE_FLOOR` are clamped so that
/// round-off does not produce a trend.
pub const ENVELOPE_FLOOR: f64 = 1e-3;

/// Sampled `χ`; `None` marks masked samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Option<ComplexFrequency>>,
}

impl ChiSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    pub fn norms(&self) -> Vec<Option<f64>> {
        self.values.iter().map(|c| c.map(|c| c.norm())).collect()
    }

    /// Unmasked `(t, ‖χ‖)` pairs with `t ≥ start` (a half-sample slack
    /// absorbs round-off in the time grid).
    fn norms_from(&self, start: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let slack = 0.5 * self.dt;
        self.values.iter().enumerate().filter_map(move |(k, c)| {
            let t = self.time(k);
            match c {
                Some(c) if t >= start - slack => Some((t, c.norm())),
                _ => None,
            }
        })
    }

    pub fn mask_around(&mut self, samples: &[usize], width: usize) {
        let n = self.values.len();
        for &s in samples {
            for k in s.saturating_sub(width)..(s + width + 1).min(n) {
                self.values[k] = None;
            }
        }
    }

    pub fn masked_count(&self) -> usize {
        self.values.iter().filter(|c| c.is_none()).count()
    }
}

/// `χ = ξ − η` from the recorded current and bus voltage of a device,
/// masked `mask_width` samples around every event and wherever either
/// magnitude is too small to differentiate.
pub fn numeric_chi(result: &SimResult, device: &str, mask_width: usize) -> Result<ChiSeries, SyncError> {
    let k = result
        .device_index(device)
        .ok_or_else(|| SyncError::UnknownDevice(device.to_string()))?;
    let current = &result.devices[k].current;
    let voltage = result.device_voltage(k);
    let mut chi = chi_between(current, voltage)?;
    chi.mask_around(&result.event_samples(), mask_width);
    Ok(chi)
}

/// `χ` from a current and a voltage trajectory on the same grid.
pub fn chi_between(current: &Trajectory, voltage: &Trajectory) -> Result<ChiSeries, SyncError> {
    if current.len() != voltage.len() || current.dt != voltage.dt || current.t0 != voltage.t0 {
        return Err(SyncError::AxisMismatch(format!(
            "current {} samples from {} step {}, voltage {} samples from {} step {}",
            current.len(),
            current.t0,
            current.dt,
            voltage.len(),
            voltage.t0,
            voltage.dt
        )));
    }
    let xi = cf_from_samples_masked(current)?;
    let eta = cf_from_samples_masked(voltage)?;
    Ok(ChiSeries {
        t0: current.t0,
        dt: current.dt,
        values: xi
            .into_iter()
            .zip(eta)
            .map(|(x, e)| Some(chi_from_cf(x?, e?)))
            .collect(),
    })
}

/// Numerically measured `η` at a device's bus, event-masked.
pub fn numeric_eta(result: &SimResult, device: &str, mask_width: usize) -> Result<ChiSeries, SyncError> {
    let k = result
        .device_index(device)
        .ok_or_else(|| SyncError::UnknownDevice(device.to_string()))?;
    let v = result.device_voltage(k);
    let mut eta = ChiSeries {
        t0: v.t0,
        dt: v.dt,
        values: cf_from_samples_masked(v)?,
    };
    eta.mask_around(&result.event_samples(), mask_width);
    Ok(eta)
}

/// Closed-form `χ` from the recorded device states, with `η` taken from
/// the numerically differentiated bus voltage. `None` when the model has
/// no closed form (mixed ZIP). Samples where `η` is masked, the formula is
/// singular, or the device is disconnected are masked.
pub fn analytic_chi(result: &SimResult, device: &str, mask_width: usize) -> Result<Option<ChiSeries>, SyncError> {
    let k = result
        .device_index(device)
        .ok_or_else(|| SyncError::UnknownDevice(device.to_string()))?;
    let rec = &result.devices[k];
    if let crate::devices::DeviceModel::Zip(p) = &rec.model {
        if p.class() == crate::devices::ZipClass::Mixed {
            return Ok(None);
        }
    }
    let eta = numeric_eta(result, device, mask_width)?;
    let voltage = result.device_voltage(k);
    let values = eta
        .values
        .iter()
        .enumerate()
        .map(|(s, e)| {
            let e = (*e)?;
            let t = eta.time(s);
            if rec.disconnected_at.is_some_and(|td| t >= td - 0.5 * eta.dt) {
                return None;
            }
            let x = &rec.states[s];
            let v = voltage.samples[s];
            let i = rec.model.current(x, v, t);
            rec.model.analytic_chi(x, v, i, e, t).ok().filter(|c| c.is_finite())
        })
        .collect();
    Ok(Some(ChiSeries {
        t0: eta.t0,
        dt: eta.dt,
        values,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlsVerdict {
    pub pass: bool,
    pub epsilon: f64,
    /// Supremum of `‖χ‖` over the window.
    pub sup_norm: f64,
    pub window: [f64; 2],
    /// `‖χ(t0)‖` at the first unmasked sample of the window; recorded, not
    /// gated on.
    pub chi_t0: f64,
}

/// Passes iff `sup ‖χ(t)‖ < ε` for unmasked `t ≥ t0 + settle`.
pub fn check_bls(chi: &ChiSeries, t0: f64, epsilon: f64, settle: f64) -> Result<BlsVerdict, SyncError> {
    let start = t0 + settle;
    let end = chi.t_end();
    if end - start < 1.0 - 1e-9 {
        return Err(SyncError::WindowTooShort {
            needed: 1.0,
            available: end - start,
        });
    }
    let mut it = chi.norms_from(start).peekable();
    let chi_t0 = it.peek().map(|p| p.1).ok_or(SyncError::NoSamples { start, end })?;
    let sup_norm = it.fold(0.0_f64, |m, (_, n)| m.max(n));
    Ok(BlsVerdict {
        pass: sup_norm < epsilon,
        epsilon,
        sup_norm,
        window: [start, end],
        chi_t0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsVerdict {
    pub pass: bool,
    pub tail_tol: f64,
    /// Maximum of `‖χ‖` over the tail window.
    pub tail_max: f64,
    /// Least-squares slope of the log envelope over the tail, 1/s.
    pub slope: f64,
    pub window: [f64; 2],
    /// The last unmasked `‖χ‖` exceeds ten times the median.
    pub diverging: bool,
}

/// Maxima of `‖χ‖` over `segments` equal sub-windows of `[start, end]`,
/// as `(mid time, max)`; empty sub-windows are skipped.
pub fn envelope(chi: &ChiSeries, start: f64, end: f64, segments: usize) -> Vec<(f64, f64)> {
    let width = (end - start) / segments as f64;
    let mut out = vec![(f64::NAN, f64::NEG_INFINITY); segments];
    for (j, o) in out.iter_mut().enumerate() {
        o.0 = start + (j as f64 + 0.5) * width;
    }
    for (t, n) in chi.norms_from(start) {
        let j = (((t - start) / width).floor().max(0.0) as usize).min(segments - 1);
        out[j].1 = out[j].1.max(n);
    }
    out.into_iter().filter(|o| o.1.is_finite()).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Passes iff the tail maximum is below `tail_tol`, the log-envelope
/// slope is not positive, and the last unmasked sample does not exceed ten
/// times the median of the series. `after` is the time of the last event;
/// the tail must lie entirely after it.
pub fn check_als(chi: &ChiSeries, tail_tol: f64, tail_window: f64, after: f64) -> Result<AlsVerdict, SyncError> {
    let end = chi.t_end();
    let start = end - tail_window;
    if !(tail_window > 0.0) || start < after - 1e-9 {
        return Err(SyncError::WindowTooShort {
            needed: tail_window,
            available: end - after,
        });
    }
    let tail: Vec<(f64, f64)> = chi.norms_from(start).collect();
    if tail.is_empty() {
        return Err(SyncError::NoSamples { start, end });
    }
    let tail_max = tail.iter().fold(0.0_f64, |m, p| m.max(p.1));
    let floor = tail_tol * ENVELOPE_FLOOR;
    let env: Vec<(f64, f64)> = envelope(chi, start, end, ENVELOPE_SEGMENTS)
        .into_iter()
        .map(|(t, m)| (t, m.max(floor).ln()))
        .collect();
    let slope = linear_slope(&env);
    let all: Vec<f64> = chi.values.iter().flatten().map(|c| c.norm()).collect();
    let last = tail.last().map_or(0.0, |p| p.1);
    let diverging = last > floor && last > 10.0 * median(all);
    Ok(AlsVerdict {
        pass: tail_max < tail_tol && slope <= 0.0 && !diverging,
        tail_tol,
        tail_max,
        slope,
        window: [start, end],
        diverging,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub rms: f64,
    pub max: f64,
    /// Time of the largest difference.
    pub worst_time: f64,
    /// Samples compared (unmasked in both series).
    pub samples: usize,
}

/// RMS and maximum of `|a − b|` over samples unmasked in both series.
pub fn crosscheck_chi(a: &ChiSeries, b: &ChiSeries) -> Result<CrossCheck, SyncError> {
    if a.len() != b.len() || (a.dt - b.dt).abs() > 1e-12 * a.dt || (a.t0 - b.t0).abs() > 1e-12 {
        return Err(SyncError::AxisMismatch(format!(
            "{} samples at {} s vs {} samples at {} s",
            a.len(),
            a.dt,
            b.len(),
            b.dt
        )));
    }
    let mut sum = 0.0;
    let mut out = CrossCheck {
        rms: 0.0,
        max: 0.0,
        worst_time: a.t0,
        samples: 0,
    };
    for (k, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if let (Some(x), Some(y)) = (x, y) {
            let d = (*x - *y).norm();
            sum += d * d;
            out.samples += 1;
            if d > out.max {
                out.max = d;
                out.worst_time = a.time(k);
            }
        }
    }
    if out.samples > 0 {
        out.rms = (sum / out.samples as f64).sqrt();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncVerdict {
    pub device: String,
    pub kind: DeviceKind,
    pub bls: Option<BlsVerdict>,
    pub als: Option<AlsVerdict>,
    pub notes: Vec<String>,
}

/// Everything computed for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSync {
    pub id: String,
    pub numeric: ChiSeries,
    pub analytic: Option<ChiSeries>,
    pub crosscheck: Option<CrossCheck>,
    pub verdict: SyncVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncAnalysis {
    pub settings: SyncSettings,
    pub last_event: f64,
    pub devices: Vec<DeviceSync>,
    /// Largest spread of internal angles across angle-bearing devices, rad.
    pub max_angle_spread: f64,
    /// The spread exceeded π at some sample.
    pub unstable: bool,
}

impl SyncAnalysis {
    pub fn device(&self, id: &str) -> Option<&DeviceSync> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn verdicts(&self) -> Vec<SyncVerdict> {
        self.devices.iter().map(|d| d.verdict.clone()).collect()
    }
}

/// Largest spread of internal angles at any recorded sample.
pub fn max_angle_spread(result: &SimResult) -> f64 {
    let mut spread = 0.0_f64;
    for s in 0..result.times.len() {
        let angles: Vec<f64> = result
            .devices
            .iter()
            .filter(|d| d.disconnected_at.is_none_or(|td| result.times[s] < td))
            .filter_map(|d| d.model.internal_angle(&d.states[s]))
            .collect();
        if let (Some(lo), Some(hi)) = (
            angles.iter().copied().reduce(f64::min),
            angles.iter().copied().reduce(f64::max),
        ) {
            spread = spread.max(hi - lo);
        }
    }
    spread
}

/// Verdicts for one device's `χ`. BLS is judged from
/// `max(last event + settle, t_end − tail_window)` so that an ALS pass
/// implies a BLS pass for every `ε ≥ tail_tol`.
pub fn verdict(id: &str, kind: DeviceKind, chi: &ChiSeries, last_event: f64, settings: &SyncSettings) -> SyncVerdict {
    let mut notes = Vec::new();
    let t_end = chi.t_end();
    let t0 = last_event.max(t_end - settings.tail_window - settings.settle);
    let bls = match check_bls(chi, t0, settings.epsilon, settings.settle) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("BLS not judged: {e}"));
            None
        }
    };
    let als = match check_als(
        chi,
        settings.tail_tol,
        settings.tail_window,
        last_event + settings.settle,
    ) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("ALS not judged: {e}"));
            None
        }
    };
    if let Some(a) = &als {
        if a.diverging {
            notes.push("chi diverging at end of run".into());
        }
    }
    let masked = chi.masked_count();
    if masked > 0 {
        notes.push(format!("{masked} samples masked"));
    }
    SyncVerdict {
        device: id.to_string(),
        kind,
        bls,
        als,
        notes,
    }
}

/// Numeric and analytic `χ`, cross-check, and verdicts for every device.
pub fn analyze(result: &SimResult, settings: &SyncSettings) -> Result<SyncAnalysis, SyncError> {
    let last_event = result.last_event_time();
    let mut devices = Vec::with_capacity(result.devices.len());
    for rec in &result.devices {
        let numeric = numeric_chi(result, &rec.id, settings.mask_width)?;
        let analytic = analytic_chi(result, &rec.id, settings.mask_width)?;
        let crosscheck = match &analytic {
            Some(a) => Some(crosscheck_chi(a, &numeric)?),
            None => None,
        };
        let verdict = match rec.disconnected_at {
            Some(td) => SyncVerdict {
                device: rec.id.clone(),
                kind: rec.kind,
                bls: None,
                als: None,
                notes: vec![format!("disconnected at t = {td} s")],
            },
            None => {
                let mut v = verdict(&rec.id, rec.kind, &numeric, last_event, settings);
                if analytic.is_none() {
                    v.notes.push("no closed-form chi for this model".into());
                }
                v
            }
        };
        devices.push(DeviceSync {
            id: rec.id.clone(),
            numeric,
            analytic,
            crosscheck,
            verdict,
        });
    }
    let spread = max_angle_spread(result);
    Ok(SyncAnalysis {
        settings: *settings,
        last_event,
        devices,
        max_angle_spread: spread,
        unstable: spread > std::f64::consts::PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(dt: f64, n: usize, f: impl Fn(f64) -> ComplexFrequency) -> ChiSeries {
        ChiSeries {
            t0: 0.0,
            dt,
            values: (0..n).map(|k| Some(f(k as f64 * dt))).collect(),
        }
    }

    #[test]
    fn zero_chi_passes_everything() {
        let chi = series(1e-3, 10_001, |_| ComplexFrequency::ZERO);
        for eps in [1e-12, 1e-4, 1.0] {
            assert!(check_bls(&chi, 1.0, eps, 2.0).unwrap().pass);
        }
        let als = check_als(&chi, 1e-4, 3.0, 1.0).unwrap();
        assert!(als.pass && als.slope == 0.0 && als.tail_max == 0.0);
    }

    #[test]
    fn bounded_oscillation_fails_bls() {
        let chi = series(1e-3, 20_001, |t| {
            ComplexFrequency::new(0.0, 0.05 * (2.0 * std::f64::consts::PI * t).sin())
        });
        let bls = check_bls(&chi, 1.0, 1e-4, 2.0).unwrap();
        assert!(!bls.pass);
        assert!((bls.sup_norm - 0.05).abs() < 1e-6);
        let als = check_als(&chi, 1e-4, 3.0, 1.0).unwrap();
        assert!(!als.pass);
        assert!(als.slope.abs() < 1e-3, "{}", als.slope);
    }

    #[test]
    fn decaying_exponential_passes_bls() {
        let chi = series(1e-3, 12_001, |t| ComplexFrequency::new(0.1 * (-t).exp(), 0.0));
        let bls = check_bls(&chi, 0.0, 1e-3, 8.0).unwrap();
        assert!(bls.pass, "{bls:?}");
        assert!((bls.sup_norm - 0.1 * (-8.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn growing_chi_fails_als() {
        let chi = series(1e-3, 10_001, |t| ComplexFrequency::new(0.0, 1e-7 * (t).exp()));
        let als = check_als(&chi, 1e-4, 3.0, 1.0).unwrap();
        assert!(!als.pass && als.slope > 0.9 && als.diverging);
        // below the tolerance the slope alone still fails
        let chi = series(1e-3, 10_001, |t| ComplexFrequency::new(0.0, 1e-9 * (t).exp()));
        let als = check_als(&chi, 1e-4, 3.0, 1.0).unwrap();
        assert!(als.tail_max < 1e-4 && !als.pass);
    }

    #[test]
    fn short_windows_are_errors() {
        let chi = series(1e-3, 2_001, |_| ComplexFrequency::ZERO);
        assert!(matches!(
            check_bls(&chi, 0.5, 1e-4, 1.0),
            Err(SyncError::WindowTooShort { .. })
        ));
        assert!(matches!(
            check_als(&chi, 1e-4, 3.0, 0.0),
            Err(SyncError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn masked_samples_are_ignored() {
        let mut chi = series(1e-3, 10_001, |_| ComplexFrequency::ZERO);
        chi.values[9_000] = Some(ComplexFrequency::new(1.0, 0.0));
        assert!(!check_bls(&chi, 1.0, 1e-4, 2.0).unwrap().pass);
        chi.mask_around(&[9_000], 2);
        assert_eq!(chi.masked_count(), 5);
        assert!(check_bls(&chi, 1.0, 1e-4, 2.0).unwrap().pass);
    }

    #[test]
    fn crosscheck_arithmetic() {
        let a = series(1e-3, 10_000, |_| ComplexFrequency::new(0.3, -0.2));
        let same = crosscheck_chi(&a, &a).unwrap();
        assert_eq!((same.rms, same.max), (0.0, 0.0));
        let mut b = a.clone();
        b.values[4_321] = Some(ComplexFrequency::new(0.3, -0.19));
        let c = crosscheck_chi(&a, &b).unwrap();
        assert!((c.max - 1e-2).abs() < 1e-15);
        assert!((c.rms - 1e-4).abs() < 1e-15);
        assert!((c.worst_time - 4.321).abs() < 1e-12);
        let short = series(1e-3, 9_999, |_| ComplexFrequency::ZERO);
        assert!(matches!(crosscheck_chi(&a, &short), Err(SyncError::AxisMismatch(_))));
    }

    #[test]
    fn als_pass_implies_bls_pass() {
        // decaying oscillation, long enough for ALS to pass
        let chi = series(1e-3, 20_001, |t| {
            ComplexFrequency::new(0.0, 0.5 * (-0.8 * t).exp() * (7.0 * t).sin())
        });
        let v = verdict("g", DeviceKind::Sm2, &chi, 1.0, &SyncSettings::default());
        let als = v.als.unwrap();
        assert!(als.pass, "{als:?}");
        assert!(v.bls.unwrap().pass);
    }
}
