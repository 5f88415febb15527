//! Fixed-step implicit trapezoidal integration of the power-system DAE.
//!
//! Differential states and bus voltages are solved simultaneously by Newton
//! iteration with a finite-difference Jacobian that is kept across
//! iterations and steps until convergence slows down. Events are applied at
//! step boundaries; the algebraic variables are then re-solved with the
//! states held.

use crate::cf::{omega_base, Trajectory};
use crate::devices::{DeviceError, DeviceKind, DeviceModel};
use crate::network::{
    dynamic_branch_derivatives, interface_solve, kcl_residual, solve_power_flow, EventEffect, EventKind, Network,
    NetworkError, PfBus, PfBusType, RlcState,
};
use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("device {id}: {source}")]
    Device { id: String, source: DeviceError },
    #[error("Newton failed at t = {time:.6} s: residual {residual:e} in {equation}")]
    NewtonDivergence { time: f64, residual: f64, equation: String },
    #[error("initial point is not consistent: residual {residual:e} in {equation}")]
    InitResidual { residual: f64, equation: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_decimation: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            newton_tol: 1e-10,
            newton_max_iter: 20,
            record_decimation: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || self.record_decimation == 0 || self.newton_max_iter == 0 {
            return Err(SimError::Config(format!(
                "need dt > 0, t_end > 0, record_decimation ≥ 1, newton_max_iter ≥ 1 (got {self:?})"
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(SimError::Config("newton_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Power-flow behaviour of a device. Powers are injections on the system
/// base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PfRole {
    Slack {
        v: f64,
        angle: f64,
    },
    Pv {
        p: f64,
        v: f64,
    },
    Pq {
        p: f64,
        q: f64,
    },
    /// Injection follows from the device's own parameters.
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceEntry {
    pub id: String,
    pub node: usize,
    pub model: DeviceModel,
    /// Device base over system base.
    pub scale: f64,
    pub pf: PfRole,
}

/// Everything a run needs: network, devices and events (times in seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub network: Network,
    pub devices: Vec<DeviceEntry>,
    pub events: Vec<crate::network::Event>,
}

/// A differential-algebraic system `ẋ = f(x, y, t)`, `0 = g(x, y, t)`.
pub trait Dae {
    fn n_diff(&self) -> usize;
    fn n_alg(&self) -> usize;
    fn f(&self, x: &[f64], y: &[f64], t: f64, out: &mut [f64]) -> Result<(), SimError>;
    fn g(&self, x: &[f64], y: &[f64], t: f64, out: &mut [f64]) -> Result<(), SimError>;
    fn equation_label(&self, k: usize) -> String {
        format!("equation {k}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct SolverStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub jacobian_evaluations: usize,
    pub max_iterations_in_step: usize,
    pub max_final_residual: f64,
}

/// Trapezoidal stepper with a cached factorized Jacobian.
pub struct TrapezoidalSolver {
    pub tol: f64,
    pub max_iter: usize,
    lu: Option<LU<f64, Dyn, Dyn>>,
    pub stats: SolverStats,
}

/// Result of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: usize,
}

pub const FD_PERTURBATION: f64 = 1e-7;

impl TrapezoidalSolver {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            lu: None,
            stats: SolverStats::default(),
        }
    }

    /// Forces a fresh Jacobian at the next step (after events).
    pub fn invalidate(&mut self) {
        self.lu = None;
    }

    #[allow(clippy::too_many_arguments)]
    fn residual<D: Dae>(
        dae: &D,
        z: &[f64],
        x_n: &[f64],
        f_n: &[f64],
        t1: f64,
        dt: f64,
        f_buf: &mut [f64],
        out: &mut [f64],
    ) -> Result<(), SimError> {
        let nx = dae.n_diff();
        let (x, y) = z.split_at(nx);
        dae.f(x, y, t1, f_buf)?;
        for k in 0..nx {
            out[k] = x[k] - x_n[k] - 0.5 * dt * (f_n[k] + f_buf[k]);
        }
        dae.g(x, y, t1, &mut out[nx..])
    }

    #[allow(clippy::too_many_arguments)]
    fn jacobian<D: Dae>(
        &mut self,
        dae: &D,
        z: &[f64],
        r0: &[f64],
        x_n: &[f64],
        f_n: &[f64],
        t1: f64,
        dt: f64,
    ) -> Result<(), SimError> {
        let n = z.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut zp = z.to_vec();
        let mut rp = vec![0.0; n];
        let mut fb = vec![0.0; dae.n_diff()];
        for c in 0..n {
            let h = FD_PERTURBATION * z[c].abs().max(1.0);
            zp[c] = z[c] + h;
            Self::residual(dae, &zp, x_n, f_n, t1, dt, &mut fb, &mut rp)?;
            zp[c] = z[c];
            for r in 0..n {
                jac[(r, c)] = (rp[r] - r0[r]) / h;
            }
        }
        self.lu = Some(jac.lu());
        self.stats.jacobian_evaluations += 1;
        Ok(())
    }

    /// Advances from `(x_n, y_n)` at `t_n` with `f_n = f(x_n, y_n, t_n)`.
    pub fn step<D: Dae>(
        &mut self,
        dae: &D,
        x_n: &[f64],
        y_n: &[f64],
        f_n: &[f64],
        t_n: f64,
        dt: f64,
    ) -> Result<StepOutcome, SimError> {
        let nx = dae.n_diff();
        let n = nx + dae.n_alg();
        let t1 = t_n + dt;
        let mut z: Vec<f64> = x_n.iter().chain(y_n).copied().collect();
        let mut r = vec![0.0; n];
        let mut fb = vec![0.0; nx];
        let mut iterations = 0;
        let mut worst = (f64::INFINITY, 0usize);
        for attempt in 0..2 {
            if attempt == 1 {
                // restart from the previous point with a fresh Jacobian
                z = x_n.iter().chain(y_n).copied().collect();
                self.lu = None;
            }
            let mut prev = f64::INFINITY;
            for _ in 0..=self.max_iter {
                Self::residual(dae, &z, x_n, f_n, t1, dt, &mut fb, &mut r)?;
                worst = r.iter().enumerate().map(|(k, v)| (v.abs(), k)).fold((0.0, 0), |a, b| {
                    if b.0 > a.0 || b.0.is_nan() {
                        b
                    } else {
                        a
                    }
                });
                if worst.0 <= self.tol {
                    self.stats.steps += 1;
                    self.stats.newton_iterations += iterations;
                    self.stats.max_iterations_in_step = self.stats.max_iterations_in_step.max(iterations);
                    self.stats.max_final_residual = self.stats.max_final_residual.max(worst.0);
                    let (x, y) = z.split_at(nx);
                    return Ok(StepOutcome {
                        x: x.to_vec(),
                        y: y.to_vec(),
                        f: fb,
                        iterations,
                    });
                }
                if !worst.0.is_finite() {
                    break;
                }
                let slow = prev.is_finite() && worst.0 > 0.25 * prev;
                if self.lu.is_none() || slow {
                    self.jacobian(dae, &z, &r, x_n, f_n, t1, dt)?;
                }
                prev = worst.0;
                let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
                let Some(dz) = self.lu.as_ref().and_then(|lu| lu.solve(&rhs)) else {
                    break;
                };
                for k in 0..n {
                    z[k] += dz[k];
                }
                iterations += 1;
            }
        }
        Err(SimError::NewtonDivergence {
            time: t1,
            residual: worst.0,
            equation: dae.equation_label(worst.1),
        })
    }
}

/// The power-system DAE for one topology. States: device states in order,
/// then four per dynamic branch (Re/Im current, Re/Im capacitor voltage).
/// Algebraic variables: Re of all node voltages, then Im.
pub struct PowerDae<'a> {
    pub devices: &'a [DeviceEntry],
    pub connected: &'a [bool],
    pub network: &'a Network,
    pub y: DMatrix<Complex64>,
    pub pinned: Vec<bool>,
    pub offsets: Vec<usize>,
    pub branch_offset: usize,
    pub n_states: usize,
    omega_base: f64,
}

impl<'a> PowerDae<'a> {
    pub fn new(devices: &'a [DeviceEntry], connected: &'a [bool], network: &'a Network) -> Self {
        let mut offsets = Vec::with_capacity(devices.len());
        let mut n = 0;
        for d in devices {
            offsets.push(n);
            n += d.model.n_states();
        }
        let branch_offset = n;
        n += 4 * network.dynamic.len();
        let y = network.assemble_y(false);
        let mut attached = vec![false; network.n_nodes()];
        for (d, on) in devices.iter().zip(connected) {
            if *on {
                attached[d.node] = true;
            }
        }
        let pinned = network.dead_nodes(&y, &attached);
        Self {
            devices,
            connected,
            network,
            y,
            pinned,
            offsets,
            branch_offset,
            n_states: n,
            omega_base: omega_base(network.f_nom),
        }
    }

    pub fn voltages(&self, y: &[f64]) -> Vec<Complex64> {
        let n = self.network.n_nodes();
        (0..n).map(|k| Complex64::new(y[k], y[n + k])).collect()
    }

    pub fn pack_voltages(v: &[Complex64]) -> Vec<f64> {
        v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect()
    }

    pub fn device_states<'x>(&self, x: &'x [f64], k: usize) -> &'x [f64] {
        let off = self.offsets[k];
        &x[off..off + self.devices[k].model.n_states()]
    }

    fn branch_state(&self, x: &[f64], b: usize) -> RlcState {
        let o = self.branch_offset + 4 * b;
        RlcState {
            i: Complex64::new(x[o], x[o + 1]),
            v_c: Complex64::new(x[o + 2], x[o + 3]),
        }
    }

    /// Injected current of device `k` on the system base (zero when
    /// disconnected).
    pub fn device_current(&self, x: &[f64], v: &[Complex64], k: usize, t: f64) -> Complex64 {
        if !self.connected[k] {
            return ZERO;
        }
        let d = &self.devices[k];
        d.scale * d.model.current(self.device_states(x, k), v[d.node], t)
    }

    /// Total injection per node from devices and dynamic branches.
    pub fn node_injections(&self, x: &[f64], v: &[Complex64], t: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|c| *c = ZERO);
        for k in 0..self.devices.len() {
            out[self.devices[k].node] += self.device_current(x, v, k, t);
        }
        for (b, br) in self.network.dynamic.iter().enumerate() {
            if br.in_service {
                let s = self.branch_state(x, b);
                out[br.from] -= s.i;
                out[br.to] += s.i;
            }
        }
    }
}

impl Dae for PowerDae<'_> {
    fn n_diff(&self) -> usize {
        self.n_states
    }

    fn n_alg(&self) -> usize {
        2 * self.network.n_nodes()
    }

    fn f(&self, x: &[f64], y: &[f64], t: f64, out: &mut [f64]) -> Result<(), SimError> {
        let v = self.voltages(y);
        for (k, d) in self.devices.iter().enumerate() {
            let off = self.offsets[k];
            let n = d.model.n_states();
            let o = &mut out[off..off + n];
            if self.connected[k] {
                d.model
                    .derivatives(&x[off..off + n], v[d.node], t, o)
                    .map_err(|source| SimError::Device {
                        id: d.id.clone(),
                        source,
                    })?;
            } else {
                o.iter_mut().for_each(|z| *z = 0.0);
            }
        }
        for (b, br) in self.network.dynamic.iter().enumerate() {
            let o = self.branch_offset + 4 * b;
            if br.in_service {
                let d = dynamic_branch_derivatives(br, &self.branch_state(x, b), v[br.from], v[br.to], self.omega_base);
                out[o..o + 4].copy_from_slice(&[d.i.re, d.i.im, d.v_c.re, d.v_c.im]);
            } else {
                out[o..o + 4].iter_mut().for_each(|z| *z = 0.0);
            }
        }
        Ok(())
    }

    fn g(&self, x: &[f64], y: &[f64], t: f64, out: &mut [f64]) -> Result<(), SimError> {
        let v = self.voltages(y);
        let n = v.len();
        let mut inj = vec![ZERO; n];
        self.node_injections(x, &v, t, &mut inj);
        let r = kcl_residual(&self.y, &v, &inj, &self.pinned);
        for k in 0..n {
            out[k] = r[k].re;
            out[n + k] = r[k].im;
        }
        Ok(())
    }

    fn equation_label(&self, k: usize) -> String {
        if k < self.n_states {
            for (d, dev) in self.devices.iter().enumerate().rev() {
                if k >= self.offsets[d] && k < self.offsets[d] + dev.model.n_states() {
                    return format!("{}.{}", dev.id, dev.model.state_names()[k - self.offsets[d]]);
                }
            }
            let b = (k - self.branch_offset) / 4;
            return format!(
                "branch {} state {}",
                self.network.dynamic[b].id,
                (k - self.branch_offset) % 4
            );
        }
        let n = self.network.n_nodes();
        let a = k - self.n_states;
        format!(
            "KCL {} ({})",
            self.network.node_label(a % n),
            if a < n { "re" } else { "im" }
        )
    }
}

/// Re-solves node voltages for fixed states.
pub fn solve_algebraic(
    dae: &PowerDae<'_>,
    x: &[f64],
    v0: &[Complex64],
    t: f64,
    tol: f64,
) -> Result<Vec<Complex64>, SimError> {
    let labels = |k: usize| dae.network.node_label(k);
    Ok(interface_solve(
        &dae.y,
        &dae.pinned,
        v0,
        |v, out| dae.node_injections(x, v, t, out),
        tol,
        50,
        &labels,
    )?)
}

/// Consistent initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoint {
    pub devices: Vec<DeviceEntry>,
    pub network: Network,
    pub x: Vec<f64>,
    pub v: Vec<Complex64>,
    /// Device injections from the power flow, system base.
    pub device_power: Vec<Complex64>,
    pub residual: f64,
}

/// Power flow, device initialization and a consistency check at `t = 0`.
pub fn initialize(system: &System) -> Result<InitialPoint, SimError> {
    let mut network = system.network.clone();
    network.prepare_events(&system.events)?;
    for d in &network.dynamic {
        d.validate()?;
    }
    let mut devices = system.devices.clone();
    let n = network.n_nodes();
    let dev_err = |d: &DeviceEntry, source: DeviceError| SimError::Device {
        id: d.id.clone(),
        source,
    };

    let mut buses = vec![
        PfBus {
            kind: PfBusType::Pq,
            fixed: ZERO,
        };
        n
    ];
    let mut regulator: Vec<Option<usize>> = vec![None; n];
    for (k, d) in devices.iter().enumerate() {
        d.model.validate().map_err(|e| dev_err(d, e))?;
        let bus = &mut buses[d.node];
        let claim = |reg: &mut Option<usize>| -> Result<(), SimError> {
            if let Some(o) = reg {
                return Err(SimError::Config(format!(
                    "devices {} and {} both regulate node {}",
                    devices[*o].id,
                    d.id,
                    network.node_label(d.node)
                )));
            }
            *reg = Some(k);
            Ok(())
        };
        match d.pf {
            PfRole::Slack { v, angle } => {
                claim(&mut regulator[d.node])?;
                bus.kind = PfBusType::Slack { v, angle };
            }
            PfRole::Pv { p, v } => {
                claim(&mut regulator[d.node])?;
                bus.kind = PfBusType::Pv { v };
                bus.fixed += Complex64::new(p, 0.0);
            }
            PfRole::Pq { p, q } => bus.fixed += Complex64::new(p, q),
            PfRole::Model => {}
        }
    }
    let has_slack = buses.iter().any(|b| matches!(b.kind, PfBusType::Slack { .. }));
    if !has_slack && buses.iter().any(|b| matches!(b.kind, PfBusType::Pv { .. })) {
        return Err(SimError::Config("PV devices need a slack device".into()));
    }

    let model_power = |node: usize, v: Complex64| -> Result<Complex64, String> {
        let mut s = ZERO;
        for d in devices.iter().filter(|d| d.node == node && d.pf == PfRole::Model) {
            s += d.scale * d.model.model_power(v).map_err(|e| format!("{}: {e}", d.id))?;
        }
        Ok(s)
    };
    let y_pf = network.assemble_y(true);
    let labels = |k: usize| network.node_label(k);
    let pf = solve_power_flow(&y_pf, &buses, &model_power, 1e-10, &labels)?;

    // per-device injections
    let mut device_power = vec![ZERO; devices.len()];
    for (k, d) in devices.iter().enumerate() {
        let v = pf.v[d.node];
        device_power[k] = match d.pf {
            PfRole::Pq { p, q } => Complex64::new(p, q),
            PfRole::Model => d.scale * d.model.model_power(v).map_err(|e| dev_err(d, e))?,
            PfRole::Slack { .. } | PfRole::Pv { .. } => ZERO,
        };
    }
    for (node, reg) in regulator.iter().enumerate() {
        if let Some(k) = reg {
            let others: Complex64 = devices
                .iter()
                .enumerate()
                .filter(|(j, d)| d.node == node && j != k)
                .map(|(j, _)| device_power[j])
                .sum();
            device_power[*k] = pf.s[node] - others;
        }
    }

    let mut x = Vec::new();
    for (k, d) in devices.iter_mut().enumerate() {
        let v = pf.v[d.node];
        let s = device_power[k] / d.scale;
        let xs = d.model.init(v, s).map_err(|e| dev_err(d, e))?;
        x.extend(xs);
    }
    for br in &network.dynamic {
        let s = br.steady_state(pf.v[br.from], pf.v[br.to]);
        x.extend([s.i.re, s.i.im, s.v_c.re, s.v_c.im]);
    }

    let connected = vec![true; devices.len()];
    let dae = PowerDae::new(&devices, &connected, &network);
    let v = solve_algebraic(&dae, &x, &pf.v, 0.0, 1e-12)?;
    let y = PowerDae::pack_voltages(&v);
    let mut f = vec![0.0; dae.n_diff()];
    let mut g = vec![0.0; dae.n_alg()];
    dae.f(&x, &y, 0.0, &mut f)?;
    dae.g(&x, &y, 0.0, &mut g)?;
    let (residual, worst) = f
        .iter()
        .chain(&g)
        .enumerate()
        .map(|(k, r)| (r.abs(), k))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    if residual > 1e-8 {
        return Err(SimError::InitResidual {
            residual,
            equation: dae.equation_label(worst),
        });
    }
    Ok(InitialPoint {
        devices,
        network,
        x,
        v,
        device_power,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub id: String,
    pub kind: DeviceKind,
    pub bus: String,
    pub node: usize,
    /// Model with the setpoints back-solved at initialization.
    pub model: DeviceModel,
    pub scale: f64,
    pub state_names: Vec<&'static str>,
    /// One row per recorded sample.
    pub states: Vec<Vec<f64>>,
    /// Injected current, system base.
    pub current: Trajectory,
    pub disconnected_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    /// Index of the recorded sample at (or nearest to) the event.
    pub sample: usize,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub omega_base: f64,
    pub bus_ids: Vec<String>,
    pub bus_voltages: Vec<Trajectory>,
    pub devices: Vec<DeviceRecord>,
    pub branch_currents: Vec<(String, Trajectory)>,
    pub events: Vec<EventRecord>,
    pub stats: SolverStats,
    pub config: SimConfig,
}

impl SimResult {
    pub fn device(&self, id: &str) -> Option<&DeviceRecord> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn device_index(&self, id: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.id == id)
    }

    /// Voltage trajectory at a device's bus.
    pub fn device_voltage(&self, k: usize) -> &Trajectory {
        &self.bus_voltages[self.devices[k].node]
    }

    pub fn state_series(&self, device: &str, state: &str) -> Option<Vec<f64>> {
        let d = self.device(device)?;
        let j = d.state_names.iter().position(|s| *s == state)?;
        Some(d.states.iter().map(|row| row[j]).collect())
    }

    pub fn event_samples(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.sample).collect()
    }

    /// Time of the last event, or 0.
    pub fn last_event_time(&self) -> f64 {
        self.events.iter().map(|e| e.time).fold(0.0, f64::max)
    }
}

struct Recorder {
    times: Vec<f64>,
    buses: Vec<Vec<Complex64>>,
    currents: Vec<Vec<Complex64>>,
    states: Vec<Vec<Vec<f64>>>,
    branches: Vec<Vec<Complex64>>,
}

impl Recorder {
    fn push(&mut self, dae: &PowerDae<'_>, x: &[f64], y: &[f64], t: f64) {
        let v = dae.voltages(y);
        self.times.push(t);
        for (b, s) in self.buses.iter_mut().enumerate() {
            s.push(v[b]);
        }
        for k in 0..dae.devices.len() {
            self.currents[k].push(dae.device_current(x, &v, k, t));
            self.states[k].push(dae.device_states(x, k).to_vec());
        }
        for (b, s) in self.branches.iter_mut().enumerate() {
            let o = dae.branch_offset + 4 * b;
            s.push(Complex64::new(x[o], x[o + 1]));
        }
    }
}

fn describe(kind: &EventKind) -> String {
    match kind {
        EventKind::ApplyFault { location, admittance } => {
            let at = match location {
                crate::network::FaultLocation::Bus(b) => format!("bus {b}"),
                crate::network::FaultLocation::BranchMidpoint(b) => format!("midpoint of {b}"),
            };
            format!("apply fault at {at} (y = {} {:+}j)", admittance.re, admittance.im)
        }
        EventKind::ClearFault => "clear fault".into(),
        EventKind::OpenBranch(b) => format!("open branch {b}"),
        EventKind::DisconnectDevice(d) => format!("disconnect device {d}"),
    }
}

pub fn run_simulation(system: &System, config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let init = initialize(system)?;
    let InitialPoint {
        devices,
        mut network,
        mut x,
        v,
        ..
    } = init;
    let dt = config.dt;
    let n_steps = (config.t_end / dt).round() as usize;
    if n_steps == 0 {
        return Err(SimError::Config("t_end shorter than one step".into()));
    }
    let dec = config.record_decimation;

    // events snapped to step indices, stable in declaration order
    let mut schedule: Vec<(usize, &EventKind)> = Vec::new();
    for e in &system.events {
        if !(e.time >= 0.0) || e.time > config.t_end {
            return Err(SimError::Config(format!(
                "event at t = {} lies outside [0, t_end]",
                e.time
            )));
        }
        schedule.push(((e.time / dt).round() as usize, &e.kind));
    }
    schedule.sort_by_key(|(k, _)| *k);

    let mut connected = vec![true; devices.len()];
    let mut disconnected_at: Vec<Option<f64>> = vec![None; devices.len()];
    let n_nodes = network.n_nodes();
    let n_bus = network.buses.len();
    let n_rec = n_steps / dec + 1;
    let mut rec = Recorder {
        times: Vec::with_capacity(n_rec),
        buses: vec![Vec::with_capacity(n_rec); n_bus],
        currents: vec![Vec::with_capacity(n_rec); devices.len()],
        states: vec![Vec::with_capacity(n_rec); devices.len()],
        branches: vec![Vec::with_capacity(n_rec); network.dynamic.len()],
    };
    let mut event_log = Vec::new();

    let mut solver = TrapezoidalSolver::new(config.newton_tol, config.newton_max_iter);
    let mut y = PowerDae::pack_voltages(&v);
    let mut next_event = 0;

    let mut step = 0usize;
    loop {
        let t = step as f64 * dt;
        // events at this boundary
        let mut changed = false;
        while next_event < schedule.len() && schedule[next_event].0 == step {
            let kind = schedule[next_event].1;
            match network.apply_event(kind)? {
                EventEffect::DisconnectDevice(id) => {
                    let k = devices
                        .iter()
                        .position(|d| d.id == id)
                        .ok_or_else(|| NetworkError::UnknownElement(format!("device {id}")))?;
                    connected[k] = false;
                    disconnected_at[k] = Some(t);
                }
                EventEffect::Topology => {
                    if let EventKind::OpenBranch(id) = kind {
                        if let Some(b) = network.dynamic.iter().position(|d| &d.id == id) {
                            let o = devices.iter().map(|d| d.model.n_states()).sum::<usize>() + 4 * b;
                            x[o..o + 4].iter_mut().for_each(|z| *z = 0.0);
                        }
                    }
                }
            }
            event_log.push(EventRecord {
                time: t,
                sample: (step + dec / 2) / dec,
                description: describe(kind),
            });
            next_event += 1;
            changed = true;
        }
        let dae = PowerDae::new(&devices, &connected, &network);
        debug_assert_eq!(dae.network.n_nodes(), n_nodes);
        if changed {
            let v0 = dae.voltages(&y);
            let v = solve_algebraic(&dae, &x, &v0, t, config.newton_tol).map_err(|e| match e {
                SimError::Network(NetworkError::NewtonDivergence { residual, node }) => SimError::NewtonDivergence {
                    time: t,
                    residual,
                    equation: format!("KCL {node} after event"),
                },
                other => other,
            })?;
            y = PowerDae::pack_voltages(&v);
            solver.invalidate();
        }
        if step.is_multiple_of(dec) {
            rec.push(&dae, &x, &y, t);
        }
        if step == n_steps {
            break;
        }
        // integrate until the next event boundary with this topology
        let stop = schedule.get(next_event).map_or(n_steps, |(k, _)| (*k).min(n_steps));
        let mut f = vec![0.0; dae.n_diff()];
        dae.f(&x, &y, t, &mut f)?;
        while step < stop {
            let t_n = step as f64 * dt;
            let out = solver.step(&dae, &x, &y, &f, t_n, dt)?;
            x = out.x;
            y = out.y;
            f = out.f;
            step += 1;
            if step.is_multiple_of(dec) && step < stop {
                rec.push(&dae, &x, &y, step as f64 * dt);
            }
        }
    }

    let ob = omega_base(network.f_nom);
    let rec_dt = dt * dec as f64;
    let traj = |s: Vec<Complex64>| Trajectory {
        t0: 0.0,
        dt: rec_dt,
        omega_base: ob,
        frame_speed: 1.0,
        samples: s,
    };
    let devices_out = devices
        .iter()
        .enumerate()
        .map(|(k, d)| DeviceRecord {
            id: d.id.clone(),
            kind: d.model.kind(),
            bus: network.node_label(d.node),
            node: d.node,
            model: d.model.clone(),
            scale: d.scale,
            state_names: d.model.state_names(),
            states: std::mem::take(&mut rec.states[k]),
            current: traj(std::mem::take(&mut rec.currents[k])),
            disconnected_at: disconnected_at[k],
        })
        .collect();
    Ok(SimResult {
        times: rec.times,
        omega_base: ob,
        bus_ids: network.buses.iter().map(|b| b.id.clone()).collect(),
        bus_voltages: rec.buses.into_iter().map(traj).collect(),
        devices: devices_out,
        branch_currents: network
            .dynamic
            .iter()
            .zip(rec.branches)
            .map(|(b, s)| (b.id.clone(), traj(s)))
            .collect(),
        events: event_log,
        stats: solver.stats,
        config: *config,
    })
}
