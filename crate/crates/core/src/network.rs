//! Phasor network: bus admittance matrix, dynamic series-RLC branches,
//! topology events, power flow and the algebraic interface solve.
//!
//! Node numbering: buses first, in declaration order, then one extra node
//! per branch that can be faulted at its midpoint. Such branches are always
//! modelled as two half sections joined at that node.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("admittance matrix is singular (node {0} cannot be solved)")]
    SingularY(String),
    #[error("interface solve did not converge: residual {residual:e} at node {node}")]
    NewtonDivergence { residual: f64, node: String },
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    PfDivergence { iterations: usize, mismatch: f64 },
    #[error("unknown element: {0}")]
    UnknownElement(String),
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    #[error("device error at node {node}: {message}")]
    Device { node: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub base_kv: f64,
    pub area: u32,
    /// Constant shunt admittance to ground.
    pub shunt: Complex64,
}

/// Static π-section branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    pub b: f64,
    /// Off-nominal ratio at the `from` side.
    pub tap: f64,
    pub in_service: bool,
    pub midpoint: Option<usize>,
}

impl Branch {
    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(self.r, self.x).inv()
    }
}

/// Series R-L-C branch with its own current and capacitor-voltage states.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicBranch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub l: f64,
    pub c: f64,
    pub in_service: bool,
}

/// State of a dynamic branch: current `from → to` and capacitor voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlcState {
    pub i: Complex64,
    pub v_c: Complex64,
}

impl DynamicBranch {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.l > 0.0 && self.c > 0.0 && self.r >= 0.0) {
            return Err(NetworkError::ParamDomain(format!(
                "dynamic branch {} needs L > 0, C > 0, R ≥ 0",
                self.id
            )));
        }
        Ok(())
    }

    /// Impedance at the frame frequency, `R + j(L − 1/C)`.
    pub fn steady_impedance(&self) -> Complex64 {
        Complex64::new(self.r, self.l - 1.0 / self.c)
    }

    pub fn steady_state(&self, v_from: Complex64, v_to: Complex64) -> RlcState {
        let i = (v_from - v_to) / self.steady_impedance();
        RlcState {
            i,
            v_c: i / Complex64::new(0.0, self.c),
        }
    }
}

/// `(L/Ω_b)·dī/dt = v_from − v_to − (R + jL)ī − v_c`,
/// `(C/Ω_b)·dv_c/dt = ī − jC·v_c`.
pub fn dynamic_branch_derivatives(
    branch: &DynamicBranch,
    state: &RlcState,
    v_from: Complex64,
    v_to: Complex64,
    omega_base: f64,
) -> RlcState {
    let di = (v_from - v_to - Complex64::new(branch.r, branch.l) * state.i - state.v_c) * (omega_base / branch.l);
    let dv = (state.i - Complex64::new(0.0, branch.c) * state.v_c) * (omega_base / branch.c);
    RlcState { i: di, v_c: dv }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaultLocation {
    Bus(String),
    BranchMidpoint(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    ApplyFault {
        location: FaultLocation,
        admittance: Complex64,
    },
    /// Removes every active fault.
    ClearFault,
    OpenBranch(String),
    DisconnectDevice(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Fault shunt used when an event does not give one.
pub const DEFAULT_FAULT_ADMITTANCE: Complex64 = Complex64 { re: 0.0, im: -1e4 };

/// What the caller has to do after [`Network::apply_event`].
#[derive(Debug, Clone, PartialEq)]
pub enum EventEffect {
    Topology,
    DisconnectDevice(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub dynamic: Vec<DynamicBranch>,
    pub base_mva: f64,
    pub f_nom: f64,
    /// Labels of the extra midpoint nodes, in node order after the buses.
    pub extra_nodes: Vec<String>,
    /// Active faults as (node, shunt admittance).
    pub faults: Vec<(usize, Complex64)>,
}

impl Network {
    pub fn new(base_mva: f64, f_nom: f64) -> Self {
        Self {
            buses: Vec::new(),
            branches: Vec::new(),
            dynamic: Vec::new(),
            base_mva,
            f_nom,
            extra_nodes: Vec::new(),
            faults: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.buses.len() + self.extra_nodes.len()
    }

    pub fn node_label(&self, node: usize) -> String {
        match self.buses.get(node) {
            Some(b) => b.id.clone(),
            None => self.extra_nodes[node - self.buses.len()].clone(),
        }
    }

    pub fn bus_index(&self, id: &str) -> Result<usize, NetworkError> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| NetworkError::UnknownElement(format!("bus {id}")))
    }

    pub fn add_bus(&mut self, id: &str, base_kv: f64) -> usize {
        assert!(self.extra_nodes.is_empty(), "buses must be added before midpoint nodes");
        self.buses.push(Bus {
            id: id.to_string(),
            base_kv,
            area: 1,
            shunt: ZERO,
        });
        self.buses.len() - 1
    }

    pub fn add_branch(&mut self, id: &str, from: usize, to: usize, r: f64, x: f64, b: f64) -> usize {
        self.branches.push(Branch {
            id: id.to_string(),
            from,
            to,
            r,
            x,
            b,
            tap: 1.0,
            in_service: true,
            midpoint: None,
        });
        self.branches.len() - 1
    }

    /// Splits a static branch into two halves around a new node.
    pub fn ensure_midpoint(&mut self, branch_id: &str) -> Result<usize, NetworkError> {
        let k = self
            .branches
            .iter()
            .position(|b| b.id == branch_id)
            .ok_or_else(|| NetworkError::UnknownElement(format!("static branch {branch_id}")))?;
        if let Some(node) = self.branches[k].midpoint {
            return Ok(node);
        }
        if self.branches[k].tap != 1.0 {
            return Err(NetworkError::ParamDomain(format!(
                "branch {branch_id} has an off-nominal tap and cannot be split"
            )));
        }
        let node = self.n_nodes();
        self.extra_nodes.push(format!("{branch_id}@mid"));
        self.branches[k].midpoint = Some(node);
        Ok(node)
    }

    /// Creates the midpoint nodes referenced by `events`.
    pub fn prepare_events(&mut self, events: &[Event]) -> Result<(), NetworkError> {
        for e in events {
            if let EventKind::ApplyFault {
                location: FaultLocation::BranchMidpoint(id),
                ..
            } = &e.kind
            {
                self.ensure_midpoint(id)?;
            }
        }
        Ok(())
    }

    fn fault_node(&self, location: &FaultLocation) -> Result<usize, NetworkError> {
        match location {
            FaultLocation::Bus(id) => self.bus_index(id),
            FaultLocation::BranchMidpoint(id) => {
                let b = self
                    .branches
                    .iter()
                    .find(|b| &b.id == id)
                    .ok_or_else(|| NetworkError::UnknownElement(format!("static branch {id}")))?;
                b.midpoint
                    .ok_or_else(|| NetworkError::UnknownElement(format!("midpoint node of branch {id}")))
            }
        }
    }

    pub fn apply_event(&mut self, kind: &EventKind) -> Result<EventEffect, NetworkError> {
        match kind {
            EventKind::ApplyFault { location, admittance } => {
                let node = self.fault_node(location)?;
                self.faults.push((node, *admittance));
            }
            EventKind::ClearFault => {
                if self.faults.is_empty() {
                    return Err(NetworkError::UnknownElement("no active fault to clear".into()));
                }
                self.faults.clear();
            }
            EventKind::OpenBranch(id) => {
                if let Some(b) = self.branches.iter_mut().find(|b| &b.id == id) {
                    b.in_service = false;
                } else if let Some(b) = self.dynamic.iter_mut().find(|b| &b.id == id) {
                    b.in_service = false;
                } else {
                    return Err(NetworkError::UnknownElement(format!("branch {id}")));
                }
            }
            EventKind::DisconnectDevice(id) => return Ok(EventEffect::DisconnectDevice(id.clone())),
        }
        Ok(EventEffect::Topology)
    }

    /// Bus admittance matrix of the in-service static elements and faults.
    /// Dynamic branches are excluded; pass `dynamic_as_static` to include
    /// them at their frame-frequency impedance (power flow).
    pub fn assemble_y(&self, dynamic_as_static: bool) -> DMatrix<Complex64> {
        let n = self.n_nodes();
        let mut y = DMatrix::from_element(n, n, ZERO);
        let stamp = |y: &mut DMatrix<Complex64>, f: usize, t: usize, ys: Complex64, bsh: f64, tap: f64| {
            let half = Complex64::new(0.0, bsh / 2.0);
            y[(f, f)] += (ys + half) / (tap * tap);
            y[(t, t)] += ys + half;
            y[(f, t)] -= ys / tap;
            y[(t, f)] -= ys / tap;
        };
        for b in self.branches.iter().filter(|b| b.in_service) {
            let ys = b.series_admittance();
            match b.midpoint {
                None => stamp(&mut y, b.from, b.to, ys, b.b, b.tap),
                Some(m) => {
                    stamp(&mut y, b.from, m, 2.0 * ys, b.b / 2.0, 1.0);
                    stamp(&mut y, m, b.to, 2.0 * ys, b.b / 2.0, 1.0);
                }
            }
        }
        if dynamic_as_static {
            for d in self.dynamic.iter().filter(|d| d.in_service) {
                stamp(&mut y, d.from, d.to, d.steady_impedance().inv(), 0.0, 1.0);
            }
        }
        for (k, bus) in self.buses.iter().enumerate() {
            y[(k, k)] += bus.shunt;
        }
        for (node, yf) in &self.faults {
            y[(*node, *node)] += yf;
        }
        y
    }

    /// Nodes with no in-service connection and no shunt; their voltage is
    /// pinned to zero.
    pub fn dead_nodes(&self, y: &DMatrix<Complex64>, attached: &[bool]) -> Vec<bool> {
        let mut live = attached.to_vec();
        for d in self.dynamic.iter().filter(|d| d.in_service) {
            live[d.from] = true;
            live[d.to] = true;
        }
        (0..self.n_nodes())
            .map(|k| !live[k] && (0..self.n_nodes()).all(|j| y[(k, j)].norm() == 0.0))
            .collect()
    }
}

/// Real 2n×2n form of `v ↦ −Y·v` over `[Re v, Im v]`.
fn real_negative_y(y: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = y.nrows();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let (g, b) = (y[(r, c)].re, y[(r, c)].im);
            j[(r, c)] = -g;
            j[(r, n + c)] = b;
            j[(n + r, c)] = -b;
            j[(n + r, n + c)] = -g;
        }
    }
    j
}

/// KCL residual `Σ injections − Y·v` (pinned nodes: `v` itself).
pub fn kcl_residual(
    y: &DMatrix<Complex64>,
    v: &[Complex64],
    injections: &[Complex64],
    pinned: &[bool],
) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            if pinned[k] {
                v[k]
            } else {
                injections[k] - (0..n).map(|c| y[(k, c)] * v[c]).sum::<Complex64>()
            }
        })
        .collect()
}

/// Solves `Σ device currents(v) = Y·v` for the node voltages, holding the
/// device states fixed. `injections(v, out)` must fill `out[k]` with the
/// total current injected at node `k` and may depend only on `v[k]`; the
/// local 2×2 Jacobian blocks are then obtained with two evaluations, and
/// any affine device enters exactly as its Norton admittance.
pub fn interface_solve<F>(
    y: &DMatrix<Complex64>,
    pinned: &[bool],
    v0: &[Complex64],
    mut injections: F,
    tol: f64,
    max_iter: usize,
    labels: &dyn Fn(usize) -> String,
) -> Result<Vec<Complex64>, NetworkError>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = v0.len();
    let mut v: Vec<Complex64> = v0.iter().zip(pinned).map(|(v, p)| if *p { ZERO } else { *v }).collect();
    let base_j = real_negative_y(y);
    let mut inj = vec![ZERO; n];
    let mut inj_p = vec![ZERO; n];
    let h = 1e-7;
    let mut last = (f64::INFINITY, 0);
    for _ in 0..=max_iter {
        injections(&v, &mut inj);
        let res = kcl_residual(y, &v, &inj, pinned);
        let (worst, node) = res
            .iter()
            .enumerate()
            .map(|(k, r)| (r.re.abs().max(r.im.abs()), k))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
        last = (worst, node);
        if worst <= tol {
            return Ok(v);
        }
        let mut jac = base_j.clone();
        for part in 0..2 {
            let dv = if part == 0 {
                Complex64::new(h, 0.0)
            } else {
                Complex64::new(0.0, h)
            };
            let vp: Vec<Complex64> = v.iter().map(|x| x + dv).collect();
            injections(&vp, &mut inj_p);
            for k in 0..n {
                let d = (inj_p[k] - inj[k]) / h;
                jac[(k, part * n + k)] += d.re;
                jac[(n + k, part * n + k)] += d.im;
            }
        }
        for k in (0..n).filter(|k| pinned[*k]) {
            for c in 0..2 * n {
                jac[(k, c)] = 0.0;
                jac[(n + k, c)] = 0.0;
            }
            jac[(k, k)] = 1.0;
            jac[(n + k, n + k)] = 1.0;
        }
        let rhs = DVector::from_iterator(2 * n, res.iter().map(|r| -r.re).chain(res.iter().map(|r| -r.im)));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| NetworkError::SingularY(labels(node)))?;
        for k in 0..n {
            v[k] += Complex64::new(step[k], step[n + k]);
        }
        if !v.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            break;
        }
    }
    Err(NetworkError::NewtonDivergence {
        residual: last.0,
        node: labels(last.1),
    })
}

/// Direct solve with every device folded in as a Norton equivalent
/// `i = i0 + y·v + y_conj·conj(v)` (summed per node).
pub fn solve_norton(
    y: &DMatrix<Complex64>,
    pinned: &[bool],
    nortons: &[crate::devices::Norton],
) -> Result<Vec<Complex64>, NetworkError> {
    let n = y.nrows();
    let mut jac = real_negative_y(y);
    let mut rhs = DVector::zeros(2 * n);
    for k in 0..n {
        if pinned[k] {
            for c in 0..2 * n {
                jac[(k, c)] = 0.0;
                jac[(n + k, c)] = 0.0;
            }
            jac[(k, k)] = 1.0;
            jac[(n + k, n + k)] = 1.0;
            continue;
        }
        let nt = &nortons[k];
        // y·v + y_conj·conj(v) in real form
        let (a, b) = (nt.y + nt.y_conj, nt.y - nt.y_conj);
        jac[(k, k)] += a.re;
        jac[(n + k, k)] += a.im;
        jac[(k, n + k)] -= b.im;
        jac[(n + k, n + k)] += b.re;
        rhs[k] = -nt.i0.re;
        rhs[n + k] = -nt.i0.im;
    }
    let sol = jac
        .lu()
        .solve(&rhs)
        .ok_or_else(|| NetworkError::SingularY("network".into()))?;
    Ok((0..n).map(|k| Complex64::new(sol[k], sol[n + k])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PfBusType {
    Slack { v: f64, angle: f64 },
    Pv { v: f64 },
    Pq,
}

/// Power-flow description of one node. `fixed` is the sum of constant
/// injections (system base); voltage-dependent injections come from the
/// `model` callback passed to [`solve_power_flow`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfBus {
    pub kind: PfBusType,
    pub fixed: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub v: Vec<Complex64>,
    /// Net injection `v·conj(Y·v)` per node.
    pub s: Vec<Complex64>,
    pub iterations: usize,
}

pub const PF_MAX_ITER: usize = 50;

/// Newton-Raphson on the polar mismatch equations from a flat start.
/// `model(node, v)` returns the voltage-dependent injection at a node.
/// Without a slack bus every angle is unknown; the reference then comes from
/// the model injections (e.g. fixed-EMF sources).
pub fn solve_power_flow(
    y: &DMatrix<Complex64>,
    buses: &[PfBus],
    model: &dyn Fn(usize, Complex64) -> Result<Complex64, String>,
    tol: f64,
    labels: &dyn Fn(usize) -> String,
) -> Result<PfSolution, NetworkError> {
    let n = buses.len();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    for (k, b) in buses.iter().enumerate() {
        match b.kind {
            PfBusType::Slack { v, angle } => {
                vm[k] = v;
                va[k] = angle;
            }
            PfBusType::Pv { v } => vm[k] = v,
            PfBusType::Pq => {}
        }
    }
    let ang_idx: Vec<usize> = (0..n)
        .filter(|k| !matches!(buses[*k].kind, PfBusType::Slack { .. }))
        .collect();
    let mag_idx: Vec<usize> = (0..n).filter(|k| matches!(buses[*k].kind, PfBusType::Pq)).collect();
    let m = ang_idx.len() + mag_idx.len();

    let dev = |k: usize, v: Complex64| -> Result<Complex64, NetworkError> {
        model(k, v)
            .map(|s| s + buses[k].fixed)
            .map_err(|message| NetworkError::Device {
                node: labels(k),
                message,
            })
    };
    let mismatch = |vm: &[f64], va: &[f64]| -> Result<(Vec<Complex64>, Vec<Complex64>), NetworkError> {
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let iy: Complex64 = (0..n).map(|c| y[(k, c)] * v[c]).sum();
            out.push(dev(k, v[k])? - v[k] * iy.conj());
        }
        Ok((out, v))
    };
    let h = 1e-7;
    for iter in 0..=PF_MAX_ITER {
        let (mis, v) = mismatch(&vm, &va)?;
        let f: Vec<f64> = ang_idx
            .iter()
            .map(|k| mis[*k].re)
            .chain(mag_idx.iter().map(|k| mis[*k].im))
            .collect();
        let worst = f.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if worst <= tol {
            let s = (0..n)
                .map(|k| v[k] * (0..n).map(|c| y[(k, c)] * v[c]).sum::<Complex64>().conj())
                .collect();
            return Ok(PfSolution { v, s, iterations: iter });
        }
        if iter == PF_MAX_ITER || !worst.is_finite() {
            return Err(NetworkError::PfDivergence {
                iterations: iter,
                mismatch: worst,
            });
        }
        // Jacobian of the mismatch: analytic network part, local finite
        // differences for the device part.
        let mut jac = DMatrix::zeros(m, m);
        let iy: Vec<Complex64> = (0..n).map(|k| (0..n).map(|c| y[(k, c)] * v[c]).sum()).collect();
        // dS_calc/dθ_c and dS_calc/d|V|_c (standard complex forms)
        let ds_dth = |r: usize, c: usize| -> Complex64 {
            let j = Complex64::i();
            if r == c {
                j * v[r] * (iy[r].conj() - (y[(r, r)] * v[r]).conj())
            } else {
                -j * v[r] * (y[(r, c)] * v[c]).conj()
            }
        };
        let ds_dvm = |r: usize, c: usize| -> Complex64 {
            let u = v[c] / vm[c];
            if r == c {
                u * iy[r].conj() + v[r] * (y[(r, r)] * u).conj()
            } else {
                v[r] * (y[(r, c)] * u).conj()
            }
        };
        let mut dev_th = vec![ZERO; n];
        let mut dev_vm = vec![ZERO; n];
        for k in 0..n {
            let s0 = dev(k, v[k])?;
            dev_th[k] = (dev(k, Complex64::from_polar(vm[k], va[k] + h))? - s0) / h;
            dev_vm[k] = (dev(k, Complex64::from_polar(vm[k] + h, va[k]))? - s0) / h;
        }
        let rows: Vec<(usize, bool)> = ang_idx
            .iter()
            .map(|k| (*k, true))
            .chain(mag_idx.iter().map(|k| (*k, false)))
            .collect();
        for (ri, (r, is_p)) in rows.iter().enumerate() {
            let pick = |z: Complex64| if *is_p { z.re } else { z.im };
            for (ci, (c, is_angle)) in rows.iter().enumerate() {
                let mut d = if *is_angle { -ds_dth(*r, *c) } else { -ds_dvm(*r, *c) };
                if r == c {
                    d += if *is_angle { dev_th[*r] } else { dev_vm[*r] };
                }
                jac[(ri, ci)] = pick(d);
            }
        }
        let rhs = DVector::from_iterator(m, f.iter().map(|x| -x));
        let step = jac.lu().solve(&rhs).ok_or(NetworkError::PfDivergence {
            iterations: iter,
            mismatch: worst,
        })?;
        for (i, k) in ang_idx.iter().enumerate() {
            va[*k] += step[i];
        }
        for (i, k) in mag_idx.iter().enumerate() {
            vm[*k] += step[ang_idx.len() + i];
        }
    }
    unreachable!()
}
