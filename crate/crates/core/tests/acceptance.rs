//! Acceptance criteria 1 to 10. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (bypassing the test harness capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rayon::prelude::*;
use synchrolens::cf::{cf_from_samples, omega_base, rotate_frame, ComplexFrequency, Trajectory};
use synchrolens::devices::synchronous::{
    sm2_chi, sm4_current, sm4_xi_terms, sm6_current, sm6_xi_terms, Sm2Params, Sm2State, Sm4Params, Sm4State, Sm6Params,
    Sm6State, SmInputs,
};
use synchrolens::scenarios::{
    build_builtin, builtin_names, cct_sweep, circuit_dc_waveforms, load_scenario, CircuitDcParams, DeviceSpec, Scenario,
};
use synchrolens::sim::{run_simulation, SimResult};
use synchrolens::synccheck::{analyze, numeric_chi, numeric_eta, verdict, ChiSeries, SyncAnalysis};

fn report(criterion: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {status}  {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

struct Run {
    scenario: Scenario,
    result: SimResult,
    analysis: SyncAnalysis,
    elapsed: Duration,
}

fn simulate(scenario: Scenario) -> Run {
    let start = Instant::now();
    let system = scenario.build_system().expect("build");
    let result = run_simulation(&system, &scenario.sim_config()).expect("simulate");
    let analysis = analyze(&result, &scenario.sync_settings()).expect("analyze");
    Run {
        scenario,
        result,
        analysis,
        elapsed: start.elapsed(),
    }
}

/// Built-in runs are shared between criteria.
fn builtin(name: &str) -> &'static Run {
    static RUNS: OnceLock<Vec<OnceLock<Run>>> = OnceLock::new();
    let names = builtin_names();
    let slots = RUNS.get_or_init(|| names.iter().map(|_| OnceLock::new()).collect());
    let k = names.iter().position(|n| *n == name).expect("known built-in");
    slots[k].get_or_init(|| simulate(build_builtin(name).unwrap()))
}

fn values_after(chi: &ChiSeries, t0: f64, t1: f64) -> Vec<(f64, ComplexFrequency)> {
    (0..chi.len())
        .filter_map(|k| {
            let t = chi.time(k);
            if t >= t0 && t <= t1 {
                chi.values[k].map(|c| (t, c))
            } else {
                None
            }
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[xs.len() / 2]
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_01_master_oracle() {
    let mut worst = (0.0_f64, 0.0_f64, String::new());
    let mut ok = true;
    let mut total = Duration::ZERO;
    for name in builtin_names() {
        let run = builtin(name);
        total += run.elapsed;
        for d in &run.analysis.devices {
            let Some(c) = &d.crosscheck else { continue };
            assert!(c.samples > 0, "{name}/{}: nothing compared", d.id);
            if c.rms > 1e-3 || c.max > 1e-2 {
                ok = false;
            }
            if c.rms > worst.0 {
                worst = (c.rms, c.max, format!("{name}/{}", d.id));
            }
        }
    }
    let fast = total < Duration::from_secs(60);
    report(
        1,
        ok && fast,
        &format!(
            "worst RMS {:.2e} (max {:.2e}) at {}; all built-ins in {:.1} s",
            worst.0,
            worst.1,
            worst.2,
            total.as_secs_f64()
        ),
    );
}

const THREE_LOADS: &str = r#"
[system]
name = "three_loads"

[bus.gen]
[bus.load]
[bus.inf]

[branch.a]
from = "gen"
to = "load"
x = 0.2

[branch.b]
from = "load"
to = "inf"
x = 0.3

[device.g1]
kind = "sm2"
bus = "gen"
xd1 = 0.3
h = 3.0
d = 2.0
pf = { type = "pv", p = 1.2, v = 1.0 }

[device.grid]
kind = "voltage_source"
bus = "inf"
z = [0.0, 0.01]
pf = { type = "slack", v = 1.0 }

[device.z]
kind = "zip"
bus = "load"
p0 = 0.4
q0 = 0.1

[device.i]
kind = "zip"
bus = "load"
p0 = 0.3
q0 = 0.05
k_p = [0.0, 1.0, 0.0]
k_q = [0.0, 1.0, 0.0]

[device.p]
kind = "zip"
bus = "load"
p0 = 0.3
q0 = 0.05
k_p = [0.0, 0.0, 1.0]
k_q = [0.0, 0.0, 1.0]

[event.1]
kind = "apply_fault"
time = 0.5
bus = "load"
admittance = [0.0, -3.0]

[event.2]
kind = "clear_fault"
time = 0.6

[sim]
dt = 1e-3
t_end = 6.0
"#;

#[test]
fn criterion_02_zip_closed_forms() {
    let run = simulate(load_scenario(THREE_LOADS).unwrap());
    let r = &run.result;
    let eta = numeric_eta(r, "z", 2).unwrap();
    let chi = |id: &str| numeric_chi(r, id, 2).unwrap();
    let (z, i, p) = (chi("z"), chi("i"), chi("p"));
    let (mut ez, mut ei, mut ep, mut rho_max) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..eta.len() {
        let Some(e) = eta.values[k] else { continue };
        rho_max = rho_max.max(e.rho.abs());
        if let Some(c) = z.values[k] {
            ez = ez.max(c.norm());
        }
        if let Some(c) = i.values[k] {
            ei = ei.max((c - ComplexFrequency::new(-e.rho, 0.0)).norm());
        }
        if let Some(c) = p.values[k] {
            ep = ep.max((c - ComplexFrequency::new(-2.0 * e.rho, 0.0)).norm());
        }
    }
    // the run must actually move the bus voltage magnitude
    let excited = rho_max > 1e-3;
    report(
        2,
        excited && ez <= 1e-6 && ei <= 1e-4 && ep <= 1e-4,
        &format!("max |rho| {rho_max:.2e}; Z {ez:.1e}, I vs -rho {ei:.1e}, P vs -2rho {ep:.1e}"),
    );
}

/// Pinned SMIB pass/fail boundary for the built-in parameter set.
const SMIB_BOUNDARY: (f64, f64) = (1.12, 1.13);

#[test]
fn criterion_03_smib_dichotomy() {
    let base = build_builtin("smib").unwrap();
    let table = cct_sweep(&base, 1.05, 1.25, 0.01).unwrap();
    let rows: Vec<(bool, f64, f64)> = table
        .rows
        .par_iter()
        .map(|row| {
            let run = simulate(base.with_clear_time(row.t_cl).unwrap());
            let g = run.analysis.device("g1").unwrap();
            let als = g.verdict.als.as_ref().unwrap();
            let im_max = values_after(&g.numeric, row.t_cl, row.t_cl + 5.0)
                .iter()
                .map(|(_, c)| c.omega.abs())
                .fold(0.0, f64::max);
            (als.pass, als.tail_max, im_max)
        })
        .collect();
    let mut ok = table.monotone && table.rows.iter().all(|r| r.error.is_none());
    let boundary = table.boundary;
    let shown = boundary.map_or("none".to_string(), |(a, b)| format!("{a:.2}/{b:.2}"));
    ok &= boundary.is_some_and(|(a, b)| (a - SMIB_BOUNDARY.0).abs() < 1e-9 && (b - SMIB_BOUNDARY.1).abs() < 1e-9);
    let mut worst_tail = 0.0_f64;
    let mut least_im = f64::INFINITY;
    for (row, (als, tail, im)) in table.rows.iter().zip(&rows) {
        ok &= row.als_pass == Some(*als);
        if *als {
            worst_tail = worst_tail.max(*tail);
            ok &= *tail <= 1e-4;
        } else {
            least_im = least_im.min(*im);
            ok &= *im > 1.0;
        }
    }
    report(
        3,
        ok,
        &format!(
            "boundary {shown} s (pinned {:.2}/{:.2}), monotone {}; worst passing tail {worst_tail:.1e}, smallest failing max |Im chi| in 5 s {least_im:.2}",
            SMIB_BOUNDARY.0,
            SMIB_BOUNDARY.1,
            table.monotone
        ),
    );
}

#[test]
fn criterion_04_kundur_structure() {
    let run = builtin("kundur");
    let a = &run.analysis;
    let machines: Vec<(String, bool)> = ["g1", "g2", "g3", "g4"]
        .iter()
        .map(|id| {
            let pass = a.device(id).unwrap().verdict.als.as_ref().is_some_and(|v| v.pass);
            (id.to_string(), pass)
        })
        .collect();
    let mut loads_ok = true;
    let mut load_var = 0.0_f64;
    for (id, spec) in &run.scenario.device {
        if let DeviceSpec::Zip(z) = spec {
            if z.k_p == [1.0, 0.0, 0.0] && z.k_q == [1.0, 0.0, 0.0] {
                let d = a.device(id).unwrap();
                loads_ok &= d.verdict.als.as_ref().is_some_and(|v| v.pass);
                let var = d.numeric.norms().into_iter().flatten().fold(0.0, f64::max);
                load_var = load_var.max(var);
            }
        }
    }
    loads_ok &= load_var <= 1e-6;
    let machines_ok = machines.iter().all(|m| m.1);
    report(
        4,
        a.unstable && machines_ok && loads_ok,
        &format!(
            "max angle spread {:.0} deg (unstable {}), machine ALS {:?}, Z-load ALS {} with max |chi| {:.1e}",
            a.max_angle_spread.to_degrees(),
            a.unstable,
            machines,
            loads_ok,
            load_var
        ),
    );
}

fn with_motor_torque(tau: f64) -> Scenario {
    let mut s = build_builtin("motor_condenser").unwrap();
    match s.device.get_mut("motor") {
        Some(DeviceSpec::InductionMotor(m)) => m.tau_m = tau,
        _ => panic!("motor_condenser has an induction motor"),
    }
    s
}

#[test]
fn criterion_05_motor_stall() {
    let light = builtin("motor_condenser");
    assert_eq!(
        match &light.scenario.device["motor"] {
            DeviceSpec::InductionMotor(m) => m.tau_m,
            _ => unreachable!(),
        },
        0.9
    );
    let light_als = light.analysis.device("motor").unwrap().verdict.als.clone().unwrap();
    let heavy = simulate(with_motor_torque(1.0));
    let sigma = heavy.result.state_series("motor", "sigma").unwrap();
    // the rotor comes to rest: slip reaches 1
    let stall_time = sigma.iter().position(|s| *s >= 1.0).map(|k| heavy.result.times[k]);
    let d = heavy.analysis.device("motor").unwrap();
    let t_event = heavy.analysis.last_event;
    let pre = median(
        values_after(&d.numeric, 0.0, t_event - 0.01)
            .iter()
            .map(|(_, c)| c.rho.abs())
            .collect(),
    );
    let tail_start = d.numeric.t_end() - heavy.analysis.settings.tail_window;
    let tail = values_after(&d.numeric, tail_start, f64::INFINITY)
        .iter()
        .map(|(_, c)| c.rho.abs())
        .fold(0.0, f64::max);
    let heavy_als = d.verdict.als.clone().unwrap();
    let stalled = stall_time.is_some();
    report(
        5,
        light_als.pass && stalled && tail > 10.0 * pre && !heavy_als.pass,
        &format!(
            "tau 0.9: ALS {} (tail {:.1e}); tau 1.0: slip reaches 1 at {stall_time:?} s, Re chi tail {tail:.2e} vs pre-event median {pre:.1e}, ALS {}",
            light_als.pass, light_als.tail_max, heavy_als.pass
        ),
    );
}

#[test]
fn criterion_06_circuit_dc() {
    let run = builtin("circuit_dc");
    let r = &run.result;
    let k = r.device_index("inj").unwrap();
    let v = r.device_voltage(k);
    let i = &r.devices[k].current;
    let bounded = r
        .bus_voltages
        .iter()
        .chain(r.devices.iter().map(|d| &d.current))
        .all(|tr| tr.samples.iter().all(|s| s.is_finite() && s.norm() < 10.0));

    // closed-form oracle of the same circuit
    let params = CircuitDcParams::from_scenario(&run.scenario).unwrap();
    let (v_ref, i_ref) = circuit_dc_waveforms(&params, v.dt, r.times.last().copied().unwrap()).unwrap();
    let oracle = v
        .samples
        .iter()
        .zip(&v_ref.samples)
        .chain(i.samples.iter().zip(&i_ref.samples))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let per_window = (0.1 / v.dt).round() as usize;
    let p: Vec<f64> = v
        .samples
        .iter()
        .zip(&i.samples)
        .map(|(v, i)| (v * i.conj()).re)
        .collect();
    let worst_avg = p
        .windows(per_window)
        .step_by(per_window / 10)
        .map(|w| (w.iter().sum::<f64>() / w.len() as f64).abs())
        .fold(0.0, f64::max);

    let d = run.analysis.device("inj").unwrap();
    let persistent = values_after(&d.numeric, 0.1, f64::INFINITY)
        .iter()
        .map(|(_, c)| c.norm())
        .fold(f64::INFINITY, f64::min);
    let bls = d.verdict.bls.as_ref().unwrap();
    let als = d.verdict.als.as_ref().unwrap();
    report(
        6,
        bounded && oracle <= 1e-9 && worst_avg <= 1e-3 && persistent >= 0.9 && !bls.pass && !als.pass && bls.epsilon == 1e-4,
        &format!(
            "bounded {bounded}, oracle error {oracle:.1e}, worst 0.1 s mean power {worst_avg:.1e}, min ||chi|| {persistent:.3}, BLS {} ALS {}",
            bls.pass, als.pass
        ),
    );
}

#[test]
fn criterion_07_sustained_oscillation() {
    let run = builtin("sustained_oscillation");
    let r = &run.result;
    let finite = r
        .devices
        .iter()
        .all(|d| d.states.iter().flatten().all(|x| x.is_finite()));
    let speed_dev = ["g1", "g2"]
        .iter()
        .flat_map(|id| r.state_series(id, "omega_r").unwrap())
        .map(|w| (w - 1.0).abs())
        .fold(0.0, f64::max);
    let bounded = finite && speed_dev < 0.05 && !run.analysis.unstable && r.times.last().copied() == Some(20.0);
    let d = run.analysis.device("g2").unwrap();
    let bls = d.verdict.bls.as_ref().unwrap();
    let als = d.verdict.als.as_ref().unwrap();
    report(
        7,
        bounded && !bls.pass && bls.epsilon == 1e-4 && als.slope.abs() <= 1e-3,
        &format!(
            "bounded {bounded} (max speed deviation {speed_dev:.1e}, spread {:.0} deg), BLS sup {:.2e}, envelope slope {:.1e}/s",
            run.analysis.max_angle_spread.to_degrees(),
            bls.sup_norm,
            als.slope
        ),
    );
}

#[test]
fn criterion_08_gfl_resonance() {
    let run = builtin("gfl_seriescomp");
    let d = run.analysis.device("ibr").unwrap();
    let t0 = run.analysis.last_event;
    let pts = values_after(&d.numeric, t0 + 0.01, t0 + 1.0);
    let mean = pts.iter().map(|p| p.1.rho).sum::<f64>() / pts.len() as f64;
    let crossings: Vec<f64> = pts
        .windows(2)
        .filter(|w| (w[0].1.rho - mean) * (w[1].1.rho - mean) < 0.0)
        .map(|w| w[0].0)
        .collect();
    let freq = (crossings.len() - 1) as f64 / 2.0 / (crossings.last().unwrap() - crossings[0]);
    let period = 1.0 / freq;
    let mut envelope = Vec::new();
    let mut start = pts[0].0;
    while start + period <= pts.last().unwrap().0 {
        let peak = pts
            .iter()
            .filter(|p| p.0 >= start && p.0 < start + period)
            .map(|p| p.1.norm())
            .fold(0.0, f64::max);
        envelope.push((start, peak.ln()));
        start += period;
    }
    let lambda = -least_squares_slope(&envelope);
    let ratio = (-lambda * period).exp();
    let als = d.verdict.als.as_ref().unwrap();
    report(
        8,
        ratio > 0.9 && ratio < 1.0 && als.pass && als.tail_max <= 1e-4,
        &format!(
            "oscillation {freq:.1} Hz, decay ratio per cycle {ratio:.3}; ALS {} with tail {:.1e}",
            als.pass, als.tail_max
        ),
    );
}

fn smib_run(dt: f64) -> SimResult {
    let mut s = build_builtin("smib").unwrap();
    s.sim.dt = dt;
    s.sim.t_end = 3.0;
    run_simulation(&s.build_system().unwrap(), &s.sim_config()).unwrap()
}

fn test_signal(t: f64) -> Complex64 {
    Complex64::from_polar(
        1.0 + 0.3 * (2.0 * t).sin(),
        1.1 * omega_base(60.0) * t + 0.5 * (3.0 * t).sin(),
    )
}

fn test_signal_cf(t: f64) -> ComplexFrequency {
    let ob = omega_base(60.0);
    let a = 1.0 + 0.3 * (2.0 * t).sin();
    ComplexFrequency::new(0.6 * (2.0 * t).cos() / a / ob, 1.1 + 1.5 * (3.0 * t).cos() / ob)
}

fn cf_error(dt: f64) -> f64 {
    let n = (2.0 / dt).round() as usize + 1;
    // stationary frame: the samples carry the full rotation
    let mut tr = Trajectory::synchronous(0.0, dt, (0..n).map(|k| test_signal(k as f64 * dt)).collect());
    tr.frame_speed = 0.0;
    cf_from_samples(&tr)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(k, c)| (*c - test_signal_cf(k as f64 * dt)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_09_numerics() {
    // self-convergence of the integrator on the rotor angle
    let runs: Vec<SimResult> = [4e-3, 2e-3, 1e-3].par_iter().map(|dt| smib_run(*dt)).collect();
    let deltas: Vec<Vec<f64>> = runs.iter().map(|r| r.state_series("g1", "delta").unwrap()).collect();
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .enumerate()
            .map(|(k, x)| (x - b[2 * k]).abs())
            .fold(0.0, f64::max)
    };
    let e1 = diff(&deltas[0], &deltas[1]);
    let e2 = diff(&deltas[1], &deltas[2]);
    let order = (e1 / e2).log2();

    let reduction = cf_error(2e-3) / cf_error(1e-3);

    // frame invariance: re-express every trajectory in a frame 0.37 pu faster
    let run = builtin("smib");
    let mut rotated = run.result.clone();
    for tr in &mut rotated.bus_voltages {
        *tr = rotate_frame(tr, 0.37);
    }
    for d in &mut rotated.devices {
        d.current = rotate_frame(&d.current, 0.37);
    }
    let settings = run.analysis.settings;
    let mut frame_err = 0.0_f64;
    let mut verdicts_equal = true;
    for d in &run.analysis.devices {
        let chi = numeric_chi(&rotated, &d.id, settings.mask_width).unwrap();
        for (a, b) in chi.values.iter().zip(&d.numeric.values) {
            match (a, b) {
                (Some(a), Some(b)) => frame_err = frame_err.max((*a - *b).norm()),
                (None, None) => {}
                _ => verdicts_equal = false,
            }
        }
        let v = verdict(&d.id, d.verdict.kind, &chi, run.analysis.last_event, &settings);
        let (a, b) = (v.als.unwrap(), d.verdict.als.clone().unwrap());
        verdicts_equal &= a.pass == b.pass && (a.tail_max - b.tail_max).abs() <= 1e-9;
        let (a, b) = (v.bls.unwrap(), d.verdict.bls.clone().unwrap());
        verdicts_equal &= a.pass == b.pass && (a.sup_norm - b.sup_norm).abs() <= 1e-9;
    }
    report(
        9,
        order >= 1.8 && reduction >= 3.5 && frame_err <= 1e-9 && verdicts_equal,
        &format!(
            "integrator order {order:.2}, cf error reduction {reduction:.2}x, frame-change chi difference {frame_err:.1e}, verdicts unchanged {verdicts_equal}"
        ),
    );
}

fn close(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm()
}

#[test]
fn criterion_10_model_reduction() {
    let ob = omega_base(60.0);
    let strategy = (
        (
            0.0..0.01_f64,
            1.2..2.0_f64,
            0.2..0.4_f64,
            0.3..0.6_f64,
            0.5..5.0_f64,
            0.0..1.0_f64,
        ),
        (0.1..0.15_f64, 2.0..10.0_f64, 0.1..1.0_f64, 2.0..14.0_f64, 0.0..5.0_f64),
        (
            -3.0..3.0_f64,
            0.95..1.05_f64,
            -0.5..0.5_f64,
            0.6..1.3_f64,
            -1.0..1.0_f64,
            -1.0..1.0_f64,
        ),
        (0.8..1.1_f64, -3.0..3.0_f64, 0.0..1.0_f64, 1.0..2.5_f64),
        (-0.05..0.05_f64, 0.95..1.05_f64),
    );
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let worst = std::cell::Cell::new(0.0_f64);
    let outcome = runner.run(
        &strategy,
        |(
            (r_s, xd, xd1, dq, td0, dq1),
            (xl, tq, tq0, m, d),
            (delta, omega_r, ed1, eq1, psi_d2, psi_q2),
            (vm, va, tau_m, v_f),
            (rho, omega),
        )| {
            let p4 = Sm4Params {
                r_s,
                xd,
                xq: xd - 0.1 * dq1,
                xd1,
                xq1: xd1 + dq,
                td0_1: td0 + tq,
                tq0_1: tq0,
                m,
                d,
                omega_base: ob,
            };
            let p6 = Sm6Params::degenerate_from(&p4, xl);
            let x4 = Sm4State {
                delta,
                omega_r,
                ed1,
                eq1,
            };
            let x6 = Sm6State {
                delta,
                omega_r,
                psi_d2,
                psi_q2,
                ed1,
                eq1,
            };
            let u = SmInputs { tau_m, v_f };
            let v = Complex64::from_polar(vm, va);
            let eta = ComplexFrequency::new(rho, omega);
            let i = sm4_current(&x4, &p4, v);
            prop_assume!(i.norm() >= 0.1);
            let a = sm4_xi_terms(&x4, &p4, &u, v, i).unwrap();
            let b = sm6_xi_terms(&x6, &p6, &u, v, sm6_current(&x6, &p6, v)).unwrap();
            let e46 = close(a.xi_a, b.xi_a)
                .max(close(a.k_rho, b.k_rho))
                .max(close(a.k_omega, b.k_omega))
                .max(close(i, sm6_current(&x6, &p6, v)));

            // classical limit of the two-axis model
            let p2 = Sm2Params {
                xd1,
                m,
                d,
                omega_base: ob,
            };
            let pc = Sm4Params::classical(&p2);
            let xc = Sm4State {
                delta,
                omega_r,
                ed1: 0.0,
                eq1,
            };
            let ic = sm4_current(&xc, &pc, v);
            prop_assume!(ic.norm() >= 0.1);
            let chi4 = sm4_xi_terms(&xc, &pc, &u, v, ic).unwrap().chi(eta);
            let chi2 = sm2_chi(&Sm2State { delta, omega_r }, &p2, v * ic.conj(), ic.norm(), eta).unwrap();
            let e42 = close(chi4.as_complex(), chi2.as_complex());
            let e = e46.max(e42);
            worst.set(worst.get().max(e));
            prop_assert!(e <= 1e-12, "difference {e:e}");
            Ok(())
        },
    );
    report(
        10,
        outcome.is_ok(),
        &format!(
            "100 random states, worst difference {:.1e} ({:?})",
            worst.get(),
            outcome.err()
        ),
    );
}
