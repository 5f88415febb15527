//! Loads a scenario file, simulates it and prints the verdicts.
//!
//! `cargo run --release --example custom_scenario -- path/to/case.toml`
//!
//! Without an argument a small machine-and-load case defined inline is used.

use synchrolens::scenarios::load_scenario;
use synchrolens::sim::run_simulation;
use synchrolens::synccheck::analyze;

const INLINE: &str = r#"
[system]
name = "machine_and_load"

[bus.gen]
[bus.inf]

[branch.l1]
from = "gen"
to = "inf"
x = 0.4

[device.g1]
kind = "sm4"
bus = "gen"
pf = { type = "pv", p = 0.8, v = 1.02 }
r_s = 0.003
xd = 1.8
xq = 1.7
xd1 = 0.3
xq1 = 0.55
td0_1 = 8.0
tq0_1 = 0.4
h = 4.0
d = 2.0
avr = { kp = 20.0, ki = 20.0 }

[device.load]
kind = "zip"
bus = "gen"
p0 = 0.3
q0 = 0.1
k_p = [0.4, 0.3, 0.3]
k_q = [0.0, 0.0, 1.0]

[device.grid]
kind = "voltage_source"
bus = "inf"
z = [0.0, 0.01]
pf = { type = "slack", v = 1.0 }

[event.1]
kind = "apply_fault"
time = 0.5
bus = "inf"
admittance = [0.0, -4.0]

[event.2]
kind = "clear_fault"
time = 0.6

[sim]
dt = 1e-3
t_end = 12.0
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => INLINE.to_string(),
    };
    let scenario = load_scenario(&text)?;
    let result = run_simulation(&scenario.build_system()?, &scenario.sim_config())?;
    let analysis = analyze(&result, &scenario.sync_settings())?;
    for d in &analysis.devices {
        let v = &d.verdict;
        println!(
            "{:<6} {:<16} BLS {:<5} ALS {:<5} {}",
            d.id,
            v.kind.as_str(),
            v.bls.as_ref().is_some_and(|b| b.pass),
            v.als.as_ref().is_some_and(|a| a.pass),
            v.notes.join("; ")
        );
    }
    Ok(())
}
