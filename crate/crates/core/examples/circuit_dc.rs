//! The DC-injection circuit: simulated bus voltage against the closed-form
//! superposition, and the power the current source delivers.
//!
//! `cargo run --release --example circuit_dc`

use synchrolens::scenarios::{build_builtin, circuit_dc_waveforms, CircuitDcParams};
use synchrolens::sim::run_simulation;
use synchrolens::synccheck::analyze;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = build_builtin("circuit_dc")?;
    let result = run_simulation(&scenario.build_system()?, &scenario.sim_config())?;
    let params = CircuitDcParams::from_scenario(&scenario)?;
    let (v_ref, _) = circuit_dc_waveforms(&params, result.config.dt, result.config.t_end)?;
    let k = result.device_index("inj").ok_or("no inj device")?;
    let v = result.device_voltage(k);
    let err = v
        .samples
        .iter()
        .zip(&v_ref.samples)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("max |v - v_closed_form| = {err:.2e}");

    let i = &result.devices[k].current;
    let p: f64 = v
        .samples
        .iter()
        .zip(&i.samples)
        .map(|(v, i)| (v * i.conj()).re)
        .sum::<f64>()
        / v.len() as f64;
    println!("mean active power from the DC source: {p:.2e} pu");

    let analysis = analyze(&result, &scenario.sync_settings())?;
    let d = analysis.device("inj").ok_or("no inj analysis")?;
    if let (Some(b), Some(a)) = (&d.verdict.bls, &d.verdict.als) {
        println!(
            "DC source: BLS {} (sup |chi| {:.3}), ALS {}",
            b.pass, b.sup_norm, a.pass
        );
    }
    Ok(())
}
