//! Runs a built-in scenario and prints per-device verdicts and the
//! analytic-versus-numeric cross-check.
//!
//! `cargo run --release --example builtin_report -- smib`

use synchrolens::scenarios::build_builtin;
use synchrolens::sim::run_simulation;
use synchrolens::synccheck::analyze;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "smib".into());
    let scenario = build_builtin(&name)?;
    let system = scenario.build_system()?;
    let started = std::time::Instant::now();
    let result = run_simulation(&system, &scenario.sim_config())?;
    let elapsed = started.elapsed();
    let analysis = analyze(&result, &scenario.sync_settings())?;
    println!(
        "{name}: {} samples in {:.2?}, {} Newton iterations, max angle spread {:.1} deg",
        result.times.len(),
        elapsed,
        result.stats.newton_iterations,
        analysis.max_angle_spread.to_degrees()
    );
    for d in &analysis.devices {
        let v = &d.verdict;
        let bls = v
            .bls
            .as_ref()
            .map_or("-".to_string(), |b| format!("{} (sup {:.3e})", b.pass, b.sup_norm));
        let als = v.als.as_ref().map_or("-".to_string(), |a| {
            format!("{} (tail {:.3e}, slope {:+.3e})", a.pass, a.tail_max, a.slope)
        });
        let cross = d.crosscheck.as_ref().map_or("-".to_string(), |c| {
            format!("rms {:.2e} max {:.2e} at {:.3} s", c.rms, c.max, c.worst_time)
        });
        println!(
            "  {:<10} {:<16} BLS {bls:<28} ALS {als:<44} cross {cross}",
            d.id,
            v.kind.as_str()
        );
        for n in &v.notes {
            println!("             {n}");
        }
    }
    Ok(())
}
