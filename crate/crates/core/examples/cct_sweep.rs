//! Clearing-time sweep on a built-in scenario.
//!
//! `cargo run --release --example cct_sweep -- smib 1.05 1.25 0.01`

use synchrolens::scenarios::{build_builtin, cct_sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("smib", |s| s.as_str());
    let num = |k: usize, default: f64| args.get(k).map_or(Ok(default), |s| s.parse::<f64>());
    let (from, to, step) = (num(1, 1.05)?, num(2, 1.25)?, num(3, 0.01)?);
    let table = cct_sweep(&build_builtin(name)?, from, to, step)?;
    println!("t_cl    stable  als    max swing (deg)");
    for r in &table.rows {
        match &r.error {
            Some(e) => println!("{:.3}   run failed: {e}", r.t_cl),
            None => println!(
                "{:.3}   {:<6}  {:<5}  {:.1}",
                r.t_cl,
                r.stable.unwrap_or(false),
                r.als_pass.unwrap_or(false),
                r.max_delta_swing.unwrap_or(f64::NAN)
            ),
        }
    }
    match table.boundary {
        Some((a, b)) => println!("boundary between {a:.3} s (pass) and {b:.3} s (fail)"),
        None => println!("no single pass/fail boundary (monotone: {})", table.monotone),
    }
    Ok(())
}
