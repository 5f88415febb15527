//! Complex frequency of a sampled Park vector, and the effect of the
//! reference frame on it.
//!
//! `cargo run --release --example signal_cf`

use num_complex::Complex64;
use synchrolens::cf::{cf_from_samples, chi_from_cf, omega_base, rotate_frame, Trajectory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ob = omega_base(60.0);
    let dt = 1e-3;
    // magnitude decaying at 2 %/s, frequency 0.5 % above nominal
    let v = Trajectory::synchronous(
        0.0,
        dt,
        (0..1000)
            .map(|k| {
                let t = k as f64 * dt;
                Complex64::from_polar((-0.02 * t).exp(), 0.005 * ob * t)
            })
            .collect(),
    );
    let eta = cf_from_samples(&v)?;
    println!("rho = {:.6e} (expected {:.6e})", eta[500].rho, -0.02 / ob);
    println!("omega = {:.6} (expected 1.005)", eta[500].omega);

    // the same signal seen from a frame rotating 0.3 pu faster
    let moved = cf_from_samples(&rotate_frame(&v, 0.3))?;
    println!("after a frame change: omega = {:.6}", moved[500].omega);

    // a current lagging the voltage by a fixed angle has the same CF
    let i = Trajectory {
        samples: v.samples.iter().map(|s| s * Complex64::from_polar(0.8, -0.4)).collect(),
        ..v.clone()
    };
    let xi = cf_from_samples(&i)?;
    println!("chi of a constant admittance: {:?}", chi_from_cf(xi[500], eta[500]));
    Ok(())
}
