//! Closed-form χ of single devices at a given operating point, and the
//! reduction from the two-axis machine to the classical one.
//!
//! `cargo run --release --example device_chi`

use num_complex::Complex64;
use synchrolens::cf::{omega_base, ComplexFrequency};
use synchrolens::devices::synchronous::{
    sm2_chi, sm4_current, sm4_xi_terms, Sm2Params, Sm2State, Sm4Params, Sm4State, SmInputs,
};
use synchrolens::devices::{im_chi, zip_chi, ImParams, ZipParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ob = omega_base(60.0);
    // bus voltage magnitude rising at 1e-3 pu, 0.2 % fast
    let eta = ComplexFrequency::new(1e-3, 1.002);

    for (name, p) in [
        ("constant Z", ZipParams::constant_z(1.0, 0.2)),
        ("constant I", ZipParams::constant_i(1.0, 0.2)),
        ("constant P", ZipParams::constant_p(1.0, 0.2)),
    ] {
        println!("{name:<11} chi = {:?}", zip_chi(&p, eta)?);
    }

    let motor = ImParams {
        r_s: 0.02,
        x_s: 0.22,
        r_r1: 0.1,
        x_r1: 0.22,
        x_mu: 3.0,
        h_m: 0.5,
        omega_base: ob,
    };
    println!(
        "motor at slip 0.05 accelerating: chi = {:?}",
        im_chi(0.05, &motor, -1e-3)?
    );

    let p2 = Sm2Params {
        xd1: 0.3,
        m: 7.0,
        d: 0.0,
        omega_base: ob,
    };
    let p4 = Sm4Params::classical(&p2);
    let x4 = Sm4State {
        delta: 0.6,
        omega_r: 1.004,
        ed1: 0.0,
        eq1: 1.1,
    };
    let u = SmInputs { tau_m: 0.9, v_f: 1.1 };
    let v = Complex64::from_polar(0.98, 0.1);
    let i = sm4_current(&x4, &p4, v);
    let chi4 = sm4_xi_terms(&x4, &p4, &u, v, i)?.chi(eta);
    let chi2 = sm2_chi(
        &Sm2State {
            delta: 0.6,
            omega_r: 1.004,
        },
        &p2,
        v * i.conj(),
        i.norm(),
        eta,
    )?;
    println!("two-axis machine in its classical limit: {chi4:?}");
    println!("classical machine:                       {chi2:?}");
    Ok(())
}
