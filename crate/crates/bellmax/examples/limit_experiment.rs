//! Sharpness of the weighted moment bound via a limiting family.
//!
//! For targets `(p, F, f, h, z)` — moment, mean, Muckenhoupt constant, and
//! weight mass — there is, for each splitting parameter `alpha`, a pair of
//! geometric profiles `(phi_alpha, w_alpha)` on the `S_alpha` tree with
//! `int phi_alpha = f` and `int w_alpha = z` exactly, and with
//! `[w_alpha]_p -> h` and `int phi_alpha^p w_alpha -> F` as `alpha -> 0`.
//! Along the family, `int (M phi_alpha)^p w_alpha` converges to a
//! closed-form limit value, showing the moment bound's constant cannot be
//! improved in its dependence on `h`.
//!
//! Run with: `cargo run --example limit_experiment`

use bellmax::extremal::{profile_limit_instance, profile_limit_value, ProfileLimitConfig};
use bellmax::verify::{fmt_sig, verify_profile_limit};
use bellmax::Result;

fn main() -> Result<()> {
    let cfg = ProfileLimitConfig::new(2.0, 2.0, 1.0, 4.0 / 3.0, 1.0)?;
    let limit = profile_limit_value(&cfg)?;
    println!(
        "targets: p = {}, F = {}, f = {}, h = {}, z = {}",
        cfg.p,
        fmt_sig(cfg.moment_p),
        fmt_sig(cfg.mean),
        fmt_sig(cfg.h),
        fmt_sig(cfg.z)
    );
    println!("closed-form limit of int (M phi)^p w: {}\n", fmt_sig(limit));

    println!(
        "{:>8}  {:>10} {:>10} {:>12} {:>14} {:>12}",
        "alpha", "int phi", "int w", "[w]_p", "int phi^p w", "value/limit"
    );
    for alpha in [0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001] {
        let inst = profile_limit_instance(&cfg, alpha)?;
        println!(
            "{:>8}  {:>10} {:>10} {:>12} {:>14} {:>12}",
            fmt_sig(alpha),
            fmt_sig(inst.int_phi),
            fmt_sig(inst.int_w),
            format!("{:.8}", inst.ap_const),
            format!("{:.8}", inst.int_phi_p_w),
            format!("{:.8}", inst.int_maximal_p_w / limit)
        );
    }

    let report = verify_profile_limit(&cfg, &[0.1, 0.01, 0.001])?;
    println!(
        "\nmonotone-convergence check over alpha = 0.1, 0.01, 0.001: pass = {}",
        report.pass
    );
    Ok(())
}
