//! The exact Bellman function of the dyadic maximal operator.
//!
//! For data `(F, f)` with `0 <= f^p <= F`, the supremum of
//! `int (M phi)^p dmu` over all `phi >= 0` with `int phi^p = F`,
//! `int phi = f` equals
//!
//! `B_p(F, f) = F omega_p(f^p / F)^p`,
//!
//! where `omega_p` inverts `H_p(z) = z^(p-1) (p - (p-1) z)` on
//! `[1, p/(p-1)]`. At `p = 2` this collapses to the closed form
//! `(sqrt(F) + sqrt(F - f^2))^2`.
//!
//! Run with: `cargo run --example bellman_surface`

use bellmax::bellman::{bellman_l2, bellman_unweighted, doob_constant, omega_p, BellmanPoint};
use bellmax::verify::fmt_sig;
use bellmax::Result;

fn main() -> Result<()> {
    println!("omega_p at a few points (omega_2(y) = 1 + sqrt(1-y)):");
    for y in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let z2 = omega_p(2.0, y)?;
        let z3 = omega_p(3.0, y)?;
        println!(
            "  y = {y}: omega_2 = {} (closed form {}), omega_3 = {}",
            fmt_sig(z2),
            fmt_sig(1.0 + (1.0 - y).sqrt()),
            fmt_sig(z3)
        );
    }

    println!("\nB_2(1, f) for f from 0 to 1 (endpoints 4 and 1):");
    for i in 0..=10 {
        let f = i as f64 / 10.0;
        let point = BellmanPoint::new(2.0, 1.0, f)?;
        let value = bellman_unweighted(&point);
        let closed = bellman_l2(&point)?;
        println!(
            "  f = {}: B = {}  (closed form {})",
            fmt_sig(f),
            fmt_sig(value),
            fmt_sig(closed)
        );
    }

    println!("\nthe bound always sits between F and the Doob constant times F:");
    for p in [1.25, 1.5, 2.0, 4.0] {
        let point = BellmanPoint::new(p, 1.0, 0.6)?;
        println!(
            "  p = {p}: F = 1 <= B = {} <= (p/(p-1))^p = {}",
            fmt_sig(bellman_unweighted(&point)),
            fmt_sig(doob_constant(p)?)
        );
    }
    Ok(())
}
