//! The weighted Bellman bound and its one-parameter envelope.
//!
//! For a nonincreasing weight on `(0,1]` with best constants `(a, c)` (the
//! pair in `int_t^1 w(s)/s^p ds + c <= a w(t)/t^(p-1)`), the weighted
//! energy `Delta_w(g) = int_0^1 ((1/t) int_0^t g)^p w dt` of every
//! nonincreasing `g` with data `(F, f)` is at most
//!
//! `B*(F, f) = (p-1)^p a^p F omega_p(c f^p / ((p-1)^(p-1) a^p F))^p`,
//!
//! and `B*` is also the minimum over `beta > 0` of an elementary envelope
//! bound. This example prints both routes and their agreement.
//!
//! Run with: `cargo run --example weighted_bellman`

use bellmax::bellman::{bellman_weighted, envelope_bound, envelope_minimum, WeightedBellmanPoint};
use bellmax::verify::fmt_sig;
use bellmax::weight::{power_weight_constants, PowerWeightSpec};
use bellmax::Result;

fn main() -> Result<()> {
    // Power weights w(t) = k t^b have closed-form best pairs.
    for (k, b, p) in [(1.0, 0.0, 2.0), (2.0, 0.5, 3.0), (1.0, -0.5, 2.0)] {
        let spec = PowerWeightSpec::new(k, b, p)?;
        let pair = power_weight_constants(&spec)?;
        println!(
            "w(t) = {k} t^{b} at p = {p}: a = {}, c = {}",
            fmt_sig(pair.a),
            fmt_sig(pair.c)
        );

        let point = WeightedBellmanPoint::new(p, 2.0, 1.0, pair.a, pair.c)?;
        let closed = bellman_weighted(&point);
        println!("  closed-form bound at (F, f) = (2, 1): {}", fmt_sig(closed));

        println!("  envelope over beta:");
        for beta in [0.25, 0.5, 1.0, 2.0, 4.0] {
            println!("    beta = {beta}: {}", fmt_sig(envelope_bound(&point, beta)?));
        }
        let min = envelope_minimum(&point)?;
        println!(
            "  minimum at beta = {}: {}  (relative gap to closed form {})",
            fmt_sig(min.beta),
            fmt_sig(min.value),
            fmt_sig((min.value - closed).abs() / closed)
        );
        println!();
    }
    Ok(())
}
