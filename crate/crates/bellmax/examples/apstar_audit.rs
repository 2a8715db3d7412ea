//! Best weight pairs `(a, c)` and Muckenhoupt constants, with an audit.
//!
//! A nonincreasing-rearranged weight `w**` on `(0,1]` enters the sharp
//! weighted bound through the smallest constants `(a, c)` satisfying
//!
//! `int_t^1 w**(s) s^(-p) ds + c  <=  a w**(t) t^(-(p-1))` for all `t`.
//!
//! Power weights have closed-form pairs; general step weights go through a
//! small optimisation. Every computed pair is audited against an
//! independent adaptive integrator. On trees, the related Muckenhoupt
//! constant `[w]_p = sup_I w(I) sigma(I)^(p-1) / mu(I)^p` is computed
//! directly.
//!
//! Run with: `cargo run --example apstar_audit`

use bellmax::step::PiecewisePower;
use bellmax::verify::{fmt_sig, random_instance};
use bellmax::weight::{
    apstar_constants, best_pair_audit_margin, muckenhoupt_constant, power_weight_constants,
    sigma_weight, PowerWeightSpec,
};
use bellmax::Result;

fn main() -> Result<()> {
    println!("closed-form pairs for power weights w(t) = k t^b:");
    for (k, b, p) in [(1.0, 0.0, 2.0), (2.0, 0.5, 3.0), (1.0, -0.25, 1.5)] {
        let spec = PowerWeightSpec::new(k, b, p)?;
        let pair = power_weight_constants(&spec)?;
        let margin = best_pair_audit_margin(&spec.density(), p, &pair, 64)?;
        println!(
            "  k = {k}, b = {b}, p = {p}: a = {}, c = {}  (audit margin {})",
            fmt_sig(pair.a),
            fmt_sig(pair.c),
            fmt_sig(margin)
        );
    }

    println!("\nfitted pair for a two-step weight:");
    let wss = PiecewisePower::from_steps(&[0.0, 0.25, 1.0], &[3.0, 1.0])?;
    for p in [1.5, 2.0, 3.0] {
        let pair = apstar_constants(&wss, p)?;
        let margin = best_pair_audit_margin(&wss, p, &pair, 64)?;
        println!(
            "  p = {p}: a = {}, c = {}  (audit margin {})",
            fmt_sig(pair.a),
            fmt_sig(pair.c),
            fmt_sig(margin)
        );
    }

    println!("\ntree Muckenhoupt constants of random leaf weights:");
    for seed in 0..3 {
        let (tree, _phi, w) = random_instance(seed, 4, (0.0, 10.0), (0.125, 8.0))?;
        let sigma = sigma_weight(&w, 2.0)?;
        let a = muckenhoupt_constant(&tree, &w, 2.0)?;
        println!(
            "  seed {seed}: {} leaves, [w]_2 = {} (sigma at leaf 0 = {})",
            tree.leaf_count(),
            fmt_sig(a),
            fmt_sig(sigma.values()[0])
        );
    }
    Ok(())
}
