//! Decreasing rearrangements and the Hardy averaging operator.
//!
//! The maximal operator is controlled, after symmetrization, by the Hardy
//! average of the decreasing rearrangement: for every measure-preserving
//! relayout `phi` of a target profile `g` onto the leaves,
//!
//! `int_0^k ((M phi)*)^q h dt  <=  int_0^k ((1/t) int_0^t g)^q h dt`.
//!
//! This example discretizes the density `t^(-1/4)` on a dyadic tree,
//! rearranges its maximal function, prints both sides for a few random
//! relayouts, and shows the domination pointwise.
//!
//! Run with: `cargo run --example rearrange_and_average`

use bellmax::step::{
    decreasing_rearrangement, hardy_average, integrate, integrate_power_composite, PiecewisePower,
};
use bellmax::tree::{maximal_function, LeafFunction, TreeSpace};
use bellmax::verify::{
    averaged_leaf_density, fmt_sig, verify_symmetrization, SymmetrizationProblem,
};
use bellmax::Result;

fn main() -> Result<()> {
    let tree = TreeSpace::uniform(6, 2)?; // dyadic, 64 leaves
    let density = PiecewisePower::single_power(1.0, -0.25)?;
    let phi = averaged_leaf_density(&tree, &density)?;
    let target = decreasing_rearrangement(&tree, &phi)?;
    println!(
        "target g: {} constant pieces, int g = {}",
        target.step().pieces().len(),
        fmt_sig(integrate(target.step(), 0.0, 1.0)?)
    );

    // The Hardy average (1/t) int_0^t g of the target, exactly.
    let averaged = hardy_average(target.step())?;
    println!("\nHardy average of g at sample points (it dominates g pointwise):");
    for t in [0.05, 0.25, 0.5, 1.0] {
        println!(
            "  t = {t}: g = {}, average = {}",
            fmt_sig(target.step().value(t)),
            fmt_sig(averaged.value(t))
        );
    }

    // The sorted layout realizes equality-like behaviour; random relayouts
    // sit strictly below the Hardy side.
    let ones = LeafFunction::ones(&tree);
    let q = 2.0;
    let h = PiecewisePower::single_power(1.0, 0.5)?;
    let k = 1.0;
    let rhs = integrate_power_composite(&averaged, q, &h, 0.0, k)?;
    println!("\ncomparison with q = {q}, h(t) = t^(1/2), truncation k = {k}:");
    println!("  right side (Hardy average of g): {}", fmt_sig(rhs));

    let maximal = maximal_function(&tree, &phi, &ones)?;
    let rearranged = decreasing_rearrangement(&tree, &maximal)?;
    let lhs_sorted = integrate_power_composite(rearranged.step(), q, &h, 0.0, k)?;
    println!("  left side, sorted layout:        {}", fmt_sig(lhs_sorted));

    let prob = SymmetrizationProblem::new(q, h, k)?;
    let report = verify_symmetrization(&tree, &target, &prob, 200, 7)?;
    println!(
        "  200 random relayouts: worst left side = {} (margin {}), all pass = {}",
        fmt_sig(report.lhs),
        fmt_sig(report.margin),
        report.pass
    );
    Ok(())
}
