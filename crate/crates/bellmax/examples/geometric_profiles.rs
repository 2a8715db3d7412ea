//! Splitting trees and geometric rank profiles.
//!
//! The `S_alpha` tree sheds, at every cell, an annulus of measure
//! `alpha mu(I)` and recurses on the remaining `(1-alpha)` fraction. A
//! geometric profile takes the value `lambda_eff gamma^m` on rank-`m`
//! annuli — the discrete image of a power function `t^s` with
//! `gamma = (1-alpha)^s`. Weight profiles have a closed-form Muckenhoupt
//! constant; this example checks it against the direct computation on an
//! explicitly truncated tree.
//!
//! Run with: `cargo run --example geometric_profiles`

use bellmax::extremal::{
    discretize_power, profile_muckenhoupt_constant, profile_on_salpha,
    profile_weight_on_truncation, weighted_profile_moment,
};
use bellmax::tree::{build_salpha, maximal_function, moment, LeafFunction};
use bellmax::verify::fmt_sig;
use bellmax::weight::muckenhoupt_constant;
use bellmax::Result;

fn main() -> Result<()> {
    let alpha = 0.5;
    let tr = build_salpha(alpha, 12)?;
    println!(
        "S_alpha tree with alpha = {alpha}, rank cutoff {}: {} nodes, {} leaves",
        tr.rank_cutoff(),
        tr.tree().node_count(),
        tr.tree().leaf_count()
    );

    // A weight profile: the discretization of t^(1/2), scaled by 1.7.
    let w_prof = discretize_power(1.7, 0.5, alpha)?;
    println!(
        "\nweight profile of t^(1/2): lambda_eff = {}, gamma = {} = (1-alpha)^s",
        fmt_sig(w_prof.lambda_eff()),
        fmt_sig(w_prof.gamma())
    );
    println!("  rank values: {}, {}, {}, ...",
        fmt_sig(w_prof.value_at_rank(0)),
        fmt_sig(w_prof.value_at_rank(1)),
        fmt_sig(w_prof.value_at_rank(2)));
    println!("  integral over (0,1]: {}", fmt_sig(w_prof.integral()?));

    for p in [2.0, 3.0] {
        let closed = profile_muckenhoupt_constant(&w_prof, p)?;
        let leaf_w = profile_weight_on_truncation(&w_prof, &tr, p)?;
        let direct = muckenhoupt_constant(tr.tree(), &leaf_w, p)?;
        println!(
            "\n[w]_{p}: closed form {} vs direct tree computation {} (rel. diff {})",
            fmt_sig(closed),
            fmt_sig(direct),
            fmt_sig((closed - direct).abs() / closed)
        );
    }

    // A function profile paired with the weight: its weighted moment has a
    // closed form too, and the realized maximal function can be integrated
    // directly on the truncated tree.
    let phi_prof = discretize_power(1.0, -0.25, alpha)?;
    let p = 2.0;
    let closed_moment = weighted_profile_moment(&phi_prof, p, &w_prof)?;
    let phi = profile_on_salpha(&phi_prof, &tr)?;
    let w_leaf = profile_on_salpha(&w_prof, &tr)?;
    let direct_moment = moment(tr.tree(), &phi, p, &w_leaf)?;
    println!(
        "\nweighted moment int phi^2 w: closed form {} vs truncated tree {}",
        fmt_sig(closed_moment),
        fmt_sig(direct_moment)
    );

    let ones = LeafFunction::ones(tr.tree());
    let maximal = maximal_function(tr.tree(), &phi, &ones)?;
    println!(
        "int (M phi)^2 w on the truncation: {}",
        fmt_sig(moment(tr.tree(), &maximal, p, &w_leaf)?)
    );
    Ok(())
}
