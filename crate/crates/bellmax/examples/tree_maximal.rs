//! Trees, leaf functions, and the maximal operator.
//!
//! Builds a small tree-structured probability space by hand, computes the
//! maximal function of a leaf function, and walks the moment chain
//!
//! `int (M phi)^p dmu  <=  F omega_p(f^p/F)^p  <=  (p/(p-1))^p F`,
//!
//! whose middle term is the exact Bellman value for the data
//! `F = int phi^p`, `f = int phi`.
//!
//! Run with: `cargo run --example tree_maximal`

use bellmax::bellman::{bellman_unweighted, doob_constant, BellmanPoint};
use bellmax::tree::{maximal_function, moment, node_average, LeafFunction, TreeSpace};
use bellmax::verify::fmt_sig;
use bellmax::Result;

fn main() -> Result<()> {
    // The root [0,1) splits into [0,1/4), [1/4,1/2), [1/2,1); the last cell
    // splits again into two quarters.
    let children = vec![
        vec![1, 2, 3], // root
        vec![],        // [0, 1/4)
        vec![],        // [1/4, 1/2)
        vec![4, 5],    // [1/2, 1)
        vec![],        // [1/2, 3/4)
        vec![],        // [3/4, 1)
    ];
    let measure = vec![1.0, 0.25, 0.25, 0.5, 0.25, 0.25];
    let tree = TreeSpace::from_children(children, measure)?;
    println!("tree: {} nodes, {} leaves", tree.node_count(), tree.leaf_count());

    // One value per leaf, in slot order (depth-first discovery order).
    let phi = LeafFunction::new(&tree, vec![8.0, 2.0, 1.0, 0.0])?;
    let ones = LeafFunction::ones(&tree);

    println!("\nnode averages of phi:");
    for node in 0..tree.node_count() {
        let avg = node_average(&tree, node, &phi, &ones)?;
        println!(
            "  node {node} (depth {}, measure {}): average = {}",
            tree.depth(node),
            fmt_sig(tree.measure(node)),
            fmt_sig(avg)
        );
    }

    let maximal = maximal_function(&tree, &phi, &ones)?;
    println!("\nmaximal function at the leaves (best average over the ancestor chain):");
    for (slot, (m, v)) in maximal.values().iter().zip(phi.values()).enumerate() {
        println!("  leaf {slot}: phi = {}, M phi = {}", fmt_sig(*v), fmt_sig(*m));
    }

    for p in [1.5, 2.0, 3.0] {
        let moment_p = moment(&tree, &phi, p, &ones)?;
        let mean = moment(&tree, &phi, 1.0, &ones)?;
        let lhs = moment(&tree, &maximal, p, &ones)?;
        let exact = bellman_unweighted(&BellmanPoint::new(p, moment_p, mean)?);
        let coarse = doob_constant(p)? * moment_p;
        println!(
            "\np = {p}: int (M phi)^p = {}  <=  exact bound {}  <=  Doob bound {}",
            fmt_sig(lhs),
            fmt_sig(exact),
            fmt_sig(coarse)
        );
    }
    Ok(())
}
