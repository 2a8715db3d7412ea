//! Finite tree-structured probability spaces and their maximal operator.
//!
//! A [`TreeSpace`] is a rooted tree whose nodes carry positive measures: the
//! root has mass 1 and every internal node's children partition its mass.
//! Leaves are the atoms of the space; a [`LeafFunction`] assigns one value
//! per leaf. Given a positive density `nu`, the maximal operator takes, at
//! each leaf, the largest `nu`-weighted average of `phi` over the nodes
//! containing that leaf (the leaf itself included).
//!
//! The module also provides the `S_alpha` family: binary-like trees in which
//! every cell of rank `m` splits into two equal cells of rank `m+1` holding a
//! `(1-alpha)` fraction of its mass, plus one terminal "annulus" leaf holding
//! the remaining `alpha` fraction. These trees carry the extremal geometric
//! profiles used by the sharpness experiments.
//!
//! All aggregations run in a fixed order (children in listed order, leaves in
//! increasing node order), so results are bit-reproducible.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of leaves a builder may create (total node counts
/// may run up to twice this).
pub const MAX_LEAVES: usize = 1 << 24;

/// Absolute tolerance for measure consistency checks.
const MEASURE_TOL: f64 = 1e-12;

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// A finite rooted tree with a positive measure on every node.
///
/// Node 0 is the root; children always have larger indices than their parent,
/// so index order is a topological order. Internal nodes have at least two
/// children and their children's measures sum to the parent's measure.
#[derive(Debug, Clone)]
pub struct TreeSpace {
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    measure: Vec<f64>,
    depth: Vec<u32>,
    /// Leaf node ids in increasing order.
    leaves: Vec<usize>,
    /// For each node, its index into `leaves` if it is a leaf.
    leaf_slot: Vec<Option<usize>>,
    stamp: u64,
}

impl TreeSpace {
    /// Builds a tree from explicit children lists and per-node measures.
    ///
    /// Requirements: node 0 is the root with measure 1 (tolerance `1e-12`);
    /// every child index is larger than its parent's index and occurs exactly
    /// once; internal nodes have at least two children; all measures are
    /// positive and children's measures sum to their parent's (tolerance
    /// `1e-12`).
    pub fn from_children(children: Vec<Vec<usize>>, measure: Vec<f64>) -> Result<Self> {
        let n = children.len();
        if n == 0 {
            return Err(Error::Structure("tree must have at least one node".into()));
        }
        if n > 2 * MAX_LEAVES {
            return Err(Error::TooLarge(format!(
                "tree has {n} nodes, exceeding the cap of {}",
                2 * MAX_LEAVES
            )));
        }
        if measure.len() != n {
            return Err(Error::Structure(format!(
                "children list has {n} nodes but measure list has {}",
                measure.len()
            )));
        }
        for (i, &m) in measure.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::Measure(format!("node {i} has non-positive measure {m}")));
            }
        }
        if (measure[0] - 1.0).abs() > MEASURE_TOL {
            return Err(Error::Measure(format!(
                "root measure must be 1 (got {})",
                measure[0]
            )));
        }

        let mut parent: Vec<Option<usize>> = vec![None; n];
        for (i, kids) in children.iter().enumerate() {
            if kids.len() == 1 {
                return Err(Error::Structure(format!(
                    "internal node {i} must have at least two children"
                )));
            }
            let mut kid_mass = 0.0;
            for &k in kids {
                if k >= n {
                    return Err(Error::Structure(format!(
                        "node {i} lists child {k}, but the tree has only {n} nodes"
                    )));
                }
                if k <= i {
                    return Err(Error::Structure(format!(
                        "child {k} of node {i} does not come after its parent"
                    )));
                }
                if parent[k].is_some() {
                    return Err(Error::Structure(format!("node {k} has two parents")));
                }
                parent[k] = Some(i);
                kid_mass += measure[k];
            }
            if !kids.is_empty() && (kid_mass - measure[i]).abs() > MEASURE_TOL {
                return Err(Error::Measure(format!(
                    "children of node {i} have total mass {kid_mass}, parent has {}",
                    measure[i]
                )));
            }
        }
        for (i, p) in parent.iter().enumerate() {
            if i != 0 && p.is_none() {
                return Err(Error::Structure(format!("node {i} is unreachable from the root")));
            }
        }

        let mut depth = vec![0u32; n];
        let mut leaves = Vec::new();
        let mut leaf_slot = vec![None; n];
        for i in 0..n {
            if let Some(p) = parent[i] {
                depth[i] = depth[p] + 1;
            }
            if children[i].is_empty() {
                leaf_slot[i] = Some(leaves.len());
                leaves.push(i);
            }
        }

        Ok(TreeSpace {
            children,
            parent,
            measure,
            depth,
            leaves,
            leaf_slot,
            stamp: fresh_stamp(),
        })
    }

    /// Builds the uniform tree of the given depth in which every internal
    /// node has `arity` children of equal measure.
    ///
    /// Requires `arity >= 2`, `depth >= 1`, and `arity^depth <= 2^24`.
    pub fn uniform(depth: u32, arity: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::Structure("arity must be at least 2".into()));
        }
        if depth == 0 {
            return Err(Error::Structure("depth must be at least 1".into()));
        }
        let mut leaf_count: usize = 1;
        for _ in 0..depth {
            leaf_count = leaf_count
                .checked_mul(arity)
                .filter(|&c| c <= MAX_LEAVES)
                .ok_or_else(|| {
                    Error::TooLarge(format!("{arity}^{depth} leaves exceed the cap of {MAX_LEAVES}"))
                })?;
        }

        let mut children: Vec<Vec<usize>> = vec![Vec::new()];
        let mut measure = vec![1.0f64];
        // Frontier of the last completed level.
        let mut frontier = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * arity);
            for &node in &frontier {
                let m = measure[node] / arity as f64;
                for _ in 0..arity {
                    let id = children.len();
                    children.push(Vec::new());
                    measure.push(m);
                    children[node].push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        Self::from_children(children, measure)
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf node ids in increasing order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// Children of a node, in listed order.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Parent of a node (`None` for the root).
    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Measure of a node.
    pub fn measure(&self, node: usize) -> f64 {
        self.measure[node]
    }

    /// Depth of a node (root has depth 0).
    pub fn depth(&self, node: usize) -> u32 {
        self.depth[node]
    }

    /// Whether `node` is a leaf.
    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    /// The position of `node` in [`Self::leaves`], if it is a leaf.
    pub fn leaf_slot(&self, node: usize) -> Option<usize> {
        self.leaf_slot[node]
    }

    /// Measure of each leaf, in leaf order.
    pub fn leaf_measures(&self) -> Vec<f64> {
        self.leaves.iter().map(|&l| self.measure[l]).collect()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.node_count() {
            return Err(Error::Structure(format!(
                "unknown node {node} (tree has {} nodes)",
                self.node_count()
            )));
        }
        Ok(())
    }
}

/// A function defined on the leaves of one specific [`TreeSpace`].
///
/// Values are stored in leaf order. The function remembers which tree it was
/// built for; using it with a different tree is a structure error even when
/// the leaf counts happen to match.
#[derive(Debug, Clone)]
pub struct LeafFunction {
    values: Vec<f64>,
    stamp: u64,
}

impl LeafFunction {
    /// Wraps per-leaf values (leaf order). Values must be finite and
    /// nonnegative.
    pub fn new(tree: &TreeSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.leaf_count() {
            return Err(Error::Structure(format!(
                "{} values supplied for a tree with {} leaves",
                values.len(),
                tree.leaf_count()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "leaf {i} has value {v}; leaf functions must be finite and nonnegative"
                )));
            }
        }
        Ok(LeafFunction { values, stamp: tree.stamp })
    }

    /// The constant function with the given value.
    pub fn constant(tree: &TreeSpace, value: f64) -> Result<Self> {
        Self::new(tree, vec![value; tree.leaf_count()])
    }

    /// The constant function 1 (the unweighted density).
    pub fn ones(tree: &TreeSpace) -> Self {
        LeafFunction { values: vec![1.0; tree.leaf_count()], stamp: tree.stamp }
    }

    /// Per-leaf values in leaf order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies a pointwise map, keeping the tree association.
    ///
    /// The result must still be finite and nonnegative.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "mapped value at leaf {i} is {v}; leaf functions must be finite and nonnegative"
                )));
            }
        }
        Ok(LeafFunction { values, stamp: self.stamp })
    }

    /// Checks that this function belongs to `tree`.
    pub fn check_tree(&self, tree: &TreeSpace) -> Result<()> {
        if self.stamp != tree.stamp {
            return Err(Error::Structure(
                "leaf function belongs to a different tree".into(),
            ));
        }
        Ok(())
    }
}

/// Per-node integrals `int_I phi nu dmu` and masses `int_I nu dmu`, computed
/// bottom-up in one pass (children folded in listed order).
fn subtree_sums(
    tree: &TreeSpace,
    phi: &LeafFunction,
    nu: &LeafFunction,
) -> Result<(Vec<f64>, Vec<f64>)> {
    phi.check_tree(tree)?;
    nu.check_tree(tree)?;
    let n = tree.node_count();
    let mut integral = vec![0.0f64; n];
    let mut mass = vec![0.0f64; n];
    for i in (0..n).rev() {
        if let Some(slot) = tree.leaf_slot(i) {
            let mu = tree.measure(i);
            mass[i] = nu.values[slot] * mu;
            integral[i] = phi.values[slot] * nu.values[slot] * mu;
        } else {
            let (mut s_int, mut s_mass) = (0.0, 0.0);
            for &k in tree.children(i) {
                s_int += integral[k];
                s_mass += mass[k];
            }
            integral[i] = s_int;
            mass[i] = s_mass;
        }
    }
    Ok((integral, mass))
}

/// The `nu`-weighted integral of `phi` over the subtree rooted at `node`,
/// i.e. `int_node phi nu dmu`.
pub fn node_integral(
    tree: &TreeSpace,
    node: usize,
    phi: &LeafFunction,
    nu: &LeafFunction,
) -> Result<f64> {
    tree.check_node(node)?;
    let (integral, _) = subtree_sums(tree, phi, nu)?;
    Ok(integral[node])
}

/// The `nu`-weighted average of `phi` over the subtree rooted at `node`.
///
/// Fails with a measure error when the node carries zero `nu`-mass.
pub fn node_average(
    tree: &TreeSpace,
    node: usize,
    phi: &LeafFunction,
    nu: &LeafFunction,
) -> Result<f64> {
    tree.check_node(node)?;
    let (integral, mass) = subtree_sums(tree, phi, nu)?;
    if mass[node] <= 0.0 {
        return Err(Error::Measure(format!("node {node} carries zero nu-mass")));
    }
    Ok(integral[node] / mass[node])
}

/// The maximal operator: at each leaf, the largest `nu`-weighted average of
/// `phi` over the chain of nodes containing that leaf (the leaf included).
///
/// `nu` must give positive mass to every node; `nu = 1` gives the plain
/// (unweighted) maximal operator.
pub fn maximal_function(
    tree: &TreeSpace,
    phi: &LeafFunction,
    nu: &LeafFunction,
) -> Result<LeafFunction> {
    let (integral, mass) = subtree_sums(tree, phi, nu)?;
    for (i, &m) in mass.iter().enumerate() {
        if m <= 0.0 {
            return Err(Error::Measure(format!(
                "node {i} carries zero nu-mass; the weighted maximal operator is undefined"
            )));
        }
    }
    let mut out = vec![0.0f64; tree.leaf_count()];
    // Depth-first walk carrying the best average seen on the root-to-node path.
    let mut stack: Vec<(usize, f64)> = vec![(0, f64::NEG_INFINITY)];
    while let Some((node, best_above)) = stack.pop() {
        let best = best_above.max(integral[node] / mass[node]);
        if let Some(slot) = tree.leaf_slot(node) {
            out[slot] = best;
        } else {
            for &k in tree.children(node).iter().rev() {
                stack.push((k, best));
            }
        }
    }
    Ok(LeafFunction { values: out, stamp: tree.stamp })
}

/// The integral `int phi^q nu dmu` over the whole space, folded in leaf order.
pub fn moment(tree: &TreeSpace, phi: &LeafFunction, q: f64, nu: &LeafFunction) -> Result<f64> {
    phi.check_tree(tree)?;
    nu.check_tree(tree)?;
    let mut total = 0.0;
    for (slot, &leaf) in tree.leaves().iter().enumerate() {
        let base = if q == 1.0 { phi.values[slot] } else { phi.values[slot].powf(q) };
        total += base * nu.values[slot] * tree.measure(leaf);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// S_alpha trees
// ---------------------------------------------------------------------------

/// Role of a node inside an [`SAlphaTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    /// A splitting cell of some rank below the cutoff.
    Cell,
    /// A terminal annulus leaf (the `alpha` fraction peeled off a cell).
    Annulus,
    /// A rank-cutoff cell kept as a plain leaf.
    ClosedCell,
}

/// A truncated `S_alpha` tree.
///
/// The root is the rank-0 cell. Every cell of rank `m < rank_cutoff` has
/// three children: one annulus leaf of measure `alpha * mu` and two cells of
/// rank `m+1` with measure `(1-alpha) * mu / 2` each. Cells of rank
/// `rank_cutoff` are kept as plain leaves. The annuli of rank `m` have total
/// measure `alpha (1-alpha)^m`, and the closed cells total `(1-alpha)^cutoff`.
#[derive(Debug, Clone)]
pub struct SAlphaTree {
    alpha: f64,
    rank_cutoff: u32,
    tree: TreeSpace,
    rank: Vec<u32>,
    role: Vec<NodeRole>,
}

/// Builds the truncated `S_alpha` tree.
///
/// Requires `alpha` in `(0,1)` and `1 <= rank_cutoff <= 22` (so the node
/// count `3 * 2^cutoff - 2` stays within the cap).
pub fn build_salpha(alpha: f64, rank_cutoff: u32) -> Result<SAlphaTree> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if rank_cutoff == 0 {
        return Err(Error::Domain("rank cutoff must be at least 1".into()));
    }
    if rank_cutoff > 22 {
        return Err(Error::TooLarge(format!(
            "rank cutoff {rank_cutoff} would create more than {MAX_LEAVES} leaves"
        )));
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut measure = vec![1.0f64];
    let mut rank = vec![0u32];
    let mut role = vec![NodeRole::Cell];
    let mut frontier = vec![0usize]; // cells of the current rank
    for m in 0..rank_cutoff {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for &cell in &frontier {
            let mu = measure[cell];
            let annulus = children.len();
            children.push(Vec::new());
            measure.push(alpha * mu);
            rank.push(m);
            role.push(NodeRole::Annulus);

            let half = (1.0 - alpha) * mu / 2.0;
            let mut kids = vec![annulus];
            for _ in 0..2 {
                let id = children.len();
                children.push(Vec::new());
                measure.push(half);
                rank.push(m + 1);
                role.push(NodeRole::Cell);
                kids.push(id);
                next.push(id);
            }
            children[cell] = kids;
        }
        frontier = next;
    }
    for &cell in &frontier {
        role[cell] = NodeRole::ClosedCell;
    }

    let tree = TreeSpace::from_children(children, measure)?;
    Ok(SAlphaTree { alpha, rank_cutoff, tree, rank, role })
}

impl SAlphaTree {
    /// The splitting parameter.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The truncation rank.
    pub fn rank_cutoff(&self) -> u32 {
        self.rank_cutoff
    }

    /// The underlying tree space.
    pub fn tree(&self) -> &TreeSpace {
        &self.tree
    }

    /// Rank of a node (annulus leaves carry the rank of the cell they were
    /// peeled from).
    pub fn rank(&self, node: usize) -> u32 {
        self.rank[node]
    }

    /// Role of a node.
    pub fn role(&self, node: usize) -> NodeRole {
        self.role[node]
    }

    /// Leaf slots of all annulus leaves together with their ranks.
    pub fn annulus_leaf_slots(&self) -> Vec<(usize, u32)> {
        self.collect_slots(NodeRole::Annulus)
    }

    /// Leaf slots of the rank-cutoff cells kept as leaves.
    pub fn closed_cell_slots(&self) -> Vec<(usize, u32)> {
        self.collect_slots(NodeRole::ClosedCell)
    }

    fn collect_slots(&self, want: NodeRole) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for (node, &r) in self.role.iter().enumerate() {
            if r == want {
                let slot = self.tree.leaf_slot(node).expect("role implies leaf");
                out.push((slot, self.rank[node]));
            }
        }
        out
    }

    /// Total measured mass of the annuli of a given rank (sums tree
    /// measures; equals `alpha (1-alpha)^rank` up to rounding).
    pub fn measured_annulus_mass(&self, rank: u32) -> f64 {
        let mut total = 0.0;
        for (node, &role) in self.role.iter().enumerate() {
            if role == NodeRole::Annulus && self.rank[node] == rank {
                total += self.tree.measure(node);
            }
        }
        total
    }
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TreeJson {
    arity_children: Vec<Vec<usize>>,
    measure: Vec<f64>,
    #[serde(default)]
    leaf_values: BTreeMap<String, Vec<f64>>,
}

/// Serializes a tree and named leaf functions to the stable JSON layout
/// (`arity_children`, `measure`, `leaf_values`).
pub fn tree_to_json(tree: &TreeSpace, values: &[(&str, &LeafFunction)]) -> Result<String> {
    let mut leaf_values = BTreeMap::new();
    for (name, f) in values {
        f.check_tree(tree)?;
        leaf_values.insert((*name).to_string(), f.values().to_vec());
    }
    let doc = TreeJson {
        arity_children: tree.children.clone(),
        measure: tree.measure.clone(),
        leaf_values,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses the JSON layout produced by [`tree_to_json`], re-validating all
/// structural and measure constraints.
pub fn tree_from_json(text: &str) -> Result<(TreeSpace, BTreeMap<String, LeafFunction>)> {
    let doc: TreeJson = serde_json::from_str(text)?;
    let tree = TreeSpace::from_children(doc.arity_children, doc.measure)?;
    let mut out = BTreeMap::new();
    for (name, vals) in doc.leaf_values {
        let f = LeafFunction::new(&tree, vals)?;
        out.insert(name, f);
    }
    Ok((tree, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn uniform_binary_counts_and_measures() {
        let t = TreeSpace::uniform(3, 2).unwrap();
        assert_eq!(t.node_count(), 15);
        assert_eq!(t.leaf_count(), 8);
        for &l in t.leaves() {
            assert_eq!(t.measure(l), 0.125);
            assert_eq!(t.depth(l), 3);
        }
    }

    #[test]
    fn uniform_rejects_oversized_trees() {
        // The cap check fires before any allocation happens.
        assert!(matches!(TreeSpace::uniform(25, 2), Err(Error::TooLarge(_))));
        assert!(matches!(TreeSpace::uniform(16, 3), Err(Error::TooLarge(_))));
        assert!(TreeSpace::uniform(10, 2).is_ok());
    }

    #[test]
    fn from_children_validates_structure() {
        // Child index not after parent.
        let bad = TreeSpace::from_children(vec![vec![0, 1]], vec![1.0]);
        assert!(matches!(bad, Err(Error::Structure(_))));
        // Single child.
        let bad = TreeSpace::from_children(vec![vec![1], vec![]], vec![1.0, 1.0]);
        assert!(matches!(bad, Err(Error::Structure(_))));
        // Children mass mismatch.
        let bad = TreeSpace::from_children(vec![vec![1, 2], vec![], vec![]], vec![1.0, 0.6, 0.6]);
        assert!(matches!(bad, Err(Error::Measure(_))));
        // Root mass must be one.
        let bad = TreeSpace::from_children(vec![vec![1, 2], vec![], vec![]], vec![2.0, 1.0, 1.0]);
        assert!(matches!(bad, Err(Error::Measure(_))));
        // Valid.
        let ok = TreeSpace::from_children(vec![vec![1, 2], vec![], vec![]], vec![1.0, 0.5, 0.5]);
        assert!(ok.is_ok());
    }

    #[test]
    fn maximal_function_depth_one() {
        let t = TreeSpace::uniform(1, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![4.0, 0.0]).unwrap();
        let m = maximal_function(&t, &phi, &LeafFunction::ones(&t)).unwrap();
        assert_eq!(m.values(), &[4.0, 2.0]);
    }

    #[test]
    fn maximal_function_depth_two() {
        let t = TreeSpace::uniform(2, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![8.0, 0.0, 0.0, 0.0]).unwrap();
        let m = maximal_function(&t, &phi, &LeafFunction::ones(&t)).unwrap();
        assert_eq!(m.values(), &[8.0, 4.0, 2.0, 2.0]);
    }

    #[test]
    fn weighted_maximal_uses_nu_averages() {
        let t = TreeSpace::uniform(1, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![1.0, 0.0]).unwrap();
        let nu = LeafFunction::new(&t, vec![2.0, 0.5]).unwrap();
        let m = maximal_function(&t, &phi, &nu).unwrap();
        // Root nu-average: (1*2*0.5) / (2*0.5 + 0.5*0.5) = 1 / 1.25 = 0.8.
        assert_close(m.values()[0], 1.0, 1e-15);
        assert_close(m.values()[1], 0.8, 1e-15);
    }

    #[test]
    fn maximal_dominates_function_and_respects_scaling() {
        let t = TreeSpace::uniform(3, 2).unwrap();
        let vals: Vec<f64> = (0..8).map(|i| ((i * 37 % 11) as f64) / 3.0).collect();
        let phi = LeafFunction::new(&t, vals.clone()).unwrap();
        let ones = LeafFunction::ones(&t);
        let m = maximal_function(&t, &phi, &ones).unwrap();
        for (a, b) in m.values().iter().zip(phi.values()) {
            assert!(a >= b);
        }
        let phi2 = LeafFunction::new(&t, vals.iter().map(|v| 3.0 * v).collect()).unwrap();
        let m2 = maximal_function(&t, &phi2, &ones).unwrap();
        for (a, b) in m2.values().iter().zip(m.values()) {
            assert_close(*a, 3.0 * *b, 1e-12);
        }
    }

    #[test]
    fn node_integral_matches_hand_value() {
        let t = TreeSpace::uniform(1, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![4.0, 0.0]).unwrap();
        let nu = LeafFunction::new(&t, vec![2.0, 1.0]).unwrap();
        assert_eq!(node_integral(&t, 0, &phi, &nu).unwrap(), 4.0);
        assert_eq!(node_integral(&t, 1, &phi, &nu).unwrap(), 4.0);
        assert_eq!(node_integral(&t, 2, &phi, &nu).unwrap(), 0.0);
        assert!(matches!(node_integral(&t, 9, &phi, &nu), Err(Error::Structure(_))));
        assert_close(node_average(&t, 0, &phi, &nu).unwrap(), 4.0 / 1.5, 1e-15);
    }

    #[test]
    fn zero_mass_density_is_rejected() {
        let t = TreeSpace::uniform(1, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![1.0, 1.0]).unwrap();
        let nu = LeafFunction::new(&t, vec![0.0, 1.0]).unwrap();
        assert!(matches!(maximal_function(&t, &phi, &nu), Err(Error::Measure(_))));
    }

    #[test]
    fn leaf_functions_are_tied_to_their_tree() {
        let t1 = TreeSpace::uniform(1, 2).unwrap();
        let t2 = TreeSpace::uniform(1, 2).unwrap();
        let phi = LeafFunction::new(&t1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            maximal_function(&t2, &phi, &LeafFunction::ones(&t2)),
            Err(Error::Structure(_))
        ));
        assert!(LeafFunction::new(&t1, vec![1.0]).is_err());
        assert!(LeafFunction::new(&t1, vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn moment_sums_in_leaf_order() {
        let t = TreeSpace::uniform(2, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ones = LeafFunction::ones(&t);
        assert_close(moment(&t, &phi, 1.0, &ones).unwrap(), 2.5, 1e-15);
        assert_close(moment(&t, &phi, 2.0, &ones).unwrap(), 7.5, 1e-15);
    }

    #[test]
    fn salpha_masses_match_closed_forms() {
        let s = build_salpha(0.5, 2).unwrap();
        let t = s.tree();
        assert_eq!(t.node_count(), 3 * 4 - 2);
        let total: f64 = t.leaves().iter().map(|&l| t.measure(l)).sum();
        assert_close(total, 1.0, 1e-12);
        assert_close(s.measured_annulus_mass(0), 0.5, 1e-15);
        assert_close(s.measured_annulus_mass(1), 0.25, 1e-15);
        let closed: f64 = s
            .closed_cell_slots()
            .iter()
            .map(|&(slot, _)| t.measure(t.leaves()[slot]))
            .sum();
        assert_close(closed, 0.25, 1e-15);

        let alpha = 0.3;
        let s = build_salpha(alpha, 6).unwrap();
        for m in 0..6 {
            assert_close(
                s.measured_annulus_mass(m),
                alpha * (1.0 - alpha).powi(m as i32),
                1e-14,
            );
        }
    }

    #[test]
    fn salpha_rejects_bad_parameters() {
        assert!(build_salpha(0.0, 3).is_err());
        assert!(build_salpha(1.0, 3).is_err());
        assert!(build_salpha(0.5, 0).is_err());
        assert!(matches!(build_salpha(0.5, 23), Err(Error::TooLarge(_))));
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let t = TreeSpace::uniform(2, 2).unwrap();
        let phi = LeafFunction::new(&t, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = LeafFunction::new(&t, vec![0.5, 0.5, 2.0, 2.0]).unwrap();
        let text = tree_to_json(&t, &[("phi", &phi), ("w", &w)]).unwrap();
        let (t2, funcs) = tree_from_json(&text).unwrap();
        assert_eq!(t2.node_count(), t.node_count());
        assert_eq!(funcs["phi"].values(), phi.values());
        assert_eq!(funcs["w"].values(), w.values());
        for i in 0..t.node_count() {
            assert_eq!(t2.measure(i), t.measure(i));
            assert_eq!(t2.children(i), t.children(i));
        }
    }

    #[test]
    fn json_rejects_invalid_trees() {
        let bad = r#"{"arity_children": [[1]], "measure": [1.0]}"#;
        assert!(tree_from_json(bad).is_err());
        let bad = r#"{"arity_children": [[1,2],[],[]], "measure": [1.0, 0.7, 0.7]}"#;
        assert!(matches!(tree_from_json(bad), Err(Error::Measure(_))));
        let bad = r#"{"arity_children": [[1,2],[],[]], "measure": [1.0,0.5,0.5], "leaf_values": {"phi": [1.0]}}"#;
        assert!(matches!(tree_from_json(bad), Err(Error::Structure(_))));
    }
}
