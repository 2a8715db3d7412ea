//! Property-based invariants: structural laws that must hold for *every*
//! input, driven by proptest rather than fixed seeds.

use proptest::prelude::*;

use bellmax::bellman::{bellman_unweighted, doob_constant, omega_p, BellmanPoint};
use bellmax::step::{
    decreasing_rearrangement, delta_w, hardy_average, integrate, moment_pair, PiecewisePower,
};
use bellmax::tree::{maximal_function, moment, LeafFunction};
use bellmax::verify::{fmt_sig, random_instance, sub_seed, VerificationReport};
use bellmax::weight::muckenhoupt_constant;

/// Builds a nonincreasing step function on `(0,1]` from raw proptest draws.
fn step_from_draws(mut values: Vec<f64>, gaps: Vec<f64>) -> PiecewisePower {
    values.sort_by(|a, b| b.total_cmp(a));
    let n = values.len();
    let total: f64 = gaps.iter().take(n).sum();
    let mut breaks = Vec::with_capacity(n + 1);
    breaks.push(0.0);
    let mut acc = 0.0;
    for gap in gaps.iter().take(n - 1) {
        acc += gap / total;
        breaks.push(acc);
    }
    breaks.push(1.0);
    PiecewisePower::from_steps(&breaks, &values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_inverts_its_polynomial(p in 1.05f64..20.0, y in 0.0f64..=1.0) {
        let z = omega_p(p, y).unwrap();
        prop_assert!(z >= 1.0 - 1e-12 && z <= p / (p - 1.0) + 1e-12);
        let back = z.powf(p - 1.0) * (p - (p - 1.0) * z);
        prop_assert!((back - y).abs() <= 1e-9 * y.abs().max(1.0));
    }

    #[test]
    fn omega_is_nonincreasing(p in 1.05f64..20.0, y1 in 0.0f64..=1.0, y2 in 0.0f64..=1.0) {
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        let zlo = omega_p(p, lo).unwrap();
        let zhi = omega_p(p, hi).unwrap();
        prop_assert!(zlo >= zhi - 1e-10);
    }

    #[test]
    fn unweighted_bound_sits_between_moment_and_doob(
        p in 1.1f64..6.0,
        moment in 0.1f64..50.0,
        s in 0.0f64..=1.0,
    ) {
        let mean = s * moment.powf(1.0 / p);
        let value = bellman_unweighted(&BellmanPoint::new(p, moment, mean).unwrap());
        let coarse = doob_constant(p).unwrap() * moment;
        prop_assert!(value >= moment * (1.0 - 1e-9));
        prop_assert!(value <= coarse * (1.0 + 1e-9));
    }

    #[test]
    fn maximal_function_dominates_and_is_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let (tree, phi, _) = random_instance(seed, 3, (0.0, 10.0), (0.5, 2.0)).unwrap();
        let ones = LeafFunction::ones(&tree);
        let m = maximal_function(&tree, &phi, &ones).unwrap();
        let max_phi = phi.values().iter().cloned().fold(0.0f64, f64::max);
        for (mv, pv) in m.values().iter().zip(phi.values()) {
            prop_assert!(*mv >= *pv - 1e-12);
            prop_assert!(*mv <= max_phi + 1e-12);
        }
        let scaled = LeafFunction::new(&tree, phi.values().iter().map(|v| c * v).collect()).unwrap();
        let ms = maximal_function(&tree, &scaled, &ones).unwrap();
        for (msv, mv) in ms.values().iter().zip(m.values()) {
            prop_assert!((msv - c * mv).abs() <= 1e-10 * (1.0 + msv.abs()));
        }
    }

    #[test]
    fn rearrangement_is_monotone_and_equimeasurable(seed in any::<u64>()) {
        let (tree, phi, _) = random_instance(seed, 3, (0.0, 10.0), (0.5, 2.0)).unwrap();
        let r = decreasing_rearrangement(&tree, &phi).unwrap();
        let step = r.step();
        let mut last = f64::INFINITY;
        for piece in step.pieces() {
            let v = piece.eval(0.5 * (piece.lo.max(1e-12) + piece.hi));
            prop_assert!(v <= last + 1e-12);
            last = v;
        }
        let ones = LeafFunction::ones(&tree);
        let mass = integrate(step, 0.0, 1.0).unwrap();
        let plain = moment(&tree, &phi, 1.0, &ones).unwrap();
        prop_assert!((mass - plain).abs() <= 1e-10 * plain.abs().max(1.0));
        let (sq, _) = moment_pair(step, &PiecewisePower::constant(1.0).unwrap(), 2.0).unwrap();
        let sq_tree = moment(&tree, &phi, 2.0, &ones).unwrap();
        prop_assert!((sq - sq_tree).abs() <= 1e-9 * sq_tree.abs().max(1.0));
    }

    #[test]
    fn hardy_average_dominates_nonincreasing_input(
        values in prop::collection::vec(0.05f64..10.0, 1..6),
        gaps in prop::collection::vec(0.05f64..1.0, 6),
        t in 0.01f64..=1.0,
    ) {
        let g = step_from_draws(values, gaps);
        let avg = hardy_average(&g).unwrap();
        let g_at = g.pieces().iter().find(|pc| t > pc.lo && t <= pc.hi).map(|pc| pc.eval(t)).unwrap();
        let avg_at = avg.pieces().iter().find(|pc| t > pc.lo && t <= pc.hi).map(|pc| pc.eval(t)).unwrap();
        prop_assert!(avg_at >= g_at - 1e-10 * g_at.abs().max(1.0));
        // The average at t equals (1/t) int_0^t g by construction.
        let direct = integrate(&g, 0.0, t).unwrap() / t;
        prop_assert!((avg_at - direct).abs() <= 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn hardy_energy_never_exceeds_the_plain_bellman_bound(
        values in prop::collection::vec(0.05f64..10.0, 1..6),
        gaps in prop::collection::vec(0.05f64..1.0, 6),
        p in 1.25f64..4.0,
    ) {
        let g = step_from_draws(values, gaps);
        let lebesgue = PiecewisePower::constant(1.0).unwrap();
        let (moment_p, mean) = moment_pair(&g, &lebesgue, p).unwrap();
        let bound = bellman_unweighted(&BellmanPoint::new(p, moment_p, mean).unwrap());
        let energy = delta_w(&g, &lebesgue, p).unwrap();
        prop_assert!(energy <= bound * (1.0 + 1e-8));
    }

    #[test]
    fn muckenhoupt_constant_is_scale_invariant_and_at_least_one(
        seed in any::<u64>(),
        c in 0.1f64..10.0,
        p in 1.25f64..4.0,
    ) {
        let (tree, _, w) = random_instance(seed, 3, (0.0, 10.0), (0.125, 8.0)).unwrap();
        let a = muckenhoupt_constant(&tree, &w, p).unwrap();
        prop_assert!(a >= 1.0 - 1e-12);
        let scaled = LeafFunction::new(&tree, w.values().iter().map(|v| c * v).collect()).unwrap();
        let a2 = muckenhoupt_constant(&tree, &scaled, p).unwrap();
        prop_assert!((a - a2).abs() <= 1e-9 * a);
    }

    #[test]
    fn sub_seeds_are_order_free_and_distinct(seed in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assert_eq!(sub_seed(seed, i), sub_seed(seed, i));
        if i != j {
            prop_assert_ne!(sub_seed(seed, i), sub_seed(seed, j));
        }
    }

    #[test]
    fn fmt_sig_round_trips_to_fifteen_digits(x in -1e12f64..1e12) {
        let text = fmt_sig(x);
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x.abs().max(1e-300), "{x} -> {text} -> {back}");
    }

    #[test]
    fn report_json_round_trips(seed in any::<u64>(), trials in 1usize..5) {
        let rep = bellmax::verify::doob_suite(trials, Some(2.0), 2, seed).unwrap();
        let text = rep.to_json_string().unwrap();
        let parsed = VerificationReport::from_json_str(&text).unwrap();
        prop_assert_eq!(parsed.name, rep.name);
        prop_assert_eq!(parsed.trials, rep.trials);
        prop_assert_eq!(parsed.lhs, rep.lhs);
        prop_assert_eq!(parsed.rhs, rep.rhs);
        prop_assert_eq!(parsed.pass, rep.pass);
    }
}
