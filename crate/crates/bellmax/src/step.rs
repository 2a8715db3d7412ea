//! Piecewise power-sum functions on `(0,1]` and the operations the
//! verification harness needs on them: decreasing rearrangement, the Hardy
//! averaging operator `g -> (1/t) int_0^t g`, and weighted integrals of
//! powers. Integrals are evaluated in closed form whenever the integrand is
//! again a power sum (single-term bases, small integer powers) and by
//! adaptive Gauss–Kronrod quadrature otherwise, with a geometric ladder and a
//! dominant-term tail bound near the left endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Budget};
use crate::tree::{LeafFunction, TreeSpace};

/// One term `c * t^e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub c: f64,
    pub e: f64,
}

/// One piece: the power sum `sum_k c_k t^(e_k)` on the interval `(lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<PowerTerm>,
}

impl Piece {
    /// Evaluates the power sum of this piece at `t` (the formula, regardless
    /// of whether `t` lies in the piece).
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for term in &self.terms {
            v += term.c * powe(t, term.e);
        }
        v
    }
}

/// `t^e` with the convention `t^0 = 1` exactly.
fn powe(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        t.powf(e)
    }
}

/// A function on `(0,1]` given piecewise by power sums, with validated
/// nonnegativity / monotonicity claims.
///
/// Pieces cover `(0,1]` contiguously: the first piece starts at 0 and the
/// last ends at 1. The two flags are *claims* checked at construction
/// (analytically for single-term pieces, by dense sampling otherwise); many
/// operations require them (e.g. the Hardy average needs `nonneg`).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePower {
    pieces: Vec<Piece>,
    nonneg: bool,
    nonincreasing: bool,
}

/// Absolute tolerance (relative to the piece scale) for flag validation.
const FLAG_TOL: f64 = 1e-12;

/// Samples per multi-term piece when validating flags.
const FLAG_SAMPLES: usize = 1 << 10;

impl PiecewisePower {
    /// Builds a function from explicit pieces, validating structure and the
    /// claimed flags.
    pub fn new(pieces: Vec<Piece>, nonneg: bool, nonincreasing: bool) -> Result<Self> {
        let mut pieces = pieces;
        if pieces.is_empty() {
            return Err(Error::Structure("a piecewise function needs at least one piece".into()));
        }
        if pieces[0].lo.abs() > 1e-12 {
            return Err(Error::Structure(format!(
                "the first piece must start at 0 (got {})",
                pieces[0].lo
            )));
        }
        pieces[0].lo = 0.0;
        let last = pieces.len() - 1;
        if (pieces[last].hi - 1.0).abs() > 1e-12 {
            return Err(Error::Structure(format!(
                "the last piece must end at 1 (got {})",
                pieces[last].hi
            )));
        }
        pieces[last].hi = 1.0;
        for i in 1..pieces.len() {
            let prev_hi = pieces[i - 1].hi;
            if (pieces[i].lo - prev_hi).abs() > 1e-12 {
                return Err(Error::Structure(format!(
                    "piece {i} starts at {} but piece {} ends at {prev_hi}",
                    pieces[i].lo,
                    i - 1
                )));
            }
            pieces[i].lo = prev_hi;
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.lo < p.hi) {
                return Err(Error::Structure(format!(
                    "piece {i} has empty interval ({}, {}]",
                    p.lo, p.hi
                )));
            }
            for term in &p.terms {
                if !term.c.is_finite() || !term.e.is_finite() {
                    return Err(Error::Structure(format!(
                        "piece {i} has a non-finite term ({} * t^{})",
                        term.c, term.e
                    )));
                }
            }
        }
        let out = PiecewisePower { pieces, nonneg, nonincreasing };
        out.validate_flags()?;
        Ok(out)
    }

    /// Internal constructor for functions whose flags hold by construction.
    pub(crate) fn from_validated_parts(
        pieces: Vec<Piece>,
        nonneg: bool,
        nonincreasing: bool,
    ) -> Self {
        PiecewisePower { pieces, nonneg, nonincreasing }
    }

    /// The constant function.
    pub fn constant(c: f64) -> Result<Self> {
        Self::single_power(c, 0.0)
    }

    /// The single power `c * t^e` on all of `(0,1]`.
    pub fn single_power(c: f64, e: f64) -> Result<Self> {
        let nonneg = c >= 0.0;
        let nonincreasing = c * e <= 0.0;
        Self::new(
            vec![Piece { lo: 0.0, hi: 1.0, terms: vec![PowerTerm { c, e }] }],
            nonneg,
            nonincreasing,
        )
    }

    /// A step function: `values[i]` on `(breaks[i], breaks[i+1]]`, where
    /// `breaks` runs from 0 to 1. Flags are computed, not claimed.
    pub fn from_steps(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::Structure(format!(
                "{} breakpoints do not delimit {} step values",
                breaks.len(),
                values.len()
            )));
        }
        let pieces: Vec<Piece> = values
            .iter()
            .zip(breaks.windows(2))
            .map(|(&v, w)| Piece { lo: w[0], hi: w[1], terms: vec![PowerTerm { c: v, e: 0.0 }] })
            .collect();
        let nonneg = values.iter().all(|&v| v >= 0.0);
        let nonincreasing = values.windows(2).all(|w| w[0] >= w[1]);
        Self::new(pieces, nonneg, nonincreasing)
    }

    /// The pieces, in order.
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// All breakpoints, from 0 to 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pieces.len() + 1);
        out.push(0.0);
        out.extend(self.pieces.iter().map(|p| p.hi));
        out
    }

    /// Whether the function was validated as nonnegative.
    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    /// Whether the function was validated as nonincreasing.
    pub fn is_nonincreasing(&self) -> bool {
        self.nonincreasing
    }

    /// Index of the piece whose interval `(lo, hi]` contains `t`.
    fn piece_index(&self, t: f64) -> usize {
        let idx = self.pieces.partition_point(|p| p.hi < t);
        idx.min(self.pieces.len() - 1)
    }

    /// Evaluates the function at `t` in `(0,1]`.
    pub fn value(&self, t: f64) -> f64 {
        assert!(t > 0.0 && t <= 1.0, "piecewise functions live on (0,1], got t={t}");
        self.pieces[self.piece_index(t)].eval(t)
    }

    /// Multiplies the function by a nonnegative factor, preserving flags.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::Domain(format!("scale factor must be nonnegative, got {factor}")));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: p.lo,
                hi: p.hi,
                terms: p.terms.iter().map(|t| PowerTerm { c: factor * t.c, e: t.e }).collect(),
            })
            .collect();
        Ok(PiecewisePower {
            pieces,
            nonneg: self.nonneg,
            nonincreasing: self.nonincreasing || factor == 0.0,
        })
    }

    /// Serializes to the stable JSON layout
    /// (`{"pieces": [{"lo","hi","terms":[{"c","e"}]}], "nonneg", "nonincreasing"}`).
    pub fn to_json_string(&self) -> Result<String> {
        let doc = PiecewiseJson {
            pieces: self.pieces.clone(),
            nonneg: self.nonneg,
            nonincreasing: self.nonincreasing,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the JSON layout of [`Self::to_json_string`], re-validating
    /// everything including the claimed flags.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PiecewiseJson = serde_json::from_str(text)?;
        Self::new(doc.pieces, doc.nonneg, doc.nonincreasing)
    }

    fn validate_flags(&self) -> Result<()> {
        if !self.nonneg && !self.nonincreasing {
            return Ok(());
        }
        for (i, piece) in self.pieces.iter().enumerate() {
            let nonzero: Vec<&PowerTerm> = piece.terms.iter().filter(|t| t.c != 0.0).collect();
            match nonzero.len() {
                0 => {} // identically zero on the piece
                1 => {
                    let t = nonzero[0];
                    if self.nonneg && t.c < 0.0 {
                        return Err(Error::Domain(format!(
                            "piece {i} is negative but the function claims nonnegativity"
                        )));
                    }
                    if self.nonincreasing && t.c * t.e > 0.0 {
                        return Err(Error::Domain(format!(
                            "piece {i} is increasing but the function claims to be nonincreasing"
                        )));
                    }
                }
                _ => self.validate_piece_by_sampling(i)?,
            }
        }
        if self.nonincreasing {
            // Junctions: the next piece may not jump above the previous one.
            for i in 1..self.pieces.len() {
                let t = self.pieces[i].lo;
                let left = self.pieces[i - 1].eval(t);
                let right = self.pieces[i].eval(t);
                let scale = left.abs().max(right.abs()).max(1.0);
                if right > left + FLAG_TOL * scale {
                    return Err(Error::Domain(format!(
                        "function jumps upward at breakpoint {t} but claims to be nonincreasing"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_piece_by_sampling(&self, i: usize) -> Result<()> {
        let piece = &self.pieces[i];
        let mut prev = f64::INFINITY;
        let mut max_abs: f64 = 1.0;
        let mut min_val = f64::INFINITY;
        let mut monotone_ok = true;
        for k in 1..=FLAG_SAMPLES {
            let t = piece.lo + (piece.hi - piece.lo) * (k as f64) / (FLAG_SAMPLES as f64);
            let v = piece.eval(t);
            max_abs = max_abs.max(v.abs());
            min_val = min_val.min(v);
            if v > prev + FLAG_TOL * max_abs {
                monotone_ok = false;
            }
            prev = v;
        }
        if self.nonneg && min_val < -FLAG_TOL * max_abs {
            return Err(Error::Domain(format!(
                "piece {i} is negative (sampled minimum {min_val}) but the function claims nonnegativity"
            )));
        }
        if self.nonincreasing && !monotone_ok {
            return Err(Error::Domain(format!(
                "piece {i} increases but the function claims to be nonincreasing"
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PiecewiseJson {
    pieces: Vec<Piece>,
    nonneg: bool,
    nonincreasing: bool,
}

// ---------------------------------------------------------------------------
// Decreasing rearrangement
// ---------------------------------------------------------------------------

/// The decreasing rearrangement of a leaf function, with the
/// (value, mass) pairs it was assembled from.
#[derive(Debug, Clone)]
pub struct RearrangementResult {
    step: PiecewisePower,
    pairs: Vec<(f64, f64)>,
}

impl RearrangementResult {
    /// The rearranged step function on `(0,1]` (nonincreasing, nonnegative).
    pub fn step(&self) -> &PiecewisePower {
        &self.step
    }

    /// Per-leaf (value, mass) pairs sorted by decreasing value, before equal
    /// values are merged into single pieces.
    pub fn source_pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }
}

/// Sorts the leaf values of `phi` by decreasing value and lays them out on
/// `(0,1]` as a step function with the leaf measures as piece lengths.
/// Exactly equal values are merged into one piece; ties keep leaf order, so
/// the result is deterministic.
pub fn decreasing_rearrangement(tree: &TreeSpace, phi: &LeafFunction) -> Result<RearrangementResult> {
    phi.check_tree(tree)?;
    let mut pairs: Vec<(f64, f64)> = phi
        .values()
        .iter()
        .zip(tree.leaves())
        .map(|(&v, &leaf)| (v, tree.measure(leaf)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut values = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    for &(v, m) in &pairs {
        if values.last() == Some(&v) {
            *masses.last_mut().expect("values and masses stay in step") += m;
        } else {
            values.push(v);
            masses.push(m);
        }
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Measure(format!(
            "leaf measures sum to {total}, not 1; cannot lay the rearrangement on (0,1]"
        )));
    }
    let mut breaks = Vec::with_capacity(values.len() + 1);
    breaks.push(0.0);
    let mut cum = 0.0;
    for &m in &masses {
        cum += m;
        breaks.push(cum);
    }
    *breaks.last_mut().expect("at least one mass") = 1.0;

    let pieces: Vec<Piece> = values
        .iter()
        .zip(breaks.windows(2))
        .map(|(&v, w)| Piece { lo: w[0], hi: w[1], terms: vec![PowerTerm { c: v, e: 0.0 }] })
        .collect();
    Ok(RearrangementResult {
        step: PiecewisePower::from_validated_parts(pieces, true, true),
        pairs,
    })
}

// ---------------------------------------------------------------------------
// Hardy averaging
// ---------------------------------------------------------------------------

/// The Hardy averaging operator `(A g)(t) = (1/t) int_0^t g(s) ds`, computed
/// in closed form.
///
/// Requires `g` to be flagged nonnegative and integrable at 0 (all nonzero
/// first-piece exponents above -1). No piece of `g` may contain a nonzero
/// term with exponent exactly -1: the average of such a term is a logarithm,
/// not a power sum. The result has the same breakpoints as `g`, each piece
/// gaining at most one extra `t^-1` term, and is nonincreasing whenever `g`
/// is.
pub fn hardy_average(g: &PiecewisePower) -> Result<PiecewisePower> {
    if !g.is_nonneg() {
        return Err(Error::Domain("the Hardy average requires a nonnegative function".into()));
    }
    for (i, piece) in g.pieces().iter().enumerate() {
        for term in &piece.terms {
            if term.c != 0.0 && term.e == -1.0 {
                return Err(Error::Domain(format!(
                    "piece {i} has exponent -1; its running average is a logarithm, not a power sum"
                )));
            }
            if i == 0 && term.c != 0.0 && term.e <= -1.0 {
                return Err(Error::NonIntegrable(format!(
                    "exponent {} on the first piece makes g non-integrable at 0",
                    term.e
                )));
            }
        }
    }

    let mut out_pieces = Vec::with_capacity(g.pieces().len());
    let mut acc = 0.0; // int_0^(piece.lo) g
    for piece in g.pieces() {
        let mut terms: Vec<PowerTerm> = Vec::with_capacity(piece.terms.len() + 1);
        let mut head = acc; // coefficient of t^-1: acc minus the primitive at lo
        for term in &piece.terms {
            if term.c == 0.0 {
                continue;
            }
            let prim_c = term.c / (term.e + 1.0);
            terms.push(PowerTerm { c: prim_c, e: term.e });
            head -= prim_c * powe(piece.lo, term.e + 1.0);
            acc += prim_c * (powe(piece.hi, term.e + 1.0) - powe(piece.lo, term.e + 1.0));
        }
        if head != 0.0 {
            terms.push(PowerTerm { c: head, e: -1.0 });
        }
        out_pieces.push(Piece { lo: piece.lo, hi: piece.hi, terms });
    }
    Ok(PiecewisePower::from_validated_parts(out_pieces, true, g.is_nonincreasing()))
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Closed-form `int_a^b c t^s dt`; requires `s > -1` when `a == 0`.
fn power_integral(c: f64, s: f64, a: f64, b: f64) -> Result<f64> {
    if c == 0.0 {
        return Ok(0.0);
    }
    if s == -1.0 {
        if a <= 0.0 {
            return Err(Error::NonIntegrable("exponent -1 at the left endpoint".into()));
        }
        return Ok(c * (b / a).ln());
    }
    if a == 0.0 && s < -1.0 {
        return Err(Error::NonIntegrable(format!("exponent {s} <= -1 at the left endpoint")));
    }
    let sp = s + 1.0;
    Ok(c * (powe(b, sp) - powe(a, sp)) / sp)
}

/// Exact integral `int_lo^hi f(t) dt` of a piecewise power sum.
///
/// Fails with a non-integrability error if `lo == 0` and the first piece has
/// a nonzero term with exponent at or below -1.
pub fn integrate(f: &PiecewisePower, lo: f64, hi: f64) -> Result<f64> {
    check_bounds(lo, hi)?;
    let mut total = 0.0;
    for piece in f.pieces() {
        let a = lo.max(piece.lo);
        let b = hi.min(piece.hi);
        if b <= a {
            continue;
        }
        for term in &piece.terms {
            total += power_integral(term.c, term.e, a, b)?;
        }
    }
    Ok(total)
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Domain(format!(
            "integration bounds must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Maximum integrand evaluations per composite integral.
const COMPOSITE_BUDGET: usize = 1_000_000;

/// Relative accuracy target of the composite integral.
const COMPOSITE_REL_TOL: f64 = 1e-10;

/// Quadrature segments touching 0 are subdivided geometrically down to here;
/// below it a dominant-term tail bound takes over.
const LADDER_FLOOR: f64 = 1e-15;

/// `int_lo^hi base(t)^q * weight(t) dt` for a nonnegative piecewise power-sum
/// `base` and arbitrary piecewise power-sum `weight`.
///
/// Evaluation strategy, per merged piece segment: exact closed form when the
/// base has a single term or `q` is a small integer (multinomial expansion);
/// otherwise adaptive Gauss–Kronrod quadrature to relative accuracy about
/// `1e-10`, with geometric subdivision plus a dominant-term tail estimate on
/// the segment touching 0. Divergence at 0 is detected by exponent
/// bookkeeping (`q * e_base + e_weight <= -1` on the dominant first-piece
/// terms). If the evaluation budget runs out or the tail bound cannot meet
/// tolerance, a convergence error carrying the achieved estimate is returned.
pub fn integrate_power_composite(
    base: &PiecewisePower,
    q: f64,
    weight: &PiecewisePower,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    check_bounds(lo, hi)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Domain(format!("power q must be positive and finite, got {q}")));
    }
    if !base.is_nonneg() {
        return Err(Error::Domain(
            "the base of a composite integral must be flagged nonnegative".into(),
        ));
    }
    if lo == hi {
        return Ok(0.0);
    }

    // Divergence bookkeeping at the left endpoint.
    if lo == 0.0 {
        let eb = dominant_exponent(&base.pieces()[0]);
        let ew = dominant_exponent(&weight.pieces()[0]);
        if let (Some(eb), Some(ew)) = (eb, ew) {
            if q * eb + ew <= -1.0 {
                return Err(Error::NonIntegrable(format!(
                    "dominant exponent {} of base^q * weight at 0 is not integrable",
                    q * eb + ew
                )));
            }
        }
    }

    // Merged segment boundaries.
    let mut cuts: Vec<f64> = vec![lo, hi];
    for bp in base.breakpoints().into_iter().chain(weight.breakpoints()) {
        if bp > lo && bp < hi {
            cuts.push(bp);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    enum SegPlan<'a> {
        Exact(f64),
        Quad { a: f64, b: f64, bterms: &'a [PowerTerm], wterms: &'a [PowerTerm], rough: f64 },
    }

    let mut budget = Budget::new(COMPOSITE_BUDGET);
    let mut plans = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let bterms = &base.pieces()[base.piece_index(b)].terms;
        let wterms = &weight.pieces()[weight.piece_index(b)].terms;
        let n_base = bterms.iter().filter(|t| t.c != 0.0).count();
        let n_weight = wterms.iter().filter(|t| t.c != 0.0).count();
        if n_base == 0 || n_weight == 0 {
            plans.push(SegPlan::Exact(0.0));
            continue;
        }
        if n_base == 1 {
            let t = bterms.iter().find(|t| t.c != 0.0).expect("n_base == 1");
            if t.c > 0.0 {
                let mut v = 0.0;
                let cq = t.c.powf(q);
                for wt in wterms {
                    v += power_integral(cq * wt.c, q * t.e + wt.e, a, b)?;
                }
                plans.push(SegPlan::Exact(v));
                continue;
            }
        }
        if q.fract() == 0.0 && (1.0..=6.0).contains(&q) && n_base <= 4 {
            let expanded = expand_integer_power(bterms, q as u32);
            let mut v = 0.0;
            for bt in &expanded {
                for wt in wterms {
                    v += power_integral(bt.c * wt.c, bt.e + wt.e, a, b)?;
                }
            }
            plans.push(SegPlan::Exact(v));
            continue;
        }
        // Rough scale estimate for tolerance allocation.
        let rough = if a == 0.0 {
            // Dominant-term estimate over (0, b].
            let eb = dominant_exponent_value(bterms);
            let ew = dominant_exponent_value(wterms);
            match (eb, ew) {
                (Some((cb, eb)), Some((cw, ew))) if cb > 0.0 => {
                    power_integral(cb.powf(q) * cw, q * eb + ew, 0.0, b).unwrap_or(0.0)
                }
                _ => 0.0,
            }
        } else {
            match quad_rough(bterms, q, wterms, a, b, &mut budget) {
                Some(v) => v,
                None => {
                    return Err(Error::Convergence {
                        message: "evaluation budget exhausted during scale estimation".into(),
                        achieved: f64::NAN,
                    })
                }
            }
        };
        plans.push(SegPlan::Quad { a, b, bterms, wterms, rough });
    }

    let scale: f64 = plans
        .iter()
        .map(|p| match p {
            SegPlan::Exact(v) => v.abs(),
            SegPlan::Quad { rough, .. } => rough.abs(),
        })
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let n_quad = plans.iter().filter(|p| matches!(p, SegPlan::Quad { .. })).count().max(1);
    let abs_tol = COMPOSITE_REL_TOL * scale / (2.0 * n_quad as f64);

    let mut total = 0.0;
    for plan in &plans {
        match plan {
            SegPlan::Exact(v) => total += v,
            SegPlan::Quad { a, b, bterms, wterms, .. } => {
                let mut f = |t: f64| eval_terms(bterms, t).powf(q) * eval_terms(wterms, t);
                if *a > 0.0 {
                    match quad::adaptive(&mut f, *a, *b, 1e-11, abs_tol, &mut budget) {
                        Ok(v) => total += v,
                        Err(inc) => {
                            return Err(Error::Convergence {
                                message: format!(
                                    "evaluation budget of {COMPOSITE_BUDGET} exhausted on segment [{a}, {b}]"
                                ),
                                achieved: total + inc.estimate,
                            })
                        }
                    }
                } else {
                    total += ladder_segment(bterms, q, wterms, *b, abs_tol, &mut budget, total)?;
                }
            }
        }
    }
    Ok(total)
}

fn eval_terms(terms: &[PowerTerm], t: f64) -> f64 {
    let mut v = 0.0;
    for term in terms {
        v += term.c * powe(t, term.e);
    }
    v
}

/// Smallest exponent among nonzero terms.
fn dominant_exponent(piece: &Piece) -> Option<f64> {
    piece.terms.iter().filter(|t| t.c != 0.0).map(|t| t.e).min_by(f64::total_cmp)
}

/// Total coefficient and exponent of the dominant (smallest-exponent) part.
fn dominant_exponent_value(terms: &[PowerTerm]) -> Option<(f64, f64)> {
    let e = terms.iter().filter(|t| t.c != 0.0).map(|t| t.e).min_by(f64::total_cmp)?;
    let c = terms.iter().filter(|t| t.c != 0.0 && t.e == e).map(|t| t.c).sum();
    Some((c, e))
}

/// Expands `(sum terms)^q` for a small integer `q` by repeated multiplication,
/// merging exactly equal exponents.
fn expand_integer_power(terms: &[PowerTerm], q: u32) -> Vec<PowerTerm> {
    let base: Vec<PowerTerm> = terms.iter().filter(|t| t.c != 0.0).copied().collect();
    let mut acc = vec![PowerTerm { c: 1.0, e: 0.0 }];
    for _ in 0..q {
        let mut next: Vec<PowerTerm> = Vec::with_capacity(acc.len() * base.len());
        for x in &acc {
            for y in &base {
                next.push(PowerTerm { c: x.c * y.c, e: x.e + y.e });
            }
        }
        next.sort_by(|a, b| a.e.total_cmp(&b.e));
        let mut merged: Vec<PowerTerm> = Vec::with_capacity(next.len());
        for t in next {
            match merged.last_mut() {
                Some(last) if last.e == t.e => last.c += t.c,
                _ => merged.push(t),
            }
        }
        acc = merged;
    }
    acc
}

/// One rough Gauss–Kronrod pass for tolerance allocation.
fn quad_rough(
    bterms: &[PowerTerm],
    q: f64,
    wterms: &[PowerTerm],
    a: f64,
    b: f64,
    budget: &mut Budget,
) -> Option<f64> {
    let mut f = |t: f64| eval_terms(bterms, t).powf(q) * eval_terms(wterms, t);
    match quad::adaptive(&mut f, a, b, 0.5, f64::INFINITY, budget) {
        Ok(v) => Some(v),
        Err(_) => None,
    }
}

/// Quadrature for a segment `(0, b]`: geometric subdivision down to
/// [`LADDER_FLOOR`], then a dominant-term bracket for the remaining tail.
fn ladder_segment(
    bterms: &[PowerTerm],
    q: f64,
    wterms: &[PowerTerm],
    b: f64,
    abs_tol: f64,
    budget: &mut Budget,
    partial: f64,
) -> Result<f64> {
    let mut f = |t: f64| eval_terms(bterms, t).powf(q) * eval_terms(wterms, t);
    let mut total = 0.0;
    let mut hi = b;
    while hi > LADDER_FLOOR {
        let lo = (hi / 2.0).max(LADDER_FLOOR);
        match quad::adaptive(&mut f, lo, hi, 1e-11, abs_tol / 2.0, budget) {
            Ok(v) => total += v,
            Err(inc) => {
                return Err(Error::Convergence {
                    message: format!(
                        "evaluation budget of {COMPOSITE_BUDGET} exhausted near 0 (reached t = {lo})"
                    ),
                    achieved: partial + total + inc.estimate,
                })
            }
        }
        hi = lo;
    }

    // Tail (0, hi]: bracket base^q * weight between dominant-term bounds.
    let cut = hi;
    let (cb, eb) = dominant_exponent_value(bterms).expect("segment has nonzero base terms");
    let (cw, ew) = dominant_exponent_value(wterms).expect("segment has nonzero weight terms");
    if cb <= 0.0 {
        return Err(Error::Convergence {
            message: "dominant base coefficient is not positive near 0".into(),
            achieved: partial + total,
        });
    }
    let mut base_rest = 0.0; // sum of |c_i| cut^(e_i - eb) over non-dominant terms
    for t in bterms {
        if t.c != 0.0 && t.e != eb {
            base_rest += t.c.abs() * powe(cut, t.e - eb);
        }
    }
    let mut weight_rest = 0.0;
    for t in wterms {
        if t.c != 0.0 && t.e != ew {
            weight_rest += t.c.abs() * powe(cut, t.e - ew);
        }
    }
    let s = q * eb + ew; // dominant exponent of the integrand; s > -1 by bookkeeping
    let mass = powe(cut, s + 1.0) / (s + 1.0);
    let up = (cb + base_rest).powf(q) * (cw.abs() + weight_rest) * mass;
    let low_base = (cb - base_rest).max(0.0).powf(q);
    let low_weight = (cw.abs() - weight_rest).max(0.0);
    let low = low_base * low_weight * mass;
    let estimate = cw.signum() * 0.5 * (up + low);
    let err = 0.5 * (up - low);
    if err > abs_tol / 2.0 {
        return Err(Error::Convergence {
            message: format!(
                "tail below t = {cut} cannot be bracketed to tolerance (error bound {err})"
            ),
            achieved: partial + total + estimate,
        });
    }
    Ok(total + estimate)
}

/// The weighted p-energy of the averaged function:
/// `Delta_w(g) = int_0^1 ((1/t) int_0^t g)^p wss(t) dt`.
///
/// `g` must be flagged nonnegative and nonincreasing; `wss` nonnegative.
pub fn delta_w(g: &PiecewisePower, wss: &PiecewisePower, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    if !g.is_nonneg() || !g.is_nonincreasing() {
        return Err(Error::Domain(
            "delta_w expects a nonnegative, nonincreasing rearranged function".into(),
        ));
    }
    if !wss.is_nonneg() {
        return Err(Error::Domain("delta_w expects a nonnegative weight".into()));
    }
    let averaged = hardy_average(g)?;
    integrate_power_composite(&averaged, p, wss, 0.0, 1.0)
}

/// The mean and weighted p-moment of `g`: `(int g^p wss dt, int g dt)`.
pub fn moment_pair(g: &PiecewisePower, wss: &PiecewisePower, p: f64) -> Result<(f64, f64)> {
    let moment_p = integrate_power_composite(g, p, wss, 0.0, 1.0)?;
    let mean = integrate(g, 0.0, 1.0)?;
    Ok((moment_p, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn construction_validates_cover_and_flags() {
        // Gap between pieces.
        let bad = PiecewisePower::new(
            vec![
                Piece { lo: 0.0, hi: 0.4, terms: vec![PowerTerm { c: 1.0, e: 0.0 }] },
                Piece { lo: 0.5, hi: 1.0, terms: vec![PowerTerm { c: 1.0, e: 0.0 }] },
            ],
            true,
            true,
        );
        assert!(matches!(bad, Err(Error::Structure(_))));
        // Claimed nonnegative but negative.
        assert!(matches!(PiecewisePower::constant(-1.0), Ok(f) if !f.is_nonneg()));
        let bad = PiecewisePower::new(
            vec![Piece { lo: 0.0, hi: 1.0, terms: vec![PowerTerm { c: -1.0, e: 0.0 }] }],
            true,
            false,
        );
        assert!(matches!(bad, Err(Error::Domain(_))));
        // Claimed nonincreasing but increasing (single term, analytic check).
        let bad = PiecewisePower::new(
            vec![Piece { lo: 0.0, hi: 1.0, terms: vec![PowerTerm { c: 1.0, e: 2.0 }] }],
            true,
            true,
        );
        assert!(matches!(bad, Err(Error::Domain(_))));
        // Claimed nonincreasing but jumps upward at a breakpoint.
        let bad = PiecewisePower::from_steps(&[0.0, 0.5, 1.0], &[1.0, 2.0]);
        assert!(bad.is_ok());
        assert!(!bad.unwrap().is_nonincreasing());
        // Multi-term sampled check: 1 - t is nonincreasing and nonnegative.
        let ok = PiecewisePower::new(
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                terms: vec![PowerTerm { c: 1.0, e: 0.0 }, PowerTerm { c: -1.0, e: 1.0 }],
            }],
            true,
            true,
        );
        assert!(ok.is_ok());
        // Multi-term sampled check: t - 1/2 is negative near 0.
        let bad = PiecewisePower::new(
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                terms: vec![PowerTerm { c: 1.0, e: 1.0 }, PowerTerm { c: -0.5, e: 0.0 }],
            }],
            true,
            false,
        );
        assert!(matches!(bad, Err(Error::Domain(_))));
    }

    #[test]
    fn value_and_breakpoints() {
        let f = PiecewisePower::from_steps(&[0.0, 0.25, 1.0], &[3.0, 1.0]).unwrap();
        assert_eq!(f.value(0.1), 3.0);
        assert_eq!(f.value(0.25), 3.0); // pieces are (lo, hi]
        assert_eq!(f.value(0.26), 1.0);
        assert_eq!(f.value(1.0), 1.0);
        assert_eq!(f.breakpoints(), vec![0.0, 0.25, 1.0]);
        let g = PiecewisePower::single_power(2.0, -0.5).unwrap();
        assert_close(g.value(0.25), 4.0, 1e-15);
        assert!(g.is_nonneg() && g.is_nonincreasing());
    }

    #[test]
    fn json_round_trip() {
        let f = PiecewisePower::new(
            vec![
                Piece { lo: 0.0, hi: 0.5, terms: vec![PowerTerm { c: 2.0, e: -0.25 }] },
                Piece { lo: 0.5, hi: 1.0, terms: vec![PowerTerm { c: 1.0, e: 0.0 }] },
            ],
            true,
            false,
        )
        .unwrap();
        let text = f.to_json_string().unwrap();
        let g = PiecewisePower::from_json_str(&text).unwrap();
        assert_eq!(f, g);
        // Lying flags are caught on the way back in.
        let bad = r#"{"pieces":[{"lo":0.0,"hi":1.0,"terms":[{"c":1.0,"e":2.0}]}],"nonneg":true,"nonincreasing":true}"#;
        assert!(PiecewisePower::from_json_str(bad).is_err());
    }

    #[test]
    fn integrate_closed_forms() {
        let f = PiecewisePower::single_power(1.0, -0.5).unwrap();
        assert_close(integrate(&f, 0.0, 1.0).unwrap(), 2.0, 1e-14);
        let g = PiecewisePower::single_power(1.0, -1.0).unwrap();
        assert_close(integrate(&g, 0.5, 1.0).unwrap(), std::f64::consts::LN_2, 1e-15);
        assert!(matches!(integrate(&g, 0.0, 1.0), Err(Error::NonIntegrable(_))));
        assert_eq!(integrate(&f, 0.3, 0.3).unwrap(), 0.0);
        assert!(integrate(&f, -0.1, 1.0).is_err());
        assert!(integrate(&f, 0.4, 0.2).is_err());
    }

    #[test]
    fn rearrangement_hand_values() {
        let t = TreeSpace::from_children(
            vec![vec![1, 2, 3], vec![], vec![], vec![]],
            vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        let phi = LeafFunction::new(&t, vec![3.0, 1.0, 2.0]).unwrap();
        let r = decreasing_rearrangement(&t, &phi).unwrap();
        let s = r.step();
        assert_close(s.value(0.2), 3.0, 0.0);
        assert_close(s.value(0.5), 2.0, 0.0);
        assert_close(s.value(0.9), 1.0, 0.0);
        assert_eq!(r.source_pairs().len(), 3);

        let t = TreeSpace::from_children(
            vec![vec![1, 2, 3], vec![], vec![], vec![]],
            vec![1.0, 0.5, 0.25, 0.25],
        )
        .unwrap();
        let phi = LeafFunction::new(&t, vec![0.0, 5.0, 5.0]).unwrap();
        let r = decreasing_rearrangement(&t, &phi).unwrap();
        let s = r.step();
        assert_eq!(s.pieces().len(), 2); // equal values merged
        assert_close(s.value(0.5), 5.0, 0.0);
        assert_close(s.value(0.75), 0.0, 0.0);
        assert!(s.is_nonneg() && s.is_nonincreasing());
    }

    #[test]
    fn rearrangement_preserves_moments() {
        let t = TreeSpace::uniform(3, 2).unwrap();
        let vals: Vec<f64> = (0..8).map(|i| ((i * 29 + 3) % 7) as f64).collect();
        let phi = LeafFunction::new(&t, vals).unwrap();
        let ones = LeafFunction::ones(&t);
        let r = decreasing_rearrangement(&t, &phi).unwrap();
        for q in [1.0, 2.0, 3.5] {
            let tree_side = crate::tree::moment(&t, &phi, q, &ones).unwrap();
            let line_side =
                integrate_power_composite(r.step(), q, &PiecewisePower::constant(1.0).unwrap(), 0.0, 1.0)
                    .unwrap();
            assert_close(tree_side, line_side, 1e-12 * tree_side.max(1.0));
        }
    }

    #[test]
    fn hardy_average_hand_values() {
        // g = 2 on (0, 1/2], 0 on (1/2, 1]: A g = 2 then 1/t.
        let g = PiecewisePower::from_steps(&[0.0, 0.5, 1.0], &[2.0, 0.0]).unwrap();
        let h = hardy_average(&g).unwrap();
        assert_close(h.value(0.3), 2.0, 0.0);
        assert_close(h.value(0.75), 1.0 / 0.75, 1e-15);
        assert_close(h.value(1.0), 1.0, 1e-15);
        assert!(h.is_nonincreasing());
        // The first piece never gains a t^-1 term.
        assert_eq!(h.pieces()[0].terms.len(), 1);

        // A power: g = t^(-1/2) averages to 2 t^(-1/2).
        let g = PiecewisePower::single_power(1.0, -0.5).unwrap();
        let h = hardy_average(&g).unwrap();
        assert_eq!(h.pieces().len(), 1);
        assert_close(h.value(0.25), 2.0 * 2.0, 1e-15);

        // The extremal family: g = f (1-a) t^(-a) averages to f t^(-a).
        let (f, a) = (1.7, 0.3);
        let g = PiecewisePower::single_power(f * (1.0 - a), -a).unwrap();
        let h = hardy_average(&g).unwrap();
        for t in [0.1, 0.33, 0.9, 1.0] {
            assert_close(h.value(t), f * t.powf(-a), 1e-13);
        }
    }

    #[test]
    fn hardy_average_rejects_bad_inputs() {
        let g = PiecewisePower::single_power(1.0, -1.5).unwrap();
        assert!(matches!(hardy_average(&g), Err(Error::NonIntegrable(_))));
        let signed = PiecewisePower::single_power(-1.0, 0.0).unwrap();
        assert!(matches!(hardy_average(&signed), Err(Error::Domain(_))));
        let log_case = PiecewisePower::new(
            vec![
                Piece { lo: 0.0, hi: 0.5, terms: vec![PowerTerm { c: 1.0, e: 0.0 }] },
                Piece { lo: 0.5, hi: 1.0, terms: vec![PowerTerm { c: 0.5, e: -1.0 }] },
            ],
            true,
            false,
        )
        .unwrap();
        assert!(matches!(hardy_average(&log_case), Err(Error::Domain(_))));
    }

    #[test]
    fn composite_single_term_is_exact() {
        // int (t^-1/4)^2 * t^1/2 dt = int 1 dt = 1.
        let base = PiecewisePower::single_power(1.0, -0.25).unwrap();
        let w = PiecewisePower::single_power(1.0, 0.5).unwrap();
        assert_close(integrate_power_composite(&base, 2.0, &w, 0.0, 1.0).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn composite_integer_power_expands() {
        // int (1 + t)^2 dt = 7/3.
        let base = PiecewisePower::new(
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                terms: vec![PowerTerm { c: 1.0, e: 0.0 }, PowerTerm { c: 1.0, e: 1.0 }],
            }],
            true,
            false,
        )
        .unwrap();
        let one = PiecewisePower::constant(1.0).unwrap();
        assert_close(
            integrate_power_composite(&base, 2.0, &one, 0.0, 1.0).unwrap(),
            7.0 / 3.0,
            1e-14,
        );
    }

    #[test]
    fn composite_quadrature_path() {
        // int (1 + t)^2.5 dt = (2^3.5 - 1) / 3.5.
        let base = PiecewisePower::new(
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                terms: vec![PowerTerm { c: 1.0, e: 0.0 }, PowerTerm { c: 1.0, e: 1.0 }],
            }],
            true,
            false,
        )
        .unwrap();
        let one = PiecewisePower::constant(1.0).unwrap();
        let want = (2f64.powf(3.5) - 1.0) / 3.5;
        let got = integrate_power_composite(&base, 2.5, &one, 0.0, 1.0).unwrap();
        assert_close(got, want, 1e-10 * want);
    }

    #[test]
    fn composite_detects_divergence() {
        let base = PiecewisePower::single_power(1.0, -0.6).unwrap();
        let one = PiecewisePower::constant(1.0).unwrap();
        assert!(matches!(
            integrate_power_composite(&base, 2.0, &one, 0.0, 1.0),
            Err(Error::NonIntegrable(_))
        ));
    }

    #[test]
    fn delta_w_hand_values() {
        // g = 2 on (0,1/2], 0 after; w = 1, p = 2:
        // int (Ag)^2 = 4 * 1/2 + int_1/2^1 t^-2 dt = 2 + 1 = 3.
        let g = PiecewisePower::from_steps(&[0.0, 0.5, 1.0], &[2.0, 0.0]).unwrap();
        let one = PiecewisePower::constant(1.0).unwrap();
        assert_close(delta_w(&g, &one, 2.0).unwrap(), 3.0, 1e-14);

        // Constant g: averages to itself; delta is int g^p wss.
        let g = PiecewisePower::constant(1.0).unwrap();
        let wss = PiecewisePower::single_power(1.0, 0.5).unwrap();
        assert_close(delta_w(&g, &wss, 2.0).unwrap(), 2.0 / 3.0, 1e-14);

        // Flag requirements.
        let increasing = PiecewisePower::from_steps(&[0.0, 0.5, 1.0], &[1.0, 2.0]).unwrap();
        assert!(matches!(delta_w(&increasing, &one, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn moment_pair_matches_parts() {
        let g = PiecewisePower::single_power(0.7, -0.2).unwrap();
        let wss = PiecewisePower::single_power(2.0, 0.25).unwrap();
        let (big_f, little_f) = moment_pair(&g, &wss, 2.0).unwrap();
        // int (0.7 t^-0.2)^2 * 2 t^0.25 dt = 0.98 / 0.85; int g = 0.7/0.8.
        assert_close(big_f, 0.7 * 0.7 * 2.0 / 0.85, 1e-13);
        assert_close(little_f, 0.7 / 0.8, 1e-15);
    }
}
