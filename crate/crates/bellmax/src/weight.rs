//! Weights on trees and on `(0,1]`.
//!
//! Two notions of "good weight" drive the weighted maximal bounds:
//!
//! * On a finite tree, the Muckenhoupt-type constant
//!   `[w]_p = max_I w(I) sigma(I)^(p-1) / mu(I)^p` over all nodes `I`, where
//!   `sigma = w^(-1/(p-1))` is the dual weight. It is at least 1 by
//!   Hoelder's inequality and invariant under scaling of `w`.
//!
//! * On `(0,1]`, a nonnegative weight `wss` admits a *best pair* `(a, c)`
//!   when `u0(t) + c <= a r(t)` for all `t`, where
//!   `u0(t) = int_t^1 wss(s) / s^p ds` and `r(t) = wss(t) / t^(p-1)`,
//!   with `a = sup u0 / r` as small as possible and `c = inf (a r - u0)`
//!   as large as possible. Power weights `k t^b` have the exact pair
//!   `(1/(p-1-b), k/(p-1-b))` for `-1 < b < p-1`; general piecewise
//!   power-sum weights are handled per piece — single-term pieces
//!   analytically, multi-term pieces by dense sampling plus a Newton
//!   polish (accuracy about `1e-8`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step::{integrate, Piece, PiecewisePower, PowerTerm};
use crate::tree::{LeafFunction, TreeSpace};

/// The dual weight `sigma = w^(-1/(p-1))`, leafwise.
///
/// Requires every leaf value of `w` to be positive.
pub fn sigma_weight(w: &LeafFunction, p: f64) -> Result<LeafFunction> {
    check_p(p)?;
    if let Some((i, &v)) = w.values().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::Measure(format!(
            "weight must be positive at every leaf; leaf {i} has value {v}"
        )));
    }
    w.map(|v| v.powf(-1.0 / (p - 1.0)))
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Domain(format!("p must be a finite number above 1, got {p}")));
    }
    Ok(())
}

/// The tree Muckenhoupt constant
/// `[w]_p = max_I (w(I) / mu(I)) * (sigma(I) / mu(I))^(p-1)` over all nodes.
pub fn muckenhoupt_constant(tree: &TreeSpace, w: &LeafFunction, p: f64) -> Result<f64> {
    w.check_tree(tree)?;
    let sigma = sigma_weight(w, p)?;
    let n = tree.node_count();
    let mut w_mass = vec![0.0f64; n];
    let mut s_mass = vec![0.0f64; n];
    for i in (0..n).rev() {
        if let Some(slot) = tree.leaf_slot(i) {
            let mu = tree.measure(i);
            w_mass[i] = w.values()[slot] * mu;
            s_mass[i] = sigma.values()[slot] * mu;
        } else {
            for &k in tree.children(i) {
                w_mass[i] += w_mass[k];
                s_mass[i] += s_mass[k];
            }
        }
    }
    let mut best = 0.0f64;
    for i in 0..n {
        let mu = tree.measure(i);
        let ratio = (w_mass[i] / mu) * (s_mass[i] / mu).powf(p - 1.0);
        best = best.max(ratio);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Best pairs on (0,1]
// ---------------------------------------------------------------------------

/// A best pair `(a, c)` for a weight on `(0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApStarConstants {
    /// The least admissible slope `a = sup u0 / r`.
    pub a: f64,
    /// The largest admissible offset `c = inf (a r - u0)`.
    pub c: f64,
}

/// A pure power weight `w(t) = k t^b` on `(0,1]`, the family whose best pair
/// is exact in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerWeightSpec {
    pub k: f64,
    pub b: f64,
    pub p: f64,
}

impl PowerWeightSpec {
    /// Validates `k > 0`, `p > 1` and integrability `b > -1`.
    pub fn new(k: f64, b: f64, p: f64) -> Result<Self> {
        check_p(p)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!("the coefficient k must be positive, got {k}")));
        }
        if !b.is_finite() {
            return Err(Error::Domain(format!("the exponent b must be finite, got {b}")));
        }
        if b <= -1.0 {
            return Err(Error::NonIntegrable(format!(
                "the power weight t^{b} is not integrable on (0,1]"
            )));
        }
        Ok(PowerWeightSpec { k, b, p })
    }

    /// The weight as a piecewise power function.
    pub fn density(&self) -> PiecewisePower {
        PiecewisePower::single_power(self.k, self.b).expect("validated power weight")
    }

    /// Serializes to the stable JSON layout (`{"k","b","p"}`).
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and re-validates the JSON layout.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: PowerWeightSpec = serde_json::from_str(text)?;
        Self::new(raw.k, raw.b, raw.p)
    }
}

/// The exact best pair of a power weight:
/// `a = 1/(p-1-b)`, `c = k/(p-1-b)`, defined for `b < p-1`.
///
/// At `b >= p-1` the ratio `u0 / r` is unbounded (logarithmically at
/// `b = p-1`), so no finite pair exists.
pub fn power_weight_constants(spec: &PowerWeightSpec) -> Result<ApStarConstants> {
    if spec.b >= spec.p - 1.0 {
        return Err(Error::NotApStar(format!(
            "the power weight t^{} admits no best pair at p = {} (needs b < p-1)",
            spec.b, spec.p
        )));
    }
    let denom = spec.p - 1.0 - spec.b;
    Ok(ApStarConstants { a: 1.0 / denom, c: spec.k / denom })
}

/// `u0` restricted to one weight piece:
/// `u0(t) = constant + sum_j c_j t^(e_j) - log_coeff * ln t`.
struct U0Piece {
    constant: f64,
    pows: Vec<PowerTerm>,
    log_coeff: f64,
}

impl U0Piece {
    fn value(&self, t: f64) -> f64 {
        let mut v = self.constant;
        for term in &self.pows {
            v += term.c * t.powf(term.e);
        }
        if self.log_coeff != 0.0 {
            v -= self.log_coeff * t.ln();
        }
        v
    }
}

/// Builds the per-piece closed form of `u0(t) = int_t^1 wss(s) s^(-p) ds`,
/// accumulating right-to-left.
fn build_u0(wss: &PiecewisePower, p: f64) -> Vec<U0Piece> {
    let mut out: Vec<U0Piece> = Vec::with_capacity(wss.pieces().len());
    let mut upper = 0.0; // u0 at the current piece's hi
    for piece in wss.pieces().iter().rev() {
        let mut constant = upper;
        let mut pows = Vec::new();
        let mut log_coeff = 0.0;
        for term in &piece.terms {
            if term.c == 0.0 {
                continue;
            }
            if term.e == p - 1.0 {
                // int c/s ds = c ln s.
                constant += term.c * piece.hi.ln();
                log_coeff += term.c;
            } else {
                let m = term.e - p + 1.0;
                constant += term.c * piece.hi.powf(m) / m;
                pows.push(PowerTerm { c: -term.c / m, e: m });
            }
        }
        let u0 = U0Piece { constant, pows, log_coeff };
        upper = if piece.lo > 0.0 { u0.value(piece.lo) } else { f64::NAN };
        out.push(u0);
    }
    out.reverse();
    out
}

/// Nonzero terms of a piece.
fn nonzero_terms(piece: &Piece) -> Vec<PowerTerm> {
    piece.terms.iter().filter(|t| t.c != 0.0).copied().collect()
}

/// `r(t) = wss(t) / t^(p-1)` for one piece's terms (shifted exponents).
fn r_terms(terms: &[PowerTerm], p: f64) -> Vec<PowerTerm> {
    terms.iter().map(|t| PowerTerm { c: t.c, e: t.e - p + 1.0 }).collect()
}

fn eval_terms(terms: &[PowerTerm], t: f64) -> f64 {
    terms.iter().map(|term| term.c * if term.e == 0.0 { 1.0 } else { t.powf(term.e) }).sum()
}

fn eval_terms_derivative(terms: &[PowerTerm], t: f64) -> f64 {
    terms.iter().map(|term| term.c * term.e * t.powf(term.e - 1.0)).sum()
}

fn eval_terms_second(terms: &[PowerTerm], t: f64) -> f64 {
    terms.iter().map(|term| term.c * term.e * (term.e - 1.0) * t.powf(term.e - 2.0)).sum()
}

/// Limit of `s(t) = a r(t) - u0(t)` as `t -> 0+` on a first piece:
/// `Ok(Some(v))` for a finite limit, `Ok(None)` when `s -> +inf` (no inf
/// candidate), an error when `s -> -inf` (no admissible offset exists).
///
/// Scans the merged exponent expansion of `s` from the most negative
/// exponent up, treating coefficients within `1e-12` of the expansion scale
/// as exact cancellations (the leading one cancels by construction of `a`).
fn offset_limit_at_zero(a: f64, rt: &[PowerTerm], u0p: &U0Piece) -> Result<Option<f64>> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut scale = 0.0f64;
    for (m, c) in
        rt.iter().map(|t| (t.e, a * t.c)).chain(u0p.pows.iter().map(|t| (t.e, -t.c)))
    {
        scale += c.abs();
        match merged.iter_mut().find(|(mm, _)| *mm == m) {
            Some(entry) => entry.1 += c,
            None => merged.push((m, c)),
        }
    }
    merged.sort_by(|x, y| x.0.total_cmp(&y.0));
    let tol = 1e-12 * scale;
    for (m, coeff) in merged {
        if m >= 0.0 {
            break;
        }
        if coeff > tol {
            return Ok(None);
        }
        if coeff < -tol {
            return Err(Error::DegenerateConstants(
                "a r - u0 is unbounded below near 0".into(),
            ));
        }
    }
    Ok(Some(-u0p.constant))
}

/// Sampling resolution on multi-term pieces.
const PAIR_SAMPLES: usize = 1 << 12;

/// Computes the best pair of a nonnegative weight given as a piecewise
/// power sum.
///
/// Exact (up to a few ulps) for weights whose pieces are single powers;
/// multi-term pieces are resolved by 2^12-point geometric sampling with a
/// Newton polish, giving about `1e-8` accuracy. Fails with:
/// * a non-integrability error when the weight itself is not integrable;
/// * a "no best pair" error when `sup u0/r` is infinite (dominant exponent
///   at or above `p-1`, or the weight vanishing below positive mass);
/// * a degenerate-constants error when the offset comes out nonpositive
///   (e.g. the weight vanishes on a top interval, or the supremum defining
///   `a` is attained at an interior point).
pub fn apstar_constants(wss: &PiecewisePower, p: f64) -> Result<ApStarConstants> {
    check_p(p)?;
    if !wss.is_nonneg() {
        return Err(Error::Domain("the weight must be flagged nonnegative".into()));
    }
    // Integrability of the weight itself.
    for term in &wss.pieces()[0].terms {
        if term.c != 0.0 && term.e <= -1.0 {
            return Err(Error::NonIntegrable(format!(
                "first-piece exponent {} makes the weight non-integrable",
                term.e
            )));
        }
    }
    if wss.pieces().iter().all(|piece| nonzero_terms(piece).is_empty()) {
        return Err(Error::DegenerateConstants("the weight vanishes identically".into()));
    }

    let u0 = build_u0(wss, p);

    // --- a = sup u0 / r ------------------------------------------------
    let mut a = f64::NEG_INFINITY;
    for (piece, u0p) in wss.pieces().iter().zip(&u0) {
        let terms = nonzero_terms(piece);
        if terms.is_empty() {
            // u0 is constant on the piece; r vanishes.
            if u0p.constant > 0.0 {
                return Err(Error::NotApStar(
                    "the weight vanishes on an interval below positive mass".into(),
                ));
            }
            continue;
        }
        let rt = r_terms(&terms, p);
        if terms.len() == 1 {
            let t0 = terms[0];
            if t0.c < 0.0 {
                return Err(Error::Domain("a single-term piece has a negative coefficient".into()));
            }
            if t0.e == p - 1.0 {
                // r is constant; u0 grows like -ln t, so the sup sits at lo.
                if piece.lo == 0.0 {
                    return Err(Error::NotApStar(format!(
                        "exponent p-1 = {} at 0 makes u0/r grow logarithmically",
                        t0.e
                    )));
                }
                a = a.max(u0p.value(piece.lo) / t0.c);
            } else {
                // q is a constant plus a single power: monotone, so the sup
                // is at an endpoint (or the limit at 0 on a first piece).
                a = a.max(u0p.value(piece.hi) / eval_terms(&rt, piece.hi));
                if piece.lo > 0.0 {
                    a = a.max(u0p.value(piece.lo) / eval_terms(&rt, piece.lo));
                } else if t0.e < p - 1.0 {
                    a = a.max(1.0 / (p - 1.0 - t0.e));
                } else if u0p.constant > 0.0 {
                    return Err(Error::NotApStar(format!(
                        "dominant exponent {} > p-1 makes u0/r unbounded at 0",
                        t0.e
                    )));
                }
            }
        } else {
            if piece.lo == 0.0 {
                if u0p.log_coeff > 0.0 {
                    return Err(Error::NotApStar(
                        "a first-piece exponent equals p-1; u0/r grows logarithmically at 0".into(),
                    ));
                }
                let e_min = terms.iter().map(|t| t.e).fold(f64::INFINITY, f64::min);
                if e_min < p - 1.0 {
                    a = a.max(1.0 / (p - 1.0 - e_min));
                } else if u0p.constant > 0.0 {
                    return Err(Error::NotApStar(format!(
                        "dominant exponent {e_min} > p-1 makes u0/r unbounded at 0"
                    )));
                }
            }
            let q_val = |t: f64| u0p.value(t) / eval_terms(&rt, t);
            let (best_t, lo_nb, hi_nb, best_q) = sample_extremum(piece, &rt, &q_val, true)?;
            let refined = polish_ratio(u0p, &terms, &rt, best_t, lo_nb, hi_nb, p);
            a = a.max(best_q.max(refined.map(&q_val).unwrap_or(f64::NEG_INFINITY)));
        }
    }
    if !a.is_finite() {
        return Err(Error::NotApStar(format!("sup u0/r is not finite (got {a})")));
    }

    // --- c = inf (a r - u0) ---------------------------------------------
    let mut c = f64::INFINITY;
    for (piece, u0p) in wss.pieces().iter().zip(&u0) {
        let terms = nonzero_terms(piece);
        let rt = r_terms(&terms, p);
        let s_val = |t: f64| a * eval_terms(&rt, t) - u0p.value(t);
        if terms.is_empty() {
            c = c.min(-u0p.constant);
            continue;
        }
        if piece.lo == 0.0 {
            if let Some(limit) = offset_limit_at_zero(a, &rt, u0p)? {
                c = c.min(limit);
            }
        }
        if terms.len() == 1 {
            let t0 = terms[0];
            if t0.e == p - 1.0 {
                // s(t) = a c0 - u0(t) increases with t; inf at lo (lo > 0,
                // else the slope pass already failed).
                c = c.min(s_val(piece.lo));
            } else {
                // Single power plus constant: monotone, endpoints suffice.
                c = c.min(s_val(piece.hi));
                if piece.lo > 0.0 {
                    c = c.min(s_val(piece.lo));
                }
            }
        } else {
            let neg_s = |t: f64| -s_val(t);
            let (best_t, lo_nb, hi_nb, best_neg) = sample_extremum(piece, &rt, &neg_s, false)?;
            let refined = polish_offset(&terms, &rt, a, best_t, lo_nb, hi_nb, p);
            let candidate = (-best_neg).min(refined.map(&s_val).unwrap_or(f64::INFINITY));
            c = c.min(candidate);
        }
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::DegenerateConstants(format!(
            "the best offset degenerates to c = {c}"
        )));
    }
    Ok(ApStarConstants { a, c })
}

/// Geometric sampling of `f` over a piece; returns the best point, its
/// bracketing neighbours and the best value. `checking_ratio` additionally
/// rejects interior zeros of `r` (they make `u0/r` blow up).
fn sample_extremum(
    piece: &Piece,
    rt: &[PowerTerm],
    f: &impl Fn(f64) -> f64,
    checking_ratio: bool,
) -> Result<(f64, f64, f64, f64)> {
    let lo = if piece.lo > 0.0 { piece.lo } else { piece.hi * 1e-9 };
    let ratio = (piece.hi / lo).powf(1.0 / PAIR_SAMPLES as f64);
    let mut ts = Vec::with_capacity(PAIR_SAMPLES + 1);
    let mut t = lo;
    for k in 0..=PAIR_SAMPLES {
        if k == PAIR_SAMPLES {
            t = piece.hi;
        }
        ts.push(t);
        t *= ratio;
    }
    let mut best = f64::NEG_INFINITY;
    let mut idx = ts.len() - 1;
    for (k, &t) in ts.iter().enumerate() {
        if checking_ratio && eval_terms(rt, t) <= 0.0 {
            return Err(Error::NotApStar(format!(
                "the weight vanishes at an interior point near t = {t}"
            )));
        }
        let v = f(t);
        if v > best {
            best = v;
            idx = k;
        }
    }
    let lo_nb = ts[idx.saturating_sub(1)];
    let hi_nb = ts[(idx + 1).min(ts.len() - 1)];
    Ok((ts[idx], lo_nb, hi_nb, best))
}

/// Newton polish of a stationary point of `q = u0 / r` near `t0`, solving
/// `phi(t) = u0' r - u0 r' = 0` (with `u0' = -wss/t^p`).
fn polish_ratio(
    u0p: &U0Piece,
    wterms: &[PowerTerm],
    rt: &[PowerTerm],
    t0: f64,
    lo: f64,
    hi: f64,
    p: f64,
) -> Option<f64> {
    let mut t = t0;
    for _ in 0..8 {
        let w = eval_terms(wterms, t);
        let wp = eval_terms_derivative(wterms, t);
        let r = eval_terms(rt, t);
        let u = u0p.value(t);
        let up = -w / t.powf(p);
        let upp = -wp / t.powf(p) + p * w / t.powf(p + 1.0);
        let phi = up * r - u * eval_terms_derivative(rt, t);
        let dphi = upp * r - u * eval_terms_second(rt, t);
        if dphi == 0.0 || !phi.is_finite() || !dphi.is_finite() {
            return None;
        }
        let next = (t - phi / dphi).clamp(lo, hi);
        if (next - t).abs() <= 1e-15 * t {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

/// Newton polish of a stationary point of `s = a r - u0` near `t0`.
fn polish_offset(
    wterms: &[PowerTerm],
    rt: &[PowerTerm],
    a: f64,
    t0: f64,
    lo: f64,
    hi: f64,
    p: f64,
) -> Option<f64> {
    let mut t = t0;
    for _ in 0..8 {
        let w = eval_terms(wterms, t);
        let wp = eval_terms_derivative(wterms, t);
        let up = -w / t.powf(p);
        let upp = -wp / t.powf(p) + p * w / t.powf(p + 1.0);
        let sp = a * eval_terms_derivative(rt, t) - up;
        let spp = a * eval_terms_second(rt, t) - upp;
        if spp == 0.0 || !sp.is_finite() || !spp.is_finite() {
            return None;
        }
        let next = (t - sp / spp).clamp(lo, hi);
        if (next - t).abs() <= 1e-15 * t {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

/// Smallest relative margin `(a r(t) - u0(t) - c) / (a r(t) + u0(t) + c)`
/// over an `n`-point geometric grid on `[1e-8, 1]`, with `u0` evaluated
/// through the independent adaptive integrator. Nonnegative (up to about
/// `1e-9`) exactly when the pair is admissible for the weight. The margin
/// is normalized because the individual terms grow like a negative power of
/// `t`, so an absolute comparison would drown in their scale.
pub fn best_pair_audit_margin(
    wss: &PiecewisePower,
    p: f64,
    pair: &ApStarConstants,
    n: usize,
) -> Result<f64> {
    check_p(p)?;
    if n < 2 {
        return Err(Error::Domain("the audit grid needs at least two points".into()));
    }
    // u0(t) = int_t^1 wss(s) s^(-p) ds via the generic integrator on the
    // exponent-shifted weight.
    let shifted = PiecewisePower::from_validated_parts(
        wss.pieces()
            .iter()
            .map(|piece| Piece {
                lo: piece.lo,
                hi: piece.hi,
                terms: piece.terms.iter().map(|t| PowerTerm { c: t.c, e: t.e - p }).collect(),
            })
            .collect(),
        false,
        false,
    );
    let mut worst = f64::INFINITY;
    for k in 0..n {
        let t = 1e-8f64.powf(1.0 - k as f64 / (n - 1) as f64);
        let u0 = integrate(&shifted, t, 1.0)?;
        let r = wss.value(t) / t.powf(p - 1.0);
        let scale = (pair.a * r).abs() + u0.abs() + pair.c.abs();
        worst = worst.min((pair.a * r - u0 - pair.c) / scale);
    }
    Ok(worst)
}
