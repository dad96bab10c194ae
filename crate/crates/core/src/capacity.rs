//! Capacity expressions and bounds for the mixed random/adversarial channels.
//!
//! All functions are pure and operate on `f64` with log base 2. Domain
//! violations are reported as [`Error::Domain`] rather than clamped.
//!
//! Erasures (adversary erases at most a fraction `p`, BEC(q) underneath):
//!
//! - without transmitter feedback the capacity is `(1-2p)(1-q)` for
//!   `p <= 1/2` and zero beyond;
//! - with causal feedback to the transmitter it is `(1-p)(1-q)`.
//!
//! Bit flips (adversary flips at most a fraction `p`, BSC(q) underneath) only
//! have bounds. The upper bound is
//!
//! ```text
//! min_{0 <= pb <= p}  a(pb) * (1 - h2(pb / a(pb) * q)),   a(pb) = 1 - 4(p - pb)
//! ```
//!
//! for `p < 1/4` (zero otherwise). It follows the curve `1 - h2(p*q)` up to a
//! breakpoint `p0(q)` and then the tangent line through `(1/4, 0)`.

use serde::Serialize;

use crate::error::{check_range, Error, Result};

/// Grid size for the scan stage of [`upper_bound_flip_numeric`].
pub const SCAN_POINTS: usize = 10_000;

/// Bisection bracket for [`p0_solve`].
pub const P0_BRACKET: (f64, f64) = (1e-9, 0.25 - 1e-9);

/// Root tolerance used when [`upper_bound_flip_closed`] solves for `p0`.
pub const CLOSED_FORM_ROOT_TOL: f64 = 1e-13;

const MAX_BISECTIONS: usize = 400;
const MAX_GOLDEN_ITERS: usize = 500;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Communication rate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Rate(f64);

impl Rate {
    pub const ZERO: Rate = Rate(0.0);

    pub fn new(value: f64) -> Result<Self> {
        check_range("rate", value, 0.0, 1.0, "[0, 1]")?;
        Ok(Rate(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Rate> for f64 {
    fn from(r: Rate) -> f64 {
        r.0
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Which piece of the bit-flip upper bound a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p <= p0`: the bound is `1 - h2(p * q)` and the minimiser is `pb = p`.
    ConvexRegion,
    /// `p0 < p < 1/4`: the bound is the tangent line through `(1/4, 0)`.
    LinearRegion,
    /// `p >= 1/4` (or `q = 1/2`): the bound is zero.
    Zero,
}

/// Result of the numeric minimisation behind the bit-flip upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipBoundBreakdown {
    pub p: f64,
    pub q: f64,
    pub value: f64,
    /// Minimising babble fraction `pb*`, in `[0, p]`.
    pub p_bar_star: f64,
    /// `1 - 4(p - pb*)`.
    pub alpha: f64,
    /// Regime breakpoint; `None` when it is undefined (`q = 1/2`) or the root
    /// solver could not bracket it.
    pub p0: Option<f64>,
    pub regime: Regime,
}

/// Binary entropy in bits; `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> Result<f64> {
    check_range("x", x, 0.0, 1.0, "[0, 1]")?;
    Ok(h2_unchecked(x))
}

#[inline]
pub(crate) fn h2_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Crossover probability of two cascaded BSCs: `x(1-y) + y(1-x)`.
pub fn star(x: f64, y: f64) -> Result<f64> {
    check_range("x", x, 0.0, 1.0, "[0, 1]")?;
    check_range("y", y, 0.0, 1.0, "[0, 1]")?;
    Ok(star_unchecked(x, y))
}

#[inline]
pub(crate) fn star_unchecked(x: f64, y: f64) -> f64 {
    x * (1.0 - y) + y * (1.0 - x)
}

fn check_unit_square(p: f64, q: f64) -> Result<()> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")
}

fn check_flip_domain(p: f64, q: f64) -> Result<()> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    check_range("q", q, 0.0, 0.5, "[0, 1/2]")
}

/// Erasure capacity without transmitter feedback: `(1-2p)(1-q)` for
/// `p <= 1/2`, else 0.
pub fn capacity_erasure(p: f64, q: f64) -> Result<Rate> {
    check_unit_square(p, q)?;
    if p >= 0.5 {
        return Ok(Rate::ZERO);
    }
    Ok(Rate((1.0 - 2.0 * p) * (1.0 - q)))
}

/// Erasure capacity with causal transmitter feedback: `(1-p)(1-q)`.
pub fn capacity_erasure_feedback(p: f64, q: f64) -> Result<Rate> {
    check_unit_square(p, q)?;
    Ok(Rate((1.0 - p) * (1.0 - q)))
}

/// Objective of the bit-flip upper bound at babble fraction `p_bar`.
///
/// Defined for `p - 1/4 <= p_bar <= p`; returns 0 where `alpha <= 0`.
pub fn flip_objective(p: f64, p_bar: f64, q: f64) -> f64 {
    let alpha = 1.0 - 4.0 * (p - p_bar);
    if alpha <= 0.0 {
        return 0.0;
    }
    let inner = (p_bar / alpha).clamp(0.0, 1.0);
    alpha * (1.0 - h2_unchecked(star_unchecked(inner, q)))
}

/// Minimises [`flip_objective`] over `pb` in `[0, p]` by a dense scan
/// followed by golden-section refinement around the best grid point.
///
/// The scan makes no unimodality assumption; `tol` bounds the width of the
/// final refinement bracket.
pub fn upper_bound_flip_numeric(p: f64, q: f64, tol: f64) -> Result<FlipBoundBreakdown> {
    check_flip_domain(p, q)?;
    if !(tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "(0, inf)",
        });
    }

    if p >= 0.25 {
        // pb = p - 1/4 puts alpha at exactly zero.
        return Ok(FlipBoundBreakdown {
            p,
            q,
            value: 0.0,
            p_bar_star: p - 0.25,
            alpha: 0.0,
            p0: p0_solve(q, CLOSED_FORM_ROOT_TOL).ok(),
            regime: Regime::Zero,
        });
    }
    if q == 0.5 {
        return Ok(FlipBoundBreakdown {
            p,
            q,
            value: 0.0,
            p_bar_star: p,
            alpha: 1.0,
            p0: None,
            regime: Regime::Zero,
        });
    }

    let objective = |x: f64| flip_objective(p, x, q);
    let (x_star, value) = scan_then_golden(&objective, 0.0, p, SCAN_POINTS, tol)?;

    let p0 = p0_solve(q, CLOSED_FORM_ROOT_TOL).ok();
    let regime = match p0 {
        Some(p0) if p <= p0 => Regime::ConvexRegion,
        Some(_) => Regime::LinearRegion,
        // Fall back to where the minimiser landed.
        None if p - x_star <= tol.max(p / SCAN_POINTS as f64) => Regime::ConvexRegion,
        None => Regime::LinearRegion,
    };

    Ok(FlipBoundBreakdown {
        p,
        q,
        value,
        p_bar_star: x_star,
        alpha: 1.0 - 4.0 * (p - x_star),
        p0,
        regime,
    })
}

fn scan_then_golden<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    if hi <= lo {
        return Ok((lo, f(lo)));
    }
    let last = points - 1;
    let grid = |i: usize| {
        if i == last {
            hi
        } else {
            lo + (hi - lo) * i as f64 / last as f64
        }
    };
    let (mut best_i, mut best_v) = (0, f(lo));
    for i in 1..points {
        let v = f(grid(i));
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(last));

    let refined = golden_section(f, a, b, tol);
    let (x, v) = if refined.1 < best_v {
        (refined.0, refined.1)
    } else {
        (grid(best_i), best_v)
    };
    if !refined.2 {
        return Err(Error::NonConvergence {
            tol,
            best: v,
            arg: x,
            residual: refined.3,
        });
    }
    Ok((x, v))
}

/// Golden-section search on `[a, b]`. Returns `(x, f(x), converged, width)`;
/// the endpoints are included as candidates so boundary minima are found.
fn golden_section<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64, bool, f64) {
    let (fa0, fb0) = (f(a), f(b));
    let (a0, b0) = (a, b);

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a) > tol && iters < MAX_GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let width = b - a;
    let converged = width <= tol;

    let mid = 0.5 * (a + b);
    [(mid, f(mid)), (c, fc), (d, fd), (a0, fa0), (b0, fb0)]
        .into_iter()
        .fold((mid, f64::INFINITY, converged, width), |acc, (x, v)| {
            if v < acc.1 {
                (x, v, converged, width)
            } else {
                acc
            }
        })
}

/// Left-hand side of the breakpoint equation
/// `4 + (1+2q) log2(p0*q) + (3-2q) log2(1 - p0*q)`.
pub fn p0_residual(p0: f64, q: f64) -> f64 {
    let s = star_unchecked(p0, q);
    4.0 + (1.0 + 2.0 * q) * s.log2() + (3.0 - 2.0 * q) * (1.0 - s).log2()
}

/// Solves the breakpoint equation for `p0` in `(0, 1/4)` by bisection on
/// [`P0_BRACKET`], returning a root whose residual is below `tol`.
pub fn p0_solve(q: f64, tol: f64) -> Result<f64> {
    check_range("q", q, 0.0, 0.5 - f64::EPSILON, "[0, 1/2)")?;
    if !(tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "(0, inf)",
        });
    }
    let (mut lo, mut hi) = P0_BRACKET;
    let (f_lo, f_hi) = (p0_residual(lo, q), p0_residual(hi, q));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }

    let (mut best_x, mut best_r) = (lo, f_lo);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let r = p0_residual(mid, q);
        if r.abs() < best_r.abs() {
            best_x = mid;
            best_r = r;
        }
        if r.abs() < tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        tol,
        best: best_x,
        arg: best_x,
        residual: best_r,
    })
}

/// The linear piece of the bit-flip upper bound for a given `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentLine {
    pub p0: f64,
    /// `1 - h2(p0 * q)`, the bound's value at the breakpoint.
    pub value_at_p0: f64,
    /// `-4 (1 - h2(p0*q)) / (1 - 4 p0)`.
    pub slope: f64,
}

impl TangentLine {
    pub fn for_q(q: f64) -> Result<Self> {
        let p0 = p0_solve(q, CLOSED_FORM_ROOT_TOL)?;
        let value_at_p0 = 1.0 - h2_unchecked(star_unchecked(p0, q));
        Ok(TangentLine {
            p0,
            value_at_p0,
            slope: -4.0 * value_at_p0 / (1.0 - 4.0 * p0),
        })
    }

    /// `(1-4p)/(1-4p0) * (1 - h2(p0*q))`.
    pub fn eval(&self, p: f64) -> f64 {
        (1.0 - 4.0 * p) / (1.0 - 4.0 * self.p0) * self.value_at_p0
    }
}

/// Three-piece closed form of the bit-flip upper bound.
pub fn upper_bound_flip_closed(p: f64, q: f64) -> Result<Rate> {
    check_flip_domain(p, q)?;
    if p >= 0.25 || q == 0.5 {
        return Ok(Rate::ZERO);
    }
    let line = TangentLine::for_q(q)?;
    let v = if p <= line.p0 {
        1.0 - h2_unchecked(star_unchecked(p, q))
    } else {
        line.eval(p)
    };
    Ok(Rate(v.clamp(0.0, 1.0)))
}

/// Achievable bit-flip rate: the `q = 0` upper bound evaluated at `p * q`.
pub fn achievable_flip(p: f64, q: f64) -> Result<Rate> {
    check_flip_domain(p, q)?;
    upper_bound_flip_closed(star_unchecked(p, q), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent reference used only by the tests in this module.
    fn entropy_ref(x: f64) -> f64 {
        if x == 0.0 || x == 1.0 {
            return 0.0;
        }
        let ln2 = std::f64::consts::LN_2;
        -(x * x.ln() + (1.0 - x) * (1.0 - x).ln()) / ln2
    }

    #[test]
    fn h2_examples() {
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2(1.0).unwrap(), 0.0);
        assert_eq!(h2(0.5).unwrap(), 1.0);
        // mpmath, 40 digits
        assert!((h2(0.25).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn h2_rejects_out_of_domain() {
        assert!(matches!(h2(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(h2(1.5), Err(Error::Domain { .. })));
        assert!(h2(f64::NAN).is_err());
    }

    #[test]
    fn star_examples() {
        assert_eq!(star(0.3, 0.0).unwrap(), 0.3);
        assert_eq!(star(0.5, 0.3).unwrap(), 0.5);
        assert!((star(0.1, 0.2).unwrap() - 0.26).abs() < 1e-15);
        assert_eq!(star(0.1, 0.2).unwrap(), star(0.2, 0.1).unwrap());
        assert!(star(1.2, 0.0).is_err());
    }

    #[test]
    fn erasure_capacities() {
        assert!((capacity_erasure(0.1, 0.3).unwrap().value() - 0.56).abs() <= f64::EPSILON);
        assert_eq!(capacity_erasure(0.5, 0.2).unwrap(), Rate::ZERO);
        assert_eq!(capacity_erasure(0.0, 0.0).unwrap().value(), 1.0);
        assert_eq!(capacity_erasure_feedback(0.5, 0.5).unwrap().value(), 0.25);
        assert_eq!(capacity_erasure_feedback(1.0, 0.3).unwrap().value(), 0.0);
        assert!((capacity_erasure_feedback(0.3, 0.0).unwrap().value() - 0.7).abs() <= f64::EPSILON);
        assert!(capacity_erasure(1.1, 0.0).is_err());
        assert!(capacity_erasure_feedback(0.2, -0.1).is_err());
    }

    #[test]
    fn p0_at_q0_satisfies_quartic() {
        let p0 = p0_solve(0.0, 1e-12).unwrap();
        assert!(p0_residual(p0, 0.0).abs() < 1e-12);
        assert!((p0 * (1.0 - p0).powi(3) - 1.0 / 16.0).abs() < 1e-12);
        // bisection oracle at 40 digits: 0.080356622392919433...
        assert!((p0 - 0.080_356_622_392_919_43).abs() < 1e-11);
    }

    #[test]
    fn p0_reference_values() {
        let refs = [
            (0.1, 0.052_150_810_578_773_42),
            (0.2, 0.029_632_894_665_091_56),
            (0.3, 0.013_261_645_831_332_6),
            (0.4, 0.003_328_880_292_180_28),
        ];
        for (q, want) in refs {
            let got = p0_solve(q, 1e-13).unwrap();
            assert!((got - want).abs() < 1e-10, "q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn p0_rejects_bad_inputs() {
        assert!(p0_solve(0.5, 1e-10).is_err());
        assert!(p0_solve(-0.1, 1e-10).is_err());
        assert!(p0_solve(0.1, 0.0).is_err());
        // root lies below the bracket's lower end this close to 1/2
        assert!(matches!(
            p0_solve(0.5 - 1e-6, 1e-10),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn numeric_bound_zero_region() {
        let b = upper_bound_flip_numeric(0.25, 0.1, 1e-9).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.regime, Regime::Zero);
        assert_eq!(b.alpha, 1.0 - 4.0 * (b.p - b.p_bar_star));
        let b = upper_bound_flip_numeric(0.4, 0.0, 1e-9).unwrap();
        assert_eq!(b.regime, Regime::Zero);
        assert!(b.p_bar_star >= 0.0 && b.p_bar_star <= b.p);
    }

    #[test]
    fn numeric_bound_convex_region() {
        assert!(0.02 < p0_solve(0.0, 1e-12).unwrap());
        let b = upper_bound_flip_numeric(0.02, 0.0, 1e-9).unwrap();
        assert_eq!(b.regime, Regime::ConvexRegion);
        assert!((b.value - (1.0 - entropy_ref(0.02))).abs() < 1e-9);
        assert!((b.p_bar_star - 0.02).abs() < 1e-6);
    }

    #[test]
    fn numeric_bound_matches_brute_force_grid() {
        // 10^6-point brute force over pb using the reference entropy.
        let (p, q) = (0.1_f64, 0.0_f64);
        let n = 1_000_000;
        let brute = (0..=n)
            .map(|i| {
                let x = p * i as f64 / n as f64;
                let a = 1.0 - 4.0 * (p - x);
                let s = x / a;
                a * (1.0 - entropy_ref(s * (1.0 - q) + q * (1.0 - s)))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 0.527_487_852_963_993_9).abs() < 1e-9);

        let num = upper_bound_flip_numeric(p, q, 1e-9).unwrap();
        assert_eq!(num.regime, Regime::LinearRegion);
        assert!((num.value - brute).abs() < 1e-6);
        let closed = upper_bound_flip_closed(p, q).unwrap().value();
        assert!((closed - brute).abs() < 1e-6);
    }

    #[test]
    fn closed_form_branches() {
        for q in [0.0, 0.1, 0.3] {
            let p0 = p0_solve(q, 1e-13).unwrap();
            let p = 0.5 * p0;
            let want = 1.0 - entropy_ref(p * (1.0 - q) + q * (1.0 - p));
            assert!((upper_bound_flip_closed(p, q).unwrap().value() - want).abs() < 1e-12);
            assert_eq!(upper_bound_flip_closed(0.25, q).unwrap(), Rate::ZERO);
        }
        assert_eq!(upper_bound_flip_closed(0.1, 0.5).unwrap(), Rate::ZERO);
        assert!(upper_bound_flip_closed(0.1, 0.6).is_err());
    }

    #[test]
    fn achievable_examples() {
        for p in [0.0, 0.03, 0.1, 0.2, 0.3] {
            assert_eq!(
                achievable_flip(p, 0.0).unwrap(),
                upper_bound_flip_closed(p, 0.0).unwrap()
            );
        }
        // 0.1 > p0(0) = 0.0804, so the linear branch applies.
        let line = TangentLine::for_q(0.0).unwrap();
        assert!(0.1 > line.p0);
        assert!((achievable_flip(0.0, 0.1).unwrap().value() - line.eval(0.1)).abs() < 1e-15);
        assert!(achievable_flip(0.0, 0.1).unwrap().value() < 1.0 - entropy_ref(0.1));
        assert_eq!(achievable_flip(0.25, 0.2).unwrap(), Rate::ZERO);
    }

    #[test]
    fn tangency_at_breakpoint() {
        for q in [0.0, 0.1, 0.2, 0.3, 0.4] {
            let line = TangentLine::for_q(q).unwrap();
            let curve = |p: f64| 1.0 - entropy_ref(p * (1.0 - q) + q * (1.0 - p));
            assert!((line.eval(line.p0) - curve(line.p0)).abs() < 1e-9);
            let h = 1e-6;
            let fd = (curve(line.p0 + h) - curve(line.p0 - h)) / (2.0 * h);
            assert!(
                (fd - line.slope).abs() < 1e-5,
                "q={q}: fd {fd} slope {}",
                line.slope
            );
        }
    }

    #[test]
    fn golden_finds_boundary_minimum() {
        let (x, v, conv, _) = golden_section(&|x: f64| x, 0.0, 1.0, 1e-10);
        assert!(conv);
        assert_eq!(x, 0.0);
        assert_eq!(v, 0.0);
    }
}
