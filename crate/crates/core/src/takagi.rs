//! The generalized Takagi function
//!
//! ```text
//! G(x) = g_1/beta + sum_{n>=2} g_n beta^-n (n - S_{n-1}/M),   S_k = g_1 + … + g_k
//! ```
//!
//! evaluated through the defining series and through the regrouped form
//! `(1/M)(x + sum_n g_n beta^-n (M n - S_n))`, plus the classical Takagi
//! function `sum_n T^n(x)/2^n` (tent map `T`) as an independent reference at
//! `beta = 2`.
//!
//! Both routes are linear in `1/M`, so each is accumulated as a pair `(a, b)`
//! with `G = a - b/M`. `M` enters once, at the end, which keeps its radius
//! from being multiplied into every term.

use rayon::prelude::*;
use rug::float::Round;
use rug::{Float, Rational};
use serde::Serialize;

use crate::base::BetaParam;
use crate::dynamics::Walker;
use crate::enclosure::{serialize_bound, Enclosure};
use crate::error::{Error, Result};
use crate::field::Point;

/// Both evaluations of `G_beta(x)` at one point.
#[derive(Clone, Debug, Serialize)]
pub struct GTakagiEval {
    pub beta: String,
    pub x: Enclosure,
    #[serde(rename = "M")]
    pub m: Enclosure,
    pub depth: usize,
    pub value_def: Enclosure,
    pub value_lemma1: Enclosure,
    /// Truncation bound folded into both radii (0 when the expansion is finite).
    #[serde(serialize_with = "serialize_bound")]
    pub tail_bound: Float,
    /// Whether the digits terminate within `depth` (exact finite sum).
    pub finite: bool,
}

impl GTakagiEval {
    pub fn agree(&self) -> bool {
        self.value_def.intersects(&self.value_lemma1)
    }
}

/// `(1 + 1/M) * r^{d+1} ((d+1)(1-r) + r) / (1-r)^2` with `r = 1/beta`, the
/// bound on `sum_{n>d} n (1 + 1/M) beta^-n`, rounded up.
pub fn g_tail_bound(base: &BetaParam, m: &Enclosure, depth: usize) -> Float {
    let prec = base.precision_bits();
    let one = Enclosure::one(prec);
    let r = base.inv_beta();
    let q = base.one_minus_inv_beta();
    let d1 = Enclosure::from_int(prec, depth as i64 + 1);
    let core = base
        .inv_beta_pow(depth + 1)
        .mul(&d1.mul(&q).add(r))
        .div(&q.mul(&q));
    let m_lo = Enclosure::exact(m.lo().clone());
    let factor = one.add(&one.div(&m_lo));
    core.mul(&factor).hi().clone()
}

/// Smallest depth whose tail bound is at most `2^-64`, capped by the
/// precision contract.
pub fn default_depth(base: &BetaParam, m: &Enclosure) -> usize {
    let target = Float::with_val(64, Float::i_exp(1, -64));
    let cap = base.max_depth().max(1);
    let mut d = 1;
    // tail shrinks geometrically; step coarsely then refine
    while d < cap && g_tail_bound(base, m, d) > target {
        d = (d * 2).min(cap);
    }
    let (mut lo, mut hi) = (d / 2, d);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if g_tail_bound(base, m, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(1)
}

/// M-free sums for a finite digit list `g_1..g_d`:
/// `a = sum g_n n r^n`, `b_def = sum g_n S_{n-1} r^n`, `b_l1 = sum g_n S_n r^n`.
struct Parts {
    a: Enclosure,
    b_def: Enclosure,
    b_l1: Enclosure,
}

fn parts(base: &BetaParam, digits: &[u8]) -> Parts {
    let prec = base.precision_bits();
    let r = base.inv_beta();
    let mut a = Enclosure::zero(prec);
    let mut b_def = Enclosure::zero(prec);
    let mut b_l1 = Enclosure::zero(prec);
    let mut rn = Enclosure::one(prec);
    let mut s: i64 = 0;
    for (i, &g) in digits.iter().enumerate() {
        rn = rn.mul(r);
        if g == 1 {
            let n = i as i64 + 1;
            a = a.add(&rn.mul_int(n));
            b_def = b_def.add(&rn.mul_int(s));
            s += 1;
            b_l1 = b_l1.add(&rn.mul_int(s));
        }
    }
    Parts { a, b_def, b_l1 }
}

fn check_m(m: &Enclosure) -> Result<()> {
    if !m.certainly_positive() {
        return Err(Error::InvalidParameter(format!("M = {m} is not certainly positive")));
    }
    Ok(())
}

/// Certified digits of `x` to `depth`, plus whether `tau^k(x) = 0` for some
/// `k <= depth` (then the returned list is the full expansion).
fn expansion(base: &BetaParam, x: &Point, depth: usize) -> Result<(Vec<u8>, bool)> {
    base.check_depth(depth)?;
    match x.in_unit_interval(base) {
        Some(true) => {}
        _ => return Err(Error::Domain("x must lie in [0, 1]".into())),
    }
    let mut w = Walker::new(base, x.clone());
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        if w.current().is_zero() {
            return Ok((out, true));
        }
        out.push(w.next_digit()?);
    }
    let finite = w.current().is_zero();
    Ok((out, finite))
}

fn assemble_def(p: &Parts, m: &Enclosure, tail: &Float) -> Enclosure {
    p.a.sub(&p.b_def.div(m)).widen(tail)
}

fn assemble_lemma1(p: &Parts, x: &Enclosure, m: &Enclosure, tail: &Float) -> Enclosure {
    // (1/M)(x + M a - b_l1) = a + (x - b_l1)/M
    p.a.add(&x.sub(&p.b_l1).div(m)).widen(tail)
}

/// `G_beta(x)` through the defining series, truncated at `depth` with the
/// tail bound folded into the radius.
pub fn g_def(base: &BetaParam, x: &Point, m: &Enclosure, depth: usize) -> Result<Enclosure> {
    Ok(evaluate(base, x, m, depth)?.value_def)
}

/// `G_beta(x)` through the regrouped series.
pub fn g_lemma1(base: &BetaParam, x: &Point, m: &Enclosure, depth: usize) -> Result<Enclosure> {
    Ok(evaluate(base, x, m, depth)?.value_lemma1)
}

/// Both evaluations from one digit extraction.
pub fn evaluate(base: &BetaParam, x: &Point, m: &Enclosure, depth: usize) -> Result<GTakagiEval> {
    check_m(m)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    let (digits, finite) = expansion(base, x, depth)?;
    let tail = if finite {
        Float::with_val(base.precision_bits(), 0)
    } else {
        g_tail_bound(base, m, depth)
    };
    let p = parts(base, &digits);
    let xe = x.enclosure(base);
    Ok(GTakagiEval {
        beta: base.label().to_string(),
        value_def: assemble_def(&p, m, &tail),
        value_lemma1: assemble_lemma1(&p, &xe, m, &tail),
        x: xe,
        m: m.clone(),
        depth,
        tail_bound: tail,
        finite,
    })
}

/// `G_beta(x)` through the defining series together with the digits used.
pub(crate) fn g_with_digits(
    base: &BetaParam,
    x: &Point,
    m: &Enclosure,
    depth: usize,
) -> Result<(Enclosure, Vec<u8>)> {
    check_m(m)?;
    let (digits, finite) = expansion(base, x, depth)?;
    let tail = if finite {
        Float::with_val(base.precision_bits(), 0)
    } else {
        g_tail_bound(base, m, depth)
    };
    Ok((assemble_def(&parts(base, &digits), m, &tail), digits))
}

/// `G_beta` at the truncation point `sum d_n beta^-n` of a greedy digit
/// list, summed exactly over the finite support.
pub fn g_finite(base: &BetaParam, digits: &[u8], m: &Enclosure) -> Result<Enclosure> {
    check_m(m)?;
    let zero = Float::with_val(base.precision_bits(), 0);
    Ok(assemble_def(&parts(base, digits), m, &zero))
}

/// `G(long) - G(short)` for two greedy digit lists, with the M-free parts
/// subtracted before dividing by `M`.
pub fn g_finite_difference(
    base: &BetaParam,
    short: &[u8],
    long: &[u8],
    m: &Enclosure,
) -> Result<Enclosure> {
    check_m(m)?;
    let p = parts(base, short);
    let q = parts(base, long);
    Ok(q.a.sub(&p.a).sub(&q.b_def.sub(&p.b_def).div(m)))
}

/// Evaluates many points in parallel; results keep the input order.
pub fn evaluate_batch(
    base: &BetaParam,
    xs: &[Point],
    m: &Enclosure,
    depth: usize,
) -> Result<Vec<GTakagiEval>> {
    xs.par_iter()
        .map(|x| evaluate(base, x, m, depth))
        .collect()
}

/// Classical Takagi function `sum_{n=1}^{depth} T^n(x) / 2^n` with
/// `T(x) = 1 - |1 - 2x|`, in exact rational arithmetic; the tail `2^-depth`
/// is added unless the tent orbit reaches 0.
pub fn takagi_classical(x: &Rational, depth: usize, prec: u32) -> Result<Enclosure> {
    if *x < 0 || *x > 1 {
        return Err(Error::Domain(format!("x = {x} lies outside [0, 1]")));
    }
    let mut t = x.clone();
    let mut sum = Rational::new();
    let mut scale = Rational::from(1);
    let mut finite = false;
    for _ in 0..depth {
        let mut dev = Rational::from(&t * 2u32);
        dev -= 1u32;
        dev.abs_mut();
        t = -dev;
        t += 1u32;
        scale /= 2u32;
        sum += Rational::from(&t * &scale);
        if t == 0 {
            finite = true;
            break;
        }
    }
    let e = Enclosure::from_rational(prec, &sum);
    if finite {
        Ok(e)
    } else {
        let tail = Float::with_val_round(prec, &scale, Round::Up).0;
        Ok(e.extend_up(&tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_density;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn half(prec: u32) -> Enclosure {
        Enclosure::from_rational(prec, &q(1, 2))
    }

    #[test]
    fn classical_fixtures() {
        for (x, v) in [(q(0, 1), q(0, 1)), (q(1, 2), q(1, 2)), (q(1, 3), q(2, 3))] {
            let e = takagi_classical(&x, 80, 128).unwrap();
            assert!(e.contains(&Float::with_val(128, &v)), "{x}: {e}");
        }
        assert!(takagi_classical(&q(1, 2), 80, 128).unwrap().is_exact());
        // T(1/4) = 1/2
        let e = takagi_classical(&q(1, 4), 80, 128).unwrap();
        assert!(e.contains(&Float::with_val(128, 0.5)));
    }

    #[test]
    fn g_at_two_matches_fixtures() {
        let b = BetaParam::two(256).unwrap();
        let m = half(256);
        let x = Point::from_rational(&b, &q(1, 2));
        let e = evaluate(&b, &x, &m, 100).unwrap();
        assert!(e.finite && e.value_def.contains(&Float::with_val(256, 0.5)));
        let x = Point::from_rational(&b, &q(1, 3));
        let e = evaluate(&b, &x, &m, 150).unwrap();
        let two_thirds = Float::with_val(256, &q(2, 3));
        assert!(e.value_def.contains(&two_thirds));
        assert!(e.value_lemma1.contains(&two_thirds));
        assert!(e.value_def.radius() < Float::with_val(64, 1e-40));
        let z = evaluate(&b, &Point::zero(&b), &m, 10).unwrap();
        assert!(z.value_def.is_exact() && z.value_def.lo().is_zero());
    }

    #[test]
    fn tail_bound_against_direct_sum() {
        let b = BetaParam::two(128).unwrap();
        let m = half(128);
        let bound = g_tail_bound(&b, &m, 50).to_f64();
        let direct: f64 = (51..10_051).map(|n| n as f64 * 3.0 * 0.5f64.powi(n)).sum();
        assert!(bound >= direct && bound <= direct * (1.0 + 1e-9));
        assert!(bound < 1e-9);
        let mut prev = g_tail_bound(&b, &m, 1);
        for d in 2..60 {
            let t = g_tail_bound(&b, &m, d);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn golden_routes_agree_and_are_tight() {
        let b = BetaParam::golden(768).unwrap();
        let d = build_density(&b, None).unwrap();
        let x = Point::from_rational(&b, &q(1, 4));
        let e = evaluate(&b, &x, &d.m, 200).unwrap();
        assert!(e.agree());
        assert!(e.value_def.radius() < Float::with_val(64, 1e-20));
        assert!(default_depth(&b, &d.m) > 90);
    }

    #[test]
    fn single_digit_increment() {
        let b = BetaParam::golden(256).unwrap();
        let d = build_density(&b, None).unwrap();
        let base_digits = vec![1u8, 0, 0, 1, 0, 0, 0];
        let mut longer = base_digits.clone();
        longer.extend([0, 1]);
        let m_pos = longer.len();
        let s: i64 = base_digits.iter().map(|&g| i64::from(g)).sum();
        let diff = g_finite_difference(&b, &base_digits, &longer, &d.m).unwrap();
        let expect = b
            .inv_beta_pow(m_pos)
            .mul(&Enclosure::from_int(256, m_pos as i64).sub(&Enclosure::from_int(256, s).div(&d.m)));
        assert!(diff.intersects(&expect));
        let direct = g_finite(&b, &longer, &d.m)
            .unwrap()
            .sub(&g_finite(&b, &base_digits, &d.m).unwrap());
        assert!(direct.intersects(&expect));
    }

    #[test]
    fn batch_preserves_order() {
        let b = BetaParam::two(128).unwrap();
        let xs: Vec<Point> = (0..=8).map(|k| Point::from_rational(&b, &q(k, 8))).collect();
        let out = evaluate_batch(&b, &xs, &half(128), 30).unwrap();
        for (k, e) in out.iter().enumerate() {
            let t = takagi_classical(&q(k as i64, 8), 30, 128).unwrap();
            assert!(e.value_def.intersects(&t), "k={k}");
        }
    }
}
