//! The beta-map `tau(x) = beta*x - floor(beta*x)` and greedy digits.
//!
//! Orbits are iterated on exact [`Point`]s. A digit is `1` exactly when
//! `beta*x - 1 >= 0`; the sign is decided exactly when the point lies in `Q`
//! or is an exact hit, and otherwise by an enclosure at the working precision.
//! If that enclosure straddles zero the step reports an ambiguous branch
//! instead of guessing.
//!
//! At `beta = 2` the point `x = 1` is expanded as `0.111…` and `tau(1) = 1`.

use std::cmp::Ordering;

use rand::RngCore;
use rug::Integer;
use serde::Serialize;

use crate::base::{parse_rational, BetaParam};
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::field::Point;

/// One application of the beta-map.
#[derive(Clone, Debug)]
pub struct TauStep {
    pub digit: u8,
    pub image: Point,
}

/// Advances `x` by one step without a domain check. `index` is the 1-based
/// digit index used in error reports.
pub(crate) fn step(base: &BetaParam, x: &Point, index: usize) -> Result<TauStep> {
    if base.is_two() && x.as_rational().is_some_and(|r| r == 1) {
        return Ok(TauStep {
            digit: 1,
            image: x.clone(),
        });
    }
    let bx = x.mul_beta(base);
    let t = bx.add_int(-1);
    match t.sign(base) {
        Some(Ordering::Less) => Ok(TauStep { digit: 0, image: bx }),
        Some(_) => Ok(TauStep { digit: 1, image: t }),
        None => Err(Error::AmbiguousBranch { index }),
    }
}

fn check_unit(base: &BetaParam, x: &Point) -> Result<()> {
    match x.in_unit_interval(base) {
        Some(true) => Ok(()),
        Some(false) => Err(Error::Domain(format!(
            "x = {} lies outside [0, 1]",
            x.enclosure(base)
        ))),
        None => Err(Error::Domain("cannot certify that x lies in [0, 1]".into())),
    }
}

/// `tau_beta(x)` together with the digit `[beta x]`.
pub fn tau(base: &BetaParam, x: &Point) -> Result<TauStep> {
    check_unit(base, x)?;
    step(base, x, 1)
}

/// Iterates the map and yields digits one at a time.
pub(crate) struct Walker<'a> {
    base: &'a BetaParam,
    current: Point,
    index: usize,
}

impl<'a> Walker<'a> {
    pub fn new(base: &'a BetaParam, x: Point) -> Self {
        Walker {
            base,
            current: x,
            index: 0,
        }
    }

    pub fn current(&self) -> &Point {
        &self.current
    }

    /// Next digit `g_{index+1}`; the walker then sits on `tau^{index+1}(x)`.
    pub fn next_digit(&mut self) -> Result<u8> {
        let s = step(self.base, &self.current, self.index + 1)?;
        self.current = s.image;
        self.index += 1;
        Ok(s.digit)
    }

    /// Like `next_digit`, but also reports whether the point it left was
    /// exactly `1/beta`.
    pub fn next_digit_with_hit(&mut self) -> Result<(u8, bool)> {
        let d = self.next_digit()?;
        let hit = d == 1 && self.current.is_zero();
        Ok((d, hit))
    }
}

/// `tau^0(x) .. tau^n(x)` with the digits read along the way.
#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub base: String,
    pub x0: Enclosure,
    /// Exact orbit points.
    pub exact_points: Vec<Point>,
    /// Enclosures of the orbit points at working precision.
    pub points: Vec<Enclosure>,
    /// `g_1 .. g_k`.
    pub digits: Vec<u8>,
    /// Digit index whose branch could not be decided. The trace stops there.
    pub ambiguous_at: Option<usize>,
    /// First `k >= 1` with `tau^{k-1}(x) = 1/beta` exactly.
    pub simple_at: Option<usize>,
    /// First `k` with `tau^k(x) = 0` exactly.
    pub zero_at: Option<usize>,
}

impl OrbitTrace {
    pub fn certified(&self) -> bool {
        self.ambiguous_at.is_none()
    }

    pub fn require_certified(&self) -> Result<()> {
        match self.ambiguous_at {
            Some(index) => Err(Error::AmbiguousBranch { index }),
            None => Ok(()),
        }
    }
}

/// Orbit of `x` to depth `n`. An undecidable branch ends the trace early with
/// `ambiguous_at` set; use [`OrbitTrace::require_certified`] to turn that
/// into an error.
pub fn orbit(base: &BetaParam, x: &Point, n: usize) -> Result<OrbitTrace> {
    base.check_depth(n)?;
    check_unit(base, x)?;
    let mut exact_points = vec![x.clone()];
    let mut points = vec![x.enclosure(base)];
    let mut digits = Vec::with_capacity(n);
    let mut ambiguous_at = None;
    let mut simple_at = None;
    let mut zero_at = x.is_zero().then_some(0);
    let mut w = Walker::new(base, x.clone());
    for k in 1..=n {
        match w.next_digit_with_hit() {
            Ok((d, hit)) => {
                digits.push(d);
                if hit && simple_at.is_none() {
                    simple_at = Some(k);
                }
                let pt = w.current().clone();
                if zero_at.is_none() && pt.is_zero() {
                    zero_at = Some(k);
                }
                points.push(pt.enclosure(base));
                exact_points.push(pt);
            }
            Err(Error::AmbiguousBranch { index }) => {
                ambiguous_at = Some(index);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(OrbitTrace {
        base: base.label().to_string(),
        x0: points[0].clone(),
        exact_points,
        points,
        digits,
        ambiguous_at,
        simple_at,
        zero_at,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DigitSource {
    ComputedFromPoint,
    UserSupplied,
}

/// A finite prefix `g_1 .. g_n` of a greedy expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GreedyDigits {
    pub base: String,
    pub digits: Vec<u8>,
    pub source: DigitSource,
    pub certified: bool,
}

impl GreedyDigits {
    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// Validates a user-supplied digit list by regeneration: the digits of the
    /// synthesized point must reproduce the list.
    pub fn from_user(base: &BetaParam, digits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = digits.iter().find(|&&d| d > 1) {
            return Err(Error::InvalidDigits(format!("digit {bad} is not in {{0, 1}}")));
        }
        let x = synthesize(base, &digits);
        let regen = self::digits(base, &x, digits.len())?;
        if !regen.certified {
            return Err(Error::AmbiguousBranch {
                index: regen.digits.len() + 1,
            });
        }
        if regen.digits != digits {
            return Err(Error::InvalidDigits(
                "sequence is not a greedy expansion (regeneration differs)".into(),
            ));
        }
        Ok(GreedyDigits {
            base: base.label().to_string(),
            digits,
            source: DigitSource::UserSupplied,
            certified: true,
        })
    }

    pub fn to_string_compact(&self) -> String {
        self.digits.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

/// First `n` greedy digits of `x`.
pub fn digits(base: &BetaParam, x: &Point, n: usize) -> Result<GreedyDigits> {
    base.check_depth(n)?;
    check_unit(base, x)?;
    let mut out = Vec::with_capacity(n);
    let mut certified = true;
    let mut w = Walker::new(base, x.clone());
    for _ in 0..n {
        if w.current().is_zero() {
            out.resize(n, 0);
            break;
        }
        match w.next_digit() {
            Ok(d) => out.push(d),
            Err(Error::AmbiguousBranch { .. }) => {
                certified = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(GreedyDigits {
        base: base.label().to_string(),
        digits: out,
        source: DigitSource::ComputedFromPoint,
        certified,
    })
}

/// Certified digits or an error.
pub fn certified_digits(base: &BetaParam, x: &Point, n: usize) -> Result<Vec<u8>> {
    let d = digits(base, x, n)?;
    if !d.certified {
        return Err(Error::AmbiguousBranch {
            index: d.digits.len() + 1,
        });
    }
    Ok(d.digits)
}

/// The truncation point `sum_k d_k beta^-k`, exactly.
pub fn synthesize(base: &BetaParam, digits: &[u8]) -> Point {
    let mut s = Point::zero(base);
    for &d in digits.iter().rev() {
        s = s.add_int(i64::from(d)).div_beta(base);
    }
    s
}

/// `N(x, y) = min{ i >= 1 : g_i(x) != g_i(y) }`, or `None` if the digits agree
/// through `max_depth`.
pub fn separation_time(
    base: &BetaParam,
    x: &Point,
    y: &Point,
    max_depth: usize,
) -> Result<Option<usize>> {
    base.check_depth(max_depth)?;
    check_unit(base, x)?;
    check_unit(base, y)?;
    let mut wx = Walker::new(base, x.clone());
    let mut wy = Walker::new(base, y.clone());
    for i in 1..=max_depth {
        if wx.current().is_zero() && wy.current().is_zero() {
            return Ok(None);
        }
        let a = wx.next_digit()?;
        let b = wy.next_digit()?;
        if a != b {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Answer to "does the orbit hit `1/beta`?".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "answer", rename_all = "lowercase")]
pub enum Simplicity {
    /// `tau^{n0-1}(x) = 1/beta` exactly.
    Yes { n0: usize },
    /// No hit through the checked depth.
    No { through: usize },
    /// Some orbit point could not be separated from `1/beta`.
    Unknown { index: usize },
}

/// Checks simplicity through `depth` digits (clamped to the precision
/// contract's maximum depth).
pub fn is_simple(base: &BetaParam, x: &Point, depth: usize) -> Result<Simplicity> {
    check_unit(base, x)?;
    let depth = depth.max(1).min(base.max_depth());
    let mut w = Walker::new(base, x.clone());
    for k in 1..=depth {
        if w.current().is_zero() {
            return Ok(Simplicity::No { through: depth });
        }
        match w.next_digit_with_hit() {
            Ok((_, true)) => return Ok(Simplicity::Yes { n0: k }),
            Ok(_) => {}
            Err(Error::AmbiguousBranch { index }) => return Ok(Simplicity::Unknown { index }),
            Err(e) => return Err(e),
        }
    }
    Ok(Simplicity::No { through: depth })
}

/// Parses a point literal: a rational (`1/3`, `0.25`, `1`) or a digit list
/// (`digits:0101`), which denotes the exact truncation point of those digits.
pub fn parse_point(base: &BetaParam, text: &str) -> Result<Point> {
    let t = text.trim();
    if let Some(list) = t.strip_prefix("digits:") {
        let ds: Vec<u8> = list
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '_'))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidDigits(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let g = GreedyDigits::from_user(base, ds)?;
        return Ok(synthesize(base, &g.digits));
    }
    let r = parse_rational(t)?;
    let p = Point::from_rational(base, &r);
    check_unit(base, &p)?;
    Ok(p)
}

/// Uniform dyadic point `U / 2^bits` with `U` drawn from `rng`.
pub fn random_unit_point<R: RngCore + ?Sized>(base: &BetaParam, bits: u32, rng: &mut R) -> Point {
    let words = bits.div_ceil(64) as usize;
    let mut limbs: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    let extra = words as u32 * 64 - bits;
    if extra > 0 {
        if let Some(last) = limbs.last_mut() {
            *last >>= extra;
        }
    }
    let m = Integer::from_digits(&limbs, rug::integer::Order::Lsf);
    Point::dyadic(base, m, bits)
}

/// Random point at working precision that is not simple through the
/// contract depth; simple draws are rejected and redrawn.
pub fn random_nonsimple_point<R: RngCore + ?Sized>(base: &BetaParam, rng: &mut R) -> Result<Point> {
    for _ in 0..64 {
        let x = random_unit_point(base, base.precision_bits(), rng);
        if x.is_zero() {
            continue;
        }
        if let Simplicity::No { .. } = is_simple(base, &x, base.max_depth())? {
            return Ok(x);
        }
    }
    Err(Error::SampleBudgetExceeded { budget: 64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::{Float, Rational};


    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn tau_fixtures() {
        let b = BetaParam::two(128).unwrap();
        let s = tau(&b, &Point::from_rational(&b, &q(3, 4))).unwrap();
        assert_eq!(s.digit, 1);
        assert_eq!(s.image.as_rational().unwrap(), q(1, 2));
        let z = tau(&b, &Point::zero(&b)).unwrap();
        assert!(z.image.is_zero() && z.digit == 0);

        let g = BetaParam::golden(128).unwrap();
        let s = tau(&g, &Point::one(&g)).unwrap();
        assert_eq!(s.digit, 1);
        // tau(1) = beta - 1 = 1/beta exactly
        assert!(s.image.exact_eq(&Point::one(&g).div_beta(&g)));
    }

    #[test]
    fn tau_rejects_outside_unit() {
        let b = BetaParam::two(128).unwrap();
        let x = Point::from_rational(&b, &q(3, 2));
        assert!(matches!(tau(&b, &x), Err(Error::Domain(_))));
        assert!(matches!(parse_point(&b, "-0.1"), Err(Error::Domain(_))));
    }

    #[test]
    fn orbit_fixtures() {
        let b = BetaParam::two(128).unwrap();
        let t = orbit(&b, &Point::from_rational(&b, &q(1, 3)), 6).unwrap();
        assert_eq!(t.digits, vec![0, 1, 0, 1, 0, 1]);
        for (k, p) in t.exact_points.iter().enumerate() {
            let expect = if k % 2 == 0 { q(1, 3) } else { q(2, 3) };
            assert_eq!(p.as_rational().unwrap(), expect);
        }

        let g = BetaParam::golden(128).unwrap();
        let t = orbit(&g, &Point::one(&g), 4).unwrap();
        assert!(t.certified());
        assert_eq!(t.digits, vec![1, 1, 0, 0]);
        assert!(t.exact_points[1].exact_eq(&Point::one(&g).div_beta(&g)));
        assert!(t.exact_points[2..].iter().all(Point::is_zero));
        assert_eq!(t.simple_at, Some(2));
        assert_eq!(t.zero_at, Some(2));

        let t = orbit(&g, &Point::zero(&g), 10).unwrap();
        assert!(t.digits.iter().all(|&d| d == 0));
    }

    #[test]
    fn beta_two_expands_one_as_all_ones() {
        let b = BetaParam::two(128).unwrap();
        let d = digits(&b, &Point::one(&b), 8).unwrap();
        assert_eq!(d.digits, vec![1; 8]);
    }

    #[test]
    fn orbit_rejects_contract_violation() {
        let b = BetaParam::two(64).unwrap();
        let r = orbit(&b, &Point::zero(&b), 1);
        assert!(matches!(r, Err(Error::InsufficientPrecision { .. })));
    }

    #[test]
    fn synthesize_fixtures() {
        let b = BetaParam::two(128).unwrap();
        assert_eq!(synthesize(&b, &[0, 1, 0, 1]).as_rational().unwrap(), q(5, 16));
        assert!(synthesize(&b, &[0, 0, 0]).is_zero());
        let g = BetaParam::golden(128).unwrap();
        assert!(synthesize(&g, &[1, 1]).exact_eq(&Point::one(&g)));
    }

    #[test]
    fn separation_fixtures() {
        let b = BetaParam::two(128).unwrap();
        let p = |r| Point::from_rational(&b, &r);
        assert_eq!(separation_time(&b, &p(q(3, 8)), &p(q(5, 16)), 20).unwrap(), Some(3));
        assert_eq!(separation_time(&b, &p(q(1, 3)), &p(q(1, 4)), 20).unwrap(), Some(4));
        let x = p(q(1, 3));
        let y = x.add(&Point::dyadic(&b, Integer::from(1), 100));
        assert_eq!(separation_time(&b, &x, &y, 40).unwrap(), None);
    }

    #[test]
    fn simplicity_fixtures() {
        let b = BetaParam::two(128).unwrap();
        assert_eq!(
            is_simple(&b, &Point::from_rational(&b, &q(1, 2)), 10).unwrap(),
            Simplicity::Yes { n0: 1 }
        );
        assert_eq!(
            is_simple(&b, &Point::from_rational(&b, &q(1, 3)), 50).unwrap(),
            Simplicity::No { through: 50 }
        );
        let g = BetaParam::golden(128).unwrap();
        assert_eq!(is_simple(&g, &Point::one(&g), 10).unwrap(), Simplicity::Yes { n0: 2 });
    }

    #[test]
    fn ambiguity_is_reported_not_guessed() {
        // a 200-bit rational approximation of 1/beta: 128 bits cannot place it
        let g = BetaParam::golden(128).unwrap();
        let hi = BetaParam::golden(512).unwrap();
        let m = Float::with_val(512, hi.inv_beta().value() << 200u32)
            .to_integer()
            .unwrap();
        let x = Point::dyadic(&g, m, 200);
        let t = orbit(&g, &x, 4).unwrap();
        assert_eq!(t.ambiguous_at, Some(1));
        assert!(t.require_certified().is_err());
        assert!(matches!(is_simple(&g, &x, 4).unwrap(), Simplicity::Unknown { index: 1 }));
        // the floor is below 1/beta, which a higher precision certifies
        let g2 = BetaParam::golden(320).unwrap();
        let t = orbit(&g2, &x, 4).unwrap();
        assert!(t.certified());
        assert_eq!(t.digits[0], 0);
    }

    #[test]
    fn user_digits_validated_by_regeneration() {
        let g = BetaParam::golden(128).unwrap();
        assert!(GreedyDigits::from_user(&g, vec![1, 0, 1, 0]).is_ok());
        // "11" is not greedy for the golden base
        assert!(matches!(
            GreedyDigits::from_user(&g, vec![0, 1, 1]),
            Err(Error::InvalidDigits(_))
        ));
        assert!(matches!(
            GreedyDigits::from_user(&g, vec![2]),
            Err(Error::InvalidDigits(_))
        ));
        let x = parse_point(&g, "digits:1010").unwrap();
        assert!(x.exact_eq(&synthesize(&g, &[1, 0, 1])));
    }
}
