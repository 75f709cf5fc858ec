//! The base `beta` of the expansion.
//!
//! A base is an algebraic number in `(1, 2]` given by its minimal polynomial
//! over the integers: rationals `p/q` (polynomial `q*X - p`) or one of the
//! named algebraic constants below. Keeping the polynomial lets orbit points
//! live exactly in `Q(beta)` (see [`crate::field`]).

use std::cmp::Ordering;

use rug::{Float, Integer, Rational};

use crate::enclosure::Enclosure;
use crate::error::{Error, Result};

pub const MIN_PRECISION_BITS: u32 = 64;
/// Guard bits of the precision contract.
pub const GUARD_BITS: u32 = 64;

/// Named bases, each with its (irreducible) minimal polynomial `a_0..=a_d`.
pub const NAMED_BASES: &[(&str, &[i64])] = &[
    ("golden", &[-1, -1, 1]),
    ("sqrt2", &[-2, 0, 1]),
    ("plastic", &[-1, -1, 0, 1]),
    ("supergolden", &[-1, 0, -1, 1]),
    ("tribonacci", &[-1, -1, -1, 1]),
];

#[derive(Clone, Debug)]
pub struct BetaParam {
    label: String,
    poly: Vec<Integer>,
    rational: Option<Rational>,
    beta: Enclosure,
    inv_beta: Enclosure,
    precision_bits: u32,
    log2_beta: f64,
}

impl BetaParam {
    /// Parses `golden`, `sqrt2`, …, a decimal (`1.7`) or a fraction (`17/10`).
    pub fn parse(text: &str, precision_bits: u32) -> Result<Self> {
        let t = text.trim();
        if let Some((_, poly)) = NAMED_BASES.iter().find(|(n, _)| *n == t) {
            return Self::algebraic(t, poly, precision_bits);
        }
        let r = parse_rational(t)?;
        Self::rational(r, precision_bits)
    }

    pub fn rational(beta: Rational, precision_bits: u32) -> Result<Self> {
        check_precision(precision_bits)?;
        if beta <= 1 || beta > 2 {
            return Err(Error::Domain(format!("beta = {beta} is outside (1, 2]")));
        }
        let label = if *beta.denom() == 1 {
            beta.numer().to_string()
        } else {
            format!("{}/{}", beta.numer(), beta.denom())
        };
        let poly = vec![Integer::from(-beta.numer()), beta.denom().clone()];
        let enc = Enclosure::from_rational(precision_bits, &beta);
        Ok(Self::finish(label, poly, Some(beta), enc, precision_bits))
    }

    pub fn two(precision_bits: u32) -> Result<Self> {
        Self::rational(Rational::from(2), precision_bits)
    }

    pub fn golden(precision_bits: u32) -> Result<Self> {
        Self::parse("golden", precision_bits)
    }

    fn algebraic(label: &str, coeffs: &[i64], precision_bits: u32) -> Result<Self> {
        check_precision(precision_bits)?;
        let poly: Vec<Integer> = coeffs.iter().map(|&c| Integer::from(c)).collect();
        let enc = isolate_root(&poly, precision_bits)?;
        Ok(Self::finish(label.to_string(), poly, None, enc, precision_bits))
    }

    fn finish(
        label: String,
        poly: Vec<Integer>,
        rational: Option<Rational>,
        beta: Enclosure,
        precision_bits: u32,
    ) -> Self {
        let inv_beta = beta.recip();
        let log2_beta = beta.value().to_f64().log2();
        BetaParam {
            label,
            poly,
            rational,
            beta,
            inv_beta,
            precision_bits,
            log2_beta,
        }
    }

    /// Same base at another working precision.
    pub fn with_precision(&self, precision_bits: u32) -> Result<Self> {
        match &self.rational {
            Some(r) => Self::rational(r.clone(), precision_bits),
            None => {
                let coeffs: Vec<i64> = self.poly.iter().map(|c| c.to_i64().unwrap_or(0)).collect();
                Self::algebraic(&self.label, &coeffs, precision_bits)
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Minimal polynomial coefficients `a_0..=a_d`, `a_d > 0`.
    pub fn poly(&self) -> &[Integer] {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.rational.as_ref()
    }

    pub fn is_two(&self) -> bool {
        self.rational.as_ref().is_some_and(|r| *r == 2)
    }

    pub fn beta(&self) -> &Enclosure {
        &self.beta
    }

    pub fn inv_beta(&self) -> &Enclosure {
        &self.inv_beta
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn log2_beta(&self) -> f64 {
        self.log2_beta
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64()
    }

    /// Bits demanded by the precision contract for an orbit of length `depth`.
    pub fn required_precision(&self, depth: usize) -> u32 {
        (depth as f64 * self.log2_beta).ceil() as u32 + GUARD_BITS
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        let required = self.required_precision(depth);
        if required > self.precision_bits {
            return Err(Error::InsufficientPrecision {
                depth,
                required,
                available: self.precision_bits,
            });
        }
        Ok(())
    }

    /// Largest orbit depth allowed by the precision contract.
    pub fn max_depth(&self) -> usize {
        let mut d = (f64::from(self.precision_bits - GUARD_BITS) / self.log2_beta).floor() as usize;
        while d > 0 && self.check_depth(d).is_err() {
            d -= 1;
        }
        d
    }

    /// `1 - 1/beta`.
    pub fn one_minus_inv_beta(&self) -> Enclosure {
        Enclosure::one(self.precision_bits).sub(&self.inv_beta)
    }

    /// `beta^-n` as an enclosure.
    pub fn inv_beta_pow(&self, n: usize) -> Enclosure {
        let mut acc = Enclosure::one(self.precision_bits);
        let mut base = self.inv_beta.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }
}

fn check_precision(precision_bits: u32) -> Result<()> {
    if precision_bits < MIN_PRECISION_BITS {
        return Err(Error::InvalidParameter(format!(
            "precision_bits = {precision_bits} is below the minimum of {MIN_PRECISION_BITS}"
        )));
    }
    Ok(())
}

/// Interval Horner evaluation of `poly` at `x`.
pub(crate) fn eval_poly(poly: &[Integer], x: &Enclosure) -> Enclosure {
    let p = x.prec();
    let mut acc = Enclosure::from_integer(p, &poly[poly.len() - 1]);
    for c in poly.iter().rev().skip(1) {
        acc = acc.mul(x).add(&Enclosure::from_integer(p, c));
    }
    acc
}

/// Bisection for the unique root of `poly` in `(1, 2]`, to `precision_bits`.
fn isolate_root(poly: &[Integer], precision_bits: u32) -> Result<Enclosure> {
    let p = precision_bits;
    let sign_at = |x: &Float| eval_poly(poly, &Enclosure::exact(x.clone())).sign();
    let mut lo = Float::with_val(p, 1);
    let mut hi = Float::with_val(p, 2);
    let s_lo = sign_at(&lo);
    let s_hi = sign_at(&hi);
    if s_hi == Some(Ordering::Equal) {
        return Ok(Enclosure::exact(hi));
    }
    match (s_lo, s_hi) {
        (Some(a), Some(b)) if a != b && a != Ordering::Equal => {}
        _ => return Err(Error::Domain("polynomial has no isolated root in (1, 2]".into())),
    }
    let lo_sign = s_lo;
    for _ in 0..(p + 8) {
        let mut mid = Float::with_val(p + 1, &lo + &hi);
        mid /= 2;
        let mid = Float::with_val(p, mid);
        if mid == lo || mid == hi {
            break;
        }
        match sign_at(&mid) {
            Some(Ordering::Equal) => return Ok(Enclosure::exact(mid)),
            s if s == lo_sign => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    Ok(Enclosure::from_bounds(lo, hi))
}

/// Exact parse of `p/q`, integers and decimals like `-1.25e-3`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let err = || Error::Parse(format!("cannot parse {t:?} as a rational number"));
    if let Some((n, d)) = t.split_once('/') {
        let n: Integer = n.trim().parse().map_err(|_| err())?;
        let d: Integer = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(Rational::from((n, d)));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: Integer = if digits.is_empty() { Integer::new() } else { digits.parse().map_err(|_| err())? };
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow10 = |e: u32| Integer::from(Integer::u_pow_u(10, e));
    let r = if scale >= 0 {
        Rational::from(num * pow10(scale as u32))
    } else {
        Rational::from((num, pow10((-scale) as u32)))
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_root_is_tight() {
        let b = BetaParam::golden(256).unwrap();
        let sqrt5 = Float::with_val(300, 5).sqrt();
        let g = Float::with_val(300, (sqrt5 + 1u32) / 2u32);
        assert!(b.beta().contains(&g));
        assert!(b.beta().width() < Float::with_val(64, 1e-70));
        assert_eq!(b.degree(), 2);
    }

    #[test]
    fn named_bases_lie_in_range() {
        for (name, _) in NAMED_BASES {
            let b = BetaParam::parse(name, 128).unwrap();
            let v = b.beta_f64();
            assert!(v > 1.0 && v <= 2.0, "{name} = {v}");
        }
        let t = BetaParam::parse("tribonacci", 128).unwrap().beta_f64();
        assert!((t - 1.839_286_755_214_161).abs() < 1e-12);
    }

    #[test]
    fn rational_bounds_checked() {
        assert!(BetaParam::parse("2", 64).is_ok());
        assert!(matches!(BetaParam::parse("2.5", 64), Err(Error::Domain(_))));
        assert!(matches!(BetaParam::parse("1", 64), Err(Error::Domain(_))));
        assert!(matches!(BetaParam::parse("1.5", 32), Err(Error::InvalidParameter(_))));
        assert!(matches!(BetaParam::parse("x", 64), Err(Error::Parse(_))));
        assert_eq!(BetaParam::parse("1.7", 64).unwrap().label(), "17/10");
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.25").unwrap(), Rational::from((1, 4)));
        assert_eq!(parse_rational("-1.5e-1").unwrap(), Rational::from((-3, 20)));
        assert_eq!(parse_rational("1/3").unwrap(), Rational::from((1, 3)));
        assert_eq!(parse_rational("3").unwrap(), Rational::from(3));
        assert_eq!(parse_rational(".5").unwrap(), Rational::from((1, 2)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn precision_contract() {
        let b = BetaParam::two(128).unwrap();
        assert!(b.check_depth(64).is_ok());
        assert!(matches!(
            b.check_depth(65),
            Err(Error::InsufficientPrecision { required: 129, .. })
        ));
        assert_eq!(b.max_depth(), 64);
    }
}
