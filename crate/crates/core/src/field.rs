//! Exact points of `Q(beta)`.
//!
//! A [`Point`] is `(c_0 + c_1*beta + … + c_{d-1}*beta^{d-1}) / den` with
//! integer coefficients and `den > 0`, where `d` is the degree of beta's
//! minimal polynomial. Multiplying and dividing by beta stay inside this form,
//! so beta-map orbits of exact inputs are computed without rounding. Only sign
//! decisions touch floating point, and those are certified.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::base::BetaParam;
use crate::enclosure::Enclosure;

#[derive(Clone, Debug)]
pub struct Point {
    num: Vec<Integer>,
    den: Integer,
}

impl Point {
    pub fn zero(base: &BetaParam) -> Self {
        Point {
            num: vec![Integer::new(); base.degree()],
            den: Integer::from(1),
        }
    }

    pub fn from_int(base: &BetaParam, k: i64) -> Self {
        let mut p = Self::zero(base);
        p.num[0] = Integer::from(k);
        p
    }

    pub fn one(base: &BetaParam) -> Self {
        Self::from_int(base, 1)
    }

    pub fn from_rational(base: &BetaParam, r: &Rational) -> Self {
        let mut p = Self::zero(base);
        p.num[0] = r.numer().clone();
        p.den = r.denom().clone();
        p
    }

    /// `mantissa / 2^bits`.
    pub fn dyadic(base: &BetaParam, mantissa: Integer, bits: u32) -> Self {
        let mut p = Self::zero(base);
        p.num[0] = mantissa;
        p.den = Integer::from(1) << bits;
        p
    }

    pub fn coefficients(&self) -> &[Integer] {
        &self.num
    }

    pub fn denominator(&self) -> &Integer {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| *c == 0)
    }

    /// The rational value when the point lies in `Q`.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.num[1..].iter().all(|c| *c == 0) {
            Some(Rational::from((self.num[0].clone(), self.den.clone())))
        } else {
            None
        }
    }

    /// Adds the integer `k`.
    pub fn add_int(&self, k: i64) -> Self {
        let mut p = self.clone();
        if k != 0 {
            p.num[0] += Integer::from(&self.den * k);
        }
        p
    }

    pub fn neg(&self) -> Self {
        Point {
            num: self.num.iter().map(|c| Integer::from(-c)).collect(),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &Point) -> Self {
        if self.den == other.den {
            return Point {
                num: self.num.iter().zip(&other.num).map(|(a, b)| Integer::from(a + b)).collect(),
                den: self.den.clone(),
            };
        }
        let mut out = Point {
            num: self
                .num
                .iter()
                .zip(&other.num)
                .map(|(a, b)| Integer::from(a * &other.den) + Integer::from(b * &self.den))
                .collect(),
            den: Integer::from(&self.den * &other.den),
        };
        out.reduce();
        out
    }

    pub fn sub(&self, other: &Point) -> Self {
        self.add(&other.neg())
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Point {
            num: self.num.iter().map(|c| Integer::from(c * k)).collect(),
            den: self.den.clone(),
        }
    }

    /// `beta * self`, reducing `beta^d` with the minimal polynomial.
    pub fn mul_beta(&self, base: &BetaParam) -> Self {
        let a = base.poly();
        let d = self.num.len();
        let lead = &a[d];
        let top = &self.num[d - 1];
        let mut num = Vec::with_capacity(d);
        for (i, ai) in a.iter().enumerate().take(d) {
            let mut c = if i == 0 {
                Integer::new()
            } else {
                Integer::from(lead * &self.num[i - 1])
            };
            c -= Integer::from(top * ai);
            num.push(c);
        }
        let den = if *lead == 1 {
            self.den.clone()
        } else {
            Integer::from(&self.den * lead)
        };
        Point { num, den }
    }

    /// `self / beta`, using `1/beta = -(a_1 + a_2 beta + … + a_d beta^{d-1}) / a_0`.
    pub fn div_beta(&self, base: &BetaParam) -> Self {
        let a = base.poly();
        let d = self.num.len();
        let s = Integer::from(-&a[0]);
        let c0 = &self.num[0];
        let mut num: Vec<Integer> = (0..d)
            .map(|j| {
                let next = if j + 1 < d {
                    Integer::from(&s * &self.num[j + 1])
                } else {
                    Integer::new()
                };
                next + Integer::from(c0 * &a[j + 1])
            })
            .collect();
        let mut den = Integer::from(&self.den * &s);
        if den < 0 {
            den = -den;
            for c in &mut num {
                *c = Integer::from(-&*c);
            }
        }
        let mut out = Point { num, den };
        if s != 1 && s != -1 {
            out.reduce();
        }
        out
    }

    /// `beta^k` for any integer `k`.
    pub fn beta_pow(base: &BetaParam, k: i64) -> Self {
        let mut p = Self::one(base);
        for _ in 0..k.unsigned_abs() {
            p = if k > 0 { p.mul_beta(base) } else { p.div_beta(base) };
        }
        p
    }

    /// Divides out the common factor of all coefficients and the denominator.
    pub fn reduce(&mut self) {
        let mut g = self.den.clone();
        for c in &self.num {
            if g == 1 {
                return;
            }
            g.gcd_mut(c);
        }
        if g > 1 {
            for c in &mut self.num {
                c.div_exact_mut(&g);
            }
            self.den.div_exact_mut(&g);
        }
    }

    /// Exact equality of field elements.
    pub fn exact_eq(&self, other: &Point) -> bool {
        self.num
            .iter()
            .zip(&other.num)
            .all(|(a, b)| Integer::from(a * &other.den) == Integer::from(b * &self.den))
    }

    /// Enclosure of `c_0 + c_1 beta + …` (without the denominator).
    fn numerator_enclosure(&self, base: &BetaParam, prec: u32) -> Enclosure {
        let d = self.num.len();
        let mut acc = Enclosure::from_integer(prec, &self.num[d - 1]);
        for c in self.num.iter().rev().skip(1) {
            acc = acc.mul(base.beta()).add(&Enclosure::from_integer(prec, c));
        }
        acc
    }

    /// Enclosure of the point at the base's working precision.
    pub fn enclosure(&self, base: &BetaParam) -> Enclosure {
        let prec = base.precision_bits();
        if let Some(r) = self.as_rational() {
            return Enclosure::from_rational(prec, &r);
        }
        self.numerator_enclosure(base, prec)
            .div(&Enclosure::from_integer(prec, &self.den))
    }

    /// Certified sign. Exact for points of `Q`; otherwise decided at working
    /// precision, `None` when the enclosure cannot separate the value from 0.
    pub fn sign(&self, base: &BetaParam) -> Option<Ordering> {
        if self.is_zero() {
            return Some(Ordering::Equal);
        }
        if self.num[1..].iter().all(|c| *c == 0) {
            return Some(self.num[0].cmp0());
        }
        let e = self.numerator_enclosure(base, base.precision_bits());
        match e.sign() {
            Some(Ordering::Equal) | None => None,
            s => s,
        }
    }

    /// Certified comparison; `None` when undecided at working precision.
    pub fn cmp_point(&self, other: &Point, base: &BetaParam) -> Option<Ordering> {
        self.sub(other).sign(base)
    }

    pub fn cmp_rational(&self, r: &Rational, base: &BetaParam) -> Option<Ordering> {
        self.cmp_point(&Point::from_rational(base, r), base)
    }

    /// `0 <= self <= 1`, `None` if undecided.
    pub fn in_unit_interval(&self, base: &BetaParam) -> Option<bool> {
        let s0 = self.sign(base)?;
        let s1 = self.add_int(-1).sign(base)?;
        Some(s0 != Ordering::Less && s1 != Ordering::Greater)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    #[test]
    fn golden_identities_are_exact() {
        let b = BetaParam::golden(128).unwrap();
        let one = Point::one(&b);
        // beta^2 = beta + 1
        let lhs = one.mul_beta(&b).mul_beta(&b);
        let rhs = one.mul_beta(&b).add_int(1);
        assert!(lhs.exact_eq(&rhs));
        // 1/beta = beta - 1
        let inv = one.div_beta(&b);
        assert!(inv.exact_eq(&one.mul_beta(&b).add_int(-1)));
        // 1/beta + 1/beta^2 = 1
        let s = inv.add(&inv.div_beta(&b));
        assert!(s.exact_eq(&one));
    }

    #[test]
    fn rational_base_round_trip() {
        let b = BetaParam::parse("17/10", 128).unwrap();
        let x = Point::from_rational(&b, &Rational::from((3, 7)));
        let y = x.mul_beta(&b).div_beta(&b);
        assert!(x.exact_eq(&y));
        assert_eq!(y.as_rational().unwrap(), Rational::from((3, 7)));
        let e = x.mul_beta(&b).enclosure(&b);
        assert!(e.contains(&Float::with_val(128, &Rational::from((51, 70)))) || !e.is_exact());
    }

    #[test]
    fn cubic_base_inverse() {
        let b = BetaParam::parse("tribonacci", 192).unwrap();
        let x = Point::from_rational(&b, &Rational::from((2, 5)));
        let y = x.div_beta(&b).mul_beta(&b);
        assert!(x.exact_eq(&y));
        let e = x.div_beta(&b).enclosure(&b);
        let expect = Enclosure::from_rational(192, &Rational::from((2, 5))).div(b.beta());
        assert!(e.intersects(&expect));
    }

    #[test]
    fn signs() {
        let b = BetaParam::golden(128).unwrap();
        let inv = Point::one(&b).div_beta(&b);
        assert_eq!(inv.add_int(-1).sign(&b), Some(Ordering::Less));
        assert_eq!(inv.mul_beta(&b).add_int(-1).sign(&b), Some(Ordering::Equal));
        assert_eq!(inv.in_unit_interval(&b), Some(true));
        assert_eq!(
            inv.cmp_rational(&Rational::from((5, 8)), &b),
            Some(Ordering::Less)
        );
    }
}
