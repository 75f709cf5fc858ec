//! Certified real numbers.
//!
//! An [`Enclosure`] is a closed interval `[lo, hi]` of MPFR floats. Every
//! operation rounds the lower end down and the upper end up, so the true
//! value of a computation always stays inside. `value()` and `radius()` give
//! the midpoint/radius view used in reports.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Round, Special};
use rug::{Float, Integer, Rational};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

#[derive(Clone, PartialEq)]
pub struct Enclosure {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

fn fmin(a: Float, b: Float) -> Float {
    if b < a {
        b
    } else {
        a
    }
}

fn fmax(a: Float, b: Float) -> Float {
    if b > a {
        b
    } else {
        a
    }
}

impl Enclosure {
    /// Interval from explicit bounds. Panics if `lo > hi` or either is NaN.
    pub fn from_bounds(lo: Float, hi: Float) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "NaN enclosure bound");
        assert!(lo <= hi, "enclosure bounds out of order");
        Enclosure { lo, hi }
    }

    pub fn exact(value: Float) -> Self {
        Enclosure {
            hi: value.clone(),
            lo: value,
        }
    }

    pub fn from_int(prec: u32, value: i64) -> Self {
        Enclosure {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_int(prec, 0)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(prec, 1)
    }

    pub fn from_integer(prec: u32, value: &Integer) -> Self {
        Enclosure {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    pub fn from_rational(prec: u32, value: &Rational) -> Self {
        Enclosure {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    /// Exact when `prec >= 53`.
    pub fn from_f64(prec: u32, value: f64) -> Self {
        Enclosure {
            lo: down(prec, value),
            hi: up(prec, value),
        }
    }

    /// `(-inf, +inf)`.
    pub fn entire(prec: u32) -> Self {
        Enclosure {
            lo: Float::with_val(prec, Special::NegInfinity),
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    fn prec2(&self, other: &Enclosure) -> u32 {
        self.prec().max(other.prec())
    }

    /// Midpoint, rounded to nearest.
    pub fn value(&self) -> Float {
        let p = self.prec();
        if self.lo.is_infinite() || self.hi.is_infinite() {
            if self.lo.is_infinite() && self.hi.is_infinite() && self.lo.is_sign_negative() != self.hi.is_sign_negative() {
                return Float::with_val(p, 0);
            }
            return if self.lo.is_infinite() { self.hi.clone() } else { self.lo.clone() };
        }
        let mut mid = Float::with_val(p + 1, &self.lo + &self.hi);
        mid /= 2;
        Float::with_val(p, mid)
    }

    /// Upper bound on the distance from `value()` to either end.
    pub fn radius(&self) -> Float {
        let p = self.prec();
        let mid = self.value();
        let a = up(p, &self.hi - &mid);
        let b = up(p, &mid - &self.lo);
        fmax(a, b)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// True when every point of `self` is `< ` every point of `other`.
    pub fn certainly_lt(&self, other: &Enclosure) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Enclosure) -> bool {
        self.hi <= other.lo
    }

    pub fn certainly_gt(&self, other: &Enclosure) -> bool {
        other.certainly_lt(self)
    }

    pub fn certainly_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn certainly_negative(&self) -> bool {
        self.hi < 0
    }

    /// Certified sign, `None` when the enclosure straddles zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo > 0 {
            Some(Ordering::Greater)
        } else if self.hi < 0 {
            Some(Ordering::Less)
        } else if self.lo == 0 && self.hi == 0 {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: fmin(self.lo.clone(), other.lo.clone()),
            hi: fmax(self.hi.clone(), other.hi.clone()),
        }
    }

    /// Grows the interval by `r` on both sides.
    pub fn widen(&self, r: &Float) -> Enclosure {
        let p = self.prec();
        Enclosure {
            lo: down(p, &self.lo - r),
            hi: up(p, &self.hi + r),
        }
    }

    /// Adds `[0, r]`.
    pub fn extend_up(&self, r: &Float) -> Enclosure {
        Enclosure {
            lo: self.lo.clone(),
            hi: up(self.prec(), &self.hi + r),
        }
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        let p = self.prec2(other);
        Enclosure {
            lo: down(p, &self.lo + &other.lo),
            hi: up(p, &self.hi + &other.hi),
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        let p = self.prec2(other);
        Enclosure {
            lo: down(p, &self.lo - &other.hi),
            hi: up(p, &self.hi - &other.lo),
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
        }
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let p = self.prec2(other);
        if self.lo >= 0 && other.lo >= 0 {
            return Enclosure {
                lo: down(p, &self.lo * &other.lo),
                hi: up(p, &self.hi * &other.hi),
            };
        }
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down(p, a * b);
            let h = up(p, a * b);
            if l.is_nan() || h.is_nan() {
                return Enclosure::entire(p);
            }
            lo = Some(match lo {
                None => l,
                Some(v) => fmin(v, l),
            });
            hi = Some(match hi {
                None => h,
                Some(v) => fmax(v, h),
            });
        }
        Enclosure {
            lo: lo.unwrap_or_else(|| Float::new(p)),
            hi: hi.unwrap_or_else(|| Float::new(p)),
        }
    }

    pub fn mul_int(&self, k: i64) -> Enclosure {
        self.mul(&Enclosure::from_int(self.prec(), k))
    }

    /// Division; the result is `(-inf, inf)` when the divisor contains zero.
    pub fn div(&self, other: &Enclosure) -> Enclosure {
        let p = self.prec2(other);
        if other.contains_zero() {
            return Enclosure::entire(p);
        }
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo = Float::with_val(p, Special::Infinity);
        let mut hi = Float::with_val(p, Special::NegInfinity);
        for (a, b) in pairs {
            let l = down(p, a / b);
            let h = up(p, a / b);
            if l.is_nan() || h.is_nan() {
                return Enclosure::entire(p);
            }
            lo = fmin(lo, l);
            hi = fmax(hi, h);
        }
        Enclosure { lo, hi }
    }

    pub fn recip(&self) -> Enclosure {
        Enclosure::one(self.prec()).div(self)
    }

    /// Exact scaling by `2^k`.
    pub fn mul_pow2(&self, k: i32) -> Enclosure {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo <<= k;
        hi <<= k;
        Enclosure { lo, hi }
    }

    pub fn abs(&self) -> Enclosure {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let p = self.prec();
            let m = fmax(Float::with_val(p, -&self.lo), self.hi.clone());
            Enclosure {
                lo: Float::with_val(p, 0),
                hi: m,
            }
        }
    }

    pub fn max(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: fmax(self.lo.clone(), other.lo.clone()),
            hi: fmax(self.hi.clone(), other.hi.clone()),
        }
    }

    pub fn min(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: fmin(self.lo.clone(), other.lo.clone()),
            hi: fmin(self.hi.clone(), other.hi.clone()),
        }
    }

    /// Natural logarithm. Negative parts of the interval are clipped to 0
    /// (so `ln` of an interval touching 0 has lower end `-inf`).
    pub fn ln(&self) -> Enclosure {
        let p = self.prec();
        if self.hi < 0 {
            return Enclosure::entire(p);
        }
        let lo_arg = fmax(self.lo.clone(), Float::with_val(p, 0));
        Enclosure {
            lo: down(p, lo_arg.ln_ref()),
            hi: up(p, self.hi.ln_ref()),
        }
    }

    pub fn exp(&self) -> Enclosure {
        let p = self.prec();
        Enclosure {
            lo: down(p, self.lo.exp_ref()),
            hi: up(p, self.hi.exp_ref()),
        }
    }

    /// `self^e` for `self >= 0`, as `exp(e * ln(self))`.
    pub fn pow(&self, e: &Enclosure) -> Enclosure {
        if self.lo == 0 && self.hi == 0 && e.certainly_positive() {
            return Enclosure::zero(self.prec());
        }
        let l = self.ln();
        let prod = e.mul(&l);
        if prod.lo.is_nan() || prod.hi.is_nan() {
            return Enclosure::entire(self.prec());
        }
        prod.exp()
    }

    /// Rigorous `(value, radius)` pair in double precision: `value` is the
    /// nearest double to the midpoint and `radius` is rounded up far enough to
    /// cover the conversion error.
    pub fn to_f64_ball(&self) -> (f64, f64) {
        if !self.is_finite() {
            return (self.value().to_f64(), f64::INFINITY);
        }
        let mid = self.value();
        let v = mid.to_f64();
        let vf = Float::with_val(64, v);
        let p = self.prec().max(64);
        let a = up(p, &self.hi - &vf);
        let b = up(p, &vf - &self.lo);
        let r = fmax(a, b);
        let r = fmax(r, Float::with_val(p, 0));
        (v, r.to_f64_round(Round::Up))
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64()
    }

    /// The same interval rounded outward to `prec` bits.
    pub fn round_to(&self, prec: u32) -> Enclosure {
        Enclosure {
            lo: down(prec, &self.lo),
            hi: up(prec, &self.hi),
        }
    }

    /// `true` if `[lo, hi] ⊆ [0, 1]`.
    pub fn within_unit(&self) -> bool {
        self.lo >= 0 && self.hi <= 1
    }
}

/// Number of decimal digits that carry `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    (f64::from(prec) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// Decimal rendering of a float at its full precision.
pub fn format_float(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(decimal_digits(x.prec())))
}

/// Short decimal rendering of a float, rounded up (used for radii).
pub fn format_bound(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix_round(10, Some(8), Round::Up)
}

/// `serialize_with` helper for upper bounds stored as bare floats.
pub fn serialize_bound<S: Serializer>(x: &Float, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_float(x))
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} ± {}]", self.value().to_f64(), self.radius().to_f64())
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", format_float(&self.value()), format_bound(&self.radius()))
    }
}

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Enclosure", 2)?;
        s.serialize_field("value", &format_float(&self.value()))?;
        s.serialize_field("radius", &format_bound(&self.radius()))?;
        s.end()
    }
}
