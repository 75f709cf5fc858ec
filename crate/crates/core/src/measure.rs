//! The Parry invariant density
//! `h(x) = (1/F) * sum_n beta^-n * 1[x <= tau^n(1)]`, its normalizer `F`,
//! and the digit frequency `M = m([1/beta, 1])`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rug::{Float, Integer};
use serde::Serialize;

use crate::base::BetaParam;
use crate::dynamics::step;
use crate::enclosure::{format_float, serialize_bound, Enclosure};
use crate::error::{Error, Result};
use crate::field::Point;

/// The density as a step function, plus the raw orbit of 1 it was built from.
#[derive(Clone, Debug, Serialize)]
pub struct PiecewiseDensity {
    pub beta: String,
    /// Orbit truncation: terms `n = 0..=k` are summed.
    pub k: usize,
    /// Distinct values of `tau^n(1)`, together with 0 and 1, ascending.
    pub breakpoints: Vec<Enclosure>,
    /// Unnormalized level on each cell `(breakpoints[j], breakpoints[j+1]]`.
    pub levels: Vec<Enclosure>,
    /// Bound on the omitted terms `sum_{n>k} beta^-n`.
    #[serde(serialize_with = "serialize_bound")]
    pub tail_bound: Float,
    #[serde(rename = "F")]
    pub f: Enclosure,
    #[serde(rename = "M")]
    pub m: Enclosure,
    /// `Some(n)` when `tau^n(1) = 0` exactly; the series is then finite.
    pub finite_orbit: Option<usize>,
    #[serde(skip)]
    orbit: Vec<Enclosure>,
    #[serde(skip)]
    weights: Vec<Enclosure>,
    #[serde(skip)]
    inv_beta: Enclosure,
    #[serde(skip)]
    prec: u32,
}

/// Smallest `k` with `beta^-(k+1) / (1 - 1/beta) <= 2^-(p/2)`, capped by the
/// precision contract.
pub fn default_truncation(base: &BetaParam) -> usize {
    let target = f64::from(base.precision_bits() / 2);
    let lb = base.log2_beta();
    let shift = -(1.0 - 1.0 / base.beta_f64()).log2();
    let k = ((target + shift) / lb).ceil() as usize;
    k.clamp(1, base.max_depth().max(1))
}

fn tail_of(base: &BetaParam, k: usize) -> Float {
    // beta^-(k+1) / (1 - 1/beta), rounded up
    let num = base.inv_beta_pow(k + 1);
    num.div(&base.one_minus_inv_beta()).hi().clone()
}

/// Literal orbit of 1 (at `beta = 2` this is `1, 0, 0, …`), stopping at an
/// exact zero.
fn orbit_of_one(base: &BetaParam, k: usize) -> Result<(Vec<Point>, Option<usize>)> {
    let mut pts = vec![Point::one(base)];
    for n in 1..=k {
        let prev = &pts[n - 1];
        let next = if base.is_two() && n == 1 {
            Point::zero(base)
        } else {
            step(base, prev, n)?.image
        };
        let zero = next.is_zero();
        pts.push(next);
        if zero {
            return Ok((pts, Some(n)));
        }
    }
    Ok((pts, None))
}

/// Builds the density with orbit truncation `k` (default:
/// [`default_truncation`]).
pub fn build_density(base: &BetaParam, k: Option<usize>) -> Result<PiecewiseDensity> {
    let k = k.unwrap_or_else(|| default_truncation(base));
    if k == 0 {
        return Err(Error::InvalidParameter("truncation K must be >= 1".into()));
    }
    base.check_depth(k)?;
    let prec = base.precision_bits();
    let (exact, finite_orbit) = orbit_of_one(base, k)?;
    let tail_bound = if finite_orbit.is_some() {
        Float::with_val(prec, 0)
    } else {
        tail_of(base, k)
    };
    let orbit: Vec<Enclosure> = exact.iter().map(|p| p.enclosure(base)).collect();
    let mut weights = Vec::with_capacity(orbit.len());
    let mut w = Enclosure::one(prec);
    for _ in 0..orbit.len() {
        weights.push(w.clone());
        w = w.mul(base.inv_beta());
    }

    // F and M.
    let inv = base.inv_beta().clone();
    let zero = Enclosure::zero(prec);
    let mut f_sum = Enclosure::zero(prec);
    let mut m_sum = Enclosure::zero(prec);
    for (t, w) in orbit.iter().zip(&weights) {
        f_sum = f_sum.add(&t.mul(w));
        m_sum = m_sum.add(&t.sub(&inv).max(&zero).mul(w));
    }
    let f = f_sum.extend_up(&tail_bound);
    let m = m_sum.extend_up(&tail_bound).div(&f);

    // Breakpoints: group exactly equal orbit points, then sort.
    let mut groups: Vec<(usize, Enclosure)> = Vec::new(); // (representative index, weight)
    let mut seen: HashMap<(Vec<Integer>, Integer), usize> = HashMap::new();
    for (n, p) in exact.iter().enumerate() {
        let mut key = p.clone();
        key.reduce();
        let key = (key.coefficients().to_vec(), key.denominator().clone());
        match seen.get(&key) {
            Some(&g) => groups[g].1 = groups[g].1.add(&weights[n]),
            None => {
                seen.insert(key, groups.len());
                groups.push((n, weights[n].clone()));
            }
        }
    }
    groups.sort_by(|a, b| {
        orbit[a.0]
            .value()
            .partial_cmp(&orbit[b.0].value())
            .unwrap_or(Ordering::Equal)
    });
    // Merge neighbours whose enclosures overlap.
    let mut merged: Vec<(Enclosure, Enclosure)> = Vec::new();
    for (r, w) in groups {
        let e = orbit[r].clone();
        match merged.last_mut() {
            Some((le, lw)) if le.intersects(&e) => {
                *le = le.hull(&e);
                *lw = lw.add(&w);
            }
            _ => merged.push((e, w)),
        }
    }
    let mut breakpoints = Vec::with_capacity(merged.len() + 1);
    let mut point_weights = Vec::with_capacity(merged.len() + 1);
    if !merged.first().is_some_and(|(e, _)| e.is_exact() && e.lo().is_zero()) {
        breakpoints.push(Enclosure::zero(prec));
        point_weights.push(Enclosure::zero(prec));
    }
    for (e, w) in merged {
        breakpoints.push(e);
        point_weights.push(w);
    }
    // Cell j = (b_j, b_{j+1}] is covered by every orbit point at or above b_{j+1}.
    let cells = breakpoints.len() - 1;
    let mut levels = vec![Enclosure::zero(prec); cells];
    let mut acc = Enclosure::zero(prec);
    for j in (0..cells).rev() {
        acc = acc.add(&point_weights[j + 1]);
        levels[j] = acc.extend_up(&tail_bound);
    }

    Ok(PiecewiseDensity {
        beta: base.label().to_string(),
        k,
        breakpoints,
        levels,
        tail_bound,
        f,
        m,
        finite_orbit,
        orbit,
        weights,
        inv_beta: inv,
        prec,
    })
}

impl PiecewiseDensity {
    pub fn precision_bits(&self) -> u32 {
        self.prec
    }

    /// `tau^n(1)` for `n = 0..`, as enclosures.
    pub fn orbit_of_one(&self) -> &[Enclosure] {
        &self.orbit
    }

    /// The a-priori bound `(b - a) / (F (1 - 1/beta))`.
    pub fn density_upper_bound(&self) -> Enclosure {
        let one = Enclosure::one(self.prec);
        one.div(&self.f.mul(&one.sub(&self.inv_beta)))
    }

    /// `h(x)`. An `x` straddling a breakpoint yields the hull of the
    /// neighbouring levels.
    pub fn density_eval(&self, x: &Enclosure) -> Result<Enclosure> {
        if !x.within_unit() {
            return Err(Error::Domain(format!("x = {x} lies outside [0, 1]")));
        }
        let mut out: Option<Enclosure> = None;
        for (j, level) in self.levels.iter().enumerate() {
            let a = &self.breakpoints[j];
            let b = &self.breakpoints[j + 1];
            // x can be in (a, b] unless x <= a for sure or x > b for sure.
            let below = x.hi() <= a.lo();
            let above = x.lo() > b.hi();
            let at_zero = j == 0 && x.lo().is_zero();
            if (below && !at_zero) || above {
                continue;
            }
            out = Some(match out {
                None => level.clone(),
                Some(o) => o.hull(level),
            });
        }
        let level = out.unwrap_or_else(|| self.levels[0].clone());
        Ok(level.div(&self.f))
    }

    /// `m([a, b])`.
    pub fn interval_measure(&self, a: &Enclosure, b: &Enclosure) -> Result<Enclosure> {
        if !a.within_unit() || !b.within_unit() {
            return Err(Error::Domain("interval endpoints must lie in [0, 1]".into()));
        }
        if a.certainly_gt(b) {
            return Err(Error::Domain(format!("a = {a} exceeds b = {b}")));
        }
        let zero = Enclosure::zero(self.prec);
        let mut sum = Enclosure::zero(self.prec);
        for (t, w) in self.orbit.iter().zip(&self.weights) {
            let len = b.min(t).sub(a).max(&zero);
            sum = sum.add(&len.mul(w));
        }
        let width = b.sub(a).max(&zero);
        let tail = width.hi().clone() * &self.tail_bound;
        let tail = Float::with_val_round(self.prec, tail, rug::float::Round::Up).0;
        let mu = sum.extend_up(&tail).div(&self.f);
        let cap = width.mul(&self.density_upper_bound());
        debug_assert!(
            mu.lo() <= cap.hi(),
            "measure {mu} exceeds the density bound {cap}"
        );
        Ok(mu)
    }

    /// `m(tau^-1 [a, b])`, using both inverse branches.
    pub fn preimage_measure(&self, a: &Enclosure, b: &Enclosure) -> Result<Enclosure> {
        let one = Enclosure::one(self.prec);
        let left = self.interval_measure(&a.mul(&self.inv_beta), &b.mul(&self.inv_beta))?;
        let a2 = a.add(&one).mul(&self.inv_beta).min(&one);
        let b2 = b.add(&one).mul(&self.inv_beta).min(&one);
        if b2.certainly_lt(&a2) || a2.certainly_gt(&one) {
            return Ok(left);
        }
        let right = self.interval_measure(&a2.min(&b2), &b2)?;
        Ok(left.add(&right))
    }

    /// Normalized cells `(lo, hi, density)` in `f64`, for sampling.
    pub fn sampling_cells(&self) -> Vec<(f64, f64, f64)> {
        let f = self.f.to_f64();
        self.levels
            .iter()
            .enumerate()
            .map(|(j, l)| {
                (
                    self.breakpoints[j].to_f64(),
                    self.breakpoints[j + 1].to_f64(),
                    l.to_f64() / f,
                )
            })
            .filter(|(a, b, _)| b > a)
            .collect()
    }

    /// CSV dump: one row per cell; the constants are repeated on every row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
        w.write_record([
            "beta",
            "K",
            "F",
            "F_radius",
            "M",
            "M_radius",
            "breakpoint_lo",
            "breakpoint_hi",
            "level",
            "level_radius",
        ])
        .map_err(io)?;
        let f = format_float(&self.f.value());
        let fr = format_float(&self.f.radius());
        let m = format_float(&self.m.value());
        let mr = format_float(&self.m.radius());
        let k = self.k.to_string();
        for (j, l) in self.levels.iter().enumerate() {
            w.write_record([
                self.beta.as_str(),
                &k,
                &f,
                &fr,
                &m,
                &mr,
                &format_float(&self.breakpoints[j].value()),
                &format_float(&self.breakpoints[j + 1].value()),
                &format_float(&l.value()),
                &format_float(&l.radius()),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(format!("csv output: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn enc(p: u32, n: i64, d: i64) -> Enclosure {
        Enclosure::from_rational(p, &Rational::from((n, d)))
    }

    fn close(e: &Enclosure, v: f64, tol: f64) -> bool {
        (e.to_f64() - v).abs() <= tol
    }

    #[test]
    fn lebesgue_at_two() {
        let b = BetaParam::two(128).unwrap();
        let d = build_density(&b, Some(10)).unwrap();
        assert_eq!(d.finite_orbit, Some(1));
        assert!(d.f.is_exact() && d.f.to_f64() == 1.0);
        assert!(d.m.contains(&Float::with_val(128, 0.5)));
        let h = d.density_eval(&enc(128, 1, 3)).unwrap();
        assert!(h.contains(&Float::with_val(128, 1)));
        let mu = d.interval_measure(&enc(128, 1, 4), &enc(128, 3, 4)).unwrap();
        assert!(mu.contains(&Float::with_val(128, 0.5)));
    }

    #[test]
    fn golden_closed_forms() {
        let b = BetaParam::golden(256).unwrap();
        let d = build_density(&b, None).unwrap();
        assert_eq!(d.finite_orbit, Some(2));
        let beta = b.beta();
        let one = Enclosure::one(256);
        let f = one.add(&one.div(&beta.mul(beta)));
        let m = one.div(&one.add(&beta.mul(beta)));
        assert!(d.f.intersects(&f));
        assert!(d.m.intersects(&m));
        assert!(close(&d.f, 1.381_966_011_250_105, 1e-15));
        assert!(close(&d.m, 0.276_393_202_250_021, 1e-15));
        assert!(close(&d.density_eval(&enc(256, 9, 10)).unwrap(), 0.723_606_797_749_979, 1e-14));
        assert!(close(&d.density_eval(&enc(256, 3, 10)).unwrap(), 1.170_820_393_249_937, 1e-14));
        let mm = d.interval_measure(b.inv_beta(), &one).unwrap();
        assert!(mm.intersects(&d.m));
    }

    #[test]
    fn normalization_and_invariance_irrational_orbit() {
        let b = BetaParam::parse("17/10", 256).unwrap();
        let d = build_density(&b, None).unwrap();
        assert!(d.finite_orbit.is_none());
        assert!(d.tail_bound < Float::with_val(64, 2.0f64.powi(-127)));
        let one = Enclosure::one(256);
        let z = Enclosure::zero(256);
        assert!(d.interval_measure(&z, &one).unwrap().contains(&Float::with_val(64, 1)));
        let (a, c) = (enc(256, 1, 5), enc(256, 7, 9));
        let m1 = d.interval_measure(&a, &c).unwrap();
        let m2 = d.preimage_measure(&a, &c).unwrap();
        assert!(m1.intersects(&m2), "{m1} vs {m2}");
        assert!(m1.radius() < Float::with_val(64, 1e-30));
        let f = d.f.to_f64();
        assert!((1.0..=1.0 / (1.0 - 1.0 / 1.7)).contains(&f));
    }

    #[test]
    fn interval_measure_rejects_reversed() {
        let b = BetaParam::golden(128).unwrap();
        let d = build_density(&b, None).unwrap();
        assert!(matches!(
            d.interval_measure(&enc(128, 3, 4), &enc(128, 1, 4)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn csv_has_header_and_cells() {
        let b = BetaParam::golden(128).unwrap();
        let d = build_density(&b, None).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert!(lines[0].starts_with("beta,K,F,F_radius,M,M_radius,breakpoint_lo"));
        assert_eq!(lines.len(), 1 + d.levels.len());
        assert_eq!(d.levels.len(), 2);
    }
}
