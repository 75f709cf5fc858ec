//! Separation inequalities, log-limit traces, Hölder probes and
//! non-Lipschitz witness sequences for `G_beta`.

use rand::Rng;
use rayon::prelude::*;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::base::BetaParam;
use crate::dynamics::{is_simple, orbit, separation_time, synthesize, Simplicity, Walker};
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::field::Point;
use crate::rng::stream_rng;
use crate::takagi::{g_finite_difference, g_with_digits};

/// Which side of `x` the comparison point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `y < x`
    Left,
    /// `y > x`
    Right,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma2Report {
    pub n: usize,
    pub side: Side,
    /// `|x - y|`
    pub lhs: Enclosure,
    /// `tau^N(x) / beta^N` (left) or `(1 - tau^N(x)) / beta^N` (right).
    pub rhs: Enclosure,
    /// `lhs >= rhs`, decided exactly.
    pub holds: bool,
    /// `lhs > rhs`.
    pub strict: bool,
    /// Whether the comparison could be decided at working precision.
    pub certified: bool,
}

/// Checks the separation inequality for the pair `(x, y)`.
pub fn lemma2_check(base: &BetaParam, x: &Point, y: &Point) -> Result<Lemma2Report> {
    let depth = base.max_depth();
    if let Simplicity::Yes { n0 } = is_simple(base, x, depth)? {
        return Err(Error::SimplePoint { n0 });
    }
    let n = separation_time(base, x, y, depth)?.ok_or(Error::SeparationNotFound { max_depth: depth })?;
    let mut w = Walker::new(base, x.clone());
    let mut gx_n = 0;
    for _ in 0..n {
        gx_n = w.next_digit()?;
    }
    let tau_n = w.current().clone();
    let side = if gx_n == 1 { Side::Left } else { Side::Right };
    let mut lhs = x.sub(y);
    let mut rhs = match side {
        Side::Left => tau_n,
        Side::Right => tau_n.neg().add_int(1),
    };
    if side == Side::Right {
        lhs = lhs.neg();
    }
    for _ in 0..n {
        rhs = rhs.div_beta(base);
    }
    let sign = lhs.sub(&rhs).sign(base);
    Ok(Lemma2Report {
        n,
        side,
        lhs: lhs.enclosure(base),
        rhs: rhs.enclosure(base),
        holds: sign.is_some_and(|s| s.is_ge()),
        strict: sign.is_some_and(|s| s.is_gt()),
        certified: sign.is_some(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma3Row {
    pub n: usize,
    /// `(1/n) log_beta tau^n(x)`; `None` when `tau^n(x) = 0`.
    pub log_tau: Option<Enclosure>,
    /// `(1/n) log_beta (1 - tau^n(x))`; `None` when `tau^n(x) = 1`.
    pub log_one_minus: Option<Enclosure>,
    /// `tau^n(x) <= 1/n^2`; `None` if undecided.
    pub event_a: Option<bool>,
    /// `tau^n(x) >= 1 - 1/n^2`; `None` if undecided.
    pub event_b: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma3Trace {
    pub beta: String,
    pub x: Enclosure,
    pub n_max: usize,
    pub rows: Vec<Lemma3Row>,
    pub count_a: usize,
    pub count_b: usize,
    pub last_a: Option<usize>,
    pub last_b: Option<usize>,
    pub undecided: usize,
}

/// Precision of the logarithm columns.
const LOG_PREC: u32 = 128;

/// Log-limit trace of the orbit of `x` for `n = 1..=n_max`.
pub fn lemma3_trace(base: &BetaParam, x: &Point, n_max: usize) -> Result<Lemma3Trace> {
    let tr = orbit(base, x, n_max)?;
    tr.require_certified()?;
    let ln_beta = base.beta().round_to(LOG_PREC).ln();
    let one = Enclosure::one(LOG_PREC);
    let mut rows = Vec::with_capacity(n_max);
    let (mut count_a, mut count_b, mut undecided) = (0, 0, 0);
    let (mut last_a, mut last_b) = (None, None);
    for n in 1..=n_max {
        let p = &tr.exact_points[n];
        let e = tr.points[n].round_to(LOG_PREC);
        let scale = ln_beta.mul_int(n as i64);
        let log_tau = (!p.is_zero()).then(|| e.ln().div(&scale));
        let is_one = p.add_int(-1).is_zero();
        let log_one_minus = (!is_one).then(|| one.sub(&e).ln().div(&scale));
        let inv_sq = Rational::from((1, Integer::from(n) * Integer::from(n)));
        let event_a = p.cmp_rational(&inv_sq, base).map(|o| o.is_le());
        let event_b = p
            .cmp_rational(&(Rational::from(1) - &inv_sq), base)
            .map(|o| o.is_ge());
        for (ev, count, last) in [
            (event_a, &mut count_a, &mut last_a),
            (event_b, &mut count_b, &mut last_b),
        ] {
            match ev {
                Some(true) => {
                    *count += 1;
                    *last = Some(n);
                }
                Some(false) => {}
                None => undecided += 1,
            }
        }
        rows.push(Lemma3Row {
            n,
            log_tau,
            log_one_minus,
            event_a,
            event_b,
        });
    }
    Ok(Lemma3Trace {
        beta: base.label().to_string(),
        x: tr.x0.clone(),
        n_max,
        rows,
        count_a,
        count_b,
        last_a,
        last_b,
        undecided,
    })
}

/// `K_N = beta^N sum_{n>=N} 4 n beta^-n = 4 (N (1 - r) + r) / (1 - r)^2`.
pub fn k_constant(base: &BetaParam, n: usize) -> Enclosure {
    let q = base.one_minus_inv_beta();
    let prec = base.precision_bits();
    Enclosure::from_int(prec, n as i64)
        .mul(&q)
        .add(base.inv_beta())
        .mul_int(4)
        .div(&q.mul(&q))
}

/// `sup_{N>=1} K_N beta^-(1-alpha) N`.
pub fn k_uniform(base: &BetaParam, alpha: f64) -> Enclosure {
    let prec = base.precision_bits();
    let decay = Enclosure::from_f64(prec, alpha - 1.0)
        .mul(&base.beta().ln())
        .exp();
    let mut best: Option<Enclosure> = None;
    let mut w = decay.clone();
    let mut n = 1;
    loop {
        let v = k_constant(base, n).mul(&w);
        let grew = best.as_ref().is_none_or(|b| v.hi() > b.hi());
        if grew {
            best = Some(best.map_or(v.clone(), |b| b.max(&v)));
        } else {
            // unimodal in N: once it stops growing the supremum is reached
            break;
        }
        w = w.mul(&decay);
        n += 1;
    }
    best.expect("at least one term")
}

/// Hölder bound `1/M + K_N / (M beta^{(1-alpha) N} s^alpha)` where `s` is
/// `tau^N(x)` (left) or `1 - tau^N(x)` (right).
pub fn holder_bound(
    base: &BetaParam,
    m: &Enclosure,
    alpha: f64,
    n: usize,
    s: &Enclosure,
) -> Enclosure {
    let prec = base.precision_bits();
    let one = Enclosure::one(prec);
    let a = Enclosure::from_f64(prec, alpha);
    let geo = one
        .sub(&a)
        .mul_int(n as i64)
        .mul(&base.beta().ln())
        .exp();
    let k = k_constant(base, n);
    one.div(m).add(&k.div(&m.mul(&geo).mul(&s.pow(&a))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    /// quotient <= bound, certified
    Within,
    /// quotient > bound, certified
    Violation,
    /// enclosures overlap
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderSample {
    pub index: u64,
    pub side: Side,
    pub y: Enclosure,
    pub distance: Enclosure,
    pub n: usize,
    pub quotient: Enclosure,
    pub bound: Enclosure,
    pub status: SampleStatus,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct HolderCounts {
    pub requested: usize,
    pub evaluated: usize,
    pub within: usize,
    pub violations: usize,
    pub undecided: usize,
    /// `y` outside `(0, 1)`, no separation within depth, or an ambiguous digit.
    pub dropped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderProbeReport {
    pub beta: String,
    pub x: Enclosure,
    pub alpha: f64,
    pub seed: u64,
    pub depth: usize,
    pub samples: Vec<HolderSample>,
    pub max_quotient: Enclosure,
    pub max_bound: Enclosure,
    pub k_uniform: Enclosure,
    pub counts: HolderCounts,
}

/// Sampling window and budget of a Hölder probe.
#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub n_samples: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub depth: usize,
    pub seed: u64,
}

struct RawSample {
    index: u64,
    side: Side,
    y: Point,
    distance: Enclosure,
    n: usize,
    diff: Enclosure,
}

fn draw_y(x: &Point, base: &BetaParam, cfg: &ProbeConfig, index: u64) -> (Side, Point) {
    let mut rng = stream_rng(cfg.seed, index);
    let side = if index.is_multiple_of(2) { Side::Left } else { Side::Right };
    let (lo, hi) = (cfg.delta_min.ln(), cfg.delta_max.ln());
    let delta = (lo + (hi - lo) * rng.random::<f64>()).exp();
    let bits = 64 + (-cfg.delta_min.log2()).ceil().max(0.0) as u32;
    let mant = (Float::with_val(64, delta) << bits)
        .to_integer()
        .unwrap_or_default()
        .max(Integer::from(1));
    let d = Point::dyadic(base, mant, bits);
    let y = match side {
        Side::Left => x.sub(&d),
        Side::Right => x.add(&d),
    };
    (side, y)
}

/// Probes the Hölder quotient at `x` for several exponents at once; every
/// exponent sees the same `y` samples.
pub fn holder_probe_multi(
    base: &BetaParam,
    m: &Enclosure,
    x: &Point,
    alphas: &[f64],
    cfg: &ProbeConfig,
) -> Result<Vec<HolderProbeReport>> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidParameter(format!("alpha = {a} must lie in (0, 1)")));
    }
    if !(cfg.delta_min > 0.0 && cfg.delta_min < cfg.delta_max && cfg.delta_max <= 1.0) {
        return Err(Error::InvalidParameter(
            "need 0 < delta_min < delta_max <= 1".into(),
        ));
    }
    let tr = orbit(base, x, cfg.depth)?;
    tr.require_certified()?;
    if let Some(n0) = tr.simple_at {
        return Err(Error::SimplePoint { n0 });
    }
    let (gx, dx) = g_with_digits(base, x, m, cfg.depth)?;

    let raw: Vec<Option<RawSample>> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|index| {
            let (side, y) = draw_y(x, base, cfg, index);
            match y.in_unit_interval(base) {
                Some(true) if !y.is_zero() && !y.add_int(-1).is_zero() => {}
                _ => return None,
            }
            let (gy, dy) = g_with_digits(base, &y, m, cfg.depth).ok()?;
            let n = (0..cfg.depth)
                .find(|&i| dx.get(i).copied().unwrap_or(0) != dy.get(i).copied().unwrap_or(0))?
                + 1;
            Some(RawSample {
                index,
                side,
                distance: x.sub(&y).enclosure(base).abs(),
                y,
                n,
                diff: gx.sub(&gy).abs(),
            })
        })
        .collect();

    let one = Enclosure::one(base.precision_bits());
    let mut reports = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let a = Enclosure::from_f64(base.precision_bits(), alpha);
        let mut counts = HolderCounts {
            requested: cfg.n_samples,
            ..Default::default()
        };
        let mut samples = Vec::new();
        let zero = Enclosure::zero(base.precision_bits());
        let (mut max_q, mut max_b) = (zero.clone(), zero);
        for r in &raw {
            let Some(r) = r else {
                counts.dropped += 1;
                continue;
            };
            let t = &tr.points[r.n];
            let s = match r.side {
                Side::Left => t.clone(),
                Side::Right => one.sub(t),
            };
            let quotient = r.diff.div(&r.distance.pow(&a));
            let bound = holder_bound(base, m, alpha, r.n, &s);
            let status = if quotient.certainly_le(&bound) {
                counts.within += 1;
                SampleStatus::Within
            } else if quotient.certainly_gt(&bound) {
                counts.violations += 1;
                SampleStatus::Violation
            } else {
                counts.undecided += 1;
                SampleStatus::Undecided
            };
            counts.evaluated += 1;
            max_q = max_q.max(&quotient);
            max_b = max_b.max(&bound);
            samples.push(HolderSample {
                index: r.index,
                side: r.side,
                y: r.y.enclosure(base),
                distance: r.distance.clone(),
                n: r.n,
                quotient,
                bound,
                status,
            });
        }
        reports.push(HolderProbeReport {
            beta: base.label().to_string(),
            x: tr.x0.clone(),
            alpha,
            seed: cfg.seed,
            depth: cfg.depth,
            samples,
            max_quotient: max_q,
            max_bound: max_b,
            k_uniform: k_uniform(base, alpha),
            counts,
        });
    }
    Ok(reports)
}

/// Single-exponent Hölder probe.
pub fn holder_probe(
    base: &BetaParam,
    m: &Enclosure,
    x: &Point,
    alpha: f64,
    cfg: &ProbeConfig,
) -> Result<HolderProbeReport> {
    Ok(holder_probe_multi(base, m, x, &[alpha], cfg)?.remove(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub l_n: usize,
    pub x_n: Enclosure,
    /// `(G(x_{N+1}) - G(x_N)) / (x_{N+1} - x_N)`
    pub quotient_direct: Enclosure,
    /// `l(N+1) - S_{l(N+1)}/M + 1/M`
    pub quotient_formula: Enclosure,
    /// `l(N) - S_{l(N)}/M`
    pub statistic: Enclosure,
    /// Running maximum of `statistic`.
    pub running_max: Enclosure,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSequence {
    pub beta: String,
    pub x: Enclosure,
    #[serde(rename = "M")]
    pub m: Enclosure,
    /// `l(1) < l(2) < …`, one more than there are rows.
    pub ones: Vec<usize>,
    pub rows: Vec<WitnessRow>,
    /// `quotient_direct` and `quotient_formula` intersect for every row.
    pub identity_holds: bool,
    /// `x_{N+1} - x_N = beta^-l(N+1)` exactly for every row.
    pub step_identity_holds: bool,
    /// `x = x_N + beta^-l(N) tau^l(N)(x)` exactly with `tau^l(N)(x) > 0`,
    /// so `x_N < x`.
    pub below_x_holds: bool,
    /// `x - x_N <= beta^-l(N+1) / (1 - 1/beta)` for every row.
    pub tail_holds: bool,
}

impl WitnessSequence {
    pub fn all_hold(&self) -> bool {
        self.identity_holds && self.step_identity_holds && self.below_x_holds && self.tail_holds
    }
}

/// Certified digits of `x` until `needed` ones are found, together with the
/// exact orbit points at the one-positions.
fn digits_until_ones(
    base: &BetaParam,
    x: &Point,
    needed: usize,
) -> Result<(Vec<u8>, Vec<usize>, Vec<Point>)> {
    let budget = base.max_depth();
    let mut w = Walker::new(base, x.clone());
    let mut digits = Vec::new();
    let mut ones = Vec::new();
    let mut at_ones = Vec::new();
    while ones.len() < needed {
        if digits.len() >= budget {
            return Err(Error::NotEnoughOnes {
                found: ones.len(),
                needed,
                depth: budget,
            });
        }
        let (d, hit) = w.next_digit_with_hit()?;
        digits.push(d);
        if hit {
            return Err(Error::SimplePoint { n0: digits.len() });
        }
        if d == 1 {
            ones.push(digits.len());
            at_ones.push(w.current().clone());
        }
    }
    Ok((digits, ones, at_ones))
}

/// Witness sequence `x_N` for `N = 1..=n_max`.
pub fn witness_sequence(
    base: &BetaParam,
    m: &Enclosure,
    x: &Point,
    n_max: usize,
) -> Result<WitnessSequence> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("N_max must be >= 1".into()));
    }
    if !m.certainly_positive() {
        return Err(Error::InvalidParameter(format!("M = {m} is not certainly positive")));
    }
    match x.in_unit_interval(base) {
        Some(true) => {}
        _ => return Err(Error::Domain("x must lie in [0, 1]".into())),
    }
    let (digits, ones, at_ones) = digits_until_ones(base, x, n_max + 1)?;
    let prec = base.precision_bits();
    let inv_m = Enclosure::one(prec).div(m);
    let tail_factor = Enclosure::one(prec).div(&base.one_minus_inv_beta());

    // exact beta^-k for every k we need, built incrementally
    let l_last = *ones.last().expect("nonempty");
    let mut pow = Vec::with_capacity(l_last + 1);
    pow.push(Point::one(base));
    for k in 1..=l_last {
        let next = pow[k - 1].div_beta(base);
        pow.push(next);
    }

    let truncations: Vec<Point> = ones.iter().map(|&l| synthesize(base, &digits[..l])).collect();
    let mut rows = Vec::with_capacity(n_max);
    let mut identity_holds = true;
    let mut step_identity_holds = true;
    let mut below_x_holds = true;
    let mut tail_holds = true;
    let mut trunc_enc = Enclosure::zero(prec);
    let mut last_l = 0;
    let mut running: Option<Enclosure> = None;
    for n in 1..=n_max {
        let l = ones[n - 1];
        let l_next = ones[n];
        let x_n = &truncations[n - 1];
        let x_next = &truncations[n];

        // enclosure of x_N from the digit sum (well conditioned)
        for k in last_l + 1..=l {
            if digits[k - 1] == 1 {
                trunc_enc = trunc_enc.add(&base.inv_beta_pow(k));
            }
        }
        last_l = l;

        let step = x_next.sub(x_n);
        let step_ok = step.exact_eq(&pow[l_next]);
        step_identity_holds &= step_ok;

        let mut back = at_ones[n - 1].clone();
        for _ in 0..l {
            back = back.div_beta(base);
        }
        below_x_holds &= !at_ones[n - 1].is_zero() && back.add(x_n).exact_eq(x);

        // x - x_N = beta^-l tau^l(x) with tau^l(x) in [0, 1)
        let gap = base.inv_beta_pow(l).mul(&at_ones[n - 1].enclosure(base));
        let cap = base.inv_beta_pow(l_next).mul(&tail_factor);
        tail_holds &= gap.certainly_le(&cap);

        let diff_g = g_finite_difference(base, &digits[..l], &digits[..l_next], m)?;
        let denom = if step_ok {
            base.inv_beta_pow(l_next)
        } else {
            step.enclosure(base)
        };
        let quotient_direct = diff_g.div(&denom);
        let quotient_formula = Enclosure::from_int(prec, l_next as i64)
            .sub(&Enclosure::from_int(prec, n as i64 + 1).mul(&inv_m))
            .add(&inv_m);
        identity_holds &= quotient_direct.intersects(&quotient_formula);

        let statistic = Enclosure::from_int(prec, l as i64).sub(&Enclosure::from_int(prec, n as i64).mul(&inv_m));
        let rm = match running.take() {
            Some(r) if r.value() >= statistic.value() => r,
            _ => statistic.clone(),
        };
        running = Some(rm.clone());
        rows.push(WitnessRow {
            n,
            l_n: l,
            x_n: trunc_enc.clone(),
            quotient_direct,
            quotient_formula,
            statistic,
            running_max: rm,
        });
    }
    Ok(WitnessSequence {
        beta: base.label().to_string(),
        x: x.enclosure(base),
        m: m.clone(),
        ones,
        rows,
        identity_holds,
        step_identity_holds,
        below_x_holds,
        tail_holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StatisticRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub l_n: usize,
    pub statistic: Enclosure,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzStatistic {
    pub beta: String,
    pub depth: usize,
    pub max_stat: Enclosure,
    pub argmax_n: usize,
    pub ones: usize,
    pub trace: Vec<StatisticRow>,
}

impl LipschitzStatistic {
    /// Running maximum over the rows with `l(N) <= depth`.
    pub fn max_through(&self, depth: usize) -> Option<&Enclosure> {
        let mut best: Option<&Enclosure> = None;
        for r in self.trace.iter().take_while(|r| r.l_n <= depth) {
            if best.is_none_or(|b| r.statistic.value() > b.value()) {
                best = Some(&r.statistic);
            }
        }
        best
    }
}

/// Running maximum of `l(N) - S_{l(N)}/M` over all `N` with `l(N) <= depth`.
pub fn lipschitz_statistic(
    base: &BetaParam,
    m: &Enclosure,
    x: &Point,
    depth: usize,
) -> Result<LipschitzStatistic> {
    base.check_depth(depth)?;
    if !m.certainly_positive() {
        return Err(Error::InvalidParameter(format!("M = {m} is not certainly positive")));
    }
    match x.in_unit_interval(base) {
        Some(true) => {}
        _ => return Err(Error::Domain("x must lie in [0, 1]".into())),
    }
    let prec = base.precision_bits();
    let inv_m = Enclosure::one(prec).div(m);
    let mut w = Walker::new(base, x.clone());
    let mut trace = Vec::new();
    for l in 1..=depth {
        if w.current().is_zero() {
            break;
        }
        if w.next_digit()? == 1 {
            let n = trace.len() + 1;
            let statistic = Enclosure::from_int(prec, l as i64)
                .sub(&Enclosure::from_int(prec, n as i64).mul(&inv_m));
            trace.push(StatisticRow { n, l_n: l, statistic });
        }
    }
    if trace.is_empty() {
        return Err(Error::NotEnoughOnes {
            found: 0,
            needed: 1,
            depth,
        });
    }
    let (mut argmax, mut best) = (0, &trace[0].statistic);
    for (i, r) in trace.iter().enumerate() {
        if r.statistic.value() > best.value() {
            argmax = i;
            best = &r.statistic;
        }
    }
    Ok(LipschitzStatistic {
        beta: base.label().to_string(),
        depth,
        max_stat: best.clone(),
        argmax_n: trace[argmax].n,
        ones: trace.len(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_density;
    use crate::takagi::{g_finite, takagi_classical};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn lemma2_fixtures() {
        let b = BetaParam::two(128).unwrap();
        let p = |r| Point::from_rational(&b, &r);
        let r = lemma2_check(&b, &p(q(1, 3)), &p(q(1, 4))).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.side, Side::Left);
        assert!(r.holds && r.strict && r.certified);
        assert!(r.lhs.contains(&Float::with_val(128, &q(1, 12))));
        assert!(r.rhs.contains(&Float::with_val(128, &q(1, 48))));

        let r = lemma2_check(&b, &p(q(1, 3)), &p(q(5, 12))).unwrap();
        assert_eq!(r.side, Side::Right);
        assert!(r.holds);
        // 1/3 = 0.0101…, 5/12 = 0.01101… separate at 3; tau^3(1/3) = 2/3
        assert_eq!(r.n, 3);
        assert!(r.rhs.contains(&Float::with_val(128, &q(1, 24))));

        assert!(matches!(
            lemma2_check(&b, &p(q(1, 3)), &p(q(1, 3))),
            Err(Error::SeparationNotFound { .. })
        ));
        assert!(matches!(
            lemma2_check(&b, &p(q(1, 2)), &p(q(1, 3))),
            Err(Error::SimplePoint { n0: 1 })
        ));
    }

    #[test]
    fn lemma3_fixtures() {
        let b = BetaParam::two(256).unwrap();
        let t = lemma3_trace(&b, &Point::from_rational(&b, &q(1, 3)), 50).unwrap();
        let r = &t.rows[9]; // n = 10, tau^10 = 1/3
        let expect = -(3f64.log2()) / 10.0;
        assert!((r.log_tau.as_ref().unwrap().to_f64() - expect).abs() < 1e-15);
        let expect_b = (2f64 / 3.0).log2() / 10.0;
        assert!((r.log_one_minus.as_ref().unwrap().to_f64() - expect_b).abs() < 1e-15);
        // A_1 and B_1 always fire; 1/3 and 2/3 keep away from 0 and 1 afterwards
        assert_eq!(t.last_a, Some(1));
        assert!(t.last_b.unwrap() <= 2);

        let z = lemma3_trace(&b, &Point::zero(&b), 5).unwrap();
        assert!(z.rows.iter().all(|r| r.log_tau.is_none()));
        assert_eq!(z.count_a, 5);
    }

    #[test]
    fn k_constant_matches_series() {
        let b = BetaParam::golden(128).unwrap();
        let beta = b.beta_f64();
        for n in [1usize, 5, 20] {
            let direct: f64 = (n..n + 400)
                .map(|k| 4.0 * k as f64 * beta.powi(n as i32 - k as i32))
                .sum();
            assert!((k_constant(&b, n).to_f64() - direct).abs() < 1e-9 * direct);
        }
        let ku = k_uniform(&b, 0.5).to_f64();
        for n in 1..200 {
            let v = k_constant(&b, n).to_f64() * beta.powf(-0.5 * n as f64);
            assert!(v <= ku * (1.0 + 1e-12));
        }
    }

    #[test]
    fn holder_fixture_quarter() {
        // |T(1/3) - T(1/4)| / (1/12)^(1/2) against the left-side bound at N = 4
        let b = BetaParam::two(256).unwrap();
        let m = Enclosure::from_rational(256, &q(1, 2));
        let g13 = takagi_classical(&q(1, 3), 200, 256).unwrap();
        let g14 = takagi_classical(&q(1, 4), 200, 256).unwrap();
        let half = Enclosure::from_f64(256, 0.5);
        let quotient = g13
            .sub(&g14)
            .abs()
            .div(&Enclosure::from_rational(256, &q(1, 12)).pow(&half));
        assert!((quotient.to_f64() - (1.0f64 / 6.0) * 12f64.sqrt()).abs() < 1e-12);
        let s = Enclosure::from_rational(256, &q(1, 3));
        let bound = holder_bound(&b, &m, 0.5, 4, &s);
        let k = k_constant(&b, 4).to_f64();
        let expect = 2.0 + 2.0 * k / (4.0 * (1.0f64 / 3.0).sqrt());
        assert!((bound.to_f64() - expect).abs() < 1e-12);
        assert!(quotient.certainly_le(&bound));
    }

    #[test]
    fn holder_probe_within_bound() {
        let b = BetaParam::golden(192).unwrap();
        let d = build_density(&b, None).unwrap();
        let x = Point::from_rational(&b, &q(2, 7));
        let cfg = ProbeConfig {
            n_samples: 60,
            delta_min: 2f64.powi(-30),
            delta_max: 0.25,
            depth: 150,
            seed: 11,
        };
        let reps = holder_probe_multi(&b, &d.m, &x, &[0.5, 0.9], &cfg).unwrap();
        for r in &reps {
            assert_eq!(r.counts.violations, 0);
            assert_eq!(r.counts.undecided, 0);
            assert!(r.counts.evaluated >= 50);
            assert!(r.max_quotient.certainly_le(&r.max_bound));
            assert!(r.samples.iter().any(|s| s.side == Side::Left));
            assert!(r.samples.iter().any(|s| s.side == Side::Right));
        }
        let again = holder_probe(&b, &d.m, &x, 0.5, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&reps[0]).unwrap()
        );
    }

    #[test]
    fn witness_one_third() {
        let b = BetaParam::two(256).unwrap();
        let m = Enclosure::from_rational(256, &q(1, 2));
        let w = witness_sequence(&b, &m, &Point::from_rational(&b, &q(1, 3)), 10).unwrap();
        assert!(w.all_hold());
        for (i, r) in w.rows.iter().enumerate() {
            assert_eq!(r.l_n, 2 * (i + 1));
            assert!(r.quotient_direct.contains(&Float::with_val(64, 2)));
            assert!(r.statistic.contains(&Float::with_val(64, 0)));
        }
    }

    #[test]
    fn witness_one_at_two_grows_linearly() {
        let b = BetaParam::two(256).unwrap();
        let m = Enclosure::from_rational(256, &q(1, 2));
        let w = witness_sequence(&b, &m, &Point::one(&b), 12).unwrap();
        assert!(w.identity_holds && w.step_identity_holds);
        for r in &w.rows {
            let expect = 1 - r.n as i64;
            assert!(r.quotient_formula.contains(&Float::with_val(64, expect)));
        }
    }

    #[test]
    fn witness_golden_identity_and_errors() {
        let b = BetaParam::golden(512).unwrap();
        let d = build_density(&b, None).unwrap();
        let x = Point::from_rational(&b, &q(3, 11));
        let w = witness_sequence(&b, &d.m, &x, 40).unwrap();
        assert!(w.all_hold(), "{:?}", w.rows.last());
        assert!(matches!(
            witness_sequence(&b, &d.m, &Point::zero(&b), 3),
            Err(Error::NotEnoughOnes { .. })
        ));
        assert!(matches!(
            witness_sequence(&b, &d.m, &Point::one(&b), 3),
            Err(Error::SimplePoint { .. })
        ));
    }

    #[test]
    fn lipschitz_statistic_fixtures() {
        let b = BetaParam::two(256).unwrap();
        let m = Enclosure::from_rational(256, &q(1, 2));
        let s = lipschitz_statistic(&b, &m, &Point::from_rational(&b, &q(1, 3)), 100).unwrap();
        assert!(s.max_stat.contains(&Float::with_val(64, 0)));
        assert_eq!(s.ones, 50);
        assert!(matches!(
            lipschitz_statistic(&b, &m, &Point::zero(&b), 100),
            Err(Error::NotEnoughOnes { .. })
        ));
        let a = s.max_through(50).unwrap().to_f64();
        assert!(s.max_stat.to_f64() >= a);
    }

    #[test]
    fn terms_before_separation_cancel() {
        // M (G(x) - G(y)) = (x - y) + sum_{n>=N} [x terms] - [y terms]
        let b = BetaParam::golden(256).unwrap();
        let d = build_density(&b, None).unwrap();
        let m = &d.m;
        let dx = [1u8, 0, 0, 1, 0, 1, 0, 0, 1];
        let dy = [1u8, 0, 0, 1, 0, 0, 1, 0, 1];
        let n_sep = 6;
        let lhs = m.mul(&g_finite(&b, &dx, m).unwrap().sub(&g_finite(&b, &dy, m).unwrap()));
        let tail = |ds: &[u8]| {
            let mut s = Enclosure::zero(256);
            let mut cnt = 0i64;
            for (i, &g) in ds.iter().enumerate() {
                cnt += i64::from(g);
                let n = i + 1;
                if n >= n_sep && g == 1 {
                    let term = m.mul_int(n as i64).sub(&Enclosure::from_int(256, cnt));
                    s = s.add(&b.inv_beta_pow(n).mul(&term));
                }
            }
            s
        };
        let xe = synthesize(&b, &dx).enclosure(&b);
        let ye = synthesize(&b, &dy).enclosure(&b);
        let rhs = xe.sub(&ye).add(&tail(&dx)).sub(&tail(&dy));
        assert!(lhs.intersects(&rhs), "{lhs} vs {rhs}");
    }
}
