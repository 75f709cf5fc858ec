//! Monte Carlo checks of the ergodic theorem and the central limit theorem
//! for the digit function `f = 1[1/beta, 1]`, where `f(tau^i x) = g_{i+1}(x)`.
//!
//! Two orbit modes exist. `Certified` iterates exact points under the
//! precision contract and is limited to short orbits. `Fast` iterates a
//! 64-bit fixed-point state `X / 2^64`: one step computes `beta * X` with a
//! 128-bit product against `floor(beta * 2^62)`, reads the integer part as
//! the digit, keeps the top 64 fraction bits, and replaces the lowest bit
//! with a fresh random bit so the state never collapses onto a periodic
//! orbit of the finite machine. At `beta = 2` this is exactly an iid fair
//! bit stream.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::base::BetaParam;
use crate::dynamics::Walker;
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::field::Point;
use crate::measure::PiecewiseDensity;
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitMode {
    Certified,
    Fast,
}

impl std::str::FromStr for OrbitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(OrbitMode::Certified),
            "fast" => Ok(OrbitMode::Fast),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Fixed-point beta-map for long Monte Carlo orbits.
#[derive(Clone, Copy, Debug)]
pub struct FastMap {
    mult: u128,
}

const FRAC_MASK: u128 = (1u128 << 126) - 1;

impl FastMap {
    pub fn new(base: &BetaParam) -> Self {
        let scaled = base.beta().lo().clone() << 62u32;
        let mult = scaled
            .floor()
            .to_integer()
            .and_then(|i| i.to_u64())
            .expect("beta * 2^62 fits in 64 bits");
        FastMap {
            mult: u128::from(mult),
        }
    }

    /// One step: returns the digit and updates the state.
    #[inline]
    pub fn step(&self, state: &mut u64, fresh_bit: u64) -> u8 {
        let p = u128::from(*state) * self.mult;
        let digit = (p >> 126) as u8;
        *state = (((p & FRAC_MASK) >> 62) as u64 & !1) | (fresh_bit & 1);
        digit
    }

    /// Sum of the first `n` digits from `state`.
    pub fn digit_sum<R: RngCore + ?Sized>(&self, mut state: u64, n: usize, rng: &mut R) -> u64 {
        let mut sum = 0u64;
        let mut bits = 0u64;
        for i in 0..n {
            if i % 64 == 0 {
                bits = rng.next_u64();
            }
            sum += u64::from(self.step(&mut state, bits));
            bits >>= 1;
        }
        sum
    }
}

/// Rejection sampler for the invariant measure with the flat envelope
/// `1 / (F (1 - 1/beta))`.
#[derive(Clone, Debug)]
pub struct ParrySampler {
    cells: Vec<(f64, f64, f64)>,
    envelope: f64,
    budget: u64,
}

impl ParrySampler {
    pub const DEFAULT_BUDGET: u64 = 10_000;

    pub fn new(density: &PiecewiseDensity) -> Self {
        let cells = density.sampling_cells();
        let envelope = density.density_upper_bound().hi().to_f64();
        ParrySampler {
            cells,
            envelope,
            budget: Self::DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn cells(&self) -> &[(f64, f64, f64)] {
        &self.cells
    }

    pub fn density(&self, x: f64) -> f64 {
        let i = self.cells.partition_point(|c| c.1 < x);
        self.cells.get(i).map_or(0.0, |c| c.2)
    }

    /// A fixed-point state `X` with `X / 2^64` distributed by the density.
    pub fn draw_state<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        for _ in 0..self.budget {
            let state = rng.next_u64();
            let x = state as f64 / 18_446_744_073_709_551_616.0;
            let u: f64 = rng.random();
            if u * self.envelope <= self.density(x) {
                return Ok(state);
            }
        }
        Err(Error::SampleBudgetExceeded {
            budget: self.budget,
        })
    }

    /// An exact dyadic point `U / 2^bits` drawn by the density (the accept
    /// test uses the top 64 bits).
    pub fn draw_point<R: RngCore + ?Sized>(
        &self,
        base: &BetaParam,
        bits: u32,
        rng: &mut R,
    ) -> Result<Point> {
        let top = self.draw_state(rng)?;
        let extra = bits.saturating_sub(64);
        let words = extra.div_ceil(64) as usize;
        let mut limbs: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
        if let Some(last) = limbs.last_mut() {
            *last >>= words as u32 * 64 - extra;
        }
        let low = Integer::from_digits(&limbs, rug::integer::Order::Lsf);
        let m = (Integer::from(top) << extra) + low;
        let m = if bits < 64 { m >> (64 - bits) } else { m };
        Ok(Point::dyadic(base, m, bits.max(1)))
    }
}

fn certified_digit_sum(base: &BetaParam, x: &Point, n: usize) -> Result<u64> {
    base.check_depth(n)?;
    let mut w = Walker::new(base, x.clone());
    let mut sum = 0u64;
    for _ in 0..n {
        if w.current().is_zero() {
            break;
        }
        sum += u64::from(w.next_digit()?);
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffEstimate {
    pub beta: String,
    pub n: usize,
    pub mode: OrbitMode,
    pub ones: u64,
    pub mean: f64,
    /// Batch-means standard error (fast mode); 0 for a single certified orbit.
    pub std_error: f64,
}

/// `(1/n) sum_{i=1}^n g_i(x)` along the certified orbit of `x`.
pub fn birkhoff_certified(base: &BetaParam, x: &Point, n: usize) -> Result<BirkhoffEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let ones = certified_digit_sum(base, x, n)?;
    Ok(BirkhoffEstimate {
        beta: base.label().to_string(),
        n,
        mode: OrbitMode::Certified,
        ones,
        mean: ones as f64 / n as f64,
        std_error: 0.0,
    })
}

const BATCHES: usize = 20;

/// Fast-mode Birkhoff average from a start drawn by the invariant measure,
/// with a batch-means standard error over 20 consecutive blocks.
pub fn birkhoff_fast(
    base: &BetaParam,
    sampler: &ParrySampler,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<BirkhoffEstimate> {
    if n < BATCHES {
        return Err(Error::InvalidParameter(format!("n must be >= {BATCHES}")));
    }
    let map = FastMap::new(base);
    let mut rng = stream_rng(seed, stream);
    let mut state = sampler.draw_state(&mut rng)?;
    let mut batch_means = Vec::with_capacity(BATCHES);
    let mut ones = 0u64;
    let mut done = 0;
    for b in 0..BATCHES {
        let len = n * (b + 1) / BATCHES - done;
        let mut s = 0u64;
        let mut bits = 0u64;
        for i in 0..len {
            if i % 64 == 0 {
                bits = rng.next_u64();
            }
            s += u64::from(map.step(&mut state, bits));
            bits >>= 1;
        }
        done += len;
        ones += s;
        batch_means.push(s as f64 / len as f64);
    }
    let (_, sd) = mean_sd(&batch_means);
    Ok(BirkhoffEstimate {
        beta: base.label().to_string(),
        n,
        mode: OrbitMode::Fast,
        ones,
        mean: ones as f64 / n as f64,
        std_error: sd / (BATCHES as f64).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PooledBirkhoff {
    pub beta: String,
    pub n: usize,
    pub starts: usize,
    pub seed: u64,
    pub mean: f64,
    /// Standard deviation of the per-start means over `sqrt(starts)`.
    pub std_error: f64,
    pub per_start: Vec<f64>,
}

/// Fast-mode Birkhoff averages from `starts` independent starts.
pub fn birkhoff_pooled(
    base: &BetaParam,
    sampler: &ParrySampler,
    starts: usize,
    n: usize,
    seed: u64,
) -> Result<PooledBirkhoff> {
    if starts < 2 {
        return Err(Error::InvalidParameter("need at least 2 starts".into()));
    }
    let per_start: Vec<f64> = (0..starts as u64)
        .into_par_iter()
        .map(|i| birkhoff_fast(base, sampler, n, seed, i).map(|e| e.mean))
        .collect::<Result<_>>()?;
    let (mean, sd) = mean_sd(&per_start);
    Ok(PooledBirkhoff {
        beta: base.label().to_string(),
        n,
        starts,
        seed,
        mean,
        std_error: sd / (starts as f64).sqrt(),
        per_start,
    })
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Standard normal CDF (absolute error well below `1e-15`).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// the standard normal CDF.
pub fn ks_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let phi = normal_cdf(v);
        let hi = (i as f64 + 1.0) / m;
        let lo = i as f64 / m;
        d = d.max((hi - phi).abs()).max((lo - phi).abs());
    }
    Ok(d.min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

/// Equal-width histogram over `[min, max]`.
pub fn histogram(xs: &[f64], bins: usize) -> Vec<HistogramBin> {
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            bin_lo: lo + k as f64 * width,
            bin_hi: lo + (k + 1) as f64 * width,
            count,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CltRun {
    pub beta: String,
    #[serde(rename = "M")]
    pub m_beta: Enclosure,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: OrbitMode,
    /// `(sum_{i<n} f(tau^i x) - n M) / sqrt(n)` per sample.
    pub normalized_sums: Vec<f64>,
    pub mean: f64,
    pub v_hat: f64,
    pub ks_distance: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Parameters of a CLT run.
#[derive(Clone, Copy, Debug)]
pub struct CltConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: OrbitMode,
    pub bins: usize,
}

/// Digit sums of `m` orbits of length `n` started from the invariant
/// measure, normalized and compared with the standard normal law.
pub fn clt_run(base: &BetaParam, density: &PiecewiseDensity, cfg: &CltConfig) -> Result<CltRun> {
    if cfg.m < 100 {
        return Err(Error::InvalidParameter(format!("m = {} must be >= 100", cfg.m)));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if cfg.mode == OrbitMode::Certified {
        base.check_depth(cfg.n)?;
    }
    let sampler = ParrySampler::new(density);
    let map = FastMap::new(base);
    let m_f = density.m.to_f64();
    let sqrt_n = (cfg.n as f64).sqrt();
    let sums: Vec<u64> = (0..cfg.m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i);
            match cfg.mode {
                OrbitMode::Fast => {
                    let state = sampler.draw_state(&mut rng)?;
                    Ok(map.digit_sum(state, cfg.n, &mut rng))
                }
                OrbitMode::Certified => {
                    let x = sampler.draw_point(base, base.precision_bits(), &mut rng)?;
                    certified_digit_sum(base, &x, cfg.n)
                }
            }
        })
        .collect::<Result<_>>()?;
    let normalized: Vec<f64> = sums
        .iter()
        .map(|&s| (s as f64 - cfg.n as f64 * m_f) / sqrt_n)
        .collect();
    let (mean, v_hat) = mean_sd(&normalized);
    if v_hat <= 0.0 {
        return Err(Error::EmptySample);
    }
    let scaled: Vec<f64> = normalized.iter().map(|z| z / v_hat).collect();
    let ks = ks_statistic(&scaled)?;
    Ok(CltRun {
        beta: base.label().to_string(),
        m_beta: density.m.clone(),
        n: cfg.n,
        m: cfg.m,
        seed: cfg.seed,
        mode: cfg.mode,
        histogram: histogram(&normalized, cfg.bins),
        normalized_sums: normalized,
        mean,
        v_hat,
        ks_distance: ks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiSquareReport {
    pub draws: usize,
    pub bins: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of the rejection sampler against the piecewise density.
/// Cells are split into equal-width sub-bins so that each expects about
/// `draws / target_bins` hits, then bins expecting fewer than 5 are merged
/// into a neighbour.
pub fn sampler_chi_square(
    sampler: &ParrySampler,
    draws: usize,
    target_bins: usize,
    seed: u64,
) -> Result<ChiSquareReport> {
    let mut edges: Vec<(f64, f64, f64)> = Vec::new(); // lo, hi, probability
    for &(lo, hi, h) in sampler.cells() {
        let p = h * (hi - lo);
        let k = ((p * target_bins as f64).round() as usize).max(1);
        for j in 0..k {
            let a = lo + (hi - lo) * j as f64 / k as f64;
            let b = lo + (hi - lo) * (j + 1) as f64 / k as f64;
            edges.push((a, b, p / k as f64));
        }
    }
    let mut rng = stream_rng(seed, 0);
    let mut counts = vec![0u64; edges.len()];
    for _ in 0..draws {
        let x = sampler.draw_state(&mut rng)? as f64 / 18_446_744_073_709_551_616.0;
        let i = edges.partition_point(|e| e.1 < x).min(edges.len() - 1);
        counts[i] += 1;
    }
    // merge small bins
    let mut bins: Vec<(f64, u64)> = Vec::new();
    let (mut pe, mut pc) = (0.0, 0u64);
    for (e, c) in edges.iter().zip(&counts) {
        pe += e.2 * draws as f64;
        pc += c;
        if pe >= 5.0 {
            bins.push((pe, pc));
            pe = 0.0;
            pc = 0;
        }
    }
    if pe > 0.0 || pc > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += pe;
                last.1 += pc;
            }
            None => bins.push((pe, pc)),
        }
    }
    let statistic: f64 = bins
        .iter()
        .map(|&(e, c)| (c as f64 - e).powi(2) / e)
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64)
            .map_err(|e| Error::InvalidParameter(format!("chi-square: {e}")))?;
        dist.sf(statistic)
    };
    Ok(ChiSquareReport {
        draws,
        bins: bins.len(),
        statistic,
        dof,
        p_value,
    })
}

/// `(1/n) * integral (S_n - n/2)^2 dx` at `beta = 2` (Lebesgue measure),
/// exactly, by summing over the `2^n` dyadic cells on which the first `n`
/// digits are constant. The value is `1/4` for every `n`.
pub fn displayed_variance_two(n: u32) -> Result<Rational> {
    if n == 0 || n > 24 {
        return Err(Error::InvalidParameter("n must lie in 1..=24".into()));
    }
    // cells with k ones: C(n, k) of them, each of length 2^-n
    let mut total = Rational::new();
    let mut binom = Integer::from(1);
    for k in 0..=n {
        let dev = Rational::from(k) - Rational::from((n, 2));
        total += Rational::from(&binom) * Rational::from(&dev * &dev);
        binom *= n - k;
        binom /= k + 1;
    }
    Ok(total / (Integer::from(1) << n) / n)
}
