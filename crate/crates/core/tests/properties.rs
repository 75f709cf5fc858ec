use beta_takagi::dynamics::{digits, orbit, random_unit_point, separation_time, synthesize};
use beta_takagi::measure::build_density;
use beta_takagi::rng::stream_rng;
use beta_takagi::takagi::{evaluate, g_def, g_finite, g_tail_bound};
use beta_takagi::{BetaParam, Enclosure, Error, Point};
use proptest::prelude::*;
use rug::{Float, Rational};

const PREC: u32 = 256;

fn base_strategy() -> impl Strategy<Value = BetaParam> {
    prop_oneof![
        (11u32..=20, 10u32..=11).prop_map(|(p, q)| (p, q)),
        (21u32..=40, 20u32..=20).prop_map(|(p, q)| (p, q)),
        Just((2u32, 1u32)),
    ]
    .prop_filter("beta in (1, 2]", |(p, q)| p > q && *p <= 2 * q)
    .prop_map(|(p, q)| BetaParam::rational(Rational::from((p, q)), PREC).unwrap())
}

fn named_or_rational() -> impl Strategy<Value = BetaParam> {
    prop_oneof![
        base_strategy(),
        prop::sample::select(vec!["golden", "sqrt2", "plastic", "tribonacci"])
            .prop_map(|n| BetaParam::parse(n, PREC).unwrap()),
    ]
}

fn point(base: &BetaParam, seed: u64) -> Point {
    random_unit_point(base, 128, &mut stream_rng(seed, 1))
}

fn is_undecided(e: &Error) -> bool {
    matches!(e, Error::AmbiguousBranch { .. })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_identity(base in named_or_rational(), seed in any::<u64>(), n in 1usize..120) {
        let x = point(&base, seed);
        let tr = orbit(&base, &x, n).unwrap();
        prop_assume!(tr.certified());
        let k = tr.digits.len();
        let s = synthesize(&base, &tr.digits);
        let tail = tr.exact_points[k].clone();
        let mut scaled = tail.clone();
        for _ in 0..k {
            scaled = scaled.div_beta(&base);
        }
        prop_assert!(s.add(&scaled).exact_eq(&x));
        let lhs = s.enclosure(&base).add(&tail.enclosure(&base).mul(&base.inv_beta_pow(k)));
        prop_assert!(lhs.intersects(&x.enclosure(&base)));
    }

    #[test]
    fn greedy_truncations_regenerate(base in named_or_rational(), seed in any::<u64>(), n in 1usize..120) {
        let x = point(&base, seed);
        let d = digits(&base, &x, n).unwrap();
        prop_assume!(d.certified);
        let again = digits(&base, &synthesize(&base, &d.digits), d.depth()).unwrap();
        prop_assert_eq!(again.digits, d.digits);
    }

    #[test]
    fn separation_digit_is_monotone(base in named_or_rational(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (point(&base, s1), point(&base, s2));
        let (x, y) = match a.cmp_point(&b, &base) {
            Some(std::cmp::Ordering::Less) => (a, b),
            Some(std::cmp::Ordering::Greater) => (b, a),
            _ => return Ok(()),
        };
        let n = match separation_time(&base, &x, &y, 150) {
            Ok(Some(n)) => n,
            Ok(None) => return Ok(()),
            Err(e) if is_undecided(&e) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let dx = digits(&base, &x, n).unwrap();
        let dy = digits(&base, &y, n).unwrap();
        prop_assert_eq!(&dx.digits[..n - 1], &dy.digits[..n - 1]);
        prop_assert_eq!(dx.digits[n - 1], 0);
        prop_assert_eq!(dy.digits[n - 1], 1);
    }

    #[test]
    fn orbit_radius_law(base in named_or_rational(), seed in any::<u64>()) {
        let x = point(&base, seed);
        let tr = orbit(&base, &x, base.max_depth()).unwrap();
        let slack = Float::with_val(64, Float::i_exp(1, -(PREC as i32 - 8)));
        for (k, p) in tr.points.iter().enumerate() {
            let bk = Float::with_val(64, (base.beta_f64() * 1.000001).powi(k as i32));
            prop_assert!(p.radius() <= bk * &slack, "radius at {} is {}", k, p.radius());
        }
    }

    #[test]
    fn binary_digits_match_long_division(num in 1u64..1_000_000, den in 1u64..1_000_000) {
        let den = den | 1;
        prop_assume!(den > 1 && num < den);
        let base = BetaParam::two(PREC).unwrap();
        let x = Point::from_rational(&base, &Rational::from((num, den)));
        let d = digits(&base, &x, 150).unwrap();
        prop_assert!(d.certified);
        let mut r = num;
        for &g in &d.digits {
            r *= 2;
            let bit = u8::from(r >= den);
            if bit == 1 {
                r -= den;
            }
            prop_assert_eq!(g, bit);
        }
    }

    #[test]
    fn lemma1_routes_intersect(base in named_or_rational(), seed in any::<u64>()) {
        let d = build_density(&base, None).unwrap();
        let x = point(&base, seed);
        match evaluate(&base, &x, &d.m, 100) {
            Ok(e) => prop_assert!(e.agree(), "{} vs {}", e.value_def, e.value_lemma1),
            Err(e) if is_undecided(&e) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn truncation_is_honest(base in named_or_rational(), seed in any::<u64>(), depth in 10usize..60) {
        let d = build_density(&base, None).unwrap();
        let x = point(&base, seed);
        let short = g_def(&base, &x, &d.m, depth);
        let long = g_def(&base, &x, &d.m, 2 * depth);
        let (short, long) = match (short, long) {
            (Ok(s), Ok(l)) => (s, l),
            _ => return Ok(()),
        };
        prop_assert!(short.intersects(&long));
        let gap = short.value() - long.value();
        let gap = Float::with_val(PREC, gap.abs());
        let allowed = g_tail_bound(&base, &d.m, depth) + short.radius() + long.radius();
        prop_assert!(gap <= allowed);
    }

    #[test]
    fn appending_a_one_adds_the_increment(
        base in named_or_rational(),
        seed in any::<u64>(),
        prefix in 1usize..60,
    ) {
        let d = build_density(&base, None).unwrap();
        let x = point(&base, seed);
        let gd = digits(&base, &x, prefix).unwrap();
        prop_assume!(gd.certified);
        let mut longer = gd.digits.clone();
        longer.extend(std::iter::repeat_n(0, 3));
        let pos = longer.len();
        longer[pos - 1] = 1;
        let greedy = digits(&base, &synthesize(&base, &longer), pos);
        prop_assume!(greedy.is_ok_and(|g| g.certified && g.digits == longer));
        let before = g_finite(&base, &gd.digits, &d.m).unwrap();
        let after = g_finite(&base, &longer, &d.m).unwrap();
        let ones: i64 = gd.digits.iter().map(|&g| i64::from(g)).sum();
        let p = PREC;
        let expected = Enclosure::from_int(p, pos as i64)
            .sub(&Enclosure::from_int(p, ones).div(&d.m))
            .mul(&base.inv_beta_pow(pos));
        prop_assert!(after.sub(&before).intersects(&expected));
    }

    #[test]
    fn measure_is_normalized_and_invariant(base in named_or_rational(), a in 0u32..1000, w in 1u32..1000) {
        let dens = build_density(&base, None).unwrap();
        let zero = Enclosure::zero(PREC);
        let one = Enclosure::one(PREC);
        let total = dens.interval_measure(&zero, &one).unwrap();
        prop_assert!(total.contains(&Float::with_val(PREC, 1)));
        let lo = Rational::from((a, 1000u32));
        let hi = Rational::from((a.saturating_add(w).min(1000), 1000u32));
        let (ea, eb) = (Enclosure::from_rational(PREC, &lo), Enclosure::from_rational(PREC, &hi));
        let direct = dens.interval_measure(&ea, &eb).unwrap();
        let pulled = dens.preimage_measure(&ea, &eb).unwrap();
        prop_assert!(direct.intersects(&pulled), "{} vs {}", direct, pulled);
        let cap = eb.sub(&ea).mul(&dens.density_upper_bound());
        prop_assert!(direct.lo() <= cap.hi());
    }
}

#[test]
fn m_matches_the_measure_of_the_upper_branch() {
    for name in ["2", "golden", "17/10", "plastic", "3/2"] {
        let base = BetaParam::parse(name, PREC).unwrap();
        let d = build_density(&base, None).unwrap();
        let upper = d
            .interval_measure(base.inv_beta(), &Enclosure::one(PREC))
            .unwrap();
        assert!(d.m.intersects(&upper), "{name}: {} vs {upper}", d.m);
        assert!(d.m.certainly_positive() && d.m.certainly_lt(&Enclosure::one(PREC)));
    }
}

#[test]
fn dyadic_grid_matches_classical_takagi() {
    let base = BetaParam::two(PREC).unwrap();
    let d = build_density(&base, None).unwrap();
    for k in 0..=64u32 {
        let r = Rational::from((k, 64u32));
        let x = Point::from_rational(&base, &r);
        let g = g_def(&base, &x, &d.m, 150).unwrap();
        let t = beta_takagi::takagi::takagi_classical(&r, 200, PREC).unwrap();
        assert!(g.intersects(&t), "k = {k}: {g} vs {t}");
    }
}
