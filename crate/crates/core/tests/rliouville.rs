use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlbesov::bspline::bspline;
use rlbesov::rliouville::{difference_of_shifts, rl_apply, rl_duality_residual, RLSpec, Side};
use rlbesov::{Dyadic, PiecewisePoly};

/// Five-point Gauss–Legendre on `[a, b]`, exact through degree 9.
fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    X.iter().zip(W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// `(1/(α−1)!) ∫_lo^x (x−y)^{α−1} f(y) dy` cell by cell over half-integer cells.
fn kernel_left(f: &PiecewisePoly, alpha: u32, lo: f64, x: f64) -> f64 {
    let fact: f64 = (1..alpha).map(|k| k as f64).product();
    let mut s = 0.0;
    let mut a = lo;
    while a < x {
        let b = ((a * 2.0).floor() / 2.0 + 0.5).min(x);
        s += gauss5(|y| (x - y).powi(alpha as i32 - 1) * f.eval(y), a, b);
        a = b;
    }
    s / fact
}

fn random_spline(rng: &mut ChaCha8Rng, n: usize) -> PiecewisePoly {
    let b = bspline(n).unwrap();
    let mut acc = PiecewisePoly::zero();
    for _ in 0..rng.random_range(1..=4) {
        let term = b.shift(Dyadic::half(rng.random_range(-6..=6))).unwrap().scaled(rng.random_range(-1.0..=1.0));
        acc = acc.add(&term).unwrap();
    }
    acc
}

#[test]
fn images_match_the_kernel_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in 1..=3 {
        for n in 0..=3 {
            let f = random_spline(&mut rng, n);
            let g = rl_apply(&RLSpec::full_line(alpha, Side::Left), &f).unwrap();
            let lo = f.support_f64().unwrap().0;
            for i in 0..40 {
                let x = lo - 0.5 + 0.31 * i as f64;
                let want = if x <= lo { 0.0 } else { kernel_left(&f, alpha, lo, x) };
                assert!((g.eval(x) - want).abs() < 1e-10 * (1.0 + want.abs()), "α={alpha} n={n} x={x}");
            }
        }
    }
}

#[test]
fn right_operator_matches_its_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for alpha in 1..=3 {
        let f = random_spline(&mut rng, 2);
        let g = rl_apply(&RLSpec::full_line(alpha, Side::Right), &f).unwrap();
        // I_−^α f(x) = I_+^α (f(−·))(−x)
        let fr = f.reflect();
        let lo = fr.support_f64().unwrap().0;
        for i in 0..30 {
            let x = -8.0 + 0.53 * i as f64;
            let want = if -x <= lo { 0.0 } else { kernel_left(&fr, alpha, lo, -x) };
            assert!((g.eval(x) - want).abs() < 1e-10 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn semigroup_is_coefficientwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 0..=4 {
        let f = random_spline(&mut rng, n);
        let one = RLSpec::full_line(1, Side::Left);
        let twice = rl_apply(&one, &rl_apply(&one, &f).unwrap()).unwrap();
        let direct = rl_apply(&RLSpec::full_line(2, Side::Left), &f).unwrap();
        assert_eq!(twice.breakpoints(), direct.breakpoints());
        let scale = direct.coefficient_scale().max(1.0);
        for (p, q) in twice.pieces().iter().zip(direct.pieces()) {
            for (a, b) in p.iter().zip(q) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
        for (p, q) in twice.right_tail().unwrap().iter().zip(direct.right_tail().unwrap()) {
            assert!((p - q).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn duality_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pair in 0..20 {
        let alpha = 1 + pair % 3;
        let (nf, ng) = (rng.random_range(0..=3), alpha as usize + 1 + rng.random_range(0..=2));
        let f = random_spline(&mut rng, nf);
        // g^{(j)} vanishes at both ends for j < α when g is built from B_{α+1} or higher
        let g = random_spline(&mut rng, ng);
        let r = rl_duality_residual(alpha, &f, &g).unwrap();
        assert!(r < 1e-10, "pair {pair}: {r:e}");
    }
}

#[test]
fn difference_collapse() {
    for n in 0..=5 {
        for alpha in 1..=3u32 {
            let mut d = bspline(n + alpha as usize).unwrap();
            for _ in 0..alpha {
                d = d.derivative();
            }
            let c = difference_of_shifts(n, alpha).unwrap();
            for i in 0..=300 {
                let x = -0.5 + (n as f64 + alpha as f64 + 2.0) * i as f64 / 300.0;
                assert!((d.eval(x) - c.eval(x)).abs() < 1e-10, "n={n} α={alpha} x={x}");
            }
            // and I_+^α undoes it
            let back = rl_apply(&RLSpec::full_line(alpha, Side::Left), &c).unwrap();
            assert!(back.is_compact());
            let b = bspline(n + alpha as usize).unwrap();
            for i in 0..50 {
                let x = 0.17 * i as f64;
                assert!((back.eval(x) - b.eval(x)).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn half_line_matches_full_line_right_of_origin(n in 0usize..=3, alpha in 1u32..=3, shift in 0i64..6, c in -3i64..=0) {
        let f = bspline(n).unwrap().shift(Dyadic::int(shift)).unwrap();
        let full = rl_apply(&RLSpec::full_line(alpha, Side::Left), &f).unwrap();
        let half = rl_apply(&RLSpec::half_line(alpha, Side::Left, c as f64), &f).unwrap();
        prop_assert_eq!(full, half);
    }

    #[test]
    fn linearity(seed in 0u64..1000, alpha in 1u32..=3, t in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_spline(&mut rng, 2);
        let g = random_spline(&mut rng, 1);
        let op = RLSpec::full_line(alpha, Side::Right);
        let lhs = rl_apply(&op, &f.add(&g.scaled(t)).unwrap()).unwrap();
        let a = rl_apply(&op, &f).unwrap();
        let b = rl_apply(&op, &g).unwrap();
        for i in 0..25 {
            let x = -9.0 + 0.7 * i as f64;
            let want = a.eval(x) + t * b.eval(x);
            prop_assert!((lhs.eval(x) - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }
}
