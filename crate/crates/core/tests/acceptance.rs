//! The ten acceptance criteria, one PASS/FAIL line each. Exits nonzero when
//! any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlbesov::besov::{min_order, seq_norm, EstimateOptions, SeqCoeffs, SpaceParams};
use rlbesov::bspline::{bspline, chu_vandermonde, derivative_expansion, difference_coeffs, two_scale_coeffs};
use rlbesov::criteria::{criterion_lower, criterion_upper, CriteriaInput, Truncation, Verdict};
use rlbesov::harness::{example_ex1, make_family, verify_reverse, Ex1Config, FamilyKind, Outcome, Problem, Tolerances};
use rlbesov::rliouville::{difference_of_shifts, rl_apply, rl_duality_residual, RLSpec, Side};
use rlbesov::wavelet::{
    capital_psi, euler_constants, generalized_psi, lambda_coeffs, phi, theta_report, HalfOrigin, SplineSystemSpec,
};
use rlbesov::weights::Weight;
use rlbesov::{Dyadic, PiecewisePoly};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
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

fn pascal(rows: usize) -> Vec<Vec<i128>> {
    let mut t = vec![vec![1i128]];
    for r in 1..=rows {
        let mut row = vec![1i128; r + 1];
        for k in 1..r {
            row[k] = t[r - 1][k - 1] + t[r - 1][k];
        }
        t.push(row);
    }
    t
}

fn spline_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for n in 0..=6usize {
        let b = bspline(n).unwrap();
        let two = two_scale_coeffs(n);
        for _ in 0..200 {
            let x: f64 = rng.random_range(-3.0..(n as f64 + 4.0));
            let k0 = x.floor() as i64;
            let pu: f64 = (k0 - n as i64..=k0).map(|k| b.eval(x - k as f64)).sum();
            let ts: f64 = two.iter().enumerate().map(|(k, c)| c * b.eval(2.0 * x - k as f64)).sum();
            worst = worst.max((pu - 1.0).abs()).max((ts - b.eval(x)).abs());
            let mut d = b.clone();
            for k in 0..=n {
                let c = derivative_expansion(n, k).unwrap();
                let low = bspline(n - k).unwrap();
                let rhs: f64 = c.iter().enumerate().map(|(l, &cl)| cl as f64 * low.eval(x - l as f64)).sum();
                worst = worst.max((d.eval(x) - rhs).abs());
                d = d.derivative();
            }
        }
    }
    ensure(worst < 1e-10, || format!("worst residual {worst:e}"))?;
    Ok(format!("worst residual {worst:.1e} over n <= 6, 200 points each"))
}

fn difference_coefficients() -> Check {
    let p = pascal(60);
    let tabs: Vec<_> = (1..=6u32).map(|m| difference_coeffs(m, 50).unwrap()).collect();
    let mut fact = 1i128;
    for m in 1..=6usize {
        if m > 1 {
            fact *= (m - 1) as i128;
        }
        let a = &tabs[m - 1];
        for r in 0..=50usize {
            let v = a.exact(r).unwrap();
            if r > 0 {
                let rec: i128 = (1..=r.min(m))
                    .map(|j| {
                        let t = p[m][j] * a.exact(r - j).unwrap();
                        if j % 2 == 1 { t } else { -t }
                    })
                    .sum();
                ensure(v == rec, || format!("recurrence fails at m={m} r={r}"))?;
                let cross: i128 = (1..=m).map(|l| tabs[l - 1].exact(r - 1).unwrap()).sum();
                ensure(v == cross, || format!("cross-recurrence fails at m={m} r={r}"))?;
            }
            ensure(v == p[r + m - 1][m - 1], || format!("A_{r}({m}) = {v} is not C({}, {})", r + m - 1, m - 1))?;
            ensure(fact * v >= (1 + r as i128).pow(m as u32 - 1), || format!("bound fails at m={m} r={r}"))?;
        }
    }
    Ok("recurrence, cross-recurrence and lower bound exact for m <= 6, r <= 50".into())
}

fn chu_vandermonde_exact() -> Check {
    let p = pascal(40);
    let mut count = 0;
    for r in 0..=20i64 {
        for s in 0..=20i64 {
            for k in 0..=r + s {
                let v = chu_vandermonde(r, s, k).map_err(|e| e.to_string())?;
                ensure(v == p[(r + s) as usize][k as usize], || format!("r={r} s={s} k={k}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} identities exact"))
}

fn riemann_liouville() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut semi = 0.0f64;
    for n in 0..=5 {
        let f = random_spline(&mut rng, n);
        let one = RLSpec::full_line(1, Side::Left);
        let twice = rl_apply(&one, &rl_apply(&one, &f).unwrap()).unwrap();
        let direct = rl_apply(&RLSpec::full_line(2, Side::Left), &f).unwrap();
        ensure(twice.breakpoints() == direct.breakpoints(), || "semigroup breakpoints differ".into())?;
        let all = |g: &PiecewisePoly| -> Vec<f64> {
            g.pieces().iter().flatten().chain(g.right_tail().unwrap_or(&[]).iter()).copied().collect()
        };
        for (a, b) in all(&twice).iter().zip(all(&direct)) {
            semi = semi.max((a - b).abs());
        }
    }
    ensure(semi < 1e-12, || format!("semigroup residual {semi:e}"))?;
    let mut dual = 0.0f64;
    for pair in 0..20u32 {
        let alpha = 1 + pair % 3;
        let (nf, ng) = (rng.random_range(0..=3), alpha as usize + 1 + rng.random_range(0..=2));
        let f = random_spline(&mut rng, nf);
        let g = random_spline(&mut rng, ng);
        dual = dual.max(rl_duality_residual(alpha, &f, &g).map_err(|e| e.to_string())?);
    }
    ensure(dual < 1e-10, || format!("duality residual {dual:e}"))?;
    let mut collapse = 0.0f64;
    for n in 0..=5usize {
        for alpha in 1..=3u32 {
            let mut d = bspline(n + alpha as usize).unwrap();
            for _ in 0..alpha {
                d = d.derivative();
            }
            let c = difference_of_shifts(n, alpha).unwrap();
            for i in 0..=400 {
                let x = -0.5 + (n as f64 + alpha as f64 + 2.0) * i as f64 / 400.0;
                collapse = collapse.max((d.eval(x) - c.eval(x)).abs());
            }
        }
    }
    ensure(collapse < 1e-10, || format!("collapse residual {collapse:e}"))?;
    Ok(format!("semigroup {semi:.1e}, duality {dual:.1e} on 20 pairs, collapse {collapse:.1e}"))
}

fn battle_lemarie() -> Check {
    for n in 1..=8 {
        let k = euler_constants(n).map_err(|e| e.to_string())?;
        ensure(k.roots.len() == n && k.roots.iter().all(|&r| r > 0.0 && r < 1.0), || format!("roots for n={n}: {:?}", k.roots))?;
    }
    let tol = 1e-12;
    let mut ortho = 0.0f64;
    for n in 1..=6 {
        let f = phi(n, tol).map_err(|e| e.to_string())?.series;
        for k in -8..=8 {
            let want = if k == 0 { 1.0 } else { 0.0 };
            ortho = ortho.max((f.inner(&f.shifted(k)).unwrap() - want).abs());
        }
    }
    ensure(ortho < 10.0 * tol, || format!("φ orthonormality residual {ortho:e}"))?;
    // Ψ carries no normalizing prefactor, so the residual is taken as a cosine
    let mut perp = 0.0f64;
    for n in 1..=6 {
        let el = capital_psi(n, HalfOrigin::ZERO, 0).unwrap();
        let b = bspline(n).unwrap();
        let scale = (el.func.inner(&el.func).unwrap() * b.inner(&b).unwrap()).sqrt();
        for k in -3 * n as i64..=3 * n as i64 {
            perp = perp.max(el.func.inner(&b.shift(Dyadic::int(k)).unwrap()).unwrap().abs() / scale);
        }
    }
    ensure(perp < 1e-10, || format!("Ψ ⊥ V_0 residual {perp:e}"))?;
    let mut supports = 0;
    for n in 1..=5 {
        for two_a in -1..=1 {
            for s in -2..=2 {
                for (k, z, m, alpha) in [(0u8, 0u8, 1usize, 0u32), (1, 0, 2, 0), (0, 1, 1, 2), (1, 1, 3, 1)] {
                    let spec = SplineSystemSpec { n, a: HalfOrigin::from_twice(two_a).unwrap(), s, m, k_flag: k, zeta_flag: z, alpha };
                    let el = generalized_psi(spec).map_err(|e| e.to_string())?;
                    let base = 2 * s + two_a;
                    let ext = (m as i64) * k as i64 + (alpha as i64) * z as i64;
                    let want = (Dyadic::half(base - 2 * n as i64 - ext), Dyadic::half(base + 2 * n as i64 + 2 + ext));
                    ensure(el.func.support() == Some(want), || format!("support of {spec:?}"))?;
                    supports += 1;
                }
            }
        }
    }
    let mut lam = 0.0f64;
    for m in 1..=4 {
        let l = lambda_coeffs(m).map_err(|e| e.to_string())?;
        let k = euler_constants(m).unwrap();
        let lv = l.lambda();
        let sum: f64 = (-(m as i64)..=m as i64)
            .map(|kap| {
                let j = kap.unsigned_abs() as usize;
                (if j.is_multiple_of(2) { 1.0 } else { -1.0 }) * lv[j] * l.pin_scale
            })
            .sum();
        lam = lam.max((sum - 2f64.powi(-(m as i32)) * k.lambda_cap).abs());
    }
    ensure(lam < 1e-10, || format!("λ identity residual {lam:e}"))?;
    Ok(format!("orthonormality {ortho:.1e}, Ψ ⊥ V_0 {perp:.1e}, {supports} supports exact, λ identity {lam:.1e} (pinned scale)"))
}

fn theta_constant() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for n_star in 1..=3 {
        for m_star in 1..=n_star {
            let r = theta_report(n_star, m_star).map_err(|e| e.to_string())?;
            let rel = (r.inner_single.abs() - r.formula).abs() / r.formula;
            if r.overlaps_single != 1 || rel > 1e-8 {
                ok = false;
            }
            notes.push(format!(
                "n*={n_star} m*={m_star}: formula {:.6e}, inner {:.6e} (rel {rel:.2e}), literal shift overlaps {}",
                r.formula, r.inner_single, r.overlaps_literal
            ));
        }
    }
    let text = notes.join("; ");
    if ok { Ok(text) } else { Err(text) }
}

fn brute_norm(entries: &BTreeMap<(u32, i64), f64>, p: f64, q: f64, s: f64, w: &Weight) -> f64 {
    let mut head = 0.0;
    let mut levels: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(d, tau), &v) in entries {
        let h = if d == 0 { 1.0 } else { 2f64.powi(1 - d as i32) };
        let m = w.mass(tau as f64 * h, (tau + 1) as f64 * h).unwrap();
        if d == 0 {
            head += v.abs().powf(p) * m;
        } else {
            *levels.entry(d).or_default() += v.abs().powf(p) * m;
        }
    }
    let tail: f64 = levels.iter().map(|(&d, &a)| (2f64.powf(d as f64 * s) * a.powf(1.0 / p)).powf(q)).sum();
    head.powf(1.0 / p) + tail.powf(1.0 / q)
}

fn sequence_norms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut entries = BTreeMap::new();
        for _ in 0..rng.random_range(1..40) {
            entries.insert((rng.random_range(0..6u32), rng.random_range(-20..20i64)), rng.random_range(-5.0..5.0));
        }
        let (p, q, s, t) = (rng.random_range(1.0..4.0), rng.random_range(0.5..4.0), rng.random_range(-1.0..2.0), rng.random_range(0.0..3.0));
        let mut lam = SeqCoeffs::new(0);
        for (&(d, tau), &v) in &entries {
            lam.set(d, tau, v);
        }
        let w = Weight::power(t, 0.0);
        let want = brute_norm(&entries, p, q, s, &w);
        let got = seq_norm(&lam, &SpaceParams::new(p, q, s, Arc::new(w)).unwrap()).unwrap();
        worst = worst.max((got - want).abs() / want.max(1.0));
        let one = Arc::new(Weight::constant(1.0));
        let mut prev = f64::INFINITY;
        for qq in [0.5, 1.0, 2.0, 4.0, f64::INFINITY] {
            let v = seq_norm(&lam, &SpaceParams::new(p, qq, s, one.clone()).unwrap()).unwrap();
            ensure(v <= prev * (1.0 + 1e-12), || format!("q-nesting fails at q={qq}"))?;
            prev = v;
        }
    }
    ensure(worst < 1e-12, || format!("relative deviation {worst:e}"))?;
    Ok(format!("100 sets, worst relative deviation {worst:.1e}; q-nesting holds"))
}

fn same_weight() -> Check {
    let trunc = Truncation { tau_window: 64, series_window: 1024, d_max: 10, stability_check: true };
    let mut notes = Vec::new();
    let cases: [(&str, Option<f64>); 4] = [("power t=2", None), ("constant 1", None), ("power t=3", Some(0.0)), ("exp rate=-0.5", None)];
    for (desc, origin) in cases {
        let w = Arc::new(Weight::parse(desc, None).unwrap());
        let alpha = 1;
        let s = 2.0;
        let problem = Problem {
            alpha,
            side: Side::Left,
            origin,
            space_in: SpaceParams::new(2.0, 2.0, s - alpha as f64, w.clone()).unwrap(),
            space_out: SpaceParams::new(2.0, 2.0, s, w.clone()).unwrap(),
            n_in: min_order(s - 1.0, 2.0, 1.0) as usize,
            n_out: min_order(s, 2.0, 1.0) as usize,
            d_max: 6,
            options: EstimateOptions { r_w: Some(1.0), ..Default::default() },
        };
        let window = if origin.is_some() { (0, 24) } else { (-24, 24) };
        let fam = make_family(vec![FamilyKind::RandomCombo { seed: 8, count: 50, order: 3, window, derivative: 1 }]).map_err(|e| e.to_string())?;
        let rep = verify_reverse(&problem, &fam, &trunc, Tolerances::default()).map_err(|e| e.to_string())?;
        let d0 = rep.criterion.value();
        ensure(d0 == 1.0, || format!("{desc}: 𝔻(0) = {d0}"))?;
        ensure(rep.empirical.value <= 16.0 * d0, || format!("{desc}: reverse constant {}", rep.empirical.value))?;
        notes.push(format!("{desc}: {:.3}", rep.empirical.value));
    }
    Ok(format!("𝔻(0) = 1 exactly; reverse constants {}", notes.join(", ")))
}

fn example_one() -> Check {
    let trunc = Truncation::default();
    let rep = example_ex1(&Ex1Config { members: 50, ..Default::default() }, &trunc, Tolerances::default()).map_err(|e| e.to_string())?;
    ensure(rep.regime_ok, || "parameters are outside the regime".into())?;
    for v in [&rep.forward, &rep.reverse] {
        for c in &v.criterion.components {
            ensure(c.value.is_finite() && c.verdict == Verdict::Converged, || {
                format!("{} = {} ({})", c.functional, c.value, c.verdict)
            })?;
        }
        ensure(v.outcome() == Outcome::Pass, || format!("{:?}: {}", v.direction, v.comparison.reason))?;
    }
    Ok(format!(
        "forward criterion {:.4} vs empirical {:.4}; reverse criterion {:.4} vs empirical {:.4}",
        rep.forward.criterion.value(),
        rep.forward.empirical.value,
        rep.reverse.criterion.value(),
        rep.reverse.empirical.value
    ))
}

fn redundancy_ordering() -> Check {
    let trunc = Truncation { tau_window: 32, series_window: 1024, d_max: 4, stability_check: true };
    let pairs = [
        ("exp rate=-1", "exp rate=1"),
        ("power t=4", "power t=0 delta=4"),
        ("power t=3", "power t=3 delta=6"),
        ("constant 1", "constant 1"),
        ("power t=2", "power t=2"),
        ("exp rate=-0.5", "power t=0 delta=2"),
        ("power t=5", "exp rate=0.3"),
        ("abs zeta=0.5", "abs zeta=0.5"),
        ("power t=3 delta=1", "constant 2"),
        ("exp rate=-2", "constant 1"),
    ];
    let mut finite_old = 0;
    for (a, b) in pairs {
        let (u, v) = (Arc::new(Weight::parse(a, None).unwrap()), Arc::new(Weight::parse(b, None).unwrap()));
        for side in [Side::Left, Side::Right] {
            let inp = CriteriaInput::full_line(1, 2.0, side).with_previous();
            let up = criterion_upper(&inp, 0.0, &u, &v, &trunc).map_err(|e| e.to_string())?;
            let low = criterion_lower(&inp, 0.0, &u, &v, &trunc).map_err(|e| e.to_string())?;
            for (name, rep) in [("upper", &up), ("lower", &low)] {
                let old = rep.previous.as_ref().unwrap().aggregate.value;
                ensure(old >= rep.value(), || format!("{name} ({a}; {b}; {side:?}): old {old} < new {}", rep.value()))?;
                if old.is_finite() {
                    finite_old += 1;
                }
            }
        }
    }
    Ok(format!("old >= new on 10 pairs, both sides, upper and lower ({finite_old} of 40 old aggregates finite)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("spline identities", spline_identities),
        ("difference coefficients", difference_coefficients),
        ("Chu-Vandermonde", chu_vandermonde_exact),
        ("Riemann-Liouville", riemann_liouville),
        ("Battle-Lemarie", battle_lemarie),
        ("overlap constant", theta_constant),
        ("sequence norms", sequence_norms),
        ("same-weight sanity", same_weight),
        ("example ex1", example_one),
        ("redundancy ordering", redundancy_ordering),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {:>2} {name}: PASS [{secs:.2}s] {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL [{secs:.2}s] {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
