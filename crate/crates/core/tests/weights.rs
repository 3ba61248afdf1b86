use proptest::prelude::*;
use rlbesov::weights::{
    doubling_check, muckenhoupt_constant, nested_dyadic_pairs, Interval, ScanSpec, Weight, WeightKind,
};

/// Composite three-point Gauss over 2000 cells, split at the kinks.
fn oracle_mass(w: &Weight, lo: f64, hi: f64, e: f64) -> f64 {
    if let WeightKind::Homogeneous { zeta } = *w.kind() {
        // quadrature is poor at the root singularity; ∫ |x|^k has a closed form
        let k = zeta * e;
        let prim = |x: f64| x.signum() * x.abs().powf(k + 1.0) / (k + 1.0);
        return prim(hi) - prim(lo);
    }
    let mut cuts = vec![lo];
    cuts.extend([-2.0, 0.0, 1.5, 4.0].into_iter().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    cuts.windows(2).map(|c| gauss_cells(w, c[0], c[1], e)).sum()
}

fn gauss_cells(w: &Weight, lo: f64, hi: f64, e: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let r = (0.6f64).sqrt();
    (0..n)
        .map(|i| {
            let c = lo + (i as f64 + 0.5) * h;
            let f = |x: f64| w.value(x).powf(e);
            h / 18.0 * (5.0 * f(c - r * h / 2.0) + 8.0 * f(c) + 5.0 * f(c + r * h / 2.0))
        })
        .sum()
}

fn samples() -> Vec<Weight> {
    vec![
        Weight::power(3.0, 0.0),
        Weight::power(3.0, 4.0),
        Weight::power(0.5, 0.0),
        Weight::constant(2.5),
        Weight::new(WeightKind::Exponential { rate: 0.7 }).unwrap(),
        Weight::new(WeightKind::Homogeneous { zeta: 0.5 }).unwrap(),
        Weight::new(WeightKind::Table { xs: vec![-2.0, 0.0, 1.5, 4.0], ws: vec![1.0, 3.0, 0.5, 2.0] }).unwrap(),
    ]
}

#[test]
fn masses_match_quadrature() {
    for w in samples() {
        for &(lo, hi) in &[(-3.0, -1.25), (-0.75, 2.0), (0.125, 0.25), (1.0, 9.0)] {
            for &e in &[1.0, -1.0, 0.5] {
                let got = w.mass_pow(lo, hi, e).unwrap();
                let want = oracle_mass(&w, lo, hi, e);
                assert!((got - want).abs() < 1e-8 * want.abs().max(1e-3), "{} on [{lo},{hi}] e={e}: {got} vs {want}", w.describe());
            }
        }
    }
}

#[test]
fn descriptors_round_trip() {
    for w in samples().into_iter().filter(|w| !matches!(w.kind(), WeightKind::Table { .. })) {
        let back = Weight::parse(&w.describe(), None).unwrap();
        assert_eq!(back, w);
    }
    assert_eq!(Weight::parse("power t=3 delta=0", None).unwrap(), Weight::power(3.0, 0.0));
    assert_eq!(Weight::parse("constant 1", None).unwrap(), Weight::constant(1.0));
    assert!(Weight::parse("power t=3 delta", None).is_err());
    assert!(Weight::parse("power t=3 rate=1", None).is_err());
    assert!(Weight::parse("constant 1 2", None).is_err());
    assert!(Weight::parse("table file=/nonexistent/w.txt", None).is_err());
}

#[test]
fn table_files_resolve_against_base() {
    let dir = std::env::temp_dir().join(format!("rlbesov-weights-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("w.txt"), "# x w\n0 1\n1, 3\n2 3\n").unwrap();
    let w = Weight::parse("table file=w.txt", Some(&dir)).unwrap();
    assert!((w.mass(0.0, 2.0).unwrap() - 5.0).abs() < 1e-14);
    assert_eq!(w.value(-4.0), 1.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn constant_weight_is_a1_and_doubling() {
    let scan = ScanSpec { d_min: -2, d_max: 4, extent: 4.0 };
    let c = muckenhoupt_constant(&Weight::constant(3.0), 2.0, false, &scan).unwrap();
    assert!((c.value - 1.0).abs() < 1e-14);
    let pairs = nested_dyadic_pairs(4.0, (0, 2), 2);
    let rep = doubling_check(&Weight::constant(1.0), 1.0, 1.0, &pairs).unwrap();
    assert!((rep.c_i - 1.0).abs() < 1e-14 && (rep.c_ii - 1.0).abs() < 1e-14);
}

#[test]
fn power_weights_muckenhoupt_thresholds() {
    let scan = ScanSpec { d_min: -3, d_max: 6, extent: 8.0 };
    // |x|^ζ is in A_ρ iff −1 < ζ < ρ − 1
    let inside = Weight::new(WeightKind::Homogeneous { zeta: 0.5 }).unwrap();
    let a = muckenhoupt_constant(&inside, 2.0, false, &scan).unwrap();
    assert!(a.value.is_finite() && a.value < 3.0);
    let outside = Weight::new(WeightKind::Homogeneous { zeta: 1.5 }).unwrap();
    let b = muckenhoupt_constant(&outside, 2.0, false, &scan).unwrap();
    assert!(b.infinite);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mass_is_additive(pick in 0usize..7, a in -10.0f64..10.0, l1 in 0.0f64..5.0, l2 in 0.0f64..5.0) {
        let w = &samples()[pick];
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = w.mass(a, c).unwrap();
        let parts = w.mass(a, b).unwrap() + w.mass(b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn dyadic_children_sum_to_parent(pick in 0usize..7, d in -2i32..6, tau in -30i64..30) {
        let w = &samples()[pick];
        let parent = w.mass_of(Interval::dyadic(d, tau)).unwrap();
        let kids = w.mass_of(Interval::dyadic(d + 1, 2 * tau)).unwrap() + w.mass_of(Interval::dyadic(d + 1, 2 * tau + 1)).unwrap();
        prop_assert!((parent - kids).abs() <= 1e-12 * parent.max(1e-300));
    }
}
