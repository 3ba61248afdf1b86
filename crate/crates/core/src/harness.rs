//! Test functions from the necessity arguments, empirical best constants and
//! the comparison of criteria against them.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::besov::{besov_norm_estimate, EstimateOptions, SpaceParams};
use crate::bspline::{bspline, difference_coeffs, gram, MAX_ORDER};
use crate::criteria::{criterion_lower, criterion_upper, CriteriaInput, CriterionReport, Truncation};
use crate::par;
use crate::rliouville::{rl_apply, RLSpec, Side};
use crate::wavelet::{euler_constants, generalized_psi, HalfOrigin, SplineSystemSpec};
use crate::weights::{Interval, Weight};
use crate::{Dyadic, Error, PiecewisePoly, Result};

fn describe<S: Serializer>(w: &Arc<Weight>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.describe())
}

/// One kind of test function, or a seeded random batch.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `f*_R = Σ_{−R≤τ≤ν} (ν−τ+1)^{(α−1)(p′−1)} v(Q_{0τ})^{1−p′} B_{m*}(· − τ + α)`.
    /// With an origin `c` the sum runs over `0 ≤ τ ≤ ν` against `B_{m*}(· − c − τ)`
    /// and `v(Q^{⟨c⟩}_{0τ})`.
    Fstar {
        r: i64,
        nu: i64,
        m_star: usize,
        alpha: u32,
        p: f64,
        #[serde(serialize_with = "describe")]
        v: Arc<Weight>,
        origin: Option<i64>,
    },
    /// `g*_R = Σ_{ν≤τ≤R} (τ−ν+1)^{(α−1)(p−1)} u(Q_{0τ}) B_{m*}(· − τ + α)`, with the
    /// same origin convention as `Fstar`.
    Gstar {
        r: i64,
        nu: i64,
        m_star: usize,
        alpha: u32,
        p: f64,
        #[serde(serialize_with = "describe")]
        u: Arc<Weight>,
        origin: Option<i64>,
    },
    /// `h*_{τ0} = 𝚲_{m*}^{-1} Ψ_{m*,ā,s̄;n*(1),α(1)}(2^{d0−1}· − τ0)` with `n* = m* + α`.
    Hstar { d0: u32, tau0: i64, m_star: usize, alpha: u32, s_bar: i64, a_bar: i64 },
    /// `count` members `(Σ_k c_k B_order(· − k))^{(derivative)}` with up to six
    /// shifts `k` drawn from `window` and `c_k` uniform on `[−1, 1]`.
    RandomCombo { seed: u64, count: usize, order: usize, window: (i64, i64), derivative: u32 },
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Fstar { r, nu, m_star, .. } => write!(f, "fstar(R={r},nu={nu},m={m_star})"),
            FamilyKind::Gstar { r, nu, m_star, .. } => write!(f, "gstar(R={r},nu={nu},m={m_star})"),
            FamilyKind::Hstar { d0, tau0, .. } => write!(f, "hstar(d0={d0},tau0={tau0})"),
            FamilyKind::RandomCombo { seed, count, .. } => write!(f, "random(seed={seed},count={count})"),
        }
    }
}

/// A list of compactly supported test functions with their labels.
#[derive(Clone, Debug)]
pub struct TestFamily {
    pub kinds: Vec<FamilyKind>,
    pub members: Vec<PiecewisePoly>,
    pub labels: Vec<String>,
}

impl TestFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Seeds of the random batches, for the report.
    pub fn seeds(&self) -> Vec<u64> {
        self.kinds
            .iter()
            .filter_map(|k| match k {
                FamilyKind::RandomCombo { seed, .. } => Some(*seed),
                _ => None,
            })
            .collect()
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::invalid(format!("spline order {n} must lie in 1..={MAX_ORDER}")));
    }
    Ok(())
}

fn spline_sum(n: usize, terms: &[(f64, i64)]) -> Result<PiecewisePoly> {
    let b = bspline(n)?;
    let shifted = terms.iter().map(|&(c, k)| Ok((c, b.shift(Dyadic::int(k))?))).collect::<Result<Vec<_>>>()?;
    let refs: Vec<(f64, &PiecewisePoly)> = shifted.iter().map(|(c, f)| (*c, f)).collect();
    PiecewisePoly::linear_combination(&refs)
}

fn unit_mass(w: &Weight, tau: i64, c: i64) -> Result<f64> {
    w.mass_of(Interval::new((tau + c) as f64, (tau + c + 1) as f64))
}

/// Build one test function. Random batches go through [`make_family`].
pub fn make_test_function(kind: &FamilyKind) -> Result<PiecewisePoly> {
    match kind {
        FamilyKind::Fstar { r, nu, m_star, alpha, p, v, origin } => {
            check_order(*m_star)?;
            if !(*p > 1.0) {
                return Err(Error::precondition("f* needs p > 1"));
            }
            let pc = p / (p - 1.0);
            let e = (*alpha as f64 - 1.0) * (pc - 1.0);
            let (lo, c) = match origin {
                None => (-r, 0),
                Some(c) => (0, *c),
            };
            if *nu < lo {
                return Err(Error::invalid(format!("ν = {nu} lies below the first index {lo}")));
            }
            let terms = (lo..=*nu)
                .map(|tau| {
                    let coef = ((nu - tau + 1) as f64).powf(e) * unit_mass(v, tau, c)?.powf(1.0 - pc);
                    let k = if origin.is_some() { c + tau } else { tau - *alpha as i64 };
                    Ok((coef, k))
                })
                .collect::<Result<Vec<_>>>()?;
            spline_sum(*m_star, &terms)
        }
        FamilyKind::Gstar { r, nu, m_star, alpha, p, u, origin } => {
            check_order(*m_star)?;
            if !(*p > 1.0) {
                return Err(Error::precondition("g* needs p > 1"));
            }
            let e = (*alpha as f64 - 1.0) * (p - 1.0);
            let c = origin.unwrap_or(0);
            if *r < *nu || (origin.is_some() && *nu < 0) {
                return Err(Error::invalid(format!("g* needs 0 ≤ ν ≤ R on the half-line and ν ≤ R, got ν = {nu}, R = {r}")));
            }
            let terms = (*nu..=*r)
                .map(|tau| {
                    let coef = ((tau - nu + 1) as f64).powf(e) * unit_mass(u, tau, c)?;
                    let k = if origin.is_some() { c + tau } else { tau - *alpha as i64 };
                    Ok((coef, k))
                })
                .collect::<Result<Vec<_>>>()?;
            spline_sum(*m_star, &terms)
        }
        FamilyKind::Hstar { d0, tau0, m_star, alpha, s_bar, a_bar } => {
            if *d0 == 0 {
                return Err(Error::invalid("h* needs d0 ≥ 1"));
            }
            let n_star = m_star + *alpha as usize;
            let spec = SplineSystemSpec {
                n: *m_star,
                a: HalfOrigin::from_twice(2 * a_bar)?,
                s: *s_bar,
                m: n_star,
                k_flag: 1,
                zeta_flag: 1,
                alpha: *alpha,
            };
            let el = generalized_psi(spec)?;
            let lam = euler_constants(*m_star)?.lambda_cap;
            el.func.transform(1.0 / lam, Dyadic::int(*tau0), *d0 as i32 - 1)
        }
        FamilyKind::RandomCombo { .. } => Err(Error::invalid("random batches have several members; use make_family")),
    }
}

fn random_members(seed: u64, count: usize, order: usize, window: (i64, i64), derivative: u32) -> Result<Vec<PiecewisePoly>> {
    check_order(order)?;
    if window.0 > window.1 {
        return Err(Error::invalid("empty shift window"));
    }
    if derivative as usize >= order {
        return Err(Error::invalid(format!("derivative {derivative} of B_{order} is not continuous")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = rng.random_range(1..=6usize);
        let terms: Vec<(f64, i64)> = (0..k).map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(window.0..=window.1))).collect();
        let mut f = spline_sum(order, &terms)?;
        for _ in 0..derivative {
            f = f.derivative();
        }
        if !f.is_zero() {
            out.push(f);
        }
    }
    Ok(out)
}

/// Expand a list of kinds into a family.
pub fn make_family(kinds: Vec<FamilyKind>) -> Result<TestFamily> {
    let mut members = Vec::new();
    let mut labels = Vec::new();
    for kind in &kinds {
        match kind {
            FamilyKind::RandomCombo { seed, count, order, window, derivative } => {
                for (i, f) in random_members(*seed, *count, *order, *window, *derivative)?.into_iter().enumerate() {
                    members.push(f);
                    labels.push(format!("{kind}#{i}"));
                }
            }
            _ => {
                members.push(make_test_function(kind)?);
                labels.push(kind.to_string());
            }
        }
    }
    if members.is_empty() {
        return Err(Error::invalid("test family is empty"));
    }
    Ok(TestFamily { kinds, members, labels })
}

/// `f*_R` and `g*_R` over a grid of `(R, ν)`.
pub fn extremal_family(alpha: u32, p: f64, u: &Arc<Weight>, v: &Arc<Weight>, m_star: usize, rs: &[i64], nus: &[i64], origin: Option<i64>) -> Result<TestFamily> {
    let mut kinds = Vec::new();
    for &r in rs {
        for &nu in nus {
            let lo = if origin.is_some() { 0 } else { -r };
            if nu >= lo {
                kinds.push(FamilyKind::Fstar { r, nu, m_star, alpha, p, v: v.clone(), origin });
            }
            if nu <= r && (origin.is_none() || nu >= 0) {
                kinds.push(FamilyKind::Gstar { r, nu, m_star, alpha, p, u: u.clone(), origin });
            }
        }
    }
    make_family(kinds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `‖I^α f‖_out / ‖f‖_in`.
    Forward,
    /// `‖f‖_in / ‖I^α f‖_out`.
    Reverse,
}

/// Operator and spaces of one inequality.
#[derive(Clone, Debug)]
pub struct Problem {
    pub alpha: u32,
    pub side: Side,
    /// `None` for `I_±^α`, `Some(c)` for `I_{c±}^α`.
    pub origin: Option<f64>,
    /// Space of `f`.
    pub space_in: SpaceParams,
    /// Space of `I^α f`.
    pub space_out: SpaceParams,
    pub n_in: usize,
    pub n_out: usize,
    pub d_max: u32,
    pub options: EstimateOptions,
}

impl Problem {
    fn rl(&self) -> RLSpec {
        match self.origin {
            None => RLSpec::full_line(self.alpha, self.side),
            Some(c) => RLSpec::half_line(self.alpha, self.side, c),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.space_in.p != self.space_out.p || self.space_in.q != self.space_out.q {
            return Err(Error::precondition("both spaces must share p and q"));
        }
        Ok(())
    }

    /// `κ*` with `s_in = s_out + κ* − α`.
    pub fn kappa_star(&self) -> f64 {
        self.space_in.s - self.space_out.s + self.alpha as f64
    }

    /// `κ_*` with `s_in = s_out − κ_* − α`.
    pub fn kappa_low(&self) -> f64 {
        self.space_out.s - self.alpha as f64 - self.space_in.s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberRatio {
    pub index: usize,
    pub label: String,
    pub norm_in: f64,
    pub norm_out: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub direction: Direction,
    pub value: f64,
    pub member: Option<usize>,
    pub label: Option<String>,
    pub ratios: Vec<MemberRatio>,
    pub notes: Vec<String>,
    pub seeds: Vec<u64>,
}

/// Largest ratio of norm estimates over the family.
pub fn empirical_constant(problem: &Problem, family: &TestFamily, direction: Direction) -> Result<EmpiricalReport> {
    problem.validate()?;
    if family.is_empty() {
        return Err(Error::invalid("test family is empty"));
    }
    let rl = problem.rl();
    let idx: Vec<usize> = (0..family.len()).collect();
    let rows = par::map_slice(&idx, |&i| -> Result<MemberRatio> {
        let f = &family.members[i];
        let g = rl_apply(&rl, f)?;
        let nin = besov_norm_estimate(f, &problem.space_in, problem.n_in, problem.d_max, &problem.options)?.value;
        let nout = besov_norm_estimate(&g, &problem.space_out, problem.n_out, problem.d_max, &problem.options)?.value;
        let (num, den) = match direction {
            Direction::Forward => (nout, nin),
            Direction::Reverse => (nin, nout),
        };
        let ratio = (den > 0.0).then(|| num / den);
        Ok(MemberRatio { index: i, label: family.labels[i].clone(), norm_in: nin, norm_out: nout, ratio })
    });
    let ratios = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for m in &ratios {
        match m.ratio {
            None => notes.push(format!("member {} ({}) skipped: zero denominator", m.index, m.label)),
            Some(r) if best.is_none_or(|(_, b)| r > b) => best = Some((m.index, r)),
            Some(_) => {}
        }
    }
    let (member, value) = match best {
        Some((i, v)) => (Some(i), v),
        None => (None, 0.0),
    };
    Ok(EmpiricalReport {
        direction,
        value,
        member,
        label: member.map(|i| family.labels[i].clone()),
        ratios,
        notes,
        seeds: family.seeds(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
        })
    }
}

/// Equivalence constants for [`compare`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub k_lo: f64,
    pub k_hi: f64,
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { k_lo: 16.0, k_hi: 16.0, slack: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub outcome: Outcome,
    pub criterion: f64,
    pub empirical: f64,
    pub tolerances: Tolerances,
    pub reason: String,
}

/// PASS when `empirical ≤ K_hi·criterion` and `criterion ≤ K_lo·(empirical + slack)`;
/// two infinite values agree, a single infinite one does not.
pub fn compare(criterion: f64, empirical: f64, tol: Tolerances) -> Comparison {
    let (outcome, reason) = match (criterion.is_finite(), empirical.is_finite()) {
        (false, false) => (Outcome::Pass, "both infinite".to_string()),
        (true, false) => (Outcome::Fail, format!("criterion {criterion} is finite but the family diverges")),
        (false, true) => (Outcome::Fail, format!("criterion is infinite but the family stays at {empirical}")),
        (true, true) => {
            if !(empirical <= tol.k_hi * criterion) {
                (Outcome::Fail, format!("empirical {empirical} exceeds {} × criterion {criterion}", tol.k_hi))
            } else if !(criterion <= tol.k_lo * (empirical + tol.slack)) {
                (Outcome::Fail, format!("criterion {criterion} exceeds {} × empirical {empirical}", tol.k_lo))
            } else {
                (Outcome::Pass, format!("ratio empirical/criterion = {}", empirical / criterion))
            }
        }
    };
    Comparison { outcome, criterion, empirical, tolerances: tol, reason }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub direction: Direction,
    pub kappa: f64,
    pub criterion: CriterionReport,
    pub empirical: EmpiricalReport,
    pub comparison: Comparison,
}

impl VerifyReport {
    pub fn outcome(&self) -> Outcome {
        self.comparison.outcome
    }
}

fn criteria_input(problem: &Problem) -> CriteriaInput {
    let p = problem.space_in.p;
    match problem.origin {
        None => CriteriaInput::full_line(problem.alpha, p, problem.side),
        Some(c) => CriteriaInput::half_line(problem.alpha, p, problem.side, c),
    }
}

/// Upper criterion for `I^α: B^{s+κ*−α,v} → B^{s,u}` against the forward constant.
pub fn verify_forward(problem: &Problem, family: &TestFamily, trunc: &Truncation, tol: Tolerances) -> Result<VerifyReport> {
    problem.validate()?;
    let kappa = problem.kappa_star();
    let criterion = criterion_upper(&criteria_input(problem), kappa, &problem.space_out.weight, &problem.space_in.weight, trunc)?;
    let empirical = empirical_constant(problem, family, Direction::Forward)?;
    let comparison = compare(criterion.value(), empirical.value, tol);
    Ok(VerifyReport { direction: Direction::Forward, kappa, criterion, empirical, comparison })
}

/// Lower criterion for `‖f‖_{B^{s−κ_*−α,w}} ≲ ℂ ‖I^α f‖_{B^{s,u}}` against the reverse constant.
pub fn verify_reverse(problem: &Problem, family: &TestFamily, trunc: &Truncation, tol: Tolerances) -> Result<VerifyReport> {
    problem.validate()?;
    let kappa = problem.kappa_low();
    let criterion = criterion_lower(&criteria_input(problem), kappa, &problem.space_out.weight, &problem.space_in.weight, trunc)?;
    let empirical = empirical_constant(problem, family, Direction::Reverse)?;
    let comparison = compare(criterion.value(), empirical.value, tol);
    Ok(VerifyReport { direction: Direction::Reverse, kappa, criterion, empirical, comparison })
}

/// Parameters of the worked power-weight example on the half-line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ex1Config {
    pub p: f64,
    pub q: f64,
    pub alpha: u32,
    pub s: f64,
    pub t: f64,
    pub members: usize,
    pub seed: u64,
    pub d_max: u32,
}

impl Default for Ex1Config {
    fn default() -> Self {
        Ex1Config { p: 2.0, q: 2.0, alpha: 1, s: 2.0, t: 3.0, members: 50, seed: 1, d_max: 6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Ex1Report {
    pub config: Ex1Config,
    /// `t > max{1, pα − (p−1)}` and `α ≤ s`.
    pub regime_ok: bool,
    pub forward: VerifyReport,
    pub reverse: VerifyReport,
}

impl Ex1Report {
    pub fn outcome(&self) -> Outcome {
        if self.forward.outcome() == Outcome::Pass && self.reverse.outcome() == Outcome::Pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// `u = w = (1+|x|)^{−t}`, `v = (1+|x|)^{−t+sp}` and `I_{0+}^α`; checks
/// `B^{s−α,v} → B^{s,u}` and the reverse inequality into `B^{s−α,w}`.
pub fn example_ex1(cfg: &Ex1Config, trunc: &Truncation, tol: Tolerances) -> Result<Ex1Report> {
    let (p, q, s, t) = (cfg.p, cfg.q, cfg.s, cfg.t);
    let alpha = cfg.alpha;
    let a = alpha as f64;
    if !(p > 1.0) || alpha == 0 {
        return Err(Error::precondition("the example needs p > 1 and α ≥ 1"));
    }
    let regime_ok = t > 1f64.max(p * a - (p - 1.0)) && a <= s;
    let u = Arc::new(Weight::power(t, 0.0));
    let v = Arc::new(Weight::power(t, s * p));
    let opts = EstimateOptions { r_w: Some(1.0), ..Default::default() };
    let s_in = s - a;
    let n_out = crate::besov::min_order(s, p, 1.0).max(1) as usize;
    let n_in = crate::besov::min_order(s_in, p, 1.0).max(1) as usize;
    let space = |s, w: &Arc<Weight>| SpaceParams::new(p, q, s, w.clone());
    let forward = Problem {
        alpha,
        side: Side::Left,
        origin: Some(0.0),
        space_in: space(s_in, &v)?,
        space_out: space(s, &u)?,
        n_in,
        n_out,
        d_max: cfg.d_max,
        options: opts.clone(),
    };
    let reverse = Problem { space_in: space(s_in, &u)?, ..forward.clone() };
    let m_star = (alpha as usize + 1).min(MAX_ORDER);
    let grid: Vec<i64> = vec![2, 8, 32];
    let mut fam_f = extremal_family(alpha, p, &u, &v, m_star, &grid, &[0, 1, 4, 16], Some(0))?;
    let extra = cfg.members.saturating_sub(fam_f.len());
    if extra > 0 {
        let more = make_family(vec![FamilyKind::RandomCombo { seed: cfg.seed, count: extra, order: m_star, window: (0, 24), derivative: 0 }])?;
        fam_f.kinds.extend(more.kinds);
        fam_f.members.extend(more.members);
        fam_f.labels.extend(more.labels);
    }
    // for the reverse direction, f = g^{(α)} keeps I_{0+}^α f = g compact
    let fam_r = make_family(vec![FamilyKind::RandomCombo {
        seed: cfg.seed.wrapping_add(1),
        count: cfg.members,
        order: (alpha as usize + 2).min(MAX_ORDER),
        window: (0, 24),
        derivative: alpha,
    }])?;
    Ok(Ex1Report {
        config: cfg.clone(),
        regime_ok,
        forward: verify_forward(&forward, &fam_f, trunc, tol)?,
        reverse: verify_reverse(&reverse, &fam_r, trunc, tol)?,
    })
}

/// Both sides of the lower-bound step for `f*_R` against `I_+^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dopka11 {
    /// `(Σ_τ u(Q_{0τ}) |Σ_{l≤τ} A_{τ−l}(α) ⟨f*_R, B_{m*,l−α}⟩|^p)^{1/p}`.
    pub lhs: f64,
    /// `(Σ_{τ≥ν} u(Q_{0τ}))^{1/p} Σ_{−R≤τ≤ν} (ν−τ+1)^{(α−1)p′} v(Q_{0τ})^{1−p′}`.
    pub witness: f64,
    pub ratio: f64,
}

/// Evaluate both sides with `τ` running `extent` steps past the support.
pub fn dopka11_check(r: i64, nu: i64, m_star: usize, alpha: u32, p: f64, u: &Weight, v: &Weight, extent: i64) -> Result<Dopka11> {
    check_order(m_star)?;
    if nu < -r || !(p > 1.0) || extent < 0 {
        return Err(Error::invalid("need −R ≤ ν, p > 1 and a nonnegative extent"));
    }
    let pc = p / (p - 1.0);
    let e = (alpha as f64 - 1.0) * (pc - 1.0);
    let m = m_star as i64;
    let coef: Vec<f64> = (-r..=nu)
        .map(|tau| Ok(((nu - tau + 1) as f64).powf(e) * unit_mass(v, tau, 0)?.powf(1.0 - pc)))
        .collect::<Result<_>>()?;
    // b_l = ⟨f*, B_{m*}(· − l + α)⟩ = Σ_τ c_τ gram(m*, l − τ)
    let (l_lo, l_hi) = (-r - m, nu + m);
    let b: Vec<f64> = (l_lo..=l_hi)
        .map(|l| {
            (-r..=nu)
                .zip(&coef)
                .filter(|(tau, _)| (l - tau).abs() <= m)
                .map(|(tau, c)| Ok(c * gram(m_star, l - tau)?))
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    let t_hi = l_hi + extent;
    let a = difference_coeffs(alpha, (t_hi - l_lo) as usize)?.values();
    let lhs_terms = par::map_range(l_lo, t_hi + 1, |tau| -> Result<f64> {
        let s: f64 = (l_lo..=tau.min(l_hi)).map(|l| a[(tau - l) as usize] * b[(l - l_lo) as usize]).sum();
        Ok(unit_mass(u, tau, 0)? * s.abs().powf(p))
    });
    let lhs = lhs_terms.into_iter().sum::<Result<f64>>()?.powf(1.0 / p);
    let tail: f64 = (nu..=t_hi).map(|tau| unit_mass(u, tau, 0)).sum::<Result<f64>>()?;
    let head: f64 = (-r..=nu)
        .map(|tau| Ok(((nu - tau + 1) as f64).powf((alpha as f64 - 1.0) * pc) * unit_mass(v, tau, 0)?.powf(1.0 - pc)))
        .sum::<Result<f64>>()?;
    let witness = tail.powf(1.0 / p) * head;
    Ok(Dopka11 { lhs, witness, ratio: lhs / witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fstar_with_unit_weight_is_a_spline_sum() {
        let one = Arc::new(Weight::constant(1.0));
        let f = make_test_function(&FamilyKind::Fstar { r: 3, nu: 0, m_star: 2, alpha: 1, p: 3.0, v: one, origin: None }).unwrap();
        let want = spline_sum(2, &[(1.0, -4), (1.0, -3), (1.0, -2), (1.0, -1)]).unwrap();
        for i in 0..200 {
            let x = -5.0 + 0.037 * i as f64;
            assert!((f.eval(x) - want.eval(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn random_batches_are_reproducible() {
        let kind = FamilyKind::RandomCombo { seed: 9, count: 5, order: 3, window: (0, 10), derivative: 1 };
        let a = make_family(vec![kind.clone()]).unwrap();
        let b = make_family(vec![kind]).unwrap();
        assert_eq!(a.members, b.members);
        assert_eq!(a.seeds(), vec![9]);
        assert!(make_test_function(&FamilyKind::RandomCombo { seed: 0, count: 1, order: 3, window: (0, 1), derivative: 0 }).is_err());
    }

    #[test]
    fn comparison_rules() {
        let t = Tolerances::default();
        assert_eq!(compare(1.0, 1.0, t).outcome, Outcome::Pass);
        assert_eq!(compare(1.0, f64::INFINITY, t).outcome, Outcome::Fail);
        assert_eq!(compare(f64::INFINITY, f64::INFINITY, t).outcome, Outcome::Pass);
        assert_eq!(compare(1.0, 17.0, t).outcome, Outcome::Fail);
        assert_eq!(compare(17.0, 1.0, t).outcome, Outcome::Fail);
        assert_eq!(compare(16.0, 1.0, t).outcome, Outcome::Pass);
    }
}
