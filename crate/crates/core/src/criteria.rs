//! Discrete weighted functionals and the boundedness criteria built from them.
//!
//! Five families are evaluated over finite windows: `𝐌±^θ(ε)`, `𝓜±^θ(d,κ,ε)`,
//! `M±^θ(ε)`, `𝕄±^θ(d,κ,ε)` and the mass ratio `𝔐(d,κ;σ₁,σ₂)`, each optionally
//! in its half-line form with `τ ∈ ±ℕ₀` and shifted intervals `Q^{⟨c⟩}`.
//! Sums run in log space. Infinite series are cut at `R` terms and classified
//! from the partial sums at `R/4`, `R/2` and `R`; suprema are re-evaluated on
//! doubled windows to judge stability.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::besov::DyadicIndex;
use crate::par;
use crate::quad;
use crate::rliouville::Side;
use crate::weights::{Interval, Weight};
use crate::{Error, Result};

/// `ε` values scanned for the existential `ε_M`, `ε_𝕄`.
pub const EPSILON_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Block ratio at or above which a series counts as diverging.
const DIVERGING_RATIO: f64 = 0.95;
/// Block ratio at or below which a series counts as converged.
const CONVERGED_RATIO: f64 = 0.8;
/// Relative change tolerated when both windows are doubled.
const STABILITY_TOL: f64 = 0.01;

mod inf_as_string {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("+inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Num::deserialize(d)? {
            Num::F(x) => Ok(x),
            Num::S(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Ok(f64::NAN),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `𝐌±^θ(ε)`.
    MBold,
    /// `𝓜±^θ(d, κ, ε)`.
    MScript,
    /// `M±^θ(ε)`.
    MPlain,
    /// `𝕄±^θ(d, κ, ε)`.
    MBb,
    /// `𝔐(d, κ; σ₁, σ₂)`.
    Frak,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Inconclusive,
    Diverging,
}

impl Verdict {
    fn worst(self, o: Verdict) -> Verdict {
        self.max(o)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Diverging => "diverging",
        })
    }
}

/// Scan windows: `|τ| ≤ tau_window`, series cut after `series_window` terms,
/// levels up to `d_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub tau_window: i64,
    pub series_window: i64,
    pub d_max: u32,
    /// Re-evaluate on doubled windows and require agreement within 1%.
    pub stability_check: bool,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { tau_window: 512, series_window: 4096, d_max: 20, stability_check: true }
    }
}

impl Truncation {
    pub fn small() -> Self {
        Truncation { tau_window: 64, series_window: 1024, d_max: 10, stability_check: true }
    }

    fn doubled(&self) -> Self {
        Truncation { tau_window: 2 * self.tau_window, series_window: 2 * self.series_window, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.tau_window < 0 || self.series_window < 4 {
            return Err(Error::invalid("windows must be nonempty and the series window at least 4"));
        }
        Ok(())
    }
}

/// The windows a value was computed on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    pub tau: i64,
    pub series: i64,
    pub d_max: u32,
}

impl From<&Truncation> for Windows {
    fn from(t: &Truncation) -> Self {
        Windows { tau: t.tau_window, series: t.series_window, d_max: t.d_max }
    }
}

/// One functional of a criteria evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub functional: String,
    #[serde(with = "inf_as_string")]
    pub value: f64,
    pub tau_star: Option<i64>,
    pub d_star: Option<u32>,
    pub windows: Windows,
    pub tail_ratio: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// A single functional to evaluate.
#[derive(Clone, Debug)]
pub struct FunctionalSpec {
    pub family: Family,
    pub side: Side,
    pub theta: u32,
    pub epsilon: f64,
    pub d: u32,
    pub kappa: f64,
    pub p: f64,
    /// `u` for `𝐌`/`𝓜`, `w` for `M`/`𝕄`, `σ₁` for `𝔐`.
    pub first: Arc<Weight>,
    /// `v` for `𝐌`/`𝓜`, `u` for `M`/`𝕄`, `σ₂` for `𝔐`.
    pub second: Arc<Weight>,
    /// Offset `c` of the half-line variants.
    pub halfline: Option<f64>,
}

impl FunctionalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("p = {} must exceed 1", self.p)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!("ε = {} must lie in [0, 1]", self.epsilon)));
        }
        if matches!(self.family, Family::MScript | Family::MBb) && self.d == 0 {
            return Err(Error::invalid("𝓜 and 𝕄 are defined for d ≥ 1"));
        }
        if !self.kappa.is_finite() || self.halfline.is_some_and(|c| !c.is_finite()) {
            return Err(Error::invalid("κ and c must be finite"));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        let tilde = if self.halfline.is_some() { "~" } else { "" };
        let sign = match self.side {
            Side::Left => "+",
            Side::Right => "-",
        };
        let c = self.halfline.map(|c| format!(",c={c}")).unwrap_or_default();
        let th = self.theta;
        let (e, d, k) = (self.epsilon, self.d, self.kappa);
        match self.family {
            Family::MBold => format!("{tilde}M_bold{sign}^{th}(eps={e}{c})"),
            Family::MScript => format!("{tilde}M_script{sign}^{th}(d={d},kappa={k},eps={e}{c})"),
            Family::MPlain => format!("{tilde}M_plain{sign}^{th}(eps={e}{c})"),
            Family::MBb => format!("{tilde}M_bb{sign}^{th}(d={d},kappa={k},eps={e}{c})"),
            Family::Frak => format!("{tilde}frak{}(d={d},kappa={k}{c})", if tilde.is_empty() { "" } else { sign }),
        }
    }

    fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Level of the intervals `Q_{ℓ r}`.
    fn level(&self) -> u32 {
        match self.family {
            Family::MBold | Family::MPlain => 0,
            _ => self.d.saturating_sub(1),
        }
    }

    fn tau_range(&self, t: i64) -> (i64, i64) {
        match (self.halfline, self.side) {
            (None, _) => (-t, t),
            (Some(_), Side::Left) => (0, t),
            (Some(_), Side::Right) => (-t, 0),
        }
    }
}

/// `ln Σ e^{l_i}` accumulated without overflow.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    max: f64,
    acc: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum { max: f64::NEG_INFINITY, acc: 0.0 }
    }

    fn add(&mut self, l: f64) {
        if l == f64::NEG_INFINITY || self.max == f64::INFINITY {
            return;
        }
        if l == f64::INFINITY {
            self.max = f64::INFINITY;
            self.acc = 1.0;
        } else if l <= self.max {
            self.acc += (l - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - l).exp() + 1.0;
            self.max = l;
        }
    }

    fn ln(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else if self.max == f64::INFINITY {
            f64::INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Log masses `ln σ(Q^{⟨c⟩}_{ℓ r})` for `r` in `lo..=hi`, raised to a power.
struct MassTable {
    lo: i64,
    ln: Vec<f64>,
}

impl MassTable {
    fn build(w: &Weight, level: u32, c: f64, lo: i64, hi: i64, power: f64) -> Result<Self> {
        let vals = par::map_range(lo, hi + 1, |r| w.mass_of(DyadicIndex::offset(level, r, c).interval()));
        let ln = vals
            .into_iter()
            .map(|m| {
                let m = m?;
                Ok(if power == 0.0 { 0.0 } else { power * m.ln() })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(MassTable { lo, ln })
    }

    fn get(&self, r: i64) -> f64 {
        self.ln[(r - self.lo) as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Extent {
    /// Exactly `k + 1` terms, `k = 0..=K`.
    Finite(i64),
    /// An infinite series cut after `R` terms.
    Series(i64),
}

#[derive(Clone, Copy, Debug)]
struct SumResult {
    ln: f64,
    verdict: Verdict,
    tail: f64,
}

/// `ln Σ_{k} (k+1)^e σ(Q_{τ + dir·k})^{power}` over the given extent.
fn directed_sum(tab: &MassTable, tau: i64, dir: i64, e: f64, extent: Extent) -> SumResult {
    let term = |k: i64| {
        let m = tab.get(tau + dir * k);
        if e == 0.0 {
            m
        } else {
            e * ((k + 1) as f64).ln() + m
        }
    };
    match extent {
        Extent::Finite(kmax) => {
            let mut s = LogSum::new();
            for k in 0..=kmax {
                s.add(term(k));
            }
            let ln = s.ln();
            let verdict = if ln == f64::INFINITY { Verdict::Diverging } else { Verdict::Converged };
            SumResult { ln, verdict, tail: 0.0 }
        }
        Extent::Series(r) => {
            let (q1, q2) = (r / 4, r / 2);
            let mut s = LogSum::new();
            let mut marks = [0.0; 3];
            for k in 0..=r {
                s.add(term(k));
                if k == q1 {
                    marks[0] = s.ln();
                } else if k == q2 {
                    marks[1] = s.ln();
                }
            }
            marks[2] = s.ln();
            classify(marks)
        }
    }
}

/// Classify a truncated series from its partial sums at `R/4`, `R/2`, `R`.
fn classify([l1, l2, l3]: [f64; 3]) -> SumResult {
    if l3 == f64::INFINITY {
        return SumResult { ln: l3, verdict: Verdict::Diverging, tail: 1.0 };
    }
    if l3 == f64::NEG_INFINITY || l3 == l2 {
        let verdict = if l2 == l1 || l3 == f64::NEG_INFINITY { Verdict::Converged } else { Verdict::Inconclusive };
        return SumResult { ln: l3, verdict, tail: 0.0 };
    }
    if l2 == l1 {
        // nothing in the middle block but mass in the last one
        return SumResult { ln: l3, verdict: Verdict::Inconclusive, tail: -(l2 - l3).exp_m1() };
    }
    let ratio = (l2 - l1).exp() * (l3 - l2).exp_m1() / (l2 - l1).exp_m1();
    let last_share = -(l2 - l3).exp_m1();
    if ratio >= DIVERGING_RATIO {
        SumResult { ln: f64::INFINITY, verdict: Verdict::Diverging, tail: 1.0 }
    } else {
        // geometric tail estimate, kept for slow series too so that values stay
        // monotone in the terms
        let extra = last_share * ratio.max(0.0) / (1.0 - ratio);
        let verdict = if ratio <= CONVERGED_RATIO { Verdict::Converged } else { Verdict::Inconclusive };
        SumResult { ln: l3 + extra.ln_1p(), verdict, tail: extra / (1.0 + extra) }
    }
}

struct SupResult {
    value: f64,
    tau_star: Option<i64>,
    verdict: Verdict,
    tail: f64,
}

/// The supremum over `τ` for one window setting.
fn sup_once(spec: &FunctionalSpec, t: &Truncation) -> Result<SupResult> {
    let (tlo, thi) = spec.tau_range(t.tau_window);
    let c = spec.halfline.unwrap_or(0.0);
    let level = spec.level();
    let scale = if matches!(spec.family, Family::MScript | Family::MBb | Family::Frak) && spec.d > 0 {
        -(spec.d as f64) * spec.kappa * std::f64::consts::LN_2
    } else {
        0.0
    };
    if spec.family == Family::Frak {
        let a = MassTable::build(&spec.first, level, c, tlo, thi, -1.0 / spec.p)?;
        let b = MassTable::build(&spec.second, level, c, tlo, thi, 1.0 / spec.p)?;
        let mut best = SupResult { value: f64::NEG_INFINITY, tau_star: None, verdict: Verdict::Converged, tail: 0.0 };
        for tau in tlo..=thi {
            let v = (a.get(tau) + b.get(tau) + scale).exp();
            if v > best.value || best.tau_star.is_none() {
                best.value = v;
                best.tau_star = Some(tau);
            }
        }
        if best.value == f64::INFINITY {
            best.verdict = Verdict::Diverging;
        }
        return Ok(best);
    }

    let pc = spec.p_conj();
    let th = spec.theta as f64;
    let eps = spec.epsilon;
    let up = match spec.side {
        Side::Left => 1,
        Side::Right => -1,
    };
    let r = t.series_window;
    // (exponent, direction, extent) of the sum against `first` and against `second`
    let (ea, eb, da, db, xa, xb): (f64, f64, i64, i64, Box<dyn Fn(i64) -> Extent + Sync>, Box<dyn Fn(i64) -> Extent + Sync>) =
        match spec.family {
            Family::MBold | Family::MScript => {
                let g = if spec.family == Family::MBold { th - 1.0 } else { 2.0 * th - 1.0 };
                let b: Box<dyn Fn(i64) -> Extent + Sync> = if spec.halfline.is_some() {
                    Box::new(|tau: i64| Extent::Finite(tau.abs()))
                } else {
                    Box::new(move |_| Extent::Series(r))
                };
                (spec.p * g * eps, pc * g * (1.0 - eps), up, -up, Box::new(move |_| Extent::Series(r)), b)
            }
            Family::MPlain | Family::MBb => {
                let g = if spec.family == Family::MPlain { th + 1.0 } else { 2.0 * th + 1.0 };
                let k = spec.theta as i64;
                (-spec.p * g * eps, -pc * g * (1.0 - eps), -up, up, Box::new(move |_| Extent::Finite(k)), Box::new(move |_| Extent::Finite(k)))
            }
            Family::Frak => unreachable!(),
        };
    let reach = |x: &dyn Fn(i64) -> Extent| match x(tlo.abs().max(thi.abs())) {
        Extent::Finite(k) | Extent::Series(k) => k,
    };
    let (ra, rb) = (reach(&*xa), reach(&*xb));
    let ta = MassTable::build(&spec.first, level, c, tlo - ra, thi + ra, 1.0)?;
    let tb = MassTable::build(&spec.second, level, c, tlo - rb, thi + rb, 1.0 - pc)?;
    let rows = par::map_range(tlo, thi + 1, |tau| {
        let a = directed_sum(&ta, tau, da, ea, xa(tau));
        let b = directed_sum(&tb, tau, db, eb, xb(tau));
        (a, b)
    });
    let mut best = SupResult { value: f64::NEG_INFINITY, tau_star: None, verdict: Verdict::Converged, tail: 0.0 };
    let mut best_rows: Option<(SumResult, SumResult)> = None;
    for (i, (a, b)) in rows.into_iter().enumerate() {
        let tau = tlo + i as i64;
        if a.verdict == Verdict::Diverging || b.verdict == Verdict::Diverging {
            // an infinite factor only counts when the other one is not zero
            let other = if a.verdict == Verdict::Diverging { b.ln } else { a.ln };
            if other > f64::NEG_INFINITY {
                return Ok(SupResult { value: f64::INFINITY, tau_star: Some(tau), verdict: Verdict::Diverging, tail: 1.0 });
            }
            continue;
        }
        let ln = a.ln / spec.p + b.ln / pc + scale;
        let v = ln.exp();
        if v > best.value || best.tau_star.is_none() {
            best.value = v;
            best.tau_star = Some(tau);
            best_rows = Some((a, b));
        }
    }
    if let Some((a, b)) = best_rows {
        best.verdict = a.verdict.worst(b.verdict);
        best.tail = a.tail.max(b.tail);
    }
    Ok(best)
}

/// Evaluate one functional, with the doubled-window stability check when
/// requested. Divergence is reported as an infinite value with its witness.
pub fn eval_functional(spec: &FunctionalSpec, trunc: &Truncation) -> Result<FunctionalReport> {
    spec.validate()?;
    trunc.validate()?;
    let first = sup_once(spec, trunc)?;
    let mut verdict = first.verdict;
    if verdict != Verdict::Diverging && trunc.stability_check {
        let again = sup_once(spec, &trunc.doubled())?;
        if again.verdict == Verdict::Diverging {
            verdict = Verdict::Diverging;
        } else if (!(first.value > 0.0) || ((again.value - first.value) / first.value).abs() >= STABILITY_TOL)
            && first.value != again.value {
                verdict = verdict.worst(Verdict::Inconclusive);
            }
    }
    let value = if verdict == Verdict::Diverging { f64::INFINITY } else { first.value };
    Ok(FunctionalReport {
        functional: spec.name(),
        value,
        tau_star: first.tau_star,
        d_star: matches!(spec.family, Family::MScript | Family::MBb | Family::Frak).then_some(spec.d),
        windows: trunc.into(),
        tail_ratio: first.tail,
        verdict,
        epsilon: matches!(spec.family, Family::MBold | Family::MScript | Family::MPlain | Family::MBb).then_some(spec.epsilon),
    })
}

/// `sup_d` of a level-indexed functional over `d_lo..=d_max`.
fn sup_over_levels(name: String, d_lo: u32, trunc: &Truncation, eval: impl Fn(u32) -> Result<FunctionalReport> + Sync) -> Result<FunctionalReport> {
    let ds: Vec<u32> = (d_lo..=trunc.d_max).collect();
    let reports = par::map_slice(&ds, |&d| eval(d));
    let reports: Vec<FunctionalReport> = reports.into_iter().collect::<Result<_>>()?;
    let mut best: Option<&FunctionalReport> = None;
    let mut verdict = Verdict::Converged;
    for r in &reports {
        if best.is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::invalid("empty level range"))?;
    verdict = verdict.worst(best.verdict);
    let n = reports.len();
    let mut tail_ratio = best.tail_ratio;
    if best.value.is_finite() && n >= 3 && best.d_star == Some(trunc.d_max) {
        // increasing at the last level: geometric growth diverges, decaying
        // increments converge to a limit estimated from their ratio
        let (a, b, c) = (reports[n - 3].value, reports[n - 2].value, best.value);
        let (g1, g2) = (b - a, c - b);
        if c > (1.0 + STABILITY_TOL) * b && g2 >= 0.75 * g1 {
            verdict = Verdict::Diverging;
        } else if g2 > 0.0 {
            let q = if g1 > 0.0 { g2 / g1 } else { 1.0 };
            let rest = if q < 1.0 { g2 * q / (1.0 - q) } else { f64::INFINITY };
            tail_ratio = rest / (c + rest);
            if !(tail_ratio < STABILITY_TOL) {
                verdict = verdict.worst(Verdict::Inconclusive);
            }
        }
    }
    let value = if verdict == Verdict::Diverging { f64::INFINITY } else { best.value };
    Ok(FunctionalReport {
        functional: name,
        value,
        tau_star: best.tau_star,
        d_star: best.d_star,
        windows: trunc.into(),
        tail_ratio,
        verdict,
        epsilon: best.epsilon,
    })
}

/// Sum of component reports; the largest component supplies the witnesses.
fn aggregate(name: &str, parts: &[FunctionalReport], trunc: &Truncation) -> FunctionalReport {
    let value: f64 = parts.iter().map(|r| r.value).sum();
    let verdict = parts.iter().fold(Verdict::Converged, |v, r| v.worst(r.verdict));
    let top = parts.iter().fold(&parts[0], |m, r| if r.value > m.value { r } else { m });
    FunctionalReport {
        functional: name.to_string(),
        value: if verdict == Verdict::Diverging { f64::INFINITY } else { value },
        tau_star: top.tau_star,
        d_star: top.d_star,
        windows: trunc.into(),
        tail_ratio: parts.iter().map(|r| r.tail_ratio).fold(0.0, f64::max),
        verdict,
        epsilon: None,
    }
}

/// An aggregate with its components and, optionally, the aggregate of the
/// earlier sufficient conditions on the same windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    #[serde(flatten)]
    pub aggregate: FunctionalReport,
    pub components: Vec<FunctionalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<PreviousReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreviousReport {
    #[serde(flatten)]
    pub aggregate: FunctionalReport,
    pub components: Vec<FunctionalReport>,
}

impl CriterionReport {
    pub fn value(&self) -> f64 {
        self.aggregate.value
    }

    pub fn verdict(&self) -> Verdict {
        self.aggregate.verdict
    }

    pub fn is_finite(&self) -> bool {
        self.aggregate.value.is_finite()
    }
}

/// Inputs shared by the criteria: operator order, exponent and weights.
#[derive(Clone, Debug)]
pub struct CriteriaInput {
    pub alpha: u32,
    pub p: f64,
    pub side: Side,
    /// `None` on the whole line, `Some(c)` for the operators from `c`.
    pub halfline: Option<f64>,
    /// Also evaluate the earlier sufficient-condition aggregate.
    pub previous: bool,
}

impl CriteriaInput {
    pub fn full_line(alpha: u32, p: f64, side: Side) -> Self {
        CriteriaInput { alpha, p, side, halfline: None, previous: false }
    }

    pub fn half_line(alpha: u32, p: f64, side: Side, c: f64) -> Self {
        CriteriaInput { alpha, p, side, halfline: Some(c), previous: false }
    }

    pub fn with_previous(mut self) -> Self {
        self.previous = true;
        self
    }

    fn spec(&self, family: Family, first: &Arc<Weight>, second: &Arc<Weight>) -> FunctionalSpec {
        FunctionalSpec {
            family,
            side: self.side,
            theta: self.alpha,
            epsilon: 0.0,
            d: 0,
            kappa: 0.0,
            p: self.p,
            first: first.clone(),
            second: second.clone(),
            halfline: self.halfline,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::precondition(format!("p = {} must exceed 1", self.p)));
        }
        if self.alpha == 0 {
            return Err(Error::invalid("α must be at least 1"));
        }
        Ok(())
    }

    fn tag(&self) -> &'static str {
        if self.halfline.is_some() { "~" } else { "" }
    }
}

/// `sup_{d ∈ [d_lo, d_max]} 𝔐(d, κ; σ₁, σ₂)`.
pub fn frak_sup(inp: &CriteriaInput, kappa: f64, s1: &Arc<Weight>, s2: &Arc<Weight>, d_lo: u32, trunc: &Truncation) -> Result<FunctionalReport> {
    let base = inp.spec(Family::Frak, s1, s2);
    let name = format!("{}sup_d>={d_lo} frak(d,kappa={kappa})", inp.tag());
    sup_over_levels(name, d_lo, trunc, |d| eval_functional(&FunctionalSpec { d, kappa, ..base.clone() }, trunc))
}

/// Upper criterion: `𝔠±^α(κ*) = 𝐌±^α(1) + 𝐌±^α(0) + sup_{d∈ℕ} 𝔐(d,κ*;v,u)`,
/// or its half-line form when `inp.halfline` is set.
pub fn criterion_upper(inp: &CriteriaInput, kappa_star: f64, u: &Arc<Weight>, v: &Arc<Weight>, trunc: &Truncation) -> Result<CriterionReport> {
    inp.validate()?;
    let base = inp.spec(Family::MBold, u, v);
    let m1 = eval_functional(&FunctionalSpec { epsilon: 1.0, ..base.clone() }, trunc)?;
    let m0 = eval_functional(&FunctionalSpec { epsilon: 0.0, ..base.clone() }, trunc)?;
    let fr = frak_sup(inp, kappa_star, v, u, 1, trunc)?;
    let name = format!("{}C_frak(kappa*={kappa_star})", inp.tag());
    let comps = vec![m1, m0, fr];
    let agg = aggregate(&name, &comps, trunc);
    let previous = if inp.previous {
        let script = inp.spec(Family::MScript, u, v);
        let name = format!("{}sup_d [M_script(d,1)+M_script(d,0)]", inp.tag());
        let sup = sup_over_levels(name, 1, trunc, |d| {
            let a = eval_functional(&FunctionalSpec { d, kappa: kappa_star, epsilon: 1.0, ..script.clone() }, trunc)?;
            let b = eval_functional(&FunctionalSpec { d, kappa: kappa_star, epsilon: 0.0, ..script.clone() }, trunc)?;
            Ok(aggregate(&format!("M_script(d={d})"), &[a, b], trunc))
        })?;
        let parts = vec![comps[0].clone(), comps[1].clone(), sup];
        Some(PreviousReport { aggregate: aggregate(&format!("{}C_bold(kappa*={kappa_star})", inp.tag()), &parts, trunc), components: parts })
    } else {
        None
    };
    Ok(CriterionReport { aggregate: agg, components: comps, previous })
}

/// Lower criterion: `𝔻(κ_*) = sup_{d∈ℕ₀} 𝔐(d,κ_*;u,w)`, or its half-line form.
pub fn criterion_lower(inp: &CriteriaInput, kappa_low: f64, u: &Arc<Weight>, w: &Arc<Weight>, trunc: &Truncation) -> Result<CriterionReport> {
    inp.validate()?;
    let fr = frak_sup(inp, kappa_low, u, w, 0, trunc)?;
    let name = format!("{}D(kappa_*={kappa_low})", inp.tag());
    let agg = aggregate(&name, std::slice::from_ref(&fr), trunc);
    let previous = if inp.previous {
        // ℂ = M(ε_M) + sup_d 𝕄(d, κ_*, ε_𝕄), each ε minimized over the grid
        let plain = inp.spec(Family::MPlain, w, u);
        let mut best_m: Option<FunctionalReport> = None;
        let mut best_bb: Option<FunctionalReport> = None;
        for &eps in &EPSILON_GRID {
            let m = eval_functional(&FunctionalSpec { epsilon: eps, ..plain.clone() }, trunc)?;
            if best_m.as_ref().is_none_or(|b| m.value < b.value) {
                best_m = Some(m);
            }
            let bb = inp.spec(Family::MBb, w, u);
            let name = format!("{}sup_d M_bb(d,kappa={kappa_low},eps={eps})", inp.tag());
            let s = sup_over_levels(name, 1, trunc, |d| {
                eval_functional(&FunctionalSpec { d, kappa: kappa_low, epsilon: eps, ..bb.clone() }, trunc)
            })?;
            if best_bb.as_ref().is_none_or(|b| s.value < b.value) {
                best_bb = Some(s);
            }
        }
        let parts = vec![best_m.unwrap(), best_bb.unwrap()];
        Some(PreviousReport { aggregate: aggregate(&format!("{}C_bb(kappa_*={kappa_low})", inp.tag()), &parts, trunc), components: parts })
    } else {
        None
    };
    Ok(CriterionReport { aggregate: agg, components: vec![fr], previous })
}

pub fn criterion_full_line(alpha: u32, kappa_star: f64, p: f64, side: Side, u: &Arc<Weight>, v: &Arc<Weight>, trunc: &Truncation) -> Result<CriterionReport> {
    criterion_upper(&CriteriaInput::full_line(alpha, p, side), kappa_star, u, v, trunc)
}

pub fn criterion_half_line(alpha: u32, kappa: f64, c: f64, side: Side, p: f64, u: &Arc<Weight>, v: &Arc<Weight>, trunc: &Truncation) -> Result<CriterionReport> {
    criterion_upper(&CriteriaInput::half_line(alpha, p, side, c), kappa, u, v, trunc)
}

/// Result of the integral form of `𝐌±^θ(ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralFormReport {
    #[serde(with = "inf_as_string")]
    pub value: f64,
    pub tau_star: Option<i64>,
    pub verdict: Verdict,
    /// Largest factor between a unit-cell mass and the midpoint value, for `u` and `v`.
    pub usl_u: f64,
    pub usl_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// `max_r max(ρ, 1/ρ)` with `ρ = ∫_r^{r+1} σ / σ(r + 1/2)` over the scanned cells.
pub fn usl_factor(w: &Weight, lo: i64, hi: i64) -> Result<f64> {
    let vals = par::map_range(lo, hi + 1, |r| -> Result<f64> {
        let m = w.mass(r as f64, r as f64 + 1.0)?;
        let mid = w.value(r as f64 + 0.5);
        let q = m / mid;
        Ok(q.max(1.0 / q))
    });
    vals.into_iter().try_fold(1.0f64, |m, v| Ok(m.max(v?)))
}

/// Integral form of `𝐌±^θ(ε)` (half-line form when `c` is given), for weights
/// satisfying the averaging condition. The averaging factor is checked on the
/// scanned cells and a warning is attached when it exceeds 4.
pub fn integral_form(theta: u32, epsilon: f64, side: Side, u: &Weight, v: &Weight, p: f64, c: Option<f64>, trunc: &Truncation) -> Result<IntegralFormReport> {
    if !(p > 1.0) {
        return Err(Error::precondition("p must exceed 1"));
    }
    if epsilon != 0.0 && epsilon != 1.0 {
        return Err(Error::invalid("the integral form is stated for ε ∈ {0, 1}"));
    }
    trunc.validate()?;
    let once = |t: &Truncation| -> Result<(f64, Option<i64>, Verdict)> {
        let pc = p / (p - 1.0);
        let g = theta as f64 - 1.0;
        let (ea, eb) = (p * g * epsilon, pc * g * (1.0 - epsilon));
        let dir = match side {
            Side::Left => 1i64,
            Side::Right => -1,
        };
        let shift = c.unwrap_or(0.0);
        let (tlo, thi) = match (c, side) {
            (None, _) => (-t.tau_window, t.tau_window),
            (Some(_), Side::Left) => (0, t.tau_window),
            (Some(_), Side::Right) => (-t.tau_window, 0),
        };
        let r = t.series_window;
        // unit cells starting at the base point, integrated with GK15
        let cell_sum = |base: f64, dirn: i64, e: f64, sigma: &Weight, pw: f64, cells: i64| -> [f64; 3] {
            let f = |x: f64| {
                let k = (x - base).abs() + 1.0;
                k.powf(e) * sigma.value(x).powf(pw)
            };
            let mut acc = 0.0;
            let mut marks = [0.0; 3];
            for k in 0..cells {
                let (a, b) = (base + (dirn * k) as f64, base + (dirn * (k + 1)) as f64);
                acc += quad::kronrod15(f, a.min(b), a.max(b));
                if k + 1 == cells / 4 {
                    marks[0] = acc;
                } else if k + 1 == cells / 2 {
                    marks[1] = acc;
                }
            }
            marks[2] = acc;
            marks
        };
        let rows = par::map_range(tlo, thi + 1, |tau| {
            let base = tau as f64 + shift;
            let a = cell_sum(base, dir, ea, u, 1.0, r);
            let b = if c.is_some() {
                let cells = tau.abs();
                let s = cell_sum(base, -dir, eb, v, 1.0 - pc, cells);
                SumResult { ln: s[2].ln(), verdict: Verdict::Converged, tail: 0.0 }
            } else {
                classify(cell_sum(base, -dir, eb, v, 1.0 - pc, r).map(f64::ln))
            };
            (classify(a.map(f64::ln)), b)
        });
        let mut best = (f64::NEG_INFINITY, None, Verdict::Converged);
        for (i, (a, b)) in rows.into_iter().enumerate() {
            let tau = tlo + i as i64;
            if a.verdict == Verdict::Diverging || b.verdict == Verdict::Diverging {
                return Ok((f64::INFINITY, Some(tau), Verdict::Diverging));
            }
            let val = (a.ln / p + b.ln / pc).exp();
            if val > best.0 || best.1.is_none() {
                best = (val, Some(tau), a.verdict.worst(b.verdict));
            }
        }
        Ok(best)
    };
    let (mut value, tau_star, mut verdict) = once(trunc)?;
    if verdict != Verdict::Diverging && trunc.stability_check {
        let (v2, _, ver2) = once(&trunc.doubled())?;
        if ver2 == Verdict::Diverging {
            verdict = Verdict::Diverging;
        } else if value > 0.0 && ((v2 - value) / value).abs() >= STABILITY_TOL {
            verdict = verdict.worst(Verdict::Inconclusive);
        }
    }
    if verdict == Verdict::Diverging {
        value = f64::INFINITY;
    }
    let span = trunc.tau_window + trunc.series_window;
    let usl_u = usl_factor(u, -span, span)?;
    let usl_v = usl_factor(v, -span, span)?;
    let warning = (usl_u > 4.0 || usl_v > 4.0).then(|| format!("averaging condition fails: cell factors {usl_u:.3} (u), {usl_v:.3} (v) exceed 4"));
    Ok(IntegralFormReport { value, tau_star, verdict, usl_u, usl_v, warning })
}

/// Result of the homogeneity reduction for weights whose antiderivatives are
/// homogeneous of degrees `s₁`, `s₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub kappa_opt: f64,
    /// Per-level factor `𝔐̃(d)/𝔐̃(0) = 2^{−dκ} 2^{(d−1)(s₁−s₂)/p}` at the given `κ`.
    pub factors: Vec<f64>,
    /// Ratio between consecutive levels, `2^{κ_opt − κ}`.
    pub step: f64,
}

pub fn homogeneity_reduction(s1: f64, s2: f64, kappa: f64, p: f64, d_max: u32) -> Result<Reduction> {
    if !(p > 0.0) || !s1.is_finite() || !s2.is_finite() || !kappa.is_finite() {
        return Err(Error::invalid("homogeneity degrees, κ and p must be finite with p > 0"));
    }
    let kappa_opt = (s1 - s2) / p;
    let factors = (0..=d_max)
        .map(|d| {
            if d == 0 {
                1.0
            } else {
                let d = d as f64;
                2f64.powf(-d * kappa + (d - 1.0) * kappa_opt)
            }
        })
        .collect();
    Ok(Reduction { kappa_opt, factors, step: 2f64.powf(kappa_opt - kappa) })
}

/// `𝔐(d, κ; σ₁, σ₂)` (half-line form when `c` is given) for `d = 0..=d_max`.
pub fn frak_profile(s1: &Arc<Weight>, s2: &Arc<Weight>, kappa: f64, p: f64, side: Side, c: Option<f64>, trunc: &Truncation) -> Result<Vec<f64>> {
    let ds: Vec<u32> = (0..=trunc.d_max).collect();
    let spec = FunctionalSpec {
        family: Family::Frak,
        side,
        theta: 1,
        epsilon: 0.0,
        d: 0,
        kappa,
        p,
        first: s1.clone(),
        second: s2.clone(),
        halfline: c,
    };
    let t = Truncation { stability_check: false, ..*trunc };
    par::map_slice(&ds, |&d| eval_functional(&FunctionalSpec { d, ..spec.clone() }, &t).map(|r| r.value)).into_iter().collect()
}

/// Interval helper shared with the harness: `Q^{⟨c⟩}_{dτ}`.
pub fn shifted_interval(d: u32, tau: i64, c: f64) -> Interval {
    DyadicIndex::offset(d, tau, c).interval()
}
