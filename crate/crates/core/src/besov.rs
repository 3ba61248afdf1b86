//! Dyadic grids, wavelet coefficients and the sequence norms `b^s_{pq}(w)`.
//!
//! The coefficients are `λ_{0τ} = ⟨f, Φ_τ⟩` and `λ_{dτ} = 2^{d/2}⟨f, Ψ_{(d−1)τ}⟩`
//! with `Ψ_{dτ} = 2^{d/2} Ψ(2^d · − τ)` and `Ψ = Ψ_{n,a,s;…}/Λ_n`. Every inner
//! product reduces to moments `⟨f, B_n(2^d · − i)⟩`, which are exact for
//! piecewise polynomial `f`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bspline;
use crate::par;
use crate::piecewise::{Dyadic, PiecewisePoly};
use crate::wavelet::{self, HalfOrigin, SplineSystemSpec};
use crate::weights::{estimate_r_w, Interval, RwBracket, ScanSpec, Weight};
use crate::{Error, Result};

/// Distance covered past the compact part of a function with a polynomial
/// tail when level-0 coefficients are collected.
pub const TAIL_EXTENT: i64 = 64;

/// `Q^{⟨c⟩}_{dτ} = [(τ + c)/2^d, (τ + c + 1)/2^d]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub d: u32,
    pub tau: i64,
    pub c: f64,
}

impl DyadicIndex {
    pub fn new(d: u32, tau: i64) -> Self {
        DyadicIndex { d, tau, c: 0.0 }
    }

    pub fn offset(d: u32, tau: i64, c: f64) -> Self {
        DyadicIndex { d, tau, c }
    }

    pub fn interval(&self) -> Interval {
        let h = 2f64.powi(-(self.d as i32));
        let lo = (self.tau as f64 + self.c) * h;
        Interval::new(lo, lo + h)
    }
}

/// Sparse wavelet coefficients `(d, τ) → λ_{dτ}` with their scan windows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "SeqRepr", into = "SeqRepr")]
pub struct SeqCoeffs {
    entries: BTreeMap<(u32, i64), f64>,
    d_max: u32,
    windows: Vec<(i64, i64)>,
}

#[derive(Serialize, Deserialize)]
struct Triplet {
    d: u32,
    tau: i64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct SeqRepr {
    d_max: u32,
    #[serde(default)]
    windows: Vec<(i64, i64)>,
    entries: Vec<Triplet>,
}

impl From<SeqRepr> for SeqCoeffs {
    fn from(r: SeqRepr) -> Self {
        let mut s = SeqCoeffs::new(r.d_max);
        s.windows = r.windows;
        for t in r.entries {
            s.set(t.d, t.tau, t.value);
        }
        s
    }
}

impl From<SeqCoeffs> for SeqRepr {
    fn from(s: SeqCoeffs) -> Self {
        let entries = s.entries.iter().map(|(&(d, tau), &value)| Triplet { d, tau, value }).collect();
        SeqRepr { d_max: s.d_max, windows: s.windows, entries }
    }
}

impl SeqCoeffs {
    pub fn new(d_max: u32) -> Self {
        SeqCoeffs { entries: BTreeMap::new(), d_max, windows: Vec::new() }
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// Scanned `τ` range per level; empty when the sequence was built by hand.
    pub fn windows(&self) -> &[(i64, i64)] {
        &self.windows
    }

    /// Store a value; zeros are not kept and levels above `d_max` raise it.
    pub fn set(&mut self, d: u32, tau: i64, v: f64) {
        self.d_max = self.d_max.max(d);
        if v == 0.0 {
            self.entries.remove(&(d, tau));
        } else {
            self.entries.insert((d, tau), v);
        }
    }

    pub fn get(&self, d: u32, tau: i64) -> f64 {
        self.entries.get(&(d, tau)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, i64, f64)> + '_ {
        self.entries.iter().map(|(&(d, t), &v)| (d, t, v))
    }

    pub fn level(&self, d: u32) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.entries.range((d, i64::MIN)..=(d, i64::MAX)).map(|(&(_, t), &v)| (t, v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = SeqCoeffs { entries: BTreeMap::new(), d_max: self.d_max, windows: self.windows.clone() };
        for (d, t, v) in self.iter() {
            out.set(d, t, c * v);
        }
        out
    }
}

/// `p`, `q`, `s` and the weight of a space `b^s_{pq}(w)`.
#[derive(Clone, Debug)]
pub struct SpaceParams {
    pub p: f64,
    /// `f64::INFINITY` selects the supremum over levels.
    pub q: f64,
    pub s: f64,
    pub weight: Arc<Weight>,
}

impl SpaceParams {
    pub fn new(p: f64, q: f64, s: f64, weight: Arc<Weight>) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!("p = {p} must be positive and finite")));
        }
        if !(q > 0.0) {
            return Err(Error::invalid(format!("q = {q} must be positive")));
        }
        if !s.is_finite() {
            return Err(Error::invalid("s must be finite"));
        }
        Ok(SpaceParams { p, q, s, weight })
    }

    /// Conjugate exponent; criteria need `p > 1`.
    pub fn p_conj(&self) -> Result<f64> {
        if self.p <= 1.0 {
            return Err(Error::precondition(format!("p = {} must exceed 1 here", self.p)));
        }
        Ok(self.p / (self.p - 1.0))
    }
}

/// Real-line range over which coefficients are collected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

fn compact_part(f: &PiecewisePoly) -> Option<(Dyadic, Dyadic)> {
    f.support()
}

/// The window used when none is given: the compact part of `f`, extended by
/// [`TAIL_EXTENT`] on each side that carries a tail.
pub fn default_window(f: &PiecewisePoly) -> Option<Window> {
    let (a, b) = compact_part(f)?;
    let lo = a.to_f64() - if f.left_tail().is_some() { TAIL_EXTENT as f64 } else { 0.0 };
    let hi = b.to_f64() + if f.right_tail().is_some() { TAIL_EXTENT as f64 } else { 0.0 };
    Some(Window { lo, hi })
}

/// `⟨f, B_n(2^d · − i)⟩` for `i` in `lo..=hi`.
fn moments(f: &PiecewisePoly, n: usize, d: u32, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let pieces = bspline::bspline_ref(n)?.pieces().to_vec();
    let ni = n as i64;
    // cell c holds ∫ f(x) P_k(2^d x − c) over [c, c+1]/2^d for every piece k
    let cells = par::map_range(lo, hi + ni + 1, |c| f.integrate_against_many(Dyadic::new(c, d), Dyadic::new(c + 1, d), &pieces));
    Ok((0..=(hi - lo))
        .map(|i| (0..=n).map(|k| cells[i as usize + k][k]).sum())
        .collect())
}

/// Wavelet coefficients of `f` at levels `0..=d_max`.
///
/// Functions with polynomial tails are accepted when the tails have degree at
/// most `n`: wavelets annihilate them, so levels `d ≥ 1` only see the compact
/// part, while level 0 is truncated to the window.
pub fn wavelet_coeffs(f: &PiecewisePoly, spec: &SplineSystemSpec, d_max: u32, window: Option<Window>) -> Result<SeqCoeffs> {
    spec.validate()?;
    if d_max > 30 {
        return Err(Error::invalid("d_max above 30 is not supported"));
    }
    let mut out = SeqCoeffs::new(d_max);
    let Some((a, b)) = compact_part(f) else {
        out.windows = vec![(0, -1); d_max as usize + 1];
        return Ok(out);
    };
    let n = spec.n;
    for t in [f.left_tail(), f.right_tail()].into_iter().flatten() {
        if t.len() > n + 1 && t[n + 1..].iter().any(|&c| c != 0.0) {
            return Err(Error::precondition(format!("tail degree {} exceeds the wavelet order n = {n}", t.len() - 1)));
        }
    }
    let win = window.or_else(|| default_window(f)).unwrap();
    if win.lo > a.to_f64() || win.hi < b.to_f64() {
        return Err(Error::precondition(format!(
            "window [{}, {}] does not cover the support [{}, {}] of f",
            win.lo,
            win.hi,
            a.to_f64(),
            b.to_f64()
        )));
    }
    let ni = n as i64;
    let shift_a = spec.a.to_f64();

    // level 0: Φ_τ = B_n(· − a − τ) meets (lo, hi) for these τ
    let t_lo = (win.lo - shift_a - ni as f64 - 1.0).floor() as i64 + 1;
    let t_hi = (win.hi - shift_a).ceil() as i64 - 1;
    let two_a = spec.a.twice();
    let vals = if two_a % 2 == 0 {
        let off = two_a / 2;
        moments(f, n, 0, t_lo + off, t_hi + off)?
    } else {
        // half-integer origin: work at level 1 with the refined B-spline
        let two = bspline::two_scale_coeffs(n);
        let m = moments(f, n, 1, 2 * t_lo + two_a, 2 * t_hi + two_a + ni + 1)?;
        (0..=(t_hi - t_lo))
            .map(|i| two.iter().enumerate().map(|(k, c)| c * m[2 * i as usize + k]).sum())
            .collect()
    };
    for (i, v) in vals.into_iter().enumerate() {
        out.set(0, t_lo + i as i64, v);
    }
    let mut windows = vec![(t_lo, t_hi)];

    let el = wavelet::generalized_psi(*spec)?;
    let lam = wavelet::euler_constants(n)?.lambda_cap;
    let series = &el.series;
    let (first, last) = (series.first, series.last());
    for d in 1..=d_max {
        // Ψ(2^{d−1}x − τ) = Σ_j c_j B_n(2^d x − 2τ − j), supported on
        // [(2τ + first), (2τ + last + n + 1)] / 2^d
        let scale = 2f64.powi(d as i32);
        let (lo_x, hi_x) = (a.to_f64(), b.to_f64());
        let tau_lo = ((lo_x * scale - (last + ni + 1) as f64) / 2.0).floor() as i64 + 1;
        let tau_hi = ((hi_x * scale - first as f64) / 2.0).ceil() as i64 - 1;
        windows.push((tau_lo, tau_hi));
        if tau_hi < tau_lo {
            continue;
        }
        let m = moments(f, n, d, 2 * tau_lo + first, 2 * tau_hi + last)?;
        let norm = 2f64.powf(d as f64 / 2.0) * 2f64.powf((d as f64 - 1.0) / 2.0) / lam;
        let vals = par::map_range(tau_lo, tau_hi + 1, |tau| {
            let base = (2 * (tau - tau_lo)) as usize;
            norm * series.coeffs.iter().enumerate().map(|(j, c)| c * m[base + j]).sum::<f64>()
        });
        for (i, v) in vals.into_iter().enumerate() {
            out.set(d, tau_lo + i as i64, v);
        }
    }
    out.windows = windows;
    Ok(out)
}

/// Per-level pieces of a sequence norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBreakdown {
    pub value: f64,
    /// `(Σ_τ |λ_{0τ}|^p w(Q_{0τ}))^{1/p}` followed by
    /// `2^{ds} (Σ_τ |λ_{dτ}|^p w(Q_{(d−1)τ}))^{1/p}` for `d = 1..=d_max`.
    pub levels: Vec<f64>,
}

/// `‖λ‖_{b^s_{pq}(w)}` with its level profile.
pub fn seq_norm_breakdown(lam: &SeqCoeffs, sp: &SpaceParams) -> Result<NormBreakdown> {
    let mut levels = Vec::with_capacity(lam.d_max as usize + 1);
    for d in 0..=lam.d_max {
        let qd = if d == 0 { 0 } else { d - 1 };
        let mut acc = 0.0;
        for (tau, v) in lam.level(d) {
            let m = sp.weight.mass_of(DyadicIndex::new(qd, tau).interval())?;
            acc += v.abs().powf(sp.p) * m;
        }
        let lp = acc.powf(1.0 / sp.p);
        levels.push(if d == 0 { lp } else { 2f64.powf(d as f64 * sp.s) * lp });
    }
    let head = levels[0];
    let rest = &levels[1..];
    let tail = if sp.q.is_infinite() {
        rest.iter().fold(0.0f64, |m, &x| m.max(x))
    } else {
        rest.iter().map(|x| x.powf(sp.q)).sum::<f64>().powf(1.0 / sp.q)
    };
    Ok(NormBreakdown { value: head + tail, levels })
}

pub fn seq_norm(lam: &SeqCoeffs, sp: &SpaceParams) -> Result<f64> {
    Ok(seq_norm_breakdown(lam, sp)?.value)
}

/// Smallest `n` allowed by the order condition for `b^s_{pq}(w)` given `r_w`.
pub fn min_order(s: f64, p: f64, r_w: f64) -> i64 {
    let sigma = r_w / p.min(r_w) - 2.0 + r_w;
    let m = [0.0, s.floor() + 1.0, ((r_w - 1.0) / p - s).floor() + 1.0, (sigma - s).floor()]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    m as i64 + 1
}

/// Options of [`besov_norm_estimate`].
#[derive(Clone, Debug)]
pub struct EstimateOptions {
    pub a: HalfOrigin,
    /// Sum the norms over the origins `0, ±1/2` instead of using `a` alone.
    pub all_origins: bool,
    pub window: Option<Window>,
    /// Known `r_w`; estimated from a local Muckenhoupt scan when absent.
    pub r_w: Option<f64>,
    pub scan: ScanSpec,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            a: HalfOrigin::ZERO,
            all_origins: false,
            window: None,
            r_w: None,
            scan: ScanSpec { d_min: 0, d_max: 6, extent: 16.0 },
        }
    }
}

/// A Besov norm estimate with its truncation diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub n: usize,
    pub d_max: u32,
    pub min_n: i64,
    pub r_w: RwBracket,
    pub levels: Vec<f64>,
    /// Share of the level-`d_max` term in the level part of the norm.
    pub tail_ratio: f64,
}

/// `r_w` bracket of a weight, scanned with `scan`.
pub fn r_w_bracket(w: &Weight, scan: &ScanSpec) -> Result<RwBracket> {
    estimate_r_w(w, scan, 64.0, 1e6)
}

/// Check the order condition for `n` and return the smallest admissible order.
pub fn check_order(sp: &SpaceParams, n: usize, r_w: RwBracket) -> Result<i64> {
    let min_n = min_order(sp.s, sp.p, r_w.hi);
    if (n as i64) < min_n {
        return Err(Error::precondition(format!(
            "wavelet order n = {n} is too small for s = {}, p = {}, r_w ≤ {}; need n ≥ {min_n}",
            sp.s, sp.p, r_w.hi
        )));
    }
    Ok(min_n)
}

/// `‖f‖_{B^{s,w}_{pq}}` through the sequence norm of its wavelet coefficients.
pub fn besov_norm_estimate(f: &PiecewisePoly, sp: &SpaceParams, n: usize, d_max: u32, opts: &EstimateOptions) -> Result<NormEstimate> {
    if d_max < 1 {
        return Err(Error::invalid("d_max must be at least 1"));
    }
    let r_w = match opts.r_w {
        Some(r) => RwBracket { lo: r, hi: r },
        None => r_w_bracket(&sp.weight, &opts.scan)?,
    };
    let min_n = check_order(sp, n, r_w)?;
    let origins: Vec<HalfOrigin> = if opts.all_origins {
        [0, -1, 1].into_iter().map(|t| HalfOrigin::from_twice(t).unwrap()).collect()
    } else {
        vec![opts.a]
    };
    let mut value = 0.0;
    let mut levels = vec![0.0; d_max as usize + 1];
    for a in origins {
        let lam = wavelet_coeffs(f, &SplineSystemSpec::plain(n, a, 0), d_max, opts.window)?;
        let b = seq_norm_breakdown(&lam, sp)?;
        value += b.value;
        for (acc, l) in levels.iter_mut().zip(&b.levels) {
            *acc += l;
        }
    }
    let rest = &levels[1..];
    let last = *rest.last().unwrap();
    let tail_ratio = if sp.q.is_infinite() {
        let m = rest.iter().fold(0.0f64, |m, &x| m.max(x));
        if m == 0.0 { 0.0 } else { last / m }
    } else {
        let tot: f64 = rest.iter().map(|x| x.powf(sp.q)).sum();
        if tot == 0.0 { 0.0 } else { last.powf(sp.q) / tot }
    };
    Ok(NormEstimate { value, n, d_max, min_n, r_w, levels, tail_ratio })
}
