//! Weight functions, interval masses and Muckenhoupt-type diagnostics.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::{par, Error, Result};

/// A closed bounded interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// `Q_{dτ} = [τ/2^d, (τ+1)/2^d]`; negative `d` gives intervals longer than 1.
    pub fn dyadic(d: i32, tau: i64) -> Self {
        let h = 2f64.powi(-d);
        Interval { lo: tau as f64 * h, hi: (tau + 1) as f64 * h }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }
}

/// The functional form of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `(1 + |x|)^{−t + δ}`.
    Power { t: f64, delta: f64 },
    /// A positive constant.
    Constant(f64),
    /// `e^{rate·|x|}`.
    Exponential { rate: f64 },
    /// `|x|^ζ`, `ζ > −1`.
    Homogeneous { zeta: f64 },
    /// Linear interpolation of samples, constant beyond the first and last.
    Table { xs: Vec<f64>, ws: Vec<f64> },
}

/// A weight with a cache of computed masses.
pub struct Weight {
    kind: WeightKind,
    cache: RwLock<HashMap<(u64, u64, u64), f64>>,
}

impl Clone for Weight {
    fn clone(&self) -> Self {
        Weight { kind: self.kind.clone(), cache: RwLock::new(HashMap::new()) }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.describe())
    }
}

impl PartialEq for Weight {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

/// `∫_a^b (1+x)^β dx` for `0 ≤ a ≤ b`.
fn power_pos(beta: f64, a: f64, b: f64) -> f64 {
    let l = ((b - a) / (1.0 + a)).ln_1p();
    let g = beta + 1.0;
    if g == 0.0 {
        l
    } else {
        (1.0 + a).powf(g) * (g * l).exp_m1() / g
    }
}

/// `∫_a^b x^ζ dx` for `0 ≤ a ≤ b`; infinite when not integrable at 0.
fn homog_pos(zeta: f64, a: f64, b: f64) -> f64 {
    let g = zeta + 1.0;
    if a == 0.0 {
        if g > 0.0 {
            b.powf(g) / g
        } else {
            f64::INFINITY
        }
    } else if g == 0.0 {
        (b / a).ln()
    } else {
        a.powf(g) * (g * (b / a).ln()).exp_m1() / g
    }
}

/// `∫_a^b e^{k x} dx` for `0 ≤ a ≤ b`.
fn exp_pos(k: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 {
        b - a
    } else {
        (k * a).exp() * (k * (b - a)).exp_m1() / k
    }
}

/// Integrate an even function given by its integral over `[a, b] ⊂ [0, ∞)`.
fn even_integral(lo: f64, hi: f64, pos: impl Fn(f64, f64) -> f64) -> f64 {
    if lo >= 0.0 {
        pos(lo, hi)
    } else if hi <= 0.0 {
        pos(-hi, -lo)
    } else {
        pos(0.0, -lo) + pos(0.0, hi)
    }
}

impl Weight {
    pub fn new(kind: WeightKind) -> Result<Self> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        match &kind {
            WeightKind::Power { t, delta } if !(t.is_finite() && delta.is_finite()) => return bad("power weight needs finite t, delta"),
            WeightKind::Constant(c) if !(*c > 0.0 && c.is_finite()) => return bad("constant weight must be positive"),
            WeightKind::Exponential { rate } if !rate.is_finite() => return bad("exponential rate must be finite"),
            WeightKind::Homogeneous { zeta } if !(*zeta > -1.0 && zeta.is_finite()) => {
                return bad("|x|^ζ is locally integrable only for ζ > −1")
            }
            WeightKind::Table { xs, ws } => {
                if xs.len() < 2 || xs.len() != ws.len() {
                    return bad("table weight needs at least two (x, w) samples");
                }
                if xs.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("table abscissae must be strictly increasing");
                }
                if ws.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return bad("table weights must be positive");
                }
            }
            _ => {}
        }
        Ok(Weight { kind, cache: RwLock::new(HashMap::new()) })
    }

    pub fn power(t: f64, delta: f64) -> Self {
        Self::new(WeightKind::Power { t, delta }).expect("finite parameters")
    }

    pub fn constant(c: f64) -> Self {
        Self::new(WeightKind::Constant(c)).expect("positive constant")
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Parse a descriptor such as `power t=3 delta=0`, `constant 1`,
    /// `exp rate=1`, `abs zeta=0.5` or `table file=w.txt`. Relative table paths
    /// are resolved against `base`.
    pub fn parse(desc: &str, base: Option<&Path>) -> Result<Self> {
        let mut it = desc.split_whitespace();
        let head = it.next().ok_or_else(|| Error::invalid("empty weight descriptor"))?;
        let mut kv = HashMap::new();
        let mut bare = Vec::new();
        for tok in it {
            match tok.split_once('=') {
                Some((k, v)) => {
                    kv.insert(k.to_string(), v.to_string());
                }
                None => bare.push(tok.to_string()),
            }
        }
        let num = |k: &str, default: Option<f64>| -> Result<f64> {
            match kv.get(k) {
                Some(v) => v.parse::<f64>().map_err(|_| Error::invalid(format!("weight parameter {k}={v} is not a number"))),
                None => default.ok_or_else(|| Error::invalid(format!("weight descriptor `{desc}` needs {k}="))),
            }
        };
        let allowed: &[&str] = match head {
            "power" => &["t", "delta"],
            "constant" => &["c"],
            "exp" => &["rate"],
            "abs" => &["zeta"],
            "table" => &["file"],
            _ => &[],
        };
        let max_bare = usize::from(head == "constant");
        if bare.len() > max_bare {
            return Err(Error::invalid(format!("unexpected token `{}` in weight descriptor `{desc}`", bare[max_bare])));
        }
        if let Some(k) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown parameter `{k}` in weight descriptor `{desc}`")));
        }
        let kind = match head {
            "power" => WeightKind::Power { t: num("t", None)?, delta: num("delta", Some(0.0))? },
            "constant" => {
                let c = match bare.first() {
                    Some(v) => v.parse().map_err(|_| Error::invalid(format!("constant weight value `{v}`")))?,
                    None => num("c", Some(1.0))?,
                };
                WeightKind::Constant(c)
            }
            "exp" => WeightKind::Exponential { rate: num("rate", Some(1.0))? },
            "abs" => WeightKind::Homogeneous { zeta: num("zeta", None)? },
            "table" => {
                let file = kv.get("file").ok_or_else(|| Error::invalid("table weight needs file="))?;
                let path = match base {
                    Some(b) if Path::new(file).is_relative() => b.join(file),
                    _ => Path::new(file).to_path_buf(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::invalid(format!("cannot read weight table {}: {e}", path.display())))?;
                let (xs, ws) = parse_table(&text)?;
                WeightKind::Table { xs, ws }
            }
            other => return Err(Error::invalid(format!("unknown weight kind `{other}`"))),
        };
        Self::new(kind)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            WeightKind::Power { t, delta } => format!("power t={t} delta={delta}"),
            WeightKind::Constant(c) => format!("constant {c}"),
            WeightKind::Exponential { rate } => format!("exp rate={rate}"),
            WeightKind::Homogeneous { zeta } => format!("abs zeta={zeta}"),
            WeightKind::Table { xs, .. } => format!("table ({} samples)", xs.len()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            WeightKind::Power { t, delta } => (1.0 + x.abs()).powf(delta - t),
            WeightKind::Constant(c) => *c,
            WeightKind::Exponential { rate } => (rate * x.abs()).exp(),
            WeightKind::Homogeneous { zeta } => x.abs().powf(*zeta),
            WeightKind::Table { xs, ws } => table_value(xs, ws, x),
        }
    }

    /// `∫_lo^hi w^e`; `+∞` when the power is not integrable.
    pub fn mass_pow(&self, lo: f64, hi: f64, e: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("weight mass needs a bounded interval, got [{lo}, {hi}]")));
        }
        if lo == hi {
            return Ok(0.0);
        }
        let key = (lo.to_bits(), hi.to_bits(), e.to_bits());
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = match &self.kind {
            WeightKind::Power { t, delta } => {
                let beta = (delta - t) * e;
                even_integral(lo, hi, |a, b| power_pos(beta, a, b))
            }
            WeightKind::Constant(c) => c.powf(e) * (hi - lo),
            WeightKind::Exponential { rate } => even_integral(lo, hi, |a, b| exp_pos(rate * e, a, b)),
            WeightKind::Homogeneous { zeta } => even_integral(lo, hi, |a, b| homog_pos(zeta * e, a, b)),
            WeightKind::Table { xs, ws } => table_mass(xs, ws, lo, hi, e)?,
        };
        if v.is_nan() {
            return Err(Error::numeric(format!("weight mass on [{lo}, {hi}] is NaN")));
        }
        self.cache.write().unwrap().insert(key, v);
        Ok(v)
    }

    /// `w(Q) = ∫_Q w`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        self.mass_pow(lo, hi, 1.0)
    }

    pub fn mass_of(&self, q: Interval) -> Result<f64> {
        self.mass(q.lo, q.hi)
    }

    /// Essential infimum of `w` on `[lo, hi]`.
    pub fn ess_inf(&self, lo: f64, hi: f64) -> f64 {
        let nearest = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        let farthest = lo.abs().max(hi.abs());
        let radial = |increasing: bool| self.value(if increasing { nearest } else { farthest });
        match &self.kind {
            WeightKind::Power { t, delta } => radial(delta - t >= 0.0),
            WeightKind::Constant(c) => *c,
            WeightKind::Exponential { rate } => radial(*rate >= 0.0),
            WeightKind::Homogeneous { zeta } => radial(*zeta >= 0.0),
            WeightKind::Table { xs, ws } => {
                let mut m = table_value(xs, ws, lo).min(table_value(xs, ws, hi));
                for (x, w) in xs.iter().zip(ws) {
                    if *x > lo && *x < hi {
                        m = m.min(*w);
                    }
                }
                m
            }
        }
    }

    /// `A_ρ[w(Q)]`, with the essential-infimum form at `ρ = 1`.
    pub fn muckenhoupt_on(&self, q: Interval, rho: f64) -> Result<f64> {
        let len = q.len();
        let avg = self.mass_of(q)? / len;
        if rho == 1.0 {
            let inf = self.ess_inf(q.lo, q.hi);
            return Ok(if inf > 0.0 { avg / inf } else { f64::INFINITY });
        }
        let e = -1.0 / (rho - 1.0);
        let dual = self.mass_pow(q.lo, q.hi, e)? / len;
        Ok(avg * dual.powf(rho - 1.0))
    }
}

fn parse_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.parse().ok()).ok_or_else(|| Error::invalid(format!("weight table line {}: `{line}`", i + 1)))
        };
        xs.push(parse(it.next())?);
        ws.push(parse(it.next())?);
    }
    Ok((xs, ws))
}

fn table_value(xs: &[f64], ws: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ws[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ws[n - 1];
    }
    let k = xs.partition_point(|&b| b <= x);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ws[k - 1] + t * (ws[k] - ws[k - 1])
}

fn table_mass(xs: &[f64], ws: &[f64], lo: f64, hi: f64, e: f64) -> Result<f64> {
    let mut cuts = vec![lo];
    cuts.extend(xs.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    let mut s = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (table_value(xs, ws, a), table_value(xs, ws, b));
        s += if e == 1.0 {
            0.5 * (fa + fb) * (b - a)
        } else if fa == fb {
            fa.powf(e) * (b - a)
        } else {
            // w is linear on the cell: ∫ w^e = (fb^{e+1} − fa^{e+1}) / ((e+1) slope)
            let slope = (fb - fa) / (b - a);
            if e == -1.0 {
                (fb / fa).ln() / slope
            } else {
                (fb.powf(e + 1.0) - fa.powf(e + 1.0)) / ((e + 1.0) * slope)
            }
        };
    }
    Ok(s)
}

/// Which dyadic intervals a Muckenhoupt scan visits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub d_min: i32,
    pub d_max: i32,
    /// Intervals with `|τ| ≤ 2^d · extent` are visited at level `d`.
    pub extent: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { d_min: 0, d_max: 8, extent: 20.0 }
    }
}

impl ScanSpec {
    pub fn intervals(&self, local: bool) -> Vec<Interval> {
        let d_min = if local { self.d_min.max(0) } else { self.d_min };
        let mut v = Vec::new();
        for d in d_min..=self.d_max {
            let r = ((2f64.powi(d) * self.extent).floor() as i64).max(1);
            for tau in -r..=r {
                v.push(Interval::dyadic(d, tau));
            }
        }
        v
    }
}

/// A scan-based lower estimate of a supremum, with the interval attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEstimate {
    pub value: f64,
    pub witness: Interval,
    pub infinite: bool,
}

fn scan_max(items: &[Interval], f: impl Fn(&Interval) -> Result<f64> + Sync + Send) -> Result<ScanEstimate> {
    let vals = par::map_slice(items, |q| f(q));
    let mut best: Option<ScanEstimate> = None;
    for (q, v) in items.iter().zip(vals) {
        let v = v?;
        if best.is_none_or(|b| v > b.value) {
            best = Some(ScanEstimate { value: v, witness: *q, infinite: v.is_infinite() });
        }
    }
    best.ok_or_else(|| Error::invalid("empty scan"))
}

/// `max_Q A_ρ[w(Q)]` over the scanned intervals (only `|Q| ≤ 1` when `local`).
pub fn muckenhoupt_constant(w: &Weight, rho: f64, local: bool, scan: &ScanSpec) -> Result<ScanEstimate> {
    if !(rho >= 1.0) {
        return Err(Error::invalid("ρ must be at least 1"));
    }
    scan_max(&scan.intervals(local), |q| w.muckenhoupt_on(*q, rho))
}

/// A bracket `[lo, hi]` for `r_w = inf{ρ ≥ 1 : w ∈ A_ρ^loc}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwBracket {
    pub lo: f64,
    pub hi: f64,
}

/// Bisection on `ρ` over local scans. A scan counts as finite when no interval
/// is a `+∞` witness and the estimate stays below `cap`.
pub fn estimate_r_w(w: &Weight, scan: &ScanSpec, rho_max: f64, cap: f64) -> Result<RwBracket> {
    let finite = |rho: f64| -> Result<bool> {
        let e = muckenhoupt_constant(w, rho, true, scan)?;
        Ok(!e.infinite && e.value <= cap)
    };
    if finite(1.0)? {
        return Ok(RwBracket { lo: 1.0, hi: 1.0 });
    }
    if !finite(rho_max)? {
        return Err(Error::numeric(format!("no ρ ≤ {rho_max} passes the local Muckenhoupt scan")));
    }
    let (mut lo, mut hi) = (1.0, rho_max);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if finite(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RwBracket { lo, hi })
}

/// Empirical doubling constants over nested pairs `(F, B)` with `F ⊂ B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    /// `max (|F|/|B|)^ρ · w(B)/w(F)`.
    pub c_i: f64,
    pub worst_i: Option<(Interval, Interval)>,
    /// `max (w(F)/w(B)) · (|B|/|F|)^{ρ*}`.
    pub c_ii: f64,
    pub worst_ii: Option<(Interval, Interval)>,
}

pub fn doubling_check(w: &Weight, rho: f64, rho_star: f64, pairs: &[(Interval, Interval)]) -> Result<DoublingReport> {
    if let Some((f, b)) = pairs.iter().find(|(f, b)| !b.contains(f)) {
        return Err(Error::invalid(format!("[{}, {}] is not inside [{}, {}]", f.lo, f.hi, b.lo, b.hi)));
    }
    let vals = par::map_slice(pairs, |(f, b)| -> Result<(f64, f64)> {
        let (wf, wb) = (w.mass_of(*f)?, w.mass_of(*b)?);
        let r = f.len() / b.len();
        Ok((r.powf(rho) * wb / wf, (wf / wb) * r.powf(-rho_star)))
    });
    let mut rep = DoublingReport { c_i: 0.0, worst_i: None, c_ii: 0.0, worst_ii: None };
    for (pair, v) in pairs.iter().zip(vals) {
        let (a, b) = v?;
        if a > rep.c_i {
            rep.c_i = a;
            rep.worst_i = Some(*pair);
        }
        if b > rep.c_ii {
            rep.c_ii = b;
            rep.worst_ii = Some(*pair);
        }
    }
    Ok(rep)
}

/// Dyadic pairs `F ⊂ B` with `B = Q_{dτ}` inside `[−extent, extent]`, `d ∈ d_range`,
/// and `F` a dyadic child up to `depth` levels below.
pub fn nested_dyadic_pairs(extent: f64, d_range: (i32, i32), depth: i32) -> Vec<(Interval, Interval)> {
    let mut out = Vec::new();
    for d in d_range.0..=d_range.1 {
        let h = 2f64.powi(-d);
        let r = (extent / h).floor() as i64;
        for tau in -r..r {
            let b = Interval::dyadic(d, tau);
            for k in 1..=depth {
                let m = 1i64 << k;
                for j in 0..m {
                    out.push((Interval::dyadic(d + k, tau * m + j), b));
                }
            }
        }
    }
    out
}

/// Smallest `c` with `w(Q_t) ≤ exp(c t/s) w(Q_s)` over the supplied
/// concentric pairs `(Q_s, Q_t)`.
pub fn exp_doubling_constant(w: &Weight, pairs: &[(Interval, Interval)]) -> Result<f64> {
    let mut c = f64::NEG_INFINITY;
    for (qs, qt) in pairs {
        let ratio = w.mass_of(*qt)? / w.mass_of(*qs)?;
        c = c.max(ratio.ln() * qs.len() / qt.len());
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_masses() {
        assert_eq!(Weight::constant(1.0).mass(0.0, 1.0).unwrap(), 1.0);
        let w = Weight::power(2.0, 0.0);
        assert!((w.mass(0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((w.mass(-1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let a = w.mass(0.3, 0.7).unwrap();
        assert_eq!(a.to_bits(), w.mass(0.3, 0.7).unwrap().to_bits());
        let h = Weight::new(WeightKind::Homogeneous { zeta: 0.5 }).unwrap();
        assert!((h.mass(0.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(h.mass_pow(0.0, 1.0, -3.0).unwrap().is_infinite());
    }

    #[test]
    fn parse_descriptors() {
        let w = Weight::parse("power t=3 delta=0", None).unwrap();
        assert_eq!(*w.kind(), WeightKind::Power { t: 3.0, delta: 0.0 });
        assert_eq!(*Weight::parse("constant 2", None).unwrap().kind(), WeightKind::Constant(2.0));
        assert!(Weight::parse("power", None).is_err());
        assert!(Weight::parse("gaussian s=1", None).is_err());
        assert!(Weight::parse("constant -1", None).is_err());
    }

    #[test]
    fn table_weight_is_piecewise_linear() {
        let w = Weight::new(WeightKind::Table { xs: vec![0.0, 1.0, 2.0], ws: vec![1.0, 3.0, 3.0] }).unwrap();
        assert_eq!(w.value(0.5), 2.0);
        assert!((w.mass(0.0, 2.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(w.value(-4.0), 1.0);
        // ∫_0^1 (1+2x)^{-1} dx = ln(3)/2
        assert!((w.mass_pow(0.0, 1.0, -1.0).unwrap() - 3f64.ln() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_weight_is_a1() {
        let w = Weight::constant(1.0);
        for rho in [1.0, 1.5, 2.0, 4.0] {
            let e = muckenhoupt_constant(&w, rho, true, &ScanSpec { d_min: 0, d_max: 3, extent: 4.0 }).unwrap();
            assert!((e.value - 1.0).abs() < 1e-14);
        }
        assert!(muckenhoupt_constant(&w, 0.5, true, &ScanSpec::default()).is_err());
    }

    #[test]
    fn doubling_of_constant() {
        let w = Weight::constant(1.0);
        let pairs = nested_dyadic_pairs(2.0, (0, 1), 2);
        let r = doubling_check(&w, 1.0, 1.0, &pairs).unwrap();
        assert!((r.c_i - 1.0).abs() < 1e-15);
        let bad = [(Interval::new(0.0, 2.0), Interval::new(0.0, 1.0))];
        assert!(doubling_check(&w, 1.0, 1.0, &bad).is_err());
    }
}
