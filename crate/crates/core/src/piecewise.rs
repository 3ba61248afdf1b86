//! Piecewise polynomials on dyadic breakpoints.
//!
//! Breakpoints are exact dyadic rationals, so half-integer shifts and dilations
//! by powers of two never round. Each piece is stored in the normalized local
//! variable `u = (x - b_i) / (b_{i+1} - b_i)` on `[0, 1]`. Dilating a function
//! therefore only moves breakpoints and leaves coefficients alone.
//!
//! A function may carry polynomial tails to the left of its first breakpoint
//! and to the right of its last one. Tails appear as images of the one-sided
//! integration operators and use the unnormalized variable `t = x - b`, where
//! `b` is the breakpoint they attach to.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MAX_LOG2DEN: u32 = 62;

/// A dyadic rational `num / 2^log2den` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(i64, u32)", into = "(i64, u32)")]
pub struct Dyadic {
    num: i64,
    log2den: u32,
}

impl From<(i64, u32)> for Dyadic {
    fn from((num, log2den): (i64, u32)) -> Self {
        Dyadic::new(num, log2den)
    }
}

impl From<Dyadic> for (i64, u32) {
    fn from(d: Dyadic) -> Self {
        (d.num, d.log2den)
    }
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, log2den: 0 };

    pub fn new(mut num: i64, mut log2den: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        while log2den > 0 && num % 2 == 0 {
            num /= 2;
            log2den -= 1;
        }
        Dyadic { num, log2den }
    }

    pub fn int(n: i64) -> Self {
        Dyadic { num: n, log2den: 0 }
    }

    /// `n / 2`.
    pub fn half(n: i64) -> Self {
        Dyadic::new(n, 1)
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn log2den(self) -> u32 {
        self.log2den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.log2den) as f64
    }

    /// Exact conversion of a finite double whose denominator is a power of two
    /// no larger than `2^62`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let mut k = 0u32;
        let mut y = x;
        while y.fract() != 0.0 {
            if k == MAX_LOG2DEN {
                return None;
            }
            y *= 2.0;
            k += 1;
        }
        if y.abs() >= 9.0e18 {
            return None;
        }
        Some(Dyadic::new(y as i64, k))
    }

    fn wide(self, l: u32) -> i128 {
        (self.num as i128) << (l - self.log2den)
    }

    fn from_wide(v: i128, l: u32) -> Option<Self> {
        let mut v = v;
        let mut l = l;
        while l > 0 && v % 2 == 0 {
            v /= 2;
            l -= 1;
        }
        if v == 0 {
            return Some(Self::ZERO);
        }
        i64::try_from(v).ok().map(|num| Dyadic { num, log2den: l })
    }

    pub fn checked_add(self, o: Dyadic) -> Option<Self> {
        let l = self.log2den.max(o.log2den);
        Self::from_wide(self.wide(l) + o.wide(l), l)
    }

    pub fn checked_sub(self, o: Dyadic) -> Option<Self> {
        self.checked_add(-o)
    }

    /// `self * 2^k`.
    pub fn mul_pow2(self, k: i32) -> Option<Self> {
        if self.num == 0 {
            return Some(Self::ZERO);
        }
        if k >= 0 {
            let k = k as u32;
            if self.log2den >= k {
                Some(Dyadic::new(self.num, self.log2den - k))
            } else {
                let sh = k - self.log2den;
                if sh >= 63 {
                    return None;
                }
                self.num.checked_mul(1i64 << sh).map(Dyadic::int)
            }
        } else {
            let l = self.log2den + k.unsigned_abs();
            (l <= MAX_LOG2DEN).then(|| Dyadic::new(self.num, l))
        }
    }

    pub fn floor(self) -> i64 {
        self.num >> self.log2den
    }

    pub fn ceil(self) -> i64 {
        -((-self.num) >> self.log2den)
    }
}

impl std::ops::Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, log2den: self.log2den }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, o: &Self) -> Ordering {
        let l = self.log2den.max(o.log2den);
        self.wide(l).cmp(&o.wide(l))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log2den == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.log2den)
        }
    }
}

fn overflow() -> Error {
    Error::invalid("breakpoint arithmetic leaves the dyadic range")
}

/// Dense polynomial helpers on coefficient slices, lowest degree first.
pub(crate) mod poly {
    pub fn horner(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// Coefficients of `c(alpha + beta * u)` in `u`.
    pub fn compose_affine(c: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
        let mut out = c.to_vec();
        if alpha != 0.0 {
            let n = out.len();
            for i in 0..n {
                for j in (i..n.saturating_sub(1)).rev() {
                    out[j] += alpha * out[j + 1];
                }
            }
        }
        if beta != 1.0 {
            let mut s = 1.0;
            for a in out.iter_mut() {
                *a *= s;
                s *= beta;
            }
        }
        out
    }

    pub fn add_into(acc: &mut Vec<f64>, c: &[f64], w: f64) {
        if acc.len() < c.len() {
            acc.resize(c.len(), 0.0);
        }
        for (a, &b) in acc.iter_mut().zip(c) {
            *a += w * b;
        }
    }

    /// `∫_0^1 a(u) b(u) du`.
    pub fn product_integral01(a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                s += x * y / (i + j + 1) as f64;
            }
        }
        s
    }

    pub fn derivative(c: &[f64]) -> Vec<f64> {
        c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(c: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(c.len() + 1);
        out.push(0.0);
        out.extend(c.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
        out
    }

    pub fn is_zero(c: &[f64]) -> bool {
        c.iter().all(|&a| a == 0.0)
    }
}

/// A piecewise polynomial with dyadic breakpoints and optional polynomial tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct PiecewisePoly {
    breaks: Vec<Dyadic>,
    xs: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    left_tail: Option<Vec<f64>>,
    right_tail: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    breakpoints: Vec<Dyadic>,
    pieces: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left_tail: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right_tail: Option<Vec<f64>>,
}

impl TryFrom<Repr> for PiecewisePoly {
    type Error = Error;
    fn try_from(r: Repr) -> Result<Self> {
        PiecewisePoly::new(r.breakpoints, r.pieces)?.with_tails(r.left_tail, r.right_tail)
    }
}

impl From<PiecewisePoly> for Repr {
    fn from(p: PiecewisePoly) -> Self {
        Repr {
            breakpoints: p.breaks,
            pieces: p.pieces,
            left_tail: p.left_tail,
            right_tail: p.right_tail,
        }
    }
}

/// Which part of the real line a query interval falls into.
enum Region<'a> {
    Zero,
    Piece(usize),
    Left(&'a [f64]),
    Right(&'a [f64]),
}

impl PiecewisePoly {
    pub fn zero() -> Self {
        PiecewisePoly { breaks: vec![], xs: vec![], pieces: vec![], left_tail: None, right_tail: None }
    }

    /// Build from strictly increasing breakpoints and one coefficient vector per
    /// interval, each in the normalized local variable.
    pub fn new(breaks: Vec<Dyadic>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.is_empty() && pieces.is_empty() {
            return Ok(Self::zero());
        }
        if breaks.len() != pieces.len() + 1 {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} pieces, got {}",
                breaks.len(),
                breaks.len().saturating_sub(1),
                pieces.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if pieces.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coefficient"));
        }
        let xs = breaks.iter().map(|b| b.to_f64()).collect();
        Ok(PiecewisePoly { breaks, xs, pieces, left_tail: None, right_tail: None })
    }

    /// Attach tails. Tails that are identically zero are dropped.
    pub fn with_tails(mut self, left: Option<Vec<f64>>, right: Option<Vec<f64>>) -> Result<Self> {
        let clean = |t: Option<Vec<f64>>| t.filter(|c| !poly::is_zero(c));
        let (left, right) = (clean(left), clean(right));
        if self.breaks.is_empty() && (left.is_some() || right.is_some()) {
            return Err(Error::invalid("tails need at least one breakpoint"));
        }
        self.left_tail = left;
        self.right_tail = right;
        Ok(self)
    }

    /// Indicator of `[a, b)`.
    pub fn indicator(a: Dyadic, b: Dyadic) -> Result<Self> {
        Self::new(vec![a, b], vec![vec![1.0]])
    }

    pub fn breakpoints(&self) -> &[Dyadic] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn left_tail(&self) -> Option<&[f64]> {
        self.left_tail.as_deref()
    }

    pub fn right_tail(&self) -> Option<&[f64]> {
        self.right_tail.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.left_tail.is_none()
            && self.right_tail.is_none()
            && self.pieces.iter().all(|c| poly::is_zero(c))
    }

    pub fn is_compact(&self) -> bool {
        self.left_tail.is_none() && self.right_tail.is_none()
    }

    /// Highest stored degree over pieces and tails.
    pub fn degree(&self) -> usize {
        self.pieces
            .iter()
            .chain(self.left_tail.iter())
            .chain(self.right_tail.iter())
            .map(|c| c.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// First and last breakpoint, if any.
    pub fn support(&self) -> Option<(Dyadic, Dyadic)> {
        Some((*self.breaks.first()?, *self.breaks.last()?))
    }

    /// Support as doubles, with infinite ends where a tail is present.
    pub fn support_f64(&self) -> Option<(f64, f64)> {
        let (a, b) = self.support()?;
        let lo = if self.left_tail.is_some() { f64::NEG_INFINITY } else { a.to_f64() };
        let hi = if self.right_tail.is_some() { f64::INFINITY } else { b.to_f64() };
        Some((lo, hi))
    }

    /// Value at `x`, right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        if self.xs.is_empty() {
            return 0.0;
        }
        let k = self.xs.partition_point(|&b| b <= x);
        if k == 0 {
            return self.left_tail.as_ref().map_or(0.0, |t| poly::horner(t, x - self.xs[0]));
        }
        if k == self.xs.len() {
            let last = self.xs[k - 1];
            return self.right_tail.as_ref().map_or(0.0, |t| poly::horner(t, x - last));
        }
        let (a, b) = (self.xs[k - 1], self.xs[k]);
        poly::horner(&self.pieces[k - 1], (x - a) / (b - a))
    }

    fn region(&self, a: Dyadic, b: Dyadic) -> Region<'_> {
        if self.breaks.is_empty() {
            return Region::Zero;
        }
        let first = self.breaks[0];
        let last = *self.breaks.last().unwrap();
        if b <= first {
            return self.left_tail.as_deref().map_or(Region::Zero, Region::Left);
        }
        if a >= last {
            return self.right_tail.as_deref().map_or(Region::Zero, Region::Right);
        }
        let k = self.breaks.partition_point(|x| *x <= a);
        Region::Piece(k - 1)
    }

    /// Polynomial of `self` on `[a, b]` in the normalized variable of that
    /// interval. `[a, b]` must not straddle a breakpoint.
    fn restrict(&self, a: Dyadic, b: Dyadic) -> Vec<f64> {
        let (af, bf) = (a.to_f64(), b.to_f64());
        match self.region(a, b) {
            Region::Zero => vec![],
            Region::Piece(i) => {
                let (x0, x1) = (self.xs[i], self.xs[i + 1]);
                let h = x1 - x0;
                poly::compose_affine(&self.pieces[i], (af - x0) / h, (bf - af) / h)
            }
            Region::Left(t) => poly::compose_affine(t, af - self.xs[0], bf - af),
            Region::Right(t) => poly::compose_affine(t, af - *self.xs.last().unwrap(), bf - af),
        }
    }

    /// `Σ w_i f_i`, computed on the union of all breakpoints in one pass.
    pub fn linear_combination(terms: &[(f64, &PiecewisePoly)]) -> Result<Self> {
        let mut all: Vec<Dyadic> = terms.iter().flat_map(|(_, f)| f.breaks.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        if all.is_empty() {
            return Ok(Self::zero());
        }
        let mut acc: Vec<Vec<f64>> = vec![vec![]; all.len() - 1];
        let mut left: Option<Vec<f64>> = None;
        let mut right: Option<Vec<f64>> = None;
        let first = all[0];
        let last = *all.last().unwrap();
        for &(w, f) in terms {
            if w == 0.0 || f.breaks.is_empty() {
                continue;
            }
            let fa = f.breaks[0];
            let fb = *f.breaks.last().unwrap();
            let lo = if f.left_tail.is_some() { 0 } else { all.binary_search(&fa).unwrap() };
            let hi = if f.right_tail.is_some() { all.len() - 1 } else { all.binary_search(&fb).unwrap() };
            for j in lo..hi {
                let r = f.restrict(all[j], all[j + 1]);
                poly::add_into(&mut acc[j], &r, w);
            }
            if let Some(t) = &f.left_tail {
                let shifted = poly::compose_affine(t, (first.checked_sub(fa).ok_or_else(overflow)?).to_f64(), 1.0);
                poly::add_into(left.get_or_insert_with(Vec::new), &shifted, w);
            }
            if let Some(t) = &f.right_tail {
                let shifted = poly::compose_affine(t, (last.checked_sub(fb).ok_or_else(overflow)?).to_f64(), 1.0);
                poly::add_into(right.get_or_insert_with(Vec::new), &shifted, w);
            }
        }
        for c in acc.iter_mut() {
            if c.is_empty() {
                c.push(0.0);
            }
        }
        Self::new(all, acc)?.with_tails(left, right)
    }

    pub fn add(&self, o: &PiecewisePoly) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (1.0, o)])
    }

    pub fn sub(&self, o: &PiecewisePoly) -> Result<Self> {
        Self::linear_combination(&[(1.0, self), (-1.0, o)])
    }

    pub fn scaled(&self, c: f64) -> Self {
        let sc = |v: &Vec<f64>| v.iter().map(|a| a * c).collect::<Vec<_>>();
        let mut out = self.clone();
        out.pieces = self.pieces.iter().map(sc).collect();
        out.left_tail = self.left_tail.as_ref().map(sc).filter(|t| !poly::is_zero(t));
        out.right_tail = self.right_tail.as_ref().map(sc).filter(|t| !poly::is_zero(t));
        out
    }

    /// `scale · f(2^dilation_log2 · x − shift)`.
    pub fn transform(&self, scale: f64, shift: Dyadic, dilation_log2: i32) -> Result<Self> {
        let breaks = self
            .breaks
            .iter()
            .map(|b| b.checked_add(shift).and_then(|y| y.mul_pow2(-dilation_log2)).ok_or_else(overflow))
            .collect::<Result<Vec<_>>>()?;
        let pieces = self.pieces.iter().map(|c| c.iter().map(|a| a * scale).collect()).collect();
        let dil = 2f64.powi(dilation_log2);
        let tail = |t: &Vec<f64>| {
            let mut s = scale;
            t.iter()
                .map(|a| {
                    let v = a * s;
                    s *= dil;
                    v
                })
                .collect::<Vec<_>>()
        };
        let (l, r) = (self.left_tail.as_ref().map(tail), self.right_tail.as_ref().map(tail));
        Self::new(breaks, pieces)?.with_tails(l, r)
    }

    /// `f(x − h)`.
    pub fn shift(&self, h: Dyadic) -> Result<Self> {
        self.transform(1.0, h, 0)
    }

    /// `f(−x)`.
    pub fn reflect(&self) -> Self {
        let breaks: Vec<Dyadic> = self.breaks.iter().rev().map(|&b| -b).collect();
        let xs = breaks.iter().map(|b| b.to_f64()).collect();
        let pieces = self.pieces.iter().rev().map(|c| poly::compose_affine(c, 1.0, -1.0)).collect();
        let flip = |t: &Vec<f64>| poly::compose_affine(t, 0.0, -1.0);
        PiecewisePoly {
            breaks,
            xs,
            pieces,
            left_tail: self.right_tail.as_ref().map(flip),
            right_tail: self.left_tail.as_ref().map(flip),
        }
    }

    /// Piecewise derivative; jumps at breakpoints are ignored.
    pub fn derivative(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let h = self.xs[i + 1] - self.xs[i];
                let mut d: Vec<f64> = poly::derivative(c).into_iter().map(|a| a / h).collect();
                if d.is_empty() {
                    d.push(0.0);
                }
                d
            })
            .collect();
        let tail = |t: &Vec<f64>| Some(poly::derivative(t)).filter(|d| !d.is_empty() && !poly::is_zero(d));
        PiecewisePoly {
            breaks: self.breaks.clone(),
            xs: self.xs.clone(),
            pieces,
            left_tail: self.left_tail.as_ref().and_then(tail),
            right_tail: self.right_tail.as_ref().and_then(tail),
        }
    }

    /// `F(x) = ∫_{-∞}^x f`, zero left of the support. After the support `F`
    /// continues as a polynomial tail (a constant when `f` is compact).
    pub fn antiderivative(&self) -> Result<Self> {
        if self.left_tail.is_some() {
            return Err(Error::precondition("antiderivative from -inf of a function with a left tail diverges"));
        }
        let mut acc = 0.0;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, c) in self.pieces.iter().enumerate() {
            let h = self.xs[i + 1] - self.xs[i];
            let mut p: Vec<f64> = poly::integral(c).into_iter().map(|a| a * h).collect();
            p[0] = acc;
            acc += p[1..].iter().sum::<f64>();
            pieces.push(p);
        }
        let right = match &self.right_tail {
            Some(t) => {
                let mut q = poly::integral(t);
                q[0] = acc;
                Some(q)
            }
            None => Some(vec![acc]),
        };
        Self::new(self.breaks.clone(), pieces)?.with_tails(None, right)
    }

    /// Antiderivative vanishing at `base`, which must lie at or left of the
    /// support (or be `-inf`).
    pub fn antiderivative_from(&self, base: f64) -> Result<Self> {
        if let Some((a, _)) = self.support() {
            if base > a.to_f64() && !self.is_zero() {
                return Err(Error::precondition(format!("base {base} lies right of the support start {a}")));
            }
        }
        self.antiderivative()
    }

    /// Convolution with the indicator of `[0, 1)`.
    pub fn convolve_box(&self) -> Result<Self> {
        let f = self.antiderivative()?;
        f.sub(&f.shift(Dyadic::int(1))?)
    }

    /// `∫ f(x) q((x − a)/(b − a)) dx` over `[a, b]`.
    pub fn integrate_against(&self, a: Dyadic, b: Dyadic, q: &[f64]) -> f64 {
        self.integrate_against_many(a, b, std::slice::from_ref(&q.to_vec()))[0]
    }

    /// [`integrate_against`](Self::integrate_against) for several test
    /// polynomials on the same interval.
    pub fn integrate_against_many(&self, a: Dyadic, b: Dyadic, qs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; qs.len()];
        if self.breaks.is_empty() || a >= b {
            return out;
        }
        let (af, bf) = (a.to_f64(), b.to_f64());
        let h = bf - af;
        let lo = self.breaks.partition_point(|x| *x <= a);
        let hi = self.breaks.partition_point(|x| *x < b);
        let mut cuts = Vec::with_capacity(hi.saturating_sub(lo) + 2);
        cuts.push(a);
        cuts.extend_from_slice(&self.breaks[lo..hi]);
        cuts.push(b);
        for w in cuts.windows(2) {
            let p = self.restrict(w[0], w[1]);
            if p.is_empty() {
                continue;
            }
            let (c, e) = (w[0].to_f64(), w[1].to_f64());
            for (o, q) in out.iter_mut().zip(qs) {
                let qq = poly::compose_affine(q, (c - af) / h, (e - c) / h);
                *o += (e - c) * poly::product_integral01(&p, &qq);
            }
        }
        out
    }

    /// `∫ f g` over the common support.
    pub fn inner(&self, g: &PiecewisePoly) -> Result<f64> {
        let (Some((fa, fb)), Some((ga, gb))) = (self.support(), g.support()) else {
            return Ok(0.0);
        };
        if (self.left_tail.is_some() && g.left_tail.is_some()) || (self.right_tail.is_some() && g.right_tail.is_some()) {
            return Err(Error::precondition("inner product of two functions with tails on the same side"));
        }
        let lo = match (self.left_tail.is_some(), g.left_tail.is_some()) {
            (true, _) => ga,
            (_, true) => fa,
            _ => fa.max(ga),
        };
        let hi = match (self.right_tail.is_some(), g.right_tail.is_some()) {
            (true, _) => gb,
            (_, true) => fb,
            _ => fb.min(gb),
        };
        if lo >= hi {
            return Ok(0.0);
        }
        let mut cuts: Vec<Dyadic> = self
            .breaks
            .iter()
            .chain(g.breaks.iter())
            .copied()
            .filter(|x| *x > lo && *x < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_unstable();
        cuts.dedup();
        let mut s = 0.0;
        for w in cuts.windows(2) {
            let p = self.restrict(w[0], w[1]);
            if p.is_empty() {
                continue;
            }
            let q = g.restrict(w[0], w[1]);
            s += (w[1].to_f64() - w[0].to_f64()) * poly::product_integral01(&p, &q);
        }
        Ok(s)
    }

    /// `∫ f`.
    pub fn integral(&self) -> Result<f64> {
        if !self.is_compact() {
            return Err(Error::precondition("integral of a function with a polynomial tail"));
        }
        Ok(self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, c)| (self.xs[i + 1] - self.xs[i]) * c.iter().enumerate().map(|(k, a)| a / (k + 1) as f64).sum::<f64>())
            .sum())
    }

    /// Largest coefficient magnitude over pieces and tails.
    pub fn coefficient_scale(&self) -> f64 {
        self.pieces
            .iter()
            .chain(self.left_tail.iter())
            .chain(self.right_tail.iter())
            .flatten()
            .fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// Drop polynomial tails whose coefficients are all below
    /// `rel_tol · coefficient_scale()`, keeping every piece.
    pub fn trim_tails(&self, rel_tol: f64) -> Self {
        let thr = rel_tol * self.coefficient_scale();
        let keep = |t: &Vec<f64>| t.iter().any(|a| a.abs() > thr);
        let mut out = self.clone();
        out.left_tail = self.left_tail.clone().filter(keep);
        out.right_tail = self.right_tail.clone().filter(keep);
        if out.pieces.iter().all(|c| c.iter().all(|a| *a == 0.0)) && out.left_tail.is_none() && out.right_tail.is_none() {
            return Self::zero();
        }
        out
    }

    /// Drop tails and end pieces whose coefficients are all below
    /// `rel_tol · coefficient_scale()`. Interior pieces are kept as they are.
    pub fn trim(&self, rel_tol: f64) -> Self {
        let thr = rel_tol * self.coefficient_scale();
        let small = |c: &[f64]| c.iter().all(|a| a.abs() <= thr);
        let left = self.left_tail.clone().filter(|t| !small(t));
        let right = self.right_tail.clone().filter(|t| !small(t));
        let mut lo = 0;
        let mut hi = self.pieces.len();
        if left.is_none() {
            while lo < hi && small(&self.pieces[lo]) {
                lo += 1;
            }
        }
        if right.is_none() {
            while hi > lo && small(&self.pieces[hi - 1]) {
                hi -= 1;
            }
        }
        if lo == hi && left.is_none() && right.is_none() {
            return Self::zero();
        }
        PiecewisePoly {
            breaks: self.breaks[lo..=hi].to_vec(),
            xs: self.xs[lo..=hi].to_vec(),
            pieces: self.pieces[lo..hi].to_vec(),
            left_tail: left,
            right_tail: right,
        }
    }
}
