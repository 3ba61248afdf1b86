//! Battle–Lemarié scaling functions and wavelets built from `B_n`, and their
//! localized combinations `Φ`, `Ψ` and the generalized `Ψ_{n,a,s;m(k),α(ζ)}`.
//!
//! Infinite expansions (`φ_n`, `ψ_{n,s}`) are kept as truncated coefficient
//! sequences against shifts of `B_n(2^l ·)`. Localized elements are finite
//! sums of the same kind and are also materialized as exact
//! [`PiecewisePoly`]s.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bspline::{self, binomial, MAX_ORDER};
use crate::piecewise::{poly, Dyadic, PiecewisePoly};
use crate::{Error, Result};

/// Default truncation tolerance for the infinite expansions.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Constants of the orthonormalization of `B_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoConstants {
    pub n: usize,
    /// `r_1 < … < r_n` in `(0, 1)`.
    pub roots: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_cap: f64,
    pub rho: Vec<f64>,
}

static CONSTANTS: OnceLock<Vec<OnceLock<std::result::Result<OrthoConstants, Error>>>> = OnceLock::new();

/// Gram symbol `Σ_{|k|≤n} ⟨B_n, B_n(·−k)⟩ z^{k+n}`, lowest degree first.
fn gram_symbol(n: usize) -> Result<Vec<f64>> {
    (-(n as i64)..=n as i64).map(|k| bspline::gram(n, k)).collect()
}

fn find_roots(n: usize) -> Result<Vec<f64>> {
    let p = gram_symbol(n)?;
    let deg = 2 * n;
    let lead = p[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -p[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let val = |x: f64| poly::horner(&p, -x);
    let mut roots = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > 1e-6 || !(-1.0..0.0).contains(&z.re) {
            continue;
        }
        let r0 = -z.re;
        // bracket the sign change around the eigenvalue estimate, then bisect
        let mut w = 1e-9 * r0.max(1e-300);
        let (mut lo, mut hi) = (r0 - w, r0 + w);
        let mut tries = 0;
        while val(lo).signum() == val(hi).signum() {
            w *= 4.0;
            lo = (r0 - w).max(0.0);
            hi = (r0 + w).min(1.0);
            tries += 1;
            if tries > 40 {
                return Err(Error::numeric(format!("no sign change bracketing root estimate {r0} for n={n}")));
            }
        }
        let flo = val(lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if val(mid).signum() == flo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if roots.len() != n || roots.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::numeric(format!(
            "expected {n} roots in (0,1) for order {n}, found {roots:?} among eigenvalues {:?}",
            eig.as_slice()
        )));
    }
    Ok(roots)
}

/// Roots and derived constants for order `n`, computed once and cached.
pub fn euler_constants(n: usize) -> Result<OrthoConstants> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::invalid(format!("order must lie in 1..={MAX_ORDER}, got {n}")));
    }
    let table = CONSTANTS.get_or_init(|| (0..=MAX_ORDER).map(|_| OnceLock::new()).collect());
    table[n]
        .get_or_init(|| {
            let roots = find_roots(n)?;
            let beta = roots.iter().map(|r| 1.0 + r).product::<f64>();
            let prod = roots.iter().product::<f64>();
            let gamma = 2f64.powi(-(n as i32)) * beta * prod;
            let lambda_cap = 2f64.powi(n as i32) * roots.iter().map(|r| 1.0 / r - r).product::<f64>();
            let rho = roots.iter().map(|r| r + 1.0 / r).collect();
            Ok(OrthoConstants { n, roots, beta, gamma, lambda_cap, rho })
        })
        .clone()
}

/// Laurent polynomial `Σ c[i] z^{lo+i}`.
#[derive(Clone, Debug)]
struct Laurent {
    lo: i64,
    c: Vec<f64>,
}

impl Laurent {
    fn one() -> Self {
        Laurent { lo: 0, c: vec![1.0] }
    }

    fn from_terms(terms: &[(i64, f64)]) -> Self {
        let lo = terms.iter().map(|t| t.0).min().unwrap_or(0);
        let hi = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut c = vec![0.0; (hi - lo + 1) as usize];
        for &(e, v) in terms {
            c[(e - lo) as usize] += v;
        }
        Laurent { lo, c }
    }

    /// `Σ_{k=0}^{len-1} q^k z^{step·k}`.
    fn geometric(q: f64, step: i64, len: usize) -> Self {
        let mut t = Vec::with_capacity(len);
        let mut v = 1.0;
        for k in 0..len as i64 {
            t.push((step * k, v));
            v *= q;
        }
        Self::from_terms(&t)
    }

    fn mul(&self, o: &Laurent) -> Laurent {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Laurent { lo: self.lo + o.lo, c }
    }

    fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().for_each(|a| *a *= s);
        self
    }

    fn hi(&self) -> i64 {
        self.lo + self.c.len() as i64 - 1
    }

    fn get(&self, e: i64) -> f64 {
        if e < self.lo || e > self.hi() {
            0.0
        } else {
            self.c[(e - self.lo) as usize]
        }
    }
}

/// `F(x) = Σ_i coeffs[i] · B_n(2^level · x − (first + i))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BSplineSeries {
    pub n: usize,
    pub level: u32,
    pub first: i64,
    pub coeffs: Vec<f64>,
}

impl BSplineSeries {
    pub fn last(&self) -> i64 {
        self.first + self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, j: i64) -> f64 {
        if j < self.first || j > self.last() {
            0.0
        } else {
            self.coeffs[(j - self.first) as usize]
        }
    }

    /// Exact support of the span of the stored shifts.
    pub fn support(&self) -> (Dyadic, Dyadic) {
        let l = self.level;
        (Dyadic::new(self.first, l), Dyadic::new(self.last() + self.n as i64 + 1, l))
    }

    /// `F(x − k / 2^level)`.
    pub fn shifted(&self, k: i64) -> Self {
        BSplineSeries { first: self.first + k, ..self.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        BSplineSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect(), ..self.clone() }
    }

    /// The same function expressed at `level + 1` through the two-scale relation.
    pub fn refine(&self) -> Self {
        let two = bspline::two_scale_coeffs(self.n);
        let mut c = vec![0.0; 2 * self.coeffs.len() + self.n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (k, &t) in two.iter().enumerate() {
                c[2 * i + k] += a * t;
            }
        }
        BSplineSeries { n: self.n, level: self.level + 1, first: 2 * self.first, coeffs: c }
    }

    /// Drop end coefficients whose magnitude is at most `abs_tol`.
    pub fn trimmed(&self, abs_tol: f64) -> Self {
        let lo = self.coeffs.iter().position(|a| a.abs() > abs_tol).unwrap_or(self.coeffs.len());
        let hi = self.coeffs.iter().rposition(|a| a.abs() > abs_tol).map_or(lo, |p| p + 1);
        BSplineSeries { n: self.n, level: self.level, first: self.first + lo as i64, coeffs: self.coeffs[lo..hi].to_vec() }
    }

    /// `⟨F, G⟩` through the Gram values of `B_n`.
    pub fn inner(&self, o: &BSplineSeries) -> Result<f64> {
        if self.n != o.n || self.level != o.level {
            return Err(Error::invalid("series inner product needs equal order and level"));
        }
        let n = self.n as i64;
        let g: Vec<f64> = (0..=n).map(|k| bspline::gram(self.n, k)).collect::<Result<_>>()?;
        let mut s = 0.0;
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ii = self.first + i as i64;
            let lo = (ii - n).max(o.first);
            let hi = (ii + n).min(o.last());
            for j in lo..=hi {
                s += a * o.coeffs[(j - o.first) as usize] * g[(ii - j).unsigned_abs() as usize];
            }
        }
        Ok(s * 2f64.powi(-(self.level as i32)))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let b = bspline::bspline_ref(self.n).expect("order checked at construction");
        let y = x * 2f64.powi(self.level as i32);
        let lo = (y.floor() as i64 - self.n as i64).max(self.first);
        let hi = (y.floor() as i64).min(self.last());
        (lo..=hi).map(|j| self.coeffs[(j - self.first) as usize] * b.eval(y - j as f64)).sum()
    }

    /// Materialize as a piecewise polynomial with one piece per cell.
    pub fn to_piecewise(&self) -> Result<PiecewisePoly> {
        if self.coeffs.is_empty() {
            return Ok(PiecewisePoly::zero());
        }
        let b = bspline::bspline_ref(self.n)?;
        let n = self.n as i64;
        let cells = self.coeffs.len() as i64 + n;
        let l = self.level;
        let breaks = (0..=cells).map(|c| Dyadic::new(self.first + c, l)).collect();
        let pieces = (0..cells)
            .map(|c| {
                let mut acc = vec![0.0; self.n + 1];
                for k in 0..=n {
                    let j = c - k;
                    if j < 0 || j >= self.coeffs.len() as i64 {
                        continue;
                    }
                    poly::add_into(&mut acc, &b.pieces()[k as usize], self.coeffs[j as usize]);
                }
                acc
            })
            .collect();
        PiecewisePoly::new(breaks, pieces)
    }
}

/// A truncated expansion together with its tail bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    pub series: BSplineSeries,
    /// Bound on the ℓ¹ mass of the discarded coefficients.
    pub tail_bound: f64,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 1e-15) {
        return Err(Error::invalid(format!("tolerance {tol} is below what double precision resolves")));
    }
    Ok(())
}

/// Smallest `L` with `Σ_{l≥L} C(l+k−1, k−1) q^l ≤ budget`, and that tail sum.
fn geometric_cutoff(q: f64, k: usize, budget: f64) -> (usize, f64) {
    let mut l = 0usize;
    loop {
        let term = binomial((l + k - 1) as i64, (k - 1) as i64).map_or(f64::INFINITY, |b| b as f64) * q.powi(l as i32);
        let ratio = q * (l + k) as f64 / (l + 1) as f64;
        if ratio < 1.0 {
            let tail = term / (1.0 - ratio);
            if tail <= budget {
                return (l, tail);
            }
        }
        l += 1;
    }
}

/// `φ_n = β_n Σ_{l≥0} c_l B_n(· + l)` with `Σ c_l z^l = Π_j 1/(1 + r_j z)`.
pub fn phi(n: usize, tol: f64) -> Result<TruncatedSeries> {
    check_tol(tol)?;
    let k = euler_constants(n)?;
    let rmax = *k.roots.last().unwrap();
    let (len, tail) = geometric_cutoff(rmax, n, tol / (4.0 * k.beta));
    let mut prod = Laurent::one();
    for &r in &k.roots {
        prod = prod.mul(&Laurent::geometric(-r, 1, len + 1));
    }
    let coeffs: Vec<f64> = (0..=len as i64).rev().map(|l| k.beta * prod.get(l)).collect();
    Ok(TruncatedSeries {
        series: BSplineSeries { n, level: 0, first: -(len as i64), coeffs },
        tail_bound: k.beta * tail,
    })
}

/// `ψ_{n,s}` against `B_n(2· − j)`.
pub fn psi(n: usize, s: i64, tol: f64) -> Result<TruncatedSeries> {
    check_tol(tol)?;
    let k = euler_constants(n)?;
    let rmax = *k.roots.last().unwrap();
    // ℓ¹ size of the finite factors bounds how the truncation error propagates
    let finite = k.gamma
        * 2f64.powi(n as i32 + 1)
        * k.roots.iter().map(|r| 1.0 / r + 1.0).product::<f64>();
    let (len, tail) = geometric_cutoff(rmax, 2 * n, tol / (4.0 * finite));
    // coefficients of z^j multiply B_n(2y + j)
    let mut c = Laurent::from_terms(
        &(0..=n as i64 + 1)
            .map(|kk| {
                let b = binomial(n as i64 + 1, kk).unwrap() as f64;
                (n as i64 - kk, if kk % 2 == 0 { b } else { -b })
            })
            .collect::<Vec<_>>(),
    );
    for &r in &k.roots {
        c = c.mul(&Laurent::from_terms(&[(0, 1.0 / r), (-1, -1.0)]));
        c = c.mul(&Laurent::geometric(-r, -2, len + 1));
        c = c.mul(&Laurent::geometric(-r, 1, len + 1));
    }
    let c = c.scale(k.gamma);
    // B_n(2(y − s) + j) = B_n(2y − (2s − j))
    let first = 2 * s - c.hi();
    let coeffs: Vec<f64> = (0..c.c.len()).map(|i| c.c[c.c.len() - 1 - i]).collect();
    Ok(TruncatedSeries {
        series: BSplineSeries { n, level: 1, first, coeffs }.trimmed(0.0),
        tail_bound: finite * tail,
    })
}

/// The half-integer origin `a ∈ {0, ±1/2}`, stored as `2a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfOrigin(i8);

impl HalfOrigin {
    pub const ZERO: HalfOrigin = HalfOrigin(0);

    pub fn from_twice(two_a: i64) -> Result<Self> {
        match two_a {
            -1..=1 => Ok(HalfOrigin(two_a as i8)),
            _ => Err(Error::invalid(format!("origin a = {two_a}/2 is not one of 0, ±1/2"))),
        }
    }

    pub fn from_f64(a: f64) -> Result<Self> {
        if (a * 2.0).fract() != 0.0 {
            return Err(Error::invalid(format!("origin a = {a} is not one of 0, ±1/2")));
        }
        Self::from_twice((a * 2.0) as i64)
    }

    pub fn twice(self) -> i64 {
        self.0 as i64
    }

    pub fn to_dyadic(self) -> Dyadic {
        Dyadic::half(self.0 as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// `Φ_{n,a} = B_n(· − a)` and the coefficients `α'_κ` of its expansion in
/// shifts of `φ_{n,a}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapitalPhi {
    pub n: usize,
    pub a: HalfOrigin,
    pub func: PiecewisePoly,
    /// `α'_{-k}` for `k = 0..=n`, i.e. the elementary symmetric polynomials
    /// `e_k(r_1, …, r_n)`; `Φ = β^{-1} Σ_k α'_{-k} φ(· + k)`.
    pub alpha_prime: Vec<f64>,
}

fn elementary_symmetric(roots: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; e.len() + 1];
        for (k, &v) in e.iter().enumerate() {
            next[k] += v;
            next[k + 1] += v * r;
        }
        e = next;
    }
    e
}

pub fn capital_phi(n: usize, a: HalfOrigin) -> Result<CapitalPhi> {
    let k = euler_constants(n)?;
    let func = bspline::bspline(n)?.shift(a.to_dyadic())?;
    Ok(CapitalPhi { n, a, func, alpha_prime: elementary_symmetric(&k.roots) })
}

/// The `λ` coefficients of `Π_j [ρ_j(m) − 2 cos(ω/2)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCoeffs {
    pub m: usize,
    /// Half-shift coefficients `μ_κ`, `κ = −m..=m`, of the product written as
    /// `Σ_κ μ_κ e^{iκω/2}`; `μ_κ = (−1)^{|κ|} λ_{|κ|}(m)` with
    /// `λ_{|κ|}(m) = |μ_κ|`.
    pub half_shift: Vec<f64>,
    /// Cosine-expansion coefficients `λ_j`, `j = 0..=m`.
    pub cosine: Vec<f64>,
    /// `Σ_κ μ_κ = Π_j (ρ_j − 2)`.
    pub alternating_sum: f64,
    /// `2^{-m} Λ_m`.
    pub target: f64,
    /// Factor `target / alternating_sum` that rescales the half-shift
    /// coefficients onto the alternating-sum identity.
    pub pin_scale: f64,
}

impl LambdaCoeffs {
    /// `λ_{|κ|}(m)` for `|κ| = 0..=m`.
    pub fn lambda(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.half_shift[self.m + j].abs()).collect()
    }

    /// Half-shift coefficients rescaled so that their plain sum is `2^{-m} Λ_m`.
    pub fn pinned(&self) -> Vec<f64> {
        self.half_shift.iter().map(|c| c * self.pin_scale).collect()
    }

    pub fn pinned_alternating_sum(&self) -> f64 {
        self.pinned().iter().sum()
    }
}

fn rho_product(rho: &[f64]) -> Laurent {
    let mut p = Laurent::one();
    for &r in rho {
        p = p.mul(&Laurent::from_terms(&[(-1, -1.0), (0, r), (1, -1.0)]));
    }
    p
}

/// Expand `Π_j [ρ_j(m) − 2cos(ω/2)]` and check the pinned alternating-sum
/// identity.
pub fn lambda_coeffs(m: usize) -> Result<LambdaCoeffs> {
    let k = euler_constants(m)?;
    let p = rho_product(&k.rho);
    let half_shift: Vec<f64> = (-(m as i64)..=m as i64).map(|e| p.get(e)).collect();
    let cosine = (0..=m)
        .map(|j| if j == 0 { half_shift[m] } else { 2.0 * half_shift[m + j].abs() })
        .collect();
    let alternating_sum: f64 = half_shift.iter().sum();
    let target = 2f64.powi(-(m as i32)) * k.lambda_cap;
    let out = LambdaCoeffs { m, half_shift, cosine, alternating_sum, target, pin_scale: target / alternating_sum };
    let got = out.pinned_alternating_sum();
    if (got - target).abs() > 1e-10 * target.max(1.0) {
        return Err(Error::numeric(format!("pinned alternating sum {got} differs from 2^-m Λ_m = {target}")));
    }
    Ok(out)
}

/// Parameters `(n, a, s, m, 𝕜, ζ, α)` of a localized wavelet family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplineSystemSpec {
    pub n: usize,
    pub a: HalfOrigin,
    pub s: i64,
    pub m: usize,
    pub k_flag: u8,
    pub zeta_flag: u8,
    pub alpha: u32,
}

impl SplineSystemSpec {
    /// The plain system `Ψ_{n,a,s}` (both flags off).
    pub fn plain(n: usize, a: HalfOrigin, s: i64) -> Self {
        SplineSystemSpec { n, a, s, m: 1, k_flag: 0, zeta_flag: 0, alpha: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_flag > 1 || self.zeta_flag > 1 {
            return Err(Error::invalid("flags 𝕜 and ζ must be 0 or 1"));
        }
        if self.n == 0 || self.n > MAX_ORDER || self.m == 0 || self.m > MAX_ORDER {
            return Err(Error::invalid(format!("orders n={} and m={} must lie in 1..={MAX_ORDER}", self.n, self.m)));
        }
        if self.zeta_flag == 1 && self.alpha == 0 {
            return Err(Error::invalid("ζ = 1 needs α ≥ 1"));
        }
        Ok(())
    }

    /// Support predicted for the generalized element, as twice its endpoints.
    pub fn predicted_support_twice(&self) -> (i64, i64) {
        let base = 2 * self.s + self.a.twice();
        let ext = (self.m * self.k_flag as usize) as i64 + (self.alpha * self.zeta_flag as u32) as i64;
        (base - 2 * self.n as i64 - ext, base + 2 * self.n as i64 + 2 + ext)
    }
}

/// A localized element: a finite series against `B_n(2· − j)` and its
/// piecewise form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletElement {
    pub spec: SplineSystemSpec,
    pub series: BSplineSeries,
    pub func: PiecewisePoly,
    pub support: (Dyadic, Dyadic),
}

impl WaveletElement {
    fn from_series(spec: SplineSystemSpec, series: BSplineSeries) -> Result<Self> {
        let series = series.trimmed(0.0);
        let func = series.to_piecewise()?;
        let support = series.support();
        Ok(WaveletElement { spec, series, func, support })
    }

    /// `2^{d/2} F(2^d x − τ)` as a piecewise polynomial.
    pub fn dilate(&self, d: u32, tau: i64) -> Result<PiecewisePoly> {
        self.func.transform(2f64.powf(d as f64 / 2.0), Dyadic::int(tau), d as i32)
    }
}

fn combine(c: &BTreeMap<i64, f64>, taps: &[(i64, f64)]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (&j, &v) in c {
        for &(sh, w) in taps {
            *out.entry(j + sh).or_insert(0.0) += v * w;
        }
    }
    out
}

fn series_from_map(n: usize, map: &BTreeMap<i64, f64>) -> BSplineSeries {
    let first = *map.keys().next().unwrap();
    let last = *map.keys().next_back().unwrap();
    let coeffs = (first..=last).map(|j| map.get(&j).copied().unwrap_or(0.0)).collect();
    BSplineSeries { n, level: 1, first, coeffs }
}

/// Coefficients `c_j` of `Ψ_{n,0,0}(y) = Σ_j c_j B_n(2y − j)`.
fn capital_psi_map(n: usize) -> Result<BTreeMap<i64, f64>> {
    let k = euler_constants(n)?;
    let mu = rho_product(&k.rho);
    let ni = n as i64;
    let mut map = BTreeMap::new();
    for sigma in -ni..=ni {
        for kk in 0..=ni + 1 {
            let b = binomial(ni + 1, kk).unwrap() as f64;
            let sign = if kk % 2 == 0 { 1.0 } else { -1.0 };
            // B_n(2y + (n − k) − σ) = B_n(2y − j) with j = k + σ − n
            *map.entry(kk + sigma - ni).or_insert(0.0) += mu.get(sigma) * sign * b;
        }
    }
    Ok(map)
}

/// `Ψ_{n,a,s}`, given through its Fourier transform
/// `B̂_{n,a}(ω/2)/(2e^{iωs}) Σ_k (−1)^k C(n+1,k) e^{(n−k)iω/2} Π_j [ρ_j − 2cos(ω/2)]`.
pub fn capital_psi(n: usize, a: HalfOrigin, s: i64) -> Result<WaveletElement> {
    generalized_psi(SplineSystemSpec::plain(n, a, s))
}

/// `Ψ_{n,a,s;m(𝕜),α(ζ)}`: `Ψ_{n,a,s}` multiplied in frequency by
/// `Π_j [ρ_j(m) − 2cos(ω/2)]` when `𝕜 = 1` and by the centred `2α`-th
/// half-step difference when `ζ = 1`.
pub fn generalized_psi(spec: SplineSystemSpec) -> Result<WaveletElement> {
    spec.validate()?;
    let mut map = capital_psi_map(spec.n)?;
    if spec.k_flag == 1 {
        let km = euler_constants(spec.m)?;
        let mu = rho_product(&km.rho);
        // Ψ(y + κ/2) = Σ c_j B_n(2y − (j − κ))
        let taps: Vec<(i64, f64)> = (mu.lo..=mu.hi()).map(|kap| (-kap, mu.get(kap))).collect();
        map = combine(&map, &taps);
    }
    if spec.zeta_flag == 1 {
        let al = spec.alpha as i64;
        let taps: Vec<(i64, f64)> = (0..=2 * al)
            .map(|i| {
                let b = binomial(2 * al, i).unwrap() as f64;
                (-(al - i), if i % 2 == 0 { b } else { -b })
            })
            .collect();
        map = combine(&map, &taps);
    }
    let shift = 2 * spec.s + spec.a.twice();
    let series = series_from_map(spec.n, &map).shifted(shift);
    let el = WaveletElement::from_series(spec, series)?;
    let (lo, hi) = spec.predicted_support_twice();
    if el.support != (Dyadic::half(lo), Dyadic::half(hi)) {
        return Err(Error::numeric(format!(
            "support [{}, {}] differs from the predicted [{lo}/2, {hi}/2]",
            el.support.0, el.support.1
        )));
    }
    Ok(el)
}

/// Coefficients `α''_κ`, `κ = −n..=n`, of `Π_j (1 + r_j e^{−iω})(1 − r_j² e^{iω})`.
/// With them `Ψ_{n,0,0} = γ_n^{-1} Σ_κ α''_κ ψ_{n,0}(· + κ)`.
pub fn alpha_second(n: usize) -> Result<Vec<f64>> {
    let k = euler_constants(n)?;
    let mut p = Laurent::one();
    for &r in &k.roots {
        p = p.mul(&Laurent::from_terms(&[(0, 1.0), (-1, r)]));
        p = p.mul(&Laurent::from_terms(&[(0, 1.0), (1, -r * r)]));
    }
    Ok((-(n as i64)..=n as i64).map(|e| p.get(e)).collect())
}

/// Projections `⟨Ψ_{n,a,s}, ψ_{n,a,s}(· + κ)⟩` for `|κ| ≤ radius`.
pub fn psi_projections(n: usize, a: HalfOrigin, s: i64, radius: i64, tol: f64) -> Result<Vec<(i64, f64)>> {
    let big = capital_psi(n, a, s)?;
    let small = psi(n, s, tol)?.series.shifted(a.twice());
    (-radius..=radius).map(|kap| Ok((kap, big.series.inner(&small.shifted(-2 * kap))?))).collect()
}

/// Both routes to the overlap constant `Θ(n*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub n_star: usize,
    pub m_star: usize,
    /// `16 𝐁_{n*} / (γ_{m*} γ_{n*})`.
    pub formula: f64,
    pub b_overlap: f64,
    /// `s̄ = −1 − m* − 4n*` and the inner product it yields.
    pub s_bar_literal: f64,
    pub overlaps_literal: usize,
    pub inner_literal: f64,
    /// The shift that places the two elements one spline width apart, and the
    /// inner product there.
    pub s_bar_single: f64,
    pub overlaps_single: usize,
    pub inner_single: f64,
    /// `inner_single / 𝐁_{n*}`, the product of the two extreme coefficients.
    pub coefficient_product: f64,
}

impl ThetaReport {
    /// Whether the inner-product route reproduces the formula within `tol`
    /// (relative).
    pub fn agrees(&self, tol: f64) -> bool {
        (self.inner_single.abs() - self.formula).abs() <= tol * self.formula
    }
}

fn count_overlaps(a: &BSplineSeries, b: &BSplineSeries) -> usize {
    let n = a.n as i64;
    let mut count = 0;
    for (i, &x) in a.coeffs.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let ii = a.first + i as i64;
        for (j, &y) in b.coeffs.iter().enumerate() {
            if y != 0.0 && (ii - (b.first + j as i64)).abs() <= n {
                count += 1;
            }
        }
    }
    count
}

/// Inner product of `Ψ_{n*,0,s̄;m*(1),α(0)}(·/2 − τ0)` with `Ψ_{n*,0,0}(·/2 − τ0)`
/// for a given `2s̄`. Returns the overlap count and the value.
fn theta_pair(n: usize, m: usize, two_s_bar: i64) -> Result<(usize, f64)> {
    let (s, a) = if two_s_bar % 2 == 0 { (two_s_bar / 2, 0) } else { ((two_s_bar + 1) / 2, -1) };
    let spec = SplineSystemSpec { n, a: HalfOrigin::from_twice(a)?, s, m, k_flag: 1, zeta_flag: 0, alpha: 0 };
    let e1 = generalized_psi(spec)?;
    let e2 = capital_psi(n, HalfOrigin::ZERO, 0)?;
    // ∫ F(x/2) G(x/2) dx = 2 ⟨F, G⟩
    Ok((count_overlaps(&e1.series, &e2.series), 2.0 * e1.series.inner(&e2.series)?))
}

/// Evaluate both routes to `Θ(n*)`.
pub fn theta_report(n_star: usize, m_star: usize) -> Result<ThetaReport> {
    if n_star == 0 || m_star == 0 {
        return Err(Error::invalid("n* and m* must be at least 1"));
    }
    let kn = euler_constants(n_star)?;
    let km = euler_constants(m_star)?;
    let b = bspline::b_intersection(n_star)?;
    let formula = 16.0 * b / (km.gamma * kn.gamma);
    let (n, m) = (n_star as i64, m_star as i64);
    let lit = -1 - m - 4 * n;
    let (overlaps_literal, inner_literal) = theta_pair(n_star, m_star, 2 * lit)?;
    let single = -(1 + m + 4 * n);
    let (overlaps_single, inner_single) = theta_pair(n_star, m_star, single)?;
    Ok(ThetaReport {
        n_star,
        m_star,
        formula,
        b_overlap: b,
        s_bar_literal: lit as f64,
        overlaps_literal,
        inner_literal,
        s_bar_single: single as f64 / 2.0,
        overlaps_single,
        inner_single,
        coefficient_product: inner_single / b,
    })
}

/// `Θ(n*)`, returned only when the inner-product route confirms it to `1e-8`.
pub fn theta_overlap(n_star: usize, m_star: usize) -> Result<f64> {
    let r = theta_report(n_star, m_star)?;
    if r.overlaps_single != 1 {
        return Err(Error::numeric(format!("expected one overlapping spline pair, found {}", r.overlaps_single)));
    }
    if !r.agrees(1e-8) {
        return Err(Error::numeric(format!(
            "Θ formula {} vs inner product {} (shift {}; literal shift {} gives {} with {} overlaps)",
            r.formula, r.inner_single, r.s_bar_single, r.s_bar_literal, r.inner_literal, r.overlaps_literal
        )));
    }
    Ok(r.formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_constants() {
        let k = euler_constants(1).unwrap();
        assert!((k.roots[0] - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((k.beta - (1.0 + k.roots[0])).abs() < 1e-15);
        assert!((k.rho[0] - 4.0).abs() < 1e-13);
        assert!(euler_constants(0).is_err());
    }

    #[test]
    fn phi_leading_coefficient() {
        let p = phi(1, 1e-12).unwrap();
        let k = euler_constants(1).unwrap();
        assert_eq!(*p.series.coeffs.last().unwrap(), k.beta);
        assert!(phi(1, 1e-20).is_err());
    }

    #[test]
    fn lambda_m1() {
        let l = lambda_coeffs(1).unwrap();
        assert!((l.half_shift[0] + 1.0).abs() < 1e-13);
        assert!((l.half_shift[1] - 4.0).abs() < 1e-12);
        assert!((l.alternating_sum - 2.0).abs() < 1e-12);
        assert!((l.cosine[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn capital_psi_support() {
        let e = capital_psi(2, HalfOrigin::ZERO, 0).unwrap();
        assert_eq!(e.support, (Dyadic::int(-2), Dyadic::int(3)));
        let e = capital_psi(1, HalfOrigin::from_twice(1).unwrap(), 2).unwrap();
        assert_eq!(e.support, (Dyadic::half(3), Dyadic::half(9)));
    }

    #[test]
    fn flags_validated() {
        let mut s = SplineSystemSpec::plain(2, HalfOrigin::ZERO, 0);
        s.k_flag = 2;
        assert!(generalized_psi(s).is_err());
        s.k_flag = 0;
        s.zeta_flag = 1;
        assert!(generalized_psi(s).is_err());
        assert!(HalfOrigin::from_f64(0.25).is_err());
    }

    #[test]
    fn refine_preserves_values() {
        let s = BSplineSeries { n: 2, level: 0, first: -1, coeffs: vec![0.5, -1.0, 2.0] };
        let r = s.refine();
        for &x in &[-0.7, 0.1, 0.9, 1.6, 3.2] {
            assert!((s.eval(x) - r.eval(x)).abs() < 1e-14);
        }
    }
}
