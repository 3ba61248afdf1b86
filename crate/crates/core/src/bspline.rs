//! Cardinal B-splines and the integer combinatorics around them.
//!
//! `B_0` is the indicator of `[0, 1)` and `B_n = B_{n-1} * B_0`, supported on
//! `[0, n + 1]`.

use std::sync::OnceLock;

use crate::piecewise::{Dyadic, PiecewisePoly};
use crate::{Error, Result};

/// Largest order for which B-splines are built.
pub const MAX_ORDER: usize = 10;

static SPLINES: OnceLock<Vec<PiecewisePoly>> = OnceLock::new();
static GRAMS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();

fn table() -> &'static [PiecewisePoly] {
    SPLINES.get_or_init(|| {
        let mut v = vec![PiecewisePoly::indicator(Dyadic::int(0), Dyadic::int(1)).expect("indicator")];
        for n in 1..=MAX_ORDER {
            let next = v[n - 1].convolve_box().expect("convolution of a compact spline");
            v.push(next);
        }
        v
    })
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::invalid(format!("spline order {n} exceeds the maximum {MAX_ORDER}")));
    }
    Ok(())
}

/// Borrow the cached `B_n`.
pub fn bspline_ref(n: usize) -> Result<&'static PiecewisePoly> {
    check_order(n)?;
    Ok(&table()[n])
}

/// `B_n` as a piecewise polynomial.
pub fn bspline(n: usize) -> Result<PiecewisePoly> {
    bspline_ref(n).cloned()
}

/// `B_n(x)`.
pub fn bspline_value(n: usize, x: f64) -> Result<f64> {
    Ok(bspline_ref(n)?.eval(x))
}

/// Generalized binomial coefficient `C(n, k)` for integer `n` and `k ≥ 0`.
/// Returns `None` on overflow.
pub fn binomial(n: i64, k: i64) -> Option<i128> {
    if k < 0 {
        return Some(0);
    }
    if n >= 0 && k > n {
        return Some(0);
    }
    let k = if n >= 0 { k.min(n - k) } else { k };
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128)?;
        acc /= (i + 1) as i128;
    }
    Some(acc)
}

/// Coefficients `c_l` with `B_n^{(k)} = Σ_l c_l B_{n-k}(· − l)`, `l = 0..=k`.
pub fn derivative_expansion(n: usize, k: usize) -> Result<Vec<i64>> {
    if k > n {
        return Err(Error::invalid(format!("derivative order {k} exceeds spline order {n}")));
    }
    Ok((0..=k)
        .map(|l| {
            let c = binomial(k as i64, l as i64).expect("small binomial") as i64;
            if l % 2 == 0 { c } else { -c }
        })
        .collect())
}

/// `⟨B_n, B_n(· − offset)⟩`.
pub fn gram(n: usize, offset: i64) -> Result<f64> {
    check_order(n)?;
    let g = GRAMS.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|m| {
                let b = &table()[m];
                (0..=m as i64)
                    .map(|k| b.inner(&b.shift(Dyadic::int(k)).expect("shift")).expect("compact"))
                    .collect()
            })
            .collect()
    });
    let k = offset.unsigned_abs() as usize;
    Ok(if k > n { 0.0 } else { g[n][k] })
}

/// `𝐁_n = ∫ B_n(t) B_n(t − n) dt`, the one-unit overlap of two B-splines.
pub fn b_intersection(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("the overlap constant needs n ≥ 1"));
    }
    gram(n, n as i64)
}

/// Two-scale coefficients: `B_n(x) = Σ_k c_k B_n(2x − k)`.
pub fn two_scale_coeffs(n: usize) -> Vec<f64> {
    let s = 2f64.powi(-(n as i32));
    (0..=n as i64 + 1).map(|k| s * binomial(n as i64 + 1, k).unwrap() as f64).collect()
}

/// The coefficients `A_r(α)` of the difference-operator inversion.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffCoeffs {
    pub alpha: u32,
    exact: Vec<i128>,
}

impl DiffCoeffs {
    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn get(&self, r: usize) -> Option<f64> {
        self.exact.get(r).map(|&v| v as f64)
    }

    pub fn exact(&self, r: usize) -> Option<i128> {
        self.exact.get(r).copied()
    }

    pub fn values(&self) -> Vec<f64> {
        self.exact.iter().map(|&v| v as f64).collect()
    }
}

/// `A_0 = 1`, `A_r = Σ_{j=1}^{min(r,α)} (−1)^{j−1} C(α, j) A_{r−j}` for `r ≤ r_max`.
pub fn difference_coeffs(alpha: u32, r_max: usize) -> Result<DiffCoeffs> {
    if alpha == 0 {
        return Err(Error::invalid("operator order must be positive"));
    }
    let mut a: Vec<i128> = Vec::with_capacity(r_max + 1);
    a.push(1);
    for r in 1..=r_max {
        let mut acc: i128 = 0;
        for j in 1..=r.min(alpha as usize) {
            let c = binomial(alpha as i64, j as i64).unwrap();
            let term = c.checked_mul(a[r - j]).ok_or_else(|| Error::numeric("A_r overflows exact integers"))?;
            acc = if j % 2 == 1 { acc.checked_add(term) } else { acc.checked_sub(term) }
                .ok_or_else(|| Error::numeric("A_r overflows exact integers"))?;
        }
        a.push(acc);
    }
    Ok(DiffCoeffs { alpha, exact: a })
}

/// Both sides of `C(r+s, k) = Σ_j C(r, j) C(s, k−j)`; returns the common value.
pub fn chu_vandermonde(r: i64, s: i64, k: i64) -> Result<i128> {
    if k < 0 {
        return Err(Error::invalid("k must be non-negative"));
    }
    let ovf = || Error::numeric("binomial overflow");
    let lhs = binomial(r + s, k).ok_or_else(ovf)?;
    let mut rhs: i128 = 0;
    for j in 0..=k {
        let t = binomial(r, j).ok_or_else(ovf)?.checked_mul(binomial(s, k - j).ok_or_else(ovf)?).ok_or_else(ovf)?;
        rhs = rhs.checked_add(t).ok_or_else(ovf)?;
    }
    if lhs != rhs {
        return Err(Error::numeric(format!("Chu–Vandermonde mismatch: {lhs} vs {rhs}")));
    }
    Ok(lhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        let b0 = bspline(0).unwrap();
        assert_eq!(b0.eval(0.5), 1.0);
        assert_eq!(b0.eval(1.0), 0.0);
        assert_eq!(bspline_value(1, 1.0).unwrap(), 1.0);
        let b3 = bspline(3).unwrap();
        assert_eq!(b3.support(), Some((Dyadic::int(0), Dyadic::int(4))));
        assert_eq!(b3.degree(), 3);
        assert!(bspline(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn cubic_values() {
        // B_3(1) = 1/6, B_3(2) = 2/3
        assert!((bspline_value(3, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((bspline_value(3, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_expansions() {
        assert_eq!(derivative_expansion(1, 1).unwrap(), vec![1, -1]);
        assert_eq!(derivative_expansion(3, 2).unwrap(), vec![1, -2, 1]);
        assert_eq!(derivative_expansion(3, 0).unwrap(), vec![1]);
        assert!(derivative_expansion(2, 3).is_err());
    }

    #[test]
    fn gram_values() {
        assert!((gram(1, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(gram(1, 2).unwrap(), 0.0);
        assert_eq!(gram(2, 1).unwrap(), gram(2, -1).unwrap());
        assert!((b_intersection(1).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(b_intersection(0).is_err());
    }

    #[test]
    fn difference_coefficients() {
        let d = difference_coeffs(2, 5).unwrap();
        assert_eq!(d.exact(0), Some(1));
        assert_eq!(d.exact(1), Some(2));
        assert_eq!(d.exact(2), Some(3));
        assert!(difference_coeffs(0, 3).is_err());
    }

    #[test]
    fn chu_vandermonde_examples() {
        assert_eq!(chu_vandermonde(2, 3, 2).unwrap(), 10);
        assert_eq!(chu_vandermonde(4, 9, 0).unwrap(), 1);
        assert_eq!(chu_vandermonde(7, 5, 4).unwrap(), 495);
        assert_eq!(chu_vandermonde(-3, 5, 3).unwrap(), binomial(2, 3).unwrap());
    }

    #[test]
    fn generalized_binomial() {
        assert_eq!(binomial(-1, 3), Some(-1));
        assert_eq!(binomial(-2, 2), Some(3));
        assert_eq!(binomial(5, 7), Some(0));
        assert_eq!(binomial(5, -1), Some(0));
    }
}
