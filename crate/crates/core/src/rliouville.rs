//! Riemann–Liouville operators of natural order `α`:
//! `I_{c+}^α f(x) = (1/(α−1)!) ∫_c^x (x−y)^{α−1} f(y) dy` and its mirror
//! `I_{c−}^α f(x) = (1/(α−1)!) ∫_x^c (y−x)^{α−1} f(y) dy`.
//!
//! For natural `α` the kernel integral is the `α`-fold iterated integral, so
//! images of splines are computed exactly by repeated antidifferentiation.

use serde::{Deserialize, Serialize};

use crate::piecewise::{Dyadic, PiecewisePoly};
use crate::{Error, Result};

/// A tail whose coefficients are all below this fraction of the largest
/// one is cancellation residue. Pieces inside `supp f` are always kept.
pub const TRIM_REL_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `I_+`, integrating from the left.
    Left,
    /// `I_−`, integrating from the right.
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RLSpec {
    pub alpha: u32,
    pub side: Side,
    /// Origin `c`; `−∞` or `+∞` for the operators on the whole line.
    pub origin: f64,
}

impl RLSpec {
    pub fn full_line(alpha: u32, side: Side) -> Self {
        let origin = match side {
            Side::Left => f64::NEG_INFINITY,
            Side::Right => f64::INFINITY,
        };
        RLSpec { alpha, side, origin }
    }

    pub fn half_line(alpha: u32, side: Side, c: f64) -> Self {
        RLSpec { alpha, side, origin: c }
    }
}

fn left_apply(alpha: u32, c: f64, f: &PiecewisePoly) -> Result<PiecewisePoly> {
    if f.left_tail().is_some() {
        return Err(Error::precondition("f has a polynomial tail to the left; the integral from the origin diverges"));
    }
    if c == f64::INFINITY || c.is_nan() {
        return Err(Error::invalid(format!("origin {c} is not valid for this side")));
    }
    if let Some((a, _)) = f.support() {
        if a.to_f64() < c && !f.is_zero() {
            return Err(Error::precondition(format!("f is nonzero on [{}, {c}), before the origin c = {c}", a.to_f64())));
        }
    }
    let mut g = f.clone();
    for _ in 0..alpha {
        g = g.antiderivative()?;
    }
    Ok(g.trim_tails(TRIM_REL_TOL))
}

/// Apply `I^α` exactly. The image carries its polynomial tail explicitly.
pub fn rl_apply(spec: &RLSpec, f: &PiecewisePoly) -> Result<PiecewisePoly> {
    if spec.alpha == 0 {
        return Err(Error::invalid("operator order α must be at least 1"));
    }
    match spec.side {
        Side::Left => left_apply(spec.alpha, spec.origin, f),
        Side::Right => Ok(left_apply(spec.alpha, -spec.origin, &f.reflect())
            .map_err(|e| match e {
                Error::Precondition(m) => Error::Precondition(format!("(mirrored) {m}")),
                other => other,
            })?
            .reflect()),
    }
}

/// `|⟨I_+^α f, g^{(α)}⟩ − (−1)^α ⟨f, g⟩|` for compact `g` whose derivatives
/// below order `α` vanish at both support endpoints.
pub fn rl_duality_residual(alpha: u32, f: &PiecewisePoly, g: &PiecewisePoly) -> Result<f64> {
    if alpha == 0 {
        return Err(Error::invalid("operator order α must be at least 1"));
    }
    if !g.is_compact() {
        return Err(Error::precondition("g must be compactly supported"));
    }
    let Some((ga, gb)) = g.support() else {
        return Ok(0.0);
    };
    let scale = g.coefficient_scale().max(1.0);
    let mut dk = g.clone();
    for k in 0..alpha {
        let eps = 1e-9 * (gb.to_f64() - ga.to_f64());
        let left = dk.eval(ga.to_f64());
        let right = dk.eval(gb.to_f64() - eps);
        let tol = 1e-8 * scale * 2f64.powi(k as i32 + 1);
        if left.abs() > tol || right.abs() > tol * 10.0 {
            return Err(Error::precondition(format!(
                "g^({k}) does not vanish at the support endpoints ({left:e}, {right:e})"
            )));
        }
        dk = dk.derivative();
    }
    let image = rl_apply(&RLSpec::full_line(alpha, Side::Left), f)?;
    let lhs = image.inner(&dk)?;
    let sign = if alpha.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((lhs - sign * f.inner(g)?).abs())
}

/// `Σ_m (−1)^m C(α, m) B_n(x − m)`, the collapsed form of `B_{n+α}^{(α)}`.
pub fn difference_of_shifts(n: usize, alpha: u32) -> Result<PiecewisePoly> {
    let b = crate::bspline::bspline(n)?;
    let shifted: Vec<PiecewisePoly> = (0..=alpha as i64).map(|m| b.shift(Dyadic::int(m))).collect::<Result<_>>()?;
    let terms: Vec<(f64, &PiecewisePoly)> = shifted
        .iter()
        .enumerate()
        .map(|(m, p)| {
            let c = crate::bspline::binomial(alpha as i64, m as i64).unwrap() as f64;
            (if m % 2 == 0 { c } else { -c }, p)
        })
        .collect();
    PiecewisePoly::linear_combination(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::bspline;

    #[test]
    fn simple_images() {
        let b0 = bspline(0).unwrap();
        let one = rl_apply(&RLSpec::full_line(1, Side::Left), &b0).unwrap();
        assert_eq!(one.eval(0.5), 0.5);
        let two = rl_apply(&RLSpec::full_line(2, Side::Left), &b0).unwrap();
        assert!((two.eval(2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn right_operator_mirrors() {
        let b0 = bspline(0).unwrap();
        let r = rl_apply(&RLSpec::full_line(1, Side::Right), &b0).unwrap();
        assert_eq!(r.eval(0.25), 0.75);
        assert_eq!(r.eval(-3.0), 1.0);
        assert_eq!(r.eval(1.5), 0.0);
    }

    #[test]
    fn origin_checks() {
        let b1 = bspline(1).unwrap();
        assert!(rl_apply(&RLSpec::half_line(1, Side::Left, 0.5), &b1).is_err());
        assert!(rl_apply(&RLSpec::half_line(1, Side::Left, 0.0), &b1).is_ok());
        assert!(rl_apply(&RLSpec::half_line(1, Side::Right, 1.0), &b1).is_err());
        assert!(rl_apply(&RLSpec::half_line(1, Side::Right, 2.0), &b1).is_ok());
        assert!(rl_apply(&RLSpec::full_line(0, Side::Left), &b1).is_err());
    }

    #[test]
    fn duality_zero_and_precondition() {
        let g = bspline(4).unwrap();
        assert_eq!(rl_duality_residual(1, &PiecewisePoly::zero(), &g).unwrap(), 0.0);
        let b1 = bspline(1).unwrap();
        assert!(rl_duality_residual(2, &b1, &b1).is_err());
    }
}
