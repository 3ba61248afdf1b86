//! Function descriptors for the commands that take a spline as input.
//!
//! A descriptor is one or more terms joined by ` + `:
//!
//! - `bspline n=3 shift=0.5 scale=1 derivative=0`
//! - `psi n=2 a=0 s=0 d=0 tau=0 scale=1` (the localized wavelet, dilated)
//! - `file f.json` (a piecewise polynomial in the library's JSON form)

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rlbesov::bspline::bspline;
use rlbesov::wavelet::{capital_psi, HalfOrigin};
use rlbesov::{Dyadic, PiecewisePoly};

fn keyvals<'a>(desc: &str, toks: impl Iterator<Item = &'a str>, allowed: &[&str]) -> Result<HashMap<&'a str, &'a str>> {
    let mut kv = HashMap::new();
    for t in toks {
        let (k, v) = t.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{t}` in `{desc}`"))?;
        if !allowed.contains(&k) {
            bail!("unknown parameter `{k}` in `{desc}`; expected one of {}", allowed.join(", "));
        }
        kv.insert(k, v);
    }
    Ok(kv)
}

fn get<T: std::str::FromStr>(kv: &HashMap<&str, &str>, k: &str, default: Option<T>) -> Result<T> {
    match kv.get(k) {
        Some(v) => v.parse().map_err(|_| anyhow!("parameter {k}={v} is malformed")),
        None => default.ok_or_else(|| anyhow!("missing parameter {k}=")),
    }
}

fn dyadic(x: f64) -> Result<Dyadic> {
    Dyadic::from_f64(x).ok_or_else(|| anyhow!("{x} is not a dyadic rational"))
}

fn term(desc: &str, base: Option<&Path>) -> Result<PiecewisePoly> {
    let mut it = desc.split_whitespace();
    let head = it.next().ok_or_else(|| anyhow!("empty function descriptor"))?;
    match head {
        "bspline" => {
            let kv = keyvals(desc, it, &["n", "shift", "scale", "derivative"])?;
            let mut f = bspline(get(&kv, "n", None)?)?;
            for _ in 0..get::<u32>(&kv, "derivative", Some(0))? {
                f = f.derivative();
            }
            Ok(f.shift(dyadic(get(&kv, "shift", Some(0.0))?)?)?.scaled(get(&kv, "scale", Some(1.0))?))
        }
        "psi" => {
            let kv = keyvals(desc, it, &["n", "a", "s", "d", "tau", "scale"])?;
            let e = capital_psi(get(&kv, "n", None)?, HalfOrigin::from_f64(get(&kv, "a", Some(0.0))?)?, get(&kv, "s", Some(0))?)?;
            Ok(e.dilate(get(&kv, "d", Some(0))?, get(&kv, "tau", Some(0))?)?.scaled(get(&kv, "scale", Some(1.0))?))
        }
        "file" => {
            let p = it.next().ok_or_else(|| anyhow!("`file` needs a path"))?;
            if it.next().is_some() {
                bail!("`file` takes a single path");
            }
            let path = match base {
                Some(b) if Path::new(p).is_relative() => b.join(p),
                _ => Path::new(p).to_path_buf(),
            };
            let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{} is not a piecewise polynomial", path.display()))
        }
        other => bail!("unknown function kind `{other}`; expected bspline, psi or file"),
    }
}

pub fn parse(desc: &str, base: Option<&Path>) -> Result<PiecewisePoly> {
    let mut acc = PiecewisePoly::zero();
    for part in desc.split(" + ") {
        acc = acc.add(&term(part.trim(), base)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_terms() {
        let f = parse("bspline n=1 shift=0.5 scale=2", None).unwrap();
        assert_eq!(f.eval(1.5), 2.0);
        let g = parse("bspline n=1 + bspline n=1 shift=1 scale=-1", None).unwrap();
        assert_eq!((g.eval(1.0), g.eval(2.0)), (1.0, -1.0));
        assert!(parse("bspline m=1", None).is_err());
        assert!(parse("spline n=1", None).is_err());
    }

    #[test]
    fn psi_has_the_predicted_support() {
        let f = parse("psi n=1", None).unwrap();
        assert!(f.is_compact() && !f.is_zero());
    }
}
