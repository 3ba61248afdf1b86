use std::sync::Arc;

use anyhow::{bail, Result};
use rlbesov::besov::{besov_norm_estimate, min_order, r_w_bracket, wavelet_coeffs, EstimateOptions, SpaceParams, Window};
use rlbesov::bspline::{bspline, gram};
use rlbesov::criteria::{criterion_lower, criterion_upper, frak_profile, homogeneity_reduction, integral_form, CriteriaInput, Truncation};
use rlbesov::harness::{
    example_ex1, extremal_family, make_family, verify_forward, verify_reverse, Ex1Config, FamilyKind, MemberRatio, Outcome, Problem,
    TestFamily, Tolerances,
};
use rlbesov::rliouville::{rl_apply, rl_duality_residual, RLSpec};
use rlbesov::wavelet::{euler_constants, generalized_psi, theta_report, HalfOrigin, SplineSystemSpec};
use rlbesov::weights::{doubling_check, muckenhoupt_constant, nested_dyadic_pairs, ScanSpec, Weight};
use rlbesov::{par, PiecewisePoly};
use serde::Serialize;
use serde_json::json;

use crate::output::{emit, num, opt, Report};
use crate::*;

pub enum Verdict {
    Ok,
    Fail,
}

fn weight(desc: &str) -> Result<Arc<Weight>> {
    Ok(Arc::new(Weight::parse(desc, None)?))
}

fn trunc(t: &TruncArgs) -> Truncation {
    let d = Truncation::default();
    Truncation {
        tau_window: t.tau_window.unwrap_or(d.tau_window),
        series_window: t.series_window.unwrap_or(d.series_window),
        d_max: t.d_max.unwrap_or(d.d_max),
        stability_check: !t.no_stability_check,
    }
}

fn tolerances(t: &TolArgs) -> Tolerances {
    Tolerances { k_lo: t.k_lo, k_hi: t.k_hi, slack: t.slack }
}

fn outcome(pass: bool) -> Verdict {
    if pass {
        Verdict::Ok
    } else {
        Verdict::Fail
    }
}

fn samples(f: &PiecewisePoly, count: usize) -> Vec<Vec<String>> {
    let Some(Window { lo, hi }) = rlbesov::besov::default_window(f) else {
        return Vec::new();
    };
    let count = count.max(2);
    (0..count)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            vec![num(x), num(f.eval(x))]
        })
        .collect()
}

fn member_rows(ratios: &[MemberRatio], prefix: Option<&str>) -> Vec<Vec<String>> {
    ratios
        .iter()
        .map(|m| {
            let mut r: Vec<String> = prefix.map(|p| vec![p.to_string()]).unwrap_or_default();
            r.extend([m.index.to_string(), m.label.clone(), num(m.norm_in), num(m.norm_out), opt(m.ratio)]);
            r
        })
        .collect()
}

fn setup_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    if threads == 1 {
        par::set_parallel(false);
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Verdict> {
    setup_threads(cli.threads)?;
    let (report, verdict) = dispatch(&cli.cmd)?;
    emit(&report.render(cli.format)?, cli.output.as_ref())?;
    Ok(verdict)
}

fn dispatch(cmd: &Cmd) -> Result<(Report, Verdict)> {
    match cmd {
        Cmd::Spline(c) => spline(c).map(|r| (r, Verdict::Ok)),
        Cmd::Wavelet(c) => wavelet(c),
        Cmd::Weights(c) => weights(c).map(|r| (r, Verdict::Ok)),
        Cmd::Rl(c) => rl(c),
        Cmd::Besov(c) => besov(c).map(|r| (r, Verdict::Ok)),
        Cmd::Criteria(c) => criteria(c).map(|r| (r, Verdict::Ok)),
        Cmd::Verify(c) => verify(c),
    }
}

fn spline(cmd: &SplineCmd) -> Result<Report> {
    match cmd {
        SplineCmd::Eval(a) => {
            let mut b = bspline(a.n)?;
            for _ in 0..a.derivative {
                b = b.derivative();
            }
            let rows: Vec<(f64, f64)> = a.x.iter().map(|&x| (x, b.eval(x))).collect();
            let points: Vec<_> = rows.iter().map(|(x, v)| json!({"x": x, "value": v})).collect();
            let body = json!({"n": a.n, "derivative": a.derivative, "points": points});
            Ok(Report::new(&body)?.with_table(vec!["x", "value"], rows.iter().map(|(x, v)| vec![num(*x), num(*v)]).collect()))
        }
        SplineCmd::Gram(a) => {
            let n = a.n as i64;
            let offsets: Vec<i64> = match a.offset {
                Some(k) => vec![k],
                None => (-n..=n).collect(),
            };
            let vals = offsets.iter().map(|&k| Ok((k, gram(a.n, k)?))).collect::<Result<Vec<_>>>()?;
            let entries: Vec<_> = vals.iter().map(|(k, v)| json!({"offset": k, "value": v})).collect();
            let body = json!({"n": a.n, "gram": entries});
            Ok(Report::new(&body)?.with_table(vec!["offset", "value"], vals.iter().map(|(k, v)| vec![k.to_string(), num(*v)]).collect()))
        }
    }
}

fn wavelet(cmd: &WaveletCmd) -> Result<(Report, Verdict)> {
    match cmd {
        WaveletCmd::Constants(a) => {
            let k = euler_constants(a.n)?;
            let rows = (0..k.roots.len().max(k.rho.len()))
                .map(|j| vec![(j + 1).to_string(), opt(k.roots.get(j).copied()), opt(k.rho.get(j).copied())])
                .collect();
            Ok((Report::new(&k)?.with_table(vec!["j", "root", "rho"], rows), Verdict::Ok))
        }
        WaveletCmd::Build(a) => {
            let spec = SplineSystemSpec {
                n: a.n,
                a: HalfOrigin::from_f64(a.a)?,
                s: a.s,
                m: a.m,
                k_flag: a.k_flag,
                zeta_flag: a.zeta_flag,
                alpha: a.alpha,
            };
            let e = generalized_psi(spec)?;
            let f = e.dilate(a.d, a.tau)?;
            #[derive(Serialize)]
            struct Body<'a> {
                spec: &'a SplineSystemSpec,
                series: &'a rlbesov::wavelet::BSplineSeries,
                support: Option<(f64, f64)>,
                d: u32,
                tau: i64,
                func: &'a PiecewisePoly,
            }
            let body = Body { spec: &e.spec, series: &e.series, support: f.support_f64(), d: a.d, tau: a.tau, func: &f };
            Ok((Report::new(&body)?.with_table(vec!["x", "value"], samples(&f, a.samples)), Verdict::Ok))
        }
        WaveletCmd::Theta(a) => {
            let r = theta_report(a.n_star, a.m_star)?;
            let pass = r.agrees(a.tol);
            let mut body = serde_json::to_value(&r)?;
            body["tol"] = json!(a.tol);
            body["outcome"] = json!(if pass { "PASS" } else { "FAIL" });
            Ok((Report::new(&body)?, outcome(pass)))
        }
    }
}

fn weights(cmd: &WeightsCmd) -> Result<Report> {
    match cmd {
        WeightsCmd::Mass(a) => {
            let w = weight(&a.w)?;
            let mass = w.mass_pow(a.lo, a.hi, a.exponent)?;
            Report::new(&json!({"weight": w.describe(), "lo": a.lo, "hi": a.hi, "exponent": a.exponent, "mass": mass}))
        }
        WeightsCmd::Muckenhoupt(a) => {
            let w = weight(&a.w)?;
            let scan = ScanSpec { d_min: a.d_min, d_max: a.d_max, extent: a.extent };
            let est = muckenhoupt_constant(&w, a.rho, a.local, &scan)?;
            Report::new(&json!({"weight": w.describe(), "rho": a.rho, "local": a.local, "scan": scan, "estimate": est}))
        }
        WeightsCmd::Doubling(a) => {
            let w = weight(&a.w)?;
            let pairs = nested_dyadic_pairs(a.extent, (a.d_lo, a.d_hi), a.depth);
            let rep = doubling_check(&w, a.rho, a.rho_star, &pairs)?;
            Report::new(&json!({"weight": w.describe(), "rho": a.rho, "rho_star": a.rho_star, "pairs": pairs.len(), "report": rep}))
        }
    }
}

fn rl(cmd: &RlCmd) -> Result<(Report, Verdict)> {
    match cmd {
        RlCmd::Apply(a) => {
            let f = funcs::parse(&a.f, None)?;
            let spec = match a.origin {
                Some(c) => RLSpec::half_line(a.alpha, a.side.into(), c),
                None => RLSpec::full_line(a.alpha, a.side.into()),
            };
            let g = rl_apply(&spec, &f)?;
            let body = json!({"operator": spec, "support": g.support_f64(), "compact": g.is_compact(), "image": g});
            Ok((Report::new(&body)?.with_table(vec!["x", "value"], samples(&g, a.samples)), Verdict::Ok))
        }
        RlCmd::Duality(a) => {
            let f = funcs::parse(&a.f, None)?;
            let g = funcs::parse(&a.g, None)?;
            let r = rl_duality_residual(a.alpha, &f, &g)?;
            let pass = r <= a.tol;
            let body = json!({"alpha": a.alpha, "residual": r, "tol": a.tol, "outcome": if pass { "PASS" } else { "FAIL" }});
            Ok((Report::new(&body)?, outcome(pass)))
        }
    }
}

fn besov(cmd: &BesovCmd) -> Result<Report> {
    let window = |w: Option<(f64, f64)>| w.map(|(lo, hi)| Window { lo, hi });
    match cmd {
        BesovCmd::Coeffs(a) => {
            let f = funcs::parse(&a.f, None)?;
            let spec = SplineSystemSpec::plain(a.n, HalfOrigin::from_f64(a.a)?, a.s);
            let c = wavelet_coeffs(&f, &spec, a.d_max, window(a.window))?;
            let rows = c.iter().map(|(d, tau, v)| vec![d.to_string(), tau.to_string(), num(v)]).collect();
            Ok(Report::new(&c)?.with_table(vec!["d", "tau", "value"], rows))
        }
        BesovCmd::Norm(a) => {
            let f = funcs::parse(&a.f, None)?;
            let sp = SpaceParams::new(a.p, a.q, a.s, weight(&a.w)?)?;
            let opts = EstimateOptions {
                a: HalfOrigin::from_f64(a.a)?,
                all_origins: a.all_origins,
                window: window(a.window),
                r_w: a.r_w,
                ..Default::default()
            };
            let n = match a.n {
                Some(n) => n,
                None => {
                    let r = match a.r_w {
                        Some(r) => r,
                        None => r_w_bracket(&sp.weight, &opts.scan)?.hi,
                    };
                    min_order(a.s, a.p, r).max(1) as usize
                }
            };
            let est = besov_norm_estimate(&f, &sp, n, a.d_max, &opts)?;
            let rows = est.levels.iter().enumerate().map(|(d, v)| vec![d.to_string(), num(*v)]).collect();
            Ok(Report::new(&est)?.with_table(vec!["level", "value"], rows))
        }
    }
}

fn upper(a: &CriteriaUpper, c: Option<f64>) -> Result<Report> {
    let (u, v) = (weight(&a.u)?, weight(&a.v)?);
    let mut inp = match c {
        Some(c) => CriteriaInput::half_line(a.alpha, a.p, a.side.into(), c),
        None => CriteriaInput::full_line(a.alpha, a.p, a.side.into()),
    };
    inp.previous = a.previous;
    Report::new(&criterion_upper(&inp, a.kappa, &u, &v, &trunc(&a.trunc))?)
}

fn criteria(cmd: &CriteriaCmd) -> Result<Report> {
    match cmd {
        CriteriaCmd::FullLine(a) => upper(a, None),
        CriteriaCmd::HalfLine(a) => upper(&a.upper, Some(a.c)),
        CriteriaCmd::Lower(a) => {
            let (u, w) = (weight(&a.u)?, weight(&a.w)?);
            let mut inp = match a.c {
                Some(c) => CriteriaInput::half_line(a.alpha, a.p, a.side.into(), c),
                None => CriteriaInput::full_line(a.alpha, a.p, a.side.into()),
            };
            inp.previous = a.previous;
            Report::new(&criterion_lower(&inp, a.kappa, &u, &w, &trunc(&a.trunc))?)
        }
        CriteriaCmd::IntegralForm(a) => {
            let (u, v) = (weight(&a.u)?, weight(&a.v)?);
            Report::new(&integral_form(a.theta, a.epsilon, a.side.into(), &u, &v, a.p, a.c, &trunc(&a.trunc))?)
        }
        CriteriaCmd::Reduce(a) => {
            let t = trunc(&a.trunc);
            let red = homogeneity_reduction(a.s1, a.s2, a.kappa, a.p, t.d_max)?;
            let profile = match (&a.sigma1, &a.sigma2) {
                (Some(s1), Some(s2)) => Some(frak_profile(&weight(s1)?, &weight(s2)?, a.kappa, a.p, a.side.into(), a.c, &t)?),
                (None, None) => None,
                _ => bail!("--sigma1 and --sigma2 go together"),
            };
            let rows = red
                .factors
                .iter()
                .enumerate()
                .map(|(d, f)| vec![d.to_string(), num(*f), opt(profile.as_ref().and_then(|p| p.get(d).copied()))])
                .collect();
            let body = json!({"reduction": red, "frak": profile});
            Ok(Report::new(&body)?.with_table(vec!["d", "factor", "frak"], rows))
        }
    }
}

fn verify(cmd: &VerifyCmd) -> Result<(Report, Verdict)> {
    match cmd {
        VerifyCmd::Forward(a) => verify_one(a, true),
        VerifyCmd::Reverse(a) => verify_one(a, false),
        VerifyCmd::ExampleEx1(a) => {
            let cfg = Ex1Config {
                p: a.p,
                q: a.q.unwrap_or(a.p),
                alpha: a.alpha,
                s: a.s,
                t: a.t,
                members: a.members,
                seed: a.seed,
                d_max: a.norm_d_max,
            };
            let rep = example_ex1(&cfg, &trunc(&a.trunc), tolerances(&a.tol))?;
            let pass = rep.outcome() == Outcome::Pass;
            let mut body = serde_json::to_value(&rep)?;
            body["outcome"] = serde_json::to_value(rep.outcome())?;
            let mut rows = member_rows(&rep.forward.empirical.ratios, Some("forward"));
            rows.extend(member_rows(&rep.reverse.empirical.ratios, Some("reverse")));
            let header = vec!["direction", "index", "label", "norm_in", "norm_out", "ratio"];
            Ok((Report::new(&body)?.with_table(header, rows), outcome(pass)))
        }
    }
}

fn verify_one(a: &VerifyArgs, forward: bool) -> Result<(Report, Verdict)> {
    let alpha = a.alpha;
    if alpha == 0 {
        bail!("--alpha must be at least 1");
    }
    let q = a.q.unwrap_or(a.p);
    let s_in = if forward { a.s + a.kappa - alpha as f64 } else { a.s - a.kappa - alpha as f64 };
    let (w_in, w_out) = (weight(&a.w_in)?, weight(&a.w_out)?);
    let opts = EstimateOptions { r_w: a.r_w, ..Default::default() };
    let order_for = |s: f64, w: &Arc<Weight>| -> Result<usize> {
        let r = match a.r_w {
            Some(r) => r,
            None => r_w_bracket(w, &opts.scan)?.hi,
        };
        Ok(min_order(s, a.p, r).max(1) as usize)
    };
    let problem = Problem {
        alpha,
        side: a.side.into(),
        origin: a.origin,
        space_in: SpaceParams::new(a.p, q, s_in, w_in.clone())?,
        space_out: SpaceParams::new(a.p, q, a.s, w_out.clone())?,
        n_in: a.n_in.map_or_else(|| order_for(s_in, &w_in), Ok)?,
        n_out: a.n_out.map_or_else(|| order_for(a.s, &w_out), Ok)?,
        d_max: a.norm_d_max,
        options: opts.clone(),
    };
    let order = a.order.unwrap_or(alpha as usize + if forward { 1 } else { 2 });
    let window = a.window.unwrap_or_else(|| match a.origin {
        Some(c) => {
            let c = c.ceil() as i64;
            (c, c + 24)
        }
        None => (-24, 24),
    });
    let derivative = a.derivative.unwrap_or(if forward { 0 } else { alpha });
    let mut family = if a.members > 0 {
        make_family(vec![FamilyKind::RandomCombo { seed: a.seed, count: a.members, order, window, derivative }])?
    } else {
        TestFamily { kinds: Vec::new(), members: Vec::new(), labels: Vec::new() }
    };
    if a.extremal {
        if !forward {
            bail!("--extremal applies to the forward direction");
        }
        let origin = a.origin.map(|c| c.ceil() as i64);
        let ext = extremal_family(alpha, a.p, &w_out, &w_in, alpha as usize + 1, &[2, 8, 32], &[0, 1, 4, 16], origin)?;
        family.kinds.extend(ext.kinds);
        family.members.extend(ext.members);
        family.labels.extend(ext.labels);
    }
    if family.is_empty() {
        bail!("the test family is empty; raise --members or pass --extremal");
    }
    let t = trunc(&a.trunc);
    let tol = tolerances(&a.tol);
    let rep = if forward { verify_forward(&problem, &family, &t, tol)? } else { verify_reverse(&problem, &family, &t, tol)? };
    let pass = rep.outcome() == Outcome::Pass;
    let mut body = serde_json::to_value(&rep)?;
    body["outcome"] = serde_json::to_value(rep.outcome())?;
    body["spaces"] = json!({
        "p": a.p, "q": q,
        "s_in": s_in, "s_out": a.s,
        "w_in": w_in.describe(), "w_out": w_out.describe(),
        "n_in": problem.n_in, "n_out": problem.n_out,
    });
    let rows = member_rows(&rep.empirical.ratios, None);
    Ok((Report::new(&body)?.with_table(vec!["index", "label", "norm_in", "norm_out", "ratio"], rows), outcome(pass)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_defaults_and_overrides() {
        let t = trunc(&TruncArgs { tau_window: Some(8), series_window: None, d_max: Some(3), no_stability_check: true });
        assert_eq!(t.tau_window, 8);
        assert_eq!(t.series_window, Truncation::default().series_window);
        assert_eq!(t.d_max, 3);
        assert!(!t.stability_check);
    }
}
