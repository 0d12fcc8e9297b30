//! The consistency battery behind `compare-report`: general quadrature
//! against fixed-interval, linear and reflected closed forms, mass balance,
//! and optionally Monte Carlo.

use drawdown_core::drawdown_identities::linear::{self, LinearBarrier};
use drawdown_core::drawdown_identities::{classical, reflected, DrawdownFunction, ExitQuery};
use drawdown_core::levy_model::LevyModel;
use drawdown_core::quadrature::{integrate, QuadOptions};
use drawdown_core::scale_functions::{Method, ScaleFunction};
use drawdown_core::simulator::{estimate_transform, simulate, Selection, SimConfig, TransformParams};
use drawdown_core::Result;

use crate::args::ReportArgs;
use crate::failure::{CliError, CliResult};
use crate::output::{finish_table, Cell};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Relative difference, absolute difference, or |z|, by `kind`.
    pub difference: f64,
    pub tolerance: f64,
    pub kind: &'static str,
}

impl Check {
    pub fn rel(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        let difference = (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
        Self { name: name.into(), value, reference, difference, tolerance: tol, kind: "rel" }
    }

    pub fn abs(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        Self { name: name.into(), value, reference, difference: (value - reference).abs(), tolerance: tol, kind: "abs" }
    }

    pub fn z(name: impl Into<String>, mean: f64, se: f64, reference: f64, limit: f64) -> Self {
        let z = if se > 0.0 { ((mean - reference) / se).abs() } else { f64::INFINITY };
        Self { name: name.into(), value: mean, reference, difference: z, tolerance: limit, kind: "z" }
    }

    pub fn passed(&self) -> bool {
        self.difference <= self.tolerance
    }
}

fn catalog() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("bm", LevyModel::brownian(1.0, 1.0).expect("valid")),
        ("cpp", LevyModel::exp_jumps(2.0, 0.0, 1.0, 1.0).expect("valid")),
        ("jd", LevyModel::exp_jumps(0.5, 0.7, 1.5, 2.0).expect("valid")),
    ]
}

fn scale_checks(out: &mut Vec<Check>) -> Result<()> {
    for (tag, m) in catalog().into_iter().take(2) {
        for q in [0.0, 1.0] {
            let closed = ScaleFunction::with_method(&m, q, Method::ClosedForm)?;
            let inv = ScaleFunction::with_method(&m, q, Method::Inversion)?;
            for x in [0.5, 2.0] {
                out.push(Check::rel(format!("scale/{tag}/q={q}/W({x})"), inv.w(x)?, closed.w(x)?, 1e-8));
            }
        }
    }
    Ok(())
}

fn reduction_checks(out: &mut Vec<Check>) -> Result<()> {
    let (x, b, c, q) = (0.2, 1.3, -1.0, 0.8);
    for (tag, m) in catalog() {
        let sf = ScaleFunction::new(&m, q)?;
        let query = ExitQuery::new(m.clone(), DrawdownFunction::constant(c), x, b)?;
        let p = format!("constant/{tag}");
        out.push(Check::rel(format!("{p}/up_exit"), query.up_exit(q)?.value, classical::up_exit(&sf, x, b, c)?, 1e-8));
        let down = classical::down_exit(&m, q, 0.0, x, b, c, Method::ClosedForm)?;
        out.push(Check::rel(format!("{p}/triple"), query.triple(q, 0.0, 0.0)?.value, down, 1e-8));
        if m.sigma() > 0.0 {
            let cr = classical::creeping(&sf, x, b, c)?;
            out.push(Check::rel(format!("{p}/creep"), query.creeping(q, false)?.value, cr, 1e-8));
        }
        let y = 0.5;
        let rd = classical::resolvent_density(&sf, x, b, c, y)?;
        out.push(Check::rel(format!("{p}/potential(y={y})"), query.potential_density(q, y)?.value, rd, 1e-8));
        let a = -0.3;
        let hq = ExitQuery::new(m.clone(), DrawdownFunction::constant(a), x, b)?;
        let hc = classical::hitting(&sf, x, a, b, c)?;
        out.push(Check::rel(format!("{p}/hit"), hq.hitting(q, c)?.value, hc, 1e-8));
    }
    Ok(())
}

fn linear_checks(out: &mut Vec<Check>) -> Result<()> {
    let (d, b, q) = (1.0, 2.0, 0.5);
    let (tag, m) = catalog().remove(2);
    let sf = ScaleFunction::new(&m, q)?;
    for slope in [-0.5, 0.3, 0.7] {
        let lin = LinearBarrier::new(slope, d, b)?;
        let query = ExitQuery::new(m.clone(), DrawdownFunction::linear(slope, d), 0.0, b)?;
        let p = format!("linear/{tag}/slope={slope}");
        out.push(Check::rel(format!("{p}/up_exit"), query.up_exit(q)?.value, linear::up_exit(&sf, &lin)?, 1e-7));
        let tc = linear::triple(&m, q, 0.0, &lin, Method::ClosedForm, 1e-12)?.value;
        out.push(Check::rel(format!("{p}/triple"), query.triple(q, 0.0, 0.0)?.value, tc, 1e-7));
        let cc = linear::creeping(&sf, &lin, 1e-12)?.value;
        out.push(Check::rel(format!("{p}/creep"), query.creeping(q, false)?.value, cc, 1e-7));
        let y = 0.4;
        let pc = linear::potential_density(&sf, &lin, y)?;
        out.push(Check::rel(format!("{p}/potential(y={y})"), query.potential_density(q, y)?.value, pc, 1e-7));
    }
    Ok(())
}

fn reflected_checks(out: &mut Vec<Check>) -> Result<()> {
    let (d, b, q) = (1.0, 1.5, 0.8);
    let (tag, m) = catalog().remove(2);
    let sf = ScaleFunction::new(&m, q)?;
    let query = ExitQuery::new(m.clone(), DrawdownFunction::reflected(d), 0.0, b)?;
    let p = format!("reflected/{tag}");
    out.push(Check::rel(format!("{p}/up_exit"), query.up_exit(q)?.value, reflected::up_exit(&sf, d, b)?, 1e-7));
    let tc = reflected::triple(&m, q, 0.2, 0.3, d, b, Method::ClosedForm)?;
    out.push(Check::rel(format!("{p}/triple"), query.triple(q, 0.2, 0.3)?.value, tc, 1e-7));
    out.push(Check::rel(format!("{p}/creep"), query.creeping(q, false)?.value, reflected::creeping(&sf, d, b)?, 1e-7));
    let y = 0.4;
    let pc = reflected::potential_density(&sf, d, b, y)?;
    out.push(Check::rel(format!("{p}/potential(y={y})"), query.potential_density(q, y)?.value, pc, 1e-7));
    let (u, v) = (1.0, 0.4);
    let sv = ScaleFunction::tilted_from(&m, v, u - m.laplace_exponent(v), Method::ClosedForm)?;
    let far = 200.0 / reflected::max_rate(&sv, d)?;
    let lim = reflected::triple(&m, u, v, -v, d, far, Method::ClosedForm)?;
    let unbounded = reflected::unbounded_transform(&m, u, v, d, Method::ClosedForm)?;
    out.push(Check::abs(format!("{p}/unbounded_limit"), lim, unbounded, 1e-8));
    let mass = integrate(|z| reflected::reflected_density(&sf, d, z), 0.0, d, &[], QuadOptions::abs(1e-12))?;
    let law = reflected::reflected_at_exp_time(&sf, d)?;
    out.push(Check::abs(format!("{p}/exp_time_total"), mass.value + law.atom + law.exit_probability, 1.0, 1e-6));
    Ok(())
}

fn mass_checks(out: &mut Vec<Check>) -> Result<()> {
    for (tag, m) in catalog() {
        for (xt, xi) in [
            ("constant", DrawdownFunction::constant(-1.0)),
            ("linear", DrawdownFunction::linear(0.5, 1.0)),
            ("reflected", DrawdownFunction::reflected(1.0)),
        ] {
            let mc = ExitQuery::new(m.clone(), xi, 0.0, 1.5)?.potential_mass_check(0.9)?;
            out.push(Check::abs(format!("mass/{tag}/{xt}"), mc.potential_side, mc.exit_side, 1e-6));
        }
    }
    Ok(())
}

fn mc_checks(out: &mut Vec<Check>, paths: usize, seed: u64, threads: Option<usize>) -> Result<()> {
    let q = 1.0;
    for (tag, m) in catalog().into_iter().take(2) {
        for (xt, xi) in [("linear", DrawdownFunction::linear(0.5, 1.0)), ("reflected", DrawdownFunction::reflected(1.0))] {
            let mut cfg = SimConfig::with_levels(vec![1e-3, 5e-4, 2.5e-4], paths, seed);
            cfg.threads = threads;
            let ens = simulate(&m, &xi, 0.0, 1.0, &cfg)?;
            let query = ExitQuery::new(m.clone(), xi, 0.0, 1.0)?;
            let e = estimate_transform(&ens, Selection::UpExit, TransformParams::killed(q))?.extrapolated;
            out.push(Check::z(format!("mc/{tag}/{xt}/up_exit"), e.mean, e.se, query.up_exit(q)?.value, 3.5));
            let e = estimate_transform(&ens, Selection::Drawdown, TransformParams::killed(q))?.extrapolated;
            out.push(Check::z(format!("mc/{tag}/{xt}/triple"), e.mean, e.se, query.triple(q, 0.0, 0.0)?.value, 3.5));
        }
    }
    Ok(())
}

pub fn battery(mc: Option<(usize, u64, Option<usize>)>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    scale_checks(&mut out)?;
    reduction_checks(&mut out)?;
    linear_checks(&mut out)?;
    reflected_checks(&mut out)?;
    mass_checks(&mut out)?;
    if let Some((paths, seed, threads)) = mc {
        mc_checks(&mut out, paths, seed, threads)?;
    }
    Ok(out)
}

pub fn compare_report(a: &ReportArgs) -> CliResult<String> {
    let checks = battery(a.mc_paths.map(|n| (n, a.seed, a.threads)))?;
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                Cell::from(c.name.as_str()),
                c.value.into(),
                c.reference.into(),
                c.difference.into(),
                c.tolerance.into(),
                c.kind.into(),
                if c.passed() { "pass" } else { "fail" }.into(),
            ]
        })
        .collect();
    let text = finish_table(
        &["check", "value", "reference", "difference", "tolerance", "measure", "status"],
        rows,
        a.out.format,
        a.out.output.as_deref(),
    )?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: checks.len() });
    }
    Ok(text)
}
