use std::fs;
use std::path::Path;

use drawdown_core::drawdown_identities::{DrawdownFunction, ExitQuery, IdentityResult};
use drawdown_core::levy_model::LevyModel;
use drawdown_core::scale_functions::{Method, ScaleFunction};
use drawdown_core::simulator::{
    creep_fraction, estimate_potential_histogram, estimate_transform, simulate, LevelEstimates, Selection, SimConfig,
    TransformParams,
};
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::args::{Format, IdentityArgs, McArgs, McWhich, MethodArg, ScaleArgs, Which};
use crate::failure::{CliError, CliResult};
use crate::output::{finish, Artifact, Cell};

/// `a,b,c` or `start:end:count` (inclusive, evenly spaced).
pub fn parse_points(text: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::Usage(format!("cannot parse {what} in point list {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
    let parts: Vec<&str> = text.split(':').collect();
    let pts = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<CliResult<Vec<f64>>>()?,
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| bad(n))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        _ => return Err(bad("range")),
    };
    if pts.is_empty() {
        return Err(CliError::Usage(format!("empty point list {text:?}")));
    }
    if pts.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("non-finite value in {text:?}")));
    }
    Ok(pts)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> CliResult<LevyModel> {
    Ok(LevyModel::from_json(&read(path)?)?)
}

/// Inline JSON when the argument starts with `{`, a file path otherwise.
pub fn load_xi(arg: &str) -> CliResult<DrawdownFunction> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    Ok(DrawdownFunction::from_json(&text)?)
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::ClosedForm => Method::ClosedForm,
        MethodArg::Inversion => Method::Inversion,
    }
}

pub fn scale_eval(a: &ScaleArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let xs = parse_points(&a.x)?;
    let sf = match method(a.method) {
        Method::ClosedForm => ScaleFunction::new(&model, a.q)?,
        m => ScaleFunction::with_method(&model, a.q, m)?,
    };
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (w, we) = sf.w_with_error(x)?;
        let (w1, w1e) = if x > 0.0 {
            sf.w_prime_with_error(x)?
        } else if x == 0.0 {
            (sf.w_prime_right(0.0)?, 0.0)
        } else {
            (0.0, 0.0)
        };
        let second = if model.sigma() > 0.0 && x > 0.0 {
            Some(sf.w_second_with_error(x)?)
        } else {
            None
        };
        let (z, ze) = sf.z_with_error(x)?;
        rows.push(vec![
            x.into(),
            w.into(),
            we.into(),
            w1.into(),
            w1e.into(),
            second.map(|s| s.0).into(),
            second.map(|s| s.1).into(),
            z.into(),
            ze.into(),
        ]);
    }
    let t = Artifact::table(
        &["x", "w", "w_error", "w_prime", "w_prime_error", "w_second", "w_second_error", "z", "z_error"],
        rows,
    );
    finish(t, a.out.format, false, a.out.output.as_deref())
}

fn identity_row(r: &IdentityResult, keys: &[&str]) -> Vec<Cell> {
    let mut row: Vec<Cell> = keys.iter().map(|k| r.params.get(*k).copied().into()).collect();
    row.push(r.value.into());
    row.push(r.abs_error_estimate.into());
    row
}

pub fn identity_eval(a: &IdentityArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let xi = load_xi(&a.xi)?;
    let query = ExitQuery::new(model, xi, a.x, a.b)?
        .with_tolerance(a.tol)
        .with_method(method(a.method));
    let qs = parse_points(&a.q)?;
    let out = a.out.output.as_deref();
    if a.which == Which::Mass {
        let mut rows = Vec::new();
        for &q in &qs {
            let m = query.potential_mass_check(q)?;
            rows.push(vec![
                a.x.into(),
                a.b.into(),
                q.into(),
                m.potential_side.into(),
                m.potential_error.into(),
                m.exit_side.into(),
                m.exit_error.into(),
                m.discrepancy().into(),
            ]);
        }
        let single = rows.len() == 1;
        let t = Artifact::table(
            &["x", "b", "q", "potential_side", "potential_error", "exit_side", "exit_error", "discrepancy"],
            rows,
        );
        return finish(t, a.out.format, single, out);
    }
    let ys = match (a.which, &a.y) {
        (Which::Potential, Some(y)) => parse_points(y)?,
        (Which::Potential, None) => return Err(CliError::Usage("--which potential needs --y".into())),
        _ => vec![f64::NAN],
    };
    let keys: &[&str] = match a.which {
        Which::UpExit | Which::Creep => &["x", "b", "q"],
        Which::Triple => &["x", "b", "u", "v", "r", "p"],
        Which::Potential => &["x", "b", "q", "y"],
        Which::Hit => &["x", "b", "q", "c"],
        Which::Mass => unreachable!("handled above"),
    };
    let mut results = Vec::new();
    for &q in &qs {
        for &y in &ys {
            let r = match a.which {
                Which::UpExit => query.up_exit(q)?,
                Which::Triple => query.triple(a.u.unwrap_or(q), a.v, a.r)?,
                Which::Potential => query.potential_density(q, y)?,
                Which::Creep => query.creeping(q, a.zero_creep_ok)?,
                Which::Hit => {
                    let c = a.c.ok_or_else(|| CliError::Usage("--which hit needs --c".into()))?;
                    query.hitting(q, c)?
                }
                Which::Mass => unreachable!("handled above"),
            };
            results.push(r);
        }
    }
    if results.len() == 1 && a.out.format != Some(Format::Csv) {
        let r = &results[0];
        let doc = json!({
            "which": value_name(a.which),
            "value": r.value,
            "error_estimate": r.abs_error_estimate,
            "params": r.params,
        });
        return finish(Artifact::Json(doc), a.out.format, true, out);
    }
    let mut header: Vec<&str> = keys.to_vec();
    header.extend(["value", "error_estimate"]);
    let rows = results.iter().map(|r| identity_row(r, keys)).collect();
    finish(Artifact::table(&header, rows), a.out.format, false, out)
}

fn levels_json(e: &LevelEstimates) -> Value {
    Value::Array(
        e.dt_levels
            .iter()
            .zip(&e.per_level)
            .map(|(dt, x)| json!({"dt": dt, "mean": x.mean, "se": x.se}))
            .collect(),
    )
}

pub fn dt_levels(text: &str) -> CliResult<Vec<f64>> {
    let v = parse_points(text)?;
    Ok(if v.len() == 1 { vec![v[0], v[0] / 2.0, v[0] / 4.0] } else { v })
}

pub fn mc_verify(a: &McArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let xi = load_xi(&a.xi)?;
    let query = ExitQuery::new(model.clone(), xi.clone(), a.x, a.b)?;
    let mut cfg = SimConfig::with_levels(dt_levels(&a.dt)?, a.paths, a.seed);
    cfg.threads = a.threads;
    let mut report = json!({
        "which": value_name(a.which),
        "model": serde_json::from_str::<Value>(&model.to_json()).map_err(|e| CliError::Internal(e.to_string()))?,
        "xi": xi.to_doc(),
        "x": a.x,
        "b": a.b,
        "q": a.q,
        "n_paths": a.paths,
        "seed": a.seed,
        "dt_levels": cfg.refinement_levels,
    });
    let fields = report.as_object_mut().expect("object");
    if a.which == McWhich::Potential {
        let edges = parse_points(a.bins.as_deref().ok_or_else(|| CliError::Usage("--which potential needs --bins".into()))?)?;
        let bins = estimate_potential_histogram(&model, &xi, a.x, a.b, a.q, &cfg, &edges)?;
        let mut max_z: f64 = 0.0;
        let mut rows = Vec::new();
        for bin in &bins {
            let f = query.potential_mass_on(a.q, bin.lo, bin.hi)?;
            let (fv, fe) = (a.q * f.value, a.q * f.abs_error_estimate);
            let z = bin.mass.extrapolated.z_score(fv);
            max_z = max_z.max(z.abs());
            rows.push(json!({
                "lo": bin.lo,
                "hi": bin.hi,
                "formula_value": fv,
                "formula_error": fe,
                "mc_mean": bin.mass.extrapolated.mean,
                "mc_se": bin.mass.extrapolated.se,
                "z_score": z,
                "per_level": levels_json(&bin.mass),
            }));
        }
        fields.insert("bins".into(), Value::Array(rows));
        fields.insert("max_abs_z".into(), json!(max_z));
        fields.insert("extrapolated".into(), json!(cfg.refinement_levels.len() > 1));
    } else {
        let ens = simulate(&model, &xi, a.x, a.b, &cfg)?;
        let params = TransformParams::killed(a.q);
        let (formula, est) = match a.which {
            McWhich::UpExit => (query.up_exit(a.q)?, estimate_transform(&ens, Selection::UpExit, params)?),
            McWhich::Triple => (query.triple(a.q, 0.0, 0.0)?, estimate_transform(&ens, Selection::Drawdown, params)?),
            McWhich::Creep => (query.creeping(a.q, true)?, creep_fraction(&ens, a.q)?),
            McWhich::Potential => unreachable!("handled above"),
        };
        let e = est.extrapolated;
        fields.insert("formula_value".into(), json!(formula.value));
        fields.insert("formula_error".into(), json!(formula.abs_error_estimate));
        fields.insert("mc_mean".into(), json!(e.mean));
        fields.insert("mc_se".into(), json!(e.se));
        fields.insert("z_score".into(), json!(e.z_score(formula.value)));
        fields.insert("weights".into(), json!(est.weights));
        fields.insert("per_level".into(), levels_json(&est));
        fields.insert("extrapolated".into(), json!(est.dt_levels.len() > 1));
    }
    finish(Artifact::Json(report), Some(Format::Json), true, a.output.as_deref())
}
