//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fmt::Write as _;
use std::process::{Command, ExitCode};
use std::time::Instant;

use drawdown_core::drawdown_identities::linear::{self, LinearBarrier};
use drawdown_core::drawdown_identities::{classical, reflected, DrawdownFunction, ExitQuery};
use drawdown_core::levy_model::LevyModel;
use drawdown_core::quadrature::{integrate, QuadOptions};
use drawdown_core::scale_functions::{Method, ScaleFunction};
use drawdown_core::simulator::{
    creep_fraction, estimate_potential_histogram, estimate_transform, ks_critical_value, ks_statistic, simulate,
    EventKind, LevelEstimates, Selection, SimConfig, TransformParams,
};
use drawdown_core::Result;

const TOL: f64 = 1e-12;
const SEED: u64 = 20_261_014;

/// Largest discrepancy seen, with where it happened.
struct Worst {
    limit: f64,
    value: f64,
    at: String,
    count: usize,
}

impl Worst {
    fn new(limit: f64) -> Self {
        Self { limit, value: 0.0, at: String::new(), count: 0 }
    }

    fn rel(&mut self, got: f64, want: f64, at: impl FnOnce() -> String) {
        let e = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
        self.push(if got == want { 0.0 } else { e }, at);
    }

    fn abs(&mut self, got: f64, want: f64, at: impl FnOnce() -> String) {
        self.push((got - want).abs(), at);
    }

    fn push(&mut self, e: f64, at: impl FnOnce() -> String) {
        self.count += 1;
        if !(e <= self.value) {
            self.value = e;
            self.at = at();
        }
    }

    fn ok(&self) -> bool {
        self.value <= self.limit
    }

    fn summary(&self, what: &str) -> String {
        format!("{what}: worst {:.2e} (limit {:.0e}, {} checks) at {}", self.value, self.limit, self.count, self.at)
    }
}

fn bm() -> LevyModel {
    LevyModel::brownian(1.0, 1.0).unwrap()
}

fn cpp() -> LevyModel {
    LevyModel::exp_jumps(2.0, 0.0, 1.0, 1.0).unwrap()
}

fn jd() -> LevyModel {
    LevyModel::exp_jumps(0.5, 0.7, 1.5, 2.0).unwrap()
}

fn models() -> Vec<(&'static str, LevyModel)> {
    vec![("bm", bm()), ("cpp", cpp()), ("jd", jd())]
}

fn query(m: &LevyModel, xi: DrawdownFunction, x: f64, b: f64) -> Result<ExitQuery> {
    Ok(ExitQuery::new(m.clone(), xi, x, b)?.with_tolerance(TOL))
}

/// Points strictly inside `(lo, hi)` avoiding `skip`.
fn interior(lo: f64, hi: f64, skip: f64) -> Vec<f64> {
    [0.1, 0.25, 0.4, 0.55, 0.7, 0.85]
        .iter()
        .map(|f| lo + f * (hi - lo))
        .filter(|y| (y - skip).abs() > 1e-6)
        .collect()
}

fn criterion_1() -> Result<(bool, String)> {
    let mut w = Worst::new(1e-8);
    let mut rt = Worst::new(1e-6);
    for (tag, m) in [("bm", bm()), ("cpp", cpp())] {
        for q in [0.0, 0.1, 1.0, 5.0] {
            let closed = ScaleFunction::with_method(&m, q, Method::ClosedForm)?;
            let inv = ScaleFunction::with_method(&m, q, Method::Inversion)?;
            for i in 0..25 {
                let x = 0.1 + (5.0 - 0.1) * i as f64 / 24.0;
                w.rel(inv.w(x)?, closed.w(x)?, || format!("{tag} q={q} x={x:.3}"));
            }
            // Laplace transform of the inverted W against 1/(psi - q).
            let lambda = inv.phi() + 1.0;
            let upper = 45.0;
            let r = integrate(
                |x| Ok((-lambda * x).exp() * inv.w(x)?),
                0.0,
                upper,
                &[1.0, 5.0, 15.0],
                QuadOptions::abs(1e-12),
            )?;
            let want = 1.0 / (m.laplace_exponent(lambda) - q);
            rt.rel(r.value, want, || format!("{tag} q={q} lambda={lambda:.3}"));
        }
    }
    Ok((w.ok() && rt.ok(), format!("{}; {}", w.summary("W inversion vs closed form"), rt.summary("round trip"))))
}

struct Interval {
    x: f64,
    b: f64,
    c: f64,
    q: f64,
    v: f64,
}

fn classical_grid() -> Vec<Interval> {
    let mut out = Vec::new();
    let spans = [(0.0, 1.0, -1.0), (0.3, 1.5, -0.5), (-0.5, 0.5, -1.5), (1.0, 3.0, 0.0)];
    for (i, &(x, b, c)) in spans.iter().enumerate() {
        for (j, q) in [0.5, 1.0, 3.0].into_iter().enumerate() {
            let v = if (i + j) % 2 == 0 { 0.0 } else { 0.25 };
            out.push(Interval { x, b, c, q, v });
        }
    }
    out
}

fn criterion_2(mass: &mut Worst) -> Result<(bool, String)> {
    let mut w = Worst::new(1e-8);
    for (tag, m) in models() {
        for p in classical_grid() {
            let sf = ScaleFunction::new(&m, p.q)?;
            let here = || format!("{tag} x={} b={} c={} q={}", p.x, p.b, p.c, p.q);
            let qc = query(&m, DrawdownFunction::constant(p.c), p.x, p.b)?;
            w.rel(qc.up_exit(p.q)?.value, classical::up_exit(&sf, p.x, p.b, p.c)?, || format!("up {}", here()));
            let down = classical::down_exit(&m, p.q, p.v, p.x, p.b, p.c, Method::ClosedForm)?;
            w.rel(qc.triple(p.q, p.v, 0.0)?.value, down, || format!("triple v={} {}", p.v, here()));
            if m.sigma() > 0.0 {
                let cr = classical::creeping(&sf, p.x, p.b, p.c)?;
                w.rel(qc.creeping(p.q, false)?.value, cr, || format!("creep {}", here()));
            } else {
                w.abs(qc.creeping(p.q, true)?.value, 0.0, || format!("creep {}", here()));
            }
            for y in interior(p.c, p.b, p.x) {
                let rd = classical::resolvent_density(&sf, p.x, p.b, p.c, y)?;
                w.rel(qc.potential_density(p.q, y)?.value, rd, || format!("potential y={y:.3} {}", here()));
            }
            let a = p.c + 0.5 * (p.x - p.c);
            let qa = query(&m, DrawdownFunction::constant(a), p.x, p.b)?;
            let hc = classical::hitting(&sf, p.x, a, p.b, p.c)?;
            w.rel(qa.hitting(p.q, p.c)?.value, hc, || format!("hit a={a} {}", here()));
            let mc = qc.potential_mass_check(p.q)?;
            mass.abs(mc.potential_side, mc.exit_side, || format!("constant {}", here()));
        }
    }
    Ok((w.ok(), w.summary("general vs fixed-interval forms")))
}

fn criterion_3(mass: &mut Worst) -> Result<(bool, String)> {
    let mut w = Worst::new(1e-7);
    for (tag, m) in models() {
        for slope in [-0.5, 0.3, 0.7] {
            for d in [0.5, 1.0] {
                for b in [1.0, 3.0] {
                    for q in [0.5, 2.0] {
                        let here = || format!("{tag} slope={slope} d={d} b={b} q={q}");
                        let lin = LinearBarrier::new(slope, d, b)?;
                        let sf = ScaleFunction::new(&m, q)?;
                        let g = query(&m, DrawdownFunction::linear(slope, d), 0.0, b)?;
                        w.rel(g.up_exit(q)?.value, linear::up_exit(&sf, &lin)?, || format!("up {}", here()));
                        for v in [0.0, 0.25] {
                            let tc = linear::triple(&m, q, v, &lin, Method::ClosedForm, TOL)?.value;
                            w.rel(g.triple(q, v, 0.0)?.value, tc, || format!("triple v={v} {}", here()));
                        }
                        if m.sigma() > 0.0 {
                            let cc = linear::creeping(&sf, &lin, TOL)?.value;
                            w.rel(g.creeping(q, false)?.value, cc, || format!("creep {}", here()));
                        }
                        let (lo, hi) = lin.support();
                        for y in interior(lo, hi, 0.0) {
                            let pc = linear::potential_density(&sf, &lin, y)?;
                            w.rel(g.potential_density(q, y)?.value, pc, || format!("potential y={y:.3} {}", here()));
                        }
                        let mc = g.potential_mass_check(q)?;
                        mass.abs(mc.potential_side, mc.exit_side, || format!("linear {}", here()));
                    }
                }
            }
        }
    }
    Ok((w.ok(), w.summary("general vs linear closed forms")))
}

fn criterion_4(mass: &mut Worst) -> Result<(bool, String)> {
    let mut w = Worst::new(1e-7);
    let mut lim = Worst::new(1e-8);
    let mut tot = Worst::new(1e-6);
    for (tag, m) in models() {
        for d in [0.5, 1.0] {
            for q in [0.5, 2.0] {
                let sf = ScaleFunction::new(&m, q)?;
                for b in [1.0, 3.0] {
                    let here = || format!("{tag} d={d} b={b} q={q}");
                    let g = query(&m, DrawdownFunction::reflected(d), 0.0, b)?;
                    w.rel(g.up_exit(q)?.value, reflected::up_exit(&sf, d, b)?, || format!("up {}", here()));
                    for (v, r) in [(0.0, 0.0), (0.25, 0.3), (0.25, -0.5)] {
                        let tc = reflected::triple(&m, q, v, r, d, b, Method::ClosedForm)?;
                        w.rel(g.triple(q, v, r)?.value, tc, || format!("triple v={v} r={r} {}", here()));
                    }
                    if m.sigma() > 0.0 {
                        w.rel(g.creeping(q, false)?.value, reflected::creeping(&sf, d, b)?, || format!("creep {}", here()));
                    }
                    for y in interior(-d, b, 0.0) {
                        let pc = reflected::potential_density(&sf, d, b, y)?;
                        w.rel(g.potential_density(q, y)?.value, pc, || format!("potential y={y:.3} {}", here()));
                    }
                    let mc = g.potential_mass_check(q)?;
                    mass.abs(mc.potential_side, mc.exit_side, || format!("reflected {}", here()));
                }
                let v = 0.25;
                let sv = ScaleFunction::tilted_from(&m, v, q - m.laplace_exponent(v), Method::ClosedForm)?;
                let far = 200.0 / reflected::max_rate(&sv, d)?;
                let bounded = reflected::triple(&m, q, v, -v, d, far, Method::ClosedForm)?;
                let unbounded = reflected::unbounded_transform(&m, q, v, d, Method::ClosedForm)?;
                lim.abs(bounded, unbounded, || format!("{tag} d={d} u={q} v={v}"));
                let dens = integrate(|z| reflected::reflected_density(&sf, d, z), 0.0, d, &[], QuadOptions::abs(1e-13))?;
                let law = reflected::reflected_at_exp_time(&sf, d)?;
                tot.abs(dens.value + law.atom + law.exit_probability, 1.0, || format!("{tag} d={d} q={q}"));
            }
        }
    }
    Ok((
        w.ok() && lim.ok() && tot.ok(),
        format!(
            "{}; {}; {}",
            w.summary("general vs reflected closed forms"),
            lim.summary("unbounded limit"),
            tot.summary("exp-time total probability")
        ),
    ))
}

fn z_line(out: &mut String, worst: &mut f64, name: &str, e: &LevelEstimates, formula: f64) {
    let z = e.extrapolated.z_score(formula);
    *worst = worst.max(z.abs());
    let _ = write!(out, " {name}={z:+.2}");
}

fn criterion_6() -> Result<(bool, String)> {
    let q = 1.0;
    let (x, b) = (0.0, 1.0);
    let edges = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for (tag, m) in [("bm", bm()), ("cpp", cpp())] {
        for (xt, xi) in [
            ("constant", DrawdownFunction::constant(-1.0)),
            ("linear", DrawdownFunction::linear(0.5, 1.0)),
            ("reflected", DrawdownFunction::reflected(1.0)),
        ] {
            let cfg = SimConfig::with_levels(vec![1e-3, 5e-4, 2.5e-4], 200_000, SEED);
            let g = ExitQuery::new(m.clone(), xi.clone(), x, b)?;
            let ens = simulate(&m, &xi, x, b, &cfg)?;
            let _ = write!(detail, " [{tag}/{xt}");
            let killed = TransformParams::killed(q);
            let up = estimate_transform(&ens, Selection::UpExit, killed)?;
            z_line(&mut detail, &mut worst, "up", &up, g.up_exit(q)?.value);
            let tr = estimate_transform(&ens, Selection::Drawdown, killed)?;
            z_line(&mut detail, &mut worst, "triple", &tr, g.triple(q, 0.0, 0.0)?.value);
            if m.sigma() > 0.0 {
                let cr = creep_fraction(&ens, q)?;
                z_line(&mut detail, &mut worst, "creep", &cr, g.creeping(q, false)?.value);
            }
            let bins = estimate_potential_histogram(&m, &xi, x, b, q, &cfg.clone(), &edges)?;
            for bin in &bins {
                let f = q * g.potential_mass_on(q, bin.lo, bin.hi)?.value;
                z_line(&mut detail, &mut worst, &format!("bin{}", bin.lo), &bin.mass, f);
            }
            detail.push(']');
        }
    }
    Ok((worst <= 3.5, format!("max |z| {worst:.2} (limit 3.5);{detail}")))
}

fn criterion_7() -> Result<(bool, String)> {
    let m = LevyModel::brownian(0.5, 1.0)?;
    let (d, q, n) = (1.0, 1.0, 10_000);
    let mut cfg = SimConfig::new(1e-5, n, SEED);
    cfg.q_killing = Some(q);
    // The upper level only truncates the maximum; P(max > 40) = exp(-40 k).
    let ens = simulate(&m, &DrawdownFunction::reflected(d), 0.0, 40.0, &cfg)?;
    let samples: Vec<f64> = ens.finest().iter().map(|r| r.max_at).collect();
    let truncated = ens.finest().iter().filter(|r| r.kind == EventKind::UpExit).count();
    let k = reflected::max_rate(&ScaleFunction::new(&m, q)?, d)?;
    let stat = ks_statistic(&samples, |s| 1.0 - (-k * s).exp());
    let crit = ks_critical_value(n, 0.01);
    Ok((
        stat < crit && truncated == 0,
        format!("KS statistic {stat:.4} vs critical {crit:.4} at 1%, n={n}, rate {k:.6}"),
    ))
}

fn criterion_8() -> Result<(bool, String)> {
    let dir = std::env::temp_dir().join(format!("drawdown-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let model = dir.join("jd.json");
    std::fs::write(&model, r#"{"mu": 0.5, "sigma": 0.7, "jumps": {"kind": "exp", "rate": 1.5, "alpha": 2.0}}"#)
        .expect("model file");
    let run = |threads: &str, which: &str| -> Vec<u8> {
        let out = Command::new(env!("CARGO_BIN_EXE_drawdown"))
            .args(["mc", "verify", "--which", which, "--xi", r#"{"kind":"linear","slope":0.5,"d":1.0}"#])
            .args(["--b", "1", "--q", "1", "--paths", "20000", "--dt", "2e-3", "--seed", "77"])
            .args(["--bins", "-1,-0.5,0,0.5,1", "--threads", threads, "--model"])
            .arg(&model)
            .output()
            .expect("run binary");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let mut same = true;
    let mut sizes = Vec::new();
    for which in ["triple", "potential"] {
        let base = run("1", which);
        sizes.push(base.len());
        for t in ["2", "8"] {
            same &= run(t, which) == base;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((same, format!("mc-verify reports (triple, potential; {sizes:?} bytes) identical across 1, 2, 8 threads: {same}")))
}

fn main() -> ExitCode {
    let mut mass = Worst::new(1e-6);
    let mut lines = Vec::new();
    let mut all = true;
    let mut record = |n: usize, t: Instant, r: Result<(bool, String)>| {
        let (ok, msg) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        let line = format!(
            "criterion {n}: {} ({:.1}s) {msg}",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push(line);
    };
    let t = Instant::now();
    record(1, t, criterion_1());
    let t = Instant::now();
    record(2, t, criterion_2(&mut mass));
    let t = Instant::now();
    record(3, t, criterion_3(&mut mass));
    let t = Instant::now();
    record(4, t, criterion_4(&mut mass));
    let t = Instant::now();
    let ok = mass.ok() && mass.count > 0;
    record(5, t, Ok((ok, mass.summary("mass balance over criteria 2-4"))));
    let t = Instant::now();
    record(6, t, criterion_6());
    let t = Instant::now();
    record(7, t, criterion_7());
    let t = Instant::now();
    record(8, t, criterion_8());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
