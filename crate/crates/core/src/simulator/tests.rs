use super::*;

fn cpp() -> LevyModel {
    LevyModel::exp_jumps(2.0, 0.0, 1.0, 1.0).unwrap()
}

#[test]
fn config_validation() {
    assert!(SimConfig::new(0.0, 10, 1).validate().is_err());
    assert!(SimConfig::new(1e-3, 0, 1).validate().is_err());
    assert!(SimConfig::with_levels(vec![1e-3, 2e-3], 10, 1).validate().is_err());
    assert!(SimConfig::with_levels(vec![1e-3, 3e-4], 10, 1).validate().is_err());
    assert!(SimConfig::with_levels(vec![1e-3, 5e-4, 2.5e-4], 10, 1).validate().is_ok());
}

#[test]
fn pure_drift_reaches_upper_level_exactly() {
    let m = LevyModel::new(0.5, 0.0, crate::levy_model::JumpSpec::None).unwrap();
    let xi = DrawdownFunction::constant(-1.0);
    let ens = simulate(&m, &xi, 0.0, 2.0, &SimConfig::new(1e-2, 20, 3)).unwrap();
    for r in ens.finest() {
        assert_eq!(r.kind, EventKind::UpExit);
        assert!((r.time - 4.0).abs() < 1e-12);
    }
}

#[test]
fn symmetric_brownian_exit() {
    let m = LevyModel::brownian(0.0, 1.0).unwrap();
    let xi = DrawdownFunction::constant(-1.0);
    let cfg = SimConfig::new(1e-3, 4000, 11);
    let ens = simulate(&m, &xi, 0.0, 1.0, &cfg).unwrap();
    let e = estimate_transform(&ens, Selection::UpExit, TransformParams::killed(0.0)).unwrap();
    let p = e.extrapolated;
    assert!((p.mean - 0.5).abs() < 3.0 * p.se, "{p:?}");
    for r in ens.finest().iter().filter(|r| r.kind == EventKind::UpExit) {
        assert_eq!((r.x_at, r.max_at, r.overshoot), (1.0, 1.0, 0.0));
    }
    let total: f64 = ens.kind_fractions().iter().map(|k| k.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_records() {
    let m = LevyModel::exp_jumps(1.0, 0.5, 1.0, 2.0).unwrap();
    let xi = DrawdownFunction::linear(0.5, 1.0);
    let mut cfg = SimConfig::with_levels(vec![2e-3, 1e-3], 300, 99);
    cfg.threads = Some(1);
    let a = simulate(&m, &xi, 0.0, 1.0, &cfg).unwrap();
    cfg.threads = Some(3);
    let b = simulate(&m, &xi, 0.0, 1.0, &cfg).unwrap();
    assert_eq!(a.levels, b.levels);
    cfg.seed = 100;
    let c = simulate(&m, &xi, 0.0, 1.0, &cfg).unwrap();
    assert_ne!(a.levels, c.levels);
}

#[test]
fn no_creeping_without_gaussian_part() {
    let ens = simulate(&cpp(), &DrawdownFunction::reflected(0.5), 0.0, 2.0, &SimConfig::new(1e-3, 500, 5)).unwrap();
    assert!(ens.finest().iter().all(|r| r.kind != EventKind::DrawdownCreep));
    let c = creep_fraction(&ens, 1.0).unwrap();
    assert_eq!(c.extrapolated.mean, 0.0);
    for r in ens.finest().iter().filter(|r| r.kind == EventKind::DrawdownJump) {
        assert!(r.overshoot > 0.0);
        assert!((r.x_at + r.overshoot - (r.max_at - 0.5)).abs() < 1e-12);
    }
}

#[test]
fn too_few_events_is_an_error() {
    let m = LevyModel::brownian(5.0, 0.1).unwrap();
    let ens = simulate(&m, &DrawdownFunction::constant(-3.0), 0.0, 0.5, &SimConfig::new(1e-3, 200, 1)).unwrap();
    let err = estimate_transform(&ens, Selection::Drawdown, TransformParams::killed(0.0)).unwrap_err();
    assert_eq!(err.code(), "insufficient-events");
}

#[test]
fn killing_censors_at_exponential_time() {
    let m = LevyModel::brownian(0.0, 1.0).unwrap();
    let mut cfg = SimConfig::new(1e-3, 2000, 8);
    cfg.q_killing = Some(4.0);
    let ens = simulate(&m, &DrawdownFunction::constant(-2.0), 0.0, 2.0, &cfg).unwrap();
    let cens: Vec<_> = ens.finest().iter().filter(|r| r.kind == EventKind::Censored).collect();
    assert!(cens.len() > 1500);
    let mean_t = cens.iter().map(|r| r.time).sum::<f64>() / cens.len() as f64;
    assert!((mean_t - 0.25).abs() < 0.03, "{mean_t}");
}

#[test]
fn coarser_grids_miss_more_draw_downs() {
    let m = LevyModel::brownian(0.5, 1.0).unwrap();
    let cfg = SimConfig::with_levels(vec![4e-2, 1e-2, 2.5e-3], 3000, 21);
    let ens = simulate(&m, &DrawdownFunction::reflected(0.5), 0.0, 1.0, &cfg).unwrap();
    let e = estimate_transform(&ens, Selection::UpExit, TransformParams::killed(0.0)).unwrap();
    let p: Vec<f64> = e.per_level.iter().map(|x| x.mean).collect();
    assert!(p[0] >= p[1] && p[1] >= p[2], "{p:?}");
}

#[test]
fn hitting_mode_continues_below_barrier() {
    let m = LevyModel::exp_jumps(1.0, 0.5, 2.0, 2.0).unwrap();
    let mut cfg = SimConfig::new(1e-3, 500, 4);
    cfg.mode = Mode::Hitting { lower: -3.0 };
    let ens = simulate(&m, &DrawdownFunction::linear(0.5, 1.0), 0.0, 1.0, &cfg).unwrap();
    let kinds: Vec<EventKind> = ens.finest().iter().map(|r| r.kind).collect();
    assert!(kinds.iter().all(|k| matches!(k, EventKind::UpExit | EventKind::Hit | EventKind::LowerExit)));
    assert!(kinds.contains(&EventKind::Hit));
}
