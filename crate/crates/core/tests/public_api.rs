use drawdown_core::drawdown_identities::{DrawdownFunction, ExitQuery};
use drawdown_core::levy_model::LevyModel;
use drawdown_core::simulator::{estimate_transform, simulate, Selection, SimConfig, TransformParams};
use drawdown_core::Error;

fn jump_diffusion() -> LevyModel {
    LevyModel::from_json(r#"{"mu": 0.5, "sigma": 0.7, "jumps": {"kind": "exp", "rate": 1.5, "alpha": 2.0}}"#).unwrap()
}

#[test]
fn model_json_round_trip() {
    let m = jump_diffusion();
    let back = LevyModel::from_json(&m.to_json()).unwrap();
    for l in [0.0, 0.5, 3.0] {
        assert_eq!(m.laplace_exponent(l), back.laplace_exponent(l));
    }
}

#[test]
fn linear_barrier_two_ways() {
    let m = jump_diffusion();
    let xi = DrawdownFunction::from_json(r#"{"kind":"linear","slope":0.3,"d":1.0}"#).unwrap();
    let q = ExitQuery::new(m.clone(), xi, 0.0, 2.0).unwrap();
    let general = q.up_exit(1.0).unwrap();
    let piecewise = DrawdownFunction::piecewise_linear(vec![(0.0, -1.0), (2.0, -0.4)]).unwrap();
    let other = ExitQuery::new(m, piecewise, 0.0, 2.0).unwrap().up_exit(1.0).unwrap();
    assert!((general.value - other.value).abs() < 1e-8, "{} vs {}", general.value, other.value);
    assert!(general.abs_error_estimate < 1e-6);
}

#[test]
fn exit_transforms_partition_without_killing() {
    let m = jump_diffusion();
    let q = ExitQuery::new(m, DrawdownFunction::reflected(1.0), 0.0, 1.0).unwrap();
    let total = q.up_exit(0.5).unwrap().value + q.triple(0.5, 0.0, 0.0).unwrap().value;
    assert!(total < 1.0 && total > 0.0);
    // Without killing the strip is left almost surely.
    let exact = q.up_exit(0.0).unwrap().value + q.triple(0.0, 0.0, 0.0).unwrap().value;
    assert!((exact - 1.0).abs() < 1e-8, "{exact}");
}

#[test]
fn simulation_tracks_formula() {
    let m = jump_diffusion();
    let xi = DrawdownFunction::constant(-1.0);
    let cfg = SimConfig::new(2e-3, 20_000, 11);
    let ens = simulate(&m, &xi, 0.0, 1.0, &cfg).unwrap();
    let est = estimate_transform(&ens, Selection::UpExit, TransformParams::killed(1.0)).unwrap();
    let want = ExitQuery::new(m, xi, 0.0, 1.0).unwrap().up_exit(1.0).unwrap().value;
    assert!(est.extrapolated.z_score(want).abs() < 4.0);
}

#[test]
fn degenerate_boundary_rejected() {
    let err = ExitQuery::new(jump_diffusion(), DrawdownFunction::linear(2.0, 1.0), 0.0, 2.0).unwrap_err();
    assert!(matches!(err, Error::DrawdownDegenerate { .. }), "{err:?}");
}
