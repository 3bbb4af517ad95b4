use phasefield::constants::{amgm_factor, ConstantsConfig};
use phasefield::energy::{f_eps, phi};
use phasefield::experiments::{
    convergence_study, lp_distance, minimize_F, minimize_G, recovery_profile, study_point, BoundaryRule,
    ExperimentSpec, FMode, LimitData, Normalization, StepLimit,
};
use phasefield::{Grid, OptimizerConfig};
use std::sync::OnceLock;

fn limits() -> &'static LimitData {
    static L: OnceLock<LimitData> = OnceLock::new();
    L.get_or_init(|| LimitData::compute(&ConstantsConfig::default()).unwrap())
}

fn spec_with(a0: f64, b0: f64) -> ExperimentSpec {
    ExperimentSpec {
        a_rule: BoundaryRule::Const(a0),
        b_rule: BoundaryRule::Const(b0),
        a0,
        b0,
        ..Default::default()
    }
}

#[test]
fn free_minimum_is_a_well() {
    let r = minimize_F(0.1, 0.0, 1.0, FMode::Free, 16, &OptimizerConfig::default()).unwrap();
    assert!(r.energy < 1e-12, "{}", r.energy);
    assert!(r.profile.values().iter().all(|v| (v.abs() - 1.0).abs() < 1e-6));
}

#[test]
fn clamped_minimum_is_one_wall() {
    let alpha = limits().alpha;
    let r = minimize_F(0.025, 0.0, 1.0, FMode::Diagnostic, 32, &OptimizerConfig::default()).unwrap();
    assert!((r.energy - 2.0 * alpha).abs() / (2.0 * alpha) < 1e-6, "{} vs {}", r.energy, 2.0 * alpha);
}

#[test]
fn matching_wells_cost_nothing() {
    let spec = spec_with(-1.0, -1.0);
    let grid = spec.grid_for(0.05, limits().zeta(0.05)).unwrap();
    let r = minimize_G(0.05, &spec, grid, &[]).unwrap();
    assert!(r.energy < 1e-12, "{}", r.energy);

    let spec = ExperimentSpec { epsilons: vec![0.1, 0.05], ..spec };
    for row in convergence_study(&spec, limits()).unwrap() {
        let r = row.outcome.unwrap();
        assert_eq!(r.predicted, 0.0);
        assert!(r.direct_min < 1e-12 && r.recovery_energy < 1e-12);
        assert!(r.inferred.jumps.is_empty());
    }
}

#[test]
fn pincer_prefers_a_boundary_layer() {
    let l = limits();
    let spec = spec_with(-1.0, 1.0);
    let r = study_point(0.025, &spec, l).unwrap();
    let beta1 = l.beta(1.0).unwrap();
    assert!(r.direct_min < 2.0 * l.alpha);
    assert!((r.direct_min - beta1).abs() / beta1 < 0.05);
    assert!(r.direct_min <= r.recovery_energy + 1e-9);
    assert!(r.inferred.jumps.is_empty());
    assert_eq!(r.normalization(), Normalization::Beta);
}

#[test]
fn one_jump_recovery_costs_two_alpha_at_every_eps() {
    let l = limits();
    let h_phi = phi(&l.interior).unwrap();
    let u = StepLimit::new(0.0, 1.0, -1.0, vec![0.5]).unwrap();
    let mut dist = Vec::new();
    for eps in [0.02f64, 0.01, 0.005] {
        let grid = Grid::new(0.0, 1.0, (64.0 / eps).ceil() as usize).unwrap();
        let rec = recovery_profile(&u, eps, -1.0, 1.0, l, grid).unwrap();
        let e = f_eps(&rec, eps).unwrap();
        assert!((e - amgm_factor() * h_phi).abs() / e < 1e-6, "eps {eps}: {e}");
        dist.push(lp_distance(&rec, &u, 2.0));
    }
    assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
}

#[test]
fn overlapping_layers_are_reported() {
    let l = limits();
    let u = StepLimit::new(0.0, 0.1, -1.0, vec![0.05]).unwrap();
    let grid = Grid::new(0.0, 0.1, 400).unwrap();
    assert!(recovery_profile(&u, 0.05, -1.0, 1.0, l, grid).is_err());
    let elsewhere = Grid::new(0.0, 1.0, 400).unwrap();
    assert!(recovery_profile(&u, 0.001, -1.0, 1.0, l, elsewhere).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        ExperimentSpec { epsilons: vec![0.1, 0.2], ..Default::default() },
        ExperimentSpec { epsilons: vec![], ..Default::default() },
        ExperimentSpec { a: 1.0, b: 0.0, ..Default::default() },
        ExperimentSpec { b_rule: BoundaryRule::Const(0.0), ..Default::default() },
        ExperimentSpec { p_norm: 9.0, ..Default::default() },
    ];
    for s in bad {
        assert!(s.validate().is_err(), "{s:?}");
    }
    let approach = ExperimentSpec {
        b_rule: BoundaryRule::Approach { v0: 1.0, rate: -2.0 },
        ..Default::default()
    };
    approach.validate().unwrap();
    assert_eq!(approach.b_rule.at(0.1), 0.8);
}

#[test]
fn default_study_is_stable_and_sandwiched() {
    let rows: Vec<_> = convergence_study(&ExperimentSpec::default(), limits())
        .unwrap()
        .into_iter()
        .map(|r| r.outcome.unwrap())
        .collect();
    for r in &rows {
        assert!(r.direct_min <= r.recovery_energy + 1e-9, "eps {}", r.eps);
        assert!(r.converged);
    }
    let n = rows.len();
    assert_eq!(rows[n - 2].inferred, rows[n - 1].inferred);
    let lp: Vec<f64> = rows.iter().map(|r| r.lp_recovery).collect();
    assert!(lp.windows(2).all(|w| w[1] < w[0]), "{lp:?}");
}
