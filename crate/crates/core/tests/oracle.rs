//! Closed-form amplitudes against direct RK4 integration of the no-jump
//! equations.

use cascade_sim::analytic::{amplitudes_driven, amplitudes_driven_via, target_branch, Protocol, Schedule, TargetBranch};
use cascade_sim::dynamics::{integrate, Grid};
use cascade_sim::{SubsystemParams, SystemParams};
use proptest::prelude::*;

fn sub() -> impl Strategy<Value = SubsystemParams> {
    (1.0f64..30.0, 1.0f64..30.0, 300.0f64..3000.0, 0.1f64..1.0, 0.0f64..0.5)
        .prop_map(|(g, omega, delta, kappa, loss)| SubsystemParams::new(g, omega, delta, kappa, loss))
}

fn params() -> impl Strategy<Value = SystemParams> {
    (sub(), sub(), 0.0f64..std::f64::consts::TAU).prop_map(|(a, b, phi)| SystemParams::new(a, b, phi).unwrap())
}

fn schedule() -> impl Strategy<Value = Schedule> {
    prop_oneof![
        Just(Schedule::always_on()),
        (5.0f64..45.0).prop_map(|t| Schedule::switch_off_at(t).unwrap()),
    ]
}

fn max_deviation(p: &SystemParams, sched: Schedule, t_max: f64) -> f64 {
    let numeric = integrate(p, sched, Grid::new(t_max, 1e-3).unwrap()).unwrap();
    let protocol = Protocol::new(p, sched);
    numeric
        .iter()
        .step_by(97)
        .chain(numeric.last())
        .map(|s| s.max_abs_diff(&protocol.state_at(s.t).unwrap()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_integration(p in params(), sched in schedule()) {
        let dev = max_deviation(&p, sched, 50.0);
        prop_assert!(dev < 1e-8, "deviation {dev:e}");
    }
}

#[test]
fn baseline_matches_integration() {
    let p = SystemParams::symmetric(SubsystemParams::new(10.0, 10.0, 1000.0, 0.9, 0.1), 0.0).unwrap();
    assert!(max_deviation(&p, Schedule::switch_off_at(28.32).unwrap(), 100.0) < 1e-10);
    assert!(max_deviation(&p, Schedule::always_on(), 100.0) < 1e-10);
}

/// g = Ω with g²/Δ = 𝒦/4 makes Λ vanish: both subsystems critically damped.
fn critical() -> SystemParams {
    let g = 250.0f64.sqrt();
    SystemParams::symmetric(SubsystemParams::new(g, g, 1000.0, 0.9, 0.1), 0.3).unwrap()
}

#[test]
fn critical_damping_uses_confluent_route() {
    let p = critical();
    assert_eq!(target_branch(&p), TargetBranch::Confluent);
    assert!(max_deviation(&p, Schedule::always_on(), 50.0) < 1e-8);
    assert!(max_deviation(&p, Schedule::switch_off_at(7.5).unwrap(), 50.0) < 1e-8);
}

#[test]
fn near_critical_damping_matches_integration() {
    let g = 250.0f64.sqrt() * (1.0 + 1e-6);
    let a = SubsystemParams::new(g, g, 1000.0, 0.9, 0.1);
    let b = SubsystemParams::new(g * (1.0 + 1e-7), g, 1000.0, 0.9, 0.1);
    let p = SystemParams::new(a, b, 0.0).unwrap();
    assert!(max_deviation(&p, Schedule::always_on(), 50.0) < 1e-8);
}

#[test]
fn equal_branch_is_limit_of_general() {
    let base = SubsystemParams::new(10.0, 10.0, 1000.0, 0.9, 0.1);
    let equal = SystemParams::symmetric(base, 0.4).unwrap();
    assert_eq!(target_branch(&equal), TargetBranch::EqualParameters);
    for eps in [1e-6, 1e-7, 1e-8] {
        let b = SubsystemParams {
            g: base.g * (1.0 + eps),
            kappa: base.kappa * (1.0 - eps),
            ..base
        };
        let perturbed = SystemParams::new(base, b, 0.4).unwrap();
        assert_eq!(target_branch(&perturbed), TargetBranch::General);
        for t in [0.5, 5.0, 28.32, 60.0] {
            let e = amplitudes_driven(&equal, t).unwrap();
            let g = amplitudes_driven(&perturbed, t).unwrap();
            assert!(e.max_abs_diff(&g) < 1e-5, "eps={eps} t={t}: {:e}", e.max_abs_diff(&g));
        }
    }
}

#[test]
fn all_branches_agree_away_from_singularities() {
    let p = SystemParams::symmetric(SubsystemParams::new(10.0, 10.0, 1000.0, 0.9, 0.1), 0.0).unwrap();
    for t in [0.1, 3.0, 28.32, 80.0] {
        let eq = amplitudes_driven_via(&p, t, TargetBranch::EqualParameters).unwrap();
        let cf = amplitudes_driven_via(&p, t, TargetBranch::Confluent).unwrap();
        assert!(eq.max_abs_diff(&cf) < 1e-12, "t={t}");
    }
}
