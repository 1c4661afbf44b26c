use proptest::prelude::*;

use pdflow::hvac::{
    hvac_vector_field, steady_state_constraint, HvacState, HvacSystem, HvacTaus, ThermalNetwork,
    WelfareParams,
};
use pdflow::integrator::{simulate, IntegratorOptions};
use pdflow::interconnect::{composed_vector_field, ComposedSystem, FullState};
use pdflow::problem::{lagrangian_gradient, Vector};
use pdflow::random::{random_qp, rng, InstanceSpec};
use pdflow::switched::{ActiveSet, SwitchEvent, SwitchKind, SwitchLedger};
use pdflow::trajectory::Trajectory;

fn qp_system(seed: u64) -> (ComposedSystem, FullState) {
    let inst = random_qp(&mut rng(seed), &InstanceSpec::default());
    let sys = ComposedSystem::with_diagonal_taus(
        inst.data.problem().unwrap(),
        &inst.tau_x,
        &inst.tau_lambda,
        &inst.tau_mu,
    )
    .unwrap();
    let init = FullState::new(&sys, inst.x0, inst.lambda0, inst.mu0).unwrap();
    (sys, init)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steady_state_ignores_zone_coupling(r in prop::collection::vec(1.0f64..100.0, 6)) {
        let base = ThermalNetwork::reference(4);
        let mut coupled = base.clone();
        let mut k = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                coupled.r_zone[i][j] = r[k];
                coupled.r_zone[j][i] = r[k];
                k += 1;
            }
        }
        prop_assert_eq!(steady_state_constraint(&base), steady_state_constraint(&coupled));
    }

    #[test]
    fn building_field_matches_composed_field(
        t in prop::collection::vec(15.0f64..27.0, 4),
        q in 0.0f64..40.0,
        lambda in -20.0f64..40.0,
        mu in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..3.0], 8),
        tau in 0.5f64..2.0,
    ) {
        let sys = HvacSystem::new(ThermalNetwork::reference(4), WelfareParams::reference(4), HvacTaus::uniform(4, tau)).unwrap();
        let state = HvacState {
            t: Vector::from_vec(t),
            q,
            lambda,
            mu_l: Vector::from_column_slice(&mu[..4]),
            mu_h: Vector::from_column_slice(&mu[4..]),
        };
        let full = state.to_full(&sys).unwrap();
        // σ may zero some multipliers; compare from the same state
        let state = HvacState::from_full(&full).unwrap();
        let explicit = hvac_vector_field(&state, &sys).unwrap();
        let generic = composed_vector_field(sys.composed(), &full, &Vector::zeros(5)).unwrap();
        let mut x_dot = explicit.t.clone().insert_row(4, explicit.q);
        x_dot -= &generic.x_dot;
        prop_assert!(x_dot.amax() <= 1e-12);
        prop_assert!((explicit.lambda - generic.lambda_dot[0]).abs() <= 1e-12);
        for i in 0..4 {
            prop_assert!((explicit.mu_l[i] - generic.mu_dot[i]).abs() <= 1e-12);
            prop_assert!((explicit.mu_h[i] - generic.mu_dot[4 + i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn bitmask_round_trip(mask in 0u64..(1 << 20)) {
        let set = ActiveSet::from_bitmask(mask);
        prop_assert_eq!(set.to_bitmask(), mask);
        prop_assert_eq!(set.len() as u32, mask.count_ones());
    }

    #[test]
    fn ledger_csv_round_trip(
        events in prop::collection::vec((0.0f64..100.0, 0usize..20, any::<bool>(), 0.0f64..10.0, 0.0f64..10.0), 0..12)
    ) {
        let ledger = SwitchLedger {
            events: events
                .into_iter()
                .map(|(time, index, act, before, after)| SwitchEvent {
                    time,
                    index,
                    kind: if act { SwitchKind::Activation } else { SwitchKind::Deactivation },
                    storage_before: before,
                    storage_after: after,
                })
                .collect(),
        };
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        prop_assert_eq!(SwitchLedger::read_csv(buf.as_slice()).unwrap(), ledger);
    }

    #[test]
    fn lagrangian_gradient_is_affine_in_multipliers(seed in 0u64..1000, a in 0.0f64..2.0) {
        let inst = random_qp(&mut rng(seed), &InstanceSpec::default());
        let problem = inst.data.problem().unwrap();
        let (m, p) = (problem.m(), problem.p());
        let x = inst.x0.clone();
        let l1 = Vector::from_fn(m, |i, _| i as f64 - 0.5);
        let l2 = Vector::from_fn(m, |i, _| 1.0 + i as f64);
        let m1 = Vector::from_fn(p, |i, _| 0.3 * i as f64);
        let m2 = Vector::from_fn(p, |i, _| 1.0 - 0.1 * i as f64);
        let grad = |l: &Vector, mu: &Vector| lagrangian_gradient(&problem, &x, l, mu).unwrap().0;
        let g0 = grad(&Vector::zeros(m), &Vector::zeros(p));
        let lhs = grad(&(&l1 * a + &l2), &(&m1 * a + &m2)) - &g0;
        let rhs = (grad(&l1, &m1) - &g0) * a + (grad(&l2, &m2) - &g0);
        prop_assert!((lhs - rhs).amax() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_deterministic(seed in 0u64..1000) {
        let (sys, init) = qp_system(seed);
        let opts = IntegratorOptions { horizon: 5.0, ..Default::default() };
        let a = simulate(&sys, &init, &opts).unwrap();
        let b = simulate(&sys, &init, &opts).unwrap();
        prop_assert_eq!(&a, &b);
    }

    #[test]
    fn trajectory_csv_round_trip(seed in 0u64..1000) {
        let (sys, init) = qp_system(seed);
        let opts = IntegratorOptions { horizon: 3.0, ..Default::default() };
        let traj = simulate(&sys, &init, &opts).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(buf.as_slice(), traj.tau_mu.clone(), traj.options, traj.ledger.clone()).unwrap();
        prop_assert_eq!(back.samples.len(), traj.samples.len());
        for (x, y) in back.samples.iter().zip(&traj.samples) {
            prop_assert_eq!(x.t, y.t);
            prop_assert_eq!(&x.state, &y.state);
            prop_assert_eq!(x.storage, y.storage);
        }
    }
}
