use netcap::adversary::AdversaryError;
use netcap::controllers::ControllerSpec;
use netcap::dynamics::{DisturbanceSpec, ObservationSpec};
use netcap::function_space::PlantFunction;
use netcap::graph::GraphSpec;
use netcap::harness::{run_experiment, write_csv, ExperimentConfig, Verdict};
use netcap::Error;
use proptest::prelude::*;

fn cfg(n: usize, a: f64, controller: ControllerSpec, seed: u64, horizon: usize) -> ExperimentConfig {
    ExperimentConfig {
        graph: GraphSpec::Cycle { n, weight: 1.0 },
        function: PlantFunction::BoundedPerturbedLinear { a, b: 0.0, amplitude: 0.2, frequency: 3.0 },
        x0: (0..n).map(|i| i as f64 * 0.3 - 0.5).collect(),
        horizon,
        controller,
        disturbance: DisturbanceSpec::uniform(0.05, 1),
        observation: ObservationSpec::Direct { d0: 0.02, seed: 2 },
        seed: Some(seed),
        divergence_cap: None,
        stable_cap: None,
        adversary: None,
    }
}

#[test]
fn csv_round_trips_the_log() {
    let out = run_experiment(&cfg(3, 1.5, ControllerSpec::LocalFlow, 4, 30)).unwrap();
    let csv = write_csv(&out);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (t, i): (usize, usize) = (f[0].parse().unwrap(), f[1].parse::<usize>().unwrap() - 1);
        assert_eq!(f[2].parse::<f64>().unwrap(), out.log.x(t)[i]);
        if t < out.log.t() {
            assert_eq!(f[3].parse::<f64>().unwrap(), out.log.u(t)[i]);
            assert_eq!(f[4].parse::<f64>().unwrap(), out.log.z(t)[i]);
            assert_eq!(f[5].parse::<f64>().unwrap(), out.disturbances[t][i]);
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(Error::Config("x".into()).exit_code(), 2);
    assert_eq!(Error::Invariant("x".into()).exit_code(), 3);
    assert_eq!(Error::Adversary(AdversaryError::Infeasible("x".into())).exit_code(), 3);
    assert_eq!(Error::Adversary(AdversaryError::NoArcs).exit_code(), 2);
}

#[test]
fn every_controller_runs_on_the_cycle() {
    for c in [
        ControllerSpec::Zero,
        ControllerSpec::NetworkFlow { epsilon: 1e-3 },
        ControllerSpec::CycleGlobal,
        ControllerSpec::LocalFlow,
        ControllerSpec::MaxEnhanced,
    ] {
        let out = run_experiment(&cfg(4, 1.2, c.clone(), 0, 100)).unwrap();
        assert_eq!(out.summary.controller, c.name());
        assert!(out.summary.tail_sup <= out.summary.sup_state);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn run_invariants(n in 1usize..5, a in 0.2f64..3.5, seed in 0u64..1000, which in 0usize..4) {
        let c = [ControllerSpec::Zero, ControllerSpec::NetworkFlow { epsilon: 1e-3 }, ControllerSpec::CycleGlobal, ControllerSpec::LocalFlow][which].clone();
        let out = run_experiment(&cfg(n, a, c, seed, 120)).unwrap();
        let s = &out.summary;
        prop_assert!(s.tail_sup <= s.sup_state);
        prop_assert!(s.steps <= 120);
        prop_assert_eq!(out.log.states().len(), s.steps + 1);
        prop_assert!(out.disturbances.iter().flatten().all(|w| w.abs() <= 0.05));
        if s.verdict == Verdict::Diverged {
            prop_assert!(s.steps < 120);
        } else {
            prop_assert_eq!(s.steps, 120);
            prop_assert!(out.log.states().iter().flatten().all(|x| x.abs() <= s.divergence_cap));
        }
        if let Some(b) = s.bound {
            prop_assert!(b >= 0.05);
        }
    }
}
