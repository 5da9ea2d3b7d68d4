use proptest::prelude::*;

use switched_predictor::batch;
use switched_predictor::io::{read_trace_csv, write_trace_csv};
use switched_predictor::predictor::implicit_trace_from_samples;
use switched_predictor::presets::paper_config;
use switched_predictor::scenarios::{random_state_and_window, random_two_mode_system};
use switched_predictor::simulator::{simulate_closed_loop, SimConfig};
use switched_predictor::study::method_gap;
use switched_predictor::{Mode, Predictor, PredictorMethod, RunConfig, SwitchedSystem};

fn small(seed: u64) -> SwitchedSystem {
    random_two_mode_system(seed, 1.0, 1e-2).unwrap()
}

fn pair(sys: &SwitchedSystem) -> (Predictor, Predictor) {
    (
        Predictor::new(sys, PredictorMethod::Implicit).unwrap(),
        Predictor::new(sys, PredictorMethod::SemiExplicit).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mode_sequence_is_well_formed(seed in 0u64..10_000, amp in 0.0f64..3.0) {
        let sys = small(seed);
        let (x, u) = random_state_and_window(seed, 2, 1.0, sys.intervals(), amp);
        let (_, semi) = pair(&sys);
        if let Ok(p) = semi.semi_explicit(&x, &u, None) {
            let seq = p.sequence;
            prop_assert_eq!(seq.times.len(), seq.modes.len() + 1);
            prop_assert_eq!(seq.times[0], 0.0);
            prop_assert!((seq.times[seq.times.len() - 1] - sys.delay()).abs() < 1e-12);
            prop_assert!(seq.times.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(seq.modes.windows(2).all(|w| w[0] != w[1]));
            prop_assert_eq!(seq.modes[0], sys.partition().sigma_of(&x).unwrap());
        }
    }

    #[test]
    fn predictors_are_positively_homogeneous(seed in 0u64..10_000, c in 0.1f64..10.0) {
        // quadratic-argmax regions are cones, so scaling state and inputs
        // scales the prediction
        let sys = small(seed);
        let (x, u) = random_state_and_window(seed, 2, 1.0, sys.intervals(), 1.0);
        let xs = &x * c;
        let us: Vec<f64> = u.iter().map(|v| v * c).collect();
        let (imp, semi) = pair(&sys);
        let a = imp.predict(&x, &u).unwrap().value;
        let b = imp.predict(&xs, &us).unwrap().value;
        prop_assert!((&a * c - &b).norm() <= 1e-9 * (1.0 + b.norm()));
        if let (Ok(a), Ok(b)) = (semi.predict(&x, &u), semi.predict(&xs, &us)) {
            prop_assert!((&a.value * c - &b.value).norm() <= 1e-8 * (1.0 + b.value.norm()));
        }
    }

    #[test]
    fn crossing_free_gap_halves(seed in 0u64..10_000) {
        let sys = small(seed);
        let (x, u) = random_state_and_window(seed, 2, 1.0, sys.intervals(), 1.0);
        let (imp, semi) = pair(&sys);
        let crossing_free = match semi.semi_explicit(&x, &u, None) {
            Ok(p) => p.sequence.switches() == 0,
            Err(_) => false,
        };
        let trace = implicit_trace_from_samples(&sys, &x, 0.0, &u).unwrap();
        prop_assume!(crossing_free && trace.mode_at.iter().all(|m| *m == trace.mode_at[0]));
        let g1 = method_gap(&imp, &semi, &x, &u).unwrap();
        prop_assume!(g1 > 1e-10);
        let fine = sys.with_step(sys.step() / 2.0).unwrap();
        let uf: Vec<f64> = u.iter().flat_map(|v| [*v, *v]).collect();
        let (imp2, semi2) = pair(&fine);
        let g2 = method_gap(&imp2, &semi2, &x, &uf).unwrap();
        let ratio = g1 / g2;
        prop_assert!((1.5..=3.0).contains(&ratio), "ratio {ratio}, gaps {g1} {g2}");
    }

    #[test]
    fn zero_band_hysteresis_is_the_pure_law(seed in 0u64..10_000, cur in 1usize..=2) {
        let sys = small(seed);
        let (x, _) = random_state_and_window(seed, 2, 1.0, 1, 0.0);
        let part = sys.partition();
        prop_assert_eq!(
            part.sigma_hysteretic_with(&x, Mode::from_number(cur), 0.0),
            part.sigma_of(&x).unwrap()
        );
    }

    #[test]
    fn hysteresis_holds_inside_the_band(seed in 0u64..10_000, eps in 1e-4f64..0.5) {
        let sys = small(seed);
        let (x, _) = random_state_and_window(seed, 2, 1.0, 1, 0.0);
        let part = sys.partition();
        let win = part.sigma_of(&x).unwrap();
        let other = Mode::from_number(3 - win.number());
        let kept = part.sigma_hysteretic_with(&x, other, eps);
        let e = part.energies(&x);
        let margin = e[win.index()] - e[other.index()];
        let band = eps * e[other.index()].max(1.0);
        prop_assert_eq!(kept == other, margin <= band);
    }

    #[test]
    fn batch_matches_sequential(n in 0usize..500) {
        let f = |i: usize| (i as f64).sqrt().sin();
        prop_assert_eq!(batch::map_range(n, f), batch::map_range_seq(n, f));
        let items: Vec<usize> = (0..n).collect();
        prop_assert_eq!(batch::map_collect(&items, |i| f(*i)), batch::map_range_seq(n, f));
    }

    #[test]
    fn config_survives_json(horizon in 0.5f64..20.0, eps in 0.0f64..0.1) {
        let cfg = paper_config()
            .with_overrides(&[format!("simulation.horizon={horizon}"), format!("partition.hysteresis={eps}")])
            .unwrap();
        let back = RunConfig::from_json_str(&cfg.to_json_pretty()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_csv_round_trips(seed in 0u64..10_000) {
        let sys = random_two_mode_system(seed, 0.2, 1e-2).unwrap();
        let (x0, _) = random_state_and_window(seed, 2, 1.0, 1, 0.0);
        let cfg = SimConfig::new(sys.clone(), 2.0, x0);
        let res = simulate_closed_loop(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &sys, &res).unwrap();
        let back = read_trace_csv(buf.as_slice(), &cfg).unwrap();
        prop_assert_eq!(&back.states, &res.states);
        prop_assert_eq!(&back.inputs, &res.inputs);
        prop_assert_eq!(&back.modes, &res.modes);
        prop_assert_eq!(back.switches.len(), res.switches.len());
    }

    #[test]
    fn closed_loop_without_switching_matches_single_mode(seed in 0u64..10_000) {
        // two copies of the same mode: the switched loop is the plain LTI loop
        let base = random_two_mode_system(seed, 0.3, 1e-2).unwrap();
        let m = base.modes()[0].clone();
        let sys = base.with_modes(vec![m.clone(), m]).unwrap();
        let (x0, _) = random_state_and_window(seed, 2, 1.0, 1, 0.0);
        let a = simulate_closed_loop(&SimConfig::new(sys, 3.0, x0.clone())).unwrap();
        let b = simulate_closed_loop(&SimConfig::new(base.with_modes(vec![base.modes()[0].clone()]).unwrap(), 3.0, x0)).unwrap();
        prop_assert!(a.switches.is_empty());
        for (p, q) in a.states.iter().zip(&b.states) {
            prop_assert!((p - q).norm() <= 1e-12 * (1.0 + q.norm()));
        }
    }
}
