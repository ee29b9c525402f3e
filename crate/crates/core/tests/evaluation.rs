use dvrft::evaluation::{
    assemble_closed_loop, estimate_jmr, monte_carlo, performance_metric, simulate_closed_loop,
    step_references, ControllerClass, DistributedController, MonteCarloConfig,
};
use dvrft::ideal::build_ideal_controller;
use dvrft::identification::ControllerParametrization;
use dvrft::lti::{frequency_grid, Signal};
use dvrft::network::presets::{nine_node, two_node_coupled, TwoNodeParams};
use dvrft::network::{simulate_reference, sinusoid, white_noise, MultiSignal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ideal_controller_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for spec in [
        nine_node().unwrap(),
        two_node_coupled(&TwoNodeParams::default(), 0.2, 0.5).unwrap(),
    ] {
        let ctrl = build_ideal_controller(&spec).unwrap();
        let r = step_references(&mut rng, spec.nodes(), 100);
        let cls = assemble_closed_loop(&spec, &ctrl).unwrap();
        let jmr = estimate_jmr(
            &simulate_closed_loop(&cls, &r, None).unwrap().y,
            &simulate_reference(&spec, &r).unwrap(),
        )
        .unwrap();
        assert!(jmr <= 1e-12, "{jmr}");
        assert!(performance_metric(&spec, &ctrl, &frequency_grid(512)).unwrap() <= 1e-8);
    }
}

#[test]
fn median_metric_grows_with_noise() {
    let spec = nine_node().unwrap();
    let classes = vec![ControllerClass {
        label: "full".into(),
        param: ControllerParametrization::full(&spec).unwrap(),
    }];
    let medians: Vec<f64> = [0.0, 0.05, 0.1]
        .iter()
        .map(|&sigma_v| {
            let res = monte_carlo(&MonteCarloConfig {
                spec: spec.clone(),
                classes: classes.clone(),
                horizon: 100,
                sigma_u: 1.0,
                sigma_v,
                seed: 7,
                runs: 20,
                grid: frequency_grid(64),
                trim: None,
                step_horizon: 50,
            });
            res.summary("full").unwrap().median
        })
        .collect();
    assert!(medians[0] <= 1e-8, "{medians:?}");
    assert!(
        medians[0] <= medians[1] && medians[1] <= medians[2],
        "{medians:?}"
    );
}

#[test]
fn closed_loop_sinusoid_steady_state() {
    // a slightly detuned controller, so the loop is not the reference model
    let spec = nine_node().unwrap();
    let param = ControllerParametrization::full(&spec).unwrap();
    let mut rho = param.ideal_parameters(&spec).unwrap();
    for r in rho.iter_mut().flatten() {
        *r *= 0.9;
    }
    let ctrl = param.controller(&spec, &rho).unwrap();
    let cls = assemble_closed_loop(&spec, &ctrl).unwrap();
    let n = 600;
    for (w, input) in [(0.3, 0), (1.7, 4)] {
        let r = MultiSignal::new(
            (0..9)
                .map(|i| {
                    if i == input {
                        sinusoid(n, w, 0.0)
                    } else {
                        Signal::zeros(n)
                    }
                })
                .collect(),
        )
        .unwrap();
        let y = simulate_closed_loop(&cls, &r, None).unwrap().y;
        let h = cls.freq_response(w).unwrap();
        for i in 0..9 {
            let g = h[(i, input)];
            for t in n - 10..n {
                let want = g.norm() * (w * t as f64 + g.arg()).sin();
                assert!(
                    (y.channel(i).samples[t] - want).abs() <= 1e-6,
                    "node {i}, t {t}: {} vs {want}",
                    y.channel(i).samples[t]
                );
            }
        }
    }
}

#[test]
fn controller_json_round_trip_and_noise_input() {
    let spec = nine_node().unwrap();
    let ctrl = build_ideal_controller(&spec).unwrap();
    let json = ctrl.to_json_string(&spec, None).unwrap();
    let back = DistributedController::from_json_str(&spec, &json).unwrap();
    let cls = assemble_closed_loop(&spec, &back).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let r = MultiSignal::zeros(9, 80);
    let v = white_noise(&mut rng, 9, 80, 0.1);
    let out = simulate_closed_loop(&cls, &r, Some(&v)).unwrap();
    assert!(!out.diverged);
    assert!(out.y.max_abs() > 0.0 && out.u.max_abs() > 0.0);
}
