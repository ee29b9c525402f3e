use dvrft::lti::{filter, frequency_grid, RationalTF, Signal};
use dvrft::network::presets::{nine_node, two_node, two_node_coupled, TwoNodeParams};
use dvrft::network::{
    plant_graph, plant_transfer_eval, reference_transfer_eval, simulate_plant, simulate_reference,
    sinusoid, validate_network, white_noise, Graph, MultiSignal, NetworkSpec, ReferenceNodeSpec,
    SubsystemSpec,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn single_node(g: RationalTF, t: RationalTF) -> NetworkSpec {
    NetworkSpec::new(
        Graph::new(1, []).unwrap(),
        vec![SubsystemSpec {
            g,
            w: BTreeMap::new(),
            f: BTreeMap::new(),
        }],
        vec![ReferenceNodeSpec::decoupled(t)],
    )
    .unwrap()
}

/// Steady-state response of channel `out` to `sin(ω t)` on channel `inp`.
fn steady_state(h: Complex64, omega: f64, t: usize) -> f64 {
    (h * Complex64::from_polar(1.0, omega * t as f64)).im
}

#[test]
fn zero_input_zero_output() {
    let spec = nine_node().unwrap();
    let y = simulate_plant(&spec, &MultiSignal::zeros(9, 50), None).unwrap();
    assert_eq!(y.max_abs(), 0.0);
    let yd = simulate_reference(&spec, &MultiSignal::zeros(9, 50)).unwrap();
    assert_eq!(yd.max_abs(), 0.0);
}

#[test]
fn single_node_step() {
    let spec = single_node(
        RationalTF::first_order(0.4, 0.6),
        RationalTF::first_order(0.4, 0.6),
    );
    let u = MultiSignal::new(vec![Signal::step(40, 1.0)]).unwrap();
    let y = simulate_plant(&spec, &u, None).unwrap();
    for (t, v) in y.channel(0).samples.iter().enumerate() {
        assert!((v - (1.0 - 0.6_f64.powi(t as i32))).abs() < 1e-14);
    }
}

#[test]
fn two_node_sinusoid_matches_frequency_oracle() {
    let spec = two_node(&TwoNodeParams::default()).unwrap();
    let omega = 0.9;
    let n = 400;
    let u = MultiSignal::new(vec![sinusoid(n, omega, 0.0), Signal::zeros(n)]).unwrap();
    let y = simulate_plant(&spec, &u, None).unwrap();
    let h = plant_transfer_eval(&spec, omega).unwrap();
    for t in 200..n {
        for i in 0..2 {
            let expect = steady_state(h[(i, 0)], omega, t);
            assert!((y.channel(i).samples[t] - expect).abs() < 1e-6);
        }
    }
}

#[test]
fn two_node_dc_gain_hand_solve() {
    let p = TwoNodeParams::default();
    let spec = two_node(&p).unwrap();
    let g: Vec<f64> = (0..2).map(|i| p.c[i] / (1.0 - p.a[i])).collect();
    let w: Vec<f64> = (0..2).map(|i| p.d[i] / (1.0 - p.a[i])).collect();
    let det = 1.0 - w[0] * w[1];
    let expect = [
        [g[0] / det, w[0] * g[1] / det],
        [w[1] * g[0] / det, g[1] / det],
    ];
    let h = plant_transfer_eval(&spec, 0.0).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((h[(i, j)] - Complex64::new(expect[i][j], 0.0)).norm() < 1e-13);
        }
    }
}

#[test]
fn no_edges_gives_diagonal() {
    let spec = single_node(
        RationalTF::first_order(1.0, 0.3),
        RationalTF::first_order(0.4, 0.6),
    );
    let h = plant_transfer_eval(&spec, 0.4).unwrap();
    let g = RationalTF::first_order(1.0, 0.3)
        .freq_response(0.4)
        .unwrap();
    assert!((h[(0, 0)] - g).norm() < 1e-15);
}

#[test]
fn nine_node_dc_matches_brute_force_inverse() {
    let spec = nine_node().unwrap();
    let poles = dvrft::network::presets::nine_node_poles();
    // Explicit inverse of I - W_I at q = 1.
    let mut m = DMatrix::<f64>::identity(9, 9);
    for (i, j) in spec.graph().directed_edges() {
        m[(i, j)] -= 0.1 / (1.0 - poles[i]);
    }
    let inv = m.try_inverse().unwrap();
    let h = plant_transfer_eval(&spec, 0.0).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let e = inv[(i, j)] / (1.0 - poles[j]);
            assert!((h[(i, j)].re - e).abs() < 1e-12 && h[(i, j)].im.abs() < 1e-12);
        }
    }
    // Route through the signal-graph solve as well.
    let hg = plant_graph(&spec).freq_response(0.3).unwrap();
    let hd = plant_transfer_eval(&spec, 0.3).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            assert!((hg[(i, j)] - hd[(i, j)]).norm() < 1e-12);
        }
    }
}

#[test]
fn decoupled_reference_is_per_node_filter() {
    let spec = nine_node().unwrap();
    let r = MultiSignal::new((0..9).map(|k| Signal::step(30, 0.1 * k as f64)).collect()).unwrap();
    let yd = simulate_reference(&spec, &r).unwrap();
    for i in 0..9 {
        let expect = filter(spec.t(i), r.channel(i)).unwrap();
        for (a, b) in yd.channel(i).samples.iter().zip(&expect.samples) {
            assert!((a - b).abs() < 1e-14);
        }
    }
    let h = reference_transfer_eval(&spec, 0.5).unwrap();
    let t = spec.t(0).freq_response(0.5).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let e = if i == j { t } else { Complex64::new(0.0, 0.0) };
            assert!((h[(i, j)] - e).norm() < 1e-15);
        }
    }
}

#[test]
fn coupled_reference_sinusoid_and_hand_solve() {
    let spec = two_node_coupled(&TwoNodeParams::default(), 0.1, 0.2).unwrap();
    let omega = std::f64::consts::FRAC_PI_4;
    let z = Complex64::from_polar(1.0, omega);
    let t = [spec.t(0).eval(z), spec.t(1).eval(z)];
    let qp = [
        spec.q(0, 1).eval(z) * spec.p(1, 0).eval(z),
        spec.q(1, 0).eval(z) * spec.p(0, 1).eval(z),
    ];
    let det = 1.0 - qp[0] * qp[1];
    let expect = [
        [t[0] / det, qp[0] * t[1] / det],
        [qp[1] * t[0] / det, t[1] / det],
    ];
    let h = reference_transfer_eval(&spec, omega).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((h[(i, j)] - expect[i][j]).norm() < 1e-14);
        }
    }
    let n = 400;
    let r = MultiSignal::new(vec![Signal::zeros(n), sinusoid(n, omega, 0.0)]).unwrap();
    let yd = simulate_reference(&spec, &r).unwrap();
    for tt in 200..n {
        for i in 0..2 {
            let e = steady_state(h[(i, 1)], omega, tt);
            assert!((yd.channel(i).samples[tt] - e).abs() < 1e-6);
        }
    }
}

#[test]
fn superposition_and_noise() {
    let spec = nine_node().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u1 = white_noise(&mut rng, 9, 60, 1.0);
    let u2 = white_noise(&mut rng, 9, 60, 1.0);
    let y1 = simulate_plant(&spec, &u1, None).unwrap();
    let y2 = simulate_plant(&spec, &u2, None).unwrap();
    let y12 = simulate_plant(&spec, &u1.add(&u2).unwrap(), None).unwrap();
    let sum = y1.add(&y2).unwrap();
    for i in 0..9 {
        for (a, b) in y12.channel(i).samples.iter().zip(&sum.channel(i).samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    let v = white_noise(&mut rng, 9, 60, 0.1);
    let noisy = simulate_plant(&spec, &u1, Some(&v)).unwrap();
    assert_eq!(noisy, y1.add(&v).unwrap());
}

#[test]
fn relabeling_permutes_outputs() {
    let spec = nine_node().unwrap();
    let perm = [4, 0, 8, 2, 6, 1, 3, 7, 5];
    let permuted = spec.permuted(&perm).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = white_noise(&mut rng, 9, 40, 1.0);
    let mut up = vec![Signal::zeros(40); 9];
    for i in 0..9 {
        up[perm[i]] = u.channel(i).clone();
    }
    let y = simulate_plant(&spec, &u, None).unwrap();
    let yp = simulate_plant(&permuted, &MultiSignal::new(up).unwrap(), None).unwrap();
    for i in 0..9 {
        for (a, b) in y
            .channel(i)
            .samples
            .iter()
            .zip(&yp.channel(perm[i]).samples)
        {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn validation_examples() {
    let grid = frequency_grid(512);
    let report = validate_network(&nine_node().unwrap(), &grid);
    assert!(report.is_valid(), "{report:?}");
    assert!(report.plant_det_min > 1e-8);
    assert!(report.reference_det_min > 1e-8);
    assert!(report.reference_gain_det_max > 1e-8);

    let unit = NetworkSpec::new(
        Graph::new(2, [(0, 1)]).unwrap(),
        (0..2)
            .map(|i| SubsystemSpec {
                g: RationalTF::first_order(1.0, 0.5),
                w: BTreeMap::from([(1 - i, RationalTF::first_order(0.1, 0.5))]),
                f: BTreeMap::new(),
            })
            .collect(),
        vec![ReferenceNodeSpec::decoupled(RationalTF::one()); 2],
    )
    .unwrap();
    let report = validate_network(&unit, &grid);
    assert!(!report.reference_not_identity);
    assert!(!report.is_valid());

    let lone = single_node(
        RationalTF::first_order(1.0, 0.2),
        RationalTF::first_order(0.4, 0.6),
    );
    assert!(validate_network(&lone, &grid).is_valid());
}

#[test]
fn output_coupled_transform_preserves_transfer() {
    let mut spec_json: serde_json::Value = serde_json::from_str(
        &two_node(&TwoNodeParams::default())
            .unwrap()
            .to_json_string()
            .unwrap(),
    )
    .unwrap();
    spec_json["nodes"][0]["F"] = serde_json::json!({"2": {"num": [0.5, 0.1], "den": [1.0, -0.2]}});
    let spec = NetworkSpec::from_json_str(&spec_json.to_string()).unwrap();
    let bar = spec.output_coupled();
    assert!(bar.has_unit_output_maps());
    for w in [0.2, 1.0, 2.5] {
        let a = plant_transfer_eval(&spec, w).unwrap();
        let b = plant_transfer_eval(&bar, w).unwrap();
        assert!((a - b).norm() < 1e-13);
    }
}
