//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::path::Path;
use std::time::{Duration, Instant};

use dvrft::evaluation::{
    assemble_closed_loop, estimate_jmr, generate_data, monte_carlo, performance_metric,
    simulate_closed_loop, step_references, synthesize, MonteCarloConfig,
};
use dvrft::experiment::ExperimentConfig;
use dvrft::ideal::{build_ideal_controller, build_ideal_node, match_coefficients};
use dvrft::identification::{check_minimum_equivalence, ControllerParametrization, Entry};
use dvrft::lti::{filter, frequency_grid, inverse_filter, Polynomial, RationalTF, Signal};
use dvrft::network::presets::{nine_node, two_node, two_node_coupled, TwoNodeParams};
use dvrft::network::{simulate_plant, simulate_reference, sinusoid, white_noise};
use dvrft::virtual_signals::{virtual_references_centralized, virtual_references_distributed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{max_diff, random_coupled_spec, uniform};

fn report(criterion: u32, what: &str, ok: bool, detail: String) {
    println!(
        "{} criterion {criterion} ({what}): {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({what}) failed: {detail}");
}

/// Stable, minimum-phase TF with random real roots and gain.
fn random_tf(rng: &mut impl Rng, rel_deg: usize) -> RationalTF {
    let poles: Vec<f64> = (0..3).map(|_| uniform(rng, -0.8, 0.8)).collect();
    let zeros: Vec<f64> = (0..3 - rel_deg).map(|_| uniform(rng, -0.8, 0.8)).collect();
    let gain = uniform(rng, 0.5, 2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    RationalTF::new(
        Polynomial::from_roots(&zeros).scale(gain),
        Polynomial::from_roots(&poles),
    )
    .unwrap()
}

#[test]
fn criterion_1_ideal_controller_matches_reference_model() {
    let start = Instant::now();
    let n = 200;
    let cases = [
        ("two-node", two_node(&TwoNodeParams::default()).unwrap()),
        (
            "two-node coupled",
            two_node_coupled(&TwoNodeParams::default(), 0.2, 0.5).unwrap(),
        ),
        ("nine-node", nine_node().unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for (name, spec) in &cases {
        let l = spec.nodes();
        let ctrl = build_ideal_controller(spec).unwrap();
        let cls = assemble_closed_loop(spec, &ctrl).unwrap();
        let steps = step_references(&mut rng, l, n);
        let noise = white_noise(&mut rng, l, n, 1.0);
        for r in [steps, noise] {
            let y = simulate_closed_loop(&cls, &r, None).unwrap().y;
            let yd = simulate_reference(spec, &r).unwrap();
            let e = max_diff(&y, &yd, n);
            worst = worst.max(e);
            detail.push(format!("{name} {e:.1e}"));
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "ideal closed loop equals reference model",
        worst <= 1e-8 && elapsed < Duration::from_secs(1),
        format!(
            "max |y - y_d| = {worst:.2e} (<= 1e-8), {elapsed:.2?} (< 1 s); {}",
            detail.join(", ")
        ),
    );
}

#[test]
fn criterion_2_example_closed_forms() {
    let p = TwoNodeParams::default();
    let spec = two_node(&p).unwrap();
    let mut worst = 0.0_f64;
    let mut coeff_diff = |got: &RationalTF, want: &RationalTF| {
        let ok =
            got.num().degree() == want.num().degree() && got.den().degree() == want.den().degree();
        assert!(ok, "degree mismatch: {got} vs {want}");
        for (a, b) in got
            .num()
            .coeffs()
            .iter()
            .zip(want.num().coeffs())
            .chain(got.den().coeffs().iter().zip(want.den().coeffs()))
        {
            worst = worst.max((a - b).abs());
        }
    };
    for i in 0..2 {
        let j = 1 - i;
        let (c, d, a, g) = (p.c[i], p.d[i], p.a[i], p.gamma[i]);
        let node = build_ideal_node(i, spec.subsystem(i), spec.reference(i)).unwrap();
        // C_ii = (1-γ)(q-a) / (c(q-1)),  C_ij = -d/c,  K_ij = (1-γ)/(q-1)
        let c_ii =
            RationalTF::from_coeffs(&[(1.0 - g) / c, -(1.0 - g) * a / c], &[1.0, -1.0]).unwrap();
        let c_ij = RationalTF::constant(-d / c);
        let k_ij = RationalTF::from_coeffs(&[1.0 - g], &[1.0, -1.0]).unwrap();
        coeff_diff(&node.c_ee, &c_ii);
        coeff_diff(&node.c_es[&j], &c_ij);
        coeff_diff(&node.k_o[&j], &k_ij);
        assert!(node
            .c_ek
            .values()
            .chain(node.k_oq.values())
            .chain(node.k_p.values())
            .all(RationalTF::is_zero));
    }
    report(
        2,
        "closed-form ideal controller",
        worst <= 1e-12,
        format!("max coefficient error {worst:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_3_noise_free_recovery() {
    let start = Instant::now();
    let spec = nine_node().unwrap();
    let param = ControllerParametrization::full(&spec).unwrap();
    let rho_d = param.ideal_parameters(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (u, y) = generate_data(&mut rng, &spec, 100, 1.0, 0.0).unwrap();
    let rho = synthesize(&spec, &param, &u, &y, None).unwrap();
    let rho_err = rho
        .iter()
        .zip(&rho_d)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let ctrl = param.controller(&spec, &rho).unwrap();
    let r = step_references(&mut rng, 9, 100);
    let cls = assemble_closed_loop(&spec, &ctrl).unwrap();
    let jmr = estimate_jmr(
        &simulate_closed_loop(&cls, &r, None).unwrap().y,
        &simulate_reference(&spec, &r).unwrap(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    report(
        3,
        "noise-free recovery",
        rho_err <= 1e-6 && jmr <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("max |rho* - rho_d| = {rho_err:.2e} (<= 1e-6), J_MR = {jmr:.2e} (<= 1e-10), {elapsed:.2?} (< 5 s)"),
    );
}

#[test]
fn criterion_4_monte_carlo_ordering() {
    let start = Instant::now();
    let spec = nine_node().unwrap();
    let classes = ExperimentConfig::new("")
        .classes
        .iter()
        .map(|c| c.build(&spec, Path::new(".")).unwrap())
        .collect();
    let res = monte_carlo(&MonteCarloConfig {
        spec,
        classes,
        horizon: 100,
        sigma_u: 1.0,
        sigma_v: 0.1,
        seed: 2024,
        runs: 100,
        grid: frequency_grid(512),
        trim: None,
        step_horizon: 100,
    });
    let elapsed = start.elapsed();
    let med = |c: &str| res.summary(c).unwrap().median;
    let (full, reduced, dec) = (med("full"), med("reduced"), med("decentralized"));
    let failures: usize = res.summaries.iter().map(|s| s.failures).sum();
    report(
        4,
        "Monte Carlo ordering",
        full < reduced && reduced < dec && full <= dec / 2.0 && elapsed < Duration::from_secs(60),
        format!(
            "medians full {full:.3e} < reduced {reduced:.3e} < decentralized {dec:.3e}, \
             full/decentralized = {:.3}, {failures} failed fits, {elapsed:.2?} (< 60 s)",
            full / dec
        ),
    );
}

#[test]
fn criterion_5_distributed_equals_centralized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let spec = random_coupled_spec(&mut rng);
        let u = white_noise(&mut rng, 3, 80, 1.0);
        let y = simulate_plant(&spec, &u, None).unwrap();
        let dist = virtual_references_distributed(&spec, &y).unwrap();
        let cent = virtual_references_centralized(&spec, &y).unwrap();
        worst = worst.max(max_diff(&dist.r_bar, &cent, dist.horizon_used));
    }
    report(
        5,
        "distributed vs centralized virtual references",
        worst <= 1e-9,
        format!("10 random specs, max elementwise difference {worst:.2e} (<= 1e-9)"),
    );
}

#[test]
fn criterion_6_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cases = 25;

    let mut inv = 0.0_f64;
    for k in 0..cases {
        let tf = random_tf(&mut rng, k % 3);
        let x = Signal::new((0..100).map(|_| uniform(&mut rng, -1.0, 1.0)).collect());
        let back = inverse_filter(&tf, &filter(&tf, &x).unwrap()).unwrap();
        for (a, b) in back.samples.iter().zip(&x.samples) {
            inv = inv.max((a - b).abs());
        }
    }

    let mut reref = 0.0_f64;
    for _ in 0..cases {
        let spec = random_coupled_spec(&mut rng);
        let u = white_noise(&mut rng, 3, 60, 1.0);
        let y = simulate_plant(&spec, &u, None).unwrap();
        let vd = virtual_references_distributed(&spec, &y).unwrap();
        let back = simulate_reference(&spec, &vd.r_bar).unwrap();
        reref = reref.max(max_diff(&back, &y, vd.horizon_used));
    }

    let mut freq = 0.0_f64;
    for k in 0..cases {
        let tf = random_tf(&mut rng, k % 3);
        let w = uniform(&mut rng, 0.05, 3.0);
        let h = tf.freq_response(w).unwrap();
        let n = 400;
        let y = filter(&tf, &sinusoid(n, w, 0.0)).unwrap();
        for t in n - 20..n {
            let want = h.norm() * (w * t as f64 + h.arg()).sin();
            freq = freq.max((y.samples[t] - want).abs());
        }
    }

    report(
        6,
        "round trips",
        inv <= 1e-6 && reref <= 1e-6 && freq <= 1e-6,
        format!(
            "{cases} cases each: inverse_filter(filter(x)) {inv:.2e}, \
             simulate_reference(r_bar) vs y {reref:.2e}, steady state vs frequency response {freq:.2e} (all <= 1e-6)"
        ),
    );
}

#[test]
fn criterion_7_alternate_minimum() {
    let p_gain = 0.5;
    let spec = two_node_coupled(&TwoNodeParams::default(), 0.2, p_gain).unwrap();
    let param = ControllerParametrization::full(&spec).unwrap();
    let rho_d = param.ideal_parameters(&spec).unwrap();
    // shift C^W_ij by δ and compensate with C^Q_ij = -δ/P so that
    // ΔC^W + ΔC^Q P = 0 on every link
    let delta = 0.3;
    let mut rho = rho_d.clone();
    for (i, node) in param.nodes.iter().enumerate() {
        let j = 1 - i;
        let slots = node.slots();
        let q_basis: Vec<&RationalTF> = slots
            .iter()
            .filter(|s| s.entry == Entry::Reference(j))
            .map(|s| &s.basis)
            .collect();
        let (dq, res) =
            match_coefficients(&RationalTF::constant(-delta / p_gain), &q_basis).unwrap();
        assert!(res < 1e-12);
        let (mut iq, mut iw) = (dq.iter(), true);
        for (k, s) in slots.iter().enumerate() {
            match s.entry {
                Entry::Coupling(_) if iw => {
                    rho[i][k] += delta;
                    iw = false;
                }
                Entry::Reference(_) => rho[i][k] += iq.next().unwrap(),
                _ => {}
            }
        }
    }
    let grid = frequency_grid(512);
    let (equivalent, dev) = check_minimum_equivalence(&rho, &rho_d, &param, &spec, &grid).unwrap();
    let shift = rho
        .iter()
        .zip(&rho_d)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let ctrl = param.controller(&spec, &rho).unwrap();
    let metric = performance_metric(&spec, &ctrl, &grid).unwrap();
    report(
        7,
        "alternate global minimum",
        equivalent && shift > 0.1 && metric <= 1e-8,
        format!("|rho* - rho_d|_inf = {shift:.2}, equivalence deviation {dev:.1e}, performance metric {metric:.2e} (<= 1e-8)"),
    );
}
