//! With a constant `P`, node `i` receives `p^c = P o^c`, so the coupling
//! and reference channels of its controller are redundant. Moving weight
//! between them gives different parameters with the same closed loop.
//!
//! cargo run --example alternate_minimum

use dvrft::evaluation::performance_metric;
use dvrft::ideal::match_coefficients;
use dvrft::identification::{check_minimum_equivalence, ControllerParametrization, Entry};
use dvrft::lti::{frequency_grid, RationalTF};
use dvrft::network::presets::{two_node_coupled, TwoNodeParams};

fn main() -> dvrft::Result<()> {
    let p_gain = 0.5;
    let spec = two_node_coupled(&TwoNodeParams::default(), 0.2, p_gain)?;
    let param = ControllerParametrization::full(&spec)?;
    let rho_d = param.ideal_parameters(&spec)?;
    let delta = 0.3;

    let mut rho = rho_d.clone();
    for (i, node) in param.nodes.iter().enumerate() {
        let q_basis: Vec<&RationalTF> = node
            .slots()
            .iter()
            .filter(|s| matches!(s.entry, Entry::Reference(_)))
            .map(|s| &s.basis)
            .collect();
        // C^Q must absorb -δ/P
        let (dq, _) = match_coefficients(&RationalTF::constant(-delta / p_gain), &q_basis)?;
        let mut dq = dq.into_iter();
        let mut first_w = true;
        for (k, s) in node.slots().iter().enumerate() {
            match s.entry {
                Entry::Coupling(_) if first_w => {
                    rho[i][k] += delta;
                    first_w = false;
                }
                Entry::Reference(_) => rho[i][k] += dq.next().unwrap_or(0.0),
                _ => {}
            }
        }
    }

    let grid = frequency_grid(256);
    for (name, r) in [("ideal", &rho_d), ("shifted", &rho)] {
        let metric = performance_metric(&spec, &param.controller(&spec, r)?, &grid)?;
        println!("{name:>8}: rho = {:.3?}, metric {metric:.2e}", r);
    }
    let (same, dev) = check_minimum_equivalence(&rho, &rho_d, &param, &spec, &grid)?;
    println!("equivalent minima: {same} (deviation {dev:.1e})");
    Ok(())
}
