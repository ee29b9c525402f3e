//! Ideal distributed controller of the two-node example, its realizability
//! and the closed loop it produces.
//!
//! cargo run --example ideal_controller

use dvrft::evaluation::{assemble_closed_loop, performance_metric, simulate_closed_loop};
use dvrft::ideal::{build_ideal_controller, check_realizability};
use dvrft::lti::{frequency_grid, Signal};
use dvrft::network::presets::{two_node, TwoNodeParams};
use dvrft::network::{simulate_reference, MultiSignal};

fn main() -> dvrft::Result<()> {
    let spec = two_node(&TwoNodeParams::default())?;
    println!("realizable: {}", check_realizability(&spec).is_realizable());
    let ctrl = build_ideal_controller(&spec)?;
    for (i, node) in ctrl.nodes.iter().enumerate() {
        println!("node {}", spec.id(i));
        for (label, tf) in node.entries_named(|j| spec.id(j).to_string()) {
            if !tf.is_zero() {
                println!("  {label:<10} {tf}");
            }
        }
    }

    let r = MultiSignal::new(vec![Signal::step(40, 1.0), Signal::step(40, -0.5)])?;
    let cls = assemble_closed_loop(&spec, &ctrl)?;
    let y = simulate_closed_loop(&cls, &r, None)?.y;
    let yd = simulate_reference(&spec, &r)?;
    let err = (0..2)
        .flat_map(|i| (0..40).map(move |t| (i, t)))
        .map(|(i, t)| (y.channel(i).samples[t] - yd.channel(i).samples[t]).abs())
        .fold(0.0, f64::max);
    println!("max |y - y_d| over 40 steps: {err:.2e}");
    println!(
        "performance metric: {:.2e}",
        performance_metric(&spec, &ctrl, &frequency_grid(256))?
    );
    Ok(())
}
