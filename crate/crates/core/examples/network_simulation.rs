//! Simulates the nine-node grid plant and its structured reference model.
//!
//! cargo run --example network_simulation

use dvrft::lti::frequency_grid;
use dvrft::lti::Signal;
use dvrft::network::presets::nine_node;
use dvrft::network::{
    simulate_plant, simulate_reference, validate_network, white_noise, MultiSignal,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dvrft::Result<()> {
    let spec = nine_node()?;
    let report = validate_network(&spec, &frequency_grid(256));
    println!("assumptions hold: {}", report.is_valid());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let u = white_noise(&mut rng, 9, 50, 1.0);
    let y = simulate_plant(&spec, &u, None)?;
    println!(
        "plant output, node {}: {:.3?}",
        spec.id(4),
        &y.channel(4).samples[..8]
    );

    let r = MultiSignal::new((0..9).map(|_| Signal::step(30, 1.0)).collect())?;
    let yd = simulate_reference(&spec, &r)?;
    for i in [0, 4, 8] {
        println!(
            "reference step, node {}: y_d(29) = {:.4}",
            spec.id(i),
            yd.channel(i).samples[29]
        );
    }
    Ok(())
}
