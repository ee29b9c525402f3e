//! Monte Carlo comparison of controller classes on the nine-node grid with
//! noisy data.
//!
//! cargo run --release --example monte_carlo -- [runs]

use dvrft::evaluation::{monte_carlo, ControllerClass, MonteCarloConfig};
use dvrft::identification::ControllerParametrization;
use dvrft::lti::frequency_grid;
use dvrft::network::presets::{nine_node, NINE_NODE_REDUCED_REMOVED};

fn main() -> dvrft::Result<()> {
    let runs = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    let spec = nine_node()?;
    let classes = vec![
        ControllerClass {
            label: "full".into(),
            param: ControllerParametrization::full(&spec)?,
        },
        ControllerClass {
            label: "reduced".into(),
            param: ControllerParametrization::reduced(&spec, &NINE_NODE_REDUCED_REMOVED)?,
        },
        ControllerClass {
            label: "decentralized".into(),
            param: ControllerParametrization::decentralized(&spec)?,
        },
    ];
    let cfg = MonteCarloConfig {
        spec,
        classes,
        horizon: 100,
        sigma_u: 1.0,
        sigma_v: 0.1,
        seed: 2024,
        runs,
        grid: frequency_grid(512),
        trim: None,
        step_horizon: 100,
    };
    let start = std::time::Instant::now();
    let res = monte_carlo(&cfg);
    println!(
        "{runs} replicates in {:.1} s",
        start.elapsed().as_secs_f64()
    );
    println!(
        "{:<14} {:>10} {:>10} {:>10} {:>12}",
        "class", "q1", "median", "q3", "median J_MR"
    );
    for s in &res.summaries {
        println!(
            "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>12.3e}",
            s.class, s.q1, s.median, s.q3, s.median_jmr
        );
    }
    Ok(())
}
