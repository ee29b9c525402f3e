//! One-shot identification of the full controller class from noise-free
//! data on the nine-node grid, with excitation diagnostics.
//!
//! cargo run --example identify_controller

use dvrft::evaluation::{
    assemble_closed_loop, estimate_jmr, generate_data, simulate_closed_loop, step_references,
};
use dvrft::identification::{
    build_regressors, default_trim, excitation_check, identify_all, ControllerParametrization,
};
use dvrft::network::presets::nine_node;
use dvrft::network::simulate_reference;
use dvrft::virtual_signals::virtual_references_distributed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dvrft::Result<()> {
    let spec = nine_node()?;
    let param = ControllerParametrization::full(&spec)?;
    let rho_d = param.ideal_parameters(&spec)?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (u, y) = generate_data(&mut rng, &spec, 100, 1.0, 0.0)?;
    let vd = virtual_references_distributed(&spec, &y)?;
    let reg = build_regressors(&param, &vd, &u, default_trim(&param))?;
    let exc = excitation_check(&u, Some(&reg), 2);
    println!(
        "min input covariance eigenvalue {:.3}, sufficient: {}",
        exc.min_cov_eig,
        exc.is_sufficient()
    );

    let results = identify_all(&reg)?;
    for (i, (res, d)) in results.iter().zip(&rho_d).enumerate() {
        let err = res
            .rho
            .iter()
            .zip(d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "node {}: rho = {:.4?}, |rho - rho_d| = {err:.1e}",
            spec.id(i),
            res.rho
        );
    }

    let rho: Vec<Vec<f64>> = results.into_iter().map(|r| r.rho).collect();
    let ctrl = param.controller(&spec, &rho)?;
    let r = step_references(&mut rng, 9, 100);
    let y = simulate_closed_loop(&assemble_closed_loop(&spec, &ctrl)?, &r, None)?.y;
    println!(
        "J_MR = {:.2e}",
        estimate_jmr(&y, &simulate_reference(&spec, &r)?)?
    );
    Ok(())
}
