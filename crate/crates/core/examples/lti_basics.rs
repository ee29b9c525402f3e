//! Transfer-function arithmetic, filtering, inverse filtering and
//! frequency response.
//!
//! cargo run --example lti_basics

use dvrft::lti::{filter, inverse_filter, realize, RationalTF, Signal};

fn main() -> dvrft::Result<()> {
    let g = RationalTF::first_order(1.0, 0.5);
    let t = RationalTF::first_order(0.4, 0.6);
    let one_minus_t = &RationalTF::one() - &t;
    let c = t.checked_div(&g.mul_tol(&one_minus_t, 1e-9))?;
    println!("G       = {g}");
    println!("T       = {t}");
    println!("T/(G(1-T)) = {c}");
    println!("relative degree of G: {}", g.relative_degree());

    let step = Signal::step(10, 1.0);
    let y = filter(&t, &step)?;
    println!("T step response: {:.4?}", y.samples);
    let back = inverse_filter(&t, &y)?;
    println!("recovered input:  {:.4?}", back.samples);

    for w in [0.1, 1.0, 3.0] {
        let h = t.freq_response(w)?;
        println!("|T(e^j{w})| = {:.4}, arg = {:.4}", h.norm(), h.arg());
    }

    let ss = realize(&c)?;
    println!("realization of T/(G(1-T)): {} states", ss.states());
    Ok(())
}
