//! The two failure witnesses: a coordinate functional that is not constant
//! on cosets, and a two-point sum whose norm exceeds the ℓ∞ upper bound
//! once `S` is not a coordinate subspace.

use pushoutforge::ratlin::{format_rational, format_vector, rat};
use pushoutforge::verify::{
    reproduce_upperbound_counterexample, reproduce_welldefined_counterexample, upperbound_scenario,
};

fn main() -> pushoutforge::error::Result<()> {
    let w = reproduce_welldefined_counterexample()?;
    println!("{} {:?}", w.claim_id, w.verdict);
    println!("{}", serde_json::to_string_pretty(&w.witness)?);

    let sc = upperbound_scenario(&rat(4, 5))?;
    println!("‖j(v1) + v2‖ = {}", format_rational(&sc.norm));
    println!("φ-image of the sum: {:?}", format_vector(&sc.phi_image));
    println!("‖φ‖ on G: {}", format_rational(&sc.phi_expansion));
    println!("f(v) at the singleton stages: {} {}", format_rational(&sc.f_values.0), format_rational(&sc.f_values.1));

    let u = reproduce_upperbound_counterexample()?;
    println!("{} {:?}", u.claim_id, u.verdict);
    println!("{}", serde_json::to_string_pretty(&u.witness)?);
    Ok(())
}
