//! Pushout of ℓ∞² along the diagonal into ℝ, then the admissibility
//! inequality of `i_E` on sampled tuples.

use pushoutforge::pushout::{admissibility_check, kisliakov_pushout, sample_tuples};
use pushoutforge::ratlin::{format_rational, format_vector, rat, vector, RMatrix};
use pushoutforge::space::{make_linf, operator_norm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pushoutforge::error::Result<()> {
    let eta = rat(4, 5);
    let b = make_linf(2)?;
    let e = make_linf(1)?;
    // u(e1 + e2) = 4/5
    let u = RMatrix::from_rows(&[vec![eta.clone()]])?;
    let p = kisliakov_pushout(&b, &[vector(&[1, 1])], &e, &u, &eta)?;
    println!("pushout has dimension {} and {} ball vertices", p.space.dim(), p.space.vertices().len());
    println!("‖u‖ = {}, ‖i_B‖ = {}", format_rational(&p.u_norm), format_rational(&operator_norm(&p.i_b)?));

    for (bv, ev) in [(vector(&[1, 1]), vector(&[0])), (vector(&[0, 0]), vector(&[1])), (vector(&[1, -1]), vector(&[1]))] {
        let class = p.class_of(&bv, &ev)?;
        println!(
            "[({:?}, {:?})] = {:?}, norm {}",
            format_vector(&bv),
            format_vector(&ev),
            format_vector(&class),
            format_rational(&p.space.norm(&class)?)
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        let tuples = sample_tuples(&p, &mut rng, n, 40, 6)?;
        let report = admissibility_check(&p, &tuples)?;
        println!(
            "tuples of length {}: {:?}, admitted {}, min slack {}",
            n + 1,
            report.verdict,
            report.witness["admitted"],
            report.witness["min_slack"]
        );
    }
    Ok(())
}
