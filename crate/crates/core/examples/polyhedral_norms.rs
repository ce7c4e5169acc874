//! Polyhedral norms from vertex lists: gauges, dual norms, facets,
//! sections, quotients, operator norms and an Auerbach basis.

use std::sync::Arc;

use pushoutforge::ratlin::{format_rational, format_vector, rat, vector, RMatrix};
use pushoutforge::space::{
    auerbach_basis, direct_sum_l1, distortion, facet_enumeration, make_l1, make_linf, quotient, section_vertices,
    LinearMap, NormedSpace,
};

fn main() -> pushoutforge::error::Result<()> {
    // a hexagon: symmetric hull of (1, 0), (1, 1), (0, 1)
    let hex = NormedSpace::symmetric(2, vec![vector(&[1, 0]), vector(&[1, 1]), vector(&[0, 1])])?;
    let x = vec![rat(3, 2), rat(-1, 2)];
    println!("‖{:?}‖ = {}", format_vector(&x), format_rational(&hex.norm(&x)?));
    println!("dual norm of (1, 1): {}", format_rational(&hex.dual_norm(&vector(&[1, 1]))?));
    for f in facet_enumeration(&hex)? {
        println!("facet {:?}", format_vector(&f));
    }

    let sum = direct_sum_l1(&make_linf(2)?, &make_linf(1)?)?;
    println!("ℓ∞² ⊕₁ ℝ has {} ball vertices", sum.vertices().len());
    let diag = vec![vector(&[1, 1, 0])];
    println!("section along (1, 1, 0): {:?}", section_vertices(&sum, &diag)?.iter().map(|v| format_vector(v)).collect::<Vec<_>>());

    let q = quotient(Arc::new(make_linf(3)?), vec![vector(&[1, 1, 1])])?;
    let y = vector(&[2, 0, -1]);
    let (qn, rep) = q.quotient_norm(&y)?;
    println!("ℓ∞³/span(1,1,1): ‖[{:?}]‖ = {} attained at {:?}", format_vector(&y), format_rational(&qn), format_vector(&rep));

    let l1 = Arc::new(make_l1(2)?);
    let linf = Arc::new(make_linf(2)?);
    let rot = LinearMap::new(linf, l1, RMatrix::from_rows(&[vector(&[1, 1]), vector(&[1, -1])])?)?;
    let (forward, back) = distortion(&rot)?;
    println!("ℓ∞² → ℓ1² by (x+y, x-y): ‖T‖ = {}, ‖T⁻¹‖ = {}", format_rational(&forward), format_rational(&back));

    let (basis, duals) = auerbach_basis(&hex)?;
    println!(
        "Auerbach basis of the hexagon: {:?} with duals {:?}",
        basis.iter().map(|v| format_vector(v)).collect::<Vec<_>>(),
        duals.iter().map(|v| format_vector(v)).collect::<Vec<_>>()
    );
    Ok(())
}
