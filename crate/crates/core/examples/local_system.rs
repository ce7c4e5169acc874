//! Builds the stages below {0, 1, 2} over ℓ∞² and walks the resulting
//! functionals, kernel slices and ℓ∞ bounds.

use pushoutforge::lopezabad::{
    build_local_system, ell_infty_equivalence, kernel_slice, partial_sums, prefix_map_norm, GroundSet, Params, StageIndex,
};
use pushoutforge::ratlin::{format_rational, rat, vector};
use pushoutforge::space::make_linf;

fn main() -> pushoutforge::error::Result<()> {
    let ground = GroundSet::new(3, vec![vector(&[1, 0]), vector(&[0, 1]), vector(&[1, 1])])?;
    let params = Params::new(rat(6, 5), rat(4, 5))?;
    let start = std::time::Instant::now();
    let sys = build_local_system(make_linf(2)?, ground, StageIndex::range(3), params, 1)?;
    println!("built {} stages in {:?}", sys.order.len(), start.elapsed());

    println!("{:<10} {:>4} {:>4} {:>5} {:>9} {:>10}", "stage", "m", "n", "dim", "vertices", "‖ν⁻¹‖");
    for t in &sys.order {
        let st = sys.stage(t)?;
        println!(
            "{:<10} {:>4} {:>4} {:>5} {:>9} {:>10}",
            t.label(),
            st.m,
            st.n,
            st.dim(),
            st.space.vertices().len(),
            format_rational(&st.nu_inv_norm)
        );
    }

    for f in &sys.functionals {
        let norms: Vec<String> = f
            .stagewise
            .iter()
            .map(|(t, w)| format_rational(&sys.stage(t).unwrap().space.dual_norm(w).unwrap()))
            .collect();
        println!("e*_{} dual norms along the chain: {}", f.gamma, norms.join(" "));
    }
    println!("prefix map norm: {}", format_rational(&prefix_map_norm(&sys, 3)?));

    for t in &sys.order {
        let k = kernel_slice(&sys, t)?;
        println!("K_{} has dimension {} (n = {}, r = {})", t.label(), k.basis.len(), k.n, k.r);
    }

    for a in [vec![rat(1, 1)], vec![rat(1, 1), rat(1, 1)], vec![rat(1, 1), rat(1, 1), rat(1, 1)]] {
        let o = ell_infty_equivalence(&sys, &a)?;
        println!(
            "a = {:?}: norm {} in [{}, {}]? lower {} upper {}",
            a.iter().map(format_rational).collect::<Vec<_>>(),
            format_rational(&o.norm),
            format_rational(&o.lower),
            format_rational(&o.upper),
            o.lower_holds(),
            o.upper_holds()
        );
    }

    let a = [rat(1, 1), rat(1, 2), rat(1, 4)];
    for (k, p) in partial_sums(&sys, &a)?.iter().enumerate() {
        println!(
            "y_{}: coordinates {:?}, gap {} (bound {})",
            k + 1,
            p.coordinates.iter().map(format_rational).collect::<Vec<_>>(),
            format_rational(&p.gap),
            format_rational(&p.gap_bound)
        );
    }
    println!("total {:?}", start.elapsed());
    Ok(())
}
