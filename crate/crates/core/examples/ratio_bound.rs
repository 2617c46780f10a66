//! Certified ratio bounds for the triangular lattice and for truncated G_k.

use planechrome::spectral::{self, RatioReport, WeightedSet};

fn main() -> planechrome::Result<()> {
    let tri = WeightedSet::symmetrize(&[((1, 0), 1.0), ((0, 1), 1.0), ((1, 1), 1.0)])?;
    let r = RatioReport::certified(&tri, 729)?;
    println!("triangular: alpha <= {:.6}, chi >= {}", r.alpha_upper, r.chi_lower);

    for k in 2..=4 {
        let w = spectral::build_gk_weights(k, 16)?;
        let c = RatioReport::certified(&w, 2048)?;
        let h = RatioReport::heuristic(&w, 32, 200, 1)?;
        println!(
            "G_{k}: certified alpha <= {:.4}, heuristic alpha ~ {:.4}",
            c.alpha_upper, h.alpha_upper
        );
    }

    println!(
        "closed forms: poly(k=3, Q=64) = {:?}, prime(k=10, Q=6) = {:?}",
        spectral::poly_bound_formula(3, 64.0, 1.0, 3)?,
        spectral::prime_bound_formula(10, 6)?
    );
    Ok(())
}
