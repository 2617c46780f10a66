//! Exact independent sets and colourings of quotient graphs, and the
//! product colouring of G_k.

use planechrome::oracle::{self, GkColouring, DEFAULT_BUDGET};

fn main() -> planechrome::Result<()> {
    let tri = [(1, 0), (0, 1), (1, 1)];
    for m in 3..=7 {
        let g = oracle::quotient_graph(&tri, m)?;
        let mis = oracle::exact_mis(&g, DEFAULT_BUDGET)?;
        let chi = oracle::exact_chromatic(&g.graph, 6);
        println!("triangular mod {m}: density {} chi {:?}", mis.density, chi.ok());
    }

    let c = GkColouring::new(3)?;
    println!(
        "G_3 product colouring: {} colours, violation in [-64, 64]^2: {:?}",
        c.colours(),
        c.first_violation(16, 64)?
    );
    Ok(())
}
