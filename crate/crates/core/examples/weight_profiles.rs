//! Polynomial and prime weight profiles, and theta(N) from the sieve.

use planechrome::weights::{self, IntPolynomial, PrimeTable};

fn main() -> planechrome::Result<()> {
    let f = IntPolynomial::parse("1,3,3,1")?;
    for n in [100, 1000, 10_000] {
        println!("sum g_N for {f}, N = {n}: {:.6}", weights::gn_poly(&f, n)?.total());
    }

    let g = IntPolynomial::parse("0,0,1")?;
    let (h, shift) = weights::make_admissible_with_shift(&g)?;
    println!("{g} -> {h} (shift {shift})");

    let table = PrimeTable::build(1_000_000)?;
    let p = weights::gn_prime_with(&table, 1_000_000)?;
    println!("sum g_N prime, N = 1e6: {:.6}", p.total());
    println!("{:#?}", weights::poussin_compare(&table, 1_000_000)?);
    println!("max 1/phi(r), r > 30: {:?}", weights::max_inv_phi_above(30)?);
    Ok(())
}
