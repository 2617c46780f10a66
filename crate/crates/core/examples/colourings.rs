//! Falsification runs for the sphere colouring and the mod 4 colouring.

use planechrome::colouring::{self, ResidueColouring};
use planechrome::weights::PrimeTable;

fn main() -> planechrome::Result<()> {
    let odd: Vec<u64> = (1..100).step_by(2).collect();
    let rep = colouring::falsify_sphere(2, &odd, 2, 100_000, 100.0, 1)?;
    println!("sphere k=2: {} of {} trials monochromatic", rep.violations, rep.trials);

    let bad = colouring::falsify_sphere_unchecked(2, &[4], 1, 1000, 3.0, 1)?;
    println!("with r = 4 (a multiple of k): {} violations", bad.violations);

    let primes: Vec<u64> = PrimeTable::build(100_000)?.primes_up_to(100_000).collect();
    for k in [3, 4] {
        let c = colouring::interval_extend(ResidueColouring::new(k)?);
        let rep = colouring::falsify_distance_colouring(
            c.spec(),
            |x| c.colour(x[0]),
            colouring::line_pair_sampler(primes.clone(), 1e6, false),
            100_000,
            7,
        );
        println!(
            "floor(x) mod {k} vs primes: valid = {}, violations = {}",
            colouring::prime_colouring_valid(k)?,
            rep.violations
        );
    }
    Ok(())
}
