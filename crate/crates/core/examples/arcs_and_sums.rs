//! Arc classification, best approximations, and a minor arc scan.

use planechrome::expsum::{self, ArcScheme};
use planechrome::weights::{self, IntPolynomial};

fn main() -> planechrome::Result<()> {
    let scheme = ArcScheme::poly(3, 1000, 3)?;
    for alpha in [0.0, 1e-10, 0.5, 1.0 / 3.0 + 1e-12, 0.123] {
        println!("{alpha:e} -> {}", scheme.classify(alpha));
    }
    println!("pi ~ {:?}", expsum::dirichlet_approx(std::f64::consts::PI, 10.0)?);

    let f = IntPolynomial::parse("1,3,3,1")?;
    let profile = weights::gn_poly(&f, 2000)?;
    for q in [2, 4, 16] {
        let s = ArcScheme::poly(3, 2000, q)?;
        let (r, _) = expsum::minor_scan(&profile, &s, 5000, 3)?;
        println!(
            "Q = {q}: max minor |S|/S(0) = {:.4} at {:.6}",
            r.max_normalized_modulus, r.argmax_alpha
        );
    }
    Ok(())
}
