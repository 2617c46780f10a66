//! Builds D_{q,k}, checks the exact edge lengths, and prints the sandwich
//! epsilon for small Q.

use num_bigint::BigInt;
use planechrome::exactlat::{self, GeneratorFamily};

fn main() -> planechrome::Result<()> {
    let fam = GeneratorFamily::build(2, 4)?;
    println!("X = {}", fam.x);
    for (j, d) in fam.points.iter().enumerate() {
        let e = exactlat::embed_point(d, 2, 4, 20)?;
        let n = exactlat::squared_embedded_norm(&d.scale(&BigInt::from(3)), 2, 4)?;
        println!("d_{} = {d}  embedded = ({}, {})  |3 d|^2 = {n}", j + 1, e.0, e.1);
    }
    println!("independent: {}", exactlat::verify_family_independent(&fam));
    for (q, k) in [(2, 4), (3, 4), (2, 5)] {
        println!("epsilon({q},{k}) = {}", exactlat::epsilon_qk(q, k)?);
    }
    Ok(())
}
