//! Euler's totient and `max_{r > Q} 1/phi(r)`.

use num_rational::Ratio;

use super::PrimeTable;
use crate::error::{Error, Result};

/// `phi(n)` by trial division.
pub fn euler_phi(n: u64) -> Result<u64> {
    PrimeTable::build(n.isqrt().max(2))?.euler_phi(n)
}

const MAX_Q: u64 = 1 << 32;
const BLOCK: u64 = 1 << 16;

/// A lower bound for `phi(r)` that is nondecreasing in `r`: the larger of
/// `sqrt(r/2)` and `r / (e^gamma ln ln r + 3 / ln ln r)` (Rosser and
/// Schoenfeld, valid for `r >= 3`, increasing for `r >= 16`).
fn phi_floor(r: u64) -> f64 {
    let rf = r as f64;
    let weak = (rf / 2.0).sqrt();
    if r < 16 {
        return weak;
    }
    let u = rf.ln().ln();
    let strong = rf / (EULER_GAMMA.exp() * u + 3.0 / u);
    // keep a margin against rounding in the logarithms
    weak.max(strong * (1.0 - 1e-9))
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn small_primes(limit: u64) -> Vec<u64> {
    let mut comp = vec![false; limit as usize + 1];
    let mut out = Vec::new();
    for i in 2..=limit as usize {
        if !comp[i] {
            out.push(i as u64);
            for j in (i * i..=limit as usize).step_by(i) {
                comp[j] = true;
            }
        }
    }
    out
}

/// `phi(r)` for `r` in `[lo, lo + len)`.
fn phi_block(lo: u64, len: u64, primes: &[u64]) -> Vec<u64> {
    let mut rest: Vec<u64> = (lo..lo + len).collect();
    let mut phi = rest.clone();
    let hi = lo + len;
    for &p in primes {
        if p * p >= hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        for r in (first..hi).step_by(p as usize) {
            let i = (r - lo) as usize;
            phi[i] = phi[i] / p * (p - 1);
            while rest[i] % p == 0 {
                rest[i] /= p;
            }
        }
    }
    for (f, r) in phi.iter_mut().zip(rest) {
        if r > 1 {
            *f = *f / r * (r - 1);
        }
    }
    phi
}

/// `max_{r > Q} 1/phi(r)` and its smallest witness `r`.
///
/// The scan over `r > Q` stops once a nondecreasing lower bound for `phi`
/// reaches the best value seen, since no later `r` can then improve on it.
/// The bound includes `phi(r) >= sqrt(r/2)`.
pub fn max_inv_phi_above(q: u64) -> Result<(Ratio<u64>, u64)> {
    if q < 1 {
        return Err(Error::domain("Q must be at least 1"));
    }
    if q > MAX_Q {
        return Err(Error::domain(format!("Q = {q} exceeds {MAX_Q}")));
    }
    let mut best = u64::MAX;
    let mut witness = 0;
    let mut primes = small_primes(1 << 10);
    let mut lo = q + 1;
    loop {
        let hi = lo + BLOCK;
        let covered = *primes.last().unwrap();
        if covered * covered < hi {
            primes = small_primes((hi as f64).sqrt() as u64 * 2 + 2);
        }
        for (i, phi) in phi_block(lo, BLOCK, &primes).into_iter().enumerate() {
            let r = lo + i as u64;
            if phi_floor(r) >= best as f64 {
                return Ok((Ratio::new(1, best), witness));
            }
            if phi < best {
                best = phi;
                witness = r;
            }
        }
        lo = hi;
    }
}
