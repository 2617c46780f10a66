//! Weight profiles on distances, and the number theory behind them.
//!
//! The polynomial profile for an admissible `f` and cutoff `N` puts weight
//!
//! ```text
//! g_N(j) = f'(j) (1 - f(j)/f(N)) / I,   I = int_0^N f'(t) (1 - f(t)/f(N)) dt
//! ```
//!
//! on the distance `f(j)`, `1 <= j <= N`. Substituting `u = f(t)` gives
//! `I = (f(N) - f(0))^2 / (2 f(N)) = f(N)/2 - f(0) + f(0)^2 / (2 f(N))`, so
//! `g_N(j) = 2 f'(j) (f(N) - f(j)) / (f(N) - f(0))^2` exactly.
//!
//! The prime profile puts `g_N(p) = (1/N)(1 - p/N) log p` on each prime
//! `p <= N`.

mod primes;
mod totient;

pub use primes::{
    cache_dir, poussin_compare, sieve, sieve_in, PoussinReport, PrimeTable, CHECKPOINT_STRIDE,
};
pub use totient::{euler_phi, max_inv_phi_above};

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::compensated_sum;

/// A polynomial with integer coefficients, `coeffs[i]` multiplying `x^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    /// Trailing zero coefficients are dropped. The result must have degree
    /// at least 1 and a positive leading coefficient.
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::domain("polynomial must have degree at least 1"));
        }
        if !coeffs.last().unwrap().is_positive() {
            return Err(Error::domain("leading coefficient must be positive"));
        }
        Ok(IntPolynomial { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// Parses `a0,a1,...,ar` (lowest degree first).
    pub fn parse(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|e| Error::validation(format!("bad coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_i64(&self, x: i64) -> BigInt {
        self.eval(&BigInt::from(x))
    }

    /// Coefficients of `f'` (may be constant, so not an `IntPolynomial`).
    pub fn derivative_coeffs(&self) -> Vec<BigInt> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect()
    }

    pub fn eval_derivative(&self, x: &BigInt) -> BigInt {
        self.derivative_coeffs()
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// `f(x^3)`.
    pub fn compose_cube(&self) -> Self {
        let mut coeffs = vec![BigInt::zero(); 3 * self.degree() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[3 * i] = c.clone();
        }
        IntPolynomial { coeffs }
    }

    /// `f(x + m)`, by repeated synthetic division.
    pub fn shift(&self, m: &BigInt) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = &c[j + 1] * m;
                c[j] += t;
            }
        }
        IntPolynomial { coeffs: c }
    }

    /// Nonnegative coefficients, constant term at least 1 and a positive
    /// coefficient in positive degree. Such an `f` is positive and strictly
    /// increasing on `[0, inf)`.
    pub fn is_admissible(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
            && self.coeffs[0] >= BigInt::one()
            && self.coeffs[1..].iter().any(|c| c.is_positive())
            && self.degree() >= 3
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let (sign, abs) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let show_coeff = i == 0 || !abs.is_one();
            if show_coeff {
                write!(f, "{abs}")?;
            }
            match i {
                0 => {}
                1 => f.write_str("x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for IntPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let coeffs = v
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        IntPolynomial::new(coeffs).map_err(serde::de::Error::custom)
    }
}

const MAX_SHIFT: u64 = 1 << 24;

/// Substitutes `x^3` when `deg f < 3`, then shifts `x -> x + M` for the least
/// `M >= 0` making the result admissible. Returns the polynomial and `M`.
pub fn make_admissible_with_shift(f: &IntPolynomial) -> Result<(IntPolynomial, u64)> {
    let base = if f.degree() < 3 { f.compose_cube() } else { f.clone() };
    for m in 0..=MAX_SHIFT {
        let g = base.shift(&BigInt::from(m));
        if g.is_admissible() {
            return Ok((g, m));
        }
    }
    Err(Error::invariant(format!("no admissible shift of {base} below {MAX_SHIFT}")))
}

pub fn make_admissible(f: &IntPolynomial) -> Result<IntPolynomial> {
    Ok(make_admissible_with_shift(f)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scheme {
    Poly { f: IntPolynomial, n: u64 },
    Prime { n: u64 },
}

/// A weight on each distance of the support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub scheme: Scheme,
    /// `(distance, weight)` in increasing distance order.
    pub support: Vec<(u128, f64)>,
    /// `I` for the polynomial scheme, `N` for the prime scheme.
    pub normalizer: f64,
}

impl WeightProfile {
    pub fn total(&self) -> f64 {
        compensated_sum(self.support.iter().map(|s| s.1))
    }

    pub fn n(&self) -> u64 {
        match self.scheme {
            Scheme::Poly { n, .. } | Scheme::Prime { n } => n,
        }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self.scheme, Scheme::Poly { .. })
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The polynomial profile `g_N` on `f(1), ..., f(N)`.
pub fn gn_poly(f: &IntPolynomial, n: u64) -> Result<WeightProfile> {
    if !f.is_admissible() {
        return Err(Error::domain(format!(
            "{f} is not admissible; transform it with make_admissible first"
        )));
    }
    if n < 2 {
        return Err(Error::domain(format!("N must be at least 2, got {n}")));
    }
    let fn_ = f.eval(&BigInt::from(n));
    if fn_.bits() >= 127 {
        return Err(Error::domain(format!("f(N) = {fn_} does not fit in 127 bits")));
    }
    let f0 = f.coeffs()[0].clone();
    let spread = &fn_ - &f0;
    let den = &spread * &spread;
    let normalizer = to_f64(&BigRational::new(den.clone(), BigInt::from(2) * &fn_));
    let two = BigInt::from(2);
    let support = (1..=n)
        .map(|j| {
            let jb = BigInt::from(j);
            let fj = f.eval(&jb);
            let num = &two * f.eval_derivative(&jb) * (&fn_ - &fj);
            let g = to_f64(&BigRational::new(num, den.clone()));
            (fj.to_u128().unwrap(), g)
        })
        .collect();
    Ok(WeightProfile {
        scheme: Scheme::Poly { f: f.clone(), n },
        support,
        normalizer,
    })
}

/// The prime profile on primes `p <= N`.
pub fn gn_prime(n: u64) -> Result<WeightProfile> {
    if n < 3 {
        return Err(Error::domain(format!("N must be at least 3, got {n}")));
    }
    gn_prime_with(&PrimeTable::build(n)?, n)
}

pub fn gn_prime_with(table: &PrimeTable, n: u64) -> Result<WeightProfile> {
    if n < 3 {
        return Err(Error::domain(format!("N must be at least 3, got {n}")));
    }
    table.check_covers(n)?;
    let nf = n as f64;
    let support = table
        .primes_up_to(n)
        .map(|p| (p as u128, (1.0 - p as f64 / nf) * (p as f64).ln() / nf))
        .collect();
    Ok(WeightProfile {
        scheme: Scheme::Prime { n },
        support,
        normalizer: nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c).unwrap()
    }

    #[test]
    fn construction_and_display() {
        assert!(IntPolynomial::from_i64(&[5]).is_err());
        assert!(IntPolynomial::from_i64(&[1, -1]).is_err());
        assert_eq!(poly(&[1, 2, 0, 0]).degree(), 1);
        assert_eq!(poly(&[1, 3, 3, 1]).to_string(), "x^3 + 3x^2 + 3x + 1");
        assert_eq!(poly(&[-5, 0, 1]).to_string(), "x^2 - 5");
        assert_eq!(IntPolynomial::parse("1, 3,3,1").unwrap(), poly(&[1, 3, 3, 1]));
        assert!(IntPolynomial::parse("1,x").is_err());
    }

    #[test]
    fn evaluation_and_transforms() {
        let f = poly(&[1, 3, 3, 1]);
        assert_eq!(f.eval_i64(2), BigInt::from(27));
        assert_eq!(f.eval_derivative(&BigInt::from(2)), BigInt::from(27));
        assert_eq!(poly(&[1, 2]).compose_cube(), poly(&[1, 0, 0, 2]));
        assert_eq!(poly(&[0, 0, 0, 1]).shift(&BigInt::from(1)), f);
    }

    #[test]
    fn admissible_transforms() {
        assert_eq!(make_admissible_with_shift(&poly(&[1, 2])).unwrap(), (poly(&[1, 0, 0, 2]), 0));
        assert_eq!(
            make_admissible_with_shift(&poly(&[0, 0, 0, 1])).unwrap(),
            (poly(&[1, 3, 3, 1]), 1)
        );
        let (g, m) = make_admissible_with_shift(&poly(&[-5, 0, 1])).unwrap();
        assert_eq!(m, 2);
        assert_eq!(g, poly(&[59, 192, 240, 160, 60, 12, 1]));
    }

    #[test]
    fn poly_profile() {
        let f = poly(&[1, 3, 3, 1]);
        let p = gn_poly(&f, 10).unwrap();
        assert_eq!(p.support.len(), 10);
        assert_eq!(p.support[9], (1331, 0.0));
        assert_eq!(p.support[0].0, 8);
        let want = 1331.0 / 2.0 - 1.0 + 1.0 / 2662.0;
        assert!((p.normalizer - want).abs() < 1e-12);
        assert!(gn_poly(&poly(&[0, 0, 0, 1]), 10).is_err());
        assert!(gn_poly(&f, 1).is_err());
    }

    #[test]
    fn normalizer_matches_quadrature() {
        // composite Simpson on f'(t)(1 - f(t)/f(N)) over [0, N]
        for (c, n) in [(vec![1i64, 3, 3, 1], 10u64), (vec![2, 0, 1, 4], 17), (vec![59, 192, 240, 160, 60, 12, 1], 6)] {
            let f = poly(&c);
            let fe = |t: f64| c.iter().rev().fold(0.0, |a, &k| a * t + k as f64);
            let fd = |t: f64| {
                c.iter().enumerate().skip(1).rev().fold(0.0, |a, (i, &k)| a * t + (i as f64) * k as f64)
            };
            let fnv = fe(n as f64);
            let h = |t: f64| fd(t) * (1.0 - fe(t) / fnv);
            let steps = 20000;
            let dx = n as f64 / steps as f64;
            let mut s = h(0.0) + h(n as f64);
            for i in 1..steps {
                s += h(i as f64 * dx) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let quad = s * dx / 3.0;
            let p = gn_poly(&f, n).unwrap();
            assert!((quad - p.normalizer).abs() / p.normalizer < 1e-6);
        }
    }

    #[test]
    fn poly_profile_sums_converge() {
        let f = poly(&[1, 3, 3, 1]);
        let e2 = (gn_poly(&f, 100).unwrap().total() - 1.0).abs();
        let e4 = (gn_poly(&f, 10_000).unwrap().total() - 1.0).abs();
        assert!(e4 < e2);
        assert!(e4 < 0.01);
    }

    #[test]
    fn prime_profile() {
        let p = gn_prime(10).unwrap();
        let a: Vec<u128> = p.support.iter().map(|s| s.0).collect();
        assert_eq!(a, vec![2, 3, 5, 7]);
        assert!((p.total() - 0.2712038347449277).abs() < 1e-15);
        let p = gn_prime(13).unwrap();
        assert_eq!(p.support.last().unwrap(), &(13, 0.0));
        assert!(p.support[..p.support.len() - 1].iter().all(|s| s.1 > 0.0));
    }
}
