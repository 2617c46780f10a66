//! Exact lattice constructions.
//!
//! For integers `q >= 1` and `k >= 2` the generating family `D_{q,k}` is a
//! list of `k - 1` points of `Z^2` scaled by the common normalizer
//! `X_{q,k} = prod_{j=1}^{k-1} (q^{k+j} + q^{k-j} + 1)`. Under the linear map
//! `h(x, y) = x e1 + y e2` with
//!
//! ```text
//! e1 = (1, 0) / X,   e2 = (1 / (2 q^k), sqrt(1 - 1 / (4 q^{2k}))) / X
//! ```
//!
//! every point `a * d` with `d` in the family lands at Euclidean distance
//! exactly `a` from the origin. The squared norm of `h(x, y)` has the
//! closed form `(x^2 + x y / q^k + y^2) / X^2` (the square root only ever
//! appears squared), which is what [`squared_embedded_norm`] evaluates.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational numbers in canonical reduced form.
pub type ExactRational = BigRational;

/// A point of the integer lattice with unbounded coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub x: BigInt,
    pub y: BigInt,
}

impl LatticePoint {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Self {
        LatticePoint {
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn zero() -> Self {
        LatticePoint::new(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, a: &BigInt) -> LatticePoint {
        LatticePoint {
            x: &self.x * a,
            y: &self.y * a,
        }
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint {
            x: -&self.x,
            y: -&self.y,
        }
    }

    /// Determinant of the 2x2 matrix with columns `self`, `other`.
    pub fn det(&self, other: &LatticePoint) -> BigInt {
        &self.x * &other.y - &self.y * &other.x
    }

    /// Converts to machine integers when both coordinates fit in `limit`.
    pub fn to_i64_within(&self, limit: i64) -> Option<(i64, i64)> {
        let x = self.x.to_i64()?;
        let y = self.y.to_i64()?;
        (x.abs() <= limit && y.abs() <= limit).then_some((x, y))
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from((x, y): (i64, i64)) -> Self {
        LatticePoint::new(x, y)
    }
}

// Coordinates travel as decimal strings so nothing is lost in JSON.
impl Serialize for LatticePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x.to_string(), self.y.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[String; 2]>::deserialize(d)?;
        let parse = |s: &str| s.parse::<BigInt>().map_err(serde::de::Error::custom);
        Ok(LatticePoint {
            x: parse(&x)?,
            y: parse(&y)?,
        })
    }
}

fn check_params(q: u64, k: u32) -> Result<()> {
    if q < 1 {
        return Err(Error::domain(format!("q must be positive, got {q}")));
    }
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    Ok(())
}

/// `q^{k+j} + q^{k-j} + 1`.
fn factor(q: &BigInt, k: u32, j: u32) -> BigInt {
    q.pow(k + j) + q.pow(k - j) + 1u32
}

/// The normalizer `X_{q,k} = prod_{j=1}^{k-1} (q^{k+j} + q^{k-j} + 1)`.
pub fn compute_x(q: u64, k: u32) -> Result<BigInt> {
    check_params(q, k)?;
    let qb = BigInt::from(q);
    Ok((1..k).map(|j| factor(&qb, k, j)).product())
}

/// The family `D_{q,k}` together with its normalizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorFamily {
    pub q: u64,
    pub k: u32,
    #[serde(rename = "X", with = "decimal")]
    pub x: BigInt,
    /// `points[j - 1]` is the point for index `j = 1..k-1`.
    pub points: Vec<LatticePoint>,
}

mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl GeneratorFamily {
    /// Builds `D_{q,k}`. Requires `q >= 2`, since for `q = 1` every point is
    /// a multiple of `(0, -3)`; use [`GeneratorFamily::build_unchecked`] to
    /// construct that degenerate family anyway.
    pub fn build(q: u64, k: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::domain(format!(
                "q must be at least 2 for a scalar-independent family (got {q}); \
                 use the unchecked constructor to force it"
            )));
        }
        Self::build_unchecked(q, k)
    }

    pub fn build_unchecked(q: u64, k: u32) -> Result<Self> {
        let x = compute_x(q, k)?;
        let qb = BigInt::from(q);
        let mut points = Vec::with_capacity(k as usize - 1);
        for j in 1..k {
            let den = factor(&qb, k, j);
            let (scale, rem) = x.div_rem(&den);
            if !rem.is_zero() {
                return Err(Error::invariant(format!(
                    "X_{{{q},{k}}} is not divisible by its factor for j = {j}"
                )));
            }
            let px = qb.pow(k + j) - qb.pow(k - j);
            let py = -qb.pow(j) - BigInt::from(2) * qb.pow(k);
            points.push(LatticePoint::new(&scale * px, &scale * py));
        }
        Ok(GeneratorFamily { q, k, x, points })
    }

    /// Builds the family with `q = Q!`.
    pub fn build_factorial(big_q: u32, k: u32) -> Result<Self> {
        Self::build(factorial_u64(big_q)?, k)
    }

    /// The point for index `j` (1-based).
    pub fn point(&self, j: usize) -> Result<&LatticePoint> {
        if j == 0 || j > self.points.len() {
            return Err(Error::domain(format!(
                "index j = {j} out of range 1..={}",
                self.points.len()
            )));
        }
        Ok(&self.points[j - 1])
    }

    /// All points of `±D` (each point followed by its negation).
    pub fn symmetric_points(&self) -> Vec<LatticePoint> {
        self.points
            .iter()
            .flat_map(|p| [p.clone(), p.neg()])
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `n!` as a machine integer (errors above `20!`).
pub fn factorial_u64(n: u32) -> Result<u64> {
    (1..=n as u64)
        .try_fold(1u64, |acc, i| acc.checked_mul(i))
        .ok_or_else(|| Error::domain(format!("{n}! does not fit in 64 bits")))
}

/// Whether `p` and `p2` are linearly dependent. Both must be non-zero.
pub fn is_scalar_multiple(p: &LatticePoint, p2: &LatticePoint) -> Result<bool> {
    if p.is_zero() || p2.is_zero() {
        return Err(Error::domain("scalar-multiple test needs non-zero points"));
    }
    Ok(p.det(p2).is_zero())
}

/// True when no two points of the family are scalar multiples.
pub fn verify_family_independent(fam: &GeneratorFamily) -> bool {
    points_pairwise_independent(&fam.points)
}

pub fn points_pairwise_independent(points: &[LatticePoint]) -> bool {
    for (i, p) in points.iter().enumerate() {
        for p2 in &points[i + 1..] {
            if is_scalar_multiple(p, p2).unwrap_or(true) {
                return false;
            }
        }
    }
    true
}

/// The primitive integer relation `c1 p1 + c2 p2 + c3 p3 = 0`.
///
/// The three points span a 2-dimensional space, so the kernel of the
/// `2 x 3` coefficient matrix is a line generated by the cross product
/// `(det(p2,p3), -det(p1,p3), det(p1,p2))`. Dividing by the gcd gives the
/// primitive generator, which is also the kernel vector of least L1 mass.
/// Sign is fixed so the first non-zero entry is positive.
pub fn primitive_kernel(
    p1: &LatticePoint,
    p2: &LatticePoint,
    p3: &LatticePoint,
) -> Result<[BigInt; 3]> {
    let mut c = [p2.det(p3), -p1.det(p3), p1.det(p2)];
    let g = c.iter().fold(BigInt::zero(), |g, v| g.gcd(v));
    if g.is_zero() {
        return Err(Error::domain(format!(
            "points {p1}, {p2}, {p3} are collinear; the relation space is not a line"
        )));
    }
    for v in c.iter_mut() {
        *v /= &g;
    }
    if c.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
        for v in c.iter_mut() {
            *v = -&*v;
        }
    }
    Ok(c)
}

/// L1 mass `|c1| + |c2| + |c3|`.
pub fn l1_mass(c: &[BigInt; 3]) -> BigInt {
    c.iter().map(|v| v.abs()).sum()
}

/// The separation constant for the sandwich bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SandwichEpsilon {
    Finite(ExactRational),
    /// `k < 4`: no triples exist and the bound is vacuous.
    Unbounded,
}

impl SandwichEpsilon {
    pub fn as_rational(&self) -> Option<&ExactRational> {
        match self {
            SandwichEpsilon::Finite(e) => Some(e),
            SandwichEpsilon::Unbounded => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            SandwichEpsilon::Finite(e) => e.to_f64().unwrap_or(0.0),
            SandwichEpsilon::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for SandwichEpsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SandwichEpsilon::Finite(e) => write!(f, "{e}"),
            SandwichEpsilon::Unbounded => f.write_str("inf"),
        }
    }
}

/// `min over triples j1<j2<j3 of 1 / (Q * m)`, `m` the L1 mass of the
/// primitive relation between the three points of `D_{Q!,k}`.
pub fn epsilon_qk(big_q: u32, k: u32) -> Result<SandwichEpsilon> {
    if big_q < 2 {
        return Err(Error::domain(format!("Q must be at least 2, got {big_q}")));
    }
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if k < 4 {
        return Ok(SandwichEpsilon::Unbounded);
    }
    let fam = GeneratorFamily::build_factorial(big_q, k)?;
    let pts = &fam.points;
    let mut max_mass: Option<BigInt> = None;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            for c in b + 1..pts.len() {
                let m = l1_mass(&primitive_kernel(&pts[a], &pts[b], &pts[c])?);
                if max_mass.as_ref().is_none_or(|cur| &m > cur) {
                    max_mass = Some(m);
                }
            }
        }
    }
    let m = max_mass.ok_or_else(|| Error::invariant("no triples for k >= 4"))?;
    Ok(SandwichEpsilon::Finite(BigRational::new(
        BigInt::one(),
        BigInt::from(big_q) * m,
    )))
}

fn q_pow_k(q: u64, k: u32) -> BigInt {
    BigInt::from(q).pow(k)
}

/// `(x^2 + x y / q^k + y^2) / X^2`, the exact squared length of `h(delta)`.
pub fn squared_embedded_norm(delta: &LatticePoint, q: u64, k: u32) -> Result<ExactRational> {
    let x_norm = compute_x(q, k)?;
    Ok(squared_norm_with(delta, &q_pow_k(q, k), &x_norm))
}

fn squared_norm_with(delta: &LatticePoint, qk: &BigInt, x_norm: &BigInt) -> ExactRational {
    let (x, y) = (&delta.x, &delta.y);
    // (q^k (x^2 + y^2) + x y) / (q^k X^2)
    let num = qk * (x * x + y * y) + x * y;
    let den = qk * x_norm * x_norm;
    BigRational::new(num, den)
}

/// Checks that `a * d_j` embeds at distance exactly `a`.
pub fn verify_edge(a: u64, j: usize, q: u64, k: u32) -> Result<bool> {
    let fam = GeneratorFamily::build_unchecked(q, k)?;
    let d = fam.point(j)?.scale(&BigInt::from(a));
    verify_displacement(&d, a, &fam)
}

/// Checks `|h(delta)|^2 = a^2` exactly for an arbitrary displacement.
pub fn verify_displacement(delta: &LatticePoint, a: u64, fam: &GeneratorFamily) -> Result<bool> {
    let norm = squared_norm_with(delta, &q_pow_k(fam.q, fam.k), &fam.x);
    let a = BigInt::from(a);
    Ok(norm == BigRational::from_integer(&a * &a))
}

/// A decimal fixed point number `mantissa / 10^scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedDecimal {
    pub mantissa: BigInt,
    pub scale: u32,
}

impl FixedDecimal {
    pub fn to_rational(&self) -> ExactRational {
        BigRational::new(self.mantissa.clone(), BigInt::from(10).pow(self.scale))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for FixedDecimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.mantissa.is_negative();
        let digits = self.mantissa.abs().to_string();
        let scale = self.scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - scale);
        if neg {
            f.write_str("-")?;
        }
        if scale == 0 {
            write!(f, "{int}")
        } else {
            write!(f, "{int}.{frac}")
        }
    }
}

/// Rounds `num / den` to the nearest integer (ties away from zero).
fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (q, r) = num.div_mod_floor(den);
    if (r * &two).abs() >= den.abs() {
        q + 1
    } else {
        q
    }
}

/// The image `h(p)` in the plane, to `precision` significant decimal digits.
///
/// Internally the fixed point scale is widened by the number of digits of
/// `X`, since non-zero images have length at least `1 / (sqrt(2) X)`.
pub fn embed_point(
    p: &LatticePoint,
    q: u64,
    k: u32,
    precision: u32,
) -> Result<(FixedDecimal, FixedDecimal)> {
    if precision < 15 {
        return Err(Error::domain(format!(
            "precision must be at least 15 digits, got {precision}"
        )));
    }
    let x_norm = compute_x(q, k)?;
    let scale = precision + x_norm.to_string().len() as u32 + 2;
    let ten_s = BigInt::from(10).pow(scale);
    let qk = q_pow_k(q, k);
    let two_qk = BigInt::from(2) * &qk;

    // first coordinate: (x + y / (2 q^k)) / X
    let num = (&p.x * &two_qk + &p.y) * &ten_s;
    let den = &two_qk * &x_norm;
    let cx = round_div(&num, &den);

    // second coordinate: y sqrt(4 q^{2k} - 1) / (2 q^k X)
    let guard = BigInt::from(10).pow(10);
    let radicand = (BigInt::from(4) * &qk * &qk - 1u32) * &ten_s * &ten_s * &guard * &guard;
    let root = radicand.sqrt(); // scaled by 10^scale * 10^10
    let num = &p.y * root;
    let den = &two_qk * &x_norm * &guard;
    let cy = round_div(&num, &den);

    Ok((
        FixedDecimal {
            mantissa: cx,
            scale,
        },
        FixedDecimal {
            mantissa: cy,
            scale,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    fn rat(n: i64, d: i64) -> ExactRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn frozen_epsilons() {
        // independently computed from the kernels of all triples
        let want = [
            (2, 4, 78_498u64),
            (3, 4, 157_487_898_603),
            (2, 5, 283_822),
            (3, 5, 1_248_718_007_715_357),
        ];
        for (q, k, den) in want {
            let eps = epsilon_qk(q, k).unwrap();
            assert_eq!(eps.as_rational(), Some(&BigRational::new(1.into(), den.into())), "Q={q} k={k}");
        }
        let fam = GeneratorFamily::build(2, 4).unwrap();
        let c = primitive_kernel(&fam.points[0], &fam.points[1], &fam.points[2]).unwrap();
        let c: Vec<BigInt> = c.to_vec();
        let want: Vec<BigInt> = [7298, -19113, 12838].map(BigInt::from).to_vec();
        let neg: Vec<BigInt> = want.iter().map(|x| -x).collect();
        assert!(c == want || c == neg, "{c:?}");
    }

    #[test]
    fn normalizer_values() {
        assert_eq!(compute_x(2, 2).unwrap(), BigInt::from(11));
        assert_eq!(compute_x(2, 3).unwrap(), BigInt::from(735));
        assert_eq!(compute_x(1, 4).unwrap(), BigInt::from(27));
        assert!(matches!(compute_x(0, 3), Err(Error::Domain(_))));
        assert!(matches!(compute_x(2, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn family_points() {
        assert_eq!(GeneratorFamily::build(2, 2).unwrap().points, vec![pt(6, -10)]);
        assert_eq!(
            GeneratorFamily::build(2, 3).unwrap().points,
            vec![pt(420, -630), pt(630, -420)]
        );
        let f = GeneratorFamily::build(3, 2).unwrap();
        assert_eq!(f.x, BigInt::from(31));
        assert_eq!(f.points, vec![pt(24, -21)]);
        assert!(GeneratorFamily::build(1, 3).is_err());
        assert!(GeneratorFamily::build_unchecked(1, 3).is_ok());
    }

    #[test]
    fn scalar_multiples() {
        assert!(is_scalar_multiple(&pt(1, 2), &pt(2, 4)).unwrap());
        assert!(!is_scalar_multiple(&pt(420, -630), &pt(630, -420)).unwrap());
        assert!(is_scalar_multiple(&pt(6, -10), &pt(-6, 10)).unwrap());
        assert!(is_scalar_multiple(&pt(0, 0), &pt(1, 1)).is_err());
    }

    #[test]
    fn independence_of_families() {
        assert!(verify_family_independent(&GeneratorFamily::build(2, 3).unwrap()));
        assert!(verify_family_independent(&GeneratorFamily::build(2, 6).unwrap()));
        let planted = GeneratorFamily {
            q: 2,
            k: 3,
            x: BigInt::one(),
            points: vec![pt(1, 2), pt(2, 4)],
        };
        assert!(!verify_family_independent(&planted));
        // q = 1 collapses every point onto one line
        assert!(!verify_family_independent(
            &GeneratorFamily::build_unchecked(1, 4).unwrap()
        ));
    }

    #[test]
    fn kernels() {
        let k = primitive_kernel(&pt(1, 0), &pt(0, 1), &pt(1, 1)).unwrap();
        assert_eq!(k, [1.into(), 1.into(), (-1).into()]);
        assert_eq!(l1_mass(&k), BigInt::from(3));
        let k = primitive_kernel(&pt(1, 0), &pt(0, 1), &pt(2, 3)).unwrap();
        assert_eq!(k, [2.into(), 3.into(), (-1).into()]);
        let k = primitive_kernel(&pt(2, 0), &pt(0, 2), &pt(1, 1)).unwrap();
        assert_eq!(k, [1.into(), 1.into(), (-2).into()]);
        assert!(primitive_kernel(&pt(1, 1), &pt(2, 2), &pt(3, 3)).is_err());
    }

    #[test]
    fn epsilon_small_k_is_unbounded() {
        assert_eq!(epsilon_qk(2, 3).unwrap(), SandwichEpsilon::Unbounded);
        assert_eq!(epsilon_qk(2, 2).unwrap(), SandwichEpsilon::Unbounded);
        assert!(epsilon_qk(2, 1).is_err());
    }

    #[test]
    fn embedded_norms() {
        assert_eq!(squared_embedded_norm(&pt(6, -10), 2, 2).unwrap(), rat(1, 1));
        assert_eq!(squared_embedded_norm(&pt(18, -30), 2, 2).unwrap(), rat(9, 1));
        assert_eq!(squared_embedded_norm(&pt(0, 0), 3, 4).unwrap(), rat(0, 1));
    }

    #[test]
    fn edges() {
        assert!(verify_edge(1, 1, 2, 3).unwrap());
        assert!(verify_edge(5, 2, 2, 3).unwrap());
        let fam = GeneratorFamily::build(2, 2).unwrap();
        assert!(!verify_displacement(&pt(1, 0), 1, &fam).unwrap());
        assert!(verify_edge(1, 3, 2, 3).is_err());
    }

    #[test]
    fn embedding_coordinates() {
        let (x, y) = embed_point(&pt(0, 0), 2, 2, 20).unwrap();
        assert!(x.mantissa.is_zero() && y.mantissa.is_zero());
        let (x, y) = embed_point(&pt(11, 0), 2, 2, 20).unwrap();
        assert_eq!(x.to_rational(), rat(1, 1));
        assert!(y.mantissa.is_zero());
        assert!(embed_point(&pt(1, 1), 2, 2, 10).is_err());
    }

    #[test]
    fn fixed_decimal_display() {
        let d = FixedDecimal {
            mantissa: BigInt::from(-5),
            scale: 3,
        };
        assert_eq!(d.to_string(), "-0.005");
        let d = FixedDecimal {
            mantissa: BigInt::from(12345),
            scale: 2,
        };
        assert_eq!(d.to_string(), "123.45");
    }

    #[test]
    fn family_json_shape() {
        let fam = GeneratorFamily::build(2, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fam.to_json().unwrap()).unwrap();
        assert_eq!(v["X"], "735");
        assert_eq!(v["points"][0][1], "-630");
        let back: GeneratorFamily = serde_json::from_value(v).unwrap();
        assert_eq!(back, fam);
    }
}
