//! The weighted Fourier sum `w^(u) = sum_{x in C} w(x) e(u . x)` of a centrally
//! symmetric weighted generating set, its infimum over the torus, and the
//! ratio bound
//!
//! ```text
//! alpha(G(Z^2, C)) <= -inf w^ / (sup w^ - inf w^)
//! ```
//!
//! on the independence density, with `sup w^ = w^(0) = sum w`.
//!
//! Since `C` is integral, `w^` is 1-periodic in each coordinate and the
//! infimum may be taken over the unit torus. [`certified_min`] samples it on
//! an `M x M` grid with a folded FFT and closes the off-grid gap with a
//! derivative bound; [`heuristic_min`] runs multistart descent and carries
//! no guarantee.

mod grid;
mod search;

pub use grid::{
    certified_min, certified_min_capped, grid_spectrum, read_grid, write_grid, GridSpectrum,
    MinCertificate, DEFAULT_MAX_GRID,
};
pub use search::{heuristic_min, HeuristicMin};

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlat::{GeneratorFamily, LatticePoint};
use crate::phase::{add_mod1, compensated_sum, Dyadic};
use crate::weights::{self, WeightProfile};

/// Largest coordinate magnitude accepted by this module. Products
/// `u . x` stay exact enough in `f64` and folding stays in `i64`.
pub const MAX_COORD: i64 = 1 << 53;

/// A generator with its weight. Only one of each `±x` pair is stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub x: i64,
    pub y: i64,
    pub weight: f64,
}

/// A centrally symmetric weighted generating set.
///
/// Representatives are stored with `x > 0`, or `x = 0` and `y > 0`; the set
/// proper is the closure under negation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSet {
    reps: Vec<Generator>,
}

fn canonical(x: i64, y: i64) -> (i64, i64, bool) {
    if x > 0 || (x == 0 && y > 0) {
        (x, y, false)
    } else {
        (-x, -y, true)
    }
}

impl WeightedSet {
    /// Closes `entries` under negation. Repeated listings must agree on the
    /// weight, and `x`, `-x` count as the same generator.
    pub fn symmetrize(entries: &[((i64, i64), f64)]) -> Result<Self> {
        let mut seen: HashMap<(i64, i64), f64> = HashMap::new();
        let mut order = Vec::new();
        for &((x, y), w) in entries {
            if x == 0 && y == 0 {
                return Err(Error::validation("zero generator"));
            }
            if x.abs() > MAX_COORD || y.abs() > MAX_COORD {
                return Err(Error::domain(format!(
                    "generator ({x}, {y}) exceeds the coordinate range 2^53"
                )));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::validation(format!(
                    "weight {w} of ({x}, {y}) is not a nonnegative number"
                )));
            }
            let (cx, cy, _) = canonical(x, y);
            match seen.get(&(cx, cy)) {
                Some(&prev) if prev != w => {
                    return Err(Error::validation(format!(
                        "conflicting weights {prev} and {w} for ±({cx}, {cy})"
                    )))
                }
                Some(_) => {}
                None => {
                    seen.insert((cx, cy), w);
                    order.push(Generator {
                        x: cx,
                        y: cy,
                        weight: w,
                    });
                }
            }
        }
        let set = WeightedSet { reps: order };
        if !(set.sup_value() > 0.0) {
            return Err(Error::validation("total weight must be positive"));
        }
        Ok(set)
    }

    /// As [`WeightedSet::symmetrize`] with arbitrary precision points.
    pub fn from_lattice(entries: &[(LatticePoint, f64)]) -> Result<Self> {
        let mut small = Vec::with_capacity(entries.len());
        for (p, w) in entries {
            let xy = p.to_i64_within(MAX_COORD).ok_or_else(|| {
                Error::domain(format!("generator {p} exceeds the coordinate range 2^53"))
            })?;
            small.push((xy, *w));
        }
        Self::symmetrize(&small)
    }

    /// Each weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("scale must be positive, got {c}")));
        }
        Ok(WeightedSet {
            reps: self
                .reps
                .iter()
                .map(|g| Generator {
                    weight: g.weight * c,
                    ..*g
                })
                .collect(),
        })
    }

    pub fn representatives(&self) -> &[Generator] {
        &self.reps
    }

    /// All points of the symmetric closure with their weights.
    pub fn full_points(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.reps
            .iter()
            .flat_map(|g| [((g.x, g.y), g.weight), ((-g.x, -g.y), g.weight)])
    }

    pub fn len_full(&self) -> usize {
        2 * self.reps.len()
    }

    /// The largest coordinate magnitude.
    pub fn max_coord(&self) -> i64 {
        self.reps
            .iter()
            .map(|g| g.x.abs().max(g.y.abs()))
            .max()
            .unwrap_or(0)
    }

    /// `sum_{x in C} w(x)` over the full symmetric set, which is `w^(0)`.
    pub fn sup_value(&self) -> f64 {
        2.0 * compensated_sum(self.reps.iter().map(|g| g.weight))
    }

    /// `w^(u)`, summed as `2 w(x) cos(2 pi u.x)` over representatives.
    pub fn what_eval(&self, u: [f64; 2]) -> f64 {
        let (d1, d2) = (Dyadic::from_f64(u[0]), Dyadic::from_f64(u[1]));
        compensated_sum(self.reps.iter().map(|g| {
            let t = add_mod1(
                d1.frac_mul_i128(g.x as i128),
                d2.frac_mul_i128(g.y as i128),
            );
            2.0 * g.weight * (TAU * t).cos()
        }))
    }

    /// `w^(u)` and its gradient.
    pub fn value_and_gradient(&self, u: [f64; 2]) -> (f64, [f64; 2]) {
        let (d1, d2) = (Dyadic::from_f64(u[0]), Dyadic::from_f64(u[1]));
        let (mut v, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for g in &self.reps {
            let t = add_mod1(
                d1.frac_mul_i128(g.x as i128),
                d2.frac_mul_i128(g.y as i128),
            );
            let (s, c) = (TAU * t).sin_cos();
            v += 2.0 * g.weight * c;
            let ds = -2.0 * TAU * g.weight * s;
            g1 += ds * g.x as f64;
            g2 += ds * g.y as f64;
        }
        (v, [g1, g2])
    }

    /// `L = 2 pi sum_{x in C} w(x) |x|`, a bound on `|grad w^|`.
    pub fn lipschitz_bound(&self) -> f64 {
        2.0 * TAU
            * compensated_sum(
                self.reps
                    .iter()
                    .map(|g| g.weight * (g.x as f64).hypot(g.y as f64)),
            )
    }

    /// `H = 4 pi^2 sum_{x in C} w(x) |x|^2`, a bound on the operator norm of
    /// the Hessian of `w^`.
    pub fn hessian_bound(&self) -> f64 {
        2.0 * TAU
            * TAU
            * compensated_sum(self.reps.iter().map(|g| {
                let (x, y) = (g.x as f64, g.y as f64);
                g.weight * (x * x + y * y)
            }))
    }
}

/// Free function form of [`WeightedSet::what_eval`].
pub fn what_eval(w: &WeightedSet, u: [f64; 2]) -> f64 {
    w.what_eval(u)
}

pub fn sup_value(w: &WeightedSet) -> f64 {
    w.sup_value()
}

pub fn lipschitz_bound(w: &WeightedSet) -> f64 {
    w.lipschitz_bound()
}

/// `-inf / (sup - inf)`.
///
/// For fixed `sup > 0` the map `t -> -t / (sup - t)` is decreasing in `t`
/// on `t < 0` (its derivative is `-sup / (sup - t)^2`), so any certified
/// lower bound on the infimum gives a valid, possibly weaker, upper bound.
pub fn ratio_bound(sup: f64, inf_lower: f64) -> Result<f64> {
    if !(inf_lower < 0.0 && sup > 0.0) {
        return Err(Error::domain(format!(
            "ratio bound needs inf < 0 < sup, got inf = {inf_lower}, sup = {sup}"
        )));
    }
    Ok(-inf_lower / (sup - inf_lower))
}

/// `ceil(1 / alpha)`, after shrinking `1 / alpha` by a relative `1e-12` so
/// that values like `1 / (1/3)` computed as `3.0000000000000004` give 3.
pub fn chi_lower(alpha_upper: f64) -> Result<u64> {
    if !(alpha_upper > 0.0 && alpha_upper <= 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1], got {alpha_upper}"
        )));
    }
    Ok(((1.0 / alpha_upper) * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Certified,
    Heuristic,
}

/// The outcome of the ratio bound pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub sup: f64,
    pub inf_lower: f64,
    pub alpha_upper: f64,
    pub chi_lower: u64,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<MinCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heuristic: Option<HeuristicMin>,
}

impl RatioReport {
    pub fn from_bracket(sup: f64, inf_lower: f64, mode: Mode) -> Result<Self> {
        let alpha_upper = ratio_bound(sup, inf_lower)?;
        Ok(RatioReport {
            sup,
            inf_lower,
            alpha_upper,
            chi_lower: chi_lower(alpha_upper)?,
            mode,
            certificate: None,
            heuristic: None,
        })
    }

    /// Certified pipeline starting at grid size `m`. The infimum bound is the
    /// better of the two lower bounds carried by the certificate.
    pub fn certified(w: &WeightedSet, m: usize) -> Result<Self> {
        Self::certified_capped(w, m, DEFAULT_MAX_GRID)
    }

    pub fn certified_capped(w: &WeightedSet, m: usize, cap: usize) -> Result<Self> {
        let cert = certified_min_capped(w, m, cap)?;
        let mut r = Self::from_bracket(w.sup_value(), cert.best_lower(), Mode::Certified)?;
        r.certificate = Some(cert);
        Ok(r)
    }

    /// Uncertified pipeline: the infimum is replaced by the best value found.
    pub fn heuristic(w: &WeightedSet, starts: usize, iterations: usize, seed: u64) -> Result<Self> {
        let h = heuristic_min(w, starts, iterations, seed)?;
        let mut r = Self::from_bracket(w.sup_value(), h.value, Mode::Heuristic)?;
        r.heuristic = Some(h);
        Ok(r)
    }
}

fn checked_coord(v: i128) -> Result<i64> {
    if v.abs() > MAX_COORD as i128 {
        return Err(Error::domain(format!(
            "coordinate {v} exceeds the range 2^53; reduce k or T"
        )));
    }
    Ok(v as i64)
}

/// Weights for the truncation of
/// `G_k = G(Z^2, (2Z+1) {(2^{k-j}, 2^{k+j}) : 1 <= j <= k-1})` to odd
/// multipliers below `2T`.
///
/// The multiplier `2m+1` gets weight proportional to `1 - (2m+1)/(2T)`,
/// normalised so that each direction `j` carries total weight 1 over its
/// representatives.
pub fn build_gk_weights(k: u32, t: u32) -> Result<WeightedSet> {
    if k < 2 || t < 1 {
        return Err(Error::domain(format!("need k >= 2 and T >= 1, got k = {k}, T = {t}")));
    }
    if 2 * k - 1 > 60 {
        return Err(Error::domain(format!("k = {k} puts coordinates out of range")));
    }
    let tri = |m: u32| 1.0 - (2 * m + 1) as f64 / (2 * t) as f64;
    let total = compensated_sum((0..t).map(tri));
    let mut entries = Vec::with_capacity(((k - 1) * t) as usize);
    for j in 1..k {
        let (bx, by) = (1i128 << (k - j), 1i128 << (k + j));
        for m in 0..t {
            let odd = (2 * m + 1) as i128;
            let p = (checked_coord(odd * bx)?, checked_coord(odd * by)?);
            entries.push((p, tri(m) / total));
        }
    }
    WeightedSet::symmetrize(&entries)
}

/// `{a d : w = profile(a)}` for `a` in the profile support and `d` in the
/// family, symmetrized.
///
/// Family points are pairwise scalar independent, so the products are
/// distinct. `scale_cap` bounds the coordinates of the products.
pub fn build_distance_weights(
    profile: &WeightProfile,
    fam: &GeneratorFamily,
    scale_cap: i64,
) -> Result<WeightedSet> {
    let cap = scale_cap.min(MAX_COORD);
    let mut entries = Vec::with_capacity(profile.support.len() * fam.points.len());
    for d in &fam.points {
        for &(a, g) in &profile.support {
            let p = d.scale(&BigInt::from(a));
            let xy = p.to_i64_within(cap).ok_or_else(|| {
                Error::domain(format!(
                    "generator {a} * {d} exceeds the coordinate cap {cap}; reduce N, q or k"
                ))
            })?;
            entries.push((xy, g));
        }
    }
    WeightedSet::symmetrize(&entries)
}

/// `(4 + 2kCQ^{-1/(2r)}) / (2k + 2 + 2kCQ^{-1/(2r)})` and its `chi` bound.
pub fn poly_bound_formula(k: u32, q: f64, c: f64, r: u32) -> Result<(f64, u64)> {
    if k < 2 || !(q >= 2.0) || r < 3 || !(c > 0.0) {
        return Err(Error::domain(format!(
            "need k >= 2, Q >= 2, r >= 3, C > 0 (got k = {k}, Q = {q}, C = {c}, r = {r})"
        )));
    }
    let e = 2.0 * k as f64 * c * q.powf(-1.0 / (2.0 * r as f64));
    let alpha = (4.0 + e) / (2.0 * k as f64 + 2.0 + e);
    Ok((alpha, chi_lower(alpha)?))
}

/// The `Q -> infinity` limit `4 / (2k + 2)`.
pub fn poly_bound_limit(k: u32) -> f64 {
    4.0 / (2.0 * k as f64 + 2.0)
}

/// `(2 + kM) / (k + 1 + kM)` with `M = max_{r > Q} 1/phi(r)`.
pub fn prime_bound_formula(k: u32, q: u64) -> Result<(f64, u64)> {
    if k < 2 || q < 2 {
        return Err(Error::domain(format!("need k, Q >= 2 (got k = {k}, Q = {q})")));
    }
    let (m, _) = weights::max_inv_phi_above(q)?;
    let m = *m.numer() as f64 / *m.denom() as f64;
    let kf = k as f64;
    let alpha = (2.0 + kf * m) / (kf + 1.0 + kf * m);
    Ok((alpha, chi_lower(alpha)?))
}

/// The `Q -> infinity` limit `2 / (k + 1)`.
pub fn prime_bound_limit(k: u32) -> f64 {
    2.0 / (k as f64 + 1.0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn triangle() -> WeightedSet {
        WeightedSet::symmetrize(&[((1, 0), 1.0), ((0, 1), 1.0), ((1, 1), 1.0)]).unwrap()
    }

    pub fn axis() -> WeightedSet {
        WeightedSet::symmetrize(&[((1, 0), 1.0)]).unwrap()
    }

    #[test]
    fn symmetrize_rules() {
        let w = axis();
        let full: Vec<_> = w.full_points().collect();
        assert_eq!(full, vec![((1, 0), 1.0), ((-1, 0), 1.0)]);
        assert!(matches!(
            WeightedSet::symmetrize(&[((1, 0), 1.0), ((-1, 0), 2.0)]),
            Err(Error::Validation(_))
        ));
        assert!(WeightedSet::symmetrize(&[((1, 0), 1.0), ((-1, 0), 1.0)]).is_ok());
        assert!(matches!(
            WeightedSet::symmetrize(&[((0, 0), 1.0)]),
            Err(Error::Validation(_))
        ));
        assert!(WeightedSet::symmetrize(&[((1, 0), -1.0)]).is_err());
        assert!(WeightedSet::symmetrize(&[((1, 0), 0.0)]).is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(axis().what_eval([0.0, 0.0]), 2.0);
        assert!((axis().what_eval([0.5, 0.37]) + 2.0).abs() < 1e-15);
        assert!((triangle().what_eval([1.0 / 3.0, 1.0 / 3.0]) + 3.0).abs() < 1e-12);
        assert_eq!(axis().sup_value(), 2.0);
        assert_eq!(triangle().sup_value(), 6.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = WeightedSet::symmetrize(&[((3, -2), 0.7), ((1, 5), 1.3), ((4, 4), 0.2)]).unwrap();
        let u = [0.123, 0.789];
        let (_, g) = w.value_and_gradient(u);
        let h = 1e-6;
        for i in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[i] += h;
            dn[i] -= h;
            let fd = (w.what_eval(up) - w.what_eval(dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn lipschitz_values() {
        use std::f64::consts::PI;
        assert!((axis().lipschitz_bound() - 4.0 * PI).abs() < 1e-12);
        let w = WeightedSet::symmetrize(&[((3, 4), 1.0)]).unwrap();
        assert!((w.lipschitz_bound() - 20.0 * PI).abs() < 1e-12);
        let want = (8.0 + 4.0 * 2f64.sqrt()) * PI;
        assert!((triangle().lipschitz_bound() - want).abs() < 1e-12);
    }

    #[test]
    fn ratio_and_chi() {
        assert_eq!(ratio_bound(2.0, -2.0).unwrap(), 0.5);
        assert!((ratio_bound(6.0, -3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ratio_bound(4.0, -4.0).unwrap(), 0.5);
        assert!(ratio_bound(2.0, 0.0).is_err());
        assert_eq!(chi_lower(0.5).unwrap(), 2);
        assert_eq!(chi_lower(1.0 / 3.0).unwrap(), 3);
        assert_eq!(chi_lower(7.0 / 11.0).unwrap(), 2);
        assert!(chi_lower(0.0).is_err());
    }

    #[test]
    fn ratio_monotone_in_inf() {
        let a = ratio_bound(6.0, -3.0).unwrap();
        let b = ratio_bound(6.0, -3.1).unwrap();
        assert!(b > a);
    }

    #[test]
    fn gk_weights() {
        let w = build_gk_weights(2, 1).unwrap();
        assert_eq!(w.representatives(), &[Generator { x: 2, y: 8, weight: 1.0 }]);
        let w = build_gk_weights(3, 2).unwrap();
        let reps: Vec<_> = w.representatives().iter().map(|g| (g.x, g.y, g.weight)).collect();
        assert_eq!(
            reps,
            vec![
                (4, 16, 0.75),
                (12, 48, 0.25),
                (2, 32, 0.75),
                (6, 96, 0.25)
            ]
        );
        for k in 2..6 {
            let s = build_gk_weights(k, 7).unwrap().sup_value();
            assert!((s - 2.0 * (k - 1) as f64).abs() < 1e-12);
        }
        assert!(build_gk_weights(40, 2).is_err());
    }

    #[test]
    fn formulas() {
        let (a, c) = poly_bound_formula(3, 64.0, 1.0, 3).unwrap();
        assert!((a - 7.0 / 11.0).abs() < 1e-15);
        assert_eq!(c, 2);
        let (a, _) = poly_bound_formula(2, 4096.0, 1.0, 3).unwrap();
        assert!((a - 5.0 / 7.0).abs() < 1e-15);
        let (a, c) = prime_bound_formula(10, 6).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c, 3);
        let (a, _) = prime_bound_formula(2, 2).unwrap();
        assert!((a - 0.75).abs() < 1e-15);
        assert!((poly_bound_formula(3, 1e300, 1.0, 3).unwrap().0 - poly_bound_limit(3)).abs() < 1e-6);
    }
}
