//! Weyl sums, the integral/major/minor arc decomposition of frequencies,
//! rational approximation, and the sandwich count.
//!
//! Phases `alpha * n` are reduced exactly: the `f64` frequency is a dyadic
//! rational and `n` an exact integer (see [`crate::phase`]), so the only
//! rounding per term is in evaluating `e(t)` for `t` in `[0, 1)`.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlat::{GeneratorFamily, LatticePoint, SandwichEpsilon};
use crate::phase::{cis, CompensatedSum, Dyadic};
use crate::weights::{self, IntPolynomial, PrimeTable, WeightProfile};

/// `rho_r = 1 / (8 r^2 (ln r + 1.5 ln ln r + 4.2))`.
pub fn rho(r: u32) -> f64 {
    let rf = r as f64;
    1.0 / (8.0 * rf * rf * (rf.ln() + 1.5 * rf.ln().ln() + 4.2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArcVariant {
    Poly { r: u32, n: u64, q: u64, rho: f64 },
    Prime { n: u64, q: u64, b: u32, c: u32 },
}

/// `N^{-r + 1/r}`.
pub fn poly_width(r: u32, n: u64) -> f64 {
    let rf = r as f64;
    (n as f64).powf(-rf + 1.0 / rf)
}

/// `(log N)^9 / N`.
pub fn prime_width(n: u64) -> f64 {
    (n as f64).ln().powi(9) / n as f64
}

/// Arcs of common `width` around the integers and around `a/b`, `2 <= b <= Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcScheme {
    pub variant: ArcVariant,
    pub width: f64,
}

impl ArcScheme {
    /// Width `N^{-r + 1/r}`.
    pub fn poly(r: u32, n: u64, q: u64) -> Result<Self> {
        if r < 3 {
            return Err(Error::domain(format!("degree r must be at least 3, got {r}")));
        }
        Self::checked(ArcVariant::Poly { r, n, q, rho: rho(r) }, poly_width(r, n))
    }

    /// Width `(log N)^9 / N`.
    pub fn prime(n: u64, q: u64) -> Result<Self> {
        Self::prime_with_width(n, q, prime_width(n))
    }

    /// A prime scheme with an explicit width, for sizes where the natural
    /// width is too wide for the arcs to be disjoint.
    pub fn prime_with_width(n: u64, q: u64, width: f64) -> Result<Self> {
        Self::checked(ArcVariant::Prime { n, q, b: 9, c: 19 }, width)
    }

    fn checked(variant: ArcVariant, width: f64) -> Result<Self> {
        let (n, q) = match variant {
            ArcVariant::Poly { n, q, .. } | ArcVariant::Prime { n, q, .. } => (n, q),
        };
        if q < 2 {
            return Err(Error::domain(format!("Q must be at least 2, got {q}")));
        }
        if n < 2 {
            return Err(Error::domain(format!("N must be at least 2, got {n}")));
        }
        let limit = 1.0 / (2.0 * (q as f64).powi(2));
        if !(width > 0.0 && width < limit) {
            return Err(Error::domain(format!(
                "arc width {width:e} must lie in (0, 1/(2Q^2) = {limit:e}) for disjoint arcs; \
                 increase N or decrease Q"
            )));
        }
        Ok(ArcScheme { variant, width })
    }

    pub fn q(&self) -> u64 {
        match self.variant {
            ArcVariant::Poly { q, .. } | ArcVariant::Prime { q, .. } => q,
        }
    }

    pub fn n(&self) -> u64 {
        match self.variant {
            ArcVariant::Poly { n, .. } | ArcVariant::Prime { n, .. } => n,
        }
    }

    pub fn classify(&self, alpha: f64) -> ArcLabel {
        classify_with(alpha, self.width, self.q())
    }
}

/// Which arc a frequency falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "label")]
pub enum ArcLabel {
    Integral { a: i64 },
    Major { a: i64, b: u64 },
    Minor,
}

impl std::fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArcLabel::Integral { a } => write!(f, "Integral{{{a}}}"),
            ArcLabel::Major { a, b } => write!(f, "Major{{{a},{b}}}"),
            ArcLabel::Minor => f.write_str("Minor"),
        }
    }
}

pub fn classify(alpha: f64, scheme: &ArcScheme) -> ArcLabel {
    scheme.classify(alpha)
}

fn classify_with(alpha: f64, width: f64, q: u64) -> ArcLabel {
    let a = alpha.round();
    if (alpha - a).abs() <= width {
        return ArcLabel::Integral { a: a as i64 };
    }
    for b in 2..=q {
        let bf = b as f64;
        let a = (alpha * bf).round();
        if a == 0.0 {
            continue;
        }
        let ai = a as i64;
        if ai.gcd(&(b as i64)) == 1 && (alpha * bf - a).abs() / bf <= width {
            return ArcLabel::Major { a: ai, b };
        }
    }
    ArcLabel::Minor
}

/// A plain exponential sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylResult {
    pub value: Complex64,
    /// Number of terms, or the total mass for sums with weights.
    pub terms: f64,
    pub normalized_modulus: f64,
}

impl WeylResult {
    fn new(value: Complex64, terms: f64) -> Self {
        WeylResult {
            value,
            terms,
            normalized_modulus: if terms > 0.0 { value.norm() / terms } else { 0.0 },
        }
    }
}

#[derive(Default)]
struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `sum_{j=M+1}^{N} e(alpha f(j))`.
pub fn weyl_poly(f: &IntPolynomial, alpha: f64, m: u64, n: u64) -> Result<WeylResult> {
    if n <= m {
        return Err(Error::domain(format!("need N > M, got N = {n}, M = {m}")));
    }
    let d = Dyadic::from_f64(alpha);
    let mut s = ComplexSum::default();
    for j in m + 1..=n {
        let fj = f.eval(&BigInt::from(j));
        let t = match fj.to_i128() {
            Some(v) => d.frac_mul_i128(v),
            None => d.frac_mul_big(&fj),
        };
        s.add(cis(t));
    }
    Ok(WeylResult::new(s.value(), (n - m) as f64))
}

/// `sum_a g(a) e(alpha a)` over the support of a profile.
pub fn weighted_sum(profile: &WeightProfile, alpha: f64) -> Complex64 {
    let d = Dyadic::from_f64(alpha);
    let mut s = ComplexSum::default();
    for &(a, g) in &profile.support {
        s.add(cis(d.frac_mul_i128(a as i128)) * g);
    }
    s.value()
}

/// `sum_a g(a) 2 cos(2 pi alpha a)`, the contribution of one direction
/// `±d` to `w^` when `alpha = u . d`.
pub fn direction_sum(profile: &WeightProfile, alpha: f64) -> f64 {
    2.0 * weighted_sum(profile, alpha).re
}

/// `sum_j g(j) e(alpha f(j))` for a polynomial profile.
pub fn weighted_weyl_poly(profile: &WeightProfile, alpha: f64) -> Result<Complex64> {
    if !profile.is_poly() {
        return Err(Error::domain("expected a polynomial profile"));
    }
    Ok(weighted_sum(profile, alpha))
}

/// `sum_{p <= N} g(p) e(alpha p)` for a prime profile.
pub fn weighted_weyl_prime(profile: &WeightProfile, alpha: f64) -> Result<Complex64> {
    if profile.is_poly() {
        return Err(Error::domain("expected a prime profile"));
    }
    Ok(weighted_sum(profile, alpha))
}

/// `sum_{p <= N} (log p) e(alpha p)`, with `terms = theta(N)`.
pub fn weyl_prime(alpha: f64, n: u64, table: &PrimeTable) -> Result<WeylResult> {
    let theta = table.theta(n)?;
    let d = Dyadic::from_f64(alpha);
    let mut s = ComplexSum::default();
    for p in table.primes_up_to(n) {
        s.add(cis(d.frac_mul_i128(p as i128)) * (p as f64).ln());
    }
    Ok(WeylResult::new(s.value(), theta))
}

fn rational_of(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::domain(format!("{x} is not finite")))
}

/// Coprime `(a, b)` with `1 <= b <= W` and `|alpha - a/b| <= 1/(bW)`,
/// closest to `alpha`, ties broken by smaller `b` then smaller `a`.
///
/// Every best approximation is a convergent or semiconvergent of the
/// continued fraction of `alpha`, so only those are examined. The `f64`
/// inputs are treated as the exact rationals they represent.
pub fn dirichlet_approx(alpha: f64, w: f64) -> Result<(i64, u64)> {
    if !(w >= 1.0 && w.is_finite()) {
        return Err(Error::domain(format!("W must be a finite number >= 1, got {w}")));
    }
    let x = rational_of(alpha)?;
    let wq = rational_of(w)?;
    let bmax = BigInt::from(w.floor() as u64);

    let mut cands: Vec<(BigInt, BigInt)> = Vec::new();
    // p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    loop {
        let a = rest.floor().to_integer();
        // semiconvergents (t p1 + p0) / (t q1 + q0), t = 1..=a, the last one
        // being the next convergent
        let t_lo = if q1.is_zero() { a.clone() } else { BigInt::one() };
        let t_hi = if q1.is_zero() {
            a.clone()
        } else {
            // largest t with t q1 + q0 <= bmax
            a.clone().min((&bmax - &q0).div_floor(&q1))
        };
        let mut t = t_lo.clone();
        while t <= t_hi {
            let den = &t * &q1 + &q0;
            if den.is_positive() && den <= bmax {
                cands.push((&t * &p1 + &p0, den));
            }
            t += 1;
        }
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > bmax {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    // the neighbours floor(alpha) and floor(alpha) + 1 over 1
    let fl = x.floor().to_integer();
    cands.push((fl.clone(), BigInt::one()));
    cands.push((fl + 1, BigInt::one()));

    let mut best: Option<(BigRational, BigInt, BigInt)> = None;
    for (a, b) in cands {
        let dist = (&x - BigRational::new(a.clone(), b.clone())).abs();
        let bound = (BigRational::from_integer(b.clone()) * &wq).recip();
        if dist > bound || a.gcd(&b) != BigInt::one() {
            continue;
        }
        let key = (dist, b, a);
        if best.as_ref().is_none_or(|cur| key < *cur) {
            best = Some(key);
        }
    }
    let (_, b, a) = best.ok_or_else(|| {
        Error::invariant(format!("no rational approximation found for {alpha} with W = {w}"))
    })?;
    let a = a
        .to_i64()
        .ok_or_else(|| Error::domain(format!("numerator for {alpha} exceeds 64 bits")))?;
    Ok((a, b.to_u64().unwrap()))
}

/// One evaluated frequency of a scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub alpha: f64,
    pub modulus: f64,
    pub label: ArcLabel,
}

/// Summary of a minor arc scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub scheme: ArcScheme,
    pub seed: u64,
    pub grid: usize,
    pub probes: usize,
    pub minor_samples: usize,
    pub max_normalized_modulus: f64,
    pub argmax_alpha: f64,
    /// Poly: `max / Q^{-1/(2r)}`. Prime: `max |(1/N) sum (log p) e(alpha p)|`
    /// divided by `max_{r > Q} 1/phi(r)`.
    pub empirical_constant: f64,
    /// Prime only: `max_{r > Q} 1/phi(r)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<f64>,
}

/// Rational probes are taken at `a/b` for every `b` up to this bound, fixed
/// independently of `Q` so that scans at different `Q` share them.
pub const PROBE_MAX_DENOMINATOR: u64 = 64;

fn probe_alphas(width: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for b in 1..=PROBE_MAX_DENOMINATOR {
        for a in 0..b {
            if a.gcd(&b) != 1 {
                continue;
            }
            let c = a as f64 / b as f64;
            for off in [0.0, -1.25 * width, 1.25 * width] {
                let t = c + off;
                out.push(t - t.floor());
            }
        }
    }
    out
}

/// Maximum over minor-arc frequencies of the normalised sum.
///
/// Frequencies are `grid` stratified uniform samples of `[0, 1)` (one per
/// cell `[i/grid, (i+1)/grid)`), plus deterministic probes at and beside the
/// rationals `a/b`, `b <= 64`. Only Minor frequencies are kept. For a poly
/// profile the modulus is `|sum g(j) e(alpha f(j))| / sum g`; for a prime
/// profile it is `|sum (log p) e(alpha p)| / theta(N)`.
pub fn minor_scan(
    profile: &WeightProfile,
    scheme: &ArcScheme,
    grid: usize,
    seed: u64,
) -> Result<(ScanReport, Vec<ScanSample>)> {
    if grid < 1000 {
        return Err(Error::domain(format!("grid must be at least 1000, got {grid}")));
    }
    let poly = match (&scheme.variant, profile.is_poly()) {
        (ArcVariant::Poly { .. }, true) => true,
        (ArcVariant::Prime { .. }, false) => false,
        _ => return Err(Error::domain("profile and arc scheme are of different kinds")),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphas: Vec<f64> = (0..grid)
        .map(|i| (i as f64 + rng.random::<f64>()) / grid as f64)
        .collect();
    let probes = probe_alphas(scheme.width);
    let n_probes = probes.len();
    alphas.extend(probes);

    // unweighted log p masses for the prime scheme
    let log_profile = (!poly).then(|| WeightProfile {
        support: profile
            .support
            .iter()
            .map(|&(p, _)| (p, (p as f64).ln()))
            .collect(),
        ..profile.clone()
    });
    let (eval_profile, mass) = match &log_profile {
        Some(lp) => (lp, lp.total()),
        None => (profile, profile.total()),
    };
    if !(mass > 0.0) {
        return Err(Error::domain("profile has no mass"));
    }

    let samples: Vec<ScanSample> = alphas
        .par_iter()
        .filter_map(|&alpha| {
            let label = scheme.classify(alpha);
            (label == ArcLabel::Minor).then(|| ScanSample {
                alpha,
                modulus: weighted_sum(eval_profile, alpha).norm() / mass,
                label,
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::domain(
            "every sampled frequency fell in an integral or major arc",
        ));
    }
    let best = samples
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.modulus > a.modulus || (b.modulus == a.modulus && b.alpha < a.alpha) {
                b
            } else {
                a
            }
        })
        .unwrap();
    let (empirical_constant, reference) = match scheme.variant {
        ArcVariant::Poly { r, q, .. } => (
            best.modulus / (q as f64).powf(-1.0 / (2.0 * r as f64)),
            None,
        ),
        ArcVariant::Prime { n, q, .. } => {
            let (m, _) = weights::max_inv_phi_above(q)?;
            let m = *m.numer() as f64 / *m.denom() as f64;
            (best.modulus * mass / n as f64 / m, Some(m))
        }
    };
    let report = ScanReport {
        scheme: scheme.clone(),
        seed,
        grid,
        probes: n_probes,
        minor_samples: samples.len(),
        max_normalized_modulus: best.modulus,
        argmax_alpha: best.alpha,
        empirical_constant,
        reference,
    };
    Ok((report, samples))
}

/// Writes `alpha,modulus,label` rows with a header.
pub fn write_scan_csv(path: &Path, samples: &[ScanSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["alpha", "modulus", "label"])
        .map_err(csv_err)?;
    for s in samples {
        w.write_record([
            format!("{:.17e}", s.alpha),
            format!("{:.17e}", s.modulus),
            s.label.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Minimum of `sum g(a) 2 cos(2 pi alpha a)` over `points` equally spaced
/// `alpha` in `[0, width]` (the sum is even in `alpha`). Widths beyond `1/2`
/// cover a whole period, so the grid is taken over `[0, 1/2]` instead.
pub fn integral_arc_min(profile: &WeightProfile, width: f64, points: usize) -> Result<(f64, f64)> {
    if points < 2 || !(width > 0.0) {
        return Err(Error::domain("need at least 2 points and a positive width"));
    }
    let span = width.min(0.5);
    let best = (0..points)
        .into_par_iter()
        .map(|i| {
            let alpha = span * i as f64 / (points - 1) as f64;
            (direction_sum(profile, alpha), alpha)
        })
        .reduce(
            || (f64::INFINITY, f64::INFINITY),
            |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a },
        );
    Ok(best)
}

/// Sum over directions `d` of the family of the `±d` contribution to `w^(u)`,
/// restricted to directions whose phase `u . d` is Major.
pub fn major_arc_mass(
    profile: &WeightProfile,
    scheme: &ArcScheme,
    fam: &GeneratorFamily,
    u: [f64; 2],
) -> f64 {
    let (d1, d2) = (Dyadic::from_f64(u[0]), Dyadic::from_f64(u[1]));
    let mut s = CompensatedSum::new();
    for d in &fam.points {
        let t = crate::phase::add_mod1(d1.frac_mul_big(&d.x), d2.frac_mul_big(&d.y));
        if matches!(scheme.classify(t), ArcLabel::Major { .. }) {
            s.add(direction_sum(profile, t));
        }
    }
    s.value()
}

/// A frequency vector, rational or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum Frequency {
    Rational([BigRational; 2]),
    Float([f64; 2]),
}

impl Frequency {
    fn exact(&self) -> Result<[BigRational; 2]> {
        match self {
            Frequency::Rational(r) => Ok(r.clone()),
            Frequency::Float([a, b]) => Ok([rational_of(*a)?, rational_of(*b)?]),
        }
    }
}

/// Whether some coprime `a != 0`, `2 <= b <= Q` has `|t - a/b| < eps`.
fn near_major_center(t: &BigRational, q: u64, eps: Option<&BigRational>) -> bool {
    let Some(eps) = eps else {
        return true;
    };
    for b in 2..=q {
        let bb = BigRational::from_integer(BigInt::from(b));
        let tb = t * &bb;
        let eb = eps * &bb;
        // integers a with |tb - a| < eb
        let lo: BigInt = (&tb - &eb).floor().to_integer() + 1;
        let hi: BigInt = (&tb + &eb).ceil().to_integer() - 1;
        if hi < lo {
            continue;
        }
        if &hi - &lo + 1 >= BigInt::from(b) {
            // b consecutive integers contain one that is 1 mod b
            return true;
        }
        let bi = BigInt::from(b);
        let mut a = lo;
        while a <= hi {
            if !a.is_zero() && a.gcd(&bi).is_one() {
                return true;
            }
            a += 1;
        }
    }
    false
}

/// Points `d` of `±D_{Q!,k}` whose phase `u . d` lies within `eps` of a
/// major arc center, and whether that set is closed under negation.
/// `u . d` is computed exactly.
pub fn sandwich_count(
    u: &Frequency,
    q: u32,
    k: u32,
    eps: &SandwichEpsilon,
) -> Result<(usize, bool)> {
    let fam = GeneratorFamily::build_factorial(q, k)?;
    let (count, sym, _) = sandwich_points(u, &fam, q as u64, eps)?;
    Ok((count, sym))
}

/// As [`sandwich_count`] for a prebuilt family, also returning the points.
pub fn sandwich_points(
    u: &Frequency,
    fam: &GeneratorFamily,
    q: u64,
    eps: &SandwichEpsilon,
) -> Result<(usize, bool, Vec<LatticePoint>)> {
    let [u1, u2] = u.exact()?;
    let eps = eps.as_rational();
    let mut hits = Vec::new();
    for d in fam.symmetric_points() {
        let t = &u1 * BigRational::from_integer(d.x.clone())
            + &u2 * BigRational::from_integer(d.y.clone());
        if near_major_center(&t, q, eps) {
            hits.push(d);
        }
    }
    let set: HashSet<&LatticePoint> = hits.iter().collect();
    let symmetric = hits.iter().all(|d| set.contains(&d.neg()));
    Ok((hits.len(), symmetric, hits))
}
