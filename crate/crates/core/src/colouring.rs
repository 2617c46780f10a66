//! Explicit colourings that avoid given distance sets, with randomized
//! falsification.
//!
//! On `Z`, colouring by residue mod `k` avoids a distance set `D` whenever no
//! element of `D` is a multiple of `k`. Colouring each interval `[n, n+1)` by
//! the colour of `n` extends this to `R` for integer distances. In `R^d`,
//! colouring `p` by the nearest integer to `|p|^2` modulo `2k^2` avoids
//! congruent copies of `r {0, 1, 2}` (three equally spaced collinear points)
//! for all `r` not divisible by `k`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::IntPolynomial;

/// Which colouring, and how many colours it uses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ColouringSpec {
    /// Residue mod `k`. `prime` marks the mod-4 colouring against primes.
    Residue { k: u64, prime: bool },
    IntervalExtension { base: Box<ColouringSpec> },
    Sphere { k: u64, d: usize },
}

impl ColouringSpec {
    pub fn colour_count(&self) -> u64 {
        match self {
            ColouringSpec::Residue { k, .. } => *k,
            ColouringSpec::IntervalExtension { base } => base.colour_count(),
            ColouringSpec::Sphere { k, .. } => 2 * k * k,
        }
    }
}

/// True iff `f(n) mod k != 0` for every `n`, checked over one period.
pub fn residue_obstruction(f: &IntPolynomial, k: u64) -> Result<bool> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    let kb = BigInt::from(k);
    Ok((0..k).all(|n| !f.eval(&BigInt::from(n)).mod_floor(&kb).is_zero()))
}

/// True iff `kZ` holds no prime, i.e. `k` is composite.
pub fn prime_colouring_valid(k: u64) -> Result<bool> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    Ok((2..).take_while(|d| d * d <= k).any(|d| k % d == 0))
}

/// The residue colouring `n -> n mod k` of `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResidueColouring {
    pub k: u64,
}

impl ResidueColouring {
    pub fn new(k: u64) -> Result<Self> {
        if k < 1 || k > i64::MAX as u64 {
            return Err(Error::domain(format!("bad modulus {k}")));
        }
        Ok(ResidueColouring { k })
    }

    pub fn colour(&self, n: i64) -> u64 {
        n.rem_euclid(self.k as i64) as u64
    }

    pub fn spec(&self) -> ColouringSpec {
        ColouringSpec::Residue {
            k: self.k,
            prime: self.k == 4,
        }
    }
}

/// `x -> base(floor(x))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntervalColouring {
    pub base: ResidueColouring,
}

pub fn interval_extend(base: ResidueColouring) -> IntervalColouring {
    IntervalColouring { base }
}

impl IntervalColouring {
    pub fn colour(&self, x: f64) -> u64 {
        self.base.colour(x.floor() as i64)
    }

    pub fn spec(&self) -> ColouringSpec {
        ColouringSpec::IntervalExtension {
            base: Box::new(self.base.spec()),
        }
    }
}

fn check_k(k: u64) -> Result<u64> {
    if !(1..=1 << 31).contains(&k) {
        return Err(Error::domain(format!("k must lie in 1..=2^31, got {k}")));
    }
    Ok(2 * k * k)
}

/// Nearest integer to `s >= 0`, halves going down.
fn round_half_down(s: f64) -> u64 {
    (s - 0.5).ceil().max(0.0) as u64
}

/// Colour of a point by its squared norm.
pub fn sphere_colour_of_norm(k: u64, s: f64) -> Result<u64> {
    let c = check_k(k)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("squared norm must be finite and nonnegative, got {s}")));
    }
    Ok(round_half_down(s) % c)
}

pub fn sphere_colouring(k: u64, p: &[f64]) -> Result<u64> {
    sphere_colour_of_norm(k, p.iter().map(|x| x * x).sum())
}

/// Exact version for rational coordinates.
pub fn sphere_colouring_exact(k: u64, p: &[BigRational]) -> Result<u64> {
    let c = check_k(k)?;
    let s: BigRational = p.iter().map(|x| x * x).sum();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let y = (s - half).ceil().to_integer();
    let y = if y.is_negative() { BigInt::zero() } else { y };
    Ok((y % BigInt::from(c)).to_u64().expect("residue fits"))
}

/// A monochromatic configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: u64,
    /// Coordinates formatted to 17 significant digits.
    pub points: Vec<Vec<String>>,
    pub colours: Vec<u64>,
}

impl Witness {
    fn new(trial: u64, points: &[Vec<f64>], colours: Vec<u64>) -> Self {
        Witness {
            trial,
            points: points
                .iter()
                .map(|p| p.iter().map(|x| format!("{x:.16e}")).collect())
                .collect(),
            colours,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub spec: ColouringSpec,
    pub trials: u64,
    pub violations: u64,
    pub first_violation: Option<Witness>,
    pub seed: u64,
}

/// Trial `i` draws from its own stream so results do not depend on
/// scheduling.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trials<F>(spec: ColouringSpec, trials: u64, seed: u64, trial: F) -> FalsificationReport
where
    F: Fn(u64, &mut ChaCha8Rng) -> Option<Witness> + Sync,
{
    let (violations, first_violation) = (0..trials)
        .into_par_iter()
        .map(|i| match trial(i, &mut trial_rng(seed, i)) {
            Some(w) => (1, Some(w)),
            None => (0, None),
        })
        .reduce(
            || (0u64, None),
            |(a, wa): (u64, Option<Witness>), (b, wb)| {
                let w = match (wa, wb) {
                    (Some(x), Some(y)) => Some(if x.trial <= y.trial { x } else { y }),
                    (x, y) => x.or(y),
                };
                (a + b, w)
            },
        );
    FalsificationReport {
        spec,
        trials,
        violations,
        first_violation,
        seed,
    }
}

/// The triple `p, p + r v, p + 2 r v`.
pub fn line_triple(p: &[f64], v: &[f64], r: f64) -> [Vec<f64>; 3] {
    let at = |t: f64| p.iter().zip(v).map(|(a, b)| a + t * r * b).collect();
    [at(0.0), at(1.0), at(2.0)]
}

/// Colours of the triple if all three agree.
pub fn monochromatic_triple(k: u64, triple: &[Vec<f64>; 3]) -> Result<Option<Vec<u64>>> {
    let c: Vec<u64> = triple
        .iter()
        .map(|p| sphere_colouring(k, p))
        .collect::<Result<_>>()?;
    Ok((c[0] == c[1] && c[1] == c[2]).then_some(c))
}

/// Random congruent copies of `r {0, 1, 2}` in `R^d` against the sphere
/// colouring. Every `r` must avoid `kZ`.
pub fn falsify_sphere(
    k: u64,
    rs: &[u64],
    d: usize,
    trials: u64,
    radius_box: f64,
    seed: u64,
) -> Result<FalsificationReport> {
    if let Some(r) = rs.iter().find(|&&r| k > 0 && r % k == 0) {
        return Err(Error::domain(format!(
            "r = {r} is a multiple of k = {k}; the colouring makes no claim"
        )));
    }
    falsify_sphere_unchecked(k, rs, d, trials, radius_box, seed)
}

/// [`falsify_sphere`] without the divisibility precondition.
pub fn falsify_sphere_unchecked(
    k: u64,
    rs: &[u64],
    d: usize,
    trials: u64,
    radius_box: f64,
    seed: u64,
) -> Result<FalsificationReport> {
    check_k(k)?;
    if rs.is_empty() || rs.contains(&0) {
        return Err(Error::validation("distances must be a nonempty list of positive integers"));
    }
    if d < 1 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(radius_box > 0.0 && radius_box.is_finite()) {
        return Err(Error::domain(format!("bad radius box {radius_box}")));
    }
    let trial = |i: u64, rng: &mut ChaCha8Rng| {
        let r = rs[rng.random_range(0..rs.len())] as f64;
        let p: Vec<f64> = (0..d)
            .map(|_| rng.random_range(-radius_box..=radius_box))
            .collect();
        let v = loop {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = g.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break g.into_iter().map(|x| x / n).collect::<Vec<_>>();
            }
        };
        let t = line_triple(&p, &v, r);
        monochromatic_triple(k, &t)
            .expect("k checked")
            .map(|c| Witness::new(i, &t, c))
    };
    Ok(run_trials(
        ColouringSpec::Sphere { k, d },
        trials,
        seed,
        trial,
    ))
}

/// Generic pair checker. `sampler` yields two points whose distance lies in
/// the avoided set; a violation is a pair with equal colours.
pub fn falsify_distance_colouring<C, S>(
    spec: ColouringSpec,
    colour: C,
    sampler: S,
    trials: u64,
    seed: u64,
) -> FalsificationReport
where
    C: Fn(&[f64]) -> u64 + Sync,
    S: Fn(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) + Sync,
{
    run_trials(spec, trials, seed, |i, rng| {
        let (a, b) = sampler(rng);
        let (ca, cb) = (colour(&a), colour(&b));
        (ca == cb).then(|| Witness::new(i, &[a, b], vec![ca, cb]))
    })
}

/// Sampler of pairs `x, x +- d` on the line, `x` uniform in
/// `[-radius, radius]` and `d` uniform from `distances`.
pub fn line_pair_sampler(
    distances: Vec<u64>,
    radius: f64,
    integral: bool,
) -> impl Fn(&mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) + Sync {
    move |rng| {
        let d = distances[rng.random_range(0..distances.len())] as f64;
        let mut x: f64 = rng.random_range(-radius..=radius);
        if integral {
            x = x.round();
        }
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        (vec![x], vec![x + s * d])
    }
}
