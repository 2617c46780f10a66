//! Uncertified multistart descent for `inf w^`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_spectrum, WeightedSet};
use crate::error::{Error, Result};

/// The best local minimum found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicMin {
    pub point: [f64; 2],
    pub value: f64,
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

fn wrap(t: f64) -> f64 {
    t - t.floor()
}

/// Grid size for seeding: enough to resolve the highest frequency, capped.
fn seed_grid_size(w: &WeightedSet) -> usize {
    let want = (4 * w.max_coord() as usize + 1).next_power_of_two();
    want.clamp(256, 2048)
}

/// Gradient descent with Armijo backtracking from `u`.
fn descend(w: &WeightedSet, mut u: [f64; 2], iterations: usize, step0: f64) -> ([f64; 2], f64) {
    let (mut v, mut g) = w.value_and_gradient(u);
    let mut step = step0;
    for _ in 0..iterations {
        let gg = g[0] * g[0] + g[1] * g[1];
        if gg == 0.0 || !gg.is_finite() {
            break;
        }
        let mut accepted = false;
        let mut t = step * 2.0;
        for _ in 0..60 {
            let cand = [wrap(u[0] - t * g[0]), wrap(u[1] - t * g[1])];
            let cv = w.what_eval(cand);
            if cv <= v - 0.5 * t * gg {
                u = cand;
                (v, g) = w.value_and_gradient(u);
                step = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (u, v)
}

/// Multistart descent. Half the starts (rounded up) are the lowest points
/// of a coarse FFT grid, the rest are uniform random from the seeded
/// generator. Deterministic for a given seed, independent of thread count.
pub fn heuristic_min(
    w: &WeightedSet,
    starts: usize,
    iterations: usize,
    seed: u64,
) -> Result<HeuristicMin> {
    if starts < 1 {
        return Err(Error::domain("need at least one start"));
    }
    let m = seed_grid_size(w);
    let grid = grid_spectrum(w, m)?;
    let n_grid = starts.div_ceil(2);
    let mut order: Vec<usize> = (0..grid.values.len()).collect();
    let key = |i: &usize| (grid.values[*i], *i);
    if n_grid < order.len() {
        order.select_nth_unstable_by(n_grid, |a, b| key(a).partial_cmp(&key(b)).unwrap());
        order.truncate(n_grid);
    }
    order.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let mf = m as f64;
    let mut points: Vec<[f64; 2]> = order
        .iter()
        .map(|&i| [(i / m) as f64 / mf, (i % m) as f64 / mf])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < starts {
        points.push([rng.random::<f64>(), rng.random::<f64>()]);
    }

    let step0 = 1.0 / w.hessian_bound().max(f64::MIN_POSITIVE);
    let (value, _, point) = points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (u, v) = descend(w, p, iterations, step0);
            (v, i, u)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, [0.0; 2]),
            |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a },
        );
    Ok(HeuristicMin {
        point,
        value,
        starts,
        iterations,
        seed,
    })
}
