//! Ground truth on small instances.
//!
//! The quotient of `G(Z^2, C)` by `mZ^2` has vertex set `(Z/m)^2` and edges
//! `v ~ v + c mod m`. An independent set there lifts to an `m`-periodic
//! independent set of the full Cayley graph with the same density, so exact
//! maximum independent sets of quotients are lower bounds on the
//! independence density, to be compared with spectral upper bounds.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, RatioReport};

/// Solvers work on graphs with at most this many vertices.
pub const MAX_SOLVER_VERTICES: usize = 128;
/// Default branch-and-bound node budget.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// An undirected simple graph on at most 128 vertices, adjacency as bit rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallGraph {
    n: usize,
    adj: Vec<u128>,
}

impl SmallGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_SOLVER_VERTICES {
            return Err(Error::domain(format!(
                "graph has {n} vertices; solvers handle at most {MAX_SOLVER_VERTICES}"
            )));
        }
        Ok(SmallGraph {
            n,
            adj: vec![0; n],
        })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::validation(format!("edge ({u}, {v}) out of range")));
        }
        if u == v {
            return Err(Error::validation(format!("self-loop at {u}")));
        }
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.adj[v].count_ones()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.adjacent(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mask: u128 = set.iter().fold(0, |m, &v| m | 1 << v);
        set.iter().all(|&v| self.adj[v] & mask == 0)
    }

    /// DIMACS edge format: `p edge n m` then `e u v` with 1-based vertices.
    pub fn to_dimacs(&self) -> String {
        let edges = self.edges();
        let mut s = format!("p edge {} {}\n", self.n, edges.len());
        for (u, v) in edges {
            writeln!(s, "e {} {}", u + 1, v + 1).unwrap();
        }
        s
    }
}

/// The quotient of `G(Z^2, C)` modulo `m`; vertex `(x, y)` has index
/// `x + m y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientGraph {
    pub m: usize,
    pub generator_residues: Vec<(usize, usize)>,
    pub graph: SmallGraph,
}

impl QuotientGraph {
    pub fn vertex(&self, x: usize, y: usize) -> usize {
        x + self.m * y
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.m, v / self.m)
    }
}

fn residues(gens: &[(i64, i64)], m: usize) -> Result<Vec<(usize, usize)>> {
    if m < 2 {
        return Err(Error::domain(format!("modulus must be at least 2, got {m}")));
    }
    let mi = m as i64;
    let mut out = Vec::new();
    for &(x, y) in gens {
        for (sx, sy) in [(x, y), (-x, -y)] {
            let r = (sx.rem_euclid(mi) as usize, sy.rem_euclid(mi) as usize);
            if r == (0, 0) {
                return Err(Error::domain(format!(
                    "generator ({x}, {y}) is 0 modulo {m}; the quotient would have self-loops"
                )));
            }
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// The quotient graph. `gens` is closed under negation here.
pub fn quotient_graph(gens: &[(i64, i64)], m: usize) -> Result<QuotientGraph> {
    let generator_residues = residues(gens, m)?;
    let mut graph = SmallGraph::new(m * m)?;
    for y in 0..m {
        for x in 0..m {
            for &(a, b) in &generator_residues {
                let u = x + m * y;
                let v = (x + a) % m + m * ((y + b) % m);
                graph.add_edge(u, v)?;
            }
        }
    }
    Ok(QuotientGraph {
        m,
        generator_residues,
        graph,
    })
}

/// A maximum independent set of a quotient graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisResult {
    pub m: usize,
    pub size: usize,
    #[serde(with = "ratio_string")]
    pub density: Ratio<u64>,
    /// Residues `[x, y]` of the witness.
    pub witness: Vec<[usize; 2]>,
}

mod ratio_string {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let s = String::deserialize(d)?;
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected a/b"))?;
        let a = a.parse().map_err(serde::de::Error::custom)?;
        let b = b.parse().map_err(serde::de::Error::custom)?;
        Ok(Ratio::new(a, b))
    }
}

fn bits(mut s: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if s == 0 {
            return None;
        }
        let v = s.trailing_zeros() as usize;
        s &= s - 1;
        Some(v)
    })
}

/// Maximum clique in the complement, with a greedy colouring bound.
struct MisSearch<'a> {
    /// Rows of the complement graph.
    comp: &'a [u128],
    best: u128,
    best_size: u32,
    nodes: u64,
    budget: u64,
}

impl MisSearch<'_> {
    /// Greedy colouring of `p` in the complement (colour classes are
    /// independent in the complement, i.e. cliques in the graph). Returns
    /// vertices in colour order with their colour numbers.
    fn colour_order(&self, p: u128) -> Vec<(usize, u32)> {
        let mut out = Vec::with_capacity(p.count_ones() as usize);
        let mut uncoloured = p;
        let mut colour = 0;
        while uncoloured != 0 {
            colour += 1;
            let mut avail = uncoloured;
            while avail != 0 {
                let v = avail.trailing_zeros() as usize;
                avail &= !(1 << v) & !self.comp[v];
                uncoloured &= !(1 << v);
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(&mut self, r: u128, p: u128) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let size = r.count_ones();
        let order = self.colour_order(p);
        let mut p = p;
        for &(v, colour) in order.iter().rev() {
            if size + colour <= self.best_size {
                return true;
            }
            let r2 = r | 1 << v;
            let p2 = p & self.comp[v];
            if p2 == 0 {
                if size + 1 > self.best_size {
                    self.best_size = size + 1;
                    self.best = r2;
                }
            } else if !self.expand(r2, p2) {
                return false;
            }
            p &= !(1 << v);
        }
        true
    }
}

/// Maximum independent set of a small graph, deterministic.
pub fn max_independent_set(g: &SmallGraph, budget: u64) -> Result<Vec<usize>> {
    let full: u128 = if g.n == 128 { u128::MAX } else { (1 << g.n) - 1 };
    let comp: Vec<u128> = (0..g.n).map(|v| full & !g.adj[v] & !(1 << v)).collect();
    let mut s = MisSearch {
        comp: &comp,
        best: 0,
        best_size: 0,
        nodes: 0,
        budget,
    };
    if g.n > 0 && !s.expand(0, full) {
        return Err(Error::BudgetExceeded {
            budget,
            best_size: s.best_size as usize,
            best_witness: bits(s.best).collect(),
        });
    }
    Ok(bits(s.best).collect())
}

pub fn exact_mis(g: &QuotientGraph, budget: u64) -> Result<MisResult> {
    let set = max_independent_set(&g.graph, budget)?;
    if !g.graph.is_independent(&set) {
        return Err(Error::invariant("solver returned a dependent set"));
    }
    let n = (g.m * g.m) as u64;
    Ok(MisResult {
        m: g.m,
        size: set.len(),
        density: Ratio::new(set.len() as u64, n),
        witness: set
            .iter()
            .map(|&v| {
                let (x, y) = g.coords(v);
                [x, y]
            })
            .collect(),
    })
}

/// Density of a largest `m`-periodic independent set of `G(Z^2, C)`.
///
/// A generator that is 0 modulo `m` joins every vertex to one of its own
/// translates by a period, so no nonempty `m`-periodic set is independent
/// and the density is exactly 0.
pub fn mis_density_lb(gens: &[(i64, i64)], m: usize, budget: u64) -> Result<Ratio<u64>> {
    if m < 2 {
        return Err(Error::domain(format!("modulus must be at least 2, got {m}")));
    }
    let mi = m as i64;
    if gens
        .iter()
        .any(|&(x, y)| x.rem_euclid(mi) == 0 && y.rem_euclid(mi) == 0)
    {
        return Ok(Ratio::new(0, 1));
    }
    Ok(exact_mis(&quotient_graph(gens, m)?, budget)?.density)
}

/// True iff every periodic density is at most `alpha_upper + 1e-9`.
pub fn cross_check(
    gens: &[(i64, i64)],
    report: &RatioReport,
    moduli: &[usize],
    budget: u64,
) -> Result<bool> {
    for &m in moduli {
        let d = mis_density_lb(gens, m, budget)?;
        if *d.numer() as f64 / *d.denom() as f64 > report.alpha_upper + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of a chromatic number search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chromatic {
    Exact { chi: u32 },
    AboveLimit { limit: u32 },
}

fn colourable(g: &SmallGraph, order: &[usize], colours: &mut [u32], i: usize, k: u32, used: u32) -> bool {
    if i == order.len() {
        return true;
    }
    let v = order[i];
    // colours beyond `used + 1` are symmetric to `used + 1`
    for c in 1..=k.min(used + 1) {
        if bits(g.adj[v]).any(|u| colours[u] == c) {
            continue;
        }
        colours[v] = c;
        if colourable(g, order, colours, i + 1, k, used.max(c)) {
            return true;
        }
        colours[v] = 0;
    }
    false
}

/// Exact chromatic number if at most `limit`. At most 64 vertices.
pub fn exact_chromatic(g: &SmallGraph, limit: u32) -> Result<Chromatic> {
    if limit < 1 {
        return Err(Error::domain("limit must be at least 1"));
    }
    if g.n > 64 {
        return Err(Error::domain(format!(
            "exact colouring handles at most 64 vertices, got {}",
            g.n
        )));
    }
    if g.n == 0 {
        return Ok(Chromatic::Exact { chi: 0 });
    }
    // high degree first, ties by index
    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    for k in 1..=limit {
        let mut colours = vec![0; g.n];
        if colourable(g, &order, &mut colours, 0, k, 0) {
            return Ok(Chromatic::Exact { chi: k });
        }
    }
    Ok(Chromatic::AboveLimit { limit })
}

/// The product colouring of `G_k`: bit `j - 1` of the colour of `(x, y)` is
/// `floor(x / 2^{k-j}) mod 2`. An edge shifts `x` by `(2m+1) 2^{k-j}`, which
/// changes `floor(x / 2^{k-j})` by the odd number `2m+1`, flipping bit
/// `j - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GkColouring {
    pub k: u32,
}

impl GkColouring {
    pub fn new(k: u32) -> Result<Self> {
        if !(2..=40).contains(&k) {
            return Err(Error::domain(format!("k must lie in 2..=40, got {k}")));
        }
        Ok(GkColouring { k })
    }

    pub fn colours(&self) -> u64 {
        1 << (self.k - 1)
    }

    pub fn colour(&self, x: i64, _y: i64) -> u64 {
        (1..self.k).fold(0, |c, j| {
            let bit = x.div_euclid(1 << (self.k - j)).rem_euclid(2) as u64;
            c | bit << (j - 1)
        })
    }

    /// The first monochromatic edge of the truncated graph (multipliers
    /// `2m+1 < 2T`) with both ends in `[-r, r]^2`, if any.
    pub fn first_violation(&self, t: u32, r: i64) -> Result<Option<[(i64, i64); 2]>> {
        let w = spectral::build_gk_weights(self.k, t)?;
        let gens: Vec<(i64, i64)> = w.full_points().map(|(p, _)| p).collect();
        for x in -r..=r {
            for y in -r..=r {
                let c = self.colour(x, y);
                for &(dx, dy) in &gens {
                    let (x2, y2) = (x + dx, y + dy);
                    if x2.abs() <= r && y2.abs() <= r && self.colour(x2, y2) == c {
                        return Ok(Some([(x, y), (x2, y2)]));
                    }
                }
            }
        }
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GkMode {
    Certified { m: usize },
    Heuristic { starts: usize, iterations: usize, seed: u64 },
}

/// The ratio bound for the truncated `G_k`.
pub fn gk_spectral_check(k: u32, t: u32, mode: GkMode) -> Result<RatioReport> {
    let w = spectral::build_gk_weights(k, t)?;
    match mode {
        GkMode::Certified { m } => RatioReport::certified(&w, m),
        GkMode::Heuristic {
            starts,
            iterations,
            seed,
        } => RatioReport::heuristic(&w, starts, iterations, seed),
    }
}

/// The witness lifted to `[0, reps m)^2`, as `[x, y]` pairs.
pub fn lift_witness(res: &MisResult, reps: usize) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    for i in 0..reps {
        for j in 0..reps {
            for &[x, y] in &res.witness {
                out.push([(x + i * res.m) as i64, (y + j * res.m) as i64]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: [(i64, i64); 3] = [(1, 0), (0, 1), (1, 1)];

    fn brute_mis(g: &SmallGraph) -> usize {
        (0u32..1 << g.n())
            .filter(|s| {
                let set: Vec<usize> = (0..g.n()).filter(|v| s >> v & 1 == 1).collect();
                g.is_independent(&set)
            })
            .map(|s| s.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn quotient_shapes() {
        let g = quotient_graph(&[(1, 0)], 4).unwrap();
        assert!((0..16).all(|v| g.graph.degree(v) == 2));
        assert_eq!(g.graph.edges().len(), 16);
        let g = quotient_graph(&TRI, 3).unwrap();
        assert!((0..9).all(|v| g.graph.degree(v) == 6));
        assert!(quotient_graph(&[(2, 0)], 4).is_ok());
        assert!(matches!(quotient_graph(&[(4, 0)], 4), Err(Error::Domain(_))));
    }

    #[test]
    fn independent_sets() {
        let r = exact_mis(&quotient_graph(&[(1, 0)], 4).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!((r.size, r.density), (8, Ratio::new(1, 2)));
        let r = exact_mis(&quotient_graph(&TRI, 3).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!((r.size, r.density), (3, Ratio::new(1, 3)));
        let r = exact_mis(&quotient_graph(&[(1, 0), (0, 1)], 4).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.size, 8);
        assert_eq!(mis_density_lb(&[(1, 0)], 5, DEFAULT_BUDGET).unwrap(), Ratio::new(2, 5));
        assert_eq!(mis_density_lb(&[(3, 0)], 3, DEFAULT_BUDGET).unwrap(), Ratio::new(0, 1));
    }

    #[test]
    fn branch_and_bound_matches_brute_force() {
        let sets: [&[(i64, i64)]; 5] = [&[(1, 0)], &TRI, &[(1, 2)], &[(1, 1), (2, 1)], &[(0, 1), (3, 2)]];
        for gens in sets {
            for m in 2..=4 {
                let Ok(g) = quotient_graph(gens, m) else { continue };
                let r = exact_mis(&g, DEFAULT_BUDGET).unwrap();
                assert_eq!(r.size, brute_mis(&g.graph), "{gens:?} m={m}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = quotient_graph(&[(1, 2), (3, 1)], 9).unwrap();
        match exact_mis(&g, 3) {
            Err(Error::BudgetExceeded { budget, .. }) => assert_eq!(budget, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lifted_witness_is_independent() {
        let g = quotient_graph(&TRI, 3).unwrap();
        let r = exact_mis(&g, DEFAULT_BUDGET).unwrap();
        let pts = lift_witness(&r, 3);
        let set: std::collections::HashSet<[i64; 2]> = pts.iter().copied().collect();
        for &[x, y] in &pts {
            for (dx, dy) in TRI {
                assert!(!set.contains(&[x + dx, y + dy]));
                assert!(!set.contains(&[x - dx, y - dy]));
            }
        }
    }

    #[test]
    fn chromatic_numbers() {
        assert_eq!(exact_chromatic(&SmallGraph::cycle(4).unwrap(), 5).unwrap(), Chromatic::Exact { chi: 2 });
        assert_eq!(exact_chromatic(&SmallGraph::cycle(5).unwrap(), 5).unwrap(), Chromatic::Exact { chi: 3 });
        let g = quotient_graph(&TRI, 3).unwrap();
        assert_eq!(exact_chromatic(&g.graph, 5).unwrap(), Chromatic::Exact { chi: 3 });
        let g = quotient_graph(&[(1, 0)], 5).unwrap();
        assert_eq!(exact_chromatic(&g.graph, 5).unwrap(), Chromatic::Exact { chi: 3 });
        assert_eq!(exact_chromatic(&g.graph, 2).unwrap(), Chromatic::AboveLimit { limit: 2 });
        assert!(exact_chromatic(&g.graph, 0).is_err());
    }

    #[test]
    fn gk_colourings() {
        let c = GkColouring::new(2).unwrap();
        assert_ne!(c.colour(0, 0), c.colour(2, 8));
        assert_eq!(GkColouring::new(3).unwrap().colours(), 4);
        for k in 2..=5 {
            let c = GkColouring::new(k).unwrap();
            assert_eq!(c.first_violation(8, 64).unwrap(), None);
            let period = 1i64 << k;
            let zeros = (0..period).filter(|&x| c.colour(x, 0) == 0).count() as i64;
            assert_eq!(zeros * c.colours() as i64, period);
        }
    }

    fn fake_report(alpha: f64) -> RatioReport {
        let mut r = RatioReport::from_bracket(1.0, -0.5, spectral::Mode::Certified).unwrap();
        r.alpha_upper = alpha;
        r
    }

    #[test]
    fn cross_checks() {
        assert!(cross_check(&TRI, &fake_report(1.0 / 3.0), &[3, 6, 9], DEFAULT_BUDGET).unwrap());
        assert!(cross_check(&[(1, 0)], &fake_report(0.5), &[2, 4, 6], DEFAULT_BUDGET).unwrap());
        assert!(!cross_check(&TRI, &fake_report(0.2), &[3], DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn chromatic_at_least_inverse_density() {
        let sets: [&[(i64, i64)]; 4] = [&[(1, 0)], &TRI, &[(1, 2), (2, 1)], &[(1, 0), (0, 1)]];
        for gens in sets {
            for m in 2..=7 {
                let Ok(g) = quotient_graph(gens, m) else { continue };
                let d = exact_mis(&g, DEFAULT_BUDGET).unwrap().density;
                let need = (*d.denom()).div_ceil(*d.numer()) as u32;
                match exact_chromatic(&g.graph, 8).unwrap() {
                    Chromatic::Exact { chi } => assert!(chi >= need, "{gens:?} m={m}"),
                    Chromatic::AboveLimit { .. } => assert!(need <= 9),
                }
            }
        }
    }

    #[test]
    fn gk_colouring_full_windows() {
        for k in 2..=5 {
            let c = GkColouring::new(k).unwrap();
            assert_eq!(c.first_violation(16, 128).unwrap(), None, "k = {k}");
        }
    }

    #[test]
    fn dimacs() {
        let s = SmallGraph::cycle(3).unwrap().to_dimacs();
        assert_eq!(s, "p edge 3 3\ne 1 2\ne 1 3\ne 2 3\n");
    }
}
