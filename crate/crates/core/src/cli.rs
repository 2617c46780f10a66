//! Command line front end. Every command prints one JSON document to stdout
//! (or `--out`) carrying `schema_version` and `command`; errors map to exit
//! codes through [`Error::exit_code`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::colouring::{self, ResidueColouring};
use crate::error::{Error, Result};
use crate::exactlat::{self, GeneratorFamily};
use crate::expsum::{self, ArcScheme};
use crate::oracle::{self, GkMode, QuotientGraph, DEFAULT_BUDGET};
use crate::spectral::{self, RatioReport, WeightedSet};
use crate::weights::{self, IntPolynomial, PrimeTable};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "planechrome", version, about = "Spectral chromatic bounds for distance graphs")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sieve cache directory (default: $PLANECHROME_CACHE or ./cache).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// The generating family D_{q,k}.
    Family(FamilyArgs),
    /// Ratio bound pipelines.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Arc classification and exponential sums.
    #[command(subcommand)]
    Expsum(ExpsumCmd),
    /// Sieve based quantities.
    #[command(subcommand)]
    Primes(PrimesCmd),
    /// Randomized falsification of explicit colourings.
    #[command(subcommand)]
    Colour(ColourCmd),
    /// Exact solvers on quotient graphs.
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub k: u32,
    /// Check scalar independence and exact edge lengths for a = 1..5.
    #[arg(long)]
    pub verify: bool,
    /// Allow q = 1.
    #[arg(long)]
    pub unchecked: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Certified,
    Heuristic,
}

#[derive(Args, Debug, Clone)]
pub struct MinArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Certified)]
    pub mode: ModeArg,
    /// Starting grid size for certified mode.
    #[arg(long = "M", default_value_t = 1024)]
    pub m: usize,
    /// Grid size cap for certified mode.
    #[arg(long, default_value_t = spectral::DEFAULT_MAX_GRID)]
    pub max_grid: usize,
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Moduli for the periodic independent set cross check.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,7,8,9")]
    pub moduli: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Dump the certified grid spectrum (binary) here.
    #[arg(long)]
    pub dump_grid: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum BoundCmd {
    /// Truncated G_k.
    Gk {
        #[arg(long)]
        k: u32,
        #[arg(long = "T", default_value_t = 16)]
        t: u32,
        #[command(flatten)]
        min: MinArgs,
    },
    /// Polynomial distances f(Z) through D_{q,k}.
    Poly {
        /// Coefficients a0,a1,...,ar, lowest degree first.
        #[arg(long, default_value = "1,3,3,1")]
        f: String,
        #[arg(long = "N", default_value_t = 50)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long)]
        k: u32,
        /// Q for the closed formula.
        #[arg(long = "Q", default_value_t = 2)]
        big_q: u64,
        /// Constant C for the closed formula.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Only evaluate the closed formula.
        #[arg(long)]
        formula_only: bool,
        #[command(flatten)]
        min: MinArgs,
    },
    /// Prime distances through D_{q,k}.
    Prime {
        #[arg(long = "N", default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long)]
        k: u32,
        #[arg(long = "Q", default_value_t = 2)]
        big_q: u64,
        #[arg(long)]
        formula_only: bool,
        #[command(flatten)]
        min: MinArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Poly,
    Prime,
}

#[derive(Args, Debug, Clone)]
pub struct SchemeArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    /// Degree for the poly scheme (defaults to the degree of --f).
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long, default_value = "1,3,3,1")]
    pub f: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "Q")]
    pub big_q: u64,
    /// Override the arc width.
    #[arg(long)]
    pub width: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ExpsumCmd {
    /// Maximum of the normalized weighted sum over minor arc samples.
    Scan {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long)]
        seed: u64,
        /// Write every minor sample as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Arc label of a frequency.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Best approximation a/b with |alpha - a/b| <= 1/(bW).
    Dirichlet {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long = "W")]
        w: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum PrimesCmd {
    /// Chebyshev theta(N).
    Theta {
        #[arg(long = "N")]
        n: u64,
    },
    /// theta(N) against the asymptotic series.
    Poussin {
        #[arg(long = "N")]
        n: u64,
    },
    /// Euler phi, or max_{r > Q} 1/phi(r).
    Phi {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        max_inv_above: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ColourCmd {
    /// Squared norm colouring of R^d against r {0,1,2}.
    Sphere {
        #[arg(long)]
        k: u64,
        /// Distances: a list "1,3,5" or "odd:99" (odd numbers up to 99).
        #[arg(long = "R")]
        r: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Base points are drawn from [-box, box]^d.
        #[arg(long = "box", default_value_t = 100.0)]
        radius_box: f64,
    },
    /// Residue colouring of R by floor(x) mod k against prime distances.
    Prime {
        #[arg(long, default_value_t = 4)]
        k: u64,
        #[arg(long, default_value_t = 100_000)]
        max_distance: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone)]
pub struct QuotientArgs {
    /// Generators "x,y;x,y;...".
    #[arg(long, allow_hyphen_values = true)]
    pub gens: String,
    #[arg(long)]
    pub m: usize,
    /// Write the quotient graph in DIMACS format here.
    #[arg(long)]
    pub dimacs: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum OracleCmd {
    /// Maximum independent set of the quotient modulo m.
    Mis {
        #[command(flatten)]
        q: QuotientArgs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Chromatic number of the quotient modulo m.
    Chromatic {
        #[command(flatten)]
        q: QuotientArgs,
        #[arg(long, default_value_t = 8)]
        limit: u32,
    },
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, body) {
        dst.extend(src);
    }
    v
}

pub fn parse_gens(s: &str) -> Result<Vec<(i64, i64)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (x, y) = t
                .split_once(',')
                .ok_or_else(|| Error::validation(format!("generator {t:?} is not x,y")))?;
            let p = |v: &str| {
                v.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::validation(format!("bad coordinate {v:?}: {e}")))
            };
            Ok((p(x)?, p(y)?))
        })
        .collect()
}

pub fn parse_distances(s: &str) -> Result<Vec<u64>> {
    if let Some(max) = s.strip_prefix("odd:") {
        let max: u64 = max
            .trim()
            .parse()
            .map_err(|e| Error::validation(format!("bad bound {max:?}: {e}")))?;
        return Ok((1..=max).step_by(2).collect());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|e| Error::validation(format!("bad distance {t:?}: {e}")))
        })
        .collect()
}

struct Ctx {
    cache_dir: PathBuf,
}

impl Ctx {
    fn sieve(&self, n: u64) -> Result<PrimeTable> {
        weights::sieve_in(&self.cache_dir, n)
    }
}

fn family(a: &FamilyArgs) -> Result<Value> {
    if a.k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {}", a.k)));
    }
    let fam = if a.unchecked {
        GeneratorFamily::build_unchecked(a.q, a.k)?
    } else {
        GeneratorFamily::build(a.q, a.k)?
    };
    let mut body = json!({ "family": fam });
    if a.verify {
        let independent = exactlat::verify_family_independent(&fam);
        let mut edges = Vec::new();
        for j in 1..a.k as usize {
            for m in 1..=5u64 {
                edges.push(json!({ "j": j, "a": m, "ok": exactlat::verify_edge(m, j, a.q, a.k)? }));
            }
        }
        let all = independent && edges.iter().all(|e| e["ok"] == json!(true));
        body["verification"] = json!({
            "independent": independent,
            "edges": edges,
            "passed": all,
        });
        if !all {
            return Err(Error::invariant(format!("family verification failed: {body}")));
        }
    }
    Ok(body)
}

fn ratio(w: &WeightedSet, min: &MinArgs) -> Result<RatioReport> {
    let report = match min.mode {
        ModeArg::Certified => RatioReport::certified_capped(w, min.m, min.max_grid)?,
        ModeArg::Heuristic => RatioReport::heuristic(w, min.starts, min.iterations, min.seed)?,
    };
    if let (Some(path), Some(cert)) = (&min.dump_grid, &report.certificate) {
        spectral::write_grid(path, &spectral::grid_spectrum(w, cert.grid_size)?)?;
    }
    Ok(report)
}

fn cross_check(w: &WeightedSet, report: &RatioReport, min: &MinArgs) -> Result<Value> {
    let gens: Vec<(i64, i64)> = w.representatives().iter().map(|g| (g.x, g.y)).collect();
    let mut rows = Vec::new();
    for &m in &min.moduli {
        let d = oracle::mis_density_lb(&gens, m, min.budget)?;
        rows.push(json!({
            "m": m,
            "density": format!("{}/{}", d.numer(), d.denom()),
            "density_f64": *d.numer() as f64 / *d.denom() as f64,
        }));
    }
    let pass = oracle::cross_check(&gens, report, &min.moduli, min.budget)?;
    Ok(json!({ "moduli": rows, "pass": pass }))
}

fn formula(alpha: f64, chi: u64, limit: f64) -> Value {
    json!({ "alpha_upper": alpha, "chi_lower": chi, "limit_alpha": limit })
}

fn bound(cmd: &BoundCmd, ctx: &Ctx) -> Result<Value> {
    match cmd {
        BoundCmd::Gk { k, t, min } => {
            let w = spectral::build_gk_weights(*k, *t)?;
            let mode = match min.mode {
                ModeArg::Certified => GkMode::Certified { m: min.m },
                ModeArg::Heuristic => GkMode::Heuristic {
                    starts: min.starts,
                    iterations: min.iterations,
                    seed: min.seed,
                },
            };
            let report = match mode {
                GkMode::Certified { .. } => ratio(&w, min)?,
                _ => oracle::gk_spectral_check(*k, *t, mode)?,
            };
            let check = cross_check(&w, &report, min)?;
            Ok(json!({
                "scheme": "gk",
                "params": { "k": k, "T": t },
                "generators": w.len_full(),
                "report": report,
                "cross_check": check,
                "target_alpha": spectral::prime_bound_limit(*k),
            }))
        }
        BoundCmd::Poly {
            f,
            n,
            q,
            k,
            big_q,
            c,
            formula_only,
            min,
        } => {
            let poly = IntPolynomial::parse(f)?;
            let r = poly.degree() as u32;
            let (fa, fc) = spectral::poly_bound_formula(*k, *big_q as f64, *c, r)?;
            let mut body = json!({
                "scheme": "poly",
                "params": { "f": poly.to_string(), "N": n, "q": q, "k": k, "Q": big_q, "C": c, "r": r },
                "formula": formula(fa, fc, spectral::poly_bound_limit(*k)),
            });
            if !formula_only {
                let profile = weights::gn_poly(&poly, *n)?;
                let fam = GeneratorFamily::build(*q, *k)?;
                let w = spectral::build_distance_weights(&profile, &fam, spectral::MAX_COORD)?;
                let report = ratio(&w, min)?;
                body["generators"] = json!(w.len_full());
                body["cross_check"] = cross_check(&w, &report, min)?;
                body["report"] = serde_json::to_value(report)?;
            }
            Ok(body)
        }
        BoundCmd::Prime {
            n,
            q,
            k,
            big_q,
            formula_only,
            min,
        } => {
            let (fa, fc) = spectral::prime_bound_formula(*k, *big_q)?;
            let mut body = json!({
                "scheme": "prime",
                "params": { "N": n, "q": q, "k": k, "Q": big_q },
                "formula": formula(fa, fc, spectral::prime_bound_limit(*k)),
            });
            if !formula_only {
                let profile = weights::gn_prime_with(&ctx.sieve(*n)?, *n)?;
                let fam = GeneratorFamily::build(*q, *k)?;
                let w = spectral::build_distance_weights(&profile, &fam, spectral::MAX_COORD)?;
                let report = ratio(&w, min)?;
                body["generators"] = json!(w.len_full());
                body["cross_check"] = cross_check(&w, &report, min)?;
                body["report"] = serde_json::to_value(report)?;
            }
            Ok(body)
        }
    }
}

fn scheme_of(a: &SchemeArgs) -> Result<(ArcScheme, Option<IntPolynomial>)> {
    match a.scheme {
        SchemeArg::Poly => {
            let f = IntPolynomial::parse(&a.f)?;
            let r = a.r.unwrap_or(f.degree() as u32);
            let mut s = ArcScheme::poly(r, a.n, a.big_q)?;
            if let Some(w) = a.width {
                s = override_width(s, w)?;
            }
            Ok((s, Some(f)))
        }
        SchemeArg::Prime => {
            let s = match a.width {
                Some(w) => ArcScheme::prime_with_width(a.n, a.big_q, w)?,
                None => ArcScheme::prime(a.n, a.big_q)?,
            };
            Ok((s, None))
        }
    }
}

fn override_width(s: ArcScheme, width: f64) -> Result<ArcScheme> {
    let limit = 1.0 / (2.0 * (s.q() as f64).powi(2));
    if !(width > 0.0 && width < limit) {
        return Err(Error::domain(format!(
            "arc width {width:e} must lie in (0, {limit:e}) for disjoint arcs"
        )));
    }
    Ok(ArcScheme { width, ..s })
}

fn expsum_cmd(cmd: &ExpsumCmd, ctx: &Ctx) -> Result<Value> {
    match cmd {
        ExpsumCmd::Scan {
            scheme,
            grid,
            seed,
            csv,
        } => {
            let (s, f) = scheme_of(scheme)?;
            let profile = match f {
                Some(f) => weights::gn_poly(&f, scheme.n)?,
                None => weights::gn_prime_with(&ctx.sieve(scheme.n)?, scheme.n)?,
            };
            let (report, samples) = expsum::minor_scan(&profile, &s, *grid, *seed)?;
            if let Some(path) = csv {
                expsum::write_scan_csv(path, &samples)?;
            }
            Ok(json!({ "report": report, "csv": csv }))
        }
        ExpsumCmd::Classify { alpha, scheme } => {
            let (s, _) = scheme_of(scheme)?;
            let label = s.classify(*alpha);
            Ok(json!({
                "alpha": alpha,
                "scheme": s,
                "label": label,
                "display": label.to_string(),
            }))
        }
        ExpsumCmd::Dirichlet { alpha, w } => {
            let (a, b) = expsum::dirichlet_approx(*alpha, *w)?;
            Ok(json!({ "alpha": alpha, "W": w, "a": a, "b": b }))
        }
    }
}

fn primes(cmd: &PrimesCmd, ctx: &Ctx) -> Result<Value> {
    match cmd {
        PrimesCmd::Theta { n } => {
            let t = ctx.sieve(*n)?;
            let theta = t.theta(*n)?;
            Ok(json!({
                "N": n,
                "theta": theta,
                "ratio": theta / *n as f64,
                "prime_count": t.count_up_to(*n),
            }))
        }
        PrimesCmd::Poussin { n } => {
            let r = weights::poussin_compare(&ctx.sieve(*n)?, *n)?;
            Ok(json!({ "report": r }))
        }
        PrimesCmd::Phi { n, max_inv_above } => {
            let mut body = json!({});
            if let Some(n) = n {
                body["n"] = json!(n);
                body["phi"] = json!(weights::euler_phi(*n)?);
            }
            if let Some(q) = max_inv_above {
                let (m, r) = weights::max_inv_phi_above(*q)?;
                body["max_inv_phi_above"] = json!({
                    "Q": q,
                    "value": format!("{}/{}", m.numer(), m.denom()),
                    "value_f64": *m.numer() as f64 / *m.denom() as f64,
                    "witness": r,
                });
            }
            if n.is_none() && max_inv_above.is_none() {
                return Err(Error::validation("give --n or --max-inv-above"));
            }
            Ok(body)
        }
    }
}

fn colour(cmd: &ColourCmd, ctx: &Ctx) -> Result<Value> {
    match cmd {
        ColourCmd::Sphere {
            k,
            r,
            d,
            trials,
            seed,
            radius_box,
        } => {
            let rs = parse_distances(r)?;
            let rep = colouring::falsify_sphere(*k, &rs, *d, *trials, *radius_box, *seed)?;
            Ok(json!({ "colour_count": rep.spec.colour_count(), "report": rep }))
        }
        ColourCmd::Prime {
            k,
            max_distance,
            trials,
            seed,
        } => {
            let valid = colouring::prime_colouring_valid(*k)?;
            let primes: Vec<u64> = ctx.sieve((*max_distance).max(2))?.primes_up_to(*max_distance).collect();
            if primes.is_empty() {
                return Err(Error::domain("no primes below the maximum distance"));
            }
            let c = colouring::interval_extend(ResidueColouring::new(*k)?);
            let rep = colouring::falsify_distance_colouring(
                c.spec(),
                |p| c.colour(p[0]),
                colouring::line_pair_sampler(primes, 1e6, false),
                *trials,
                *seed,
            );
            Ok(json!({ "valid": valid, "colour_count": c.spec().colour_count(), "report": rep }))
        }
    }
}

fn quotient(a: &QuotientArgs) -> Result<QuotientGraph> {
    let g = oracle::quotient_graph(&parse_gens(&a.gens)?, a.m)?;
    if let Some(path) = &a.dimacs {
        std::fs::write(path, g.graph.to_dimacs())?;
    }
    Ok(g)
}

fn oracle_cmd(cmd: &OracleCmd) -> Result<Value> {
    match cmd {
        OracleCmd::Mis { q, budget } => {
            let g = quotient(q)?;
            let r = oracle::exact_mis(&g, *budget)?;
            Ok(json!({ "m": q.m, "vertices": g.graph.n(), "result": r }))
        }
        OracleCmd::Chromatic { q, limit } => {
            let g = quotient(q)?;
            let r = oracle::exact_chromatic(&g.graph, *limit)?;
            Ok(json!({ "m": q.m, "vertices": g.graph.n(), "result": r }))
        }
    }
}

/// Runs a parsed command and returns its JSON report.
pub fn run(cli: &Cli) -> Result<Value> {
    let ctx = Ctx {
        cache_dir: cli.cache_dir.clone().unwrap_or_else(weights::cache_dir),
    };
    let (name, body) = match &cli.command {
        Command::Family(a) => ("family", family(a)?),
        Command::Bound(c) => ("bound", bound(c, &ctx)?),
        Command::Expsum(c) => ("expsum", expsum_cmd(c, &ctx)?),
        Command::Primes(c) => ("primes", primes(c, &ctx)?),
        Command::Colour(c) => ("colour", colour(c, &ctx)?),
        Command::Oracle(c) => ("oracle", oracle_cmd(c)?),
    };
    Ok(envelope(name, body))
}

fn error_report(e: &Error) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "message": e.to_string(), "exit_code": e.exit_code() },
    });
    match e {
        Error::ResolutionExhausted(cert) => v["error"]["certificate"] = json!(cert),
        Error::BudgetExceeded {
            best_size,
            best_witness,
            ..
        } => {
            v["error"]["best_size"] = json!(best_size);
            v["error"]["best_witness"] = json!(best_witness);
        }
        _ => {}
    }
    v
}

fn emit(out: Option<&Path>, v: &Value) -> Result<()> {
    let s = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(())
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|v| emit(cli.out.as_deref(), &v));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", serde_json::to_string_pretty(&error_report(&e)).unwrap_or_default());
            e.exit_code()
        }
    }
}
