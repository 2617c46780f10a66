//! Sieve of Eratosthenes, Chebyshev `theta`, and the on-disk sieve cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{compensated_sum, CompensatedSum};

/// `theta` is stored at every multiple of this position.
pub const CHECKPOINT_STRIDE: u64 = 1 << 20;
const WORDS_PER_SEGMENT: usize = (CHECKPOINT_STRIDE / 64) as usize;
const MAGIC: &[u8; 5] = b"PCSV1";
const CACHE_FILE: &str = "sieve.pcsv";
/// Sieves beyond this are refused (about 1.5 GiB of bits).
pub const MAX_LIMIT: u64 = 1 << 34;

/// Primality of every `n <= limit`, with `theta` checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeTable {
    limit: u64,
    /// Bit `n` is set iff `n` is prime.
    bits: Vec<u64>,
    /// `(k * CHECKPOINT_STRIDE, theta(k * CHECKPOINT_STRIDE))` for `k >= 1`.
    checkpoints: Vec<(u64, f64)>,
}

fn simple_primes(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

fn log_sum_bits(words: &[u64], base: u64) -> f64 {
    let mut s = CompensatedSum::new();
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as u64;
            s.add(((base + 64 * wi as u64 + b) as f64).ln());
            w &= w - 1;
        }
    }
    s.value()
}

impl PrimeTable {
    /// Segmented sieve up to `limit`, segments processed in parallel.
    pub fn build(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::domain(format!("sieve limit must be at least 2, got {limit}")));
        }
        if limit > MAX_LIMIT {
            return Err(Error::domain(format!("sieve limit {limit} exceeds {MAX_LIMIT}")));
        }
        let base = simple_primes(limit.isqrt());
        let n_words = (limit / 64 + 1) as usize;
        let mut bits = vec![u64::MAX; n_words];
        bits.par_chunks_mut(WORDS_PER_SEGMENT)
            .enumerate()
            .for_each(|(seg, words)| {
                let lo = seg as u64 * CHECKPOINT_STRIDE;
                let hi = lo + 64 * words.len() as u64;
                for &p in &base {
                    if p * p >= hi {
                        break;
                    }
                    let mut m = (p * p).max(lo.div_ceil(p) * p);
                    while m < hi {
                        let off = m - lo;
                        words[(off / 64) as usize] &= !(1u64 << (off % 64));
                        m += p;
                    }
                }
            });
        bits[0] &= !0b11;
        let tail = limit % 64;
        if tail < 63 {
            *bits.last_mut().unwrap() &= (1u64 << (tail + 1)) - 1;
        }
        let checkpoints = Self::compute_checkpoints(&bits, limit);
        Ok(PrimeTable {
            limit,
            bits,
            checkpoints,
        })
    }

    fn compute_checkpoints(bits: &[u64], limit: u64) -> Vec<(u64, f64)> {
        let seg_sums: Vec<f64> = bits
            .par_chunks(WORDS_PER_SEGMENT)
            .enumerate()
            .map(|(seg, words)| log_sum_bits(words, seg as u64 * CHECKPOINT_STRIDE))
            .collect();
        let mut run = CompensatedSum::new();
        let mut out = Vec::new();
        for (seg, s) in seg_sums.iter().enumerate() {
            let pos = (seg as u64 + 1) * CHECKPOINT_STRIDE;
            if pos > limit {
                break;
            }
            run.add(*s);
            // segment `seg` covers [pos - stride, pos); pos itself is even
            out.push((pos, run.value()));
        }
        out
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn checkpoints(&self) -> &[(u64, f64)] {
        &self.checkpoints
    }

    pub(crate) fn check_covers(&self, n: u64) -> Result<()> {
        if n > self.limit {
            return Err(Error::domain(format!(
                "table covers n <= {} but {n} was requested",
                self.limit
            )));
        }
        Ok(())
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n <= self.limit && self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    /// Primes in `[lo, hi]`, increasing.
    pub fn primes_between(&self, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
        let hi = hi.min(self.limit);
        let (w0, w1) = ((lo / 64) as usize, (hi / 64) as usize);
        let words = if lo > hi { &self.bits[0..0] } else { &self.bits[w0..=w1] };
        words.iter().enumerate().flat_map(move |(i, &w)| {
            let base = (w0 + i) as u64 * 64;
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(base + b)
            })
            .filter(move |&p| p >= lo && p <= hi)
        })
    }

    pub fn primes_up_to(&self, n: u64) -> impl Iterator<Item = u64> + '_ {
        self.primes_between(0, n)
    }

    pub fn count_up_to(&self, n: u64) -> u64 {
        let n = n.min(self.limit);
        let full = (n / 64) as usize;
        let mut c: u64 = self.bits[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = n % 64;
        let mask = if rem == 63 { u64::MAX } else { (1u64 << (rem + 1)) - 1 };
        c += (self.bits[full] & mask).count_ones() as u64;
        c
    }

    /// `theta(n) = sum_{p <= n} log p`.
    pub fn theta(&self, n: u64) -> Result<f64> {
        self.check_covers(n)?;
        let k = (n / CHECKPOINT_STRIDE) as usize;
        let (start, base) = if k == 0 { (0, 0.0) } else { self.checkpoints[k - 1] };
        let mut s = CompensatedSum::new();
        s.add(base);
        for p in self.primes_between(start + 1, n) {
            s.add((p as f64).ln());
        }
        Ok(s.value())
    }

    /// `sum log p` over primes in `(lo, hi]`.
    pub fn theta_range(&self, lo: u64, hi: u64) -> Result<f64> {
        self.check_covers(hi)?;
        if hi <= lo {
            return Ok(0.0);
        }
        Ok(compensated_sum(
            self.primes_between(lo + 1, hi).map(|p| (p as f64).ln()),
        ))
    }

    /// `sum log p` over primes in `(m N / L, (m+1) N / L]`, `L = (log N)^10`.
    pub fn theta_interval(&self, n: u64, m: u64) -> Result<f64> {
        self.theta_interval_with_exponent(n, m, 10.0)
    }

    /// As [`PrimeTable::theta_interval`] with `L = (log N)^e`. Interval
    /// endpoints are floored, and the upper one is clipped to `N`, so the
    /// intervals for `m = 1 ..= floor(L)` partition `(floor(N/L), N]`.
    pub fn theta_interval_with_exponent(&self, n: u64, m: u64, e: f64) -> Result<f64> {
        let (lo, hi) = interval_bounds(n, m, e)?;
        self.theta_range(lo, hi)
    }

    /// Exact totient by trial division with table primes.
    pub fn euler_phi(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::domain("phi is defined for n >= 1"));
        }
        if n.isqrt() > self.limit {
            return Err(Error::domain(format!(
                "table up to {} cannot factor {n}",
                self.limit
            )));
        }
        let mut rest = n;
        let mut phi = n;
        for p in self.primes_up_to(n.isqrt()) {
            if p * p > rest {
                break;
            }
            if rest % p == 0 {
                phi = phi / p * (p - 1);
                while rest % p == 0 {
                    rest /= p;
                }
            }
        }
        if rest > 1 {
            phi = phi / rest * (rest - 1);
        }
        Ok(phi)
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + self.bits.len() * 8 + self.checkpoints.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.limit.to_le_bytes());
        for w in &self.bits {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for (pos, v) in &self.checkpoints {
            out.extend_from_slice(&pos.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::validation(format!("corrupt sieve cache: {why}"));
        if bytes.len() < 13 || &bytes[..5] != MAGIC {
            return Err(bad("missing header"));
        }
        let limit = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
        if !(2..=MAX_LIMIT).contains(&limit) {
            return Err(bad("limit out of range"));
        }
        let n_words = (limit / 64 + 1) as usize;
        let n_cp = (limit / CHECKPOINT_STRIDE) as usize;
        if bytes.len() != 13 + 8 * n_words + 16 * n_cp {
            return Err(bad("length mismatch"));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let bits: Vec<u64> = (0..n_words).map(|i| word(13 + 8 * i)).collect();
        let off = 13 + 8 * n_words;
        let checkpoints: Vec<(u64, f64)> = (0..n_cp)
            .map(|i| {
                let at = off + 16 * i;
                (word(at), f64::from_bits(word(at + 8)))
            })
            .collect();
        let table = PrimeTable {
            limit,
            bits,
            checkpoints,
        };
        table.validate().map_err(|e| bad(&e))?;
        Ok(table)
    }

    /// Cheap consistency checks: small primes agree with a reference sieve
    /// and the checkpoints agree with recomputation from the bits.
    fn validate(&self) -> std::result::Result<(), String> {
        let small = self.limit.min(10_000);
        let reference = simple_primes(small);
        if !self.primes_up_to(small).eq(reference.iter().copied()) {
            return Err("small primes disagree".into());
        }
        let tail = self.limit % 64;
        if tail < 63 && self.bits.last().unwrap() >> (tail + 1) != 0 {
            return Err("bits set beyond the limit".into());
        }
        let want = Self::compute_checkpoints(&self.bits, self.limit);
        if want != self.checkpoints {
            return Err("theta checkpoints disagree with the bitset".into());
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&self.encode())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

fn interval_bounds(n: u64, m: u64, e: f64) -> Result<(u64, u64)> {
    if n < 3 {
        return Err(Error::domain(format!("N must be at least 3, got {n}")));
    }
    let l = (n as f64).ln().powf(e);
    if m < 1 || m as f64 > l {
        return Err(Error::domain(format!("m must lie in [1, {l}], got {m}")));
    }
    let step = n as f64 / l;
    let lo = (m as f64 * step).floor() as u64;
    let hi = (((m + 1) as f64 * step).floor() as u64).min(n);
    Ok((lo.min(n), hi))
}

/// The cache directory: `$PLANECHROME_CACHE` or `./cache`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("PLANECHROME_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("cache"))
}

/// A table covering `n`, from the cache in [`cache_dir`] when possible.
pub fn sieve(n: u64) -> Result<PrimeTable> {
    sieve_in(&cache_dir(), n)
}

/// A table covering `n`, using the cache file in `dir`. A missing or short
/// cache is rebuilt and rewritten; a corrupt one is reported and rebuilt.
/// Failing to write the cache only logs a warning.
pub fn sieve_in(dir: &Path, n: u64) -> Result<PrimeTable> {
    if n < 2 {
        return Err(Error::domain(format!("sieve limit must be at least 2, got {n}")));
    }
    let path = dir.join(CACHE_FILE);
    if path.exists() {
        match PrimeTable::load(&path) {
            Ok(t) if t.limit >= n => return Ok(t),
            Ok(_) => {}
            Err(e) => log::warn!("{}: {e}; rebuilding", path.display()),
        }
    }
    let table = PrimeTable::build(n)?;
    if let Err(e) = table.save(&path) {
        log::warn!("could not write sieve cache {}: {e}", path.display());
    }
    Ok(table)
}

/// `theta(N)` next to the series `sum_{k=0}^{10} k! N / (log N)^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoussinReport {
    pub n: u64,
    pub theta: f64,
    pub series: f64,
    pub leading: f64,
    pub ratio_theta_over_n: f64,
    pub ratio_theta_over_series: f64,
}

pub fn poussin_compare(table: &PrimeTable, n: u64) -> Result<PoussinReport> {
    if n < 100 {
        return Err(Error::domain(format!("N must be at least 100, got {n}")));
    }
    let theta = table.theta(n)?;
    let nf = n as f64;
    let ln = nf.ln();
    let mut term = nf;
    let mut terms = vec![term];
    for k in 1..=10 {
        term *= k as f64 / ln;
        terms.push(term);
    }
    let series = compensated_sum(terms);
    Ok(PoussinReport {
        n,
        theta,
        series,
        leading: nf,
        ratio_theta_over_n: theta / nf,
        ratio_theta_over_series: theta / series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        let t = PrimeTable::build(10).unwrap();
        assert_eq!(t.primes_up_to(10).collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        assert!(!t.is_prime(1) && !t.is_prime(0) && t.is_prime(2));
        assert!((t.theta(10).unwrap() - 210f64.ln()).abs() < 1e-12);
        assert_eq!(t.theta(2).unwrap(), 2f64.ln());
        assert!(t.theta(11).is_err());
        for limit in [63, 64, 65, 127, 128] {
            let t = PrimeTable::build(limit).unwrap();
            let want = simple_primes(limit);
            assert_eq!(t.primes_up_to(limit).collect::<Vec<_>>(), want);
            assert_eq!(t.count_up_to(limit), want.len() as u64);
        }
    }

    #[test]
    fn matches_reference_across_segments() {
        let limit = 3 * CHECKPOINT_STRIDE + 12345;
        let t = PrimeTable::build(limit).unwrap();
        let want = simple_primes(limit);
        assert_eq!(t.count_up_to(limit), want.len() as u64);
        assert!(t.primes_up_to(limit).eq(want.iter().copied()));
        assert_eq!(t.checkpoints().len(), 3);
        let direct = compensated_sum(want.iter().map(|&p| (p as f64).ln()));
        assert!((t.theta(limit).unwrap() - direct).abs() < 1e-6);
        let at = 2 * CHECKPOINT_STRIDE;
        let direct = compensated_sum(want.iter().filter(|&&p| p <= at).map(|&p| (p as f64).ln()));
        assert!((t.theta(at).unwrap() - direct).abs() < 1e-6);
    }

    #[test]
    fn prime_count_million() {
        let t = PrimeTable::build(1_000_000).unwrap();
        assert_eq!(t.count_up_to(1_000_000), 78498);
    }

    #[test]
    fn intervals_partition() {
        let n = 1_000_000;
        let t = PrimeTable::build(n).unwrap();
        let e = 2.0;
        let l = (n as f64).ln().powf(e);
        let total = compensated_sum((1..=l.floor() as u64).map(|m| {
            t.theta_interval_with_exponent(n, m, e).unwrap()
        }));
        let lo = (n as f64 / l).floor() as u64;
        let want = t.theta(n).unwrap() - t.theta(lo).unwrap();
        assert!((total - want).abs() < 1e-6);
        // for exponent 10 at this size the first interval has no integers
        assert_eq!(t.theta_interval(n, 1).unwrap(), 0.0);
        assert!(t.theta_interval(n, 0).is_err());
    }

    #[test]
    fn totients() {
        let t = PrimeTable::build(1000).unwrap();
        assert_eq!(t.euler_phi(1).unwrap(), 1);
        assert_eq!(t.euler_phi(12).unwrap(), 4);
        assert_eq!(t.euler_phi(997).unwrap(), 996);
        assert_eq!(t.euler_phi(1 << 10).unwrap(), 512);
    }

    #[test]
    fn poussin_series() {
        let t = PrimeTable::build(1_000_000).unwrap();
        let r = poussin_compare(&t, 1_000_000).unwrap();
        assert_eq!(r.leading, 1e6);
        assert!((r.series / 1e6 - 1.0862539146305703).abs() < 1e-12);
        assert!((0.95..=1.02).contains(&r.ratio_theta_over_n));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let a = sieve_in(dir.path(), 3 * CHECKPOINT_STRIDE).unwrap();
        let path = dir.path().join(CACHE_FILE);
        assert!(path.exists());
        let b = sieve_in(dir.path(), 1000).unwrap();
        assert_eq!(a, b);
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        fs::write(&path, &bytes).unwrap();
        assert!(PrimeTable::load(&path).is_err());
        let c = sieve_in(dir.path(), 1000).unwrap();
        assert_eq!(c.count_up_to(1000), 168);
        assert!(PrimeTable::load(&path).is_ok());
    }
}
