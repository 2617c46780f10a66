//! Grid evaluation of `w^` by a folded two dimensional DFT, and certified
//! lower bounds on its infimum.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::WeightedSet;
use crate::error::{Error, Result};

/// Doubling stops once the grid would exceed this size.
pub const DEFAULT_MAX_GRID: usize = 1 << 14;

const IMAG_TOL: f64 = 1e-9;
/// Relative slack absorbing floating point error in the grid values.
const FLOAT_SLACK: f64 = 1e-9;

/// `w^` sampled at `(p/M, q/M)`, row-major in `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpectrum {
    pub m: usize,
    pub values: Vec<f64>,
}

impl GridSpectrum {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.m + q]
    }

    pub fn mean(&self) -> f64 {
        crate::phase::compensated_sum(self.values.iter().copied()) / self.values.len() as f64
    }
}

/// A two-sided bracket on `inf w^`.
///
/// `certified_lower = grid_min - L sqrt(2) / (2M)` uses only the gradient
/// bound `L`. `refined_lower` is the second order bound
/// `min_g (w^(g) - |grad w^(g)| r - H r^2 / 2) - slack` with
/// `r = sqrt(2) / (2M)` and `H` the Hessian bound; every point of the torus
/// lies within `r` of a grid point, so both are valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinCertificate {
    pub grid_size: usize,
    pub grid_min: f64,
    pub grid_argmin: [f64; 2],
    pub lipschitz: f64,
    pub certified_lower: f64,
    pub hessian_bound: f64,
    pub refined_lower: f64,
}

impl MinCertificate {
    /// The larger of the two lower bounds.
    pub fn best_lower(&self) -> f64 {
        self.certified_lower.max(self.refined_lower)
    }
}

struct Folded {
    m: usize,
    /// Nonzero rows `a = x mod M`, each of length `M`.
    rows: Vec<usize>,
    value: Vec<Vec<Complex64>>,
    grad: Option<Vec<Vec<Complex64>>>,
}

/// Folds weights into rows `x mod M`, columns `y mod M`, then transforms
/// each row. After this, `value[i][q] = sum_b F(rows[i], b) e(qb/M)`.
fn fold_and_transform_rows(w: &WeightedSet, m: usize, with_grad: bool) -> Folded {
    let mut value: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mut grad: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
    let mm = m as i64;
    for ((x, y), wt) in w.full_points() {
        let a = x.rem_euclid(mm) as usize;
        let b = y.rem_euclid(mm) as usize;
        value.entry(a).or_insert_with(|| vec![Complex64::default(); m])[b] += wt;
        if with_grad {
            grad.entry(a).or_insert_with(|| vec![Complex64::default(); m])[b] +=
                Complex64::new(wt * x as f64, wt * y as f64);
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(m);
    let rows: Vec<usize> = value.keys().copied().collect();
    let mut value: Vec<Vec<Complex64>> = value.into_values().collect();
    value.par_iter_mut().for_each(|r| fft.process(r));
    let grad = with_grad.then(|| {
        let mut g: Vec<Vec<Complex64>> = rows.iter().map(|a| grad.remove(a).unwrap()).collect();
        g.par_iter_mut().for_each(|r| fft.process(r));
        g
    });
    Folded {
        m,
        rows,
        value,
        grad,
    }
}

struct ColumnWork {
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    gbuf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Folded {
    fn work(&self) -> ColumnWork {
        let fft = FftPlanner::new().plan_fft_inverse(self.m);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        ColumnWork {
            fft,
            buf: vec![Complex64::default(); self.m],
            gbuf: vec![Complex64::default(); self.m],
            scratch,
        }
    }

    /// Transforms column `q` into `work.buf` (and `work.gbuf`). Afterwards
    /// `buf[p] = w^(p/M, q/M)`.
    fn column(&self, q: usize, work: &mut ColumnWork) {
        work.buf.fill(Complex64::default());
        for (i, &a) in self.rows.iter().enumerate() {
            work.buf[a] = self.value[i][q];
        }
        work.fft.process_with_scratch(&mut work.buf, &mut work.scratch);
        if let Some(grad) = &self.grad {
            work.gbuf.fill(Complex64::default());
            for (i, &a) in self.rows.iter().enumerate() {
                work.gbuf[a] = grad[i][q];
            }
            work.fft.process_with_scratch(&mut work.gbuf, &mut work.scratch);
        }
    }
}

fn check_grid_size(m: usize) -> Result<()> {
    if m < 1 {
        return Err(Error::domain("grid size must be positive"));
    }
    if m > 1 << 20 {
        return Err(Error::domain(format!("grid size {m} is too large")));
    }
    Ok(())
}

fn imag_error(residue: f64, sup: f64) -> Error {
    Error::Numerical(format!(
        "imaginary residue {residue:e} of the grid transform exceeds {IMAG_TOL:e} * sup = {:e}",
        IMAG_TOL * sup
    ))
}

/// The full `M x M` grid of values.
pub fn grid_spectrum(w: &WeightedSet, m: usize) -> Result<GridSpectrum> {
    check_grid_size(m)?;
    let sup = w.sup_value();
    let folded = fold_and_transform_rows(w, m, false);
    // column-major while transforming, transposed at the end
    let mut cols = vec![0.0; m * m];
    let residue = cols
        .par_chunks_mut(m)
        .enumerate()
        .map_init(
            || folded.work(),
            |work, (q, out)| {
                folded.column(q, work);
                let mut res: f64 = 0.0;
                for (o, z) in out.iter_mut().zip(&work.buf) {
                    *o = z.re;
                    res = res.max(z.im.abs());
                }
                res
            },
        )
        .reduce(|| 0.0, f64::max);
    if residue > IMAG_TOL * sup {
        return Err(imag_error(residue, sup));
    }
    let mut values = vec![0.0; m * m];
    values.par_chunks_mut(m).enumerate().for_each(|(p, row)| {
        for (q, v) in row.iter_mut().enumerate() {
            *v = cols[q * m + p];
        }
    });
    Ok(GridSpectrum { m, values })
}

#[derive(Clone, Copy)]
struct Scan {
    min: f64,
    p: usize,
    q: usize,
    refined: f64,
    residue: f64,
}

impl Scan {
    const EMPTY: Scan = Scan {
        min: f64::INFINITY,
        p: usize::MAX,
        q: usize::MAX,
        refined: f64::INFINITY,
        residue: 0.0,
    };

    /// Order independent merge: minimum value, then smallest `(p, q)`.
    fn merge(self, o: Scan) -> Scan {
        let take_o = (o.min, o.p, o.q) < (self.min, self.p, self.q);
        let best = if take_o { o } else { self };
        Scan {
            refined: self.refined.min(o.refined),
            residue: self.residue.max(o.residue),
            ..best
        }
    }
}

/// One pass over the grid without storing it.
fn scan_grid(w: &WeightedSet, m: usize) -> Result<MinCertificate> {
    check_grid_size(m)?;
    let sup = w.sup_value();
    let lipschitz = w.lipschitz_bound();
    let hessian = w.hessian_bound();
    let r = std::f64::consts::SQRT_2 / (2.0 * m as f64);
    let folded = fold_and_transform_rows(w, m, true);
    let scan = (0..m)
        .into_par_iter()
        .map_init(
            || folded.work(),
            |work, q| {
                folded.column(q, work);
                let mut s = Scan::EMPTY;
                for (p, (z, b)) in work.buf.iter().zip(&work.gbuf).enumerate() {
                    let v = z.re;
                    s.residue = s.residue.max(z.im.abs());
                    if v < s.min {
                        s.min = v;
                        s.p = p;
                        s.q = q;
                    }
                    let grad = TAU * b.norm();
                    s.refined = s.refined.min(v - grad * r - 0.5 * hessian * r * r);
                }
                s
            },
        )
        .reduce(|| Scan::EMPTY, Scan::merge);
    if scan.residue > IMAG_TOL * sup {
        return Err(imag_error(scan.residue, sup));
    }
    let mf = m as f64;
    Ok(MinCertificate {
        grid_size: m,
        grid_min: scan.min,
        grid_argmin: [scan.p as f64 / mf, scan.q as f64 / mf],
        lipschitz,
        certified_lower: scan.min - lipschitz * r,
        hessian_bound: hessian,
        refined_lower: scan.refined - FLOAT_SLACK * sup,
    })
}

/// Certified bracket on `inf w^`, doubling `M` up to [`DEFAULT_MAX_GRID`]
/// until the grid minimum is negative.
pub fn certified_min(w: &WeightedSet, m: usize) -> Result<MinCertificate> {
    certified_min_capped(w, m, DEFAULT_MAX_GRID)
}

pub fn certified_min_capped(w: &WeightedSet, m: usize, cap: usize) -> Result<MinCertificate> {
    if m < 16 {
        return Err(Error::domain(format!("grid size must be at least 16, got {m}")));
    }
    let mut m = m;
    loop {
        let cert = scan_grid(w, m)?;
        if cert.grid_min < 0.0 {
            return Ok(cert);
        }
        if m.saturating_mul(2) > cap {
            return Err(Error::ResolutionExhausted(Box::new(cert)));
        }
        log::info!("grid minimum {} at M = {m} is not negative, doubling", cert.grid_min);
        m *= 2;
    }
}

/// Writes the grid as an 8 byte little endian `M` followed by row-major
/// little endian `f64` values.
pub fn write_grid(path: &Path, grid: &GridSpectrum) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(grid.m as u64).to_le_bytes())?;
    for v in &grid.values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<GridSpectrum> {
    let mut inp = BufReader::new(File::open(path)?);
    let mut head = [0u8; 8];
    inp.read_exact(&mut head)?;
    let m = u64::from_le_bytes(head) as usize;
    check_grid_size(m)?;
    let mut bytes = Vec::new();
    inp.read_to_end(&mut bytes)?;
    if bytes.len() != m * m * 8 {
        return Err(Error::validation(format!(
            "grid file holds {} bytes of values, expected {}",
            bytes.len(),
            m * m * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(GridSpectrum { m, values })
}
