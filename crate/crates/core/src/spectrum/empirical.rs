//! Coarse-grained spectrum of a function sampled on a dyadic grid.
//!
//! At each scale `2^-j` every cell gets the largest residual of least-squares
//! affine and quadratic fits of `f` over the cell and its neighbours. A cell
//! of a classification scale `m` is given the exponent
//! `α = -Δ log2 L / Δ j` read off its leaders `L_j` (largest residual over the
//! descendants at scales `j = m, m+1, m+2`). Cells whose affine residuals sit
//! at rounding level, or whose quadratic residuals decay markedly faster than
//! the affine ones, go to a separate cap band. The spectrum value of a bin is
//! the slope of `log2` of its cell count against `m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CellCounts, CurveKind, SpectrumCurve, SpectrumError, SpectrumValue};
use crate::fit::fit_line;
use crate::FunctionNd;

const MAX_SAMPLES: usize = 1 << 25;
const MAX_DIMENSION: usize = 3;
/// Finer scales used for the leaders of a cell.
const LADDER: u32 = 2;
/// Sampled points per cell width and axis in the local fits.
const SAMPLES_PER_CELL: usize = 8;
/// Scales at which a bin must be hit to get a finite value.
const MIN_POPULATED: usize = 3;
const SMOOTH_CANDIDATE: f64 = 1.75;
const SMOOTH_GAIN: f64 = 0.5;
const NOISE_ULPS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    /// Samples at spacing `2^-grid_exp`.
    pub grid_exp: u32,
    pub bin_width: f64,
    /// Coarsest classification scale; defaults to `max(6, n - 8)`.
    pub min_scale: Option<u32>,
    /// Finest classification scale; defaults to `min(n - 4, 14)`.
    pub max_scale: Option<u32>,
    /// Exponents at or above this go to the cap band.
    pub cap: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            grid_exp: 12,
            bin_width: 0.125,
            min_scale: None,
            max_scale: None,
            cap: 3.0,
        }
    }
}

impl SpectrumConfig {
    pub fn with_grid(grid_exp: u32) -> Self {
        Self {
            grid_exp,
            ..Self::default()
        }
    }

    pub fn scales(&self) -> Result<Vec<u32>, SpectrumError> {
        let n = self.grid_exp;
        let lo = self.min_scale.unwrap_or(n.saturating_sub(8).max(6));
        let hi = self.max_scale.unwrap_or(n.saturating_sub(4).min(14));
        if lo == 0 {
            return Err(SpectrumError::InvalidConfig("scales start at 1".into()));
        }
        if hi + LADDER + 2 > n {
            return Err(SpectrumError::InvalidConfig(format!(
                "finest classification scale {hi} needs a grid of at least 2^-{}",
                hi + LADDER + 2
            )));
        }
        let scales: Vec<u32> = (lo..=hi).collect();
        if scales.len() < MIN_POPULATED {
            return Err(SpectrumError::GridTooCoarse {
                grid_exp: n,
                available: scales.len(),
                required: MIN_POPULATED,
            });
        }
        Ok(scales)
    }

    fn bins(&self) -> Result<usize, SpectrumError> {
        if !(self.bin_width > 0.0 && self.cap > 0.0 && self.cap / self.bin_width <= 1e4) {
            return Err(SpectrumError::InvalidConfig(format!(
                "bin width {} and cap {}",
                self.bin_width, self.cap
            )));
        }
        Ok((self.cap / self.bin_width).round() as usize)
    }
}

struct Grid {
    d: usize,
    n: u32,
    side: usize,
    values: Vec<f64>,
}

impl Grid {
    fn sample(f: &dyn FunctionNd, n: u32) -> Result<Self, SpectrumError> {
        let d = f.dimension();
        let side = (1usize << n) + 1;
        let total = (side as u128).pow(d as u32);
        if total > MAX_SAMPLES as u128 {
            return Err(SpectrumError::TooManySamples {
                samples: total,
                limit: MAX_SAMPLES,
            });
        }
        let step = 1.0 / (side - 1) as f64;
        let point = |mut idx: usize| -> Vec<f64> {
            (0..d)
                .map(|_| {
                    let v = (idx % side) as f64 * step;
                    idx /= side;
                    v
                })
                .collect()
        };
        let values: Vec<f64> = (0..total as usize)
            .into_par_iter()
            .map(|i| f.value(&point(i)))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectrumError::NonFinite(point(i)));
        }
        Ok(Self { d, n, side, values })
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest affine and quadratic least-squares residuals over the cell
    /// `c` at scale `j` and its neighbours.
    fn residuals(&self, j: u32, c: &[usize]) -> (f64, f64) {
        let d = self.d;
        let s = 1usize << (self.n - j);
        let t = (s / SAMPLES_PER_CELL).max(1);
        let last = self.side - 1;
        let mut lo = [0usize; MAX_DIMENSION];
        let mut count = [0usize; MAX_DIMENSION];
        let mut mid = [0f64; MAX_DIMENSION];
        let mut half = [0f64; MAX_DIMENSION];
        for k in 0..d {
            let a = c[k].saturating_sub(1) * s;
            let b = ((c[k] + 2) * s).min(last);
            lo[k] = a;
            count[k] = (b - a) / t + 1;
            mid[k] = (a + b) as f64 / 2.0;
            half[k] = (b - a) as f64 / 2.0;
        }
        let p1 = d + 1;
        let p2 = p1 + d * (d + 1) / 2;
        let total: usize = count[..d].iter().product();
        let mut basis = [0f64; 10];
        let mut coords = [[0f64; 4 * SAMPLES_PER_CELL]; MAX_DIMENSION];
        for k in 0..d {
            for (i, u) in coords[k].iter_mut().take(count[k]).enumerate() {
                *u = ((lo[k] + i * t) as f64 - mid[k]) / half[k];
            }
        }
        let fill = |idx: &[usize; MAX_DIMENSION], basis: &mut [f64; 10]| {
            basis[0] = 1.0;
            let mut u = [0f64; MAX_DIMENSION];
            for k in 0..d {
                u[k] = coords[k][idx[k]];
                basis[1 + k] = u[k];
            }
            let mut q = p1;
            for a in 0..d {
                for b in a..d {
                    basis[q] = u[a] * u[b];
                    q += 1;
                }
            }
        };
        let index = |idx: &[usize; MAX_DIMENSION]| -> usize {
            let mut flat = 0;
            for k in (0..d).rev() {
                flat = flat * self.side + lo[k] + idx[k] * t;
            }
            flat
        };
        let advance = |idx: &mut [usize; MAX_DIMENSION]| {
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < count[k] {
                    return;
                }
                idx[k] = 0;
            }
        };
        // Offsetting by one sample keeps the normal equations accurate
        // relative to the variation of f over the neighbourhood rather than
        // its size.
        let mut idx = [0usize; MAX_DIMENSION];
        let offset = self.values[index(&idx)];
        // The grid is a tensor product, so the normal matrix factors into
        // per-axis power sums of the normalised coordinates.
        let mut powers = [[0f64; 5]; MAX_DIMENSION];
        for k in 0..d {
            for &u in &coords[k][..count[k]] {
                let mut v = 1.0;
                for e in powers[k].iter_mut() {
                    *e += v;
                    v *= u;
                }
            }
        }
        let mut exps = [[0usize; MAX_DIMENSION]; 10];
        let mut q = p1;
        for a in 0..d {
            exps[1 + a][a] = 1;
            for b in a..d {
                exps[q][a] += 1;
                exps[q][b] += 1;
                q += 1;
            }
        }
        let mut ata = [[0f64; 10]; 10];
        for r in 0..p2 {
            for q in 0..p2 {
                ata[r][q] = (0..d).map(|k| powers[k][exps[r][k] + exps[q][k]]).product();
            }
        }
        let mut aty = [0f64; 10];
        for _ in 0..total {
            fill(&idx, &mut basis);
            let y = self.values[index(&idx)] - offset;
            for r in 0..p2 {
                aty[r] += basis[r] * y;
            }
            advance(&mut idx);
        }
        let c1 = solve(&ata, &aty, p1);
        let c2 = solve(&ata, &aty, p2);
        let (mut e1, mut e2) = (0f64, 0f64);
        for _ in 0..total {
            fill(&idx, &mut basis);
            let y = self.values[index(&idx)] - offset;
            let f1: f64 = (0..p1).map(|r| basis[r] * c1[r]).sum();
            let f2: f64 = (0..p2).map(|r| basis[r] * c2[r]).sum();
            e1 = e1.max((y - f1).abs());
            e2 = e2.max((y - f2).abs());
            advance(&mut idx);
        }
        (e1, e2)
    }
}

/// Solves the leading `p × p` block by Gaussian elimination with partial
/// pivoting.
fn solve(ata: &[[f64; 10]; 10], aty: &[f64; 10], p: usize) -> [f64; 10] {
    let mut m = [[0f64; 11]; 10];
    for r in 0..p {
        m[r][..p].copy_from_slice(&ata[r][..p]);
        m[r][p] = aty[r];
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty");
        m.swap(col, piv);
        let pv = m[col][col];
        if pv == 0.0 {
            continue;
        }
        for r in col + 1..p {
            let factor = m[r][col] / pv;
            if factor != 0.0 {
                for q in col..=p {
                    m[r][q] -= factor * m[col][q];
                }
            }
        }
    }
    let mut x = [0f64; 10];
    for r in (0..p).rev() {
        let mut acc = m[r][p];
        for q in r + 1..p {
            acc -= m[r][q] * x[q];
        }
        x[r] = if m[r][r] == 0.0 { 0.0 } else { acc / m[r][r] };
    }
    x
}

fn cell_index(flat: usize, per_axis: usize, d: usize) -> [usize; MAX_DIMENSION] {
    let mut c = [0usize; MAX_DIMENSION];
    let mut rest = flat;
    for ck in c.iter_mut().take(d) {
        *ck = rest % per_axis;
        rest /= per_axis;
    }
    c
}

/// Residual arrays at scale `j`, cells in x-fastest order.
fn scale_residuals(grid: &Grid, j: u32) -> (Vec<f64>, Vec<f64>) {
    let per_axis = 1usize << j;
    let total = per_axis.pow(grid.d as u32);
    (0..total)
        .into_par_iter()
        .map(|flat| grid.residuals(j, &cell_index(flat, per_axis, grid.d)))
        .unzip()
}

/// Max over the `2^d` children of each cell one scale up.
fn pool(fine: &[f64], fine_scale: u32, d: usize) -> Vec<f64> {
    let fine_axis = 1usize << fine_scale;
    let coarse_axis = fine_axis / 2;
    let total = coarse_axis.pow(d as u32);
    (0..total)
        .map(|flat| {
            let c = cell_index(flat, coarse_axis, d);
            let mut best = f64::NEG_INFINITY;
            for corner in 0..(1usize << d) {
                let mut idx = 0;
                for k in (0..d).rev() {
                    idx = idx * fine_axis + 2 * c[k] + ((corner >> k) & 1);
                }
                best = best.max(fine[idx]);
            }
            best
        })
        .collect()
}

enum Class {
    Bin(usize),
    Cap,
}

fn slope_of(leaders: &[f64; 3], m: u32) -> f64 {
    let x: Vec<f64> = (0..3).map(|i| (m + i) as f64).collect();
    let y: Vec<f64> = leaders
        .iter()
        .map(|v| v.max(f64::MIN_POSITIVE).log2())
        .collect();
    -fit_line(&x, &y).expect("three distinct scales").slope
}

fn classify(
    l1: &[f64; 3],
    l2: &[f64; 3],
    m: u32,
    noise: f64,
    cfg: &SpectrumConfig,
    bins: usize,
) -> Class {
    if l1[2] <= noise {
        return Class::Cap;
    }
    let a1 = slope_of(l1, m);
    let a2 = if l2[2] <= noise {
        f64::INFINITY
    } else {
        slope_of(l2, m)
    };
    if a1 >= SMOOTH_CANDIDATE && a2 >= a1 + SMOOTH_GAIN {
        return Class::Cap;
    }
    if a1 >= cfg.cap {
        return Class::Cap;
    }
    let b = (a1.max(0.0) / cfg.bin_width).round() as usize;
    if b >= bins {
        Class::Cap
    } else {
        Class::Bin(b)
    }
}

fn bin_values(counts: &CellCounts, bins: usize, d: usize) -> Vec<SpectrumValue> {
    (0..bins)
        .map(|b| {
            let (x, y): (Vec<f64>, Vec<f64>) = counts
                .scales
                .iter()
                .zip(&counts.counts)
                .filter(|(_, row)| row[b] > 0)
                .map(|(&m, row)| (m as f64, (row[b] as f64).log2()))
                .unzip();
            if x.len() < MIN_POPULATED {
                return SpectrumValue::NegInfinity;
            }
            let s = fit_line(&x, &y).expect("distinct scales").slope;
            SpectrumValue::Finite(s.clamp(0.0, d as f64))
        })
        .collect()
}

/// Coarse-grained spectrum of `f` on `[0,1]^d`, `d ≤ 3`.
pub fn empirical_spectrum(
    f: &dyn FunctionNd,
    cfg: &SpectrumConfig,
) -> Result<SpectrumCurve, SpectrumError> {
    let d = f.dimension();
    if !(1..=MAX_DIMENSION).contains(&d) {
        return Err(SpectrumError::BadDimension {
            expected: "1, 2 or 3".into(),
            got: d,
        });
    }
    let scales = cfg.scales()?;
    let bins = cfg.bins()?;
    let grid = Grid::sample(f, cfg.grid_exp)?;
    let noise = NOISE_ULPS * f64::EPSILON * grid.max_abs();

    let lo = scales[0];
    let hi = scales[scales.len() - 1] + LADDER;
    // leaders[j - lo][i]: residuals at scale j pooled up i levels.
    let mut leaders1: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut leaders2: Vec<Vec<Vec<f64>>> = Vec::new();
    for j in lo..=hi {
        let (e1, e2) = scale_residuals(&grid, j);
        let mut p1 = vec![e1];
        let mut p2 = vec![e2];
        for i in 0..LADDER.min(j - lo) {
            p1.push(pool(&p1[i as usize], j - i, d));
            p2.push(pool(&p2[i as usize], j - i, d));
        }
        leaders1.push(p1);
        leaders2.push(p2);
    }

    let mut interior = CellCounts {
        scales: scales.clone(),
        counts: Vec::new(),
        cap_band: Vec::new(),
    };
    let mut boundary = interior.clone();
    for &m in &scales {
        let per_axis = 1usize << m;
        let at = |store: &Vec<Vec<Vec<f64>>>, i: u32, flat: usize| {
            store[(m + i - lo) as usize][i as usize][flat]
        };
        let classes: Vec<(bool, Class)> = (0..per_axis.pow(d as u32))
            .into_par_iter()
            .map(|flat| {
                let c = cell_index(flat, per_axis, d);
                let edge = c[..d].iter().any(|&v| v == 0 || v == per_axis - 1);
                let l1 = [
                    at(&leaders1, 0, flat),
                    at(&leaders1, 1, flat),
                    at(&leaders1, 2, flat),
                ];
                let l2 = [
                    at(&leaders2, 0, flat),
                    at(&leaders2, 1, flat),
                    at(&leaders2, 2, flat),
                ];
                (edge, classify(&l1, &l2, m, noise, cfg, bins))
            })
            .collect();
        let mut row_i = vec![0u64; bins];
        let mut row_b = vec![0u64; bins];
        let (mut cap_i, mut cap_b) = (0u64, 0u64);
        for (edge, class) in classes {
            match (edge, class) {
                (false, Class::Bin(b)) => row_i[b] += 1,
                (true, Class::Bin(b)) => row_b[b] += 1,
                (false, Class::Cap) => cap_i += 1,
                (true, Class::Cap) => cap_b += 1,
            }
        }
        interior.counts.push(row_i);
        interior.cap_band.push(cap_i);
        boundary.counts.push(row_b);
        boundary.cap_band.push(cap_b);
    }

    let values = bin_values(&interior, bins, d);
    let boundary_values = bin_values(&boundary, bins, d);
    Ok(SpectrumCurve {
        kind: CurveKind::Empirical,
        dimension: d,
        h: (0..bins).map(|b| b as f64 * cfg.bin_width).collect(),
        values,
        bin_width: cfg.bin_width,
        grid_exp: Some(cfg.grid_exp),
        interior: Some(interior),
        boundary: Some(boundary),
        boundary_values,
    })
}
