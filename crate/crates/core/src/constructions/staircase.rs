//! The staircase `γ_l`, its antiderivative `f̄_l` and the boundary spike `φ_l`.
//!
//! `γ_l` lives on `[0,1]` split into `2^{l²}` cells of width `c = 2^{-l²}`.
//! On cell `j` it equals `j·s` (`s = 2^{-l²-l}`) except on the last `w = 2^{-l⁴}`
//! of the cell, where it ramps linearly up to `(j+1)·s`. So `γ_l(1) = 2^{-l}`.

use num_bigint::BigInt;
use num_traits::One;

use super::ConstructionError;
use crate::dyadic::DyadicRational;

/// Largest `l` accepted. Beyond this `2^{-l⁴}` alone needs more than 2^24 bits.
pub const MAX_L: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StaircaseParams {
    l: u32,
}

/// Position of a point inside the cell decomposition.
struct Located {
    j: BigInt,
    /// Offset into the ramp, `None` on the plateau.
    ramp: Option<DyadicRational>,
    /// Offset from the left end of the cell.
    u: DyadicRational,
}

impl StaircaseParams {
    pub fn new(l: u32) -> Result<Self, ConstructionError> {
        if l < 2 {
            return Err(ConstructionError::LevelTooSmall(l));
        }
        if l > MAX_L {
            return Err(ConstructionError::LevelTooLarge(l));
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// `l²`: cells have width `2^{-l²}`.
    pub fn cell_exp(&self) -> i64 {
        (self.l as i64).pow(2)
    }

    /// `l⁴`: ramps have width `2^{-l⁴}`.
    pub fn ramp_exp(&self) -> i64 {
        (self.l as i64).pow(4)
    }

    /// `l² + l`: consecutive plateaus differ by `2^{-l²-l}`.
    pub fn step_exp(&self) -> i64 {
        self.cell_exp() + self.l as i64
    }

    pub fn cell_width(&self) -> DyadicRational {
        DyadicRational::pow2(-self.cell_exp())
    }

    pub fn ramp_width(&self) -> DyadicRational {
        DyadicRational::pow2(-self.ramp_exp())
    }

    pub fn step_height(&self) -> DyadicRational {
        DyadicRational::pow2(-self.step_exp())
    }

    pub fn cell_count(&self) -> BigInt {
        BigInt::one() << self.cell_exp() as usize
    }

    fn locate(&self, x: &DyadicRational) -> Result<Located, ConstructionError> {
        if x.is_negative() || *x > DyadicRational::one() {
            return Err(ConstructionError::OutOfDomain(x.to_f64_lossy()));
        }
        let mut j = x.mul_pow2(self.cell_exp()).floor();
        let n = self.cell_count();
        if j >= n {
            // x = 1 is the right end of the last ramp.
            j = n - 1;
        }
        let u = x - DyadicRational::new(j.clone(), -self.cell_exp());
        let plateau_len = self.cell_width() - self.ramp_width();
        let ramp = if u > plateau_len {
            Some(&u - &plateau_len)
        } else {
            None
        };
        Ok(Located { j, ramp, u })
    }

    /// `γ_l(x)`, exact.
    pub fn gamma(&self, x: &DyadicRational) -> Result<DyadicRational, ConstructionError> {
        let loc = self.locate(x)?;
        let base = DyadicRational::new(loc.j, -self.step_exp());
        Ok(match loc.ramp {
            None => base,
            // s·v/w
            Some(v) => base + v.mul_pow2(self.ramp_exp() - self.step_exp()),
        })
    }

    /// `f̄_l(x) = ∫_0^x γ_l`, exact.
    pub fn fbar(&self, x: &DyadicRational) -> Result<DyadicRational, ConstructionError> {
        let loc = self.locate(x)?;
        let (ce, re, se) = (self.cell_exp(), self.ramp_exp(), self.step_exp());
        let j = DyadicRational::from_int(loc.j);
        // Cells 0..j-1 in full: plateau i·s·(c−w) plus ramp (i + 1/2)·s·w, summed.
        let jm1 = &j - DyadicRational::one();
        let full = (&j * &jm1).mul_pow2(-ce - se - 1) + j.mul_pow2(-re - se - 1);
        let js = j.mul_pow2(-se);
        let partial = match loc.ramp {
            None => &js * &loc.u,
            Some(v) => {
                let plateau_len = self.cell_width() - self.ramp_width();
                &js * &plateau_len + &js * &v + (&v * &v).mul_pow2(re - se - 1)
            }
        };
        Ok(full + partial)
    }

    /// Floating-point `γ_l(x)`.
    pub fn gamma_f64(&self, x: f64) -> f64 {
        if self.cell_exp() > 52 {
            return exact_via_dyadic(x, |d| self.gamma(d));
        }
        let cells = (1u64 << self.cell_exp()) as f64;
        let (j, u) = split_cell(x, cells);
        let s = 2f64.powi(-(self.step_exp() as i32));
        let c = 1.0 / cells;
        let w = pow2_or_zero(self.ramp_exp());
        let v = u - (c - w);
        if w > 0.0 && v > 0.0 {
            j * s + s * (v / w)
        } else {
            j * s
        }
    }

    /// Floating-point `f̄_l(x)`.
    pub fn fbar_f64(&self, x: f64) -> f64 {
        if self.cell_exp() > 52 {
            return exact_via_dyadic(x, |d| self.fbar(d));
        }
        let cells = (1u64 << self.cell_exp()) as f64;
        let (j, u) = split_cell(x, cells);
        let s = 2f64.powi(-(self.step_exp() as i32));
        let c = 1.0 / cells;
        let w = pow2_or_zero(self.ramp_exp());
        let full = s * c * j * (j - 1.0) * 0.5 + j * w * s * 0.5;
        let v = u - (c - w);
        let partial = if w > 0.0 && v > 0.0 {
            j * s * (c - w) + j * s * v + s * v * v / (2.0 * w)
        } else {
            j * s * u
        };
        full + partial
    }
}

/// Cell index and offset of `x`; `x = 1` belongs to the last cell.
fn split_cell(x: f64, cells: f64) -> (f64, f64) {
    let j = (x * cells).floor().min(cells - 1.0);
    (j, x - j / cells)
}

fn pow2_or_zero(e: i64) -> f64 {
    if e > 1022 {
        0.0
    } else {
        2f64.powi(-(e as i32))
    }
}

fn exact_via_dyadic(
    x: f64,
    f: impl Fn(&DyadicRational) -> Result<DyadicRational, ConstructionError>,
) -> f64 {
    match DyadicRational::from_f64(x)
        .map_err(|_| ())
        .and_then(|d| f(&d).map_err(|_| ()))
    {
        Ok(v) => v.to_f64_lossy(),
        Err(()) => f64::NAN,
    }
}

/// Boundary spike `φ_l(x1)`: `-l^{l-1}·x1` up to `x1 = l^{-l}`, then `-1/l`.
pub fn phi_f64(l: u32, x1: f64) -> f64 {
    let lf = l as f64;
    let knee = lf.powi(-(l as i32));
    if x1 <= knee {
        -lf.powi(l as i32 - 1) * x1
    } else {
        -1.0 / lf
    }
}

/// Right derivative of `φ_l` in `x1` (left derivative at `x1 = 1`).
pub fn phi_derivative_f64(l: u32, x1: f64) -> f64 {
    let lf = l as f64;
    if x1 < lf.powi(-(l as i32)) {
        -lf.powi(l as i32 - 1)
    } else {
        0.0
    }
}
