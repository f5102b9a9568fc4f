//! Cantor-type sets built from short right-aligned intervals, their covering
//! counts, the uniform mass distribution they carry and local dimensions of
//! that measure.
//!
//! Generation `k` of the scheme keeps, in each dyadic cell of width
//! `c_k = 2^{-l_k^2}`, the interval `[(j+1)c_k - w_k, (j+1)c_k - w_k/2]` with
//! `w_k = 2^{-⌈(l_k^2+l_k)/(h-1)⌉}` for `h ∈ (1, 2)` and
//! `w_k = 2^{-k(l_k^2+l_k)}` for `h = 1`.
//!
//! ```
//! use convex_multifractal::cantor::{covering_counts, level_intervals};
//! use convex_multifractal::constructions::ScaleSequence;
//!
//! let seq = ScaleSequence::new(&[3]).unwrap();
//! let f1 = level_intervals(1.5, &seq, 1).unwrap();
//! assert_eq!(f1.len(), 512);
//! let counts = covering_counts(1.5, &seq, 1, 1).unwrap();
//! assert_eq!(counts[0].log2_delta, -25);
//! assert!((counts[0].slope - 0.36).abs() < 1e-12);
//! ```

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::constructions::{validate_sequence, ScaleSequence, MAX_L};
use crate::dyadic::DyadicRational as Dy;
use crate::fit::fit_through_origin;

/// Largest number of intervals [`intersect_to_depth`] will materialize.
pub const MATERIALIZE_CAP: usize = 1 << 24;

/// Materialized endpoints are integers over `2^MAX_RESOLUTION_BITS` at most.
const MAX_RESOLUTION_BITS: i64 = 126;

/// Minimum number of binary orders by which a generation's cells must fit
/// inside the previous generation's intervals.
pub const NESTING_BITS: i64 = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CantorError {
    #[error("h must lie in [1,2), got {0}")]
    InvalidH(f64),
    #[error("generation range {k_start}..={depth} is not inside 1..={len}")]
    InvalidGeneration {
        k_start: usize,
        depth: usize,
        len: usize,
    },
    #[error("sequence is not admissible: {0}")]
    Inadmissible(String),
    #[error("interval width 2^-{width_exp} does not fit in cells of width 2^-{cell_exp} at generation {k}")]
    WidthTooLarge {
        k: usize,
        width_exp: i64,
        cell_exp: i64,
    },
    #[error("intersection is empty at generation {k}")]
    Empty { k: usize },
    #[error("generation {k} cells do not tile the generation {prev} intervals; symbolic counts unavailable")]
    Misaligned { k: usize, prev: usize },
    #[error("more than {cap} intervals at generation {k}; use covering counts instead")]
    TooManyIntervals { k: usize, cap: usize },
    #[error(
        "endpoints at generation {k} need 2^-{bits} resolution, beyond what can be materialized"
    )]
    ResolutionTooFine { k: usize, bits: i64 },
    #[error("dimension must be between 1 and 6, got {0}")]
    BadDimension(usize),
    #[error("point has {got} coordinates, measure lives in dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not in the support of the measure")]
    NotInSupport,
    #[error("radius {radius} outside the resolved range [{min}, {max}] (finest interval length delta_K = {min})")]
    RadiusOutOfRange { radius: Dy, min: Dy, max: Dy },
    #[error("at least two radii are required")]
    TooFewRadii,
}

fn check_h(h: f64) -> Result<(), CantorError> {
    if (1.0..2.0).contains(&h) {
        Ok(())
    } else {
        Err(CantorError::InvalidH(h))
    }
}

/// `e_k` with `w_k = 2^{-e_k}`. Quotients within `1e-9` of an integer are
/// taken as that integer so that `h` values like `1.1` do not round up by a
/// spurious unit.
pub fn width_exponent(h: f64, l: u32, k: usize) -> i64 {
    let s = (l as i64) * (l as i64) + l as i64;
    if h == 1.0 {
        return k as i64 * s;
    }
    let q = s as f64 / (h - 1.0);
    let r = q.round();
    if (q - r).abs() <= 1e-9 * q.max(1.0) {
        r as i64
    } else {
        q.ceil() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct Level {
    k: usize,
    l: u32,
    /// `c_k = 2^{-cell_exp}`.
    cell_exp: i64,
    /// `w_k = 2^{-width_exp}`; intervals have length `2^{-(width_exp+1)}`.
    width_exp: i64,
}

fn levels(
    h: f64,
    seq: &ScaleSequence,
    depth: usize,
    k_start: usize,
) -> Result<Vec<Level>, CantorError> {
    check_h(h)?;
    if k_start == 0 || depth < k_start || depth > seq.len() {
        return Err(CantorError::InvalidGeneration {
            k_start,
            depth,
            len: seq.len(),
        });
    }
    (k_start..=depth)
        .map(|k| {
            let l = seq.l(k).expect("checked above");
            let cell_exp = (l as i64) * (l as i64);
            let width_exp = width_exponent(h, l, k);
            if width_exp <= cell_exp {
                return Err(CantorError::WidthTooLarge {
                    k,
                    width_exp,
                    cell_exp,
                });
            }
            Ok(Level {
                k,
                l,
                cell_exp,
                width_exp,
            })
        })
        .collect()
}

/// Extra conditions that make the scheme nest cleanly for a given `h`: each
/// generation's cells fit in the previous intervals with at least
/// [`NESTING_BITS`] to spare, and `Σ_{i<k} (l_i^2 - e_i - 2) > -l_k`.
pub fn h_admissible(h: f64, entries: &[u64]) -> Result<(), CantorError> {
    check_h(h)?;
    validate_sequence(entries).map_err(|v| CantorError::Inadmissible(v.to_string()))?;
    let mut sum: i128 = 0;
    for (i, &l) in entries.iter().enumerate() {
        let k = i + 1;
        if l > MAX_L as u64 {
            return Err(CantorError::Inadmissible(format!(
                "l_{k} = {l} exceeds {MAX_L}"
            )));
        }
        let li = l as i128;
        if i > 0 {
            let prev_e = width_exponent(h, entries[i - 1] as u32, k - 1) as i128;
            if li * li - prev_e - 1 < NESTING_BITS as i128 {
                return Err(CantorError::Inadmissible(format!(
                    "generation {k} cells do not nest in generation {} intervals",
                    k - 1
                )));
            }
            if sum <= -li {
                return Err(CantorError::Inadmissible(format!(
                    "mass product condition violated at k={k}"
                )));
            }
        }
        sum += li * li - width_exponent(h, l as u32, k) as i128 - 2;
    }
    Ok(())
}

/// Lexicographically smallest sequence that is admissible and
/// [`h_admissible`].
pub fn auto_sequence(h: f64, depth: usize, max_l: u32) -> Result<ScaleSequence, CantorError> {
    check_h(h)?;
    ScaleSequence::auto_with(depth, max_l, |s| h_admissible(h, s).is_ok())
        .map_err(|e| CantorError::Inadmissible(e.to_string()))
}

/// Sorted, pairwise disjoint closed intervals with endpoints `num * 2^-bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    generation: usize,
    bits: i64,
    intervals: Vec<(u128, u128)>,
}

impl IntervalSet {
    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Endpoints are `numerator * 2^-resolution_bits()`.
    pub fn resolution_bits(&self) -> i64 {
        self.bits
    }

    pub fn numerators(&self) -> &[(u128, u128)] {
        &self.intervals
    }

    pub fn interval(&self, i: usize) -> (Dy, Dy) {
        let (a, b) = self.intervals[i];
        (Dy::new(a, -self.bits), Dy::new(b, -self.bits))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dy, Dy)> + '_ {
        (0..self.len()).map(|i| self.interval(i))
    }

    /// Whether every interval of `self` lies inside some interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        let bits = self.bits.max(other.bits);
        let scale = |v: u128, b: i64| v << (bits - b);
        let mut j = 0;
        self.intervals.iter().all(|&(a, b)| {
            let (a, b) = (scale(a, self.bits), scale(b, self.bits));
            while j < other.len() && scale(other.intervals[j].1, other.bits) < a {
                j += 1;
            }
            j < other.len()
                && scale(other.intervals[j].0, other.bits) <= a
                && b <= scale(other.intervals[j].1, other.bits)
        })
    }

    pub fn total_length(&self) -> Dy {
        let sum: u128 = self.intervals.iter().map(|(a, b)| b - a).sum();
        Dy::new(sum, -self.bits)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .iter()
            .map(|(a, b)| [a.to_string(), b.to_string()])
            .collect();
        let mut st = s.serialize_struct("IntervalSet", 2)?;
        st.serialize_field("generation", &self.generation)?;
        st.serialize_field("intervals", &pairs)?;
        st.end()
    }
}

/// Generation `k` on its own: `2^{l_k^2}` intervals.
pub fn level_intervals(h: f64, seq: &ScaleSequence, k: usize) -> Result<IntervalSet, CantorError> {
    intersect_to_depth(h, seq, k, k)
}

/// Exact intersection of generations `k_start..=depth`.
pub fn intersect_to_depth(
    h: f64,
    seq: &ScaleSequence,
    depth: usize,
    k_start: usize,
) -> Result<IntervalSet, CantorError> {
    let lv = levels(h, seq, depth, k_start)?;
    let bits = lv.iter().map(|v| v.width_exp + 1).max().expect("non-empty");
    if bits > MAX_RESOLUTION_BITS {
        let k = lv
            .iter()
            .find(|v| v.width_exp + 1 > MAX_RESOLUTION_BITS)
            .expect("exists")
            .k;
        return Err(CantorError::ResolutionTooFine { k, bits });
    }
    let first = lv[0];
    if first.cell_exp > 24 {
        return Err(CantorError::TooManyIntervals {
            k: first.k,
            cap: MATERIALIZE_CAP,
        });
    }
    let shape = |v: &Level| -> (u128, u128, u128) {
        (
            1u128 << (bits - v.cell_exp),
            1u128 << (bits - v.width_exp),
            1u128 << (bits - v.width_exp - 1),
        )
    };
    let (c, w, hw) = shape(&first);
    let mut cur: Vec<(u128, u128)> = (1..=(1u128 << first.cell_exp))
        .map(|j| (j * c - w, j * c - hw))
        .collect();
    for v in &lv[1..] {
        let (c, w, hw) = shape(v);
        let cells = 1u128 << v.cell_exp;
        // Child j+1 meets [a, b] iff (j+1)c - w <= b and (j+1)c - w/2 >= a.
        let range = |a: u128, b: u128| ((a + hw).div_ceil(c).max(1), ((b + w) / c).min(cells));
        let mut total: u128 = 0;
        for &(a, b) in &cur {
            let (lo, hi) = range(a, b);
            total += hi.saturating_sub(lo) + u128::from(hi >= lo);
            if total > MATERIALIZE_CAP as u128 {
                return Err(CantorError::TooManyIntervals {
                    k: v.k,
                    cap: MATERIALIZE_CAP,
                });
            }
        }
        let mut next = Vec::with_capacity(total as usize);
        for &(a, b) in &cur {
            let (lo, hi) = range(a, b);
            for j in lo..=hi {
                if hi < lo {
                    break;
                }
                next.push(((j * c - w).max(a), (j * c - hw).min(b)));
            }
        }
        if next.is_empty() {
            return Err(CantorError::Empty { k: v.k });
        }
        cur = next;
    }
    let bits_out = bits;
    Ok(IntervalSet {
        generation: depth,
        bits: bits_out,
        intervals: cur,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringCount {
    pub generation: usize,
    /// `N_k`: number of intervals in the intersection up to generation `k`.
    pub count: BigUint,
    /// `log2 δ_k` with `δ_k = w_k / 2`.
    pub log2_delta: i64,
    /// `log2 N_k / (-log2 δ_k)`.
    pub slope: f64,
}

impl Serialize for CoveringCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CoveringCount", 4)?;
        st.serialize_field("generation", &self.generation)?;
        st.serialize_field("count", &self.count.to_string())?;
        st.serialize_field("log2_delta", &self.log2_delta)?;
        st.serialize_field("slope", &self.slope)?;
        st.end()
    }
}

fn log2_big(n: &BigUint) -> f64 {
    Dy::from(BigInt::from(n.clone()))
        .log2()
        .unwrap_or(f64::NEG_INFINITY)
}

/// Interval counts per generation. While each generation's cells tile the
/// previous intervals the counts are symbolic, `N_k = N_{k-1} ·
/// 2^{l_k^2 - e_{k-1} - 1}`; otherwise they come from exact materialization
/// when that is feasible.
pub fn covering_counts(
    h: f64,
    seq: &ScaleSequence,
    depth: usize,
    k_start: usize,
) -> Result<Vec<CoveringCount>, CantorError> {
    if depth == 0 {
        check_h(h)?;
        return Ok(Vec::new());
    }
    let lv = levels(h, seq, depth, k_start)?;
    let mut out = Vec::with_capacity(lv.len());
    let mut log2_count: Option<u64> = Some(lv[0].cell_exp as u64);
    for (i, v) in lv.iter().enumerate() {
        if i > 0 {
            let prev = lv[i - 1];
            let spare = v.cell_exp - prev.width_exp - 1;
            log2_count = match log2_count {
                Some(n) if spare >= 0 => Some(n + spare as u64),
                _ => None,
            };
        }
        let count = match log2_count {
            Some(n) => BigUint::one() << n,
            None => {
                let set = intersect_to_depth(h, seq, v.k, k_start).map_err(|e| match e {
                    CantorError::Empty { .. } => e,
                    _ => CantorError::Misaligned {
                        k: v.k,
                        prev: v.k - 1,
                    },
                })?;
                BigUint::from(set.len())
            }
        };
        let log2_delta = -(v.width_exp + 1);
        let slope = log2_big(&count) / -(log2_delta as f64);
        out.push(CoveringCount {
            generation: v.k,
            count,
            log2_delta,
            slope,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationMass {
    pub generation: usize,
    /// Number of surviving intervals, as a decimal string.
    pub count: String,
    /// `log2` of the count; every interval carries mass `2^-log2_count`.
    pub log2_count: u64,
    /// Children per parent interval, `log2`.
    pub log2_children: u64,
    pub mass: Dy,
}

/// Probability measure on `[0, 1]^d`: unit mass split uniformly among the
/// surviving intervals at each generation in the first coordinate, spread
/// uniformly over the finest intervals, times Lebesgue measure in the
/// remaining coordinates. With no generations it is Lebesgue measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassDistribution {
    dimension: usize,
    levels: Vec<Level>,
    generations: Vec<GenerationMass>,
}

fn check_dimension(d: usize) -> Result<(), CantorError> {
    if (1..=6).contains(&d) {
        Ok(())
    } else {
        Err(CantorError::BadDimension(d))
    }
}

/// Lebesgue measure on `[0, 1]^d`.
pub fn lebesgue(d: usize) -> Result<MassDistribution, CantorError> {
    check_dimension(d)?;
    Ok(MassDistribution {
        dimension: d,
        levels: Vec::new(),
        generations: Vec::new(),
    })
}

/// The uniform measure on the intersection of generations `k_start..=depth`,
/// crossed with `[0, 1]^{d-1}`. `depth = 0` gives Lebesgue measure.
pub fn build_measure(
    h: f64,
    seq: &ScaleSequence,
    depth: usize,
    k_start: usize,
    d: usize,
) -> Result<MassDistribution, CantorError> {
    check_dimension(d)?;
    if depth == 0 {
        check_h(h)?;
        return lebesgue(d);
    }
    let lv = levels(h, seq, depth, k_start)?;
    let mut generations = Vec::with_capacity(lv.len());
    let mut total: u64 = 0;
    for (i, v) in lv.iter().enumerate() {
        let window_exp = if i == 0 { 0 } else { lv[i - 1].width_exp + 1 };
        let children = v.cell_exp - window_exp;
        if children < 0 {
            return Err(CantorError::Misaligned {
                k: v.k,
                prev: v.k - 1,
            });
        }
        total += children as u64;
        generations.push(GenerationMass {
            generation: v.k,
            count: (BigUint::one() << total).to_string(),
            log2_count: total,
            log2_children: children as u64,
            mass: Dy::pow2(-(total as i64)),
        });
    }
    Ok(MassDistribution {
        dimension: d,
        levels: lv,
        generations,
    })
}

impl MassDistribution {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_lebesgue(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn generations(&self) -> &[GenerationMass] {
        &self.generations
    }

    /// `δ_K`, the length of the finest intervals; zero for Lebesgue measure.
    pub fn resolution(&self) -> Dy {
        self.levels
            .last()
            .map_or_else(Dy::zero, |v| Dy::pow2(-(v.width_exp + 1)))
    }

    /// Cell width of the first generation; one for Lebesgue measure.
    pub fn max_radius(&self) -> Dy {
        self.levels
            .first()
            .map_or_else(Dy::one, |v| Dy::pow2(-v.cell_exp))
    }

    /// Left endpoint of the finest interval reached by taking child
    /// `path[i] mod M_i` at generation `i`; missing entries pick child 0.
    pub fn left_endpoint(&self, path: &[u64]) -> Dy {
        let mut a = Dy::zero();
        for (i, v) in self.levels.iter().enumerate() {
            let m = BigInt::one() << self.generations[i].log2_children;
            let j = BigInt::from(path.get(i).copied().unwrap_or(0)) % m;
            a = a + Dy::from(j + 1).mul_pow2(-v.cell_exp) - Dy::pow2(-v.width_exp);
        }
        a
    }

    /// Whether `t` lies in the support of the first-coordinate measure.
    pub fn contains(&self, t: &Dy) -> bool {
        if *t < Dy::zero() || *t > Dy::one() {
            return false;
        }
        let mut a = Dy::zero();
        let mut window_exp = 0;
        for v in &self.levels {
            let hw = Dy::pow2(-(v.width_exp + 1));
            let m = BigInt::one() << (v.cell_exp - window_exp);
            let i = (t - &a + &hw).mul_pow2(v.cell_exp).ceil() - BigInt::one();
            if i < BigInt::zero() || i >= m {
                return false;
            }
            let s = &a + Dy::from(i + 1).mul_pow2(-v.cell_exp) - Dy::pow2(-v.width_exp);
            if *t < s {
                return false;
            }
            a = s;
            window_exp = v.width_exp + 1;
        }
        true
    }

    /// Exact mass of `[u, v]` under the first-coordinate measure.
    pub fn interval_mass(&self, u: &Dy, v: &Dy) -> Dy {
        if self.levels.is_empty() {
            let lo = u.clone().max(Dy::zero());
            let hi = v.clone().min(Dy::one());
            return if hi > lo { hi - lo } else { Dy::zero() };
        }
        self.mass_in(0, &Dy::zero(), 0, 0, u, v)
    }

    /// Mass of `[u, v]` inside the window `[a, a + 2^-window_exp]` of mass
    /// `2^-mass_exp` whose children belong to level `idx`.
    fn mass_in(&self, idx: usize, a: &Dy, window_exp: i64, mass_exp: u64, u: &Dy, v: &Dy) -> Dy {
        let end = a + Dy::pow2(-window_exp);
        let lo = u.clone().max(a.clone());
        let hi = v.clone().min(end.clone());
        if lo > hi {
            return Dy::zero();
        }
        if lo == *a && hi == end {
            return Dy::pow2(-(mass_exp as i64));
        }
        let lv = &self.levels[idx];
        let children = lv.cell_exp - window_exp;
        let child_mass_exp = mass_exp + children as u64;
        let w = Dy::pow2(-lv.width_exp);
        let hw = Dy::pow2(-(lv.width_exp + 1));
        let last = BigInt::one() << children;
        let i_lo =
            ((&lo - a + &hw).mul_pow2(lv.cell_exp).ceil() - BigInt::one()).max(BigInt::zero());
        let i_hi = ((&hi - a + &w).mul_pow2(lv.cell_exp).floor() - BigInt::one()).min(last - 1);
        if i_lo > i_hi {
            return Dy::zero();
        }
        let partial = |i: &BigInt| -> Dy {
            let s = a + Dy::from(i + 1).mul_pow2(-lv.cell_exp) - &w;
            if idx + 1 == self.levels.len() {
                let t = &s + &hw;
                let ov_lo = lo.clone().max(s);
                let ov_hi = hi.clone().min(t);
                if ov_hi <= ov_lo {
                    return Dy::zero();
                }
                (ov_hi - ov_lo).mul_pow2(lv.width_exp + 1 - child_mass_exp as i64)
            } else {
                self.mass_in(idx + 1, &s, lv.width_exp + 1, child_mass_exp, &lo, &hi)
            }
        };
        if i_lo == i_hi {
            return partial(&i_lo);
        }
        let full = Dy::from(&i_hi - &i_lo - 1).mul_pow2(-(child_mass_exp as i64));
        partial(&i_lo) + partial(&i_hi) + full
    }

    /// Mass of the sup-norm ball `∏ [x_i - r, x_i + r]`.
    pub fn ball_mass(&self, x: &[Dy], r: &Dy) -> Result<Dy, CantorError> {
        if x.len() != self.dimension {
            return Err(CantorError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut m = self.interval_mass(&(&x[0] - r), &(&x[0] + r));
        for xi in &x[1..] {
            let lo = (xi - r).max(Dy::zero());
            let hi = (xi + r).min(Dy::one());
            m = if hi > lo { m * (hi - lo) } else { Dy::zero() };
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDimension {
    pub slope: f64,
    pub log2_radii: Vec<f64>,
    pub log2_masses: Vec<f64>,
}

/// Least-squares slope through the origin of `log μ(B(x, r))` against
/// `log r`, i.e. a weighted mean of the ratios `log μ(B(x,r)) / log r`.
pub fn local_dimension(
    m: &MassDistribution,
    x: &[Dy],
    radii: &[Dy],
) -> Result<LocalDimension, CantorError> {
    if x.len() != m.dimension {
        return Err(CantorError::DimensionMismatch {
            expected: m.dimension,
            got: x.len(),
        });
    }
    if !m.contains(&x[0]) || x[1..].iter().any(|v| *v < Dy::zero() || *v > Dy::one()) {
        return Err(CantorError::NotInSupport);
    }
    if radii.len() < 2 {
        return Err(CantorError::TooFewRadii);
    }
    let (min, max) = (m.resolution(), m.max_radius());
    let mut log2_radii = Vec::with_capacity(radii.len());
    let mut log2_masses = Vec::with_capacity(radii.len());
    for r in radii {
        if *r < min || *r > max || !r.is_positive() {
            return Err(CantorError::RadiusOutOfRange {
                radius: r.clone(),
                min: min.clone(),
                max: max.clone(),
            });
        }
        let mass = m.ball_mass(x, r)?;
        log2_radii.push(r.log2().expect("positive"));
        log2_masses.push(mass.log2().map_err(|_| CantorError::NotInSupport)?);
    }
    let slope = fit_through_origin(&log2_radii, &log2_masses).ok_or(CantorError::TooFewRadii)?;
    Ok(LocalDimension {
        slope,
        log2_radii,
        log2_masses,
    })
}

/// `2^-e` for each `e` in `lo..=hi` taken with the given stride.
pub fn dyadic_radii(lo: i64, hi: i64, stride: usize) -> Vec<Dy> {
    (lo..=hi)
        .step_by(stride.max(1))
        .map(|e| Dy::pow2(-e))
        .collect()
}

impl CoveringCount {
    pub fn log2_count(&self) -> f64 {
        log2_big(&self.count)
    }

    pub fn count_u64(&self) -> Option<u64> {
        self.count.to_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u64]) -> ScaleSequence {
        ScaleSequence::new(v).unwrap()
    }

    #[test]
    fn width_exponents() {
        assert_eq!(width_exponent(1.5, 3, 1), 24);
        assert_eq!(width_exponent(1.0, 3, 1), 12);
        assert_eq!(width_exponent(1.0, 6, 2), 84);
        assert_eq!(width_exponent(1.1, 3, 1), 120);
        assert_eq!(width_exponent(1.75, 3, 1), 16);
    }

    #[test]
    fn generation_one() {
        let s = level_intervals(1.5, &seq(&[3]), 1).unwrap();
        assert_eq!(s.len(), 512);
        let (a, b) = s.interval(0);
        assert_eq!(b.clone() - a.clone(), Dy::pow2(-25));
        assert_eq!(a, Dy::pow2(-9) - Dy::pow2(-24));
        let (_, last) = s.interval(511);
        assert_eq!(last, Dy::one() - Dy::pow2(-25));
        let s = level_intervals(1.0, &seq(&[3]), 1).unwrap();
        assert_eq!(s.total_length(), Dy::pow2(-4));
    }

    #[test]
    fn bad_inputs() {
        let s = seq(&[3, 6]);
        assert_eq!(level_intervals(2.0, &s, 1), Err(CantorError::InvalidH(2.0)));
        assert!(matches!(
            level_intervals(1.5, &s, 3),
            Err(CantorError::InvalidGeneration { .. })
        ));
        assert!(matches!(
            intersect_to_depth(1.5, &s, 1, 2),
            Err(CantorError::InvalidGeneration { .. })
        ));
        assert_eq!(covering_counts(1.5, &s, 0, 1).unwrap(), vec![]);
    }

    #[test]
    fn two_generations_nest_and_match_counts() {
        let s = seq(&[3, 6]);
        let f2 = intersect_to_depth(1.5, &s, 2, 1).unwrap();
        let f1 = level_intervals(1.5, &s, 1).unwrap();
        assert!(f2.is_subset_of(&f1));
        assert!(!f1.is_subset_of(&f2));
        let counts = covering_counts(1.5, &s, 2, 1).unwrap();
        assert_eq!(counts[1].count_u64(), Some(f2.len() as u64));
        assert_eq!(f2.len(), 1 << 20);
        let same = intersect_to_depth(1.5, &s, 1, 1).unwrap();
        assert_eq!(same, f1);
    }

    #[test]
    fn misaligned_scheme_is_reported() {
        // Generation-2 cells (2^-36) are wider than the h = 1.1 generation-1
        // intervals (2^-121).
        let s = seq(&[3, 6]);
        assert!(matches!(
            intersect_to_depth(1.1, &s, 2, 1),
            Err(CantorError::ResolutionTooFine { k: 2, .. })
        ));
        assert_eq!(
            covering_counts(1.1, &s, 2, 1),
            Err(CantorError::Misaligned { k: 2, prev: 1 })
        );
        assert!(build_measure(1.1, &s, 2, 1, 1).is_err());
        assert!(h_admissible(1.1, &[3, 6]).is_err());
    }

    #[test]
    fn admissible_slopes_increase() {
        for h in [1.25, 1.5, 1.75] {
            let s = auto_sequence(h, 2, 64).unwrap();
            let c = covering_counts(h, &s, 2, 1).unwrap();
            assert!(c[1].slope > c[0].slope, "h={h}");
            assert!(c[1].slope < h - 1.0);
        }
        // For h = 1 the slopes fall towards 0 instead.
        let c = covering_counts(1.0, &seq(&[3, 6]), 2, 1).unwrap();
        assert!(c[1].slope < c[0].slope);
    }

    #[test]
    fn auto_sequences() {
        assert_eq!(auto_sequence(1.5, 2, 64).unwrap().entries(), &[3, 18]);
        assert_eq!(auto_sequence(1.75, 2, 64).unwrap().entries(), &[3, 10]);
        assert_eq!(auto_sequence(1.25, 2, 64).unwrap().entries(), &[3, 42]);
        assert_eq!(auto_sequence(1.0, 2, 64).unwrap().entries(), &[3, 6]);
    }

    #[test]
    fn measure_masses() {
        let m = build_measure(1.5, &seq(&[3]), 1, 1, 1).unwrap();
        assert_eq!(m.generations()[0].mass, Dy::pow2(-9));
        assert_eq!(m.interval_mass(&Dy::zero(), &Dy::one()), Dy::one());
        let (a, b) = level_intervals(1.5, &seq(&[3]), 1).unwrap().interval(7);
        assert_eq!(m.interval_mass(&a, &b), Dy::pow2(-9));
        let mid = (&a + &b).mul_pow2(-1);
        assert_eq!(m.interval_mass(&a, &mid), Dy::pow2(-10));
        assert!(m.contains(&a) && m.contains(&b) && !m.contains(&(&b + Dy::pow2(-40))));
        assert_eq!(m.left_endpoint(&[7]), a);
    }

    #[test]
    fn deep_measure_is_consistent_with_enumeration() {
        let s = seq(&[3, 6]);
        let m = build_measure(1.5, &s, 2, 1, 1).unwrap();
        let g = m.generations();
        assert_eq!(g[1].log2_children, 11);
        assert_eq!(g[1].mass.clone() * Dy::from(BigInt::one() << 11), g[0].mass);
        let f2 = intersect_to_depth(1.5, &s, 2, 1).unwrap();
        // Mass of a window equals the number of enumerated intervals inside it times the unit mass.
        let u = Dy::new(3, -9);
        let v = Dy::new(37, -8);
        let inside = f2.iter().filter(|(a, b)| *a >= u && *b <= v).count();
        let straddle = f2
            .iter()
            .filter(|(a, b)| *a < u && *b > u || *a < v && *b > v)
            .count();
        assert_eq!(straddle, 0);
        assert_eq!(
            m.interval_mass(&u, &v),
            Dy::from(inside as i64) * g[1].mass.clone()
        );
    }

    #[test]
    fn local_dimensions() {
        let m = build_measure(1.5, &seq(&[3]), 1, 1, 1).unwrap();
        let x = m.left_endpoint(&[100]);
        let radii = dyadic_radii(10, 24, 1);
        let ld = local_dimension(&m, &[x.clone()], &radii).unwrap();
        assert!(ld.slope > 0.3 && ld.slope < 0.6, "{}", ld.slope);
        let m2 = build_measure(1.5, &seq(&[3]), 1, 1, 2).unwrap();
        let ld2 = local_dimension(&m2, &[x.clone(), Dy::new(1, -1)], &radii).unwrap();
        assert!(
            (ld2.slope - 1.0 - ld.slope).abs() < 0.1,
            "{} {}",
            ld2.slope,
            ld.slope
        );
        let leb = lebesgue(1).unwrap();
        let l = local_dimension(&leb, &[Dy::new(1, -2)], &dyadic_radii(3, 30, 3)).unwrap();
        assert!((l.slope - 1.0).abs() < 0.05);
        assert!(matches!(
            local_dimension(&m, &[x.clone()], &dyadic_radii(20, 26, 1)),
            Err(CantorError::RadiusOutOfRange { .. })
        ));
        assert_eq!(
            local_dimension(&m, &[x + Dy::pow2(-12)], &radii).unwrap_err(),
            CantorError::NotInSupport
        );
    }
}
