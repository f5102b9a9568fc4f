//! Singularity spectra: closed-form reference spectra and coarse-grained
//! empirical spectra of sampled functions.
//!
//! ```
//! use convex_multifractal::spectrum::{theoretical_spectrum, SpectrumKind, SpectrumValue};
//!
//! let v = theoretical_spectrum(SpectrumKind::ConvexTypical, 2, 1.5).unwrap();
//! assert_eq!(v, SpectrumValue::Finite(1.5));
//! let v = theoretical_spectrum(SpectrumKind::ConvexTypical, 3, 0.5).unwrap();
//! assert_eq!(v, SpectrumValue::NegInfinity);
//! ```

mod empirical;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use empirical::{empirical_spectrum, SpectrumConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("unknown spectrum kind {0:?}")]
    UnknownKind(String),
    #[error("h must be finite and nonnegative, got {0}")]
    InvalidH(f64),
    #[error("dimension {got} is not supported here (expected {expected})")]
    BadDimension { expected: String, got: usize },
    #[error("grid 2^-{grid_exp} resolves {available} classification scales, at least {required} are needed")]
    GridTooCoarse {
        grid_exp: u32,
        available: usize,
        required: usize,
    },
    #[error("{samples} samples exceed the limit of {limit}")]
    TooManySamples { samples: u128, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("function returned a non-finite value at {0:?}")]
    NonFinite(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// Upper bound valid for every convex function on `[0,1]^d`.
    ConvexUpper,
    /// Spectrum of typical convex functions.
    ConvexTypical,
    /// Typical monotone functions on `[0,1]`.
    Monotone1d,
    /// Upper bound on `dim E^≤_f(h)` for monotone functions on `[0,1]`.
    Monotone1dUpper,
    /// Typical functions monotone increasing in each variable.
    Misv,
    /// Typical Borel measures on `[0,1]^d`.
    MeasureTypical,
}

impl SpectrumKind {
    pub const ALL: [SpectrumKind; 6] = [
        SpectrumKind::ConvexUpper,
        SpectrumKind::ConvexTypical,
        SpectrumKind::Monotone1d,
        SpectrumKind::Monotone1dUpper,
        SpectrumKind::Misv,
        SpectrumKind::MeasureTypical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::ConvexUpper => "convex-upper",
            SpectrumKind::ConvexTypical => "convex-typical",
            SpectrumKind::Monotone1d => "monotone-1d",
            SpectrumKind::Monotone1dUpper => "monotone-1d-upper",
            SpectrumKind::Misv => "misv",
            SpectrumKind::MeasureTypical => "measure-typical",
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpectrumKind {
    type Err = SpectrumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SpectrumError::UnknownKind(s.to_string()))
    }
}

/// A dimension value or the `-∞` assigned to empty sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumValue {
    Finite(f64),
    NegInfinity,
}

impl SpectrumValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            SpectrumValue::Finite(v) => Some(v),
            SpectrumValue::NegInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, SpectrumValue::Finite(_))
    }

    /// `-∞` compares below every finite value.
    pub fn le(self, other: SpectrumValue) -> bool {
        match (self, other) {
            (SpectrumValue::NegInfinity, _) => true,
            (SpectrumValue::Finite(_), SpectrumValue::NegInfinity) => false,
            (SpectrumValue::Finite(a), SpectrumValue::Finite(b)) => a <= b,
        }
    }
}

impl fmt::Display for SpectrumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumValue::Finite(v) => write!(f, "{v}"),
            SpectrumValue::NegInfinity => f.write_str("-inf"),
        }
    }
}

impl FromStr for SpectrumValue {
    type Err = std::num::ParseFloatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-inf" {
            Ok(SpectrumValue::NegInfinity)
        } else {
            s.parse().map(SpectrumValue::Finite)
        }
    }
}

impl Serialize for SpectrumValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SpectrumValue::Finite(v) => s.serialize_f64(*v),
            SpectrumValue::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SpectrumValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SpectrumValue::Finite(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Closed-form spectra, piecewise in `h`.
pub fn theoretical_spectrum(
    kind: SpectrumKind,
    d: usize,
    h: f64,
) -> Result<SpectrumValue, SpectrumError> {
    use SpectrumValue::{Finite, NegInfinity};
    if !(h >= 0.0 && h.is_finite()) {
        return Err(SpectrumError::InvalidH(h));
    }
    let one_d = matches!(
        kind,
        SpectrumKind::Monotone1d | SpectrumKind::Monotone1dUpper
    );
    if d == 0 || (one_d && d != 1) {
        let expected = if one_d { "1" } else { "at least 1" };
        return Err(SpectrumError::BadDimension {
            expected: expected.into(),
            got: d,
        });
    }
    let d = d as f64;
    Ok(match kind {
        SpectrumKind::ConvexUpper => {
            if h < 1.0 {
                Finite(d - 1.0)
            } else if h <= 2.0 {
                Finite(d + h - 2.0)
            } else {
                Finite(d)
            }
        }
        SpectrumKind::ConvexTypical => {
            if h == 0.0 {
                Finite(d - 1.0)
            } else if (1.0..=2.0).contains(&h) {
                Finite(d + h - 2.0)
            } else {
                NegInfinity
            }
        }
        SpectrumKind::Monotone1d => {
            if h <= 1.0 {
                Finite(h)
            } else {
                NegInfinity
            }
        }
        // Beyond h = 1 only the trivial bound dim ≤ 1 remains.
        SpectrumKind::Monotone1dUpper => Finite(h.min(1.0)),
        SpectrumKind::Misv => {
            if h <= 1.0 {
                Finite(d - 1.0 + h)
            } else {
                NegInfinity
            }
        }
        SpectrumKind::MeasureTypical => {
            if h <= d {
                Finite(h)
            } else {
                NegInfinity
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Empirical,
    Theoretical,
}

/// Per-bin counts of classified cells, one row per scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCounts {
    pub scales: Vec<u32>,
    /// `counts[s][b]`: cells at `scales[s]` with exponent in bin `b`.
    pub counts: Vec<Vec<u64>>,
    /// Cells whose exponent reaches the cap or that look smooth.
    pub cap_band: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub kind: CurveKind,
    pub dimension: usize,
    pub h: Vec<f64>,
    pub values: Vec<SpectrumValue>,
    pub bin_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_exp: Option<u32>,
    /// Interior cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior: Option<CellCounts>,
    /// Cells touching the boundary of the cube, kept apart from the interior.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<CellCounts>,
    /// Spectrum of the boundary cells alone.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub boundary_values: Vec<SpectrumValue>,
}

impl SpectrumCurve {
    /// A closed-form curve sampled at the given exponents.
    pub fn theoretical(kind: SpectrumKind, d: usize, h: &[f64]) -> Result<Self, SpectrumError> {
        let values = h
            .iter()
            .map(|&v| theoretical_spectrum(kind, d, v))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            kind: CurveKind::Theoretical,
            dimension: d,
            h: h.to_vec(),
            values,
            bin_width: 0.0,
            grid_exp: None,
            interior: None,
            boundary: None,
            boundary_values: Vec::new(),
        })
    }

    pub fn scales(&self) -> &[u32] {
        self.interior.as_ref().map_or(&[], |c| &c.scales)
    }

    /// Value at the bin whose center is nearest to `h`.
    pub fn value_at(&self, h: f64) -> Option<SpectrumValue> {
        let i = self
            .h
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - h).abs().total_cmp(&(b.1 - h).abs()))?
            .0;
        Some(self.values[i])
    }

    /// Bins with a finite value, as `(h, value)`.
    pub fn populated(&self) -> Vec<(f64, f64)> {
        self.h
            .iter()
            .zip(&self.values)
            .filter_map(|(&h, v)| v.finite().map(|v| (h, v)))
            .collect()
    }

    /// CSV with columns `h, value, kind, bin_width, scale_min, scale_max`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let (lo, hi) = match self.scales() {
            [] => (String::new(), String::new()),
            s => (s[0].to_string(), s[s.len() - 1].to_string()),
        };
        let kind = match self.kind {
            CurveKind::Empirical => "empirical",
            CurveKind::Theoretical => "theoretical",
        };
        w.write_record(["h", "value", "kind", "bin_width", "scale_min", "scale_max"])
            .expect("in-memory write");
        for (h, v) in self.h.iter().zip(&self.values) {
            w.write_record([
                h.to_string(),
                v.to_string(),
                kind.to_string(),
                self.bin_width.to_string(),
                lo.clone(),
                hi.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub h: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum BoundCheck {
    Pass { max_excess: f64 },
    Violations { violations: Vec<BoundViolation> },
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        matches!(self, BoundCheck::Pass { .. })
    }
}

/// Compares every finite value of `c` with the convex upper bound in
/// dimension `d` plus `tolerance`.
pub fn check_upper_bound(
    c: &SpectrumCurve,
    d: usize,
    tolerance: f64,
) -> Result<BoundCheck, SpectrumError> {
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for (&h, v) in c.h.iter().zip(&c.values) {
        let Some(value) = v.finite() else { continue };
        let bound = theoretical_spectrum(SpectrumKind::ConvexUpper, d, h)?
            .finite()
            .expect("the upper bound is finite");
        max_excess = max_excess.max(value - bound);
        if value > bound + tolerance {
            violations.push(BoundViolation { h, value, bound });
        }
    }
    Ok(if violations.is_empty() {
        BoundCheck::Pass { max_excess }
    } else {
        BoundCheck::Violations { violations }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SpectrumKind::*;
    use SpectrumValue::{Finite, NegInfinity};

    #[test]
    fn table() {
        let cases = [
            (ConvexTypical, 2, 1.5, Finite(1.5)),
            (ConvexTypical, 3, 0.5, NegInfinity),
            (ConvexUpper, 2, 3.0, Finite(2.0)),
            (Misv, 2, 0.5, Finite(1.5)),
            (MeasureTypical, 2, 1.0, Finite(1.0)),
            (ConvexTypical, 2, 0.0, Finite(1.0)),
            (ConvexUpper, 1, 0.5, Finite(0.0)),
            (Monotone1d, 1, 1.5, NegInfinity),
            (Monotone1dUpper, 1, 0.25, Finite(0.25)),
        ];
        for (k, d, h, v) in cases {
            assert_eq!(theoretical_spectrum(k, d, h).unwrap(), v, "{k} {d} {h}");
        }
        assert!(theoretical_spectrum(Monotone1d, 2, 0.5).is_err());
        assert!(theoretical_spectrum(ConvexUpper, 2, -0.1).is_err());
        assert!("convex-lower".parse::<SpectrumKind>().is_err());
        assert_eq!("misv".parse::<SpectrumKind>().unwrap(), Misv);
    }

    #[test]
    fn typical_below_upper() {
        for d in 1..=3 {
            for i in 0..=400 {
                let h = i as f64 / 100.0;
                let t = theoretical_spectrum(ConvexTypical, d, h).unwrap();
                let u = theoretical_spectrum(ConvexUpper, d, h).unwrap();
                assert!(t.le(u));
            }
        }
    }

    #[test]
    fn neg_infinity_serializes_as_marker() {
        assert_eq!(serde_json::to_string(&NegInfinity).unwrap(), "\"-inf\"");
        let back: SpectrumValue = serde_json::from_str("\"-inf\"").unwrap();
        assert_eq!(back, NegInfinity);
        let c = SpectrumCurve::theoretical(ConvexTypical, 1, &[0.5, 1.5]).unwrap();
        assert!(c.to_csv().contains("0.5,-inf,theoretical"));
    }

    #[test]
    fn injected_violation() {
        let mut c = SpectrumCurve::theoretical(ConvexUpper, 2, &[0.5, 1.5, 2.5]).unwrap();
        assert!(check_upper_bound(&c, 2, 0.0).unwrap().passed());
        c.values[1] = Finite(2.0);
        match check_upper_bound(&c, 2, 0.15).unwrap() {
            BoundCheck::Violations { violations } => {
                assert_eq!(violations.len(), 1);
                assert_eq!(violations[0].h, 1.5);
            }
            other => panic!("{other:?}"),
        }
    }
}
