//! Admissible scale sequences `l_1 < l_2 < … < l_K`.
//!
//! All four growth conditions are checked in exact integer arithmetic. The
//! powers of two in them are compared through their exponents, so nothing is
//! ever evaluated at size `2^{l²}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::staircase::MAX_L;
use super::ConstructionError;

/// One of the admissibility conditions, evaluated at a generation `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `l_k > 2^k`.
    Growth,
    /// `(l_k² + l_k)·k + 1 < l_k⁴`.
    Quartic,
    /// `l_{k-1} < l_k`.
    Increasing,
    /// `2^{-(l_{k-1}² + l_{k-1})(k-1) - 1} > 100·2^{-l_k²}`.
    Separation,
    /// `D_1 ⋯ D_{k-1} > 2^{-l_k}` with `D_i = 2^{l_i²}·2^{-(l_i² + l_i)i - 2}`.
    Product,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Growth => "l_k > 2^k",
            Condition::Quartic => "((l_k)^2 + l_k)k + 1 < (l_k)^4",
            Condition::Increasing => "l_{k-1} < l_k",
            Condition::Separation => "2^{-((l_{k-1})^2+l_{k-1})(k-1)-1} > 100*2^{-(l_k)^2}",
            Condition::Product => "D_1...D_{k-1} > 2^{-l_k}",
        })
    }
}

/// First failed condition, with its 1-based generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub condition: Condition,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at k={}", self.condition, self.k)
    }
}

/// `log2(D_k) = l² - (l² + l)k - 2`.
pub fn log2_d(l: u64, k: u64) -> i128 {
    let l = l as i128;
    l * l - (l * l + l) * k as i128 - 2
}

/// Smallest `e` with `100 < 2^e`: the separation condition asks for a gap of
/// at least this many binary orders of magnitude.
pub const SEPARATION_BITS: i128 = 7;

/// Checks the conditions in order for `k = 1, 2, …` and reports the first
/// failure. The empty sequence is admissible.
pub fn validate_sequence(entries: &[u64]) -> Result<(), Violation> {
    let mut log2_prod: i128 = 0;
    for (i, &l) in entries.iter().enumerate() {
        let k = i + 1;
        let fail = |condition| Err(Violation { k, condition });
        let li = l as i128;
        // l_k > 2^k; for k >= 64 no u64 entry can satisfy this.
        if k >= 127 || li <= 1i128 << k {
            return fail(Condition::Growth);
        }
        if (li * li + li) * k as i128 + 1 >= li.pow(4) {
            return fail(Condition::Quartic);
        }
        if k >= 2 {
            let prev = entries[i - 1] as i128;
            if prev >= li {
                return fail(Condition::Increasing);
            }
            let gap = li * li - (prev * prev + prev) * (k as i128 - 1) - 1;
            if gap < SEPARATION_BITS {
                return fail(Condition::Separation);
            }
            if log2_prod <= -li {
                return fail(Condition::Product);
            }
        }
        log2_prod += log2_d(l, k as u64);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct ScaleSequence {
    entries: Vec<u32>,
}

impl ScaleSequence {
    pub fn new(entries: &[u64]) -> Result<Self, ConstructionError> {
        validate_sequence(entries).map_err(ConstructionError::Inadmissible)?;
        if let Some(&l) = entries.iter().find(|&&l| l > MAX_L as u64) {
            return Err(ConstructionError::LevelTooLarge(
                l.min(u32::MAX as u64) as u32
            ));
        }
        Ok(Self {
            entries: entries.iter().map(|&l| l as u32).collect(),
        })
    }

    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `l_k` for 1-based `k`.
    pub fn l(&self, k: usize) -> Option<u32> {
        k.checked_sub(1).and_then(|i| self.entries.get(i).copied())
    }

    /// Lexicographically smallest admissible sequence of the given depth with
    /// entries at most `max_l`.
    pub fn auto(depth: usize, max_l: u32) -> Result<Self, ConstructionError> {
        Self::auto_with(depth, max_l, |_| true)
    }

    /// As [`ScaleSequence::auto`], additionally requiring `extra` on every
    /// prefix. `extra` must only constrain the last entry from below, which
    /// keeps the greedy search lexicographically minimal.
    pub fn auto_with(
        depth: usize,
        max_l: u32,
        extra: impl Fn(&[u64]) -> bool,
    ) -> Result<Self, ConstructionError> {
        let max_l = max_l.min(MAX_L) as u64;
        let mut seq: Vec<u64> = Vec::with_capacity(depth);
        for k in 1..=depth {
            let start = seq.last().map_or(2, |&l| l + 1);
            let found = (start..=max_l).find(|&l| {
                seq.push(l);
                let ok = validate_sequence(&seq).is_ok() && extra(&seq);
                seq.pop();
                ok
            });
            match found {
                Some(l) => seq.push(l),
                None => {
                    return Err(ConstructionError::NoAdmissibleSequence {
                        k,
                        max_l: max_l as u32,
                    })
                }
            }
        }
        Self::new(&seq)
    }
}

impl TryFrom<Vec<u64>> for ScaleSequence {
    type Error = ConstructionError;
    fn try_from(v: Vec<u64>) -> Result<Self, Self::Error> {
        Self::new(&v)
    }
}

impl From<ScaleSequence> for Vec<u64> {
    fn from(s: ScaleSequence) -> Self {
        s.entries.into_iter().map(u64::from).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(validate_sequence(&[3]), Ok(()));
        assert_eq!(validate_sequence(&[]), Ok(()));
        let v = validate_sequence(&[3, 4]).unwrap_err();
        assert_eq!(
            v,
            Violation {
                k: 2,
                condition: Condition::Growth
            }
        );
        assert_eq!(v.to_string(), "l_k > 2^k violated at k=2");
        assert_eq!(
            validate_sequence(&[2]).unwrap_err().condition,
            Condition::Growth
        );
    }

    #[test]
    fn other_conditions_fire() {
        assert_eq!(
            validate_sequence(&[9, 8]).unwrap_err().condition,
            Condition::Increasing
        );
        // log2 D_1 = 9 - 12 - 2 = -5, which is not > -5.
        assert_eq!(
            validate_sequence(&[3, 5]).unwrap_err().condition,
            Condition::Product
        );
        // 65^2 - (64^2 + 64)*2 - 1 is negative.
        assert_eq!(
            validate_sequence(&[3, 64, 65]).unwrap_err().condition,
            Condition::Separation
        );
    }

    #[test]
    fn auto_search() {
        assert_eq!(ScaleSequence::auto(1, 64).unwrap().entries(), &[3]);
        assert_eq!(ScaleSequence::auto(2, 64).unwrap().entries(), &[3, 6]);
        assert_eq!(ScaleSequence::auto(3, 64).unwrap().entries(), &[3, 6, 56]);
        assert!(matches!(
            ScaleSequence::auto(4, 64),
            Err(ConstructionError::NoAdmissibleSequence { k: 4, .. })
        ));
        assert!(ScaleSequence::auto(0, 64).unwrap().is_empty());
    }

    #[test]
    fn serde_validates() {
        let s: ScaleSequence = serde_json::from_str("[3,6]").unwrap();
        assert_eq!(s.l(2), Some(6));
        assert!(serde_json::from_str::<ScaleSequence>("[3,4]").is_err());
    }

    proptest! {
        #[test]
        fn prefixes_of_admissible_sequences_are_admissible(v in proptest::collection::vec(2u64..80, 0..4)) {
            if validate_sequence(&v).is_ok() {
                for n in 0..v.len() {
                    prop_assert!(validate_sequence(&v[..n]).is_ok());
                }
            }
        }
    }
}
