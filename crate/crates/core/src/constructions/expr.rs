use serde::{Deserialize, Serialize};

use super::mollify::mollify_eval;
use super::sequence::validate_sequence;
use super::staircase::{phi_derivative_f64, phi_f64, StaircaseParams};
use super::ConstructionError;
use crate::dyadic::DyadicRational;
use crate::FunctionNd;

pub const MAX_DIMENSION: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    Float,
}

/// `c + Σ b_i x_i + Σ_{i,j} Q_ij x_i x_j` with symmetric positive
/// semidefinite `Q`. Empty `linear` / `quadratic` mean zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadraticBase {
    #[serde(default)]
    pub constant: DyadicRational,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear: Vec<DyadicRational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quadratic: Vec<Vec<DyadicRational>>,
}

impl QuadraticBase {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `coef · (x_1² + … + x_d²)`.
    pub fn sum_of_squares(d: usize, coef: DyadicRational) -> Self {
        let quadratic = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            coef.clone()
                        } else {
                            DyadicRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            constant: DyadicRational::zero(),
            linear: Vec::new(),
            quadratic,
        }
    }

    pub fn affine(constant: DyadicRational, linear: Vec<DyadicRational>) -> Self {
        Self {
            constant,
            linear,
            quadratic: Vec::new(),
        }
    }

    fn validate(&self, d: usize) -> Result<(), ConstructionError> {
        if !self.linear.is_empty() && self.linear.len() != d {
            return Err(ConstructionError::DimensionMismatch {
                expected: d,
                got: self.linear.len(),
            });
        }
        if self.quadratic.is_empty() {
            return Ok(());
        }
        if self.quadratic.len() != d || self.quadratic.iter().any(|r| r.len() != d) {
            return Err(ConstructionError::NotConvex(format!(
                "quadratic part must be {d}x{d}"
            )));
        }
        for i in 0..d {
            for j in 0..i {
                if self.quadratic[i][j] != self.quadratic[j][i] {
                    return Err(ConstructionError::NotConvex(format!(
                        "not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        // Positive semidefinite iff every principal minor is nonnegative.
        for mask in 1u32..(1 << d) {
            let idx: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
            let minor = determinant(&idx, &idx, &self.quadratic);
            if minor.is_negative() {
                return Err(ConstructionError::NotConvex(format!(
                    "principal minor on indices {idx:?} is negative"
                )));
            }
        }
        Ok(())
    }

    fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut v = self.constant.to_f64_lossy();
        for (b, xi) in self.linear.iter().zip(x) {
            v += b.to_f64_lossy() * xi;
        }
        for (i, row) in self.quadratic.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                if !q.is_zero() {
                    v += q.to_f64_lossy() * x[i] * x[j];
                }
            }
        }
        v
    }

    fn eval_exact(&self, x: &[DyadicRational]) -> DyadicRational {
        let mut v = self.constant.clone();
        for (b, xi) in self.linear.iter().zip(x) {
            v = v + b * xi;
        }
        for (i, row) in self.quadratic.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                if !q.is_zero() {
                    v = v + q * &(&x[i] * &x[j]);
                }
            }
        }
        v
    }

    fn partial_f64(&self, x: &[f64], axis: usize) -> f64 {
        let mut v = self.linear.get(axis).map_or(0.0, |b| b.to_f64_lossy());
        if let Some(row) = self.quadratic.get(axis) {
            for (j, q) in row.iter().enumerate() {
                v += 2.0 * q.to_f64_lossy() * x[j];
            }
        }
        v
    }
}

/// Determinant of the submatrix with the given rows and columns, by cofactor
/// expansion along the first row.
fn determinant(rows: &[usize], cols: &[usize], m: &[Vec<DyadicRational>]) -> DyadicRational {
    match rows.len() {
        0 => DyadicRational::one(),
        1 => m[rows[0]][cols[0]].clone(),
        _ => {
            let mut acc = DyadicRational::zero();
            for (k, &c) in cols.iter().enumerate() {
                let entry = &m[rows[0]][c];
                if entry.is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = entry * determinant(&rows[1..], &sub_cols, m);
                acc = if k % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// A convex perturbation added to the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Term {
    /// `f̄_l(x_axis)`.
    Fbar {
        l: u32,
        #[serde(default)]
        axis: usize,
    },
    /// `φ_l(x_axis)`.
    Phi {
        l: u32,
        #[serde(default)]
        axis: usize,
    },
    /// Convolution of `child` with a bump of radius `λ/2`, rescaled to stay
    /// convex on the whole cube.
    Mollified {
        lambda: DyadicRational,
        #[serde(default = "default_nodes_exp")]
        nodes_exp: u32,
        child: Box<ConvexFunctionExpr>,
    },
}

fn default_nodes_exp() -> u32 {
    super::mollify::DEFAULT_NODES_EXP
}

impl Term {
    pub fn fbar(l: u32) -> Self {
        Term::Fbar { l, axis: 0 }
    }

    pub fn phi(l: u32) -> Self {
        Term::Phi { l, axis: 0 }
    }

    fn is_exact(&self) -> bool {
        matches!(self, Term::Fbar { .. })
    }

    fn validate(&self, d: usize) -> Result<(), ConstructionError> {
        match self {
            Term::Fbar { l, axis } | Term::Phi { l, axis } => {
                StaircaseParams::new(*l)?;
                if *axis >= d {
                    return Err(ConstructionError::AxisOutOfRange {
                        axis: *axis,
                        dimension: d,
                    });
                }
            }
            Term::Mollified {
                lambda,
                nodes_exp,
                child,
            } => {
                let lf = lambda.to_f64_lossy();
                if !(lf > 0.0 && lf < 0.5) {
                    return Err(ConstructionError::InvalidLambda(lf));
                }
                super::mollify::MollifierKernel::check_size(d, *nodes_exp)?;
                if child.dimension != d {
                    return Err(ConstructionError::DimensionMismatch {
                        expected: d,
                        got: child.dimension,
                    });
                }
            }
        }
        Ok(())
    }

    fn eval_f64(&self, x: &[f64]) -> Result<f64, ConstructionError> {
        Ok(match self {
            Term::Fbar { l, axis } => StaircaseParams::new(*l)?.fbar_f64(x[*axis]),
            Term::Phi { l, axis } => phi_f64(*l, x[*axis]),
            Term::Mollified {
                lambda,
                nodes_exp,
                child,
            } => mollify_eval(child.as_ref(), lambda.to_f64_lossy(), *nodes_exp, x)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExpr")]
pub struct ConvexFunctionExpr {
    dimension: usize,
    mode: EvalMode,
    base: QuadraticBase,
    #[serde(default)]
    terms: Vec<Term>,
}

#[derive(Deserialize)]
struct RawExpr {
    dimension: usize,
    mode: Option<EvalMode>,
    #[serde(default)]
    base: QuadraticBase,
    #[serde(default)]
    terms: Vec<Term>,
}

impl TryFrom<RawExpr> for ConvexFunctionExpr {
    type Error = ConstructionError;
    fn try_from(raw: RawExpr) -> Result<Self, Self::Error> {
        let e = Self::new(raw.dimension, raw.base, raw.terms)?;
        match raw.mode {
            Some(mode) => e.with_mode(mode),
            None => Ok(e),
        }
    }
}

impl ConvexFunctionExpr {
    /// Validates every summand. The mode is exact when all summands allow it.
    pub fn new(
        dimension: usize,
        base: QuadraticBase,
        terms: Vec<Term>,
    ) -> Result<Self, ConstructionError> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(ConstructionError::BadDimension(dimension));
        }
        base.validate(dimension)?;
        for t in &terms {
            t.validate(dimension)?;
        }
        let mode = if terms.iter().all(Term::is_exact) {
            EvalMode::Exact
        } else {
            EvalMode::Float
        };
        Ok(Self {
            dimension,
            mode,
            base,
            terms,
        })
    }

    /// Skips validation, so the result may be non-convex. Meant for negative
    /// controls in checks.
    pub fn new_unchecked(dimension: usize, base: QuadraticBase, terms: Vec<Term>) -> Self {
        let mode = if terms.iter().all(Term::is_exact) {
            EvalMode::Exact
        } else {
            EvalMode::Float
        };
        Self {
            dimension,
            mode,
            base,
            terms,
        }
    }

    pub fn zero(dimension: usize) -> Result<Self, ConstructionError> {
        Self::new(dimension, QuadraticBase::zero(), Vec::new())
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Result<Self, ConstructionError> {
        if mode == EvalMode::Exact && !self.terms.iter().all(Term::is_exact) {
            return Err(ConstructionError::ExactUnavailable(
                "spike and mollified terms are evaluated in floating point".into(),
            ));
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn with_term(mut self, term: Term) -> Result<Self, ConstructionError> {
        term.validate(self.dimension)?;
        if !term.is_exact() {
            self.mode = EvalMode::Float;
        }
        self.terms.push(term);
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    pub fn base(&self) -> &QuadraticBase {
        &self.base
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn check_point_f64(&self, x: &[f64]) -> Result<(), ConstructionError> {
        if x.len() != self.dimension {
            return Err(ConstructionError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(&v) => Err(ConstructionError::OutOfDomain(v)),
            None => Ok(()),
        }
    }

    /// Floating-point value at `x ∈ [0,1]^d`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ConstructionError> {
        self.check_point_f64(x)?;
        let mut v = self.base.eval_f64(x);
        for t in &self.terms {
            v += t.eval_f64(x)?;
        }
        Ok(v)
    }

    /// Exact value; requires exact mode.
    pub fn eval_exact(&self, x: &[DyadicRational]) -> Result<DyadicRational, ConstructionError> {
        if self.mode != EvalMode::Exact {
            return Err(ConstructionError::ExactUnavailable(
                "expression is in float mode".into(),
            ));
        }
        if x.len() != self.dimension {
            return Err(ConstructionError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let one = DyadicRational::one();
        if let Some(v) = x.iter().find(|v| v.is_negative() || **v > one) {
            return Err(ConstructionError::OutOfDomain(v.to_f64_lossy()));
        }
        let mut v = self.base.eval_exact(x);
        for t in &self.terms {
            if let Term::Fbar { l, axis } = t {
                v = v + StaircaseParams::new(*l)?.fbar(&x[*axis])?;
            }
        }
        Ok(v)
    }

    /// Right partial derivative along `axis` (left derivative at `x_axis = 1`).
    /// Not available for mollified terms.
    pub fn partial(&self, x: &[f64], axis: usize) -> Result<f64, ConstructionError> {
        self.check_point_f64(x)?;
        if axis >= self.dimension {
            return Err(ConstructionError::AxisOutOfRange {
                axis,
                dimension: self.dimension,
            });
        }
        let mut v = self.base.partial_f64(x, axis);
        for t in &self.terms {
            match t {
                Term::Fbar { l, axis: a } if *a == axis => {
                    v += StaircaseParams::new(*l)?.gamma_f64(x[axis]);
                }
                Term::Phi { l, axis: a } if *a == axis => v += phi_derivative_f64(*l, x[axis]),
                Term::Mollified { .. } => {
                    return Err(ConstructionError::ExactUnavailable(
                        "partial derivatives of mollified terms are not implemented".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("expressions always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl FunctionNd for ConvexFunctionExpr {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

/// `base + Σ_k f̄_{l_k}(x_1)` for an admissible sequence.
pub fn compose_generic(
    dimension: usize,
    base: QuadraticBase,
    entries: &[u64],
) -> Result<ConvexFunctionExpr, ConstructionError> {
    validate_sequence(entries).map_err(ConstructionError::Inadmissible)?;
    let terms = entries
        .iter()
        .map(|&l| Term::fbar(u32::try_from(l).unwrap_or(u32::MAX)))
        .collect();
    ConvexFunctionExpr::new(dimension, base, terms)
}
