use std::fmt::Write as _;
use std::str::FromStr;

use clap::ValueEnum;
use convex_multifractal::constructions::{
    compose_generic, ConvexFunctionExpr, QuadraticBase, ScaleSequence, Term, DEFAULT_NODES_EXP,
    MAX_L,
};
use convex_multifractal::dyadic::DyadicRational;
use serde::Deserialize;

use crate::output::emit;
use crate::{CliError, CliResult, Format, OutputArgs};

const MAX_CSV_ROWS: u128 = 1 << 20;

/// `auto` or an explicit comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqSpec {
    Auto,
    List(Vec<u64>),
}

impl FromStr for SeqSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "auto" {
            return Ok(SeqSpec::Auto);
        }
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("bad sequence entry {v:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SeqSpec::List)
    }
}

impl<'de> Deserialize<'de> for SeqSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<u64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::List(v) => Ok(SeqSpec::List(v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    /// `coef · |x|²`.
    Quad,
    Zero,
}

#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(default)]
pub struct ConstructArgs {
    /// Dimension d [default: 1].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Quadratic base [default: quad].
    #[arg(long, value_enum)]
    pub base: Option<BaseKind>,
    /// Coefficient of the quadratic base as `m*2^e` or a decimal [default: 1].
    #[arg(long)]
    pub coef: Option<String>,
    /// Scale sequence: `auto` or e.g. `3,6` [default: auto].
    #[arg(long)]
    pub seq: Option<SeqSpec>,
    /// Number of staircase terms for `--seq auto` [default: 2].
    #[arg(long)]
    pub depth: Option<usize>,
    /// Largest entry tried by `--seq auto` [default: 64].
    #[arg(long)]
    pub max_l: Option<u32>,
    /// Add the boundary spike φ_l along x1.
    #[arg(long)]
    pub phi: Option<u32>,
    /// Mollify the whole function with this parameter λ ∈ (0, 1/2).
    #[arg(long)]
    pub mollify: Option<String>,
    /// Quadrature nodes per axis are 2^nodes_exp [default: 7].
    #[arg(long)]
    pub nodes_exp: Option<u32>,
    /// Grid exponent of the CSV samples [default: 10].
    #[arg(long)]
    pub grid: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl ConstructArgs {
    pub fn merge(self, file: ConstructArgs) -> Self {
        Self {
            dim: self.dim.or(file.dim),
            base: self.base.or(file.base),
            coef: self.coef.or(file.coef),
            seq: self.seq.or(file.seq),
            depth: self.depth.or(file.depth),
            max_l: self.max_l.or(file.max_l),
            phi: self.phi.or(file.phi),
            mollify: self.mollify.or(file.mollify),
            nodes_exp: self.nodes_exp.or(file.nodes_exp),
            grid: self.grid.or(file.grid),
            output: self.output.merge(file.output),
        }
    }
}

/// Accepts `m*2^e` or a decimal that is exactly representable as a double.
pub fn parse_dyadic(s: &str) -> CliResult<DyadicRational> {
    if let Ok(d) = s.parse::<DyadicRational>() {
        return Ok(d);
    }
    let x: f64 = s
        .parse()
        .map_err(|_| CliError::invalid(format!("not a number: {s:?}")))?;
    DyadicRational::from_f64(x).map_err(|e| CliError::invalid(format!("{s}: {e}")))
}

pub fn resolve_sequence(spec: &SeqSpec, depth: usize, max_l: u32) -> CliResult<Vec<u64>> {
    match spec {
        SeqSpec::List(v) => Ok(v.clone()),
        SeqSpec::Auto => ScaleSequence::auto(depth, max_l.min(MAX_L))
            .map(|s| s.entries().iter().map(|&l| l as u64).collect())
            .map_err(|e| CliError::invalid(e.to_string())),
    }
}

pub fn build(a: &ConstructArgs) -> CliResult<ConvexFunctionExpr> {
    let d = a.dim.unwrap_or(1);
    let coef = parse_dyadic(a.coef.as_deref().unwrap_or("1"))?;
    let base = match a.base.unwrap_or(BaseKind::Quad) {
        BaseKind::Quad => QuadraticBase::sum_of_squares(d, coef),
        BaseKind::Zero => QuadraticBase::zero(),
    };
    let seq = resolve_sequence(
        &a.seq.clone().unwrap_or(SeqSpec::Auto),
        a.depth.unwrap_or(2),
        a.max_l.unwrap_or(64),
    )?;
    let invalid =
        |e: convex_multifractal::constructions::ConstructionError| CliError::invalid(e.to_string());
    let mut f = compose_generic(d, base, &seq).map_err(invalid)?;
    if let Some(l) = a.phi {
        f = f.with_term(Term::phi(l)).map_err(invalid)?;
    }
    if let Some(lambda) = &a.mollify {
        let lambda = parse_dyadic(lambda)?;
        let term = Term::Mollified {
            lambda,
            nodes_exp: a.nodes_exp.unwrap_or(DEFAULT_NODES_EXP),
            child: Box::new(f),
        };
        f = ConvexFunctionExpr::new(d, QuadraticBase::zero(), vec![term]).map_err(invalid)?;
    }
    Ok(f)
}

fn samples_csv(f: &ConvexFunctionExpr, n: u32) -> CliResult<String> {
    let d = f.dimension();
    let side = (1u128 << n.min(64)) + 1;
    if n > 30 || side.pow(d as u32) > MAX_CSV_ROWS {
        return Err(CliError::invalid(format!(
            "grid 2^-{n} in dimension {d} exceeds {MAX_CSV_ROWS} rows"
        )));
    }
    let side = side as usize;
    let mut out = String::new();
    for k in 1..=d {
        let _ = write!(out, "x{k},");
    }
    out.push_str("value\n");
    let step = 1.0 / (side - 1) as f64;
    let mut x = vec![0.0; d];
    for idx in 0..side.pow(d as u32) {
        let mut rest = idx;
        for xk in x.iter_mut() {
            *xk = (rest % side) as f64 * step;
            rest /= side;
        }
        let v = f.eval(&x).map_err(|e| CliError::check(e.to_string()))?;
        for xk in &x {
            let _ = write!(out, "{xk},");
        }
        let _ = writeln!(out, "{v}");
    }
    Ok(out)
}

pub fn run(a: ConstructArgs) -> CliResult<()> {
    let f = build(&a)?;
    let text = match a.output.format.unwrap_or_default() {
        Format::Json => {
            let mut s = f.to_json();
            s.push('\n');
            s
        }
        Format::Csv => samples_csv(&f, a.grid.unwrap_or(10))?,
    };
    emit(&text, a.output.out.as_deref())
}
