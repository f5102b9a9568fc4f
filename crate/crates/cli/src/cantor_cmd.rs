use convex_multifractal::cantor::{
    auto_sequence, build_measure, covering_counts, dyadic_radii, local_dimension, width_exponent,
    CantorError, CoveringCount,
};
use convex_multifractal::constructions::ScaleSequence;
use convex_multifractal::dyadic::DyadicRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::SeqSpec;
use crate::output::{emit, to_csv, to_json};
use crate::{CliError, CliResult, Format, OutputArgs};

#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(default)]
pub struct CantorArgs {
    /// Target exponent h ∈ [1, 2).
    #[arg(long)]
    pub h: Option<f64>,
    /// Scale sequence: `auto` or e.g. `3,18` [default: auto].
    #[arg(long)]
    pub seq: Option<SeqSpec>,
    /// Deepest generation K [default: 2].
    #[arg(long)]
    pub depth: Option<usize>,
    /// First generation intersected [default: 1].
    #[arg(long)]
    pub k_start: Option<usize>,
    /// Largest entry tried by `--seq auto` [default: 64].
    #[arg(long)]
    pub max_l: Option<u32>,
    /// Dimension of the product measure for local dimensions [default: 2].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of sampled support points [default: 4].
    #[arg(long)]
    pub points: Option<usize>,
    /// Seed for the sampled points [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl CantorArgs {
    pub fn merge(self, file: CantorArgs) -> Self {
        Self {
            h: self.h.or(file.h),
            seq: self.seq.or(file.seq),
            depth: self.depth.or(file.depth),
            k_start: self.k_start.or(file.k_start),
            max_l: self.max_l.or(file.max_l),
            dim: self.dim.or(file.dim),
            points: self.points.or(file.points),
            seed: self.seed.or(file.seed),
            output: self.output.merge(file.output),
        }
    }
}

#[derive(Serialize)]
struct PointDimension {
    point: Vec<DyadicRational>,
    slope: f64,
}

#[derive(Serialize)]
struct Report {
    h: f64,
    sequence: Vec<u32>,
    counts: Vec<CoveringCount>,
    dimension: usize,
    log2_radii: (i64, i64),
    local_dimensions: Vec<PointDimension>,
}

fn cantor_error(e: CantorError) -> CliError {
    CliError::invalid(e.to_string())
}

pub fn run(a: CantorArgs) -> CliResult<()> {
    let h = a.h.ok_or_else(|| CliError::invalid("--h is required"))?;
    let depth = a.depth.unwrap_or(2);
    let k_start = a.k_start.unwrap_or(1);
    if depth == 0 || k_start == 0 || k_start > depth {
        return Err(CliError::invalid(format!(
            "need 1 <= k_start <= depth, got {k_start} and {depth}"
        )));
    }
    let seq = match a.seq.clone().unwrap_or(SeqSpec::Auto) {
        SeqSpec::Auto => auto_sequence(h, depth, a.max_l.unwrap_or(64)).map_err(cantor_error)?,
        SeqSpec::List(v) => ScaleSequence::new(&v).map_err(|e| CliError::invalid(e.to_string()))?,
    };
    let counts = covering_counts(h, &seq, depth, k_start).map_err(cantor_error)?;

    let d = a.dim.unwrap_or(2);
    let m = build_measure(h, &seq, depth, k_start, d).map_err(cantor_error)?;
    let l = seq.entries();
    let lo = (l[k_start - 1] as i64).pow(2);
    let hi = width_exponent(h, l[depth - 1], depth) + 1;
    let radii = dyadic_radii(lo, hi, ((hi - lo) / 40).max(1) as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
    let mut local_dimensions = Vec::new();
    for _ in 0..a.points.unwrap_or(4) {
        let path: Vec<u64> = (0..depth).map(|_| rng.gen()).collect();
        let mut point = vec![m.left_endpoint(&path)];
        point.extend((1..d).map(|_| DyadicRational::new(rng.gen::<u32>(), -32)));
        let ld = local_dimension(&m, &point, &radii).map_err(cantor_error)?;
        local_dimensions.push(PointDimension {
            point,
            slope: ld.slope,
        });
    }

    let report = Report {
        h,
        sequence: l.to_vec(),
        counts,
        dimension: d,
        log2_radii: (-lo, -hi),
        local_dimensions,
    };
    let text = match a.output.format.unwrap_or_default() {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            for p in &report.local_dimensions {
                eprintln!(
                    "local dimension {:.4} at x1 ≈ {:.6e}",
                    p.slope,
                    p.point[0].to_f64_lossy()
                );
            }
            to_csv(
                &["k", "count", "log2_delta", "slope"],
                report.counts.iter().map(|c| {
                    vec![
                        c.generation.to_string(),
                        c.count.to_string(),
                        c.log2_delta.to_string(),
                        c.slope.to_string(),
                    ]
                }),
            )?
        }
    };
    emit(&text, a.output.out.as_deref())
}
