use std::path::PathBuf;

use convex_multifractal::constructions::ConvexFunctionExpr;
use convex_multifractal::spectrum::{
    check_upper_bound, empirical_spectrum, BoundCheck, SpectrumConfig, SpectrumCurve,
    SpectrumError, SpectrumKind,
};
use convex_multifractal::{FnNd, FunctionNd};
use serde::{Deserialize, Serialize};

use crate::output::{emit, read_input, to_json};
use crate::{CliError, CliResult, Format, OutputArgs};

#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(default)]
pub struct SpectrumArgs {
    /// Function file written by `construct`.
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Emit a closed-form spectrum instead of estimating one.
    #[arg(long, conflicts_with = "function")]
    pub theoretical: Option<SpectrumKind>,
    /// Dimension of a closed-form spectrum [default: 1].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Estimate the spectrum of the partial derivative along this axis.
    #[arg(long)]
    pub partial: Option<usize>,
    /// Sampling grid exponent n [default: 12].
    #[arg(long)]
    pub grid: Option<u32>,
    /// Bin width Δ [default: 0.125].
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub min_scale: Option<u32>,
    #[arg(long)]
    pub max_scale: Option<u32>,
    /// Exponents from here on go to the cap band [default: 3].
    #[arg(long)]
    pub cap: Option<f64>,
    /// Allowed excess over the upper bound [default: 0.15].
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl SpectrumArgs {
    pub fn merge(self, file: SpectrumArgs) -> Self {
        Self {
            function: self.function.or(file.function),
            theoretical: self.theoretical.or(file.theoretical),
            dim: self.dim.or(file.dim),
            partial: self.partial.or(file.partial),
            grid: self.grid.or(file.grid),
            bin_width: self.bin_width.or(file.bin_width),
            min_scale: self.min_scale.or(file.min_scale),
            max_scale: self.max_scale.or(file.max_scale),
            cap: self.cap.or(file.cap),
            tolerance: self.tolerance.or(file.tolerance),
            output: self.output.merge(file.output),
        }
    }

    fn config(&self) -> SpectrumConfig {
        let d = SpectrumConfig::default();
        SpectrumConfig {
            grid_exp: self.grid.unwrap_or(d.grid_exp),
            bin_width: self.bin_width.unwrap_or(d.bin_width),
            min_scale: self.min_scale,
            max_scale: self.max_scale,
            cap: self.cap.unwrap_or(d.cap),
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    curve: &'a SpectrumCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_check: Option<&'a BoundCheck>,
}

fn spectrum_error(e: SpectrumError) -> CliError {
    match e {
        SpectrumError::GridTooCoarse { .. } | SpectrumError::InvalidConfig(_) => {
            CliError::input(e.to_string())
        }
        SpectrumError::NonFinite(_) => CliError::check(e.to_string()),
        _ => CliError::invalid(e.to_string()),
    }
}

fn write(curve: &SpectrumCurve, check: Option<&BoundCheck>, output: &OutputArgs) -> CliResult<()> {
    let text = match output.format.unwrap_or_default() {
        Format::Json => to_json(&Report {
            curve,
            bound_check: check,
        })?,
        Format::Csv => curve.to_csv(),
    };
    emit(&text, output.out.as_deref())
}

pub fn run(a: SpectrumArgs) -> CliResult<()> {
    let cfg = a.config();
    if let Some(kind) = a.theoretical {
        if !(cfg.bin_width > 0.0 && cfg.cap > 0.0 && cfg.cap / cfg.bin_width <= 1e4) {
            return Err(CliError::invalid(format!(
                "bin width {} and cap {}",
                cfg.bin_width, cfg.cap
            )));
        }
        let bins = (cfg.cap / cfg.bin_width).round() as usize;
        let h: Vec<f64> = (0..=bins).map(|b| b as f64 * cfg.bin_width).collect();
        let curve =
            SpectrumCurve::theoretical(kind, a.dim.unwrap_or(1), &h).map_err(spectrum_error)?;
        return write(&curve, None, &a.output);
    }
    let path = a
        .function
        .as_ref()
        .ok_or_else(|| CliError::invalid("--function or --theoretical is required"))?;
    let f = ConvexFunctionExpr::from_json(&read_input(path)?)
        .map_err(|e| CliError::input(format!("{} is not a function file: {e}", path.display())))?;
    let d = f.dimension();
    let curve = match a.partial {
        None => empirical_spectrum(&f, &cfg),
        Some(axis) => {
            if axis >= d {
                return Err(CliError::invalid(format!(
                    "axis {axis} out of range for dimension {d}"
                )));
            }
            f.partial(&vec![0.5; d], axis)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            let g = FnNd::new(d, |x: &[f64]| f.partial(x, axis).unwrap_or(f64::NAN));
            empirical_spectrum(&g as &dyn FunctionNd, &cfg)
        }
    }
    .map_err(spectrum_error)?;
    let check =
        check_upper_bound(&curve, d, a.tolerance.unwrap_or(0.15)).map_err(spectrum_error)?;
    write(&curve, Some(&check), &a.output)?;
    match &check {
        BoundCheck::Pass { max_excess } if max_excess.is_finite() => {
            eprintln!("upper bound: pass (largest excess {max_excess:.3})");
            Ok(())
        }
        BoundCheck::Pass { .. } => {
            eprintln!("upper bound: pass (no populated bins)");
            Ok(())
        }
        BoundCheck::Violations { violations } => {
            for v in violations {
                eprintln!(
                    "upper bound: violated at h={} (value {:.3}, bound {:.3})",
                    v.h, v.value, v.bound
                );
            }
            Err(CliError::check(format!(
                "{} bins exceed the upper bound",
                violations.len()
            )))
        }
    }
}
