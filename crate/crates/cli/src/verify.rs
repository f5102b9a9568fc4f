use std::fmt::Write as _;

use clap::ValueEnum;
use convex_multifractal::constructions::{
    convexity_check, ConvexFunctionExpr, QuadraticBase, Term,
};
use convex_multifractal::dyadic::DyadicRational;
use convex_multifractal::regularity::{
    build_cone_system, check_derivative_stability, cone_probe, default_steps,
    derivative_stability_radius, exponent_shift_check, holder_estimate_nd, ConeProbeStatus,
    HolderConfig, ShiftOutcome, DEFAULT_GRID_EXP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::{emit, to_csv, to_json};
use crate::{CliError, CliResult, Format, OutputArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    /// Exact second differences of f̄_2 on the 2^-14 grid.
    Convexity,
    /// Perturbations within the stability radius keep one-sided derivatives
    /// within ε.
    DerivativeStability,
    /// Exponent of a cusp equals the exponent of its derivative plus one.
    ExponentShift,
    /// The cone probe selects a cap around the singular axis.
    ConeProbe,
    /// Exponent 0 on the face x1 = 0 of a boundary spike, at least 1 inside.
    BoundarySpike,
}

impl CheckName {
    fn name(self) -> &'static str {
        match self {
            CheckName::Convexity => "convexity",
            CheckName::DerivativeStability => "derivative-stability",
            CheckName::ExponentShift => "exponent-shift",
            CheckName::ConeProbe => "cone-probe",
            CheckName::BoundarySpike => "boundary-spike",
        }
    }

    const ALL: [CheckName; 5] = [
        CheckName::Convexity,
        CheckName::DerivativeStability,
        CheckName::ExponentShift,
        CheckName::ConeProbe,
        CheckName::BoundarySpike,
    ];
}

#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    /// Run only these checks (repeatable).
    #[arg(long, value_enum)]
    pub only: Vec<CheckName>,
    /// Also run a control for each check with an injected violation that
    /// must be detected.
    #[arg(long)]
    pub negative_controls: bool,
    /// Seed for randomized perturbations and probes [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

impl VerifyArgs {
    pub fn merge(self, file: VerifyArgs) -> Self {
        Self {
            only: if self.only.is_empty() {
                file.only
            } else {
                self.only
            },
            negative_controls: self.negative_controls || file.negative_controls,
            seed: self.seed.or(file.seed),
            output: self.output.merge(file.output),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    check: CheckName,
    control: bool,
    /// Whether the property held.
    held: bool,
    /// Property holds for checks and fails for controls.
    ok: bool,
    detail: String,
}

type Outcome = Result<(bool, String), String>;

fn convexity(control: bool) -> Outcome {
    let base = if control {
        QuadraticBase::sum_of_squares(1, DyadicRational::from(-1))
    } else {
        QuadraticBase::zero()
    };
    let f = ConvexFunctionExpr::new_unchecked(1, base, vec![Term::fbar(2)]);
    let c = convexity_check(&f, 0, 14).map_err(|e| e.to_string())?;
    Ok((
        c.is_convex(),
        format!(
            "{} points, witness {:?}",
            c.points_checked,
            c.witness.map(|w| w.point)
        ),
    ))
}

fn derivative_stability(control: bool, rng: &mut ChaCha8Rng) -> Outcome {
    let eps = 0.1;
    let df = |x: f64| 2.0 * x;
    let rho = derivative_stability_radius(&df, eps, DEFAULT_GRID_EXP)
        .map_err(|e| e.to_string())?
        .rho;
    let steps = default_steps();
    let probes: Vec<f64> = (0..100).map(|_| rng.gen_range(eps..=1.0 - eps)).collect();
    if control {
        // A tangent lifted by 10ρ meets x² with a derivative jump of 2√(10ρ) > ε.
        let (c, lift) = (0.5, 10.0 * rho);
        let g = move |x: f64| (x * x).max(2.0 * c * x - c * c + lift);
        let mut probes = probes;
        probes.push(c + lift.sqrt());
        let r =
            check_derivative_stability(&df, &g, eps, &probes, &steps).map_err(|e| e.to_string())?;
        return Ok((r.passed(), format!("norm 10ρ = {lift:.3e}")));
    }
    for i in 0..20 {
        // max(x² + hinge, lifted tangent) stays within `size` of x².
        let size = rho * rng.gen_range(0.05..0.95);
        let (c, t, share) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        let slope = share * size / (1.0 - c);
        let lift = (1.0 - share) * size;
        let g = move |x: f64| (x * x + slope * (x - c).max(0.0)).max(2.0 * t * x - t * t + lift);
        let r =
            check_derivative_stability(&df, &g, eps, &probes, &steps).map_err(|e| e.to_string())?;
        if !r.passed() {
            return Ok((false, format!("perturbation {i}: {r:?}")));
        }
    }
    Ok((
        true,
        format!("ρ = {rho:.4e}, 20 perturbations × 100 probes"),
    ))
}

fn exponent_shift(control: bool) -> Outcome {
    let cfg = HolderConfig::default();
    let c = 0.4;
    for h in [1.1, 1.3, 1.5, 1.7, 1.9] {
        // The control pairs each cusp with the derivative of a sharper one.
        let hd = if control { h + 0.5 } else { h };
        let f = move |t: f64| (t - c).abs().powf(h);
        let fp = move |t: f64| hd * (t - c).signum() * (t - c).abs().powf(hd - 1.0);
        match exponent_shift_check(&f, &fp, c, &cfg, 0.15).map_err(|e| e.to_string())? {
            ShiftOutcome::Pass { .. } => {}
            other => return Ok((false, format!("h = {h}: {other:?}"))),
        }
    }
    Ok((true, "h ∈ {1.1, 1.3, 1.5, 1.7, 1.9}".into()))
}

fn cone(control: bool) -> Outcome {
    // The control puts the staircase on x2 and still expects ±e_1.
    let axis = usize::from(control);
    let tiny = QuadraticBase::sum_of_squares(
        2,
        DyadicRational::from_f64(0.01).map_err(|e| e.to_string())?,
    );
    let f = ConvexFunctionExpr::new(2, tiny, vec![Term::Fbar { l: 2, axis }])
        .map_err(|e| e.to_string())?;
    let cs = build_cone_system(2, 8).map_err(|e| e.to_string())?;
    let near = cs.caps_near_axis(&[1.0, 0.0]);
    for j in 0..10 {
        let mut x = [0.5, 0.5];
        x[axis] = (j + 1) as f64 / 16.0;
        let p =
            cone_probe(&f, &x, &cs, 3, &HolderConfig::default(), 0.2).map_err(|e| e.to_string())?;
        match p.status {
            ConeProbeStatus::Selected { index } if near.contains(&index) => {}
            other => return Ok((false, format!("x = {x:?}: {other:?}"))),
        }
    }
    Ok((true, "10/10 caps adjacent to ±e_1".into()))
}

fn boundary_spike(control: bool) -> Outcome {
    // The control drops the spike, leaving a smooth boundary.
    let terms = if control { vec![] } else { vec![Term::phi(5)] };
    let f = ConvexFunctionExpr::new(
        2,
        QuadraticBase::sum_of_squares(2, DyadicRational::one()),
        terms,
    )
    .map_err(|e| e.to_string())?;
    let cfg = HolderConfig::with_scales(4..=10);
    let (mut bmax, mut imin) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..10 {
        let x2 = 0.05 + 0.1 * k as f64;
        bmax = bmax.max(
            holder_estimate_nd(&f, &[0.0, x2], &cfg)
                .map_err(|e| e.to_string())?
                .value,
        );
        let x1 = 0.2 + 0.6 * k as f64 / 9.0;
        imin = imin.min(
            holder_estimate_nd(&f, &[x1, x2], &cfg)
                .map_err(|e| e.to_string())?
                .value,
        );
    }
    Ok((
        bmax <= 0.3 && imin >= 1.0,
        format!("boundary max {bmax:.3}, interior min {imin:.3}"),
    ))
}

fn run_check(name: CheckName, control: bool, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        CheckName::Convexity => convexity(control),
        CheckName::DerivativeStability => derivative_stability(control, &mut rng),
        CheckName::ExponentShift => exponent_shift(control),
        CheckName::ConeProbe => cone(control),
        CheckName::BoundarySpike => boundary_spike(control),
    }
}

fn table(rows: &[Row]) -> String {
    let mut s = String::new();
    for r in rows {
        let kind = if r.control { "control" } else { "check" };
        let status = if r.ok { "ok" } else { "FAILED" };
        let _ = writeln!(s, "{status:<7}{kind:<9}{:<22}{}", r.check.name(), r.detail);
    }
    s
}

pub fn run(a: VerifyArgs) -> CliResult<()> {
    let names: Vec<CheckName> = if a.only.is_empty() {
        CheckName::ALL.to_vec()
    } else {
        a.only.clone()
    };
    let seed = a.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for &name in &names {
        let modes: &[bool] = if a.negative_controls {
            &[false, true]
        } else {
            &[false]
        };
        for &control in modes {
            let (held, detail) = run_check(name, control, seed).map_err(CliError::check)?;
            rows.push(Row {
                check: name,
                control,
                held,
                ok: held != control,
                detail,
            });
        }
    }
    eprint!("{}", table(&rows));
    let text = match a.output.format.unwrap_or_default() {
        Format::Json => to_json(&rows)?,
        Format::Csv => to_csv(
            &["check", "control", "held", "ok", "detail"],
            rows.iter().map(|r| {
                vec![
                    r.check.name().to_string(),
                    r.control.to_string(),
                    r.held.to_string(),
                    r.ok.to_string(),
                    r.detail.clone(),
                ]
            }),
        )?,
    };
    emit(&text, a.output.out.as_deref())?;
    let failed = rows.iter().filter(|r| !r.ok).count();
    if failed > 0 {
        return Err(CliError::check(format!(
            "{failed} of {} rows failed",
            rows.len()
        )));
    }
    Ok(())
}
