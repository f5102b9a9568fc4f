//! Finite cone systems on the unit sphere and the direction-restricted
//! exponent probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::derivative::directional_restriction;
use super::holder::{
    holder_estimate_1d, holder_estimate_nd, CapReason, ExponentEstimate, HolderConfig,
};
use super::RegularityError;
use crate::FunctionNd;

const HULL_RADIUS: f64 = 0.5;
const PERTURBED_HULL_RADIUS: f64 = 0.25;
const ZERO_MARGIN: f64 = 1e-12;
const PERTURBATION_SAMPLES: usize = 64;

/// Points `z_1..z_N` on the unit sphere whose hull contains `B(0, 1/2)`, with
/// caps `C_i = S ∩ B(z_i, ε_c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSystem {
    pub dimension: usize,
    pub centers: Vec<Vec<f64>>,
    /// `ε_c`: a thousandth of the smallest distance between centers.
    pub cap_radius: f64,
    /// Radius of the largest origin-centered ball inside the hull of the centers.
    pub hull_inradius: f64,
    /// Smallest inradius seen over the sampled extreme cap perturbations.
    pub perturbed_inradius: f64,
    /// The hull condition holds with no slack.
    pub zero_margin: bool,
}

impl ConeSystem {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Angular radius of a cap, i.e. the angle subtended by a chord of length `ε_c`.
    pub fn cap_angle(&self) -> f64 {
        2.0 * (self.cap_radius / 2.0).asin()
    }

    /// Indices of caps whose centers lie within `ε_c` of `v` or `-v`... of the
    /// given unit vector or its antipode.
    pub fn caps_near_axis(&self, v: &[f64]) -> Vec<usize> {
        self.centers
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let plus = dist(c, v);
                let minus = c
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a + b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                plus.min(minus) <= self.cap_radius
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Sample directions in cap `i`: the center first, then points on the
    /// cap boundary.
    pub fn cap_directions(&self, i: usize, samples: usize) -> Vec<Vec<f64>> {
        let z = &self.centers[i];
        let theta = self.cap_angle();
        let mut out = vec![z.clone()];
        let extra = samples.saturating_sub(1);
        match self.dimension {
            2 => {
                let base = z[1].atan2(z[0]);
                for j in 0..extra {
                    let k = (j / 2 + 1) as f64 / extra.div_ceil(2) as f64;
                    let a = base + if j % 2 == 0 { theta * k } else { -theta * k };
                    out.push(vec![a.cos(), a.sin()]);
                }
            }
            _ => {
                let (u, v) = tangent_basis(z);
                for j in 0..extra {
                    let phi = std::f64::consts::TAU * j as f64 / extra as f64;
                    let p: Vec<f64> = (0..3)
                        .map(|k| {
                            theta.cos() * z[k] + theta.sin() * (phi.cos() * u[k] + phi.sin() * v[k])
                        })
                        .collect();
                    out.push(normalize(p));
                }
            }
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tangent_basis(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let helper = if z[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = normalize(cross(z, &helper).to_vec());
    let v = cross(z, &u).to_vec();
    (u, v)
}

fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            m = m.min(dist(&points[i], &points[j]));
        }
    }
    m
}

/// Inradius about the origin of the convex polygon with vertices given by
/// angle; negative when the origin is outside.
fn polygon_inradius(angles: &mut [f64]) -> f64 {
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mut r = f64::INFINITY;
    for i in 0..n {
        let a = angles[i];
        let b = if i + 1 < n {
            angles[i + 1]
        } else {
            angles[0] + std::f64::consts::TAU
        };
        // Distance from the origin to the chord between the two unit vectors.
        r = r.min(((b - a) / 2.0).cos());
    }
    r
}

/// Inradius of the hull of unit vectors given its triangular facets;
/// `None` if some facet is not supporting.
fn polytope_inradius(points: &[Vec<f64>], faces: &[[usize; 3]]) -> Option<f64> {
    let mut r = f64::INFINITY;
    for f in faces {
        let (a, b, c) = (&points[f[0]], &points[f[1]], &points[f[2]]);
        let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let ac: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
        let mut n = normalize(cross(&ab, &ac).to_vec());
        let mut off = dot(&n, a);
        if off < 0.0 {
            n.iter_mut().for_each(|x| *x = -*x);
            off = -off;
        }
        if points.iter().any(|p| dot(&n, p) > off + 1e-12) {
            return None;
        }
        r = r.min(off);
    }
    Some(r)
}

fn icosphere(subdivisions: u32) -> (Vec<Vec<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut pts: Vec<Vec<f64>> = raw.iter().map(|p| normalize(p.to_vec())).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<Vec<f64>>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m: Vec<f64> = pts[a]
                    .iter()
                    .zip(&pts[b])
                    .map(|(x, y)| (x + y) / 2.0)
                    .collect();
                pts.push(normalize(m));
                pts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (pts, faces)
}

/// `d = 2`: `N ≥ 3` equally spaced points starting at `e_1`. `d = 3`:
/// geodesic icosahedra, `N = 10·4^k + 2` for `k ≤ 3`.
pub fn build_cone_system(d: usize, n: usize) -> Result<ConeSystem, RegularityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match d {
        2 => {
            if n < 3 {
                return Err(RegularityError::HullTooSmall {
                    required: HULL_RADIUS,
                    radius: 0.0,
                });
            }
            let step = std::f64::consts::TAU / n as f64;
            let angles: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
            let centers: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
            let hull_inradius = polygon_inradius(&mut angles.clone());
            if hull_inradius < HULL_RADIUS - ZERO_MARGIN {
                return Err(RegularityError::HullTooSmall {
                    required: HULL_RADIUS,
                    radius: hull_inradius,
                });
            }
            let cap_radius = min_pairwise_distance(&centers) / 1000.0;
            let theta = 2.0 * (cap_radius / 2.0).asin();
            let mut perturbed = f64::INFINITY;
            for s in 0..PERTURBATION_SAMPLES + 2 {
                let mut a: Vec<f64> = angles
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| {
                        let delta = match s {
                            // Neighbours pushed apart, then towards each other.
                            0 => {
                                if k % 2 == 0 {
                                    theta
                                } else {
                                    -theta
                                }
                            }
                            1 => {
                                if k % 2 == 0 {
                                    -theta
                                } else {
                                    theta
                                }
                            }
                            _ => {
                                if rng.gen::<bool>() {
                                    theta
                                } else {
                                    -theta
                                }
                            }
                        };
                        a + delta
                    })
                    .collect();
                perturbed = perturbed.min(polygon_inradius(&mut a));
            }
            if perturbed < PERTURBED_HULL_RADIUS {
                return Err(RegularityError::HullTooSmall {
                    required: PERTURBED_HULL_RADIUS,
                    radius: perturbed,
                });
            }
            Ok(ConeSystem {
                dimension: 2,
                centers,
                cap_radius,
                hull_inradius,
                perturbed_inradius: perturbed,
                zero_margin: hull_inradius - HULL_RADIUS < ZERO_MARGIN,
            })
        }
        3 => {
            let k = (0..=3u32).find(|&k| 10 * 4usize.pow(k) + 2 == n).ok_or_else(|| {
                RegularityError::UnsupportedCone(format!(
                    "in dimension 3 the count must be 10*4^k + 2 for k <= 3 (12, 42, 162, 642), got {n}"
                ))
            })?;
            let (centers, faces) = icosphere(k);
            let hull_inradius = polytope_inradius(&centers, &faces).ok_or_else(|| {
                RegularityError::UnsupportedCone("triangulation is not a convex hull".into())
            })?;
            if hull_inradius < HULL_RADIUS {
                return Err(RegularityError::HullTooSmall {
                    required: HULL_RADIUS,
                    radius: hull_inradius,
                });
            }
            let cap_radius = min_pairwise_distance(&centers) / 1000.0;
            let theta = 2.0 * (cap_radius / 2.0).asin();
            let mut perturbed = f64::INFINITY;
            for _ in 0..PERTURBATION_SAMPLES / 4 {
                let moved: Vec<Vec<f64>> = centers
                    .iter()
                    .map(|z| {
                        let (u, v) = tangent_basis(z);
                        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                        normalize(
                            (0..3)
                                .map(|i| {
                                    theta.cos() * z[i]
                                        + theta.sin() * (phi.cos() * u[i] + phi.sin() * v[i])
                                })
                                .collect(),
                        )
                    })
                    .collect();
                let r = polytope_inradius(&moved, &faces).unwrap_or(f64::NEG_INFINITY);
                perturbed = perturbed.min(r);
            }
            if perturbed < PERTURBED_HULL_RADIUS {
                return Err(RegularityError::HullTooSmall {
                    required: PERTURBED_HULL_RADIUS,
                    radius: perturbed,
                });
            }
            Ok(ConeSystem {
                dimension: 3,
                centers,
                cap_radius,
                hull_inradius,
                perturbed_inradius: perturbed,
                zero_margin: false,
            })
        }
        _ => Err(RegularityError::UnsupportedCone(format!(
            "dimension {d}; only 2 and 3 are supported"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionEstimate {
    pub cap: usize,
    pub direction: Vec<f64>,
    pub value: f64,
    pub capped: Option<CapReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ConeProbeStatus {
    Selected { index: usize },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeProbe {
    pub full: ExponentEstimate,
    pub directions: Vec<DirectionEstimate>,
    /// Per cap, the largest deviation of its direction estimates from the
    /// full estimate.
    pub max_deviation: Vec<f64>,
    /// Caps whose deviation is within the tolerance.
    pub consistent: Vec<usize>,
    pub status: ConeProbeStatus,
}

/// Compares exponent estimates of restrictions to lines through `x` with the
/// full estimate at `x`, cap by cap. The selected cap is the smallest index
/// among the caps within `tolerance` of the best one, provided the best one
/// is itself within `tolerance`.
pub fn cone_probe(
    f: &dyn FunctionNd,
    x: &[f64],
    cs: &ConeSystem,
    samples_per_cap: usize,
    cfg: &HolderConfig,
    tolerance: f64,
) -> Result<ConeProbe, RegularityError> {
    if f.dimension() != cs.dimension {
        return Err(RegularityError::DimensionMismatch {
            expected: cs.dimension,
            got: f.dimension(),
        });
    }
    if x.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(RegularityError::Boundary(x.to_vec()));
    }
    let full = holder_estimate_nd(f, x, cfg)?;
    let mut directions = Vec::new();
    let mut max_deviation = Vec::with_capacity(cs.len());
    for i in 0..cs.len() {
        let mut worst: f64 = 0.0;
        for z in cs.cap_directions(i, samples_per_cap.max(1)) {
            let r = directional_restriction(f, x, &z)?;
            let e = holder_estimate_1d(&r, 0.0, cfg)?;
            worst = worst.max((e.value - full.value).abs());
            directions.push(DirectionEstimate {
                cap: i,
                direction: z,
                value: e.value,
                capped: e.cap,
            });
        }
        max_deviation.push(worst);
    }
    let consistent: Vec<usize> = (0..cs.len())
        .filter(|&i| max_deviation[i] <= tolerance)
        .collect();
    let best = max_deviation.iter().copied().fold(f64::INFINITY, f64::min);
    let status = if full.cap == Some(CapReason::Polynomial) {
        ConeProbeStatus::Inconclusive {
            reason: "full estimate is polynomial at all probed scales".into(),
        }
    } else if best > tolerance {
        ConeProbeStatus::Inconclusive {
            reason: format!("no cap within {tolerance} (best deviation {best:.3})"),
        }
    } else {
        let index = (0..cs.len())
            .find(|&i| max_deviation[i] <= best + tolerance)
            .expect("best exists");
        ConeProbeStatus::Selected { index }
    };
    Ok(ConeProbe {
        full,
        directions,
        max_deviation,
        consistent,
        status,
    })
}
