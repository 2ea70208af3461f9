//! Conformal volume of intrinsic balls D(ρ) = {x ∈ M : ρ(x) < ρ}, with ρ
//! the distance from a point in the ambient metric e^{(2/n)⟨V,x⟩}δ.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::immersion::{conformal_distance, weighted_volume_density, ConformalAmbient, GraphPatch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthOptions {
    /// Number of radii, evenly spaced up to `rho_max`.
    pub steps: usize,
    /// Nodes along the longest axis of the fast-marching box.
    pub ambient_nodes: usize,
    /// Largest radius; defaults to the inscribed radius of the patch.
    pub rho_max: Option<f64>,
    /// Relative slack allowed in the monotonicity verdict.
    pub slack: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { steps: 20, ambient_nodes: 401, rho_max: None, slack: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub rho: f64,
    pub volume: f64,
    /// volume / ρⁿ.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub n: usize,
    pub origin: Vec<f64>,
    pub points: Vec<GrowthPoint>,
    /// ratio[i+1] ≥ (1 − slack)·ratio[i] for every i.
    pub monotone: bool,
    pub slack: f64,
    /// Smallest ρ on the patch boundary; balls beyond it are cut off.
    pub inscribed_radius: f64,
    /// The requested ρ_max exceeded the inscribed radius and was clamped.
    pub truncated: bool,
}

impl GrowthProfile {
    /// ρ, vol, vol/ρⁿ rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rho", "volume", "ratio"])?;
        for p in &self.points {
            w.write_record([format!("{:e}", p.rho), format!("{:e}", p.volume), format!("{:e}", p.ratio)])?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Parse(e.to_string()))
    }
}

/// A box around the patch, padded on all sides and extended against V, where
/// geodesics of the conformal metric bend.
fn ambient_box(patch: &GraphPatch, nodes: usize) -> Result<Grid> {
    let dim = patch.ambient_dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for k in 0..patch.grid().len() {
        for (c, x) in patch.position(k).into_iter().enumerate() {
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    let extent = (0..dim).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
    if !(extent > 0.0) {
        return Err(LabError::InvalidInput("patch has no extent".into()));
    }
    let dir = patch.direction();
    for c in 0..dim {
        let pad = 0.1 * extent;
        lo[c] -= pad + (0.5 * extent * dir[c]).max(0.0);
        hi[c] += pad + (-0.5 * extent * dir[c]).max(0.0);
    }
    let span = (0..dim).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
    let step = span / (nodes - 1) as f64;
    let shape: Vec<usize> = (0..dim).map(|c| ((hi[c] - lo[c]) / step).ceil() as usize + 1).collect();
    let upper: Vec<f64> = (0..dim).map(|c| lo[c] + (shape[c] - 1) as f64 * step).collect();
    Grid::new(lo, upper, shape)
}

/// Part of a simplex where the linear interpolant of ρ is ≤ r, as a polygon
/// of (parameter point, density) vertices.
fn clip(vertices: &[(Vec<f64>, f64, f64)], r: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    let len = vertices.len();
    for i in 0..len {
        let (p, rho, d) = &vertices[i];
        let (q, rho_q, d_q) = &vertices[(i + 1) % len];
        let inside = *rho <= r;
        if inside {
            out.push((p.clone(), *d));
        }
        if inside != (*rho_q <= r) {
            let t = (r - rho) / (rho_q - rho);
            let x = p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect();
            out.push((x, d + t * (d_q - d)));
        }
    }
    out
}

/// ∫ over {ρ ≤ r} of the piecewise-linear density.
fn clipped_volume(grid: &Grid, rho: &[f64], density: &[f64], r: f64) -> f64 {
    match grid.dim() {
        1 => {
            let mut acc = 0.0;
            for k in 0..grid.len() - 1 {
                let (a, b) = (k, k + 1);
                let len = grid.spacing(0);
                if rho[a] <= r && rho[b] <= r {
                    acc += 0.5 * len * (density[a] + density[b]);
                } else if rho[a] <= r || rho[b] <= r {
                    let (near, far) = if rho[a] <= r { (a, b) } else { (b, a) };
                    let t = (r - rho[near]) / (rho[far] - rho[near]);
                    let d = density[near] + t * (density[far] - density[near]);
                    acc += 0.5 * t * len * (density[near] + d);
                }
            }
            acc
        }
        2 => {
            let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
            let mut acc = 0.0;
            for i in 0..nx - 1 {
                for j in 0..ny - 1 {
                    let c = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]];
                    for tri in [[0, 1, 2], [0, 2, 3]] {
                        let verts: Vec<(Vec<f64>, f64, f64)> = tri
                            .iter()
                            .map(|&v| {
                                let k = grid.node_of(&c[v]);
                                (grid.point(k), rho[k], density[k])
                            })
                            .collect();
                        if verts.iter().all(|v| v.1 > r) {
                            continue;
                        }
                        let poly = clip(&verts, r);
                        for t in 1..poly.len().saturating_sub(1) {
                            let (p0, p1, p2) = (&poly[0], &poly[t], &poly[t + 1]);
                            let area = 0.5
                                * ((p1.0[0] - p0.0[0]) * (p2.0[1] - p0.0[1]) - (p2.0[0] - p0.0[0]) * (p1.0[1] - p0.0[1]))
                                    .abs();
                            acc += area * (p0.1 + p1.1 + p2.1) / 3.0;
                        }
                    }
                }
            }
            acc
        }
        _ => unreachable!("ambient dimension ≤ 3 limits n to 2"),
    }
}

/// vol(D(ρ))/ρⁿ at `steps` evenly spaced radii, with
/// vol(D(ρ)) = ∫_{D(ρ)} e^{⟨V,X⟩} dμ, the n-volume induced by the conformal
/// metric.
///
/// ρ on the patch comes from fast marching in a box around it; the volume of
/// each ball clips the simplices of the parameter grid against the linear
/// interpolant of ρ, so it is exactly nondecreasing in ρ.
pub fn volume_growth_profile(patch: &GraphPatch, origin: &[f64], options: &GrowthOptions) -> Result<GrowthProfile> {
    let dim = patch.ambient_dim();
    if dim > 3 {
        return Err(LabError::InvalidInput(format!("volume growth needs ambient dimension ≤ 3, got {dim}")));
    }
    if origin.len() != dim {
        return Err(LabError::DimensionMismatch(format!("origin has {} coordinates, ambient dimension is {dim}", origin.len())));
    }
    if options.steps == 0 || options.ambient_nodes < 5 || !(options.slack >= 0.0) {
        return Err(LabError::InvalidInput("need steps ≥ 1, ambient_nodes ≥ 5 and slack ≥ 0".into()));
    }
    let grid = patch.grid();
    let n = patch.n();
    let m = patch.m();
    // the origin must lie on the graph
    for a in 0..m {
        let comp = patch.component(a);
        let u = grid.interpolate(&comp, &origin[..n]).ok_or_else(|| LabError::Domain("origin is outside the patch".into()))?;
        let tol = 10.0 * grid.max_spacing().powi(2) * (1.0 + u.abs());
        if (u - origin[n + a]).abs() > tol {
            return Err(LabError::Domain(format!("origin is {:e} off the patch", (u - origin[n + a]).abs())));
        }
    }
    let amb = ConformalAmbient::new(patch.direction().to_vec(), n)?;
    let box_grid = ambient_box(patch, options.ambient_nodes)?;
    let field = conformal_distance(&amb, origin, &box_grid)?;
    let rho: Vec<f64> = (0..grid.len())
        .map(|k| field.sample(&patch.position(k)).ok_or_else(|| LabError::Domain("patch leaves the distance box".into())))
        .collect::<Result<_>>()?;
    let density = weighted_volume_density(patch);
    let inscribed_radius = grid.boundary_nodes().into_iter().map(|k| rho[k]).fold(f64::INFINITY, f64::min);
    let requested = options.rho_max.unwrap_or(inscribed_radius);
    if !(requested > 0.0) {
        return Err(LabError::InvalidInput(format!("ρ_max must be positive, got {requested}")));
    }
    let truncated = requested > inscribed_radius;
    let rho_max = requested.min(inscribed_radius);
    let points: Vec<GrowthPoint> = (1..=options.steps)
        .map(|i| {
            let r = rho_max * i as f64 / options.steps as f64;
            let volume = clipped_volume(grid, &rho, &density, r);
            GrowthPoint { rho: r, volume, ratio: volume / r.powi(n as i32) }
        })
        .collect();
    let monotone = points.windows(2).all(|w| w[1].ratio >= (1.0 - options.slack) * w[0].ratio);
    Ok(GrowthProfile {
        n,
        origin: origin.to_vec(),
        points,
        monotone,
        slack: options.slack,
        inscribed_radius,
        truncated,
    })
}
