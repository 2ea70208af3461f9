//! Rectangular lattices and second-order finite-difference stencils.
//!
//! Nodes are numbered in row-major order with the last axis varying fastest.
//! Interior nodes use central differences; nodes on the boundary layer fall
//! back to second-order one-sided stencils, so every derivative returned here
//! carries an O(h²) truncation error.

use crate::error::{LabError, Result};

/// Smallest number of nodes allowed per axis (width of the one-sided stencils).
pub const MIN_NODES_PER_AXIS: usize = 5;

/// A tensor-product lattice over the box ∏[lowerᵢ, upperᵢ].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

/// A finite-difference stencil: up to four (node, weight) pairs.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    nodes: [usize; 4],
    weights: [f64; 4],
    len: usize,
}

impl Stencil {
    fn new(entries: &[(usize, f64)]) -> Self {
        let mut nodes = [0; 4];
        let mut weights = [0.0; 4];
        for (k, &(n, w)) in entries.iter().enumerate() {
            nodes[k] = n;
            weights[k] = w;
        }
        Stencil { nodes, weights, len: entries.len() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes[..self.len].iter().copied().zip(self.weights[..self.len].iter().copied())
    }

    /// Applies the stencil to a nodal field given by a lookup closure.
    #[inline]
    pub fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len {
            acc += self.weights[k] * f(self.nodes[k]);
        }
        acc
    }
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != shape.len() || shape.is_empty() {
            return Err(LabError::DimensionMismatch(format!(
                "grid bounds {}/{} and shape {} disagree",
                lower.len(),
                upper.len(),
                shape.len()
            )));
        }
        for axis in 0..shape.len() {
            if !(lower[axis].is_finite() && upper[axis].is_finite() && lower[axis] < upper[axis]) {
                return Err(LabError::InvalidInput(format!(
                    "axis {axis}: bounds [{}, {}] must be finite and increasing",
                    lower[axis], upper[axis]
                )));
            }
            if shape[axis] < MIN_NODES_PER_AXIS {
                return Err(LabError::InvalidInput(format!(
                    "axis {axis}: {} nodes, at least {MIN_NODES_PER_AXIS} required",
                    shape[axis]
                )));
            }
        }
        let strides = (0..shape.len()).map(|a| shape[a + 1..].iter().product()).collect();
        Ok(Grid { lower, upper, shape, strides })
    }

    /// The cube [lower, upper]ⁿ with `nodes` nodes per axis.
    pub fn cube(dim: usize, lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        Grid::new(vec![lower; dim], vec![upper; dim], vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Lattice index of `node` along `axis`.
    #[inline]
    pub fn index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.shape[axis]
    }

    pub fn node_of(&self, multi: &[usize]) -> usize {
        multi.iter().enumerate().map(|(a, &i)| i * self.stride(a)).sum()
    }

    /// Coordinate of lattice index `i` along `axis`. Symmetric boxes give
    /// exactly mirrored coordinates.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let last = (self.shape[axis] - 1) as f64;
        let t = i as f64;
        (self.lower[axis] * (last - t) + self.upper[axis] * t) / last
    }

    pub fn coord(&self, node: usize, axis: usize) -> f64 {
        self.axis_coord(axis, self.index(node, axis))
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(node, a)).collect()
    }

    /// Neighbor `delta` steps away along `axis` (caller guarantees it exists).
    #[inline]
    pub fn offset(&self, node: usize, axis: usize, delta: isize) -> usize {
        (node as isize + delta * self.stride(axis) as isize) as usize
    }

    /// Distance in lattice steps from `node` to the nearest boundary face.
    pub fn depth(&self, node: usize) -> usize {
        (0..self.dim())
            .map(|a| {
                let i = self.index(node, a);
                i.min(self.shape[a] - 1 - i)
            })
            .min()
            .unwrap_or(0)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.depth(node) == 0
    }

    /// Nodes whose depth is at least `min_depth`.
    pub fn nodes_with_depth(&self, min_depth: usize) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.depth(k) >= min_depth).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_boundary(k)).collect()
    }

    /// First-derivative stencil along `axis`.
    pub fn d1_stencil(&self, node: usize, axis: usize) -> Stencil {
        let h = self.spacing(axis);
        let i = self.index(node, axis);
        let last = self.shape[axis] - 1;
        if i == 0 {
            Stencil::new(&[
                (node, -1.5 / h),
                (self.offset(node, axis, 1), 2.0 / h),
                (self.offset(node, axis, 2), -0.5 / h),
            ])
        } else if i == last {
            Stencil::new(&[
                (node, 1.5 / h),
                (self.offset(node, axis, -1), -2.0 / h),
                (self.offset(node, axis, -2), 0.5 / h),
            ])
        } else {
            Stencil::new(&[
                (self.offset(node, axis, -1), -0.5 / h),
                (self.offset(node, axis, 1), 0.5 / h),
            ])
        }
    }

    /// Second-derivative stencil along `axis`.
    pub fn d2_stencil(&self, node: usize, axis: usize) -> Stencil {
        let h = self.spacing(axis);
        let h2 = h * h;
        let i = self.index(node, axis);
        let last = self.shape[axis] - 1;
        if i == 0 {
            Stencil::new(&[
                (node, 2.0 / h2),
                (self.offset(node, axis, 1), -5.0 / h2),
                (self.offset(node, axis, 2), 4.0 / h2),
                (self.offset(node, axis, 3), -1.0 / h2),
            ])
        } else if i == last {
            Stencil::new(&[
                (node, 2.0 / h2),
                (self.offset(node, axis, -1), -5.0 / h2),
                (self.offset(node, axis, -2), 4.0 / h2),
                (self.offset(node, axis, -3), -1.0 / h2),
            ])
        } else {
            Stencil::new(&[
                (self.offset(node, axis, -1), 1.0 / h2),
                (node, -2.0 / h2),
                (self.offset(node, axis, 1), 1.0 / h2),
            ])
        }
    }

    #[inline]
    pub fn d1(&self, f: impl Fn(usize) -> f64, node: usize, axis: usize) -> f64 {
        self.d1_stencil(node, axis).apply(f)
    }

    #[inline]
    pub fn d2(&self, f: impl Fn(usize) -> f64, node: usize, axis: usize) -> f64 {
        self.d2_stencil(node, axis).apply(f)
    }

    /// Second derivative ∂²f/∂xᵃ∂xᵇ. Mixed derivatives are products of the
    /// two first-derivative stencils.
    pub fn d_second(&self, f: impl Fn(usize) -> f64, node: usize, a: usize, b: usize) -> f64 {
        if a == b {
            return self.d2(f, node, a);
        }
        let sa = self.d1_stencil(node, a);
        let mut acc = 0.0;
        for (na, wa) in sa.iter() {
            acc += wa * self.d1_stencil(na, b).apply(&f);
        }
        acc
    }

    /// Gradient of a scalar nodal field at every node.
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|k| (0..self.dim()).map(|a| self.d1(|j| f[j], k, a)).collect())
            .collect()
    }

    /// Product-trapezoid quadrature weights (including the cell volume).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                (0..self.dim())
                    .map(|a| {
                        let i = self.index(k, a);
                        let h = self.spacing(a);
                        if i == 0 || i == self.shape[a] - 1 {
                            0.5 * h
                        } else {
                            h
                        }
                    })
                    .product()
            })
            .collect()
    }

    /// Trapezoid-rule integral of a nodal field, summed in node order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.trapezoid_weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Multilinear interpolation of a nodal field; `None` outside the box.
    pub fn interpolate(&self, f: &[f64], p: &[f64]) -> Option<f64> {
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let h = self.spacing(a);
            let t = (p[a] - self.lower[a]) / h;
            let last = (self.shape[a] - 1) as f64;
            if !(t >= -1e-9 && t <= last + 1e-9) {
                return None;
            }
            let t = t.clamp(0.0, last);
            let i = (t.floor() as usize).min(self.shape[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut node = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                weight *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                node += (base[a] + bit) * self.stride(a);
            }
            if weight != 0.0 {
                acc += weight * f[node];
            }
        }
        Some(acc)
    }

    /// Node nearest to `p` (clamped into the box).
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((p[a] - self.lower[a]) / self.spacing(a)).round();
                t.clamp(0.0, (self.shape[a] - 1) as f64) as usize
            })
            .collect();
        self.node_of(&multi)
    }

    /// The same box with every axis refined to `2(N-1)+1` nodes.
    pub fn refined(&self) -> Grid {
        let shape = self.shape.iter().map(|&s| 2 * (s - 1) + 1).collect();
        Grid::new(self.lower.clone(), self.upper.clone(), shape).expect("refinement keeps a valid grid")
    }

    pub fn with_shape(&self, shape: Vec<usize>) -> Result<Grid> {
        Grid::new(self.lower.clone(), self.upper.clone(), shape)
    }
}
