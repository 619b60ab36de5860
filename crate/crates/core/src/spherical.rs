//! Quadrature on the unit sphere Ω ⊂ ℝⁿ and on equators Ω ∩ ξ⊥.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, pairwise_sum};
use crate::specfun::sphere_area;

/// Largest node count [`build_grid`] will allocate.
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// Resolution used when a caller does not choose one.
pub fn default_resolution(n: usize) -> usize {
    match n {
        0..=2 => 64,
        3 => 48,
        4 => 32,
        5 => 24,
        6 => 16,
        _ => 12,
    }
}

/// Product rule on S^{n−1} in hyperspherical angles: Gauss–Jacobi in the
/// cosine of each polar angle and the trapezoid rule in the azimuth.
///
/// With resolution r it integrates polynomials of total degree ≤ 2r − 1
/// exactly. Nodes come in antipodal pairs with identical weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    dimension: usize,
    resolution: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphericalGrid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the antipode of node `i`.
    pub fn antipode(&self, i: usize) -> usize {
        self.len() - 1 - i
    }
}

/// Node count of the product grid, or `None` on overflow.
pub fn grid_size(n: usize, resolution: usize) -> Option<usize> {
    let mut count = 2usize.checked_mul(resolution)?;
    for _ in 0..n.saturating_sub(2) {
        count = count.checked_mul(resolution)?;
    }
    Some(count)
}

pub fn build_grid(n: usize, resolution: usize) -> Result<SphericalGrid> {
    build_grid_with_budget(n, resolution, DEFAULT_NODE_BUDGET)
}

/// Builds the product grid, failing with a resource error when it would
/// exceed `budget` nodes.
pub fn build_grid_with_budget(n: usize, resolution: usize, budget: usize) -> Result<SphericalGrid> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension must be at least 2, got {n}")));
    }
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let requested = grid_size(n, resolution).unwrap_or(usize::MAX);
    if requested > budget {
        return Err(Error::Resource {
            requested,
            limit: budget,
        });
    }
    let r = resolution;
    let mut cos_phi = vec![0.0; 2 * r];
    let mut sin_phi = vec![0.0; 2 * r];
    for j in 0..r {
        let phi = (j as f64 + 0.5) * PI / r as f64;
        let (s, c) = phi.sin_cos();
        cos_phi[j] = c;
        sin_phi[j] = s;
        // position 2r−1−j holds the antipodal azimuth, so node len−1−i is −(node i)
        cos_phi[2 * r - 1 - j] = -c;
        sin_phi[2 * r - 1 - j] = -s;
    }
    // polar rules, outermost angle first; angle j carries weight (1−c²)^{(n−2−j)/2}
    let mut polar = Vec::with_capacity(n - 2);
    for j in 1..n - 1 {
        let a = (n - 2 - j) as f64 / 2.0;
        polar.push(gauss_jacobi(r, a, a)?);
    }
    let mut nodes = Vec::with_capacity(requested);
    let mut weights = Vec::with_capacity(requested);
    let mut idx = vec![0usize; n - 2];
    loop {
        let mut x = vec![0.0; n];
        let mut sin_prod = 1.0;
        let mut w = PI / r as f64;
        for (j, rule) in polar.iter().enumerate() {
            let c = rule.nodes[idx[j]];
            x[j] = sin_prod * c;
            sin_prod *= (1.0 - c * c).max(0.0).sqrt();
            w *= rule.weights[idx[j]];
        }
        for k in 0..2 * r {
            let mut y = x.clone();
            y[n - 2] = sin_prod * cos_phi[k];
            y[n - 1] = sin_prod * sin_phi[k];
            nodes.push(y);
            weights.push(w);
        }
        // odometer over polar indices, last angle fastest
        let mut pos = n - 2;
        loop {
            if pos == 0 {
                return Ok(SphericalGrid {
                    dimension: n,
                    resolution,
                    nodes,
                    weights,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < r {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `Σ wᵢ f(uᵢ)`, summed pairwise in node order.
pub fn quad_sphere<F>(f: F, grid: &SphericalGrid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = grid.nodes.par_iter().map(|u| f(u)).collect();
    weighted_sum(&values, &grid.weights)
}

fn weighted_sum(values: &[f64], weights: &[f64]) -> Result<f64> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let parts: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    Ok(pairwise_sum(&parts))
}

/// Values of a function at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SphericalFunction {
    grid: Arc<SphericalGrid>,
    values: Vec<f64>,
    even: bool,
}

impl SphericalFunction {
    /// Samples `f` at every node; with `even` set, antipodal values are
    /// averaged so that evenness holds exactly.
    pub fn sample<F>(grid: Arc<SphericalGrid>, f: F, even: bool) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = grid.nodes.par_iter().map(|u| f(u)).collect();
        Self::from_values(grid, values, even)
    }

    pub fn from_values(grid: Arc<SphericalGrid>, mut values: Vec<f64>, even: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if even {
            let len = values.len();
            for i in 0..len / 2 {
                let j = len - 1 - i;
                let m = 0.5 * (values[i] + values[j]);
                values[i] = m;
                values[j] = m;
            }
        }
        Ok(SphericalFunction { grid, values, even })
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn integral(&self) -> f64 {
        weighted_sum(&self.values, &self.grid.weights).expect("values are finite")
    }

    /// Smallest value and the node where it occurs.
    pub fn min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (i, v)| if *v < acc.0 { (*v, i) } else { acc })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `Σ wᵢ|fᵢ|`.
    pub fn l1_norm(&self) -> f64 {
        let parts: Vec<f64> = self
            .values
            .iter()
            .zip(&self.grid.weights)
            .map(|(v, w)| v.abs() * w)
            .collect();
        pairwise_sum(&parts)
    }
}

/// Self-contained serialized form of a [`SphericalFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub dimension: usize,
    pub resolution: usize,
    pub even: bool,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl SphericalFunction {
    pub fn to_record(&self) -> DensityRecord {
        DensityRecord {
            dimension: self.grid.dimension,
            resolution: self.grid.resolution,
            even: self.even,
            nodes: self.grid.nodes.clone(),
            weights: self.grid.weights.clone(),
            values: self.values.clone(),
        }
    }

    pub fn from_record(record: DensityRecord) -> Result<Self> {
        let n = record.dimension;
        if record.nodes.len() != record.weights.len() || record.nodes.iter().any(|u| u.len() != n) {
            return Err(Error::Parse("density record has inconsistent nodes".into()));
        }
        let grid = SphericalGrid {
            dimension: n,
            resolution: record.resolution,
            nodes: record.nodes,
            weights: record.weights,
        };
        let values = record.values;
        if values.len() != grid.len() {
            return Err(Error::Parse("density record has the wrong number of values".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SphericalFunction {
            grid: Arc::new(grid),
            values,
            even: record.even,
        })
    }
}

/// Orthonormal basis of ξ⊥ from the Householder reflection `I − 2vvᵀ/|v|²`,
/// `v = ξ + eₙ`, which sends eₙ to −ξ; its first n − 1 columns span ξ⊥.
/// At ξ = −eₙ the reflection degenerates and e₁, …, e_{n−1} are used.
#[derive(Debug, Clone, PartialEq)]
pub struct EquatorialFrame {
    xi: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl EquatorialFrame {
    pub fn new(xi: &[f64]) -> Result<Self> {
        let n = xi.len();
        if n < 2 {
            return Err(Error::Domain("direction must have at least 2 coordinates".into()));
        }
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("direction must be nonzero and finite".into()));
        }
        let xi: Vec<f64> = xi.iter().map(|v| v / norm).collect();
        let last = xi[n - 1];
        let rest: f64 = xi[..n - 1].iter().map(|v| v * v).sum();
        // 1 + ξₙ without cancellation near ξ = −eₙ
        let vn = if last >= 0.0 { 1.0 + last } else { rest / (1.0 - last) };
        let mut basis = Vec::with_capacity(n - 1);
        if rest == 0.0 && last < 0.0 {
            for j in 0..n - 1 {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                basis.push(e);
            }
        } else {
            let mut v = xi.clone();
            v[n - 1] = vn;
            let v2 = rest + vn * vn;
            for j in 0..n - 1 {
                let mut b: Vec<f64> = v.iter().map(|vi| -2.0 * v[j] * vi / v2).collect();
                b[j] += 1.0;
                basis.push(b);
            }
        }
        Ok(EquatorialFrame { xi, basis })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `Σ uⱼ bⱼ` for coordinates `u` in ξ⊥.
    pub fn map(&self, u: &[f64]) -> Vec<f64> {
        let n = self.xi.len();
        let mut x = vec![0.0; n];
        for (uj, b) in u.iter().zip(&self.basis) {
            for i in 0..n {
                x[i] += uj * b[i];
            }
        }
        x
    }
}

/// Integral over the equator Ω ∩ ξ⊥; for n = 2 the two-point sum over ±ξ⊥.
pub fn quad_equator<F>(f: F, xi: &[f64], resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let frame = EquatorialFrame::new(xi)?;
    let n = xi.len();
    if n == 2 {
        let b = &frame.basis[0];
        let minus: Vec<f64> = b.iter().map(|v| -v).collect();
        let values = [f(b), f(&minus)];
        return weighted_sum(&values, &[1.0, 1.0]);
    }
    let grid = build_grid(n - 1, resolution)?;
    quad_equator_on(&f, &frame, &grid)
}

/// As [`quad_equator`] with a prebuilt frame and (n−1)-dimensional grid.
pub fn quad_equator_on<F>(f: &F, frame: &EquatorialFrame, grid: &SphericalGrid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if grid.dimension() + 1 != frame.xi.len() {
        return Err(Error::Domain("equator grid has the wrong dimension".into()));
    }
    let values: Vec<f64> = grid
        .nodes
        .par_iter()
        .map(|u| f(&frame.map(u)))
        .collect();
    weighted_sum(&values, &grid.weights)
}

/// `∫_{Ω∩ξ⊥} xᵢxⱼ dx = σ_{n−2}/(n−1)·(δᵢⱼ − ξᵢξⱼ)` with zero-based indices.
pub fn equatorial_moment2(i: usize, j: usize, xi: &[f64], n: usize) -> Result<f64> {
    if xi.len() != n || i >= n || j >= n || n < 2 {
        return Err(Error::Domain("index or dimension mismatch".into()));
    }
    let norm2: f64 = xi.iter().map(|v| v * v).sum();
    if !(norm2 > 0.0) {
        return Err(Error::Domain("direction must be nonzero".into()));
    }
    let delta = if i == j { 1.0 } else { 0.0 };
    let area = if n == 2 { 2.0 } else { sphere_area(n - 1) };
    Ok(area / (n as f64 - 1.0) * (delta - xi[i] * xi[j] / norm2))
}

/// Rule for `∫_Ω |(θ,ξ)|^e f(θ) dθ`, e > −1, in the coordinates
/// `θ = tξ + √(1−t²)η`, `u = t²`: Gauss–Jacobi in u absorbs the factor
/// `u^{(e−1)/2}(1−u)^{(n−3)/2}` and a product grid covers η ∈ Ω ∩ ξ⊥.
///
/// For polynomial f of degree d the rule is exact once the radial node count
/// is at least d/4 + 1 and the equator resolution at least d/2 + 1.
#[derive(Debug, Clone)]
pub struct KernelRule {
    dimension: usize,
    exponent: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    equator: Option<SphericalGrid>,
}

impl KernelRule {
    pub fn new(n: usize, exponent: f64, radial_nodes: usize, equator_resolution: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
        }
        if !(exponent > -1.0) {
            return Err(Error::Domain(format!("kernel exponent must exceed -1, got {exponent}")));
        }
        let alpha = (n as f64 - 3.0) / 2.0;
        let beta = (exponent - 1.0) / 2.0;
        let rule = gauss_jacobi(radial_nodes, alpha, beta)?;
        let scale = 2f64.powf(-(alpha + beta + 1.0));
        let u = rule.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect();
        let w = rule.weights.iter().map(|w| w * scale).collect();
        let equator = if n > 2 {
            Some(build_grid(n - 1, equator_resolution)?)
        } else {
            None
        };
        Ok(KernelRule {
            dimension: n,
            exponent,
            u,
            w,
            equator,
        })
    }

    /// Rule exact for polynomials up to the given degree.
    pub fn for_degree(n: usize, exponent: f64, degree: u32) -> Result<Self> {
        let d = degree as usize;
        Self::new(n, exponent, d / 4 + 2, d / 2 + 2)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Number of function evaluations per application.
    pub fn len(&self) -> usize {
        let eq = self.equator.as_ref().map_or(2, |g| g.len());
        2 * self.u.len() * eq
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `∫_Ω |(θ,ξ)|^e f(θ) dθ`.
    pub fn apply<F>(&self, f: &F, xi: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if xi.len() != self.dimension {
            return Err(Error::Domain("direction has the wrong dimension".into()));
        }
        let frame = EquatorialFrame::new(xi)?;
        let xi = frame.xi().to_vec();
        let (eta, eta_w): (Vec<Vec<f64>>, Vec<f64>) = match &self.equator {
            Some(g) => (g.nodes.iter().map(|u| frame.map(u)).collect(), g.weights.clone()),
            None => {
                let b = frame.basis[0].clone();
                let m: Vec<f64> = b.iter().map(|v| -v).collect();
                (vec![b, m], vec![1.0, 1.0])
            }
        };
        let n = self.dimension;
        let mut parts = Vec::with_capacity(self.u.len());
        for (u, w) in self.u.iter().zip(&self.w) {
            let t = u.sqrt();
            let s = (1.0 - u).max(0.0).sqrt();
            let vals: Vec<f64> = eta
                .par_iter()
                .map(|e| {
                    let mut plus = vec![0.0; n];
                    let mut minus = vec![0.0; n];
                    for i in 0..n {
                        plus[i] = t * xi[i] + s * e[i];
                        minus[i] = -t * xi[i] + s * e[i];
                    }
                    f(&plus) + f(&minus)
                })
                .collect();
            parts.push(0.5 * w * weighted_sum(&vals, &eta_w)?);
        }
        Ok(pairwise_sum(&parts))
    }
}

/// Local minimizer of `f` on the unit sphere by compass search in the
/// tangent plane, starting from `start` with initial step `step`.
pub fn minimize_on_sphere<F>(f: F, start: &[f64], step: f64, min_step: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let normalize = |v: Vec<f64>| -> Vec<f64> {
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / r).collect()
    };
    let mut x = normalize(start.to_vec());
    let mut fx = f(&x);
    let mut h = step;
    let mut guard = 0;
    while h > min_step && guard < 100_000 {
        guard += 1;
        let frame = match EquatorialFrame::new(&x) {
            Ok(fr) => fr,
            Err(_) => break,
        };
        let mut best: Option<(Vec<f64>, f64)> = None;
        for b in frame.basis() {
            for sgn in [1.0, -1.0] {
                let y = normalize(x.iter().zip(b).map(|(a, c)| a + sgn * h * c).collect());
                let fy = f(&y);
                if fy < best.as_ref().map_or(fx, |bb| bb.1) {
                    best = Some((y, fy));
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => h *= 0.5,
        }
    }
    (x, fx)
}
