//! Isometric embedding into L_q through the sign of the generating density,
//! and the range of λ for which `r + λP` embeds.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{RadialPolySum, SpherePoly, StarBodySpec};
use crate::representation::{
    invert, laplacian_on_sphere, noninteger_indices, route_for, BLRepresentation, Generator, InversionReport,
    Source,
};
use crate::specfun::c_constant;
use crate::spherical::{build_grid, default_resolution, minimize_on_sphere, SphericalFunction, SphericalGrid};

pub const DEFAULT_EMBED_TOLERANCE: f64 = 1e-8;
pub const FORWARD_CHECK_DIRECTIONS: usize = 50;
pub const FORWARD_CHECK_TOLERANCE: f64 = 1e-5;
const FORWARD_CHECK_SEED: u64 = 0x5eed_0f0f;

#[derive(Debug, Clone)]
pub struct EmbeddingVerdict {
    pub embeds: bool,
    /// Minimum of b over the sphere (grid minimum refined by local search);
    /// NaN when no density exists.
    pub margin: f64,
    pub margin_location: Vec<f64>,
    pub certificate: Option<SphericalFunction>,
    pub route: Source,
    /// Largest relative forward-representation error on the check directions.
    pub residual: f64,
    pub tolerance: f64,
    /// b vanishes identically.
    pub zero_density: bool,
    /// Set when `Δᵏ‖x‖^q` is not a function on the sphere, so no density exists.
    pub singular: Option<String>,
    pub report: Option<InversionReport>,
}

/// Seeded random unit vectors.
pub fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 1e-12 {
                break v.iter().map(|x| x / r).collect();
            }
        })
        .collect()
}

/// `max |forward(x) − ‖x‖^q| / ‖x‖^q` over seeded random directions.
pub fn forward_residual(rep: &BLRepresentation, body: &StarBodySpec, count: usize, seed: u64) -> Result<f64> {
    let dirs = random_directions(body.dimension(), count, seed);
    let errs: Vec<Result<f64>> = dirs
        .par_iter()
        .map(|u| {
            let target = body.norm(u)?.powf(rep.q());
            Ok((rep.forward(u)? - target).abs() / target)
        })
        .collect();
    errs.into_iter().try_fold(0.0f64, |a, e| Ok(a.max(e?)))
}

/// Minimum of a density, refined from the best grid node.
fn density_minimum(report: &InversionReport) -> (f64, Vec<f64>) {
    let b = &report.density;
    let (grid_min, i) = b.min();
    let start = b.grid().nodes()[i].clone();
    let model = report.representation.density();
    let (u, v) = minimize_on_sphere(|x| model.eval(x).unwrap_or(f64::INFINITY), &start, 0.05, 1e-10);
    if v < grid_min {
        (v, u)
    } else {
        (grid_min, start)
    }
}

/// Inverts `‖x‖^q` and decides embeddability into L_q from the sign of b.
pub fn check_embedding(body: &StarBodySpec, q: f64, grid: Arc<SphericalGrid>) -> Result<EmbeddingVerdict> {
    check_embedding_with(body, q, grid, DEFAULT_EMBED_TOLERANCE)
}

pub fn check_embedding_with(
    body: &StarBodySpec,
    q: f64,
    grid: Arc<SphericalGrid>,
    tolerance: f64,
) -> Result<EmbeddingVerdict> {
    let n = body.dimension();
    let route = route_for(q, n)?;
    let report = match invert(body, q, grid) {
        Ok(r) => r,
        Err(Error::Singularity(msg)) => {
            return Ok(EmbeddingVerdict {
                embeds: false,
                margin: f64::NAN,
                margin_location: Vec::new(),
                certificate: None,
                route,
                residual: f64::NAN,
                tolerance,
                zero_density: false,
                singular: Some(msg),
                report: None,
            })
        }
        Err(e) => return Err(e),
    };
    let scale = report.density.max_abs();
    let (margin, margin_location) = density_minimum(&report);
    let zero_density = scale == 0.0;
    let residual = forward_residual(&report.representation, body, FORWARD_CHECK_DIRECTIONS, FORWARD_CHECK_SEED)?;
    let nonnegative = margin >= -tolerance * scale;
    if nonnegative && !zero_density && !(residual <= FORWARD_CHECK_TOLERANCE) {
        return Err(Error::Convergence(format!(
            "density fails the forward check (relative residual {residual:e})"
        )));
    }
    Ok(EmbeddingVerdict {
        embeds: nonnegative && !zero_density,
        margin,
        margin_location,
        certificate: Some(report.density.clone()),
        route,
        residual,
        tolerance,
        zero_density,
        singular: None,
        report: Some(report),
    })
}

/// Pointwise sign test on `Δᵏ‖x‖^q` that implies a non-negative density.
pub fn sufficient_condition(body: &StarBodySpec, q: f64, n: usize) -> Result<bool> {
    if body.dimension() != n {
        return Err(Error::Domain("body dimension does not match n".into()));
    }
    let route = route_for(q, n)?;
    let (k, sign_factor) = match route {
        Source::NonInteger => {
            let (k, e) = noninteger_indices(n, q);
            (k, 1.0 / (c_constant(e)? * c_constant(q)?))
        }
        _ => {
            let k = (n + q as usize - 1) / 2;
            (k, 1.0 / c_constant(q)?)
        }
    };
    let s = if k % 2 == 0 { sign_factor } else { -sign_factor };
    let r = match laplacian_on_sphere(&Generator::for_body(body, q), q, k) {
        Ok((r, _)) => r,
        Err(Error::Singularity(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    if r.is_zero() {
        return Ok(false);
    }
    let grid = build_grid(n, default_resolution(n).min(16))?;
    let signed: Vec<f64> = grid.nodes().iter().map(|u| s * r.eval(u)).collect();
    let scale = signed.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (i, lo) = signed
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let (_, refined) = minimize_on_sphere(|u| s * r.eval(u), &grid.nodes()[i], 0.05, 1e-10);
    Ok(lo.min(refined) >= -1e-12 * scale)
}

/// `(n−3)!!(n−1)!!/‖(Δ^{n/2}P)|_Ω‖∞` for even n; for |λ| below it the
/// perturbation `r + λP` embeds in L₁.
pub fn double_factorial_radius(poly: &RadialPolySum) -> Result<f64> {
    let n = poly.dimension();
    if n % 2 == 1 {
        return Err(Error::Parity("the double-factorial radius needs even n".into()));
    }
    let df = |m: i64| -> f64 { (1..=m).rev().step_by(2).map(|v| v as f64).product() };
    let numerator = df(n as i64 - 3) * df(n as i64 - 1);
    let r = poly.iterated_laplacian(n / 2).restrict_to_sphere();
    let sup = sphere_sup(&r)?;
    if sup == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(numerator / sup)
}

/// `max |p|` on the sphere.
pub fn sphere_sup(p: &SpherePoly) -> Result<f64> {
    let n = p.dimension();
    let grid = build_grid(n, default_resolution(n).min(16))?;
    let (i, best) = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, u)| (i, p.eval(u).abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (_, refined) = minimize_on_sphere(|u| -p.eval(u).abs(), &grid.nodes()[i], 0.05, 1e-12);
    Ok(best.max(-refined))
}

/// Closed λ-interval; infinite ends are unbounded, `lower > upper` is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl LambdaInterval {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower <= lambda && lambda <= self.upper
    }
}

#[derive(Debug, Clone)]
pub struct LambdaRange {
    pub interval: LambdaInterval,
    pub route: Source,
    /// Largest departure of b(λ) from b₀ + λb₁ at the check value, relative to max |b₀|.
    pub affinity_deviation: f64,
    /// Largest relative forward error over λ sampled across the interval.
    pub forward_residual: f64,
    pub base: InversionReport,
    pub shifted: InversionReport,
    /// λ at which `shifted` was inverted.
    pub step: f64,
    pub lower_witness: Option<Vec<f64>>,
    pub upper_witness: Option<Vec<f64>>,
}

impl LambdaRange {
    /// `b(λ)(ξ) = b₀(ξ) + λ b₁(ξ)`.
    pub fn density_at(&self, lambda: f64, xi: &[f64]) -> Result<f64> {
        let (b0, b1) = self.parts(xi)?;
        Ok(b0 + lambda * b1)
    }

    /// `(b₀(ξ), b₁(ξ))`.
    pub fn parts(&self, xi: &[f64]) -> Result<(f64, f64)> {
        let b0 = self.base.representation.density().eval(xi)?;
        let bs = self.shifted.representation.density().eval(xi)?;
        Ok((b0, (bs - b0) / self.step))
    }

    /// Forward value of b(λ) at x.
    pub fn forward_at(&self, lambda: f64, x: &[f64]) -> Result<f64> {
        let f0 = self.base.representation.forward(x)?;
        let fs = self.shifted.representation.forward(x)?;
        Ok(f0 + lambda * (fs - f0) / self.step)
    }
}

/// Values of λ for which the density of `(r + λP)^q` is non-negative.
pub fn lambda_range_perturbed(poly: &RadialPolySum, q: f64, grid: Arc<SphericalGrid>) -> Result<LambdaRange> {
    let n = poly.dimension();
    let route = route_for(q, n)?;
    let sup = if poly.is_zero() {
        0.0
    } else {
        sphere_sup(&poly.restrict_to_sphere())?
    };
    let step = if sup > 0.0 { (0.5 / sup).min(1.0) } else { 1.0 };
    let body_at = |lambda: f64| StarBodySpec::perturbed(lambda, poly.clone());
    let base = invert(&body_at(0.0)?, q, Arc::clone(&grid))?;
    let shifted = invert(&body_at(step)?, q, Arc::clone(&grid))?;
    let check_lambda = -0.37 * step;
    let check = invert(&body_at(check_lambda)?, q, Arc::clone(&grid))?;
    let b0 = base.density.values();
    let bs = shifted.density.values();
    let b1: Vec<f64> = b0.iter().zip(bs).map(|(a, s)| (s - a) / step).collect();
    let scale = b0.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let affinity_deviation = check
        .density
        .values()
        .iter()
        .zip(b0.iter().zip(&b1))
        .map(|(c, (a, d))| (c - a - check_lambda * d).abs())
        .fold(0.0f64, f64::max)
        / scale;
    if affinity_deviation > 1e-6 {
        return Err(Error::NonAffine(affinity_deviation));
    }

    let slope_floor = 1e-13 * scale;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut lower_node = None;
    let mut upper_node = None;
    let mut empty = false;
    for (i, (a, d)) in b0.iter().zip(&b1).enumerate() {
        if d.abs() <= slope_floor {
            if *a < -DEFAULT_EMBED_TOLERANCE * scale {
                empty = true;
            }
            continue;
        }
        let t = -a / d;
        if *d > 0.0 {
            if t > lower {
                lower = t;
                lower_node = Some(i);
            }
        } else if t < upper {
            upper = t;
            upper_node = Some(i);
        }
    }

    let mut range = LambdaRange {
        interval: LambdaInterval { lower, upper },
        route,
        affinity_deviation,
        forward_residual: 0.0,
        base,
        shifted,
        step,
        lower_witness: None,
        upper_witness: None,
    };

    // between grid nodes the binding constraint can be slightly tighter
    let nodes = grid.nodes();
    if let Some(i) = upper_node {
        let crossing = |u: &[f64]| match range.parts(u) {
            Ok((a, d)) if d < -slope_floor => -a / d,
            _ => f64::INFINITY,
        };
        let (u, v) = minimize_on_sphere(crossing, &nodes[i], 0.05, 1e-12);
        if v < range.interval.upper {
            range.interval.upper = v;
            range.upper_witness = Some(u);
        } else {
            range.upper_witness = Some(nodes[i].clone());
        }
    }
    if let Some(i) = lower_node {
        let crossing = |u: &[f64]| match range.parts(u) {
            Ok((a, d)) if d > slope_floor => a / d,
            _ => f64::INFINITY,
        };
        let (u, v) = minimize_on_sphere(crossing, &nodes[i], 0.05, 1e-12);
        if -v > range.interval.lower {
            range.interval.lower = -v;
            range.lower_witness = Some(u);
        } else {
            range.lower_witness = Some(nodes[i].clone());
        }
    }
    if empty {
        range.interval = LambdaInterval {
            lower: f64::INFINITY,
            upper: f64::NEG_INFINITY,
        };
    }
    range.forward_residual = lambda_forward_residual(&range, poly, q)?;
    Ok(range)
}

/// Forward error of b(λ) for λ spread over the interval (clamped to bodies
/// that stay star-shaped).
fn lambda_forward_residual(range: &LambdaRange, poly: &RadialPolySum, q: f64) -> Result<f64> {
    let LambdaInterval { lower, upper } = range.interval;
    if lower > upper {
        return Ok(0.0);
    }
    let lo = if lower.is_finite() { lower } else { -range.step };
    let hi = if upper.is_finite() { upper } else { range.step };
    let n = poly.dimension();
    let dirs = random_directions(n, FORWARD_CHECK_DIRECTIONS, FORWARD_CHECK_SEED);
    let mut worst = 0.0f64;
    for j in 0..=10 {
        let lambda = lo + (hi - lo) * j as f64 / 10.0;
        let body = match StarBodySpec::perturbed(lambda, poly.clone()) {
            Ok(b) => b,
            Err(_) => continue,
        };
        for u in &dirs {
            let target = body.norm(u)?.powf(q);
            let e = (range.forward_at(lambda, u)? - target).abs() / target;
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize, r: usize) -> Arc<SphericalGrid> {
        Arc::new(build_grid(n, r).unwrap())
    }

    #[test]
    fn euclidean_embeds() {
        for (n, q) in [(3usize, 0.5), (4, 1.0), (3, 1.5)] {
            let body = StarBodySpec::euclidean(n).unwrap();
            let v = check_embedding(&body, q, grid(n, 6)).unwrap();
            assert!(v.embeds);
            assert!(v.margin > 0.0);
            assert!(v.residual < 1e-10);
            assert!(sufficient_condition(&body, q, n).unwrap());
        }
    }

    #[test]
    fn dispatch_errors() {
        let body = StarBodySpec::euclidean(3).unwrap();
        assert!(matches!(check_embedding(&body, 1.0, grid(3, 4)), Err(Error::UnsupportedParity)));
        assert!(matches!(check_embedding(&body, 2.0, grid(3, 4)), Err(Error::EvenIntegerQ(_))));
    }

    #[test]
    fn cube_has_no_density() {
        let cube = StarBodySpec::cube(4).unwrap();
        let v = check_embedding(&cube, 1.0, grid(4, 4)).unwrap();
        assert!(!v.embeds);
        assert!(v.singular.is_some());
        assert!(!sufficient_condition(&cube, 1.0, 4).unwrap());
    }

    #[test]
    fn l4_ball_is_not_certified() {
        let body = StarBodySpec::lp_ball(4.0, 4).unwrap();
        let v = check_embedding(&body, 1.0, grid(4, 8));
        match v {
            Ok(v) => assert!(!v.embeds && v.margin < 0.0, "{}", v.margin),
            Err(e) => assert!(matches!(e, Error::Convergence(_)), "{e}"),
        }
    }

    #[test]
    fn example_one_interval() {
        let poly = RadialPolySum::single(4, 1.0, vec![2, 0, 0, 0], -1.0);
        let range = lambda_range_perturbed(&poly, 1.0, grid(4, 6)).unwrap();
        assert!((range.interval.lower + 0.25).abs() < 1e-9, "{:?}", range.interval);
        assert!((range.interval.upper - 1.0).abs() < 1e-9, "{:?}", range.interval);
        assert!(range.forward_residual < 1e-6);
        assert!(range.affinity_deviation < 1e-10);
        let radius = double_factorial_radius(&poly).unwrap();
        assert!((radius - 3.0 / 33.0).abs() < 1e-12);
        assert!(range.interval.contains(radius) && range.interval.contains(-radius));
    }

    #[test]
    fn zero_perturbation_is_unbounded() {
        let range = lambda_range_perturbed(&RadialPolySum::zero(4), 1.0, grid(4, 4)).unwrap();
        assert_eq!(range.interval.lower, f64::NEG_INFINITY);
        assert_eq!(range.interval.upper, f64::INFINITY);
    }

    #[test]
    fn example_two_inside_bound() {
        let poly = RadialPolySum::single(4, 1.0, vec![2, 2, 0, 0], -3.0);
        let radius = double_factorial_radius(&poly).unwrap();
        for lambda in [-0.99 * radius, 0.5 * radius, 0.99 * radius] {
            let body = StarBodySpec::perturbed(lambda, poly.clone()).unwrap();
            assert!(sufficient_condition(&body, 1.0, 4).unwrap());
            assert!(check_embedding(&body, 1.0, grid(4, 6)).unwrap().embeds);
        }
    }

    #[test]
    fn far_outside_interval_does_not_embed() {
        let body = StarBodySpec::perturbed_from_text(-0.6, 4, "x1^2").unwrap();
        let v = check_embedding(&body, 1.0, grid(4, 6)).unwrap();
        assert!(!v.embeds && v.margin < 0.0);
        assert!(!sufficient_condition(&body, 1.0, 4).unwrap());
    }

    #[test]
    fn interval_scale_invariance() {
        // scaling every density by a positive constant moves no crossing point
        let poly = RadialPolySum::single(4, 1.0, vec![2, 0, 0, 0], -1.0);
        let range = lambda_range_perturbed(&poly, 1.0, grid(4, 6)).unwrap();
        let u = range.upper_witness.clone().unwrap();
        let (a, d) = range.parts(&u).unwrap();
        let (a2, d2) = (3.7 * a, 3.7 * d);
        assert!(((-a2 / d2) - range.interval.upper).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn sufficient_implies_embeds(lambda in -0.5f64..0.5, which in 0usize..3) {
            let text = ["x1^2", "x1^2*x2^2", "x1^4"][which];
            let body = match StarBodySpec::perturbed_from_text(lambda, 4, text) {
                Ok(b) => b,
                Err(_) => return Ok(()),
            };
            if sufficient_condition(&body, 1.0, 4).unwrap() {
                prop_assert!(check_embedding(&body, 1.0, grid(4, 6)).unwrap().embeds);
            }
        }
    }
}
