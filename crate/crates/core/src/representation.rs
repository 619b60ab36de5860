//! Generating densities of `‖x‖^q = ∫_Ω |(x,ξ)|^q b(ξ) dξ`: the forward
//! operator, inversion through iterated Laplacians of `‖x‖^q`, and Fourier
//! transforms of even homogeneous functions of low degree.
//!
//! When `Δᵏ‖x‖^q` restricted to the sphere is a polynomial R, the density is
//! `b(ξ) = c·∫_Ω |(θ,ξ)|^e R(θ) dθ` (non-integer q) or `b(ξ) = c·∫_{Ω∩ξ⊥} R`
//! (odd q, even n). Both transforms map polynomials of degree d on the sphere
//! to polynomials of degree ≤ d, so b is evaluated exactly at any ξ by rules
//! sized from d, and so is the forward operator applied to b.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;
use crate::radial::{fit_homogeneous, RadialPolySum, RadialPolyTerm, SpherePoly, StarBodySpec};
use crate::specfun::{c_constant, is_even_integer, sphere_area, w_constant};
use crate::spherical::{
    build_grid, equatorial_moment2, minimize_on_sphere, quad_equator, quad_equator_on, EquatorialFrame,
    KernelRule, SphericalFunction, SphericalGrid,
};

/// Which inversion formula produced a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Cosine-type transform of `Δᵏ‖x‖^q`, q not an integer.
    NonInteger,
    /// Equatorial integral of `Δ^{(n+q−1)/2}‖x‖^q`, q odd and n even.
    OddEven,
    Analytic,
    User,
}

/// A density on Ω, either evaluable at any direction or sampled on a grid.
#[derive(Debug, Clone)]
pub enum DensityModel {
    /// `b(ξ) = poly(ξ)`.
    Polynomial(SpherePoly),
    /// `b(ξ) = prefactor · ∫_Ω |(θ,ξ)|^exponent integrand(θ) dθ`.
    CosineTransform {
        prefactor: f64,
        exponent: f64,
        integrand: SpherePoly,
        rule: Arc<KernelRule>,
    },
    /// `b(ξ) = prefactor · ∫_{Ω∩ξ⊥} integrand(θ) dθ`.
    EquatorialTransform {
        prefactor: f64,
        integrand: SpherePoly,
        grid: Option<Arc<SphericalGrid>>,
    },
    /// Values at grid nodes only.
    Sampled(SphericalFunction),
}

impl DensityModel {
    pub fn cosine_transform(prefactor: f64, exponent: f64, integrand: SpherePoly) -> Result<Self> {
        let n = integrand.dimension();
        let rule = KernelRule::for_degree(n, exponent, integrand.degree())?;
        Ok(DensityModel::CosineTransform {
            prefactor,
            exponent,
            integrand,
            rule: Arc::new(rule),
        })
    }

    pub fn equatorial_transform(prefactor: f64, integrand: SpherePoly) -> Result<Self> {
        let n = integrand.dimension();
        let grid = if n > 2 && integrand.degree() > 2 {
            Some(Arc::new(build_grid(n - 1, integrand.degree() as usize / 2 + 2)?))
        } else {
            None
        };
        Ok(DensityModel::EquatorialTransform {
            prefactor,
            integrand,
            grid,
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            DensityModel::Polynomial(p) => p.dimension(),
            DensityModel::CosineTransform { integrand, .. } => integrand.dimension(),
            DensityModel::EquatorialTransform { integrand, .. } => integrand.dimension(),
            DensityModel::Sampled(f) => f.grid().dimension(),
        }
    }

    /// Polynomial degree of b on the sphere, `None` for sampled densities.
    pub fn degree(&self) -> Option<u32> {
        match self {
            DensityModel::Polynomial(p) => Some(p.degree()),
            DensityModel::CosineTransform { integrand, .. } => Some(integrand.degree()),
            DensityModel::EquatorialTransform { integrand, .. } => Some(integrand.degree()),
            DensityModel::Sampled(_) => None,
        }
    }

    /// `b(ξ)` for a nonzero ξ (normalized internally).
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        match self {
            DensityModel::Polynomial(p) => Ok(p.eval(&unit(xi)?)),
            DensityModel::CosineTransform {
                prefactor,
                integrand,
                rule,
                ..
            } => Ok(prefactor * rule.apply(&|t: &[f64]| integrand.eval(t), xi)?),
            DensityModel::EquatorialTransform {
                prefactor,
                integrand,
                grid,
            } => {
                let n = integrand.dimension();
                let value = match grid {
                    Some(g) => {
                        let frame = EquatorialFrame::new(xi)?;
                        quad_equator_on(&|t: &[f64]| integrand.eval(t), &frame, g)?
                    }
                    None if n == 2 => quad_equator(|t| integrand.eval(t), xi, 1)?,
                    None => equatorial_quadratic(integrand, xi)?,
                };
                Ok(prefactor * value)
            }
            DensityModel::Sampled(_) => Err(Error::Domain(
                "a sampled density has values at its grid nodes only".into(),
            )),
        }
    }

    /// Values of b at the nodes of `grid`.
    pub fn on_grid(&self, grid: Arc<SphericalGrid>) -> Result<SphericalFunction> {
        if let DensityModel::Sampled(f) = self {
            if *f.grid() == *grid {
                return Ok(f.clone());
            }
            return Err(Error::Domain("sampled density lives on a different grid".into()));
        }
        let values: Vec<Result<f64>> = grid.nodes().par_iter().map(|u| self.eval(u)).collect();
        let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
        SphericalFunction::from_values(grid, values, true)
    }
}

/// Closed-form equatorial integral of a polynomial of degree ≤ 2.
fn equatorial_quadratic(p: &SpherePoly, xi: &[f64]) -> Result<f64> {
    let n = p.dimension();
    let area = sphere_area(n - 1);
    let mut parts = Vec::with_capacity(p.terms().len());
    for (c, e) in p.terms() {
        let nz: Vec<usize> = (0..n).filter(|&i| e[i] > 0).collect();
        let deg: u32 = e.iter().sum();
        let v = match (deg, nz.as_slice()) {
            (0, _) => area,
            (2, [i]) => equatorial_moment2(*i, *i, xi, n)?,
            (2, [i, j]) => equatorial_moment2(*i, *j, xi, n)?,
            (d, _) if d % 2 == 1 => 0.0,
            _ => return Err(Error::Domain("closed form covers degree ≤ 2 only".into())),
        };
        parts.push(c * v);
    }
    Ok(pairwise_sum(&parts))
}

fn unit(x: &[f64]) -> Result<Vec<f64>> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("direction must be nonzero and finite".into()));
    }
    Ok(x.iter().map(|v| v / r).collect())
}

/// `‖x‖^q = ∫_Ω |(x,ξ)|^q b(ξ) dξ` with its exponent, dimension and density.
#[derive(Debug, Clone)]
pub struct BLRepresentation {
    q: f64,
    n: usize,
    density: DensityModel,
    source: Source,
    forward_rule: Option<Arc<KernelRule>>,
}

impl BLRepresentation {
    pub fn new(q: f64, density: DensityModel, source: Source) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("exponent must be positive, got {q}")));
        }
        if is_even_integer(q) {
            return Err(Error::EvenIntegerQ(q));
        }
        let n = density.dimension();
        let forward_rule = match density.degree() {
            Some(d) => Some(Arc::new(KernelRule::for_degree(n, q, d)?)),
            None => None,
        };
        Ok(BLRepresentation {
            q,
            n,
            density,
            source,
            forward_rule,
        })
    }

    /// The density `b ≡ value`.
    pub fn constant(q: f64, n: usize, value: f64) -> Result<Self> {
        let p = SpherePoly::from_terms(n, vec![(value, vec![0; n])])?;
        Self::new(q, DensityModel::Polynomial(p), Source::Analytic)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn density(&self) -> &DensityModel {
        &self.density
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// `∫_Ω |(x,ξ)|^q b(ξ) dξ`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Domain("point has the wrong dimension".into()));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Ok(0.0);
        }
        match (&self.density, &self.forward_rule) {
            (DensityModel::Sampled(f), _) => {
                let q = self.q;
                let parts: Vec<f64> = f
                    .grid()
                    .nodes()
                    .iter()
                    .zip(f.grid().weights())
                    .zip(f.values())
                    .map(|((u, w), b)| {
                        let dot: f64 = u.iter().zip(x).map(|(a, c)| a * c).sum();
                        w * b * dot.abs().powf(q)
                    })
                    .collect();
                Ok(pairwise_sum(&parts))
            }
            (model, Some(rule)) => {
                let v = rule.apply(&|xi: &[f64]| model.eval(xi).unwrap_or(f64::NAN), x)?;
                Ok(v * r.powf(self.q))
            }
            (_, None) => unreachable!("evaluable densities always carry a forward rule"),
        }
    }
}

/// `‖x‖^q` as a closed-form radial sum when possible, otherwise as a callable.
#[derive(Debug, Clone)]
pub enum Generator {
    Symbolic(RadialPolySum),
    Numeric(StarBodySpec),
}

impl Generator {
    /// Picks the symbolic form for Euclidean bodies and for integer powers of
    /// perturbed Euclidean norms.
    pub fn for_body(body: &StarBodySpec, q: f64) -> Generator {
        let n = body.dimension();
        match body {
            StarBodySpec::LpBall { p, .. } if *p == 2.0 => {
                Generator::Symbolic(RadialPolySum::radial(n, 1.0, q))
            }
            StarBodySpec::PerturbedEuclidean { lambda, poly } if q == q.round() && q >= 1.0 => {
                let h = RadialPolySum::radial(n, 1.0, 1.0).add(&poly.scale(*lambda));
                Generator::Symbolic(h.powi(q as u32))
            }
            _ => Generator::Numeric(body.clone()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Generator::Symbolic(s) => s.dimension(),
            Generator::Numeric(b) => b.dimension(),
        }
    }
}

/// How `Δᵏ‖x‖^q` on the sphere was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum LaplacianMethod {
    Symbolic,
    /// Iterated central differences with Richardson extrapolation, then a
    /// least-squares polynomial fit on the sphere.
    FiniteDifference {
        step: f64,
        /// Largest gap between two Richardson levels relative to max |R|.
        richardson_gap: f64,
        /// Largest fit residual relative to max |R|.
        fit_residual: f64,
        fit_degree: u32,
    },
}

/// Number of Laplacians `k` and kernel exponent `e = −n − q + 2k ∈ (−1, 1]`
/// for non-integer q.
pub fn noninteger_indices(n: usize, q: f64) -> (usize, f64) {
    let s = n + q.floor() as usize;
    let k = if s % 2 == 0 { s / 2 } else { (s + 1) / 2 };
    (k, -(n as f64) - q + 2.0 * k as f64)
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Integer coefficients of the k-fold five-point-per-axis Laplacian stencil.
fn laplacian_stencil(n: usize, k: usize) -> Vec<(Vec<i32>, f64)> {
    let mut cur: HashMap<Vec<i32>, f64> = HashMap::new();
    cur.insert(vec![0; n], 1.0);
    for _ in 0..k {
        let mut next: HashMap<Vec<i32>, f64> = HashMap::new();
        for (off, c) in &cur {
            for i in 0..n {
                for (d, w) in [(-1, 1.0), (0, -2.0), (1, 1.0)] {
                    let mut o = off.clone();
                    o[i] += d;
                    *next.entry(o).or_insert(0.0) += c * w;
                }
            }
        }
        next.retain(|_, c| *c != 0.0);
        cur = next;
    }
    let mut out: Vec<(Vec<i32>, f64)> = cur.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn numeric_laplacian_on_sphere(body: &StarBodySpec, q: f64, k: usize) -> Result<(SpherePoly, LaplacianMethod)> {
    numeric_laplacian_with_step(body, q, k, None)
}

fn numeric_laplacian_with_step(
    body: &StarBodySpec,
    q: f64,
    k: usize,
    step: Option<f64>,
) -> Result<(SpherePoly, LaplacianMethod)> {
    let n = body.dimension();
    if let Some(p) = body.lp_exponent() {
        if p.is_infinite() {
            return Err(Error::Singularity(
                "the cube norm is piecewise linear; its iterated Laplacian is a measure on the kinks".into(),
            ));
        }
    }
    if k == 0 {
        return Err(Error::Domain("at least one Laplacian is required".into()));
    }
    let stencil = laplacian_stencil(n, k);
    let mass: f64 = stencil.iter().map(|s| s.1.abs()).sum();
    // balance round-off ε·mass/h^{2k} against the h⁴ Richardson remainder
    let h = step.unwrap_or_else(|| (0.22 * (f64::EPSILON * mass).powf(1.0 / (2.0 * k as f64 + 6.0))).min(0.125 / k as f64));
    let f = |x: &[f64]| body.norm(x).map(|v| v.powf(q)).unwrap_or(f64::NAN);
    let apply = |x: &[f64], step: f64| -> f64 {
        let parts: Vec<f64> = stencil
            .iter()
            .map(|(o, c)| {
                let y: Vec<f64> = x.iter().zip(o).map(|(a, d)| a + step * *d as f64).collect();
                c * f(&y)
            })
            .collect();
        pairwise_sum(&parts) / step.powi(2 * k as i32)
    };
    let max_degree: u32 = match n {
        2 => 24,
        3 => 16,
        4 => 12,
        5 => 8,
        6 => 6,
        _ => 4,
    };
    // exact for products of two fitted polynomials, so the fit is unisolvent
    let grid = build_grid(n, max_degree as usize + 1)?;
    let half = &grid.nodes()[..grid.len() / 2];
    let samples: Vec<(f64, f64)> = half
        .par_iter()
        .map(|x| {
            let a1 = apply(x, h);
            let a2 = apply(x, 2.0 * h);
            let a4 = apply(x, 4.0 * h);
            let fourth = (4.0 * a1 - a2) / 3.0;
            let sixth = (64.0 * a1 - 20.0 * a2 + a4) / 45.0;
            (sixth, (sixth - fourth).abs())
        })
        .collect();
    if samples.iter().any(|s| !s.0.is_finite()) {
        return Err(Error::Singularity("numerical Laplacian is not finite on the sphere".into()));
    }
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let gap = samples.iter().fold(0.0f64, |a, s| a.max(s.1)) / scale;
    let f_max = half.iter().map(|x| f(x).abs()).fold(0.0f64, f64::max);
    let spread = stencil.iter().map(|s| s.1 * s.1).sum::<f64>().sqrt();
    let noise = 2.0 * f64::EPSILON * spread * f_max / h.powi(2 * k as i32) / scale;
    if noise > 1e-5 {
        return Err(Error::Convergence(format!(
            "{k}-fold differences lose precision (round-off {noise:e} relative)"
        )));
    }
    let tol = 1e-4f64.max(10.0 * noise);
    if gap > tol {
        return Err(Error::Singularity(format!(
            "Richardson levels disagree by {gap:e} relative; the iterated Laplacian is not smooth on the sphere"
        )));
    }
    let mut best: Option<(Vec<(f64, Vec<u32>)>, f64, u32)> = None;
    let mut d = 0;
    while d <= max_degree {
        let (terms, resid) = fit_homogeneous(n, d, half, &values)?;
        let rel = resid / scale;
        if best.as_ref().is_none_or(|b| rel < b.1) {
            best = Some((terms, rel, d));
        }
        if rel <= 1e-10 {
            break;
        }
        d += 2;
    }
    let (terms, rel, degree) = best.expect("at least one fit");
    if rel > tol {
        return Err(Error::Convergence(format!(
            "iterated Laplacian is smooth but not resolved by polynomials of degree ≤ {max_degree} (residual {rel:e})"
        )));
    }
    Ok((
        SpherePoly::from_terms(n, terms)?,
        LaplacianMethod::FiniteDifference {
            step: h,
            richardson_gap: gap,
            fit_residual: rel,
            fit_degree: degree,
        },
    ))
}

/// `(Δᵏ G)|_Ω` as a polynomial on the sphere.
pub fn laplacian_on_sphere(gen: &Generator, q: f64, k: usize) -> Result<(SpherePoly, LaplacianMethod)> {
    match gen {
        Generator::Symbolic(g) => Ok((g.iterated_laplacian(k).restrict_to_sphere(), LaplacianMethod::Symbolic)),
        Generator::Numeric(body) => numeric_laplacian_on_sphere(body, q, k),
    }
}

/// Output of an inversion: the density on a grid plus the model that
/// evaluates it anywhere, norm bounds and the Euclidean calibration check.
#[derive(Debug, Clone)]
pub struct InversionReport {
    pub source: Source,
    pub q: f64,
    pub n: usize,
    /// Number of Laplacians applied to `‖x‖^q`.
    pub k: usize,
    /// Exponent of the `|(θ,ξ)|` kernel for the non-integer route.
    pub kernel_exponent: Option<f64>,
    pub density: SphericalFunction,
    pub representation: BLRepresentation,
    pub laplacian: SpherePoly,
    pub laplacian_method: LaplacianMethod,
    /// Prefactor of the textbook formula.
    pub stated_prefactor: f64,
    /// Prefactor actually applied.
    pub applied_prefactor: f64,
    /// `stated / applied`; 1 when the formula is used verbatim.
    pub prefactor_ratio: f64,
    pub bound_l1: f64,
    pub bound_linf: f64,
    /// `∫_Ω |b|` on the grid.
    pub norm_l1: f64,
    /// `max |b|` on the grid.
    pub norm_linf: f64,
    /// `|b·W_q − 1|` for the Euclidean norm with the applied prefactor.
    pub baseline_residual: f64,
    /// `b·W_q` for the Euclidean norm with the stated prefactor.
    pub baseline_stated_scalar: f64,
}

fn check_dims(gen: &Generator, grid: &SphericalGrid) -> Result<usize> {
    let n = gen.dimension();
    if n < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    if grid.dimension() != n {
        return Err(Error::Domain(format!(
            "grid dimension {} does not match body dimension {n}",
            grid.dimension()
        )));
    }
    Ok(n)
}

/// `(max |R|, ∫|R|)` on the sphere, the maximum refined by local search.
fn sphere_norms(r: &SpherePoly, grid: &SphericalGrid) -> (f64, f64) {
    let values: Vec<f64> = grid.nodes().par_iter().map(|u| r.eval(u).abs()).collect();
    let (imax, vmax) = values
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let (_, refined) = minimize_on_sphere(|u| -r.eval(u).abs(), &grid.nodes()[imax], 0.05, 1e-9);
    let l1 = pairwise_sum(&values.iter().zip(grid.weights()).map(|(v, w)| v * w).collect::<Vec<_>>());
    (vmax.max(-refined), l1)
}

fn euclidean_laplacian_constant(n: usize, q: f64, k: usize) -> f64 {
    RadialPolySum::radial(n, 1.0, q)
        .iterated_laplacian(k)
        .terms()
        .first()
        .map_or(0.0, |t| t.coeff)
}

/// Density for non-integer q from `b(ξ) = (−1)^k π/(2(2π)^{n−1} C_e C_q) ∫_Ω |(θ,ξ)|^e Δᵏ‖θ‖^q dθ`.
pub fn invert_noninteger(body: &StarBodySpec, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    invert_noninteger_generator(&Generator::for_body(body, q), q, grid)
}

pub fn invert_noninteger_generator(gen: &Generator, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!("exponent must be positive, got {q}")));
    }
    if q == q.round() {
        return Err(Error::NonIntegerViolation(q));
    }
    let n = check_dims(gen, &grid)?;
    let (k, e) = noninteger_indices(n, q);
    let (laplacian, method) = laplacian_on_sphere(gen, q, k)?;
    let ce = c_constant(e)?;
    let cq = c_constant(q)?;
    let stated = sign(k) * PI / (2.0 * (2.0 * PI).powi(n as i32 - 1) * ce * cq);
    let applied = stated;
    let we = w_constant(e, n)?;
    let wq = w_constant(q, n)?;
    let model = DensityModel::cosine_transform(applied, e, laplacian.clone())?;
    let density = model.on_grid(Arc::clone(&grid))?;
    let representation = BLRepresentation::new(q, model, Source::NonInteger)?;
    let (r_inf, r_l1) = sphere_norms(&laplacian, &grid);
    let factor = applied.abs() * we;
    let c0 = euclidean_laplacian_constant(n, q, k);
    Ok(InversionReport {
        source: Source::NonInteger,
        q,
        n,
        k,
        kernel_exponent: Some(e),
        norm_l1: density.l1_norm(),
        norm_linf: density.max_abs(),
        density,
        representation,
        laplacian,
        laplacian_method: method,
        stated_prefactor: stated,
        applied_prefactor: applied,
        prefactor_ratio: stated / applied,
        bound_l1: factor * r_l1,
        bound_linf: factor * r_inf,
        baseline_residual: (applied * c0 * we * wq - 1.0).abs(),
        baseline_stated_scalar: stated * c0 * we * wq,
    })
}

/// Density for odd q and even n from the equatorial integral of
/// `Δ^{(n+q−1)/2}‖θ‖^q`.
///
/// The textbook prefactor `(−1)^K π/((2π)^{n−1} C_q)` reproduces twice the
/// Euclidean density 1/W_q for every tested (q, n); half of it is applied and
/// the ratio is reported.
pub fn invert_odd_even(body: &StarBodySpec, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    invert_odd_even_generator(&Generator::for_body(body, q), q, grid)
}

pub fn invert_odd_even_generator(gen: &Generator, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    let n = check_dims(gen, &grid)?;
    let odd_q = q > 0.0 && q == q.round() && (q as i64) % 2 == 1;
    if !odd_q || n % 2 == 1 {
        return Err(Error::Parity(format!(
            "the equatorial formula needs odd q and even n, got q = {q}, n = {n}"
        )));
    }
    let k = (n + q as usize - 1) / 2;
    let (laplacian, method) = laplacian_on_sphere(gen, q, k)?;
    let cq = c_constant(q)?;
    let stated = sign(k) * PI / ((2.0 * PI).powi(n as i32 - 1) * cq);
    let applied = 0.5 * stated;
    let wq = w_constant(q, n)?;
    let equator = sphere_area(n - 1);
    let model = DensityModel::equatorial_transform(applied, laplacian.clone())?;
    let density = model.on_grid(Arc::clone(&grid))?;
    let representation = BLRepresentation::new(q, model, Source::OddEven)?;
    let (r_inf, r_l1) = sphere_norms(&laplacian, &grid);
    let factor = applied.abs() * equator;
    let c0 = euclidean_laplacian_constant(n, q, k);
    Ok(InversionReport {
        source: Source::OddEven,
        q,
        n,
        k,
        kernel_exponent: None,
        norm_l1: density.l1_norm(),
        norm_linf: density.max_abs(),
        density,
        representation,
        laplacian,
        laplacian_method: method,
        stated_prefactor: stated,
        applied_prefactor: applied,
        prefactor_ratio: stated / applied,
        bound_l1: factor * r_l1,
        bound_linf: factor * r_inf,
        baseline_residual: (applied * c0 * equator * wq - 1.0).abs(),
        baseline_stated_scalar: stated * c0 * equator * wq,
    })
}

/// Validates (q, n) and picks the inversion formula.
pub fn route_for(q: f64, n: usize) -> Result<Source> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!("exponent must be positive, got {q}")));
    }
    if is_even_integer(q) {
        return Err(Error::EvenIntegerQ(q));
    }
    if q != q.round() {
        return Ok(Source::NonInteger);
    }
    if n % 2 == 1 {
        return Err(Error::UnsupportedParity);
    }
    Ok(Source::OddEven)
}

pub fn invert(body: &StarBodySpec, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    invert_generator(&Generator::for_body(body, q), q, grid)
}

pub fn invert_generator(gen: &Generator, q: f64, grid: Arc<SphericalGrid>) -> Result<InversionReport> {
    match route_for(q, gen.dimension())? {
        Source::NonInteger => invert_noninteger_generator(gen, q, grid),
        _ => invert_odd_even_generator(gen, q, grid),
    }
}

/// Fits `G(x) = Σ c_α x^α ‖x‖₂^{q−degree}` to the forward values of `rep` at
/// `samples` seeded random directions; returns G and the largest residual.
pub fn fit_generating_function(
    rep: &BLRepresentation,
    degree: u32,
    samples: usize,
    seed: u64,
) -> Result<(RadialPolySum, f64)> {
    let n = rep.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            unit(&v)
        })
        .collect::<Result<_>>()?;
    let values: Vec<Result<f64>> = points.par_iter().map(|u| rep.forward(u)).collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let (terms, resid) = fit_homogeneous(n, degree, &points, &values)?;
    let sum = RadialPolySum::from_terms(
        n,
        terms
            .into_iter()
            .map(|(c, e)| RadialPolyTerm {
                coeff: c,
                exponents: e,
                beta: rep.q() - degree as f64,
            })
            .collect(),
    )?;
    Ok((sum, resid))
}

/// Fourier transform of an even function f homogeneous of degree `p < −n+1`:
/// `(π/C_{−n−p}) ∫_Ω |(θ,ξ)|^{−n−p} f(θ) dθ`, extended to ξ ≠ 0 by homogeneity.
pub fn ft_homogeneous_low<F>(f: &F, p: f64, xi: &[f64], radial_nodes: usize, equator_resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = xi.len();
    if !(p < -(n as f64) + 1.0) {
        return Err(Error::Domain(format!("degree {p} must be below {}", 1.0 - n as f64)));
    }
    let e = -(n as f64) - p;
    if is_even_integer(e) {
        return Err(Error::Domain(format!("-n-p = {e} is an even integer")));
    }
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rule = KernelRule::new(n, e, radial_nodes, equator_resolution)?;
    Ok(PI / c_constant(e)? * rule.apply(f, xi)? * r.powf(e))
}

/// Fourier transform of an even function homogeneous of degree −n+1:
/// `π ∫_{Ω∩ξ⊥} f`, extended by homogeneity of degree −1.
pub fn ft_homogeneous_critical<F>(f: F, xi: &[f64], resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(PI * quad_equator(f, xi, resolution)? / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn grid(n: usize, r: usize) -> Arc<SphericalGrid> {
        Arc::new(build_grid(n, r).unwrap())
    }

    #[test]
    fn indices() {
        assert_eq!(noninteger_indices(3, 0.5), (2, 0.5));
        assert_eq!(noninteger_indices(3, 1.5), (2, -0.5));
        assert_eq!(noninteger_indices(4, 0.5), (2, -0.5));
        assert_eq!(noninteger_indices(4, 2.5), (3, -0.5));
    }

    #[test]
    fn stencil_reproduces_polynomial_laplacian() {
        let s = laplacian_stencil(3, 2);
        let total: f64 = s.iter().map(|x| x.1).sum();
        assert_eq!(total, 0.0);
        // Δ²(x₁⁴) = 24 exactly for a fourth-order polynomial
        let h: f64 = 0.1;
        let v: f64 = s
            .iter()
            .map(|(o, c)| c * (0.3 + h * o[0] as f64).powi(4))
            .sum::<f64>()
            / h.powi(4);
        assert!((v - 24.0).abs() < 1e-8);
    }

    #[test]
    fn euclidean_baseline_noninteger() {
        let body = StarBodySpec::euclidean(3).unwrap();
        let rep = invert_noninteger(&body, 0.5, grid(3, 6)).unwrap();
        let target = 1.0 / w_constant(0.5, 3).unwrap();
        assert!(rel(target, 3.0 / (8.0 * PI)) < 1e-14);
        for v in rep.density.values() {
            assert!(rel(*v, target) < 1e-12);
        }
        assert!(rep.baseline_residual < 1e-12);
        assert!((rep.prefactor_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_baseline_odd_even() {
        let body = StarBodySpec::euclidean(4).unwrap();
        let rep = invert_odd_even(&body, 1.0, grid(4, 4)).unwrap();
        let target = 3.0 / (8.0 * PI);
        for v in rep.density.values() {
            assert!(rel(*v, target) < 1e-12);
        }
        assert!(rep.baseline_residual < 1e-12);
        assert!((rep.baseline_stated_scalar - 2.0).abs() < 1e-12);
        assert_eq!(rep.prefactor_ratio, 2.0);
    }

    #[test]
    fn forward_of_constant_is_euclidean_power() {
        for (n, q) in [(3, 0.5), (4, 1.0), (5, 2.5), (2, 1.0)] {
            let rep = BLRepresentation::constant(q, n, 1.0 / w_constant(q, n).unwrap()).unwrap();
            let x: Vec<f64> = (0..n).map(|i| 0.3 + i as f64 * 0.2).collect();
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rel(rep.forward(&x).unwrap(), r.powf(q)) < 1e-12, "n = {n}, q = {q}");
        }
        let zero = BLRepresentation::constant(0.5, 3, 0.0).unwrap();
        assert_eq!(zero.forward(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn forward_approaches_coordinate_power_for_concentrated_density() {
        // b ∝ ξ₁^{2m}, normalized to unit mass on each hemisphere pair
        let q = 0.5;
        let x = [0.6, 0.8, 0.0];
        let target = 0.6f64.powf(q);
        let mut last = f64::INFINITY;
        for m in [2u32, 8, 32] {
            let mass = crate::radial::sphere_monomial_moment(&[2 * m, 0, 0]);
            let p = SpherePoly::from_terms(3, vec![(0.5 / mass, vec![2 * m, 0, 0])]).unwrap();
            let rep = BLRepresentation::new(q, DensityModel::Polynomial(p), Source::Analytic).unwrap();
            // unit mass split over ±e₁ gives |x₁|^q in the limit
            let v = 2.0 * rep.forward(&x).unwrap();
            let err = (v - target).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.02);
    }

    #[test]
    fn forward_is_homogeneous() {
        let p = SpherePoly::from_terms(3, vec![(1.0, vec![0, 0, 0]), (0.3, vec![2, 0, 0])]).unwrap();
        let rep = BLRepresentation::new(1.5, DensityModel::Polynomial(p), Source::Analytic).unwrap();
        let x = [0.2, -0.5, 0.7];
        let t: f64 = -2.7;
        let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
        let a = rep.forward(&tx).unwrap();
        let b = t.abs().powf(1.5) * rep.forward(&x).unwrap();
        assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn example_one_density_is_pinned_by_forward() {
        let lambda = 0.3;
        let body = StarBodySpec::perturbed_from_text(lambda, 4, "x1^2").unwrap();
        let rep = invert_odd_even(&body, 1.0, grid(4, 4)).unwrap();
        let expected = |xi: &[f64]| (3.0 - 3.0 * lambda + 15.0 * lambda * xi[0] * xi[0]) / (8.0 * PI);
        for (u, v) in rep.density.grid().nodes().iter().zip(rep.density.values()) {
            assert!((v - expected(u)).abs() < 1e-13);
        }
        let x = [0.3, -0.1, 0.5, 0.7];
        let h = body.norm(&x).unwrap();
        assert!(rel(rep.representation.forward(&x).unwrap(), h) < 1e-12);
    }

    #[test]
    fn parity_checks() {
        let g = grid(3, 4);
        let body = StarBodySpec::euclidean(3).unwrap();
        assert!(matches!(invert(&body, 1.0, Arc::clone(&g)), Err(Error::UnsupportedParity)));
        assert!(matches!(invert(&body, 2.0, Arc::clone(&g)), Err(Error::EvenIntegerQ(_))));
        assert!(matches!(invert_noninteger(&body, 1.0, Arc::clone(&g)), Err(Error::NonIntegerViolation(_))));
        assert!(matches!(invert_odd_even(&body, 1.0, g), Err(Error::Parity(_))));
    }

    #[test]
    fn vanishing_laplacian_gives_zero_density() {
        // Δ²‖x‖ = 0 in ℝ³ away from the origin; the symbolic route sees R ≡ 0
        let gen = Generator::Symbolic(RadialPolySum::radial(3, 1.0, 1.0));
        let (r, _) = laplacian_on_sphere(&gen, 1.0, 2).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn bounds_dominate_norms() {
        let body = StarBodySpec::perturbed_from_text(0.2, 3, "x1^2*x2^2").unwrap();
        assert!(matches!(Generator::for_body(&body, 1.5), Generator::Numeric(_)));
        let rep = invert_noninteger(&body, 1.5, grid(3, 12)).unwrap();
        assert!(rep.norm_l1 <= rep.bound_l1 * (1.0 + 1e-9));
        assert!(rep.norm_linf <= rep.bound_linf * (1.0 + 1e-9));
        assert!(matches!(rep.laplacian_method, LaplacianMethod::FiniteDifference { .. }));
    }

    #[test]
    fn numeric_laplacian_matches_symbolic() {
        // ℓ₂ through the numeric path must reproduce the exact constant density
        let body = StarBodySpec::lp_ball(2.0, 3).unwrap();
        let gen = Generator::Numeric(body);
        let (r, method) = laplacian_on_sphere(&gen, 0.5, 2).unwrap();
        let exact = euclidean_laplacian_constant(3, 0.5, 2);
        let u = [0.48, -0.6, 0.64];
        assert!(rel(r.eval(&u), exact) < 1e-5, "{} vs {exact}: {method:?}", r.eval(&u));
    }

    #[test]
    fn cube_is_singular() {
        let body = StarBodySpec::cube(4).unwrap();
        assert!(matches!(invert(&body, 1.0, grid(4, 4)), Err(Error::Singularity(_))));
    }

    #[test]
    fn low_degree_transform_consistency() {
        // the cosine transform route equals the Fourier transform of Δᵏ‖x‖^q up to (−1)^k 2(2π)^{n−1} C_q
        let body = StarBodySpec::perturbed_from_text(0.4, 3, "x1^2").unwrap();
        let q = 0.5;
        let rep = invert_noninteger(&body, q, grid(3, 6)).unwrap();
        let (k, e) = noninteger_indices(3, q);
        let r = rep.laplacian.clone();
        let xi = [0.36, 0.48, 0.8];
        let ft = ft_homogeneous_low(&|t: &[f64]| r.eval(t), -3.0 - e, &xi, 8, 10).unwrap();
        let b = rep.representation.density().eval(&xi).unwrap();
        let expect = sign(k) * 2.0 * (2.0 * PI).powi(2) * c_constant(q).unwrap() * b;
        assert!(rel(ft, expect) < 1e-9, "{ft} vs {expect}");
    }

    #[test]
    fn low_degree_bound() {
        let n = 3;
        let p = -3.5;
        let e = -(n as f64) - p;
        let f = |t: &[f64]| 1.0 + 0.5 * (3.0 * t[0]).sin() * t[1];
        let sup = 1.5;
        let factor = PI * w_constant(e, n).unwrap() / c_constant(e).unwrap().abs();
        for xi in [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.0, 0.6, -0.8]] {
            let v = ft_homogeneous_low(&f, p, &xi, 12, 16).unwrap();
            assert!(v.abs() <= factor * sup);
        }
        assert!(ft_homogeneous_low(&f, -1.5, &[1.0, 0.0, 0.0], 4, 4).is_err());
    }

    #[test]
    fn critical_degree_transform() {
        let v = ft_homogeneous_critical(|_| 1.0, &[0.0, 0.0, 1.0], 8).unwrap();
        assert!(rel(v, 2.0 * PI * PI) < 1e-12);
        let w = ft_homogeneous_critical(|t| t[0] * (1.0 + t[1]), &[1.0, 0.0, 0.0], 8).unwrap();
        assert!(w.abs() < 1e-14);
        let n = 4;
        let bound = 2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma((n as f64 - 1.0) / 2.0).unwrap();
        let f = |t: &[f64]| (t[0] * 5.0).cos();
        let v = ft_homogeneous_critical(f, &[0.5, 0.5, 0.5, 0.5], 10).unwrap();
        assert!(v.abs() <= bound);
    }

    #[test]
    fn round_trip_small() {
        let n = 3;
        let q = 0.5;
        let b0 = SpherePoly::from_terms(
            n,
            vec![(1.0, vec![0, 0, 0]), (0.3, vec![2, 0, 0]), (0.2, vec![0, 2, 2])],
        )
        .unwrap();
        let rep = BLRepresentation::new(q, DensityModel::Polynomial(b0.clone()), Source::User).unwrap();
        let (g, resid) = fit_generating_function(&rep, 4, 200, 11).unwrap();
        assert!(resid < 1e-12);
        let out = invert_generator(&Generator::Symbolic(g), q, grid(n, 6)).unwrap();
        for (u, v) in out.density.grid().nodes().iter().zip(out.density.values()) {
            assert!((v - b0.eval(u)).abs() < 5e-9, "{v} vs {}", b0.eval(u));
        }
    }
}
