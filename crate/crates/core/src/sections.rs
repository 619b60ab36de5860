//! Volumes of central hyperplane sections `K ∩ ξ⊥` of star bodies.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;
use crate::radial::StarBodySpec;
use crate::specfun::{gamma, product_integral, shared_density};
use crate::spherical::{build_grid, grid_size, quad_equator, EquatorialFrame};

/// How a section volume was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionMethod {
    Equatorial,
    StableIntegral,
    LinfClosed,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionReport {
    pub body: StarBodySpec,
    pub xi: Vec<f64>,
    /// (n−1)-dimensional volume of `K ∩ ξ⊥`.
    pub volume: f64,
    pub method: SectionMethod,
    pub error_estimate: f64,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

fn unit_direction(xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() < 2 {
        return Err(Error::Domain("sections need dimension at least 2".into()));
    }
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("direction must be nonzero and finite".into()));
    }
    Ok(xi.iter().map(|v| v / r).collect())
}

/// Equator resolution used by [`section_volume_equatorial`].
pub fn equatorial_resolution(n: usize) -> usize {
    if n <= 2 {
        return 1;
    }
    let mut r = 2;
    while r < 4096 && grid_size(n - 1, 2 * r).is_some_and(|s| s <= 1 << 18) {
        r *= 2;
    }
    r
}

/// `(1/(n−1)) ∫_{Ω∩ξ⊥} ‖θ‖^{−n+1} dθ`; the error estimate compares against
/// half the resolution.
pub fn section_volume_equatorial(body: &StarBodySpec, xi: &[f64]) -> Result<SectionReport> {
    let n = body.dimension();
    section_volume_equatorial_with(body, xi, equatorial_resolution(n))
}

pub fn section_volume_equatorial_with(body: &StarBodySpec, xi: &[f64], resolution: usize) -> Result<SectionReport> {
    let n = body.dimension();
    if xi.len() != n {
        return Err(Error::Domain("direction has the wrong dimension".into()));
    }
    let u = unit_direction(xi)?;
    let power = -(n as f64) + 1.0;
    let f = |x: &[f64]| match body.norm(x) {
        Ok(v) if v > 0.0 && v.is_finite() => v.powf(power),
        _ => f64::NAN,
    };
    let at = |r: usize| -> Result<f64> {
        quad_equator(f, &u, r)
            .map(|v| v / (n as f64 - 1.0))
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::Domain("the norm vanishes or is not finite on the equator".into()),
                other => other,
            })
    };
    let volume = at(resolution)?;
    let error_estimate = if n == 2 || resolution < 2 {
        8.0 * f64::EPSILON * volume
    } else {
        2.0 * (volume - at(resolution / 2)?).abs()
    };
    Ok(SectionReport {
        body: body.clone(),
        xi: u,
        volume,
        method: SectionMethod::Equatorial,
        error_estimate,
        seed: None,
        samples: None,
    })
}

/// `p/(π(n−1)Γ((n−1)/p)) ∫₀^∞ ∏ γp(tξₖ) dt` for the unit ball of ℓp.
pub fn section_volume_lp(p: f64, n: usize, xi: &[f64]) -> Result<SectionReport> {
    if p.is_infinite() {
        return section_volume_linf(n, xi);
    }
    let body = StarBodySpec::lp_ball(p, n)?;
    if xi.len() != n {
        return Err(Error::Domain("direction has the wrong dimension".into()));
    }
    let u = unit_direction(xi)?;
    let density = shared_density(p)?;
    let q = product_integral(&density, &u, 0.0)?;
    if !q.converged {
        return Err(Error::Convergence(format!(
            "stable product integral for p = {p} did not reach tolerance"
        )));
    }
    let nf = n as f64;
    let factor = p / (PI * (nf - 1.0) * gamma((nf - 1.0) / p)?);
    let volume = factor * q.value;
    // interpolation error of the tabulated density enters each factor
    let error_estimate = factor * q.abs_err + 1e-9 * nf * volume.abs();
    Ok(SectionReport {
        body,
        xi: u,
        volume,
        method: SectionMethod::StableIntegral,
        error_estimate,
        seed: None,
        samples: None,
    })
}

/// Fourier transform of `‖x‖_p^β`:
/// `p/Γ(−β/p) ∫₀^∞ t^{n+β−1} ∏ γp(tξₖ) dt`.
pub fn lp_ft_power(p: f64, beta: f64, n: usize, xi: &[f64]) -> Result<f64> {
    let nf = n as f64;
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p must be positive and finite, got {p}")));
    }
    if !(beta > -nf && beta < p * nf) {
        return Err(Error::Domain(format!("β = {beta} must lie in (−n, pn)")));
    }
    let ratio = beta / p;
    if ratio >= 0.0 && ratio == ratio.round() {
        return Err(Error::Domain(format!("β/p = {ratio} is a non-negative integer")));
    }
    if xi.len() != n || xi.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Domain("all coordinates of ξ must be nonzero".into()));
    }
    let density = shared_density(p)?;
    let q = product_integral(&density, xi, nf + beta - 1.0)?;
    if !q.converged {
        return Err(Error::Convergence("stable product integral did not reach tolerance".into()));
    }
    Ok(p / gamma(-ratio)? * q.value)
}

const LINF_MAX_DIMENSION: usize = 24;

/// `Σ_δ δ₁⋯δ_m |Σ δⱼξⱼ|^{m−1}·(sgn Σ δⱼξⱼ if m is odd)` over sign vectors with δ₁ = 1,
/// returned with an estimate of its cancellation error.
fn signed_sum_f64(xi: &[f64]) -> (f64, f64) {
    let m = xi.len();
    let mut parts = Vec::with_capacity(1 << (m - 1));
    let mut mags = Vec::with_capacity(1 << (m - 1));
    for mask in 0..(1usize << (m - 1)) {
        let mut s = xi[0];
        let mut prod = 1.0;
        for (j, x) in xi.iter().enumerate().skip(1) {
            if mask >> (j - 1) & 1 == 1 {
                s -= x;
                prod = -prod;
            } else {
                s += x;
            }
        }
        let mut t = s.abs().powi(m as i32 - 1);
        if m % 2 == 1 && s < 0.0 {
            t = -t;
        }
        parts.push(prod * t);
        mags.push(t.abs());
    }
    let sum = pairwise_sum(&parts);
    let err = 4.0 * m as f64 * f64::EPSILON * pairwise_sum(&mags);
    (sum, err)
}

fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn signed_sum_exact(xi: &[f64]) -> f64 {
    let m = xi.len();
    let xs: Vec<BigRational> = xi.iter().map(|v| exact_rational(*v)).collect();
    let total: BigRational = (0..(1usize << (m - 1)))
        .into_par_iter()
        .map(|mask| {
            let mut s = xs[0].clone();
            let mut neg = false;
            for (j, x) in xs.iter().enumerate().skip(1) {
                if mask >> (j - 1) & 1 == 1 {
                    s -= x;
                    neg = !neg;
                } else {
                    s += x;
                }
            }
            let mut t = num_traits::pow(s.abs(), m - 1);
            if m % 2 == 1 && s.is_negative() {
                t = -t;
            }
            if neg {
                -t
            } else {
                t
            }
        })
        .reduce(BigRational::zero, |a, b| a + b);
    total.to_f64().unwrap_or(f64::NAN)
}

fn linf_nonzero(xi: &[f64]) -> Result<(f64, f64)> {
    let m = xi.len();
    if m == 1 {
        return Ok((1.0, 0.0));
    }
    let (mut sum, err) = signed_sum_f64(xi);
    let exact = err > 1e-13 * sum.abs();
    if exact {
        sum = signed_sum_exact(xi);
    }
    let mf = m as f64;
    // two sign vectors per retained term, δ and −δ
    let prefactor = if m % 2 == 1 {
        let s = if (m - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
        s * 2f64.powi(1 - m as i32) * PI.sqrt() * gamma((2.0 - mf) / 2.0)? / gamma((mf - 1.0) / 2.0)?
    } else {
        let s = if (m - 2) / 2 % 2 == 0 { 1.0 } else { -1.0 };
        s * 2f64.powi(1 - m as i32) * PI.sqrt() * gamma((3.0 - mf) / 2.0)? / gamma(mf / 2.0)?
    };
    let prod: f64 = xi.iter().product();
    let ft = prefactor * 2.0 * sum / prod;
    let volume = (ft / (PI * (mf - 1.0))).abs();
    let rel = if exact { 1e-14 } else { err / sum.abs() + 1e-15 };
    Ok((volume, volume * rel))
}

/// Section of the cube `[−1,1]ⁿ` from the signed sum over the 2ⁿ sign vectors;
/// zero coordinates contribute a factor 2 each to the lower-dimensional value.
pub fn section_volume_linf(n: usize, xi: &[f64]) -> Result<SectionReport> {
    if n < 2 || xi.len() != n {
        return Err(Error::Domain("direction has the wrong dimension".into()));
    }
    if n > LINF_MAX_DIMENSION {
        return Err(Error::Overflow(n));
    }
    let u = unit_direction(xi)?;
    let nonzero: Vec<f64> = u.iter().copied().filter(|v| *v != 0.0).collect();
    let zeros = n - nonzero.len();
    let (v, e) = linf_nonzero(&nonzero)?;
    let scale = 2f64.powi(zeros as i32);
    Ok(SectionReport {
        body: StarBodySpec::cube(n)?,
        xi: u,
        volume: v * scale,
        method: SectionMethod::LinfClosed,
        error_estimate: e * scale,
        seed: None,
        samples: None,
    })
}

/// Upper bound for the radial function `1/‖x‖` on the sphere.
pub fn radial_upper_bound(body: &StarBodySpec) -> Result<f64> {
    let n = body.dimension() as f64;
    let bound = match body {
        StarBodySpec::LpBall { p, .. } if p.is_infinite() => n.sqrt(),
        StarBodySpec::LpBall { p, .. } if *p >= 2.0 => n.powf(0.5 - 1.0 / p),
        StarBodySpec::LpBall { .. } => 1.0,
        _ => {
            let grid = build_grid(body.dimension(), 24.min(crate::spherical::default_resolution(body.dimension())))?;
            let mut lo = f64::INFINITY;
            for u in grid.nodes() {
                lo = lo.min(body.norm(u)?);
            }
            let (_, refined) = crate::spherical::minimize_on_sphere(
                |u| body.norm(u).unwrap_or(f64::INFINITY),
                &grid.nodes()[0],
                0.1,
                1e-8,
            );
            1.05 / lo.min(refined)
        }
    };
    if !bound.is_finite() || bound <= 0.0 {
        return Err(Error::DegenerateBox("radial function has no finite upper bound".into()));
    }
    Ok(bound)
}

const MC_CHUNK: usize = 1 << 16;

/// Hit-or-miss estimate in a box of ξ⊥ coordinates; the generator stream is
/// fixed per chunk so the count does not depend on the number of workers.
pub fn mc_section_volume(body: &StarBodySpec, xi: &[f64], samples: usize, seed: u64) -> Result<SectionReport> {
    let n = body.dimension();
    if xi.len() != n {
        return Err(Error::Domain("direction has the wrong dimension".into()));
    }
    if samples < 10_000 {
        return Err(Error::Domain(format!("at least 10000 samples are required, got {samples}")));
    }
    let u = unit_direction(xi)?;
    let frame = EquatorialFrame::new(&u)?;
    let half = radial_upper_bound(body)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: Vec<Result<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut y = vec![0.0; n - 1];
            let mut hit = 0u64;
            for _ in 0..count {
                for v in y.iter_mut() {
                    *v = rng.random_range(-half..half);
                }
                let x = frame.map(&y);
                if body.norm(&x)? <= 1.0 {
                    hit += 1;
                }
            }
            Ok(hit)
        })
        .collect();
    let hits: u64 = hits.into_iter().sum::<Result<u64>>()?;
    let box_volume = (2.0 * half).powi(n as i32 - 1);
    let frac = hits as f64 / samples as f64;
    Ok(SectionReport {
        body: body.clone(),
        xi: u,
        volume: box_volume * frac,
        method: SectionMethod::MonteCarlo,
        error_estimate: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        seed: Some(seed),
        samples: Some(samples),
    })
}

/// Best available analytic section volume for a body.
pub fn section_volume(body: &StarBodySpec, xi: &[f64]) -> Result<SectionReport> {
    match body {
        StarBodySpec::LpBall { p, n } if p.is_infinite() => section_volume_linf(*n, xi),
        StarBodySpec::LpBall { p, n } => section_volume_lp(*p, *n, xi),
        _ => section_volume_equatorial(body, xi),
    }
}

/// Volume of the unit ball of ℝ^{n−1}, the section of the Euclidean ball.
pub fn euclidean_section(n: usize) -> f64 {
    let m = n as f64 - 1.0;
    PI.powf(m / 2.0) / gamma(m / 2.0 + 1.0).expect("positive argument")
}
