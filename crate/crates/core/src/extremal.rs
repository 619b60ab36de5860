//! Extremal central sections of ℓp balls: candidate points, direction scans,
//! log-convexity of `γp(√t)` and the stationarity system at critical points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sections::section_volume_lp;
use crate::specfun::{gamma, product_integral_derivative, shared_density};
use crate::spherical::minimize_on_sphere;

pub const SCAN_BUDGET: usize = 1_000_000;

/// `(1/√k, …, 1/√k, 0, …, 0)` with k leading entries.
pub fn candidate_direction(n: usize, k: usize) -> Vec<f64> {
    let v = 1.0 / (k as f64).sqrt();
    (0..n).map(|i| if i < k { v } else { 0.0 }).collect()
}

/// Section volumes at the candidate directions for k = 1..n.
pub fn candidate_volumes(p: f64, n: usize) -> Result<Vec<(usize, f64)>> {
    (1..=n)
        .into_par_iter()
        .map(|k| Ok((k, section_volume_lp(p, n, &candidate_direction(n, k))?.volume)))
        .collect()
}

/// `2^{n−1} p Γ(1+1/p)^{n−1} / ((n−1) Γ((n−1)/p))`, the axis section of B_p.
pub fn axis_section_closed_form(p: f64, n: usize) -> Result<f64> {
    let m = n as f64 - 1.0;
    Ok(2f64.powf(m) * p * gamma(1.0 + 1.0 / p)?.powf(m) / (m * gamma(m / p)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalScanResult {
    pub p: f64,
    pub n: usize,
    pub min_direction: Vec<f64>,
    pub max_direction: Vec<f64>,
    pub min_volume: f64,
    pub max_volume: f64,
    pub candidate_values: Vec<(usize, f64)>,
    /// Smallest `v_k − v_{k+1}` over consecutive candidates.
    pub strictness_margin: f64,
    /// All candidates agree, so no direction is distinguished.
    pub isotropic: bool,
    pub samples: Vec<(Vec<f64>, f64)>,
}

fn fold_to_chamber(u: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

/// Angle between `u` and the nearest signed permutation of `target`.
pub fn chamber_angle(u: &[f64], target: &[f64]) -> f64 {
    let a = fold_to_chamber(u);
    let b = fold_to_chamber(target);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// Evaluates the candidate points ξ⁽ᵏ⁾ and `resolution` random directions in the chamber ξ₁ ≥ … ≥ ξₙ ≥ 0, then
/// refines the three best minima and maxima by compass search.
pub fn scan_extremal(p: f64, n: usize, resolution: usize, seed: u64) -> Result<ExtremalScanResult> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("p must be positive, got {p}")));
    }
    if n < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    if resolution == 0 || resolution > SCAN_BUDGET {
        return Err(Error::ScanBudget(format!(
            "resolution {resolution} outside 1..={SCAN_BUDGET}"
        )));
    }
    let candidate_values = candidate_volumes(p, n)?;
    let strictness_margin = candidate_values
        .windows(2)
        .map(|w| w[0].1 - w[1].1)
        .fold(f64::INFINITY, f64::min);
    let (cmin, cmax) = candidate_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(*v), b.max(*v)));
    let isotropic = (cmax - cmin) < 1e-10 * cmax;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (1..=n)
        .map(|k| candidate_direction(n, k))
        .chain((0..resolution).map(|_| {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            fold_to_chamber(&v)
        }))
        .collect();
    let vols: Vec<Result<f64>> = dirs
        .par_iter()
        .map(|u| section_volume_lp(p, n, u).map(|r| r.volume))
        .collect();
    let vols = vols.into_iter().collect::<Result<Vec<f64>>>()?;
    let samples: Vec<(Vec<f64>, f64)> = dirs.into_iter().zip(vols).collect();

    if isotropic {
        let axis = candidate_direction(n, 1);
        return Ok(ExtremalScanResult {
            p,
            n,
            min_direction: axis.clone(),
            max_direction: axis,
            min_volume: cmin,
            max_volume: cmax,
            candidate_values,
            strictness_margin,
            isotropic,
            samples,
        });
    }

    let volume = |u: &[f64]| section_volume_lp(p, n, &fold_to_chamber(u)).map_or(f64::NAN, |r| r.volume);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|a, b| samples[*a].1.total_cmp(&samples[*b].1));
    let refine = |starts: Vec<usize>, sign: f64| -> (Vec<f64>, f64) {
        let results: Vec<(Vec<f64>, f64)> = starts
            .par_iter()
            .map(|&i| minimize_on_sphere(|u| sign * volume(u), &samples[i].0, 0.05, 1e-7))
            .collect();
        let best = results
            .into_iter()
            .fold(None::<(Vec<f64>, f64)>, |acc, r| match acc {
                Some(a) if a.1 <= r.1 => Some(a),
                _ => Some(r),
            })
            .expect("at least one start");
        (fold_to_chamber(&best.0), sign * best.1)
    };
    let k = 3.min(order.len());
    let (min_direction, min_volume) = refine(order[..k].to_vec(), 1.0);
    let (max_direction, max_volume) = refine(order[order.len() - k..].to_vec(), -1.0);
    Ok(ExtremalScanResult {
        p,
        n,
        min_direction,
        max_direction,
        min_volume,
        max_volume,
        candidate_values,
        strictness_margin,
        isotropic,
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogConvexityReport {
    pub p: f64,
    pub passed: bool,
    /// Largest `2 ln γ(√((t₁+t₂)/2)) − ln γ(√t₁) − ln γ(√t₂)`; ≤ 0 for log-convex.
    pub max_gap: f64,
    /// Largest |gap|, the distance from log-affinity.
    pub max_abs_gap: f64,
    pub violation: Option<(f64, f64)>,
    /// `γ'(s)/(s γ(s))` non-decreasing on the log-spaced grid.
    pub monotone: bool,
    pub monotone_violation: Option<f64>,
}

/// Midpoint log-convexity of `t ↦ γp(√t)` over `t_samples` random pairs,
/// plus monotonicity of `γp'(s)/(s γp(s))`.
pub fn logconvexity_check(p: f64, t_samples: usize, seed: u64) -> Result<LogConvexityReport> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("p must be positive, got {p}")));
    }
    if t_samples < 100 {
        return Err(Error::Domain(format!("at least 100 samples are required, got {t_samples}")));
    }
    let density = shared_density(p)?;
    let lg = |t: f64| density.eval(t.sqrt()).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..t_samples)
        .map(|_| {
            let a: f64 = rng.random_range(-3.0..3.0);
            let b: f64 = rng.random_range(-3.0..3.0);
            (10f64.powf(a), 10f64.powf(b))
        })
        .collect();
    let gaps: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let g = 2.0 * lg(0.5 * (a + b)) - lg(a) - lg(b);
            if g.is_nan() {
                f64::INFINITY
            } else {
                g
            }
        })
        .collect();
    let mut max_gap = f64::NEG_INFINITY;
    let mut max_abs_gap = 0.0f64;
    let mut violation = None;
    for (g, pair) in gaps.iter().zip(&pairs) {
        max_abs_gap = max_abs_gap.max(g.abs());
        if *g > max_gap {
            max_gap = *g;
        }
        if *g > 1e-9 && violation.is_none() {
            violation = Some(*pair);
        }
    }

    let ratio = |s: f64| density.eval_derivative(s) / (s * density.eval(s));
    let floor = 1e-250 * density.at_zero();
    let grid: Vec<f64> = (0..=400)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0))
        .take_while(|s| density.eval(*s).abs() > floor)
        .collect();
    let values: Vec<f64> = grid.iter().map(|s| ratio(*s)).collect();
    let mut monotone_violation = None;
    for (w, s) in values.windows(2).zip(&grid[1..]) {
        let ok = w[1] >= w[0] - 1e-7 * w[0].abs().max(w[1].abs());
        if !ok || !w[1].is_finite() {
            monotone_violation = Some(*s);
            break;
        }
    }
    Ok(LogConvexityReport {
        p,
        passed: violation.is_none() && monotone_violation.is_none(),
        max_gap,
        max_abs_gap,
        violation,
        monotone: monotone_violation.is_none(),
        monotone_violation,
    })
}

/// `∫₀^∞ t γp'(tξᵢ)/(ξᵢ γp(tξᵢ)) ∏ₖ γp(tξₖ) dt` for each nonzero ξᵢ; equal
/// components mark a critical point of the section volume on the sphere.
pub fn lagrange_residual(p: f64, xi: &[f64]) -> Result<Vec<f64>> {
    let density = shared_density(p)?;
    let idx: Vec<usize> = (0..xi.len()).filter(|i| xi[*i] != 0.0).collect();
    let out: Vec<Result<f64>> = idx
        .par_iter()
        .map(|&i| {
            let r = product_integral_derivative(&density, xi, 1.0, i)?;
            if !r.converged {
                return Err(Error::Convergence(format!("stationarity integral {i} did not converge")));
            }
            Ok(r.value / xi[i])
        })
        .collect();
    out.into_iter().collect()
}

/// Largest minus smallest component of [`lagrange_residual`].
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::product_integral;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn candidates_for_diamond() {
        let c = candidate_volumes(1.0, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!(rel(c[0].1, 2.0) < 1e-8);
        assert!(rel(c[1].1, 2f64.sqrt()) < 1e-8);
    }

    #[test]
    fn candidates_decrease_for_small_p() {
        for p in [0.5, 1.0, 1.5] {
            let c = candidate_volumes(p, 4).unwrap();
            for w in c.windows(2) {
                assert!(w[0].1 > w[1].1, "p = {p}: {c:?}");
            }
        }
        let e = candidate_volumes(2.0, 3).unwrap();
        for (_, v) in e {
            assert!(rel(v, PI) < 1e-10);
        }
    }

    #[test]
    fn axis_closed_form() {
        for p in [0.5, 1.0, 1.5] {
            for n in [2usize, 3, 4] {
                let v = section_volume_lp(p, n, &candidate_direction(n, 1)).unwrap().volume;
                assert!(rel(v, axis_section_closed_form(p, n).unwrap()) < 1e-8, "p = {p}, n = {n}");
            }
        }
    }

    #[test]
    fn diagonal_via_power_of_one_density() {
        for p in [0.5, 1.0, 1.5] {
            let n = 3;
            let density = shared_density(p).unwrap();
            let s = 1.0 / (n as f64).sqrt();
            // ∫ γp(t/√n)ⁿ dt through a single-coordinate integral of the n-th power
            let single = crate::quadrature::integrate(
                |v: f64| {
                    let t = v.exp();
                    t * density.eval(t * s).powi(n as i32)
                },
                -40.0,
                40.0,
                0.0,
                1e-12,
                2000,
            );
            let m = n as f64 - 1.0;
            let expect = p / (PI * m * gamma(m / p).unwrap()) * single.value;
            let got = section_volume_lp(p, n, &candidate_direction(n, n)).unwrap().volume;
            assert!(rel(got, expect) < 1e-8, "p = {p}: {got} vs {expect}");
            let _ = product_integral(&density, &candidate_direction(n, n), 0.0).unwrap();
        }
    }

    #[test]
    fn scan_finds_diagonal_and_axis() {
        let r = scan_extremal(1.0, 3, 300, 5).unwrap();
        assert!(!r.isotropic);
        assert!(chamber_angle(&r.min_direction, &candidate_direction(3, 3)) < 1e-3);
        assert!(chamber_angle(&r.max_direction, &candidate_direction(3, 1)) < 1e-3);
        for (_, v) in &r.samples {
            assert!(*v >= r.min_volume - 1e-9 && *v <= r.max_volume + 1e-9);
        }
    }

    #[test]
    fn euclidean_scan_is_isotropic() {
        let r = scan_extremal(2.0, 3, 50, 1).unwrap();
        assert!(r.isotropic);
        assert!((r.max_volume - PI).abs() < 1e-6 && (r.min_volume - PI).abs() < 1e-6);
        assert!(matches!(scan_extremal(1.0, 3, 0, 1), Err(Error::ScanBudget(_))));
    }

    #[test]
    fn logconvexity() {
        let one = logconvexity_check(1.0, 2000, 3).unwrap();
        assert!(one.passed, "{one:?}");
        let two = logconvexity_check(2.0, 2000, 3).unwrap();
        assert!(two.passed && two.max_abs_gap < 1e-9, "{two:?}");
        let three = logconvexity_check(3.0, 2000, 3).unwrap();
        assert!(!three.passed);
    }

    #[test]
    fn lagrange_symmetry_and_non_critical_points() {
        let d = lagrange_residual(1.5, &candidate_direction(3, 3)).unwrap();
        assert!(spread(&d) < 1e-8, "{d:?}");
        let off = lagrange_residual(1.0, &[0.8, 0.6]).unwrap();
        assert!(spread(&off) > 1e-4, "{off:?}");
        let mixed = lagrange_residual(1.5, &[0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2]).unwrap();
        assert!((mixed[0] - mixed[1]).abs() < 1e-10);
        assert!((mixed[0] - mixed[2]).abs() > 1e-5);
    }

    #[test]
    fn lagrange_components_give_volume_gradient() {
        // ∂ᵢ∫∏γp(tξₖ)dt = ξᵢdᵢ, so along (−ξ₂, ξ₁) the volume changes at c·ξ₁ξ₂(d₂ − d₁)
        let p = 1.0;
        let xi = [0.8, 0.6];
        let d = lagrange_residual(p, &xi).unwrap();
        let c = p / (PI * gamma(1.0 / p).unwrap());
        let angle = 0.6f64.atan2(0.8);
        let v = |a: f64| section_volume_lp(p, 2, &[a.cos(), a.sin()]).unwrap().volume;
        let h = 1e-4;
        let fd = (v(angle + h) - v(angle - h)) / (2.0 * h);
        let predicted = c * xi[0] * xi[1] * (d[1] - d[0]);
        assert!(rel(fd, predicted) < 1e-5, "{fd} vs {predicted}");
    }

    #[test]
    fn gradient_vanishes_at_candidates() {
        for p in [0.5, 1.5] {
            let n = 3;
            let diag = candidate_direction(n, n);
            // tangent along (1, −1, 0)/√2
            let h = 1e-4;
            let at = |s: f64| {
                let u = [diag[0] + s, diag[1] - s, diag[2]];
                section_volume_lp(p, n, &u).unwrap().volume
            };
            let g = (at(h) - at(-h)) / (2.0 * h);
            assert!(g.abs() < 1e-5, "p = {p}: {g}");
        }
    }
}
