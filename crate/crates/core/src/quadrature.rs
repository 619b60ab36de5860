//! One-dimensional quadrature: adaptive Gauss-Kronrod, Gauss-Jacobi rules
//! and an order-independent summation helper.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_686_537_664,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Result of a one-dimensional integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    /// Integral of |f|; the scale against which round-off is judged.
    pub abs_integral: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jj = 2 * j + 1;
        let dx = half * XGK[jj];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jj] * (f1 + f2);
        res_abs += WGK[jj] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jj = 2 * j;
        let dx = half * XGK[jj];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        res_k += WGK[jj] * (f1 + f2);
        res_abs += WGK[jj] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        a,
        b,
        value,
        err,
        abs: res_abs,
    }
}

/// Globally adaptive 21-point Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol * |I|)`
/// or below the round-off floor of the rule; `converged` is false when
/// `max_segments` bisections did not reach the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_err: 0.0,
            abs_integral: 0.0,
            converged: true,
        };
    }
    let first = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.err;
    let mut total_abs = first.abs;
    heap.push(first);
    let mut converged = false;
    for _ in 0..max_segments {
        let tol = abs_tol.max(rel_tol * total.abs());
        let floor = 100.0 * f64::EPSILON * total_abs;
        if total_err <= tol || total_err <= floor {
            converged = true;
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        total_abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
    if !converged {
        let tol = abs_tol.max(rel_tol * total.abs());
        converged = total_err <= tol || total_err <= 100.0 * f64::EPSILON * total_abs;
    }
    // Re-add in a fixed order so the result does not depend on heap layout.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = segs.iter().map(|s| s.value).collect();
    let errs: Vec<f64> = segs.iter().map(|s| s.err).collect();
    let abss: Vec<f64> = segs.iter().map(|s| s.abs).collect();
    QuadResult {
        value: pairwise_sum(&values),
        abs_err: pairwise_sum(&errs),
        abs_integral: pairwise_sum(&abss),
        converged,
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// A quadrature rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Jacobi rule with `m` nodes for the weight `(1-x)^alpha (1+x)^beta` on `[-1, 1]`,
/// computed with the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if m == 0 {
        return Err(Error::Domain("rule needs at least one node".into()));
    }
    if alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::Domain(format!(
            "Jacobi exponents must exceed -1 (alpha = {alpha}, beta = {beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let jf = j as f64;
        let diag = if j == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * jf + ab) * (2.0 * jf + ab + 2.0))
        };
        jm[(j, j)] = diag;
        if j + 1 < m {
            let k = jf + 1.0;
            let b2 = if k == 1.0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * k * (k + alpha) * (k + beta) * (k + ab)
                    / ((2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
            };
            let off = b2.sqrt();
            jm[(j, j + 1)] = off;
            jm[(j + 1, j)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if alpha == beta {
        // symmetric weight: enforce exact node symmetry
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if m % 2 == 1 {
            pairs[m / 2].0 = 0.0;
        }
    }
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Gauss-Legendre rule with `m` nodes on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Result<Rule> {
    gauss_jacobi(m, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk_integrates_smooth_functions() {
        let r = integrate(|x: f64| x.sin(), 0.0, PI, 0.0, 1e-14, 100);
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gk_handles_endpoint_cusp() {
        // ∫_0^1 x^{1/4} dx = 4/5
        let r = integrate(|x: f64| x.powf(0.25), 0.0, 1.0, 1e-15, 1e-14, 500);
        assert!(r.converged);
        assert!((r.value - 0.8).abs() < 1e-13, "{}", r.value - 0.8);
    }

    #[test]
    fn jacobi_rule_is_exact_for_moments() {
        // ∫_{-1}^{1} (1-x)^a (1+x)^b x^k dx against closed forms for k = 0
        let (a, b) = (0.5, -0.75);
        let rule = gauss_jacobi(12, a, b).unwrap();
        let total: f64 = rule.weights.iter().sum();
        let exact = ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(a + b + 2.0))
        .exp();
        assert!((total - exact).abs() < 1e-13 * exact);
        // Legendre: ∫ x^10 = 2/11
        let gl = gauss_legendre(6).unwrap();
        let m10: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn gegenbauer_rule_is_symmetric() {
        let rule = gauss_jacobi(7, 1.0, 1.0).unwrap();
        for i in 0..7 {
            assert_eq!(rule.nodes[i], -rule.nodes[6 - i]);
            assert_eq!(rule.weights[i], rule.weights[6 - i]);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }
}
