//! Sums of terms `c·x^α·‖x‖₂^β` with exact Laplacians, their restrictions to
//! the unit sphere, and norming functionals of the star bodies used throughout.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// Relative threshold below which merged coefficients are treated as zero.
pub const ZERO_RELATIVE: f64 = 1e-14;

/// One term `coeff · ∏xᵢ^{αᵢ} · ‖x‖₂^beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPolyTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
    pub beta: f64,
}

impl RadialPolyTerm {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Homogeneity degree `m + β`.
    pub fn homogeneity(&self) -> f64 {
        self.degree() as f64 + self.beta
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.exponents
            .cmp(&other.exponents)
            .then(self.beta.total_cmp(&other.beta))
    }
}

/// A canonical sum of [`RadialPolyTerm`]s over ℝⁿ: one term per `(α, β)`,
/// sorted, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPolySum {
    dimension: usize,
    terms: Vec<RadialPolyTerm>,
}

fn monomial(x: &[f64], exps: &[u32]) -> f64 {
    x.iter().zip(exps).fold(1.0, |acc, (xi, &a)| acc * xi.powi(a as i32))
}

impl RadialPolySum {
    /// The zero function on ℝⁿ.
    pub fn zero(n: usize) -> Self {
        RadialPolySum {
            dimension: n,
            terms: Vec::new(),
        }
    }

    /// `coeff · ‖x‖₂^beta`.
    pub fn radial(n: usize, coeff: f64, beta: f64) -> Self {
        Self::single(n, coeff, vec![0; n], beta)
    }

    /// `coeff · x^exponents · ‖x‖₂^beta`; panics when the multi-index has the wrong length.
    pub fn single(n: usize, coeff: f64, exponents: Vec<u32>, beta: f64) -> Self {
        assert_eq!(exponents.len(), n, "multi-index length must equal the dimension");
        let mut s = Self::zero(n);
        s.push(RadialPolyTerm {
            coeff,
            exponents,
            beta,
        });
        s
    }

    /// Builds a canonical sum, rejecting malformed multi-indices.
    pub fn from_terms(n: usize, terms: Vec<RadialPolyTerm>) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let mut s = Self::zero(n);
        for t in terms {
            if t.exponents.len() != n {
                return Err(Error::Domain(format!(
                    "multi-index of length {} in dimension {n}",
                    t.exponents.len()
                )));
            }
            if !t.coeff.is_finite() || !t.beta.is_finite() {
                return Err(Error::Domain("non-finite coefficient or exponent".into()));
            }
            s.push(t);
        }
        s.prune();
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[RadialPolyTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common homogeneity degree, `None` for the zero sum or a mixed sum.
    pub fn homogeneity(&self) -> Option<f64> {
        let first = self.terms.first()?.homogeneity();
        let scale = 1.0 + first.abs();
        self.terms
            .iter()
            .all(|t| (t.homogeneity() - first).abs() <= 1e-12 * scale)
            .then_some(first)
    }

    /// Highest total degree of the polynomial parts.
    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree()).max().unwrap_or(0)
    }

    /// True when every multi-index is even.
    pub fn is_even(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.exponents.iter().all(|a| a % 2 == 0))
    }

    fn push(&mut self, term: RadialPolyTerm) {
        if term.coeff == 0.0 {
            return;
        }
        match self.terms.binary_search_by(|t| t.key_cmp(&term)) {
            Ok(i) => self.terms[i].coeff += term.coeff,
            Err(i) => self.terms.insert(i, term),
        }
    }

    fn prune(&mut self) {
        let max = self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
        self.terms
            .retain(|t| t.coeff != 0.0 && t.coeff.abs() >= ZERO_RELATIVE * max);
    }

    /// `self + other`.
    pub fn add(&self, other: &RadialPolySum) -> RadialPolySum {
        assert_eq!(self.dimension, other.dimension);
        let mut s = self.clone();
        for t in &other.terms {
            s.push(t.clone());
        }
        s.prune();
        s
    }

    /// `c · self`.
    pub fn scale(&self, c: f64) -> RadialPolySum {
        let mut s = self.clone();
        for t in &mut s.terms {
            t.coeff *= c;
        }
        s.prune();
        s
    }

    /// Product of two sums.
    pub fn mul(&self, other: &RadialPolySum) -> RadialPolySum {
        assert_eq!(self.dimension, other.dimension);
        let mut out = Self::zero(self.dimension);
        for a in &self.terms {
            for b in &other.terms {
                out.push(RadialPolyTerm {
                    coeff: a.coeff * b.coeff,
                    exponents: a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect(),
                    beta: a.beta + b.beta,
                });
            }
        }
        out.prune();
        out
    }

    /// `selfᵐ` for a non-negative integer power.
    pub fn powi(&self, m: u32) -> RadialPolySum {
        let mut out = Self::radial(self.dimension, 1.0, 0.0);
        for _ in 0..m {
            out = out.mul(self);
        }
        out
    }

    /// Exact Laplacian on ℝⁿ∖{0}, using
    /// `Δ(P r^β) = ΔP·r^β + β(n + 2m + β − 2)·P·r^{β−2}`.
    pub fn laplacian(&self) -> RadialPolySum {
        let n = self.dimension as f64;
        let mut out = Self::zero(self.dimension);
        for t in &self.terms {
            for (i, &a) in t.exponents.iter().enumerate() {
                if a >= 2 {
                    let mut e = t.exponents.clone();
                    e[i] -= 2;
                    out.push(RadialPolyTerm {
                        coeff: t.coeff * (a * (a - 1)) as f64,
                        exponents: e,
                        beta: t.beta,
                    });
                }
            }
            let m = t.degree() as f64;
            let factor = t.beta * (n + 2.0 * m + t.beta - 2.0);
            out.push(RadialPolyTerm {
                coeff: t.coeff * factor,
                exponents: t.exponents.clone(),
                beta: t.beta - 2.0,
            });
        }
        out.prune();
        out
    }

    /// `Δᵏ self`.
    pub fn iterated_laplacian(&self, k: usize) -> RadialPolySum {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.laplacian();
        }
        s
    }

    /// Restriction to the unit sphere: every radial factor becomes 1.
    pub fn restrict_to_sphere(&self) -> SpherePoly {
        let mut p = SpherePoly::zero(self.dimension);
        for t in &self.terms {
            p.push(t.coeff, t.exponents.clone());
        }
        p.prune();
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let parts: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.coeff * monomial(x, &t.exponents) * r.powf(t.beta))
            .collect();
        pairwise_sum(&parts)
    }

    /// Analytic gradient: `∂ᵢ(x^α r^β) = αᵢ x^{α−eᵢ} r^β + β xᵢ x^α r^{β−2}`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        let mut g = vec![0.0; self.dimension];
        for t in &self.terms {
            let rb = r.powf(t.beta);
            let full = t.coeff * monomial(x, &t.exponents) * rb;
            for i in 0..self.dimension {
                let a = t.exponents[i];
                if a > 0 {
                    let mut e = t.exponents.clone();
                    e[i] -= 1;
                    g[i] += t.coeff * a as f64 * monomial(x, &e) * rb;
                }
                g[i] += t.beta * x[i] * full / r2;
            }
        }
        g
    }
}

impl fmt::Display for RadialPolySum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            for (i, a) in t.exponents.iter().enumerate() {
                if *a > 0 {
                    write!(f, "*x{}^{}", i + 1, a)?;
                }
            }
            if t.beta != 0.0 {
                write!(f, "*r^{}", t.beta)?;
            }
        }
        Ok(())
    }
}

/// A polynomial `Σ c·x^α` viewed as a function on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoly {
    dimension: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

/// `∫_{S^{n−1}} x^α dx = 2∏Γ((αᵢ+1)/2) / Γ((|α|+n)/2)` for even α, zero otherwise.
pub fn sphere_monomial_moment(exponents: &[u32]) -> f64 {
    if exponents.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let n = exponents.len() as f64;
    let total: u32 = exponents.iter().sum();
    let num: f64 = exponents
        .iter()
        .map(|&a| ln_gamma((a as f64 + 1.0) / 2.0))
        .sum();
    2.0 * (num - ln_gamma((total as f64 + n) / 2.0)).exp()
}

impl SpherePoly {
    pub fn zero(n: usize) -> Self {
        SpherePoly {
            dimension: n,
            terms: Vec::new(),
        }
    }

    /// Builds a polynomial from `(coeff, α)` pairs, merging repeats.
    pub fn from_terms(n: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (c, e) in terms {
            if e.len() != n {
                return Err(Error::Domain(format!(
                    "multi-index of length {} in dimension {n}",
                    e.len()
                )));
            }
            p.push(c, e);
        }
        p.prune();
        Ok(p)
    }

    fn push(&mut self, c: f64, e: Vec<u32>) {
        if c == 0.0 {
            return;
        }
        match self.terms.binary_search_by(|t| t.1.cmp(&e)) {
            Ok(i) => self.terms[i].0 += c,
            Err(i) => self.terms.insert(i, (c, e)),
        }
    }

    fn prune(&mut self) {
        let max = self.terms.iter().map(|t| t.0.abs()).fold(0.0, f64::max);
        self.terms
            .retain(|t| t.0 != 0.0 && t.0.abs() >= ZERO_RELATIVE * max);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.1.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn is_even(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.1.iter().sum::<u32>() % 2 == 0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let parts: Vec<f64> = self.terms.iter().map(|(c, e)| c * monomial(x, e)).collect();
        pairwise_sum(&parts)
    }

    /// Gradient of the polynomial in the ambient space.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        for (c, e) in &self.terms {
            for i in 0..self.dimension {
                if e[i] > 0 {
                    let mut d = e.clone();
                    d[i] -= 1;
                    g[i] += c * e[i] as f64 * monomial(x, &d);
                }
            }
        }
        g
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SpherePoly, b: f64) -> SpherePoly {
        assert_eq!(self.dimension, other.dimension);
        let mut p = Self::zero(self.dimension);
        for (c, e) in &self.terms {
            p.push(a * c, e.clone());
        }
        for (c, e) in &other.terms {
            p.push(b * c, e.clone());
        }
        p.prune();
        p
    }

    pub fn scale(&self, a: f64) -> SpherePoly {
        self.combine(a, &Self::zero(self.dimension), 0.0)
    }

    /// Exact integral over the unit sphere.
    pub fn sphere_integral(&self) -> f64 {
        let parts: Vec<f64> = self
            .terms
            .iter()
            .map(|(c, e)| c * sphere_monomial_moment(e))
            .collect();
        pairwise_sum(&parts)
    }
}

/// All multi-indices of total degree `degree` in `n` variables, in lexicographic order.
pub fn monomials_of_degree(n: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(n, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, degree, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// Least-squares fit of sphere samples by a homogeneous polynomial of the
/// given degree (which spans every polynomial of that parity and lower degree
/// on the sphere). Returns the terms and the largest absolute residual.
pub fn fit_homogeneous(
    n: usize,
    degree: u32,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<(Vec<(f64, Vec<u32>)>, f64)> {
    use nalgebra::{DMatrix, DVector};
    let basis = monomials_of_degree(n, degree);
    if points.len() < basis.len() {
        return Err(Error::Domain(format!(
            "{} samples cannot determine {} coefficients",
            points.len(),
            basis.len()
        )));
    }
    let a = DMatrix::from_fn(points.len(), basis.len(), |i, j| monomial(&points[i], &basis[j]));
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let c = svd
        .solve(&b, 1e-13 * svd.singular_values.max())
        .map_err(|e| Error::Convergence(format!("least-squares solve failed: {e}")))?;
    let resid = (&a * &c - &b).amax();
    let terms = basis.into_iter().zip(c.iter()).map(|(e, &v)| (v, e)).collect();
    Ok((terms, resid))
}

/// Parses `x1^2*x2^2`, `3*x1^4 + x2^4` and similar into `(coeff, α)` pairs.
pub fn parse_polynomial(text: &str, n: usize) -> Result<Vec<(f64, Vec<u32>)>> {
    let mut out = Vec::new();
    for raw in text.split('+') {
        let term = raw.trim();
        if term.is_empty() {
            return Err(Error::Parse(format!("empty term in '{text}'")));
        }
        let mut coeff = 1.0;
        let mut exps = vec![0u32; n];
        for factor in term.split('*') {
            let factor = factor.trim();
            if let Some(rest) = factor.strip_prefix('x') {
                let (idx, pow) = match rest.split_once('^') {
                    Some((i, p)) => (i, p),
                    None => (rest, "1"),
                };
                let i: usize = idx
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad variable '{factor}'")))?;
                let p: u32 = pow
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad power in '{factor}'")))?;
                if i == 0 || i > n {
                    return Err(Error::Parse(format!("variable x{i} outside 1..={n}")));
                }
                exps[i - 1] += p;
            } else {
                let c: f64 = factor
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad factor '{factor}'")))?;
                coeff *= c;
            }
        }
        out.push((coeff, exps));
    }
    Ok(out)
}

/// Norming functionals of the star bodies handled by the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StarBodySpec {
    /// Unit ball of ℓ_p^n; `p = ∞` gives the cube.
    LpBall { p: f64, n: usize },
    /// `‖x‖ = ‖x‖₂ + λ·poly(x)` with `poly` even and homogeneous of degree 1.
    PerturbedEuclidean { lambda: f64, poly: RadialPolySum },
    /// `‖u‖` tabulated at unit directions, interpolated by inverse squared
    /// distance to the nearer of ±direction and extended by homogeneity.
    TabulatedRadial {
        directions: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl StarBodySpec {
    pub fn lp_ball(p: f64, n: usize) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("p must be positive, got {p}")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
        }
        Ok(StarBodySpec::LpBall { p, n })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::lp_ball(2.0, n)
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::lp_ball(f64::INFINITY, n)
    }

    /// Validates evenness, homogeneity and positivity on the sphere.
    pub fn perturbed(lambda: f64, poly: RadialPolySum) -> Result<Self> {
        let n = poly.dimension();
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
        }
        if !lambda.is_finite() {
            return Err(Error::Domain("lambda must be finite".into()));
        }
        if !poly.is_even() {
            return Err(Error::Parity("perturbation must use even monomials only".into()));
        }
        if !poly.is_zero() {
            match poly.homogeneity() {
                Some(d) if (d - 1.0).abs() < 1e-12 => {}
                _ => {
                    return Err(Error::Domain(
                        "perturbation must be homogeneous of degree 1".into(),
                    ))
                }
            }
        }
        let spec = StarBodySpec::PerturbedEuclidean { lambda, poly };
        let min = spec.min_on_sphere_sampled();
        if !(min > 0.0) {
            return Err(Error::Domain(format!(
                "norm is not positive on the sphere at lambda = {lambda} (minimum {min:e})"
            )));
        }
        Ok(spec)
    }

    /// Perturbation `Σ c·x^α·‖x‖₂^{1−|α|}` from a polynomial string.
    pub fn perturbed_from_text(lambda: f64, n: usize, text: &str) -> Result<Self> {
        let terms = parse_polynomial(text, n)?
            .into_iter()
            .map(|(c, e)| {
                let m: u32 = e.iter().sum();
                RadialPolyTerm {
                    coeff: c,
                    exponents: e,
                    beta: 1.0 - m as f64,
                }
            })
            .collect();
        Self::perturbed(lambda, RadialPolySum::from_terms(n, terms)?)
    }

    pub fn tabulated(directions: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if directions.is_empty() || directions.len() != values.len() {
            return Err(Error::Domain("directions and values must be nonempty and of equal length".into()));
        }
        let n = directions[0].len();
        if n < 2 {
            return Err(Error::Domain("dimension must be at least 2".into()));
        }
        let mut dirs = Vec::with_capacity(directions.len());
        for d in directions {
            if d.len() != n {
                return Err(Error::Domain("directions differ in dimension".into()));
            }
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Domain("zero or non-finite direction".into()));
            }
            dirs.push(d.iter().map(|v| v / norm).collect());
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("tabulated norms must be positive and finite".into()));
        }
        Ok(StarBodySpec::TabulatedRadial {
            directions: dirs,
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            StarBodySpec::LpBall { n, .. } => *n,
            StarBodySpec::PerturbedEuclidean { poly, .. } => poly.dimension(),
            StarBodySpec::TabulatedRadial { directions, .. } => directions[0].len(),
        }
    }

    /// `Some(p)` for ℓ_p balls (including `p = ∞`).
    pub fn lp_exponent(&self) -> Option<f64> {
        match self {
            StarBodySpec::LpBall { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Evaluates `‖x‖`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::Domain(format!(
                "point of dimension {} for a body in dimension {}",
                x.len(),
                self.dimension()
            )));
        }
        match self {
            StarBodySpec::LpBall { p, .. } => Ok(lp_norm(x, *p)),
            StarBodySpec::PerturbedEuclidean { lambda, poly } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    return Ok(0.0);
                }
                Ok(r + lambda * poly.eval(x))
            }
            StarBodySpec::TabulatedRadial { directions, values } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    return Err(Error::Domain("tabulated norm at the origin".into()));
                }
                let u: Vec<f64> = x.iter().map(|v| v / r).collect();
                let mut num = 0.0;
                let mut den = 0.0;
                for (d, v) in directions.iter().zip(values) {
                    let dot: f64 = d.iter().zip(&u).map(|(a, b)| a * b).sum();
                    let dist2 = (2.0 - 2.0 * dot.abs()).max(0.0);
                    if dist2 < 1e-28 {
                        return Ok(r * v);
                    }
                    num += v / dist2;
                    den += 1.0 / dist2;
                }
                Ok(r * num / den)
            }
        }
    }

    /// Minimum of `‖u‖` over a product grid of the sphere.
    fn min_on_sphere_sampled(&self) -> f64 {
        let n = self.dimension();
        let res = match n {
            2 => 512,
            3 => 96,
            4 => 32,
            5 => 14,
            _ => 8,
        };
        let grid = match crate::spherical::build_grid(n, res) {
            Ok(g) => g,
            Err(_) => return f64::NAN,
        };
        grid.nodes()
            .iter()
            .map(|u| self.norm(u).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.min(b) })
    }

    /// Short textual description, e.g. `lp:1.5:3`.
    pub fn label(&self) -> String {
        match self {
            StarBodySpec::LpBall { p, n } if p.is_infinite() => format!("linf:{n}"),
            StarBodySpec::LpBall { p, n } if *p == 2.0 => format!("euclid:{n}"),
            StarBodySpec::LpBall { p, n } => format!("lp:{p}:{n}"),
            StarBodySpec::PerturbedEuclidean { lambda, poly } => {
                format!("perturbed:{}:{} (lambda {lambda})", poly.dimension(), poly)
            }
            StarBodySpec::TabulatedRadial { directions, .. } => {
                format!("tabulated:{}:{}", directions[0].len(), directions.len())
            }
        }
    }
}

/// `(Σ|xᵢ|^p)^{1/p}`, or `max|xᵢ|` for `p = ∞`, scaled to avoid overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    if p == 2.0 {
        let s: f64 = x.iter().map(|v| (v / m) * (v / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}
