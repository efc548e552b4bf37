//! Target wealth distributions.
//!
//! Every engine works with the *normal-score quantile* `Q(z) = F⁻¹(Φ(z))`, the
//! target quantile function read on the Gaussian scale. Each family stores `Q`
//! in whatever form is exact for it: a sum of exponentials, the whole-line
//! example's `H(z/κ)`, or a monotone spline of `log Q` for elicited markers.

use crate::numerics::{expanding_inverse, norm_cdf, norm_pdf, norm_quantile, Pchip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all marker levels are equal; a continuous target needs spread")]
    DegenerateMarkers,
    #[error("growth certificate failed: {0}")]
    GrowthViolation(String),
    #[error("no closed-form analytic extension for the {0} family")]
    NoAnalyticExtension(String),
}

/// `Σ c_j e^{r_j w}` with positive coefficients and rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSum {
    pub terms: Vec<(f64, f64)>,
}

impl ExpSum {
    pub fn eval(&self, w: f64) -> f64 {
        self.terms.iter().map(|(c, r)| c * (r * w).exp()).sum()
    }

    pub fn deriv(&self, w: f64) -> f64 {
        self.terms.iter().map(|(c, r)| c * r * (r * w).exp()).sum()
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(c, r)| (z * *r).exp() * *c).sum()
    }

    pub fn deriv_complex(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(c, r)| (z * *r).exp() * (c * r)).sum()
    }

    /// `E[Σ c e^{r(w + √v S)}]`: the heat flow of the sum over variance `v`.
    pub fn heat(&self, w: f64, v: f64) -> f64 {
        self.terms.iter().map(|(c, r)| c * (r * w + 0.5 * r * r * v).exp()).sum()
    }

    pub fn heat_dx(&self, w: f64, v: f64) -> f64 {
        self.terms.iter().map(|(c, r)| c * r * (r * w + 0.5 * r * r * v).exp()).sum()
    }

    /// Rescales the argument: `w ↦ s·w`.
    pub fn scaled(&self, s: f64) -> ExpSum {
        ExpSum { terms: self.terms.iter().map(|&(c, r)| (c, r * s)).collect() }
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.1).fold(0.0, f64::max)
    }
}

/// Wire description of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DistributionSpec {
    Lognormal { b: f64 },
    TransformedNormal { b: f64 },
    Markers { levels: Vec<f64> },
    CustomQuantileTable { table: Vec<(f64, f64)> },
    /// Whole-line target `F(y) = Φ(√(1 + 1/A)·H⁻¹(y))`, `H(x) = ∫₀ˣ e^{z²/2}dz`.
    WholeLine { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum GrowthClass {
    /// `|Q(z)| ≤ k e^{a|z|}`.
    Exponential { k: f64, a: f64 },
    /// `|Q(z)| ≤ k e^{a z²}` with `a < ½`.
    Subgaussian { k: f64, a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Lognormal,
    TransformedNormal,
    MarkerEmpirical,
    Custom,
    WholeLine,
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyTag::Lognormal => "lognormal",
            FamilyTag::TransformedNormal => "transformed-normal",
            FamilyTag::MarkerEmpirical => "marker-empirical",
            FamilyTag::Custom => "custom",
            FamilyTag::WholeLine => "whole-line",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Exp(ExpSum),
    WholeLine { kappa: f64 },
    Spline(Pchip),
}

#[derive(Debug, Clone)]
pub struct TargetDistribution {
    tag: FamilyTag,
    param: Option<f64>,
    repr: Repr,
    growth: GrowthClass,
}

const PROBE_LO: f64 = -8.0;
const PROBE_HI: f64 = 8.0;

pub fn lognormal_family(b: f64) -> Result<TargetDistribution, DistributionError> {
    check_positive("b", b)?;
    let s = b.sqrt();
    Ok(TargetDistribution {
        tag: FamilyTag::Lognormal,
        param: Some(b),
        repr: Repr::Exp(ExpSum { terms: vec![(1.0, s)] }),
        growth: GrowthClass::Exponential { k: 1.0, a: s },
    })
}

/// `g(X) = log(−1 + √(1 + X))` is centred normal with variance `b`, so
/// `Q(z) = e^{2√b z} + 2e^{√b z}`.
pub fn transformed_normal_family(b: f64) -> Result<TargetDistribution, DistributionError> {
    check_positive("b", b)?;
    let s = b.sqrt();
    Ok(TargetDistribution {
        tag: FamilyTag::TransformedNormal,
        param: Some(b),
        repr: Repr::Exp(ExpSum { terms: vec![(1.0, 2.0 * s), (2.0, s)] }),
        growth: GrowthClass::Exponential { k: 3.0, a: 2.0 * s },
    })
}

pub fn whole_line_family(a: f64) -> Result<TargetDistribution, DistributionError> {
    check_positive("A", a)?;
    let kappa = (1.0 + 1.0 / a).sqrt();
    Ok(TargetDistribution {
        tag: FamilyTag::WholeLine,
        param: Some(a),
        repr: Repr::WholeLine { kappa },
        growth: GrowthClass::Subgaussian { k: 2.0, a: 0.5 / (kappa * kappa) },
    })
}

/// Smooth continuous lift of `N` equally likely wealth markers.
pub fn from_markers(levels: &[f64]) -> Result<TargetDistribution, DistributionError> {
    let n = levels.len();
    if n < 10 {
        return Err(DistributionError::InvalidParameter(format!(
            "need at least 10 markers, got {n}"
        )));
    }
    if levels.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(DistributionError::InvalidParameter(
            "marker levels must be positive and finite".into(),
        ));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let scores: Vec<f64> = (1..=n).map(|i| norm_quantile((2.0 * i as f64 - 1.0) / (2.0 * nf))).collect();
    // Tied levels collapse to one knot at the mean score of the tie group.
    let mut z = Vec::new();
    let mut lx = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let zm = scores[i..=j].iter().sum::<f64>() / (j - i + 1) as f64;
        z.push(zm);
        lx.push(sorted[i].ln());
        i = j + 1;
    }
    if z.len() < 2 {
        return Err(DistributionError::DegenerateMarkers);
    }
    spline_distribution(FamilyTag::MarkerEmpirical, z, lx)
}

/// Quantile table of `(p, x)` pairs, strictly increasing in both coordinates.
pub fn from_quantile_table(table: &[(f64, f64)]) -> Result<TargetDistribution, DistributionError> {
    if table.len() < 2 {
        return Err(DistributionError::InvalidParameter("quantile table needs two rows".into()));
    }
    for w in table.windows(2) {
        if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
            return Err(DistributionError::InvalidParameter(
                "quantile table must be strictly increasing in p and x".into(),
            ));
        }
    }
    if table.iter().any(|&(p, x)| !(p > 0.0 && p < 1.0 && x > 0.0 && x.is_finite())) {
        return Err(DistributionError::InvalidParameter(
            "table rows need p in (0,1) and x > 0".into(),
        ));
    }
    let z = table.iter().map(|r| norm_quantile(r.0)).collect();
    let lx = table.iter().map(|r| r.1.ln()).collect();
    spline_distribution(FamilyTag::Custom, z, lx)
}

fn spline_distribution(tag: FamilyTag, z: Vec<f64>, lx: Vec<f64>) -> Result<TargetDistribution, DistributionError> {
    let spline = Pchip::new(z, lx, None);
    let (zk, lk) = spline.knots();
    let k = lk[0].max(spline.eval(0.0).0).exp();
    // log Q(z) ≤ log Q(0) + a·z for z ≥ 0 where a bounds the spline slope.
    let (_, tail) = spline.end_slopes();
    let z_end = zk[zk.len() - 1].max(0.0);
    let mut a = tail;
    let steps = 4000;
    for s in 0..=steps {
        let t = z_end * s as f64 / steps as f64;
        a = a.max(spline.eval(t).1);
    }
    let a = a * 1.01 + 1e-12;
    let dist = TargetDistribution {
        tag,
        param: None,
        repr: Repr::Spline(spline),
        growth: GrowthClass::Exponential { k, a },
    };
    if !dist.verify_growth(dist.growth) {
        return Err(DistributionError::GrowthViolation(format!(
            "quantile exceeds {k:.6}·e^({a:.6}|z|) on the probe grid"
        )));
    }
    Ok(dist)
}

pub fn from_spec(spec: &DistributionSpec) -> Result<TargetDistribution, DistributionError> {
    match spec {
        DistributionSpec::Lognormal { b } => lognormal_family(*b),
        DistributionSpec::TransformedNormal { b } => transformed_normal_family(*b),
        DistributionSpec::Markers { levels } => from_markers(levels),
        DistributionSpec::CustomQuantileTable { table } => from_quantile_table(table),
        DistributionSpec::WholeLine { a } => whole_line_family(*a),
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), DistributionError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `H(x) = ∫₀ˣ e^{z²/2} dz` by its everywhere-convergent series.
pub fn whole_line_h(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^{2n+1} / (2^n n!)
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= x2 / (2.0 * n);
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() || n > 2000.0 {
            return sum;
        }
    }
}

impl TargetDistribution {
    pub fn family(&self) -> FamilyTag {
        self.tag
    }

    /// The defining parameter (`b`, or `A` for the whole-line family).
    pub fn parameter(&self) -> Option<f64> {
        self.param
    }

    pub fn growth_class(&self) -> GrowthClass {
        self.growth
    }

    /// `true` when the support is `(0, ∞)`.
    pub fn is_positive(&self) -> bool {
        self.tag != FamilyTag::WholeLine
    }

    pub fn spec(&self) -> Option<DistributionSpec> {
        match (self.tag, self.param) {
            (FamilyTag::Lognormal, Some(b)) => Some(DistributionSpec::Lognormal { b }),
            (FamilyTag::TransformedNormal, Some(b)) => Some(DistributionSpec::TransformedNormal { b }),
            (FamilyTag::WholeLine, Some(a)) => Some(DistributionSpec::WholeLine { a }),
            _ => None,
        }
    }

    /// Exact exponential-sum form of `Q`, when the family has one.
    pub fn exp_sum(&self) -> Option<&ExpSum> {
        match &self.repr {
            Repr::Exp(e) => Some(e),
            _ => None,
        }
    }

    /// `Q(z) = F⁻¹(Φ(z))`.
    pub fn score_quantile(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Exp(e) => e.eval(z),
            Repr::WholeLine { kappa } => whole_line_h(z / kappa),
            Repr::Spline(s) => s.eval(z).0.exp(),
        }
    }

    /// `Q′(z)`, equal to `φ(z) / f(Q(z))`.
    pub fn score_quantile_dz(&self, z: f64) -> f64 {
        match &self.repr {
            Repr::Exp(e) => e.deriv(z),
            Repr::WholeLine { kappa } => (0.5 * (z / kappa).powi(2)).exp() / kappa,
            Repr::Spline(s) => {
                let (l, d) = s.eval(z);
                l.exp() * d
            }
        }
    }

    /// Analytic continuation of `Q′` for families where it is available in closed form.
    pub fn score_quantile_dz_complex(&self, z: Complex64) -> Option<Complex64> {
        match &self.repr {
            Repr::Exp(e) => Some(e.deriv_complex(z)),
            Repr::WholeLine { kappa } => Some((z * z / (2.0 * kappa * kappa)).exp() / *kappa),
            Repr::Spline(_) => None,
        }
    }

    /// `Φ⁻¹(F(x))`, computed directly where possible.
    pub fn score(&self, x: f64) -> f64 {
        if self.is_positive() && x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match (&self.repr, self.tag) {
            (Repr::Exp(_), FamilyTag::Lognormal) => x.ln() / self.param.unwrap_or(1.0).sqrt(),
            (Repr::Exp(_), _) => {
                // log(−1 + √(1+x)) without cancellation.
                let g = (x / (1.0 + (1.0 + x).sqrt())).ln();
                g / self.param.unwrap_or(1.0).sqrt()
            }
            (Repr::WholeLine { kappa }, _) => {
                let hinv = expanding_inverse(whole_line_h, x, x.signum() * x.abs().ln_1p(), 1e-15)
                    .unwrap_or(f64::NAN);
                kappa * hinv
            }
            (Repr::Spline(s), _) => {
                let lx = x.ln();
                expanding_inverse(|z| s.eval(z).0, lx, 0.0, 1e-15).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        norm_cdf(self.score(x))
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.score_quantile(norm_quantile(p))
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = self.score(x);
        if !z.is_finite() {
            return 0.0;
        }
        norm_pdf(z) / self.score_quantile_dz(z)
    }

    /// Checks the growth bound numerically on `z ∈ [−8, 8]`.
    pub fn verify_growth(&self, class: GrowthClass) -> bool {
        let n = 1600;
        (0..=n).all(|i| {
            let z = PROBE_LO + (PROBE_HI - PROBE_LO) * i as f64 / n as f64;
            let q = self.score_quantile(z).abs();
            let bound = match class {
                GrowthClass::Exponential { k, a } => k * (a * z.abs()).exp(),
                GrowthClass::Subgaussian { k, a } => {
                    if a >= 0.5 {
                        return false;
                    }
                    k * (a * z * z).exp()
                }
            };
            q.is_finite() && q <= bound * (1.0 + 1e-12)
        })
    }
}

/// Closed-form entire extension `G(z) = F⁻¹(Φ(c·z/√Â))` used by the intermediate engine.
#[derive(Clone)]
pub struct AnalyticQuantileExtension {
    form: GForm,
    pub c: f64,
    pub a_hat: f64,
}

#[derive(Clone)]
enum GForm {
    Exp(ExpSum),
    Entire(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for AnalyticQuantileExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("AnalyticQuantileExtension");
        match &self.form {
            GForm::Exp(e) => d.field("exp_sum", e),
            GForm::Entire(_) => d.field("entire", &"<fn>"),
        };
        d.field("c", &self.c).field("a_hat", &self.a_hat).finish()
    }
}

pub fn analytic_extension(
    dist: &TargetDistribution,
    c: f64,
    a_hat: f64,
) -> Result<AnalyticQuantileExtension, DistributionError> {
    check_positive("c", c)?;
    check_positive("A_hat", a_hat)?;
    match (&dist.repr, dist.tag) {
        (Repr::Exp(e), FamilyTag::Lognormal | FamilyTag::TransformedNormal) => Ok(AnalyticQuantileExtension {
            form: GForm::Exp(e.scaled(c / a_hat.sqrt())),
            c,
            a_hat,
        }),
        _ => Err(DistributionError::NoAnalyticExtension(dist.tag.to_string())),
    }
}

impl AnalyticQuantileExtension {
    /// Wraps a caller-supplied entire function; entirety is the caller's claim and
    /// is not checked.
    pub fn from_entire_fn<F>(g: F, c: f64, a_hat: f64) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self { form: GForm::Entire(Arc::new(g)), c, a_hat }
    }

    pub fn exp_sum(&self) -> Option<&ExpSum> {
        match &self.form {
            GForm::Exp(e) => Some(e),
            GForm::Entire(_) => None,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.form {
            GForm::Exp(e) => e.eval_complex(z),
            GForm::Entire(g) => g(z),
        }
    }

    /// `G′(z)`: exact for exponential sums, otherwise a 32-point Cauchy integral
    /// on a circle of radius ¼, which is spectrally accurate for entire functions.
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        match &self.form {
            GForm::Exp(e) => e.deriv_complex(z),
            GForm::Entire(g) => {
                let n = 32;
                let rho = 0.25;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
                    acc += g(z + w * rho) / w;
                }
                acc / (n as f64 * rho)
            }
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }
}
