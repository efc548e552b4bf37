//! Flexible-horizon target: the defining measure `ν` of a monotone forward
//! performance process is read off the Fourier transform `φ_ν(x) = h_x(ix, 0)`,
//! recovered from samples, and turned into `h`, `u₀′` and `u(x, t)`.
//!
//! Reported measures use the unit-wealth normalization `h_ν(0, 0) = 1`; the
//! harmonic function that drives wealth is `scale · h_ν(x + shift, t)` with
//! `scale` the budget and `shift = A_T`, so that `h⁻¹(x₀, 0) = −A_T`.

use crate::distribution::{GrowthClass, TargetDistribution};
use crate::error::EngineError;
use crate::fixed_horizon::{budget_integral, check_feasibility, Feasibility};
use crate::harmonic::{Backing, Clock, ExpSumHarmonic, HarmonicFunction};
use crate::market::MarketCurves;
use crate::numerics::{gauss_legendre_rule, gaussian_integrate, QuadratureSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const PROBE_HALF_WIDTH: f64 = 40.0;
pub const PROBE_POINTS: usize = 1025;
pub const MAX_ATOMS: usize = 8;
/// Relative `ℓ²` misfit on the probe grid below which a recovered form is accepted.
pub const FIT_TOLERANCE: f64 = 1e-6;
/// Negative density values above `−NEGATIVE_CLIP` are treated as round-off.
pub const NEGATIVE_CLIP: f64 = 1e-8;
pub const MASS_TOLERANCE: f64 = 1e-6;
pub const SUPPORT_FLOOR: f64 = 1e-4;
/// Largest tolerated amplification `e^{x²/2A}` in the literal transform integral.
pub const LITERAL_AMPLIFICATION_LIMIT: f64 = 1e8;
/// Relative margin in the fitted tail-rate admissibility test.
pub const ADMISSIBILITY_MARGIN: f64 = 0.05;

fn check_forward_target(dist: &TargetDistribution) -> Result<(), EngineError> {
    let ok = match dist.growth_class() {
        GrowthClass::Exponential { .. } => true,
        GrowthClass::Subgaussian { a, .. } => a < 0.5,
    };
    if ok && dist.verify_growth(dist.growth_class()) {
        Ok(())
    } else {
        Err(EngineError::UnsupportedDistribution(format!(
            "the {} target violates the growth bound needed for a unique heat-equation solution",
            dist.family()
        )))
    }
}

/// Same integral as the terminal budget; sub-Gaussian quantile growth with rate below ½ is allowed.
pub fn budget_constraint_forward(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EngineError> {
    check_forward_target(dist)?;
    budget_integral(dist, curves.a(t)?, spec)
}

/// Scale and shift tying the unit-normalized measure to the wealth equation:
/// `h(x, t) = scale · h_ν(x + shift, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub shift: f64,
}

/// `x ↦ φ_ν(x)` for a target, market and horizon.
#[derive(Debug, Clone)]
pub struct ForwardTransform {
    dist: TargetDistribution,
    a: f64,
    spec: QuadratureSpec,
    normalization: Option<Normalization>,
}

impl ForwardTransform {
    pub fn new(
        dist: &TargetDistribution,
        curves: &MarketCurves,
        t: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self, EngineError> {
        check_forward_target(dist)?;
        spec.validate()?;
        let a = curves.a(t)?;
        if !(a > 0.0) {
            return Err(EngineError::TimeOutOfRange { t, range: "t with A_t > 0".into() });
        }
        for i in 0..=1600 {
            let z = -8.0 + i as f64 * 0.01;
            let d = dist.score_quantile_dz(z);
            if !(d.is_finite() && d > 0.0) {
                return Err(EngineError::DensityVanishes { z });
            }
        }
        let budget = budget_integral(dist, a, spec)?;
        // A target on the whole line can have a non-positive budget; its transform is then
        // reported without normalization.
        let normalization = (budget > 0.0).then_some(Normalization { scale: budget, shift: a });
        Ok(Self { dist: dist.clone(), a, spec: *spec, normalization })
    }

    pub fn normalization(&self) -> Option<Normalization> {
        self.normalization
    }

    pub fn a_total(&self) -> f64 {
        self.a
    }

    /// `h_x(w, 0)` at complex `w` for the raw convolution solution.
    fn raw_derivative(&self, w: Complex64) -> Result<Complex64, EngineError> {
        let sa = self.a.sqrt();
        if self.dist.score_quantile_dz_complex(Complex64::new(0.0, 0.0)).is_some() {
            let d = &self.dist;
            let v: Complex64 = gaussian_integrate(
                |s| d.score_quantile_dz_complex(w / sa + s).unwrap_or(Complex64::new(f64::NAN, 0.0)),
                0.0,
                1.0,
                &self.spec,
            )?;
            return Ok(v / sa);
        }
        // No continuation available: integrate the Gaussian kernel at a complex
        // argument directly. The kernel contributes e^{x²/2A}, which destroys
        // relative accuracy quickly.
        let (u, x) = (w.re, w.im);
        let amp = (x * x / (2.0 * self.a)).exp();
        if !(amp <= LITERAL_AMPLIFICATION_LIMIT) {
            return Err(EngineError::IntegralDivergence(format!(
                "the transform at x = {x} amplifies quadrature error by {amp:.3e}; the {} target has no \
                 analytic continuation to evaluate it stably",
                self.dist.family()
            )));
        }
        let d = &self.dist;
        let a = self.a;
        let v: Complex64 = gaussian_integrate(
            |y| {
                let g = d.score_quantile_dz(y / sa) / sa;
                Complex64::from_polar(g, x * (y - u) / a)
            },
            u,
            a,
            &self.spec,
        )?;
        Ok(v * amp)
    }

    /// `φ_ν(x)`.
    pub fn eval(&self, x: f64) -> Result<Complex64, EngineError> {
        match self.normalization {
            Some(n) => Ok(self.raw_derivative(Complex64::new(-n.shift, x))? / n.scale),
            None => self.raw_derivative(Complex64::new(0.0, x)),
        }
    }

    /// Samples on the symmetric probe grid `[−X, X]`.
    pub fn sample(&self, half_width: f64, points: usize) -> Result<FourierSamples, EngineError> {
        let xs = probe_grid(half_width, points);
        let phi = xs.iter().map(|&x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
        FourierSamples::new(xs, phi)
    }
}

pub fn probe_grid(half_width: f64, points: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points)
        .map(|k| if 2 * k + 1 == points { 0.0 } else { -half_width + k as f64 * step })
        .collect()
}

/// `φ_ν(x)` for a single `x`.
pub fn fourier_of_measure(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64, EngineError> {
    ForwardTransform::new(dist, curves, t, spec)?.eval(x)
}

/// `φ_ν` on a symmetric, uniform grid.
#[derive(Debug, Clone)]
pub struct FourierSamples {
    pub x: Vec<f64>,
    pub phi: Vec<Complex64>,
}

impl FourierSamples {
    pub fn new(x: Vec<f64>, phi: Vec<Complex64>) -> Result<Self, EngineError> {
        let n = x.len();
        if n != phi.len() {
            return Err(EngineError::RecoveryFailure("sample and grid lengths differ".into()));
        }
        if n < 257 || n % 2 == 0 {
            return Err(EngineError::RecoveryFailure(format!(
                "the probe grid needs an odd number of at least 257 points, got {n}"
            )));
        }
        let half = x[n - 1];
        let step = 2.0 * half / (n - 1) as f64;
        for k in 0..n {
            let sym = (x[k] + x[n - 1 - k]).abs();
            let uni = (x[k] - (-half + k as f64 * step)).abs();
            if sym > 1e-12 * half || uni > 1e-9 * step {
                return Err(EngineError::RecoveryFailure("the probe grid must be symmetric and uniform".into()));
            }
        }
        Ok(Self { x, phi })
    }

    pub fn at_zero(&self) -> Complex64 {
        self.phi[self.x.len() / 2]
    }

    fn step(&self) -> f64 {
        let n = self.x.len();
        (self.x[n - 1] - self.x[0]) / (n - 1) as f64
    }

    fn norm(&self) -> f64 {
        self.phi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub y: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum MeasureForm {
    Atomic { atoms: Vec<Atom> },
    Density { grid: Vec<DensityPoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredMeasure {
    #[serde(flatten)]
    pub form: MeasureForm,
    pub total_mass: f64,
    pub admissible: bool,
    /// Relative misfit of the recovered form's transform on the probe grid.
    pub residual: f64,
    /// Mass discarded below the support floor (density form only).
    pub clipped_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

impl RecoveredMeasure {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self, EngineError> {
        if atoms.is_empty() || atoms.iter().any(|a| !(a.y > 0.0 && a.m > 0.0 && a.y.is_finite() && a.m.is_finite())) {
            return Err(EngineError::SupportViolation { mass: f64::NAN });
        }
        let total_mass = atoms.iter().map(|a| a.m).sum();
        Ok(Self {
            form: MeasureForm::Atomic { atoms },
            total_mass,
            admissible: true,
            residual: 0.0,
            clipped_mass: 0.0,
            normalization: None,
        })
    }

    /// A density on a uniform grid of positive locations.
    pub fn density(grid: Vec<DensityPoint>) -> Result<Self, EngineError> {
        if grid.len() < 3 || grid.iter().any(|p| !(p.y > 0.0) || !(p.w >= 0.0)) {
            return Err(EngineError::SupportViolation { mass: f64::NAN });
        }
        let mut m = Self {
            form: MeasureForm::Density { grid },
            total_mass: 0.0,
            admissible: false,
            residual: 0.0,
            clipped_mass: 0.0,
            normalization: None,
        };
        m.total_mass = m.point_masses().iter().map(|a| a.1).sum();
        m.admissible = check_admissibility(&m, 1.0);
        Ok(m)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.form, MeasureForm::Atomic { .. })
    }

    /// `(y, ν({y}))` pairs; a density is discretized with midpoint cell widths.
    pub fn point_masses(&self) -> Vec<(f64, f64)> {
        match &self.form {
            MeasureForm::Atomic { atoms } => atoms.iter().map(|a| (a.y, a.m)).collect(),
            MeasureForm::Density { grid } => {
                let n = grid.len();
                (0..n)
                    .map(|j| {
                        let lo = if j == 0 { grid[0].y } else { 0.5 * (grid[j - 1].y + grid[j].y) };
                        let hi = if j + 1 == n { grid[n - 1].y } else { 0.5 * (grid[j].y + grid[j + 1].y) };
                        (grid[j].y, grid[j].w * (hi - lo))
                    })
                    .filter(|p| p.1 > 0.0)
                    .collect()
            }
        }
    }

    /// The measure multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        let form = match &self.form {
            MeasureForm::Atomic { atoms } => MeasureForm::Atomic {
                atoms: atoms.iter().map(|a| Atom { y: a.y, m: k * a.m }).collect(),
            },
            MeasureForm::Density { grid } => MeasureForm::Density {
                grid: grid.iter().map(|p| DensityPoint { y: p.y, w: k * p.w }).collect(),
            },
        };
        Self { form, total_mass: k * self.total_mass, clipped_mass: k * self.clipped_mass, ..self.clone() }
    }

    /// `∫ e^{iyx} ν(dy)`.
    pub fn transform(&self, x: f64) -> Complex64 {
        self.point_masses().iter().map(|&(y, m)| Complex64::from_polar(m, x * y)).sum()
    }
}

/// Atomic fit first, density inversion second.
pub fn recover_measure(samples: &FourierSamples) -> Result<RecoveredMeasure, EngineError> {
    let p0 = samples.at_zero();
    if !(p0.re > 0.0 && p0.im.abs() <= 1e-8 * p0.re) {
        return Err(EngineError::RecoveryFailure(format!(
            "φ(0) = {p0} is not a positive real total mass"
        )));
    }
    let atomic = fit_atoms(samples);
    if let Some((atoms, residual)) = &atomic {
        if *residual < FIT_TOLERANCE {
            let mut m = RecoveredMeasure::atomic(atoms.clone())?;
            m.residual = *residual;
            return Ok(m);
        }
    }
    let atomic_residual = atomic.map(|a| a.1).unwrap_or(f64::INFINITY);
    let mut m = invert_density(samples)?;
    if m.residual < FIT_TOLERANCE {
        return Ok(m);
    }
    m.admissible = false;
    Err(EngineError::RecoveryFailure(format!(
        "best atomic misfit {atomic_residual:.3e}, density misfit {:.3e}, tolerance {FIT_TOLERANCE:.0e}",
        m.residual
    )))
}

fn relative_misfit(samples: &FourierSamples, atoms: &[(f64, f64)]) -> f64 {
    let r: f64 = samples
        .x
        .iter()
        .zip(&samples.phi)
        .map(|(&x, &p)| {
            let s: Complex64 = atoms.iter().map(|&(y, m)| Complex64::from_polar(m, x * y)).sum();
            (s - p).norm_sqr()
        })
        .sum();
    r.sqrt() / samples.norm()
}

/// Candidate locations from the peaks of a Hann-windowed inversion.
fn peak_locations(samples: &FourierSamples) -> Vec<f64> {
    let n = samples.x.len();
    let dx = samples.step();
    let half = samples.x[n - 1];
    let y_max = PI / dx;
    let m = 4 * n;
    let dy = 2.0 * y_max / (m - 1) as f64;
    let windowed: Vec<Complex64> = samples
        .x
        .iter()
        .zip(&samples.phi)
        .map(|(&x, &p)| p * 0.5 * (1.0 + (PI * x / half).cos()))
        .collect();
    let spectrum: Vec<f64> = (0..m)
        .map(|j| {
            let y = -y_max + j as f64 * dy;
            let s: Complex64 = samples
                .x
                .iter()
                .zip(&windowed)
                .map(|(&x, &w)| w * Complex64::from_polar(1.0, -x * y))
                .sum();
            s.norm()
        })
        .collect();
    let top = spectrum.iter().cloned().fold(0.0, f64::max);
    let mut peaks: Vec<(f64, f64)> = (1..m - 1)
        .filter(|&j| spectrum[j] >= spectrum[j - 1] && spectrum[j] > spectrum[j + 1] && spectrum[j] >= 1e-3 * top)
        .map(|j| (spectrum[j], -y_max + j as f64 * dy))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    peaks.into_iter().map(|p| p.1).take(MAX_ATOMS).collect()
}

/// Real masses minimizing the misfit for fixed locations.
fn least_squares_masses(samples: &FourierSamples, ys: &[f64]) -> Option<Vec<f64>> {
    let j = ys.len();
    let mut g = DMatrix::<f64>::zeros(j, j);
    let mut rhs = DVector::<f64>::zeros(j);
    for (&x, &p) in samples.x.iter().zip(&samples.phi) {
        let e: Vec<Complex64> = ys.iter().map(|&y| Complex64::from_polar(1.0, x * y)).collect();
        for a in 0..j {
            rhs[a] += (e[a].conj() * p).re;
            for b in 0..j {
                g[(a, b)] += (e[a].conj() * e[b]).re;
            }
        }
    }
    g.lu().solve(&rhs).map(|v| v.iter().copied().collect())
}

/// Levenberg–Marquardt on locations and masses jointly.
fn refine(samples: &FourierSamples, ys: &[f64], ms: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let j = ys.len();
    let mut p: Vec<f64> = ys.iter().chain(ms).copied().collect();
    let cost = |p: &[f64]| -> f64 {
        let atoms: Vec<(f64, f64)> = (0..j).map(|a| (p[a], p[j + a])).collect();
        relative_misfit(samples, &atoms)
    };
    let mut c = cost(&p);
    let mut mu = 1e-3;
    for _ in 0..200 {
        let mut jtj = DMatrix::<f64>::zeros(2 * j, 2 * j);
        let mut grad = DVector::<f64>::zeros(2 * j);
        let mut d = vec![Complex64::new(0.0, 0.0); 2 * j];
        for (&x, &ph) in samples.x.iter().zip(&samples.phi) {
            let mut r = -ph;
            for a in 0..j {
                let e = Complex64::from_polar(1.0, x * p[a]);
                r += p[j + a] * e;
                d[a] = Complex64::new(0.0, x * p[j + a]) * e;
                d[j + a] = e;
            }
            for a in 0..2 * j {
                grad[a] += (d[a].conj() * r).re;
                for b in a..2 * j {
                    jtj[(a, b)] += (d[a].conj() * d[b]).re;
                }
            }
        }
        for a in 0..2 * j {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for a in 0..2 * j {
                m[(a, a)] += mu * jtj[(a, a)].max(1e-300);
            }
            let Some(step) = m.lu().solve(&(-&grad)) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tc = cost(&trial);
            if tc < c {
                let small = step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-15 * v.abs().max(1.0));
                p = trial;
                c = tc;
                mu = (mu / 3.0).max(1e-12);
                improved = !small;
                break;
            }
            mu *= 4.0;
        }
        if !improved || c < 1e-14 {
            break;
        }
    }
    (p[..j].to_vec(), p[j..].to_vec())
}

/// Best atomic fit over `J = 1..=MAX_ATOMS`, stopping at the first accepted one.
fn fit_atoms(samples: &FourierSamples) -> Option<(Vec<Atom>, f64)> {
    let peaks = peak_locations(samples);
    let mut best: Option<(Vec<Atom>, f64)> = None;
    for j in 1..=peaks.len() {
        let ys = &peaks[..j];
        let Some(ms) = least_squares_masses(samples, ys) else { continue };
        let (ys, ms) = refine(samples, ys, &ms);
        let mut atoms: Vec<Atom> = ys.iter().zip(&ms).map(|(&y, &m)| Atom { y, m }).collect();
        atoms.sort_by(|a, b| b.y.total_cmp(&a.y));
        let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a.y, a.m)).collect();
        let residual = relative_misfit(samples, &pairs);
        let valid = atoms.iter().all(|a| a.y > 0.0 && a.m > 0.0);
        if valid && residual < FIT_TOLERANCE {
            return Some((atoms, residual));
        }
        if valid && best.as_ref().is_none_or(|b| residual < b.1) {
            best = Some((atoms, residual));
        }
    }
    best
}

/// Discrete inverse transform onto the reciprocal grid `Δy = 2π / (K Δx)`.
fn invert_density(samples: &FourierSamples) -> Result<RecoveredMeasure, EngineError> {
    let n = samples.x.len();
    let dx = samples.step();
    let dy = 2.0 * PI / (n as f64 * dx);
    let half = (n as i64 - 1) / 2;
    let weights: Vec<f64> = (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * dx } else { dx }).collect();
    let dens: Vec<(f64, f64)> = (-half..=half)
        .map(|j| {
            let y = j as f64 * dy;
            let s: Complex64 = samples
                .x
                .iter()
                .zip(&samples.phi)
                .zip(&weights)
                .map(|((&x, &p), &w)| p * w * Complex64::from_polar(1.0, -x * y))
                .sum();
            (y, s.re / (2.0 * PI))
        })
        .collect();

    let nonpositive: f64 = dens.iter().filter(|d| d.0 <= 0.0).map(|d| d.1.max(0.0) * dy).sum();
    if nonpositive > MASS_TOLERANCE {
        return Err(EngineError::SupportViolation { mass: nonpositive });
    }
    let negative: f64 = dens
        .iter()
        .filter(|d| d.0 > 0.0 && d.1 < -NEGATIVE_CLIP)
        .map(|d| d.1 * dy)
        .sum();
    if negative < -MASS_TOLERANCE {
        return Err(EngineError::NegativeMass(negative));
    }
    let clipped_mass: f64 = dens
        .iter()
        .filter(|d| d.0 > 0.0 && d.0 <= SUPPORT_FLOOR)
        .map(|d| d.1.max(0.0) * dy)
        .sum();
    let grid: Vec<DensityPoint> = dens
        .iter()
        .filter(|d| d.0 > SUPPORT_FLOOR)
        .map(|d| DensityPoint { y: d.0, w: d.1.max(0.0) })
        .collect();
    if grid.iter().all(|p| p.w == 0.0) {
        return Err(EngineError::RecoveryFailure("density inversion found no positive mass".into()));
    }
    let mut m = RecoveredMeasure::density(grid)?;
    m.clipped_mass = clipped_mass;
    m.residual = relative_misfit(samples, &m.point_masses());
    Ok(m)
}

/// Whether `∫ e^{yx + ½y²t} ν(dy)` is finite for every `t ≥ 0`.
///
/// Finite atom sets always qualify. A density qualifies only with a tail that
/// is super-Gaussian on the grid: the fitted rate `γ` in `w ≈ e^{α + κy − ½γy²}` must
/// grow along the tail and exceed `t_probe` by the margin, or the support must
/// end abruptly inside the grid.
pub fn check_admissibility(measure: &RecoveredMeasure, t_probe: f64) -> bool {
    let grid = match &measure.form {
        MeasureForm::Atomic { .. } => return true,
        MeasureForm::Density { grid } => grid,
    };
    let w_max = grid.iter().map(|p| p.w).fold(0.0, f64::max);
    if !(w_max > 0.0) {
        return false;
    }
    let peak = grid.iter().position(|p| p.w == w_max).unwrap_or(0);
    let floor = 1e-14 * w_max;
    let mut end = peak;
    while end + 1 < grid.len() && grid[end + 1].w > floor {
        end += 1;
    }
    if end + 1 == grid.len() {
        // The tail runs into the grid edge: decay is not resolved.
        return false;
    }
    if grid[end].w > 1e-3 * w_max {
        // Support ends abruptly: compactly supported.
        return true;
    }
    let tail: Vec<(f64, f64)> = grid[peak..=end]
        .iter()
        .filter(|p| p.w < 1e-2 * w_max && p.w > 0.0)
        .map(|p| (p.y, p.w.ln()))
        .collect();
    if tail.len() < 8 {
        return false;
    }
    // Least squares for ln w = α + κy − ½γy²; the linear term absorbs an off-centre peak.
    let rate = |pts: &[(f64, f64)]| -> f64 {
        let a = DMatrix::from_fn(pts.len(), 3, |i, j| match j {
            0 => 1.0,
            1 => pts[i].0,
            _ => -0.5 * pts[i].0 * pts[i].0,
        });
        let b = DVector::from_fn(pts.len(), |i, _| pts[i].1);
        match a.svd(true, true).solve(&b, 1e-14) {
            Ok(c) => c[2],
            Err(_) => f64::NAN,
        }
    };
    let mid = tail.len() / 2;
    let (g1, g2) = (rate(&tail[..mid]), rate(&tail[mid..]));
    let eps = ADMISSIBILITY_MARGIN;
    g2 > g1 * (1.0 + eps) && g2 > t_probe * (1.0 + eps)
}

fn measure_terms(measure: &RecoveredMeasure) -> Vec<(f64, f64)> {
    measure.point_masses().into_iter().map(|(y, m)| (m / y, y)).collect()
}

fn inadmissible(measure: &RecoveredMeasure) -> EngineError {
    EngineError::Inadmissible(format!(
        "the recovered {} measure does not satisfy ∫ e^{{yx + ½y²t}} ν(dy) < ∞ for all t; \
         only a local forward performance process is available, which is not constructed",
        if measure.is_atomic() { "atomic" } else { "density" }
    ))
}

/// `h(x, t) = ∫ e^{yx − ½y²t} / y ν(dy)`, with `t` in the variance clock.
pub fn harmonic_from_measure(measure: &RecoveredMeasure) -> Result<ExpSumHarmonic, EngineError> {
    if !measure.admissible {
        return Err(inadmissible(measure));
    }
    let terms = measure_terms(measure);
    if terms.is_empty() {
        return Err(inadmissible(measure));
    }
    Ok(ExpSumHarmonic::new(terms, 0.0, Clock::Variance, Backing::Measure))
}

/// The wealth-driving `h = scale · h_ν(x + shift, t)` as an exponential sum.
pub fn normalized_harmonic(measure: &RecoveredMeasure, n: Normalization) -> Result<ExpSumHarmonic, EngineError> {
    let base = harmonic_from_measure(measure)?;
    let terms = base
        .terms()
        .iter()
        .map(|&(c, r)| (c * n.scale * (r * n.shift).exp(), r))
        .collect();
    Ok(ExpSumHarmonic::new(terms, 0.0, Clock::Variance, Backing::Measure))
}

/// `u₀′(x) = exp(−h₀⁻¹(x))` with `h₀ = h(·, 0)`.
#[derive(Debug, Clone)]
pub struct InitialDatum {
    h0: ExpSumHarmonic,
}

impl InitialDatum {
    pub fn eval(&self, x: f64) -> Result<f64, EngineError> {
        Ok((-self.h0.inverse(x, 0.0)?).exp())
    }

    pub fn h0(&self) -> &ExpSumHarmonic {
        &self.h0
    }
}

pub fn initial_datum(measure: &RecoveredMeasure) -> Result<InitialDatum, EngineError> {
    let terms = measure_terms(measure);
    let h0 = ExpSumHarmonic::new(terms, 0.0, Clock::Variance, Backing::Measure);
    match h0.eval(0.0, 0.0) {
        Ok((v, d)) if v.is_finite() && d.is_finite() && v > 0.0 => Ok(InitialDatum { h0 }),
        _ => Err(EngineError::Inadmissible("h(·, 0) is not finite".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum PerformanceBranch {
    /// `ν((0,1]) = 0` and `∫ ν(dy)/(y−1) < ∞`: `u(0+, t) = 0`.
    ZeroAnchored,
    /// Otherwise `u` is pinned by `u(x̂, 0) = 0`.
    BasePoint { x_hat: f64 },
}

const GL_NODES: usize = 32;

/// `u(x, t) = −½∫₀ᵗ e^{−h⁻¹(x,s)+s/2} h_x(h⁻¹(x,s), s) ds + ∫_{x̂}^x e^{−h⁻¹(z,0)} dz`,
/// in the variance clock; the calendar form is `U(x, t) = u(x, A_t)`.
#[derive(Debug, Clone)]
pub struct Performance {
    h: ExpSumHarmonic,
    masses: Vec<(f64, f64)>,
    branch: PerformanceBranch,
    anchor: f64,
    rule: (Vec<f64>, Vec<f64>),
}

impl Performance {
    pub fn new(measure: &RecoveredMeasure) -> Result<Self, EngineError> {
        let h = harmonic_from_measure(measure)?;
        let masses = measure.point_masses();
        let branch = if masses.iter().all(|&(y, _)| y > 1.0 + 1e-12) {
            PerformanceBranch::ZeroAnchored
        } else {
            PerformanceBranch::BasePoint { x_hat: 1.0 }
        };
        let mut p = Self { h, masses, branch, anchor: 0.0, rule: gauss_legendre_rule(GL_NODES) };
        if let PerformanceBranch::BasePoint { x_hat } = branch {
            p.anchor = p.psi(p.h.inverse(x_hat, 0.0)?);
        }
        Ok(p)
    }

    pub fn branch(&self) -> PerformanceBranch {
        self.branch
    }

    /// `Ψ(w) = ∫_{−∞}^w e^{−v} h₀′(v) dv`, the antiderivative in the substituted variable.
    fn psi(&self, w: f64) -> f64 {
        self.masses
            .iter()
            .map(|&(y, m)| if (y - 1.0).abs() < 1e-12 { m * w } else { m * ((y - 1.0) * w).exp() / (y - 1.0) })
            .sum()
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EngineError> {
        if !(x > 0.0) {
            return Err(EngineError::Numerics(crate::numerics::NumericsError::OutOfRange {
                y: x,
                lo: 0.0,
                hi: f64::INFINITY,
            }));
        }
        if !(t >= 0.0) {
            return Err(EngineError::TimeOutOfRange { t, range: "[0, ∞)".into() });
        }
        let spatial = self.psi(self.h.inverse(x, 0.0)?) - self.anchor;
        if t == 0.0 {
            return Ok(spatial);
        }
        let (nodes, weights) = &self.rule;
        let mut integral = 0.0;
        for (&z, &w) in nodes.iter().zip(weights) {
            let s = 0.5 * t * (z + 1.0);
            let hi = self.h.inverse(x, s)?;
            let hx = self.h.dx(hi, s)?;
            integral += w * (-hi + 0.5 * s).exp() * hx;
        }
        Ok(spatial - 0.25 * t * integral)
    }

    /// `u_x(x, t) = exp(−h⁻¹(x, t) + t/2)`.
    pub fn dx(&self, x: f64, t: f64) -> Result<f64, EngineError> {
        Ok((-self.h.inverse(x, t)? + 0.5 * t).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSurface {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `u[i][j] = u(x_j, t_i)`.
    pub u: Vec<Vec<f64>>,
    pub branch: PerformanceBranch,
}

pub fn performance_surface(
    measure: &RecoveredMeasure,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<PerformanceSurface, EngineError> {
    let p = Performance::new(measure)?;
    let u = t_grid
        .iter()
        .map(|&t| x_grid.iter().map(|&x| p.eval(x, t)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PerformanceSurface { t: t_grid.to_vec(), x: x_grid.to_vec(), u, branch: p.branch() })
}

pub struct ForwardSolution {
    pub target_time: f64,
    pub a_total: f64,
    pub feasibility: Feasibility,
    /// Unit-normalized measure, carrying the normalization to wealth.
    pub measure: RecoveredMeasure,
    pub normalization: Normalization,
    /// `h_ν` of the reported measure.
    pub measure_h: ExpSumHarmonic,
    /// Wealth-driving `h` with `h⁻¹(x₀, 0) = −A_T`, variance clock.
    pub h: Arc<dyn HarmonicFunction>,
    pub initial_datum: InitialDatum,
}

impl std::fmt::Debug for ForwardSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardSolution")
            .field("target_time", &self.target_time)
            .field("a_total", &self.a_total)
            .field("measure", &self.measure)
            .finish_non_exhaustive()
    }
}

impl ForwardSolution {
    pub fn start(&self) -> f64 {
        -self.a_total
    }

    pub fn performance(&self) -> Result<Performance, EngineError> {
        Performance::new(&self.measure)
    }
}

/// Recovers `ν` from the target, then checks the budget and builds `h` and `u₀′`.
pub fn solve_forward(
    dist: &TargetDistribution,
    curves: &MarketCurves,
    t: f64,
    x0: f64,
    spec: &QuadratureSpec,
) -> Result<ForwardSolution, EngineError> {
    let transform = ForwardTransform::new(dist, curves, t, spec)?;
    let a = transform.a_total();
    let samples = transform.sample(PROBE_HALF_WIDTH, PROBE_POINTS)?;
    let mut measure = recover_measure(&samples).map_err(|e| match e {
        EngineError::SupportViolation { mass } => EngineError::Inadmissible(format!(
            "the implied measure puts mass {mass:.6} on y ≤ 0 and violates ∫ e^{{yx + ½y²t}} ν(dy) < ∞ \
             for t > 0; this target needs a local forward performance process, which is not constructed"
        )),
        other => other,
    })?;
    if !measure.admissible || !check_admissibility(&measure, a) {
        return Err(inadmissible(&measure));
    }
    let feasibility = check_feasibility(dist, a, x0, spec)?;
    if !feasibility.feasible {
        return Err(EngineError::BudgetViolated { x0, budget: feasibility.budget });
    }
    let normalization = transform
        .normalization()
        .ok_or_else(|| EngineError::Inadmissible("the target has a non-positive budget".into()))?;
    measure.normalization = Some(normalization);
    let measure_h = harmonic_from_measure(&measure)?;
    let h = normalized_harmonic(&measure, normalization)?;
    Ok(ForwardSolution {
        target_time: t,
        a_total: a,
        feasibility,
        initial_datum: initial_datum(&measure)?,
        measure,
        normalization,
        measure_h,
        h: Arc::new(h),
    })
}
