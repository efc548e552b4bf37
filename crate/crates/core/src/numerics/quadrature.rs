use super::NumericsError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Values that can be integrated: real or complex.
pub trait Scalar: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite_value(&self) -> bool;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Two real integrands carried through one quadrature pass, e.g. a value and its derivative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Pair {
    type Output = Pair;
    fn sub(self, o: Pair) -> Pair {
        Pair(self.0 - o.0, self.1 - o.1)
    }
}

impl Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, k: f64) -> Pair {
        Pair(self.0 * k, self.1 * k)
    }
}

impl Scalar for Pair {
    fn is_finite_value(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.0.abs().max(self.1.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    GaussHermite,
    AdaptiveTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    /// Truncation radius in standard deviations (adaptive scheme).
    pub truncation_radius: f64,
    pub scheme: QuadratureScheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 96,
            truncation_radius: 10.0,
            scheme: QuadratureScheme::GaussHermite,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss_hermite(node_count: usize) -> Self {
        Self {
            node_count,
            ..Self::default()
        }
    }

    pub fn adaptive(truncation_radius: f64) -> Self {
        Self {
            scheme: QuadratureScheme::AdaptiveTrapezoid,
            truncation_radius,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.node_count < 16 {
            return Err(NumericsError::InvalidSpec(format!(
                "node_count {} < 16",
                self.node_count
            )));
        }
        if self.scheme == QuadratureScheme::AdaptiveTrapezoid && !(self.truncation_radius >= 8.0) {
            return Err(NumericsError::InvalidSpec(format!(
                "truncation_radius {} < 8",
                self.truncation_radius
            )));
        }
        Ok(())
    }
}

/// Probabilists' Gauss–Hermite rule: `E[g(S)] ≈ Σ w_i g(s_i)` for `S ~ N(0,1)`.
#[derive(Debug)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn hermite_cache() -> &'static Mutex<HashMap<usize, Arc<HermiteRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached probabilists' Gauss–Hermite rule with `n` nodes.
pub fn gauss_hermite_rule(n: usize) -> Arc<HermiteRule> {
    let mut cache = hermite_cache().lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| Arc::new(build_hermite(n)))
        .clone()
}

// Newton iteration on the orthonormal Hermite recurrence (weight e^{-x^2}),
// then rescaled to the standard normal weight.
fn build_hermite(n: usize) -> HermiteRule {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let norm = PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / norm).collect();
    nodes.reverse();
    weights.reverse();
    HermiteRule { nodes, weights }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `(1/√(2πv)) ∫ e^{-(y-m)²/2v} g(y) dy`.
pub fn gaussian_integrate<T, F>(
    integrand: F,
    mean: f64,
    variance: f64,
    spec: &QuadratureSpec,
) -> Result<T, NumericsError>
where
    T: Scalar,
    F: Fn(f64) -> T,
{
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(NumericsError::InvalidSpec(format!(
            "variance must be positive, got {variance}"
        )));
    }
    spec.validate()?;
    let sd = variance.sqrt();
    match spec.scheme {
        QuadratureScheme::GaussHermite => {
            let rule = gauss_hermite_rule(spec.node_count);
            let mut acc = T::default();
            for (s, w) in rule.nodes.iter().zip(&rule.weights) {
                let y = mean + sd * s;
                let v = integrand(y);
                if !v.is_finite_value() {
                    return Err(NumericsError::NonFiniteIntegrand { at: y });
                }
                acc = acc + v * *w;
            }
            Ok(acc)
        }
        QuadratureScheme::AdaptiveTrapezoid => {
            adaptive_trapezoid(&integrand, mean, sd, spec.truncation_radius)
        }
    }
}

fn adaptive_trapezoid<T, F>(g: &F, mean: f64, sd: f64, radius: f64) -> Result<T, NumericsError>
where
    T: Scalar,
    F: Fn(f64) -> T,
{
    let eval = |s: f64| -> Result<T, NumericsError> {
        let y = mean + sd * s;
        let v = g(y);
        if !v.is_finite_value() {
            return Err(NumericsError::NonFiniteIntegrand { at: y });
        }
        Ok(v * super::norm_pdf(s))
    };
    // Extend the window while the edge contributions are not negligible.
    let mut r = radius;
    while r < 40.0 {
        let edge = eval(r)?.magnitude().max(eval(-r)?.magnitude());
        let centre = eval(0.0)?.magnitude().max(1e-300);
        if edge <= 1e-17 * centre {
            break;
        }
        r += 2.0;
    }
    let mut n = 256usize;
    let mut h = 2.0 * r / n as f64;
    let mut sum = (eval(-r)? + eval(r)?) * 0.5;
    for k in 1..n {
        sum = sum + eval(-r + k as f64 * h)?;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        // Add midpoints of the current panels.
        let mut mid = T::default();
        for k in 0..n {
            mid = mid + eval(-r + (k as f64 + 0.5) * h)?;
        }
        sum = sum + mid;
        n *= 2;
        h *= 0.5;
        let cur = sum * h;
        if (cur - prev).magnitude() <= 1e-14 * cur.magnitude() + 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Tanh–sinh quadrature of `∫₀¹ f(y) dy`; the integrand receives `(y, 1 - y)` with
/// both computed without cancellation so endpoint behaviour is resolved.
pub fn tanh_sinh_unit<F>(f: F) -> Result<f64, NumericsError>
where
    F: Fn(f64, f64) -> f64,
{
    let t_max = 4.0;
    let eval = |t: f64| -> Result<f64, NumericsError> {
        let u = FRAC_PI_2 * t.sinh();
        let y = 1.0 / (1.0 + (-2.0 * u).exp());
        let yc = 1.0 / (1.0 + (2.0 * u).exp());
        if y <= 0.0 || yc <= 0.0 {
            return Ok(0.0);
        }
        let sech = 2.0 / (u.exp() + (-u).exp());
        let dx = 0.5 * FRAC_PI_2 * t.cosh() * sech * sech;
        let v = f(y, yc);
        if !v.is_finite() {
            return Err(NumericsError::NonFiniteIntegrand { at: y });
        }
        Ok(v * dx)
    };
    let mut h = 0.5;
    let mut n = (t_max / h) as i64;
    let mut sum = eval(0.0)?;
    for k in 1..=n {
        let t = k as f64 * h;
        sum += eval(t)? + eval(-t)?;
    }
    let mut prev = sum * h;
    for _ in 0..10 {
        let mut extra = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) * h;
            extra += eval(t)? + eval(-t)?;
        }
        sum += extra;
        h *= 0.5;
        n *= 2;
        let cur = sum * h;
        if (cur - prev).abs() <= 1e-14 * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}
