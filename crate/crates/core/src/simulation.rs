//! Monte Carlo paths of optimal wealth `X* = h(h⁻¹(x₀, 0) + A_t + M_t, ·)`,
//! portfolio and deflator, with the statistical checks that verify a solution.

use crate::distribution::TargetDistribution;
use crate::error::EngineError;
use crate::harmonic::HarmonicFunction;
use crate::market::MarketCurves;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("time {requested} is not a recorded time of the bundle")]
    TimeMismatch { requested: f64 },
    #[error("the bundle has no {0} data; enable the check when simulating")]
    MissingData(&'static str),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Martingale,
    Ks,
    SelfFinancing,
}

/// Reading of the second argument of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Expected-utility engines: calendar time.
    Fixed,
    /// Forward engine: cumulative variance `A_t`.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub path_count: usize,
    pub dt: f64,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Number of evenly spaced recorded times, endpoints included.
    pub record_points: usize,
    /// Paths re-integrated by Euler for the self-financing check.
    pub self_financing_paths: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            path_count: 100_000,
            dt: 1e-3,
            seed: 0,
            checks: vec![Check::Martingale, Check::Ks, Check::SelfFinancing],
            record_points: 21,
            self_financing_paths: 1000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, horizon: f64) -> Result<(), SimulationError> {
        if self.path_count == 0 {
            return Err(SimulationError::InvalidConfig("path_count must be positive".into()));
        }
        if !(horizon > 0.0) {
            return Err(SimulationError::InvalidConfig(format!("horizon must be positive, got {horizon}")));
        }
        if !(self.dt > 0.0 && self.dt <= horizon / 100.0 * (1.0 + 1e-12)) {
            return Err(SimulationError::InvalidConfig(format!(
                "dt must lie in (0, T/100] = (0, {}], got {}",
                horizon / 100.0,
                self.dt
            )));
        }
        let statistical = self.checks.iter().any(|c| matches!(c, Check::Martingale | Check::Ks));
        if statistical && self.path_count < 1000 {
            return Err(SimulationError::InvalidConfig(format!(
                "statistical checks need at least 1000 paths, got {}",
                self.path_count
            )));
        }
        if self.record_points < 2 {
            return Err(SimulationError::InvalidConfig("record_points must be at least 2".into()));
        }
        Ok(())
    }
}

/// Terminal wealth of the Euler-integrated wealth equation at two step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerTerminal {
    pub dt: f64,
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

/// Paths stored row-major: entry `[p * times.len() + k]` is path `p` at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub mode: Mode,
    pub x0: f64,
    pub seed: u64,
    pub dt: f64,
    pub path_count: usize,
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub driver: Vec<f64>,
    pub wealth: Vec<f64>,
    pub portfolio_norm: Vec<f64>,
    pub deflator: Vec<f64>,
    pub euler: Option<EulerTerminal>,
}

impl PathBundle {
    fn width(&self) -> usize {
        self.times.len()
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// One column of a stored array.
    pub fn column<'a>(&'a self, data: &'a [f64], k: usize) -> impl Iterator<Item = f64> + 'a {
        let w = self.width();
        (0..self.path_count).map(move |p| data[p * w + k])
    }

    pub fn wealth_at(&self, k: usize) -> Vec<f64> {
        self.column(&self.wealth, k).collect()
    }

    /// Empirical quantiles of wealth and portfolio norm at every recorded time.
    pub fn fan(&self, levels: &[f64]) -> Fan {
        let q = |data: &[f64], k: usize| -> Vec<f64> {
            let mut v: Vec<f64> = self.column(data, k).collect();
            v.sort_by(f64::total_cmp);
            levels.iter().map(|&p| empirical_quantile(&v, p)).collect()
        };
        Fan {
            levels: levels.to_vec(),
            times: self.times.clone(),
            wealth: (0..self.width()).map(|k| q(&self.wealth, k)).collect(),
            portfolio_norm: (0..self.width()).map(|k| q(&self.portfolio_norm, k)).collect(),
        }
    }

    /// Long-format CSV: `time,path,wealth,portfolio_norm,deflator`.
    pub fn write_columnar<W: Write>(&self, mut out: W) -> Result<(), SimulationError> {
        writeln!(out, "time,path,wealth,portfolio_norm,deflator")?;
        let w = self.width();
        for p in 0..self.path_count {
            for k in 0..w {
                let i = p * w + k;
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.times[k], p, self.wealth[i], self.portfolio_norm[i], self.deflator[i]
                )?;
            }
        }
        Ok(())
    }
}

/// Linear interpolation between order statistics (type 7).
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fan {
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    /// `wealth[k][i]`: level `i` at time `k`.
    pub wealth: Vec<Vec<f64>>,
    pub portfolio_norm: Vec<Vec<f64>>,
}

struct Grid {
    t: Vec<f64>,
    a: Vec<f64>,
    record: Vec<usize>,
}

fn build_grid(
    curves: &MarketCurves,
    horizon: f64,
    cfg: &SimulationConfig,
    marks: &[f64],
) -> Result<Grid, SimulationError> {
    let n = (horizon / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let step = horizon / n as f64;
    let t: Vec<f64> = (0..=n).map(|k| if k == n { horizon } else { k as f64 * step }).collect();
    let a = t.iter().map(|&s| curves.a(s)).collect::<Result<Vec<_>, _>>().map_err(EngineError::from)?;
    let mut record: Vec<usize> = (0..cfg.record_points)
        .map(|i| ((i as f64 * n as f64) / (cfg.record_points - 1) as f64).round() as usize)
        .collect();
    for &m in marks {
        let k = (m / step).round();
        if !(m >= 0.0 && m <= horizon * (1.0 + 1e-12)) || (k * step - m).abs() > 1e-9 * step {
            return Err(SimulationError::TimeMismatch { requested: m });
        }
        record.push(k as usize);
    }
    record.sort_unstable();
    record.dedup();
    Ok(Grid { t, a, record })
}

struct PathOut {
    driver: Vec<f64>,
    wealth: Vec<f64>,
    portfolio: Vec<f64>,
    deflator: Vec<f64>,
    euler: Option<(f64, f64)>,
}

/// Simulates `cfg.path_count` paths on `[0, horizon]`. `marks` are times that must
/// be recorded (for example an intermediate target time); they must lie on the step grid.
pub fn simulate(
    h: &dyn HarmonicFunction,
    mode: Mode,
    curves: &MarketCurves,
    x0: f64,
    horizon: f64,
    marks: &[f64],
    cfg: &SimulationConfig,
) -> Result<PathBundle, SimulationError> {
    cfg.validate(horizon)?;
    if !(x0 > 0.0) {
        return Err(SimulationError::InvalidConfig(format!("x0 must be positive, got {x0}")));
    }
    let grid = build_grid(curves, horizon, cfg, marks)?;
    let clock = |k: usize| match mode {
        Mode::Fixed => grid.t[k],
        Mode::Forward => grid.a[k],
    };
    let rec_times: Vec<f64> = grid.record.iter().map(|&k| grid.t[k]).collect();
    h.prepare(&grid.record.iter().map(|&k| clock(k)).collect::<Vec<_>>());
    let start = h.inverse(x0, clock(0))?;
    let pi_scale = |k: usize| -> Result<f64, EngineError> {
        let v = curves.sigma_inv_lambda(grid.t[k])?;
        Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let scales = (0..grid.t.len()).map(pi_scale).collect::<Result<Vec<_>, _>>()?;
    let n_steps = grid.t.len() - 1;
    let euler_paths = if cfg.checks.contains(&Check::SelfFinancing) {
        cfg.self_financing_paths.min(cfg.path_count)
    } else {
        0
    };
    if euler_paths > 0 {
        h.prepare(&(0..=n_steps).map(clock).collect::<Vec<_>>());
    }

    let run = |p: usize| -> Result<PathOut, EngineError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(p as u64);
        let mut m = 0.0;
        let mut out = PathOut {
            driver: Vec::with_capacity(grid.record.len()),
            wealth: Vec::with_capacity(grid.record.len()),
            portfolio: Vec::with_capacity(grid.record.len()),
            deflator: Vec::with_capacity(grid.record.len()),
            euler: None,
        };
        let euler = p < euler_paths;
        let (mut xf, mut xc, mut pending) = (x0, x0, 0.0);
        let mut next = 0;
        for k in 0..=n_steps {
            if next < grid.record.len() && grid.record[next] == k {
                let (w, hx) = if k == 0 {
                    (x0, h.dx(start, clock(0))?)
                } else {
                    h.eval(start + grid.a[k] + m, clock(k))?
                };
                out.driver.push(m);
                out.wealth.push(w);
                out.portfolio.push(hx * scales[k]);
                out.deflator.push((-m - 0.5 * grid.a[k]).exp());
                next += 1;
            }
            if k == n_steps {
                break;
            }
            let da = grid.a[k + 1] - grid.a[k];
            let z: f64 = StandardNormal.sample(&mut rng);
            let dm = da.sqrt() * z;
            if euler {
                // dX = h_x(h⁻¹(X, ·), ·)(dA + dM), with the fine and the doubled step.
                let slope = |x: f64, k: usize| -> Result<f64, EngineError> {
                    let s = clock(k);
                    h.dx(h.inverse(x, s)?, s)
                };
                xf += slope(xf, k)? * (da + dm);
                if k % 2 == 0 {
                    pending = 0.0;
                }
                pending += dm;
                if k % 2 == 1 || k + 1 == n_steps {
                    let k0 = k - k % 2;
                    let da2 = grid.a[k + 1] - grid.a[k0];
                    xc += slope(xc, k0)? * (da2 + pending);
                }
            }
            m += dm;
        }
        if euler {
            out.euler = Some((xf, xc));
        }
        Ok(out)
    };
    let paths = (0..cfg.path_count).into_par_iter().map(run).collect::<Result<Vec<_>, _>>()?;

    let mut bundle = PathBundle {
        mode,
        x0,
        seed: cfg.seed,
        dt: horizon / n_steps as f64,
        path_count: cfg.path_count,
        times: rec_times,
        a: grid.record.iter().map(|&k| grid.a[k]).collect(),
        driver: Vec::with_capacity(cfg.path_count * grid.record.len()),
        wealth: Vec::with_capacity(cfg.path_count * grid.record.len()),
        portfolio_norm: Vec::with_capacity(cfg.path_count * grid.record.len()),
        deflator: Vec::with_capacity(cfg.path_count * grid.record.len()),
        euler: None,
    };
    let mut fine = Vec::with_capacity(euler_paths);
    let mut coarse = Vec::with_capacity(euler_paths);
    for p in paths {
        bundle.driver.extend(p.driver);
        bundle.wealth.extend(p.wealth);
        bundle.portfolio_norm.extend(p.portfolio);
        bundle.deflator.extend(p.deflator);
        if let Some((f, c)) = p.euler {
            fine.push(f);
            coarse.push(c);
        }
    }
    if bundle.wealth.iter().any(|w| !(*w > 0.0)) {
        return Err(EngineError::AssumptionViolated("simulated wealth left (0, ∞)".into()).into());
    }
    if euler_paths > 0 {
        bundle.euler = Some(EulerTerminal { dt: bundle.dt, fine, coarse });
    }
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub pass: bool,
}

/// `E[Z_T X*_T] = x₀` at the last recorded time.
pub fn martingale_check(bundle: &PathBundle, x0: f64) -> MartingaleCheck {
    let k = bundle.width() - 1;
    let v: Vec<f64> = bundle
        .column(&bundle.wealth, k)
        .zip(bundle.column(&bundle.deflator, k))
        .map(|(x, z)| x * z)
        .collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let std_error = (var / n).sqrt();
    MartingaleCheck { estimate: mean, std_error, pass: (mean - x0).abs() <= 3.0 * std_error }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsCheck {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov–Smirnov statistic against `F`, passing below `1.95/√n`.
pub fn ks_check(bundle: &PathBundle, dist: &TargetDistribution, at: f64) -> Result<KsCheck, SimulationError> {
    let k = bundle.time_index(at).ok_or(SimulationError::TimeMismatch { requested: at })?;
    let mut v = bundle.wealth_at(k);
    v.sort_by(f64::total_cmp);
    let cdf: Vec<f64> = v.par_iter().map(|&x| dist.cdf(x)).collect();
    let n = v.len() as f64;
    let statistic = cdf
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i as f64 + 1.0) / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max);
    let threshold = 1.95 / n.sqrt();
    Ok(KsCheck { statistic, threshold, pass: statistic < threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfFinancingCheck {
    pub dt: f64,
    /// Median relative terminal residual at `dt`.
    pub median_fine: f64,
    /// The same at `2·dt`.
    pub median_coarse: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares Euler-integrated wealth with the `h`-representation at the last
/// recorded time. Passes when both residuals stay below 1% and halving the step
/// shrinks the residual by a ratio in `[0.35, 0.8]`.
pub fn self_financing_check(bundle: &PathBundle) -> Result<SelfFinancingCheck, SimulationError> {
    let e = bundle.euler.as_ref().ok_or(SimulationError::MissingData("Euler"))?;
    let k = bundle.width() - 1;
    let exact: Vec<f64> = bundle.column(&bundle.wealth, k).take(e.fine.len()).collect();
    let median = |approx: &[f64]| -> f64 {
        let mut r: Vec<f64> = approx.iter().zip(&exact).map(|(a, x)| ((a - x) / x).abs()).collect();
        r.sort_by(f64::total_cmp);
        empirical_quantile(&r, 0.5)
    };
    let (mf, mc) = (median(&e.fine), median(&e.coarse));
    let ratio = mf / mc;
    Ok(SelfFinancingCheck {
        dt: e.dt,
        median_fine: mf,
        median_coarse: mc,
        ratio,
        pass: mf < 0.01 && mc < 0.01 && (0.35..=0.8).contains(&ratio),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_financing: Option<SelfFinancingCheck>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.martingale.is_none_or(|c| c.pass)
            && self.ks.is_none_or(|c| c.pass)
            && self.self_financing.is_none_or(|c| c.pass)
    }
}

/// Runs the configured checks; the KS check is taken at `target_time`.
pub fn run_checks(
    bundle: &PathBundle,
    dist: &TargetDistribution,
    target_time: f64,
    checks: &[Check],
) -> Result<CheckReport, SimulationError> {
    let mut r = CheckReport::default();
    for c in checks {
        match c {
            Check::Martingale => r.martingale = Some(martingale_check(bundle, bundle.x0)),
            Check::Ks => r.ks = Some(ks_check(bundle, dist, target_time)?),
            Check::SelfFinancing => r.self_financing = Some(self_financing_check(bundle)?),
        }
    }
    Ok(r)
}
