//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when the mathematics refuses the request
//! (infeasible, assumption violated, inadmissible), 1 on any other failure.

use crate::config::ServiceConfig;
use crate::error::{ErrorClass, ServiceError};
use crate::schema::*;
use crate::service;
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wealth_target::market::MarketSpec;
use wealth_target::simulation::SimulationConfig;
use wealth_target::single_period::{BuilderSession, SinglePeriodMarket};

#[derive(Debug, Parser)]
#[command(name = "wealth-target", version, about = "Infer preferences and policies from a target wealth distribution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the budget constraint; solves b for parametric families.
    Feasibility(EngineArgs),
    /// Infer the preference object for the chosen engine.
    Infer(EngineArgs),
    /// Simulate optimal wealth paths and run the Monte Carlo checks.
    Simulate(SimulateArgs),
    /// Run a scripted single-period Distribution Builder session.
    BuilderDemo(BuilderArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Terminal,
    Intermediate,
    Forward,
}

impl From<ModeArg> for EngineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Terminal => EngineMode::Terminal,
            ModeArg::Intermediate => EngineMode::Intermediate,
            ModeArg::Forward => EngineMode::Forward,
        }
    }
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Market document (JSON).
    #[arg(long)]
    pub market: PathBuf,
    /// `lognormal`, `transformed-normal`, `whole-line` (parameter solved or defaulted),
    /// `family:value` (e.g. `lognormal:0.16`), or a path to a distribution document.
    #[arg(long)]
    pub dist: String,
    #[arg(long)]
    pub x0: f64,
    #[arg(long, value_enum, default_value = "terminal")]
    pub mode: ModeArg,
    /// Target time in years; defaults to the market horizon.
    #[arg(long)]
    pub target_time: Option<f64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BuilderArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Budget x₀.
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.07)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.02)]
    pub r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Overrides WEALTH_TARGET_BIND.
    #[arg(long)]
    pub serve_addr: Option<SocketAddr>,
}

/// Failure carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub error: anyhow::Error,
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        let class = e.class();
        let code = e.code();
        CliError { class, error: anyhow::Error::new(e).context(code) }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(error: anyhow::Error) -> Self {
        CliError { class: ErrorClass::Internal, error }
    }
}

pub fn main_exit() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.class.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Feasibility(a) => {
            let req = compute_request(&a)?;
            let r = service::feasibility(&req, &Default::default())?;
            emit(&a.out, &render_feasibility(&r, a.format)?)
        }
        Command::Infer(a) => {
            let req = compute_request(&a)?;
            let r = service::preferences(&req, &Default::default())?;
            emit(&a.out, &render_preferences(&r, a.format)?)
        }
        Command::Simulate(a) => {
            let compute = compute_request(&a.engine)?;
            let config = SimulationConfig { path_count: a.paths, dt: a.dt, seed: a.seed, ..Default::default() };
            let (resp, bundle) = service::simulate_request(&SimulateRequest { compute, config }, &Default::default())?;
            let text = match a.engine.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    bundle.write_columnar(&mut buf).map_err(ServiceError::from)?;
                    String::from_utf8(buf).context("columnar export is not UTF-8")?
                }
                f => render_simulation(&resp, f)?,
            };
            emit(&a.engine.out, &text)
        }
        Command::BuilderDemo(a) => emit(&a.out, &builder_demo(&a)?),
        Command::Serve(a) => {
            let mut config = ServiceConfig::from_env()?;
            if let Some(addr) = a.serve_addr {
                config.bind = addr;
            }
            init_tracing();
            let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            rt.block_on(crate::api::serve(config))?;
            Ok(())
        }
    }
}

fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).try_init();
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse_dist(s: &str) -> anyhow::Result<DistributionInput> {
    let (family, value) = match s.split_once(':') {
        Some((f, v)) => (f, Some(v.parse::<f64>().with_context(|| format!("parameter in --dist {s}"))?)),
        None => (s, None),
    };
    Ok(match family {
        "lognormal" => DistributionInput::Lognormal { b: value },
        "transformed-normal" => DistributionInput::TransformedNormal { b: value },
        "whole-line" => DistributionInput::WholeLine { a: value },
        _ => read_json(Path::new(s))?,
    })
}

pub fn compute_request(a: &EngineArgs) -> Result<ComputeRequest, CliError> {
    let market: MarketSpec = read_json(&a.market)?;
    Ok(ComputeRequest {
        market,
        distribution: parse_dist(&a.dist)?,
        x0: a.x0,
        mode: a.mode.into(),
        target_time: a.target_time,
        quadrature: None,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout")?,
    }
    Ok(())
}

fn structured<T: serde::Serialize>(v: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn render_feasibility(r: &FeasibilityResponse, f: Format) -> anyhow::Result<String> {
    Ok(match f {
        Format::Structured => structured(r)?,
        Format::Csv => format!(
            "feasible,mode,target_time,a_target,budget_value,relative_gap,solved_parameter\n{},{},{},{},{},{},{}\n",
            r.feasible,
            mode_name(r.mode),
            r.target_time,
            r.a_target,
            r.budget_value,
            r.relative_gap,
            opt(r.solved_parameter)
        ),
        Format::Table => {
            let mut s = String::new();
            writeln!(s, "feasible          {}", r.feasible)?;
            writeln!(s, "mode              {}", mode_name(r.mode))?;
            writeln!(s, "target time       {}", r.target_time)?;
            writeln!(s, "A at target       {}", r.a_target)?;
            writeln!(s, "budget value      {}", r.budget_value)?;
            writeln!(s, "relative gap      {:e}", r.relative_gap)?;
            if let Some(b) = r.solved_parameter {
                writeln!(s, "solved b          {b}")?;
            }
            s
        }
    })
}

fn mode_name(m: EngineMode) -> &'static str {
    match m {
        EngineMode::Terminal => "terminal",
        EngineMode::Intermediate => "intermediate",
        EngineMode::Forward => "forward",
    }
}

fn pairs_csv(header: &str, pts: &[(f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (a, b) in pts {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

pub fn render_preferences(r: &PreferenceResult, f: Format) -> anyhow::Result<String> {
    if f == Format::Structured {
        return structured(r);
    }
    let mut s = String::new();
    match r {
        PreferenceResult::MarginalUtility { samples, closed_form, solved_parameter, .. } => {
            if f == Format::Csv {
                return Ok(pairs_csv("x,marginal_utility", samples));
            }
            writeln!(s, "terminal marginal utility U'(x)")?;
            writeln!(s, "solved b      {}", opt(*solved_parameter))?;
            writeln!(s, "closed form   {}", closed_form.as_deref().unwrap_or("-"))?;
            table_pairs(&mut s, "x", "U'(x)", samples)?;
        }
        PreferenceResult::InverseMarginal { samples, target_time, closed_form_terms, .. } => {
            if f == Format::Csv {
                return Ok(pairs_csv("y,inverse_marginal", samples));
            }
            writeln!(s, "inverse marginal utility I_T(y), target time {target_time}")?;
            if let Some(t) = closed_form_terms {
                let terms: Vec<String> = t.iter().map(|t| format!("{}·e^({}w)", t.coefficient, t.rate)).collect();
                writeln!(s, "closed form   I_T(e^-w) = {}", terms.join(" + "))?;
            }
            table_pairs(&mut s, "y", "I_T(y)", samples)?;
        }
        PreferenceResult::ForwardMeasure { measure, initial_datum, normalization, .. } => {
            if f == Format::Csv {
                return Ok(pairs_csv("x,initial_marginal_utility", initial_datum));
            }
            writeln!(s, "forward measure (admissible: {})", measure.admissible)?;
            writeln!(s, "normalization scale {} shift {}", normalization.scale, normalization.shift)?;
            for (y, m) in measure.point_masses().iter().take(16) {
                writeln!(s, "  y = {y:<24} m = {m}")?;
            }
            table_pairs(&mut s, "x", "u0'(x)", initial_datum)?;
        }
    }
    Ok(s)
}

fn table_pairs(s: &mut String, a: &str, b: &str, pts: &[(f64, f64)]) -> std::fmt::Result {
    writeln!(s, "{a:>24}  {b:>24}")?;
    for (x, y) in pts {
        writeln!(s, "{x:>24}  {y:>24}")?;
    }
    Ok(())
}

pub fn render_simulation(r: &SimulateResponse, f: Format) -> anyhow::Result<String> {
    if f == Format::Structured {
        return structured(r);
    }
    let mut s = String::new();
    let sm = &r.summary;
    writeln!(s, "mode {} x0 {} paths {} dt {} seed {}", mode_name(sm.mode), sm.x0, sm.path_count, sm.dt, sm.seed)?;
    if let Some(m) = &sm.checks.martingale {
        writeln!(s, "martingale      {} estimate {} se {}", pf(m.pass), m.estimate, m.std_error)?;
    }
    if let Some(k) = &sm.checks.ks {
        writeln!(s, "ks              {} statistic {} threshold {}", pf(k.pass), k.statistic, k.threshold)?;
    }
    if let Some(e) = &sm.checks.self_financing {
        writeln!(
            s,
            "self-financing  {} median {} at dt, {} at 2dt",
            pf(e.pass),
            e.median_fine,
            e.median_coarse
        )?;
    }
    write!(s, "{:>10}", "time")?;
    for l in &r.fan.levels {
        write!(s, "  {:>12}", format!("q{:.0}", l * 100.0))?;
    }
    writeln!(s)?;
    for (t, row) in r.fan.times.iter().zip(&r.fan.wealth) {
        write!(s, "{t:>10.4}")?;
        for v in row {
            write!(s, "  {v:>12.6}")?;
        }
        writeln!(s)?;
    }
    Ok(s)
}

fn pf(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Places markers on the lognormal shape `x₀·S_i/E[S]`, scaled into the
/// submission band, then submits and realizes.
pub fn builder_demo(a: &BuilderArgs) -> Result<String, CliError> {
    let market = SinglePeriodMarket::new(a.mu, a.sigma, a.r, a.n).map_err(ServiceError::from)?;
    let mut session = BuilderSession::new(market, a.x0).map_err(ServiceError::from)?;
    let shape = session.market.stock_states.clone();
    let unit = session.market.price(&shape).map_err(ServiceError::from)?;
    let target = 0.995 * a.x0;
    let levels: Vec<f64> = shape.iter().map(|s| s * target / unit).collect();
    session.set_markers(&levels).map_err(ServiceError::from)?;
    let points = session.submit().map_err(ServiceError::from)?;
    let realized = session.realize(a.seed).map_err(ServiceError::from)?;
    let state = SessionState::new("demo", &session);
    Ok(match a.format {
        Format::Structured => structured(&serde_json::json!({
            "session": state,
            "marginal": points,
            "realization": realized,
        }))?,
        Format::Csv => {
            let mut s = String::from("state,wealth,state_price\n");
            for (i, (x, xi)) in points.points.iter().enumerate() {
                writeln!(s, "{},{x},{xi}", i + 1).map_err(anyhow::Error::from)?;
            }
            s
        }
        Format::Table => {
            let mut s = String::new();
            let w = |s: &mut String, t: String| writeln!(s, "{t}").map_err(anyhow::Error::from);
            w(&mut s, format!("states N = {}, pricing exponent b = {}", a.n, session.market.pricing_exponent))?;
            w(&mut s, format!("cost {} of budget {} ({:.2}%)", state.cost, a.x0, 100.0 * state.cost_fraction))?;
            w(&mut s, format!("inferred marginal utility points: {} (degenerate: {})", points.points.len(), points.degenerate))?;
            w(&mut s, format!("realized state {} with wealth {}", realized.state, realized.wealth))?;
            s
        }
    })
}
