//! Simulate optimal wealth for the β = 2 target and run the martingale, KS and
//! self-financing checks; optionally export paths as CSV.
//!
//! `cargo run --example monte_carlo_checks -- paths.csv`

use wealth_target::distribution::lognormal_family;
use wealth_target::fixed_horizon::solve_terminal;
use wealth_target::market::{build_curves, MarketSpec};
use wealth_target::numerics::QuadratureSpec;
use wealth_target::simulation::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0))?;
    let d = lognormal_family(0.16)?;
    let s = solve_terminal(&d, &curves, 1.0, 1.0, &QuadratureSpec::default())?;
    let cfg = SimulationConfig { seed: 42, ..Default::default() };
    let bundle = simulate(s.h.as_ref(), Mode::Fixed, &curves, 1.0, 1.0, &[], &cfg)?;
    let report = run_checks(&bundle, &d, 1.0, &cfg.checks)?;
    println!("{report:#?}");
    println!("all checks pass: {}", report.all_pass());

    let fan = bundle.fan(&[0.05, 0.5, 0.95]);
    for (t, q) in fan.times.iter().zip(&fan.wealth).step_by(5) {
        println!("t = {t:.2}: 5% {:.4}  50% {:.4}  95% {:.4}", q[0], q[1], q[2]);
    }
    if let Some(path) = std::env::args().nth(1) {
        bundle.write_columnar(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("paths written to {path}");
    }
    Ok(())
}
