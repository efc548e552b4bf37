//! Elicited markers and a custom quantile table as continuous targets, priced
//! and inverted by the fixed-horizon engine.

use wealth_target::distribution::{from_markers, from_quantile_table};
use wealth_target::fixed_horizon::{budget_integral, solve_terminal};
use wealth_target::market::{build_curves, MarketSpec};
use wealth_target::numerics::QuadratureSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0))?;
    let q = QuadratureSpec::default();
    let a = curves.a_total();

    let levels: Vec<f64> = (0..100).map(|i| 0.7 + 0.6 * (i as f64 / 99.0).powf(1.3)).collect();
    let d = from_markers(&levels)?;
    let x0 = budget_integral(&d, a, &q)?;
    let s = solve_terminal(&d, &curves, 1.0, x0, &q)?;
    println!("markers: median {:.4}, cost {x0:.6}", d.quantile(0.5));
    for x in [0.8, 1.0, 1.2] {
        println!("  U′({x}) = {:.6}", s.marginal_utility.eval(x));
    }

    let table = [(0.01, 0.6), (0.25, 0.9), (0.5, 1.0), (0.75, 1.15), (0.99, 1.6)];
    let d = from_quantile_table(&table)?;
    let x0 = budget_integral(&d, a, &q)?;
    println!("quantile table: cost {x0:.6}, F(1.0) = {:.4}", d.cdf(1.0));
    Ok(())
}
