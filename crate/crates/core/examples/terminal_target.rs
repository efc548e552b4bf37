//! Fixed-horizon inference: solve b for a lognormal target, read off U_T′,
//! and compare the two cost-efficiency forms.

use wealth_target::distribution::transformed_normal_family;
use wealth_target::fixed_horizon::*;
use wealth_target::market::{build_curves, MarketSpec};
use wealth_target::numerics::QuadratureSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0))?;
    let q = QuadratureSpec::default();
    for x0 in [1.0, (-0.02f64).exp(), 0.06f64.exp()] {
        let b = solve_family_parameter(ParametricFamily::Lognormal, x0, &curves, 1.0, &q)?;
        let s = solve_terminal(&ParametricFamily::Lognormal.build(b)?, &curves, 1.0, x0, &q)?;
        let u = &s.marginal_utility;
        println!(
            "x0 = {x0:.6}: b = {b:.10}, U′ = {}, U′(2) = {:.6}",
            u.closed_form().unwrap_or_default(),
            u.eval(2.0)
        );
    }

    let d = transformed_normal_family(0.5)?;
    let (gaussian, coupling) = cost_efficiency_check(&d, &curves, 1.0, &q)?;
    println!("transformed-normal(0.5) price: Gaussian form {gaussian:.12}, quantile coupling {coupling:.12}");

    let s = solve_terminal(&d, &curves, 1.0, gaussian, &q)?;
    println!("h⁻¹(x0, 0) = {:.12} (−A_T = −0.04)", s.h.inverse(gaussian, 0.0)?);
    Ok(())
}
