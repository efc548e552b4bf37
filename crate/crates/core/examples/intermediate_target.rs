//! Intermediate target: a lognormal law at T̂ (A_T̂ = 0.02) with utility
//! defined at T (A_T = 0.04), via Weierstrass inversion.

use wealth_target::distribution::{analytic_extension, lognormal_family};
use wealth_target::intermediate::*;
use wealth_target::market::{build_curves, MarketSpec};
use wealth_target::numerics::QuadratureSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0))?;
    let q = QuadratureSpec::default();
    let t_hat = curves.time_for_variance(0.02)?;
    let d = lognormal_family(0.08)?;
    let s = solve_intermediate(&d, &curves, t_hat, 1.0, &q)?;
    println!("T̂ = {t_hat}, assumptions hold: {}", s.assumption_report.all_ok());
    for w in [-1.0, 0.0, 1.0] {
        let (v, dv) = s.inverse_marginal.eval_log(w)?;
        println!("w = {w:+.1}: I_T(e^(-w)) = {v:.12}, d/dw = {dv:.12}; exact {:.12}", (2.0 * w - 0.04f64).exp());
    }
    let ext = analytic_extension(&d, s.c, s.a_hat)?;
    let back = weierstrass_forward(&s.inverse_marginal, 0.5, &q)?;
    println!("forward convolution at 0.5: {back:.12} vs G(0.5) = {:.12}", ext.eval_real(0.5));
    Ok(())
}
