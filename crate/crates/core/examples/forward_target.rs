//! Flexible horizon: recover the measure ν from the Fourier transform of a
//! target, build the forward performance process, and flag an inadmissible case.

use wealth_target::distribution::{lognormal_family, transformed_normal_family, whole_line_family};
use wealth_target::fixed_horizon::{solve_family_parameter, ParametricFamily};
use wealth_target::forward::*;
use wealth_target::market::{build_curves, MarketSpec};
use wealth_target::numerics::QuadratureSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curves = build_curves(&MarketSpec::single_asset(0.06, 0.02, 0.2, 1.0))?;
    let q = QuadratureSpec::default();

    let s = solve_forward(&lognormal_family(0.16)?, &curves, 1.0, 1.0, &q)?;
    println!("lognormal target: {:?}", s.measure.point_masses());
    let p = s.performance()?;
    for (x, t) in [(1.0, 0.0), (1.0, 0.04), (4.0, 0.04)] {
        println!("  u({x}, {t}) = {:.12}, u₀′({x}) = {:.12}", p.eval(x, t)?, s.initial_datum.eval(x)?);
    }

    let b = solve_family_parameter(ParametricFamily::TransformedNormal, 5.0, &curves, 1.0, &q)?;
    let s = solve_forward(&transformed_normal_family(b)?, &curves, 1.0, 5.0, &q)?;
    println!("transformed-normal (b = {b:.6}): {:?}", s.measure.point_masses());
    println!("  normalization {:?}", s.normalization);

    match solve_forward(&whole_line_family(0.04)?, &curves, 1.0, 1.0, &q) {
        Err(e) => println!("whole-line target refused: {e}"),
        Ok(_) => println!("whole-line target unexpectedly accepted"),
    }
    Ok(())
}
