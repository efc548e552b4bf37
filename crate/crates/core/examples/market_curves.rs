//! Two-asset market with a regime change: λ, A_t and the portfolio direction.

use wealth_target::market::{build_curves, MarketPiece, MarketSpec, RiskBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vol = vec![vec![0.2, 0.0], vec![0.1, 0.3]];
    let spec = MarketSpec {
        d: 2,
        horizon: 2.0,
        pieces: vec![
            MarketPiece { t_start: 0.0, t_end: 1.0, rate: 0.01, drift: vec![0.05, 0.08], vol: vol.clone() },
            MarketPiece { t_start: 1.0, t_end: 2.0, rate: 0.02, drift: vec![0.04, 0.05], vol },
        ],
        bounds: RiskBounds::default(),
    };
    let c = build_curves(&spec)?;
    for t in [0.0, 0.5, 1.0, 1.5, 2.0] {
        println!(
            "t = {t:.1}  λ = {:?}  A_t = {:.6}  σ⁻¹λ = {:?}",
            c.lambda(t)?,
            c.a(t)?,
            c.sigma_inv_lambda(t)?
        );
    }
    let half = c.a_total() / 2.0;
    println!("A reaches {half:.6} at t = {:.6}", c.time_for_variance(half)?);
    Ok(())
}
