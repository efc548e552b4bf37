//! The single-period Distribution Builder loop: place markers, watch the cost
//! meter, submit inside the 99-100% band, then realize one state.

use wealth_target::single_period::{BuilderSession, SinglePeriodMarket};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let market = SinglePeriodMarket::new(0.07, 0.2, 0.02, 100)?;
    println!("pricing exponent b = {:.6}", market.pricing_exponent);
    let mut session = BuilderSession::new(market, 1.0)?;

    // Risk-free replication: every marker at 1 + r costs exactly the budget.
    let cost = session.set_markers(&vec![1.02; 100])?;
    println!("flat markers cost {cost:.12} → {:?}", session.status);

    // A lognormal-shaped placement scaled to 99.5% of the budget.
    let shape = session.market.stock_states.clone();
    let unit = session.market.price(&shape)?;
    let levels: Vec<f64> = shape.iter().map(|s| s * 0.995 / unit).collect();
    let cost = session.set_markers(&levels)?;
    println!("shaped markers cost {cost:.6} → {:?}", session.status);

    let points = session.submit()?;
    println!("inferred U′ at five wealth levels:");
    for (x, u) in points.points.iter().step_by(24) {
        println!("  U′({x:.4}) = {u:.4}");
    }
    let r = session.realize(7)?;
    println!("realized state {} with wealth {:.4}", r.state, r.wealth);
    Ok(())
}
