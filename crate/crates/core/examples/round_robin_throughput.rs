//! Saturated round robin over M of N symmetric channels, compared with the
//! closed-form sum throughput c_M, plus the heuristic that stays on a
//! channel until a NACK.

use memsched::capacity::{c_infinity, c_of_m, eta_vector};
use memsched::policy::{OrderVariant, PolicySpec};
use memsched::simulator::{run_saturated, SimConfig};
use memsched::ChannelParams;

fn main() -> memsched::Result<()> {
    let n = 4;
    let params = vec![ChannelParams::new(0.2, 0.2)?; n];
    println!(" M  simulated  closed-form");
    for m in 1..=n {
        let cfg = SimConfig::saturated(params.clone(), PolicySpec::rr_m(m, n)?, 1_000_000, m as u64);
        let metrics = run_saturated(&cfg)?;
        println!("{m:>2}  {:.5}    {:.5}", metrics.sum_throughput, c_of_m(&params[0], m as u32));
    }
    println!("c_inf = {:.5}", c_infinity(&params[0]));

    let asym = vec![ChannelParams::new(0.1, 0.3)?, ChannelParams::new(0.3, 0.1)?];
    let phi = "11".parse()?;
    let metrics = run_saturated(&SimConfig::saturated(asym.clone(), PolicySpec::Rr { active: phi }, 1_000_000, 9))?;
    println!("asymmetric RR: simulated {:.4?}, predicted {:.4?}", metrics.throughput, eta_vector(&phi, &asym));

    let heuristic = PolicySpec::UntilNack { active: None, order: OrderVariant::Circular };
    let metrics = run_saturated(&SimConfig::saturated(vec![params[0]; 2], heuristic, 1_000_000, 3))?;
    println!("transmit-until-NACK, two users: sum throughput {:.4}", metrics.sum_throughput);
    Ok(())
}
