//! Queue-dependent round robin with Bernoulli arrivals: inside the inner
//! bound the backlog settles, outside the outer bound it grows linearly.

use memsched::capacity::c_of_m;
use memsched::policy::{PolicySpec, QrrConfig};
use memsched::simulator::{run_queued, stability_report, ArrivalConfig, SimConfig};
use memsched::ChannelParams;

fn main() -> memsched::Result<()> {
    let params = vec![ChannelParams::new(0.2, 0.2)?; 2];
    let edge = c_of_m(&params[0], 2) / 2.0;
    for lam in [0.5 * edge, 0.9 * edge, 0.40] {
        let lambda = vec![lam, lam];
        let cfg = SimConfig::queued(
            params.clone(),
            PolicySpec::Qrr(QrrConfig::known(lambda.clone())),
            ArrivalConfig::bernoulli(lambda),
            1_000_000,
            17,
        );
        let m = run_queued(&cfg)?;
        let b = m.backlog.as_ref().expect("queued run");
        let r = stability_report(b).expect("enough blocks");
        println!(
            "lambda = {lam:.4}: mean backlog {:.1}, final {}, slope {:.2e} (99% CI {:.2e}..{:.2e}) -> {}",
            b.mean_total,
            b.final_total,
            r.slope.slope,
            r.slope.ci.0,
            r.slope.ci.1,
            if r.stable() { "stable" } else if r.growing() { "growing" } else { "inconclusive" }
        );
    }
    Ok(())
}
