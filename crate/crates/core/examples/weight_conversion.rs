//! Turning target time fractions into per-round selection probabilities for
//! randomized round robin, and checking the result by simulation.

use memsched::capacity::{beta_to_alpha, chi, MixtureWeights, WeightKind};
use memsched::oracles::recursive_beta_to_alpha;
use memsched::policy::PolicySpec;
use memsched::simulator::{run_saturated, SimConfig};
use memsched::{ActivationVector, ChannelParams};

fn main() -> memsched::Result<()> {
    let params = vec![ChannelParams::new(0.2, 0.2)?; 2];
    let a: ActivationVector = "10".parse()?;
    let b: ActivationVector = "11".parse()?;
    let beta = MixtureWeights::new(WeightKind::TimeFraction, [(a, 0.5), (b, 0.5)])?;
    let alpha = beta_to_alpha(&beta, &params)?;
    println!("beta  {:?}", beta.to_map());
    println!("alpha {:?}", alpha.to_map());
    let rec = recursive_beta_to_alpha(&[0.5, 0.5], &[chi(&a, &params), chi(&b, &params)])?;
    println!("inductive construction: {rec:.6?}");

    let spec = alpha.to_randrr()?;
    let metrics = run_saturated(&SimConfig::saturated(params, PolicySpec::RandRr { weights: spec }, 1_000_000, 1))?;
    let in_a: u64 = metrics.dwell.iter().filter(|h| h.phi == a).map(|h| h.counts.iter().enumerate().map(|(j, c)| (j as u64 + 1) * c).sum::<u64>()).sum();
    println!("fraction of slots in {a} rounds: {:.4}", in_a as f64 / metrics.measured_slots as f64);
    Ok(())
}
