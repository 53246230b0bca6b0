//! The Monte-Carlo oracles on their own, then the full verification suite
//! in quick mode.

use memsched::oracles::{
    coupled_binary_sampler, coupling_experiment, fictitious_channel_sim, run_verify_suite, SelectionRule,
    VerifyOptions,
};
use memsched::ChannelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> memsched::Result<()> {
    let p = ChannelParams::new(0.2, 0.2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let c = coupling_experiment(&p, |t| if t % 10 < 5 { (0.1, 0.7) } else { (0.2, 0.6) }, 1_000_000, &mut rng)?;
    println!("coupling: pi_Y = {:.4} +- {:.4}, pi_X = {:.4}", c.pi_y, c.sigma, c.pi_x);

    let (i, hat) = coupled_binary_sampler(|h| if h.last() == Some(&true) { 0.1 } else { 0.25 }, 0.3, 100_000, &mut rng)?;
    let ones = |v: &[bool]| v.iter().filter(|b| **b).count() as f64 / v.len() as f64;
    println!("binary coupling: P(I=1) = {:.4}, P(I^=1) = {:.4}", ones(&i), ones(&hat));

    let f = fictitious_channel_sim(&[p, p], SelectionRule::Fixed(0), 1_000_000, &mut rng)?;
    println!("bounding channel, fixed arm: {:.4} (c_inf = {:.4})", f.sum_throughput, p.c_infinity());

    for v in run_verify_suite(&VerifyOptions::new(vec![p; 2], 1, true))? {
        println!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.experiment);
    }
    Ok(())
}
