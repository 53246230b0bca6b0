//! Belief dynamics of a single channel: multi-step transitions, how ACK/NACK
//! feedback resets the belief, and how idle slots pull it toward the
//! stationary ON probability.

use memsched::channel::{mode_of, BeliefVector, ChannelParams, ChannelState};

fn main() -> memsched::Result<()> {
    let p = ChannelParams::new(0.2, 0.2)?;
    println!("p01={} p10={} x={} pi_on={}", p.p01(), p.p10(), p.x(), p.pi_on());
    for k in [1, 2, 4, 8, 16] {
        let m = p.k_step(k)?;
        println!("k={k:>2}: P01^(k)={:.6} P11^(k)={:.6}", m.p01, m.p11);
    }

    let params = vec![p; 2];
    let mut omega = BeliefVector::stationary(&params).with_tracking(&params);
    let script = [
        Some((0, ChannelState::Off)),
        None,
        Some((1, ChannelState::On)),
        None,
        None,
        Some((0, ChannelState::On)),
    ];
    for (t, obs) in script.iter().enumerate() {
        omega.update(*obs, &params);
        omega.check_reachable(&params)?;
        let modes: Vec<_> = (0..2).map(|n| mode_of(omega.get(n), &params[n]).unwrap()).collect();
        println!("slot {t}: observed {obs:?} -> omega = {:.4?}, modes {modes:?}", omega.as_slice());
    }
    Ok(())
}
