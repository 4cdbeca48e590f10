//! Distilling a GHZ state on hidden participants, over every branch and once
//! on a live network with its broadcast transcript.
//!
//! ```bash
//! cargo run --example ame_distill
//! ```

use anon_cka::netmodel::{Network, RoleAssignment};
use anon_cka::protocols::{ame, ame_branch};
use anon_cka::qsim::ghz_state;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roles = RoleAssignment::new(6, 4, [1, 5])?;
    let g = ghz_state(6)?;
    let target = ghz_state(3)?;
    let k = roles.non_participants().len();
    for b in 0..(1u32 << k) {
        let outcomes: Vec<u8> = (0..k).map(|i| (b >> i & 1) as u8).collect();
        let (p, s) = ame_branch(&g, &roles, &outcomes)?;
        println!("outcomes {outcomes:?}: probability {p:.4}, fidelity {:.12}", s.fidelity(&target)?);
    }

    let mut net = Network::new(6, 3);
    let out = ame(&g, &roles, &mut net)?;
    println!("announced bits {:?} in order {:?}; Alice corrected: {}", out.announced_bits, out.announcement_order, out.corrected);
    print!("{}", net.transcript().to_jsonl());
    Ok(())
}
