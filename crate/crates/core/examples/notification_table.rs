//! Anonymous notification: every party learns only whether it was chosen.
//!
//! ```bash
//! cargo run --example notification_table -- 42
//! ```

use anon_cka::netmodel::{Network, RoleAssignment};
use anon_cka::protocols::notification;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let roles = RoleAssignment::new(5, 2, [0, 4])?;
    let mut net = Network::new(5, seed);
    let out = notification(&roles, &mut net)?;

    for t in &out.tables {
        println!("{}", t.render(roles.alice()));
    }
    println!("Alice = P{}, notified = {:?}", roles.alice(), out.notified_set());
    println!(
        "private bits sent: {} (n³ + n² = {})",
        net.counters().private_bits_sent,
        5 * 5 * 5 + 5 * 5
    );
    Ok(())
}
