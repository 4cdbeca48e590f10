//! Anonymity as distinguishability of a coalition's views, with a broken
//! protocol as a negative control.
//!
//! ```bash
//! cargo run --release --example anonymity_tvd
//! ```

use std::collections::BTreeSet;

use anon_cka::analysis::{ame_runner, estimate_anonymity_tvd, leaky_ame_runner, notification_runner};
use anon_cka::netmodel::RoleAssignment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = 10_000;
    let cases = [
        ("distillation", RoleAssignment::new(4, 0, [1, 2])?, RoleAssignment::new(4, 2, [0, 1])?, 3),
        ("notification", RoleAssignment::new(4, 0, [1])?, RoleAssignment::new(4, 0, [2])?, 3),
    ];
    for (name, a, b, member) in cases {
        let runner = if name == "distillation" { &ame_runner as _ } else { &notification_runner as _ };
        let est = estimate_anonymity_tvd(runner, &a, &b, &BTreeSet::from([member]), trials, 1)?;
        println!(
            "{name}: tvd {:.4} ± {:.4} (plug-in {:.4}), guessing bound {:.4}, projected {}",
            est.tvd, est.stderr, est.plugin_tvd, est.guessing_bound, est.projected
        );
    }
    let a = RoleAssignment::new(5, 0, [1, 2])?;
    let b = RoleAssignment::new(5, 0, [1, 3])?;
    let est = estimate_anonymity_tvd(&leaky_ame_runner, &a, &b, &BTreeSet::from([4]), trials, 2)?;
    println!("leaky distillation: tvd {:.4} ± {:.4}, below threshold {}", est.tvd, est.stderr, est.below_threshold);
    Ok(())
}
