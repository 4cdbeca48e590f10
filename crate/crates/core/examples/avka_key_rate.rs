//! Verifiable key agreement: key length against L/D, and what noise does to
//! validation.
//!
//! ```bash
//! cargo run --release --example avka_key_rate
//! ```

use anon_cka::analysis::key_rate;
use anon_cka::netmodel::{Network, RoleAssignment};
use anon_cka::protocols::{avka, AvkaParams, Source};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roles = RoleAssignment::new(5, 0, [2, 3])?;
    let params = AvkaParams::new(500, 10)?;
    let honest = Source::honest(5)?;
    let results = (0..50)
        .map(|s| avka(&roles, params, &honest, &mut Network::new(5, s).without_recording()))
        .collect::<Result<Vec<_>, _>>()?;
    let rate = key_rate(&results, params)?;
    println!(
        "honest source: mean key {:.2} bits, expected {} ± {:.1}, all validated: {}",
        rate.empirical_rate,
        rate.expected,
        rate.tolerance,
        results.iter().all(|r| r.validated)
    );

    for f in [0.99, 0.95, 0.9] {
        let noisy = Source::werner(5, f)?;
        let validated = (0..50)
            .filter(|&s| {
                avka(&roles, params, &noisy, &mut Network::new(5, 1000 + s).without_recording())
                    .map(|r| r.validated)
                    .unwrap_or(false)
            })
            .count();
        println!("Werner F = {f}: {validated}/50 runs validated");
    }
    Ok(())
}
