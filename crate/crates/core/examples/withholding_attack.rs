//! A non-participant that skips its distillation measurement stays entangled
//! with the key. Verification after distillation catches it half the time per
//! round.
//!
//! ```bash
//! cargo run --release --example withholding_attack
//! ```

use anon_cka::adversary::{run_with_adversary, AdversaryStrategy};
use anon_cka::netmodel::RoleAssignment;
use anon_cka::protocols::{AvkaParams, Source};
use anon_cka::qsim::MeasurementBasis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roles = RoleAssignment::new(4, 0, [1, 2])?;
    for basis in [MeasurementBasis::Z, MeasurementBasis::X] {
        let strategy = AdversaryStrategy::WithholdingAgent { party: 3, later_basis: basis };
        let run = run_with_adversary(&roles, AvkaParams::new(4000, 2)?, &strategy, &Source::honest(4)?, 5)?;
        let r = &run.result;
        let matches = run
            .adversary_key_guess
            .0
            .iter()
            .zip(&r.key_bits[0].0)
            .filter(|(a, b)| a == b)
            .count();
        println!(
            "later basis {basis}: verification acceptance {:.4} over {} rounds, guess matches {matches}/{} key bits, validated {}",
            r.verification_accept_rate().unwrap_or(f64::NAN),
            r.verification_rounds,
            r.keygen_rounds,
            r.validated
        );
    }
    Ok(())
}
