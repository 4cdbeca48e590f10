//! The verification test against the bound 1 − ε²/2 on rotated GHZ states
//! and white-noise mixtures.
//!
//! ```bash
//! cargo run --release --example verification_bound
//! ```

use anon_cka::analysis::check_theorem1;
use anon_cka::qsim::{rotated_ghz, werner_ghz, werner_weight_for_fidelity, NoiseEnsemble};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut family = Vec::new();
    let mut labels = Vec::new();
    for i in 0..=8 {
        let theta = std::f64::consts::PI * i as f64 / 8.0;
        family.push(NoiseEnsemble::pure(rotated_ghz(4, theta)?));
        labels.push(format!("rotated θ={theta:.3}"));
    }
    for f in [0.9, 0.7, 0.5] {
        family.push(werner_ghz(4, werner_weight_for_fidelity(4, f)?)?);
        labels.push(format!("werner F={f}"));
    }
    println!("{:<20} {:>8} {:>8} {:>8} {:>8}", "state", "ε", "accept", "bound", "ok");
    for (label, c) in labels.iter().zip(check_theorem1(&family, 5000, 9)?) {
        println!(
            "{label:<20} {:>8.4} {:>8.4} {:>8.4} {:>8}",
            c.epsilon, c.accept_rate, c.bound, c.satisfied
        );
    }
    Ok(())
}
