//! GHZ states, measurement and the density-matrix tools.
//!
//! ```bash
//! cargo run --example ghz_basics
//! ```

use anon_cka::qsim::{
    density_from_ensemble, fidelity_with_pure, ghz_prime_state, ghz_state, local_correct_ghz_prime, measure,
    rotated_ghz, trace_distance, werner_ghz, werner_weight_for_fidelity, DensityMatrix, MeasurementBasis,
};
use anon_cka::rng::{stream_rng, Stream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = ghz_state(3)?;
    println!("GHZ3 amplitudes: {}", g.amplitudes_json());

    let mut rng = stream_rng(7, Stream::Nature);
    let (bit, rest) = measure(&g, 0, MeasurementBasis::X, &mut rng)?;
    println!("X on qubit 0 gave {bit}; the other two now hold {}", rest.amplitudes_json());

    let corrected = local_correct_ghz_prime(&ghz_prime_state())?;
    println!("corrected GHZ′ fidelity with GHZ4: {:.12}", corrected.fidelity(&ghz_state(4)?)?);

    let target = DensityMatrix::from_pure(&ghz_state(4)?)?;
    for theta in [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
        let rho = DensityMatrix::from_pure(&rotated_ghz(4, theta)?)?;
        println!("θ = {theta:.4}: trace distance to GHZ4 = {:.6}", trace_distance(&rho, &target)?);
    }

    let p = werner_weight_for_fidelity(4, 0.81)?;
    let rho = density_from_ensemble(&werner_ghz(4, p)?)?;
    println!(
        "Werner weight for F = 0.81: p = {p:.6}; check F = {:.6}, ε = {:.6}",
        fidelity_with_pure(&rho, &ghz_state(4)?)?,
        trace_distance(&rho, &target)?
    );
    Ok(())
}
