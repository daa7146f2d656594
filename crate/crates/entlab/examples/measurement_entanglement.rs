//! The entanglement measure of a measurement.
//!
//! A POVM element, normalized by its trace, is formally a density operator;
//! its logarithmic negativity over the mode bipartition quantifies how much
//! entanglement the outcome can create. The measure is zero exactly for
//! separable (product) elements and invariant under local unitaries,
//! transposition and scaling.
//!
//! ```sh
//! cargo run --release --example measurement_entanglement
//! ```

use entlab::entanglement::{bell_psi_projector, measure_of_povm, random_povm_element};
use entlab::fock::{haar_unitary, kron};
use entlab::tomography::run_rng;

fn main() -> entlab::Result<()> {
    let mut rng = run_rng(2026);

    println!("=== anchors ===\n");
    let bell = bell_psi_projector(true);
    println!("Bell projector |Psi+><Psi+|: M_LN = {}", measure_of_povm(&bell, 2, 2)?);

    let product = kron(
        &random_povm_element(2, &mut rng),
        &random_povm_element(2, &mut rng),
    );
    println!("random product element:      M_LN = {}", measure_of_povm(&product, 2, 2)?);
    assert_eq!(measure_of_povm(&product, 2, 2)?, 0.0);
    assert!((measure_of_povm(&bell, 2, 2)? - 1.0).abs() < 1e-12);

    println!("\n=== invariances on a random element ===\n");
    let pi = random_povm_element(4, &mut rng);
    let base = measure_of_povm(&pi, 2, 2)?;
    println!("M_LN(Pi)                = {base:.12}");

    let scaled = measure_of_povm(&pi.scale(0.0137), 2, 2)?;
    println!("M_LN(0.0137 Pi)         = {scaled:.12}");
    assert!((scaled - base).abs() < 1e-9);

    let u = haar_unitary(2, &mut rng);
    let v = haar_unitary(2, &mut rng);
    let uv = kron(&u, &v);
    let rotated = measure_of_povm(&uv.matmul(&pi).matmul(&uv.adjoint()), 2, 2)?;
    println!("M_LN((U(x)V) Pi (..)^+) = {rotated:.12}");
    assert!((rotated - base).abs() < 1e-9);

    let transposed = measure_of_povm(&pi.transpose(), 2, 2)?;
    println!("M_LN(Pi^T)              = {transposed:.12}");
    assert!((transposed - base).abs() < 1e-9);

    println!("\nScale, local-unitary and transpose invariance make the measure a");
    println!("property of the measurement outcome itself, not of its bookkeeping.");
    Ok(())
}
