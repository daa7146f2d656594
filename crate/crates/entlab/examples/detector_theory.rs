//! Theory POVMs of the two-mode click detector.
//!
//! The detector chain is HWP0 (22.5 degrees) -> PBS -> loss L on the second
//! arm -> two on/off detectors -> OR gate. At L = 0 with equal efficiencies
//! it is a separable measurement (a balanced mixture of the two Bell
//! projections |Psi+> and |Psi->, which is diagonal); at L = 1 it projects
//! onto a single Bell state and becomes maximally entangling for this
//! architecture.
//!
//! ```sh
//! cargo run --release --example detector_theory
//! ```

use entlab::entanglement::measure_of_povm;
use entlab::optics::{theory_povm, DetectorModel};

fn main() -> entlab::Result<()> {
    let eta = 0.2;

    println!("=== separable setting: L = 0, eta1 = eta2 = {eta} ===\n");
    let separable = theory_povm(&DetectorModel::two_detector(eta, eta, 0.0), 2)?;
    let four = separable.on_two_qubit()?;
    println!("Pi_on truncated to the qubit (x) qubit space:\n{four}");
    let m = measure_of_povm(&four, 2, 2)?;
    println!("measure M_LN = {m}\n");
    assert_eq!(m, 0.0);

    println!("=== entangled setting: L = 1 (second arm blocked) ===\n");
    let entangled = theory_povm(&DetectorModel::two_detector(eta, eta, 1.0), 2)?;
    let four = entangled.on_two_qubit()?;
    println!("Pi_on truncated to the qubit (x) qubit space:\n{four}");
    println!(
        "single-photon block = eta |Psi+><Psi+| with eta/2 = {} off-diagonals",
        eta / 2.0
    );
    let m = measure_of_povm(&four, 2, 2)?;
    println!("measure M_LN = {m:.6}");
    assert!((four.entry(1, 2).re - eta / 2.0).abs() < 1e-12);
    assert!(m > 0.30 && m < 0.31);

    println!("\n=== full 6x6 'on' element at L = 1 ===\n");
    println!("{}", entangled.on());
    println!("Entries between different total photon numbers vanish: the");
    println!("detector is insensitive to the global phase.");
    Ok(())
}
