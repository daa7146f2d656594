//! A single polarization-sensitive detector is already entangling.
//!
//! Remove the PBS and keep one detector: its efficiencies for the two
//! orthogonal polarizations differ (ratio 0.721 here), which is algebraically
//! identical to the two-detector setup with loss L = 1 - 0.721 = 0.279 in one
//! arm. The polarization mixing by the wave plate plus that asymmetry make
//! even this bare detector's POVM slightly inseparable.
//!
//! ```sh
//! cargo run --release --example single_detector
//! ```

use entlab::entanglement::theory_measure;
use entlab::optics::{theory_povm, DetectorModel};

fn main() -> entlab::Result<()> {
    let eta = 0.209;
    let ratio = 0.721;

    let single = DetectorModel::single_detector(eta, eta * ratio);
    let m_single = theory_measure(&single)?;
    println!("single detector, efficiency ratio {ratio}:");
    println!("  M_LN = {m_single:.6}\n");

    let equivalent = DetectorModel::two_detector(eta, eta, 1.0 - ratio);
    let m_equiv = theory_measure(&equivalent)?;
    println!("two-detector model at L = {:.3}:", 1.0 - ratio);
    println!("  M_LN = {m_equiv:.6}\n");

    assert!((m_single - m_equiv).abs() < 1e-12);
    assert!(m_single > 0.0);
    assert!((0.001..0.02).contains(&m_single));

    let four = theory_povm(&single, 2)?.on_two_qubit()?;
    println!("qubit (x) qubit 'on' element of the bare detector:\n{four}");
    println!("The small off-diagonals in the single-photon block carry the");
    println!("inseparability; they vanish only when both polarizations are");
    println!("detected equally well.");
    Ok(())
}
