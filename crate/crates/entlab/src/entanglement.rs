//! Entanglement of states and of measurements.
//!
//! The measure of a measurement outcome is the logarithmic negativity of its
//! trace-normalized POVM element. Conditioning two maximally entangled pairs
//! on that outcome of a joint measurement of one member from each pair leaves
//! the untouched members in a state that is, up to local unitaries, the
//! transposed normalized POVM element; the measure therefore equals the
//! logarithmic negativity of the state created by entanglement swapping,
//! which [`swap_remaining_state`] verifies by explicit 16x16 algebra.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::fock::{kron, partial_trace, partial_transpose, trace_norm, Operator, Subsystem};
use crate::optics::{theory_povm, DetectorModel};
use crate::probes::ProbeSpec;
use crate::tomography::{bootstrap_errors, Sampling, SolverOptions};
use crate::{Complex64, Error, Result};

/// Values of the measure within this distance of zero are reported as exactly
/// zero, so floating-point noise never claims inseparability.
pub const MLN_ZERO_CLIP: f64 = 1e-9;

/// Logarithmic negativity `log2 || rho^T_B ||_1` of a density operator on an
/// `A (x) B` product space with the declared factor dimensions.
///
/// The input must be positive semidefinite within `1e-9` and trace one within
/// `1e-9`.
pub fn log_negativity(rho: &Operator, d_a: usize, d_b: usize) -> Result<f64> {
    if d_a * d_b != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bipartition {}x{} does not match dimension {}",
            d_a,
            d_b,
            rho.dim()
        )));
    }
    let min = rho.min_eigenvalue()?;
    if min < -1e-9 {
        return Err(Error::InvalidState(format!(
            "not positive semidefinite: min eigenvalue {min:.3e}"
        )));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let pt = partial_transpose(rho, d_a, d_b, Subsystem::B)?;
    let value = trace_norm(&pt, true)?.log2();
    // The trace norm of a partial transpose of a state is >= 1, so anything
    // below is numerical noise.
    if value < -MLN_ZERO_CLIP {
        return Err(Error::EigenFailure(format!(
            "trace norm of partial transpose fell below 1: log2 = {value:.3e}"
        )));
    }
    Ok(value.max(0.0))
}

/// Entanglement measure of a POVM element: the logarithmic negativity of
/// `pi / Tr(pi)` over the declared bipartition.
///
/// Invariant under scaling, under local unitary conjugation and under
/// transposition. Values within [`MLN_ZERO_CLIP`] of zero are reported as 0.
pub fn measure_of_povm(pi: &Operator, d_a: usize, d_b: usize) -> Result<f64> {
    let tr = pi.trace().re;
    if tr.abs() <= 1e-12 {
        return Err(Error::ZeroTrace);
    }
    let min = pi.min_eigenvalue()?;
    if min < -1e-9 * tr.max(1.0) {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    let value = log_negativity(&pi.scale(1.0 / tr), d_a, d_b)?;
    Ok(if value <= MLN_ZERO_CLIP { 0.0 } else { value })
}

/// `|Phi+> = (|0,0> + |1,1>)/sqrt(2)` on a qubit (x) qubit space.
pub fn bell_phi_plus() -> DVector<Complex64> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DVector::from_vec(vec![r, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), r])
}

/// `|Psi+-> = (|0,1> +- |1,0>)/sqrt(2)` projector on a qubit (x) qubit space.
pub fn bell_psi_projector(plus: bool) -> Operator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if plus { r } else { -r };
    let v = DVector::from_vec(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(r, 0.0),
        Complex64::new(sign, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    Operator::from_matrix(nalgebra::DMatrix::from_fn(4, 4, |i, j| v[i] * v[j].conj()))
}

fn check_unitary_2x2(u: &Operator) -> Result<()> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "local unitary must be 2x2, got {}",
            u.dim()
        )));
    }
    let dev = (u.adjoint().matmul(u).mat() - nalgebra::DMatrix::<Complex64>::identity(2, 2))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// Maximally entangled two-qubit state `(U (x) V) |Phi+>` as a projector.
pub fn maximally_entangled_pair(u: &Operator, v: &Operator) -> Result<Operator> {
    check_unitary_2x2(u)?;
    check_unitary_2x2(v)?;
    let uv = kron(u, v);
    let psi = uv.mat() * bell_phi_plus();
    Ok(Operator::from_matrix(nalgebra::DMatrix::from_fn(
        4,
        4,
        |i, j| psi[i] * psi[j].conj(),
    )))
}

/// Conditions two maximally entangled pairs `(U1 (x) V1)|Phi+>_AB` and
/// `(U2 (x) V2)|Phi+>_CD` on the outcome `pi_BC` of a joint measurement of
/// modes B and C, by explicit 16x16 algebra.
///
/// Returns the normalized remaining state of modes A and D together with the
/// outcome probability `p = Tr[rho Pi]`.
pub fn swap_remaining_state(
    pi_bc: &Operator,
    u1: &Operator,
    v1: &Operator,
    u2: &Operator,
    v2: &Operator,
) -> Result<(Operator, f64)> {
    if pi_bc.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "joint POVM element must be 4x4, got {}",
            pi_bc.dim()
        )));
    }
    let min = pi_bc.min_eigenvalue()?;
    if min < -1e-9 {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    let pair_ab = maximally_entangled_pair(u1, v1)?;
    let pair_cd = maximally_entangled_pair(u2, v2)?;
    let rho = kron(&pair_ab, &pair_cd); // modes A,B,C,D with index 8a+4b+2c+d
    let id2 = Operator::identity(2);
    let projector = kron(&id2, &kron(pi_bc, &id2)); // 1_A (x) Pi_BC (x) 1_D
    let weighted = rho.matmul(&projector);
    let p = weighted.trace().re;
    if p < 1e-14 {
        return Err(Error::NullOutcome(p));
    }
    let rho_ad = partial_trace(&weighted, &[2, 2, 2, 2], &[0, 3])?;
    Ok((rho_ad.scale(1.0 / p), p))
}

/// Random POVM element with spectrum spread over `[0, 1]`.
pub fn random_povm_element<R: rand::Rng>(dim: usize, rng: &mut R) -> Operator {
    let g = crate::fock::random_hermitian(dim, rng);
    let ev = g.eigenvalues_hermitian().expect("random Hermitian");
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-6);
    g.sub(&Operator::identity(dim).scale(lo)).scale(1.0 / span)
}

/// One point of a loss sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub loss: f64,
    pub m_ln: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub source: SweepSource,
    /// For simulated points, whether every repetition's solver converged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepSource {
    Theory,
    Simulated,
    External,
}

impl std::fmt::Display for SweepSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepSource::Theory => write!(f, "theory"),
            SweepSource::Simulated => write!(f, "simulated"),
            SweepSource::External => write!(f, "external"),
        }
    }
}

/// How a loss sweep evaluates each grid point.
pub enum SweepMode<'a> {
    /// Measure of the theory POVM.
    Theory,
    /// Full pipeline: simulate counts, reconstruct, truncate, measure, with
    /// bootstrap error bars over `reps` repetitions.
    Simulated {
        probes: &'a [ProbeSpec],
        shots: u64,
        reps: usize,
        seed: u64,
        opts: SolverOptions,
    },
}

/// One sweep point with the POVM element behind it.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub point: SweepPoint,
    /// The "on" element on the 6-dimensional basis (theory, or the mean over
    /// repetitions in simulated mode).
    pub on_6: Operator,
    /// Its qubit (x) qubit truncation.
    pub on_4: Operator,
}

/// Measure of the detector's "on" element as a function of the channel loss.
///
/// Grid points are independent; simulated points draw their repetitions from
/// seeds derived per point, so the output does not depend on evaluation order.
pub fn loss_sweep(
    eta1: f64,
    eta2: f64,
    grid: &[f64],
    mode: &SweepMode<'_>,
) -> Result<Vec<SweepPoint>> {
    Ok(loss_sweep_with_povms(eta1, eta2, grid, mode)?
        .into_iter()
        .map(|o| o.point)
        .collect())
}

/// [`loss_sweep`] variant that also returns the per-point POVM elements.
pub fn loss_sweep_with_povms(
    eta1: f64,
    eta2: f64,
    grid: &[f64],
    mode: &SweepMode<'_>,
) -> Result<Vec<SweepOutput>> {
    use rayon::prelude::*;

    if grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Validation(
            "loss grid values must lie in [0, 1]".into(),
        ));
    }
    let eval = |(index, &loss): (usize, &f64)| -> Result<SweepOutput> {
        let model = DetectorModel::two_detector(eta1, eta2, loss);
        match mode {
            SweepMode::Theory => {
                let pair = theory_povm(&model, 2)?;
                let on_4 = pair.on_two_qubit()?;
                let m_ln = measure_of_povm(&on_4, 2, 2)?;
                Ok(SweepOutput {
                    point: SweepPoint {
                        loss,
                        m_ln,
                        stderr: None,
                        source: SweepSource::Theory,
                        converged: None,
                    },
                    on_6: pair.on().clone(),
                    on_4,
                })
            }
            SweepMode::Simulated {
                probes,
                shots,
                reps,
                seed,
                opts,
            } => {
                let point_seed = crate::tomography::derive_seed(*seed, index as u64);
                let report = bootstrap_errors(
                    &model,
                    probes,
                    Sampling::Shots(*shots),
                    *reps,
                    point_seed,
                    opts,
                )?;
                Ok(SweepOutput {
                    point: SweepPoint {
                        loss,
                        m_ln: report.m_ln_mean,
                        stderr: Some(report.m_ln_std),
                        source: SweepSource::Simulated,
                        converged: Some(report.all_converged),
                    },
                    on_6: report.mean_on,
                    on_4: report.mean_on_4x4,
                })
            }
        }
    };
    grid.par_iter().enumerate().map(eval).collect()
}

/// Measure of the theory POVM of a detector model (qubit (x) qubit view).
pub fn theory_measure(model: &DetectorModel) -> Result<f64> {
    let pair = theory_povm(model, 2)?;
    measure_of_povm(&pair.on_two_qubit()?, 2, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{haar_unitary, truncate_to_two_qubits};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi_plus_projector() -> Operator {
        let v = bell_phi_plus();
        Operator::from_matrix(nalgebra::DMatrix::from_fn(4, 4, |i, j| v[i] * v[j].conj()))
    }

    #[test]
    fn log_negativity_of_bell_state_is_one() {
        assert_relative_eq!(
            log_negativity(&phi_plus_projector(), 2, 2).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn log_negativity_of_product_states_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_povm_element(2, &mut rng);
            let b = random_povm_element(2, &mut rng);
            let rho = kron(&a, &b);
            let tr = rho.trace().re;
            let v = log_negativity(&rho.scale(1.0 / tr), 2, 2).unwrap();
            assert!(v <= 1e-9, "product state gave {v}");
        }
    }

    #[test]
    fn log_negativity_validates_input() {
        // Maximally mixed state is fine; unnormalized identity is not.
        assert!(log_negativity(&Operator::identity(4).scale(0.25), 2, 2).is_ok());
        assert!(log_negativity(&Operator::identity(4), 2, 2).is_err());
        // Indefinite input.
        let mut m = nalgebra::DMatrix::<Complex64>::identity(4, 4) * Complex64::new(0.5, 0.0);
        m[(3, 3)] = Complex64::new(-0.5, 0.0);
        assert!(log_negativity(&Operator::from_matrix(m), 2, 2).is_err());
    }

    #[test]
    fn measure_is_scale_invariant_and_clipped() {
        let pi = phi_plus_projector();
        let a = measure_of_povm(&pi, 2, 2).unwrap();
        let b = measure_of_povm(&pi.scale(0.037), 2, 2).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert_relative_eq!(a, 1.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sep = kron(
            &random_povm_element(2, &mut rng),
            &random_povm_element(2, &mut rng),
        );
        assert_eq!(measure_of_povm(&sep, 2, 2).unwrap(), 0.0);
        assert!(matches!(
            measure_of_povm(&Operator::zeros(4), 2, 2),
            Err(Error::ZeroTrace)
        ));
    }

    #[test]
    fn ideal_swapping_creates_a_bell_pair() {
        let id = Operator::identity(2);
        let (rho_ad, p) =
            swap_remaining_state(&bell_psi_projector(true), &id, &id, &id, &id).unwrap();
        assert_relative_eq!(log_negativity(&rho_ad, 2, 2).unwrap(), 1.0, epsilon = 1e-10);
        assert!(p > 0.0 && p <= 1.0 + 1e-12);
    }

    #[test]
    fn product_projector_swaps_to_product_state() {
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(4, 4);
        m[(1, 1)] = Complex64::new(1.0, 0.0); // |0,1><0,1|
        let id = Operator::identity(2);
        let (rho_ad, _) =
            swap_remaining_state(&Operator::from_matrix(m), &id, &id, &id, &id).unwrap();
        assert_eq!(log_negativity(&rho_ad, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn swap_equivalence_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pi = random_povm_element(4, &mut rng);
            let u1 = haar_unitary(2, &mut rng);
            let v1 = haar_unitary(2, &mut rng);
            let u2 = haar_unitary(2, &mut rng);
            let v2 = haar_unitary(2, &mut rng);
            let (rho_ad, p) = swap_remaining_state(&pi, &u1, &v1, &u2, &v2).unwrap();
            assert!(p >= 0.0 && p <= 1.0 + 1e-12);
            let lhs = log_negativity(&rho_ad, 2, 2).unwrap();
            let rhs = measure_of_povm(&pi, 2, 2).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9,
                "swap law violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn swap_rejects_null_outcome() {
        let id = Operator::identity(2);
        let err = swap_remaining_state(&Operator::zeros(4), &id, &id, &id, &id);
        assert!(matches!(err, Err(Error::NullOutcome(_))));
    }

    #[test]
    fn theory_sweep_anchors() {
        let points = loss_sweep(0.2, 0.2, &[0.0, 0.5, 1.0], &SweepMode::Theory).unwrap();
        assert_eq!(points[0].m_ln, 0.0);
        assert!(points[2].m_ln > points[1].m_ln && points[1].m_ln > 0.0);
        // Blocked arm: log2 of ((eta + sqrt(pi11^2 + eta^2)) / (eta + pi11))
        // with pi11 = eta (1 - eta/2).
        let eta: f64 = 0.2;
        let pi11 = eta * (1.0 - eta / 2.0);
        let expect = ((eta + (pi11 * pi11 + eta * eta).sqrt()) / (eta + pi11)).log2();
        assert_relative_eq!(points[2].m_ln, expect, epsilon = 1e-12);
    }

    #[test]
    fn measure_transpose_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let pi = random_povm_element(4, &mut rng);
            let a = measure_of_povm(&pi, 2, 2).unwrap();
            let b = measure_of_povm(&pi.transpose(), 2, 2).unwrap();
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn measure_local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let pi = random_povm_element(4, &mut rng);
            let u = haar_unitary(2, &mut rng);
            let v = haar_unitary(2, &mut rng);
            let uv = kron(&u, &v);
            let rotated = uv.matmul(&pi).matmul(&uv.adjoint());
            let a = measure_of_povm(&pi, 2, 2).unwrap();
            let b = measure_of_povm(&rotated, 2, 2).unwrap();
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn blocked_arm_measure_value() {
        // Numeric anchor for the blocked-arm setting at eta = 0.2.
        let model = DetectorModel::two_detector(0.2, 0.2, 1.0);
        let pair = theory_povm(&model, 2).unwrap();
        let m = measure_of_povm(&truncate_to_two_qubits(pair.on()).unwrap(), 2, 2).unwrap();
        assert!((m - 0.3038).abs() < 1e-3, "got {m}");
    }
}
