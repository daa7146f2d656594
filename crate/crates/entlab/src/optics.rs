//! Physical model of the probe-preparation optics and the two-mode detector.
//!
//! The probe side is plain Jones calculus: a quarter- and a half-wave plate
//! acting on a horizontally polarized beam of known power produce an arbitrary
//! two-mode coherent state `|alpha, beta e^{i delta}>`.
//!
//! The detector side models the chain HWP0 -> PBS -> {loss L on arm 2} -> two
//! on/off click detectors (efficiencies eta1, eta2) whose signals are OR-ed.
//! The no-click POVM element factorizes over the arms, so
//! `Pi_off = U^dag (Pi_off(eta1) (x) Pi_off(eta2 (1-L))) U` with `U` the
//! Fock-space unitary of HWP0, and `Pi_on = 1 - Pi_off`. The PBS itself is
//! ideal: it only relabels polarization modes to arms, and every non-ideality
//! lives in `eta1`, `eta2` and `L`. Loss is folded into arm 2 as an effective
//! efficiency, which is exact for on/off detectors.
//!
//! Without a PBS the same formulas describe a single polarization-sensitive
//! detector; `eta2` is then the efficiency for the orthogonal polarization and
//! `L` must be zero.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::fock::{
    self, coherent_state, make_basis, BasisLabel, FockBasis, Operator, HERM_TOL, PSD_TOL,
};
use crate::probes::ProbeSpec;
use crate::{Complex64, Error, Result};

/// 2x2 complex Jones matrix acting on the (H, V) field amplitudes.
pub type JonesMatrix = Matrix2<Complex64>;

/// Wave-plate angles and optical power defining one probe preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePlateSetting {
    /// QWP azimuth in degrees.
    pub theta_q_deg: f64,
    /// HWP azimuth in degrees.
    pub theta_h_deg: f64,
    /// Mean photons per wave packet; must be non-negative.
    pub power: f64,
}

/// Physical parameters of the simulated two-mode detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Quantum efficiency of the detector on the transmitted arm.
    pub eta1: f64,
    /// Quantum efficiency of the detector on the second arm (or, without a
    /// PBS, for the orthogonal polarization).
    pub eta2: f64,
    /// Loss inserted in the second arm, in `[0, 1]`.
    pub loss: f64,
    /// HWP0 azimuth in degrees.
    #[serde(default = "default_hwp0")]
    pub hwp0_deg: f64,
    /// Whether the polarizing beam splitter is present.
    #[serde(rename = "pbs")]
    pub pbs_present: bool,
}

fn default_hwp0() -> f64 {
    22.5
}

impl DetectorModel {
    /// Two-detector configuration with HWP0 at 22.5 degrees.
    pub fn two_detector(eta1: f64, eta2: f64, loss: f64) -> Self {
        DetectorModel {
            eta1,
            eta2,
            loss,
            hwp0_deg: default_hwp0(),
            pbs_present: true,
        }
    }

    /// Single polarization-sensitive detector (no PBS): `eta2` is the
    /// efficiency for the orthogonal polarization.
    pub fn single_detector(eta1: f64, eta2: f64) -> Self {
        DetectorModel {
            eta1,
            eta2,
            loss: 0.0,
            hwp0_deg: default_hwp0(),
            pbs_present: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta1", self.eta1), ("eta2", self.eta2), ("loss", self.loss)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !self.hwp0_deg.is_finite() {
            return Err(Error::InvalidModel("hwp0_deg is not finite".into()));
        }
        if !self.pbs_present && self.loss != 0.0 {
            return Err(Error::InvalidModel(
                "without a PBS the loss parameter must be 0".into(),
            ));
        }
        Ok(())
    }

    /// Effective efficiency of the second arm with the loss folded in.
    pub fn eta2_effective(&self) -> f64 {
        self.eta2 * (1.0 - self.loss)
    }
}

/// Pair of on/off POVM elements with completeness built in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmPair {
    on: Operator,
    off: Operator,
    n_max: u32,
}

impl PovmPair {
    /// Builds the pair from the "on" element on the `N`-truncated two-mode
    /// basis. `Pi_off = 1 - Pi_on` by construction; Hermiticity, both spectral
    /// bounds and the global-phase structural zeros are validated.
    pub fn from_on(on: Operator, n_max: u32) -> Result<Self> {
        let basis = make_basis(n_max);
        if on.dim() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "POVM dimension {} does not match basis size {} for N = {}",
                on.dim(),
                basis.len(),
                n_max
            )));
        }
        let on = on.with_labels(Some(basis.labels().to_vec()));
        validate_two_mode_element(&on, &basis)?;
        let off = Operator::identity_on(&basis).sub(&on);
        Ok(PovmPair { on, off, n_max })
    }

    /// Rebuilds a pair from both elements, checking completeness entrywise.
    pub fn from_parts(on: Operator, off: Operator, n_max: u32) -> Result<Self> {
        if on.dim() != off.dim() {
            return Err(Error::DimensionMismatch(format!(
                "on has dimension {}, off has dimension {}",
                on.dim(),
                off.dim()
            )));
        }
        let sum = on.add(&off);
        let dev = sum
            .mat()
            .iter()
            .zip(DMatrix::<Complex64>::identity(on.dim(), on.dim()).iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::Validation(format!(
                "on + off deviates from identity by {dev:.3e}"
            )));
        }
        PovmPair::from_on(on, n_max)
    }

    pub fn on(&self) -> &Operator {
        &self.on
    }

    pub fn off(&self) -> &Operator {
        &self.off
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Qubit (x) qubit view of the "on" element.
    pub fn on_two_qubit(&self) -> Result<Operator> {
        fock::truncate_to_two_qubits(&self.on)
    }
}

/// Validates one two-mode POVM element: Hermitian within [`HERM_TOL`],
/// spectrum in `[-PSD_TOL, 1 + PSD_TOL]`, and zero entries between different
/// total photon numbers (within [`HERM_TOL`]).
fn validate_two_mode_element(on: &Operator, basis: &FockBasis) -> Result<()> {
    let dev = on.hermiticity_deviation();
    if dev > HERM_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    for (i, li) in basis.labels().iter().enumerate() {
        for (j, lj) in basis.labels().iter().enumerate() {
            if li.total() != lj.total() && on.entry(i, j).norm() > HERM_TOL {
                return Err(Error::Validation(format!(
                    "global-phase structural zero violated at ({},{}) -> ({},{}): |entry| = {:.3e}",
                    li.n_h,
                    li.n_v,
                    lj.n_h,
                    lj.n_v,
                    on.entry(i, j).norm()
                )));
            }
        }
    }
    let ev = on.eigenvalues_hermitian()?;
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min < -PSD_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    if max > 1.0 + PSD_TOL {
        return Err(Error::Validation(format!(
            "POVM element exceeds identity: max eigenvalue = {max}"
        )));
    }
    Ok(())
}

/// Jones matrix of an ideal half-wave plate with fast axis at `theta` degrees:
/// `[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`.
pub fn jones_hwp(theta_deg: f64) -> JonesMatrix {
    let t = 2.0 * theta_deg.to_radians();
    let (s, c) = (t.sin(), t.cos());
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-c, 0.0),
    )
}

/// Jones matrix of an ideal quarter-wave plate with fast axis at `theta`
/// degrees: `(1/sqrt(2)) [[1 - i cos 2t, -i sin 2t], [-i sin 2t, 1 + i cos 2t]]`.
pub fn jones_qwp(theta_deg: f64) -> JonesMatrix {
    let t = 2.0 * theta_deg.to_radians();
    let (s, c) = (t.sin(), t.cos());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Matrix2::new(
        Complex64::new(1.0, -c) * r,
        Complex64::new(0.0, -s) * r,
        Complex64::new(0.0, -s) * r,
        Complex64::new(1.0, c) * r,
    )
}

/// Converts a wave-plate setting to the coherent-state probe it prepares.
///
/// The two complex output amplitudes are computed from the full Jones product
/// `U_HWP(theta_H) U_QWP(theta_Q) (sqrt(P), 0)`, so the relative phase
/// `delta = arg(beta) - arg(alpha)` carries the correct quadrant, which the
/// scalar `tan(delta)` formula would lose. `delta` is reported in degrees in
/// `(-180, 180]` and is absent when either amplitude vanishes.
pub fn waveplates_to_probe(id: impl Into<String>, setting: &WavePlateSetting) -> Result<ProbeSpec> {
    if !(setting.power >= 0.0) || !setting.power.is_finite() {
        return Err(Error::InvalidProbe(format!(
            "power must be non-negative, got {}",
            setting.power
        )));
    }
    let input = Vector2::new(
        Complex64::new(setting.power.sqrt(), 0.0),
        Complex64::new(0.0, 0.0),
    );
    let out = jones_hwp(setting.theta_h_deg) * jones_qwp(setting.theta_q_deg) * input;
    let (a, b) = (out[0], out[1]);
    let (alpha, beta) = (a.norm(), b.norm());

    let tol = 1e-12 * setting.power.sqrt().max(1.0);
    let delta_deg = if alpha <= tol || beta <= tol {
        None
    } else {
        let mut d = (b * a.conj()).arg();
        // Canonicalize to (-pi, pi]: atan2 can land on -pi.
        if d <= -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        Some(d.to_degrees())
    };
    // Amplitudes below the tolerance are exact zeros of the preparation.
    let (alpha, beta) = (
        if alpha <= tol { 0.0 } else { alpha },
        if beta <= tol { 0.0 } else { beta },
    );
    ProbeSpec::new(id, alpha, beta, delta_deg, setting.power)
}

/// Second-quantizes a 2x2 mode unitary onto the `N`-truncated two-mode Fock
/// space via the creation-operator substitution
/// `a_H^dag -> u11 a_H^dag + u21 a_V^dag`, `a_V^dag -> u12 a_H^dag + u22 a_V^dag`.
///
/// The result is unitary, block diagonal in total photon number, and maps a
/// coherent state to the coherent state of the transformed amplitudes.
pub fn mode_unitary_to_fock(u: &JonesMatrix, n_max: u32) -> Result<Operator> {
    let dev = (u.adjoint() * u - Matrix2::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }

    let basis = make_basis(n_max);
    let d = basis.len();
    let mut mat = DMatrix::<Complex64>::zeros(d, d);
    let fact = |n: u32| -> f64 { (1..=n).map(|k| k as f64).product() };
    let binom = |n: u32, k: u32| -> f64 { fact(n) / (fact(k) * fact(n - k)) };

    for (col, src) in basis.labels().iter().enumerate() {
        let (nh, nv) = (src.n_h, src.n_v);
        let norm_src = (fact(nh) * fact(nv)).sqrt();
        for j in 0..=nh {
            for jp in 0..=nv {
                let k = j + jp;
                let l = nh + nv - k;
                let row = basis.index_of(k, l).expect("within truncation");
                let amp = u[(0, 0)].powu(j)
                    * u[(1, 0)].powu(nh - j)
                    * u[(0, 1)].powu(jp)
                    * u[(1, 1)].powu(nv - jp)
                    * Complex64::new(
                        binom(nh, j) * binom(nv, jp) * (fact(k) * fact(l)).sqrt() / norm_src,
                        0.0,
                    );
                mat[(row, col)] += amp;
            }
        }
    }
    Ok(Operator::from_matrix_labeled(mat, basis.labels().to_vec()))
}

/// On/off POVM of a single-mode click detector with efficiency `eta`:
/// `Pi_off = sum_n (1-eta)^n |n><n|` on the `(N+1)`-dimensional number basis.
/// Returns `(Pi_on, Pi_off)`, both diagonal.
pub fn onoff_povm_single_mode(eta: f64, n_max: u32) -> Result<(Operator, Operator)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidModel(format!("eta = {eta} outside [0, 1]")));
    }
    let d = (n_max + 1) as usize;
    let off = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new((1.0 - eta).powi(i as i32), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let on = DMatrix::identity(d, d) - &off;
    Ok((Operator::from_matrix(on), Operator::from_matrix(off)))
}

/// Theory POVM of the full detector on the `N`-truncated two-mode space.
///
/// No-click operators of the two arms are diagonal in the arm photon numbers,
/// so on the truncated basis `Pi_off` is the HWP0-conjugated diagonal
/// `(1-eta1)^nH (1-eta2(1-L))^nV`.
pub fn theory_povm(model: &DetectorModel, n_max: u32) -> Result<PovmPair> {
    model.validate()?;
    let basis = make_basis(n_max);
    let eta2_eff = model.eta2_effective();
    let diag = DMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        if i == j {
            let BasisLabel { n_h, n_v } = basis.label(i);
            Complex64::new(
                (1.0 - model.eta1).powi(n_h as i32) * (1.0 - eta2_eff).powi(n_v as i32),
                0.0,
            )
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let u = mode_unitary_to_fock(&jones_hwp(model.hwp0_deg), n_max)?;
    let off = u.adjoint().matmul(&Operator::from_matrix(diag)).matmul(&u);
    let on = Operator::identity(basis.len()).sub(&off);
    PovmPair::from_on(on, n_max)
}

/// Click probability `<psi| Pi_on |psi>` of a coherent-state probe, evaluated
/// at the POVM's truncation order.
///
/// Values straying outside `[0, 1]` by more than `1e-9` signal an inconsistent
/// POVM and are reported as an error; smaller excursions are clamped.
pub fn detection_probability(probe: &ProbeSpec, povm: &PovmPair) -> Result<f64> {
    let psi = coherent_state(
        probe.alpha,
        probe.beta,
        probe.delta_rad().unwrap_or(0.0),
        povm.n_max(),
    );
    let p = psi.expectation(povm.on()).re;
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}
