//! Coherent-state probe sets for detector tomography.
//!
//! Two sets are provided: the minimal phase-grid set (one probe per point of
//! a level/amplitude/phase grid, just enough to determine every POVM element
//! of a global-phase-insensitive detector) and the 19-probe experimental set
//! defined by its wave-plate settings.

use serde::{Deserialize, Serialize};

use crate::fock::coherent_state;
use crate::optics::{waveplates_to_probe, WavePlateSetting};
use crate::tomography::forward_map;
use crate::{Error, Result};

/// Squared-norm floor for probes at their truncation order.
pub const MIN_PROBE_NORM_SQR: f64 = 0.99;

/// Relative singular-value threshold for numerical rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// One coherent-state probe `|alpha, beta e^{i delta}>`.
///
/// `delta_deg` is the relative phase in degrees, absent exactly when one of
/// the amplitudes vanishes (a single-mode or vacuum probe has no relative
/// phase).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub id: String,
    pub alpha: f64,
    pub beta: f64,
    pub delta_deg: Option<f64>,
    pub power: f64,
}

impl ProbeSpec {
    pub fn new(
        id: impl Into<String>,
        alpha: f64,
        beta: f64,
        delta_deg: Option<f64>,
        power: f64,
    ) -> Result<Self> {
        let probe = ProbeSpec {
            id: id.into(),
            alpha,
            beta,
            delta_deg,
            power,
        };
        probe.validate()?;
        Ok(probe)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0)
            || !(self.beta >= 0.0)
            || !self.alpha.is_finite()
            || !self.beta.is_finite()
        {
            return Err(Error::InvalidProbe(format!(
                "probe {}: amplitudes must be finite and non-negative",
                self.id
            )));
        }
        let p = self.alpha * self.alpha + self.beta * self.beta;
        if (p - self.power).abs() > 1e-9 {
            return Err(Error::InvalidProbe(format!(
                "probe {}: alpha^2 + beta^2 = {} deviates from power {}",
                self.id, p, self.power
            )));
        }
        let single_mode = self.alpha == 0.0 || self.beta == 0.0;
        match (single_mode, self.delta_deg) {
            (true, Some(_)) => Err(Error::InvalidProbe(format!(
                "probe {}: relative phase given for a single-mode probe",
                self.id
            ))),
            (false, None) => Err(Error::InvalidProbe(format!(
                "probe {}: relative phase missing for a two-mode probe",
                self.id
            ))),
            _ => Ok(()),
        }
    }

    pub fn delta_rad(&self) -> Option<f64> {
        self.delta_deg.map(f64::to_radians)
    }

    /// Squared norm of the probe truncated at order `n_max`.
    pub fn truncated_norm_sqr(&self, n_max: u32) -> f64 {
        coherent_state(self.alpha, self.beta, 0.0, n_max).norm_sqr()
    }
}

/// One point of the minimal probe grid: level `s`, amplitude index `v`, phase
/// index `m`, with implied relative phase `delta = 2 pi m / (2s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseGridPoint {
    pub s: u32,
    pub v: u32,
    pub m: u32,
}

impl PhaseGridPoint {
    pub fn delta_rad(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.m as f64 / (2 * self.s + 1) as f64
    }

    pub fn probe_id(&self) -> String {
        format!("s{}v{}m{}", self.s, self.v, self.m)
    }
}

/// Grid points of the minimal set for truncation order `n_max`, in
/// `(s, v, m)` lexicographic order.
pub fn minimal_grid(n_max: u32) -> Vec<PhaseGridPoint> {
    let mut grid = Vec::new();
    for s in 0..=n_max {
        for v in 0..=(n_max - s) {
            for m in 0..=(2 * s) {
                grid.push(PhaseGridPoint { s, v, m });
            }
        }
    }
    grid
}

/// Amplitude pairs `(alpha, beta)` for every `(s, v)` grid position.
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    n_max: u32,
    pairs: Vec<Vec<(f64, f64)>>,
}

impl AmplitudeTable {
    pub fn from_pairs(n_max: u32, pairs: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if pairs.len() != (n_max + 1) as usize {
            return Err(Error::InvalidProbe(format!(
                "amplitude table must have {} levels, got {}",
                n_max + 1,
                pairs.len()
            )));
        }
        for (s, level) in pairs.iter().enumerate() {
            let want = (n_max as usize - s) + 1;
            if level.len() != want {
                return Err(Error::InvalidProbe(format!(
                    "level s = {s} must have {want} amplitude pairs, got {}",
                    level.len()
                )));
            }
        }
        Ok(AmplitudeTable { n_max, pairs })
    }

    /// Default amplitudes following the published powers: the top level splits
    /// `P1` evenly, intermediate levels split `P2 = P1/4` in odd ratios
    /// `(2v+1) : (2(N-s+1)-2v-1)`, and level zero uses the vacuum plus
    /// alternating single-mode probes. `P1` is 0.20 for `N >= 2` and halved
    /// below so every probe keeps a squared norm of at least 0.99 at the
    /// truncation.
    pub fn paper_defaults(n_max: u32) -> Self {
        let p1: f64 = if n_max >= 2 { 0.2 } else { 0.1 };
        let p2 = p1 / 4.0;
        let mut pairs = Vec::new();
        for s in 0..=n_max {
            let k = (n_max - s) as usize + 1;
            let level: Vec<(f64, f64)> = if s == 0 {
                (0..k)
                    .map(|i| {
                        if i == 0 {
                            (0.0, 0.0)
                        } else {
                            // Alternate H and V, quartering the power every
                            // second pair beyond the first two.
                            let p = p1 / 4f64.powi(((i - 1) / 2) as i32);
                            if i % 2 == 1 {
                                (p.sqrt(), 0.0)
                            } else {
                                (0.0, p.sqrt())
                            }
                        }
                    })
                    .collect()
            } else {
                let p = if s == n_max { p1 } else { p2 };
                (0..k)
                    .map(|v| {
                        let f = (2 * v + 1) as f64 / (2 * k) as f64;
                        ((p * f).sqrt(), (p * (1.0 - f)).sqrt())
                    })
                    .collect()
            };
            pairs.push(level);
        }
        AmplitudeTable { n_max, pairs }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn get(&self, s: u32, v: u32) -> Result<(f64, f64)> {
        self.pairs
            .get(s as usize)
            .and_then(|level| level.get(v as usize))
            .copied()
            .ok_or_else(|| {
                Error::InvalidProbe(format!("amplitude table has no entry for (s={s}, v={v})"))
            })
    }
}

/// Builds the minimal probe set for truncation order `n_max` from an
/// amplitude table: `sum_s (N-s+1)(2s+1)` probes, 14 for `N = 2`.
///
/// Every amplitude pair must keep a truncated squared norm of at least
/// [`MIN_PROBE_NORM_SQR`], and single-mode pairs are only allowed at level
/// zero where no relative phase is needed.
pub fn minimal_probe_set(n_max: u32, table: &AmplitudeTable) -> Result<Vec<ProbeSpec>> {
    if table.n_max() != n_max {
        return Err(Error::InvalidProbe(format!(
            "amplitude table is for N = {}, requested N = {}",
            table.n_max(),
            n_max
        )));
    }
    let mut probes = Vec::new();
    for point in minimal_grid(n_max) {
        let (alpha, beta) = table.get(point.s, point.v)?;
        let single_mode = alpha == 0.0 || beta == 0.0;
        if single_mode && point.s > 0 {
            return Err(Error::InvalidProbe(format!(
                "single-mode amplitudes at level s = {} cannot span {} phases",
                point.s,
                2 * point.s + 1
            )));
        }
        let power = alpha * alpha + beta * beta;
        let norm_sqr = coherent_state(alpha, beta, 0.0, n_max).norm_sqr();
        if norm_sqr < MIN_PROBE_NORM_SQR {
            return Err(Error::InvalidProbe(format!(
                "probe {} has truncated squared norm {norm_sqr:.6} < {MIN_PROBE_NORM_SQR}",
                point.probe_id()
            )));
        }
        let delta_deg = if single_mode {
            None
        } else {
            Some(point.delta_rad().to_degrees())
        };
        probes.push(ProbeSpec::new(
            point.probe_id(),
            alpha,
            beta,
            delta_deg,
            power,
        )?);
    }
    Ok(probes)
}

/// Wave-plate settings of the first 18 experimental probes:
/// `(P, theta_Q, theta_H)` in photons per wave packet and degrees. The 19th
/// probe is the vacuum.
pub const EXPERIMENTAL_SETTINGS: [(f64, f64, f64); 18] = [
    (0.20, -22.5, -33.75),
    (0.20, -45.0, -22.5),
    (0.20, -22.5, 11.25),
    (0.20, 0.0, 22.5),
    (0.20, 22.5, 33.75),
    (0.20, 45.0, 22.5),
    (0.20, 22.5, -11.25),
    (0.20, 0.0, -22.5),
    (0.20, 0.0, 0.0),
    (0.20, 0.0, 45.0),
    (0.05, -30.0, -15.0),
    (0.05, 0.0, 15.0),
    (0.05, 30.0, 15.0),
    (0.05, 0.0, -15.0),
    (0.05, -30.0, 30.0),
    (0.05, 0.0, 30.0),
    (0.05, 30.0, -30.0),
    (0.05, 0.0, -30.0),
];

/// The 19-probe experimental set, derived from [`EXPERIMENTAL_SETTINGS`] via
/// the wave-plate Jones calculus, plus the vacuum probe. Probe ids are
/// `p01`..`p19`.
pub fn experimental_probe_set() -> Vec<ProbeSpec> {
    let mut probes: Vec<ProbeSpec> = EXPERIMENTAL_SETTINGS
        .iter()
        .enumerate()
        .map(|(i, &(power, theta_q_deg, theta_h_deg))| {
            waveplates_to_probe(
                format!("p{:02}", i + 1),
                &WavePlateSetting {
                    theta_q_deg,
                    theta_h_deg,
                    power,
                },
            )
            .expect("fixed settings are valid")
        })
        .collect();
    probes.push(ProbeSpec::new("p19", 0.0, 0.0, None, 0.0).expect("vacuum probe is valid"));
    probes
}

/// Versioned bundled copy of the experimental probe set, in the probe-file
/// format (a JSON array of probes).
pub const PAPER19_ASSET: &str = include_str!("../assets/probes_paper19_v1.json");

/// Conditioning diagnostics of the tomography forward map for a probe set.
#[derive(Debug, Clone, Serialize)]
pub struct ConditioningReport {
    pub probe_count: usize,
    pub n_max: u32,
    /// Number of real parameters of a Hermitian POVM element with
    /// global-phase structural zeros.
    pub param_count: usize,
    /// Numerical rank at threshold [`RANK_THRESHOLD`] relative to the largest
    /// singular value.
    pub rank: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rank_deficient: bool,
}

impl std::fmt::Display for ConditioningReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} probes at N = {}: rank {}/{} (sigma_max = {:.3e}, sigma_min = {:.3e}){}",
            self.probe_count,
            self.n_max,
            self.rank,
            self.param_count,
            self.sigma_max,
            self.sigma_min,
            if self.rank_deficient {
                " RANK DEFICIENT"
            } else {
                ""
            }
        )
    }
}

/// Rank and extreme singular values of the forward map restricted to the
/// global-phase-allowed parameter space.
pub fn conditioning_report(probes: &[ProbeSpec], n_max: u32) -> Result<ConditioningReport> {
    if probes.is_empty() {
        return Err(Error::InvalidProbe("empty probe list".into()));
    }
    let map = forward_map(probes, n_max);
    let mut sv = map.singular_values();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_THRESHOLD * sigma_max).count();
    Ok(ConditioningReport {
        probe_count: probes.len(),
        n_max,
        param_count: map.param_count(),
        rank,
        sigma_max,
        sigma_min: sv.last().copied().unwrap_or(0.0),
        rank_deficient: rank < map.param_count(),
    })
}

/// Parses a probe file (JSON array of probes) and validates every entry.
pub fn probes_from_json(text: &str) -> Result<Vec<ProbeSpec>> {
    let probes: Vec<ProbeSpec> = serde_json::from_str(text).map_err(|e| Error::Json {
        path: "<probe data>".into(),
        source: e,
    })?;
    for p in &probes {
        p.validate()?;
    }
    Ok(probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn probe_spec_validation() {
        assert!(ProbeSpec::new("a", 0.3, 0.4, Some(10.0), 0.25).is_ok());
        // Power inconsistency.
        assert!(ProbeSpec::new("a", 0.3, 0.4, Some(10.0), 0.3).is_err());
        // Phase on a single-mode probe.
        assert!(ProbeSpec::new("a", 0.5, 0.0, Some(10.0), 0.25).is_err());
        // Missing phase on a two-mode probe.
        assert!(ProbeSpec::new("a", 0.3, 0.4, None, 0.25).is_err());
        // Negative amplitude.
        assert!(ProbeSpec::new("a", -0.3, 0.4, Some(0.0), 0.25).is_err());
    }

    #[test]
    fn minimal_set_sizes() {
        for (n, want) in [(0u32, 1usize), (1, 5), (2, 14), (3, 30), (4, 55)] {
            let probes = minimal_probe_set(n, &AmplitudeTable::paper_defaults(n)).unwrap();
            assert_eq!(probes.len(), want, "N = {n}");
            let formula: usize = (0..=n)
                .map(|s| ((n - s + 1) * (2 * s + 1)) as usize)
                .sum();
            assert_eq!(probes.len(), formula);
        }
    }

    #[test]
    fn minimal_set_n2_uses_paper_powers() {
        let probes = minimal_probe_set(2, &AmplitudeTable::paper_defaults(2)).unwrap();
        // Level 2: one amplitude pair, five phases, even split of P = 0.2.
        let s2: Vec<_> = probes.iter().filter(|p| p.id.starts_with("s2")).collect();
        assert_eq!(s2.len(), 5);
        for p in &s2 {
            assert_relative_eq!(p.alpha, 0.1_f64.sqrt(), epsilon = 1e-12);
            assert_relative_eq!(p.beta, 0.1_f64.sqrt(), epsilon = 1e-12);
        }
        // Level 1: two pairs splitting P = 0.05 as 1:3 and 3:1, three phases.
        let s1v0: Vec<_> = probes.iter().filter(|p| p.id.starts_with("s1v0")).collect();
        assert_eq!(s1v0.len(), 3);
        assert_relative_eq!(s1v0[0].alpha, (0.05_f64 / 4.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s1v0[0].beta, (3.0_f64 * 0.05 / 4.0).sqrt(), epsilon = 1e-12);
        // Level 0: vacuum and the two single-mode probes.
        assert!(probes.iter().any(|p| p.id == "s0v0m0" && p.power == 0.0));
        assert!(probes
            .iter()
            .any(|p| p.id == "s0v1m0" && p.beta == 0.0 && (p.alpha - 0.2_f64.sqrt()).abs() < 1e-12));
        assert!(probes
            .iter()
            .any(|p| p.id == "s0v2m0" && p.alpha == 0.0 && (p.beta - 0.2_f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn minimal_set_norms_are_kept() {
        for n in 0..=4 {
            for p in minimal_probe_set(n, &AmplitudeTable::paper_defaults(n)).unwrap() {
                assert!(p.truncated_norm_sqr(n) >= MIN_PROBE_NORM_SQR);
            }
        }
    }

    #[test]
    fn minimal_set_rejects_norm_deficit() {
        // A power of 2 photons cannot be truncated at N = 0.
        let table = AmplitudeTable::from_pairs(0, vec![vec![(2.0_f64.sqrt(), 0.0)]]).unwrap();
        assert!(minimal_probe_set(0, &table).is_err());
    }

    #[test]
    fn experimental_set_matches_reference_table() {
        let probes = experimental_probe_set();
        assert_eq!(probes.len(), 19);

        // (row, alpha, beta, delta_deg or None), three-decimal amplitudes.
        let expect: [(usize, f64, f64, Option<f64>); 19] = [
            (0, 0.316, 0.316, Some(-135.0)),
            (1, 0.316, 0.316, Some(-90.0)),
            (2, 0.316, 0.316, Some(-45.0)),
            (3, 0.316, 0.316, Some(0.0)),
            (4, 0.316, 0.316, Some(45.0)),
            (5, 0.316, 0.316, Some(90.0)),
            (6, 0.316, 0.316, Some(135.0)),
            (7, 0.316, 0.316, Some(180.0)),
            (8, 0.447, 0.0, None),
            (9, 0.0, 0.447, None),
            (10, 0.194, 0.112, Some(-90.0)),
            (11, 0.194, 0.112, Some(0.0)),
            (12, 0.194, 0.112, Some(90.0)),
            (13, 0.194, 0.112, Some(180.0)),
            (14, 0.112, 0.194, Some(-90.0)),
            (15, 0.112, 0.194, Some(0.0)),
            (16, 0.112, 0.194, Some(90.0)),
            (17, 0.112, 0.194, Some(180.0)),
            (18, 0.0, 0.0, None),
        ];
        for (row, a, b, d) in expect {
            let p = &probes[row];
            assert!((p.alpha - a).abs() < 5e-4, "row {row} alpha {} vs {a}", p.alpha);
            assert!((p.beta - b).abs() < 5e-4, "row {row} beta {} vs {b}", p.beta);
            match (p.delta_deg, d) {
                (None, None) => {}
                (Some(got), Some(want)) => {
                    assert!((got - want).abs() < 1e-9, "row {row} delta {got} vs {want}")
                }
                other => panic!("row {row} delta mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn experimental_set_powers_are_exact() {
        for p in experimental_probe_set() {
            assert!(
                [0.0, 0.05, 0.20].contains(&p.power),
                "unexpected power {}",
                p.power
            );
            assert!((p.alpha.powi(2) + p.beta.powi(2) - p.power).abs() <= 1e-9);
            assert!(p.truncated_norm_sqr(2) >= MIN_PROBE_NORM_SQR);
        }
    }

    #[test]
    fn bundled_asset_matches_computed_set() {
        let bundled = probes_from_json(PAPER19_ASSET).unwrap();
        let computed = experimental_probe_set();
        assert_eq!(bundled.len(), computed.len());
        for (b, c) in bundled.iter().zip(computed.iter()) {
            assert_eq!(b.id, c.id);
            assert!((b.alpha - c.alpha).abs() < 1e-12);
            assert!((b.beta - c.beta).abs() < 1e-12);
            assert_eq!(b.power, c.power);
            match (b.delta_deg, c.delta_deg) {
                (None, None) => {}
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
                other => panic!("delta mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn conditioning_of_the_standard_sets() {
        let report = conditioning_report(&experimental_probe_set(), 2).unwrap();
        assert_eq!(report.param_count, 14);
        assert_eq!(report.rank, 14);
        assert!(!report.rank_deficient);

        let minimal = minimal_probe_set(2, &AmplitudeTable::paper_defaults(2)).unwrap();
        let report = conditioning_report(&minimal, 2).unwrap();
        assert_eq!(report.rank, 14);

        // Repeating one probe adds no information.
        let one = ProbeSpec::new("dup", 0.3, 0.3, Some(30.0), 0.18).unwrap();
        let dups: Vec<ProbeSpec> = (0..14)
            .map(|i| {
                let mut p = one.clone();
                p.id = format!("dup{i}");
                p
            })
            .collect();
        let report = conditioning_report(&dups, 2).unwrap();
        assert_eq!(report.rank, 1);
        assert!(report.rank_deficient);

        assert!(conditioning_report(&[], 2).is_err());
    }
}
