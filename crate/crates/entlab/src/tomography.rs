//! POVM reconstruction from coherent-state click statistics.
//!
//! Two independent solvers recover the 6x6 "on" element of a global-phase
//! insensitive detector at truncation `N = 2`:
//!
//! * [`reconstruct_convex`] solves the constrained least-squares problem
//!   `min sum_i (p_i - <psi_i| Pi |psi_i>)^2` over Hermitian `Pi` with
//!   structural zeros, subject to `0 <= Pi <= 1`, by projected gradient with
//!   spectral clipping. The iteration is warm-started from the unconstrained
//!   least-squares solution, so exact (noiseless) inputs converge at once.
//! * [`reconstruct_analytic`] runs the sequential phase-peeling solution on
//!   the minimal probe grid: for `t = N` down to `0`, discrete phase averages
//!   isolate the POVM elements whose index difference is `t`, aliased
//!   contributions from already-solved elements are subtracted, and the
//!   remaining square linear system is solved. No positivity constraint is
//!   applied, so on exact data it inverts the forward model identically.
//!
//! Counts are simulated as binomial draws of the theory click probability,
//! reproducible from a master seed via a SplitMix64 counter derivation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::fock::{coherent_state, make_basis, Operator};
use crate::optics::{detection_probability, theory_povm, DetectorModel, PovmPair};
use crate::probes::{AmplitudeTable, PhaseGridPoint, ProbeSpec, RANK_THRESHOLD};
use crate::{Complex64, Error, Result};

/// Shots and on-counts recorded for one probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub probe_id: String,
    pub shots: u64,
    pub on_count: u64,
}

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidCounts(format!(
                "probe {}: shots must be positive",
                self.probe_id
            )));
        }
        if self.on_count > self.shots {
            return Err(Error::InvalidCounts(format!(
                "probe {}: on_count {} exceeds shots {}",
                self.probe_id, self.on_count, self.shots
            )));
        }
        Ok(())
    }

    pub fn frequency(&self) -> f64 {
        self.on_count as f64 / self.shots as f64
    }
}

/// SplitMix64-derived sub-seed for repetition or grid-point `counter`.
///
/// Stages that need nested streams (a sweep of bootstraps, say) derive a
/// per-stage master first and split again; the composition stays collision
/// free for practical purposes and is independent of evaluation order.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master
        .wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one simulation run.
pub fn run_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact click probabilities of a detector model for a probe list, at `N = 2`.
pub fn exact_probabilities(model: &DetectorModel, probes: &[ProbeSpec]) -> Result<Vec<f64>> {
    let povm = theory_povm(model, 2)?;
    probes
        .iter()
        .map(|p| detection_probability(p, &povm))
        .collect()
}

/// Simulates one tomography run: per probe, `on_count ~ Binomial(shots, p)`
/// with `p` the exact click probability at `N = 2`. Deterministic given the
/// seed.
pub fn simulate_counts(
    model: &DetectorModel,
    probes: &[ProbeSpec],
    shots: u64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if shots == 0 {
        return Err(Error::Validation("shots must be positive".into()));
    }
    let ps = exact_probabilities(model, probes)?;
    let mut rng = run_rng(seed);
    probes
        .iter()
        .zip(ps)
        .map(|(probe, p)| {
            let dist = Binomial::new(shots, p)
                .map_err(|e| Error::Validation(format!("binomial parameters: {e}")))?;
            Ok(CountRecord {
                probe_id: probe.id.clone(),
                shots,
                on_count: dist.sample(&mut rng),
            })
        })
        .collect()
}

// --- forward map ---------------------------------------------------------------

/// One real parameter of a Hermitian operator with global-phase structural
/// zeros: a diagonal entry, or the real or imaginary part of an off-diagonal
/// entry within a photon-number block (scaled so the basis is orthonormal
/// under the Frobenius inner product).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamOp {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

/// Real linear map from the POVM parameters to probe click probabilities.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    n_max: u32,
    ops: Vec<ParamOp>,
    matrix: DMatrix<f64>,
}

/// Parameter layout for truncation order `n_max`: all diagonal entries in
/// basis order, then `(Re, Im)` per off-diagonal pair `(i, j)`, `i < j`,
/// within each photon-number block.
pub fn param_ops(n_max: u32) -> Vec<ParamOp> {
    let basis = make_basis(n_max);
    let labels = basis.labels();
    let mut ops: Vec<ParamOp> = (0..basis.len()).map(ParamOp::Diag).collect();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            if labels[i].total() == labels[j].total() {
                ops.push(ParamOp::Re(i, j));
                ops.push(ParamOp::Im(i, j));
            }
        }
    }
    ops
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

impl ForwardMap {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn param_count(&self) -> usize {
        self.ops.len()
    }

    pub fn probe_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn ops(&self) -> &[ParamOp] {
        &self.ops
    }

    /// Predicted probabilities `A x`.
    pub fn predict(&self, params: &DVector<f64>) -> DVector<f64> {
        &self.matrix * params
    }

    /// Parameter vector of a Hermitian operator (entries outside the
    /// structural subspace are ignored).
    pub fn povm_to_params(&self, op: &Operator) -> DVector<f64> {
        DVector::from_iterator(
            self.ops.len(),
            self.ops.iter().map(|&p| match p {
                ParamOp::Diag(d) => op.entry(d, d).re,
                ParamOp::Re(i, j) => SQRT_2 * op.entry(i, j).re,
                ParamOp::Im(i, j) => SQRT_2 * op.entry(i, j).im,
            }),
        )
    }

    /// Hermitian operator on the labeled basis from a parameter vector.
    pub fn params_to_povm(&self, params: &DVector<f64>) -> Operator {
        let basis = make_basis(self.n_max);
        let mut mat = DMatrix::<Complex64>::zeros(basis.len(), basis.len());
        for (&p, &x) in self.ops.iter().zip(params.iter()) {
            match p {
                ParamOp::Diag(d) => mat[(d, d)] += Complex64::new(x, 0.0),
                ParamOp::Re(i, j) => {
                    let v = Complex64::new(x / SQRT_2, 0.0);
                    mat[(i, j)] += v;
                    mat[(j, i)] += v;
                }
                ParamOp::Im(i, j) => {
                    mat[(i, j)] += Complex64::new(0.0, x / SQRT_2);
                    mat[(j, i)] += Complex64::new(0.0, -x / SQRT_2);
                }
            }
        }
        Operator::from_matrix_labeled(mat, basis.labels().to_vec())
    }

    pub fn singular_values(&self) -> Vec<f64> {
        nalgebra::SVD::new_unordered(self.matrix.clone(), false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    }
}

/// Builds the forward map of a probe list at truncation order `n_max`: row
/// `i` evaluates `<psi_i| Pi |psi_i>` on the real parameterization.
pub fn forward_map(probes: &[ProbeSpec], n_max: u32) -> ForwardMap {
    let ops = param_ops(n_max);
    let states: Vec<_> = probes
        .iter()
        .map(|p| coherent_state(p.alpha, p.beta, p.delta_rad().unwrap_or(0.0), n_max))
        .collect();
    let matrix = DMatrix::from_fn(probes.len(), ops.len(), |r, c| {
        let amp = states[r].amplitudes();
        match ops[c] {
            ParamOp::Diag(d) => amp[d].norm_sqr(),
            ParamOp::Re(i, j) => SQRT_2 * (amp[i].conj() * amp[j]).re,
            ParamOp::Im(i, j) => -SQRT_2 * (amp[i].conj() * amp[j]).im,
        }
    });
    ForwardMap {
        n_max,
        ops,
        matrix,
    }
}

// --- constrained least-squares reconstruction -----------------------------------

/// Options of the convex reconstruction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Iteration cutoff of the projected-gradient loop.
    pub max_iters: usize,
    /// Convergence threshold on the largest parameter change per iteration.
    pub tol: f64,
    /// Weight each residual by the inverse binomial shot variance.
    pub weighted: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 100_000,
            tol: 1e-10,
            weighted: false,
        }
    }
}

/// Outcome of a convex reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Reconstructed pair on the 6-dimensional `N = 2` basis.
    pub povm: PovmPair,
    /// Qubit (x) qubit views, derived from the 6x6 solution by truncation.
    pub povm_on_4x4: Operator,
    pub povm_off_4x4: Operator,
    /// Root-mean-square misfit between fitted and input probabilities.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the probe set does not determine all parameters; the solver
    /// then reports the least-norm solution.
    pub rank_deficient: bool,
}

/// Reconstructs the "on" POVM element from counts. Counts are matched to
/// probes by id; every count must reference a known probe.
pub fn reconstruct_convex(
    counts: &[CountRecord],
    probes: &[ProbeSpec],
    n_max: u32,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    for c in counts {
        c.validate()?;
    }
    let mut p_hat = vec![None; probes.len()];
    let mut shots = vec![0u64; probes.len()];
    for c in counts {
        let idx = probes
            .iter()
            .position(|p| p.id == c.probe_id)
            .ok_or_else(|| {
                Error::InvalidCounts(format!("count references unknown probe id {}", c.probe_id))
            })?;
        p_hat[idx] = Some(c.frequency());
        shots[idx] = c.shots;
    }
    let p_hat: Vec<f64> = p_hat
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::InvalidCounts(format!("no counts for probe {}", probes[i].id)))
        })
        .collect::<Result<_>>()?;
    let weights = if opts.weighted {
        // Inverse binomial variance, floored to keep zero-count rows finite.
        Some(
            p_hat
                .iter()
                .zip(&shots)
                .map(|(&p, &n)| n as f64 / (p * (1.0 - p)).max(1e-9))
                .collect::<Vec<f64>>(),
        )
    } else {
        None
    };
    reconstruct_convex_from_probabilities(&p_hat, weights.as_deref(), probes, n_max, opts)
}

/// Reconstructs from per-probe click probabilities (aligned with `probes`).
/// With `weights`, row `i` of the least-squares problem is scaled by
/// `sqrt(w_i)`; the reported residual is always unweighted.
pub fn reconstruct_convex_from_probabilities(
    p_hat: &[f64],
    weights: Option<&[f64]>,
    probes: &[ProbeSpec],
    n_max: u32,
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    if n_max != 2 {
        // The result contract (6x6 pair plus qubit (x) qubit views) is tied
        // to N = 2; the analytic solver stays generic over N.
        return Err(Error::Validation(format!(
            "convex reconstruction is defined for truncation order 2, got {n_max}"
        )));
    }
    if p_hat.len() != probes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} probes",
            p_hat.len(),
            probes.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != probes.len() {
            return Err(Error::DimensionMismatch("weight length mismatch".into()));
        }
    }
    let p_hat: Vec<f64> = p_hat
        .iter()
        .zip(probes)
        .map(|(&p, probe)| {
            // Exact probabilities may carry sub-1e-9 float dust past the
            // boundaries; anything larger signals inconsistent input.
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(Error::InvalidCounts(format!(
                    "probability {p} for probe {} outside [0, 1]",
                    probe.id
                )));
            }
            Ok(p.clamp(0.0, 1.0))
        })
        .collect::<Result<_>>()?;

    let map = forward_map(probes, n_max);
    let a = map.matrix().clone();
    let b = DVector::from_column_slice(&p_hat);
    let (aw, bw) = match weights {
        Some(w) => {
            let mut aw = a.clone();
            let mut bw = b.clone();
            for (i, &wi) in w.iter().enumerate() {
                let s = wi.sqrt();
                aw.row_mut(i).scale_mut(s);
                bw[i] *= s;
            }
            (aw, bw)
        }
        None => (a.clone(), b.clone()),
    };

    let svd = nalgebra::SVD::new(aw.clone(), true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    if sigma_max <= 0.0 {
        return Err(Error::SingularSystem("forward map is zero".into()));
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_THRESHOLD * sigma_max)
        .count();
    let rank_deficient = rank < map.param_count();

    // Warm start: least-norm least-squares solution, then project. On exact
    // data from a valid POVM this is already the solution and the loop stops
    // after one iteration.
    let x0 = svd
        .solve(&bw, RANK_THRESHOLD * sigma_max)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let mut x = project_feasible(&map, &x0.column(0).into_owned())?;

    let gram = aw.transpose() * &aw;
    let atb = aw.transpose() * &bw;
    let step = 1.0 / (sigma_max * sigma_max);

    let mut iterations = opts.max_iters;
    let mut converged = false;
    for k in 1..=opts.max_iters {
        let grad = &gram * &x - &atb;
        let next = project_feasible(&map, &(&x - step * grad))?;
        let change = (&next - &x).amax();
        x = next;
        if change < opts.tol {
            iterations = k;
            converged = true;
            break;
        }
    }

    let residual_vec = &a * &x - &b;
    let residual = (residual_vec.norm_squared() / probes.len() as f64).sqrt();
    let on = map.params_to_povm(&x);
    let povm = PovmPair::from_on(on, n_max)?;
    let povm_on_4x4 = povm.on_two_qubit()?;
    let povm_off_4x4 = crate::fock::truncate_to_two_qubits(povm.off())?;
    Ok(ReconstructionResult {
        povm,
        povm_on_4x4,
        povm_off_4x4,
        residual,
        iterations,
        converged,
        rank_deficient,
    })
}

/// Projection onto `{0 <= Pi <= 1}` intersected with the structural-zero
/// subspace: per photon-number block, clip the spectrum to `[0, 1]`; the
/// parameterization itself re-imposes the structural zeros.
fn project_feasible(map: &ForwardMap, params: &DVector<f64>) -> Result<DVector<f64>> {
    let op = map.params_to_povm(params);
    let n_max = map.n_max();
    let mut mat = op.mat().clone();
    let mut start = 0usize;
    for total in 0..=n_max {
        let len = (total + 1) as usize;
        let block = Operator::from_matrix(mat.view((start, start), (len, len)).into_owned());
        let clipped = block.spectral_map(|l| l.clamp(0.0, 1.0))?;
        mat.view_mut((start, start), (len, len))
            .copy_from(clipped.mat());
        start += len;
    }
    Ok(map.povm_to_params(&Operator::from_matrix(mat)))
}

// --- sequential analytical solver ------------------------------------------------

/// Click probabilities on the minimal probe grid, indexed by `(s, v, m)`.
#[derive(Debug, Clone)]
pub struct GridProbabilities {
    n_max: u32,
    values: std::collections::BTreeMap<(u32, u32, u32), f64>,
}

impl GridProbabilities {
    pub fn new(n_max: u32) -> Self {
        GridProbabilities {
            n_max,
            values: Default::default(),
        }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn insert(&mut self, point: PhaseGridPoint, p: f64) -> Result<()> {
        if point.s > self.n_max || point.v > self.n_max - point.s || point.m > 2 * point.s {
            return Err(Error::Validation(format!(
                "grid point (s={}, v={}, m={}) outside the S_{} grid",
                point.s, point.v, point.m, self.n_max
            )));
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&p) {
            return Err(Error::Validation(format!(
                "probability {p} outside [0, 1] at {}",
                point.probe_id()
            )));
        }
        self.values
            .insert((point.s, point.v, point.m), p.clamp(0.0, 1.0));
        Ok(())
    }

    pub fn get(&self, s: u32, v: u32, m: u32) -> Result<f64> {
        self.values.get(&(s, v, m)).copied().ok_or_else(|| {
            Error::Validation(format!("missing grid probability for (s={s}, v={v}, m={m})"))
        })
    }

    /// Matches probabilities to grid points through minimal-set probe ids
    /// of the form `s{s}v{v}m{m}`.
    pub fn from_labeled(n_max: u32, values: &[(String, f64)]) -> Result<Self> {
        let mut grid = GridProbabilities::new(n_max);
        for (id, p) in values {
            let point = parse_grid_id(id).ok_or_else(|| {
                Error::Validation(format!("probe id {id} is not a grid id (s#v#m#)"))
            })?;
            grid.insert(point, *p)?;
        }
        grid.ensure_complete()?;
        Ok(grid)
    }

    /// Builds the grid from count records keyed by minimal-set probe ids.
    pub fn from_counts(n_max: u32, counts: &[CountRecord]) -> Result<Self> {
        let labeled: Vec<(String, f64)> = counts
            .iter()
            .map(|c| {
                c.validate()?;
                Ok((c.probe_id.clone(), c.frequency()))
            })
            .collect::<Result<_>>()?;
        Self::from_labeled(n_max, &labeled)
    }

    pub fn ensure_complete(&self) -> Result<()> {
        for point in crate::probes::minimal_grid(self.n_max) {
            self.get(point.s, point.v, point.m)?;
        }
        Ok(())
    }
}

fn parse_grid_id(id: &str) -> Option<PhaseGridPoint> {
    let rest = id.strip_prefix('s')?;
    let (s, rest) = rest.split_once('v')?;
    let (v, m) = rest.split_once('m')?;
    Some(PhaseGridPoint {
        s: s.parse().ok()?,
        v: v.parse().ok()?,
        m: m.parse().ok()?,
    })
}

/// Coefficient `C_{k,Delta,n}(alpha, beta)` multiplying the POVM element
/// `pi_{k,n-k,k-Delta,n+Delta-k}` in the click probability of the coherent
/// probe `|alpha, beta e^{i delta}>` (without the phase factor
/// `e^{i delta Delta}`).
pub fn phase_coefficient(k: u32, delta: i32, n: u32, alpha: f64, beta: f64) -> f64 {
    let l = k as i64 - delta as i64;
    if l < 0 || l > n as i64 {
        return 0.0;
    }
    let l = l as u32;
    let fact = |x: u32| -> f64 { (1..=x).map(|v| v as f64).product() };
    let a_pow = 2 * k as i32 - delta;
    let b_pow = 2 * (n - k) as i32 + delta;
    if a_pow < 0 || b_pow < 0 {
        return 0.0;
    }
    (-(alpha * alpha + beta * beta)).exp() * alpha.powi(a_pow) * beta.powi(b_pow)
        / (fact(k) * fact(n - k) * fact(l) * fact(n - l)).sqrt()
}

/// Target and aliased parts of a discrete phase average: evaluating the POVM
/// `pi` against the level-`s` phase grid at target index `t` yields
/// `A_t^(s) + B_t^(s)`, with `A` collecting the `Delta = t` elements and `B`
/// the elements aliased in from `Delta = t + (2s+1)u`, `u != 0`.
#[derive(Debug, Clone, Copy)]
pub struct AliasTerms {
    pub target: Complex64,
    pub aliased: Complex64,
}

/// Evaluates both parts of the discrete phase average directly from a known
/// POVM element, for cross-checking the peeling algebra.
pub fn alias_terms(
    pi: &Operator,
    n_max: u32,
    alpha: f64,
    beta: f64,
    s: u32,
    t: i32,
) -> Result<AliasTerms> {
    let basis = make_basis(n_max);
    if pi.dim() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimension {} does not match basis size {}",
            pi.dim(),
            basis.len()
        )));
    }
    let mut target = Complex64::new(0.0, 0.0);
    let mut aliased = Complex64::new(0.0, 0.0);
    let period = (2 * s + 1) as i32;
    for n in 0..=n_max {
        for k in 0..=n {
            for l in 0..=n {
                let delta = k as i32 - l as i32;
                let row = basis.index_of(k, n - k).unwrap();
                let col = basis.index_of(l, n - l).unwrap();
                let contrib = pi.entry(row, col)
                    * phase_coefficient(k, delta, n, alpha, beta);
                if delta == t {
                    target += contrib;
                } else if (delta - t) % period == 0 {
                    aliased += contrib;
                }
            }
        }
    }
    Ok(AliasTerms { target, aliased })
}

/// Sequential phase-peeling reconstruction on the minimal grid: the exact,
/// unconstrained linear inversion of the forward model.
///
/// Returns the Hermitian 6x6 (for `N = 2`) "on" element; no positivity
/// projection is applied.
pub fn reconstruct_analytic(
    probs: &GridProbabilities,
    n_max: u32,
    table: &AmplitudeTable,
) -> Result<Operator> {
    if probs.n_max() != n_max || table.n_max() != n_max {
        return Err(Error::DimensionMismatch(
            "grid, table and requested truncation order disagree".into(),
        ));
    }
    probs.ensure_complete()?;

    let basis = make_basis(n_max);
    let dim = basis.len();
    let mut pi = DMatrix::<Complex64>::zeros(dim, dim);
    // Solved elements keyed by (k, l, k', l'); filled in descending |Delta|.
    let mut known: std::collections::BTreeMap<(u32, u32, u32, u32), Complex64> =
        Default::default();

    for t in (0..=n_max as i32).rev() {
        // Unknown elements at Delta = t: (k, n-k, k-t, n+t-k).
        let mut unknowns = Vec::new();
        for n in t as u32..=n_max {
            for k in t as u32..=n {
                unknowns.push((k, n));
            }
        }
        // One equation per grid level s >= t and amplitude index v.
        let mut level_pairs = Vec::new();
        for s in t as u32..=n_max {
            for v in 0..=(n_max - s) {
                level_pairs.push((s, v));
            }
        }
        debug_assert_eq!(unknowns.len(), level_pairs.len());

        let mut a = DMatrix::<Complex64>::zeros(level_pairs.len(), unknowns.len());
        let mut rhs = DVector::<Complex64>::zeros(level_pairs.len());
        for (row, &(s, v)) in level_pairs.iter().enumerate() {
            let (alpha, beta) = table.get(s, v)?;
            // Discrete phase average sum_m p e^{-i t delta_m} / (2s+1).
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..=(2 * s) {
                let delta_m = 2.0 * std::f64::consts::PI * m as f64 / (2 * s + 1) as f64;
                acc += Complex64::from_polar(1.0, -(t as f64) * delta_m)
                    * probs.get(s, v, m)?;
            }
            acc /= Complex64::new((2 * s + 1) as f64, 0.0);
            // Subtract aliased contributions from already-solved elements.
            let period = (2 * s + 1) as i32;
            let mut u = 1;
            loop {
                let candidates = [t + period * u, t - period * u];
                if candidates.iter().all(|d| d.unsigned_abs() > n_max) {
                    break;
                }
                for &d in &candidates {
                    if d == t || d.unsigned_abs() > n_max {
                        continue;
                    }
                    for n in d.unsigned_abs()..=n_max {
                        let k_lo = 0.max(d) as u32;
                        let k_hi = (n as i32).min(n as i32 + d) as u32;
                        for k in k_lo..=k_hi {
                            let key = (
                                k,
                                n - k,
                                (k as i32 - d) as u32,
                                (n as i32 + d - k as i32) as u32,
                            );
                            let value = known.get(&key).ok_or_else(|| {
                                Error::SingularSystem(format!(
                                    "alias element {key:?} not yet solved at t = {t}"
                                ))
                            })?;
                            acc -= value * phase_coefficient(k, d, n, alpha, beta);
                        }
                    }
                }
                u += 1;
            }
            rhs[row] = acc;
            for (col, &(k, n)) in unknowns.iter().enumerate() {
                a[(row, col)] = Complex64::new(phase_coefficient(k, t, n, alpha, beta), 0.0);
            }
        }

        let lu = a.lu();
        let x = lu.solve(&rhs).ok_or_else(|| {
            Error::SingularSystem(format!(
                "phase-peeling system at Delta = {t} is singular; amplitudes violate the \
                 linear-independence precondition"
            ))
        })?;

        for (col, &(k, n)) in unknowns.iter().enumerate() {
            let (kp, lp) = ((k as i32 - t) as u32, (n as i32 + t - k as i32) as u32);
            let mut value = x[col];
            if t == 0 {
                value = Complex64::new(value.re, 0.0); // diagonal entries are real
            }
            let row = basis.index_of(k, n - k).unwrap();
            let colm = basis.index_of(kp, lp).unwrap();
            pi[(row, colm)] = value;
            pi[(colm, row)] = value.conj();
            known.insert((k, n - k, kp, lp), value);
            known.insert((kp, lp, k, n - k), value.conj());
        }
    }

    Ok(Operator::from_matrix_labeled(pi, basis.labels().to_vec()))
}

// --- bootstrap ----------------------------------------------------------------

/// Whether repetitions draw finite binomial samples or use the exact
/// probabilities (the infinite-shot limit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Shots(u64),
    Exact,
}

/// Spread of reconstructed quantities over independent repetitions.
#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub repetitions: usize,
    /// Entrywise mean of the reconstructed 6x6 "on" element.
    pub mean_on: Operator,
    /// Entrywise standard deviation (complex deviation magnitude, sample
    /// normalization).
    pub std_on: DMatrix<f64>,
    pub mean_on_4x4: Operator,
    pub std_on_4x4: DMatrix<f64>,
    /// Measure of the truncated "on" element, one value per repetition.
    pub m_ln_values: Vec<f64>,
    pub m_ln_mean: f64,
    pub m_ln_std: f64,
    pub all_converged: bool,
}

fn entry_stats(samples: &[&Operator]) -> (Operator, DMatrix<f64>) {
    let dim = samples[0].dim();
    let r = samples.len() as f64;
    let mut mean = DMatrix::<Complex64>::zeros(dim, dim);
    for s in samples {
        mean += s.mat();
    }
    mean /= Complex64::new(r, 0.0);
    let mut var = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        for i in 0..dim {
            for j in 0..dim {
                var[(i, j)] += (s.mat()[(i, j)] - mean[(i, j)]).norm_sqr();
            }
        }
    }
    let std = var.map(|v| (v / (r - 1.0)).sqrt());
    (
        Operator::from_matrix(mean).with_labels(samples[0].labels().map(|l| l.to_vec())),
        std,
    )
}

/// Repeats the simulate-and-reconstruct pipeline with sub-seeds derived from
/// the master seed and reports per-entry and measure standard deviations.
pub fn bootstrap_errors(
    model: &DetectorModel,
    probes: &[ProbeSpec],
    sampling: Sampling,
    repetitions: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<BootstrapReport> {
    use rayon::prelude::*;

    if repetitions < 2 {
        return Err(Error::Validation(
            "bootstrap needs at least 2 repetitions".into(),
        ));
    }
    let results: Vec<ReconstructionResult> = (0..repetitions)
        .into_par_iter()
        .map(|k| -> Result<ReconstructionResult> {
            match sampling {
                Sampling::Shots(shots) => {
                    let counts =
                        simulate_counts(model, probes, shots, derive_seed(seed, k as u64))?;
                    reconstruct_convex(&counts, probes, 2, opts)
                }
                Sampling::Exact => {
                    let ps = exact_probabilities(model, probes)?;
                    reconstruct_convex_from_probabilities(&ps, None, probes, 2, opts)
                }
            }
        })
        .collect::<Result<_>>()?;

    let m_ln_values: Vec<f64> = results
        .iter()
        .map(|r| crate::entanglement::measure_of_povm(&r.povm_on_4x4, 2, 2))
        .collect::<Result<_>>()?;
    let r = repetitions as f64;
    let m_ln_mean = m_ln_values.iter().sum::<f64>() / r;
    let m_ln_std = (m_ln_values
        .iter()
        .map(|v| (v - m_ln_mean).powi(2))
        .sum::<f64>()
        / (r - 1.0))
        .sqrt();

    let on_samples: Vec<&Operator> = results.iter().map(|r| r.povm.on()).collect();
    let (mean_on, std_on) = entry_stats(&on_samples);
    let on4_samples: Vec<&Operator> = results.iter().map(|r| &r.povm_on_4x4).collect();
    let (mean_on_4x4, std_on_4x4) = entry_stats(&on4_samples);

    Ok(BootstrapReport {
        repetitions,
        mean_on,
        std_on,
        mean_on_4x4,
        std_on_4x4,
        m_ln_values,
        m_ln_mean,
        m_ln_std,
        all_converged: results.iter().all(|r| r.converged),
    })
}
