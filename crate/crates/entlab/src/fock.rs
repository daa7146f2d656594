//! Truncated two-mode Fock-space linear algebra.
//!
//! The two optical modes are the horizontal (H) and vertical (V) polarization
//! components of a single beam. States and operators live on the space spanned
//! by number states `|nH, nV>` with total photon number `nH + nV <= N`; the
//! truncation order `N` fixes the dimension `(N+1)(N+2)/2`.
//!
//! Basis ordering convention: labels are sorted by total photon number,
//! then by descending `nH` within each total. For `N = 2` the order is
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.
//!
//! After truncation to at most one photon per mode the four surviving labels
//! form a qubit (x) qubit product space ordered as `index = 2*nH + nV`, i.e.
//! `(0,0), (0,1), (1,0), (1,1)` with mode A the horizontal count and mode B
//! the vertical count. This fixes the bipartition used for partial transposes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Complex64, Error, Result};

/// Entrywise tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-10;

/// Eigenvalues above `-PSD_TOL` count as non-negative and are clipped to zero
/// before square roots.
pub const PSD_TOL: f64 = 1e-9;

/// One two-mode number state `|nH, nV>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub n_h: u32,
    pub n_v: u32,
}

impl BasisLabel {
    pub fn new(n_h: u32, n_v: u32) -> Self {
        BasisLabel { n_h, n_v }
    }

    pub fn total(&self) -> u32 {
        self.n_h + self.n_v
    }
}

/// Ordered basis of the `N`-truncated two-mode Fock space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_max: u32,
    labels: Vec<BasisLabel>,
}

/// Builds the canonical basis for truncation order `N`: totals ascending,
/// `nH` descending within a total.
pub fn make_basis(n_max: u32) -> FockBasis {
    let mut labels = Vec::with_capacity(((n_max + 1) * (n_max + 2) / 2) as usize);
    for total in 0..=n_max {
        for n_h in (0..=total).rev() {
            labels.push(BasisLabel::new(n_h, total - n_h));
        }
    }
    FockBasis { n_max, labels }
}

impl FockBasis {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        self.labels[index]
    }

    /// Position of `|nH, nV>` in the basis, if within the truncation.
    pub fn index_of(&self, n_h: u32, n_v: u32) -> Option<usize> {
        let total = n_h + n_v;
        if total > self.n_max {
            return None;
        }
        // Within a total, nH runs from `total` down to 0.
        let block_start = (total * (total + 1) / 2) as usize;
        Some(block_start + (total - n_h) as usize)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// State vector over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: FockBasis,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(basis: FockBasis, amplitudes: DVector<Complex64>) -> Result<Self> {
        if basis.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} labels but amplitude vector has length {}",
                basis.len(),
                amplitudes.len()
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n_h: u32, n_v: u32) -> Complex64 {
        match self.basis.index_of(n_h, n_v) {
            Some(i) => self.amplitudes[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Squared norm; below one for truncated coherent states.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<psi| op |psi>`.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        assert_eq!(self.amplitudes.len(), op.dim(), "dimension mismatch");
        let v = op.mat() * &self.amplitudes;
        self.amplitudes.dotc(&v)
    }

    /// Rank-one density operator `|psi><psi|` (not normalized).
    pub fn projector(&self) -> Operator {
        let d = self.amplitudes.len();
        let mat = DMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        Operator {
            mat,
            labels: Some(self.basis.labels.clone()),
        }
    }
}

/// Truncated two-mode coherent state `|alpha, beta e^{i delta}>_N`.
///
/// The amplitude on `|nH, nV>` is
/// `exp(-(alpha^2 + beta^2)/2) * alpha^nH * beta^nV * e^{i nV delta} / sqrt(nH! nV!)`.
/// No renormalization is applied after truncation, so the squared norm is
/// slightly below one and should be monitored by the caller.
pub fn coherent_state(alpha: f64, beta: f64, delta: f64, n_max: u32) -> StateVector {
    let basis = make_basis(n_max);
    let prefactor = (-(alpha * alpha + beta * beta) / 2.0).exp();
    let amplitudes = DVector::from_iterator(
        basis.len(),
        basis.labels().iter().map(|l| {
            let mag = prefactor * alpha.powi(l.n_h as i32) * beta.powi(l.n_v as i32)
                / (factorial(l.n_h) * factorial(l.n_v)).sqrt();
            Complex64::from_polar(mag, l.n_v as f64 * delta)
        }),
    );
    StateVector { basis, amplitudes }
}

/// Truncated two-mode coherent state with general complex amplitudes.
///
/// [`coherent_state`] is the special case `a = alpha`, `b = beta e^{i delta}`
/// with real non-negative `alpha`, `beta`.
pub fn coherent_state_complex(a: Complex64, b: Complex64, n_max: u32) -> StateVector {
    let basis = make_basis(n_max);
    let prefactor = (-(a.norm_sqr() + b.norm_sqr()) / 2.0).exp();
    let amplitudes = DVector::from_iterator(
        basis.len(),
        basis.labels().iter().map(|l| {
            prefactor * a.powu(l.n_h) * b.powu(l.n_v)
                / (factorial(l.n_h) * factorial(l.n_v)).sqrt()
        }),
    );
    StateVector { basis, amplitudes }
}

/// Dense complex operator, optionally carrying Fock basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<Complex64>,
    labels: Option<Vec<BasisLabel>>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator must be square");
        Operator { mat, labels: None }
    }

    pub fn from_matrix_labeled(mat: DMatrix<Complex64>, labels: Vec<BasisLabel>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator must be square");
        assert_eq!(mat.nrows(), labels.len(), "label count must match dimension");
        Operator {
            mat,
            labels: Some(labels),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator::from_matrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn identity_on(basis: &FockBasis) -> Self {
        Operator::from_matrix_labeled(
            DMatrix::identity(basis.len(), basis.len()),
            basis.labels().to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn labels(&self) -> Option<&[BasisLabel]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<BasisLabel>>) -> Self {
        if let Some(ref l) = labels {
            assert_eq!(l.len(), self.dim(), "label count must match dimension");
        }
        self.labels = labels;
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().sum()
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
            labels: self.labels.clone(),
        }
    }

    pub fn transpose(&self) -> Operator {
        Operator {
            mat: self.mat.transpose(),
            labels: self.labels.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Operator {
        Operator {
            mat: &self.mat * Complex64::new(c, 0.0),
            labels: self.labels.clone(),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat * &other.mat,
            labels: self.labels.clone(),
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat + &other.mat,
            labels: self.labels.clone().or_else(|| other.labels.clone()),
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Operator {
            mat: &self.mat - &other.mat,
            labels: self.labels.clone().or_else(|| other.labels.clone()),
        }
    }

    /// Largest entrywise deviation from Hermiticity, `max |A - A^dag|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let dev = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    pub fn is_hermitian_within(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Replaces the operator by its Hermitian part `(A + A^dag)/2`.
    pub fn hermitized(&self) -> Operator {
        Operator {
            mat: (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0),
            labels: self.labels.clone(),
        }
    }

    /// Eigendecomposition of a Hermitian operator, `A = V diag(w) V^dag`.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let dev = self.hermiticity_deviation();
        if dev > HERM_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eigen = nalgebra::SymmetricEigen::new(self.hermitized().mat).clone();
        let values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure(
                "non-finite eigenvalue from Hermitian eigensolver".into(),
            ));
        }
        Ok((values, eigen.eigenvectors))
    }

    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_eigen()?.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = self.eigenvalues_hermitian()?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Applies `f` to the spectrum of a Hermitian operator.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let (values, vectors) = self.hermitian_eigen()?;
        let d = self.dim();
        let diag = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(f(values[i]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mat = &vectors * diag * vectors.adjoint();
        Ok(Operator {
            mat,
            labels: self.labels.clone(),
        })
    }
}

impl std::fmt::Display for Operator {
    /// Grid of `re+imi` entries to four decimals, with basis labels when
    /// present.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(labels) = &self.labels {
            write!(f, "{:>14}", "")?;
            for l in labels {
                write!(f, "{:>14}", format!("|{},{}>", l.n_h, l.n_v))?;
            }
            writeln!(f)?;
        }
        for i in 0..self.dim() {
            if let Some(labels) = &self.labels {
                write!(f, "{:>14}", format!("<{},{}|", labels[i].n_h, labels[i].n_v))?;
            }
            for j in 0..self.dim() {
                let z = self.mat[(i, j)];
                let text = if z.im.abs() < 5e-5 {
                    format!("{:.4}", z.re)
                } else {
                    format!("{:.3}{:+.3}i", z.re, z.im)
                };
                write!(f, "{text:>14}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Tensor product. The result carries no Fock labels: the factors' label sets
/// do not combine into a two-mode label set.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator::from_matrix(a.mat.kronecker(&b.mat))
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial transpose on one factor of an `A (x) B` product space with declared
/// factor dimensions. Row-major product indexing: `index = i_A * d_b + i_B`.
pub fn partial_transpose(
    op: &Operator,
    d_a: usize,
    d_b: usize,
    subsystem: Subsystem,
) -> Result<Operator> {
    if d_a * d_b != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "declared factors {}x{} do not multiply to dimension {}",
            d_a,
            d_b,
            op.dim()
        )));
    }
    let mut out = DMatrix::zeros(op.dim(), op.dim());
    for a in 0..d_a {
        for b in 0..d_b {
            for ap in 0..d_a {
                for bp in 0..d_b {
                    let (row, col) = match subsystem {
                        Subsystem::B => (a * d_b + bp, ap * d_b + b),
                        Subsystem::A => (ap * d_b + b, a * d_b + bp),
                    };
                    out[(row, col)] = op.mat[(a * d_b + b, ap * d_b + bp)];
                }
            }
        }
    }
    Ok(Operator {
        mat: out,
        labels: op.labels.clone(),
    })
}

/// Partial trace over the factors of a multi-mode product space that are not
/// listed in `keep`. `dims` declares the factor dimensions in index order
/// (row-major product indexing); `keep` lists factor positions to retain, in
/// ascending order.
pub fn partial_trace(op: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    let total: usize = dims.iter().product();
    if total != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "declared factorization {:?} does not multiply to dimension {}",
            dims,
            op.dim()
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "invalid keep set {:?} for {} factors",
            keep,
            dims.len()
        )));
    }

    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // Decompose a flat product index into per-factor digits.
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            out[f] = idx % dims[f];
            idx /= dims[f];
        }
        out
    };
    let flat = |digs: &[usize]| -> usize {
        let mut idx = 0;
        for f in 0..dims.len() {
            idx = idx * dims[f] + digs[f];
        }
        idx
    };

    let kept_digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; keep.len()];
        for (pos, &f) in keep.iter().enumerate().rev() {
            out[pos] = idx % dims[f];
            idx /= dims[f];
        }
        out
    };
    let traced_digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; traced.len()];
        for (pos, &f) in traced.iter().enumerate().rev() {
            out[pos] = idx % dims[f];
            idx /= dims[f];
        }
        out
    };
    let _ = digits;

    let mut out = DMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        let rk = kept_digits(r);
        for c in 0..kept_dim {
            let ck = kept_digits(c);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_dim {
                let td = traced_digits(t);
                let mut row_digs = vec![0; dims.len()];
                let mut col_digs = vec![0; dims.len()];
                for (pos, &f) in keep.iter().enumerate() {
                    row_digs[f] = rk[pos];
                    col_digs[f] = ck[pos];
                }
                for (pos, &f) in traced.iter().enumerate() {
                    row_digs[f] = td[pos];
                    col_digs[f] = td[pos];
                }
                acc += op.mat[(flat(&row_digs), flat(&col_digs))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(Operator::from_matrix(out))
}

/// Product-basis labels of the qubit (x) qubit space, ordered `2*nH + nV`.
pub fn two_qubit_labels() -> Vec<BasisLabel> {
    vec![
        BasisLabel::new(0, 0),
        BasisLabel::new(0, 1),
        BasisLabel::new(1, 0),
        BasisLabel::new(1, 1),
    ]
}

/// Restricts an operator on the 6-dimensional `N = 2` basis to the qubit (x)
/// qubit product space, dropping every entry that involves `|2,0>` or `|0,2>`.
pub fn truncate_to_two_qubits(op: &Operator) -> Result<Operator> {
    if op.dim() != 6 {
        return Err(Error::DimensionMismatch(format!(
            "expected an operator on the 6-dimensional N=2 basis, got dimension {}",
            op.dim()
        )));
    }
    // N=2 order: (0,0),(1,0),(0,1),(2,0),(1,1),(0,2); product order 2*nH+nV.
    const SEL: [usize; 4] = [0, 2, 1, 4];
    let mat = DMatrix::from_fn(4, 4, |i, j| op.mat[(SEL[i], SEL[j])]);
    Ok(Operator {
        mat,
        labels: Some(two_qubit_labels()),
    })
}

/// Trace norm `sum_i |lambda_i|`.
///
/// With `hermitian` set the eigenvalues of the (verified) Hermitian operator
/// are used; otherwise the singular values.
pub fn trace_norm(op: &Operator, hermitian: bool) -> Result<f64> {
    if hermitian {
        let ev = op.eigenvalues_hermitian()?;
        Ok(ev.iter().map(|l| l.abs()).sum())
    } else {
        let svd = nalgebra::SVD::new_unordered(op.mat.clone(), false, false);
        let sum: f64 = svd.singular_values.iter().sum();
        if !sum.is_finite() {
            return Err(Error::EigenFailure("non-finite singular value".into()));
        }
        Ok(sum)
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2` of the trace-normalized
/// inputs. Inputs must be positive semidefinite within [`PSD_TOL`]; negative
/// eigenvalues inside the tolerance are clipped to zero.
pub fn uhlmann_fidelity(a: &Operator, b: &Operator) -> Result<f64> {
    let normalize = |op: &Operator| -> Result<Operator> {
        let tr = op.trace().re;
        if tr.abs() < 1e-12 {
            return Err(Error::ZeroTrace);
        }
        Ok(op.scale(1.0 / tr))
    };
    let a = normalize(a)?;
    let b = normalize(b)?;

    let check_psd = |op: &Operator| -> Result<()> {
        let min = op.min_eigenvalue()?;
        if min < -PSD_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(())
    };
    check_psd(&a)?;
    check_psd(&b)?;

    let sqrt_a = a.spectral_map(|l| l.max(0.0).sqrt())?;
    let inner = sqrt_a.matmul(&b).matmul(&sqrt_a).hermitized();
    let ev = inner.eigenvalues_hermitian()?;
    let root_sum: f64 = ev.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0 + 1e-12))
}

// --- serialization -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<[u32; 2]>>,
    re_im: Vec<[f64; 2]>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let mut re_im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.mat[(i, j)];
                re_im.push([z.re, z.im]);
            }
        }
        OperatorJson {
            n,
            labels: self
                .labels
                .as_ref()
                .map(|ls| ls.iter().map(|l| [l.n_h, l.n_v]).collect()),
            re_im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = OperatorJson::deserialize(deserializer)?;
        if raw.re_im.len() != raw.n * raw.n {
            return Err(serde::de::Error::custom(format!(
                "re_im has {} entries, expected {}",
                raw.re_im.len(),
                raw.n * raw.n
            )));
        }
        if let Some(ref ls) = raw.labels {
            if ls.len() != raw.n {
                return Err(serde::de::Error::custom(format!(
                    "labels has {} entries, expected {}",
                    ls.len(),
                    raw.n
                )));
            }
        }
        let mat = DMatrix::from_fn(raw.n, raw.n, |i, j| {
            let [re, im] = raw.re_im[i * raw.n + j];
            Complex64::new(re, im)
        });
        Ok(Operator {
            mat,
            labels: raw
                .labels
                .map(|ls| ls.into_iter().map(|[h, v]| BasisLabel::new(h, v)).collect()),
        })
    }
}

// --- randomized constructions -------------------------------------------------

/// Haar-random unitary via QR of a Ginibre matrix with phase-fixed diagonal.
pub fn haar_unitary<R: rand::Rng>(dim: usize, rng: &mut R) -> Operator {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        )
    });
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let q = qr.q();
    // Fix the phase convention so the distribution is Haar.
    let phases = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let d = r_diag[i];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Operator::from_matrix(q * phases)
}

/// Random Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian<R: rand::Rng>(dim: usize, rng: &mut R) -> Operator {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        )
    });
    Operator::from_matrix((&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}
