#![allow(dead_code)]

//! Test-side helpers and independent oracles.
//!
//! Everything here is deliberately written without going through the library
//! code paths it is used to check.

use entlab::fock::{make_basis, Operator};
use entlab::probes::ProbeSpec;
use entlab::Complex64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random Hermitian operator on the N=2 basis with global-phase structural
/// zeros, spectrum shifted into `[margin, 1 - margin]`.
pub fn random_structured_povm<R: Rng>(rng: &mut R, margin: f64) -> Operator {
    let basis = make_basis(2);
    let mut mat = DMatrix::<Complex64>::zeros(6, 6);
    for i in 0..6 {
        for j in 0..6 {
            mat[(i, j)] = Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        }
    }
    let mut herm = DMatrix::<Complex64>::zeros(6, 6);
    for i in 0..6 {
        for j in 0..6 {
            herm[(i, j)] = (mat[(i, j)] + mat[(j, i)].conj()) * Complex64::new(0.5, 0.0);
            if basis.label(i).total() != basis.label(j).total() {
                herm[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let op = Operator::from_matrix_labeled(herm, basis.labels().to_vec());
    let ev = op.eigenvalues_hermitian().expect("random Hermitian");
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (1.0 - 2.0 * margin) / (hi - lo).max(1e-9);
    op.sub(&Operator::identity(6).scale(lo))
        .scale(scale)
        .add(&Operator::identity(6).scale(margin))
}

/// Click probabilities of a POVM element for a probe list, computed directly
/// from the truncated coherent-state series (independent of the forward map).
pub fn probabilities_by_series(pi: &Operator, probes: &[ProbeSpec]) -> Vec<f64> {
    let basis = make_basis(2);
    let fact = |n: u32| -> f64 { (1..=n).map(|v| v as f64).product() };
    probes
        .iter()
        .map(|p| {
            let delta = p.delta_rad().unwrap_or(0.0);
            let pre = (-(p.alpha * p.alpha + p.beta * p.beta) / 2.0).exp();
            let amps: Vec<Complex64> = basis
                .labels()
                .iter()
                .map(|l| {
                    Complex64::from_polar(
                        pre * p.alpha.powi(l.n_h as i32) * p.beta.powi(l.n_v as i32)
                            / (fact(l.n_h) * fact(l.n_v)).sqrt(),
                        l.n_v as f64 * delta,
                    )
                })
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..6 {
                for j in 0..6 {
                    acc += amps[i].conj() * pi.entry(i, j) * amps[j];
                }
            }
            acc.re.clamp(0.0, 1.0)
        })
        .collect()
}

/// Characteristic polynomial of a 4x4 Hermitian matrix via Faddeev-LeVerrier:
/// returns `[c0, c1, c2, c3]` of `l^4 + c3 l^3 + c2 l^2 + c1 l + c0`.
pub fn char_poly_4x4(a: &Operator) -> [f64; 4] {
    assert_eq!(a.dim(), 4);
    let m = a.mat().clone();
    let id = DMatrix::<Complex64>::identity(4, 4);
    let m1 = m.clone();
    let c3 = -m1.diagonal().sum().re;
    let m2 = &m * (&m1 + &id * Complex64::new(c3, 0.0));
    let c2 = -m2.diagonal().sum().re / 2.0;
    let m3 = &m * (&m2 + &id * Complex64::new(c2, 0.0));
    let c1 = -m3.diagonal().sum().re / 3.0;
    let m4 = &m * (&m3 + &id * Complex64::new(c1, 0.0));
    let c0 = -m4.diagonal().sum().re / 4.0;
    [c0, c1, c2, c3]
}

/// All four roots of a real quartic by Durand-Kerner iteration. Handles
/// repeated roots (with reduced accuracy) and needs no eigensolver.
pub fn quartic_roots(coefficients: [f64; 4]) -> [Complex64; 4] {
    let [c0, c1, c2, c3] = coefficients;
    let p = |z: Complex64| -> Complex64 {
        (((z + c3) * z + c2) * z + c1) * z + c0
    };
    // Bound on the root magnitude keeps the initial points at scale.
    let bound = 1.0 + c0.abs().max(c1.abs()).max(c2.abs()).max(c3.abs());
    let seed = Complex64::new(0.4, 0.9) * bound;
    let mut z = [seed, seed * seed / bound, seed * seed * seed / (bound * bound), {
        let s2 = seed * seed;
        s2 * s2 / (bound * bound * bound)
    }];
    for _ in 0..400 {
        let mut next = z;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() > 1e-300 {
                next[i] = z[i] - p(z[i]) / denom;
            }
        }
        let step: f64 = (0..4).map(|i| (next[i] - z[i]).norm()).sum();
        z = next;
        if step < 1e-14 * bound {
            break;
        }
    }
    z
}

/// Sum of absolute eigenvalues of a 4x4 Hermitian matrix via its
/// characteristic polynomial: an eigensolver-free trace-norm oracle.
pub fn trace_norm_by_char_poly(a: &Operator) -> f64 {
    quartic_roots(char_poly_4x4(a))
        .iter()
        .map(|z| z.re.abs())
        .sum()
}

/// Largest entrywise modulus of the difference of two operators.
pub fn max_entry_diff(a: &Operator, b: &Operator) -> f64 {
    assert_eq!(a.dim(), b.dim());
    (a.mat() - b.mat())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
