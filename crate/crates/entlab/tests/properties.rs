//! Property tests over randomized inputs.

mod common;

use common::max_entry_diff;
use entlab::fock::{
    coherent_state, kron, partial_trace, partial_transpose, random_hermitian, trace_norm,
    uhlmann_fidelity, Operator, Subsystem,
};
use entlab::optics::{waveplates_to_probe, WavePlateSetting};
use entlab::probes::ProbeSpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hermitian_from_seed(dim: usize, seed: u64) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian(dim, &mut rng)
}

fn psd_from_seed(dim: usize, seed: u64) -> Operator {
    let h = hermitian_from_seed(dim, seed);
    h.matmul(&h)
}

proptest! {
    #[test]
    fn coherent_norm_bounded_and_monotone(
        alpha in 0.0..1.5f64,
        beta in 0.0..1.5f64,
        delta in 0.0..std::f64::consts::TAU,
    ) {
        let mut prev = 0.0;
        for n in 0..=5u32 {
            let norm = coherent_state(alpha, beta, delta, n).norm_sqr();
            prop_assert!(norm <= 1.0 + 1e-12);
            prop_assert!(norm + 1e-12 >= prev, "norm decreased at N = {n}");
            prev = norm;
        }
    }

    #[test]
    fn partial_transpose_involution_trace_hermiticity(seed in 0u64..10_000) {
        let h = hermitian_from_seed(4, seed);
        let pt = partial_transpose(&h, 2, 2, Subsystem::B).unwrap();
        prop_assert!((pt.trace().re - h.trace().re).abs() <= 1e-12);
        prop_assert!(pt.is_hermitian_within(1e-12));
        let back = partial_transpose(&pt, 2, 2, Subsystem::B).unwrap();
        prop_assert_eq!(back.mat(), h.mat());
    }

    #[test]
    fn partial_trace_of_product_factors(seed in 0u64..10_000) {
        let a = hermitian_from_seed(2, seed);
        let b = hermitian_from_seed(3, seed.wrapping_add(1));
        let red = partial_trace(&kron(&a, &b), &[2, 3], &[0]).unwrap();
        let expect = a.scale(b.trace().re);
        prop_assert!(max_entry_diff(&red, &expect) <= 1e-12);
    }

    #[test]
    fn trace_norm_dominates_trace(seed in 0u64..10_000) {
        let h = hermitian_from_seed(5, seed);
        let tn = trace_norm(&h, true).unwrap();
        prop_assert!(tn + 1e-10 >= h.trace().re.abs());
    }

    #[test]
    fn trace_norm_of_state_is_one(seed in 0u64..10_000) {
        let p = psd_from_seed(4, seed);
        let tr = p.trace().re;
        prop_assume!(tr > 1e-6);
        let rho = p.scale(1.0 / tr);
        prop_assert!((trace_norm(&rho, true).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn uhlmann_fidelity_is_symmetric(seed in 0u64..10_000) {
        let a = psd_from_seed(4, seed);
        let b = psd_from_seed(4, seed.wrapping_add(7919));
        prop_assume!(a.trace().re > 1e-6 && b.trace().re > 1e-6);
        let ab = uhlmann_fidelity(&a, &b).unwrap();
        let ba = uhlmann_fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-8, "asymmetry {}", (ab - ba).abs());
        prop_assert!((0.0..=1.0 + 1e-9).contains(&ab));
    }

    #[test]
    fn waveplate_probes_conserve_power(
        theta_q in -180.0..180.0f64,
        theta_h in -180.0..180.0f64,
        power in 0.0..2.0f64,
    ) {
        let probe = waveplates_to_probe(
            "t",
            &WavePlateSetting { theta_q_deg: theta_q, theta_h_deg: theta_h, power },
        ).unwrap();
        prop_assert!((probe.alpha.powi(2) + probe.beta.powi(2) - power).abs() <= 1e-10);
        if let Some(d) = probe.delta_deg {
            prop_assert!((-180.0..=180.0).contains(&d));
        }
    }

    #[test]
    fn probe_json_round_trip(
        alpha in 0.0..0.8f64,
        beta in 0.0..0.8f64,
        delta in -179.0..180.0f64,
    ) {
        prop_assume!(alpha > 1e-6 && beta > 1e-6);
        let probe = ProbeSpec::new(
            "rt",
            alpha,
            beta,
            Some(delta),
            alpha * alpha + beta * beta,
        ).unwrap();
        let text = serde_json::to_string(&probe).unwrap();
        let back: ProbeSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &probe);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
