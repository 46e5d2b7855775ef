//! Property tests for the structural invariants: unitarity and the group
//! law of clock evolution, Schmidt reconstruction, partial-trace behaviour
//! and time-state overlaps under random inputs.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use pawsim::clock::ClockModel;
use pawsim::tensor::{CMatrix, DenseOperator, StateVector};

fn hermitian_from(parts: &[f64], dim: usize) -> DenseOperator {
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(parts[k], parts[k + 1])
    });
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DenseOperator::new(herm).unwrap()
}

fn state_from(parts: &[f64]) -> Option<StateVector> {
    let dim = parts.len() / 2;
    let v = StateVector::from_slice(
        &(0..dim)
            .map(|k| C64::new(parts[2 * k], parts[2 * k + 1]))
            .collect::<Vec<_>>(),
    );
    v.normalized().ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_unitary_and_respects_group_law(
        parts in prop::collection::vec(-1.0f64..1.0, 32),
        s in -3.0f64..3.0,
        t in -3.0f64..3.0,
    ) {
        let op = hermitian_from(&parts, 4);
        let spec = op.eig_hermitian().unwrap();
        let u = spec.evolution(t);
        prop_assert!(u.is_unitary());
        prop_assert!(u.commutator(&op).max_abs() <= 1e-10);
        let composed = spec.evolution(s).matmul(&spec.evolution(t));
        prop_assert!(composed.sub(&spec.evolution(s + t)).max_abs() <= 1e-10);
    }

    #[test]
    fn schmidt_reconstructs_and_normalizes(
        parts in prop::collection::vec(-1.0f64..1.0, 24),
    ) {
        prop_assume!(parts.iter().any(|x| x.abs() > 1e-3));
        let psi = match state_from(&parts) {
            Some(p) => p,
            None => return Ok(()),
        };
        let data = psi.schmidt(3, 4).unwrap();
        prop_assert!(data.rank() <= 3);
        prop_assert!((data.coefficient_sum() - 1.0).abs() <= 1e-12);
        prop_assert!(data.reconstruct().sub(&psi).norm() <= 1e-10);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(
        parts in prop::collection::vec(-1.0f64..1.0, 24),
    ) {
        prop_assume!(parts.iter().any(|x| x.abs() > 1e-3));
        let psi = match state_from(&parts) {
            Some(p) => p,
            None => return Ok(()),
        };
        let rho = psi.projector();
        for keep in [[0usize], [1usize]] {
            let red = rho.partial_trace(&[3, 4], &keep).unwrap();
            prop_assert!((red.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
            prop_assert!(red.is_hermitian());
            let min_eig = red.eig_hermitian().unwrap().eigenvalues[0];
            prop_assert!(min_eig >= -1e-10);
        }
    }

    #[test]
    fn time_state_overlaps_are_contractive(
        raw in prop::collection::vec(0.05f64..2.0, 4),
        s in -5.0f64..5.0,
        t in -5.0f64..5.0,
    ) {
        // strictly ascending spectrum from positive gaps
        let mut freqs = vec![raw[0]];
        for gap in &raw[1..] {
            freqs.push(freqs.last().unwrap() + gap);
        }
        let clock = ClockModel::with_spectrum(freqs).unwrap();
        let overlap = clock.overlap(s, t);
        prop_assert!(overlap.norm() <= 1.0 + 1e-12);
        let direct = clock.time_state(s).inner(&clock.time_state(t));
        prop_assert!((overlap - direct).norm() <= 1e-12);
        prop_assert!(clock.time_state(t).is_normalized());
    }

    #[test]
    fn embedded_site_operators_commute(
        parts_a in prop::collection::vec(-1.0f64..1.0, 8),
        parts_b in prop::collection::vec(-1.0f64..1.0, 18),
    ) {
        let a = pawsim::tensor::embed_local(&hermitian_from(&parts_a, 2), 0, &[2, 3]).unwrap();
        let b = pawsim::tensor::embed_local(&hermitian_from(&parts_b, 3), 1, &[2, 3]).unwrap();
        prop_assert!(a.commutator(&b).max_abs() <= 1e-14);
    }
}
