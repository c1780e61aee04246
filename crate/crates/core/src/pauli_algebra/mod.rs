//! Sparse Pauli-string operator algebra, norms and power-law certificates.

mod certificate;
mod norms;
mod string;
mod sum;

pub use certificate::{certificate_from_norms, powerlaw_certificate, CertificateReport, PowerLawSpec};
pub use norms::{local_norm, operator_norm, LocalNorm, NormMethod, SupportNorms, EXACT_TERM_SUPPORT};
pub use string::{Pauli, PauliString, MAX_SITES};
pub use sum::{adjoint_power, OperatorSum};

/// Default cap on intermediate term counts in nested commutators.
pub const DEFAULT_TERM_CAP: usize = 1 << 22;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_backend::{max_entry_difference, to_matrix};
    use crate::scalar::{c_abs, c_i, c_real, cplx};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn op(s: &str, c: f64) -> OperatorSum<f64> {
        OperatorSum::term(c_real(c), PauliString::parse(s).unwrap())
    }

    fn random_sum(seed: u64, n: usize, terms: usize) -> OperatorSum<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mask = (1u64 << n) - 1;
        OperatorSum::from_terms((0..terms).map(|_| {
            (
                PauliString::from_masks(rng.gen::<u64>() & mask, rng.gen::<u64>() & mask),
                cplx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
            )
        }))
    }

    #[test]
    fn commutator_examples() {
        let c = op("X0", 1.0).commutator(&op("Z0", 1.0));
        assert_eq!(c, op("Y0", 1.0).scale(c_i::<f64>() * -2.0));
        assert!(op("X0 X1", 1.0).commutator(&op("Z3", 1.0)).is_zero());
        let c = op("Z0", 1.0).commutator(&op("X0 X1", 1.0));
        assert_eq!(c, op("Y0 X1", 1.0).scale(c_i::<f64>() * 2.0));
    }

    #[test]
    fn adjoint_power_examples() {
        let z = op("Z0", 1.0);
        let x = op("X0", 1.0);
        assert_eq!(adjoint_power(&z, &x, 0, 10).unwrap(), x);
        assert_eq!(adjoint_power(&z, &x, 2, 10).unwrap(), op("X0", 4.0));
        for k in 0..8 {
            let a = adjoint_power(&z, &x, k, 10).unwrap();
            let n = operator_norm(&a, NormMethod::Exact).unwrap();
            assert!((n - 2f64.powi(k as i32)).abs() < 1e-9);
        }
        assert!(adjoint_power(&z, &op("X1", 1.0), 1, 10).unwrap().is_zero());
    }

    #[test]
    fn adjoint_power_cap() {
        let mut h = OperatorSum::zero();
        for i in 0..8 {
            h = &h + &op(&format!("X{i}"), 1.0);
            h = &h + &op(&format!("Z{i} Z{}", (i + 1) % 8), 1.0);
        }
        let err = adjoint_power(&h, &op("Z0", 1.0), 12, 50).unwrap_err();
        assert!(matches!(err, crate::error::Error::Resource(ref m) if m.contains("depth")));
    }

    #[test]
    fn canonical_form_is_unique() {
        let a = &(&op("X0", 1.0) + &op("Z1", 2.0)) + &op("X0", -1.0);
        let b = &op("Z1", 1.5) + &op("Z1", 0.5);
        assert_eq!(a, b);
        let tiny = op("Y2", 1e-13);
        assert!(tiny.is_zero());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn jacobi_identity(seed in 0u64..100_000) {
            let a = random_sum(seed, 4, 5);
            let b = random_sum(seed ^ 0xabc, 4, 5);
            let c = random_sum(seed ^ 0x123, 4, 5);
            let j = &(&a.commutator(&b.commutator(&c)) + &b.commutator(&c.commutator(&a))) + &c.commutator(&a.commutator(&b));
            prop_assert!(j.terms().iter().all(|t| c_abs(t.1) < 1e-12));
        }

        #[test]
        fn commutator_matches_dense(seed in 0u64..100_000, n in 1usize..=6) {
            let a = random_sum(seed, n, 6);
            let b = random_sum(seed + 99, n, 6);
            let sites: Vec<usize> = (0..n).collect();
            let ma = to_matrix(&a, &sites).unwrap().matrix;
            let mb = to_matrix(&b, &sites).unwrap().matrix;
            let mc = to_matrix(&a.commutator(&b), &sites).unwrap().matrix;
            prop_assert!(max_entry_difference(&mc, &(&ma * &mb - &mb * &ma)) < 1e-12);
            let mp = to_matrix(&a.product(&b), &sites).unwrap().matrix;
            prop_assert!(max_entry_difference(&mp, &(&ma * &mb)) < 1e-12);
        }

        #[test]
        fn exact_norm_below_upper(seed in 0u64..100_000) {
            let a = random_sum(seed, 5, 7);
            let e = operator_norm(&a, NormMethod::Exact).unwrap();
            let u = operator_norm(&a, NormMethod::Upper).unwrap();
            prop_assert!(e <= u + 1e-12);
        }

        #[test]
        fn antisymmetric_and_bilinear(seed in 0u64..100_000, s in -3.0f64..3.0) {
            let a = random_sum(seed, 4, 4);
            let b = random_sum(seed + 5, 4, 4);
            let c = random_sum(seed + 9, 4, 4);
            let ab = a.commutator(&b);
            prop_assert!((&ab + &b.commutator(&a)).is_zero());
            let lhs = a.commutator(&(&b.scale_real(s) + &c));
            let rhs = &ab.scale_real(s) + &a.commutator(&c);
            prop_assert!((&lhs - &rhs).terms().iter().all(|t| c_abs(t.1) < 1e-12));
        }
    }
}
