use proptest::prelude::*;

use noma_radcom::{ComplexVector, HermitianMatrix, C64};

fn vector(n: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| ComplexVector::new(v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap())
}

fn psd(n: usize) -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec(vector(n), 1..=n)
        .prop_map(move |vs| vs.iter().fold(HermitianMatrix::zeros(n), |acc, v| acc.add(&v.outer())))
}

proptest! {
    #[test]
    fn quad_form_is_inner_with_outer_product(w in psd(4), v in vector(4)) {
        let a = w.quad_form(&v);
        let b = w.inner(&v.outer());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(a >= -1e-12);
    }

    #[test]
    fn spectral_norm_bounded_by_trace(w in psd(5)) {
        let s = w.spectral_norm().unwrap();
        let t = w.trace();
        prop_assert!(s <= t * (1.0 + 1e-12));
        prop_assert!(s * 5.0 >= t * (1.0 - 1e-12));
        let r = w.rank_one_residual().unwrap();
        prop_assert!((r - (t - s)).abs() <= 1e-10 * t);
    }

    #[test]
    fn phase_does_not_change_outer_product(v in vector(3), phi in -3.2f64..3.2) {
        let rotated = v.scale(C64::from_polar(1.0, phi));
        prop_assert!(rotated.outer().sub(&v.outer()).frobenius_norm() <= 1e-12 * v.norm_sqr().max(1.0));
    }
}
