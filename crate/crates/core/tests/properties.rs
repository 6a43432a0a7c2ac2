use std::sync::Arc;

use proptest::prelude::*;

use dilation_lab::families::{generate, Family, GenOptions};
use dilation_lab::linalg::{self, c, kron, max_abs, CMat, CVec};
use dilation_lab::pipeline;
use dilation_lab::{CCRepresentation, CStarAlgebra, Correspondence, LatticePoint, TruncatedFock};

fn lp(v: &[usize]) -> LatticePoint {
    LatticePoint::new(v.to_vec())
}

fn cmat(n: usize, m: usize, v: &[f64]) -> CMat {
    CMat::from_fn(n, m, |i, j| {
        let k = 2 * (i * m + j);
        c(v[k % v.len()], v[(k + 1) % v.len()])
    })
}

/// A scalar correspondence with Gram `ZᴴZ + I/2`.
fn scalar_corr(m: usize, v: &[f64]) -> (Correspondence, CMat) {
    let z = cmat(m, m, v);
    let g = z.adjoint() * &z + linalg::identity(m) * c(0.5, 0.0);
    let e = Correspondence::new(CStarAlgebra::scalars(), m, vec![g.clone()], vec![linalg::identity(m)], vec![linalg::identity(m)])
        .expect("scalar correspondence");
    (e, g)
}

fn rep_of(family: Family, seed: u64, gen_dim: usize, h_dim: usize) -> Arc<CCRepresentation> {
    let inst = generate(family, seed, GenOptions { k: 2, gen_dim, h_dim }).unwrap();
    pipeline::validate_instance(&inst, 1e-10).1.expect("valid").representation
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raw_tensor_gram_is_kron_and_associative(
        (m1, m2, m3) in (1usize..4, 1usize..4, 1usize..3),
        v in coeffs(18), w in coeffs(18), u in coeffs(8),
    ) {
        let (e, ge) = scalar_corr(m1, &v);
        let (f, gf) = scalar_corr(m2, &w);
        let (g, gg) = scalar_corr(m3, &u);
        let ef = e.raw_interior_tensor(&f).unwrap();
        prop_assert!(max_abs(&(ef.embedded_gram() - kron(&ge, &gf))) < 1e-12);
        let left = ef.raw_interior_tensor(&g).unwrap().embedded_gram();
        let right = e.raw_interior_tensor(&f.raw_interior_tensor(&g).unwrap()).unwrap().embedded_gram();
        prop_assert!(max_abs(&(&left - &right)) < 1e-12);
        prop_assert!(max_abs(&(left - kron(&kron(&ge, &gf), &gg))) < 1e-12);
    }

    #[test]
    fn actions_are_adjointable(v in coeffs(25), w in coeffs(25), a in coeffs(10)) {
        let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
        let e = Correspondence::algebra_itself(&alg);
        let ee = e.raw_interior_tensor(&e).unwrap();
        let n = ee.dim();
        let x = CVec::from_fn(n, |i, _| c(v[i % v.len()], v[(i + 7) % v.len()]));
        let y = CVec::from_fn(n, |i, _| c(w[i % w.len()], w[(i + 3) % w.len()]));
        let a = alg.element((0..alg.dim()).map(|p| c(a[2 * p], a[2 * p + 1])).collect()).unwrap();
        let lhs = ee.inner(&(ee.left(&a) * &x), &y);
        let rhs = ee.inner(&x, &(ee.left(&a.adjoint()) * &y));
        prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
        let lhs = ee.inner(&x, &(ee.right(&a) * &y));
        let rhs = ee.inner(&x, &y).mul(&a).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
    }

    #[test]
    fn inner_product_is_positive(v in coeffs(25)) {
        let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
        let e = Correspondence::algebra_itself(&alg);
        let ee = e.raw_interior_tensor(&e).unwrap();
        let x = CVec::from_fn(ee.dim(), |i, _| c(v[i % v.len()], v[(i * 3 + 1) % v.len()]));
        prop_assert!(ee.inner(&x, &x).is_positive(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hat_operators_are_contractions(seed in 0u64..1000, d in 1usize..4) {
        for rep in [
            rep_of(Family::RandomContractive, seed, 1, d),
            rep_of(Family::ScalarCommuting, seed, 1, d),
            rep_of(Family::MultiplicationIsometric, seed, 1, 2 * d),
        ] {
            let space = TruncatedFock::new(rep, lp(&[2, 2])).unwrap();
            for s in space.bound().box_points() {
                prop_assert!(space.hat(&s).unwrap().norm() <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn hat_semigroup_holds_on_random_instances(seed in 0u64..1000) {
        let rep = rep_of(Family::RandomContractive, seed, 1, 2);
        let space = TruncatedFock::new(rep, lp(&[2, 2])).unwrap();
        let pts = space.bound().box_points();
        for s in &pts {
            for t in &pts {
                prop_assert!(space.check_hat_semigroup(s, t).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn multiplications_are_unitary_and_associative(seed in 0u64..1000, m in 1usize..3) {
        let pts = [lp(&[1, 0]), lp(&[0, 1]), lp(&[1, 1])];
        for rep in [
            rep_of(Family::DiagonalDoublyCommuting, seed, m, 1),
            rep_of(Family::MultiplicationIsometric, seed, 1, 2),
        ] {
            let sys = rep.system();
            for s in &pts {
                for t in &pts {
                    prop_assert!(sys.mult_unitarity_residual(s, t).unwrap() < 1e-10);
                    for r in &pts {
                        prop_assert!(sys.check_associativity(s, t, r).unwrap() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn raw_tensor_associativity_over_a_direct_sum() {
    let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
    let e = Correspondence::algebra_itself(&alg);
    let left = e.raw_interior_tensor(&e).unwrap().raw_interior_tensor(&e).unwrap();
    let right = e.raw_interior_tensor(&e.raw_interior_tensor(&e).unwrap()).unwrap();
    assert!(max_abs(&(left.embedded_gram() - right.embedded_gram())) < 1e-12);
}

#[test]
fn localizing_the_algebra_over_itself_gives_the_representation_space() {
    // A ⊗_σ ℂᵈ ≅ ℂᵈ for the faithful representation of A = ℂ ⊕ M₂
    let alg = CStarAlgebra::new(vec![1, 2]).unwrap();
    let e = Correspondence::algebra_itself(&alg);
    let sigma = dilation_lab::AlgebraRepresentation::faithful(&alg);
    let loc = e.localize(&sigma, 1e-10).unwrap();
    assert_eq!(loc.rank(), sigma.dim());
    // and the balanced tensor A ⊗_A A collapses to A
    let (q, _) = e.interior_tensor(&e, 1e-10).unwrap();
    assert_eq!(q.dim(), alg.dim());
}
