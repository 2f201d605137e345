//! Structural invariants as property tests.

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use operad_forge::formality::{perturbed_structure, rescale, theta_construct, verify_theta, LambdaFamily};
use operad_forge::graded::{all_perms, compose, inverse, identity_perm, koszul_sign, perm_sign, SnModule};
use operad_forge::hochschild::{brace, cup, gerst_bracket, hochschild_differential, Cochain};
use operad_forge::koszul::{check_oinfinity, oinfinity_from_algebra, Truncation};
use operad_forge::linalg::{q, RationalMatrix, Q};
use operad_forge::polyvector::{polyvector_algebra, PolyKey, PolyvectorField};

fn matrix() -> impl Strategy<Value = RationalMatrix> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-3i64..=3, c), r).prop_map(|rows| RationalMatrix::from_i64(&rows))
    })
}

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle()
}

fn cochain(bound: i64) -> impl Strategy<Value = Cochain> {
    (any::<u64>(), 0usize..=2, -1i64..=1).prop_map(move |(seed, n, w)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Cochain::random(&mut rng, 1, n, w, bound, 0.6)
    })
}

fn sign(e: i64) -> Q {
    if e.rem_euclid(2) == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

fn diff(a: &Cochain, b: &Cochain) -> Cochain {
    a.add_scaled(b, &-Q::one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_nullity(m in matrix()) {
        let k = m.kernel_basis();
        prop_assert_eq!(m.rank() + k.dim(), m.ncols());
        for v in k.vectors() {
            prop_assert!(m.mul_vec(v).is_empty());
        }
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn solve_recovers_image_vectors(m in matrix(), seed in proptest::collection::vec(-2i64..=2, 5)) {
        let x: Vec<(usize, Q)> = (0..m.ncols()).filter(|&i| seed[i] != 0).map(|i| (i, q(seed[i]))).collect();
        let b = m.mul_vec(&x);
        let sol = m.solve(&b).expect("b is in the image");
        let sparse: Vec<(usize, Q)> = sol.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
        prop_assert_eq!(m.mul_vec(&sparse), b);
    }

    #[test]
    fn sign_is_a_homomorphism(a in perm(5), b in perm(5)) {
        prop_assert_eq!(perm_sign(&compose(&a, &b)), perm_sign(&a) * perm_sign(&b));
        prop_assert_eq!(compose(&a, &inverse(&a)), identity_perm(5));
    }

    #[test]
    fn koszul_sign_of_even_degrees_is_trivial(p in perm(4), degs in proptest::collection::vec(-3i64..=3, 4)) {
        let even: Vec<i64> = degs.iter().map(|d| 2 * d).collect();
        prop_assert_eq!(koszul_sign(&p, &even), 1);
        // all odd: the Koszul sign is the permutation sign
        let odd: Vec<i64> = degs.iter().map(|d| 2 * d + 1).collect();
        prop_assert_eq!(koszul_sign(&p, &odd), perm_sign(&p));
    }

    #[test]
    fn hochschild_d_squares_to_zero(f in cochain(4)) {
        let dd = hochschild_differential(&hochschild_differential(&f).unwrap()).unwrap();
        prop_assert!(dd.is_zero());
    }

    #[test]
    fn d_is_a_derivation_of_cup(f in cochain(4), g in cochain(4)) {
        // d(f ∪ g) = df ∪ g + (−1)^{n_f} f ∪ dg
        let lhs = hochschild_differential(&cup(&f, &g)).unwrap();
        let a = cup(&hochschild_differential(&f).unwrap(), &g);
        let b = cup(&f, &hochschild_differential(&g).unwrap());
        let rhs = a.add_scaled(&b, &sign(f.arity as i64));
        prop_assert!(diff(&lhs, &rhs).is_zero());
    }

    #[test]
    fn cup_is_associative(f in cochain(4), g in cochain(4), h in cochain(4)) {
        prop_assert!(diff(&cup(&cup(&f, &g), &h), &cup(&f, &cup(&g, &h))).is_zero());
    }

    #[test]
    fn bracket_is_graded_antisymmetric(f in cochain(4), g in cochain(4)) {
        prop_assume!(f.arity + g.arity > 0);
        let fg = gerst_bracket(&f, &g).unwrap();
        let gf = gerst_bracket(&g, &f).unwrap();
        prop_assert!(fg.add_scaled(&gf, &sign(f.degree() * g.degree())).is_zero());
    }

    #[test]
    fn empty_brace_is_identity(f in cochain(4)) {
        prop_assert!(diff(&brace(&f, &[]).unwrap(), &f).is_zero());
    }

    #[test]
    fn schouten_is_graded_antisymmetric(a in proptest::collection::vec((0u32..3, 0u32..3, 0u32..4, -2i64..=2), 1..4),
                                        b in proptest::collection::vec((0u32..3, 0u32..3, 0u32..4, -2i64..=2), 1..4),
                                        p in 0u32..3, r in 0u32..3) {
        // homogeneous fields of exterior degree p and r on two variables
        let field = |terms: &[(u32, u32, u32, i64)], deg: u32| {
            let masks: Vec<u32> = (0..4u32).filter(|m| m.count_ones() == deg).collect();
            let mut f = PolyvectorField::zero(2);
            for &(x, y, m, c) in terms {
                f.add_term(PolyKey::new(vec![x, y], masks[m as usize % masks.len()]), q(c));
            }
            f
        };
        let (pf, rf) = (field(&a, p), field(&b, r));
        let lhs = pf.schouten(&rf);
        let s = if ((p as i64 - 1) * (r as i64 - 1)).rem_euclid(2) == 1 { Q::one() } else { -Q::one() };
        prop_assert_eq!(lhs, rf.schouten(&pf).scale(&s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn perturbations_are_trivialized(seed in any::<u64>(), lambda in -3i64..=3) {
        let alg = polyvector_algebra(1, 2);
        let strict = oinfinity_from_algebra(&alg, Truncation { filt_bound: 2, arity_bound: 3 });
        let p = perturbed_structure(&strict, seed);
        let mut r = rescale(&p, &q(lambda)).unwrap();
        prop_assert!(check_oinfinity(&mut r));
        let f = LambdaFamily::new(p, None).unwrap();
        let t = theta_construct(&f).unwrap();
        prop_assert!(verify_theta(&t, &f));
    }
}

#[test]
fn regular_representation_characters() {
    for n in 1..=4 {
        let m = SnModule::regular(n);
        assert!(m.satisfies_coxeter());
        for p in all_perms(n) {
            let expected = if p == identity_perm(n) { (1..=n).product::<usize>() as i64 } else { 0 };
            assert_eq!(m.character(&p), q(expected));
        }
    }
}
