use intertwine::intertwine::{
    build_partners, completeness_check, kernel_equivalence_check, map_eigenfamily, nu_values,
    partner_alpha, partner_beta, simple_nu_consequences, spectral_inclusion_check,
    synthesize_from_spectrum, transport_residuals, EigenFamily,
};
use intertwine::linalg::{
    distance, eig_hermitian, inner, inverse, numerical_rank, re, svd, Matrix, Tolerances, C64,
};
use intertwine::models::{make_oscillator, make_pseudoboson, make_quon};
use intertwine::random::{commuting_instance, kernel_instance, riesz_generator, InstanceRng};
use intertwine::riesz::{biorthogonal_criterion, build_riesz, dual_basis, pseudo_hermiticity_check};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn with_kernel(rng: &mut InstanceRng, d: usize, kernel: &[usize]) -> (Matrix, Matrix, EigenFamily) {
    let inst = kernel_instance(rng, d, kernel);
    let fam = EigenFamily::sequential(inst.eigenvectors, inst.eigenvalues).unwrap();
    (inst.theta1, inst.x, fam)
}

fn kernel_strategy() -> impl Strategy<Value = (u64, usize, Vec<usize>)> {
    (any::<u64>(), 4usize..9).prop_flat_map(|(seed, d)| {
        (Just(seed), Just(d), proptest::sample::subsequence((0..d).collect::<Vec<_>>(), 0..d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_sets_coincide((seed, d, kernel) in kernel_strategy()) {
        let mut rng = InstanceRng::seed(seed);
        let (_, x, fam) = with_kernel(&mut rng, d, &kernel);
        let r = kernel_equivalence_check(&x, &fam, &tol());
        prop_assert!(r.consistent);
        prop_assert_eq!(r.ker_x_adjoint, kernel);
    }

    #[test]
    fn completeness_iff_n2_invertible((seed, d, kernel) in kernel_strategy()) {
        let mut rng = InstanceRng::seed(seed);
        let (theta1, x, fam) = with_kernel(&mut rng, d, &kernel);
        let t = tol();
        let tr = map_eigenfamily(&x, &fam, &t).unwrap();
        prop_assert_eq!(&tr.dropped, &kernel);
        let pair = build_partners(&theta1, &x, &t).unwrap();
        let c = completeness_check(&tr.family, d, &t);
        prop_assert_eq!(c.complete, inverse(&pair.n2, &t).is_ok());
        prop_assert_eq!(c.rank, d - kernel.len());
        if !tr.family.is_empty() {
            let rep = transport_residuals(&pair, &tr.family);
            prop_assert!(rep.theta2_eigen_residual <= t.residual_tol);
            prop_assert!(rep.n2_eigen_residual <= t.residual_tol);
            let inc = spectral_inclusion_check(&pair, &tr.family, &t).unwrap();
            prop_assert!(inc.all_matched);
        }
    }

    #[test]
    fn nu_positive_exactly_on_transported((seed, d, kernel) in kernel_strategy()) {
        let mut rng = InstanceRng::seed(seed);
        let (_, x, fam) = with_kernel(&mut rng, d, &kernel);
        let nu = nu_values(&x, &fam);
        for (n, v) in nu.iter().enumerate() {
            prop_assert!(*v >= 0.0);
            prop_assert_eq!(*v > 1e-12, !kernel.contains(&n));
        }
    }

    #[test]
    fn alpha_and_beta_agree(seed in any::<u64>(), d in 3usize..9, herm in any::<bool>()) {
        let t = tol();
        let inst = commuting_instance(&mut InstanceRng::seed(seed), d, herm);
        let a = partner_alpha(&inst.theta1, &inst.x, &t).unwrap();
        let b = partner_beta(&inst.theta1, &inst.x, &t).unwrap();
        prop_assert!(distance(&a, &b) <= t.residual_tol);
    }

    #[test]
    fn simple_nu_forces_normality(seed in any::<u64>(), d in 3usize..8) {
        let t = tol();
        let inst = commuting_instance(&mut InstanceRng::seed(seed), d, false);
        let eig = eig_hermitian(&inst.h, &t).unwrap();
        let eps: Vec<C64> = eig.eigenvectors.iter().map(|v| inner(v, &inst.theta1.apply(v))).collect();
        let fam = EigenFamily::sequential(eig.eigenvectors.clone(), eps).unwrap();
        let nu = nu_values(&inst.x, &fam);
        let fam = fam.with_nu(nu, &t).unwrap();
        let rep = simple_nu_consequences(&inst.theta1, &fam, &t).unwrap();
        for (_, r) in &rep.adjoint_residuals {
            prop_assert!(*r <= t.residual_tol);
        }
        if let Some(defect) = rep.normality_defect {
            prop_assert!(defect <= t.residual_tol);
        }
    }

    #[test]
    fn frame_form_between_bounds(seed in any::<u64>(), d in 2usize..11) {
        let t = tol();
        let mut rng = InstanceRng::seed(seed);
        let b = build_riesz(&riesz_generator(&mut rng, d, 50.0), &t).unwrap();
        let f = rng.unit_vector(d);
        let form = inner(&f, &b.frame_op.apply(&f)).re;
        let slack = 1e-12 * b.bounds.1;
        prop_assert!(b.bounds.0 - slack <= form && form <= b.bounds.1 + slack);
        prop_assert!((b.frame_sum(&f) - form).abs() <= slack);
    }

    #[test]
    fn dual_of_dual_is_original(seed in any::<u64>(), d in 2usize..11) {
        let t = tol();
        let b = build_riesz(&riesz_generator(&mut InstanceRng::seed(seed), d, 50.0), &t).unwrap();
        let dd = dual_basis(&dual_basis(&b).as_riesz(&t).unwrap());
        for (u, v) in dd.vectors.iter().zip(&b.vectors) {
            prop_assert!((u - v).norm() <= t.residual_tol * v.norm());
        }
    }

    #[test]
    fn biorthogonal_directions_agree(seed in any::<u64>(), d in 2usize..9, which in 0usize..3) {
        let t = tol();
        let mut rng = InstanceRng::seed(seed);
        let b = build_riesz(&riesz_generator(&mut rng, d, 20.0), &t).unwrap();
        let s_inv = inverse(&b.frame_op, &t).unwrap();
        let x = match which {
            0 => s_inv,
            1 => s_inv.scale_re(rng.uniform(1.5, 3.0)),
            _ => rng.ginibre(d),
        };
        let r = biorthogonal_criterion(&b, &x, &t).unwrap();
        prop_assert!(r.consistent);
        prop_assert_eq!(r.a, which == 0);
    }

    #[test]
    fn real_spectrum_synthesis_is_pseudo_hermitian(seed in any::<u64>(), d in 2usize..9) {
        let t = tol();
        let mut rng = InstanceRng::seed(seed);
        let b = build_riesz(&riesz_generator(&mut rng, d, 10.0), &t).unwrap();
        let dual = dual_basis(&b);
        let eps: Vec<C64> = (0..d).map(|_| re(rng.uniform(-2.0, 2.0))).collect();
        let m = synthesize_from_spectrum(&eps, &b.vectors, &dual.vectors, &t).unwrap();
        let s_inv = inverse(&b.frame_op, &t).unwrap();
        prop_assert!(pseudo_hermiticity_check(&m, &s_inv, &t).unwrap().pass);
    }

    #[test]
    fn pseudoboson_second_family_is_dual(seed in any::<u64>(), d in 3usize..11) {
        let t = tol();
        let sys = make_pseudoboson(&riesz_generator(&mut InstanceRng::seed(seed), d, 5.0), &t).unwrap();
        let s_inv = inverse(&sys.s, &t).unwrap();
        for (u, v) in sys.f2.vectors().iter().zip(sys.f1.vectors()) {
            prop_assert!((u - s_inv.apply(v)).norm() <= t.residual_tol * u.norm());
        }
    }

    #[test]
    fn quon_at_one_matches_oscillator(d in 3usize..20) {
        let q = make_quon(d, 1.0).unwrap();
        let o = make_oscillator(d).unwrap();
        prop_assert!((&q.b - &o.lower).max_abs() <= 1e-13);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), d in 1usize..10, rank in 0usize..10) {
        let m = InstanceRng::seed(seed).rank_deficient(d, rank.min(d));
        let dec = svd(m.inner());
        let s: Vec<C64> = dec.singular_values.iter().map(|x| re(*x)).collect();
        let back = &dec.u * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * dec.v.adjoint();
        prop_assert!((back - m.inner()).norm() <= 1e-12 * m.norm().max(1.0));
        prop_assert_eq!(numerical_rank(m.inner(), &tol()), rank.min(d));
    }

    #[test]
    fn matrix_json_round_trip(seed in any::<u64>(), d in 1usize..8) {
        let m = InstanceRng::seed(seed).ginibre(d);
        let back = Matrix::from_json_str(&m.to_json_string()).unwrap();
        prop_assert_eq!(back, m);
    }
}
