//! Check sections shared by the `verify`, `model` and `partner` commands.

use intertwine::intertwine::{
    build_partners, build_partners_with, completeness_check, corollary_n2_decomposition,
    kernel_equivalence_check, map_eigenfamily, nu_values, partner_alpha, partner_beta,
    selfadjointness_equivalence, spectral_inclusion_check, transport_residuals,
    verify_commutation_suite, verify_intertwining, EigenFamily, IntertwinePair, Scope,
};
use intertwine::linalg::{
    distance, eig_general, eig_hermitian, inverse, sqrt_positive, Matrix, Tolerances, C64,
};
use intertwine::models::{
    make_oscillator, make_pseudoboson, make_quon, pseudoboson_verify, quon_partner_expectations,
    Direction, PseudoBosonSystem, MAX_PSEUDOBOSON_DIM,
};
use intertwine::random::{
    aligned_riesz_generator, commuting_instance, kernel_instance, random_kernel, riesz_generator,
    InstanceRng,
};
use intertwine::riesz::{
    biorthogonal_criterion, build_riesz, corollary_riesz_transport, dual_basis,
    frame_inequality_check, nogo_check, resolution_identity_check, riesz_from_pseudohermitian,
};
use intertwine::Error;

use crate::report::{complex_nums, nums, Num, Pair, Report};

/// Condition-number cap for pseudo-boson generators.
pub const PSEUDOBOSON_KAPPA: f64 = 10.0;
/// Condition-number cap for random Riesz generators.
pub const RIESZ_KAPPA: f64 = 50.0;
const RIESZ_INSTANCES: usize = 5;
const LEMMA_INSTANCES: usize = 6;
const FRAME_SAMPLES: usize = 200;

/// Independent stream per section so sections do not perturb each other.
pub fn section_rng(seed: u64, section: u64) -> InstanceRng {
    InstanceRng::seed(seed ^ section.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn family_of(theta: &Matrix, tol: &Tolerances) -> Result<EigenFamily, Error> {
    if theta.hermiticity_defect() <= tol.commute_tol {
        Ok(EigenFamily::from_hermitian(&eig_hermitian(theta, tol)?))
    } else {
        Ok(EigenFamily::from_general(&eig_general(theta, tol)?))
    }
}

/// Builds the partner of `theta1` along `x` and records intertwining,
/// spectral inclusion and self-adjointness checks under `prefix`.
pub fn partner_section(report: &mut Report, prefix: &str, theta1: &Matrix, x: &Matrix, tol: &Tolerances) {
    let name = |s: &str| format!("{prefix}.{s}");
    let pair = match build_partners(theta1, x, tol) {
        Ok(p) => p,
        Err(Error::CommutatorTooLarge { defect }) => {
            report.at_most(name("commutator_n1_theta1"), defect, tol.commute_tol);
            return;
        }
        Err(e) => return report.error(name("build"), e),
    };
    report.at_most(name("commutator_n1_theta1"), pair.diagnostics["commutator_n1_theta1"], tol.commute_tol);
    report.diagnostic(name("pseudo_inverse_used"), if pair.pseudo_inverse_used() { 1.0 } else { 0.0 });
    let iv = verify_intertwining(&pair, tol);
    report.at_most(name("intertwining_left"), iv.left, tol.residual_tol);
    report.at_most(name("intertwining_right"), iv.right, tol.residual_tol);

    let fam1 = match family_of(theta1, tol) {
        Ok(f) => f,
        Err(e) => return report.error(name("theta1_eigensystem"), e),
    };
    report.eigenvalues.insert(name("theta1"), complex_nums(fam1.eigenvalues()));
    report.nu.insert(prefix.to_string(), nums(&nu_values(x, &fam1)));
    match map_eigenfamily(x, &fam1, tol) {
        Ok(tr) => {
            report.kernel_sets.insert(prefix.to_string(), tr.dropped.clone());
            if tr.family.is_empty() {
                report.skip(name("spectral_inclusion"), "no transported eigenvectors");
            } else {
                match spectral_inclusion_check(&pair, &tr.family, tol) {
                    Ok(inc) => {
                        report.eigenvalues.insert(name("theta2"), complex_nums(&inc.theta2_eigenvalues));
                        report.matched_pairs.insert(prefix.to_string(), inc.pairs.iter().map(Pair::from).collect());
                        report.at_most(name("spectral_inclusion"), inc.max_distance(), inc.threshold);
                    }
                    Err(e) => report.error(name("spectral_inclusion"), e),
                }
            }
        }
        Err(e) => report.error(name("transport"), e),
    }
    match selfadjointness_equivalence(&pair, tol) {
        Ok(sa) => {
            report.diagnostic(name("hermiticity_theta1"), sa.delta1);
            report.diagnostic(name("hermiticity_theta2"), sa.delta2);
            report.holds(name("selfadjointness_agrees"), sa.pass);
        }
        Err(Error::SingularN2) => report.skip(name("selfadjointness_agrees"), "N2 is singular"),
        Err(e) => report.error(name("selfadjointness_agrees"), e),
    }
    report.theta2 = Some(pair.theta2.to_json());
}

fn record_commutation(report: &mut Report, name: String, pair: &IntertwinePair, tol: &Tolerances) {
    match verify_commutation_suite(pair, tol) {
        Ok(c) => report.at_most(name, c.max(), tol.residual_tol),
        Err(Error::SingularN2) => report.skip(name, "N2 is singular"),
        Err(e) => report.error(name, e),
    }
}

/// Both intertwiners of the truncated oscillator.
pub fn oscillator_section(report: &mut Report, d: usize, tol: &Tolerances) {
    let osc = match make_oscillator(d) {
        Ok(o) => o,
        Err(e) => return report.error("oscillator.build", e),
    };
    let band = tol.band(d);
    let fam1 = osc.number_family();
    let id = Matrix::identity(d);
    let cases = [
        ("raise", osc.raise.clone(), &osc.h1 + &id, 0),
        ("lower", osc.lower.clone(), &osc.h1 - &id, 1),
    ];
    for (dir, x, expected, lo) in cases {
        let name = |s: &str| format!("oscillator.{dir}.{s}");
        let pair = match build_partners(&osc.h1, &x, tol) {
            Ok(p) => p,
            Err(e) => {
                report.error(name("build"), e);
                continue;
            }
        };
        let scale = expected.compress_range(lo, band).norm().max(1.0);
        let block = (&pair.theta2 - &expected).compress_range(lo, band).norm() / scale;
        report.at_most(name("theta2_closed_form"), block, tol.residual_tol);
        let iv = verify_intertwining(&pair, tol);
        report.at_most(name("intertwining_left"), iv.left, tol.residual_tol);
        report.at_most(name("intertwining_right"), iv.right, tol.residual_tol);

        let kernel = kernel_equivalence_check(&x, &fam1, tol);
        report.holds(name("kernel_sets_agree"), kernel.consistent);
        report.kernel_sets.insert(format!("oscillator.{dir}"), kernel.ker_x_adjoint.clone());
        report.nu.insert(format!("oscillator.{dir}"), nums(&nu_values(&x, &fam1)));

        let tr = match map_eigenfamily(&x, &fam1, tol) {
            Ok(t) => t,
            Err(e) => {
                report.error(name("transport"), e);
                continue;
            }
        };
        let comp = completeness_check(&tr.family, d, tol);
        report.diagnostic(name("f2_rank"), comp.rank as f64);
        report.holds(name("completeness_matches_n2"), comp.matches_n2(&pair.n2, tol));
        let trr = transport_residuals(&pair, &tr.family);
        report.at_most(name("transport_theta2"), trr.theta2_eigen_residual, tol.residual_tol);
        report.at_most(name("transport_n2"), trr.n2_eigen_residual, tol.residual_tol);
        match spectral_inclusion_check(&pair, &tr.family, tol) {
            Ok(inc) => {
                report.eigenvalues.insert(name("theta2"), complex_nums(&inc.theta2_eigenvalues));
                report.matched_pairs.insert(format!("oscillator.{dir}"), inc.pairs.iter().map(Pair::from).collect());
                report.at_most(name("spectral_inclusion"), inc.max_distance(), inc.threshold);
            }
            Err(e) => report.error(name("spectral_inclusion"), e),
        }
        record_commutation(report, name("commutation_suite"), &pair, tol);
        if dir == "raise" {
            match corollary_n2_decomposition(&tr.family, &pair.n2, Scope::Leading(band), tol) {
                Ok(c) => {
                    report.at_most(name("n2_projector_sum"), c.projector_sum, tol.residual_tol);
                    report.at_most(name("n2_weighted_sum"), c.weighted_sum, tol.residual_tol);
                }
                Err(e) => report.error(name("n2_decomposition"), e),
            }
        } else {
            report.skip(name("n2_decomposition"), "N2 = a†a is singular on every leading block");
        }
    }
    report.eigenvalues.insert("oscillator.h1".into(), complex_nums(osc.number_family().eigenvalues()));
}

/// Closed forms of the quon partners at `q`.
pub fn quon_section(report: &mut Report, d: usize, q: f64, tol: &Tolerances) {
    let sys = match make_quon(d, q) {
        Ok(s) => s,
        Err(e) => return report.error("quon.build", e),
    };
    let band = tol.band(d);
    match eig_hermitian(&sys.h1, tol) {
        Ok(eig) => {
            let closed: Vec<f64> = (0..d)
                .map(|n| if q == 1.0 { n as f64 } else { (1.0 - q.powi(n as i32)) / (1.0 - q) })
                .collect();
            let gap = (0..band).map(|n| (eig.eigenvalues[n] - closed[n]).abs()).fold(0.0, f64::max);
            let scale = closed[band - 1].max(1.0);
            report.at_most("quon.spectrum_closed_form", gap / scale, tol.residual_tol);
            report.eigenvalues.insert("quon.h1".into(), eig.eigenvalues.iter().map(|e| [Num(*e), Num(0.0)]).collect());
        }
        Err(e) => report.error("quon.spectrum_closed_form", e),
    }
    let qc = &sys.q_commutator().leading_block(d - 1) - &Matrix::identity(d - 1);
    report.at_most("quon.q_commutator_block", qc.norm(), tol.residual_tol);

    let fam1 = sys.family();
    for dir in [Direction::Raise, Direction::Lower] {
        let tag = dir.as_str();
        let name = |s: &str| format!("quon.{tag}.{s}");
        if dir == Direction::Lower && q <= tol.rank_tol {
            report.skip(format!("quon.{tag}"), "lower direction needs q > rank_tol");
            continue;
        }
        match quon_partner_expectations(&sys, dir, tol) {
            Ok(r) => {
                report.at_most(name("theta2_closed_form"), r.relative_residual, tol.residual_tol);
                match dir {
                    Direction::Raise => report.holds(name("n2_block_invertible"), r.n2_block_invertible),
                    Direction::Lower => report.holds(
                        name("n2_singular_pseudo_inverse"),
                        !r.n2_full_invertible && r.mode == intertwine::intertwine::PartnerMode::BetaPseudoinverse,
                    ),
                }
            }
            Err(e) => report.error(name("theta2_closed_form"), e),
        }
        let x = match dir {
            Direction::Raise => sys.b.adjoint(),
            Direction::Lower => sys.b.clone(),
        };
        let pair = match build_partners(&sys.h1, &x, tol) {
            Ok(p) => p,
            Err(e) => {
                report.error(name("build"), e);
                continue;
            }
        };
        let iv = verify_intertwining(&pair, tol);
        report.at_most(name("intertwining_left"), iv.left, tol.residual_tol);
        report.at_most(name("intertwining_right"), iv.right, tol.residual_tol);
        record_commutation(report, name("commutation_suite"), &pair, tol);
        report.nu.insert(format!("quon.{tag}"), nums(&nu_values(&x, &fam1)));
        let tr = match map_eigenfamily(&x, &fam1, tol) {
            Ok(t) => t,
            Err(e) => {
                report.error(name("transport"), e);
                continue;
            }
        };
        report.kernel_sets.insert(format!("quon.{tag}"), tr.dropped.clone());
        let comp = completeness_check(&tr.family, d, tol);
        report.holds(name("completeness_matches_n2"), comp.matches_n2(&pair.n2, tol));
        let trr = transport_residuals(&pair, &tr.family);
        report.at_most(name("transport_theta2"), trr.theta2_eigen_residual, tol.residual_tol);
        if dir == Direction::Raise {
            match corollary_n2_decomposition(&tr.family, &pair.n2, Scope::Leading(band), tol) {
                Ok(c) => {
                    report.at_most(name("n2_projector_sum"), c.projector_sum, tol.residual_tol);
                    report.at_most(name("n2_weighted_sum"), c.weighted_sum, tol.residual_tol);
                }
                Err(Error::DegenerateNu(idx)) => {
                    report.skip(name("n2_decomposition"), format!("degenerate nu at {idx:?}"))
                }
                Err(e) => report.error(name("n2_decomposition"), e),
            }
        }
    }
}

/// Pseudo-boson generator drawn from the seed.
pub fn pseudoboson_generator(seed: u64, d: usize) -> Matrix {
    riesz_generator(&mut section_rng(seed, 3), d, PSEUDOBOSON_KAPPA)
}

pub fn pseudoboson_section(report: &mut Report, d: usize, seed: u64, tol: &Tolerances) -> Option<PseudoBosonSystem> {
    if d > MAX_PSEUDOBOSON_DIM {
        report.skip("pseudoboson", format!("dimension capped at {MAX_PSEUDOBOSON_DIM}"));
        return None;
    }
    let sys = match make_pseudoboson(&pseudoboson_generator(seed, d), tol) {
        Ok(s) => s,
        Err(e) => {
            report.error("pseudoboson.build", e);
            return None;
        }
    };
    let (a, b) = sys.basis.bounds;
    report.frame_bounds.insert("pseudoboson".into(), [Num(a), Num(b)]);
    report.diagnostic("pseudoboson.condition_number", sys.basis.condition_number);
    match pseudoboson_verify(&sys, tol) {
        Ok(r) => {
            for (k, v) in &r.residuals {
                report.at_most(format!("pseudoboson.{k}"), *v, tol.residual_tol);
            }
            let radius = (d - 1) as f64;
            report.at_most("pseudoboson.spectrum_contains_ladder", r.spectrum_gap, tol.residual_tol * radius);
            report.diagnostic("pseudoboson.nogo_hypothesis_defect", r.nogo_hypothesis_defect);
            report.diagnostic("pseudoboson.theta2_theta1_distance", r.theta_distance);
            report.eigenvalues.insert("pseudoboson.theta1".into(), complex_nums(&r.theta1_eigenvalues));
        }
        Err(e) => report.error("pseudoboson.verify", e),
    }
    match build_partners_with(&sys.theta1, &sys.s, tol, true) {
        Ok(pair) => match selfadjointness_equivalence(&pair, tol) {
            Ok(sa) => report.holds("pseudoboson.selfadjointness_agrees", sa.pass),
            Err(e) => report.error("pseudoboson.selfadjointness_agrees", e),
        },
        Err(e) => report.error("pseudoboson.selfadjointness_agrees", e),
    }
    let similar = sqrt_positive(&sys.s, tol).and_then(|root| riesz_from_pseudohermitian(&sys.theta1, &root, tol));
    match similar {
        Ok(r) => {
            let gap = r.eigenvalues.iter().enumerate().map(|(n, e)| (e - n as f64).abs()).fold(0.0, f64::max);
            report.at_most("pseudoboson.similar_form_spectrum", gap, tol.residual_tol * (d - 1) as f64);
        }
        Err(e) => report.error("pseudoboson.similar_form_spectrum", e),
    }
    Some(sys)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Random Riesz bases: duals, resolutions of the identity, frame bounds and
/// the biorthogonality criterion.
pub fn riesz_section(report: &mut Report, d: usize, seed: u64, tol: &Tolerances) {
    let mut rng = section_rng(seed, 4);
    let (mut bio, mut res1, mut res2, mut viol, mut qf, mut dd) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    let mut criterion = true;
    for _ in 0..RIESZ_INSTANCES {
        let basis = match build_riesz(&riesz_generator(&mut rng, d, RIESZ_KAPPA), tol) {
            Ok(b) => b,
            Err(e) => return report.error("riesz.build", e),
        };
        let dual = dual_basis(&basis);
        bio.push(dual.biorthogonality_defect);
        let r = resolution_identity_check(&basis, &dual, tol);
        res1.push(r.dual_first);
        res2.push(r.primal_first);
        match frame_inequality_check(&basis, FRAME_SAMPLES, &mut rng, tol) {
            Ok(f) => {
                viol.push(f.bound_violation / basis.bounds.1);
                qf.push(f.quadratic_form_gap / basis.bounds.1);
            }
            Err(e) => return report.error("riesz.frame_inequality", e),
        }
        match dual.as_riesz(tol) {
            Ok(db) => {
                let back = dual_basis(&db);
                dd.push(max_of(back.vectors.iter().zip(&basis.vectors).map(|(u, v)| (u - v).norm() / v.norm())));
            }
            Err(e) => return report.error("riesz.dual_of_dual", e),
        }
        for x in [inverse(&basis.frame_op, tol), Ok(Matrix::identity(d))] {
            match x.and_then(|x| biorthogonal_criterion(&basis, &x, tol)) {
                Ok(c) => criterion &= c.consistent,
                Err(e) => return report.error("riesz.biorthogonal_criterion", e),
            }
        }
    }
    report.at_most("riesz.biorthogonality", max_of(bio.into_iter()), tol.residual_tol);
    report.at_most("riesz.resolution_dual_first", max_of(res1.into_iter()), tol.residual_tol);
    report.at_most("riesz.resolution_primal_first", max_of(res2.into_iter()), tol.residual_tol);
    report.at_most("riesz.frame_bound_violation", max_of(viol.into_iter()), tol.residual_tol);
    report.at_most("riesz.frame_quadratic_form", max_of(qf.into_iter()), tol.residual_tol);
    report.at_most("riesz.dual_of_dual", max_of(dd.into_iter()), tol.residual_tol);
    report.holds("riesz.biorthogonal_criterion_consistent", criterion);
}

/// Random instances for the kernel, completeness, self-adjointness,
/// commutation, no-go and pseudo-hermiticity results.
pub fn lemma_section(report: &mut Report, d: usize, seed: u64, tol: &Tolerances) {
    let mut rng = section_rng(seed, 5);
    let mut kernels_ok = true;
    let mut completeness_ok = true;
    for _ in 0..LEMMA_INSTANCES {
        let kernel = random_kernel(&mut rng, d);
        let inst = kernel_instance(&mut rng, d, &kernel);
        let fam = match EigenFamily::sequential(inst.eigenvectors.clone(), inst.eigenvalues.clone()) {
            Ok(f) => f,
            Err(e) => return report.error("lemma.kernel_instance", e),
        };
        let k = kernel_equivalence_check(&inst.x, &fam, tol);
        kernels_ok &= k.consistent && k.ker_x_adjoint == kernel;
        match (map_eigenfamily(&inst.x, &fam, tol), build_partners(&inst.theta1, &inst.x, tol)) {
            (Ok(tr), Ok(pair)) => completeness_ok &= completeness_check(&tr.family, d, tol).matches_n2(&pair.n2, tol),
            (Err(e), _) | (_, Err(e)) => return report.error("lemma.completeness_matches_n2", e),
        }
    }
    report.holds("lemma.kernel_sets_agree", kernels_ok);
    report.holds("lemma.completeness_matches_n2", completeness_ok);

    let mut sa_ok = true;
    let (mut comm, mut ab) = (vec![], vec![]);
    for i in 0..LEMMA_INSTANCES {
        let inst = commuting_instance(&mut rng, d, i % 2 == 0);
        let pair = match build_partners(&inst.theta1, &inst.x, tol) {
            Ok(p) => p,
            Err(e) => return report.error("lemma.commuting_instance", e),
        };
        match selfadjointness_equivalence(&pair, tol) {
            Ok(sa) => sa_ok &= sa.pass && sa.hermitian1 == inst.hermitian_theta,
            Err(e) => return report.error("lemma.selfadjointness_agrees", e),
        }
        match verify_commutation_suite(&pair, tol) {
            Ok(c) => comm.push(c.max()),
            Err(e) => return report.error("lemma.commutation_suite", e),
        }
        match (partner_alpha(&inst.theta1, &inst.x, tol), partner_beta(&inst.theta1, &inst.x, tol)) {
            (Ok(a), Ok(b)) => ab.push(distance(&a, &b)),
            (Err(e), _) | (_, Err(e)) => return report.error("lemma.alpha_beta_agree", e),
        }
    }
    report.holds("lemma.selfadjointness_agrees", sa_ok);
    report.at_most("lemma.commutation_suite", max_of(comm.into_iter()), tol.residual_tol);
    report.at_most("lemma.alpha_beta_agree", max_of(ab.into_iter()), tol.residual_tol);

    let (mut nogo_dist, mut nogo_overlap) = (vec![], vec![]);
    for _ in 0..3 {
        let basis = match build_riesz(&aligned_riesz_generator(&mut rng, d), tol) {
            Ok(b) => b,
            Err(e) => return report.error("lemma.nogo", e),
        };
        let c: Vec<C64> = (0..3).map(|_| C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect();
        match nogo_check(&basis, &basis.frame_op.polynomial(&c), tol) {
            Ok(r) => {
                nogo_dist.push(r.theta_distance);
                nogo_overlap.push(1.0 - r.min_overlap);
            }
            Err(e) => return report.error("lemma.nogo", e),
        }
    }
    report.at_most("lemma.nogo_theta2_equals_theta1", max_of(nogo_dist.into_iter()), tol.residual_tol);
    report.at_most("lemma.nogo_parallel_vectors", max_of(nogo_overlap.into_iter()), tol.residual_tol);

    let t = riesz_generator(&mut rng, d, PSEUDOBOSON_KAPPA);
    let diag: Vec<f64> = (0..d).map(|n| n as f64).collect();
    let theta = inverse(&t, tol).map(|ti| &(&t * &Matrix::from_real_diagonal(&diag)) * &ti);
    match theta.and_then(|th| riesz_from_pseudohermitian(&th, &t, tol).map(|r| (th, r))) {
        Ok((th, r)) => {
            let gap = r.eigenvalues.iter().zip(&diag).map(|(e, x)| (e - x).abs()).fold(0.0, f64::max);
            report.at_most("lemma.pseudohermitian_spectrum", gap, tol.residual_tol * (d - 1).max(1) as f64);
            report.at_most("lemma.pseudohermitian_eigen_residual", r.residual, tol.residual_tol);
            let x = rng.unitary(d);
            match corollary_riesz_transport(&th, &t, &x, tol) {
                Ok(c) => {
                    report.at_most("lemma.riesz_transport_eigen_residual", c.theta2_eigen_residual, tol.residual_tol);
                    report.at_most("lemma.riesz_transport_real_spectrum", c.max_imaginary, tol.residual_tol * (d - 1) as f64);
                }
                Err(e) => report.error("lemma.riesz_transport_eigen_residual", e),
            }
        }
        Err(e) => report.error("lemma.pseudohermitian_spectrum", e),
    }
}
