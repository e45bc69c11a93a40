use num_complex::Complex64;

use super::*;
use crate::decomp::decompose;
use crate::flags::Projection;
use crate::generate::{commuting_pair, gaussian, strictly_upper, triangular};
use crate::holo::parse;
use crate::linalg::Matrix;

fn cfg() -> Config {
    Config::default()
}

fn t2() -> Matrix {
    Matrix::from_real(&[&[1.0, 1.0], &[0.0, 2.0]])
}

fn t3() -> Matrix {
    Matrix::from_real(&[&[1.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 3.0]])
}

fn assert_pass(c: &CheckResult) {
    assert!(c.passed(), "{}\n{}", c.summary(), serde_json::to_string(c).unwrap());
}

#[test]
fn theorem_i_small_examples() {
    let h = parse("z^2").unwrap();
    let c = check_theorem_i(&t2(), &h, &cfg()).unwrap();
    assert_pass(&c);
    assert!(c.residuals.iter().all(|r| r.value <= 1e-9), "{c:?}");
    let d = decompose(&t3(), OrderingTag::ModulusArgument).unwrap();
    let qh = &(&t3() * &t3()) - &crate::holo::calc_normal(&d.n_part, &h).unwrap();
    let want = Matrix::from_real(&[&[0.0, 3.0, 1.0], &[0.0, 0.0, 5.0], &[0.0, 0.0, 0.0]]);
    assert!((&qh - &want).norm_fro() < 1e-13);
    assert_pass(&check_theorem_i(&t3(), &h, &cfg()).unwrap());
}

#[test]
fn theorem_i_normal_input_has_tiny_q_h() {
    let t = crate::generate::spectral(&mut rng(2), 6).matrix;
    let c = check_theorem_i(&t, &parse("exp(z)").unwrap(), &cfg()).unwrap();
    assert_pass(&c);
    let norm = c.metrics.iter().find(|(k, _)| k == "norm_q_h").unwrap().1;
    assert!(norm < 1e-10, "{norm}");
}

#[test]
fn theorem_ii_examples() {
    assert_pass(&check_theorem_ii(&t2(), &cfg()).unwrap());
    let mut t = strictly_upper(&mut rng(1), 5, 1.0);
    for i in 0..5 {
        t[(i, i)] = Complex64::new(1.0, 0.0);
    }
    assert_pass(&check_theorem_ii(&t, &cfg()).unwrap());
    let nil = strictly_upper(&mut rng(2), 4, 1.0);
    assert!(matches!(check_theorem_ii(&nil, &cfg()), Err(Error::ZeroInSupport { .. })));
}

#[test]
fn lemma_invs_examples() {
    let n = Matrix::from_real_diag(&[1.0, 2.0]);
    let q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let c = check_lemma_invs(&n, &q, &cfg()).unwrap();
    assert_pass(&c);
    assert_eq!(c.get("identity").unwrap().value, 0.0);
    assert_pass(&check_lemma_invs(&n, &Matrix::zeros(2, 2), &cfg()).unwrap());
    let n = triangular(&mut rng(5), 8).matrix.shift(Complex64::new(-3.0, 0.0));
    let ni = crate::linalg::inverse(&n).unwrap().norm2();
    let g = gaussian(&mut rng(6), 8, 8, 1.0);
    let q = g.scale_real(0.4 / (ni * g.norm2()));
    assert_pass(&check_lemma_invs(&n, &q, &cfg()).unwrap());
    let nilpotent = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert!(matches!(
        check_lemma_invs(&Matrix::zeros(2, 2), &nilpotent, &cfg()),
        Err(Error::SingularMatrix { .. })
    ));
}

#[test]
fn lemma_aq_examples() {
    let q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let a = Matrix::from_real_diag(&[2.0, 3.0]);
    assert!(matches!(check_lemma_aq(&a, &q, &cfg()), Err(Error::NotCommuting { .. })));
    let q = strictly_upper(&mut rng(3), 6, 1.0);
    let a = Matrix::scalar(6, Complex64::new(0.5, 0.5));
    assert_pass(&check_lemma_aq(&a, &q, &cfg()).unwrap());
    let (a, q) = aq_pair(&mut rng(4), 12);
    assert_pass(&check_lemma_aq(&a, &q, &cfg()).unwrap());
}

#[test]
fn lemma_aq_rejects_non_nilpotent() {
    let q = Matrix::from_real(&[&[1.0, 1.0], &[0.0, 0.0]]);
    assert!(matches!(
        check_lemma_aq(&Matrix::identity(2), &q, &cfg()),
        Err(Error::NotNilpotent { .. })
    ));
}

#[test]
fn lemma_aq_in_rotated_basis() {
    let (a, q) = aq_pair(&mut rng(9), 6);
    let u = crate::generate::random_unitary(&mut rng(10), 6);
    assert_pass(&check_lemma_aq(&a.expand(&u), &q.expand(&u), &cfg()).unwrap());
}

#[test]
fn prop_commuting_examples() {
    let h2 = parse("z^2").unwrap();
    let c = check_prop_commuting(&Matrix::from_real_diag(&[1.0, 2.0]), &Matrix::zeros(2, 2), &h2, &cfg()).unwrap();
    assert_pass(&c);
    let q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert_pass(&check_prop_commuting(&Matrix::identity(2), &q, &h2, &cfg()).unwrap());
    let n = Matrix::from_real_diag(&[1.0, 1.0, 2.0]);
    let q = Matrix::from_real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
    assert_pass(&check_prop_commuting(&n, &q, &parse("exp(z)").unwrap(), &cfg()).unwrap());
}

#[test]
fn prop_commuting_random_pairs() {
    for seed in 0..4 {
        let (n, q, _) = commuting_pair(&mut rng(seed), 9);
        for src in ["z^3 - 2*z + 1", "exp(z)"] {
            assert_pass(&check_prop_commuting(&n, &q, &parse(src).unwrap(), &cfg()).unwrap());
        }
    }
}

#[test]
fn prop_commuting_rejects_non_commuting() {
    let n = Matrix::from_real_diag(&[1.0, 2.0]);
    let q = Matrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert!(matches!(
        check_prop_commuting(&n, &q, &parse("z").unwrap(), &cfg()),
        Err(Error::NotCommuting { .. })
    ));
}

#[test]
fn lemma_htinv_examples() {
    let t = triangular(&mut rng(8), 6).triangular;
    let p = Projection::coordinate(6, 3).unwrap();
    let c = check_lemma_htinv(&t, &p, &parse("z^2").unwrap(), &cfg()).unwrap();
    assert_pass(&c);
    assert!(c.residuals.iter().all(|r| r.value <= 1e-9), "{c:?}");
    let p0 = Projection::coordinate(6, 0).unwrap();
    assert!(matches!(
        check_lemma_htinv(&t, &p0, &parse("z").unwrap(), &cfg()),
        Err(Error::TrivialProjection)
    ));
    let p1 = Projection::coordinate(2, 1).unwrap();
    assert_pass(&check_lemma_htinv(&t2(), &p1, &parse("1/(z-3)").unwrap(), &cfg()).unwrap());
    let lower = Projection::coordinate(2, 1).unwrap().complement();
    assert!(matches!(
        check_lemma_htinv(&t2(), &lower, &parse("z").unwrap(), &cfg()),
        Err(Error::NotInvariant { .. })
    ));
}

#[test]
fn lemma_einv_htexp_examples() {
    let h = parse("z^2").unwrap();
    let tri = triangular(&mut rng(11), 5).triangular;
    let maximal = Flag::maximal(Matrix::identity(5)).unwrap();
    assert_pass(&check_lemma_einv_htexp(&tri, &maximal, &h, &cfg()).unwrap());
    assert_pass(&check_lemma_einv_htexp(&tri, &Flag::trivial(5), &h, &cfg()).unwrap());
    let f = Flag::new(Matrix::identity(3), vec![0, 2, 3]).unwrap();
    let c = check_lemma_einv_htexp(&t3(), &f, &h, &cfg()).unwrap();
    assert_pass(&c);
    let e = exp_onto_blocks_of(&t3(), &f);
    assert_eq!(e, Matrix::from_real(&[&[1.0, 1.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]));
}

fn exp_onto_blocks_of(t: &Matrix, f: &Flag) -> Matrix {
    crate::flags::exp_onto_blocks(t, f)
}

#[test]
fn lemma_22_examples() {
    let f = Flag::maximal(Matrix::identity(2)).unwrap();
    let c = check_lemma_22(&t2(), &f, 20, 3, &cfg()).unwrap();
    assert_pass(&c);
    assert!(c.get("fk_determinant").unwrap().value < 1e-14);
    let normal = crate::generate::spectral(&mut rng(3), 6);
    let f = random_coarse_flag(&mut rng(4), normal.basis.clone()).unwrap();
    assert_pass(&check_lemma_22(&normal.matrix, &f, 20, 5, &cfg()).unwrap());
    let p = triangular(&mut rng(12), 16);
    let f = random_coarse_flag(&mut rng(13), p.basis.clone()).unwrap();
    assert_pass(&check_lemma_22(&p.matrix, &f, 20, 6, &cfg()).unwrap());
}

#[test]
fn suite_examples() {
    let h2 = parse("z^2").unwrap();
    let normal = crate::generate::spectral(&mut rng(1), 5).matrix;
    let report = run_suite(&normal, &h2, &cfg(), 1);
    assert!(report.passed(), "{}", report.to_json());
    let report = run_suite(&t2(), &h2, &cfg(), 2);
    assert!(report.checks.iter().all(CheckResult::passed), "{}", report.to_json());
    let nil = strictly_upper(&mut rng(3), 4, 1.0);
    let report = run_suite(&nil, &parse("exp(z)").unwrap(), &cfg(), 3);
    assert!(report.passed(), "{}", report.to_json());
    let skipped: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.status() == Status::Skipped)
        .map(|c| c.name.as_str())
        .collect();
    assert!(skipped.contains(&"theorem_ii"), "{skipped:?}");
}

#[test]
fn suite_is_deterministic_and_ordered() {
    let t = triangular(&mut rng(21), 8).matrix;
    let h = parse("exp(z)").unwrap();
    let a = run_suite(&t, &h, &cfg(), 99);
    let b = run_suite(&t, &h, &cfg(), 99);
    assert_eq!(a.without_timings().to_json(), b.without_timings().to_json());
    let names: Vec<&str> = a.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, SUITE);
    assert!(a.to_json().contains("timings_ms"));
    assert!(!a.without_timings().to_json().contains("timings_ms"));
}

#[test]
fn passed_iff_all_residuals_within_tolerance() {
    let mut c = CheckResult::new("x");
    c.residual("a", 1.0, 2.0);
    assert!(c.passed());
    c.residual("b", f64::NAN, 1.0);
    assert!(!c.passed());
    assert_eq!(c.tolerance(), Some(1.0));
    let c = c.with_replay(&[("T", &t2())]);
    let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(v["status"], "failed");
    assert_eq!(v["replay"]["T"]["n"], 2);
}

#[test]
fn tolerance_scale_applies() {
    let loose = Config {
        tol_scale: 10.0,
        ..cfg()
    };
    let c = check_theorem_i(&t2(), &parse("z^2").unwrap(), &loose).unwrap();
    assert!(c.residuals.iter().all(|r| r.tolerance >= 1e-7));
}

#[test]
fn fingerprint_tracks_content() {
    let a = Fingerprint::of(&t2());
    let mut m = t2();
    m[(0, 1)] = Complex64::new(1.0 + f64::EPSILON, 0.0);
    let b = Fingerprint::of(&m);
    assert_eq!(a.n, 2);
    assert_eq!(a.sha256.len(), 64);
    assert_ne!(a.sha256, b.sha256);
}

#[test]
fn coarse_flags_have_two_to_five_blocks() {
    let mut r = rng(7);
    for n in [2, 3, 8, 20] {
        for _ in 0..20 {
            let f = random_coarse_flag(&mut r, Matrix::identity(n)).unwrap();
            assert!((2..=5.min(n)).contains(&f.blocks()), "{:?}", f.cuts());
        }
    }
}
