use plap_core::solver::{minimal_iterate, IterateControls};
use plap_core::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn exact_report(n: f64, n_eig: usize) -> StabilityReport {
    let s = exact_exponential(n, 2.0).unwrap();
    let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
    let g = s.nonlinearity();
    let controls = StabilityControls { n_eig, ..Default::default() };
    stability_report(&prof, |u| g.derivative(u), &controls).unwrap()
}

fn minimal(n: f64, p: f64, lambda: f64, count: usize) -> (RadialProfile, NonlinearitySpec) {
    let spec = ProblemSpec::new(n, p, NonlinearitySpec::exponential(lambda)).unwrap();
    let out = minimal_iterate(&spec, &make_grid(1e-6, count).unwrap(), &IterateControls::default()).unwrap();
    (out.converged().unwrap().clone(), spec.nonlinearity)
}

#[test]
fn sign_change_brackets_ten() {
    let mut last_unstable = 0.0;
    let mut first_stable = f64::INFINITY;
    for n in [6.0, 7.0, 8.0, 9.0, 11.0, 12.0, 13.0] {
        let rep = exact_report(n, 512);
        match rep.verdict {
            Verdict::Unstable => last_unstable = f64::max(last_unstable, n),
            Verdict::SemiStable => first_stable = first_stable.min(n),
            Verdict::Marginal => panic!("marginal verdict at n = {n}"),
        }
    }
    assert_eq!((last_unstable, first_stable), (9.0, 11.0));
}

#[test]
fn semi_stable_verdict_implies_hardy() {
    let rep = exact_report(12.0, 512);
    assert_eq!(rep.verdict, Verdict::SemiStable);
    assert_eq!(rep.hardy_implied, Some(true));
    let sens = rep.sensitivity.unwrap();
    assert_eq!(sens.verdict, Verdict::SemiStable);
}

#[test]
fn eigenvalue_converges_at_second_order() {
    let mus: Vec<f64> = [128, 256, 512, 1024].iter().map(|&k| exact_report(12.0, k).mu_1).collect();
    for w in mus.windows(3) {
        let order = ((w[0] - w[1]) / (w[1] - w[2])).log2();
        assert!(order > 1.9, "observed order {order}");
    }
}

#[test]
fn minimal_solutions_are_semi_stable() {
    for (n, p, lambda) in [(2.0, 2.0, 1.0), (3.0, 2.0, 2.0), (5.0, 3.0, 10.0)] {
        let (prof, g) = minimal(n, p, lambda, 1000);
        let rep = stability_report(&prof, |u| g.derivative(u), &StabilityControls::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::SemiStable, "n = {n}, p = {p}: {}", rep.mu_1);
        assert!(rep.mu_1 > 0.0);
    }
}

#[test]
fn identity_converges_under_refinement() {
    let eta = TestFunctionFamily::sine(1, 1e-3).unwrap();
    let errs: Vec<f64> = [1000, 2000, 4000]
        .iter()
        .map(|&k| {
            let (prof, g) = minimal(2.0, 2.0, 1.0, k);
            lemma21_identity(&prof, &g, &eta, 1e-4).unwrap().rel_err
        })
        .collect();
    assert!(errs[0] < 1e-4);
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 2.0, "{errs:?}");
    }
}

#[test]
fn identity_side_needs_no_nonlinearity() {
    let (prof, g) = minimal(2.0, 2.0, 1.0, 2000);
    let eta = TestFunctionFamily::r_scaled(TestFunctionFamily::sine(2, 1e-3).unwrap());
    let full = lemma21_identity(&prof, &g, &eta, 1e-4).unwrap();
    assert_eq!(full.rhs, lemma21_rhs(&prof, &eta).unwrap());
    assert!(full.rel_err < 1e-4);
}

#[test]
fn random_hardy_family_on_minimal_solution() {
    let (prof, _) = minimal(2.0, 2.0, 1.0, 2000);
    let mut rng = StdRng::seed_from_u64(7);
    let etas: Vec<TestFunctionFamily> = (0..20)
        .map(|i| {
            if i % 2 == 0 {
                TestFunctionFamily::sine(rng.random_range(1..=6), 10f64.powf(rng.random_range(-5.0..-1.0))).unwrap()
            } else {
                TestFunctionFamily::power_cutoff(rng.random_range(0.1..3.0), 10f64.powf(rng.random_range(-5.0..-1.0))).unwrap()
            }
        })
        .collect();
    let res = hardy_inequality_check(&prof, &etas).unwrap();
    assert!(res.iter().all(|h| h.satisfied), "{res:?}");
}

#[test]
fn hat_functions_match_assembly() {
    let s = exact_exponential(10.0, 2.0).unwrap();
    let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
    let g = s.nonlinearity();
    let form = assemble_q(&prof, |u| g.derivative(u), 1e-6, 128, 5).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let x: Vec<f64> = (0..127).map(|_| rng.random_range(-1.0..1.0)).collect();
    let xi = form.function(&x).unwrap();
    let q = q_apply(&prof, |u| g.derivative(u), &xi).unwrap();
    assert!((form.q(&x) - q).abs() <= 1e-12 * q.abs(), "{} vs {q}", form.q(&x));
}
