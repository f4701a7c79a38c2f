use std::f64::consts::PI;

use proptest::prelude::*;

use tm_core::energy::energy;
use tm_core::mesh::{ring_disk, DomainSpec};
use tm_core::minimax::{
    mountain_pass_endpoint, mountain_pass_solve, random_smooth_fields, ridge_derivative, ridge_scan, ridge_value, select_j0,
    sphere_infimum, PathOptions, RidgeOptions, SphereOptions,
};
use tm_core::moser::moser_interpolant;
use tm_core::nonlinearity::{Family, NonlinearitySpec, ProblemSpec};
use tm_core::spectral::assemble;

fn canonical() -> (ProblemSpec, NonlinearitySpec) {
    let problem = ProblemSpec::new(4.0 * PI, 0.0, DomainSpec::disk(1.0)).unwrap();
    (problem, NonlinearitySpec::rational(1.0, 4.0 * PI).unwrap())
}

#[test]
fn profile_thresholds_are_exact() {
    for &(alpha, gamma, expected) in &[(4.0 * PI, 0.0, 0.5), (2.0 * PI, 1.0, 0.5), (PI, 0.0, 2.0)] {
        let problem = ProblemSpec::new(alpha, gamma, DomainSpec::disk(1.0)).unwrap();
        let spec = NonlinearitySpec::rational(1.0, alpha).unwrap();
        let p = &ridge_scan(&[2], &problem, &spec, &RidgeOptions::default()).unwrap()[0];
        assert_eq!(p.threshold, expected);
    }
}

#[test]
fn mountain_pass_level_is_stable_under_path_refinement() {
    let (problem, spec) = canonical();
    let forms = assemble(&ring_disk(1.0, 6), 0.0).unwrap();
    let profiles = ridge_scan(&(2..=16).collect::<Vec<_>>(), &problem, &spec, &RidgeOptions::default()).unwrap();
    let j = select_j0(&profiles).unwrap();
    let omega = moser_interpolant(forms.space(), j, 1.0).unwrap();
    let end = mountain_pass_endpoint(&omega, &forms, &spec, 0.05).unwrap();
    assert!(end.energy <= 0.0);
    let mut maxima = Vec::new();
    for &points in &[16usize, 32, 64] {
        let opts = PathOptions { path_points: points, ..PathOptions::default() };
        let res = mountain_pass_solve(&end.field, &forms, &problem, &spec, &opts).unwrap();
        assert!(res.residual_norm < opts.tol);
        assert!(res.weak_identity < opts.tol * res.norm);
        let e = energy(&res.field, &forms, &spec).unwrap();
        assert!((res.level - (e.quadratic - e.potential)).abs() < 1e-10);
        assert!((res.level - (0.5 * forms.norm_sq(&res.field) - e.potential)).abs() < 1e-10);
        assert!(res.level > 0.0 && res.below_threshold);
        maxima.push(res.path_max.unwrap());
    }
    for w in maxima.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "{maxima:?}");
    }
}

#[test]
fn short_paths_and_positive_endpoints_are_rejected() {
    let (problem, spec) = canonical();
    let forms = assemble(&ring_disk(1.0, 4), 0.0).unwrap();
    let omega = moser_interpolant(forms.space(), 2, 1.0).unwrap();
    let small = omega.scaled(0.01);
    let opts = PathOptions { path_points: 8, ..PathOptions::default() };
    assert!(mountain_pass_solve(&small, &forms, &problem, &spec, &opts).is_err());
    assert!(mountain_pass_solve(&small, &forms, &problem, &spec, &PathOptions::default()).is_err());
}

#[test]
fn zero_nonlinearity_has_no_endpoint() {
    let forms = assemble(&ring_disk(1.0, 4), 0.0).unwrap();
    let spec = NonlinearitySpec::rational(0.0, 4.0 * PI).unwrap();
    let omega = moser_interpolant(forms.space(), 2, 1.0).unwrap();
    assert!(mountain_pass_endpoint(&omega, &forms, &spec, 0.05).is_err());
}

#[test]
fn sphere_minimum_bounds_its_own_samples() {
    let (_, spec) = canonical();
    let forms = assemble(&ring_disk(1.0, 6), 0.0).unwrap();
    let opts = SphereOptions { samples: 40, seed: 17 };
    let rho = 0.05;
    let s = sphere_infimum(&forms, &spec, rho, &opts, None, &[]).unwrap();
    assert!(s.min > 0.0 && s.upper_bound);
    for u in random_smooth_fields(&forms, opts.samples, opts.seed) {
        let e = energy(&u.scaled(rho / forms.norm(&u)), &forms, &spec).unwrap().total;
        assert!(e >= s.min - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ridge_derivative_matches_differences(j in 2u32..64, frac in 0.05f64..0.95, which in 0usize..3) {
        let (problem, _) = canonical();
        let family = match which {
            0 => Family::Rational { beta0: 1.0 },
            1 => Family::SignPerturbed { beta0: 1.0, nu: 3.0 },
            _ => Family::ShiftedQuadratic { beta0: 1.0, a: 6.0 },
        };
        let spec = NonlinearitySpec::new(family, problem.alpha).unwrap();
        let t = frac * problem.t0();
        let h = 1e-5;
        let fd = (ridge_value(t + h, j, &problem, &spec).unwrap() - ridge_value(t - h, j, &problem, &spec).unwrap()) / (2.0 * h);
        let d = ridge_derivative(t, j, &problem, &spec).unwrap();
        prop_assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "fd {} exact {}", fd, d);
    }
}
