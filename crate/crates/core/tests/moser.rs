use std::f64::consts::PI;

use proptest::prelude::*;

use tm_core::mesh::{refine, ring_disk};
use tm_core::moser::{
    criticality_probe, inner_disk_exponential, moser_grad_norm, moser_integral_first, moser_integral_second,
    moser_radial, moser_radial_derivative, moser_radial_grad_norm_sq,
};
use tm_core::quadrature::{gauss_legendre, radial_integrate, AdaptiveOptions};

/// `S(j)` with the annulus mapped by `s = log(d/r)` and summed by composite Gauss-Legendre.
fn probe_oracle(alpha: f64, gamma: f64, d: f64, j: u32) -> f64 {
    let p = 2.0 - gamma;
    let l = (j as f64).ln();
    // omega_j^2 = log j / 2 pi on the inner disk
    let inner = 2.0 * PI * d.powf(p) / p * (j as f64).powf(alpha / (2.0 * PI) - p);
    let (x, w) = gauss_legendre(20);
    let panels = 400;
    let h = l / panels as f64;
    let mut annulus = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let s = a + 0.5 * h * (1.0 + xi);
            annulus += 0.5 * h * wi * (alpha * s * s / (2.0 * PI * l) - p * s).exp();
        }
    }
    inner + 2.0 * PI * d.powf(p) * annulus
}

fn increments(s: &[f64]) -> Vec<f64> {
    s.windows(2).map(|w| w[1] - w[0]).collect()
}

#[test]
fn continuity_at_the_kinks() {
    for &j in &[2u32, 4, 16, 64, 4096] {
        for &d in &[0.5f64, 1.0, 3.0] {
            for (i, &r) in [d / j as f64, d].iter().enumerate() {
                let h = 1e-9 * d;
                let jump = (moser_radial(r - h, j, d) - moser_radial(r + h, j, d)).abs();
                assert!(jump < 1e-6, "j {j} d {d} kink {i}: {jump}");
            }
        }
    }
}

#[test]
fn profile_is_continuous_on_a_dense_grid() {
    let (j, d) = (8u32, 1.0);
    let n = 1000;
    let lip = 1.0 / ((d / j as f64) * (2.0 * PI * (j as f64).ln()).sqrt());
    for i in 0..n {
        let (a, b) = (1.2 * d * i as f64 / n as f64, 1.2 * d * (i + 1) as f64 / n as f64);
        assert!((moser_radial(a, j, d) - moser_radial(b, j, d)).abs() <= lip * (b - a) * (1.0 + 1e-12));
    }
}

#[test]
fn interpolant_norm_converges() {
    let mut mesh = ring_disk(1.0, 4);
    let coarse = (moser_grad_norm(4, 1.0, &mesh).unwrap() - 1.0).abs();
    assert!(coarse < 0.05);
    mesh = refine(&refine(&mesh));
    let fine = (moser_grad_norm(4, 1.0, &mesh).unwrap() - 1.0).abs();
    assert!(fine <= 0.5 * coarse, "{coarse} -> {fine}");
}

#[test]
fn critical_probe_is_bounded_and_matches_oracle() {
    let js: Vec<u32> = (1..=12).map(|k| 1u32 << k).collect();
    for &(alpha, gamma) in &[(4.0 * PI, 0.0), (2.0 * PI, 1.0), (2.0 * PI, 0.5)] {
        let probe = criticality_probe(alpha, gamma, 1.0, &js).unwrap();
        assert!(probe.critical);
        for row in &probe.rows {
            let o = probe_oracle(alpha, gamma, 1.0, row.j);
            assert!((row.s - o).abs() < 1e-8 * o, "j {}: {} vs {o}", row.j, row.s);
        }
        // every tail increase is at most 0.8 of the previous step, so S stays bounded
        let inc = increments(&probe.rows.iter().map(|r| r.s).collect::<Vec<_>>());
        let tail = &inc[inc.len() - 4..];
        assert!(tail.windows(2).all(|w| w[1] <= 0.8 * w[0].abs()), "{inc:?}");
    }
}

#[test]
fn supercritical_probe_grows() {
    let js: Vec<u32> = (1..=12).map(|k| 1u32 << k).collect();
    let probe = criticality_probe(5.0 * PI, 0.0, 1.0, &js).unwrap();
    assert!(!probe.critical);
    assert!(probe.is_increasing());
    let inc = increments(&probe.rows.iter().map(|r| r.s).collect::<Vec<_>>());
    assert!(inc[inc.len() - 4..].windows(2).all(|w| w[1] > w[0]), "{inc:?}");
    let o = probe_oracle(5.0 * PI, 0.0, 1.0, 4096);
    assert!((probe.at(4096).unwrap() - o).abs() < 1e-8 * o);
}

#[test]
fn inner_disk_matches_direct_evaluation() {
    let (t, j, d, gamma, alpha) = (0.8, 16u32, 1.3f64, 0.5, 3.0 * PI);
    let direct = 2.0 * PI * d.powf(2.0 - gamma) / (2.0 - gamma) * (j as f64).powf(-(2.0 - gamma))
        * (alpha * t * t * moser_radial(0.0, j, d).powi(2)).exp();
    assert!((inner_disk_exponential(t, j, d, gamma, alpha).unwrap() - direct).abs() < 1e-12 * direct);
    assert_eq!(inner_disk_exponential(1e3, j, d, gamma, alpha).unwrap(), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_match_radial_quadrature(j in 2u32..200, gamma in 0.0f64..1.9, d in 0.2f64..3.0) {
        let opts = AdaptiveOptions::default().with_breakpoints(vec![d / j as f64]);
        let first = radial_integrate(|r| moser_radial(r, j, d), d, gamma, &opts).unwrap();
        let second = radial_integrate(|r| moser_radial(r, j, d).powi(2), d, gamma, &opts).unwrap();
        let cf = moser_integral_first(j, d, gamma).unwrap();
        let cs = moser_integral_second(j, d, gamma).unwrap();
        prop_assert!(((first - cf) / cf).abs() < 1e-8);
        prop_assert!(((second - cs) / cs).abs() < 1e-8);
    }

    #[test]
    fn dirichlet_norm_is_one(j in 2u32..100_000, d in 0.1f64..10.0) {
        prop_assert!((moser_radial_grad_norm_sq(j, d).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn derivative_matches_differences(j in 2u32..64, frac in 0.01f64..0.99) {
        let d = 1.0;
        let (lo, hi) = (d / j as f64, d);
        let r = lo + frac * (hi - lo);
        let h = 1e-6 * (hi - lo).min(r - lo).min(hi - r).max(1e-9);
        let fd = (moser_radial(r + h, j, d) - moser_radial(r - h, j, d)) / (2.0 * h);
        let exact = moser_radial_derivative(r, j, d);
        prop_assert!((fd - exact).abs() < 1e-5 * exact.abs());
    }
}
