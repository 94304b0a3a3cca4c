mod common;

use common::*;
use forward_ec::geometry::{projected_gaussian, sample_direction, sample_rho, GradientFrame};
use forward_ec::kernels::{apply_orthogonal, apply_parallel, assemble_direction, reflect};
use forward_ec::linalg::{dot, norm, scale};
use forward_ec::{DirectionLaw, KernelSpec, OrthogonalKernel, Polarity};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

const LAWS: [DirectionLaw; 2] = [DirectionLaw::UniformSphere, DirectionLaw::StandardGaussian];
const P_MIN: f64 = 1e-3;

/// CDF of the parallel component at an event: `P(y_par <= r)` for `r <= 0`.
fn rho_cdf(law: DirectionLaw, dim: usize, r: f64) -> f64 {
    if r >= 0.0 {
        return 1.0;
    }
    match law {
        DirectionLaw::UniformSphere => (1.0 - r * r).max(0.0).powf(0.5 * (dim as f64 - 1.0)),
        DirectionLaw::StandardGaussian => (-0.5 * r * r).exp(),
    }
}

#[test]
fn rho_sampler_matches_closed_form() {
    let mut r = rng(1);
    for law in LAWS {
        for dim in [2, 3, 5, 10, 50] {
            let xs: Vec<f64> = (0..100_000).map(|_| sample_rho(law, dim, &mut r)).collect();
            assert!(xs.iter().all(|v| *v <= 0.0));
            let p = ks_one_sample(xs, |v| rho_cdf(law, dim, v));
            assert!(p > P_MIN, "{} d={dim}: p = {p}", law_name(law));
        }
    }
}

#[test]
fn parallel_kernels_leave_rho_invariant() {
    let mut r = rng(2);
    for law in LAWS {
        for (name, kernel) in parallel_kernels(law) {
            for dim in [3, 5] {
                let xs: Vec<f64> = (0..100_000)
                    .map(|_| {
                        let y = sample_rho(law, dim, &mut r);
                        apply_parallel(&kernel, law, dim, y, &mut r).unwrap()
                    })
                    .collect();
                let p = ks_one_sample(xs, |v| rho_cdf(law, dim, v));
                assert!(p > P_MIN, "{name} {} d={dim}: p = {p}", law_name(law));
            }
        }
    }
}

fn complement_draw(law: DirectionLaw, frame: &GradientFrame, out: &mut [f64], r: &mut impl Rng) {
    projected_gaussian(frame, out, r);
    if law.is_sphere() {
        let n = norm(out);
        scale(1.0 / n, out);
    }
}

fn orthogonal_statistics(
    kernel: &OrthogonalKernel,
    law: DirectionLaw,
    frame: &GradientFrame,
    probe: &[f64],
    n: usize,
    r: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let dim = frame.dim();
    let mut y = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    let mut proj = Vec::with_capacity(n);
    let mut sq = Vec::with_capacity(n);
    for _ in 0..n {
        complement_draw(law, frame, &mut y, r);
        apply_orthogonal(kernel, law, frame, &y, &mut out, r).unwrap();
        assert!(frame.parallel(&out).abs() < 1e-9, "output leaves the complement");
        if law.is_sphere() {
            let m = norm(&out);
            scale(1.0 / m, &mut out);
        }
        proj.push(dot(&out, probe));
        sq.push(dot(&out, &out));
    }
    (proj, sq)
}

#[test]
fn orthogonal_kernels_leave_complement_law_invariant() {
    let mut r = rng(3);
    let n = 50_000;
    for law in LAWS {
        for dim in [3, 5] {
            let grad: Vec<f64> = (0..dim).map(|i| 1.0 + i as f64).collect();
            let frame = GradientFrame::new(&grad).unwrap();
            let mut probe = vec![0.0; dim];
            probe[0] = 1.0;
            frame.project_in_place(&mut probe);
            let m = norm(&probe);
            scale(1.0 / m, &mut probe);

            for (name, spec) in kernel_variants(law).into_iter().filter(|(n, _)| n.starts_with("identity x ")) {
                let (proj, sq) = orthogonal_statistics(&spec.orthogonal, law, &frame, &probe, n, &mut r);
                let p = if law.is_sphere() {
                    let reference: Vec<f64> = (0..n)
                        .map(|_| {
                            let mut y = vec![0.0; dim];
                            complement_draw(law, &frame, &mut y, &mut r);
                            dot(&y, &probe)
                        })
                        .collect();
                    ks_two_sample(proj, reference)
                } else {
                    let normal = Normal::standard();
                    let chi = ChiSquared::new((dim - 1) as f64).unwrap();
                    let p_norm = ks_one_sample(sq, |v| chi.cdf(v));
                    ks_one_sample(proj, |v| normal.cdf(v)).min(p_norm)
                };
                assert!(p > P_MIN, "{name} {} d={dim}: p = {p}", law_name(law));
            }
        }
    }
}

#[test]
fn positive_polarity_never_backtracks() {
    let mut r = rng(4);
    for law in LAWS {
        let dim = 5;
        let grad = [0.3, -1.0, 2.0, 0.5, 0.1];
        let frame = GradientFrame::new(&grad).unwrap();
        let mut y = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        for (name, spec) in kernel_variants(law) {
            if spec.orthogonal.polarity != Polarity::Positive || !name.starts_with("identity x ") {
                continue;
            }
            for _ in 0..100_000 {
                complement_draw(law, &frame, &mut y, &mut r);
                apply_orthogonal(&spec.orthogonal, law, &frame, &y, &mut out, &mut r).unwrap();
                assert!(dot(&y, &out) >= -1e-12, "{name}: <y, y'> = {}", dot(&y, &out));
            }
        }
    }
}

#[test]
fn identity_kernels_reproduce_the_reflection() {
    let mut r = rng(5);
    for law in LAWS {
        let spec = KernelSpec::bps(law);
        for _ in 0..10_000 {
            let dim = r.random_range(2..12);
            let grad: Vec<f64> = (0..dim).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            let frame = GradientFrame::new(&grad).unwrap();
            let mut y = vec![0.0; dim];
            sample_direction(law, &mut y, &mut r);
            if frame.parallel(&y) < 0.0 {
                scale(-1.0, &mut y);
            }
            let mut a = vec![0.0; dim];
            let mut b = vec![0.0; dim];
            assemble_direction(&spec, &frame, &y, &mut a, &mut r).unwrap();
            reflect(&frame, &y, &mut b);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn balance_holds_for_every_variant_at_small_scale() {
    for law in LAWS {
        let grad = [0.7, -1.3, 0.4, 2.0];
        for (i, (name, spec)) in kernel_variants(law).into_iter().enumerate() {
            for (j, term) in balance_check(&spec, &grad, 100_000, 100 + i as u64).iter().enumerate() {
                assert!(term.z() < 4.0, "{name} {} f{j}: {term:?}", law_name(law));
            }
        }
    }
}

#[test]
fn balance_check_rejects_a_kernel_without_reflection() {
    // The check has power: a kernel that skips the sign change of the
    // parallel component (here: the identity map) is rejected.
    let grad = [0.7, -1.3, 0.4, 2.0];
    let law = DirectionLaw::UniformSphere;
    let frame = GradientFrame::new(&grad).unwrap();
    let mut r = rng(6);
    let mut lhs = Tally::default();
    let mut rhs = Tally::default();
    let mut y = vec![0.0; 4];
    for _ in 0..100_000 {
        sample_direction(law, &mut y, &mut r);
        let w = dot(&y, &grad).max(0.0);
        lhs.push(w * frame.parallel(&y));
        sample_direction(law, &mut y, &mut r);
        let w = (-dot(&y, &grad)).max(0.0);
        rhs.push(w * frame.parallel(&y));
    }
    let z = (lhs.mean() - rhs.mean()).abs() / (lhs.se().powi(2) + rhs.se().powi(2)).sqrt();
    assert!(z > 10.0);
}

fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
    let all: Vec<KernelSpec> = LAWS.iter().flat_map(|l| kernel_variants(*l)).map(|(_, s)| s).collect();
    proptest::sample::select(all)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn event_update_points_downhill_and_keeps_sphere_norm(
        spec in spec_strategy(),
        grad in proptest::collection::vec(-5.0f64..5.0, 3..8),
        seed in any::<u64>(),
    ) {
        prop_assume!(norm(&grad) > 1e-3);
        let dim = grad.len();
        let frame = GradientFrame::new(&grad).unwrap();
        let mut r = rng(seed);
        let mut y = vec![0.0; dim];
        sample_direction(spec.law, &mut y, &mut r);
        if frame.parallel(&y) < 0.0 {
            scale(-1.0, &mut y);
        }
        let mut out = vec![0.0; dim];
        assemble_direction(&spec, &frame, &y, &mut out, &mut r).unwrap();
        prop_assert!(out.iter().all(|v| v.is_finite()));
        prop_assert!(dot(&out, &grad) <= 1e-12 * norm(&grad));
        if spec.law.is_sphere() {
            prop_assert!((norm(&out) - 1.0).abs() < 1e-12);
        }
    }
}
