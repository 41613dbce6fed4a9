mod common;

use common::{cn_setup, cn_volume, cn_volume_partial, load_problem};
use kstab::stability::{semistability_scan, test_config_futaki, Overall, DEFAULT_SCAN_TOLERANCE};
use kstab::groebner::FlatLimitOptions;
use kstab::volume::{
    decay_fit, minimize_volume, richardson, weighted_volume, MinimizeOptions, Sample, VolumeMethod, VolumeModel,
    DEFAULT_SCHEDULE,
};
use kstab::{Error, GbLimits, Ideal, ReebVector, TorusDirection};
use proptest::prelude::*;

const E: f64 = std::f64::consts::E;

fn xi(v: &[f64]) -> ReebVector {
    ReebVector::from_f64(v.to_vec())
}

#[test]
fn closed_form_matches_enumeration_on_corpus() {
    for (name, p) in common::corpus() {
        let x = p.xi(None).unwrap();
        let model = VolumeModel::new(p.ideal.clone(), p.setup.clone(), GbLimits::default()).unwrap();
        let schedule = [2, 3, 4];
        let a = model.volume(&x, &schedule, VolumeMethod::ClosedForm).unwrap();
        let b = model.volume(&x, &schedule, VolumeMethod::Enumeration { lambda: None, budget: 1 << 26 }).unwrap();
        for (s, t) in a.samples.iter().zip(&b.samples) {
            let scale = s.value.abs().max(1e-300);
            assert!(
                (s.value - t.value).abs() <= 1e-9 * scale + t.tail_bound,
                "{name}: m = {} closed {} enumerated {} tail {}",
                s.m,
                s.value,
                t.value,
                t.tail_bound
            );
        }
    }
}

#[test]
fn cn_volumes_match_geometric_series() {
    for n in 1..=3 {
        let setup = cn_setup(n);
        let ideal = Ideal::zero(setup.nvars());
        for point in [vec![1.0; n], (0..n).map(|i| 0.7 + 0.4 * i as f64).collect()] {
            let est = weighted_volume(&ideal, &setup, &xi(&point), &[256, 512, 1024, 2048], VolumeMethod::ClosedForm).unwrap();
            let exact = cn_volume(&point);
            assert!((est.value - exact).abs() <= 1e-6 * exact, "n = {n} at {point:?}: {} vs {exact}", est.value);
            assert!((est.value - exact).abs() <= est.error_estimate.max(1e-9 * exact));
        }
    }
}

#[test]
fn futaki_matches_analytic_derivative() {
    let setup = cn_setup(2);
    let ideal = Ideal::zero(3);
    let point = [1.4, 0.8];
    for i in 0..2 {
        let r = kstab::volume::futaki(&ideal, &setup, &xi(&point), &TorusDirection::basis(i, 2), &[256, 512, 1024, 2048])
            .unwrap();
        let exact = -cn_volume_partial(&point, i);
        assert!((r.via_sum - exact).abs() < 1e-5, "direction {i}: {} vs {exact}", r.via_sum);
        assert!((r.via_fd - exact).abs() < 1e-5);
        assert!(r.consistent());
    }
}

#[test]
fn futaki_is_linear_in_eta() {
    let p = load_problem("quadric");
    let x = xi(&[1.2, 0.9]);
    let model = VolumeModel::new(p.ideal.clone(), p.setup.clone(), GbLimits::default()).unwrap();
    let f = |eta: Vec<f64>| {
        model.futaki(&x, &TorusDirection::from_f64(eta), &DEFAULT_SCHEDULE, VolumeMethod::ClosedForm).unwrap().via_sum
    };
    let (a, b) = (f(vec![1.0, 0.0]), f(vec![0.0, 1.0]));
    assert!((f(vec![2.0, -3.0]) - (2.0 * a - 3.0 * b)).abs() < 1e-9);
}

#[test]
fn quadric_volume_is_half_the_plane() {
    // y1*y2 = y3^2 is the Z/2 quotient of C^2 with y3 of weight (1,1)
    let p = load_problem("quadric");
    let est = weighted_volume(&p.ideal, &p.setup, &xi(&[1.0, 1.0]), &[256, 512, 1024, 2048], VolumeMethod::ClosedForm)
        .unwrap();
    assert!((est.value - E * E / 2.0).abs() < 1e-5, "{}", est.value);
}

#[test]
fn twisted_cubic_volume() {
    // sections in degree m have weights 0..=3m once each
    let p = load_problem("twisted_cubic");
    let est = weighted_volume(&p.ideal, &p.setup, &xi(&[1.0]), &[256, 512, 1024, 2048], VolumeMethod::ClosedForm).unwrap();
    assert!((est.value - (1.0 - (-3.0f64).exp())).abs() < 1e-6, "{}", est.value);
}

#[test]
fn minimizer_finds_cn_soliton() {
    let p = load_problem("c3");
    let model = VolumeModel::new(p.ideal.clone(), p.setup.clone(), GbLimits::default()).unwrap();
    let opts = MinimizeOptions { schedule: vec![256, 512, 1024, 2048], ..Default::default() };
    let r = minimize_volume(&model, &xi(&[2.0, 0.5, 1.5]), &opts).unwrap();
    assert!(r.converged);
    for v in r.xi_star.values() {
        assert!((v - 1.0).abs() < 1e-4, "{:?}", r.xi_star.values());
    }
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.futaki.iter().all(|f| f.via_sum.abs() < 1e-4));
}

#[test]
fn minimizer_reports_divergence_toward_the_boundary() {
    // on S/(y1), W = exp(xi_1 + xi_2) / xi_2 keeps falling as xi_1 -> 0, the wall of y1
    let p = load_problem("c2");
    let ideal = Ideal::parse(&["y1"], &p.setup).unwrap();
    let setup = p.setup.with_n(1).unwrap();
    let model = VolumeModel::new(ideal, setup, GbLimits::default()).unwrap();
    match minimize_volume(&model, &xi(&[1.0, 1.0]), &MinimizeOptions::default()) {
        Err(Error::Divergence { var, margin }) => {
            assert_eq!(var, "y1");
            assert!(margin < 1e-6);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn richardson_is_exact_on_first_order_samples() {
    let samples: Vec<Sample> =
        [8u32, 16, 32].iter().map(|&m| Sample { m, value: 3.5 + 2.0 / m as f64, tail_bound: 0.0 }).collect();
    let r = richardson(&samples).unwrap();
    assert!((r.value - 3.5).abs() < 1e-12);
    assert!(r.error_estimate < 1e-12);
    assert!(richardson(&samples[..1]).is_err());
}

#[test]
fn lower_dimensional_quotients_decay() {
    let p = load_problem("c3_y3");
    let setup = p.setup.with_n(3).unwrap();
    let model = VolumeModel::new(p.ideal.clone(), setup, GbLimits::default()).unwrap();
    let est = model.volume(&xi(&[1.0, 1.0, 1.0]), &[64, 128, 256, 512], VolumeMethod::ClosedForm).unwrap();
    let fit = decay_fit(&est.samples);
    assert!((fit.c - E.powi(3)).abs() / E.powi(3) < 0.01, "C = {}", fit.c);
    assert!(est.value.abs() < 1e-3);
}

#[test]
fn test_configuration_along_the_torus_is_a_product() {
    let p = load_problem("c1");
    let r = test_config_futaki(&p.ideal, &[-1, 1], &p.setup, &xi(&[2.0]), &DEFAULT_SCHEDULE, &FlatLimitOptions::default())
        .unwrap();
    assert!(r.product_candidate);
    let fut = r.futaki.as_ref().unwrap();
    let base = kstab::volume::futaki(&p.ideal, &p.setup, &xi(&[2.0]), &TorusDirection::from_f64(vec![1.0]), &DEFAULT_SCHEDULE)
        .unwrap();
    assert!((fut.via_sum - base.via_sum).abs() < 1e-9);
    assert!((fut.via_sum + E * E / 4.0).abs() < 1e-3);

    let at_one =
        test_config_futaki(&p.ideal, &[-1, 1], &p.setup, &xi(&[1.0]), &DEFAULT_SCHEDULE, &FlatLimitOptions::default()).unwrap();
    assert!(at_one.futaki.unwrap().via_sum.abs() < 1e-3);
}

#[test]
fn projective_shift_moves_futaki_by_the_sensitivity() {
    let p = load_problem("c1");
    let x = xi(&[2.0]);
    let opts = FlatLimitOptions::default();
    let a = test_config_futaki(&p.ideal, &[-1, 1], &p.setup, &x, &DEFAULT_SCHEDULE, &opts).unwrap();
    let b = test_config_futaki(&p.ideal, &[0, 1], &p.setup, &x, &DEFAULT_SCHEDULE, &opts).unwrap();
    let shift = b.futaki.unwrap().via_sum - a.futaki.unwrap().via_sum;
    let sens = a.lift_shift_sensitivity.unwrap();
    assert!((shift - sens).abs() < 1e-3, "shift {shift} sensitivity {sens}");
    assert!((sens - E * E / 2.0).abs() < 1e-3);
}

#[test]
fn extended_torus_restricts_to_the_base_torus() {
    let p = load_problem("quadric");
    let x = xi(&[1.0, 1.3]);
    let r = test_config_futaki(&p.ideal, &[0, 0, 0, 1], &p.setup, &x, &DEFAULT_SCHEDULE, &FlatLimitOptions::default())
        .unwrap();
    let model = VolumeModel::new(r.spec.central.clone(), r.extended_setup.clone(), GbLimits::default()).unwrap();
    let base_model = VolumeModel::new(r.spec.central.clone(), p.setup.clone(), GbLimits::default()).unwrap();
    for i in 0..2 {
        let ext = model
            .futaki(&r.xi_hat, &TorusDirection::basis(i, 3), &DEFAULT_SCHEDULE, VolumeMethod::ClosedForm)
            .unwrap();
        let base = base_model
            .futaki(&x, &TorusDirection::basis(i, 2), &DEFAULT_SCHEDULE, VolumeMethod::ClosedForm)
            .unwrap();
        assert_eq!(ext.samples, base.samples);
    }
}

#[test]
fn scan_of_cn_at_the_soliton_is_semistable() {
    let p = load_problem("c2");
    let rhos = vec![vec![-1, 1, 0], vec![-1, 0, 1]];
    let long = [256, 512, 1024, 2048];
    let v = semistability_scan(&p.ideal, &p.setup, &xi(&[1.0, 1.0]), &rhos, DEFAULT_SCAN_TOLERANCE, &long, &FlatLimitOptions::default())
        .unwrap();
    assert_eq!(v.overall, Overall::SemistableOnCorpus);
    for e in &v.entries {
        let fut = e.outcome.as_ref().unwrap().futaki.as_ref().unwrap();
        assert!(fut.via_sum.abs() < 1e-5, "{}", fut.via_sum);
    }
}

#[test]
fn scan_detects_c1_off_the_soliton() {
    let p = load_problem("c1");
    let rhos = vec![vec![-1, 1], vec![0, 0], vec![1, 2, 3]];
    let v = semistability_scan(&p.ideal, &p.setup, &xi(&[2.0]), &rhos, DEFAULT_SCAN_TOLERANCE, &DEFAULT_SCHEDULE, &FlatLimitOptions::default())
        .unwrap();
    match &v.overall {
        Overall::Destabilized { rho, futaki } => {
            assert_eq!(rho, &vec![-1, 1]);
            assert!((futaki + E * E / 4.0).abs() < 1e-3);
        }
        other => panic!("expected a destabilizer, got {other:?}"),
    }
    // the malformed candidate fails alone
    assert!(v.entries.iter().any(|e| e.outcome.is_err()));
    assert!(v.entries.windows(2).all(|w| w[0].rho <= w[1].rho));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn volume_is_convex_on_the_reeb_cone(a in 0.4f64..3.0, b in 0.4f64..3.0, c in 0.4f64..3.0, d in 0.4f64..3.0) {
        let p = load_problem("quadric");
        let model = VolumeModel::new(p.ideal.clone(), p.setup.clone(), GbLimits::default()).unwrap();
        let w = |v: [f64; 2]| model.volume(&xi(&v), &DEFAULT_SCHEDULE, VolumeMethod::ClosedForm).unwrap();
        let (x, y, mid) = (w([a, b]), w([c, d]), w([(a + c) / 2.0, (b + d) / 2.0]));
        let slack = x.error_estimate + y.error_estimate + mid.error_estimate;
        prop_assert!(mid.value <= (x.value + y.value) / 2.0 + slack);
    }

    #[test]
    fn samples_are_stable_under_schedule_changes(m in 4u32..40) {
        // W_m does not depend on which other degrees are sampled
        let p = load_problem("quadric");
        let model = VolumeModel::new(p.ideal.clone(), p.setup.clone(), GbLimits::default()).unwrap();
        let x = xi(&[1.0, 1.0]);
        let a = model.volume(&x, &[m, m + 1], VolumeMethod::ClosedForm).unwrap();
        let b = model.volume(&x, &[m, 2 * m + 3], VolumeMethod::ClosedForm).unwrap();
        prop_assert_eq!(a.samples[0], b.samples[0]);
    }
}
