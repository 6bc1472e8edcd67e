mod common;

use brusselator_net::dynamics::{mass_law_residual, mass_law_residual_with};
use brusselator_net::spectrum::{self, StabilityVerdict};
use brusselator_net::{
    classify_attractor, equilibrium, find_hopf, integrate, AttractorOptions, AttractorVerdict, CouplingMatrix,
    HopfOptions, IntegrateOptions, PatchNetwork,
};
use common::*;
use rand::Rng;

fn run(m: &PatchNetwork, init: &[f64], t_end: f64) -> (brusselator_net::Trajectory, AttractorVerdict) {
    let tr = integrate(m, init, t_end, &IntegrateOptions::default()).unwrap();
    let eq = equilibrium::solve(m, &perron(m), None).unwrap();
    let v = classify_attractor(&tr, &eq, &AttractorOptions::default());
    (tr, v)
}

fn five_init() -> Vec<f64> {
    FIVE_X0.iter().chain(&FIVE_Y0).copied().collect()
}

#[test]
fn equilibrium_start_stays_put() {
    let beta = 1.7;
    let m = identical(&p_line_sum(), beta, 0.1);
    let init = [1.0, 1.0, 1.0, beta, beta, beta];
    let (tr, v) = run(&m, &init, 200.0);
    for s in &tr.states {
        for (a, b) in s.iter().zip(&init) {
            assert!((a - b).abs() <= 1e-8);
        }
    }
    match v {
        AttractorVerdict::ConvergedToEquilibrium { deviation } => assert!(deviation <= 1e-8),
        other => panic!("{other:?}"),
    }
}

#[test]
fn line_sum_coupling_oscillates_at_fig_beta() {
    let m = identical(&p_line_sum(), 2.05, 0.1);
    let (tr, v) = run(&m, &[1.0; 6], 2000.0);
    assert!(tr.states.iter().flatten().all(|x| *x > 0.0));
    let AttractorVerdict::Periodic { relative_amplitude, peaks, period, .. } = v else { panic!("{v:?}") };
    assert!(relative_amplitude > 0.02);
    assert!(peaks >= 5);

    // onset frequency against the Hopf eigenvalue
    let hp = find_hopf(&m, &perron(&m), None, &HopfOptions::default()).unwrap();
    let omega = 2.0 * std::f64::consts::PI / period;
    let expect = hp.lambda * hp.nu;
    assert!((omega - expect).abs() <= 0.25 * expect, "{omega} vs {expect}");
}

#[test]
fn non_line_sum_coupling_settles_at_fig_beta() {
    let m = identical(&p_non_line_sum(), 2.05, 0.1);
    let (_, v) = run(&m, &[1.0; 6], 2000.0);
    match v {
        AttractorVerdict::ConvergedToEquilibrium { deviation } => assert!(deviation < 1e-4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn five_patch_below_and_above_the_crossing() {
    let (tr, v) = run(&five_patch(10.0), &five_init(), 2000.0);
    assert!(matches!(v, AttractorVerdict::ConvergedToEquilibrium { .. }), "{v:?}");
    assert!(tr.max_mass_residual <= 1e-10 * tr.max_state_norm.max(1.0));

    let m = five_patch(13.0);
    let (tr, v) = run(&m, &five_init(), 2000.0);
    let AttractorVerdict::Periodic { relative_amplitude, .. } = v else { panic!("{v:?}") };
    assert!(relative_amplitude > 0.1);
    assert!(tr.max_mass_residual <= 1e-10 * tr.max_state_norm.max(1.0));
    assert!(mass_law_residual(&m, &tr) <= 1e-10 * tr.max_state_norm.max(1.0));
}

#[test]
fn broken_column_sum_is_detected_by_mass_residual() {
    let m = five_patch(10.0);
    let tr = integrate(&m, &five_init(), 50.0, &IntegrateOptions::default()).unwrap();
    let broken = |s: &[f64], out: &mut [f64]| {
        m.rhs_into(s, out);
        // an extra 1e-3 on p[0][2] breaks the third column sum
        out[0] += 1e-3 * s[2];
    };
    let r = mass_law_residual_with(broken, m.lambda, &m.a, &tr);
    assert!(r > 1e-5, "{r:e}");
    assert!(mass_law_residual(&m, &tr) <= 1e-10 * tr.max_state_norm.max(1.0));
}

#[test]
fn pure_coupling_conserves_each_species() {
    let m = five_patch(10.0).with_lambda(0.0);
    let init = five_init();
    let tr = integrate(&m, &init, 20.0, &IntegrateOptions::default()).unwrap();
    let sx0: f64 = init[..5].iter().sum();
    let sy0: f64 = init[5..].iter().sum();
    for k in 0..tr.times.len() {
        assert!((tr.x(k).iter().sum::<f64>() - sx0).abs() <= 1e-8);
        assert!((tr.y(k).iter().sum::<f64>() - sy0).abs() <= 1e-8);
    }
}

#[test]
fn fixed_step_global_error_is_fifth_order() {
    let m = identical(&p_line_sum(), 2.05, 0.1);
    let init = [0.5, 1.0, 1.5, 1.0, 2.0, 3.0];
    let tight = IntegrateOptions { rel_tol: 1e-12, abs_tol: 1e-12, ..Default::default() };
    let reference = integrate(&m, &init, 10.0, &tight).unwrap();
    let exact = reference.final_state().to_vec();
    let err = |h: f64| {
        let o = IntegrateOptions { fixed_step: Some(h), ..Default::default() };
        let tr = integrate(&m, &init, 10.0, &o).unwrap();
        tr.final_state().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| err(h)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 32.0 / 3.0 && ratio < 96.0, "errors {e:?}");
    }
}

#[test]
fn stable_equilibria_attract_nearby_starts() {
    let mut r = rng(21);
    let mut cases = vec![identical(&p_non_line_sum(), 2.05, 0.1), five_patch(10.0), five_patch(12.0)];
    for trial in 0..6 {
        let n = 2 + trial % 4;
        let p = CouplingMatrix::new(&random_coupling(&mut r, n)).unwrap();
        let q = CouplingMatrix::new(&random_coupling(&mut r, n)).unwrap();
        let a = (0..n).map(|_| r.gen_range(0.5..2.0)).collect();
        let b = (0..n).map(|_| r.gen_range(0.2..1.0)).collect();
        cases.push(PatchNetwork::new(p, q, a, b, r.gen_range(0.5..3.0), 0.1, 1.0).unwrap());
    }
    let mut checked = 0;
    for m in cases {
        let pp = perron(&m);
        let rep = spectrum::classify(&m, &pp).unwrap();
        if rep.verdict != StabilityVerdict::Stable {
            continue;
        }
        checked += 1;
        let eq = &rep.equilibrium;
        let init: Vec<f64> =
            eq.state().iter().enumerate().map(|(k, v)| v * if k % 2 == 0 { 1.01 } else { 0.99 }).collect();
        // horizon long enough for the slowest linear mode to decay
        let t_end = (40.0 / rep.spectral_abscissa.abs()).clamp(2000.0, 200_000.0);
        let opts = IntegrateOptions { sample_dt: Some(t_end / 4000.0), ..Default::default() };
        let tr = integrate(&m, &init, t_end, &opts).unwrap();
        let v = classify_attractor(&tr, eq, &AttractorOptions::default());
        assert!(matches!(v, AttractorVerdict::ConvergedToEquilibrium { .. }), "n = {}: {v:?}", m.n());
    }
    assert!(checked >= 3);
}

#[test]
fn short_runs_are_undetermined() {
    let m = identical(&p_line_sum(), 2.05, 0.1);
    let o = IntegrateOptions { sample_dt: Some(1.0), ..Default::default() };
    let tr = integrate(&m, &[1.0; 6], 100.0, &o).unwrap();
    let eq = equilibrium::solve(&m, &perron(&m), None).unwrap();
    let v = classify_attractor(&tr, &eq, &AttractorOptions::default());
    assert!(matches!(v, AttractorVerdict::Undetermined { .. }), "{v:?}");
}

#[test]
fn repeated_runs_are_identical() {
    let m = five_patch(13.0);
    let a = integrate(&m, &five_init(), 300.0, &IntegrateOptions::default()).unwrap();
    let b = integrate(&m, &five_init(), 300.0, &IntegrateOptions::default()).unwrap();
    assert_eq!(a, b);
}
