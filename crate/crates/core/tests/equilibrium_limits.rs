mod common;

use brusselator_net::equilibrium::{self, zeroth_order};
use brusselator_net::PatchNetwork;
use common::*;

fn distance_from_limit(m: &PatchNetwork) -> f64 {
    let pp = perron(m);
    let z = zeroth_order(m, &pp);
    let eq = equilibrium::solve(m, &pp, None).unwrap();
    let dx = eq.x.iter().zip(&pp.xi).map(|(x, xi)| (x - z.c0 * xi).abs()).fold(0.0, f64::max);
    let dy = eq.y.iter().zip(&pp.eta).map(|(y, e)| (y - z.r0beta * e).abs()).fold(0.0, f64::max);
    dx + dy
}

#[test]
fn equilibrium_approaches_closed_form_linearly_in_lambda() {
    let lambdas: Vec<f64> = (0..7).map(|k| 1e-3 * 2f64.powi(k)).collect();
    for template in [identical(&p_non_line_sum(), 2.0, 0.0), five_patch(10.0), five_patch(2.0)] {
        let d: Vec<f64> = lambdas.iter().map(|&l| distance_from_limit(&template.with_lambda(l))).collect();
        let slope = log_log_slope(&lambdas, &d);
        assert!(slope >= 0.9, "slope {slope}, distances {d:?}");
    }
}

#[test]
fn uniform_network_equilibrium_is_the_single_box_one() {
    for beta in [0.5, 2.0, 7.0] {
        let m = identical(&p_line_sum(), beta, 0.3);
        let eq = equilibrium::solve(&m, &perron(&m), None).unwrap();
        for j in 0..3 {
            assert!((eq.x[j] - 1.0).abs() <= 1e-12);
            assert!((eq.y[j] - beta).abs() <= 1e-12);
        }
    }
}

#[test]
fn five_patch_equilibrium_balances_the_reactions() {
    let m = five_patch(10.0);
    let pp = perron(&m);
    let eq = equilibrium::solve(&m, &pp, None).unwrap();
    assert!(eq.residual <= 1e-12 * eq.norm_inf().max(1.0) * 10.0);
    assert!((eq.x.iter().sum::<f64>() - 5.5).abs() <= 1e-10);
    // the y-balance sums to beta * sum(b x) = sum(x^2 y)
    let lhs: f64 = m.b.iter().zip(&eq.x).map(|(b, x)| m.beta * b * x).sum();
    let rhs: f64 = eq.x.iter().zip(&eq.y).map(|(x, y)| x * x * y).sum();
    assert!((lhs - rhs).abs() <= 1e-10);
}

#[test]
fn large_lambda_falls_back_to_continuation() {
    let m = five_patch(10.0).with_lambda(3.0);
    let eq = equilibrium::solve(&m, &perron(&m), None).unwrap();
    assert!(eq.x.iter().chain(&eq.y).all(|v| *v > 0.0));
    assert!((eq.x.iter().sum::<f64>() - 5.5).abs() <= 1e-10);
}
