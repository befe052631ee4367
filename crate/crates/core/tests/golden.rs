//! Propagator cascade against values from `golden/gen_golden.py`, an
//! independent construction through the phase-space flow matrix.

use std::collections::HashMap;

use catsim::propagator::{self, c_linear, complex_coeffs, real_coeffs};
use catsim::{normal_basis, ModelParams};

const GOLDEN: &str = include_str!("golden/golden.txt");
const REL: f64 = 1e-11;

fn golden() -> HashMap<String, f64> {
    GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key = value");
            (k.trim().to_string(), v.trim().parse().expect("number"))
        })
        .collect()
}

#[track_caller]
fn close(got: f64, key: &str, g: &HashMap<String, f64>, scale: f64) {
    let want = g[key];
    let err = (got - want).abs() / want.abs().max(scale);
    assert!(err < REL, "{key}: got {got:e}, want {want:e} (rel {err:e})");
}

#[test]
fn eigenvalues() {
    let g = golden();
    let nb = normal_basis(&ModelParams::paper()).unwrap();
    close(nb.lambda1, "lambda1", &g, 1.0);
    close(nb.lambda2, "lambda2", &g, 1.0);
    assert!(g["lambda3"].abs() < 1e-30);
}

#[test]
fn real_coefficients_at_unit_time() {
    let g = golden();
    let nb = normal_basis(&ModelParams::paper()).unwrap();
    let r = real_coeffs(&nb, 1.0).unwrap();
    for i in 0..3 {
        close(r.a[i], &format!("real_a_{i}"), &g, 1.0);
        for j in 0..3 {
            if i != j {
                close(r.b[i][j], &format!("real_b_{i}{j}"), &g, 1.0);
            }
            close(r.alpha[i][j], &format!("real_alpha_{i}{j}"), &g, 1.0);
        }
    }
    let c = c_linear(&r, [1.0, 2.0, 3.0]);
    for (i, ci) in c.iter().enumerate() {
        close(*ci, &format!("c_linear_{i}"), &g, 1.0);
    }
}

#[test]
fn complex_coefficients_at_two() {
    let g = golden();
    let p = ModelParams::paper();
    let nb = normal_basis(&p).unwrap();
    let r = real_coeffs(&nb, 2.0).unwrap();
    let c = complex_coeffs(&r, &p.cats, p.hbar).unwrap();
    let scale = c.delta.norm();
    close(c.delta.re, "delta_re", &g, scale);
    close(c.delta.im, "delta_im", &g, scale);
    for i in 0..3 {
        let s = c.lambda[i].norm();
        close(c.lambda[i].re, &format!("lambda_c_{i}_re"), &g, s);
        close(c.lambda[i].im, &format!("lambda_c_{i}_im"), &g, s);
    }
    for &(i, j) in &propagator::PAIRS {
        let s = c.mu[i][j].norm();
        close(c.mu[i][j].re, &format!("mu_{i}{j}_re"), &g, s);
        close(c.mu[i][j].im, &format!("mu_{i}{j}_im"), &g, s);
    }
}

#[test]
fn packet_exponents_both_paths() {
    let g = golden();
    let p = ModelParams::paper();
    let nb = normal_basis(&p).unwrap();
    let r = real_coeffs(&nb, 3.005).unwrap();
    let c = complex_coeffs(&r, &p.cats, p.hbar).unwrap();
    let x = [-2.0, 3.0, 4.0];
    for k in [0, 5, 7] {
        let printed = propagator::theta(&c, &r, x, k);
        let direct = propagator::theta_direct(&c, &r, x, k);
        let s = direct.norm();
        close(printed.re_theta, &format!("theta_{k}_re"), &g, s);
        close(printed.im_theta, &format!("theta_{k}_im"), &g, s);
        close(direct.re, &format!("theta_{k}_re"), &g, s);
        close(direct.im, &format!("theta_{k}_im"), &g, s);
    }
}
