use crate::classical::ClassicalState;
use crate::model::{mat_vec, ModelParams};

/// Fixed-step RK4 on `ẍ = W x` from `s0` to time `t`; returns positions.
pub fn rk4_classical(params: &ModelParams, s0: &ClassicalState, t: f64, h: f64) -> [f64; 3] {
    assert!(h > 0.0 && t >= 0.0);
    let w = params.coupling_matrix();
    let accel = |x: [f64; 3]| mat_vec(&w, x);
    let (mut x, mut v) = (s0.x, s0.v);
    let steps = (t / h).ceil() as usize;
    let dt = if steps > 0 { t / steps as f64 } else { 0.0 };
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    for _ in 0..steps {
        let k1x = v;
        let k1v = accel(x);
        let k2x = add(v, k1v, 0.5 * dt);
        let k2v = accel(add(x, k1x, 0.5 * dt));
        let k3x = add(v, k2v, 0.5 * dt);
        let k3v = accel(add(x, k2x, 0.5 * dt));
        let k4x = add(v, k3v, dt);
        let k4v = accel(add(x, k3x, dt));
        for i in 0..3 {
            x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_rest_stays() {
        let p = ModelParams::paper();
        let x = rk4_classical(&p, &ClassicalState::at_rest([1.0; 3]), 5.0, 1e-3);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
