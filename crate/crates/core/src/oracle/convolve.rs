//! Brute-force convolution of the initial cat product with the harmonic kernel.

use num_complex::Complex64 as C64;

use crate::error::{CausticMode, Error, Result};
use crate::evolution::packet_offsets_for;
use crate::model::NormalModeBasis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveSpec {
    /// Trapezoid nodes per axis inside each packet box.
    pub points: usize,
    /// Box half-width in units of the packet's `σ`.
    pub sigmas: f64,
}

impl Default for ConvolveSpec {
    fn default() -> Self {
        Self { points: 128, sigmas: 10.0 }
    }
}

/// Per-mode `(κₙ, cos ωₙt)` with `Sₙ = κₙ[(zₙ² + z₀ₙ²) cos ωₙt − 2 zₙ z₀ₙ]`.
fn mode_factors(basis: &NormalModeBasis, t: f64) -> Result<[(f64, f64); 3]> {
    if !(t > 0.0) {
        return Err(Error::Caustic { mode: CausticMode::Free, elapsed: t, nearest: 0.0 });
    }
    let mut out = [(0.0, 1.0); 3];
    for (n, (mass, w, mode)) in [
        (basis.m1, basis.omega1(), CausticMode::First),
        (basis.m2, basis.omega2(), CausticMode::Second),
    ]
    .into_iter()
    .enumerate()
    {
        let (s, c) = (w * t).sin_cos();
        if s.abs() < 1e-6 {
            let k = (w * t / std::f64::consts::PI).round();
            return Err(Error::Caustic { mode, elapsed: t, nearest: k * std::f64::consts::PI / w });
        }
        out[n] = (mass * w / (2.0 * s), c);
    }
    out[2] = (basis.m3 / (2.0 * t), 1.0);
    Ok(out)
}

/// Classical action from `Y` at time 0 to `X` at time `t`, summed over normal modes.
pub fn classical_action(basis: &NormalModeBasis, x: [f64; 3], y: [f64; 3], t: f64) -> Result<f64> {
    let f = mode_factors(basis, t)?;
    let (z, z0) = (basis.to_normal(x), basis.to_normal(y));
    Ok((0..3)
        .map(|n| f[n].0 * ((z[n] * z[n] + z0[n] * z0[n]) * f[n].1 - 2.0 * z[n] * z0[n]))
        .sum())
}

/// `∫ exp(iS(X,Y)/ħ) ψ₀(Y) dY`, one trapezoid box per initial packet.
///
/// The integrand is a complex Gaussian in `Y`, so the innermost axis is walked
/// with the exact two-term multiplicative recurrence.
pub fn convolve_direct(basis: &NormalModeBasis, x: [f64; 3], t: f64, spec: &ConvolveSpec) -> Result<C64> {
    if spec.points < 2 || !(spec.sigmas > 0.0) {
        return Err(Error::InvalidQuadrature("convolution needs >= 2 points and a positive box".into()));
    }
    let p = &basis.params;
    let f = mode_factors(basis, t)?;
    let z = basis.to_normal(x);
    let pm = basis.p;
    let hbar = p.hbar;

    // S as a quadratic form in Y: yᵀ G y + gᵀ y + s0.
    let mut g = [[0.0; 3]; 3];
    let mut lin = [0.0; 3];
    for n in 0..3 {
        let kc = f[n].0 * f[n].1;
        for i in 0..3 {
            lin[i] -= 2.0 * f[n].0 * z[n] * pm[n][i];
            for j in 0..3 {
                g[i][j] += kc * pm[n][i] * pm[n][j];
            }
        }
    }
    let s0: f64 = (0..3).map(|n| f[n].0 * f[n].1 * z[n] * z[n]).sum();
    let sig = p.sigmas();
    let iota = C64::new(0.0, 1.0 / hbar);

    let mut total = C64::new(0.0, 0.0);
    for k in 0..8 {
        let d = packet_offsets_for(k, &p.cats);
        // Exponent −yᵀMy + Jᵀy + c.
        let m: [[C64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let w = if i == j { 1.0 / (4.0 * sig[i] * sig[i]) } else { 0.0 };
                C64::new(w, 0.0) - iota * g[i][j]
            })
        });
        let jv: [C64; 3] = std::array::from_fn(|i| C64::new(d[i] / (2.0 * sig[i] * sig[i]), 0.0) + iota * lin[i]);
        let c = iota * s0 - (0..3).map(|i| d[i] * d[i] / (4.0 * sig[i] * sig[i])).sum::<f64>();
        let expo = |y: [f64; 3]| -> C64 {
            let mut e = c;
            for i in 0..3 {
                e += jv[i] * y[i];
                for j in 0..3 {
                    e -= m[i][j] * y[i] * y[j];
                }
            }
            e
        };

        let n = spec.points;
        let lo: [f64; 3] = std::array::from_fn(|i| d[i] - spec.sigmas * sig[i]);
        let h: [f64; 3] = std::array::from_fn(|i| 2.0 * spec.sigmas * sig[i] / (n - 1) as f64);
        let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let q = (-2.0 * m[2][2] * h[2] * h[2]).exp();
        let mut packet = C64::new(0.0, 0.0);
        for a in 0..n {
            let y1 = lo[0] + h[0] * a as f64;
            let mut plane = C64::new(0.0, 0.0);
            for b in 0..n {
                let y2 = lo[1] + h[1] * b as f64;
                let y3 = lo[2];
                let beta = jv[2] - 2.0 * (m[0][2] * y1 + m[1][2] * y2);
                let mut val = expo([y1, y2, y3]).exp();
                let mut r = (-m[2][2] * (2.0 * y3 * h[2] + h[2] * h[2]) + beta * h[2]).exp();
                let mut line = 0.5 * val;
                for _ in 1..n - 1 {
                    val *= r;
                    r *= q;
                    line += val;
                }
                val *= r;
                line += 0.5 * val;
                plane += w(b) * line;
            }
            packet += w(a) * plane;
        }
        total += packet * (h[0] * h[1] * h[2]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_basis, ModelParams};
    use crate::propagator::real_coeffs;

    #[test]
    fn action_matches_real_coefficients() {
        let nb = normal_basis(&ModelParams::paper()).unwrap();
        let r = real_coeffs(&nb, 1.7).unwrap();
        let x = [0.3, -1.2, 2.0];
        let y = [1.0, 0.5, -0.7];
        let s = classical_action(&nb, x, y, 1.7).unwrap();
        let c = crate::propagator::c_linear(&r, x);
        let expect = r.d_of(x) + r.d_quadratic(y) + (0..3).map(|i| c[i] * y[i]).sum::<f64>();
        assert!((s - expect).abs() < 1e-9 * expect.abs().max(1.0), "{s} vs {expect}");
    }
}
