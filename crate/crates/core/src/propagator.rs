//! The closed-form propagator coefficient cascade at a fixed elapsed time.
//!
//! Real coefficients `A, B, C(X), D(X)` of the classical action in the original
//! coordinates, then the complex coefficients of the eight Gaussian integrals
//! (`Ă, B̆, C̆⁽ᵏ⁾, D̆⁽ᵏ⁾`), their determinant `Δ(t)`, the contraction
//! coefficients `λᵢ, μᵢⱼ`, the `La/Mu` factors and finally the per-packet
//! exponent `Θ⁽ᵏ⁾(X)`.
//!
//! The propagator's time-dependent prefactor is omitted; every density built
//! from these coefficients is normalised numerically afterwards.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;

use crate::error::{CausticMode, Error, Result};
use crate::evolution::packet_offsets_for;
use crate::model::{CatSpec, Mat3, NormalModeBasis};

/// Guard on `|sin(ω dt)|` (and on `dt` itself).
pub const CAUSTIC_EPS: f64 = 1e-6;
/// `|Δ(t)|` below this is reported as underflow.
pub const DELTA_UNDERFLOW: f64 = 1e-300;

/// Index pairs `(1,2), (2,3), (3,1)` (0-based) used by every pair sum.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
/// For pair `PAIRS[n]`, the index that is left over.
pub const PAIR_COMPLEMENT: [usize; 3] = [2, 0, 1];

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct RealCoeffs {
    pub t: f64,
    /// `Aᵢ`, coefficients of `x_{i(0)}²`.
    pub a: [f64; 3],
    /// `Bᵢⱼ` for `i ≠ j`; the diagonal is zero.
    pub b: Mat3,
    /// `alpha[i][d] = α_d⁽ⁱ⁾`, so that `Cᵢ(X) = −Σ_d α_d⁽ⁱ⁾ x_d`.
    pub alpha: Mat3,
    /// `m₁ω₁cot(ω₁t)`, `m₂ω₂cot(ω₂t)`, `m₃/t`.
    pub cot_terms: [f64; 3],
    /// `m₁ω₁/sin(ω₁t)`, `m₂ω₂/sin(ω₂t)`, `m₃/t`.
    pub csc_terms: [f64; 3],
    /// Rows `a, b, c` of the transformation matrix.
    pub rows: Mat3,
}

fn check_caustic(omega: f64, dt: f64, mode: CausticMode) -> Result<()> {
    let s = (omega * dt).sin();
    if s.abs() < CAUSTIC_EPS {
        let n = (omega * dt / std::f64::consts::PI).round();
        return Err(Error::Caustic {
            mode,
            elapsed: dt,
            nearest: n * std::f64::consts::PI / omega,
        });
    }
    Ok(())
}

/// Real coefficients of the action at elapsed time `dt`.
pub fn real_coeffs(basis: &NormalModeBasis, dt: f64) -> Result<RealCoeffs> {
    if !(dt > CAUSTIC_EPS) {
        return Err(Error::Caustic {
            mode: CausticMode::Free,
            elapsed: dt,
            nearest: 0.0,
        });
    }
    let (w1, w2) = (basis.omega1(), basis.omega2());
    check_caustic(w1, dt, CausticMode::First)?;
    check_caustic(w2, dt, CausticMode::Second)?;

    let cot_terms = [
        basis.m1 * w1 / (w1 * dt).tan(),
        basis.m2 * w2 / (w2 * dt).tan(),
        basis.m3 / dt,
    ];
    let csc_terms = [
        basis.m1 * w1 / (w1 * dt).sin(),
        basis.m2 * w2 / (w2 * dt).sin(),
        basis.m3 / dt,
    ];
    let rows = [basis.a, basis.b, basis.c];

    let mut a = [0.0; 3];
    let mut b = [[0.0; 3]; 3];
    let mut alpha = [[0.0; 3]; 3];
    for i in 0..3 {
        a[i] = (0..3).map(|n| 0.5 * cot_terms[n] * rows[n][i] * rows[n][i]).sum();
        // Upper triangle mirrored: B and α are symmetric bit for bit.
        for j in i..3 {
            if i != j {
                b[i][j] = (0..3).map(|n| cot_terms[n] * rows[n][i] * rows[n][j]).sum();
                b[j][i] = b[i][j];
            }
            alpha[i][j] = (0..3).map(|n| csc_terms[n] * rows[n][i] * rows[n][j]).sum();
            alpha[j][i] = alpha[i][j];
        }
    }
    Ok(RealCoeffs {
        t: dt,
        a,
        b,
        alpha,
        cot_terms,
        csc_terms,
        rows,
    })
}

impl RealCoeffs {
    /// `D(X)` from its three-mode definition.
    pub fn d_of(&self, x: [f64; 3]) -> f64 {
        (0..3)
            .map(|n| {
                let proj: f64 = (0..3).map(|i| self.rows[n][i] * x[i]).sum();
                0.5 * self.cot_terms[n] * proj * proj
            })
            .sum()
    }

    /// `D(X)` through the quadratic form `Σ Aᵢxᵢ² + Σ_{i<j} Bᵢⱼxᵢxⱼ`.
    pub fn d_quadratic(&self, x: [f64; 3]) -> f64 {
        let diag: f64 = (0..3).map(|i| self.a[i] * x[i] * x[i]).sum();
        let off: f64 = PAIRS.iter().map(|&(i, j)| self.b[i][j] * x[i] * x[j]).sum();
        diag + off
    }

    /// `Cᵢ(X)` from the explicit three-term formula.
    pub fn c_explicit(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = -(0..3)
                .map(|n| {
                    let proj: f64 = (0..3).map(|d| self.rows[n][d] * x[d]).sum();
                    self.csc_terms[n] * proj * self.rows[n][i]
                })
                .sum::<f64>();
        }
        out
    }
}

/// `Cᵢ(X) = −Σ_d α_d⁽ⁱ⁾ x_d`.
pub fn c_linear(real: &RealCoeffs, x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = -(real.alpha[i][0] * x[0] + real.alpha[i][1] * x[1] + real.alpha[i][2] * x[2]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCoeffs {
    pub t: f64,
    pub hbar: f64,
    pub sigma: [f64; 3],
    pub d: [f64; 3],
    pub a_brev: [C64; 3],
    /// Symmetric, zero diagonal.
    pub b_brev: [[C64; 3]; 3],
    pub delta: C64,
    pub lambda: [C64; 3],
    /// Symmetric, zero diagonal; `mu[i][j] = μᵢⱼ`.
    pub mu: [[C64; 3]; 3],
    pub la_dd: [C64; 3],
    pub mu_dd: [C64; 3],
    /// Indexed like [`PAIRS`].
    pub la_df: [C64; 3],
    pub mu_df: [C64; 3],
    pub la_d: [[C64; 3]; 8],
    pub mu_d: [[C64; 3]; 8],
    pub la_0: [C64; 8],
    pub mu_0: [C64; 8],
    /// `atan2(Im Δ, Re Δ)`.
    pub phi: f64,
}

/// Complex coefficients of the packet integrals and the full `La/Mu` cascade.
pub fn complex_coeffs(real: &RealCoeffs, cats: &[CatSpec; 3], hbar: f64) -> Result<ComplexCoeffs> {
    let sigma = [cats[0].sigma, cats[1].sigma, cats[2].sigma];
    let d = [cats[0].d, cats[1].d, cats[2].d];

    let a_brev: [C64; 3] =
        std::array::from_fn(|i| C64::new(1.0 / (4.0 * sigma[i] * sigma[i]), -real.a[i] / hbar));
    let mut b_brev = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                b_brev[i][j] = I * (real.b[i][j] / hbar);
            }
        }
    }

    let (ab, bb) = (&a_brev, &b_brev);
    let delta = ab[0] * ab[1] * ab[2]
        - 0.25 * (ab[1] * bb[0][2].powi(2) + ab[2] * bb[0][1].powi(2) + ab[0] * bb[1][2].powi(2))
        - 0.25 * bb[0][1] * bb[0][2] * bb[1][2];
    if !(delta.norm() >= DELTA_UNDERFLOW) {
        return Err(Error::NumericalUnderflow { modulus: delta.norm() });
    }

    let lambda: [C64; 3] = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        4.0 * ab[j] * ab[k] - bb[j][k].powi(2)
    });
    let mut mu = [[C64::new(0.0, 0.0); 3]; 3];
    for (n, &(i, j)) in PAIRS.iter().enumerate() {
        let k = PAIR_COMPLEMENT[n];
        let v = 2.0 * bb[i][k] * bb[j][k] + 4.0 * ab[k] * bb[i][j];
        mu[i][j] = v;
        mu[j][i] = v;
    }

    let al = |dd: usize, i: usize| real.alpha[i][dd];
    let la_dd: [C64; 3] = std::array::from_fn(|dd| (0..3).map(|i| lambda[i] * al(dd, i).powi(2)).sum());
    let mu_dd: [C64; 3] = std::array::from_fn(|dd| {
        PAIRS.iter().map(|&(i, j)| mu[i][j] * al(dd, i) * al(dd, j)).sum()
    });
    let la_df: [C64; 3] = std::array::from_fn(|n| {
        let (dd, f) = PAIRS[n];
        2.0 * (0..3).map(|i| lambda[i] * al(dd, i) * al(f, i)).sum::<C64>()
    });
    let mu_df: [C64; 3] = std::array::from_fn(|n| {
        let (dd, f) = PAIRS[n];
        PAIRS
            .iter()
            .map(|&(i, j)| mu[i][j] * (al(dd, i) * al(f, j) + al(dd, j) * al(f, i)))
            .sum()
    });

    let mut la_d = [[C64::new(0.0, 0.0); 3]; 8];
    let mut mu_d = [[C64::new(0.0, 0.0); 3]; 8];
    let mut la_0 = [C64::new(0.0, 0.0); 8];
    let mut mu_0 = [C64::new(0.0, 0.0); 8];
    for k in 0..8 {
        let off = packet_offsets_for(k, cats);
        let s: [f64; 3] = std::array::from_fn(|i| off[i] / (sigma[i] * sigma[i]));
        for dd in 0..3 {
            la_d[k][dd] = (0..3).map(|i| lambda[i] * s[i] * al(dd, i)).sum();
            mu_d[k][dd] = 0.5
                * PAIRS
                    .iter()
                    .map(|&(i, j)| mu[i][j] * (s[i] * al(dd, j) + s[j] * al(dd, i)))
                    .sum::<C64>();
        }
        la_0[k] = 0.25 * (0..3).map(|i| lambda[i] * s[i] * s[i]).sum::<C64>();
        mu_0[k] = 0.25 * PAIRS.iter().map(|&(i, j)| mu[i][j] * s[i] * s[j]).sum::<C64>();
    }

    Ok(ComplexCoeffs {
        t: real.t,
        hbar,
        sigma,
        d,
        a_brev,
        b_brev,
        delta,
        lambda,
        mu,
        la_dd,
        mu_dd,
        la_df,
        mu_df,
        la_d,
        mu_d,
        la_0,
        mu_0,
        phi: delta.im.atan2(delta.re),
    })
}

/// `Δ(t)` from the printed real/imaginary expansions.
pub fn delta_printed(real: &RealCoeffs, sigma: [f64; 3], hbar: f64) -> C64 {
    let [a1, a2, a3] = real.a;
    let (b12, b13, b23) = (real.b[0][1], real.b[0][2], real.b[1][2]);
    let [s1, s2, s3] = sigma.map(|s| s * s);
    let h2 = hbar * hbar;
    let h3 = h2 * hbar;
    let re = 1.0 / (64.0 * s1 * s2 * s3) - (a2 * a3 / s1 + a3 * a1 / s2 + a1 * a2 / s3) / (4.0 * h2)
        + (b23 * b23 / s1 + b13 * b13 / s2 + b12 * b12 / s3) / (16.0 * h2);
    let im = a1 * a2 * a3 / h3
        - (a3 / (s1 * s2) + a1 / (s2 * s3) + a2 / (s3 * s1)) / (16.0 * hbar)
        - (a1 * b23 * b23 + a2 * b13 * b13 + a3 * b12 * b12) / (4.0 * h3)
        + b12 * b13 * b23 / (4.0 * h3);
    C64::new(re, im)
}

/// `λᵢ` from the printed expansions in terms of the mode building blocks.
pub fn lambda_printed(real: &RealCoeffs, sigma: [f64; 3], hbar: f64) -> [C64; 3] {
    let [a, b, c] = real.rows;
    let [k1, k2, k3] = real.cot_terms;
    let s2 = sigma.map(|s| s * s);
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let re = -(k1 * k2 * (a[j] * b[k] - a[k] * b[j]).powi(2)
            + k2 * k3 * (b[j] * c[k] - b[k] * c[j]).powi(2)
            + k3 * k1 * (c[j] * a[k] - c[k] * a[j]).powi(2))
            / (hbar * hbar)
            + 1.0 / (4.0 * s2[j] * s2[k]);
        let im = -(k1 * (a[j] * a[j] / s2[k] + a[k] * a[k] / s2[j])
            + k2 * (b[j] * b[j] / s2[k] + b[k] * b[k] / s2[j])
            + k3 * (c[j] * c[j] / s2[k] + c[k] * c[k] / s2[j]))
            / (2.0 * hbar);
        C64::new(re, im)
    })
}

/// `μᵢⱼ` (indexed like [`PAIRS`]) from the printed expansions.
pub fn mu_printed(real: &RealCoeffs, sigma: [f64; 3], hbar: f64) -> [C64; 3] {
    let [a, b, c] = real.rows;
    let [k1, k2, k3] = real.cot_terms;
    let s2 = sigma.map(|s| s * s);
    std::array::from_fn(|n| {
        let (i, j) = PAIRS[n];
        let k = PAIR_COMPLEMENT[n];
        let re = -2.0
            * (k1 * k2 * (a[j] * b[k] - a[k] * b[j]) * (a[k] * b[i] - a[i] * b[k])
                + k2 * k3 * (b[j] * c[k] - b[k] * c[j]) * (b[k] * c[i] - b[i] * c[k])
                + k3 * k1 * (c[j] * a[k] - c[k] * a[j]) * (c[k] * a[i] - c[i] * a[k]))
            / (hbar * hbar);
        let im = (k1 * a[i] * a[j] + k2 * b[i] * b[j] + k3 * c[i] * c[j]) / (s2[k] * hbar);
        C64::new(re, im)
    })
}

fn rel_diff(x: C64, y: C64) -> f64 {
    let scale = x.norm().max(y.norm());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).norm() / scale
    }
}

impl ComplexCoeffs {
    /// Largest relative disagreement between complex arithmetic and the printed
    /// real/imaginary expansions, over `Δ`, `λᵢ` and `μᵢⱼ`.
    pub fn dual_path_residual(&self, real: &RealCoeffs) -> f64 {
        let mut worst = rel_diff(self.delta, delta_printed(real, self.sigma, self.hbar));
        for (x, y) in self.lambda.iter().zip(lambda_printed(real, self.sigma, self.hbar)) {
            worst = worst.max(rel_diff(*x, y));
        }
        for (n, y) in mu_printed(real, self.sigma, self.hbar).into_iter().enumerate() {
            let (i, j) = PAIRS[n];
            worst = worst.max(rel_diff(self.mu[i][j], y));
        }
        worst
    }

    /// `d⁽ᵏ⁾` for this coefficient set.
    pub fn offsets(&self, k: usize) -> [f64; 3] {
        let cats = std::array::from_fn(|i| CatSpec::new(self.d[i], self.sigma[i]));
        packet_offsets_for(k, &cats)
    }

    /// `C̆⁽ᵏ⁾ᵢ(X) = dᵢ⁽ᵏ⁾/2σᵢ² + (i/ħ) Cᵢ(X)`.
    pub fn c_brev(&self, real: &RealCoeffs, x: [f64; 3], k: usize) -> [C64; 3] {
        let off = self.offsets(k);
        let c = c_linear(real, x);
        std::array::from_fn(|i| {
            C64::new(off[i] / (2.0 * self.sigma[i] * self.sigma[i]), c[i] / self.hbar)
        })
    }

    /// `Re D̆⁽ᵏ⁾ = −Σ dᵢ⁽ᵏ⁾²/4σᵢ²`.
    pub fn re_d_brev(&self, k: usize) -> f64 {
        let off = self.offsets(k);
        -(0..3)
            .map(|i| off[i] * off[i] / (4.0 * self.sigma[i] * self.sigma[i]))
            .sum::<f64>()
    }

    pub fn d_brev(&self, real: &RealCoeffs, x: [f64; 3], k: usize) -> C64 {
        C64::new(self.re_d_brev(k), real.d_of(x) / self.hbar)
    }

    /// `Φ⁽ᵏ⁾` through the `λ/μ` contraction.
    pub fn phi_contracted(&self, real: &RealCoeffs, x: [f64; 3], k: usize) -> C64 {
        let cb = self.c_brev(real, x, k);
        let diag: C64 = (0..3).map(|i| self.lambda[i] * cb[i] * cb[i]).sum();
        let off: C64 = PAIRS.iter().map(|&(i, j)| self.mu[i][j] * cb[i] * cb[j]).sum();
        diag + off
    }

    /// `Φ⁽ᵏ⁾` through the long expansion in `Ă, B̆, C̆`.
    pub fn phi_expanded(&self, real: &RealCoeffs, x: [f64; 3], k: usize) -> C64 {
        let c = self.c_brev(real, x, k);
        let a = &self.a_brev;
        let b = &self.b_brev;
        let (b12, b13, b23) = (b[0][1], b[0][2], b[1][2]);
        4.0 * (a[1] * a[2] * c[0] * c[0] + a[0] * a[2] * c[1] * c[1] + a[0] * a[1] * c[2] * c[2])
            - b23 * b23 * c[0] * c[0]
            - b13 * b13 * c[1] * c[1]
            - b12 * b12 * c[2] * c[2]
            + 2.0 * (b13 * b23 * c[0] * c[1] + b12 * b13 * c[1] * c[2] + b12 * b23 * c[0] * c[2])
            + 4.0 * (a[0] * b23 * c[1] * c[2] + a[1] * b13 * c[0] * c[2] + a[2] * b12 * c[0] * c[1])
    }

    /// `Φ⁽ᵏ⁾` assembled from the printed real and imaginary parts in terms of
    /// the `La/Mu` factors.
    pub fn phi_printed(&self, x: [f64; 3], k: usize) -> C64 {
        let h = self.hbar;
        let h2 = h * h;
        let mut re = 0.0;
        let mut im = 0.0;
        for dd in 0..3 {
            let q = self.la_dd[dd] + self.mu_dd[dd];
            re -= q.re * x[dd] * x[dd] / h2;
            im -= q.im * x[dd] * x[dd] / h2;
        }
        for (n, &(dd, f)) in PAIRS.iter().enumerate() {
            let q = self.la_df[n] + self.mu_df[n];
            re -= q.re * x[dd] * x[f] / h2;
            im -= q.im * x[dd] * x[f] / h2;
        }
        for dd in 0..3 {
            let l = self.la_d[k][dd] + self.mu_d[k][dd];
            re += l.im * x[dd] / h;
            im -= l.re * x[dd] / h;
        }
        let c0 = self.la_0[k] + self.mu_0[k];
        C64::new(re + c0.re, im + c0.im)
    }
}

/// The exponent of packet `k`: `ψ⁽ᵏ⁾ ∝ √(π³/|Δ|) exp(ReΘ) · e^{i(ImΘ + φ/2)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketExponent {
    pub k: usize,
    pub re_theta: f64,
    pub im_theta: f64,
    pub phi_half: f64,
}

/// `Θ⁽ᵏ⁾ = (Δ*/16|Δ|²) Φ⁽ᵏ⁾ + D̆⁽ᵏ⁾` with `Φ` from the printed expansions.
pub fn theta(complex: &ComplexCoeffs, real: &RealCoeffs, x: [f64; 3], k: usize) -> PacketExponent {
    assert!(k < 8, "packet index out of range: {k}");
    let phi = complex.phi_printed(x, k);
    let dl = complex.delta;
    let n2 = 16.0 * dl.norm_sqr();
    PacketExponent {
        k,
        re_theta: (dl.re * phi.re + dl.im * phi.im) / n2 + complex.re_d_brev(k),
        im_theta: (dl.re * phi.im - dl.im * phi.re) / n2 + real.d_of(x) / complex.hbar,
        phi_half: 0.5 * complex.phi,
    }
}

/// `Θ⁽ᵏ⁾` through direct complex arithmetic on the `λ/μ` contraction.
pub fn theta_direct(complex: &ComplexCoeffs, real: &RealCoeffs, x: [f64; 3], k: usize) -> C64 {
    complex.phi_contracted(real, x, k) / (16.0 * complex.delta) + complex.d_brev(real, x, k)
}

/// Real and complex coefficients at one elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    pub real: RealCoeffs,
    pub complex: ComplexCoeffs,
}

impl TimeSlice {
    pub fn new(basis: &NormalModeBasis, cats: &[CatSpec; 3], hbar: f64, t: f64) -> Result<Self> {
        let real = real_coeffs(basis, t)?;
        let complex = complex_coeffs(&real, cats, hbar)?;
        Ok(Self { real, complex })
    }

    /// Keyed text dump of the whole cascade, one `key = value` per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let r = &self.real;
        let c = &self.complex;
        let _ = writeln!(s, "t = {:.17e}", r.t);
        for i in 0..3 {
            let _ = writeln!(s, "A{} = {:.17e}", i + 1, r.a[i]);
        }
        for &(i, j) in &PAIRS {
            let _ = writeln!(s, "B{}{} = {:.17e}", i + 1, j + 1, r.b[i][j]);
        }
        for i in 0..3 {
            for dd in 0..3 {
                let _ = writeln!(s, "alpha_{}^({}) = {:.17e}", dd + 1, i + 1, r.alpha[i][dd]);
            }
        }
        let cx = |v: C64| format!("{:.17e} {:+.17e}i", v.re, v.im);
        for i in 0..3 {
            let _ = writeln!(s, "Abrev{} = {}", i + 1, cx(c.a_brev[i]));
        }
        for &(i, j) in &PAIRS {
            let _ = writeln!(s, "Bbrev{}{} = {}", i + 1, j + 1, cx(c.b_brev[i][j]));
        }
        let _ = writeln!(s, "Delta = {}", cx(c.delta));
        let _ = writeln!(s, "phi = {:.17e}", c.phi);
        for i in 0..3 {
            let _ = writeln!(s, "lambda{} = {}", i + 1, cx(c.lambda[i]));
        }
        for &(i, j) in &PAIRS {
            let _ = writeln!(s, "mu{}{} = {}", i + 1, j + 1, cx(c.mu[i][j]));
        }
        for dd in 0..3 {
            let _ = writeln!(s, "La{0}{0} = {1}", dd + 1, cx(c.la_dd[dd]));
            let _ = writeln!(s, "Mu{0}{0} = {1}", dd + 1, cx(c.mu_dd[dd]));
        }
        for (n, &(dd, f)) in PAIRS.iter().enumerate() {
            let _ = writeln!(s, "La{}{} = {}", dd + 1, f + 1, cx(c.la_df[n]));
            let _ = writeln!(s, "Mu{}{} = {}", dd + 1, f + 1, cx(c.mu_df[n]));
        }
        for k in 0..8 {
            for dd in 0..3 {
                let _ = writeln!(s, "La{}^({}) = {}", dd + 1, k, cx(c.la_d[k][dd]));
                let _ = writeln!(s, "Mu{}^({}) = {}", dd + 1, k, cx(c.mu_d[k][dd]));
            }
            let _ = writeln!(s, "La0^({}) = {}", k, cx(c.la_0[k]));
            let _ = writeln!(s, "Mu0^({}) = {}", k, cx(c.mu_0[k]));
        }
        let _ = writeln!(s, "dual_path_residual = {:.3e}", c.dual_path_residual(r));
        s
    }
}

/// Coefficient cascade keyed by elapsed time, shared across threads.
#[derive(Debug)]
pub struct Propagator {
    basis: NormalModeBasis,
    cats: [CatSpec; 3],
    hbar: f64,
    cache: Mutex<HashMap<u64, Arc<TimeSlice>>>,
}

impl Clone for Propagator {
    fn clone(&self) -> Self {
        Self::new(self.basis.clone())
    }
}

impl Propagator {
    pub fn new(basis: NormalModeBasis) -> Self {
        let cats = basis.params.cats;
        let hbar = basis.params.hbar;
        Self {
            basis,
            cats,
            hbar,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn basis(&self) -> &NormalModeBasis {
        &self.basis
    }

    pub fn cats(&self) -> &[CatSpec; 3] {
        &self.cats
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn slice(&self, t: f64) -> Result<Arc<TimeSlice>> {
        let key = t.to_bits();
        if let Some(s) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(s));
        }
        let slice = Arc::new(TimeSlice::new(&self.basis, &self.cats, self.hbar, t)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&slice));
        Ok(slice)
    }

    pub fn cached_times(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_basis, ModelParams};

    fn slice(t: f64) -> TimeSlice {
        let p = ModelParams::paper();
        TimeSlice::new(&normal_basis(&p).unwrap(), &p.cats, p.hbar, t).unwrap()
    }

    #[test]
    fn b12_two_ways() {
        let s = slice(1.0);
        let d = |x| s.real.d_of(x);
        let polar = d([1.0, 1.0, 0.0]) - d([1.0, 0.0, 0.0]) - d([0.0, 1.0, 0.0]);
        assert!((polar - s.real.b[0][1]).abs() < 1e-10 * s.real.b[0][1].abs().max(1.0));
    }

    #[test]
    fn symmetric_arrays() {
        let s = slice(2.3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.real.b[i][j], s.real.b[j][i]);
                assert!((s.real.alpha[i][j] - s.real.alpha[j][i]).abs() <= 1e-15 * s.real.alpha[i][j].abs());
            }
        }
    }

    #[test]
    fn caustic_near_first_mode_half_period() {
        let nb = normal_basis(&ModelParams::paper()).unwrap();
        let tc = std::f64::consts::PI / nb.omega1();
        match real_coeffs(&nb, tc + 1e-8) {
            Err(Error::Caustic { mode, nearest, .. }) => {
                assert_eq!(mode, CausticMode::First);
                assert!((nearest - tc).abs() < 1e-9);
            }
            other => panic!("expected caustic, got {other:?}"),
        }
        assert!(matches!(real_coeffs(&nb, 0.0), Err(Error::Caustic { mode: CausticMode::Free, .. })));
        assert!(matches!(real_coeffs(&nb, -1.0), Err(Error::Caustic { .. })));
    }

    #[test]
    fn c_linear_basics() {
        let s = slice(1.0);
        assert_eq!(c_linear(&s.real, [0.0; 3]), [0.0; 3]);
        let c = c_linear(&s.real, [1.0, 0.0, 0.0]);
        for i in 0..3 {
            assert_eq!(c[i], -s.real.alpha[i][0]);
        }
        let x = [1.0, 2.0, 3.0];
        let (a, b) = (c_linear(&s.real, x), s.real.c_explicit(x));
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12 * a[i].abs().max(1.0));
        }
    }

    #[test]
    fn re_a_brev_is_width_term() {
        let s = slice(1.7);
        for i in 0..3 {
            assert_eq!(s.complex.a_brev[i].re, 0.25);
        }
    }

    #[test]
    fn lambda_dual_path() {
        let s = slice(2.0);
        let lp = lambda_printed(&s.real, s.complex.sigma, 1.0);
        for i in 0..3 {
            assert!(rel_diff(s.complex.lambda[i], lp[i]) < 1e-10);
        }
        assert!(s.complex.dual_path_residual(&s.real) < 1e-10);
    }

    #[test]
    fn packet_zero_origin_has_zero_real_d() {
        let s = slice(3.005);
        assert_eq!(s.complex.re_d_brev(0), 0.0);
    }

    #[test]
    fn three_routes_to_phi() {
        let s = slice(3.005);
        let x = [-2.0, 3.0, 4.0];
        for k in 0..8 {
            let a = s.complex.phi_contracted(&s.real, x, k);
            let b = s.complex.phi_expanded(&s.real, x, k);
            let c = s.complex.phi_printed(x, k);
            assert!(rel_diff(a, b) < 1e-9, "k={k}: {a} vs {b}");
            assert!(rel_diff(a, c) < 1e-9, "k={k}: {a} vs {c}");
        }
    }

    #[test]
    fn cache_returns_same_slice() {
        let p = ModelParams::paper();
        let prop = Propagator::new(normal_basis(&p).unwrap());
        let a = prop.slice(1.25).unwrap();
        let b = prop.slice(1.25).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(prop.cached_times(), 1);
    }

    #[test]
    fn dump_has_keys() {
        let text = slice(1.0).dump();
        for key in ["A1 =", "B23 =", "Delta =", "lambda3 =", "Mu0^(7) ="] {
            assert!(text.contains(key), "missing {key}");
        }
    }
}
