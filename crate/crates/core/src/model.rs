//! Model parameters and the normal-mode decomposition of the three-spring system.
//!
//! The coupling matrix `W` of the equations of motion `ẍ = W x` has a zero
//! eigenvalue (free centre-of-mass motion) and two negative eigenvalues. The
//! eigenvectors are kept in the unnormalised closed form so that the third row
//! of `P` is exactly `(1/3, 1/3, 1/3)` and the centre-of-mass mass is `3m`.

use crate::error::{Error, Result};

/// Guard for `Δω²` and the eigenvector determinant `Δ`.
pub const DEGENERACY_EPS: f64 = 1e-9;

pub type Mat3 = [[f64; 3]; 3];

/// One particle's initial cat state: packets at `0` and `d`, both of half-width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    pub d: f64,
    pub sigma: f64,
}

impl CatSpec {
    pub fn new(d: f64, sigma: f64) -> Self {
        Self { d, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub m: f64,
    pub omega12: f64,
    pub omega13: f64,
    pub omega23: f64,
    pub hbar: f64,
    pub cats: [CatSpec; 3],
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::paper()
    }
}

impl ModelParams {
    /// The published configuration with the default packet width `σ = 1`.
    pub fn paper() -> Self {
        Self::paper_with_sigma(1.0)
    }

    pub fn paper_with_sigma(sigma: f64) -> Self {
        Self {
            m: 1.0,
            omega12: 0.305,
            omega13: 0.1,
            omega23: 0.202,
            hbar: 1.0,
            cats: [
                CatSpec::new(-5.0, sigma),
                CatSpec::new(6.0, sigma),
                CatSpec::new(7.5, sigma),
            ],
        }
    }

    pub fn omegas(&self) -> [f64; 3] {
        [self.omega12, self.omega13, self.omega23]
    }

    pub fn sigmas(&self) -> [f64; 3] {
        [self.cats[0].sigma, self.cats[1].sigma, self.cats[2].sigma]
    }

    pub fn offsets(&self) -> [f64; 3] {
        [self.cats[0].d, self.cats[1].d, self.cats[2].d]
    }

    /// Checks every invariant, including the degeneracy guard on `Δω²`.
    pub fn validate(&self) -> Result<()> {
        let scalars = [self.m, self.hbar, self.omega12, self.omega13, self.omega23];
        let finite = scalars.iter().all(|v| v.is_finite())
            && self.cats.iter().all(|c| c.d.is_finite() && c.sigma.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.m <= 0.0 {
            return Err(Error::InvalidParams(format!("mass must be positive, got {}", self.m)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        let omegas = self.omegas();
        if omegas.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParams("coupling frequencies must be non-negative".into()));
        }
        if omegas.iter().filter(|&&w| w > 0.0).count() < 2 {
            return Err(Error::InvalidParams(
                "at least two coupling frequencies must be positive".into(),
            ));
        }
        for (i, cat) in self.cats.iter().enumerate() {
            if cat.sigma <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "sigma of particle {} must be positive, got {}",
                    i + 1,
                    cat.sigma
                )));
            }
        }
        let dw = delta_omega_sq(self);
        if dw <= DEGENERACY_EPS {
            return Err(Error::DegenerateSpectrum { delta_omega_sq: dw });
        }
        Ok(())
    }

    /// The matrix `W` in `ẍ = W x`.
    pub fn coupling_matrix(&self) -> Mat3 {
        let (s12, s13, s23) = (self.omega12.powi(2), self.omega13.powi(2), self.omega23.powi(2));
        [
            [-(s12 + s13), s12, s13],
            [s12, -(s12 + s23), s23],
            [s13, s23, -(s13 + s23)],
        ]
    }
}

/// The three printed closed forms of `Δω²`, in order.
pub fn delta_omega_sq_forms(p: &ModelParams) -> [f64; 3] {
    let (s12, s13, s23) = (p.omega12.powi(2), p.omega13.powi(2), p.omega23.powi(2));
    let first = s12 * s12 - s12 * s13 + s13 * s13 - s13 * s23 + s23 * s23 - s23 * s12;
    let second = 0.5 * ((s12 - s13).powi(2) + (s13 - s23).powi(2) + (s23 - s12).powi(2));
    let sum = s12 + s13 + s23;
    let third = sum * sum - 3.0 * s12 * s13 - 3.0 * s13 * s23 - 3.0 * s23 * s12;
    [first.max(0.0).sqrt(), second.sqrt(), third.max(0.0).sqrt()]
}

/// `Δω²`, the splitting between the two oscillating eigenvalues.
pub fn delta_omega_sq(p: &ModelParams) -> f64 {
    let forms = delta_omega_sq_forms(p);
    let scale = p.omega12.powi(2) + p.omega13.powi(2) + p.omega23.powi(2);
    debug_assert!(
        forms.iter().all(|f| (f - forms[1]).abs() <= 1e-12 * scale.max(forms[1]) + 1e-300),
        "printed forms of delta_omega_sq disagree: {forms:?}"
    );
    forms[1]
}

/// The characteristic polynomial of `W` in the printed sign convention.
pub fn characteristic_cubic(p: &ModelParams, lambda: f64) -> f64 {
    let (s12, s13, s23) = (p.omega12.powi(2), p.omega13.powi(2), p.omega23.powi(2));
    -(lambda.powi(3)
        + 2.0 * (s12 + s13 + s23) * lambda.powi(2)
        + 3.0 * (s12 * s13 + s13 * s23 + s12 * s23) * lambda)
}

/// `(λ₁, λ₂, λ₃)` with `λ₃ = 0` and `λ₂ < λ₁ < 0`.
pub fn eigenvalues(p: &ModelParams) -> Result<(f64, f64, f64)> {
    p.validate()?;
    let dw = delta_omega_sq(p);
    let sum = p.omega12.powi(2) + p.omega13.powi(2) + p.omega23.powi(2);
    let l1 = -sum + dw;
    let l2 = -sum - dw;
    debug_assert!(l1 < 0.0 && l2 < 0.0);
    Ok((l1, l2, 0.0))
}

/// Everything derived once from [`ModelParams`]: eigen-pairs, `P`, `P⁻¹` and
/// the masses and frequencies of the decoupled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeBasis {
    pub params: ModelParams,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `Ω₁ = √(−λ₁)`.
    pub big_omega1: f64,
    /// `Ω₂ = √(−λ₂)`.
    pub big_omega2: f64,
    pub xi: [f64; 2],
    pub eta: [f64; 2],
    pub zeta: [f64; 2],
    /// `Δ = η₂ξ₁ − η₁ξ₂`.
    pub delta: f64,
    /// Maps positions to normal coordinates, `z = P x`.
    pub p: Mat3,
    /// Columns are the eigenvectors of `W` for `(λ₁, λ₂, 0)`.
    pub p_inv: Mat3,
    /// Rows of `P`.
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// `w₁² = ω₁₂² + ω₁₃²`, `w₂² = ω₁₂² + ω₂₃²`, `w₃² = ω₁₃² + ω₂₃²`.
    pub w_sq: [f64; 3],
    /// Normal-mode frequencies squared from the decoupled Lagrangian.
    pub omega1_sq: f64,
    pub omega2_sq: f64,
}

pub fn normal_basis(p: &ModelParams) -> Result<NormalModeBasis> {
    let (lambda1, lambda2, _) = eigenvalues(p)?;
    let dw = delta_omega_sq(p);
    let (s12, s13, s23) = (p.omega12.powi(2), p.omega13.powi(2), p.omega23.powi(2));

    let xi = [s12 * s23 - s13 * (s13 - dw), s12 * s23 - s13 * (s13 + dw)];
    let eta = [s12 * s13 - s23 * (s23 - dw), s12 * s13 - s23 * (s23 + dw)];
    let zeta = [-xi[0] - eta[0], -xi[1] - eta[1]];
    let delta = eta[1] * xi[0] - eta[0] * xi[1];
    if delta.abs() <= DEGENERACY_EPS {
        return Err(Error::SingularTransform { delta });
    }

    let p_inv = [
        [xi[0], xi[1], 1.0],
        [eta[0], eta[1], 1.0],
        [zeta[0], zeta[1], 1.0],
    ];
    let k = 1.0 / (3.0 * delta);
    // The third entries equal −(first + second) in closed form; writing them
    // that way keeps rows a and b exactly orthogonal to (1, 1, 1), which the
    // large 1/Δ scale would otherwise spoil.
    let (a0, a1) = (k * (2.0 * eta[1] + xi[1]), k * (-eta[1] - 2.0 * xi[1]));
    let (b0, b1) = (k * (-2.0 * eta[0] - xi[0]), k * (eta[0] + 2.0 * xi[0]));
    let a = [a0, a1, -(a0 + a1)];
    let b = [b0, b1, -(b0 + b1)];
    let c = [1.0 / 3.0; 3];

    let m = p.m;
    let m1 = 2.0 * m * (xi[0] * xi[0] + xi[0] * eta[0] + eta[0] * eta[0]);
    let m2 = 2.0 * m * (xi[1] * xi[1] + xi[1] * eta[1] + eta[1] * eta[1]);
    let m3 = 3.0 * m;
    let w_sq = [s12 + s13, s12 + s23, s13 + s23];
    let mode_freq_sq = |x: f64, y: f64, mass: f64| {
        m / mass
            * (w_sq[0] * (2.0 * x * x - x * y - y * y)
                + w_sq[1] * (-x * x - x * y + 2.0 * y * y)
                + w_sq[2] * (2.0 * x * x + 5.0 * x * y + 2.0 * y * y))
    };
    let omega1_sq = mode_freq_sq(xi[0], eta[0], m1);
    let omega2_sq = mode_freq_sq(xi[1], eta[1], m2);

    Ok(NormalModeBasis {
        params: *p,
        lambda1,
        lambda2,
        big_omega1: (-lambda1).sqrt(),
        big_omega2: (-lambda2).sqrt(),
        xi,
        eta,
        zeta,
        delta,
        p: [a, b, c],
        p_inv,
        a,
        b,
        c,
        m1,
        m2,
        m3,
        w_sq,
        omega1_sq,
        omega2_sq,
    })
}

impl NormalModeBasis {
    /// Angular frequency of mode 1 as it enters the propagator.
    pub fn omega1(&self) -> f64 {
        self.omega1_sq.sqrt()
    }

    pub fn omega2(&self) -> f64 {
        self.omega2_sq.sqrt()
    }

    pub fn to_normal(&self, x: [f64; 3]) -> [f64; 3] {
        mat_vec(&self.p, x)
    }

    pub fn from_normal(&self, z: [f64; 3]) -> [f64; 3] {
        mat_vec(&self.p_inv, z)
    }
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat3, x: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
        a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
        a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
    ]
}

pub fn max_abs(a: &Mat3) -> f64 {
    a.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_omegas(w12: f64, w13: f64, w23: f64) -> ModelParams {
        ModelParams {
            omega12: w12,
            omega13: w13,
            omega23: w23,
            ..ModelParams::paper()
        }
    }

    #[test]
    fn delta_omega_sq_vanishes_for_equal_springs() {
        assert_eq!(delta_omega_sq(&with_omegas(0.2, 0.2, 0.2)), 0.0);
    }

    #[test]
    fn delta_omega_sq_single_spring() {
        let forms = delta_omega_sq_forms(&with_omegas(1.0, 0.0, 0.0));
        for f in forms {
            assert!((f - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_springs_are_degenerate() {
        let err = eigenvalues(&with_omegas(0.3, 0.3, 0.3)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        assert!(err.to_string().contains("DegenerateSpectrum"));
    }

    #[test]
    fn rejects_invalid_params() {
        let mut p = ModelParams::paper();
        p.m = 0.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let p = with_omegas(0.3, 0.0, 0.0);
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let mut p = ModelParams::paper();
        p.cats[2].sigma = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn third_eigenvalue_is_exactly_zero() {
        let (_, _, l3) = eigenvalues(&ModelParams::paper()).unwrap();
        assert_eq!(l3, 0.0);
    }

    #[test]
    fn basis_structure() {
        let nb = normal_basis(&ModelParams::paper()).unwrap();
        assert_eq!(nb.c, [1.0 / 3.0; 3]);
        assert_eq!(nb.m3, 3.0);
        assert!(nb.lambda1 < 0.0 && nb.lambda2 < 0.0);
        for k in 0..2 {
            assert_eq!(nb.zeta[k], -nb.xi[k] - nb.eta[k]);
        }
        assert!(nb.m1 > 0.0 && nb.m2 > 0.0);
        assert!(nb.omega1_sq > 0.0 && nb.omega2_sq > 0.0);
    }

    #[test]
    fn printed_mode_frequencies_match_eigenvalues() {
        let nb = normal_basis(&ModelParams::paper()).unwrap();
        assert!((nb.omega1_sq + nb.lambda1).abs() < 1e-12 * nb.lambda1.abs());
        assert!((nb.omega2_sq + nb.lambda2).abs() < 1e-12 * nb.lambda2.abs());
    }

    #[test]
    fn degenerate_zero_spring_pair_is_accepted_when_two_positive() {
        let nb = normal_basis(&with_omegas(0.4, 0.0, 0.25)).unwrap();
        let prod = mat_mul(&nb.p, &nb.p_inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }
}
