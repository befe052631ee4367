//! Oracle comparisons shared by the command-line `verify` run and the
//! acceptance harness. Each returns the achieved value next to its tolerance.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{convolve_direct, grid_evolve, rk4_classical, ConvolveSpec, GridSpec};
use crate::classical::{self, ClassicalState, Corner};
use crate::error::Result;
use crate::evolution::{initial_amplitude, Evolution};
use crate::model::{mat_mul, max_abs, normal_basis, ModelParams};
use crate::par::Execution;
use crate::reduction::{self, adaptive_extent, spread_estimate, QuadratureSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), value, tolerance, detail }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.3e} (tolerance {:.1e}) {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

/// `P·P⁻¹ = I` and `P·W·P⁻¹ = diag(λ₁, λ₂, 0)`.
pub fn check_basis(params: &ModelParams) -> Result<CheckOutcome> {
    let nb = normal_basis(params)?;
    let mut id = mat_mul(&nb.p, &nb.p_inv);
    for (i, row) in id.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    let w = params.coupling_matrix();
    let mut sim = mat_mul(&nb.p, &mat_mul(&w, &nb.p_inv));
    sim[0][0] -= nb.lambda1;
    sim[1][1] -= nb.lambda2;
    let value = max_abs(&id).max(max_abs(&sim) / max_abs(&w));
    Ok(CheckOutcome::new("normal-mode basis", value, 1e-12, format!("P*Pinv-I = {:.1e}", max_abs(&id))))
}

/// Closed-form corner trajectories against RK4.
pub fn check_classical(params: &ModelParams, tmax: f64, h: f64) -> Result<CheckOutcome> {
    let nb = normal_basis(params)?;
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let c = Corner::new(k, &params.cats);
        let steps = 10;
        for s in 1..=steps {
            let t = tmax * s as f64 / steps as f64;
            let a = classical::trajectory(&nb, &c.initial, t);
            let b = rk4_classical(params, &c.initial, t, h);
            for i in 0..3 {
                worst = worst.max((a[i] - b[i]).abs());
            }
        }
    }
    Ok(CheckOutcome::new("classical vs RK4", worst, 1e-6, format!("t <= {tmax}, step {h}")))
}

/// Complex arithmetic against the printed real/imaginary expansions.
pub fn check_dual_path(params: &ModelParams, times: &[f64]) -> Result<CheckOutcome> {
    let evo = Evolution::new(normal_basis(params)?);
    let mut worst: f64 = 0.0;
    let x = [-2.0, 3.0, 4.0];
    for &t in times {
        let s = evo.slice(t)?;
        worst = worst.max(s.complex.dual_path_residual(&s.real));
        for k in 0..8 {
            let a = s.complex.phi_contracted(&s.real, x, k);
            for b in [s.complex.phi_expanded(&s.real, x, k), s.complex.phi_printed(x, k)] {
                worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
            }
        }
    }
    Ok(CheckOutcome::new("dual-path coefficients", worst, 1e-9, format!("{} times", times.len())))
}

fn random_points(params: &ModelParams, t: f64, count: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let nb = normal_basis(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = spread_estimate(params, t);
    Ok((0..count)
        .map(|_| {
            let k = rng.gen_range(0..8);
            let c = classical::trajectory(&nb, &Corner::new(k, &params.cats).initial, t);
            std::array::from_fn(|i| c[i] + rng.gen_range(-1.0..1.0) * spread)
        })
        .collect())
}

/// Spread of `convolve_direct / Σψ⁽ᵏ⁾` over random points.
pub fn check_convolution(
    params: &ModelParams,
    t: f64,
    count: usize,
    seed: u64,
    spec: &ConvolveSpec,
) -> Result<CheckOutcome> {
    let nb = normal_basis(params)?;
    let evo = Evolution::new(nb.clone());
    let pts = random_points(params, t, count, seed)?;
    let mut ratios = Vec::with_capacity(count);
    for x in &pts {
        ratios.push(convolve_direct(&nb, *x, t, spec)? / evo.psi(*x, t)?);
    }
    let mean: C64 = ratios.iter().sum::<C64>() / count as f64;
    let var = ratios.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / count as f64;
    let value = var.sqrt() / mean.norm();
    Ok(CheckOutcome::new(
        &format!("convolution proportionality t={t}"),
        value,
        1e-5,
        format!("{count} points, {} nodes/axis", spec.points),
    ))
}

/// Grid-solver marginals against the closed-form reduced densities.
#[derive(Debug, Clone, PartialEq)]
pub struct GridComparison {
    pub outcomes: Vec<CheckOutcome>,
    pub norm_error: f64,
    pub energy_drift: f64,
}

pub fn check_grid(
    exec: Execution,
    params: &ModelParams,
    points: usize,
    dt: f64,
    times: &[f64],
    quad_points: usize,
) -> Result<GridComparison> {
    let nb = normal_basis(params)?;
    let tmax = times.iter().cloned().fold(0.0, f64::max);
    let half = adaptive_extent(&nb, tmax);
    let spec = GridSpec { points, half_width: [half; 3], dt };
    let run = grid_evolve(exec, params, &spec, times)?;
    let evo = Evolution::new(nb);
    let quad = QuadratureSpec { extent: Some(half), points: quad_points, rule: crate::quadrature::Rule::Trapezoid };
    let mut outcomes = Vec::new();
    for snap in &run.snapshots {
        let mut worst: f64 = 0.0;
        for p in 1..=3 {
            let axis = &run.axes[p - 1];
            let prof = reduction::reduce_with(exec, &evo, p, snap.t, axis, &quad)?;
            let closed = prof.total();
            let peak = closed.iter().cloned().fold(0.0, f64::max);
            for (a, b) in closed.iter().zip(&snap.marginals[p - 1]) {
                worst = worst.max((a - b).abs() / peak);
            }
        }
        outcomes.push(CheckOutcome::new(
            &format!("grid marginals t={}", snap.t),
            worst,
            1e-2,
            format!("{points}^3 grid, dt {dt}, half-width {half:.2}"),
        ));
    }
    Ok(GridComparison { outcomes, norm_error: run.max_norm_error(), energy_drift: run.max_energy_drift() })
}

/// Particle-1 reduced density at small `t` against the initial cat marginal.
pub fn check_short_time(params: &ModelParams, t: f64, quad: &QuadratureSpec, points: usize) -> Result<CheckOutcome> {
    let nb = normal_basis(params)?;
    let half = quad.extent.unwrap_or_else(|| adaptive_extent(&nb, t));
    let grid = reduction::output_grid(half, points);
    let evo = Evolution::new(nb);
    let prof = reduction::reduce(&evo, 1, t, &grid, quad)?;
    let got = prof.total();
    let single = |x: f64| {
        let one = [params.cats[0], crate::model::CatSpec::new(0.0, 1.0), crate::model::CatSpec::new(0.0, 1.0)];
        initial_amplitude(&one, [x, 0.0, 0.0]).powi(2)
    };
    let raw: Vec<f64> = grid.iter().map(|&x| single(x)).collect();
    let norm: f64 = prof.weights.iter().zip(&raw).map(|(w, v)| w * v).sum();
    let peak = got.iter().cloned().fold(0.0, f64::max);
    let value = got
        .iter()
        .zip(&raw)
        .map(|(a, b)| (a - b / norm).abs() / peak)
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new(&format!("short-time marginal t={t}"), value, 1e-2, format!("{points} output points")))
}

/// Closed-form trajectory at rest corner `k` after `t`, for reporting.
pub fn corner_position(params: &ModelParams, k: usize, t: f64) -> Result<[f64; 3]> {
    let nb = normal_basis(params)?;
    let s0: ClassicalState = Corner::new(k, &params.cats).initial;
    Ok(classical::trajectory(&nb, &s0, t))
}
