//! Split-operator spectral solver for the three-particle Schrödinger equation.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::evolution::initial_amplitude;
use crate::model::{CatSpec, ModelParams};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Nodes per axis (power of two).
    pub points: usize,
    /// Periodic box `[−Lᵢ, Lᵢ)` per axis.
    pub half_width: [f64; 3],
    pub dt: f64,
}

impl GridSpec {
    pub fn step(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.points as f64
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        let h = self.step(axis);
        (0..self.points).map(|i| -self.half_width[axis] + h * i as f64).collect()
    }

    /// Power-of-two size, at least 8 nodes across `4σ` of the narrowest
    /// packet, and a kinetic phase per step below `π/4` at the grid edge.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !self.points.is_power_of_two() || self.points < 8 {
            return Err(Error::InvalidGrid(format!("points per axis must be a power of two >= 8, got {}", self.points)));
        }
        if !(self.dt > 0.0) || self.half_width.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidGrid("dt and half-widths must be positive".into()));
        }
        let smin = params.sigmas().iter().cloned().fold(f64::INFINITY, f64::min);
        for a in 0..3 {
            let h = self.step(a);
            if 4.0 * smin / h < 8.0 {
                return Err(Error::InvalidGrid(format!("axis {} step {h} under-resolves sigma {smin}", a + 1)));
            }
            let kmax = std::f64::consts::PI / h;
            let phase = params.hbar * kmax * kmax * self.dt / (2.0 * params.m);
            if phase >= std::f64::consts::FRAC_PI_4 {
                return Err(Error::InvalidGrid(format!("kinetic phase {phase} per step exceeds pi/4 on axis {}", a + 1)));
            }
        }
        Ok(())
    }
}

fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|m| if m < n / 2 { m as f64 * dk } else { (m as f64 - n as f64) * dk })
        .collect()
}

/// Marginals and invariants at one requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSnapshot {
    pub t: f64,
    /// Normalised marginal densities on [`GridSpec::axis`].
    pub marginals: [Vec<f64>; 3],
    pub norm: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEvolution {
    pub spec: GridSpec,
    pub axes: [Vec<f64>; 3],
    pub initial_energy: f64,
    pub snapshots: Vec<GridSnapshot>,
    pub steps: usize,
}

impl GridEvolution {
    pub fn max_norm_error(&self) -> f64 {
        self.snapshots.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| ((s.energy - self.initial_energy) / self.initial_energy).abs())
            .fold(0.0, f64::max)
    }
}

struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn run(&self, exec: Execution, data: &mut [C64], inverse: bool) {
        let n = self.n;
        let fft = if inverse { &self.inverse } else { &self.forward };
        // Axes 2 and 1 are local to each plane of fixed first index.
        par::for_each_chunk_mut(exec, data, n * n, |_, plane| {
            let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(plane, &mut scratch);
            let mut line = vec![C64::new(0.0, 0.0); n];
            for k in 0..n {
                for j in 0..n {
                    line[j] = plane[j * n + k];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for j in 0..n {
                    plane[j * n + k] = line[j];
                }
            }
        });
        // Axis 0 through per-slab copies.
        let slabs = par::map_range(exec, n, |j| {
            let mut block = vec![C64::new(0.0, 0.0); n * n];
            for k in 0..n {
                for i in 0..n {
                    block[k * n + i] = data[(i * n + j) * n + k];
                }
            }
            let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(&mut block, &mut scratch);
            block
        });
        for (j, block) in slabs.iter().enumerate() {
            for k in 0..n {
                for i in 0..n {
                    data[(i * n + j) * n + k] = block[k * n + i];
                }
            }
        }
        if inverse {
            let s = 1.0 / (n * n * n) as f64;
            par::for_each_mut(exec, data, |_, v| *v *= s);
        }
    }
}

struct Solver<'a> {
    exec: Execution,
    n: usize,
    spec: GridSpec,
    params: &'a ModelParams,
    potential: Vec<f64>,
    k2: [Vec<f64>; 3],
    fft: Fft3,
    cell: f64,
}

impl<'a> Solver<'a> {
    fn new(exec: Execution, params: &'a ModelParams, spec: GridSpec) -> Self {
        let n = spec.points;
        let axes: [Vec<f64>; 3] = std::array::from_fn(|a| spec.axis(a));
        let (s12, s13, s23) = (params.omega12.powi(2), params.omega13.powi(2), params.omega23.powi(2));
        let half_m = 0.5 * params.m;
        let potential = par::map_range(exec, n * n * n, |idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let (x1, x2, x3) = (axes[0][i], axes[1][j], axes[2][k]);
            half_m * (s12 * (x1 - x2).powi(2) + s13 * (x1 - x3).powi(2) + s23 * (x2 - x3).powi(2))
        });
        let k2 = std::array::from_fn(|a| wavenumbers(n, spec.step(a)).into_iter().map(|k| k * k).collect());
        Self {
            exec,
            n,
            spec,
            params,
            potential,
            k2,
            fft: Fft3::new(n),
            cell: spec.step(0) * spec.step(1) * spec.step(2),
        }
    }

    fn norm(&self, psi: &[C64]) -> f64 {
        psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell
    }

    fn potential_phase(&self, psi: &mut [C64], dt: f64) {
        let f = -dt / self.params.hbar;
        let pot = &self.potential;
        par::for_each_mut(self.exec, psi, |i, v| *v *= C64::from_polar(1.0, f * pot[i]));
    }

    fn kinetic_phase(&self, psi: &mut [C64], dt: f64) {
        let n = self.n;
        let f = -self.params.hbar * dt / (2.0 * self.params.m);
        let k2 = &self.k2;
        par::for_each_chunk_mut(self.exec, psi, n * n, |i, plane| {
            for j in 0..n {
                for k in 0..n {
                    plane[j * n + k] *= C64::from_polar(1.0, f * (k2[0][i] + k2[1][j] + k2[2][k]));
                }
            }
        });
    }

    fn energy(&self, psi: &[C64]) -> f64 {
        let n = self.n;
        let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        let pot: f64 = psi.iter().zip(&self.potential).map(|(v, p)| v.norm_sqr() * p).sum();
        let mut hat = psi.to_vec();
        self.fft.run(self.exec, &mut hat, false);
        let mut kin = 0.0;
        let mut hat_norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let w = hat[(i * n + j) * n + k].norm_sqr();
                    hat_norm += w;
                    kin += w * (self.k2[0][i] + self.k2[1][j] + self.k2[2][k]);
                }
            }
        }
        let hb = self.params.hbar;
        hb * hb / (2.0 * self.params.m) * kin / hat_norm + pot / norm
    }

    fn marginals(&self, psi: &[C64]) -> [Vec<f64>; 3] {
        let n = self.n;
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let w = psi[(i * n + j) * n + k].norm_sqr();
                    out[0][i] += w;
                    out[1][j] += w;
                    out[2][k] += w;
                }
            }
        }
        for (a, m) in out.iter_mut().enumerate() {
            let h = self.spec.step(a);
            let total: f64 = m.iter().sum::<f64>() * h;
            m.iter_mut().for_each(|v| *v /= total);
        }
        out
    }

    fn strang(&self, psi: &mut [C64], steps: usize, dt: f64) {
        for _ in 0..steps {
            self.potential_phase(psi, 0.5 * dt);
            self.fft.run(self.exec, psi, false);
            self.kinetic_phase(psi, dt);
            self.fft.run(self.exec, psi, true);
            self.potential_phase(psi, 0.5 * dt);
        }
    }
}

/// Evolves the cat product state on `spec` and records marginals at each of
/// `times` (ascending). Steps are `spec.dt`, shortened so every time is hit.
pub fn grid_evolve(exec: Execution, params: &ModelParams, spec: &GridSpec, times: &[f64]) -> Result<GridEvolution> {
    params.validate()?;
    spec.validate(params)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|t| !(*t > 0.0)) {
        return Err(Error::InvalidGrid("snapshot times must be positive and ascending".into()));
    }
    let solver = Solver::new(exec, params, *spec);
    let n = spec.points;
    let axes: [Vec<f64>; 3] = std::array::from_fn(|a| spec.axis(a));
    let cats: [CatSpec; 3] = params.cats;
    let mut psi = par::map_range(exec, n * n * n, |idx| {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        C64::new(initial_amplitude(&cats, [axes[0][i], axes[1][j], axes[2][k]]), 0.0)
    });
    let s = 1.0 / solver.norm(&psi).sqrt();
    psi.iter_mut().for_each(|v| *v *= s);
    let initial_energy = solver.energy(&psi);

    let mut snapshots = Vec::new();
    let mut now = 0.0;
    let mut total_steps = 0;
    for &t in times {
        let span = t - now;
        let steps = (span / spec.dt).ceil().max(1.0) as usize;
        solver.strang(&mut psi, steps, span / steps as f64);
        total_steps += steps;
        now = t;
        snapshots.push(GridSnapshot {
            t,
            marginals: solver.marginals(&psi),
            norm: solver.norm(&psi),
            energy: solver.energy(&psi),
        });
    }
    Ok(GridEvolution { spec: *spec, axes, initial_energy, snapshots, steps: total_steps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneDimEvolution {
    pub width: f64,
    pub norm: f64,
}

/// `σ √(1 + (ħt / 2mσ²)²)`.
pub fn free_gaussian_width(sigma: f64, m: f64, hbar: f64, t: f64) -> f64 {
    sigma * (1.0 + (hbar * t / (2.0 * m * sigma * sigma)).powi(2)).sqrt()
}

/// Free 1-D Gaussian `e^{−x²/4σ²}` stepped spectrally to `t`; returns its
/// position standard deviation and norm.
pub fn grid_evolve_1d(sigma: f64, m: f64, hbar: f64, points: usize, half_width: f64, dt: f64, t: f64) -> OneDimEvolution {
    let h = 2.0 * half_width / points as f64;
    let xs: Vec<f64> = (0..points).map(|i| -half_width + h * i as f64).collect();
    let mut psi: Vec<C64> = xs.iter().map(|x| C64::new((-x * x / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
    let norm0 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
    psi.iter_mut().for_each(|v| *v /= norm0.sqrt());
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(points);
    let inv = planner.plan_fft_inverse(points);
    let k = wavenumbers(points, h);
    let steps = (t / dt).ceil().max(1.0) as usize;
    let step = t / steps as f64;
    for _ in 0..steps {
        fwd.process(&mut psi);
        for (v, kk) in psi.iter_mut().zip(&k) {
            *v *= C64::from_polar(1.0 / points as f64, -hbar * kk * kk * step / (2.0 * m));
        }
        inv.process(&mut psi);
    }
    let w: Vec<f64> = psi.iter().map(|v| v.norm_sqr() * h).collect();
    let norm: f64 = w.iter().sum();
    let mean: f64 = w.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / norm;
    let var: f64 = w.iter().zip(&xs).map(|(w, x)| w * (x - mean).powi(2)).sum::<f64>() / norm;
    OneDimEvolution { width: var.sqrt(), norm }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_gaussian_spreads_as_expected() {
        let r = grid_evolve_1d(1.0, 1.0, 1.0, 1024, 60.0, 0.01, 4.0);
        let expect = free_gaussian_width(1.0, 1.0, 1.0, 4.0);
        assert!((r.width - expect).abs() < 1e-4, "{} vs {expect}", r.width);
        assert!((r.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn small_grid_conserves_norm() {
        let p = ModelParams::paper_with_sigma(2.0);
        let spec = GridSpec { points: 32, half_width: [14.0; 3], dt: 0.02 };
        let g = grid_evolve(Execution::Sequential, &p, &spec, &[0.2]).unwrap();
        assert!(g.max_norm_error() < 1e-10);
        for m in &g.snapshots[0].marginals {
            let s: f64 = m.iter().sum::<f64>() * spec.step(0);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_spec_checks() {
        let p = ModelParams::paper();
        let bad = GridSpec { points: 100, half_width: [10.0; 3], dt: 0.01 };
        assert!(bad.validate(&p).is_err());
        let coarse = GridSpec { points: 16, half_width: [40.0; 3], dt: 0.01 };
        assert!(coarse.validate(&p).is_err());
    }
}
