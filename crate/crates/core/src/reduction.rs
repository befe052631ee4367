//! Reduced single-particle densities, visibility and decoherence onset.
//!
//! The watched particle's eight packets split into the group that starts at
//! `0` and the group that starts at `dⱼ`. With `S₀ = Σ_{g₀} ψ⁽ᵏ⁾` and
//! `S_d = Σ_{g_d} ψ⁽ᵏ⁾` the integrand `|S₀ + S_d|²` is regrouped pointwise as
//! `|S₀|² + |S_d|² + 2 Re(S₀ S_d*)`: the two effective packets (each carrying its
//! own within-group interference) and the cross-group interference. The
//! regrouping is exact, so the three components always sum to the marginal of
//! the total density.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::classical::{self, first_crossing};
use crate::error::{Error, Result};
use crate::evolution::{Evolution, ThetaField, DISPLACED, EXP_CLIP};
use crate::model::{normal_basis, ModelParams, NormalModeBasis};
use crate::par::{self, Execution};
use crate::quadrature::{self, Nodes, Rule};

pub const DEFAULT_POINTS: usize = 512;
pub const DEFAULT_OUTPUT_POINTS: usize = 401;
pub const MIN_POINTS: usize = 64;
/// Boundary integrand relative to the peak above which the extent is rejected.
pub const TAIL_LIMIT: f64 = 1e-8;
/// Fraction of clipped evaluations above which a reduction is rejected.
pub const SATURATION_LIMIT: f64 = 1e-3;
/// Spread multiples added around the packet centres by the extent rule.
pub const SPREAD_MULTIPLE: f64 = 8.0;
pub const THETA_DEC: f64 = 0.1;
pub const HOLD: f64 = 0.5;
pub const DEFAULT_UPSAMPLE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width `L` of the symmetric box `[−L, L]`; `None` uses the extent rule.
    pub extent: Option<f64>,
    /// Nodes per integrated axis.
    pub points: usize,
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            extent: None,
            points: DEFAULT_POINTS,
            rule: Rule::Trapezoid,
        }
    }
}

impl QuadratureSpec {
    pub fn trapezoid(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < MIN_POINTS {
            return Err(Error::InvalidQuadrature(format!(
                "need at least {MIN_POINTS} points per axis, got {}",
                self.points
            )));
        }
        if let Some(l) = self.extent {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidQuadrature(format!("extent must be positive, got {l}")));
            }
        }
        if let Rule::GaussLegendre { panels } = self.rule {
            if panels == 0 || !self.points.is_multiple_of(panels) {
                return Err(Error::InvalidQuadrature(format!(
                    "{panels} panels do not divide {} points",
                    self.points
                )));
            }
        }
        Ok(())
    }

    /// The same box with the step halved: `2N − 1` nested nodes for the
    /// trapezoid rule, `2N` (twice the panels) for Gauss–Legendre.
    pub fn refined(&self) -> Self {
        let (points, rule) = match self.rule {
            Rule::Trapezoid => (2 * self.points - 1, Rule::Trapezoid),
            Rule::GaussLegendre { panels } => (2 * self.points, Rule::GaussLegendre { panels: 2 * panels }),
        };
        Self { points, rule, ..*self }
    }

    fn nodes(&self, half_width: f64) -> Result<Nodes> {
        quadrature::nodes(self.rule, -half_width, half_width, self.points)
    }
}

/// Free-particle width estimate `maxᵢ σᵢ √(1 + (ħt / 2mσᵢ²)²)`.
pub fn spread_estimate(p: &ModelParams, t: f64) -> f64 {
    p.cats
        .iter()
        .map(|c| c.sigma * (1.0 + (p.hbar * t / (2.0 * p.m * c.sigma * c.sigma)).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Half-width covering every packet centre (initial offsets and the classical
/// corner positions at `t`) plus [`SPREAD_MULTIPLE`] spreads.
pub fn adaptive_extent(basis: &NormalModeBasis, t: f64) -> f64 {
    let p = &basis.params;
    let mut reach = p.cats.iter().map(|c| c.d.abs()).fold(0.0, f64::max);
    for k in 0..8 {
        let corner = classical::Corner::new(k, &p.cats);
        let x = classical::trajectory(basis, &corner.initial, t);
        reach = x.iter().fold(reach, |r, v| r.max(v.abs()));
    }
    reach + SPREAD_MULTIPLE * spread_estimate(p, t)
}

/// Uniform output grid on `[−L, L]`.
pub fn output_grid(half_width: f64, points: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|i| -half_width + h * i as f64).collect()
}

/// Packets whose watched coordinate starts at `0`, and those starting at `dⱼ`.
pub fn packet_groups(particle: usize) -> ([usize; 4], [usize; 4]) {
    assert!((1..=3).contains(&particle), "particle must be 1, 2 or 3");
    let j = particle - 1;
    let mut g0 = [0; 4];
    let mut gd = [0; 4];
    let (mut a, mut b) = (0, 0);
    for (k, row) in DISPLACED.iter().enumerate() {
        if row[j] {
            gd[b] = k;
            b += 1;
        } else {
            g0[a] = k;
            a += 1;
        }
    }
    (g0, gd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityProfile {
    /// 1, 2 or 3.
    pub particle: usize,
    pub t: f64,
    pub grid: Vec<f64>,
    /// Integration weights on `grid`.
    pub weights: Vec<f64>,
    pub packet0_eff: Vec<f64>,
    pub packetd_eff: Vec<f64>,
    pub interference_eff: Vec<f64>,
    /// Factor that took the shape marginal to unit integral.
    pub norm_constant: f64,
    /// Largest boundary integrand over the peak integrand.
    pub tail_ratio: f64,
    /// Evaluations excluded because their exponent was clipped.
    pub saturated: usize,
    pub quadrature: QuadratureSpec,
}

impl ReducedDensityProfile {
    pub fn total(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.packet0_eff[i] + self.packetd_eff[i] + self.interference_eff[i])
            .collect()
    }

    pub fn integral(&self) -> f64 {
        self.weights.iter().zip(self.total()).map(|(w, v)| w * v).sum()
    }
}

/// Integration weights for samples on an ascending grid (trapezoid).
pub fn grid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let hi = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (lo + hi)
        })
        .collect()
}

/// Components `(|S₀|², |S_d|², 2Re(S₀S_d*))` from the eight amplitudes.
#[inline]
fn split(amp: &[C64; 8], groups: &([usize; 4], [usize; 4])) -> [f64; 3] {
    let s0: C64 = groups.0.iter().map(|&k| amp[k]).sum();
    let sd: C64 = groups.1.iter().map(|&k| amp[k]).sum();
    [s0.norm_sqr(), sd.norm_sqr(), 2.0 * (s0 * sd.conj()).re]
}

#[derive(Debug, Clone, Copy, Default)]
struct Diagnostics {
    peak: f64,
    boundary: f64,
    saturated: usize,
    evaluated: usize,
}

impl Diagnostics {
    fn merge(&mut self, o: &Diagnostics) {
        self.peak = self.peak.max(o.peak);
        self.boundary = self.boundary.max(o.boundary);
        self.saturated += o.saturated;
        self.evaluated += o.evaluated;
    }

    fn check(&self) -> Result<f64> {
        if self.saturated as f64 > SATURATION_LIMIT * self.evaluated as f64 {
            return Err(Error::Saturation { count: self.saturated });
        }
        let ratio = if self.peak > 0.0 { self.boundary / self.peak } else { 0.0 };
        if !(ratio <= TAIL_LIMIT) {
            return Err(Error::TailLeak { ratio, limit: TAIL_LIMIT });
        }
        Ok(ratio)
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    particle: usize,
    t: f64,
    grid: Vec<f64>,
    weights: Vec<f64>,
    comps: Vec<[f64; 3]>,
    diag: Diagnostics,
    quad: QuadratureSpec,
) -> Result<ReducedDensityProfile> {
    let mut tail = diag.check()?;
    let totals: Vec<f64> = comps.iter().map(|c| c[0] + c[1] + c[2]).collect();
    let peak = totals.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        let ends = totals[0].abs().max(totals[totals.len() - 1].abs()) / peak;
        if !(ends <= TAIL_LIMIT) {
            return Err(Error::TailLeak { ratio: ends, limit: TAIL_LIMIT });
        }
        tail = tail.max(ends);
    }
    let integral: f64 = weights.iter().zip(&totals).map(|(w, v)| w * v).sum();
    if !(integral > 0.0 && integral.is_finite()) {
        return Err(Error::NumericalUnderflow { modulus: integral });
    }
    let norm = 1.0 / integral;
    Ok(ReducedDensityProfile {
        particle,
        t,
        grid,
        weights,
        packet0_eff: comps.iter().map(|c| c[0] * norm).collect(),
        packetd_eff: comps.iter().map(|c| c[1] * norm).collect(),
        interference_eff: comps.iter().map(|c| c[2] * norm).collect(),
        norm_constant: norm,
        tail_ratio: tail,
        saturated: diag.saturated,
        quadrature: quad,
    })
}

/// Per-coordinate real parts and phases of the linear exponent terms along one axis.
struct AxisTable {
    re: Vec<[f64; 8]>,
    ph: Vec<[C64; 8]>,
}

impl AxisTable {
    fn new(field: &ThetaField, axis: usize, coords: &[f64]) -> Self {
        let re = coords
            .iter()
            .map(|&v| std::array::from_fn(|k| field.lin[k][axis].re * v))
            .collect();
        let ph = coords
            .iter()
            .map(|&v| std::array::from_fn(|k| C64::from_polar(1.0, field.lin[k][axis].im * v)))
            .collect();
        Self { re, ph }
    }
}

/// Reduced density of `particle` on an arbitrary ascending output grid, the
/// other two coordinates integrated with `quad`.
pub fn reduce(
    evo: &Evolution,
    particle: usize,
    t: f64,
    grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ReducedDensityProfile> {
    reduce_with(Execution::default(), evo, particle, t, grid, quad)
}

pub fn reduce_with(
    exec: Execution,
    evo: &Evolution,
    particle: usize,
    t: f64,
    grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ReducedDensityProfile> {
    assert!((1..=3).contains(&particle), "particle must be 1, 2 or 3");
    quad.validate()?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("output grid must be ascending with at least 2 points".into()));
    }
    let field = evo.field(t)?;
    let half = quad.extent.unwrap_or_else(|| adaptive_extent(evo.basis(), t));
    let nodes = quad.nodes(half)?;
    let groups = packet_groups(particle);
    let n = nodes.x.len();
    let out_axis = particle - 1;
    let (ax_a, ax_b) = match out_axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let t_out = AxisTable::new(&field, out_axis, grid);
    let t_a = AxisTable::new(&field, ax_a, &nodes.x);
    let t_b = AxisTable::new(&field, ax_b, &nodes.x);
    let qd = field.q_diag.map(|q| q.re);
    let qo = field.q_off.map(|q| q.re);
    let c_re = field.constant.map(|c| c.re);
    let c_ph = field.constant.map(|c| C64::from_polar(1.0, c.im));

    let rows = par::map_range(exec, grid.len(), |g| {
        let mut acc = [0.0; 3];
        let mut d = Diagnostics::default();
        let mut amp = [C64::new(0.0, 0.0); 8];
        let mut r_g = [0.0; 8];
        let mut p_g = [C64::new(0.0, 0.0); 8];
        let mut r_ga = [0.0; 8];
        let mut p_ga = [C64::new(0.0, 0.0); 8];
        for k in 0..8 {
            r_g[k] = c_re[k] + t_out.re[g][k];
            p_g[k] = c_ph[k] * t_out.ph[g][k];
        }
        let mut pt = [0.0; 3];
        pt[out_axis] = grid[g];
        for i in 0..n {
            pt[ax_a] = nodes.x[i];
            for k in 0..8 {
                r_ga[k] = r_g[k] + t_a.re[i][k];
                p_ga[k] = p_g[k] * t_a.ph[i][k];
            }
            let mut row = [0.0; 3];
            for j in 0..n {
                pt[ax_b] = nodes.x[j];
                let base = qd[0] * pt[0] * pt[0]
                    + qd[1] * pt[1] * pt[1]
                    + qd[2] * pt[2] * pt[2]
                    + qo[0] * pt[0] * pt[1]
                    + qo[1] * pt[1] * pt[2]
                    + qo[2] * pt[2] * pt[0];
                let mut clipped = false;
                for k in 0..8 {
                    let mut re = base + r_ga[k] + t_b.re[j][k];
                    if re > EXP_CLIP {
                        re = EXP_CLIP;
                        clipped = true;
                    }
                    amp[k] = p_ga[k] * t_b.ph[j][k] * re.exp();
                }
                d.evaluated += 1;
                if clipped {
                    d.saturated += 1;
                    continue;
                }
                let c = split(&amp, &groups);
                let total = c[0] + c[1] + c[2];
                d.peak = d.peak.max(total);
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    d.boundary = d.boundary.max(total.abs());
                }
                let w = nodes.w[j];
                for m in 0..3 {
                    row[m] += w * c[m];
                }
            }
            for m in 0..3 {
                acc[m] += nodes.w[i] * row[m];
            }
        }
        (acc, d)
    });

    let mut diag = Diagnostics::default();
    let mut comps = Vec::with_capacity(grid.len());
    for (c, d) in rows {
        diag.merge(&d);
        comps.push(c);
    }
    finish(particle, t, grid.to_vec(), grid_weights(grid), comps, diag, *quad)
}

/// All three reduced densities at once from a single `N³` evaluation; each
/// profile's output grid is the quadrature node set.
pub fn reduce_all(evo: &Evolution, t: f64, quad: &QuadratureSpec) -> Result<[ReducedDensityProfile; 3]> {
    reduce_all_with(Execution::default(), evo, t, quad)
}

pub fn reduce_all_with(
    exec: Execution,
    evo: &Evolution,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<[ReducedDensityProfile; 3]> {
    quad.validate()?;
    let field = evo.field(t)?;
    let half = quad.extent.unwrap_or_else(|| adaptive_extent(evo.basis(), t));
    let nodes = quad.nodes(half)?;
    cube_marginals(exec, &field, &nodes, t, quad)
}

struct Slab {
    /// Particle 1 at node `i` (the slab index).
    first: [f64; 3],
    second: Vec<[f64; 3]>,
    third: Vec<[f64; 3]>,
    diag: Diagnostics,
}

fn cube_marginals(
    exec: Execution,
    field: &ThetaField,
    nodes: &Nodes,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<[ReducedDensityProfile; 3]> {
    let n = nodes.x.len();
    let groups = [packet_groups(1), packet_groups(2), packet_groups(3)];
    let (x, w) = (&nodes.x, &nodes.w);

    // Θ'ₖ = Re Q(X) + Σ_d lₖ,d x_d + cₖ: the linear part is tabulated per axis,
    // so the inner loop needs one real exponential and one product per packet.
    let re_tab: Vec<[[f64; 3]; 8]> = x
        .iter()
        .map(|&v| std::array::from_fn(|k| std::array::from_fn(|d| field.lin[k][d].re * v)))
        .collect();
    let ph_tab: Vec<[[C64; 3]; 8]> = x
        .iter()
        .map(|&v| std::array::from_fn(|k| std::array::from_fn(|d| C64::from_polar(1.0, field.lin[k][d].im * v))))
        .collect();
    let qd = field.q_diag.map(|q| q.re);
    let qo = field.q_off.map(|q| q.re);
    let c_re = field.constant.map(|c| c.re);
    let c_ph = field.constant.map(|c| C64::from_polar(1.0, c.im));

    let slabs = par::map_range(exec, n, |i| {
        let mut s = Slab {
            first: [0.0; 3],
            second: vec![[0.0; 3]; n],
            third: vec![[0.0; 3]; n],
            diag: Diagnostics::default(),
        };
        let mut amp = [C64::new(0.0, 0.0); 8];
        let mut r_ij = [0.0; 8];
        let mut p_ij = [C64::new(0.0, 0.0); 8];
        let xi = x[i];
        for j in 0..n {
            let xj = x[j];
            let base = qd[0] * xi * xi + qd[1] * xj * xj + qo[0] * xi * xj;
            for k in 0..8 {
                r_ij[k] = base + c_re[k] + re_tab[i][k][0] + re_tab[j][k][1];
                p_ij[k] = c_ph[k] * ph_tab[i][k][0] * ph_tab[j][k][1];
            }
            for l in 0..n {
                let xl = x[l];
                let b = qd[2] * xl * xl + qo[1] * xj * xl + qo[2] * xl * xi;
                let mut clipped = false;
                for k in 0..8 {
                    let mut re = r_ij[k] + re_tab[l][k][2] + b;
                    if re > EXP_CLIP {
                        re = EXP_CLIP;
                        clipped = true;
                    }
                    amp[k] = p_ij[k] * ph_tab[l][k][2] * re.exp();
                }
                s.diag.evaluated += 1;
                if clipped {
                    s.diag.saturated += 1;
                    continue;
                }
                let c1 = split(&amp, &groups[0]);
                let c2 = split(&amp, &groups[1]);
                let c3 = split(&amp, &groups[2]);
                let total = c1[0] + c1[1] + c1[2];
                s.diag.peak = s.diag.peak.max(total);
                if i == 0 || j == 0 || l == 0 || i == n - 1 || j == n - 1 || l == n - 1 {
                    s.diag.boundary = s.diag.boundary.max(total.abs());
                }
                let (wjl, wil, wij) = (w[j] * w[l], w[i] * w[l], w[i] * w[j]);
                for m in 0..3 {
                    s.first[m] += wjl * c1[m];
                    s.second[j][m] += wil * c2[m];
                    s.third[l][m] += wij * c3[m];
                }
            }
        }
        s
    });

    let mut diag = Diagnostics::default();
    let mut first = Vec::with_capacity(n);
    let mut second = vec![[0.0; 3]; n];
    let mut third = vec![[0.0; 3]; n];
    for s in &slabs {
        diag.merge(&s.diag);
        first.push(s.first);
        for j in 0..n {
            for m in 0..3 {
                second[j][m] += s.second[j][m];
                third[j][m] += s.third[j][m];
            }
        }
    }
    let make = |p: usize, comps: Vec<[f64; 3]>| finish(p, t, x.clone(), w.clone(), comps, diag, *quad);
    Ok([make(1, first)?, make(2, second)?, make(3, third)?])
}

/// `max|interference| / max(packet0 + packetd)`.
pub fn visibility(p: &ReducedDensityProfile) -> f64 {
    let inter = p.interference_eff.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let packets = (0..p.grid.len())
        .map(|i| p.packet0_eff[i] + p.packetd_eff[i])
        .fold(0.0, f64::max);
    if packets > 0.0 {
        inter / packets
    } else {
        0.0
    }
}

/// `∫|interference| / ∫(packet0 + packetd)`.
pub fn visibility_l1(p: &ReducedDensityProfile) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p.grid.len() {
        num += p.weights[i] * p.interference_eff[i].abs();
        den += p.weights[i] * (p.packet0_eff[i] + p.packetd_eff[i]);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// First time at which `V` drops below `theta` and stays below for `hold`.
///
/// The clock is armed only once `V` has been at or above `theta`: a series
/// that starts below the threshold has not yet shown the interference whose
/// decay is being timed. The hold window must lie inside the series.
pub fn decoherence_onset(series: &[(f64, f64)], theta: f64, hold: f64) -> Option<f64> {
    let slack = 1e-9 * hold.max(1.0);
    let end = series.last()?.0;
    let mut armed = false;
    for (n, &(t, v)) in series.iter().enumerate() {
        if v >= theta {
            armed = true;
            continue;
        }
        if !armed || t + hold > end + slack {
            continue;
        }
        let sustained = series[n..]
            .iter()
            .take_while(|(s, _)| *s <= t + hold + slack)
            .all(|&(_, u)| u < theta);
        if sustained {
            return Some(t);
        }
    }
    None
}

/// Trigonometric interpolation of uniform samples onto a grid `factor` times
/// finer, by zero-padding the spectrum. Exact for band-limited periodic data;
/// the profiles here vanish at both ends to well below [`TAIL_LIMIT`].
pub fn upsample(values: &[f64], factor: usize) -> Vec<f64> {
    let n = values.len();
    if factor <= 1 || n < 2 {
        return values.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::new();
    let mut spec: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    for q in 0..n {
        if n.is_multiple_of(2) && q == half {
            // Split the Nyquist bin symmetrically.
            padded[half] = 0.5 * spec[half];
            padded[m - half] = 0.5 * spec[half];
        } else if q < half || (n % 2 == 1 && q == half) {
            padded[q] = spec[q];
        } else {
            padded[m - (n - q)] = spec[q];
        }
    }
    planner.plan_fft_inverse(m).process(&mut padded);
    let scale = 1.0 / n as f64;
    // Drop the points past the last original node (they wrap around).
    padded.iter().take((n - 1) * factor + 1).map(|v| v.re * scale).collect()
}

/// [`visibility`] evaluated on a trigonometrically upsampled copy of a
/// uniformly sampled profile.
pub fn visibility_upsampled(p: &ReducedDensityProfile, factor: usize) -> f64 {
    let inter = upsample(&p.interference_eff, factor);
    let packets: Vec<f64> = (0..p.grid.len()).map(|i| p.packet0_eff[i] + p.packetd_eff[i]).collect();
    let packets = upsample(&packets, factor);
    let num = inter.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let den = packets.iter().cloned().fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn is_uniform(grid: &[f64]) -> bool {
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub theta_dec: f64,
    pub hold: f64,
    /// Check quadrature convergence at every `n`-th time (`0` disables).
    pub convergence_stride: usize,
    /// Upsampling factor applied to uniform profiles before taking maxima.
    pub upsample: usize,
    pub exec: Execution,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            theta_dec: THETA_DEC,
            hold: HOLD,
            convergence_stride: 0,
            upsample: DEFAULT_UPSAMPLE,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceReport {
    pub params: ModelParams,
    pub quadrature: QuadratureSpec,
    pub theta_dec: f64,
    pub hold: f64,
    pub times: Vec<f64>,
    /// `visibility[p][i]` for particle `p + 1` at `times[i]`.
    pub visibility: [Vec<f64>; 3],
    pub visibility_l1: [Vec<f64>; 3],
    pub onset: [Option<f64>; 3],
    pub first_crossing: [Option<f64>; 3],
    /// `(t, |ΔV|)` per particle under step halving.
    pub convergence: Vec<(f64, [f64; 3])>,
    /// Times that could not be evaluated, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl DecoherenceReport {
    pub fn series(&self, particle: usize) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .copied()
            .zip(self.visibility[particle - 1].iter().copied())
            .collect()
    }

    /// `V` of `particle` at the reported time closest to `t`.
    pub fn visibility_at(&self, particle: usize, t: f64) -> Option<f64> {
        let (i, _) = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?;
        Some(self.visibility[particle - 1][i])
    }

    /// Onset with a different threshold, from the stored series.
    pub fn onset_with(&self, particle: usize, theta: f64) -> Option<f64> {
        decoherence_onset(&self.series(particle), theta, self.hold)
    }

    /// Particles (1-based) in order of onset; particles without an onset are last.
    pub fn onset_order(&self) -> Vec<usize> {
        let mut ps = vec![1, 2, 3];
        ps.sort_by(|&a, &b| {
            let key = |p: usize| self.onset[p - 1].unwrap_or(f64::INFINITY);
            key(a).total_cmp(&key(b))
        });
        ps
    }

    pub fn max_convergence_delta(&self) -> f64 {
        self.convergence
            .iter()
            .flat_map(|(_, d)| d.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Visibility of a profile, upsampled when its grid is uniform.
pub fn profile_visibility(p: &ReducedDensityProfile, factor: usize) -> f64 {
    if factor > 1 && is_uniform(&p.grid) {
        visibility_upsampled(p, factor)
    } else {
        visibility(p)
    }
}

/// `|V(N) − V(refined N)|` per particle on a fixed box.
pub fn convergence_delta(
    exec: Execution,
    evo: &Evolution,
    t: f64,
    quad: &QuadratureSpec,
    factor: usize,
) -> Result<[f64; 3]> {
    let half = quad.extent.unwrap_or_else(|| adaptive_extent(evo.basis(), t));
    let fixed = QuadratureSpec { extent: Some(half), ..*quad };
    let coarse = reduce_all_with(exec, evo, t, &fixed)?;
    let fine = reduce_all_with(exec, evo, t, &fixed.refined())?;
    Ok(std::array::from_fn(|p| {
        (profile_visibility(&coarse[p], factor) - profile_visibility(&fine[p], factor)).abs()
    }))
}

/// Visibility series, onsets and classical first crossings for all three particles.
pub fn report(params: &ModelParams, times: &[f64], quad: &QuadratureSpec, opts: &ReportOptions) -> Result<DecoherenceReport> {
    let basis = normal_basis(params)?;
    quad.validate()?;
    let evo = Evolution::new(basis.clone());
    let mut kept = Vec::new();
    let mut vis: [Vec<f64>; 3] = Default::default();
    let mut vis_l1: [Vec<f64>; 3] = Default::default();
    let mut convergence = Vec::new();
    let mut skipped = Vec::new();
    for (n, &t) in times.iter().enumerate() {
        match reduce_all_with(opts.exec, &evo, t, quad) {
            Ok(profiles) => {
                kept.push(t);
                for p in 0..3 {
                    vis[p].push(profile_visibility(&profiles[p], opts.upsample));
                    vis_l1[p].push(visibility_l1(&profiles[p]));
                }
                if opts.convergence_stride > 0 && n % opts.convergence_stride == 0 {
                    convergence.push((t, convergence_delta(opts.exec, &evo, t, quad, opts.upsample)?));
                }
            }
            Err(e @ Error::Caustic { .. }) => skipped.push((t, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let mut report = DecoherenceReport {
        params: *params,
        quadrature: *quad,
        theta_dec: opts.theta_dec,
        hold: opts.hold,
        times: kept,
        visibility: vis,
        visibility_l1: vis_l1,
        onset: [None; 3],
        first_crossing: [None; 3],
        convergence,
        skipped,
    };
    for p in 1..=3 {
        report.onset[p - 1] = decoherence_onset(&report.series(p), opts.theta_dec, opts.hold);
    }
    let tmax = times.iter().cloned().fold(0.0, f64::max);
    let ens = classical::ensemble_with(opts.exec, &basis, &params.cats, tmax, classical::DEFAULT_DT);
    for p in 1..=3 {
        report.first_crossing[p - 1] = first_crossing(&ens, p);
    }
    Ok(report)
}

/// `start, start + step, …` up to and including `end` (within rounding).
pub fn time_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "time step must be positive");
    let n = ((end - start) / step + 1e-9).floor() as i64;
    // Snap to 1e-9 so that decimal steps print cleanly.
    (0..=n.max(-1))
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_for_each_particle() {
        assert_eq!(packet_groups(1), ([0, 2, 3, 6], [1, 4, 5, 7]));
        assert_eq!(packet_groups(2), ([0, 1, 3, 5], [2, 4, 6, 7]));
        assert_eq!(packet_groups(3), ([0, 1, 2, 4], [3, 5, 6, 7]));
    }

    #[test]
    fn onset_trivial_cases() {
        let ones: Vec<(f64, f64)> = time_range(0.0, 10.0, 0.1).into_iter().map(|t| (t, 1.0)).collect();
        assert_eq!(decoherence_onset(&ones, 0.1, 0.5), None);
        let step: Vec<(f64, f64)> = time_range(0.0, 10.0, 0.1)
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, if i >= 50 { 0.0 } else { 1.0 }))
            .collect();
        let on = decoherence_onset(&step, 0.1, 0.5).unwrap();
        assert!((on - 5.0).abs() < 1e-12);
    }

    #[test]
    fn onset_requires_sustained_drop() {
        let s = [(0.0, 1.0), (0.1, 0.0), (0.2, 1.0), (0.3, 0.0), (0.4, 0.0), (0.5, 0.0), (0.6, 0.0), (0.7, 0.0), (0.8, 0.0)];
        assert_eq!(decoherence_onset(&s, 0.1, 0.5), Some(0.3));
        // Below threshold from the start: never armed.
        let low = [(0.0, 0.01), (0.5, 0.01), (1.0, 0.01)];
        assert_eq!(decoherence_onset(&low, 0.1, 0.5), None);
    }

    #[test]
    fn zero_interference_has_zero_visibility() {
        let p = ReducedDensityProfile {
            particle: 1,
            t: 1.0,
            grid: vec![0.0, 1.0, 2.0],
            weights: vec![0.5, 1.0, 0.5],
            packet0_eff: vec![0.1, 0.5, 0.1],
            packetd_eff: vec![0.0, 0.2, 0.0],
            interference_eff: vec![0.0; 3],
            norm_constant: 1.0,
            tail_ratio: 0.0,
            saturated: 0,
            quadrature: QuadratureSpec::default(),
        };
        assert_eq!(visibility(&p), 0.0);
        assert_eq!(visibility_l1(&p), 0.0);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::trapezoid(32).validate().is_err());
        assert!(QuadratureSpec::trapezoid(64).validate().is_ok());
        assert_eq!(QuadratureSpec::trapezoid(64).refined().points, 127);
    }

    #[test]
    fn upsampling_reproduces_smooth_samples() {
        let grid = output_grid(12.0, 97);
        let f = |x: f64| (-(x - 1.3) * (x - 1.3) / 2.0).exp() * (2.0 * x).cos();
        let v: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let up = upsample(&v, 4);
        let fine = output_grid(12.0, 96 * 4 + 1);
        assert_eq!(up.len(), fine.len());
        for (u, &x) in up.iter().zip(&fine) {
            assert!((u - f(x)).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn time_range_hits_endpoints() {
        let t = time_range(0.005, 10.505, 0.05);
        assert_eq!(t.len(), 211);
        assert!((t[60] - 3.005).abs() < 1e-12);
        assert!((t[210] - 10.505).abs() < 1e-12);
    }
}
