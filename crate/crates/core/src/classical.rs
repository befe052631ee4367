//! Closed-form classical trajectories, the 2³ corner ensemble and crossing detection.

use crate::evolution::{packet_offsets_for, DISPLACED};
use crate::model::{CatSpec, NormalModeBasis};
use crate::par::{self, Execution};

/// Default sampling step for ensembles.
pub const DEFAULT_DT: f64 = 0.005;
/// Pairwise separations at or below this are treated as contact.
pub const CONTACT_TOL: f64 = 1e-9;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub t: f64,
}

impl ClassicalState {
    pub fn at_rest(x: [f64; 3]) -> Self {
        Self { x, v: [0.0; 3], t: 0.0 }
    }
}

/// Constants of the normal-mode solution
/// `z₁ = A₁ sin Ω₁t + B₁ cos Ω₁t`, `z₂ = A₂ sin Ω₂t + B₂ cos Ω₂t`, `z₃ = C₁t + C₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConstants {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn integration_constants(basis: &NormalModeBasis, s0: &ClassicalState) -> IntegrationConstants {
    let z = basis.to_normal(s0.x);
    let zd = basis.to_normal(s0.v);
    IntegrationConstants {
        a1: zd[0] / basis.big_omega1,
        a2: zd[1] / basis.big_omega2,
        b1: z[0],
        b2: z[1],
        c1: zd[2],
        c2: z[2],
    }
}

/// Position and velocity at time `t` (initial time zero).
pub fn state_at(basis: &NormalModeBasis, s0: &ClassicalState, t: f64) -> ClassicalState {
    state_from_constants(basis, &integration_constants(basis, s0), t)
}

fn state_from_constants(basis: &NormalModeBasis, k: &IntegrationConstants, t: f64) -> ClassicalState {
    let (w1, w2) = (basis.big_omega1, basis.big_omega2);
    let (s1, c1) = (w1 * t).sin_cos();
    let (s2, c2) = (w2 * t).sin_cos();
    let z = [k.a1 * s1 + k.b1 * c1, k.a2 * s2 + k.b2 * c2, k.c1 * t + k.c2];
    let zd = [
        w1 * (k.a1 * c1 - k.b1 * s1),
        w2 * (k.a2 * c2 - k.b2 * s2),
        k.c1,
    ];
    ClassicalState {
        x: basis.from_normal(z),
        v: basis.from_normal(zd),
        t,
    }
}

pub fn trajectory(basis: &NormalModeBasis, s0: &ClassicalState, t: f64) -> [f64; 3] {
    state_at(basis, s0, t).x
}

/// Kinetic plus spring energy.
pub fn total_energy(basis: &NormalModeBasis, s: &ClassicalState) -> f64 {
    let p = &basis.params;
    let kinetic: f64 = s.v.iter().map(|v| v * v).sum::<f64>() * 0.5 * p.m;
    let [x1, x2, x3] = s.x;
    let potential = 0.5
        * p.m
        * (p.omega12.powi(2) * (x1 - x2).powi(2)
            + p.omega13.powi(2) * (x1 - x3).powi(2)
            + p.omega23.powi(2) * (x2 - x3).powi(2));
    kinetic + potential
}

/// One of the eight corner initial conditions: each particle at `0` or `dᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    /// Packet index in the offset table.
    pub k: usize,
    pub label: String,
    pub initial: ClassicalState,
}

impl Corner {
    pub fn new(k: usize, cats: &[CatSpec; 3]) -> Self {
        let x = packet_offsets_for(k, cats);
        let parts: Vec<String> = (0..3)
            .map(|i| if DISPLACED[k][i] { format!("d{}", i + 1) } else { "0".to_string() })
            .collect();
        Self {
            k,
            label: parts.join("_"),
            initial: ClassicalState::at_rest(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub basis: NormalModeBasis,
    pub corners: Vec<Corner>,
    pub times: Vec<f64>,
    /// `samples[c][i]` is corner `c` at `times[i]`.
    pub samples: Vec<Vec<ClassicalState>>,
}

pub fn ensemble(basis: &NormalModeBasis, cats: &[CatSpec; 3], tmax: f64, dt: f64) -> TrajectoryEnsemble {
    ensemble_with(Execution::default(), basis, cats, tmax, dt)
}

pub fn ensemble_with(
    exec: Execution,
    basis: &NormalModeBasis,
    cats: &[CatSpec; 3],
    tmax: f64,
    dt: f64,
) -> TrajectoryEnsemble {
    assert!(dt > 0.0 && tmax >= 0.0, "need dt > 0 and tmax >= 0");
    let n = (tmax / dt + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let corners: Vec<Corner> = (0..8).map(|k| Corner::new(k, cats)).collect();
    let samples = par::map_slice(exec, &corners, |corner| {
        let consts = integration_constants(basis, &corner.initial);
        times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    corner.initial
                } else {
                    state_from_constants(basis, &consts, t)
                }
            })
            .collect()
    });
    TrajectoryEnsemble {
        basis: basis.clone(),
        corners,
        times,
        samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    /// Corner indices of the intersecting pair.
    pub pair: (usize, usize),
    /// `true` when the trajectories only touch.
    pub tangential: bool,
}

/// All times at which two corner trajectories of `particle` (1, 2 or 3)
/// intersect, sorted ascending.
pub fn crossings(e: &TrajectoryEnsemble, particle: usize) -> Vec<Crossing> {
    assert!((1..=3).contains(&particle), "particle must be 1, 2 or 3");
    let mut out = Vec::new();
    let nc = e.corners.len();
    for k in 0..nc {
        for l in (k + 1)..nc {
            pair_crossings(e, particle - 1, k, l, &mut out);
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out
}

pub fn first_crossing(e: &TrajectoryEnsemble, particle: usize) -> Option<f64> {
    crossings(e, particle).first().map(|c| c.time)
}

fn pair_crossings(e: &TrajectoryEnsemble, p: usize, k: usize, l: usize, out: &mut Vec<Crossing>) {
    let diff = |i: usize| e.samples[k][i].x[p] - e.samples[l][i].x[p];
    let n = e.times.len();
    // Pairs that start together are only compared once they have separated.
    let Some(start) = (0..n).find(|&i| diff(i).abs() > CONTACT_TOL) else {
        return;
    };
    let ck = integration_constants(&e.basis, &e.corners[k].initial);
    let cl = integration_constants(&e.basis, &e.corners[l].initial);
    let f = |t: f64| {
        state_from_constants(&e.basis, &ck, t).x[p] - state_from_constants(&e.basis, &cl, t).x[p]
    };

    let mut last_big = start;
    let mut sign = diff(start).signum();
    let mut touching: Option<usize> = None;
    for i in (start + 1)..n {
        let d = diff(i);
        if d.abs() <= CONTACT_TOL {
            touching = match touching {
                Some(j) if diff(j).abs() <= d.abs() => Some(j),
                _ => Some(i),
            };
            continue;
        }
        if d.signum() != sign {
            let time = bisect(&f, e.times[last_big], e.times[i]);
            out.push(Crossing { time, pair: (k, l), tangential: false });
            sign = d.signum();
        } else if let Some(j) = touching {
            out.push(Crossing { time: e.times[j], pair: (k, l), tangential: true });
        }
        touching = None;
        last_big = i;
    }
    if let Some(j) = touching {
        out.push(Crossing { time: e.times[j], pair: (k, l), tangential: true });
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
