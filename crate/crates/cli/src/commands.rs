//! The five subcommands. Each writes its files into the output directory and
//! returns the manifest lines it wants recorded.

use std::fmt::Write as _;
use std::time::Instant;

use catsim::classical::{self, Crossing};
use catsim::oracle::checks::{self, CheckOutcome};
use catsim::oracle::{ConvolveSpec, OracleRecord};
use catsim::reduction::{self, QuadratureSpec, ReducedDensityProfile, ReportOptions};
use catsim::{normal_basis, Evolution, Execution};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, opt, time_tag, OutDir};
use crate::svg::{Plot, Series, PALETTE};

/// Resolved settings for one invocation.
pub struct Run {
    pub config: RunConfig,
    /// Explicit `--t` times; `None` means the command's configured default.
    pub times: Option<Vec<f64>>,
    pub particles: Vec<usize>,
    pub exec: Execution,
}

/// What a command contributes to the run manifest.
#[derive(Default)]
pub struct Outcome {
    pub notes: Vec<String>,
    pub oracles: Vec<OracleRecord>,
    pub failures: usize,
}

pub fn eigen(run: &Run, out: &mut OutDir) -> Result<Outcome, CliError> {
    let params = run.config.model.params();
    let nb = normal_basis(&params)?;
    let mut rows: Vec<(String, f64)> = vec![
        ("lambda1".into(), nb.lambda1),
        ("lambda2".into(), nb.lambda2),
        ("lambda3".into(), 0.0),
        ("Omega1".into(), nb.big_omega1),
        ("Omega2".into(), nb.big_omega2),
        ("m1".into(), nb.m1),
        ("m2".into(), nb.m2),
        ("m3".into(), nb.m3),
        ("delta_omega_sq".into(), nb.delta),
    ];
    for i in 0..3 {
        for j in 0..3 {
            rows.push((format!("P{}{}", i + 1, j + 1), nb.p[i][j]));
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            rows.push((format!("Pinv{}{}", i + 1, j + 1), nb.p_inv[i][j]));
        }
    }
    for (name, v) in &rows {
        println!("{name:>15} = {v:+.12e}");
    }
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|(n, v)| vec![n.clone(), num(*v)]).collect();
    out.csv("eigen.csv", &["quantity", "value"], &csv_rows)?;
    Ok(Outcome::default())
}

fn crossing_rows(particle: usize, cs: &[Crossing], labels: &[String]) -> Vec<Vec<String>> {
    cs.iter()
        .map(|c| {
            vec![
                particle.to_string(),
                num(c.time),
                labels[c.pair.0].clone(),
                labels[c.pair.1].clone(),
                c.tangential.to_string(),
            ]
        })
        .collect()
}

pub fn classical(run: &Run, out: &mut OutDir) -> Result<Outcome, CliError> {
    let cfg = &run.config;
    let params = cfg.model.params();
    let nb = normal_basis(&params)?;
    if !(cfg.classical.dt > 0.0) || !(cfg.classical.tmax > 0.0) {
        return Err(CliError::Usage("classical.dt and classical.tmax must be positive".into()));
    }
    let ens = classical::ensemble_with(run.exec, &nb, &params.cats, cfg.classical.tmax, cfg.classical.dt);
    let labels: Vec<String> = ens.corners.iter().map(|c| c.label.clone()).collect();

    let mut rows = Vec::with_capacity(ens.times.len() * 8);
    for (i, &t) in ens.times.iter().enumerate() {
        for (c, label) in labels.iter().enumerate() {
            let x = ens.samples[c][i].x;
            rows.push(vec![num(t), label.clone(), num(x[0]), num(x[1]), num(x[2])]);
        }
    }
    out.csv("trajectories.csv", &["t", "corner_label", "x1", "x2", "x3"], &rows)?;

    let mut crossing_csv = Vec::new();
    let mut outcome = Outcome::default();
    println!("particle  first crossing  crossings up to t={}", cfg.classical.tmax);
    for &p in &run.particles {
        let cs = classical::crossings(&ens, p);
        let first = cs.first().map(|c| c.time);
        println!(
            "{p:>8}  {:>14}  {}",
            first.map(|t| format!("{t:.6}")).unwrap_or_else(|| "none".into()),
            cs.len()
        );
        outcome.notes.push(format!("first_crossing_{p} = {}", opt(first)));
        crossing_csv.extend(crossing_rows(p, &cs, &labels));
        if cfg.output.emit_svg {
            let series = (0..8)
                .map(|c| Series {
                    label: labels[c].clone(),
                    color: PALETTE[c],
                    points: ens.times.iter().zip(&ens.samples[c]).map(|(&t, s)| (t, s.x[p - 1])).collect(),
                })
                .collect();
            let plot = Plot {
                title: format!("Corner trajectories, particle {p}"),
                x_label: "t",
                y_label: "x",
                series,
            };
            out.text(&format!("trajectories_p{p}.svg"), &plot.render())?;
        }
    }
    out.csv("crossings.csv", &["particle", "time", "corner_a", "corner_b", "tangential"], &crossing_csv)?;
    Ok(outcome)
}

/// Roughly half the nodes of `q`, for a cheap step-halving estimate.
fn coarsened(q: &QuadratureSpec) -> Option<QuadratureSpec> {
    use catsim::quadrature::Rule;
    match q.rule {
        Rule::Trapezoid if q.points.div_ceil(2) >= reduction::MIN_POINTS => {
            Some(QuadratureSpec { points: q.points.div_ceil(2), ..*q })
        }
        Rule::GaussLegendre { panels } if panels.is_multiple_of(2) && q.points.is_multiple_of(2) => Some(QuadratureSpec {
            points: q.points / 2,
            rule: Rule::GaussLegendre { panels: panels / 2 },
            ..*q
        }),
        _ => None,
    }
}

fn profile_plot(p: &ReducedDensityProfile) -> Plot<'static> {
    let pts = |v: &[f64]| p.grid.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    Plot {
        title: format!("Particle {} at t = {}", p.particle, p.t),
        x_label: "x",
        y_label: "reduced density",
        series: vec![
            Series { label: "packet at 0".into(), color: PALETTE[0], points: pts(&p.packet0_eff) },
            Series { label: "packet at d".into(), color: PALETTE[1], points: pts(&p.packetd_eff) },
            Series { label: "interference".into(), color: PALETTE[2], points: pts(&p.interference_eff) },
            Series { label: "total".into(), color: "black", points: pts(&p.total()) },
        ],
    }
}

pub fn reduce(run: &Run, out: &mut OutDir) -> Result<Outcome, CliError> {
    let cfg = &run.config;
    let params = cfg.model.params();
    let evo = Evolution::new(normal_basis(&params)?);
    let quad = cfg.quadrature.profile_spec();
    quad.validate()?;
    let times = run.times.clone().unwrap_or_else(|| cfg.times.profiles.clone());
    let mut outcome = Outcome::default();
    let mut vis_rows = Vec::new();
    println!("particle         t  visibility  below theta");
    for &t in &times {
        let half = quad.extent.unwrap_or_else(|| reduction::adaptive_extent(evo.basis(), t));
        let grid = reduction::output_grid(half, cfg.quadrature.output_points);
        for &p in &run.particles {
            let prof = reduction::reduce_with(run.exec, &evo, p, t, &grid, &quad)?;
            let v = reduction::profile_visibility(&prof, cfg.quadrature.upsample);
            let delta = match coarsened(&quad) {
                Some(c) => {
                    let coarse = reduction::reduce_with(run.exec, &evo, p, t, &grid, &c)?;
                    Some((reduction::profile_visibility(&coarse, cfg.quadrature.upsample) - v).abs())
                }
                None => None,
            };
            println!("{p:>8}  {t:>8}  {v:>10.6}  {}", v < cfg.thresholds.theta_dec);
            let total = prof.total();
            let rows: Vec<Vec<String>> = (0..grid.len())
                .map(|i| {
                    vec![
                        num(grid[i]),
                        num(prof.packet0_eff[i]),
                        num(prof.packetd_eff[i]),
                        num(prof.interference_eff[i]),
                        num(total[i]),
                    ]
                })
                .collect();
            let stem = format!("profile_p{p}_t{}", time_tag(t));
            out.csv(
                &format!("{stem}.csv"),
                &["x", "packet0_eff", "packetd_eff", "interference_eff", "total"],
                &rows,
            )?;
            if cfg.output.emit_svg {
                out.text(&format!("{stem}.svg"), &profile_plot(&prof).render())?;
            }
            vis_rows.push(vec![p.to_string(), num(t), num(v), opt(delta), num(prof.tail_ratio), prof.saturated.to_string()]);
            outcome.notes.push(format!(
                "{stem}: visibility = {}, coarse_delta = {}, tail_ratio = {:.3e}, saturated = {}",
                num(v),
                opt(delta),
                prof.tail_ratio,
                prof.saturated
            ));
        }
    }
    out.csv(
        "visibility.csv",
        &["particle", "t", "visibility", "coarse_delta", "tail_ratio", "saturated"],
        &vis_rows,
    )?;
    Ok(outcome)
}

pub fn report(run: &Run, out: &mut OutDir) -> Result<Outcome, CliError> {
    let cfg = &run.config;
    let params = cfg.model.params();
    let times = match &run.times {
        Some(t) => t.clone(),
        None => {
            let ts = &cfg.times;
            if !(ts.step > 0.0) || ts.end < ts.start {
                return Err(CliError::Usage("times: need step > 0 and end >= start".into()));
            }
            reduction::time_range(ts.start, ts.end, ts.step)
        }
    };
    let quad = cfg.quadrature.report_spec();
    let opts = ReportOptions {
        theta_dec: cfg.thresholds.theta_dec,
        hold: cfg.thresholds.hold,
        convergence_stride: cfg.quadrature.convergence_stride,
        upsample: cfg.quadrature.upsample,
        exec: run.exec,
    };
    let rep = reduction::report(&params, &times, &quad, &opts)?;

    let rows: Vec<Vec<String>> = (0..rep.times.len())
        .map(|i| {
            vec![num(rep.times[i]), num(rep.visibility[0][i]), num(rep.visibility[1][i]), num(rep.visibility[2][i])]
        })
        .collect();
    out.csv("report.csv", &["t", "V1", "V2", "V3"], &rows)?;

    let summary: Vec<Vec<String>> = (0..3)
        .map(|p| {
            let lag = rep.onset[p].zip(rep.first_crossing[p]).map(|(o, c)| o - c);
            vec![(p + 1).to_string(), opt(rep.onset[p]), opt(rep.first_crossing[p]), opt(lag)]
        })
        .collect();
    out.csv("report_summary.csv", &["particle", "onset", "first_crossing", "onset_minus_crossing"], &summary)?;

    let conv: Vec<Vec<String>> =
        rep.convergence.iter().map(|(t, d)| vec![num(*t), num(d[0]), num(d[1]), num(d[2])]).collect();
    out.csv("convergence.csv", &["t", "dV1", "dV2", "dV3"], &conv)?;

    if cfg.output.emit_svg {
        let series = (0..3)
            .map(|p| Series { label: format!("V{}", p + 1), color: PALETTE[p], points: rep.series(p + 1) })
            .collect();
        let plot = Plot { title: "Interference visibility".into(), x_label: "t", y_label: "V", series };
        out.text("report.svg", &plot.render())?;
    }

    let fmt = |v: Option<f64>| v.map(|t| format!("{t:.3}")).unwrap_or_else(|| "none".into());
    println!(
        "{} times, theta_dec = {}, hold = {}, {} nodes per axis",
        rep.times.len(),
        rep.theta_dec,
        rep.hold,
        quad.points
    );
    println!("particle   onset   first crossing   onset - crossing");
    for p in 0..3 {
        let lag = rep.onset[p].zip(rep.first_crossing[p]).map(|(o, c)| o - c);
        println!("{:>8}  {:>6}  {:>15}  {:>17}", p + 1, fmt(rep.onset[p]), fmt(rep.first_crossing[p]), fmt(lag));
    }
    let order: Vec<String> = rep.onset_order().iter().map(|p| p.to_string()).collect();
    println!("onset order: {}", order.join(" < "));
    for (t, why) in &rep.skipped {
        println!("skipped t = {t}: {why}");
    }

    let mut outcome = Outcome::default();
    outcome.notes.push(format!("onset_order = {}", order.join(",")));
    for p in 0..3 {
        outcome.notes.push(format!("onset_{} = {}", p + 1, opt(rep.onset[p])));
        outcome.notes.push(format!("first_crossing_{} = {}", p + 1, opt(rep.first_crossing[p])));
    }
    outcome.notes.push(format!("max_convergence_delta = {}", num(rep.max_convergence_delta())));
    outcome.notes.push(format!("skipped_times = {}", rep.skipped.len()));
    Ok(outcome)
}

fn record(outcome: &mut Outcome, check: &CheckOutcome, parameters: &str, resolution: &str, started: Instant) {
    println!("{}", check.line());
    if !check.passed() {
        outcome.failures += 1;
    }
    outcome.oracles.push(OracleRecord::new(
        &check.name,
        parameters,
        resolution,
        &format!("{} {:.6e} (tolerance {:.1e})", if check.passed() { "PASS" } else { "FAIL" }, check.value, check.tolerance),
        &format!("{}; {:.2} s", check.detail, started.elapsed().as_secs_f64()),
    ));
}

/// Energy drift limit of the split-operator solver, relative.
const ENERGY_DRIFT_LIMIT: f64 = 1e-6;
const NORM_LIMIT: f64 = 1e-10;

pub fn verify(run: &Run, _out: &mut OutDir) -> Result<Outcome, CliError> {
    let cfg = &run.config;
    let oc = &cfg.oracle;
    let params = cfg.model.params();
    let pstr = format!("{params:?}");
    let mut outcome = Outcome::default();

    let t0 = Instant::now();
    record(&mut outcome, &checks::check_basis(&params)?, &pstr, "closed form", t0);

    let t0 = Instant::now();
    let c = checks::check_classical(&params, oc.rk4_tmax, oc.rk4_step)?;
    record(&mut outcome, &c, &pstr, &format!("RK4 h = {}, t <= {}", oc.rk4_step, oc.rk4_tmax), t0);

    let t0 = Instant::now();
    let dual_times = reduction::time_range(0.505, 10.505, 0.5);
    let c = checks::check_dual_path(&params, &dual_times)?;
    record(&mut outcome, &c, &pstr, &format!("{} times", dual_times.len()), t0);

    let t0 = Instant::now();
    let quad = cfg.quadrature.profile_spec();
    let c = checks::check_short_time(&params, oc.short_time, &quad, cfg.quadrature.output_points)?;
    record(&mut outcome, &c, &pstr, &format!("{} nodes per axis", quad.points), t0);

    if cfg.output.run_oracle {
        let spec = ConvolveSpec { points: oc.convolve_points, sigmas: oc.convolve_sigmas };
        for &t in &oc.convolve_times {
            let t0 = Instant::now();
            let c = checks::check_convolution(&params, t, oc.random_points, oc.seed, &spec)?;
            record(
                &mut outcome,
                &c,
                &format!("{pstr}, seed {}", oc.seed),
                &format!("{} nodes per axis, +-{} sigma", spec.points, spec.sigmas),
                t0,
            );
        }
        let t0 = Instant::now();
        let g = checks::check_grid(
            run.exec,
            &params,
            oc.grid_points,
            oc.grid_dt,
            &oc.grid_times,
            oc.grid_quadrature_points,
        )?;
        let res = format!("{}^3 grid, dt {}", oc.grid_points, oc.grid_dt);
        for c in &g.outcomes {
            record(&mut outcome, c, &pstr, &res, t0);
        }
        let mut extra = String::new();
        let _ = write!(extra, "norm error {:.3e}, energy drift {:.3e}", g.norm_error, g.energy_drift);
        for (name, value, limit) in
            [("grid norm conservation", g.norm_error, NORM_LIMIT), ("grid energy drift", g.energy_drift, ENERGY_DRIFT_LIMIT)]
        {
            let c = CheckOutcome { name: name.into(), value, tolerance: limit, detail: extra.clone() };
            record(&mut outcome, &c, &pstr, &res, t0);
        }
    } else {
        println!("oracle runs skipped (pass --oracle to compare against the convolution and grid solvers)");
    }
    outcome.notes.push(format!("failed_checks = {}", outcome.failures));
    Ok(outcome)
}
