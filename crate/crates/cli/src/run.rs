//! The four experiment kinds.

use refsde_core::penalty::max_error_at;
use refsde_core::sde::monte_carlo;
use refsde_core::stats::{energy_distance, ks_statistic, ks_two_sample, strong_convergence_study, SchemeCell};
use refsde_core::{
    euler_penalized, lemma_bounds, oracle_halfline, solve_penalized, solve_skorokhod, verify_solution, Cadlag,
    ConvexDomain, Grid, HSpec, PenalizedPath, StepPath, ZComponent, BOUNDARY_TOL,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Builtin, ExperimentConfig, Format, Kind, Pairing};
use crate::error::CliError;
use crate::output::{fmt_f64, ArtifactEntry, Artifacts};

/// The reflected-BM acceptance cell and its limits.
const BENCH_CELL: (f64, f64) = (4096.0, 1.0 / 1024.0);
const BENCH_KS: f64 = 0.05;
const BENCH_Z: f64 = 3.0;

/// Sample paths written per cell by `simulate`.
const SAMPLE_PATHS: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct PathFailure {
    pub cell: usize,
    pub path: u64,
    pub message: String,
}

#[derive(Debug, Default)]
struct Tally {
    attempted: usize,
    failures: Vec<PathFailure>,
}

impl Tally {
    fn record<T>(&mut self, cell: usize, path: u64, r: refsde_core::Result<T>) -> Option<T> {
        self.attempted += 1;
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(PathFailure {
                    cell,
                    path,
                    message: e.to_string(),
                });
                None
            }
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub failures: usize,
    pub attempted: usize,
    pub acceptance: Option<bool>,
    pub artifacts: Vec<ArtifactEntry>,
    pub summary: Value,
}

impl Outcome {
    pub fn failure_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failures as f64 / self.attempted as f64
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut art = Artifacts::new(&cfg.out, cfg.hash())?;
    let mut tally = Tally::default();
    let (acceptance, extra) = match cfg.kind {
        Kind::Skorokhod => skorokhod(cfg, &mut art, &mut tally)?,
        Kind::Penalize => penalize(cfg, &mut art, &mut tally)?,
        Kind::Simulate => simulate(cfg, &mut art, &mut tally)?,
        Kind::Converge => converge(cfg, &mut art, &mut tally)?,
    };
    let rate = if tally.attempted == 0 {
        0.0
    } else {
        tally.failures.len() as f64 / tally.attempted as f64
    };
    let summary = json!({
        "kind": cfg.kind,
        "config_hash": art.config_hash(),
        "attempted": tally.attempted,
        "failures": tally.failures.len(),
        "failure_rate": rate,
        "failed_paths": tally.failures,
        "acceptance": acceptance,
        "details": extra,
    });
    let artifacts = art.finish(cfg, summary.clone())?;
    Ok(Outcome {
        failures: tally.failures.len(),
        attempted: tally.attempted,
        acceptance,
        artifacts,
        summary,
    })
}

fn path_json(p: &StepPath) -> Value {
    json!({
        "times": p.times(),
        "values": p.values().collect::<Vec<_>>(),
        "horizon": p.horizon(),
    })
}

fn sup_diff(a: &StepPath, b: &StepPath) -> f64 {
    a.times()
        .iter()
        .chain(b.times())
        .map(|&t| {
            a.value_at(t)
                .iter()
                .zip(b.value_at(t))
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn skorokhod(
    cfg: &ExperimentConfig,
    art: &mut Artifacts,
    tally: &mut Tally,
) -> Result<(Option<bool>, Value), CliError> {
    let dom = cfg.domain();
    let y = cfg
        .path_driver
        .as_ref()
        .expect("resolved")
        .to_path(cfg.horizon)
        .map_err(num)?;
    let Some(sol) = tally.record(0, 0, solve_skorokhod(&dom, &y)) else {
        return Ok((cfg.builtin.map(|_| false), Value::Null));
    };
    let rep = verify_solution(&dom, &sol, BOUNDARY_TOL);
    let check = |c: refsde_core::skorokhod::PropertyCheck| json!({"pass": c.pass, "worst_residual": c.worst_residual});
    let verification = json!({
        "decomposition": check(rep.decomposition),
        "membership": check(rep.membership),
        "support": check(rep.support),
        "normal": check(rep.normal),
        "all_pass": rep.all_pass(),
    });
    let variation = sol.regulator_variation(cfg.horizon);
    if cfg.wants(Format::Csv) {
        art.path_csv("x.csv", &sol.x, &[])?;
        art.path_csv("k.csv", &sol.k, &[])?;
    }
    if cfg.wants(Format::Json) {
        art.json(
            "skorokhod.json",
            json!({
                "x": path_json(&sol.x),
                "k": path_json(&sol.k),
                "regulator_variation": variation,
                "verification": verification,
            }),
        )?;
    }
    let acceptance = match cfg.builtin {
        Some(Builtin::ThreeJump) => {
            let o = oracle_halfline(&y).map_err(num)?;
            let xs: Vec<f64> = sol.x.values().map(|v| v[0]).collect();
            let ks: Vec<f64> = sol.k.values().map(|v| v[0]).collect();
            Some(
                rep.all_pass()
                    && sup_diff(&sol.x, &o.x) <= 1e-12
                    && sup_diff(&sol.k, &o.k) <= 1e-12
                    && xs == [0.0, 0.0, 2.0]
                    && ks == [0.0, 1.0, 1.0],
            )
        }
        _ => None,
    };
    Ok((
        acceptance,
        json!({"regulator_variation": variation, "verification_pass": rep.all_pass()}),
    ))
}

fn num(e: refsde_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Uniform sample grid merged with the breakpoints of `y`.
fn plot_times(y: &StepPath, q: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..=512).map(|k| q * (k as f64 / 512.0)).collect();
    t.extend(y.times().iter().copied().filter(|&s| s <= q));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    n: f64,
    statistic: &'static str,
    value: f64,
    threshold: Option<f64>,
    pass: bool,
}

fn penalize(cfg: &ExperimentConfig, art: &mut Artifacts, tally: &mut Tally) -> Result<(Option<bool>, Value), CliError> {
    let dom = cfg.domain();
    let q = cfg.horizon;
    let y = cfg.path_driver.as_ref().expect("resolved").to_path(q).map_err(num)?;
    let bounds = lemma_bounds(&dom, &y, q, cfg.sweep.delta).map_err(num)?;
    let reference = tally.record(0, 0, solve_skorokhod(&dom, &y));

    let mut bps: Vec<f64> = y.times().iter().copied().filter(|&t| t < q).collect();
    bps.push(q);
    let mids: Vec<f64> = bps.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let jumps: Vec<f64> = (1..y.len())
        .filter(|&k| y.time(k) <= q && y.value(k) != y.value(k - 1))
        .map(|k| y.time(k))
        .collect();

    let mut rows = Vec::new();
    let mut solved: Vec<(f64, PenalizedPath)> = Vec::new();
    for (i, &n) in cfg.sweep.n.iter().enumerate() {
        let Some(x) = tally.record(i, 0, solve_penalized(&dom, &y, n)) else {
            continue;
        };
        let sup = x.sup_deviation(dom.anchor(), q);
        let var = x.penalty_variation(q);
        let (ts, tv) = if bounds.precondition_ok {
            (Some(bounds.bound_sup), Some(bounds.bound_var))
        } else {
            (None, None)
        };
        let within = |v: f64, t: Option<f64>| t.is_none_or(|t| v <= t + 1e-9);
        rows.push(SweepRow {
            n,
            statistic: "sup_deviation",
            value: sup,
            threshold: ts,
            pass: within(sup, ts),
        });
        rows.push(SweepRow {
            n,
            statistic: "penalty_variation",
            value: var,
            threshold: tv,
            pass: within(var, tv),
        });
        if let Some(sol) = &reference {
            let cont = max_error_at(&x, &sol.x, &mids).map_err(num)?;
            let mut jump = 0.0f64;
            for &t in &jumps {
                let xn = x.eval(t).map_err(num)?;
                let target: Vec<f64> = sol
                    .x
                    .left_value_at(t)
                    .iter()
                    .zip(y.value_at(t).iter().zip(y.left_value_at(t)))
                    .map(|(l, (a, b))| l + (a - b))
                    .collect();
                let e = xn
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                jump = jump.max(e);
            }
            for (statistic, value) in [("continuity_error", cont), ("jump_error", jump)] {
                rows.push(SweepRow {
                    n,
                    statistic,
                    value,
                    threshold: None,
                    pass: true,
                });
            }
        }
        solved.push((n, x));
    }

    if cfg.wants(Format::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.n),
                    r.statistic.to_string(),
                    fmt_f64(r.value),
                    r.threshold.map(fmt_f64).unwrap_or_default(),
                    r.pass.to_string(),
                ]
            })
            .collect();
        art.table_csv(
            "penalize.csv",
            &["n", "statistic", "value", "threshold", "pass"],
            &table,
        )?;
        let times = plot_times(&y, q);
        for (i, (n, x)) in solved.iter().enumerate() {
            let p = x.to_step_path(&times).map_err(num)?;
            art.path_csv(&format!("penalized_{i}.csv"), &p, &[("n", fmt_f64(*n))])?;
        }
        if let Some(sol) = &reference {
            art.path_csv("skorokhod_x.csv", &sol.x, &[])?;
        }
    }
    if cfg.wants(Format::Json) {
        art.json(
            "penalize.json",
            json!({
                "bounds": bounds,
                "delta": cfg.sweep.delta,
                "continuity_times": mids,
                "jump_times": jumps,
                "rows": rows,
            }),
        )?;
    }

    let acceptance = match cfg.builtin {
        Some(Builtin::ThreeJump) => {
            let series = |s: &str| -> Vec<f64> { rows.iter().filter(|r| r.statistic == s).map(|r| r.value).collect() };
            let settles =
                |v: Vec<f64>| !v.is_empty() && v.windows(2).all(|w| w[1] <= w[0]) && *v.last().unwrap() < 1e-3;
            Some(
                bounds.precondition_ok
                    && tally.failures.is_empty()
                    && rows.iter().all(|r| r.pass)
                    && settles(series("continuity_error"))
                    && settles(series("jump_error")),
            )
        }
        _ => None,
    };
    Ok((acceptance, json!({"precondition_ok": bounds.precondition_ok})))
}

struct PathRun {
    marginals: Vec<Vec<f64>>,
    grid_values: Option<StepPath>,
    sup_deviation: f64,
    penalty_variation: f64,
}

/// Runs every path of one scheme cell in parallel; results are in path order.
fn run_cell(
    cfg: &ExperimentConfig,
    dom: &ConvexDomain,
    (n, mesh): (f64, f64),
    keep_grid: usize,
) -> Result<Vec<refsde_core::Result<PathRun>>, CliError> {
    let spec = cfg.driver.as_ref().expect("resolved");
    let f = cfg.coefficient.as_ref().expect("resolved");
    let grid = Grid::with_mesh(cfg.horizon, mesh).map_err(num)?;
    Ok(monte_carlo(cfg.paths, |i| {
        let (h, z) = spec.sample(&grid, cfg.seed, i)?;
        let x = euler_penalized(dom, f, &h, &z, n, &grid)?;
        let marginals = cfg
            .sweep
            .times
            .iter()
            .map(|&t| x.eval(t))
            .collect::<refsde_core::Result<_>>()?;
        let grid_values = if (i as usize) < keep_grid {
            Some(x.to_step_path(grid.points())?)
        } else {
            None
        };
        Ok(PathRun {
            marginals,
            grid_values,
            sup_deviation: x.sup_deviation(dom.anchor(), cfg.horizon),
            penalty_variation: x.penalty_variation(cfg.horizon),
        })
    }))
}

fn collect(tally: &mut Tally, cell: usize, runs: Vec<refsde_core::Result<PathRun>>) -> Vec<PathRun> {
    runs.into_iter()
        .enumerate()
        .filter_map(|(i, r)| tally.record(cell, i as u64, r))
        .collect()
}

fn moments(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts, tally: &mut Tally) -> Result<(Option<bool>, Value), CliError> {
    let dom = cfg.domain();
    let d = dom.dim();
    let mut table = Vec::new();
    let mut samples = Vec::new();
    let mut cells_json = Vec::new();
    for (ci, cell) in cfg.cells().into_iter().enumerate() {
        let runs = collect(tally, ci, run_cell(cfg, &dom, cell, SAMPLE_PATHS)?);
        let mut marg = Vec::new();
        for (j, &t) in cfg.sweep.times.iter().enumerate() {
            for c in 0..d {
                let v: Vec<f64> = runs.iter().map(|r| r.marginals[j][c]).collect();
                if v.is_empty() {
                    continue;
                }
                let (mean, std) = moments(&v);
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                table.push(vec![
                    fmt_f64(cell.0),
                    fmt_f64(cell.1),
                    fmt_f64(t),
                    (c + 1).to_string(),
                    v.len().to_string(),
                    fmt_f64(mean),
                    fmt_f64(std),
                    fmt_f64(lo),
                    fmt_f64(hi),
                ]);
                marg.push(
                    json!({"t": t, "coord": c + 1, "paths": v.len(), "mean": mean, "std": std, "min": lo, "max": hi}),
                );
            }
        }
        for (pi, r) in runs.iter().enumerate() {
            if let Some(p) = &r.grid_values {
                for k in 0..p.len() {
                    let mut row = vec![ci.to_string(), pi.to_string(), fmt_f64(p.time(k))];
                    row.extend(p.value(k).iter().map(|v| fmt_f64(*v)));
                    samples.push(row);
                }
            }
        }
        let sup: Vec<f64> = runs.iter().map(|r| r.sup_deviation).collect();
        let var: Vec<f64> = runs.iter().map(|r| r.penalty_variation).collect();
        let avg = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        cells_json.push(json!({
            "n": cell.0,
            "mesh": cell.1,
            "paths_ok": runs.len(),
            "marginals": marg,
            "sup_deviation_mean": avg(&sup),
            "penalty_variation_mean": avg(&var),
        }));
    }
    if cfg.wants(Format::Csv) {
        art.table_csv(
            "simulate.csv",
            &["n", "mesh", "t", "coord", "paths", "mean", "std", "min", "max"],
            &table,
        )?;
        let mut header: Vec<String> = vec!["cell".into(), "path".into(), "t".into()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        art.table_csv("sample_paths.csv", &header, &samples)?;
    }
    if cfg.wants(Format::Json) {
        art.json("simulate.json", json!({"cells": cells_json}))?;
    }
    Ok((None, Value::Null))
}

#[derive(Debug, Clone, Serialize)]
struct ConvergeRow {
    n: f64,
    mesh: f64,
    t: f64,
    #[serde(rename = "M")]
    paths: usize,
    statistic: &'static str,
    value: f64,
    threshold: Option<f64>,
    pass: bool,
}

fn continuous(cfg: &ExperimentConfig) -> bool {
    let spec = cfg.driver.as_ref().expect("resolved");
    !matches!(spec.h, HSpec::Table { .. }) && !spec.z.iter().any(|c| matches!(c, ZComponent::CompoundPoisson { .. }))
}

fn converge(cfg: &ExperimentConfig, art: &mut Artifacts, tally: &mut Tally) -> Result<(Option<bool>, Value), CliError> {
    let dom = cfg.domain();
    let bench = cfg.builtin == Some(Builtin::ReflectedBm);
    let cells = cfg.cells();
    let mut per_cell = Vec::with_capacity(cells.len());
    for (ci, &cell) in cells.iter().enumerate() {
        per_cell.push(collect(tally, ci, run_cell(cfg, &dom, cell, 0)?));
    }
    let mut rows = Vec::new();
    let finest = per_cell.last().expect("nonempty sweep");
    for (ci, &(n, mesh)) in cells.iter().enumerate() {
        let runs = &per_cell[ci];
        for (j, &t) in cfg.sweep.times.iter().enumerate() {
            let mut push = |statistic, value: f64, threshold: Option<f64>| {
                let pass = threshold.is_none_or(|th: f64| value.abs() < th);
                rows.push(ConvergeRow {
                    n,
                    mesh,
                    t,
                    paths: runs.len(),
                    statistic,
                    value,
                    threshold,
                    pass,
                });
            };
            if runs.len() < refsde_core::stats::ks::KS_MIN_SAMPLES {
                push("too_few_paths", runs.len() as f64, None);
                continue;
            }
            if let Some(refs) = &cfg.reference {
                let v: Vec<f64> = runs.iter().map(|r| r.marginals[j][0]).collect();
                let ks = ks_statistic(&v, &refs[j]).map_err(num)?;
                let (mean, std) = moments(&v);
                let z = (mean - refs[j].mean()) / (std / (v.len() as f64).sqrt());
                let checked = bench && (n, mesh) == BENCH_CELL;
                push("ks", ks, checked.then_some(BENCH_KS));
                push("mean", mean, None);
                push("mean_z", z, checked.then_some(BENCH_Z));
            } else if dom.dim() == 1 {
                let a: Vec<f64> = runs.iter().map(|r| r.marginals[j][0]).collect();
                let b: Vec<f64> = finest.iter().map(|r| r.marginals[j][0]).collect();
                push("ks_to_finest", ks_two_sample(&a, &b).map_err(num)?, None);
            } else {
                let a: Vec<Vec<f64>> = runs.iter().map(|r| r.marginals[j].clone()).collect();
                let b: Vec<Vec<f64>> = finest.iter().map(|r| r.marginals[j].clone()).collect();
                push("energy_to_finest", energy_distance(&a, &b).map_err(num)?, None);
            }
        }
    }

    let mut strong = Value::Null;
    let mut strong_trend = None;
    if continuous(cfg) {
        let min_mesh = cfg.sweep.mesh.iter().copied().fold(f64::INFINITY, f64::min);
        let fine = cfg.sweep.fine_mesh.unwrap_or(min_mesh / 4.0);
        let sc: Vec<SchemeCell> = cells.iter().map(|&(n, mesh)| SchemeCell { n, mesh }).collect();
        let spec = cfg.driver.as_ref().expect("resolved");
        let f = cfg.coefficient.as_ref().expect("resolved");
        match strong_convergence_study(&dom, f, spec, cfg.horizon, &sc, fine, cfg.paths, cfg.seed) {
            Ok(study) => {
                for r in &study.rows {
                    rows.push(ConvergeRow {
                        n: r.n,
                        mesh: r.mesh,
                        t: cfg.horizon,
                        paths: r.paths,
                        statistic: "strong_median",
                        value: r.median,
                        threshold: None,
                        pass: true,
                    });
                }
                if cfg.sweep.pairing == Pairing::Diagonal {
                    strong_trend = Some(study.strictly_decreasing());
                }
                strong = json!({"reference_mesh": study.reference_mesh, "rows": study.rows, "strictly_decreasing": strong_trend});
            }
            Err(e @ refsde_core::Error::InvalidGrid(_)) => {
                strong = json!({"skipped": e.to_string()});
            }
            Err(e) => {
                tally.attempted += 1;
                tally.failures.push(PathFailure {
                    cell: cells.len(),
                    path: 0,
                    message: format!("strong study: {e}"),
                });
            }
        }
    } else {
        strong = json!({"skipped": "driver has jumps"});
    }

    if cfg.wants(Format::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.n),
                    fmt_f64(r.mesh),
                    fmt_f64(r.t),
                    r.paths.to_string(),
                    r.statistic.to_string(),
                    fmt_f64(r.value),
                    r.threshold.map(fmt_f64).unwrap_or_default(),
                    r.pass.to_string(),
                ]
            })
            .collect();
        art.table_csv(
            "converge.csv",
            &["n", "mesh", "t", "M", "statistic", "value", "threshold", "pass"],
            &table,
        )?;
    }
    if cfg.wants(Format::Json) {
        art.json("converge.json", json!({"rows": rows, "strong": strong}))?;
    }

    let acceptance = bench.then(|| {
        let at_bench: Vec<&ConvergeRow> = rows
            .iter()
            .filter(|r| (r.n, r.mesh) == BENCH_CELL && r.threshold.is_some())
            .collect();
        at_bench.len() == 2 && at_bench.iter().all(|r| r.pass)
    });
    Ok((acceptance, json!({"strong_strictly_decreasing": strong_trend})))
}
