//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taskdyn::analysis::{fit_power_law, fit_through_origin, log_space, sweep, sweep_stiffness, SweepParameter};
use taskdyn::cli::output::CsvData;
use taskdyn::fit::{fit_gesture, FitProblem};
use taskdyn::kinematics::summarize;
use taskdyn::scaling::effective_coefficient;
use taskdyn::{GestureParams, ScalingMode, SimConfig, Status, Trajectory};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(value: f64, expected: f64, tol: f64) -> bool {
    (value - expected).abs() <= tol
}

fn stiffness_grid() -> Vec<f64> {
    log_space(500.0, 8000.0, 20)
}

// Closed-form landmarks of the critically damped linear gesture with v0 = 0:
// |v| ∝ u·e^(−u) with u = ωt. Peak at u = 1; 10% crossings solve u·e^(1−u) = 0.1.
fn linear_symmetry_oracle() -> f64 {
    let g = |u: f64| u * (1.0 - u).exp() - 0.1;
    let root = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(lo) < 0.0) == (g(mid) < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (u1, u2) = (root(0.0, 1.0), root(1.0, 20.0));
    (1.0 - u1) / (u2 - u1)
}

// ---- shared checks, fed either by the library or by emitted CSV files ----

fn check_time_to_peak(d0: &[(f64, f64)], d95: &[(f64, f64)]) -> Check {
    let fit = |pts: &[(f64, f64)]| {
        let (k, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        fit_power_law(&k, &y).map_err(|e| e.to_string())
    };
    let (a, b) = (fit(d0)?, fit(d95)?);
    ensure(d0.len() == 20 && d95.len() == 20, format!("expected 20 points each, got {} and {}", d0.len(), d95.len()))?;
    ensure(within(a.exponent, -0.5, 0.005), format!("d=0 exponent {}", a.exponent))?;
    ensure(within(a.alpha, 1.0, 0.01), format!("d=0 alpha {}", a.alpha))?;
    ensure(within(b.exponent, -0.5, 0.01), format!("d=0.95 exponent {}", b.exponent))?;
    ensure(within(b.alpha, 5.4, 0.15), format!("d=0.95 alpha {}", b.alpha))?;
    Ok(format!(
        "d=0: alpha {:.4}, exponent {:.4}; d=0.95: alpha {:.4}, exponent {:.4}",
        a.alpha, a.exponent, b.alpha, b.exponent
    ))
}

fn check_peak_velocity(d0: &[(f64, f64)], d95: &[(f64, f64)]) -> Check {
    let fit = |pts: &[(f64, f64)]| {
        let (k, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        fit_power_law(&k, &y).map_err(|e| e.to_string())
    };
    let (a, b) = (fit(d0)?, fit(d95)?);
    ensure(within(a.exponent, 0.5, 0.005), format!("d=0 exponent {}", a.exponent))?;
    ensure(within(a.alpha, 0.368, 0.004), format!("d=0 alpha {}", a.alpha))?;
    ensure(within(b.exponent, 0.5, 0.01), format!("d=0.95 exponent {}", b.exponent))?;
    ensure(within(b.alpha, 0.19, 0.01), format!("d=0.95 alpha {}", b.alpha))?;
    Ok(format!(
        "d=0: alpha {:.4}, exponent {:.4}; d=0.95: alpha {:.4}, exponent {:.4}",
        a.alpha, a.exponent, b.alpha, b.exponent
    ))
}

fn check_symmetry(linear: &Trajectory, cubic: &Trajectory) -> Check {
    let s_lin = summarize(linear).map_err(|e| e.to_string())?.symmetry;
    let s_cub = summarize(cubic).map_err(|e| e.to_string())?.symmetry;
    let oracle = linear_symmetry_oracle();
    ensure((0.45..=0.55).contains(&s_cub), format!("cubic symmetry {s_cub}"))?;
    ensure(within(s_lin, oracle, 1e-3), format!("linear symmetry {s_lin}, closed form {oracle}"))?;
    Ok(format!("cubic {s_cub:.4}; linear {s_lin:.4} (closed form {oracle:.4})"))
}

fn spread(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `(distance, trajectory)` pairs under local scaling.
fn check_local_invariance(runs: &[(f64, Trajectory)]) -> Check {
    let mut dist = Vec::new();
    let mut tpv = Vec::new();
    let mut pv = Vec::new();
    for (d, traj) in runs {
        ensure(!traj.status.is_diverged(), format!("distance {d} diverged"))?;
        let s = summarize(traj).map_err(|e| e.to_string())?;
        dist.push(*d);
        tpv.push(s.t_pv);
        pv.push(s.pv);
    }
    ensure(dist == [0.1, 0.5, 1.0, 2.0, 5.0, 10.0], format!("distances {dist:?}"))?;
    let sp = spread(&tpv);
    ensure(sp <= 1e-4, format!("t_pv spread {sp:e}"))?;
    let (slope, r2) = fit_through_origin(&dist, &pv).map_err(|e| e.to_string())?;
    ensure(r2 > 0.9999, format!("pv through-origin r2 {r2}"))?;
    Ok(format!("t_pv spread {sp:.2e} s; pv = {slope:.4}·distance, r2 = {r2:.8}"))
}

/// `(target, t_pv)` pairs with x0 = 10, D = 8.
fn check_restricted(points: &[(f64, f64)]) -> Check {
    let band: Vec<f64> = points.iter().filter(|(t, _)| *t <= 2.0).map(|p| p.1).collect();
    ensure(band.len() == 3, format!("{} targets in [0, 2]", band.len()))?;
    let sp = spread(&band);
    ensure(sp <= 1e-4, format!("t_pv spread {sp:e} for T in 0..=2"))?;
    let tail: Vec<(f64, f64)> = points.iter().copied().filter(|(t, _)| *t >= 3.0).collect();
    ensure(tail.len() == 6, format!("{} targets in [3, 8]", tail.len()))?;
    // Distance shrinks as T grows, so t_pv must strictly fall.
    for w in tail.windows(2) {
        ensure(w[1].1 < w[0].1, format!("t_pv not decreasing between T={} and T={}", w[0].0, w[1].0))?;
    }
    ensure(tail[0].1 < band[0], "t_pv at T=3 not below the constant band")?;
    Ok(format!(
        "band spread {sp:.2e} s; t_pv {:.4} at T=3 down to {:.4} at T=8",
        tail[0].1,
        tail[tail.len() - 1].1
    ))
}

// ---- criteria ----

fn criterion_1() -> Check {
    let w = 2000f64.sqrt();
    let cfg = SimConfig::new(1.0, 0.0).with_t_end(0.5);
    let traj = taskdyn::solver::integrate(&GestureParams::linear(2000.0, 0.0), &cfg).map_err(|e| e.to_string())?;
    ensure(traj.t.last().copied() == Some(0.5) || (traj.t[traj.len() - 1] - 0.5).abs() < 1e-9, "grid stops short of 0.5")?;
    let err = traj
        .t
        .iter()
        .zip(&traj.x)
        .map(|(&t, &x)| (x - (1.0 + w * t) * (-w * t).exp()).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-6, format!("max abs error {err:e}"))?;
    Ok(format!("max abs error {err:.2e} over {} samples", traj.len()))
}

fn library_power_sweeps() -> Result<[Vec<(f64, f64, f64)>; 2], String> {
    let cfg = SimConfig::new(1.0, 0.0);
    let run = |d: f64| -> Result<Vec<(f64, f64, f64)>, String> {
        let recs = sweep_stiffness(&stiffness_grid(), &GestureParams::new(1000.0, d, 0.0), &cfg).map_err(|e| e.to_string())?;
        Ok(recs
            .iter()
            .filter_map(|r| r.usable().map(|s| (r.value, s.t_pv, s.pv)))
            .collect())
    };
    Ok([run(0.0)?, run(0.95)?])
}

fn pairs(rows: &[(f64, f64, f64)], pick: fn(&(f64, f64, f64)) -> f64) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.0, pick(r))).collect()
}

fn criterion_2(sweeps: &[Vec<(f64, f64, f64)>; 2]) -> Check {
    check_time_to_peak(&pairs(&sweeps[0], |r| r.1), &pairs(&sweeps[1], |r| r.1))
}

fn criterion_3(sweeps: &[Vec<(f64, f64, f64)>; 2]) -> Check {
    check_peak_velocity(&pairs(&sweeps[0], |r| r.2), &pairs(&sweeps[1], |r| r.2))
}

fn simulate(params: GestureParams, x0: f64) -> Result<Trajectory, String> {
    taskdyn::solver::integrate(&params, &SimConfig::new(x0, 0.0)).map_err(|e| e.to_string())
}

fn criterion_4() -> Check {
    let lin = simulate(GestureParams::new(2000.0, 0.0, 0.0), 1.0)?;
    let cub = simulate(GestureParams::new(2000.0, 0.95, 0.0), 1.0)?;
    check_symmetry(&lin, &cub)
}

fn criterion_5() -> Check {
    let runs = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|&d| simulate(GestureParams::new(2000.0, 0.95, 0.0).with_scaling(ScalingMode::Local), d).map(|t| (d, t)))
        .collect::<Result<Vec<_>, _>>()?;
    check_local_invariance(&runs)
}

fn criterion_6() -> Check {
    let params = GestureParams::new(2000.0, 0.95, 0.0).with_scaling(ScalingMode::Global { range: 8.0 });
    let targets: Vec<f64> = (0..=8).map(f64::from).collect();
    let recs = sweep(&params, &SimConfig::new(10.0, 0.0), SweepParameter::Target, &targets).map_err(|e| e.to_string())?;
    let pts = recs
        .iter()
        .map(|r| r.usable().map(|s| (r.value, s.t_pv)).ok_or(format!("T={} unusable", r.value)))
        .collect::<Result<Vec<_>, _>>()?;
    check_restricted(&pts)
}

fn criterion_7() -> Check {
    let unstable = simulate(GestureParams::new(2000.0, 0.95, 0.0), 10.0)?;
    let t_end = SimConfig::new(10.0, 0.0).resolved_t_end(&GestureParams::new(2000.0, 0.95, 0.0));
    let t_blowup = match unstable.status {
        Status::Diverged { t_blowup } if t_blowup <= t_end => t_blowup,
        s => return Err(format!("proportional run ended {s:?}")),
    };
    let scaled = simulate(GestureParams::new(2000.0, 0.95, 0.0).with_scaling(ScalingMode::Local), 10.0)?;
    ensure(scaled.status == Status::Converged, format!("local run ended {:?}", scaled.status))?;
    let overshoot = scaled.x.iter().map(|&x| -x).fold(0.0, f64::max);
    ensure(overshoot <= 0.01 * 10.0, format!("overshoot {overshoot}"))?;
    Ok(format!("proportional diverged at t = {t_blowup:.5} s; local converged, overshoot {overshoot:.2e}"))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for i in 0..10_000 {
        let d = loop {
            let d: f64 = rng.random();
            if d > 0.0 {
                break d;
            }
        };
        let k = rng.random_range(100.0..=1e4);
        let dist = rng.random_range(0.01..=100.0);
        let target = rng.random_range(-50.0..=50.0);
        let x0 = if rng.random_bool(0.5) { target + dist } else { target - dist };
        let mode = if i % 2 == 0 {
            ScalingMode::Local
        } else {
            ScalingMode::Global { range: rng.random_range(0.01..=100.0) }
        };
        let params = GestureParams::new(k, d, target).with_scaling(mode);
        let c = effective_coefficient(&params, x0).map_err(|e| e.to_string())?;
        let dist = (x0 - target).abs();
        ensure(c.value > 0.0, format!("draw {i}: d_eff {}", c.value))?;
        ensure((k / c.value).sqrt() > dist, format!("draw {i}: basin {} vs distance {dist}", (k / c.value).sqrt()))?;
        checked += 1;
    }
    Ok(format!("{checked} draws inside the basin"))
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_k = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut slowest = Duration::ZERO;
    for i in 0..20 {
        let k = rng.random_range(500.0..=8000.0);
        let d = rng.random_range(0.1..=0.9);
        let x0 = rng.random_range(1.0..=10.0);
        let truth = GestureParams::new(k, d, 0.0).with_scaling(ScalingMode::Global { range: 10.0 });
        let observed = simulate(truth, x0)?;
        let problem = FitProblem::new(observed, GestureParams { stiffness: 1000.0, ratio: 0.5, ..truth });
        let start = Instant::now();
        let fit = fit_gesture(&problem).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let ek = (fit.estimates.stiffness - k).abs() / k;
        let ed = (fit.estimates.ratio - d).abs();
        ensure(
            ek <= 0.01 && ed <= 0.02,
            format!("draw {i}: truth ({k:.1}, {d:.3}) fit ({:.1}, {:.3})", fit.estimates.stiffness, fit.estimates.ratio),
        )?;
        ensure(took <= Duration::from_secs(10), format!("draw {i}: took {took:?}"))?;
        worst_k = worst_k.max(ek);
        worst_d = worst_d.max(ed);
        slowest = slowest.max(took);
    }
    Ok(format!(
        "20 fits: worst k error {:.2e}, worst d error {worst_d:.2e}, slowest {slowest:.2?}",
        worst_k
    ))
}

// ---- figure reproduction through the binary ----

fn read(dir: &Path, file: &str) -> Result<CsvData, String> {
    CsvData::read(&dir.join(file)).map_err(|e| e.to_string())
}

fn validate_manifest(dir: &Path, figure: u8) -> Result<usize, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(manifest["figure"] == figure, format!("manifest figure {}", manifest["figure"]))?;
    let datasets = manifest["datasets"].as_array().ok_or("manifest without datasets")?;
    ensure(!datasets.is_empty(), "manifest lists no datasets")?;
    for ds in datasets {
        let file = ds["file"].as_str().ok_or("dataset without file")?;
        let columns: Vec<&str> = ds["columns"]
            .as_array()
            .ok_or("dataset without columns")?
            .iter()
            .filter_map(|c| c.as_str())
            .collect();
        if file.ends_with(".json") {
            let text = std::fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))?;
            let rows: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| format!("{file}: {e}"))?;
            for row in &rows {
                for c in &columns {
                    ensure(row.get(c).is_some(), format!("{file}: entry without `{c}`"))?;
                }
            }
            continue;
        }
        let csv = read(dir, file)?;
        ensure(csv.headers == columns, format!("{file}: header {:?} vs manifest {columns:?}", csv.headers))?;
        ensure(!csv.rows.is_empty(), format!("{file}: no rows"))?;
        for c in &columns {
            if *c == "status" {
                continue;
            }
            // Landmark cells may be empty for diverged runs; everything else is numeric.
            for cell in csv.text_column(c)? {
                ensure(cell.is_empty() || cell.parse::<f64>().is_ok(), format!("{file}: `{cell}` in column {c}"))?;
            }
        }
    }
    Ok(datasets.len())
}

fn criterion_10() -> Check {
    let bin = env!("CARGO_BIN_EXE_taskdyn");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut n_datasets = 0;
    for fig in 1..=4u8 {
        let dir = root.path().join(format!("fig{fig}"));
        let status = Command::new(bin)
            .args(["reproduce", &fig.to_string(), "--out"])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(0), format!("reproduce {fig} exited {:?}", status.status.code()))?;
        n_datasets += validate_manifest(&dir, fig)?;
    }
    let f1 = root.path().join("fig1");
    let power = read(&f1, "fig1_power.csv")?;
    let (d, k, tpv, pv) = (power.column("d")?, power.column("k")?, power.column("t_pv")?, power.column("pv")?);
    let select = |target: f64, y: &[f64]| -> Vec<(f64, f64)> {
        (0..d.len()).filter(|&i| d[i] == target).map(|i| (k[i], y[i])).collect()
    };
    let c2 = check_time_to_peak(&select(0.0, &tpv), &select(0.95, &tpv)).map_err(|e| format!("criterion 2 from CSV: {e}"))?;
    check_peak_velocity(&select(0.0, &pv), &select(0.95, &pv)).map_err(|e| format!("criterion 3 from CSV: {e}"))?;

    let trajs = read(&f1, "fig1_trajectories.csv")?.keyed_trajectories("d", |_| 0.0)?;
    ensure(trajs.len() == 2, "fig1_trajectories.csv should hold two runs")?;
    check_symmetry(&trajs[0].1, &trajs[1].1).map_err(|e| format!("criterion 4 from CSV: {e}"))?;

    let local = read(&root.path().join("fig3"), "fig3_distance_trajectories.csv")?.keyed_trajectories("distance", |_| 0.0)?;
    check_local_invariance(&local).map_err(|e| format!("criterion 5 from CSV: {e}"))?;

    let restricted = read(&root.path().join("fig4"), "fig4_restricted_targets.csv")?.keyed_trajectories("T", |t| t)?;
    let pts = restricted
        .iter()
        .map(|(t, traj)| summarize(traj).map(|s| (*t, s.t_pv)).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    check_restricted(&pts).map_err(|e| format!("criterion 6 from CSV: {e}"))?;

    Ok(format!("{n_datasets} datasets valid; criteria 2-6 hold on re-read data ({c2})"))
}

#[test]
fn acceptance_criteria() {
    let started = Instant::now();
    let sweeps = library_power_sweeps();
    let results: Vec<(u8, &str, Check)> = vec![
        (1, "linear solver matches the closed form", criterion_1()),
        (2, "time-to-peak power law", sweeps.as_ref().map_err(Clone::clone).and_then(criterion_2)),
        (3, "peak-velocity power law", sweeps.as_ref().map_err(Clone::clone).and_then(criterion_3)),
        (4, "quasi-symmetric velocity profile", criterion_4()),
        (5, "local scaling invariance", criterion_5()),
        (6, "restricted-range regime", criterion_6()),
        (7, "instability and its cure", criterion_7()),
        (8, "basin guarantee", criterion_8()),
        (9, "fit round-trip", criterion_9()),
        (10, "figure reproduction round-trip", criterion_10()),
    ];
    let mut failed = Vec::new();
    for (n, name, result) in &results {
        match result {
            Ok(detail) => println!("[PASS] criterion {n}: {name}: {detail}"),
            Err(why) => {
                println!("[FAIL] criterion {n}: {name}: {why}");
                failed.push(*n);
            }
        }
    }
    println!("acceptance suite finished in {:.2?}", started.elapsed());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
