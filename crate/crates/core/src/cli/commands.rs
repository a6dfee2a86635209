//! Subcommand runners. Each one computes its results first and only then
//! creates the output directory and writes files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Format, PowerLawSection, RunConfig};
use super::output::{self, ensure_dir, num, opt_num, CsvData, Table};
use super::{CliError, Outcome};
use crate::analysis::{power_law_from_records, sweep_stiffness, Quantity, SweepRecord};
use crate::fit::{fit_gesture, Bounds, Estimates, FitParameter, FitProblem, FitResult};
use crate::kinematics::{summarize, KinematicSummary};
use crate::model::{force_profile, GestureParams};
use crate::scaling::{effective_coefficient, EffectiveCoefficient};
use crate::solver::{integrate, SimConfig, Status};

#[derive(Serialize)]
struct SimulateReport {
    #[serde(flatten)]
    status: Status,
    samples: usize,
    summary: Option<KinematicSummary>,
    effective_coefficient: EffectiveCoefficient,
    params: GestureParams,
    sim: SimConfig,
}

pub fn simulate(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let params = cfg.gesture()?;
    let sim = cfg.sim_config();
    let coeff = effective_coefficient(&params, sim.x0)?;
    let traj = integrate(&params, &sim)?;
    let summary = if traj.status.is_diverged() {
        None
    } else {
        summarize(&traj).ok()
    };

    ensure_dir(dir)?;
    let mut files = Vec::new();
    let path = match cfg.output.format {
        Format::Csv => {
            let path = dir.join("trajectory.csv");
            output::trajectory_table(&traj).write(&path)?;
            path
        }
        Format::Json => {
            let path = dir.join("trajectory.json");
            output::write_file(&path, &output::trajectory_json(&traj))?;
            path
        }
    };
    files.push(path);
    let report = SimulateReport {
        status: traj.status,
        samples: traj.len(),
        summary,
        effective_coefficient: coeff,
        params,
        sim,
    };
    let path = dir.join("summary.json");
    output::write_json(&path, &report)?;
    files.push(path);

    Ok(Outcome {
        files,
        diverged: match traj.status {
            Status::Diverged { t_blowup } => Some(t_blowup),
            _ => None,
        },
    })
}

pub fn sweep_table(parameter: &str, records: &[SweepRecord]) -> Table {
    let mut table = Table::new([parameter, "t_pv", "pv", "settle", "symmetry", "lambda", "d_eff", "status"]);
    for r in records {
        let s = r.usable();
        table.push(vec![
            num(r.value),
            opt_num(s.map(|s| s.t_pv)),
            opt_num(s.map(|s| s.pv)),
            opt_num(s.and_then(|s| s.settle)),
            opt_num(s.map(|s| s.symmetry)),
            num(r.lambda),
            num(r.d_eff),
            r.status.label().to_string(),
        ]);
    }
    table
}

pub fn sweep(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let section = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: section is required for this command".into()))?;
    let values = section.resolve()?;
    let records = crate::analysis::sweep(&cfg.gesture()?, &cfg.sim_config(), section.parameter, &values)
        .map_err(|e| CliError::Config(format!("sweep: {e}")))?;

    ensure_dir(dir)?;
    let path = match cfg.output.format {
        Format::Csv => {
            let path = dir.join("sweep.csv");
            sweep_table(section.parameter.name(), &records).write(&path)?;
            path
        }
        Format::Json => {
            let path = dir.join("sweep.json");
            output::write_json(&path, &records)?;
            path
        }
    };
    let diverged = records.iter().find_map(|r| match r.status {
        Status::Diverged { t_blowup } => Some(t_blowup),
        _ => None,
    });
    Ok(Outcome {
        files: vec![path],
        diverged,
    })
}

pub fn forces_table(params: &GestureParams, x0: f64, x_min: f64, x_max: f64, n: usize) -> Result<Table, CliError> {
    let samples = force_profile(params, x0, x_min, x_max, n)?;
    let mut table = Table::new(["x", "f_linear", "f_cubic", "f_sum"]);
    for s in samples {
        table.push(vec![num(s.x), num(s.force.linear), num(s.force.nonlinear), num(s.force.total)]);
    }
    Ok(table)
}

pub fn forces(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let section = cfg
        .forces
        .ok_or_else(|| CliError::Config("forces: section with x_min and x_max is required".into()))?;
    let table = forces_table(&cfg.gesture()?, cfg.sim.x0, section.x_min, section.x_max, section.n_points)?;
    ensure_dir(dir)?;
    let path = dir.join("forces.csv");
    table.write(&path)?;
    Ok(Outcome {
        files: vec![path],
        diverged: None,
    })
}

/// One fitted power law; a failed fit keeps its counts and carries a flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawEntry {
    pub d: f64,
    pub quantity: &'static str,
    pub alpha: Option<f64>,
    pub exponent: Option<f64>,
    pub r2: Option<f64>,
    pub n_used: usize,
    pub n_dropped: usize,
    pub flag: Option<String>,
}

pub fn power_law_entries(
    section: &PowerLawSection,
    base: &GestureParams,
    sim: &SimConfig,
) -> Result<(Vec<PowerLawEntry>, Vec<(f64, Vec<SweepRecord>)>), CliError> {
    let ks = section.k.resolve("powerlaw.k")?;
    if section.d.is_empty() {
        return Err(CliError::Config("powerlaw.d: value list is empty".into()));
    }
    let mut entries = Vec::new();
    let mut sweeps = Vec::new();
    for &d in &section.d {
        let params = GestureParams { ratio: d, ..*base };
        let records = sweep_stiffness(&ks, &params, sim).map_err(|e| CliError::Config(format!("powerlaw: {e}")))?;
        for quantity in [Quantity::TimeToPeak, Quantity::PeakVelocity] {
            let usable = records.iter().filter(|r| r.usable().is_some()).count();
            let entry = match power_law_from_records(&records, quantity) {
                Ok(fit) => PowerLawEntry {
                    d,
                    quantity: quantity.name(),
                    alpha: Some(fit.fit.alpha),
                    exponent: Some(fit.fit.exponent),
                    r2: Some(fit.fit.r2),
                    n_used: fit.n_used,
                    n_dropped: fit.n_dropped,
                    flag: None,
                },
                Err(e) => PowerLawEntry {
                    d,
                    quantity: quantity.name(),
                    alpha: None,
                    exponent: None,
                    r2: None,
                    n_used: usable,
                    n_dropped: records.len() - usable,
                    flag: Some(e.to_string()),
                },
            };
            entries.push(entry);
        }
        sweeps.push((d, records));
    }
    Ok((entries, sweeps))
}

pub fn powerlaw(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let section = cfg.powerlaw.clone().unwrap_or_default();
    let (entries, _) = power_law_entries(&section, &cfg.gesture()?, &cfg.sim_config())?;
    ensure_dir(dir)?;
    let path = dir.join("powerlaw.json");
    output::write_json(&path, &entries)?;
    Ok(Outcome {
        files: vec![path],
        diverged: None,
    })
}

#[derive(Serialize)]
struct FitReport {
    estimates: Estimates,
    free: Vec<FitParameter>,
    rmse: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    samples: usize,
    observed: String,
}

pub fn fit(cfg: &RunConfig, data: Option<&Path>, dir: &Path) -> Result<Outcome, CliError> {
    let section = cfg.fit.clone().unwrap_or_default();
    let path: PathBuf = data
        .map(Path::to_path_buf)
        .or_else(|| section.observed.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::Config("fit: pass --data or set fit.observed".into()))?;
    let csv = CsvData::read(&path)?;
    let observed = csv
        .trajectory(cfg.sim.target)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if !observed.is_uniform(1e-6) {
        return Err(CliError::Input(format!(
            "{}: observed samples must lie on a uniform time grid",
            path.display()
        )));
    }

    let base = cfg.gesture()?;
    let mut problem = FitProblem::new(observed, base);
    if section.use_sim_initial_state {
        problem.x0 = cfg.sim.x0;
        problem.v0 = cfg.sim.v0;
    } else if !csv.has("v") {
        // Finite differences at the first sample are one-sided; trust the config.
        problem.v0 = cfg.sim.v0;
    }
    problem.free = section.free.clone();
    problem.velocity_weight = section.velocity_weight;
    problem.rtol = cfg.sim.rtol;
    problem.atol = cfg.sim.atol;
    problem.options.max_iterations = section.max_iterations;
    let defaults = Bounds::default_for(&problem.observed);
    problem.bounds = Bounds {
        stiffness: section.bounds.k.map_or(defaults.stiffness, |[a, b]| (a, b)),
        ratio: section.bounds.d.map_or(defaults.ratio, |[a, b]| (a, b)),
        target: section.bounds.target.map_or(defaults.target, |[a, b]| (a, b)),
    };
    let init = section.initial;
    problem.initial = Estimates {
        stiffness: init.k.unwrap_or(problem.initial.stiffness),
        ratio: init.d.unwrap_or(problem.initial.ratio),
        target: init.target.unwrap_or(problem.initial.target),
    };
    problem
        .validate()
        .map_err(|e| CliError::Config(format!("fit: {e}")))?;
    let FitResult {
        estimates,
        rmse,
        iterations,
        evaluations,
        converged,
    } = fit_gesture(&problem)?;

    ensure_dir(dir)?;
    let out = dir.join("fit.json");
    output::write_json(
        &out,
        &FitReport {
            estimates,
            free: problem.free.clone(),
            rmse,
            iterations,
            evaluations,
            converged,
            samples: problem.observed.len(),
            observed: path.display().to_string(),
        },
    )?;
    Ok(Outcome {
        files: vec![out],
        diverged: None,
    })
}
