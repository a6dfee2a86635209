//! Data behind the four reference figures. Each figure writes a set of CSV
//! files plus a `manifest.json` describing them.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::commands::{forces_table, power_law_entries};
use super::config::{PowerLawSection, RangeSpec, Spacing, ValueSpec};
use super::output::{self, ensure_dir, keyed_trajectories, num, opt_num, Table};
use super::{CliError, Outcome};
use crate::analysis::{lin_space, SweepRecord};
use crate::kinematics::summarize;
use crate::model::GestureParams;
use crate::scaling::{effective_coefficient, ScalingMode};
use crate::solver::{integrate, SimConfig, Trajectory};

pub const REFERENCE_STIFFNESS: f64 = 2000.0;
pub const REFERENCE_RATIO: f64 = 0.95;
pub const RATIOS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.95];
pub const DISTANCES: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    One,
    Two,
    Three,
    Four,
}

impl Figure {
    pub fn parse(id: &str) -> Result<Self, CliError> {
        match id.trim().trim_start_matches("fig") {
            "1" => Ok(Figure::One),
            "2" => Ok(Figure::Two),
            "3" => Ok(Figure::Three),
            "4" => Ok(Figure::Four),
            _ => Err(CliError::Config(format!("reproduce: unknown figure `{id}`, expected 1 to 4"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Figure::One => 1,
            Figure::Two => 2,
            Figure::Three => 3,
            Figure::Four => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub file: String,
    pub panel: String,
    pub description: String,
    pub columns: Vec<String>,
    /// Keys of runs that hit the divergence guard.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diverged: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub figure: u8,
    pub datasets: Vec<Dataset>,
}

struct Pending {
    meta: Dataset,
    table: Table,
}

impl Pending {
    fn table(file: &str, panel: &str, description: &str, table: Table) -> Self {
        Self {
            meta: Dataset {
                file: file.into(),
                panel: panel.into(),
                description: description.into(),
                columns: table.columns.clone(),
                diverged: Vec::new(),
            },
            table,
        }
    }

    fn with_diverged(mut self, keys: Vec<f64>) -> Self {
        self.meta.diverged = keys;
        self
    }
}

fn gesture(k: f64, d: f64, target: f64, scaling: ScalingMode) -> GestureParams {
    GestureParams::new(k, d, target).with_scaling(scaling)
}

/// Integrates each keyed run on the current pool, keeping input order.
fn batch(runs: Vec<(f64, GestureParams, SimConfig)>) -> Result<Vec<(f64, Trajectory)>, CliError> {
    runs.into_par_iter()
        .map(|(key, p, c)| integrate(&p, &c).map(|t| (key, t)).map_err(CliError::from))
        .collect()
}

fn trajectories(file: &str, panel: &str, description: &str, key: &str, runs: &[(f64, Trajectory)]) -> Pending {
    let table = keyed_trajectories(key, runs.iter().map(|(k, t)| (*k, t)));
    let diverged = runs
        .iter()
        .filter(|(_, t)| t.status.is_diverged())
        .map(|(k, _)| *k)
        .collect();
    Pending::table(file, panel, description, table).with_diverged(diverged)
}

fn keyed_forces(key: &str, runs: &[(f64, GestureParams, f64)], x_min: f64, x_max: f64, n: usize) -> Result<Table, CliError> {
    let mut table = Table::new([key, "x", "f_linear", "f_cubic", "f_sum"]);
    for (value, params, x0) in runs {
        let part = forces_table(params, *x0, x_min, x_max, n)?;
        for row in part.rows {
            let mut r = vec![num(*value)];
            r.extend(row);
            table.push(r);
        }
    }
    Ok(table)
}

fn power_table(sweeps: &[(f64, Vec<SweepRecord>)]) -> (Table, Table) {
    let mut raw = Table::new(["d", "k", "t_pv", "pv", "status"]);
    let mut logs = Table::new(["d", "ln_k", "ln_t_pv", "ln_pv"]);
    for (d, records) in sweeps {
        for r in records {
            let s = r.usable();
            raw.push(vec![
                num(*d),
                num(r.value),
                opt_num(s.map(|s| s.t_pv)),
                opt_num(s.map(|s| s.pv)),
                r.status.label().to_string(),
            ]);
            if let Some(s) = s {
                logs.push(vec![num(*d), num(r.value.ln()), num(s.t_pv.ln()), num(s.pv.ln())]);
            }
        }
    }
    (raw, logs)
}

fn figure_one() -> Result<Vec<Pending>, CliError> {
    let forces = forces_table(&gesture(1.0, REFERENCE_RATIO, 0.0, ScalingMode::Proportional), 1.0, -1.5, 1.5, 301)?;
    let runs = batch(
        [0.0, REFERENCE_RATIO]
            .iter()
            .map(|&d| (d, gesture(REFERENCE_STIFFNESS, d, 0.0, ScalingMode::Proportional), SimConfig::new(1.0, 0.0)))
            .collect(),
    )?;
    let section = PowerLawSection {
        k: ValueSpec {
            values: None,
            range: Some(RangeSpec { start: 500.0, stop: 8000.0, count: 20, spacing: Spacing::Log }),
        },
        d: RATIOS.to_vec(),
    };
    let base = gesture(REFERENCE_STIFFNESS, 0.0, 0.0, ScalingMode::Proportional);
    let (_, sweeps) = power_law_entries(&section, &base, &SimConfig::new(1.0, 0.0))?;
    let (raw, logs) = power_table(&sweeps);
    Ok(vec![
        Pending::table("fig1_forces.csv", "a", "Restoring force components, k = 1, d = 0.95, T = 0", forces),
        trajectories(
            "fig1_trajectories.csv",
            "b",
            "Linear (d = 0) and cubic (d = 0.95) trajectories, k = 2000, x0 = 1, v0 = 0, T = 0",
            "d",
            &runs,
        ),
        Pending::table("fig1_power.csv", "c", "Time to peak and peak velocity over 20 log-spaced k in [500, 8000]", raw),
        Pending::table("fig1_loglog.csv", "d", "Natural logs of the usable rows of fig1_power.csv", logs),
    ])
}

fn figure_two() -> Result<Vec<Pending>, CliError> {
    let by_d = batch(
        RATIOS
            .iter()
            .map(|&d| (d, gesture(REFERENCE_STIFFNESS, d, 0.0, ScalingMode::Proportional), SimConfig::new(1.0, 0.0)))
            .collect(),
    )?;
    let targets = lin_space(0.0, 0.8, 5);
    let by_t = batch(
        targets
            .iter()
            .map(|&t| (t, gesture(REFERENCE_STIFFNESS, REFERENCE_RATIO, t, ScalingMode::Proportional), SimConfig::new(1.0, 0.0)))
            .collect(),
    )?;
    let force_runs: Vec<_> = RATIOS
        .iter()
        .map(|&d| (d, gesture(1.0, d, 0.0, ScalingMode::Proportional), 1.0))
        .collect();
    let forces_d = keyed_forces("d", &force_runs, -1.5, 1.5, 301)?;
    let wide = forces_table(&gesture(1.0, REFERENCE_RATIO, 0.0, ScalingMode::Proportional), 1.0, -10.0, 10.0, 401)?;
    Ok(vec![
        trajectories("fig2_trajectories_d.csv", "a", "Proportional scaling over d, k = 2000, x0 = 1, T = 0", "d", &by_d),
        trajectories("fig2_trajectories_T.csv", "b", "Proportional scaling over targets, d = 0.95, x0 = 1", "T", &by_t),
        Pending::table("fig2_forces_d.csv", "c", "Restoring force over d, k = 1, T = 0", forces_d),
        Pending::table("fig2_forces_range10.csv", "d", "Unscaled restoring force over [-10, 10], k = 1, d = 0.95", wide),
    ])
}

fn figure_three() -> Result<Vec<Pending>, CliError> {
    let runs: Vec<_> = DISTANCES
        .iter()
        .map(|&dist| (dist, gesture(REFERENCE_STIFFNESS, REFERENCE_RATIO, 0.0, ScalingMode::Local), SimConfig::new(dist, 0.0)))
        .collect();
    let solved = batch(runs.clone())?;
    let mut inverse = Table::new(["distance", "d_eff", "t_pv", "pv", "status"]);
    for ((dist, p, c), (_, traj)) in runs.iter().zip(&solved) {
        let coeff = effective_coefficient(p, c.x0)?;
        let s = if traj.status.is_diverged() { None } else { summarize(traj).ok() };
        inverse.push(vec![
            num(*dist),
            num(coeff.value),
            opt_num(s.map(|s| s.t_pv)),
            opt_num(s.map(|s| s.pv)),
            traj.status.label().to_string(),
        ]);
    }
    let unscaled = batch(
        RATIOS
            .iter()
            .map(|&d| (d, gesture(REFERENCE_STIFFNESS, d, 0.0, ScalingMode::Proportional), SimConfig::new(10.0, 0.0)))
            .collect(),
    )?;
    let local = batch(
        RATIOS
            .iter()
            .map(|&d| (d, gesture(REFERENCE_STIFFNESS, d, 0.0, ScalingMode::Local), SimConfig::new(10.0, 0.0)))
            .collect(),
    )?;
    let f_unscaled = forces_table(&gesture(1.0, REFERENCE_RATIO, 0.0, ScalingMode::Proportional), 10.0, -10.0, 10.0, 401)?;
    let f_scaled = forces_table(&gesture(1.0, REFERENCE_RATIO, 0.0, ScalingMode::Local), 10.0, -10.0, 10.0, 401)?;
    Ok(vec![
        Pending::table(
            "fig3_inverse_square.csv",
            "a",
            "Local scaling over movement distance, k = 2000, d = 0.95, x0 = distance, T = 0",
            inverse,
        ),
        trajectories(
            "fig3_distance_trajectories.csv",
            "a",
            "Trajectories behind fig3_inverse_square.csv",
            "distance",
            &solved,
        ),
        trajectories(
            "fig3_unscaled_trajectories.csv",
            "b",
            "Proportional scaling from x0 = 10, k = 2000, T = 0; cubic runs diverge",
            "d",
            &unscaled,
        ),
        trajectories("fig3_local_trajectories.csv", "c", "Local scaling from x0 = 10, k = 2000, T = 0", "d", &local),
        Pending::table("fig3_forces_unscaled.csv", "d", "Proportional restoring force over [-10, 10], k = 1, d = 0.95", f_unscaled),
        Pending::table("fig3_forces_scaled.csv", "d", "Locally scaled restoring force over [-10, 10], k = 1, d = 0.95, x0 = 10", f_scaled),
    ])
}

fn target_runs(x0: f64, targets: &[f64], scaling: ScalingMode) -> Vec<(f64, GestureParams, SimConfig)> {
    targets
        .iter()
        .map(|&t| (t, gesture(REFERENCE_STIFFNESS, REFERENCE_RATIO, t, scaling), SimConfig::new(x0, 0.0)))
        .collect()
}

fn figure_four() -> Result<Vec<Pending>, CliError> {
    let near = lin_space(0.0, 0.8, 5);
    let far = lin_space(0.0, 8.0, 9);
    let local = batch(target_runs(1.0, &near, ScalingMode::Local))?;
    let force_runs: Vec<_> = near
        .iter()
        .map(|&t| (t, gesture(1.0, REFERENCE_RATIO, t, ScalingMode::Local), 1.0))
        .collect();
    let forces = keyed_forces("T", &force_runs, -1.0, 1.0, 201)?;
    let global = batch(target_runs(10.0, &far, ScalingMode::Global { range: 10.0 }))?;
    let restricted = batch(target_runs(10.0, &far, ScalingMode::Global { range: 8.0 }))?;
    Ok(vec![
        trajectories("fig4_local_targets.csv", "a", "Local scaling over targets, x0 = 1, k = 2000, d = 0.95", "T", &local),
        Pending::table("fig4_local_forces.csv", "b", "Locally scaled restoring force per target, k = 1, x0 = 1", forces),
        trajectories(
            "fig4_global_targets.csv",
            "c",
            "Global scaling with D = 10 over targets, x0 = 10, k = 2000, d = 0.95",
            "T",
            &global,
        ),
        trajectories(
            "fig4_restricted_targets.csv",
            "d",
            "Global scaling with D = 8 over targets, x0 = 10, k = 2000, d = 0.95",
            "T",
            &restricted,
        ),
    ])
}

/// Writes every dataset of `figure` into `dir`. Diverging runs are part of
/// the data and do not change the exit status.
pub fn reproduce(figure: Figure, dir: &Path) -> Result<Outcome, CliError> {
    let pending = match figure {
        Figure::One => figure_one()?,
        Figure::Two => figure_two()?,
        Figure::Three => figure_three()?,
        Figure::Four => figure_four()?,
    };
    ensure_dir(dir)?;
    let mut files: Vec<PathBuf> = Vec::new();
    let mut datasets = Vec::new();
    for p in pending {
        let path = dir.join(&p.meta.file);
        p.table.write(&path)?;
        files.push(path);
        datasets.push(p.meta);
    }
    let path = dir.join("manifest.json");
    output::write_json(&path, &Manifest { figure: figure.number(), datasets })?;
    files.push(path);
    Ok(Outcome { files, diverged: None })
}
