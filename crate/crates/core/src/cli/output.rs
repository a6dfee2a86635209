//! CSV and JSON writers with fixed, round-trippable number formatting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;
use crate::solver::Trajectory;

/// Shortest decimal representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A header plus rows of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_csv())
    }
}

pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(["t", "x", "v"]);
    for i in 0..traj.len() {
        table.push(vec![num(traj.t[i]), num(traj.x[i]), num(traj.v[i])]);
    }
    table
}

/// Several trajectories stacked in long format, keyed by a leading column.
pub fn keyed_trajectories<'a>(
    key: &str,
    runs: impl IntoIterator<Item = (f64, &'a Trajectory)>,
) -> Table {
    let mut table = Table::new([key, "t", "x", "v"]);
    for (value, traj) in runs {
        for i in 0..traj.len() {
            table.push(vec![num(value), num(traj.t[i]), num(traj.x[i]), num(traj.v[i])]);
        }
    }
    table
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    t: &'a [f64],
    x: &'a [f64],
    v: &'a [f64],
}

pub fn trajectory_json(traj: &Trajectory) -> String {
    to_json(&TrajectoryJson {
        t: &traj.t,
        x: &traj.x,
        v: &traj.v,
    })
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory JSON serialization");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, &to_json(value))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}

/// A parsed CSV file with named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| e.to_string())?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn has(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, String> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column `{name}`"))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[idx]
                    .parse::<f64>()
                    .map_err(|_| format!("row {}: `{}` is not a number in column `{name}`", i + 2, row[idx]))
            })
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>, String> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column `{name}`"))?;
        Ok(self.rows.iter().map(|r| r[idx].clone()).collect())
    }

    /// Observed trajectory from `t,x[,v]` columns.
    pub fn trajectory(&self, target: f64) -> Result<Trajectory, String> {
        let t = self.column("t")?;
        let x = self.column("x")?;
        let v = if self.has("v") { Some(self.column("v")?) } else { None };
        Trajectory::from_samples(t, x, v, target).map_err(|e| e.to_string())
    }

    /// Splits a long-format file on its key column into one trajectory per key,
    /// in order of first appearance.
    pub fn keyed_trajectories(&self, key: &str, target_of: impl Fn(f64) -> f64) -> Result<Vec<(f64, Trajectory)>, String> {
        let keys = self.column(key)?;
        let (t, x, v) = (self.column("t")?, self.column("x")?, self.column("v")?);
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, &k) in keys.iter().enumerate() {
            match out.iter_mut().find(|(kk, _)| *kk == k) {
                Some((_, idx)) => idx.push(i),
                None => out.push((k, vec![i])),
            }
        }
        out.into_iter()
            .map(|(k, idx)| {
                let pick = |col: &[f64]| idx.iter().map(|&i| col[i]).collect::<Vec<_>>();
                Trajectory::from_samples(pick(&t), pick(&x), Some(pick(&v)), target_of(k))
                    .map(|traj| (k, traj))
                    .map_err(|e| e.to_string())
            })
            .collect()
    }
}
