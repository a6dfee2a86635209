//! Parameter sweeps and log-log power-law regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::kinematics::{summarize, KinematicSummary};
use crate::model::GestureParams;
use crate::scaling::effective_coefficient;
use crate::solver::{integrate, SimConfig, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "k")]
    Stiffness,
    #[serde(rename = "T")]
    Target,
    #[serde(rename = "d")]
    Ratio,
    #[serde(rename = "x0")]
    InitialPosition,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Stiffness => "k",
            SweepParameter::Target => "T",
            SweepParameter::Ratio => "d",
            SweepParameter::InitialPosition => "x0",
        }
    }

    /// Applies `value` to a copy of the base configuration.
    pub fn apply(&self, params: &GestureParams, cfg: &SimConfig, value: f64) -> (GestureParams, SimConfig) {
        let (mut p, mut c) = (*params, *cfg);
        match self {
            SweepParameter::Stiffness => p.stiffness = value,
            SweepParameter::Target => p.target = value,
            SweepParameter::Ratio => p.ratio = value,
            SweepParameter::InitialPosition => c.x0 = value,
        }
        (p, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub value: f64,
    pub status: Status,
    /// Absent for diverged runs.
    pub summary: Option<KinematicSummary>,
    pub d_eff: f64,
    pub lambda: f64,
}

impl SweepRecord {
    pub fn usable(&self) -> Option<&KinematicSummary> {
        if self.status.is_diverged() {
            None
        } else {
            self.summary.as_ref()
        }
    }
}

/// Integrates and summarizes one gesture per value. Points run in parallel
/// on the current rayon pool; records come back ordered by swept value.
///
/// Parameter errors abort the sweep. Runtime failures of individual points
/// (step-size collapse) are recorded as diverged so the remaining points are
/// preserved.
pub fn sweep(
    params: &GestureParams,
    cfg: &SimConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepRecord>> {
    if values.is_empty() {
        return Err(param_err("sweep needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(param_err("sweep values must be finite"));
    }
    let mut records = values
        .par_iter()
        .map(|&value| {
            let (p, c) = parameter.apply(params, cfg, value);
            p.validate()?;
            c.validate()?;
            let coeff = effective_coefficient(&p, c.x0)?;
            let (status, summary) = match integrate(&p, &c) {
                Ok(traj) if traj.status.is_diverged() => (traj.status, None),
                Ok(traj) => (traj.status, summarize(&traj).ok()),
                Err(Error::StepSizeCollapse { t, .. }) => (Status::Diverged { t_blowup: t }, None),
                Err(e) => return Err(e),
            };
            Ok(SweepRecord {
                value,
                status,
                summary,
                d_eff: coeff.value,
                lambda: coeff.lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(records)
}

pub fn sweep_stiffness(ks: &[f64], params: &GestureParams, cfg: &SimConfig) -> Result<Vec<SweepRecord>> {
    if ks.iter().any(|&k| !(k > 0.0)) {
        return Err(param_err("stiffness values must be positive"));
    }
    sweep(params, cfg, SweepParameter::Stiffness, ks)
}

pub fn sweep_targets(targets: &[f64], params: &GestureParams, cfg: &SimConfig) -> Result<Vec<SweepRecord>> {
    sweep(params, cfg, SweepParameter::Target, targets)
}

/// `n` points from `start` to `stop` inclusive, evenly spaced in log.
pub fn log_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    spaced(n, start, stop, |w| (a + w * (b - a)).exp())
}

pub fn lin_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    spaced(n, start, stop, |w| start + w * (stop - start))
}

fn spaced(n: usize, start: f64, stop: f64, at: impl Fn(f64) -> f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| match i {
                0 => start,
                i if i == n - 1 => stop,
                i => at(i as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub exponent: f64,
    pub r2: f64,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.alpha * x.powf(self.exponent)
    }
}

/// Least squares on `(ln x, ln y)`; `y ≈ alpha · x^exponent`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::Domain("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::Domain(format!(
            "power-law fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive, finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        alpha: intercept.exp(),
        exponent: slope,
        r2: r_squared(ss_res, ss_tot),
    })
}

fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Slope and coefficient of determination for `y ≈ slope · x`.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("regression needs two equally long columns of ≥ 2 values".into()));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values are zero".into()));
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
    Ok((slope, r_squared(ss_res, ss_tot)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "t_pv")]
    TimeToPeak,
    #[serde(rename = "pv")]
    PeakVelocity,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::TimeToPeak => "t_pv",
            Quantity::PeakVelocity => "pv",
        }
    }

    pub fn of(&self, s: &KinematicSummary) -> f64 {
        match self {
            Quantity::TimeToPeak => s.t_pv,
            Quantity::PeakVelocity => s.pv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPowerLaw {
    pub fit: PowerLawFit,
    pub n_used: usize,
    pub n_dropped: usize,
}

/// Power law of `quantity` against the swept value. Diverged records and
/// non-positive values are dropped, never imputed.
pub fn power_law_from_records(records: &[SweepRecord], quantity: Quantity) -> Result<SweepPowerLaw> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| r.usable().map(|s| (r.value, quantity.of(s))))
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .unzip();
    let fit = fit_power_law(&xs, &ys)?;
    Ok(SweepPowerLaw {
        fit,
        n_used: xs.len(),
        n_dropped: records.len() - xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingMode;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law_round_trip() {
        let xs = [1.0, 2.0, 4.0, 9.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.sqrt()).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-12);
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(fit_power_law(&[1.0, 2.0, 0.0], &[1.0, 2.0, 3.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0]), Err(Error::Domain(_))));
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spacing_helpers() {
        let ks = log_space(500.0, 8000.0, 5);
        assert_eq!(ks[0], 500.0);
        assert_eq!(ks[4], 8000.0);
        assert!((ks[2] - 2000.0).abs() < 1e-9);
        assert_eq!(lin_space(0.0, 0.8, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8]);
    }

    #[test]
    fn single_stiffness_sweep() {
        let recs = sweep_stiffness(&[2000.0], &GestureParams::linear(1.0, 0.0), &SimConfig::new(1.0, 0.0)).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((recs[0].summary.unwrap().t_pv - 0.02236).abs() < 1e-4);
        assert!(sweep_stiffness(&[], &GestureParams::linear(1.0, 0.0), &SimConfig::default()).is_err());
        assert!(sweep_stiffness(&[-1.0], &GestureParams::linear(1.0, 0.0), &SimConfig::default()).is_err());
    }

    #[test]
    fn linear_sweep_is_monotone() {
        let ks = log_space(500.0, 8000.0, 8);
        let recs = sweep_stiffness(&ks, &GestureParams::linear(1.0, 0.0), &SimConfig::new(1.0, 0.0)).unwrap();
        for w in recs.windows(2) {
            let (a, b) = (w[0].summary.unwrap(), w[1].summary.unwrap());
            assert!(b.t_pv < a.t_pv);
            assert!(b.pv > a.pv);
        }
    }

    #[test]
    fn targets_sweep_proportional_distance_effect() {
        let params = GestureParams::new(2000.0, 0.95, 0.0);
        let targets = lin_space(0.0, 0.8, 5);
        let recs = sweep_targets(&targets, &params, &SimConfig::new(1.0, 0.0)).unwrap();
        // Ordered by T, so distance decreases along the records.
        for w in recs.windows(2) {
            assert!(w[1].summary.unwrap().t_pv < w[0].summary.unwrap().t_pv);
        }
    }

    #[test]
    fn diverged_points_are_dropped_from_fits() {
        let params = GestureParams::new(2000.0, 0.95, 0.0);
        let recs = sweep(&params, &SimConfig::new(1.0, 0.0), SweepParameter::InitialPosition, &[0.5, 0.7, 0.9, 10.0]).unwrap();
        assert!(recs[3].status.is_diverged());
        assert!(recs[3].summary.is_none());
        let law = power_law_from_records(&recs, Quantity::PeakVelocity).unwrap();
        assert_eq!((law.n_used, law.n_dropped), (3, 1));
    }

    #[test]
    fn sweep_records_carry_scaling_metadata() {
        let params = GestureParams::new(2000.0, 0.95, 0.0).with_scaling(ScalingMode::Global { range: 8.0 });
        let recs = sweep_targets(&[4.0, 0.0], &params, &SimConfig::new(10.0, 0.0)).unwrap();
        assert_eq!(recs[0].value, 0.0);
        assert_eq!(recs[0].lambda, 1.0);
        assert_eq!(recs[1].lambda, 0.75);
        assert!((recs[1].d_eff - 0.75 * 1900.0 / 36.0).abs() < 1e-9);
    }

    #[test]
    fn origin_regression() {
        let (slope, r2) = fit_through_origin(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(slope, 2.0);
        assert_eq!(r2, 1.0);
        let (_, r2) = fit_through_origin(&[1.0, 2.0, 3.0], &[5.0, 5.1, 5.2]).unwrap();
        assert!(r2 < 0.5);
    }

    proptest! {
        #[test]
        fn power_law_scale_equivariance(
            alpha in 0.01f64..100.0, p in -2.0f64..2.0, c in 0.01f64..100.0,
            noise in proptest::collection::vec(-0.1f64..0.1, 6),
        ) {
            let xs: Vec<f64> = (1..=6).map(|i| i as f64 * 1.7).collect();
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| alpha * x.powf(p) * e.exp()).collect();
            let base = fit_power_law(&xs, &ys).unwrap();
            let cx: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let scaled = fit_power_law(&cx, &ys).unwrap();
            prop_assert!((scaled.exponent - base.exponent).abs() <= 1e-10);
            let expected = base.alpha * c.powf(-base.exponent);
            prop_assert!((scaled.alpha / expected - 1.0).abs() <= 1e-10);
        }
    }
}
