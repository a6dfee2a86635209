//! Estimation of gesture parameters from an observed trajectory.
//!
//! Free parameters are mapped onto their bounds with a logistic transform and
//! searched with a Nelder–Mead simplex; the objective is the position RMSE
//! between the observation and a simulation on the same grid.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::model::GestureParams;
use crate::solver::{integrate_samples, SimConfig, Trajectory};

pub use simplex::{SimplexOptions, SimplexResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitParameter {
    #[serde(rename = "k")]
    Stiffness,
    #[serde(rename = "d")]
    Ratio,
    #[serde(rename = "T")]
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub stiffness: (f64, f64),
    pub ratio: (f64, f64),
    pub target: (f64, f64),
}

impl Bounds {
    pub fn default_for(observed: &Trajectory) -> Self {
        let lo = observed.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = observed.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.1 * (hi - lo).max(1e-6);
        Self {
            stiffness: (10.0, 1e5),
            ratio: (0.0, 1.0 - 1e-6),
            target: (lo - pad, hi + pad),
        }
    }

    fn of(&self, p: FitParameter) -> (f64, f64) {
        match p {
            FitParameter::Stiffness => self.stiffness,
            FitParameter::Ratio => self.ratio,
            FitParameter::Target => self.target,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub observed: Trajectory,
    /// Scaling law, exponent, mass and the values of fixed parameters.
    pub base: GestureParams,
    pub x0: f64,
    pub v0: f64,
    pub free: Vec<FitParameter>,
    pub bounds: Bounds,
    /// Initial guesses; only the free parameters are read.
    pub initial: Estimates,
    /// Weight of the velocity mismatch in the objective.
    pub velocity_weight: f64,
    pub rtol: f64,
    pub atol: f64,
    pub options: SimplexOptions,
}

impl FitProblem {
    /// Fits `k` and `d` with the remaining settings taken from `base`;
    /// initial conditions come from the first observed sample.
    pub fn new(observed: Trajectory, base: GestureParams) -> Self {
        let bounds = Bounds::default_for(&observed);
        let x0 = observed.x.first().copied().unwrap_or(0.0);
        let v0 = observed.v.first().copied().unwrap_or(0.0);
        let defaults = SimConfig::default();
        Self {
            observed,
            x0,
            v0,
            free: vec![FitParameter::Stiffness, FitParameter::Ratio],
            bounds,
            initial: Estimates {
                stiffness: 1000.0,
                ratio: 0.5,
                target: base.target,
            },
            base,
            velocity_weight: 0.0,
            rtol: defaults.rtol,
            atol: defaults.atol,
            options: SimplexOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.observed.len() < 3 {
            return Err(param_err("observed trajectory needs at least 3 samples"));
        }
        if !self.observed.is_uniform(1e-6) {
            return Err(param_err("observed trajectory must be on a uniform time grid"));
        }
        if self.free.is_empty() {
            return Err(param_err("at least one parameter must be free"));
        }
        for (i, p) in self.free.iter().enumerate() {
            if self.free[..i].contains(p) {
                return Err(param_err(format!("parameter {p:?} listed twice")));
            }
            let (lo, hi) = self.bounds.of(*p);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(param_err(format!("bounds for {p:?} must be ordered, got [{lo}, {hi}]")));
            }
            let g = self.initial.get(*p);
            if !(lo < g && g < hi) {
                return Err(param_err(format!(
                    "initial guess {g} for {p:?} must lie strictly inside [{lo}, {hi}]"
                )));
            }
        }
        if self.free.contains(&FitParameter::Stiffness) && !(self.bounds.stiffness.0 > 0.0) {
            return Err(param_err("stiffness bounds must be positive"));
        }
        if self.free.contains(&FitParameter::Ratio) && self.bounds.ratio.0 < 0.0 {
            return Err(param_err("ratio bounds must be non-negative"));
        }
        if !(self.velocity_weight >= 0.0) {
            return Err(param_err("velocity weight must be non-negative"));
        }
        self.candidate(&self.initial).validate()
    }

    /// The base gesture with the free parameters replaced from `est`.
    pub fn candidate(&self, est: &Estimates) -> GestureParams {
        let mut p = self.base;
        for &f in &self.free {
            match f {
                FitParameter::Stiffness => p.stiffness = est.stiffness,
                FitParameter::Ratio => p.ratio = est.ratio,
                FitParameter::Target => p.target = est.target,
            }
        }
        p
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig {
            x0: self.x0,
            v0: self.v0,
            t_end: None,
            dt_out: self.observed.step(),
            rtol: self.rtol,
            atol: self.atol,
            guard: None,
        }
    }

    fn amplitude(&self) -> f64 {
        let lo = self.observed.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.observed.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo).max(1.0)
    }

    /// Penalty returned for candidates whose simulation diverges or fails.
    pub fn penalty(&self) -> f64 {
        1e6 * self.amplitude()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    #[serde(rename = "k")]
    pub stiffness: f64,
    #[serde(rename = "d")]
    pub ratio: f64,
    #[serde(rename = "T")]
    pub target: f64,
}

impl Estimates {
    fn get(&self, p: FitParameter) -> f64 {
        match p {
            FitParameter::Stiffness => self.stiffness,
            FitParameter::Ratio => self.ratio,
            FitParameter::Target => self.target,
        }
    }

    fn set(&mut self, p: FitParameter, value: f64) {
        match p {
            FitParameter::Stiffness => self.stiffness = value,
            FitParameter::Ratio => self.ratio = value,
            FitParameter::Target => self.target = value,
        }
    }

    pub fn of(params: &GestureParams) -> Self {
        Self {
            stiffness: params.stiffness,
            ratio: params.ratio,
            target: params.target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimates: Estimates,
    /// Root-mean-square error at the estimate, in position units.
    pub rmse: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// RMSE between the observation and a simulation of `candidate`; the
/// divergence penalty when the simulation blows up or fails.
pub fn objective(candidate: &GestureParams, problem: &FitProblem) -> f64 {
    let obs = &problem.observed;
    let traj = match integrate_samples(candidate, &problem.sim_config(), obs.len()) {
        Ok(t) if !t.status.is_diverged() && t.len() == obs.len() => t,
        _ => return problem.penalty(),
    };
    let n = obs.len() as f64;
    let sx: f64 = traj.x.iter().zip(&obs.x).map(|(a, b)| (a - b).powi(2)).sum();
    let mut mse = sx / n;
    if problem.velocity_weight > 0.0 {
        let sv: f64 = traj.v.iter().zip(&obs.v).map(|(a, b)| (a - b).powi(2)).sum();
        mse += problem.velocity_weight * sv / n;
    }
    let rmse = mse.sqrt();
    if rmse.is_finite() {
        rmse
    } else {
        problem.penalty()
    }
}

const LOGIT_LIMIT: f64 = 30.0;

fn to_unbounded(p: f64, (lo, hi): (f64, f64)) -> f64 {
    let s = (p - lo) / (hi - lo);
    (s / (1.0 - s)).ln().clamp(-LOGIT_LIMIT, LOGIT_LIMIT)
}

fn to_bounded(u: f64, (lo, hi): (f64, f64)) -> f64 {
    let u = u.clamp(-LOGIT_LIMIT, LOGIT_LIMIT);
    lo + (hi - lo) / (1.0 + (-u).exp())
}

pub fn fit_gesture(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let decode = |u: &[f64]| {
        let mut est = problem.initial;
        for (&p, &ui) in problem.free.iter().zip(u) {
            est.set(p, to_bounded(ui, problem.bounds.of(p)));
        }
        est
    };
    let start: Vec<f64> = problem
        .free
        .iter()
        .map(|&p| to_unbounded(problem.initial.get(p), problem.bounds.of(p)))
        .collect();
    let steps: Vec<f64> = start.iter().map(|u| (0.1 * u.abs()).max(0.1)).collect();

    let result = simplex::minimize(
        |u| objective(&problem.candidate(&decode(u)), problem),
        &start,
        &steps,
        problem.options,
    );
    Ok(FitResult {
        estimates: decode(&result.x),
        rmse: result.f,
        iterations: result.iterations,
        evaluations: result.evaluations,
        converged: result.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingMode;
    use crate::solver::integrate;

    fn synthetic(params: &GestureParams, x0: f64) -> Trajectory {
        integrate(params, &SimConfig::new(x0, 0.0)).unwrap()
    }

    fn global(k: f64, d: f64) -> GestureParams {
        GestureParams::new(k, d, 0.0).with_scaling(ScalingMode::Global { range: 10.0 })
    }

    #[test]
    fn objective_is_zero_at_generator() {
        let truth = global(2000.0, 0.7);
        let problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        let at_truth = objective(&truth, &problem);
        assert!(at_truth <= 1e-6, "{at_truth}");
        let doubled = GestureParams { stiffness: 4000.0, ..truth };
        assert!(objective(&doubled, &problem) > at_truth);
    }

    #[test]
    fn diverging_candidate_gets_penalty() {
        // Proportional scaling with d·|x0 − T|² > 1 sits outside the basin.
        let truth = GestureParams::new(2000.0, 0.1, 0.0);
        let problem = FitProblem::new(synthetic(&truth, 2.0), truth);
        assert!(objective(&truth, &problem) < 1e-6);
        let unstable = GestureParams::new(2000.0, 0.5, 0.0);
        assert!(0.5 * 2.0f64.powi(2) > 1.0);
        assert_eq!(objective(&unstable, &problem), problem.penalty());
    }

    #[test]
    fn transform_round_trip_and_strict_bounds() {
        let b = (10.0, 1e5);
        for p in [10.5, 2000.0, 99_999.0] {
            assert!((to_bounded(to_unbounded(p, b), b) / p - 1.0).abs() < 1e-9);
        }
        for u in [-1e9, -40.0, 0.0, 40.0, 1e9] {
            let p = to_bounded(u, (0.0, 1.0 - 1e-6));
            assert!(p > 0.0 && p < 1.0 - 1e-6);
        }
    }

    #[test]
    fn recovers_global_scaling_parameters() {
        let truth = global(2000.0, 0.7);
        let problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        let r = fit_gesture(&problem).unwrap();
        assert!(r.converged);
        assert!((r.estimates.stiffness / 2000.0 - 1.0).abs() < 0.01, "{:?}", r);
        assert!((r.estimates.ratio - 0.7).abs() < 0.02, "{:?}", r);
    }

    #[test]
    fn linear_truth_recovers_small_ratio() {
        let truth = global(3000.0, 0.0);
        let mut problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        problem.initial.ratio = 0.3;
        let r = fit_gesture(&problem).unwrap();
        assert!(r.estimates.ratio <= 0.02, "{:?}", r);
        assert!((r.estimates.stiffness / 3000.0 - 1.0).abs() < 0.01, "{:?}", r);
    }

    #[test]
    fn starting_at_truth_converges_fast() {
        let truth = global(2000.0, 0.7);
        let mut problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        problem.initial = Estimates::of(&truth);
        let r = fit_gesture(&problem).unwrap();
        assert!(r.iterations < 50, "{:?}", r);
        assert!(r.rmse <= 1e-8, "{:?}", r);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let truth = global(2000.0, 0.7);
        let mut problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        problem.options.max_iterations = 5;
        let r = fit_gesture(&problem).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn joint_target_fit() {
        let truth = global(2500.0, 0.5);
        let mut problem = FitProblem::new(synthetic(&truth, 10.0), truth);
        problem.free.push(FitParameter::Target);
        problem.initial.target = 0.5;
        let r = fit_gesture(&problem).unwrap();
        assert!(r.estimates.target.abs() < 0.01, "{:?}", r);
        assert!((r.estimates.stiffness / 2500.0 - 1.0).abs() < 0.01, "{:?}", r);
    }

    #[test]
    fn validation_errors() {
        let truth = global(2000.0, 0.7);
        let obs = synthetic(&truth, 10.0);
        let mut p = FitProblem::new(obs.clone(), truth);
        p.initial.ratio = 1.5;
        assert!(fit_gesture(&p).is_err());
        let mut p = FitProblem::new(obs.clone(), truth);
        p.free.clear();
        assert!(fit_gesture(&p).is_err());
        let mut bad = obs;
        bad.t[5] += 0.0004;
        assert!(fit_gesture(&FitProblem::new(bad, truth)).is_err());
    }
}
