//! Adaptive Dormand–Prince 5(4) integration of the gesture ODE.
//!
//! The internal step is chosen by the embedded error estimate; output is
//! produced on a uniform grid `t_i = i·dt_out` through the method's
//! fifth-order continuous extension, so the output resolution is decoupled
//! from the step size.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::model::{critical_damping, GestureParams, State};
use crate::scaling::{effective_coefficient, EffectiveCoefficient};

/// Smallest admissible internal step, in seconds.
pub const MIN_STEP: f64 = 1e-14;
const MAX_STEPS: usize = 5_000_000;
/// Output step of the reference configuration, in seconds.
pub const DEFAULT_DT_OUT: f64 = 0.001;
/// Fraction of the initial distance used to classify a run as settled.
pub const CONVERGENCE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: f64,
    pub v0: f64,
    /// Duration; `None` means `20 / √(k/m)`.
    pub t_end: Option<f64>,
    pub dt_out: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Divergence bound on |x|; `None` means `10³ · max(|x0|, |T|, 1)`.
    pub guard: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            x0: 1.0,
            v0: 0.0,
            t_end: None,
            dt_out: DEFAULT_DT_OUT,
            rtol: 1e-8,
            atol: 1e-10,
            guard: None,
        }
    }
}

impl SimConfig {
    pub fn new(x0: f64, v0: f64) -> Self {
        Self {
            x0,
            v0,
            ..Self::default()
        }
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn with_dt_out(mut self, dt_out: f64) -> Self {
        self.dt_out = dt_out;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() || !self.v0.is_finite() {
            return Err(param_err("initial state must be finite"));
        }
        if let Some(t_end) = self.t_end {
            if !(t_end.is_finite() && t_end > 0.0) {
                return Err(param_err(format!("t_end must be positive, got {t_end}")));
            }
        }
        if !(self.dt_out.is_finite() && self.dt_out > 0.0) {
            return Err(param_err(format!(
                "dt_out must be positive, got {}",
                self.dt_out
            )));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(param_err("rtol and atol must be positive"));
        }
        if let Some(g) = self.guard {
            if !(g > 0.0) {
                return Err(param_err(format!("guard must be positive, got {g}")));
            }
        }
        Ok(())
    }

    pub fn resolved_t_end(&self, params: &GestureParams) -> f64 {
        self.t_end
            .unwrap_or_else(|| 20.0 / params.natural_frequency())
    }

    pub fn resolved_guard(&self, params: &GestureParams) -> f64 {
        self.guard.unwrap_or_else(|| {
            1e3 * self.x0.abs().max(params.target.abs()).max(1.0)
        })
    }

    /// Number of grid samples covering `[0, t_end]`.
    pub fn sample_count(&self, params: &GestureParams) -> usize {
        let t_end = self.resolved_t_end(params);
        (t_end / self.dt_out + 1e-9).floor() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Status {
    /// Ran to `t_end` and ended within 1% of the initial distance from the target.
    Converged,
    /// Ran to `t_end` without settling.
    Completed,
    /// The divergence guard fired; samples were truncated at `t_blowup`.
    Diverged { t_blowup: f64 },
}

impl Status {
    pub fn is_diverged(&self) -> bool {
        matches!(self, Status::Diverged { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Completed => "completed",
            Status::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub status: Status,
    pub target: f64,
    pub params: Option<GestureParams>,
    pub coefficient: Option<EffectiveCoefficient>,
}

impl Trajectory {
    /// Wraps externally sampled data. Velocities, when absent, are estimated
    /// by central differences (one-sided at the ends).
    pub fn from_samples(t: Vec<f64>, x: Vec<f64>, v: Option<Vec<f64>>, target: f64) -> Result<Self> {
        if t.len() != x.len() {
            return Err(param_err("time and position columns differ in length"));
        }
        if t.len() < 2 {
            return Err(Error::TooFewSamples(t.len()));
        }
        let v = match v {
            Some(v) if v.len() != t.len() => {
                return Err(param_err("velocity column differs in length"))
            }
            Some(v) => v,
            None => finite_difference(&t, &x),
        };
        if t.iter().chain(&x).chain(&v).any(|s| !s.is_finite()) {
            return Err(param_err("trajectory samples must be finite"));
        }
        Ok(Self {
            t,
            x,
            v,
            status: Status::Completed,
            target,
            params: None,
            coefficient: None,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Mean spacing of the time grid.
    pub fn step(&self) -> f64 {
        match self.t.len() {
            0 | 1 => 0.0,
            n => (self.t[n - 1] - self.t[0]) / (n - 1) as f64,
        }
    }

    /// Whether consecutive spacings all agree with the mean step to a
    /// relative tolerance.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let h = self.step();
        if !(h > 0.0) {
            return false;
        }
        self.t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= rel_tol * h)
    }
}

fn finite_difference(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect()
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes c_i
// are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Vec2 = [f64; 2];

#[inline]
fn axpy(y: Vec2, terms: &[(f64, Vec2)], h: f64) -> Vec2 {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct Ode {
    target: f64,
    stiffness: f64,
    damping: f64,
    d_eff: f64,
    mass: f64,
    exponent: u32,
}

impl Ode {
    #[inline]
    fn rhs(&self, y: Vec2) -> Vec2 {
        let a = crate::model::acceleration_poly(
            State::new(y[0], y[1]),
            self.target,
            self.stiffness,
            self.damping,
            self.d_eff,
            self.mass,
            self.exponent,
        );
        [y[1], a]
    }
}

struct Step {
    y_new: Vec2,
    k7: Vec2,
    err: f64,
    cont: [Vec2; 5],
}

fn dopri_step(ode: &Ode, y: Vec2, k1: Vec2, h: f64, rtol: f64, atol: f64) -> Step {
    let k2 = ode.rhs(axpy(y, &[(A21, k1)], h));
    let k3 = ode.rhs(axpy(y, &[(A31, k1), (A32, k2)], h));
    let k4 = ode.rhs(axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
    let k5 = ode.rhs(axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
    let k6 = ode.rhs(axpy(
        y,
        &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        h,
    ));
    let y_new = axpy(
        y,
        &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
        h,
    );
    let k7 = ode.rhs(y_new);

    let mut sum = 0.0;
    for i in 0..2 {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        sum += (e / sc).powi(2);
    }
    let err = (sum / 2.0).sqrt();

    let mut cont = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        cont[0][i] = y[i];
        cont[1][i] = dy;
        cont[2][i] = bspl;
        cont[3][i] = dy - h * k7[i] - bspl;
        cont[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step {
        y_new,
        k7,
        err,
        cont,
    }
}

#[inline]
fn dense(cont: &[Vec2; 5], theta: f64) -> Vec2 {
    let theta1 = 1.0 - theta;
    let mut out = [0.0; 2];
    for i in 0..2 {
        out[i] = cont[0][i]
            + theta * (cont[1][i] + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
    }
    out
}

fn rms_scaled(a: Vec2, y: Vec2, rtol: f64, atol: f64) -> f64 {
    let s0 = a[0] / (atol + rtol * y[0].abs());
    let s1 = a[1] / (atol + rtol * y[1].abs());
    ((s0 * s0 + s1 * s1) / 2.0).sqrt()
}

/// Initial step heuristic for a fifth-order method.
fn initial_step(ode: &Ode, y0: Vec2, f0: Vec2, h_max: f64, rtol: f64, atol: f64) -> f64 {
    let d0 = rms_scaled(y0, y0, rtol, atol);
    let d1 = rms_scaled(f0, y0, rtol, atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(h_max);
    let y1 = axpy(y0, &[(1.0, f0)], h0);
    let f1 = ode.rhs(y1);
    let d2 = rms_scaled([f1[0] - f0[0], f1[1] - f0[1]], y0, rtol, atol) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Integrates the gesture from `cfg.x0, cfg.v0` and samples the solution on
/// the uniform output grid.
pub fn integrate(params: &GestureParams, cfg: &SimConfig) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let n = cfg.sample_count(params);
    integrate_samples(params, cfg, n)
}

/// As [`integrate`], on exactly `n_samples` grid points `i·dt_out`.
pub fn integrate_samples(
    params: &GestureParams,
    cfg: &SimConfig,
    n_samples: usize,
) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    if n_samples < 2 {
        return Err(param_err(format!(
            "time span must cover at least two output samples (dt_out = {})",
            cfg.dt_out
        )));
    }
    let coefficient = effective_coefficient(params, cfg.x0)?;
    let omega = params.natural_frequency();
    let ode = Ode {
        target: params.target,
        stiffness: params.stiffness,
        damping: critical_damping(params.mass, params.stiffness)?,
        d_eff: coefficient.value,
        mass: params.mass,
        exponent: params.exponent,
    };
    let guard_x = cfg.resolved_guard(params);
    let guard_v = guard_x * omega.max(1.0);
    let exceeds = |y: Vec2| !(y[0].abs() <= guard_x && y[1].abs() <= guard_v);

    let dt = cfg.dt_out;
    let t_last = (n_samples - 1) as f64 * dt;
    let (rtol, atol) = (cfg.rtol, cfg.atol);

    let mut out_t = Vec::with_capacity(n_samples);
    let mut out_x = Vec::with_capacity(n_samples);
    let mut out_v = Vec::with_capacity(n_samples);

    let finish = |t: Vec<f64>, x: Vec<f64>, v: Vec<f64>, status: Status| Trajectory {
        t,
        x,
        v,
        status,
        target: params.target,
        params: Some(*params),
        coefficient: Some(coefficient),
    };

    let mut y: Vec2 = [cfg.x0, cfg.v0];
    if exceeds(y) {
        return Ok(finish(out_t, out_x, out_v, Status::Diverged { t_blowup: 0.0 }));
    }
    out_t.push(0.0);
    out_x.push(y[0]);
    out_v.push(y[1]);
    let mut next = 1usize;

    let mut t = 0.0;
    let mut k1 = ode.rhs(y);
    let mut h = initial_step(&ode, y, k1, t_last, rtol, atol);
    let mut steps = 0usize;
    let mut last_rejected = false;

    while next < n_samples {
        if steps >= MAX_STEPS {
            return Err(Error::MaxSteps(MAX_STEPS));
        }
        if h < MIN_STEP {
            return Err(Error::StepSizeCollapse { t, h });
        }
        let last = t + h >= t_last;
        if last {
            h = t_last - t;
        }
        steps += 1;
        let step = dopri_step(&ode, y, k1, h, rtol, atol);

        if step.err.is_finite() && step.err <= 1.0 {
            let t_new = if last { t_last } else { t + h };
            while next < n_samples {
                let ti = next as f64 * dt;
                if ti > t_new && !(last && next == n_samples - 1) {
                    break;
                }
                let theta = if h > 0.0 { ((ti - t) / h).clamp(0.0, 1.0) } else { 1.0 };
                let yi = if next == n_samples - 1 && last {
                    step.y_new
                } else {
                    dense(&step.cont, theta)
                };
                if exceeds(yi) {
                    return Ok(finish(out_t, out_x, out_v, Status::Diverged { t_blowup: ti }));
                }
                out_t.push(ti);
                out_x.push(yi[0]);
                out_v.push(yi[1]);
                next += 1;
            }
            if exceeds(step.y_new) {
                return Ok(finish(out_t, out_x, out_v, Status::Diverged { t_blowup: t_new }));
            }
            t = t_new;
            y = step.y_new;
            k1 = step.k7;
            let mut fac = (0.9 * step.err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            let fac = if step.err.is_finite() {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h *= fac;
            last_rejected = true;
        }
    }

    let status = settle_status(&out_x, params.target, cfg.x0, cfg.v0, omega);
    Ok(finish(out_t, out_x, out_v, status))
}

fn settle_status(x: &[f64], target: f64, x0: f64, v0: f64, omega: f64) -> Status {
    let scale = (x0 - target).abs().max(v0.abs() / omega);
    let end = x.last().copied().unwrap_or(x0);
    if (end - target).abs() <= CONVERGENCE_FRACTION * scale {
        Status::Converged
    } else {
        Status::Completed
    }
}

/// Closed-form critically damped linear solution (unit mass) on `grid`:
/// `x(t) = T + (A + B·t)·e^(−ωt)` with `ω = √k`, `A = x0 − T`, `B = v0 + ω·A`.
pub fn integrate_linear_analytic(
    stiffness: f64,
    x0: f64,
    v0: f64,
    target: f64,
    grid: &[f64],
) -> Result<Trajectory> {
    if !(stiffness > 0.0) {
        return Err(param_err(format!("stiffness must be positive, got {stiffness}")));
    }
    let omega = stiffness.sqrt();
    let a = x0 - target;
    let b = v0 + omega * a;
    let mut x = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    for &t in grid {
        let e = (-omega * t).exp();
        x.push(target + (a + b * t) * e);
        v.push((b - omega * (a + b * t)) * e);
    }
    let status = settle_status(&x, target, x0, v0, omega);
    let params = GestureParams::linear(stiffness, target);
    Ok(Trajectory {
        t: grid.to_vec(),
        x,
        v,
        status,
        target,
        params: Some(params),
        coefficient: Some(effective_coefficient(&params, x0)?),
    })
}

/// `i·dt` for `i = 0..n`.
pub fn uniform_grid(dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt).collect()
}
