//! Gesture dynamics: the critically damped point attractor and its
//! cubic extension with a nonlinear restoring force.
//!
//! The equation of motion is
//!
//! ```text
//! m·x'' + b·x' + k·(x − T) − d'·(x − T)^n = 0,    b = 2·√(m·k)
//! ```
//!
//! where `d'` is the *effective* nonlinear coefficient. The user-facing ratio
//! `d` stored in [`GestureParams`] is never applied directly; it is turned into
//! `d'` by [`crate::scaling::effective_coefficient`]. With `n = 3` this is the
//! usual cubic model, and `d' = 0` reduces it to the linear oscillator.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::scaling::{self, ScalingMode};

/// Full specification of one gesture's dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureParams {
    pub mass: f64,
    pub stiffness: f64,
    /// Nonlinear ratio `d`, expressed as a multiple of the stiffness.
    pub ratio: f64,
    pub scaling: ScalingMode,
    /// Exponent of the polynomial restoring term.
    pub exponent: u32,
    pub target: f64,
}

impl GestureParams {
    /// Unit mass, cubic term, proportional scaling.
    pub fn new(stiffness: f64, ratio: f64, target: f64) -> Self {
        Self {
            mass: 1.0,
            stiffness,
            ratio,
            scaling: ScalingMode::Proportional,
            exponent: 3,
            target,
        }
    }

    /// Linear critically damped gesture (`d = 0`).
    pub fn linear(stiffness: f64, target: f64) -> Self {
        Self::new(stiffness, 0.0, target)
    }

    pub fn with_scaling(mut self, scaling: ScalingMode) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_exponent(mut self, exponent: u32) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(param_err(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.stiffness.is_finite() && self.stiffness > 0.0) {
            return Err(param_err(format!(
                "stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if self.exponent < 1 {
            return Err(param_err("exponent must be at least 1"));
        }
        if !self.target.is_finite() {
            return Err(param_err("target must be finite"));
        }
        if !self.ratio.is_finite() || self.ratio < 0.0 {
            return Err(param_err(format!(
                "nonlinear ratio must be non-negative, got {}",
                self.ratio
            )));
        }
        match self.scaling {
            ScalingMode::Proportional => {}
            ScalingMode::Local | ScalingMode::Global { .. } => {
                if self.ratio >= 1.0 {
                    return Err(param_err(format!(
                        "nonlinear ratio must lie in [0, 1) under local or global scaling, got {}",
                        self.ratio
                    )));
                }
            }
        }
        if let ScalingMode::Global { range } = self.scaling {
            if !(range.is_finite() && range > 0.0) {
                return Err(param_err(format!(
                    "global movement range must be positive, got {range}"
                )));
            }
        }
        Ok(())
    }

    pub fn damping(&self) -> f64 {
        2.0 * (self.mass * self.stiffness).sqrt()
    }

    /// Undamped natural frequency `√(k/m)` of the linear part.
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }
}

/// Phase-space state of a gesture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub v: f64,
}

impl State {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

/// Critical damping coefficient `b = 2·√(m·k)`.
pub fn critical_damping(mass: f64, stiffness: f64) -> Result<f64> {
    if !(mass > 0.0) || !(stiffness > 0.0) {
        return Err(param_err(format!(
            "critical damping needs positive mass and stiffness, got m = {mass}, k = {stiffness}"
        )));
    }
    Ok(2.0 * (mass * stiffness).sqrt())
}

/// Acceleration of the cubic model.
pub fn acceleration(
    s: State,
    target: f64,
    stiffness: f64,
    damping: f64,
    d_eff: f64,
    mass: f64,
) -> f64 {
    acceleration_poly(s, target, stiffness, damping, d_eff, mass, 3)
}

/// Acceleration with a polynomial restoring term of arbitrary exponent.
pub fn acceleration_poly(
    s: State,
    target: f64,
    stiffness: f64,
    damping: f64,
    d_eff: f64,
    mass: f64,
    exponent: u32,
) -> f64 {
    let disp = s.x - target;
    (-damping * s.v - stiffness * disp + d_eff * ipow(disp, exponent)) / mass
}

/// Summed restoring force `−k·(x − T) + d'·(x − T)³`.
pub fn restoring_force(x: f64, target: f64, stiffness: f64, d_eff: f64) -> f64 {
    restoring_components(x, target, stiffness, d_eff, 3).total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestoringForce {
    pub linear: f64,
    pub nonlinear: f64,
    pub total: f64,
}

pub fn restoring_components(
    x: f64,
    target: f64,
    stiffness: f64,
    d_eff: f64,
    exponent: u32,
) -> RestoringForce {
    let disp = x - target;
    let linear = -stiffness * disp;
    let nonlinear = d_eff * ipow(disp, exponent);
    RestoringForce {
        linear,
        nonlinear,
        total: linear + nonlinear,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub x: f64,
    pub force: RestoringForce,
}

/// Samples the restoring force components on a uniform grid over
/// `[x_min, x_max]`. The effective coefficient is derived from the
/// gesture's scaling law with initial position `x0`.
pub fn force_profile(
    params: &GestureParams,
    x0: f64,
    x_min: f64,
    x_max: f64,
    n_points: usize,
) -> Result<Vec<ForceSample>> {
    if !(x_min < x_max) {
        return Err(param_err(format!(
            "force range must satisfy x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if n_points < 2 {
        return Err(param_err("force profile needs at least 2 points"));
    }
    params.validate()?;
    let coeff = scaling::effective_coefficient(params, x0)?;
    let step = (x_max - x_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let x = if i == n_points - 1 {
                x_max
            } else {
                x_min + i as f64 * step
            };
            ForceSample {
                x,
                force: restoring_components(
                    x,
                    params.target,
                    params.stiffness,
                    coeff.value,
                    params.exponent,
                ),
            }
        })
        .collect())
}

fn ipow(x: f64, n: u32) -> f64 {
    match n {
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(n as i32),
    }
}
