//! Kinematic landmarks of a single movement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Trajectory;

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.1;
pub const DEFAULT_SETTLE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t_pv: f64,
    pub pv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSummary {
    pub pv: f64,
    pub t_pv: f64,
    pub t_onset: f64,
    pub t_offset: f64,
    /// `None` when the movement does not settle within the simulated span.
    pub settle: Option<f64>,
    pub symmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    Settled(f64),
    NotSettled,
}

impl Settling {
    pub fn time(self) -> Option<f64> {
        match self {
            Settling::Settled(t) => Some(t),
            Settling::NotSettled => None,
        }
    }
}

fn check_usable(traj: &Trajectory) -> Result<()> {
    if traj.status.is_diverged() {
        return Err(Error::DivergedTrajectory);
    }
    if traj.len() < 3 {
        return Err(Error::TooFewSamples(traj.len()));
    }
    Ok(())
}

/// Peak speed and its time, refined by a parabola through the three samples
/// around the discrete maximum of |v|.
pub fn peak_velocity(traj: &Trajectory) -> Result<Peak> {
    check_usable(traj)?;
    let (i, vmax) = traj
        .v
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .fold((0, 0.0), |best, (i, s)| if s > best.1 { (i, s) } else { best });
    if vmax == 0.0 {
        return Ok(Peak { t_pv: 0.0, pv: 0.0 });
    }
    if i == 0 || i == traj.len() - 1 {
        return Ok(Peak {
            t_pv: traj.t[i],
            pv: vmax,
        });
    }
    let (y0, y1, y2) = (traj.v[i - 1].abs(), vmax, traj.v[i + 1].abs());
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature >= 0.0 {
        return Ok(Peak {
            t_pv: traj.t[i],
            pv: vmax,
        });
    }
    let delta = (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5);
    let h = 0.5 * (traj.t[i + 1] - traj.t[i - 1]);
    Ok(Peak {
        t_pv: traj.t[i] + delta * h,
        pv: y1 - 0.25 * (y0 - y2) * delta,
    })
}

/// First upward and last downward crossing of `frac·pv` by |v|.
pub fn movement_window(traj: &Trajectory, frac: f64) -> Result<(f64, f64)> {
    let peak = peak_velocity(traj)?;
    window_for_peak(traj, frac, peak.pv)
}

fn window_for_peak(traj: &Trajectory, frac: f64, pv: f64) -> Result<(f64, f64)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Parameter(format!(
            "window fraction must lie in (0, 1), got {frac}"
        )));
    }
    if !(pv > 0.0) {
        return Err(Error::DegenerateWindow);
    }
    let thr = frac * pv;
    let speed = |i: usize| traj.v[i].abs();
    let n = traj.len();
    let first = (0..n).find(|&i| speed(i) >= thr).ok_or(Error::DegenerateWindow)?;
    let last = (0..n).rev().find(|&i| speed(i) >= thr).ok_or(Error::DegenerateWindow)?;

    let cross = |a: usize, b: usize| {
        let (sa, sb) = (speed(a), speed(b));
        let w = if sb != sa { (thr - sa) / (sb - sa) } else { 0.0 };
        traj.t[a] + w.clamp(0.0, 1.0) * (traj.t[b] - traj.t[a])
    };
    let onset = if first == 0 { traj.t[0] } else { cross(first - 1, first) };
    let offset = if last == n - 1 { traj.t[n - 1] } else { cross(last, last + 1) };
    Ok((onset, offset))
}

/// Grid time after which every later sample stays within `eps·|x0 − T|`
/// of the target.
pub fn settling_duration(traj: &Trajectory, eps: f64) -> Result<Settling> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!(
            "settling fraction must lie in (0, 1), got {eps}"
        )));
    }
    if traj.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let target = traj.target;
    let tol = eps * (traj.x[0] - target).abs();
    match traj.x.iter().rposition(|x| (x - target).abs() > tol) {
        None => Ok(Settling::Settled(traj.t[0])),
        Some(j) if j + 1 == traj.len() => Ok(Settling::NotSettled),
        Some(j) => Ok(Settling::Settled(traj.t[j])),
    }
}

pub fn symmetry_ratio(t_pv: f64, onset: f64, offset: f64) -> f64 {
    if offset > onset {
        ((t_pv - onset) / (offset - onset)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// All landmarks with default thresholds (10% window, 1% settling band).
pub fn summarize(traj: &Trajectory) -> Result<KinematicSummary> {
    summarize_with(traj, DEFAULT_WINDOW_FRACTION, DEFAULT_SETTLE_FRACTION)
}

pub fn summarize_with(traj: &Trajectory, frac: f64, eps: f64) -> Result<KinematicSummary> {
    let peak = peak_velocity(traj)?;
    let settle = settling_duration(traj, eps)?.time();
    if peak.pv == 0.0 {
        return Ok(KinematicSummary {
            pv: 0.0,
            t_pv: 0.0,
            t_onset: 0.0,
            t_offset: 0.0,
            settle,
            symmetry: 0.0,
        });
    }
    let (t_onset, t_offset) = window_for_peak(traj, frac, peak.pv)?;
    let t_pv = peak.t_pv.clamp(t_onset, t_offset);
    Ok(KinematicSummary {
        pv: peak.pv,
        t_pv,
        t_onset,
        t_offset,
        settle,
        symmetry: symmetry_ratio(t_pv, t_onset, t_offset),
    })
}
