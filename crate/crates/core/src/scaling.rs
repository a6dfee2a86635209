//! Scaling laws that turn the user-facing ratio `d` into the effective
//! coefficient `d'` applied to the nonlinear restoring term.
//!
//! * proportional: `d' = d·k`
//! * local:        `d' = d·k / |x0 − T|^(n−1)`
//! * global:       `d' = λ·d·k / |x0 − T|^(n−1)`, with `λ = min(1, |x0 − T| / D)`
//!
//! Under local and global scaling with `n = 3` and `0 ≤ d < 1`, the outer
//! zeros of the summed force lie at `T ± |x0 − T| / √(λ·d)`, so the initial
//! displacement always starts inside the basin of attraction.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::model::GestureParams;

/// Distances below this are treated as a gesture starting at its target.
pub const DEGENERATE_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScalingMode {
    Proportional,
    Local,
    /// Local scaling further multiplied by `λ`; `range` is the total possible
    /// movement range `D` of the articulator.
    Global { range: f64 },
}

impl ScalingMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingMode::Proportional => "proportional",
            ScalingMode::Local => "local",
            ScalingMode::Global { .. } => "global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficient {
    pub value: f64,
    pub mode: ScalingMode,
    pub lambda: f64,
}

fn check_stiffness(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(param_err(format!("stiffness must be positive, got {k}")));
    }
    Ok(())
}

fn check_bounded_ratio(d: f64) -> Result<()> {
    if !(0.0..1.0).contains(&d) {
        return Err(param_err(format!(
            "nonlinear ratio must lie in [0, 1), got {d}"
        )));
    }
    Ok(())
}

fn check_exponent(n: u32) -> Result<()> {
    if n < 1 {
        return Err(param_err("exponent must be at least 1"));
    }
    Ok(())
}

pub fn scale_proportional(d: f64, k: f64) -> Result<EffectiveCoefficient> {
    check_stiffness(k)?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(param_err(format!(
            "nonlinear ratio must be non-negative, got {d}"
        )));
    }
    Ok(EffectiveCoefficient {
        value: d * k,
        mode: ScalingMode::Proportional,
        lambda: 1.0,
    })
}

/// `d·k / |x0 − T|^(n−1)`; zero when the distance is degenerate and `n > 1`.
fn normalized(d: f64, k: f64, distance: f64, n: u32) -> f64 {
    if n == 1 {
        return d * k;
    }
    if distance < DEGENERATE_DISTANCE {
        return 0.0;
    }
    d * k / distance.powi(n as i32 - 1)
}

pub fn scale_local(d: f64, k: f64, x0: f64, target: f64, n: u32) -> Result<EffectiveCoefficient> {
    check_stiffness(k)?;
    check_bounded_ratio(d)?;
    check_exponent(n)?;
    Ok(EffectiveCoefficient {
        value: normalized(d, k, (x0 - target).abs(), n),
        mode: ScalingMode::Local,
        lambda: 1.0,
    })
}

/// Total possible movement range `D = |x_max − x_min|`.
pub fn movement_range(x_min: f64, x_max: f64) -> Result<f64> {
    let range = (x_max - x_min).abs();
    if !(range.is_finite() && range > 0.0) {
        return Err(param_err(format!(
            "movement range [{x_min}, {x_max}] has zero width"
        )));
    }
    Ok(range)
}

/// `λ = min(1, |x0 − T| / D)`.
pub fn lambda_factor(x0: f64, target: f64, range: f64) -> Result<f64> {
    if !(range.is_finite() && range > 0.0) {
        return Err(param_err(format!(
            "global movement range must be positive, got {range}"
        )));
    }
    Ok(((x0 - target).abs() / range).min(1.0))
}

pub fn scale_global(
    d: f64,
    k: f64,
    x0: f64,
    target: f64,
    n: u32,
    range: f64,
) -> Result<EffectiveCoefficient> {
    check_stiffness(k)?;
    check_bounded_ratio(d)?;
    check_exponent(n)?;
    let lambda = lambda_factor(x0, target, range)?;
    Ok(EffectiveCoefficient {
        value: lambda * normalized(d, k, (x0 - target).abs(), n),
        mode: ScalingMode::Global { range },
        lambda,
    })
}

/// Effective coefficient for a gesture released from `x0`.
pub fn effective_coefficient(params: &GestureParams, x0: f64) -> Result<EffectiveCoefficient> {
    if !x0.is_finite() {
        return Err(param_err("initial position must be finite"));
    }
    let GestureParams {
        stiffness: k,
        ratio: d,
        exponent: n,
        target,
        ..
    } = *params;
    match params.scaling {
        ScalingMode::Proportional => scale_proportional(d, k),
        ScalingMode::Local => scale_local(d, k, x0, target, n),
        ScalingMode::Global { range } => scale_global(d, k, x0, target, n, range),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn proportional_examples() {
        assert_eq!(scale_proportional(0.95, 2000.0).unwrap().value, 1900.0);
        assert_eq!(scale_proportional(0.0, 123.0).unwrap().value, 0.0);
        assert_eq!(scale_proportional(0.5, 1.0).unwrap().value, 0.5);
        // Unbounded above: the unstable regime must stay reachable.
        assert_eq!(scale_proportional(3.0, 1.0).unwrap().value, 3.0);
        assert!(scale_proportional(-0.1, 1.0).is_err());
        assert!(scale_proportional(0.5, 0.0).is_err());
    }

    #[test]
    fn local_examples() {
        let c = scale_local(0.95, 2000.0, 10.0, 0.0, 3).unwrap();
        assert!((c.value - 19.0).abs() < 1e-12);
        assert_eq!(c.lambda, 1.0);
        assert_eq!(scale_local(0.95, 2000.0, 1.0, 0.0, 3).unwrap().value, 1900.0);
        let lin = scale_local(0.3, 100.0, 7.0, 0.5, 1).unwrap();
        assert!((lin.value - 30.0).abs() < 1e-12);
        assert!(scale_local(1.0, 100.0, 1.0, 0.0, 3).is_err());
        assert!(scale_local(0.5, 100.0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn degenerate_distance_gives_zero() {
        assert_eq!(scale_local(0.9, 2000.0, 0.5, 0.5, 3).unwrap().value, 0.0);
        assert_eq!(scale_local(0.9, 2000.0, 0.5, 0.5 + 1e-13, 3).unwrap().value, 0.0);
        assert_eq!(scale_global(0.9, 2000.0, 0.5, 0.5, 3, 4.0).unwrap().value, 0.0);
        // n = 1 has no distance dependence; λ = 0 still zeroes the global form.
        assert_eq!(scale_local(0.9, 10.0, 0.5, 0.5, 1).unwrap().value, 9.0);
        assert_eq!(scale_global(0.9, 10.0, 0.5, 0.5, 1, 4.0).unwrap().value, 0.0);
    }

    #[test]
    fn movement_range_examples() {
        assert_eq!(movement_range(-2.0, 10.0).unwrap(), 12.0);
        assert_eq!(movement_range(0.0, 10.0).unwrap(), 10.0);
        assert_eq!(movement_range(10.0, 0.0).unwrap(), 10.0);
        assert!(movement_range(3.0, 3.0).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_factor(5.0, 0.0, 10.0).unwrap(), 0.5);
        assert_eq!(lambda_factor(12.0, 0.0, 10.0).unwrap(), 1.0);
        assert_eq!(lambda_factor(10.0, 2.0, 8.0).unwrap(), 1.0);
        assert!(lambda_factor(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn global_examples() {
        let c = scale_global(0.95, 2000.0, 10.0, 0.0, 3, 10.0).unwrap();
        assert_eq!(c.lambda, 1.0);
        assert!((c.value - 19.0).abs() < 1e-12);

        let c = scale_global(0.95, 2000.0, 10.0, 5.0, 3, 10.0).unwrap();
        assert_eq!(c.lambda, 0.5);
        assert!((c.value - 38.0).abs() < 1e-12);

        let c = scale_global(0.95, 2000.0, 10.0, 4.0, 3, 8.0).unwrap();
        assert_eq!(c.lambda, 0.75);
        let composed = lambda_factor(10.0, 4.0, 8.0).unwrap()
            * scale_local(0.95, 2000.0, 10.0, 4.0, 3).unwrap().value;
        assert_eq!(c.value, composed);
        assert!((c.value - 39.583_333_333_333_336).abs() < 1e-9);
    }

    #[test]
    fn effective_coefficient_dispatches_on_mode() {
        let p = GestureParams::new(2000.0, 0.95, 0.0);
        assert_eq!(effective_coefficient(&p, 10.0).unwrap().value, 1900.0);
        let p = p.with_scaling(ScalingMode::Local);
        assert!((effective_coefficient(&p, 10.0).unwrap().value - 19.0).abs() < 1e-12);
        let p = p.with_scaling(ScalingMode::Global { range: 8.0 });
        assert_eq!(effective_coefficient(&p, 4.0).unwrap().lambda, 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn basin_contains_initial_displacement(
            d in 1e-9f64..0.999_999, k in 100.0f64..1e4, dist in 0.01f64..100.0,
            t in -50.0f64..50.0, range in 0.01f64..200.0, global in any::<bool>(),
        ) {
            let x0 = t + dist;
            let c = if global {
                scale_global(d, k, x0, t, 3, range).unwrap()
            } else {
                scale_local(d, k, x0, t, 3).unwrap()
            };
            prop_assert!(c.value > 0.0);
            prop_assert!((k / c.value).sqrt() > (x0 - t).abs());
        }
    }

    proptest! {
        #[test]
        fn global_equals_local_on_boundary(
            d in 0.0f64..0.999, k in 1.0f64..1e4, x0 in -10.0f64..10.0, t in -10.0f64..10.0, n in 1u32..6,
        ) {
            let dist = (x0 - t).abs();
            prop_assume!(dist > 1e-6);
            let g = scale_global(d, k, x0, t, n, dist).unwrap();
            let l = scale_local(d, k, x0, t, n).unwrap();
            prop_assert_eq!(g.value, l.value);
            // Any range at or below the distance clamps λ to 1.
            let g = scale_global(d, k, x0, t, n, 0.5 * dist).unwrap();
            prop_assert_eq!(g.value, l.value);
        }

        #[test]
        fn local_decreases_lambda_increases(
            d in 0.01f64..0.99, k in 1.0f64..1e4, a in 0.01f64..50.0, gap in 0.01f64..50.0,
            n in 2u32..6, range in 0.1f64..100.0,
        ) {
            let b = a + gap;
            let near = scale_local(d, k, a, 0.0, n).unwrap().value;
            let far = scale_local(d, k, b, 0.0, n).unwrap().value;
            prop_assert!(far < near);
            prop_assert!(lambda_factor(b, 0.0, range).unwrap() >= lambda_factor(a, 0.0, range).unwrap());
        }

        #[test]
        fn linear_exponent_ignores_distance(
            d in 0.0f64..0.99, k in 1.0f64..1e4, x0 in -10.0f64..10.0, t in -10.0f64..10.0,
        ) {
            let dist = (x0 - t).abs();
            prop_assume!(dist > 1e-6);
            prop_assert_eq!(scale_local(d, k, x0, t, 1).unwrap().value, d * k);
            prop_assert_eq!(scale_global(d, k, x0, t, 1, dist).unwrap().value, d * k);
        }
    }
}
