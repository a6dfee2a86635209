//! Nelder–Mead downhill simplex over unconstrained coordinates.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when `max f − min f` over the simplex falls below this.
    pub f_tol: f64,
    /// Or when every vertex lies within this distance of the best one
    /// (max-norm).
    pub x_tol: f64,
    /// Fresh simplices built around the best vertex after a converged pass.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            f_tol: 1e-10,
            x_tol: 1e-7,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from an axis-aligned initial simplex: vertex `i + 1` is `x0`
/// with `steps[i]` added to coordinate `i`.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len());
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    let mut iterations = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut converged = false;

    for pass in 0..=opts.restarts {
        let budget = opts.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let (x, fx, used, ok) = run_pass(&mut eval, &start, steps, &opts, budget);
        iterations += used;
        let improved = match &best {
            Some((_, fb)) => fb - fx > opts.f_tol,
            None => true,
        };
        if best.as_ref().is_none_or(|(_, fb)| fx < *fb) {
            best = Some((x.clone(), fx));
        }
        converged = ok;
        // A pass that never left its start point has nothing to re-check.
        if !ok || (pass > 0 && !improved) || x == start {
            break;
        }
        start = x;
    }

    let (x, f) = best.expect("at least one pass runs");
    SimplexResult {
        x,
        f,
        iterations,
        evaluations,
        converged,
    }
}

fn run_pass<E>(
    eval: &mut E,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool)
where
    E: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread < opts.f_tol || diameter < opts.x_tol {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, iterations, true);
        }
        if iterations >= budget {
            let (x, f) = simplex.swap_remove(0);
            return (x, f, iterations, false);
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
        };

        let worst = simplex[n].0.clone();
        let xr = along(REFLECT, &worst);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(REFLECT * EXPAND, &worst);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(REFLECT * CONTRACT, &worst);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT, &worst);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (vi, bi) in v.iter_mut().zip(&best) {
                *vi = bi + SHRINK * (*vi - bi);
            }
            *fv = eval(v);
        }
    }
}
