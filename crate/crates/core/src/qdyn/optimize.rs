use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Initial simplex edge per parameter; `None` uses 10% of the bound width.
    pub initial_step: Option<Vec<f64>>,
    /// Stop once the simplex spread in objective value falls below this.
    pub f_tol: f64,
    /// Stop once every simplex edge is shorter than this (per parameter, absolute).
    pub x_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { budget: 500, initial_step: None, f_tol: 1e-12, x_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub params: Vec<f64>,
    pub value: f64,
    /// Best objective value after each evaluation (non-increasing).
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// False when no evaluation beat the starting point.
    pub improved: bool,
}

/// Minimize `objective` by Nelder-Mead with every trial point clipped into
/// `bounds`.
pub fn optimize_pulse<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    start: &[f64],
    bounds: &[(f64, f64)],
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    let n = start.len();
    if n == 0 || bounds.len() != n {
        return Err(Error::InvalidParameter("start and bounds must have the same non-zero length".into()));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo <= hi)) {
        return Err(Error::InvalidParameter("each bound needs lo ≤ hi".into()));
    }
    let clip = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut eval = |x: &[f64], trace: &mut Vec<f64>| {
        let v = objective(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        best = best.min(v);
        trace.push(best);
        v
    };

    let mut x0 = start.to_vec();
    clip(&mut x0);
    let f0 = eval(&x0, &mut trace);
    let mut simplex = vec![(x0.clone(), f0)];
    for i in 0..n {
        let step = match &opts.initial_step {
            Some(s) => s[i],
            None => 0.1 * (bounds[i].1 - bounds[i].0),
        };
        let mut x = x0.clone();
        x[i] += step;
        if x[i] > bounds[i].1 {
            x[i] = x0[i] - step;
        }
        clip(&mut x);
        let f = eval(&x, &mut trace);
        simplex.push((x, f));
    }

    while trace.len() < opts.budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread_f = simplex[n].1 - simplex[0].1;
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_f.abs() <= opts.f_tol && spread_x <= opts.x_tol.max(f64::EPSILON) || spread_x == 0.0 {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let towards = |coef: f64, worst: &[f64]| {
            let mut x: Vec<f64> = (0..n).map(|j| centroid[j] + coef * (worst[j] - centroid[j])).collect();
            clip(&mut x);
            x
        };
        let worst = simplex[n].0.clone();
        let xr = towards(-1.0, &worst);
        let fr = eval(&xr, &mut trace);
        if fr < simplex[0].1 {
            let xe = towards(-2.0, &worst);
            let fe = eval(&xe, &mut trace);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = towards(-0.5, &worst);
                let f = eval(&x, &mut trace);
                (x, f)
            } else {
                let x = towards(0.5, &worst);
                let f = eval(&x, &mut trace);
                (x, f)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, f) in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        x[j] = x_best[j] + 0.5 * (x[j] - x_best[j]);
                    }
                    *f = eval(x, &mut trace);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (params, value) = simplex.swap_remove(0);
    let improved = value < f0;
    Ok(OptimizeResult {
        params: if improved { params } else { x0 },
        value: if improved { value } else { f0 },
        evaluations: trace.len(),
        trace,
        improved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r =
            optimize_pulse(|p| (p[0] - 3.0).powi(2), &[0.0], &[(-10.0, 10.0)], &OptimizeOptions::default()).unwrap();
        assert!((r.params[0] - 3.0).abs() < 1e-4, "{:?}", r.params);
        assert!(r.improved);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn start_at_optimum_stays_put() {
        let r = optimize_pulse(
            |p| (p[0] - 1.0).powi(2) + 2.0 * (p[1] + 2.0).powi(2),
            &[1.0, -2.0],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            &OptimizeOptions::default(),
        )
        .unwrap();
        assert!((r.params[0] - 1.0).abs() < 1e-6 && (r.params[1] + 2.0).abs() < 1e-6);
        assert!(!r.improved);
    }

    #[test]
    fn respects_bounds_and_budget() {
        let opts = OptimizeOptions { budget: 40, ..Default::default() };
        let r = optimize_pulse(|p| -(p[0] + p[1]), &[0.0, 0.0], &[(-1.0, 2.0), (0.0, 0.5)], &opts).unwrap();
        assert!(r.params[0] <= 2.0 && r.params[1] <= 0.5);
        assert!(r.evaluations <= 40 + 3);
    }

    #[test]
    fn rosenbrock_converges() {
        let f = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let opts = OptimizeOptions { budget: 2000, ..Default::default() };
        let r = optimize_pulse(f, &[-1.2, 1.0], &[(-5.0, 5.0), (-5.0, 5.0)], &opts).unwrap();
        assert!(r.value < 1e-8, "{r:?}");
    }
}
