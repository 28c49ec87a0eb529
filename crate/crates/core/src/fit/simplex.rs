//! Nelder–Mead downhill simplex with the standard coefficients
//! (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

/// Outcome of one minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial edge length along each coordinate.
    pub step: f64,
    /// Stop once the largest vertex distance from the best vertex falls below.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            tolerance: 1e-9,
            max_evaluations: 20_000,
        }
    }
}

/// Minimizes `f` from `x0`. Non-finite objective values count as `+∞`,
/// which lets callers express box constraints by returning `NaN` or `∞`.
pub fn minimize<F>(f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if n == 0 {
        let fx = eval(x0);
        return SimplexResult {
            x: Vec::new(),
            fx,
            evaluations: 1,
            iterations: 0,
            converged: true,
            history: vec![fx],
        };
    }

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        // order: best first, ties keep the earlier vertex
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        history.push(vals[0]);

        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.tolerance {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evaluations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            vals[i] = eval(&p);
            pts[i] = p;
        }
    }

    SimplexResult {
        x: pts[0].clone(),
        fx: vals[0],
        evaluations: evals.get(),
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.evaluations <= 20_000);
    }

    #[test]
    fn history_never_increases() {
        let r = minimize(
            |x| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>() + (3.0 * x[0]).sin(),
            &[2.0, -1.0, 0.5],
            SimplexOptions::default(),
        );
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn respects_budget_and_walls() {
        let opts = SimplexOptions {
            max_evaluations: 50,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], opts);
        assert!(!r.converged);
        assert!(r.evaluations <= 50 + 3);

        // minimum outside the wall at x = 1 is not reached
        let w = minimize(
            |x| if x[0] > 1.0 { f64::NAN } else { (x[0] - 3.0).powi(2) },
            &[0.0],
            SimplexOptions::default(),
        );
        assert!(w.x[0] <= 1.0 && w.x[0] > 0.999);
    }

    #[test]
    fn zero_dimensional() {
        let r = minimize(|_| 4.0, &[], SimplexOptions::default());
        assert_eq!(r.fx, 4.0);
        assert!(r.converged);
    }
}
