//! Seeded Nelder–Mead simplex search with restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    /// Stop when the simplex spread of objective values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    /// Additional runs started from the incumbent with a rotated simplex.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            max_evals: 4000,
            f_tol: 1e-14,
            x_tol: 1e-10,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

/// Minimizes `f` from `x0`. Non-finite objective values count as `+inf`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best = Minimum {
        x: x0.to_vec(),
        f: eval(x0),
        evals: 1,
        iterations: 0,
        trace: Vec::new(),
    };
    if n == 0 {
        return best;
    }
    for run in 0..=opts.restarts {
        // First run: axis-aligned simplex; restarts: random signs and scales.
        let mut simplex: Vec<Vec<f64>> = vec![best.x.clone()];
        for i in 0..n {
            let mut v = best.x.clone();
            let step = if run == 0 {
                opts.initial_step
            } else {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * opts.initial_step * rng.random_range(0.25..1.0)
            };
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
        let mut evals = n + 1;
        loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            best.iterations += 1;
            best.trace.push(values[0].min(best.f));

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if evals >= opts.max_evals || (spread.abs() <= opts.f_tol && diameter <= opts.x_tol) {
                break;
            }
            if diameter <= opts.x_tol * 1e-3 {
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr);
            evals += 1;
            if fr < values[0] {
                let xe = along(-2.0);
                let fe = eval(&xe);
                evals += 1;
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let x = along(-0.5);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = eval(&x);
                    (x, v)
                };
                evals += 1;
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    for i in 1..=n {
                        let shrunk: Vec<f64> = simplex[i]
                            .iter()
                            .zip(&simplex[0])
                            .map(|(x, b)| b + 0.5 * (x - b))
                            .collect();
                        values[i] = eval(&shrunk);
                        simplex[i] = shrunk;
                    }
                    evals += n;
                }
            }
        }
        best.evals += evals;
        let k = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        if values[k] <= best.f {
            best.f = values[k];
            best.x = simplex[k].clone();
        }
        log::debug!("Nelder-Mead run {run}: f = {:.6e} after {evals} evaluations", best.f);
    }
    best
}
