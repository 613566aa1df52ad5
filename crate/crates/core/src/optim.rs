//! Derivative-free Nelder–Mead minimizer for small parameter vectors.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once every vertex lies within this distance of the best vertex.
    pub diameter_tol: f64,
    pub max_iter: usize,
    /// Initial displacement along each coordinate axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { diameter_tol: 1e-8, max_iter: 500, initial_step: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| v.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn along(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` starting from `x0`. Non-finite objective values are treated
/// as `+∞`, so the simplex backs away from them.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for v in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }

        let reflected = along(&centroid, &simplex[worst], -REFLECT);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(&centroid, &simplex[worst], -EXPAND);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[worst - 1] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }

        let (candidate, fc) = if fr < values[worst] {
            let outside = along(&centroid, &reflected, CONTRACT);
            let fo = eval(&outside);
            (outside, fo)
        } else {
            let inside = along(&centroid, &simplex[worst], CONTRACT);
            let fi = eval(&inside);
            (inside, fi)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = candidate;
            values[worst] = fc;
            continue;
        }

        let best = simplex[0].clone();
        for i in 1..=dim {
            simplex[i] = along(&best, &simplex[i], SHRINK);
            values[i] = eval(&simplex[i]);
        }
    }

    Minimum { x: simplex[0].clone(), value: values[0], iterations, converged }
}
