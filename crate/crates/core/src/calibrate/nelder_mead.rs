//! Plain Nelder–Mead simplex minimizer.

#[derive(Clone, Debug)]
pub(crate) struct SimplexOptions {
    pub max_iters: usize,
    /// Converged once the spread of function values is at most `f_tol` and
    /// every vertex lies within `x_tol` (∞-norm) of the best one.
    pub f_tol: f64,
    pub x_tol: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of edge `steps[i]`.
///
/// The best vertex never gets worse, so the result is at most `f(x0)`.
pub(crate) fn minimize<F>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if d == 0 {
        let fx = eval(x0, &mut evaluations);
        return SimplexResult {
            x: Vec::new(),
            f: fx,
            evaluations,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x, &mut evaluations);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];
    while iterations < opts.max_iters {
        // stable sort keeps the earlier vertex first on ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if (worst - best).abs() <= opts.f_tol {
            let spread = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread <= opts.x_tol {
                break;
            }
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let along = |coef: f64, out: &mut Vec<f64>, worst_x: &[f64], centroid: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(centroid).zip(worst_x) {
                *o = c + coef * (c - w);
            }
        };

        along(REFLECT, &mut trial, &simplex[d].0, &centroid);
        let f_reflect = eval(&trial, &mut evaluations);
        if f_reflect < simplex[0].1 {
            let reflected = trial.clone();
            along(EXPAND, &mut trial, &simplex[d].0, &centroid);
            let f_expand = eval(&trial, &mut evaluations);
            simplex[d] = if f_expand < f_reflect {
                (trial.clone(), f_expand)
            } else {
                (reflected, f_reflect)
            };
            continue;
        }
        if f_reflect < simplex[d - 1].1 {
            simplex[d] = (trial.clone(), f_reflect);
            continue;
        }
        let (coef, bar) = if f_reflect < simplex[d].1 {
            (CONTRACT, f_reflect)
        } else {
            (-CONTRACT, simplex[d].1)
        };
        along(coef, &mut trial, &simplex[d].0, &centroid);
        let f_contract = eval(&trial, &mut evaluations);
        if f_contract < bar {
            simplex[d] = (trial.clone(), f_contract);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, a) in x.iter_mut().zip(&anchor) {
                *xi = a + SHRINK * (*xi - a);
            }
            *fx = eval(x, &mut evaluations);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult { x, f, evaluations }
}
