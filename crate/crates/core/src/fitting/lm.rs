//! Bounded Levenberg–Marquardt with diagonal scaling and an active set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) trait LeastSquares {
    fn n_residuals(&self) -> usize;
    fn residuals(&self, x: &DVector<f64>, out: &mut DVector<f64>);
    fn jacobian(&self, x: &DVector<f64>, out: &mut DMatrix<f64>);
}

pub(crate) struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    fn project(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }
}

pub(crate) struct Outcome {
    pub x: DVector<f64>,
    /// ½‖r‖² at `x` and at the starting point.
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// JᵀJ at `x`.
    pub normal: DMatrix<f64>,
}

/// Per-residual cost below which the fit is exact to rounding.
const EXACT: f64 = 1e-30;
const ROUNDING: f64 = 1e-12;
const POLISHED: f64 = 1e-22;
/// Consecutive rounding-level steps after which a flat valley counts as converged.
const MAX_ROUNDING_STEPS: usize = 10;
const XTOL: f64 = 1e-14;
const GTOL: f64 = 1e-15;

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Largest cosine between the residual and a free Jacobian column.
fn scaled_gradient(a: &DMatrix<f64>, g: &DVector<f64>, cost: f64, active: &[bool]) -> f64 {
    let rn = (2.0 * cost).sqrt();
    if rn == 0.0 {
        return 0.0;
    }
    (0..g.len())
        .filter(|&i| !active[i] && a[(i, i)] > 0.0)
        .map(|i| g[i].abs() / (a[(i, i)].sqrt() * rn))
        .fold(0.0, f64::max)
}

/// Never returns a point worse than the (projected) start.
pub(crate) fn minimize(problem: &impl LeastSquares, x0: DVector<f64>, bounds: &Bounds, max_iterations: usize) -> Result<Outcome> {
    let mut start = x0.clone();
    bounds.project(&mut start);
    let out = descend(problem, x0, bounds, max_iterations)?;
    if out.cost <= out.initial_cost {
        return Ok(out);
    }
    // rounding-level polishing drifted above an already optimal start
    let mut jac = DMatrix::zeros(problem.n_residuals(), start.len());
    problem.jacobian(&start, &mut jac);
    Ok(Outcome { x: start, cost: out.initial_cost, normal: jac.transpose() * &jac, ..out })
}

fn descend(problem: &impl LeastSquares, x0: DVector<f64>, bounds: &Bounds, max_iterations: usize) -> Result<Outcome> {
    let n = x0.len();
    let m = problem.n_residuals();
    let mut x = x0;
    bounds.project(&mut x);
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, n);
    problem.residuals(&x, &mut r);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Fit("residuals are not finite at the starting point".into()));
    }
    let initial_cost = cost;
    problem.jacobian(&x, &mut jac);
    let mut a = jac.transpose() * &jac;
    let mut g = jac.transpose() * &r;
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut trial = DVector::zeros(m);
    let mut rounding_steps = 0;

    for iteration in 1..=max_iterations {
        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0))
            .collect();
        if cost <= EXACT * m as f64 || scaled_gradient(&a, &g, cost, &active) <= GTOL {
            return Ok(Outcome { x, cost, initial_cost, iterations: iteration - 1, converged: true, normal: a });
        }
        let floor = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max) * 1e-14 + f64::MIN_POSITIVE;

        // Inner loop: raise damping until a step lowers the cost.
        loop {
            let mut lhs = a.clone();
            let mut rhs = -&g;
            for i in 0..n {
                if active[i] {
                    lhs.row_mut(i).fill(0.0);
                    lhs.column_mut(i).fill(0.0);
                    lhs[(i, i)] = 1.0;
                    rhs[i] = 0.0;
                } else {
                    lhs[(i, i)] += lambda * a[(i, i)].max(floor);
                }
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e32 {
                        return Ok(Outcome { x, cost, initial_cost, iterations: iteration, converged: false, normal: a });
                    }
                    continue;
                }
            };
            let mut x_new = &x + &step;
            bounds.project(&mut x_new);
            let taken = &x_new - &x;
            problem.residuals(&x_new, &mut trial);
            let new_cost = cost_of(&trial);
            // predicted reduction of the linear model along the projected step
            let jd = &jac * &taken;
            let predicted = -(g.dot(&taken) + 0.5 * jd.norm_squared());
            // difference of squares, resolved below the rounding of either cost
            let actual = 0.5 * (&r - &trial).dot(&(&r + &trial));
            let small_step = (0..n).all(|i| taken[i].abs() <= XTOL * (x[i].abs() + XTOL));

            // Near the minimum cost changes drown in rounding; the linear model
            // is then exact enough to steer the last digits.
            let polishing = predicted > 0.0 && predicted <= ROUNDING * cost && actual.abs() <= ROUNDING * cost;
            if new_cost.is_finite() && (actual > 0.0 || polishing) {
                let rho = if predicted > 0.0 && !polishing { actual / predicted } else { 1.0 };
                rounding_steps = if polishing { rounding_steps + 1 } else { 0 };
                let converged = small_step
                    || (polishing && (predicted <= POLISHED * cost || actual == 0.0 || rounding_steps >= MAX_ROUNDING_STEPS));
                x = x_new;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                problem.jacobian(&x, &mut jac);
                a = jac.transpose() * &jac;
                g = jac.transpose() * &r;
                lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                if converged {
                    return Ok(Outcome { x, cost, initial_cost, iterations: iteration, converged: true, normal: a });
                }
                break;
            }
            if small_step || lambda > 1e32 {
                // No representable step lowers the cost: a numerical minimum.
                let converged = small_step || scaled_gradient(&a, &g, cost, &active) <= 1e-6;
                return Ok(Outcome { x, cost, initial_cost, iterations: iteration, converged, normal: a });
            }
            lambda *= nu;
            nu *= 2.0;
        }
    }
    Err(Error::NoConvergence(format!("least squares exceeded {max_iterations} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as residuals (10(y − x²), 1 − x).
    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn n_residuals(&self) -> usize {
            2
        }
        fn residuals(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
            out[0] = 10.0 * (x[1] - x[0] * x[0]);
            out[1] = 1.0 - x[0];
        }
        fn jacobian(&self, x: &DVector<f64>, out: &mut DMatrix<f64>) {
            out[(0, 0)] = -20.0 * x[0];
            out[(0, 1)] = 10.0;
            out[(1, 0)] = -1.0;
            out[(1, 1)] = 0.0;
        }
    }

    fn open(n: usize) -> Bounds {
        Bounds { lower: DVector::from_element(n, f64::NEG_INFINITY), upper: DVector::from_element(n, f64::INFINITY) }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &open(2), 200).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-10 && (out.x[1] - 1.0).abs() < 1e-10);
        assert!(out.cost <= out.initial_cost);
    }

    #[test]
    fn respects_bounds() {
        // constrained minimum sits on x = 0.5
        let bounds = Bounds { lower: DVector::from_vec(vec![-2.0, -2.0]), upper: DVector::from_vec(vec![0.5, 2.0]) };
        let out = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &bounds, 200).unwrap();
        assert_eq!(out.x[0], 0.5);
        assert!((out.x[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let err = minimize(&Rosenbrock, DVector::from_vec(vec![-1.2, 1.0]), &open(2), 2);
        assert!(matches!(err, Err(Error::NoConvergence(_))));
    }
}
