//! Local least-squares search over rotation angles.
//!
//! The residual vector must be a first-degree trigonometric polynomial in
//! every single parameter, `r(θ) = a + b cos θ + c sin θ`. This holds for the
//! Choi matrix of a circuit in which each angle feeds one rotation gate. Two
//! consequences make the search cheap and exact:
//!
//! * the cost `‖r‖²` restricted to one coordinate is a degree-2 trigonometric
//!   polynomial, fixed by five samples and minimized in closed form;
//! * `∂r/∂θ = (r(θ + π/2) − r(θ − π/2)) / 2` exactly, which gives the
//!   Jacobian for Levenberg–Marquardt steps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Coordinate sweeps before the Levenberg–Marquardt phase.
    pub sweeps: usize,
    /// Cap on Levenberg–Marquardt iterations.
    pub max_iters: usize,
    /// Stop once the cost `‖r‖²` falls below this.
    pub target_cost: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { sweeps: 2, max_iters: 200, target_cost: 1e-20 }
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Coefficients `[a0, a1, b1, a2, b2]` of the degree-2 trigonometric
/// polynomial through five equally spaced samples `f(2πk/5)`.
fn trig_fit(samples: &[f64; 5]) -> [f64; 5] {
    let mut c = [0.0; 5];
    for (k, &f) in samples.iter().enumerate() {
        let phi = 2.0 * PI * k as f64 / 5.0;
        c[0] += f / 5.0;
        c[1] += 0.4 * f * phi.cos();
        c[2] += 0.4 * f * phi.sin();
        c[3] += 0.4 * f * (2.0 * phi).cos();
        c[4] += 0.4 * f * (2.0 * phi).sin();
    }
    c
}

fn trig_eval(c: &[f64; 5], x: f64) -> f64 {
    c[0] + c[1] * x.cos() + c[2] * x.sin() + c[3] * (2.0 * x).cos() + c[4] * (2.0 * x).sin()
}

/// Global minimizer of a degree-2 trigonometric polynomial: grid scan
/// followed by Newton refinement.
fn trig_argmin(c: &[f64; 5]) -> f64 {
    const GRID: usize = 64;
    let mut best = (0.0, trig_eval(c, 0.0));
    for i in 1..GRID {
        let x = 2.0 * PI * i as f64 / GRID as f64;
        let v = trig_eval(c, x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let mut x = best.0;
    for _ in 0..8 {
        let d1 = -c[1] * x.sin() + c[2] * x.cos() - 2.0 * c[3] * (2.0 * x).sin() + 2.0 * c[4] * (2.0 * x).cos();
        let d2 = -c[1] * x.cos() - c[2] * x.sin() - 4.0 * c[3] * (2.0 * x).cos() - 4.0 * c[4] * (2.0 * x).sin();
        if d2 <= 0.0 {
            break;
        }
        let step = d1 / d2;
        let next = x - step;
        if trig_eval(c, next) > trig_eval(c, x) {
            break;
        }
        x = next;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}

/// One pass of exact coordinate minimization over `free`.
fn coordinate_sweep<F>(f: &F, x: &mut [f64], free: &[usize], current: &mut f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    for &i in free {
        let x0 = x[i];
        let mut samples = [*current, 0.0, 0.0, 0.0, 0.0];
        for (k, s) in samples.iter_mut().enumerate().skip(1) {
            x[i] = x0 + 2.0 * PI * k as f64 / 5.0;
            *s = cost(&f(x));
        }
        let shift = trig_argmin(&trig_fit(&samples));
        x[i] = x0 + shift;
        let c = cost(&f(x));
        if c <= *current {
            *current = c;
        } else {
            x[i] = x0;
        }
    }
}

fn jacobian<F>(f: &F, x: &mut [f64], free: &[usize], rows: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = DMatrix::zeros(rows, free.len());
    for (col, &i) in free.iter().enumerate() {
        let x0 = x[i];
        x[i] = x0 + PI / 2.0;
        let plus = f(x);
        x[i] = x0 - PI / 2.0;
        let minus = f(x);
        x[i] = x0;
        for r in 0..rows {
            jac[(r, col)] = 0.5 * (plus[r] - minus[r]);
        }
    }
    jac
}

/// Minimizes `‖f(x)‖²` over the coordinates listed in `free`, starting at
/// `x`. Returns the final point and its cost.
pub fn minimize<F>(f: &F, mut x: Vec<f64>, free: &[usize], opts: &SearchOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut r = f(&x);
    let mut current = cost(&r);
    for _ in 0..opts.sweeps {
        if current < opts.target_cost {
            return (x, current);
        }
        coordinate_sweep(f, &mut x, free, &mut current);
    }
    if free.is_empty() {
        return (x, current);
    }
    r = f(&x);
    let mut lambda = 1e-3;
    let mut stalls = 0;
    for _ in 0..opts.max_iters {
        if current < opts.target_cost {
            break;
        }
        let jac = jacobian(f, &mut x, free, r.len());
        let jt = jac.transpose();
        let h = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = h.clone();
            for d in 0..free.len() {
                damped[(d, d)] += lambda * (h[(d, d)] + 1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial = x.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += step[k];
            }
            let tr = f(&trial);
            let tc = cost(&tr);
            if tc < current {
                stalls = if current - tc < 1e-9 * current { stalls + 1 } else { 0 };
                x = trial;
                r = tr;
                current = tc;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted || stalls >= 5 {
            break;
        }
    }
    (x, current)
}
