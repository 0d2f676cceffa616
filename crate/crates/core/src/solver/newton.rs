//! Damped Newton iteration on the Euler-Lagrange residual with restarted
//! GMRES inner solves.
//!
//! The field space is treated as a real vector space (the residual is only
//! real-linear in the field), with the real part of the coefficient inner
//! product. GMRES is right-preconditioned by the exact inverse of the linear
//! part `D − a − M̄`, `M̄` the mean potential, which is diagonal in every
//! mode's eigenbasis.

use crate::error::{Error, Result};
use crate::field::{NormKind, SpinorField};
use crate::functional::ActionFunctional;

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Target for `‖r‖_{E*}`.
    pub tol: f64,
    pub max_iter: usize,
    /// Smoothing of the power law used only for the Jacobian.
    pub smoothing: f64,
    pub restart: usize,
    pub max_linear: usize,
    pub linear_rtol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-12,
            max_iter: 40,
            smoothing: 1e-6,
            restart: 40,
            max_linear: 400,
            linear_rtol: 1e-10,
        }
    }
}

/// Below this L² norm a converged field counts as the trivial solution.
pub const TRIVIAL_NORM: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub field: SpinorField,
    pub residual_dual: f64,
    /// Accepted Newton steps.
    pub iterations: usize,
    pub linear_iterations: usize,
    /// `‖r‖_{E*}` before every step and after the last.
    pub history: Vec<f64>,
}

pub(crate) struct GmresResult {
    pub solution: SpinorField,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES for `A x = b` from `x = 0`.
pub(crate) fn gmres(
    apply: &mut dyn FnMut(&SpinorField) -> Result<SpinorField>,
    b: &SpinorField,
    restart: usize,
    max_iter: usize,
    rtol: f64,
) -> Result<GmresResult> {
    let b_norm = b.coeff_dot(b).sqrt();
    let mut x = SpinorField::zeros(b.len());
    if b_norm == 0.0 {
        return Ok(GmresResult {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x)?;
        let r = b.clone() - &ax;
        let beta = r.coeff_dot(&r).sqrt();
        rel = beta / b_norm;
        if rel <= rtol {
            break;
        }
        let mut basis = vec![r.scaled(1.0 / beta)];
        // Hessenberg columns, rotated in place.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut steps = 0;
        for j in 0..restart {
            if total >= max_iter {
                break;
            }
            let mut w = apply(&basis[j])?;
            total += 1;
            let mut col = Vec::with_capacity(j + 2);
            // Modified Gram-Schmidt, twice for stability.
            for v in &basis {
                let c = v.coeff_dot(&w);
                w.axpy(-c, v);
                col.push(c);
            }
            for (i, v) in basis.iter().enumerate() {
                let c = v.coeff_dot(&w);
                w.axpy(-c, v);
                col[i] += c;
            }
            let hn = w.coeff_dot(&w).sqrt();
            col.push(hn);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let d = a.hypot(bb);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (a / d, bb / d) };
            col[j] = d;
            col[j + 1] = 0.0;
            cs.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            steps = j + 1;
            rel = g[j + 1].abs() / b_norm;
            if rel <= rtol || hn == 0.0 {
                break;
            }
            basis.push(w.scaled(1.0 / hn));
        }
        // Back substitution on the triangular factor.
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[k][i] * y[k];
            }
            if h[i][i] == 0.0 {
                return Err(Error::LinearizationBreakdown("singular Krylov projection".into()));
            }
            y[i] = acc / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.axpy(*yi, v);
        }
        if rel <= rtol {
            break;
        }
    }
    Ok(GmresResult {
        solution: x,
        iterations: total,
        relative_residual: rel,
    })
}

/// Damped Newton from `start` until `‖r‖_{E*} < tol`.
pub fn newton_refine(
    functional: &ActionFunctional<'_>,
    start: &SpinorField,
    config: &NewtonConfig,
) -> Result<NewtonOutcome> {
    let space = functional.space();
    space.validate(start)?;
    let shift = functional.params().frequency
        + functional
            .potential()
            .map_or(0.0, |m| m.iter().sum::<f64>() / m.len() as f64);
    let precondition = |v: &SpinorField| space.apply_spectral(v, |l| 1.0 / (l - shift));

    let mut field = start.clone();
    let mut residual = functional.residual(&field);
    let mut norm = space.dual_norm(&residual);
    let mut history = vec![norm];
    let mut linear_iterations = 0;
    let mut iterations = 0;
    while !(norm < config.tol) {
        if !norm.is_finite() {
            return Err(Error::LinearizationBreakdown("residual is not finite".into()));
        }
        if iterations >= config.max_iter {
            return Err(Error::MaxIterations {
                what: "newton",
                iterations,
                residual: norm,
            });
        }
        let lin = functional.linearize(&field, config.smoothing);
        let mut op = |v: &SpinorField| {
            lin.apply(&precondition(v)).map_err(|e| {
                Error::LinearizationBreakdown(format!("{e}; a positive newton_smoothing avoids this"))
            })
        };
        let rhs = -residual.clone();
        let solve = gmres(&mut op, &rhs, config.restart, config.max_linear, config.linear_rtol)?;
        linear_iterations += solve.iterations;
        let step = precondition(&solve.solution);

        let mut t = 1.0;
        loop {
            let mut trial = field.clone();
            trial.axpy(t, &step);
            let r = functional.residual(&trial);
            let n = space.dual_norm(&r);
            if n <= (1.0 - 1e-4 * t) * norm {
                field = trial;
                residual = r;
                norm = n;
                break;
            }
            t *= 0.5;
            if t < 1.0 / 1024.0 {
                return Err(Error::LinearizationBreakdown(format!(
                    "line search could not reduce the residual {norm:e} (linear solve reached {:e})",
                    solve.relative_residual
                )));
            }
        }
        iterations += 1;
        history.push(norm);
    }
    let l2 = space.norm(&field, NormKind::L2);
    if l2 < TRIVIAL_NORM {
        return Err(Error::TrivialSolution { norm: l2 });
    }
    Ok(NewtonOutcome {
        field,
        residual_dual: norm,
        iterations,
        linear_iterations,
        history,
    })
}
