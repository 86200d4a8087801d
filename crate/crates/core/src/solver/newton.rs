use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::problem::{Epsilon, TodaProblem};
use crate::error::{Error, Result};
use crate::torus::{pairwise_sum, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub residual_max: f64,
    pub residual_l2: f64,
    pub step: f64,
    pub krylov_iterations: usize,
    pub min_mean_v: f64,
}

/// Result of a solve. `u` and `b` are finite at every node because
/// punctures never sit on nodes.
#[derive(Clone, Debug)]
pub struct TodaState {
    pub v: Vec<Field>,
    pub u: Vec<Field>,
    pub b: Vec<Field>,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub status: SolveStatus,
    pub diagnostic: Option<String>,
    pub history: Vec<IterationLog>,
}

impl TodaState {
    /// Wrap given regular parts as a state, e.g. fields read back from disk
    /// or synthetic test data. The status reflects the residual only.
    pub fn evaluate(problem: &TodaProblem, v: Vec<Field>) -> Result<TodaState> {
        let r = problem.residual(&v)?;
        let (r_max, _) = norms(&r, problem.domain().cell_area());
        let status = if r_max <= problem.options().tol {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIter
        };
        Ok(finish(problem, v, r_max, 0, status, None, Vec::new()))
    }

    pub fn mean_v(&self) -> Vec<f64> {
        self.v.iter().map(Field::mean).collect()
    }
}

fn norms(r: &[Field], cell: f64) -> (f64, f64) {
    let max = r.iter().map(Field::max_abs).fold(0.0, f64::max);
    let sq: Vec<f64> = r.iter().map(|f| f.dot(f)).collect();
    (max, (pairwise_sum(&sq) * cell).sqrt())
}

fn dot_all(a: &[Field], b: &[Field]) -> f64 {
    let parts: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.dot(y)).collect();
    pairwise_sum(&parts)
}

/// SPD form of the Newton system, `M = −A⁻¹J = −¼A⁻¹Δ + diag(e^{2φ}W)`,
/// with the mode-wise preconditioner `(|k|²/4)A⁻¹ + σ`.
struct Newtonian<'a> {
    problem: &'a TodaProblem,
    a_inv: Vec<Vec<f64>>,
    diag: Vec<Field>,
    sigma: f64,
    // eigenbasis of the Cartan matrix (sine vectors) and eigenvalues of A⁻¹
    basis: Vec<Vec<f64>>,
    inv_eigs: Vec<f64>,
}

impl<'a> Newtonian<'a> {
    fn new(problem: &'a TodaProblem, w: &[Field]) -> Self {
        let n = problem.n();
        let diag: Vec<Field> = w
            .iter()
            .map(|f| f.zip_map(problem.density(), |a, b| a * b))
            .collect();
        let sigma = diag.iter().map(Field::mean).sum::<f64>() / n as f64;
        let np1 = (n + 1) as f64;
        let norm = (2.0 / np1).sqrt();
        let basis = (1..=n)
            .map(|k| {
                (1..=n)
                    .map(|j| norm * (PI * (j * k) as f64 / np1).sin())
                    .collect()
            })
            .collect();
        let inv_eigs = (1..=n)
            .map(|j| 1.0 / (2.0 - 2.0 * (PI * j as f64 / np1).cos()))
            .collect();
        Newtonian {
            problem,
            a_inv: problem.cartan().a_inv_f64(),
            diag,
            sigma,
            basis,
            inv_eigs,
        }
    }

    fn mix(&self, m: &[Vec<f64>], x: &[Field]) -> Vec<Field> {
        let d = self.problem.domain();
        (0..x.len())
            .map(|k| {
                let mut out = d.zeros();
                for (l, xl) in x.iter().enumerate() {
                    if m[k][l] != 0.0 {
                        out.add_scaled(m[k][l], xl);
                    }
                }
                out
            })
            .collect()
    }

    fn apply(&self, x: &[Field]) -> Result<Vec<Field>> {
        let sp = self.problem.spectral();
        let ax = self.mix(&self.a_inv, x);
        let mut out = Vec::with_capacity(x.len());
        for k in 0..x.len() {
            let mut y = sp.laplacian(&ax[k])?;
            y.scale(-0.25);
            y.add_scaled(1.0, &x[k].zip_map(&self.diag[k], |a, b| a * b));
            out.push(y);
        }
        Ok(out)
    }

    fn apply_preconditioner(&self, r: &[Field]) -> Result<Vec<Field>> {
        let sp = self.problem.spectral();
        let n = r.len();
        let rot = self.mix(&self.basis, r);
        let mut solved = Vec::with_capacity(n);
        for (j, f) in rot.iter().enumerate() {
            let inv = self.inv_eigs[j];
            let sigma = self.sigma;
            solved.push(sp.apply_multiplier(f, |kx, ky| {
                Complex64::new(1.0 / (0.25 * sp.wavenumber_sq(kx, ky) * inv + sigma), 0.0)
            })?);
        }
        // the sine basis is symmetric and orthogonal
        Ok(self.mix(&self.basis, &solved))
    }

    /// Preconditioned conjugate gradients from zero.
    fn solve(&self, rhs: &[Field], rel_tol: f64, max_iter: usize) -> Result<(Vec<Field>, usize)> {
        let d = self.problem.domain();
        let n = rhs.len();
        let mut x = vec![d.zeros(); n];
        let mut r = rhs.to_vec();
        let b_norm = dot_all(rhs, rhs).sqrt();
        if b_norm == 0.0 {
            return Ok((x, 0));
        }
        let mut z = self.apply_preconditioner(&r)?;
        let mut p = z.clone();
        let mut rz = dot_all(&r, &z);
        for it in 1..=max_iter {
            let ap = self.apply(&p)?;
            let pap = dot_all(&p, &ap);
            if !(pap > 0.0) {
                return Ok((x, it));
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k].add_scaled(alpha, &p[k]);
                r[k].add_scaled(-alpha, &ap[k]);
            }
            if dot_all(&r, &r).sqrt() <= rel_tol * b_norm {
                return Ok((x, it));
            }
            z = self.apply_preconditioner(&r)?;
            let rz_new = dot_all(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                let mut np = z[k].clone();
                np.add_scaled(beta, &p[k]);
                p[k] = np;
            }
        }
        Ok((x, max_iter))
    }
}

enum Health {
    Ok,
    Diverged(String),
}

fn health(problem: &TodaProblem, v: &[Field]) -> Health {
    let t = &problem.options().divergence;
    for (k, f) in v.iter().enumerate() {
        let mean = f.mean();
        if mean < t.mean_floor {
            return Health::Diverged(format!(
                "mean(v_{}) = {mean:.3} fell below {}",
                k + 1,
                t.mean_floor
            ));
        }
        if mean.abs() > t.sup_bound {
            return Health::Diverged(format!("|mean(v_{})| = {:.3} exceeds {}", k + 1, mean.abs(), t.sup_bound));
        }
        let osc = f.data().iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
        if !osc.is_finite() || osc > t.sup_bound {
            return Health::Diverged(format!("oscillation of v_{} is {osc:.3}", k + 1));
        }
    }
    Health::Ok
}

fn finish(
    problem: &TodaProblem,
    v: Vec<Field>,
    residual_norm: f64,
    iterations: usize,
    status: SolveStatus,
    diagnostic: Option<String>,
    history: Vec<IterationLog>,
) -> TodaState {
    let u = problem.full_fields(&v);
    let b = u.iter().map(|f| f.map(|x| (0.5 * x).exp())).collect();
    TodaState {
        v,
        u,
        b,
        residual_norm,
        newton_iterations: iterations,
        status,
        diagnostic,
        history,
    }
}

/// Damped Newton iteration with a preconditioned CG inner solve and a
/// backtracking line search on the discrete L² norm of the residual.
///
/// Failures are reported through [`SolveStatus`]; the only errors are
/// malformed inputs and attempts to iterate with `ε = −1`.
pub fn newton_solve(problem: &TodaProblem, v0: Vec<Field>) -> Result<TodaState> {
    if problem.epsilon() == Epsilon::Minus {
        return Err(Error::invalid(
            "the ε = −1 system is assembled for inspection only and is not iterated",
        ));
    }
    let opts = problem.options();
    let cell = problem.domain().cell_area();
    let mut v = v0;
    let mut w = match problem.weights(&v) {
        Ok(w) => w,
        Err(Error::Overflow { component, i, j }) => {
            return Ok(finish(
                problem,
                v,
                f64::INFINITY,
                0,
                SolveStatus::Diverged,
                Some(format!("initial weights overflow in component {} at ({i}, {j})", component + 1)),
                Vec::new(),
            ))
        }
        Err(e) => return Err(e),
    };
    let mut r = problem.residual_with(&v, &w)?;
    let (mut r_max, mut r_l2) = norms(&r, cell);
    let mut history = vec![IterationLog {
        iteration: 0,
        residual_max: r_max,
        residual_l2: r_l2,
        step: 0.0,
        krylov_iterations: 0,
        min_mean_v: v.iter().map(Field::mean).fold(f64::INFINITY, f64::min),
    }];
    let mut stalls = 0;
    for it in 1..=opts.max_iter {
        if r_max <= opts.tol {
            return Ok(finish(problem, v, r_max, it - 1, SolveStatus::Converged, None, history));
        }
        let sys = Newtonian::new(problem, &w);
        let rhs = sys.mix(&sys.a_inv, &r);
        let rel = (0.1 * r_max).clamp(1e-10, 1e-3);
        let (delta, kits) = sys.solve(&rhs, rel, opts.krylov_max_iter)?;

        let mut trial_step = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<Field> = v
                .iter()
                .zip(&delta)
                .map(|(a, d)| {
                    let mut t = a.clone();
                    t.add_scaled(trial_step, d);
                    t
                })
                .collect();
            if let Ok(tw) = problem.weights(&trial) {
                let tr = problem.residual_with(&trial, &tw)?;
                let (tm, tl) = norms(&tr, cell);
                if tl.is_finite() {
                    if tl <= (1.0 - opts.armijo * trial_step) * r_l2 {
                        accepted = Some((trial, tw, tr, tm, tl, trial_step));
                        break;
                    }
                    fallback = Some((trial, tw, tr, tm, tl, trial_step));
                }
            }
            trial_step *= 0.5;
        }
        let chosen = match accepted {
            Some(c) => c,
            None => {
                stalls += 1;
                if stalls >= opts.divergence.max_stalls {
                    return Ok(finish(
                        problem,
                        v,
                        r_max,
                        it,
                        SolveStatus::Diverged,
                        Some(format!("line search stalled {stalls} times")),
                        history,
                    ));
                }
                match fallback {
                    Some(c) => c,
                    None => (v.clone(), w.clone(), r.clone(), r_max, r_l2, 0.0),
                }
            }
        };
        let step;
        (v, w, r, r_max, r_l2, step) = chosen;
        history.push(IterationLog {
            iteration: it,
            residual_max: r_max,
            residual_l2: r_l2,
            step,
            krylov_iterations: kits,
            min_mean_v: v.iter().map(Field::mean).fold(f64::INFINITY, f64::min),
        });
        if let Health::Diverged(msg) = health(problem, &v) {
            return Ok(finish(problem, v, r_max, it, SolveStatus::Diverged, Some(msg), history));
        }
    }
    let status = if r_max <= opts.tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIter
    };
    Ok(finish(problem, v, r_max, opts.max_iter, status, None, history))
}
