use std::f64::consts::PI;

use serde::Serialize;

use super::newton::TodaState;
use super::problem::TodaProblem;
use crate::error::Result;
use crate::rational::{serde_rat_vec, to_f64, Rational};
use crate::torus::{integrate, SingularKind, SingularTerm};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    /// Exact masses in units of π.
    #[serde(with = "serde_rat_vec")]
    pub masses_exact: Vec<Rational>,
    /// `∫ e^{u_l} dA / π` by singularity-corrected quadrature, with the
    /// regular part evaluated at each puncture by spectral interpolation.
    pub masses_measured: Vec<f64>,
    /// The same integrals from the solver's own node sums `Σ ŵ_l e^{v_l}`.
    pub masses_discrete: Vec<f64>,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
    /// `A·m̂ − (2(g−1)𝟙 − s)` componentwise, in units of π.
    pub identity_residual: Vec<f64>,
}

pub fn verify_identities(problem: &TodaProblem, state: &TodaState) -> Result<IdentityReport> {
    let d = problem.domain();
    let g = problem.green();
    let sp = problem.spectral();
    let n = problem.n();
    let mut measured = Vec::with_capacity(n);
    let mut discrete = Vec::with_capacity(n);
    for l in 0..n {
        let s = sp.forward(&state.v[l])?;
        let mut terms = Vec::new();
        for p in 0..g.puncture_count() {
            let e = g.singular_exponent(p, l);
            if e == 0.0 {
                continue;
            }
            let (x, y) = g.puncture_position(p);
            let vp = sp.interpolate(&s, x, y).value;
            terms.push(SingularTerm {
                center: (x, y),
                kind: SingularKind::Power(e),
                coeff: g.local_constant(p, l) * vp.exp(),
            });
        }
        let eu = g.w()[l].zip_map(&state.v[l], |w, v| w * v.exp());
        measured.push(integrate(d, &eu, &terms)? / PI);
        let ew = g.w_hat()[l].zip_map(&state.v[l], |w, v| w * v.exp());
        discrete.push(integrate(d, &ew, &[])? / PI);
    }
    let exact = problem.masses().to_vec();
    let relative_errors: Vec<f64> = measured
        .iter()
        .zip(&exact)
        .map(|(m, e)| {
            let e = to_f64(e);
            (m - e).abs() / e.abs()
        })
        .collect();
    let a = problem.cartan_f64();
    let genus_term = 2.0 * (problem.strengths().genus() as f64 - 1.0);
    let s: Vec<f64> = problem.strengths().column_sums().iter().map(to_f64).collect();
    let identity_residual = (0..n)
        .map(|k| (0..n).map(|l| a[k][l] * measured[l]).sum::<f64>() - (genus_term - s[k]))
        .collect();
    Ok(IdentityReport {
        max_relative_error: relative_errors.iter().copied().fold(0.0, f64::max),
        masses_exact: exact,
        masses_measured: measured,
        masses_discrete: discrete,
        relative_errors,
        identity_residual,
    })
}
