use serde::Serialize;

use super::newton::{newton_solve, SolveStatus};
use super::noise::band_limited_noise;
use super::problem::TodaProblem;
use crate::error::Result;
use crate::torus::Field;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub starts: usize,
    pub seed: u64,
    pub statuses: Vec<SolveStatus>,
    pub iterations: Vec<usize>,
    /// `(a, b, sup_k max|u_k^a − u_k^b|)` over converged pairs.
    pub pairwise: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
    pub non_converged: Vec<usize>,
}

fn sup_distance(a: &[Field], b: &[Field]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.zip_map(y, |p, q| p - q).max_abs())
        .fold(0.0, f64::max)
}

/// Solve from `starts` perturbations of the initial guess, each component
/// perturbed by independent band-limited noise of sup-norm 1, and compare
/// the converged fields.
pub fn uniqueness_probe(problem: &TodaProblem, starts: usize, seed: u64) -> Result<UniquenessReport> {
    let guess = problem.initial_guess()?;
    let n = problem.n();
    let mut fields = Vec::with_capacity(starts);
    let mut statuses = Vec::with_capacity(starts);
    let mut iterations = Vec::with_capacity(starts);
    for s in 0..starts {
        let v0: Vec<Field> = guess
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let noise = band_limited_noise(problem.domain(), 1.0, seed, (s * n + k) as u64);
                g.zip_map(&noise, |a, b| a + b)
            })
            .collect();
        let state = newton_solve(problem, v0)?;
        statuses.push(state.status);
        iterations.push(state.newton_iterations);
        fields.push(state.u);
    }
    let converged: Vec<usize> = (0..starts)
        .filter(|&i| statuses[i] == SolveStatus::Converged)
        .collect();
    let mut pairwise = Vec::new();
    for (ia, &a) in converged.iter().enumerate() {
        for &b in &converged[ia + 1..] {
            pairwise.push((a, b, sup_distance(&fields[a], &fields[b])));
        }
    }
    let max_distance = pairwise.iter().map(|p| p.2).fold(0.0, f64::max);
    let non_converged = (0..starts)
        .filter(|&i| statuses[i] != SolveStatus::Converged)
        .collect();
    Ok(UniquenessReport {
        starts,
        seed,
        statuses,
        iterations,
        pairwise,
        max_distance,
        non_converged,
    })
}
