use serde::Serialize;

use super::newton::TodaState;
use super::problem::TodaProblem;
use crate::error::{Error, Result};
use crate::torus::Spectral;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub puncture: String,
    pub component: usize,
    /// `2μ_k(p)`.
    pub target: f64,
    pub slope: f64,
    /// `max − min` of `u_k − 2μ_k(p)·ln|z−p|` over the annulus.
    pub oscillation: f64,
    pub nodes: usize,
}

/// Least-squares fit `u_k ≈ a + slope·ln|z−p|` over nodes with
/// `|z − p| ∈ [2h, 10h]`, `h` the larger cell side.
pub fn asymptotic_fit(
    problem: &TodaProblem,
    state: &TodaState,
    puncture: usize,
    component: usize,
) -> Result<AsymptoticFit> {
    let d = problem.domain();
    let g = problem.green();
    if puncture >= g.puncture_count() || component >= problem.n() {
        return Err(Error::invalid("puncture or component index out of range"));
    }
    let h = d.hx().max(d.hy());
    let (r_in, r_out) = (2.0 * h, 10.0 * h);
    let p = g.puncture_position(puncture);
    for q in 0..g.puncture_count() {
        if q != puncture && d.distance(p, g.puncture_position(q)) <= r_out {
            return Err(Error::AnnulusOccupied {
                label: g.puncture_label(puncture).to_string(),
            });
        }
    }
    let target = g.singular_exponent(puncture, component);
    let u = &state.u[component];
    let mut pts = Vec::new();
    for i in 0..d.nx() {
        for j in 0..d.ny() {
            let r = d.distance(d.node(i, j), p);
            if (r_in..=r_out).contains(&r) {
                pts.push((r.ln(), u.get(i, j)));
            }
        }
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
        let b = y - target * x;
        (lo.min(b), hi.max(b))
    });
    Ok(AsymptoticFit {
        puncture: g.puncture_label(puncture).to_string(),
        component,
        target,
        slope,
        oscillation: hi - lo,
        nodes: pts.len(),
    })
}

/// `max |u^{coarse} − u^{fine}|` over coarse nodes at least five coarse
/// cells from every puncture. The fine solution is carried to the coarse
/// nodes by spectral translation of its regular part; the singular parts are
/// the same analytic functions on both grids.
pub fn convergence_gap(
    coarse: &TodaProblem,
    coarse_state: &TodaState,
    fine: &TodaProblem,
    fine_state: &TodaState,
) -> Result<f64> {
    let dc = coarse.domain();
    let df = fine.domain();
    if coarse.n() != fine.n() || dc.lx() != df.lx() || dc.ly() != df.ly() {
        return Err(Error::invalid("solutions live on different problems"));
    }
    let g = coarse.green();
    let exclusion = 5.0 * dc.hx().max(dc.hy());
    let mut gap = 0.0f64;
    for k in 0..coarse.n() {
        let vf = Spectral::restrict(df, &fine_state.v[k], dc)?;
        for i in 0..dc.nx() {
            for j in 0..dc.ny() {
                let z = dc.node(i, j);
                let near = (0..g.puncture_count()).any(|p| dc.distance(z, g.puncture_position(p)) < exclusion);
                if !near {
                    gap = gap.max((coarse_state.v[k].get(i, j) - vf.get(i, j)).abs());
                }
            }
        }
    }
    Ok(gap)
}
