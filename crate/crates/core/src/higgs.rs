//! The Higgs-bundle side of a Toda solution: diagonal harmonic metric,
//! Chern connection, and the flatness equations it must satisfy.
//!
//! With `ψ_j = u_j/2 + φ` and `Ψ_k = −ln δ_k`,
//!
//! `Ψ_0 = (1/(n+1)) Σ_j (n+1−j) ψ_j`,  `Ψ_k = Ψ_0 − Σ_{j≤k} ψ_j`,
//!
//! the metric is `H_k = δ_k² = e^{−2Ψ_k}` and the connection is
//! `A_k = (∂̄ − ∂)Ψ_k`, anti-hermitian and trace free.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::solver::{TodaProblem, TodaState};
use crate::stability::{degrees, Variant};
use crate::torus::Field;

/// Complex-valued grid field.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub re: Field,
    pub im: Field,
}

impl ComplexField {
    pub fn max_abs(&self) -> f64 {
        self.re
            .data()
            .iter()
            .zip(self.im.data())
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// A connection 1-form coefficient pair `a·dz + c·dz̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub dz: ComplexField,
    pub dzbar: ComplexField,
}

#[derive(Clone, Debug)]
pub struct HiggsData {
    pub delta: Vec<Field>,
    pub h: Vec<Field>,
    pub conn: Vec<OneForm>,
    /// `dz`-coefficients `b_k·e^{φ}` of the Higgs field entries.
    pub b_form: Vec<Field>,
    /// `dz∧dz̄` coefficient of `dA_k + ε(B_k∧B̄_k − B_{k+1}∧B̄_{k+1})`.
    pub curv_diag: Vec<Field>,
    /// `dz̄∧dz` coefficient of `dB_k − (A_{k−1} − A_k)∧B_k`.
    pub curv_off: Vec<ComplexField>,
}

/// Values, gradients and Laplacians of `u_j` and `φ` at the nodes.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub u: Vec<Field>,
    pub ux: Vec<Field>,
    pub uy: Vec<Field>,
    pub lap: Vec<Field>,
    pub phi: Field,
    pub phix: Field,
    pub phiy: Field,
    pub lap_phi: Field,
}

/// Jet of a solver state. Singular parts are differentiated analytically
/// (their Laplacian off the punctures is the constant `−4π s_j/area`),
/// regular parts spectrally, `φ` analytically.
pub fn state_jet(problem: &TodaProblem, state: &TodaState) -> Result<FieldJet> {
    let d = problem.domain();
    let sp = problem.spectral();
    let g = problem.green();
    let s: Vec<f64> = problem.strengths().column_sums().iter().map(to_f64).collect();
    let n = problem.n();
    let mut out = FieldJet {
        u: Vec::with_capacity(n),
        ux: Vec::with_capacity(n),
        uy: Vec::with_capacity(n),
        lap: Vec::with_capacity(n),
        phi: d.phi(),
        phix: d.zeros(),
        phiy: d.zeros(),
        lap_phi: d.phi_laplacian(),
    };
    if let Some(c) = d.conformal() {
        out.phix = d.sample(|x, y| c.gradient(x, y).0);
        out.phiy = d.sample(|x, y| c.gradient(x, y).1);
    }
    for k in 0..n {
        let v = &state.v[k];
        let (vx, vy) = sp.gradient(v)?;
        let (gx, gy) = g.gamma_gradient(k)?;
        let mut lap = sp.laplacian(v)?;
        let c = -4.0 * PI * s[k] / d.area();
        lap.data_mut().iter_mut().for_each(|x| *x += c);
        out.u.push(v.zip_map(&g.gamma()[k], |a, b| a + b));
        out.ux.push(vx.zip_map(&gx, |a, b| a + b));
        out.uy.push(vy.zip_map(&gy, |a, b| a + b));
        out.lap.push(lap);
    }
    Ok(out)
}

/// Coefficients `c_{k,j}` and `f_k` with `Ψ_k = Σ_j c_{k,j} u_j + f_k φ`.
fn psi_coefficients(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let np1 = (n + 1) as f64;
    let mut c = vec![vec![0.0; n]; n + 1];
    let mut f = vec![0.0; n + 1];
    for k in 0..=n {
        for j in 1..=n {
            let mut v = 0.5 * (n + 1 - j) as f64 / np1;
            if j <= k {
                v -= 0.5;
            }
            c[k][j - 1] = v;
        }
        f[k] = 0.5 * n as f64 - k as f64;
    }
    (c, f)
}

fn combine(c: &[f64], fields: &[Field], fc: f64, phi: &Field) -> Field {
    let mut out = phi.map(|p| fc * p);
    for (cj, fj) in c.iter().zip(fields) {
        if *cj != 0.0 {
            out.add_scaled(*cj, fj);
        }
    }
    out
}

/// `(δ_k, H_k)` for `k = 0..n`, from the positive fields `b_j` and `φ`.
pub fn metric_from_b(b: &[Field], phi: &Field) -> (Vec<Field>, Vec<Field>) {
    let n = b.len();
    let u: Vec<Field> = b.iter().map(|f| f.map(|x| 2.0 * x.ln())).collect();
    let (c, f) = psi_coefficients(n);
    let delta: Vec<Field> = (0..=n)
        .map(|k| combine(&c[k], &u, f[k], phi).map(|p| (-p).exp()))
        .collect();
    let h = delta.iter().map(|d| d.map(|x| x * x)).collect();
    (delta, h)
}

/// `δ_k` and `H_k = δ_k²` of a state.
pub fn metric_weights(problem: &TodaProblem, state: &TodaState) -> (Vec<Field>, Vec<Field>) {
    metric_from_b(&state.b, &problem.domain().phi())
}

/// Invert the metric: `b_k = √(H_k/H_{k−1}) / e^{φ}`.
pub fn recover_b(h: &[Field], phi: &Field) -> Vec<Field> {
    (1..h.len())
        .map(|k| {
            let ratio = h[k].zip_map(&h[k - 1], |a, b| (a / b).sqrt());
            ratio.zip_map(phi, |r, p| r * (-p).exp())
        })
        .collect()
}

/// Assemble metric, connection, Higgs field and both curvature residuals.
pub fn higgs_data(problem: &TodaProblem, state: &TodaState) -> Result<HiggsData> {
    let j = state_jet(problem, state)?;
    Ok(higgs_from_jet(&j, problem.epsilon().sign()))
}

/// As [`higgs_data`], from an explicit jet and sign `ε`.
pub fn higgs_from_jet(j: &FieldJet, eps: f64) -> HiggsData {
    let n = j.u.len();
    let (c, f) = psi_coefficients(n);
    let b: Vec<Field> = j.u.iter().map(|u| u.map(|x| (0.5 * x).exp())).collect();
    let (delta, h) = metric_from_b(&b, &j.phi);

    let mut conn = Vec::with_capacity(n + 1);
    let mut lap_psi = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let px = combine(&c[k], &j.ux, f[k], &j.phix);
        let py = combine(&c[k], &j.uy, f[k], &j.phiy);
        lap_psi.push(combine(&c[k], &j.lap, f[k], &j.lap_phi));
        // ∂Ψ = (Ψx − iΨy)/2, ∂̄Ψ = (Ψx + iΨy)/2; A = −∂Ψ dz + ∂̄Ψ dz̄
        conn.push(OneForm {
            dz: ComplexField {
                re: px.map(|x| -0.5 * x),
                im: py.map(|y| 0.5 * y),
            },
            dzbar: ComplexField {
                re: px.map(|x| 0.5 * x),
                im: py.map(|y| 0.5 * y),
            },
        });
    }

    // |B_k|² = e^{u_k + 2φ}; B_0 = B_{n+1} = 0
    let b_form: Vec<Field> = b.iter().map(|b| b.zip_map(&j.phi, |x, p| x * p.exp())).collect();
    let b_sq = |k: usize| -> Option<Field> {
        if k == 0 || k > n {
            None
        } else {
            Some(b_form[k - 1].map(|x| x * x))
        }
    };
    let mut curv_diag = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut cd = lap_psi[k].map(|x| 0.5 * x);
        if let Some(bk) = b_sq(k) {
            cd.add_scaled(eps, &bk);
        }
        if let Some(bk1) = b_sq(k + 1) {
            cd.add_scaled(-eps, &bk1);
        }
        curv_diag.push(cd);
    }

    // ∂̄(b_k e^{φ}) by the chain rule from ∂̄ ln(b_k e^{φ}) = ∂̄(u_k/2 + φ)
    let mut curv_off = Vec::with_capacity(n);
    for k in 1..=n {
        let beta = &b_form[k - 1];
        let lx = j.ux[k - 1].zip_map(&j.phix, |a, p| 0.5 * a + p);
        let ly = j.uy[k - 1].zip_map(&j.phiy, |a, p| 0.5 * a + p);
        let dbar_re = lx.zip_map(beta, |a, b| 0.5 * a * b);
        let dbar_im = ly.zip_map(beta, |a, b| 0.5 * a * b);
        let diff_re = conn[k - 1].dzbar.re.zip_map(&conn[k].dzbar.re, |a, b| a - b);
        let diff_im = conn[k - 1].dzbar.im.zip_map(&conn[k].dzbar.im, |a, b| a - b);
        let mut re = dbar_re;
        re.add_scaled(-1.0, &diff_re.zip_map(beta, |a, b| a * b));
        let mut im = dbar_im;
        im.add_scaled(-1.0, &diff_im.zip_map(beta, |a, b| a * b));
        curv_off.push(ComplexField { re, im });
    }

    HiggsData {
        delta,
        h,
        conn,
        b_form,
        curv_diag,
        curv_off,
    }
}

/// The curvature residual predicted from a Toda residual `R`:
/// `F_0 = (1/(n+1)) Σ_j (n+1−j) R_j` and `F_k = F_{k−1} − R_k`.
pub fn curvature_from_residual(r: &[Field]) -> Vec<Field> {
    let n = r.len();
    let np1 = (n + 1) as f64;
    let mut f0 = r[0].map(|_| 0.0);
    for (j, rj) in r.iter().enumerate() {
        f0.add_scaled((n - j) as f64 / np1, rj);
    }
    let mut out = vec![f0];
    for rk in r {
        let mut next = out.last().expect("nonempty").clone();
        next.add_scaled(-1.0, rk);
        out.push(next);
    }
    out
}

/// `curv_diag` evaluated at arbitrary points away from the punctures, from
/// the band-limited interpolant of the regular parts.
pub fn curvature_at_points(
    problem: &TodaProblem,
    state: &TodaState,
    points: &[(f64, f64)],
) -> Result<Vec<Vec<f64>>> {
    let d = problem.domain();
    let sp = problem.spectral();
    let g = problem.green();
    let n = problem.n();
    let eps = problem.epsilon().sign();
    let s: Vec<f64> = problem.strengths().column_sums().iter().map(to_f64).collect();
    let (c, f) = psi_coefficients(n);
    let spectra = state
        .v
        .iter()
        .map(|v| sp.forward(v))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let phi = d.phi_at(x, y);
        let lap_phi = d.conformal().map_or(0.0, |cf| cf.laplacian(x, y));
        let mut u = Vec::with_capacity(n);
        let mut lap = Vec::with_capacity(n);
        for k in 0..n {
            let pd = sp.interpolate(&spectra[k], x, y);
            let (gam, _, _) = g.gamma_at(k, x, y)?;
            u.push(gam + pd.value);
            lap.push(pd.laplacian() - 4.0 * PI * s[k] / d.area());
        }
        let b_sq = |k: usize| if k == 0 || k > n { 0.0 } else { (u[k - 1] + 2.0 * phi).exp() };
        let row = (0..=n)
            .map(|k| {
                let lp: f64 = c[k].iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>() + f[k] * lap_phi;
                0.5 * lp + eps * (b_sq(k) - b_sq(k + 1))
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeEstimate {
    /// `(1/2π) ∫ ΔΨ_k dx dy` over the smooth part, k = 0..n.
    pub by_curvature: Vec<f64>,
    /// Degrees with the derived exponent convention at genus 1.
    pub derived: Vec<f64>,
    pub max_abs_error: f64,
}

/// Degrees of the line subbundles read off from the curvature of `H_k`.
/// Puncture cells need no masking: the node grid never contains a puncture
/// and the singular parts enter through their analytic Laplacian.
pub fn degree_by_curvature(problem: &TodaProblem, state: &TodaState) -> Result<DegreeEstimate> {
    let d = problem.domain();
    let n = problem.n();
    let j = state_jet(problem, state)?;
    let (c, f) = psi_coefficients(n);
    let by_curvature: Vec<f64> = (0..=n)
        .map(|k| combine(&c[k], &j.lap, f[k], &j.lap_phi).sum() * d.cell_area() / (2.0 * PI))
        .collect();
    let derived: Vec<f64> = degrees(problem.strengths(), Variant::Derived)
        .deg_e
        .iter()
        .map(to_f64)
        .collect();
    let max_abs_error = by_curvature
        .iter()
        .zip(&derived)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(DegreeEstimate {
        by_curvature,
        derived,
        max_abs_error,
    })
}

/// Least-squares slope of `ln H_k` against `ln|z − p|` over the same
/// annulus `[2h, 10h]` used for the asymptotic fit of `u`.
pub fn metric_log_slope(problem: &TodaProblem, h: &[Field], puncture: usize, k: usize) -> Result<f64> {
    let d = problem.domain();
    let g = problem.green();
    if puncture >= g.puncture_count() || k >= h.len() {
        return Err(Error::invalid("puncture or metric index out of range"));
    }
    let p = g.puncture_position(puncture);
    let cell = d.hx().max(d.hy());
    let mut pts = Vec::new();
    for i in 0..d.nx() {
        for jj in 0..d.ny() {
            let r = d.distance(d.node(i, jj), p);
            if (2.0 * cell..=10.0 * cell).contains(&r) {
                pts.push((r.ln(), h[k].get(i, jj).ln()));
            }
        }
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
