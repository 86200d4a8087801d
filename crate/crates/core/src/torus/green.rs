use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use super::domain::TorusDomain;
use super::field::Field;
use super::quadrature::{lattice_defect, SingularKind};
use crate::error::{Error, Result};
use crate::stability::SingularStrengths;

/// `e^z − 1` without cancellation near zero.
fn expm1_c(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

/// Mean-zero Green's function of the flat Laplacian on a rectangular torus,
/// `ΔG = δ₀ − 1/area`, built from the Jacobi theta product
///
/// `G(z) = (1/2π) ln|θ₁(πz/Lx, q)| − y²/(2·area) + C`,  `q = e^{−π Ly/Lx}`.
///
/// The axes are swapped internally so that `q ≤ e^{−π}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGreen {
    lx: f64,
    ly: f64,
    swapped: bool,
    // internal (oriented) periods, a ≤ b
    a: f64,
    b: f64,
    q_pow: Vec<f64>,
    constant: f64,
    regular: f64,
}

impl TorusGreen {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::invalid("periods must be positive and finite"));
        }
        let swapped = lx > ly;
        let (a, b) = if swapped { (ly, lx) } else { (lx, ly) };
        let ln_q = -PI * b / a;
        let q2 = (2.0 * ln_q).exp();
        let mut q_pow = Vec::new();
        let mut t = q2;
        while t > 1e-18 {
            q_pow.push(t);
            t *= q2;
        }
        let sum_log: f64 = q_pow.iter().map(|t| (-t).ln_1p()).sum();
        let constant = b / (24.0 * a) - sum_log / (2.0 * PI);
        let regular =
            (LN_2 + 0.25 * ln_q + 3.0 * sum_log + (PI / a).ln()) / (2.0 * PI) + constant;
        Ok(TorusGreen {
            lx,
            ly,
            swapped,
            a,
            b,
            q_pow,
            constant,
            regular,
        })
    }

    pub fn periods(&self) -> (f64, f64) {
        (self.lx, self.ly)
    }

    /// Limit of `G(z) − (1/2π) ln|z|` as `z → 0`.
    pub fn regular_part(&self) -> f64 {
        self.regular
    }

    /// Reduce to the minimum image and orient so the short period is first.
    fn orient(&self, dx: f64, dy: f64) -> Result<(f64, f64)> {
        let wrap = |d: f64, l: f64| d - l * (d / l).round();
        let (x, y) = (wrap(dx, self.lx), wrap(dy, self.ly));
        if x == 0.0 && y == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        Ok(if self.swapped { (y, x) } else { (x, y) })
    }

    fn log_abs_theta1_rest(&self, w: Complex64) -> f64 {
        // ln|θ₁(w)| without the (1/4)ln q + ln 2 + Im-part pieces that cancel
        // against the stable form of ln|sin w|.
        let e_pos = (Complex64::i() * 2.0 * w).exp();
        let e_neg = (-Complex64::i() * 2.0 * w).exp();
        let mut acc = 0.0;
        for &t in &self.q_pow {
            acc += (-t).ln_1p() + (1.0 - t * e_pos).norm().ln() + (1.0 - t * e_neg).norm().ln();
        }
        acc
    }

    /// `G(dx, dy)`; errors when the offset is a lattice vector.
    pub fn value(&self, dx: f64, dy: f64) -> Result<f64> {
        let (x, y) = self.orient(dx, dy)?;
        let w = Complex64::new(PI * x / self.a, PI * y / self.a);
        // ln|sin w| = |Im w| − ln 2 + ln|1 − e^{±2iw}|, sign chosen so the
        // exponential is bounded.
        let two_iw = if w.im >= 0.0 {
            Complex64::i() * 2.0 * w
        } else {
            -Complex64::i() * 2.0 * w
        };
        let ln_sin = w.im.abs() - LN_2 + expm1_c(two_iw).norm().ln();
        let ln_q = -PI * self.b / self.a;
        let ln_theta = LN_2 + 0.25 * ln_q + ln_sin + self.log_abs_theta1_rest(w);
        Ok(ln_theta / (2.0 * PI) - y * y / (2.0 * self.a * self.b) + self.constant)
    }

    /// `(∂x G, ∂y G)` at the offset.
    pub fn gradient(&self, dx: f64, dy: f64) -> Result<(f64, f64)> {
        let (x, y) = self.orient(dx, dy)?;
        let w = Complex64::new(PI * x / self.a, PI * y / self.a);
        let i = Complex64::i();
        let cot = if w.im > 0.0 {
            let t = expm1_c(2.0 * i * w);
            i * (t + 2.0) / t
        } else {
            let t = expm1_c(-2.0 * i * w);
            -i * (t + 2.0) / t
        };
        let e_pos = (2.0 * i * w).exp();
        let e_neg = (-2.0 * i * w).exp();
        let mut dlog = cot;
        for &t in &self.q_pow {
            dlog += -2.0 * i * t * e_pos / (1.0 - t * e_pos) + 2.0 * i * t * e_neg / (1.0 - t * e_neg);
        }
        // ∂z G = θ₁'/θ₁ · (1/4a) + i·y/(2·area)
        let dz = dlog / (4.0 * self.a) + i * y / (2.0 * self.a * self.b);
        let (gx, gy) = (2.0 * dz.re, -2.0 * dz.im);
        Ok(if self.swapped { (gy, gx) } else { (gx, gy) })
    }
}

/// Green's function of the rectangular torus with periods `(lx, ly)` at the
/// offset `(dx, dy)`.
pub fn green_eval(lx: f64, ly: f64, dx: f64, dy: f64) -> Result<f64> {
    TorusGreen::new(lx, ly)?.value(dx, dy)
}

#[derive(Clone, Debug)]
struct TablePuncture {
    label: String,
    pos: (f64, f64),
    mu: Vec<f64>,
}

/// Tabulated singular parts `γ_k = 4π Σ_p μ_k(p) G(z − p)` and the weights
/// `w_k = e^{γ_k}`.
///
/// `w_hat` equals `w` except on the four nodes around each puncture with
/// `μ_k(p) < 0`, where the node samples are replaced by the bilinearly
/// spread singular integral, so that the plain node sum of `w_hat·f`
/// integrates `w·f` to second order for smooth `f`. It is nonnegative, and
/// zero only on stencil nodes with vanishing bilinear weight.
#[derive(Clone, Debug)]
pub struct GreenTable {
    domain: TorusDomain,
    green: TorusGreen,
    n: usize,
    punctures: Vec<TablePuncture>,
    cutoff: f64,
    gamma: Vec<Field>,
    w: Vec<Field>,
    w_hat: Vec<Field>,
    c0: Vec<Vec<f64>>,
}

/// Radius of the cutoff used for singular corrections.
fn cutoff_radius(domain: &TorusDomain) -> f64 {
    0.2 * domain.lx().min(domain.ly())
}

pub fn build_green_table(domain: &TorusDomain, strengths: &SingularStrengths) -> Result<GreenTable> {
    let n = strengths.n();
    let green = TorusGreen::new(domain.lx(), domain.ly())?;
    let cell = domain.hx().min(domain.hy());
    let mut punctures = Vec::new();
    for p in strengths.punctures() {
        let pos = p
            .position_f64()
            .ok_or_else(|| Error::invalid(format!("puncture `{}` has no position", p.label)))?;
        if !(pos.0 > 0.0 && pos.0 < domain.lx() && pos.1 > 0.0 && pos.1 < domain.ly()) {
            return Err(Error::invalid(format!(
                "puncture `{}` at {pos:?} is not strictly inside the fundamental domain",
                p.label
            )));
        }
        let ((i, j), dist) = domain.nearest_node(pos);
        if dist < 1e-3 * cell {
            return Err(Error::PunctureOnNode {
                label: p.label.clone(),
                i,
                j,
                distance: dist,
            });
        }
        let mu: Vec<f64> = p.mu.iter().map(crate::rational::to_f64).collect();
        if let Some(&m) = mu.iter().find(|&&m| m <= -1.0) {
            return Err(Error::NonIntegrable { exponent: 2.0 * m });
        }
        punctures.push(TablePuncture {
            label: p.label.clone(),
            pos,
            mu,
        });
    }

    // G(node − p) once per puncture
    let g_at: Vec<Field> = punctures
        .iter()
        .map(|p| {
            let mut f = domain.zeros();
            for i in 0..domain.nx() {
                for j in 0..domain.ny() {
                    let (x, y) = domain.node(i, j);
                    f.set(i, j, green.value(x - p.pos.0, y - p.pos.1)?);
                }
            }
            Ok(f)
        })
        .collect::<Result<_>>()?;

    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        let mut g = domain.zeros();
        for (p, gp) in punctures.iter().zip(&g_at) {
            if p.mu[k] != 0.0 {
                g.add_scaled(4.0 * PI * p.mu[k], gp);
            }
        }
        gamma.push(g);
    }
    let w: Vec<Field> = gamma.iter().map(|g| g.map(f64::exp)).collect();

    // smooth factor of w_k at each puncture: w_k ≈ c0·r^{2μ}
    let mut c0 = Vec::with_capacity(punctures.len());
    for (a, p) in punctures.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let mut e = 4.0 * PI * p.mu[k] * green.regular_part();
            for (b, q) in punctures.iter().enumerate() {
                if a != b && q.mu[k] != 0.0 {
                    e += 4.0 * PI * q.mu[k] * green.value(p.pos.0 - q.pos.0, p.pos.1 - q.pos.1)?;
                }
            }
            row.push(e.exp());
        }
        c0.push(row);
    }

    let cutoff = cutoff_radius(domain);
    let mut w_hat = w.clone();
    let cell_area = domain.cell_area();
    for (a, p) in punctures.iter().enumerate() {
        for k in 0..n {
            // r^{2μ} with μ ≥ 0 is continuous and the node sum is already
            // second order
            if p.mu[k] >= 0.0 {
                continue;
            }
            // The four stencil samples are moved into the defect so that a
            // node very close to p does not leak its spike onto the others.
            // Each stencil node then carries β·E·c0·D/h², where E = w/(c0 r^α)
            // is the smooth factor of w at that node.
            let alpha = 2.0 * p.mu[k];
            let mut defect = lattice_defect(domain, p.pos, SingularKind::Power(alpha), cutoff)?;
            let stencil = bilinear_stencil(domain, p.pos);
            let mut factors = [0.0; 4];
            for (slot, &((i, j), _)) in stencil.iter().enumerate() {
                let r = domain.distance(domain.node(i, j), p.pos);
                let chi = super::quadrature::cutoff(r, cutoff);
                defect += cell_area * r.powf(alpha) * chi;
                factors[slot] = w[k].get(i, j) / (c0[a][k] * r.powf(alpha));
                w_hat[k].set(i, j, w[k].get(i, j) * (1.0 - chi));
            }
            let amount = c0[a][k] * defect / cell_area;
            for (&((i, j), beta), e) in stencil.iter().zip(factors) {
                let cur = w_hat[k].get(i, j);
                w_hat[k].set(i, j, cur + beta * e * amount);
            }
        }
    }
    for (k, f) in w_hat.iter().enumerate() {
        if f.data().iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Internal(format!(
                "corrected weight of component {k} is negative; refine the grid"
            )));
        }
    }

    Ok(GreenTable {
        domain: domain.clone(),
        green,
        n,
        punctures,
        cutoff,
        gamma,
        w,
        w_hat,
        c0,
    })
}

/// The four nodes around `p` with bilinear interpolation weights.
pub(crate) fn bilinear_stencil(domain: &TorusDomain, p: (f64, f64)) -> [((usize, usize), f64); 4] {
    let fx = p.0 / domain.hx() - 0.5;
    let fy = p.1 / domain.hy() - 0.5;
    let (i0, j0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - i0, fy - j0);
    let wrap = |k: f64, n: usize| (k as i64).rem_euclid(n as i64) as usize;
    let (nx, ny) = (domain.nx(), domain.ny());
    [
        ((wrap(i0, nx), wrap(j0, ny)), (1.0 - tx) * (1.0 - ty)),
        ((wrap(i0 + 1.0, nx), wrap(j0, ny)), tx * (1.0 - ty)),
        ((wrap(i0, nx), wrap(j0 + 1.0, ny)), (1.0 - tx) * ty),
        ((wrap(i0 + 1.0, nx), wrap(j0 + 1.0, ny)), tx * ty),
    ]
}

impl GreenTable {
    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn green(&self) -> &TorusGreen {
        &self.green
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn puncture_count(&self) -> usize {
        self.punctures.len()
    }

    pub fn puncture_label(&self, p: usize) -> &str {
        &self.punctures[p].label
    }

    pub fn puncture_position(&self, p: usize) -> (f64, f64) {
        self.punctures[p].pos
    }

    pub fn puncture_mu(&self, p: usize) -> &[f64] {
        &self.punctures[p].mu
    }

    pub fn gamma(&self) -> &[Field] {
        &self.gamma
    }

    pub fn w(&self) -> &[Field] {
        &self.w
    }

    /// Quadrature-corrected weights (see the type docs).
    pub fn w_hat(&self) -> &[Field] {
        &self.w_hat
    }

    /// Smooth factor `lim w_k(z)·|z−p|^{−2μ_k(p)}`.
    pub fn local_constant(&self, p: usize, k: usize) -> f64 {
        self.c0[p][k]
    }

    /// Exponent `2μ_k(p)`.
    pub fn singular_exponent(&self, p: usize, k: usize) -> f64 {
        2.0 * self.punctures[p].mu[k]
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `γ_k` and its gradient at an arbitrary point away from punctures.
    pub fn gamma_at(&self, k: usize, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let mut acc = (0.0, 0.0, 0.0);
        for p in &self.punctures {
            let m = p.mu[k];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = (x - p.pos.0, y - p.pos.1);
            let g = self.green.value(dx, dy)?;
            let (gx, gy) = self.green.gradient(dx, dy)?;
            acc.0 += 4.0 * PI * m * g;
            acc.1 += 4.0 * PI * m * gx;
            acc.2 += 4.0 * PI * m * gy;
        }
        Ok(acc)
    }

    /// Gradient fields of `γ_k` on the grid (analytic).
    pub fn gamma_gradient(&self, k: usize) -> Result<(Field, Field)> {
        let d = &self.domain;
        let mut gx = d.zeros();
        let mut gy = d.zeros();
        for i in 0..d.nx() {
            for j in 0..d.ny() {
                let (x, y) = d.node(i, j);
                let (_, a, b) = self.gamma_at(k, x, y)?;
                gx.set(i, j, a);
                gy.set(i, j, b);
            }
        }
        Ok((gx, gy))
    }

    /// Column sums `s_k = Σ_p μ_k(p)` as floats.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.punctures.iter().map(|p| p.mu[k]).sum())
            .collect()
    }
}
