use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};
use crate::stability::{cartan, masses, CartanData, SingularStrengths};
use crate::torus::{build_green_table, integrate, Field, GreenTable, Spectral, TorusDomain};

/// Sign in front of the Cartan coupling. Only `Plus` is iterated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Epsilon {
    Plus,
    Minus,
}

impl Epsilon {
    pub fn sign(self) -> f64 {
        match self {
            Epsilon::Plus => 1.0,
            Epsilon::Minus => -1.0,
        }
    }
}

/// Bounds on the regular part `v` beyond which an iteration is declared
/// divergent. `e^{±40}` is far outside anything a double-precision solution
/// of a well-posed problem produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceThresholds {
    /// `mean(v_k)` below this is a collapse of the mass.
    pub mean_floor: f64,
    /// `|mean(v_k)|` above this, or oscillation `max|v_k − mean(v_k)|` above
    /// this.
    pub sup_bound: f64,
    /// Failed line searches tolerated before giving up.
    pub max_stalls: usize,
}

impl Default for DivergenceThresholds {
    fn default() -> Self {
        DivergenceThresholds {
            mean_floor: -40.0,
            sup_bound: 40.0,
            max_stalls: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Target for `max_k max_nodes |R_k|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per line search.
    pub max_halvings: usize,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    pub krylov_max_iter: usize,
    pub divergence: DivergenceThresholds,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 100,
            max_halvings: 12,
            armijo: 1e-4,
            krylov_max_iter: 400,
            divergence: DivergenceThresholds::default(),
        }
    }
}

/// Everything the iteration needs, fixed once per grid.
pub struct TodaProblem {
    strengths: SingularStrengths,
    domain: TorusDomain,
    green: GreenTable,
    options: SolverOptions,
    epsilon: Epsilon,
    cartan: CartanData,
    a: Vec<Vec<f64>>,
    masses: Vec<Rational>,
    spectral: Spectral,
    density: Field,
    half_lap_phi: Field,
    source: Vec<f64>,
}

impl std::fmt::Debug for TodaProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TodaProblem")
            .field("n", &self.n())
            .field("nx", &self.domain.nx())
            .field("ny", &self.domain.ny())
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl TodaProblem {
    pub fn new(strengths: SingularStrengths, domain: TorusDomain, options: SolverOptions) -> Result<Self> {
        TodaProblem::with_epsilon(strengths, domain, options, Epsilon::Plus)
    }

    pub fn with_epsilon(
        strengths: SingularStrengths,
        domain: TorusDomain,
        options: SolverOptions,
        epsilon: Epsilon,
    ) -> Result<Self> {
        strengths.validate_for_solver()?;
        if !(options.tol > 0.0) || options.max_iter == 0 {
            return Err(Error::invalid("solver tolerance and iteration cap must be positive"));
        }
        let min_sep = 3.0 * domain.hx().max(domain.hy());
        let pts: Vec<(String, (f64, f64))> = strengths
            .punctures()
            .iter()
            .map(|p| (p.label.clone(), p.position_f64().expect("validated")))
            .collect();
        for (a, (la, pa)) in pts.iter().enumerate() {
            for (lb, pb) in &pts[a + 1..] {
                let d = domain.distance(*pa, *pb);
                if d < min_sep {
                    return Err(Error::invalid(format!(
                        "punctures `{la}` and `{lb}` are {d:.3e} apart, closer than 3 cells"
                    )));
                }
            }
        }
        let green = build_green_table(&domain, &strengths)?;
        let cartan = cartan(strengths.n())?;
        let masses = masses(&strengths)?;
        let spectral = Spectral::new(&domain);
        let density = domain.area_density();
        let half_lap_phi = domain.phi_laplacian().map(|v| 0.5 * v);
        let area = domain.area();
        let source = strengths
            .column_sums()
            .iter()
            .map(|s| PI * to_f64(s) / area)
            .collect();
        Ok(TodaProblem {
            a: cartan.a_f64(),
            strengths,
            domain,
            green,
            options,
            epsilon,
            cartan,
            masses,
            spectral,
            density,
            half_lap_phi,
            source,
        })
    }

    pub fn n(&self) -> usize {
        self.strengths.n()
    }

    pub fn strengths(&self) -> &SingularStrengths {
        &self.strengths
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn green(&self) -> &GreenTable {
        &self.green
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    pub fn cartan(&self) -> &CartanData {
        &self.cartan
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Exact masses `m_l`, with `∫ e^{u_l} dA = m_l·π`.
    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    /// Whether every mass is strictly positive, i.e. the existence
    /// criterion in its derived form holds. Recorded, never enforced.
    pub fn criterion_holds(&self) -> bool {
        self.masses.iter().all(|m| to_f64(m) > 0.0)
    }

    pub(crate) fn density(&self) -> &Field {
        &self.density
    }

    pub(crate) fn cartan_f64(&self) -> &[Vec<f64>] {
        &self.a
    }

    fn check_v(&self, v: &[Field]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::SizeMismatch {
                expected: self.n(),
                got: v.len(),
            });
        }
        for f in v {
            if f.nx() != self.domain.nx() || f.ny() != self.domain.ny() {
                return Err(Error::SizeMismatch {
                    expected: self.domain.nx() * self.domain.ny(),
                    got: f.len(),
                });
            }
        }
        Ok(())
    }

    /// `W_l = ŵ_l·e^{v_l}`, failing on overflow.
    pub fn weights(&self, v: &[Field]) -> Result<Vec<Field>> {
        self.check_v(v)?;
        let mut out = Vec::with_capacity(v.len());
        for (k, (vk, wk)) in v.iter().zip(self.green.w_hat()).enumerate() {
            let f = vk.zip_map(wk, |a, b| b * a.exp());
            if let Some(idx) = f.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::Overflow {
                    component: k,
                    i: idx / f.ny(),
                    j: idx % f.ny(),
                });
            }
            out.push(f);
        }
        Ok(out)
    }

    /// `R_k = ¼Δv_k + ½Δφ − π s_k/area − ε e^{2φ}(A·W)_k`.
    pub fn residual(&self, v: &[Field]) -> Result<Vec<Field>> {
        let w = self.weights(v)?;
        self.residual_with(v, &w)
    }

    /// The residual with the uncorrected weights `w_l e^{v_l}`, i.e. the
    /// continuous equation sampled at the nodes. It differs from
    /// [`residual`](Self::residual) only on the four nodes around each
    /// puncture.
    pub fn pointwise_residual(&self, v: &[Field]) -> Result<Vec<Field>> {
        self.check_v(v)?;
        let w: Vec<Field> = v
            .iter()
            .zip(self.green.w())
            .map(|(a, b)| a.zip_map(b, |x, y| y * x.exp()))
            .collect();
        self.residual_with(v, &w)
    }

    /// `true` at nodes closer than `cells` grid cells to some puncture.
    pub fn near_puncture_mask(&self, cells: f64) -> Vec<bool> {
        let d = &self.domain;
        let radius = cells * d.hx().max(d.hy());
        let mut out = Vec::with_capacity(d.nx() * d.ny());
        for i in 0..d.nx() {
            for j in 0..d.ny() {
                let z = d.node(i, j);
                out.push(
                    (0..self.green.puncture_count())
                        .any(|p| d.distance(z, self.green.puncture_position(p)) < radius),
                );
            }
        }
        out
    }

    pub(crate) fn residual_with(&self, v: &[Field], w: &[Field]) -> Result<Vec<Field>> {
        let eps = self.epsilon.sign();
        let mut out = Vec::with_capacity(v.len());
        for k in 0..self.n() {
            let mut r = self.spectral.laplacian(&v[k])?;
            r.scale(0.25);
            r.add_scaled(1.0, &self.half_lap_phi);
            let src = self.source[k];
            r.data_mut().iter_mut().for_each(|x| *x -= src);
            let mut coupling = self.domain.zeros();
            for (l, wl) in w.iter().enumerate() {
                let a = self.a[k][l];
                if a != 0.0 {
                    coupling.add_scaled(a, wl);
                }
            }
            let coupling = coupling.zip_map(&self.density, |c, d| c * d);
            r.add_scaled(-eps, &coupling);
            out.push(r);
        }
        Ok(out)
    }

    /// Jacobian action `J[δ]_k = ¼Δδ_k − ε e^{2φ}(A·diag(W)·δ)_k` at the
    /// weights `w`.
    pub fn jacobian_apply(&self, w: &[Field], delta: &[Field]) -> Result<Vec<Field>> {
        self.check_v(delta)?;
        let eps = self.epsilon.sign();
        let wd: Vec<Field> = w
            .iter()
            .zip(delta)
            .map(|(a, b)| a.zip_map(b, |x, y| x * y))
            .collect();
        let mut out = Vec::with_capacity(delta.len());
        for k in 0..self.n() {
            let mut r = self.spectral.laplacian(&delta[k])?;
            r.scale(0.25);
            let mut c = self.domain.zeros();
            for (l, f) in wd.iter().enumerate() {
                let a = self.a[k][l];
                if a != 0.0 {
                    c.add_scaled(a, f);
                }
            }
            r.add_scaled(-eps, &c.zip_map(&self.density, |x, d| x * d));
            out.push(r);
        }
        Ok(out)
    }

    /// Constant guess `v_k = ln(π m_k / Σ_nodes ŵ_k e^{2φ} dA)`, which makes
    /// the discrete integral identities hold exactly.
    pub fn initial_guess(&self) -> Result<Vec<Field>> {
        let mut out = Vec::with_capacity(self.n());
        for (k, m) in self.masses.iter().enumerate() {
            let m = to_f64(m);
            if !(m > 0.0) {
                return Err(Error::GuessUnavailable { component: k });
            }
            let total = integrate(&self.domain, &self.green.w_hat()[k], &[])?;
            out.push(Field::constant(
                self.domain.nx(),
                self.domain.ny(),
                (PI * m / total).ln(),
            ));
        }
        Ok(out)
    }

    /// `v ≡ 0`, used when the masses rule out a guess.
    pub fn probe_start(&self) -> Vec<Field> {
        vec![self.domain.zeros(); self.n()]
    }

    /// `u_k = γ_k + v_k` at the nodes.
    pub fn full_fields(&self, v: &[Field]) -> Vec<Field> {
        v.iter()
            .zip(self.green.gamma())
            .map(|(a, b)| a.zip_map(b, |x, y| x + y))
            .collect()
    }
}
