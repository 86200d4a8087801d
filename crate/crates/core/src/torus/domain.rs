use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::field::Field;
use crate::error::{Error, Result};

/// One term `c·cos(θ) + s·sin(θ)` with `θ = 2π(kx·x/Lx + ky·y/Ly)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub kx: i32,
    pub ky: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Smooth conformal factor `φ`; the metric is `e^{2φ}|dz|²` and its Gauss
/// curvature is `K = −e^{−2φ}Δφ`, which integrates to zero on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalFactor {
    modes: Vec<FourierMode>,
    lx: f64,
    ly: f64,
}

impl ConformalFactor {
    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    fn wave(&self, m: &FourierMode) -> (f64, f64) {
        (2.0 * PI * m.kx as f64 / self.lx, 2.0 * PI * m.ky as f64 / self.ly)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (ax, ay) = self.wave(m);
                let th = ax * x + ay * y;
                m.cos * th.cos() + m.sin * th.sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        self.modes.iter().fold((0.0, 0.0), |(gx, gy), m| {
            let (ax, ay) = self.wave(m);
            let th = ax * x + ay * y;
            let d = -m.cos * th.sin() + m.sin * th.cos();
            (gx + ax * d, gy + ay * d)
        })
    }

    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (ax, ay) = self.wave(m);
                let th = ax * x + ay * y;
                -(ax * ax + ay * ay) * (m.cos * th.cos() + m.sin * th.sin())
            })
            .sum()
    }
}

/// Rectangular torus `[0,Lx)×[0,Ly)` with a half-cell-offset uniform grid:
/// node `(i, j)` sits at `((i+½)Lx/Nx, (j+½)Ly/Ny)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusDomain {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    conformal: Option<ConformalFactor>,
}

impl TorusDomain {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::invalid(format!("periods must be positive, got {lx} × {ly}")));
        }
        for n in [nx, ny] {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::invalid(format!(
                    "grid size {n} is not a power of two >= 4"
                )));
            }
        }
        Ok(TorusDomain {
            lx,
            ly,
            nx,
            ny,
            conformal: None,
        })
    }

    pub fn square(l: f64, n: usize) -> Result<Self> {
        TorusDomain::new(l, l, n, n)
    }

    pub fn with_conformal(mut self, modes: Vec<FourierMode>) -> Result<Self> {
        if modes
            .iter()
            .any(|m| !(m.cos.is_finite() && m.sin.is_finite()))
        {
            return Err(Error::invalid("conformal factor coefficients must be finite"));
        }
        self.conformal = if modes.is_empty() {
            None
        } else {
            Some(ConformalFactor {
                modes,
                lx: self.lx,
                ly: self.ly,
            })
        };
        Ok(self)
    }

    /// Same torus and conformal factor, different grid.
    pub fn regrid(&self, nx: usize, ny: usize) -> Result<Self> {
        let mut d = TorusDomain::new(self.lx, self.ly, nx, ny)?;
        d.conformal = self.conformal.clone();
        Ok(d)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn conformal(&self) -> Option<&ConformalFactor> {
        self.conformal.as_ref()
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.nx, self.ny)
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::from_fn(self.nx, self.ny, |i, j| {
            let (x, y) = self.node(i, j);
            f(x, y)
        })
    }

    /// Minimum-image displacement `a − b`.
    pub fn displacement(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let wrap = |d: f64, l: f64| d - l * (d / l).round();
        (wrap(a.0 - b.0, self.lx), wrap(a.1 - b.1, self.ly))
    }

    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        dx.hypot(dy)
    }

    /// Nearest grid node to a point and the distance to it.
    pub fn nearest_node(&self, p: (f64, f64)) -> ((usize, usize), f64) {
        let idx = |c: f64, h: f64, n: usize| {
            let k = (c / h - 0.5).round() as i64;
            k.rem_euclid(n as i64) as usize
        };
        let i = idx(p.0, self.hx(), self.nx);
        let j = idx(p.1, self.hy(), self.ny);
        let d = self.distance(p, self.node(i, j));
        ((i, j), d)
    }

    /// `φ` at the nodes (zero without a conformal factor).
    pub fn phi(&self) -> Field {
        match &self.conformal {
            Some(c) => self.sample(|x, y| c.value(x, y)),
            None => self.zeros(),
        }
    }

    /// `e^{2φ}` at the nodes.
    pub fn area_density(&self) -> Field {
        self.phi().map(|p| (2.0 * p).exp())
    }

    /// `Δφ` at the nodes, evaluated analytically.
    pub fn phi_laplacian(&self) -> Field {
        match &self.conformal {
            Some(c) => self.sample(|x, y| c.laplacian(x, y)),
            None => self.zeros(),
        }
    }

    pub fn phi_at(&self, x: f64, y: f64) -> f64 {
        self.conformal.as_ref().map_or(0.0, |c| c.value(x, y))
    }

    /// Gauss curvature `K = −e^{−2φ}Δφ` at the nodes.
    pub fn gauss_curvature(&self) -> Field {
        match &self.conformal {
            Some(c) => self.sample(|x, y| -(-2.0 * c.value(x, y)).exp() * c.laplacian(x, y)),
            None => self.zeros(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusDomain::new(1.0, 1.0, 48, 64).is_err());
        assert!(TorusDomain::new(1.0, 0.0, 64, 64).is_err());
        assert!(TorusDomain::new(1.0, 1.0, 2, 2).is_err());
    }

    #[test]
    fn lattice_symmetric_points_avoid_nodes() {
        let d = TorusDomain::square(1.0, 64).unwrap();
        for p in [(0.0, 0.0), (0.5, 0.5), (0.25, 0.75), (0.5, 0.0)] {
            let (_, dist) = d.nearest_node(p);
            assert!(dist > 0.7 * d.hx() * 0.5, "{p:?}");
        }
    }

    #[test]
    fn displacement_wraps() {
        let d = TorusDomain::new(2.0, 1.0, 8, 8).unwrap();
        let (dx, dy) = d.displacement((1.9, 0.05), (0.1, 0.95));
        assert!((dx + 0.2).abs() < 1e-12 && (dy - 0.1).abs() < 1e-12);
    }

    #[test]
    fn gauss_bonnet_vanishes_for_conformal_factor() {
        let d = TorusDomain::square(1.0, 64)
            .unwrap()
            .with_conformal(vec![
                FourierMode { kx: 1, ky: 0, cos: 0.3, sin: 0.0 },
                FourierMode { kx: 1, ky: 2, cos: -0.1, sin: 0.2 },
            ])
            .unwrap();
        // ∫ K dA = ∫ K e^{2φ} dx dy = −∫ Δφ = 0
        let k = d.gauss_curvature();
        let dens = d.area_density();
        let total: f64 = k.zip_map(&dens, |a, b| a * b).sum() * d.cell_area();
        assert!(total.abs() < 1e-12);
    }
}
