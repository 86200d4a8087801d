use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::domain::TorusDomain;
use super::field::Field;
use crate::error::{Error, Result};

/// Discrete Fourier coefficients of a grid field, same layout as [`Field`].
/// Unnormalised forward transform; phases are referenced to node `(0, 0)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    nx: usize,
    ny: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.data[k * self.ny + l]
    }
}

/// Value and derivatives of the trigonometric interpolant at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointDerivatives {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub dxy: f64,
}

impl PointDerivatives {
    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

/// Pseudo-spectral calculus on a [`TorusDomain`] grid.
pub struct Spectral {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

impl Spectral {
    pub fn new(domain: &TorusDomain) -> Self {
        let mut planner = FftPlanner::new();
        let (nx, ny) = (domain.nx(), domain.ny());
        Spectral {
            nx,
            ny,
            lx: domain.lx(),
            ly: domain.ly(),
            fx: planner.plan_fft_forward(nx),
            fy: planner.plan_fft_forward(ny),
            ix: planner.plan_fft_inverse(nx),
            iy: planner.plan_fft_inverse(ny),
        }
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.nx() != self.nx || f.ny() != self.ny {
            return Err(Error::SizeMismatch {
                expected: self.nx * self.ny,
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Angular wavenumber along x for index `k`; the Nyquist index maps to
    /// `+π/h`.
    pub fn kx(&self, k: usize) -> f64 {
        2.0 * PI * signed_index(k, self.nx) as f64 / self.lx
    }

    pub fn ky(&self, l: usize) -> f64 {
        2.0 * PI * signed_index(l, self.ny) as f64 / self.ly
    }

    /// `|k|²` for mode `(k, l)`.
    pub fn wavenumber_sq(&self, k: usize, l: usize) -> f64 {
        let (a, b) = (self.kx(k), self.ky(l));
        a * a + b * b
    }

    fn transform(&self, buf: &mut Vec<Complex64>, along_y: &dyn Fft<f64>, along_x: &dyn Fft<f64>) {
        along_y.process(buf);
        let mut t = vec![Complex64::default(); buf.len()];
        transpose(buf, self.nx, self.ny, &mut t);
        along_x.process(&mut t);
        transpose(&t, self.ny, self.nx, buf);
    }

    pub fn forward(&self, f: &Field) -> Result<Spectrum> {
        self.check(f)?;
        let mut buf: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, self.fy.as_ref(), self.fx.as_ref());
        Ok(Spectrum {
            nx: self.nx,
            ny: self.ny,
            data: buf,
        })
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, s: Spectrum) -> Field {
        let mut buf = s.data;
        self.transform(&mut buf, self.iy.as_ref(), self.ix.as_ref());
        let norm = 1.0 / (self.nx * self.ny) as f64;
        let data = buf.iter().map(|c| c.re * norm).collect();
        Field::from_vec(self.nx, self.ny, data).expect("shape preserved")
    }

    /// Multiply every mode by `m(k, l)` and transform back.
    pub fn apply_multiplier(&self, f: &Field, m: impl Fn(usize, usize) -> Complex64) -> Result<Field> {
        let mut s = self.forward(f)?;
        for k in 0..self.nx {
            for l in 0..self.ny {
                s.data[k * self.ny + l] *= m(k, l);
            }
        }
        Ok(self.inverse(s))
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        self.apply_multiplier(f, |k, l| Complex64::new(-self.wavenumber_sq(k, l), 0.0))
    }

    /// `(∂x f, ∂y f)` with the Nyquist modes dropped.
    pub fn gradient(&self, f: &Field) -> Result<(Field, Field)> {
        let s = self.forward(f)?;
        let mut sx = s.clone();
        let mut sy = s;
        for k in 0..self.nx {
            for l in 0..self.ny {
                let idx = k * self.ny + l;
                let ax = if 2 * k == self.nx { 0.0 } else { self.kx(k) };
                let ay = if 2 * l == self.ny { 0.0 } else { self.ky(l) };
                sx.data[idx] *= Complex64::new(0.0, ax);
                sy.data[idx] *= Complex64::new(0.0, ay);
            }
        }
        Ok((self.inverse(sx), self.inverse(sy)))
    }

    /// Mean-free solution of `Δw = f − mean(f)`.
    pub fn inverse_laplacian(&self, f: &Field) -> Result<Field> {
        self.apply_multiplier(f, |k, l| {
            if k == 0 && l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-1.0 / self.wavenumber_sq(k, l), 0.0)
            }
        })
    }

    /// Value and derivatives of the band-limited interpolant at `(x, y)`.
    /// The Nyquist modes enter as cosines so the interpolant is real.
    pub fn interpolate(&self, s: &Spectrum, x: f64, y: f64) -> PointDerivatives {
        let x0 = 0.5 * self.lx / self.nx as f64;
        let y0 = 0.5 * self.ly / self.ny as f64;
        let bx = basis(self.nx, self.lx, x - x0);
        let by = basis(self.ny, self.ly, y - y0);
        // Contract along y first, once per y-derivative order.
        let mut r = [
            vec![Complex64::default(); self.nx],
            vec![Complex64::default(); self.nx],
            vec![Complex64::default(); self.nx],
        ];
        for k in 0..self.nx {
            let row = &s.data[k * self.ny..(k + 1) * self.ny];
            for (m, rm) in r.iter_mut().enumerate() {
                rm[k] = row.iter().zip(&by[m]).map(|(a, b)| a * b).sum();
            }
        }
        let dot = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).map(|(p, q)| p * q).sum::<Complex64>().re
        };
        let norm = 1.0 / (self.nx * self.ny) as f64;
        PointDerivatives {
            value: dot(&bx[0], &r[0]) * norm,
            dx: dot(&bx[1], &r[0]) * norm,
            dy: dot(&bx[0], &r[1]) * norm,
            dxx: dot(&bx[2], &r[0]) * norm,
            dyy: dot(&bx[0], &r[2]) * norm,
            dxy: dot(&bx[1], &r[1]) * norm,
        }
    }

    /// Translate a field by `(sx, sy)`: the result `g` satisfies
    /// `g(x) = f(x + s)` for the band-limited interpolant of `f`.
    pub fn shift(&self, f: &Field, sx: f64, sy: f64) -> Result<Field> {
        let phase = |n: usize, kk: f64, idx: usize, s: f64| {
            if 2 * idx == n {
                Complex64::new((kk * s).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, kk * s)
            }
        };
        self.apply_multiplier(f, |k, l| {
            phase(self.nx, self.kx(k), k, sx) * phase(self.ny, self.ky(l), l, sy)
        })
    }
}

/// Per-mode basis values `e^{ik t}` and their first two derivatives.
fn basis(n: usize, l: f64, t: f64) -> [Vec<Complex64>; 3] {
    let mut b0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    let mut b2 = Vec::with_capacity(n);
    for k in 0..n {
        let kk = 2.0 * PI * signed_index(k, n) as f64 / l;
        if 2 * k == n {
            let (s, c) = (kk * t).sin_cos();
            b0.push(Complex64::new(c, 0.0));
            b1.push(Complex64::new(-kk * s, 0.0));
            b2.push(Complex64::new(-kk * kk * c, 0.0));
        } else {
            let e = Complex64::from_polar(1.0, kk * t);
            b0.push(e);
            b1.push(e * Complex64::new(0.0, kk));
            b2.push(e * (-kk * kk));
        }
    }
    [b0, b1, b2]
}

/// Restrict a field sampled on a fine grid to a coarser grid of the same
/// torus. Both grids are half-cell offset, so the fine field is first
/// translated by `(r−1)h/2` and then every `r`-th node is kept.
pub fn restrict(fine: &TorusDomain, f: &Field, coarse: &TorusDomain) -> Result<Field> {
    if fine.nx() % coarse.nx() != 0 || fine.ny() % coarse.ny() != 0 {
        return Err(Error::invalid("coarse grid must divide the fine grid"));
    }
    let rx = fine.nx() / coarse.nx();
    let ry = fine.ny() / coarse.ny();
    let sp = Spectral::new(fine);
    let shifted = sp.shift(
        f,
        0.5 * (rx as f64 - 1.0) * fine.hx(),
        0.5 * (ry as f64 - 1.0) * fine.hy(),
    )?;
    Ok(Field::from_fn(coarse.nx(), coarse.ny(), |i, j| {
        shifted.get(i * rx, j * ry)
    }))
}

impl Spectral {
    pub fn restrict(fine: &TorusDomain, f: &Field, coarse: &TorusDomain) -> Result<Field> {
        restrict(fine, f, coarse)
    }
}
