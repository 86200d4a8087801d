use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;

use super::domain::TorusDomain;
use super::field::{pairwise_sum, Field};
use crate::error::{Error, Result};

/// Shape of an integrable point singularity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingularKind {
    /// `r^α`, integrable for `α > −2`.
    Power(f64),
    /// `ln r`.
    Log,
}

impl SingularKind {
    fn check(self) -> Result<()> {
        match self {
            SingularKind::Power(a) if !(a > -2.0) => Err(Error::NonIntegrable { exponent: a }),
            _ => Ok(()),
        }
    }

    fn eval(self, r: f64) -> f64 {
        match self {
            SingularKind::Power(a) => r.powf(a),
            SingularKind::Log => r.ln(),
        }
    }
}

/// A point singularity `coeff·S(|z − center|)` carried by an integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularTerm {
    pub center: (f64, f64),
    pub kind: SingularKind,
    pub coeff: f64,
}

/// Smooth radial cutoff: 1 on `[0, R/2]`, 0 beyond `R`, `C^∞` in between.
pub(crate) fn cutoff(r: f64, big_r: f64) -> f64 {
    let half = 0.5 * big_r;
    if r <= half {
        return 1.0;
    }
    if r >= big_r {
        return 0.0;
    }
    let t = (r - half) / half;
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(1.0 - t), f(t));
    a / (a + b)
}

/// `∫ S(|z|)·χ(|z|) dA` over the plane, with `χ` the cutoff of radius `R`.
pub fn singular_disk_integral(kind: SingularKind, big_r: f64) -> Result<f64> {
    kind.check()?;
    let r0 = 0.5 * big_r;
    let inner = match kind {
        SingularKind::Power(a) => r0.powf(a + 2.0) / (a + 2.0),
        SingularKind::Log => r0 * r0 * (2.0 * r0.ln() - 1.0) / 4.0,
    };
    let gl = GaussLegendre::new(48.try_into().expect("nonzero degree"));
    let panels = 8;
    let width = (big_r - r0) / panels as f64;
    let outer: f64 = (0..panels)
        .map(|p| {
            let a = r0 + p as f64 * width;
            gl.integrate(a, a + width, |r| r * kind.eval(r) * cutoff(r, big_r))
        })
        .sum();
    Ok(2.0 * PI * (inner + outer))
}

/// Exact integral minus the midpoint node sum of `S·χ` centred at `p`.
pub(crate) fn lattice_defect(
    domain: &TorusDomain,
    p: (f64, f64),
    kind: SingularKind,
    big_r: f64,
) -> Result<f64> {
    if 2.0 * big_r > domain.lx().min(domain.ly()) {
        return Err(Error::invalid("cutoff radius exceeds half the shorter period"));
    }
    let exact = singular_disk_integral(kind, big_r)?;
    let (hx, hy) = (domain.hx(), domain.hy());
    let sx = (big_r / hx).ceil() as i64 + 1;
    let sy = (big_r / hy).ceil() as i64 + 1;
    let ci = (p.0 / hx - 0.5).round() as i64;
    let cj = (p.1 / hy - 0.5).round() as i64;
    let mut terms = Vec::with_capacity(((2 * sx + 1) * (2 * sy + 1)) as usize);
    for di in -sx..=sx {
        for dj in -sy..=sy {
            let x = (ci + di) as f64 * hx + 0.5 * hx - p.0;
            let y = (cj + dj) as f64 * hy + 0.5 * hy - p.1;
            let r = x.hypot(y);
            if r < big_r {
                if r == 0.0 {
                    return Err(Error::SingularEvaluation);
                }
                terms.push(kind.eval(r) * cutoff(r, big_r));
            }
        }
    }
    Ok(exact - hx * hy * pairwise_sum(&terms))
}

/// Integral of a grid field over the torus with respect to `e^{2φ} dx dy`.
///
/// Without singular terms this is the midpoint rule, spectrally accurate
/// for smooth periodic integrands. Each singular term adds the difference
/// between the exact and the node-sampled integral of a cut-off copy of the
/// singularity, which restores high order for fields of the form
/// `smooth·S(|z−p|)`.
pub fn integrate(domain: &TorusDomain, field: &Field, terms: &[SingularTerm]) -> Result<f64> {
    if field.nx() != domain.nx() || field.ny() != domain.ny() {
        return Err(Error::SizeMismatch {
            expected: domain.nx() * domain.ny(),
            got: field.len(),
        });
    }
    let weighted = match domain.conformal() {
        Some(_) => field.zip_map(&domain.area_density(), |f, d| f * d),
        None => field.clone(),
    };
    let mut total = weighted.sum() * domain.cell_area();
    let big_r = 0.2 * domain.lx().min(domain.ly());
    for t in terms {
        t.kind.check()?;
        let scale = (2.0 * domain.phi_at(t.center.0, t.center.1)).exp();
        total += t.coeff * scale * lattice_defect(domain, t.center, t.kind, big_r)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::green::TorusGreen;
    use crate::torus::domain::FourierMode;

    #[test]
    fn constant_and_sine() {
        let d = TorusDomain::square(1.0, 32).unwrap();
        assert!((integrate(&d, &d.sample(|_, _| 1.0), &[]).unwrap() - 1.0).abs() < 1e-14);
        let s = d.sample(|x, _| (2.0 * PI * x).sin());
        assert!(integrate(&d, &s, &[]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn disk_integral_closed_forms() {
        // With χ ≡ 1 on [0, R/2] and a smooth fall-off, compare against a
        // direct fine trapezoid of the radial integrand.
        for kind in [SingularKind::Power(-1.0), SingularKind::Power(0.5), SingularKind::Log] {
            let big_r = 0.2;
            let m = 400_000;
            let h = big_r / m as f64;
            let mut acc = 0.0;
            for i in 0..m {
                let r = (i as f64 + 0.5) * h;
                acc += r * kind.eval(r) * cutoff(r, big_r) * h;
            }
            let got = singular_disk_integral(kind, big_r).unwrap();
            assert!((got - 2.0 * PI * acc).abs() < 1e-6, "{kind:?}");
        }
    }

    #[test]
    fn rejects_non_integrable() {
        assert!(matches!(
            singular_disk_integral(SingularKind::Power(-2.0), 0.1),
            Err(Error::NonIntegrable { .. })
        ));
    }

    #[test]
    fn green_mean_vanishes_with_log_correction() {
        let d = TorusDomain::square(1.0, 1024).unwrap();
        let g = TorusGreen::new(1.0, 1.0).unwrap();
        let p = (0.5, 0.5);
        let f = d.sample(|x, y| g.value(x - p.0, y - p.1).unwrap());
        let term = SingularTerm {
            center: p,
            kind: SingularKind::Log,
            coeff: 1.0 / (2.0 * PI),
        };
        let mean = integrate(&d, &f, &[term]).unwrap();
        assert!(mean.abs() < 1e-10, "{mean}");
    }

    #[test]
    fn conformal_measure_is_used() {
        let d = TorusDomain::square(1.0, 32)
            .unwrap()
            .with_conformal(vec![FourierMode { kx: 1, ky: 0, cos: 0.5, sin: 0.0 }])
            .unwrap();
        // ∫ e^{cos 2πx} dx = I₀(1)
        let got = integrate(&d, &d.sample(|_, _| 1.0), &[]).unwrap();
        assert!((got - 1.266_065_877_752_008_4).abs() < 1e-12);
    }
}
