use std::f64::consts::{LN_2, PI};

use proptest::prelude::*;

use toda_core::rational::rat;
use toda_core::stability::{Puncture, SingularStrengths};
use toda_core::torus::{
    build_green_table, green_eval, integrate, Field, FourierMode, SingularKind, SingularTerm,
    Spectral, TorusDomain, TorusGreen,
};

/// Fourier series in x with the y-dependence summed in closed form.
fn series_green(lx: f64, ly: f64, x: f64, y: f64) -> f64 {
    let area = lx * ly;
    let al = 2.0 * PI / lx;
    let be = 2.0 * PI / ly;
    let t = be * y.rem_euclid(ly);
    let mut s = (PI * PI / 3.0 - PI * t + 0.5 * t * t) / (be * be);
    for a in 1..4_000_000 {
        let k = a as f64 * ly / lx;
        // cosh(k(π−t))/sinh(πk) without overflow
        let (e1, e2) = ((-k * t).exp(), (-k * (2.0 * PI - t)).exp());
        let ratio = (e1 + e2) / (1.0 - (-2.0 * PI * k).exp());
        s += 2.0 * (al * a as f64 * x).cos() * (PI / (be * be * k)) * ratio;
        if ratio < 1e-18 {
            break;
        }
    }
    -s / area
}

/// Square partial sum of `Σ' (−1)^{a+b}/(a²+b²)` over `|a|, |b| ≤ K`.
fn alternating_lattice_sum(k: i64) -> f64 {
    let rows: Vec<f64> = (-k..=k)
        .map(|a| {
            (-k..=k)
                .filter(|&b| a != 0 || b != 0)
                .map(|b| {
                    let sign = if (a + b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    sign / (a * a + b * b) as f64
                })
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum()
}

#[test]
fn center_value_against_lattice_sum() {
    // G(z) = −(1/area) Σ' e^{2πi k·z}/|2πk|² on the unit square; at (½, ½)
    // the sum alternates. Richardson-extrapolate the square partial sums.
    let ks = [64i64, 128, 256, 512, 1024];
    let mut t: Vec<f64> = ks.iter().map(|&k| alternating_lattice_sum(k)).collect();
    for p in [2, 3, 4] {
        let f = 2f64.powi(p);
        t = t.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    let oracle = -t.last().unwrap() / (4.0 * PI * PI);
    let g = green_eval(1.0, 1.0, 0.5, 0.5).unwrap();
    assert!((g - oracle).abs() <= 1e-10 * oracle.abs(), "{g} vs {oracle}");
    assert!((oracle - LN_2 / (4.0 * PI)).abs() < 1e-10);
}

#[test]
fn series_oracle_agreement_on_far_points() {
    for &(lx, ly) in &[(1.0, 1.0), (1.0, 2.5), (3.0, 1.0)] {
        let g = TorusGreen::new(lx, ly).unwrap();
        let m = lx.min(ly);
        for i in 0..12 {
            for j in 0..12 {
                let (x, y) = ((i as f64 + 0.3) * lx / 12.0, (j as f64 + 0.7) * ly / 12.0);
                let (dx, dy) = (x - lx * (x / lx).round(), y - ly * (y / ly).round());
                if dx.hypot(dy) < 0.01 * m {
                    continue;
                }
                let got = g.value(x, y).unwrap();
                let want = series_green(lx, ly, x, y);
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-2), "{got} {want}");
            }
        }
    }
}

#[test]
fn scaling_keeps_values_and_shifts_regular_part() {
    let base = TorusGreen::new(1.0, 1.5).unwrap();
    for c in [0.5, 2.0, 3.7] {
        let scaled = TorusGreen::new(c, 1.5 * c).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.45, 1.1), (0.8, 0.02)] {
            let a = scaled.value(c * x, c * y).unwrap();
            let b = base.value(x, y).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((a - series_green(c, 1.5 * c, c * x, c * y)).abs() < 1e-10);
        }
        let shift = scaled.regular_part() - base.regular_part();
        assert!((shift + c.ln() / (2.0 * PI)).abs() < 1e-12);
    }
}

#[test]
fn mean_zero_on_fine_grid() {
    let d = TorusDomain::square(1.0, 1024).unwrap();
    let g = TorusGreen::new(1.0, 1.0).unwrap();
    let p = (0.3, 0.55);
    let f = d.sample(|x, y| g.value(x - p.0, y - p.1).unwrap());
    let term = SingularTerm {
        center: p,
        kind: SingularKind::Log,
        coeff: 1.0 / (2.0 * PI),
    };
    assert!(integrate(&d, &f, &[term]).unwrap().abs() < 1e-10);
}

#[test]
fn five_point_laplacian_sees_the_background_charge() {
    // ΔG = −1/area away from the pole; the 5-point stencil is O(h²).
    let (lx, ly) = (1.0, 1.25);
    let g = TorusGreen::new(lx, ly).unwrap();
    let area = lx * ly;
    let probe = [(0.5, 0.6), (0.8, 0.3), (0.3, 1.0)];
    let mut errs = Vec::new();
    for h in [0.02, 0.01, 0.005] {
        let mut e = 0.0f64;
        for &(x, y) in &probe {
            let f = |a: f64, b: f64| g.value(a, b).unwrap();
            let lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
            e = e.max((lap + 1.0 / area).abs());
        }
        errs.push(e);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "{errs:?}");
    }
}

#[test]
fn spectral_laplacian_of_smooth_green_part() {
    // G − (1/2π) ln r·χ is smooth, so its spectral Laplacian converges fast
    // to −1/area − (1/2π)Δ(ln r·χ), which vanishes outside r ≥ R.
    let (lx, ly) = (1.0, 1.0);
    let g = TorusGreen::new(lx, ly).unwrap();
    let p = (0.5, 0.5);
    let big_r = 0.45;
    let chi = |r: f64| {
        let half = 0.5 * big_r;
        if r <= half {
            return 1.0;
        }
        if r >= big_r {
            return 0.0;
        }
        let t = (r - half) / half;
        let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
        f(1.0 - t) / (f(1.0 - t) + f(t))
    };
    let mut prev = f64::INFINITY;
    for n in [64, 128, 256, 512] {
        let d = TorusDomain::square(1.0, n).unwrap();
        let f = d.sample(|x, y| {
            let r = (x - p.0).hypot(y - p.1);
            g.value(x - p.0, y - p.1).unwrap() - r.ln() * chi(r) / (2.0 * PI)
        });
        let lap = Spectral::new(&d).laplacian(&f).unwrap();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = d.node(i, j);
                if (x - p.0).hypot(y - p.1) > big_r + 0.02 {
                    err = err.max((lap.get(i, j) + 1.0).abs());
                }
            }
        }
        // faster than any fixed order
        assert!(16.0 * err < prev, "{n}: {err} after {prev}");
        prev = err;
    }
    assert!(prev < 1e-6, "{prev}");
}

fn one_puncture(mu: Vec<(i64, i64)>, x: (i64, i64), y: (i64, i64)) -> SingularStrengths {
    let n = mu.len();
    SingularStrengths::new(
        n,
        1,
        vec![Puncture::new("p", mu.into_iter().map(|(a, b)| rat(a, b)).collect())
            .at(rat(x.0, x.1), rat(y.0, y.1))],
    )
    .unwrap()
}

#[test]
fn weight_integral_converges_at_high_order() {
    // ∫ w for μ = −1/2 at a generic position; reference at 4096². The error
    // changes sign with the sub-cell offset of p, so the order is a
    // least-squares fit over four refinements.
    let s = one_puncture(vec![(-1, 2)], (37, 100), (61, 100));
    let value = |n: usize| {
        let d = TorusDomain::square(1.0, n).unwrap();
        let t = build_green_table(&d, &s).unwrap();
        let term = SingularTerm {
            center: t.puncture_position(0),
            kind: SingularKind::Power(t.singular_exponent(0, 0)),
            coeff: t.local_constant(0, 0),
        };
        integrate(&d, &t.w()[0], &[term]).unwrap()
    };
    let reference = value(4096);
    let ns = [128usize, 256, 512, 1024];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| ((n as f64).log2(), (value(n) - reference).abs().log2()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(-slope >= 1.5, "{pts:?}");
}

#[test]
fn local_constant_from_grid_rays() {
    // w·|z − p| along the diagonal ray of nodes from p = (½, ½) tends to
    // exp(−2π·G_reg), with G_reg read off the series oracle.
    let s = one_puncture(vec![(-1, 2)], (1, 2), (1, 2));
    let d = TorusDomain::square(1.0, 1024).unwrap();
    let t = build_green_table(&d, &s).unwrap();
    // G − ln r/2π = G_reg + c·r² + O(r⁴) along the y axis
    let f = |r: f64| series_green(1.0, 1.0, 0.0, r) - r.ln() / (2.0 * PI);
    let g_reg = (4.0 * f(1e-3) - f(2e-3)) / 3.0;
    let oracle = (-2.0 * PI * g_reg).exp();
    assert!((t.local_constant(0, 0) - oracle).abs() < 1e-6 * oracle);
    let samples: Vec<(f64, f64)> = (0..4)
        .map(|k| {
            let (i, j) = (512 + k, 512 + k);
            let (x, y) = d.node(i, j);
            let r = (x - 0.5).hypot(y - 0.5);
            (r, t.w()[0].get(i, j) * r)
        })
        .collect();
    // p is a centre of symmetry of the lattice, so the product is
    // c·(1 + O(r²)); extrapolate linearly in r²
    let (r1, a1) = samples[0];
    let (r2, a2) = samples[1];
    let limit = a1 - r1 * r1 * (a2 - a1) / (r2 * r2 - r1 * r1);
    assert!((limit - oracle).abs() < 1e-4 * oracle, "{limit} vs {oracle}");
}

#[test]
fn opposite_strengths_cancel_in_the_mean() {
    let s = SingularStrengths::new(
        1,
        1,
        vec![
            Puncture::new("a", vec![rat(1, 2)]).at(rat(1, 4), rat(1, 3)),
            Puncture::new("b", vec![rat(-1, 2)]).at(rat(2, 3), rat(3, 4)),
        ],
    )
    .unwrap();
    assert_eq!(s.column_sums(), vec![rat(0, 1)]);
    let d = TorusDomain::square(1.0, 256).unwrap();
    let t = build_green_table(&d, &s).unwrap();
    let terms: Vec<SingularTerm> = (0..2)
        .map(|p| SingularTerm {
            center: t.puncture_position(p),
            kind: SingularKind::Log,
            coeff: 2.0 * t.puncture_mu(p)[0],
        })
        .collect();
    assert!(integrate(&d, &t.gamma()[0], &terms).unwrap().abs() < 1e-10);
}

#[test]
fn translation_by_whole_cells_reindexes() {
    let d = TorusDomain::square(1.0, 64).unwrap();
    let a = build_green_table(&d, &one_puncture(vec![(-1, 3)], (33, 100), (41, 100))).unwrap();
    // shift by (5, 3) cells = (5/64, 3/64)
    let b = build_green_table(
        &d,
        &one_puncture(vec![(-1, 3)], (33 * 16 + 125, 1600), (41 * 16 + 75, 1600)),
    )
    .unwrap();
    for i in 0..64 {
        for j in 0..64 {
            let shifted = b.gamma()[0].get((i + 5) % 64, (j + 3) % 64);
            assert!((shifted - a.gamma()[0].get(i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn laplacian_examples() {
    let d = TorusDomain::new(2.0, 1.0, 32, 16).unwrap();
    let sp = Spectral::new(&d);
    let c = sp.laplacian(&Field::constant(32, 16, 3.5)).unwrap();
    assert!(c.max_abs() < 1e-12);
    let k = 2.0 * PI / 2.0;
    let f = d.sample(|x, _| (k * x).sin());
    let l = sp.laplacian(&f).unwrap();
    for (a, b) in l.data().iter().zip(f.data()) {
        assert!((a + k * k * b).abs() < 1e-12);
    }
    assert!(sp.laplacian(&Field::zeros(16, 16)).is_err());
}

fn band_limited(d: &TorusDomain, coeffs: &[(i32, i32, f64, f64)]) -> Field {
    d.sample(|x, y| {
        coeffs
            .iter()
            .map(|&(kx, ky, c, s)| {
                let th = 2.0 * PI * (kx as f64 * x / d.lx() + ky as f64 * y / d.ly());
                c * th.cos() + s * th.sin()
            })
            .sum()
    })
}

fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    proptest::collection::vec((-7i32..=7, -7i32..=7, -1.0f64..1.0, -1.0f64..1.0), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_is_even_and_periodic(x in -2.0f64..2.0, y in -2.0f64..2.0, lx in 0.5f64..2.0, ly in 0.5f64..2.0) {
        prop_assume!((x - lx * (x / lx).round()).hypot(y - ly * (y / ly).round()) > 1e-3);
        let g = TorusGreen::new(lx, ly).unwrap();
        let v = g.value(x, y).unwrap();
        prop_assert!((v - g.value(-x, -y).unwrap()).abs() < 1e-12);
        prop_assert!((v - g.value(x + lx, y - 2.0 * ly).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn spectral_laplacian_is_self_adjoint(a in modes(), b in modes()) {
        let d = TorusDomain::new(1.0, 1.7, 32, 32).unwrap();
        let sp = Spectral::new(&d);
        let f = band_limited(&d, &a);
        let g = band_limited(&d, &b);
        let (lf, lg) = (sp.laplacian(&f).unwrap(), sp.laplacian(&g).unwrap());
        let lhs = lf.dot(&g);
        let rhs = f.dot(&lg);
        let scale = (lf.dot(&lf) * g.dot(&g)).sqrt() + (f.dot(&f) * lg.dot(&lg)).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn weights_positive(px in 0.05f64..0.95, py in 0.05f64..0.95, num in -5i64..=12, conf in -0.4f64..0.4) {
        prop_assume!(num != 0);
        let d = TorusDomain::square(1.0, 32).unwrap()
            .with_conformal(vec![FourierMode { kx: 1, ky: 1, cos: conf, sin: 0.0 }]).unwrap();
        let x = rat((px * 997.0).round() as i64, 997);
        let y = rat((py * 991.0).round() as i64, 991);
        let s = SingularStrengths::new(1, 1, vec![Puncture::new("p", vec![rat(num, 6)]).at(x, y)]).unwrap();
        let t = build_green_table(&d, &s).unwrap();
        prop_assert!(t.w()[0].min() > 0.0);
        prop_assert!(t.w_hat()[0].min() >= 0.0);
        prop_assert!(t.w_hat()[0].sum() > 0.0);
    }
}
