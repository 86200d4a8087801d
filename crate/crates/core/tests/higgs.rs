use proptest::prelude::*;

use toda_core::higgs::{
    curvature_from_residual, degree_by_curvature, higgs_data, higgs_from_jet, metric_from_b,
    metric_log_slope, metric_weights, recover_b, FieldJet,
};
use toda_core::rational::{rat, to_f64};
use toda_core::solver::{band_limited_noise, newton_solve, SolveStatus, SolverOptions, TodaProblem};
use toda_core::stability::{exponents, Puncture, SingularStrengths, Variant};
use toda_core::torus::{Field, FourierMode, Spectral, TorusDomain};

/// Jet of smooth periodic fields, all derivatives spectral, `φ` analytic.
fn smooth_jet(d: &TorusDomain, u: Vec<Field>) -> FieldJet {
    let sp = Spectral::new(d);
    let mut ux = Vec::new();
    let mut uy = Vec::new();
    let mut lap = Vec::new();
    for f in &u {
        let (gx, gy) = sp.gradient(f).unwrap();
        ux.push(gx);
        uy.push(gy);
        lap.push(sp.laplacian(f).unwrap());
    }
    let (phix, phiy) = match d.conformal() {
        Some(c) => (d.sample(|x, y| c.gradient(x, y).0), d.sample(|x, y| c.gradient(x, y).1)),
        None => (d.zeros(), d.zeros()),
    };
    FieldJet {
        u,
        ux,
        uy,
        lap,
        phi: d.phi(),
        phix,
        phiy,
        lap_phi: d.phi_laplacian(),
    }
}

fn conformal_domain(n: usize) -> TorusDomain {
    TorusDomain::new(1.0, 1.5, n, n)
        .unwrap()
        .with_conformal(vec![FourierMode { kx: 1, ky: 1, cos: 0.2, sin: -0.3 }])
        .unwrap()
}

fn noise_fields(d: &TorusDomain, n: usize, seed: u64) -> Vec<Field> {
    (0..n).map(|k| band_limited_noise(d, 1.5, seed, k as u64)).collect()
}

fn quarter_problem(n: usize) -> TodaProblem {
    let s = SingularStrengths::new(1, 1, vec![Puncture::new("p", vec![rat(-1, 2)]).at(rat(1, 2), rat(1, 2))]).unwrap();
    TodaProblem::new(s, TorusDomain::square(1.0, n).unwrap(), SolverOptions::default()).unwrap()
}

#[test]
fn constant_field_metric() {
    let c = 0.7;
    let b = vec![Field::constant(8, 8, (0.5f64 * c).exp())];
    let (delta, h) = metric_from_b(&b, &Field::zeros(8, 8));
    for x in delta[0].data() {
        assert!((x - (-c / 4.0).exp()).abs() < 1e-15);
    }
    for x in delta[1].data() {
        assert!((x - (c / 4.0).exp()).abs() < 1e-15);
    }
    for (a, b) in h[0].data().iter().zip(h[1].data()) {
        assert!((a * b - 1.0).abs() < 1e-15);
    }
}

#[test]
fn trivial_field_gives_trivial_metric_and_connection() {
    let d = TorusDomain::square(1.0, 16).unwrap();
    let j = smooth_jet(&d, vec![d.zeros(); 3]);
    let hd = higgs_from_jet(&j, 1.0);
    assert!(hd.h.iter().all(|h| h.data().iter().all(|&x| x == 1.0)));
    for a in &hd.conn {
        assert_eq!(a.dz.max_abs(), 0.0);
        assert_eq!(a.dzbar.max_abs(), 0.0);
    }
}

#[test]
fn zero_field_curvature_constants() {
    // n = 1, u ≡ 0, flat: dA_0 vanishes and |B_1|² = 1, so the diagonal
    // curvature is −ε on the first entry and +ε on the second
    let d = TorusDomain::square(1.0, 8).unwrap();
    let j = smooth_jet(&d, vec![d.zeros()]);
    for eps in [1.0, -1.0] {
        let hd = higgs_from_jet(&j, eps);
        assert!(hd.curv_diag[0].data().iter().all(|&x| x == -eps));
        assert!(hd.curv_diag[1].data().iter().all(|&x| x == eps));
    }
}

#[test]
fn single_component_connection() {
    // A_0 = ½(∂̄ − ∂) ln b_1 with ln b_1 = u/2, and A_1 = −A_0
    let d = TorusDomain::square(1.0, 32).unwrap();
    let u = band_limited_noise(&d, 2.0, 9, 0);
    let sp = Spectral::new(&d);
    let (ux, uy) = sp.gradient(&u).unwrap();
    let hd = higgs_from_jet(&smooth_jet(&d, vec![u]), 1.0);
    let a0 = &hd.conn[0];
    let a1 = &hd.conn[1];
    for idx in 0..32 * 32 {
        let (gx, gy) = (ux.data()[idx], uy.data()[idx]);
        // ∂̄f = (f_x + i f_y)/2, f = u/4
        assert!((a0.dzbar.re.data()[idx] - gx / 8.0).abs() < 1e-13);
        assert!((a0.dzbar.im.data()[idx] - gy / 8.0).abs() < 1e-13);
        assert!((a0.dz.re.data()[idx] + gx / 8.0).abs() < 1e-13);
        assert!((a0.dz.im.data()[idx] - gy / 8.0).abs() < 1e-13);
        assert!((a1.dz.re.data()[idx] + a0.dz.re.data()[idx]).abs() < 1e-15);
        assert!((a1.dzbar.im.data()[idx] + a0.dzbar.im.data()[idx]).abs() < 1e-15);
    }
}

#[test]
fn synthetic_curvature_matches_toda_residual() {
    // n = 1, flat, no punctures: curv_diag_0 = (¼Δu − 2e^u)/2
    let d = TorusDomain::square(1.0, 32).unwrap();
    let u = band_limited_noise(&d, 1.0, 4, 0);
    let lap = Spectral::new(&d).laplacian(&u).unwrap();
    let hd = higgs_from_jet(&smooth_jet(&d, vec![u.clone()]), 1.0);
    for idx in 0..32 * 32 {
        let r = 0.25 * lap.data()[idx] - 2.0 * u.data()[idx].exp();
        assert!((hd.curv_diag[0].data()[idx] - 0.5 * r).abs() < 1e-8);
        assert!((hd.curv_diag[1].data()[idx] + 0.5 * r).abs() < 1e-8);
    }
}

#[test]
fn noisy_state_curvature_matches_pointwise_residual() {
    let s = SingularStrengths::new(
        2,
        1,
        vec![
            Puncture::new("p", vec![rat(-1, 2), rat(1, 3)]).at(rat(3, 10), rat(2, 5)),
            Puncture::new("q", vec![rat(-1, 4), rat(-2, 3)]).at(rat(7, 10), rat(4, 5)),
        ],
    )
    .unwrap();
    let p = TodaProblem::new(s, conformal_domain(64), SolverOptions::default()).unwrap();
    let v = noise_fields(p.domain(), 2, 21);
    let st = toda_core::solver::TodaState::evaluate(&p, v.clone()).unwrap();
    let hd = higgs_data(&p, &st).unwrap();
    let want = curvature_from_residual(&p.pointwise_residual(&v).unwrap());
    for (a, b) in hd.curv_diag.iter().zip(&want) {
        let scale = b.max_abs().max(1.0);
        let diff = a.zip_map(b, |x, y| x - y);
        assert!(diff.max_abs() <= 1e-8 * scale);
    }
    for c in &hd.curv_off {
        assert!(c.max_abs() <= 1e-10);
    }
}

#[test]
fn solved_state_degrees_and_off_diagonal() {
    let p = quarter_problem(128);
    let st = newton_solve(&p, p.initial_guess().unwrap()).unwrap();
    assert_eq!(st.status, SolveStatus::Converged);
    let hd = higgs_data(&p, &st).unwrap();
    for c in &hd.curv_off {
        assert!(c.max_abs() <= 1e-10);
    }
    let deg = degree_by_curvature(&p, &st).unwrap();
    // (1/2π)∫ΔΨ_k = −2 Σ_j c_{kj} s_j with c = (¼, −¼) and s = −½
    assert!((deg.by_curvature[0] - 0.25).abs() < 1e-8);
    assert!((deg.by_curvature[1] + 0.25).abs() < 1e-8);
    assert!(deg.max_abs_error < 1e-8, "{deg:?}");
}

#[test]
fn metric_slope_follows_derived_exponent() {
    let p = quarter_problem(256);
    let st = newton_solve(&p, p.initial_guess().unwrap()).unwrap();
    let e = exponents(p.strengths(), Variant::Derived);
    assert_eq!(to_f64(&e[0]), -0.25);
    let (_, h) = metric_weights(&p, &st);
    let slope = metric_log_slope(&p, &h, 0, 1).unwrap();
    let target = 2.0 * to_f64(&e[0]);
    assert!((slope - target).abs() <= 0.03 * target.abs(), "{slope}");
}

fn random_case() -> impl Strategy<Value = (usize, u64, bool)> {
    (1usize..=4, 0u64..1000, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_one_and_round_trip((n, seed, conformal) in random_case()) {
        let d = if conformal { conformal_domain(16) } else { TorusDomain::square(1.0, 16).unwrap() };
        let b: Vec<Field> = noise_fields(&d, n, seed).into_iter().map(|f| f.map(|x| (0.5 * x).exp())).collect();
        let phi = d.phi();
        let (delta, h) = metric_from_b(&b, &phi);
        prop_assert_eq!(h.len(), n + 1);
        for idx in 0..16 * 16 {
            let prod: f64 = h.iter().map(|f| f.data()[idx]).product();
            prop_assert!((prod - 1.0).abs() < 1e-12);
            prop_assert!(delta.iter().all(|f| f.data()[idx] > 0.0));
        }
        for (got, want) in recover_b(&h, &phi).iter().zip(&b) {
            prop_assert!(got.zip_map(want, |x, y| (x - y) / y).max_abs() < 1e-12);
        }
    }

    #[test]
    fn connection_is_trace_free_anti_hermitian((n, seed, conformal) in random_case()) {
        let d = if conformal { conformal_domain(16) } else { TorusDomain::square(1.0, 16).unwrap() };
        let j = smooth_jet(&d, noise_fields(&d, n, seed));
        let hd = higgs_from_jet(&j, 1.0);
        for idx in 0..16 * 16 {
            let parts = |f: &dyn Fn(&toda_core::higgs::OneForm) -> f64| -> f64 {
                hd.conn.iter().map(f).sum()
            };
            prop_assert!(parts(&|a| a.dz.re.data()[idx]).abs() < 1e-12);
            prop_assert!(parts(&|a| a.dz.im.data()[idx]).abs() < 1e-12);
            prop_assert!(parts(&|a| a.dzbar.re.data()[idx]).abs() < 1e-12);
            prop_assert!(parts(&|a| a.dzbar.im.data()[idx]).abs() < 1e-12);
            for a in &hd.conn {
                prop_assert!((a.dzbar.re.data()[idx] + a.dz.re.data()[idx]).abs() < 1e-15);
                prop_assert!((a.dzbar.im.data()[idx] - a.dz.im.data()[idx]).abs() < 1e-15);
            }
        }
        // A_{k−1} − A_k = ∂̄ ln b_k − ∂ ln b_k + (∂̄φ − ∂φ), with ln b_k = u_k/2;
        // dz̄ part: ((u_x/2 + φ_x) + i(u_y/2 + φ_y))/2
        for k in 1..=n {
            for idx in 0..16 * 16 {
                let gx = 0.5 * j.ux[k - 1].data()[idx] + j.phix.data()[idx];
                let gy = 0.5 * j.uy[k - 1].data()[idx] + j.phiy.data()[idx];
                let dre = hd.conn[k - 1].dzbar.re.data()[idx] - hd.conn[k].dzbar.re.data()[idx];
                let dim = hd.conn[k - 1].dzbar.im.data()[idx] - hd.conn[k].dzbar.im.data()[idx];
                prop_assert!((dre - 0.5 * gx).abs() < 1e-12);
                prop_assert!((dim - 0.5 * gy).abs() < 1e-12);
            }
        }
        for c in &hd.curv_off {
            prop_assert!(c.max_abs() <= 1e-10);
        }
    }
}
