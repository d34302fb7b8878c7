use affine_husimi::affine::quantize_kernel;
use affine_husimi::families::{wide_symbol_grids, SymbolSpec};
use affine_husimi::mellin::{symbol_mellin, symbol_mellin_in_a, CriticalLineGrid, MellinSpectrum};
use affine_husimi::phase::*;
use affine_husimi::*;

fn hb1() -> PlanckScale {
    PlanckScale::new(1.0).unwrap()
}

fn smooth_symbol() -> AffineSymbol {
    let (ag, bg) = wide_symbol_grids();
    SymbolSpec::smooth().sample(&ag, &bg).unwrap()
}

fn spectrum(sym: &AffineSymbol) -> MellinSpectrum {
    symbol_mellin(sym, &CriticalLineGrid::new(30.0, 301).unwrap(), &UniformGrid::symmetric(14.0, 113).unwrap()).unwrap()
}

fn coherent(a: f64, b: f64, g: &LogGrid) -> HalfLineFunction {
    coherent_values(PhasePoint { a, b }, hb1(), g)
}

#[test]
fn identity_resolution_on_cone_window() {
    let g = LogGrid::default_desk();
    let w = ConeWindow::default_identity();
    let r = identity_resolution(&coherent(1.0, 0.0, &g), &w, hb1()).unwrap();
    assert!(r.defect <= 1e-3, "{r:?}");
    let f = HalfLineFunction::from_fn(&g, |x| C64::new(x * x * (-x).exp(), 0.0)).normalized();
    assert!(identity_resolution_defect(&f, &w, hb1()).unwrap() <= 5e-3);
    assert_eq!(identity_resolution_defect(&HalfLineFunction::zeros(&g), &w, hb1()).unwrap(), 0.0);
}

#[test]
fn narrow_window_reports_coverage() {
    let g = LogGrid::new(1e-4, 40.0, 512).unwrap();
    let w = ConeWindow::new(0.5, 2.0, 32, 0.0).unwrap();
    assert!(matches!(identity_resolution(&coherent(1.0, 0.0, &g), &w, hb1()), Err(Error::Coverage(_))));
}

#[test]
fn husimi_mass_converges_monotonically() {
    let g = LogGrid::new(1e-4, 40.0, 1024).unwrap();
    let psi = coherent(1.0, 0.0, &g);
    let mut last_gap = f64::INFINITY;
    for (lo, hi, n) in [(0.1, 10.0, 96), (0.03, 30.0, 140), (0.005, 200.0, 256)] {
        let m = husimi_pure_mass(&psi, &ConeWindow::new(lo, hi, n, 0.0).unwrap(), hb1());
        let gap = (m.derived - 1.0).abs();
        assert!(gap < last_gap, "window [{lo}, {hi}]: {m:?}");
        last_gap = gap;
    }
    assert!(last_gap < 5e-3);
}

#[test]
fn wigner_integral_is_pi_norm_squared() {
    let g = LogGrid::new(1e-4, 40.0, 1024).unwrap();
    let psi = coherent(0.9, 0.3, &g).scale(C64::new(2.0, 0.0));
    let m = wigner_window_integral(&psi, &ConeWindow::default_identity(), hb1());
    assert!((m.integral.re - std::f64::consts::PI * m.norm_sq).abs() < 1e-3 * m.norm_sq, "{m:?}");
    // oscillating rows at large |b| leave ~1e-6 relative in the imaginary part
    assert!(m.integral.im.abs() < 1e-5 * m.norm_sq, "{m:?}");
}

#[test]
fn two_orthogonal_projectors_have_mass_two() {
    let g = LogGrid::new(1e-4, 40.0, 384).unwrap();
    let f = coherent(1.0, 0.0, &g);
    let e = coherent(0.7, 1.0, &g);
    let e = e.axpy(-inner_product(&f, &e).unwrap(), &f).unwrap().normalized();
    let one = C64::new(1.0, 0.0);
    let op = OperatorMatrix::outer_sum(&[(one, &f, &f), (one, &e, &e)]).unwrap();
    let m = husimi_operator_mass(&op, &ConeWindow::new(0.005, 200.0, 200, 0.0).unwrap(), hb1());
    assert!((m.derived - 2.0).abs() < 0.06, "{m:?}");
    assert_eq!(husimi_operator_mass(&OperatorMatrix::zeros(&g), &ConeWindow::new(0.5, 2.0, 4, 0.0).unwrap(), hb1()).derived, 0.0);
}

#[test]
fn mellin_route_matches_direct_elements() {
    let g = LogGrid::default_desk();
    let sym = smooth_symbol();
    let op = quantize_kernel(&sym, &g, hb1()).unwrap();
    let ker = MellinKernel::new(&spectrum(&sym), hb1(), Some(&sym.b_grid)).unwrap();
    let pairs = [((1.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.1, 0.5)), ((1.0, 0.0), (0.01, 0.3)), ((0.8, 0.5), (20.0, 3.0)), ((0.6, 0.5), (2.0, 1.5))];
    for (p1, p2) in pairs {
        let (p1, p2) = (PhasePoint { a: p1.0, b: p1.1 }, PhasePoint { a: p2.0, b: p2.1 });
        let d = cross_matrix_element(p1, p2, &op, hb1());
        let k = ker.element(p1, p2);
        assert!((d - k).norm() <= 1e-4 * d.norm(), "{p1:?} {p2:?}: {d} vs {k}");
        // adjoint symmetry of a self-adjoint operator
        assert!((d - cross_matrix_element(p2, p1, &op, hb1()).conj()).norm() <= 1e-10 * d.norm());
    }
    let p = PhasePoint { a: 1.3, b: -0.4 };
    let diag = cross_matrix_element(p, p, &op, hb1());
    let field = husimi_operator(&op, &PhaseGrid::new(LogGrid::new(1.3, 2.0, 2).unwrap(), UniformGrid::new(-0.4, 0.0, 2).unwrap()), hb1());
    assert!((diag.re - field.at(0, 0)).abs() < 1e-14);
}

#[test]
fn position_spectrum_kernel_at_zero_shift() {
    let g = LogGrid::default_desk();
    let sym = smooth_symbol();
    let op = quantize_kernel(&sym, &g, hb1()).unwrap();
    let pos = symbol_mellin_in_a(&sym, &CriticalLineGrid::new(30.0, 301).unwrap()).unwrap();
    let ker = MellinKernel::new(&pos, hb1(), None).unwrap();
    assert_eq!(ker.eta_max(), 0.0);
    let (p1, p2) = (PhasePoint { a: 0.9, b: 0.2 }, PhasePoint { a: 1.4, b: -0.3 });
    let d = cross_matrix_element(p1, p2, &op, hb1());
    assert!((ker.element(p1, p2) - d).norm() <= 1e-4 * d.norm());
}

#[test]
fn husimi_from_mellin_matches_operator() {
    let g = LogGrid::default_desk();
    let sym = smooth_symbol();
    let op = quantize_kernel(&sym, &g, hb1()).unwrap();
    let tg = PhaseGrid::new(LogGrid::new(0.5, 2.0, 8).unwrap(), UniformGrid::symmetric(1.5, 9).unwrap());
    let direct = husimi_operator(&op, &tg, hb1());
    let via = husimi_from_mellin(&spectrum(&sym), &tg, hb1()).unwrap();
    assert!(via.sup_rel_diff(&direct, (0, 8), (0, 9)).unwrap() <= 1e-3);
    assert!(direct.min() >= -1e-10 && via.min() >= -1e-10);

    let zero = MellinSpectrum::zeros(&CriticalLineGrid::new(30.0, 301).unwrap(), &UniformGrid::symmetric(14.0, 113).unwrap(), mellin::BAxis::Frequency);
    assert!(husimi_from_mellin(&zero, &tg, hb1()).unwrap().values.iter().all(|v| *v == 0.0));
}

#[test]
fn undecayed_contour_is_rejected() {
    let sym = smooth_symbol();
    let short = symbol_mellin(&sym, &CriticalLineGrid::new(6.0, 61).unwrap(), &UniformGrid::symmetric(14.0, 113).unwrap()).unwrap();
    assert!(matches!(MellinKernel::new(&short, hb1(), None), Err(Error::Accuracy { .. })));
}

/// Degree-6 Lagrange weights on 7 equispaced nodes, evaluated at complex `z`.
fn lagrange7(center: f64, h: f64, z: C64) -> [C64; 7] {
    let mut w = [C64::new(1.0, 0.0); 7];
    for (k, wk) in w.iter_mut().enumerate() {
        for m in 0..7 {
            if m != k {
                let xm = center + (m as f64 - 3.0) * h;
                let xk = center + (k as f64 - 3.0) * h;
                *wk *= (z - xm) / (xk - xm);
            }
        }
    }
    w
}

#[test]
fn continuation_matches_taylor_extrapolation() {
    let g = LogGrid::new(1e-4, 40.0, 1024).unwrap();
    let op = quantize_kernel(&smooth_symbol(), &g, hb1()).unwrap();
    let p = PhasePoint { a: 1.1, b: 0.3 };
    let h = 0.025;
    let real: Vec<f64> = (0..49)
        .map(|idx| {
            let q = PhasePoint { a: p.a + (idx / 7) as f64 * h - 3.0 * h, b: p.b + (idx % 7) as f64 * h - 3.0 * h };
            cross_matrix_element(q, q, &op, hb1()).re
        })
        .collect();
    for (alpha, beta) in [(0.05, 0.0), (0.0, 0.05), (-0.05, 0.03), (0.03, -0.05), (0.05, 0.05)] {
        let d = ComplexDisplacement { alpha, beta };
        let (za, zb) = d.complex_point(p);
        let (la, lb) = (lagrange7(p.a, h, za), lagrange7(p.b, h, zb));
        let mut taylor = C64::new(0.0, 0.0);
        for i in 0..7 {
            for j in 0..7 {
                taylor += la[i] * lb[j] * real[i * 7 + j];
            }
        }
        let cont = husimi_continuation(p, d, &op, hb1()).unwrap();
        assert!((cont - taylor).norm() <= 1e-3 * taylor.norm(), "({alpha},{beta}): {cont} vs {taylor}");
    }
    let zero = husimi_continuation(p, ComplexDisplacement::zero(), &op, hb1()).unwrap();
    let diag = cross_matrix_element(p, p, &op, hb1());
    assert!((zero - diag).norm() <= 1e-10 * diag.norm());
}
