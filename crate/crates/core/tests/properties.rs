//! Randomised invariants of charts, projections, operators and series.

use proptest::prelude::*;
use sdcalc_core::asymptotics::{expand_surface, LayerFields, LayerOp, LayerPoint};
use sdcalc_core::closest_point::{signed_distance, to_cartesian};
use sdcalc_core::curve_frames::orthogonality_residual;
use sdcalc_core::expr::Bindings;
use sdcalc_core::oracle::{fd_grad, fd_hessian, fd_scalar_lap, Pullback};
use sdcalc_core::tube_calculus::dt_scalar_tube;
use sdcalc_core::{
    fd_derivative, parse_expr, AmbientField, Collar, CurveChart, EvolvingSurface, OpValue, Operand, ScalarField,
    SurfaceChart, SurfaceGeometry, SurfaceOp, Tube, Var, Vec3, VectorField,
};
use std::f64::consts::PI;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn fleet() -> Vec<(SurfaceChart, f64)> {
    // Each chart with a normal offset safely inside its collar.
    vec![
        (SurfaceChart::sphere(1.5), 0.6),
        (SurfaceChart::torus(2.0, 0.7), 0.3),
        (SurfaceChart::ellipsoid(1.0, 2f64.sqrt(), 2.0), 0.2),
        (
            SurfaceChart::from_exprs(
                ["s1", "s2", "0.3*sin(s1)*cos(s2) + 0.1*s1*s2"],
                [[-1.0, 1.0], [-1.0, 1.0]],
                [false, false],
            )
            .unwrap(),
            0.2,
        ),
    ]
}

/// Parameters away from the domain edges, where polar charts degenerate.
fn interior(chart: &SurfaceChart, u: f64, v: f64) -> [f64; 2] {
    let d = chart.domain;
    let lerp = |r: [f64; 2], t: f64| r[0] + (r[1] - r[0]) * (0.1 + 0.8 * t);
    [lerp(d[0], u), lerp(d[1], v)]
}

fn torus_point(u: f64, v: f64, w: f64) -> ([f64; 2], f64) {
    ([2.0 * PI * u, 2.0 * PI * v], 0.5 * (w - 0.5))
}

fn scalar(text: &str) -> ScalarField {
    ScalarField::parse(text).unwrap()
}

fn ambient(texts: [&str; 3]) -> VectorField {
    VectorField::ambient(texts).unwrap()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn chart_mixed_partials_commute(which in 0usize..4, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (chart, _) = &fleet()[which];
        let jet = chart.chart_jet(interior(chart, u, v), 0.0, 3).unwrap();
        let scale = jet.value().norm().max(1.0);
        for (a, b) in [(vec![0, 1], vec![1, 0]), (vec![0, 0, 1], vec![1, 0, 0]), (vec![1, 1, 0], vec![0, 1, 1])] {
            let d = jet.get(&a).unwrap() - jet.get(&b).unwrap();
            prop_assert!(d.norm() < 1e-10 * scale, "{a:?} vs {b:?}: {}", d.norm());
        }
    }

    #[test]
    fn symbolic_derivative_matches_differences(which in 0usize..5, x in -1.5..1.5f64) {
        let texts = ["sin(x)*exp(x/3)", "x^3 - 2*x + 1", "cos(x*x)/(2 + x)", "sqrt(1 + x*x)", "log(3 + x)*x"];
        let e = parse_expr(texts[which]).unwrap();
        let d = e.diff(Var::X);
        let at = |x: f64| e.eval_f64(&Bindings::new().with(Var::X, x)).unwrap();
        let exact = d.eval_f64(&Bindings::new().with(Var::X, x)).unwrap();
        let fd = fd_derivative(at, x, 1).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "{exact} vs {fd}");
    }

    #[test]
    fn projection_round_trips(which in 0usize..4, u in 0.0..1.0f64, v in 0.0..1.0f64, w in -1.0..1.0f64) {
        let (chart, reach) = &fleet()[which];
        let s = interior(chart, u, v);
        let sigma = reach * w;
        let x = to_cartesian(chart, s, sigma).unwrap();
        let c = signed_distance(chart, &x).unwrap();
        prop_assert!((c.sigma - sigma).abs() < 1e-8, "sigma {} vs {sigma}", c.sigma);
        let back = to_cartesian(chart, c.s, c.sigma).unwrap();
        prop_assert!((back - x).norm() < 1e-8);
        let foot = to_cartesian(chart, s, 0.0).unwrap();
        prop_assert!((c.foot - foot).norm() < 1e-8);
    }

    #[test]
    fn normal_is_constant_along_rays(which in 0usize..4, u in 0.0..1.0f64, v in 0.0..1.0f64, w in 0.1..1.0f64) {
        let (chart, reach) = &fleet()[which];
        let s = interior(chart, u, v);
        let a = signed_distance(chart, &to_cartesian(chart, s, -reach * w).unwrap()).unwrap();
        let b = signed_distance(chart, &to_cartesian(chart, s, reach * w).unwrap()).unwrap();
        prop_assert!((a.normal - b.normal).norm() < 1e-8);
    }

    #[test]
    fn shape_operator_annihilates_normal(which in 0usize..4, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (chart, _) = &fleet()[which];
        let g = SurfaceGeometry::at(chart, interior(chart, u, v)).unwrap();
        let (d, k) = (g.darboux(), g.curvature());
        let n = d.n.to_array();
        for row in k.shape.m {
            let kn: f64 = row.iter().zip(n).map(|(a, b)| a * b).sum();
            prop_assert!(kn.abs() < 1e-9);
        }
        if !k.umbilic {
            prop_assert!(d.t1_hat.dot(&d.t2_hat).abs() < 1e-9);
        }
        prop_assert!(d.t1_hat.dot(&d.n).abs() < 1e-12 && d.t2_hat.dot(&d.n).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn collar_identities_hold(u in 0.0..1.0f64, v in 0.0..1.0f64, w in 0.0..1.0f64, c in 0.5..2.0f64) {
        let chart = SurfaceChart::torus(2.0, 0.7);
        let (s, sigma) = torus_point(u, v, w);
        let collar = Collar::at(&chart, s, sigma).unwrap();
        let f = Operand::Scalar(scalar(&format!("{c}*x*y*z + sin(x) + z*z")));
        let uf = Operand::Vector(ambient(["y*z", &format!("sin({c}*x) + z"), "x*x*y"]));
        let vec_of = |v: OpValue| v.components();
        let h = collar.apply(SurfaceOp::Hessian, &f).map(vec_of).unwrap();
        let scale = norm_inf(&h).max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((h[3 * i + j] - h[3 * j + i]).abs() < 1e-7 * scale);
            }
        }
        // The curl-curl operator returns -curl(curl u), so lap u - grad div u - that = 0.
        let lap = collar.apply(SurfaceOp::VectorLaplacian, &uf).map(vec_of).unwrap();
        let cc = collar.apply(SurfaceOp::CurlCurl, &uf).map(vec_of).unwrap();
        let du = collar.apply(SurfaceOp::Divergence, &uf).map(vec_of).unwrap()[0];
        prop_assert!(du.is_finite());
        let field_u = collar.vector(&ambient(["y*z", &format!("sin({c}*x) + z"), "x*x*y"])).unwrap();
        let grad_div = collar.gradient_jet(&collar.divergence_jet(&field_u)).value().to_array();
        for i in 0..3 {
            let r = lap[i] - grad_div[i] - cc[i];
            prop_assert!(r.abs() < 1e-6 * norm_inf(&lap).max(1.0), "component {i}: {r}");
        }
        let curl = collar.curl_jet(&field_u);
        prop_assert!(collar.divergence_jet(&curl).value().abs() < 1e-6);
        let fj = collar.scalar(&scalar(&format!("{c}*x*y*z + sin(x) + z*z"))).unwrap();
        prop_assert!(norm_inf(&collar.curl_jet(&collar.gradient_jet(&fj)).value().to_array()) < 1e-6);
    }

    #[test]
    fn principal_directions_do_not_turn_off_the_surface(u in 0.0..1.0f64, v in 0.0..1.0f64, w in 0.0..1.0f64) {
        let chart = SurfaceChart::ellipsoid(1.0, 2f64.sqrt(), 2.0);
        let s = interior(&chart, u, v);
        let sigma = 0.4 * (w - 0.5);
        let d = SurfaceGeometry::at(&chart, s).unwrap().darboux();
        let h = Collar::at(&chart, s, sigma).unwrap().apply(SurfaceOp::Hessian, &Operand::Scalar(scalar("sigma"))).unwrap();
        let h = h.components();
        for t in [d.t1_hat, d.t2_hat] {
            let t = t.to_array();
            let ht: Vec<f64> = (0..3).map(|i| (0..3).map(|j| h[3 * i + j] * t[j]).sum()).collect();
            let along: f64 = ht.iter().zip(t).map(|(a, b)| a * b).sum();
            let off: Vec<f64> = ht.iter().zip(t).map(|(a, b)| a - along * b).collect();
            prop_assert!(norm_inf(&off) < 1e-7, "{off:?}");
        }
    }

    #[test]
    fn ambient_coordinates_do_not_move(u in 0.0..1.0f64, v in 0.0..1.0f64, w in 0.0..1.0f64, tau in 0.0..1.0f64) {
        let chart = SurfaceChart::from_exprs(
            [
                "(2+(0.7+0.1*tau)*cos(s2))*cos(s1)",
                "(2+(0.7+0.1*tau)*cos(s2))*sin(s1)+0.2*tau",
                "(0.7+0.05*tau*cos(s1))*sin(s2)",
            ],
            [[0.0, 2.0 * PI], [0.0, 2.0 * PI]],
            [true, true],
        )
        .unwrap();
        let moving = EvolvingSurface::from_chart(chart).unwrap();
        let (s, sigma) = torus_point(u, v, w);
        let collar = moving.collar(s, sigma, tau).unwrap();
        for c in ["x", "y", "z"] {
            prop_assert!(collar.dt_scalar(&scalar(c)).unwrap().abs() < 1e-7);
        }
    }

    #[test]
    fn ambient_coordinates_do_not_move_around_a_curve(s in 0.05..0.95f64, th in 0.0..6.28f64, w in 0.05..1.0f64) {
        let curve = CurveChart::from_exprs(["cos(2*pi*s)", "sin(2*pi*s)", "tau*s^2"], [0.0, 1.0], false).unwrap();
        let tube = Tube::at_time(curve, 0.7, 0.0).unwrap();
        for c in ["x", "y", "z"] {
            let r = dt_scalar_tube(&tube, &scalar(c), s, th, 0.4 * w).unwrap();
            prop_assert!(r.abs() < 1e-6, "{c}: {r}");
        }
    }

    #[test]
    fn tube_coordinates_are_orthogonal(which in 0usize..2, u in 0.0..1.0f64, th in 0.0..6.28f64, w in 0.05..1.0f64) {
        let curve = [CurveChart::helix(1.0, 0.3), CurveChart::parabolic_helix()][which].clone();
        let d = curve.domain;
        let s = d[0] + (d[1] - d[0]) * (0.05 + 0.9 * u);
        let tube = Tube::new(curve, 0.0).unwrap();
        prop_assert!(orthogonality_residual(&tube, s, th, 0.5 * w).unwrap() < 1e-8);
    }

    #[test]
    fn tube_round_trips(u in 0.0..1.0f64, th in 0.0..6.28f64, w in 0.05..1.0f64) {
        let tube = Tube::new(CurveChart::helix(1.0, 0.3), 0.0).unwrap();
        let d = tube.curve.domain;
        let s = d[0] + (d[1] - d[0]) * (0.05 + 0.9 * u);
        let x = tube.to_cartesian(s, th, 0.5 * w).unwrap();
        let c = tube.from_cartesian_near(&x, s).unwrap();
        prop_assert!((c.s - s).abs() < 1e-8 && (c.sigma - 0.5 * w).abs() < 1e-8);
        prop_assert!((tube.to_cartesian(c.s, c.theta, c.sigma).unwrap() - x).norm() < 1e-8);
    }

    #[test]
    fn finite_differences_are_exact_on_cubics(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let f = AmbientField::new(
            Pullback::Ambient { tau: 0.0 },
            Operand::Scalar(scalar("x^3 + 2*x*y*z - y*y*z + 3")),
        );
        let x = Vec3::new(a, b, c);
        let g = fd_grad(&f, &x, None).unwrap();
        let g_exact = Vec3::new(3.0 * a * a + 2.0 * b * c, 2.0 * a * c - 2.0 * b * c, 2.0 * a * b - b * b);
        prop_assert!((g - g_exact).norm() < 1e-7, "{:?}", g - g_exact);
        let lap = fd_scalar_lap(&f, &x, None).unwrap();
        prop_assert!((lap - (6.0 * a - 2.0 * c)).abs() < 1e-7);
        let h = fd_hessian(&f, &x, None).unwrap();
        prop_assert!((h.m[0][1] - 2.0 * c).abs() < 1e-7 && (h.m[1][2] - (2.0 * a - 2.0 * b)).abs() < 1e-7);
    }

    /// For f = xi the exact Laplacian is (m/eps)/(R + eps*xi) with m = 2 on a sphere and
    /// m = 1 on a cylinder, so the coefficients form a geometric series in -xi/R.
    #[test]
    fn constant_curvature_series_are_geometric(r in 0.8..3.0f64, xi in -1.0..1.0f64, u in 0.0..1.0f64, cyl in any::<bool>()) {
        let (chart, m) = if cyl { (SurfaceChart::cylinder(r), 1.0) } else { (SurfaceChart::sphere(r), 2.0) };
        let s = interior(&chart, u, 0.5);
        let fields = LayerFields::scalar(scalar("xi"));
        let series = expand_surface(&chart, LayerOp::ScalarLap, &fields, &LayerPoint::new(s, xi), 3).unwrap();
        for k in -1..=3 {
            let want = m / r * (-xi / r).powi(k + 1);
            let got = series.coeff(k).map_or(0.0, |c| c[0]);
            prop_assert!((got - want).abs() < 1e-10, "k={k}: {got} vs {want}");
        }
        prop_assert!(series.coeff(-2).map_or(0.0, |c| c[0]).abs() < 1e-12);
    }
}
