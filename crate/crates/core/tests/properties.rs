use std::sync::Arc;

use proptest::prelude::*;

use plap_radial::criteria::{
    check_c3, check_component_c3, check_condition_5, check_condition_5b, check_reciprocal_growth,
    classify_improper_integral, VerdictKind,
};
use plap_radial::grid::make_grid;
use plap_radial::solver::{
    solve_auxiliary_scalar, solve_radial_system, solve_radial_system_traced,
};
use plap_radial::verify::{
    check_monotone_in_k, classify_growth, fixed_point_residual, GrowthClass,
};
use plap_radial::{parse, Grading, IterationConfig, ProblemSpec, RadialGrid};

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..1000).prop_map(|n| n.to_string()),
        (0.0f64..100.0).prop_map(|x| format!("{x}")),
        Just("u1".to_string()),
        Just("u2".to_string()),
    ]
}

fn expression() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"), Just("^")],
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("({a})")),
            (
                prop_oneof![Just("exp"), Just("log"), Just("sqrt"), Just("abs")],
                inner.clone()
            )
                .prop_map(|(f, a)| format!("{f}({a})")),
            (prop_oneof![Just("min"), Just("max")], inner.clone(), inner)
                .prop_map(|(f, a, b)| format!("{f}({a}, {b})")),
        ]
    })
}

/// Scalar problems with nonnegative coefficients and nondecreasing `f`.
fn monotone_problem() -> impl Strategy<Value = ProblemSpec> {
    (
        1.5f64..3.0,
        0usize..3,
        0.1f64..2.0,
        0.0f64..4.0,
        0.2f64..1.0,
        0.05f64..2.0,
    )
        .prop_map(|(p, extra_dim, c, gamma, q, beta)| {
            let n = p.ceil() as u32 + 1 + extra_dim as u32;
            ProblemSpec::from_sources(
                p,
                n,
                &[&format!("{c} * (1+r)^(-{gamma})")],
                None,
                &[&format!("u1^{q} + min(u1, 1)")],
                Some(beta),
            )
            .unwrap()
        })
}

fn small_grid() -> Arc<RadialGrid> {
    make_grid(4.0, 201, Grading::Uniform).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_reparses_to_the_same_tree(source in expression()) {
        let e = parse(&source, &["u1", "u2"]).unwrap();
        let again = parse(&e.to_string(), &["u1", "u2"]).unwrap();
        prop_assert_eq!(e.root(), again.root());
    }

    #[test]
    fn evaluation_is_deterministic_across_threads(source in expression(), x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let e = Arc::new(parse(&source, &["u1", "u2"]).unwrap());
        let here = e.eval_slice(&[x, y]).map(f64::to_bits).map_err(|err| err.to_string());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let e = e.clone();
                std::thread::spawn(move || e.eval_slice(&[x, y]).map(f64::to_bits).map_err(|err| err.to_string()))
            })
            .collect();
        for h in handles {
            prop_assert_eq!(&h.join().unwrap(), &here);
        }
    }

    #[test]
    fn iterates_increase_in_k_and_r(problem in monotone_problem()) {
        let grid = small_grid();
        let (_, _, history) = solve_radial_system_traced(&problem, &grid, &IterationConfig::default()).unwrap();
        prop_assert!(check_monotone_in_k(&history).is_none());
        for w in &history {
            prop_assert_eq!(w.first_decrease_in_r(), None);
            prop_assert_eq!(w.profile(0)[0], problem.beta());
        }
    }

    #[test]
    fn converged_residual_is_within_tolerance(problem in monotone_problem()) {
        let grid = small_grid();
        let config = IterationConfig::default();
        let (u, report) = solve_radial_system(&problem, &grid, &config).unwrap();
        prop_assume!(report.converged);
        let r = fixed_point_residual(&problem, &grid, &u).unwrap();
        prop_assert!(r.sup_fixed_point_residual <= 10.0 * (config.abs_tol + config.rel_tol * u.sup()));
    }

    #[test]
    fn system_is_dominated_by_the_scalar_majorant(
        c1 in 0.0f64..2.0, c2 in 0.0f64..2.0, g in 0.0f64..3.0, beta in 0.05f64..1.0, w in 0.0f64..1.0,
    ) {
        let a1 = format!("{c1} * (1+r)^(-{g})");
        let a2 = format!("{c2}");
        let f1 = format!("{w} * u1 + {} * u2", 1.0 - w);
        let problem = ProblemSpec::from_sources(2.0, 3, &[&a1, &a2], None, &[&f1, "sqrt(u1 * u2)"], Some(beta)).unwrap();
        let grid = make_grid(3.0, 201, Grading::Uniform).unwrap();
        let config = IterationConfig::default();
        let (_, _, history) = solve_radial_system_traced(&problem, &grid, &config).unwrap();
        let (z, _) = solve_auxiliary_scalar(&problem, &grid, &config).unwrap();
        for iterate in &history {
            for i in 0..2 {
                for (u, zk) in iterate.profile(i).iter().zip(z.values()) {
                    prop_assert!(*u <= zk + 1e-9, "u = {}, z = {}", u, zk);
                }
            }
        }
    }

    #[test]
    fn linear_problem_scales_with_beta(beta in 0.01f64..10.0) {
        let grid = make_grid(5.0, 501, Grading::Uniform).unwrap();
        let config = IterationConfig { abs_tol: 1e-300, rel_tol: 1e-12, ..IterationConfig::default() };
        let one = ProblemSpec::from_sources(2.0, 3, &["1"], None, &["u1"], Some(1.0)).unwrap();
        let scaled = one.with_beta(beta).unwrap();
        let (u1, _) = solve_radial_system(&one, &grid, &config).unwrap();
        let (ub, _) = solve_radial_system(&scaled, &grid, &config).unwrap();
        for (a, b) in u1.profile(0).iter().zip(ub.profile(0)) {
            prop_assert!((b - beta * a).abs() <= 1e-8 * beta * a);
        }
    }

    #[test]
    fn power_integrands_follow_the_p_integral(alpha in prop_oneof![-4.0f64..-1.1, -0.9f64..2.0]) {
        let h = parse(&format!("t^({alpha})"), &["t"]).unwrap();
        let v = classify_improper_integral(&h, 1.0, 33).unwrap();
        let expected = if alpha >= -1.0 { VerdictKind::Diverges } else { VerdictKind::ConvergesFinite };
        prop_assert_eq!(v.kind, expected);
    }
}

#[test]
fn classifier_oracle_on_fixed_exponents() {
    for alpha in [-3.0, -2.0, -1.5, -1.0, -0.5, 0.0, 1.0] {
        let h = parse(&format!("t^({alpha})"), &["t"]).unwrap();
        let v = classify_improper_integral(&h, 1.0, 33).unwrap();
        let expected = if alpha >= -1.0 {
            VerdictKind::Diverges
        } else {
            VerdictKind::ConvergesFinite
        };
        assert_eq!(v.kind, expected, "alpha = {alpha}");
    }
}

fn battery() -> Vec<Vec<plap_radial::Expression>> {
    (0..5)
        .map(|g| vec![parse(&format!("(1+r)^(-{g})"), &["r"]).unwrap()])
        .collect()
}

#[test]
fn bounded_and_unbounded_verdicts_never_co_fire() {
    for (gamma, a) in battery().iter().enumerate() {
        let no_bounded = check_condition_5b(a, 2.0).unwrap().diverges();
        for eps in [0.01, 0.1, 0.5, 1.0] {
            let bounded = check_condition_5(a, 2.0, eps).unwrap().converges();
            assert!(!(bounded && no_bounded), "gamma = {gamma}, eps = {eps}");
        }
    }
}

#[test]
fn condition_5_divergence_persists_for_larger_epsilon() {
    let eps = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0];
    for (gamma, a) in battery().iter().enumerate() {
        let diverges: Vec<bool> = eps
            .iter()
            .map(|&e| check_condition_5(a, 2.0, e).unwrap().diverges())
            .collect();
        if let Some(first) = diverges.iter().position(|&d| d) {
            assert!(
                diverges[first..].iter().all(|&d| d),
                "gamma = {gamma}: {diverges:?}"
            );
        }
    }
}

#[test]
fn growth_integral_implications_hold_on_a_wider_battery() {
    for p in [1.5, 2.0, 3.0] {
        for q in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
            for m in [1usize, 2] {
                let names: Vec<String> = (1..=m).map(|i| format!("u{i}")).collect();
                let vars: Vec<&str> = names.iter().map(String::as_str).collect();
                let fs: Vec<_> = (1..=m)
                    .map(|i| parse(&format!("u{i}^{q} + 0.5 * u{}^{q}", m + 1 - i), &vars).unwrap())
                    .collect();
                let c3 = check_c3(&fs, m, p).unwrap();
                if c3.diverges() {
                    for f in &fs {
                        assert!(
                            check_component_c3(f, m, p).unwrap().diverges(),
                            "p={p} q={q} m={m}"
                        );
                    }
                }
                if check_reciprocal_growth(&fs, m, p).unwrap().diverges() {
                    assert!(c3.diverges(), "p={p} q={q} m={m}");
                }
            }
        }
    }
}

fn linear_oracle() -> ProblemSpec {
    ProblemSpec::from_sources(2.0, 3, &["1"], None, &["u1"], Some(1.0)).unwrap()
}

#[test]
fn refinement_error_at_r_2_is_second_order() {
    let config = IterationConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-300,
        ..IterationConfig::default()
    };
    let exact = 2f64.sinh() / 2.0;
    let err = |points: usize| {
        let grid = make_grid(4.0, points, Grading::Uniform).unwrap();
        let (u, _) = solve_radial_system(&linear_oracle(), &grid, &config).unwrap();
        let k = (points - 1) / 2;
        assert_eq!(grid.nodes()[k], 2.0);
        (u.profile(0)[k] - exact).abs()
    };
    let ratio = err(201) / err(401);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn differential_residual_is_second_order() {
    let config = IterationConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-300,
        ..IterationConfig::default()
    };
    let residual = |points: usize| {
        let grid = make_grid(4.0, points, Grading::Uniform).unwrap();
        let (u, _) = solve_radial_system(&linear_oracle(), &grid, &config).unwrap();
        fixed_point_residual(&linear_oracle(), &grid, &u)
            .unwrap()
            .sup_ode_residual_interior
    };
    let ratio = residual(201) / residual(401);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sweeps_are_nondecreasing_in_the_radius() {
    let problems = [
        ProblemSpec::from_sources(2.0, 3, &["(1+r)^(-4)"], None, &["u1^0.5"], None).unwrap(),
        ProblemSpec::from_sources(3.0, 4, &["1"], None, &["u1"], Some(0.1)).unwrap(),
        ProblemSpec::from_sources(2.0, 3, &["exp(-r)"], None, &["u1^2"], Some(0.01)).unwrap(),
    ];
    for p in &problems {
        let g = classify_growth(p, 2.0, 101, 4, &IterationConfig::default()).unwrap();
        assert!(
            g.sup_values.windows(2).all(|w| w[1] >= w[0]),
            "{:?}",
            g.sup_values
        );
    }
}

#[test]
fn linear_oracle_is_never_saturating() {
    let g = classify_growth(&linear_oracle(), 2.0, 101, 4, &IterationConfig::default()).unwrap();
    assert!(
        matches!(g.classification, GrowthClass::Growing { .. }),
        "{:?}",
        g
    );
}
